"""Cyclic-division-algebra space-time codes with the non-vanishing determinant property."""

__version__ = "0.1.0"
