"""Linear-dispersion codebooks built from a CodeSpec.

A codeword is ``X = sum_k f_k G_k`` where each complex coefficient
``f_k = a_k + zeta * b_k`` (zeta = i for QAM, w3 for HEX) has odd integer
coordinates in ``[-(M-1), M-1]``.  The integer coordinate vector is
``x = (a_1..a_K, b_1..b_K)``.  ``vec(X)`` is column-major (entry ``(r, c)`` at
index ``c*n_t + r``), and coefficient ``k = t*n + b`` multiplies basis element
``b`` in thread ``t`` (the thread ``l_t`` of the left regular matrix).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from math import log2

import numpy as np
from scipy.linalg import block_diag

from .cda import CodeSpec
from .cyclotomic import CyclotomicInt, reduction_matrix

__all__ = [
    "Constellation",
    "Codebook",
    "CodeMatrix",
    "left_regular_matrix",
    "build_codebook",
    "row_delete",
    "cartesian_product",
    "normalize",
    "max_energy",
]

W3 = complex(-0.5, np.sqrt(3) / 2)
VERTEX_LIMIT = 20


@dataclass(frozen=True)
class Constellation:
    kind: str
    M: int

    def __post_init__(self):
        if self.kind not in ("QAM", "HEX"):
            raise ValueError(f"unknown constellation {self.kind!r}")
        if self.M < 2 or self.M % 2:
            raise ValueError(f"M must be a positive even integer, got {self.M}")

    @property
    def zeta(self) -> complex:
        return 1j if self.kind == "QAM" else W3

    @property
    def levels(self) -> np.ndarray:
        return np.arange(-(self.M - 1), self.M, 2)

    def points(self) -> np.ndarray:
        a, b = np.meshgrid(self.levels, self.levels, indexing="ij")
        return (a + self.zeta * b).ravel()

    def __len__(self) -> int:
        return self.M * self.M

    def max_energy(self) -> float:
        return float(np.max(np.abs(self.points()) ** 2))

    def mean_energy(self) -> float:
        return float(np.mean(np.abs(self.points()) ** 2))


@dataclass(frozen=True)
class CodeMatrix:
    entries: np.ndarray
    coeffs: np.ndarray


def left_regular_matrix(spec: CodeSpec, ells) -> list[list[CyclotomicInt]]:
    """Exact matrix of left multiplication by ``sum_t z^t l_t``.

    Entry ``(i, j)`` is ``sigma^j(l_{(i-j) mod n})``, times gamma when ``i < j``.
    When gamma is a ratio ``g/d`` the whole matrix is scaled by ``d`` so that
    every entry stays integral.
    """
    n, N = spec.n, spec.conductor
    if len(ells) != n:
        raise ValueError(f"expected {n} elements, got {len(ells)}")
    ells = [CyclotomicInt.coerce(x, N) for x in ells]
    g = spec.gamma_cyc()
    d = spec.gamma_den_cyc()
    scaled = spec.gamma_den is not None
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            v = ells[(i - j) % n].apply(spec.sigma_power(j))
            if i < j:
                v = g * v
            elif scaled:
                v = d * v
            row.append(v)
        out.append(row)
    return out


@dataclass(frozen=True)
class Codebook:
    """Linear code ``vec(X) = generator @ f`` over a QAM or HEX constellation.

    ``exact`` holds, for each integer coordinate, the full-basis cyclotomic
    entries of the square parent matrix (shape ``(2K, n, n, N)``); it is
    ``None`` for cartesian products.
    """

    spec: CodeSpec | None
    constellation: Constellation
    n_t: int
    T: int
    generator: np.ndarray
    shape: str = "square"
    parent: "Codebook | None" = field(default=None, repr=False)
    exact: np.ndarray | None = field(default=None, repr=False)
    exact_scale: complex = 1.0
    e_max: float = 0.0
    e_max_exact: bool = True

    @property
    def K(self) -> int:
        return self.generator.shape[1]

    @property
    def M(self) -> int:
        return self.constellation.M

    @property
    def zeta(self) -> complex:
        return self.constellation.zeta

    @property
    def real_generator(self) -> np.ndarray:
        """Complex ``(n_t*T, 2K)`` map from integer coordinates to ``vec(X)``."""
        return np.hstack([self.generator, self.zeta * self.generator])

    @property
    def size(self) -> int:
        return self.M ** (2 * self.K)

    def __len__(self) -> int:
        return self.size

    @property
    def rate_bpcu(self) -> float:
        return 2 * self.K * log2(self.M) / self.T

    def matrix(self, coords) -> np.ndarray:
        """``n_t x T`` matrix for integer coordinates (any integers, not only odd)."""
        v = self.real_generator @ np.asarray(coords, dtype=float)
        return v.reshape(self.T, self.n_t).T

    def matrices(self, coords: np.ndarray) -> np.ndarray:
        v = np.asarray(coords, dtype=float) @ self.real_generator.T
        return v.reshape(-1, self.T, self.n_t).transpose(0, 2, 1)

    def index_to_coords(self, k: int) -> np.ndarray:
        if not 0 <= k < self.size:
            raise IndexError(k)
        digits = np.array([(k // self.M**j) % self.M for j in range(2 * self.K)], dtype=np.int64)
        return 2 * digits - (self.M - 1)

    def codeword(self, k: int) -> CodeMatrix:
        c = self.index_to_coords(k)
        return CodeMatrix(self.matrix(c), c)

    def all_coords(self) -> np.ndarray:
        lv = self.constellation.levels
        grid = np.array(list(itertools.product(lv, repeat=2 * self.K)), dtype=np.int64)
        return grid[:, ::-1]

    def exact_matrix(self, coords) -> list[list[CyclotomicInt]]:
        """Exact (scaled) square-parent matrix for integer coordinates."""
        ex = self._exact_source()
        N = ex.shape[-1]
        full = np.tensordot(np.asarray(coords, dtype=np.int64), ex, axes=1)
        n = full.shape[0]
        return [[CyclotomicInt(N, full[i, j]) for j in range(n)] for i in range(n)]

    def exact_reduced(self, coords: np.ndarray) -> np.ndarray:
        """Canonical coordinates ``(B, n, n, phi)`` of parent matrices for a batch of coordinates."""
        ex = self._exact_source()
        N = ex.shape[-1]
        R = reduction_matrix(N)
        exr = ex @ R  # (2K, n, n, phi)
        coords = np.asarray(coords, dtype=np.int64)
        return np.tensordot(coords, exr, axes=1)

    def _exact_source(self) -> np.ndarray:
        book = self
        while book.exact is None and book.parent is not None:
            book = book.parent
        if book.exact is None:
            raise ValueError("no exact square parent available for this codebook")
        return book.exact

    @property
    def square_parent(self) -> "Codebook":
        book = self
        while book.parent is not None:
            book = book.parent
        return book

    def to_json(self) -> dict:
        g = self.generator
        return {
            "spec": None if self.spec is None else self.spec.to_json(),
            "M": self.M,
            "constellation": self.constellation.kind,
            "n_t": self.n_t,
            "T": self.T,
            "shape": self.shape,
            "generator": [[[float(z.real), float(z.imag)] for z in row] for row in g],
            "theta_rule": "theta = sqrt(T*snr/E_max)",
            "E_max": self.e_max,
            "E_max_exact": self.e_max_exact,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _exact_generator(spec: CodeSpec, zeta_cyc: CyclotomicInt) -> np.ndarray:
    n, N = spec.n, spec.conductor
    K = n * n
    ex = np.zeros((2 * K, n, n, N), dtype=np.int64)
    g = spec.gamma_cyc()
    d = spec.gamma_den_cyc()
    scaled = spec.gamma_den is not None
    for t in range(n):
        for b in range(n):
            k = t * n + b
            for j in range(n):
                i = (t + j) % n
                v = spec.basis[b].apply(spec.sigma_power(j))
                if i < j:
                    v = g * v
                elif scaled:
                    v = d * v
                ex[k, i, j] = v.compact().coeffs.astype(np.int64)
                ex[K + k, i, j] = (zeta_cyc * v).compact().coeffs.astype(np.int64)
    return ex


def _complex_generator(spec: CodeSpec) -> np.ndarray:
    n = spec.n
    B = spec.basis_complex()  # B[j, b] = sigma^j(beta_b)
    gamma = spec.gamma_complex()
    G = np.zeros((n * n, n * n), dtype=complex)
    for t in range(n):
        for b in range(n):
            k = t * n + b
            for j in range(n):
                i = (t + j) % n
                G[j * n + i, k] = B[j, b] * (gamma if i < j else 1.0)
    return G


def max_energy(real_gen: np.ndarray, M: int) -> tuple[float, bool]:
    """Largest ``||X||_F^2`` over the box of odd coordinates.

    The energy is a convex quadratic, so the maximum sits at a vertex.  Exact
    vertex enumeration when the coordinate count is at most 20, otherwise the
    bound ``(M-1)^2 * sum |Q_ij|``.  Returns ``(value, exact)``.
    """
    Q = np.real(real_gen.conj().T @ real_gen)
    d = Q.shape[0]
    a = M - 1
    if d <= VERTEX_LIMIT:
        best = 0.0
        # fix the first sign: x and -x give the same energy
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=max(d - 1, 0))))
        signs = np.hstack([np.ones((len(signs), 1)), signs]) if d else signs
        for start in range(0, len(signs), 1 << 16):
            s = signs[start : start + (1 << 16)]
            e = np.einsum("ij,jk,ik->i", s, Q, s)
            best = max(best, float(e.max()))
        return best * a * a, True
    return float(np.abs(Q).sum()) * a * a, False


def build_codebook(spec: CodeSpec, M: int, T: int | None = None) -> Codebook:
    """Square ``n x n`` codebook of the algebra over the matching constellation."""
    if M % 2 or M < 2:
        raise ValueError(f"M must be a positive even integer, got {M}")
    n = spec.n
    if T is not None and T != n:
        raise ValueError("square books have T = n; use row_delete or cartesian_product otherwise")
    cons = Constellation(spec.base, M)
    zeta_cyc = CyclotomicInt.omega(spec.conductor, spec.conductor // (4 if spec.base == "QAM" else 3))
    G = _complex_generator(spec)
    ex = _exact_generator(spec, zeta_cyc)
    scale = complex(spec.gamma_den) ** n if spec.gamma_den is not None else 1.0
    book = Codebook(spec, cons, n, n, G, exact=ex, exact_scale=scale)
    e, exact = max_energy(book.real_generator, M)
    return replace(book, e_max=e, e_max_exact=exact)


def row_delete(book: Codebook, rows) -> Codebook:
    """Drop the given rows from every codeword; size and T are unchanged."""
    rows = sorted(set(int(r) for r in rows))
    if any(r < 0 or r >= book.n_t for r in rows):
        raise ValueError(f"rows must lie in 0..{book.n_t - 1}")
    if len(rows) >= book.n_t:
        raise ValueError("cannot delete every row")
    if not rows:
        return book
    keep = [c * book.n_t + r for c in range(book.T) for r in range(book.n_t) if r not in rows]
    G = book.generator[keep]
    new = Codebook(book.spec, book.constellation, book.n_t - len(rows), book.T, G,
                   shape=f"row_deleted({','.join(map(str, rows))})", parent=book,
                   exact_scale=book.exact_scale)
    e, exact = max_energy(new.real_generator, new.M)
    return replace(new, e_max=e, e_max_exact=exact)


def cartesian_product(books) -> Codebook:
    """Horizontal concatenation ``[Z1 Z2 ...]`` with independent coefficients per block."""
    books = list(books)
    if not books:
        raise ValueError("need at least one codebook")
    if len(books) == 1:
        return books[0]
    n_t = books[0].n_t
    if any(b.n_t != n_t for b in books):
        raise ValueError("all parts must share n_t")
    if any(b.constellation != books[0].constellation for b in books):
        raise ValueError("all parts must share the constellation")
    G = block_diag(*[b.generator for b in books])
    T = sum(b.T for b in books)
    shape = "cartesian(" + ",".join(b.shape for b in books) + ")"
    new = Codebook(None, books[0].constellation, n_t, T, G, shape=shape)
    e = sum(b.e_max for b in books)
    return replace(new, e_max=e, e_max_exact=all(b.e_max_exact for b in books))


def normalize(book: Codebook, snr: float) -> float:
    """``theta`` with ``theta^2 * max ||X||_F^2 = T * snr``."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    return float(np.sqrt(book.T * snr / book.e_max))
