"""Elementary number theory used by the code constructions.

Everything here works on plain Python integers, so results are exact at any
size; the guaranteed operating range for :func:`factor` is ``n <= 10**12``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt, prod
from typing import Callable, Sequence

__all__ = [
    "Factorization",
    "GaussianInt",
    "EisensteinInt",
    "is_prime",
    "factor",
    "euler_phi",
    "multiplicative_order",
    "primitive_root_mod_prime_power",
    "is_primitive_root",
    "smallest_inert_prime_power",
    "crt",
    "prime_in_progression",
    "smallest_prime_where",
    "sqrt_mod_prime",
    "split_in_gaussian_integers",
    "split_in_eisenstein_integers",
    "unit_group_is_cyclic",
    "split_two_part",
]

# Deterministic for n < 3.317e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_PROGRESSION_CAP = 10**7


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class Factorization:
    """Prime factorization ``value = prod(p**e for p, e in factors)``."""

    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if prod(p**e for p, e in self.factors) != self.value:
            raise ValueError("factors do not multiply to value")
        primes = [p for p, _ in self.factors]
        if primes != sorted(set(primes)):
            raise ValueError("primes must be strictly increasing")

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)

    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)

    def exponent(self, p: int) -> int:
        return self.as_dict().get(p, 0)


@lru_cache(maxsize=4096)
def factor(n: int) -> Factorization:
    """Factor ``n >= 1`` by trial division."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out = []
    m = n
    for p in (2, 3):
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        if e:
            out.append((p, e))
    p = 5
    step = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += step
        step = 6 - step
    if m > 1:
        out.append((m, 1))
    return Factorization(n, tuple(out))


def euler_phi(n: int) -> int:
    if n < 1:
        raise ValueError(f"phi undefined for {n}")
    result = n
    for p, _ in factor(n):
        result = result // p * (p - 1)
    return result


def multiplicative_order(a: int, m: int) -> int:
    """Least ``f >= 1`` with ``a**f == 1 (mod m)``."""
    if m < 2:
        raise ValueError("modulus must be at least 2")
    a %= m
    if gcd(a, m) != 1:
        raise ValueError(f"{a} is not a unit modulo {m}")
    order = euler_phi(m)
    for p, e in factor(order):
        for _ in range(e):
            if pow(a, order // p, m) == 1:
                order //= p
            else:
                break
    return order


def is_primitive_root(a: int, m: int) -> bool:
    return gcd(a, m) == 1 and multiplicative_order(a, m) == euler_phi(m)


def primitive_root_mod_prime_power(p: int, e: int = 1) -> int:
    """Smallest generator of the cyclic group of units modulo ``p**e`` (``p`` odd)."""
    if p == 2 or not is_prime(p):
        raise ValueError(f"{p} is not an odd prime")
    if e < 1:
        raise ValueError("exponent must be positive")
    m = p**e
    for rho in range(2, m):
        if is_primitive_root(rho, m):
            return rho
    raise AssertionError("unreachable: units mod an odd prime power are cyclic")


def _prime_power_base(m: int) -> tuple[int, int] | None:
    f = factor(m).factors
    if len(f) == 1:
        return f[0]
    return None


def smallest_inert_prime_power(n1: int) -> tuple[int, int] | None:
    """Smallest odd prime power ``p**e`` (by value) with ``n1 | phi(p**e)``.

    Returns ``None`` for ``n1 == 1``: no odd-degree layer is needed then.
    """
    if n1 < 1 or n1 % 2 == 0:
        raise ValueError("n1 must be a positive odd integer")
    if n1 == 1:
        return None
    m = 3
    while True:
        pe = _prime_power_base(m)
        if pe is not None and euler_phi(m) % n1 == 0:
            return pe
        m += 2


def crt(residues: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Combine ``x = a_j (mod m_j)`` for pairwise coprime moduli into ``(a, M)``."""
    a, M = 0, 1
    for aj, mj in residues:
        if mj < 1:
            raise ValueError("moduli must be positive")
        if gcd(M, mj) != 1:
            raise ValueError("moduli must be pairwise coprime")
        # x = a + M*t with M*t = aj - a (mod mj)
        t = (aj - a) * pow(M, -1, mj) % mj if mj > 1 else 0
        a = a + M * t
        M *= mj
        a %= M
    return a, M


def prime_in_progression(residues: Sequence[tuple[int, int]], cap: int = _PROGRESSION_CAP) -> int:
    """Smallest prime satisfying every congruence ``q = a_j (mod m_j)``."""
    for aj, mj in residues:
        if gcd(aj, mj) != 1:
            raise ValueError(f"{aj} is not coprime to {mj}")
    a, M = crt(residues)
    q = a
    for _ in range(cap):
        if is_prime(q):
            return q
        q += M
    raise RuntimeError(f"no prime found in {a} mod {M} within {cap} candidates")


def smallest_prime_where(
    modulus: int,
    residue: int,
    predicate: Callable[[int], bool],
    cap: int = _PROGRESSION_CAP,
) -> int:
    """Smallest prime ``q = residue (mod modulus)`` for which ``predicate(q)`` holds.

    Used when the admissible residues modulo an odd prime power are a whole
    set (every generator) rather than one class; scanning the coarse class in
    ascending order and filtering is the same as taking the minimum of
    :func:`prime_in_progression` over the set.
    """
    q = residue % modulus
    for _ in range(cap):
        if is_prime(q) and predicate(q):
            return q
        q += modulus
    raise RuntimeError(f"no admissible prime in {residue} mod {modulus} within {cap} candidates")


def sqrt_mod_prime(a: int, p: int) -> int:
    """Tonelli-Shanks square root of ``a`` modulo an odd prime ``p``."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        raise ValueError(f"{a} is not a square modulo {p}")
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def _cornacchia(d: int, m: int) -> tuple[int, int]:
    """Solve ``x**2 + d*y**2 = m`` for prime ``m``."""
    r0 = sqrt_mod_prime(-d, m)
    if 2 * r0 < m:
        r0 = m - r0
    a, b = m, r0
    bound = isqrt(m)
    while b > bound:
        a, b = b, a % b
    rest = m - b * b
    if rest % d:
        raise ValueError(f"{m} is not of the form x^2 + {d} y^2")
    y = isqrt(rest // d)
    if y * y * d != rest:
        raise ValueError(f"{m} is not of the form x^2 + {d} y^2")
    return b, y


@dataclass(frozen=True)
class GaussianInt:
    """Element ``re + im*i`` of Z[i]."""

    re: int
    im: int = 0

    def __add__(self, other):
        o = _as_gauss(other)
        return GaussianInt(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_gauss(other)
        return GaussianInt(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return _as_gauss(other) - self

    def __neg__(self):
        return GaussianInt(-self.re, -self.im)

    def __mul__(self, other):
        o = _as_gauss(other)
        return GaussianInt(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not in Z[i]")
        out, base = GaussianInt(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> "GaussianInt":
        return GaussianInt(self.re, -self.im)

    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(self.re, self.im)

    def __abs__(self):
        return abs(complex(self))

    def associates(self) -> list["GaussianInt"]:
        units = (GaussianInt(1), GaussianInt(0, 1), GaussianInt(-1), GaussianInt(0, -1))
        return [u * self for u in units]

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        return f"{self.re}{sign}{'' if mag == 1 else mag}i"

    def to_list(self) -> list[int]:
        return [self.re, self.im]


def _as_gauss(x) -> GaussianInt:
    if isinstance(x, GaussianInt):
        return x
    if isinstance(x, int):
        return GaussianInt(x, 0)
    return NotImplemented


@dataclass(frozen=True)
class EisensteinInt:
    """Element ``a + c*w`` of Z[w] with ``w = exp(2*pi*i/3)``."""

    a: int
    c: int = 0

    def __add__(self, other):
        o = _as_eis(other)
        return EisensteinInt(self.a + o.a, self.c + o.c)

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_eis(other)
        return EisensteinInt(self.a - o.a, self.c - o.c)

    def __rsub__(self, other):
        return _as_eis(other) - self

    def __neg__(self):
        return EisensteinInt(-self.a, -self.c)

    def __mul__(self, other):
        o = _as_eis(other)
        # w^2 = -1 - w
        return EisensteinInt(
            self.a * o.a - self.c * o.c,
            self.a * o.c + self.c * o.a - self.c * o.c,
        )

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not in Z[w]")
        out, base = EisensteinInt(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conj(self) -> "EisensteinInt":
        return EisensteinInt(self.a - self.c, -self.c)

    def norm(self) -> int:
        return self.a * self.a - self.a * self.c + self.c * self.c

    def __complex__(self):
        return complex(self.a - self.c / 2, self.c * 3**0.5 / 2)

    def __abs__(self):
        return abs(complex(self))

    def associates(self) -> list["EisensteinInt"]:
        w = EisensteinInt(0, 1)
        units = [EisensteinInt(1), w, w * w]
        units += [-u for u in units]
        return [u * self for u in units]

    def __str__(self):
        if self.c == 0:
            return str(self.a)
        sign = "+" if self.c > 0 else "-"
        mag = abs(self.c)
        return f"{self.a}{sign}{'' if mag == 1 else mag}w3"

    def to_list(self) -> list[int]:
        return [self.a, self.c]


def _as_eis(x) -> EisensteinInt:
    if isinstance(x, EisensteinInt):
        return x
    if isinstance(x, int):
        return EisensteinInt(x, 0)
    return NotImplemented


def split_in_gaussian_integers(q: int) -> GaussianInt:
    """Gaussian prime ``a+bi`` of norm ``q``, normalized to ``a > b > 0``."""
    if q % 4 != 1 or not is_prime(q):
        raise ValueError(f"{q} is not a prime congruent to 1 mod 4")
    x, y = _cornacchia(1, q)
    a, b = max(x, y), min(x, y)
    return GaussianInt(a, b)


def split_in_eisenstein_integers(q: int) -> EisensteinInt:
    """Eisenstein prime ``a + c*w`` of norm ``q``.

    Of the twelve associates and conjugates, the one with ``a > c > 0`` and
    the smallest ``c`` is returned.
    """
    if q % 3 != 1 or not is_prime(q):
        raise ValueError(f"{q} is not a prime congruent to 1 mod 3")
    x, y = _cornacchia(3, q)
    # x + y*sqrt(-3) = (x + y) + 2y*w
    pi = EisensteinInt(x + y, 2 * y)
    cands = [z for base in (pi, pi.conj()) for z in base.associates() if z.a > z.c > 0]
    return min(cands, key=lambda z: (z.c, z.a))


def unit_group_is_cyclic(m: int) -> bool:
    """Decide cyclicity of (Z/m)^* by comparing the largest element order to phi(m)."""
    if m <= 2:
        return True
    phi = euler_phi(m)
    return any(gcd(a, m) == 1 and multiplicative_order(a, m) == phi for a in range(2, m))


def split_two_part(n: int) -> tuple[int, int]:
    """Write ``n = 2**e0 * n1`` with ``n1`` odd; returns ``(e0, n1)``."""
    if n < 1:
        raise ValueError("n must be positive")
    e0 = 0
    while n % 2 == 0:
        n //= 2
        e0 += 1
    return e0, n
