"""Cyclic division algebra specifications: Constructions A, B, HEX and the 3x3 perfect code.

Every field in play is a subfield of some cyclotomic field Q(w_N).  A subfield
is described by its stabilizer ``S``, a subgroup of (Z/N)^*, and the Galois
group Gal(L/F) is the quotient of the stabilizer of the center F by ``S``.
The center is Q(i) (stabilizer ``k = 1 mod 4``) or Q(w3) (``k = 1 mod 3``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd, lcm
from typing import Sequence

import numpy as np

from .cyclotomic import (
    CyclotomicInt,
    GaloisAuto,
    batch_galois_reduced,
    batch_mul,
    index_subgroup,
    subgroup_trace,
)
from .numtheory import (
    EisensteinInt,
    GaussianInt,
    factor,
    is_prime,
    is_primitive_root,
    multiplicative_order,
    primitive_root_mod_prime_power,
    smallest_inert_prime_power,
    smallest_prime_where,
    split_in_eisenstein_integers,
    split_in_gaussian_integers,
    split_two_part,
)

__all__ = [
    "CodeSpec",
    "UnsupportedCase",
    "NonNormReport",
    "construct",
    "construct_A",
    "construct_B",
    "construct_HEX",
    "perfect_3x3_spec",
    "table_q_A",
    "table_q_B",
    "verify_non_norm",
    "relative_norm",
]

METHODS = ("A", "B", "HEX", "perfect3x3")


class UnsupportedCase(ValueError):
    """Raised for parameter combinations a construction does not cover."""


def _units(N: int) -> list[int]:
    return [k for k in range(N) if gcd(k, N) == 1] if N > 1 else [0]


def _center_modulus(base: str) -> int:
    return 4 if base == "QAM" else 3


def _stabilizer(N: int, conditions: Sequence[tuple[int, Sequence[int]]]) -> tuple[int, ...]:
    """Units ``k`` mod N whose residue mod each ``m`` lies in the allowed set."""
    allowed = [(m, {a % m for a in A}) for m, A in conditions]
    return tuple(k for k in _units(N) if all(k % m in A for m, A in allowed))


def _order_mod_subgroup(k: int, N: int, S: frozenset[int]) -> int:
    if N == 1:
        return 1
    t, x = 1, k % N
    while x not in S:
        x = x * k % N
        t += 1
    return t


@dataclass(frozen=True)
class CodeSpec:
    """Data of a cyclic division algebra D(L/F, sigma, gamma) with L inside Q(w_N).

    ``gamma`` may be a ratio ``gamma / gamma_den`` (the perfect 3x3 code uses a
    unit-magnitude ratio); ``gamma_den`` is ``None`` otherwise.
    """

    n: int
    base: str
    conductor: int
    sigma_exponent: int
    gamma: GaussianInt | EisensteinInt
    basis: tuple[CyclotomicInt, ...]
    q: int | None
    provenance: str
    gamma_den: GaussianInt | EisensteinInt | None = None
    prime_power: tuple[int, int] | None = None
    stabilizer: tuple[int, ...] = (1,)
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.base not in ("QAM", "HEX"):
            raise ValueError(f"unknown base {self.base!r}")
        if len(self.basis) != self.n:
            raise ValueError(f"need {self.n} basis elements, got {len(self.basis)}")
        if any(b.conductor != self.conductor for b in self.basis):
            raise ValueError("basis elements must live in the ambient conductor")

    @property
    def ring(self) -> str:
        return "Z[i]" if self.base == "QAM" else "Z[w3]"

    @property
    def sigma(self) -> GaloisAuto:
        return GaloisAuto(self.conductor, self.sigma_exponent)

    def sigma_power(self, j: int) -> int:
        return pow(self.sigma_exponent, j, self.conductor) if self.conductor > 1 else 0

    def gamma_cyc(self) -> CyclotomicInt:
        return _ring_elem(self.gamma, self.conductor)

    def gamma_den_cyc(self) -> CyclotomicInt:
        if self.gamma_den is None:
            return CyclotomicInt.one(self.conductor)
        return _ring_elem(self.gamma_den, self.conductor)

    def gamma_complex(self) -> complex:
        g = complex(self.gamma)
        return g / complex(self.gamma_den) if self.gamma_den is not None else g

    def basis_complex(self) -> np.ndarray:
        """``out[j, b] = sigma^j(beta_b)`` under the fixed embedding."""
        out = np.empty((self.n, self.n), dtype=complex)
        for j in range(self.n):
            k = self.sigma_power(j)
            for b, beta in enumerate(self.basis):
                out[j, b] = complex(beta.apply(k))
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "base": self.base,
            "conductor": self.conductor,
            "sigma_exponent": self.sigma_exponent,
            "gamma": self.gamma.to_list(),
            "gamma_den": None if self.gamma_den is None else self.gamma_den.to_list(),
            "basis": [b.to_json()["coeffs"] for b in self.basis],
            "q": self.q,
            "provenance": self.provenance,
            "prime_power": None if self.prime_power is None else list(self.prime_power),
            "stabilizer": list(self.stabilizer),
            "notes": list(self.notes),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, d: dict) -> "CodeSpec":
        mk = GaussianInt if d["base"] == "QAM" else EisensteinInt
        N = d["conductor"]
        return cls(
            n=d["n"],
            base=d["base"],
            conductor=N,
            sigma_exponent=d["sigma_exponent"],
            gamma=mk(*d["gamma"]),
            gamma_den=None if d.get("gamma_den") is None else mk(*d["gamma_den"]),
            basis=tuple(CyclotomicInt.from_json({"conductor": N, "coeffs": c}) for c in d["basis"]),
            q=d["q"],
            provenance=d["provenance"],
            prime_power=None if d.get("prime_power") is None else tuple(d["prime_power"]),
            stabilizer=tuple(d.get("stabilizer", (1,))),
            notes=tuple(d.get("notes", ())),
        )


def _ring_elem(z, N: int) -> CyclotomicInt:
    if isinstance(z, GaussianInt):
        return CyclotomicInt.from_gaussian(z, N)
    return CyclotomicInt.from_eisenstein(z, N)


# -- prime selection -----------------------------------------------------------


def table_q_A(n: int) -> tuple[tuple[int, int] | None, int]:
    """``(p^e, q)`` for Construction A.

    ``q`` is the smallest prime that is ``5 mod 2^(e0+2)`` and a generator of
    the units modulo ``p^e``.
    """
    e0, n1 = split_two_part(n)
    pe = smallest_inert_prime_power(n1)
    mod2 = 2 ** (e0 + 2)
    if pe is None:
        return None, smallest_prime_where(mod2, 5, lambda q: True)
    m = pe[0] ** pe[1]
    return pe, smallest_prime_where(mod2, 5, lambda q: is_primitive_root(q % m, m))


def _b_moduli(n: int) -> tuple[int, list[int]]:
    e0, n1 = split_two_part(n)
    odd = [p ** (e + 1) for p, e in factor(n1)]
    return e0, odd


def table_q_B(n: int) -> int:
    """Smallest prime ``5 mod 2^(e0+2)`` generating the units modulo every ``p_i^(e_i+1)``."""
    e0, odd = _b_moduli(n)
    return smallest_prime_where(
        2 ** (e0 + 2), 5, lambda q: all(is_primitive_root(q % m, m) for m in odd)
    )


def _hex_q(N: int, S: tuple[int, ...], n: int, pe: tuple[int, int] | None) -> int:
    # q = 1 mod 3, q = 3 mod 4, q a generator modulo p^e.  For p = 3 no
    # generator is 1 mod 3; there inertness is tested directly instead.
    Sset = frozenset(S)

    def ok(q: int) -> bool:
        if N % q == 0:
            return False
        if pe is None:
            return True
        p, e = pe
        m = p**e
        if p != 3:
            return is_primitive_root(q % m, m)
        return _order_mod_subgroup(q, N, Sset) == n

    return smallest_prime_where(12, 7, ok)


# -- field data ----------------------------------------------------------------


def _choose_sigma(N: int, S: tuple[int, ...], center_mod: int, n: int) -> int:
    """Smallest unit fixing the center whose image generates Gal(L/F) (order n mod S)."""
    if n == 1:
        return 1 % N if N > 1 else 0
    Sset = frozenset(S)
    for k in _units(N):
        if k % center_mod == 1 and _order_mod_subgroup(k, N, Sset) == n:
            return k
    raise AssertionError(f"Gal(L/F) is not cyclic of order {n}")


def _relative_degree(N: int, S: tuple[int, ...], center_mod: int) -> int:
    fixing_center = sum(1 for k in _units(N) if k % center_mod == 1)
    return fixing_center // len(S)


def _odd_factor_basis(p: int, e: int, index: int, N: int) -> list[CyclotomicInt]:
    """Basis over Q of the degree-``index`` subfield K of Q(w_{p^e}).

    Candidates are the subgroup traces of ``w^a``: first the conjugate Gauss
    periods, then 1, then traces of non-primitive powers.  Periods alone span
    K only when ``e = 1``; for higher powers their sum and other character
    sums vanish, so the greedy pass tops up from the remaining traces.
    """
    m = p**e
    H = index_subgroup(p, e, index)
    rho = primitive_root_mod_prime_power(p, e)
    cands = [subgroup_trace(m, H, pow(rho, j, m)) for j in range(index)]
    cands.append(CyclotomicInt.one(m))
    cands += [subgroup_trace(m, H, a) for a in range(1, m) if a % p == 0]
    chosen: list[CyclotomicInt] = []
    rows: list[tuple[int, ...]] = []
    for x in cands:
        trial = rows + [x.reduced()]
        if np.linalg.matrix_rank(np.array(trial, dtype=float)) == len(trial):
            chosen.append(x)
            rows = trial
            if len(chosen) == index:
                return [y.lift(N) for y in chosen]
    raise AssertionError("subgroup traces do not span the fixed field")


def _tensor(parts: Sequence[Sequence[CyclotomicInt]], N: int) -> tuple[CyclotomicInt, ...]:
    out = [CyclotomicInt.one(N)]
    for part in parts:
        out = [a * b.lift(N) for a in out for b in part]
    return tuple(out)


def _trivial(base: str, provenance: str) -> CodeSpec:
    N = 4 if base == "QAM" else 3
    one = GaussianInt(1, 0) if base == "QAM" else EisensteinInt(1, 0)
    return CodeSpec(
        n=1, base=base, conductor=N, sigma_exponent=1, gamma=one,
        basis=(CyclotomicInt.one(N),), q=None, provenance=provenance, stabilizer=(1,),
        notes=("degree-1 algebra: the code is plain scalar QAM/HEX",),
    )


def construct_A(n: int) -> CodeSpec:
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return _trivial("QAM", "A")
    e0, n1 = split_two_part(n)
    pe, q = table_q_A(n)
    m2 = 2 ** (e0 + 2)
    if pe is None:
        N = m2
        S = _stabilizer(N, [(m2, [1])])
        parts = []
    else:
        p, e = pe
        m = p**e
        N = lcm(m, m2)
        H = index_subgroup(p, e, n1)
        S = _stabilizer(N, [(m, H), (m2, [1])])
        parts = [_odd_factor_basis(p, e, n1, N)]
    parts.append([CyclotomicInt.omega(m2, b) for b in range(2**e0)])
    return _finish(n, "QAM", N, S, q, split_in_gaussian_integers(q), parts, "A", pe)


def construct_B(n: int) -> CodeSpec:
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return _trivial("QAM", "B")
    e0, n1 = split_two_part(n)
    m2 = 2 ** (e0 + 2)
    fac = list(factor(n1))
    N = m2
    conds: list[tuple[int, Sequence[int]]] = [(m2, [1])]
    parts = []
    for p, e in fac:
        m = p ** (e + 1)
        N = lcm(N, m)
        conds.append((m, index_subgroup(p, e + 1, p**e)))
    for p, e in fac:
        parts.append(_odd_factor_basis(p, e + 1, p**e, N))
    parts.append([CyclotomicInt.omega(m2, b) for b in range(2**e0)])
    S = _stabilizer(N, conds)
    q = table_q_B(n)
    return _finish(n, "QAM", N, S, q, split_in_gaussian_integers(q), parts, "B", None)


def construct_HEX(n: int) -> CodeSpec:
    if n < 1:
        raise ValueError("n must be positive")
    if n % 4 == 0:
        raise UnsupportedCase(f"HEX construction covers n not divisible by 4; got n={n}")
    if n == 1:
        return _trivial("HEX", "HEX")
    e0, n1 = split_two_part(n)
    pe = smallest_inert_prime_power(n1)
    N = 12 if e0 == 1 else 3
    conds: list[tuple[int, Sequence[int]]] = [(3, [1])]
    if e0 == 1:
        conds.append((4, [1]))
    parts = []
    if pe is not None:
        p, e = pe
        m = p**e
        N = lcm(N, m)
        conds.append((m, index_subgroup(p, e, n1)))
        parts.append(_odd_factor_basis(p, e, n1, N))
    if e0 == 1:
        parts.append([CyclotomicInt.one(4), CyclotomicInt.omega(4)])
    S = _stabilizer(N, conds)
    q = _hex_q(N, S, n, pe)
    return _finish(n, "HEX", N, S, q, split_in_eisenstein_integers(q), parts, "HEX", pe)


def _finish(n, base, N, S, q, gamma, parts, provenance, pe) -> CodeSpec:
    center = _center_modulus(base)
    deg = _relative_degree(N, S, center)
    if deg != n:
        raise AssertionError(f"[L:F] = {deg}, expected {n}")
    sigma = _choose_sigma(N, S, center, n)
    basis = _tensor(parts, N)
    return CodeSpec(
        n=n, base=base, conductor=N, sigma_exponent=sigma, gamma=gamma, basis=basis,
        q=q, provenance=provenance, prime_power=pe, stabilizer=S,
    )


def perfect_3x3_spec() -> CodeSpec:
    """The 3x3 perfect code: L = Q(i, w7 + w7^-1), sigma: w7 -> w7^3, gamma = (2+i)/(1+2i)."""
    N = 28
    w = CyclotomicInt.omega(7)
    y = w**4 * (1 - w) * (1 - w) * (1 - w**3) * (1 - w**2)
    x = y + y.apply(6)
    x = x.lift(N)
    sigma = 17  # 17 = 1 mod 4, 17 = 3 mod 7
    basis = (x, x.apply(sigma), x.apply(sigma * sigma % N))
    S = _stabilizer(N, [(4, [1]), (7, [1, 6])])
    return CodeSpec(
        n=3, base="QAM", conductor=N, sigma_exponent=sigma, gamma=GaussianInt(2, 1),
        gamma_den=GaussianInt(1, 2), basis=basis, q=5, provenance="perfect3x3",
        prime_power=(7, 1), stabilizer=S,
    )


def construct(n: int, method: str) -> CodeSpec:
    if method == "A":
        return construct_A(n)
    if method == "B":
        return construct_B(n)
    if method == "HEX":
        return construct_HEX(n)
    if method == "perfect3x3":
        if n != 3:
            raise UnsupportedCase("the perfect code is defined for n=3 only")
        return perfect_3x3_spec()
    raise ValueError(f"unknown method {method!r}")


# -- non-norm evidence ---------------------------------------------------------


def relative_norm(spec: CodeSpec, u: CyclotomicInt) -> CyclotomicInt:
    """``prod_j sigma^j(u)``, which lies in the center."""
    u = u.lift(spec.conductor)
    out = u
    for j in range(1, spec.n):
        out = out * u.apply(spec.sigma_power(j))
    return out


@dataclass
class NonNormReport:
    t: int
    q: int | None
    order_of_q: int | None
    residue_degree_center: int | None
    inert: bool
    samples: int
    seed: int
    counterexample: list[int] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.inert and self.counterexample is None

    def to_json(self) -> dict:
        return {
            "t": self.t, "q": self.q, "order_of_q": self.order_of_q,
            "residue_degree_center": self.residue_degree_center, "inert": self.inert,
            "samples": self.samples, "seed": self.seed, "counterexample": self.counterexample,
            "notes": self.notes, "ok": self.ok,
        }


def verify_non_norm(spec: CodeSpec, t: int = 1, samples: int = 10_000, seed: int = 0,
                    coeff_bound: int = 3) -> NonNormReport:
    """Inertness certificate for ``q`` plus a randomized search for ``N(u) = gamma^t``."""
    n, N = spec.n, spec.conductor
    if not 1 <= t <= max(n - 1, 1):
        raise ValueError(f"t must lie in 1..{n - 1}")
    notes = []
    if spec.q is None or n == 1:
        order = f_center = None
        inert = n == 1
    else:
        S = frozenset(spec.stabilizer)
        center = _center_modulus(spec.base)
        order = _order_mod_subgroup(spec.q, N, S) if N % spec.q else None
        f_center = multiplicative_order(spec.q, center) if spec.q % center else None
        inert = (order is not None and f_center is not None and is_prime(spec.q)
                 and order == f_center * n)
        g = spec.gamma
        if g.norm() != spec.q:
            inert = False
            notes.append(f"gamma has norm {g.norm()}, not q={spec.q}")
        if spec.gamma_den is not None:
            d = spec.gamma_den
            same = any(a == d for a in g.associates())
            if d.norm() != spec.q or same:
                inert = False
            notes.append("gamma is a ratio of the two primes above q; its valuation at the numerator prime is 1")
    cex = _falsify(spec, t, samples, seed, coeff_bound)
    return NonNormReport(t=t, q=spec.q, order_of_q=order, residue_degree_center=f_center,
                         inert=inert, samples=samples, seed=seed, counterexample=cex, notes=notes)


def _falsify(spec: CodeSpec, t: int, samples: int, seed: int, bound: int) -> list[int] | None:
    if samples <= 0:
        return None
    N, n = spec.conductor, spec.n
    rng = np.random.default_rng(seed)
    basis_red = np.array([b.reduced() for b in spec.basis], dtype=np.int64)  # (n, phi)
    unit = CyclotomicInt.omega(N, N // _center_modulus(spec.base)).reduced()
    unit = np.array(unit, dtype=np.int64)
    target_num = spec.gamma_cyc() ** t
    target_den = spec.gamma_den_cyc() ** t
    tn = np.array(target_num.reduced(), dtype=np.int64)
    td = np.array(target_den.reduced(), dtype=np.int64)
    chunk = 2000
    for start in range(0, samples, chunk):
        B = min(chunk, samples - start)
        a = rng.integers(-bound, bound + 1, size=(B, n))
        c = rng.integers(-bound, bound + 1, size=(B, n))
        # u = sum_b (a_b + c_b * g) beta_b with g = i or w3
        coef = a[..., None] * basis_red[None] + c[..., None] * batch_mul(basis_red[None], unit[None, None], N)
        u = coef.sum(axis=1)
        u[np.all(u == 0, axis=1), 0] = 1
        norm = u
        for j in range(1, n):
            norm = batch_mul(norm, batch_galois_reduced(u, N, spec.sigma_power(j)), N)
        lhs = batch_mul(norm, td[None], N)
        hit = np.all(lhs == tn[None], axis=1)
        if hit.any():
            return [int(v) for v in u[int(np.argmax(hit))]]
    return None
