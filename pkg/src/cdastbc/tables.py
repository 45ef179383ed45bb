"""Reference non-norm tables for Constructions A and B, and a diff against computed rows."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .cda import table_q_A, table_q_B
from .numtheory import GaussianInt, is_prime, is_primitive_root, factor, split_in_gaussian_integers, split_two_part

# n: (p^e as printed, q as printed, gamma as printed)
REFERENCE_A = {
    2: (8, 5, (2, 1)),
    3: (7, 5, (2, 1)),
    4: (8, 5, (2, 1)),
    5: (11, 13, (3, 2)),
    6: (7, 5, (2, 1)),
    7: (29, 37, (6, 1)),
    8: (8, 5, (2, 1)),
    9: (19, 29, (5, 2)),
    10: (11, 13, (3, 2)),
    11: (23, 5, (2, 1)),
    12: (7, 5, (2, 1)),
    13: (53, 5, (2, 1)),
    14: (29, 36, (6, 1)),
    15: (31, 53, (7, 2)),
    16: (8, 5, (2, 1)),
    17: (103, 5, (2, 1)),
    18: (19, 13, (3, 2)),
    19: (191, 29, (5, 2)),
    20: (11, 13, (3, 2)),
}

REFERENCE_B = {
    2: (5, (2, 1)),
    3: (5, (2, 1)),
    4: (5, (2, 1)),
    5: (13, (3, 2)),
    6: (5, (2, 1)),
    7: (5, (2, 1)),
    8: (5, (2, 1)),
    9: (5, (2, 1)),
    10: (13, (3, 2)),
    11: (13, (3, 2)),
    12: (5, (2, 1)),
    13: (37, (6, 1)),
    14: (5, (2, 1)),
    15: (113, (7, 8)),
    16: (5, (2, 1)),
    17: (5, (2, 1)),
    18: (5, (2, 1)),
    19: (13, (3, 2)),
    20: (37, (6, 1)),
}

ANNOTATIONS = {
    ("A", 14): "printed q=36 is not prime; gamma=6+i has norm 37, so q=37 is expected",
    ("A", 2): "n is a power of 2: no odd prime power is needed; the printed 8 is the 2-part modulus",
    ("A", 4): "n is a power of 2: no odd prime power is needed; the printed 8 is the 2-part modulus",
    ("A", 8): "n is a power of 2: no odd prime power is needed; the printed 8 is the 2-part modulus",
    ("A", 16): "n is a power of 2: no odd prime power is needed; the printed 8 is the 2-part modulus",
}

# Expected values after the annotated corrections.
EXPECTED_Q_OVERRIDE = {("A", 14): 37}


def same_up_to_units(a: GaussianInt, b: GaussianInt) -> bool:
    """Equality up to multiplication by a unit and complex conjugation."""
    return any(a == u for u in b.associates()) or any(a == u for u in b.conj().associates())


@dataclass
class TableRow:
    method: str
    n: int
    prime_power: int | None
    q: int
    gamma: GaussianInt
    ref_prime_power: int | None
    ref_q: int | None
    ref_gamma: GaussianInt | None
    q_match: bool
    pe_match: bool
    gamma_match: bool
    ref_q_certified: bool | None
    note: str

    @property
    def match(self) -> bool:
        return self.q_match and self.pe_match and self.gamma_match

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "n": self.n,
            "p^e": self.prime_power,
            "q": self.q,
            "gamma": str(self.gamma),
            "ref_p^e": self.ref_prime_power,
            "ref_q": self.ref_q,
            "ref_gamma": None if self.ref_gamma is None else str(self.ref_gamma),
            "match": self.match,
            "ref_q_certified": self.ref_q_certified,
            "note": self.note,
        }


def _certify_A(n: int, q: int) -> bool:
    """Does ``q`` satisfy the Construction A congruences (any generator mod p^e)?"""
    if not is_prime(q):
        return False
    e0, _ = split_two_part(n)
    pe = table_q_A(n)[0]
    if q % 2 ** (e0 + 2) != 5 % 2 ** (e0 + 2):
        return False
    return pe is None or is_primitive_root(q % pe[0] ** pe[1], pe[0] ** pe[1])


def _certify_B(n: int, q: int) -> bool:
    if not is_prime(q):
        return False
    e0, n1 = split_two_part(n)
    if q % 2 ** (e0 + 2) != 5 % 2 ** (e0 + 2):
        return False
    return all(is_primitive_root(q % p ** (e + 1), p ** (e + 1)) for p, e in factor(n1))


def _inert_generator(n: int, q: int) -> bool:
    # Weaker group-theoretic test: q mod 2^(e0+2) generates the subgroup <5>.
    if not is_prime(q):
        return False
    e0, _ = split_two_part(n)
    return q % 4 == 1 and (e0 == 0 or q % 8 == 5)


def table_rows(method: str, ns) -> list[TableRow]:
    rows = []
    for n in ns:
        if method == "A":
            pe, q = table_q_A(n)
            pe_val = None if pe is None else pe[0] ** pe[1]
            ref = REFERENCE_A.get(n)
            ref_pe = None if ref is None else ref[0]
            ref_q = None if ref is None else ref[1]
            ref_g = None if ref is None else GaussianInt(*ref[2])
            cert = None if ref is None else _certify_A(n, ref_q)
        elif method == "B":
            q = table_q_B(n)
            pe_val = None
            ref = REFERENCE_B.get(n)
            ref_pe = None
            ref_q = None if ref is None else ref[0]
            ref_g = None if ref is None else GaussianInt(*ref[1])
            cert = None if ref is None else _certify_B(n, ref_q)
        else:
            raise ValueError(f"tables exist for methods A and B, not {method!r}")
        gamma = split_in_gaussian_integers(q)
        note = ANNOTATIONS.get((method, n), "")
        if ref is None:
            rows.append(TableRow(method, n, pe_val, q, gamma, None, None, None, True, True, True, None, "no reference row"))
            continue
        expect_q = EXPECTED_Q_OVERRIDE.get((method, n), ref_q)
        q_match = q == expect_q
        if method == "A" and pe_val is None:
            pe_match = True
        else:
            pe_match = ref_pe is None or pe_val == ref_pe
        gamma_match = same_up_to_units(gamma, ref_g)
        if not q_match:
            extra = f"computed q={q}, reference q={ref_q}"
            if cert:
                extra += "; reference q also satisfies the congruences but is not the smallest"
            elif is_prime(ref_q) and _inert_generator(n, ref_q):
                extra += "; reference q violates the stated 2-adic congruence but still generates the same Galois group"
            note = f"{note}; {extra}" if note else extra
        rows.append(TableRow(method, n, pe_val, q, gamma, ref_pe, ref_q, ref_g, q_match, pe_match, gamma_match, cert, note))
    return rows


def render_text(rows: list[TableRow]) -> str:
    head = f"{'n':>3} {'p^e':>5} {'q':>5} {'gamma':>8} | {'ref p^e':>7} {'ref q':>5} {'ref gamma':>9} | match  note"
    out = [head, "-" * len(head)]
    for r in rows:
        pe = "-" if r.prime_power is None else str(r.prime_power)
        rpe = "-" if r.ref_prime_power is None else str(r.ref_prime_power)
        rq = "-" if r.ref_q is None else str(r.ref_q)
        rg = "-" if r.ref_gamma is None else str(r.ref_gamma)
        out.append(f"{r.n:>3} {pe:>5} {r.q:>5} {str(r.gamma):>8} | {rpe:>7} {rq:>5} {rg:>9} | {'yes' if r.match else 'NO':<5}  {r.note}")
    return "\n".join(out)


def render_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    fields = ["method", "n", "p^e", "q", "gamma", "ref_p^e", "ref_q", "ref_gamma", "match", "ref_q_certified", "note"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_dict())
    return buf.getvalue()
