from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from cdastbc.cda import (
    CodeSpec,
    UnsupportedCase,
    construct,
    construct_A,
    construct_B,
    construct_HEX,
    perfect_3x3_spec,
    relative_norm,
    verify_non_norm,
)
from cdastbc.codebook import build_codebook
from cdastbc.cyclotomic import CyclotomicInt, project_to_subring
from cdastbc.numtheory import EisensteinInt, GaussianInt, is_primitive_root, multiplicative_order

SPECS = [(m, n) for m in ("A", "B") for n in range(1, 9)] + [("HEX", n) for n in (1, 2, 3, 5, 6, 7)]


@pytest.fixture(scope="module")
def specs():
    out = {(m, n): construct(n, m) for m, n in SPECS}
    out[("perfect3x3", 3)] = perfect_3x3_spec()
    return out


def test_construct_A_rows():
    s = construct_A(2)
    assert (s.q, s.gamma, s.conductor) == (5, GaussianInt(2, 1), 8)
    assert s.prime_power is None
    s = construct_A(5)
    assert (s.prime_power, s.q, s.gamma) == ((11, 1), 13, GaussianInt(3, 2))


def test_construct_A_row_9():
    # reference table row: p^e = 19, q = 29, gamma = 5+2i
    s = construct_A(9)
    assert s.prime_power == (19, 1)
    assert (s.q, s.gamma) == (29, GaussianInt(5, 2))


def test_construct_B_rows():
    s = construct_B(7)
    assert (s.q, s.gamma) == (5, GaussianInt(2, 1))
    s = construct_B(15)
    assert s.q == 113
    assert s.gamma.norm() == 113
    assert {s.gamma, s.gamma.conj()} & set(GaussianInt(7, 8).associates() + GaussianInt(7, 8).conj().associates())


def test_trivial_specs():
    for m in ("A", "B", "HEX"):
        s = construct(1, m)
        assert s.n == 1 and s.basis == (CyclotomicInt.one(s.conductor),)
        assert s.gamma in (GaussianInt(1, 0), EisensteinInt(1, 0))
    book = build_codebook(construct_B(1), 4)
    assert book.size == 16 and book.n_t == book.T == 1


def test_hex():
    s = construct_HEX(2)
    assert (s.q, s.gamma) == (7, EisensteinInt(3, 1))
    s = construct_HEX(3)
    assert s.prime_power == (7, 1)
    assert s.q % 3 == 1 and s.q % 4 == 3 and is_primitive_root(s.q, 7)
    assert s.gamma.norm() == s.q
    for q in range(2, s.q):
        assert not (q % 3 == 1 and q % 4 == 3 and is_primitive_root(q, 7) and all(q % d for d in range(2, q)))
    with pytest.raises(UnsupportedCase):
        construct_HEX(4)
    with pytest.raises(UnsupportedCase):
        construct_HEX(12)


@pytest.mark.parametrize("key", SPECS + [("perfect3x3", 3)])
def test_spec_structure(specs, key):
    s = specs[key]
    n = s.n
    B = s.basis_complex()
    # basis of L over the center is independent
    assert abs(np.linalg.det(B)) > 1e-6
    # sigma fixes the center
    gen = CyclotomicInt.omega(s.conductor, s.conductor // (4 if s.base == "QAM" else 3))
    assert s.sigma(gen) == gen
    # sigma^n fixes L; no smaller power does
    for b in s.basis:
        assert b.apply(s.sigma_power(n)) == b
    for j in range(1, n):
        assert any(b.apply(s.sigma_power(j)) != b for b in s.basis)
    assert s.gamma.norm() == (s.q if s.q is not None else 1)


@pytest.mark.parametrize("key", SPECS + [("perfect3x3", 3)])
def test_spec_json_round_trip(specs, key):
    s = specs[key]
    t = CodeSpec.from_json(s.to_json())
    assert t.dumps() == s.dumps()
    assert t == s or t.to_json() == s.to_json()


def test_perfect_code():
    s = perfect_3x3_spec()
    assert abs(abs(s.gamma_complex()) - 1) < 1e-12
    for b in s.basis:
        assert b.apply(s.sigma_power(3)) == b
    G = build_codebook(s, 2).generator
    gram = G.conj().T @ G
    # measured deviation from 49*I is ~1e-14
    assert np.abs(gram - 49 * np.eye(9)).max() < 1e-12


def test_relative_norm_lands_in_center(specs):
    rng = np.random.default_rng(0)
    for key in [("A", 2), ("A", 3), ("B", 4), ("HEX", 3), ("perfect3x3", 3)]:
        s = specs[key]
        for _ in range(5):
            u = sum((int(c) * b for c, b in zip(rng.integers(-3, 4, s.n), s.basis)), CyclotomicInt.zero(s.conductor))
            N = relative_norm(s, u)
            assert project_to_subring(N, s.ring) is not None


def test_non_norm_examples():
    r = verify_non_norm(construct_A(2))
    assert r.ok and r.order_of_q == 2
    assert multiplicative_order(5, 8) == 2
    r = verify_non_norm(construct_A(3))
    assert multiplicative_order(5, 7) == 6
    # order 6 in Z*_7 is order 3 modulo the stabilizer {1, 6}: q is inert in L/Q(i)
    assert r.ok and r.order_of_q == 3 and r.residue_degree_center == 1
    bad = verify_non_norm(replace(construct_A(2), gamma=GaussianInt(1, 0)))
    assert not bad.ok and bad.counterexample is not None
    with pytest.raises(ValueError):
        verify_non_norm(construct_A(3), t=3)


@pytest.mark.parametrize("key", [("A", n) for n in range(2, 7)] + [("B", n) for n in range(2, 7)]
                         + [("HEX", 2), ("HEX", 3), ("HEX", 5), ("HEX", 6)])
def test_non_norm_all(specs, key):
    s = specs[key] if key in specs else construct(key[1], key[0])
    for t in range(1, s.n):
        assert verify_non_norm(s, t=t, samples=2000).ok


def test_non_norm_perfect():
    s = perfect_3x3_spec()
    assert verify_non_norm(s, t=1).ok
    assert verify_non_norm(s, t=2).ok
