from __future__ import annotations

import json

import numpy as np
import pytest

from cdastbc.cda import construct_A, construct_B, construct_HEX, perfect_3x3_spec
from cdastbc.codebook import build_codebook, cartesian_product, left_regular_matrix, row_delete
from cdastbc.cyclotomic import CyclotomicInt, exact_det, project_to_subring
from cdastbc.numtheory import GaussianInt
from cdastbc.verify import (
    check_clearly_optimal_scaling,
    check_det_in_center,
    check_interlacing_and_weyl,
    check_mismatch_bound,
    check_nvd,
    corrupted_gamma_spec,
    interlacing_holds,
    mismatch_terms,
    size_for_rate,
    weyl_holds,
)


def test_nvd_exhaustive_a2():
    rep = check_nvd(build_codebook(construct_A(2), 2))
    assert rep.mode == "exhaustive"
    assert rep.checked == 9**4 - 1
    assert rep.ok and not rep.violations
    assert rep.min_abs_det_exact >= 1
    assert rep.max_rel_err < 1e-6
    json.dumps(rep.to_json())


def test_nvd_matches_pairwise_oracle():
    # brute force over codeword pairs on the float path
    book = build_codebook(construct_A(2), 2)
    X = book.matrices(book.all_coords())
    d = np.abs(np.linalg.det(X[:, None] - X[None, :]))
    d = d[~np.eye(len(X), dtype=bool)]
    rep = check_nvd(book)
    assert rep.min_abs_det == pytest.approx(d.min(), rel=1e-9)


def test_nvd_hex_and_perfect_sampled():
    rep = check_nvd(build_codebook(construct_HEX(2), 2))
    assert rep.ok
    rep = check_nvd(build_codebook(perfect_3x3_spec(), 2), mode="sampled", samples=3000, seed=1)
    assert rep.ok and rep.seed == 1 and rep.checked == 3000


def test_nvd_row_deleted_uses_square_parent():
    p = build_codebook(perfect_3x3_spec(), 2)
    a = check_nvd(row_delete(p, [0]), mode="sampled", samples=2000, seed=4)
    b = check_nvd(p, mode="sampled", samples=2000, seed=4)
    assert a.min_abs_det_exact == b.min_abs_det_exact


def test_nvd_seed_reproducible_and_worker_independent():
    book = build_codebook(construct_B(3), 2)
    r1 = check_nvd(book, mode="sampled", samples=3000, seed=7, chunk=1000)
    r2 = check_nvd(book, mode="sampled", samples=3000, seed=7, chunk=1000, workers=2)
    assert r1.to_json() == r2.to_json()


def test_negative_control():
    bad = corrupted_gamma_spec()
    assert bad.gamma != construct_A(2).gamma
    rep = check_nvd(build_codebook(bad, 2))
    assert not rep.ok and len(rep.violations) >= 1
    v = rep.violations[0]
    C = np.array(v["coords"])
    assert C.any()
    assert exact_det(build_codebook(bad, 2).exact_matrix(C)).is_zero()


def test_det_in_center_examples():
    s = construct_A(2)
    # l = (1, 0) gives the identity; l = (0, 1) gives [[0, gamma], [1, 0]]
    one = [CyclotomicInt.one(s.conductor), CyclotomicInt.zero(s.conductor)]
    assert exact_det(left_regular_matrix(s, one)) == 1
    assert exact_det(left_regular_matrix(s, one[::-1])) == -s.gamma_cyc()


@pytest.mark.parametrize("spec_fn", [lambda: construct_A(3), lambda: construct_B(4), lambda: construct_HEX(3),
                                     perfect_3x3_spec])
def test_det_in_center(spec_fn):
    rep = check_det_in_center(spec_fn(), trials=200, seed=2)
    assert rep.ok and rep.passed == 200


def test_det_in_center_scalar_cross_check():
    s = perfect_3x3_spec()
    book = build_codebook(s, 2)
    rng = np.random.default_rng(5)
    for c in rng.integers(-5, 6, (5, 2 * book.K)):
        d = exact_det(book.exact_matrix(c))
        assert d.apply(s.sigma_exponent) == d
        assert project_to_subring(d, "Z[i]") is not None


def test_size_for_rate():
    assert size_for_rate(100.0, 0, 2) == 2
    assert size_for_rate(10**4, 2, 2) == 100
    assert size_for_rate(10**3, 1, 2) % 2 == 0


def test_scaling_r0_and_rn():
    s = construct_A(2)
    r0 = check_clearly_optimal_scaling(s, 0, [20, 30, 40], samples=2000)
    assert abs(r0.slope - 2) <= 0.3
    r2 = check_clearly_optimal_scaling(s, 2, [20, 30, 40], samples=2000)
    assert abs(r2.slope) <= 0.4


def test_mismatch_bound_cases():
    H = np.eye(3, dtype=complex)[None]
    dX = np.diag([3.0, 1.0, 2.0]).astype(complex)[None]
    lhs, rhs = mismatch_terms(H, dX)
    assert lhs[0] == pytest.approx(rhs[0])
    lhs, rhs = mismatch_terms(H, np.zeros((1, 3, 3), complex))
    assert lhs[0] == 0 and rhs[0] == 0
    rep = check_mismatch_bound(trials=2000, seed=1)
    assert rep.ok and rep.worst_margin >= -1e-9


def test_interlacing_and_weyl_cases():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5, 4, 6)) + 1j * rng.standard_normal((5, 4, 6))
    assert interlacing_holds(A, A[:, 1:, :]).all()
    Z = np.concatenate([np.zeros((5, 1, 6)), A[:, 1:, :]], axis=1)
    assert interlacing_holds(Z, Z[:, 1:, :]).all()
    assert weyl_holds([A, np.zeros_like(A)]).all()
    reps = check_interlacing_and_weyl(trials=1000, seed=3)
    assert {r.name for r in reps} == {"interlacing_random", "weyl_random", "interlacing_code", "weyl_code"}
    assert all(r.ok for r in reps)


def test_interlacing_detects_violation():
    # a matrix that is not a row deletion of the full one can break the inequality
    full = np.diag([1.0, 1.0, 1.0]).astype(complex)[None]
    fake = np.diag([0.1, 0.1]).astype(complex)[None]
    assert not interlacing_holds(full, np.pad(fake, ((0, 0), (0, 0), (0, 1)))).all()


def test_weyl_code_product():
    a = build_codebook(construct_A(2), 2)
    c = cartesian_product([a, a])
    D = 2 * np.random.default_rng(0).integers(-1, 2, (50, 2 * c.K))
    Z = c.matrices(D)
    assert weyl_holds([Z[:, :, :2], Z[:, :, 2:]]).all()


def test_corrupted_gamma_is_a_norm():
    s = corrupted_gamma_spec()
    assert s.gamma.norm() == 2
    assert s.gamma in GaussianInt(1, -1).associates() + GaussianInt(1, 1).associates()
