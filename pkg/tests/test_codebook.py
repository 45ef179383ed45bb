from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from cdastbc.cda import construct_A, construct_B, construct_HEX, perfect_3x3_spec
from cdastbc.codebook import (
    Constellation,
    build_codebook,
    cartesian_product,
    left_regular_matrix,
    max_energy,
    normalize,
    row_delete,
)
from cdastbc.cyclotomic import CyclotomicInt, embed_complex, exact_det
from cdastbc.verify import size_for_rate


def _algebra_product(spec, a, b):
    """Coefficients of (sum z^s a_s)(sum z^t b_t) using a z = z sigma(a) and z^n = gamma."""
    n, N = spec.n, spec.conductor
    g = spec.gamma_cyc()
    out = [CyclotomicInt.zero(N) for _ in range(n)]
    for s in range(n):
        for t in range(n):
            v = a[s].apply(spec.sigma_power(t)) * b[t]
            if s + t >= n:
                v = g * v
            out[(s + t) % n] = out[(s + t) % n] + v
    return out


def _matmul(A, B):
    n = len(A)
    N = A[0][0].conductor
    return [[sum((A[i][k] * B[k][j] for k in range(n)), CyclotomicInt.zero(N)) for j in range(n)] for i in range(n)]


def test_constellation():
    q = Constellation("QAM", 4)
    assert list(q.levels) == [-3, -1, 1, 3]
    assert len(q) == 16
    assert q.max_energy() == pytest.approx(18) and q.mean_energy() == pytest.approx(10)
    h = Constellation("HEX", 4)
    assert h.max_energy() == pytest.approx(27)  # 3 (M-1)^2
    assert h.mean_energy() == pytest.approx(2 * (16 - 1) / 3)
    with pytest.raises(ValueError):
        Constellation("QAM", 3)


def test_left_regular_small():
    s = construct_A(2)
    l0, l1 = 1 + CyclotomicInt.omega(8), CyclotomicInt.omega(8)
    M = left_regular_matrix(s, [l0, l1])
    assert M[0][0] == l0 and M[1][0] == l1
    assert M[0][1] == s.gamma_cyc() * s.sigma(l1)
    assert M[1][1] == s.sigma(l0)
    one = left_regular_matrix(construct_A(1), [CyclotomicInt.from_int(3, 4)])
    assert one == [[CyclotomicInt.from_int(3, 4)]]


@pytest.mark.parametrize("spec_fn", [lambda: construct_A(2), lambda: construct_A(3), lambda: construct_HEX(2),
                                     lambda: construct_B(4)])
def test_left_regular_is_multiplicative(spec_fn):
    s = spec_fn()
    rng = np.random.default_rng(s.n)
    for _ in range(3):
        a = [sum((int(c) * b for c, b in zip(rng.integers(-2, 3, s.n), s.basis)), CyclotomicInt.zero(s.conductor))
             for _ in range(s.n)]
        b = [sum((int(c) * b for c, b in zip(rng.integers(-2, 3, s.n), s.basis)), CyclotomicInt.zero(s.conductor))
             for _ in range(s.n)]
        lhs = left_regular_matrix(s, _algebra_product(s, a, b))
        rhs = _matmul(left_regular_matrix(s, a), left_regular_matrix(s, b))
        assert all(x == y for rl, rr in zip(lhs, rhs) for x, y in zip(rl, rr))


def test_sizes_and_rates():
    b = build_codebook(construct_A(2), 2)
    assert b.size == 256 and b.K == 4 and b.rate_bpcu == 4.0
    p = build_codebook(perfect_3x3_spec(), 2)
    assert p.size == 4**9
    r = row_delete(p, [0])
    assert (r.n_t, r.T, r.size, r.rate_bpcu) == (2, 3, 4**9, 6.0)
    with pytest.raises(ValueError):
        build_codebook(construct_A(2), 3)


def test_generator_matches_exact_matrices():
    for spec in (construct_A(2), construct_A(3), construct_HEX(3), perfect_3x3_spec()):
        book = build_codebook(spec, 4)
        rng = np.random.default_rng(1)
        C = 2 * rng.integers(-1, 2, (5, 2 * book.K)) + 1
        for c in C:
            ex = book.exact_matrix(c)
            den = complex(spec.gamma_den) if spec.gamma_den is not None else 1.0
            num = np.array([[embed_complex(v) for v in row] for row in ex]) / den
            assert np.allclose(num, book.matrix(c), atol=1e-9)
            det_num = np.linalg.det(book.matrix(c))
            assert abs(det_num * book.exact_scale - complex(exact_det(ex))) < 1e-6 * max(1, abs(det_num))


def test_index_and_all_coords():
    b = build_codebook(construct_A(2), 2)
    allc = b.all_coords()
    assert allc.shape == (256, 8)
    assert len({tuple(c) for c in allc}) == 256
    assert np.array_equal(b.index_to_coords(0), -np.ones(8, dtype=np.int64))
    assert np.allclose(b.codeword(5).entries, b.matrix(b.index_to_coords(5)))


@pytest.mark.parametrize("spec_fn,M", [(lambda: construct_A(2), 2), (lambda: construct_HEX(2), 2),
                                       (lambda: construct_B(2), 4)])
def test_max_energy_matches_brute_force(spec_fn, M):
    b = build_codebook(spec_fn(), M)
    X = b.matrices(b.all_coords())
    brute = float(np.max(np.sum(np.abs(X) ** 2, axis=(1, 2))))
    assert b.e_max_exact
    assert b.e_max == pytest.approx(brute, rel=1e-12)


def test_max_energy_frozen():
    assert build_codebook(construct_A(2), 2).e_max == pytest.approx(32 + 8 * np.sqrt(2), rel=1e-12)
    p = build_codebook(perfect_3x3_spec(), 2)
    assert p.e_max == pytest.approx(882.0, rel=1e-12)
    assert row_delete(p, [0]).e_max == pytest.approx(872.2596072338555, rel=1e-9)


def test_max_energy_bound_is_upper():
    rng = np.random.default_rng(0)
    G = rng.standard_normal((4, 11)) + 1j * rng.standard_normal((4, 11))
    exact, flag = max_energy(G, 2)
    assert flag
    big = np.hstack([G, G])  # 22 coordinates: bound path
    bound, flag = max_energy(big, 2)
    assert not flag and bound >= exact


def test_row_delete():
    p = build_codebook(perfect_3x3_spec(), 2)
    assert row_delete(p, []) is p
    r = row_delete(p, [0])
    C = 2 * np.random.default_rng(0).integers(0, 2, (10, 2 * p.K)) - 1
    assert np.allclose(r.matrices(C), p.matrices(C)[:, 1:, :])
    assert r.square_parent is p
    with pytest.raises(ValueError):
        row_delete(p, [0, 1, 2])
    with pytest.raises(ValueError):
        row_delete(p, [3])


def test_cartesian_product():
    a = build_codebook(construct_A(2), 2)
    assert cartesian_product([a]) is a
    c = cartesian_product([a, a])
    assert (c.n_t, c.T, c.K) == (2, 4, 8)
    assert c.e_max == pytest.approx(2 * a.e_max)
    C = 2 * np.random.default_rng(1).integers(0, 2, (3, 2 * c.K)) - 1
    Z = c.matrices(C)
    left = a.matrices(np.hstack([C[:, 0:4], C[:, 8:12]]))
    right = a.matrices(np.hstack([C[:, 4:8], C[:, 12:16]]))
    assert np.allclose(Z[:, :, :2], left) and np.allclose(Z[:, :, 2:], right)


def test_normalize():
    b = build_codebook(construct_A(2), 2)
    for snr in (1.0, 10.0, 1000.0):
        th = normalize(b, snr)
        assert th**2 * b.e_max == pytest.approx(b.T * snr)
    single = replace(b, e_max=b.T * 7.0)
    assert normalize(single, 7.0) == pytest.approx(1.0)
    doubled = replace(b, generator=2 * b.generator, e_max=max_energy(np.hstack([2 * b.generator, 2j * b.generator]), 2)[0])
    assert normalize(doubled, 10.0) == pytest.approx(normalize(b, 10.0) / 2)
    with pytest.raises(ValueError):
        normalize(b, 0.0)


def test_theta_scaling_law():
    # theta^2 / SNR^(1 - r/n) stays within a 4x spread under M^2 = SNR^(r/n)
    spec, r, n = construct_A(2), 1, 2
    ratios = []
    for snr_db in (10, 20, 30, 40):
        snr = 10 ** (snr_db / 10)
        b = build_codebook(spec, size_for_rate(snr, r, n))
        ratios.append(normalize(b, snr) ** 2 / snr ** (1 - r / n))
    assert max(ratios) / min(ratios) <= 4.0


def test_json():
    b = row_delete(build_codebook(perfect_3x3_spec(), 2), [0])
    d = b.to_json()
    assert d["n_t"] == 2 and d["T"] == 3 and d["shape"] == "row_deleted(0)"
    assert np.array(d["generator"]).shape == (6, 9, 2)
    assert isinstance(b.dumps(), str)
