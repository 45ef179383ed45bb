"""Acceptance criteria. Each test prints one PASS/FAIL line to the terminal.

Run with ``pytest tests/test_acceptance.py -v``.  Monte Carlo runs are seeded,
so every number below is reproducible.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from cdastbc.cda import construct, construct_A, perfect_3x3_spec
from cdastbc.codebook import build_codebook, normalize, row_delete
from cdastbc.simulator import (
    crossing_db,
    estimate_diversity_slope,
    exhaustive_decode_batch,
    simulate_wer,
    sphere_decode_batch,
)
from cdastbc.simulator import ChannelModel
from cdastbc.tables import table_rows
from cdastbc.verify import (
    DUAL_PATH_RTOL,
    check_clearly_optimal_scaling,
    check_det_in_center,
    check_interlacing_and_weyl,
    check_mismatch_bound,
    check_nvd,
    corrupted_gamma_spec,
)

# pinned limits
TABLE_SECONDS = 10.0
EXHAUSTIVE_SECONDS = 120.0
SAMPLED_SECONDS = 600.0
EIGEN_SECONDS = 60.0
RECT_SECONDS = 1800.0
NVD_SAMPLES = 100_000
CENTER_TRIALS = 1_000
EIGEN_TRIALS = 10_000
EIGEN_RTOL = 1e-9
SCALING_TOL = 0.4
SCALING_SNR_DB = [20.0, 30.0, 40.0]
DECODER_TRIALS = 1_000
DECODER_SNR_DB = [10.0, 20.0]
RECT_GRID = [8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0]
# extra points so that the code curve reaches WER = 1e-2
RECT_EXTENSION = [22.0, 24.0]
RECT_TRIALS = 10_000
RECT_GAP_DB = 4.0
RECT_LEVEL = 1e-2
SLOPE_MIN = 3.0
SLOPE_GRID = [18.0, 20.0, 22.0, 24.0]
SLOPE_TRIALS = 1_000_000
SLOPE_WINDOW = 3
SLOPE_MIN_ERRORS = 20


@pytest.fixture
def say(capsys):
    def _say(tag: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")
    return _say


def test_c1_table_A(say):
    t = time.perf_counter()
    rows = table_rows("A", range(2, 21))
    dt = time.perf_counter() - t
    bad = [(r.n, r.q, r.ref_q) for r in rows if not r.match]
    ok = not bad and len(rows) == 19 and dt < TABLE_SECONDS
    say("C1 table A", ok, f"{19 - len(bad)}/19 rows match; differing (n, q, ref q): {bad}; {dt:.2f}s")
    assert len(rows) == 19 and dt < TABLE_SECONDS
    assert not bad


def test_c1_table_B(say):
    t = time.perf_counter()
    rows = table_rows("B", range(2, 21))
    dt = time.perf_counter() - t
    bad = [(r.n, r.q, r.ref_q) for r in rows if not r.match]
    ok = not bad and len(rows) == 19 and dt < TABLE_SECONDS
    say("C1 table B", ok, f"{19 - len(bad)}/19 rows match; {dt:.2f}s")
    assert ok


def test_c2_exhaustive_nvd(say):
    t = time.perf_counter()
    results = []
    for method in ("A", "B"):
        for M in (2, 4):
            rep = check_nvd(build_codebook(construct(2, method), M), mode="exhaustive")
            results.append((method, M, rep))
    dt = time.perf_counter() - t
    ok = all(r.ok and not r.violations and r.min_abs_det_exact >= 1 for _, _, r in results) and dt < EXHAUSTIVE_SECONDS
    detail = ", ".join(f"{m}(2) M={M}: {r.checked} diffs min|det|={r.min_abs_det_exact:g}" for m, M, r in results)
    say("C2 exhaustive NVD", ok, f"{detail}; {dt:.1f}s")
    assert ok


def test_c3_sampled_nvd(say):
    t = time.perf_counter()
    results = []
    for method in ("A", "B"):
        for n in (3, 4, 5):
            rep = check_nvd(build_codebook(construct(n, method), 2), mode="sampled", samples=NVD_SAMPLES, seed=n)
            results.append((method, n, rep))
    dt = time.perf_counter() - t
    ok = all(r.ok and r.checked == NVD_SAMPLES and r.max_rel_err <= DUAL_PATH_RTOL for _, _, r in results)
    ok = ok and dt < SAMPLED_SECONDS
    worst = max(r.max_rel_err for _, _, r in results)
    detail = ", ".join(f"{m}({n}) min|det|={r.min_abs_det_exact:g}" for m, n, r in results)
    say("C3 sampled NVD", ok, f"{detail}; max rel err {worst:.1e}; {dt:.1f}s")
    assert ok


def test_c4_det_in_center(say):
    specs = [construct(n, m) for m in ("A", "B") for n in range(1, 7)]
    specs += [construct(n, "HEX") for n in (1, 2, 3, 5, 6)]
    specs.append(perfect_3x3_spec())
    reps = [(s, check_det_in_center(s, trials=CENTER_TRIALS, seed=0)) for s in specs]
    bad = [f"{s.provenance}({s.n})" for s, r in reps if not (r.ok and r.passed == CENTER_TRIALS)]
    say("C4 det in center", not bad, f"{len(reps) - len(bad)}/{len(reps)} specs pass {CENTER_TRIALS} trials; failing: {bad}")
    assert not bad


def test_c5_eigen_suite(say):
    t = time.perf_counter()
    reps = [check_mismatch_bound(trials=EIGEN_TRIALS, seed=0, tol=EIGEN_RTOL)]
    reps += check_interlacing_and_weyl(trials=EIGEN_TRIALS, seed=0, tol=EIGEN_RTOL, include_codes=True)
    dt = time.perf_counter() - t
    ok = all(r.ok and r.trials == EIGEN_TRIALS for r in reps) and dt < EIGEN_SECONDS
    say("C5 eigenvalue suite", ok, ", ".join(f"{r.name}: {r.failures} failures" for r in reps) + f"; {dt:.1f}s")
    assert ok


def test_c6_scaling(say):
    spec = construct_A(2)
    reps = [check_clearly_optimal_scaling(spec, r, SCALING_SNR_DB, seed=0, tolerance=SCALING_TOL) for r in (0, 1, 2)]
    ok = all(abs(r.slope - (2 - r.r)) <= SCALING_TOL for r in reps)
    say("C6 scaling", ok, ", ".join(f"r={r.r}: slope {r.slope:.3f} (target {2 - r.r})" for r in reps))
    assert ok


def test_c7_decoder_equivalence(say):
    book = build_codebook(construct_A(2), 2)
    agree = []
    for i, snr_db in enumerate(DECODER_SNR_DB):
        rng = np.random.default_rng(100 + i)
        snr = 10 ** (snr_db / 10)
        theta = normalize(book, snr)
        H, W = ChannelModel(2, 2, 2, snr).draw(rng, DECODER_TRIALS)
        C = 2 * rng.integers(0, 2, (DECODER_TRIALS, 2 * book.K)) - 1
        Y = theta * (H @ book.matrices(C)) + W
        s, _ = sphere_decode_batch(book, Y, H, theta)
        e = exhaustive_decode_batch(book, Y, H, theta)
        agree.append(int(np.all(s == e, axis=1).sum()))
    ok = all(a == DECODER_TRIALS for a in agree)
    say("C7 decoder equivalence", ok,
        ", ".join(f"{s:g} dB: {a}/{DECODER_TRIALS}" for s, a in zip(DECODER_SNR_DB, agree)))
    assert ok


@pytest.fixture(scope="module")
def rect_curve():
    book = row_delete(build_codebook(perfect_3x3_spec(), 2), [0])
    assert book.rate_bpcu == 6.0 and (book.n_t, book.T) == (2, 3)
    t = time.perf_counter()
    res = simulate_wer(book, RECT_GRID + RECT_EXTENSION, RECT_TRIALS, seed=1, decoder="sphere", n_r=2)
    return res, time.perf_counter() - t


def _rect_table(res):
    return "; ".join(f"{s:g}dB wer={w:.4g} out={o:.4g}" for s, w, o in zip(res.snr_db, res.wer, res.outage))


def test_c8a_above_outage(say, rect_curve):
    res, dt = rect_curve
    below = []
    for i, s in enumerate(res.snr_db):
        if s not in RECT_GRID:
            continue
        tol = 2 * (res.wer_hi[i] - res.wer_lo[i])
        if not res.wer[i] > res.outage[i] - tol:
            below.append((s, round(res.wer[i], 4), round(res.outage[i], 4), round(tol, 4)))
    ok = not below and dt < RECT_SECONDS
    say("C8a WER above outage", ok, f"points below outage - 2*width (snr, wer, outage, tol): {below}; {_rect_table(res)}")
    assert ok


def test_c8b_monotone(say, rect_curve):
    res, _ = rect_curve
    jumps = []
    for i in range(len(res.snr_db) - 1):
        half = max(res.wer_hi[i] - res.wer[i], res.wer[i] - res.wer_lo[i],
                   res.wer_hi[i + 1] - res.wer[i + 1], res.wer[i + 1] - res.wer_lo[i + 1])
        if res.wer[i + 1] > res.wer[i] + 2 * half:
            jumps.append((res.snr_db[i], res.snr_db[i + 1]))
    say("C8b WER monotone", not jumps, f"increases beyond 2 half-widths: {jumps}")
    assert not jumps


def test_c8c_crossing_gap(say, rect_curve):
    res, _ = rect_curve
    code = crossing_db(res.snr_db, res.wer, RECT_LEVEL)
    out = crossing_db(res.snr_db, res.outage, RECT_LEVEL)
    gap = None if code is None or out is None else code - out
    ok = gap is not None and gap < RECT_GAP_DB
    say("C8c crossing gap", ok, f"code crosses 1e-2 at {code} dB, outage at {out} dB, gap {gap} dB (< {RECT_GAP_DB})")
    assert ok


def test_c9_diversity_slope(say):
    book = build_codebook(construct_A(2), 2)
    res = simulate_wer(book, SLOPE_GRID, SLOPE_TRIALS, seed=4, n_r=2, block=5000)
    est = estimate_diversity_slope(res, window=SLOPE_WINDOW, min_errors=SLOPE_MIN_ERRORS)
    ok = not est.insufficient and est.slope >= SLOPE_MIN
    pts = "; ".join(f"{s:g}dB {e} errors" for s, e in zip(res.snr_db, res.errors))
    say("C9 diversity slope", ok, f"slope {est.slope:.3f} band {est.band[0]:.2f}..{est.band[1]:.2f} "
        f"over {est.points} (>= {SLOPE_MIN}); {pts}")
    assert ok


def test_c10_negative_control(say):
    rep = check_nvd(build_codebook(corrupted_gamma_spec(), 2))
    ok = not rep.ok and len(rep.violations) >= 1
    say("C10 negative control", ok, f"corrupted gamma: {len(rep.violations)} violations, min|det|={rep.min_abs_det_exact:g}")
    assert ok
