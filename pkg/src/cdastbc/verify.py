"""Property checks: NVD, determinant in the center, determinant scaling, eigenvalue inequalities."""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cda import CodeSpec, construct_A, relative_norm
from .codebook import Codebook, build_codebook, cartesian_product, normalize, row_delete
from .cyclotomic import (
    CyclotomicInt,
    batch_det,
    batch_galois_reduced,
    batch_project,
    project_to_subring,
)
from .numtheory import EisensteinInt, GaussianInt

__all__ = [
    "NvdReport",
    "PrecisionLoss",
    "check_nvd",
    "check_det_in_center",
    "check_clearly_optimal_scaling",
    "check_mismatch_bound",
    "check_interlacing_and_weyl",
    "corrupted_gamma_spec",
    "EXHAUSTIVE_LIMIT",
    "DUAL_PATH_RTOL",
]

EXHAUSTIVE_LIMIT = 100_000
DUAL_PATH_RTOL = 1e-6
CHUNK = 20_000


class PrecisionLoss(RuntimeError):
    """Exact and floating-point determinants disagree."""


@dataclass
class NvdReport:
    book_id: str
    mode: str
    checked: int
    min_abs_det: float
    min_det_exact: GaussianInt | EisensteinInt | None
    min_abs_det_exact: float
    max_rel_err: float
    violations: list[dict] = field(default_factory=list)
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return not self.violations and self.min_abs_det_exact >= 1.0

    def to_json(self) -> dict:
        return {
            "book_id": self.book_id,
            "mode": self.mode,
            "seed": self.seed,
            "checked": self.checked,
            "min_abs_det": self.min_abs_det,
            "min_det_exact": None if self.min_det_exact is None else self.min_det_exact.to_list(),
            "min_abs_det_exact": self.min_abs_det_exact,
            "max_rel_err": self.max_rel_err,
            "violations": self.violations,
            "ok": self.ok,
        }


def _ring_norm(ring: str, a: np.ndarray, c: np.ndarray) -> np.ndarray:
    a = a.astype(np.float64)
    c = c.astype(np.float64)
    if ring == "Z[i]":
        return a * a + c * c
    return a * a - a * c + c * c


def _mk(ring: str, a: int, c: int):
    return GaussianInt(int(a), int(c)) if ring == "Z[i]" else EisensteinInt(int(a), int(c))


def _nvd_chunk(book: Codebook, D: np.ndarray, max_viol: int = 20) -> dict:
    parent = book.square_parent
    spec = parent.spec
    N = spec.conductor
    ring = spec.ring
    red = parent.exact_reduced(D)
    dets = batch_det(red, N)
    if dets.dtype == object:
        raise PrecisionLoss("determinant exceeded the int64 engine")
    ok, a, c = batch_project(dets, N, ring)
    norm = _ring_norm(ring, a, c)
    bad = ~ok | (norm < 1)
    exact_c = a + parent.zeta * c
    num = np.linalg.det(parent.matrices(D)) * parent.exact_scale
    err = np.abs(num - exact_c) / np.maximum(np.abs(exact_c), 1.0)
    out = {
        "checked": len(D),
        "min_norm": float(norm[ok].min()) if ok.any() else np.inf,
        "min_idx": None,
        "min_abs_num": float(np.abs(num).min() / abs(parent.exact_scale)),
        "max_rel_err": float(err[ok].max()) if ok.any() else 0.0,
        "violations": [],
    }
    if ok.any():
        i = int(np.argmin(np.where(ok, norm, np.inf)))
        out["min_idx"] = (int(a[i]), int(c[i]))
    for i in np.flatnonzero(bad)[:max_viol]:
        out["violations"].append({
            "coords": [int(v) for v in D[i]],
            "reason": "not in base ring" if not ok[i] else "zero determinant",
            "det_numeric": [float(num[i].real), float(num[i].imag)],
        })
    return out


def _difference_chunks(book: Codebook, chunk: int):
    d = 2 * book.K
    vals = np.arange(-(book.M - 1), book.M, dtype=np.int64) * 2
    L = len(vals)
    total = L**d
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((len(idx), d), dtype=np.int64)
        rest = idx.copy()
        for j in range(d):
            digits[:, j] = rest % L
            rest //= L
        D = vals[digits]
        nz = D != 0
        first = np.argmax(nz, axis=1)
        lead = D[np.arange(len(D)), first]
        keep = nz.any(axis=1) & (lead > 0)
        yield D[keep]


def _sample_chunks(book: Codebook, samples: int, seed: int, chunk: int):
    d = 2 * book.K
    half = book.M - 1
    for ci, start in enumerate(range(0, samples, chunk)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ci,)))
        B = min(chunk, samples - start)
        D = 2 * rng.integers(-half, half + 1, size=(B, d))
        zero = ~D.any(axis=1)
        while zero.any():
            D[zero] = 2 * rng.integers(-half, half + 1, size=(int(zero.sum()), d))
            zero = ~D.any(axis=1)
        yield D


def _merge(book_id, mode, seed, parts, ring) -> NvdReport:
    checked = sum(p["checked"] for p in parts)
    viol = [v for p in parts for v in p["violations"]]
    best = min((p for p in parts if p["min_idx"] is not None), key=lambda p: p["min_norm"], default=None)
    min_exact = None if best is None else _mk(ring, *best["min_idx"])
    return NvdReport(
        book_id=book_id,
        mode=mode,
        checked=checked,
        min_abs_det=min((p["min_abs_num"] for p in parts), default=np.inf),
        min_det_exact=min_exact,
        min_abs_det_exact=float(np.sqrt(best["min_norm"])) if best else 0.0,
        max_rel_err=max((p["max_rel_err"] for p in parts), default=0.0),
        violations=viol,
        seed=seed,
    )


def book_id(book: Codebook) -> str:
    spec = book.square_parent.spec
    return f"{spec.provenance}(n={spec.n}),M={book.M},{book.shape}"


def check_nvd(book: Codebook, mode: str = "auto", samples: int = 100_000, seed: int = 0,
              workers: int = 1, chunk: int = CHUNK, strict_precision: bool = True) -> NvdReport:
    """Exact NVD check over codeword differences of the square parent of ``book``.

    Differences of odd coordinates are even, so the difference set is the
    box of even integers in ``[-2(M-1), 2(M-1)]`` per coordinate.  ``auto``
    scans it exhaustively when it has at most ``EXHAUSTIVE_LIMIT`` points and
    samples it otherwise.
    """
    parent = book.square_parent
    size = (2 * parent.M - 1) ** (2 * parent.K)
    if mode == "auto":
        mode = "exhaustive" if size <= EXHAUSTIVE_LIMIT else "sampled"
    if mode == "exhaustive":
        gen = _difference_chunks(parent, chunk)
        label, used_seed = "exhaustive", None
    elif mode == "sampled":
        gen = _sample_chunks(parent, samples, seed, chunk)
        label, used_seed = f"sampled({samples},{seed})", seed
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_nvd_chunk, itertools.repeat(parent), gen))
    else:
        parts = [_nvd_chunk(parent, D) for D in gen]
    rep = _merge(book_id(parent), label, used_seed, parts, parent.spec.ring)
    if label == "exhaustive":
        # each representative stands for d and -d
        rep.checked *= 2
    if strict_precision and rep.max_rel_err > DUAL_PATH_RTOL:
        raise PrecisionLoss(f"exact and float determinants differ by {rep.max_rel_err:.3g} (relative)")
    return rep


# -- determinant in the center -------------------------------------------------


@dataclass
class CenterReport:
    trials: int
    seed: int
    passed: int
    witness: list[int] | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.passed == self.trials and self.witness is None

    def to_json(self) -> dict:
        return {"trials": self.trials, "seed": self.seed, "passed": self.passed,
                "witness": self.witness, "reason": self.reason, "ok": self.ok}


def check_det_in_center(spec: CodeSpec, trials: int = 1000, seed: int = 0, bound: int = 50,
                        chunk: int = 500) -> CenterReport:
    """Random algebra elements have ``sigma(det) = det`` and ``det`` in the base ring."""
    book = build_codebook(spec, 2)
    N = spec.conductor
    passed = 0
    for ci, start in enumerate(range(0, trials, chunk)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ci,)))
        B = min(chunk, trials - start)
        C = rng.integers(-bound, bound + 1, size=(B, 2 * book.K))
        red = book.exact_reduced(C)
        dets = batch_det(red, N)
        if dets.dtype == object:
            # too large for the int64 engine: fall back to exact scalar arithmetic
            ok = _center_scalar(book, C)
        else:
            img = batch_galois_reduced(dets, N, spec.sigma_exponent)
            fixed = np.all(img == dets, axis=1)
            inring, _, _ = batch_project(dets, N, spec.ring)
            ok = fixed & inring
        passed += int(ok.sum())
        if not ok.all():
            i = int(np.argmin(ok))
            return CenterReport(trials, seed, passed, [int(v) for v in C[i]],
                                "sigma(det) != det or det outside the base ring")
    return CenterReport(trials, seed, passed)


def _center_scalar(book: Codebook, C: np.ndarray) -> np.ndarray:
    from .cyclotomic import exact_det

    spec = book.spec
    out = np.zeros(len(C), dtype=bool)
    for i, c in enumerate(C):
        det = exact_det(book.exact_matrix(c))
        out[i] = det.apply(spec.sigma_exponent) == det and project_to_subring(det, spec.ring) is not None
    return out


# -- determinant scaling ---------------------------------------------------------


def size_for_rate(snr_linear: float, r: float, n: int) -> int:
    """Smallest even M with ``M^2 >= SNR^(r/n)``."""
    target = np.sqrt(snr_linear ** (r / n))
    M = int(np.ceil(target - 1e-9))
    M = max(M, 2)
    return M + (M % 2)


@dataclass
class ScalingReport:
    r: float
    n_t: int
    snr_db: list[float]
    M: list[int]
    min_det: list[float]
    slope: float
    expected: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.slope - self.expected) <= self.tolerance

    def to_json(self) -> dict:
        return {"r": self.r, "n_t": self.n_t, "snr_db": self.snr_db, "M": self.M,
                "min_det": self.min_det, "slope": self.slope, "expected": self.expected,
                "tolerance": self.tolerance, "ok": self.ok}


def check_clearly_optimal_scaling(spec: CodeSpec, r: float, snr_db, samples: int = 20_000,
                                  seed: int = 0, tolerance: float = 0.4,
                                  transform=None) -> ScalingReport:
    """Fit the SNR exponent of ``min det(dZ dZ^H)`` over sampled differences.

    The sample set is the exhaustive shell of differences in ``{-2, 0, 2}``
    plus ``samples`` uniform draws from the full difference box.
    ``transform`` optionally maps the square book (e.g. to a row-deleted one).
    """
    snr_db = list(snr_db)
    if len(snr_db) < 3:
        raise ValueError("need at least three SNR points")
    mins, Ms = [], []
    for si, s_db in enumerate(snr_db):
        snr = 10 ** (s_db / 10)
        M = size_for_rate(snr, r, spec.n)
        book = build_codebook(spec, M)
        if transform is not None:
            book = transform(book)
        theta = normalize(book, snr)
        d = 2 * book.K
        shell = np.array(list(itertools.product((-2, 0, 2), repeat=d)), dtype=np.int64)[1:] if d <= 12 else np.empty((0, d), np.int64)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(si,)))
        rand = 2 * rng.integers(-(M - 1), M, size=(samples, d))
        D = np.vstack([shell, rand])
        D = D[D.any(axis=1)]
        Z = theta * book.matrices(D)
        gram = Z @ np.conj(np.transpose(Z, (0, 2, 1)))
        dets = np.real(np.linalg.det(gram))
        mins.append(float(dets.min()))
        Ms.append(M)
    x = np.array(snr_db) / 10
    y = np.log10(np.array(mins))
    slope = float(np.polyfit(x, y, 1)[0])
    n_t = book.n_t
    return ScalingReport(r, n_t, snr_db, Ms, mins, slope, n_t - r, tolerance)


# -- eigenvalue inequalities -------------------------------------------------------


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _pairs(A: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def _rel_ok(lhs, rhs, tol):
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs >= rhs - tol * scale


@dataclass
class InequalityReport:
    name: str
    trials: int
    failures: int
    worst_margin: float
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {"name": self.name, "trials": self.trials, "failures": self.failures,
                "worst_margin": self.worst_margin, "ok": self.ok,
                "witness": self.witness}


def mismatch_terms(H: np.ndarray, dX: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``Tr(H dX dX^H H^H)`` and ``sum_i lambda_i l_i`` (lambda of H^H H descending, l of dX dX^H ascending)."""
    HX = H @ dX
    lhs = np.real(np.einsum("...ij,...ij->...", HX, HX.conj()))
    lam = np.linalg.eigvalsh(np.conj(np.swapaxes(H, -1, -2)) @ H)[..., ::-1]
    ell = np.linalg.eigvalsh(dX @ np.conj(np.swapaxes(dX, -1, -2)))
    return lhs, np.sum(lam * ell, axis=-1)


def check_mismatch_bound(n_t: int = 4, n_r: int = 4, trials: int = 10_000, seed: int = 0,
                         T: int | None = None, tol: float = 1e-9, dX: np.ndarray | None = None) -> InequalityReport:
    """Randomized check of ``Tr(H dX dX^H H^H) >= sum lambda_i l_i``."""
    rng = np.random.default_rng(seed)
    T = n_t if T is None else T
    H = _crandn(rng, trials, n_r, n_t)
    if dX is None:
        dX = _crandn(rng, trials, n_t, T)
        # include rank-deficient differences
        k = trials // 4
        dX[:k, -1, :] = 0
    lhs, rhs = mismatch_terms(H, dX)
    good = _rel_ok(lhs, rhs, tol)
    margin = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    wit = None
    if not good.all():
        i = int(np.argmin(good))
        wit = {"H": _pairs(H[i]), "dX": _pairs(dX[i])}
    return InequalityReport("mismatch_bound", trials, int((~good).sum()), float(margin.min()), wit)


def interlacing_holds(full: np.ndarray, kept: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Row deletion: eigenvalues (ascending) of the kept Gram dominate the smallest of the full Gram."""
    mu = np.linalg.eigvalsh(kept @ np.conj(np.swapaxes(kept, -1, -2)))
    nu = np.linalg.eigvalsh(full @ np.conj(np.swapaxes(full, -1, -2)))[..., : mu.shape[-1]]
    return np.all(_rel_ok(mu, nu, tol), axis=-1)


def weyl_holds(parts: list[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    """Cartesian product: each eigenvalue of sum_k Z_k Z_k^H dominates the same-index eigenvalue of every term."""
    grams = [Z @ np.conj(np.swapaxes(Z, -1, -2)) for Z in parts]
    total = np.linalg.eigvalsh(sum(grams))
    ok = np.ones(total.shape[:-1], dtype=bool)
    for G in grams:
        ok &= np.all(_rel_ok(total, np.linalg.eigvalsh(G), tol), axis=-1)
    return ok


def check_interlacing_and_weyl(trials: int = 10_000, seed: int = 0, tol: float = 1e-9,
                               include_codes: bool = True) -> list[InequalityReport]:
    """Randomized interlacing and Weyl checks on Gaussian matrices and on real code differences."""
    rng = np.random.default_rng(seed)
    reports = []
    A = _crandn(rng, trials, 4, 6)
    keep = A[:, 1:, :]
    ok = interlacing_holds(A, keep, tol)
    reports.append(InequalityReport("interlacing_random", trials, int((~ok).sum()), 0.0))
    P = _crandn(rng, trials, 3, 4)
    Q = _crandn(rng, trials, 3, 5)
    ok = weyl_holds([P, Q], tol)
    reports.append(InequalityReport("weyl_random", trials, int((~ok).sum()), 0.0))
    if include_codes:
        from .cda import perfect_3x3_spec

        sq = build_codebook(perfect_3x3_spec(), 2)
        rect = row_delete(sq, [0])
        D = 2 * rng.integers(-1, 2, size=(trials, 2 * sq.K))
        full = sq.matrices(D)
        kept = rect.matrices(D)
        ok = interlacing_holds(full, kept, tol) & np.allclose(full[:, 1:, :], kept)
        reports.append(InequalityReport("interlacing_code", trials, int((~ok).sum()), 0.0))
        a2 = build_codebook(construct_A(2), 2)
        prod = cartesian_product([a2, a2])
        D = 2 * rng.integers(-1, 2, size=(trials, 2 * prod.K))
        Z = prod.matrices(D)
        ok = weyl_holds([Z[:, :, :2], Z[:, :, 2:]], tol)
        reports.append(InequalityReport("weyl_code", trials, int((~ok).sum()), 0.0))
    return reports


# -- negative control ----------------------------------------------------------------


def corrupted_gamma_spec(spec: CodeSpec | None = None, u: CyclotomicInt | None = None) -> CodeSpec:
    """Replace gamma by the relative norm of ``u`` (default ``1 + w8`` in A(2)).

    The result is no longer a division algebra, so some nonzero codeword
    difference has determinant zero.
    """
    spec = construct_A(2) if spec is None else spec
    if u is None:
        u = 1 + CyclotomicInt.omega(8)
    norm = relative_norm(spec, u)
    g = project_to_subring(norm, spec.ring)
    if g is None:
        raise ValueError("relative norm did not land in the center")
    return replace(spec, gamma=g, gamma_den=None, q=None, provenance=spec.provenance + "-corrupted",
                   notes=spec.notes + (f"gamma replaced by the relative norm {g}",))
