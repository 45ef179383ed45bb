"""Quasi-static Rayleigh MIMO Monte Carlo: ML decoding, word error rate, outage, diversity slope.

Model: ``Y = theta * H @ X + W`` with H (n_r x n_t) and W (n_r x T) i.i.d.
CN(0, 1), and ``theta`` chosen so that the largest codeword meets
``theta^2 ||X||_F^2 = T * snr``.

Each SNR point is split into fixed-size blocks; block ``b`` of point ``s``
draws from ``SeedSequence(seed, spawn_key=(s, b))``, so results do not depend
on how blocks are scheduled across workers.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .codebook import Codebook, normalize

__all__ = [
    "ChannelModel",
    "SimResult",
    "SlopeEstimate",
    "sphere_decode",
    "sphere_decode_batch",
    "exhaustive_decode",
    "exhaustive_decode_batch",
    "simulate_wer",
    "simulate_outage",
    "estimate_diversity_slope",
    "wilson_interval",
    "crossing_db",
    "EXHAUSTIVE_CAP",
]

EXHAUSTIVE_CAP = 1_000_000
BLOCK = 500
RIDGE = 0.5  # per-real-dimension noise variance, used as the regularizer when rank deficient


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@dataclass(frozen=True)
class ChannelModel:
    n_t: int
    n_r: int
    T: int
    snr: float

    def draw(self, rng: np.random.Generator, batch: int = 1) -> tuple[np.ndarray, np.ndarray]:
        H = crandn(rng, batch, self.n_r, self.n_t)
        W = crandn(rng, batch, self.n_r, self.T)
        return H, W


def wilson_interval(errors, trials, alpha: float = 0.05):
    from statsmodels.stats.proportion import proportion_confint

    errors = np.asarray(errors)
    trials = np.asarray(trials)
    safe = np.maximum(trials, 1)
    lo, hi = proportion_confint(errors, safe, alpha=alpha, method="wilson")
    lo = np.where(trials > 0, lo, 0.0)
    hi = np.where(trials > 0, hi, 1.0)
    return lo, hi


# -- lattice model -------------------------------------------------------------------


def effective_matrices(book: Codebook, H: np.ndarray, theta: float) -> np.ndarray:
    """Complex ``(B, n_r*T, 2K)`` maps from integer coordinates to ``vec(theta H X)``."""
    Gm = book.real_generator.reshape(book.T, book.n_t, 2 * book.K)
    A = np.einsum("bqr,crk->bcqk", H, Gm)
    return theta * A.reshape(H.shape[0], book.T * H.shape[1], 2 * book.K)


def _realify(A: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.concatenate([A.real, A.imag], axis=-2), np.concatenate([y.real, y.imag], axis=-1)


@numba.njit(cache=True)
def _se_search(R, z, levels, lam, amax2, out):
    """Schnorr-Euchner depth-first search of min ||z - R x||^2 - lam ||x||^2 over the box."""
    d = R.shape[0]
    L = levels.shape[0]
    x = np.zeros(d)
    cand = np.zeros((d, L), dtype=np.int64)
    pos = np.zeros(d, dtype=np.int64)
    centre = np.zeros(d)
    partial = np.zeros(d + 1)
    fsq = np.zeros(d + 1)
    best = np.inf
    nodes = 0
    k = d - 1
    centre[k] = z[k] / R[k, k]
    cand[k] = np.argsort(np.abs(levels - centre[k]))
    pos[k] = 0
    while True:
        if pos[k] >= L:
            k += 1
            if k == d:
                break
            continue
        v = levels[cand[k, pos[k]]]
        pos[k] += 1
        nodes += 1
        diff = R[k, k] * (v - centre[k])
        p = partial[k + 1] + diff * diff
        # -lam*||x||^2 of any completion is at least -lam*(fixed + (k+1)*amax2)
        if p - lam * (fsq[k + 1] + (k + 1) * amax2) >= best:
            pos[k] = L
            continue
        x[k] = v
        partial[k] = p
        fsq[k] = fsq[k + 1] + v * v
        if k == 0:
            metric = p - lam * fsq[0]
            if metric < best:
                best = metric
                out[:] = x
            continue
        k -= 1
        s = z[k]
        for j in range(k + 1, d):
            s -= R[k, j] * x[j]
        centre[k] = s / R[k, k]
        cand[k] = np.argsort(np.abs(levels - centre[k]))
        pos[k] = 0
    return nodes


@numba.njit(cache=True)
def _se_batch(Rs, zs, levels, lam, amax2, out, nodes):
    for b in range(Rs.shape[0]):
        nodes[b] = _se_search(Rs[b], zs[b], levels, lam, amax2, out[b])


def _prepare(Ar: np.ndarray, yr: np.ndarray, lam: float):
    B, m, d = Ar.shape
    if lam > 0:
        eye = np.broadcast_to(np.sqrt(lam) * np.eye(d), (B, d, d))
        Ar = np.concatenate([Ar, eye], axis=1)
        yr = np.concatenate([yr, np.zeros((B, d))], axis=1)
    Q, R = np.linalg.qr(Ar)
    z = np.einsum("bmd,bm->bd", Q, yr)
    # fix signs so the diagonal is positive
    s = np.sign(np.diagonal(R, axis1=1, axis2=2))
    s[s == 0] = 1
    R = R * s[:, :, None]
    z = z * s
    return np.ascontiguousarray(R), np.ascontiguousarray(z)


def _needs_ridge(Ar: np.ndarray) -> bool:
    B, m, d = Ar.shape
    if m < d:
        return True
    sv = np.linalg.svd(Ar, compute_uv=False)
    return bool(np.any(sv[:, -1] <= 1e-10 * sv[:, 0]))


@dataclass
class DecodeInfo:
    ridge: float
    fallback: bool
    nodes: np.ndarray


def sphere_decode_batch(book: Codebook, Y: np.ndarray, H: np.ndarray, theta: float,
                        ridge: float | None = None) -> tuple[np.ndarray, DecodeInfo]:
    """ML coordinates for a batch of received matrices by box-constrained sphere decoding.

    When the real lattice is rank deficient (e.g. n_r*T < K) the search runs
    on ``[A; sqrt(lam) I]`` and subtracts ``lam ||x||^2`` exactly, with a
    bound that keeps the search exact.
    """
    A = effective_matrices(book, H, theta)
    y = np.transpose(Y, (0, 2, 1)).reshape(Y.shape[0], -1)
    Ar, yr = _realify(A, y)
    fallback = _needs_ridge(Ar)
    lam = (RIDGE if fallback else 0.0) if ridge is None else ridge
    R, z = _prepare(Ar, yr, lam)
    levels = book.constellation.levels.astype(np.float64)
    out = np.zeros((Y.shape[0], 2 * book.K))
    nodes = np.zeros(Y.shape[0], dtype=np.int64)
    _se_batch(R, z, levels, lam, float((book.M - 1) ** 2), out, nodes)
    return np.rint(out).astype(np.int64), DecodeInfo(lam, fallback, nodes)


def sphere_decode(book: Codebook, Y: np.ndarray, H: np.ndarray, theta: float) -> tuple[np.ndarray, DecodeInfo]:
    """Single received matrix version of :func:`sphere_decode_batch`."""
    x, info = sphere_decode_batch(book, Y[None], H[None], theta)
    return x[0], info


def exhaustive_decode_batch(book: Codebook, Y: np.ndarray, H: np.ndarray, theta: float,
                            candidates: np.ndarray | None = None) -> np.ndarray:
    if book.size > EXHAUSTIVE_CAP:
        raise ValueError(f"exhaustive decoding limited to {EXHAUSTIVE_CAP} codewords, book has {book.size}")
    C = book.all_coords() if candidates is None else candidates
    A = effective_matrices(book, H, theta)
    y = np.transpose(Y, (0, 2, 1)).reshape(Y.shape[0], -1)
    out = np.empty((Y.shape[0], C.shape[1]), dtype=np.int64)
    Cf = C.astype(np.float64).T
    for b in range(Y.shape[0]):
        r = y[b][:, None] - A[b] @ Cf
        out[b] = C[np.argmin(np.sum(r.real**2 + r.imag**2, axis=0))]
    return out


def exhaustive_decode(book: Codebook, Y: np.ndarray, H: np.ndarray, theta: float) -> np.ndarray:
    return exhaustive_decode_batch(book, Y[None], H[None], theta)[0]


# -- simulation ------------------------------------------------------------------------


@dataclass
class SimResult:
    snr_db: list[float]
    trials: list[int]
    errors: list[int]
    wer: list[float]
    wer_lo: list[float]
    wer_hi: list[float]
    outage: list[float]
    outage_lo: list[float]
    outage_hi: list[float]
    decoder: str
    seed: int
    rate_bpcu: float
    n_t: int
    n_r: int
    T: int
    M: int
    fallback: bool = False
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["snr_db", "wer", "wer_lo", "wer_hi", "outage", "trials", "errors"])
        for row in zip(self.snr_db, self.wer, self.wer_lo, self.wer_hi, self.outage, self.trials, self.errors):
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
        return buf.getvalue()


def capacity_bits(H: np.ndarray, snr: float) -> np.ndarray:
    """``log2 det(I + snr/n_t H H^H)`` for a stack of channels."""
    n_r, n_t = H.shape[-2:]
    G = np.eye(n_r) + (snr / n_t) * (H @ np.conj(np.swapaxes(H, -1, -2)))
    sign, logdet = np.linalg.slogdet(G)
    return logdet / np.log(2)


def _run_block(book: Codebook, n_r: int, snr: float, theta: float, seed: int, s_idx: int,
               b_idx: int, count: int, decoder: str, rate: float):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(s_idx, b_idx)))
    coords = 2 * rng.integers(0, book.M, size=(count, 2 * book.K)) - (book.M - 1)
    H = crandn(rng, count, n_r, book.n_t)
    W = crandn(rng, count, n_r, book.T)
    X = book.matrices(coords)
    Y = theta * (H @ X) + W
    if decoder == "sphere":
        est, info = sphere_decode_batch(book, Y, H, theta)
        fb = info.fallback
    else:
        est = exhaustive_decode_batch(book, Y, H, theta)
        fb = False
    err = int(np.any(est != coords, axis=1).sum())
    out = int((capacity_bits(H, snr) < rate).sum())
    return err, out, fb


def simulate_wer(book: Codebook, snr_db, trials: int, seed: int = 0, decoder: str = "sphere",
                 n_r: int | None = None, workers: int = 1, block: int = BLOCK) -> SimResult:
    """Codeword error rate and outage (on the same channel draws) over an SNR grid."""
    n_r = book.n_t if n_r is None else n_r
    snr_db = [float(s) for s in snr_db]
    if trials < 0:
        raise ValueError("trials must be non-negative")
    if decoder not in ("sphere", "exhaustive"):
        raise ValueError(f"unknown decoder {decoder!r}")
    if decoder == "exhaustive" and book.size > EXHAUSTIVE_CAP:
        raise ValueError(f"exhaustive decoding limited to {EXHAUSTIVE_CAP} codewords, book has {book.size}")
    rate = book.rate_bpcu
    jobs = []
    for s, sdb in enumerate(snr_db):
        snr = 10 ** (sdb / 10)
        theta = normalize(book, snr)
        for b, start in enumerate(range(0, trials, block)):
            jobs.append((s, (book, n_r, snr, theta, seed, s, b, min(block, trials - start), decoder, rate)))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            res = list(ex.map(_run_block, *zip(*[j[1] for j in jobs])))
    else:
        res = [_run_block(*j[1]) for j in jobs]
    errs = np.zeros(len(snr_db), dtype=np.int64)
    outs = np.zeros(len(snr_db), dtype=np.int64)
    fb = False
    for (s, _), (e, o, f) in zip(jobs, res):
        errs[s] += e
        outs[s] += o
        fb |= f
    n = np.full(len(snr_db), trials)
    wer = np.where(n > 0, errs / np.maximum(n, 1), np.nan)
    out = np.where(n > 0, outs / np.maximum(n, 1), np.nan)
    lo, hi = wilson_interval(errs, n)
    olo, ohi = wilson_interval(outs, n)
    return SimResult(
        snr_db=snr_db, trials=n.tolist(), errors=errs.tolist(), wer=wer.tolist(),
        wer_lo=lo.tolist(), wer_hi=hi.tolist(), outage=out.tolist(), outage_lo=olo.tolist(),
        outage_hi=ohi.tolist(), decoder=decoder, seed=seed, rate_bpcu=rate, n_t=book.n_t,
        n_r=n_r, T=book.T, M=book.M, fallback=bool(fb),
        meta={"block": block, "shape": book.shape, "E_max": book.e_max, "E_max_exact": book.e_max_exact},
    )


def simulate_outage(n_t: int, n_r: int, rate_bpcu: float, snr_db, trials: int, seed: int = 0,
                    block: int = 100_000) -> dict:
    """Monte Carlo outage probability ``P(log2 det(I + snr/n_t H H^H) < R)``."""
    snr_db = [float(s) for s in snr_db]
    probs, lo_all, hi_all, counts = [], [], [], []
    for s, sdb in enumerate(snr_db):
        snr = 10 ** (sdb / 10)
        cnt = 0
        for b, start in enumerate(range(0, trials, block)):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(s, b)))
            H = crandn(rng, min(block, trials - start), n_r, n_t)
            cnt += int((capacity_bits(H, snr) < rate_bpcu).sum())
        counts.append(cnt)
        probs.append(cnt / trials if trials else float("nan"))
    lo, hi = wilson_interval(np.array(counts), np.full(len(counts), trials))
    return {"snr_db": snr_db, "outage": probs, "outage_lo": lo.tolist(), "outage_hi": hi.tolist(),
            "counts": counts, "trials": trials, "n_t": n_t, "n_r": n_r, "rate_bpcu": rate_bpcu,
            "seed": seed}


@dataclass
class SlopeEstimate:
    slope: float
    band: tuple[float, float]
    points: list[float]
    insufficient: bool
    reason: str = ""


def estimate_diversity_slope(result: SimResult, window: int = 3, min_errors: int = 20) -> SlopeEstimate:
    """Least-squares slope of ``-log10 WER`` against ``log10 SNR`` over the highest usable points."""
    idx = [i for i, e in enumerate(result.errors) if e >= min_errors]
    if len(idx) < window:
        return SlopeEstimate(float("nan"), (float("nan"), float("nan")), [], True,
                             f"only {len(idx)} points with >= {min_errors} errors")
    use = sorted(idx, key=lambda i: result.snr_db[i])[-window:]
    x = np.array([result.snr_db[i] for i in use]) / 10
    y = -np.log10([result.wer[i] for i in use])
    slope = float(np.polyfit(x, y, 1)[0])
    # steepest / shallowest fits through the Wilson endpoints
    lo = np.array([result.wer_lo[i] for i in use])
    hi = np.array([result.wer_hi[i] for i in use])
    ramp = np.linspace(0, 1, len(use))
    steep = np.where(ramp < 0.5, hi, lo)
    steep[len(use) // 2] = result.wer[use[len(use) // 2]] if len(use) % 2 else steep[len(use) // 2]
    shallow = np.where(ramp < 0.5, lo, hi)
    shallow[len(use) // 2] = result.wer[use[len(use) // 2]] if len(use) % 2 else shallow[len(use) // 2]
    s1 = float(np.polyfit(x, -np.log10(np.maximum(steep, 1e-300)), 1)[0])
    s2 = float(np.polyfit(x, -np.log10(np.maximum(shallow, 1e-300)), 1)[0])
    return SlopeEstimate(slope, (min(s1, s2), max(s1, s2)), [result.snr_db[i] for i in use], False)


def crossing_db(snr_db, curve, level: float) -> float | None:
    """SNR (dB) where a decreasing curve crosses ``level``, by log-linear interpolation."""
    snr_db = np.asarray(snr_db, dtype=float)
    c = np.asarray(curve, dtype=float)
    for i in range(len(c) - 1):
        a, b = c[i], c[i + 1]
        if a >= level > b and b > 0:
            la, lb, lv = np.log10(a), np.log10(b), np.log10(level)
            return float(snr_db[i] + (la - lv) / (la - lb) * (snr_db[i + 1] - snr_db[i]))
    return None
