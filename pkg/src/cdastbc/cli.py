"""Command line interface: construct, table, verify, simulate, outage.

Exit status: 0 success, 1 verification violation, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

OUT_ENV = "CDASTBC_OUT_DIR"

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    pass


def _out_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get(OUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text if text.endswith("\n") else text + "\n")


def _parse_range(text: str) -> list[int]:
    if not text:
        return []
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",") if v]


def _load_spec(args):
    from .cda import CodeSpec, construct

    if getattr(args, "spec", None):
        return CodeSpec.from_json(json.loads(Path(args.spec).read_text()))
    return construct(args.n, args.method)


# -- run config --------------------------------------------------------------------


@dataclass
class CodeRef:
    method: str = "A"
    n: int = 2
    delete_rows: list[int] = field(default_factory=list)
    spec_file: str | None = None


@dataclass
class RunConfig:
    """Declarative simulation run (JSON)."""

    code: CodeRef
    snr_db: list[float]
    trials: int
    seed: int = 0
    M: int | None = 2
    r: float | None = None
    n_r: int | None = None
    decoder: str = "sphere"
    workers: int | None = None
    csv: str | None = None
    json: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        code = d.get("code", {})
        cnames = {f.name for f in dataclasses.fields(CodeRef)}
        if set(code) - cnames:
            raise ConfigError(f"unknown code fields: {sorted(set(code) - cnames)}")
        for key in ("snr_db", "trials"):
            if key not in d:
                raise ConfigError(f"missing field {key!r}")
        cfg = cls(code=CodeRef(**code), **{k: v for k, v in d.items() if k != "code"})
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if not isinstance(self.trials, int) or self.trials <= 0:
            raise ConfigError("trials must be a positive integer")
        if not self.snr_db:
            raise ConfigError("snr_db must be non-empty")
        if self.decoder not in ("sphere", "exhaustive"):
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        if (self.M is None) == (self.r is None):
            raise ConfigError("give exactly one of M (fixed constellation) or r (multiplexing gain sizing)")
        if self.M is not None and (self.M < 2 or self.M % 2):
            raise ConfigError("M must be an even integer >= 2")
        if self.code.method not in ("A", "B", "HEX", "perfect3x3") and self.code.spec_file is None:
            raise ConfigError(f"unknown method {self.code.method!r}")


def default_workers() -> int:
    return os.cpu_count() or 1


def _book_for(cfg: RunConfig, M: int):
    from .cda import CodeSpec, construct
    from .codebook import build_codebook, row_delete

    if cfg.code.spec_file:
        spec = CodeSpec.from_json(json.loads(Path(cfg.code.spec_file).read_text()))
    else:
        spec = construct(cfg.code.n, cfg.code.method)
    book = build_codebook(spec, M)
    if cfg.code.delete_rows:
        book = row_delete(book, cfg.code.delete_rows)
    return book


def run_config(cfg: RunConfig):
    from .simulator import SimResult, simulate_wer
    from .verify import size_for_rate

    workers = cfg.workers or default_workers()
    if cfg.M is not None:
        book = _book_for(cfg, cfg.M)
        return simulate_wer(book, cfg.snr_db, cfg.trials, cfg.seed, cfg.decoder, cfg.n_r, workers)
    parts = []
    for i, s in enumerate(cfg.snr_db):
        n = cfg.code.n if cfg.code.method != "perfect3x3" else 3
        M = size_for_rate(10 ** (s / 10), cfg.r, n)
        book = _book_for(cfg, M)
        parts.append(simulate_wer(book, [s], cfg.trials, cfg.seed + i, cfg.decoder, cfg.n_r, workers))
    merged = {k: [] for k in ("snr_db", "trials", "errors", "wer", "wer_lo", "wer_hi", "outage", "outage_lo", "outage_hi")}
    for p in parts:
        for k in merged:
            merged[k] += getattr(p, k)
    last = parts[-1]
    return SimResult(**merged, decoder=cfg.decoder, seed=cfg.seed, rate_bpcu=float("nan"), n_t=last.n_t,
                     n_r=last.n_r, T=last.T, M=0, fallback=any(p.fallback for p in parts),
                     meta={"sizing": f"M^2 >= SNR^(r/n), r={cfg.r}", "M_per_point": [p.M for p in parts],
                           "rate_per_point": [p.rate_bpcu for p in parts]})


# -- commands ----------------------------------------------------------------------------


def cmd_construct(args) -> int:
    from .cda import UnsupportedCase, construct

    try:
        spec = construct(args.n, args.method)
    except UnsupportedCase as e:
        print(f"error: unsupported case: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    _write(Path(args.out) if args.out else None, spec.dumps())
    return EXIT_OK


def cmd_table(args) -> int:
    from .tables import render_csv, render_text, table_rows

    ns = _parse_range(args.range)
    if any(n < 2 for n in ns):
        print("error: table rows need n >= 2", file=sys.stderr)
        return EXIT_USAGE
    rows = table_rows(args.method, ns)
    print(render_text(rows))
    mismatches = [r.n for r in rows if not r.match]
    print(f"\n{len(rows) - len(mismatches)}/{len(rows)} rows match the reference table"
          + (f"; differing rows: {mismatches}" if mismatches else ""))
    if args.csv:
        _write(Path(args.csv), render_csv(rows))
    if args.strict and mismatches:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_verify(args) -> int:
    from .cda import verify_non_norm
    from .codebook import build_codebook
    from .verify import (
        check_clearly_optimal_scaling,
        check_det_in_center,
        check_interlacing_and_weyl,
        check_mismatch_bound,
        check_nvd,
        corrupted_gamma_spec,
    )

    suites = args.suite
    if "all" in suites:
        suites = ["nvd", "center", "nonnorm", "scaling", "eigen"]
    report: dict = {"suites": {}}
    ok = True
    try:
        spec = _load_spec(args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.corrupt_gamma:
        spec = corrupted_gamma_spec(spec)
    report["spec"] = spec.to_json()
    for s in suites:
        if s == "nvd":
            rep = check_nvd(build_codebook(spec, args.M), args.mode, args.samples, args.seed, args.workers)
            res = rep.to_json()
        elif s == "center":
            res = check_det_in_center(spec, args.trials, args.seed).to_json()
        elif s == "nonnorm":
            res = verify_non_norm(spec, 1, args.samples, args.seed).to_json() if spec.n > 1 else {"ok": True}
        elif s == "scaling":
            res = {f"r={r}": check_clearly_optimal_scaling(spec, r, args.snr_db, seed=args.seed).to_json()
                   for r in range(0, spec.n + 1)}
            res["ok"] = all(v["ok"] for v in res.values())
        elif s == "eigen":
            parts = [check_mismatch_bound(trials=args.trials, seed=args.seed)]
            parts += check_interlacing_and_weyl(trials=args.trials, seed=args.seed)
            res = {p.name: p.to_json() for p in parts}
            res["ok"] = all(p.ok for p in parts)
        else:
            print(f"error: unknown suite {s!r}", file=sys.stderr)
            return EXIT_USAGE
        report["suites"][s] = res
        ok &= bool(res["ok"])
        print(f"{s}: {'pass' if res['ok'] else 'FAIL'}" + (f" (min |det| exact = {res['min_abs_det_exact']:.6g})" if s == "nvd" else ""))
    report["ok"] = ok
    if args.out:
        _write(Path(args.out), json.dumps(report, indent=2, default=str))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text())
        cfg = RunConfig.from_dict(raw)
    except (OSError, json.JSONDecodeError, ConfigError, TypeError) as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.workers is not None:
        cfg.workers = args.workers
    res = run_config(cfg)
    out = _out_dir(args.out_dir)
    csv_path = out / (cfg.csv or "simulation.csv")
    json_path = out / (cfg.json or "simulation.json")
    _write(csv_path, res.to_csv())
    _write(json_path, json.dumps({"config": cfg.to_dict(), "result": res.to_json()}, indent=2))
    sys.stdout.write(res.to_csv())
    return EXIT_OK


def cmd_outage(args) -> int:
    from .simulator import simulate_outage

    if args.trials <= 0:
        print("error: trials must be positive", file=sys.stderr)
        return EXIT_USAGE
    res = simulate_outage(args.n_t, args.n_r, args.rate, args.snr_db, args.trials, args.seed)
    text = json.dumps(res, indent=2)
    _write(Path(args.out) if args.out else None, text)
    return EXIT_OK


def _floats(text: str) -> list[float]:
    if ".." in text:
        a, rest = text.split("..", 1)
        b, _, step = rest.partition(":")
        step = float(step or 2)
        vals, v = [], float(a)
        while v <= float(b) + 1e-9:
            vals.append(round(v, 10))
            v += step
        return vals
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdastbc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build a CodeSpec and print it as JSON")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--method", choices=["A", "B", "HEX", "perfect3x3"], default="A")
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    t = sub.add_parser("table", help="recompute the non-norm tables and diff against the references")
    t.add_argument("method", choices=["A", "B"])
    t.add_argument("range", nargs="?", default="2..20", help="e.g. 2..20 or 3,5,7")
    t.add_argument("--csv")
    t.add_argument("--strict", action="store_true", help="exit 1 when any row differs")
    t.set_defaults(func=cmd_table)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--n", type=int, default=2)
    v.add_argument("--method", choices=["A", "B", "HEX", "perfect3x3"], default="A")
    v.add_argument("--spec", help="CodeSpec JSON file (overrides --n/--method)")
    v.add_argument("--M", type=int, default=2)
    v.add_argument("--suite", nargs="+", default=["nvd"],
                   choices=["nvd", "center", "nonnorm", "scaling", "eigen", "all"])
    v.add_argument("--mode", choices=["auto", "exhaustive", "sampled"], default="auto")
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--snr-db", type=_floats, default=[20.0, 30.0, 40.0])
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=default_workers())
    v.add_argument("--corrupt-gamma", action="store_true", help="replace gamma by a relative norm (negative control)")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="run a simulation from a JSON config")
    s.add_argument("config")
    s.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or .)")
    s.add_argument("--workers", type=int, help="default: config value, else CPU count")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("outage", help="Monte Carlo outage probability")
    o.add_argument("--n-t", type=int, required=True)
    o.add_argument("--n-r", type=int, required=True)
    o.add_argument("--rate", type=float, required=True)
    o.add_argument("--snr-db", type=_floats, required=True, help="e.g. 8..20:2 or 10,20")
    o.add_argument("--trials", type=int, default=100_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out")
    o.set_defaults(func=cmd_outage)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
