"""Command-line front end.

Subcommands
-----------
constants              table of the limit-law constants over an alpha grid
simulate               dump one path (t, S, N, Q) to path.csv
verify-limit           empirical law vs limit CDF; exit 0 iff KS <= tolerance
verify-representation  coupled-mode rate table; exit 0 iff medians decrease
envelope               iterated-logarithm envelope exceedance report
report                 aggregate result.json files into a summary CSV

Exit codes: 0 pass, 2 tolerance/criterion failure, 1 usage or runtime error.
Every run writes the exact resolved configuration (after overrides) next to
its results; re-running from that file reproduces all outputs byte-for-byte
apart from wall-clock fields.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import montecarlo, theory
from .errors import BkprocError, ConfigError
from .montecarlo import ExperimentConfig
from .processes import renewal_many
from .stats import EmpiricalSample, ecdf

__all__ = ["main"]

WORKERS_ENV_VAR = "BKPROC_WORKERS"

CONSTANTS_HEADER = [
    "alpha", "b_alpha", "kappa_alpha", "gamma", "H",
    "lil_const_iid", "lil_const_lrd", "alpha_domain_ok",
]


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for tolerance failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bkproc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_const = sub.add_parser("constants", help="limit-law constant table (CSV)")
    p_const.add_argument("--grid", default="",
                         help="comma-separated alpha values in (0,1); default 0.05..0.95")
    p_const.add_argument("--out", default="", help="output CSV path (default stdout)")

    for name in ("simulate", "verify-limit", "verify-representation", "envelope"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--T", type=int, default=None)
        p.add_argument("--replications", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--alpha", type=float, default=None,
                       help="override alpha (lrd / coupled_fbm models)")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)

    p_rep = sub.add_parser("report", help="aggregate result.json files")
    p_rep.add_argument("--dir", required=True, help="directory to scan")
    p_rep.add_argument("--out", default="", help="output CSV path (default stdout)")
    return parser


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _apply_overrides(data: dict, args: argparse.Namespace) -> dict:
    data = dict(data)
    if args.T is not None:
        data["T"] = args.T
    if args.replications is not None:
        data["replications"] = args.replications
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.workers is not None:
        data["workers"] = args.workers
    if args.tolerance is not None:
        data["tolerance"] = args.tolerance
    if args.alpha is not None:
        model = dict(data.get("model", {}))
        if model.get("kind") not in ("lrd", "coupled_fbm"):
            raise ConfigError("--alpha override applies to lrd/coupled_fbm models only")
        model["alpha"] = args.alpha
        data["model"] = model
    return data


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    path = Path(args.config)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "workers" not in raw and WORKERS_ENV_VAR in os.environ:
        raw["workers"] = int(os.environ[WORKERS_ENV_VAR])
    return ExperimentConfig.from_dict(_apply_overrides(raw, args))


def _write_resolved_config(out_dir: Path, config: ExperimentConfig) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    montecarlo._atomic_write_text(out_dir / "resolved_config.json", text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _parse_grid(text: str) -> list[float]:
    if not text:
        return [round(0.05 * k, 2) for k in range(1, 20)]
    try:
        grid = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad alpha grid: {exc}") from exc
    if not grid or any(not 0.0 < a < 1.0 for a in grid):
        raise ConfigError("alpha grid values must lie strictly inside (0, 1)")
    return grid


def cmd_constants(args: argparse.Namespace) -> int:
    grid = _parse_grid(args.grid)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CONSTANTS_HEADER)
    for alpha in grid:
        b = theory.b_alpha(alpha)
        kappa = theory.kappa_alpha(alpha)
        gamma = theory.gamma_exponent(alpha)
        hurst = 1.0 - 0.5 * alpha
        lil_iid = 2.0**0.25  # mu = sigma = 1
        lil_lrd = 2.0 ** (1.0 - 0.25 * alpha)  # c = mu = 1
        writer.writerow(
            [repr(float(alpha)), repr(b), repr(kappa), repr(gamma), repr(hurst),
             repr(lil_iid), repr(lil_lrd),
             "true" if theory.check_alpha_domain(alpha) else "false"]
        )
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = Path(args.out)
    _write_resolved_config(out_dir, config)
    seed = montecarlo.derive_seed(config.master_seed, 0)
    path = montecarlo._build_sum_path(config.model, config.T, seed)
    mu = path.mu
    ts = np.arange(0, config.T + 1, dtype=np.int64)
    n_values = renewal_many(path, mu * ts.astype(float))
    q_values = path.cumulative[ts] + mu * n_values - 2.0 * mu * ts

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "S", "N", "Q"])
    for t, n in zip(ts, n_values):
        writer.writerow([int(t), repr(float(path.cumulative[t])), int(n),
                         repr(float(q_values[t]))])
    montecarlo._atomic_write_text(out_dir / "path.csv", buf.getvalue())
    return 0


def _write_cdf_compare(out_dir: Path, result, config: ExperimentConfig) -> None:
    resolved = montecarlo._resolve_model(config.model)
    cdf = montecarlo._limit_cdf_for(config, resolved) or montecarlo._PointMassAtZero()
    sample = EmpiricalSample.from_values(result.samples)
    theory_vals = np.atleast_1d(cdf.cdf(sample.values))
    ecdf_vals = np.atleast_1d(ecdf(sample, sample.values))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y", "ecdf", "theory_cdf"])
    for y, e, f in zip(sample.values, ecdf_vals, theory_vals):
        writer.writerow([repr(float(y)), repr(float(e)), repr(float(f))])
    montecarlo._atomic_write_text(out_dir / "cdf_compare.csv", buf.getvalue())


def cmd_verify_limit(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if config.tolerance is None:
        raise ConfigError("verify-limit needs a KS tolerance (config key or --tolerance)")
    out_dir = Path(args.out)
    _write_resolved_config(out_dir, config)
    result = montecarlo.run_limit_experiment(config, out_dir=out_dir)
    _write_cdf_compare(out_dir, result, config)
    print(f"KS vs theory: {result.ks_vs_theory:.6f} (tolerance {config.tolerance})")
    if result.ks_vs_theory <= config.tolerance:
        return 0
    print(
        f"tolerance failure: KS {result.ks_vs_theory:.6f} > {config.tolerance}",
        file=sys.stderr,
    )
    return 2


def cmd_verify_representation(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = Path(args.out)
    _write_resolved_config(out_dir, config)
    table = montecarlo.run_rate_experiment(config, out_dir=out_dir)
    for family in table.families():
        med = table.medians(family)
        trend = " -> ".join(f"{m:.4g}" for _, m in med)
        print(f"{family}: median ratio {trend}")
    if table.all_strictly_decreasing():
        return 0
    print("rate check failed: median ratios do not decrease", file=sys.stderr)
    return 2


def cmd_envelope(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = Path(args.out)
    _write_resolved_config(out_dir, config)
    report = montecarlo.run_envelope_experiment(config, out_dir=out_dir)
    for lam, frac in report.exceedance.items():
        print(f"exceedance above {lam} x envelope: {frac:.4f}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    base = Path(args.dir)
    if not base.is_dir():
        raise ConfigError(f"{base} is not a directory")
    rows = []
    for path in sorted(base.rglob("result.json")):
        data = json.loads(path.read_text())
        rows.append(
            [
                str(path.parent),
                data.get("kind", ""),
                data.get("config_digest", ""),
                data.get("T", ""),
                data.get("replications", ""),
                data.get("ks_vs_theory", ""),
                (data.get("envelope_exceedance") or {}).get("1.5", ""),
                data.get("wall_clock_seconds", ""),
            ]
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["path", "kind", "config_digest", "T", "replications",
                     "ks_vs_theory", "exceedance_1.5", "wall_clock_seconds"])
    writer.writerows(rows)
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "verify-limit": cmd_verify_limit,
    "verify-representation": cmd_verify_representation,
    "envelope": cmd_envelope,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except BkprocError as exc:
        print(f"bkproc: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"bkproc: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
