"""Experiment orchestration: replication fan-out, normalization, persistence.

Every replication is a pure function of a per-replication seed derived from
the master seed by a counter-based SplitMix64 mix, so results are independent
of execution order and worker count (bit-identical sample multisets), runs
are resumable from checkpoints, and any stored sample can be reproduced from
its recorded seed alone.

Three experiment drivers:

* run_limit_experiment - simulate Y to the renewal horizon, record the
  deviation process at the configured time, normalize (T^{-1/4} |Q(T/mu)| in
  the weak-dependence regime, T^{-(1-a/2)^2} Q(T) in the long-memory regime)
  and compare the empirical law against the matching limit CDF;
* run_rate_experiment - coupled modes over a dyadic horizon grid, reporting
  medians of representation errors divided by their target rates;
* run_envelope_experiment - fraction of paths whose sup statistics exceed
  multiples of the iterated-logarithm envelopes.

Persistence: result.json (summary + config digest), samples.csv (one row per
replication), checkpoint.json (versioned, atomically replaced).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from . import sequences
from .errors import ConfigError, ExperimentInterrupted, HorizonExhausted
from .processes import (
    CoupledFbmSpec,
    CoupledWienerSpec,
    coupled_fbm,
    coupled_wiener,
    default_horizon,
    partial_sums,
    q_process,
    representation_error_fbm,
    representation_error_wiener,
)
from .stats import EmpiricalSample, exceedance_fraction, ks_distance
from .theory import LimitCdf, TheoryParams, lil_envelope_iid, lil_envelope_lrd

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "EnvelopeReport",
    "RateTable",
    "ReplicationRecord",
    "derive_seed",
    "run_limit_experiment",
    "run_envelope_experiment",
    "run_rate_experiment",
    "ExperimentModel",
    "experiment_model_to_dict",
    "experiment_model_from_dict",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

ENVELOPE_MULTIPLIERS = (1.0, 1.25, 1.5)

NORMALIZATION_IID = "iid_quarter"
NORMALIZATION_LRD = "lrd_exponent"

CHECKPOINT_VERSION = 1

# Hard stop for geometric horizon growth inside one replication.
_HORIZON_CAP = 1 << 25

ExperimentModel = Union[sequences.ModelSpec, CoupledWienerSpec, CoupledFbmSpec]


def derive_seed(master_seed: int, replication_index: int) -> int:
    """Counter-based 64-bit seed: SplitMix64 finalizer applied to
    master + (index + 1) * golden-gamma.

    The mix is a bijection of the counter stream for any fixed master, so
    distinct indices can never collide; the algorithm is pinned here so runs
    reproduce across platforms and thread counts.
    """
    if master_seed < 0 or replication_index < 0:
        raise ValueError("master seed and replication index must be >= 0")
    x = (master_seed + (replication_index + 1) * _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def experiment_model_to_dict(model: ExperimentModel) -> dict:
    if isinstance(model, CoupledWienerSpec):
        return {"kind": "coupled_wiener", "mu": model.mu, "sigma": model.sigma}
    if isinstance(model, CoupledFbmSpec):
        return {
            "kind": "coupled_fbm",
            "alpha": model.alpha,
            "mu": model.mu,
            "c": model.c,
        }
    return sequences.model_to_dict(model)


def experiment_model_from_dict(data: dict) -> ExperimentModel:
    kind = data.get("kind")
    if kind == "coupled_wiener":
        return CoupledWienerSpec(mu=float(data["mu"]), sigma=float(data["sigma"]))
    if kind == "coupled_fbm":
        return CoupledFbmSpec(
            alpha=float(data["alpha"]), mu=float(data["mu"]), c=float(data["c"])
        )
    return sequences.model_from_dict(data)


def _default_normalization(model: ExperimentModel) -> str:
    if isinstance(model, (sequences.LRD, CoupledFbmSpec)):
        return NORMALIZATION_LRD
    return NORMALIZATION_IID


@dataclass(frozen=True)
class _ResolvedModel:
    """Constants the aggregation layer needs, resolved once per experiment."""

    mu: float
    sigma_longrun: float | None = None
    params: TheoryParams | None = None


def _resolve_model(model: ExperimentModel) -> _ResolvedModel:
    if isinstance(model, CoupledWienerSpec):
        return _ResolvedModel(mu=model.mu, sigma_longrun=model.sigma)
    if isinstance(model, CoupledFbmSpec):
        return _ResolvedModel(mu=model.mu, params=model.theory_params())
    if isinstance(model, sequences.LRD):
        return _ResolvedModel(
            mu=sequences.moments_of(model).mu,
            params=sequences.theory_params_for(model),
        )
    moments = sequences.moments_of(model)
    return _ResolvedModel(mu=moments.mu, sigma_longrun=moments.sigma_longrun)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's outputs, plus run knobs.

    The digest covers only the result-determining fields (model, T,
    replications, master_seed, normalization, checkpoints, delta); workers
    and tolerance affect scheduling and gating, never the numbers.
    """

    model: ExperimentModel
    T: int
    replications: int
    master_seed: int
    normalization: str = ""
    checkpoints: tuple[int, ...] = ()
    workers: int = 1
    delta: float = 0.05
    tolerance: float | None = None

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.normalization:
            object.__setattr__(self, "normalization", _default_normalization(self.model))
        if self.normalization not in (NORMALIZATION_IID, NORMALIZATION_LRD):
            raise ConfigError(f"unknown normalization {self.normalization!r}")
        if self.normalization != _default_normalization(self.model):
            raise ConfigError(
                f"normalization {self.normalization!r} inconsistent with model kind "
                f"{type(self.model).__name__}"
            )
        if any(c < 1 for c in self.checkpoints) or any(
            b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])
        ):
            raise ConfigError("checkpoints must be strictly increasing positive integers")

    def to_dict(self) -> dict:
        return {
            "model": experiment_model_to_dict(self.model),
            "T": self.T,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "normalization": self.normalization,
            "checkpoints": list(self.checkpoints),
            "workers": self.workers,
            "delta": self.delta,
            "tolerance": self.tolerance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {
            "model",
            "T",
            "replications",
            "master_seed",
            "normalization",
            "checkpoints",
            "workers",
            "delta",
            "tolerance",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("model", "T", "replications", "master_seed"):
            if key not in data:
                raise ConfigError(f"missing required config key {key!r}")
        try:
            model = experiment_model_from_dict(data["model"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad model spec: {exc}") from exc
        tol = data.get("tolerance")
        return cls(
            model=model,
            T=_as_int(data["T"], "T"),
            replications=_as_int(data["replications"], "replications"),
            master_seed=_as_int(data["master_seed"], "master_seed"),
            normalization=str(data.get("normalization", "")),
            checkpoints=tuple(_as_int(c, "checkpoints") for c in data.get("checkpoints", ())),
            workers=_as_int(data.get("workers", 1), "workers"),
            delta=float(data.get("delta", 0.05)),
            tolerance=None if tol is None else float(tol),
        )

    def digest(self) -> str:
        payload = {
            "model": experiment_model_to_dict(self.model),
            "T": self.T,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "normalization": self.normalization,
            "checkpoints": list(self.checkpoints),
            "delta": self.delta,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"config field {name!r} must be an integer, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Replication worker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplicationRecord:
    index: int
    seed: int
    raw_q: float
    normalized_q: float
    sup_abs_q: float
    sup_abs_q_scaled: float
    sup_abs_renewal: float
    horizon: int

    def to_row(self) -> list:
        return [
            self.index,
            self.seed,
            self.raw_q,
            self.normalized_q,
            self.sup_abs_q,
            self.sup_abs_q_scaled,
            self.sup_abs_renewal,
            self.horizon,
        ]

    @classmethod
    def from_row(cls, row: list) -> "ReplicationRecord":
        return cls(
            index=int(row[0]),
            seed=int(row[1]),
            raw_q=float(row[2]),
            normalized_q=float(row[3]),
            sup_abs_q=float(row[4]),
            sup_abs_q_scaled=float(row[5]),
            sup_abs_renewal=float(row[6]),
            horizon=int(row[7]),
        )


def _build_sum_path(model: ExperimentModel, t: int, seed: int):
    """Simulate the driving sequence out to a horizon that resolves every
    renewal query up to level max(T, mu T), growing geometrically on demand."""
    if isinstance(model, CoupledWienerSpec):
        return coupled_wiener(t, model.mu, model.sigma, seed).sum
    if isinstance(model, CoupledFbmSpec):
        return coupled_fbm(t, model.theory_params(), seed).sum
    mu = sequences.moments_of(model).mu
    horizon = default_horizon(t, mu)
    # resolve every query the sup grids make: S(t) and S(t/mu) for t <= T,
    # first passage at levels up to max(T, mu T)
    need = max(float(t), mu * t)
    min_horizon = math.ceil(max(t, t / mu))
    while True:
        y = sequences.generate(model, max(horizon, min_horizon), seed)
        path = partial_sums(y, mu)
        if path.running_max[-1] > need:
            return path
        horizon *= 2
        if horizon > _HORIZON_CAP:
            raise HorizonExhausted(
                f"horizon cap {_HORIZON_CAP} reached before S exceeded {need:.6g}"
            )


def _replication_payload(config: ExperimentConfig, index: int) -> tuple:
    return (config.model, config.T, config.normalization, index,
            derive_seed(config.master_seed, index))


def _run_one_replication(payload: tuple) -> ReplicationRecord:
    model, t, normalization, index, seed = payload
    try:
        path = _build_sum_path(model, t, seed)
        mu = path.mu
        if normalization == NORMALIZATION_IID:
            # sample Q(T/mu); sup statistics always run over integer t <= T
            series = q_process(path, [t / mu], sup_horizon=float(t))
            raw = float(series.q[0])
            normalized = t ** (-0.25) * abs(raw)
        else:
            series = q_process(path, [float(t)])
            raw = float(series.q[0])
            alpha = model.alpha if isinstance(model, CoupledFbmSpec) else model.weights.alpha
            normalized = t ** (-((1.0 - 0.5 * alpha) ** 2)) * raw
    except HorizonExhausted as exc:
        raise HorizonExhausted(f"replication {index}: {exc}") from exc
    return ReplicationRecord(
        index=index,
        seed=seed,
        raw_q=raw,
        normalized_q=normalized,
        sup_abs_q=series.sup_abs_q,
        sup_abs_q_scaled=series.sup_abs_q_scaled,
        sup_abs_renewal=series.sup_abs_renewal,
        horizon=series.horizon,
    )


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _checkpoint_path(out_dir: Path) -> Path:
    return out_dir / "checkpoint.json"


def _save_checkpoint(out_dir: Path, digest: str, records: dict[int, ReplicationRecord]) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "config_digest": digest,
        "records": [records[i].to_row() for i in sorted(records)],
    }
    _atomic_write_text(_checkpoint_path(out_dir), json.dumps(payload))


def _load_checkpoint(out_dir: Path, digest: str) -> dict[int, ReplicationRecord]:
    path = _checkpoint_path(out_dir)
    if not path.exists():
        return {}
    payload = json.loads(path.read_text())
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {payload.get('version')}")
    if payload.get("config_digest") != digest:
        raise ConfigError(
            "checkpoint belongs to a different configuration "
            f"({payload.get('config_digest')} != {digest})"
        )
    records = [ReplicationRecord.from_row(row) for row in payload["records"]]
    return {r.index: r for r in records}


def _run_replications(config: ExperimentConfig, out_dir: Path | None = None,
                      resume: bool = True, stop_after: int | None = None
                      ) -> list[ReplicationRecord]:
    """Run (or finish) all replications; returns records sorted by index.

    stop_after limits the number of *new* replications computed in this call;
    when the limit is reached the checkpoint is saved and
    ExperimentInterrupted is raised (used to exercise kill-and-resume).
    """
    digest = config.digest()
    records: dict[int, ReplicationRecord] = {}
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        if resume:
            records = _load_checkpoint(out_dir, digest)
    todo = [i for i in range(config.replications) if i not in records]

    flush_every = max(1, config.replications // 20)

    def flush() -> None:
        if out_dir is not None:
            _save_checkpoint(out_dir, digest, records)

    if stop_after is not None or config.workers == 1:
        fresh = 0
        for index in todo:
            records[index] = _run_one_replication(_replication_payload(config, index))
            fresh += 1
            if fresh % flush_every == 0:
                flush()
            if stop_after is not None and fresh >= stop_after and len(records) < config.replications:
                flush()
                raise ExperimentInterrupted(
                    f"stopped after {fresh} new replications "
                    f"({len(records)}/{config.replications} done)"
                )
    elif todo:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {
                pool.submit(_run_one_replication, _replication_payload(config, i)): i
                for i in todo
            }
            done_since_flush = 0
            for future in as_completed(futures):
                record = future.result()
                records[record.index] = record
                done_since_flush += 1
                if done_since_flush >= flush_every:
                    flush()
                    done_since_flush = 0
    flush()
    return [records[i] for i in sorted(records)]


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def _limit_cdf_for(config: ExperimentConfig, resolved: _ResolvedModel) -> LimitCdf | None:
    if config.normalization == NORMALIZATION_LRD:
        return LimitCdf(kind="lrd", params=resolved.params)
    if resolved.sigma_longrun == 0.0:
        return None  # degenerate drift-only model; limit law is a point mass at 0
    return LimitCdf(kind="iid", mu=resolved.mu, sigma=resolved.sigma_longrun)


class _PointMassAtZero:
    """CDF of the degenerate limit when sigma = 0."""

    @staticmethod
    def cdf(y):
        arr = (np.asarray(y, dtype=float) >= 0.0).astype(float)
        return float(arr) if np.ndim(y) == 0 else arr


def _envelope_value(config: ExperimentConfig, resolved: _ResolvedModel) -> float:
    if config.normalization == NORMALIZATION_LRD:
        return lil_envelope_lrd(config.T, resolved.params)
    return lil_envelope_iid(config.T, resolved.mu, resolved.sigma_longrun)


def _sup_for_envelope(record: ReplicationRecord, normalization: str) -> float:
    # Weak-dependence envelope bounds sup |Q(t/mu)|; the long-memory one |Q(t)|.
    if normalization == NORMALIZATION_IID:
        return record.sup_abs_q_scaled
    return record.sup_abs_q


def _ratio_summary(records: list[ReplicationRecord], config: ExperimentConfig,
                   resolved: _ResolvedModel) -> dict:
    log_t = math.log(config.T)
    values = []
    degenerate = 0
    for r in records:
        if r.sup_abs_renewal == 0.0:
            degenerate += 1
            continue
        values.append(r.sup_abs_q_scaled / math.sqrt(log_t * r.sup_abs_renewal))
    summary = {
        "median": float(np.median(values)) if values else None,
        "q1": float(np.percentile(values, 25)) if values else None,
        "q3": float(np.percentile(values, 75)) if values else None,
        "degenerate": degenerate,
    }
    if resolved.sigma_longrun is not None:
        summary["reference"] = resolved.sigma_longrun / math.sqrt(resolved.mu)
    else:
        summary["reference"] = None
    return summary


@dataclass
class ExperimentResult:
    config_digest: str
    kind: str
    T: int
    replications: int
    normalization: str
    seeds: np.ndarray
    raw_q: np.ndarray
    samples: np.ndarray
    ks_vs_theory: float | None
    envelope_value: float
    envelope_exceedance: dict[str, float]
    ratio_statistic: dict
    wall_clock_seconds: float

    def summary_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": self.kind,
            "config_digest": self.config_digest,
            "T": self.T,
            "replications": self.replications,
            "normalization": self.normalization,
            "ks_vs_theory": self.ks_vs_theory,
            "envelope_value": self.envelope_value,
            "envelope_exceedance": self.envelope_exceedance,
            "ratio_statistic": self.ratio_statistic,
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def _samples_csv_text(records: list[ReplicationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["replication_index", "seed", "raw_q", "normalized_q"])
    for r in records:
        writer.writerow([r.index, r.seed, repr(r.raw_q), repr(r.normalized_q)])
    return buf.getvalue()


def _persist_result(out_dir: Path, result: ExperimentResult,
                    records: list[ReplicationRecord]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(out_dir / "samples.csv", _samples_csv_text(records))
    _atomic_write_text(
        out_dir / "result.json", json.dumps(result.summary_dict(), indent=2, sort_keys=True) + "\n"
    )


def _aggregate(config: ExperimentConfig, records: list[ReplicationRecord],
               kind: str, wall_clock: float) -> ExperimentResult:
    resolved = _resolve_model(config.model)
    samples = np.array([r.normalized_q for r in records])
    cdf = _limit_cdf_for(config, resolved) or _PointMassAtZero()
    ks = ks_distance(EmpiricalSample.from_values(samples), cdf)
    envelope = _envelope_value(config, resolved)
    sups = np.array([_sup_for_envelope(r, config.normalization) for r in records])
    exceedance = {
        str(lam): exceedance_fraction(sups, lam * envelope)
        for lam in ENVELOPE_MULTIPLIERS
    }
    return ExperimentResult(
        config_digest=config.digest(),
        kind=kind,
        T=config.T,
        replications=config.replications,
        normalization=config.normalization,
        seeds=np.array([r.seed for r in records], dtype=np.uint64),
        raw_q=np.array([r.raw_q for r in records]),
        samples=samples,
        ks_vs_theory=ks,
        envelope_value=envelope,
        envelope_exceedance=exceedance,
        ratio_statistic=_ratio_summary(records, config, resolved),
        wall_clock_seconds=wall_clock,
    )


def run_limit_experiment(config: ExperimentConfig, out_dir: str | Path | None = None,
                         resume: bool = True, stop_after: int | None = None
                         ) -> ExperimentResult:
    """Empirical law of the normalized deviation process vs the limit CDF."""
    out_path = Path(out_dir) if out_dir is not None else None
    start = time.perf_counter()
    records = _run_replications(config, out_path, resume=resume, stop_after=stop_after)
    result = _aggregate(config, records, "limit", time.perf_counter() - start)
    if out_path is not None:
        _persist_result(out_path, result, records)
    return result


@dataclass
class EnvelopeReport:
    config_digest: str
    T: int
    replications: int
    envelope_value: float
    exceedance: dict[str, float]
    ratio_statistic: dict
    wall_clock_seconds: float

    def summary_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "envelope",
            "config_digest": self.config_digest,
            "T": self.T,
            "replications": self.replications,
            "envelope_value": self.envelope_value,
            "envelope_exceedance": self.exceedance,
            "ratio_statistic": self.ratio_statistic,
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def run_envelope_experiment(config: ExperimentConfig, out_dir: str | Path | None = None,
                            resume: bool = True, stop_after: int | None = None
                            ) -> EnvelopeReport:
    """Exceedance fractions of sup |Q| over multiples of the envelope.

    Exceedance is monotone nonincreasing in the multiplier by construction;
    violated only by a bookkeeping bug, hence the internal assertion.
    """
    out_path = Path(out_dir) if out_dir is not None else None
    start = time.perf_counter()
    records = _run_replications(config, out_path, resume=resume, stop_after=stop_after)
    result = _aggregate(config, records, "envelope", time.perf_counter() - start)
    fractions = [result.envelope_exceedance[str(lam)] for lam in ENVELOPE_MULTIPLIERS]
    assert all(a >= b for a, b in zip(fractions, fractions[1:]))
    report = EnvelopeReport(
        config_digest=result.config_digest,
        T=config.T,
        replications=config.replications,
        envelope_value=result.envelope_value,
        exceedance=result.envelope_exceedance,
        ratio_statistic=result.ratio_statistic,
        wall_clock_seconds=result.wall_clock_seconds,
    )
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(out_path / "samples.csv", _samples_csv_text(records))
        _atomic_write_text(
            out_path / "result.json",
            json.dumps(report.summary_dict(), indent=2, sort_keys=True) + "\n",
        )
    return report


# ---------------------------------------------------------------------------
# Rate experiment (coupled modes over a dyadic grid)
# ---------------------------------------------------------------------------

@dataclass
class RateTable:
    """Medians/quartiles of representation-error ratios per dyadic horizon.

    rows: (family, T, n, median, q1, q3) with family in
    wiener_q | fbm_q | fbm_renewal | fbm_prop; the ratio divides the raw
    error by its target rate, so a decreasing median over the grid is the
    finite-horizon signature of the o(.) statements.
    """

    config_digest: str
    rows: list[dict]
    wall_clock_seconds: float

    def families(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            if row["family"] not in seen:
                seen.append(row["family"])
        return seen

    def medians(self, family: str) -> list[tuple[int, float]]:
        return [(row["T"], row["median"]) for row in self.rows if row["family"] == family]

    def strictly_decreasing(self, family: str) -> bool:
        med = self.medians(family)
        return len(med) >= 2 and med[-1][1] < med[0][1]

    def all_strictly_decreasing(self) -> bool:
        return all(self.strictly_decreasing(f) for f in self.families())

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["family", "T", "n", "median", "q1", "q3"])
        for row in self.rows:
            writer.writerow(
                [row["family"], row["T"], row["n"],
                 repr(row["median"]), repr(row["q1"]), repr(row["q3"])]
            )
        return buf.getvalue()

    def summary_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "rate",
            "config_digest": self.config_digest,
            "rows": self.rows,
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def _rate_task(payload: tuple) -> tuple[int, dict[str, float]]:
    model, t, delta, seed = payload
    if isinstance(model, CoupledWienerSpec):
        cp = coupled_wiener(t, model.mu, model.sigma, seed)
        err = representation_error_wiener(cp, t)
        return t, {"wiener_q": err / t**0.25}
    cp = coupled_fbm(t, model.theory_params(), seed)
    errs = representation_error_fbm(cp, t, delta)
    return t, {
        "fbm_q": errs.ratio_q,
        "fbm_renewal": errs.ratio_renewal,
        "fbm_prop": errs.ratio_prop,
    }


def run_rate_experiment(config: ExperimentConfig, out_dir: str | Path | None = None
                        ) -> RateTable:
    """Representation-error decay over config.checkpoints (dyadic horizons)."""
    if not isinstance(config.model, (CoupledWienerSpec, CoupledFbmSpec)):
        raise ConfigError("rate experiments require a coupled model")
    if len(config.checkpoints) < 2:
        raise ConfigError("rate experiments need at least two dyadic horizons")
    start = time.perf_counter()
    r = config.replications
    payloads = [
        (config.model, t, config.delta, derive_seed(config.master_seed, ti * r + i))
        for ti, t in enumerate(config.checkpoints)
        for i in range(r)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_rate_task, payloads, chunksize=4))
    else:
        outcomes = [_rate_task(p) for p in payloads]

    by_t: dict[int, dict[str, list[float]]] = {}
    for t, ratios in outcomes:
        bucket = by_t.setdefault(t, {})
        for family, value in ratios.items():
            bucket.setdefault(family, []).append(value)

    rows = []
    families = sorted({f for bucket in by_t.values() for f in bucket})
    for family in families:
        for t in config.checkpoints:
            values = np.array(by_t[t][family])
            rows.append(
                {
                    "family": family,
                    "T": int(t),
                    "n": int(values.size),
                    "median": float(np.median(values)),
                    "q1": float(np.percentile(values, 25)),
                    "q3": float(np.percentile(values, 75)),
                }
            )
    table = RateTable(
        config_digest=config.digest(),
        rows=rows,
        wall_clock_seconds=time.perf_counter() - start,
    )
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(out_path / "rate_table.csv", table.to_csv_text())
        _atomic_write_text(
            out_path / "result.json",
            json.dumps(table.summary_dict(), indent=2, sort_keys=True) + "\n",
        )
    return table
