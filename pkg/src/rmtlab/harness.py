"""Seeded Monte Carlo experiments, record persistence and summaries.

Trial t at size m uses seed ``derive_seed(seed, t, m)`` and nothing else,
so records do not depend on how trials are scheduled. Records are always
emitted sorted by (m, trial).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import rng
from .distributions import (
    apply_centered_truncation,
    as_spec,
    choose_truncation_level,
    truncation_report,
)
from .errors import ConfigError, InvalidParams, RmtLabError
from .matrix import PROBE_KINDS, lemma_probe, sample_matrix
from .spectral import esd, ks_distance, singular_values
from .trimmed_sup import estimate_sup_trimmed

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

EXPERIMENTS = ("converge", "heavy-tail", "mp-check", "truncate-pipeline", "probe")
FORMATS = ("csv", "jsonl")
FIELDS = (
    "experiment", "dist", "z", "m", "N", "trial", "seed", "s1", "sm", "sm_scaled", "q_eps",
    "eps", "M_trunc", "sm_trunc", "gap_scaled", "max_abs_entry", "wall_ms",
)  # fmt: skip
PROBE_FIELDS = ("experiment", "kind", "dist", "z", "m", "N", "eps", "trials", "seed", "value")


def n_rows(m: int, z: float) -> int:
    """N_m = round(m / z), halves rounded up."""
    return math.floor(m / z + 0.5)


@dataclass
class ExperimentConfig:
    experiment: str
    dist: str = "gaussian"
    z: float = 0.25
    m_list: list = field(default_factory=lambda: [100])
    trials: int = 10
    eps: float = 0.1
    eta: float = 0.1
    seed: int = 0
    output: Optional[str] = None
    format: str = "jsonl"
    # knobs beyond the core schema
    restarts: int = 4
    workers: int = 1
    gap_threshold: float = 0.15
    probe_kind: str = "trim-bound"
    timing: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        try:
            self.dist = as_spec(self.dist).key
        except (RmtLabError, ValueError) as exc:
            raise ConfigError(f"bad dist: {exc}") from exc
        if not 0.0 < self.z < 1.0:
            raise ConfigError(f"z must lie strictly in (0, 1), got {self.z}")
        ms = [int(m) for m in self.m_list]
        if not ms or any(m < 1 for m in ms) or ms != sorted(set(ms)):
            raise ConfigError("m_list must be a nonempty strictly ascending list of positive integers")
        self.m_list = ms
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 <= self.eps <= 1.0:
            raise ConfigError("eps must lie in [0, 1]")
        if not 0.0 < self.eta < 1.0:
            raise ConfigError("eta must lie in (0, 1)")
        try:
            rng.check_seed(self.seed)
        except InvalidParams as exc:
            raise ConfigError(str(exc)) from exc
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.restarts < 1 or self.workers < 1:
            raise ConfigError("restarts and workers must be >= 1")
        if self.probe_kind not in PROBE_KINDS:
            raise ConfigError(f"probe_kind must be one of {PROBE_KINDS}")
        for m in ms:
            if n_rows(m, self.z) < m:
                raise ConfigError(f"N_m < m at m={m}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_toml(cls, path: Union[str, Path], **overrides) -> "ExperimentConfig":
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)


@dataclass
class TrialRecord:
    experiment: str
    dist: str
    z: float
    m: int
    N: int
    trial: int
    seed: int
    s1: float
    sm: float
    sm_scaled: float
    q_eps: Optional[float] = None
    eps: Optional[float] = None
    M_trunc: Optional[float] = None
    sm_trunc: Optional[float] = None
    gap_scaled: Optional[float] = None
    max_abs_entry: Optional[float] = None
    wall_ms: Optional[float] = None
    ks: Optional[float] = None  # mp-check only

    def to_dict(self, with_ks: bool = False) -> dict:
        out = {name: getattr(self, name) for name in FIELDS}
        if with_ks:
            out["ks"] = self.ks
        return out


@dataclass
class ProbeRecord:
    experiment: str
    kind: str
    dist: str
    z: float
    m: int
    N: int
    eps: float
    trials: int
    seed: int
    value: float

    def to_dict(self, with_ks: bool = False) -> dict:
        return {name: getattr(self, name) for name in PROBE_FIELDS}


def trial_seed(seed: int, trial: int, m: int) -> int:
    return rng.derive_seed(seed, trial, m)


# --- single trials --------------------------------------------------------------


def _run_trial(cfg: ExperimentConfig, m: int, trial: int, M_trunc: Optional[float]) -> TrialRecord:
    t0 = time.perf_counter()
    N = n_rows(m, cfg.z)
    tseed = trial_seed(cfg.seed, trial, m)
    A = sample_matrix(cfg.dist, N, m, tseed)
    summary = singular_values(A)
    root = math.sqrt(N)
    rec = TrialRecord(
        experiment=cfg.experiment,
        dist=cfg.dist,
        z=cfg.z,
        m=m,
        N=N,
        trial=trial,
        seed=tseed,
        s1=summary.s1,
        sm=summary.sm,
        sm_scaled=summary.sm / root,
        max_abs_entry=float(np.max(np.abs(A.entries))),
    )
    if cfg.experiment == "heavy-tail":
        est = estimate_sup_trimmed(A, cfg.eps, restarts=cfg.restarts, seed=tseed)
        rec.q_eps, rec.eps = est.value, cfg.eps
        if rec.q_eps > rec.s1 + 1e-8:
            raise AssertionError(f"q_eps {rec.q_eps} exceeds s1 {rec.s1}")
    elif cfg.experiment == "mp-check":
        rec.ks = ks_distance(esd(A), cfg.z)
    elif cfg.experiment == "truncate-pipeline":
        report = truncation_report(as_spec(cfg.dist), M_trunc)
        tilde = apply_centered_truncation(A.entries, report)
        rec.M_trunc = M_trunc
        rec.sm_trunc = singular_values(tilde).sm
        rec.gap_scaled = (rec.sm_trunc - rec.sm) / root
    if rec.sm > rec.s1:
        raise AssertionError(f"sm {rec.sm} exceeds s1 {rec.s1}")
    if cfg.timing:
        rec.wall_ms = 1000.0 * (time.perf_counter() - t0)
    return rec


def _run_task(args):
    return _run_trial(*args)


def _run_probe(cfg: ExperimentConfig, m: int) -> ProbeRecord:
    N = n_rows(m, cfg.z)
    pseed = rng.derive_seed(cfg.seed, m)
    value = lemma_probe(cfg.probe_kind, cfg.dist, N, m, cfg.eps, cfg.trials, pseed)
    return ProbeRecord("probe", cfg.probe_kind, cfg.dist, cfg.z, m, N, cfg.eps, cfg.trials, pseed, value)


def run_trials(cfg: ExperimentConfig, workers: Optional[int] = None) -> list:
    """All records of ``cfg``, sorted by (m, trial)."""
    workers = cfg.workers if workers is None else workers
    if cfg.experiment == "probe":
        return [_run_probe(cfg, m) for m in cfg.m_list]
    M_trunc = None
    if cfg.experiment == "truncate-pipeline":
        M_trunc = choose_truncation_level(as_spec(cfg.dist), cfg.eta)
    tasks = [(cfg, m, t, M_trunc) for m in cfg.m_list for t in range(cfg.trials)]
    if workers <= 1 or len(tasks) == 1:
        records = [_run_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    records.sort(key=lambda r: (r.m, r.trial))
    return records


def _check(cfg: ExperimentConfig, name: str) -> None:
    if cfg.experiment != name:
        raise ConfigError(f"expected experiment {name!r}, got {cfg.experiment!r}")


def run_convergence_sweep(cfg: ExperimentConfig, workers: Optional[int] = None):
    _check(cfg, "converge")
    records = run_trials(cfg, workers)
    return records, summarize(records)


def run_heavy_tail_contrast(cfg: ExperimentConfig, workers: Optional[int] = None):
    _check(cfg, "heavy-tail")
    if as_spec(cfg.dist).fourth_moment_finite:
        log.warning("%s has a finite fourth moment; heavy-tail contrast is not expected", cfg.dist)
    records = run_trials(cfg, workers)
    return records, summarize(records)


def run_mp_check(cfg: ExperimentConfig, workers: Optional[int] = None):
    _check(cfg, "mp-check")
    records = run_trials(cfg, workers)
    return records, summarize(records)


def run_truncation_pipeline(cfg: ExperimentConfig, workers: Optional[int] = None):
    _check(cfg, "truncate-pipeline")
    records = run_trials(cfg, workers)
    return records, summarize(records, gap_threshold=cfg.gap_threshold)


def run_probe(cfg: ExperimentConfig):
    _check(cfg, "probe")
    records = run_trials(cfg)
    return records, []


RUNNERS = {
    "converge": run_convergence_sweep,
    "heavy-tail": run_heavy_tail_contrast,
    "mp-check": run_mp_check,
    "truncate-pipeline": run_truncation_pipeline,
    "probe": lambda cfg, workers=None: run_probe(cfg),
}


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None):
    return RUNNERS[cfg.experiment](cfg, workers)


# --- persistence ----------------------------------------------------------------


def _columns(records: Sequence) -> tuple:
    if records and isinstance(records[0], ProbeRecord):
        return PROBE_FIELDS
    if records and records[0].experiment == "mp-check":
        return FIELDS + ("ks",)
    return FIELDS


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_records(records: Sequence, fmt: str = "jsonl") -> str:
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    cols = _columns(records)
    with_ks = "ks" in cols
    if fmt == "jsonl":
        return "".join(json.dumps(r.to_dict(with_ks)) + "\n" for r in records)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        d = r.to_dict(with_ks)
        w.writerow([_csv_cell(d[c]) for c in cols])
    return buf.getvalue()


def emit_records(records: Sequence, path: Union[str, Path], fmt: str = "jsonl") -> int:
    """Write records to ``path``; returns the number of records written."""
    text = format_records(records, fmt)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return len(records)


def read_jsonl(path: Union[str, Path]) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            d = json.loads(line)
            if "kind" in d:
                out.append(ProbeRecord(**d))
            else:
                out.append(TrialRecord(**d))
    return out


# --- summaries ------------------------------------------------------------------

SUMMARY_STATS = ("sm_scaled", "s1_scaled", "q_scaled", "gap_scaled", "ks")


def _stat_values(records: Iterable[TrialRecord], stat: str) -> list[float]:
    out = []
    for r in records:
        if stat == "s1_scaled":
            v = r.s1 / math.sqrt(r.N)
        elif stat == "q_scaled":
            v = None if r.q_eps is None else r.q_eps / math.sqrt(r.N)
        else:
            v = getattr(r, stat)
        if v is not None:
            out.append(v)
    return out


def summarize(records: Sequence, gap_threshold: Optional[float] = None) -> list[dict]:
    """min/q25/median/q75/max/mean per (experiment, m, statistic)."""
    rows = []
    groups: dict = {}
    for r in records:
        if isinstance(r, TrialRecord):
            groups.setdefault((r.experiment, r.m), []).append(r)
    for (experiment, m), recs in sorted(groups.items()):
        for stat in SUMMARY_STATS:
            vals = _stat_values(recs, stat)
            if not vals:
                continue
            arr = np.asarray(vals)
            q25, med, q75 = np.quantile(arr, [0.25, 0.5, 0.75])
            row = {
                "experiment": experiment,
                "m": m,
                "stat": stat,
                "n": arr.size,
                "min": float(arr.min()),
                "q25": float(q25),
                "median": float(med),
                "q75": float(q75),
                "max": float(arr.max()),
                "mean": float(arr.mean()),
            }
            if stat == "sm_scaled":
                row["target"] = 1.0 - math.sqrt(recs[0].z)
            if stat == "gap_scaled" and gap_threshold is not None:
                row["frac_le_threshold"] = float(np.mean(arr <= gap_threshold))
            rows.append(row)
    return rows


def format_summary(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    cols = ["experiment", "m", "stat", "n", "min", "q25", "median", "q75", "max", "mean", "target", "frac_le_threshold"]
    cols = [c for c in cols if any(c in r for r in rows)]

    def cell(v):
        if v is None:
            return "-"
        return f"{v:.4f}" if isinstance(v, float) else str(v)

    table = [cols] + [[cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in table)


def default_workers() -> int:
    raw = os.environ.get("RMTLAB_WORKERS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"RMTLAB_WORKERS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("RMTLAB_WORKERS must be >= 1")
    return n
