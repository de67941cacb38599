"""Reproducible experiment pipeline: instances, exact solves, annealing runs, summaries.

Every annealing run draws from ``anneal_rng(master_seed, instance, gauge,
rep)``, so outputs depend only on the config.  The manifest stores the
config verbatim and suffices for a byte-identical replay.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .analysis import gauge_arith_mean, gauge_mean_success, histogram, joint_hist
from .dynamics import sd_run
from .exact import DEFAULT_MEMORY_BUDGET, SolverRefusal, brute_force_solve, dp_solve
from .graph import ConfigurationError, build_chimera, read_mask
from .instance import (
    IsingInstance,
    energy,
    gauge_transform,
    random_gauge,
    random_instance,
    read_instance,
    write_instance,
)
from .outcome import state_hash
from .rng import anneal_rng
from .sa import SASchedule, _anneal_state
from .sqa import QASchedule, sqa_run

log = logging.getLogger(__name__)

ALGORITHMS = ("sa", "sqa", "sd")
MANIFEST = "manifest.json"
SA_DEFAULTS = {"beta0": 0.1, "beta1": 3.0, "sweeps": 1000, "shuffle": False}
SQA_DEFAULTS = {"schedule": "linear", "sweeps": 1000, "T": 0.2, "P": 64, "strict": False}
SD_DEFAULTS = {"t_f": 100.0, "dt": None, "h_x": 1.0}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    L: int = 1
    instances: int = 100
    with_fields: bool = False
    mask: str | None = None
    instance_paths: list[str] = field(default_factory=list)
    algorithm: str = "sa"
    params: dict = field(default_factory=dict)
    reps: int = 1000
    gauges: int = 1
    out: str = "experiment_out"
    master_seed: int = 0
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.reps < 1 or self.gauges < 1:
            raise ConfigurationError("reps and gauges must be positive")
        if not self.instance_paths and (self.instances < 1 or self.L < 1):
            raise ConfigurationError("need instance_paths or a positive L and instance count")
        defaults = {"sa": SA_DEFAULTS, "sqa": SQA_DEFAULTS, "sd": SD_DEFAULTS}[self.algorithm]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConfigurationError(f"unknown {self.algorithm} parameters: {sorted(unknown)}")
        self.params = defaults | dict(self.params)

    @classmethod
    def desk(cls, **kw) -> "ExperimentConfig":
        """Desk-scale preset: M=200 runs, K=100 instances, G=4 gauges."""
        return cls(**({"reps": 200, "instances": 100, "gauges": 4} | kw))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    out: Path
    s: dict[int, list[float]]
    failed: dict[int, str]
    manifest: dict


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.12g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])


def load_instances(cfg: ExperimentConfig) -> list[IsingInstance]:
    if cfg.instance_paths:
        return [read_instance(p) for p in cfg.instance_paths]
    mask = read_mask(cfg.mask) if cfg.mask else None
    g = build_chimera(cfg.L, mask)
    return [random_instance(g, cfg.master_seed, cfg.with_fields, instance_id=k) for k in range(cfg.instances)]


def solve(inst: IsingInstance, memory_budget: int = DEFAULT_MEMORY_BUDGET):
    """Ground energy only; brute force for tiny instances, row DP otherwise."""
    if inst.n <= 16:
        return brute_force_solve(inst, enumerate_all=False)
    return dp_solve(inst, enumerate_cap=1, memory_budget=memory_budget)


def _qa_schedule(params: dict) -> QASchedule:
    spec = params["schedule"]
    if spec == "linear":
        return QASchedule("linear", int(params["sweeps"]))
    if spec == "example-ii":
        return QASchedule.example_ii(int(params["sweeps"]))
    return QASchedule.from_file(spec, int(params["sweeps"]))


def make_runner(cfg: ExperimentConfig):
    """``run(inst, rng) -> state`` for the configured algorithm."""
    p = cfg.params
    if cfg.algorithm == "sa":
        sched = SASchedule(float(p["beta0"]), float(p["beta1"]), int(p["sweeps"]))
        return lambda inst, rng: _anneal_state(inst, sched, rng, bool(p["shuffle"]))
    if cfg.algorithm == "sqa":
        sched = _qa_schedule(p)
        return lambda inst, rng: sqa_run(inst, sched, float(p["T"]), int(p["P"]), rng, strict=bool(p["strict"])).state
    return lambda inst, rng: sd_run(inst, float(p["t_f"]), p["dt"], float(p["h_x"]), rng).state


def run_instance(cfg: ExperimentConfig, k: int, inst: IsingInstance, e0, runner):
    """Rows ``(gauge, rep, energy, delta, is_ground, state_hash)`` and per-gauge success rates."""
    rows, s, deltas = [], [], []
    for gi in range(cfg.gauges):
        a = np.ones(inst.n, dtype=np.int8) if cfg.gauges == 1 else random_gauge(inst.graph, cfg.master_seed, gi, k)
        ginst = gauge_transform(inst, a)
        hits = 0
        for r in range(cfg.reps):
            y = runner(ginst, anneal_rng(cfg.master_seed, k, gi, r))
            x = (y * a).astype(np.int8)  # back to the original variables
            e = energy(inst, x)
            d = e - e0
            ok = d == 0 if inst.integral else abs(d) <= 1e-9
            hits += ok
            rows.append((gi, r, e, 0 if ok else d, ok, state_hash(x)))
            deltas.append(0 if ok else d)
        s.append(hits / cfg.reps)
    return rows, s, deltas


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None) -> ExperimentResult:
    out = Path(out if out is not None else cfg.out)
    for sub in ("instances", "runs", "analysis"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    instances = load_instances(cfg)

    # solve everything first so an infeasible budget aborts before any annealing
    e0s, refusals = [], {}
    for k, inst in enumerate(instances):
        write_instance(inst, out / "instances" / f"inst_{k:04d}.txt")
        try:
            e0s.append(solve(inst, cfg.memory_budget).e0)
        except SolverRefusal as exc:
            refusals[k] = str(exc)
    if refusals:
        detail = "; ".join(f"instance {k}: {m}" for k, m in sorted(refusals.items()))
        raise SolverRefusal(f"exact solve infeasible for {len(refusals)} instance(s): {detail}")

    runner = make_runner(cfg)
    s_all, failed, all_deltas = {}, {}, {}
    for k, inst in enumerate(instances):
        try:
            rows, s, deltas = run_instance(cfg, k, inst, e0s[k], runner)
        except Exception as exc:  # isolate per-instance failures
            log.exception("instance %d failed", k)
            failed[k] = f"{type(exc).__name__}: {exc}"
            continue
        _write_csv(out / "runs" / f"inst_{k:04d}.csv", ("gauge", "rep", "energy", "delta", "is_ground", "state_hash"), rows)
        s_all[k] = s
        all_deltas[k] = np.asarray(deltas, dtype=float)
        log.info("instance %d: s=%s", k, s)

    write_summaries(out / "analysis", s_all, e0s, all_deltas, cfg.gauges)
    manifest = {
        "config": cfg.to_dict(),
        "version": _version(),
        "seeds": {"master_seed": cfg.master_seed, "stream": "(master_seed, instance, gauge, rep)"},
        "instances": len(instances),
        "failed": {str(k): v for k, v in sorted(failed.items())},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(out, s_all, failed, manifest)


def write_summaries(adir: Path, s_all: dict, e0s, deltas: dict, G: int) -> None:
    ids = sorted(s_all)
    header = ["instance", "e0"] + [f"s_g{g}" for g in range(G)] + ["gauge_mean", "arith_mean"]
    rows = [[k, e0s[k], *s_all[k], gauge_mean_success(s_all[k]), gauge_arith_mean(s_all[k])] for k in ids]
    _write_csv(adir / "success.csv", header, rows)
    sbar = np.array([gauge_arith_mean(s_all[k]) for k in ids])
    p, edges = histogram(sbar) if ids else (np.zeros(20), np.linspace(0, 1, 21))
    _write_csv(adir / "hist.csv", ("s_lo", "s_hi", "p"), zip(edges[:-1], edges[1:], p))
    if ids:
        # joint with the per-instance mean excess energy of failed runs, rounded
        mean_d = np.array([np.rint(d[d > 0].mean()) if np.any(d > 0) else 0.0 for d in (deltas[k] for k in ids)])
        H, _, dedges = joint_hist(sbar, mean_d)
        rows = [(edges[i], edges[i + 1], 0.5 * (dedges[j] + dedges[j + 1]), H[i, j])
                for i in range(H.shape[0]) for j in range(H.shape[1])]
        _write_csv(adir / "joint.csv", ("s_lo", "s_hi", "mean_excess", "p"), rows)


def replay(manifest_path: str | Path, out: str | Path | None = None) -> ExperimentResult:
    """Rerun the experiment recorded in a manifest (optionally into another directory)."""
    m = json.loads(Path(manifest_path).read_text())
    cfg = ExperimentConfig.from_dict(m["config"])
    return run_experiment(cfg, out)


def output_files(out: str | Path) -> dict[str, bytes]:
    """All CSV outputs under ``out`` keyed by relative path."""
    out = Path(out)
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*.csv"))}
