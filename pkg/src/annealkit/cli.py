"""Command-line front end: ``annealkit <subcommand> ...``.

Exit codes: 0 success, 1 user error (bad input or infeasible request),
2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .dynamics import sd_run
from .exact import SolverRefusal, brute_force_solve, dp_solve
from .experiment import ExperimentConfig, replay, run_experiment
from .gap import gap_sweep
from .graph import ConfigurationError, build_chimera, read_mask
from .instance import InstanceParseError, energy, random_instance, read_instance, write_instance, write_states
from .outcome import AnnealOutcome
from .rng import anneal_rng
from .sa import SASchedule, multispin_states, sa_run
from .sqa import QASchedule, sqa_run

USER_ERRORS = (ConfigurationError, InstanceParseError, SolverRefusal, FileNotFoundError, ValueError)


def _writer(path):
    fh = open(path, "w", newline="") if path and path != "-" else sys.stdout
    return fh, csv.writer(fh, lineterminator="\n")


def _ground_energy(inst, e0):
    if e0 is not None:
        return float(e0)
    return (brute_force_solve(inst, False) if inst.n <= 16 else dp_solve(inst, enumerate_cap=1)).e0


def _emit_runs(outcomes, e0, out):
    fh, w = _writer(out)
    w.writerow(("rep", "energy", "is_ground", "state_hash"))
    for r, o in enumerate(outcomes):
        w.writerow((r, o.energy, int(abs(o.energy - e0) <= 1e-9), o.state_hash))
    if fh is not sys.stdout:
        fh.close()


# --- subcommands ---------------------------------------------------------------


def cmd_gen(a):
    mask = read_mask(a.mask) if a.mask else None
    g = build_chimera(a.L, mask)
    out = Path(a.out)
    if a.count == 1 and out.suffix:
        write_instance(random_instance(g, a.seed, a.with_fields), out)
        return
    out.mkdir(parents=True, exist_ok=True)
    for k in range(a.count):
        write_instance(random_instance(g, a.seed, a.with_fields, instance_id=k), out / f"inst_{k:04d}.txt")


def cmd_solve(a):
    inst = read_instance(a.instance)
    if a.method == "brute":
        sol = brute_force_solve(inst, enumerate_cap=a.enumerate_cap)
    else:
        sol = dp_solve(inst, enumerate_cap=a.enumerate_cap, memory_budget=int(a.memory_gib * 2**30))
    states_file = a.states_file or str(Path(a.instance).with_suffix(".ground.txt"))
    write_states(sol.states, states_file)
    doc = {"e0": sol.e0, "degeneracy": sol.degeneracy, "truncated": sol.truncated, "states_file": states_file}
    text = json.dumps(doc)
    if a.out:
        Path(a.out).write_text(text + "\n")
    else:
        print(text)


def cmd_sa(a):
    inst = read_instance(a.instance)
    sched = SASchedule(a.beta0, a.beta1, a.sweeps)
    e0 = _ground_energy(inst, a.e0)
    if a.multispin:
        outs = []
        for block in range(0, a.reps, 64):
            k = min(64, a.reps - block)
            X = multispin_states(inst, sched, anneal_rng(a.seed, 0, 0, block // 64), k)
            outs += [AnnealOutcome(x, energy(inst, x), "sa-multispin") for x in X]
    else:
        outs = [sa_run(inst, sched, anneal_rng(a.seed, 0, 0, r), shuffle=a.shuffle) for r in range(a.reps)]
    _emit_runs(outs, e0, a.out)


def cmd_sqa(a):
    inst = read_instance(a.instance)
    if a.schedule == "linear":
        sched = QASchedule("linear", a.sweeps)
    elif a.schedule == "example-ii":
        sched = QASchedule.example_ii(a.sweeps)
    else:
        sched = QASchedule.from_file(a.schedule, a.sweeps)
    e0 = _ground_energy(inst, a.e0)
    outs = [sqa_run(inst, sched, a.temp, a.slices, anneal_rng(a.seed, 0, 0, r), strict=a.strict)
            for r in range(a.reps)]
    _emit_runs(outs, e0, a.out)


def cmd_sd(a):
    inst = read_instance(a.instance)
    dt = None if a.dt == "auto" else float(a.dt)
    e0 = _ground_energy(inst, a.e0)
    outs = [sd_run(inst, a.tf, dt, a.hx, anneal_rng(a.seed, 0, 0, r)) for r in range(a.reps)]
    _emit_runs(outs, e0, a.out)


def cmd_gap(a):
    inst = read_instance(a.instance)
    res = gap_sweep(inst, a.gamma_max, a.gamma_min, a.step, tuple(a.beta), a.seed, sweep_scale=a.sweep_scale)
    fh, w = _writer(a.out)
    w.writerow(("gamma", "beta", "delta", "err", "quality", "tau0"))
    for e in res:
        w.writerow((e.gamma, e.beta, f"{e.delta:.6g}", f"{e.err:.6g}", e.quality, f"{e.tau0:.6g}"))
    if fh is not sys.stdout:
        fh.close()


def _success_from_csv(path) -> float:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "is_ground" not in rows[0]:
        raise ConfigurationError(f"{path}: not a run CSV (needs an is_ground column)")
    return float(np.mean([int(r["is_ground"]) for r in rows]))


def cmd_analyze(a):
    s = np.array([_success_from_csv(p) for p in a.runs])
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    p, edges = analysis.histogram(s, a.bins)
    with open(out / "hist.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("s_lo", "s_hi", "p"))
        w.writerows(zip(edges[:-1], edges[1:], p))
    summary = {"files": len(s), "mean_s": float(s.mean()), "bimodality": analysis.bimodality(s),
               "median_repetitions": analysis.repetitions(float(np.median(s)), a.p)}
    if a.compare:
        if len(a.compare) != len(a.runs):
            raise ConfigurationError("--compare needs as many run files as --runs")
        t = np.array([_success_from_csv(p) for p in a.compare])
        C = analysis.copula(s, t, a.copula_bins)
        np.savetxt(out / "copula.csv", C, delimiter=",", fmt="%.6g")
        summary["spearman"] = analysis.spearman(s, t)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))


def cmd_experiment(a):
    if a.manifest:
        res = replay(a.manifest, a.out)
    else:
        if a.config:
            cfg = ExperimentConfig.from_file(a.config)
        elif a.preset == "desk":
            cfg = ExperimentConfig.desk()
        else:
            raise ConfigurationError("experiment needs --config, --manifest or --preset desk")
        res = run_experiment(cfg, a.out)
    print(json.dumps({"out": str(res.out), "instances": res.manifest["instances"], "failed": res.manifest["failed"]}))


# --- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="annealkit", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random +-1 chimera instances")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--with-fields", action="store_true")
    p.add_argument("--mask", help="0/1 per line, 8L^2 lines")
    p.add_argument("--out", required=True, help="file (count 1) or directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve-exact", help="exact ground energy, degeneracy and states")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=("dp", "brute"), default="dp")
    p.add_argument("--enumerate-cap", type=int, default=10**6)
    p.add_argument("--memory-gib", type=float, default=3.0)
    p.add_argument("--states-file")
    p.add_argument("--out", help="JSON output (default stdout)")
    p.set_defaults(func=cmd_solve)

    def run_args(p):
        p.add_argument("--instance", required=True)
        p.add_argument("--reps", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--e0", type=float, help="known ground energy (skips the exact solve)")
        p.add_argument("--out", default="-", help="CSV output (default stdout)")

    p = sub.add_parser("anneal-sa", help="simulated annealing runs")
    run_args(p)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--beta0", type=float, default=0.1)
    p.add_argument("--beta1", type=float, default=3.0)
    p.add_argument("--shuffle", action="store_true")
    p.add_argument("--multispin", action="store_true", help="64 replicas per word (+-1 instances only)")
    p.set_defaults(func=cmd_sa)

    p = sub.add_parser("anneal-sqa", help="simulated quantum annealing runs")
    run_args(p)
    p.add_argument("--schedule", default="linear", help="linear, example-ii, or a 3-column table file")
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--temp", type=float, default=0.2)
    p.add_argument("--slices", type=int, default=64)
    p.add_argument("--strict", action="store_true", help="count success only if every slice is a ground state")
    p.set_defaults(func=cmd_sqa)

    p = sub.add_parser("anneal-sd", help="classical spin-dynamics runs")
    run_args(p)
    p.add_argument("--tf", type=float, default=100.0)
    p.add_argument("--dt", default="auto")
    p.add_argument("--hx", type=float, default=1.0)
    p.set_defaults(func=cmd_sd)

    p = sub.add_parser("gap-sweep", help="spectral gap versus Gamma from PIMC correlators")
    p.add_argument("--instance", required=True)
    p.add_argument("--beta", type=float, action="append", help="repeatable (default 100 and 200)")
    p.add_argument("--gamma-max", type=float, default=3.0)
    p.add_argument("--gamma-min", type=float, default=0.1)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--sweep-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("analyze", help="success histogram, bimodality and copula from run CSVs")
    p.add_argument("--runs", nargs="+", required=True, help="one run CSV per instance")
    p.add_argument("--compare", nargs="+", help="second run set on the same instances")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--copula-bins", type=int, default=10)
    p.add_argument("--p", type=float, default=0.99)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("experiment", help="full pipeline from a JSON config or a manifest")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--config")
    g.add_argument("--manifest")
    g.add_argument("--preset", choices=("desk",))
    p.add_argument("--out", help="output directory (overrides the config)")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors
        return 0 if exc.code == 0 else 1
    if a.command == "gap-sweep" and not a.beta:
        a.beta = [100.0, 200.0]
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        a.func(a)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        logging.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
