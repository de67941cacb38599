"""Percentiles of optimal SA effort (sweeps times repetitions) against N.

    python3 scripts/sa_effort_scaling.py --L 1 2 3 --instances 50 --reps 200
"""
import argparse

import numpy as np

from annealkit.analysis import optimal_effort, percentile_scaling
from annealkit.exact import brute_force_solve, dp_solve
from annealkit.graph import build_chimera
from annealkit.instance import random_instance
from annealkit.sa import SASchedule, sa_ensemble


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--sweeps", type=int, nargs="+", default=[10, 30, 100, 300, 1000])
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    efforts = {}
    for L in a.L:
        g = build_chimera(L)
        tot = []
        for k in range(a.instances):
            inst = random_instance(g, a.seed, instance_id=k)
            e0 = (brute_force_solve(inst, False) if inst.n <= 16 else dp_solve(inst, enumerate_cap=1)).e0
            s = [np.mean(sa_ensemble(inst, SASchedule(0.1, 3.0, K), a.seed, a.reps, instance_id=k)[1] == e0)
                 for K in a.sweeps]
            pt = optimal_effort(a.sweeps, s, size=inst.n)
            tot.append(pt.total)
        efforts[g.n_active] = np.array(tot)
    for row in percentile_scaling(efforts):
        vals = "  ".join(f"q{int(100 * q)}={v:.3g}" for q, v in row.values.items())
        print(f"N={row.size:4d}  {vals}{'' if row.sufficient else '  (few instances)'}")


if __name__ == "__main__":
    main()
