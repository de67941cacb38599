"""Success-probability distributions of SA and SQA on a random h=0 ensemble.

    python3 scripts/bimodality.py --L 3 --instances 200 --reps 200 --out bimodality.csv
"""
import argparse
import csv

import numpy as np

from annealkit.analysis import bimodality, histogram, spearman
from annealkit.exact import dp_solve
from annealkit.graph import build_chimera
from annealkit.instance import energy, random_instance
from annealkit.rng import anneal_rng
from annealkit.sa import SASchedule, sa_ensemble
from annealkit.sqa import QASchedule, sqa_run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=3)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--sa-sweeps", type=int, default=200)
    ap.add_argument("--sqa-sweeps", type=int, default=200)
    ap.add_argument("--schedule", choices=("linear", "example-ii"), default="example-ii")
    ap.add_argument("--T", type=float, default=0.2)
    ap.add_argument("--P", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="bimodality.csv")
    a = ap.parse_args()

    g = build_chimera(a.L)
    sa_sched = SASchedule(0.1, 3.0, a.sa_sweeps)
    qa = QASchedule.example_ii(a.sqa_sweeps) if a.schedule == "example-ii" else QASchedule("linear", a.sqa_sweeps)
    rows = []
    for k in range(a.instances):
        inst = random_instance(g, a.seed, instance_id=k)
        e0 = dp_solve(inst, enumerate_cap=1).e0
        _, E = sa_ensemble(inst, sa_sched, a.seed, a.reps, instance_id=k)
        s_sa = float(np.mean(E == e0))
        hits = sum(energy(inst, sqa_run(inst, qa, a.T, a.P, anneal_rng(a.seed, k, 0, r)).state) == e0
                   for r in range(a.reps))
        rows.append((k, s_sa, hits / a.reps))
        print(f"instance {k}: SA {s_sa:.3f}  SQA {hits / a.reps:.3f}", flush=True)

    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("instance", "s_sa", "s_sqa"))
        w.writerows(rows)
    s_sa, s_sqa = np.array([r[1] for r in rows]), np.array([r[2] for r in rows])
    for name, s in (("SA", s_sa), ("SQA", s_sqa)):
        print(name, bimodality(s), np.round(histogram(s, 10)[0], 3).tolist())
    print("spearman(SA, SQA) =", round(spearman(s_sa, s_sqa), 3))


if __name__ == "__main__":
    main()
