"""Wall time of the exact row DP against L.

    python3 scripts/dp_scaling.py --L 2 3 4 5 6 --instances 3
"""
import argparse
import time

import numpy as np

from annealkit.exact import dp_memory_estimate, dp_solve
from annealkit.graph import build_chimera
from annealkit.instance import random_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--instances", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    dp_solve(random_instance(build_chimera(1), 0), enumerate_cap=1)
    prev = None
    print(f"{'L':>3} {'N':>5} {'median s':>10} {'ratio':>8} {'model':>8} {'MiB':>8}")
    for L in a.L:
        ts = []
        for k in range(a.instances):
            inst = random_instance(build_chimera(L), a.seed, instance_id=k)
            t = time.perf_counter()
            dp_solve(inst, enumerate_cap=1)
            ts.append(time.perf_counter() - t)
        med = float(np.median(ts))
        ratio = f"{med / prev[1]:8.1f}" if prev else f"{'':8}"
        model = f"{16 * L**2 / prev[0] ** 2:8.1f}" if prev and prev[0] == L - 1 else f"{'':8}"
        print(f"{L:3d} {8 * L * L:5d} {med:10.4f} {ratio} {model} {dp_memory_estimate(L) / 2**20:8.1f}")
        prev = (L, med)


if __name__ == "__main__":
    main()
