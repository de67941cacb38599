"""Metropolis simulated annealing with a linear inverse-temperature ramp.

Two kernels share one schedule type:

* ``sa_run``: one replica, any real couplings.  Integer instances use a
  per-sweep lookup table for ``exp(-beta * dE)``.
* ``sa_multispin_run``: up to 64 replicas packed one bit per replica in a
  ``uint64`` word per site.  Needs couplings and fields in {-1, 0, +1}.  All
  replicas share one uniform per (sweep, site); each replica on its own is
  still an exact Metropolis chain, the shared draws only correlate them.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numba
import numpy as np

from .graph import ConfigurationError
from .instance import IsingInstance, energies, energy, random_state
from .outcome import AnnealOutcome
from .rng import anneal_rng

WORD = 64
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


@dataclass(frozen=True)
class SASchedule:
    beta0: float = 0.1
    beta1: float = 3.0
    sweeps: int = 1000

    def __post_init__(self):
        if not (0 <= self.beta0 <= self.beta1):
            raise ConfigurationError(f"need 0 <= beta0 <= beta1, got {self.beta0}, {self.beta1}")
        if int(self.sweeps) != self.sweeps or self.sweeps < 1:
            raise ConfigurationError(f"sweeps must be a positive integer, got {self.sweeps}")

    def betas(self) -> np.ndarray:
        K = int(self.sweeps)
        if K == 1:
            return np.array([float(self.beta1)])
        return self.beta0 + (self.beta1 - self.beta0) * np.arange(K) / (K - 1)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return anneal_rng(int(seed))


def _seed_value(seed):
    return None if isinstance(seed, np.random.Generator) else int(seed)


# --- scalar kernel ---------------------------------------------------------------


@numba.njit(cache=True)
def _sa_kernel(x, nbr, nbr_J, deg, h, betas, rng, shuffle, integral, dmax):
    n = x.size
    order = np.arange(n)
    table = np.empty(dmax + 1)
    for k in range(betas.size):
        beta = betas[k]
        if integral:
            for d in range(dmax + 1):
                table[d] = np.exp(-beta * d)
        if shuffle:
            for a in range(n - 1, 0, -1):
                b = rng.integers(0, a + 1)
                order[a], order[b] = order[b], order[a]
        for idx in range(n):
            i = order[idx]
            loc = h[i]
            for m in range(deg[i]):
                loc += nbr_J[i, m] * x[nbr[i, m]]
            dE = 2.0 * x[i] * loc
            if dE <= 0.0:
                x[i] = -x[i]
            else:
                p = table[int(dE + 0.5)] if integral else np.exp(-beta * dE)
                if rng.random() < p:
                    x[i] = -x[i]


def _max_delta(inst: IsingInstance) -> int:
    nbr, nbr_J, deg = inst.adjacency
    return int(2 * (np.abs(nbr_J).sum(axis=1) + np.abs(inst.h_float)).max(initial=0.0))


def _anneal_state(inst: IsingInstance, sched: SASchedule, rng, shuffle: bool) -> np.ndarray:
    x = random_state(inst.n, rng)
    if inst.n == 0:
        return x
    nbr, nbr_J, deg = inst.adjacency
    dmax = _max_delta(inst) if inst.integral else 0
    _sa_kernel(x, nbr, nbr_J, deg, inst.h_float, sched.betas(), rng, shuffle, inst.integral, dmax)
    return x


def sa_run(inst: IsingInstance, sched: SASchedule, seed, *, shuffle: bool = False) -> AnnealOutcome:
    """Anneal one replica from a uniformly random start.

    ``seed`` is an int (mapped to the default annealing stream) or a ready
    ``numpy.random.Generator``.  ``shuffle`` randomizes the site order each
    sweep; the default is ascending order.
    """
    x = _anneal_state(inst, sched, _as_rng(seed), shuffle)
    params = asdict(sched) | {"shuffle": shuffle}
    return AnnealOutcome(x, energy(inst, x), "sa", _seed_value(seed), params)


def sa_ensemble(
    inst: IsingInstance,
    sched: SASchedule,
    seed: int,
    reps: int,
    *,
    instance_id: int = 0,
    gauge_id: int = 0,
    shuffle: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """``reps`` independent scalar runs, rep ``r`` on stream (seed, instance, gauge, r).

    Returns ``(states, energies)`` with states of shape ``(reps, n)``.
    """
    X = np.empty((reps, inst.n), dtype=np.int8)
    for r in range(reps):
        X[r] = _anneal_state(inst, sched, anneal_rng(seed, instance_id, gauge_id, r), shuffle)
    return X, energies(inst, X)


# --- multi-spin coding -----------------------------------------------------------------


@numba.njit(cache=True)
def _ms_kernel(bits, nbr, neg, z, fneg, hasf, betas, rng, live):
    n = bits.size
    acc = np.empty((8, 8))
    for k in range(betas.size):
        beta = betas[k]
        for zz in range(8):
            for u in range(zz + 1):
                acc[zz, u] = min(1.0, np.exp(-beta * (2.0 * zz - 4.0 * u)))
        for i in range(n):
            bi = bits[i]
            c0 = np.uint64(0)
            c1 = np.uint64(0)
            c2 = np.uint64(0)
            zi = z[i]
            nt = zi - 1 if hasf[i] else zi
            for m in range(nt):
                t = bi ^ bits[nbr[i, m]] ^ neg[i, m]
                k0 = c0 & t
                c0 ^= t
                k1 = c1 & k0
                c1 ^= k0
                c2 |= k1
            if hasf[i]:
                t = bi ^ fneg[i]
                k0 = c0 & t
                c0 ^= t
                k1 = c1 & k0
                c1 ^= k0
                c2 |= k1
            # smallest unsatisfied-count that accepts under this uniform
            r = rng.random()
            th = zi + 1
            for u in range(zi + 1):
                if r < acc[zi, u]:
                    th = u
                    break
            if th > zi:
                continue
            ge = np.uint64(0)
            eq = _ALL
            for b in range(2, -1, -1):
                cb = c2 if b == 2 else (c1 if b == 1 else c0)
                mb = _ALL if (th >> b) & 1 else np.uint64(0)
                ge |= eq & cb & ~mb
                eq &= ~(cb ^ mb)
            ge |= eq
            bits[i] = bi ^ (ge & live)


def _multispin_tables(inst: IsingInstance):
    if not inst.is_pm1:
        raise ConfigurationError("multi-spin coding needs couplings and fields in {-1, 0, +1}")
    n = inst.n
    nbr0, nbr_J, deg = inst.adjacency
    nbr = np.zeros((n, 6), dtype=np.int64)
    neg = np.zeros((n, 6), dtype=np.uint64)
    z = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for m in range(deg[i]):
            if nbr_J[i, m] != 0:
                nbr[i, z[i]] = nbr0[i, m]
                neg[i, z[i]] = _ALL if nbr_J[i, m] < 0 else 0
                z[i] += 1
    h = inst.h_float
    hasf = h != 0
    fneg = np.where(h < 0, _ALL, np.uint64(0)).astype(np.uint64)
    return nbr, neg, z + hasf, fneg, hasf


def unpack_replicas(bits: np.ndarray, replicas: int) -> np.ndarray:
    """Bit-packed words to an int8 array of shape ``(replicas, n)``; bit 1 means spin -1."""
    r = np.arange(replicas, dtype=np.uint64)
    b = (bits[None, :] >> r[:, None]) & np.uint64(1)
    return (1 - 2 * b.astype(np.int8)).astype(np.int8)


def multispin_states(inst: IsingInstance, sched: SASchedule, seed, replicas: int = WORD) -> np.ndarray:
    """Final states of ``replicas`` lockstep replicas, shape ``(replicas, n)``."""
    if not 1 <= replicas <= WORD:
        raise ConfigurationError(f"replicas must be in [1, {WORD}], got {replicas}")
    rng = _as_rng(seed)
    nbr, neg, z, fneg, hasf = _multispin_tables(inst)
    bits = rng.integers(0, 2**64, size=inst.n, dtype=np.uint64, endpoint=False)
    live = _ALL if replicas == WORD else np.uint64((1 << replicas) - 1)
    bits &= live
    if inst.n:
        _ms_kernel(bits, nbr, neg, z, fneg, hasf, sched.betas(), rng, live)
    return unpack_replicas(bits, replicas)


def sa_multispin_run(inst: IsingInstance, sched: SASchedule, seed, replicas: int = WORD) -> list[AnnealOutcome]:
    X = multispin_states(inst, sched, seed, replicas)
    E = energies(inst, X)
    params = asdict(sched) | {"replicas": replicas}
    return [
        AnnealOutcome(X[r], E[r].item(), "sa-multispin", _seed_value(seed), params | {"replica": r})
        for r in range(replicas)
    ]
