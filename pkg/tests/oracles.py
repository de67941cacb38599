"""Independent reference computations used only by the tests."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.linalg import expm

from annealkit.graph import build_chimera
from annealkit.instance import IsingInstance, energies, from_couplings


def all_states(n: int) -> np.ndarray:
    """All 2^n states, row k has bit j of k set meaning spin j is -1."""
    k = np.arange(2**n)[:, None]
    return (1 - 2 * ((k >> np.arange(n)) & 1)).astype(np.int8)


def spectrum(inst: IsingInstance) -> np.ndarray:
    return energies(inst, all_states(inst.n))


def boltzmann(inst: IsingInstance, beta: float) -> np.ndarray:
    E = spectrum(inst).astype(float)
    w = np.exp(-beta * (E - E.min()))
    return w / w.sum()


def _sx_sum(n: int) -> np.ndarray:
    dim = 2**n
    X = np.zeros((dim, dim))
    for j in range(n):
        idx = np.arange(dim)
        X[idx, idx ^ (1 << j)] += 1.0
    return X


def hamiltonian(inst: IsingInstance, A: float, B: float) -> np.ndarray:
    """Dense ``-A sum sx + B H_ising`` in the basis of ``all_states``."""
    return -A * _sx_sum(inst.n) + B * np.diag(spectrum(inst).astype(float))


def quantum_marginals(inst: IsingInstance, A: float, B: float, beta: float) -> np.ndarray:
    """Diagonal of the thermal density matrix in the computational basis."""
    w, V = np.linalg.eigh(hamiltonian(inst, A, B))
    rho = (V * np.exp(-beta * (w - w.min()))) @ V.T
    d = np.diag(rho)
    return d / d.sum()


def trotter_marginals(inst: IsingInstance, A: float, B: float, beta: float, P: int) -> np.ndarray:
    """Exact slice marginals of the P-slice discretized path integral."""
    dtau = beta / P
    n = inst.n
    E = spectrum(inst).astype(float)
    half = np.exp(-0.5 * dtau * B * (E - E.min()))
    K = expm(dtau * A * _sx_sum(n))
    T = half[:, None] * K * half[None, :]
    T /= np.abs(T).max()
    M = np.linalg.matrix_power(T, P)
    d = np.diag(M)
    return d / d.sum()


def ground_gap(inst: IsingInstance, A: float, B: float) -> float:
    w = np.linalg.eigvalsh(hamiltonian(inst, A, B))
    return float(w[1] - w[0])


def brute_ground_states(inst: IsingInstance) -> tuple[int, set[tuple[int, ...]]]:
    X = all_states(inst.n)
    E = energies(inst, X)
    e0 = E.min()
    return e0.item(), {tuple(int(v) for v in x) for x in X[E == e0]}


def hamming_bruteforce(x, states) -> int:
    return min(int(np.sum(np.asarray(x) != np.asarray(s))) for s in states)


# --- tiny instances on masked single cells -------------------------------------------


def _cell_mask(sites) -> np.ndarray:
    m = np.zeros(8, dtype=bool)
    m[list(sites)] = True
    return m


def single_spin(h: int = 0) -> IsingInstance:
    g = build_chimera(1, _cell_mask([0]))
    return from_couplings(g, {}, {0: h})


def two_spin(J: int = 1, h: tuple[int, int] = (0, 0)) -> IsingInstance:
    g = build_chimera(1, _cell_mask([0, 4]))
    return from_couplings(g, {(0, 4): J}, {0: h[0], 4: h[1]})


def three_spin(J=(1, -1), h=(1, 0, -1)) -> IsingInstance:
    """Sites 0, 4, 5 of a cell: couplings 0-4 and 0-5 (4-5 is not an edge)."""
    g = build_chimera(1, _cell_mask([0, 4, 5]))
    return from_couplings(g, {(0, 4): J[0], (0, 5): J[1]}, {0: h[0], 4: h[1], 5: h[2]})


def ferromagnet_cell() -> IsingInstance:
    g = build_chimera(1)
    return IsingInstance(g, np.ones(len(g.edges), dtype=np.int64), np.zeros(8, dtype=np.int64))


def slice_state_frequencies(inst, A, B, beta, P, sweeps, rng, batches=20, therm=1000):
    """Batch-means estimate of slice-state frequencies under fixed ``(A, B)``.

    Returns ``(mean, stderr)`` over the ``2^n`` states of ``all_states``.
    """
    from annealkit.sqa import equilibrate, run_sweeps

    wl = equilibrate(inst, A, B, beta, P, therm, rng)
    one_a, one_b = np.full(1, float(A)), np.full(1, float(B))
    weights = 1 << np.arange(inst.n)
    acc = np.zeros((batches, 2**inst.n))
    per = sweeps // batches
    for b in range(batches):
        for _ in range(per):
            run_sweeps(inst, wl, one_a, one_b, rng)
            acc[b] += np.bincount(((wl.spins < 0) * weights).sum(axis=1), minlength=2**inst.n)
    freq = acc / acc.sum(axis=1, keepdims=True)
    return freq.mean(axis=0), freq.std(axis=0, ddof=1) / np.sqrt(batches)


def chi2_counts(counts: np.ndarray, probs: np.ndarray) -> float:
    """Pearson chi-square p-value of counts against probabilities."""
    from scipy import stats

    counts = np.asarray(counts, dtype=float)
    exp = probs * counts.sum()
    keep = exp > 0
    return float(stats.chisquare(counts[keep], exp[keep] * counts[keep].sum() / exp[keep].sum()).pvalue)


__all__ = [name for name in dir() if not name.startswith("_") and name not in ("itertools",)]
