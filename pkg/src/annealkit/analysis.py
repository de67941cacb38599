"""Statistics over annealing results: success rates, effort, histograms, copulae, diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .instance import IsingInstance, delta_energies, energy

DEFAULT_PERCENTILES = (0.01, 0.05, 0.5, 0.95, 0.99)
MIN_INSTANCES = 20


# --- success and effort ---------------------------------------------------------


@dataclass
class SuccessRecord:
    instance_id: int
    algorithm: str
    params: dict
    M: int
    M_GS: int
    deltas: np.ndarray  # per-run energy above e0
    states: np.ndarray | None = None

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas)
        if np.any(self.deltas < 0):
            raise ValueError("run energy below the exact ground energy")

    @property
    def s(self) -> float:
        return self.M_GS / self.M if self.M else math.nan


def success_record(instance_id, algorithm, params, run_energies, e0, states=None, tol=1e-9) -> SuccessRecord:
    d = np.asarray(run_energies) - e0
    if d.dtype.kind == "f":
        d = np.where(np.abs(d) <= tol, 0.0, d)
    return SuccessRecord(instance_id, algorithm, dict(params), int(d.size), int(np.sum(d == 0)), d, states)


def repetitions(s: float, p: float = 0.99) -> float:
    """``ceil(ln(1 - p) / ln(1 - s))``; 1 when ``s >= p``, ``inf`` when ``s == 0``."""
    if not 0 < p < 1:
        raise ValueError(f"target probability must lie in (0, 1), got {p}")
    if not 0 <= s <= 1:
        raise ValueError(f"success probability must lie in [0, 1], got {s}")
    if s == 0:
        return math.inf
    if s >= p:
        return 1
    return max(1, math.ceil(math.log(1 - p) / math.log1p(-s) - 1e-12))


def gauge_mean_success(s_list) -> float:
    """``1 - prod_g (1 - s_g)^(1/G)``: geometric mean of failure rates."""
    s = np.asarray(list(s_list), dtype=float)
    if s.size == 0:
        raise ValueError("no gauges given")
    if np.any((s < 0) | (s > 1)):
        raise ValueError("success probabilities must lie in [0, 1]")
    if np.any(s == 1):
        return 1.0
    return float(1.0 - np.exp(np.mean(np.log1p(-s))))


def gauge_arith_mean(s_list) -> float:
    """Plain average over gauges, used for correlation plots."""
    s = np.asarray(list(s_list), dtype=float)
    if s.size == 0:
        raise ValueError("no gauges given")
    return float(s.mean())


@dataclass
class EffortPoint:
    t_f: float
    R: float
    total: float
    size: int | None = None
    percentile: float | None = None
    boundary: bool = False
    finite: bool = True


def optimal_effort(t_f, s, p: float = 0.99, size: int | None = None) -> EffortPoint:
    """Grid minimizer of ``R(t_f) * t_f``; flags a minimum at either end of the grid."""
    t_f = np.asarray(t_f, dtype=float)
    s = np.asarray(s, dtype=float)
    if t_f.size < 3 or t_f.shape != s.shape:
        raise ValueError("need at least three (t_f, s) points of equal length")
    order = np.argsort(t_f)
    t_f, s = t_f[order], s[order]
    R = np.array([repetitions(v, p) for v in s], dtype=float)
    total = R * t_f
    if not np.any(np.isfinite(total)):
        return EffortPoint(math.nan, math.inf, math.inf, size, boundary=False, finite=False)
    k = int(np.argmin(total))
    return EffortPoint(float(t_f[k]), float(R[k]), float(total[k]), size, boundary=k in (0, t_f.size - 1))


@dataclass
class PercentileRow:
    size: int
    n_instances: int
    values: dict[float, float]
    sufficient: bool = True
    notes: list[str] = field(default_factory=list)


def percentile_scaling(
    efforts_by_size: dict[int, np.ndarray],
    percentiles=DEFAULT_PERCENTILES,
    parallel_normalize: bool = False,
    min_instances: int = MIN_INSTANCES,
) -> list[PercentileRow]:
    """Empirical percentiles of per-instance total effort for each size ``N``.

    Infinite efforts (never solved) sort last, so high percentiles may be
    ``inf``.  ``parallel_normalize`` divides by ``N``.
    """
    rows = []
    for N in sorted(efforts_by_size):
        e = np.sort(np.asarray(efforts_by_size[N], dtype=float))
        if parallel_normalize:
            e = e / N
        row = PercentileRow(int(N), int(e.size), {})
        if e.size < min_instances:
            row.sufficient = False
            row.notes.append(f"only {e.size} instances; need {min_instances}")
        if e.size:
            for q in percentiles:
                row.values[q] = float(np.quantile(e, q, method="inverted_cdf"))
        rows.append(row)
    return rows


# --- histograms and copulae ------------------------------------------------------


def _unit_index(values, bins: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if np.any((v < 0) | (v > 1)):
        raise ValueError("values must lie in [0, 1]")
    return np.minimum((v * bins).astype(np.int64), bins - 1)


def histogram(values, bins: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Normalized histogram on ``[0, 1]`` (``1.0`` falls in the last bin)."""
    idx = _unit_index(values, bins)
    counts = np.bincount(idx, minlength=bins).astype(float)
    return counts / max(1, idx.size), np.linspace(0, 1, bins + 1)


def joint_hist(s, delta, s_bins: int = 20, delta_edges=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint ``p(s, Delta)`` of shape ``(s_bins, n_delta)``; rows sum to ``histogram(s)``.

    ``delta_edges`` defaults to one bin per distinct integer value.
    """
    s = np.asarray(s, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if s.shape != delta.shape:
        raise ValueError("s and delta need equal length")
    si = _unit_index(s, s_bins)
    if delta_edges is None:
        hi = int(np.ceil(delta.max())) if delta.size else 0
        delta_edges = np.arange(hi + 2) - 0.5
    delta_edges = np.asarray(delta_edges, dtype=float)
    di = np.clip(np.searchsorted(delta_edges, delta, side="right") - 1, 0, delta_edges.size - 2)
    H = np.zeros((s_bins, delta_edges.size - 1))
    np.add.at(H, (si, di), 1.0)
    return H / max(1, s.size), np.linspace(0, 1, s_bins + 1), delta_edges


def normalized_ranks(x) -> np.ndarray:
    """Mid-ranks mapped to ``(0, 1)``: ``(rank - 1/2) / n``."""
    x = np.asarray(x, dtype=float)
    return (stats.rankdata(x, method="average") - 0.5) / x.size


def copula(x, y, bins: int = 10) -> np.ndarray:
    """Density of rank pairs on a ``bins x bins`` grid; independent data gives about 1 per cell."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ValueError("x and y need equal length")
    if x.size == 0:
        raise ValueError("empty input")
    H = np.zeros((bins, bins))
    np.add.at(H, (_unit_index(normalized_ranks(x), bins), _unit_index(normalized_ranks(y), bins)), 1.0)
    return H * bins * bins / x.size


def copula_flatness_bound(n: int, bins: int = 10, sigmas: float = 3.0) -> float:
    """Bound on ``max |cell - 1|`` for independent data, Bonferroni-corrected over cells.

    Each cell count is close to binomial with ``p = 1/bins^2``; the bound is
    the two-sided normal quantile for a family-wise level matching ``sigmas``.
    """
    cells = bins * bins
    alpha = 2 * stats.norm.sf(sigmas) / cells
    z = stats.norm.isf(alpha / 2)
    p = 1.0 / cells
    return float(z * math.sqrt(n * p * (1 - p)) * cells / n)


def spearman(x, y) -> float:
    return float(stats.spearmanr(x, y).statistic)


def bimodality(s, low: float = 0.05, high: float = 0.95) -> dict:
    """Mass at the two ends of ``[0, 1]`` and in the densest 0.25-wide window."""
    s = np.asarray(s, dtype=float)
    lo = float(np.mean(s <= low))
    hi = float(np.mean(s >= high))
    srt = np.sort(s)
    j = np.searchsorted(srt, srt + 0.25, side="right")
    window = float((j - np.arange(srt.size)).max() / srt.size) if srt.size else 0.0
    return {"low": lo, "high": hi, "ends": lo + hi, "window": window}


def is_bimodal(s, ends: float = 0.4, each: float = 0.1) -> bool:
    b = bimodality(s)
    return b["ends"] >= ends and b["low"] >= each and b["high"] >= each


def is_unimodal(s, mass: float = 0.6) -> bool:
    return bimodality(s)["window"] >= mass


# --- state diagnostics ------------------------------------------------------------


@dataclass
class HammingResult:
    distance: int
    upper_bound: bool  # True when the ground set was truncated


def hamming_nearest(state, ground_states, truncated: bool = False) -> int | HammingResult:
    """Minimum Hamming distance to a ground set.

    Returns a plain int for a complete set.  For a truncated set the true
    distance can only be smaller, so a ``HammingResult`` flagged as an upper
    bound is returned instead.
    """
    G = np.asarray(list(ground_states) if not isinstance(ground_states, np.ndarray) else ground_states)
    if G.size == 0:
        raise ValueError("empty ground-state set")
    G = G.reshape(-1, np.asarray(state).size)
    d = int(np.min(np.sum(G != np.asarray(state)[None, :], axis=1)))
    return HammingResult(d, True) if truncated else d


def mean_excited_hamming(states, ground_states, per_distinct: bool = False) -> float:
    """Mean distance to the ground set over non-ground runs (or over distinct excited states)."""
    X = np.asarray(states)
    G = np.asarray(ground_states).reshape(-1, X.shape[1])
    if per_distinct:
        X = np.unique(X, axis=0)
    d = np.array([np.min(np.sum(G != x[None, :], axis=1)) for x in X])
    d = d[d > 0]
    return float(d.mean()) if d.size else math.nan


def _zero_mask(inst: IsingInstance, d: np.ndarray, tol: float) -> np.ndarray:
    return d == 0 if inst.integral else np.abs(d) <= tol


def free_qubits(inst: IsingInstance, state, tol: float = 1e-9) -> int:
    """Sites whose single flip leaves the energy unchanged."""
    return int(np.sum(_zero_mask(inst, delta_energies(inst, state), tol)))


def reduce_single_flip(inst: IsingInstance, state) -> np.ndarray:
    """Flip the one site that lowers the energy most (lowest index on ties); else return a copy."""
    x = np.array(state, copy=True)
    d = delta_energies(inst, x)
    if d.size == 0:
        return x
    k = int(np.argmin(d))
    if d[k] < 0:
        x[k] = -x[k]
    return x


def reduced_success(inst: IsingInstance, states, e0) -> float:
    """Success rate after one single-flip correction of every run."""
    X = np.asarray(states)
    return float(np.mean([energy(inst, reduce_single_flip(inst, x)) == e0 for x in X]))
