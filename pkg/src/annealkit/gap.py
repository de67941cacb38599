"""Spectral gaps from imaginary-time correlators of equilibrium PIMC.

At fixed ``Gamma = A / B`` (``B = 1``) the site-averaged connected
correlator ``C(tau)`` is sampled and ``D(tau) = C(tau) - C(beta/2)`` is
fitted to a single exponential on a window ``[tau0, tau0 + 5]``, where
``tau0`` is the first sampled time with ``D(tau) <= s``.  Three thresholds
``s = (0.006, 0.008, 0.011) * f(Gamma)``, ``f = 0.2 + 0.3 Gamma``, give
``delta1, delta0, delta2``; the window spread is ``max(delta2 - delta0,
delta0 - delta1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import ConfigurationError
from .instance import IsingInstance
from .rng import STREAM_GAP, make_rng
from .sqa import CorrelatorAccumulator, WorldLine, measured_sweeps, run_sweeps

THRESHOLDS = (0.008, 0.006, 0.011)  # s0, s1, s2 in units of f(Gamma)
WINDOW = 5.0  # fit window length, coupling units
DTAU_MAX = 0.05
BASE_SWEEPS = 200_000
NOISE_SIGMAS = 3.0
MIN_POINTS = 5
CLEAN, NEXT_LEVEL, FAILED = "clean", "next-level", "failed"


def threshold_scale(gamma: float) -> float:
    return 0.2 + 0.3 * gamma


def trotter_slices(beta: float, gamma: float, dtau_max: float = DTAU_MAX) -> int:
    """Smallest even ``P`` with ``dtau * max(A, B) <= dtau_max`` at ``A = gamma, B = 1``."""
    P = math.ceil(beta * max(gamma, 1.0) / dtau_max - 1e-9)
    return max(2, P + (P % 2))


def default_sweeps(gamma: float, scale: float) -> int:
    return max(100, int(round(scale * BASE_SWEEPS / gamma)))


@dataclass
class GapEstimate:
    gamma: float
    beta: float
    delta: float
    err: float
    window: tuple[float, float]
    quality: str
    tau0: float
    deltas: tuple[float, float, float] = (math.nan, math.nan, math.nan)  # delta0, delta1, delta2
    err_window: float = math.nan
    err_stat: float = math.nan
    offset: float = math.nan  # C(beta/2)
    n_points: int = 0
    P: int = 0
    sweeps: int = 0
    notes: list[str] = field(default_factory=list)


@dataclass
class _Fit:
    delta: float
    tau0: float
    tau1: float
    idx: np.ndarray


def _window_fit(tau, D, sig, s, window, min_points) -> _Fit | None:
    below = np.flatnonzero(D <= s)
    if below.size == 0:
        return None
    k0 = int(below[0])
    tau0 = float(tau[k0])
    tau1 = min(tau0 + window, float(tau[-1]))
    sel = (tau >= tau0 - 1e-12) & (tau <= tau1 + 1e-12) & (D > NOISE_SIGMAS * sig) & (D > 0)
    idx = np.flatnonzero(sel)
    if idx.size < min_points:
        return _Fit(math.nan, tau0, tau1, idx)
    return _Fit(_slope_fit(tau[idx], D[idx], sig[idx]), tau0, tau1, idx)


def _slope_fit(t, d, sig) -> float:
    w = (d / np.maximum(sig, 1e-300)) ** 2
    y = np.log(d)
    W = w.sum()
    tm = (w * t).sum() / W
    ym = (w * y).sum() / W
    var = (w * (t - tm) ** 2).sum()
    if var <= 0:
        return math.nan
    return float(-(w * (t - tm) * (y - ym)).sum() / var)


def fit_gap(
    C: np.ndarray,
    beta: float,
    gamma: float,
    C_err: np.ndarray | None = None,
    jack: np.ndarray | None = None,
    *,
    window: float = WINDOW,
    min_points: int = MIN_POINTS,
) -> GapEstimate:
    """Apply the three-threshold window fit to a sampled correlator.

    ``C`` has ``P`` entries at ``tau_k = k beta / P``.  ``C_err`` is its
    per-point error (zero if omitted) and ``jack`` optional leave-one-bin-out
    correlator samples used for the statistical error of ``delta0``.
    """
    C = np.asarray(C, dtype=float)
    P = C.size
    half = P // 2
    tau = np.arange(half + 1) * beta / P
    sig_C = np.zeros(P) if C_err is None else np.asarray(C_err, dtype=float)
    offset = float(C[half])
    D = C[: half + 1] - offset
    if jack is not None:
        Dj = jack[:, : half + 1] - jack[:, half : half + 1]
        nb = jack.shape[0]
        sig = np.sqrt((nb - 1) / nb * ((Dj - Dj.mean(axis=0)) ** 2).sum(axis=0))
    else:
        Dj = None
        sig = np.hypot(sig_C[: half + 1], sig_C[half])
    fs = threshold_scale(gamma)
    s0, s1, s2 = (c * fs for c in THRESHOLDS)
    fits = [_window_fit(tau, D, sig, s, window, min_points) for s in (s0, s1, s2)]
    notes = []
    f0 = fits[0]
    deltas = tuple(f.delta if f is not None else math.nan for f in fits)
    if f0 is None or not np.isfinite(deltas[0]) or deltas[0] <= 0:
        notes.append("window on s0 has too few points above the noise floor")
        t0 = f0.tau0 if f0 is not None else math.nan
        t1 = f0.tau1 if f0 is not None else math.nan
        return GapEstimate(gamma, beta, math.nan, math.nan, (t0, t1), FAILED, t0, deltas,
                           offset=offset, n_points=0 if f0 is None else int(f0.idx.size), P=P, notes=notes)
    d0, d1, d2 = deltas
    spread = [d2 - d0 if np.isfinite(d2) else 0.0, d0 - d1 if np.isfinite(d1) else 0.0]
    if not (np.isfinite(d1) and np.isfinite(d2)):
        notes.append("perturbed window lacks points; spread from the available side only")
    err_window = max(max(spread), 0.0)
    err_stat = 0.0
    if Dj is not None:
        dj = np.array([_slope_fit(tau[f0.idx], Dj[b, f0.idx], sig[f0.idx]) if np.all(Dj[b, f0.idx] > 0) else math.nan
                       for b in range(Dj.shape[0])])
        dj = dj[np.isfinite(dj)]
        if dj.size >= 2:
            nb = dj.size
            err_stat = float(np.sqrt((nb - 1) / nb * ((dj - dj.mean()) ** 2).sum()))
    quality = CLEAN
    if offset > s0:
        quality = NEXT_LEVEL
        notes.append("C(beta/2) above s0: a slower mode sits below the window")
    err = max(err_window, NOISE_SIGMAS * err_stat)
    return GapEstimate(gamma, beta, float(d0), float(err), (f0.tau0, f0.tau1), quality, f0.tau0,
                       (float(d0), float(d1), float(d2)), err_window, err_stat, offset,
                       int(f0.idx.size), P, notes=notes)


def sample_correlator(
    inst: IsingInstance,
    gamma: float,
    beta: float,
    P: int,
    sweeps: int,
    rng: np.random.Generator,
    worldline: WorldLine | None = None,
    *,
    therm_fraction: float = 0.2,
    bins: int = 20,
) -> tuple[CorrelatorAccumulator, WorldLine]:
    """Equilibrate at ``A = gamma, B = 1`` and accumulate ``C(tau)`` every sweep after thermalization."""
    wl = worldline if worldline is not None else WorldLine.random(inst.n, P, beta, rng)
    if wl.P != P or wl.beta != beta:
        raise ConfigurationError("warm-start worldline has different P or beta")
    n_therm = int(round(therm_fraction * sweeps))
    per_bin = max(1, math.ceil((sweeps - n_therm) / bins))
    if n_therm:
        run_sweeps(inst, wl, np.full(n_therm, float(gamma)), np.ones(n_therm), rng)
    acc = CorrelatorAccumulator(P, inst.n, bin_size=per_bin)
    chunk = max(1, min(per_bin, (1 << 22) // max(1, P * inst.n)))
    for _ in range(bins):
        left = per_bin
        while left:
            k = min(chunk, left)
            acc.add_improved(*measured_sweeps(inst, wl, gamma, 1.0, k, rng))
            left -= k
    return acc, wl


def estimate_gap(
    inst: IsingInstance,
    gamma: float,
    beta: float,
    P: int | None = None,
    sweeps: int | None = None,
    seed: int = 0,
    *,
    sweep_scale: float = 1.0,
    worldline: WorldLine | None = None,
    rng: np.random.Generator | None = None,
    return_worldline: bool = False,
):
    """Gap at one ``Gamma``; ``sweeps`` defaults to ``sweep_scale * 200000 / Gamma``."""
    if gamma <= 0 or beta <= 0:
        raise ConfigurationError("gamma and beta must be positive")
    P = trotter_slices(beta, gamma) if P is None else int(P)
    sweeps = default_sweeps(gamma, sweep_scale) if sweeps is None else int(sweeps)
    rng = make_rng(seed, STREAM_GAP) if rng is None else rng
    acc, wl = sample_correlator(inst, gamma, beta, P, sweeps, rng, worldline)
    jack, err = acc.jackknife()
    est = fit_gap(acc.result(), beta, gamma, err, jack)
    est.sweeps = sweeps
    return (est, wl) if return_worldline else est


def gap_sweep(
    inst: IsingInstance,
    gamma_max: float = 3.0,
    gamma_min: float = 0.1,
    step: float = 0.1,
    betas=(100.0, 200.0),
    seed: int = 0,
    *,
    sweep_scale: float = 1.0,
    jump_factor: float = 1.5,
    fixed_slices: bool = False,
) -> list[GapEstimate]:
    """Descend ``Gamma`` from ``gamma_max``, warm-starting every point from the previous worldline.

    With ``fixed_slices`` the Trotter rule is applied once at ``gamma_max``;
    otherwise per point, resampling the warm-start worldline.  A clean
    estimate that exceeds the last clean one by more than
    ``jump_factor`` (beyond both error bars) is relabelled next-level.
    """
    n_steps = int(round((gamma_max - gamma_min) / step))
    gammas = [round(gamma_max - k * step, 10) for k in range(n_steps + 1)]
    out = []
    for bi, beta in enumerate(betas):
        beta = float(beta)
        rng = make_rng(seed, STREAM_GAP, bi)
        wl = None
        last = None
        for g in gammas:
            P = trotter_slices(beta, gamma_max if fixed_slices else g)
            if wl is not None and wl.P != P:
                wl = wl.resample(P)
            est, wl = estimate_gap(inst, g, beta, P, None, seed, sweep_scale=sweep_scale,
                                   worldline=wl, rng=rng, return_worldline=True)
            if est.quality == CLEAN and last is not None:
                if est.delta > jump_factor * last.delta and est.delta - est.err > last.delta + last.err:
                    est.quality = NEXT_LEVEL
                    est.notes.append("jump relative to the previous Gamma")
            if est.quality == CLEAN:
                last = est
            out.append(est)
    return out
