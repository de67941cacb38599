"""Discrete-time path-integral Monte Carlo for ``H = -A sum_i sx_i + B H_ising``.

The worldline holds ``P`` Trotter slices of the classical spins at
imaginary-time step ``dtau = beta / P``.  Slices of the same site are
coupled ferromagnetically with ``Jperp = -ln tanh(dtau * A) / 2``.

One sweep visits every site once.  For site ``i`` the time links are cut
(always between antiparallel neighbours, with probability
``exp(-2 Jperp) = tanh(dtau * A)`` between parallel ones), and every
resulting segment is flipped with probability
``min(1, exp(-dtau * B * dE_segment)) / 2``.  No cluster ever extends along
spatial bonds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .graph import ConfigurationError
from .instance import IsingInstance, energies
from .outcome import AnnealOutcome
from .sa import _as_rng, _seed_value

JPERP_CAP = 10.0
DEFAULT_SLICES = 64
DEFAULT_TEMPERATURES = (0.1, 0.2, 0.3, 0.5, 1.0)

# Hand-made stand-in for the device schedule: A(0) = B(1) = 1 and the
# two curves cross near t/t_f = 0.4.  Not a digitization of measured data.
SCHEDULE_II_EXAMPLE = """\
# t/t_f   A      B
0.00  1.0000  0.0200
0.05  0.8574  0.0225
0.10  0.7290  0.0298
0.15  0.6141  0.0421
0.20  0.5120  0.0592
0.25  0.4219  0.0813
0.30  0.3430  0.1082
0.35  0.2746  0.1401
0.40  0.2160  0.1768
0.45  0.1664  0.2185
0.50  0.1250  0.2650
0.55  0.0911  0.3165
0.60  0.0640  0.3728
0.65  0.0429  0.4341
0.70  0.0270  0.5002
0.75  0.0156  0.5713
0.80  0.0080  0.6472
0.85  0.0034  0.7281
0.90  0.0010  0.8138
0.95  0.0001  0.9045
1.00  0.0000  1.0000
"""


@dataclass(frozen=True)
class QASchedule:
    """Annealing schedule ``(A(f), B(f))`` over progress ``f = t / t_f``.

    ``kind="linear"`` ramps ``A = A0 (1 - f)`` and ``B = B1 f``;
    ``kind="tabulated"`` interpolates sampled columns ``(f, A, B)``.
    """

    kind: str = "linear"
    sweeps: int = 1000
    A0: float = 1.0
    B1: float = 1.0
    f: np.ndarray | None = field(default=None, repr=False)
    A: np.ndarray | None = field(default=None, repr=False)
    B: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if int(self.sweeps) != self.sweeps or self.sweeps < 1:
            raise ConfigurationError(f"sweeps must be a positive integer, got {self.sweeps}")
        if self.kind == "linear":
            if self.A0 <= 0 or self.B1 <= 0:
                raise ConfigurationError("linear schedule needs A0 > 0 and B1 > 0")
        elif self.kind == "tabulated":
            f, A, B = (np.asarray(v, dtype=float) for v in (self.f, self.A, self.B))
            if not (f.ndim == 1 and f.size >= 2 and f.shape == A.shape == B.shape):
                raise ConfigurationError("tabulated schedule needs equal-length columns with >= 2 rows")
            if np.any(np.diff(f) <= 0) or abs(f[0]) > 1e-12 or abs(f[-1] - 1) > 1e-12:
                raise ConfigurationError("t/t_f column must increase strictly from 0 to 1")
            if np.any(np.diff(A) > 0) or np.any(np.diff(B) < 0):
                raise ConfigurationError("A must be non-increasing and B non-decreasing")
            if A[0] <= 0 or B[-1] <= 0:
                raise ConfigurationError("need A(0) > 0 and B(t_f) > 0")
            for name, v in (("f", f), ("A", A), ("B", B)):
                object.__setattr__(self, name, v)
        else:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")

    def at(self, f) -> tuple[np.ndarray, np.ndarray]:
        f = np.asarray(f, dtype=float)
        if self.kind == "linear":
            return self.A0 * (1 - f), self.B1 * f
        return np.interp(f, self.f, self.A), np.interp(f, self.f, self.B)

    def progress(self) -> np.ndarray:
        K = int(self.sweeps)
        return np.ones(1) if K == 1 else np.arange(K) / (K - 1)

    def gamma(self, f):
        A, B = self.at(f)
        with np.errstate(divide="ignore"):
            return A / B

    @classmethod
    def from_table(cls, text: str, sweeps: int) -> "QASchedule":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            arr = np.array(rows, dtype=float)
        except ValueError as exc:
            raise ConfigurationError(f"bad schedule table: {exc}") from None
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ConfigurationError("schedule table needs three columns: t/t_f A B")
        return cls("tabulated", sweeps, f=arr[:, 0], A=arr[:, 1], B=arr[:, 2])

    @classmethod
    def from_file(cls, path: str | Path, sweeps: int) -> "QASchedule":
        return cls.from_table(Path(path).read_text(), sweeps)

    @classmethod
    def example_ii(cls, sweeps: int) -> "QASchedule":
        return cls.from_table(SCHEDULE_II_EXAMPLE, sweeps)


@dataclass
class WorldLine:
    """Spins of shape ``(P, N)``; slice ``P - 1`` links back to slice 0."""

    spins: np.ndarray
    beta: float

    @property
    def P(self) -> int:
        return self.spins.shape[0]

    @property
    def n(self) -> int:
        return self.spins.shape[1]

    def resample(self, P: int) -> "WorldLine":
        """Nearest-slice copy onto ``P`` slices at the same ``beta`` (for warm starts)."""
        idx = (np.arange(P) * self.P) // P
        return WorldLine(self.spins[idx].copy(), self.beta)

    @classmethod
    def random(cls, n: int, P: int, beta: float, rng: np.random.Generator) -> "WorldLine":
        s = (2 * rng.integers(0, 2, size=(P, n)) - 1).astype(np.int8)
        return cls(s, float(beta))


# --- kernels -------------------------------------------------------------------


@numba.njit(cache=True)
def _geometric(rng, logq):
    """Parallel links skipped before the next random cut; ``logq = log(1 - pbreak)``."""
    if logq == -np.inf:
        return 0
    g = np.log(1.0 - rng.random()) / logq
    return np.int64(g) if g < 1e18 else np.int64(10**18)


@numba.njit(cache=True)
def _site_update(s, i, nbr, nbr_J, deg, h, logq, factor, rng, loc, cut, measure, v, same):
    """Segment update of site ``i``.

    With ``measure`` set, also writes the conditional mean of the updated
    spins into ``v`` and adds each segment's same-segment pair weight
    ``1 - (1 - 2 p)^2`` per lag into ``same`` (see ``CorrelatorAccumulator``).
    """
    P = s.shape[1]
    row = s[i]
    for t in range(P):
        loc[t] = h[i]
    for m in range(deg[i]):
        Jm = nbr_J[i, m]
        other = s[nbr[i, m]]
        for t in range(P):
            loc[t] += Jm * other[t]
    first = -1
    skip = _geometric(rng, logq)
    for t in range(P):
        t1 = t + 1 if t + 1 < P else 0
        if row[t] != row[t1]:
            cut[t] = True
        elif skip == 0:
            cut[t] = True
            skip = _geometric(rng, logq)
        else:
            cut[t] = False
            skip -= 1
        if cut[t] and first < 0:
            first = t
    if first < 0:
        tot = 0.0
        for t in range(P):
            tot += 2.0 * row[t] * loc[t]
        p = 0.5 * min(1.0, np.exp(-factor * tot))
        if measure:
            for t in range(P):
                v[t] = row[t] * (1.0 - 2.0 * p)
            w = 1.0 - (1.0 - 2.0 * p) ** 2
            for k in range(P):
                same[k] += w * (P - k)
        if rng.random() < p:
            for t in range(P):
                row[t] = -row[t]
        return
    # walk the ring from just after the first cut; every cut closes a segment
    tot = 0.0
    start = first + 1
    for k in range(first + 1, first + 1 + P):
        t = k - P if k >= P else k
        tot += 2.0 * row[t] * loc[t]
        if cut[t]:
            length = k - start + 1
            p = 0.5 * min(1.0, np.exp(-factor * tot))
            flip = rng.random() < p
            if measure:
                c = 1.0 - 2.0 * p
                w = 1.0 - c * c
                for q in range(start, k + 1):
                    u = q - P if q >= P else q
                    v[u] = row[u] * c
                for lag in range(length):
                    same[lag] += w * (length - lag)
            if flip:
                for q in range(start, k + 1):
                    u = q - P if q >= P else q
                    row[u] = -row[u]
            tot = 0.0
            start = k + 1


@numba.njit(cache=True)
def _power_sum(F, out):
    """``out += sum over leading axes of |F|^2`` for complex ``F`` of shape ``(K, N, M)``."""
    for a in range(F.shape[0]):
        for b in range(F.shape[1]):
            for c in range(F.shape[2]):
                z = F[a, b, c]
                out[c] += z.real * z.real + z.imag * z.imag


@numba.njit(cache=True)
def _sweeps(s, nbr, nbr_J, deg, h, A, B, beta, rng, jcap, measure, V, same):
    """Run ``A.size`` sweeps in place on ``s`` of shape ``(N, P)``; returns True if Jperp was capped.

    With ``measure`` set, ``V[k]`` (N, P) receives the conditional spin
    means seen during sweep ``k`` and ``same`` (P,) accumulates the
    same-segment weights over all sites and sweeps.
    """
    N, P = s.shape
    dtau = beta / P
    loc = np.empty(P)
    cut = np.empty(P, dtype=np.bool_)
    capped = False
    pmin = np.exp(-2.0 * jcap)
    for k in range(A.size):
        pbreak = np.tanh(dtau * A[k])
        if pbreak < pmin:
            pbreak = pmin
            capped = True
        logq = np.log1p(-pbreak) if pbreak < 1.0 else -np.inf
        factor = dtau * B[k]
        kv = k if measure else 0
        for i in range(N):
            _site_update(s, i, nbr, nbr_J, deg, h, logq, factor, rng, loc, cut, measure, V[kv, i if measure else 0], same)
    return capped


# --- public drivers -------------------------------------------------------------


def _tables(inst: IsingInstance):
    nbr, nbr_J, deg = inst.adjacency
    return nbr, nbr_J, deg, inst.h_float


def run_sweeps(
    inst: IsingInstance,
    wl: WorldLine,
    A,
    B,
    rng: np.random.Generator,
    *,
    jcap: float = JPERP_CAP,
) -> bool:
    """Advance ``wl`` in place by ``len(A)`` sweeps with per-sweep ``A``, ``B``.

    Returns True if the time coupling had to be capped at ``jcap`` anywhere.
    """
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError("A and B need equal length")
    if wl.n != inst.n:
        raise ValueError("worldline does not match the instance")
    s = np.ascontiguousarray(wl.spins.T)
    capped = bool(_sweeps(s, *_tables(inst), A, B, float(wl.beta), rng, float(jcap), False, _NO_V, _NO_SAME))
    wl.spins = np.ascontiguousarray(s.T)
    return capped


_NO_V = np.zeros((1, 1, 1))
_NO_SAME = np.zeros(1)


def measured_sweeps(
    inst: IsingInstance, wl: WorldLine, A: float, B: float, count: int, rng: np.random.Generator,
    *, jcap: float = JPERP_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """``count`` fixed-(A, B) sweeps returning the improved-estimator pieces ``(V, same)``.

    ``V[k, j, t]`` is the expectation of ``s_j(t)`` over site ``j``'s segment
    flips in sweep ``k`` given the state it saw; ``same[lag]`` sums over
    sites, sweeps and segments ``(1 - (1 - 2p)^2) * max(0, len - lag)``.
    """
    s = np.ascontiguousarray(wl.spins.T)
    V = np.empty((count,) + s.shape)
    same = np.zeros(wl.P)
    _sweeps(s, *_tables(inst), np.full(count, float(A)), np.full(count, float(B)), float(wl.beta), rng,
            float(jcap), True, V, same)
    wl.spins = np.ascontiguousarray(s.T)
    return V, same


def equilibrate(
    inst: IsingInstance,
    A: float,
    B: float,
    beta: float,
    P: int,
    sweeps: int,
    rng: np.random.Generator,
    worldline: WorldLine | None = None,
) -> WorldLine:
    """Fixed-(A, B) sampling; starts from ``worldline`` or a random one."""
    wl = worldline if worldline is not None else WorldLine.random(inst.n, P, beta, rng)
    if sweeps > 0:
        run_sweeps(inst, wl, np.full(sweeps, float(A)), np.full(sweeps, float(B)), rng)
    return wl


def slice_energies(inst: IsingInstance, wl: WorldLine) -> np.ndarray:
    return energies(inst, wl.spins)


def sqa_run(
    inst: IsingInstance,
    sched: QASchedule,
    T: float,
    P: int = DEFAULT_SLICES,
    seed=0,
    *,
    strict: bool = False,
    jcap: float = JPERP_CAP,
) -> AnnealOutcome:
    """Anneal a random worldline along ``sched`` at temperature ``T``.

    The outcome is the lowest-energy slice.  With ``strict=True`` it is the
    highest-energy slice instead, so a run only counts as a success when
    every slice is a ground state.
    """
    if P < 2:
        raise ConfigurationError(f"need at least 2 slices, got {P}")
    if T <= 0:
        raise ConfigurationError(f"temperature must be positive, got {T}")
    rng = _as_rng(seed)
    beta = 1.0 / T
    wl = WorldLine.random(inst.n, P, beta, rng)
    A, B = sched.at(sched.progress())
    capped = run_sweeps(inst, wl, A, B, rng, jcap=jcap) if inst.n else False
    E = slice_energies(inst, wl)
    k = int(np.argmax(E) if strict else np.argmin(E))
    agree = bool(np.all(wl.spins == wl.spins[0]))
    params = {"schedule": sched.kind, "sweeps": int(sched.sweeps), "T": float(T), "P": int(P), "strict": strict}
    flags = {"jperp_capped": capped, "slices_agree": agree}
    return AnnealOutcome(wl.spins[k].copy(), E[k].item(), "sqa", _seed_value(seed), params, flags)


def sigma_x_estimate(wl: WorldLine, A: float) -> float:
    """Per-link estimator of ``<sx>``, averaged over sites and links.

    A link between equal slices contributes ``tanh(dtau A)``, a link between
    opposite slices ``coth(dtau A)``; this is ``d ln Z / d(dtau A)`` per link.
    """
    x = wl.beta / wl.P * A
    same = wl.spins == np.roll(wl.spins, -1, axis=0)
    return float(np.where(same, np.tanh(x), 1.0 / np.tanh(x)).mean())


class CorrelatorAccumulator:
    """Streams measurements into the connected imaginary-time correlator.

    ``C(tau_k) = mean_j [<s_j(tau_k) s_j(0)> - <s_j>^2]``, with every
    measurement's autocorrelation taken over all ``P`` time origins.  Only
    power spectra are summed (one forward FFT per measurement); lags are
    recovered per bin at the end.  Consecutive measurements share a bin of
    ``bin_size`` so that a jackknife error can be formed.
    """

    def __init__(self, P: int, n: int, bin_size: int = 1):
        self.P, self.n, self.bin_size = P, n, max(1, int(bin_size))
        self._power: list[np.ndarray] = []  # per bin: summed |FFT|^2 over sites
        self._direct: list[np.ndarray] = []  # per bin: lag-domain additive terms
        self._mean: list[np.ndarray] = []  # per bin: per-site magnetization sums
        self._count: list[int] = []

    def _bin(self) -> int:
        if not self._count or self._count[-1] >= self.bin_size:
            self._power.append(np.zeros(self.P // 2 + 1))
            self._direct.append(np.zeros(self.P))
            self._mean.append(np.zeros(self.n))
            self._count.append(0)
        return len(self._count) - 1

    def add(self, wl: WorldLine) -> None:
        """Plain estimator from worldline spins."""
        b = self._bin()
        s = wl.spins.astype(np.float64)
        F = np.fft.rfft(s, axis=0)
        self._power[b] += (F.real**2 + F.imag**2).sum(axis=1)
        self._mean[b] += s.mean(axis=0)
        self._count[b] += 1

    def add_improved(self, V: np.ndarray, same: np.ndarray) -> None:
        """Conditional-mean estimator from ``measured_sweeps`` output, ``V`` of shape ``(K, N, P)``.

        The batch goes into the current bin as a whole.
        """
        b = self._bin()
        _power_sum(np.fft.rfft(V, axis=-1), self._power[b])
        self._direct[b] += same + np.concatenate(([0.0], same[:0:-1]))
        self._mean[b] += V.mean(axis=2).sum(axis=0)
        self._count[b] += V.shape[0]

    @property
    def count(self) -> int:
        return int(sum(self._count))

    @property
    def bins(self) -> int:
        return len(self._count)

    def _correlator(self, power, direct, mean, m) -> np.ndarray:
        P, n = self.P, self.n
        corr = (np.fft.irfft(power, n=P) + direct) / (P * n * m)
        return corr - np.mean((mean / m) ** 2)

    def result(self) -> np.ndarray:
        m = self.count
        if m == 0:
            raise ValueError("no measurements")
        return self._correlator(np.sum(self._power, axis=0), np.sum(self._direct, axis=0),
                                np.sum(self._mean, axis=0), m)

    def jackknife(self) -> tuple[np.ndarray, np.ndarray]:
        """Leave-one-bin-out samples of ``C`` (shape ``(bins, P)``) and the error per tau."""
        nb = self.bins
        if nb < 2:
            raise ValueError("need at least two bins for a jackknife")
        pw, dr, mn = (np.asarray(x) for x in (self._power, self._direct, self._mean))
        cnt = np.asarray(self._count)
        pt, dt, mt, m = pw.sum(axis=0), dr.sum(axis=0), mn.sum(axis=0), cnt.sum()
        samples = np.array(
            [self._correlator(pt - pw[b], dt - dr[b], mt - mn[b], m - cnt[b]) for b in range(nb)]
        )
        err = np.sqrt((nb - 1) / nb * ((samples - samples.mean(axis=0)) ** 2).sum(axis=0))
        return samples, err


def measure_correlator(worldlines) -> np.ndarray:
    """Site-averaged connected correlator ``C(tau_k)``, ``k = 0..P-1``, over a worldline stream."""
    acc = None
    for wl in worldlines:
        if acc is None:
            acc = CorrelatorAccumulator(wl.P, wl.n)
        acc.add(wl)
    if acc is None:
        raise ValueError("no worldlines given")
    return acc.result()
