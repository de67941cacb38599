"""Exact ground states: Gray-code brute force and the row-by-row chimera DP.

The DP keeps, for every assignment of a cell-row's left (vertically
coupling) spins, the optimal energy of everything above and including that
row together with the number of optimal completions.  Moving to the next
row is a min-plus transform over the vertical bonds, done one bond at a
time because the kernel is separable, followed by adding the new row's own
optimum over its right spins (a 16-state chain along the row).  Cost is
``O(L^2 2^{4L})`` time and ``O(L 2^{4L})`` memory.

Inactive sites are pinned to +1: configurations giving them -1 get
infinite energy, so they never contribute to minima or counts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import CELL_SIZE, row_slices
from .instance import IsingInstance, energy

BRUTE_FORCE_MAX_N = 24
DEFAULT_ENUMERATE_CAP = 10**6
DEFAULT_MEMORY_BUDGET = 3 * 2**30
INF = np.inf


class SolverRefusal(RuntimeError):
    """The requested exact solve exceeds a configured size or memory limit."""


@dataclass
class ExactSolution:
    e0: int | float
    degeneracy: int | None
    states: list[np.ndarray] = field(repr=False)
    method: str
    truncated: bool = False
    degeneracy_overflow: bool = False

    def state_set(self) -> set[bytes]:
        return {np.asarray(s, dtype=np.int8).tobytes() for s in self.states}


def _tolerance(inst: IsingInstance) -> float:
    if inst.integral:
        return 0.0
    scale = float(np.sum(np.abs(inst.J)) + np.sum(np.abs(inst.h)))
    return 1e-9 * max(1.0, scale)


def _codes_to_states(codes: np.ndarray, n: int) -> list[np.ndarray]:
    bits = (codes[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return [row for row in (1 - 2 * bits).astype(np.int8)]


# --- brute force -------------------------------------------------------------

@numba.njit(cache=True)
def _brute_force_min(nbr, nbr_J, deg, h, n):
    x = np.ones(n, dtype=np.int8)
    e = 0.0
    for i in range(n):
        e -= h[i]
        for k in range(deg[i]):
            if nbr[i, k] > i:
                e -= nbr_J[i, k]
    best = e
    for step in range(1, 1 << n):
        i = 0
        while not (step >> i) & 1:
            i += 1
        loc = h[i]
        for k in range(deg[i]):
            loc += nbr_J[i, k] * x[nbr[i, k]]
        e += 2.0 * x[i] * loc
        x[i] = -x[i]
        if e < best:
            best = e
    return best


@numba.njit(cache=True)
def _brute_force_collect(nbr, nbr_J, deg, h, n, e0, tol, cap):
    x = np.ones(n, dtype=np.int8)
    code = 0
    e = 0.0
    for i in range(n):
        e -= h[i]
        for k in range(deg[i]):
            if nbr[i, k] > i:
                e -= nbr_J[i, k]
    out = np.empty(cap, dtype=np.int64)
    count = 0
    if abs(e - e0) <= tol:
        out[0] = 0
        count = 1
    for step in range(1, 1 << n):
        i = 0
        while not (step >> i) & 1:
            i += 1
        loc = h[i]
        for k in range(deg[i]):
            loc += nbr_J[i, k] * x[nbr[i, k]]
        e += 2.0 * x[i] * loc
        x[i] = -x[i]
        code ^= 1 << i
        if abs(e - e0) <= tol:
            if count < cap:
                out[count] = code
            count += 1
    return out[: min(count, cap)], count


def brute_force_solve(inst: IsingInstance, enumerate_all: bool = True,
                      enumerate_cap: int = DEFAULT_ENUMERATE_CAP) -> ExactSolution:
    """Exhaustive minimum over all ``2^N`` states (Gray-code order)."""
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise SolverRefusal(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}, instance has N = {n}")
    nbr, nbr_J, deg = inst.adjacency
    if n == 0:
        return ExactSolution(0, 1, [np.zeros(0, dtype=np.int8)], "brute_force")
    e0 = _brute_force_min(nbr, nbr_J, deg, inst.h_float, n)
    tol = _tolerance(inst)
    cap = enumerate_cap if enumerate_all else 1
    codes, count = _brute_force_collect(nbr, nbr_J, deg, inst.h_float, n, e0, tol, cap)
    states = _codes_to_states(codes, n)
    e0v = energy(inst, states[0])
    return ExactSolution(e0v, int(count), states, "brute_force", truncated=len(states) < count)


# --- row DP kernels ------------------------------------------------------------

@numba.njit(cache=True, inline="always")
def _merge(ea, ca, eb, cb, tol):
    # min with tie-counting; written branch-free
    m = min(ea, eb)
    return m, ca * (ea <= m + tol) + cb * (eb <= m + tol)


@numba.njit(cache=True)
def _bond_eliminate(E, C, bit, J, tol):
    """In place: index bit ``bit`` switches from the eliminated spin x to the new spin y.

    ``E'(y) = min_x E(x) - J s(x) s(y)``, with ``s = +1`` for a clear bit.
    """
    stride = 1 << bit
    low = stride - 1
    for p in range(E.size >> 1):
        i0 = ((p >> bit) << (bit + 1)) | (p & low)
        i1 = i0 | stride
        e0, c0 = E[i0], C[i0]
        e1, c1 = E[i1], C[i1]
        # ties decided on the difference; a dead pair gives nan and count 0
        a, b = e0 - J, e1 + J
        d = b - a
        E[i0] = min(a, b)
        C[i0] = c0 * (d >= -tol) + c1 * (d <= tol)
        a, b = e0 + J, e1 - J
        d = b - a
        E[i1] = min(a, b)
        C[i1] = c0 * (d >= -tol) + c1 * (d <= tol)


@numba.njit(cache=True)
def _row_optimum(cellE, horizJ, L, tol):
    """Optimal energy and count over a row's right spins, per left assignment.

    ``cellE[c, l, r]`` is the energy of cell ``c`` with left/right nibbles
    ``l``/``r``; ``horizJ[c, b]`` couples right spin ``b`` of cells ``c``, ``c+1``.
    Returns arrays over the ``16**L`` left assignments (cell 0 in the low nibble).
    """
    nl = 1 << (4 * L)
    g = np.empty(nl, dtype=np.float64)
    gc = np.empty(nl, dtype=np.int64)
    if L == 1:
        for l in range(16):
            best = INF
            cnt = 0
            for r in range(16):
                best, cnt = _merge(best, cnt, cellE[0, l, r], 1 if cellE[0, l, r] < INF else 0, tol)
            g[l] = best
            gc[l] = cnt if best < INF else 0
        return g, gc
    # T indexed by r + 16 * lpart, lpart over cells 0..c
    T = np.empty(16 * 16, dtype=np.float64)
    TC = np.empty(16 * 16, dtype=np.int64)
    for l in range(16):
        for r in range(16):
            e = cellE[0, l, r]
            T[r + 16 * l] = e
            TC[r + 16 * l] = 1 if e < INF else 0
    nlp = 16
    for c in range(1, L):
        for b in range(4):
            _bond_eliminate(T, TC, b, horizJ[c - 1, b], tol)
        if c < L - 1:
            T2 = np.empty(16 * nlp * 16, dtype=np.float64)
            TC2 = np.empty(16 * nlp * 16, dtype=np.int64)
            for lc in range(16):
                off = lc * nlp
                for lp in range(nlp):
                    for r in range(16):
                        e = T[r + 16 * lp] + cellE[c, lc, r]
                        k = r + 16 * (lp + off)
                        T2[k] = e
                        TC2[k] = TC[r + 16 * lp] if e < INF else 0
            T, TC = T2, TC2
            nlp *= 16
        else:
            for lc in range(16):
                off = lc * nlp
                for lp in range(nlp):
                    best = INF
                    cnt = 0
                    for r in range(16):
                        e = T[r + 16 * lp] + cellE[c, lc, r]
                        if e < INF:
                            best, cnt = _merge(best, cnt, e, TC[r + 16 * lp], tol)
                    g[lp + off] = best
                    gc[lp + off] = cnt if best < INF else 0
    return g, gc


@numba.njit(cache=True)
def _combine(F, FC, g, gc):
    overflow = False
    for i in range(F.size):
        F[i] += g[i]
        a = FC[i]
        b = gc[i]
        if F[i] == INF:
            FC[i] = 0
            continue
        p = a * b
        if a != 0 and (p // a != b or p < 0):
            overflow = True
            p = np.iinfo(np.int64).max
        FC[i] = p
    return overflow


@numba.njit(cache=True)
def _vertical_energy(vJ, y, nbits):
    """``V(x) = -sum_b vJ[b] s(x_b) s(y_b)`` for every x (setting bit b adds ``2 w_b``)."""
    out = np.empty(1 << nbits, dtype=np.float64)
    v = 0.0
    w = np.empty(nbits)
    for b in range(nbits):
        w[b] = vJ[b] * (1.0 - 2.0 * ((y >> b) & 1))
        v -= w[b]
    out[0] = v
    for b in range(nbits):
        step = 1 << b
        for i in range(step):
            out[i + step] = out[i] + 2.0 * w[b]
    return out


@numba.njit(cache=True)
def _dp_forward(cellE, horizJ, vertJ, L, tol):
    size = 1 << (4 * L)
    f_store = np.empty((L, size), dtype=np.float64)
    F, FC = _row_optimum(cellE[0], horizJ[0], L, tol)
    overflow = False
    for r in range(1, L):
        f_store[r - 1, :] = F
        for b in range(4 * L):
            _bond_eliminate(F, FC, b, vertJ[r - 1, b], tol)
        gr, gcr = _row_optimum(cellE[r], horizJ[r], L, tol)
        overflow |= _combine(F, FC, gr, gcr)
    f_store[L - 1, :] = F
    return f_store, FC, overflow


@numba.njit(cache=True)
def _row_backtrack(cellE_row, hJ, L, lv, out):
    """One optimal right nibble per cell for the left assignment ``lv``."""
    best = np.empty((L, 16))
    arg = np.zeros((L, 16), dtype=np.int64)
    for r in range(16):
        best[0, r] = cellE_row[0, lv & 15, r]
    for c in range(1, L):
        lc = (lv >> (4 * c)) & 15
        for r in range(16):
            m = INF
            am = 0
            for rp in range(16):
                e = best[c - 1, rp]
                for b in range(4):
                    e -= hJ[c - 1, b] * (1.0 - 2.0 * ((rp >> b) & 1)) * (1.0 - 2.0 * ((r >> b) & 1))
                if e < m:
                    m = e
                    am = rp
            best[c, r] = m + cellE_row[c, lc, r]
            arg[c, r] = am
    r = np.argmin(best[L - 1])
    for c in range(L - 1, -1, -1):
        out[c] = r
        r = arg[c, r]


@numba.njit(cache=True)
def _traceback_one(f_store, cellE, horizJ, vertJ, L):
    lefts = np.zeros(L, dtype=np.int64)
    rights = np.zeros((L, L), dtype=np.int64)
    lv = np.argmin(f_store[L - 1])
    for r in range(L - 1, -1, -1):
        lefts[r] = lv
        _row_backtrack(cellE[r], horizJ[r], L, lv, rights[r])
        if r > 0:
            lv = np.argmin(f_store[r - 1] + _vertical_energy(vertJ[r - 1], lv, 4 * L))
    return lefts, rights


# --- DP driver ------------------------------------------------------------------

_NIBBLE_SPINS = 1.0 - 2.0 * ((np.arange(16)[:, None] >> np.arange(4)[None, :]) & 1)  # (16, 4)



def dp_memory_estimate(L: int) -> int:
    """Bytes for the stored row tables plus working buffers."""
    size = 1 << (4 * L)
    return size * (8 * L + 16 * 3)


def _row_tables(inst: IsingInstance):
    """Cell energy tables ``(L, L, 16, 16)`` and the horizontal/vertical bond arrays."""
    g = inst.graph
    L = g.L
    n = g.n_sites
    Jfull = np.zeros((n, n))
    e = g.edges
    Jfull[e[:, 0], e[:, 1]] = inst.J
    Jfull[e[:, 1], e[:, 0]] = inst.J
    h_full = np.zeros(n)
    h_full[g.active_sites] = inst.h_float

    base = CELL_SIZE * np.arange(L * L).reshape(L, L)  # first site of each cell
    left = base[..., None] + np.arange(4)  # (L, L, 4)
    right = left + 4
    Jc = Jfull[left[..., :, None], right[..., None, :]]  # (L, L, 4, 4)
    s = _NIBBLE_SPINS  # (16, 4)
    cellE = -(s @ Jc @ s.T)
    cellE -= (h_full[left] @ s.T)[..., :, None]
    cellE -= (h_full[right] @ s.T)[..., None, :]
    bit_set = s < 0  # (16, 4)
    for k in range(4):
        dead_l = ~g.active[left[..., k]]
        dead_r = ~g.active[right[..., k]]
        dead = (dead_l[..., None, None] & bit_set[None, None, :, k, None]) | (
            dead_r[..., None, None] & bit_set[None, None, None, :, k]
        )
        cellE[np.broadcast_to(dead, cellE.shape)] = INF

    horizJ = np.zeros((L, max(L - 1, 1), 4))
    if L > 1:
        horizJ[:, :, :] = Jfull[right[:, :-1], right[:, 1:]]
    vertJ = np.zeros((L, 4 * L))
    if L > 1:
        vertJ[:-1] = Jfull[left[:-1], left[1:]].reshape(L - 1, 4 * L)
    return cellE, horizJ, vertJ


def _row_chain(cellE_row, hJ, L, lefts):
    """Forward chain over a row's cells for fixed left nibbles.

    ``best[c, r]``: optimal energy of cells ``0..c`` with right nibble ``r`` in cell ``c``.
    ``pairs[c]``: horizontal bond energy between right nibbles of cells ``c`` and ``c+1``.
    """
    s = _NIBBLE_SPINS
    pairs = [-(s * hJ[c]) @ s.T for c in range(L - 1)]
    best = np.empty((L, 16))
    best[0] = cellE_row[0, lefts[0]]
    for c in range(1, L):
        best[c] = np.min(best[c - 1][:, None] + pairs[c - 1], axis=0) + cellE_row[c, lefts[c]]
    return best, pairs


def _right_assignments(cellE_row, hJ, L, lefts, tol, limit):
    """All optimal right-nibble tuples (one per cell) for fixed left nibbles."""
    best, pairs = _row_chain(cellE_row, hJ, L, lefts)
    out: list[tuple[int, ...]] = []

    def back(c, r_next, acc):
        if len(out) >= limit:
            return
        if c == L - 1:
            w = best[c]
            target = float(np.min(w))
        else:
            w = best[c] + pairs[c][:, r_next]
            target = best[c + 1][r_next] - cellE_row[c + 1, lefts[c + 1], r_next]
        for r in np.flatnonzero(np.abs(w - target) <= tol):
            if c == 0:
                out.append((int(r),) + acc)
                if len(out) >= limit:
                    return
            else:
                back(c - 1, int(r), (int(r),) + acc)

    back(L - 1, None, ())
    return out


def dp_solve(inst: IsingInstance, enumerate_cap: int = DEFAULT_ENUMERATE_CAP,
             memory_budget: int = DEFAULT_MEMORY_BUDGET) -> ExactSolution:
    """Exact ground energy, degeneracy and (capped) ground states by row DP."""
    g = inst.graph
    L = g.L
    need = dp_memory_estimate(L)
    if need > memory_budget:
        raise SolverRefusal(
            f"row DP for L={L} needs ~{need / 2**30:.1f} GiB, budget is {memory_budget / 2**30:.1f} GiB"
        )
    if inst.n == 0:
        return ExactSolution(0, 1, [np.zeros(0, dtype=np.int8)], "dp")
    tol = _tolerance(inst)
    cellE, horizJ, vertJ = _row_tables(inst)
    nbits = 4 * L
    size = 1 << nbits

    f_store, FC, overflow = _dp_forward(cellE, horizJ, vertJ, L, tol)
    F = f_store[L - 1]
    e0 = float(np.min(F))
    at_min = np.abs(F - e0) <= tol
    if overflow or np.any(FC < 0):
        degeneracy = None
        overflow = True
    else:
        total = sum(int(c) for c in FC[at_min])
        degeneracy = total

    if enumerate_cap <= 1:
        lefts, rights = _traceback_one(f_store, cellE, horizJ, vertJ, L)
        states = [_assemble_state(g, lefts, rights)]
    else:
        states = _dp_enumerate(inst, f_store, cellE, horizJ, vertJ, e0, tol, enumerate_cap)
    e0v = energy(inst, states[0])
    truncated = overflow or (degeneracy is not None and len(states) < degeneracy)
    return ExactSolution(e0v, degeneracy, states, "dp", truncated=truncated, degeneracy_overflow=overflow)


def _assemble_state(g, lefts, rights) -> np.ndarray:
    """Compact state from per-row left codes and per-cell right nibbles."""
    L = g.L
    shifts = np.arange(4 * L)
    x = np.empty(g.n_sites, dtype=np.int8)
    for r, row in enumerate(row_slices(g)):
        x[row["left"]] = 1 - 2 * ((int(lefts[r]) >> shifts) & 1)
        rv = np.asarray(rights[r], dtype=np.int64)
        x[row["right"]] = (1 - 2 * ((rv[:, None] >> shifts[:4]) & 1)).ravel()
    return x[g.active_sites]


def _dp_enumerate(inst, f_rows, cellE, horizJ, vertJ, e0, tol, cap):
    g = inst.graph
    L = g.L
    nbits = 4 * L
    states: list[np.ndarray] = []

    def emit(left_rows, right_rows):
        states.append(_assemble_state(g, left_rows, right_rows))

    def rights_for(r, lv):
        lefts = [(lv >> (4 * c)) & 15 for c in range(L)]
        return _right_assignments(cellE[r], horizJ[r], L, lefts, tol, cap)

    def descend(r, lv, chosen_left, chosen_right):
        """Row ``r`` has left assignment ``lv``; enumerate rows r..0 below it."""
        if len(states) >= cap:
            return
        rights = rights_for(r, lv)
        if r == 0:
            for rv in rights:
                emit([lv] + chosen_left, [rv] + chosen_right)
                if len(states) >= cap:
                    return
            return
        vJ = vertJ[r - 1]
        y = lv
        w = f_rows[r - 1] + _vertical_energy(vJ, y, nbits)
        m = float(np.min(w))
        prev = np.flatnonzero(np.abs(w - m) <= tol)
        for rv in rights:
            for px in prev:
                descend(r - 1, int(px), [lv] + chosen_left, [rv] + chosen_right)
                if len(states) >= cap:
                    return

    last = f_rows[-1]
    for lv in np.flatnonzero(np.abs(last - e0) <= tol):
        descend(L - 1, int(lv), [], [])
        if len(states) >= cap:
            break
    return states
