"""Ising spin-glass instances on chimera graphs.

Energy convention: ``E(x) = -sum_{i<j} J_ij x_i x_j - sum_i h_i x_i`` with
``x_i = +-1``.  States are int8 arrays over the *active* sites, in the order
of ``graph.active_sites``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .graph import ChimeraGraph, ConfigurationError, build_chimera
from .rng import STREAM_GAUGE, STREAM_INSTANCE, make_rng

MAX_DEGREE = 6


class InstanceParseError(ValueError):
    pass


def _as_numeric(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype.kind in "iub":
        return arr.astype(np.int64)
    arr = arr.astype(np.float64)
    if np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)):
        return arr.astype(np.int64)
    return arr


@dataclass(frozen=True, eq=False)
class IsingInstance:
    graph: ChimeraGraph
    J: np.ndarray  # aligned with graph.edges
    h: np.ndarray  # aligned with graph.active_sites

    def __post_init__(self):
        J = _as_numeric(self.J)
        h = _as_numeric(self.h)
        if J.shape != (len(self.graph.edges),):
            raise ConfigurationError(f"J has shape {J.shape}, graph has {len(self.graph.edges)} edges")
        if h.shape != (self.graph.n_active,):
            raise ConfigurationError(f"h has shape {h.shape}, graph has {self.graph.n_active} active sites")
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.graph.n_active

    @property
    def integral(self) -> bool:
        return self.J.dtype.kind == "i" and self.h.dtype.kind == "i"

    @property
    def is_pm1(self) -> bool:
        """Couplings in {-1, 0, +1} and fields in {-1, 0, +1}."""
        return bool(np.all(np.isin(self.J, (-1, 0, 1))) and np.all(np.isin(self.h, (-1, 0, 1))))

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Padded neighbor table over compact indices: ``(nbr, nbr_J, deg)``."""
        n = self.n
        nbr = np.zeros((n, MAX_DEGREE), dtype=np.int64)
        nbr_J = np.zeros((n, MAX_DEGREE), dtype=np.float64)
        deg = np.zeros(n, dtype=np.int64)
        for (a, b), w in zip(self.graph.compact_edges, self.J):
            nbr[a, deg[a]], nbr_J[a, deg[a]] = b, w
            deg[a] += 1
            nbr[b, deg[b]], nbr_J[b, deg[b]] = a, w
            deg[b] += 1
        for arr in (nbr, nbr_J, deg):
            arr.setflags(write=False)
        return nbr, nbr_J, deg

    @cached_property
    def h_float(self) -> np.ndarray:
        out = self.h.astype(np.float64)
        out.setflags(write=False)
        return out

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric J over compact indices (small instances only)."""
        M = np.zeros((self.n, self.n))
        e = self.graph.compact_edges
        M[e[:, 0], e[:, 1]] = self.J
        M[e[:, 1], e[:, 0]] = self.J
        return M

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IsingInstance):
            return NotImplemented
        return (
            self.graph == other.graph
            and np.array_equal(self.J, other.J)
            and np.array_equal(self.h, other.h)
        )

    __hash__ = None


def from_couplings(graph: ChimeraGraph, J: dict | None = None, h: dict | None = None) -> IsingInstance:
    """Build an instance from ``{(i, j): J_ij}`` / ``{i: h_i}`` over global indices.

    Missing active edges get ``J = 0``; missing fields get ``h = 0``.
    """
    J = J or {}
    h = h or {}
    pos = {(int(a), int(b)): k for k, (a, b) in enumerate(graph.edges)}
    Jv = np.zeros(len(graph.edges), dtype=object)
    Jv[:] = 0
    for (a, b), w in J.items():
        a, b = min(a, b), max(a, b)
        if (a, b) not in pos:
            raise ConfigurationError(f"({a}, {b}) is not an active chimera edge")
        Jv[pos[(a, b)]] = w
    hv = np.zeros(graph.n_active, dtype=object)
    hv[:] = 0
    for i, w in h.items():
        ci = graph.compact_index[i] if 0 <= i < graph.n_sites else -1
        if ci < 0:
            raise ConfigurationError(f"site {i} is not active")
        hv[ci] = w
    return IsingInstance(graph, _as_numeric(Jv.tolist()), _as_numeric(hv.tolist()))


def random_instance(
    g: ChimeraGraph, seed: int, with_fields: bool = False, instance_id: int | None = None
) -> IsingInstance:
    """i.i.d. +-1 couplings (and fields); ``instance_id`` selects a sub-stream of ``seed``."""
    rng = make_rng(seed, STREAM_INSTANCE) if instance_id is None else make_rng(seed, STREAM_INSTANCE, instance_id)
    J = 2 * rng.integers(0, 2, size=len(g.edges)) - 1
    if with_fields:
        h = 2 * rng.integers(0, 2, size=g.n_active) - 1
    else:
        h = np.zeros(g.n_active, dtype=np.int64)
    return IsingInstance(g, J, h)


def _result(inst: IsingInstance, value):
    return int(round(value)) if inst.integral else float(value)


def energy(inst: IsingInstance, x) -> int | float:
    x = np.asarray(x)
    if x.shape != (inst.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({inst.n},)")
    e = inst.graph.compact_edges
    xf = x.astype(np.int64) if inst.integral else x.astype(np.float64)
    val = -np.sum(inst.J * xf[e[:, 0]] * xf[e[:, 1]]) - np.sum(inst.h * xf)
    return _result(inst, val)


def energies(inst: IsingInstance, X: np.ndarray) -> np.ndarray:
    """Energies of a batch of states, shape ``(m, n)``."""
    X = np.asarray(X, dtype=np.int64 if inst.integral else np.float64)
    e = inst.graph.compact_edges
    return -(X[:, e[:, 0]] * X[:, e[:, 1]]) @ inst.J - X @ inst.h


def local_field(inst: IsingInstance, x, i: int):
    nbr, nbr_J, deg = inst.adjacency
    d = deg[i]
    return float(np.dot(nbr_J[i, :d], np.asarray(x)[nbr[i, :d]]) + inst.h_float[i])


def delta_energy(inst: IsingInstance, x, i: int) -> int | float:
    """``energy(flip_i(x)) - energy(x)``; ``i`` is a compact index."""
    return _result(inst, 2.0 * float(x[i]) * local_field(inst, x, i))


def delta_energies(inst: IsingInstance, x) -> np.ndarray:
    """Single-flip energy changes for every site at once."""
    xf = np.asarray(x, dtype=np.float64)
    nbr, nbr_J, _ = inst.adjacency
    loc = np.sum(nbr_J * xf[nbr], axis=1) + inst.h_float
    d = 2.0 * xf * loc
    return np.rint(d).astype(np.int64) if inst.integral else d


def gauge_transform(inst: IsingInstance, a) -> IsingInstance:
    a = np.asarray(a, dtype=np.int64)
    if a.shape != (inst.n,) or not np.all(np.abs(a) == 1):
        raise ValueError("gauge must be a +-1 vector over active sites")
    e = inst.graph.compact_edges
    return IsingInstance(inst.graph, inst.J * a[e[:, 0]] * a[e[:, 1]], inst.h * a)


def random_gauge(g: ChimeraGraph, seed: int, gauge_id: int = 0, instance_id: int = 0) -> np.ndarray:
    rng = make_rng(seed, STREAM_GAUGE, instance_id, gauge_id)
    return (2 * rng.integers(0, 2, size=g.n_active) - 1).astype(np.int8)


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    return (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)


# --- serialization -----------------------------------------------------------

_HEADER = re.compile(r"#\s*chimera\s+L\s*=\s*(\d+)\s*$")


def _fmt(v) -> str:
    return str(int(v)) if float(v) == int(v) else repr(float(v))


def write_instance(inst: IsingInstance, path: str | Path) -> None:
    g = inst.graph
    lines = [f"# chimera L={g.L}"]
    if not g.is_full():
        lines.append("# inactive " + " ".join(str(i) for i in np.flatnonzero(~g.active)))
    for i, hv in zip(g.active_sites, inst.h):
        if hv != 0:
            lines.append(f"{i} {i} {_fmt(hv)}")
    for (a, b), w in zip(g.edges, inst.J):
        lines.append(f"{a} {b} {_fmt(w)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_instance(path: str | Path, graph: ChimeraGraph | None = None) -> IsingInstance:
    """Parse the ``i j value`` format; ``i == j`` is a field, ``i < j`` a coupling.

    The graph comes from the header (``# chimera L=..`` plus an optional
    ``# inactive ...`` line) unless ``graph`` is given explicitly.
    """
    text = Path(path).read_text().splitlines()
    L = None
    inactive: list[int] = []
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER.match(line)
            if m:
                L = int(m.group(1))
            elif line[1:].strip().startswith("inactive"):
                try:
                    inactive += [int(t) for t in line[1:].split()[1:]]
                except ValueError:
                    raise InstanceParseError(f"{path}:{lineno}: malformed inactive list") from None
            continue
        body.append((lineno, line))

    if graph is None:
        if L is None:
            raise InstanceParseError(f"{path}: missing '# chimera L=<L>' header")
        mask = np.ones(8 * L * L, dtype=bool)
        for i in inactive:
            if not 0 <= i < mask.size:
                raise InstanceParseError(f"{path}: inactive site {i} out of range")
            mask[i] = False
        graph = build_chimera(L, mask)
    elif L is not None and L != graph.L:
        raise InstanceParseError(f"{path}: header L={L} does not match graph L={graph.L}")

    pos = {(int(a), int(b)): k for k, (a, b) in enumerate(graph.edges)}
    J: dict[int, object] = {}
    h: dict[int, object] = {}
    for lineno, line in body:
        toks = line.split()
        if len(toks) != 3:
            raise InstanceParseError(f"{path}:{lineno}: expected 'i j value', got {line!r}")
        try:
            i, j = int(toks[0]), int(toks[1])
            v = float(toks[2])
            v = int(v) if v == int(v) and "." not in toks[2] and "e" not in toks[2].lower() else v
        except ValueError:
            raise InstanceParseError(f"{path}:{lineno}: malformed line {line!r}") from None
        if not (0 <= i < graph.n_sites and 0 <= j < graph.n_sites):
            raise InstanceParseError(f"{path}:{lineno}: site index out of range in {line!r}")
        if i > j:
            i, j = j, i
        if i == j:
            c = graph.compact_index[i]
            if c < 0:
                raise InstanceParseError(f"{path}:{lineno}: field on inactive site {i}")
            if c in h:
                raise InstanceParseError(f"{path}:{lineno}: duplicate field on site {i}")
            h[c] = v
        else:
            if not (graph.active[i] and graph.active[j]):
                raise InstanceParseError(f"{path}:{lineno}: coupling ({i}, {j}) touches an inactive site")
            k = pos.get((i, j))
            if k is None:
                raise InstanceParseError(f"{path}:{lineno}: ({i}, {j}) is not a chimera edge")
            if k in J:
                raise InstanceParseError(f"{path}:{lineno}: duplicate edge ({i}, {j})")
            J[k] = v
    Jv = [J.get(k, 0) for k in range(len(graph.edges))]
    hv = [h.get(c, 0) for c in range(graph.n_active)]
    return IsingInstance(graph, _as_numeric(Jv), _as_numeric(hv))


def state_to_string(x) -> str:
    return "".join("+" if v > 0 else "-" for v in np.asarray(x))


def state_from_string(s: str) -> np.ndarray:
    s = s.strip()
    if set(s) - {"+", "-"}:
        raise ValueError(f"state string may only contain '+' and '-': {s!r}")
    return np.array([1 if c == "+" else -1 for c in s], dtype=np.int8)


def write_states(states, path: str | Path) -> None:
    Path(path).write_text("".join(state_to_string(x) + "\n" for x in states))


def read_states(path: str | Path) -> list[np.ndarray]:
    return [state_from_string(l) for l in Path(path).read_text().splitlines() if l.strip()]
