"""Chimera connectivity: L x L unit cells of eight qubits (a K4,4 each).

Site numbering is row-major over cells; inside a cell, sites 0-3 are the
left half (couple vertically to the cell above/below) and sites 4-7 the
right half (couple horizontally to the cell left/right).  Global index of
site ``k`` in cell ``(r, c)`` is ``8 * (r * L + c) + k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

LEFT, RIGHT = 0, 1
CELL_SIZE = 8


class ConfigurationError(ValueError):
    """Invalid graph or instance configuration."""


def site_index(L: int, row: int, col: int, k: int) -> int:
    return CELL_SIZE * (row * L + col) + k


def full_edge_count(L: int) -> int:
    return 16 * L * L + 8 * L * (L - 1)


@dataclass(frozen=True, eq=False)
class ChimeraGraph:
    """Chimera topology with an active-site mask.

    ``edges`` holds only edges whose endpoints are both active, as an
    ``(E, 2)`` array of global indices with ``i < j`` in a fixed order.
    ``active_sites`` lists the active global indices in ascending order;
    spin states are indexed by position in that list (compact index).
    """

    L: int
    active: np.ndarray
    edges: np.ndarray
    cell: np.ndarray = field(repr=False)
    row: np.ndarray = field(repr=False)
    col: np.ndarray = field(repr=False)
    side: np.ndarray = field(repr=False)
    active_sites: np.ndarray = field(repr=False)
    compact_index: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return CELL_SIZE * self.L * self.L

    @property
    def n_active(self) -> int:
        return int(self.active_sites.size)

    @property
    def compact_edges(self) -> np.ndarray:
        return self.compact_index[self.edges]

    def neighbors(self, i: int) -> list[int]:
        """Active neighbors of global site ``i``."""
        e = self.edges
        return sorted(np.concatenate([e[e[:, 0] == i, 1], e[e[:, 1] == i, 0]]).tolist())

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=np.int64)
        np.add.at(deg, self.edges.ravel(), 1)
        return deg

    def is_full(self) -> bool:
        return bool(self.active.all())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChimeraGraph):
            return NotImplemented
        return self.L == other.L and np.array_equal(self.active, other.active)

    def __hash__(self) -> int:
        return hash((self.L, self.active.tobytes()))


def _all_edges(L: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(L):
        for c in range(L):
            for a in range(4):
                for b in range(4, 8):
                    edges.append((site_index(L, r, c, a), site_index(L, r, c, b)))
            if r + 1 < L:
                for a in range(4):
                    edges.append((site_index(L, r, c, a), site_index(L, r + 1, c, a)))
            if c + 1 < L:
                for b in range(4, 8):
                    edges.append((site_index(L, r, c, b), site_index(L, r, c + 1, b)))
    return edges


def build_chimera(L: int, active_mask: Sequence[bool] | np.ndarray | None = None) -> ChimeraGraph:
    if int(L) != L or L < 1:
        raise ConfigurationError(f"L must be a positive integer, got {L!r}")
    L = int(L)
    n = CELL_SIZE * L * L
    if active_mask is None:
        active = np.ones(n, dtype=bool)
    else:
        active = np.asarray(active_mask, dtype=bool).copy()
        if active.shape != (n,):
            raise ConfigurationError(
                f"active mask has {active.size} entries, expected 8*L^2 = {n}"
            )
    active.setflags(write=False)

    idx = np.arange(n)
    cell = idx // CELL_SIZE
    k = idx % CELL_SIZE
    row, col = cell // L, cell % L
    side = np.where(k < 4, LEFT, RIGHT)

    all_edges = np.array(_all_edges(L), dtype=np.int64).reshape(-1, 2)
    keep = active[all_edges[:, 0]] & active[all_edges[:, 1]]
    edges = all_edges[keep]

    active_sites = np.flatnonzero(active)
    compact = np.full(n, -1, dtype=np.int64)
    compact[active_sites] = np.arange(active_sites.size)

    for arr in (edges, cell, row, col, side, active_sites, compact):
        arr.setflags(write=False)
    return ChimeraGraph(L, active, edges, cell, row, col, side, active_sites, compact)


def row_slices(g: ChimeraGraph) -> list[dict[str, np.ndarray]]:
    """Per cell-row: its 4L left sites and 4L right sites (global indices).

    Order inside a row is cell by cell, then by in-cell index, so bit
    ``4 * c + k`` of a row's left assignment is left site ``k`` of cell ``c``.
    Inactive sites are included; callers consult ``g.active``.
    """
    L = g.L
    rows = []
    for r in range(L):
        left = [site_index(L, r, c, k) for c in range(L) for k in range(4)]
        right = [site_index(L, r, c, k) for c in range(L) for k in range(4, 8)]
        rows.append({"row": r, "left": np.array(left), "right": np.array(right)})
    return rows


def read_mask(path: str | Path) -> np.ndarray:
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line not in ("0", "1"):
            raise ConfigurationError(f"{path}:{lineno}: mask entries must be 0 or 1, got {line!r}")
        values.append(line == "1")
    return np.array(values, dtype=bool)


def write_mask(mask: np.ndarray, path: str | Path) -> None:
    Path(path).write_text("".join("1\n" if m else "0\n" for m in np.asarray(mask, dtype=bool)))


def mask_from_file(L: int, path: str | Path) -> ChimeraGraph:
    return build_chimera(L, read_mask(path))
