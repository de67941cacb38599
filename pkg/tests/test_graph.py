import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealkit.graph import (
    LEFT,
    RIGHT,
    ConfigurationError,
    build_chimera,
    full_edge_count,
    read_mask,
    row_slices,
    write_mask,
)


def _explicit_edge_count(L):
    # independent enumeration by coordinates
    sites = [(r, c, k) for r in range(L) for c in range(L) for k in range(8)]
    count = 0
    for a in sites:
        for b in sites:
            if a >= b:
                continue
            (r1, c1, k1), (r2, c2, k2) = a, b
            if (r1, c1) == (r2, c2):
                count += (k1 < 4) != (k2 < 4)
            elif k1 == k2 and k1 < 4 and c1 == c2 and abs(r1 - r2) == 1:
                count += 1
            elif k1 == k2 and k1 >= 4 and r1 == r2 and abs(c1 - c2) == 1:
                count += 1
    return count


def test_single_cell():
    g = build_chimera(1)
    assert g.n_sites == 8
    assert len(g.edges) == 16


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_edge_count_matches_enumeration(L):
    g = build_chimera(L)
    assert len(g.edges) == full_edge_count(L) == _explicit_edge_count(L)


def test_l4_counts():
    g = build_chimera(4)
    assert g.n_sites == 128
    assert len(g.edges) == 352


def test_dead_cell():
    mask = np.ones(32, dtype=bool)
    mask[8:16] = False
    g = build_chimera(2, mask)
    assert g.n_active == 24
    assert not np.isin(g.edges, np.arange(8, 16)).any()


def test_mask_length_mismatch():
    with pytest.raises(ConfigurationError):
        build_chimera(2, np.ones(7, dtype=bool))
    with pytest.raises(ConfigurationError):
        build_chimera(0)


def test_edges_respect_sides():
    g = build_chimera(3)
    for i, j in g.edges:
        if g.cell[i] == g.cell[j]:
            assert g.side[i] != g.side[j]
        elif g.side[i] == LEFT:
            assert g.side[j] == LEFT and g.col[i] == g.col[j] and abs(g.row[i] - g.row[j]) == 1
        else:
            assert g.side[j] == RIGHT and g.row[i] == g.row[j] and abs(g.col[i] - g.col[j]) == 1


def test_row_slices_partition():
    g = build_chimera(3)
    rows = row_slices(g)
    assert len(rows) == 3
    allsites = np.concatenate([np.r_[r["left"], r["right"]] for r in rows])
    assert sorted(allsites) == list(range(72))
    assert all(len(r["left"]) == 12 and len(r["right"]) == 12 for r in rows)


def test_row_slices_l1():
    (row,) = row_slices(build_chimera(1))
    assert list(row["left"]) == [0, 1, 2, 3]
    assert list(row["right"]) == [4, 5, 6, 7]


def test_vertical_edges_join_consecutive_rows():
    g = build_chimera(2)
    rows = row_slices(g)
    row_of = {int(s): r["row"] for r in rows for s in np.r_[r["left"], r["right"]]}
    left = {int(s) for r in rows for s in r["left"]}
    for i, j in g.edges:
        if row_of[i] != row_of[j]:
            assert i in left and j in left
            assert abs(row_of[i] - row_of[j]) == 1


def test_mask_roundtrip(tmp_path):
    m = np.random.default_rng(1).random(32) < 0.8
    write_mask(m, tmp_path / "m.txt")
    assert np.array_equal(read_mask(tmp_path / "m.txt"), m)
    (tmp_path / "bad.txt").write_text("1\n2\n")
    with pytest.raises(ConfigurationError):
        read_mask(tmp_path / "bad.txt")


@settings(max_examples=30, deadline=None)
@given(L=st.integers(1, 3), data=st.data())
def test_masked_graph_properties(L, data):
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=8 * L * L, max_size=8 * L * L)))
    g = build_chimera(L, mask)
    assert np.all(mask[g.edges])
    deg = g.degree()
    assert deg.max(initial=0) <= 6
    for i in g.active_sites[:10]:
        for j in g.neighbors(int(i)):
            assert int(i) in g.neighbors(j)
    g2 = build_chimera(L, mask)
    assert g2.edges.tobytes() == g.edges.tobytes()
