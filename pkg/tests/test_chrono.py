"""Unit tests for the chronological-set core."""

import numpy as np
import pytest

from cbound import bitsets as bset
from cbound.chrono import (
    IdealSet,
    PointRecord,
    build_chrono_set,
    causality_ladder,
    common_future,
    common_past,
    dec,
    derived_causal,
    future,
    harris_chron,
    is_indecomposable,
    load_chrono,
    maximal_chains,
    past,
    past_determined_chron,
    save_chrono,
)
from cbound.errors import CycleDetected, NotIdealSet

from conftest import cone_order, flat_grid_2d


def test_closure_is_transitive_and_cycles_raise():
    pts = [PointRecord((float(i), 0.0)) for i in range(4)]
    cs = build_chrono_set(pts, [(0, 1), (1, 2), (2, 3)])
    assert cs.related(0, 3)
    assert not cs.related(3, 0)
    with pytest.raises(CycleDetected):
        build_chrono_set(pts, [(0, 1), (1, 0)])
    with pytest.raises(CycleDetected):
        build_chrono_set(pts, [(2, 2)])


def test_past_future_kinds(diamond4):
    cs = diamond4
    P = past(4, cs)
    assert P.kind == "terminal" and P.orientation == "past"
    assert sorted(cs.indices(P.members).tolist()) == [0, 1, 2, 3]
    f = future(0, cs)
    assert f.kind == "proper"
    assert sorted(cs.indices(f.members).tolist()) == [1, 2, 3]
    u = past([1, 2], cs)
    assert u.kind == "composite" and u.generator is None
    assert cs.indices(u.members).tolist() == [0]


def test_frontier_points_are_never_members(diamond4):
    cs = diamond4
    P = past(4, cs)
    assert not bset.bit_get(P.members, 4)
    assert not cs.spacetime_mask[4]


def test_indecomposability_of_cones_and_unions():
    # two spacelike points: union of their pasts splits
    coords = [(0.0, -3.0), (0.0, 3.0), (1.0, -3.0), (1.0, 3.0), (-1.2, -3.0), (-1.2, 3.0)]
    cs = cone_order(coords)
    left = past(2, cs)
    right = past(3, cs)
    assert is_indecomposable(left, cs)
    both = IdealSet(left.members | right.members, "past", n=cs.n)
    assert not is_indecomposable(both, cs)


def test_not_ideal_set_raises(diamond4):
    cs = diamond4
    ragged = IdealSet(bset.pack(np.array([False, True, False, True, False])), "past", n=cs.n)
    with pytest.raises(NotIdealSet):
        is_indecomposable(ragged, cs)


def test_dec_splits_union_into_generators():
    coords = [(0.0, -3.0), (0.0, 3.0), (1.0, -3.0), (1.0, 3.0), (-1.2, -3.0), (-1.2, 3.0)]
    cs = cone_order(coords)
    both = IdealSet(past(2, cs).members | past(3, cs).members, "past", n=cs.n)
    parts = dec(both, cs)
    gens = sorted(p.generator for p in parts)
    assert gens == [2, 3]
    # every part is a maximal single-generator past inside the union
    for p in parts:
        assert bset.subset(p.members, both.members)


def test_dec_of_terminal_past_is_itself(diamond4):
    cs = diamond4
    P = past(4, cs)
    parts = dec(P, cs)
    assert len(parts) == 1
    # the ideal generator 4 is not a sample, so the part is named by the
    # top sample whose closed one-generator set it is
    assert parts[0].generator == 3
    assert cs.set_eq(parts[0].members, P.members)


def test_common_bounds_and_degenerate_flag(diamond4):
    cs = diamond4
    cf = common_future(past(1, cs), cs)  # past(1) = {0}
    assert 3 in cs.indices(cf.members).tolist()
    assert not cf.degenerate
    empty = IdealSet(bset.zeros(cs.n), "past", n=cs.n)
    cfe = common_future(empty, cs)
    assert cfe.degenerate
    cpe = common_past(IdealSet(bset.zeros(cs.n), "future", n=cs.n), cs)
    assert cpe.degenerate


def test_derived_causal_on_null_neighbors():
    # a strictly inside the cone of origin, b exactly on it: only a is chronological,
    # but b keeps the causal comparison via cone inclusions
    coords = [(0.0, 0.0), (1.0, 0.3), (1.0, 1.0), (-1.0, 0.0), (2.5, 0.0)]
    cs = cone_order(coords)
    assert cs.related(0, 1)
    assert not cs.related(0, 2)
    assert derived_causal(0, 1, cs)
    assert derived_causal(0, 2, cs)  # pasts nest, futures nest
    assert not derived_causal(1, 0, cs)
    assert derived_causal(2, 2, cs)


def test_harris_chron_cases(diamond4):
    cs = diamond4
    P0 = past(0, cs)
    P3 = past(3, cs)
    T = past(4, cs)
    assert harris_chron(P0, P3, cs)  # proper-proper via relation
    assert not harris_chron(P3, P0, cs)
    assert harris_chron(P0, T, cs)  # proper-terminal via membership
    assert not harris_chron(T, P3, cs)  # nothing below 3 dominates all of T
    # terminal before proper: grow a point whose past holds a dominator of T
    coords = [(0.0, 0.0), (2.0, 0.0), (5.0, 0.0), (8.0, 0.0)]
    extra = [((3.0, 0.0), "obstacle-frontier", None, "past")]
    cs2 = cone_order(coords, extra)
    T2 = past(4, cs2)
    assert harris_chron(T2, past(3, cs2), cs2)  # z=2 is in past(3) and above T2
    assert not harris_chron(T2, past(1, cs2), cs2)


def test_past_determined_chron(diamond4):
    cs = diamond4
    assert past_determined_chron(past(1, cs), past(4, cs), cs)
    assert not past_determined_chron(past(4, cs), past(1, cs), cs)


def test_causality_ladder_flags_merged_pasts():
    cs = flat_grid_2d(3, 3)
    lad = causality_ladder(cs)
    assert lad["chronological"] and lad["causal"]
    # unit spacing keeps every sampled past distinct on the flat grid
    assert lad["past_distinguishing"]
    assert lad["future_distinguishing"]

    # an explicit failure: two points over one common past, sharing futures
    coords = [(0.0, 0.0), (1.1, -0.5), (1.1, 0.5), (2.2, 0.0)]
    cs2 = cone_order(coords)
    lad2 = causality_ladder(cs2)
    assert not lad2["past_distinguishing"]
    assert lad2["past_witness"] is not None


def test_maximal_chains_lex_order_and_budget(diamond4):
    cs = diamond4
    P = past(4, cs)
    S = P.members.copy()
    bset.bit_set(S, 4)
    chains = maximal_chains(S, cs, budget=8)
    assert [c.indices for c in chains] == [[0, 1, 3, 4], [0, 2, 3, 4]]
    assert all(c.terminal_flag for c in chains)
    only_one = maximal_chains(S, cs, budget=1)
    assert len(only_one) == 1
    down = maximal_chains(S, cs, budget=8, direction="past")
    assert down[0].indices[0] == 4


def test_save_load_roundtrip(tmp_path, diamond4):
    cs = diamond4
    p = str(tmp_path / "toy.npz")
    save_chrono(cs, p)
    cs2 = load_chrono(p)
    assert np.array_equal(cs2.fwd, cs.fwd)
    assert np.array_equal(cs2.bwd, cs.bwd)
    assert cs2.sides == cs.sides
    assert np.array_equal(cs2.spacetime_mask, cs.spacetime_mask)
