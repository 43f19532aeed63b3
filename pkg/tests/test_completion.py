"""Unit tests for terminal sets, pairings, completions, and limits."""

import numpy as np
import pytest

from cbound import bitsets as bset
from cbound.chrono import Chain, IdealSet, future, maximal_chains, past
from cbound.completion import (
    BoundaryPair,
    SequenceSpec,
    bs_related,
    chain_to_sequence,
    check_limit,
    chr_limit,
    classify_boundary,
    endpoint_of_chain,
    enumerate_minimal_completions,
    extended_chronology,
    gkp_precompletion,
    gkp_topology_verdict,
    hat_limit,
    interior_pair,
    is_admissible,
    is_globally_hyperbolic,
    is_minimal,
    is_strongly_causal_via_S,
    marolf_ross_completion,
    mr_topology_limit,
    s_relation_graph,
    sequence_from_pairs,
    sequence_from_points,
    szabados_related,
    terminal_sets,
    verify_extended_transitivity,
)
from cbound.errors import BudgetExceeded, InvalidSpec, NoFrontier

from conftest import cone_order, flat_grid_2d


def halfplane(nt=9, nx=4, axes=(-2.0, 0.0, 2.0)):
    """Right halfplane x > 0 with frontier points on the cut axis.

    Samples sit at half-offset x and integer t; each axis value contributes
    one frontier point related by the exact strict cone in both directions.
    Every axis point generates one matched (past, future) pair, so the
    terminal structure is fully solvable by hand.
    """
    coords = [(float(t), x + 0.5) for t in range(-(nt // 2), nt // 2 + 1) for x in range(nx)]
    extra = [((a, 0.0), "obstacle-frontier", None, "both") for a in axes]
    return cone_order(coords, extra)


def axis_sets(cs, a):
    """Terminal past and future of the frontier point at t = a."""
    fi = [i for i in cs.frontier_indices().tolist() if cs.coords[i][0] == a][0]
    return past(fi, cs), future(fi, cs)


def at_coord(cs, t, x):
    return [i for i in cs.spacetime_indices().tolist() if tuple(cs.coords[i]) == (t, x)][0]


# --------------------------------------------------------------------------
# terminal sets


def test_terminal_sets_collects_and_dedups(diamond4):
    tips, tifs = terminal_sets(diamond4)
    assert len(tips) == 1 and len(tifs) == 0
    assert tips[0].kind == "terminal" and not tips[0].window


def test_terminal_sets_requires_frontier():
    with pytest.raises(NoFrontier):
        terminal_sets(flat_grid_2d(3, 3))


def test_terminal_dedup_prefers_obstacle_generator():
    coords = [(0.0, 0.0), (1.0, -0.4), (1.0, 0.4), (2.0, 0.0)]
    extra = [
        ((3.5, 0.0), "obstacle-frontier", None, "past"),
        ((4.0, 0.0), "window-frontier", None, "past"),  # same past set
        ((-2.0, 3.5), "window-frontier", None, "future"),
    ]
    cs = cone_order(coords, extra)
    tips, tifs = terminal_sets(cs)
    assert len(tips) == 1
    assert not tips[0].window and cs.tag_name(tips[0].generator) == "obstacle-frontier"
    assert len(tifs) == 1 and tifs[0].window


# --------------------------------------------------------------------------
# pairing predicates


def test_szabados_matches_only_its_own_axis_point():
    cs = halfplane()
    P0, F0 = axis_sets(cs, 0.0)
    _, Fm = axis_sets(cs, -2.0)
    _, Fp = axis_sets(cs, 2.0)
    assert szabados_related(P0, F0, cs)
    assert not szabados_related(P0, Fm, cs)  # not inside the bound set
    assert not szabados_related(P0, Fp, cs)  # not maximal inside the gate


def test_szabados_strictness_kills_bound_set_collision():
    # with axis points one step apart the future of the next-lower axis
    # point equals the upper bound set of P0 exactly; only the strictness
    # clause rejects that pairing
    cs = halfplane(axes=(-1.0, 0.0, 1.0))
    P0, F0 = axis_sets(cs, 0.0)
    _, Fm = axis_sets(cs, -1.0)
    upper = cs.dominators(P0.members)
    assert bset.equal(Fm.members, upper)
    assert not szabados_related(P0, Fm, cs)
    assert szabados_related(P0, F0, cs)


def test_szabados_empty_side_is_false(diamond4):
    tips, _ = terminal_sets(diamond4)
    empty = IdealSet(bset.zeros(diamond4.n), "future", n=diamond4.n)
    assert not szabados_related(tips[0], empty, diamond4)


def test_bs_related_diagonal_on_halfplane():
    cs = halfplane()
    P0, F0 = axis_sets(cs, 0.0)
    P1, F1 = axis_sets(cs, 2.0)
    assert bs_related(P0, F0, cs)
    assert bs_related(P1, F1, cs)
    assert not bs_related(P0, F1, cs)
    assert not bs_related(P1, F0, cs)


def test_s_relation_graph_is_diagonal_on_halfplane():
    cs = halfplane()
    g = s_relation_graph(cs)
    assert len(g.tips) == 3 and len(g.tifs) == 3
    # sort both sides by generator time to fix the order
    ti = np.argsort([cs.coords[t.generator][0] for t in g.tips])
    tj = np.argsort([cs.coords[t.generator][0] for t in g.tifs])
    assert np.array_equal(g.s_edges[np.ix_(ti, tj)], np.eye(3, dtype=bool))
    assert np.array_equal(g.bs_edges[np.ix_(ti, tj)], np.eye(3, dtype=bool))


def test_szabados_uses_precomputed_graph_edges():
    cs = halfplane()
    g = s_relation_graph(cs)
    P0, F0 = axis_sets(cs, 0.0)
    _, F1 = axis_sets(cs, 2.0)
    assert szabados_related(P0, F0, cs, candidates=g)
    assert not szabados_related(P0, F1, cs, candidates=g)


def test_strong_causality_full_and_adversarial():
    out = is_strongly_causal_via_S(flat_grid_2d(7, 7))
    assert out["ok"] and not out["probed"]

    # p sees only c above, but b's future {c, d} fits the same gate and is
    # strictly larger, so p's cone pair is not maximal-matched
    coords = [(0.0, 0.0), (1.0, 0.8), (1.0, 0.0), (2.0, 0.0), (2.2, -0.5)]
    cs2 = cone_order(coords)
    out2 = is_strongly_causal_via_S(cs2)
    assert not out2["ok"]
    assert out2["failures"] == [1]


def test_strong_causality_probe_subsampling():
    cs = flat_grid_2d(9, 9)
    out = is_strongly_causal_via_S(cs, max_probes=5)
    assert out["probed"] and out["n_probes"] <= out["n_eligible"]
    assert out["ok"]


# --------------------------------------------------------------------------
# completions


def test_gkp_precompletion_lists_every_terminal():
    cs = halfplane()
    c = gkp_precompletion(cs)
    assert c.flavor == "gkp-precompletion"
    assert len(c.boundary) == 6
    assert all(q.P is None or q.F is None for q in c.boundary)


def test_marolf_ross_pairs_and_halves(diamond4):
    cs = halfplane()
    mr = marolf_ross_completion(cs)
    assert len(mr.boundary) == 3
    assert all(q.cls == "timelike" for q in mr.boundary)
    assert not mr.warnings

    mr2 = marolf_ross_completion(diamond4)
    assert len(mr2.boundary) == 1
    assert mr2.boundary[0].cls == "future-infinity"


def test_minimal_completions_unique_on_diagonal_graph():
    cs = halfplane()
    mins = enumerate_minimal_completions(cs)
    assert len(mins) == 1
    mr = marolf_ross_completion(cs, check_causality=False)
    assert mins[0].boundary_keys() == mr.boundary_keys()
    assert is_admissible(mins[0], cs) and is_minimal(mins[0], cs)
    with pytest.raises(BudgetExceeded):
        enumerate_minimal_completions(cs, budget=0)


def test_admissibility_rejects_dropped_and_crossed_pairs():
    cs = halfplane()
    g = s_relation_graph(cs)
    mr = marolf_ross_completion(cs, graph=g, check_causality=False)
    assert is_admissible(mr, cs)

    short = marolf_ross_completion(cs, graph=g, check_causality=False)
    short.boundary = short.boundary[:-1]
    assert not is_admissible(short, cs)

    # swapping futures between two pairs leaves both edges absent
    a, b = mr.boundary[0], mr.boundary[1]
    crossed = marolf_ross_completion(cs, graph=g, check_causality=False)
    crossed.boundary = [
        BoundaryPair(a.P, b.F, "boundary"),
        BoundaryPair(b.P, a.F, "boundary"),
        mr.boundary[2],
    ]
    assert not is_admissible(crossed, cs)


def test_multi_partner_exclusivity():
    # one terminal past under two terminal futures: the only admissible
    # matching keeps both edges on the shared tip
    coords = [
        (-1.0, 0.0),
        (0.0, 0.0),
        (0.5, -0.9),
        (0.5, 0.9),
        (2.0, -1.2),
        (2.0, 1.2),
    ]
    extra = [
        ((1.0, 0.0), "obstacle-frontier", None, "past"),
        ((1.4, -0.8), "obstacle-frontier", "l", "future"),
        ((1.4, 0.8), "obstacle-frontier", "r", "future"),
    ]
    cs = cone_order(coords, extra)
    g = s_relation_graph(cs)
    assert g.s_edges.shape == (1, 2) and g.s_edges.all()
    mins = enumerate_minimal_completions(cs, graph=g)
    assert len(mins) == 1 and len(mins[0].boundary) == 2
    assert is_admissible(mins[0], cs) and is_minimal(mins[0], cs)


def test_classification_and_global_hyperbolicity(diamond4):
    cs = halfplane()
    mr = marolf_ross_completion(cs, check_causality=False)
    buckets = classify_boundary(mr)
    assert len(buckets["timelike"]) == 3
    assert not is_globally_hyperbolic(mr)

    mr2 = marolf_ross_completion(diamond4)
    assert is_globally_hyperbolic(mr2)

    window_pair = BoundaryPair(
        past(4, diamond4), future(0, diamond4), "boundary", window_only=True
    )
    wc = marolf_ross_completion(diamond4)
    wc.boundary.append(window_pair)
    assert is_globally_hyperbolic(wc)


# --------------------------------------------------------------------------
# extended chronology


def test_extended_chronology_cases():
    cs = halfplane()
    mr = marolf_ross_completion(cs, check_causality=False)
    by_t = {cs.coords[q.P.generator][0]: q for q in mr.boundary}
    q0, q2 = by_t[0.0], by_t[2.0]
    assert extended_chronology(q0, q2, cs)  # F0 meets P2 inside the strip
    assert not extended_chronology(q2, q0, cs)

    lo = interior_pair(at_coord(cs, -3.0, 0.5), cs)
    hi = interior_pair(at_coord(cs, 3.0, 0.5), cs)
    assert extended_chronology(lo, q0, cs)
    assert not extended_chronology(hi, q0, cs)
    assert extended_chronology(q0, hi, cs)
    assert extended_chronology(lo, hi, cs) == cs.related(lo.generator, hi.generator)


def test_extended_transitivity_holds_on_halfplane():
    cs = halfplane()
    mr = marolf_ross_completion(cs, check_causality=False)
    assert verify_extended_transitivity(mr, cs)


# --------------------------------------------------------------------------
# sequences and limits


def test_sequence_spec_validation():
    cs = halfplane()
    idx = cs.spacetime_indices()[:8].tolist()
    with pytest.raises(InvalidSpec):
        sequence_from_points(idx[:4], cs)
    with pytest.raises(InvalidSpec):
        sequence_from_points(idx, cs, tail_fraction=0.0)
    rows = [cs.past_members(i) for i in idx]
    with pytest.raises(InvalidSpec):
        SequenceSpec(rows, rows[:-1])
    sig = sequence_from_points(idx, cs)
    assert len(sig) == 8 and list(sig.tail_range()) == [4, 5, 6, 7]


def test_hat_limit_constant_and_oscillating():
    coords = [(0.0, 0.0), (1.5, 0.0), (2.5, 0.6), (4.0, 0.3)]
    cs = cone_order(coords)  # a single chain, pasts {}, {0}, {0,1}, {0,1,2}
    const = sequence_from_points([2] * 8, cs)
    got = hat_limit(const, cs)
    assert len(got) == 1 and cs.set_eq(got[0].members, cs.past_members(2))

    osc = sequence_from_points([2, 3] * 4, cs)
    assert hat_limit(osc, cs) == []  # liminf {0,1} is beaten inside limsup


def test_check_limit_dual(diamond4):
    const = sequence_from_points([0] * 8, diamond4)
    got = check_limit(const, diamond4)
    assert len(got) == 1
    assert diamond4.set_eq(got[0].members, diamond4.future_members(0))


def test_chain_to_sequence_pads_tail(diamond4):
    sig = chain_to_sequence(Chain([0, 1, 3], "future"), diamond4)
    assert len(sig) == 8
    tail = [sig.pasts[i] for i in sig.tail_range()]
    assert all(bset.equal(t, diamond4.past_members(3)) for t in tail)
    with pytest.raises(InvalidSpec):
        chain_to_sequence(Chain([], "future"), diamond4)


def test_chr_limit_interior_and_boundary():
    cs = halfplane()
    p = at_coord(cs, 0.0, 1.5)
    q = at_coord(cs, 2.0, 0.5)
    const = sequence_from_points([p] * 8, cs)
    assert chr_limit(const, interior_pair(p, cs), cs)
    assert not chr_limit(const, interior_pair(q, cs), cs)

    mr = marolf_ross_completion(cs, check_causality=False)
    q0 = [b for b in mr.boundary if cs.coords[b.P.generator][0] == 0.0][0]
    assert not chr_limit(const, q0, cs)


def test_chr_limit_chain_into_terminal(diamond4):
    S = past(4, diamond4).members.copy()
    bset.bit_set(S, 4)
    eta = maximal_chains(S, diamond4, budget=1)[0]
    sig = chain_to_sequence(eta, diamond4)
    T = BoundaryPair(past(4, diamond4), None, "boundary")
    assert chr_limit(sig, T, diamond4)


def test_mr_topology_limit_tail_and_negative():
    cs = halfplane()
    mr = marolf_ross_completion(cs, check_causality=False)
    by_t = {cs.coords[q.P.generator][0]: q for q in mr.boundary}
    q0, q2 = by_t[0.0], by_t[2.0]
    sig = sequence_from_pairs([q0] * 8, cs)
    assert mr_topology_limit(sig, q0, mr, cs)
    assert not mr_topology_limit(sig, q2, mr, cs)


def test_endpoint_of_chain_terminal_and_interior(diamond4):
    S = past(4, diamond4).members.copy()
    bset.bit_set(S, 4)
    eta = maximal_chains(S, diamond4, budget=1)[0]
    mr = marolf_ross_completion(diamond4)
    ends = endpoint_of_chain(eta, mr, diamond4)
    assert len(ends) == 1 and ends[0].cls == "future-infinity"

    # interior chain on a scene whose cones distinguish points
    cs2 = halfplane(nt=7, nx=3, axes=(0.0,))
    cols = sorted(
        (i for i in cs2.spacetime_indices().tolist() if cs2.coords[i][1] == 0.5),
        key=lambda i: cs2.coords[i][0],
    )
    mr2 = marolf_ross_completion(cs2, check_causality=False)
    ends2 = endpoint_of_chain(Chain(cols[:3], "future"), mr2, cs2)
    assert [e.generator for e in ends2] == [cols[2]]


# --------------------------------------------------------------------------
# precompletion topology


def test_gkp_verdict_on_matched_halfplane_pair():
    cs = halfplane()
    P0, F0 = axis_sets(cs, 0.0)
    out = gkp_topology_verdict(P0, F0, cs)
    assert out["t1_related"]
    assert not out["t2_separated"]
    assert out["separator"] is None


def test_gkp_verdict_separates_far_columns():
    # two causally disconnected columns; each terminal set admits an ext
    # neighborhood confined to its own column, so the pair separates
    coords = [
        (0.0, -2.4),
        (1.0, -2.4),
        (2.0, -2.4),
        (0.0, 2.4),
        (1.0, 2.4),
        (2.0, 2.4),
    ]
    extra = [
        ((0.5, -2.4), "obstacle-frontier", None, "future"),
        ((1.5, 2.4), "obstacle-frontier", None, "past"),
    ]
    cs = cone_order(coords, extra)
    F = future(6, cs)  # upper left column
    P = past(7, cs)  # lower right column
    out = gkp_topology_verdict(P, F, cs)
    assert out["t2_separated"] and out["separator"] == (0, 0)
