"""Finite chronological sets and order primitives.

A chronological set is a finite strict partial order over sample points.
Most points are spacetime samples; the rest are frontier points standing
in for removed or ideal geometry, and only ever appear as generators of
past and future sets, never as members.  The relation is stored as packed
boolean rows in both directions, which keeps corpus-scale sets (about 20k
points) in a few tens of megabytes and makes subset and reduction queries
cheap.

Set comparisons come in two flavors.  Subset tests are raw.  Equality and
strictness tests first drop points inside the comparison mask's complement
(a thin collar around obstacle geometry, chosen by the scene builder), so
that discretization noise on cone boundaries cannot split sets that agree
everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import bitsets as bs
from .errors import CycleDetected, NotIdealSet

TAG_INTERIOR = 0
TAG_OBSTACLE = 1
TAG_WINDOW = 2
TAG_RELAY = 3

_TAG_NAMES = ("interior", "obstacle-frontier", "window-frontier", "relay")
_TAG_CODES = {name: code for code, name in enumerate(_TAG_NAMES)}


@dataclass
class PointRecord:
    """One sample point before assembly into a ChronoSet.

    ``side`` disambiguates frontier points that approach the same removed
    geometry from different sides.  ``family`` groups frontier points whose
    generated sets are nested along a common direction; -1 means no family.
    """

    coords: tuple
    tag: str = "interior"
    side: str | None = None
    family: int = -1


class ChronoSet:
    """Finite chronological set with packed relation rows.

    ``fwd[i]`` holds the bit row of points strictly after ``i``; ``bwd`` is
    its transpose.  ``spacetime_mask`` flags actual spacetime samples, and
    ``cmp_mask`` flags points that participate in set-equality comparisons.
    """

    def __init__(
        self,
        coords: np.ndarray,
        tags: np.ndarray,
        sides: list,
        families: np.ndarray,
        spacetime_mask: np.ndarray,
        fwd: np.ndarray,
        bwd: np.ndarray | None = None,
        cmp_mask: np.ndarray | None = None,
    ):
        self.coords = np.asarray(coords, dtype=np.float64)
        self.tags = np.asarray(tags, dtype=np.int8)
        self.sides = list(sides)
        self.families = np.asarray(families, dtype=np.int32)
        self.spacetime_mask = np.asarray(spacetime_mask, dtype=bool)
        self.fwd = fwd
        self.bwd = bs.transpose(fwd, self.n) if bwd is None else bwd
        self.cmp_mask = (
            np.ones(self.n, dtype=bool) if cmp_mask is None else np.asarray(cmp_mask, dtype=bool)
        )
        self.ms_packed = bs.pack(self.spacetime_mask)
        self.cmp_packed = bs.pack(self.cmp_mask)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def tag_name(self, i: int) -> str:
        return _TAG_NAMES[self.tags[i]]

    def is_spacetime(self, i: int) -> bool:
        return bool(self.spacetime_mask[i])

    def frontier_indices(self) -> np.ndarray:
        """Terminal-set generators: declared frontier points and window rim.

        Relay points carry composition but name no boundary point of their
        own, so they are not frontier generators.
        """
        return np.flatnonzero((self.tags == TAG_OBSTACLE) | (self.tags == TAG_WINDOW))

    def spacetime_indices(self) -> np.ndarray:
        return np.flatnonzero(self.spacetime_mask)

    def related(self, i: int, j: int) -> bool:
        return bs.bit_get(self.fwd[i], j)

    # --- packed member-set helpers ------------------------------------

    def past_members(self, i: int) -> np.ndarray:
        """Packed member row of the past set generated by point i."""
        return self.bwd[i] & self.ms_packed

    def future_members(self, i: int) -> np.ndarray:
        return self.fwd[i] & self.ms_packed

    def indices(self, members: np.ndarray) -> np.ndarray:
        return np.flatnonzero(bs.unpack(members, self.n))

    def masked(self, members: np.ndarray) -> np.ndarray:
        return members & self.cmp_packed

    def set_eq(self, a: np.ndarray, b: np.ndarray) -> bool:
        """Equality modulo the comparison collar."""
        return bs.equal(self.masked(a), self.masked(b))

    def subset_eqm(self, a: np.ndarray, b: np.ndarray) -> bool:
        """Subset modulo the comparison collar."""
        return bs.subset(self.masked(a), self.masked(b))

    def past_of(self, members: np.ndarray) -> np.ndarray:
        """Packed union of pasts over the member set, within spacetime."""
        idx = self.indices(members)
        return bs.row_or(self.bwd[idx]) & self.ms_packed

    def future_of(self, members: np.ndarray) -> np.ndarray:
        idx = self.indices(members)
        return bs.row_or(self.fwd[idx]) & self.ms_packed

    def dominators(self, members: np.ndarray) -> np.ndarray:
        """Packed set of spacetime points strictly after every member."""
        idx = self.indices(members)
        return bs.row_and(self.fwd[idx]) & self.ms_packed

    def lowerers(self, members: np.ndarray) -> np.ndarray:
        """Packed set of spacetime points strictly before every member."""
        idx = self.indices(members)
        return bs.row_and(self.bwd[idx]) & self.ms_packed

    def maximal_in(self, members: np.ndarray) -> np.ndarray:
        """Indices of members with no successor inside the member set."""
        idx = self.indices(members)
        if idx.size == 0:
            return idx
        blocked = np.any(self.fwd[idx] & members[None, :], axis=1)
        return idx[~blocked]

    def minimal_in(self, members: np.ndarray) -> np.ndarray:
        idx = self.indices(members)
        if idx.size == 0:
            return idx
        blocked = np.any(self.bwd[idx] & members[None, :], axis=1)
        return idx[~blocked]


@dataclass
class IdealSet:
    """A past or future set of a chronological set.

    ``members`` is a packed row over all points, always restricted to the
    spacetime mask.  ``kind`` is "proper" for the past or future of a single
    spacetime point, "terminal" for a single frontier generator, and
    "composite" otherwise.  ``degenerate`` flags results of vacuous bound
    computations (for example the common future of an empty set).
    """

    members: np.ndarray
    orientation: str
    kind: str = "composite"
    generator: int | None = None
    n: int = 0
    degenerate: bool = False
    window: bool = False

    def is_empty(self) -> bool:
        return bs.is_zero(self.members)

    def dense(self) -> np.ndarray:
        return bs.unpack(self.members, self.n)

    def count(self) -> int:
        return bs.count(self.members)

    def key(self, cs: ChronoSet) -> bytes:
        return cs.masked(self.members).tobytes() + self.orientation.encode()


@dataclass
class Chain:
    """A totally ordered run of points, listed in traversal order.

    Future chains ascend the relation, past chains descend it.  The
    terminal flag marks chains whose last element is a frontier point.
    """

    indices: list
    direction: str = "future"
    terminal_flag: bool = False


def build_chrono_set(
    points: Sequence[PointRecord],
    base_rel: Iterable[tuple],
    coords_dim: int | None = None,
) -> ChronoSet:
    """Assemble a ChronoSet from point records and base relation edges.

    The base relation is closed transitively.  Cycles raise CycleDetected.
    The builder does not check the no-isolates convention; scene builders
    are responsible for producing connected samples.
    """
    n = len(points)
    dim = coords_dim or (len(points[0].coords) if n else 0)
    coords = np.zeros((n, dim))
    tags = np.zeros(n, dtype=np.int8)
    sides: list = []
    families = np.full(n, -1, dtype=np.int32)
    for i, p in enumerate(points):
        coords[i] = p.coords
        if p.tag not in _TAG_CODES:
            raise ValueError(f"unknown point tag {p.tag!r}")
        tags[i] = _TAG_CODES[p.tag]
        sides.append(p.side)
        families[i] = p.family

    succ: list = [[] for _ in range(n)]
    indeg = np.zeros(n, dtype=np.int64)
    seen = set()
    for i, j in base_rel:
        i = int(i)
        j = int(j)
        if i == j:
            raise CycleDetected(f"self-relation at point {i}")
        if (i, j) in seen:
            continue
        seen.add((i, j))
        succ[i].append(j)
        indeg[j] += 1

    order = []
    stack = [v for v in range(n) if indeg[v] == 0]
    while stack:
        v = stack.pop()
        order.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    if len(order) < n:
        raise CycleDetected("base relation contains a directed cycle")

    fwd = bs.zeros(n, rows=n)
    for v in reversed(order):
        if succ[v]:
            rows = fwd[np.array(succ[v], dtype=np.int64)]
            bs.row_or(rows, out=fwd[v])
            for w in succ[v]:
                bs.bit_set(fwd[v], w)

    spacetime = tags == TAG_INTERIOR
    return ChronoSet(coords, tags, sides, families, spacetime, fwd)


def _as_indices(A, cs: ChronoSet) -> np.ndarray:
    if isinstance(A, (int, np.integer)):
        return np.array([int(A)], dtype=np.int64)
    A = np.asarray(A)
    if A.dtype == bool:
        return np.flatnonzero(A)
    return A.astype(np.int64)


def _set_kind(idx: np.ndarray, cs: ChronoSet) -> tuple:
    if idx.size == 1:
        i = int(idx[0])
        return ("proper" if cs.is_spacetime(i) else "terminal"), i
    return "composite", None


def past(A, cs: ChronoSet) -> IdealSet:
    """Union of pasts of the given points, as a past set."""
    idx = _as_indices(A, cs)
    members = bs.row_or(cs.bwd[idx]) & cs.ms_packed
    kind, gen = _set_kind(idx, cs)
    return IdealSet(members, "past", kind, gen, cs.n)


def future(A, cs: ChronoSet) -> IdealSet:
    """Union of futures of the given points, as a future set."""
    idx = _as_indices(A, cs)
    members = bs.row_or(cs.fwd[idx]) & cs.ms_packed
    kind, gen = _set_kind(idx, cs)
    return IdealSet(members, "future", kind, gen, cs.n)


def _check_closed(S: IdealSet, cs: ChronoSet) -> None:
    if S.orientation == "past":
        hull = cs.past_of(S.members)
    else:
        hull = cs.future_of(S.members)
    if not bs.subset(hull, S.members):
        raise NotIdealSet(f"{S.orientation} set is not closed under the relation")


def is_indecomposable(S: IdealSet, cs: ChronoSet) -> bool:
    """Weak directedness of a closed past or future set.

    For a finite strict order a closed set is weakly directed exactly when
    it has at most one extreme element in the relevant direction, so the
    pairwise quantifier reduces to counting extremes.  Empty sets are not
    indecomposable.
    """
    _check_closed(S, cs)
    if S.is_empty():
        return False
    if S.orientation == "past":
        extremes = cs.maximal_in(S.members)
    else:
        extremes = cs.minimal_in(S.members)
    return extremes.size <= 1


def _candidate_rows(cs: ChronoSet, orientation: str) -> np.ndarray:
    """Single-generator candidate sets for decomposition.

    Only sample points generate candidates: an ideal point's own set is
    the kind of set being decomposed, never a part of the decomposition.
    """
    rel = cs.bwd if orientation == "past" else cs.fwd
    rows = rel & cs.ms_packed[None, :]
    ideal = (cs.tags == TAG_OBSTACLE) | (cs.tags == TAG_RELAY)
    if np.any(ideal):
        rows = rows.copy()
        rows[ideal] = 0
    return rows


def dec(S: IdealSet, cs: ChronoSet) -> list:
    """Inclusion-maximal single-generator subsets of a closed set.

    Candidates are the pasts (resp. futures) of every sample point, window
    rim included; ideal points do not generate candidates.  A point that is
    itself a member contributes its closed one-generator set, so the parts
    always cover the whole set.  Results are deduplicated and compared
    modulo the comparison collar, and come back ordered by generator index.
    """
    _check_closed(S, cs)
    cand = _candidate_rows(cs, S.orientation)
    midx = cs.indices(S.members)
    if midx.size:
        cand[midx, midx >> 3] |= (np.uint8(1) << (midx & 7).astype(np.uint8))
    inside = ~np.any(cand & ~S.members[None, :], axis=1)
    nonempty = np.any(cand, axis=1)
    gens = np.flatnonzero(inside & nonempty)
    if gens.size == 0:
        return []

    groups: dict = {}
    for g in gens.tolist():
        groups.setdefault(cs.masked(cand[g]).tobytes(), []).append(g)
    # a set with both an open and a closed representation is named by the
    # open one: the generator sitting above the part, not inside it
    reps = np.array(
        sorted(min(v, key=lambda g: (bs.bit_get(S.members, g), g)) for v in groups.values()),
        dtype=np.int64,
    )
    rows = cand[reps]
    masked_rows = rows & cs.cmp_packed[None, :]

    # Relation prune: a candidate with a different-keyed candidate generator
    # strictly above it is dominated by that generator's set (transitivity).
    # Same-key generators above do not disqualify, so subtract their count.
    cand_bits = np.zeros(cs.n, dtype=bool)
    cand_bits[gens] = True
    cand_packed = bs.pack(cand_bits)
    rel = cs.fwd if S.orientation == "past" else cs.bwd
    undominated = []
    for pos, g in enumerate(reps.tolist()):
        above = rel[g] & cand_packed
        n_above = bs.count(above)
        same = groups[masked_rows[pos].tobytes()]
        n_same_above = sum(1 for h in same if bs.bit_get(above, h))
        if n_above == n_same_above:
            undominated.append(pos)

    um_masked = masked_rows[np.array(undominated, dtype=np.int64)]
    keep_pos = []
    for pos in undominated:
        rm = masked_rows[pos]
        covered = ~np.any(rm[None, :] & ~um_masked, axis=1)
        covered &= ~np.all(um_masked == rm[None, :], axis=1)
        if not np.any(covered):
            keep_pos.append(pos)

    out = []
    for pos in keep_pos:
        g = int(reps[pos])
        kind = "proper" if cs.is_spacetime(g) else "terminal"
        out.append(IdealSet(rows[pos], S.orientation, kind, g, cs.n))
    return out


def common_future(P: IdealSet, cs: ChronoSet) -> IdealSet:
    """Future of the set of points after every member of P.

    An empty P makes the bound vacuous; the result is then the future of
    all spacetime points and is flagged degenerate.
    """
    degenerate = P.is_empty()
    upper = cs.dominators(P.members) if not degenerate else cs.ms_packed.copy()
    members = cs.future_of(upper)
    return IdealSet(members, "future", "composite", None, cs.n, degenerate)


def common_past(F: IdealSet, cs: ChronoSet) -> IdealSet:
    degenerate = F.is_empty()
    lower = cs.lowerers(F.members) if not degenerate else cs.ms_packed.copy()
    members = cs.past_of(lower)
    return IdealSet(members, "past", "composite", None, cs.n, degenerate)


def derived_causal(x: int, y: int, cs: ChronoSet) -> bool:
    """Causal comparison derived from chronology: pasts grow, futures shrink."""
    px = cs.past_members(x)
    py = cs.past_members(y)
    fx = cs.future_members(x)
    fy = cs.future_members(y)
    return bs.subset(px, py) and bs.subset(fy, fx)


def harris_chron(P: IdealSet, Q: IdealSet, cs: ChronoSet) -> bool:
    """Chronology between completion points represented by their pasts.

    Four cases by kind: two proper points compare by the base relation; a
    proper point precedes a terminal set when it is a member; a terminal
    set precedes a proper or terminal target when some member of the
    target's past set dominates all of P.
    """
    if P.kind == "proper" and Q.kind == "proper":
        return cs.related(P.generator, Q.generator)
    if P.kind == "proper":
        return bs.bit_get(Q.members, P.generator)
    # P is a terminal or composite past set: look for a member of Q's past
    # set whose own past swallows P.
    zs = cs.indices(Q.members)
    if zs.size == 0 or P.is_empty():
        return False
    hits = ~np.any(P.members[None, :] & ~cs.bwd[zs], axis=1)
    return bool(np.any(hits))


def past_determined_chron(P: IdealSet, Q: IdealSet, cs: ChronoSet) -> bool:
    """P precedes Q when the common future of P meets Q."""
    cf = common_future(P, cs)
    return bs.intersects(cf.members, Q.members)


def causality_ladder(cs: ChronoSet) -> dict:
    """Order-level verdicts for the sampled relation.

    Distinguishing verdicts restrict to spacetime samples whose relevant
    cone is nonempty; rows of empty cones carry no separating information
    at finite resolution.
    """
    diag = np.array([cs.related(i, i) for i in range(cs.n)], dtype=bool)
    chronological = not np.any(diag)

    sym_violation = None
    for i in range(cs.n):
        both = cs.fwd[i] & cs.bwd[i]
        if np.any(both):
            j = int(np.flatnonzero(bs.unpack(both, cs.n))[0])
            sym_violation = (i, j)
            break
    causal = chronological and sym_violation is None

    def injective(rel: np.ndarray) -> tuple:
        seen: dict = {}
        for i in cs.spacetime_indices().tolist():
            row = rel[i] & cs.ms_packed
            if not np.any(row):
                continue
            k = row.tobytes()
            if k in seen:
                return False, (seen[k], i)
            seen[k] = i
        return True, None

    past_ok, past_wit = injective(cs.bwd)
    fut_ok, fut_wit = injective(cs.fwd)

    return {
        "chronological": chronological,
        "causal": causal,
        "causal_witness": sym_violation,
        "past_distinguishing": past_ok,
        "past_witness": past_wit,
        "future_distinguishing": fut_ok,
        "future_witness": fut_wit,
    }


def maximal_chains(S, cs: ChronoSet, budget: int = 32, direction: str = "future") -> list:
    """Inclusion-maximal chains inside a member set, in index-lex order.

    Chains follow covering steps of the restricted order, so consecutive
    elements admit no interpolant within the set.  Enumeration stops after
    ``budget`` chains.
    """
    members = S.members if isinstance(S, IdealSet) else S
    step_fwd = cs.fwd if direction == "future" else cs.bwd
    step_bwd = cs.bwd if direction == "future" else cs.fwd

    idx = cs.indices(members)
    if idx.size == 0:
        return []
    starts = idx[~np.any(step_bwd[idx] & members[None, :], axis=1)]

    cover_cache: dict = {}

    def covers(x: int) -> list:
        got = cover_cache.get(x)
        if got is not None:
            return got
        succ_bits = step_fwd[x] & members
        succ = np.flatnonzero(bs.unpack(succ_bits, cs.n))
        if succ.size == 0:
            cover_cache[x] = []
            return []
        reach = bs.row_or(step_fwd[succ]) & members
        out = np.flatnonzero(bs.unpack(succ_bits & ~reach, cs.n)).tolist()
        cover_cache[x] = out
        return out

    chains: list = []
    for s in sorted(starts.tolist()):
        if len(chains) >= budget:
            break
        path = [int(s)]
        frames = [iter(covers(int(s)))]
        while frames and len(chains) < budget:
            try:
                nxt = next(frames[-1])
            except StopIteration:
                if not covers(path[-1]):
                    term = not cs.is_spacetime(path[-1])
                    chains.append(Chain(list(path), direction, term))
                frames.pop()
                path.pop()
                continue
            path.append(nxt)
            frames.append(iter(covers(nxt)))
    return chains


def save_chrono(cs: ChronoSet, path: str) -> None:
    sides = np.array(["" if s is None else s for s in cs.sides])
    np.savez_compressed(
        path,
        coords=cs.coords,
        tags=cs.tags,
        sides=sides,
        families=cs.families,
        spacetime_mask=cs.spacetime_mask,
        cmp_mask=cs.cmp_mask,
        fwd=cs.fwd,
        n=np.array([cs.n]),
    )


def load_chrono(path: str) -> ChronoSet:
    data = np.load(path, allow_pickle=False)
    sides = [s if s else None for s in data["sides"].tolist()]
    return ChronoSet(
        coords=data["coords"],
        tags=data["tags"],
        sides=sides,
        families=data["families"],
        spacetime_mask=data["spacetime_mask"],
        fwd=data["fwd"],
        bwd=None,
        cmp_mask=data["cmp_mask"],
    )
