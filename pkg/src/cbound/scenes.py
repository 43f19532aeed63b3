"""Sampling of flat model spacetimes into finite chronological sets.

A scene is a rectangular window of 2d or 3d Minkowski space with a list of
removed obstacle sets, discretized on a regular lattice.  Lattice nodes
become spacetime points; declared ideal limits (slit sides, removed
corners, window edges) enter as frontier points.  Two samples are related
when a future directed timelike polygonal path joins them while avoiding
every obstacle.  Path corners sit on samples or on removed-point markers:
a leg into a removed point and a leg out of it compose, because openness
of the continuum relation lets the corner slide off the removed point.
Every declared relation is thus witnessed by an actual timelike path of
the continuum region.

The module also carries exact continuum chronology tests for the same
scene families.  They are independent of the sampler and act as the
reference the sampled relation is audited against.

Conventions.  Coordinates are ordered (t, x) in 2d and (t, x, y) in 3d.
All scene geometry (window, obstacle endpoints, marker positions) must
lie on the half-step lattice h/2 with h = 1/resolution; geometric
predicates between lattice-aligned points are then evaluated in exact
integer arithmetic, so no relation ever depends on a float rounding
direction.  Off-lattice probe points are handled in floats, which is
safe because their margins are generic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import bitsets as bs
from .chrono import TAG_INTERIOR, TAG_OBSTACLE, TAG_RELAY, TAG_WINDOW, ChronoSet
from .completion import SequenceSpec
from .errors import InvalidSpec, ParseError, Unsupported

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# scene description


@dataclass(frozen=True)
class Obstacle2D:
    """A removed closed segment (or single point, when a == b)."""

    a: tuple
    b: tuple

    def is_point(self) -> bool:
        return self.a == self.b


@dataclass(frozen=True)
class Wall3D:
    """A removed piece of an axis-aligned plane in 3d.

    The plane {coords[axis] == value} restricted by one or two closed
    half-space conditions (cond_axis, op, cond_value) with op in
    {"ge", "le"}.
    """

    axis: int
    value: float
    conds: tuple


@dataclass(frozen=True)
class Diamond3D:
    """The removed closed set J+(a) cap J-(b) for vertically aligned a, b."""

    a: tuple
    b: tuple


@dataclass(frozen=True)
class Marker:
    """A frontier point added to the sampled set.

    ``direction`` limits which relation rows the marker collects: a
    "past" marker only gathers points below it (an ideal future endpoint
    of the region), a "future" marker only points above it.  A marker
    with a line guard only accepts path legs from the given side of the
    guard line; a marker with coordinate sign guards only accepts legs
    from the matching orthant.

    Markers relay composition: the relation is open, so a point below a
    removed point and a point above it are related through it.  A marker
    zeroed on one side by ``direction`` has nothing to relay.  A marker
    with ``terminal`` false relays but names no boundary point of its
    own; use one to carry composition past a removed point whose
    boundary structure is registered through sided markers instead.
    """

    coords: tuple
    direction: str = "both"
    family: int = -1
    guard_normal: tuple | None = None
    guard_sign: int = 0
    guard_signs: tuple = ()
    label: str = ""
    terminal: bool = True


@dataclass
class SceneSpec:
    """A parsed, validated scene description."""

    name: str
    kind: str
    dim: int
    window: tuple
    resolution: int
    offsets: tuple
    halfspace: dict | None
    obstacles: tuple
    frontier: tuple
    window_edges: tuple
    collar: float
    sequences: dict
    probes: dict
    expected: dict
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def h(self) -> float:
        return 1.0 / self.resolution

    @property
    def scale(self) -> int:
        # one unit of the integer lattice is h/2
        return 2 * self.resolution


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidSpec(msg)


def _lattice_int(value: float, scale: int, what: str) -> int:
    scaled = value * scale
    snapped = round(scaled)
    _require(abs(scaled - snapped) <= 1e-9 * max(1.0, abs(scaled)), f"{what} = {value} is not on the half step lattice")
    return int(snapped)


def _as_coords(v, dim: int, what: str) -> tuple:
    _require(isinstance(v, (list, tuple)) and len(v) == dim, f"{what} must have {dim} coordinates")
    return tuple(float(c) for c in v)


def _parse_obstacle(d: dict, dim: int, window: tuple) -> object:
    kind = d.get("kind")
    if dim == 2:
        if kind == "segment":
            return Obstacle2D(_as_coords(d["a"], 2, "segment endpoint"), _as_coords(d["b"], 2, "segment endpoint"))
        if kind == "point":
            p = _as_coords(d["at"], 2, "point obstacle")
            return Obstacle2D(p, p)
        if kind == "ray":
            # clipped to the window box; rays are the only obstacles allowed
            # to touch the window boundary
            a = _as_coords(d["a"], 2, "ray endpoint")
            dr = _as_coords(d["dir"], 2, "ray direction")
            _require(dr != (0.0, 0.0), "ray direction must be nonzero")
            best = None
            for ax in range(2):
                if dr[ax] == 0.0:
                    continue
                for lim in window[ax]:
                    s = (lim - a[ax]) / dr[ax]
                    if s > 1e-12 and (best is None or s < best):
                        inside = all(
                            window[o][0] - 1e-9 <= a[o] + s * dr[o] <= window[o][1] + 1e-9 for o in range(2)
                        )
                        if inside:
                            best = s
            _require(best is not None, "ray never reaches the window boundary")
            b = tuple(a[ax] + best * dr[ax] for ax in range(2))
            return Obstacle2D(a, b)
        raise InvalidSpec(f"unknown 2d obstacle kind {kind!r}")
    if kind == "wall":
        axis = int(d["axis"])
        _require(0 <= axis < dim, "wall axis out of range")
        conds = []
        for c in d.get("conds", []):
            cax, op, cval = int(c[0]), str(c[1]), float(c[2])
            _require(0 <= cax < dim and cax != axis, "wall condition axis out of range")
            _require(op in ("ge", "le"), f"unknown wall condition op {op!r}")
            conds.append((cax, op, cval))
        _require(1 <= len(conds) <= 2, "a wall needs one or two half-space conditions")
        return Wall3D(axis, float(d["value"]), tuple(conds))
    if kind == "diamond":
        a = _as_coords(d["a"], dim, "diamond vertex")
        b = _as_coords(d["b"], dim, "diamond vertex")
        _require(a[1:] == b[1:] and b[0] > a[0], "diamond vertices must be vertically aligned, a below b")
        return Diamond3D(a, b)
    raise InvalidSpec(f"unknown 3d obstacle kind {kind!r}")


def _obstacle_coords(ob) -> list:
    if isinstance(ob, Obstacle2D):
        return [ob.a, ob.b]
    if isinstance(ob, Wall3D):
        return [(ob.value,), *[(v,) for _, _, v in ob.conds]]
    if isinstance(ob, Diamond3D):
        return [ob.a, ob.b]
    raise InvalidSpec(f"unknown obstacle {ob!r}")


def _parse_guard(d: dict, dim: int, scale: int) -> dict:
    out = {"normal": None, "sign": 0, "signs": ()}
    if "normal" in d:
        normal = _as_coords(d["normal"], dim, "guard normal")
        for c in normal:
            _lattice_int(c, scale, "guard normal component")
        sign = int(d.get("sign", 0))
        _require(sign in (-1, 1), "line guards need sign +-1")
        out["normal"] = normal
        out["sign"] = sign
    if "signs" in d:
        signs = []
        for ax, sg in d["signs"]:
            _require(0 <= int(ax) < dim and int(sg) in (-1, 1), "bad coordinate sign guard")
            signs.append((int(ax), int(sg)))
        out["signs"] = tuple(signs)
    return out


def parse_scene(raw: dict, resolution: int | None = None) -> SceneSpec:
    """Validate a raw scene dictionary and return a SceneSpec.

    ``resolution`` overrides the registered value, which is how the
    refinement helpers and the command line --resolution flag work.
    """

    if not isinstance(raw, dict):
        raise InvalidSpec("scene description must be a mapping")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise InvalidSpec(f"unsupported scene schema_version {raw.get('schema_version')!r}")
    kind = raw.get("kind")
    if kind == "wave":
        raise Unsupported("wave scenes are built by the wave module")
    _require(kind in ("minkowski2d", "minkowski3d"), f"unknown scene kind {kind!r}")
    dim = 2 if kind == "minkowski2d" else 3
    name = str(raw.get("name", ""))
    _require(bool(name), "scene needs a name")

    window_raw = raw.get("window")
    _require(isinstance(window_raw, list) and len(window_raw) == dim, "window must list one [lo, hi] pair per axis")
    window = []
    for ax, pair in enumerate(window_raw):
        lo, hi = float(pair[0]), float(pair[1])
        _require(lo < hi, f"window axis {ax} is empty")
        window.append((lo, hi))
    window = tuple(window)

    res = int(raw["resolution"] if resolution is None else resolution)
    _require(res >= 2, "resolution must be at least 2")
    scale = 2 * res

    offsets_raw = raw.get("offsets")
    if offsets_raw is None:
        offsets = (0.0,) + (0.5,) * (dim - 1)
    else:
        _require(len(offsets_raw) == dim, "offsets must list one value per axis")
        offsets = tuple(float(o) for o in offsets_raw)
        _require(all(o in (0.0, 0.5) for o in offsets), "axis offsets must be 0 or 1/2")

    halfspace = raw.get("halfspace")
    if halfspace is not None:
        _require(
            isinstance(halfspace, dict)
            and 0 <= int(halfspace.get("axis", -1)) < dim
            and int(halfspace.get("sign", 0)) in (-1, 1),
            "halfspace needs an axis and sign +-1",
        )
        halfspace = {
            "axis": int(halfspace["axis"]),
            "sign": int(halfspace["sign"]),
            "value": float(halfspace.get("value", 0.0)),
        }

    obstacle_dicts = list(raw.get("obstacles", []))
    obstacles = tuple(_parse_obstacle(d, dim, window) for d in obstacle_dicts)
    for ob, d in zip(obstacles, obstacle_dicts):
        # rays are clipped to the window, so they may touch its boundary;
        # every other obstacle must keep strictly inside
        ray = d.get("kind") == "ray"
        for pt in _obstacle_coords(ob):
            for c in pt:
                _lattice_int(c, scale, f"{name}: obstacle coordinate")
        if isinstance(ob, Obstacle2D):
            for pt in (ob.a, ob.b):
                for ax in range(2):
                    lo, hi = window[ax]
                    if ray:
                        _require(lo - 1e-9 <= pt[ax] <= hi + 1e-9, "obstacle leaves the window")
                    else:
                        _require(lo < pt[ax] < hi, "finite obstacles must lie strictly inside the window")
        elif isinstance(ob, Diamond3D):
            for pt in (ob.a, ob.b):
                for ax in range(dim):
                    _require(window[ax][0] < pt[ax] < window[ax][1], "diamond must lie strictly inside the window")

    frontier = []
    for entry in raw.get("frontier", []):
        e = dict(entry)
        e.setdefault("direction", "both")
        _require(e["direction"] in ("past", "future", "both"), "bad marker direction")
        if e.get("kind", "point") == "point":
            at = _as_coords(e["at"], dim, "marker position")
            for c in at:
                _lattice_int(c, scale, "marker coordinate")
            e["at"] = at
        else:
            _require(e.get("kind") == "line", f"unknown frontier kind {e.get('kind')!r}")
            _require(dim == 2, "line markers are 2d only")
            axis = int(e["axis"])
            _require(axis in (0, 1), "line marker axis out of range")
            fixed = float(e["fixed"])
            _lattice_int(fixed, scale, "line marker offset")
            e["axis"] = axis
            e["fixed"] = fixed
            e["range"] = (float(e["range"][0]), float(e["range"][1]))
            sides = e.get("sides", [0])
            _require(all(s in (-1, 0, 1) for s in sides), "line marker sides must be -1, 0 or 1")
            e["sides"] = list(sides)
        if "guard" in e and e["guard"] is not None:
            e["guard"] = _parse_guard(e["guard"], dim, scale)
        frontier.append(e)

    window_edges = []
    for ax, sg in raw.get("window_edges", []):
        _require(0 <= int(ax) < dim and int(sg) in (-1, 1), "bad window edge declaration")
        window_edges.append((int(ax), int(sg)))

    sequences = dict(raw.get("sequences", {}))
    for sname, sd in sequences.items():
        _require(sd.get("kind") in ("parametric", "explicit", "markers"), f"unknown sequence kind in {sname!r}")

    probes = {k: _as_coords(v, dim, f"probe {k!r}") for k, v in raw.get("probes", {}).items()}

    return SceneSpec(
        name=name,
        kind=kind,
        dim=dim,
        window=window,
        resolution=res,
        offsets=offsets,
        halfspace=halfspace,
        obstacles=obstacles,
        frontier=tuple(frontier),
        window_edges=tuple(window_edges),
        collar=float(raw.get("collar", 1.5)),
        sequences=sequences,
        probes=probes,
        expected=dict(raw.get("expected", {})),
        raw=raw,
    )


def refine_scene(spec: SceneSpec, factor: int) -> SceneSpec:
    """The same scene at ``factor`` times the resolution.

    Coarse lattice nodes persist in the refined lattice whenever the
    factor is odd, which is what the refinement monotonicity invariant
    quantifies over.
    """

    _require(factor >= 1, "refinement factor must be positive")
    return parse_scene(spec.raw, resolution=spec.resolution * factor)


# ---------------------------------------------------------------------------
# integer leg predicates

# A leg is a straight step u -> v between lattice-aligned points, in the
# scaled integer frame.  It is usable iff it is strictly timelike and its
# open segment misses every obstacle.  Touching an obstacle exactly at an
# endpoint is allowed: that endpoint is then a frontier marker standing
# for its one sided limit, and the true path stops short of it.


def _cross2(ax, ay, bx, by):
    return ax * by - ay * bx


def _blocked_segment2d(u, vt, vx, ob_a, ob_b):
    """Vectorized: does open leg u->(vt, vx) properly cross segment ob?

    ``u`` is a single source (t, x) int pair, vt/vx are int arrays.
    Collinear overlap never blocks: an offset path beside the removed
    segment exists whenever the leg runs along it.
    """

    dt, dx = ob_b[0] - ob_a[0], ob_b[1] - ob_a[1]
    su = _cross2(dt, dx, u[0] - ob_a[0], u[1] - ob_a[1])
    sv = _cross2(dt, dx, vt - ob_a[0], vx - ob_a[1])
    straddle = (su * sv) < 0
    lt, lx = vt - u[0], vx - u[1]
    sa = _cross2(lt, lx, ob_a[0] - u[0], ob_a[1] - u[1])
    sb = _cross2(lt, lx, ob_b[0] - u[0], ob_b[1] - u[1])
    return straddle & ((sa * sb) <= 0)


def _blocked_point2d(u, vt, vx, p):
    """Does the open leg pass exactly through the removed point p?"""

    lt, lx = vt - u[0], vx - u[1]
    coll = _cross2(lt, lx, p[0] - u[0], p[1] - u[1]) == 0
    dot = (p[0] - u[0]) * lt + (p[1] - u[1]) * lx
    return coll & (dot > 0) & (dot < lt * lt + lx * lx)


def _blocked_wall3d(u, tgts, wall_iv):
    """Vectorized wall crossing test in exact integers.

    ``wall_iv`` is (axis, value, conds) with integer value and integer
    condition thresholds.  The crossing parameter s = fu / (fu - fv) is
    evaluated by cross-multiplication, so the containment test of the
    crossing point in the closed wall piece is exact.
    """

    axis, value, conds = wall_iv
    fu = u[axis] - value
    fv = tgts[:, axis] - value
    blocked = (fu * fv) < 0
    if not blocked.any():
        return blocked
    denom_pos = fu > 0  # sign(fu - fv) == sign(fu) on the straddle set
    for cax, op, cval in conds:
        num = (u[cax] - cval) * (fu - fv) + fu * (tgts[:, cax] - u[cax])
        # num / (fu - fv) is the condition coordinate at the crossing,
        # relative to the threshold; the wall piece is closed
        at_least = (num >= 0) if denom_pos else (num <= 0)
        at_most = (num <= 0) if denom_pos else (num >= 0)
        blocked &= at_least if op == "ge" else at_most
    return blocked


def _diamond_depth(u, tgts, dia_f):
    """Smallest value of |t| + |(x, y)| along each leg, in floats.

    Inputs are float coordinates shifted so the diamond is centred at
    the origin with unit half-height.  The function is convex along a
    leg; the minimum is attained at an endpoint, at the t = 0 crossing,
    or at a stationary point of (sigma t + |p|) on a fixed t-sign piece,
    which is a root of a quadratic.
    """

    a, b = np.asarray(dia_f[0]), np.asarray(dia_f[1])
    c = (a + b) / 2.0
    half = (b[0] - a[0]) / 2.0
    u = (np.asarray(u, dtype=np.float64) - c) / half
    tg = (np.asarray(tgts, dtype=np.float64) - c) / half

    d = tg - u[None, :]
    cand = [np.zeros(len(tg)), np.ones(len(tg))]
    dt = d[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = np.where(dt != 0, -u[0] / np.where(dt == 0, 1.0, dt), np.nan)
    cand.append(s0)
    p0 = u[1:]
    dp = d[:, 1:]
    aa = np.einsum("ij,ij->i", dp, dp)
    ab = dp @ p0
    pp = p0 @ p0
    # (ab + s aa)^2 == dt^2 (pp + 2 ab s + aa s^2)
    qa = aa * (aa - dt * dt)
    qb = 2.0 * ab * (aa - dt * dt)
    qc = ab * ab - dt * dt * pp
    with np.errstate(invalid="ignore"):
        disc = qb * qb - 4.0 * qa * qc
        root = np.sqrt(np.maximum(disc, 0.0))
        for sgn in (-1.0, 1.0):
            den = np.where(qa != 0, 2.0 * qa, 1.0)
            s = np.where((qa != 0) & (disc >= 0), (-qb + sgn * root) / den, np.nan)
            cand.append(s)

    best = np.full(len(tg), np.inf)
    for s in cand:
        s = np.clip(np.nan_to_num(s, nan=0.0), 0.0, 1.0)
        t = u[0] + s * dt
        p = p0[None, :] + s[:, None] * dp
        g = np.abs(t) + np.sqrt(np.einsum("ij,ij->i", p, p))
        best = np.minimum(best, g)
    return best


def _blocked_diamond3d(u_f, tgt_f, dia: Diamond3D):
    # strictly inside by margin; tangent grazing is restored by an
    # epsilon perturbation of the true path, so it does not block
    return _diamond_depth(u_f, tgt_f, (dia.a, dia.b)) < 1.0 - 1e-9


# ---------------------------------------------------------------------------
# sampling


class SceneRuntime:
    """Geometry retained on a sampled ChronoSet for probe evaluation."""

    def __init__(self, spec, fcoords, icoords, sample_count, marker_list, marker_index):
        self.spec = spec
        self.fcoords = fcoords
        self.icoords = icoords
        self.sample_count = sample_count
        self.markers = marker_list
        self.marker_index = marker_index


def _expand_markers(spec: SceneSpec) -> list:
    """Expand frontier declarations into concrete Marker objects."""

    h = spec.h
    markers = []
    family = 0
    for e in spec.frontier:
        direction = e["direction"]
        guard = e.get("guard") or {}
        if e.get("kind", "point") == "point":
            g = guard
            markers.append(
                Marker(
                    coords=e["at"],
                    direction=direction,
                    family=family,
                    guard_normal=g.get("normal"),
                    guard_sign=g.get("sign", 0),
                    guard_signs=tuple(tuple(s) for s in g.get("signs", ())),
                    label=e.get("label", ""),
                    terminal=bool(e.get("terminal", True)),
                )
            )
            family += 1
            continue
        axis = e["axis"]
        fixed = e["fixed"]
        lo, hi = e["range"]
        off = spec.offsets[axis]
        k_lo = math.ceil(lo / h - off - 1e-9)
        k_hi = math.floor(hi / h - off + 1e-9)
        # a line marker set splits per side: the guard line is the
        # obstacle line itself, with normal along the fixed axis
        normal = [0.0, 0.0]
        normal[1 - axis] = 1.0
        for side in e["sides"]:
            for k in range(k_lo, k_hi + 1):
                value = (k + off) * h
                coords = [0.0, 0.0]
                coords[axis] = value
                coords[1 - axis] = fixed
                markers.append(
                    Marker(
                        coords=tuple(coords),
                        direction=direction,
                        family=family,
                        guard_normal=tuple(normal) if side != 0 else None,
                        guard_sign=side,
                        guard_signs=(),
                        label=e.get("label", ""),
                        terminal=bool(e.get("terminal", True)),
                    )
                )
            family += 1
    return markers


def _lattice_axes(spec: SceneSpec) -> list:
    axes = []
    h = spec.h
    for ax in range(spec.dim):
        lo, hi = spec.window[ax]
        off = spec.offsets[ax]
        k_lo = math.ceil(lo / h - off - 1e-9)
        k_hi = math.floor(hi / h - off + 1e-9)
        _require(k_hi >= k_lo, f"window axis {ax} holds no sample layer")
        axes.append(np.arange(k_lo, k_hi + 1, dtype=np.int64) * 2 + int(2 * off))
    return axes


def _scaled_obstacles(spec: SceneSpec) -> list:
    out = []
    s = spec.scale
    for ob in spec.obstacles:
        if isinstance(ob, Obstacle2D):
            ia = tuple(_lattice_int(c, s, "obstacle") for c in ob.a)
            ib = tuple(_lattice_int(c, s, "obstacle") for c in ob.b)
            out.append(("seg2", ia, ib, ob))
        elif isinstance(ob, Wall3D):
            iv = _lattice_int(ob.value, s, "wall value")
            conds = tuple((cax, op, _lattice_int(cv, s, "wall cond")) for cax, op, cv in ob.conds)
            out.append(("wall3", (ob.axis, iv, conds), None, ob))
        else:
            out.append(("dia3", None, None, ob))
    return out


def _on_obstacle_mask(icoords: np.ndarray, fcoords: np.ndarray, scaled, spec: SceneSpec) -> np.ndarray:
    """Samples lying on a removed set get eaten by the obstacle."""

    eaten = np.zeros(len(icoords), dtype=bool)
    for kind, p1, p2, ob in scaled:
        if kind == "seg2":
            d = (p2[0] - p1[0], p2[1] - p1[1])
            rel_t = icoords[:, 0] - p1[0]
            rel_x = icoords[:, 1] - p1[1]
            if d == (0, 0):
                eaten |= (rel_t == 0) & (rel_x == 0)
                continue
            coll = (d[0] * rel_x - d[1] * rel_t) == 0
            dot = rel_t * d[0] + rel_x * d[1]
            eaten |= coll & (dot >= 0) & (dot <= d[0] * d[0] + d[1] * d[1])
        elif kind == "wall3":
            axis, value, conds = p1
            on = icoords[:, axis] == value
            for cax, op, cval in conds:
                if op == "ge":
                    on &= icoords[:, cax] >= cval
                else:
                    on &= icoords[:, cax] <= cval
            eaten |= on
        else:
            dia = ob
            half = (dia.b[0] - dia.a[0]) / 2.0
            c = (np.asarray(dia.a) + np.asarray(dia.b)) / 2.0
            rel = (fcoords - c) / half
            depth = np.abs(rel[:, 0]) + np.sqrt(np.einsum("ij,ij->i", rel[:, 1:], rel[:, 1:]))
            eaten |= depth <= 1.0 + 1e-12
    return eaten


def _legs_from(u_i, u_f, tgt_i, tgt_f, scaled):
    """Timelike step mask from one source to every target, exact."""

    dt = tgt_i[:, 0] - u_i[0]
    ok = dt > 0
    if not ok.any():
        return ok
    rhs = np.zeros_like(dt)
    for ax in range(1, tgt_i.shape[1]):
        dd = tgt_i[:, ax] - u_i[ax]
        rhs += dd * dd
    ok &= dt * dt > rhs
    if not ok.any():
        return ok
    for kind, p1, p2, ob in scaled:
        if kind == "seg2":
            if p1 == p2:
                blocked = _blocked_point2d(u_i, tgt_i[:, 0], tgt_i[:, 1], p1)
            else:
                blocked = _blocked_segment2d(u_i, tgt_i[:, 0], tgt_i[:, 1], p1, p2)
        elif kind == "wall3":
            blocked = _blocked_wall3d(u_i, tgt_i, p1)
        else:
            blocked = _blocked_diamond3d(u_f, tgt_f, ob)
        ok &= ~blocked
        if not ok.any():
            break
    return ok


def _guard_mask(marker: Marker, fcoords: np.ndarray, icoords: np.ndarray, scale: int) -> np.ndarray:
    """Which nodes may exchange legs with a guarded marker."""

    ok = np.ones(len(fcoords), dtype=bool)
    if marker.guard_normal is not None and marker.guard_sign != 0:
        normal_i = np.array([round(c * scale) for c in marker.guard_normal], dtype=np.int64)
        m_i = np.array([round(c * scale) for c in marker.coords], dtype=np.int64)
        side = (icoords - m_i) @ normal_i
        ok &= np.sign(side) == marker.guard_sign
    for ax, sg in marker.guard_signs:
        ok &= np.sign(icoords[:, ax]) == sg
    return ok


def _transitive_close(dense: np.ndarray) -> np.ndarray:
    """Boolean transitive closure of the step relation.

    Markers compose like any node: the chronology relation is open, so
    two points related through a removed point are related outright.  A
    one-sided marker has a zeroed row or column and cannot carry a path.
    """

    A = dense
    for _ in range(8):
        prod = (A.astype(np.float32) @ A.astype(np.float32)) > 0.5
        new = A | prod
        if (new == A).all():
            return new
        A = new
    raise InvalidSpec("step relation failed to close; scene too entangled")


def sample_minkowski_scene(spec: SceneSpec) -> ChronoSet:
    """Discretize a Minkowski scene into a ChronoSet.

    Sample points on the lattice become spacetime points; samples lying
    on a removed set are eaten by it.  Declared frontier markers and the
    outermost sample layer of each declared window edge enter as
    frontier points.  The chronology is the transitive closure of exact
    obstacle-avoiding timelike steps.  Markers compose like any node
    where both their sides exist: openness of the relation makes two
    points related through a removed point related outright.
    """

    if isinstance(spec, dict):
        spec = parse_scene(spec)
    h = spec.h
    scale = spec.scale
    axes = _lattice_axes(spec)
    grids = np.meshgrid(*axes, indexing="ij")
    icoords = np.stack([g.ravel() for g in grids], axis=1)
    fcoords = icoords.astype(np.float64) / scale

    scaled = _scaled_obstacles(spec)
    eaten = _on_obstacle_mask(icoords, fcoords, scaled, spec)
    icoords = icoords[~eaten]
    fcoords = fcoords[~eaten]
    n_s = len(icoords)

    tags = np.full(n_s, TAG_INTERIOR, dtype=np.int8)
    families = np.full(n_s, -1, dtype=np.int32)
    edge_family = 1000
    for ax, sg in spec.window_edges:
        layer = axes[ax][-1] if sg > 0 else axes[ax][0]
        sel = icoords[:, ax] == layer
        tags[sel] = TAG_WINDOW
        families[np.where(sel & (families == -1))[0]] = edge_family
        edge_family += 1

    markers = _expand_markers(spec)
    n_m = len(markers)
    if n_m:
        m_f = np.array([m.coords for m in markers], dtype=np.float64)
        m_i = np.array([[_lattice_int(c, scale, "marker") for c in m.coords] for m in markers], dtype=np.int64)
        icoords = np.concatenate([icoords, m_i])
        fcoords = np.concatenate([fcoords, m_f])
        m_tags = np.array([TAG_OBSTACLE if m.terminal else TAG_RELAY for m in markers], dtype=np.int8)
        tags = np.concatenate([tags, m_tags])
        families = np.concatenate([families, np.array([m.family for m in markers], dtype=np.int32)])

    n = n_s + n_m
    sides = [0] * n_s + [m.guard_sign if m.guard_sign else (m.guard_signs[0][1] if m.guard_signs else 0) for m in markers]

    # step relation
    needs_closure = bool(spec.obstacles)
    guard_cols = {}
    for j, m in enumerate(markers):
        if m.guard_normal is not None or m.guard_signs:
            guard_cols[n_s + j] = _guard_mask(m, fcoords, icoords, scale)

    if needs_closure:
        dense = np.zeros((n, n), dtype=bool)
        for i in range(n):
            dense[i] = _legs_from(icoords[i], fcoords[i], icoords, fcoords, scaled)
        for col, mask in guard_cols.items():
            dense[:, col] &= mask
            dense[col, :] &= mask
        for j, m in enumerate(markers):
            if m.direction == "past":
                dense[n_s + j, :] = False
            elif m.direction == "future":
                dense[:, n_s + j] = False
        dense = _transitive_close(dense)
        fwd = bs.pack(dense)
    else:
        # without obstacles every usable step is already a full relation
        # segment, so the step relation is transitive as it stands
        W = bs.width(n)
        fwd = np.zeros((n, W), dtype=np.uint8)
        chunk = max(1, int(2**22 // max(n, 1)))
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            dt = icoords[None, :, 0] - icoords[lo:hi, None, 0]
            ok = dt > 0
            rhs = np.zeros_like(dt)
            for ax in range(1, spec.dim):
                dd = icoords[None, :, ax] - icoords[lo:hi, None, ax]
                rhs += dd * dd
            ok &= dt * dt > rhs
            fwd[lo:hi] = bs.pack(ok)
        for col, mask in guard_cols.items():
            rows = np.where(~mask)[0]
            fwd[rows, col >> 3] &= np.uint8(0xFF ^ (1 << (col & 7)))
            fwd[col] &= bs.pack(mask)
        for j, m in enumerate(markers):
            if m.direction == "past":
                fwd[n_s + j] = 0
            elif m.direction == "future":
                col = n_s + j
                fwd[:, col >> 3] &= np.uint8(0xFF ^ (1 << (col & 7)))

    spacetime = tags == TAG_INTERIOR

    # comparison collar: geometry-adjacent samples are excluded from set
    # comparisons, so one sided limits are judged away from the contact
    # layer where the discretization is rawest
    collar = np.zeros(n, dtype=bool)
    radius = spec.collar * h
    for kind, p1, p2, ob in scaled:
        if kind == "seg2":
            a = np.asarray(p1, dtype=np.float64) / scale
            b = np.asarray(p2, dtype=np.float64) / scale
            d = b - a
            denom = float(d @ d)
            rel = fcoords - a
            s = np.clip((rel @ d) / denom, 0.0, 1.0) if denom > 0 else np.zeros(n)
            dist = np.linalg.norm(rel - s[:, None] * d, axis=1)
            collar |= dist < radius - 1e-12
        elif kind == "wall3":
            axis, value, conds = p1
            dd = (fcoords[:, axis] - value / scale) ** 2
            for cax, op, cval in conds:
                gap = fcoords[:, cax] - cval / scale
                short = np.maximum(0.0, -gap if op == "ge" else gap)
                dd += short * short
            collar |= np.sqrt(dd) < radius - 1e-12
        else:
            dia = ob
            half = (dia.b[0] - dia.a[0]) / 2.0
            c = (np.asarray(dia.a) + np.asarray(dia.b)) / 2.0
            rel = (fcoords - c) / half
            depth = np.abs(rel[:, 0]) + np.sqrt(np.einsum("ij,ij->i", rel[:, 1:], rel[:, 1:]))
            collar |= (depth - 1.0) * half / math.sqrt(2.0) < radius - 1e-12
    for m in markers:
        dist = np.linalg.norm(fcoords - np.asarray(m.coords), axis=1)
        collar |= dist < radius - 1e-12
    cmp_mask = spacetime & ~collar

    cs = ChronoSet(
        coords=fcoords,
        tags=tags,
        sides=sides,
        families=families,
        spacetime_mask=spacetime,
        fwd=fwd,
        cmp_mask=cmp_mask,
    )
    marker_index = {}
    for j, m in enumerate(markers):
        marker_index[(tuple(round(c * scale) for c in m.coords), m.guard_sign, m.direction)] = n_s + j
        if m.label:
            marker_index.setdefault(m.label, n_s + j)
    cs.scene = SceneRuntime(spec, fcoords, icoords, n_s, markers, marker_index)
    return cs


def find_marker(cs: ChronoSet, label: str) -> int:
    """Index of a labelled frontier marker."""

    idx = cs.scene.marker_index.get(label)
    if idx is None:
        raise InvalidSpec(f"scene {cs.scene.spec.name!r} has no marker labelled {label!r}")
    return idx


# ---------------------------------------------------------------------------
# probe rows and sequences


def _float_leg_clear(u, v, spec: SceneSpec) -> bool:
    """Scalar float leg test for off-lattice probe points."""

    dt = v[0] - u[0]
    if dt <= 0:
        return False
    if dt * dt <= sum((v[ax] - u[ax]) ** 2 for ax in range(1, spec.dim)):
        return False
    for ob in spec.obstacles:
        if isinstance(ob, Obstacle2D):
            if ob.is_point():
                if _point_on_open_segment(u, v, ob.a):
                    return False
            elif _segments_block(u, v, ob.a, ob.b):
                return False
        elif isinstance(ob, Wall3D):
            if _wall_blocks(u, v, ob):
                return False
        else:
            depth = _diamond_depth(np.asarray(u, dtype=np.float64), np.asarray([v], dtype=np.float64), (ob.a, ob.b))
            if depth[0] < 1.0 - 1e-9:
                return False
    return True


def _point_on_open_segment(u, v, p, tol: float = 1e-12) -> bool:
    lt, lx = v[0] - u[0], v[1] - u[1]
    cr = lt * (p[1] - u[1]) - lx * (p[0] - u[0])
    if abs(cr) > tol * max(1.0, abs(lt), abs(lx)):
        return False
    dot = (p[0] - u[0]) * lt + (p[1] - u[1]) * lx
    return tol < dot < lt * lt + lx * lx - tol


def _segments_block(u, v, a, b, tol: float = 1e-12) -> bool:
    dt, dx = b[0] - a[0], b[1] - a[1]
    su = dt * (u[1] - a[1]) - dx * (u[0] - a[0])
    sv = dt * (v[1] - a[1]) - dx * (v[0] - a[0])
    if not (su * sv < -tol):
        return False
    lt, lx = v[0] - u[0], v[1] - u[1]
    sa = lt * (a[1] - u[1]) - lx * (a[0] - u[0])
    sb = lt * (b[1] - u[1]) - lx * (b[0] - u[0])
    return sa * sb <= tol


def _wall_blocks(u, v, wall: Wall3D, tol: float = 1e-12) -> bool:
    fu = u[wall.axis] - wall.value
    fv = v[wall.axis] - wall.value
    if not (fu * fv < -tol):
        return False
    s = fu / (fu - fv)
    for cax, op, cval in wall.conds:
        c = u[cax] + s * (v[cax] - u[cax])
        if op == "ge" and c < cval - tol:
            return False
        if op == "le" and c > cval + tol:
            return False
    return True


def probe_rows(cs: ChronoSet, point) -> tuple:
    """Past and future member rows of a virtual (off lattice) point.

    The point is relation-consistent with the sampled set: a sample is
    below the probe iff a direct timelike leg reaches the probe from the
    sample or from anything in the sample's sampled future.  Markers are
    left out of the rows; every consumer masks to spacetime members.
    """

    rt = cs.scene
    spec = rt.spec
    n = cs.n
    n_s = rt.sample_count
    direct_past = np.zeros(n, dtype=bool)
    direct_future = np.zeros(n, dtype=bool)
    for i in range(n_s):
        u = tuple(rt.fcoords[i])
        if _float_leg_clear(u, point, spec):
            direct_past[i] = True
        if _float_leg_clear(point, u, spec):
            direct_future[i] = True
    dp = bs.pack(direct_past)
    df = bs.pack(direct_future)
    # one composition hop against the closed sampled relation
    hop_past = (cs.fwd & dp[None, :]).any(axis=1)
    hop_future = (cs.bwd & df[None, :]).any(axis=1)
    past = direct_past | (hop_past & cs.spacetime_mask)
    future = direct_future | (hop_future & cs.spacetime_mask)
    past[n_s:] = False
    future[n_s:] = False
    return bs.pack(past), bs.pack(future)


def resolve_sequences(cs: ChronoSet) -> dict:
    """Build SequenceSpec objects for every sequence declared by a scene."""

    rt = cs.scene
    spec = rt.spec
    out = {}
    for name, sd in spec.sequences.items():
        kind = sd["kind"]
        if kind == "parametric":
            a = np.asarray(sd["a"], dtype=np.float64)
            b = np.asarray(sd.get("b", [0.0] * spec.dim), dtype=np.float64)
            c = np.asarray(sd.get("c", [0.0] * spec.dim), dtype=np.float64)
            lo, hi = int(sd["n_range"][0]), int(sd["n_range"][1])
            coords = [tuple(a + b / k + c / (k * k)) for k in range(lo, hi + 1)]
        elif kind == "explicit":
            coords = [tuple(map(float, p)) for p in sd["coords"]]
        else:
            side = int(sd.get("side", 0))
            direction = sd.get("direction", "both")
            pasts, futures = [], []
            for p in sd["coords"]:
                key = (tuple(round(float(c) * spec.scale) for c in p), side, direction)
                if key not in rt.marker_index:
                    raise InvalidSpec(f"sequence {name!r} names a marker that does not exist: {p}")
                idx = rt.marker_index[key]
                pasts.append(cs.past_members(idx))
                futures.append(cs.future_members(idx))
            out[name] = SequenceSpec(pasts, futures, kind="pairs", label=name)
            continue
        pasts, futures = [], []
        for p in coords:
            pr, fr = probe_rows(cs, p)
            pasts.append(pr & cs.ms_packed)
            futures.append(fr & cs.ms_packed)
        out[name] = SequenceSpec(pasts, futures, kind="points", label=name)
    return out


# ---------------------------------------------------------------------------
# exact continuum chronology


def _normalize_obstacles_2d(obstacles) -> list:
    out = []
    for ob in obstacles or ():
        if isinstance(ob, Obstacle2D):
            out.append(ob)
        elif isinstance(ob, dict):
            kind = ob.get("kind")
            if kind == "point":
                p = tuple(map(float, ob["at"]))
                out.append(Obstacle2D(p, p))
            else:
                out.append(Obstacle2D(tuple(map(float, ob["a"])), tuple(map(float, ob["b"]))))
        else:
            a, b = ob
            out.append(Obstacle2D(tuple(map(float, a)), tuple(map(float, b))))
    return out


def minkowski_chron_exact_2d(p, q, obstacles=(), halfspace=None) -> bool:
    """Exact chronology of 2d Minkowski space minus closed obstacles.

    A future directed timelike path exists iff one exists that is
    piecewise straight with bends only at obstacle endpoints, passing
    an arbitrarily small distance beside each bend.  The search walks
    the finite corner graph; legs must be strictly timelike and miss
    every obstacle, where touching a removed point exactly at a leg
    endpoint is the allowed epsilon-beside passage.
    """

    obs = _normalize_obstacles_2d(obstacles)
    p = tuple(map(float, p))
    q = tuple(map(float, q))
    if halfspace is not None:
        ax, sg, val = int(halfspace["axis"]), int(halfspace["sign"]), float(halfspace.get("value", 0.0))
        for z in (p, q):
            if sg * (z[ax] - val) <= 0:
                return False

    corners = []
    for ob in obs:
        for c in (ob.a, ob.b):
            if c not in corners:
                corners.append(c)

    def leg(u, v) -> bool:
        dt = v[0] - u[0]
        if dt <= 0 or dt * dt <= (v[1] - u[1]) ** 2:
            return False
        for ob in obs:
            if ob.is_point():
                if _point_on_open_segment(u, v, ob.a):
                    return False
            elif _segments_block(u, v, ob.a, ob.b):
                return False
        return True

    nodes = [p] + corners + [q]
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        u = nodes[i]
        for j, v in enumerate(nodes):
            if j in seen:
                continue
            if leg(u, v):
                if j == len(nodes) - 1:
                    return True
                seen.add(j)
                stack.append(j)
    return leg(p, q) if len(nodes) == 2 else False


def _exact3d_halfspace(z0, z1, halfspace) -> bool:
    ax, sg, val = int(halfspace["axis"]), int(halfspace["sign"]), float(halfspace.get("value", 0.0))
    for z in (z0, z1):
        if sg * (z[ax] - val) <= 0:
            return False
    dt = z1[0] - z0[0]
    return dt > 0 and dt * dt > (z1[1] - z0[1]) ** 2 + (z1[2] - z0[2]) ** 2


def _interval_intersect(lo1, hi1, lo2, hi2):
    lo, hi = max(lo1, lo2), min(hi1, hi2)
    return (lo, hi) if lo < hi else None


def exact_chron_two_walls(z0, z1) -> bool:
    """Exact chronology of 3d Minkowski minus {y=0, t>=0} and {x=0, t<=0}.

    Case analysis over which coordinate planes the path must cross.  Any
    valid path can be straightened through its crossing points, so a
    one or two bend search over the wall edges is complete.  The two
    bend case reduces to maximizing a concave margin over the two bend
    times, handled by nested ternary search.
    """

    t0, x0, y0 = z0
    t1, x1, y1 = z1
    if t1 <= t0:
        return False
    if x0 == 0.0 or y0 == 0.0 or x1 == 0.0 or y1 == 0.0:
        raise InvalidSpec("exact two-wall test expects points off the wall planes")
    cross_x = (x0 > 0) != (x1 > 0)
    cross_y = (y0 > 0) != (y1 > 0)
    dt = t1 - t0
    chord_ok = dt * dt > (x1 - x0) ** 2 + (y1 - y0) ** 2

    def chord_time(f0, f1):
        # time at which the chord crosses f == 0
        s = f0 / (f0 - f1)
        return t0 + s * dt

    if not cross_x and not cross_y:
        return chord_ok

    if cross_y and not cross_x:
        # the y crossing must happen at t < 0
        if chord_ok and chord_time(y0, y1) < 0:
            return True
        if t0 >= 0:
            return False
        # one bend at (tau, a, 0) with tau < 0 and a on the shared x side
        r0sq = t0 * t0 - y0 * y0
        if r0sq <= 0:
            return False
        r0 = math.sqrt(r0sq)
        sx = 1.0 if x0 > 0 else -1.0
        lo1, hi1 = x0 - r0, x0 + r0
        if sx > 0:
            lo1 = max(lo1, 0.0)
        else:
            hi1 = min(hi1, 0.0)
        if lo1 >= hi1:
            return False

        def margin(a):
            leg1 = -t0 - math.hypot(a - x0, y0)  # latest tau bound below 0
            leg2 = dt - math.hypot(a - x0, y0) - math.hypot(x1 - a, y1)
            return min(leg1, leg2)

        return _ternary_max(margin, lo1, hi1) > 1e-9

    if cross_x and not cross_y:
        # the x crossing must happen at t > 0
        if chord_ok and chord_time(x0, x1) > 0:
            return True
        if t1 <= 0:
            return False
        # one bend at (tau, 0, c) with tau > 0 and c on the shared y side
        r1sq = t1 * t1 - x1 * x1
        if r1sq <= 0:
            return False
        r1 = math.sqrt(r1sq)
        sy = 1.0 if y0 > 0 else -1.0
        lo1, hi1 = y1 - r1, y1 + r1
        if sy > 0:
            lo1 = max(lo1, 0.0)
        else:
            hi1 = min(hi1, 0.0)
        if lo1 >= hi1:
            return False

        def margin(c):
            leg2 = t1 - math.hypot(x1, y1 - c)  # earliest tau bound above 0
            leg1 = dt - math.hypot(x0, y0 - c) - math.hypot(x1, y1 - c)
            return min(leg1, leg2)

        return _ternary_max(margin, lo1, hi1) > 1e-9

    # both cross: y first at some s < 0, then x at some r > 0
    if t0 >= 0 or t1 <= 0:
        return False
    sx = 1.0 if x0 > 0 else -1.0
    sy = 1.0 if y1 > 0 else -1.0

    def alpha(s):
        # nearest admissible |a| for the first bend (s, a, 0)
        rad_sq = (s - t0) ** 2 - y0 * y0
        if rad_sq <= 0:
            return None
        rad = math.sqrt(rad_sq)
        lo = abs(x0) - rad
        return max(lo, 0.0)

    def beta(r):
        rad_sq = (t1 - r) ** 2 - x1 * x1
        if rad_sq <= 0:
            return None
        rad = math.sqrt(rad_sq)
        lo = abs(y1) - rad
        return max(lo, 0.0)

    s_lo, s_hi = t0 + abs(y0), 0.0
    r_lo, r_hi = 0.0, t1 - abs(x1)
    if s_lo >= s_hi or r_lo >= r_hi:
        return False

    def outer(s):
        a = alpha(s)
        if a is None:
            return -math.inf

        def inner(r):
            b = beta(r)
            if b is None:
                return -math.inf
            return (r - s) - math.hypot(a, b)

        return _ternary_max(inner, r_lo + 1e-12, r_hi - 1e-12)

    return _ternary_max(outer, s_lo + 1e-12, s_hi - 1e-12) > 1e-9


def _ternary_max(f, lo: float, hi: float, iters: int = 80) -> float:
    if hi <= lo:
        return -math.inf
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
    return f((lo + hi) / 2.0)


def exact_chron_diamond(z0, z1, a=(-1.0, 0.0, 0.0), b=(1.0, 0.0, 0.0), arcs: int = 512) -> bool:
    """Exact chronology of 3d Minkowski minus the closed diamond J+(a) cap J-(b).

    Either the chord works, or the path bends once beside the equator
    circle of the removed set or beside one of its vertices.  The
    equator is swept with a dense angular grid; scene margins are far
    above the sweep pitch.
    """

    z0 = tuple(map(float, z0))
    z1 = tuple(map(float, z1))
    c = tuple((ai + bi) / 2.0 for ai, bi in zip(a, b))
    half = (b[0] - a[0]) / 2.0
    w0 = tuple((z0[i] - c[i]) / half for i in range(3))
    w1 = tuple((z1[i] - c[i]) / half for i in range(3))

    def strict(u, v):
        dt = v[0] - u[0]
        return dt > 0 and dt * dt > (v[1] - u[1]) ** 2 + (v[2] - u[2]) ** 2

    def clear(u, v):
        depth = _diamond_depth(np.asarray(u), np.asarray([v]), ((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
        return depth[0] >= 1.0 - 1e-9

    if not strict(w0, w1):
        return False
    if clear(w0, w1):
        return True
    bends = [(-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)]
    bends += [(0.0, math.cos(th), math.sin(th)) for th in np.linspace(0.0, 2.0 * math.pi, arcs, endpoint=False)]
    for m in bends:
        if strict(w0, m) and strict(m, w1) and clear(w0, m) and clear(m, w1):
            return True
    return False


def exact_chron_scene(spec: SceneSpec, z0, z1) -> bool:
    """Dispatch to the exact test matching a scene's geometry."""

    if spec.dim == 2:
        return minkowski_chron_exact_2d(z0, z1, spec.obstacles, spec.halfspace)
    walls = [ob for ob in spec.obstacles if isinstance(ob, Wall3D)]
    dias = [ob for ob in spec.obstacles if isinstance(ob, Diamond3D)]
    if dias and not walls:
        return exact_chron_diamond(z0, z1, dias[0].a, dias[0].b)
    if not spec.obstacles:
        if spec.halfspace is not None:
            return _exact3d_halfspace(z0, z1, spec.halfspace)
        dt = z1[0] - z0[0]
        return dt > 0 and dt * dt > (z1[1] - z0[1]) ** 2 + (z1[2] - z0[2]) ** 2
    if len(walls) == 2 and not dias:
        return exact_chron_two_walls(z0, z1)
    raise Unsupported(f"no exact oracle for scene {spec.name!r}")


# ---------------------------------------------------------------------------
# corpus


def scene_registry() -> dict:
    """All bundled scene descriptions, keyed by name."""

    out = {}
    root = resources.files("cbound").joinpath("corpus")
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            data = json.loads(entry.read_text(encoding="utf-8"))
            out[data["name"]] = data
    return out


def load_scene(name_or_path: str) -> dict:
    """Load a raw scene description from the registry or a file path."""

    reg = scene_registry()
    if name_or_path in reg:
        return reg[name_or_path]
    try:
        with open(name_or_path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"no scene named {name_or_path!r} and no such file") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"scene file {name_or_path!r} is not valid JSON: {exc}") from None
