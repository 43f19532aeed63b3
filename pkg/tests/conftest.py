"""Shared fixtures: tiny hand-built chronological sets with exact relations."""

from __future__ import annotations

import numpy as np
import pytest

from cbound.chrono import ChronoSet, PointRecord, build_chrono_set


def flat_grid_2d(nt: int, nx: int, t0: float = 0.0, x0: float = 0.0, h: float = 1.0):
    """Unobstructed 2D lightcone order on an nt-by-nx grid of samples.

    The relation is computed by the strict cone test directly, so this
    builder serves as an independent oracle for small cases.
    """
    pts = []
    for it in range(nt):
        for ix in range(nx):
            pts.append(PointRecord((t0 + it * h, x0 + ix * h)))
    edges = []
    for a, pa in enumerate(pts):
        ta, xa = pa.coords
        for b, pb in enumerate(pts):
            tb, xb = pb.coords
            if tb - ta > abs(xb - xa):
                edges.append((a, b))
    return build_chrono_set(pts, edges)


def cone_order(coords, extra=(), tags=None, sides=None):
    """Exact 2D cone order over explicit coordinates plus frontier points.

    ``extra`` lists (coords, tag, side, direction) frontier entries where
    direction is "past" (point above its members), "future", or "both".
    """
    pts = [PointRecord(tuple(c)) for c in coords]
    edges = []
    for a in range(len(coords)):
        ta, xa = coords[a]
        for b in range(len(coords)):
            tb, xb = coords[b]
            if tb - ta > abs(xb - xa):
                edges.append((a, b))
    for fc, tag, side, direction in extra:
        fi = len(pts)
        pts.append(PointRecord(tuple(fc), tag=tag, side=side))
        tf, xf = fc
        for a, (ta, xa) in enumerate(coords):
            if direction in ("past", "both") and tf - ta > abs(xf - xa):
                edges.append((a, fi))
            if direction in ("future", "both") and ta - tf > abs(xf - xa):
                edges.append((fi, a))
    return build_chrono_set(pts, edges)


@pytest.fixture
def diamond4():
    """0 below 1,2 below 3, with a terminal frontier point above all."""
    coords = [(0.0, 0.0), (1.0, -0.4), (1.0, 0.4), (2.0, 0.0)]
    extra = [((3.5, 0.0), "obstacle-frontier", None, "past")]
    return cone_order(coords, extra)
