"""Spatial compatibility: can a target's footprint, inflated by a clearance
margin, be placed somewhere in a directional region under translation and
in-plane rotation?

The search is an exhaustive, deterministic lattice scan: yaw angles evenly
divide the circle and translations step a fixed lattice anchored at the
feasible range's start, so refining the step can only add candidate
placements (refinement never flips true to false).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import DirectionalRegion, OccupancyGrid, UnsupportedRelation, directional_region
from .scene import CameraView, FrameKind, RelationKind, Scene

DEFAULT_FIT_MARGIN = 0.10
DEFAULT_ROTATION_STEPS = 16


class RegionUndefined(Exception):
    """The query's relation has no directional ground region."""


@dataclass(frozen=True)
class FitQuery:
    anchor_id: str
    target_id: str
    relation: RelationKind
    frame: FrameKind
    margin: float = DEFAULT_FIT_MARGIN

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.anchor_id == self.target_id:
            raise ValueError("anchor and target must differ")

    def key(self) -> tuple:
        return (self.anchor_id, self.target_id, self.relation.value, self.frame.value)


def _occupied_near(grid: OccupancyGrid, region: DirectionalRegion, reach: float) -> np.ndarray:
    """Centers of occupied cells within reach of the region, shape (m, 2)."""
    verts = np.array(region.vertices)
    lo = verts.min(axis=0) - reach
    hi = verts.max(axis=0) + reach
    res = grid.resolution
    i0 = max(0, int(math.floor((lo[0] - grid.origin[0]) / res)))
    i1 = min(grid.nx, int(math.ceil((hi[0] - grid.origin[0]) / res)))
    j0 = max(0, int(math.floor((lo[1] - grid.origin[1]) / res)))
    j1 = min(grid.ny, int(math.ceil((hi[1] - grid.origin[1]) / res)))
    if i0 >= i1 or j0 >= j1:
        return np.empty((0, 2))
    sub = grid.cells[i0:i1, j0:j1]
    ii, jj = np.nonzero(sub)
    return np.column_stack(
        [
            grid.origin[0] + (ii + i0 + 0.5) * res,
            grid.origin[1] + (jj + j0 + 0.5) * res,
        ]
    )


def _lattice(lo: float, hi: float, step: float) -> np.ndarray:
    if hi < lo:
        return np.empty(0)
    n = int(math.floor((hi - lo) / step + 1e-12)) + 1
    return lo + np.arange(n) * step


def check_fit(
    scene: Scene,
    view: CameraView,
    query: FitQuery,
    grid: OccupancyGrid,
    rotation_steps: int = DEFAULT_ROTATION_STEPS,
    translation_step: float | None = None,
    depth: float = 1.0,
) -> bool:
    """True iff some placement of the target's inflated footprint fits.

    The footprint (target x/y extents plus `margin` on each side) is swept
    over `rotation_steps` yaw angles and a translation lattice; a placement
    fits when it lies entirely inside the directional region and overlaps no
    occupied grid cell (positive-area overlap, consistent with the grid
    rasterizer).
    """
    anchor = scene.object_by_id(query.anchor_id)
    target = scene.object_by_id(query.target_id)
    try:
        region = directional_region(anchor, query.relation, query.frame, view, depth)
    except UnsupportedRelation as exc:
        raise RegionUndefined(str(exc)) from exc

    step = grid.resolution if translation_step is None else translation_step
    a = target.box.half_extents.x + query.margin
    b = target.box.half_extents.y + query.margin

    occ = _occupied_near(grid, region, reach=math.hypot(a, b) + grid.resolution)
    u = np.array(region.u)
    v = np.array(region.v)
    origin = np.array(region.center)
    res = grid.resolution
    (s0, s1), (t0, t1) = region.s_range, region.t_range

    for k in range(rotation_steps):
        theta = 2.0 * math.pi * k / rotation_steps
        c, s = math.cos(theta), math.sin(theta)
        # extents of the rotated rect along the region axes
        es = a * abs(c) + b * abs(s)
        et = a * abs(s) + b * abs(c)
        ss = _lattice(s0 + es, s1 - es, step)
        tt = _lattice(t0 + et, t1 - et, step)
        if ss.size == 0 or tt.size == 0:
            continue
        centers = (
            origin
            + ss[:, None, None] * u
            + tt[None, :, None] * v
        ).reshape(-1, 2)
        if occ.size == 0:
            return True

        # rect axes in world coordinates
        p = c * u + s * v
        q = -s * u + c * v
        d = occ[None, :, :] - centers[:, None, :]
        ex = a * abs(p[0]) + b * abs(q[0])
        ey = a * abs(p[1]) + b * abs(q[1])
        overlap = (np.abs(d[:, :, 0]) < res / 2.0 + ex) & (np.abs(d[:, :, 1]) < res / 2.0 + ey)
        half_p = a + (abs(p[0]) + abs(p[1])) * res / 2.0
        half_q = b + (abs(q[0]) + abs(q[1])) * res / 2.0
        overlap &= np.abs(d[:, :, 0] * p[0] + d[:, :, 1] * p[1]) < half_p
        overlap &= np.abs(d[:, :, 0] * q[0] + d[:, :, 1] * q[1]) < half_q
        if not overlap.any(axis=1).all():
            return True
    return False


def emit_compatibility(
    scene: Scene,
    view: CameraView,
    queries: list[FitQuery],
    grid: OccupancyGrid,
    rotation_steps: int = DEFAULT_ROTATION_STEPS,
    translation_step: float | None = None,
    depth: float = 1.0,
) -> tuple[list[tuple[FitQuery, bool]], list[tuple[FitQuery, str]]]:
    """check_fit over the queries, ordered by query key.

    Queries whose region is undefined are returned as skipped entries with
    the reason instead of aborting the batch.
    """
    results: list[tuple[FitQuery, bool]] = []
    skipped: list[tuple[FitQuery, str]] = []
    for query in sorted(queries, key=FitQuery.key):
        try:
            ok = check_fit(scene, view, query, grid, rotation_steps, translation_step, depth)
        except RegionUndefined as exc:
            skipped.append((query, str(exc)))
            continue
        results.append((query, ok))
    return results, skipped
