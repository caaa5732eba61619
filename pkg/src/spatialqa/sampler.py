"""Top-down occupancy mapping and free-space point sampling.

The occupancy grid rasterizes box footprints within a vertical slab using an
exact convex-polygon vs. cell overlap test (positive-area, so footprints that
merely touch a cell boundary do not occupy it). Context sampling rejection-
samples points in a directional region, keeps those lying in free cells that
project into the image, and raycasts from the camera to drop occluded ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .scene import CameraView, FrameKind, ObjectInstance, RelationKind, Scene, Vec3

DEFAULT_SURFACE_ALLOWLIST = ("table", "desk", "counter", "shelf", "floor", "bed", "cabinet")
DEFAULT_REGION_DEPTH = 1.0
DEFAULT_BUDGET = 1000
DEFAULT_K = 5
# Sampled points sit just above the support surface so rays are not grazing
# the support box itself.
SAMPLE_Z_OFFSET = 0.02
MAX_GRID_CELLS = 50_000_000


class UnsupportedRelation(Exception):
    """Vertical relations have no ground region."""


class NoFreeSpace(Exception):
    """Directional region is fully occupied, off-image, or occluded."""


class GridTooLarge(Exception):
    """Scene bounds at the requested resolution exceed the cell budget."""


@dataclass(frozen=True)
class OccupancyGrid:
    """Top-down boolean rasterization; cells[i, j] covers
    [origin_x + i*res, origin_x + (i+1)*res) x [origin_y + j*res, ...)."""

    origin: tuple[float, float]
    resolution: float
    nx: int
    ny: int
    cells: np.ndarray
    z_band: tuple[float, float]
    warning: str | None = None

    def cell_index(self, x: float, y: float) -> tuple[int, int] | None:
        i = int(np.floor((x - self.origin[0]) / self.resolution))
        j = int(np.floor((y - self.origin[1]) / self.resolution))
        if 0 <= i < self.nx and 0 <= j < self.ny:
            return i, j
        return None

    def is_free(self, x: float, y: float) -> bool:
        """False when occupied or outside the grid."""
        idx = self.cell_index(x, y)
        if idx is None:
            return False
        return not bool(self.cells[idx])

    def to_pgm(self, path) -> None:
        """Binary PGM dump, 255 = free, 0 = occupied; row 0 is max-y."""
        img = np.where(self.cells.T[::-1], 0, 255).astype(np.uint8)
        with open(path, "wb") as f:
            f.write(f"P5\n{self.nx} {self.ny}\n255\n".encode())
            f.write(img.tobytes())


def footprint_polygon(box) -> np.ndarray:
    """Convex ground-plane footprint of an oriented box, CCW, shape (m, 2)."""
    hull = geometry.convex_hull(box.footprint())
    return np.array(hull.vertices)


def _rasterize_polygon(grid_cells, origin, res, poly: np.ndarray) -> None:
    """Mark cells whose rect has positive-area overlap with a convex polygon."""
    nx, ny = grid_cells.shape
    minx, miny = poly.min(axis=0)
    maxx, maxy = poly.max(axis=0)
    # one-cell margin: the index arithmetic can round across a cell boundary
    i0 = max(0, int(np.floor((minx - origin[0]) / res)) - 1)
    i1 = min(nx, int(np.ceil((maxx - origin[0]) / res)) + 1)
    j0 = max(0, int(np.floor((miny - origin[1]) / res)) - 1)
    j1 = min(ny, int(np.ceil((maxy - origin[1]) / res)) + 1)
    if i0 >= i1 or j0 >= j1:
        return

    x_lo = origin[0] + np.arange(i0, i1) * res
    y_lo = origin[1] + np.arange(j0, j1) * res
    ok_x = (minx < x_lo + res) & (x_lo < maxx)
    ok_y = (miny < y_lo + res) & (y_lo < maxy)
    overlap = ok_x[:, None] & ok_y[None, :]

    # Separating-axis test on the polygon's edge normals; strict inequalities
    # keep boundary-touching cells free.
    cx = (x_lo + res / 2.0)[:, None]
    cy = (y_lo + res / 2.0)[None, :]
    m = len(poly)
    for e in range(m):
        if not overlap.any():
            return
        a = poly[e]
        b = poly[(e + 1) % m]
        n = np.array([b[1] - a[1], a[0] - b[0]])
        proj = poly @ n
        pmin, pmax = proj.min(), proj.max()
        c_proj = cx * n[0] + cy * n[1]
        half = (abs(n[0]) + abs(n[1])) * res / 2.0
        overlap &= (pmin < c_proj + half) & (c_proj - half < pmax)

    grid_cells[i0:i1, j0:j1] |= overlap


def build_occupancy(
    scene: Scene,
    resolution: float,
    z_band: tuple[float, float],
    pad: float = 0.5,
) -> OccupancyGrid:
    """Rasterize the footprints of boxes whose z-interval intersects z_band.

    The grid covers the 2D bounds of all scene boxes (in or out of band),
    padded by at least `pad` meters, with cell boundaries on the resolution
    lattice. An empty band yields an all-free grid carrying a warning rather
    than an error.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    z_min, z_max = z_band
    if not z_min < z_max:
        raise ValueError("z_band must satisfy z_min < z_max")
    pad = max(pad, 0.5)

    all_xy = np.vstack([o.box.footprint() for o in scene.objects])
    lo = all_xy.min(axis=0) - pad
    hi = all_xy.max(axis=0) + pad
    origin = (
        float(np.floor(lo[0] / resolution) * resolution),
        float(np.floor(lo[1] / resolution) * resolution),
    )
    nx = int(np.ceil((hi[0] - origin[0]) / resolution))
    ny = int(np.ceil((hi[1] - origin[1]) / resolution))
    if nx * ny > MAX_GRID_CELLS:
        raise GridTooLarge(
            f"grid would need {nx}x{ny} cells at resolution {resolution}; "
            "check scene extents"
        )

    cells = np.zeros((nx, ny), dtype=bool)
    in_band = []
    for obj in scene.objects:
        bz0, bz1 = obj.box.z_interval()
        if max(bz0, z_min) < min(bz1, z_max):  # open-interval overlap
            in_band.append(obj)
    for obj in in_band:
        _rasterize_polygon(cells, origin, resolution, footprint_polygon(obj.box))

    warning = None if in_band else f"no box intersects z_band ({z_min}, {z_max})"
    return OccupancyGrid(
        origin=origin,
        resolution=resolution,
        nx=nx,
        ny=ny,
        cells=cells,
        z_band=(float(z_min), float(z_max)),
        warning=warning,
    )


@dataclass(frozen=True)
class DirectionalRegion:
    """Ground-plane rectangle flush against one side of the anchor footprint.

    u is the unit relation axis (pointing away from the anchor), v its CCW
    perpendicular; s/t ranges are signed coordinates along u/v relative to
    the anchor center.
    """

    center: tuple[float, float]
    u: tuple[float, float]
    v: tuple[float, float]
    s_range: tuple[float, float]
    t_range: tuple[float, float]

    @property
    def vertices(self) -> tuple[tuple[float, float], ...]:
        c = np.array(self.center)
        u = np.array(self.u)
        v = np.array(self.v)
        (s0, s1), (t0, t1) = self.s_range, self.t_range
        quad = [c + s * u + t * v for s, t in ((s0, t0), (s1, t0), (s1, t1), (s0, t1))]
        return tuple((float(p[0]), float(p[1])) for p in quad)

    def contains(self, x: float, y: float) -> bool:
        dx = x - self.center[0]
        dy = y - self.center[1]
        s = dx * self.u[0] + dy * self.u[1]
        t = dx * self.v[0] + dy * self.v[1]
        return self.s_range[0] <= s <= self.s_range[1] and self.t_range[0] <= t <= self.t_range[1]


def _ground_axis(relation: RelationKind, frame: FrameKind, view: CameraView, anchor: ObjectInstance) -> np.ndarray:
    """Unit ground-plane direction of the relation axis in the given frame."""
    if relation in (RelationKind.ABOVE, RelationKind.BELOW):
        raise UnsupportedRelation(f"{relation.value} has no ground region")
    if frame is FrameKind.OBJECT:
        h = anchor.box.heading
        base = {
            RelationKind.FRONT: h[:, 0],
            RelationKind.BEHIND: -h[:, 0],
            RelationKind.LEFT: h[:, 1],
            RelationKind.RIGHT: -h[:, 1],
        }[relation]
    else:
        # ego, and the world-frame fallback for horizontal relations
        r = view.extrinsics.rotation
        base = {
            RelationKind.RIGHT: r[:, 0],
            RelationKind.LEFT: -r[:, 0],
            RelationKind.BEHIND: r[:, 2],
            RelationKind.FRONT: -r[:, 2],
        }[relation]
    xy = base[:2]
    norm = float(np.linalg.norm(xy))
    if norm < 1e-9:
        raise UnsupportedRelation(f"{relation.value} axis is vertical in this {frame.value} frame")
    return xy / norm


def directional_region(
    anchor: ObjectInstance,
    relation: RelationKind,
    frame: FrameKind,
    view: CameraView,
    depth: float = DEFAULT_REGION_DEPTH,
) -> DirectionalRegion:
    """Rectangle flush against the anchor footprint's side facing the relation
    axis, extending `depth` outward, as wide as the footprint is across it.

    Vertical relations raise UnsupportedRelation.
    """
    u = _ground_axis(relation, frame, view, anchor)
    v = np.array([-u[1], u[0]])
    c = anchor.box.center.to_array()[:2]
    rel = anchor.box.footprint() - c
    s = rel @ u
    t = rel @ v
    return DirectionalRegion(
        center=(float(c[0]), float(c[1])),
        u=(float(u[0]), float(u[1])),
        v=(float(v[0]), float(v[1])),
        s_range=(float(s.max()), float(s.max() + depth)),
        t_range=(float(t.min()), float(t.max())),
    )


@dataclass(frozen=True)
class ContextSample:
    view_id: str
    anchor_id: str
    relation: RelationKind
    frame: FrameKind
    points_2d: tuple[tuple[float, float], ...]
    points_3d: tuple[Vec3, ...]


def sample_context(
    scene: Scene,
    view: CameraView,
    anchor: ObjectInstance,
    relation: RelationKind,
    frame: FrameKind,
    grid: OccupancyGrid,
    k: int = DEFAULT_K,
    seed: int = 0,
    depth: float = DEFAULT_REGION_DEPTH,
    budget: int = DEFAULT_BUDGET,
    exclude_ids: frozenset[str] = frozenset(),
) -> ContextSample:
    """Sample up to k free, visible, unoccluded points in the directional
    region, deterministically for a fixed seed.

    Points sit just above the grid's support band; boxes in exclude_ids
    (normally the support surface itself) do not count as occluders. Raises
    NoFreeSpace when no candidate within the budget is accepted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    region = directional_region(anchor, relation, frame, view, depth)

    rng = np.random.default_rng(seed)
    s = rng.uniform(region.s_range[0], region.s_range[1], budget)
    t = rng.uniform(region.t_range[0], region.t_range[1], budget)
    u = np.array(region.u)
    v = np.array(region.v)
    xy = np.array(region.center) + s[:, None] * u + t[:, None] * v
    z = grid.z_band[0] + SAMPLE_Z_OFFSET
    pts = np.column_stack([xy, np.full(budget, z)])

    # free-cell test (points outside the grid are rejected)
    ij = np.floor((xy - np.array(grid.origin)) / grid.resolution).astype(int)
    inside = (ij[:, 0] >= 0) & (ij[:, 0] < grid.nx) & (ij[:, 1] >= 0) & (ij[:, 1] < grid.ny)
    free = np.zeros(budget, dtype=bool)
    free[inside] = ~grid.cells[ij[inside, 0], ij[inside, 1]]

    # image test
    r = view.extrinsics.rotation
    cam = view.extrinsics.translation.to_array()
    ego = (pts - cam) @ r
    intr = view.intrinsics
    with np.errstate(divide="ignore", invalid="ignore"):
        uu = intr.fx * ego[:, 0] / ego[:, 2] + intr.cx
        vv = intr.fy * ego[:, 1] / ego[:, 2] + intr.cy
    in_image = (ego[:, 2] > 0) & (uu >= 0) & (uu <= intr.width) & (vv >= 0) & (vv <= intr.height)

    # occlusion test: the camera ray must reach the point before any box
    occluders = [o.box for o in scene.objects if o.id not in exclude_ids]
    unoccluded = np.ones(budget, dtype=bool)
    if occluders:
        delta = pts - cam
        dist = np.linalg.norm(delta, axis=1)
        hits = geometry.ray_boxes_hit_distances(cam, delta, occluders)
        blocked = hits * dist[:, None] < (dist - 1e-6)[:, None]
        unoccluded = ~blocked.any(axis=1)

    accepted = np.nonzero(free & in_image & unoccluded)[0][:k]
    if accepted.size == 0:
        raise NoFreeSpace(
            f"no free visible point for anchor '{anchor.id}' {relation.value}/{frame.value} "
            f"within budget {budget}"
        )

    points_3d = tuple(Vec3(float(p[0]), float(p[1]), float(p[2])) for p in pts[accepted])
    points_2d = tuple(geometry.project(p, view) for p in points_3d)
    return ContextSample(
        view_id=view.view_id,
        anchor_id=anchor.id,
        relation=relation,
        frame=frame,
        points_2d=points_2d,
        points_3d=points_3d,
    )


def support_surfaces(scene: Scene, allowlist=DEFAULT_SURFACE_ALLOWLIST) -> list[tuple[ObjectInstance, float]]:
    """Objects that can support placement, with their top elevation.

    Selection is a deterministic label allowlist; z_top = center.z +
    half_extents.z.
    """
    allowed = set(allowlist)
    return [
        (o, o.box.center.z + o.box.half_extents.z)
        for o in scene.objects
        if o.label in allowed
    ]


def objects_resting_on(
    scene: Scene, surface: ObjectInstance, z_top: float, tolerance: float = 0.05
) -> list[ObjectInstance]:
    """Objects whose box bottom sits on the surface top (within tolerance)."""
    out = []
    for obj in scene.objects:
        if obj.id == surface.id:
            continue
        bottom = obj.box.z_interval()[0]
        if abs(bottom - z_top) <= tolerance:
            out.append(obj)
    return out
