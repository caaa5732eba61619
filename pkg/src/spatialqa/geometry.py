"""Pure geometric kernel: frame transforms, pinhole projection, ray-box
intersection, 2D convex hulls, and point-in-hull tests.

All operations are pure functions over immutable inputs. Every other module
routes its math through here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import CameraView, FrameKind, ObjectInstance, Vec3

# Guards division by near-zero ray direction components in the slab test.
PARALLEL_EPS = 1e-12
# Orientation predicate tolerance; inputs are pixel-scale so this is far
# below quantization.
CROSS_EPS = 1e-9


class MissingAnchor(Exception):
    """Object-frame transform requested without an anchor object."""


class DegenerateInput(Exception):
    """Hull construction needs >= 3 distinct, non-collinear points."""


@dataclass(frozen=True)
class Ray:
    """World-frame ray with unit direction."""

    origin: Vec3
    direction: Vec3

    def __post_init__(self):
        n = math.sqrt(self.direction.x**2 + self.direction.y**2 + self.direction.z**2)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"ray direction must be unit norm, |d| = {n}")

    @classmethod
    def through(cls, origin: Vec3, target: Vec3) -> "Ray":
        d = target.to_array() - origin.to_array()
        n = float(np.linalg.norm(d))
        if n == 0.0:
            raise ValueError("ray through coincident points is undefined")
        return cls(origin, Vec3.from_array(d / n))


@dataclass(frozen=True)
class Hull2D:
    """Convex polygon in pixel coordinates, CCW, no three consecutive collinear."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple((float(u), float(v)) for u, v in self.vertices))
        if len(self.vertices) < 3:
            raise ValueError("hull needs at least 3 vertices")


def world_to_frame(p: Vec3, frame: FrameKind, view: CameraView, anchor: ObjectInstance | None = None) -> Vec3:
    """Express a world-frame point in the requested reference frame.

    ego: camera frame via inverse extrinsics; world: identity; object:
    anchor-box frame via inverse heading about the anchor center.
    """
    if frame is FrameKind.WORLD:
        return p
    if frame is FrameKind.EGO:
        r = view.extrinsics.rotation
        t = view.extrinsics.translation.to_array()
        return Vec3.from_array(r.T @ (p.to_array() - t))
    if frame is FrameKind.OBJECT:
        if anchor is None:
            raise MissingAnchor("object frame requires an anchor object")
        h = anchor.box.heading
        c = anchor.box.center.to_array()
        return Vec3.from_array(h.T @ (p.to_array() - c))
    raise ValueError(f"unknown frame {frame}")


def frame_to_world(p: Vec3, frame: FrameKind, view: CameraView, anchor: ObjectInstance | None = None) -> Vec3:
    """Inverse of world_to_frame."""
    if frame is FrameKind.WORLD:
        return p
    if frame is FrameKind.EGO:
        r = view.extrinsics.rotation
        t = view.extrinsics.translation.to_array()
        return Vec3.from_array(r @ p.to_array() + t)
    if frame is FrameKind.OBJECT:
        if anchor is None:
            raise MissingAnchor("object frame requires an anchor object")
        h = anchor.box.heading
        c = anchor.box.center.to_array()
        return Vec3.from_array(h @ p.to_array() + c)
    raise ValueError(f"unknown frame {frame}")


def project(p: Vec3, view: CameraView) -> tuple[float, float] | None:
    """Pinhole projection of a world point; None if at or behind the camera.

    No bounds clamp: callers decide whether off-image points are acceptable.
    """
    ego = world_to_frame(p, FrameKind.EGO, view)
    if ego.z <= 0:
        return None
    intr = view.intrinsics
    return (intr.fx * ego.x / ego.z + intr.cx, intr.fy * ego.y / ego.z + intr.cy)


def backproject(uv: tuple[float, float], depth: float, view: CameraView) -> Vec3:
    """World point at the given ego depth along the pixel's viewing ray."""
    intr = view.intrinsics
    x = (uv[0] - intr.cx) / intr.fx * depth
    y = (uv[1] - intr.cy) / intr.fy * depth
    return frame_to_world(Vec3(x, y, depth), FrameKind.EGO, view)


def point_in_image(uv: tuple[float, float], view: CameraView) -> bool:
    """Inside the image plane, bounds inclusive."""
    return 0.0 <= uv[0] <= view.intrinsics.width and 0.0 <= uv[1] <= view.intrinsics.height


def _slab_entry_exit(origin_local: np.ndarray, dir_local: np.ndarray, half: np.ndarray):
    """Slab-method [t_enter, t_exit] in the box's local frame; None on miss."""
    t_lo, t_hi = -math.inf, math.inf
    for o, d, h in zip(origin_local, dir_local, half):
        if abs(d) < PARALLEL_EPS:
            if abs(o) > h:
                return None
            continue
        t1 = (-h - o) / d
        t2 = (h - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_lo = max(t_lo, t1)
        t_hi = min(t_hi, t2)
        if t_hi < t_lo:
            return None
    return t_lo, t_hi


def ray_box_intersect(ray: Ray, box) -> float | None:
    """Smallest non-negative t where the ray enters the box; None on miss.

    A ray starting inside the box returns t = 0.
    """
    h = box.heading
    c = box.center.to_array()
    o = h.T @ (ray.origin.to_array() - c)
    d = h.T @ ray.direction.to_array()
    hit = _slab_entry_exit(o, d, box.half_extents.to_array())
    if hit is None:
        return None
    t_lo, t_hi = hit
    if t_hi < 0:
        return None
    return max(t_lo, 0.0)


def ray_boxes_hit_distances(origin: np.ndarray, directions: np.ndarray, boxes) -> np.ndarray:
    """Vectorized slab test: entry distances for N rays against B boxes.

    directions need not be unit-norm; distances are in multiples of each
    direction's length. Returns shape (N, B) with +inf for misses.
    """
    n = directions.shape[0]
    b = len(boxes)
    out = np.full((n, b), np.inf)
    for j, box in enumerate(boxes):
        h = box.heading
        c = box.center.to_array()
        half = box.half_extents.to_array()
        o = (origin - c) @ h  # row vector form of H^T (origin - c)
        d = directions @ h
        t_lo = np.full(n, -np.inf)
        t_hi = np.full(n, np.inf)
        miss = np.zeros(n, dtype=bool)
        for axis in range(3):
            da = d[:, axis]
            oa = o[axis]
            parallel = np.abs(da) < PARALLEL_EPS
            miss |= parallel & (np.abs(oa) > half[axis])
            safe = np.where(parallel, 1.0, da)
            t1 = (-half[axis] - oa) / safe
            t2 = (half[axis] - oa) / safe
            lo = np.minimum(t1, t2)
            hi = np.maximum(t1, t2)
            t_lo = np.where(parallel, t_lo, np.maximum(t_lo, lo))
            t_hi = np.where(parallel, t_hi, np.minimum(t_hi, hi))
        miss |= t_hi < t_lo
        miss |= t_hi < 0
        entry = np.maximum(t_lo, 0.0)
        out[:, j] = np.where(miss, np.inf, entry)
    return out


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> Hull2D:
    """Monotone-chain convex hull, vertices CCW, collinear points dropped.

    Raises DegenerateInput for fewer than 3 distinct points or an all-collinear
    input.
    """
    pts = sorted({(float(u), float(v)) for u, v in points})
    if len(pts) < 3:
        raise DegenerateInput("convex hull needs at least 3 distinct points")

    def half(seq):
        chain: list[tuple[float, float]] = []
        for p in seq:
            while len(chain) > 1 and _cross(chain[-2], chain[-1], p) <= CROSS_EPS:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    vertices = lower[:-1] + upper[:-1]
    if len(vertices) < 3:
        raise DegenerateInput("all input points are collinear")
    return Hull2D(tuple(vertices))


def point_in_hull(p, hull: Hull2D) -> bool:
    """True iff p is inside or on the boundary (boundary counts as inside)."""
    verts = hull.vertices
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        if _cross(a, b, p) < -CROSS_EPS:
            return False
    return True
