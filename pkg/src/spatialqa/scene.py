"""Scene data model: labeled oriented 3D boxes plus calibrated camera views.

Scenes are ingested from JSON (one file per scene), validated against the
published invariants, and immutable afterwards so they can be shared freely
across workers.

Conventions fixed here and relied on everywhere else:
  * world up is +z, gravity -z; scenes declaring another up axis are rejected
  * an object's front is its box's local +x axis (first heading column)
  * camera frame is +x right, +y down, +z forward (optical axis)
  * all rotations are stored as row-major 3x3 matrices, never Euler angles
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

ROTATION_TOL = 1e-6


class ParseError(Exception):
    """Scene file is not parseable as the documented JSON schema."""


class ValidationError(Exception):
    """A scene invariant is violated; the message names the offending field."""


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> "Vec3":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotation (3x3, row-major) plus translation in meters."""

    rotation: np.ndarray
    translation: Vec3

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        if self.rotation.shape != (3, 3):
            raise ValidationError("rotation must be a 3x3 matrix")


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int


@dataclass(frozen=True)
class OrientedBox:
    """Oriented box: center and half extents in meters, heading box->world.

    The heading's first column is the object's front-facing direction.
    """

    center: Vec3
    half_extents: Vec3
    heading: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "heading", np.asarray(self.heading, dtype=np.float64))
        if self.heading.shape != (3, 3):
            raise ValidationError("heading must be a 3x3 matrix")

    def corners(self) -> np.ndarray:
        """All 8 corners in world coordinates, shape (8, 3)."""
        h = self.half_extents.to_array()
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        return self.center.to_array() + (signs * h) @ self.heading.T

    def z_interval(self) -> tuple[float, float]:
        z = self.corners()[:, 2]
        return float(z.min()), float(z.max())

    def footprint(self) -> np.ndarray:
        """Ground-plane footprint: xy projections of the 8 corners, shape (8, 2)."""
        return self.corners()[:, :2]


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    label: str
    box: OrientedBox


@dataclass(frozen=True)
class CameraView:
    view_id: str
    image_ref: str
    intrinsics: CameraIntrinsics
    extrinsics: Pose  # camera -> world

    def camera_center(self) -> Vec3:
        return self.extrinsics.translation


@dataclass(frozen=True)
class Scene:
    scene_id: str
    up_axis: str
    objects: tuple[ObjectInstance, ...]
    views: tuple[CameraView, ...]
    _object_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "_object_index", {o.id: o for o in self.objects})

    def object_by_id(self, object_id: str) -> ObjectInstance:
        return self._object_index[object_id]


class FrameKind(Enum):
    EGO = "ego"
    WORLD = "world"
    OBJECT = "object"


class RelationKind(Enum):
    LEFT = "left"
    RIGHT = "right"
    ABOVE = "above"
    BELOW = "below"
    FRONT = "front"
    BEHIND = "behind"


HORIZONTAL_RELATIONS = (
    RelationKind.LEFT,
    RelationKind.RIGHT,
    RelationKind.FRONT,
    RelationKind.BEHIND,
)


def _check_rotation(r: np.ndarray, what: str, out: list[str]) -> None:
    if not np.all(np.isfinite(r)):
        out.append(f"{what}: rotation has non-finite entries")
        return
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err >= ROTATION_TOL:
        out.append(f"{what}: rotation not orthonormal (|R^T R - I| = {err:.2e})")
        return
    det = float(np.linalg.det(r))
    if abs(det - 1.0) > ROTATION_TOL:
        out.append(f"{what}: rotation determinant {det:.6f} != 1 (improper rotation)")


def _check_vec(v: Vec3, what: str, out: list[str]) -> None:
    if not v.is_finite():
        out.append(f"{what}: non-finite component in ({v.x}, {v.y}, {v.z})")


def validate_scene(scene: Scene) -> list[str]:
    """Return one human-readable entry per invariant violation; [] if valid.

    Total function: never raises, in contrast with load_scene which rejects
    invalid files outright.
    """
    out: list[str] = []
    if scene.up_axis != "z":
        out.append(f"scene {scene.scene_id}: up_axis must be 'z', got '{scene.up_axis}'")
    if not scene.objects:
        out.append(f"scene {scene.scene_id}: must contain at least one object")
    if not scene.views:
        out.append(f"scene {scene.scene_id}: must contain at least one view")

    seen_ids: set[str] = set()
    for obj in scene.objects:
        if obj.id in seen_ids:
            out.append(f"object '{obj.id}': duplicate object id")
        seen_ids.add(obj.id)
        if not obj.label:
            out.append(f"object '{obj.id}': empty label")
        _check_vec(obj.box.center, f"object '{obj.id}' center", out)
        _check_vec(obj.box.half_extents, f"object '{obj.id}' half_extents", out)
        h = obj.box.half_extents
        for axis, value in (("x", h.x), ("y", h.y), ("z", h.z)):
            if not (value > 0):  # catches NaN too
                out.append(f"object '{obj.id}': half_extents.{axis} = {value} must be > 0")
        _check_rotation(obj.box.heading, f"object '{obj.id}' heading", out)

    seen_views: set[str] = set()
    for view in scene.views:
        if view.view_id in seen_views:
            out.append(f"view '{view.view_id}': duplicate view id")
        seen_views.add(view.view_id)
        intr = view.intrinsics
        if not all(math.isfinite(v) for v in (intr.fx, intr.fy, intr.cx, intr.cy)):
            out.append(f"view '{view.view_id}': non-finite intrinsics")
        else:
            if intr.fx <= 0 or intr.fy <= 0:
                out.append(f"view '{view.view_id}': focal lengths must be > 0")
            if intr.width <= 0 or intr.height <= 0:
                out.append(f"view '{view.view_id}': image size must be positive")
            if not (0 <= intr.cx <= intr.width and 0 <= intr.cy <= intr.height):
                out.append(f"view '{view.view_id}': principal point outside image bounds")
        _check_vec(view.extrinsics.translation, f"view '{view.view_id}' translation", out)
        _check_rotation(view.extrinsics.rotation, f"view '{view.view_id}' extrinsics", out)
    return out


def _need(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ParseError(f"{where}: missing required key '{key}'")
    return mapping[key]


def _vec3(raw, where: str) -> Vec3:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise ParseError(f"{where}: expected a 3-element array")
    try:
        return Vec3(float(raw[0]), float(raw[1]), float(raw[2]))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: non-numeric component") from exc


def _matrix3(raw, where: str) -> np.ndarray:
    try:
        m = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: non-numeric matrix entry") from exc
    if m.shape != (3, 3):
        raise ParseError(f"{where}: expected a 3x3 matrix")
    return m


def _int_field(raw, where: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or raw != int(raw):
        raise ParseError(f"{where}: expected an integer")
    return int(raw)


def scene_from_dict(data: dict) -> Scene:
    """Build a Scene from parsed JSON without validating invariants."""
    if not isinstance(data, dict):
        raise ParseError("scene file: top level must be an object")
    scene_id = str(_need(data, "scene_id", "scene"))
    up_axis = str(_need(data, "up_axis", "scene"))

    objects = []
    for i, raw in enumerate(_need(data, "objects", "scene")):
        where = f"objects[{i}]"
        box = OrientedBox(
            center=_vec3(_need(raw, "center", where), f"{where}.center"),
            half_extents=_vec3(_need(raw, "half_extents", where), f"{where}.half_extents"),
            heading=_matrix3(_need(raw, "heading", where), f"{where}.heading"),
        )
        objects.append(
            ObjectInstance(id=str(_need(raw, "id", where)), label=str(_need(raw, "label", where)), box=box)
        )

    views = []
    for i, raw in enumerate(_need(data, "views", "scene")):
        where = f"views[{i}]"
        raw_intr = _need(raw, "intrinsics", where)
        intr = CameraIntrinsics(
            fx=float(_need(raw_intr, "fx", f"{where}.intrinsics")),
            fy=float(_need(raw_intr, "fy", f"{where}.intrinsics")),
            cx=float(_need(raw_intr, "cx", f"{where}.intrinsics")),
            cy=float(_need(raw_intr, "cy", f"{where}.intrinsics")),
            width=_int_field(_need(raw_intr, "width", f"{where}.intrinsics"), f"{where}.intrinsics.width"),
            height=_int_field(_need(raw_intr, "height", f"{where}.intrinsics"), f"{where}.intrinsics.height"),
        )
        raw_ext = _need(raw, "extrinsics", where)
        ext = Pose(
            rotation=_matrix3(_need(raw_ext, "rotation", f"{where}.extrinsics"), f"{where}.extrinsics.rotation"),
            translation=_vec3(_need(raw_ext, "translation", f"{where}.extrinsics"), f"{where}.extrinsics.translation"),
        )
        views.append(
            CameraView(
                view_id=str(_need(raw, "view_id", where)),
                image_ref=str(_need(raw, "image_ref", where)),
                intrinsics=intr,
                extrinsics=ext,
            )
        )
    return Scene(scene_id=scene_id, up_axis=up_axis, objects=tuple(objects), views=tuple(views))


def load_scene(path) -> Scene:
    """Load and validate a scene JSON file.

    Raises ParseError for malformed files and ValidationError (naming the
    offending field and object/view id) when an invariant is violated.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read scene file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    try:
        scene = scene_from_dict(data)
    except (TypeError, AttributeError) as exc:
        raise ParseError(f"{path}: malformed scene structure: {exc}") from exc
    violations = validate_scene(scene)
    if violations:
        raise ValidationError(f"{path}: " + "; ".join(violations))
    return scene


def scene_to_dict(scene: Scene) -> dict:
    return {
        "scene_id": scene.scene_id,
        "up_axis": scene.up_axis,
        "objects": [
            {
                "id": o.id,
                "label": o.label,
                "center": [o.box.center.x, o.box.center.y, o.box.center.z],
                "half_extents": [o.box.half_extents.x, o.box.half_extents.y, o.box.half_extents.z],
                "heading": [[float(v) for v in row] for row in o.box.heading],
            }
            for o in scene.objects
        ],
        "views": [
            {
                "view_id": v.view_id,
                "image_ref": v.image_ref,
                "intrinsics": {
                    "fx": v.intrinsics.fx,
                    "fy": v.intrinsics.fy,
                    "cx": v.intrinsics.cx,
                    "cy": v.intrinsics.cy,
                    "width": v.intrinsics.width,
                    "height": v.intrinsics.height,
                },
                "extrinsics": {
                    "rotation": [[float(x) for x in row] for row in v.extrinsics.rotation],
                    "translation": [
                        v.extrinsics.translation.x,
                        v.extrinsics.translation.y,
                        v.extrinsics.translation.z,
                    ],
                },
            }
            for v in scene.views
        ],
    }


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n")
