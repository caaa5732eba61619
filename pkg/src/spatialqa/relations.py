"""Binary spatial-configuration relations between visible object pairs,
computed in each of the three reference frames.

The rule is center-vs-center with a margin: the target center, expressed in
the frame appropriate to the relation, must exceed the margin along the
relation axis. Margin ties hold in neither direction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import geometry
from .scene import CameraView, FrameKind, ObjectInstance, RelationKind, Scene

DEFAULT_MARGIN = 0.05
DEFAULT_MIN_FRACTION = 0.5

MIRROR = {
    RelationKind.LEFT: RelationKind.RIGHT,
    RelationKind.RIGHT: RelationKind.LEFT,
    RelationKind.ABOVE: RelationKind.BELOW,
    RelationKind.BELOW: RelationKind.ABOVE,
    RelationKind.FRONT: RelationKind.BEHIND,
    RelationKind.BEHIND: RelationKind.FRONT,
}


@dataclass(frozen=True)
class SpatialRelation:
    view_id: str
    anchor_id: str
    target_id: str
    relation: RelationKind
    frame: FrameKind
    holds: bool


def visible_objects(
    scene: Scene, view: CameraView, min_fraction: float = DEFAULT_MIN_FRACTION
) -> list[ObjectInstance]:
    """Objects visible in the view.

    Visible means: at least min_fraction of the box's 8 corners project
    inside the image with positive depth, and the ray from the camera center
    to the box center is not blocked by any other object's box at a strictly
    smaller hit distance.
    """
    cam = view.camera_center().to_array()
    candidates = []
    for obj in scene.objects:
        corners = obj.box.corners()
        ego = (corners - view.extrinsics.translation.to_array()) @ view.extrinsics.rotation
        z = ego[:, 2]
        intr = view.intrinsics
        with np.errstate(divide="ignore", invalid="ignore"):
            u = intr.fx * ego[:, 0] / z + intr.cx
            v = intr.fy * ego[:, 1] / z + intr.cy
        ok = (z > 0) & (u >= 0) & (u <= intr.width) & (v >= 0) & (v <= intr.height)
        if ok.mean() >= min_fraction:
            candidates.append(obj)
    if not candidates:
        return []

    visible = []
    for obj in candidates:
        target = obj.box.center.to_array()
        delta = target - cam
        dist = float(np.linalg.norm(delta))
        if dist == 0.0:
            continue
        occluders = [o.box for o in scene.objects if o.id != obj.id]
        if occluders:
            hits = geometry.ray_boxes_hit_distances(cam, delta[None, :], occluders)[0]
            if np.any(hits < 1.0):  # hit before reaching the center
                continue
        visible.append(obj)
    return visible


def unique_label_objects(objects: list[ObjectInstance]) -> list[ObjectInstance]:
    """Keep exactly those objects whose label occurs once in the input."""
    counts = Counter(o.label for o in objects)
    return [o for o in objects if counts[o.label] == 1]


def _signed_coordinate(
    anchor: ObjectInstance,
    target: ObjectInstance,
    relation: RelationKind,
    frame: FrameKind,
    view: CameraView,
) -> float:
    """Signed displacement of the target center along the relation axis."""
    delta_world = target.box.center.to_array() - anchor.box.center.to_array()

    if frame is FrameKind.WORLD and relation in (RelationKind.ABOVE, RelationKind.BELOW):
        dz = delta_world[2]
        return dz if relation is RelationKind.ABOVE else -dz

    if frame is FrameKind.OBJECT:
        d = anchor.box.heading.T @ delta_world
        # anchor local axes: x front, y left, z up
        return {
            RelationKind.FRONT: d[0],
            RelationKind.BEHIND: -d[0],
            RelationKind.LEFT: d[1],
            RelationKind.RIGHT: -d[1],
            RelationKind.ABOVE: d[2],
            RelationKind.BELOW: -d[2],
        }[relation]

    # ego axes (also the fallback for world-frame horizontal relations:
    # a global "left" is undefined without a viewer): x right, y down,
    # z forward; front means closer to the camera.
    d = view.extrinsics.rotation.T @ delta_world
    return {
        RelationKind.RIGHT: d[0],
        RelationKind.LEFT: -d[0],
        RelationKind.BELOW: d[1],
        RelationKind.ABOVE: -d[1],
        RelationKind.BEHIND: d[2],
        RelationKind.FRONT: -d[2],
    }[relation]


def evaluate_relation(
    anchor: ObjectInstance,
    target: ObjectInstance,
    relation: RelationKind,
    frame: FrameKind,
    view: CameraView,
    margin: float = DEFAULT_MARGIN,
) -> bool:
    """True iff the target center lies beyond `margin` along the relation axis."""
    return bool(_signed_coordinate(anchor, target, relation, frame, view) > margin)


def extract_configuration(
    scene: Scene,
    view: CameraView,
    min_fraction: float = DEFAULT_MIN_FRACTION,
    margin: float = DEFAULT_MARGIN,
) -> list[SpatialRelation]:
    """All configuration relations for qualifying object pairs in one view.

    Qualifying objects are visible and uniquely labeled; both orderings of
    each pair are emitted. Output is sorted for determinism.
    """
    qualifying = unique_label_objects(visible_objects(scene, view, min_fraction))
    out = []
    for anchor in qualifying:
        for target in qualifying:
            if anchor.id == target.id:
                continue
            for relation in RelationKind:
                for frame in FrameKind:
                    out.append(
                        SpatialRelation(
                            view_id=view.view_id,
                            anchor_id=anchor.id,
                            target_id=target.id,
                            relation=relation,
                            frame=frame,
                            holds=evaluate_relation(anchor, target, relation, frame, view, margin),
                        )
                    )
    out.sort(key=lambda s: (s.anchor_id, s.target_id, s.relation.value, s.frame.value))
    return out
