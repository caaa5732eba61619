#!/usr/bin/env python3
"""Build the committed fixture scenes (s2..s5) and print health diagnostics.

Run from the repo root:  python3 scripts/make_fixtures.py [--check-only]

The fixture corpus backs the end-to-end golden files, so each view should see
most objects, every binary stratum should carry both classes (s1 is the known
exception: its only compatibility target is the table, which never fits), and
context sampling should succeed in all three frames.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from spatialqa.config import RunConfig
from spatialqa.qa import assemble_view, build_surface_grids
from spatialqa.relations import unique_label_objects, visible_objects
from spatialqa.scene import (
    CameraIntrinsics,
    CameraView,
    ObjectInstance,
    OrientedBox,
    Pose,
    Scene,
    Vec3,
    save_scene,
    validate_scene,
)

INTR = CameraIntrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)


def yaw(deg: float) -> np.ndarray:
    t = math.radians(deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def look_at(eye, target) -> np.ndarray:
    eye = np.asarray(eye, float)
    forward = np.asarray(target, float) - eye
    forward /= np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.column_stack([right, down, forward])


def obj(oid, label, center, half, heading=None):
    return ObjectInstance(
        id=oid,
        label=label,
        box=OrientedBox(Vec3(*center), Vec3(*half), np.eye(3) if heading is None else heading),
    )


def view(vid, scene_id, eye, target):
    return CameraView(
        view_id=vid,
        image_ref=f"images/{scene_id}_{vid}.png",
        intrinsics=INTR,
        extrinsics=Pose(look_at(eye, target), Vec3(*[float(v) for v in eye])),
    )


def s2_living_room() -> Scene:
    sid = "s2_living_room"
    objects = [
        obj("floor_1", "floor", (0.0, 0.0, 0.05), (3.0, 3.0, 0.05)),
        obj("table_1", "table", (0.0, 0.0, 0.45), (0.6, 0.4, 0.35)),
        obj("sofa_1", "sofa", (-1.8, 1.2, 0.5), (1.0, 0.45, 0.4), yaw(270)),
        obj("chair_1", "chair", (1.4, 1.0, 0.35), (0.25, 0.25, 0.25), yaw(180)),
        obj("lamp_1", "lamp", (2.2, -1.6, 0.85), (0.15, 0.15, 0.75)),
        obj("mug_1", "mug", (0.2, 0.1, 0.85), (0.04, 0.04, 0.05)),
        obj("plate_1", "plate", (-0.3, -0.1, 0.825), (0.12, 0.12, 0.025)),
        obj("book_1", "book", (0.35, -0.25, 0.82), (0.1, 0.07, 0.02)),
    ]
    views = [
        view("v0", sid, (2.8, -2.8, 2.1), (0.0, 0.0, 0.5)),
        view("v1", sid, (-2.6, -2.4, 2.0), (0.0, 0.3, 0.5)),
    ]
    return Scene(sid, "z", tuple(objects), tuple(views))


def s3_office() -> Scene:
    sid = "s3_office"
    objects = [
        obj("floor_1", "floor", (0.0, 0.0, 0.05), (2.5, 2.5, 0.05)),
        obj("desk_1", "desk", (0.5, 0.0, 0.475), (0.7, 0.35, 0.375), yaw(20)),
        obj("shelf_1", "shelf", (-1.8, 1.6, 0.95), (0.4, 0.15, 0.85), yaw(90)),
        obj("chair_1", "chair", (0.4, -1.1, 0.35), (0.25, 0.25, 0.25), yaw(45)),
        obj("monitor_1", "monitor", (0.45, 0.05, 1.0), (0.25, 0.05, 0.15), yaw(20)),
        obj("keyboard_1", "keyboard", (0.5, -0.2, 0.87), (0.18, 0.06, 0.02), yaw(20)),
        obj("bin_1", "bin", (1.7, -1.5, 0.3), (0.15, 0.15, 0.2)),
        obj("crate_1", "crate", (-1.8, 1.55, 1.9), (0.1, 0.1, 0.1)),
    ]
    views = [
        view("v0", sid, (2.4, -2.3, 1.9), (-0.2, 0.2, 0.8)),
        view("v1", sid, (-2.2, -2.2, 2.1), (0.2, 0.3, 0.8)),
    ]
    return Scene(sid, "z", tuple(objects), tuple(views))


def s4_kitchen() -> Scene:
    sid = "s4_kitchen"
    objects = [
        obj("floor_1", "floor", (0.0, 0.0, 0.05), (2.5, 2.5, 0.05)),
        obj("counter_1", "counter", (-1.6, 0.0, 0.5), (0.9, 0.3, 0.4), yaw(90)),
        obj("cabinet_1", "cabinet", (1.8, 1.6, 0.6), (0.3, 0.25, 0.5)),
        obj("kettle_1", "kettle", (-1.55, 0.4, 1.0), (0.1, 0.1, 0.1)),
        obj("bowl_1", "bowl", (-1.65, -0.35, 0.95), (0.12, 0.12, 0.05)),
        obj("pan_1", "pan", (1.8, 1.6, 1.175), (0.14, 0.14, 0.075)),
        obj("stool_1", "stool", (0.3, -1.2, 0.375), (0.2, 0.2, 0.275)),
        # duplicate label: both chairs drop out of unique-label question sets
        obj("chair_1", "chair", (1.2, -0.9, 0.4), (0.22, 0.22, 0.3), yaw(315)),
        obj("chair_2", "chair", (0.6, 1.4, 0.4), (0.22, 0.22, 0.3), yaw(135)),
    ]
    views = [
        view("v0", sid, (2.3, -2.4, 2.0), (-0.4, 0.3, 0.7)),
        view("v1", sid, (-2.4, -2.3, 2.1), (0.3, 0.4, 0.7)),
    ]
    return Scene(sid, "z", tuple(objects), tuple(views))


def s5_studio() -> Scene:
    sid = "s5_studio"
    objects = [
        obj("floor_1", "floor", (0.0, 0.0, 0.05), (2.5, 2.5, 0.05)),
        obj("bed_1", "bed", (-1.4, -1.2, 0.35), (1.0, 0.7, 0.25)),
        obj("table_1", "table", (1.4, 0.8, 0.45), (0.5, 0.35, 0.35)),
        obj("pillow_1", "pillow", (-1.7, -1.4, 0.675), (0.2, 0.15, 0.075)),
        obj("laptop_1", "laptop", (1.35, 0.75, 0.825), (0.15, 0.1, 0.025), yaw(10)),
        obj("lamp_1", "lamp", (1.6, 1.05, 0.95), (0.07, 0.07, 0.15)),
        obj("crate_1", "crate", (0.8, -1.4, 0.35), (0.25, 0.25, 0.25), yaw(45)),
        obj("ball_1", "ball", (-0.2, 0.6, 0.25), (0.15, 0.15, 0.15)),
    ]
    views = [
        view("v0", sid, (2.4, -2.5, 2.2), (0.0, 0.0, 0.5)),
        view("v1", sid, (-2.5, 2.3, 2.0), (0.2, -0.3, 0.5)),
    ]
    return Scene(sid, "z", tuple(objects), tuple(views))


def diagnose(scene: Scene, config: RunConfig) -> list[str]:
    problems = []
    grids = build_surface_grids(scene, config)
    for v in scene.views:
        vis = visible_objects(scene, v, config.min_fraction)
        uniq = unique_label_objects(vis)
        print(f"  {scene.scene_id}/{v.view_id}: visible={sorted(o.id for o in vis)}")
        hidden = {o.id for o in scene.objects} - {o.id for o in vis} - {"floor_1"}
        dup_labels = {o.id for o in vis} - {o.id for o in uniq}
        if hidden - dup_labels:
            print(f"    note: not visible: {sorted(hidden - dup_labels)}")
        assembly = assemble_view(scene, v, config, config.seed, grids=grids)
        counts = {}
        classes: dict[tuple, set] = {}
        for p in assembly.pairs:
            counts[p.category] = counts.get(p.category, 0) + 1
            if p.category in ("configuration", "compatibility"):
                classes.setdefault((p.category, p.frame.value), set()).add(p.answer)
        print(f"    counts={counts} skips={len(assembly.skips)} warnings={assembly.warnings}")
        for key, vals in sorted(classes.items()):
            if len(vals) < 2:
                problems.append(f"{scene.scene_id}/{v.view_id}: single-class stratum {key}")
        for cat in ("configuration", "context", "compatibility", "grounding"):
            if counts.get(cat, 0) == 0:
                problems.append(f"{scene.scene_id}/{v.view_id}: no {cat} pairs")
        frames = {p.frame.value for p in assembly.pairs if p.category == "context"}
        if frames != {"ego", "world", "object"}:
            problems.append(f"{scene.scene_id}/{v.view_id}: context frames {frames}")
    return problems


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--check-only", action="store_true")
    args = parser.parse_args()

    config = RunConfig(environment="indoor", seed=2026, max_compat_targets=2)
    out_dir = REPO / "tests" / "fixtures" / "scenes"
    problems = []
    for scene in (s2_living_room(), s3_office(), s4_kitchen(), s5_studio()):
        violations = validate_scene(scene)
        if violations:
            problems.extend(f"{scene.scene_id}: {v}" for v in violations)
            continue
        problems.extend(diagnose(scene, config))
        if not args.check_only:
            save_scene(scene, out_dir / f"{scene.scene_id}.json")
            print(f"  wrote {scene.scene_id}.json")
    if problems:
        print("\nPROBLEMS:")
        for p in problems:
            print(" -", p)
        return 1
    print("\nall fixture scenes healthy")
    return 0


if __name__ == "__main__":
    sys.exit(main())
