"""Procedural room scenes for the throughput smoke test: a floor, two work
surfaces with small items on top, larger furniture on the floor, five views."""

from __future__ import annotations

import numpy as np

import genutil
from spatialqa.scene import Scene, save_scene

TABLE_ITEMS = [
    ("mug", (0.04, 0.04, 0.05)),
    ("plate", (0.12, 0.12, 0.025)),
    ("book", (0.1, 0.07, 0.02)),
    ("bottle", (0.04, 0.04, 0.12)),
    ("phone", (0.04, 0.08, 0.01)),
    ("cup", (0.05, 0.05, 0.06)),
    ("bowl", (0.1, 0.1, 0.05)),
]
FLOOR_ITEMS = [
    ("sofa", (1.0, 0.45, 0.4)),
    ("chair", (0.25, 0.25, 0.3)),
    ("stool", (0.2, 0.2, 0.25)),
    ("lamp", (0.15, 0.15, 0.7)),
    ("bin", (0.15, 0.15, 0.25)),
    ("crate", (0.3, 0.3, 0.3)),
    ("ottoman", (0.35, 0.35, 0.2)),
    ("plant", (0.2, 0.2, 0.5)),
]


def smoke_scene(index: int, seed: int) -> Scene:
    rng = np.random.default_rng(seed * 100_003 + index)
    sid = f"smoke_{index:04d}"
    objects = [genutil.make_object("floor_1", "floor", (0.0, 0.0, 0.05), (4.0, 4.0, 0.05))]

    surfaces = [
        ("table_1", "table", (-1.5, -1.0), (0.6, 0.4, 0.35), 0.8),
        ("desk_1", "desk", (1.5, 1.2), (0.7, 0.35, 0.375), 0.85),
    ]
    for oid, label, (cx, cy), half, _ in surfaces:
        jx, jy = rng.uniform(-0.2, 0.2, 2)
        theta = float(rng.choice([0.0, np.pi / 2, np.pi / 4, np.pi / 6]))
        heading = genutil.oracles.yaw_rotation(theta) if theta else None
        objects.append(
            genutil.make_object(oid, label, (cx + jx, cy + jy, 0.1 + half[2]), half, heading)
        )

    # small items on each surface, inside the footprint with a safety margin
    item_pool = list(TABLE_ITEMS)
    rng.shuffle(item_pool)
    item_idx = 0
    for s_i, (oid, label, (cx, cy), half, z_top) in enumerate(surfaces):
        surf = objects[1 + s_i]
        sx, sy = surf.box.center.x, surf.box.center.y
        n_items = int(rng.integers(3, 5))
        for k in range(n_items):
            name, item_half = item_pool[item_idx % len(item_pool)]
            item_idx += 1
            margin_x = half[0] - item_half[0] - 0.08
            margin_y = half[1] - item_half[1] - 0.08
            ox = float(rng.uniform(-margin_x, margin_x))
            oy = float(rng.uniform(-margin_y, margin_y))
            objects.append(
                genutil.make_object(
                    f"{name}_{s_i}{k}", name,
                    (sx + ox, sy + oy, z_top + item_half[2]),
                    item_half,
                )
            )

    # furniture on the floor, on a ring clear of the surfaces
    floor_pool = list(FLOOR_ITEMS)
    rng.shuffle(floor_pool)
    n_floor = int(rng.integers(6, 9))
    for k in range(n_floor):
        name, half = floor_pool[k % len(floor_pool)]
        angle = 2 * np.pi * (k + rng.uniform(0.0, 0.6)) / n_floor
        radius = float(rng.uniform(2.4, 3.1))
        cx = radius * np.cos(angle)
        cy = radius * np.sin(angle)
        theta = float(rng.uniform(0, 2 * np.pi))
        objects.append(
            genutil.make_object(
                f"{name}_f{k}", name,
                (cx, cy, 0.1 + half[2]),
                half,
                genutil.oracles.yaw_rotation(theta),
            )
        )

    views = []
    corners = [(3.4, 3.4), (-3.4, 3.4), (-3.4, -3.4), (3.4, -3.4)]
    for vi, (ex, ey) in enumerate(corners):
        views.append(genutil.make_view(f"v{vi}", (ex, ey, 2.3), (0.0, 0.0, 0.5), image_ref=f"images/{sid}_v{vi}.png"))
    views.append(genutil.make_view("v4", (0.0, -3.6, 3.2), (0.0, 0.2, 0.3), image_ref=f"images/{sid}_v4.png"))
    return genutil.make_scene(sid, objects, views)


def write_smoke_corpus(out_dir, n_scenes: int, seed: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for i in range(n_scenes):
        scene = smoke_scene(i, seed)
        save_scene(scene, out_dir / f"{scene.scene_id}.json")
