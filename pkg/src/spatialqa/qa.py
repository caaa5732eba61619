"""QA pair rendering and per-view dataset assembly.

Questions come from a fixed template table shipped as package data so wording
changes are diffable. Every pair carries a provenance key; its id is a stable
hash of that key, which is what makes re-runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from importlib import resources

from . import fitting, relations, sampler
from .config import RunConfig
from .scene import (
    HORIZONTAL_RELATIONS,
    CameraView,
    FrameKind,
    ObjectInstance,
    RelationKind,
    Scene,
)

logger = logging.getLogger(__name__)

CATEGORIES = ("configuration", "context", "compatibility", "grounding")
BINARY_CATEGORIES = ("configuration", "compatibility")


class Unbalanceable(Warning):
    """A (category, frame) stratum has only one answer class."""


def _templates() -> dict:
    with resources.files("spatialqa.data").joinpath("templates.json").open() as f:
        return json.load(f)


_TEMPLATES = None


def templates() -> dict:
    global _TEMPLATES
    if _TEMPLATES is None:
        _TEMPLATES = _templates()
    return _TEMPLATES


@dataclass(frozen=True)
class QAPair:
    id: str
    scene_id: str
    view_id: str
    image_ref: str
    category: str
    frame: FrameKind | None
    question: str
    answer_type: str  # bool | points | box
    answer: object
    provenance: dict = field(compare=False)
    points_3d: tuple | None = None

    def to_record(self) -> dict:
        answer: dict = {"type": self.answer_type, "value": self.answer}
        if self.points_3d is not None:
            answer["points_3d"] = [list(p) for p in self.points_3d]
        if self.answer_type == "points":
            answer["value"] = [list(p) for p in self.answer]
        elif self.answer_type == "box":
            answer["value"] = list(self.answer)
        return {
            "id": self.id,
            "scene_id": self.scene_id,
            "view_id": self.view_id,
            "image_ref": self.image_ref,
            "category": self.category,
            "frame": self.frame.value if self.frame is not None else None,
            "question": self.question,
            "answer": answer,
            "provenance": self.provenance,
        }


def record_to_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def stable_id(provenance: dict) -> str:
    blob = json.dumps(provenance, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def derive_seed(seed: int, key: str) -> int:
    digest = hashlib.sha256(key.encode()).digest()
    return (seed ^ int.from_bytes(digest[:8], "big")) & (2**63 - 1)


def render_question(
    category: str,
    target_label: str | None,
    relation: RelationKind | None,
    anchor_label: str | None,
    frame: FrameKind | None,
    omit_frame_clause: bool = False,
) -> str:
    """Deterministic question text: one template per (category, relation, frame)."""
    t = templates()
    if category == "grounding":
        return t["questions"]["grounding"].format(label=target_label)
    clause = ""
    if frame is not None and not omit_frame_clause:
        clause = ", " + t["frame_clauses"][frame.value].format(anchor=anchor_label)
    return t["questions"][category].format(
        target=target_label,
        anchor=anchor_label,
        preposition=t["prepositions"][relation.value],
        frame_clause=clause,
    )


def make_grounding(
    scene: Scene, view: CameraView, min_fraction: float = relations.DEFAULT_MIN_FRACTION
) -> list[QAPair]:
    """Grounding pairs: pixel bounding boxes of visible unique-label objects,
    projected from the 3D boxes and clipped to the image bounds."""
    qualifying = relations.unique_label_objects(relations.visible_objects(scene, view, min_fraction))
    return _grounding_pairs(scene, view, qualifying)


def balance_binary(
    pairs: list[QAPair],
    target_ratio: float = 0.5,
    tolerance: float = 0.02,
    seed: int = 0,
) -> list[QAPair]:
    """Subsample the majority class per binary (category, frame) stratum so
    the true-fraction is within tolerance of target_ratio.

    Context and grounding pairs always pass through. A single-class stratum
    is left untouched and logged as unbalanceable.
    """
    import numpy as np

    keep = set(range(len(pairs)))
    strata: dict[tuple, list[int]] = {}
    for i, p in enumerate(pairs):
        if p.category in BINARY_CATEGORIES:
            strata.setdefault((p.category, p.frame), []).append(i)

    for (category, frame), idxs in sorted(strata.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        trues = [i for i in idxs if pairs[i].answer is True]
        falses = [i for i in idxs if pairs[i].answer is False]
        if not trues or not falses:
            # surfaced as a manifest warning by assemble_view; keep logs quiet
            logger.debug(
                "unbalanceable stratum (%s, %s): %d true / %d false",
                category,
                frame.value,
                len(trues),
                len(falses),
            )
            continue
        ratio = len(trues) / (len(trues) + len(falses))
        if abs(ratio - target_ratio) <= tolerance:
            continue
        if ratio > target_ratio:
            majority, minority = trues, falses
            want = round(target_ratio * len(falses) / (1.0 - target_ratio))
        else:
            majority, minority = falses, trues
            want = round((1.0 - target_ratio) * len(trues) / target_ratio)
        want = max(1, min(want, len(majority)))
        rng = np.random.default_rng(derive_seed(seed, f"balance/{category}/{frame.value}"))
        majority_sorted = sorted(majority, key=lambda i: pairs[i].id)
        chosen = rng.choice(len(majority_sorted), size=want, replace=False)
        dropped = set(majority_sorted) - {majority_sorted[int(c)] for c in chosen}
        keep -= dropped
    return [p for i, p in enumerate(pairs) if i in keep]


@dataclass
class ViewAssembly:
    pairs: list[QAPair]
    skips: list[dict]
    warnings: list[str]


def build_surface_grids(scene: Scene, config: RunConfig) -> dict[str, tuple[ObjectInstance, float, sampler.OccupancyGrid]]:
    """One occupancy grid per support surface, keyed by surface id.

    Grids are view-independent, so callers should build them once per scene
    and share them across views.
    """
    resolution = config.resolved_resolution()
    pad = max(0.5, config.resolved_region_depth())
    grids = {}
    for surface, z_top in sampler.support_surfaces(scene, config.surface_allowlist):
        grid = sampler.build_occupancy(
            scene, resolution, (z_top, z_top + config.z_band_height), pad=pad
        )
        grids[surface.id] = (surface, z_top, grid)
    return grids


def _configuration_pairs(scene, view, config, uniq) -> list[QAPair]:
    by_id = {o.id: o for o in uniq}
    out = []
    for rel in relations.extract_configuration(
        scene, view, config.min_fraction, config.relation_margin
    ):
        provenance = {
            "kind": "configuration",
            "scene_id": scene.scene_id,
            "view_id": view.view_id,
            "anchor_id": rel.anchor_id,
            "target_id": rel.target_id,
            "relation": rel.relation.value,
            "frame": rel.frame.value,
        }
        out.append(
            QAPair(
                id=stable_id(provenance),
                scene_id=scene.scene_id,
                view_id=view.view_id,
                image_ref=view.image_ref,
                category="configuration",
                frame=rel.frame,
                question=render_question(
                    "configuration",
                    by_id[rel.target_id].label,
                    rel.relation,
                    by_id[rel.anchor_id].label,
                    rel.frame,
                    config.omit_frame_clause,
                ),
                answer_type="bool",
                answer=rel.holds,
                provenance=provenance,
            )
        )
    return out


def _grounding_pairs(scene, view, uniq) -> list[QAPair]:
    from . import geometry
    from .scene import Vec3

    out = []
    intr = view.intrinsics
    for obj in sorted(uniq, key=lambda o: o.id):
        uvs = []
        for corner in obj.box.corners():
            uv = geometry.project(Vec3(corner[0], corner[1], corner[2]), view)
            if uv is not None:
                uvs.append(uv)
        if not uvs:
            continue
        u_min = max(0.0, min(u for u, _ in uvs))
        v_min = max(0.0, min(v for _, v in uvs))
        u_max = min(float(intr.width), max(u for u, _ in uvs))
        v_max = min(float(intr.height), max(v for _, v in uvs))
        if not (u_min < u_max and v_min < v_max):
            continue
        provenance = {
            "kind": "grounding",
            "scene_id": scene.scene_id,
            "view_id": view.view_id,
            "object_id": obj.id,
        }
        out.append(
            QAPair(
                id=stable_id(provenance),
                scene_id=scene.scene_id,
                view_id=view.view_id,
                image_ref=view.image_ref,
                category="grounding",
                frame=None,
                question=render_question("grounding", obj.label, None, None, None),
                answer_type="box",
                answer=(u_min, v_min, u_max, v_max),
                provenance=provenance,
            )
        )
    return out


def _space_candidates(scene, view, config, uniq, grids):
    """All (surface, anchor, relation, frame[, target]) question candidates.

    When a per-view cap is set, candidates are taken in stable-hash order so
    the capped subset mixes anchors, relations, and frames instead of
    exhausting the first anchor; without caps the order is irrelevant because
    output is sorted by id.
    """
    uniq_ids = {o.id for o in uniq}
    context: list[tuple] = []
    compat: list[tuple] = []
    for surface_id in sorted(grids):
        surface, z_top, grid = grids[surface_id]
        anchors = [
            o
            for o in sampler.objects_resting_on(scene, surface, z_top, config.rest_tolerance)
            if o.id in uniq_ids
        ]
        for anchor in sorted(anchors, key=lambda o: o.id):
            for relation in HORIZONTAL_RELATIONS:
                for frame in FrameKind:
                    key = (
                        f"{scene.scene_id}/{view.view_id}/{surface_id}/"
                        f"{anchor.id}/{relation.value}/{frame.value}"
                    )
                    context.append((key, surface_id, grid, anchor, relation, frame))
                    targets = [t for t in sorted(uniq, key=lambda o: o.id) if t.id != anchor.id]
                    if config.max_compat_targets:
                        targets = targets[: config.max_compat_targets]
                    for target in targets:
                        compat.append((key, surface_id, grid, anchor, relation, frame, target))
    if config.max_context_per_view:
        context.sort(key=lambda c: stable_id({"key": c[0]}))
    if config.max_compat_per_view:
        compat.sort(key=lambda c: stable_id({"key": c[0], "target": c[6].id}))
    return context, compat


def _space_pairs(scene, view, config, uniq, grids, seed) -> tuple[list[QAPair], list[dict]]:
    pairs: list[QAPair] = []
    skips: list[dict] = []
    by_id = {o.id: o for o in uniq}
    depth = config.resolved_region_depth()
    context_candidates, compat_candidates = _space_candidates(scene, view, config, uniq, grids)

    n_context = 0
    for key, surface_id, grid, anchor, relation, frame in context_candidates:
        if config.max_context_per_view and n_context >= config.max_context_per_view:
            break
        child_seed = derive_seed(seed, "context/" + key)
        provenance = {
            "kind": "context",
            "scene_id": scene.scene_id,
            "view_id": view.view_id,
            "surface_id": surface_id,
            "anchor_id": anchor.id,
            "relation": relation.value,
            "frame": frame.value,
            "seed": child_seed,
        }
        try:
            sample = sampler.sample_context(
                scene,
                view,
                anchor,
                relation,
                frame,
                grid,
                k=config.k_points,
                seed=child_seed,
                depth=depth,
                budget=config.budget,
                exclude_ids=frozenset({surface_id}),
            )
        except (sampler.NoFreeSpace, sampler.UnsupportedRelation) as exc:
            skips.append({"kind": "context", "key": key, "reason": str(exc)})
            continue
        n_context += 1
        pairs.append(
            QAPair(
                id=stable_id(provenance),
                scene_id=scene.scene_id,
                view_id=view.view_id,
                image_ref=view.image_ref,
                category="context",
                frame=frame,
                question=render_question(
                    "context", None, relation, anchor.label, frame, config.omit_frame_clause
                ),
                answer_type="points",
                answer=sample.points_2d,
                provenance=provenance,
                points_3d=tuple((p.x, p.y, p.z) for p in sample.points_3d),
            )
        )

    n_compat = 0
    for key, surface_id, grid, anchor, relation, frame, target in compat_candidates:
        if config.max_compat_per_view and n_compat >= config.max_compat_per_view:
            break
        query = fitting.FitQuery(
            anchor_id=anchor.id,
            target_id=target.id,
            relation=relation,
            frame=frame,
            margin=config.fit_margin,
        )
        provenance = {
            "kind": "compatibility",
            "scene_id": scene.scene_id,
            "view_id": view.view_id,
            "surface_id": surface_id,
            "anchor_id": anchor.id,
            "target_id": target.id,
            "relation": relation.value,
            "frame": frame.value,
            "margin": config.fit_margin,
        }
        try:
            ok = fitting.check_fit(
                scene, view, query, grid,
                rotation_steps=config.rotation_steps, depth=depth,
            )
        except fitting.RegionUndefined as exc:
            skips.append({"kind": "compatibility", "key": key + f"/{target.id}", "reason": str(exc)})
            continue
        n_compat += 1
        pairs.append(
            QAPair(
                id=stable_id(provenance),
                scene_id=scene.scene_id,
                view_id=view.view_id,
                image_ref=view.image_ref,
                category="compatibility",
                frame=frame,
                question=render_question(
                    "compatibility",
                    by_id[target.id].label,
                    relation,
                    anchor.label,
                    frame,
                    config.omit_frame_clause,
                ),
                answer_type="bool",
                answer=ok,
                provenance=provenance,
            )
        )
    return pairs, skips


def _stratified_cap(pairs: list[QAPair], cap: int) -> list[QAPair]:
    """Cap binary QA volume while preserving the per-stratum class balance."""
    binary = [p for p in pairs if p.category in BINARY_CATEGORIES]
    others = [p for p in pairs if p.category not in BINARY_CATEGORIES]
    if cap <= 0 or len(binary) <= cap:
        return pairs
    strata: dict[tuple, list[QAPair]] = {}
    for p in binary:
        strata.setdefault((p.category, p.frame.value), []).append(p)
    per_stratum = max(2, cap // len(strata))
    half = per_stratum // 2
    kept: list[QAPair] = []
    for key in sorted(strata):
        members = sorted(strata[key], key=lambda p: p.id)
        kept.extend([p for p in members if p.answer is True][:half])
        kept.extend([p for p in members if p.answer is False][:half])
    return others + kept


def assemble_view(
    scene: Scene,
    view: CameraView,
    config: RunConfig,
    seed: int,
    grids=None,
) -> ViewAssembly:
    """Full per-view assembly with skip/warning reporting for the manifest."""
    if grids is None:
        grids = build_surface_grids(scene, config)
    uniq = relations.unique_label_objects(
        relations.visible_objects(scene, view, config.min_fraction)
    )

    pairs = _configuration_pairs(scene, view, config, uniq)
    space_pairs, skips = _space_pairs(scene, view, config, uniq, grids, seed)
    pairs.extend(space_pairs)
    pairs.extend(_grounding_pairs(scene, view, uniq))

    warnings = []
    strata: dict[tuple, set] = {}
    for p in pairs:
        if p.category in BINARY_CATEGORIES:
            strata.setdefault((p.category, p.frame.value), set()).add(p.answer)
    for key in sorted(strata):
        if len(strata[key]) < 2:
            warnings.append(f"unbalanceable stratum {key[0]}/{key[1]} in view {view.view_id}")

    view_seed = derive_seed(seed, f"balance/{scene.scene_id}/{view.view_id}")
    pairs = balance_binary(pairs, config.balance_ratio, config.balance_tolerance, view_seed)
    pairs = _stratified_cap(pairs, config.max_binary_pairs_per_view)
    pairs.sort(key=lambda p: p.id)
    return ViewAssembly(pairs=pairs, skips=skips, warnings=warnings)


def assemble(scene: Scene, view: CameraView, config: RunConfig, seed: int) -> list[QAPair]:
    """Generate all QA pairs for one view, balanced and sorted by id."""
    return assemble_view(scene, view, config, seed).pairs
