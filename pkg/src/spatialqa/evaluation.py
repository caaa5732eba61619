"""Scores prediction files against generated QA files.

Binary answers are exact-match; point answers are correct when the predicted
points lie within the convex hull of the gold point set (boundary inclusive,
all points by default); grounding boxes score by IoU >= 0.5. Results are
stratified by (category, frame).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import geometry
from .scene import ParseError

# Degenerate gold regions (fewer than 3 distinct points, or collinear) fall
# back to a pixel-proximity check.
FALLBACK_RADIUS_PX = 10.0
GROUNDING_IOU_THRESHOLD = 0.5


class MalformedPrediction(Exception):
    """Prediction value has the wrong shape or non-numeric/negative entries."""


class DuplicatePredictionId(Exception):
    pass


def score_binary(pred: bool, gold: bool) -> bool:
    return pred is gold or pred == gold


def _check_points(points) -> list[tuple[float, float]]:
    if not isinstance(points, (list, tuple)):
        raise MalformedPrediction("points answer must be a list of [u, v] pairs")
    out = []
    for p in points:
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise MalformedPrediction(f"bad point entry: {p!r}")
        try:
            u, v = float(p[0]), float(p[1])
        except (TypeError, ValueError) as exc:
            raise MalformedPrediction(f"non-numeric point entry: {p!r}") from exc
        if not (math.isfinite(u) and math.isfinite(v)) or u < 0 or v < 0:
            raise MalformedPrediction(f"non-finite or negative coordinate: {p!r}")
        out.append((u, v))
    return out


def score_points(pred, gold_region, any_point: bool = False) -> bool:
    """Correct iff every predicted point lies in the hull of the gold region.

    `any_point` relaxes the rule to at least one point. Empty predictions are
    incorrect; malformed ones raise MalformedPrediction.
    """
    points = _check_points(pred)
    if not points:
        return False
    gold = [(float(u), float(v)) for u, v in gold_region]
    try:
        hull = geometry.convex_hull(gold)
    except geometry.DegenerateInput:
        def near(p):
            return any(math.dist(p, g) <= FALLBACK_RADIUS_PX for g in gold)
        hits = [near(p) for p in points]
    else:
        hits = [geometry.point_in_hull(p, hull) for p in points]
    return any(hits) if any_point else all(hits)


def _score_box(pred, gold_box) -> bool:
    if not isinstance(pred, (list, tuple)) or len(pred) != 4:
        raise MalformedPrediction("box answer must be [u_min, v_min, u_max, v_max]")
    try:
        p = [float(x) for x in pred]
    except (TypeError, ValueError) as exc:
        raise MalformedPrediction("non-numeric box entry") from exc
    if not all(math.isfinite(x) for x in p) or p[0] >= p[2] or p[1] >= p[3]:
        raise MalformedPrediction("degenerate or non-finite box")
    g = [float(x) for x in gold_box]
    ix = max(0.0, min(p[2], g[2]) - max(p[0], g[0]))
    iy = max(0.0, min(p[3], g[3]) - max(p[1], g[1]))
    inter = ix * iy
    union = (p[2] - p[0]) * (p[3] - p[1]) + (g[2] - g[0]) * (g[3] - g[1]) - inter
    return union > 0 and inter / union >= GROUNDING_IOU_THRESHOLD


@dataclass
class EvalReport:
    strata: dict = field(default_factory=dict)  # (category, frame) -> [n, correct]
    missing: list = field(default_factory=list)
    malformed: list = field(default_factory=list)
    unmatched: list = field(default_factory=list)
    environment: str = "all"

    def add(self, category: str, frame, correct: bool) -> None:
        key = (category, frame if frame is not None else "-")
        n, c = self.strata.get(key, (0, 0))
        self.strata[key] = (n + 1, c + int(correct))

    @property
    def total(self) -> tuple[int, int]:
        n = sum(v[0] for v in self.strata.values())
        c = sum(v[1] for v in self.strata.values())
        return n, c

    def accuracy(self, category: str | None = None, frame=None) -> float:
        n = c = 0
        for (cat, fr), (sn, sc) in self.strata.items():
            if category is not None and cat != category:
                continue
            if frame is not None and fr != frame:
                continue
            n += sn
            c += sc
        return c / n if n else 0.0

    def to_dict(self) -> dict:
        strata = [
            {
                "category": cat,
                "frame": fr,
                "n": n,
                "correct": c,
                "accuracy": c / n if n else 0.0,
            }
            for (cat, fr), (n, c) in sorted(self.strata.items())
        ]
        n, c = self.total
        return {
            "environment": self.environment,
            "strata": strata,
            "overall": {"n": n, "correct": c, "accuracy": c / n if n else 0.0},
            "missing_prediction_ids": sorted(self.missing),
            "malformed_prediction_ids": sorted(self.malformed),
            "unmatched_prediction_ids": sorted(self.unmatched),
        }

    def to_text(self) -> str:
        """Aligned table, exactly one header line plus one line per non-empty
        stratum."""
        rows = [("category", "frame", "n", "accuracy")]
        for (cat, fr), (n, c) in sorted(self.strata.items()):
            if n:
                rows.append((cat, fr, str(n), f"{c / n:.4f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(val.ljust(widths[i]) for i, val in enumerate(row)).rstrip() for row in rows]
        return "\n".join(lines) + "\n"


def _read_jsonl(path: Path, what: str) -> list[dict]:
    records = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid {what} JSON: {exc}") from exc
    return records


def load_predictions(path) -> dict[str, object]:
    """Prediction JSONL -> {id: value}; duplicate ids are an error."""
    path = Path(path)
    out: dict[str, object] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid prediction JSON: {exc}") from exc
        if not isinstance(rec, dict) or "id" not in rec or "value" not in rec:
            raise ParseError(f"{path}:{lineno}: prediction needs 'id' and 'value'")
        pid = str(rec["id"])
        if pid in out:
            raise DuplicatePredictionId(f"{path}:{lineno}: duplicate prediction id '{pid}'")
        out[pid] = rec["value"]
    return out


def evaluate_records(
    gold_records: list[dict], predictions: dict[str, object], any_point: bool = False
) -> EvalReport:
    """Score in-memory gold records against a prediction map."""
    report = EvalReport()
    gold_ids = set()
    for rec in gold_records:
        gold_ids.add(rec["id"])
        category = rec["category"]
        frame = rec["frame"]
        answer = rec["answer"]
        if rec["id"] not in predictions:
            report.missing.append(rec["id"])
            report.add(category, frame, False)
            continue
        value = predictions[rec["id"]]
        try:
            if answer["type"] == "bool":
                if not isinstance(value, bool):
                    raise MalformedPrediction("expected a boolean")
                correct = score_binary(value, answer["value"])
            elif answer["type"] == "points":
                correct = score_points(value, answer["value"], any_point)
            elif answer["type"] == "box":
                correct = _score_box(value, answer["value"])
            else:
                raise MalformedPrediction(f"unknown answer type {answer['type']!r}")
        except MalformedPrediction:
            report.malformed.append(rec["id"])
            correct = False
        report.add(category, frame, correct)
    report.unmatched = [pid for pid in predictions if pid not in gold_ids]
    return report


def evaluate(gold_path, pred_path, any_point: bool = False) -> EvalReport:
    """Score a prediction JSONL against a gold QA JSONL.

    Missing predictions count as incorrect and are listed in the report;
    every stratum n sums to the gold record count. The environment tag is
    taken from a run manifest sitting beside the gold file, when present.
    """
    gold_path = Path(gold_path)
    gold = _read_jsonl(gold_path, "gold")
    predictions = load_predictions(pred_path)
    report = evaluate_records(gold, predictions, any_point)
    manifest_path = gold_path.parent / "manifest.json"
    if manifest_path.is_file():
        try:
            report.environment = json.loads(manifest_path.read_text())["config"]["environment"]
        except (json.JSONDecodeError, KeyError, TypeError):
            pass
    return report
