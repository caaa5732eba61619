"""Dataset opening, schema validation, filtered iteration, and point overlay."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

CATEGORIES = ("configuration", "context", "compatibility", "grounding")
FRAMES = ("ego", "world", "object")
RECORD_KEYS = {
    "id", "scene_id", "view_id", "image_ref", "category", "frame",
    "question", "answer", "provenance",
}


class SchemaError(Exception):
    """Dataset violates the generator's published schema; the message names
    the offending file and line."""


def _fail(path: Path, lineno: int, reason: str):
    raise SchemaError(f"{path}:{lineno}: {reason}")


def _check_number(value, what: str, path: Path, lineno: int) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, lineno, f"{what} must be a number, got {value!r}")


def validate_record(record: dict, path: Path, lineno: int) -> None:
    if not isinstance(record, dict):
        _fail(path, lineno, "record must be a JSON object")
    missing = RECORD_KEYS - record.keys()
    if missing:
        _fail(path, lineno, f"missing keys: {', '.join(sorted(missing))}")
    category = record["category"]
    if category not in CATEGORIES:
        _fail(path, lineno, f"unknown category {category!r}")
    frame = record["frame"]
    if category == "grounding":
        if frame is not None:
            _fail(path, lineno, "grounding records carry no frame")
    elif frame not in FRAMES:
        _fail(path, lineno, f"frame must be one of {FRAMES}, got {frame!r}")
    if not isinstance(record["question"], str) or not record["question"]:
        _fail(path, lineno, "question must be a non-empty string")

    answer = record["answer"]
    if not isinstance(answer, dict) or "type" not in answer or "value" not in answer:
        _fail(path, lineno, "answer must be an object with 'type' and 'value'")
    kind = answer["type"]
    value = answer["value"]
    if category in ("configuration", "compatibility"):
        if kind != "bool" or not isinstance(value, bool):
            _fail(path, lineno, f"{category} answers must be booleans")
    elif category == "context":
        if kind != "points" or not isinstance(value, list) or not value:
            _fail(path, lineno, "context answers must be a non-empty point list")
        for pt in value:
            if not isinstance(pt, list) or len(pt) != 2:
                _fail(path, lineno, f"bad point {pt!r}")
            for c in pt:
                _check_number(c, "point coordinate", path, lineno)
        points_3d = answer.get("points_3d")
        if points_3d is not None and len(points_3d) != len(value):
            _fail(path, lineno, "points_3d length differs from 2D points")
    elif category == "grounding":
        if kind != "box" or not isinstance(value, list) or len(value) != 4:
            _fail(path, lineno, "grounding answers must be a 4-element box")
        for c in value:
            _check_number(c, "box coordinate", path, lineno)
        if not (value[0] < value[2] and value[1] < value[3]):
            _fail(path, lineno, "box must have positive width and height")


@dataclass
class DatasetHandle:
    """Validated dataset: manifest plus lazily-iterated QA records."""

    root: Path
    manifest: dict
    qa_path: Path
    count: int

    def __iter__(self) -> Iterator[dict]:
        with self.qa_path.open() as f:
            for line in f:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def __len__(self) -> int:
        return self.count


def open_dataset(path) -> DatasetHandle:
    """Open a generated dataset directory, validating the whole split.

    The directory must contain manifest.json and the QA JSONL it names;
    every record is schema-checked, ids must be unique, and the record count
    must equal the manifest's total.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise SchemaError(f"{root}: manifest not found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{manifest_path}: invalid JSON: {exc}") from exc
    for key in ("qa_file", "total_pairs"):
        if key not in manifest:
            raise SchemaError(f"{manifest_path}: manifest missing '{key}'")

    qa_path = root / manifest["qa_file"]
    if not qa_path.is_file():
        raise SchemaError(f"{root}: QA file '{manifest['qa_file']}' not found")

    seen: set[str] = set()
    count = 0
    with qa_path.open() as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{qa_path}:{lineno}: invalid JSON: {exc}") from exc
            validate_record(record, qa_path, lineno)
            rid = record["id"]
            if rid in seen:
                _fail(qa_path, lineno, f"duplicate id {rid!r}")
            seen.add(rid)
            count += 1
    if count != manifest["total_pairs"]:
        raise SchemaError(
            f"{qa_path}: {count} records but manifest claims {manifest['total_pairs']}"
        )
    return DatasetHandle(root=root, manifest=manifest, qa_path=qa_path, count=count)


def filter_records(handle: DatasetHandle, category: str | None = None, frame: str | None = None) -> Iterator[dict]:
    """Yield records matching the category/frame filters, in file order."""
    if category is not None and category not in CATEGORIES:
        raise ValueError(f"category must be one of {CATEGORIES}")
    if frame is not None and frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES}")
    for record in handle:
        if category is not None and record["category"] != category:
            continue
        if frame is not None and record["frame"] != frame:
            continue
        yield record


def overlay_points(record: dict, image_path, out_path, radius: int = 6) -> None:
    """Draw a context record's answer points onto an image for spot checks.

    Requires Pillow (the 'overlay' extra).
    """
    try:
        from PIL import Image, ImageDraw
    except ImportError as exc:  # pragma: no cover - depends on extras
        raise ImportError("overlay_points needs Pillow; install spatialqa-loader[overlay]") from exc
    if record["answer"]["type"] != "points":
        raise ValueError("overlay_points expects a context (points) record")
    image = Image.open(image_path).convert("RGB")
    draw = ImageDraw.Draw(image)
    for u, v in record["answer"]["value"]:
        draw.ellipse(
            [u - radius, v - radius, u + radius, v + radius],
            outline=(255, 0, 0),
            width=2,
        )
    image.save(out_path)
