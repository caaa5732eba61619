"""Command-line entry points: generate, eval, validate, inspect.

Generation runs scene-by-scene (optionally across a worker pool; scheduling
cannot change the output because everything is merged through a final
deterministic sort) and writes one JSONL per scene, a combined split file,
and a manifest echoing the resolved config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, evaluation, qa, sampler, scene as scene_mod
from .config import ConfigError, RunConfig, load_config
from .scene import ParseError, ValidationError

logger = logging.getLogger(__name__)


def _discover_scenes(input_dirs: list[str]) -> list[Path]:
    paths: list[Path] = []
    for d in input_dirs:
        paths.extend(sorted(Path(d).glob("*.json")))
    return paths


def process_scene(path_str: str, config: RunConfig) -> dict:
    """Generate all QA for one scene file; failures come back as records,
    never exceptions, so one bad scene cannot poison a run."""
    path = Path(path_str)
    try:
        scene = scene_mod.load_scene(path)
        grids = qa.build_surface_grids(scene, config)
        records: list[dict] = []
        skips: list[dict] = []
        warnings: list[str] = []
        for view in scene.views:
            assembly = qa.assemble_view(scene, view, config, config.seed, grids=grids)
            records.extend(p.to_record() for p in assembly.pairs)
            skips.extend(assembly.skips)
            warnings.extend(assembly.warnings)
        records.sort(key=lambda r: r["id"])
        by_category: dict[str, int] = {}
        for r in records:
            by_category[r["category"]] = by_category.get(r["category"], 0) + 1
        return {
            "scene_id": scene.scene_id,
            "records": records,
            "skips": skips,
            "warnings": warnings,
            "by_category": by_category,
            "views": len(scene.views),
        }
    except Exception as exc:  # noqa: BLE001 - scene-level isolation by design
        return {"scene_id": None, "path": str(path), "error": f"{type(exc).__name__}: {exc}"}


def _worker_count(config: RunConfig, n_scenes: int) -> int:
    env = os.environ.get("SPATIALQA_WORKERS")
    if env:
        return max(1, int(env))
    if config.workers:
        return config.workers
    return max(1, min(n_scenes, os.cpu_count() or 1))


def run_generate(config: RunConfig) -> int:
    start = time.monotonic()
    scene_paths = _discover_scenes(config.input_dirs)
    if not scene_paths:
        print("error: no scenes found", file=sys.stderr)
        return 2

    workers = _worker_count(config, len(scene_paths))
    if workers > 1 and len(scene_paths) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(process_scene, [str(p) for p in scene_paths], [config] * len(scene_paths)))
    else:
        results = [process_scene(str(p), config) for p in scene_paths]

    out_dir = Path(config.output_dir)
    (out_dir / "scenes").mkdir(parents=True, exist_ok=True)

    failures = [r for r in results if r.get("error")]
    succeeded = [r for r in results if not r.get("error")]
    all_records: list[dict] = []
    manifest_scenes: dict[str, dict] = {}
    skips: list[dict] = []
    warnings: list[str] = []
    for r in sorted(succeeded, key=lambda r: r["scene_id"]):
        lines = [qa.record_to_line(rec) for rec in r["records"]]
        (out_dir / "scenes" / f"{r['scene_id']}.jsonl").write_text(
            "".join(line + "\n" for line in lines)
        )
        all_records.extend(r["records"])
        manifest_scenes[r["scene_id"]] = {
            "n": len(r["records"]),
            "by_category": r["by_category"],
            "views": r["views"],
        }
        skips.extend(r["skips"])
        warnings.extend(r["warnings"])

    all_records.sort(key=lambda rec: (rec["scene_id"], rec["id"]))
    (out_dir / "qa.jsonl").write_text(
        "".join(qa.record_to_line(rec) + "\n" for rec in all_records)
    )

    by_category: dict[str, int] = {}
    for rec in all_records:
        by_category[rec["category"]] = by_category.get(rec["category"], 0) + 1
    manifest = {
        "tool": "spatialqa",
        "version": __version__,
        "seed": config.seed,
        "config": config.to_dict(),
        "qa_file": "qa.jsonl",
        "total_pairs": len(all_records),
        "counts_by_category": by_category,
        "scenes": manifest_scenes,
        "skips": skips,
        "warnings": warnings,
        "failures": [{"path": f["path"], "error": f["error"]} for f in failures],
        "wall_clock_sec": round(time.monotonic() - start, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    for f in failures:
        logger.error("scene failed: %s: %s", f["path"], f["error"])
    print(
        f"generated {len(all_records)} QA pairs from {len(succeeded)}/{len(scene_paths)} scenes "
        f"-> {out_dir}"
    )
    return 0 if not failures else 1


def run_eval(gold_path, pred_path, report_path, any_point: bool = False) -> int:
    try:
        report = evaluation.evaluate(gold_path, pred_path, any_point=any_point)
    except (ParseError, evaluation.DuplicatePredictionId) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    text = report.to_text()
    report_path.with_suffix(".txt").write_text(text)
    print(text, end="")
    return 0


def run_validate(scene_path) -> int:
    try:
        scene = scene_mod.load_scene(scene_path)
    except ValidationError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    violations = scene_mod.validate_scene(scene)
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 1
    print(f"ok: {scene.scene_id} ({len(scene.objects)} objects, {len(scene.views)} views)")
    return 0


def run_inspect_grid(scene_path, out_path, resolution: float, z_min: float, z_max: float) -> int:
    try:
        scene = scene_mod.load_scene(scene_path)
        grid = sampler.build_occupancy(scene, resolution, (z_min, z_max))
    except (ParseError, ValidationError, sampler.GridTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    grid.to_pgm(out_path)
    if grid.warning:
        print(f"warning: {grid.warning}", file=sys.stderr)
    print(f"wrote {grid.nx}x{grid.ny} grid to {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialqa", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spatialqa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate QA JSONL from scene files")
    gen.add_argument("--config", help="TOML or JSON config file")
    gen.add_argument("--input", action="append", default=None, help="scene directory (repeatable)")
    gen.add_argument("--out", default=None, help="output directory")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--environment", choices=("indoor", "tabletop"), default=None)
    gen.add_argument("--workers", type=int, default=None)
    gen.add_argument("--omit-frame-clause", action="store_true", default=None)

    ev = sub.add_parser("eval", help="score predictions against gold QA")
    ev.add_argument("--gold", required=True)
    ev.add_argument("--pred", required=True)
    ev.add_argument("--report", required=True, help="report JSON path (.txt written alongside)")
    ev.add_argument("--any-point", action="store_true", help="relax point scoring to any-point-in-hull")

    va = sub.add_parser("validate", help="validate a scene file")
    va.add_argument("--scene", required=True)

    ins = sub.add_parser("inspect", help="dump debug artifacts")
    ins.add_argument("--grid", action="store_true", required=True)
    ins.add_argument("--scene", required=True)
    ins.add_argument("--out", required=True, help="PGM output path")
    ins.add_argument("--resolution", type=float, default=0.05)
    ins.add_argument("--zmin", type=float, default=0.0)
    ins.add_argument("--zmax", type=float, default=0.4)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "generate":
        overrides = {
            "input_dirs": args.input,
            "output_dir": args.out,
            "seed": args.seed,
            "environment": args.environment,
            "workers": args.workers,
            "omit_frame_clause": args.omit_frame_clause,
        }
        try:
            config = load_config(args.config, overrides)
        except (ConfigError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return run_generate(config)
    if args.command == "eval":
        return run_eval(args.gold, args.pred, args.report, args.any_point)
    if args.command == "validate":
        return run_validate(args.scene)
    if args.command == "inspect":
        return run_inspect_grid(args.scene, args.out, args.resolution, args.zmin, args.zmax)
    return 2


if __name__ == "__main__":
    sys.exit(main())
