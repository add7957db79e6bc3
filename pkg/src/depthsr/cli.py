"""Command-line entry points: gen, degrade, run, verify-prop, contraction, sweep-tau.

All randomness flows from the config seed (overridable with --seed); rerunning
a subcommand with the same config is byte-identical. Exit codes: 0 success,
2 config error, 3 corpus/data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import pipeline
from .config import (
    PipelineConfig,
    config_hash,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)
from .degradation import apply_spec
from .errors import ConfigError, DataError, DepthSRError, NumericError
from .fields import DepthField
from .gaussians import TradeoffParams, h_maximizer, log_h_objective
from .metrics import MetricReport, aggregate, compute_metrics
from .pfm import read_pfm, write_pfm
from .rng import child_seed
from .scenes import generate_scene
from .validation import check_positive_depth

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_manifest(directory: Path) -> dict:
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {directory}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for entry in manifest.get("scenes", []):
        for key, digest in entry.get("sha256", {}).items():
            file_path = directory / entry[key]
            if not file_path.exists():
                raise DataError(f"manifest references missing file {file_path}")
            if _sha256_file(file_path) != digest:
                raise DataError(f"digest mismatch for {file_path}")
    return manifest


def _effective_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    selection = config.selection
    if getattr(args, "tau", None) is not None:
        selection = dataclasses.replace(selection, tau=args.tau)
    if getattr(args, "alpha_min", None) is not None:
        selection = dataclasses.replace(selection, alpha_min=args.alpha_min)
    if getattr(args, "rule", None) is not None:
        selection = dataclasses.replace(selection, rule=args.rule)
    return dataclasses.replace(config, selection=selection)


def cmd_gen(args) -> int:
    config = _effective_config(args)
    out_dir = Path(args.out or config.paths.corpus or "corpus")
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(config.corpus.count):
        scene_id = f"scene_{i:04d}"
        spec = dataclasses.replace(
            config.corpus.scene, seed=child_seed(config.seed, "scene", scene_id)
        )
        gt, guide = generate_scene(spec)
        gt_name, guide_name = f"{scene_id}_gt.pfm", f"{scene_id}_guide.pfm"
        write_pfm(out_dir / gt_name, gt)
        write_pfm(out_dir / guide_name, guide)
        entries.append(
            {
                "id": scene_id,
                "gt": gt_name,
                "guide": guide_name,
                "sha256": {
                    "gt": _sha256_file(out_dir / gt_name),
                    "guide": _sha256_file(out_dir / guide_name),
                },
            }
        )
    _write_manifest(
        out_dir / "manifest.json",
        {
            "kind": "corpus",
            "config_hash": config_hash(config),
            "scene_spec": config_to_dict(config)["corpus"],
            "scenes": entries,
        },
    )
    print(f"gen: wrote {len(entries)} scenes to {out_dir}")
    return EXIT_OK


def cmd_degrade(args) -> int:
    config = _effective_config(args)
    corpus_dir = Path(args.corpus or config.paths.corpus or "corpus")
    out_dir = Path(args.out or config.paths.degraded or "degraded")
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest(corpus_dir)
    spec_dict = config_to_dict(config)["degradation"]
    spec_hash = hashlib.sha256(
        json.dumps(spec_dict, sort_keys=True).encode("utf-8")
    ).hexdigest()
    entries = []
    for entry in manifest["scenes"]:
        scene_id = entry["id"]
        gt = read_pfm(corpus_dir / entry["gt"])
        check_positive_depth(gt, f"{scene_id} ground truth")
        spec = dataclasses.replace(
            config.degradation, seed=child_seed(config.degradation.seed, "degrade", scene_id)
        )
        degraded = apply_spec(gt, spec)
        name = f"{scene_id}_input.pfm"
        write_pfm(out_dir / name, degraded)
        entries.append(
            {"id": scene_id, "input": name, "sha256": {"input": _sha256_file(out_dir / name)}}
        )
    _write_manifest(
        out_dir / "manifest.json",
        {
            "kind": "degraded",
            "config_hash": config_hash(config),
            "spec_hash": spec_hash,
            "scenes": entries,
        },
    )
    print(f"degrade: wrote {len(entries)} inputs to {out_dir} (spec {spec_hash[:12]})")
    return EXIT_OK


def _scene_paths(corpus_dir: Path, degraded_dir: Path) -> list[tuple[str, Path, Path, Path]]:
    corpus = _load_manifest(corpus_dir)
    degraded = _load_manifest(degraded_dir)
    inputs = {e["id"]: e["input"] for e in degraded["scenes"]}
    jobs = []
    for entry in corpus["scenes"]:
        scene_id = entry["id"]
        if scene_id not in inputs:
            raise DataError(f"scene {scene_id} missing from degraded corpus")
        jobs.append(
            (
                scene_id,
                corpus_dir / entry["gt"],
                corpus_dir / entry["guide"],
                degraded_dir / inputs[scene_id],
            )
        )
    return jobs


def _run_one_scene(payload) -> tuple[str, bytes, int, float, float, dict]:
    """Worker for scene-level parallelism; rebuilds context from the config dict."""
    from .config import config_from_dict

    config_dict, ablation, scene_id, gt_path, guide_path, input_path = payload
    config = config_from_dict(config_dict)
    ctx = pipeline.build_context(config)
    for path in (gt_path, guide_path, input_path):
        if not Path(path).exists():
            raise DataError(f"scene {scene_id}: missing file {path}")
    gt = read_pfm(gt_path)
    guide = read_pfm(guide_path)
    d_in = read_pfm(input_path)
    result = pipeline.run_scene(ctx, scene_id, guide, d_in, ablation=ablation)
    report = compute_metrics(
        result.prediction, gt, scene_id=scene_id, config_hash=config_hash(config)
    )
    values32 = result.prediction.values.astype(np.float32)
    return (
        scene_id,
        values32.tobytes(),
        result.timestep,
        result.alpha_bar,
        result.sigma_bar,
        dataclasses.asdict(report),
    )


def cmd_run(args) -> int:
    config = _effective_config(args)
    corpus_dir = Path(args.corpus or config.paths.corpus or "corpus")
    degraded_dir = Path(args.degraded or config.paths.degraded or "degraded")
    out_dir = Path(args.out or config.paths.results or "results")
    out_dir.mkdir(parents=True, exist_ok=True)
    ablation = args.ablation or "none"
    scene_jobs = _scene_paths(corpus_dir, degraded_dir)
    config_dict = config_to_dict(config)
    payloads = [
        (config_dict, ablation, scene_id, str(gt), str(guide), str(d_in))
        for scene_id, gt, guide, d_in in scene_jobs
    ]
    if args.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one_scene, payloads))
    else:
        results = [_run_one_scene(p) for p in payloads]

    save_config(out_dir / "config.json", config)
    reports = []
    rows = []
    for (scene_id, pred_bytes, t_hat, a_hat, sbar, report_dict), (_, gt_path, _, _) in zip(
        results, scene_jobs
    ):
        gt = read_pfm(gt_path)
        values = np.frombuffer(pred_bytes, dtype=np.float32).reshape(gt.shape).astype(np.float64)
        write_pfm(out_dir / f"{scene_id}_pred.pfm", DepthField(values, np.isfinite(values)))
        report = MetricReport(**report_dict)
        reports.append(report)
        rows.append(
            {
                "scene_id": scene_id,
                "rmse": f"{report.rmse:.9f}",
                "mae": f"{report.mae:.9f}",
                "delta_105": f"{report.delta_105:.9f}",
                "valid_count": report.valid_count,
                "nonfinite_pred": report.nonfinite_pred,
                "timestep": t_hat,
                "alpha_bar": f"{a_hat:.9g}",
                "sigma_bar": f"{sbar:.9g}",
                "config_hash": report.config_hash,
            }
        )
    with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else ["scene_id"])
        writer.writeheader()
        writer.writerows(rows)
    summary = aggregate(reports) if reports else {"scenes": 0}
    summary["ablation"] = ablation
    summary["config_hash"] = config_hash(config)
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if reports:
        print(
            f"run[{ablation}]: {summary['scenes']} scenes, "
            f"rmse={summary['rmse']:.6f} mae={summary['mae']:.6f} "
            f"delta={summary['delta_105']:.4f}"
        )
    else:
        print(f"run[{ablation}]: empty corpus")
    return EXIT_OK


def cmd_verify_prop(args) -> int:
    params = TradeoffParams(lam=args.lam, omega=args.omega)
    grid = np.exp(np.linspace(math.log(1e-6), 0.0, args.grid))
    grid[-1] = 1.0
    log_values = [log_h_objective(a, params) for a in grid]
    analytic = h_maximizer(params)
    grid_best = float(grid[int(np.argmax(log_values))])
    out = Path(args.out) if args.out else None
    lines = ["alpha_bar,h"]
    for a, lv in zip(grid, log_values):
        lines.append(f"{a:.12g},{math.exp(lv):.12g}")
    text = "\n".join(lines) + "\n"
    if out:
        out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    gap = abs(analytic - grid_best)
    print(f"verify-prop: analytic maximizer {analytic:.9g}, grid maximizer {grid_best:.9g}, gap {gap:.3g}")
    return EXIT_OK


def cmd_contraction(args) -> int:
    config = _effective_config(args)
    corpus_dir = Path(args.corpus or config.paths.corpus or "corpus")
    degraded_dir = Path(args.degraded or config.paths.degraded or "degraded")
    jobs = _scene_paths(corpus_dir, degraded_dir)
    wanted = [j for j in jobs if j[0] == args.scene] if args.scene else jobs[:1]
    if not wanted:
        raise DataError(f"scene {args.scene!r} not found in corpus")
    scene_id, gt_path, guide_path, input_path = wanted[0]
    ctx = pipeline.build_context(config)
    rows = pipeline.contraction_rows(
        ctx, read_pfm(guide_path), read_pfm(input_path), read_pfm(gt_path)
    )
    lines = ["t,alpha_bar,w2_exact,w2_surrogate"]
    for t, a, exact, surrogate in rows:
        lines.append(f"{t},{a:.12g},{exact:.12g},{surrogate:.12g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"contraction[{scene_id}]: W2 {rows[0][2]:.4g} -> {rows[-1][2]:.4g} over {len(rows)} steps")
    return EXIT_OK


def cmd_sweep_tau(args) -> int:
    taus = [float(t) for t in args.taus.split(",")] if args.taus else [0.07, 0.14, 0.28, 0.56]
    results = []
    for tau in taus:
        sweep_args = argparse.Namespace(**vars(args))
        sweep_args.tau = tau
        sweep_args.out = str(Path(args.out_dir) / f"tau_{tau:g}")
        sweep_args.ablation = "none"
        cmd_run(sweep_args)
        summary = json.loads(
            (Path(sweep_args.out) / "summary.json").read_text(encoding="utf-8")
        )
        results.append((tau, summary["rmse"], summary["mae"]))
    lines = ["tau,rmse,mae"]
    for tau, rmse, mae in results:
        lines.append(f"{tau:g},{rmse:.9f},{mae:.9f}")
    text = "\n".join(lines) + "\n"
    table_path = Path(args.out_dir) / "sweep_tau.csv"
    table_path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override run seed")
    parser.add_argument("--jobs", type=int, default=1, help="scene-level parallelism")


def _add_selection_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, default=None)
    parser.add_argument("--alpha-min", dest="alpha_min", type=float, default=None)
    parser.add_argument("--rule", choices=["simplified", "threshold"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depthsr", description="Adaptive diffusion sampling for depth super-resolution"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    _add_common(p)
    p.add_argument("--out", help="corpus directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("degrade", help="apply the degradation spec to a corpus")
    _add_common(p)
    p.add_argument("--corpus", help="corpus directory")
    p.add_argument("--out", help="degraded output directory")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("run", help="run the pipeline over a degraded corpus")
    _add_common(p)
    _add_selection_flags(p)
    p.add_argument("--corpus", help="corpus directory")
    p.add_argument("--degraded", help="degraded inputs directory")
    p.add_argument("--out", help="results directory")
    p.add_argument(
        "--ablation",
        choices=list(pipeline.ABLATIONS),
        default="none",
        help="pipeline variant to run",
    )
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-prop", help="sample the trade-off objective and its maximizer")
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=10000)
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=cmd_verify_prop)

    p = sub.add_parser("contraction", help="Wasserstein contraction diagnostic for one scene")
    _add_common(p)
    p.add_argument("--corpus", help="corpus directory")
    p.add_argument("--degraded", help="degraded inputs directory")
    p.add_argument("--scene", help="scene id (default: first scene)")
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.set_defaults(func=cmd_contraction)

    p = sub.add_parser("sweep-tau", help="run the pipeline across a list of tau values")
    _add_common(p)
    p.add_argument("--taus", help="comma-separated tau list (default 0.07,0.14,0.28,0.56)")
    p.add_argument("--corpus", help="corpus directory")
    p.add_argument("--degraded", help="degraded inputs directory")
    p.add_argument("--out-dir", dest="out_dir", default="sweep", help="sweep output directory")
    p.set_defaults(func=cmd_sweep_tau)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DepthSRError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
