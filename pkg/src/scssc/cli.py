"""Command-line interface: run, synth, bench, and metrics subcommands.

Exit codes: 0 success, 1 numerical failure, 2 I/O or configuration
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

import numpy as np

from .bench import run_benchmark, write_bench_csv
from .errors import InputError, NumericalError
from .fileio import load_envi, load_ground_truth, load_labels_csv, save_cluster_map
from .lasso import save_coefficients_csv
from .metrics import evaluate
from .pipeline import PRESETS, PipelineParams, load_params, sc_ssc
from .selection import save_exemplars_csv
from .synth import make_subspace_scene, write_scene

__all__ = ["main"]


def _set_threads(count: int | None) -> None:
    if count is None:
        return
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(count, limit)))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scssc",
        description="Unsupervised land-cover segmentation of hyperspectral scenes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="segment a scene")
    run.add_argument("--scene", required=True, help="ENVI header (.hdr) path")
    run.add_argument("--gt", help="ground truth (CSV grid or single-band ENVI)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--preset", choices=sorted(PRESETS),
                     help="load the bundled per-scene parameters")
    run.add_argument("--config", help="JSON parameter file")
    run.add_argument("--tau", type=float)
    run.add_argument("--rho", type=float)
    run.add_argument("--segments", type=int)
    run.add_argument("--kernel-size", type=int)
    run.add_argument("--clusters", type=int)
    run.add_argument("--pca-fraction", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--restarts", type=int)
    run.add_argument("--compactness", type=float)
    run.add_argument("--no-pca", action="store_true")
    run.add_argument("--no-superpixels", action="store_true")
    run.add_argument("--no-smoothing", action="store_true")
    run.add_argument("--threads", type=int, help="worker threads for coding")
    run.add_argument("--crop", type=int, nargs=4,
                     metavar=("R0", "C0", "HEIGHT", "WIDTH"),
                     help="spatial crop applied to scene and ground truth")
    run.add_argument("--dump-superpixels", action="store_true")
    run.add_argument("--dump-exemplars", action="store_true")
    run.add_argument("--dump-coefficients", action="store_true")

    synth = sub.add_parser("synth", help="write a synthetic subspace scene")
    synth.add_argument("--out", required=True)
    synth.add_argument("--classes", type=int, default=4)
    synth.add_argument("--ambient-dim", type=int, default=30)
    synth.add_argument("--subspace-dim", type=int, default=3)
    synth.add_argument("--rows", type=int, default=70)
    synth.add_argument("--cols", type=int, default=70)
    synth.add_argument("--blocks", help="block grid as RxC, e.g. 2x2")
    synth.add_argument("--noise", type=float, default=0.01)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--stem", default="scene")

    bench = sub.add_parser("bench", help="scaling benchmark on synthetic scenes")
    bench.add_argument("--sizes", required=True,
                       help="comma-separated pixel counts, e.g. 400,2500,4900")
    bench.add_argument("--rhos", default="0.3",
                       help="comma-separated selection fractions")
    bench.add_argument("--out", required=True, help="output CSV path")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--tau", type=float, default=10.0)
    bench.add_argument("--kernel-size", type=int, default=5)
    bench.add_argument("--ssc-cap", type=int, default=3000,
                       help="largest N for the full baseline rows")
    bench.add_argument("--no-baseline", action="store_true")
    bench.add_argument("--threads", type=int)

    met = sub.add_parser("metrics", help="score an existing label CSV")
    met.add_argument("--pred", required=True, help="label CSV (grid)")
    met.add_argument("--gt", required=True)
    met.add_argument("--json", help="also write the report as JSON")
    return parser


def _params_from_args(args) -> PipelineParams:
    if args.preset and args.config:
        raise InputError("give either --preset or --config, not both")
    if args.preset:
        params = PipelineParams(**PRESETS[args.preset])
    elif args.config:
        params = load_params(args.config)
    else:
        required = ("rho", "segments", "kernel_size", "clusters")
        missing = [k for k in required if getattr(args, k) is None]
        if missing:
            raise InputError(
                "without --preset/--config these flags are required: "
                + ", ".join("--" + k.replace("_", "-") for k in missing)
            )
        params = PipelineParams(rho=args.rho, segments=args.segments,
                                kernel_size=args.kernel_size,
                                clusters=args.clusters)
    overrides = {}
    for key in ("tau", "rho", "segments", "kernel_size", "clusters",
                "pca_fraction", "seed", "restarts", "compactness"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.no_pca:
        overrides["use_pca"] = False
    if args.no_superpixels:
        overrides["use_superpixels"] = False
    if args.no_smoothing:
        overrides["use_smoothing"] = False
    return params.with_updates(**overrides) if overrides else params


def _cmd_run(args) -> int:
    _set_threads(args.threads)
    params = _params_from_args(args)
    if not os.path.isfile(args.scene):
        raise InputError(f"scene file not found: {args.scene}")
    cube = load_envi(args.scene)
    gt = load_ground_truth(args.gt) if args.gt else None
    if args.crop:
        r0, c0, height, width = args.crop
        if gt is not None:
            grid = gt.labels.reshape(cube.rows, cube.cols, order="F")
            sub = grid[r0:r0 + height, c0:c0 + width]
            from .core import GroundTruth

            gt = GroundTruth(sub.reshape(-1, order="F"), gt.num_classes,
                             gt.ignore_label)
        cube = cube.crop(r0, c0, height, width)
    if gt is not None and gt.n != cube.n_pixels:
        raise InputError("ground truth size does not match the scene")

    result = sc_ssc(cube, params)

    report = evaluate(result.labels, gt) if gt is not None else None
    paths = save_cluster_map(result, cube.geometry, args.out,
                             metrics=report.to_dict() if report else None)
    if args.dump_superpixels or args.dump_exemplars or args.dump_coefficients:
        _write_debug_dumps(args, cube, params)
    for stage, secs in sorted(result.timings.items()):
        print(f"time[{stage}] = {secs:.3f} s")
    print(f"segments realized: {result.info['realized_segments']}, "
          f"dictionary size: {result.info['dictionary_size']}")
    if report is not None:
        print(report.format_table())
    print("wrote: " + ", ".join(paths.values()))
    return 0


def _write_debug_dumps(args, cube, params) -> None:
    # Reruns the cheap front stages to materialize intermediates on demand.
    from .core import vectorize
    from .pipeline import _false_color, _reduced_dim
    from .preprocess import pca_fit_project, unit_normalize
    from .selection import build_dictionary
    from .superpixels import save_segmentation, slic

    raw = vectorize(cube)
    d = _reduced_dim(cube.bands, raw.n, params.pca_fraction)
    _, scores = pca_fit_project(raw, d)
    features = unit_normalize(scores) if params.use_pca else unit_normalize(raw)
    image = _false_color(scores.data, cube.geometry)
    segmap = slic(image, params.segments, params.compactness)
    if args.dump_superpixels:
        save_segmentation(segmap, args.out, image=image)
    if args.dump_exemplars or args.dump_coefficients:
        dictionary = build_dictionary(features, segmap, params.rho, params.tau)
        if args.dump_exemplars:
            save_exemplars_csv(dictionary,
                               os.path.join(args.out, "exemplars.csv"))
        if args.dump_coefficients:
            from .lasso import code_against_dictionary

            coeff = code_against_dictionary(features, dictionary, params.tau,
                                            exclude_self=params.exclude_self_coding)
            save_coefficients_csv(coeff,
                                  os.path.join(args.out, "coefficients.csv"))


def _cmd_synth(args) -> int:
    block_grid = None
    if args.blocks:
        try:
            br, bc = args.blocks.lower().split("x")
            block_grid = (int(br), int(bc))
        except ValueError as exc:
            raise InputError(f"--blocks expects RxC, got {args.blocks!r}") from exc
    cube, gt, _ = make_subspace_scene(
        n_classes=args.classes, ambient_dim=args.ambient_dim,
        subspace_dim=args.subspace_dim, rows=args.rows, cols=args.cols,
        block_grid=block_grid, noise=args.noise, seed=args.seed)
    manifest = {
        "classes": args.classes, "ambient_dim": args.ambient_dim,
        "subspace_dim": args.subspace_dim, "rows": args.rows,
        "cols": args.cols, "blocks": list(block_grid) if block_grid else None,
        "noise": args.noise, "seed": args.seed,
    }
    paths = write_scene(cube, gt, args.out, stem=args.stem, manifest=manifest)
    print("wrote: " + ", ".join(paths.values()))
    return 0


def _cmd_bench(args) -> int:
    _set_threads(args.threads)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    rhos = [float(r) for r in args.rhos.split(",") if r.strip()]
    rows = run_benchmark(sizes, rhos=rhos, tau=args.tau,
                         kernel_size=args.kernel_size, seed=args.seed,
                         include_baseline=not args.no_baseline,
                         baseline_cap=args.ssc_cap)
    write_bench_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_metrics(args) -> int:
    pred_grid = load_labels_csv(args.pred)
    pred = pred_grid.reshape(-1, order="F")
    gt = load_ground_truth(args.gt)
    if gt.n != pred.size:
        raise InputError("prediction and ground truth sizes differ")
    report = evaluate(pred, gt)
    print(report.format_table())
    if args.json:
        report.to_json(args.json)
        print(f"wrote {args.json}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
    "metrics": _cmd_metrics,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # pragma: no cover - unexpected failure
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
