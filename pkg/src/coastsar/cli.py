"""Command-line interface.

Exit codes: 0 success, 1 configuration / usage error, 2 stage failure.
The default output directory comes from ``$COASTSAR_OUT`` when set.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import coherence as coh
from .evaluate import evaluate
from .pipeline import (ArtifactWriter, ConfigError, PipelineConfig, StageError, coastline_from_csv,
                       coastline_to_csv, coastline_to_geojson, detect, dump_config, emit_bias_report,
                       estimate, load_config, reference_from_mask, run_pipeline)
from .raster import RasterMeta, ScalarImage, read_raster
from .scalespace import DEFAULT_SCALES
from .segment import FEATURE_MODES
from .sim import SCENARIOS, build_true_fields, preset_scene, simulate_pair

log = logging.getLogger("coastsar")

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2


def _default_out() -> str:
    return os.environ.get("COASTSAR_OUT", "coastsar_out")


def _scales(text: str):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _cmd_simulate(args) -> int:
    spec = preset_scene(args.preset, args.rows, args.cols, seed=args.seed,
                        scenario_name=args.scenario, mixed_surfaces=args.mixed)
    s1, s2 = simulate_pair(build_true_fields(spec), args.seed)
    out = ArtifactWriter(args.out)
    out.raster("slc1", s1)
    out.raster("slc2", s2)
    out.raster("truth_mask", spec.land_mask, preview=True)
    return EXIT_OK


def _cmd_filter(args) -> int:
    cfg = PipelineConfig(source="files", slc1=args.slc1, slc2=args.slc2, estimator=args.estimator,
                         window=args.window, search_window=args.search_window, patch=args.patch,
                         bandwidth=args.bandwidth, threads=args.threads).validate()
    product = estimate(read_raster(args.slc1, "complex"), read_raster(args.slc2, "complex"), cfg)
    out = ArtifactWriter(args.out)
    out.raster("amplitude", product.amplitude, preview=True)
    out.raster("coherence", product.coherence, preview=True)
    out.raster("looks", product.looks_equivalent)
    return EXIT_OK


def _cmd_detect(args) -> int:
    cfg = PipelineConfig(scales=args.scales, mode=args.mode, threshold=args.threshold,
                         min_area=args.min_area, pixel_spacing_m=args.pixel_spacing,
                         normalize_per_scale=not args.global_norm).validate()
    amp = read_raster(args.amplitude, "scalar")
    g = read_raster(args.coherence, "scalar")
    det = detect(amp, ScalarImage(g.data, coherence=True), cfg)
    out = ArtifactWriter(args.out)
    for i, m in enumerate(det.masks):
        out.raster(f"mask_scale{i}", m)
    out.raster("votes", det.votes.as_image(), preview=True)
    out.raster("fused", det.fused)
    out.raster("filled", det.filled, preview=True)
    out.text("coastline.csv", coastline_to_csv(det.coastline))
    out.text("coastline.geojson", coastline_to_geojson(det.coastline, cfg.meta))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    detected = coastline_from_csv(Path(args.detected).read_text())
    if args.reference:
        reference = coastline_from_csv(Path(args.reference).read_text())
    elif args.truth_mask:
        reference = reference_from_mask(read_raster(args.truth_mask, "mask"))
    else:
        raise ConfigError("evaluate needs --reference or --truth-mask")
    roi = read_raster(args.roi, "mask") if args.roi else None
    report = evaluate(detected, reference, RasterMeta(args.pixel_spacing), (args.rows, args.cols),
                      roi=roi, symmetric=args.symmetric)
    out = ArtifactWriter(args.out)
    out.text("report.json", report.to_json(include_distances=args.distances))
    out.text("report.txt", report.to_table(args.label))
    sys.stdout.write(report.to_table(args.label))
    return EXIT_OK


def _cmd_bias_curve(args) -> int:
    params = coh.NLParams(args.search_window, args.patch, h=args.bandwidth)
    text = emit_bias_report(args.gammas, trials=args.trials, size=args.size, seed=args.seed,
                            window=args.window, params=params)
    out = ArtifactWriter(args.out)
    out.text("bias_curve.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    overrides = {"seed": args.seed, "threads": args.threads,
                 "output_dir": args.out if args.out_given else None}
    cfg = load_config(args.config, **overrides) if args.config else PipelineConfig(
        output_dir=args.out, **{k: v for k, v in overrides.items() if v is not None and k != "output_dir"}
    ).validate()
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    result = run_pipeline(cfg)
    summary = {"accuracy": result.accuracy,
               "report": result.report.to_dict() if result.report else None,
               "output_dir": str(cfg.output_dir)}
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coastsar", description="Unsupervised coastline detection "
                                "from InSAR amplitude and coherence.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--threads", type=int, default=1, help="worker cap for the nonlocal filter")
    sub = p.add_subparsers(dest="command", required=True)

    def out_arg(sp):
        sp.add_argument("--out", default=_default_out(),
                        help="output directory (default: $COASTSAR_OUT or ./coastsar_out)")

    sp = sub.add_parser("simulate", help="simulate an SLC pair over a preset scene")
    sp.add_argument("--preset", choices=("EC_like", "ST_like"), default="EC_like")
    sp.add_argument("--rows", type=int, default=512)
    sp.add_argument("--cols", type=int, default=512)
    sp.add_argument("--scenario", choices=sorted(SCENARIOS), default="pursuit_monostatic")
    sp.add_argument("--mixed", action="store_true", help="add vegetation and smooth-water patches")
    sp.add_argument("--seed", type=int, default=0)
    out_arg(sp)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("filter", help="estimate amplitude and coherence")
    sp.add_argument("slc1")
    sp.add_argument("slc2")
    sp.add_argument("--estimator", choices=("boxcar", "nonlocal"), default="nonlocal")
    sp.add_argument("--window", type=int, default=5, help="boxcar window")
    sp.add_argument("--search-window", type=int, default=21)
    sp.add_argument("--patch", type=int, default=7)
    sp.add_argument("--bandwidth", type=float, default=None)
    out_arg(sp)
    sp.set_defaults(func=_cmd_filter)

    sp = sub.add_parser("detect", help="scale space + K-medians + fusion + tracing")
    sp.add_argument("amplitude")
    sp.add_argument("coherence")
    sp.add_argument("--scales", type=_scales, default=DEFAULT_SCALES, help="comma-separated variances")
    sp.add_argument("--mode", choices=FEATURE_MODES, default="fused")
    sp.add_argument("--threshold", type=float, default=0.75)
    sp.add_argument("--min-area", type=int, default=1)
    sp.add_argument("--pixel-spacing", type=float, default=1.0)
    sp.add_argument("--global-norm", action="store_true", help="normalise amplitude once, not per scale")
    out_arg(sp)
    sp.set_defaults(func=_cmd_detect)

    sp = sub.add_parser("evaluate", help="distance statistics against a reference coastline")
    sp.add_argument("detected", help="coastline CSV")
    sp.add_argument("--reference", help="reference coastline CSV")
    sp.add_argument("--truth-mask", help="reference land mask raster")
    sp.add_argument("--rows", type=int, required=True)
    sp.add_argument("--cols", type=int, required=True)
    sp.add_argument("--pixel-spacing", type=float, default=1.0)
    sp.add_argument("--roi", help="mask raster selecting evaluated pixels")
    sp.add_argument("--symmetric", action="store_true")
    sp.add_argument("--distances", action="store_true", help="include all distances in the JSON")
    sp.add_argument("--label", default="detected")
    out_arg(sp)
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("bias-curve", help="mean coherence estimate vs true coherence")
    sp.add_argument("--gammas", type=_scales, default=(0.0, 0.25, 0.5, 0.75, 1.0))
    sp.add_argument("--trials", type=int, default=2)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--window", type=int, default=5)
    sp.add_argument("--search-window", type=int, default=21)
    sp.add_argument("--patch", type=int, default=7)
    sp.add_argument("--bandwidth", type=float, default=None)
    out_arg(sp)
    sp.set_defaults(func=_cmd_bias_curve)

    sp = sub.add_parser("pipeline", help="run every stage from a config file")
    sp.add_argument("config", nargs="?", help="INI config; defaults are used when omitted")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None, help="overrides [run] output_dir")
    sp.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    sp.set_defaults(func=_cmd_pipeline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "pipeline":
        args.out_given = args.out is not None
        if args.out is None:
            args.out = _default_out()
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_STAGE
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
