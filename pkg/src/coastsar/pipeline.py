"""End-to-end coastline detection: SLC pair -> coastline + evaluation.

Stages: simulate/load -> filter -> scale space -> per-scale K-medians ->
vote fusion -> fillhole -> boundary tracing -> evaluation. Every
intermediate raster is written to the output directory.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import coherence as coh
from .evaluate import EvalReport, evaluate
from .fusion import VoteMap, decide, vote_sum
from .morpho import Coastline, coast_segments, fillhole, remove_small_components, trace_boundaries
from .raster import (BinaryMask, ComplexImage, RasterMeta, ScalarImage, read_raster,
                     write_pgm, write_raster)
from .scalespace import DEFAULT_SCALES, build_scale_space
from .segment import FEATURE_MODES, amplitude_range, segment_scale
from .sim import build_true_fields, preset_scene, simulate_pair

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    # input: either a simulated preset scene or a pair of SLC files
    source: str = "simulate"
    preset: str = "EC_like"
    rows: int = 512
    cols: int = 512
    scenario: str = "pursuit_monostatic"
    mixed_surfaces: bool = False
    slc1: str = ""
    slc2: str = ""
    truth_mask: str = ""
    # estimator
    estimator: str = "nonlocal"
    window: int = 5
    search_window: int = 21
    patch: int = 7
    bandwidth: float | None = None
    # detection
    scales: tuple = DEFAULT_SCALES
    truncation: float = 3.0
    mode: str = "fused"
    normalize_per_scale: bool = True
    threshold: float = 0.75
    min_area: int = 1
    # evaluation
    pixel_spacing_m: float = 1.0
    reference: str = ""
    roi: str = ""
    symmetric: bool = False
    # run
    output_dir: str = "coastsar_out"
    seed: int = 0
    threads: int = 1
    write_slc: bool = True

    def validate(self) -> "PipelineConfig":
        if self.source not in ("simulate", "files"):
            raise ConfigError(f"source must be 'simulate' or 'files', got {self.source!r}")
        if self.source == "files" and not (self.slc1 and self.slc2):
            raise ConfigError("source 'files' needs slc1 and slc2")
        if self.source == "simulate" and (self.slc1 or self.slc2):
            raise ConfigError("give either a simulated scene or SLC files, not both")
        if self.estimator not in ("boxcar", "nonlocal"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.mode not in FEATURE_MODES:
            raise ConfigError(f"unknown feature mode {self.mode!r}")
        if not self.scales or any(b <= a for a, b in zip(self.scales, self.scales[1:])):
            raise ConfigError(f"scales must be non-empty and strictly ascending: {self.scales}")
        if not 0 < self.threshold <= 1:
            raise ConfigError("threshold must be in (0, 1]")
        if self.pixel_spacing_m <= 0:
            raise ConfigError("pixel_spacing_m must be positive")
        try:
            self.nl_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.window < 3 or self.window % 2 == 0:
            raise ConfigError("boxcar window must be odd and >= 3")
        return self

    def nl_params(self) -> coh.NLParams:
        return coh.NLParams(self.search_window, self.patch, h=self.bandwidth)

    @property
    def meta(self) -> RasterMeta:
        return RasterMeta(self.pixel_spacing_m)


# INI section -> keys; all keys are PipelineConfig fields
_SECTIONS = {
    "input": ("source", "preset", "rows", "cols", "scenario", "mixed_surfaces",
              "slc1", "slc2", "truth_mask"),
    "estimator": ("estimator", "window", "search_window", "patch", "bandwidth"),
    "scalespace": ("scales", "truncation"),
    "segment": ("mode", "normalize_per_scale"),
    "fusion": ("threshold",),
    "morpho": ("min_area",),
    "eval": ("pixel_spacing_m", "reference", "roi", "symmetric"),
    "run": ("output_dir", "seed", "threads", "write_slc"),
}


def _parse_value(name: str, raw: str):
    default = getattr(PipelineConfig, name, None)
    raw = raw.strip()
    if name == "scales":
        return tuple(float(x) for x in raw.replace(",", " ").split())
    if name == "bandwidth":
        return float(raw) if raw else None
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def load_config(path=None, text: str | None = None, **overrides) -> PipelineConfig:
    """Read an INI-style config (sections as in ``_SECTIONS``)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        if text is not None:
            parser.read_string(text)
        elif path is not None:
            with open(path) as fh:
                parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            try:
                values[key] = _parse_value(key, raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    values.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**values).validate()


def dump_config(cfg: PipelineConfig) -> str:
    parser = configparser.ConfigParser()
    for section, keys in _SECTIONS.items():
        parser[section] = {}
        for k in keys:
            v = getattr(cfg, k)
            if k == "scales":
                v = ", ".join(f"{s:g}" for s in v)
            elif v is None:
                v = ""
            parser[section][k] = str(v).lower() if isinstance(v, bool) else str(v)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------- stages

@dataclass
class Detection:
    masks: list
    votes: VoteMap
    fused: BinaryMask
    filled: BinaryMask
    boundaries: Coastline
    coastline: Coastline


def estimate(s1: ComplexImage, s2: ComplexImage, cfg: PipelineConfig) -> coh.InSARProduct:
    if cfg.estimator == "boxcar":
        return coh.boxcar_estimate(s1, s2, cfg.window, cfg.meta)
    return coh.nonlocal_estimate(s1, s2, cfg.nl_params(), cfg.meta, threads=cfg.threads)


def segment_scales(amplitude: ScalarImage, coherence: ScalarImage, cfg: PipelineConfig) -> list:
    a_space = build_scale_space(amplitude, cfg.scales, cfg.truncation)
    g_space = build_scale_space(coherence, cfg.scales, cfg.truncation)
    shared = None if cfg.normalize_per_scale else amplitude_range(amplitude.data)
    return [segment_scale(a, g, cfg.mode, amp_range=shared)
            for a, g in zip(a_space.layers, g_space.layers)]


def postprocess(masks: list, cfg: PipelineConfig) -> Detection:
    votes = vote_sum(masks)
    fused = decide(votes, cfg.threshold)
    filled = remove_small_components(fillhole(fused), cfg.min_area)
    boundaries = trace_boundaries(filled, cfg.min_area)
    return Detection(masks, votes, fused, filled, boundaries, coast_segments(boundaries, filled))


def detect(amplitude: ScalarImage, coherence: ScalarImage, cfg: PipelineConfig) -> Detection:
    return postprocess(segment_scales(amplitude, coherence, cfg), cfg)


def reference_from_mask(truth: BinaryMask) -> Coastline:
    """Ground-truth coastline: land pixels 4-adjacent to water."""
    return coast_segments(trace_boundaries(truth), truth)


def pixel_accuracy(mask: BinaryMask, truth: BinaryMask) -> float:
    return float((mask.data == truth.data).mean())


# ---------------------------------------------------------------- artefacts

def coastline_to_csv(coast: Coastline) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chain", "closed", "row", "col"])
    for i, (chain, closed) in enumerate(zip(coast.chains, coast.closed)):
        for r, c in chain:
            w.writerow([i, int(closed), r, c])
    return buf.getvalue()


def coastline_from_csv(text: str) -> Coastline:
    chains: dict[int, list] = {}
    closed: dict[int, bool] = {}
    for row in csv.DictReader(io.StringIO(text)):
        i = int(row["chain"])
        chains.setdefault(i, []).append((int(row["row"]), int(row["col"])))
        closed[i] = bool(int(row.get("closed", 0) or 0))
    keys = sorted(chains)
    return Coastline([chains[k] for k in keys], [closed[k] for k in keys])


def coastline_to_geojson(coast: Coastline, meta: RasterMeta) -> str:
    """LineString per chain; x = col, y = row, both scaled to metres."""
    s = meta.pixel_spacing_m
    feats = []
    for i, (chain, closed) in enumerate(zip(coast.chains, coast.closed)):
        coords = [[c * s, r * s] for r, c in chain]
        if closed and len(chain) > 1:
            coords.append(coords[0])
        if len(coords) == 1:
            coords.append(coords[0])
        feats.append({"type": "Feature", "properties": {"chain": i, "closed": bool(closed),
                                                        "n_pixels": len(chain)},
                      "geometry": {"type": "LineString", "coordinates": coords}})
    return json.dumps({"type": "FeatureCollection", "features": feats}) + "\n"


class ArtifactWriter:
    """Writes into one directory and remembers what it wrote."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def _track(self, name: str) -> Path:
        p = self.dir / name
        self.written.append(p)
        return p

    def raster(self, name: str, img, preview: bool = False):
        write_raster(img, self._track(name + ".rst"))
        if preview:
            write_pgm(img, self._track(name + ".pgm"))

    def text(self, name: str, content: str):
        self._track(name).write_text(content)

    def mark_partial(self):
        for p in self.written:
            if p.exists():
                p.replace(p.with_name(p.name + ".partial"))


class _NullWriter(ArtifactWriter):
    def __init__(self):
        self.written = []

    def raster(self, name, img, preview=False):
        pass

    def text(self, name, content):
        pass


@dataclass
class PipelineResult:
    product: coh.InSARProduct
    detection: Detection
    truth: BinaryMask | None = None
    report: EvalReport | None = None
    accuracy: float | None = None
    files: list = field(default_factory=list)


def _load_input(cfg: PipelineConfig):
    if cfg.source == "simulate":
        spec = preset_scene(cfg.preset, cfg.rows, cfg.cols, seed=cfg.seed,
                            scenario_name=cfg.scenario, mixed_surfaces=cfg.mixed_surfaces)
        s1, s2 = simulate_pair(build_true_fields(spec), cfg.seed)
        return s1, s2, spec.land_mask
    s1 = read_raster(cfg.slc1, "complex")
    s2 = read_raster(cfg.slc2, "complex")
    truth = read_raster(cfg.truth_mask, "mask") if cfg.truth_mask else None
    return s1, s2, truth


def _reference(cfg: PipelineConfig, truth: BinaryMask | None) -> Coastline | None:
    if cfg.reference:
        return coastline_from_csv(Path(cfg.reference).read_text())
    if truth is not None:
        return reference_from_mask(truth)
    return None


def run_pipeline(cfg: PipelineConfig, write: bool = True) -> PipelineResult:
    """Run every stage; on failure, written files get a ``.partial`` suffix
    and :class:`StageError` names the stage."""
    cfg.validate()
    out = ArtifactWriter(cfg.output_dir) if write else _NullWriter()
    stage = "load"
    try:
        s1, s2, truth = _load_input(cfg)
        if cfg.source == "simulate" and cfg.write_slc:
            out.raster("slc1", s1)
            out.raster("slc2", s2)
        if truth is not None:
            out.raster("truth_mask", truth)

        stage = "filter"
        product = estimate(s1, s2, cfg)
        out.raster("amplitude", product.amplitude, preview=True)
        out.raster("coherence", product.coherence, preview=True)
        out.raster("looks", product.looks_equivalent)

        stage = "segment"
        masks = segment_scales(product.amplitude, product.coherence, cfg)
        for i, m in enumerate(masks):
            out.raster(f"mask_scale{i}", m)

        stage = "fusion"
        det = postprocess(masks, cfg)
        out.raster("votes", det.votes.as_image(), preview=True)
        out.raster("fused", det.fused)
        out.raster("filled", det.filled, preview=True)

        stage = "trace"
        out.text("coastline.csv", coastline_to_csv(det.coastline))
        out.text("coastline.geojson", coastline_to_geojson(det.coastline, cfg.meta))

        stage = "evaluate"
        result = PipelineResult(product, det, truth)
        reference = _reference(cfg, truth)
        summary = {"estimator": cfg.estimator, "mode": cfg.mode, "seed": cfg.seed,
                   "n_chains": len(det.coastline)}
        if truth is not None:
            result.accuracy = pixel_accuracy(det.filled, truth)
            summary["pixel_accuracy"] = result.accuracy
        if reference is not None and len(det.coastline):
            roi = read_raster(cfg.roi, "mask") if cfg.roi else None
            result.report = evaluate(det.coastline, reference, cfg.meta, det.filled.shape,
                                     roi=roi, symmetric=cfg.symmetric)
            summary.update(result.report.to_dict())
            out.text("report.txt", result.report.to_table(cfg.estimator))
        out.text("report.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    except Exception as exc:
        out.mark_partial()
        raise StageError(stage, exc) from exc
    result.files = list(out.written)
    return result


def emit_bias_report(gammas=(0.0, 0.25, 0.5, 0.75, 1.0), trials: int = 2, size: int = 64,
                     seed: int = 0, window: int = 5, params: coh.NLParams = coh.NLParams()) -> str:
    """CSV of gamma_true, mean_boxcar, mean_nonlocal on homogeneous scenes."""
    box = coh.bias_curve("boxcar", gammas, trials, seed, size, window=window)
    nl = coh.bias_curve("nonlocal", gammas, trials, seed, size, params=params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma_true", "mean_boxcar", "mean_nonlocal"])
    for (g, b), (_, n) in zip(box, nl):
        w.writerow([f"{g:.6f}", f"{b:.6f}", f"{n:.6f}"])
    return buf.getvalue()
