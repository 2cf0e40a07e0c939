"""Synthetic co-registered SLC pairs with known coherence and backscatter.

Each pixel pair is a zero-mean circular complex Gaussian vector with

    E|s1|^2 = E|s2|^2 = I,    E[s1 conj(s2)] = gamma * I

and flat interferometric phase. Pixels are independent. Random draws come
from one Philox stream per image row keyed by ``(seed, row)``, so any
split into row blocks reproduces the same image.

The coherence values per acquisition scenario are configuration defaults
chosen to encode the qualitative land/water appearance table (water
decorrelates within a ~10 s pursuit-monostatic baseline, stays coherent
with zero baseline, vegetation decorrelates over a repeat-pass interval).
They are not measured values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import BinaryMask, ComplexImage, ScalarImage, row_rng, seeded_rng


@dataclass(frozen=True)
class AcquisitionScenario:
    name: str
    delta_t_s: float
    gamma_land: float
    gamma_water_smooth: float
    gamma_water_rough: float
    gamma_vegetation: float

    def __post_init__(self):
        if self.delta_t_s < 0:
            raise ValueError("delta_t_s must be >= 0")
        for f in ("gamma_land", "gamma_water_smooth", "gamma_water_rough", "gamma_vegetation"):
            v = getattr(self, f)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{f}={v} outside [0, 1]")


SCENARIOS = {
    "pursuit_monostatic": AcquisitionScenario(
        "pursuit_monostatic", 10.0, gamma_land=0.8, gamma_water_smooth=0.05,
        gamma_water_rough=0.05, gamma_vegetation=0.6),
    "bistatic": AcquisitionScenario(
        "bistatic", 0.0, gamma_land=0.8, gamma_water_smooth=0.1,
        gamma_water_rough=0.85, gamma_vegetation=0.8),
    "repeat_pass": AcquisitionScenario(
        "repeat_pass", 11 * 86400.0, gamma_land=0.3, gamma_water_smooth=0.05,
        gamma_water_rough=0.05, gamma_vegetation=0.2),
}


def scenario(name: str, **overrides) -> AcquisitionScenario:
    try:
        base = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return dataclasses.replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class SceneSpec:
    """Ground-truth scene.

    Untagged water is wind-roughened open water. ``smooth_water`` and
    ``vegetation`` are optional sub-region tags (applied to water and land
    pixels respectively) with their own backscatter levels.
    """

    land_mask: BinaryMask
    scenario: AcquisitionScenario = field(default_factory=lambda: SCENARIOS["pursuit_monostatic"])
    sigma0_land: float = 1.0
    sigma0_water: float = 0.2
    vegetation: BinaryMask | None = None
    smooth_water: BinaryMask | None = None
    sigma0_vegetation: float = 0.4
    sigma0_smooth_water: float = 0.02

    def __post_init__(self):
        for f in ("sigma0_land", "sigma0_water", "sigma0_vegetation", "sigma0_smooth_water"):
            if not getattr(self, f) > 0:
                raise ValueError(f"{f} must be positive")
        for tag in (self.vegetation, self.smooth_water):
            if tag is not None and tag.shape != self.land_mask.shape:
                raise ValueError("tag mask shape differs from land mask")

    @property
    def rows(self) -> int:
        return self.land_mask.rows

    @property
    def cols(self) -> int:
        return self.land_mask.cols

    def with_scenario(self, name: str) -> "SceneSpec":
        return dataclasses.replace(self, scenario=scenario(name))


@dataclass(frozen=True)
class TrueFields:
    gamma_true: ScalarImage
    intensity_true: ScalarImage


def build_true_fields(spec: SceneSpec) -> TrueFields:
    land = spec.land_mask.data.astype(bool)
    sc = spec.scenario
    gamma = np.where(land, sc.gamma_land, sc.gamma_water_rough)
    intensity = np.where(land, spec.sigma0_land, spec.sigma0_water)
    if spec.vegetation is not None:
        veg = land & spec.vegetation.data.astype(bool)
        gamma = np.where(veg, sc.gamma_vegetation, gamma)
        intensity = np.where(veg, spec.sigma0_vegetation, intensity)
    if spec.smooth_water is not None:
        smooth = ~land & spec.smooth_water.data.astype(bool)
        gamma = np.where(smooth, sc.gamma_water_smooth, gamma)
        intensity = np.where(smooth, spec.sigma0_smooth_water, intensity)
    return TrueFields(ScalarImage(gamma, coherence=True), ScalarImage(intensity))


def simulate_pair(fields: TrueFields, seed: int) -> tuple[ComplexImage, ComplexImage]:
    """Draw one correlated SLC pair for the given true fields."""
    gamma = fields.gamma_true.data
    amp = np.sqrt(fields.intensity_true.data)
    rows, cols = gamma.shape
    s1 = np.empty((rows, cols), np.complex128)
    s2 = np.empty((rows, cols), np.complex128)
    scale = np.sqrt(0.5)
    for r in range(rows):
        z = row_rng(seed, r).standard_normal((4, cols)) * scale
        z1 = z[0] + 1j * z[1]
        z2 = z[2] + 1j * z[3]
        g = gamma[r]
        s1[r] = amp[r] * z1
        s2[r] = amp[r] * (g * z1 + np.sqrt(1.0 - g * g) * z2)
    return ComplexImage(s1), ComplexImage(s2)


def coastline_truth(mask: BinaryMask) -> np.ndarray:
    """Land pixels 4-adjacent to a water pixel, as a boolean image."""
    land = mask.data.astype(bool)
    water = ~land
    near_water = np.zeros_like(land)
    near_water[1:] |= water[:-1]
    near_water[:-1] |= water[1:]
    near_water[:, 1:] |= water[:, :-1]
    near_water[:, :-1] |= water[:, 1:]
    return land & near_water


def _ec_like(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    # land on the left of a low-frequency meandering column boundary
    r = np.arange(rows)[:, None]
    boundary = np.full((rows, 1), cols / 2.0)
    for k, amp in ((1, 0.08), (2, 0.04), (3, 0.02)):
        phase = rng.uniform(0, 2 * np.pi)
        boundary = boundary + amp * cols * np.sin(2 * np.pi * k * r / rows + phase)
    c = np.arange(cols)[None, :]
    return (c < boundary).astype(np.uint8)


def _st_like(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    # water background with many elliptical islands of mixed sizes
    rr, cc = np.mgrid[0:rows, 0:cols]
    land = np.zeros((rows, cols), bool)
    n_islands = max(24, (rows * cols) // 2048)
    scale = min(rows, cols)
    for _ in range(n_islands):
        radius = scale * 0.012 * rng.pareto(2.0) + scale * 0.012
        radius = min(radius, scale * 0.15)
        ecc = rng.uniform(0.5, 1.0)
        theta = rng.uniform(0, np.pi)
        r0, c0 = rng.uniform(0, rows), rng.uniform(0, cols)
        dr, dc = rr - r0, cc - c0
        u = dr * np.cos(theta) + dc * np.sin(theta)
        v = -dr * np.sin(theta) + dc * np.cos(theta)
        land |= (u / radius) ** 2 + (v / (radius * ecc)) ** 2 <= 1.0
    return land.astype(np.uint8)


def _blobs(rows: int, cols: int, rng: np.random.Generator, fraction: float, sigma: float) -> np.ndarray:
    noise = ndimage.gaussian_filter(rng.standard_normal((rows, cols)), sigma, mode="reflect")
    return noise >= np.quantile(noise, 1.0 - fraction)


def preset_scene(name: str, rows: int = 256, cols: int = 256, seed: int = 0,
                 scenario_name: str = "pursuit_monostatic",
                 mixed_surfaces: bool = False, vegetation_fraction: float = 0.5,
                 smooth_water_fraction: float = 0.25) -> SceneSpec:
    """EC_like (one smooth coastline, ~half land) or ST_like (skerry islands).

    ``mixed_surfaces`` adds vegetation patches on land and smooth-water
    patches at sea, the surface types whose appearance depends on the
    acquisition mode. The fractions are approximate shares of the land and
    water areas.
    """
    if rows < 64 or cols < 64:
        raise ValueError("preset scenes need rows, cols >= 64")
    rng = seeded_rng(seed)
    if name == "EC_like":
        land = _ec_like(rows, cols, rng)
    elif name == "ST_like":
        land = _st_like(rows, cols, rng)
    else:
        raise ValueError(f"unknown preset {name!r}")
    veg = smooth = None
    if mixed_surfaces:
        sigma = min(rows, cols) / 32
        veg = BinaryMask(_blobs(rows, cols, rng, vegetation_fraction, sigma) & land.astype(bool))
        smooth = BinaryMask(_blobs(rows, cols, rng, smooth_water_fraction, sigma) & ~land.astype(bool))
    return SceneSpec(BinaryMask(land), scenario=scenario(scenario_name),
                     vegetation=veg, smooth_water=smooth)
