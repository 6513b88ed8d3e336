"""Histogram-landmark intensity standardization (train / transform).

Training learns the standard-scale foreground mode ``mu_s`` from a set of
images; transformation maps each image piecewise-linearly so that its
landmarks ``p1 < mu < p2`` land on ``s1 < mu_s < s2``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConstantImage,
    DegenerateHistogram,
    DegenerateRange,
    EmptyTrainingSet,
    InvalidLandmarks,
    ScaleMismatch,
    StandardizationError,
    UntrainedConfig,
)
from .image import ImageGrid, Scale

PARAM_KEYS = ("pc1", "pc2", "s1", "s2", "mu_s", "nbins")


@dataclass(frozen=True)
class StandardScaleConfig:
    pc1: float = 0.0
    pc2: float = 99.8
    s1: float = 1.0
    s2: float = 4095.0
    mu_s: float | None = None
    nbins: int = 256

    def __post_init__(self):
        if not 0.0 <= self.pc1 < self.pc2 <= 100.0:
            raise StandardizationError(f"need 0 <= pc1 < pc2 <= 100, got pc1={self.pc1}, pc2={self.pc2}")
        if not self.s1 < self.s2:
            raise StandardizationError(f"need s1 < s2, got s1={self.s1}, s2={self.s2}")
        if self.mu_s is not None and not self.s1 < self.mu_s < self.s2:
            raise StandardizationError(f"mu_s={self.mu_s} outside ({self.s1}, {self.s2})")
        if self.nbins < 2:
            raise StandardizationError("nbins must be at least 2")

    @property
    def trained(self) -> bool:
        return self.mu_s is not None


@dataclass(frozen=True)
class HistogramLandmarks:
    m1: float
    m2: float
    mu: float
    p1: float
    p2: float

    def valid(self) -> bool:
        return self.m1 <= self.p1 < self.mu < self.p2 <= self.m2


@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])


def round_half_away(y):
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.floor(np.abs(y) + 0.5)


def compute_histogram(img: ImageGrid, nbins: int = 256) -> Histogram:
    if nbins < 2:
        raise StandardizationError("nbins must be at least 2")
    lo, hi = float(img.data.min()), float(img.data.max())
    if lo == hi:
        raise ConstantImage(f"image is constant ({lo}); no histogram structure")
    counts, edges = np.histogram(img.data, bins=nbins, range=(lo, hi))
    return Histogram(edges, counts)


def detect_landmarks(img: ImageGrid, cfg: StandardScaleConfig | None = None, nbins: int | None = None) -> HistogramLandmarks:
    """Extrema, percentile cut points and the foreground mode of ``img``.

    The foreground mode is the highest bin whose centre lies above the
    background lobe (above both ``p1`` and the mean intensity) and below
    ``p2``; ties go to the brighter bin.
    """
    cfg = cfg or StandardScaleConfig()
    hist = compute_histogram(img, nbins or cfg.nbins)
    data = img.data
    m1, m2 = float(data.min()), float(data.max())
    p1, p2 = (float(v) for v in np.percentile(data, [cfg.pc1, cfg.pc2]))
    centers = hist.centers
    floor = max(p1, float(data.mean()))
    candidates = np.flatnonzero((centers > floor) & (centers < p2) & (hist.counts > 0))
    if candidates.size == 0:
        raise DegenerateHistogram(f"no foreground mode between p1={p1:.6g} and p2={p2:.6g}")
    counts = hist.counts[candidates]
    best = candidates[np.flatnonzero(counts == counts.max())[-1]]
    lm = HistogramLandmarks(m1=m1, m2=m2, mu=float(centers[best]), p1=p1, p2=p2)
    if not lm.valid():
        raise DegenerateHistogram(f"landmarks out of order: {lm}")
    return lm


def map_to_standard(x, p1: float, p2: float, cfg: StandardScaleConfig | None = None):
    cfg = cfg or StandardScaleConfig()
    if not p1 < p2:
        raise DegenerateRange(f"need p1 < p2, got p1={p1}, p2={p2}")
    return cfg.s1 + (np.asarray(x, dtype=float) - p1) / (p2 - p1) * (cfg.s2 - cfg.s1)


def train(images, cfg: StandardScaleConfig | None = None, nbins: int | None = None) -> StandardScaleConfig:
    cfg = cfg or StandardScaleConfig()
    images = list(images)
    if not images:
        raise EmptyTrainingSet("standardization needs at least one training image")
    nbins = nbins or cfg.nbins
    mapped = []
    for j, img in enumerate(images):
        try:
            lm = detect_landmarks(img, cfg, nbins)
        except StandardizationError as exc:
            raise type(exc)(f"training image {j}: {exc}") from None
        mapped.append(float(map_to_standard(lm.mu, lm.p1, lm.p2, cfg)))
    mu_s = float(round_half_away(np.mean(mapped)))
    if not cfg.s1 < mu_s < cfg.s2:
        raise DegenerateHistogram(f"trained mu_s={mu_s} not inside ({cfg.s1}, {cfg.s2})")
    return replace(cfg, mu_s=mu_s, nbins=nbins)


def transfer(x, lm: HistogramLandmarks, cfg: StandardScaleConfig) -> np.ndarray:
    """Two-piece linear map before rounding and clamping."""
    if not cfg.trained:
        raise UntrainedConfig("standard scale is untrained (mu_s unset)")
    if not lm.valid():
        raise InvalidLandmarks(f"landmarks violate m1 <= p1 < mu < p2 <= m2: {lm}")
    x = np.asarray(x, dtype=float)
    lower = cfg.mu_s + (x - lm.mu) * ((cfg.s1 - cfg.mu_s) / (lm.p1 - lm.mu))
    upper = cfg.mu_s + (x - lm.mu) * ((cfg.s2 - cfg.mu_s) / (lm.p2 - lm.mu))
    return np.where(x <= lm.mu, lower, upper)


def standardize(img: ImageGrid, lm: HistogramLandmarks, cfg: StandardScaleConfig) -> ImageGrid:
    if img.scale is not Scale.IMAGE:
        raise ScaleMismatch("image is already on the standard scale")
    y = round_half_away(transfer(img.data, lm, cfg))
    return ImageGrid(np.clip(y, cfg.s1, cfg.s2), Scale.STANDARD)


def standardize_image(img: ImageGrid, cfg: StandardScaleConfig) -> ImageGrid:
    """Detect ``img``'s own landmarks and map it onto the trained scale."""
    if img.scale is not Scale.IMAGE:
        img = img.with_data(img.data, Scale.IMAGE)
    return standardize(img, detect_landmarks(img, cfg), cfg)


def format_decimal(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return np.format_float_positional(float(value), trim="-")


def save_params(path, cfg: StandardScaleConfig) -> None:
    if not cfg.trained:
        raise UntrainedConfig("refusing to save an untrained standard scale")
    with open(path, "w") as fh:
        for key in PARAM_KEYS:
            fh.write(f"{key}={format_decimal(getattr(cfg, key))}\n")


def load_params(path) -> StandardScaleConfig:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or key.strip() not in PARAM_KEYS:
                raise StandardizationError(f"{path}:{lineno}: unexpected entry {line!r}")
            values[key.strip()] = value.strip()
    missing = [k for k in PARAM_KEYS if k not in values]
    if missing:
        raise StandardizationError(f"{path}: missing keys {', '.join(missing)}")
    return StandardScaleConfig(
        pc1=float(values["pc1"]),
        pc2=float(values["pc2"]),
        s1=float(values["s1"]),
        s2=float(values["s2"]),
        mu_s=float(values["mu_s"]),
        nbins=int(values["nbins"]),
    )
