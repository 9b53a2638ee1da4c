"""End-to-end segmentation pipeline and its parameter set.

Stage order: PCA feature reduction, SLIC superpixels on a 3-component
false-color image, per-segment exemplar selection, sparse coding against
the stacked exemplars, spatial smoothing of the coefficient rows, degree
computation, truncated-SVD spectral embedding, and k-means. Ablation
toggles disable PCA (code raw bands), superpixels (one global segment),
or smoothing (identity kernel).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .core import ClusterResult, SpectralCube, reshape_row_to_grid, vectorize
from .embedding import (degrees, kmeans, normalize_abs_columns,
                        smooth_coefficients, spectral_embed)
from .errors import InputError, PipelineStageError
from .lasso import code_against_dictionary
from .preprocess import minmax_scale_channels, pca_fit_project, unit_normalize
from .selection import build_dictionary
from .superpixels import SegmentationMap, slic

__all__ = ["PipelineParams", "PRESETS", "sc_ssc", "load_params"]

# Scene presets reproducing the reference per-scene settings.
PRESETS = {
    "indian-pines-roi": dict(rho=0.35, segments=1700, kernel_size=8, clusters=4),
    "salinas-roi": dict(rho=0.2, segments=700, kernel_size=3, clusters=6),
    "university-of-pavia-roi": dict(rho=0.3, segments=1900, kernel_size=8, clusters=9),
}

_TOGGLE_KEYS = ("use_pca", "use_superpixels", "use_smoothing")
_PARAM_KEYS = ("tau", "rho", "segments", "kernel_size", "clusters",
               "pca_fraction", "seed", "restarts", "compactness",
               "exclude_self_coding", "normalize_embedding", "toggles")


@dataclass(frozen=True)
class PipelineParams:
    """Validated pipeline configuration."""

    rho: float
    segments: int
    kernel_size: int
    clusters: int
    tau: float = 10.0
    pca_fraction: float = 0.25
    seed: int = 0
    restarts: int = 10
    use_pca: bool = True
    use_superpixels: bool = True
    use_smoothing: bool = True
    compactness: float = 10.0
    exclude_self_coding: bool = False
    normalize_embedding: bool = False

    def __post_init__(self):
        if not self.tau > 1.0:
            raise InputError(f"tau must exceed 1, got {self.tau}")
        if not 0.0 < self.rho < 1.0:
            raise InputError(f"rho must lie in (0, 1), got {self.rho}")
        if self.segments <= 1:
            raise InputError("segment request must exceed 1")
        if self.kernel_size < 1:
            raise InputError("kernel size must be >= 1")
        if self.clusters < 1:
            raise InputError("cluster count must be >= 1")
        if not 0.0 < self.pca_fraction <= 1.0:
            raise InputError("pca_fraction must lie in (0, 1]")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")
        if self.compactness <= 0:
            raise InputError("compactness must be positive")

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "rho": self.rho,
            "segments": self.segments,
            "kernel_size": self.kernel_size,
            "clusters": self.clusters,
            "pca_fraction": self.pca_fraction,
            "seed": self.seed,
            "restarts": self.restarts,
            "compactness": self.compactness,
            "exclude_self_coding": self.exclude_self_coding,
            "normalize_embedding": self.normalize_embedding,
            "toggles": {k: getattr(self, k) for k in _TOGGLE_KEYS},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineParams":
        unknown = set(data) - set(_PARAM_KEYS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k != "toggles"}
        toggles = data.get("toggles", {})
        bad = set(toggles) - set(_TOGGLE_KEYS)
        if bad:
            raise InputError(f"unknown toggle keys: {sorted(bad)}")
        kwargs.update(toggles)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise InputError(f"invalid config: {exc}") from exc

    def with_updates(self, **kwargs) -> "PipelineParams":
        return replace(self, **kwargs)


def load_params(path: str) -> PipelineParams:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    return PipelineParams.from_dict(data)


def _stage(timings: dict, name: str):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc, tb):
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - self.t0
            if exc is not None and not isinstance(exc, PipelineStageError):
                raise PipelineStageError(name, str(exc)) from exc
            return False

    return _Timer()


def _reduced_dim(bands: int, n: int, fraction: float) -> int:
    return min(min(bands, n), max(3, int(math.floor(fraction * bands))))


def _false_color(scores: np.ndarray, geometry) -> np.ndarray:
    channels = [reshape_row_to_grid(scores[ch], geometry)
                for ch in range(min(3, scores.shape[0]))]
    while len(channels) < 3:
        channels.append(channels[-1])
    return minmax_scale_channels(np.stack(channels, axis=-1))


def sc_ssc(cube: SpectralCube, params: PipelineParams) -> ClusterResult:
    """Run the full segmentation pipeline on a scene.

    Returns a ClusterResult with 1-based labels over the column-major pixel
    order, per-stage wall-clock timings, and bookkeeping info (realized
    segment count, dictionary size, skipped stages).
    """
    timings: dict = {}
    info: dict = {"skipped_stages": []}
    t_start = time.perf_counter()

    raw = vectorize(cube)
    n = raw.n

    with _stage(timings, "pca"):
        if params.use_pca:
            d = _reduced_dim(cube.bands, n, params.pca_fraction)
            model, scores = pca_fit_project(raw, d)
            features = unit_normalize(scores)
            pca_scores = scores.data
        else:
            features = unit_normalize(raw)
            pca_scores = None
            info["skipped_stages"].append("pca")

    with _stage(timings, "superpixels"):
        if params.use_superpixels:
            if pca_scores is None:
                d3 = min(3, min(cube.bands, n))
                _, scores3 = pca_fit_project(raw, d3)
                image = _false_color(scores3.data, cube.geometry)
            else:
                image = _false_color(pca_scores, cube.geometry)
            segmap = slic(image, params.segments, params.compactness)
        else:
            assignments = np.ones(n, dtype=np.int64)
            segmap = SegmentationMap(assignments, 1,
                                     np.array([n], dtype=np.int64),
                                     cube.geometry)
            info["skipped_stages"].append("superpixels")
    info["realized_segments"] = segmap.E

    with _stage(timings, "selection"):
        dictionary = build_dictionary(features, segmap, params.rho, params.tau)
    info["dictionary_size"] = dictionary.size

    with _stage(timings, "coding"):
        coeff = code_against_dictionary(features, dictionary, params.tau,
                                        exclude_self=params.exclude_self_coding)

    with _stage(timings, "smoothing"):
        k_s = params.kernel_size if params.use_smoothing else 1
        if not params.use_smoothing:
            info["skipped_stages"].append("smoothing")
        smoothed = smooth_coefficients(coeff, cube.geometry, k_s)

    with _stage(timings, "embedding"):
        tilde = normalize_abs_columns(smoothed)
        info["zero_columns"] = int(tilde.zero_columns.size)
        deg = degrees(tilde)
        embedding = spectral_embed(tilde, deg, params.clusters)
        if params.normalize_embedding:
            row_norms = np.linalg.norm(embedding, axis=1)
            embedding = embedding / np.maximum(row_norms, 1e-12)[:, None]

    with _stage(timings, "kmeans"):
        labels = kmeans(embedding, params.clusters, params.seed,
                        params.restarts)

    timings["total"] = time.perf_counter() - t_start
    return ClusterResult(labels, timings, params, info)
