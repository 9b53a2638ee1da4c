"""Scaling benchmark: pipeline vs the full self-expressive baseline on
synthetic scenes of growing size, with per-stage wall-clock timings."""

from __future__ import annotations

import math
import time

import numpy as np

from .baseline import DEFAULT_N_CAP, ssc_small_oracle
from .core import vectorize
from .errors import InputError
from .lasso import warm_up_solver
from .metrics import evaluate
from .pipeline import PipelineParams, sc_ssc
from .preprocess import pca_fit_project, unit_normalize
from .synth import make_subspace_scene

__all__ = ["run_benchmark", "write_bench_csv"]

# Four-phase decomposition used for reporting: spatial-similarity
# extraction, exemplar selection, coding, spectral clustering.
_PHASES = {
    "similarity": ("pca", "superpixels"),
    "selection": ("selection",),
    "coding": ("coding",),
    "clustering": ("smoothing", "embedding", "kmeans"),
}


def run_benchmark(sizes, rhos=(0.3,), n_classes=4, ambient_dim=30,
                  subspace_dim=3, noise=0.01, tau=10.0, kernel_size=5,
                  segment_pixels=49, seed=0, restarts=10,
                  include_baseline=True, baseline_cap=DEFAULT_N_CAP,
                  baseline_tol=1e-6) -> list[dict]:
    """Time the pipeline (per rho) and, where N fits under baseline_cap,
    the full baseline on square synthetic scenes of roughly the given
    pixel counts. Returns a list of row dicts (n, method, rho, stage,
    seconds, oa)."""
    if not sizes:
        raise InputError("no sizes given")
    warm_up_solver()
    rows: list[dict] = []
    for requested in sizes:
        side = max(2, int(round(math.sqrt(requested))))
        n = side * side
        cube, gt, _ = make_subspace_scene(
            n_classes=n_classes, ambient_dim=ambient_dim,
            subspace_dim=subspace_dim, rows=side, cols=side,
            noise=noise, seed=seed)
        for rho in rhos:
            params = PipelineParams(
                rho=rho,
                segments=max(n_classes, int(round(n / segment_pixels))),
                kernel_size=min(kernel_size, side),
                clusters=n_classes,
                tau=tau,
                seed=seed,
                restarts=restarts,
            )
            result = sc_ssc(cube, params)
            oa = evaluate(result.labels, gt).oa
            for phase, keys in _PHASES.items():
                secs = sum(result.timings.get(k, 0.0) for k in keys)
                rows.append(_row(n, "sc-ssc", rho, phase, secs, oa))
            rows.append(_row(n, "sc-ssc", rho, "total",
                             result.timings["total"], oa))

        if include_baseline and n <= baseline_cap:
            matrix = unit_normalize(pca_fit_project(
                vectorize(cube),
                max(3, int(math.floor(0.25 * ambient_dim))))[1])
            timings: dict = {}
            t0 = time.perf_counter()
            labels = ssc_small_oracle(matrix, tau, n_classes, tol=baseline_tol,
                                      seed=seed, restarts=restarts,
                                      max_n=max(n, baseline_cap),
                                      timings=timings)
            timings.setdefault("total", time.perf_counter() - t0)
            oa = evaluate(labels, gt).oa
            for stage in ("coding", "clustering", "total"):
                rows.append(_row(n, "ssc", float("nan"), stage,
                                 timings[stage], oa))
    return rows


def _row(n, method, rho, stage, seconds, oa) -> dict:
    return {"n": int(n), "method": method, "rho": rho, "stage": stage,
            "seconds": float(seconds), "oa": float(oa)}


def write_bench_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,method,rho,stage,seconds,oa\n")
        for r in rows:
            rho = "" if isinstance(r["rho"], float) and math.isnan(r["rho"]) \
                else f"{r['rho']}"
            fh.write(f"{r['n']},{r['method']},{rho},{r['stage']},"
                     f"{r['seconds']:.6f},{r['oa']:.4f}\n")
