"""Clustering evaluation: confusion matrix, optimal label alignment,
per-class/average/overall accuracy, Cohen's kappa, and NMI.

Predicted labels are arbitrary cluster ids, so all accuracy numbers are
computed after a Hungarian alignment that maximizes the confusion trace;
pixels whose ground truth equals the ignore label are excluded everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import GroundTruth
from .errors import InputError

__all__ = ["EvaluationReport", "confusion_matrix", "align_labels",
           "kappa", "nmi", "evaluate"]


def _masked_pair(pred, gt):
    pred = np.asarray(pred)
    if isinstance(gt, GroundTruth):
        mask = gt.labeled_mask()
        gt_labels = gt.labels
    else:
        gt_labels = np.asarray(gt)
        mask = np.ones(gt_labels.shape, dtype=bool)
    if pred.shape != gt_labels.shape:
        raise InputError("prediction and ground truth lengths differ")
    if not mask.any():
        raise InputError("all pixels are unlabeled; nothing to evaluate")
    return pred[mask], gt_labels[mask]


def confusion_matrix(pred, gt):
    """Counts matrix over labeled pixels: entry (a, b) counts pixels of the
    a-th ground-truth class predicted as the b-th predicted class (classes
    sorted ascending). Returns (matrix, gt_classes, pred_classes)."""
    p, g = _masked_pair(pred, gt)
    gt_classes, g_idx = np.unique(g, return_inverse=True)
    pred_classes, p_idx = np.unique(p, return_inverse=True)
    counts = np.zeros((gt_classes.size, pred_classes.size), dtype=np.int64)
    np.add.at(counts, (g_idx, p_idx), 1)
    return counts, gt_classes, pred_classes


def _best_trace(matrix: np.ndarray) -> float:
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return float(matrix[rows, cols].sum())


def align_labels(confusion: np.ndarray) -> np.ndarray:
    """Trace-maximizing assignment of predicted columns to truth rows.

    Non-square inputs are zero-padded to s = max(k_gt, k_pred). Returns a
    length-s array `perm` with perm[c] = matched row of column c; among
    optimal assignments the lexicographically smallest one (scanning
    columns left to right) is chosen, which makes ties deterministic.
    """
    m = np.asarray(confusion, dtype=np.float64)
    if m.ndim != 2:
        raise InputError("confusion must be a 2-D matrix")
    if np.any(m < 0):
        raise InputError("confusion counts must be nonnegative")
    s = max(m.shape)
    padded = np.zeros((s, s))
    padded[: m.shape[0], : m.shape[1]] = m
    target = _best_trace(padded)

    perm = np.full(s, -1, dtype=np.int64)
    taken_rows: list[int] = []
    fixed_gain = 0.0
    for c in range(s):
        remaining_cols = np.arange(c + 1, s)
        for r in range(s):
            if r in taken_rows:
                continue
            rest_rows = np.array([x for x in range(s) if x not in taken_rows + [r]])
            sub = padded[np.ix_(rest_rows, remaining_cols)] if remaining_cols.size else np.zeros((0, 0))
            rest = _best_trace(sub) if sub.size else 0.0
            if fixed_gain + padded[r, c] + rest == target:
                perm[c] = r
                taken_rows.append(r)
                fixed_gain += padded[r, c]
                break
    return perm


def aligned_confusion(confusion: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Square confusion with columns reordered so the matched class pairs
    sit on the diagonal."""
    m = np.asarray(confusion)
    s = perm.size
    padded = np.zeros((s, s), dtype=m.dtype)
    padded[: m.shape[0], : m.shape[1]] = m
    out = np.zeros_like(padded)
    for c in range(s):
        out[:, perm[c]] = padded[:, c]
    return out


def kappa(confusion: np.ndarray) -> float:
    """Chance-corrected agreement of an aligned (square) confusion matrix."""
    m = np.asarray(confusion, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError("kappa expects a square (aligned) confusion matrix")
    n = m.sum()
    if n < 1:
        raise InputError("empty confusion matrix")
    p_o = np.trace(m) / n
    p_e = float(m.sum(axis=1) @ m.sum(axis=0)) / (n * n)
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def nmi(pred, gt) -> float:
    """Mutual information normalized by the geometric mean of the entropies
    (natural log), over labeled pixels. Two identical single-cluster
    partitions score 1; if exactly one side is constant the score is 0."""
    p, g = _masked_pair(pred, gt)
    if p.size < 2:
        raise InputError("need at least two labeled pixels")
    n = p.size
    _, p_idx = np.unique(p, return_inverse=True)
    _, g_idx = np.unique(g, return_inverse=True)
    joint = np.zeros((g_idx.max() + 1, p_idx.max() + 1))
    np.add.at(joint, (g_idx, p_idx), 1.0)
    pg = joint.sum(axis=1) / n
    pp = joint.sum(axis=0) / n
    h_g = float(-(pg * np.log(pg)).sum())
    h_p = float(-(pp * np.log(pp)).sum())
    if h_g == 0.0 and h_p == 0.0:
        return 1.0
    if h_g == 0.0 or h_p == 0.0:
        return 0.0
    nz = joint > 0
    pj = joint[nz] / n
    outer = np.outer(pg, pp)[nz]
    info = float((pj * np.log(pj / outer)).sum())
    return float(min(1.0, max(0.0, info / np.sqrt(h_g * h_p))))


@dataclass
class EvaluationReport:
    """Aligned confusion plus the standard accuracy metrics (percent)."""

    confusion: np.ndarray
    ua: np.ndarray
    aa: float
    oa: float
    kappa: float
    nmi: float
    n_evaluated: int
    gt_classes: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "ua": {int(c): float(u) for c, u in zip(self.gt_classes, self.ua)},
            "aa": float(self.aa),
            "oa": float(self.oa),
            "kappa": float(self.kappa),
            "nmi": float(self.nmi),
            "n_evaluated": int(self.n_evaluated),
        }

    def to_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def format_table(self) -> str:
        lines = ["class      UA[%]", "-" * 17]
        for cls, u in zip(self.gt_classes, self.ua):
            lines.append(f"{int(cls):<10d} {u:6.2f}")
        lines.append("-" * 17)
        lines.append(f"AA    {self.aa:6.2f}")
        lines.append(f"OA    {self.oa:6.2f}")
        lines.append(f"Kappa {self.kappa:6.4f}")
        lines.append(f"NMI   {self.nmi:6.4f}")
        lines.append(f"pixels evaluated: {self.n_evaluated}")
        return "\n".join(lines)


def evaluate(pred, gt: GroundTruth) -> EvaluationReport:
    """Full scoring of predicted labels against ground truth."""
    counts, gt_classes, _ = confusion_matrix(pred, gt)
    perm = align_labels(counts)
    aligned = aligned_confusion(counts, perm)
    n = int(counts.sum())
    k_gt = gt_classes.size

    row_sums = aligned[:k_gt].sum(axis=1).astype(np.float64)
    diag = np.diag(aligned)[:k_gt].astype(np.float64)
    ua = 100.0 * diag / np.maximum(row_sums, 1.0)
    oa = 100.0 * float(np.trace(aligned)) / n
    return EvaluationReport(
        confusion=aligned,
        ua=ua,
        aa=float(ua.mean()),
        oa=oa,
        kappa=kappa(aligned),
        nmi=nmi(pred, gt),
        n_evaluated=n,
        gt_classes=gt_classes,
    )
