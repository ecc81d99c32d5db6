"""Separation and localization metrics with bucketed reporting.

SI-SDR uses the scale-invariant projection convention: the estimate is
compared against alpha * s with alpha = <s_hat, s> / ||s||^2, and the ratio
is clipped to +-60 dB so perfect reconstructions stay finite.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from labnet.datagen.scene import BUCKET_LABELS, azimuth_bucket
from labnet.errors import InvalidInputError

SI_SDR_CLIP_DB = 60.0
DOA_THRESHOLD_DEG = 5.0

_PERMUTATIONS = ((0, 1), (1, 0))


def si_sdr(reference: np.ndarray, estimate: np.ndarray, clip_db: float = SI_SDR_CLIP_DB) -> float:
    """Scale-invariant signal-to-distortion ratio in dB."""
    s = np.asarray(reference, dtype=np.float64).ravel()
    sh = np.asarray(estimate, dtype=np.float64).ravel()
    if s.shape != sh.shape:
        raise InvalidInputError(f"length mismatch: {s.shape} vs {sh.shape}")
    energy = float(s @ s)
    if energy <= 0:
        raise InvalidInputError("reference signal has zero norm")
    alpha = float(sh @ s) / energy
    target = alpha * s
    residual = sh - target
    num = float(target @ target)
    den = float(residual @ residual)
    if den <= 0 or num <= 0:
        value = clip_db if den <= 0 else -clip_db
    else:
        value = 10.0 * np.log10(num / den)
    return float(np.clip(value, -clip_db, clip_db))


def best_permutation_eval(references, estimates) -> tuple[tuple, list]:
    """Try both source assignments and keep the one with the higher mean SI-SDR.

    Returns (assignment, per-source SI-SDR), where assignment[i] is the
    estimate index paired with reference i. Ties keep the identity.
    """
    if len(references) != 2 or len(estimates) != 2:
        raise InvalidInputError("permutation search expects exactly two sources")
    best = None
    for perm in _PERMUTATIONS:
        scores = [si_sdr(references[i], estimates[perm[i]]) for i in range(2)]
        mean = sum(scores) / 2.0
        if best is None or mean > best[0]:
            best = (mean, perm, scores)
    return best[1], best[2]


def doa_metrics(estimated_deg, truth_deg, threshold_deg: float = DOA_THRESHOLD_DEG) -> tuple[float, float]:
    """Frame-level accuracy (%) and mean absolute error (degrees).

    Arguments:
        estimated_deg: per-frame angles, [..., N, T]
        truth_deg: per-observer ground truth, [..., N]
    A frame counts as correct when its absolute error is strictly below the
    threshold. Observers are scored separately and then averaged.
    """
    est = np.asarray(estimated_deg, dtype=np.float64)
    gt = np.asarray(truth_deg, dtype=np.float64)
    if est.ndim < 2 or gt.shape != est.shape[:-1]:
        raise InvalidInputError(
            f"expected estimates [..., N, T] with truth [..., N], got {est.shape} and {gt.shape}"
        )
    err = np.abs(est - gt[..., None])
    acc = 100.0 * (err < threshold_deg).mean(axis=-1)
    mae = err.mean(axis=-1)
    return float(acc.mean()), float(mae.mean())


@dataclass
class ScatterRecord:
    """Per-example evaluation record."""

    example_id: str
    azimuth_difference: float
    si_sdr_db: float
    doa_accuracy_pct: float | None = None
    doa_mae_deg: float | None = None

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "azimuth_difference": self.azimuth_difference,
            "si_sdr_db": self.si_sdr_db,
            "doa_accuracy_pct": self.doa_accuracy_pct,
            "doa_mae_deg": self.doa_mae_deg,
        }


@dataclass
class EvalReport:
    """Bucketed means plus the raw scatter records they were computed from.

    ``buckets`` maps a bucket label to its summary; empty buckets are absent
    rather than reported as zero. Averages are example-weighted.
    """

    buckets: dict = field(default_factory=dict)
    average: dict = field(default_factory=dict)
    total_examples: int = 0
    scatter: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "buckets": self.buckets,
            "average": self.average,
            "total_examples": self.total_examples,
            "scatter": [r.to_dict() for r in self.scatter],
        }


def _mean_or_none(values) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _summary(records) -> dict:
    return {
        "count": len(records),
        "si_sdr_db": _mean_or_none([r.si_sdr_db for r in records]),
        "doa_accuracy_pct": _mean_or_none([r.doa_accuracy_pct for r in records]),
        "doa_mae_deg": _mean_or_none([r.doa_mae_deg for r in records]),
    }


def bucket_report(records) -> EvalReport:
    """Aggregate scatter records into per-bucket and overall means."""
    records = list(records)
    report = EvalReport(total_examples=len(records), scatter=records)
    for label in BUCKET_LABELS:
        members = [r for r in records if azimuth_bucket(r.azimuth_difference) == label]
        if members:
            report.buckets[label] = _summary(members)
    if records:
        report.average = _summary(records)
    return report


def save_report(report: EvalReport, json_path, csv_path=None, plot_path=None) -> None:
    """Write the JSON report, the scatter CSV and optionally a scatter plot."""
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    if csv_path is not None:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["example_id", "azimuth_difference", "si_sdr_db",
                 "doa_accuracy_pct", "doa_mae_deg"]
            )
            for r in report.scatter:
                writer.writerow(
                    [r.example_id, r.azimuth_difference, r.si_sdr_db,
                     r.doa_accuracy_pct, r.doa_mae_deg]
                )
    if plot_path is not None:
        _scatter_plot(report, plot_path)


def _scatter_plot(report: EvalReport, path) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # plotting is an optional extra
        raise InvalidInputError(
            "scatter plots require matplotlib (install the 'plot' extra)"
        ) from exc
    xs = [r.azimuth_difference for r in report.scatter]
    ys = [r.si_sdr_db for r in report.scatter]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(xs, ys, s=12, alpha=0.6)
    ax.set_xlabel("azimuth difference (deg)")
    ax.set_ylabel("SI-SDR (dB)")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
