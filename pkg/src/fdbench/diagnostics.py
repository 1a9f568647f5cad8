"""Per-vector sparsity and entropy diagnostics for feature matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit, xlogy

from .errors import ValidationError
from .store import FeatureSet

DEFAULT_L0_THRESHOLD = 0.01


def sparsity_l0(fs: FeatureSet, threshold: float = DEFAULT_L0_THRESHOLD) -> np.ndarray:
    """Relative L0 per row: the fraction of entries with |v_i| > threshold."""
    if threshold <= 0:
        raise ValidationError("threshold must be positive")
    data = np.asarray(fs.data, dtype=np.float64)
    return (np.abs(data) > threshold).sum(axis=1) / fs.d


def entropy_nats(fs: FeatureSet) -> np.ndarray:
    """Entropy (nats) of each row after sigmoid squashing and sum-to-1
    normalization.

    The sigmoid is strictly positive, so normalization is always defined;
    float underflow in extreme tails is absorbed by the x*log(x) = 0
    convention at zero.
    """
    p = expit(np.asarray(fs.data, dtype=np.float64))
    p = p / p.sum(axis=1, keepdims=True)
    return -xlogy(p, p).sum(axis=1)


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-vector diagnostics plus their aggregates."""

    l0: np.ndarray
    entropy: np.ndarray
    threshold: float

    @property
    def l0_mean(self) -> float:
        return float(self.l0.mean())

    @property
    def l0_std(self) -> float:
        return float(self.l0.std(ddof=1)) if self.l0.size > 1 else 0.0

    @property
    def entropy_mean(self) -> float:
        return float(self.entropy.mean())

    @property
    def entropy_std(self) -> float:
        return float(self.entropy.std(ddof=1)) if self.entropy.size > 1 else 0.0

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "n_vectors": int(self.l0.size),
            "l0": {"values": [float(v) for v in self.l0],
                   "mean": self.l0_mean, "std": self.l0_std},
            "entropy_nats": {"values": [float(v) for v in self.entropy],
                             "mean": self.entropy_mean,
                             "std": self.entropy_std},
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "relative_l0", "entropy_nats"])
            for i, (a, b) in enumerate(zip(self.l0, self.entropy)):
                writer.writerow([i, repr(float(a)), repr(float(b))])


def diagnostics_report(fs: FeatureSet,
                       threshold: float = DEFAULT_L0_THRESHOLD) -> DiagnosticsReport:
    return DiagnosticsReport(l0=sparsity_l0(fs, threshold),
                             entropy=entropy_nats(fs), threshold=threshold)
