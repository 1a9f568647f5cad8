"""Gaussian moment summaries and the Fréchet (2-Wasserstein) distance.

The distance between two Gaussians N(mu_a, Ca) and N(mu_b, Cb) has the
closed form

    FD^2 = ||mu_a - mu_b||^2 + tr(Ca + Cb - 2 (Ca Cb)^(1/2))

and the same expression is exact for any two elliptically contoured
distributions sharing a radial generator, which is what the synthetic
testbench exercises. The cross term is computed through the symmetric
product Ca^(1/2) Cb Ca^(1/2): its eigenvalues match those of Ca Cb but the
eigenproblem is symmetric, so the square root is deterministic and needs
no iterative solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatchError, IndefiniteCovarianceError,
                     InsufficientSamplesError, ValidationError)
from .store import FeatureSet

COV_SYMMETRY_ATOL = 1e-9
EIG_FLOOR_REL = 1e-6


@dataclass(frozen=True)
class GaussianSummary:
    """Mean vector and covariance matrix of a feature distribution.

    ``n_samples`` is the number of rows behind a fitted summary; analytic
    summaries built from known parameters carry ``n_samples = 0``.
    """

    mean: np.ndarray
    cov: np.ndarray
    n_samples: int = 0

    def __post_init__(self) -> None:
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        cov = np.ascontiguousarray(self.cov, dtype=np.float64)
        if mean.ndim != 1:
            raise ValidationError(f"mean must be 1-D, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ValidationError(
                f"cov shape {cov.shape} does not match mean of size {mean.size}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValidationError("summary contains NaN or Inf")
        if np.max(np.abs(cov - cov.T), initial=0.0) > COV_SYMMETRY_ATOL:
            raise ValidationError(
                f"cov is not symmetric within {COV_SYMMETRY_ATOL}")
        if self.n_samples == 1 or self.n_samples < 0:
            raise InsufficientSamplesError(
                "n_samples must be >= 2 for a fitted summary (0 marks an "
                "analytic one)")
        eigvals = np.linalg.eigvalsh(cov)
        lam_max = max(float(eigvals[-1]), 0.0)
        if float(eigvals[0]) < -EIG_FLOOR_REL * lam_max:
            raise IndefiniteCovarianceError(
                f"cov has eigenvalue {eigvals[0]:.3e}, below the floor "
                f"{-EIG_FLOOR_REL * lam_max:.3e}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.size

    @classmethod
    def from_moments(cls, mean, cov) -> "GaussianSummary":
        """Analytic summary from known parameters (n_samples = 0)."""
        return cls(mean=np.atleast_1d(np.asarray(mean, dtype=np.float64)),
                   cov=np.atleast_2d(np.asarray(cov, dtype=np.float64)))


def fit_gaussian_summary(fs: FeatureSet) -> GaussianSummary:
    """Sample mean and covariance (denominator n-1) of a feature set.

    The covariance is symmetrized as (M + M^T)/2 so the summary satisfies
    its invariants by construction.
    """
    if fs.n < 2:
        raise InsufficientSamplesError(
            f"need at least 2 samples to fit a Gaussian summary, got {fs.n}")
    data = np.asarray(fs.data, dtype=np.float64)
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (fs.n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianSummary(mean=mean, cov=cov, n_samples=fs.n)


def _regularized(cov: np.ndarray, eps: float | None,
                 floor_rel: float) -> np.ndarray:
    """Add jitter when eigenvalues sit in the tolerated negative band."""
    eigvals = np.linalg.eigvalsh(cov)
    lam_max = max(float(eigvals[-1]), 0.0)
    if float(eigvals[0]) < -floor_rel * lam_max:
        raise IndefiniteCovarianceError(
            f"cov has eigenvalue {eigvals[0]:.3e}, below the floor "
            f"{-floor_rel * lam_max:.3e}")
    if float(eigvals[0]) < 0.0:
        jitter = eps if eps is not None else floor_rel * np.trace(cov) / cov.shape[0]
        cov = cov + jitter * np.eye(cov.shape[0])
    return cov


def _sqrt_psd(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def trace_cross_sqrt(cov_a: np.ndarray, cov_b: np.ndarray) -> float:
    """tr((Ca Cb)^(1/2)) via the symmetric reduction.

    Eigenvalues of Ca^(1/2) Cb Ca^(1/2) equal those of Ca Cb; any that
    come out slightly negative from roundoff are clamped to zero before
    the square root.
    """
    root_a = _sqrt_psd(cov_a)
    inner = root_a @ cov_b @ root_a
    inner = (inner + inner.T) / 2.0
    w = np.linalg.eigvalsh(inner)
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def frechet_distance(a: GaussianSummary, b: GaussianSummary, *,
                     squared: bool = False, eps: float | None = None,
                     floor_rel: float = EIG_FLOOR_REL) -> float:
    """Fréchet distance between two Gaussian summaries.

    Returns the distance itself by default; ``squared=True`` returns the
    squared value, which is the FID reporting convention. ``eps`` overrides
    the default jitter (trace/d * 1e-6) applied when a covariance carries
    roundoff-negative eigenvalues inside the tolerated band; ``floor_rel``
    is the relative eigenvalue floor below which a covariance is rejected
    as indefinite.
    """
    if a.d != b.d:
        raise DimensionMismatchError(
            f"summaries have dimensions {a.d} and {b.d}")
    cov_a = _regularized(a.cov, eps, floor_rel)
    cov_b = _regularized(b.cov, eps, floor_rel)
    dmu = a.mean - b.mean
    fd2 = float(dmu @ dmu) + float(np.trace(cov_a)) + float(np.trace(cov_b)) \
        - 2.0 * trace_cross_sqrt(cov_a, cov_b)
    fd2 = max(fd2, 0.0)
    return fd2 if squared else float(np.sqrt(fd2))
