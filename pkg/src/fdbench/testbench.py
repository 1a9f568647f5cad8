"""Synthetic distributions with known ground truth.

Everything here exists to check the metric implementations against
independent references: elliptical-family samplers whose true moments are
known in closed form, an exact discrete 2-Wasserstein oracle built on an
exact assignment solve, and simulated quality ladders whose step-to-step
distance from the reference is known analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import ValidationError
from .moments import GaussianSummary, frechet_distance
from .store import FeatureSet, ROLE_GENERATED, ROLE_REAL_TEST
from .alignment import LadderEntry

GENERATOR_GAUSSIAN = "gaussian"
GENERATOR_STUDENT_T = "student_t"

W2_MAX_N = 4096

GROUND_TRUTH_METRIC = "ground_truth_fd"


@dataclass(frozen=True)
class EllipticalSpec:
    """Location, scale matrix, and radial generator of an elliptically
    contoured distribution."""

    mu: np.ndarray
    scale: np.ndarray
    generator: str = GENERATOR_GAUSSIAN
    dof: float | None = None

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        scale = np.atleast_2d(np.asarray(self.scale, dtype=np.float64))
        if scale.shape != (mu.size, mu.size):
            raise ValidationError(
                f"scale shape {scale.shape} does not match mu of size "
                f"{mu.size}")
        if self.generator not in (GENERATOR_GAUSSIAN, GENERATOR_STUDENT_T):
            raise ValidationError(
                f"unknown generator {self.generator!r}")
        if self.generator == GENERATOR_STUDENT_T:
            if self.dof is None or self.dof <= 2:
                raise ValidationError(
                    "student_t generator requires dof > 2 so the "
                    "covariance exists")
        try:
            np.linalg.cholesky(scale)
        except np.linalg.LinAlgError as exc:
            raise ValidationError(
                "scale matrix is not positive definite") from exc
        mu.flags.writeable = False
        scale.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "scale", scale)

    @property
    def d(self) -> int:
        return self.mu.size

    def covariance(self) -> np.ndarray:
        """True covariance implied by the scale matrix and generator."""
        if self.generator == GENERATOR_STUDENT_T:
            return self.scale * (self.dof / (self.dof - 2.0))
        return self.scale

    def summary(self) -> GaussianSummary:
        """Analytic moment summary (true mean and covariance)."""
        return GaussianSummary.from_moments(self.mu, self.covariance())


def sample_elliptical(spec: EllipticalSpec, n: int, seed: int,
                      role: str = ROLE_GENERATED,
                      source_id: str | None = None) -> FeatureSet:
    """Draw n rows from the spec's distribution, deterministically."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, spec.d))
    if spec.generator == GENERATOR_STUDENT_T:
        chi2 = rng.chisquare(spec.dof, size=n)
        z = z * np.sqrt(spec.dof / chi2)[:, None]
    chol = np.linalg.cholesky(spec.scale)
    data = spec.mu + z @ chol.T
    if source_id is None:
        source_id = f"{spec.generator}-seed{seed}"
    return FeatureSet(data=data.astype(np.float32), extractor_id="synthetic",
                      preprocessing_tag="none", role=role,
                      source_id=source_id)


def discrete_w2_exact(xs: FeatureSet, ys: FeatureSet) -> float:
    """Exact 2-Wasserstein distance between two equal-size empirical
    measures with uniform weights.

    Solves the underlying assignment problem exactly, so this serves as
    an independent oracle for the closed-form distance. O(n^3) worst
    case; capped at n = 4096.
    """
    x = np.asarray(xs.data, dtype=np.float64)
    y = np.asarray(ys.data, dtype=np.float64)
    if x.shape[0] != y.shape[0]:
        raise ValidationError(
            f"empirical measures must have equal size, got {x.shape[0]} "
            f"and {y.shape[0]}")
    if x.shape[1] != y.shape[1]:
        raise ValidationError(
            f"dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    if x.shape[0] > W2_MAX_N:
        raise ValidationError(
            f"exact assignment capped at n = {W2_MAX_N}, got {x.shape[0]}")
    cost = cdist(x, y, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


@dataclass(frozen=True)
class LadderSpec:
    """Recipe for a simulated quality ladder.

    Step k draws from the reference distribution shifted by
    mean_drifts[k] (in Euclidean norm, spread evenly over dimensions)
    with the scale matrix inflated by cov_factors[k].
    """

    reference: EllipticalSpec
    steps: int
    mean_drifts: tuple[float, ...]
    cov_factors: tuple[float, ...]
    n_per_step: int
    seed: int
    ladder_id: str = "sim"

    def __post_init__(self) -> None:
        if self.steps < 2:
            raise ValidationError("a ladder needs at least 2 steps")
        if len(self.mean_drifts) != self.steps:
            raise ValidationError(
                f"mean_drifts has {len(self.mean_drifts)} entries for "
                f"{self.steps} steps")
        if len(self.cov_factors) != self.steps:
            raise ValidationError(
                f"cov_factors has {len(self.cov_factors)} entries for "
                f"{self.steps} steps")
        if any(f <= 0 for f in self.cov_factors):
            raise ValidationError("cov_factors must be strictly positive")
        diffs = np.diff(self.cov_factors)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValidationError("cov_factors must be strictly monotone")
        if self.n_per_step < 2:
            raise ValidationError("n_per_step must be at least 2")


def make_quality_ladder(spec: LadderSpec
                        ) -> tuple[list[LadderEntry], dict[str, FeatureSet]]:
    """Simulate a quality ladder with known per-step distances.

    Returns one ladder entry per step, each carrying the closed-form
    distance to the reference under the metric name "ground_truth_fd"
    (further metric columns are the caller's to fill), plus the sampled
    feature sets keyed by model id and a "reference" set.
    """
    ref = spec.reference
    direction = np.full(ref.d, 1.0 / np.sqrt(ref.d))
    children = np.random.SeedSequence(spec.seed).spawn(spec.steps + 1)

    features: dict[str, FeatureSet] = {}
    ref_seed = int(children[0].generate_state(1, np.uint64)[0])
    features["reference"] = sample_elliptical(
        ref, spec.n_per_step, ref_seed, role=ROLE_REAL_TEST,
        source_id=f"{spec.ladder_id}-reference")

    entries = []
    ref_summary = ref.summary()
    for k in range(spec.steps):
        step_spec = EllipticalSpec(
            mu=ref.mu + spec.mean_drifts[k] * direction,
            scale=ref.scale * spec.cov_factors[k],
            generator=ref.generator, dof=ref.dof)
        model_id = f"{spec.ladder_id}-{k + 1}"
        step_seed = int(children[k + 1].generate_state(1, np.uint64)[0])
        features[model_id] = sample_elliptical(
            step_spec, spec.n_per_step, step_seed, role=ROLE_GENERATED,
            source_id=model_id)
        truth = frechet_distance(step_spec.summary(), ref_summary)
        entries.append(LadderEntry(
            model_id=model_id, ladder_id=spec.ladder_id,
            control_value=float(k + 1),
            metric_values={GROUND_TRUTH_METRIC: truth}))
    return entries, features
