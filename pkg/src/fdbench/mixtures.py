"""Diagonal-covariance Gaussian mixtures: EM fitting, log densities,
Monte Carlo KL divergence, and the mixture-likelihood generative score.

Diagonal covariances are deliberate: the feature matrices this package
consumes routinely have d in the hundreds with only a few hundred rows,
where full covariances are singular. A per-dimension variance floor keeps
components non-degenerate on duplicated rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import (DimensionMismatchError, ProtocolError, ValidationError)
from .store import (FeatureSet, ROLE_GENERATED, ROLE_REAL_TEST,
                    ROLE_REAL_TRAIN)

DEFAULT_VARIANCE_FLOOR = 1e-6
PRUNE_WEIGHT = 1e-8
LOG_2PI = math.log(2.0 * math.pi)

FLD_MODE_EM_KL = "em_kl"
FLD_MODE_ANCHORED_NLL = "anchored_nll"


@dataclass(frozen=True)
class GaussianMixture:
    """Weights, means, and diagonal variances of a mixture of Gaussians."""

    weights: np.ndarray      # (K,)
    means: np.ndarray        # (K, d)
    variances: np.ndarray    # (K, d)
    variance_floor: float = DEFAULT_VARIANCE_FLOOR

    def __post_init__(self) -> None:
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        mu = np.ascontiguousarray(self.means, dtype=np.float64)
        var = np.ascontiguousarray(self.variances, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValidationError("weights must be a non-empty 1-D vector")
        if mu.ndim != 2 or mu.shape[0] != w.size:
            raise ValidationError(
                f"means must be (K, d) with K = {w.size}, got {mu.shape}")
        if var.shape != mu.shape:
            raise ValidationError(
                f"variances shape {var.shape} must match means {mu.shape}")
        if np.any(w <= 0) or abs(float(w.sum()) - 1.0) > 1e-9:
            raise ValidationError(
                "weights must be strictly positive and sum to 1 within 1e-9")
        if np.any(var < self.variance_floor * (1.0 - 1e-12)):
            raise ValidationError(
                f"every variance must be >= the floor {self.variance_floor}")
        for arr, name in ((w, "weights"), (mu, "means"), (var, "variances")):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contain NaN or Inf")
            arr.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class EmTrace:
    """Per-iteration mean log-likelihood of an EM run."""

    log_likelihoods: tuple[float, ...]
    iterations: int
    converged: bool
    warnings: tuple[str, ...] = ()


def _component_log_pdfs(x: np.ndarray, g: GaussianMixture) -> np.ndarray:
    """log(w_k N(x_i; mu_k, diag var_k)) for every row/component pair."""
    out = np.empty((x.shape[0], g.n_components), dtype=np.float64)
    log_w = np.log(g.weights)
    for k in range(g.n_components):
        var = g.variances[k]
        diff = x - g.means[k]
        out[:, k] = log_w[k] - 0.5 * (
            (diff * diff / var).sum(axis=1)
            + np.log(var).sum() + x.shape[1] * LOG_2PI)
    return out


def gmm_log_density(g: GaussianMixture, x) -> float | np.ndarray:
    """Mixture log density at a single d-vector or a batch of rows.

    Uses log-sum-exp over components, so values far in the tails stay
    finite instead of underflowing.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != g.d:
        raise DimensionMismatchError(
            f"point dimension {arr.shape[1]} does not match mixture "
            f"dimension {g.d}")
    values = logsumexp(_component_log_pdfs(arr, g), axis=1)
    return float(values[0]) if single else values


def _kmeanspp_centers(data: np.ndarray, k: int,
                      rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, data.shape[1]), dtype=np.float64)
    centers[0] = data[rng.integers(data.shape[0])]
    closest = ((data - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            # all remaining mass sits on existing centers; pick uniformly
            idx = rng.integers(data.shape[0])
        else:
            idx = rng.choice(data.shape[0], p=closest / total)
        centers[i] = data[idx]
        closest = np.minimum(closest, ((data - centers[i]) ** 2).sum(axis=1))
    return centers


def fit_gmm_em(fs: FeatureSet, k: int, seed: int = 0, max_iter: int = 200,
               tol: float = 1e-6,
               variance_floor: float = DEFAULT_VARIANCE_FLOOR
               ) -> tuple[GaussianMixture, EmTrace]:
    """Fit a K-component diagonal mixture by EM.

    Seeding is k-means++ style from ``seed``; iteration stops when the
    mean log-likelihood gain drops below ``tol`` or ``max_iter`` is hit.
    Components whose weight collapses below 1e-8 are pruned after the
    final iteration, with a warning recorded in the trace.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    if k > fs.n:
        raise ValidationError(
            f"cannot fit {k} components to {fs.n} samples")
    data = np.asarray(fs.data, dtype=np.float64)
    n, d = data.shape
    rng = np.random.default_rng(seed)

    centers = _kmeanspp_centers(data, k, rng)
    assign = np.argmin(cdist(data, centers, "sqeuclidean"), axis=1)
    weights = np.empty(k)
    means = np.empty((k, d))
    variances = np.empty((k, d))
    global_var = np.maximum(data.var(axis=0), variance_floor)
    for j in range(k):
        members = data[assign == j]
        if members.shape[0] == 0:
            weights[j] = 1.0 / n
            means[j] = centers[j]
            variances[j] = global_var
        else:
            weights[j] = members.shape[0] / n
            means[j] = members.mean(axis=0)
            variances[j] = np.maximum(members.var(axis=0), variance_floor)
    weights = weights / weights.sum()

    mixture = GaussianMixture(weights, means, variances,
                              variance_floor=variance_floor)
    history: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        log_pdfs = _component_log_pdfs(data, mixture)
        log_norm = logsumexp(log_pdfs, axis=1)
        ll = float(log_norm.mean())
        resp = np.exp(log_pdfs - log_norm[:, None])

        bulk = resp.sum(axis=0)
        dead = bulk <= 0.0
        safe_bulk = np.where(dead, 1.0, bulk)
        weights = np.where(dead, 1e-12, bulk / n)
        means = (resp.T @ data) / safe_bulk[:, None]
        second = (resp.T @ (data * data)) / safe_bulk[:, None]
        variances = np.maximum(second - means * means, variance_floor)
        if np.any(dead):
            # responsibilities underflowed to zero: freeze those components
            # at their previous parameters; end-of-fit pruning removes them
            means[dead] = mixture.means[dead]
            variances[dead] = mixture.variances[dead]
        mixture = GaussianMixture(weights / weights.sum(), means, variances,
                                  variance_floor=variance_floor)

        history.append(ll)
        if len(history) >= 2 and history[-1] - history[-2] < tol:
            converged = True
            break

    warnings: list[str] = []
    keep = mixture.weights >= PRUNE_WEIGHT
    if not np.all(keep):
        warnings.append(
            f"pruned {int((~keep).sum())} degenerate component(s) with "
            f"weight < {PRUNE_WEIGHT}")
        mixture = GaussianMixture(
            mixture.weights[keep] / mixture.weights[keep].sum(),
            mixture.means[keep], mixture.variances[keep],
            variance_floor=variance_floor)
    trace = EmTrace(log_likelihoods=tuple(history), iterations=iterations,
                    converged=converged, warnings=tuple(warnings))
    return mixture, trace


_MC_CHUNK = 65536


def sample_mixture(g: GaussianMixture, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(g.n_components, size=n, p=g.weights)
    noise = rng.standard_normal((n, g.d))
    return g.means[idx] + noise * np.sqrt(g.variances[idx])


def kld_mog_mc(p: GaussianMixture, q: GaussianMixture, n_samples: int,
               seed: int = 0) -> tuple[float, float]:
    """Monte Carlo KL(p || q) with its standard error.

    Sampling is chunked under seeds spawned from ``seed``, so the result
    is deterministic however the chunks are scheduled.
    """
    if p.d != q.d:
        raise DimensionMismatchError(
            f"mixtures have dimensions {p.d} and {q.d}")
    if n_samples < 1000:
        raise ValidationError("n_samples must be at least 1000")
    n_chunks = (n_samples + _MC_CHUNK - 1) // _MC_CHUNK
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    drawn = 0
    for chunk_seed in seeds:
        take = min(_MC_CHUNK, n_samples - drawn)
        rng = np.random.default_rng(chunk_seed)
        x = sample_mixture(p, take, rng)
        diff = gmm_log_density(p, x) - gmm_log_density(q, x)
        total += float(diff.sum())
        total_sq += float((diff * diff).sum())
        drawn += take
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    std_error = math.sqrt(var / max(n_samples - 1, 1))
    return mean, std_error


def _require_role(fs: FeatureSet, role: str, arg: str) -> None:
    if fs.role != role:
        raise ProtocolError(
            f"{arg} must carry role {role!r}, got {fs.role!r} "
            f"(source_id={fs.source_id!r})")


def _mean_anchored_nll(sq: np.ndarray, log_sigma2: float, d: int) -> float:
    sigma2 = math.exp(log_sigma2)
    log_dens = logsumexp(-sq / (2.0 * sigma2), axis=1) \
        - math.log(sq.shape[1]) - 0.5 * d * (LOG_2PI + log_sigma2)
    return -float(log_dens.mean())


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section_min(fn, lo: float, hi: float, iters: int = 90) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d_ = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d_)
    for _ in range(iters):
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + _GOLDEN * (b - a)
            fd = fn(d_)
    return (a + b) / 2.0


def fld_score(gen: FeatureSet, real_train: FeatureSet,
              real_test: FeatureSet, mode: str = FLD_MODE_EM_KL, *,
              k: int | None = None, seed: int = 0, n_samples: int = 100000,
              max_iter: int = 200, tol: float = 1e-6) -> float:
    """Mixture-likelihood score of generated features against real data.

    ``em_kl`` fits mixtures to the real test set and to the generated set
    (same K and seed) and returns the Monte Carlo KL(test || generated).
    ``anchored_nll`` centers one isotropic component on every generated
    row, tunes the single shared bandwidth to maximize the likelihood of
    the training set (golden-section search over log-bandwidth), and
    returns the mean negative log-likelihood of the test set divided by d.

    Data roles are enforced: this score is only meaningful when generated,
    training, and test sets are what they claim to be.
    """
    _require_role(gen, ROLE_GENERATED, "gen")
    _require_role(real_train, ROLE_REAL_TRAIN, "real_train")
    _require_role(real_test, ROLE_REAL_TEST, "real_test")
    if not (gen.d == real_train.d == real_test.d):
        raise DimensionMismatchError(
            f"feature dimensions differ: gen={gen.d}, train={real_train.d}, "
            f"test={real_test.d}")

    if mode == FLD_MODE_EM_KL:
        if k is None:
            k = max(1, min(10, min(gen.n, real_test.n) // 20))
        test_mix, _ = fit_gmm_em(real_test, k, seed=seed, max_iter=max_iter,
                                 tol=tol)
        gen_mix, _ = fit_gmm_em(gen, k, seed=seed, max_iter=max_iter,
                                tol=tol)
        estimate, _ = kld_mog_mc(test_mix, gen_mix, n_samples, seed=seed)
        return estimate

    if mode == FLD_MODE_ANCHORED_NLL:
        anchors = np.asarray(gen.data, dtype=np.float64)
        train = np.asarray(real_train.data, dtype=np.float64)
        test = np.asarray(real_test.data, dtype=np.float64)
        d = anchors.shape[1]
        sq_train = cdist(train, anchors, "sqeuclidean")
        scale = float(sq_train.mean())
        if scale <= 0.0:
            scale = 1.0
        lo = math.log(scale) - 18.0
        hi = math.log(scale) + 6.0
        best = _golden_section_min(
            lambda t: _mean_anchored_nll(sq_train, t, d), lo, hi)
        sq_test = cdist(test, anchors, "sqeuclidean")
        return _mean_anchored_nll(sq_test, best, d) / d

    raise ValidationError(
        f"unknown mode {mode!r}; use {FLD_MODE_EM_KL!r} or "
        f"{FLD_MODE_ANCHORED_NLL!r}")
