"""Kendall rank-correlation machinery and the ladder analyses built on it.

A "ladder" is an ordered family of generative-model variants (training
checkpoints, sampling-step counts) evaluated under several metrics at
once. Two analyses consume ladders:

* consistency: tau between every unordered metric pair, per ladder, with
  aggregate counts of strongly correlated pairs;
* alignment: tau between each metric and a downstream task score, with an
  exact small-n permutation p-value. By this artifact's convention
  tau = -1 is the ideal metric (metric falls as the score rises) and
  tau = +1 the worst.

Exact p-values enumerate the full permutation null; with no ties this
reduces to the classical inversion-count recursion, and with ties the
backend enumerates all n! orderings (feasible for the n <= 10 ladders
this package targets).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend
from .errors import (IncompleteLadderError, ParseError, ProtocolError,
                     UndefinedCorrelationError, ValidationError)

BAND_NS = "n.s."
BAND_1 = "*"
BAND_2 = "**"
BAND_3 = "***"

P_METHOD_EXACT = "exact"
P_METHOD_NORMAL = "normal_approx"
P_METHOD_AUTO = "auto"

EXACT_P_MAX_N = 10

LADDER_FIXED_COLUMNS = ("model_id", "ladder_id", "control_value")
SCORE_COLUMN = "downstream_score"


def significance_band(p: float) -> str:
    """Map a p-value to its significance band."""
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"p-value must be in (0, 1], got {p}")
    if p >= 0.05:
        return BAND_NS
    if p >= 0.01:
        return BAND_1
    if p >= 0.001:
        return BAND_2
    return BAND_3


def _as_vectors(x, y) -> tuple[np.ndarray, np.ndarray]:
    xa = np.ascontiguousarray(x, dtype=np.float64)
    ya = np.ascontiguousarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1:
        raise ValidationError("sequences must be one-dimensional")
    if xa.size != ya.size:
        raise ValidationError(
            f"sequence lengths differ: {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise ValidationError("need at least 2 observations")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValidationError("sequences contain NaN or Inf")
    return xa, ya


def _tie_counts(a: np.ndarray) -> np.ndarray:
    _, counts = np.unique(a, return_counts=True)
    return counts[counts > 1]


def kendall_tau_b(x, y) -> float:
    """Tie-corrected Kendall rank correlation (tau-b).

    Equals the plain tau when neither sequence has ties; undefined (and an
    error) when either sequence is entirely tied.
    """
    xa, ya = _as_vectors(x, y)
    conc, disc = backend.active().kendall_s(xa, ya)
    n = xa.size
    n0 = n * (n - 1) // 2
    n1 = int(sum(t * (t - 1) // 2 for t in _tie_counts(xa)))
    n2 = int(sum(t * (t - 1) // 2 for t in _tie_counts(ya)))
    if n1 >= n0 or n2 >= n0:
        raise UndefinedCorrelationError(
            "tau is undefined when a sequence is entirely tied")
    return (conc - disc) / math.sqrt((n0 - n1) * (n0 - n2))


def _inversion_counts(n: int) -> np.ndarray:
    """Number of n-permutations with each possible inversion count."""
    counts = np.array([1], dtype=np.float64)
    for i in range(2, n + 1):
        window = np.ones(i, dtype=np.float64)
        counts = np.convolve(counts, window)
    return counts


def _exact_p(xa: np.ndarray, ya: np.ndarray, s_obs: int) -> float:
    n = xa.size
    if n > EXACT_P_MAX_N:
        raise ValidationError(
            f"exact permutation p-value is limited to n <= {EXACT_P_MAX_N}, "
            f"got n = {n}")
    n_fact = math.factorial(n)
    if _tie_counts(xa).size == 0 and _tie_counts(ya).size == 0:
        # untied: S = n0 - 2*inversions, so the permutation null is the
        # classical inversion-count distribution
        n0 = n * (n - 1) // 2
        counts = _inversion_counts(n)
        ks = np.arange(counts.size)
        tail = counts[np.abs(n0 - 2 * ks) >= abs(s_obs)].sum()
        return float(tail) / n_fact
    count = backend.active().perm_tail_count(xa, ya, abs(s_obs))
    return count / n_fact


def _normal_p(xa: np.ndarray, ya: np.ndarray, s_obs: int) -> float:
    n = xa.size
    tx = _tie_counts(xa).astype(np.float64)
    ty = _tie_counts(ya).astype(np.float64)
    v0 = n * (n - 1) * (2 * n + 5)
    vt = float((tx * (tx - 1) * (2 * tx + 5)).sum())
    vu = float((ty * (ty - 1) * (2 * ty + 5)).sum())
    var = (v0 - vt - vu) / 18.0
    if n > 2:
        var += (float((tx * (tx - 1) * (tx - 2)).sum())
                * float((ty * (ty - 1) * (ty - 2)).sum())
                / (9.0 * n * (n - 1) * (n - 2)))
    var += (float((tx * (tx - 1)).sum()) * float((ty * (ty - 1)).sum())
            / (2.0 * n * (n - 1)))
    if var <= 0:
        raise UndefinedCorrelationError("degenerate tie structure")
    z = s_obs / math.sqrt(var)
    return math.erfc(abs(z) / math.sqrt(2.0))


def tau_p_value(x, y, method: str = P_METHOD_AUTO) -> tuple[float, str]:
    """Two-sided p-value for Kendall tau, with its significance band.

    ``exact`` enumerates the full permutation null (n <= 10); ``auto``
    uses it whenever feasible and falls back to the tie-corrected normal
    approximation for longer sequences.
    """
    xa, ya = _as_vectors(x, y)
    n = xa.size
    n0 = n * (n - 1) // 2
    n1 = int(sum(t * (t - 1) // 2 for t in _tie_counts(xa)))
    n2 = int(sum(t * (t - 1) // 2 for t in _tie_counts(ya)))
    if n1 >= n0 or n2 >= n0:
        raise UndefinedCorrelationError(
            "p-value is undefined when a sequence is entirely tied")
    conc, disc = backend.active().kendall_s(xa, ya)
    s_obs = conc - disc
    if method == P_METHOD_AUTO:
        method = P_METHOD_EXACT if n <= EXACT_P_MAX_N else P_METHOD_NORMAL
    if method == P_METHOD_EXACT:
        p = _exact_p(xa, ya, s_obs)
    elif method == P_METHOD_NORMAL:
        p = _normal_p(xa, ya, s_obs)
    else:
        raise ValidationError(
            f"unknown p-value method {method!r}")
    p = min(max(p, math.ulp(0.0)), 1.0)
    return p, significance_band(p)


@dataclass(frozen=True)
class LadderEntry:
    """One model variant's metric readings within a ladder."""

    model_id: str
    ladder_id: str
    control_value: float
    metric_values: dict[str, float] = field(default_factory=dict)
    downstream_score: float | None = None
    score_unit: str = ""

    def __post_init__(self) -> None:
        if not math.isfinite(self.control_value):
            raise ValidationError(
                f"{self.model_id}: control_value must be finite")


@dataclass(frozen=True)
class MetricAlignment:
    tau: float
    p_value: float
    band: str
    n: int


@dataclass(frozen=True)
class AlignmentResult:
    """Per-metric correlation against the downstream score."""

    per_metric: dict[str, MetricAlignment]
    score_key: str
    n: int

    def to_json_dict(self) -> dict:
        return {
            "score_key": self.score_key,
            "n": self.n,
            "metrics": {
                name: {"tau": m.tau, "p_value": m.p_value, "band": m.band,
                       "n": m.n}
                for name, m in self.per_metric.items()
            },
        }


@dataclass(frozen=True)
class ConsistencyMatrix:
    """Tau for every unordered metric pair, per ladder, plus aggregates."""

    ladder_taus: dict[str, dict[tuple[str, str], float]]
    ladder_metrics: dict[str, tuple[str, ...]]
    pairs_total: int
    pairs_above_05: int
    pairs_above_07: int

    def tau(self, ladder_id: str, metric_a: str, metric_b: str) -> float:
        if metric_a == metric_b:
            return 1.0
        key = (metric_a, metric_b) if metric_a < metric_b else (metric_b,
                                                                metric_a)
        return self.ladder_taus[ladder_id][key]

    def to_json_dict(self) -> dict:
        return {
            "pairs_total": self.pairs_total,
            "pairs_tau_above_0.5": self.pairs_above_05,
            "pairs_tau_above_0.7": self.pairs_above_07,
            "fraction_tau_above_0.5": self.pairs_above_05 / self.pairs_total,
            "fraction_tau_above_0.7": self.pairs_above_07 / self.pairs_total,
            "ladders": {
                ladder: {f"{a}|{b}": t for (a, b), t in sorted(taus.items())}
                for ladder, taus in self.ladder_taus.items()
            },
        }


def _grouped_by_ladder(entries: list[LadderEntry]) -> dict[str, list[LadderEntry]]:
    groups: dict[str, list[LadderEntry]] = {}
    for entry in entries:
        groups.setdefault(entry.ladder_id, []).append(entry)
    return groups


def _ladder_metric_columns(group: list[LadderEntry]) -> tuple[str, ...]:
    metrics = tuple(group[0].metric_values.keys())
    for entry in group[1:]:
        for name in metrics:
            if name not in entry.metric_values:
                raise IncompleteLadderError(
                    f"entry {entry.model_id!r} in ladder "
                    f"{entry.ladder_id!r} is missing metric {name!r}")
        extra = set(entry.metric_values) - set(metrics)
        if extra:
            raise IncompleteLadderError(
                f"entry {entry.model_id!r} in ladder {entry.ladder_id!r} "
                f"carries metrics {sorted(extra)} absent from the first "
                f"entry")
    return metrics


def consistency_matrix(entries: list[LadderEntry]) -> ConsistencyMatrix:
    """Tau between all metric pairs within each ladder."""
    groups = _grouped_by_ladder(entries)
    if not groups:
        raise ValidationError("no ladder entries given")
    ladder_taus: dict[str, dict[tuple[str, str], float]] = {}
    ladder_metrics: dict[str, tuple[str, ...]] = {}
    total = above_05 = above_07 = 0
    for ladder_id, group in groups.items():
        if len(group) < 2:
            raise ValidationError(
                f"ladder {ladder_id!r} needs at least 2 entries")
        metrics = _ladder_metric_columns(group)
        if len(metrics) < 2:
            raise ValidationError(
                f"ladder {ladder_id!r} needs at least 2 metrics")
        columns = {name: [e.metric_values[name] for e in group]
                   for name in metrics}
        taus: dict[tuple[str, str], float] = {}
        for i, a in enumerate(metrics):
            for b in metrics[i + 1:]:
                t = kendall_tau_b(columns[a], columns[b])
                taus[(a, b) if a < b else (b, a)] = t
                total += 1
                above_05 += t > 0.5
                above_07 += t > 0.7
        ladder_taus[ladder_id] = taus
        ladder_metrics[ladder_id] = metrics
    return ConsistencyMatrix(ladder_taus=ladder_taus,
                             ladder_metrics=ladder_metrics,
                             pairs_total=total, pairs_above_05=above_05,
                             pairs_above_07=above_07)


def alignment_report(entries: list[LadderEntry],
                     score_key: str = SCORE_COLUMN,
                     p_method: str = P_METHOD_AUTO
                     ) -> tuple[AlignmentResult, list[dict]]:
    """Correlate each metric with the downstream score across a ladder.

    Returns the per-metric result plus a plot-data table with reciprocal
    metric columns (1/value; zero maps to the string sentinel "inf"),
    one row per model.
    """
    if len(entries) < 3:
        raise ValidationError(
            f"alignment needs at least 3 ladder entries, got {len(entries)}")
    for entry in entries:
        if entry.downstream_score is None:
            raise ProtocolError(
                f"entry {entry.model_id!r} has no downstream score")
    metrics = _ladder_metric_columns(entries)
    scores = [e.downstream_score for e in entries]
    per_metric: dict[str, MetricAlignment] = {}
    for name in metrics:
        values = [e.metric_values[name] for e in entries]
        t = kendall_tau_b(values, scores)
        p, band = tau_p_value(values, scores, method=p_method)
        per_metric[name] = MetricAlignment(tau=t, p_value=p, band=band,
                                           n=len(entries))
    plot_rows = []
    for entry in entries:
        row: dict = {"model_id": entry.model_id}
        for name in metrics:
            v = entry.metric_values[name]
            row[f"inv_{name}"] = "inf" if v == 0 else 1.0 / v
        row[score_key] = entry.downstream_score
        plot_rows.append(row)
    result = AlignmentResult(per_metric=per_metric, score_key=score_key,
                             n=len(entries))
    return result, plot_rows


def read_ladder_csv(path: str | Path,
                    score_key: str = SCORE_COLUMN) -> list[LadderEntry]:
    """Load ladder entries from the fixture CSV format.

    Expected header: model_id, ladder_id, control_value, one column per
    metric, and optionally a score column (``score_key``); empty score
    cells mean "no downstream measurement".
    """
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty ladder file")
        missing = [c for c in LADDER_FIXED_COLUMNS
                   if c not in reader.fieldnames]
        if missing:
            raise ParseError(f"{path}: missing required columns {missing}")
        metric_names = [c for c in reader.fieldnames
                        if c not in LADDER_FIXED_COLUMNS and c != score_key]
        entries = []
        for lineno, row in enumerate(reader, start=2):
            try:
                metric_values = {name: float(row[name])
                                 for name in metric_names
                                 if row[name] not in (None, "")}
                raw_score = row.get(score_key)
                score = (float(raw_score)
                         if raw_score not in (None, "") else None)
                entries.append(LadderEntry(
                    model_id=row["model_id"],
                    ladder_id=row["ladder_id"],
                    control_value=float(row["control_value"]),
                    metric_values=metric_values,
                    downstream_score=score))
            except (TypeError, ValueError) as exc:
                raise ParseError(
                    f"{path}: bad numeric value at line {lineno}") from exc
    if not entries:
        raise ParseError(f"{path}: no ladder entries")
    return entries


def write_ladder_csv(entries: list[LadderEntry], path: str | Path,
                     score_key: str = SCORE_COLUMN) -> None:
    metrics = _ladder_metric_columns(entries)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(LADDER_FIXED_COLUMNS) + list(metrics)
                        + [score_key])
        for e in entries:
            row = [e.model_id, e.ladder_id, repr(float(e.control_value))]
            row += [repr(float(e.metric_values[m])) for m in metrics]
            row.append("" if e.downstream_score is None
                       else repr(float(e.downstream_score)))
            writer.writerow(row)
