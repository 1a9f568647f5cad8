"""Pure-NumPy implementations of the hot kernels.

Mirrors the compiled core's interface exactly; fdbench.backend picks
whichever is available (or whichever FDBENCH_BACKEND forces). Pairwise
kernel sums are tiled over row blocks so memory stays bounded; the
permutation tail count batches orderings and scores them vectorized.
"""

from __future__ import annotations

import itertools

import numpy as np

KIND_RBF = 0
KIND_POLY = 1
KIND_RQ = 2

_BLOCK = 512
_PERM_BATCH = 20000


def _kernel_block(g: np.ndarray, sqx: np.ndarray, sqy: np.ndarray,
                  kind: int, p0: float, p1: float, p2: float) -> np.ndarray:
    if kind == KIND_POLY:
        return (p1 * g + p2) ** int(p0)
    sq = np.maximum(sqx[:, None] + sqy[None, :] - 2.0 * g, 0.0)
    if kind == KIND_RBF:
        return np.exp(-sq / (2.0 * p0 * p0))
    if kind == KIND_RQ:
        return (1.0 + sq / (2.0 * p0 * p1 * p1)) ** (-p0)
    raise ValueError(f"unknown kernel kind code {kind}")


def pair_sum(x: np.ndarray, y: np.ndarray, kind: int,
             p0: float, p1: float, p2: float) -> float:
    """Sum of k(x_i, y_j) over all i, j."""
    sqy = np.einsum("ij,ij->i", y, y)
    total = 0.0
    for i0 in range(0, x.shape[0], _BLOCK):
        xb = x[i0:i0 + _BLOCK]
        sqx = np.einsum("ij,ij->i", xb, xb)
        total += float(_kernel_block(xb @ y.T, sqx, sqy, kind, p0, p1, p2).sum())
    return total


def gram(x: np.ndarray, y: np.ndarray, kind: int,
         p0: float, p1: float, p2: float) -> np.ndarray:
    """Full kernel matrix k(x_i, y_j), shape (len(x), len(y))."""
    out = np.empty((x.shape[0], y.shape[0]), dtype=np.float64)
    sqy = np.einsum("ij,ij->i", y, y)
    for i0 in range(0, x.shape[0], _BLOCK):
        xb = x[i0:i0 + _BLOCK]
        sqx = np.einsum("ij,ij->i", xb, xb)
        out[i0:i0 + _BLOCK] = _kernel_block(xb @ y.T, sqx, sqy,
                                            kind, p0, p1, p2)
    return out


def kendall_s(x: np.ndarray, y: np.ndarray) -> tuple[int, int]:
    """Concordant and discordant pair counts over all i < j."""
    i0, i1 = np.triu_indices(len(x), k=1)
    prod = np.sign(x[i0] - x[i1]) * np.sign(y[i0] - y[i1])
    return int((prod > 0).sum()), int((prod < 0).sum())


def perm_tail_count(x: np.ndarray, y: np.ndarray, s_abs: int) -> int:
    """Count orderings of y (all n! of them, with multiplicity for tied
    values) whose concordant-minus-discordant statistic against x has
    absolute value >= s_abs."""
    n = len(x)
    i0, i1 = np.triu_indices(n, k=1)
    sx = np.sign(x[i0] - x[i1])
    count = 0
    perms = itertools.permutations(y.tolist())
    while True:
        batch = np.array(list(itertools.islice(perms, _PERM_BATCH)))
        if batch.size == 0:
            break
        s = np.sign(batch[:, i0] - batch[:, i1]) @ sx
        count += int((np.abs(np.rint(s)).astype(np.int64) >= s_abs).sum())
    return count
