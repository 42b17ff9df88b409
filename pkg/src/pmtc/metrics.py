"""Clustering and estimation metrics: permutation-aligned error rate,
misclustering loss, block-center separations, and total R-squared."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .membership import Membership
from .tensor import matricize, multi_mode_product

__all__ = [
    "cer",
    "misclustering_loss",
    "separations",
    "SeparationStats",
    "EvalInput",
    "total_r2",
    "rescaled_core_rows",
]

_EXHAUSTIVE_MAX = 8


def _confusion(g_hat: Membership, g_true: Membership) -> np.ndarray:
    r = g_true.num_clusters
    c = np.zeros((r, r), dtype=np.int64)
    np.add.at(c, (g_hat.labels, g_true.labels), 1)
    return c


def cer(g_hat: Membership, g_true: Membership, method: str = "auto") -> tuple[float, np.ndarray]:
    """Misclustering error rate and the permutation achieving it.

    Minimizes the fraction of items with ``g_hat != perm(g_true)`` over all
    relabelings; the returned ``perm`` maps each true label to its matched
    estimated label.  ``method`` selects the matcher: exhaustive enumeration
    (the oracle, default for r <= 8) or maximum-weight bipartite matching on
    the confusion matrix.
    """
    if g_hat.size != g_true.size or g_hat.num_clusters != g_true.num_clusters:
        raise ValueError("labelings must have equal length and cluster count")
    c = _confusion(g_hat, g_true)
    r = g_true.num_clusters
    if method == "auto":
        method = "exhaustive" if r <= _EXHAUSTIVE_MAX else "hungarian"
    if method == "exhaustive":
        best, best_perm = -1, None
        for perm in itertools.permutations(range(r)):
            hits = sum(c[perm[a], a] for a in range(r))
            if hits > best:
                best, best_perm = hits, perm
        perm = np.array(best_perm, dtype=np.int64)
    elif method == "hungarian":
        rows, cols = linear_sum_assignment(-c)
        perm = np.empty(r, dtype=np.int64)
        perm[cols] = rows
        best = int(c[rows, cols].sum())
    else:
        raise ValueError(f"unknown method {method!r}")
    return 1.0 - best / g_true.size, perm


def misclustering_loss(
    g_hat: Membership,
    g_true: Membership,
    center_rows: np.ndarray,
    s_y: np.ndarray | None = None,
    mode: int = 1,
    perm: np.ndarray | None = None,
) -> float:
    """Average squared distance between assigned and true block centers.

    ``center_rows`` holds the rescaled centroid rows of this mode
    (see :func:`rescaled_core_rows`); for the coupled mode (``mode == 1``)
    the squared panel-centroid discrepancy from ``s_y`` is added.  ``perm``
    aligns true labels to estimated labels; when absent, the error-rate
    optimal permutation of this pair is used (a refinement trace should pass
    the permutation frozen at its initialization).
    """
    if perm is None:
        perm = cer(g_hat, g_true)[1]
    center_rows = np.asarray(center_rows, dtype=float)
    a, b = g_hat.labels, perm[g_true.labels]
    loss = np.sum((center_rows[a] - center_rows[b]) ** 2, axis=1)
    if mode == 1 and s_y is not None:
        s_y = np.asarray(s_y, dtype=float)
        loss = loss + np.sum((s_y[a] - s_y[b]) ** 2, axis=1)
    return float(loss.mean())


def _min_pairwise_sq(rows: np.ndarray) -> float:
    r = rows.shape[0]
    if r < 2:
        return math.inf
    best = math.inf
    for j in range(r - 1):
        d = rows[j + 1 :] - rows[j]
        best = min(best, float(np.min(np.einsum("ij,ij->i", d, d))))
    return best


def rescaled_core_rows(
    core: np.ndarray, memberships: list[Membership], mode: int
) -> np.ndarray:
    """Mode-``mode`` (1-based) unfolding of the core with every other
    clustered mode scaled by its square-root cluster sizes."""
    i = mode - 1
    scales = {
        j: np.diag(np.sqrt(m.cluster_sizes.astype(float)))
        for j, m in enumerate(memberships)
        if j != i
    }
    return matricize(multi_mode_product(core, scales), i)


@dataclass(frozen=True)
class SeparationStats:
    """Minimum pairwise squared distances between rescaled block centers.

    ``delta_sq[0]`` includes the panel-centroid term when one is present;
    modes with a single cluster carry an infinity sentinel.
    """

    delta_sq: tuple[float, ...]
    delta_x_sq: tuple[float, ...]
    delta_y_sq: float | None
    delta_min: float

    @property
    def degenerate(self) -> bool:
        return any(v == 0.0 for v in self.delta_sq if math.isfinite(v))


def separations(
    core: np.ndarray, memberships: list[Membership], s_y: np.ndarray | None = None
) -> SeparationStats:
    """Separation statistics of a block model with the given memberships."""
    core = np.asarray(core, dtype=float)
    d = len(memberships)
    delta_x: list[float] = []
    delta: list[float] = []
    y_sq = None if s_y is None else _min_pairwise_sq(np.asarray(s_y, dtype=float))
    for i in range(d):
        if memberships[i].num_clusters == 1:
            delta_x.append(math.inf)
            delta.append(math.inf)
            continue
        rows = rescaled_core_rows(core, memberships, i + 1)
        if i == 0 and s_y is not None:
            joint = np.concatenate([rows, np.asarray(s_y, dtype=float)], axis=1)
            delta_x.append(_min_pairwise_sq(rows))
            delta.append(_min_pairwise_sq(joint))
        else:
            dx = _min_pairwise_sq(rows)
            delta_x.append(dx)
            delta.append(dx)
    return SeparationStats(
        tuple(delta),
        tuple(delta_x),
        y_sq,
        math.sqrt(min(delta)) if delta else math.inf,
    )


@dataclass(frozen=True)
class EvalInput:
    """Aligned panel, factor realizations, market-excess benchmark,
    mode-1 membership, and group-level loadings."""

    y: np.ndarray
    factors: np.ndarray
    market_excess: np.ndarray
    membership: Membership
    loadings: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        f = np.asarray(self.factors, dtype=float)
        mkt = np.asarray(self.market_excess, dtype=float).ravel()
        b = np.asarray(self.loadings, dtype=float)
        if y.shape[1] != f.shape[1] or y.shape[1] != mkt.size:
            raise ValueError("time dimensions of returns, factors, market differ")
        if self.membership.size != y.shape[0]:
            raise ValueError("membership length does not match panel rows")
        if b.shape != (self.membership.num_clusters, f.shape[0]):
            raise ValueError("loadings shape must be (clusters, factors)")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "factors", f)
        object.__setattr__(self, "market_excess", mkt)
        object.__setattr__(self, "loadings", b)


def total_r2(inp: EvalInput) -> float:
    """One minus the factor-model residual sum of squares over the residuals
    against the market-excess benchmark.  May be negative; the CLI reports it
    in percent."""
    fitted = inp.loadings[inp.membership.labels] @ inp.factors
    num = float(np.sum((inp.y - fitted) ** 2))
    den = float(np.sum((inp.y - inp.market_excess[np.newaxis, :]) ** 2))
    if den == 0.0:
        raise ZeroDivisionError("market benchmark explains the panel exactly")
    return 1.0 - num / den
