"""Coupled low-rank subspace estimation for a tensor/panel pair.

Given a characteristics tensor ``x`` with p1 x ... x pd clustered modes (and
an optional trailing time mode) plus an outcome panel ``y`` sharing mode 1,
the iteration alternates truncated SVD updates of the per-mode bases.  The
mode-1 step operates on the column concatenation of the projected tensor
unfolding and ``y``, which is where the coupling enters; the remaining modes
follow the standard orthogonal-iteration update.  With ``y=None`` this
reduces to plain HOOI on the tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import lsvd, matricize, multi_mode_product, subspace_distance

__all__ = ["PchooiResult", "pchooi", "hooi"]


@dataclass(frozen=True)
class PchooiResult:
    bases: list[np.ndarray]
    x_hat: np.ndarray
    y_hat: np.ndarray | None
    iterations_used: int
    converged: bool


def _check_inputs(x: np.ndarray, y: np.ndarray | None, ranks) -> int:
    d = len(ranks)
    if x.ndim not in (d, d + 1):
        raise ValueError(f"tensor order {x.ndim} incompatible with {d} ranks")
    for i, m in enumerate(ranks):
        if not 1 <= m <= x.shape[i]:
            raise ValueError(f"rank {m} exceeds mode-{i + 1} dimension {x.shape[i]}")
    if y is not None:
        if x.ndim != d + 1:
            raise ValueError("a coupled panel requires an uncompressed trailing time mode")
        if y.shape != (x.shape[0], x.shape[-1]):
            raise ValueError(
                f"panel shape {y.shape} does not match tensor modes ({x.shape[0]}, {x.shape[-1]})"
            )
    return d


def _mode1_block(x_proj: np.ndarray, y: np.ndarray | None, omega: float) -> np.ndarray:
    block = matricize(x_proj, 0)
    if y is None:
        return block
    if omega != 1.0:
        block = math.sqrt(omega) * block
    return np.concatenate([block, y], axis=1)


def pchooi(
    x: np.ndarray,
    y: np.ndarray | None,
    ranks,
    max_iter: int = 50,
    tol: float = 1e-6,
    omega: float = 1.0,
) -> PchooiResult:
    """Estimate per-mode orthonormal bases for the clustered modes of ``x``.

    ``ranks`` gives the target subspace dimension of each clustered mode (any
    trailing time mode is never compressed).  ``omega`` down/up-weights the
    tensor block of the coupled mode-1 matrix (the tensor unfolding is scaled
    by sqrt(omega) before concatenation with ``y``); omega=0 recovers
    SVD-on-y, large omega approaches HOOI-on-x.

    Iterations stop once the per-mode projector movement
    max_i ||U_i U_i' - U_i_prev U_i_prev'||_2^2 falls below ``tol``.  Returns
    the bases together with the denoised tensor x ×_i U_i U_i' and panel
    U_1 U_1' y.
    """
    x = np.asarray(x, dtype=float)
    y = None if y is None else np.asarray(y, dtype=float)
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    d = _check_inputs(x, y, ranks)

    bases = [lsvd(_mode1_block(x, y, omega), ranks[0])]
    for i in range(1, d):
        bases.append(lsvd(matricize(x, i), ranks[i]))

    iterations = 0
    converged = max_iter == 0
    for _ in range(max_iter):
        iterations += 1
        prev = bases
        bases = list(prev)
        others = {j: prev[j].T for j in range(1, d)}
        bases[0] = lsvd(_mode1_block(multi_mode_product(x, others), y, omega), ranks[0])
        for i in range(1, d):
            others = {j: bases[j].T for j in range(i)}
            others.update({j: prev[j].T for j in range(i + 1, d)})
            bases[i] = lsvd(matricize(multi_mode_product(x, others), i), ranks[i])
        move = max(subspace_distance(bases[i], prev[i]) ** 2 for i in range(d))
        if move <= tol:
            converged = True
            break

    projectors = {i: bases[i] @ bases[i].T for i in range(d)}
    x_hat = multi_mode_product(x, projectors)
    y_hat = None if y is None else projectors[0] @ y
    return PchooiResult(bases, x_hat, y_hat, iterations, converged)


def hooi(x: np.ndarray, ranks, max_iter: int = 50, tol: float = 1e-6) -> PchooiResult:
    """Plain higher-order orthogonal iteration on the tensor alone."""
    return pchooi(x, None, ranks, max_iter=max_iter, tol=tol)


def tensor_informative(x: np.ndarray, ranks, slack: float = 0.0) -> bool:
    """Whether every clustered mode's unfolding clears the spectral noise edge.

    Checks that the rank-m_i-th singular value of each mode unfolding exceeds
    (1 + slack) times the i.i.d.-noise bulk edge sigma (sqrt(p_i) +
    sqrt(cols)), with sigma estimated from the median singular value of the
    (very wide) unfolding, which is robust to the low-rank signal.  The edge
    fluctuates on a far smaller scale than ``slack`` at panel sizes, so the
    test has essentially no false positives.  Below the edge the tensor is
    spectrally indistinguishable from noise, the regime where a
    noise-dominated block should not enter a coupled objective; use the test
    to pick the coupling weight (1 if informative, else 0).
    """
    x = np.asarray(x, dtype=float)
    for i, m in enumerate(ranks):
        unfolded = matricize(x, i)
        p, cols = unfolded.shape
        eigs = np.linalg.eigvalsh(unfolded @ unfolded.T)
        s = np.sqrt(np.maximum(eigs[::-1], 0.0))
        sigma = float(np.median(s)) / math.sqrt(cols)
        if s[m - 1] <= (1.0 + slack) * sigma * (math.sqrt(p) + math.sqrt(cols)):
            return False
    return True
