"""Dense tensor algebra: matricization, mode products, truncated SVD, subspace distance.

Dense tensors are plain numpy float arrays; ``shape`` plays the role of the
dimension vector.  The canonical linear order of a tensor is column-major
(first index fastest), which makes the mode-1 matricization of a
Fortran-contiguous array a zero-copy reshape -- mode 1 is the hot path in the
coupled algorithms.

Matricization follows the cyclic convention: the columns of the mode-k
unfolding enumerate the remaining modes in the cyclic order
(k+1, k+2, ..., K, 1, ..., k-1), with the first of these varying fastest.
For an order-3 tensor A this gives

    mat1(A)[i, j + n2*k] == mat2(A)[j, k + n3*i] == mat3(A)[k, i + n1*j]
        == A[i, j, k]

(0-based).  For order >= 4 the same cyclic rule applies; all downstream
algorithms only require that one fixed convention is used consistently.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "matricize",
    "refold",
    "mode_product",
    "lsvd",
    "subspace_distance",
]


def _check_mode(ndim: int, mode: int) -> None:
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for order-{ndim} tensor")


def matricize(x: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding of ``x`` (0-based mode index).

    Returns a ``x.shape[mode] x prod(other dims)`` matrix whose columns
    enumerate the remaining modes cyclically, first following mode varying
    fastest.
    """
    x = np.asarray(x)
    _check_mode(x.ndim, mode)
    perm = np.roll(np.arange(x.ndim), -mode)
    return x.transpose(perm).reshape((x.shape[mode], -1), order="F")


def refold(m: np.ndarray, mode: int, dims: tuple[int, ...]) -> np.ndarray:
    """Inverse of :func:`matricize`: rebuild the tensor with shape ``dims``."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    _check_mode(len(dims), mode)
    other = int(np.prod(dims)) // dims[mode]
    if m.shape != (dims[mode], other):
        raise ValueError(f"matrix shape {m.shape} does not refold into {dims} at mode {mode}")
    order = int(len(dims))
    perm = np.roll(np.arange(order), -mode)
    cyclic_dims = tuple(dims[p] for p in perm)
    return m.reshape(cyclic_dims, order="F").transpose(np.roll(np.arange(order), mode))


def mode_product(x: np.ndarray, mode: int, u: np.ndarray) -> np.ndarray:
    """k-mode product ``x x_mode u``: contracts ``x`` along ``mode`` with ``u``.

    ``u`` must have shape (r, x.shape[mode]); the result replaces that
    dimension with r.  Satisfies matricize(result, mode) == u @ matricize(x, mode)
    exactly (the product is computed in that form).
    """
    x = np.asarray(x)
    u = np.asarray(u)
    _check_mode(x.ndim, mode)
    if u.ndim != 2 or u.shape[1] != x.shape[mode]:
        raise ValueError(
            f"matrix of shape {u.shape} cannot contract mode {mode} of size {x.shape[mode]}"
        )
    new_dims = x.shape[:mode] + (u.shape[0],) + x.shape[mode + 1 :]
    return refold(u @ matricize(x, mode), mode, new_dims)


def multi_mode_product(x: np.ndarray, mats: dict[int, np.ndarray]) -> np.ndarray:
    """Apply several mode products ``{mode: matrix}``.

    Shrinking contractions are applied first so intermediate tensors stay
    small.
    """
    order = sorted(mats, key=lambda k: mats[k].shape[0] - mats[k].shape[1])
    out = x
    for mode in order:
        out = mode_product(out, mode, mats[mode])
    return out


def lsvd(a: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal basis of the top-``rank`` left singular subspace of ``a``.

    The sign of each column is fixed so its largest-magnitude entry is
    positive (ties broken by lowest row index), making results deterministic.
    When singular values are repeated at the rank boundary the returned
    subspace is one valid choice; compare projectors, not raw bases.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("lsvd expects a matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("lsvd requires finite entries")
    if not 1 <= rank <= min(a.shape):
        raise ValueError(f"rank {rank} invalid for matrix of shape {a.shape}")
    m, n = a.shape
    if n >= 4 * m and n >= 64:
        # Wide matrices: the left singular subspace is the top eigenspace of
        # the small Gram matrix, at a fraction of the SVD cost.
        _, vecs = np.linalg.eigh(a @ a.T)
        u = vecs[:, ::-1][:, :rank].copy()
    else:
        u, _, _ = np.linalg.svd(a, full_matrices=False)
        u = u[:, :rank].copy()
    for j in range(rank):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
    return u


def subspace_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Spectral-norm distance between the column spaces of two orthonormal bases.

    Equals ``||V V' - U U'||_2``, the sine of the largest principal angle;
    symmetric, in [0, 1], and 0 iff the spans coincide.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"basis shapes differ: {u.shape} vs {v.shape}")
    # largest singular value of (I - U U') V: numerically stable near zero,
    # unlike sqrt(1 - smin(U'V)^2)
    s = np.linalg.svd(v - u @ (u.T @ v), compute_uv=False)
    return float(min(1.0, s[0])) if s.size else 0.0
