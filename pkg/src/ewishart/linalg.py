"""Dense symmetric / SPD linear algebra primitives.

All matrix functions (exp, log, sqrt) go through the symmetric
eigendecomposition: the matrices handled here are small (p up to a few
hundred) and symmetric, so the spectral route is both stable and exact
enough.  Every operation symmetrizes its output to suppress
floating-point drift; results stay valid inputs for the next call.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import NumericInputError, RangeError, SingularityError

# Relative eigenvalue threshold below which a matrix is treated as singular.
SPD_TOLERANCE = 1e-12

# log of the largest double; eigenvalues above this overflow exp().
_EXP_OVERFLOW = np.log(np.finfo(np.float64).max)


def sym(a: ArrayLike) -> NDArray:
    """Symmetric part ``(a + a.T) / 2`` (transposing the last two axes)."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _check_square_finite(m: ArrayLike, name: str = "matrix") -> NDArray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NumericInputError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericInputError(f"{name} contains non-finite entries")
    return m


def sym_eig(m: ArrayLike) -> tuple[NDArray, NDArray]:
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : array, shape (p, p)
        Symmetric matrix (symmetrized internally before factorization).

    Returns
    -------
    eigenvalues : array, shape (p,)
        In ascending order.
    eigenvectors : array, shape (p, p)
        Orthogonal; column ``i`` pairs with ``eigenvalues[i]`` so that
        ``V @ diag(w) @ V.T`` reconstructs ``m``.
    """
    m = _check_square_finite(m)
    w, v = np.linalg.eigh(sym(m))
    return w, v


def _spectral_map(m: ArrayLike, fn) -> NDArray:
    w, v = sym_eig(m)
    return sym((v * fn(w)) @ v.T)


def matrix_exp_sym(x: ArrayLike) -> NDArray:
    """Matrix exponential of a symmetric matrix; the result is SPD."""
    w, v = sym_eig(x)
    if w[-1] > _EXP_OVERFLOW:
        raise RangeError(f"matrix exponential overflows: max eigenvalue {w[-1]:.3g}")
    return sym((v * np.exp(w)) @ v.T)


def matrix_log_spd(s: ArrayLike) -> NDArray:
    """Matrix logarithm of an SPD matrix; the result is symmetric."""
    w, v = sym_eig(s)
    if w[0] <= 0.0 or w[0] < 1e-300:
        raise SingularityError(f"matrix logarithm needs SPD input: min eigenvalue {w[0]:.3g}")
    return sym((v * np.log(w)) @ v.T)


def spd_sqrt(s: ArrayLike) -> NDArray:
    """Symmetric square root of an SPD matrix."""
    w, v = sym_eig(s)
    if w[0] <= 0.0:
        raise SingularityError(f"square root needs SPD input: min eigenvalue {w[0]:.3g}")
    return sym((v * np.sqrt(w)) @ v.T)


def spd_inv_sqrt(s: ArrayLike) -> NDArray:
    """Inverse of :func:`spd_sqrt`."""
    w, v = sym_eig(s)
    if w[0] <= 0.0:
        raise SingularityError(f"inverse square root needs SPD input: min eigenvalue {w[0]:.3g}")
    return sym((v / np.sqrt(w)) @ v.T)


def spd_sqrt_pair(s: ArrayLike) -> tuple[NDArray, NDArray]:
    """Both ``s**(1/2)`` and ``s**(-1/2)`` from a single factorization."""
    w, v = sym_eig(s)
    if w[0] <= 0.0:
        raise SingularityError(f"square root needs SPD input: min eigenvalue {w[0]:.3g}")
    r = np.sqrt(w)
    return sym((v * r) @ v.T), sym((v / r) @ v.T)


def spd_cholesky(s: ArrayLike):
    """Cholesky factorization usable with :func:`scipy.linalg.cho_solve`."""
    s = _check_square_finite(s)
    try:
        return cho_factor(sym(s), lower=True)
    except LinAlgError as exc:
        raise SingularityError(f"Cholesky breakdown: {exc}") from exc


def spd_solve(s: ArrayLike, b: ArrayLike) -> NDArray:
    """Solve ``s @ x = b`` for SPD ``s`` via Cholesky factorization.

    ``b`` may be a vector, a matrix with ``p`` rows, or a stack of
    matrices with shape ``(..., p, m)``.
    """
    factor = spd_cholesky(s)
    b = np.asarray(b, dtype=float)
    if b.ndim <= 2:
        return cho_solve(factor, b)
    p = b.shape[-2]
    flat = np.moveaxis(b, -2, 0).reshape(p, -1)
    x = cho_solve(factor, flat)
    return np.moveaxis(x.reshape((p,) + b.shape[:-2] + b.shape[-1:]), 0, -2)


def spd_logdet(s: ArrayLike) -> float:
    """log det of an SPD matrix, computed from its Cholesky factor."""
    factor, _ = spd_cholesky(s)
    return 2.0 * float(np.sum(np.log(np.diag(factor))))


def validate_spd(m: ArrayLike, tol: float = SPD_TOLERANCE) -> bool:
    """True iff ``m`` is symmetric with min eigenvalue > tol * max eigenvalue.

    Never raises: non-finite, non-square or non-symmetric inputs simply
    return False.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
        return False
    scale = np.abs(m).max()
    if scale > 0 and np.abs(m - m.T).max() > 1e-10 * scale:
        return False
    w = np.linalg.eigvalsh(sym(m))
    return bool(w[0] > tol * max(w[-1], 0.0))
