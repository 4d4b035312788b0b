"""Generalized affine-invariant geometry on the SPD manifold.

The metric at a base point G is

    <xi, eta>_G = alpha * tr(G^-1 xi G^-1 eta) + beta * tr(G^-1 xi) tr(G^-1 eta),

which is positive definite whenever ``alpha > 0`` and ``alpha + p*beta > 0``.
The coefficients come from a statistical model (see :mod:`ewishart.models`);
this module never hard-codes a distribution.

Every formula involving G^-1 is evaluated through G^(+-1/2) conjugations so
that intermediates stay symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ParameterError, SingularityError
from .linalg import (
    matrix_exp_sym,
    matrix_log_spd,
    spd_solve,
    spd_sqrt,
    spd_sqrt_pair,
    sym,
    validate_spd,
)


@dataclass(frozen=True)
class MetricCoefficients:
    """Coefficients ``(alpha, beta)`` of the metric in dimension ``dim``."""

    alpha: float
    beta: float
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if not (self.alpha > 0.0 and self.alpha + self.dim * self.beta > 0.0):
            raise ParameterError(
                "metric requires alpha > 0 and alpha + p*beta > 0, got "
                f"alpha={self.alpha}, beta={self.beta}, p={self.dim}"
            )


def metric_inner(coeff: MetricCoefficients, g: ArrayLike, xi: ArrayLike, eta: ArrayLike) -> float:
    """Inner product ``<xi, eta>_G`` of two tangent vectors at ``g``."""
    a = spd_solve(g, xi)
    b = spd_solve(g, eta)
    cross = float(np.einsum("ij,ji->", a, b))
    return coeff.alpha * cross + coeff.beta * float(np.trace(a)) * float(np.trace(b))


def metric_norm(coeff: MetricCoefficients, g: ArrayLike, xi: ArrayLike) -> float:
    """Metric norm ``sqrt(<xi, xi>_G)``."""
    return float(np.sqrt(max(metric_inner(coeff, g, xi, xi), 0.0)))


def exp_map(g: ArrayLike, xi: ArrayLike) -> NDArray:
    """Riemannian exponential ``exp_G(xi) = G expm(G^-1 xi)``.

    Computed symmetrically as ``G^(1/2) expm(G^(-1/2) xi G^(-1/2)) G^(1/2)``;
    the result is SPD for every symmetric ``xi``.
    """
    half, inv_half = spd_sqrt_pair(g)
    inner = matrix_exp_sym(sym(inv_half @ np.asarray(xi, float) @ inv_half))
    return sym(half @ inner @ half)


def log_map(g: ArrayLike, s: ArrayLike) -> NDArray:
    """Riemannian logarithm, the inverse of :func:`exp_map`.

    Raises
    ------
    SingularityError
        If either argument fails SPD validation.
    """
    if not validate_spd(g) or not validate_spd(s):
        raise SingularityError("log_map requires two SPD matrices")
    half, inv_half = spd_sqrt_pair(g)
    inner = matrix_log_spd(sym(inv_half @ np.asarray(s, float) @ inv_half))
    return sym(half @ inner @ half)


def geodesic(g: ArrayLike, xi: ArrayLike, t: float) -> NDArray:
    """Point at time ``t`` on the geodesic with ``gamma(0) = g``, ``gamma'(0) = xi``."""
    return exp_map(g, float(t) * np.asarray(xi, float))


def retract(g: ArrayLike, xi: ArrayLike) -> NDArray:
    """Second-order retraction ``R_G(xi) = G + xi + xi G^-1 xi / 2``.

    Agrees with :func:`exp_map` up to third order in ``xi`` and stays SPD
    for arbitrarily large steps; if the computed result still fails SPD
    validation (extreme conditioning), falls back to the exponential.
    """
    g = np.asarray(g, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r = sym(g + xi + 0.5 * (xi @ spd_solve(g, xi)))
    if validate_spd(r):
        return r
    return exp_map(g, xi)


def fisher_distance_sq(coeff: MetricCoefficients, g: ArrayLike, s: ArrayLike) -> float:
    """Squared geodesic distance between two SPD matrices.

    ``delta^2 = alpha * ||logm(G^(-1/2) S G^(-1/2))||_F^2 + beta * (log det(G^-1 S))^2``.
    """
    if not validate_spd(g) or not validate_spd(s):
        raise SingularityError("fisher_distance_sq requires two SPD matrices")
    _, inv_half = spd_sqrt_pair(g)
    w = np.linalg.eigvalsh(sym(inv_half @ np.asarray(s, float) @ inv_half))
    if w[0] <= 0.0:
        raise SingularityError("fisher_distance_sq requires two SPD matrices")
    logs = np.log(w)
    return coeff.alpha * float(logs @ logs) + coeff.beta * float(logs.sum()) ** 2


def fisher_distance(coeff: MetricCoefficients, g: ArrayLike, s: ArrayLike) -> float:
    """Geodesic distance ``sqrt(fisher_distance_sq(...))``."""
    return float(np.sqrt(max(fisher_distance_sq(coeff, g, s), 0.0)))


def vector_transport(g: ArrayLike, s: ArrayLike, eta: ArrayLike) -> NDArray:
    """Parallel transport of ``eta`` from the tangent space at ``g`` to ``s``.

    Implements ``(S G^-1)^(1/2) eta (G^-1 S)^(1/2)`` with the square root
    taken as ``G^(1/2) (G^(-1/2) S G^(-1/2))^(1/2) G^(-1/2)`` so that no
    non-symmetric matrix root is ever formed.  The map is a linear isometry
    between the two tangent spaces for every valid ``(alpha, beta)``.
    """
    if not validate_spd(g) or not validate_spd(s):
        raise SingularityError("vector_transport requires two SPD matrices")
    half, inv_half = spd_sqrt_pair(g)
    w_half = spd_sqrt(sym(inv_half @ np.asarray(s, float) @ inv_half))
    e = half @ w_half @ inv_half
    return sym(e @ np.asarray(eta, float) @ e.T)


def egrad_to_rgrad(coeff: MetricCoefficients, g: ArrayLike, egrad: ArrayLike) -> NDArray:
    """Convert a Euclidean gradient into the Riemannian gradient.

    ``grad = (1/alpha) G egrad G - beta / (alpha (alpha + p beta)) tr(egrad G) G``
    is the unique tangent vector satisfying ``<grad, xi>_G = tr(egrad xi)``
    for every symmetric direction ``xi``.
    """
    g = np.asarray(g, dtype=float)
    egrad = np.asarray(egrad, dtype=float)
    p = coeff.dim
    eg = egrad @ g
    scale = coeff.beta / (coeff.alpha * (coeff.alpha + p * coeff.beta))
    return sym(g @ eg / coeff.alpha - scale * float(np.trace(eg)) * g)
