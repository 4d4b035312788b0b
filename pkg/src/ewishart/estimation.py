"""Maximum likelihood estimation of the center matrix.

Two solvers are provided.  The fixed-point iteration repeatedly applies

    G <- (1/(nK)) sum_k u(tr(G^-1 S_k)) S_k,

whose unique SPD fixed point is the MLE.  The Riemannian solver minimizes
the negative log-likelihood directly on the SPD manifold equipped with
the model's information metric, using steepest-descent or conjugate-
gradient directions, a backtracking line search and a second-order
retraction.

Both solvers stop when the geodesic distance between successive iterates
drops below the tolerance (scale invariant, unlike a Frobenius test) and
record a per-iteration trace of cost, gradient norm, step distance and
cumulative wall time.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_solve

from .errors import DivergenceError, ParameterError
from .geometry import (
    egrad_to_rgrad,
    exp_map,
    fisher_distance,
    metric_inner,
    retract,
    vector_transport,
)
from .linalg import spd_cholesky, sym, validate_spd
from .models import (
    EWModel,
    as_samples,
    ensure_assumptions,
    euclidean_gradient,
    neg_log_likelihood,
    riemannian_gradient,
    trace_g_inv_s,
)

ALGORITHMS = ("fixed_point", "riemann_sd", "riemann_cg")
CG_RULES = ("polak_ribiere_plus", "fletcher_reeves")
RETRACTIONS = ("second_order", "exponential")

_DEFAULT_MAX_ITERATIONS = {"fixed_point": 10_000, "riemann_sd": 500, "riemann_cg": 500}


@dataclass
class FitOptions:
    """Solver configuration.

    ``init`` is one of ``"identity"``, ``"wishart_mle"`` (the closed-form
    scaled sample mean, the default) or an explicit SPD matrix.
    ``max_iterations`` defaults to 10000 for the fixed point and 500 for
    the Riemannian algorithms.  The line search starts from
    ``initial_step`` on the first iteration and from twice the previously
    accepted step afterwards (the Riemannian gradient scales with the
    number of samples, so the useful step is discovered once and reused).
    """

    algorithm: str = "riemann_cg"
    max_iterations: Optional[int] = None
    tolerance: float = 1e-8
    init: Union[str, ArrayLike] = "wishart_mle"
    initial_step: float = 1.0
    contraction: float = 0.5
    sufficient_decrease: float = 1e-4
    max_halvings: int = 60
    cg_rule: str = "polak_ribiere_plus"
    retraction: str = "second_order"
    keep_iterates: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.cg_rule not in CG_RULES:
            raise ParameterError(f"cg_rule must be one of {CG_RULES}, got {self.cg_rule!r}")
        if self.retraction not in RETRACTIONS:
            raise ParameterError(f"retraction must be one of {RETRACTIONS}")
        if not self.tolerance > 0.0:
            raise ParameterError("tolerance must be > 0")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")
        if not 0.0 < self.contraction < 1.0:
            raise ParameterError("contraction must lie in (0, 1)")
        if not 0.0 < self.sufficient_decrease <= 0.5:
            raise ParameterError("sufficient_decrease must lie in (0, 0.5]")
        if isinstance(self.init, str):
            if self.init not in ("identity", "wishart_mle"):
                raise ParameterError(f"unknown init {self.init!r}")
        else:
            self.init = np.asarray(self.init, dtype=float)
            if not validate_spd(self.init):
                raise ParameterError("user-supplied init must be SPD")

    def resolved_max_iterations(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return _DEFAULT_MAX_ITERATIONS[self.algorithm]


@dataclass
class FitReport:
    """Estimator output plus per-iteration convergence diagnostics.

    ``trace_*`` arrays all have length ``iterations``; entry ``t`` refers
    to the state after update ``t`` (cost and gradient norm at the new
    iterate, geodesic distance from the previous one, wall time since the
    solver started).
    """

    estimate: NDArray
    converged: bool
    iterations: int
    termination_reason: str
    trace_cost: NDArray
    trace_grad_norm: NDArray
    trace_step: NDArray
    trace_seconds: NDArray
    iterates: Optional[List[NDArray]] = field(default=None, repr=False)


def wishart_closed_form(samples: ArrayLike, n: int) -> NDArray:
    """Closed-form Wishart MLE, the scaled sample mean ``sum_k S_k / (nK)``."""
    samples = as_samples(samples)
    return sym(samples.mean(axis=0) / n)


def fixed_point_step(model: EWModel, g: ArrayLike, samples: ArrayLike) -> NDArray:
    """One application of the fixed-point map at ``g``.

    The output is a nonnegative combination of SPD matrices with at least
    one strictly positive weight (u > 0 on positive traces), hence SPD.
    """
    samples = as_samples(samples, p=model.p)
    k = samples.shape[0]
    weights = model.u(trace_g_inv_s(g, samples))
    return sym(np.einsum("k,kij->ij", weights, samples) / (model.n * k))


def gradient_norm(model: EWModel, g: ArrayLike, samples: ArrayLike) -> float:
    """Norm of the Riemannian gradient of the negative log-likelihood at ``g``."""
    coeff = model.coefficients()
    grad = riemannian_gradient(model, g, samples)
    return float(np.sqrt(max(metric_inner(coeff, g, grad, grad), 0.0)))


class _FixedPointState:
    """Cost, next fixed-point iterate and gradient norm at one iterate.

    Everything derives from a single Cholesky factorization of ``g``:
    the fixed-point image is the u-weighted sample mean, and the
    Euclidean gradient can be rewritten through it as
    ``(nK/2) G^-1 (G - FP(G)) G^-1``.
    """

    __slots__ = ("cost", "fp_next", "grad_norm")

    def __init__(self, model: EWModel, coeff, g: NDArray, samples: NDArray):
        n, p = model.n, model.p
        k = samples.shape[0]
        factor = spd_cholesky(g)
        x = cho_solve(factor, samples.transpose(1, 0, 2).reshape(p, k * p))
        traces = np.einsum("iki->k", x.reshape(p, k, p))
        logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        self.cost = 0.5 * n * k * logdet - float(np.sum(model.log_h(traces)))
        self.fp_next = sym(np.einsum("k,kij->ij", model.u(traces), samples) / (n * k))
        inv_g = cho_solve(factor, np.eye(p))
        egrad = sym(0.5 * n * k * (inv_g - inv_g @ self.fp_next @ inv_g))
        rgrad = egrad_to_rgrad(coeff, g, egrad)
        a = inv_g @ rgrad
        grad_sq = coeff.alpha * float(np.einsum("ij,ji->", a, a)) + coeff.beta * float(
            np.trace(a)
        ) ** 2
        self.grad_norm = float(np.sqrt(max(grad_sq, 0.0)))


def _initial_point(options: FitOptions, model: EWModel, samples: NDArray) -> NDArray:
    if isinstance(options.init, str):
        if options.init == "identity":
            return np.eye(model.p)
        return wishart_closed_form(samples, model.n)
    return np.asarray(options.init, dtype=float)


def fit_fixed_point(model: EWModel, samples: ArrayLike, options: Optional[FitOptions] = None) -> FitReport:
    """Compute the MLE by fixed-point iteration.

    Converges to the unique MLE from any SPD starting point when the
    standing assumptions on the generator hold (checked on entry).
    """
    if options is None:
        options = FitOptions(algorithm="fixed_point")
    samples = as_samples(samples, p=model.p, validate=True)
    ensure_assumptions(model)
    coeff = model.coefficients()
    max_iter = options.resolved_max_iterations()

    g = _initial_point(options, model, samples)
    state = _FixedPointState(model, coeff, g, samples)
    costs, gnorms, steps, seconds = [], [], [], []
    iterates = [g] if options.keep_iterates else None
    converged = False
    reason = "max_iterations"
    start = time.perf_counter()
    for _ in range(max_iter):
        g_next = state.fp_next
        if not np.all(np.isfinite(g_next)):
            raise DivergenceError("fixed-point iteration produced non-finite values")
        state = _FixedPointState(model, coeff, g_next, samples)
        if not np.isfinite(state.cost):
            raise DivergenceError("fixed-point iteration produced non-finite values")
        step = fisher_distance(coeff, g, g_next)
        g = g_next
        costs.append(state.cost)
        gnorms.append(state.grad_norm)
        steps.append(step)
        seconds.append(time.perf_counter() - start)
        if iterates is not None:
            iterates.append(g)
        if step < options.tolerance:
            converged = True
            reason = "tolerance"
            break
    return FitReport(
        estimate=g,
        converged=converged,
        iterations=len(costs),
        termination_reason=reason,
        trace_cost=np.asarray(costs),
        trace_grad_norm=np.asarray(gnorms),
        trace_step=np.asarray(steps),
        trace_seconds=np.asarray(seconds),
        iterates=iterates,
    )


def fit_riemannian(model: EWModel, samples: ArrayLike, options: Optional[FitOptions] = None) -> FitReport:
    """Compute the MLE by Riemannian optimization under the model's metric.

    The descent direction is the negative Riemannian gradient
    (``riemann_sd``) or a conjugate-gradient direction combining it with
    the transported previous direction (``riemann_cg``, the default).
    Step sizes come from a backtracking Armijo line search on the cost
    composed with the retraction; the cost trace is non-increasing.

    A line search that fails after ``max_halvings`` reductions terminates
    the solver with reason ``"stagnation"`` (the iterate at that point is
    at the cost function's floating-point floor, not an error).
    """
    if options is None:
        options = FitOptions(algorithm="riemann_cg")
    if options.algorithm == "fixed_point":
        raise ParameterError("fit_riemannian requires a Riemannian algorithm option")
    samples = as_samples(samples, p=model.p, validate=True)
    ensure_assumptions(model)
    coeff = model.coefficients()
    max_iter = options.resolved_max_iterations()
    use_cg = options.algorithm == "riemann_cg"
    retraction = retract if options.retraction == "second_order" else exp_map

    def rgrad(point):
        return egrad_to_rgrad(coeff, point, euclidean_gradient(model, point, samples))

    g = _initial_point(options, model, samples)
    cost = neg_log_likelihood(model, g, samples)
    if not np.isfinite(cost):
        raise DivergenceError("cost is non-finite at the initial point")
    grad = rgrad(g)
    grad_sq = metric_inner(coeff, g, grad, grad)

    costs, gnorms, steps, seconds = [], [], [], []
    iterates = [g] if options.keep_iterates else None
    prev = None  # (g, grad, grad_sq, xi, lam)
    converged = False
    reason = "max_iterations"
    start = time.perf_counter()
    for _ in range(max_iter):
        # Descent direction.
        xi = -grad
        slope = -grad_sq
        if use_cg and prev is not None:
            g_prev, grad_prev, grad_sq_prev, xi_prev, lam_prev = prev
            carried = vector_transport(g_prev, g, lam_prev * xi_prev)
            if options.cg_rule == "fletcher_reeves":
                kappa = grad_sq / grad_sq_prev
            else:
                transported_grad = vector_transport(g_prev, g, grad_prev)
                kappa = (grad_sq - metric_inner(coeff, g, grad, transported_grad)) / grad_sq_prev
                kappa = max(kappa, 0.0)
            candidate_xi = -grad + kappa * carried
            candidate_slope = metric_inner(coeff, g, grad, candidate_xi)
            if candidate_slope < 0.0:
                xi, slope = candidate_xi, candidate_slope

        # Backtracking line search with a relative floating-point slack on
        # the Armijo margin and a hard cap forbidding any cost increase.
        lam = options.initial_step if prev is None else min(options.initial_step, 2.0 * prev[4])
        slack = 16.0 * np.finfo(float).eps * max(1.0, abs(cost))
        accepted = False
        for _h in range(options.max_halvings + 1):
            candidate = retraction(g, lam * xi)
            candidate_cost = neg_log_likelihood(model, candidate, samples)
            if (
                np.isfinite(candidate_cost)
                and candidate_cost <= cost + options.sufficient_decrease * lam * slope + slack
                and candidate_cost <= cost
            ):
                accepted = True
                break
            lam *= options.contraction
        if not accepted:
            reason = "stagnation"
            break

        step = fisher_distance(coeff, g, candidate)
        prev = (g, grad, grad_sq, xi, lam)
        g, cost = candidate, candidate_cost
        grad = rgrad(g)
        grad_sq = metric_inner(coeff, g, grad, grad)
        costs.append(cost)
        gnorms.append(float(np.sqrt(max(grad_sq, 0.0))))
        steps.append(step)
        seconds.append(time.perf_counter() - start)
        if iterates is not None:
            iterates.append(g)
        if step < options.tolerance:
            converged = True
            reason = "tolerance"
            break
    return FitReport(
        estimate=g,
        converged=converged,
        iterations=len(costs),
        termination_reason=reason,
        trace_cost=np.asarray(costs),
        trace_grad_norm=np.asarray(gnorms),
        trace_step=np.asarray(steps),
        trace_seconds=np.asarray(seconds),
        iterates=iterates,
    )


def fit(model: EWModel, samples: ArrayLike, options: Optional[FitOptions] = None) -> FitReport:
    """Dispatch to the solver selected by ``options.algorithm``."""
    if options is None:
        options = FitOptions()
    if options.algorithm == "fixed_point":
        return fit_fixed_point(model, samples, options)
    return fit_riemannian(model, samples, options)
