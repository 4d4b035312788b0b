"""Elliptical Wishart statistical models.

A random SPD matrix S follows an Elliptical Wishart distribution with
center G (SPD, p x p), degrees of freedom n > p and density generator h
when its density is

    f(S | G) = C * det(G)^(-n/2) * det(S)^((n-p-1)/2) * h(tr(G^-1 S)).

The generator h need not be normalized: the constant C is recovered by
normalizing the radial density ``t -> h(t) t^(np/2 - 1)`` on (0, inf),

    C = Gamma(np/2) / ( Gamma_p(n/2) * integral_0^inf h(t) t^(np/2-1) dt ),

which reduces to the familiar ``2^(-np/2) / Gamma_p(n/2)`` for the
Wishart generator ``h(t) = exp(-t/2)``.

These distributions admit the stochastic representation

    S = Q * G^(1/2) U U^T G^(1/2),

with U uniform on the Frobenius unit sphere of p x n matrices and Q an
independent nonnegative scalar whose density is proportional to the
radial density above.  Samplers draw U as normalized Gaussian matrices
and Q from the family-specific radius law.

Two families are built in:

==========  =====================  ===================  =============
family      h(t)                   u(t) = -2 h'/h       sup t*u(t)
==========  =====================  ===================  =============
Wishart     exp(-t/2)              1                    +inf
t-Wishart   (1+t/nu)^-(nu+np)/2    (nu+np)/(nu+t)       np + nu
==========  =====================  ===================  =============
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_solve
from scipy.special import betaln, gammaln, multigammaln

from .errors import ModelError, ParameterError, SingularityError
from .geometry import MetricCoefficients, egrad_to_rgrad
from .linalg import spd_cholesky, spd_logdet, spd_solve, spd_sqrt, sym, validate_spd

# Draws per chunk when sampling, to bound peak memory for large requests.
_SAMPLE_CHUNK = 10_000

# Monte-Carlo draws for metric coefficients of generators without closed forms.
_COEFF_MC_DRAWS = 1_000_000


@dataclass(frozen=True)
class DensityGenerator:
    """One member of the Elliptical Wishart family.

    All scalar functions take ``(t, n, p)`` because some generators (the
    t-Wishart) depend on the matrix dimensions through the product ``n*p``.
    They must accept numpy arrays for ``t``.

    Attributes
    ----------
    name : str
        Family identifier; drives closed-form dispatch.
    log_h : callable ``(t, n, p) -> log h(t)``
        Log density generator.
    u : callable ``(t, n, p) -> -2 h'(t) / h(t)``
        Weight function appearing in the likelihood gradient.
    psi : callable ``(t, n, p) -> t * u(t)``
    psi_sup : callable ``(n, p) -> float`` or None
        Analytic supremum of psi (may be ``inf``); None when unknown.
    q_sampler : callable ``(n, p, size, rng) -> (size,) array``
        Draws the scalar radius Q of the stochastic representation.
    log_radius_norm : callable ``(n, p) -> float`` or None
        ``log integral_0^inf h(t) t^(np/2-1) dt`` when known in closed
        form; None triggers numeric quadrature in :func:`log_pdf`.
    nu : float or None
        Degrees of freedom of the scalar t component, when applicable.
    """

    name: str
    log_h: Callable
    u: Callable
    psi: Callable
    psi_sup: Optional[Callable]
    q_sampler: Callable
    log_radius_norm: Optional[Callable] = None
    nu: Optional[float] = None


def _wishart_log_h(t, n, p):
    return -0.5 * np.asarray(t, dtype=float)


def _wishart_u(t, n, p):
    return np.ones_like(np.asarray(t, dtype=float))


def _wishart_psi(t, n, p):
    return np.asarray(t, dtype=float)


def _wishart_psi_sup(n, p):
    return np.inf


def _wishart_q_sampler(n, p, size, rng):
    return rng.chisquare(n * p, size)


def _wishart_log_radius_norm(n, p):
    a = 0.5 * n * p
    return a * np.log(2.0) + gammaln(a)


def wishart_generator() -> DensityGenerator:
    """Density generator of the Wishart distribution, ``h(t) = exp(-t/2)``."""
    return DensityGenerator(
        name="wishart",
        log_h=_wishart_log_h,
        u=_wishart_u,
        psi=_wishart_psi,
        psi_sup=_wishart_psi_sup,
        q_sampler=_wishart_q_sampler,
        log_radius_norm=_wishart_log_radius_norm,
    )


def _t_log_h(t, n, p, nu):
    return -0.5 * (nu + n * p) * np.log1p(np.asarray(t, dtype=float) / nu)


def _t_u(t, n, p, nu):
    return (nu + n * p) / (nu + np.asarray(t, dtype=float))


def _t_psi(t, n, p, nu):
    t = np.asarray(t, dtype=float)
    return t * (nu + n * p) / (nu + t)


def _t_psi_sup(n, p, nu):
    return float(n * p + nu)


def _t_q_sampler(n, p, size, rng, nu):
    # Radius density ~ t^(np/2-1) (1+t/nu)^-(np+nu)/2, i.e. np * F(np, nu).
    return n * p * rng.f(n * p, nu, size)


def _t_log_radius_norm(n, p, nu):
    a = 0.5 * n * p
    return a * np.log(nu) + betaln(a, 0.5 * nu)


def t_wishart_generator(nu: float) -> DensityGenerator:
    """Density generator of the t-Wishart distribution.

    Parameters
    ----------
    nu : float
        Degrees of freedom of the underlying scalar t component; must be
        positive.  Small ``nu`` gives heavy tails, ``nu -> inf`` recovers
        the Wishart family.
    """
    nu = float(nu)
    if not nu > 0.0:
        raise ParameterError(f"t-Wishart requires nu > 0, got {nu}")
    return DensityGenerator(
        name="t-wishart",
        log_h=functools.partial(_t_log_h, nu=nu),
        u=functools.partial(_t_u, nu=nu),
        psi=functools.partial(_t_psi, nu=nu),
        psi_sup=functools.partial(_t_psi_sup, nu=nu),
        q_sampler=functools.partial(_t_q_sampler, nu=nu),
        log_radius_norm=functools.partial(_t_log_radius_norm, nu=nu),
        nu=nu,
    )


@dataclass
class EWModel:
    """A density generator bound to degrees of freedom ``n`` and dimension ``p``."""

    generator: DensityGenerator
    n: int
    p: int
    _coeff: Optional[MetricCoefficients] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or int(self.p) != self.p:
            raise ParameterError("degrees of freedom n and dimension p must be integers")
        self.n = int(self.n)
        self.p = int(self.p)
        if self.p < 1:
            raise ParameterError(f"dimension p must be >= 1, got {self.p}")
        if not self.n > self.p:
            raise ParameterError(f"model requires n > p, got n={self.n}, p={self.p}")

    def log_h(self, t):
        return self.generator.log_h(t, self.n, self.p)

    def u(self, t):
        return self.generator.u(t, self.n, self.p)

    def psi(self, t):
        return self.generator.psi(t, self.n, self.p)

    @property
    def psi_sup(self) -> Optional[float]:
        if self.generator.psi_sup is None:
            return None
        return self.generator.psi_sup(self.n, self.p)

    def sample_q(self, size, rng):
        return self.generator.q_sampler(self.n, self.p, size, rng)

    def coefficients(self) -> MetricCoefficients:
        """Metric coefficients ``(alpha, beta)``, cached after first call."""
        if self._coeff is None:
            self._coeff = metric_coefficients(self)
        return self._coeff


def wishart_model(n: int, p: int) -> EWModel:
    """Wishart model with ``n`` degrees of freedom in dimension ``p``."""
    return EWModel(wishart_generator(), n, p)


def t_wishart_model(n: int, p: int, nu: float) -> EWModel:
    """t-Wishart model with matrix dof ``n`` and scalar dof ``nu``."""
    return EWModel(t_wishart_generator(nu), n, p)


def metric_coefficients(model: EWModel, mc_draws: int = _COEFF_MC_DRAWS, rng=None) -> MetricCoefficients:
    """Information-metric coefficients ``(alpha, beta)`` of a model.

    Closed forms are used for the built-in families:

    * Wishart: ``alpha = n/2``, ``beta = 0``;
    * t-Wishart: ``alpha = (n/2) (nu+np) / (nu+np+2)`` and
      ``beta = -n^2 / (2 (nu+np+2))``.

    Any other generator falls back to Monte-Carlo evaluation of
    ``alpha = (n/2) (1 + E[Q^2 u'(Q)] / (np (np/2 + 1)))`` with ``u'``
    estimated by central finite differences (relative step 1e-5), then
    ``beta = (n/2) (alpha - n/2)``.

    Raises
    ------
    ModelError
        If the resulting coefficients do not define a positive metric.
    """
    n, p = model.n, model.p
    if model.generator.name == "wishart":
        alpha, beta = 0.5 * n, 0.0
    elif model.generator.name == "t-wishart":
        nu = model.generator.nu
        alpha = 0.5 * n * (nu + n * p) / (nu + n * p + 2.0)
        beta = -(n * n) / (2.0 * (nu + n * p + 2.0))
    else:
        if mc_draws < 1_000_000:
            raise ParameterError("Monte-Carlo coefficient estimation needs >= 1e6 draws")
        rng = np.random.default_rng(0) if rng is None else rng
        q = model.sample_q(mc_draws, rng)
        step = 1e-5 * q
        du = (model.u(q + step) - model.u(q - step)) / (2.0 * step)
        alpha = 0.5 * n * (1.0 + float(np.mean(q * q * du)) / (n * p * (0.5 * n * p + 1.0)))
        beta = 0.5 * n * (alpha - 0.5 * n)
    if not (alpha > 0.0 and alpha + p * beta > 0.0):
        raise ModelError(
            f"generator '{model.generator.name}' yields an invalid metric: "
            f"alpha={alpha}, beta={beta}, p={p}"
        )
    return MetricCoefficients(alpha=alpha, beta=beta, dim=p)


def as_samples(data: ArrayLike, p: Optional[int] = None, validate: bool = False) -> NDArray:
    """Coerce data to a ``(K, p, p)`` stack of SPD matrices.

    A single ``(p, p)`` matrix becomes a stack of one.  With
    ``validate=True`` each element is checked for positive definiteness.
    """
    a = np.asarray(data, dtype=float)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3 or a.shape[-1] != a.shape[-2]:
        raise ParameterError(f"samples must have shape (K, p, p), got {a.shape}")
    if p is not None and a.shape[-1] != p:
        raise ParameterError(f"samples have dimension {a.shape[-1]}, expected {p}")
    if validate:
        for k in range(a.shape[0]):
            if not validate_spd(a[k]):
                raise SingularityError(f"sample {k} is not symmetric positive definite")
    return a


def trace_g_inv_s(g: ArrayLike, samples: ArrayLike) -> NDArray:
    """Traces ``tr(G^-1 S_k)`` for a stack of samples, via one Cholesky solve."""
    samples = as_samples(samples)
    k, p, _ = samples.shape
    x = spd_solve(g, samples.transpose(1, 0, 2).reshape(p, k * p))
    return np.einsum("iki->k", x.reshape(p, k, p))


def _log_radius_norm(model: EWModel) -> float:
    """``log integral h(t) t^(np/2-1) dt``, closed form or log-space quadrature."""
    if model.generator.log_radius_norm is not None:
        return float(model.generator.log_radius_norm(model.n, model.p))
    a = 0.5 * model.n * model.p

    def log_integrand(t):
        return model.log_h(t) + (a - 1.0) * np.log(t)

    # Locate the bulk of the mass, then integrate exp(log integrand - peak).
    grid = np.geomspace(1e-12, 1e12, 4001)
    logs = log_integrand(grid)
    peak = float(np.max(logs))
    keep = logs > peak - 60.0
    lo, hi = grid[keep][0], grid[keep][-1]
    fine = np.linspace(lo, hi, 200_001)
    vals = np.exp(log_integrand(fine) - peak)
    return peak + float(np.log(np.trapezoid(vals, fine)))


def log_pdf(model: EWModel, g: ArrayLike, s: ArrayLike):
    """Log density of a sample (or a stack of samples) at center ``g``.

    Parameters
    ----------
    model : EWModel
    g : array, shape (p, p)
        SPD center.
    s : array, shape (p, p) or (K, p, p)
        SPD evaluation point(s).

    Returns
    -------
    float or (K,) array
        ``log f(S | G)``, with the normalization constant computed from
        the radial density (see module docstring).
    """
    n, p = model.n, model.p
    if not validate_spd(g):
        raise SingularityError("log_pdf requires an SPD center")
    single = np.asarray(s, dtype=float).ndim == 2
    samples = as_samples(s, p=p, validate=True)
    log_const = gammaln(0.5 * n * p) - multigammaln(0.5 * n, p) - _log_radius_norm(model)
    _, logdet_s = np.linalg.slogdet(samples)
    traces = trace_g_inv_s(g, samples)
    out = (
        log_const
        - 0.5 * n * spd_logdet(g)
        + 0.5 * (n - p - 1) * logdet_s
        + model.log_h(traces)
    )
    return float(out[0]) if single else out


def neg_log_likelihood(model: EWModel, g: ArrayLike, samples: ArrayLike) -> float:
    """Negative log-likelihood of ``K`` samples, up to an additive constant.

    ``L(G) = (nK/2) log det G - sum_k log h(tr(G^-1 S_k))``.
    """
    samples = as_samples(samples, p=model.p)
    k = samples.shape[0]
    traces = trace_g_inv_s(g, samples)
    return 0.5 * model.n * k * spd_logdet(g) - float(np.sum(model.log_h(traces)))


def euclidean_gradient(model: EWModel, g: ArrayLike, samples: ArrayLike) -> NDArray:
    """Euclidean gradient of :func:`neg_log_likelihood` at ``g``.

    ``grad = (1/2) G^-1 (nK G - sum_k u(tr(G^-1 S_k)) S_k) G^-1``; the
    returned matrix is symmetric and satisfies the directional-derivative
    identity ``dL(G)[xi] = tr(grad @ xi)``.
    """
    samples = as_samples(samples, p=model.p)
    k = samples.shape[0]
    traces = trace_g_inv_s(g, samples)
    weighted = np.einsum("k,kij->ij", model.u(traces), samples)
    factor = spd_cholesky(g)
    inv_g = cho_solve(factor, np.eye(model.p))
    return sym(0.5 * (model.n * k * inv_g - inv_g @ weighted @ inv_g))


def riemannian_gradient(model: EWModel, g: ArrayLike, samples: ArrayLike) -> NDArray:
    """Gradient of the negative log-likelihood under the model's own metric."""
    return egrad_to_rgrad(model.coefficients(), g, euclidean_gradient(model, g, samples))


def sample(model: EWModel, g: ArrayLike, count: int, rng) -> NDArray:
    """Draw ``count`` matrices from the model centered at ``g``.

    Uses the stochastic representation: U is a p x n matrix of standard
    normals scaled to unit Frobenius norm, Q comes from the generator's
    radius sampler, and ``S = Q G^(1/2) U U^T G^(1/2)``.  Q and U are
    independent.  Samples are SPD almost surely since ``n > p``.
    """
    count = int(count)
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    n, p = model.n, model.p
    if not validate_spd(g):
        raise SingularityError("sample requires an SPD center")
    half = spd_sqrt(g)
    q = model.sample_q(count, rng)
    out = np.empty((count, p, p))
    chunk = max(1, _SAMPLE_CHUNK * 100 // max(n, 1))
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        u = rng.standard_normal((stop - start, p, n))
        u /= np.sqrt(np.einsum("kij,kij->k", u, u))[:, None, None]
        a = half @ u
        out[start:stop] = q[start:stop, None, None] * np.einsum("kij,klj->kil", a, a)
    return sym(out)


@dataclass(frozen=True)
class AssumptionReport:
    """Grid-based diagnostics for the MLE existence and convexity conditions.

    ``psi_sup_exceeds_np`` is None when the generator provides no analytic
    supremum (inconclusive): existence cannot be confirmed from the grid
    alone because psi may still approach its supremum off-grid.
    """

    u_nonnegative: bool
    u_nonincreasing: bool
    psi_nondecreasing: bool
    psi_sup_exceeds_np: Optional[bool]
    log_generator_convex: bool
    psi_sup: Optional[float]
    required_sup: float

    @property
    def passed(self) -> bool:
        """True when every conclusive verdict passed."""
        return (
            self.u_nonnegative
            and self.u_nonincreasing
            and self.psi_nondecreasing
            and self.psi_sup_exceeds_np is not False
            and self.log_generator_convex
        )

    @property
    def inconclusive(self) -> bool:
        return self.psi_sup_exceeds_np is None


def check_assumptions(gen: DensityGenerator, n: int, p: int, grid: ArrayLike) -> AssumptionReport:
    """Check the standing assumptions on ``u`` and ``psi`` over a grid.

    Verdicts: u nonnegative and non-increasing; psi non-decreasing;
    ``sup psi > n*p`` when an analytic supremum is available; convexity of
    ``s -> -log h(e^s)`` via second differences (the geodesic-convexity
    condition on the generator).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ParameterError("grid must be strictly increasing, nonnegative, length >= 3")
    slack = 1e-12
    u_vals = np.asarray(gen.u(grid, n, p), dtype=float)
    psi_vals = np.asarray(gen.psi(grid, n, p), dtype=float)
    u_nonneg = bool(np.all(u_vals >= -slack) and np.all(u_vals[grid > 0] > 0))
    u_noninc = bool(np.all(np.diff(u_vals) <= slack * np.maximum(1.0, np.abs(u_vals[:-1]))))
    psi_nondec = bool(np.all(np.diff(psi_vals) >= -slack * np.maximum(1.0, np.abs(psi_vals[:-1]))))
    required = float(n * p)
    if gen.psi_sup is None:
        sup_val, sup_ok = None, None
    else:
        sup_val = float(gen.psi_sup(n, p))
        sup_ok = bool(sup_val > required)
    # Convexity of s -> -log h(e^s) on the log-grid spanned by the input.
    positive = grid[grid > 0]
    s_grid = np.linspace(np.log(positive[0]), np.log(positive[-1]), max(positive.size, 64))
    phi = -np.asarray(gen.log_h(np.exp(s_grid), n, p), dtype=float)
    second = phi[2:] - 2.0 * phi[1:-1] + phi[:-2]
    convex = bool(np.all(second >= -1e-9 * np.maximum(1.0, np.abs(phi[1:-1]))))
    return AssumptionReport(
        u_nonnegative=u_nonneg,
        u_nonincreasing=u_noninc,
        psi_nondecreasing=psi_nondec,
        psi_sup_exceeds_np=sup_ok,
        log_generator_convex=convex,
        psi_sup=sup_val,
        required_sup=required,
    )


def ensure_assumptions(model: EWModel, grid: Optional[ArrayLike] = None) -> AssumptionReport:
    """Run :func:`check_assumptions` on a default grid; raise on hard failure.

    An inconclusive supremum only emits a warning, matching the intended
    use as an estimation-entry guard.
    """
    if grid is None:
        grid = np.geomspace(1e-6, 100.0 * model.n * model.p, 256)
    report = check_assumptions(model.generator, model.n, model.p, np.asarray(grid))
    if not report.passed:
        raise ModelError(
            f"generator '{model.generator.name}' violates the estimation assumptions: {report}"
        )
    if report.inconclusive:
        warnings.warn(
            f"generator '{model.generator.name}' has no analytic sup for psi; "
            "MLE existence cannot be confirmed",
            stacklevel=2,
        )
    return report
