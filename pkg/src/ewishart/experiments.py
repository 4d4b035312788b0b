"""Synthetic benchmark harness.

Reproduces the two simulated studies at configurable scale: solver
convergence (fixed point vs Riemannian conjugate gradient, error against
the true center per iteration and per second) and estimation error as a
function of the number of matrices K (Wishart closed form vs t-Wishart
MLE, with a first-order intrinsic lower-bound reference).

Every study is a pure function of (config, seed): repetition ``r`` uses
the RNG stream seeded by ``(seed, r)``, so results are independent of
the total repetition count and of the worker pool size.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError
from .estimation import FitOptions, FitReport, fit_fixed_point, fit_riemannian, wishart_closed_form
from .geometry import MetricCoefficients, fisher_distance_sq
from .linalg import sym
from .models import EWModel, sample, t_wishart_model, wishart_model

DEFAULT_K_GRID = (10, 30, 100, 300, 1000)
FAST_REPETITIONS = 20


@dataclass
class ExperimentConfig:
    """Problem dimensions and run controls for the synthetic studies."""

    p: int = 10
    n: int = 100
    K: int = 300
    nu: Optional[float] = 10.0  # None selects the Wishart model
    repetitions: int = 200
    seed: int = 0
    condition_number: float = 10.0
    K_grid: Sequence[int] = DEFAULT_K_GRID
    threads: int = 1
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if not self.n > self.p:
            raise ParameterError(f"config requires n > p, got n={self.n}, p={self.p}")
        if self.K < 1 or self.repetitions < 1:
            raise ParameterError("K and repetitions must be >= 1")
        if self.condition_number < 1.0:
            raise ParameterError("condition_number must be >= 1")
        if len(self.K_grid) == 0 or any(np.diff(list(self.K_grid)) <= 0):
            raise ParameterError("K_grid must be non-empty and ascending")

    def model(self) -> EWModel:
        if self.nu is None:
            return wishart_model(self.n, self.p)
        return t_wishart_model(self.n, self.p, self.nu)


@dataclass
class RunRecord:
    """One (repetition, estimator) outcome of a study."""

    repetition: int
    estimator: str
    K: int
    error: float  # squared geodesic distance to the true center
    iterations: int
    seconds: float
    converged: bool
    failure: Optional[str] = None
    trace_error: Optional[NDArray] = field(default=None, repr=False)
    trace_seconds: Optional[NDArray] = field(default=None, repr=False)


def random_center(p: int, condition_number: float, rng) -> NDArray:
    """Random SPD matrix with a prescribed eigenvalue ratio.

    ``G = V diag(lam) V^T`` with V Haar-distributed on the orthogonal
    group (QR of a Gaussian matrix with the sign fix that makes the R
    diagonal positive) and eigenvalues spanning exactly
    ``[1/sqrt(c), sqrt(c)]``, the interior ones uniform in between.
    """
    if p < 2:
        raise ParameterError(f"random_center requires p >= 2, got {p}")
    c = float(condition_number)
    if c < 1.0:
        raise ParameterError(f"condition_number must be >= 1, got {c}")
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    v = q * np.sign(np.diag(r))
    lo, hi = 1.0 / np.sqrt(c), np.sqrt(c)
    lam = np.empty(p)
    lam[0], lam[-1] = lo, hi
    lam[1:-1] = rng.uniform(lo, hi, size=p - 2)
    return sym((v * lam) @ v.T)


def crb_reference(p: int, K: int, coeff: Optional[MetricCoefficients] = None) -> float:
    """First-order intrinsic lower-bound reference ``p(p+1)/(2K)``.

    The manifold dimension divided by the sample count: the leading-order
    bound on the expected squared geodesic error when the error is
    measured in the model's own information metric.  Emitted as a
    reference line, not an exact bound (``coeff`` is accepted for
    interface stability and currently unused).
    """
    if p < 1 or K < 1:
        raise ParameterError("p and K must be >= 1")
    return p * (p + 1) / (2.0 * K)


def _rep_rng(seed: int, repetition: int, salt: int = 0):
    return np.random.default_rng([seed, salt, repetition])


def _errors_vs_truth(coeff, iterates, truth) -> NDArray:
    return np.asarray([fisher_distance_sq(coeff, g, truth) for g in iterates])


def _convergence_repetition(config: ExperimentConfig, repetition: int) -> List[RunRecord]:
    model = config.model()
    coeff = model.coefficients()
    rng = _rep_rng(config.seed, repetition)
    center = random_center(config.p, config.condition_number, rng)
    data = sample(model, center, config.K, rng)
    records = []
    for name, solver, algorithm in (
        ("fp", fit_fixed_point, "fixed_point"),
        ("rcg", fit_riemannian, "riemann_cg"),
    ):
        options = replace(config.fit_options, algorithm=algorithm, keep_iterates=True)
        try:
            report: FitReport = solver(model, data, options)
        except Exception as exc:  # keep going, flag the failed run
            records.append(
                RunRecord(
                    repetition=repetition,
                    estimator=name,
                    K=config.K,
                    error=np.nan,
                    iterations=0,
                    seconds=np.nan,
                    converged=False,
                    failure=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        errors = _errors_vs_truth(coeff, report.iterates[1:], center)
        records.append(
            RunRecord(
                repetition=repetition,
                estimator=name,
                K=config.K,
                error=float(fisher_distance_sq(coeff, report.estimate, center)),
                iterations=report.iterations,
                seconds=float(report.trace_seconds[-1]) if report.iterations else 0.0,
                converged=report.converged,
                trace_error=errors,
                trace_seconds=report.trace_seconds,
            )
        )
    return records


def _run_parallel(worker, repetitions: int, threads: int) -> list:
    """Run per-repetition workers, merging results in repetition order."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(worker, range(repetitions)))
    else:
        chunks = [worker(r) for r in range(repetitions)]
    return [record for chunk in chunks for record in chunk]


def run_convergence_study(config: ExperimentConfig) -> List[RunRecord]:
    """Fit FP and RCG on fresh synthetic data, with full per-iteration traces."""
    return _run_parallel(
        lambda r: _convergence_repetition(config, r), config.repetitions, config.threads
    )


def _error_repetition(config: ExperimentConfig, K: int, repetition: int) -> List[RunRecord]:
    model = config.model()
    coeff = model.coefficients()
    rng = _rep_rng(config.seed, repetition, salt=K)
    center = random_center(config.p, config.condition_number, rng)
    data = sample(model, center, K, rng)

    t0 = time.perf_counter()
    w_hat = wishart_closed_form(data, config.n)
    w_seconds = time.perf_counter() - t0
    records = [
        RunRecord(
            repetition=repetition,
            estimator="wishart_mle",
            K=K,
            error=float(fisher_distance_sq(coeff, w_hat, center)),
            iterations=0,
            seconds=w_seconds,
            converged=True,
        )
    ]
    options = replace(config.fit_options, algorithm="riemann_cg")
    try:
        report = fit_riemannian(model, data, options)
        records.append(
            RunRecord(
                repetition=repetition,
                estimator="t_wishart_mle" if config.nu is not None else "ew_mle",
                K=K,
                error=float(fisher_distance_sq(coeff, report.estimate, center)),
                iterations=report.iterations,
                seconds=float(report.trace_seconds[-1]) if report.iterations else 0.0,
                converged=report.converged,
            )
        )
    except Exception as exc:
        records.append(
            RunRecord(
                repetition=repetition,
                estimator="t_wishart_mle" if config.nu is not None else "ew_mle",
                K=K,
                error=np.nan,
                iterations=0,
                seconds=np.nan,
                converged=False,
                failure=f"{type(exc).__name__}: {exc}",
            )
        )
    return records


def run_error_study(config: ExperimentConfig, K_grid: Optional[Sequence[int]] = None) -> List[RunRecord]:
    """Estimation error versus number of matrices, for both estimators."""
    grid = list(K_grid if K_grid is not None else config.K_grid)
    if not grid or any(np.diff(grid) <= 0):
        raise ParameterError("K_grid must be non-empty and ascending")
    records: List[RunRecord] = []
    for K in grid:
        records.extend(
            _run_parallel(
                lambda r, K=K: _error_repetition(config, K, r),
                config.repetitions,
                config.threads,
            )
        )
    return records


def summarize_error_study(config: ExperimentConfig, records: List[RunRecord]) -> Dict:
    """Aggregate per-repetition records into the summary mapping.

    Means and standard deviations are recomputed from the records
    themselves so the summary is self-consistent with the raw output.
    """
    estimators = sorted({r.estimator for r in records})
    grid = sorted({r.K for r in records})
    rows = []
    for name in estimators:
        for K in grid:
            errs = np.asarray([r.error for r in records if r.estimator == name and r.K == K])
            iters = np.asarray([r.iterations for r in records if r.estimator == name and r.K == K])
            secs = np.asarray([r.seconds for r in records if r.estimator == name and r.K == K])
            if errs.size == 0:
                continue
            rows.append(
                {
                    "name": name,
                    "K": int(K),
                    "mean_err": float(np.nanmean(errs)),
                    "std_err": float(np.nanstd(errs)),
                    "mean_iters": float(np.mean(iters)),
                    "mean_seconds": float(np.nanmean(secs)),
                }
            )
    return {
        "estimators": rows,
        "crb_reference": {
            "formula": "p(p+1)/(2K)",
            "kind": "first-order reference",
            "values": {str(K): crb_reference(config.p, K) for K in grid},
        },
    }
