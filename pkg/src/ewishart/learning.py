"""Classification and clustering of SPD matrices.

EWDA (Elliptical Wishart discriminant analysis) models each class as one
Elliptical Wishart distribution and assigns a sample to the class with
the largest discriminant

    delta_z(S) = log pi_z - (n/2) log det G_z - log h(tr(G_z^-1 S)),

where G_z is the per-class MLE and pi_z the empirical class frequency.
The clustering variant alternates this decision rule with per-cluster
MLE updates, repeated over several random initializations; the run
maximizing the inertia (sum of own-class discriminants) is kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from .errors import ParameterError, TrainingError
from .estimation import FitOptions, fit
from .linalg import spd_logdet, validate_spd
from .models import EWModel, as_samples, trace_g_inv_s


@dataclass
class EwdaModel:
    """Trained EWDA classifier: per-class centers and priors for one model."""

    model: EWModel
    centers: NDArray  # (Z, p, p)
    priors: NDArray  # (Z,)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.priors = np.asarray(self.priors, dtype=float)
        if self.centers.ndim != 3 or self.centers.shape[0] != self.priors.shape[0]:
            raise ParameterError("centers and priors must agree on the number of classes")
        if abs(self.priors.sum() - 1.0) > 1e-12:
            raise ParameterError(f"priors must sum to 1, got {self.priors.sum()!r}")
        for z in range(self.centers.shape[0]):
            if not validate_spd(self.centers[z]):
                raise ParameterError(f"class {z + 1} center is not SPD")

    @property
    def n_classes(self) -> int:
        return self.centers.shape[0]


@dataclass
class ClusteringResult:
    """Output of :func:`ew_kmeans` for the inertia-maximizing initialization."""

    labels: NDArray  # (K,) in 1..Z
    centers: NDArray  # (Z, p, p)
    inertia: float
    chosen_init: int
    iterations_per_init: NDArray


def _discriminant_matrix(model: EWModel, centers: NDArray, priors: NDArray, samples: NDArray) -> NDArray:
    """All class discriminants for all samples, shape (K, Z)."""
    k = samples.shape[0]
    z = centers.shape[0]
    out = np.empty((k, z))
    for j in range(z):
        traces = trace_g_inv_s(centers[j], samples)
        out[:, j] = (
            np.log(priors[j])
            - 0.5 * model.n * spd_logdet(centers[j])
            + model.log_h(traces)
        )
    return out


def discriminant(ewda: EwdaModel, z: int, s: ArrayLike):
    """Discriminant of class ``z`` (1-based) at ``s`` (single matrix or stack)."""
    if not 1 <= z <= ewda.n_classes:
        raise ParameterError(f"class index {z} outside 1..{ewda.n_classes}")
    single = np.asarray(s, dtype=float).ndim == 2
    samples = as_samples(s, p=ewda.model.p)
    vals = _discriminant_matrix(
        ewda.model, ewda.centers[z - 1 : z], ewda.priors[z - 1 : z], samples
    )[:, 0]
    return float(vals[0]) if single else vals


def wda_discriminant(center: ArrayLike, prior: float, n: int, s: ArrayLike) -> float:
    """Wishart-family discriminant, ``log pi - (n/2) log det G - tr(G^-1 S) / 2``."""
    return float(
        np.log(prior) - 0.5 * n * spd_logdet(center) - 0.5 * trace_g_inv_s(center, s)[0]
    )


def twda_discriminant(center: ArrayLike, prior: float, n: int, nu: float, s: ArrayLike) -> float:
    """t-Wishart-family discriminant with scalar dof ``nu``.

    ``log pi - (n/2) log det G - ((nu + np)/2) log(1 + tr(G^-1 S) / nu)``.
    """
    p = np.asarray(center).shape[0]
    trace = trace_g_inv_s(center, s)[0]
    return float(
        np.log(prior)
        - 0.5 * n * spd_logdet(center)
        - 0.5 * (nu + n * p) * np.log1p(trace / nu)
    )


def ewda_train(
    model: EWModel,
    samples: ArrayLike,
    labels: ArrayLike,
    options: Optional[FitOptions] = None,
) -> EwdaModel:
    """Train EWDA: per-class MLE centers plus empirical class priors.

    Labels must cover every class in ``1..Z`` at least once.
    """
    samples = as_samples(samples, p=model.p)
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (samples.shape[0],):
        raise ParameterError("labels must be a vector matching the number of samples")
    n_classes = int(labels.max()) if labels.size else 0
    if n_classes < 1 or labels.min() < 1:
        raise ParameterError("labels must be integers in 1..Z")
    centers = np.empty((n_classes, model.p, model.p))
    priors = np.empty(n_classes)
    for z in range(1, n_classes + 1):
        mask = labels == z
        if not mask.any():
            raise TrainingError(f"class {z} has no training samples")
        centers[z - 1] = fit(model, samples[mask], options).estimate
        priors[z - 1] = mask.mean()
    return EwdaModel(model=model, centers=centers, priors=priors)


def ewda_predict(ewda: EwdaModel, s: ArrayLike):
    """Predict class labels (1-based); ties break to the lowest class index."""
    single = np.asarray(s, dtype=float).ndim == 2
    samples = as_samples(s, p=ewda.model.p)
    scores = _discriminant_matrix(ewda.model, ewda.centers, ewda.priors, samples)
    labels = np.argmax(scores, axis=1) + 1
    return int(labels[0]) if single else labels


def inertia(
    model: EWModel,
    samples: ArrayLike,
    labels: ArrayLike,
    centers: ArrayLike,
    priors: ArrayLike,
) -> float:
    """Sum over samples of the discriminant of their own class."""
    samples = as_samples(samples, p=model.p)
    labels = np.asarray(labels, dtype=int)
    centers = np.asarray(centers, dtype=float)
    priors = np.asarray(priors, dtype=float)
    scores = _discriminant_matrix(model, centers, priors, samples)
    return float(scores[np.arange(samples.shape[0]), labels - 1].sum())


def ew_kmeans(
    model: EWModel,
    samples: ArrayLike,
    n_clusters: int,
    *,
    n_init: int = 5,
    label_change_tol: float = 1e-3,
    max_sweeps: int = 100,
    fit_options: Optional[FitOptions] = None,
    rng=None,
) -> ClusteringResult:
    """K-means-style clustering with the EWDA decision rule.

    Each initialization picks ``n_clusters`` distinct samples as starting
    centers, then alternates label assignment (uniform priors) with
    per-cluster MLE updates until the fraction of labels that changed in
    a sweep drops below ``label_change_tol`` or ``max_sweeps`` is hit.
    The result of the initialization with the largest inertia is
    returned.  Deterministic given ``rng``.
    """
    samples = as_samples(samples, p=model.p)
    k = samples.shape[0]
    if n_clusters > k:
        raise ParameterError(f"cannot form {n_clusters} clusters from {k} samples")
    if n_clusters < 1 or n_init < 1:
        raise ParameterError("n_clusters and n_init must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    priors = np.full(n_clusters, 1.0 / n_clusters)

    best: Optional[Tuple[float, NDArray, NDArray, int]] = None
    sweeps_used: List[int] = []
    for m in range(n_init):
        idx = rng.choice(k, size=n_clusters, replace=False)
        centers = samples[idx].copy()
        scores = _discriminant_matrix(model, centers, priors, samples)
        labels = np.argmax(scores, axis=1) + 1
        sweeps = 0
        for _ in range(max_sweeps):
            sweeps += 1
            centers = _update_centers(model, samples, labels, centers, scores, fit_options)
            scores = _discriminant_matrix(model, centers, priors, samples)
            new_labels = np.argmax(scores, axis=1) + 1
            changed = float(np.mean(new_labels != labels))
            labels = new_labels
            if changed < label_change_tol:
                break
        sweeps_used.append(sweeps)
        total = inertia(model, samples, labels, centers, priors)
        if best is None or total > best[0]:
            best = (total, labels, centers, m)
    total, labels, centers, chosen = best
    return ClusteringResult(
        labels=labels,
        centers=centers,
        inertia=total,
        chosen_init=chosen,
        iterations_per_init=np.asarray(sweeps_used),
    )


def _update_centers(model, samples, labels, centers, scores, fit_options) -> NDArray:
    """Per-cluster MLE update, warm-started at the current centers.

    An empty cluster is reseeded with the sample whose own-class
    discriminant is currently lowest (the sample its center explains
    worst), which the subsequent assignment will usually claim.
    """
    n_clusters = centers.shape[0]
    new_centers = centers.copy()
    own = scores[np.arange(samples.shape[0]), labels - 1]
    taken = np.zeros(samples.shape[0], dtype=bool)
    for z in range(1, n_clusters + 1):
        mask = labels == z
        if mask.any():
            opts = _warm_options(fit_options, centers[z - 1])
            new_centers[z - 1] = fit(model, samples[mask], opts).estimate
        else:
            candidates = np.where(~taken)[0]
            worst = candidates[np.argmin(own[candidates])]
            taken[worst] = True
            new_centers[z - 1] = samples[worst]
    return new_centers


def _warm_options(fit_options: Optional[FitOptions], center: NDArray) -> FitOptions:
    base = fit_options if fit_options is not None else FitOptions()
    return FitOptions(
        algorithm=base.algorithm,
        max_iterations=base.max_iterations,
        tolerance=base.tolerance,
        init=center,
        initial_step=base.initial_step,
        contraction=base.contraction,
        sufficient_decrease=base.sufficient_decrease,
        max_halvings=base.max_halvings,
        cg_rule=base.cg_rule,
        retraction=base.retraction,
    )


def align_labels(predicted: ArrayLike, truth: ArrayLike, n_classes: int) -> Tuple[NDArray, float, float]:
    """Optimally align predicted cluster labels with ground-truth labels.

    Solves the assignment problem on the Z x Z confusion matrix (exact
    Hungarian solve), maximizing the number of matched samples.

    Returns
    -------
    permutation : (Z,) int array
        ``permutation[z - 1]`` is the truth label assigned to predicted
        label ``z``.
    accuracy : float
        Matched fraction after relabeling.
    miou : float
        Mean intersection-over-union across classes (classes absent from
        both labelings are skipped).
    """
    predicted = np.asarray(predicted, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if predicted.shape != truth.shape:
        raise ParameterError("predicted and truth labels must have equal length")
    confusion = np.zeros((n_classes, n_classes))
    for pz, tz in zip(predicted, truth):
        confusion[pz - 1, tz - 1] += 1
    rows, cols = linear_sum_assignment(-confusion)
    permutation = np.empty(n_classes, dtype=int)
    permutation[rows] = cols + 1
    aligned = permutation[predicted - 1]
    accuracy = float(np.mean(aligned == truth))
    ious = []
    for z in range(1, n_classes + 1):
        inter = np.sum((aligned == z) & (truth == z))
        union = np.sum((aligned == z) | (truth == z))
        if union > 0:
            ious.append(inter / union)
    miou = float(np.mean(ious)) if ious else 1.0
    return permutation, accuracy, miou
