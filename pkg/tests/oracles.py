"""Independent oracles used to verify the library's numerics.

Everything here is deliberately coded from first principles (no calls
into the package, no LAPACK matrix functions) so a test failure means a
genuine disagreement between two independent routes.
"""

import numpy as np


def jacobi_eig(a, tol=1e-14, max_sweeps=100):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns ``(eigenvalues ascending, eigenvectors)`` with the same
    convention as the library: column i of V pairs with eigenvalue i.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(np.diag(a))
    return np.diag(a)[order], v[:, order]


def power_series_expm(x, terms=30, squarings=None):
    """Matrix exponential via truncated Taylor series with scaling and squaring."""
    x = np.array(x, dtype=float)
    n = x.shape[0]
    norm = np.linalg.norm(x, ord="fro")
    if squarings is None:
        squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-16)))) + 2)
    scaled = x / (2.0 ** squarings)
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ scaled / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def radius_grid_cdf(log_h, a, lo_hint=1e-8, hi_hint=1e8, points=200_001):
    """Quadrature-normalized CDF of the density proportional to h(t) t^(a-1).

    Finds where the log integrand peaks, brackets the region within 60
    nats of the peak, and integrates on a dense linear grid in log space.
    Returns ``(grid, cdf)`` for interpolation.
    """
    probe = np.geomspace(lo_hint, hi_hint, 4001)
    logs = log_h(probe) + (a - 1.0) * np.log(probe)
    peak = logs.max()
    keep = probe[logs > peak - 60.0]
    lo, hi = keep[0], keep[-1]
    grid = np.linspace(lo, hi, points)
    vals = np.exp(log_h(grid) + (a - 1.0) * np.log(grid) - peak)
    weights = np.diff(grid)
    mass = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * weights)])
    return grid, mass / mass[-1]


def ks_statistic(draws, grid, cdf):
    """Kolmogorov-Smirnov distance between an empirical sample and a gridded CDF."""
    draws = np.sort(np.asarray(draws, dtype=float))
    theoretical = np.interp(draws, grid, cdf, left=0.0, right=1.0)
    n = draws.size
    empirical_hi = np.arange(1, n + 1) / n
    empirical_lo = np.arange(0, n) / n
    return max(np.abs(empirical_hi - theoretical).max(), np.abs(theoretical - empirical_lo).max())


def directional_derivative(f, x, direction, h):
    """Central finite-difference directional derivative of a scalar field."""
    return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h)


def random_symmetric(rng, p, scale=1.0):
    a = rng.standard_normal((p, p))
    return scale * 0.5 * (a + a.T)


def random_spd(rng, p, spread=1.0):
    """Random SPD matrix with log-eigenvalues uniform in [-spread, spread]."""
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    q = q * np.sign(np.diag(r))
    lam = np.exp(rng.uniform(-spread, spread, p))
    return 0.5 * ((q * lam) @ q.T + ((q * lam) @ q.T).T)


def random_invertible(rng, p):
    while True:
        a = rng.standard_normal((p, p))
        if abs(np.linalg.det(a)) > 1e-3:
            return a
