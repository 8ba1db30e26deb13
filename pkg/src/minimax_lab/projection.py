"""Euclidean projections onto order cones and polyhedra."""

import numpy as np

from .errors import ConvergenceError

DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 100_000


def pava(y, weights=None):
    """Pool-adjacent-violators: the nondecreasing fit closest to ``y`` in
    (weighted) least squares."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    means, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wts.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), wts.pop(), sizes.pop()
            tot = w1 + w2
            means.append((w1 * m1 + w2 * m2) / tot)
            wts.append(tot)
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


def dykstra(constraints, x, offsets=None, tol=DYKSTRA_TOL, max_sweeps=DYKSTRA_MAX_SWEEPS):
    """Project ``x`` onto ``{z : constraints @ z >= offsets}`` by Dykstra's
    alternating projections over the half-spaces.

    ``x`` may be a single point or a stack of points (rows).  Iteration stops
    once a full sweep moves neither the iterate nor the correction terms by
    more than ``tol``.
    """
    c = np.atleast_2d(np.asarray(constraints, dtype=float))
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x).copy()
    b = np.zeros(c.shape[0]) if offsets is None else np.asarray(offsets, dtype=float)
    norms2 = np.sum(c * c, axis=1)
    corr = np.zeros((c.shape[0],) + pts.shape)
    gap = np.inf
    for _ in range(max_sweeps):
        prev = pts.copy()
        shift = 0.0
        for j in range(c.shape[0]):
            z = pts + corr[j]
            slack = z @ c[j] - b[j]
            pts = z - np.minimum(slack, 0.0)[:, None] * (c[j] / norms2[j])
            new_corr = z - pts
            shift = max(shift, float(np.max(np.abs(new_corr - corr[j]))))
            corr[j] = new_corr
        gap = max(float(np.max(np.abs(pts - prev))), shift)
        if gap < tol:
            return pts[0] if single else pts
    raise ConvergenceError(f"Dykstra did not converge in {max_sweeps} sweeps (gap {gap:.3e})", gap=gap)


def polish(constraints, x, z, active_tol=1e-7):
    """Exact projection of ``x`` onto ``{C z >= 0}`` from the active set of an
    approximate solution ``z``.

    Rows with ``C z`` within ``active_tol`` of zero are treated as equalities;
    the closed-form projection onto that subspace replaces ``z`` when it is
    feasible and its multipliers are nonnegative.  Otherwise ``z`` is kept.
    """
    c = np.atleast_2d(np.asarray(constraints, dtype=float))
    xs, zs = np.atleast_2d(x), np.atleast_2d(z).copy()
    for i, (xi, zi) in enumerate(zip(xs, zs)):
        size = max(1.0, float(np.max(np.abs(xi))))
        active = np.flatnonzero(c @ zi <= active_tol * size)
        if active.size == 0:
            continue
        a = c[active]
        lam = np.linalg.solve(a @ a.T, a @ xi)
        cand = xi - a.T @ lam
        if np.all(lam <= 1e-12 * size) and np.all(c @ cand >= -1e-13 * size):
            zs[i] = cand
    return zs[0] if np.ndim(z) == 1 else zs
