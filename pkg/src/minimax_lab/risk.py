"""Frequentist risk by Monte Carlo and by quadrature, sup-risk over a grid and
paired domination checks.

Monte Carlo draws come in fixed blocks of replicates read from the
counter-based stream, so the per-replicate losses (and every statistic of
them) do not depend on how blocks are spread across worker threads.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import models as _models
from .errors import ArgumentError, EstimatorFailure, NumericalError, ParameterDomainError
from .losses import loss_value
from .quadrature import DEFAULT_QUAD, integrate_1d

BLOCK = 1 << 16
DEFAULT_REPLICATES = 1_000_000
DEFAULT_MATRIX_REPLICATES = 100_000
SE_MULTIPLIER = 3.0
THREADS_ENV = "MINIMAX_LAB_THREADS"
# data points with density below exp(-680) contribute nothing at double precision
_LOG_NEGLIGIBLE = -680.0


def default_replicates(model):
    return DEFAULT_MATRIX_REPLICATES if model.kind == "wishart" else DEFAULT_REPLICATES


def worker_count(workers=None):
    """Explicit count, else ``$MINIMAX_LAB_THREADS``, else the CPU count (max 8)."""
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ArgumentError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from exc
        else:
            workers = min(os.cpu_count() or 1, 8)
    if workers < 1:
        raise ArgumentError("worker count must be positive")
    return int(workers)


@dataclass
class RiskEstimate:
    risk: float
    se: float
    replicates: int
    seed: int | None
    method: str
    theta: object = None

    def row(self):
        return {"risk": self.risk, "se": self.se, "replicates": self.replicates,
                "seed": self.seed, "method": self.method}


def fsum_mean_se(values):
    """Mean and standard error (sample sd / sqrt(n)) with exactly rounded sums."""
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    if n == 0:
        raise ArgumentError("no replicates")
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _locate_failure(estimator, X, start):
    for i in range(len(X)):
        try:
            estimator(X[i : i + 1])
        except NumericalError as exc:
            return EstimatorFailure(f"{estimator.name} failed on replicate {start + i}: {exc}", replicate=start + i)
    return None


def _block_losses(model, theta, estimators, loss, seed, start, count):
    X = _models.sample(model, theta, count, seed, start=start)
    out = []
    for est in estimators:
        try:
            d = est(X)
        except EstimatorFailure as exc:
            idx = start + (exc.replicate or 0)
            raise EstimatorFailure(f"{est.name} failed on replicate {idx}: {exc}", replicate=idx) from exc
        except NumericalError as exc:
            located = _locate_failure(est, X, start)
            raise (located or exc) from exc
        out.append(np.asarray(loss_value(loss, theta, d), dtype=float).reshape(count))
    return out


def paired_losses(model, theta, estimators, loss, replicates, seed, workers=None):
    """Per-replicate losses of several rules on the same draws."""
    if replicates < 1:
        raise ArgumentError("replicates must be positive")
    model.check_theta(theta)
    starts = list(range(0, replicates, BLOCK))
    jobs = [(s, min(BLOCK, replicates - s)) for s in starts]
    run = lambda job: _block_losses(model, theta, estimators, loss, seed, *job)
    workers = min(worker_count(workers), len(jobs))
    if workers == 1:
        blocks = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, jobs))
    return [np.concatenate([b[k] for b in blocks]) for k in range(len(estimators))]


def mc_losses(model, theta, estimator, loss, replicates, seed, workers=None):
    return paired_losses(model, theta, [estimator], loss, replicates, seed, workers)[0]


def mc_risk(model, theta, estimator, loss, replicates=None, seed=None, workers=None):
    """Monte Carlo risk ``E_theta L(theta, delta(X))``; deterministic in ``seed``."""
    if seed is None:
        raise ArgumentError("seed required")
    replicates = default_replicates(model) if replicates is None else int(replicates)
    losses = mc_losses(model, theta, estimator, loss, replicates, seed, workers)
    mean, se = fsum_mean_se(losses)
    return RiskEstimate(mean, se, replicates, seed, "monte-carlo", theta)


# ---------------------------------------------------------------------------
# quadrature


def _segments(lo, hi, breaks):
    inner = sorted({float(b) for b in breaks if lo < b < hi})
    edges = [lo, *inner, hi]
    return list(zip(edges[:-1], edges[1:]))


def _affine(model, theta, shape):
    """Per-coordinate offset and scale mapping standardized to observed data."""
    if model.kind in ("location", "multivariate-location"):
        off, sc = np.broadcast_to(theta.mu, shape).ravel(), 1.0
    elif model.kind == "scale":
        off, sc = np.zeros(int(np.prod(shape))), float(theta.sigma[0])
        if model.p > 1:
            sc = np.broadcast_to(theta.sigma, shape).ravel()
    else:
        off, sc = np.full(int(np.prod(shape)), float(theta.mu[0])), float(theta.sigma[0])
    return off, np.broadcast_to(np.asarray(sc, dtype=float), off.shape)


def quadrature_risk(model, theta, estimator, loss, quad=DEFAULT_QUAD):
    """``int L(theta, delta(x)) f_theta(x) dx`` for data of dimension <= 2."""
    model.check_theta(theta)
    shape = model.replicate_shape
    dim = int(np.prod(shape))
    if dim > 2 or model.kind == "wishart":
        raise ArgumentError("quadrature risk supports data of dimension <= 2")
    f = model.density
    off, sc = _affine(model, theta, shape)
    zlo, zhi = f.effective_support
    kinks = tuple(getattr(estimator, "kinks", ()))
    log_jac = float(np.sum(np.log(sc)))

    def integrand(*xs):
        z = (np.asarray(xs, dtype=float) - off[: len(xs)]) / sc[: len(xs)]
        logd = float(np.sum(f.logpdf(z))) - log_jac
        if logd < _LOG_NEGLIGIBLE:
            return 0.0
        d = estimator(np.asarray(xs, dtype=float).reshape((1,) + shape))[0]
        return float(loss_value(loss, theta, d)) * math.exp(logd)

    def pieces(j, extra=()):
        lo, hi = zlo * sc[j] + off[j], zhi * sc[j] + off[j]
        return _segments(lo, hi, (off[j], *kinks, *extra))

    if dim == 1:
        total = sum(integrate_1d(integrand, a, b, quad) for a, b in pieces(0))
    else:
        def inner(x1):
            return sum(integrate_1d(lambda x2: integrand(x1, x2), a, b, quad) for a, b in pieces(1, (x1,)))

        total = sum(integrate_1d(inner, a, b, quad) for a, b in pieces(0))
    return RiskEstimate(total, 0.0, 0, None, "quadrature", theta)


# ---------------------------------------------------------------------------
# sup-risk and domination


def _grid_points(model, grid):
    pts = []
    for g in grid:
        pts.append(g if isinstance(g, _models.ParameterPoint) else _models.theta_from_vector(model, g))
    if not pts:
        raise ArgumentError("parameter grid is empty")
    return pts


def _map_grid(fn, points, workers):
    workers = min(worker_count(workers), len(points))
    if workers == 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, points))


def risk_curve(model, estimator, loss, grid, method="quadrature", replicates=None, seed=None,
               quad=DEFAULT_QUAD, workers=None):
    points = _grid_points(model, grid)
    if method == "quadrature":
        return [quadrature_risk(model, t, estimator, loss, quad) for t in points]
    if method != "monte-carlo":
        raise ArgumentError("method must be 'quadrature' or 'monte-carlo'")
    if seed is None:
        raise ArgumentError("seed required")
    # the same seed at every grid point: common random numbers across theta
    # (the block workers share the thread budget, so grid points run in series)
    return [mc_risk(model, t, estimator, loss, replicates, seed, workers) for t in points]


def sup_risk(model, estimator, loss, grid, method="quadrature", replicates=None, seed=None,
             restriction=None, quad=DEFAULT_QUAD, workers=None):
    """Largest risk over the grid, its maximizing point and the whole curve."""
    points = _grid_points(model, grid)
    if restriction is not None:
        outside = [t for t in points if not restriction.contains(t)]
        if outside:
            raise ParameterDomainError(f"grid point {outside[0]} lies outside the restriction")
    curve = risk_curve(model, estimator, loss, points, method, replicates, seed, quad, workers)
    k = int(np.argmax([r.risk for r in curve]))
    return curve[k].risk, points[k], curve


@dataclass
class DominationRow:
    theta: object
    challenger: float
    incumbent: float
    diff: float
    se: float


@dataclass
class DominationReport:
    challenger: str
    incumbent: str
    replicates: int
    seed: int
    rows: list = field(default_factory=list)

    @property
    def verdict(self):
        k = SE_MULTIPLIER
        if any(r.diff > k * r.se for r in self.rows):
            return "no-domination"
        if any(r.diff < -k * r.se for r in self.rows):
            return "dominates"
        return "ties"


def domination_check(model, challenger, incumbent, loss, grid, replicates=None, seed=None, workers=None):
    """Paired risk differences ``R(challenger) - R(incumbent)`` on common draws.

    ``dominates``: no difference above +3 paired SE and at least one below
    -3 paired SE.  ``ties``: every difference within 3 paired SE of zero.
    """
    if seed is None:
        raise ArgumentError("seed required")
    points = _grid_points(model, grid)
    replicates = default_replicates(model) if replicates is None else int(replicates)
    report = DominationReport(challenger.name, incumbent.name, replicates, seed)
    for t in points:
        lc, li = paired_losses(model, t, [challenger, incumbent], loss, replicates, seed, workers)
        rc, _ = fsum_mean_se(lc)
        ri, _ = fsum_mean_se(li)
        diff, se = fsum_mean_se(lc - li)
        report.rows.append(DominationRow(t, rc, ri, diff, se))
    return report
