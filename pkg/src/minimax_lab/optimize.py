"""Numerical search for the best constant inside an equivariant family.

Draws are made once at a reference parameter and reused for every candidate
constant (common random numbers), so the estimated risk is a smooth
deterministic function of the constants.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import models as _models
from .errors import ArgumentError, FamilyMismatchError
from .estimators import CovEquivariant, QuantileFamily, ScaleMultiple
from .losses import loss_value
from .models import ParameterPoint
from .quadrature import golden_section
from .risk import SE_MULTIPLIER, fsum_mean_se, mc_losses, quadrature_risk

FAMILIES = ("scale-multiple", "quantile", "cov-diagonal")

_DEFAULT_BOUNDS = {"scale-multiple": (1e-6, 10.0), "quantile": (0.0, 5.0), "cov-diagonal": (1e-3, 2.0)}


@dataclass
class SearchSpec:
    bounds: tuple | None = None
    tol: float = 1e-4
    replicates: int = 1_000_000
    seed: int = 0
    method: str = "monte-carlo"
    max_sweeps: int = 50


@dataclass
class OptimizationResult:
    family: str
    constants: np.ndarray
    risk: float
    se: float
    replicates: int
    method: str
    probe_risks: tuple

    def to_dict(self):
        return {
            "family": self.family,
            "constants": np.atleast_1d(self.constants).tolist(),
            "risk": self.risk,
            "se": self.se,
            "replicates": self.replicates,
            "method": self.method,
            "probe_risks": list(self.probe_risks),
        }


def _family(model, family, loss):
    if family == "scale-multiple":
        if model.kind != "scale" or model.p != 1 or loss.estimand != "scale":
            raise FamilyMismatchError("scale-multiple family needs a scalar scale model and scale loss")
        return (lambda c: ScaleMultiple(c[0])), 1, (ParameterPoint.scale(1.0), ParameterPoint.scale(3.7))
    if family == "quantile":
        if model.kind != "location-scale" or loss.estimand != "quantile":
            raise FamilyMismatchError("quantile family needs a location-scale model and quantile loss")
        probes = (ParameterPoint.location_scale(0.0, 1.0), ParameterPoint.location_scale(-2.5, 3.0))
        return (lambda c: QuantileFamily(loss.eta, c[0])), 1, probes
    if family == "cov-diagonal":
        if model.kind != "wishart" or loss.estimand != "covariance":
            raise FamilyMismatchError("cov-diagonal family needs a Wishart model and covariance loss")
        p = model.p
        other = np.diag(np.arange(1.0, p + 1)) + 0.3 * (np.ones((p, p)) - np.eye(p))
        probes = (ParameterPoint.covariance(np.eye(p)), ParameterPoint.covariance(other))
        return (lambda c: CovEquivariant(np.diag(c))), p, probes
    raise ArgumentError(f"unknown family {family!r}; choose from {FAMILIES}")


def optimize_equivariant_constant(model, family, loss, search=None, start=None):
    """Minimize the (constant) risk over the family's constants.

    A one-constant family uses golden-section search; the diagonal covariance
    family uses coordinatewise golden-section sweeps until no coordinate moves
    by more than ``tol``.  Before searching, the risk at ``start`` is compared
    at two parameter points and must agree within 3 paired standard errors.
    """
    search = search or SearchSpec()
    build, k, probes = _family(model, family, loss)
    lo, hi = search.bounds or _DEFAULT_BOUNDS[family]
    if not 0 <= lo < hi:
        raise ArgumentError("search bounds must satisfy 0 <= lo < hi")
    c0 = np.full(k, 0.5 * (lo + hi)) if start is None else np.asarray(start, dtype=float).reshape(k)

    if search.method == "quadrature":
        ref = probes[0]
        risk_of = lambda c: quadrature_risk(model, ref, build(c), loss).risk
        r0, r1 = (quadrature_risk(model, t, build(c0), loss).risk for t in probes)
        if abs(r0 - r1) > 1e-6 * max(1.0, abs(r0)):
            raise FamilyMismatchError(f"risk is not constant across probe points ({r0} vs {r1})")
        n_used = 0
    elif search.method == "monte-carlo":
        l0, l1 = (mc_losses(model, t, build(c0), loss, search.replicates, search.seed) for t in probes)
        diff, se = fsum_mean_se(l0 - l1)
        if abs(diff) > SE_MULTIPLIER * se + 1e-12 * max(1.0, abs(float(np.mean(l0)))):
            raise FamilyMismatchError(f"risk differs across probe points by {diff} (paired SE {se})")
        r0, r1 = float(np.mean(l0)), float(np.mean(l1))
        ref = probes[0]
        X = _models.sample(model, ref, search.replicates, search.seed)
        risk_of = _mc_objective(family, build, X, ref, loss)
        n_used = search.replicates
    else:
        raise ArgumentError("method must be 'monte-carlo' or 'quadrature'")

    c = c0.copy()
    if k == 1:
        c[0] = golden_section(lambda v: risk_of(np.array([v])), lo, hi, tol=search.tol)
    else:
        for _ in range(search.max_sweeps):
            moved = 0.0
            for i in range(k):
                def along(v, i=i):
                    trial = c.copy()
                    trial[i] = v
                    return risk_of(trial)

                new = golden_section(along, lo, hi, tol=search.tol)
                moved = max(moved, abs(new - c[i]))
                c[i] = new
            if moved < search.tol:
                break

    if search.method == "monte-carlo":
        final, se = fsum_mean_se(loss_value(loss, probes[0], build(c)(X)))
    else:
        final, se = risk_of(c), 0.0
    return OptimizationResult(family, c, final, se, n_used, search.method, (r0, r1))


def _mc_objective(family, build, X, theta, loss):
    if family == "cov-diagonal":
        # delta_A(S) = L A L' is linear in A: precompute the Cholesky factors
        chol = np.linalg.cholesky(X)

        def risk(c):
            d = (chol * c[None, None, :]) @ np.swapaxes(chol, -1, -2)
            return math.fsum(loss_value(loss, theta, d)) / len(d)

        return risk

    if family == "quantile":
        xbar = X.mean(axis=1)
        s = np.sqrt(np.sum((X - xbar[:, None]) ** 2, axis=1))

        def risk(c):
            return math.fsum(loss_value(loss, theta, xbar + loss.eta * c[0] * s)) / len(X)

        return risk

    total = X.sum(axis=1)

    def risk(c):
        return math.fsum(loss_value(loss, theta, c[0] * total)) / len(X)

    return risk
