"""Invariant loss functions.

A loss combines an estimand (which parametric function is estimated and how
the decision is standardized) with a bowl-shaped profile ``rho``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, LossDomainError, ParameterDomainError, ShapeError

ESTIMANDS = ("location", "scale", "linear", "scale-product", "quantile", "covariance")

# profiles of a difference z, minimized at z = 0
DIFFERENCE_SHAPES = ("squared", "absolute", "quartic")
# profiles of a ratio z, minimized at z = 1
RATIO_SHAPES = ("scale-squared", "entropy")
# profiles of y = inv(Sigma) @ delta, minimized at y = I
MATRIX_SHAPES = ("stein", "squared-identity")
LOSS_SHAPES = DIFFERENCE_SHAPES + RATIO_SHAPES + MATRIX_SHAPES

_RATIO_ESTIMANDS = ("scale", "scale-product")


def rho(shape, z):
    """Scalar loss profiles; ratio profiles expect ``z > 0`` for entropy."""
    z = np.asarray(z, dtype=float)
    if shape == "squared":
        return z * z
    if shape == "absolute":
        return np.abs(z)
    if shape == "quartic":
        return z**4
    if shape == "scale-squared":
        return (z - 1.0) ** 2
    if shape == "entropy":
        if np.any(z <= 0):
            raise LossDomainError("entropy loss needs a positive decision")
        return z - np.log(z) - 1.0
    raise ArgumentError(f"{shape!r} is not a scalar loss profile")


def psi(shape, y):
    """Matrix profiles of ``y = inv(Sigma) @ delta`` (batched over leading axes)."""
    y = np.asarray(y, dtype=float)
    p = y.shape[-1]
    if shape == "stein":
        sign, logdet = np.linalg.slogdet(y)
        if np.any(sign <= 0):
            raise LossDomainError("Stein loss needs a positive definite decision")
        return np.trace(y, axis1=-2, axis2=-1) - logdet - p
    if shape == "squared-identity":
        e = y - np.eye(p)
        return np.einsum("...ij,...ji->...", e, e)
    raise ArgumentError(f"{shape!r} is not a matrix loss profile")


@dataclass(frozen=True, eq=False)
class LossSpec:
    """Estimand plus loss profile.

    ``power`` is the exponent r for the ``scale`` estimand sigma**r,
    ``a`` the coefficients of a linear combination, ``r`` the exponents of a
    scale product, ``eta`` the quantile order parameter.
    """

    estimand: str
    shape: str
    eta: float = 0.0
    power: float = 1.0
    a: tuple | None = None
    r: tuple | None = None

    def __post_init__(self):
        if self.estimand not in ESTIMANDS:
            raise ArgumentError(f"unknown estimand {self.estimand!r}; choose from {ESTIMANDS}")
        if self.shape not in LOSS_SHAPES:
            raise ArgumentError(f"unknown loss shape {self.shape!r}; choose from {LOSS_SHAPES}")
        if (self.estimand == "covariance") != (self.shape in MATRIX_SHAPES):
            raise ArgumentError(f"loss shape {self.shape!r} does not fit estimand {self.estimand!r}")
        if self.shape in RATIO_SHAPES and self.estimand not in _RATIO_ESTIMANDS:
            raise ArgumentError(f"ratio profile {self.shape!r} needs a scale-type estimand")
        if self.estimand == "linear":
            if self.a is None:
                raise ArgumentError("linear estimand needs coefficients a")
            object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if self.estimand == "scale-product":
            if self.r is None:
                raise ArgumentError("scale-product estimand needs exponents r")
            object.__setattr__(self, "r", tuple(float(v) for v in self.r))

    @property
    def ratio(self):
        return self.estimand in _RATIO_ESTIMANDS

    def target(self, theta):
        """The estimated parametric function tau(theta)."""
        if self.estimand == "location":
            return theta.mu if theta.mu.size > 1 else float(theta.mu[0])
        if self.estimand == "scale":
            return float(theta.sigma[0]) ** self.power
        if self.estimand == "linear":
            return float(np.dot(self.a, theta.mu))
        if self.estimand == "scale-product":
            return float(np.exp(np.dot(self.r, np.log(theta.sigma))))
        if self.estimand == "quantile":
            return float(theta.mu[0] + self.eta * theta.sigma[0])
        return theta.cov

    def decision_ndim(self, theta):
        if self.estimand == "covariance":
            return 2
        if self.estimand == "location" and theta.mu is not None and theta.mu.size > 1:
            return 1
        return 0


def _require(theta, *names):
    for name in names:
        if getattr(theta, name) is None:
            raise ParameterDomainError(f"loss needs parameter {name}")


def loss_value(loss, theta, d):
    """``L(theta, d)``; ``d`` may carry leading batch axes."""
    d = np.asarray(d, dtype=float)
    if loss.estimand == "covariance":
        _require(theta, "cov")
        if d.shape[-2:] != theta.cov.shape:
            raise ShapeError(f"covariance decision must end in shape {theta.cov.shape}")
        try:
            inv = np.linalg.inv(theta.cov)
        except np.linalg.LinAlgError as exc:
            raise ParameterDomainError("covariance parameter is not invertible") from exc
        out = psi(loss.shape, inv @ d)
        return float(out) if out.ndim == 0 else out

    if loss.estimand == "location":
        _require(theta, "mu")
        diff = d - (theta.mu if theta.mu.size > 1 else theta.mu[0])
        if theta.mu.size > 1:
            if d.shape[-1:] != theta.mu.shape:
                raise ShapeError(f"location decision must end in length {theta.mu.size}")
            diff = np.sqrt(np.sum(diff * diff, axis=-1))
        if theta.sigma is not None:
            diff = diff / theta.sigma[0]
        z = diff
    elif loss.estimand == "linear":
        _require(theta, "mu")
        if len(loss.a) != theta.mu.size:
            raise ShapeError("linear coefficients and mu differ in length")
        z = d - np.dot(loss.a, theta.mu)
    elif loss.estimand == "quantile":
        _require(theta, "mu", "sigma")
        z = (d - theta.mu[0] - loss.eta * theta.sigma[0]) / theta.sigma[0]
    else:
        _require(theta, "sigma")
        if loss.estimand == "scale-product" and len(loss.r) != theta.sigma.size:
            raise ShapeError("scale-product exponents and sigma differ in length")
        z = d / loss.target(theta)
        if loss.shape in DIFFERENCE_SHAPES:
            z = z - 1.0
    out = rho(loss.shape, z)
    return float(out) if out.ndim == 0 else out


def bowl_check(shape, probes=None):
    """True when ``shape`` is nonnegative on the probes and zero only at its minimizer."""
    if shape in MATRIX_SHAPES:
        rs = np.random.default_rng(0)
        mats = []
        for _ in range(50):
            q, _ = np.linalg.qr(rs.standard_normal((3, 3)))
            mats.append(q @ np.diag(rs.uniform(0.05, 5.0, 3)) @ q.T)
        vals = psi(shape, np.array(mats))
        return bool(np.all(vals > 0) and abs(float(psi(shape, np.eye(3)))) < 1e-14)
    if probes is None:
        probes = np.linspace(-5, 5, 1001) if shape in DIFFERENCE_SHAPES else np.geomspace(1e-3, 1e3, 1001)
    probes = np.asarray(probes, dtype=float)
    vals = rho(shape, probes)
    minimizer = 0.0 if shape in DIFFERENCE_SHAPES else 1.0
    at_min = np.isclose(probes, minimizer, rtol=0, atol=1e-15)
    return bool(
        np.all(vals >= 0)
        and np.all(vals[~at_min] > 0)
        and float(rho(shape, minimizer)) == 0.0
    )
