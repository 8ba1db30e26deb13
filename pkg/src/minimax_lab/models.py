"""Invariant probability families, parameter points, sampling and densities."""

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import rng
from .errors import ArgumentError, ParameterDomainError, ShapeError

GROUP_KINDS = ("location", "scale", "location-scale", "multivariate-location", "wishart")
BASE_DENSITIES = ("normal", "exponential", "gamma", "uniform-unit")

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class BaseDensity:
    """A standardized density ``f(z)`` on the real line."""

    name: str
    shape: float | None = None

    @property
    def support(self):
        if self.name == "normal":
            return (-np.inf, np.inf)
        if self.name == "uniform-unit":
            return (0.0, 1.0)
        return (0.0, np.inf)

    @property
    def effective_support(self):
        """Support clipped where the density falls below about 1e-300."""
        if self.name == "normal":
            return (-37.0, 37.0)
        if self.name == "exponential":
            return (0.0, 700.0)
        if self.name == "gamma":
            return (0.0, float(special.gammainccinv(self.shape, 1e-300)))
        return (0.0, 1.0)

    @property
    def mean(self):
        return {"normal": 0.0, "exponential": 1.0, "uniform-unit": 0.5}.get(self.name, self.shape)

    def logpdf(self, z):
        z = np.asarray(z, dtype=float)
        lo, hi = self.support
        inside = (z >= lo) & (z <= hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.name == "normal":
                out = -0.5 * z * z - _LOG_SQRT_2PI
            elif self.name == "exponential":
                out = -z
            elif self.name == "gamma":
                a = self.shape
                out = (a - 1.0) * np.log(z) - z - special.gammaln(a)
                if a == 1.0:
                    out = -z - special.gammaln(a)
            else:
                out = np.zeros_like(z)
        return np.where(inside, out, -np.inf)

    def pdf(self, z):
        return np.exp(self.logpdf(z))

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        if self.name == "normal":
            return special.ndtr(z)
        if self.name == "exponential":
            return -np.expm1(-np.maximum(z, 0.0))
        if self.name == "gamma":
            return special.gammainc(self.shape, np.maximum(z, 0.0))
        return np.clip(z, 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self.name == "normal":
            return special.ndtri(u)
        if self.name == "exponential":
            return -np.log1p(-u)
        if self.name == "gamma":
            return special.gammaincinv(self.shape, u)
        return u.copy()


def base_density(name, shape=None):
    if name not in BASE_DENSITIES:
        raise ArgumentError(f"unknown base density {name!r}; choose from {BASE_DENSITIES}")
    if name == "gamma":
        if shape is None or not shape > 0:
            raise ArgumentError("gamma base density needs a shape alpha > 0")
        return BaseDensity(name, float(shape))
    return BaseDensity(name)


@dataclass(frozen=True)
class ModelSpec:
    """An invariant family.

    ``m`` is the number of observations per replicate (degrees of freedom for
    ``wishart``) and ``p`` the dimension.  Scale models with ``p > 1`` have
    independent components, each with its own scale.
    """

    kind: str
    base: str = "normal"
    m: int = 1
    p: int = 1
    shape: float | None = None
    density: BaseDensity = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in GROUP_KINDS:
            raise ArgumentError(f"unknown group kind {self.kind!r}; choose from {GROUP_KINDS}")
        if int(self.m) != self.m or self.m < 1:
            raise ArgumentError("m must be a positive integer")
        if int(self.p) != self.p or self.p < 1:
            raise ArgumentError("p must be a positive integer")
        if self.kind in ("location", "location-scale") and self.p != 1:
            raise ArgumentError(f"{self.kind} models are scalar; use multivariate-location for p > 1")
        if self.kind == "location-scale" and self.m < 2:
            raise ArgumentError("location-scale models need m >= 2")
        if self.kind == "wishart":
            if self.m < self.p:
                raise ArgumentError("wishart degrees of freedom m must be >= p")
            object.__setattr__(self, "density", base_density("normal"))
        else:
            object.__setattr__(self, "density", base_density(self.base, self.shape))

    @property
    def scalar(self):
        return self.kind != "wishart" and self.p == 1

    @property
    def replicate_shape(self):
        if self.kind == "wishart":
            return (self.p, self.p)
        return (self.m,) if self.p == 1 else (self.m, self.p)

    def check_theta(self, theta):
        need = {
            "location": ("mu",),
            "multivariate-location": ("mu",),
            "scale": ("sigma",),
            "location-scale": ("mu", "sigma"),
            "wishart": ("cov",),
        }[self.kind]
        for name in ("mu", "sigma", "cov"):
            value = getattr(theta, name)
            if name in need and value is None:
                raise ParameterDomainError(f"{self.kind} model needs parameter {name}")
            if name not in need and value is not None:
                raise ParameterDomainError(f"{self.kind} model does not use parameter {name}")
        if theta.mu is not None and theta.mu.shape != (self.p,):
            raise ShapeError(f"mu must have length {self.p}, got {theta.mu.shape}")
        if theta.sigma is not None and theta.sigma.shape != (self.p,):
            raise ShapeError(f"sigma must have length {self.p}, got {theta.sigma.shape}")
        if theta.cov is not None and theta.cov.shape != (self.p, self.p):
            raise ShapeError(f"cov must be {self.p}x{self.p}, got {theta.cov.shape}")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ParameterPoint:
    """A point of the parameter space; only the fields the model uses are set."""

    mu: np.ndarray | None = None
    sigma: np.ndarray | None = None
    cov: np.ndarray | None = None

    def __post_init__(self):
        if self.mu is not None:
            mu = _frozen(np.atleast_1d(self.mu))
            if mu.ndim != 1 or not np.all(np.isfinite(mu)):
                raise ParameterDomainError("mu must be a finite vector")
            object.__setattr__(self, "mu", mu)
        if self.sigma is not None:
            sigma = _frozen(np.atleast_1d(self.sigma))
            if sigma.ndim != 1 or not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
                raise ParameterDomainError(f"sigma must be strictly positive, got {sigma}")
            object.__setattr__(self, "sigma", sigma)
        if self.cov is not None:
            cov = _frozen(np.atleast_2d(self.cov))
            if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
                raise ShapeError("cov must be a square matrix")
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
                raise ParameterDomainError("cov must be symmetric")
            if not np.all(np.isfinite(cov)) or np.linalg.eigvalsh(cov).min() <= 0:
                raise ParameterDomainError("cov must be positive definite")
            object.__setattr__(self, "cov", cov)

    @classmethod
    def location(cls, mu):
        return cls(mu=mu)

    @classmethod
    def scale(cls, sigma):
        return cls(sigma=sigma)

    @classmethod
    def location_scale(cls, mu, sigma):
        return cls(mu=mu, sigma=sigma)

    @classmethod
    def covariance(cls, cov):
        return cls(cov=cov)

    def as_vector(self):
        """Flat coordinates: mu, then sigma, then the covariance entries."""
        parts = [a.ravel() for a in (self.mu, self.sigma, self.cov) if a is not None]
        return np.concatenate(parts) if parts else np.empty(0)

    def __eq__(self, other):
        if not isinstance(other, ParameterPoint):
            return NotImplemented
        for name in ("mu", "sigma", "cov"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and (a.shape != b.shape or not np.array_equal(a, b)):
                return False
        return True

    def __repr__(self):
        fields = ", ".join(
            f"{n}={getattr(self, n).tolist()}" for n in ("mu", "sigma", "cov") if getattr(self, n) is not None
        )
        return f"ParameterPoint({fields})"


def theta_from_vector(model, values):
    """Build a parameter point for ``model`` from its flat coordinates."""
    v = np.asarray(values, dtype=float).ravel()
    p = model.p
    expected = {"location": 1, "multivariate-location": p, "scale": p, "location-scale": 2, "wishart": p * p}[model.kind]
    if v.size != expected:
        raise ShapeError(f"{model.kind} model with p={p} needs {expected} coordinates, got {v.size}")
    if model.kind in ("location", "multivariate-location"):
        return ParameterPoint(mu=v)
    if model.kind == "scale":
        return ParameterPoint(sigma=v)
    if model.kind == "location-scale":
        return ParameterPoint(mu=v[:1], sigma=v[1:])
    return ParameterPoint(cov=v.reshape(p, p))


def _uniform_width(model):
    if model.kind == "wishart":
        return model.p * (model.p + 1) // 2
    return model.m * model.p


def sample(model, theta, replicates, seed, start=0):
    """Draw ``replicates`` replicates; row ``j`` depends only on ``(seed, start + j)``.

    Draws use inversion of the base CDF (Bartlett's decomposition for Wishart),
    so the same seed gives group-mapped draws at group-mapped parameters.
    """
    model.check_theta(theta)
    if replicates < 0:
        raise ArgumentError("replicates must be nonnegative")
    u = rng.uniforms(seed, start, replicates, _uniform_width(model))
    if model.kind == "wishart":
        return _bartlett(model, theta.cov, u)
    z = model.density.ppf(u).reshape((replicates,) + model.replicate_shape)
    if model.kind in ("location", "multivariate-location"):
        return z + (theta.mu[0] if model.p == 1 else theta.mu)
    if model.kind == "scale":
        return z * (theta.sigma[0] if model.p == 1 else theta.sigma)
    return theta.mu[0] + theta.sigma[0] * z


def _bartlett(model, cov, u):
    p, m = model.p, model.m
    n = u.shape[0]
    chol = np.linalg.cholesky(cov)
    a = np.zeros((n, p, p))
    dof = m - np.arange(p)
    a[:, np.arange(p), np.arange(p)] = np.sqrt(2.0 * special.gammaincinv(dof / 2.0, u[:, :p]))
    rows, cols = np.tril_indices(p, -1)
    a[:, rows, cols] = special.ndtri(u[:, p:])
    la = chol @ a
    return la @ np.swapaxes(la, -1, -2)


def log_density(model, theta, x):
    """Joint log density of one replicate."""
    model.check_theta(theta)
    x = np.asarray(x, dtype=float)
    if x.shape != model.replicate_shape:
        raise ShapeError(f"data point must have shape {model.replicate_shape}, got {x.shape}")
    if model.kind == "wishart":
        return float(stats.wishart(df=model.m, scale=theta.cov).logpdf(x))
    f = model.density
    if model.kind in ("location", "multivariate-location"):
        return float(np.sum(f.logpdf(x - (theta.mu[0] if model.p == 1 else theta.mu))))
    sigma = theta.sigma[0] if model.p == 1 else theta.sigma
    center = theta.mu[0] if model.kind == "location-scale" else 0.0
    return float(np.sum(f.logpdf((x - center) / sigma) - np.log(sigma) * np.ones_like(x)))


def density(model, theta, x):
    return float(np.exp(log_density(model, theta, x)))
