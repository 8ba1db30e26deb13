"""Restricted parameter spaces and their group-shift sequences.

Every restriction works on flat parameter coordinates (see
``ParameterPoint.as_vector``) so membership and group images can be checked
for many points at once; the ``ParameterPoint`` methods wrap those.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ShapeError, UnsupportedProjectionError
from .groups import MatrixScale, Scale, Shift, ShiftScale
from .models import ParameterPoint
from .projection import dykstra, pava, polish

BOUNDARY_TOL = 1e-12

AMBIENTS = ("location", "scale", "location-scale", "multivariate-location", "wishart")


def _ge(lhs, rhs):
    """``lhs >= rhs`` up to a residual of BOUNDARY_TOL relative to magnitude."""
    lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs - rhs >= -BOUNDARY_TOL * scale


def _loguniform(gen, lo, hi, size):
    return np.exp(gen.uniform(np.log(lo), np.log(hi), size))


def _check_n(n):
    if int(n) != n or n < 1:
        raise ArgumentError(f"shift index n must be a positive integer, got {n}")
    return int(n)


class Restriction:
    """Base class; subclasses define the coordinate-level primitives."""

    ambient = None
    convex = True

    @property
    def dim(self):
        raise NotImplementedError

    def contains_coords(self, v):
        raise NotImplementedError

    def project_coords(self, v):
        raise NotImplementedError

    def shift_element(self, n):
        raise NotImplementedError

    def sample_coords(self, gen, k):
        """``k`` random points of the restricted space."""
        raise NotImplementedError

    def probe_coords(self, gen, k):
        """``k`` random points of the full space, within a moderate box."""
        if self.ambient in ("location", "multivariate-location"):
            return gen.uniform(-10.0, 10.0, (k, self.dim))
        if self.ambient == "scale":
            return _loguniform(gen, 0.1, 10.0, (k, self.dim))
        if self.ambient == "location-scale":
            return np.column_stack([gen.uniform(-10.0, 10.0, k), _loguniform(gen, 0.1, 10.0, k)])
        p = int(round(np.sqrt(self.dim)))
        return np.array([_random_spd(gen, p, 0.1, 10.0).ravel() for _ in range(k)])

    def to_point(self, v):
        v = np.asarray(v, dtype=float)
        if self.ambient in ("location", "multivariate-location"):
            return ParameterPoint(mu=v)
        if self.ambient == "scale":
            return ParameterPoint(sigma=v)
        if self.ambient == "location-scale":
            return ParameterPoint(mu=v[:1], sigma=v[1:])
        p = int(round(np.sqrt(v.size)))
        return ParameterPoint(cov=v.reshape(p, p))

    def _coords(self, theta):
        v = theta.as_vector()
        if v.size != self.dim or not _matches_ambient(theta, self.ambient):
            raise ShapeError(f"{type(self).__name__} lives on a {self.ambient} space of dimension {self.dim}")
        return v

    def contains(self, theta):
        return bool(self.contains_coords(self._coords(theta)[None, :])[0])

    def project(self, theta):
        if not self.convex:
            raise UnsupportedProjectionError(f"{type(self).__name__} is not convex; projection unsupported")
        return self.to_point(self.project_coords(self._coords(theta)[None, :])[0])

    def to_dict(self):
        out = {"type": self.type_name}
        for k, v in self.__dict__.items():
            if k.startswith("_"):
                continue
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def _matches_ambient(theta, ambient):
    has = tuple(getattr(theta, n) is not None for n in ("mu", "sigma", "cov"))
    return has == {
        "location": (True, False, False),
        "multivariate-location": (True, False, False),
        "scale": (False, True, False),
        "location-scale": (True, True, False),
        "wishart": (False, False, True),
    }[ambient]


def _random_spd(gen, p, lo, hi):
    q, _ = np.linalg.qr(gen.standard_normal((p, p)))
    m = q @ np.diag(_loguniform(gen, lo, hi, p)) @ q.T
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class _HalfLine(Restriction):
    a: float
    on: str = "location"

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        if self.on not in ("location", "scale", "location-scale"):
            raise ArgumentError("half-line restriction acts on location, scale or location-scale parameters")
        if self.on == "scale" and not self.a > 0:
            raise ArgumentError("a scale bound must be positive")

    @property
    def ambient(self):
        return self.on

    @property
    def dim(self):
        return 2 if self.on == "location-scale" else 1


@dataclass(frozen=True)
class HalfLineLower(_HalfLine):
    """``[a, inf)`` for a location or scale parameter (or the location
    coordinate of a location-scale pair)."""

    type_name = "half-line-lower"

    def contains_coords(self, v):
        return _ge(v[:, 0], self.a)

    def project_coords(self, v):
        out = np.array(v, dtype=float)
        out[:, 0] = np.maximum(out[:, 0], self.a)
        return out

    def shift_element(self, n):
        n = _check_n(n)
        if self.on == "scale":
            return Scale(1.0 / n)
        if self.on == "location-scale":
            return ShiftScale(-n, 1.0)
        return Shift(-n)

    def sample_coords(self, gen, k):
        if self.on == "scale":
            return (self.a * np.exp(gen.exponential(1.0, k)))[:, None]
        mu = self.a + gen.exponential(2.0, k)
        if self.on == "location-scale":
            return np.column_stack([mu, _loguniform(gen, 0.1, 10.0, k)])
        return mu[:, None]


@dataclass(frozen=True)
class HalfLineUpper(_HalfLine):
    """``(-inf, a]`` (or ``(0, a]`` for a scale parameter)."""

    type_name = "half-line-upper"

    def contains_coords(self, v):
        return _ge(self.a, v[:, 0])

    def project_coords(self, v):
        out = np.array(v, dtype=float)
        out[:, 0] = np.minimum(out[:, 0], self.a)
        return out

    def shift_element(self, n):
        n = _check_n(n)
        if self.on == "scale":
            return Scale(float(n))
        if self.on == "location-scale":
            return ShiftScale(n, 1.0)
        return Shift(n)

    def sample_coords(self, gen, k):
        if self.on == "scale":
            return (self.a * np.exp(-gen.exponential(1.0, k)))[:, None]
        mu = self.a - gen.exponential(2.0, k)
        if self.on == "location-scale":
            return np.column_stack([mu, _loguniform(gen, 0.1, 10.0, k)])
        return mu[:, None]


@dataclass(frozen=True)
class Interval(Restriction):
    """``mu in [a, b]``; with ``scale_unknown`` the space is ``[a, b] x (0, inf)``."""

    a: float
    b: float
    scale_unknown: bool = False
    type_name = "interval"

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a < self.b:
            raise ArgumentError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def ambient(self):
        return "location-scale" if self.scale_unknown else "location"

    @property
    def dim(self):
        return 2 if self.scale_unknown else 1

    def contains_coords(self, v):
        return _ge(v[:, 0], self.a) & _ge(self.b, v[:, 0])

    def project_coords(self, v):
        out = np.array(v, dtype=float)
        out[:, 0] = np.clip(out[:, 0], self.a, self.b)
        return out

    def shift_element(self, n):
        n = _check_n(n)
        if self.scale_unknown:
            return ShiftScale(-n * (self.a + self.b) / 2.0, float(n))
        # known scale: only pure translations are available
        return Shift(-n)

    def sample_coords(self, gen, k):
        mu = gen.uniform(self.a, self.b, k)
        if self.scale_unknown:
            return np.column_stack([mu, _loguniform(gen, 0.1, 10.0, k)])
        return mu[:, None]


@dataclass(frozen=True, eq=False)
class PolyhedralCone(Restriction):
    """``{mu : C mu >= 0}`` with ``C`` of full row rank ``q <= p``."""

    C: np.ndarray
    kind: str | None = None
    _pinv: np.ndarray = field(init=False, repr=False)
    type_name = "polyhedral-cone"
    ambient = "multivariate-location"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.C, dtype=float))
        q, p = c.shape
        if q > p:
            raise ArgumentError(f"cone matrix has more rows ({q}) than columns ({p})")
        sv = np.linalg.svd(c, compute_uv=False)
        if sv.size == 0 or sv.min() <= 1e-10 * sv.max():
            raise ArgumentError("cone matrix must have full row rank")
        c.setflags(write=False)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "_pinv", np.linalg.pinv(c))

    @property
    def dim(self):
        return self.C.shape[1]

    def contains_coords(self, v):
        lhs = v @ self.C.T
        scale = np.maximum(1.0, np.abs(v).max(axis=1, keepdims=True))
        return np.all(lhs >= -BOUNDARY_TOL * scale, axis=1)

    def project_coords(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "simple-order":
            r = self.C.shape[0] + 1
            out = v.copy()
            for row in out:
                row[:r] = pava(row[:r])
            return out
        return polish(self.C, v, dykstra(self.C, v))

    def shift_element(self, n):
        n = _check_n(n)
        # minimum-norm solution of C g = -n (1, ..., 1)'
        return Shift(-n * (self._pinv @ np.ones(self.C.shape[0])))

    def sample_coords(self, gen, k):
        q, p = self.C.shape
        y = gen.exponential(2.0, (k, q))
        z = gen.uniform(-5.0, 5.0, (k, p))
        null = np.eye(p) - self._pinv @ self.C
        return y @ self._pinv.T + z @ null.T

    def to_dict(self):
        return {"type": self.type_name, "C": self.C.tolist(), "kind": self.kind}


def make_cone(kind, p, r=None, peak=None):
    """Constraint matrices for the orthant, simple-order, tree-order and
    umbrella-order cones (minimal number of rows)."""
    if int(p) != p or p < 2:
        raise ArgumentError("cones need p >= 2")
    p = int(p)
    eye = np.eye(p)
    if kind == "orthant":
        return PolyhedralCone(eye, kind="orthant")
    if kind == "simple-order":
        r = p if r is None else int(r)
        if not 2 <= r <= p:
            raise ArgumentError(f"simple order length r must be in [2, {p}], got {r}")
        rows = [eye[i + 1] - eye[i] for i in range(r - 1)]
        return PolyhedralCone(np.array(rows), kind="simple-order")
    if kind == "tree-order":
        return PolyhedralCone(np.array([eye[i] - eye[0] for i in range(1, p)]), kind="tree-order")
    if kind == "umbrella":
        if peak is None or int(peak) != peak or not 1 <= peak <= p:
            raise ArgumentError(f"umbrella peak must be in 1..{p}, got {peak}")
        m = int(peak)
        rows = [eye[i + 1] - eye[i] for i in range(m - 1)]
        rows += [eye[i] - eye[i + 1] for i in range(m - 1, p - 1)]
        return PolyhedralCone(np.array(rows), kind="umbrella")
    raise ArgumentError(f"unknown cone kind {kind!r}; choose orthant, simple-order, tree-order or umbrella")


@dataclass(frozen=True)
class ScaleProduct(Restriction):
    """``prod_i sigma_i ** r_i >= c``."""

    r: tuple
    c: float
    type_name = "scale-product"
    ambient = "scale"

    def __post_init__(self):
        object.__setattr__(self, "r", tuple(float(v) for v in self.r))
        object.__setattr__(self, "c", float(self.c))
        if not self.c > 0:
            raise ArgumentError("scale-product bound c must be positive")
        if not self.r:
            raise ArgumentError("scale-product needs at least one exponent")

    @property
    def dim(self):
        return len(self.r)

    @property
    def convex(self):
        # log-concave superlevel set when every exponent is nonnegative
        return all(v >= 0 for v in self.r)

    def contains_coords(self, v):
        return _ge(np.log(v) @ np.array(self.r), np.log(self.c))

    def project_coords(self, v):
        if not self.convex:
            raise UnsupportedProjectionError("scale-product projection needs nonnegative exponents")
        r = np.array(self.r)
        out = np.array(v, dtype=float)
        for i, x in enumerate(out):
            if np.dot(r, np.log(x)) >= np.log(self.c):
                continue
            # KKT: y_j^2 - x_j y_j - lam r_j = 0 on the active constraint
            y = lambda lam: 0.5 * (x + np.sqrt(x * x + 4.0 * lam * r))
            g = lambda lam: np.dot(r, np.log(y(lam))) - np.log(self.c)
            lo, hi = 0.0, 1.0
            while g(hi) < 0:
                hi *= 2.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if g(mid) < 0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-15 * hi:
                    break
            out[i] = y(hi)
        return out

    def shift_element(self, n):
        n = _check_n(n)
        if any(v == 0 for v in self.r):
            raise ArgumentError("shift sequence is undefined when an exponent is zero")
        return Scale(np.array([float(n) ** (-1.0 / v) for v in self.r]))

    def sample_coords(self, gen, k):
        r = np.array(self.r)
        logs = gen.normal(0.0, 1.0, (k, r.size))
        deficit = np.log(self.c) - logs @ r + gen.exponential(1.0, k)
        deficit = np.maximum(deficit, 0.0)
        return np.exp(logs + np.outer(deficit, r / np.dot(r, r)))


@dataclass(frozen=True)
class QuantileCone(Restriction):
    """``{(mu, sigma) : mu + eta sigma >= 0}``."""

    eta: float
    type_name = "quantile-cone"
    ambient = "location-scale"
    dim = 2

    def __post_init__(self):
        object.__setattr__(self, "eta", float(self.eta))

    def contains_coords(self, v):
        return _ge(v[:, 0] + self.eta * v[:, 1], 0.0)

    def project_coords(self, v):
        out = np.array(v, dtype=float)
        slack = out[:, 0] + self.eta * out[:, 1]
        t = np.minimum(slack, 0.0) / (1.0 + self.eta**2)
        out[:, 0] -= t
        out[:, 1] -= t * self.eta
        if np.any(out[:, 1] <= 0):
            raise UnsupportedProjectionError("projection reaches sigma <= 0, outside the parameter space")
        return out

    def shift_element(self, n):
        n = _check_n(n)
        return ShiftScale(-n, 1.0 / n)

    def sample_coords(self, gen, k):
        sigma = _loguniform(gen, 0.1, 10.0, k)
        return np.column_stack([-self.eta * sigma + gen.exponential(2.0, k), sigma])


@dataclass(frozen=True)
class QuantileBox(Restriction):
    """``{(mu, sigma) : mu >= a, sigma >= b}``."""

    a: float
    b: float
    type_name = "quantile-box"
    ambient = "location-scale"
    dim = 2

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if self.b < 0:
            raise ArgumentError("sigma bound b must be nonnegative")

    def contains_coords(self, v):
        return _ge(v[:, 0], self.a) & _ge(v[:, 1], self.b)

    def project_coords(self, v):
        out = np.array(v, dtype=float)
        out[:, 0] = np.maximum(out[:, 0], self.a)
        out[:, 1] = np.maximum(out[:, 1], self.b)
        return out

    def shift_element(self, n):
        n = _check_n(n)
        return ShiftScale(-n, 1.0 / n)

    def sample_coords(self, gen, k):
        return np.column_stack([self.a + gen.exponential(2.0, k), self.b + _loguniform(gen, 0.1, 10.0, k)])


@dataclass(frozen=True)
class _CovBound(Restriction):
    bound: float
    p: int = 2
    ambient = "wishart"

    def __post_init__(self):
        object.__setattr__(self, "bound", float(self.bound))
        if not self.bound > 0:
            raise ArgumentError("covariance bound must be positive")
        if int(self.p) != self.p or self.p < 1:
            raise ArgumentError("p must be a positive integer")

    @property
    def dim(self):
        return self.p * self.p

    def _stat(self, mats):
        raise NotImplementedError

    def contains_coords(self, v):
        mats = np.asarray(v, dtype=float).reshape(-1, self.p, self.p)
        return _ge(self._stat(mats), self.bound)

    def shift_element(self, n):
        n = _check_n(n)
        return MatrixScale(1.0 / n)

    def sample_coords(self, gen, k):
        out = []
        for _ in range(k):
            s = _random_spd(gen, self.p, 0.1, 10.0)
            stat = self._stat(s[None])[0]
            need = self._scale_to(stat) * (1.0 + gen.exponential(0.5))
            out.append((s * max(1.0, need)).ravel())
        return np.array(out)


@dataclass(frozen=True)
class CovDet(_CovBound):
    """``{Sigma > 0 : det(Sigma) >= c1}`` (not convex)."""

    type_name = "cov-det"
    convex = False

    def _stat(self, mats):
        return np.linalg.det(mats)

    def _scale_to(self, stat):
        return (self.bound / stat) ** (1.0 / self.p)

    def project_coords(self, v):
        raise UnsupportedProjectionError("the determinant-bounded set is not convex")


@dataclass(frozen=True)
class CovTrace(_CovBound):
    """``{Sigma > 0 : tr(Sigma) >= c2}``."""

    type_name = "cov-trace"

    def _stat(self, mats):
        return np.trace(mats, axis1=-2, axis2=-1)

    def _scale_to(self, stat):
        return self.bound / stat

    def project_coords(self, v):
        mats = np.array(v, dtype=float).reshape(-1, self.p, self.p)
        deficit = np.maximum(self.bound - self._stat(mats), 0.0) / self.p
        mats = mats + deficit[:, None, None] * np.eye(self.p)
        return mats.reshape(len(mats), -1)


def contains(restriction, theta):
    return restriction.contains(theta)


def project(restriction, theta):
    return restriction.project(theta)


def shift_element(restriction, n):
    return restriction.shift_element(n)
