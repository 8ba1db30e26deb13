"""Group elements and their actions on data, parameters and decisions.

Each element ``g`` acts three ways: ``g`` on data, ``g-bar`` on parameter
points and ``g*`` on decisions, with ``L(g-bar theta, g* d) = L(theta, d)``
for the matching invariant losses.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .models import ParameterPoint


def _vec(v):
    a = np.atleast_1d(np.asarray(v, dtype=float))
    a.setflags(write=False)
    return a


class GroupElement:
    kind = None

    def on_param(self, theta):
        raise NotImplementedError

    def on_data(self, x):
        raise NotImplementedError

    def on_coords(self, v):
        """Parameter action on a stack of flat coordinate rows."""
        raise NotImplementedError

    def on_decision(self, d, loss):
        raise NotImplementedError

    def inverse(self):
        raise NotImplementedError

    def compose(self, other):
        """``self`` after ``other``."""
        raise NotImplementedError

    def _same(self, other):
        if type(other) is not type(self):
            raise ArgumentError(f"cannot compose {type(self).__name__} with {type(other).__name__}")


@dataclass(frozen=True, eq=False)
class Shift(GroupElement):
    """Additive translation by ``c`` (scalar or vector)."""

    c: np.ndarray
    kind = "shift"

    def __post_init__(self):
        object.__setattr__(self, "c", _vec(self.c))

    def _offset(self):
        return self.c[0] if self.c.size == 1 else self.c

    def on_param(self, theta):
        if theta.mu is None or theta.sigma is not None or theta.cov is not None:
            raise ArgumentError("Shift acts on pure location parameters")
        if theta.mu.shape != self.c.shape:
            raise ArgumentError(f"shift of length {self.c.size} on mu of length {theta.mu.size}")
        return ParameterPoint(mu=theta.mu + self.c)

    def on_data(self, x):
        return np.asarray(x, dtype=float) + self._offset()

    def on_coords(self, v):
        return np.asarray(v, dtype=float) + self.c

    def on_decision(self, d, loss):
        if loss.estimand == "location":
            return np.asarray(d, dtype=float) + self._offset()
        if loss.estimand == "linear":
            return np.asarray(d, dtype=float) + float(np.dot(loss.a, self.c))
        raise ArgumentError(f"Shift does not act on {loss.estimand} decisions")

    def inverse(self):
        return Shift(-self.c)

    def compose(self, other):
        self._same(other)
        return Shift(self.c + other.c)

    def __repr__(self):
        return f"Shift({self.c.tolist()})"


@dataclass(frozen=True, eq=False)
class Scale(GroupElement):
    """Componentwise multiplication by positive factors ``s``."""

    s: np.ndarray
    kind = "scale"

    def __post_init__(self):
        s = _vec(self.s)
        if np.any(~np.isfinite(s)) or np.any(s <= 0):
            raise ArgumentError(f"scale factors must be strictly positive, got {s}")
        object.__setattr__(self, "s", s)

    def _factor(self):
        return self.s[0] if self.s.size == 1 else self.s

    def on_param(self, theta):
        if theta.sigma is None or theta.mu is not None or theta.cov is not None:
            raise ArgumentError("Scale acts on pure scale parameters")
        if theta.sigma.shape != self.s.shape:
            raise ArgumentError(f"scale of length {self.s.size} on sigma of length {theta.sigma.size}")
        return ParameterPoint(sigma=theta.sigma * self.s)

    def on_data(self, x):
        return np.asarray(x, dtype=float) * self._factor()

    def on_coords(self, v):
        return np.asarray(v, dtype=float) * self.s

    def on_decision(self, d, loss):
        if loss.estimand == "scale":
            return np.asarray(d, dtype=float) * float(self.s[0]) ** loss.power
        if loss.estimand == "scale-product":
            return np.asarray(d, dtype=float) * float(np.exp(np.dot(loss.r, np.log(self.s))))
        raise ArgumentError(f"Scale does not act on {loss.estimand} decisions")

    def inverse(self):
        return Scale(1.0 / self.s)

    def compose(self, other):
        self._same(other)
        return Scale(self.s * other.s)

    def __repr__(self):
        return f"Scale({self.s.tolist()})"


@dataclass(frozen=True, eq=False)
class ShiftScale(GroupElement):
    """Affine map ``x -> scale * x + shift`` of the location-scale group."""

    shift: float
    scale: float
    kind = "shift-scale"

    def __post_init__(self):
        object.__setattr__(self, "shift", float(self.shift))
        object.__setattr__(self, "scale", float(self.scale))
        if not np.isfinite(self.shift) or not (np.isfinite(self.scale) and self.scale > 0):
            raise ArgumentError("ShiftScale needs a finite shift and a positive scale")

    def on_param(self, theta):
        if theta.mu is None or theta.sigma is None or theta.mu.size != 1:
            raise ArgumentError("ShiftScale acts on scalar (mu, sigma) parameters")
        return ParameterPoint(mu=self.scale * theta.mu + self.shift, sigma=self.scale * theta.sigma)

    def on_data(self, x):
        return self.scale * np.asarray(x, dtype=float) + self.shift

    def on_coords(self, v):
        v = np.asarray(v, dtype=float)
        return np.column_stack([self.scale * v[:, 0] + self.shift, self.scale * v[:, 1]])

    def on_decision(self, d, loss):
        if loss.estimand in ("location", "quantile"):
            return self.scale * np.asarray(d, dtype=float) + self.shift
        if loss.estimand == "scale":
            return np.asarray(d, dtype=float) * self.scale**loss.power
        raise ArgumentError(f"ShiftScale does not act on {loss.estimand} decisions")

    def inverse(self):
        return ShiftScale(-self.shift / self.scale, 1.0 / self.scale)

    def compose(self, other):
        self._same(other)
        return ShiftScale(self.scale * other.shift + self.shift, self.scale * other.scale)

    def __repr__(self):
        return f"ShiftScale({self.shift!r}, {self.scale!r})"


@dataclass(frozen=True, eq=False)
class MatrixScale(GroupElement):
    """``lam * I_p`` acting on covariances, Wishart statistics and decisions
    (``sqrt(lam)`` on the underlying normal vectors)."""

    lam: float
    kind = "matrix-scale"

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ArgumentError("MatrixScale needs a positive multiplier")

    def on_param(self, theta):
        if theta.cov is None:
            raise ArgumentError("MatrixScale acts on covariance parameters")
        return ParameterPoint(cov=self.lam * theta.cov)

    def on_data(self, x):
        return self.lam * np.asarray(x, dtype=float)

    def on_coords(self, v):
        return self.lam * np.asarray(v, dtype=float)

    def on_decision(self, d, loss):
        if loss.estimand != "covariance":
            raise ArgumentError(f"MatrixScale does not act on {loss.estimand} decisions")
        return self.lam * np.asarray(d, dtype=float)

    def inverse(self):
        return MatrixScale(1.0 / self.lam)

    def compose(self, other):
        self._same(other)
        return MatrixScale(self.lam * other.lam)

    def __repr__(self):
        return f"MatrixScale({self.lam!r})"


def identity(model):
    """The neutral element of ``model``'s group."""
    if model.kind in ("location", "multivariate-location"):
        return Shift(np.zeros(model.p))
    if model.kind == "scale":
        return Scale(np.ones(model.p))
    if model.kind == "location-scale":
        return ShiftScale(0.0, 1.0)
    return MatrixScale(1.0)


def apply_group(g, target, action="param", loss=None):
    """Apply ``g`` to a parameter point, a data point or a decision."""
    if action == "param":
        return g.on_param(target)
    if action == "data":
        return g.on_data(target)
    if action == "decision":
        if loss is None:
            raise ArgumentError("decision action needs the loss specification")
        return g.on_decision(target, loss)
    raise ArgumentError(f"action must be param, data or decision, got {action!r}")
