"""Decision rules: Pitman/MRE rules by quadrature, restricted flat-prior Bayes
rules, projections, the normal quantile MRE, linear combinations and
triangular-equivariant covariance rules.

The module-level functions evaluate one replicate.  The ``Estimator`` classes
evaluate whole batches (leading axis = replicate) for risk simulation and
switch to closed forms where the posterior is known exactly.
"""

import math

import numpy as np
from scipy import special

from .errors import (
    ArgumentError,
    DecompositionError,
    EstimatorFailure,
    LossDomainError,
    ParameterDomainError,
    ShapeError,
    UnderflowError,
    UnsupportedProjectionError,
)
from .losses import DIFFERENCE_SHAPES, RATIO_SHAPES, rho
from .quadrature import DEFAULT_QUAD, Posterior1D, find_window, golden_section
from .restrictions import (
    HalfLineLower,
    HalfLineUpper,
    Interval,
    PolyhedralCone,
    QuantileBox,
    QuantileCone,
    Restriction,
)

_NORMAL_WINDOW_SD = 8.0
_LOG_TINY = math.log(1e-300)


# ---------------------------------------------------------------------------
# location posteriors under a flat prior


def _scalar_location(model):
    if model.kind != "location" or model.p != 1:
        raise ArgumentError("needs a scalar location model")


def _location_logk(model, x):
    f = model.density
    return lambda t: float(np.sum(f.logpdf(x - t)))


def _location_support(model, x):
    """Range of theta with positive likelihood."""
    lo, hi = model.density.support
    # x_i - theta in [lo, hi]  <=>  theta in [x_i - hi, x_i - lo]
    return float(np.max(x) - hi), float(np.min(x) - lo)


def location_posterior(model, x, quad=DEFAULT_QUAD, bounds=(-np.inf, np.inf)):
    """Flat-prior posterior of a scalar location, optionally truncated to
    ``bounds``."""
    _scalar_location(model)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.m:
        raise ShapeError(f"replicate must have {model.m} observations, got {x.size}")
    s_lo, s_hi = _location_support(model, x)
    if not s_lo < s_hi:
        raise ParameterDomainError("data have zero marginal density (no common support)")
    logk = _location_logk(model, x)
    sd = 1.0 / math.sqrt(model.m)
    lo, hi = max(s_lo, bounds[0]), min(s_hi, bounds[1])
    restricted = bounds != (-np.inf, np.inf)
    if not lo < hi:
        raise UnderflowError("restricted set misses the likelihood support")

    if model.base == "uniform-unit":
        ref = 0.0
        return Posterior1D(logk, lo, hi, quad, window=(lo, hi), mode=0.5 * (lo + hi),
                           reference_max=ref if restricted else None)
    if model.base == "normal":
        xbar = float(np.mean(x))
        full = (float(np.min(x)) - _NORMAL_WINDOW_SD * sd, float(np.max(x)) + _NORMAL_WINDOW_SD * sd)
        if not restricted:
            return Posterior1D(logk, -np.inf, np.inf, quad, window=full, mode=xbar)
        mode = min(max(xbar, lo), hi)
        _, window = find_window(logk, lo, hi, quad.tail_drop, mode=mode, step=sd)
        return Posterior1D(logk, lo, hi, quad, window=window, mode=mode, reference_max=logk(xbar))

    # exponential / gamma: bounded above by min(x), generic window search
    full_mode, _ = find_window(logk, s_lo, s_hi, quad.tail_drop, start=s_hi - sd, step=sd)
    if not restricted:
        return Posterior1D(logk, s_lo, s_hi, quad, mode=full_mode)
    mode = min(max(full_mode, lo), hi)
    _, window = find_window(logk, lo, hi, quad.tail_drop, mode=mode, step=sd)
    return Posterior1D(logk, lo, hi, quad, window=window, mode=mode, reference_max=logk(full_mode))


def pitman_location(model, x, quad=DEFAULT_QUAD):
    """Pitman estimator: flat-prior posterior mean of a scalar location."""
    return location_posterior(model, x, quad).mean()


def _minimize_expected_loss(post, shape, tol=1e-8):
    lo = post.quantile(0.5e-9)
    hi = post.quantile(1.0 - 0.5e-9)

    def risk(d):
        return post.expect(lambda t: float(rho(shape, d - t)), points=(d,), abs_scale=1e-3)

    return golden_section(risk, lo, hi, tol=tol)


def pitman_location_general(model, shape, x, quad=DEFAULT_QUAD):
    """MRE location estimate under ``rho(d - theta)``: minimizer of the
    flat-prior posterior expected loss."""
    if shape not in DIFFERENCE_SHAPES:
        raise ArgumentError(f"location loss profile must be one of {DIFFERENCE_SHAPES}")
    post = location_posterior(model, x, quad)
    if shape == "squared":
        return post.mean()
    return _minimize_expected_loss(post, shape)


# ---------------------------------------------------------------------------
# scale posteriors under the prior 1/sigma, in the parametrization u = 1/sigma


def scale_posterior(model, x, quad=DEFAULT_QUAD):
    if model.kind != "scale":
        raise ArgumentError("needs a scale model")
    x = np.asarray(x, dtype=float).ravel()
    if np.all(x == 0):
        raise ParameterDomainError("all-zero data carry no scale information")
    f = model.density
    m = x.size
    if f.support[0] >= 0 and np.any(x < 0):
        raise ParameterDomainError("negative data outside the support of a positive scale family")

    def logk(u):
        if u < 0 or (u == 0 and m > 1):
            return -np.inf
        jac = (m - 1) * math.log(u) if m > 1 else 0.0
        return jac + float(np.sum(f.logpdf(u * x)))

    if model.base in ("exponential", "gamma"):
        shape = m * (1.0 if model.base == "exponential" else model.shape)
        total = float(np.sum(x))
        u_max = special.gammaincinv(shape, 1.0 - 1e-12) / total
        mode = max(shape - 1.0, 0.0) / total
        return Posterior1D(logk, 0.0, u_max, quad, window=(0.0, u_max), mode=mode)
    if model.base == "uniform-unit":
        u_max = 1.0 / float(np.max(np.abs(x)))
        return Posterior1D(logk, 0.0, u_max, quad, window=(0.0, u_max), mode=u_max)
    step = 1.0 / math.sqrt(float(np.mean(x * x)) * m)
    mode, window = find_window(logk, 0.0, np.inf, quad.tail_drop, start=step, step=step)
    return Posterior1D(logk, 0.0, np.inf, quad, window=window, mode=mode)


def mre_scale(model, shape, x, power=1.0, quad=DEFAULT_QUAD):
    """Generalized Bayes rule for ``sigma**power`` under the prior 1/sigma.

    ``scale-squared``: ``E[u^r] / E[u^{2r}]``; ``entropy``: ``1 / E[u^r]``,
    where ``u = 1/sigma``.
    """
    if shape not in RATIO_SHAPES:
        raise ArgumentError(f"scale loss profile must be one of {RATIO_SHAPES}")
    post = scale_posterior(model, x, quad)
    m1 = post.expect(lambda u: u**power)
    if shape == "entropy":
        return 1.0 / m1
    return m1 / post.expect(lambda u: u ** (2.0 * power))


def _gamma_moment_ratio(shape, k1, k2):
    return math.exp(special.gammaln(shape + k1) - special.gammaln(shape + k2))


def mre_scale_product(model, r, shape, x, quad=DEFAULT_QUAD):
    """Rule for ``prod_i sigma_i ** r_i`` with independent scale components
    (``x`` has shape ``(m, p)``); posterior moments factorize across
    components."""
    if model.kind != "scale" or model.p != len(r):
        raise ArgumentError("needs a scale model with one component per exponent")
    if shape not in RATIO_SHAPES:
        raise ArgumentError(f"scale loss profile must be one of {RATIO_SHAPES}")
    x = np.asarray(x, dtype=float).reshape(model.m, model.p)
    comp = type(model)(kind="scale", base=model.base, m=model.m, p=1, shape=model.shape)
    m1 = m2 = 1.0
    for i, ri in enumerate(r):
        post = scale_posterior(comp, x[:, i], quad)
        m1 *= post.expect(lambda u: u**ri)
        if shape == "scale-squared":
            m2 *= post.expect(lambda u: u ** (2.0 * ri))
    return 1.0 / m1 if shape == "entropy" else m1 / m2


# ---------------------------------------------------------------------------
# restricted flat-prior Bayes rules


def _restriction_bounds(restriction):
    if isinstance(restriction, HalfLineLower) and restriction.on == "location":
        return (restriction.a, np.inf)
    if isinstance(restriction, HalfLineUpper) and restriction.on == "location":
        return (-np.inf, restriction.a)
    if isinstance(restriction, Interval) and not restriction.scale_unknown:
        return (restriction.a, restriction.b)
    raise ArgumentError("restricted flat-prior Bayes needs a location half-line or interval")


def restricted_flat_bayes(model, restriction, x, quad=DEFAULT_QUAD):
    """Posterior mean under the flat prior truncated to ``restriction``."""
    return location_posterior(model, x, quad, bounds=_restriction_bounds(restriction)).mean()


def _log_diff_ndtr(alpha, beta):
    """``log(Phi(beta) - Phi(alpha))`` for ``alpha + beta <= 0``."""
    lb = special.log_ndtr(beta)
    la = special.log_ndtr(alpha)
    with np.errstate(divide="ignore"):
        return lb + np.log1p(-np.exp(la - lb))


def truncnorm_mean(center, sd, a, b):
    """Mean of ``N(center, sd^2)`` truncated to ``[a, b]`` (vectorized)."""
    center = np.asarray(center, dtype=float)
    alpha = (a - center) / sd
    beta = (b - center) / sd
    flip = (alpha + beta) > 0
    lo = np.where(flip, -beta, alpha)
    hi = np.where(flip, -alpha, beta)
    logz = _log_diff_ndtr(lo, hi)
    if np.any(logz < _LOG_TINY):
        raise UnderflowError("truncation set carries less than 1e-300 of the posterior mass")
    log_phi = lambda z: np.where(np.isfinite(z), -0.5 * z * z - 0.5 * math.log(2 * math.pi), -np.inf)
    offset = np.exp(log_phi(lo) - logz) - np.exp(log_phi(hi) - logz)
    return center + sd * np.where(flip, -offset, offset)


def restricted_flat_bayes_cone(x, m=1):
    """Flat-prior Bayes rule for two normal means ordered ``mu1 <= mu2``.

    In rotated coordinates ``((x1 + x2), (x2 - x1)) / sqrt(2)`` the first is
    unrestricted and the second is a normal truncated to ``[0, inf)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ShapeError("ordered-means rule needs two components")
    sd = 1.0 / math.sqrt(m)
    root2 = math.sqrt(2.0)
    u = (x[..., 0] + x[..., 1]) / root2
    v = truncnorm_mean((x[..., 1] - x[..., 0]) / root2, sd, 0.0, np.inf)
    return np.stack([(u - v) / root2, (u + v) / root2], axis=-1)


# ---------------------------------------------------------------------------
# closed-form rules


def c_m(m):
    """``Gamma(m/2) / (sqrt(2) Gamma((m+1)/2))`` via log-gamma."""
    if int(m) != m or m < 2:
        raise ArgumentError("c_m needs an integer m >= 2")
    return math.exp(special.gammaln(m / 2.0) - special.gammaln((m + 1) / 2.0)) / math.sqrt(2.0)


def quantile_mre(x, eta):
    """``xbar + eta c_m S`` with ``S^2`` the centered sum of squares."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    if m < 2:
        raise ArgumentError("quantile MRE needs m >= 2 observations")
    xbar = x.mean(axis=-1)
    s = np.sqrt(np.sum((x - xbar[..., None]) ** 2, axis=-1))
    return xbar + eta * c_m(m) * s


LOCATION_OFFSETS = {"normal": 0.0, "exponential": 1.0, "uniform-unit": 0.5}


def location_offset(model):
    """``E(X - mu)`` for one observation of a location model."""
    return float(model.density.mean)


def linear_mre(models, a, x):
    """Unbiased estimate ``sum_i a_i (x_i - b_i)`` with ``b_i = E(X_i - mu_i)``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (len(models) == a.size == x.shape[-1]):
        raise ShapeError("models, coefficients and observations must have equal length")
    b = np.array([location_offset(md) for md in models])
    return (x - b) @ a


def a0(m, p):
    """``diag(1 / (m + p - 2i + 1))``, i = 1..p."""
    if m < p:
        raise ArgumentError("needs m >= p")
    i = np.arange(1, p + 1)
    return np.diag(1.0 / (m + p - 2 * i + 1))


def cov_equivariant(s, a):
    """``L A L'`` with ``L`` the lower Cholesky factor of ``S`` (batched)."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(np.diag(a) <= 0) or np.any(a != np.diag(np.diag(a))):
        raise ArgumentError("A must be diagonal with positive entries")
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError("S is not positive definite") from exc
    return chol @ a @ np.swapaxes(chol, -1, -2)


def projected_estimate(base, restriction, model, x):
    """Evaluate ``base`` on one replicate and project the decision onto the
    restriction."""
    est = Projected(base, restriction)
    return est(np.asarray(x, dtype=float)[None])[0]


# ---------------------------------------------------------------------------
# batch estimators


class Estimator:
    """A deterministic rule applied to a batch of replicates."""

    name = "estimator"
    kinks = ()

    def __call__(self, X):
        raise NotImplementedError

    def single(self, x):
        return self(np.asarray(x, dtype=float)[None])[0]

    def _rowwise(self, X, fn):
        out = []
        for i, row in enumerate(X):
            try:
                out.append(fn(row))
            except (UnderflowError, ParameterDomainError) as exc:
                raise EstimatorFailure(f"{self.name} failed on replicate {i}: {exc}", replicate=i) from exc
        return np.array(out)


class Identity(Estimator):
    """``delta(X) = X`` (one observation per replicate)."""

    name = "identity"

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 3 and X.shape[1] == X.shape[2] and X.shape[1] > 1 and getattr(self, "_wishart", False):
            return X
        if X.ndim >= 2 and X.shape[1] != 1:
            raise ArgumentError("identity rule needs m = 1 observation per replicate")
        return X[:, 0]


class WishartIdentity(Identity):
    name = "identity"
    _wishart = True


class PitmanLocation(Estimator):
    """MRE location rule; closed forms for normal, uniform and exponential
    bases, quadrature otherwise."""

    name = "pitman"

    def __init__(self, model, shape="squared", quad=DEFAULT_QUAD):
        if model.kind not in ("location", "multivariate-location"):
            raise ArgumentError("Pitman estimator needs a location model")
        self.model, self.shape, self.quad = model, shape, quad

    def _closed(self, X):
        base, m = self.model.base, self.model.m
        if base == "normal":
            return X.mean(axis=1)
        if base == "uniform-unit":
            return 0.5 * (X.max(axis=1) + X.min(axis=1) - 1.0)
        if base == "exponential" and self.shape == "squared":
            return X.min(axis=1) - 1.0 / m
        return None

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        out = self._closed(X)
        if out is not None:
            return out
        if self.model.p != 1:
            raise ArgumentError("quadrature Pitman rule is scalar only")
        return self._rowwise(X, lambda row: pitman_location_general(self.model, self.shape, row, self.quad))


class MREScale(Estimator):
    """Generalized Bayes rule for ``sigma**power`` under the prior 1/sigma."""

    name = "mre-scale"

    def __init__(self, model, shape="scale-squared", power=1.0, quad=DEFAULT_QUAD):
        if model.kind != "scale" or model.p != 1:
            raise ArgumentError("MRE scale rule needs a scalar scale model")
        if shape not in RATIO_SHAPES:
            raise ArgumentError(f"scale loss profile must be one of {RATIO_SHAPES}")
        self.model, self.shape, self.power, self.quad = model, shape, float(power), quad

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if self.model.base in ("exponential", "gamma"):
            k = self.model.m * (1.0 if self.model.base == "exponential" else self.model.shape)
            t = X.sum(axis=1) ** self.power
            r = self.power
            if self.shape == "entropy":
                return _gamma_moment_ratio(k, 0.0, r) * t
            return _gamma_moment_ratio(k, r, 2.0 * r) * t
        return self._rowwise(X, lambda row: mre_scale(self.model, self.shape, row, self.power, self.quad))


class ScaleProductMRE(Estimator):
    name = "mre-scale-product"

    def __init__(self, model, r, shape="scale-squared", quad=DEFAULT_QUAD):
        self.model, self.r, self.shape, self.quad = model, tuple(r), shape, quad

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if self.model.base in ("exponential", "gamma"):
            k = self.model.m * (1.0 if self.model.base == "exponential" else self.model.shape)
            totals = X.sum(axis=1)
            m1 = np.ones(len(X))
            m2 = np.ones(len(X))
            for i, ri in enumerate(self.r):
                # E[u^k] = Gamma(shape + k) / Gamma(shape) * T^-k
                m1 *= _gamma_moment_ratio(k, ri, 0.0) * totals[:, i] ** (-ri)
                m2 *= _gamma_moment_ratio(k, 2 * ri, 0.0) * totals[:, i] ** (-2 * ri)
            return 1.0 / m1 if self.shape == "entropy" else m1 / m2
        return self._rowwise(X, lambda row: mre_scale_product(self.model, self.r, self.shape, row, self.quad))


class RestrictedFlatBayes(Estimator):
    """Posterior mean under the flat prior on a location half-line or interval
    (the Katz rule for ``[a, inf)``)."""

    name = "katz"

    def __init__(self, model, restriction, quad=DEFAULT_QUAD):
        _scalar_location(model)
        self.bounds = _restriction_bounds(restriction)
        self.model, self.restriction, self.quad = model, restriction, quad

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if self.model.base == "normal":
            return truncnorm_mean(X.mean(axis=1), 1.0 / math.sqrt(self.model.m), *self.bounds)
        return self._rowwise(X, lambda row: restricted_flat_bayes(self.model, self.restriction, row, self.quad))


class OrderedMeansBayes(Estimator):
    """Flat-prior Bayes rule on ``{mu1 <= mu2}`` for ``N_2(mu, I)``."""

    name = "hartigan"

    def __init__(self, model):
        if model.kind != "multivariate-location" or model.p != 2 or model.base != "normal":
            raise ArgumentError("ordered-means rule needs a bivariate normal location model")
        self.model = model

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return restricted_flat_bayes_cone(X.mean(axis=1), self.model.m)


class QuantileMRE(Estimator):
    name = "quantile-mre"

    def __init__(self, eta):
        self.eta = float(eta)

    def __call__(self, X):
        return quantile_mre(X, self.eta)


class QuantileFamily(Estimator):
    """``xbar + eta c S`` for a free constant ``c``."""

    name = "quantile-family"

    def __init__(self, eta, c):
        self.eta, self.c = float(eta), float(c)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        xbar = X.mean(axis=1)
        s = np.sqrt(np.sum((X - xbar[:, None]) ** 2, axis=1))
        return xbar + self.eta * self.c * s


class ScaleMultiple(Estimator):
    """``c * sum(X)`` for a scalar scale model."""

    name = "scale-multiple"

    def __init__(self, c):
        self.c = float(c)

    def __call__(self, X):
        return self.c * np.asarray(X, dtype=float).sum(axis=1)


class LinearMRE(Estimator):
    name = "linear-mre"

    def __init__(self, models, a):
        self.models, self.a = list(models), np.asarray(a, dtype=float)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 3:
            if X.shape[1] != 1:
                raise ArgumentError("linear MRE takes one observation per component")
            X = X[:, 0, :]
        return linear_mre(self.models, self.a, X)


class CovEquivariant(Estimator):
    """``delta_A(S) = L A L'`` for a positive diagonal ``A``."""

    name = "cov-equivariant"

    def __init__(self, a, name=None):
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = np.diag(a)
        if np.any(np.diag(a) <= 0) or np.any(a != np.diag(np.diag(a))):
            raise ArgumentError("A must be diagonal with positive entries")
        self.a = a
        if name:
            self.name = name

    def __call__(self, X):
        return cov_equivariant(X, self.a)


class Projected(Estimator):
    """A base rule followed by Euclidean projection onto a convex restriction."""

    name = "projected"

    def __init__(self, base, restriction, name=None):
        if not isinstance(restriction, Restriction):
            raise ArgumentError("projection target must be a Restriction")
        if not restriction.convex:
            raise UnsupportedProjectionError(f"{type(restriction).__name__} is not convex")
        self.base, self.restriction = base, restriction
        if name:
            self.name = name
        if isinstance(base, Identity):
            if isinstance(restriction, Interval):
                self.kinks = (restriction.a, restriction.b)
            elif isinstance(restriction, (HalfLineLower, HalfLineUpper)):
                self.kinks = (restriction.a,)

    def __call__(self, X):
        d = np.asarray(self.base(X), dtype=float)
        r = self.restriction
        n = d.shape[0]
        if isinstance(r, QuantileCone) and d.ndim == 1:
            # image of the cone under mu + eta sigma is [0, inf)
            return np.maximum(d, 0.0)
        flat = d.reshape(n, -1)
        if flat.shape[1] == r.dim:
            return r.project_coords(flat).reshape(d.shape)
        if flat.shape[1] == 1 and isinstance(r, (HalfLineLower, HalfLineUpper, Interval, QuantileBox)):
            padded = np.column_stack([flat[:, 0]] + [np.ones(n)] * (r.dim - 1))
            return r.project_coords(padded)[:, 0]
        raise ArgumentError(f"cannot project {d.shape[1:]} decisions onto {type(r).__name__}")
