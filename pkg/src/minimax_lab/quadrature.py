"""One-dimensional posterior integration and golden-section search."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import ArgumentError, ConvergenceError, UnderflowError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive Gauss-Kronrod integration (QUADPACK) with a relative tolerance.

    ``tail_drop`` is the log-density drop below the mode at which a window
    edge is placed when no closed-form window rule applies.
    """

    rel_tol: float = 1e-8
    limit: int = 500
    tail_drop: float = 46.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ArgumentError("quadrature tolerance must be positive")


DEFAULT_QUAD = QuadratureSpec()


def integrate_1d(f, lo, hi, quad=DEFAULT_QUAD, points=None, abs_tol=0.0):
    """``int_lo^hi f`` to the configured relative tolerance; raises on failure."""
    if not lo < hi:
        return 0.0
    pts = None
    if points is not None:
        pts = sorted({float(p) for p in points if lo < p < hi})
        pts = pts or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f, lo, hi, epsabs=abs_tol, epsrel=quad.rel_tol, limit=quad.limit, points=pts, full_output=1
        )
    value, err = out[0], out[1]
    if len(out) > 3 and err > max(abs_tol, 10 * quad.rel_tol * abs(value)):
        raise ConvergenceError(f"quadrature failed on [{lo}, {hi}]: {out[3]}", gap=err)
    return value


def golden_section(f, lo, hi, tol=1e-8, max_iter=500):
    """Minimizer of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


class Posterior1D:
    """Unnormalized 1-D density ``exp(logk)`` on ``[lo, hi]``, integrated over a
    window around its maximizer."""

    def __init__(self, logk, lo, hi, quad=DEFAULT_QUAD, window=None, mode=None, reference_max=None):
        self.logk = logk
        self.quad = quad
        if window is None:
            mode, window = find_window(logk, lo, hi, quad.tail_drop, mode=mode)
        elif mode is None:
            mode = 0.5 * (window[0] + window[1])
        self.mode = mode
        self.lo, self.hi = window
        self.log_peak = max(_safe(logk, mode), _safe(logk, self.lo), _safe(logk, self.hi))
        if not np.isfinite(self.log_peak):
            raise UnderflowError("posterior has no mass on the integration window")
        if reference_max is not None and self.log_peak - reference_max < math.log(1e-300):
            raise UnderflowError(
                f"posterior mass on the restricted set is below 1e-300 of the unrestricted mass "
                f"(log ratio {self.log_peak - reference_max:.1f})"
            )
        self._mass = None

    def kernel(self, t):
        v = self.logk(t)
        return math.exp(v - self.log_peak) if np.isfinite(v) else 0.0

    @property
    def mass(self):
        if self._mass is None:
            self._mass = integrate_1d(self.kernel, self.lo, self.hi, self.quad, points=[self.mode])
            if not self._mass > 0:
                raise UnderflowError("posterior mass underflowed to zero")
        return self._mass

    def expect(self, g, points=(), abs_scale=0.0):
        """Posterior expectation of ``g``; ``abs_scale`` sets an absolute error
        floor ``rel_tol * abs_scale`` for integrands that may cancel to zero."""
        pts = [self.mode, *points]
        floor = self.quad.rel_tol * abs_scale * self.mass
        value = integrate_1d(lambda t: g(t) * self.kernel(t), self.lo, self.hi, self.quad, points=pts, abs_tol=floor)
        return value / self.mass

    def mean(self):
        c = self.mode
        return c + self.expect(lambda t: t - c, abs_scale=self.hi - self.lo)

    def cdf(self, t):
        if t <= self.lo:
            return 0.0
        if t >= self.hi:
            return 1.0
        return integrate_1d(self.kernel, self.lo, t, self.quad, points=[self.mode]) / self.mass

    def quantile(self, q):
        return optimize.brentq(lambda t: self.cdf(t) - q, self.lo, self.hi, xtol=1e-12, rtol=1e-12)


def _safe(logk, t):
    try:
        v = float(logk(t))
    except (ValueError, ZeroDivisionError, OverflowError):
        return -np.inf
    return v if not np.isnan(v) else -np.inf


def find_window(logk, lo, hi, drop, mode=None, start=None, step=1.0):
    """Maximizer of ``logk`` on ``[lo, hi]`` and the window where it stays
    within ``drop`` of the maximum (assumes a unimodal kernel)."""
    if mode is None:
        mode = _maximize(logk, lo, hi, start=start, step=step)
    peak = _safe(logk, mode)
    if not np.isfinite(peak):
        raise UnderflowError("log-density is -inf at its maximizer")

    def edge(direction, bound):
        if mode == bound:
            return bound
        s = step
        t = mode
        while True:
            nxt = mode + direction * s
            if (direction < 0 and nxt <= bound) or (direction > 0 and nxt >= bound):
                return bound
            if _safe(logk, nxt) < peak - drop:
                return nxt
            t = nxt
            s *= 2.0
            if s > 1e12:
                raise ConvergenceError("could not bracket the posterior tail")

    return mode, (edge(-1.0, lo), edge(1.0, hi))


def _maximize(logk, lo, hi, start=None, step=1.0):
    if np.isfinite(lo) and np.isfinite(hi):
        a, b = lo, hi
    else:
        c = start if start is not None else (lo if np.isfinite(lo) else hi if np.isfinite(hi) else 0.0)
        # expand until the bracket ends fall well below an interior value
        a = c - step if not np.isfinite(lo) else lo
        b = c + step if not np.isfinite(hi) else hi
        s = step
        while True:
            grow = False
            mid = _safe(logk, 0.5 * (a + b))
            if not np.isfinite(lo) and _safe(logk, a) >= mid - 1.0:
                s *= 2.0
                a = c - s
                grow = True
            if not np.isfinite(hi) and _safe(logk, b) >= mid - 1.0:
                s *= 2.0
                b = c + s
                grow = True
            if not grow:
                break
            if s > 1e12:
                raise ConvergenceError("could not bracket the posterior mode")
    # golden section on -logk, then guard the endpoints (monotone kernels)
    t = golden_section(lambda u: -_safe(logk, u), a, b, tol=1e-10 * max(1.0, abs(a), abs(b)))
    best = max(((_safe(logk, u), u) for u in (t, a, b)), key=lambda z: z[0])
    return best[1]
