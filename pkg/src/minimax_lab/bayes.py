"""Bayes risks of finite-support priors, the shifted-prior identity and
least-favourable prior sequences.

Risks are integrated on a composite Gauss-Legendre grid laid out in
standardized coordinates (``x = theta + s z`` for location, ``x = sigma z``
for scale).  The grid depends on the prior only through differences (ratios)
of its atoms, so a prior and its group-shifted copy are integrated on the same
standardized nodes.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ArgumentError, EmbeddingError
from .groups import Scale, Shift
from .losses import LossSpec, loss_value
from .models import ModelSpec, ParameterPoint
from .quadrature import DEFAULT_QUAD

M_MAX = 1_000_000
_GL_NODES = 16


@dataclass(frozen=True)
class PriorSupport:
    """Finite prior: scalar atoms (location or scale values) and weights."""

    atoms: tuple
    weights: tuple

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if atoms.size == 0 or atoms.size != weights.size:
            raise ArgumentError("prior needs equally many atoms and weights (at least one)")
        if np.any(weights <= 0) or abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ArgumentError("prior weights must be positive and sum to 1")
        if np.unique(atoms).size != atoms.size:
            raise ArgumentError("prior atoms must be distinct")
        object.__setattr__(self, "atoms", tuple(atoms.tolist()))
        object.__setattr__(self, "weights", tuple(weights.tolist()))

    @classmethod
    def uniform(cls, atoms):
        atoms = list(atoms)
        return cls(tuple(atoms), tuple([1.0 / len(atoms)] * len(atoms)))

    def points(self, model):
        if model.kind == "scale":
            return [ParameterPoint.scale(a) for a in self.atoms]
        return [ParameterPoint.location(a) for a in self.atoms]

    def mapped(self, g):
        """Pushed-forward prior: atoms ``g(s)``, identical weights."""
        a = np.asarray(self.atoms)
        if isinstance(g, Shift):
            new = a + float(g.c[0])
        elif isinstance(g, Scale):
            new = a * float(g.s[0])
        else:
            raise ArgumentError("finite priors move only under scalar Shift or Scale elements")
        return PriorSupport(tuple(new.tolist()), self.weights)


class _Statistic:
    """One-dimensional sufficient statistic of a scalar model.

    location: ``x = theta + s z`` with ``z ~ f0`` (``s = 1/sqrt(m)`` for the
    normal mean, ``m = 1`` otherwise); scale: ``x = sigma z`` with ``z`` the
    sum of ``m`` exponential/gamma observations or a single observation.
    """

    def __init__(self, model):
        if not model.scalar or model.kind not in ("location", "scale"):
            raise ArgumentError("Bayes risks need a scalar location or scale model")
        self.kind = model.kind
        self.model = model
        if model.kind == "location":
            if model.base == "normal":
                self.sd, self.f = 1.0 / math.sqrt(model.m), model.density
            elif model.m == 1:
                self.sd, self.f = 1.0, model.density
            else:
                raise ArgumentError("non-normal location Bayes risks need m = 1")
        else:
            if model.base in ("exponential", "gamma"):
                k = model.m * (1.0 if model.base == "exponential" else model.shape)
                self.f = ModelSpec("scale", "gamma", m=1, shape=k).density
            elif model.m == 1 and model.density.support[0] >= 0:
                self.f = model.density
            else:
                raise ArgumentError("scale Bayes risks need a positive base (exponential/gamma, or m = 1)")
            self.sd = 1.0

    def loglik(self, x, atoms):
        """``log f(x | atom)`` for every pair, shape ``x.shape + (len(atoms),)``."""
        x = np.asarray(x, dtype=float)[..., None]
        a = np.asarray(atoms, dtype=float)
        if self.kind == "location":
            return self.f.logpdf((x - a) / self.sd) - math.log(self.sd)
        return self.f.logpdf(x / a) - np.log(a)

    def target(self, atoms, loss):
        a = np.asarray(atoms, dtype=float)
        return a if self.kind == "location" else a**loss.power

    def grid(self, prior, loss):
        """Standardized nodes and weights, one set per atom (list of pairs)."""
        atoms = np.asarray(prior.atoms)
        zlo, zhi = self.f.effective_support
        if self.kind == "location":
            zlo, zhi = max(zlo, -12.0), min(zhi, 12.0 if self.f.name == "normal" else 60.0)
            gaps = np.diff(np.sort(atoms)) / self.sd if atoms.size > 1 else np.array([1.0])
            width = 0.25 * min(1.0, 1.0 / float(np.max(gaps)))
        else:
            if self.f.name == "gamma":
                zhi = float(special.gammainccinv(self.f.shape, 1e-20))
            ratios = np.diff(np.log(np.sort(atoms))) if atoms.size > 1 else np.array([1.0])
            width = 0.25 * min(1.0, 1.0 / float(np.max(ratios)))
        nodes, weights = np.polynomial.legendre.leggauss(_GL_NODES)
        lo, hi = self.f.support
        out = []
        for a in atoms:
            # breaks where some atom's likelihood switches on or off
            br = []
            if self.kind == "location":
                for b in atoms:
                    br.extend((b - a) / self.sd + e for e in (lo, hi) if np.isfinite(e))
            else:
                br.extend(hi * b / a for b in atoms if np.isfinite(hi))
            edges = sorted({zlo, zhi, *[v for v in br if zlo < v < zhi]})
            # the scale statistic spreads on a log scale
            edges = _refine_log(edges, width) if self.kind == "scale" else _refine(edges, width)
            out.append(_composite(edges, nodes, weights))
        return out


def _refine(edges, width):
    out = [edges[0]]
    for e0, e1 in zip(edges[:-1], edges[1:]):
        k = max(1, int(math.ceil((e1 - e0) / width)))
        out.extend(np.linspace(e0, e1, k + 1)[1:].tolist())
    return out


def _refine_log(edges, width):
    """Panels uniform in log z above 1e-6, one panel below."""
    floor = 1e-6
    out = [edges[0]]
    for e0, e1 in zip(edges[:-1], edges[1:]):
        a = max(e0, floor)
        if e0 < a < e1:
            out.append(a)
        if a >= e1:
            out.append(e1)
            continue
        k = max(1, int(math.ceil(math.log(e1 / a) / width)))
        out.extend(np.geomspace(a, e1, k + 1)[1:].tolist())
    return out


def _composite(edges, nodes, weights):
    edges = np.asarray(edges)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    z = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return z, w


def _posterior_weights(stat, x, prior):
    logp = stat.loglik(x, prior.atoms) + np.log(np.asarray(prior.weights))
    peak = np.max(logp, axis=-1, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    w = np.exp(logp - peak)
    return w / np.sum(w, axis=-1, keepdims=True)


def bayes_rule(model, prior, loss, x):
    """Bayes decision for the discrete prior at statistic values ``x``."""
    stat = _Statistic(model)
    return _bayes_rule(stat, prior, loss, np.asarray(x, dtype=float))


def _bayes_rule(stat, prior, loss, x):
    w = _posterior_weights(stat, x, prior)
    tau = stat.target(prior.atoms, loss)
    if loss.shape == "squared" and stat.kind == "location":
        return w @ tau
    if loss.shape == "absolute" and stat.kind == "location":
        order = np.argsort(tau)
        cum = np.cumsum(w[..., order], axis=-1)
        idx = np.argmax(cum >= 0.5, axis=-1)
        return tau[order][idx]
    if stat.kind == "scale" and loss.shape == "scale-squared":
        return (w @ (1.0 / tau)) / (w @ (1.0 / tau**2))
    if stat.kind == "scale" and loss.shape == "entropy":
        return 1.0 / (w @ (1.0 / tau))
    raise ArgumentError(f"no discrete-prior Bayes rule for {stat.kind} with {loss.shape} loss")


def _check_loss(model, loss):
    if model.kind == "location" and not (loss.estimand == "location" and loss.shape in ("squared", "absolute")):
        raise ArgumentError("location Bayes risks use squared or absolute location loss")
    if model.kind == "scale" and not (loss.estimand == "scale" and loss.shape in ("scale-squared", "entropy")):
        raise ArgumentError("scale Bayes risks use the scale-squared or entropy loss on sigma**r")


def bayes_risk(model, prior, loss, quad=DEFAULT_QUAD, grid=None):
    """``sum_k w_k R(theta_k, delta_pi)`` for the discrete-prior Bayes rule."""
    _check_loss(model, loss)
    stat = _Statistic(model)
    if grid is None:
        grid = stat.grid(prior, loss)
    parts = []
    for (a, wk), (z, w) in zip(zip(prior.atoms, prior.weights), grid):
        x = a + stat.sd * z if stat.kind == "location" else a * z
        dens = np.exp(stat.f.logpdf(z))
        d = _bayes_rule(stat, prior, loss, x)
        theta = ParameterPoint.location(a) if stat.kind == "location" else ParameterPoint.scale(a)
        lv = np.asarray(loss_value(loss, theta, d))
        parts.append(wk * math.fsum(w * dens * lv))
    return math.fsum(parts)


def shifted_prior_pair(model, prior, g, loss, quad=DEFAULT_QUAD):
    """``(r, r*)``: Bayes risks of the prior and of its image under ``g^{-1}``
    (atoms ``g^{-1}(s)``, same weights), on one shared standardized grid."""
    _check_loss(model, loss)
    stat = _Statistic(model)
    grid = stat.grid(prior, loss)
    r = bayes_risk(model, prior, loss, quad, grid)
    r_star = bayes_risk(model, prior.mapped(g.inverse()), loss, quad, grid)
    return r, r_star


# ---------------------------------------------------------------------------
# least-favourable sequences


def lfp_prior(model, n, spacing):
    """Uniform atoms on ``[-n, n]`` (location) or geometric atoms on
    ``[1/n, n]`` with log-spacing ``spacing`` (scale)."""
    if not spacing > 0:
        raise ArgumentError("atom spacing must be positive")
    if model.kind == "location":
        k = int(round(2 * n / spacing))
        return PriorSupport.uniform(np.linspace(-n, n, k + 1))
    if n <= 1:
        raise ArgumentError("geometric scale atoms need n > 1")
    k = max(1, int(round(2 * math.log(n) / spacing)))
    return PriorSupport.uniform(np.geomspace(1.0 / n, n, k + 1))


def embedding_index(restriction, prior, m_max=M_MAX):
    """Smallest ``m`` with ``g_m^{-1}(S) inside the restriction``.

    Scans linearly over the first 10^4 indices, then bisects up to ``m_max``
    (containment is monotone in ``m`` when the images are nested).
    """
    coords = np.asarray(prior.atoms, dtype=float)[:, None]

    def inside(m):
        g_inv = restriction.shift_element(m).inverse()
        return bool(np.all(restriction.contains_coords(g_inv.on_coords(coords))))

    for m in range(1, min(10_000, m_max) + 1):
        if inside(m):
            return m
    if m_max <= 10_000 or not inside(m_max):
        raise EmbeddingError(
            f"no shift index m <= {m_max} moves the support [{min(prior.atoms)}, {max(prior.atoms)}] into the restriction"
        )
    lo, hi = 10_000, m_max
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class LFPRow:
    n: int
    atoms: int
    m: int
    r: float
    r_star: float


@dataclass
class LFPReport:
    reference: float
    rows: list = field(default_factory=list)

    @property
    def increasing(self):
        r = [row.r for row in self.rows]
        return all(b > a for a, b in zip(r, r[1:]))

    @property
    def nondecreasing(self):
        r = [row.r for row in self.rows]
        return all(b >= a for a, b in zip(r, r[1:]))

    @property
    def bounded(self):
        return all(row.r <= self.reference + 1e-9 for row in self.rows)

    @property
    def max_shift_gap(self):
        return max(abs(row.r - row.r_star) for row in self.rows)

    def gaps(self):
        return [self.reference - row.r for row in self.rows]

    def to_dict(self):
        return {
            "reference_risk": self.reference,
            "rows": [
                {"n": r.n, "atoms": r.atoms, "m": r.m, "r": r.r, "r_star": r.r_star, "gap": self.reference - r.r}
                for r in self.rows
            ],
            "increasing": self.increasing,
            "bounded_by_reference": self.bounded,
            "max_abs_r_minus_r_star": self.max_shift_gap,
        }


def mre_reference_risk(model, loss, quad=DEFAULT_QUAD):
    """Constant risk of the MRE rule, evaluated at the identity parameter."""
    from .estimators import MREScale, PitmanLocation
    from .risk import quadrature_risk

    _check_loss(model, loss)
    stat = _Statistic(model)
    if model.kind == "location":
        if model.base == "normal":
            # xbar ~ N(0, 1/m) and the MRE is xbar itself
            nodes, w = _composite(_refine([-12.0, 12.0], 0.25), *np.polynomial.legendre.leggauss(_GL_NODES))
            lv = np.asarray(loss_value(loss, ParameterPoint.location(0.0), stat.sd * nodes))
            return math.fsum(w * np.exp(stat.f.logpdf(nodes)) * lv)
        est = PitmanLocation(model, loss.shape, quad)
        return quadrature_risk(model, ParameterPoint.location(0.0), est, loss, quad).risk
    reduced = ModelSpec("scale", "gamma", m=1, shape=stat.f.shape) if stat.f.name == "gamma" else model
    est = MREScale(reduced, loss.shape, loss.power, quad)
    return quadrature_risk(reduced, ParameterPoint.scale(1.0), est, loss, quad).risk


def lfp_run(model, restriction, n_list, spacing=0.25, loss=None, quad=DEFAULT_QUAD, m_max=M_MAX, reference=None):
    """Bayes risks ``r_n`` of the nested finite priors, the risks ``r*_n`` of
    their copies shifted into the restriction, and the MRE risk they approach."""
    if loss is None:
        loss = LossSpec("location", "squared") if model.kind == "location" else LossSpec("scale", "scale-squared")
    if reference is None:
        reference = mre_reference_risk(model, loss, quad)
    report = LFPReport(reference=float(reference))
    stat = _Statistic(model)
    for n in n_list:
        prior = lfp_prior(model, n, spacing)
        m = embedding_index(restriction, prior, m_max)
        grid = stat.grid(prior, loss)
        r = bayes_risk(model, prior, loss, quad, grid)
        shifted = prior.mapped(restriction.shift_element(m).inverse())
        r_star = bayes_risk(model, shifted, loss, quad, grid)
        report.rows.append(LFPRow(int(n), len(prior.atoms), m, r, r_star))
    return report
