"""Minimax estimation on restricted parameter spaces.

Invariant models and losses, restricted spaces with their group shift
sequences, equivariant and restricted Bayes estimators, and a Monte Carlo /
quadrature risk engine with a command-line runner.
"""

from .bayes import LFPReport, PriorSupport, bayes_risk, lfp_run, shifted_prior_pair
from .conditions import ConditionReport, verify_conditions
from .estimators import (
    a0,
    c_m,
    cov_equivariant,
    linear_mre,
    mre_scale,
    mre_scale_product,
    pitman_location,
    pitman_location_general,
    projected_estimate,
    quantile_mre,
    restricted_flat_bayes,
    restricted_flat_bayes_cone,
)
from .groups import MatrixScale, Scale, Shift, ShiftScale, apply_group
from .losses import LossSpec, bowl_check, loss_value
from .models import ModelSpec, ParameterPoint, density, log_density, sample
from .optimize import SearchSpec, optimize_equivariant_constant
from .projection import dykstra, pava
from .quadrature import DEFAULT_QUAD, QuadratureSpec
from .restrictions import (
    CovDet,
    CovTrace,
    HalfLineLower,
    HalfLineUpper,
    Interval,
    PolyhedralCone,
    QuantileBox,
    QuantileCone,
    ScaleProduct,
    contains,
    make_cone,
    project,
    shift_element,
)
from .risk import RiskEstimate, domination_check, mc_risk, quadrature_risk, sup_risk

__version__ = "0.1.0"
