import numpy as np
import pytest

from minimax_lab import LossSpec, ModelSpec, SearchSpec, c_m, optimize_equivariant_constant
from minimax_lab.errors import ArgumentError, FamilyMismatchError


def test_scale_multiple_quadrature():
    model = ModelSpec("scale", "exponential", m=1)
    res = optimize_equivariant_constant(model, "scale-multiple", LossSpec("scale", "scale-squared"),
                                        SearchSpec(method="quadrature", bounds=(0.01, 3.0)))
    assert res.constants[0] == pytest.approx(0.5, abs=1e-4)
    assert res.risk == pytest.approx(0.5, abs=1e-8)


def test_scale_multiple_monte_carlo():
    model = ModelSpec("scale", "exponential", m=1)
    res = optimize_equivariant_constant(model, "scale-multiple", LossSpec("scale", "scale-squared"),
                                        SearchSpec(replicates=1_000_000, seed=1, bounds=(0.01, 3.0)))
    assert res.constants[0] == pytest.approx(0.5, abs=3e-3)
    assert res.method == "monte-carlo" and res.replicates == 1_000_000


@pytest.mark.slow
def test_quantile_family_recovers_c3():
    model = ModelSpec("location-scale", m=3)
    res = optimize_equivariant_constant(model, "quantile", LossSpec("quantile", "squared", eta=1.0),
                                        SearchSpec(replicates=4_000_000, seed=2))
    assert res.constants[0] == pytest.approx(c_m(3), abs=1e-3)


def test_cov_diagonal_stein_recovers_a0():
    model = ModelSpec("wishart", m=5, p=2)
    res = optimize_equivariant_constant(model, "cov-diagonal", LossSpec("covariance", "stein"),
                                        SearchSpec(replicates=100_000, seed=3))
    assert np.allclose(res.constants, [1 / 6, 1 / 4], atol=5e-3)


def test_cov_scalar_squared_identity_prefers_m_plus_2():
    # for p = 1 the loss tr(y - I)^2 is minimized by S/(m + 2), not by S/m
    model = ModelSpec("wishart", m=5, p=1)
    res = optimize_equivariant_constant(model, "cov-diagonal", LossSpec("covariance", "squared-identity"),
                                        SearchSpec(replicates=200_000, seed=4))
    assert res.constants[0] == pytest.approx(1 / 7, abs=5e-3)


def test_family_mismatch():
    with pytest.raises(FamilyMismatchError):
        optimize_equivariant_constant(ModelSpec("scale", "exponential"), "quantile",
                                      LossSpec("scale", "scale-squared"), SearchSpec(replicates=1000))
    with pytest.raises(ArgumentError):
        optimize_equivariant_constant(ModelSpec("scale", "exponential"), "nope",
                                      LossSpec("scale", "scale-squared"), SearchSpec(replicates=1000))


def test_result_serializes():
    model = ModelSpec("scale", "exponential", m=2)
    res = optimize_equivariant_constant(model, "scale-multiple", LossSpec("scale", "entropy"),
                                        SearchSpec(replicates=20_000, seed=5, bounds=(0.01, 2.0)))
    d = res.to_dict()
    assert d["family"] == "scale-multiple" and len(d["constants"]) == 1
    # entropy loss: optimal multiple of T is 1/n
    assert d["constants"][0] == pytest.approx(0.5, abs=0.02)
