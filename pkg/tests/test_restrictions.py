
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minimax_lab import (
    CovDet,
    CovTrace,
    HalfLineLower,
    HalfLineUpper,
    Interval,
    MatrixScale,
    ParameterPoint,
    PolyhedralCone,
    QuantileBox,
    QuantileCone,
    Scale,
    ScaleProduct,
    Shift,
    ShiftScale,
    apply_group,
    contains,
    dykstra,
    make_cone,
    pava,
    project,
    shift_element,
    verify_conditions,
)
from minimax_lab import rng
from minimax_lab.errors import ArgumentError, ShapeError, UnsupportedProjectionError
from minimax_lab.losses import LossSpec

from oracle_projection import brute_projection


CONVEX = [
    HalfLineLower(0.5),
    HalfLineUpper(-1.0),
    HalfLineLower(2.0, on="scale"),
    HalfLineUpper(3.0, on="scale"),
    Interval(-1.0, 1.0),
    Interval(0.0, 1.0, scale_unknown=True),
    make_cone("orthant", 3),
    make_cone("simple-order", 4),
    make_cone("simple-order", 4, r=3),
    make_cone("tree-order", 3),
    make_cone("umbrella", 4, peak=2),
    ScaleProduct((1.0, 2.0), 3.0),
    QuantileBox(-1.0, 0.5),
    CovTrace(4.0, p=2),
]

ALL = CONVEX + [
    ScaleProduct((1.0, -0.5), 2.0),
    QuantileCone(1.0),
    CovDet(1.0, p=2),
]


def test_contains_examples():
    assert contains(HalfLineLower(0.0), ParameterPoint.location(0.5))
    assert contains(HalfLineLower(0.0), ParameterPoint.location(0.0))
    cone = make_cone("simple-order", 3)
    assert contains(cone, ParameterPoint.location([1.0, 2.0, 3.0]))
    assert not contains(cone, ParameterPoint.location([2.0, 1.0, 3.0]))
    assert not contains(CovDet(1.0), ParameterPoint.covariance(np.diag([0.5, 1.0])))


def test_contains_shape_error():
    with pytest.raises(ShapeError):
        contains(make_cone("orthant", 3), ParameterPoint.location([1.0, 2.0]))
    with pytest.raises(ShapeError):
        contains(HalfLineLower(0.0), ParameterPoint.scale(1.0))


def test_make_cone_examples():
    assert np.array_equal(make_cone("simple-order", 3).C, [[-1, 1, 0], [0, -1, 1]])
    assert np.array_equal(make_cone("tree-order", 3).C, [[-1, 1, 0], [-1, 0, 1]])
    assert np.array_equal(make_cone("umbrella", 3, peak=2).C, [[-1, 1, 0], [0, 1, -1]])
    with pytest.raises(ArgumentError):
        make_cone("umbrella", 3, peak=4)
    with pytest.raises(ArgumentError):
        make_cone("simple-order", 3, r=5)


def test_restriction_validation():
    with pytest.raises(ArgumentError):
        Interval(1.0, 1.0)
    with pytest.raises(ArgumentError):
        PolyhedralCone([[1.0, 1.0], [2.0, 2.0]])


def test_shift_element_examples():
    g = shift_element(HalfLineLower(3.0), 7)
    assert isinstance(g, Shift) and np.array_equal(g.c, [-7.0])
    g = shift_element(PolyhedralCone([[-1.0, 1.0]]), 4)
    assert np.allclose(g.c, [2.0, -2.0], atol=1e-14)
    g = shift_element(QuantileCone(1.3), 3)
    assert isinstance(g, ShiftScale) and g.shift == -3.0 and g.scale == pytest.approx(1 / 3, abs=1e-15)
    assert np.allclose(shift_element(HalfLineLower(1.0, on="scale"), 4).s, [0.25])
    assert np.allclose(shift_element(HalfLineUpper(1.0, on="scale"), 4).s, [4.0])
    g = shift_element(Interval(0.0, 1.0, scale_unknown=True), 6)
    assert (g.shift, g.scale) == (-3.0, 6.0)
    assert np.allclose(shift_element(ScaleProduct((1.0, 2.0), 1.0), 4).s, [0.25, 0.5])
    assert shift_element(CovTrace(1.0), 5).lam == pytest.approx(0.2)
    with pytest.raises(ArgumentError):
        shift_element(ScaleProduct((1.0, 0.0), 1.0), 2)


def test_cone_shift_solves_constraints():
    for kind, kw in (("orthant", {}), ("simple-order", {}), ("tree-order", {}), ("umbrella", {"peak": 3})):
        cone = make_cone(kind, 5, **kw)
        g = shift_element(cone, 9)
        assert np.allclose(cone.C @ g.c, -9.0, atol=1e-12)


def test_project_examples():
    assert project(Interval(-1.0, 1.0), ParameterPoint.location(2.0)).mu[0] == 1.0
    assert np.array_equal(project(make_cone("simple-order", 3), ParameterPoint.location([3.0, 1.0, 2.0])).mu, [2, 2, 2])
    assert np.allclose(project(make_cone("orthant", 2), ParameterPoint.location([-1.0, 2.0])).mu, [0.0, 2.0])
    out = project(CovTrace(4.0), ParameterPoint.covariance(np.diag([1.0, 2.0])))
    assert np.allclose(out.cov, np.diag([1.5, 2.5]))


def test_project_unsupported():
    with pytest.raises(UnsupportedProjectionError):
        project(CovDet(1.0), ParameterPoint.covariance(np.eye(2)))


def test_apply_group_examples():
    assert apply_group(Shift(3.0), ParameterPoint.location(1.0)).mu[0] == 4.0
    assert apply_group(Scale(2.0), 5.0, "decision", LossSpec("scale", "scale-squared")) == 10.0
    assert apply_group(ShiftScale(-1.0, 2.0), 4.0, "data") == 7.0
    lam = apply_group(MatrixScale(3.0), ParameterPoint.covariance(np.eye(2)))
    assert np.array_equal(lam.cov, 3.0 * np.eye(2))
    with pytest.raises(ArgumentError):
        apply_group(Shift(1.0), ParameterPoint.scale(1.0))


def test_pava_matches_brute_force():
    gen = np.random.default_rng(2024)
    for _ in range(100):
        p = int(gen.integers(2, 7))
        x = gen.normal(0.0, 3.0, p)
        C = make_cone("simple-order", p).C
        assert np.allclose(pava(x), brute_projection(C, x), atol=1e-8)


def test_dykstra_matches_pava():
    gen = np.random.default_rng(7)
    for _ in range(50):
        p = int(gen.integers(2, 7))
        x = gen.normal(0.0, 3.0, p)
        assert np.allclose(dykstra(make_cone("simple-order", p).C, x), pava(x), atol=1e-6)


@pytest.mark.parametrize("kind,kw", [("tree-order", {}), ("umbrella", {"peak": 2}), ("orthant", {})])
def test_dykstra_matches_brute_force(kind, kw):
    gen = np.random.default_rng(8)
    cone = make_cone(kind, 4, **kw)
    for _ in range(30):
        x = gen.normal(0.0, 3.0, 4)
        assert np.allclose(dykstra(cone.C, x), brute_projection(cone.C, x), atol=1e-7)


@pytest.mark.parametrize("kind,kw", [("tree-order", {}), ("umbrella", {"peak": 3}), ("orthant", {})])
def test_cone_projection_exact(kind, kw):
    gen = np.random.default_rng(9)
    cone = make_cone(kind, 5, **kw)
    x = gen.normal(0.0, 3.0, (200, 5))
    out = cone.project_coords(x)
    expected = np.array([brute_projection(cone.C, xi) for xi in x])
    assert np.allclose(out, expected, rtol=0, atol=1e-12)


def test_conditions_orthant_box():
    probes = np.random.default_rng(0).uniform(-100, 100, (100, 2))
    report = verify_conditions(make_cone("orthant", 2), 50, probes)
    # the box reaches -100, so coverage needs up to n = 100
    assert report.nesting_ok
    assert verify_conditions(make_cone("orthant", 2), 100, probes).verdict == "pass"
    assert report.to_dict()["verdict"] == report.verdict


def test_conditions_interval_scale_unknown():
    report = verify_conditions(Interval(0.0, 1.0, scale_unknown=True), 50, 500, seed=3)
    assert report.verdict == "pass"
    g = shift_element(Interval(0.0, 1.0, scale_unknown=True), 10)
    image = g.on_coords(np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert np.allclose(image[:, 0], [-5.0, 5.0])


def test_conditions_interval_known_scale_fails():
    report = verify_conditions(Interval(0.0, 1.0), 50, 200, seed=3)
    assert report.verdict == "fail"
    assert not report.coverage_ok
    assert not report.nesting_ok
    assert report.uncovered()


SEQUENCED = [r for r in ALL if not (isinstance(r, Interval) and not r.scale_unknown)]


@pytest.mark.parametrize("restriction", SEQUENCED, ids=lambda r: r.type_name)
def test_nesting_holds_for_every_variant(restriction):
    report = verify_conditions(restriction, 20, 200, seed=1)
    assert report.nesting_ok
    assert all(k == 0 for _, _, k in report.nesting)


@pytest.mark.parametrize("restriction", CONVEX, ids=lambda r: r.type_name)
def test_projection_idempotent_and_inside(restriction):
    v = restriction.probe_coords(rng.stream_generator(5, 1), 10_000)
    once = restriction.project_coords(v)
    twice = restriction.project_coords(once)
    assert np.all(restriction.contains_coords(once))
    scale = np.maximum(1.0, np.abs(once))
    assert np.all(np.abs(twice - once) <= 1e-10 * scale)


@pytest.mark.parametrize("restriction", CONVEX, ids=lambda r: r.type_name)
def test_projection_contracts(restriction):
    gen = rng.stream_generator(6, 1)
    x = restriction.probe_coords(gen, 1000)
    w = restriction.sample_coords(gen, 1000)
    px = restriction.project_coords(x)
    lhs = np.linalg.norm(px - w, axis=1)
    rhs = np.linalg.norm(x - w, axis=1)
    assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-12)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=12))
def test_pava_isotonic_mean_preserving(y):
    out = pava(y)
    assert np.all(np.diff(out) >= -1e-9)
    assert np.mean(out) == pytest.approx(np.mean(y), abs=1e-9 * max(1.0, np.max(np.abs(y))))


group_elements = st.one_of(
    st.builds(Shift, st.floats(-1e3, 1e3)),
    st.builds(Scale, st.floats(1e-2, 1e2)),
    st.builds(ShiftScale, st.floats(-1e3, 1e3), st.floats(1e-2, 1e2)),
    st.builds(MatrixScale, st.floats(1e-2, 1e2)),
)


def _close(x, y, size):
    # exact group laws up to floating rounding of intermediates of magnitude ``size``
    return np.allclose(x, y, rtol=1e-12, atol=1e-12 * size)


@given(group_elements, st.floats(-100, 100), st.floats(0.1, 100))
def test_group_laws(g, a, b):
    kind = g.kind
    size = max(1.0, abs(a), b)
    if kind == "shift":
        theta, data, loss, dec = ParameterPoint.location(a), np.array([a, b]), LossSpec("location", "squared"), a
        size = max(size, abs(float(g.c[0])))
    elif kind == "scale":
        theta, data, loss, dec = ParameterPoint.scale(b), np.array([b]), LossSpec("scale", "entropy"), b
    elif kind == "shift-scale":
        theta, data, loss, dec = ParameterPoint.location_scale(a, b), np.array([a, b]), LossSpec("quantile", "squared", eta=1.0), a
        size = max(size, abs(g.shift) / g.scale, abs(g.shift))
    else:
        theta = ParameterPoint.covariance([[b, 0.1], [0.1, b + 1]])
        data, loss, dec = theta.cov.copy(), LossSpec("covariance", "stein"), theta.cov.copy()
    ginv = g.inverse()
    assert _close(ginv.on_param(g.on_param(theta)).as_vector(), theta.as_vector(), size)
    assert _close(ginv.on_data(g.on_data(data)), data, size)
    assert _close(ginv.on_decision(g.on_decision(dec, loss), loss), dec, size)
    assert _close(g.compose(ginv).on_param(theta).as_vector(), theta.as_vector(), size)
