import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mfexcite.errors import NumericError
from mfexcite.models import CouplingSpec, custom_model, make_model, zero_model
from mfexcite.quadrature import (GaussianSpec, QuadratureRule, average_field,
                                 average_field_jacobian, averaged_field_fn, gaussian_density)
from conftest import all_models, fd_jacobian


def test_density_peaks():
    assert gaussian_density(GaussianSpec((0.0,), (1.0,)), np.array([0.0])) == pytest.approx(
        1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert gaussian_density(GaussianSpec((0.0, 0.0), (1.0, 1.0)), np.zeros(2)) == pytest.approx(
        1 / (2 * math.pi), abs=1e-15)
    assert gaussian_density(GaussianSpec((1.0,), (4.0,)), np.array([1.0])) == pytest.approx(
        1 / math.sqrt(8 * math.pi), abs=1e-15)


def test_density_rejects_nonpositive_cov():
    with pytest.raises(ValueError):
        GaussianSpec((0.0,), (0.0,))
    with pytest.raises(ValueError):
        GaussianSpec((0.0, 1.0), (1.0, -1.0))


def test_density_integrates_to_one():
    rule = QuadratureRule(20, 2)
    spec = GaussianSpec((0.3, -1.0), (0.5, 2.0))
    assert rule.expect(lambda z: np.ones(len(z)), spec.mean, spec.cov_diag) == pytest.approx(1, abs=1e-12)
    # and the density itself, on a fine grid
    g = np.linspace(-12, 12, 1201)
    X, Y = np.meshgrid(g, g, indexing="ij")
    q = gaussian_density(spec, np.stack([X, Y], axis=-1))
    assert np.trapezoid(np.trapezoid(q, g), g) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("order", [1, 3, 8, 20])
def test_monomials_exact(order):
    rule = QuadratureRule(order, 1)
    for p in range(2 * order):
        got = rule.weights @ rule.nodes[:, 0] ** p
        want = 0.0 if p % 2 else float(np.prod(np.arange(p - 1, 0, -2, dtype=float)))
        # odd moments vanish; their error is judged against E|x|^p
        scale = rule.weights @ np.abs(rule.nodes[:, 0]) ** p
        assert abs(got - want) <= 1e-12 * max(scale, 1.0)


def test_fhn_average_matches_shifted_closed_form(fhn):
    c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2))
    got = average_field(fhn, c, np.zeros(2), QuadratureRule(8, 2))
    np.testing.assert_allclose(got, [0.0, 1 / 30], atol=1e-14)
    shifted = make_model("fhn", dict(u=0.8, a=1 / 3, b=1.0, tau=10.0))
    np.testing.assert_allclose(got, shifted.closed_avg(np.zeros(2), np.zeros(2)), atol=1e-14)


def test_cucker_smale_at_critical_noise():
    cs = make_model("cucker_smale", {}, d=1)
    c = CouplingSpec.from_sigma2((1,), (1 / 3,))
    assert average_field(cs, c, np.array([1.0]), QuadratureRule(8, 1))[0] == pytest.approx(-1.0, abs=1e-12)


@given(m=arrays(np.float64, 2, elements=st.floats(-5, 5)))
def test_zero_field_averages_to_zero(m):
    z = zero_model(2)
    c = CouplingSpec.uniform(2)
    assert np.all(average_field(z, c, m) == 0)
    assert np.all(average_field_jacobian(z, c, m) == 0)


def test_fhn_jacobian_average(fhn):
    c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2))
    x0 = -1.1
    J = average_field_jacobian(fhn, c, np.array([x0, 0.4]))
    np.testing.assert_allclose(J, [[0.8 - x0 ** 2, -1.0], [0.1, -0.1]], atol=1e-13)


@pytest.mark.parametrize("model", all_models(), ids=lambda m: f"{m.name}-{m.d}")
def test_closed_form_matches_quadrature(model):
    rng = np.random.default_rng(7)
    c = CouplingSpec(tuple(rng.uniform(0.5, 2, model.d)), tuple(rng.uniform(0.1, 0.7, model.d)))
    fbar = averaged_field_fn(model, c, use_closed=True)
    for _ in range(50):
        m = rng.uniform(-3, 3, model.d)
        m *= min(1.0, 3 / np.linalg.norm(m))
        np.testing.assert_allclose(average_field(model, c, m), fbar(m), atol=1e-10)


@pytest.mark.parametrize("model", all_models(), ids=lambda m: f"{m.name}-{m.d}")
def test_average_jacobian_is_derivative(model):
    rng = np.random.default_rng(8)
    c = CouplingSpec(tuple(rng.uniform(0.5, 2, model.d)), tuple(rng.uniform(0.1, 0.7, model.d)))
    for _ in range(10):
        m = rng.uniform(-2, 2, model.d)
        J = average_field_jacobian(model, c, m)
        Jfd = fd_jacobian(lambda v: average_field(model, c, v), m, h=1e-5)
        assert np.all(np.abs(J - Jfd) <= 1e-8 * (1 + np.abs(J)))


@pytest.mark.parametrize("model", all_models()[:4], ids=lambda m: m.name)
def test_order_doubling_is_stable(model):
    c = CouplingSpec.from_sigma2((1,) * model.d, (0.3,) * model.d)
    m = np.full(model.d, 0.7)
    a = average_field(model, c, m, QuadratureRule(10, model.d))
    b = average_field(model, c, m, QuadratureRule(20, model.d))
    np.testing.assert_allclose(a, b, atol=1e-10)


@given(m=arrays(np.float64, 2, elements=st.floats(-3, 3)))
def test_translation_identity(m):
    sl = make_model("stuart_landau", dict(a=1.0, omega=2.0))
    shifted = custom_model("shifted", 2, lambda x: sl.eval_F(np.asarray(x) + m))
    c = CouplingSpec.from_sigma2((1, 2), (0.3, 0.4))
    np.testing.assert_allclose(average_field(sl, c, m), average_field(shifted, c, np.zeros(2)),
                               atol=1e-12)


def test_dimension_mismatch(fhn):
    with pytest.raises(ValueError):
        average_field(fhn, CouplingSpec.uniform(3), np.zeros(2))
    with pytest.raises(ValueError):
        average_field(fhn, CouplingSpec.uniform(2), np.zeros(3))
    with pytest.raises(ValueError):
        average_field(fhn, CouplingSpec.uniform(2), np.zeros(2), QuadratureRule(4, 1))


def test_nonfinite_field_reports_node():
    bad = custom_model("pole", 1, lambda x: np.log(np.asarray(x) - 1.0))
    with np.errstate(invalid="ignore", divide="ignore"), pytest.raises(NumericError) as e:
        average_field(bad, CouplingSpec.uniform(1), np.zeros(1))
    assert e.value.point is not None


def test_average_is_bit_stable(fhn):
    c = CouplingSpec.from_sigma2((1, 1), (0.2, 0.2))
    m = np.array([0.3, -0.2])
    assert np.array_equal(average_field(fhn, c, m), average_field(fhn, c, m))
