import math

import numpy as np
import pytest

from kirchhoff import closed_form as cf
from kirchhoff.closed_form import BubbleSpec, DomainError, KirchhoffParams, ScaledBubble
from kirchhoff.quadrature import gradQ_by_quadrature
from kirchhoff.shooting import kirchhoff_fixed_point

rng = np.random.default_rng(7)


def random_points(n, scale=3.0):
    return rng.normal(size=(n, 3)) * scale


@pytest.mark.parametrize("r, expected", [
    (0.0, 3 ** 0.25),
    (1.0, 3 ** 0.25 / math.sqrt(2.0)),
    (100.0, 3 ** 0.25 / math.sqrt(10001.0)),
])
def test_eval_Q_values(r, expected):
    assert cf.eval_Q(r) == pytest.approx(expected, rel=1e-15)


def test_eval_Q_reference_digits():
    assert cf.eval_Q(0.0) == pytest.approx(1.3160740, abs=1e-7)
    assert cf.eval_Q(1.0) == pytest.approx(0.9306049, abs=1e-7)
    assert cf.eval_Q(100.0) == pytest.approx(0.0131601, abs=1e-7)


def test_eval_Q_rejects_negative_radius():
    with pytest.raises(DomainError):
        cf.eval_Q(-1.0)


def test_gradQ_norm_matches_quadrature():
    assert cf.gradQ_norm_sq() == pytest.approx(12.8210, abs=5e-5)
    assert cf.gradQ_norm_sq() == pytest.approx(gradQ_by_quadrature(), rel=1e-12)


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (-1.0, 0.5), (1.0, -0.1), (math.nan, 1.0), (1.0, math.inf)])
def test_params_rejected(a, b):
    with pytest.raises(DomainError):
        KirchhoffParams(a, b)


def test_yamabe_limit_constants():
    k = cf.scaling_constants(KirchhoffParams(1.0, 0.0))
    assert k.c == 1.0 and k.sqrt_c == 1.0


def test_scaling_constants_one_one_against_fixed_point(params11):
    k = cf.scaling_constants(params11)
    assert k.sqrt_c == pytest.approx(12.8986, abs=1e-4)
    assert k.c == pytest.approx(166.37, abs=5e-3)
    c_fp, _ = kirchhoff_fixed_point(params11)
    assert abs(c_fp - k.c) / k.c < 1e-10


@pytest.mark.parametrize("a, b", [(1e-2, 1e2), (1.0, 1.0), (3.0, 0.2), (1e2, 1e-2), (0.5, 0.0)])
def test_quadratic_root_identity(a, b):
    k = cf.scaling_constants(KirchhoffParams(a, b))
    assert abs(k.c - a - b * k.sqrt_c * k.gradQ_sq) < 1e-12 * k.c


def test_bubble_spec_validation(params11):
    with pytest.raises(DomainError):
        BubbleSpec(params11, lam=0.0)
    with pytest.raises(DomainError):
        BubbleSpec(params11, x0=(0.0, math.nan, 0.0))
    with pytest.raises(DomainError):
        BubbleSpec(params11, x0=(0.0, 1.0))


def test_eval_u_yamabe_reduces_to_Q():
    spec = BubbleSpec(KirchhoffParams(1.0, 0.0))
    x = random_points(50)
    np.testing.assert_allclose(cf.eval_u(spec, x), cf.eval_Q(np.linalg.norm(x, axis=-1)), rtol=1e-15)


@pytest.mark.parametrize("lam", [0.25, 1.0, 3.0])
def test_eval_u_peak(params11, lam):
    spec = BubbleSpec(params11, lam=lam)
    assert cf.eval_u(spec, np.zeros(3)) == pytest.approx(lam ** -0.5 * 3 ** 0.25, rel=1e-15)


def test_eval_u_at_sqrt_c(spec11):
    sc = spec11.constants.sqrt_c
    assert cf.eval_u(spec11, np.array([sc, 0.0, 0.0])) == pytest.approx(0.9306049, abs=1e-7)


def test_center_and_length_scale(params11):
    spec = BubbleSpec(params11, lam=2.0, x0=(1.0, -2.0, 0.5))
    sc = spec.constants.sqrt_c
    np.testing.assert_allclose(spec.center, sc * np.array([1.0, -2.0, 0.5]))
    assert spec.length_scale == pytest.approx(2.0 * sc)
    assert cf.eval_u(spec, spec.center) == pytest.approx(3 ** 0.25 / math.sqrt(2.0), rel=1e-15)


def test_gradient_vanishes_at_center(spec11):
    np.testing.assert_array_equal(cf.eval_grad_u(spec11, np.zeros(3)), np.zeros(3))


@pytest.mark.parametrize("lam, x0", [(1.0, (0, 0, 0)), (0.3, (0.2, -0.1, 0.05)), (4.0, (1.0, 1.0, -1.0))])
def test_laplacian_satisfies_pde(params11, lam, x0):
    spec = BubbleSpec(params11, lam=lam, x0=x0)
    x = spec.center + random_points(200, spec.length_scale)
    lap = cf.eval_laplacian_u(spec, x)
    u5c = cf.eval_u(spec, x) ** 5 / spec.constants.c
    np.testing.assert_allclose(lap + u5c, 0.0, atol=1e-12 * np.max(np.abs(lap)))


def test_gradient_against_central_differences():
    spec = BubbleSpec(KirchhoffParams(2.0, 0.3), lam=0.7, x0=(0.1, 0.0, -0.2))
    h = 1e-4
    x = spec.center + random_points(20, spec.length_scale)
    fd = np.stack([(cf.eval_u(spec, x + h * e) - cf.eval_u(spec, x - h * e)) / (2 * h)
                   for e in np.eye(3)], axis=-1)
    g = cf.eval_grad_u(spec, x)
    # O(h^2) truncation relative to the third derivative scale
    assert np.max(np.abs(fd - g)) < 1e-8


def test_grad_u_norm_values():
    assert cf.grad_u_norm_sq(BubbleSpec(KirchhoffParams(1.0, 0.0))) == pytest.approx(12.8210, abs=5e-5)
    spec = BubbleSpec(KirchhoffParams(1.0, 1.0))
    k = spec.constants
    # product of the two oracle values sqrt(c) * ||grad Q||^2
    assert cf.grad_u_norm_sq(spec) == pytest.approx(k.sqrt_c * gradQ_by_quadrature(), rel=1e-12)
    assert cf.grad_u_norm_sq(spec) == pytest.approx(165.3718, abs=1e-4)


def test_grad_u_norm_is_dilation_invariant(params11):
    a = cf.grad_u_norm_sq(BubbleSpec(params11, lam=1.0, x0=(1, 2, 3)))
    b = cf.grad_u_norm_sq(BubbleSpec(params11, lam=2.0, x0=(1, 2, 3)))
    assert a == b


def test_residual_vanishes_on_solution(spec11):
    assert np.max(np.abs(cf.residual(spec11, random_points(100, 20.0)))) < 1e-10


def test_residual_of_unscaled_Q(params11):
    x = random_points(30)
    v = ScaledBubble(params11)
    q = cf.eval_Q(np.linalg.norm(x, axis=-1))
    expected = (1.0 + cf.GRADQ_NORM_SQ - 1.0) * q ** 5
    np.testing.assert_allclose(cf.residual(v, x), expected, rtol=1e-12)


def test_residual_of_doubled_solution_is_negative_at_center(spec11):
    k = spec11.constants
    v = ScaledBubble(spec11.params, amplitude=2 * cf.Q0, scale=k.sqrt_c)
    assert cf.residual(v, np.zeros((1, 3)))[0] < 0.0


def test_dilation_mode_at_center(spec11):
    u0 = cf.eval_u(spec11, np.zeros(3))
    assert cf.dilation_mode(spec11, np.zeros(3)) == pytest.approx(u0 / 2.0, rel=1e-15)


def test_dilation_mode_yamabe_formula():
    spec = BubbleSpec(KirchhoffParams(1.0, 0.0))
    r = np.linspace(0.0, 10.0, 41)
    x = np.stack([r, 0 * r, 0 * r], axis=-1)
    expected = 3 ** 0.25 * (1 - r ** 2) / (2 * (1 + r ** 2) ** 1.5)
    np.testing.assert_allclose(cf.dilation_mode(spec, x), expected, atol=1e-15)
    assert cf.dilation_mode(spec, np.array([1.0, 0.0, 0.0])) == pytest.approx(0.0, abs=1e-16)


def test_linearized_identities_pointwise():
    spec = BubbleSpec(KirchhoffParams(0.7, 2.0), lam=1.5, x0=(0.3, 0.0, -0.4))
    x = spec.center + random_points(200, spec.length_scale)
    u = cf.eval_u(spec, x)
    np.testing.assert_allclose(cf.A_apply_u(spec, x), -4 * u ** 5, atol=1e-12)
    assert np.max(np.abs(cf.A_apply_e0(spec, x))) < 1e-12
    for i in (1, 2, 3):
        assert np.max(np.abs(cf.A_apply_translation(spec, i, x))) < 1e-12


def test_translation_mode_is_partial_derivative(spec11):
    x = random_points(10, 10.0)
    g = cf.eval_grad_u(spec11, x)
    for i in (1, 2, 3):
        np.testing.assert_allclose(cf.translation_mode(spec11, i, x), g[:, i - 1], rtol=1e-14)
    with pytest.raises(DomainError):
        cf.translation_mode(spec11, 0, x)


@pytest.mark.parametrize("a, b, bound", [(1.0, 1.0, None), (100.0, 0.01, 0.01), (1.0, 1e3, None)])
def test_kappa_below_half(a, b, bound):
    k = cf.kappa(KirchhoffParams(a, b))
    assert 0.0 <= k < 0.5
    if bound is not None:
        assert k < bound


def test_kappa_one_one():
    assert cf.kappa(KirchhoffParams(1.0, 1.0)) == pytest.approx(0.4970, abs=5e-5)


def test_kappa_radial_formula(params11):
    spec = BubbleSpec(params11)
    k = spec.constants
    assert cf.kappa(params11) == pytest.approx(params11.b * cf.grad_u_norm_sq(spec) / (2 * k.c), rel=1e-14)
