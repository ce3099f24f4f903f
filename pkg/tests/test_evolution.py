import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpknl import (GaussianMixture, GaussianPacket, IllPosedInverseError,
                   ModelParams, NormalizationError, SampledDensity,
                   TruncationError, evolve_analytic, evolve_packet,
                   evolve_quadrature, inverse_evolve, plan_for,
                   plan_from_final_moment)


def params_1d(lam=1.0, eps=0.1, feedback=-0.5, kappa=1.0):
    return ModelParams(drift=[[lam]], coupling_state=[[0.0]],
                       coupling_mean=[[feedback]], diffusion=eps, coupling=kappa)


def unit_packet(mean=0.5, num=1.0, den=1.0):
    return GaussianPacket(mean=[mean], num=[[num]], den=[[den]])


def sampled_from(packet, params, x_min=-8.0, x_max=8.0, nodes=801):
    return SampledDensity.from_callable(lambda p: packet.eval(params, p),
                                        [x_min], [x_max], [nodes])


# ------------------------------------------------------------------ analytic

def test_single_packet_reproduces_direct_evolution():
    p = params_1d()
    pk = unit_packet()
    plan = plan_for(p, 0.0, 1.0, pk)
    out = evolve_analytic(pk, plan).components[0]
    direct = evolve_packet(pk, p, 1.0, 0.0)
    np.testing.assert_allclose(out.mean, direct.mean, atol=1e-15)
    np.testing.assert_allclose(out.precision(), direct.precision(), atol=1e-15)


def test_identity_at_equal_times():
    p = params_1d()
    pk = unit_packet()
    plan = plan_for(p, 0.5, 0.5, pk)
    out = evolve_analytic(pk, plan).components[0]
    np.testing.assert_allclose(out.mean, pk.mean)
    np.testing.assert_allclose(out.den, pk.den)


def test_symmetric_mixture_mean_stays_zero():
    p = params_1d(lam=1.0, feedback=-0.4)
    mix = GaussianMixture([
        GaussianPacket(mean=[-0.8], num=[[1.0]], den=[[1.0]], weight=0.5),
        GaussianPacket(mean=[0.8], num=[[1.0]], den=[[1.0]], weight=0.5),
    ])
    for t in (0.3, 0.9, 1.7):
        plan = plan_for(p, 0.0, t, mix)
        out = evolve_analytic(mix, plan)
        assert out.first_moment(p)[0] == pytest.approx(0.0, abs=1e-14)


def test_semigroup_property_pointwise():
    p = params_1d()
    mix = GaussianMixture([
        GaussianPacket(mean=[0.1], num=[[1.2]], den=[[0.8]], weight=0.6),
        GaussianPacket(mean=[0.9], num=[[0.9]], den=[[1.1]], weight=0.4),
    ])
    s, r, t = 0.0, 0.4, 1.0
    direct = evolve_analytic(mix, plan_for(p, s, t, mix))
    half = evolve_analytic(mix, plan_for(p, s, r, mix))
    stepped = evolve_analytic(half, plan_for(p, r, t, half))
    xs = np.linspace(-4, 4, 201).reshape(-1, 1)
    np.testing.assert_allclose(stepped.eval(p, xs), direct.eval(p, xs),
                               atol=1e-10)


def test_mass_preserved_exactly_analytic():
    p = params_1d()
    mix = GaussianMixture([
        GaussianPacket(mean=[0.0], num=[[1.0]], den=[[1.0]], weight=0.3),
        GaussianPacket(mean=[0.5], num=[[1.0]], den=[[2.0]], weight=0.7),
    ])
    out = evolve_analytic(mix, plan_for(p, 0.0, 1.3, mix))
    assert out.mass() == mix.mass()


def test_normalization_gate():
    p = params_1d()
    heavy = GaussianPacket(mean=[0.0], num=[[1.0]], den=[[1.0]], weight=2.0)
    with pytest.raises(NormalizationError):
        evolve_analytic(heavy, plan_for(p, 0.0, 1.0, heavy))
    plan = plan_for(p, 0.0, 1.0, heavy, require_normalized=False)
    assert evolve_analytic(heavy, plan).mass() == pytest.approx(2.0)


# ---------------------------------------------------------------- quadrature

def test_quadrature_matches_analytic():
    p = params_1d()
    pk = unit_packet()
    gamma = sampled_from(pk, p, -6.0, 6.0, 1201)
    plan = plan_for(p, 0.0, 1.0, gamma)
    out = evolve_quadrature(gamma, plan)
    exact = evolve_analytic(pk, plan).eval(p, out.points())
    assert np.max(np.abs(out.values.ravel() - exact)) < 1e-6


def test_quadrature_mass_and_moment():
    p = params_1d()
    pk = unit_packet()
    gamma = sampled_from(pk, p, -6.0, 6.0, 1201)
    for t in (0.25, 1.0):
        plan = plan_for(p, 0.0, t, gamma)
        out = evolve_quadrature(gamma, plan)
        assert out.total_mass() == pytest.approx(1.0, abs=1e-6)
        assert out.first_moment()[0] == pytest.approx(
            plan.moment_at_end()[0], abs=1e-6)


def test_quadrature_uncoupled_matches_linear_propagation():
    p = params_1d(lam=0.6, eps=0.4, feedback=0.0, kappa=0.0)
    pk = unit_packet(mean=0.8)
    gamma = sampled_from(pk, p, -9.0, 9.0, 1201)
    plan = plan_for(p, 0.0, 0.7, gamma)
    out = evolve_quadrature(gamma, plan)
    exact = evolve_packet(pk, p, 0.7, 0.0).eval(p, out.points())
    assert np.max(np.abs(out.values.ravel() - exact)) < 1e-6


def test_quadrature_identity_at_equal_times():
    p = params_1d()
    gamma = sampled_from(unit_packet(), p, -6.0, 6.0, 601)
    plan = plan_for(p, 0.0, 0.0, gamma)
    out = evolve_quadrature(gamma, plan)
    np.testing.assert_array_equal(out.values, gamma.values)


def test_truncation_guard():
    p = params_1d()
    gamma = sampled_from(unit_packet(), p, -1.0, 1.5, 301)  # fat edges
    with pytest.raises(TruncationError):
        evolve_quadrature(gamma, plan_for(p, 0.0, 0.5, gamma))


# ------------------------------------------------------------------- inverse

def test_analytic_roundtrip_exact_parameters():
    p = params_1d()
    mix = GaussianMixture([
        GaussianPacket(mean=[0.2], num=[[1.4]], den=[[0.9]], weight=0.45),
        GaussianPacket(mean=[0.7], num=[[1.0]], den=[[1.3]], weight=0.55),
    ])
    plan = plan_for(p, 0.0, 1.0, mix)
    back = inverse_evolve(evolve_analytic(mix, plan), plan)
    for orig, rec in zip(mix.components, back.components):
        np.testing.assert_allclose(rec.mean, orig.mean, atol=1e-12)
        np.testing.assert_allclose(rec.num, orig.num, atol=1e-12)
        np.testing.assert_allclose(rec.den, orig.den, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(min_value=-1.5, max_value=1.5),
       feedback=st.floats(min_value=-1.0, max_value=1.0),
       mean=st.floats(min_value=-1.0, max_value=1.0),
       num=st.floats(min_value=0.5, max_value=2.0),
       den=st.floats(min_value=0.5, max_value=2.0),
       t=st.floats(min_value=0.05, max_value=1.5))
def test_analytic_roundtrip_property(lam, feedback, mean, num, den, t):
    p = ModelParams(drift=[[lam]], coupling_state=[[0.0]],
                    coupling_mean=[[feedback]], diffusion=0.3, coupling=1.0)
    pk = GaussianPacket(mean=[mean], num=[[num]], den=[[den]])
    plan = plan_for(p, 0.0, t, pk)
    rec = inverse_evolve(evolve_analytic(pk, plan), plan).components[0]
    scale = max(1.0, abs(num), abs(den))
    assert abs(rec.mean[0] - mean) < 1e-10 * scale
    assert abs(rec.num[0, 0] - num) < 1e-10 * scale
    assert abs(rec.den[0, 0] - den) < 1e-10 * scale


def test_quadrature_roundtrip():
    p = ModelParams(drift=[[1.0]], coupling_state=[[0.0]],
                    coupling_mean=[[-0.5]], diffusion=0.5, coupling=1.0)
    pk = unit_packet(mean=0.3)
    gamma = sampled_from(pk, p, -8.0, 8.0, 801)
    plan = plan_for(p, 0.0, 0.1, gamma)
    u = evolve_quadrature(gamma, plan)
    back = inverse_evolve(u, plan)
    assert np.max(np.abs(back.values - gamma.values)) < 1e-4


def test_inverse_identity_at_equal_times():
    p = params_1d()
    gamma = sampled_from(unit_packet(), p, -6.0, 6.0, 401)
    plan = plan_for(p, 0.0, 0.0, gamma)
    out = inverse_evolve(gamma, plan)
    np.testing.assert_array_equal(out.values, gamma.values)


def test_inverse_rejects_rough_input():
    p = params_1d(eps=0.5)
    pk = unit_packet(mean=0.3)
    gamma = sampled_from(pk, p, -8.0, 8.0, 801)
    plan = plan_for(p, 0.0, 0.1, gamma)
    u = evolve_quadrature(gamma, plan)
    rng = np.random.default_rng(0)
    u.values = u.values + 1e-3 * rng.standard_normal(u.values.shape) \
        * np.exp(-u.axis() ** 2)
    with pytest.raises(IllPosedInverseError):
        inverse_evolve(u, plan)


def test_plan_from_final_moment_closes_the_loop():
    p = params_1d()
    pk = unit_packet(mean=0.5)
    fwd = plan_for(p, 0.0, 1.0, pk)
    x_t = fwd.moment_at_end()
    plan = plan_from_final_moment(p, 0.0, 1.0, x_t)
    np.testing.assert_allclose(plan.x_start, [0.5], atol=1e-14)


def test_2d_quadrature_matches_analytic():
    lam = np.array([[0.6, 0.2], [-0.1, 0.4]])
    p = ModelParams(drift=lam, coupling_state=np.zeros((2, 2)),
                    coupling_mean=np.array([[-0.3, 0.0], [0.1, -0.2]]),
                    diffusion=0.4, coupling=1.0)
    pk = GaussianPacket(mean=[0.3, -0.2], num=np.eye(2), den=np.eye(2))
    gamma = SampledDensity.from_callable(lambda q: pk.eval(p, q),
                                         [-7.0, -7.0], [7.0, 7.0], [55, 55])
    plan = plan_for(p, 0.0, 0.5, gamma)
    out = evolve_quadrature(gamma, plan)
    exact = evolve_analytic(pk, plan).eval(p, out.points())
    assert np.max(np.abs(out.values.ravel() - exact)) < 1e-8
    assert out.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_2d_analytic_roundtrip():
    lam = np.array([[0.5, 0.2], [-0.3, 0.7]])
    p = ModelParams(drift=lam, coupling_state=np.zeros((2, 2)),
                    coupling_mean=np.array([[-0.4, 0.1], [0.0, -0.2]]),
                    diffusion=0.3, coupling=1.0)
    pk = GaussianPacket(mean=[0.4, -0.1], num=np.eye(2),
                        den=np.array([[1.0, 0.2], [0.2, 1.5]]))
    plan = plan_for(p, 0.0, 0.8, pk)
    back = inverse_evolve(evolve_analytic(pk, plan), plan).components[0]
    np.testing.assert_allclose(back.mean, pk.mean, atol=1e-12)
    np.testing.assert_allclose(back.num, pk.num, atol=1e-12)
    np.testing.assert_allclose(back.den, pk.den, atol=1e-12)
