import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coulomb_kernel.geometry import LobachevskyPoint, boost, minkowski_dot, points_from_rng, random_direction, random_lorentz
from coulomb_kernel.kernel import cnd_defect, levy_exponent, zero_sum_coefficients
from coulomb_kernel.quadrature import integrate_sphere, sphere_rule
from coulomb_kernel.states import (
    ElectricTypeState,
    SampledState,
    b_matrix,
    basis_at,
    decompose_state,
    eval_electric,
    j_form,
    lemma_check,
    polarization_basis,
)

FOUR_PI = 4 * math.pi
PAIR_15 = -20.824827143658562  # -4 pi 1.5 coth 1.5, mpmath
LEMMA_1 = 7.8674348259126620  # 8 pi g(1), mpmath
CHARGE = math.sqrt(0.0023 * math.pi)  # z = e^2 / pi


def _symmetric_pair(lam, axis=(0.3, -0.5, 0.8)):
    o = LobachevskyPoint.origin().vector
    return LobachevskyPoint(boost(0.5 * lam, axis) @ o), LobachevskyPoint(boost(-0.5 * lam, axis) @ o)


def test_b_matrix_identity_on_unit_slice():
    rng = np.random.default_rng(0)
    for n in random_direction(rng, 5):
        assert np.allclose(b_matrix(np.concatenate([[1.0], n])), np.eye(4), atol=1e-15)


def test_b_matrix_spectrum():
    p = np.array([2.0, 0, 0, 2.0])
    b = b_matrix(p)
    assert np.allclose(b, b.T)
    assert np.allclose(np.sort(np.linalg.eigvalsh(b)), [0.25, 1.0, 1.0, 4.0], atol=1e-12)
    basis = polarization_basis(p)
    for k in range(4):
        w = basis.vectors[:, k]
        assert np.max(np.abs(b @ w - basis.eigenvalues[k] * w)) <= 1e-10
    assert np.max(np.abs(b @ basis.w_r2 - 4.0 * basis.w_r2)) <= 1e-10


def test_b_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        b_matrix([0.0, 0, 0, 0])
    with pytest.raises(ValueError):
        b_matrix([1.0, 0, 0, 2.0])


def test_basis_orthonormal_example():
    basis = polarization_basis([1.0, 0.6, 0.8, 0.0])
    assert np.max(np.abs(basis.vectors.T @ basis.vectors - np.eye(4))) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_basis_properties_random(seed):
    n = random_direction(np.random.default_rng(seed))
    p = np.concatenate([[1.0], n])
    basis = polarization_basis(p)
    v = basis.vectors
    assert np.max(np.abs(v.T @ v - np.eye(4))) <= 1e-12
    assert abs(n @ basis.w1_plus[1:]) <= 1e-12
    assert abs(n @ basis.w1_minus[1:]) <= 1e-12
    assert basis.w1_plus[0] == 0.0 and basis.w1_minus[0] == 0.0
    b = b_matrix(p)
    for k in range(4):
        assert np.max(np.abs(b @ v[:, k] - basis.eigenvalues[k] * v[:, k])) <= 1e-10


def test_basis_pole_limits():
    north = polarization_basis([1.0, 0, 0, 1.0])
    assert np.array_equal(north.w1_plus, [0, 0, -1, 0])
    assert np.array_equal(north.w1_minus, [0, 1, 0, 0])
    south = polarization_basis([1.0, 0, 0, -1.0])
    assert np.array_equal(south.w1_minus, [0, -1, 0, 0])
    for b in (north, south):
        assert np.max(np.abs(b.vectors.T @ b.vectors - np.eye(4))) <= 1e-12
    # the fallback is the limit along p1 > 0, p2 = 0
    eps = 1e-7
    near = polarization_basis([1.0, eps, 0.0, math.sqrt(1 - eps * eps)])
    assert np.max(np.abs(near.vectors[:, :2] - north.vectors[:, :2])) <= 1e-6


def test_null_and_longitudinal_pairing():
    b = polarization_basis([1.0, 0.0, 0.6, 0.8])
    assert abs(minkowski_dot(b.w_r_minus2, b.w_r_minus2)) <= 1e-15
    assert abs(minkowski_dot(b.w_r_minus2, b.w_r2) - 1.0) <= 1e-15
    assert minkowski_dot(b.w1_plus, b.w1_plus) == pytest.approx(-1.0)


def test_eval_electric_examples():
    s = ElectricTypeState.single(LobachevskyPoint.origin())
    for p in sphere_rule(8).nodes[::7]:
        f, pf = eval_electric(s, p)
        assert np.allclose(f, [1, 0, 0, 0])
        assert pf == pytest.approx(1.0)


def test_contraction_equals_charge():
    rng = np.random.default_rng(6)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        alpha = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        s = ElectricTypeState(alpha, points_from_rng(rng, n, 4.0))
        p = np.concatenate([[1.0], random_direction(rng)])
        _, pf = eval_electric(s, p)
        assert abs(pf - alpha.sum()) <= 1e-12 * max(1.0, np.abs(alpha).sum()) * 100


def test_two_charge_state_matches_potential():
    u, v = _symmetric_pair(1.2)
    a = CHARGE / (2 * math.pi)
    s = ElectricTypeState([a, -a], [u, v])
    for p in sphere_rule(8).nodes[::11]:
        f, pf = eval_electric(s, p)
        direct = a * (u.vector / minkowski_dot(u.vector, p) - v.vector / minkowski_dot(v.vector, p))
        assert np.allclose(f, direct, rtol=1e-14, atol=1e-16)
        assert abs(pf) <= 1e-15


def test_state_validation():
    with pytest.raises(ValueError):
        ElectricTypeState([1.0, 2.0], [LobachevskyPoint.origin()])
    with pytest.raises(ValueError):
        ElectricTypeState([1.0], [[1.0, 0.5, 0, 0]])


def test_j_form_constant_integrand():
    s = ElectricTypeState.single(LobachevskyPoint.origin())
    assert abs(j_form(s, s) + FOUR_PI) <= 1e-12


def test_j_form_pair_closed_form():
    u, v = _symmetric_pair(1.5)
    got = j_form(ElectricTypeState.single(u), ElectricTypeState.single(v))
    assert abs(got.real - PAIR_15) <= 1e-6 * abs(PAIR_15)
    assert abs(got.imag) <= 1e-12


@pytest.mark.parametrize("lam", [0.25, 1.0, 3.0])
def test_two_charge_closed_form(lam):
    u, v = _symmetric_pair(lam)
    a = CHARGE / (2 * math.pi)
    s = ElectricTypeState([a, -a], [u, v])
    exact = 2 * (CHARGE**2 / math.pi) * levy_exponent(lam)
    assert abs(j_form(s, s).real - exact) <= 1e-6 * exact


def test_j_form_frames_agree_for_centered_states():
    u, v = _symmetric_pair(1.0)
    f, g = ElectricTypeState.single(u), ElectricTypeState.single(v)
    assert abs(j_form(f, g, frame="given") - j_form(f, g)) <= 1e-10
    with pytest.raises(ValueError):
        j_form(f, g, frame="nosuch")
    with pytest.raises(TypeError):
        j_form(f, 1.0)


def test_j_form_hermitian():
    rng = np.random.default_rng(12)
    c = points_from_rng(rng, 1, 2.0)[0]
    f = ElectricTypeState(rng.standard_normal(3) + 1j * rng.standard_normal(3), points_from_rng(rng, 3, 1.5, c))
    g = ElectricTypeState(rng.standard_normal(2) + 1j * rng.standard_normal(2), points_from_rng(rng, 2, 1.5, c))
    assert abs(j_form(f, g) - np.conj(j_form(g, f))) <= 1e-12 * abs(j_form(f, g))


def test_j_form_lorentz_invariant():
    rng = np.random.default_rng(13)
    for _ in range(5):
        c = points_from_rng(rng, 1, 1.0)[0]
        f = ElectricTypeState(zero_sum_coefficients(rng, 4), points_from_rng(rng, 4, 1.5, c))
        m = random_lorentz(rng, 1.5)
        a, b = j_form(f, f), j_form(f.transformed(m), f.transformed(m))
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_decomposition_round_trip_and_transversality():
    rng = np.random.default_rng(14)
    rule = sphere_rule(32)
    s = ElectricTypeState(zero_sum_coefficients(rng, 5), points_from_rng(rng, 5, 1.5))
    f = SampledState.from_state(s, rule)
    d = decompose_state(f)
    assert np.max(np.abs(d.recombine().values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
    assert np.max(np.abs(d.coefficients[:, 3])) <= 1e-10
    total = sum(j_form(getattr(d, k), getattr(d, k)) for k in ("plus", "minus", "null"))
    assert abs(total - j_form(f, f)) <= 1e-10 * abs(j_form(f, f))


def test_component_signs():
    rule = sphere_rule(32)
    rng = np.random.default_rng(15)
    amp = rng.standard_normal(len(rule)) + 1j * rng.standard_normal(len(rule))
    for k, sign in ((0, 1), (1, 1), (2, 0)):
        coeff = np.zeros((len(rule), 4), dtype=complex)
        coeff[:, k] = amp
        f = SampledState.from_components(rule, coeff)
        val = j_form(f, f)
        if sign:
            assert abs(val - integrate_sphere(np.abs(amp) ** 2, rule)) <= 1e-10 * abs(val)
            assert val.real > 0
        else:
            assert abs(val) <= 1e-10


def test_basis_at_matches_pointwise():
    nodes = sphere_rule(8).nodes
    batch = basis_at(nodes)
    for i in (0, 17, 63):
        assert np.array_equal(batch[i], polarization_basis(nodes[i]).vectors)


def test_sampled_state_shape_check():
    with pytest.raises(ValueError):
        SampledState(sphere_rule(8), np.zeros((3, 4)))


def test_lemma_examples():
    u, v = _symmetric_pair(1.0)
    got = lemma_check(ElectricTypeState([1.0, -1.0], [u, v]))
    assert abs(got - LEMMA_1) <= 1e-8 * LEMMA_1
    assert lemma_check(ElectricTypeState([0.0], [u])) == 0.0
    with pytest.raises(ValueError):
        lemma_check(ElectricTypeState([1.0, -0.5], [u, v]))


def test_lemma_random_and_cross_identity():
    rng = np.random.default_rng(16)
    for _ in range(40):
        n = int(rng.integers(2, 11))
        c = points_from_rng(rng, 1, 4.0)[0]
        pts = points_from_rng(rng, n, 1.5, c)
        alpha = zero_sum_coefficients(rng, n)
        val = lemma_check(ElectricTypeState(alpha, pts))
        assert val >= -1e-8 * np.sum(np.abs(alpha) ** 2)
        q = cnd_defect(pts, alpha)
        assert abs(val + FOUR_PI * q) <= 1e-8 * abs(val)
