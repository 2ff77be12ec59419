import numpy as np
import pytest
import scipy.integrate as si
import scipy.special as sc
from hypothesis import given, settings, strategies as st

from capsphere import Cap, KernelSpec, SingularityError, sphere_energy
from capsphere.potential import (
    coulomb_balayage_masses, kernel, kernel_from_chord2,
    kernel_height_derivative, log_balayage_masses, log_cap_energy,
    log_cap_uniform_potential, log_circle_potential, log_exterior_gap,
    log_exterior_gap_argmax, log_point_potential,
    log_support_weighted_potential, log_weighted_balayage_potentials,
    mhaskar_saff_coulomb, mhaskar_saff_phi, phi_dm2, phi_log,
    riesz_dm2_balayage_masses, riesz_support_weighted_potential,
    signed_cap_equilibrium_dm2, signed_density_general_s,
    weighted_potential_dm2, weighted_potential_general_s,
)

NORTH = (0.0, 0.0, 1.0)


# ----------------------------------------------------------------------
# kernels
# ----------------------------------------------------------------------

def test_kernel_spec_validation():
    KernelSpec(2, 0.0)
    KernelSpec(3, 1.0)
    with pytest.raises(ValueError):
        KernelSpec(1, 0.0)
    with pytest.raises(ValueError):
        KernelSpec(2, 2.0)  # s must stay below d
    with pytest.raises(ValueError):
        KernelSpec(2, -0.5)


def test_kernel_values_on_orthogonal_points():
    x, y = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)  # chord sqrt(2)
    assert kernel(KernelSpec(2, 0.0), x, y) == pytest.approx(-0.5 * np.log(2))
    assert kernel(KernelSpec(2, 1.0), x, y) == pytest.approx(2 ** -0.5)
    assert kernel(KernelSpec(2, 1.5), x, y) == pytest.approx(2 ** -0.75)


def test_kernel_singularity():
    with pytest.raises(SingularityError):
        kernel(KernelSpec(2, 1.0), NORTH, NORTH)
    with pytest.raises(SingularityError):
        kernel_from_chord2(KernelSpec(2, 0.0), 0.0)


@given(s=st.one_of(st.just(0.0), st.floats(0.05, 1.9)),
       c2=st.floats(1e-4, 3.9))
@settings(max_examples=100)
def test_kernel_height_derivative(s, c2):
    # derivative with respect to the inner product <x,y>; chord^2 = 2 - 2<x,y>
    spec = KernelSpec(2, s)
    h = 1e-7 * max(c2, 1.0)
    dk_dc2 = (kernel_from_chord2(spec, c2 + h)
              - kernel_from_chord2(spec, c2 - h)) / (2 * h)
    assert float(kernel_height_derivative(spec, c2)) == pytest.approx(
        -2.0 * dk_dc2, rel=1e-5)


# ----------------------------------------------------------------------
# sphere energies
# ----------------------------------------------------------------------

def test_sphere_energy_coulomb_s2_exact():
    assert sphere_energy(KernelSpec(2, 1.0)) == 1.0


def test_sphere_energy_log_s2():
    assert sphere_energy(KernelSpec(2, 0.0)) == pytest.approx(
        0.5 - np.log(2.0), abs=1e-15)


def test_sphere_energy_coulomb_s3():
    assert sphere_energy(KernelSpec(3, 1.0)) == pytest.approx(
        8.0 / (3.0 * np.pi), abs=1e-15)


def test_sphere_energy_log_uses_digamma_form():
    for d in (2, 3, 4, 7):
        expect = -np.log(2.0) + 0.5 * (sc.digamma(d) - sc.digamma(d / 2.0))
        assert sphere_energy(KernelSpec(d, 0.0)) == pytest.approx(
            expect, abs=1e-14)


def test_sphere_energy_large_dimension_stays_finite():
    v = sphere_energy(KernelSpec(200, 1.0))
    assert np.isfinite(v) and v > 0.0


def test_sphere_energy_riesz_quadrature_oracle():
    # W_s(S^d) equals the average of |x - y|^{-s} over independent uniform
    # pairs; for d = 2 that reduces to a 1-d integral in the height
    for s in (0.5, 1.0, 1.5):
        oracle, _ = si.quad(
            lambda u: 0.5 * (2.0 - 2.0 * u) ** (-0.5 * s), -1.0, 1.0)
        assert sphere_energy(KernelSpec(2, s)) == pytest.approx(
            oracle, rel=1e-10)


# ----------------------------------------------------------------------
# logarithmic closed forms against direct quadrature
# ----------------------------------------------------------------------

def _ring_mean_log(xi, u):
    # azimuthal mean of the log kernel between heights xi and u
    return -0.5 * np.log(1.0 - xi * u + abs(xi - u))


def test_log_circle_potential_is_azimuthal_mean():
    rng = np.random.default_rng(1)
    for _ in range(25):
        t, xi = rng.uniform(-0.95, 0.95, size=2)
        phis = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
        cosang = xi * t + np.sqrt((1 - xi * xi) * (1 - t * t)) * np.cos(phis)
        mc = float(np.mean(-0.5 * np.log(2.0 - 2.0 * cosang)))
        assert float(log_circle_potential(t, xi)) == pytest.approx(
            mc, abs=1e-6)


def test_log_cap_uniform_potential_vs_quadrature():
    for t in (-0.4, 0.2, 0.7):
        for xi in (-0.9, t - 0.05, t + 0.05, 0.97):
            oracle, _ = si.quad(lambda u: 0.5 * _ring_mean_log(xi, u), t, 1.0,
                                points=[xi] if t < xi < 1 else None,
                                limit=200)
            assert float(log_cap_uniform_potential(t, xi)) == pytest.approx(
                oracle, abs=1e-11)


def test_log_point_potential_raises_at_source():
    with pytest.raises(SingularityError):
        log_point_potential(1.0)


def test_log_cap_energy_quadrature_recovers_exact():
    for t in (-0.5, 0.0, 0.6):
        assert log_cap_energy(t, method="quadrature") == pytest.approx(
            log_cap_energy(t), abs=1e-11)
    with pytest.raises(ValueError):
        log_cap_energy(0.0, method="bogus")


def test_log_balayage_masses():
    cap = Cap(NORTH, 1.2)
    m_sigma, m_delta = log_balayage_masses(cap)
    assert m_sigma == pytest.approx(1.2 ** 2 / 4.0)
    assert m_delta == 1.0  # log balayage preserves mass


def test_log_weighted_balayage_flat_on_support():
    cap = Cap(NORTH, 0.9)
    xi = np.linspace(-1.0, cap.t, 7)
    u_sigma, u_delta = log_weighted_balayage_potentials(cap, xi)
    assert np.allclose(u_sigma, u_sigma[0], atol=1e-14)
    # swept point potential equals the rim circle potential everywhere
    assert np.allclose(u_delta, log_circle_potential(cap.t, xi), atol=1e-14)


def test_log_support_weighted_potential_flat_value():
    # two equal charges; the weighted potential on the support must be the
    # same at any support point and equal (1+q) W_0(Sigma-adjusted) value
    from capsphere import preset, solve_log
    spec = preset("1-left")
    sol = solve_log(spec)
    pts = np.array([
        [1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [-0.6, 0.0, -0.8],
    ])
    pts = pts[[bool(sol.region.contains(p)) for p in pts]]
    vals = log_support_weighted_potential(
        spec.positions(), spec.charges(), sol.region.caps, pts)
    assert np.allclose(vals, sol.f_q, atol=1e-12)


# ----------------------------------------------------------------------
# F-functionals and balayage masses
# ----------------------------------------------------------------------

def test_phi_log_is_one_plus_q():
    assert phi_log(0.55) == 1.55


def test_coulomb_balayage_masses_closed_form():
    t = 0.5
    m_sigma, m_delta = coulomb_balayage_masses(t)
    assert m_sigma == pytest.approx(
        (np.sqrt(1 - t * t) + np.arcsin(t)) / np.pi + 0.5, abs=1e-15)
    assert m_delta == pytest.approx(np.arcsin(t) / np.pi + 0.5, abs=1e-15)


def test_mhaskar_saff_coulomb_frozen():
    assert mhaskar_saff_coulomb(0.5, 0.2) == pytest.approx(
        1.2026911942538723, abs=1e-15)


def test_mhaskar_saff_phi_dispatch():
    cap = Cap(NORTH, 1.0)
    assert mhaskar_saff_phi(2, 0.0, cap, 0.3) == phi_log(0.3)
    assert mhaskar_saff_phi(2, 1.0, cap, 0.3) == mhaskar_saff_coulomb(
        cap.t, 0.3)
    assert mhaskar_saff_phi(3, 1.0, cap, 0.3) == phi_dm2(cap, 0.3, 3)
    with pytest.raises(ValueError):
        mhaskar_saff_phi(3, 0.5, cap, 0.3)


def test_riesz_dm2_balayage_masses_decrease():
    # Riesz balayage loses mass: both swept masses lie strictly in (0, 1)
    cap = Cap(NORTH, 0.8)
    for d in (3, 4, 5):
        m_sigma, m_delta = riesz_dm2_balayage_masses(cap, d)
        assert 0.0 < m_sigma < 1.0
        assert 0.0 < m_delta < 1.0


# ----------------------------------------------------------------------
# signed equilibria on a single cap
# ----------------------------------------------------------------------

def test_signed_cap_equilibrium_mass_is_one():
    for d in (3, 4):
        cap = Cap([0.0] * d + [1.0], 0.9)
        eq = signed_cap_equilibrium_dm2(cap, 0.15, d)
        assert eq.mass() == pytest.approx(1.0, abs=1e-12)


def test_signed_cap_equilibrium_negativity_criterion():
    d = 3
    cap = Cap((0.0, 0.0, 0.0, 1.0), 0.9)
    # rim weight keeps the sign of phi - 2^(d-s) q / gamma^d = phi - 4q/gamma^d
    small = signed_cap_equilibrium_dm2(cap, 0.01, d)
    large = signed_cap_equilibrium_dm2(cap, 5.0, d)
    assert small.boundary_coefficient > 0 and small.is_nonnegative()
    assert large.boundary_coefficient < 0 and not large.is_nonnegative()
    w = sphere_energy(KernelSpec(d, d - 2.0))
    for eq, q in ((small, 0.01), (large, 5.0)):
        sign = eq.phi_value - 4.0 * q / cap.gamma ** d
        assert np.sign(eq.boundary_coefficient) == np.sign(sign)
        assert eq.uniform_coefficient == pytest.approx(eq.phi_value / w)


# ----------------------------------------------------------------------
# signed density for general s and its weighted potential
# ----------------------------------------------------------------------

def _ring_mean_coulomb(xi, u):
    # azimuthal mean of 1/|x - y| via the complete elliptic integral
    a = 2.0 - 2.0 * xi * u
    b = 2.0 * np.sqrt(max((1.0 - xi * xi) * (1.0 - u * u), 0.0))
    return (2.0 / np.pi) / np.sqrt(a + b) * sc.ellipk(2.0 * b / (a + b))


def test_signed_density_frozen_values():
    cap = Cap(NORTH, 1.0)  # t = 0.5
    assert signed_density_general_s(cap, 0.2, 2, 1.0, 0.0) == pytest.approx(
        1.2396786369678103, rel=1e-13)
    assert signed_density_general_s(cap, 0.2, 2, 1.0, -0.7) == pytest.approx(
        1.2096980895313931, rel=1e-13)


def test_signed_density_domain_errors():
    cap = Cap(NORTH, 1.0)
    with pytest.raises(ValueError):
        signed_density_general_s(cap, 0.2, 2, 1.0, 0.6)  # beyond the rim
    with pytest.raises(ValueError):
        signed_density_general_s(cap, 0.2, 3, 0.5, 0.0)  # s <= d - 2


def test_signed_density_total_mass_is_one():
    cap = Cap(NORTH, 1.0)
    t = cap.t
    # substitute u = t - v^2 to absorb the (t - u)^{-1/2} rim singularity
    mass, _ = si.quad(
        lambda v: v * signed_density_general_s(cap, 0.2, 2, 1.0, t - v * v),
        0.0, np.sqrt(1.0 + t), limit=400)
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_signed_density_weighted_potential_flat_on_support():
    cap = Cap(NORTH, 1.0)
    t = cap.t
    phi = mhaskar_saff_coulomb(t, 0.2)

    def total(xi):
        pot, _ = si.quad(
            lambda v: v * signed_density_general_s(cap, 0.2, 2, 1.0, t - v * v)
            * _ring_mean_coulomb(xi, t - v * v),
            0.0, np.sqrt(1.0 + t),
            points=[np.sqrt(t - xi)] if -1 < xi < t else [], limit=800)
        return pot + 0.2 / np.sqrt(2.0 - 2.0 * xi)

    for xi in (-0.8, -0.2, 0.3):
        assert total(xi) == pytest.approx(phi, abs=1e-8)


def test_weighted_potential_general_s_exterior_frozen():
    cap = Cap(NORTH, 1.0)
    phi = mhaskar_saff_coulomb(cap.t, 0.2)
    # frozen against direct quadrature of the signed density (agrees to
    # a few 1e-15)
    assert weighted_potential_general_s(cap, 0.2, phi, 2, 1.0, 0.7) == \
        pytest.approx(1.0588923645325359, rel=1e-13)
    assert weighted_potential_general_s(cap, 0.2, phi, 2, 1.0, 0.9) == \
        pytest.approx(1.1685904634607329, rel=1e-13)


def test_weighted_potential_flat_inside_support():
    cap = Cap(NORTH, 1.0)
    phi = 1.25
    xi = np.linspace(-0.99, cap.t, 9)
    vals = weighted_potential_general_s(cap, 0.2, phi, 2, 1.0, xi)
    assert np.allclose(vals, phi)
    vals_dm2 = weighted_potential_dm2(cap, 0.2, phi, 3, xi)
    assert np.allclose(vals_dm2, phi)


def test_weighted_potential_general_s_matches_dm2_limit():
    # at s = d - 2 the incomplete-beta form must collapse to the discrete
    # three-term expression
    for d in (3, 4, 5):
        cap = Cap([0.0] * d + [1.0], 0.85)
        xi = np.linspace(cap.t + 1e-3, 0.999, 40)
        a = weighted_potential_dm2(cap, 0.3, 1.4, d, xi)
        b = weighted_potential_general_s(cap, 0.3, 1.4, d, float(d - 2), xi)
        assert np.max(np.abs(a - b)) < 5e-13


def test_weighted_potential_raises_at_source():
    cap = Cap(NORTH, 1.0)
    with pytest.raises(SingularityError):
        weighted_potential_dm2(cap, 0.1, 1.0, 3, 1.0)
    with pytest.raises(SingularityError):
        weighted_potential_general_s(cap, 0.1, 1.0, 2, 1.0, 1.0)


def test_riesz_support_weighted_potential_flat_off_caps():
    from capsphere import ProblemSpec, Source, solve_riesz_dm2
    spec = ProblemSpec(3, 1.0, (Source((0.0, 0.0, 0.0, 1.0), 0.1),))
    sol = solve_riesz_dm2(spec)
    w = sphere_energy(KernelSpec(3, 1.0))
    pts = np.array([
        [0.0, 0.0, -1.0, 0.0],
        [0.5, 0.5, -0.5, -0.5],
        [0.0, 0.0, 0.0, -1.0],
    ])
    vals = riesz_support_weighted_potential(
        sol.region.caps, spec.charges(), sol.c_norm, 3, pts)
    assert np.allclose(vals, sol.c_norm * w, atol=1e-14)


# ----------------------------------------------------------------------
# exterior gap control function
# ----------------------------------------------------------------------

@given(q_total=st.floats(0.05, 3.0), frac=st.floats(0.05, 1.0))
@settings(max_examples=100)
def test_log_exterior_gap_argmax_is_stationary(q_total, frac):
    q_i = frac * q_total
    u_star = log_exterior_gap_argmax(q_total, q_i)
    assert -1.0 < u_star < 1.0
    h = 1e-5
    f = log_exterior_gap(np.array([u_star - h, u_star, u_star + h]),
                         q_total, q_i)
    assert f[1] >= f[0] - 1e-12 and f[1] >= f[2] - 1e-12
