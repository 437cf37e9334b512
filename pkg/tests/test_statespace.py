"""State-space module tests.

Frozen functional values below come from an independent mpmath oracle
(30 digits): closed-form Duhamel integrals for polynomial history segments
fed through the explicit resolvent, with chain coordinates extracted by a
256-node trapezoid contour at radius 0.3.  The quadrature formulas agreed
with the contour values to ~1e-24 across five parameter sets before
freezing.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as cheb

from dimerwave.dispersion import DimerParams, critical_frequency, sound_speed
from dimerwave.errors import (
    ContourThroughSpectrum,
    NearSpectrum,
    NotInDomain,
    SingularDenominator,
)
from dimerwave.statespace import (
    StateVector,
    SymmetryKind,
    apply_evolution,
    apply_nonlinearity,
    apply_sonic_correction,
    calibration_report,
    cc_quadrature,
    chain_functional,
    cheb_points,
    contour_moments,
    contour_projection,
    duhamel_integral,
    eigenvector_state,
    fit_function,
    fit_values,
    jordan_chain,
    laurent_constants,
    quadratic_part,
    random_state,
    resolvent,
    superquadratic_part,
    symmetry_apply,
    traveling_field,
)

MASS2 = DimerParams(kappa=1, w=2)
SPRING2 = DimerParams(kappa=2, w=1)

# oracle: functional values for p=(0,0), xi=(0.3,-0.7), P1=v^2, P2=v^3
FUNCTIONALS_U0 = {
    (1.0, 2.0): [0.1625, 0.4675, 0.75, 2.55],
    (2.0, 1.0): [0.19785714285714286, 0.3659375, 0.159375, 5.45625],
}


def poly_state(power1, power2, xi1=0.0, xi2=0.0):
    return StateVector.from_polynomials(power1, power2, xi1=xi1, xi2=xi2)


def state_close(A, B, tol):
    return (A - B).norm() <= tol


# ---------------------------------------------------------------------------
# Chebyshev plumbing


def test_fit_roundtrip():
    coeffs = fit_function(np.cos, 32)
    x = np.linspace(-1, 1, 17)
    assert np.abs(cheb.chebval(x, coeffs) - np.cos(x)).max() < 1e-14


def test_fit_recovers_basis_polynomial():
    x = cheb_points(16)
    vals = cheb.chebval(x, [0.0, 0.0, 0.0, 1.0])
    coeffs = fit_values(vals)
    expect = np.zeros(17)
    expect[3] = 1.0
    assert np.abs(coeffs - expect).max() < 1e-14


def test_quadrature_integrates_even_powers():
    x, w = cc_quadrature(64)
    assert w @ np.ones_like(x) == pytest.approx(2.0, abs=1e-14)
    assert w @ x**2 == pytest.approx(2.0 / 3.0, abs=1e-14)
    assert w @ x**6 == pytest.approx(2.0 / 7.0, abs=1e-14)
    assert abs(w @ x**3) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=7))
def test_quadrature_exact_on_polynomials(power):
    x, w = cc_quadrature(64)
    vals = np.polynomial.polynomial.polyval(x, power)
    exact = sum(a / (n + 1) * (1 - (-1) ** (n + 1)) for n, a in enumerate(power))
    assert w @ vals == pytest.approx(exact, abs=1e-12)


# ---------------------------------------------------------------------------
# the state type


def test_random_state_is_consistent():
    rng = np.random.default_rng(5)
    U = random_state(rng)
    assert U.membership_defect() < 1e-15
    assert U.tail_defect() < 1e-8


def test_rough_state_rejected_by_evolution():
    rng = np.random.default_rng(6)
    coeffs = rng.standard_normal(33)
    U = StateVector(cheb.chebval(0.0, coeffs), 0.0, 0.0, 0.0,
                    coeffs, np.zeros(1))
    with pytest.raises(NotInDomain):
        apply_evolution(MASS2, 1.0, U)


def test_json_roundtrip_real_and_complex():
    rng = np.random.default_rng(7)
    U = random_state(rng)
    back = StateVector.from_json(U.to_json())
    assert state_close(U, back, 0.0)
    V = U * (1.0 + 2.0j)
    back = StateVector.from_json(V.to_json())
    assert (V - back).norm() == 0.0
    assert back.is_complex


def test_arithmetic_pads_mixed_degrees():
    A = poly_state([1.0], [1.0])
    B = poly_state([0.0, 0.0, 1.0], [0.0, 1.0])
    C = A + 2.0 * B
    assert C.eval1(0.5) == pytest.approx(1.0 + 2.0 * 0.25)
    assert C.eval2(0.5) == pytest.approx(1.0 + 2.0 * 0.5)


def test_real_if_close_guards_genuine_imaginaries():
    U = poly_state([1.0], [1.0]) * (1.0 + 0.5j)
    with pytest.raises(ValueError):
        U.real_if_close()


# ---------------------------------------------------------------------------
# generalized kernel chain


@pytest.mark.parametrize("params", [MASS2, SPRING2, DimerParams(kappa=1.5, w=2.5)])
def test_chain_ladder_relations(params):
    cs = sound_speed(params)
    chain = jordan_chain(params)
    assert apply_evolution(params, cs, chain[0]).norm() < 1e-12
    for k in range(3):
        step = apply_evolution(params, cs, chain[k + 1]) - chain[k]
        assert step.norm() < 1e-12


def test_chain_bottom_rungs_for_any_speed():
    params = DimerParams(kappa=1.5, w=2.5)
    c = 1.37 * sound_speed(params)
    chain = jordan_chain(params)
    assert apply_evolution(params, c, chain[0]).norm() < 1e-12
    assert (apply_evolution(params, c, chain[1]) - chain[0]).norm() < 1e-12


def test_chain_segments_linear_at_equal_springs():
    chain = jordan_chain(MASS2)
    expect = cheb.poly2cheb([0.0, 1.0])
    assert np.abs(chain[1].P1 - expect).max() < 1e-15
    assert np.abs(chain[1].P2 - expect).max() < 1e-15


@pytest.mark.parametrize(
    "params,kind",
    [(MASS2, SymmetryKind.MASS), (SPRING2, SymmetryKind.SPRING)],
)
def test_chain_parity(params, kind):
    chain = jordan_chain(params)
    for k in range(4):
        flipped = symmetry_apply(kind, chain[k])
        target = chain[k] * ((-1.0) ** (k + 1))
        assert (flipped - target).norm() < 1e-12


# ---------------------------------------------------------------------------
# eigenvector states


def test_eigenvector_reduces_to_chain_bottom_at_origin():
    E = eigenvector_state(0.0, MASS2, sound_speed(MASS2))
    chain = jordan_chain(MASS2)
    assert (E - chain[0]).norm() < 1e-13


def test_eigenvector_residual_at_critical_frequency():
    cs = sound_speed(MASS2)
    omega = critical_frequency(MASS2, sound_speed(MASS2)).location
    z = 1j * omega
    E = eigenvector_state(z, MASS2, cs)
    resid = apply_evolution(MASS2, cs, E) - z * E
    assert resid.norm() < 1e-10


def test_eigenvector_residual_away_from_roots():
    cs = sound_speed(MASS2)
    z = 0.4 + 0.3j
    E = eigenvector_state(z, MASS2, cs)
    resid = apply_evolution(MASS2, cs, E) - z * E
    assert resid.norm() > 1e-3


def test_eigenvector_singular_denominator():
    c = sound_speed(MASS2)
    z = 1j * np.sqrt(2.0) / c
    with pytest.raises(SingularDenominator):
        eigenvector_state(z, MASS2, c)


# ---------------------------------------------------------------------------
# symmetries


def test_symmetry_involution():
    rng = np.random.default_rng(11)
    for kind in SymmetryKind:
        for _ in range(5):
            U = random_state(rng)
            assert (symmetry_apply(kind, symmetry_apply(kind, U)) - U).norm() < 1e-13


@pytest.mark.parametrize(
    "params,kind",
    [
        (DimerParams(kappa=1, w=2), SymmetryKind.MASS),
        (DimerParams(kappa=2, w=1), SymmetryKind.SPRING),
    ],
)
def test_symmetry_anticommutes_with_evolution(params, kind):
    rng = np.random.default_rng(12)
    cs = sound_speed(params)
    for _ in range(20):
        U = random_state(rng)
        total = symmetry_apply(kind, apply_evolution(params, cs, U)) \
            + apply_evolution(params, cs, symmetry_apply(kind, U))
        assert total.norm() < 1e-11


def test_symmetry_anticommutes_with_corrections_and_nonlinearity():
    mass = DimerParams(kappa=1, w=2, force1=(1, 1, 0.3), force2=(1, 1, 0.3))
    spring = DimerParams(kappa=2, beta=-1, w=1,
                         force1=(1, 1, 0.2), force2=(2, -1, 0.5))
    rng = np.random.default_rng(13)
    for params, kind in [(mass, SymmetryKind.MASS), (spring, SymmetryKind.SPRING)]:
        for _ in range(5):
            U = random_state(rng)
            lin = symmetry_apply(kind, apply_sonic_correction(params, U)) \
                + apply_sonic_correction(params, symmetry_apply(kind, U))
            assert lin.norm() < 1e-12
            nl_flip = apply_nonlinearity(params, 0.07, symmetry_apply(kind, U))
            nl_neg = -1.0 * symmetry_apply(kind, apply_nonlinearity(params, 0.07, U))
            assert (nl_flip - nl_neg).norm() < 1e-12


# ---------------------------------------------------------------------------
# sonic correction


@pytest.mark.parametrize("params", [DimerParams(kappa=2, w=3),
                                    DimerParams(kappa=1.5, w=2.5)])
def test_sonic_correction_annihilates_first_two_rungs(params):
    chain = jordan_chain(params)
    assert apply_sonic_correction(params, chain[0]).norm() < 1e-13
    assert apply_sonic_correction(params, chain[1]).norm() < 1e-13


def test_sonic_correction_is_the_speed_derivative():
    params = DimerParams(kappa=1.5, w=2.5)
    cs = sound_speed(params)
    mu = 8e-4
    c_mu = cs / np.sqrt(1.0 - mu * cs * cs)
    rng = np.random.default_rng(14)
    U = random_state(rng)
    diff = apply_evolution(params, c_mu, U) - apply_evolution(params, cs, U)
    assert (diff * (1.0 / mu) - apply_sonic_correction(params, U)).norm() < 1e-9


# ---------------------------------------------------------------------------
# nonlinear terms


def test_nonlinearity_vanishes_at_zero_quadratically():
    U0 = StateVector.zero()
    assert apply_nonlinearity(MASS2, 0.3, U0).norm() == 0.0
    rng = np.random.default_rng(15)
    U = random_state(rng)
    one = apply_nonlinearity(MASS2, 0.3, U)
    scaled = apply_nonlinearity(MASS2, 0.3, 0.5 * U)
    assert (scaled - 0.25 * one).norm() < 1e-14


def test_nonlinearity_translation_invariance():
    params = DimerParams(kappa=2, beta=1, w=3,
                         force1=(1, 1, 0.25), force2=(2, 1, -0.4))
    chain = jordan_chain(params)
    rng = np.random.default_rng(16)
    U = random_state(rng)
    base = apply_nonlinearity(params, 0.11, U)
    for gamma in (-1.0, 0.5, 3.0):
        shifted = apply_nonlinearity(params, 0.11, U + gamma * chain[0])
        assert (shifted - base).norm() < 1e-13 * (1.0 + base.norm())


def test_superquadratic_part_zero_for_default_forces():
    rng = np.random.default_rng(17)
    U = random_state(rng)
    assert superquadratic_part(SPRING2, U).norm() == 0.0


def test_traveling_field_linearizes_to_evolution():
    rng = np.random.default_rng(18)
    U = random_state(rng)
    c = 1.1 * sound_speed(MASS2)
    t = 1e-5
    lin = apply_evolution(MASS2, c, U)
    resid = traveling_field(MASS2, c, t * U) * (1.0 / t) - lin
    assert resid.norm() < 1e-4 * (1.0 + U.norm() ** 2)


# ---------------------------------------------------------------------------
# Duhamel integrals


def test_duhamel_constant_and_zero():
    out = duhamel_integral(0.0, np.array([1.0]))
    expect = cheb.poly2cheb([0.0, -1.0])
    assert np.abs(out[:2] - expect).max() < 1e-14
    assert np.abs(out[2:]).max() < 1e-14
    assert np.abs(duhamel_integral(1.5j, np.array([0.0]))).max() == 0.0


def test_duhamel_exponential_closed_form():
    P = fit_function(np.exp, 24)
    out = duhamel_integral(1.0, P)
    expect = fit_function(lambda v: -v * np.exp(v), len(out) - 1)
    assert np.abs(out - expect).max() < 1e-12


def test_duhamel_monomial_closed_form():
    P = cheb.poly2cheb([0.0, 0.0, 1.0])
    out = duhamel_integral(0.0, P)
    expect = cheb.poly2cheb([0.0, 0.0, 0.0, -1.0 / 3.0])
    assert np.abs(out - np.pad(expect, (0, len(out) - 4))).max() < 1e-14


# ---------------------------------------------------------------------------
# resolvent


def test_resolvent_right_inverse():
    cs = sound_speed(MASS2)
    z = 1.0 + 0.5j
    rng = np.random.default_rng(19)
    U = random_state(rng, degree=10)
    R = resolvent(z, MASS2, cs, U)
    resid = z * R - apply_evolution(MASS2, cs, R) - U
    assert resid.norm() < 1e-9 * (1.0 + U.norm())


def test_resolvent_left_inverse():
    cs = sound_speed(MASS2)
    z = 1.0 + 0.5j
    U = poly_state([0.1, 0.4, -0.3], [0.2, 0.0, 0.5], xi1=0.4, xi2=-0.1)
    W = z * U - apply_evolution(MASS2, cs, U)
    back = resolvent(z, MASS2, cs, W)
    assert (back - U).norm() < 1e-9 * (1.0 + U.norm())


def test_resolvent_identity():
    cs = sound_speed(MASS2)
    z1, z2 = 0.8 + 0.3j, -0.5 + 0.9j
    rng = np.random.default_rng(20)
    U = random_state(rng, degree=8)
    R1 = resolvent(z1, MASS2, cs, U)
    R2 = resolvent(z2, MASS2, cs, U)
    R12 = resolvent(z1, MASS2, cs, resolvent(z2, MASS2, cs, U))
    resid = R1 - R2 - (z2 - z1) * R12
    assert resid.norm() < 1e-8 * (1.0 + U.norm())


def test_resolvent_rejects_spectrum_points():
    cs = sound_speed(MASS2)
    U = poly_state([1.0], [1.0])
    with pytest.raises(NearSpectrum):
        resolvent(0.0, MASS2, cs, U)
    omega = critical_frequency(MASS2, sound_speed(MASS2)).location
    with pytest.raises(NearSpectrum):
        resolvent(1j * omega, MASS2, cs, U)


# ---------------------------------------------------------------------------
# contour projection and Laurent structure


def test_projection_fixes_chain_states():
    cs = sound_speed(MASS2)
    chain = jordan_chain(MASS2)
    for k in range(4):
        proj = contour_projection(MASS2, cs, 0.0, 0.3, 256, chain[k])
        assert (proj - chain[k]).norm() < 1e-6


def test_projection_idempotent():
    cs = sound_speed(MASS2)
    rng = np.random.default_rng(21)
    U = random_state(rng, degree=10)
    once = contour_projection(MASS2, cs, 0.0, 0.3, 256, U)
    twice = contour_projection(MASS2, cs, 0.0, 0.3, 256, once)
    assert (twice - once).norm() < 1e-6


def test_projection_commutes_with_evolution():
    cs = sound_speed(MASS2)
    rng = np.random.default_rng(22)
    U = random_state(rng, degree=10)
    left = contour_projection(MASS2, cs, 0.0, 0.3, 256, apply_evolution(MASS2, cs, U))
    right = apply_evolution(MASS2, cs, contour_projection(MASS2, cs, 0.0, 0.3, 256, U))
    assert (left - right).norm() < 1e-6


def test_laurent_moments_are_nilpotent_powers():
    cs = sound_speed(MASS2)
    rng = np.random.default_rng(23)
    U = random_state(rng, degree=10)
    m = contour_moments(MASS2, cs, U, kmax=3)
    power = m[0]
    for k in range(1, 4):
        power = apply_evolution(MASS2, cs, power)
        assert (m[k] - power).norm() < 1e-6
    assert apply_evolution(MASS2, cs, power).norm() < 1e-6 * (1.0 + power.norm())


def test_contour_through_pole_raises():
    cs = sound_speed(MASS2)
    omega = critical_frequency(MASS2, sound_speed(MASS2)).location
    U = poly_state([1.0], [1.0])
    with pytest.raises(ContourThroughSpectrum):
        contour_moments(MASS2, cs, U, radius=omega)


# ---------------------------------------------------------------------------
# coefficient functionals


@pytest.mark.parametrize(
    "params",
    [
        DimerParams(kappa=1, w=1, monatomic_ok=True),
        MASS2,
        SPRING2,
        DimerParams(kappa=1.5, w=2.5),
        DimerParams(kappa=3, w=1),
    ],
)
def test_functional_biorthogonality(params):
    chain = jordan_chain(params)
    for j in range(4):
        for k in range(4):
            target = 1.0 if j == k else 0.0
            val = chain_functional(k, chain[j], params)
            assert val == pytest.approx(target, abs=1e-8)


def test_functional_frozen_values():
    U = poly_state([0.0, 0.0, 1.0], [0.0, 0.0, 0.0, 1.0], xi1=0.3, xi2=-0.7)
    for (kap, w), expect in FUNCTIONALS_U0.items():
        params = DimerParams(kappa=kap, w=w)
        got = [chain_functional(k, U, params) for k in range(4)]
        assert got == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize(
    "params,kind",
    [(MASS2, SymmetryKind.MASS), (SPRING2, SymmetryKind.SPRING)],
)
def test_functional_parity(params, kind):
    rng = np.random.default_rng(24)
    U = random_state(rng)
    SU = symmetry_apply(kind, U)
    for k in range(4):
        lhs = chain_functional(k, SU, params)
        rhs = ((-1.0) ** (k + 1)) * chain_functional(k, U, params)
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_functional_shift_along_evolution():
    params = DimerParams(kappa=1.5, w=2.5)
    cs = sound_speed(params)
    rng = np.random.default_rng(25)
    U = random_state(rng)
    LU = apply_evolution(params, cs, U)
    assert abs(chain_functional(3, LU, params)) < 1e-10
    for k in range(3):
        assert chain_functional(k, LU, params) == pytest.approx(
            chain_functional(k + 1, U, params), abs=1e-9
        )


def test_functional_reconstructs_projection():
    cs = sound_speed(MASS2)
    chain = jordan_chain(MASS2)
    rng = np.random.default_rng(26)
    for _ in range(5):
        U = random_state(rng, degree=10)
        proj = contour_projection(MASS2, cs, 0.0, 0.3, 256, U)
        recon = StateVector.zero()
        for k in range(4):
            recon = recon + chain_functional(k, U, MASS2) * chain[k]
        assert (recon - proj).norm() < 1e-6


def test_calibration_ratio_is_unity():
    report = calibration_report(MASS2, n_states=6)
    for mean, spread in zip(report["ratio_mean"], report["ratio_spread"]):
        assert mean == pytest.approx(1.0, abs=1e-6)
        assert spread < 1e-6
    assert report["reconstruction_worst"] < 1e-6


_LIN_U = StateVector.from_polynomials([0.2, -0.4, 0.3], [0.1, 0.5], xi1=0.6, xi2=-0.2)
_LIN_V = StateVector.from_polynomials([0.0, 1.0, 0.0, 0.5], [-0.3, 0.2], xi1=-1.0, xi2=0.4)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_functional_linearity(a, b):
    combo = a * _LIN_U + b * _LIN_V
    for k in range(4):
        lhs = chain_functional(k, combo, SPRING2)
        rhs = a * chain_functional(k, _LIN_U, SPRING2) \
            + b * chain_functional(k, _LIN_V, SPRING2)
        assert lhs == pytest.approx(rhs, abs=1e-9 * (1.0 + abs(a) + abs(b)))


def test_quadratic_part_matches_bilinear_expansion():
    # polarization: Q(U+V) - Q(U) - Q(V) = 2 Q(U,V) for the symmetric form
    rng = np.random.default_rng(27)
    U = random_state(rng)
    V = random_state(rng)
    lhs = quadratic_part(MASS2, U + V, U + V) \
        - quadratic_part(MASS2, U, U) - quadratic_part(MASS2, V, V)
    rhs = 2.0 * quadratic_part(MASS2, U, V)
    assert (lhs - rhs).norm() < 1e-12