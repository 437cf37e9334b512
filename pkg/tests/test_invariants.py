"""First-integral and nondegeneracy tests.

The derivative and Hessian checks use Richardson-extrapolated central
differences of the integral itself as ground truth, so transcription
errors in either formula would be caught by disagreement between the
analytic and difference routes.
"""

import numpy as np
import pytest
from scipy.optimize import bisect

from dimerwave.dispersion import DimerParams, sound_speed
from dimerwave.errors import MuOutOfRange
from dimerwave.invariants import (
    NondegenReport,
    Route,
    first_integral,
    first_integral_derivative,
    first_integral_hessian,
    linear_nondegeneracy,
    mass_amplitude_prefactor,
    nondegeneracy_report,
    quadratic_nondegeneracy,
    rescaled_first_integral,
    speed_correction_functional,
)
from dimerwave.statespace import (
    StateVector,
    SymmetryKind,
    chain_functional,
    jordan_chain,
    laurent_constants,
    quadratic_part,
    random_state,
    symmetry_apply,
    traveling_field,
)

GENERIC = DimerParams(kappa=1.5, w=2.5)
PARAM_SETS = [
    DimerParams(kappa=1, w=2),
    DimerParams(kappa=2, w=1),
    GENERIC,
    DimerParams(kappa=3, w=1),
    DimerParams(kappa=1, w=5),
]


def test_integral_zero_at_origin():
    assert first_integral(StateVector.zero(), GENERIC, 1.0) == 0.0


def test_integral_constant_shift_invariance():
    rng = np.random.default_rng(31)
    U = random_state(rng)
    chain = jordan_chain(GENERIC)
    base = first_integral(U, GENERIC, 1.1)
    for gamma in (-1.0, 0.5, 3.0):
        shifted = first_integral(U + gamma * chain[0], GENERIC, 1.1)
        assert shifted == pytest.approx(base, abs=1e-12 * (1.0 + abs(base)))


def test_integral_mass_symmetry_invariance():
    params = DimerParams(kappa=1, w=2)
    rng = np.random.default_rng(32)
    U = random_state(rng)
    flipped = symmetry_apply(SymmetryKind.MASS, U)
    assert first_integral(flipped, params, 0.9) == pytest.approx(
        first_integral(U, params, 0.9), abs=1e-12
    )


def test_conservation_along_traveling_field():
    rng = np.random.default_rng(33)
    c = 1.2 * sound_speed(GENERIC)
    for _ in range(20):
        U = random_state(rng)
        F = traveling_field(GENERIC, c, U)
        val = first_integral_derivative(U, F, GENERIC, c)
        assert abs(val) < 1e-8 * (1.0 + U.norm() ** 2)


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(34)
    U = random_state(rng)
    dU = random_state(rng)
    cs = sound_speed(GENERIC)
    h = 1e-4

    def J(V):
        return first_integral(V, GENERIC, cs)

    d_h = (J(U + h * dU) - J(U + (-h) * dU)) / (2 * h)
    d_h2 = (J(U + (h / 2) * dU) - J(U + (-h / 2) * dU)) / h
    rich = (4 * d_h2 - d_h) / 3
    exact = first_integral_derivative(U, dU, GENERIC, cs)
    assert abs(rich - exact) < 1e-6 * abs(exact)


def test_derivative_at_origin_is_top_coordinate():
    rng = np.random.default_rng(35)
    for params in (DimerParams(kappa=1, w=2), DimerParams(kappa=2, w=1), GENERIC):
        cs = sound_speed(params)
        norm = params.w * (1.0 + params.kappa) * laurent_constants(params)[0]
        chain = jordan_chain(params)
        top = norm * first_integral_derivative(StateVector.zero(), chain[3], params, cs)
        assert top == pytest.approx(1.0, abs=1e-10)
        U = random_state(rng)
        lhs = norm * first_integral_derivative(StateVector.zero(), U, params, cs)
        assert lhs == pytest.approx(chain_functional(3, U, params), abs=1e-10)


def test_derivative_kills_constant_shift_direction():
    rng = np.random.default_rng(36)
    U = random_state(rng)
    chain = jordan_chain(GENERIC)
    assert first_integral_derivative(U, chain[0], GENERIC, 1.3) == 0.0


def test_rescaled_bounds_enforced():
    assert rescaled_first_integral(StateVector.zero(), GENERIC, 0.0) == 0.0
    cs2 = sound_speed(GENERIC) ** 2
    with pytest.raises(MuOutOfRange):
        rescaled_first_integral(StateVector.zero(), GENERIC, -0.01)
    with pytest.raises(MuOutOfRange):
        rescaled_first_integral(StateVector.zero(), GENERIC, 1.01 / (2 * cs2))


def test_rescaled_difference_is_speed_correction():
    rng = np.random.default_rng(37)
    U = random_state(rng)
    cs2 = sound_speed(GENERIC) ** 2
    mu = 0.3 / (2 * cs2)
    lhs = rescaled_first_integral(U, GENERIC, mu) \
        - rescaled_first_integral(U, GENERIC, 0.0)
    rhs = mu * speed_correction_functional(U, GENERIC, mu)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_speed_correction_kills_constant_shift():
    chain = jordan_chain(GENERIC)
    assert speed_correction_functional(chain[0], GENERIC, 0.1) == 0.0


# ---------------------------------------------------------------------------
# nondegeneracy constants


def test_linear_constant_closed_form_equal_springs():
    for w0 in (2, 3, 5):
        params = DimerParams(kappa=1, w=w0)
        expect = 6.0 * w0 * (1.0 + w0) / (w0 * w0 - w0 + 1.0)
        got = linear_nondegeneracy(params, Route.CLOSED)
        assert got == pytest.approx(expect, abs=1e-10)


def test_linear_constant_positive_and_routes_agree():
    ratios = []
    for params in PARAM_SETS:
        rep = nondegeneracy_report(params)
        assert rep.lfrak0_oracle > 0
        ratios.append(rep.normalization_ratio)
    assert np.ptp(ratios) < 1e-8
    assert ratios[0] == pytest.approx(1.0, abs=1e-8)


def test_linear_constant_parameter_duality():
    one = linear_nondegeneracy(DimerParams(kappa=1, w=2), Route.CLOSED)
    other = linear_nondegeneracy(DimerParams(kappa=2, w=1), Route.CLOSED)
    assert one == pytest.approx(other, rel=1e-12)


def test_quadratic_constant_zero_on_polarity_line():
    params = DimerParams(kappa=2, beta=-8, w=1)
    assert quadratic_nondegeneracy(params, Route.CLOSED) == pytest.approx(0.0, abs=1e-8)
    assert quadratic_nondegeneracy(params, Route.ORACLE) == pytest.approx(0.0, abs=1e-8)


def test_quadratic_constant_routes_same_sign():
    params = DimerParams(kappa=1, beta=1, w=2)
    closed = quadratic_nondegeneracy(params, Route.CLOSED)
    oracle = quadratic_nondegeneracy(params, Route.ORACLE)
    assert closed != 0 and oracle != 0
    assert np.sign(closed) == np.sign(oracle)
    assert closed == pytest.approx(oracle, rel=1e-10)


def test_quadratic_functional_term_drops_for_equal_springs():
    params = DimerParams(kappa=1, w=2)
    chain = jordan_chain(params)
    term = 2.0 * chain_functional(2, quadratic_part(params, chain[1], chain[1]), params)
    assert abs(term) < 1e-12


def test_quadratic_zero_located_by_bisection():
    def f(beta):
        return quadratic_nondegeneracy(
            DimerParams(kappa=2, beta=beta, w=1), Route.ORACLE
        )

    root = bisect(f, -10.0, -6.0, xtol=1e-9)
    assert abs(root - (-8.0)) < 1e-6


def test_hessian_printed_value_and_finite_differences():
    params = GENERIC
    kap, w, beta = params.kappa, params.w, params.beta
    a4 = laurent_constants(params)[0]
    chain = jordan_chain(params)
    hess = first_integral_hessian(params, chain[1], chain[1])
    assert hess == pytest.approx(-8.0 * (beta + kap * kap) * w * a4 / (1.0 + kap),
                                 abs=1e-10)

    def J0(V):
        return rescaled_first_integral(V, params, 0.0)

    zero = J0(StateVector.zero())
    t = 1e-3
    d2_h = (J0(t * chain[1]) - 2 * zero + J0((-t) * chain[1])) / t**2
    d2_h2 = (J0((t / 2) * chain[1]) - 2 * zero + J0((-t / 2) * chain[1])) / (t / 2) ** 2
    rich = (4 * d2_h2 - d2_h) / 3
    assert rich == pytest.approx(hess, rel=1e-6)


def test_hessian_bilinearity():
    rng = np.random.default_rng(38)
    U, V, W = (random_state(rng) for _ in range(3))
    a, b = 1.7, -0.4
    lhs = first_integral_hessian(GENERIC, a * U + b * V, W)
    rhs = a * first_integral_hessian(GENERIC, U, W) \
        + b * first_integral_hessian(GENERIC, V, W)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_report_serialization():
    rep = nondegeneracy_report(DimerParams(kappa=2, beta=1, w=3))
    data = rep.to_json()
    assert data["kappa"] == 2 and data["beta"] == 1 and data["w"] == 3
    header = NondegenReport.csv_header()
    row = rep.csv_row()
    assert len(row) == len(header)
    assert float(row[header.index("lfrak0_oracle")]) == pytest.approx(
        rep.lfrak0_oracle
    )


def test_amplitude_prefactor_factor_two_discrepancy():
    out = mass_amplitude_prefactor(2)
    assert out["announced"] == pytest.approx(2.0, abs=1e-12)
    assert out["derived"] == pytest.approx(1.0, abs=1e-10)
    assert out["discrepancy_factor"] == pytest.approx(2.0, abs=1e-10)