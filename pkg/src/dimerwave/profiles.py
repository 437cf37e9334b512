"""Closed-form leading-order traveling-wave profiles.

Everything here is explicit: sech^2 cores, tanh fronts, the alternating
stegoton factor, the leading cosine ripple with its parity-dependent
transfer factor, the phase map that shifts the ripple across the core, and
the four-dimensional truncated normal form with its exact homoclinic
orbit.  Higher-order remainders have no closed form and are deliberately
absent; their size is what the simulation and collocation modules measure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dispersion import (
    DimerParams,
    critical_frequency,
    front_decay_rate,
    sound_speed,
)
from .errors import ConfigInvalid, NonConvergentTails, SpringSingular
from .invariants import Route, linear_nondegeneracy, quadratic_nondegeneracy


class DimerKind(Enum):
    MASS = "mass"
    SPRING = "spring"


class Coordinate(Enum):
    POSITION = "position"
    RELATIVE_DISPLACEMENT = "relative_displacement"


@dataclass(frozen=True)
class ProfileSpec:
    """Long-wave profile parameters: which dimer, how small, which coordinates."""

    epsilon: float
    params: DimerParams
    dimer_kind: DimerKind
    alpha: float = 0.0
    coordinate: Coordinate = Coordinate.RELATIVE_DISPLACEMENT

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigInvalid("epsilon must be positive")
        if self.alpha < 0:
            raise ConfigInvalid("alpha must be nonnegative")
        kap, w = self.params.kappa, self.params.w
        if self.dimer_kind is DimerKind.MASS:
            if kap != 1.0:
                raise ConfigInvalid("mass-dimer profiles require equal springs")
            bound = (1.0 + w) / (2.0 * w)
        else:
            if w != 1.0:
                raise ConfigInvalid("spring-dimer profiles require equal masses")
            bound = (1.0 + kap) / (2.0 * kap)
        if self.epsilon ** 2 >= bound:
            raise ConfigInvalid(
                f"epsilon^2 = {self.epsilon**2} >= {bound}: wave speed not real"
            )

    @property
    def wave_speed(self) -> float:
        kap, w = self.params.kappa, self.params.w
        if self.dimer_kind is DimerKind.MASS:
            bound = (1.0 + w) / (2.0 * w)
        else:
            bound = (1.0 + kap) / (2.0 * kap)
        return float((bound - self.epsilon ** 2) ** -0.5)

    @property
    def decay_rate(self) -> float:
        return front_decay_rate(self.params)


def _core_base(spec: ProfileSpec) -> float:
    kap, beta, w = spec.params.kappa, spec.params.beta, spec.params.w
    if spec.dimer_kind is DimerKind.MASS:
        return 3.0 * w / (1.0 + w)
    if beta + kap ** 3 == 0:
        raise SpringSingular("beta = -kappa^3: quadratic constant vanishes")
    return 3.0 * kap * kap / (beta + kap ** 3)


def sech2_core(spec: ProfileSpec, X, j_parity: int = 0):
    """Localized leading term of the relative-displacement wave.

    For the spring dimer the odd-site amplitude carries an extra factor
    kappa relative to the even sites (the stegoton alternation); the mass
    dimer has no parity dependence.
    """
    if spec.coordinate is not Coordinate.RELATIVE_DISPLACEMENT:
        raise ConfigInvalid("core profile lives in relative-displacement coordinates")
    amp = _core_base(spec)
    if spec.dimer_kind is DimerKind.SPRING and j_parity % 2 == 1:
        amp *= spec.params.kappa
    q = spec.decay_rate
    return amp / np.cosh(q * np.asarray(X, dtype=float) / 2.0) ** 2


def front_profile(spec: ProfileSpec, X):
    """Odd tanh front: the leading term of the growing position wave."""
    if spec.coordinate is not Coordinate.POSITION:
        raise ConfigInvalid("front profile lives in position coordinates")
    kap, beta, w = spec.params.kappa, spec.params.beta, spec.params.w
    if spec.dimer_kind is DimerKind.MASS:
        amp = np.sqrt(6.0 * w * (w * w - w + 1.0) / (1.0 + w) ** 3)
    else:
        if beta + kap ** 3 == 0:
            raise SpringSingular("beta = -kappa^3: quadratic constant vanishes")
        amp = np.sqrt(6.0 * kap ** 3 * (1.0 + kap) * (kap * kap - kap + 1.0)) \
            / (2.0 * (beta + kap ** 3))
    return amp * np.tanh(spec.decay_rate * np.asarray(X, dtype=float) / 2.0)


def phase_map(spec: ProfileSpec, theta: float, X):
    """Odd shift map X + eps^2 * theta * tanh(qX/2) applied to ripple arguments."""
    X = np.asarray(X, dtype=float)
    return X + spec.epsilon ** 2 * theta * np.tanh(spec.decay_rate * X / 2.0)


# ---------------------------------------------------------------------------
# leading periodic ripple


def mass_transfer_factor(omega: float, w: float) -> float:
    """Amplitude of the odd-parity ripple relative to the even one (equal springs)."""
    return float(np.cos(omega) / (1.0 - w / (1.0 + w) * omega * omega))


def spring_transfer_factor(omega: float, kappa: float) -> complex:
    """Complex odd-parity ripple amplitude for the equal-mass dimer."""
    num = np.exp(1j * omega) + kappa * np.exp(-1j * omega)
    den = 1.0 + kappa - 2.0 * kappa / (1.0 + kappa) * omega * omega
    return complex(num / den)


def _transfer(spec: ProfileSpec) -> complex:
    omega = critical_frequency(spec.params, sound_speed(spec.params)).location
    if spec.dimer_kind is DimerKind.MASS:
        return complex(mass_transfer_factor(omega, spec.params.w))
    return spring_transfer_factor(omega, spec.params.kappa)


def ripple_frequency(spec: ProfileSpec) -> float:
    """Leading ripple frequency in the long-wave variable."""
    omega = critical_frequency(spec.params, sound_speed(spec.params)).location
    return float(omega / spec.epsilon)


def periodic_leading(spec: ProfileSpec, X, j_parity: int = 0):
    """Leading cosine ripple component for the given site parity.

    The even-parity component is a unit cosine; the odd-parity component is
    the same cosine filtered through the transfer factor (complex for the
    spring dimer, so a sine part appears there).
    """
    Omega = ripple_frequency(spec)
    X = np.asarray(X, dtype=float)
    if j_parity % 2 == 0:
        return np.cos(Omega * X)
    E = _transfer(spec)
    return E.real * np.cos(Omega * X) + E.imag * np.sin(Omega * X)


def ripple_witness(spec: ProfileSpec) -> float:
    """Nonzero sample of the leading relative-displacement ripple.

    The ripple of the odd relative displacement is, to leading order,
    cos(Omega(X + eps)) minus the odd-parity component at X.  When the
    transfer factor differs from cos at the critical frequency, X = 0
    witnesses that; in the degenerate case the value at X = -eps is 1.
    """
    omega = critical_frequency(spec.params, sound_speed(spec.params)).location
    E = _transfer(spec)
    at_zero = float(np.cos(omega) - E.real)
    if abs(at_zero) > 1e-8:
        return at_zero
    return float(1.0 - (E.real * np.cos(omega) - E.imag * np.sin(omega)))


# ---------------------------------------------------------------------------
# assembled leading-order nanopteron


@dataclass
class LeadingProfile:
    """Sampled leading-order wave, split by lattice-site parity."""

    grid: np.ndarray
    values_odd: np.ndarray
    values_even: np.ndarray
    metadata: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("X,value_odd,value_even\n")
            for x, vo, ve in zip(self.grid, self.values_odd, self.values_even):
                fh.write(f"{x:.17g},{vo:.17g},{ve:.17g}\n")

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def assemble_nanopteron(spec: ProfileSpec, theta: float = 0.0,
                        half_width: float = 60.0,
                        n_points: int = 2001) -> LeadingProfile:
    """Sample core plus phase-shifted ripple on a uniform grid.

    Produces eps^2 * [core(X) + alpha * ripple(T(X))] per parity.  The
    exponentially small remainder of the full wave is an existence object
    with no formula and is intentionally not fabricated here; the simulate
    module measures its size as a lattice residual instead.
    """
    X = np.linspace(-half_width, half_width, n_points)
    shifted = phase_map(spec, theta, X)
    eps2 = spec.epsilon ** 2
    out = []
    for parity in (1, 0):
        vals = sech2_core(spec, X, parity)
        if spec.alpha > 0:
            vals = vals + spec.alpha * periodic_leading(spec, shifted, parity)
        out.append(eps2 * vals)
    stegoton = spec.params.kappa if spec.dimer_kind is DimerKind.SPRING else 1.0
    meta = {
        "core_amplitude": eps2 * _core_base(spec),
        "decay_rate": spec.decay_rate,
        "stegoton_factor": stegoton,
        "frequency": ripple_frequency(spec),
        "epsilon": spec.epsilon,
        "alpha": spec.alpha,
        "wave_speed": spec.wave_speed,
    }
    return LeadingProfile(grid=X, values_odd=out[0], values_even=out[1],
                          metadata=meta)


# ---------------------------------------------------------------------------
# truncated normal form


def sigma_orbit(t):
    """Exact homoclinic orbit of the truncated normal form, shape (4, len(t))."""
    t = np.asarray(t, dtype=float)
    s2 = 1.0 / np.cosh(t / 2.0) ** 2
    tn = np.tanh(t / 2.0)
    return np.stack([s2, -s2 * tn, np.zeros_like(t), np.zeros_like(t)])


def sigma_orbit_derivative(t):
    t = np.asarray(t, dtype=float)
    s2 = 1.0 / np.cosh(t / 2.0) ** 2
    tn = np.tanh(t / 2.0)
    d1 = -s2 * tn
    d2 = s2 * tn * tn - s2 * s2 / 2.0
    return np.stack([d1, d2, np.zeros_like(t), np.zeros_like(t)])


def normalform_field(y: np.ndarray, nu: float, omega: float,
                     lin_const: float, quad_const: float,
                     constants: tuple = (0.0, 0.0, 0.0)) -> np.ndarray:
    """Principal part of the rescaled four-dimensional reduction.

    The linear block couples (y1, y2) hyperbolically and (y3, y4) at the
    fast frequency omega/nu; the nonlinear terms carry three real constants
    that the reduction leaves unspecified (default zero, configurable).
    """
    n1, n2, n3 = constants
    y = np.asarray(y, dtype=float)
    y1, y2, y3, y4 = y
    fast = omega / nu
    out = np.empty_like(y)
    out[0] = y2
    out[1] = y1 - 1.5 * y1 ** 2 - n1 * quad_const * (y3 ** 2 + y4 ** 2)
    out[2] = -fast * y4 + n2 * nu * y4 / lin_const + n3 * nu * y1 * y4 / lin_const
    out[3] = fast * y3 + n2 * nu * y3 / lin_const + n3 * nu * y1 * y3 / lin_const
    return out


def truncated_normalform_check(nu: float, t_grid,
                               constants: tuple = (0.0, 0.0, 0.0),
                               params: DimerParams | None = None) -> dict:
    """Residual of the exact homoclinic orbit in the truncated reduction.

    When the three free constants are nonzero only the first two components
    are meaningful for this orbit, so the check restricts to them.
    """
    if nu <= 0:
        raise ConfigInvalid("nu must be positive")
    if params is None:
        params = DimerParams(kappa=1, w=2)
    omega = critical_frequency(params, sound_speed(params)).location
    lin = linear_nondegeneracy(params, Route.ORACLE)
    quad = quadratic_nondegeneracy(params, Route.ORACLE)
    t = np.asarray(t_grid, dtype=float)
    orbit = sigma_orbit(t)
    deriv = sigma_orbit_derivative(t)
    resid = deriv - normalform_field(orbit, nu, omega, lin, quad, constants)
    comps = [0, 1] if any(c != 0.0 for c in constants) else [0, 1, 2, 3]
    return {
        "nu": nu,
        "max_residual": float(np.abs(resid[comps]).max()),
        "components_checked": comps,
    }


# ---------------------------------------------------------------------------
# tanh decomposition of asymptotically constant functions


@dataclass(frozen=True)
class TanhDecomposition:
    l_plus: float
    l_minus: float
    remainder: np.ndarray
    weighted_sup: float


def tanh_decompose(X, values, q_star: float, X0: float,
                   tail_tol: float = 1e-5) -> TanhDecomposition:
    """Split a sampled function into a scaled tanh plus a localized remainder.

    Tail limits are the sample means over |X| >= X0.  The remainder is
    what is left after subtracting ((L+ - L-)/2) tanh(q_star X) plus the
    midpoint, and its exponentially weighted sup is reported.  Raises when
    either tail has not settled to a constant at the requested resolution.
    """
    X = np.asarray(X, dtype=float)
    values = np.asarray(values, dtype=float)
    right = values[X >= X0]
    left = values[X <= -X0]
    if len(right) < 2 or len(left) < 2:
        raise NonConvergentTails(f"fewer than 2 samples beyond |X| = {X0}")
    scale = 1.0 + np.abs(values).max()
    if right.std() > tail_tol * scale or left.std() > tail_tol * scale:
        raise NonConvergentTails(
            f"tail variation beyond |X| = {X0} exceeds {tail_tol} relative"
        )
    l_plus = float(right.mean())
    l_minus = float(left.mean())
    model = 0.5 * (l_plus - l_minus) * np.tanh(q_star * X) \
        + 0.5 * (l_plus + l_minus)
    remainder = values - model
    weighted = float((np.exp(q_star * np.abs(X)) * np.abs(remainder)).max())
    return TanhDecomposition(l_plus=l_plus, l_minus=l_minus,
                             remainder=remainder, weighted_sup=weighted)
