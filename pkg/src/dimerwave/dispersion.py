"""Dispersion analysis for traveling waves in diatomic FPUT lattices.

The linear theory of the advance-delay traveling-wave system is governed by a
quartic-plus-cosine dispersion function in the wavenumber k and, on the real
axis, by the matching hyperbolic determinant.  This module evaluates both,
factors the dispersion function through the acoustic and optical branches of
the lattice band structure, and finds the named critical quantities: the sonic
speed at which k=0 becomes a quadruple root, the unique positive critical
frequency at that speed, the real root that splits off for supersonic speeds,
and the front decay rates.

All functions are pure; parameter sweeps can run them concurrently.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigInvalid, MultipleRoots, NoRoot, Unsupported

# Scan defaults: cheap oscillatory scalar function, so a fine bracketing scan
# followed by bisection is more robust than bare Newton.
SCAN_STEP = 1e-3
SCAN_MIN = 1e-6
SCAN_MAX = 50.0
BISECT_TOL = 1e-12
SUPERSONIC_WINDOW = 0.25  # validated range of c^2 - c_s^2


@dataclass(frozen=True)
class DimerParams:
    """Material data of the dimer lattice.

    kappa is the linear coefficient of the even spring force, beta its
    quadratic coefficient, and w the reciprocal mass of the even particles
    (odd masses and the odd spring's coefficients are normalized to 1).
    force1 and force2 hold the full force-polynomial coefficients of the two
    springs, lowest (linear) order first.
    """

    kappa: float = 1.0
    beta: float = 1.0
    w: float = 2.0
    force1: tuple[float, ...] | None = None
    force2: tuple[float, ...] | None = None
    monatomic_ok: bool = False

    def __post_init__(self):
        if not (self.kappa > 0 and self.w > 0):
            raise ValueError("kappa and w must be positive")
        if max(self.kappa, self.w) <= 1 and not self.monatomic_ok:
            if not (self.kappa == 1.0 and self.w == 1.0):
                raise ValueError(
                    "need max(kappa, w) > 1 for a genuine dimer "
                    "(or pass monatomic_ok=True)"
                )
            raise ValueError("monatomic lattice: pass monatomic_ok=True")
        if self.force1 is None:
            object.__setattr__(self, "force1", (1.0, 1.0))
        else:
            object.__setattr__(self, "force1", tuple(float(a) for a in self.force1))
        if self.force2 is None:
            object.__setattr__(self, "force2", (float(self.kappa), float(self.beta)))
        else:
            object.__setattr__(self, "force2", tuple(float(a) for a in self.force2))
        if self.force1[0] != 1.0:
            raise ValueError("force1 must have unit linear coefficient")
        if self.force2[0] != self.kappa:
            raise ValueError("force2 linear coefficient must equal kappa")

    @property
    def is_mass_dimer(self) -> bool:
        return self.kappa == 1.0 and self.force1 == self.force2

    @property
    def is_spring_dimer(self) -> bool:
        return self.w == 1.0

    def force1_eval(self, r):
        return _polyforce(self.force1, r)

    def force2_eval(self, r):
        return _polyforce(self.force2, r)

    def force1_deriv(self, r):
        return _polyforce_deriv(self.force1, r)

    def force2_deriv(self, r):
        return _polyforce_deriv(self.force2, r)

    def to_json(self) -> dict:
        return {
            "kappa": self.kappa,
            "beta": self.beta,
            "w": self.w,
            "force1": list(self.force1),
            "force2": list(self.force2),
        }


def _polyforce(coeffs, r):
    # sum_i coeffs[i] * r^(i+1), vectorized in r
    r = np.asarray(r)
    out = np.zeros_like(r, dtype=np.result_type(r, float))
    for a in reversed(coeffs):
        out = (out + a) * r
    return out


def _polyforce_deriv(coeffs, r):
    r = np.asarray(r)
    out = np.zeros_like(r, dtype=np.result_type(r, float))
    for i in range(len(coeffs) - 1, -1, -1):
        out = out * r + (i + 1) * coeffs[i]
    return out


@dataclass(frozen=True)
class RootReport:
    """A located root with its classification data."""

    location: complex
    multiplicity: int
    residual: float
    derivative_values: tuple[float, ...]

    def to_json(self) -> dict:
        loc = self.location
        return {
            "location": loc if not isinstance(loc, complex) else [loc.real, loc.imag],
            "multiplicity": self.multiplicity,
            "residual": self.residual,
            "derivatives": list(self.derivative_values),
        }


def dispersion_poly(k, params: DimerParams, c: float):
    """Dispersion function at real wavenumber k and wave speed c."""
    kappa, w = params.kappa, params.w
    k = np.asarray(k, dtype=float)
    k2 = k * k  # even powers via k*k keep evenness in k bit-exact
    val = (
        c**4 * k2 * k2
        - c**2 * (1 + w) * (1 + kappa) * k2
        + 2 * kappa * w * (1 - np.cos(2 * k))
    )
    return val if val.shape else float(val)


def dispersion_poly_deriv(k, params: DimerParams, c: float, order: int = 1):
    """Analytic k-derivative of the dispersion function, orders 1 to 4."""
    kappa, w = params.kappa, params.w
    k = np.asarray(k, dtype=float)
    a = c**4
    b = c**2 * (1 + w) * (1 + kappa)
    g = 2 * kappa * w
    if order == 1:
        val = 4 * a * k**3 - 2 * b * k + 2 * g * np.sin(2 * k)
    elif order == 2:
        val = 12 * a * k**2 - 2 * b + 4 * g * np.cos(2 * k)
    elif order == 3:
        val = 24 * a * k - 8 * g * np.sin(2 * k)
    elif order == 4:
        val = 24 * a - 16 * g * np.cos(2 * k)
    else:
        raise ValueError("order must be 1..4")
    return val if val.shape else float(val)


def symbol_det(z, params: DimerParams, c: float):
    """Determinant of the traveling-wave symbol matrix at spectral parameter z.

    On the imaginary axis it reduces to the dispersion function:
    symbol_det(ik) = dispersion_poly(k).
    """
    kappa, w = params.kappa, params.w
    z = np.asarray(z, dtype=complex)
    z2 = z * z
    val = (
        c**4 * z2 * z2
        + c**2 * (1 + kappa) * (1 + w) * z2
        + 2 * kappa * w * (1 - np.cosh(2 * z))
    )
    return val if val.shape else complex(val)


def branch_eigenvalues(k, params: DimerParams):
    """Acoustic and optical branch values (low, high) at real wavenumber k.

    The dispersion function factors as
    (c^2 k^2 - low(k)) * (c^2 k^2 - high(k)) for every c.
    """
    kappa, w = params.kappa, params.w
    k = np.asarray(k, dtype=float)
    disc = (1 + w) ** 2 * (1 - kappa) ** 2 + 4 * kappa * (
        (1 - w) ** 2 + 4 * w * np.cos(k) ** 2
    )
    s = np.sqrt(disc)
    tr = (1 + kappa) * (1 + w)
    low = (tr - s) / 2
    high = (tr + s) / 2
    if low.shape:
        return low, high
    return float(low), float(high)


def sound_speed(params: DimerParams) -> float:
    """Speed at which k=0 becomes a fourfold root of the dispersion function."""
    kappa, w = params.kappa, params.w
    return math.sqrt(4 * kappa * w / ((1 + kappa) * (1 + w)))


def taylor_at_zero(params: DimerParams, c: float, order: int = 6) -> list[float]:
    """Derivatives of the dispersion function at k=0, orders 0..order.

    Closed forms; odd orders vanish by evenness.
    """
    if order > 6:
        raise ValueError("closed forms implemented through order 6")
    kappa, w = params.kappa, params.w
    derivs = [
        0.0,
        0.0,
        8 * kappa * w - 2 * c**2 * (1 + w) * (1 + kappa),
        0.0,
        24 * c**4 - 32 * kappa * w,
        0.0,
        128 * kappa * w,
    ]
    return derivs[: order + 1]


def multiplicity_tolerance(params: DimerParams, c: float) -> float:
    # scale-aware: fourth derivative sets the natural size at the sonic point
    return 1e-8 * (1 + abs(taylor_at_zero(params, c, 4)[4]))


def classify_zero_root(params: DimerParams, c: float) -> RootReport:
    """Multiplicity of the root at k=0 from the closed-form derivatives."""
    derivs = taylor_at_zero(params, c, 6)
    tol = multiplicity_tolerance(params, c)
    mult = 0
    for d in derivs:
        if abs(d) > tol:
            break
        mult += 1
    return RootReport(
        location=0.0,
        multiplicity=mult,
        residual=abs(derivs[0]),
        derivative_values=tuple(derivs[1:5]),
    )


def _scan_brackets(f, lo: float, hi: float, step: float):
    ks = np.arange(lo, hi + step, step)
    vals = f(ks)
    sign = np.sign(vals)
    # treat exact zeros as sign changes at the node
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    brackets = [(ks[i], ks[i + 1]) for i in flips]
    zeros = [float(ks[i]) for i in np.nonzero(sign == 0)[0]]
    return brackets, zeros


def critical_frequency(
    params: DimerParams,
    c: float,
    scan_step: float = SCAN_STEP,
    k_max: float = SCAN_MAX,
) -> RootReport:
    """Unique positive root of the dispersion function at speed c.

    Brackets by a sign-change scan over (SCAN_MIN, k_max], bisects to 1e-12,
    then applies one Newton polish with the analytic derivative.  Raises
    NoRoot when the scan finds nothing and MultipleRoots when more than one
    bracket appears (the speed is outside the admissible range).
    """
    f = lambda k: dispersion_poly(k, params, c)
    brackets, zeros = _scan_brackets(f, SCAN_MIN, k_max, scan_step)
    if len(brackets) + len(zeros) == 0:
        raise NoRoot(f"no positive dispersion root in ({SCAN_MIN}, {k_max}]")
    if len(brackets) + len(zeros) > 1:
        raise MultipleRoots(
            f"{len(brackets) + len(zeros)} positive roots found; "
            "speed outside the admissible range"
        )
    if zeros:
        root = zeros[0]
    else:
        root = brentq(f, *brackets[0], xtol=BISECT_TOL)
    d1 = dispersion_poly_deriv(root, params, c, 1)
    if d1 != 0:
        polished = root - f(root) / d1
        if abs(f(polished)) < abs(f(root)):
            root = polished
    tol = multiplicity_tolerance(params, c)
    derivs = tuple(dispersion_poly_deriv(root, params, c, n) for n in (1, 2, 3, 4))
    mult = 1 if abs(derivs[0]) > tol else 2
    return RootReport(
        location=float(root),
        multiplicity=mult,
        residual=abs(f(root)),
        derivative_values=derivs,
    )


def supersonic_real_root(
    params: DimerParams,
    c: float,
    scan_max: float = 2.0,
    scan_step: float = SCAN_STEP,
) -> RootReport:
    """Positive real root of the symbol determinant for supersonic c.

    The root exists only above the sonic speed and (by design) speeds are
    validated for c^2 - c_s^2 up to 0.25.
    """
    cs = sound_speed(params)
    if c <= cs:
        raise NoRoot("real root splits off only for supersonic speeds")
    if c**2 - cs**2 > SUPERSONIC_WINDOW + 1e-12:
        raise NoRoot(
            f"c^2 - c_s^2 = {c**2 - cs**2:.4f} outside the validated "
            f"window (0, {SUPERSONIC_WINDOW}]"
        )
    f = lambda x: np.real(symbol_det(x + 0j, params, c))
    brackets, zeros = _scan_brackets(f, SCAN_MIN, scan_max, scan_step)
    if len(brackets) + len(zeros) == 0:
        raise NoRoot(f"no real root of the symbol determinant in (0, {scan_max}]")
    if len(brackets) + len(zeros) > 1:
        raise MultipleRoots("unexpected extra real roots; parameter pathology")
    root = zeros[0] if zeros else brentq(f, *brackets[0], xtol=BISECT_TOL)
    # one Newton polish with a central-difference slope (no closed-form need)
    h = 1e-7
    slope = (f(root + h) - f(root - h)) / (2 * h)
    if slope != 0:
        polished = root - f(root) / slope
        if abs(f(polished)) < abs(f(root)):
            root = polished
    derivs = []
    for n in range(1, 5):
        # central differences of order n at spacing 1e-3 are ample here
        derivs.append(_fd_deriv(f, root, n, 1e-3))
    return RootReport(
        location=float(root),
        multiplicity=1,
        residual=abs(f(root)),
        derivative_values=tuple(derivs),
    )


def _fd_deriv(f, x: float, order: int, h: float) -> float:
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    if order == 2:
        return (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    if order == 3:
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h**3)
    if order == 4:
        return (
            f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)
        ) / h**4
    raise ValueError("order must be 1..4")


def front_decay_rate(params: DimerParams) -> float:
    """Decay rate of the front and sech^2 core profiles.

    Defined for the mass dimer (kappa=1) and the spring dimer (w=1); the
    general-dimer analog is not available in closed form (use the square root
    of the linear nondegeneracy constant instead).
    """
    kappa, w = params.kappa, params.w
    if kappa == 1.0:
        return math.sqrt(6 * w * (1 + w) / (w * w - w + 1))
    if w == 1.0:
        return math.sqrt(6 * kappa * (1 + kappa) / (kappa * kappa - kappa + 1))
    raise Unsupported(
        "front decay rate has no closed form for the general dimer; "
        "use sqrt(linear_nondegeneracy) from the invariants module"
    )


def supersonic_speed(params: DimerParams, delta: float) -> float:
    """The speed with c^2 = c_s^2 + delta, for delta in the validated window."""
    if not 0.0 < delta <= SUPERSONIC_WINDOW + 1e-12:
        raise ConfigInvalid(
            f"supersonic offset delta={delta} outside (0, {SUPERSONIC_WINDOW}]"
        )
    return math.sqrt(sound_speed(params) ** 2 + delta)


def spectral_report(params: DimerParams, c: float | None = None) -> dict:
    """JSON-ready summary of the dispersion analysis at speed c (default sonic)."""
    cs = sound_speed(params)
    if c is None:
        c = cs
    zero = classify_zero_root(params, c)
    report = {
        "params": params.to_json(),
        "c": c,
        "c_s": cs,
        "zero_root": zero.to_json(),
        "taylor_at_zero": taylor_at_zero(params, c, 6),
    }
    try:
        crit = critical_frequency(params, c)
        report["critical_frequency"] = crit.to_json()
    except (NoRoot, MultipleRoots) as exc:
        report["critical_frequency"] = {"error": str(exc)}
    if c > cs:
        try:
            report["supersonic_root"] = supersonic_real_root(params, c).to_json()
        except (NoRoot, MultipleRoots) as exc:
            report["supersonic_root"] = {"error": str(exc)}
    try:
        report["front_decay_rate"] = front_decay_rate(params)
    except Unsupported:
        report["front_decay_rate"] = None
    return report
