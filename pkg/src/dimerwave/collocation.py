"""Fourier collocation for lattice traveling waves on periodic domains.

The second-order traveling-wave system couples the two relative-displacement
components through shift-by-one operators, which are exact one-mode
multipliers in a Fourier basis.  This module provides the matrix symbol of
that coupling, its diagonalization through the acoustic and optical branches,
the scalar symbols used to cancel the acoustic factor, and two Newton solvers
built on a Galerkin truncation: a single-period ripple branch with unknown
frequency, and a long-domain solve whose solutions carry a solitary core with
small far-field ripples.

Conventions used throughout:

* Profiles live on [-L, L) with wavenumbers k_n = pi n / L.  Internally the
  solvers index the grid from x = -L upward and treat the value array as a
  periodic signal, so evenness of a profile in x is exactly index-reflection
  symmetry and cosine/sine splits need no phase factors.  Stored coefficients
  are converted to the x-centered frame (a (-1)^n twist) on output.
* The mass-dimer symmetry class is the swap rho2(x) = rho1(-x), solved in
  sum/difference variables: s = (rho1+rho2)/2 even (cosine series) and
  d = (rho1-rho2)/2 odd (sine series).  The spring-dimer class keeps both
  components even.
* The two mean (k=0) equations of the system are dependent — their sum
  vanishes identically, reflecting the free background-compression parameter
  of a lattice wave on a ring.  The solvers replace the redundant row with a
  gauge: far-field mean zero for the long-domain solve, zero global mean for
  the periodic branch.

Everything here is deterministic; scans over nu may run rows concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .dispersion import (
    DimerParams,
    branch_eigenvalues,
    critical_frequency,
    front_decay_rate,
    sound_speed,
    supersonic_speed,
)
from .errors import (
    ConfigInvalid,
    DegenerateEigenvalues,
    JacobianSingular,
    NewtonDiverged,
    SymbolSingular,
    UnderResolved,
    Unsupported,
    WindowInsideCore,
)
from .profiles import DimerKind, ProfileSpec, sech2_core

NEWTON_MAX_ITER = 40
ARMIJO_FACTOR = 0.5
ARMIJO_MAX_HALVINGS = 30
DEALIAS_FACTOR = 4  # grid points per retained mode; exact for quadratic forces


class SymmetryClass(Enum):
    """Reflection class a collocation solve is restricted to."""

    EVEN_ODD = "even_odd"    # mass dimer: even sum, odd difference
    EVEN_EVEN = "even_even"  # spring dimer: both components even


# ---------------------------------------------------------------------------
# symbols


def coupling_symbol(k: float, params: DimerParams) -> np.ndarray:
    """2x2 matrix symbol of the linearized shift coupling at wavenumber k."""
    kappa, w = params.kappa, params.w
    ep = np.exp(1j * k)
    em = np.exp(-1j * k)
    return np.array(
        [
            [-(1.0 + w), kappa * (w * ep + em)],
            [ep + w * em, -kappa * (1.0 + w)],
        ],
        dtype=complex,
    )


def diagonalize_symbol(k, params: DimerParams):
    """Eigen-decompose the coupling symbol along a wavenumber path.

    Returns (vectors, ev_minus, ev_plus) where the columns of vectors are the
    acoustic and optical eigenvectors and ev_minus/ev_plus are the matching
    symbol eigenvalues (the negatives of the dispersion branch values).  For
    array input the eigenvector phases are fixed by maximal overlap with the
    previous point, starting from a real acoustic vector proportional to
    (kappa, 1) at k = 0-like points.
    """
    karr = np.atleast_1d(np.asarray(k, dtype=float))
    low, high = branch_eigenvalues(karr, params)
    low = np.atleast_1d(low)
    high = np.atleast_1d(high)
    gap = np.abs(high - low)
    if np.any(gap < 1e-9 * np.maximum(1.0, np.abs(high))):
        raise DegenerateEigenvalues(
            "acoustic and optical branches collide on the requested path"
        )
    vectors = np.empty((karr.size, 2, 2), dtype=complex)
    prev = None
    for i, ki in enumerate(karr):
        evals, evecs = np.linalg.eig(coupling_symbol(ki, params))
        # associate columns with branches through the -branch identity
        i_minus = int(np.argmin(np.abs(evals + low[i])))
        i_plus = 1 - i_minus
        vm = evecs[:, i_minus] / np.linalg.norm(evecs[:, i_minus])
        vp = evecs[:, i_plus] / np.linalg.norm(evecs[:, i_plus])
        if prev is None:
            vm = _fix_leading_phase(vm)
            vp = _fix_leading_phase(vp)
        else:
            vm = _align_phase(vm, prev[:, 0])
            vp = _align_phase(vp, prev[:, 1])
        vectors[i, :, 0] = vm
        vectors[i, :, 1] = vp
        prev = vectors[i]
    if np.isscalar(k) or np.ndim(k) == 0:
        return vectors[0], float(-low[0]), float(-high[0])
    return vectors, -low, -high


def _fix_leading_phase(v):
    # first near-maximal entry; an exact argmax would tie-break unstably for
    # symbols whose eigenvector components share one magnitude
    mags = np.abs(v)
    pivot = v[np.argmax(mags > mags.max() - 1e-9)]
    return v * (np.conj(pivot) / np.abs(pivot))


def _align_phase(v, ref):
    overlap = np.vdot(ref, v)
    if np.abs(overlap) < 1e-12:
        return v
    return v * (np.conj(overlap) / np.abs(overlap))


def acoustic_factor(k, params: DimerParams):
    """Acoustic branch divided by the discrete-Laplacian symbol 2(1-cos k).

    The ratio has removable singularities where the denominator vanishes;
    they are eliminated algebraically through the branch product identity
    low*high = 4*kappa*w*sin^2(k), leaving the everywhere-smooth form
    4*kappa*w*cos^2(k/2)/high(k).  At k=0 this equals the squared sound
    speed.
    """
    kappa, w = params.kappa, params.w
    _, high = branch_eigenvalues(k, params)
    k = np.asarray(k, dtype=float)
    out = 4.0 * kappa * w * np.cos(k / 2.0) ** 2 / high
    if out.shape:
        return out
    return float(out)


def acoustic_resolvent_symbol(k, params: DimerParams, c: float):
    """Scalar symbol of the solitary-wave fixed-point preconditioner.

    Combines the summation-operator symbol shat(k) = (sin(k/2)/(k/2))^2 with
    the acoustic factor and the wave speed: shat*factor/(c^2 - shat*factor).
    Supersonic speeds keep the denominator positive; a near-vanishing
    denominator raises SymbolSingular.
    """
    kgrid = np.linspace(0.0, 4.0 * np.pi, 2049)
    peak = float(
        np.max(np.sinc(kgrid / (2.0 * np.pi)) ** 2 * acoustic_factor(kgrid, params))
    )
    if c * c <= peak + 1e-8:
        raise SymbolSingular(
            f"speed c={c:.6g} is not supersonic: c^2 must exceed the "
            f"dispersion-surface peak {peak:.6g}"
        )
    k = np.asarray(k, dtype=float)
    shat = np.sinc(k / (2.0 * np.pi)) ** 2
    prod = shat * acoustic_factor(k, params)
    den = c * c - prod
    if np.any(np.abs(den) < 1e-8):
        raise SymbolSingular("wave speed grazes the acoustic surface")
    out = prod / den
    if out.shape:
        return out
    return float(out)


def critical_ripple_frequency(nu: float, params: DimerParams) -> float:
    """Scaled frequency of the far-field ripple at supersonic offset nu."""
    if nu <= 0:
        raise ConfigInvalid("nu must be positive")
    c = supersonic_speed(params, nu * nu)
    return critical_frequency(params, c).location / nu


# ---------------------------------------------------------------------------
# profile container


@dataclass
class FourierProfile:
    """Truncated Fourier representation of a relative-displacement pair.

    coeffs1/coeffs2 are one-sided spectra in the x-centered frame with the
    convention f(x) = Re(c[0]) + 2 Re sum_{n>=1} c[n] exp(i pi n x / L).
    """

    L: float
    M: int
    coeffs1: np.ndarray
    coeffs2: np.ndarray
    symmetry: SymmetryClass
    info: dict = field(default_factory=dict)

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.M + 1) * np.pi / self.L

    def sample(self, n_points: int | None = None):
        """Profile values on the uniform grid, returned as (x, rho1, rho2)."""
        n = int(n_points) if n_points else DEALIAS_FACTOR * self.M
        x = -self.L + 2.0 * self.L * np.arange(n) / n
        rho1 = _onesided_synth(_to_solver_frame(self.coeffs1), n)
        rho2 = _onesided_synth(_to_solver_frame(self.coeffs2), n)
        return x, rho1, rho2

    def evaluate(self, x, deriv: int = 0):
        """Dense evaluation of (rho1, rho2) at arbitrary points."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.wavenumbers
        out = []
        for coeffs in (self.coeffs1, self.coeffs2):
            weighted = coeffs * (1j * k) ** deriv
            total = np.full(x.shape, weighted[0].real if deriv == 0 else 0.0)
            for start in range(1, self.M + 1, 1024):
                stop = min(start + 1024, self.M + 1)
                phase = np.exp(1j * np.outer(x, k[start:stop]))
                total = total + 2.0 * (phase @ weighted[start:stop]).real
            out.append(total[0] if scalar else total)
        return out[0], out[1]

    def write_csv(self, path, n_points: int | None = None) -> None:
        x, rho1, rho2 = self.sample(n_points)
        with open(path, "w", newline="\n") as fh:
            fh.write("x,rho1,rho2\n")
            for row in zip(x, rho1, rho2):
                fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    def write_sidecar(self, path) -> None:
        payload = {
            "L": self.L,
            "modes": self.M,
            "symmetry": self.symmetry.value,
        }
        payload.update(
            {key: value for key, value in self.info.items() if _jsonable(value)}
        )
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(value) -> bool:
    return isinstance(value, (int, float, str, bool, list, dict, type(None)))


@dataclass
class BranchPoint:
    """One point on the periodic ripple branch."""

    amplitude: float
    frequency: float
    profile: FourierProfile
    residual: float


# ---------------------------------------------------------------------------
# transforms (solver frame: grid indexed from x = -L, no phase factors)


def _to_solver_frame(coeffs):
    flips = (-1.0) ** np.arange(len(coeffs))
    return coeffs * flips


_from_solver_frame = _to_solver_frame  # the twist is an involution


def _onesided_synth(coeffs, n: int):
    """Grid values of f = Re c_0 + 2 Re sum_{m>=1} c_m exp(i theta m)."""
    top = min(len(coeffs), n // 2 + 1)
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[0] = coeffs[0] * n
    spec[1:top] = coeffs[1:top] * n
    return np.fft.irfft(spec, n)


def _cos_synth(coeffs, n: int):
    """Grid values of a cosine series with full trig coefficients."""
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[0] = coeffs[0] * n
    spec[1 : len(coeffs)] = coeffs[1:] * (n / 2.0)
    return np.fft.irfft(spec, n)


def _sin_synth(coeffs, n: int):
    """Grid values of a sine series; coeffs[0] is ignored for alignment."""
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[1 : len(coeffs)] = coeffs[1:] * (-0.5j * n)
    return np.fft.irfft(spec, n)


def _cos_rows(spec_onesided, m_max: int):
    rows = np.empty(m_max + 1)
    rows[0] = spec_onesided[0].real
    rows[1:] = 2.0 * spec_onesided[1 : m_max + 1].real
    return rows

def _sin_rows(spec_onesided, m_max: int):
    return -2.0 * spec_onesided[1 : m_max + 1].imag


# ---------------------------------------------------------------------------
# shared solver context


class _Discretization:
    """Grid, wavenumbers, and coupling multipliers for one solve."""

    def __init__(self, params: DimerParams, c: float, L: float, M: int):
        self.params = params
        self.c = c
        self.L = L
        self.M = M
        self.N = DEALIAS_FACTOR * M
        self.x = -L + 2.0 * L * np.arange(self.N) / self.N
        self.k = np.arange(M + 1) * np.pi / L
        self._set_multipliers(self.k)

    def _set_multipliers(self, k):
        w = self.params.w
        ep = np.exp(1j * k)
        self.b12 = w * ep + np.conj(ep)
        self.b21 = ep + w * np.conj(ep)
        self.wavelike = -self.c * self.c * k * k

    def force_values(self, rho1, rho2):
        return self.params.force1_eval(rho1), self.params.force2_eval(rho2)

    def force_slopes(self, rho1, rho2):
        return self.params.force1_deriv(rho1), self.params.force2_deriv(rho2)

    def residual_spectra(self, rho1hat, rho2hat, g1, g2):
        """One-sided spectra of both residual components."""
        onew = 1.0 + self.params.w
        g1hat = np.fft.rfft(g1)[: self.M + 1] / self.N
        g2hat = np.fft.rfft(g2)[: self.M + 1] / self.N
        G1 = self.wavelike * rho1hat + onew * g1hat - self.b12 * g2hat
        G2 = self.wavelike * rho2hat + onew * g2hat - self.b21 * g1hat
        return G1, G2

    def product_spectra(self, slope_hat_full, m_cols, trig: str):
        """Spectra of slope(x)*cos(k_m x) or slope(x)*sin(k_m x) per column.

        slope_hat_full is the full normalized FFT of the slope field; the
        gathered Toeplitz/Hankel combination is exact because the grid
        oversamples the retained modes.
        """
        n = np.arange(self.M + 1)
        diff = (n[:, None] - m_cols[None, :]) % self.N
        summ = (n[:, None] + m_cols[None, :]) % self.N
        if trig == "cos":
            return 0.5 * (slope_hat_full[diff] + slope_hat_full[summ])
        return -0.5j * (slope_hat_full[diff] - slope_hat_full[summ])


def _dimer_class(params: DimerParams) -> SymmetryClass:
    if params.kappa == 1.0:
        if params.force1 != params.force2:
            raise ConfigInvalid(
                "the swap symmetry class needs identical spring forces; "
                "got distinct force1/force2 with kappa=1"
            )
        return SymmetryClass.EVEN_ODD
    if params.w == 1.0:
        return SymmetryClass.EVEN_EVEN
    raise Unsupported(
        "no reflection class for kappa != 1 with w != 1; "
        "collocation needs a mass dimer (kappa=1) or spring dimer (w=1)"
    )


# ---------------------------------------------------------------------------
# Newton driver


def _newton(residual_fn, jacobian_fn, u0, tol: float, max_iter: int,
            first_step: float = 1.0):
    u = np.array(u0, dtype=float)
    r = residual_fn(u)
    iters = 0
    for iters in range(1, max_iter + 1):
        if np.abs(r).max() < tol:
            return u, float(np.abs(r).max()), iters - 1, True
        J = jacobian_fn(u)
        try:
            step = scipy.linalg.solve(J, -r, overwrite_a=True, check_finite=False)
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
            raise JacobianSingular(f"linear solve failed: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise JacobianSingular("non-finite Newton step")
        merit = 0.5 * float(r @ r)
        t = first_step
        moved = False
        for _ in range(ARMIJO_MAX_HALVINGS + 1):
            r_try = residual_fn(u + t * step)
            if 0.5 * float(r_try @ r_try) <= merit * (1.0 - 1e-4 * t) \
                    or np.abs(r_try).max() < tol:
                moved = True
                break
            t *= ARMIJO_FACTOR
        if not moved:
            return u, float(np.abs(r).max()), iters, False
        u = u + t * step
        r = r_try
    return u, float(np.abs(r).max()), iters, bool(np.abs(r).max() < tol)


# ---------------------------------------------------------------------------
# long-domain (torus) solve


def nanopteron_solve(
    nu: float,
    L: float,
    modes: int,
    params: DimerParams,
    tol: float = 1e-10,
) -> FourierProfile:
    """Newton-solve the traveling-wave system on [-L, L].

    The initial guess is the long-wave sech^2 core; the converged solution
    carries the core plus a small locked far-field ripple.  The gauge row
    fixes the far-field mean of the averaged component to zero, standing in
    for the decay condition of the whole-line problem.
    """
    klass = _dimer_class(params)
    c = supersonic_speed(params, nu * nu)
    if L < 30.0 / nu - 1e-12:
        raise ConfigInvalid(f"need L >= 30/nu = {30.0 / nu:.1f}; got {L}")
    omega_c = critical_frequency(params, c).location
    if omega_c > 0.8 * np.pi * modes / L:
        raise UnderResolved(
            f"ripple wavenumber {omega_c:.3f} exceeds 80% of the mode cutoff "
            f"{np.pi * modes / L:.3f}; raise modes"
        )
    disc = _Discretization(params, c, L, modes)
    eps = np.sqrt(1.0 / sound_speed(params) ** 2 - 1.0 / (c * c))
    guess1, guess2 = _core_guess(disc, eps, klass)
    gauge = _far_gauge_weights(disc)

    if klass is SymmetryClass.EVEN_ODD:
        u0 = np.concatenate([
            _analyze_cos(0.5 * (guess1 + guess2), disc),
            _analyze_sin(0.5 * (guess1 - guess2), disc)[1:],
        ])
        fns = _mass_torus_functions(disc, gauge)
    else:
        u0 = np.concatenate([
            _analyze_cos(guess1, disc),
            _analyze_cos(guess2, disc),
        ])
        fns = _spring_torus_functions(disc, gauge)

    u, res, iters, ok = _newton(*fns, u0, tol, NEWTON_MAX_ITER)
    if not ok:
        u, res, extra, ok = _newton(*fns, u0, tol, 2 * NEWTON_MAX_ITER,
                                    first_step=0.25)
        iters += extra
        if not ok:
            raise NewtonDiverged(
                f"torus solve stalled at residual {res:.3e} "
                f"(nu={nu}, L={L}, modes={modes})"
            )
    profile = _profile_from_unknowns(u, disc, klass)
    ripple_k = _far_ripple_wavenumber(profile)
    profile.info.update({
        "nu": nu,
        "c": c,
        "params": params,
        "epsilon": eps,
        "residual": res,
        "newton_iterations": iters,
        "omega_c": omega_c,
        "scaled_ripple_frequency": omega_c / nu,
        "ripple_wavenumber": ripple_k,
        "grid_points": disc.N,
    })
    try:
        profile.info["ripple_amplitude"] = ripple_amplitude(
            profile, (0.75 * L, L)
        )
    except WindowInsideCore:  # pragma: no cover - L >= 30/nu precludes this
        pass
    return profile


def _core_guess(disc: _Discretization, eps: float, klass: SymmetryClass):
    kind = DimerKind.MASS if klass is SymmetryClass.EVEN_ODD else DimerKind.SPRING
    spec = ProfileSpec(epsilon=eps, params=disc.params, dimer_kind=kind)
    scaled = eps * disc.x
    if klass is SymmetryClass.EVEN_ODD:
        core = eps * eps * sech2_core(spec, scaled)
        return core, core.copy()
    return (
        eps * eps * sech2_core(spec, scaled, 1),
        eps * eps * sech2_core(spec, scaled, 2),
    )


def _far_gauge_weights(disc: _Discretization):
    mask = np.abs(disc.x) >= 0.75 * disc.L
    y = 2.0 * np.pi * np.arange(disc.N)[mask] / disc.N
    weights = np.empty(disc.M + 1)
    for start in range(0, disc.M + 1, 1024):
        stop = min(start + 1024, disc.M + 1)
        weights[start:stop] = np.cos(
            np.outer(np.arange(start, stop), y)
        ).mean(axis=1)
    return weights


def _analyze_cos(values, disc: _Discretization):
    spec = np.fft.rfft(values) / disc.N
    out = np.empty(disc.M + 1)
    out[0] = spec[0].real
    out[1:] = 2.0 * spec[1 : disc.M + 1].real
    return out


def _analyze_sin(values, disc: _Discretization):
    spec = np.fft.rfft(values) / disc.N
    out = np.zeros(disc.M + 1)
    out[1:] = -2.0 * spec[1 : disc.M + 1].imag
    return out


def _pair_spectrum(cos_part, sin_part):
    out = (cos_part - 1j * sin_part) / 2.0
    out[0] = cos_part[0]
    return out


def _mass_torus_functions(disc: _Discretization, gauge):
    M = disc.M

    def split(u):
        s = u[: M + 1]
        d = np.zeros(M + 1)
        d[1:] = u[M + 1 :]
        return s, d

    def grids(u):
        s, d = split(u)
        sg = _cos_synth(s, disc.N)
        dg = _sin_synth(d, disc.N)
        return s, d, sg + dg, sg - dg

    def residual(u):
        s, d, rho1, rho2 = grids(u)
        g1, g2 = disc.force_values(rho1, rho2)
        G1, G2 = disc.residual_spectra(
            _pair_spectrum(s, d), _pair_spectrum(s, -d), g1, g2
        )
        Gs = 0.5 * (G1 + G2)
        Gd = 0.5 * (G1 - G2)
        out = np.empty(2 * M + 1)
        out[0] = gauge @ s
        out[1 : M + 1] = _cos_rows(Gs, M)[1:]
        out[M + 1 :] = _sin_rows(Gd, M)
        return out

    def jacobian(u):
        _, _, rho1, rho2 = grids(u)
        a1, a2 = disc.force_slopes(rho1, rho2)
        a1hat = np.fft.fft(a1) / disc.N
        a2hat = np.fft.fft(a2) / disc.N
        onew = 1.0 + disc.params.w
        J = np.empty((2 * M + 1, 2 * M + 1))
        J[0, : M + 1] = gauge
        J[0, M + 1 :] = 0.0
        for start in range(0, 2 * M + 1, 512):
            stop = min(start + 512, 2 * M + 1)
            cols = np.arange(start, stop)
            is_s = cols <= M
            m = np.where(is_s, cols, cols - M)
            # component perturbations: s-columns move both components by
            # cos(m); d-columns move them by +/- sin(m)
            h1 = np.empty((M + 1, len(cols)), dtype=complex)
            h2 = np.empty_like(h1)
            if np.any(is_s):
                h1[:, is_s] = disc.product_spectra(a1hat, m[is_s], "cos")
                h2[:, is_s] = disc.product_spectra(a2hat, m[is_s], "cos")
            if np.any(~is_s):
                h1[:, ~is_s] = disc.product_spectra(a1hat, m[~is_s], "sin")
                h2[:, ~is_s] = -disc.product_spectra(a2hat, m[~is_s], "sin")
            dG1 = onew * h1 - disc.b12[:, None] * h2
            dG2 = onew * h2 - disc.b21[:, None] * h1
            # diagonal wave-operator part
            rows = m
            colpos = np.arange(len(cols))
            diag1 = np.where(is_s, np.where(m == 0, 1.0, 0.5), -0.5j)
            diag2 = np.where(is_s, np.where(m == 0, 1.0, 0.5), 0.5j)
            dG1[rows, colpos] += disc.wavelike[rows] * diag1
            dG2[rows, colpos] += disc.wavelike[rows] * diag2
            dGs = 0.5 * (dG1 + dG2)
            dGd = 0.5 * (dG1 - dG2)
            J[1 : M + 1, start:stop] = 2.0 * dGs[1:].real
            J[M + 1 :, start:stop] = -2.0 * dGd[1:].imag
        return J

    return residual, jacobian


def _spring_torus_functions(disc: _Discretization, gauge):
    M = disc.M

    def residual(u):
        a = u[: M + 1]
        b = u[M + 1 :]
        rho1 = _cos_synth(a, disc.N)
        rho2 = _cos_synth(b, disc.N)
        g1, g2 = disc.force_values(rho1, rho2)
        G1, G2 = disc.residual_spectra(
            _pair_spectrum(a, np.zeros_like(a)),
            _pair_spectrum(b, np.zeros_like(b)),
            g1,
            g2,
        )
        out = np.empty(2 * M + 2)
        out[: M + 1] = _cos_rows(G1, M)
        out[M + 1] = 0.5 * (gauge @ a + gauge @ b)
        out[M + 2 :] = _cos_rows(G2, M)[1:]
        return out

    def jacobian(u):
        a = u[: M + 1]
        b = u[M + 1 :]
        rho1 = _cos_synth(a, disc.N)
        rho2 = _cos_synth(b, disc.N)
        a1, a2 = disc.force_slopes(rho1, rho2)
        a1hat = np.fft.fft(a1) / disc.N
        a2hat = np.fft.fft(a2) / disc.N
        onew = 1.0 + disc.params.w
        n_unknown = 2 * M + 2
        J = np.empty((n_unknown, n_unknown))
        J[M + 1, : M + 1] = 0.5 * gauge
        J[M + 1, M + 1 :] = 0.5 * gauge
        for start in range(0, n_unknown, 512):
            stop = min(start + 512, n_unknown)
            cols = np.arange(start, stop)
            first = cols <= M
            m = np.where(first, cols, cols - (M + 1))
            h1 = np.zeros((M + 1, len(cols)), dtype=complex)
            h2 = np.zeros_like(h1)
            if np.any(first):
                h1[:, first] = disc.product_spectra(a1hat, m[first], "cos")
            if np.any(~first):
                h2[:, ~first] = disc.product_spectra(a2hat, m[~first], "cos")
            dG1 = onew * h1 - disc.b12[:, None] * h2
            dG2 = onew * h2 - disc.b21[:, None] * h1
            colpos = np.arange(len(cols))
            diag = np.where(m == 0, 1.0, 0.5)
            dG1[m[first], colpos[first]] += (
                disc.wavelike[m[first]] * diag[first]
            )
            dG2[m[~first], colpos[~first]] += (
                disc.wavelike[m[~first]] * diag[~first]
            )
            J[: M + 1, start:stop] = np.vstack(
                [dG1[0].real, 2.0 * dG1[1:].real]
            )
            J[M + 2 :, start:stop] = 2.0 * dG2[1:].real
        return J

    return residual, jacobian


def _profile_from_unknowns(u, disc: _Discretization, klass: SymmetryClass):
    M = disc.M
    if klass is SymmetryClass.EVEN_ODD:
        s = u[: M + 1]
        d = np.zeros(M + 1)
        d[1:] = u[M + 1 :]
        c1 = _pair_spectrum(s, d)
        c2 = _pair_spectrum(s, -d)
    else:
        c1 = u[: M + 1].astype(complex)
        c1[1:] /= 2.0
        c2 = u[M + 1 :].astype(complex)
        c2[1:] /= 2.0
    return FourierProfile(
        L=disc.L,
        M=M,
        coeffs1=_from_solver_frame(c1),
        coeffs2=_from_solver_frame(c2),
        symmetry=klass,
    )


def _far_ripple_wavenumber(profile: FourierProfile) -> float:
    """Dominant wavenumber of the far-field oscillation of component 2.

    Measured from the contiguous far-field block (both tails join across the
    periodic boundary), Hann-windowed and zero-padded for sub-bin resolution.
    """
    n = DEALIAS_FACTOR * profile.M
    x, _, rho2 = profile.sample(n)
    mask = np.abs(x) >= 0.75 * profile.L
    block = np.fft.fftshift(rho2)[np.fft.fftshift(mask)]
    block = block - block.mean()
    block = block * np.hanning(len(block))
    padded = np.fft.rfft(block, 8 * len(block))
    spacing = 2.0 * profile.L / n
    freqs = np.fft.rfftfreq(8 * len(block), d=spacing) * 2.0 * np.pi
    return float(freqs[np.argmax(np.abs(padded))])


def system_residual(profile: FourierProfile, params: DimerParams, c: float,
                    refine: int = 2) -> float:
    """Pointwise traveling-wave residual on a refined grid.

    Independent of the solver's Galerkin projection: the profile is
    resampled on a refine-times-finer grid, the shift operators are applied
    through exact Fourier multipliers of the force fields, and the sup norm
    over both components is returned.  A converged profile should stay
    within a small multiple of the Newton tolerance.
    """
    n = refine * DEALIAS_FACTOR * profile.M
    k_full = np.fft.rfftfreq(n, d=2.0 * profile.L / n) * 2.0 * np.pi

    def synth(coeffs, mult=None):
        spec = np.zeros(n // 2 + 1, dtype=complex)
        spec[0] = coeffs[0] * n
        spec[1 : len(coeffs)] = coeffs[1:] * n
        if mult is not None:
            spec = spec * mult[: n // 2 + 1]
        return np.fft.irfft(spec, n)

    c1 = _to_solver_frame(profile.coeffs1)
    c2 = _to_solver_frame(profile.coeffs2)
    rho1 = synth(c1)
    rho2 = synth(c2)
    dd1 = synth(c1, -(k_full**2))
    dd2 = synth(c2, -(k_full**2))
    g1 = params.force1_eval(rho1)
    g2 = params.force2_eval(rho2)

    def shift(values, sign):
        spec = np.fft.rfft(values) * np.exp(sign * 1j * k_full)
        return np.fft.irfft(spec, n)

    w = params.w
    G1 = c * c * dd1 + (1.0 + w) * g1 - w * shift(g2, +1) - shift(g2, -1)
    G2 = c * c * dd2 + (1.0 + w) * g2 - shift(g1, +1) - w * shift(g1, -1)
    return float(max(np.abs(G1).max(), np.abs(G2).max()))


# ---------------------------------------------------------------------------
# periodic ripple branch


def periodic_branch(
    nu: float,
    a: float,
    params: DimerParams,
    modes: int,
    a_max: float = 1e-2,
    tol: float = 1e-10,
) -> BranchPoint:
    """Continue the single-period ripple to amplitude a at offset nu.

    The frequency is an unknown alongside the Fourier coefficients; the
    amplitude is pinned through the first harmonic of the designated
    component (the odd difference for the mass class, component 1 for the
    spring class), and the global mean is gauged to zero.
    """
    if not 0.0 < a <= a_max:
        raise ConfigInvalid(f"amplitude must lie in (0, {a_max}]; got {a}")
    klass = _dimer_class(params)
    c = supersonic_speed(params, nu * nu)
    omega0 = critical_frequency(params, c).location
    M = modes
    N = DEALIAS_FACTOR * M
    if klass is SymmetryClass.EVEN_ODD:
        u0 = _mass_ring_guess(params, c, omega0, a, M)
        fns = _mass_ring_functions(params, c, M, N, a)
    else:
        u0 = _spring_ring_guess(params, c, omega0, a, M)
        fns = _spring_ring_functions(params, c, M, N, a)
    u, res, _, ok = _newton(*fns, u0, tol, NEWTON_MAX_ITER)
    if not ok:
        u, res, _, ok = _newton(*fns, u0, tol, 2 * NEWTON_MAX_ITER,
                                first_step=0.5)
        if not ok:
            raise NewtonDiverged(
                f"periodic branch stalled at residual {res:.3e} "
                f"(nu={nu}, a={a})"
            )
    omega = u[-1]
    if klass is SymmetryClass.EVEN_ODD:
        s = u[: M + 1]
        d = np.zeros(M + 1)
        d[1:] = u[M + 1 : 2 * M + 1]
        c1 = _pair_spectrum(s, d)
        c2 = _pair_spectrum(s, -d)
    else:
        c1 = u[: M + 1].astype(complex)
        c1[1:] /= 2.0
        c2 = u[M + 1 : 2 * M + 2].astype(complex)
        c2[1:] /= 2.0
    profile = FourierProfile(
        L=np.pi / omega,
        M=M,
        coeffs1=c1,
        coeffs2=c2,
        symmetry=klass,
        info={"nu": nu, "c": c, "params": params, "residual": res,
              "omega": float(omega)},
    )
    return BranchPoint(
        amplitude=a,
        frequency=float(omega / nu),
        profile=profile,
        residual=res,
    )


def _ring_spectra(params, c, omega, rho1hat, rho2hat, g1, g2, M, N):
    w = params.w
    n = np.arange(M + 1)
    ep = np.exp(1j * n * omega)
    b12 = w * ep + np.conj(ep)
    b21 = ep + w * np.conj(ep)
    wavelike = -c * c * (n * omega) ** 2
    g1hat = np.fft.rfft(g1)[: M + 1] / N
    g2hat = np.fft.rfft(g2)[: M + 1] / N
    G1 = wavelike * rho1hat + (1.0 + w) * g1hat - b12 * g2hat
    G2 = wavelike * rho2hat + (1.0 + w) * g2hat - b21 * g1hat
    return G1, G2


def _mass_ring_functions(params, c, M, N, a):
    def split(u):
        s = u[: M + 1]
        d = np.zeros(M + 1)
        d[1:] = u[M + 1 : 2 * M + 1]
        return s, d, u[-1]

    def residual(u):
        s, d, omega = split(u)
        rho1 = _cos_synth(s, N) + _sin_synth(d, N)
        rho2 = _cos_synth(s, N) - _sin_synth(d, N)
        g1, g2 = params.force1_eval(rho1), params.force2_eval(rho2)
        G1, G2 = _ring_spectra(
            params, c, omega, _pair_spectrum(s, d), _pair_spectrum(s, -d),
            g1, g2, M, N,
        )
        Gs = 0.5 * (G1 + G2)
        Gd = 0.5 * (G1 - G2)
        out = np.empty(2 * M + 2)
        out[0] = s[0]
        out[1 : M + 1] = _cos_rows(Gs, M)[1:]
        out[M + 1 : 2 * M + 1] = _sin_rows(Gd, M)
        out[-1] = d[1] - a
        return out

    def jacobian(u):
        return _ring_jacobian_fd(residual, u)

    return residual, jacobian


def _spring_ring_functions(params, c, M, N, a):
    def residual(u):
        acoef = u[: M + 1]
        bcoef = u[M + 1 : 2 * M + 2]
        omega = u[-1]
        rho1 = _cos_synth(acoef, N)
        rho2 = _cos_synth(bcoef, N)
        g1, g2 = params.force1_eval(rho1), params.force2_eval(rho2)
        G1, G2 = _ring_spectra(
            params, c, omega,
            _pair_spectrum(acoef, np.zeros_like(acoef)),
            _pair_spectrum(bcoef, np.zeros_like(bcoef)),
            g1, g2, M, N,
        )
        out = np.empty(2 * M + 3)
        out[: M + 1] = _cos_rows(G1, M)
        out[M + 1] = 0.5 * (acoef[0] + bcoef[0])
        out[M + 2 : 2 * M + 2] = _cos_rows(G2, M)[1:]
        out[-1] = acoef[1] - a
        return out

    def jacobian(u):
        return _ring_jacobian_fd(residual, u)

    return residual, jacobian


def _ring_jacobian_fd(residual, u, step: float = 1e-7):
    """Dense Jacobian by central differences.

    Ring systems are small (tens of modes), so differencing the exact
    residual is cheaper to maintain than a hand-linearized pipeline and
    accurate enough for quadratically convergent Newton steps.
    """
    r0 = residual(u)
    J = np.empty((len(r0), len(u)))
    for j in range(len(u)):
        h = step * (1.0 + abs(u[j]))
        up = u.copy()
        up[j] += h
        um = u.copy()
        um[j] -= h
        J[:, j] = (residual(up) - residual(um)) / (2.0 * h)
    return J


def _mass_ring_guess(params, c, omega0, a, M):
    alpha = c * c * omega0 * omega0 - (1.0 + params.w)
    gamma = params.w * np.exp(1j * omega0) + np.exp(-1j * omega0)
    phase = 0.5 * np.angle(-np.conj(gamma) / alpha) if alpha != 0 else 0.0
    lead = np.exp(1j * phase) * gamma
    q0 = -2.0 * lead.imag
    u0 = np.zeros(2 * M + 2)
    if abs(q0) > 1e-12:
        scale = a / q0
        u0[1] = 2.0 * scale * lead.real   # first cosine harmonic of s
        u0[M + 1] = a                     # first sine harmonic of d
    else:
        u0[M + 1] = a
    u0[-1] = omega0
    return u0


def _spring_ring_guess(params, c, omega0, a, M):
    v1 = -2.0 * params.kappa * np.cos(omega0)
    v2 = c * c * omega0 * omega0 - 2.0
    u0 = np.zeros(2 * M + 3)
    u0[1] = a
    u0[M + 2] = a * (v2 / v1) if abs(v1) > 1e-12 else 0.0
    u0[-1] = omega0
    return u0


# ---------------------------------------------------------------------------
# ripple measurement and scans


def ripple_amplitude(profile: FourierProfile, window) -> float:
    """Half the peak-to-trough oscillation in a far-field window.

    The window must sit entirely in |x| >= L/2; the local mean is removed
    before measuring, and the larger of the two components' oscillations is
    returned.
    """
    x_lo, x_hi = float(window[0]), float(window[1])
    if x_hi <= x_lo:
        raise ConfigInvalid("window endpoints must be increasing")
    half = profile.L / 2.0
    inside_far = (x_lo >= half and x_hi <= profile.L) or (
        x_hi <= -half and x_lo >= -profile.L
    )
    if not inside_far:
        raise WindowInsideCore(
            f"window [{x_lo}, {x_hi}] must sit inside "
            f"[{half}, {profile.L}] or [{-profile.L}, {-half}]"
        )
    pts = np.linspace(x_lo, x_hi, max(512, profile.M))
    rho1, rho2 = profile.evaluate(pts)
    spans = []
    for values in (rho1, rho2):
        centered = values - values.mean()
        spans.append(0.5 * (centered.max() - centered.min()))
    return float(max(spans))


def amplitude_scan(nu_list, params: DimerParams, tol: float = 1e-11) -> dict:
    """Solve the long-domain problem along nu_list and fit the decay law.

    Returns per-row (nu, amplitude) data plus two fits: the algebraic order
    p from log a against log nu, and the exponential constant A from log a
    against 1/nu with its R^2.  A single row yields no fits.
    """
    nu_values = [float(v) for v in nu_list]
    rows = []
    for nu in nu_values:
        L, modes = _auto_domain(nu, params)
        profile = nanopteron_solve(nu, L, modes, params, tol=tol)
        rows.append(
            {
                "nu": nu,
                "amplitude": profile.info["ripple_amplitude"],
                "L": L,
                "modes": modes,
                "residual": profile.info["residual"],
            }
        )
    table: dict = {"rows": rows}
    if len(rows) >= 2:
        nus = np.array([row["nu"] for row in rows])
        amps = np.array([row["amplitude"] for row in rows])
        log_a = np.log(amps)
        p_slope = np.polyfit(np.log(nus), log_a, 1)[0]
        coeffs, ssr = np.polyfit(1.0 / nus, log_a, 1, full=True)[:2]
        total = float(((log_a - log_a.mean()) ** 2).sum())
        r2 = 1.0 - float(ssr[0]) / total if total > 0 and len(ssr) else 1.0
        table["algebraic_order"] = float(p_slope)
        table["exponential_rate"] = float(-coeffs[0])
        table["r_squared"] = float(r2)
    else:
        table["algebraic_order"] = None
        table["exponential_rate"] = None
        table["r_squared"] = None
    return table


def _auto_domain(nu: float, params: DimerParams):
    c = supersonic_speed(params, nu * nu)
    cs = sound_speed(params)
    eps = np.sqrt(1.0 / cs**2 - 1.0 / (c * c))
    q = front_decay_rate(params)
    L = max(30.0 / nu, 10.0 * np.log(10.0) / (q * eps))
    L = 10.0 * np.ceil(L / 10.0)
    omega_c = critical_frequency(params, c).location
    need = max(2.5 * omega_c, 20.0 * q * eps) * L / np.pi
    modes = 128
    while modes < need:
        modes *= 2
    return L, modes