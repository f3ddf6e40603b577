"""Propagation under the unitary group of the 1/(t+s) operator.

Exact evolution is the Fourier multiplier e^{-i lambda(k) T} in the Mellin
picture.  For large |T| the solution concentrates on
t in (e^{-pi^2 |T|/2}, e^{pi^2 |T|/2}) and is approximated inside that
window by two stationary-phase branches U_1(T) + U_2(T), indexed by the
two solutions of lambda'(k) = ln(t)/T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoalescenceError, DomainError, GridSupportError
from .mellin import MellinSpectrum, mellin_forward, mellin_inverse
from .spectral_core import PI, _dispersion

# group velocity extremum: lambda'(k) has minimum -pi^2/2 at k0
K_CRITICAL = math.log(math.sqrt(2.0) + 1.0) / PI

# guard bands in tau = -2 ln(t)/(pi^2 T): near 0 the stationary points
# escape to 0/infinity, near +-1 they coalesce (Airy regime); the
# asymptotics is only used for spectra supported away from 0 and +-k0
GUARD_TAU_SMALL = 0.02
GUARD_TAU_COALESCE = 0.02
T_MIN = 10.0

_SUPPORT_EPS = 1e-12


def compact_bump(k, lo, hi):
    """C^infinity bump exp(-1/(1-xi^2)) scaled to the support (lo, hi).

    The standard mollifier profile; used to build spectra supported away
    from the guard bands of the stationary-phase machinery.
    """
    k = np.asarray(k, dtype=float)
    xi = 2.0 * (k - lo) / (hi - lo) - 1.0
    out = np.zeros_like(k)
    inside = np.abs(xi) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - xi[inside] ** 2))
    return out


def lambda_prime(k):
    """Group velocity lambda'(k) = -pi^2 sinh(pi k)/cosh^2(pi k)."""
    k = np.asarray(k, dtype=float)
    out = -PI * PI * np.sinh(PI * k) / np.cosh(PI * k) ** 2
    return out if out.ndim else float(out)


def lambda_double_prime(k):
    """lambda''(k) = -pi^3 (1 - sinh^2(pi k))/cosh^3(pi k); zero at k0."""
    k = np.asarray(k, dtype=float)
    out = -PI**3 * (1.0 - np.sinh(PI * k) ** 2) / np.cosh(PI * k) ** 3
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class StationaryData:
    """Both stationary points of k ln t - lambda(k) T at tau = -2 ln(t)/(pi^2 T).

    sigma_j = 1 + (-1)^j sqrt(1-tau^2); sinh(pi k_j) = sigma_j/tau;
    omega_j = pi^2 k_j tau/2 + lambda(k_j); lpp_j = lambda''(k_j) with
    sign (-1)^j.
    """

    tau: float
    sigma1: float
    sigma2: float
    k1: float
    k2: float
    lambda1: float
    lambda2: float
    omega1: float
    omega2: float
    lpp1: float
    lpp2: float


def _k_branch(tau, j):
    sgn = np.sign(tau)
    at = np.abs(tau)
    sigma = 1.0 + (-1.0) ** j * np.sqrt(1.0 - tau * tau)
    root = sigma + np.sqrt(2.0 * sigma)
    return sgn / PI * np.log(root / at), sigma, root


def _lambda_at_branch(tau, sigma, root):
    # lambda(k_j) in closed form, free of cancellation near tau -> 0
    return 2.0 * PI * np.abs(tau) * root / (root * root + tau * tau)


def _lpp_at_branch(tau, sigma, j):
    return (-1.0) ** j * PI**3 * np.abs(tau) * np.sqrt((1.0 - tau * tau) / (2.0 * sigma))


def stationary_points(tau):
    """Stationary-phase data for 0 < |tau| < 1 away from the guard bands."""
    tau = float(tau)
    if not math.isfinite(tau):
        raise DomainError("tau must be finite")
    if abs(tau) >= 1.0:
        raise DomainError("no stationary points for |tau| >= 1 (rapid decay regime)")
    if abs(tau) == 0.0:
        raise DomainError("tau = 0 excluded (stationary points escape to 0 and inf)")
    if abs(tau) < GUARD_TAU_SMALL:
        raise CoalescenceError(
            f"|tau| = {abs(tau):g} inside divergence guard {GUARD_TAU_SMALL:g}"
        )
    if 1.0 - abs(tau) < GUARD_TAU_COALESCE:
        raise CoalescenceError(
            f"1-|tau| = {1 - abs(tau):g} inside coalescence guard {GUARD_TAU_COALESCE:g}"
        )
    k1, s1, r1 = _k_branch(tau, 1)
    k2, s2, r2 = _k_branch(tau, 2)
    lam1 = _lambda_at_branch(tau, s1, r1)
    lam2 = _lambda_at_branch(tau, s2, r2)
    return StationaryData(
        tau=tau,
        sigma1=float(s1),
        sigma2=float(s2),
        k1=float(k1),
        k2=float(k2),
        lambda1=float(lam1),
        lambda2=float(lam2),
        omega1=float(PI * PI * k1 * tau / 2.0 + lam1),
        omega2=float(PI * PI * k2 * tau / 2.0 + lam2),
        lpp1=float(_lpp_at_branch(tau, s1, 1)),
        lpp2=float(_lpp_at_branch(tau, s2, 2)),
    )


def propagate_exact(f, grid, T, support_tol=1e-16):
    """e^{-iCT} f via the Mellin multiplier; raises when the evolved support
    would spill past the grid ends (spread is at most pi^2 |T|/2 in x).

    ``support_tol`` is the squared-mass fraction allowed outside the
    essential support when checking the spill condition; the default keeps
    wrap-around contamination at the 1e-8 amplitude level.
    """
    T = float(T)
    g2 = np.abs(grid.to_log(f)) ** 2
    total = float(g2.sum())
    if total > 0.0:
        cut = float(support_tol) * total
        lo = int(np.searchsorted(np.cumsum(g2), cut))
        hi = grid.n - 1 - int(np.searchsorted(np.cumsum(g2[::-1]), cut))
        spread = PI * PI * abs(T) / 2.0
        if grid.x[lo] - spread < grid.x_min or grid.x[hi] + spread > grid.x_max:
            raise GridSupportError(
                f"grid window [{grid.x_min:g}, {grid.x_max:g}] too small: evolution "
                f"to T={T:g} needs {spread:g} beyond the initial support"
            )
    spec = mellin_forward(f, grid)
    values = np.exp(-1j * _dispersion(grid.k) * T) * spec.values
    return mellin_inverse(MellinSpectrum(grid=grid, values=values))


def sinc_interpolate(spectrum, k_targets, chunk=1024):
    """Band-limited interpolation of a MellinSpectrum at arbitrary k."""
    k_targets = np.atleast_1d(np.asarray(k_targets, dtype=float))
    dk = spectrum.grid.dk
    out = np.empty(k_targets.shape, dtype=complex)
    for lo in range(0, k_targets.size, chunk):
        block = k_targets[lo : lo + chunk]
        kernel = np.sinc((block[:, None] - spectrum.k[None, :]) / dk)
        out[lo : lo + chunk] = kernel @ spectrum.values
    return out


def _tau_of(t, T):
    return -2.0 * np.log(np.asarray(t, dtype=float)) / (PI * PI * T)


def _guard_k_intervals():
    # k-images of the tau guard bands on each branch (positive side)
    k_small = _k_branch(GUARD_TAU_SMALL, 1)[0]
    k_co_lo = _k_branch(1.0 - GUARD_TAU_COALESCE, 1)[0]
    k_co_hi = _k_branch(1.0 - GUARD_TAU_COALESCE, 2)[0]
    k_big = _k_branch(GUARD_TAU_SMALL, 2)[0]
    return float(k_small), float(k_co_lo), float(k_co_hi), float(k_big)


def check_spectrum_support(spectrum):
    """Raise unless the spectrum is negligible on the k-images of the guard
    bands (neighbourhoods of 0, +-k0, and the far tail)."""
    k_small, k_co_lo, k_co_hi, k_big = _guard_k_intervals()
    k = np.abs(spectrum.k)
    v = np.abs(spectrum.values)
    total = v.max()
    if total == 0.0:
        return
    bad = (k <= k_small) | ((k >= k_co_lo) & (k <= k_co_hi)) | (k >= k_big)
    if np.any(v[bad] > _SUPPORT_EPS * total):
        raise DomainError(
            "spectrum support touches a guard band (near k = 0, +-k0, or the "
            "far tail); the stationary-phase form is not uniform there"
        )


@dataclass(frozen=True)
class StationaryPhaseResult:
    """Pointwise values of the large-|T| approximation plus a reliability
    mask (False where tau fell inside a guard band)."""

    t: np.ndarray
    values: np.ndarray
    reliable: np.ndarray


def _branch_values(spectrum, T, tau, j):
    """One branch of the stationary-phase sum, in log representation
    (i.e. sqrt(t) times the contribution to (e^{-iCT} f)(t))."""
    kj, sigma, root = _k_branch(tau, j)
    omega = PI * PI * kj * tau / 2.0 + _lambda_at_branch(tau, sigma, root)
    lpp = _lpp_at_branch(tau, sigma, j)
    delta = np.exp(1j * np.sign(T) * PI / 4.0 * (-1.0) ** (j + 1))
    amp = np.abs(lpp) ** -0.5 * sinc_interpolate(spectrum, kj)
    return delta * np.exp(-1j * omega * T) * amp / math.sqrt(abs(T))


def propagate_stationary_phase(spectrum, T, t, check_support=True):
    """Stationary-phase value of (e^{-iCT} f)(t) inside the transport window.

    Returns a StationaryPhaseResult; values are exactly zero outside
    (e^{-pi^2|T|/2}, e^{pi^2|T|/2}).  The spectrum must vanish on the guard
    bands (checked unless check_support=False); points whose tau still
    lands inside a guard band are flagged unreliable.
    """
    T = float(T)
    if abs(T) < T_MIN:
        raise DomainError(f"|T| must be at least {T_MIN:g} for the asymptotic form")
    if check_support:
        check_spectrum_support(spectrum)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    tau = _tau_of(t, T)
    inside = np.abs(tau) < 1.0
    usable = inside & (np.abs(tau) >= GUARD_TAU_SMALL) & (1.0 - np.abs(tau) >= GUARD_TAU_COALESCE)
    reliable = usable | ~inside
    values = np.zeros(t.shape, dtype=complex)
    if np.any(usable):
        tt = tau[usable]
        acc = _branch_values(spectrum, T, tt, 1) + _branch_values(spectrum, T, tt, 2)
        values[usable] = acc / np.sqrt(t[usable])
    return StationaryPhaseResult(t=t, values=values, reliable=reliable)


def branch_norm_sq(spectrum, j, n_tau=20_001):
    """||U_j(T) f||^2 computed on the t side.

    The change of variables t -> tau turns the squared norm into
    (pi^2/2) int_{-1}^1 |lambda''(k_j)|^{-1} |f~(k_j(tau))|^2 dtau, which is
    independent of T.
    """
    if j not in (1, 2):
        raise DomainError("branch index must be 1 or 2")
    tau = (np.arange(n_tau) + 0.5) / n_tau * 2.0 - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        kj, sigma, _root = _k_branch(tau, j)
        lpp = np.abs(_lpp_at_branch(tau, sigma, j))
    good = (lpp > 0) & np.isfinite(lpp) & np.isfinite(kj)
    vals = np.zeros_like(tau)
    vals[good] = np.abs(sinc_interpolate(spectrum, kj[good])) ** 2
    integrand = np.zeros_like(tau)
    integrand[good] = vals[good] / lpp[good]
    return float(PI * PI / 2.0 * np.sum(integrand) * (2.0 / n_tau))


def window_mass(spectrum, j):
    """int_{I_j} |f~(k)|^2 dk with I_1 = (-k0, k0), I_2 its complement."""
    if j not in (1, 2):
        raise DomainError("branch index must be 1 or 2")
    k = spectrum.k
    inside = np.abs(k) < K_CRITICAL if j == 1 else np.abs(k) >= K_CRITICAL
    return float(np.sum(np.abs(spectrum.values[inside]) ** 2) * spectrum.grid.dk)


def branch_cross_term(spectrum, T, n_tau=40_001):
    """(U_1(T) f, U_2(T) f); its real part decays as |T| grows."""
    T = float(T)
    tau = (np.arange(n_tau) + 0.5) / n_tau * 2.0 - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        k1, s1, r1 = _k_branch(tau, 1)
        k2, s2, r2 = _k_branch(tau, 2)
        om1 = PI * PI * k1 * tau / 2.0 + _lambda_at_branch(tau, s1, r1)
        om2 = PI * PI * k2 * tau / 2.0 + _lambda_at_branch(tau, s2, r2)
        a1 = np.abs(_lpp_at_branch(tau, s1, 1))
        a2 = np.abs(_lpp_at_branch(tau, s2, 2))
    good = (a1 > 0) & (a2 > 0)
    for arr in (k1, k2, om1, om2, a1, a2):
        good &= np.isfinite(arr)
    f1 = np.zeros_like(tau, dtype=complex)
    f2 = np.zeros_like(tau, dtype=complex)
    f1[good] = sinc_interpolate(spectrum, k1[good])
    f2[good] = sinc_interpolate(spectrum, k2[good])
    delta12 = np.exp(1j * np.sign(T) * PI / 2.0)  # delta_1 * conj(delta_2)
    integrand = np.zeros_like(tau, dtype=complex)
    integrand[good] = (
        np.exp(-1j * (om1[good] - om2[good]) * T) * f1[good] * np.conj(f2[good])
        / np.sqrt(a1[good] * a2[good])
    )
    return complex(delta12 * PI * PI / 2.0 * np.sum(integrand) * (2.0 / n_tau))
