"""Branch-correct spectral functions of the half-line kernel 1/(t+s).

The operator (Cf)(t) = int_0^inf (t+s)^{-1} f(s) ds has purely absolutely
continuous spectrum [0, pi] of multiplicity two, with dispersion relation

    lambda(k) = pi / cosh(pi*k),        k >= 0.

Its resolvent is R(z) = -z^{-1} (I + A(z)) where A(z) is the integral
operator with kernel

    a(t, s; z) = phi(z)^{-1} (t*s)^{-1/2} rho(t/s; z),
    phi(z)     = sqrt(z^2 - pi^2)  with  phi(z) > 0 for z > pi,
    rho(u; z)  = -sinh((theta(z) - 1) ln u) / sinh(ln u),
    theta(z)   = 2 + i*bk(z),

and bk(z) = pi^{-1} ln q(z), q(z) = (pi - i*phi(z))/z with arg q in (0, 2*pi).
This module evaluates these functions on and off the cut, the spectral
density on (0, pi), and the edge expansions at z = pi and z = 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchCutAmbiguityError, DomainError, EdgeProximityError

PI = math.pi

# Boundary evaluation keeps this margin away from the spectral edges 0 and
# pi; the edge neighbourhoods are served by the dedicated expansions.
EDGE_MARGIN = 1e-6

# Switch rho (and relatives) to a truncated Taylor series in w = ln u below
# this threshold; both sinh factors are individually fine but the quotient
# is 0/0 at w = 0.
_W_SERIES = 1e-3

OFF_CUT = "off-cut"
BOUNDARY_PLUS = "boundary-plus"
BOUNDARY_MINUS = "boundary-minus"


def lambda_of_k(k):
    """Energy lambda(k) = pi / cosh(pi*k) for quasi-momentum k >= 0."""
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)):
        raise DomainError("quasi-momentum must be finite")
    if np.any(k < 0):
        raise DomainError("quasi-momentum must be nonnegative")
    out = PI / np.cosh(PI * k)
    return out if out.ndim else float(out)


def k_of_lambda(lam):
    """Quasi-momentum k(lambda) = pi^{-1} ln((pi + sqrt(pi^2-lambda^2))/lambda).

    Inverse of :func:`lambda_of_k`; defined for energies in (0, pi].
    """
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise DomainError("energy must be finite")
    if np.any(lam <= 0) or np.any(lam > PI):
        raise DomainError("energy must lie in (0, pi]")
    out = np.arccosh(PI / lam) / PI
    return out if out.ndim else float(out)


def _dispersion(k):
    """lambda(k) on the whole real line (even extension used internally)."""
    return PI / np.cosh(PI * np.asarray(k, dtype=float))


@dataclass(frozen=True)
class QuasiMomentum:
    """A (k, lambda) pair tied together by the dispersion relation."""

    k: float
    energy: float

    @classmethod
    def from_k(cls, k):
        k = float(k)
        return cls(k=k, energy=lambda_of_k(k))

    @classmethod
    def from_energy(cls, lam):
        lam = float(lam)
        return cls(k=k_of_lambda(lam), energy=lam)


@dataclass(frozen=True)
class SpectralPoint:
    """A complex energy off the cut, or a boundary value lambda +/- i0.

    Carries the branch-consistent values of phi(z), q(z) and bk(z); these
    are computed once at construction.  Boundary values use closed formulas
    rather than numerical limits, so no seam-adjacent cancellation occurs.
    """

    value: complex
    location: str
    phi: complex = field(init=False)
    q: complex = field(init=False)
    branch_momentum: complex = field(init=False)

    def __post_init__(self):
        z = complex(self.value)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise DomainError("energy must be finite")
        if self.location == OFF_CUT:
            if z.imag == 0.0 and 0.0 <= z.real <= PI:
                raise BranchCutAmbiguityError(
                    "real energy in [0, pi] requires a boundary side"
                )
            if z == 0:
                raise DomainError("z = 0 is excluded")
            if z.imag == 0.0 and -PI <= z.real < 0.0:
                # the resolvent kernel continues analytically across
                # (-pi, 0); evaluate via the upper-edge formulas
                phi = 1j * math.sqrt(PI * PI - z.real * z.real)
                bk = _boundary_bk(z.real, plus_side=True)
            else:
                phi = _phi_off_cut(z)
                bk = _bk_from_q((PI - 1j * phi) / z)
        elif self.location in (BOUNDARY_PLUS, BOUNDARY_MINUS):
            lam = z.real
            if z.imag != 0.0:
                raise DomainError("boundary points take a real energy")
            if not -PI <= lam <= PI or lam == 0.0:
                raise DomainError("boundary energy must lie in [-pi, pi], nonzero")
            s = 1.0 if self.location == BOUNDARY_PLUS else -1.0
            phi = s * 1j * math.sqrt(PI * PI - lam * lam)
            bk = _boundary_bk(lam, plus_side=(s > 0))
        else:
            raise DomainError(f"unknown location {self.location!r}")
        object.__setattr__(self, "value", z)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "q", (PI - 1j * phi) / z)
        object.__setattr__(self, "branch_momentum", bk)

    @classmethod
    def off_cut(cls, z):
        return cls(value=complex(z), location=OFF_CUT)

    @classmethod
    def boundary(cls, lam, side="+"):
        if side not in ("+", "-"):
            raise DomainError("side must be '+' or '-'")
        loc = BOUNDARY_PLUS if side == "+" else BOUNDARY_MINUS
        return cls(value=complex(float(lam)), location=loc)

    @property
    def is_boundary(self):
        return self.location != OFF_CUT

    @property
    def theta(self):
        """theta(z) = 2 + i*bk(z); vanishes linearly in phi(z) at z = pi."""
        return 2.0 + 1j * self.branch_momentum

    def conjugate(self):
        if self.location == OFF_CUT:
            return SpectralPoint.off_cut(complex(self.value).conjugate())
        side = "-" if self.location == BOUNDARY_PLUS else "+"
        return SpectralPoint.boundary(self.value.real, side)


def _phi_off_cut(z):
    # sqrt(z-pi)*sqrt(pi+z) with principal square roots realizes the branch
    # cut along [-pi, pi] with phi > 0 for z > pi and phi < 0 for z < -pi.
    return cmath.sqrt(z - PI) * cmath.sqrt(z + PI)


def _bk_from_q(q):
    arg = cmath.phase(q)
    if arg <= 0.0:
        arg += 2.0 * PI
    return (math.log(abs(q)) + 1j * arg) / PI


def _boundary_bk(lam, plus_side):
    # bk(lam+i0) = k(lam) + 2i on (0, pi],  k(|lam|) + i on [-pi, 0);
    # the minus side follows from bk(conj z) = -conj bk(z).
    if lam > 0:
        bk = k_of_lambda(lam) + 2j
    else:
        bk = k_of_lambda(-lam) + 1j
    if not plus_side:
        bk = -bk.conjugate()
    return bk


def branch_k(point):
    """The branch-fixed logarithmic momentum bk(z) = pi^{-1} ln q(z).

    Analytic off [-pi, pi]; boundary values are the closed formulas
    bk(lam+i0) = k(lam) + 2i on (0, pi] and k(|lam|) + i on [-pi, 0).
    """
    if not isinstance(point, SpectralPoint):
        point = SpectralPoint.off_cut(point)
    return point.branch_momentum


def _as_point(z):
    return z if isinstance(z, SpectralPoint) else SpectralPoint.off_cut(z)


def _sinh_ratio(nu, w):
    """sinh(nu*w)/sinh(w), stable through w = 0 (value nu there)."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _W_SERIES
    safe = np.where(small, 1.0, w)
    out = np.asarray(np.sinh(nu * safe) / np.sinh(safe), dtype=complex)
    if np.any(small):
        ws = w * w
        series = nu * (
            1.0
            + (nu * nu - 1.0) * ws / 6.0
            + (nu**4 / 120.0 - nu * nu / 36.0 + 7.0 / 360.0) * ws * ws
        )
        out = np.where(small, series, out)
    return out


def rho(u, point):
    """rho(u; z) = u^{i bk}/(u^{-2}-1) + u^{-i bk}/(u^2-1).

    Evaluated in the equivalent form -sinh((theta-1) ln u)/sinh(ln u),
    which is smooth through u = 1.  Satisfies rho(1/u; z) = rho(u; z),
    rho(u; conj z) = conj rho(u; z) and rho(1; z) = -1 - i*bk(z).
    """
    point = _as_point(point)
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or not np.all(np.isfinite(u)):
        raise DomainError("u must be positive and finite")
    w = np.log(u)
    out = -_sinh_ratio(point.theta - 1.0, w)
    return out if out.ndim else complex(out)


def rho_w(w, point):
    """rho evaluated at u = e^w; convenient on logarithmic grids."""
    point = _as_point(point)
    out = -_sinh_ratio(point.theta - 1.0, np.asarray(w, dtype=float))
    return out if out.ndim else complex(out)


def _check_resolvent_edges(point):
    if not point.is_boundary:
        return
    lam = point.value.real
    if lam > 0 and (lam < EDGE_MARGIN or lam > PI - EDGE_MARGIN):
        raise EdgeProximityError(
            f"boundary energy {lam:g} within {EDGE_MARGIN:g} of a spectral edge"
        )
    if lam < 0 and lam > -EDGE_MARGIN:
        raise EdgeProximityError(
            f"boundary energy {lam:g} within {EDGE_MARGIN:g} of the edge z = 0"
        )


def resolvent_kernel(t, s, point):
    """Kernel a(t, s; z) of A(z) in R(z) = -z^{-1}(I + A(z)).

    The delta part of the full resolvent kernel -z^{-1}(delta(t-s) + a) is
    left to the caller.  Symmetric in (t, s); for real energies in (-pi, 0)
    the value is real:  2 (pi^2-lam^2)^{-1/2} sqrt(ts)/(s^2-t^2)
    * sin(k(|lam|) ln(t/s)).
    """
    point = _as_point(point)
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s <= 0):
        raise DomainError("t and s must be positive")
    z = point.value
    if z.imag == 0.0 and z.real == -PI:
        return _kernel_minus_pi(t, s)
    _check_resolvent_edges(point)
    w = np.log(t / s)
    out = rho_w(w, point) / (point.phi * np.sqrt(t * s))
    return out if np.ndim(out) else complex(out)


def _kernel_minus_pi(t, s):
    # a(t,s;-pi) = (2/pi^2) sqrt(ts)/(s^2-t^2) ln(t/s); the generic formula
    # is 0/0 here.  Equivalent smooth form: -(w/sinh w)/(pi^2 sqrt(ts)).
    w = np.log(t / s)
    small = np.abs(w) < _W_SERIES
    safe = np.where(small, 1.0, w)
    ratio = np.where(small, 1.0 - w * w / 6.0 + 7.0 * w**4 / 360.0, safe / np.sinh(safe))
    out = -ratio / (PI * PI * np.sqrt(t * s)) + 0j
    return out if np.ndim(out) else complex(out)


def spectral_density(t, s, lam):
    """Density d e(t,s;lambda)/d lambda of the spectral family on (0, pi):

    (pi * lambda * sqrt(pi^2-lambda^2))^{-1} (ts)^{-1/2} cos(k ln(t/s)).
    """
    lam = float(lam)
    if not 0.0 < lam < PI:
        raise DomainError("energy must lie in (0, pi)")
    if lam < EDGE_MARGIN or lam > PI - EDGE_MARGIN:
        raise EdgeProximityError(
            f"energy {lam:g} within {EDGE_MARGIN:g} of a spectral edge"
        )
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s <= 0):
        raise DomainError("t and s must be positive")
    k = k_of_lambda(lam)
    out = np.cos(k * np.log(t / s)) / (
        PI * lam * math.sqrt(PI * PI - lam * lam) * np.sqrt(t * s)
    )
    return out if out.ndim else float(out)


def sigma_coefficient(n, u):
    """Expansion coefficient sigma_n(u): ln^n u for even n and
    (1+u^2)/(1-u^2) ln^n u for odd n (smooth value at u = 1)."""
    if n < 0:
        raise DomainError("order must be nonnegative")
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise DomainError("u must be positive")
    w = np.log(u)
    if n % 2 == 0:
        out = w**n
    else:
        # (1+u^2)/(1-u^2) = -coth(w); keep w*coth(w) smooth through w = 0
        small = np.abs(w) < _W_SERIES
        safe = np.where(small, 1.0, w)
        wcoth = np.where(small, 1.0 + w * w / 3.0, safe / np.tanh(safe))
        out = -wcoth * w ** (n - 1)
    return out if out.ndim else float(out)


def resonance_series(t, s, point, order):
    """Partial sum of the z -> pi expansion of a(t, s; z):

    (z^2-pi^2)^{-1/2} (ts)^{-1/2} sum_{n<=order} theta(z)^n/n! sigma_n(t/s).

    order = 0 is the pure resonance term; successive terms shrink by
    O(theta(z)) near z = pi.
    """
    point = _as_point(point)
    if not 0 <= order <= 8:
        raise DomainError("series order must lie in [0, 8]")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s <= 0):
        raise DomainError("t and s must be positive")
    u = t / s
    theta = point.theta
    total = np.zeros(np.broadcast(t, s).shape, dtype=complex)
    fact = 1.0
    for n in range(order + 1):
        if n > 0:
            fact *= n
        total = total + theta**n / fact * sigma_coefficient(n, u)
    out = total / (point.phi * np.sqrt(t * s))
    return out if out.ndim else complex(out)


def zero_energy_kernel(t, s, lam):
    """Small-|lambda| form of a(t, s; lambda) for lambda < 0:

    2 (pi^2-lam^2)^{-1/2} sqrt(ts)/(t^2-s^2) sin(pi^{-1} ln(|lam|/(2 pi)) ln(t/s)),

    accurate to O(lambda^2).  Requires t != s.
    """
    lam = float(lam)
    if not lam < 0.0:
        raise DomainError("this expansion is stated for negative energies")
    if lam <= -PI:
        raise DomainError("energy must lie in (-pi, 0)")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t <= 0) or np.any(s <= 0):
        raise DomainError("t and s must be positive")
    if np.any(t == s):
        raise DomainError("the zero-energy form requires t != s")
    w = np.log(t / s)
    phase = math.log(-lam / (2.0 * PI)) / PI
    out = (
        2.0
        / math.sqrt(PI * PI - lam * lam)
        * np.sqrt(t * s)
        / (t * t - s * s)
        * np.sin(phase * w)
    )
    return out if out.ndim else float(out)
