"""Scattering for integral-operator perturbations of the 1/(t+s) operator.

Perturbations V are either of convolution-in-(t+s) type, (Vf)(t) =
int v(t+s) f(s) ds, or general symmetric kernels v(t,s).  The continuum
eigenfunctions of H = C + V at energy lambda(k) solve the second-kind
equation

    psi_j = psi_j^0 - R0(lambda + i0) V psi_j,    psi_j^0 = t^{-1/2 +- ik},

discretized here by the Nystrom method in logarithmic coordinates.  The
2x2 scattering matrix follows from quadratures of V psi_j against the free
modes, and independently from the stationary representation
S = I - 2 pi i Gamma0 (V - V R V) Gamma0*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve, toeplitz

from .errors import (
    DomainError,
    GridSupportError,
    KernelConditionError,
    NearSingularEnergyError,
)
from .mellin import LogGrid
from .spectral_core import PI, SpectralPoint, lambda_of_k, rho_w

CONDITION_CAP = 1e10

# fraction of the window tapered (each end) when forming V psi^0, and the
# fraction used for the asymptotic end-window fits
TAPER_FRACTION = 0.05
FIT_FRACTION = 0.15

_ASYMPTOTIC_FIT_TOL = 1e-3


def log_weight(x, alpha):
    """<ln t>^alpha = (1 + x^2)^{alpha/2} evaluated at x = ln t."""
    return (1.0 + np.asarray(x, dtype=float) ** 2) ** (alpha / 2.0)


@dataclass(frozen=True)
class PerturbationKernel:
    """A symmetric perturbation: profile v(t) acting through v(t+s), or a
    general real symmetric kernel v(t, s).

    alpha is the weight exponent used by the decay diagnostics
    (finiteness of the <ln t>-weighted Hilbert-Schmidt norm).
    """

    variant: str
    profile: object = None
    kernel: object = None
    alpha: float = 2.0

    @classmethod
    def hankel(cls, profile, alpha=2.0):
        return cls(variant="hankel", profile=profile, alpha=float(alpha))

    @classmethod
    def general(cls, kernel, alpha=2.0):
        return cls(variant="general", kernel=kernel, alpha=float(alpha))

    def __post_init__(self):
        if self.variant not in ("hankel", "general"):
            raise KernelConditionError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "hankel" and self.profile is None:
            raise KernelConditionError("hankel variant needs a profile v(t)")
        if self.variant == "general" and self.kernel is None:
            raise KernelConditionError("general variant needs a kernel v(t, s)")

    def evaluate(self, t, s):
        """v(t, s) with the convolution structure expanded for hankel."""
        if self.variant == "hankel":
            return np.asarray(self.profile(np.asarray(t) + np.asarray(s)), dtype=float)
        return np.asarray(self.kernel(t, s), dtype=float)

    def hankel_weight_integral(self, alpha=None, x_lo=-60.0, x_hi=60.0, n=200_001):
        """int |v(t)|^2 <ln t>^{4 alpha} t dt (the convolution-type decay
        diagnostic), by quadrature in x = ln t."""
        if self.variant != "hankel":
            raise KernelConditionError("profile diagnostic applies to hankel kernels")
        a = self.alpha if alpha is None else float(alpha)
        x = np.linspace(x_lo, x_hi, n)
        t = np.exp(x)
        vals = np.asarray(self.profile(t), dtype=float) ** 2
        # |v(t)|^2 <ln t>^{4a} t dt = |v(e^x)|^2 (1+x^2)^{2a} e^{2x} dx
        val = float(np.trapezoid(vals * (1.0 + x * x) ** (2.0 * a) * np.exp(2.0 * x), x))
        if not math.isfinite(val):
            raise KernelConditionError("weight integral diverged")
        return val

    def weighted_hs_norm_sq(self, alpha=None, grid=None):
        """Double-integral diagnostic
        int int |v(t,s)|^2 <ln t>^{2a} <ln s>^{2a} dt ds on a log grid."""
        a = self.alpha if alpha is None else float(alpha)
        if grid is None:
            grid = LogGrid(-40.0, 40.0, 1024)
        x = grid.x
        tt = grid.t
        kern = self.evaluate(tt[:, None], tt[None, :])
        wt = (1.0 + x * x) ** a * tt  # <ln t>^{2a} weight and dt = t dx
        val = grid.h**2 * float(np.einsum("i,ij,j->", wt, kern**2, wt))
        if not math.isfinite(val):
            raise KernelConditionError("weighted Hilbert-Schmidt diagnostic diverged")
        return val


def assemble_perturbation(kernel, grid):
    """Symmetric log-coordinate Nystrom matrix of V on the grid.

    Entry (i, j) is e^{(x_i+x_j)/2} v(t_i, t_j) h; uniform log weights keep
    the matrix exactly symmetric for symmetric kernels.
    """
    t = grid.t
    x = grid.x
    kern = kernel.evaluate(t[:, None], t[None, :])
    if kernel.variant == "general":
        defect = float(np.max(np.abs(kern - kern.T)))
        scale = float(np.max(np.abs(kern))) or 1.0
        if defect > 1e-12 * scale:
            raise KernelConditionError(
                f"general kernel not symmetric: max |v(t,s)-v(s,t)| = {defect:g}"
            )
    mat = grid.h * np.exp((x[:, None] + x[None, :]) / 2.0) * kern
    return 0.5 * (mat + mat.T)


def free_resolvent_matrix(point, grid):
    """Dense matrix of R0(z) = -z^{-1}(I + A(z)) in log coordinates.

    A(z) is the convolution with rho(e^{x-y}; z)/phi(z); the matrix is
    complex symmetric (never Hermitian off the real axis).
    """
    if not isinstance(point, SpectralPoint):
        point = SpectralPoint.off_cut(point)
    col = grid.h * rho_w(grid.x - grid.x[0], point) / point.phi
    A = toeplitz(col, col)
    n = grid.n
    out = -(np.eye(n) + A) / point.value
    return out


def limiting_absorption_resolvent(lam, side, grid):
    """Boundary value R0(lambda +- i0) on the grid; the '-' side is the
    entrywise conjugate of the '+' side."""
    point = SpectralPoint.boundary(lam, side)
    return free_resolvent_matrix(point, grid)


def _taper(n, fraction=TAPER_FRACTION):
    """Smooth cosine roll-off over the outer ``fraction`` of the window."""
    m = max(2, int(fraction * n))
    w = np.ones(n)
    ramp = 0.5 * (1.0 - np.cos(PI * np.arange(m) / m))
    w[:m] = ramp
    w[-m:] = ramp[::-1]
    return w


def _condition_estimate(M):
    lu, piv = lu_factor(M)
    gecon = get_lapack_funcs("gecon", (M,))
    anorm = np.linalg.norm(M, 1)
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0.0:
        raise NearSingularEnergyError("resolvent system numerically singular")
    return (lu, piv), 1.0 / rcond


@dataclass(frozen=True)
class EigenfunctionTable:
    """Continuum eigenfunctions psi_1, psi_2 sampled on a grid at fixed k.

    family "minus" means the physical eigenfunctions psi^{(-)} obtained
    from the +i0 equation; "plus" the psi^{(+)} pair from -i0.
    """

    k: float
    grid: LogGrid
    psi1: np.ndarray
    psi2: np.ndarray
    family: str
    ls_residual: float
    h_residual: float
    condition: float
    tail_bound: float

    def log_samples(self, j):
        """sqrt(t) psi_j(t) on the grid (plane waves e^{+-ikx} plus waves)."""
        psi = self.psi1 if j == 1 else self.psi2
        return self.grid.to_log(psi)


def _interior_mask(grid, fraction=0.45):
    span = (grid.x_max - grid.x_min) / 2.0
    center = (grid.x_max + grid.x_min) / 2.0
    return np.abs(grid.x - center) <= fraction * span


def solve_lippmann_schwinger(kernel, k, grid=None, family="minus"):
    """Nystrom solve of psi_j = psi_j^0 - R0(lambda(k) +- i0) V psi_j.

    family="minus" (default) uses the +i0 boundary value and yields the
    eigenfunctions whose asymptotic coefficients are the scattering-matrix
    entries; family="plus" solves the conjugate equation.

    The system is solved for the scattered wave psi_(sc) = psi - psi^0 so
    that the free modes enter only through V psi^0, computed with a smooth
    taper at the window ends; the neglected tail of V is reported.
    """
    if grid is None:
        grid = LogGrid(-40.0, 40.0, 2048)
    k = float(k)
    if not k > 0:
        raise DomainError("quasi-momentum must be positive")
    if family not in ("minus", "plus"):
        raise DomainError("family must be 'minus' or 'plus'")
    side = "+" if family == "minus" else "-"
    lam = lambda_of_k(k)
    V = assemble_perturbation(kernel, grid)
    R0 = limiting_absorption_resolvent(lam, side, grid)

    # window-truncation diagnostic: mass of V reaching the window ends
    edge = max(2, int(0.05 * grid.n))
    row_l1 = np.abs(V).sum(axis=1)
    tail_bound = float(max(row_l1[:edge].max(), row_l1[-edge:].max()))

    x = grid.x
    taper = _taper(grid.n)
    g0 = [np.exp(1j * k * x), np.exp(-1j * k * x)]
    M = np.eye(grid.n) + R0 @ V
    factor, cond = _condition_estimate(M)
    if cond > CONDITION_CAP:
        raise NearSingularEnergyError(
            f"condition estimate {cond:.3e} above cap {CONDITION_CAP:.1e}; "
            f"lambda(k) = {lam:g} may lie in the singular set"
        )
    psis = []
    ls_res = 0.0
    for g in g0:
        source = -R0 @ (V @ (taper * g))
        g_sc = lu_solve(factor, source)
        psi = g + g_sc
        r = psi + R0 @ (V @ psi) - g
        ls_res = max(ls_res, math.sqrt(float(np.sum(np.abs(r) ** 2) * grid.h)))
        psis.append(psi)

    # eigenfunction residual (H - lambda) psi on interior nodes, with the
    # <ln t>^{-1} weight that makes psi square integrable
    from .mellin import carleman_matrix

    C = carleman_matrix(grid)
    interior = _interior_mask(grid)
    weight = 1.0 / log_weight(x, 1.0)
    h_res = 0.0
    for psi in psis:
        r = (C @ psi + V @ psi - lam * psi) * weight
        h_res = max(
            h_res, math.sqrt(float(np.sum(np.abs(r[interior]) ** 2) * grid.h))
        )

    return EigenfunctionTable(
        k=k,
        grid=grid,
        psi1=grid.from_log(psis[0]),
        psi2=grid.from_log(psis[1]),
        family=family,
        ls_residual=ls_res,
        h_residual=h_res,
        condition=cond,
        tail_bound=tail_bound,
    )


def transmission_weight(k):
    """gamma(k) = cosh^2(pi k)/(pi^2 sinh(pi k)) = 1/|lambda'(k)|."""
    k = float(k)
    if k == 0.0:
        raise DomainError("gamma(k) is singular at k = 0")
    return np.cosh(PI * k) ** 2 / (PI**2 * np.sinh(PI * k))


@dataclass(frozen=True)
class ScatteringMatrix:
    """2x2 scattering matrix at quasi-momentum k with unitarity metadata."""

    k: float
    s11: complex
    s12: complex
    s21: complex
    s22: complex
    unitarity_defect: float = field(default=float("nan"))

    @property
    def matrix(self):
        return np.array([[self.s11, self.s12], [self.s21, self.s22]])

    @classmethod
    def from_matrix(cls, k, S):
        S = np.asarray(S, dtype=complex)
        defect = float(np.linalg.norm(S.conj().T @ S - np.eye(2), 2))
        return cls(
            k=float(k),
            s11=complex(S[0, 0]),
            s12=complex(S[0, 1]),
            s21=complex(S[1, 0]),
            s22=complex(S[1, 1]),
            unitarity_defect=defect,
        )


def _free_mode_integrals(table, V=None):
    """The four quadratures int t^{-1/2 -+ ik} (V psi_j)(t) dt."""
    grid = table.grid
    if V is None:
        raise DomainError("V matrix required")
    x = grid.x
    em = np.exp(-1j * table.k * x)
    ep = np.exp(+1j * table.k * x)
    out = {}
    for j in (1, 2):
        vpsi = V @ table.log_samples(j)
        out[(j, "-")] = complex(grid.h * np.sum(em * vpsi))
        out[(j, "+")] = complex(grid.h * np.sum(ep * vpsi))
    return out


def scattering_matrix(kernel, k, grid=None, table=None):
    """S(k) from the eigenfunction quadratures

    s11 = 1 - i gamma(k) int t^{-1/2-ik} (V psi_1) dt,   etc.

    Accepts a precomputed EigenfunctionTable (family "minus") to avoid
    resolving the integral equation.
    """
    if table is None:
        table = solve_lippmann_schwinger(kernel, k, grid)
    elif table.family != "minus":
        raise DomainError("scattering entries are defined from the 'minus' family")
    grid = table.grid
    V = assemble_perturbation(kernel, grid)
    gam = transmission_weight(table.k)
    quads = _free_mode_integrals(table, V)
    S = np.array(
        [
            [1.0 - 1j * gam * quads[(1, "-")], -1j * gam * quads[(1, "+")]],
            [-1j * gam * quads[(2, "-")], 1.0 - 1j * gam * quads[(2, "+")]],
        ]
    )
    return ScatteringMatrix.from_matrix(table.k, S)


def _gamma0_rows(k, grid):
    """Gamma0(k) as a (2, n) quadrature acting on log samples."""
    gam = transmission_weight(k)
    pref = math.sqrt(gam) / math.sqrt(2.0 * PI) * grid.h
    return np.vstack([pref * np.exp(-1j * k * grid.x), pref * np.exp(+1j * k * grid.x)])


def _gamma0_star_cols(k, grid):
    """Gamma0*(k) as an (n, 2) map from C^2 to log samples."""
    gam = transmission_weight(k)
    pref = math.sqrt(gam) / math.sqrt(2.0 * PI)
    return np.column_stack([pref * np.exp(+1j * k * grid.x), pref * np.exp(-1j * k * grid.x)])


def born_scattering_matrix(kernel, k, grid=None):
    """First-order approximation S = I - 2 pi i Gamma0 V Gamma0*."""
    if grid is None:
        grid = LogGrid(-40.0, 40.0, 2048)
    V = assemble_perturbation(kernel, grid)
    G = _gamma0_rows(k, grid)
    Gs = _gamma0_star_cols(k, grid)
    S = np.eye(2) - 2j * PI * (G @ (V @ Gs))
    return ScatteringMatrix.from_matrix(k, S)


def stationary_scattering_matrix(kernel, k, grid=None):
    """S(k) = I - 2 pi i Gamma0 (V - V R(lambda+i0) V) Gamma0* with the full
    resolvent R = (I + R0 V)^{-1} R0; an independent route to the entries."""
    if grid is None:
        grid = LogGrid(-40.0, 40.0, 2048)
    lam = lambda_of_k(k)
    V = assemble_perturbation(kernel, grid)
    R0 = limiting_absorption_resolvent(lam, "+", grid)
    M = np.eye(grid.n) + R0 @ V
    factor, cond = _condition_estimate(M)
    if cond > CONDITION_CAP:
        raise NearSingularEnergyError(
            f"condition estimate {cond:.3e} above cap {CONDITION_CAP:.1e}"
        )
    G = _gamma0_rows(k, grid)
    Gs = _gamma0_star_cols(k, grid)
    R_Vgs = lu_solve(factor, R0 @ (V @ Gs))
    T = V @ Gs - V @ R_Vgs
    S = np.eye(2) - 2j * PI * (G @ T)
    return ScatteringMatrix.from_matrix(k, S)


@dataclass(frozen=True)
class AsymptoticCoefficients:
    """Least-squares coefficients of sqrt(t) psi_j against e^{+-ik ln t} on
    the end windows.  Rows index psi_1, psi_2; columns the e^{+ikx} and
    e^{-ikx} amplitudes."""

    k: float
    origin: np.ndarray
    infinity: np.ndarray
    fit_residual: float


def extract_asymptotics(table, fit_fraction=FIT_FRACTION, residual_tol=_ASYMPTOTIC_FIT_TOL):
    """Fit the free-mode amplitudes of psi_j at both window ends.

    For the "minus" family the expected pattern is
    psi_1: (s11, 0) at t -> 0 and (1, s12) at t -> inf;
    psi_2: (s21, 1) at t -> 0 and (0, s22) at t -> inf.
    """
    grid = table.grid
    m = max(8, int(fit_fraction * grid.n))
    x = grid.x
    worst = 0.0
    blocks = {}
    for end, sl in (("origin", slice(0, m)), ("infinity", slice(grid.n - m, grid.n))):
        basis = np.column_stack(
            [np.exp(1j * table.k * x[sl]), np.exp(-1j * table.k * x[sl])]
        )
        rows = []
        for j in (1, 2):
            g = table.log_samples(j)[sl]
            coef, *_ = np.linalg.lstsq(basis, g, rcond=None)
            resid = float(np.linalg.norm(basis @ coef - g) / math.sqrt(m))
            worst = max(worst, resid)
            rows.append(coef)
        blocks[end] = np.vstack(rows)
    if worst > residual_tol:
        raise GridSupportError(
            f"end-window fit residual {worst:.3e} above {residual_tol:g}; "
            "widen the grid window"
        )
    return AsymptoticCoefficients(
        k=table.k, origin=blocks["origin"], infinity=blocks["infinity"], fit_residual=worst
    )
