"""Eigenvalues of H = C + V above the continuous spectrum [0, pi].

For V >= 0 compact, the number of eigenvalues of H above lambda > pi equals
the number of eigenvalues of B(lambda) = V^{1/2}(lambda - C)^{-1} V^{1/2}
above 1.  Near the band edge the resolvent's (lambda^2-pi^2)^{-1/2}
singularity is carried by the rank-one piece built on the threshold state
t^{-1/2}, which this module splits out analytically:

    B(lambda) = (lambda sqrt(lambda^2-pi^2))^{-1} (., w) w + B~(lambda),
    w = V^{1/2} t^{-1/2},

with B~ convergent as lambda -> pi.  The explicit eigenvalue bound is

    N <= pi^{-2} (||V||_HS + gamma_alpha ||Q^a V Q^a||)^2 + 1,

with gamma_alpha a universal double quadrature over the limiting kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, GridSupportError, KernelConditionError
from .mellin import LogGrid, carleman_matrix
from .scattering import assemble_perturbation, log_weight
from .spectral_core import PI, sigma_coefficient

_W_SERIES = 1e-3
_PSD_TOL_FACTOR = 1e-10

# lambda - pi below which birman_schwinger_matrix switches to the split form
SPLIT_MARGIN = 0.5


def default_count_grid():
    return LogGrid(-60.0, 60.0, 1024)


def theta_above_band(lam):
    """theta(lambda) = pi^{-1} arctan(pi^{-1} sqrt(lambda^2-pi^2)) in [0, 1/2)."""
    lam = float(lam)
    if lam < PI:
        raise DomainError("energy must be >= pi")
    return math.atan(math.sqrt(lam * lam - PI * PI) / PI) / PI


def _rho_real_w(w, lam):
    # rho(e^w; lambda) for lambda > pi is real: -sinh((th-1)w)/sinh(w)
    th = theta_above_band(lam)
    nu = th - 1.0
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _W_SERIES
    safe = np.where(small, 1.0, w)
    out = -np.sinh(nu * safe) / np.sinh(safe)
    series = -nu * (1.0 + (nu * nu - 1.0) * w * w / 6.0)
    return np.where(small, series, out)


def _rho_tilde_scaled_w(w, lam):
    """(rho(e^w; lambda) - 1)/sqrt(lambda^2 - pi^2), stable down to the edge.

    Product form: rho - 1 = -2 sinh(th w/2) cosh((th-2) w/2)/sinh(w); the
    lambda -> pi limit is pi^{-2} sigma_1(e^w).
    """
    th = theta_above_band(lam)
    sq = math.sqrt(lam * lam - PI * PI)
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _W_SERIES
    safe = np.where(small, 1.0, w)
    if sq == 0.0:
        return sigma_coefficient(1, np.exp(w)) / PI**2
    val = -2.0 * np.sinh(th * safe / 2.0) * np.cosh((th - 2.0) * safe / 2.0) / np.sinh(safe) / sq
    series = -(th / sq) * (
        1.0 + w * w * (th * th / 24.0 + (th - 2.0) ** 2 / 8.0 - 1.0 / 6.0)
    )
    return np.where(small, series, val)


def limiting_kernel_matrix(grid):
    """Matrix of the lambda -> pi limit kernel pi^{-2} (ts)^{-1/2} sigma_1(t/s)."""
    col = sigma_coefficient(1, np.exp(grid.x - grid.x[0])) / PI**2
    return toeplitz(grid.h * col)


def edge_kernel_matrix(lam, grid):
    """Matrix of the regularized kernel (ts)^{-1/2} (rho - 1)/sqrt(lambda^2-pi^2)."""
    col = _rho_tilde_scaled_w(grid.x - grid.x[0], lam)
    return toeplitz(grid.h * col)


def resolvent_band_matrix(lam, grid):
    """Matrix of A(lambda) for real lambda > pi (whole form, no split)."""
    sq = math.sqrt(lam * lam - PI * PI)
    col = grid.h * _rho_real_w(grid.x - grid.x[0], lam) / sq
    return toeplitz(col)


def operator_sqrt_psd(V, tol_factor=_PSD_TOL_FACTOR):
    """Symmetric square root of a positive semidefinite Nystrom matrix.

    Eigenvalues in [-tol, 0) are clipped to zero (discretization noise);
    anything more negative raises, since the counting theory needs V >= 0.
    """
    V = 0.5 * (V + V.T)
    evals, vecs = np.linalg.eigh(V)
    scale = float(np.max(np.abs(evals))) or 1.0
    tol = tol_factor * scale
    if evals[0] < -tol:
        raise KernelConditionError(
            f"perturbation matrix indefinite: min eigenvalue {evals[0]:.3e} "
            f"below -{tol:.3e}"
        )
    np.clip(evals, 0.0, None, out=evals)
    return (vecs * np.sqrt(evals)) @ vecs.T


def positive_part(V):
    """V_+ = (V + |V|)/2 of a symmetric Nystrom matrix."""
    V = 0.5 * (V + V.T)
    evals, vecs = np.linalg.eigh(V)
    return (vecs * np.clip(evals, 0.0, None)) @ vecs.T


def birman_schwinger_matrix(kernel, lam, grid=None, split=None):
    """Symmetric matrix of B(lambda) = lambda^{-1}(V + V^{1/2} A(lambda) V^{1/2}).

    With split=True (default close to the band edge) the rank-one
    resonance term is added analytically instead of through the singular
    part of A(lambda).
    """
    lam = float(lam)
    if not lam > PI:
        raise DomainError("counting energy must exceed pi")
    if grid is None:
        grid = default_count_grid()
    if split is None:
        split = (lam - PI) < SPLIT_MARGIN
    V = assemble_perturbation(kernel, grid)
    Vh = operator_sqrt_psd(V)
    if split:
        At = edge_kernel_matrix(lam, grid)
        core = (V + Vh @ At @ Vh) / lam
        w = Vh @ np.ones(grid.n)  # threshold state t^{-1/2} is 1 in log rep
        rank_one = grid.h * np.outer(w, w) / (lam * math.sqrt(lam * lam - PI * PI))
        B = core + rank_one
    else:
        A = resolvent_band_matrix(lam, grid)
        B = (V + Vh @ A @ Vh) / lam
    return 0.5 * (B + B.T)


def birman_schwinger_count(kernel, lam, grid=None, split=None):
    """Number of eigenvalues of B(lambda) exceeding 1."""
    B = birman_schwinger_matrix(kernel, lam, grid, split)
    return int(np.sum(np.linalg.eigvalsh(B) > 1.0))


def dense_hamiltonian(kernel, grid=None):
    """Dense symmetric log-coordinate matrix of H = C + V."""
    if grid is None:
        grid = default_count_grid()
    return carleman_matrix(grid) + assemble_perturbation(kernel, grid)


def hamiltonian_spectrum(kernel, grid=None):
    """Eigenvalues of the dense discretization of H, ascending."""
    return np.linalg.eigvalsh(dense_hamiltonian(kernel, grid))


def count_direct(kernel, threshold, grid=None, check_support=True):
    """Brute-force count of eigenvalues of discretized H above ``threshold``.

    With check_support=True the eigenvectors above the threshold are
    required to carry negligible mass on the outer 10% of the window;
    boundary-supported modes indicate an under-sized grid.
    """
    if grid is None:
        grid = default_count_grid()
    threshold = float(threshold)
    H = dense_hamiltonian(kernel, grid)
    if not check_support:
        return int(np.sum(np.linalg.eigvalsh(H) > threshold))
    evals, vecs = np.linalg.eigh(H)
    above = evals > threshold
    count = int(np.sum(above))
    if count:
        edge = max(2, int(0.1 * grid.n))
        for idx in np.nonzero(above)[0]:
            v = vecs[:, idx]
            mass = float(np.sum(v[:edge] ** 2) + np.sum(v[-edge:] ** 2))
            if mass > 1e-6:
                raise GridSupportError(
                    f"eigenvector at {evals[idx]:.6f} carries boundary mass "
                    f"{mass:.2e}; enlarge the window"
                )
    return count


def certified_counts(kernel, thresholds, grid=None):
    """count_direct at several thresholds with the convergence certificate:
    every count must agree at (n, 2n) points and two window widths.

    The four spectra are computed once and shared across thresholds.
    """
    if grid is None:
        grid = default_count_grid()
    thresholds = [float(th) for th in thresholds]
    stretch = 1.25
    grids = [
        grid,
        LogGrid(grid.x_min, grid.x_max, 2 * grid.n),
        LogGrid(stretch * grid.x_min, stretch * grid.x_max, grid.n),
        LogGrid(stretch * grid.x_min, stretch * grid.x_max, 2 * grid.n),
    ]
    spectra = [hamiltonian_spectrum(kernel, g) for g in grids]
    out = []
    for th in thresholds:
        counts = [int(np.sum(ev > th)) for ev in spectra]
        if len(set(counts)) != 1:
            raise GridSupportError(
                f"eigenvalue count at {th:.6g} not converged across grids: {counts}"
            )
        out.append(counts[0])
    # boundary-support check on the base grid only (needs eigenvectors)
    for th in sorted(set(thresholds)):
        count_direct(kernel, th, grid)
        break
    return out


def certified_count(kernel, threshold, grid=None):
    """Single-threshold convenience wrapper around :func:`certified_counts`."""
    return certified_counts(kernel, [threshold], grid)[0]


def _sigma1_sq_log(w):
    s = sigma_coefficient(1, np.exp(w))
    return s * s


def gamma_alpha_with_error(alpha, m=800):
    """The weight constant gamma_alpha and a Richardson error estimate.

    gamma_alpha^2 = pi^{-4} int int <x>^{-2a} sigma_1(e^{x-y})^2 <y>^{-2a}
    dx dy, computed by the midpoint rule under x = tan(phi), y = tan(psi)
    (the algebraic tails make a direct window quadrature converge only
    like 1/X, so the compactifying map is used instead).
    """
    alpha = float(alpha)
    if not alpha > 1.5:
        raise DomainError("the double integral diverges for alpha <= 3/2")

    def value(mm):
        phi = (np.arange(mm) + 0.5) / mm * PI - PI / 2.0
        xv = np.tan(phi)
        jac = 1.0 / np.cos(phi) ** 2
        wv = (1.0 + xv * xv) ** (-alpha) * jac
        ker = _sigma1_sq_log(xv[:, None] - xv[None, :])
        return (PI / mm) ** 2 * float(np.einsum("i,ij,j->", wv, ker, wv)) / PI**4

    coarse = value(m)
    fine = value(2 * m)
    extrap = fine + (fine - coarse) / 3.0
    err = abs(fine - coarse) / 3.0
    if extrap <= 0 or not math.isfinite(extrap):
        raise KernelConditionError("gamma_alpha quadrature failed to converge")
    return math.sqrt(extrap), err / (2.0 * math.sqrt(extrap))


def gamma_alpha(alpha, m=800):
    """gamma_alpha as a float; see :func:`gamma_alpha_with_error`."""
    return gamma_alpha_with_error(alpha, m)[0]


def weighted_operator_norm(kernel, alpha, grid=None):
    """||Q^a V Q^a||: largest |eigenvalue| of the <ln t>^a-weighted matrix."""
    if grid is None:
        grid = default_count_grid()
    V = assemble_perturbation(kernel, grid)
    d = log_weight(grid.x, float(alpha))
    W = d[:, None] * V * d[None, :]
    edge = max(2, int(0.05 * grid.n))
    row = np.abs(W).sum(axis=1)
    interior_scale = float(row.max()) or 1.0
    if max(row[:edge].max(), row[-edge:].max()) > 1e-8 * interior_scale:
        raise KernelConditionError(
            "weighted kernel does not decay inside the window; the weighted "
            "norm is not trustworthy (condition violated or window too small)"
        )
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (W + W.T)))))


def hilbert_schmidt_norm(kernel, grid=None, positive=False):
    """||V||_HS; equals the Frobenius norm of the log-coordinate matrix."""
    if grid is None:
        grid = default_count_grid()
    V = assemble_perturbation(kernel, grid)
    if positive:
        V = positive_part(V)
    return float(np.linalg.norm(V, "fro"))


def eigenvalue_bound(kernel, alpha=2.0, grid=None):
    """Explicit bound pi^{-2}(||V||_HS + gamma_a ||Q^a V Q^a||)^2 + 1 on the
    number of eigenvalues of H above pi.  Indefinite V is replaced by its
    positive part V_+, which can only increase the bound."""
    if grid is None:
        grid = default_count_grid()
    V = assemble_perturbation(kernel, grid)
    Vp = positive_part(V)
    hs = float(np.linalg.norm(Vp, "fro"))
    d = log_weight(grid.x, float(alpha))
    W = d[:, None] * Vp * d[None, :]
    edge = max(2, int(0.05 * grid.n))
    row = np.abs(W).sum(axis=1)
    if max(row[:edge].max(), row[-edge:].max()) > 1e-8 * (float(row.max()) or 1.0):
        raise KernelConditionError(
            "weighted kernel does not decay inside the window; bound not valid"
        )
    op = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (W + W.T)))))
    g = gamma_alpha(alpha)
    return (hs + g * op) ** 2 / PI**2 + 1.0


def resonance_weight(kernel, grid=None, route="auto"):
    """||w||^2 = (V t^{-1/2}, t^{-1/2}) = int int v(t,s) (ts)^{-1/2} dt ds.

    For convolution-type kernels this equals pi int_0^inf v(t) dt; route
    "auto" uses the one-dimensional form when available, "double" forces
    the double quadrature (the two agree to quadrature tolerance).
    """
    if grid is None:
        grid = LogGrid(-40.0, 40.0, 2048)
    if route not in ("auto", "single", "double"):
        raise DomainError(f"unknown route {route!r}")
    V = assemble_perturbation(kernel, grid)
    double_route = float(np.sum(V) * grid.h)
    wide = LogGrid(1.2 * grid.x_min, 1.2 * grid.x_max, grid.n)
    double_wide = float(np.sum(assemble_perturbation(kernel, wide)) * wide.h)
    if not math.isfinite(double_route) or abs(double_wide - double_route) > 1e-6 * (
        1.0 + abs(double_route)
    ):
        raise KernelConditionError(
            "resonance-weight integral not converged on the window "
            f"({double_route:.6e} vs {double_wide:.6e} on the widened window)"
        )
    if route == "double":
        return double_route
    if kernel.variant == "hankel":
        x = np.linspace(wide.x_min, wide.x_max, 200_001)
        return PI * float(
            np.trapezoid(np.asarray(kernel.profile(np.exp(x)), dtype=float) * np.exp(x), x)
        )
    if route == "single":
        raise KernelConditionError("single-integral route needs a hankel kernel")
    return double_route


@dataclass(frozen=True)
class BirmanSchwingerReport:
    """Counting summary at one energy: both counts, the explicit bound,
    and the resonance weight."""

    lam: float
    count_bs: int
    count_direct: int
    bound: float
    w_norm_sq: float


def birman_schwinger_report(kernel, lam, grid=None, alpha=2.0):
    if grid is None:
        grid = default_count_grid()
    return BirmanSchwingerReport(
        lam=float(lam),
        count_bs=birman_schwinger_count(kernel, lam, grid),
        count_direct=count_direct(kernel, lam, grid),
        bound=eigenvalue_bound(kernel, alpha, grid),
        w_norm_sq=resonance_weight(kernel),
    )


def limit_kernel_deviation(lam, alpha, grid=None):
    """Weighted Hilbert-Schmidt distance between the edge-regularized kernel
    at lambda and its lambda -> pi limit; decreases as lambda -> pi."""
    if grid is None:
        grid = LogGrid(-40.0, 40.0, 1024)
    diff = edge_kernel_matrix(lam, grid) - limiting_kernel_matrix(grid)
    d = 1.0 / log_weight(grid.x, float(alpha))
    return float(np.linalg.norm(d[:, None] * diff * d[None, :], "fro"))
