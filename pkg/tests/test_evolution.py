import math

import numpy as np
import pytest

from carleman_scatter import (
    CoalescenceError,
    DomainError,
    GridSupportError,
    K_CRITICAL,
    LogGrid,
    MellinSpectrum,
    compact_bump,
    lambda_double_prime,
    lambda_of_k,
    lambda_prime,
    mellin_inverse,
    propagate_exact,
    propagate_stationary_phase,
    stationary_points,
)
from carleman_scatter.evolution import (
    branch_cross_term,
    branch_norm_sq,
    check_spectrum_support,
    sinc_interpolate,
    window_mass,
)

PI = math.pi


def two_lobe_spectrum(grid):
    """Smooth spectrum with one lobe on each side of k0, clear of the
    guard bands."""
    vals = compact_bump(grid.k, 0.16, 0.23) + compact_bump(grid.k, 0.34, 0.52)
    return MellinSpectrum(grid=grid, values=vals + 0j)


def quadrature_propagation(spectrum_fn, k_lo, k_hi, x, T, n_k=20001):
    """Exact evolution by direct quadrature of the oscillatory Mellin
    integral, in log representation: (2 pi)^{-1/2} int e^{i(kx - lambda(k)T)}
    f~(k) dk over the compact spectral support."""
    kq = np.linspace(k_lo, k_hi, n_k)
    fk = spectrum_fn(kq)
    phases = np.exp(1j * (np.outer(x, kq) - lambda_of_k(kq) * T))
    return (phases @ fk) * (kq[1] - kq[0]) / math.sqrt(2 * PI)


@pytest.fixture(scope="module")
def long_grid():
    return LogGrid(-200.0, 200.0, 8192)


class TestGroupVelocity:
    def test_zero_at_origin(self):
        assert lambda_prime(0.0) == 0.0

    def test_minimum_at_critical_point(self):
        assert lambda_prime(K_CRITICAL) == pytest.approx(-PI**2 / 2, abs=1e-13)

    def test_odd(self):
        k = np.linspace(0.1, 3, 17)
        assert np.max(np.abs(lambda_prime(k) + lambda_prime(-k))) < 1e-14

    def test_finite_differences(self):
        rng = np.random.default_rng(11)
        step = 1e-5
        for k in rng.uniform(0.05, 3.0, 10):
            fd = (lambda_of_k(k + step) - lambda_of_k(k - step)) / (2 * step)
            assert abs(lambda_prime(k) - fd) / abs(fd) < 1e-6

    def test_curvature_sign_change(self):
        assert lambda_double_prime(0.5 * K_CRITICAL) < 0
        assert lambda_double_prime(2.0 * K_CRITICAL) > 0
        assert abs(lambda_double_prime(K_CRITICAL)) < 1e-12


class TestStationaryPoints:
    def test_reference_point(self):
        sp = stationary_points(0.6)
        assert sp.sigma1 == pytest.approx(0.2, abs=1e-14)
        assert sp.sigma2 == pytest.approx(1.8, abs=1e-14)
        # sinh(pi k_1) = sigma_1/tau = 1/3; the closed form and the asinh
        # route are the same expression
        assert math.sinh(PI * sp.k1) == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert sp.k1 == pytest.approx(math.log((1 + math.sqrt(10)) / 3) / PI, abs=1e-13)
        assert (0.2 + math.sqrt(0.4)) / 0.6 == pytest.approx((1 + math.sqrt(10)) / 3, abs=1e-13)

    def test_invariants_on_dense_sample(self):
        for tau in np.linspace(-0.97, 0.97, 41):
            if abs(tau) < 0.03:
                continue
            sp = stationary_points(tau)
            assert math.sinh(PI * sp.k1) == pytest.approx(sp.sigma1 / tau, rel=1e-10)
            assert math.sinh(PI * sp.k2) == pytest.approx(sp.sigma2 / tau, rel=1e-10)
            assert lambda_prime(sp.k1) + PI**2 * tau / 2 == pytest.approx(0.0, abs=1e-10)
            assert lambda_prime(sp.k2) + PI**2 * tau / 2 == pytest.approx(0.0, abs=1e-10)
            assert sp.lambda1 == pytest.approx(lambda_of_k(abs(sp.k1)), rel=1e-12)
            assert sp.lambda2 == pytest.approx(lambda_of_k(abs(sp.k2)), rel=1e-12)
            assert sp.lpp1 == pytest.approx(lambda_double_prime(sp.k1), rel=1e-9)
            assert sp.lpp2 == pytest.approx(lambda_double_prime(sp.k2), rel=1e-9)

    def test_curvature_signs(self):
        for tau in (0.1, 0.5, 0.9):
            sp = stationary_points(tau)
            assert sp.lpp1 < 0 < sp.lpp2

    def test_reflection(self):
        a, b = stationary_points(0.4), stationary_points(-0.4)
        assert a.k1 == pytest.approx(-b.k1)
        assert a.k2 == pytest.approx(-b.k2)

    def test_merge_toward_critical_point(self):
        gaps = []
        for tau in (0.90, 0.95, 0.98):
            sp = stationary_points(tau)
            gaps.append(sp.k2 - sp.k1)
            assert sp.k1 < K_CRITICAL < sp.k2
        assert gaps[0] > gaps[1] > gaps[2]

    def test_guard_bands(self):
        with pytest.raises(DomainError):
            stationary_points(1.2)
        with pytest.raises(CoalescenceError):
            stationary_points(0.005)
        with pytest.raises(CoalescenceError):
            stationary_points(0.999)


class TestExactPropagation:
    def test_zero_time_is_identity(self):
        grid = LogGrid(-40.0, 40.0, 1024)
        f = grid.from_log(np.exp(-grid.x**2 / 2) + 0j)
        out = propagate_exact(f, grid, 0.0)
        assert grid.norm(out - f) < 1e-12 * grid.norm(f)

    def test_norm_preserved(self):
        # the window needs slack beyond the transport cone: the evolved
        # tail decays fast but not abruptly past pi^2 |T|/2
        grid = LogGrid(-70.0, 70.0, 1792)
        f = grid.from_log(np.exp(-grid.x**2 / 2) + 0j)
        out = propagate_exact(f, grid, 5.0)
        assert grid.norm(out) == pytest.approx(grid.norm(f), rel=1e-8)

    def test_group_property(self):
        grid = LogGrid(-90.0, 90.0, 2304)
        f = grid.from_log(np.exp(-grid.x**2 / 2) + 0j)
        once = propagate_exact(f, grid, 5.0)
        twice = propagate_exact(propagate_exact(f, grid, 2.0), grid, 3.0)
        assert grid.norm(once - twice) < 1e-8 * grid.norm(f)

    def test_spill_detection(self):
        grid = LogGrid(-40.0, 40.0, 1024)
        f = grid.from_log(np.exp(-grid.x**2 / 2) + 0j)
        with pytest.raises(GridSupportError):
            propagate_exact(f, grid, 20.0)

    def test_matches_quadrature_oracle(self):
        # a Gaussian spectral window has Gaussian conjugate decay, so the
        # grid route and the direct oscillatory quadrature agree tightly
        grid = LogGrid(-200.0, 200.0, 8192)
        window = lambda k: np.exp(-((k - 0.65) ** 2) / (2 * 0.04**2))
        spec = MellinSpectrum(grid=grid, values=window(grid.k) + 0j)
        f0 = mellin_inverse(spec)
        T = 8.0
        out = propagate_exact(f0, grid, T)
        pick = np.nonzero(np.abs(grid.x) < 30.0)[0][::61]
        oracle = quadrature_propagation(window, 0.3, 1.0, grid.x[pick], T)
        got = grid.to_log(out)[pick]
        assert np.max(np.abs(got - oracle)) < 1e-8


class TestStationaryPhase:
    def test_support_guard(self, long_grid):
        bad = MellinSpectrum(
            grid=long_grid,
            values=compact_bump(long_grid.k, K_CRITICAL - 0.05, K_CRITICAL + 0.05) + 0j,
        )
        with pytest.raises(DomainError):
            check_spectrum_support(bad)

    def test_minimum_time(self, long_grid):
        spec = two_lobe_spectrum(long_grid)
        with pytest.raises(DomainError):
            propagate_stationary_phase(spec, 1.0, [1.5])

    def test_zero_outside_window(self, long_grid):
        spec = two_lobe_spectrum(long_grid)
        T = 20.0
        t_out = math.exp(PI**2 * T / 2 * 1.05)
        res = propagate_stationary_phase(spec, T, [t_out, 1.0 / t_out])
        assert np.all(res.values == 0)
        assert np.all(res.reliable)

    def test_sinc_interpolation_exactness(self, long_grid):
        spec = two_lobe_spectrum(long_grid)
        # on-grid targets reproduce samples; midpoints stay smooth
        vals = sinc_interpolate(spec, spec.k[4000:4010])
        assert np.max(np.abs(vals - spec.values[4000:4010])) < 1e-12

    def test_matches_exact_evolution(self, long_grid):
        # single lobe on the tau-safe part of the fast branch; the exact
        # reference is the direct quadrature of the oscillatory integral
        spec = MellinSpectrum(
            grid=long_grid, values=compact_bump(long_grid.k, 0.47, 0.84) + 0j
        )
        T = 30.0
        xs = np.linspace(-0.95 * PI**2 * T / 2, -2.0, 211)
        oracle = quadrature_propagation(
            lambda k: compact_bump(k, 0.47, 0.84), 0.4, 0.9, xs, T
        )
        res = propagate_stationary_phase(spec, T, np.exp(xs))
        got = res.values * np.exp(xs / 2)  # back to log representation
        scale = np.max(np.abs(oracle))
        err = np.max(np.abs(got - oracle))
        assert err < 0.5 * scale
        assert err > 0  # nontrivial comparison

    def test_norm_partition(self, long_grid):
        spec = two_lobe_spectrum(long_grid)
        total = spec.norm() ** 2
        parts = []
        for j in (1, 2):
            t_side = branch_norm_sq(spec, j)
            k_side = window_mass(spec, j)
            assert t_side == pytest.approx(k_side, abs=1e-4 * total)
            parts.append(t_side)
        assert parts[0] + parts[1] == pytest.approx(total, abs=1e-4 * total)

    def test_cross_term_decay(self, long_grid):
        spec = two_lobe_spectrum(long_grid)
        early = abs(branch_cross_term(spec, 20.0).real)
        late = abs(branch_cross_term(spec, 80.0).real)
        assert late < 0.5 * early
