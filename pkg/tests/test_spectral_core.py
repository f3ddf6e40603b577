import math

import numpy as np
import pytest

from carleman_scatter import (
    EDGE_MARGIN,
    BranchCutAmbiguityError,
    DomainError,
    EdgeProximityError,
    LogGrid,
    QuasiMomentum,
    SpectralPoint,
    branch_k,
    carleman_matrix,
    free_resolvent_matrix,
    k_of_lambda,
    lambda_of_k,
    resolvent_kernel,
    resonance_series,
    rho,
    sigma_coefficient,
    spectral_density,
    zero_energy_kernel,
)

PI = math.pi

# off-cut sample points used by the symmetry tests
OFF_CUT_SAMPLES = [2 + 1j, -1.5 + 0.7j, 4.0, -2 * PI, 0.5 - 2.2j, PI + 1e-3]


class TestDispersion:
    def test_lambda_at_zero(self):
        assert lambda_of_k(0.0) == PI

    def test_lambda_at_critical_point(self):
        # sinh(pi k) = 1 makes cosh(pi k) = sqrt(2)
        k = math.log(1 + math.sqrt(2)) / PI
        assert lambda_of_k(k) == pytest.approx(PI / math.sqrt(2), abs=1e-14)

    def test_lambda_at_one(self):
        assert lambda_of_k(1.0) == pytest.approx(0.271014951399418, abs=1e-14)

    def test_monotone_decreasing(self):
        k = np.linspace(0, 5, 200)
        lam = lambda_of_k(k)
        assert np.all(np.diff(lam) < 0)

    def test_k_at_pi(self):
        assert k_of_lambda(PI) == 0.0

    def test_k_inverse_value(self):
        assert k_of_lambda(PI / math.sqrt(2)) == pytest.approx(
            math.log(1 + math.sqrt(2)) / PI, abs=1e-14
        )

    def test_round_trip(self):
        lam = np.geomspace(1e-8, PI, 200)
        assert np.max(np.abs(lambda_of_k(k_of_lambda(lam)) - lam)) < 1e-12
        k = np.linspace(0.0, 6.0, 100)
        assert np.max(np.abs(k_of_lambda(lambda_of_k(k)) - k)) < 1e-12

    def test_small_lambda_expansion(self):
        # k(lam) = -ln(lam)/pi + ln(2 pi)/pi + O(lam^2)
        errs = []
        for lam in (1e-3, 1e-4):
            approx = (-math.log(lam) + math.log(2 * PI)) / PI
            errs.append(abs(k_of_lambda(lam) - approx))
        assert errs[0] / errs[1] == pytest.approx(100.0, rel=0.05)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            lambda_of_k(-0.1)
        with pytest.raises(DomainError):
            lambda_of_k(float("nan"))
        with pytest.raises(DomainError):
            k_of_lambda(0.0)
        with pytest.raises(DomainError):
            k_of_lambda(PI + 1e-9)

    def test_quasi_momentum_round_trip(self):
        qm = QuasiMomentum.from_k(0.7)
        back = QuasiMomentum.from_energy(qm.energy)
        assert back.k == pytest.approx(0.7, abs=1e-13)


class TestBranch:
    def test_boundary_at_pi(self):
        assert branch_k(SpectralPoint.boundary(PI, "+")) == 2j

    def test_at_minus_pi(self):
        assert branch_k(SpectralPoint.off_cut(-PI)) == 1j

    def test_at_two_pi(self):
        # q(2 pi) = (1 - i sqrt(3))/2 on the unit circle, arg = 5 pi/3
        assert branch_k(2 * PI) == pytest.approx(5j / 3, abs=1e-14)

    def test_conjugation_antisymmetry(self):
        for z in OFF_CUT_SAMPLES:
            if isinstance(z, float) or z.imag == 0:
                continue
            a = branch_k(SpectralPoint.off_cut(np.conj(z)))
            b = -np.conj(branch_k(SpectralPoint.off_cut(z)))
            assert a == pytest.approx(b, abs=1e-13)

    def test_boundary_imaginary_parts(self):
        for lam in np.linspace(0.05, PI, 20):
            assert branch_k(SpectralPoint.boundary(lam, "+")).imag == pytest.approx(2.0)
        for lam in np.linspace(-PI, -0.05, 20):
            assert branch_k(SpectralPoint.boundary(lam, "+")).imag == pytest.approx(1.0)

    def test_boundary_consistent_with_limit(self):
        lam = 1.7
        target = branch_k(SpectralPoint.boundary(lam, "+"))
        approach = branch_k(SpectralPoint.off_cut(lam + 1e-9j))
        assert approach == pytest.approx(target, abs=1e-6)
        target = branch_k(SpectralPoint.boundary(lam, "-"))
        approach = branch_k(SpectralPoint.off_cut(lam - 1e-9j))
        assert approach == pytest.approx(target, abs=1e-6)

    def test_cut_without_side_is_ambiguous(self):
        with pytest.raises(BranchCutAmbiguityError):
            SpectralPoint.off_cut(1.0)
        with pytest.raises(BranchCutAmbiguityError):
            SpectralPoint.off_cut(PI)

    def test_phi_branch_signs(self):
        phi_right = SpectralPoint.off_cut(4.0).phi
        assert phi_right.imag == 0.0 and phi_right.real > 0
        phi_left = SpectralPoint.off_cut(-4.0).phi
        assert abs(phi_left.imag) < 1e-15 and phi_left.real < 0
        plus = SpectralPoint.boundary(1.0, "+").phi
        assert plus == pytest.approx(1j * math.sqrt(PI**2 - 1.0))
        minus = SpectralPoint.boundary(1.0, "-").phi
        assert minus == pytest.approx(np.conj(plus))


class TestRho:
    def test_value_at_one(self):
        for z in OFF_CUT_SAMPLES:
            point = SpectralPoint.off_cut(z)
            expected = -1.0 - 1j * point.branch_momentum
            assert rho(1.0, point) == pytest.approx(expected, abs=1e-13)

    def test_value_at_one_two_pi(self):
        assert rho(1.0, 2 * PI) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_inversion_symmetry(self):
        u = np.array([0.02, 0.3, 0.999, 1.2, 7.0, 150.0])
        for z in OFF_CUT_SAMPLES:
            a = rho(u, z)
            b = rho(1.0 / u, z)
            assert np.max(np.abs(a - b)) < 1e-12

    def test_conjugation_symmetry(self):
        u = np.array([0.1, 0.9, 3.0])
        for z in (2 + 1j, -1 + 2j, 0.3 - 0.8j):
            a = rho(u, SpectralPoint.off_cut(np.conj(z)))
            b = np.conj(rho(u, SpectralPoint.off_cut(z)))
            assert np.max(np.abs(a - b)) < 1e-12

    def test_series_matches_direct_near_one(self):
        # both sides of the series switch must agree
        point = SpectralPoint.off_cut(2 + 1j)
        lo = rho(math.exp(0.9e-3), point)
        hi = rho(math.exp(1.1e-3), point)
        mid = 0.5 * (lo + hi)
        assert rho(math.exp(1.0e-3), point) == pytest.approx(mid, abs=1e-9)

    def test_boundary_negative_energy_form(self):
        # on [-pi, 0): rho = (u^{ik} - u^{-ik})/(u^{-1} - u), k = k(|lam|)
        u, lam = 2.0, -PI / 2
        k = k_of_lambda(PI / 2)
        expected = (u**(1j * k) - u**(-1j * k)) / (1.0 / u - u)
        got = rho(u, SpectralPoint.boundary(lam, "+"))
        assert got == pytest.approx(expected, abs=1e-13)
        # cross-check against the generic form with bk = k + i
        bk = k + 1j
        generic = u ** (1j * bk) / (u**-2 - 1) + u ** (-1j * bk) / (u**2 - 1)
        assert got == pytest.approx(generic, abs=1e-13)

    def test_uniform_boundedness(self):
        u = np.geomspace(1e-6, 1e6, 4001)
        for z in OFF_CUT_SAMPLES + [SpectralPoint.boundary(1.0, "+")]:
            vals = np.abs(rho(u, z))
            assert np.all(np.isfinite(vals))
            assert vals.max() < 50.0

    def test_rejects_nonpositive_u(self):
        with pytest.raises(DomainError):
            rho(-1.0, 2 + 1j)
        with pytest.raises(DomainError):
            rho(0.0, 2 + 1j)


class TestResolventKernel:
    def test_symmetry_in_t_s(self):
        rng = np.random.default_rng(7)
        t = rng.uniform(0.1, 10, 25)
        s = rng.uniform(0.1, 10, 25)
        for z in (2 + 1j, -3.0, SpectralPoint.boundary(1.2, "+")):
            a = resolvent_kernel(t, s, z)
            b = resolvent_kernel(s, t, z)
            assert np.max(np.abs(a - b)) < 1e-13

    def test_minus_pi_closed_form(self):
        val = resolvent_kernel(2.0, 1.0, SpectralPoint.off_cut(-PI))
        expected = (2 / PI**2) * math.sqrt(2.0) / (1.0 - 4.0) * math.log(2.0)
        assert val == pytest.approx(expected, abs=1e-14)
        assert val == pytest.approx(-0.06621394358084917, abs=1e-12)

    def test_minus_pi_diagonal_limit(self):
        near = resolvent_kernel(2.0, 2.0 * (1 + 1e-9), SpectralPoint.off_cut(-PI))
        exact = resolvent_kernel(2.0, 2.0, SpectralPoint.off_cut(-PI))
        assert exact == pytest.approx(-1.0 / (PI**2 * 2.0), abs=1e-14)
        assert near == pytest.approx(exact, abs=1e-10)

    def test_real_lemma_form_on_negative_band(self):
        t, s, lam = 3.0, 0.7, -1.3
        k = k_of_lambda(abs(lam))
        expected = (
            2.0
            / math.sqrt(PI**2 - lam**2)
            * math.sqrt(t * s)
            / (s**2 - t**2)
            * math.sin(k * math.log(t / s))
        )
        got = resolvent_kernel(t, s, SpectralPoint.off_cut(lam))
        assert got.imag == 0.0
        assert got.real == pytest.approx(expected, abs=1e-13)

    def test_analytic_across_negative_band(self):
        t, s = 1.7, 0.4
        for lam in (-0.3, -1.0, -2.9):
            up = resolvent_kernel(t, s, SpectralPoint.boundary(lam, "+"))
            dn = resolvent_kernel(t, s, SpectralPoint.boundary(lam, "-"))
            assert up == pytest.approx(dn, abs=1e-13)

    def test_edge_proximity_errors(self):
        with pytest.raises(EdgeProximityError):
            resolvent_kernel(1.0, 2.0, SpectralPoint.boundary(PI - EDGE_MARGIN / 2, "+"))
        with pytest.raises(EdgeProximityError):
            resolvent_kernel(1.0, 2.0, SpectralPoint.boundary(EDGE_MARGIN / 2, "+"))
        with pytest.raises(EdgeProximityError):
            resolvent_kernel(1.0, 2.0, SpectralPoint.boundary(-EDGE_MARGIN / 2, "+"))

    def test_resolvent_identity_on_grid(self):
        # ||(C - z) R(z) f - f|| / ||f|| small, and decreasing when the
        # window grows at fixed density (truncation dominates the error)
        z = SpectralPoint.off_cut(2 + 1j)

        def residual(grid):
            C = carleman_matrix(grid)
            R = free_resolvent_matrix(z, grid)
            g = np.exp(-grid.x**2 / 2)
            Rg = R @ g
            r = C @ Rg - z.value * Rg - g
            return np.linalg.norm(r) / np.linalg.norm(g)

        r1 = residual(LogGrid(-60, 60, 512))
        r2 = residual(LogGrid(-90, 90, 768))
        assert r1 < 1e-4
        assert r2 < r1 / 4


class TestSpectralDensity:
    def test_value_at_center(self):
        assert spectral_density(1.0, 1.0, PI / 2) == pytest.approx(
            0.0744817283471448, abs=1e-13
        )

    def test_symmetry(self):
        assert spectral_density(2.0, 5.0, 1.0) == spectral_density(5.0, 2.0, 1.0)

    def test_positive_on_diagonal(self):
        t = np.geomspace(0.1, 10, 50)
        assert np.all(spectral_density(t, t, 1.5) > 0)

    def test_edge_errors(self):
        with pytest.raises(DomainError):
            spectral_density(1.0, 1.0, PI)
        with pytest.raises(EdgeProximityError):
            spectral_density(1.0, 1.0, EDGE_MARGIN / 2)

    def test_completeness_against_parseval(self):
        # <f, E(pi) f> = ||f||^2: integrate the density in lambda using the
        # substitution lambda = lambda(k); oracle is Mellin-Parseval
        grid = LogGrid(-12, 12, 384)
        # modulation concentrates the Mellin content near k = 2, clear of
        # the band edges where the density enforces the edge margin
        f = np.exp(-grid.x**2 / 4.0) * np.cos(2 * grid.x) / np.sqrt(grid.t)
        k = np.linspace(3e-4, 4.9, 1200)
        lam = lambda_of_k(k)
        dlam = np.abs(np.gradient(lam))
        tt, ss = grid.t[:, None], grid.t[None, :]
        wf = grid.weights * f
        total = 0.0
        for lam_i, w_i in zip(lam, dlam):
            dens = spectral_density(tt, ss, lam_i)
            total += w_i * float(wf @ dens @ wf)
        norm_sq = float(np.sum(grid.weights * f**2))
        assert total == pytest.approx(norm_sq, rel=2e-4)


class TestResonanceSeries:
    def test_sigma_one_at_e(self):
        assert sigma_coefficient(1, math.e) == pytest.approx(-1.3130352854993312, abs=1e-12)

    def test_sigma_limit_at_one(self):
        assert sigma_coefficient(1, 1.0) == pytest.approx(-1.0, abs=1e-9)
        assert sigma_coefficient(2, 1.0) == 0.0

    def test_order_zero_is_pure_resonance(self):
        z = SpectralPoint.off_cut(PI + 1e-3)
        t, s = 2.0, 1.0
        expected = 1.0 / (z.phi * math.sqrt(t * s))
        assert resonance_series(t, s, z, 0) == pytest.approx(expected, abs=1e-15)

    def test_converges_to_exact_kernel(self):
        z = SpectralPoint.off_cut(PI + 1e-3)
        exact = resolvent_kernel(2.0, 1.0, z)
        approx = resonance_series(2.0, 1.0, z, 3)
        assert abs(exact - approx) / abs(exact) < 1e-4

    def test_error_contracts_by_theta_per_order(self):
        z = SpectralPoint.off_cut(PI + 1e-3)
        exact = resolvent_kernel(2.0, 1.0, z)
        e2 = abs(exact - resonance_series(2.0, 1.0, z, 2))
        e3 = abs(exact - resonance_series(2.0, 1.0, z, 3))
        theta = abs(z.theta)
        # per-order contraction no worse than theta (with 50% slack); the
        # coefficient ratio sigma_4/(4 sigma_3) makes it strictly better here
        assert e3 < 1.5 * theta * e2
        assert e3 > 1e-4 * theta * e2

    def test_order_cap(self):
        with pytest.raises(DomainError):
            resonance_series(2.0, 1.0, SpectralPoint.off_cut(PI + 1e-3), 9)


class TestZeroEnergyKernel:
    def test_second_order_agreement(self):
        t, s = 2.0, 0.5
        errs = []
        for lam in (-1e-2, -1e-3):
            exact = resolvent_kernel(t, s, SpectralPoint.off_cut(lam)).real
            asym = zero_energy_kernel(t, s, lam)
            errs.append(abs(exact - asym))
        slope = math.log10(errs[0] / errs[1])
        assert slope == pytest.approx(2.0, abs=0.3)

    def test_oscillation_sign_flip(self):
        # |lam| -> |lam| e^{-pi} shifts the phase by -ln(t/s); at t/s = e^pi
        # that is a half period, so the value flips sign
        t, s = math.exp(PI), 1.0
        lam = -1e-3
        a = zero_energy_kernel(t, s, lam)
        b = zero_energy_kernel(t, s, lam * math.exp(-PI))
        assert a * b < 0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            zero_energy_kernel(2.0, 2.0, -1e-3)
        with pytest.raises(DomainError):
            zero_energy_kernel(2.0, 1.0, 1e-3)
