import math

import numpy as np
import pytest
from scipy.integrate import quad

from qopt.gaussian import photon_pnd, to_qrep
from qopt.hermite import fock_wavefunction_eval
from qopt.parametric import (closed_form_epsilon, expression_profile,
                             packet_wavefunction_eval, parametric_cat_wavefunction,
                             preset_profile, profile_from_dict, solve_epsilon,
                             squeezed_number_wavefunction, squeezed_vacuum_pnd,
                             squeezing_coefficient, tabulated_profile, to_gaussian_state,
                             variances_correlation)


def make_traj(preset="free", t_end=5.0, tol=1e-10):
    return solve_epsilon(preset_profile(preset), t_end, tol)


def complex_l2_norm(f, lo=-30.0, hi=30.0, n=120001):
    xs = np.linspace(lo, hi, n)
    return np.trapezoid(np.abs(f(xs)) ** 2, xs)


class TestSolveEpsilon:
    @pytest.mark.parametrize("preset", ["free", "oscillator", "repulsive"])
    def test_presets_evaluate_closed_forms(self, preset):
        t_end = 10.0 if preset != "repulsive" else 6.0
        traj = solve_epsilon(preset_profile(preset), t_end, tol=1e-11)
        for t in np.linspace(0, t_end, 41):
            eps, _ = traj.at(t)
            assert abs(eps - closed_form_epsilon(preset, t)) < 1e-9 * max(1.0, abs(eps))

    @pytest.mark.parametrize("expr,preset", [("0", "free"), ("1", "oscillator"),
                                             ("-1", "repulsive")])
    def test_integrator_reproduces_closed_forms(self, expr, preset):
        # constant expression profiles force the ODE path onto the same systems
        t_end = 10.0 if preset != "repulsive" else 6.0
        traj = solve_epsilon(expression_profile(expr), t_end, tol=1e-11)
        for t in np.linspace(0, t_end, 41):
            eps, _ = traj.at(t)
            want = closed_form_epsilon(preset, t)
            assert abs(eps - want) < 1e-8 * max(1.0, abs(want))

    def test_initial_data(self):
        traj = make_traj()
        eps, epsdot = traj.at(0.0)
        assert eps == pytest.approx(1.0, abs=1e-14)
        assert epsdot == pytest.approx(1j, abs=1e-14)

    def test_wronskian_conserved(self):
        tol = 1e-9
        for profile in [preset_profile("free"), preset_profile("oscillator"),
                        tabulated_profile([[0, 1.0], [5, 0.5], [10, 1.4], [20, 0.9]]),
                        expression_profile("1 + 0.3*sin(2*t)")]:
            traj = solve_epsilon(profile, 20.0, tol)
            assert traj.wronskian_defect < 100 * tol

    def test_wronskian_conserved_repulsive(self):
        # the conserved combination cancels e^{2t}-sized terms, so float64 can
        # only witness conservation while e^{2t} * eps_machine stays small
        tol = 1e-9
        traj = solve_epsilon(preset_profile("repulsive"), 8.0, tol)
        assert traj.wronskian_defect < 100 * tol

    def test_out_of_range_rejected(self):
        traj = make_traj(t_end=2.0)
        with pytest.raises(ValueError):
            traj.at(3.0)

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            solve_epsilon(preset_profile("free"), 1.0, tol=0.0)
        with pytest.raises(ValueError):
            solve_epsilon(preset_profile("free"), -1.0)
        with pytest.raises(ValueError):
            preset_profile("quartic")

    def test_phase_tracking_winds(self):
        traj = make_traj("oscillator", t_end=13.0, tol=1e-11)
        # eps = e^{it}: phase should reach 4 turns without wrapping
        assert traj.phase_at(4 * math.pi) == pytest.approx(4 * math.pi, abs=1e-8)
        assert traj.sqrt_inv_eps(4 * math.pi) == pytest.approx(
            np.exp(-2j * math.pi), abs=1e-8)


class TestProfiles:
    def test_expression_profile(self):
        prof = expression_profile("1 + 0.5*cos(t)")
        assert prof(0.0) == pytest.approx(1.5)
        assert prof(math.pi) == pytest.approx(0.5)

    def test_expression_rejects_unknown_names(self):
        with pytest.raises(ValueError):
            expression_profile("outside(t)")

    def test_table_interpolates(self):
        prof = tabulated_profile([[0, 0.0], [2, 4.0]])
        assert prof(1.0) == pytest.approx(2.0)

    def test_table_rejects_decreasing_times(self):
        with pytest.raises(ValueError):
            tabulated_profile([[0, 1.0], [0, 2.0]])

    def test_from_dict(self):
        assert profile_from_dict({"preset": "free"}).kind == "preset_free"
        assert profile_from_dict({"table": [[0, 1], [1, 2]]}).kind == "tabulated"
        assert profile_from_dict({"expression": "t*t"}).kind == "expression"
        with pytest.raises(ValueError):
            profile_from_dict({})


class TestVariances:
    def test_initial_point(self):
        sx, sp, r = variances_correlation(make_traj(), 0.0)
        assert (sx, sp, r) == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)

    def test_stationary_oscillator_stays_minimal(self):
        traj = make_traj("oscillator")
        for t in [0.5, 2.0, 4.5]:
            sx, sp, r = variances_correlation(traj, t)
            assert sx == pytest.approx(0.5, abs=1e-9)
            assert sp == pytest.approx(0.5, abs=1e-9)
            assert abs(r) < 1e-4

    def test_free_motion_correlates(self):
        sx, sp, r = variances_correlation(make_traj("free"), 1.0)
        assert sx == pytest.approx(1.0, abs=1e-9)
        assert sp == pytest.approx(0.5, abs=1e-9)
        assert r == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_uncertainty_saturation(self):
        traj = solve_epsilon(expression_profile("1 + 0.4*sin(3*t)"), 12.0, 1e-10)
        for t in np.linspace(0.3, 12.0, 15):
            sx, sp, r = variances_correlation(traj, t)
            assert sx * sp * (1 - r * r) == pytest.approx(0.25, abs=1e-7)


class TestSqueezedVacuumPnd:
    def test_initial_vacuum(self):
        traj = make_traj()
        assert squeezed_vacuum_pnd(traj, 0.0, 0) == pytest.approx(1.0, abs=1e-10)
        for n in range(1, 6):
            assert squeezed_vacuum_pnd(traj, 0.0, n) == pytest.approx(0.0, abs=1e-10)

    def test_odd_terms_vanish_exactly(self):
        traj = make_traj("repulsive", t_end=3.0)
        for m in range(10):
            assert squeezed_vacuum_pnd(traj, 2.0, 2 * m + 1) == 0.0

    def test_fock_overlap_oracle(self):
        # W(n) = |int Psi_0*(x, t) psi_n(x) dx|^2 by direct quadrature
        traj = make_traj("repulsive", t_end=2.0, tol=1e-11)
        t = 1.2
        for n in [0, 2, 4, 6]:
            def integrand_re(x, n=n):
                val = np.conj(packet_wavefunction_eval(traj, t, 0.0, x)) \
                    * fock_wavefunction_eval(n, x)
                return val.real

            def integrand_im(x, n=n):
                val = np.conj(packet_wavefunction_eval(traj, t, 0.0, x)) \
                    * fock_wavefunction_eval(n, x)
                return val.imag

            re, _ = quad(integrand_re, -20, 20, limit=400, epsabs=1e-12)
            im, _ = quad(integrand_im, -20, 20, limit=400, epsabs=1e-12)
            want = re * re + im * im
            assert squeezed_vacuum_pnd(traj, t, n) == pytest.approx(want, abs=1e-9)

    def test_zero_correlation_squeeze_values(self):
        # engineered trajectory with |eps| = e^{-r}, |epsdot| = e^{r}, no correlation
        r = 1.0
        traj = make_traj("free", t_end=1.0)
        eps, epsdot = math.exp(-r), 1j * math.exp(r)
        w = eps * np.conj(epsdot) - np.conj(eps) * epsdot
        assert w == pytest.approx(-2j)
        mu = (np.conj(eps) - 1j * np.conj(epsdot)) / (2 * (np.conj(eps) + 1j * np.conj(epsdot)))
        w0 = 2.0 / math.sqrt(abs(eps) ** 2 + abs(epsdot) ** 2 + 2)
        assert w0 == pytest.approx(1.0 / math.cosh(r), rel=1e-12)
        assert abs(mu) == pytest.approx(math.tanh(r) / 2, rel=1e-12)
        w2 = w0 * math.factorial(2) / 1 * abs(mu) ** 2
        assert w2 == pytest.approx(math.tanh(r) ** 2 / (2 * math.cosh(r)), rel=1e-12)

    def test_matches_gaussian_module(self):
        traj = solve_epsilon(expression_profile("1 + 0.25*cos(2*t)"), 8.0, 1e-11)
        for t in [1.0, 4.0, 7.5]:
            state = to_gaussian_state(traj, t)
            for n in range(12):
                assert squeezed_vacuum_pnd(traj, t, n) == pytest.approx(
                    photon_pnd(state, [n]), abs=1e-9)

    def test_normalization(self):
        traj = make_traj("repulsive", t_end=1.2)
        t = 1.0
        assert abs(squeezing_coefficient(traj, t)) <= 0.45
        total = sum(squeezed_vacuum_pnd(traj, t, 2 * m) for m in range(200))
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_p0_matches_qrep(self):
        traj = solve_epsilon(tabulated_profile([[0, 1.0], [3, 0.6], [8, 1.3]]), 8.0, 1e-11)
        for t in np.linspace(0.5, 8.0, 10):
            eps, epsdot = traj.at(t)
            want = 2.0 / math.sqrt(abs(eps) ** 2 + abs(epsdot) ** 2 + 2)
            rep = to_qrep(to_gaussian_state(traj, t))
            assert rep.p0 == pytest.approx(want, abs=1e-9)


class TestPacketWavefunctions:
    def test_ground_state_at_zero_time(self):
        traj = make_traj()
        for x in [0.0, 0.7, -1.3]:
            want = math.pi ** -0.25 * math.exp(-0.5 * x * x)
            got = packet_wavefunction_eval(traj, 0.0, 0.0, x)
            assert got == pytest.approx(want, rel=1e-9)

    def test_packet_is_normalized(self):
        traj = make_traj("free", t_end=2.0, tol=1e-11)
        norm = complex_l2_norm(lambda x: packet_wavefunction_eval(traj, 1.0, 1 + 1j, x))
        assert norm == pytest.approx(1.0, abs=1e-8)

    def test_lowering_invariant_eigenvalue(self):
        # (i/sqrt2)(eps p - epsdot x) Psi = alpha Psi by finite differences
        traj = make_traj("free", t_end=2.0, tol=1e-11)
        t, alpha, h = 1.0, 0.6 - 0.3j, 1e-4
        eps, epsdot = traj.at(t)
        xs = np.linspace(-1.5, 1.5, 11)
        psi = lambda x: packet_wavefunction_eval(traj, t, alpha, x)
        dpsi = (psi(xs + h) - psi(xs - h)) / (2 * h)
        applied = 1j / math.sqrt(2) * (eps * (-1j) * dpsi - epsdot * xs * psi(xs))
        residual = np.abs(applied - alpha * psi(xs)).max()
        assert residual < 1e-5

    def test_number_family_orthonormal(self):
        traj = make_traj("free", t_end=2.0, tol=1e-11)
        t = 1.0
        xs = np.linspace(-25, 25, 60001)
        fam = [squeezed_number_wavefunction(traj, t, m, xs) for m in range(5)]
        for i in range(5):
            for j in range(5):
                overlap = np.trapezoid(np.conj(fam[i]) * fam[j], xs)
                assert abs(overlap - (1.0 if i == j else 0.0)) < 1e-7

    def test_number_family_stationary_phases(self):
        # for the static oscillator the family reduces to number states
        # times e^{-it(m + 1/2)}
        traj = make_traj("oscillator", t_end=3.0, tol=1e-11)
        t = 2.0
        xs = np.linspace(-3, 3, 7)
        for m in [0, 1, 3]:
            got = squeezed_number_wavefunction(traj, t, m, xs)
            want = np.exp(-1j * t * (m + 0.5)) * fock_wavefunction_eval(m, xs)
            assert np.abs(got - want).max() < 1e-8

    def test_level_zero_is_ground_packet(self):
        traj = make_traj("repulsive", t_end=1.0)
        xs = np.linspace(-2, 2, 9)
        got = squeezed_number_wavefunction(traj, 0.8, 0, xs)
        want = packet_wavefunction_eval(traj, 0.8, 0.0, xs)
        assert np.abs(got - want).max() < 1e-12


class TestParametricCats:
    def test_even_zero_alpha_limit(self):
        traj = make_traj()
        xs = np.linspace(-2, 2, 9)
        got = parametric_cat_wavefunction(traj, 0.5, 1e-8, "even", xs)
        want = packet_wavefunction_eval(traj, 0.5, 0.0, xs)
        assert np.abs(got - want).max() < 1e-6

    def test_norms(self):
        traj = make_traj("free", t_end=1.0, tol=1e-11)
        for parity, alpha in [("even", 1.2), ("odd", 1.2), ("even", 0.8 + 0.5j)]:
            norm = complex_l2_norm(
                lambda x: parametric_cat_wavefunction(traj, 0.5, alpha, parity, x))
            assert norm == pytest.approx(1.0, abs=1e-7)

    def test_odd_cat_is_odd_function(self):
        traj = make_traj("free", t_end=0.5)
        xs = np.linspace(0.1, 2.0, 8)
        # at t=0, eps is real and the odd superposition is odd in x
        plus = parametric_cat_wavefunction(traj, 0.0, 0.9, "odd", xs)
        minus = parametric_cat_wavefunction(traj, 0.0, 0.9, "odd", -xs)
        assert np.abs(plus + minus).max() < 1e-12

    def test_square_invariant_eigenvalue(self):
        # cats satisfy A^2 Psi = alpha^2 Psi; checked by finite differences
        traj = make_traj("free", t_end=1.5, tol=1e-11)
        t, alpha, h = 0.5, 1.1, 1e-3
        eps, epsdot = traj.at(t)
        xs = np.linspace(-1.0, 1.0, 9)

        for parity in ("even", "odd"):
            psi = lambda x: parametric_cat_wavefunction(traj, t, alpha, parity, x)

            def lowering(f):
                def g(x):
                    df = (f(x + h) - f(x - h)) / (2 * h)
                    return 1j / math.sqrt(2) * (-1j * eps * df - epsdot * x * f(x))
                return g

            applied = lowering(lowering(psi))(xs)
            residual = np.abs(applied - alpha ** 2 * psi(xs)).max()
            assert residual < 1e-4

    def test_odd_zero_alpha_rejected(self):
        traj = make_traj()
        with pytest.raises(ValueError):
            parametric_cat_wavefunction(traj, 0.1, 0.0, "odd", 0.0)

    def test_unknown_parity_rejected(self):
        traj = make_traj()
        with pytest.raises(ValueError):
            parametric_cat_wavefunction(traj, 0.1, 1.0, "both", 0.0)
