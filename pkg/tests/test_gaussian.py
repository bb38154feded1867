import math

import numpy as np
import pytest
from scipy.linalg import expm

from qopt.gaussian import (GaussianState, PureGaussianSpec, QRep, from_pure_gaussian,
                           from_qrep, make_coherent, make_squeezed_vacuum,
                           make_thermal_oscillator, photon_moments, photon_pnd,
                           photon_pnd_table, q_eval, state_from_dict, state_to_dict,
                           to_qrep, validate_state, wigner_eval)
from qopt.matrices import symplectic_metric

from oracles import trapz_nd


def random_symplectic(n_modes, rng, scale=0.4):
    b = rng.normal(size=(2 * n_modes, 2 * n_modes)) * scale
    return expm(symplectic_metric(n_modes) @ (b + b.T))


def random_valid_state(n_modes, rng, mixed=True, mean_scale=0.8, noise_scale=1.2,
                       symplectic_scale=0.4):
    sigmas = rng.uniform(0.5, noise_scale, size=n_modes) if mixed else 0.5 * np.ones(n_modes)
    disp0 = np.diag(np.concatenate([sigmas, sigmas]))
    S = random_symplectic(n_modes, rng, scale=symplectic_scale)
    mean = rng.normal(size=2 * n_modes) * mean_scale
    return GaussianState(mean, S @ disp0 @ S.T)


class TestConstructors:
    def test_vacuum(self):
        s = make_coherent(0.0)
        assert np.allclose(s.mean, 0.0)
        assert np.allclose(s.disp, 0.5 * np.eye(2))

    def test_coherent_means(self):
        s = make_coherent(1.0)
        assert s.mean[1] == pytest.approx(math.sqrt(2))  # <q>
        assert s.mean[0] == pytest.approx(0.0)            # <p>

    def test_coherent_noise_is_displacement_independent(self):
        for alpha in [0.3, 1.5 - 2.0j, -0.7j]:
            s = make_coherent(alpha)
            assert np.allclose(s.disp, 0.5 * np.eye(2))

    def test_thermal_width(self):
        s = make_thermal_oscillator(1.0, 1.0)
        assert s.disp[0, 0] == pytest.approx(0.5 / math.tanh(0.5), abs=1e-12)
        assert s.disp[0, 0] == pytest.approx(1.0820, abs=2e-4)

    def test_thermal_zero_temperature_limit(self):
        s = make_thermal_oscillator(1e-3, 1.0)
        assert np.allclose(s.disp, 0.5 * np.eye(2), atol=1e-12)

    def test_thermal_rejects_bad_args(self):
        with pytest.raises(ValueError):
            make_thermal_oscillator(-1.0, 1.0)
        with pytest.raises(ValueError):
            make_thermal_oscillator(1.0, 0.0)

    def test_state_rejects_asymmetry(self):
        with pytest.raises(ValueError):
            GaussianState([0, 0], [[0.5, 0.2], [0.1, 0.5]])


class TestValidateState:
    def test_vacuum_saturates(self):
        diag = validate_state(make_coherent(0.0))
        assert diag.min_uncertainty_eigenvalue == pytest.approx(0.0, abs=1e-12)
        assert diag.purity == pytest.approx(1.0, abs=1e-12)
        assert diag.uncertainty_ok

    def test_below_vacuum_noise_flagged(self):
        diag = validate_state(GaussianState([0, 0], 0.25 * np.eye(2)))
        assert not diag.uncertainty_ok
        assert diag.min_uncertainty_eigenvalue < -0.1

    def test_thermal_is_mixed(self):
        diag = validate_state(make_thermal_oscillator(1.0))
        assert diag.purity < 1.0
        assert diag.purity == pytest.approx(math.tanh(0.5), abs=1e-12)

    def test_constructors_pass_validation(self):
        rng = np.random.default_rng(2)
        states = [make_coherent(1 + 1j), make_thermal_oscillator(0.7),
                  make_squeezed_vacuum(1.0), random_valid_state(2, rng)]
        for s in states:
            assert validate_state(s).uncertainty_ok

    def test_pure_constructors_have_unit_purity(self):
        for s in [make_coherent(1 + 1j), make_coherent([0.4, -0.8j]),
                  make_squeezed_vacuum(1.3)]:
            assert validate_state(s).purity == pytest.approx(1.0, abs=1e-10)


class TestWigner:
    def test_vacuum_at_origin(self):
        assert wigner_eval(make_coherent(0.0), [0.0, 0.0]) == pytest.approx(2.0, rel=1e-12)

    def test_vacuum_on_unit_circle(self):
        s = make_coherent(0.0)
        for ang in np.linspace(0, 2 * np.pi, 7):
            Q = [math.cos(ang), math.sin(ang)]
            assert wigner_eval(s, Q) == pytest.approx(2.0 * math.exp(-1.0), rel=1e-12)

    def test_peak_value_is_inverse_root_det(self):
        rng = np.random.default_rng(4)
        s = random_valid_state(1, rng)
        want = np.linalg.det(s.disp) ** -0.5
        assert wigner_eval(s, s.mean) == pytest.approx(want, rel=1e-12)

    def test_grid_broadcasting_and_normalization(self):
        s = make_squeezed_vacuum(0.8)
        p = np.linspace(-14, 14, 701)
        q = np.linspace(-14, 14, 701)
        P, Q = np.meshgrid(p, q, indexing="ij")
        pts = np.stack([P, Q], axis=-1)
        vals = wigner_eval(s, pts)
        total = np.trapezoid(np.trapezoid(vals, q, axis=1), p) / (2 * np.pi)
        assert total == pytest.approx(1.0, abs=1e-9)


class TestQRep:
    def test_vacuum(self):
        rep = to_qrep(make_coherent(0.0))
        assert rep.p0 == pytest.approx(1.0, abs=1e-12)
        assert np.abs(rep.R).max() < 1e-12

    def test_coherent_p0_is_poisson_weight(self):
        for alpha in [0.5, 1.5, 1.0 - 2.0j]:
            rep = to_qrep(make_coherent(alpha))
            assert rep.p0 == pytest.approx(math.exp(-abs(alpha) ** 2), rel=1e-12)

    def test_squeezed_vacuum_p0(self):
        # sigma_q = |eps|^2/2, sigma_p = |epsdot|^2/2, sigma_pq = Re(eps* epsdot)/2
        eps, epsdot = 1.0 + 0.8j, -0.4 + 1j * (1 + 0.4 * 0.8) / 1.0  # any Wronskian pair
        # enforce eps epsdot* - eps* epsdot = -2i exactly
        eps = 1.2 * np.exp(0.3j)
        epsdot = (0.25 + 1j / abs(eps) ** 0.5) * eps  # placeholder, fixed below
        epsdot = (0.3 + 1j / abs(eps) ** 2) * eps
        w = eps * np.conj(epsdot) - np.conj(eps) * epsdot
        assert w == pytest.approx(-2j, rel=1e-12)
        M = 0.5 * np.array([[abs(epsdot) ** 2, np.real(np.conj(eps) * epsdot)],
                            [np.real(np.conj(eps) * epsdot), abs(eps) ** 2]])
        rep = to_qrep(GaussianState([0, 0], M))
        want = 2.0 / math.sqrt(abs(eps) ** 2 + abs(epsdot) ** 2 + 2.0)
        assert rep.p0 == pytest.approx(want, rel=1e-12)

    def test_roundtrip_vacuum(self):
        s = make_coherent(0.0)
        back = from_qrep(to_qrep(s))
        assert np.allclose(back.mean, s.mean, atol=1e-12)
        assert np.allclose(back.disp, s.disp, atol=1e-12)

    def test_roundtrip_random_two_mode(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            s = random_valid_state(2, rng)
            back = from_qrep(to_qrep(s))
            assert np.abs(back.mean - s.mean).max() < 1e-10
            assert np.abs(back.disp - s.disp).max() < 1e-10

    def test_roundtrip_coherent(self):
        # R is singular here; the exact linear coefficient must survive
        s = make_coherent(1.3 - 0.8j)
        back = from_qrep(to_qrep(s))
        assert np.abs(back.mean - s.mean).max() < 1e-10
        assert np.abs(back.disp - s.disp).max() < 1e-10

    def test_zero_rep_is_vacuum(self):
        s = from_qrep(QRep(np.zeros((2, 2)), np.zeros(2), 1.0))
        assert np.allclose(s.mean, 0.0, atol=1e-12)
        assert np.allclose(s.disp, 0.5 * np.eye(2), atol=1e-12)

    def test_singular_kernel_rejected(self):
        # R + sigma_Nx = 0 cannot be inverted back to a state
        rep = QRep(-np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros(2), 1.0)
        with pytest.raises(ValueError):
            from_qrep(rep)


class TestWignerErrors:
    def test_singular_dispersion_rejected(self):
        s = GaussianState([0.0, 0.0], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError):
            wigner_eval(s, [0.0, 0.0])

    def test_wrong_point_dimension_rejected(self):
        with pytest.raises(ValueError):
            wigner_eval(make_coherent(0.0), [0.0, 0.0, 0.0])


class TestQFunction:
    def test_vacuum_gaussian(self):
        s = make_coherent(0.0)
        for q, p in [(0.0, 0.0), (1.0, 0.0), (0.3, -1.2)]:
            beta = (q + 1j * p) / math.sqrt(2)
            assert q_eval(s, [beta]) == pytest.approx(math.exp(-(q * q + p * p) / 2), rel=1e-10)

    def test_coherent_self_overlap(self):
        alpha = 0.7 + 0.4j
        assert q_eval(make_coherent(alpha), [alpha]) == pytest.approx(1.0, rel=1e-12)

    def test_coherent_cross_overlap(self):
        alpha, beta = 0.9 - 0.2j, -0.3 + 1.1j
        want = math.exp(-abs(alpha - beta) ** 2)
        assert q_eval(make_coherent(alpha), [beta]) == pytest.approx(want, rel=1e-10)

    def test_thermal_matches_closed_form(self):
        temperature, omega = 1.0, 1.0
        s = make_thermal_oscillator(temperature, omega)
        x = omega / temperature
        for q, p in [(0.0, 0.0), (0.8, -0.5), (1.5, 1.0)]:
            beta = (q + 1j * p) / math.sqrt(2)
            want = (2 * math.sinh(x / 2) * math.exp(-x / 2)
                    * math.exp(-0.5 * (p * p + q * q) * (1 - math.exp(-x))))
            assert q_eval(s, [beta]) == pytest.approx(want, rel=1e-10)

    def test_thermal_normalization(self):
        s = make_thermal_oscillator(1.0, 1.0)
        re = np.linspace(-6, 6, 301)
        im = np.linspace(-6, 6, 301)

        def f(x, y):
            return q_eval(s, (x + 1j * y)[..., np.newaxis])

        total = trapz_nd(f, [re, im]) / np.pi
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_q_is_wigner_smoothed_by_vacuum(self):
        rng = np.random.default_rng(31)
        p = np.linspace(-9, 9, 481)
        q = np.linspace(-9, 9, 481)
        for _ in range(5):
            s = random_valid_state(1, rng, mean_scale=0.5)
            beta = (rng.normal(scale=0.5) + 1j * rng.normal(scale=0.5))
            qb, pb = math.sqrt(2) * beta.real, math.sqrt(2) * beta.imag

            def f(pp, qq):
                pts = np.stack([pp, qq], axis=-1)
                return wigner_eval(s, pts) * np.exp(-(pp - pb) ** 2 - (qq - qb) ** 2)

            want = trapz_nd(f, [p, q]) / np.pi
            assert q_eval(s, [beta]) == pytest.approx(want, abs=1e-6)


class TestPureGaussian:
    def test_vacuum_spec(self):
        s = from_pure_gaussian(PureGaussianSpec(0.5 * np.eye(1), [0.0]))
        assert np.allclose(s.disp, 0.5 * np.eye(2), atol=1e-12)
        assert np.allclose(s.mean, 0.0, atol=1e-12)

    def test_scalar_squeeze(self):
        r = 0.7
        s = from_pure_gaussian(PureGaussianSpec([[0.5 * math.exp(2 * r)]], [0.0]))
        assert s.disp[1, 1] == pytest.approx(0.5 * math.exp(-2 * r), rel=1e-12)  # sigma_q
        assert s.disp[0, 0] == pytest.approx(0.5 * math.exp(2 * r), rel=1e-12)   # sigma_p

    def test_complex_m_gives_correlation(self):
        s = from_pure_gaussian(PureGaussianSpec([[0.5 + 0.3j]], [0.0]))
        assert abs(s.disp[0, 1]) > 0.1

    def test_outputs_are_pure(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            shape = rng.normal(size=(2, 2))
            m = shape @ shape.T + 1.2 * np.eye(2) + 0.3j * (lambda a: a + a.T)(rng.normal(size=(2, 2)))
            c = rng.normal(size=2) + 1j * rng.normal(size=2)
            s = from_pure_gaussian(PureGaussianSpec(0.5 * m, c))
            diag = validate_state(s)
            assert diag.purity == pytest.approx(1.0, abs=1e-10)
            assert diag.min_uncertainty_eigenvalue > -1e-10

    def test_mean_matches_plane_wave(self):
        # psi ~ exp(-x^2/2 + ikx) has <q> = 0, <p> = k
        k = 1.7
        s = from_pure_gaussian(PureGaussianSpec([[0.5]], [1j * k]))
        assert s.mean[0] == pytest.approx(k, rel=1e-12)
        assert s.mean[1] == pytest.approx(0.0, abs=1e-12)


class TestPhotonStatistics:
    def test_coherent_poisson(self):
        alpha = 1.5
        s = make_coherent(alpha)
        for n in range(21):
            want = math.exp(-alpha ** 2) * alpha ** (2 * n) / math.factorial(n)
            assert photon_pnd(s, [n]) == pytest.approx(want, abs=1e-10)

    def test_vacuum_pnd(self):
        s = make_coherent(0.0)
        assert photon_pnd(s, [0]) == pytest.approx(1.0, abs=1e-12)
        for n in range(1, 6):
            assert photon_pnd(s, [n]) == pytest.approx(0.0, abs=1e-12)

    def test_squeezed_vacuum_matches_closed_form(self):
        r = 1.0
        s = make_squeezed_vacuum(r)
        for m in range(8):
            want = (math.factorial(2 * m) / math.factorial(m) ** 2
                    * (math.tanh(r) / 2) ** (2 * m) / math.cosh(r))
            assert photon_pnd(s, [2 * m]) == pytest.approx(want, abs=1e-11)
            assert photon_pnd(s, [2 * m + 1]) == pytest.approx(0.0, abs=1e-12)

    def test_two_mode_coherent_factorizes(self):
        s = make_coherent([0.8, 1.1 - 0.5j])
        for n in [(0, 0), (1, 2), (3, 1)]:
            want = 1.0
            for a, k in zip([0.8, 1.1 - 0.5j], n):
                want *= math.exp(-abs(a) ** 2) * abs(a) ** (2 * k) / math.factorial(k)
            assert photon_pnd(s, n) == pytest.approx(want, rel=1e-9)

    @pytest.mark.filterwarnings("ignore:photon enumeration")
    @pytest.mark.parametrize("state_fn", [
        lambda: make_coherent(2.0),
        lambda: make_squeezed_vacuum(1.0),
        lambda: make_thermal_oscillator(2.0),
        lambda: random_valid_state(2, np.random.default_rng(42), mean_scale=0.4,
                                   noise_scale=0.8, symplectic_scale=0.25),
    ])
    def test_pnd_normalizes(self, state_fn):
        # mean photon number <= 10 for all of these
        table = photon_pnd_table(state_fn())
        assert table.cumulative >= 1 - 1e-8

    def test_cap_hit_is_reported(self):
        s = make_thermal_oscillator(5.0)
        with pytest.warns(UserWarning, match="degree cap"):
            table = photon_pnd_table(s, degree_cap_per_mode=3)
        assert table.cap_hit
        assert table.cumulative < 1 - 1e-10

    def test_moments_coherent(self):
        alpha = 1.2 - 0.7j
        mean, var = photon_moments(make_coherent(alpha))
        assert mean == pytest.approx(abs(alpha) ** 2, rel=1e-10)
        assert var == pytest.approx(abs(alpha) ** 2, rel=1e-8)

    def test_moments_vacuum(self):
        mean, var = photon_moments(make_coherent(0.0))
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert var == pytest.approx(0.0, abs=1e-12)

    def test_moments_squeezed(self):
        mean, var = photon_moments(make_squeezed_vacuum(1.0))
        assert mean == pytest.approx(math.sinh(1.0) ** 2, rel=1e-10)

    def test_series_mean_matches_closed_form_one_mode(self):
        # one-mode tables are cheap; a high cap lets strongly squeezed draws converge
        rng = np.random.default_rng(19)
        for _ in range(4):
            s = random_valid_state(1, rng, mean_scale=0.6)
            table = photon_pnd_table(s, mass_tol=1e-12, degree_cap_per_mode=280)
            assert not table.cap_hit
            series_mean = sum(k[0] * p for k, p in table.probabilities.items())
            assert series_mean == pytest.approx(photon_moments(s)[0], abs=1e-8)

    def test_series_mean_matches_closed_form_two_mode(self):
        s = random_valid_state(2, np.random.default_rng(23), mean_scale=0.4,
                               noise_scale=0.7, symplectic_scale=0.2)
        table = photon_pnd_table(s)
        series_mean = sum(sum(k) * p for k, p in table.probabilities.items())
        closed = sum(photon_moments(s, j)[0] for j in range(2))
        assert series_mean == pytest.approx(closed, abs=1e-8)


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        s = random_valid_state(2, rng)
        doc = state_to_dict(s)
        back = state_from_dict(doc)
        assert np.allclose(back.mean, s.mean)
        assert np.allclose(back.disp, s.disp)
        assert doc["n_modes"] == 2

    def test_mode_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            state_from_dict({"n_modes": 2, "mean": [0, 0], "disp": [[0.5, 0], [0, 0.5]]})
