"""Probe states, the dense evolution oracle, sampling, and the witness."""

import math

import numpy as np
import pytest
from scipy.stats import chi2

from zenometry import (
    CapacityError,
    DensityMatrix,
    Markovian,
    ProbeSpec,
    Quadratic,
    Tabulated,
    WhiteNoiseGhzParams,
    evolve_oracle,
    fidelity_bound,
    ghz_density_matrix,
    parity_expectation_analytic,
    parity_expectation_dm,
    sample_fringe,
    synthetic_fringe,
    witness_expectation,
    witness_from_settings,
)


def random_state(rng, n):
    dim = 2**n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho))


class TestSpecs:
    def test_probe_spec_validation(self):
        with pytest.raises(ValueError):
            ProbeSpec("cat", 2)
        with pytest.raises(ValueError):
            ProbeSpec("ghz", 0)
        with pytest.raises(ValueError):
            ProbeSpec("ghz", 2, 1.5)
        assert ProbeSpec("ghz", 4).fringe_frequency == 4
        assert ProbeSpec("product", 4).fringe_frequency == 1

    def test_parity_visibility(self):
        assert WhiteNoiseGhzParams(4, 0.9).parity_visibility == pytest.approx(
            0.81, rel=1e-15)
        assert WhiteNoiseGhzParams(2, 0.81).parity_visibility == pytest.approx(
            0.81, rel=1e-15)
        assert WhiteNoiseGhzParams(6, 1.0).parity_visibility == 1.0


class TestDensityMatrix:
    def test_structure_of_white_noise_ghz(self):
        dm = ghz_density_matrix(WhiteNoiseGhzParams(3, 1.0))
        m = dm.matrix
        assert m[0, 0] == pytest.approx(0.5, abs=1e-15)
        assert m[7, 7] == pytest.approx(0.5, abs=1e-15)
        assert m[0, 7] == pytest.approx(0.5, abs=1e-15)
        assert m[1, 1] == pytest.approx(0.0, abs=1e-15)

    def test_fully_mixed_limit(self):
        dm = ghz_density_matrix(WhiteNoiseGhzParams(2, 0.0))
        assert np.allclose(dm.matrix, np.eye(4) / 4.0, atol=1e-15)

    def test_parity_equals_visibility(self):
        for n in (1, 2, 3, 5):
            for v in (1.0, 0.9, 0.5):
                dm = ghz_density_matrix(WhiteNoiseGhzParams(n, v))
                assert parity_expectation_dm(dm) == pytest.approx(
                    v ** (n / 2.0), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(3) / 3.0)  # not a power of two
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2))  # trace 2
        bad = np.array([[0.5, 0.5j], [0.5j, 0.5]])
        with pytest.raises(ValueError):
            DensityMatrix(bad)  # not Hermitian

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            ghz_density_matrix(WhiteNoiseGhzParams(13, 1.0))

    def test_matrix_is_read_only(self):
        dm = ghz_density_matrix(WhiteNoiseGhzParams(2, 1.0))
        with pytest.raises(ValueError):
            dm.matrix[0, 0] = 9.0

    def test_csv_dump(self, tmp_path):
        dm = ghz_density_matrix(WhiteNoiseGhzParams(1, 1.0))
        path = tmp_path / "rho.csv"
        dm.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "row,col,re,im"
        assert len(lines) == 5


class TestOracle:
    def test_plus_state_coherence_decay(self):
        plus = DensityMatrix(np.full((2, 2), 0.5))
        out = evolve_oracle(plus, Markovian(1.0), omega=0.0, t=0.5)
        assert out.matrix[0, 1] == pytest.approx(0.5 * math.exp(-0.5), abs=1e-12)
        assert out.matrix[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_matches_analytic_fringe(self):
        rng = np.random.default_rng(11)
        models = [Markovian(0.7), Quadratic(1.3),
                  Tabulated([(0.0, 0.0), (0.6, 0.3), (1.5, 1.4)])]
        for n in range(1, 9):
            for v in (1.0, 0.9):
                for model in models:
                    omega = float(rng.uniform(-3.0, 3.0))
                    t = float(rng.uniform(0.01, 1.4))
                    state = ghz_density_matrix(WhiteNoiseGhzParams(n, v))
                    evolved = evolve_oracle(state, model, omega, t)
                    spec = ProbeSpec("ghz", n, v ** (n / 2.0))
                    assert parity_expectation_dm(evolved) == pytest.approx(
                        parity_expectation_analytic(spec, model, omega, t),
                        abs=1e-12)

    def test_channel_legality_on_random_states(self):
        rng = np.random.default_rng(5)
        for n in (1, 2, 3):
            for _ in range(5):
                state = random_state(rng, n)
                out = evolve_oracle(state, Quadratic(0.9),
                                    omega=float(rng.normal()), t=0.7)
                assert abs(np.trace(out.matrix) - 1.0) <= 1e-12
                assert out.min_eigenvalue() >= -1e-10
                assert np.max(np.abs(out.matrix - out.matrix.conj().T)) <= 1e-12

    def test_zero_time_is_identity_plus_phase_zero(self):
        rng = np.random.default_rng(6)
        state = random_state(rng, 2)
        out = evolve_oracle(state, Quadratic(1.0), omega=2.0, t=0.0)
        assert np.allclose(out.matrix, state.matrix, atol=1e-13)


class TestAnalyticFringe:
    def test_visibility_at_zero_time(self):
        spec = ProbeSpec("ghz", 6, 0.7968)
        assert parity_expectation_analytic(spec, Quadratic(1.0), 1.0, 0.0) \
            == pytest.approx(0.7968, rel=1e-15)

    def test_node_at_quarter_fringe(self):
        spec = ProbeSpec("ghz", 4, 1.0)
        omega = math.pi / 2.0  # N * omega * t = pi/2 at t = 0.25
        value = parity_expectation_analytic(spec, Quadratic(1.0), omega, 0.25)
        assert abs(value) <= 1e-12

    def test_product_oscillates_at_single_qubit_frequency(self):
        model = Quadratic(0.8)
        spec = ProbeSpec("product", 5, 1.0)
        value = parity_expectation_analytic(spec, model, 2.0, 0.3)
        expected = math.exp(-model.gamma_at(0.3)) * math.cos(2.0 * 0.3)
        assert value == pytest.approx(expected, rel=1e-14)


class TestSampling:
    def test_deterministic_given_seed(self):
        spec = ProbeSpec("ghz", 3, 1.0)
        grid = np.linspace(0.0, math.pi, 25)
        a = sample_fringe(spec, Quadratic(1.0), 0.2, grid, 10_000, seed=31)
        b = sample_fringe(spec, Quadratic(1.0), 0.2, grid, 10_000, seed=31)
        assert np.array_equal(a.n_plus, b.n_plus)
        assert np.array_equal(a.n_total, b.n_total)
        c = sample_fringe(spec, Quadratic(1.0), 0.2, grid, 10_000, seed=32)
        assert not np.array_equal(a.n_plus, c.n_plus)

    def test_counting_statistics_are_sound(self):
        # standardized residuals over 100 settings behave like chi-square
        spec = ProbeSpec("ghz", 2, 1.0)
        model = Quadratic(1.0)
        t = 0.25
        grid = np.linspace(0.0, math.pi, 100)
        shots = 10_000
        data = sample_fringe(spec, model, t, grid, shots, seed=97)
        amp = math.exp(-2.0 * model.gamma_at(t))
        p = (1.0 + amp * np.cos(2.0 * grid)) / 2.0
        usable = (data.n_total > 0) & (p > 1e-6) & (p < 1 - 1e-6)
        z = (data.n_plus[usable] - data.n_total[usable] * p[usable]) / np.sqrt(
            data.n_total[usable] * p[usable] * (1.0 - p[usable]))
        statistic = float(np.sum(z**2))
        assert statistic <= chi2.ppf(0.99, int(np.sum(usable)))

    def test_estimates_converge_to_analytic(self):
        spec = ProbeSpec("ghz", 2, 1.0)
        model = Quadratic(1.0)
        t = 0.25
        grid = np.linspace(0.0, math.pi, 100)
        data = sample_fringe(spec, model, t, grid, 10_000_000, seed=12)
        amp = math.exp(-2.0 * model.gamma_at(t))
        truth = amp * np.cos(2.0 * grid)
        ok = data.usable
        within = np.abs(data.estimate[ok] - truth[ok]) <= 3.0 * data.stderr[ok]
        assert np.mean(within) >= 0.99

    def test_zero_event_settings_marked_missing(self):
        spec = ProbeSpec("ghz", 1, 1.0)
        grid = np.linspace(0.0, math.pi, 40)
        data = sample_fringe(spec, Quadratic(1.0), 0.3, grid, 1, seed=3)
        missing = ~data.usable
        assert np.any(missing)
        assert np.all(data.n_total[missing] == 0)
        assert np.all(np.isnan(data.stderr[missing]))

    def test_shots_validation(self):
        spec = ProbeSpec("ghz", 1, 1.0)
        with pytest.raises(ValueError):
            sample_fringe(spec, Quadratic(1.0), 0.3, [0.0, 0.1], 0, seed=1)

    def test_synthetic_matches_analytic(self):
        spec = ProbeSpec("ghz", 3, 0.9)
        model = Quadratic(1.0)
        grid = np.linspace(0.0, math.pi, 25)
        data = synthetic_fringe(spec, model, 0.2, grid)
        for theta, est in zip(data.theta, data.estimate):
            expected = 0.9 * math.exp(-3 * model.gamma_at(0.2)) * math.cos(3 * theta)
            assert est == pytest.approx(expected, abs=1e-14)
        assert np.all(data.stderr == 0.0)


class TestWitness:
    def test_perfect_ghz_reaches_floor(self):
        for n in range(2, 7):
            dm = ghz_density_matrix(WhiteNoiseGhzParams(n, 1.0))
            w = witness_expectation(dm)
            assert w == pytest.approx(-1.0, abs=1e-12)
            assert fidelity_bound(w) == pytest.approx(1.0, abs=1e-12)

    def test_white_noise_closed_form(self):
        for n in range(2, 7):
            for v in (1.0, 0.9, 0.7, 0.3):
                dm = ghz_density_matrix(WhiteNoiseGhzParams(n, v))
                big_v = v ** (n / 2.0)
                expected = 2.0 - 3.0 * big_v - 2.0 ** (2 - n) * (1.0 - big_v)
                assert witness_expectation(dm) == pytest.approx(
                    expected, abs=1e-12)

    def test_single_qubit_unsupported(self):
        dm = ghz_density_matrix(WhiteNoiseGhzParams(1, 1.0))
        with pytest.raises(ValueError):
            witness_expectation(dm)

    def test_from_settings(self):
        assert witness_from_settings(1.0, 0.5, 0.5) == pytest.approx(-1.0)
        with pytest.raises(ValueError):
            witness_from_settings(1.5, 0.5, 0.5)
        with pytest.raises(ValueError):
            witness_from_settings(0.5, 0.7, 0.6)

    def test_fidelity_bound_values(self):
        assert fidelity_bound(-0.7052) == pytest.approx(0.8526, abs=1e-12)
        assert fidelity_bound(3.0) == 0.0  # clipped
        assert fidelity_bound(-1.0) == 1.0
        with pytest.raises(ValueError):
            fidelity_bound(3.5)
        with pytest.raises(ValueError):
            fidelity_bound(-1.5)
