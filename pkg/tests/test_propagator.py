import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pepr import oracle
from pepr.models import StateVector, cnot_model, perturbation_map, sample_initial_state
from pepr.parametrization import ControlParams
from pepr.propagator import (
    IntegratorConfig,
    RunLedger,
    propagate,
    propagate_with_kick,
    snap_to_grid,
)


class TestIntegratorConfig:
    def test_step_size(self):
        cfg = IntegratorConfig(steps_pow2=14, t_f=1.0)
        assert cfg.h == 2.0 ** -14
        assert cfg.n_steps == 2 ** 14

    def test_minimum_resolution(self):
        with pytest.raises(ValueError):
            IntegratorConfig(steps_pow2=5)


class TestRunLedger:
    def test_counts_forward(self):
        ledger = RunLedger()
        ledger.add()
        ledger.add(3)
        assert ledger.count == 4
        with pytest.raises(ValueError):
            ledger.add(-1)
        with pytest.raises(ValueError):
            RunLedger(-2)


class TestPropagate:
    def test_zero_field_identity(self, hadamard, rng):
        cfg = IntegratorConfig(steps_pow2=10)
        params = ControlParams(np.zeros((2, 3)))
        state = StateVector(rng.normal(size=3), xi=1)
        out = propagate(hadamard, params, state, 0.0, 1.0, cfg)
        assert_allclose(out.coords, state.coords, atol=1e-13)

    def test_quarter_turn_about_x(self, hadamard):
        # pure sigma_x drive: rotation angle is 2 * integral of h_x;
        # a single sine mode with amplitude pi^2/8 integrates to pi/2
        cfg = IntegratorConfig(steps_pow2=12)
        params = ControlParams([[math.pi ** 2 / 8.0], [0.0]])
        out = propagate(hadamard, params, StateVector([0, 0, 1], xi=1), 0.0, 1.0, cfg)
        assert_allclose(out.coords, [0.0, -1.0, 0.0], atol=1e-10)

    def test_dephasing_decay_closed_form(self):
        gz = 0.8
        model = cnot_model(gamma_z=gz)
        cfg = IntegratorConfig(steps_pow2=10)
        params = ControlParams(np.zeros((5, 2)))
        coords = np.zeros(15)
        coords[3] = 1.0
        out = propagate(model, params, StateVector(coords, xi=1), 0.0, 1.0, cfg)
        assert out.coords[3] == pytest.approx(math.exp(-2 * gz), abs=1e-10)
        assert_allclose(np.delete(out.coords, 3), 0.0, atol=1e-14)

    def test_rejects_off_grid_times(self, hadamard):
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(np.zeros((2, 1)))
        state = StateVector([0, 0, 1], xi=1)
        with pytest.raises(ValueError):
            propagate(hadamard, params, state, 0.0, 0.3, cfg)
        with pytest.raises(ValueError):
            propagate(hadamard, params, state, 0.7, 0.5, cfg)

    def test_composition_is_bitwise_exact(self, cnot, rng):
        cfg = IntegratorConfig(steps_pow2=9)
        params = ControlParams(rng.normal(size=(5, 4)))
        state = sample_initial_state(cnot, rng)
        t_mid = snap_to_grid(0.37, cfg)
        direct = propagate(cnot, params, state, 0.0, 1.0, cfg)
        split = propagate(
            cnot, params, propagate(cnot, params, state, 0.0, t_mid, cfg), t_mid, 1.0, cfg
        )
        assert np.array_equal(direct.coords, split.coords)

    def test_fourth_order_step_halving(self, cnot, rng):
        ratios = []
        for _ in range(10):
            params = ControlParams(rng.normal(size=(5, 4)))
            state = sample_initial_state(cnot, rng)
            sols = {
                p: propagate(cnot, params, state, 0.0, 1.0, IntegratorConfig(p)).coords
                for p in (8, 9, 10)
            }
            e1 = np.linalg.norm(sols[8] - sols[9])
            e2 = np.linalg.norm(sols[9] - sols[10])
            if e2 > 1e-14:  # avoid ratios dominated by roundoff
                ratios.append(e1 / e2)
        assert np.median(ratios) == pytest.approx(16.0, rel=0.25)

    @pytest.mark.parametrize("name,gz", [("hadamard", 0.0), ("cnot", 0.0), ("cnot", 0.07)])
    def test_matches_matrix_propagation(self, name, gz, rng):
        from pepr.models import make_model

        model = make_model(name, gz)
        cfg = IntegratorConfig(steps_pow2=10)
        for _ in range(3):
            params = ControlParams(rng.normal(size=(model.n_channels, 4)))
            state = sample_initial_state(model, rng)
            vec = propagate(model, params, state, 0.0, 1.0, cfg)
            mat = oracle.propagate_matrix(
                model, params, oracle.to_matrix(model, state), 0.0, 1.0, cfg
            )
            assert_allclose(vec.coords, oracle.from_matrix(model, mat).coords, atol=1e-10)


class TestSnapToGrid:
    def test_snaps_to_nearest_step(self):
        cfg = IntegratorConfig(steps_pow2=8)
        h = cfg.h
        assert snap_to_grid(0.4 * h, cfg) == 0.0
        assert snap_to_grid(0.6 * h, cfg) == h
        assert snap_to_grid(1.2, cfg) == 1.0
        assert snap_to_grid(-0.3, cfg) == 0.0


class TestPropagateWithKick:
    def test_zero_params_reduces_to_map(self, cnot, rng):
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(np.zeros((5, 3)))
        state = sample_initial_state(cnot, rng)
        t_r = snap_to_grid(0.62, cfg)
        kicked = propagate_with_kick(cnot, params, state, 2, t_r, cfg)
        assert_allclose(kicked.coords, perturbation_map(cnot, 2, state).coords, atol=1e-13)

    def test_output_is_traceless(self, cnot, rng):
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(rng.normal(size=(5, 3)))
        state = sample_initial_state(cnot, rng)
        out = propagate_with_kick(cnot, params, state, 0, snap_to_grid(0.5, cfg), cfg)
        assert out.xi == 0

    def test_hadamard_free_kick(self, hadamard):
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(np.zeros((2, 2)))
        state = StateVector([0, 0, 1], xi=1)
        for t_r in (0.0, 0.25, 1.0):
            out = propagate_with_kick(hadamard, params, state, 1, t_r, cfg)
            assert_allclose(out.coords, [-1.0, 0.0, 0.0], atol=1e-13)

    def test_counts_one_run(self, hadamard):
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(np.zeros((2, 2)))
        ledger = RunLedger()
        propagate_with_kick(hadamard, params, StateVector([0, 0, 1], xi=1), 0, 0.5, cfg, ledger)
        assert ledger.count == 1
