import numpy as np
import pytest
from numpy.testing import assert_allclose

from pepr import oracle
from pepr.models import (
    StateVector,
    cnot_model,
    eom_rhs,
    fidelity,
    hadamard_model,
    make_model,
    perturbation_map,
    product_state,
    sample_initial_state,
    target_qubit_bloch,
)
from pepr.parametrization import ControlParams
from pepr.propagator import IntegratorConfig, propagate


def ket00():
    return product_state([0, 0, 1], [0, 0, 1])


def ket10():
    return product_state([0, 0, -1], [0, 0, 1])


class TestModelSpec:
    def test_channel_order(self, cnot):
        assert cnot.channel_names == ("h_x1", "h_y1", "h_x2", "h_y2", "J")
        assert cnot.rabi_pairs == ((0, 1), (2, 3))
        assert cnot.coupling_channels == (4,)

    def test_hadamard_rejects_dephasing(self):
        with pytest.raises(ValueError):
            hadamard_model(gamma_z=0.1)

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            make_model("toffoli")


class TestEomRhs:
    def test_hadamard_free_evolution(self, hadamard, rng):
        state = StateVector(rng.normal(size=3), xi=1)
        d = eom_rhs(hadamard, state, [0.0, 0.0])
        assert_allclose(d.coords, 0.0, atol=0)
        assert d.xi == 1

    def test_hadamard_x_drive(self, hadamard):
        c = 0.7
        d = eom_rhs(hadamard, StateVector([0, 1, 0], xi=1), [c, 0.0])
        assert_allclose(d.coords, [0.0, 0.0, 2 * c], atol=1e-15)

    def test_cnot_dephasing_of_coherence(self):
        gz = 0.31
        model = cnot_model(gamma_z=gz)
        coords = np.zeros(15)
        coords[3] = 1.0  # rho_4
        d = eom_rhs(model, StateVector(coords, xi=1), np.zeros(5))
        expected = np.zeros(15)
        expected[3] = -2 * gz
        assert_allclose(d.coords, expected, atol=1e-15)

    def test_dimension_mismatch(self, cnot):
        with pytest.raises(ValueError):
            eom_rhs(cnot, StateVector([0, 0, 1], xi=1), np.zeros(5))
        with pytest.raises(ValueError):
            eom_rhs(cnot, StateVector(np.zeros(15), xi=1), np.zeros(3))

    @pytest.mark.parametrize("name,gz", [("hadamard", 0.0), ("cnot", 0.0), ("cnot", 0.12)])
    @pytest.mark.parametrize("xi", [0, 1])
    def test_matches_matrix_lindblad(self, name, gz, xi, rng):
        model = make_model(name, gz)
        for _ in range(100):
            state = StateVector(rng.normal(size=model.dim), xi=xi)
            controls = rng.normal(size=model.n_channels)
            direct = eom_rhs(model, state, controls).coords
            m = oracle.to_matrix(model, state)
            via_matrix = oracle.from_matrix(
                model, oracle.lindblad_rhs(model, m, controls, gz)
            ).coords
            assert_allclose(direct, via_matrix, atol=1e-12)


class TestPerturbationMap:
    def test_hadamard_printed_maps(self, hadamard):
        up = StateVector([0, 0, 1], xi=1)
        out = perturbation_map(hadamard, 0, up)
        assert_allclose(out.coords, [0, 1, 0], atol=0)
        assert out.xi == 0
        out = perturbation_map(hadamard, 1, up)
        assert_allclose(out.coords, [-1, 0, 0], atol=0)

    def test_heisenberg_commutes_with_identity(self, cnot):
        state = StateVector(np.zeros(15), xi=1)
        out = perturbation_map(cnot, 4, state)
        assert_allclose(out.coords, 0.0, atol=0)
        assert out.xi == 0

    def test_invalid_channel(self, cnot):
        with pytest.raises(ValueError):
            perturbation_map(cnot, 5, StateVector(np.zeros(15), xi=1))

    def test_cnot_maps_match_commutators(self, cnot, rng):
        for _ in range(100):
            state = StateVector(rng.normal(size=15), xi=int(rng.integers(2)))
            m = oracle.to_matrix(cnot, state)
            for ch in range(5):
                mapped = perturbation_map(cnot, ch, state)
                b = oracle.control_operators(cnot)[ch]
                comm = oracle.from_matrix(cnot, 1j * (b @ m - m @ b))
                assert comm.xi == 0
                assert_allclose(mapped.coords, comm.coords, atol=1e-12)

    def test_hadamard_maps_are_half_commutators(self, hadamard, rng):
        # the single-qubit maps follow the printed convention, which carries
        # 1/2 relative to the raw commutator in the half-normalized layout
        for _ in range(50):
            state = StateVector(rng.normal(size=3), xi=int(rng.integers(2)))
            m = oracle.to_matrix(hadamard, state)
            for ch in range(2):
                mapped = perturbation_map(hadamard, ch, state)
                b = oracle.control_operators(hadamard)[ch]
                comm = oracle.from_matrix(hadamard, 1j * (b @ m - m @ b))
                assert_allclose(2.0 * mapped.coords, comm.coords, atol=1e-12)


class TestFidelity:
    def test_cnot_fixes_00(self, cnot):
        assert fidelity(cnot, ket00(), ket00()) == pytest.approx(1.0, abs=1e-14)

    def test_cnot_flips_10(self, cnot):
        assert fidelity(cnot, ket10(), ket10()) == pytest.approx(0.0, abs=1e-14)

    def test_hadamard_overlap(self, hadamard):
        up = StateVector([0, 0, 1], xi=1)
        assert fidelity(hadamard, up, up) == pytest.approx(0.5, abs=1e-14)

    def test_requires_unit_trace_initial(self, hadamard):
        with pytest.raises(ValueError):
            fidelity(hadamard, StateVector([0, 0, 1], xi=0), StateVector([0, 0, 1], xi=1))

    @pytest.mark.parametrize("name", ["hadamard", "cnot"])
    def test_matches_matrix_trace(self, name, rng):
        model = make_model(name)
        for _ in range(100):
            initial = sample_initial_state(model, rng)
            final = StateVector(rng.normal(size=model.dim), xi=int(rng.integers(2)))
            direct = fidelity(model, initial, final)
            brute = oracle.fidelity_matrix(
                model, oracle.to_matrix(model, initial), oracle.to_matrix(model, final)
            )
            assert direct == pytest.approx(brute, abs=1e-12)


class TestSampler:
    def test_unit_bloch_norms(self, cnot, rng):
        state = sample_initial_state(cnot, rng)
        m = oracle.to_matrix(cnot, state)
        # purity of each reduced qubit equals 1 for pure product draws
        assert np.trace(m @ m).real == pytest.approx(1.0, abs=1e-12)

    def test_hadamard_norm(self, hadamard, rng):
        state = sample_initial_state(hadamard, rng)
        assert np.linalg.norm(state.coords) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_stream(self, cnot):
        a = sample_initial_state(cnot, np.random.default_rng(99))
        b = sample_initial_state(cnot, np.random.default_rng(99))
        assert_allclose(a.coords, b.coords, atol=0)

    def test_unnormalized_flag(self, hadamard):
        state = sample_initial_state(hadamard, np.random.default_rng(3), normalize=False)
        assert np.linalg.norm(state.coords) != pytest.approx(1.0, abs=1e-6)

    def test_product_state_00(self):
        state = ket00()
        expected = np.zeros(15)
        expected[0] = 1.0
        assert_allclose(state.coords, expected, atol=0)
        assert state.xi == 1

    def test_product_state_matches_kron(self, cnot, rng):
        for _ in range(25):
            b1, b2 = rng.normal(size=3), rng.normal(size=3)
            b1 /= np.linalg.norm(b1)
            b2 /= np.linalg.norm(b2)
            state = product_state(b1, b2)
            rho1 = 0.5 * (oracle.ID2 + b1[0] * oracle.SX + b1[1] * oracle.SY + b1[2] * oracle.SZ)
            rho2 = 0.5 * (oracle.ID2 + b2[0] * oracle.SX + b2[1] * oracle.SY + b2[2] * oracle.SZ)
            assert_allclose(
                oracle.to_matrix(cnot, state), np.kron(rho1, rho2), atol=1e-14
            )


class TestPropagatedInvariants:
    def test_purity_nonincreasing_with_dephasing(self, rng):
        model = cnot_model(gamma_z=0.05)
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(rng.normal(size=(5, 4)))
        state = sample_initial_state(model, rng)
        purities = []
        for i in range(9):
            t0, t1 = i / 8, (i + 1) / 8
            m = oracle.to_matrix(model, state)
            purities.append(np.trace(m @ m).real)
            if i < 8:
                state = propagate(model, params, state, t0, t1, cfg)
        diffs = np.diff(purities)
        assert np.all(diffs <= 1e-12)
        assert purities[-1] < purities[0] - 1e-4

    def test_purity_conserved_without_dephasing(self, cnot, rng):
        cfg = IntegratorConfig(steps_pow2=10)
        params = ControlParams(rng.normal(size=(5, 4)))
        state = sample_initial_state(cnot, rng)
        final = propagate(cnot, params, state, 0.0, 1.0, cfg)
        m0 = oracle.to_matrix(cnot, state)
        m1 = oracle.to_matrix(cnot, final)
        assert np.trace(m1 @ m1).real == pytest.approx(np.trace(m0 @ m0).real, abs=1e-9)

    def test_traceless_object_stays_traceless(self, cnot, rng):
        cfg = IntegratorConfig(steps_pow2=8)
        params = ControlParams(rng.normal(size=(5, 4)))
        state = StateVector(rng.normal(size=15), xi=0)
        final = propagate(cnot, params, state, 0.0, 1.0, cfg)
        assert final.xi == 0
        assert abs(np.trace(oracle.to_matrix(cnot, final))) < 1e-12


class TestTargetQubitBloch:
    def test_ket00_points_up(self, cnot):
        assert_allclose(target_qubit_bloch(cnot, ket00()), [0, 0, 1], atol=0)

    def test_matches_matrix_expectations(self, cnot, rng):
        state = sample_initial_state(cnot, rng)
        m = oracle.to_matrix(cnot, state)
        expected = [
            np.trace(m @ np.kron(oracle.ID2, s)).real
            for s in (oracle.SX, oracle.SY, oracle.SZ)
        ]
        assert_allclose(target_qubit_bloch(cnot, state), expected, atol=1e-13)
