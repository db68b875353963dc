import numpy as np
import pytest

from src.core.exceptions import DimensionMismatch, NotAState
from src.models.hilbert import QuantumState, TensorSpace
from src.models.local import ProductMeasurement
from src.services.entropy_core import observational_entropy
from src.services.hilbert import computational_basis_coarse_graining, product_state
from src.services.local import (
    decomposition_check, entanglement_entropy, marginal_distributions,
    product_observational_entropy, quantum_correlation_entropy, quarrelation_bound_check,
    reduced_states, total_correlation
)
from src.utils.random import random_coarse_graining, random_density_matrix, random_pure_state, random_unitary


@pytest.fixture
def z_product(two_qubits, cz):
    return ProductMeasurement(two_qubits, (cz, cz))


def random_product_measurement(space, rng):
    return ProductMeasurement(space, tuple(random_coarse_graining(d, rng) for d in space.subsystem_dims))


def random_space(rng):
    return TensorSpace(tuple(int(d) for d in rng.integers(2, 4, size=int(rng.integers(2, 4)))))


class TestProductEntropy:
    def test_bell_state(self, bell_state, z_product):
        assert product_observational_entropy(bell_state, z_product) == pytest.approx(np.log(2))
        assert total_correlation(bell_state, z_product) == pytest.approx(np.log(2))
        for marginal in marginal_distributions(bell_state, z_product):
            np.testing.assert_allclose(marginal, [0.5, 0.5], atol=1e-12)

    def test_classically_correlated(self, classically_correlated, z_product):
        assert product_observational_entropy(classically_correlated, z_product) == pytest.approx(np.log(2))
        assert total_correlation(classically_correlated, z_product) == pytest.approx(np.log(2))

    def test_product_state_has_no_correlation(self, rng):
        space = TensorSpace((2, 3))
        a, b = random_density_matrix(2, rng), random_density_matrix(3, rng)
        state = product_state([a, b])
        pm = random_product_measurement(space, rng)
        assert total_correlation(state, pm) == pytest.approx(0.0, abs=1e-12)
        assert product_observational_entropy(state, pm) == pytest.approx(
            observational_entropy(a, pm.local_cgs[0]) + observational_entropy(b, pm.local_cgs[1]), abs=1e-10
        )

    def test_additivity(self, rng):
        for _ in range(100):
            space = random_space(rng)
            locals_ = [random_density_matrix(d, rng) for d in space.subsystem_dims]
            pm = random_product_measurement(space, rng)
            expected = sum(observational_entropy(s, cg) for s, cg in zip(locals_, pm.local_cgs))
            assert product_observational_entropy(product_state(locals_), pm) == pytest.approx(expected, abs=1e-10)

    def test_decomposition(self, rng):
        for _ in range(300):
            space = random_space(rng)
            state = random_density_matrix(space.total_dim, rng)
            assert decomposition_check(state, random_product_measurement(space, rng)) <= 1e-9

    def test_reduced_states_are_states(self, rng):
        space = TensorSpace((2, 3, 2))
        for reduced, dim in zip(reduced_states(random_density_matrix(12, rng), space), space.subsystem_dims):
            assert reduced.dim == dim
            assert np.trace(reduced.matrix).real == pytest.approx(1.0)

    def test_measurement_dimension_mismatch(self, two_qubits):
        with pytest.raises(DimensionMismatch):
            ProductMeasurement(two_qubits, (computational_basis_coarse_graining(2), computational_basis_coarse_graining(3)))

    def test_state_dimension_mismatch(self, z_product):
        with pytest.raises(DimensionMismatch):
            product_observational_entropy(QuantumState.maximally_mixed(3), z_product)


class TestEntanglement:
    def test_bell(self, bell_state, two_qubits):
        assert entanglement_entropy(bell_state, two_qubits) == pytest.approx(np.log(2))

    def test_mixed_state_is_rejected(self, classically_correlated, two_qubits):
        with pytest.raises(NotAState):
            entanglement_entropy(classically_correlated, two_qubits)

    def test_requires_bipartition(self, rng):
        with pytest.raises(DimensionMismatch):
            entanglement_entropy(random_pure_state(8, rng), TensorSpace((2, 2, 2)))


class TestQuantumCorrelationEntropy:
    def test_bell(self, bell_state, two_qubits):
        result = quantum_correlation_entropy(bell_state, two_qubits, restarts=4, seed=1)
        assert result.value == pytest.approx(np.log(2), abs=1e-3)
        assert result.von_neumann == pytest.approx(0.0, abs=1e-12)

    def test_product_state(self, two_qubits):
        plus = QuantumState.from_vector([1, 1])
        state = product_state([QuantumState.from_vector([1, 0]), plus])
        result = quantum_correlation_entropy(state, two_qubits, restarts=4, seed=1)
        assert result.value <= 1e-6

    def test_classically_correlated(self, classically_correlated, two_qubits):
        result = quantum_correlation_entropy(classically_correlated, two_qubits, restarts=4, seed=1)
        assert result.value <= 1e-6

    @pytest.mark.parametrize("dims", [(2, 2), (2, 3)])
    def test_pure_states_match_entanglement(self, rng, dims):
        space = TensorSpace(dims)
        for _ in range(25):
            state = random_pure_state(space.total_dim, rng)
            result = quantum_correlation_entropy(state, space, restarts=4, seed=3)
            assert result.value == pytest.approx(entanglement_entropy(state, space), abs=1e-3)

    @pytest.mark.slow
    def test_fifty_pure_two_qubit_states_at_default_restarts(self):
        rng = np.random.default_rng(8)
        space = TensorSpace((2, 2))
        for _ in range(50):
            state = random_pure_state(4, rng)
            result = quantum_correlation_entropy(state, space, restarts=16, seed=0)
            assert result.value == pytest.approx(entanglement_entropy(state, space), abs=1e-3)

    def test_history_is_monotone(self, rng):
        space = TensorSpace((2, 3))
        result = quantum_correlation_entropy(random_density_matrix(6, rng), space, restarts=3, seed=5)
        assert len(result.optimizer_trace) == 3
        for entry in result.optimizer_trace:
            assert all(b <= a + 1e-15 for a, b in zip(entry.history, entry.history[1:]))
        assert result.achieved_entropy == pytest.approx(min(e.achieved for e in result.optimizer_trace))

    def test_deterministic_for_fixed_seed(self, rng):
        space = TensorSpace((2, 2))
        state = random_density_matrix(4, rng)
        first = quantum_correlation_entropy(state, space, restarts=3, seed=11)
        second = quantum_correlation_entropy(state, space, restarts=3, seed=11)
        assert first.value == second.value
        assert first.best_restart == second.best_restart
        assert [e.history for e in first.optimizer_trace] == [e.history for e in second.optimizer_trace]

    def test_best_measurement_reproduces_value(self, rng):
        space = TensorSpace((2, 2))
        state = random_density_matrix(4, rng)
        result = quantum_correlation_entropy(state, space, restarts=2, seed=2)
        assert product_observational_entropy(state, result.best_measurement) == pytest.approx(
            result.achieved_entropy, abs=1e-10
        )

    def test_local_unitary_invariance(self, rng):
        space = TensorSpace((2, 2))
        state = random_density_matrix(4, rng)
        u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
        rotated = QuantumState(u @ state.matrix @ u.conj().T, validate=False)
        a = quantum_correlation_entropy(state, space, restarts=4, seed=0)
        b = quantum_correlation_entropy(rotated, space, restarts=4, seed=0)
        assert a.value == pytest.approx(b.value, abs=1e-3)

    def test_bound(self, rng):
        space = TensorSpace((2, 2))
        state = random_density_matrix(4, rng)
        result = quantum_correlation_entropy(state, space, restarts=4, seed=0)
        for _ in range(100):
            assert quarrelation_bound_check(state, random_product_measurement(space, rng), result)

    def test_requires_two_subsystems(self, rng):
        with pytest.raises(DimensionMismatch):
            quantum_correlation_entropy(random_density_matrix(2, rng), TensorSpace((2,)))
