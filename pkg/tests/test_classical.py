import itertools

import numpy as np
import pytest

from src.core.exceptions import ConfigError, NotADensity, PartitionMismatch, ZeroDensity
from src.models.classical import ClassicalCoarseGraining, ClassicalSpace, PhaseSpaceGrid
from src.models.hilbert import CoarseGraining, QuantumState
from src.services.classical import (
    build_phase_space, cell_assignment, classical_kl_identity, classical_macrostate_distribution,
    classical_observational_entropy, gibbs_entropy, induced_classical_coarse_graining,
    induced_classical_space
)
from src.services.entropy_core import observational_entropy


def random_space(rng, size, uniform=False):
    weights = np.ones(size) if uniform else rng.uniform(0.5, 2.0, size=size)
    density = rng.random(size)
    density /= np.dot(density, weights)
    return ClassicalSpace(tuple(range(size)), weights, density)


def random_partition(rng, size, max_cells=4):
    return ClassicalCoarseGraining.from_assignment(rng.integers(0, max_cells, size=size).tolist())


def diagonal_coarse_graining(cg: ClassicalCoarseGraining, dim: int) -> CoarseGraining:
    matrices = []
    for cell in cg.cells:
        diagonal = np.zeros(dim)
        diagonal[list(cell)] = 1.0
        matrices.append(np.diag(diagonal))
    return CoarseGraining.from_matrices(matrices, labels=list(cg.labels))


class TestSpace:
    def test_rejects_unnormalized(self):
        with pytest.raises(NotADensity):
            ClassicalSpace((0, 1), np.ones(2), np.array([0.5, 0.6]))

    def test_rejects_negative_density(self):
        with pytest.raises(NotADensity):
            ClassicalSpace((0, 1), np.ones(2), np.array([1.2, -0.2]))

    def test_rejects_non_positive_weight(self):
        with pytest.raises(NotADensity):
            ClassicalSpace((0, 1), np.array([1.0, 0.0]), np.array([1.0, 0.0]))

    def test_length_mismatch(self):
        with pytest.raises(NotADensity):
            ClassicalSpace((0, 1, 2), np.ones(2), np.array([0.5, 0.5]))


class TestPartitions:
    def test_overlapping_cells(self):
        space = ClassicalSpace.uniform(3)
        with pytest.raises(PartitionMismatch):
            cell_assignment(space, ClassicalCoarseGraining(((0, 1), (1, 2))))

    def test_uncovered_point(self):
        space = ClassicalSpace.uniform(3)
        with pytest.raises(PartitionMismatch):
            cell_assignment(space, ClassicalCoarseGraining(((0, 1),)))

    def test_unknown_point(self):
        space = ClassicalSpace.uniform(2)
        with pytest.raises(PartitionMismatch):
            cell_assignment(space, ClassicalCoarseGraining(((0,), (1, 5))))

    def test_label_count(self):
        with pytest.raises(PartitionMismatch):
            ClassicalCoarseGraining(((0,), (1,)), ("a",))

    def test_from_assignment_groups_points(self):
        cg = ClassicalCoarseGraining.from_assignment(["b", "a", "b"])
        assert cg.labels == ("a", "b")
        assert cg.cells == ((1,), (0, 2))


class TestEntropy:
    def test_intersection_volumes(self):
        space = ClassicalSpace.uniform(4)
        halves = ClassicalCoarseGraining(((0, 1), (2, 3)))
        parity = ClassicalCoarseGraining(((0, 2), (1, 3)))
        macro = classical_macrostate_distribution(space, [halves, parity])
        np.testing.assert_allclose(macro.volumes, [1, 1, 1, 1])
        np.testing.assert_allclose(macro.probabilities, [0.25] * 4)

    def test_no_coarse_graining_gives_log_measure(self, rng):
        space = random_space(rng, 6)
        assert classical_observational_entropy(space, []) == pytest.approx(np.log(space.total_measure))

    def test_order_invariance(self, rng):
        for _ in range(100):
            size = int(rng.integers(2, 12))
            space = random_space(rng, size)
            cgs = [random_partition(rng, size) for _ in range(3)]
            reference = classical_observational_entropy(space, cgs)
            for order in itertools.permutations(cgs):
                assert classical_observational_entropy(space, list(order)) == pytest.approx(reference, abs=1e-12)

    def test_finest_partition_gives_gibbs(self, rng):
        space = random_space(rng, 7)
        finest = ClassicalCoarseGraining.from_assignment(list(range(7)))
        assert classical_observational_entropy(space, [finest]) == pytest.approx(gibbs_entropy(space), abs=1e-12)

    def test_bounds_and_kl_identity(self, rng):
        for _ in range(100):
            size = int(rng.integers(2, 10))
            space = random_space(rng, size)
            cgs = [random_partition(rng, size) for _ in range(int(rng.integers(1, 3)))]
            entropy, kl, residual = classical_kl_identity(space, cgs)
            assert residual <= 1e-10
            assert kl >= -1e-12
            assert gibbs_entropy(space) - 1e-10 <= entropy <= np.log(space.total_measure) + 1e-10


class TestQuantumCorrespondence:
    def test_diagonal_states_match(self, rng):
        for _ in range(100):
            dim = int(rng.integers(2, 9))
            space = random_space(rng, dim, uniform=True)
            state = QuantumState(np.diag(space.density))
            cgs = [random_partition(rng, dim) for _ in range(int(rng.integers(1, 4)))]
            quantum = [diagonal_coarse_graining(cg, dim) for cg in cgs]
            assert classical_observational_entropy(space, cgs) == pytest.approx(
                observational_entropy(state, quantum), abs=1e-12
            )

    def test_induced_objects(self, rng):
        state = QuantumState(np.diag([0.5, 0.25, 0.25, 0.0]))
        cg = CoarseGraining.from_matrices([np.diag([1.0, 1.0, 0, 0]), np.diag([0, 0, 1.0, 1.0])])
        space = induced_classical_space(state)
        classical_cg = induced_classical_coarse_graining(cg)
        assert classical_cg.cells == ((0, 1), (2, 3))
        assert classical_observational_entropy(space, [classical_cg]) == pytest.approx(
            observational_entropy(state, cg), abs=1e-12
        )

    def test_non_diagonal_state_is_rejected(self, bell_state):
        with pytest.raises(NotADensity):
            induced_classical_space(bell_state)

    def test_non_diagonal_projector_is_rejected(self, cx):
        with pytest.raises(PartitionMismatch):
            induced_classical_coarse_graining(cx)


class TestPhaseSpace:
    def test_cell_measure(self):
        grid = PhaseSpaceGrid(1, ((0, 1, 2), (0, 1, 2), (0, 1, 2), (-1, 1, 4), (-1, 1, 4), (-1, 1, 4)), 0.5)
        assert grid.cell_measure == pytest.approx((0.5 ** 3 * 0.5 ** 3) / 0.5 ** 3)

    def test_uniform_density_is_normalized(self):
        grid = PhaseSpaceGrid(1, ((0, 1, 3), (-1, 1, 4)), 1.0)
        space = build_phase_space(grid, lambda point: 1.0)
        assert space.size == 12
        assert float(np.dot(space.density, space.weights)) == pytest.approx(1.0)
        assert gibbs_entropy(space) == pytest.approx(np.log(space.total_measure))

    def test_zero_density(self):
        grid = PhaseSpaceGrid(1, ((0, 1, 3),), 1.0)
        with pytest.raises(ZeroDensity):
            build_phase_space(grid, lambda point: 0.0)

    def test_invalid_grid(self):
        with pytest.raises(ConfigError):
            PhaseSpaceGrid(1, ((1, 0, 3),), 1.0)
        with pytest.raises(ConfigError):
            PhaseSpaceGrid(1, ((0, 1, 3),), -1.0)
