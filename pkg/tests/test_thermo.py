import json
from pathlib import Path

import numpy as np
import pytest

from src.core.exceptions import ConfigError, DimensionMismatch, EmptyShell, ResourceCapExceeded
from src.models.hilbert import Observable, QuantumState
from src.models.thermo import EnsembleKind, EnsembleSpec, QuenchScenario
from src.schemas.scenario import ENTROPY_IDS, ModelConfig, ScenarioConfig
from src.services.entropy_core import observational_entropy, von_neumann_entropy
from src.services.hilbert import product_state
from src.services.local import quantum_correlation_entropy
from src.services.thermo import (
    ThermoService, average_tail, build_model, domain_wall_state, embed_local_operator, embed_state,
    ensemble_state, entropy_1a, entropy_1b, entropy_1c, entropy_2a, entropy_2b, entropy_2c,
    entropy_3a, entropy_3b, entropy_4, evolve, general_conserved_entropy,
    microcanonical_entropy, nonequilibrium_bound_check, run_quench
)
from src.utils.linalg import block_eigh
from src.utils.random import random_density_matrix

SCENARIOS = Path(__file__).parent.parent / "scenarios"


def shell_bins(values: np.ndarray, width: float) -> np.ndarray:
    return np.floor((values - values.min()) / width + 1e-9).astype(int)


class TestModel:
    def test_two_site_hamiltonian(self):
        model = build_model(ModelConfig(sites=2, particles=1))
        np.testing.assert_allclose(model.hamiltonian, [[0.0, -1.0], [-1.0, 0.0]])

    def test_conserves_particle_number(self, chain8):
        n = chain8.number_operator
        assert np.max(np.abs(chain8.hamiltonian @ n - n @ chain8.hamiltonian)) < 1e-12

    def test_local_terms_and_boundary_sum_to_hamiltonian(self, chain8, chain6_disordered):
        for model in (chain8, chain6_disordered):
            total = model.boundary + sum(
                embed_local_operator(model, k, h) for k, h in enumerate(model.local_hamiltonians)
            )
            np.testing.assert_allclose(total, model.hamiltonian, atol=1e-12)

    def test_boundary_couples_cells(self, chain8):
        assert chain8.boundary_norm > 0
        single = build_model(ModelConfig(sites=4, particles=2, hopping_nnn=0.3, cells=1))
        assert single.boundary_norm == 0

    def test_sector_dimension(self, chain8):
        assert chain8.dim == 70
        assert chain8.cell_space.subsystem_dims == (16, 16)

    def test_site_cap(self):
        with pytest.raises(ResourceCapExceeded):
            build_model(ModelConfig(sites=17, particles=1))

    def test_dimension_cap(self, monkeypatch):
        from src.core.config import settings
        monkeypatch.setattr(settings, "MAX_DIM", 10)
        with pytest.raises(ResourceCapExceeded):
            build_model(ModelConfig(sites=6, particles=3))

    def test_domain_wall(self, chain8):
        state = domain_wall_state(chain8, "11110000")
        assert np.sum(np.diag(state.matrix).real * chain8.particle_counts) == pytest.approx(4)

    @pytest.mark.parametrize("occupation", ["1111000", "11100000", "1111000x"])
    def test_domain_wall_rejects(self, chain8, occupation):
        with pytest.raises(ConfigError):
            domain_wall_state(chain8, occupation)


class TestEvolution:
    def test_zero_time_is_identity(self, chain8):
        state = domain_wall_state(chain8, "11110000")
        np.testing.assert_allclose(evolve(chain8, state, 0.0).matrix, state.matrix, atol=1e-12)

    def test_energy_is_conserved(self, chain8):
        state = domain_wall_state(chain8, "11110000")
        h = chain8.hamiltonian
        e0 = np.trace(state.matrix @ h).real
        for t in (0.5, 3.0, 17.0):
            assert np.trace(evolve(chain8, state, t).matrix @ h).real == pytest.approx(e0, abs=1e-10)

    def test_equilibrium_entropy_is_constant(self, chain8):
        state = domain_wall_state(chain8, "11110000")
        service = ThermoService(chain8)
        values = [service.entropy(evolve(chain8, state, t), "1c") for t in np.linspace(0, 20, 50)]
        assert np.ptp(values) <= 1e-8

    def test_pure_state_evolves_as_vector(self, chain8):
        pure = domain_wall_state(chain8, "11110000")
        dense = QuantumState(pure.matrix, validate=False)
        a, b = evolve(chain8, pure, 3.1), evolve(chain8, dense, 3.1)
        assert a.vector is not None and b.vector is None
        np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-12)
        service = ThermoService(chain8)
        for entropy_id in ("1c", "2c", "3a", "3b"):
            assert service.entropy(a, entropy_id) == pytest.approx(service.entropy(b, entropy_id), abs=1e-10)

    def test_dimension_mismatch(self, chain8):
        with pytest.raises(DimensionMismatch):
            evolve(chain8, QuantumState.maximally_mixed(3), 1.0)


class TestEnsembles:
    def test_canonical_energy_decreases_with_beta(self, chain8):
        energies = [
            np.trace(ensemble_state(chain8, EnsembleSpec(EnsembleKind.CANONICAL, beta=b)).matrix
                     @ chain8.hamiltonian).real
            for b in (0.1, 1.0, 10.0)
        ]
        assert energies[0] > energies[1] > energies[2]
        assert energies[2] >= chain8.spectrum[0].min() - 1e-10

    def test_grandcanonical_filling_grows_with_mu(self):
        model = build_model(ModelConfig(sites=4, interaction=0.5, cells=2))
        fillings = [
            np.trace(ensemble_state(model, EnsembleSpec(EnsembleKind.GRANDCANONICAL, beta=2.0, mu=mu)).matrix
                     @ model.number_operator).real
            for mu in (-2.0, 0.0, 2.0)
        ]
        assert fillings[0] < fillings[1] < fillings[2]

    def test_microcanonical_entropy(self, chain8):
        values = chain8.spectrum[0]
        energy, width = float(values[20]), 0.5
        state = ensemble_state(chain8, EnsembleSpec(EnsembleKind.MICROCANONICAL, energy=energy, width=width))
        count = int(np.sum((values >= energy - 1e-9) & (values < energy + width - 1e-9)))
        assert von_neumann_entropy(state) == pytest.approx(np.log(count))
        assert microcanonical_entropy(chain8, energy, width) == pytest.approx(np.log(count))
        assert microcanonical_entropy(chain8, energy, width, particles=4) == pytest.approx(np.log(count))

    def test_volume_microcanonical_counts_from_ground(self, chain8):
        values = chain8.spectrum[0]
        state = ensemble_state(chain8, EnsembleSpec(EnsembleKind.VOLUME_MICROCANONICAL, energy=1.0))
        count = int(np.sum(values - values.min() < 1.0))
        assert von_neumann_entropy(state) == pytest.approx(np.log(count))

    def test_empty_shell(self, chain8):
        with pytest.raises(EmptyShell):
            ensemble_state(chain8, EnsembleSpec(EnsembleKind.MICROCANONICAL, energy=1e3, width=1.0))
        with pytest.raises(EmptyShell):
            microcanonical_entropy(chain8, 1e3, 1.0)

    def test_non_positive_beta(self, chain8):
        with pytest.raises(ConfigError):
            ensemble_state(chain8, EnsembleSpec(EnsembleKind.CANONICAL, beta=0.0))

    def test_large_beta_populates_ground_space(self, chain8):
        values, vectors, _ = chain8.spectrum
        ground = values - values[0] <= 1e-9
        gap = float(values[~ground][0] - values[0])
        state = ensemble_state(chain8, EnsembleSpec(EnsembleKind.CANONICAL, beta=20.0 / gap))
        populations = np.einsum("ia,ij,ja->a", vectors.conj(), state.matrix, vectors).real
        assert populations[~ground].max() <= 1e-6
        assert populations[ground].sum() == pytest.approx(1.0, abs=1e-6)

    def test_eigenstate_entropy_is_log_shell_count(self, chain8):
        service = ThermoService(chain8)
        values, vectors, _ = chain8.spectrum
        bins = shell_bins(values, service.delta_e)
        for a in range(chain8.dim):
            eigenstate = QuantumState.from_vector(vectors[:, a])
            expected = np.log(np.sum(bins == bins[a]))
            assert service.entropy(eigenstate, "1c") == pytest.approx(expected, abs=1e-9)


class TestThermodynamicEntropies:
    def test_maximally_mixed_saturates_all(self, chain8):
        state = QuantumState.maximally_mixed(chain8.dim)
        for entropy_id, value in ThermoService(chain8).entropies(state).items():
            assert value == pytest.approx(np.log(chain8.dim), abs=1e-9), entropy_id

    def test_hierarchy_along_quench(self, chain8):
        service = ThermoService(chain8)
        initial = domain_wall_state(chain8, "11110000")
        for t in (0.0, 0.7, 4.0, 25.0):
            s = service.entropies(evolve(chain8, initial, t))
            assert s["3a"] <= s["2a"] + 1e-9
            assert s["3b"] <= s["1b"] + 1e-9
            assert s["1c"] <= s["1b"] + 1e-9
            assert s["2c"] <= s["2a"] + 1e-9
            assert all(-1e-9 <= v <= np.log(chain8.dim) + 1e-9 for v in s.values())

    def test_number_entropy_vanishes_in_sector(self, chain8):
        state = domain_wall_state(chain8, "11110000")
        assert entropy_1a(state, chain8) == pytest.approx(0.0, abs=1e-12)

    def test_local_eigenstate_product(self, chain8):
        service = ThermoService(chain8)
        factors, expected = [], 0.0
        for h, counts in zip(chain8.local_hamiltonians, chain8.local_particle_counts):
            values, vectors, owners = block_eigh(h, counts)
            a = int(np.flatnonzero(owners == 2)[0])
            bins = shell_bins(values, service.delta_e)
            factors.append(vectors[:, a])
            expected += np.log(np.sum((bins == bins[a]) & (owners == 2)))
        vector = np.kron(factors[0], factors[1])[chain8.configurations]
        state = QuantumState.from_vector(vector)
        assert service.entropy(state, "2c") == pytest.approx(expected, abs=1e-9)

    def test_zero_shell_width(self, chain6_disordered):
        service = ThermoService(chain6_disordered, delta_e=0.0)
        state = evolve(chain6_disordered, domain_wall_state(chain6_disordered, "111000"), 1.3)
        assert service.entropy(state, "2b") == pytest.approx(service.entropy(state, "2c"), abs=1e-9)

    def test_gibbs_state_at_zero_width(self, chain8):
        gibbs = ensemble_state(chain8, EnsembleSpec(EnsembleKind.CANONICAL, beta=0.7))
        assert ThermoService(chain8, delta_e=0.0).entropy(gibbs, "1b") == pytest.approx(
            von_neumann_entropy(gibbs), abs=1e-8
        )

    def test_grandcanonical_state_at_zero_width(self):
        model = build_model(ModelConfig(sites=6, interaction=0.5, hopping_nnn=0.3, cells=2))
        state = ensemble_state(model, EnsembleSpec(EnsembleKind.GRANDCANONICAL, beta=0.8, mu=0.3))
        assert ThermoService(model, delta_e=0.0).entropy(state, "1c") == pytest.approx(
            von_neumann_entropy(state), abs=1e-8
        )

    def test_nonequilibrium_entropy_is_additive_over_cells(self, rng):
        model = build_model(ModelConfig(sites=4, interaction=0.5, cells=2))
        service = ThermoService(model)
        cell_states = [random_density_matrix(4, rng) for _ in model.cells]
        expected = sum(
            observational_entropy(rho, [n, e])
            for rho, n, e in zip(cell_states, service.local_number_parts, service.local_energy_parts)
        )
        assert service.entropy(product_state(cell_states), "2c") == pytest.approx(expected, abs=1e-9)

    def test_wrappers_match_service(self, chain8):
        state = evolve(chain8, domain_wall_state(chain8, "11110000"), 2.0)
        service = ThermoService(chain8)
        wrappers = {
            "1a": entropy_1a, "1b": entropy_1b, "1c": entropy_1c, "2a": entropy_2a, "2b": entropy_2b,
            "2c": entropy_2c, "3a": entropy_3a, "3b": entropy_3b, "4": entropy_4,
        }
        for entropy_id, wrapper in wrappers.items():
            assert wrapper(state, chain8) == pytest.approx(service.entropy(state, entropy_id), abs=1e-12)

    def test_system_coarse_graining_dimension(self, chain8, cz):
        with pytest.raises(DimensionMismatch):
            ThermoService(chain8, system_cg=cz)

    def test_unknown_entropy(self, chain8):
        with pytest.raises(ConfigError):
            ThermoService(chain8).sequence("5")


class TestGeneralConservedEntropy:
    def test_number_and_energy(self, chain8):
        service = ThermoService(chain8)
        state = evolve(chain8, domain_wall_state(chain8, "11110000"), 3.0)
        local_numbers = [Observable(np.diag(n.astype(float))) for n in chain8.local_particle_counts]
        local_energies = [Observable(h) for h in chain8.local_hamiltonians]
        equilibrium, nonequilibrium = general_conserved_entropy(
            state, chain8,
            [Observable(chain8.number_operator), Observable(chain8.hamiltonian)],
            widths=[0.0, service.delta_e],
            local_variants=[local_numbers, local_energies],
        )
        assert equilibrium == pytest.approx(service.entropy(state, "1c"), abs=1e-9)
        assert nonequilibrium == pytest.approx(service.entropy(state, "2c"), abs=1e-9)

    def test_energy_only(self, chain8):
        service = ThermoService(chain8)
        state = domain_wall_state(chain8, "11110000")
        equilibrium, nonequilibrium = general_conserved_entropy(
            state, chain8, [Observable(chain8.hamiltonian)], widths=[service.delta_e]
        )
        assert nonequilibrium is None
        assert equilibrium == pytest.approx(service.entropy(state, "1b"), abs=1e-9)

    def test_width_count_mismatch(self, chain8):
        state = domain_wall_state(chain8, "11110000")
        with pytest.raises(ConfigError):
            general_conserved_entropy(state, chain8, [Observable(chain8.hamiltonian)], widths=[0.1, 0.2])


class TestNonequilibriumBound:
    @pytest.fixture
    def small_chain(self):
        return build_model(ModelConfig(
            sites=4, particles=2, hopping=1.0, hopping_nnn=0.32, interaction=1.0, cells=2
        ))

    def test_embedded_state(self, small_chain):
        state = evolve(small_chain, domain_wall_state(small_chain, "1100"), 0.8)
        full = embed_state(small_chain, state)
        assert full.dim == 16
        assert np.trace(full.matrix).real == pytest.approx(1.0)
        assert von_neumann_entropy(full) == pytest.approx(von_neumann_entropy(state), abs=1e-9)

    def test_local_observer_sees_correlations(self, small_chain):
        state = evolve(small_chain, domain_wall_state(small_chain, "1100"), 1.3)
        qce = quantum_correlation_entropy(
            embed_state(small_chain, state), small_chain.cell_space, restarts=8, seed=0
        )
        assert qce.value > 1e-3
        assert nonequilibrium_bound_check(state, small_chain, qce)

    def test_partition_mismatch(self, small_chain, bell_state, two_qubits):
        qce = quantum_correlation_entropy(bell_state, two_qubits, restarts=1, seed=0)
        state = domain_wall_state(small_chain, "1100")
        with pytest.raises(DimensionMismatch):
            nonequilibrium_bound_check(state, small_chain, qce)


class TestQuench:
    @pytest.fixture
    def small_scenario(self, chain8):
        return QuenchScenario(
            model=chain8,
            initial_state=domain_wall_state(chain8, "11110000"),
            times=(0.0, 1.0, 2.0, 5.0),
        )

    def test_table_shape(self, small_scenario, chain8):
        result = run_quench(small_scenario)
        assert len(result.table) == 4 * len(ENTROPY_IDS)
        assert list(result.table.columns) == ["t", "entropy_id", "value"]
        assert result.metadata["ln_dim"] == pytest.approx(np.log(chain8.dim))
        assert result.metadata["von_neumann"] == pytest.approx(0.0, abs=1e-12)
        assert (result.table["value"] >= -1e-9).all()
        assert (result.table["value"] <= np.log(chain8.dim) + 1e-9).all()

    def test_equilibrium_row_is_flat(self, small_scenario):
        table = run_quench(small_scenario).table
        assert np.ptp(table[table["entropy_id"] == "1c"]["value"]) <= 1e-8

    def test_single_time_matches_direct_calls(self, chain8):
        initial = domain_wall_state(chain8, "11110000")
        result = run_quench(QuenchScenario(model=chain8, initial_state=initial, times=(0.0,)))
        direct = ThermoService(chain8).entropies(initial)
        for row in result.table.itertuples():
            assert row.value == pytest.approx(direct[row.entropy_id], abs=1e-12)

    def test_selection_keeps_canonical_order(self, chain8):
        scenario = QuenchScenario(
            model=chain8, initial_state=domain_wall_state(chain8, "11110000"),
            times=(0.0,), entropies=("2c", "1a"),
        )
        assert list(run_quench(scenario).table["entropy_id"]) == ["1a", "2c"]

    def test_decreasing_times(self, chain8):
        scenario = QuenchScenario(
            model=chain8, initial_state=domain_wall_state(chain8, "11110000"), times=(1.0, 0.5),
        )
        with pytest.raises(ConfigError):
            run_quench(scenario)


class TestAverageTail:
    def test_window(self):
        assert average_tail([1.0, 2.0, 3.0, 4.0], 0.5) == pytest.approx(3.5)
        assert average_tail([1.0, 2.0, 3.0, 4.0], 0.01) == pytest.approx(4.0)

    @pytest.mark.parametrize("window", [0.0, 1.5])
    def test_invalid_window(self, window):
        with pytest.raises(ConfigError):
            average_tail([1.0], window)


@pytest.mark.slow
def test_reference_quench_thermalizes():
    config = ScenarioConfig.model_validate(json.loads((SCENARIOS / "reference_quench.json").read_text()))
    model = build_model(config.resolved_model())
    result = run_quench(QuenchScenario(
        model=model,
        initial_state=domain_wall_state(model, config.initial_state),
        times=tuple(config.time_values()),
        entropies=("1c", "2a", "2c", "3a"),
    ))
    series = {e: g.sort_values("t")["value"].to_numpy() for e, g in result.table.groupby("entropy_id")}
    equilibrium = float(series["1c"].mean())
    tail = average_tail(series["2c"])
    assert abs(tail - equilibrium) / equilibrium <= 0.15
    assert tail <= equilibrium + 0.05 * result.metadata["ln_dim"]
    assert np.max(series["3a"] - series["2a"]) <= 1e-9
    assert series["2c"][0] < tail
