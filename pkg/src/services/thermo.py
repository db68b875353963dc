"""
Термодинамические огрубления и энтропии на цепочке жестких бозонов:
глобальные и локальные огрубления по числу частиц и энергии, ансамбли,
точная эволюция во времени и эксперимент с квенчем.
"""
from collections import namedtuple
from functools import cached_property, lru_cache, partial
import math
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
import pandas as pd

from src.core.config import settings
from src.core.exceptions import ConfigError, DimensionMismatch, EmptyShell, ResourceCapExceeded
from src.models.entropy import MeasurementSequence
from src.models.hilbert import CoarseGraining, Observable, QuantumState
from src.models.local import QceResult
from src.models.thermo import (
    EnsembleKind, EnsembleSpec, LatticeModel, QuenchResult, QuenchScenario
)
from src.schemas.scenario import ENTROPY_IDS, ModelConfig
from src.services.entropy_core import observational_entropy, von_neumann_entropy
from src.services.hilbert import (
    coarse_graining_from_observable, computational_basis_coarse_graining,
    energy_shell_coarse_graining, energy_shell_from_spectrum, tensor_product_coarse_graining
)
from src.utils.linalg import block_eigh, hermitize, kron_all, spectral_range
from src.utils.logger import thermo_logger as logger

Term = namedtuple("Term", ["kind", "sites", "amplitude"])


# === Построение модели ===

def _model_terms(config: ModelConfig) -> List[Term]:
    L = config.sites
    terms = []
    for i in range(L - 1):
        if config.hopping:
            terms.append(Term("hop", (i, i + 1), -config.hopping))
        if config.interaction:
            terms.append(Term("density", (i, i + 1), config.interaction))
    for i in range(L - 2):
        if config.hopping_nnn:
            terms.append(Term("hop", (i, i + 2), -config.hopping_nnn))
    for i, mu in enumerate(config.potentials or []):
        if mu:
            terms.append(Term("potential", (i,), mu))
    return terms


def _assemble(configurations: np.ndarray, n_sites: int, terms: Sequence[Term]) -> np.ndarray:
    """Матрица суммы слагаемых в базисе заданных конфигураций заполнений"""
    index = {int(c): k for k, c in enumerate(configurations)}
    dim = len(configurations)
    h = np.zeros((dim, dim))

    def bit(i: int) -> int:
        return 1 << (n_sites - 1 - i)

    for k, c in enumerate(configurations):
        c = int(c)
        for term in terms:
            if term.kind == "potential":
                if c & bit(term.sites[0]):
                    h[k, k] += term.amplitude
            elif term.kind == "density":
                if c & bit(term.sites[0]) and c & bit(term.sites[1]):
                    h[k, k] += term.amplitude
            else:
                bi, bj = bit(term.sites[0]), bit(term.sites[1])
                if bool(c & bi) != bool(c & bj):
                    h[index[c ^ (bi | bj)], k] += term.amplitude
    return h


def sector_configurations(sites: int, particles: Optional[int]) -> np.ndarray:
    configs = np.arange(2 ** sites)
    if particles is None:
        return configs
    return np.array([c for c in configs if bin(int(c)).count("1") == particles], dtype=int)


def build_model(config: ModelConfig) -> LatticeModel:
    """
    Гамильтониан с прыжками J (ближайшие соседи), J′ (следующие за ближайшими),
    взаимодействием U n_i n_{i+1} и потенциалами на узлах.

    Локальный гамильтониан ячейки содержит только слагаемые целиком внутри
    ячейки; слагаемые через границу ячеек хранятся отдельно в boundary.
    """
    if config.sites > settings.MAX_SITES:
        raise ResourceCapExceeded(
            "Число узлов превышает допустимое",
            details={"sites": config.sites, "max_sites": settings.MAX_SITES}
        )
    sizes = config.cell_sizes()
    if any(s < 1 for s in sizes):
        raise ConfigError("Ячейки разбиения должны быть непустыми", details={"cells": sizes})
    configurations = sector_configurations(config.sites, config.particles)
    if len(configurations) > settings.MAX_DIM:
        raise ResourceCapExceeded(
            "Размерность модели превышает допустимую",
            details={"dim": len(configurations), "max_dim": settings.MAX_DIM}
        )
    if not len(configurations):
        raise ConfigError("Пустой сектор числа частиц")

    starts = np.cumsum([0] + sizes[:-1])
    cells = tuple(tuple(range(s, s + n)) for s, n in zip(starts, sizes))
    owner = {site: k for k, cell in enumerate(cells) for site in cell}

    terms = _model_terms(config)
    inside = [t for t in terms if len({owner[s] for s in t.sites}) == 1]
    crossing = [t for t in terms if len({owner[s] for s in t.sites}) > 1]

    hamiltonian = _assemble(configurations, config.sites, terms)
    boundary = _assemble(configurations, config.sites, crossing)
    local = []
    for k, cell in enumerate(cells):
        shifted = [
            Term(t.kind, tuple(s - cell[0] for s in t.sites), t.amplitude)
            for t in inside if owner[t.sites[0]] == k
        ]
        local.append(_assemble(np.arange(2 ** len(cell)), len(cell), shifted))

    model = LatticeModel(
        sites=config.sites,
        particles=config.particles,
        hopping=config.hopping,
        hopping_nnn=config.hopping_nnn,
        interaction=config.interaction,
        potentials=tuple(config.potentials or [0.0] * config.sites),
        cells=cells,
        configurations=configurations,
        hamiltonian=hamiltonian,
        boundary=boundary,
        local_hamiltonians=tuple(local),
    )
    n = model.particle_counts
    commutator = float(np.max(np.abs(hamiltonian * (n[None, :] - n[:, None])))) if model.dim else 0.0
    if commutator > 1e-10:
        raise ConfigError("Гамильтониан не сохраняет число частиц", details={"commutator": commutator})
    logger.info(
        f"Модель: L={config.sites}, N={config.particles}, dim={model.dim}, "
        f"ячейки={list(model.cell_volumes)}, ||H_boundary||={model.boundary_norm:.4f}"
    )
    return model


def embed_local_operator(model: LatticeModel, cell: int, operator: np.ndarray) -> np.ndarray:
    """I ⊗ ... ⊗ O_cell ⊗ ... ⊗ I, суженный на базис модели"""
    factors = [
        operator if k == cell else np.eye(d)
        for k, d in enumerate(model.cell_space.subsystem_dims)
    ]
    rows = model.configurations
    return kron_all(factors)[np.ix_(rows, rows)]


def domain_wall_state(model: LatticeModel, occupation: str) -> QuantumState:
    """Чистое состояние-конфигурация, например "111111000000" (узел 0 слева)"""
    if len(occupation) != model.sites or set(occupation) - {"0", "1"}:
        raise ConfigError(
            "Строка заполнений не соответствует модели",
            details={"occupation": occupation, "sites": model.sites}
        )
    config = int(occupation, 2)
    k = int(np.searchsorted(model.configurations, config))
    if k >= model.dim or model.configurations[k] != config:
        raise ConfigError(
            "Конфигурация вне сектора модели",
            details={"occupation": occupation, "particles": model.particles}
        )
    vector = np.zeros(model.dim)
    vector[k] = 1.0
    return QuantumState.from_vector(vector)


# === Эволюция и ансамбли ===

def _check_state(model: LatticeModel, state: QuantumState) -> None:
    if state.dim != model.dim:
        raise DimensionMismatch(
            "Размерность состояния не совпадает с моделью",
            details={"state_dim": state.dim, "model_dim": model.dim}
        )


def _evolve_rotated(model: LatticeModel, rotated: np.ndarray, t: float) -> QuantumState:
    values, vectors, _ = model.spectrum
    phases = np.exp(-1j * values * t)
    r_t = phases[:, None] * rotated * phases.conj()[None, :]
    return QuantumState(hermitize(vectors @ r_t @ vectors.conj().T), validate=False)


def _evolve_vector(model: LatticeModel, coefficients: np.ndarray, t: float) -> QuantumState:
    values, vectors, _ = model.spectrum
    return QuantumState.from_vector(vectors @ (np.exp(-1j * values * t) * coefficients))


def evolve(model: LatticeModel, state: QuantumState, t: float) -> QuantumState:
    """ρ(t) = e^{-iĤt} ρ e^{iĤt} через кэшированный собственный базис"""
    _check_state(model, state)
    vectors = model.spectrum[1]
    if state.vector is not None:
        return _evolve_vector(model, vectors.conj().T @ state.vector, t)
    return _evolve_rotated(model, vectors.conj().T @ state.matrix @ vectors, t)


def _shell_mask(values: np.ndarray, energy: float, width: float) -> np.ndarray:
    slack = 1e-9 * max(1.0, abs(energy))
    if width == 0:
        return np.abs(values - energy) <= slack
    return (values >= energy - slack) & (values < energy + width - slack)


def ensemble_state(model: LatticeModel, spec: EnsembleSpec) -> QuantumState:
    """
    Ансамблевое состояние, диагональное в собственном базисе Ĥ.

    Окно микроканонического ансамбля [E, E + ΔE) задается в абсолютной
    энергии; объемный микроканонический ансамбль берет все уровни ниже
    E_0 + E, где E_0 - энергия основного состояния.
    """
    values, vectors, owners = model.spectrum
    if spec.kind == EnsembleKind.MICROCANONICAL:
        if spec.energy is None or spec.width is None or spec.width < 0:
            raise ConfigError("Микроканоническому ансамблю нужны energy и width ≥ 0")
        weights = _shell_mask(values, spec.energy, spec.width).astype(float)
    elif spec.kind == EnsembleKind.VOLUME_MICROCANONICAL:
        if spec.energy is None:
            raise ConfigError("Объемному микроканоническому ансамблю нужна energy")
        weights = (values - values.min() < spec.energy).astype(float)
    elif spec.kind in (EnsembleKind.CANONICAL, EnsembleKind.GRANDCANONICAL):
        if spec.beta is None or spec.beta <= 0:
            raise ConfigError("Обратная температура должна быть положительной", details={"beta": spec.beta})
        exponent = values.copy()
        if spec.kind == EnsembleKind.GRANDCANONICAL:
            if spec.mu is None:
                raise ConfigError("Большому каноническому ансамблю нужен mu")
            exponent = exponent - spec.mu * owners
        weights = np.exp(-spec.beta * (exponent - exponent.min()))
    else:
        raise ConfigError(f"Неизвестный ансамбль: {spec.kind}")

    z = float(weights.sum())
    if z <= 0:
        raise EmptyShell(
            "В заданном окне нет собственных состояний",
            details={"kind": spec.kind.value, "energy": spec.energy, "width": spec.width}
        )
    rho = (vectors * (weights / z)) @ vectors.conj().T
    return QuantumState(hermitize(rho), validate=False)


def microcanonical_entropy(
    model: LatticeModel, energy: float, width: float, particles: Optional[int] = None
) -> float:
    """ln числа собственных состояний в [E, E + ΔE) (при заданном числе частиц)"""
    values, _, owners = model.spectrum
    mask = _shell_mask(values, energy, width)
    if particles is not None:
        mask &= owners == particles
    count = int(mask.sum())
    if count == 0:
        raise EmptyShell(
            "В энергетической оболочке нет состояний",
            details={"energy": energy, "width": width, "particles": particles}
        )
    return float(np.log(count))


# === Огрубления и энтропии ===

def _grouped_identity(counts: np.ndarray) -> CoarseGraining:
    """Огрубление по числу частиц: диагональ, сгруппированная по значению"""
    eye = np.eye(len(counts))
    values = np.unique(counts)
    return CoarseGraining.from_bases(
        [eye[:, counts == n] for n in values], [int(n) for n in values], validate=False
    )


class ThermoService:
    """
    Огрубления девяти энтропий модели с кэшированием.

    Огрубления и последовательности (вместе с матрицами перехода) строятся
    один раз, поэтому в цикле по времени пересчитываются только вероятности.
    """

    def __init__(
        self,
        model: LatticeModel,
        delta_e: Optional[float] = None,
        system_cg: Optional[CoarseGraining] = None,
        system_cell: int = 0
    ):
        self.model = model
        values = model.spectrum[0]
        if delta_e is None:
            delta_e = spectral_range(values) / settings.SHELL_FRACTION
        if delta_e < 0:
            raise ConfigError("Ширина энергетической оболочки должна быть неотрицательной")
        self.delta_e = float(delta_e)
        if not 0 <= system_cell < len(model.cells):
            raise ConfigError("Номер ячейки подсистемы вне диапазона", details={"system_cell": system_cell})
        cell_dim = model.cell_space.subsystem_dims[system_cell]
        if system_cg is not None and system_cg.dim != cell_dim:
            raise DimensionMismatch(
                "Огрубление подсистемы не совпадает с размерностью ячейки",
                details={"cg_dim": system_cg.dim, "cell_dim": cell_dim}
            )
        self.system_cell = system_cell
        self.system_cg = system_cg or computational_basis_coarse_graining(cell_dim)
        self._sequences: Dict[str, MeasurementSequence] = {}

    # --- глобальные огрубления ---

    @cached_property
    def number_cg(self) -> CoarseGraining:
        return _grouped_identity(self.model.particle_counts)

    @cached_property
    def energy_cg(self) -> CoarseGraining:
        values, vectors, _ = self.model.spectrum
        return energy_shell_from_spectrum(values, vectors, self.delta_e)

    # --- локальные огрубления ---

    @cached_property
    def local_number_parts(self) -> List[CoarseGraining]:
        return [_grouped_identity(n) for n in self.model.local_particle_counts]

    @cached_property
    def local_energy_parts(self) -> List[CoarseGraining]:
        parts = []
        for h, n in zip(self.model.local_hamiltonians, self.model.local_particle_counts):
            values, vectors, _ = block_eigh(h, n)
            parts.append(energy_shell_from_spectrum(values, vectors, self.delta_e))
        return parts

    def product(self, parts: Sequence[CoarseGraining]) -> CoarseGraining:
        full = self.model.dim == 2 ** self.model.sites
        within = None if full else self.model.configurations
        return tensor_product_coarse_graining(parts, self.model.cell_space, within=within)

    @cached_property
    def local_number_cg(self) -> CoarseGraining:
        return self.product(self.local_number_parts)

    @cached_property
    def local_energy_cg(self) -> CoarseGraining:
        return self.product(self.local_energy_parts)

    @cached_property
    def system_product_cg(self) -> CoarseGraining:
        parts = [
            self.system_cg if k == self.system_cell else part
            for k, part in enumerate(self.local_energy_parts)
        ]
        return self.product(parts)

    # --- последовательности ---

    def sequence(self, entropy_id: str) -> MeasurementSequence:
        if entropy_id not in self._sequences:
            builders = {
                "1a": lambda: (self.number_cg,),
                "1b": lambda: (self.energy_cg,),
                "1c": lambda: (self.number_cg, self.energy_cg),
                "2a": lambda: (self.local_number_cg,),
                "2b": lambda: (self.local_energy_cg,),
                "2c": lambda: (self.local_number_cg, self.local_energy_cg),
                "3a": lambda: (self.local_number_cg, self.energy_cg),
                "3b": lambda: (self.energy_cg, self.local_number_cg),
                "4": lambda: (self.system_product_cg,),
            }
            if entropy_id not in builders:
                raise ConfigError(f"Неизвестная энтропия: {entropy_id}")
            self._sequences[entropy_id] = MeasurementSequence(builders[entropy_id]())
            logger.debug(f"Последовательность {entropy_id} построена")
        return self._sequences[entropy_id]

    def entropy(self, state: QuantumState, entropy_id: str) -> float:
        _check_state(self.model, state)
        return observational_entropy(state, self.sequence(entropy_id))

    def entropies(self, state: QuantumState, entropy_ids: Sequence[str] = ENTROPY_IDS) -> Dict[str, float]:
        return {e: self.entropy(state, e) for e in entropy_ids}


@lru_cache(maxsize=16)
def get_service(
    model: LatticeModel,
    delta_e: Optional[float] = None,
    system_cg: Optional[CoarseGraining] = None,
    system_cell: int = 0
) -> ThermoService:
    return ThermoService(model, delta_e, system_cg, system_cell)


def entropy_1a(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    """S_{C_N}: неопределенность полного числа частиц"""
    return get_service(model, delta_e).entropy(state, "1a")


def entropy_1b(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    """S_{C_E}: энергетические оболочки ширины ΔE"""
    return get_service(model, delta_e).entropy(state, "1b")


def entropy_1c(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    """S_{C_N, C_E} - равновесная термодинамическая энтропия"""
    return get_service(model, delta_e).entropy(state, "1c")


def entropy_2a(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    """Распределение частиц по ячейкам"""
    return get_service(model, delta_e).entropy(state, "2a")


def entropy_2b(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    """Факторизованная энтропия по локальным энергиям"""
    return get_service(model, delta_e).entropy(state, "2b")


def entropy_2c(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    """Неравновесная термодинамическая энтропия: локальные N, затем локальные E"""
    return get_service(model, delta_e).entropy(state, "2c")


def entropy_3a(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    return get_service(model, delta_e).entropy(state, "3a")


def entropy_3b(state: QuantumState, model: LatticeModel, delta_e: Optional[float] = None) -> float:
    return get_service(model, delta_e).entropy(state, "3b")


def entropy_4(
    state: QuantumState,
    model: LatticeModel,
    delta_e: Optional[float] = None,
    system_cg: Optional[CoarseGraining] = None,
    system_cell: int = 0
) -> float:
    """Произвольное огрубление подсистемы ⊗ локальные энергии остальных ячеек"""
    return get_service(model, delta_e, system_cg, system_cell).entropy(state, "4")


def general_conserved_entropy(
    state: QuantumState,
    model: LatticeModel,
    observables: Sequence[Observable],
    widths: Optional[Sequence[float]] = None,
    local_variants: Optional[Sequence[Sequence[Observable]]] = None
) -> Tuple[float, Optional[float]]:
    """
    Равновесная и неравновесная энтропии для набора сохраняющихся величин.

    observables огрубляются последовательно (ширина 0 - группировка
    вырожденных значений); local_variants[j] - локальные версии j-й
    величины по ячейкам, из которых строится произведение огрублений.
    """
    _check_state(model, state)
    widths = [0.0] * len(observables) if widths is None else list(widths)
    if len(widths) != len(observables):
        raise ConfigError("Число ширин не совпадает с числом наблюдаемых")
    for k, obs in enumerate(observables):
        if obs.dim != model.dim:
            raise DimensionMismatch(
                "Размерность наблюдаемой не совпадает с моделью",
                details={"observable": k, "dim": obs.dim, "model_dim": model.dim}
            )
        commutator = float(np.max(np.abs(obs.matrix @ model.hamiltonian - model.hamiltonian @ obs.matrix)))
        if commutator > 1e-8:
            logger.warning(f"Наблюдаемая {k} не коммутирует с Ĥ: ||[A, H]||={commutator:.2e}")

    def shell(obs: Observable, width: float) -> CoarseGraining:
        if width == 0:
            return coarse_graining_from_observable(obs)
        return energy_shell_coarse_graining(obs, width)

    equilibrium = observational_entropy(
        state, [shell(obs, w) for obs, w in zip(observables, widths)]
    )
    if local_variants is None:
        return equilibrium, None
    if len(local_variants) != len(observables):
        raise ConfigError("Число локальных вариантов не совпадает с числом наблюдаемых")

    service = get_service(model, None)
    steps = []
    for per_cell, width in zip(local_variants, widths):
        if len(per_cell) != len(model.cells):
            raise DimensionMismatch(
                "Число локальных наблюдаемых не совпадает с числом ячеек",
                details={"locals": len(per_cell), "cells": len(model.cells)}
            )
        steps.append(service.product([shell(obs, width) for obs in per_cell]))
    return equilibrium, observational_entropy(state, steps)


# === Локальные измерения и квантовые корреляции ===

def embed_state(model: LatticeModel, state: QuantumState) -> QuantumState:
    """Состояние сектора в полном пространстве ячеек ⊗_i H_i (для S^qc по ячейкам)"""
    _check_state(model, state)
    full_dim = model.cell_space.total_dim
    rows = model.configurations
    matrix = np.zeros((full_dim, full_dim), dtype=complex)
    matrix[np.ix_(rows, rows)] = state.matrix
    return QuantumState(matrix, validate=False)


def nonequilibrium_bound_check(
    state: QuantumState,
    model: LatticeModel,
    qce: QceResult,
    delta_e: Optional[float] = None
) -> bool:
    """
    S_{2c}(ρ) ≥ S_vN(ρ) + S^qc(ρ) для разбиения на ячейки.

    qce должна быть вычислена для embed_state(model, state) с разбиением
    model.cell_space.
    """
    if qce.best_measurement.space.subsystem_dims != model.cell_space.subsystem_dims:
        raise DimensionMismatch(
            "S^qc вычислена для другого разбиения",
            details={
                "qce_dims": list(qce.best_measurement.space.subsystem_dims),
                "cell_dims": list(model.cell_space.subsystem_dims),
            }
        )
    nonequilibrium = get_service(model, delta_e).entropy(state, "2c")
    bound = von_neumann_entropy(state) + qce.value
    logger.debug(f"S_2c={nonequilibrium:.6f}, S_vN + S^qc={bound:.6f}")
    return nonequilibrium >= bound - 1e-9


# === Квенч ===

def average_tail(series: Sequence[float], window: Optional[float] = None) -> float:
    """Среднее по последней доле window ряда (не менее одной точки)"""
    window = settings.AVERAGE_WINDOW if window is None else window
    if not 0 < window <= 1:
        raise ConfigError("Доля окна усреднения должна быть в (0, 1]", details={"window": window})
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise ConfigError("Пустой временной ряд")
    count = max(1, math.ceil(window * values.size))
    return float(values[-count:].mean())


def run_quench(scenario: QuenchScenario) -> QuenchResult:
    """
    Энтропии ρ(t) для всех времен сценария.

    Строки упорядочены по (t, entropy_id); опорные уровни S_vN и ln dim
    не зависят от времени и записываются в метаданные.
    """
    model = scenario.model
    _check_state(model, scenario.initial_state)
    times = [float(t) for t in scenario.times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ConfigError("Времена должны быть неотрицательными и идти по возрастанию")
    selection = [e for e in ENTROPY_IDS if e in scenario.entropies]

    service = ThermoService(model, scenario.delta_e, scenario.system_cg, scenario.system_cell)
    vectors = model.spectrum[1]
    initial = scenario.initial_state
    # чистое начальное состояние эволюционирует как вектор
    if initial.vector is not None:
        coefficients = vectors.conj().T @ initial.vector
        propagate = partial(_evolve_vector, model, coefficients)
    else:
        rotated = vectors.conj().T @ initial.matrix @ vectors
        propagate = partial(_evolve_rotated, model, rotated)

    rows = []
    step = max(1, len(times) // 10)
    for k, t in enumerate(times):
        state = propagate(t)
        for entropy_id in selection:
            rows.append({"t": t, "entropy_id": entropy_id, "value": service.entropy(state, entropy_id)})
        if (k + 1) % step == 0 or k + 1 == len(times):
            logger.info(f"Квенч: {k + 1}/{len(times)} (t={t:g})")

    table = pd.DataFrame(rows, columns=["t", "entropy_id", "value"])
    metadata = {
        "model": model.metadata(),
        "delta_e": service.delta_e,
        "ln_dim": float(np.log(model.dim)),
        "von_neumann": von_neumann_entropy(scenario.initial_state),
        "entropies": selection,
        "times": len(times),
        "system_cell": scenario.system_cell,
    }
    return QuenchResult(table=table, metadata=metadata)
