"""
Локальные (произведения) огрубления на многочастичных системах: маргинальные
распределения, полная корреляция, аддитивность и энтропия квантовых
корреляций S^qc.
"""
import itertools
from typing import List, Optional, Sequence, Tuple
import numpy as np
from scipy import optimize, special

from src.core.config import settings
from src.core.exceptions import DimensionMismatch, NotAState
from src.models.hilbert import CoarseGraining, QuantumState, TensorSpace
from src.models.local import ProductMeasurement, QceResult, QceTraceEntry
from src.services.entropy_core import (
    coarse_graining_probabilities, observational_entropy, von_neumann_entropy
)
from src.services.hilbert import basis_coarse_graining, partial_trace, tensor_product_coarse_graining
from src.utils.linalg import kron_all
from src.utils.logger import local_logger as logger
from src.utils.random import random_unitary


def _check_space(state: QuantumState, space: TensorSpace) -> None:
    if state.dim != space.total_dim:
        raise DimensionMismatch(
            "Размерность состояния не совпадает с пространством",
            details={"state_dim": state.dim, "total_dim": space.total_dim}
        )


def product_coarse_graining(pm: ProductMeasurement) -> CoarseGraining:
    return tensor_product_coarse_graining(pm.local_cgs, pm.space)


def product_observational_entropy(state: QuantumState, pm: ProductMeasurement) -> float:
    """S_{C_A ⊗ ... ⊗ C_C}(ρ); объемы V_{lm...n} = V_l V_m ... V_n"""
    _check_space(state, pm.space)
    return observational_entropy(state, product_coarse_graining(pm))


def reduced_states(state: QuantumState, space: TensorSpace) -> List[QuantumState]:
    """ρ_X = tr_{остальные} ρ для каждой подсистемы"""
    _check_space(state, space)
    return [partial_trace(state, space, [k]) for k in range(space.count)]


def marginal_distributions(state: QuantumState, pm: ProductMeasurement) -> List[np.ndarray]:
    """p_l^X = tr(P_l^X ρ_X)"""
    return [
        np.clip(coarse_graining_probabilities(rho, cg), 0.0, None)
        for rho, cg in zip(reduced_states(state, pm.space), pm.local_cgs)
    ]


def total_correlation(state: QuantumState, pm: ProductMeasurement) -> float:
    """I = Σ p_{lm...n} ln(p_{lm...n} / (p_l^A p_m^B ... p_n^C))"""
    _check_space(state, pm.space)
    joint = np.clip(coarse_graining_probabilities(state, product_coarse_graining(pm)), 0.0, None)
    marginals = marginal_distributions(state, pm)
    independent = marginals[0]
    for p in marginals[1:]:
        independent = np.multiply.outer(independent, p)
    return float(special.rel_entr(joint, independent.ravel()).sum())


def decomposition_check(state: QuantumState, pm: ProductMeasurement) -> float:
    """Невязка S_product = Σ_X S_{C_X}(ρ_X) - I"""
    s_product = product_observational_entropy(state, pm)
    local = sum(
        observational_entropy(rho, cg)
        for rho, cg in zip(reduced_states(state, pm.space), pm.local_cgs)
    )
    return float(abs(s_product - (local - total_correlation(state, pm))))


def entanglement_entropy(state: QuantumState, space: TensorSpace, purity_tol: float = 1e-8) -> float:
    """Энтропия запутанности чистого двухчастичного состояния по коэффициентам Шмидта"""
    _check_space(state, space)
    if space.count != 2:
        raise DimensionMismatch("Ожидалось разбиение на две подсистемы", details={"subsystems": space.count})
    values, vectors = np.linalg.eigh(state.matrix)
    if values[-1] < 1 - purity_tol:
        raise NotAState("Состояние не является чистым", details={"max_eigenvalue": float(values[-1])})
    psi = vectors[:, -1].reshape(space.subsystem_dims)
    schmidt = np.linalg.svd(psi, compute_uv=False)
    return float(special.entr(schmidt ** 2).sum())


# === S^qc ===

def _rotation(dim: int, a: int, b: int, angle: float, imaginary: bool) -> np.ndarray:
    """Двухуровневый поворот [[cos, -e^{iφ} sin], [e^{-iφ} sin, cos]] при φ = 0 или π/2"""
    r = np.eye(dim, dtype=complex)
    c, s = np.cos(angle), np.sin(angle)
    r[a, a] = r[b, b] = c
    if imaginary:
        r[a, b] = r[b, a] = -1j * s
    else:
        r[a, b], r[b, a] = -s, s
    return r


class QceOptimizer:
    """
    Покоординатный спуск по локальным унитарным матрицам.

    Один проход перебирает все подсистемы, все пары уровней и два типа
    поворотов; для каждого угла - сетка, затем поиск золотым сечением.
    Шаг принимается только при строгом уменьшении энтропии.
    """

    def __init__(
        self,
        state: QuantumState,
        space: TensorSpace,
        tol_obj: float,
        max_sweeps: int,
        grid_points: int
    ):
        self.rho = state.matrix
        self.space = space
        self.tol_obj = tol_obj
        self.max_sweeps = max_sweeps
        self.grid_points = max(int(grid_points), 3)

    def objective(self, unitaries: Sequence[np.ndarray]) -> float:
        """Энтропия Шеннона исходов в базисе столбцов U_A ⊗ ... ⊗ U_C (все V = 1)"""
        u = kron_all(unitaries)
        p = np.real(np.sum(u.conj() * (self.rho @ u), axis=0))
        return float(special.entr(np.clip(p, 0.0, None)).sum())

    def _line_search(
        self, unitaries: List[np.ndarray], k: int, a: int, b: int, imaginary: bool, current: float
    ) -> float:
        dim = unitaries[k].shape[0]
        base = unitaries[k]

        def f(angle: float) -> float:
            trial = list(unitaries)
            trial[k] = base @ _rotation(dim, a, b, angle, imaginary)
            return self.objective(trial)

        # функция периодична с периодом π; сетка вокруг π, где поворот не меняет базис
        step = np.pi / self.grid_points
        grid = np.pi / 2 + step * np.arange(self.grid_points)
        values = np.array([f(x) for x in grid])
        j = int(np.argmin(values))
        best_angle, best_value = grid[j], float(values[j])
        try:
            res = optimize.minimize_scalar(
                f, bracket=(grid[j] - step, grid[j], grid[j] + step),
                method="golden", options={"maxiter": 200}
            )
            if res.fun < best_value:
                best_angle, best_value = float(res.x), float(res.fun)
        except ValueError:
            # плоская функция: интервал не является вилкой
            pass
        if best_value < current:
            unitaries[k] = base @ _rotation(dim, a, b, best_angle, imaginary)
            return best_value
        return current

    def run(self, unitaries: List[np.ndarray]) -> Tuple[List[np.ndarray], float, List[float]]:
        unitaries = list(unitaries)
        value = self.objective(unitaries)
        history = [value]
        pairs = [
            list(itertools.combinations(range(d), 2)) for d in self.space.subsystem_dims
        ]
        for _ in range(self.max_sweeps):
            start = value
            for k, level_pairs in enumerate(pairs):
                for a, b in level_pairs:
                    for imaginary in (False, True):
                        value = self._line_search(unitaries, k, a, b, imaginary, value)
            history.append(value)
            if start - value < self.tol_obj:
                break
        return unitaries, value, history


def quantum_correlation_entropy(
    state: QuantumState,
    space: TensorSpace,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    tol_obj: Optional[float] = None,
    max_sweeps: Optional[int] = None,
    grid_points: Optional[int] = None
) -> QceResult:
    """
    S^qc = inf S_{C_A ⊗ ... ⊗ C_C}(ρ) - S_vN(ρ) по локальным базисам.

    Возвращается лучшее найденное значение; каждый запуск стартует из
    независимых случайных унитарных матриц, порожденных от seed.
    """
    _check_space(state, space)
    if space.count < 2:
        raise DimensionMismatch("Нужно не менее двух подсистем", details={"subsystems": space.count})
    restarts = settings.QCE_RESTARTS if restarts is None else restarts
    seed = settings.QCE_SEED if seed is None else seed
    optimizer = QceOptimizer(
        state, space,
        tol_obj=settings.QCE_TOL_OBJ if tol_obj is None else tol_obj,
        max_sweeps=settings.QCE_MAX_SWEEPS if max_sweeps is None else max_sweeps,
        grid_points=settings.QCE_GRID_POINTS if grid_points is None else grid_points,
    )
    s_vn = von_neumann_entropy(state)

    trace: List[QceTraceEntry] = []
    best: Optional[Tuple[float, int, List[np.ndarray]]] = None
    for restart, child in enumerate(np.random.SeedSequence(seed).spawn(max(restarts, 1))):
        rng = np.random.default_rng(child)
        initial = [random_unitary(d, rng) for d in space.subsystem_dims]
        unitaries, value, history = optimizer.run(initial)
        trace.append(QceTraceEntry(restart, len(history) - 1, value, tuple(history)))
        logger.debug(f"Запуск {restart}: S={value:.12f}, проходов={len(history) - 1}")
        # при равенстве побеждает меньший номер запуска
        if best is None or value < best[0]:
            best = (value, restart, unitaries)

    achieved, best_restart, unitaries = best
    measurement = ProductMeasurement(space, tuple(basis_coarse_graining(u) for u in unitaries))
    gap = achieved - s_vn
    logger.info(f"S^qc={gap:.10f} (запусков={len(trace)}, лучший={best_restart})")
    return QceResult(
        value=gap,
        best_measurement=measurement,
        optimizer_trace=tuple(trace),
        certificate_gap=gap,
        achieved_entropy=achieved,
        von_neumann=s_vn,
        best_restart=best_restart,
    )


def quarrelation_bound_check(state: QuantumState, pm: ProductMeasurement, qce: QceResult) -> bool:
    """S_product(ρ) ≥ S_vN(ρ) + S^qc(ρ)"""
    _check_space(state, pm.space)
    if pm.space.subsystem_dims != qce.best_measurement.space.subsystem_dims:
        raise DimensionMismatch("S^qc вычислена для другого разбиения")
    bound = von_neumann_entropy(state) + qce.value
    return product_observational_entropy(state, pm) >= bound - 1e-9
