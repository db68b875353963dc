"""
Наблюдательная энтропия: одиночные огрубления, упорядоченные последовательности,
обобщенные измерения (операторы Крауса), разложение на шенноновскую и
больцмановскую части, огрубленное состояние, энтропия фон Неймана и
тождество с расхождением Кульбака-Лейблера.

Все функции чистые и безопасны для одновременного вызова из нескольких потоков.
"""
import threading
import weakref
from typing import Dict, List, Optional, Sequence, Tuple, Union
import numpy as np
from scipy import special

from src.core.config import settings
from src.core.exceptions import (
    DimensionMismatch, InconsistentBranch, InvalidCoarseGraining, NotAState
)
from src.models.entropy import (
    MacrostateDistribution, MacrostateRecord, MeasurementSequence, Step, as_sequence
)
from src.models.hilbert import CoarseGraining, QuantumState
from src.utils.linalg import hermitize
from src.utils.logger import entropy_logger as logger

SequenceLike = Union[Step, MeasurementSequence, Sequence[Step]]

# ||G||_F ниже этого порога означает тождественно нулевую ветвь
_ZERO_TRANSITION = 1e-14

# Матрицы перехода не зависят от состояния: кэш на каждую последовательность,
# живет, пока жива сама последовательность
_TRANSITIONS: "weakref.WeakKeyDictionary[MeasurementSequence, Dict[tuple, object]]" = (
    weakref.WeakKeyDictionary()
)
_TRANSITIONS_LOCK = threading.Lock()


def _transition_cache(seq: MeasurementSequence) -> Dict[tuple, object]:
    with _TRANSITIONS_LOCK:
        return _TRANSITIONS.setdefault(seq, {})


def _check_dims(state: QuantumState, dim: int) -> None:
    if state.dim != dim:
        raise DimensionMismatch(
            "Размерность состояния не совпадает с размерностью огрубления",
            details={"state_dim": state.dim, "dim": dim}
        )


def _left_factor(step: Step, index: int) -> Optional[np.ndarray]:
    """Левый множитель L цепочки M = L X после элемента index (None - единичный)"""
    if isinstance(step, CoarseGraining):
        return step.elements[index].basis
    return None


def _transition(seq: MeasurementSequence, level: int, previous: Optional[int], index: int):
    """
    Матрица перехода G: X_new = G X_old.

    Для проектора P = B B†: G = B† L_old, для оператора Крауса: G = K L_old.
    Результат кэшируется по последовательности; запись идемпотентна.
    """
    key = (level, previous, index)
    cache = _transition_cache(seq)
    if key in cache:
        return cache[key]

    step = seq.steps[level]
    left = None if level == 0 else _left_factor(seq.steps[level - 1], previous)
    if isinstance(step, CoarseGraining):
        basis_h = step.elements[index].basis.conj().T
        g = basis_h if left is None else basis_h @ left
    else:
        k = step.operators[index]
        g = k if left is None else k @ left
    if np.linalg.norm(g) < _ZERO_TRANSITION:
        g = None
    return cache.setdefault(key, g)


def _children(seq: MeasurementSequence, level: int, previous: Optional[int]) -> list:
    """Ненулевые переходы из узла (level, previous): список (index, G)"""
    key = ("children", level, previous)
    cache = _transition_cache(seq)
    if key not in cache:
        step = seq.steps[level]
        pairs = [(i, _transition(seq, level, previous, i)) for i in range(len(step.labels))]
        cache.setdefault(key, [(i, g) for i, g in pairs if g is not None])
    return cache[key]


def _norm_squared(seq: MeasurementSequence, level: int, previous: Optional[int], index: int, g) -> float:
    """tr(G G†), не зависит от состояния"""
    cache = _transition_cache(seq)
    key = ("volume", level, previous, index)
    if key not in cache:
        cache.setdefault(key, float(np.vdot(g, g).real))
    return cache[key]


def _expand(
    seq: MeasurementSequence, level: int, previous: Optional[int], r: np.ndarray, q, pure: bool, leaf: bool
):
    """
    Дочерние узлы: (index, R', Q', объем).

    R - матрица X ρ X† или, для чистого состояния, вектор X ψ; Q = X X†
    (None - единичный оператор); для листьев Q' не строится.
    """
    step = seq.steps[level]
    if level == 0 and isinstance(step, CoarseGraining):
        # первый проекционный шаг: один поворот U† ρ U вместо поэлементных произведений
        u = step.unitary
        rotated = u.conj().T @ r if pure else u.conj().T @ r @ u
        start = 0
        for index, element in enumerate(step.elements):
            stop = start + element.rank
            block = rotated[start:stop] if pure else rotated[start:stop, start:stop]
            yield index, block, None, float(element.rank)
            start = stop
        return
    for index, g in _children(seq, level, previous):
        g_h = g.conj().T
        r_new = g @ r if pure else g @ r @ g_h
        if q is None:
            q_new = None if leaf else g @ g_h
            volume = _norm_squared(seq, level, previous, index, g)
        else:
            q_new = g @ q @ g_h
            volume = float(np.trace(q_new).real)
        yield index, r_new, q_new, volume


def _clamp_probability(p: float, index: tuple) -> float:
    tol = settings.BRANCH_PROBABILITY_TOL
    if p < -tol or p > 1 + tol:
        raise InconsistentBranch(
            "Вероятность ветви вне [0, 1]",
            details={"multi_index": repr(index), "probability": p}
        )
    return min(max(p, 0.0), 1.0)


def macrostate_distribution(state: QuantumState, seq: SequenceLike) -> MacrostateDistribution:
    """
    Распределение по мульти-макросостояниям i = (i_1, ..., i_n).

    p_i = tr[P_in ... P_i1 ρ P_i1 ... P_in], V_i = tr[P_in ... P_i1 P_i1 ... P_in]
    (для операторов Крауса - с K и K†). Ветви с V_i < PRUNE_VOLUME_TOL
    отбрасываются вместе с поддеревом после проверки, что их вероятность
    пренебрежимо мала.
    """
    seq = as_sequence(seq)
    _check_dims(state, seq.dim)
    prune = settings.PRUNE_VOLUME_TOL
    n_steps = len(seq)

    records: List[MacrostateRecord] = []
    pruned = 0
    pure = state.vector is not None
    # Узел дерева: (уровень, индекс предыдущего элемента, метки, R = XρX† или Xψ, Q = XX†)
    stack = [(0, None, (), state.vector if pure else state.matrix, None)]
    while stack:
        level, previous, labels, r, q = stack.pop()
        step = seq.steps[level]
        leaf = level + 1 == n_steps
        children = []
        for index, r_new, q_new, volume in _expand(seq, level, previous, r, q, pure, leaf):
            probability = float(np.vdot(r_new, r_new).real) if pure else float(np.trace(r_new).real)
            multi_index = labels + (step.labels[index],)
            if volume < prune:
                if probability > settings.BRANCH_PROBABILITY_TOL:
                    raise InconsistentBranch(
                        "Ненулевая вероятность у макросостояния нулевого объема",
                        details={"multi_index": repr(multi_index), "probability": probability, "volume": volume}
                    )
                pruned += 1
                continue
            if leaf:
                records.append(MacrostateRecord(
                    multi_index, _clamp_probability(probability, multi_index), volume
                ))
            else:
                children.append((level + 1, index, multi_index, r_new, q_new))
        # обратный порядок в стеке сохраняет лексикографический порядок ветвей
        stack.extend(reversed(children))

    distribution = MacrostateDistribution(tuple(records), seq.dim)
    total_p = float(distribution.probabilities.sum())
    total_v = float(distribution.volumes.sum())
    if abs(total_p - 1) > settings.PROBABILITY_SUM_TOL:
        raise InconsistentBranch(
            "Сумма вероятностей макросостояний не равна 1",
            details={"total_probability": total_p}
        )
    if abs(total_v - seq.dim) > settings.VOLUME_SUM_TOL:
        raise InconsistentBranch(
            "Сумма объемов макросостояний не равна размерности",
            details={"total_volume": total_v, "dim": seq.dim}
        )
    logger.debug(f"dim={seq.dim}, шагов={n_steps}, ветвей={len(records)}, отброшено={pruned}")
    return distribution


def entropy_of_distribution(distribution: MacrostateDistribution) -> float:
    """-Σ p ln(p/V) с 0·ln 0 = 0"""
    return float(-special.rel_entr(distribution.probabilities, distribution.volumes).sum())


def observational_entropy(state: QuantumState, seq: SequenceLike) -> float:
    """S_{C_1,...,C_n}(ρ) = -Σ_i p_i ln(p_i / V_i)"""
    return entropy_of_distribution(macrostate_distribution(state, seq))


def _require_single(cg) -> CoarseGraining:
    if isinstance(cg, MeasurementSequence):
        if len(cg) != 1:
            raise InvalidCoarseGraining("Ожидалось одно проекционное огрубление")
        cg = cg.steps[0]
    if not isinstance(cg, CoarseGraining):
        raise InvalidCoarseGraining("Ожидалось проекционное огрубление")
    return cg


def coarse_graining_probabilities(state: QuantumState, cg: CoarseGraining) -> np.ndarray:
    """p_i = tr(P_i ρ) для одиночного огрубления"""
    _check_dims(state, cg.dim)
    rho = state.matrix
    return np.array([
        float(np.real(np.einsum("ji,jk,ki->", p.basis.conj(), rho, p.basis, optimize=True)))
        for p in cg.elements
    ])


def entropy_decomposition(state: QuantumState, cg: CoarseGraining) -> Tuple[float, float]:
    """
    S_C = -Σ p_i ln p_i + Σ p_i ln V_i.

    Returns:
        (шенноновская часть, средняя больцмановская энтропия)
    """
    cg = _require_single(cg)
    distribution = macrostate_distribution(state, cg)
    p, v = distribution.probabilities, distribution.volumes
    return float(special.entr(p).sum()), float(np.dot(p, np.log(v)))


def observable_entropy(state: QuantumState, cg: CoarseGraining) -> float:
    """Энтропия наблюдаемой -Σ p_i ln p_i"""
    return entropy_decomposition(state, cg)[0]


def boltzmann_entropy(cg: CoarseGraining, index: int) -> float:
    """ln V_i макросостояния index"""
    return float(np.log(cg.elements[index].volume))


def coarse_grained_state(state: QuantumState, cg: CoarseGraining) -> QuantumState:
    """ρ_cg = Σ_i p_i P_i / V_i"""
    cg = _require_single(cg)
    probabilities = coarse_graining_probabilities(state, cg)
    matrix = np.zeros((cg.dim, cg.dim), dtype=complex)
    for p_i, element in zip(probabilities, cg.elements):
        matrix += (max(p_i, 0.0) / element.volume) * element.matrix
    return QuantumState(hermitize(matrix), validate=False)


def von_neumann_entropy(state: QuantumState) -> float:
    """S_vN = -tr ρ ln ρ"""
    eigenvalues = state.eigenvalues
    if eigenvalues.min() < -settings.PSD_TOL:
        raise NotAState(
            "Матрица плотности не положительна",
            details={"min_eigenvalue": float(eigenvalues.min())}
        )
    trace = float(eigenvalues.sum())
    if abs(trace - 1) > settings.TRACE_TOL:
        raise NotAState("След матрицы плотности не равен 1", details={"trace": trace})
    return float(special.entr(np.clip(eigenvalues, 0.0, None)).sum())


def shannon_entropy(probabilities: Sequence[float]) -> float:
    return float(special.entr(np.asarray(probabilities, dtype=float)).sum())


def kl_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """D_KL(p || q) = Σ p ln(p/q)"""
    return float(special.rel_entr(np.asarray(p, dtype=float), np.asarray(q, dtype=float)).sum())


def kl_identity_check(state: QuantumState, seq: SequenceLike) -> Tuple[float, float, float]:
    """
    Проверка S = ln dim - D_KL(p_i || V_i / dim).

    Returns:
        (энтропия, расхождение, невязка тождества)
    """
    distribution = macrostate_distribution(state, seq)
    entropy = entropy_of_distribution(distribution)
    kl = kl_divergence(distribution.probabilities, distribution.volumes / distribution.dim)
    residual = abs(entropy - (np.log(distribution.dim) - kl))
    return entropy, kl, float(residual)


def to_bits(value: float) -> float:
    """Перевод натуральных единиц в биты (только для вывода)"""
    return value / np.log(2)
