# contagio_hipergrafo/services/dynamics.py
"""
Mapas de atualização de campo médio (Euler de passo h) para SIS em
hipergrafos: vírus único até ordem 3, ordem geral e bi-vírus competitivo.
Também: checagem de hipóteses, simulação, equilíbrios via mapa de ponto
fixo 𝒯 e os tensores da dinâmica do erro em torno de um equilíbrio.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Any, Dict, List, Mapping, Sequence, Tuple
import logging
import os

import numpy as np
import pandas as pd

from .errors import AssumptionViolation, NotConverged
from .hypergraph import DirectedHypergraph, adjacency_tensors
from .tensor_core import (
    SparseCubicalTensor,
    almost_symmetrize,
    is_irreducible,
    matrix_tensor_product,
    tensor_vector_power,
    tensor_vector_power_rows,
)

__all__ = [
    "SisParams",
    "GeneralParams",
    "BiVirusParams",
    "Trajectory",
    "BatchResult",
    "AssumptionCheck",
    "AssumptionReport",
    "EquilibriumParams",
    "build_params",
    "validate_assumptions",
    "step",
    "step_general",
    "step_bivirus",
    "simulate",
    "simulate_batch",
    "simulate_bivirus_batch",
    "fixed_point_map",
    "find_equilibrium",
    "omega_initial_point",
    "error_dynamics_tensors",
    "error_dynamics_general",
    "linearization",
    "cluster_limits",
    "random_simplex_states",
    "default_workers",
    "infection_pressure",
    "step_failures",
]

logger = logging.getLogger(__name__)

STATE_TOL = 1e-12      # folga numérica para x ∈ [0,1]
THREADS_ENV = "CONTAGIO_THREADS"
LIMIT_CLUSTER_TOL = 1e-6


# ---------------- parâmetros ----------------
def _row_sums(T: SparseCubicalTensor) -> np.ndarray:
    return np.bincount(T.indices[:, 0], weights=T.values, minlength=T.dim) if T.nnz else np.zeros(T.dim)


def _check_common(delta: Any, B: SparseCubicalTensor, h: float) -> np.ndarray:
    d = np.array(delta, dtype=float).reshape(-1)
    if B.order != 2:
        raise ValueError(f"𝓑 deve ter ordem 2, recebeu {B.order}")
    if B.dim != len(d):
        raise ValueError(f"Dimensão de 𝓑 ({B.dim}) difere de len(delta) ({len(d)})")
    if not np.isfinite(h) or h <= 0:
        raise ValueError(f"Passo h deve ser positivo: {h}")
    d.setflags(write=False)
    return d


@dataclass(frozen=True, eq=False)
class SisParams:
    """
    Vírus único até ordem 3: x⁺ = x + h(−𝒟x + (I − diag x)(𝓑x + 𝓗x²)).
    𝓗 é quase-simetrizado na construção.
    """
    delta: np.ndarray
    B: SparseCubicalTensor
    H: SparseCubicalTensor
    h: float

    def __post_init__(self):
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "delta", _check_common(self.delta, self.B, self.h))
        if self.H.order != 3 or self.H.dim != self.n:
            raise ValueError(f"𝓗 deve ter ordem 3 e dimensão {self.n}")
        object.__setattr__(self, "H", almost_symmetrize(self.H))

    @property
    def n(self) -> int:
        return len(self.delta)

    @property
    def higher(self) -> Dict[int, SparseCubicalTensor]:
        return {3: self.H}

    @cached_property
    def pair_rates(self) -> np.ndarray:
        """Σ_j β_ij por nó."""
        return _row_sums(self.B)

    @cached_property
    def higher_rates(self) -> np.ndarray:
        """Σ_jk β_ijk por nó."""
        return _row_sums(self.H)

    def to_general(self) -> "GeneralParams":
        return GeneralParams(self.delta, self.B, {3: self.H}, self.h)


@dataclass(frozen=True, eq=False)
class GeneralParams:
    """Ordem geral: 𝓗x² vira Σ_k 𝓕_k x^{k−1}, k = 3..K."""
    delta: np.ndarray
    B: SparseCubicalTensor
    F: Mapping[int, SparseCubicalTensor]
    h: float

    def __post_init__(self):
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "delta", _check_common(self.delta, self.B, self.h))
        F: Dict[int, SparseCubicalTensor] = {}
        for k, T in sorted(self.F.items()):
            k = int(k)
            if k < 3 or T.order != k or T.dim != self.n:
                raise ValueError(f"𝓕_{k} inválido: ordem {T.order}, dimensão {T.dim}")
            F[k] = almost_symmetrize(T)
        object.__setattr__(self, "F", F)

    @property
    def n(self) -> int:
        return len(self.delta)

    @property
    def higher(self) -> Dict[int, SparseCubicalTensor]:
        return dict(self.F)

    @property
    def max_order(self) -> int:
        return max(self.F, default=2)

    @cached_property
    def pair_rates(self) -> np.ndarray:
        return _row_sums(self.B)

    @cached_property
    def higher_rates(self) -> np.ndarray:
        """Σ_k Σ β_{i i₁…i_{k−1}} por nó."""
        total = np.zeros(self.n)
        for T in self.F.values():
            total += _row_sums(T)
        return total

    def to_sis(self) -> SisParams:
        if set(self.F) - {3}:
            raise ValueError(f"Parâmetros têm ordens {sorted(self.F)}; SisParams só aceita ordem 3")
        H = self.F.get(3, SparseCubicalTensor(3, self.n))
        return SisParams(self.delta, self.B, H, self.h)


@dataclass(frozen=True, eq=False)
class BiVirusParams:
    """Dois vírus competindo pelo mesmo fator (1 − x₁ − x₂)."""
    virus1: SisParams
    virus2: SisParams

    def __post_init__(self):
        if self.virus1.n != self.virus2.n:
            raise ValueError(f"Vírus com dimensões diferentes: {self.virus1.n} vs {self.virus2.n}")
        if self.virus1.h != self.virus2.h:
            raise ValueError(f"Vírus com passos h diferentes: {self.virus1.h} vs {self.virus2.h}")

    @property
    def n(self) -> int:
        return self.virus1.n

    @property
    def h(self) -> float:
        return self.virus1.h

    @property
    def viruses(self) -> Tuple[SisParams, SisParams]:
        return (self.virus1, self.virus2)


def build_params(
    hypergraph: DirectedHypergraph,
    delta: Sequence[float],
    h: float,
    mu2: Sequence[float],
    mu3: Sequence[float] | None = None,
    muK: Mapping[int, Sequence[float]] | None = None,
) -> SisParams | GeneralParams:
    """
    β = μ·A linha a linha: 𝓑 = diag(μ₂)A₂, 𝓗 = diag(μ₃)A₃, 𝓕_k = diag(μ_k)A_k.
    Devolve GeneralParams quando há ordem acima de 3.
    """
    n = hypergraph.n
    muK = {int(k): v for k, v in (muK or {}).items()}
    if any(k < 4 for k in muK):
        raise ValueError(f"muK só aceita ordens ≥ 4: {sorted(muK)}")
    A = adjacency_tensors(hypergraph)

    def scaled(mu: Sequence[float] | None, k: int) -> SparseCubicalTensor:
        if mu is None:
            if A.get(k, SparseCubicalTensor(k, n)).nnz:
                raise ValueError(f"Hipergrafo tem arestas de ordem {k}, mas faltam as taxas μ_{k}")
            return SparseCubicalTensor(k, n)
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (n,):
            raise ValueError(f"Taxas de ordem {k} com shape {mu.shape}, esperado ({n},)")
        return matrix_tensor_product(np.diag(mu), A.get(k, SparseCubicalTensor(k, n)))

    B = scaled(mu2, 2)
    H = scaled(mu3, 3)
    orders = sorted(k for k in set(A) | set(muK) if k >= 4)
    if not orders:
        return SisParams(delta, B, H, h)
    F = {3: H}
    for k in orders:
        F[k] = scaled(muK.get(k), k)
    return GeneralParams(delta, B, F, h)


# ---------------- hipóteses ----------------
@dataclass
class AssumptionCheck:
    name: str
    holds: bool
    margin: float = float("nan")
    detail: str = ""


@dataclass
class AssumptionReport:
    mode: str
    checks: List[AssumptionCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def failed(self) -> List[AssumptionCheck]:
        return [c for c in self.checks if not c.holds]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "holds": bool(c.holds), "margin": float(c.margin), "detail": c.detail}
                for c in self.checks
            ],
        }


def _normalize_mode(mode: str) -> str:
    m = str(mode).strip().lower()[-1:]
    if m not in ("a", "b"):
        raise ValueError(f"Modo de hipótese inválido: {mode} (use A3a/A3b)")
    return m


def _tensor_checks(prefix: str, params: SisParams | GeneralParams) -> List[AssumptionCheck]:
    checks = [
        AssumptionCheck(f"{prefix}: δ > 0", bool(np.all(params.delta > 0)), float(params.delta.min())),
        AssumptionCheck(
            f"{prefix}: 𝓑 não negativo", params.B.is_nonnegative(),
            float(params.B.values.min()) if params.B.nnz else 0.0,
        ),
        AssumptionCheck(f"{prefix}: 𝓑 irredutível", is_irreducible(params.B)),
    ]
    for k, T in sorted(params.higher.items()):
        checks.append(
            AssumptionCheck(
                f"{prefix}: 𝓕_{k} não negativo" if k > 3 or isinstance(params, GeneralParams) else f"{prefix}: 𝓗 não negativo",
                T.is_nonnegative(),
                float(T.values.min()) if T.nnz else 0.0,
            )
        )
    return checks


def _box_check(name: str, x: np.ndarray) -> AssumptionCheck:
    margin = float(min(x.min(), 1.0 - x.max())) if len(x) else 0.0
    return AssumptionCheck(name, margin >= -STATE_TOL, margin)


def validate_assumptions(params: Any, mode: str = "A3a", x0: Any = None) -> AssumptionReport:
    """
    Relatório item a item (com margens) das hipóteses: estado inicial na caixa
    (ou simplex), δ > 0, tensores não negativos, 𝓑 irredutível e os limites de
    linha do modo a (≤ 1) ou b (< 1, combinado).
    """
    m = _normalize_mode(mode)

    if isinstance(params, BiVirusParams):
        report = AssumptionReport(f"A6{m}")
        if x0 is not None:
            x1, x2 = (np.asarray(v, dtype=float) for v in x0)
            report.checks.append(_box_check("A4: x₁ ∈ [0,1]ⁿ", x1))
            report.checks.append(_box_check("A4: x₂ ∈ [0,1]ⁿ", x2))
            report.checks.append(_box_check("A4: 1 − x₁ − x₂ ∈ [0,1]ⁿ", 1.0 - x1 - x2))
        for ell, v in enumerate(params.viruses, start=1):
            report.checks.extend(_tensor_checks(f"A5[{ell}]", v))
        h = params.h
        rates = sum(v.pair_rates + v.higher_rates for v in params.viruses)
        if m == "a":
            for ell, v in enumerate(params.viruses, start=1):
                margin = 1.0 - h * float(v.delta.max())
                report.checks.append(AssumptionCheck(f"A6a: hδ[{ell}] ≤ 1", margin >= 0, margin))
            margin = 1.0 - h * float(rates.max())
            report.checks.append(AssumptionCheck("A6a: h Σ_ℓ(Σβ + Σβ₃) ≤ 1", margin >= 0, margin))
        else:
            worst = np.maximum(params.virus1.delta, params.virus2.delta) + rates
            margin = 1.0 - h * float(worst.max())
            report.checks.append(AssumptionCheck("A6b: h(δ + Σ_ℓ(Σβ + Σβ₃)) < 1", margin > 0, margin))
        return report

    general = isinstance(params, GeneralParams)
    a1, a2, a3 = ("A1", "A2/A7", "A8") if general else ("A1", "A2", "A3")
    report = AssumptionReport(f"{a3}{m}")
    if x0 is not None:
        report.checks.append(_box_check(f"{a1}: x0 ∈ [0,1]ⁿ", np.asarray(x0, dtype=float)))
    report.checks.extend(_tensor_checks(a2, params))
    h = params.h
    if m == "a":
        margin = 1.0 - h * float(params.delta.max())
        report.checks.append(AssumptionCheck(f"{a3}a: hδ ≤ 1", margin >= 0, margin))
        margin = 1.0 - h * float((params.pair_rates + params.higher_rates).max())
        report.checks.append(AssumptionCheck(f"{a3}a: h(Σβ_ij + Σβ_ijk) ≤ 1", margin >= 0, margin))
    else:
        margin = 1.0 - h * float((params.delta + params.pair_rates + params.higher_rates).max())
        report.checks.append(AssumptionCheck(f"{a3}b: h(δ + Σβ_ij + Σβ_ijk) < 1", margin > 0, margin))
    return report


# itens estruturais (δ > 0, irredutibilidade) não afetam a invariância da caixa
_STRUCTURAL = ("irredutível", "δ > 0")


def step_failures(params: Any, mode: str = "A3a", x0: Any = None) -> List[str]:
    """Itens violados que tornam o passo mal definido: estado, não negatividade e limites do modo."""
    report = validate_assumptions(params, mode, x0)
    failures = [c.name for c in report.failed() if not any(s in c.name for s in _STRUCTURAL)]
    viruses = params.viruses if isinstance(params, BiVirusParams) else (params,)
    if any(np.any(v.delta < 0) for v in viruses):
        failures.append("δ ≥ 0")
    return failures


def _step_checks_pass(params: Any) -> List[str]:
    cache = getattr(params, "__dict__", {})
    if "_step_failures" not in cache:
        cache["_step_failures"] = step_failures(params)
    return cache["_step_failures"]


def _require_step(params: Any, states: Sequence[np.ndarray], simplex: bool = False) -> None:
    failures = list(_step_checks_pass(params))
    for x in states:
        if x.size and (x.min() < -STATE_TOL or x.max() > 1.0 + STATE_TOL):
            failures.append("estado fora de [0,1]")
    if simplex and states[0].size and float((states[0] + states[1]).max()) > 1.0 + STATE_TOL:
        failures.append("x₁ + x₂ > 1 (fora do simplex)")
    if failures:
        raise AssumptionViolation("Hipóteses violadas: " + "; ".join(failures))


def _as_state(x: Any, n: int) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"Estado com shape {v.shape}, esperado ({n},)")
    return v


# ---------------- mapas de atualização ----------------
def _infection(params: SisParams | GeneralParams, x: np.ndarray) -> np.ndarray:
    """𝓑x + Σ_k 𝓕_k x^{k−1}."""
    g = tensor_vector_power(params.B, x, 1)
    for k, T in params.higher.items():
        g = g + tensor_vector_power(T, x, k - 1)
    return g


def infection_pressure(params: SisParams | GeneralParams, X: np.ndarray) -> np.ndarray:
    """𝓑x + Σ_k 𝓕_k x^{k−1} para cada linha x de X (R × n)."""
    g = tensor_vector_power_rows(params.B, X)
    for T in params.higher.values():
        g = g + tensor_vector_power_rows(T, X)
    return g


def step(params: SisParams, x: Any, force: bool = False) -> np.ndarray:
    """x⁺ = x + h(−𝒟x + (I − diag x)(𝓑x + 𝓗x²)). Sem clamping."""
    x = _as_state(x, params.n)
    if not force:
        _require_step(params, [x])
    g = tensor_vector_power(params.B, x, 1) + tensor_vector_power(params.H, x, 2)
    return x + params.h * (-params.delta * x + (1.0 - x) * g)


def step_general(params: GeneralParams, x: Any, force: bool = False) -> np.ndarray:
    x = _as_state(x, params.n)
    if not force:
        _require_step(params, [x])
    return x + params.h * (-params.delta * x + (1.0 - x) * _infection(params, x))


def step_bivirus(params: BiVirusParams, x1: Any, x2: Any, force: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    x1, x2 = _as_state(x1, params.n), _as_state(x2, params.n)
    if not force:
        _require_step(params, [x1, x2], simplex=True)
    free = 1.0 - x1 - x2
    out = []
    for v, x in zip(params.viruses, (x1, x2)):
        g = tensor_vector_power(v.B, x, 1) + tensor_vector_power(v.H, x, 2)
        out.append(x + v.h * (-v.delta * x + free * g))
    return out[0], out[1]


def _stepper(params: Any):
    if isinstance(params, SisParams):
        return step
    if isinstance(params, GeneralParams):
        return step_general
    raise TypeError(f"Parâmetros não suportados: {type(params).__name__}")


# ---------------- trajetórias ----------------
@dataclass
class Trajectory:
    h: float
    states: np.ndarray                    # (T+1) × n
    states2: np.ndarray | None = None     # bi-vírus

    @property
    def T(self) -> int:
        return len(self.states) - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def is_bivirus(self) -> bool:
        return self.states2 is not None

    def to_frame(self) -> pd.DataFrame:
        t = np.arange(len(self.states))
        if self.states2 is None:
            cols = {f"x{i + 1}": self.states[:, i] for i in range(self.n)}
        else:
            cols = {f"v1_x{i + 1}": self.states[:, i] for i in range(self.n)}
            cols.update({f"v2_x{i + 1}": self.states2[:, i] for i in range(self.n)})
        return pd.DataFrame({"t": t, **cols})


def simulate(params: Any, x0: Any, T: int, mode: str = "A3a", force: bool = False) -> Trajectory:
    """
    Itera o passo adequado T vezes e guarda todos os estados. Para bi-vírus,
    x0 = (x1, x2).
    """
    if int(T) < 0:
        raise ValueError(f"Número de passos negativo: {T}")
    T = int(T)
    report = validate_assumptions(params, mode, x0)
    blocking = step_failures(params, mode, x0)
    if blocking and not force:
        raise AssumptionViolation("Hipóteses violadas: " + "; ".join(blocking), report)
    if not report.ok:
        logger.warning("Simulação com hipóteses violadas | %s", [c.name for c in report.failed()])

    logger.info("Simulate start | n=%d steps=%d h=%g", params.n, T, params.h)
    if isinstance(params, BiVirusParams):
        x1, x2 = (_as_state(v, params.n).copy() for v in x0)
        S1 = np.empty((T + 1, params.n))
        S2 = np.empty((T + 1, params.n))
        S1[0], S2[0] = x1, x2
        for t in range(T):
            x1, x2 = step_bivirus(params, x1, x2, force=force)
            S1[t + 1], S2[t + 1] = x1, x2
        return Trajectory(params.h, S1, S2)

    fn = _stepper(params)
    x = _as_state(x0, params.n).copy()
    S = np.empty((T + 1, params.n))
    S[0] = x
    for t in range(T):
        x = fn(params, x, force=force)
        S[t + 1] = x
    return Trajectory(params.h, S)


@dataclass
class BatchResult:
    final: np.ndarray                   # R × n (bi-vírus: R × 2n, vírus 1 antes)
    residual: np.ndarray                # ‖x⁺ − x‖∞ no último passo, por linha
    steps: int
    converged_at: np.ndarray            # primeiro passo com resíduo < tol (−1 se nunca)

    @property
    def converged(self) -> np.ndarray:
        return self.converged_at >= 0


def _run_batch(update, X: np.ndarray, max_steps: int, tol: float) -> BatchResult:
    R = X.shape[0]
    converged_at = np.full(R, -1, dtype=np.int64)
    residual = np.full(R, np.inf)
    t = 0
    while t < max_steps:
        Y = update(X)
        residual = np.max(np.abs(Y - X), axis=1) if X.shape[1] else np.zeros(R)
        X = Y
        t += 1
        newly = (converged_at < 0) & (residual < tol)
        converged_at[newly] = t
        if np.all(converged_at >= 0):
            break
    return BatchResult(X, residual, t, converged_at)


def simulate_batch(
    params: SisParams | GeneralParams, X0: Any, max_steps: int = 1_000_000, tol: float = 1e-8, force: bool = False
) -> BatchResult:
    """Avança várias condições iniciais juntas até todas pararem de mexer (resíduo < tol)."""
    X = np.array(X0, dtype=float, ndmin=2)
    if X.shape[1] != params.n:
        raise ValueError(f"Lote com shape {X.shape}, esperado (R, {params.n})")
    if not force:
        _require_step(params, [X.reshape(-1)])
    h, d = params.h, params.delta

    def update(Z: np.ndarray) -> np.ndarray:
        return Z + h * (-d * Z + (1.0 - Z) * infection_pressure(params, Z))

    return _run_batch(update, X, int(max_steps), tol)


def simulate_bivirus_batch(
    params: BiVirusParams, X1: Any, X2: Any, max_steps: int = 1_000_000, tol: float = 1e-8, force: bool = False
) -> BatchResult:
    X1 = np.array(X1, dtype=float, ndmin=2)
    X2 = np.array(X2, dtype=float, ndmin=2)
    n = params.n
    if X1.shape != X2.shape or X1.shape[1] != n:
        raise ValueError(f"Lotes incompatíveis: {X1.shape} e {X2.shape}, n={n}")
    if not force:
        _require_step(params, [X1.reshape(-1), X2.reshape(-1)], simplex=True)
    v1, v2 = params.viruses

    def update(Z: np.ndarray) -> np.ndarray:
        Z1, Z2 = Z[:, :n], Z[:, n:]
        free = 1.0 - Z1 - Z2
        N1 = Z1 + v1.h * (-v1.delta * Z1 + free * infection_pressure(v1, Z1))
        N2 = Z2 + v2.h * (-v2.delta * Z2 + free * infection_pressure(v2, Z2))
        return np.concatenate([N1, N2], axis=1)

    return _run_batch(update, np.concatenate([X1, X2], axis=1), int(max_steps), tol)


def random_simplex_states(n: int, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Por nó: (u₁, u₂) ~ U(0,1)², divididos por max(1, u₁ + u₂)."""
    U1 = rng.random((count, n))
    U2 = rng.random((count, n))
    scale = np.maximum(1.0, U1 + U2)
    return U1 / scale, U2 / scale


def cluster_limits(states: Any, tol: float = LIMIT_CLUSTER_TOL) -> Tuple[List[np.ndarray], np.ndarray]:
    """Agrupa estados-limite pela norma do máximo; devolve representantes e rótulos."""
    S = np.array(states, dtype=float, ndmin=2)
    reps: List[np.ndarray] = []
    labels = np.empty(len(S), dtype=np.int64)
    for r, s in enumerate(S):
        for c, rep in enumerate(reps):
            if np.max(np.abs(s - rep)) <= tol:
                labels[r] = c
                break
        else:
            reps.append(s)
            labels[r] = len(reps) - 1
    return reps, labels


# ---------------- equilíbrios ----------------
@dataclass
class EquilibriumParams:
    """
    Iteração do mapa 𝒯; cai para a iteração do próprio passo quando 𝒯 trava
    sem cumprir o resíduo.
    """
    tol: float = 1e-12            # ‖𝒯(x) − x‖∞ para parar
    max_iters: int = 1_000_000
    stall_tol: float = 1e-15      # mudança mínima antes de declarar travamento
    residual_factor: float = 10.0 # exige ‖step(x̄) − x̄‖∞ ≤ residual_factor·tol


def fixed_point_map(params: SisParams | GeneralParams, x: Any) -> np.ndarray:
    """𝒯ᵢ(x) = gᵢ/(1 + gᵢ), g = 𝒟⁻¹(𝓑x + Σ_k 𝓕_k x^{k−1})."""
    x = _as_state(x, params.n)
    if np.any(x < 0):
        raise ValueError("fixed_point_map exige x ≥ 0")
    g = _infection(params, x) / params.delta
    return g / (1.0 + g)


def _step_residual(params: SisParams | GeneralParams, x: np.ndarray) -> float:
    return float(np.max(np.abs(_stepper(params)(params, x, force=True) - x)))


def omega_initial_point(params: SisParams | GeneralParams) -> np.ndarray:
    """
    Canto inferior do conjunto invariante: ½·z para ordem 3 e
    (n−2)/(n−1)·z̃ para ordem geral (z, z̃ marcam nós com arestas de ordem ≥ 3).
    """
    z = np.zeros(params.n)
    for T in params.higher.values():
        z = np.maximum(z, T.row_support().astype(float))
    if isinstance(params, GeneralParams) and params.max_order > 3:
        return (params.n - 2) / max(params.n - 1, 1) * z
    return 0.5 * z


def find_equilibrium(
    params: SisParams | GeneralParams,
    init: Any,
    eq_params: EquilibriumParams | Dict[str, Any] | None = None,
) -> np.ndarray:
    """
    Itera 𝒯 a partir de init até ‖𝒯(x) − x‖∞ < tol. Partindo de 1ₙ chega ao
    maior ponto fixo (𝒯 é monótono).
    """
    if eq_params is None:
        eq_params = EquilibriumParams()
    elif isinstance(eq_params, dict):
        eq_params = EquilibriumParams(**eq_params)

    x = _as_state(init, params.n).copy()
    if np.any(x < 0):
        raise ValueError("find_equilibrium exige init ≥ 0")
    target = eq_params.residual_factor * eq_params.tol

    logger.info("Equilibrium start | n=%d tol=%.1e", params.n, eq_params.tol)
    used = 0
    for used in range(1, eq_params.max_iters + 1):
        y = fixed_point_map(params, x)
        change = float(np.max(np.abs(y - x)))
        x = y
        if change < eq_params.tol:
            res = _step_residual(params, x)
            if res <= target:
                logger.info("Equilibrium found | iters=%d residual=%.2e", used, res)
                return x
            if change < eq_params.stall_tol:
                break

    # fallback: iterar o passo
    logger.warning("𝒯 travou sem cumprir o resíduo | iters=%d -> iterando o passo", used)
    fn = _stepper(params)
    res = _step_residual(params, x)
    for extra in range(eq_params.max_iters - used):
        y = fn(params, x, force=True)
        res = float(np.max(np.abs(y - x)))
        x = y
        if res <= target:
            logger.info("Equilibrium found (passo) | iters=%d residual=%.2e", used + extra + 1, res)
            return x
    raise NotConverged(
        f"Equilíbrio não encontrado em {eq_params.max_iters} iterações", best=x, residual=res,
        iterations=eq_params.max_iters,
    )


# ---------------- dinâmica do erro ----------------
def _require_equilibrium(params: SisParams | GeneralParams, xbar: np.ndarray, tol: float) -> None:
    res = _step_residual(params, xbar)
    if res > tol:
        raise ValueError(f"x̄ não é equilíbrio: resíduo {res:.3e} > {tol:.1e}")


def _contract(T: SparseCubicalTensor, x: np.ndarray, p: int) -> SparseCubicalTensor | np.ndarray:
    """T x^p com p = 0 devolvendo o próprio T; matrizes saem densas."""
    out = T if p == 0 else tensor_vector_power(T, x, p)
    if isinstance(out, SparseCubicalTensor) and out.order == 2:
        return out.to_dense()
    return out


def _expansion_terms(params: SisParams | GeneralParams, xbar: np.ndarray) -> Dict[int, Any]:
    """
    Coeficientes de g(x̄ + y) = g(x̄) + Σ_m P_m y^m:
    P₁ = 𝓑 + Σ_k C(k−1,1) 𝓕_k x̄^{k−2} (matriz), P_m = Σ_{k>m} C(k−1,m) 𝓕_k x̄^{k−1−m}.
    """
    n = params.n
    P: Dict[int, Any] = {1: params.B.to_dense()}
    for k, F in params.higher.items():
        for m in range(1, k):
            term = _contract(F, xbar, k - 1 - m)
            c = comb(k - 1, m)
            if m == 1:
                P[1] = P[1] + c * term
            else:
                P[m] = P.get(m, SparseCubicalTensor(m + 1, n)) + term * c
    return P


def linearization(params: SisParams | GeneralParams, xbar: Any) -> np.ndarray:
    """I − h𝒟 + h(I − diag x̄)P₁ − h·diag(𝓑x̄ + Σ𝓕_k x̄^{k−1}); não exige equilíbrio."""
    xbar = _as_state(xbar, params.n)
    P1 = _expansion_terms(params, xbar)[1]
    g = _infection(params, xbar)
    h = params.h
    return np.eye(params.n) - h * np.diag(params.delta) + h * (1.0 - xbar)[:, None] * P1 - h * np.diag(g)


def error_dynamics_general(
    params: SisParams | GeneralParams, xbar: Any, tol: float = 1e-10
) -> List[SparseCubicalTensor | np.ndarray]:
    """
    [𝒢₁, 𝒢₂, …, 𝒢_K] com y⁺ = Σ_m 𝒢_m y^m, y = x − x̄:
    𝒢₁ = linearização; 𝒢_m = h(I − diag x̄)P_m − h·P̃_{m−1} (P̃ = levantado).
    """
    xbar = _as_state(xbar, params.n)
    _require_equilibrium(params, xbar, tol)
    P = _expansion_terms(params, xbar)
    K = max([2, *params.higher])
    h = params.h
    keep = np.diag(1.0 - xbar)

    G: List[SparseCubicalTensor | np.ndarray] = [linearization(params, xbar)]
    for m in range(2, K + 1):
        prev = P[m - 1]
        prev_t = SparseCubicalTensor.from_dense(prev) if isinstance(prev, np.ndarray) else prev
        Gm = -h * prev_t.lift()
        if m in P:
            Gm = matrix_tensor_product(keep, P[m]) * h + Gm
        G.append(Gm)
    return G


def error_dynamics_tensors(
    params: SisParams, xbar: Any, tol: float = 1e-10
) -> Tuple[np.ndarray, SparseCubicalTensor, SparseCubicalTensor]:
    """
    (𝒦₁, 𝒦₂, 𝒦₃) com y⁺ = 𝒦₁y + 𝒦₂y² + 𝒦₃y³:
    𝒦₁ = I − h𝒟 + h(I − diag x̄)(𝓑 + 2𝓗x̄) − h·diag(𝓑x̄ + 𝓗x̄²),
    𝒦₂ = h(I − diag x̄)𝓗 − h(𝓑̃ + 2𝓗̃x̄), 𝒦₃ = −h𝓗̃.
    """
    if not isinstance(params, SisParams):
        raise TypeError("error_dynamics_tensors espera SisParams; use error_dynamics_general")
    xbar = _as_state(xbar, params.n)
    _require_equilibrium(params, xbar, tol)
    h = params.h
    Hx = tensor_vector_power(params.H, xbar, 1)            # ordem 2
    K1 = linearization(params, xbar)
    K2 = matrix_tensor_product(np.diag(1.0 - xbar), params.H) * h - (params.B.lift() + Hx.lift() * 2.0) * h
    K3 = params.H.lift() * -h
    return K1, K2, K3


def default_workers() -> int:
    """Número de threads padrão (variável CONTAGIO_THREADS; 1 se ausente)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} inválido: {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} deve ser ≥ 1: {value}")
    return value
