# contagio_hipergrafo/services/analysis.py
"""
Condições verificáveis do modelo SIS em hipergrafos: número de reprodução,
condições suficientes de regime (saudável, biestável, endêmico), domínios
de atração explícitos, jacobianos e a classificação final.

As condições são suficientes, não necessárias: quando nenhuma dispara o
regime fica "Indeterminate".
"""
from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Sequence, Tuple
import logging

import numpy as np

from .dynamics import (
    BiVirusParams,
    EquilibriumParams,
    GeneralParams,
    SisParams,
    default_workers,
    error_dynamics_general,
    error_dynamics_tensors,
    find_equilibrium,
    linearization,
    simulate_batch,
    step,
    step_general,
)
from .errors import AssumptionViolation
from .hypergraph import DirectedHypergraph, adjacency_tensors
from .tensor_core import (
    PerronParams,
    SparseCubicalTensor,
    diagonal_dominance,
    is_irreducible,
    perron,
    tensor_vector_power,
)

__all__ = [
    "AnalysisParams",
    "Condition",
    "RegimeReport",
    "DomainOfAttraction",
    "JacobianResult",
    "BiVirusReport",
    "DomainValidation",
    "reproduction_number",
    "threshold_equivalence",
    "prop1_healthy_global",
    "prop2_bistability",
    "prop3_endemic",
    "prop8_healthy_global",
    "prop9_bistability",
    "prop10_endemic",
    "thm1_alpha1",
    "thm2_local_endemic",
    "thm3_alpha2",
    "thm5_healthy_p_plus",
    "thm6_endemic_p_plus",
    "p_plus_roots",
    "jacobian",
    "endemic_existence_certificate",
    "bivirus_dominant_stability",
    "bivirus_conditions",
    "classify",
    "validate_domain",
    "tune_pairwise_rate",
]

logger = logging.getLogger(__name__)

HEALTHY = "HealthyGlobal"
BISTABLE = "BistableCandidate"
ENDEMIC = "EndemicCandidate"
INDETERMINATE = "Indeterminate"


@dataclass
class AnalysisParams:
    """
    Limiares das verificações. "β_ijk suficientemente pequeno" vira
    max(𝓗) ≤ smallness_factor·min(δ), a menos que smallness_tol seja dado.
    """
    smallness_factor: float = 0.01          # relativo ao menor δ
    smallness_tol: float | None = None      # limiar absoluto (sobrepõe o fator)
    bisect_iters: int = 200                 # bisseção de p₊
    equilibrium_tol: float = 1e-10          # x̄ aceito como equilíbrio
    perron: PerronParams = field(default_factory=PerronParams)


def _coerce(params: AnalysisParams | Dict[str, Any] | None) -> AnalysisParams:
    if params is None:
        return AnalysisParams()
    if isinstance(params, dict):
        return AnalysisParams(**params)
    return params


# ---------------- tipos de relatório ----------------
@dataclass
class Condition:
    name: str
    holds: bool
    margin: float = float("nan")
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "holds": bool(self.holds), "margin": _num(self.margin), "detail": self.detail}


def _num(v: Any) -> Any:
    """float JSON-friendly (inf/nan viram string)."""
    if v is None:
        return None
    v = float(v)
    if np.isfinite(v):
        return v
    return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")


@dataclass
class RegimeReport:
    rho_reproduction: float
    rho_prop1: float
    z: np.ndarray
    theta: float | None
    conditions: List[Condition]
    classification: str
    heuristic: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classification": self.classification,
            "heuristic": self.heuristic,
            "rho_reproduction": _num(self.rho_reproduction),
            "rho_prop1": _num(self.rho_prop1),
            "z": [int(v) for v in self.z],
            "theta": _num(self.theta),
            "conditions": [c.to_dict() for c in self.conditions],
        }


@dataclass
class DomainOfAttraction:
    """
    Bola ‖x(0) − target‖∞ < radius. Para alpha2 e p₊ do equilíbrio endêmico
    a bola é em coordenadas de erro (em volta de x̄).
    """
    kind: str                                   # alpha1 | alpha2 | p_plus
    radius: float
    target: np.ndarray
    per_node: np.ndarray | None = None
    is_global: bool = False
    coordinates: str = "state"                  # state | error
    conditions: List[Condition] = field(default_factory=list)

    def contains(self, x: Any) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.max(np.abs(x - self.target)) < self.radius) if len(x) else True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "radius": _num(self.radius),
            "is_global": self.is_global,
            "coordinates": self.coordinates,
            "target": [float(v) for v in self.target],
            "per_node": None if self.per_node is None else [_num(v) for v in self.per_node],
            "conditions": [c.to_dict() for c in self.conditions],
        }


class Prop1Result(NamedTuple):
    holds: bool
    rho: float
    z: np.ndarray


class Prop2Result(NamedTuple):
    holds: bool
    rho: float
    theta: float | None


class Prop3Result(NamedTuple):
    holds: bool
    rho: float
    h_max_entry: float


class Thm2Result(NamedTuple):
    case_i: bool
    case_ii: bool
    margins: Dict[str, np.ndarray]


@dataclass
class JacobianResult:
    matrix: np.ndarray
    rho: float
    stable: bool


# ---------------- utils ----------------
def _rho(M: Any, ap: AnalysisParams) -> float:
    return perron(M, ap.perron).radius


def _reproduction_matrix(params: SisParams | GeneralParams) -> np.ndarray:
    n = params.n
    return np.eye(n) - params.h * np.diag(params.delta) + params.h * params.B.to_dense()


def _support(params: SisParams | GeneralParams) -> np.ndarray:
    """z (ordem 3) ou z̃ (ordem geral): 1 onde algum 𝓕_k tem a linha não nula."""
    z = np.zeros(params.n)
    for T in params.higher.values():
        z = np.maximum(z, T.row_support().astype(float))
    return z


def _is_general(params: Any) -> bool:
    return isinstance(params, GeneralParams) and params.max_order > 3


def _as_sis(params: SisParams | GeneralParams) -> SisParams:
    return params if isinstance(params, SisParams) else params.to_sis()


def _nodes(mask: np.ndarray) -> List[int]:
    """Índices 1-based para mensagens."""
    return [int(i) + 1 for i in np.flatnonzero(mask)]


# ---------------- número de reprodução ----------------
def reproduction_number(params: SisParams | GeneralParams, ap: AnalysisParams | Dict | None = None) -> float:
    """ρ(I − h𝒟 + h𝓑)."""
    return _rho(_reproduction_matrix(params), _coerce(ap))


def threshold_equivalence(params: SisParams | GeneralParams, ap: AnalysisParams | Dict | None = None) -> Dict[str, Any]:
    """ρ(I − h𝒟 + h𝓑) − 1 e ρ(𝒟⁻¹𝓑) − 1 têm o mesmo sinal."""
    ap = _coerce(ap)
    rho = reproduction_number(params, ap)
    rho_d = _rho(params.B.to_dense() / params.delta[:, None], ap)
    tie = 1e-9
    same = abs(rho - 1) <= tie or abs(rho_d - 1) <= tie or np.sign(rho - 1) == np.sign(rho_d - 1)
    return {"rho_reproduction": rho, "rho_dinv_b": rho_d, "same_side": bool(same)}


# ---------------- regime saudável ----------------
def prop1_healthy_global(params: SisParams | GeneralParams, ap: AnalysisParams | Dict | None = None) -> Prop1Result:
    """ρ(𝒟⁻¹𝓑 + 𝒟⁻¹𝓗z) < 1 ⇒ estado saudável globalmente exponencialmente estável."""
    if _is_general(params):
        return prop8_healthy_global(params, ap)
    ap = _coerce(ap)
    sis = _as_sis(params)
    z = _support(sis)
    M = (sis.B.to_dense() + tensor_vector_power(sis.H, z, 1).to_dense()) / sis.delta[:, None]
    rho = _rho(M, ap)
    return Prop1Result(rho < 1.0, rho, z)


def prop8_healthy_global(params: GeneralParams, ap: AnalysisParams | Dict | None = None) -> Prop1Result:
    """Ordem geral: ρ(𝒟⁻¹𝓑 + 𝒟⁻¹Σ_k 𝓕_k z̃^{k−2}) < 1."""
    ap = _coerce(ap)
    z = _support(params)
    M = params.B.to_dense()
    for k, F in params.higher.items():
        M = M + tensor_vector_power(F, z, k - 2).to_dense()
    rho = _rho(M / params.delta[:, None], ap)
    return Prop1Result(rho < 1.0, rho, z)


# ---------------- biestabilidade ----------------
def prop2_bistability(params: SisParams | GeneralParams, ap: AnalysisParams | Dict | None = None) -> Prop2Result:
    """
    θ = min_{i: 𝓗ᵢ ≠ 0} (2𝒟⁻¹𝓑z + 𝒟⁻¹𝓗z²)ᵢ; biestável se ρ(I − h𝒟 + h𝓑) < 1 e θ ≥ 4.
    Sem arestas de ordem 3, θ fica ausente e a condição falha.
    """
    if _is_general(params):
        return prop9_bistability(params, ap)
    ap = _coerce(ap)
    sis = _as_sis(params)
    rho = reproduction_number(sis, ap)
    z = _support(sis)
    if not z.any():
        return Prop2Result(False, rho, None)
    vals = (2.0 * tensor_vector_power(sis.B, z, 1) + tensor_vector_power(sis.H, z, 2)) / sis.delta
    theta = float(vals[z > 0].min())
    return Prop2Result(bool(rho < 1.0 and theta >= 4.0), rho, theta)


def prop9_bistability(params: GeneralParams, ap: AnalysisParams | Dict | None = None) -> Prop2Result:
    """
    θ̃ = min_{i: z̃ᵢ = 1} (𝒟⁻¹(𝓑z̃ + Σ_k ((n−2)/(n−1))^{k−2} 𝓕_k z̃^{k−1}))ᵢ; limiar n − 1.
    Em n = 3 coincide com a condição de ordem 3 dividida por 2.
    """
    ap = _coerce(ap)
    rho = reproduction_number(params, ap)
    z = _support(params)
    n = params.n
    if not z.any() or n < 3:
        return Prop2Result(False, rho, None)
    ratio = (n - 2) / (n - 1)
    total = tensor_vector_power(params.B, z, 1)
    for k, F in params.higher.items():
        total = total + ratio ** (k - 2) * tensor_vector_power(F, z, k - 1)
    theta = float((total / params.delta)[z > 0].min())
    return Prop2Result(bool(rho < 1.0 and theta >= n - 1), rho, theta)


# ---------------- regime endêmico ----------------
def _smallness(params: SisParams | GeneralParams, ap: AnalysisParams, tol: float | None) -> float:
    if tol is not None:
        return float(tol)
    if ap.smallness_tol is not None:
        return float(ap.smallness_tol)
    return ap.smallness_factor * float(params.delta.min())


def prop3_endemic(
    params: SisParams | GeneralParams, smallness_tol: float | None = None, ap: AnalysisParams | Dict | None = None
) -> Prop3Result:
    """ρ(I − h𝒟 + h𝓑) > 1 e max(𝓗) ≤ limiar (veredito heurístico)."""
    ap = _coerce(ap)
    rho = reproduction_number(params, ap)
    top = max((T.max_entry() for T in params.higher.values()), default=0.0)
    tol = _smallness(params, ap, smallness_tol)
    return Prop3Result(bool(rho > 1.0 and top <= tol), rho, top)


def prop10_endemic(
    params: GeneralParams, smallness_tol: float | None = None, ap: AnalysisParams | Dict | None = None
) -> Prop3Result:
    """Ordem geral; mesmo limiar aplicado a todos os 𝓕_k."""
    return prop3_endemic(params, smallness_tol, ap)


def endemic_existence_certificate(params: SisParams | GeneralParams) -> Condition:
    """
    Certificado de Gershgorin: 𝓑 estritamente diagonal-dominante com
    δᵢ < βᵢᵢ − Σ_{j≠i} βᵢⱼ para todo i implica ρ(I − h𝒟 + h𝓑) > 1.
    """
    B = params.B.to_dense()
    diag = np.diag(B)
    off = np.abs(B).sum(axis=1) - np.abs(diag)
    dominant = diagonal_dominance(params.B) == "strict"
    margin = float(np.min(diag - off - params.delta))
    return Condition(
        "Gershgorin: δᵢ < βᵢᵢ − Σ_{j≠i}βᵢⱼ (𝓑 diagonal-dominante)",
        bool(dominant and margin > 0),
        margin,
        "" if dominant else "𝓑 não é estritamente diagonal-dominante",
    )


# ---------------- domínios de atração ----------------
def thm1_alpha1(params: SisParams | GeneralParams) -> DomainOfAttraction:
    """
    α₁ = minᵢ (δᵢ − Σⱼβᵢⱼ)/Σⱼₖβᵢⱼₖ em volta do estado saudável. Global quando
    δᵢ > Σⱼβᵢⱼ + Σⱼₖβᵢⱼₖ para todo i.
    """
    sis = _as_sis(params)
    slack = sis.delta - sis.pair_rates
    bad = slack <= 0
    if bad.any():
        raise AssumptionViolation(f"α₁ exige δᵢ > Σⱼβᵢⱼ; falha nos nós {_nodes(bad)}")

    higher = sis.higher_rates
    with np.errstate(divide="ignore"):
        per_node = np.where(higher > 0, slack / np.where(higher > 0, higher, 1.0), np.inf)
    radius = float(per_node.min())
    is_global = bool(np.all(slack > higher))
    irreducible = is_irreducible(sis.H)
    if not irreducible:
        logger.warning("α₁ calculado com 𝓗 redutível | nós_sem_ordem3=%s", _nodes(higher == 0))
    conditions = [
        Condition("Thm1: δᵢ > Σⱼβᵢⱼ", True, float(slack.min())),
        Condition("Thm1: 𝓗 irredutível", irreducible),
        Condition("Thm1: global (δᵢ > Σβᵢⱼ + Σβᵢⱼₖ)", is_global, float((slack - higher).min())),
    ]
    return DomainOfAttraction("alpha1", radius, np.zeros(sis.n), per_node, is_global, "state", conditions)


def thm2_local_endemic(
    params: SisParams, xbar: Any, ap: AnalysisParams | Dict | None = None
) -> Thm2Result:
    """
    Estabilidade local de um equilíbrio endêmico x̄ ≥ ⅔·1ₙ com
    δᵢ > (1 − x̄ᵢ)Σⱼ(βᵢⱼ + 2Σₖβᵢⱼₖx̄ₖ). O lado do limiar
    τᵢ = 2sᵢ/(2sᵢ + Σⱼβᵢⱼ), sᵢ = Σⱼₖβᵢⱼₖx̄ₖ, separa biestabilidade (x̄ᵢ < τᵢ)
    de estabilidade só do endêmico (τᵢ < x̄ᵢ < 1).
    """
    ap = _coerce(ap)
    sis = _as_sis(params)
    xbar = np.asarray(xbar, dtype=float)
    _require_equilibrium(sis, xbar, ap)
    s = tensor_vector_power(sis.H, xbar, 1).to_dense().sum(axis=1)
    pair = sis.pair_rates
    denom = 2 * s + pair
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(denom > 0, 2 * s / np.where(denom > 0, denom, 1.0), 0.0)

    above = xbar - 2.0 / 3.0
    curing = sis.delta - (1.0 - xbar) * (pair + 2 * s)
    below_tau = tau - xbar
    above_tau = np.minimum(xbar - tau, 1.0 - xbar)
    base = bool(np.all(above >= 0) and np.all(curing > 0))
    margins = {"x_ge_two_thirds": above, "curing": curing, "below_threshold": below_tau, "above_threshold": above_tau, "threshold": tau}
    return Thm2Result(base and bool(np.all(below_tau > 0)), base and bool(np.all(above_tau > 0)), margins)


def _require_equilibrium(params: SisParams | GeneralParams, xbar: np.ndarray, ap: AnalysisParams) -> None:
    fn = step if isinstance(params, SisParams) else step_general
    res = float(np.max(np.abs(fn(params, xbar, force=True) - xbar)))
    if res > ap.equilibrium_tol:
        raise ValueError(f"x̄ não é equilíbrio: resíduo {res:.3e}")


def _abs_row_sums(T: SparseCubicalTensor | np.ndarray) -> np.ndarray:
    if isinstance(T, np.ndarray):
        return np.abs(T).sum(axis=1)
    return T.row_abs_sums()


def thm3_alpha2(params: SisParams, xbar: Any, ap: AnalysisParams | Dict | None = None) -> DomainOfAttraction:
    """
    α₂ = minᵢ (−𝒦̄₂ + √(𝒦̄₂² − 4𝒦̄₃(𝒦̄₁ − 1)))/(2𝒦̄₃), com 𝒦̄ₘ as somas absolutas por
    linha dos tensores da dinâmica do erro. A bola é em volta de x̄
    (coordenadas de erro y = x − x̄). Linhas com 𝒦̄₃ = 0 usam (1 − 𝒦̄₁)/𝒦̄₂.
    """
    ap = _coerce(ap)
    sis = _as_sis(params)
    xbar = np.asarray(xbar, dtype=float)
    K1, K2, K3 = error_dynamics_tensors(sis, xbar, tol=ap.equilibrium_tol)
    logger.warning("α₂ é lido em coordenadas de erro: bola ‖x(0) − x̄‖∞ < α₂")

    h = sis.h
    g = tensor_vector_power(sis.B, xbar, 1) + tensor_vector_power(sis.H, xbar, 2)
    s = tensor_vector_power(sis.H, xbar, 1).to_dense().sum(axis=1)
    curing = sis.delta - ((1.0 - xbar) * (sis.pair_rates + 2 * s) - g)
    bad = curing <= 0
    if bad.any():
        raise AssumptionViolation(f"α₂ exige a desigualdade de cura por nó; falha nos nós {_nodes(bad)}")

    k1, k2, k3 = _abs_row_sums(K1), _abs_row_sums(K2), _abs_row_sums(K3)
    if np.any(k1 >= 1.0):
        raise AssumptionViolation(f"α₂ exige 𝒦̄₁ < 1; falha nos nós {_nodes(k1 >= 1.0)}")
    per_node = _quadratic_radius(k1, k2, k3)
    margin_3b = 1.0 - h * float((sis.delta + sis.pair_rates + sis.higher_rates).max())
    is_global = bool(np.all(k1 + k2 + k3 < 1.0))
    conditions = [
        Condition("Thm3: desigualdade de cura por nó", True, float(curing.min())),
        Condition("Thm3: 𝓗 irredutível", is_irreducible(sis.H)),
        Condition("Thm3: hipótese 3b", margin_3b > 0, margin_3b),
        Condition("Thm3: global (𝒦̄₁ + 𝒦̄₂ + 𝒦̄₃ < 1)", is_global, float((1.0 - k1 - k2 - k3).min())),
    ]
    return DomainOfAttraction("alpha2", float(per_node.min()), xbar.copy(), per_node, is_global, "error", conditions)


def _quadratic_radius(k1: np.ndarray, k2: np.ndarray, k3: np.ndarray) -> np.ndarray:
    """Raiz positiva de k1 + k2·y + k3·y² = 1 por linha (inf quando não há termo não linear)."""
    out = np.full(len(k1), np.inf)
    quad = k3 > 0
    disc = k2[quad] ** 2 - 4 * k3[quad] * (k1[quad] - 1.0)
    out[quad] = (-k2[quad] + np.sqrt(disc)) / (2 * k3[quad])
    lin = ~quad & (k2 > 0)
    out[lin] = (1.0 - k1[lin]) / k2[lin]
    return out


def p_plus_roots(coeffs: Sequence[Any], iters: int = 200) -> np.ndarray:
    """
    Para cada nó i resolve Σ_k c_kᵢ y^{k−1} = 1, y > 0, por bisseção.
    coeffs[0] = c₁ (precisa ser < 1); sem coeficientes de ordem ≥ 2 a raiz é inf.
    """
    C = np.array([np.asarray(c, dtype=float) for c in coeffs], ndmin=2)
    if C.shape[0] < 1:
        raise ValueError("p_plus_roots exige pelo menos c₁")
    if np.any(C < 0):
        raise ValueError("Coeficientes devem ser não negativos")
    if np.any(C[0] >= 1.0):
        raise ValueError(f"c₁ deve ser < 1 em todos os nós; falha em {_nodes(C[0] >= 1.0)}")

    powers = np.arange(C.shape[0])[:, None]

    def f(y: np.ndarray) -> np.ndarray:
        return np.sum(C * y[None, :] ** powers, axis=0)

    n = C.shape[1]
    finite = np.any(C[1:] > 0, axis=0) if C.shape[0] > 1 else np.zeros(n, dtype=bool)
    hi = np.ones(n)
    for _ in range(2000):
        grow = finite & (f(hi) <= 1.0)
        if not grow.any():
            break
        hi[grow] *= 2.0
    lo = np.zeros(n)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        over = f(mid) > 1.0
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    return np.where(finite, 0.5 * (lo + hi), np.inf)


def thm5_healthy_p_plus(params: SisParams | GeneralParams, ap: AnalysisParams | Dict | None = None) -> DomainOfAttraction:
    """
    p₊ do estado saudável: 𝒞₁ = I − h𝒟 + h𝓑 e 𝒞ⱼ = h𝓕_{j+1}; exige δᵢ > Σⱼβᵢⱼ.
    Em ordem 3 coincide com α₁.
    """
    ap = _coerce(ap)
    bad = params.delta - params.pair_rates <= 0
    if bad.any():
        raise AssumptionViolation(f"p₊ saudável exige δᵢ > Σⱼβᵢⱼ; falha nos nós {_nodes(bad)}")
    coeffs = [np.abs(_reproduction_matrix(params)).sum(axis=1)]
    top = max([3, *params.higher])
    for k in range(3, top + 1):
        T = params.higher.get(k)
        coeffs.append(params.h * T.row_abs_sums() if T is not None else np.zeros(params.n))
    per_node = p_plus_roots(coeffs, ap.bisect_iters)
    radius = float(per_node.min())
    conditions = [Condition("Thm5: δᵢ > Σⱼβᵢⱼ", True, float((params.delta - params.pair_rates).min()))]
    return DomainOfAttraction("p_plus", radius, np.zeros(params.n), per_node, radius > 1.0, "state", conditions)


def thm6_endemic_p_plus(
    params: SisParams | GeneralParams, xbar: Any, ap: AnalysisParams | Dict | None = None
) -> DomainOfAttraction:
    """
    p₊ do equilíbrio endêmico a partir das somas absolutas de 𝒢₁…𝒢_K; exige
    δᵢ > α₃ᵢ (equivalente a soma da linha i de 𝒢₁ < 1).
    """
    ap = _coerce(ap)
    xbar = np.asarray(xbar, dtype=float)
    G = error_dynamics_general(params, xbar, tol=ap.equilibrium_tol)
    alpha3 = (G[0].sum(axis=1) - 1.0 + params.h * params.delta) / params.h
    bad = params.delta <= alpha3
    if bad.any():
        raise AssumptionViolation(f"p₊ endêmico exige δᵢ > α₃ᵢ; falha nos nós {_nodes(bad)}")
    coeffs = [_abs_row_sums(Gm) for Gm in G]
    per_node = p_plus_roots(coeffs, ap.bisect_iters)
    radius = float(per_node.min())
    conditions = [Condition("Thm6: δᵢ > α₃ᵢ", True, float((params.delta - alpha3).min()))]
    return DomainOfAttraction("p_plus", radius, xbar.copy(), per_node, radius > 1.0, "error", conditions)


# ---------------- jacobianos ----------------
def jacobian(params: SisParams | GeneralParams, xbar: Any, ap: AnalysisParams | Dict | None = None) -> JacobianResult:
    """
    J(x̄) = I + h(−𝒟 + (I − diag x̄)(𝓑 + 2𝓗x̄) − diag(𝓑x̄ + 𝓗x̄²)); em ordem geral
    os termos de 𝓕_k entram com coeficiente k − 1. J(0) = I − h𝒟 + h𝓑.
    """
    ap = _coerce(ap)
    J = linearization(params, xbar)
    if np.any(J < 0):
        # fora do caso não negativo o raio vem dos autovalores
        rho = float(np.max(np.abs(np.linalg.eigvals(J))))
        logger.info("Jacobiano com entradas negativas | rho por autovalores=%.6f", rho)
    else:
        rho = _rho(J, ap)
    return JacobianResult(J, rho, bool(rho < 1.0))


# ---------------- bi-vírus ----------------
@dataclass
class BiVirusReport:
    rho_reproduction: Tuple[float, float]
    rho_prop1: Tuple[float, float]
    theta: Tuple[float | None, float | None]
    dominant: Tuple[np.ndarray | None, np.ndarray | None]
    conditions: List[Condition] = field(default_factory=list)
    domains: Tuple[DomainOfAttraction | None, DomainOfAttraction | None] = (None, None)

    def condition(self, name_prefix: str) -> List[Condition]:
        return [c for c in self.conditions if c.name.startswith(name_prefix)]

    @property
    def multistable(self) -> bool:
        return all(c.holds for c in self.condition("Prop6"))

    @property
    def coexistence(self) -> bool:
        return any(c.holds for c in self.condition("Prop7i")) or any(c.holds for c in self.condition("Thm4"))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rho_reproduction": [_num(v) for v in self.rho_reproduction],
            "rho_prop1": [_num(v) for v in self.rho_prop1],
            "theta": [_num(v) for v in self.theta],
            "dominant": [None if x is None else [float(v) for v in x] for x in self.dominant],
            "multistable": self.multistable,
            "coexistence": self.coexistence,
            "domains": [None if d is None else d.to_dict() for d in self.domains],
            "conditions": [c.to_dict() for c in self.conditions],
        }


def _cross_rho(virus: SisParams, other_eq: np.ndarray, ap: AnalysisParams) -> float:
    """ρ(I + h(−𝒟ₗ + (I − diag x̄_ι)𝓑ₗ))."""
    M = np.eye(virus.n) - virus.h * np.diag(virus.delta) + virus.h * (1.0 - other_eq)[:, None] * virus.B.to_dense()
    return _rho(M, ap)


def bivirus_dominant_stability(
    params: BiVirusParams, dominant: Sequence[np.ndarray], ap: AnalysisParams | Dict | None = None
) -> List[Condition]:
    """
    Jacobiano bloco-triangular em (x̄₁, 0): estável se ρ(J₁₁(x̄₁)) < 1 e
    ρ(I + h(−𝒟₂ + (I − diag x̄₁)𝓑₂)) < 1; simétrico para (0, x̄₂).
    """
    ap = _coerce(ap)
    out: List[Condition] = []
    for ell, (virus, other) in enumerate([(params.virus1, params.virus2), (params.virus2, params.virus1)], start=1):
        xbar = np.asarray(dominant[ell - 1], dtype=float)
        own = jacobian(virus, xbar, ap).rho
        cross = _cross_rho(other, xbar, ap)
        worst = max(own, cross)
        out.append(
            Condition(
                f"Dominante[{ell}]: localmente estável",
                bool(worst < 1.0),
                1.0 - worst,
                f"ρ(J_próprio)={own:.6f}, ρ(J_cruzado)={cross:.6f}",
            )
        )
    return out


def bivirus_conditions(
    params: BiVirusParams,
    equilibria: Sequence[np.ndarray] | None = None,
    ap: AnalysisParams | Dict | None = None,
) -> BiVirusReport:
    """
    Avalia, por vírus, as condições de extinção global, domínios α₁,
    multiestabilidade e os certificados de coexistência. `equilibria` são os
    equilíbrios de vírus único (x̄₁, x̄₂); se ausentes, são buscados a partir de 1ₙ.
    """
    ap = _coerce(ap)
    viruses = params.viruses
    rho = tuple(reproduction_number(v, ap) for v in viruses)
    p1 = [prop1_healthy_global(v, ap) for v in viruses]
    p2 = [prop2_bistability(v, ap) for v in viruses]
    conditions: List[Condition] = []

    for ell, r in enumerate(p1, start=1):
        conditions.append(Condition(f"Prop4[{ell}]: ρ(𝒟⁻¹𝓑 + 𝒟⁻¹𝓗z) < 1", r.holds, 1.0 - r.rho))

    domains: List[DomainOfAttraction | None] = []
    for ell, v in enumerate(viruses, start=1):
        try:
            dom = thm1_alpha1(v)
        except AssumptionViolation as exc:
            conditions.append(Condition(f"Prop5[{ell}]: Σβᵢⱼ < δᵢ", False, detail=str(exc)))
            domains.append(None)
            continue
        conditions.append(Condition(f"Prop5[{ell}]: Σβᵢⱼ < δᵢ", True, dom.radius))
        domains.append(dom)

    for ell, r in enumerate(p2, start=1):
        conditions.append(Condition(f"Prop6[{ell}]: ρ < 1", r.rho < 1.0, 1.0 - r.rho))
        conditions.append(
            Condition(
                f"Prop6[{ell}]: θ ≥ 4", r.theta is not None and r.theta >= 4.0,
                float("nan") if r.theta is None else r.theta - 4.0,
            )
        )

    if equilibria is None:
        dominant = []
        for ell, v in enumerate(viruses, start=1):
            xbar = find_equilibrium(v, np.ones(v.n), EquilibriumParams())
            dominant.append(xbar if float(xbar.max()) > 1e-8 else None)
            logger.info("Dominant equilibrium | virus=%d max=%.6f", ell, float(xbar.max()))
    else:
        dominant = [None if x is None else np.asarray(x, dtype=float) for x in equilibria]

    if all(x is not None for x in dominant):
        cross = (_cross_rho(viruses[0], dominant[1], ap), _cross_rho(viruses[1], dominant[0], ap))
        both_endemic = all(r > 1.0 for r in rho)
        for ell, c in enumerate(cross, start=1):
            conditions.append(
                Condition(
                    f"Prop7i[{ell}]: ρ(I + h(−𝒟ₗ + (I − diag x̄_ι)𝓑ₗ)) > 1 com ρₗ > 1",
                    bool(both_endemic and c > 1.0), c - 1.0,
                )
            )
        stability = bivirus_dominant_stability(params, dominant, ap)
        conditions.extend(stability)
        thm4 = all(s.holds for s in stability) and all(c > 1.0 for c in cross)
        conditions.append(Condition("Thm4: dominantes estáveis e ρ cruzados > 1", thm4, min(cross) - 1.0))
    else:
        missing = [ell for ell, x in enumerate(dominant, start=1) if x is None]
        conditions.append(Condition("Prop7i/Thm4: equilíbrios dominantes", False, detail=f"ausentes para vírus {missing}"))

    # hipótese ρ > 1 contradiz ρ(𝒟⁻¹𝓑 + 𝒟⁻¹𝓗z) < 1 (este último ≥ ρ(𝒟⁻¹𝓑) > 1)
    prop7ii = all(r > 1.0 for r in rho) and all(r.holds for r in p1)
    conditions.append(
        Condition(
            "Prop7ii: ρₗ > 1 e ρ(𝒟ₗ⁻¹𝓑ₗ + 𝒟ₗ⁻¹𝓗ₗz) < 1",
            prop7ii,
            detail="as duas exigências são incompatíveis; sempre falso",
        )
    )

    return BiVirusReport(
        rho,
        tuple(r.rho for r in p1),
        tuple(r.theta for r in p2),
        tuple(dominant),
        conditions,
        tuple(domains),
    )


# ---------------- classificação ----------------
def classify(params: SisParams | GeneralParams, ap: AnalysisParams | Dict | None = None) -> RegimeReport:
    """
    Tabela de decisão: extinção global ⇒ HealthyGlobal; senão biestabilidade
    ⇒ BistableCandidate; senão endêmico (heurístico) ⇒ EndemicCandidate;
    senão Indeterminate.
    """
    ap = _coerce(ap)
    general = _is_general(params)
    labels = ("Prop8", "Prop9", "Prop10") if general else ("Prop1", "Prop2", "Prop3")

    p1 = prop1_healthy_global(params, ap)
    p2 = prop2_bistability(params, ap)
    p3 = prop3_endemic(params, None, ap)
    rho = p2.rho
    threshold = params.n - 1 if general else 4
    tol = _smallness(params, ap, None)
    eq = threshold_equivalence(params, ap)

    conditions = [
        Condition(f"{labels[0]}: ρ(𝒟⁻¹𝓑 + 𝒟⁻¹𝓗z) < 1", p1.holds, 1.0 - p1.rho),
        Condition(f"{labels[1]}: ρ(I − h𝒟 + h𝓑) < 1", rho < 1.0, 1.0 - rho),
        Condition(
            f"{labels[1]}: θ ≥ {threshold}", p2.theta is not None and p2.theta >= threshold,
            float("nan") if p2.theta is None else p2.theta - threshold,
        ),
        Condition(f"{labels[2]}: ρ(I − h𝒟 + h𝓑) > 1", rho > 1.0, rho - 1.0),
        Condition(f"{labels[2]}: max β de ordem ≥ 3 ≤ {tol:.3g} (heurística)", p3.h_max_entry <= tol, tol - p3.h_max_entry),
        Condition("Limiar: sinal de ρ(𝒟⁻¹𝓑) − 1 coincide", eq["same_side"], eq["rho_dinv_b"] - 1.0),
        endemic_existence_certificate(params),
    ]

    heuristic = False
    if p1.holds:
        label = HEALTHY
    elif p2.holds:
        label = BISTABLE
    elif p3.holds:
        label, heuristic = ENDEMIC, True
    else:
        label = INDETERMINATE
    if heuristic:
        logger.warning("Classificação endêmica heurística | max_beta3=%.3g limiar=%.3g", p3.h_max_entry, tol)
    logger.info("Classify | regime=%s rho=%.6f", label, rho)
    return RegimeReport(rho, p1.rho, p1.z, p2.theta, conditions, label, heuristic)


# ---------------- validação empírica ----------------
@dataclass
class DomainValidation:
    samples: int
    violations: int
    max_distance: float
    not_converged: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def validate_domain(
    params: SisParams | GeneralParams,
    domain: DomainOfAttraction,
    samples: int = 1000,
    seed: int = 0,
    max_steps: int = 1_000_000,
    step_tol: float = 1e-12,
    dist_tol: float = 1e-6,
    workers: int | None = None,
    chunk: int = 250,
) -> DomainValidation:
    """
    Sorteia pontos uniformes dentro de bola ∩ [0,1]ⁿ (estritamente dentro do
    raio), simula até parar e conta quantos não chegaram ao alvo.
    """
    if samples < 1:
        raise ValueError(f"samples deve ser ≥ 1: {samples}")
    n = params.n
    radius = domain.radius * (1.0 - 1e-9) if np.isfinite(domain.radius) else np.inf
    lo = np.maximum(0.0, domain.target - radius)
    hi = np.minimum(1.0, domain.target + radius)
    rng = np.random.default_rng(seed)
    X = lo + (hi - lo) * rng.random((samples, n))

    def run(block: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        res = simulate_batch(params, block, max_steps=max_steps, tol=step_tol)
        return np.max(np.abs(res.final - domain.target), axis=1), res.converged

    blocks = [X[i:i + chunk] for i in range(0, samples, chunk)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    dist = np.concatenate([p[0] for p in parts])
    conv = np.concatenate([p[1] for p in parts])
    violations = int(np.sum(~conv | (dist > dist_tol)))
    logger.info("DoA validation | kind=%s samples=%d violations=%d", domain.kind, samples, violations)
    return DomainValidation(samples, violations, float(dist.max()), int(np.sum(~conv)))


def tune_pairwise_rate(hypergraph: DirectedHypergraph, delta: float, h: float, target: float) -> float:
    """μ homogêneo com ρ(I − hδI + hμA₂) = target, i.e. μ = (target − 1 + hδ)/(h·ρ(A₂))."""
    A2 = adjacency_tensors(hypergraph)[2]
    rho_a = perron(A2).radius
    if rho_a <= 0:
        raise ValueError("Camada par-a-par vazia: ρ(A₂) = 0")
    mu = (target - 1.0 + h * delta) / (h * rho_a)
    if mu < 0:
        raise ValueError(f"Alvo {target} inatingível com δ={delta}, h={h} (μ negativo)")
    return float(mu)
