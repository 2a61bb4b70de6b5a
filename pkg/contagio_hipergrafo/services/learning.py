# contagio_hipergrafo/services/learning.py
"""
Identificação das taxas (δᵢ, μᵢ, μᵢ₃) a partir de uma trajetória conhecida e
da topologia: um problema de mínimos quadrados não negativos por nó.

Para o nó i, cada passo t da janela [q, q+m) dá uma linha
    [−h·xᵢ(t), h(1 − xᵢ(t))(A₂x)ᵢ, h(1 − xᵢ(t))(A₃x²)ᵢ]·θ = xᵢ(t+1) − xᵢ(t).
Ordens acima de 3 ganham uma coluna cada (experimental).
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Tuple
import logging

import numpy as np
import pandas as pd
from scipy.optimize import nnls

from .dynamics import Trajectory
from .hypergraph import DirectedHypergraph, adjacency_tensors
from .tensor_core import tensor_vector_power_rows

__all__ = [
    "LearningParams",
    "LearningProblem",
    "LearnedParams",
    "RankCheck",
    "build_problem",
    "rank_check",
    "solve_nnls",
    "learn_all",
    "learned_frame",
]

logger = logging.getLogger(__name__)


@dataclass
class LearningParams:
    rank_rtol: float = 1e-9       # posto cheio se σ_min/σ_max > rank_rtol
    kkt_tol: float = 1e-10        # tolerância das condições KKT
    refine: bool = True           # refaz o LS no conjunto passivo após o NNLS
    max_order: int | None = None  # None = ordens presentes no hipergrafo (mínimo 3)


def _coerce(params: LearningParams | Dict[str, Any] | None) -> LearningParams:
    if params is None:
        return LearningParams()
    if isinstance(params, dict):
        return LearningParams(**params)
    return params


@dataclass
class LearningProblem:
    node: int
    h: float
    q: int
    m: int
    Phi: np.ndarray                 # m × c
    eta: np.ndarray                 # m
    columns: Tuple[str, ...]        # ("delta", "mu2", "mu3", ...)


class RankCheck(NamedTuple):
    rank_ok: bool
    conditioning: float             # σ_min/σ_max
    zero_columns: List[str]


@dataclass
class LearnedParams:
    node: int
    columns: Tuple[str, ...]
    theta: np.ndarray
    residual: float = float("nan")
    rank_ok: bool = False
    kkt_residual: float = float("nan")
    flags: List[str] = field(default_factory=list)
    error: str | None = None

    def value(self, name: str) -> float:
        return float(self.theta[self.columns.index(name)]) if name in self.columns else float("nan")

    @property
    def delta(self) -> float:
        return self.value("delta")

    @property
    def mu2(self) -> float:
        return self.value("mu2")

    @property
    def mu3(self) -> float:
        return self.value("mu3")


# ---------------- montagem ----------------
def _orders(hypergraph: DirectedHypergraph, lp: LearningParams) -> List[int]:
    top = lp.max_order if lp.max_order is not None else max(3, hypergraph.max_order)
    return list(range(2, max(3, top) + 1))


def _window(traj: Trajectory, q: int, m: int | None) -> Tuple[int, int]:
    total = len(traj.states) - 1
    q = int(q)
    m = total - q if m is None else int(m)
    if q < 0 or m < 1 or q + m > total:
        raise ValueError(f"Janela inválida: q={q}, m={m} para trajetória com {total} passos")
    return q, m


def _regressors(
    traj: Trajectory, hypergraph: DirectedHypergraph, h: float, q: int, m: int, orders: List[int]
) -> Tuple[np.ndarray, np.ndarray]:
    """Φ de todos os nós (n × m × c) e η (n × m)."""
    if traj.n != hypergraph.n:
        raise ValueError(f"Trajetória com {traj.n} nós e hipergrafo com {hypergraph.n}")
    X = traj.states[q:q + m]
    Xn = traj.states[q + 1:q + m + 1]
    A = adjacency_tensors(hypergraph)
    cols = [-h * X]
    for k in orders:
        T = A.get(k)
        pressure = tensor_vector_power_rows(T, X) if T is not None else np.zeros_like(X)
        cols.append(h * (1.0 - X) * pressure)
    Phi = np.stack(cols, axis=2).transpose(1, 0, 2)      # n × m × c
    eta = (Xn - X).T
    return Phi, eta


def _column_names(orders: List[int]) -> Tuple[str, ...]:
    return ("delta", *(f"mu{k}" for k in orders))


def build_problem(
    traj: Trajectory,
    hypergraph: DirectedHypergraph,
    h: float | None,
    q: int,
    m: int | None,
    node: int,
    lp: LearningParams | Dict[str, Any] | None = None,
) -> LearningProblem:
    lp = _coerce(lp)
    if not 0 <= int(node) < hypergraph.n:
        raise ValueError(f"Nó fora de 0..{hypergraph.n - 1}: {node}")
    h = traj.h if h is None else float(h)
    q, m = _window(traj, q, m)
    orders = _orders(hypergraph, lp)
    Phi, eta = _regressors(traj, hypergraph, h, q, m, orders)
    return LearningProblem(int(node), h, q, m, Phi[node], eta[node], _column_names(orders))


# ---------------- diagnóstico e solução ----------------
def rank_check(problem: LearningProblem, rtol: float = 1e-9) -> RankCheck:
    """Posto coluna cheio via razão entre o menor e o maior valor singular de Φᵢ."""
    Phi = problem.Phi
    zero = [name for name, col in zip(problem.columns, Phi.T) if not np.any(col)]
    if Phi.shape[0] < Phi.shape[1]:
        return RankCheck(False, 0.0, zero)
    s = np.linalg.svd(Phi, compute_uv=False)
    cond = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    return RankCheck(bool(cond > rtol and not zero), cond, zero)


def _kkt(Phi: np.ndarray, eta: np.ndarray, theta: np.ndarray) -> float:
    """max(|∇| nas coordenadas livres, −∇ nas ativas), ∇ = Φᵀ(Φθ − η)."""
    grad = Phi.T @ (Phi @ theta - eta)
    free = theta > 0
    parts = [np.abs(grad[free]).max() if free.any() else 0.0, np.maximum(-grad[~free], 0).max() if (~free).any() else 0.0]
    return float(max(parts))


def solve_nnls(problem: LearningProblem, lp: LearningParams | Dict[str, Any] | None = None) -> LearnedParams:
    """min ½‖Φθ − η‖² com θ ≥ 0 (conjunto ativo de scipy), seguido de LS no conjunto passivo."""
    lp = _coerce(lp)
    Phi, eta = problem.Phi, problem.eta
    rank = rank_check(problem, lp.rank_rtol)
    theta, _ = nnls(Phi, eta)

    if lp.refine:
        passive = theta > 0
        if passive.any():
            sol, *_ = np.linalg.lstsq(Phi[:, passive], eta, rcond=None)
            if np.all(sol > 0):
                candidate = theta.copy()
                candidate[passive] = sol
                if np.linalg.norm(Phi @ candidate - eta) <= np.linalg.norm(Phi @ theta - eta):
                    theta = candidate

    flags: List[str] = []
    if not rank.rank_ok:
        flags.append("rank_deficient")
        if rank.zero_columns:
            flags.append("zero_columns:" + ",".join(rank.zero_columns))
    if theta[0] == 0:
        flags.append("delta_zero")
    kkt = _kkt(Phi, eta, theta)
    if kkt > lp.kkt_tol:
        flags.append("kkt")
    residual = float(np.linalg.norm(Phi @ theta - eta))
    logger.debug("NNLS | node=%d residual=%.3e kkt=%.3e cond=%.3e", problem.node, residual, kkt, rank.conditioning)
    return LearnedParams(problem.node, problem.columns, theta, residual, rank.rank_ok, kkt, flags)


def learn_all(
    traj: Trajectory,
    hypergraph: DirectedHypergraph,
    h: float | None = None,
    q: int = 0,
    m: int | None = None,
    lp: LearningParams | Dict[str, Any] | None = None,
) -> Tuple[List[LearnedParams], Dict[str, Any]]:
    """Resolve todos os nós; erro em um nó fica registrado nele e o resto continua."""
    lp = _coerce(lp)
    h = traj.h if h is None else float(h)
    q, m = _window(traj, q, m)
    orders = _orders(hypergraph, lp)
    names = _column_names(orders)
    Phi, eta = _regressors(traj, hypergraph, h, q, m, orders)

    logger.info("Learning start | n=%d q=%d m=%d columns=%s", hypergraph.n, q, m, names)
    out: List[LearnedParams] = []
    for i in range(hypergraph.n):
        problem = LearningProblem(i, h, q, m, Phi[i], eta[i], names)
        try:
            out.append(solve_nnls(problem, lp))
        except Exception as exc:
            logger.warning("Learning failed | node=%d err=%s", i + 1, exc)
            out.append(LearnedParams(i, names, np.full(len(names), np.nan), error=str(exc)))

    deficient = [p.node + 1 for p in out if not p.rank_ok]
    if deficient:
        logger.warning("Janela com posto deficiente | nós=%s", deficient)
    stats = {
        "nodes": hypergraph.n,
        "q": q,
        "m": m,
        "rank_ok": sum(p.rank_ok for p in out),
        "errors": sum(p.error is not None for p in out),
        "max_residual": float(np.nanmax([p.residual for p in out])) if out else float("nan"),
        "flagged": {p.node + 1: p.flags for p in out if p.flags},
    }
    return out, stats


def learned_frame(learned: List[LearnedParams]) -> pd.DataFrame:
    """Uma linha por nó (1-based) com taxas e diagnósticos."""
    rows = []
    for p in learned:
        row: Dict[str, Any] = {"node": p.node + 1}
        row.update({name: float(v) for name, v in zip(p.columns, p.theta)})
        row.update(
            {"residual": p.residual, "rank_ok": p.rank_ok, "kkt_residual": p.kkt_residual,
             "flags": ";".join(p.flags), "error": p.error or ""}
        )
        rows.append(row)
    return pd.DataFrame(rows)
