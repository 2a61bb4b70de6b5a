# contagio_hipergrafo/services/stochastic.py
"""
Modelos estocásticos de referência: cadeia de Markov exata com 2ⁿ estados
(n pequeno) e Monte Carlo por agente, mais a comparação com o campo médio.

Convenção de passo: em cada intervalo h, todos os agentes atualizam ao mesmo
tempo a partir do estado do início do passo. Infectado cura com
probabilidade hδᵢ; suscetível infecta com probabilidade h·(𝓑s + Σ𝓕_k s^{k−1})ᵢ.
Estado s é uma máscara de bits: bit i ligado = agente i infectado.
"""
from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, List, Tuple
import logging

import numpy as np
import pandas as pd

from .dynamics import GeneralParams, SisParams, default_workers, infection_pressure, simulate, step_failures
from .errors import AssumptionViolation

__all__ = [
    "EXACT_CAP",
    "ExactChain",
    "EnsembleResult",
    "MonteCarloParams",
    "build_exact_chain",
    "exact_marginals",
    "monte_carlo",
    "compare_meanfield",
    "compare_ensemble",
    "compare_exact",
]

logger = logging.getLogger(__name__)

EXACT_CAP = 14
PROB_TOL = 1e-12


def _state_bits(n: int) -> np.ndarray:
    """(2ⁿ × n): linha s tem os bits de s, agente 0 no bit menos significativo."""
    s = np.arange(2 ** n, dtype=np.int64)
    return ((s[:, None] >> np.arange(n)) & 1).astype(float)


def _require_3a(params: SisParams | GeneralParams) -> None:
    failed = step_failures(params)
    if failed:
        raise AssumptionViolation("Probabilidades por passo podem sair de [0,1]: " + "; ".join(failed))


def _infection_probs(params: SisParams | GeneralParams, S: np.ndarray) -> np.ndarray:
    """P(agente i infectado no próximo passo | estado S), por linha."""
    h = params.h
    recover = h * params.delta
    catch = h * infection_pressure(params, S)
    if catch.size and (catch.max() > 1.0 + PROB_TOL or recover.max() > 1.0 + PROB_TOL):
        raise AssumptionViolation(
            f"Probabilidade por passo > 1 (infecção máx {catch.max():.4g}, cura máx {recover.max():.4g})"
        )
    return np.where(S > 0, 1.0 - recover, catch)


# ---------------- cadeia exata ----------------
@dataclass
class ExactChain:
    n: int
    h: float
    transition: np.ndarray          # 2ⁿ × 2ⁿ, linhas estocásticas

    @property
    def states(self) -> int:
        return 2 ** self.n

    @cached_property
    def bits(self) -> np.ndarray:
        return _state_bits(self.n)


def build_exact_chain(params: SisParams | GeneralParams, cap: int = EXACT_CAP) -> ExactChain:
    """Matriz de transição como produto, por agente, das probabilidades de cada bit."""
    n = params.n
    if n > cap:
        raise ValueError(f"Cadeia exata limitada a n ≤ {cap}, recebeu n={n}")
    _require_3a(params)
    S = _state_bits(n)
    p = _infection_probs(params, S)                  # 2ⁿ × n
    P = np.ones((len(S), 1))
    for i in reversed(range(n)):
        # agente i vira o bit menos significativo das colunas já montadas
        P = (P[:, :, None] * np.stack([1.0 - p[:, i], p[:, i]], axis=1)[:, None, :]).reshape(len(S), -1)
    logger.info("Exact chain built | n=%d states=%d", n, len(S))
    return ExactChain(n, params.h, P)


def _initial_distribution(chain: ExactChain, init: Any) -> np.ndarray:
    v = np.asarray(init, dtype=float).reshape(-1)
    if len(v) == chain.n:
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("Probabilidades iniciais fora de [0,1]")
        bits = chain.bits
        return np.prod(np.where(bits > 0, v, 1.0 - v), axis=1)
    if len(v) == chain.states:
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise ValueError(f"Distribuição inicial inválida (soma {v.sum():.12g})")
        return v
    raise ValueError(f"Inicial com tamanho {len(v)}; esperado {chain.n} ou {chain.states}")


def exact_marginals(chain: ExactChain, init: Any, T: int) -> np.ndarray:
    """
    P(Xᵢ(t) = 1) para t = 0..T, propagando π_{t+1} = π_t·P. `init` é um vetor
    de probabilidades por nó (distribuição produto) ou a distribuição completa.
    """
    if int(T) < 0:
        raise ValueError(f"Número de passos negativo: {T}")
    pi = _initial_distribution(chain, init)
    out = np.empty((int(T) + 1, chain.n))
    out[0] = pi @ chain.bits
    for t in range(1, int(T) + 1):
        pi = pi @ chain.transition
        out[t] = pi @ chain.bits
    return out


# ---------------- Monte Carlo ----------------
@dataclass
class MonteCarloParams:
    """Réplicas em lotes; cada réplica tem o próprio gerador derivado da semente."""
    batch_size: int = 200           # réplicas avançadas juntas
    workers: int | None = None      # None = CONTAGIO_THREADS (ou 1)
    record_marginals: bool = True   # guarda P(Xᵢ(t) = 1) por nó


@dataclass
class EnsembleResult:
    runs: int
    seed: int
    avg_infection: np.ndarray                   # (T+1,)
    per_node_marginals: np.ndarray | None = None   # (T+1) × n

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({"t": np.arange(len(self.avg_infection)), "mc_avg": self.avg_infection})
        if self.per_node_marginals is not None:
            for i in range(self.per_node_marginals.shape[1]):
                df[f"x{i + 1}"] = self.per_node_marginals[:, i]
        return df


def _run_batch(
    params: SisParams | GeneralParams, init_probs: np.ndarray, T: int, seeds: List[np.random.SeedSequence]
) -> np.ndarray:
    """Contagem de infectados por (t, nó) somada sobre as réplicas do lote."""
    gens = [np.random.default_rng(s) for s in seeds]
    n = params.n
    U = np.empty((len(gens), n))
    for r, g in enumerate(gens):
        U[r] = g.random(n)
    S = U < init_probs
    counts = np.zeros((T + 1, n), dtype=np.int64)
    counts[0] = S.sum(axis=0)
    recover = params.h * params.delta
    for t in range(1, T + 1):
        catch = params.h * infection_pressure(params, S.astype(float))
        for r, g in enumerate(gens):
            U[r] = g.random(n)
        S = np.where(S, U >= recover, U < catch)
        counts[t] = S.sum(axis=0)
    return counts


def monte_carlo(
    params: SisParams | GeneralParams,
    init_probs: Any,
    T: int,
    runs: int,
    seed: int,
    mc_params: MonteCarloParams | Dict[str, Any] | None = None,
) -> EnsembleResult:
    """
    Simula a cadeia por agente diretamente sobre amostras (sem matriz 2ⁿ).
    Gerador da réplica r: SeedSequence(seed).spawn(runs)[r]; as contagens são
    inteiras, então o resultado não depende de lotes nem de threads.
    """
    if mc_params is None:
        mc_params = MonteCarloParams()
    elif isinstance(mc_params, dict):
        mc_params = MonteCarloParams(**mc_params)
    if int(runs) < 1:
        raise ValueError(f"runs deve ser ≥ 1: {runs}")
    if int(T) < 0:
        raise ValueError(f"Número de passos negativo: {T}")
    init_probs = np.asarray(init_probs, dtype=float)
    if init_probs.shape != (params.n,) or np.any(init_probs < 0) or np.any(init_probs > 1):
        raise ValueError(f"init_probs inválido: shape {init_probs.shape}, esperado ({params.n},) em [0,1]")
    _require_3a(params)

    runs, T = int(runs), int(T)
    seeds = np.random.SeedSequence(seed).spawn(runs)
    size = max(1, int(mc_params.batch_size))
    batches = [seeds[i:i + size] for i in range(0, runs, size)]
    workers = default_workers() if mc_params.workers is None else int(mc_params.workers)
    logger.info("Monte Carlo start | n=%d steps=%d runs=%d seed=%d workers=%d", params.n, T, runs, seed, workers)

    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_batch(params, init_probs, T, b), batches))
    else:
        parts = [_run_batch(params, init_probs, T, b) for b in batches]

    counts = np.zeros((T + 1, params.n), dtype=np.int64)
    for part in parts:
        counts += part
    marginals = counts / runs
    avg = counts.sum(axis=1) / (runs * params.n)
    logger.info("Monte Carlo done | final_avg=%.6f", float(avg[-1]))
    return EnsembleResult(runs, int(seed), avg, marginals if mc_params.record_marginals else None)


# ---------------- comparação ----------------
def compare_meanfield(
    params: SisParams | GeneralParams,
    init_probs: Any,
    T: int,
    runs: int,
    seed: int,
    mc_params: MonteCarloParams | Dict[str, Any] | None = None,
) -> Tuple[float, pd.DataFrame]:
    """max_t |média do campo médio − média do ensemble| e a série t, meanfield_avg, mc_avg, abs_error."""
    ens = monte_carlo(params, init_probs, T, runs, seed, mc_params)
    return compare_ensemble(params, init_probs, ens)


def compare_ensemble(
    params: SisParams | GeneralParams, init_probs: Any, ensemble: EnsembleResult
) -> Tuple[float, pd.DataFrame]:
    """Compara um ensemble já simulado com o campo médio do mesmo horizonte."""
    init_probs = np.asarray(init_probs, dtype=float)
    T = len(ensemble.avg_infection) - 1
    mf = simulate(params, init_probs, T).states.mean(axis=1)
    err = np.abs(mf - ensemble.avg_infection)
    frame = pd.DataFrame({"t": np.arange(len(mf)), "meanfield_avg": mf, "mc_avg": ensemble.avg_infection, "abs_error": err})
    logger.info("Compare | max_error=%.6f runs=%d", float(err.max()), ensemble.runs)
    return float(err.max()), frame


def compare_exact(params: SisParams | GeneralParams, init_probs: Any, T: int) -> Tuple[float, pd.DataFrame]:
    """Mesma comparação contra as marginais exatas (sem ruído de amostragem)."""
    init_probs = np.asarray(init_probs, dtype=float)
    traj = simulate(params, init_probs, T)
    mf = traj.states.mean(axis=1)
    exact = exact_marginals(build_exact_chain(params), init_probs, T).mean(axis=1)
    err = np.abs(mf - exact)
    frame = pd.DataFrame({"t": np.arange(len(mf)), "meanfield_avg": mf, "exact_avg": exact, "abs_error": err})
    return float(err.max()), frame
