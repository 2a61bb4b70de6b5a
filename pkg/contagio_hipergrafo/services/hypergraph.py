# contagio_hipergrafo/services/hypergraph.py
"""
Hipergrafo direcionado e ponderado: cada hiperaresta liga uma cauda (o agente
que pode ser infectado) a um conjunto de cabeças (os agentes cuja infecção
conjunta a contamina). Índices 0-based aqui; os arquivos usam 1-based.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from itertools import permutations
from typing import Dict, Iterable, List, Sequence, Tuple
import logging
import math

import networkx as nx
import numpy as np

from .tensor_core import SparseCubicalTensor

__all__ = [
    "HyperEdge",
    "DirectedHypergraph",
    "adjacency_tensors",
    "pairwise_strongly_connected",
    "random_ba_hypergraph",
    "cycle_hypergraph",
    "consecutive_triples",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperEdge:
    tail: int
    heads: Tuple[int, ...]
    weight: float = 1.0

    def __post_init__(self):
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "tail", int(self.tail))
        object.__setattr__(self, "heads", tuple(sorted(heads)))
        object.__setattr__(self, "weight", float(self.weight))
        if not heads:
            raise ValueError(f"Hiperaresta sem cabeças (cauda {self.tail})")
        if len(set(heads)) != len(heads):
            raise ValueError(f"Cabeças repetidas: {heads}")
        if self.tail in heads:
            raise ValueError(f"Cauda {self.tail} também aparece nas cabeças {heads}")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValueError(f"Peso deve ser positivo e finito: {self.weight}")

    @property
    def order(self) -> int:
        return 1 + len(self.heads)


@dataclass(frozen=True)
class DirectedHypergraph:
    """
    n vértices + hiperarestas (cauda, cabeças ordenadas, peso > 0).
    Arestas repetidas são mantidas; nos tensores os pesos somam.
    """
    n: int
    edges: Tuple[HyperEdge, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"Número de vértices inválido: {self.n}")
        object.__setattr__(self, "n", int(self.n))
        edges = tuple(e if isinstance(e, HyperEdge) else HyperEdge(*e) for e in self.edges)
        for e in edges:
            if not 0 <= e.tail < self.n or any(not 0 <= h < self.n for h in e.heads):
                raise ValueError(f"Hiperaresta com índice fora de 0..{self.n - 1}: {e}")
        object.__setattr__(self, "edges", edges)

    @property
    def max_order(self) -> int:
        return max((e.order for e in self.edges), default=2)

    def edges_of_order(self, order: int) -> List[HyperEdge]:
        return [e for e in self.edges if e.order == order]


# ---------------- tensores de adjacência ----------------
def adjacency_tensors(H: DirectedHypergraph, max_order: int | None = None) -> Dict[int, SparseCubicalTensor]:
    """
    {ordem m: A_m} para m = 2..max_order. O peso de cada aresta vai para
    todas as permutações das cabeças, sem dividir pelo número de permutações
    (aresta (1;{4,5};w) gera A₁₄₅ = A₁₅₄ = w).
    """
    if max_order is None:
        max_order = H.max_order
    if not 2 <= max_order <= max(H.n, 2):
        raise ValueError(f"max_order={max_order} fora de 2..{H.n}")
    if H.max_order > max_order:
        raise ValueError(f"Hipergrafo tem arestas de ordem {H.max_order} > max_order={max_order}")

    tensors: Dict[int, SparseCubicalTensor] = {}
    for m in range(2, max_order + 1):
        group = H.edges_of_order(m)
        if not group:
            tensors[m] = SparseCubicalTensor(m, H.n)
            continue
        tails = np.array([e.tail for e in group], dtype=np.int64)
        heads = np.array([e.heads for e in group], dtype=np.int64)
        weights = np.array([e.weight for e in group])
        perms = list(permutations(range(m - 1)))
        idx = np.concatenate([np.column_stack([tails, heads[:, list(p)]]) for p in perms])
        tensors[m] = SparseCubicalTensor(m, H.n, idx, np.tile(weights, len(perms)))
    return tensors


def pairwise_strongly_connected(H: DirectedHypergraph) -> bool:
    """Grafo das arestas de ordem 2 é fortemente conexo (𝓑 irredutível)."""
    G = nx.DiGraph()
    G.add_nodes_from(range(H.n))
    G.add_edges_from((e.tail, e.heads[0]) for e in H.edges_of_order(2))
    return nx.is_strongly_connected(G)


# ---------------- geradores ----------------
def random_ba_hypergraph(n: int, m: int, n_triples: int, seed: int) -> DirectedHypergraph:
    """
    Camada par-a-par Barabási–Albert (clique inicial de m+1 vértices, arcos
    nos dois sentidos, peso 1) + n_triples arestas de ordem 3 com cauda
    uniforme e par de cabeças distintas uniforme, peso 1.
    """
    if m < 1 or n < m + 1:
        raise ValueError(f"Tamanhos inválidos para BA: n={n}, m={m} (exige n ≥ m+1 ≥ 2)")
    if n_triples < 0:
        raise ValueError(f"n_triples negativo: {n_triples}")
    if n_triples and n < 3:
        raise ValueError("Arestas de ordem 3 exigem n ≥ 3")

    G = nx.barabasi_albert_graph(n, m, seed=seed, initial_graph=nx.complete_graph(m + 1))
    edges: List[HyperEdge] = []
    for u, v in sorted(tuple(sorted(e)) for e in G.edges()):
        edges.append(HyperEdge(u, (v,)))
        edges.append(HyperEdge(v, (u,)))

    rng = np.random.default_rng(seed)
    tails = rng.integers(0, n, size=n_triples)
    a = rng.integers(0, n - 1, size=n_triples)
    b = rng.integers(0, n - 2, size=n_triples) if n_triples else np.zeros(0, dtype=np.int64)
    b = np.where(b >= a, b + 1, b)                   # b ≠ a, ambos em 0..n−2
    a = np.where(a >= tails, a + 1, a)               # pula a cauda
    b = np.where(b >= tails, b + 1, b)
    edges.extend(HyperEdge(int(t), (int(x), int(y))) for t, x, y in zip(tails, a, b))

    logger.info("BA gerado | n=%d m=%d arestas_par=%d triplas=%d seed=%d", n, m, 2 * G.number_of_edges(), n_triples, seed)
    return DirectedHypergraph(n, tuple(edges))


def consecutive_triples(n: int) -> List[Tuple[int, Tuple[int, int]]]:
    """Uma tripla por cauda: i ← {i+1, i+2} (mod n)."""
    if n < 3:
        raise ValueError(f"Triplas consecutivas exigem n ≥ 3: {n}")
    return [(i, ((i + 1) % n, (i + 2) % n)) for i in range(n)]


def cycle_hypergraph(n: int, triples: Sequence[Tuple[int, Iterable[int]]] | None = None) -> DirectedHypergraph:
    """Ciclo dirigido 1→2→…→n→1 (peso 1) mais as triplas dadas (peso 1)."""
    if n < 3:
        raise ValueError(f"Ciclo exige n ≥ 3: {n}")
    edges = [HyperEdge(i, ((i + 1) % n,)) for i in range(n)]
    for item in triples or ():
        tail, heads = item
        heads = tuple(heads)
        if len(heads) != 2:
            raise ValueError(f"Tripla inválida (esperado 2 cabeças): {item}")
        edges.append(HyperEdge(tail, heads))
    return DirectedHypergraph(n, tuple(edges))
