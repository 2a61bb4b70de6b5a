# contagio_hipergrafo/services/tensor_core.py
"""
Álgebra de tensores cúbicos esparsos.

Formato coordenado: `indices` (nnz × k, inteiros 0-based) ordenados
lexicograficamente e `values` (nnz,) sem zeros. Tuplas repetidas na
construção são somadas.
"""
from __future__ import annotations
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from math import factorial
from typing import Any, Dict, Iterable, Literal, Mapping, Tuple
import logging

import networkx as nx
import numpy as np
from scipy import sparse

from .errors import NotConverged

__all__ = [
    "SparseCubicalTensor",
    "PerronParams",
    "PerronResult",
    "tensor_vector_power",
    "tensor_vector_power_rows",
    "matrix_tensor_product",
    "almost_symmetrize",
    "is_irreducible",
    "diagonal_dominance",
    "perron",
]

logger = logging.getLogger(__name__)

Dominance = Literal["strict", "weak", "none"]


# ---------------- tipo principal ----------------
class SparseCubicalTensor:
    """
    Tensor de ordem k e dimensão n guardado só pelas entradas não nulas.

    Imutável depois de construído (os arrays ficam read-only), então pode ser
    compartilhado entre threads sem cópia.
    """

    def __init__(self, order: int, dim: int, indices: Any = None, values: Any = None):
        if int(order) < 1:
            raise ValueError(f"Ordem inválida: {order}")
        if int(dim) < 1:
            raise ValueError(f"Dimensão inválida: {dim}")
        self.order = int(order)
        self.dim = int(dim)

        idx = np.zeros((0, self.order), dtype=np.int64) if indices is None else np.asarray(indices, dtype=np.int64)
        vals = np.zeros(0, dtype=float) if values is None else np.asarray(values, dtype=float).reshape(-1)
        idx = idx.reshape(-1, self.order) if idx.size else np.zeros((0, self.order), dtype=np.int64)
        if len(idx) != len(vals):
            raise ValueError(f"Número de índices ({len(idx)}) difere do número de pesos ({len(vals)})")
        if len(vals):
            if idx.min() < 0 or idx.max() >= self.dim:
                raise ValueError(f"Índice fora de 0..{self.dim - 1}")
            if not np.all(np.isfinite(vals)):
                raise ValueError("Pesos não finitos no tensor")

        idx, vals = _canonicalize(idx, vals)
        idx.setflags(write=False)
        vals.setflags(write=False)
        self.indices = idx
        self.values = vals

    # -------- construtores --------
    @classmethod
    def zeros(cls, order: int, dim: int) -> "SparseCubicalTensor":
        return cls(order, dim)

    @classmethod
    def identity(cls, order: int, dim: int) -> "SparseCubicalTensor":
        diag = np.repeat(np.arange(dim)[:, None], order, axis=1)
        return cls(order, dim, diag, np.ones(dim))

    @classmethod
    def from_entries(
        cls, order: int, dim: int, entries: Mapping[Tuple[int, ...], float] | Iterable[Tuple[Tuple[int, ...], float]]
    ) -> "SparseCubicalTensor":
        items = list(entries.items()) if isinstance(entries, Mapping) else list(entries)
        if not items:
            return cls(order, dim)
        idx = np.array([tuple(t) for t, _ in items], dtype=np.int64).reshape(-1, order)
        vals = np.array([w for _, w in items], dtype=float)
        return cls(order, dim, idx, vals)

    @classmethod
    def from_dense(cls, array: Any) -> "SparseCubicalTensor":
        a = np.asarray(array, dtype=float)
        if a.ndim < 1 or len(set(a.shape)) != 1:
            raise ValueError(f"Array não é cúbico: shape={a.shape}")
        nz = np.argwhere(a != 0)
        return cls(a.ndim, a.shape[0], nz, a[tuple(nz.T)])

    # -------- acesso --------
    @property
    def nnz(self) -> int:
        return int(len(self.values))

    def entries(self) -> Dict[Tuple[int, ...], float]:
        return {tuple(int(i) for i in row): float(v) for row, v in zip(self.indices, self.values)}

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim,) * self.order)
        if self.nnz:
            out[tuple(self.indices.T)] = self.values
        return out

    def row_abs_sums(self) -> np.ndarray:
        """Σ sobre i₂..i_k de |A_{i i₂…i_k}|, por linha i."""
        return np.bincount(self.indices[:, 0], weights=np.abs(self.values), minlength=self.dim)

    def row_support(self) -> np.ndarray:
        """Máscara das linhas (primeiro índice) com alguma entrada."""
        mask = np.zeros(self.dim, dtype=bool)
        mask[self.indices[:, 0]] = True
        return mask

    def max_entry(self) -> float:
        return float(self.values.max()) if self.nnz else 0.0

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))

    def lift(self) -> "SparseCubicalTensor":
        """
        Tensor de ordem k+1 com Ã_{i i i₂…i_k} = A_{i i₂…i_k} e zero no resto.
        Representa diag(y)·(A y^{k−1}) como Ã y^k.
        """
        idx = np.concatenate([self.indices[:, :1], self.indices], axis=1)
        return SparseCubicalTensor(self.order + 1, self.dim, idx, self.values)

    def allclose(self, other: "SparseCubicalTensor", atol: float = 1e-12) -> bool:
        if (self.order, self.dim) != (other.order, other.dim):
            return False
        diff = self - other
        return diff.nnz == 0 or float(np.max(np.abs(diff.values))) <= atol

    # -------- aritmética --------
    def __mul__(self, c: float) -> "SparseCubicalTensor":
        return SparseCubicalTensor(self.order, self.dim, self.indices, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "SparseCubicalTensor":
        return self * -1.0

    def __add__(self, other: "SparseCubicalTensor") -> "SparseCubicalTensor":
        if (self.order, self.dim) != (other.order, other.dim):
            raise ValueError(
                f"Soma de tensores incompatíveis: ({self.order},{self.dim}) vs ({other.order},{other.dim})"
            )
        return SparseCubicalTensor(
            self.order,
            self.dim,
            np.concatenate([self.indices, other.indices]),
            np.concatenate([self.values, other.values]),
        )

    def __sub__(self, other: "SparseCubicalTensor") -> "SparseCubicalTensor":
        return self + (-other)

    def __repr__(self) -> str:
        return f"SparseCubicalTensor(order={self.order}, dim={self.dim}, nnz={self.nnz})"

    # -------- caches para produtos em lote --------
    @cached_property
    def _tail_incidence(self) -> sparse.csr_matrix:
        """Matriz n × nnz com 1 em (i₁ da entrada e, e)."""
        cols = np.arange(self.nnz)
        return sparse.csr_matrix(
            (np.ones(self.nnz), (self.indices[:, 0], cols)), shape=(self.dim, self.nnz)
        )


# ---------------- utils ----------------
def _canonicalize(idx: np.ndarray, vals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ordena lexicograficamente, soma duplicatas e descarta zeros."""
    if len(vals) == 0:
        return np.zeros((0, idx.shape[1]), dtype=np.int64), np.zeros(0, dtype=float)
    order = np.lexsort(idx.T[::-1])
    idx, vals = idx[order], vals[order]
    starts = np.ones(len(vals), dtype=bool)
    starts[1:] = np.any(idx[1:] != idx[:-1], axis=1)
    group = np.cumsum(starts) - 1
    summed = np.bincount(group, weights=vals)
    idx = idx[starts]
    keep = summed != 0
    return np.ascontiguousarray(idx[keep]), summed[keep]


def _as_vector(x: Any, n: int) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"Vetor com shape {v.shape}, esperado ({n},)")
    return v


# ---------------- produtos ----------------
def tensor_vector_power(A: SparseCubicalTensor, x: Any, p: int) -> SparseCubicalTensor | np.ndarray | float:
    """
    Contrai os últimos p modos de A com x.

    p = k−1 devolve o vetor (A x^{k−1}), p = k devolve o escalar A x^k e os
    demais p devolvem um tensor de ordem k−p.
    """
    x = _as_vector(x, A.dim)
    k = A.order
    if not 1 <= int(p) <= k:
        raise ValueError(f"Potência p={p} fora de 1..{k}")
    p = int(p)

    w = A.values * np.prod(x[A.indices[:, k - p:]], axis=1) if A.nnz else np.zeros(0)
    if p == k:
        return float(w.sum())
    if p == k - 1:
        return np.bincount(A.indices[:, 0], weights=w, minlength=A.dim) if A.nnz else np.zeros(A.dim)
    return SparseCubicalTensor(k - p, A.dim, A.indices[:, : k - p], w)


def tensor_vector_power_rows(A: SparseCubicalTensor, X: Any) -> np.ndarray:
    """
    A x^{k−1} para cada linha de X (R × n), em lote.

    A soma por linha segue a ordem das entradas, então o resultado de uma
    linha não depende de quantas linhas vêm junto.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != A.dim:
        raise ValueError(f"Lote com shape {X.shape}, esperado (R, {A.dim})")
    if A.order < 2:
        raise ValueError("Produto em lote exige ordem ≥ 2")
    if A.nnz == 0:
        return np.zeros_like(X)
    P = A.values * np.prod(X[:, A.indices[:, 1:]], axis=2)
    return np.asarray((A._tail_incidence @ P.T).T)


def matrix_tensor_product(R: Any, A: SparseCubicalTensor) -> SparseCubicalTensor:
    """(R A)_{i₁ i₂…i_k} = Σ_j R_{i₁ j} A_{j i₂…i_k}."""
    R = np.asarray(R, dtype=float)
    if R.shape != (A.dim, A.dim):
        raise ValueError(f"Matriz {R.shape} incompatível com tensor de dimensão {A.dim}")
    if A.nnz == 0:
        return SparseCubicalTensor(A.order, A.dim)
    cols = R[:, A.indices[:, 0]]                     # n × nnz
    rows, ents = np.nonzero(cols)
    idx = np.concatenate([rows[:, None], A.indices[ents, 1:]], axis=1)
    return SparseCubicalTensor(A.order, A.dim, idx, cols[rows, ents] * A.values[ents])


def almost_symmetrize(A: SparseCubicalTensor) -> SparseCubicalTensor:
    """Média de A sobre todas as permutações dos modos 2..k."""
    if A.order < 2:
        raise ValueError("Simetrização exige ordem ≥ 2")
    if A.order == 2 or A.nnz == 0:
        return A
    perms = list(permutations(range(1, A.order)))
    idx = np.concatenate([A.indices[:, [0, *perm]] for perm in perms])
    vals = np.tile(A.values, len(perms)) / factorial(A.order - 1)
    return SparseCubicalTensor(A.order, A.dim, idx, vals)


# ---------------- estrutura ----------------
def _pattern_graph(A: SparseCubicalTensor) -> nx.DiGraph:
    G = nx.DiGraph()
    G.add_nodes_from(range(A.dim))
    for row in A.indices:
        G.add_edges_from((int(row[0]), int(j)) for j in row[1:])
    return G


def is_irreducible(A: SparseCubicalTensor) -> bool:
    """
    Verdadeiro se não existe N₁ próprio e não vazio com A_{i₁…i_k} = 0 para
    todo i₁ ∈ N₁ e i₂,…,i_k ∉ N₁.

    O grafo de padrões fortemente conexo é necessário; para k ≥ 3 não basta,
    então em seguida fechamos cada {v} pela regra "i entra quando alguma
    entrada com primeiro índice i tem todos os demais índices dentro do
    conjunto". Irredutível ⇔ todo fecho é {1..n}.
    """
    if A.dim == 1:
        return True
    if not nx.is_strongly_connected(_pattern_graph(A)):
        return False
    if A.order == 2:
        return True

    heads = A.indices[:, 1:]
    inside = np.eye(A.dim, dtype=bool)               # linha v = fecho de {v}
    while True:
        fired = np.all(inside[:, heads], axis=2).astype(float)      # n × nnz
        grown = inside | (np.asarray(A._tail_incidence @ fired.T).T > 0)
        if np.array_equal(grown, inside):
            break
        inside = grown
    return bool(inside.all())


def diagonal_dominance(A: SparseCubicalTensor) -> Dominance:
    """Compara |A_{i…i}| com a soma absoluta do resto da linha i."""
    on_diag = np.all(A.indices == A.indices[:, :1], axis=1)
    diag = np.bincount(A.indices[on_diag, 0], weights=np.abs(A.values[on_diag]), minlength=A.dim)
    off = np.bincount(A.indices[~on_diag, 0], weights=np.abs(A.values[~on_diag]), minlength=A.dim)
    if np.all(diag > off):
        return "strict"
    if np.all(diag >= off):
        return "weak"
    return "none"


# ---------------- espectro ----------------
@dataclass
class PerronParams:
    """
    Iteração de potência para o raio espectral de matriz não negativa.

    Primeiro tenta sem deslocamento; se não convergir dentro de
    `plain_fraction` do orçamento, reinicia com M + εI, ε = shift_factor·max(M).
    """
    tol: float = 1e-10            # diferença entre estimativas e resíduo ‖Mv − ρv‖∞
    max_iters: int = 100_000      # orçamento total (as duas fases)
    shift_factor: float = 1.0     # ε relativo à maior entrada
    plain_fraction: float = 0.5   # fração do orçamento sem deslocamento


@dataclass
class PerronResult:
    radius: float
    vector: np.ndarray            # normalizado com máximo 1
    residual: float
    iterations: int = 0
    shift: float = 0.0


def _power_iteration(M: np.ndarray, shift: float, tol: float, max_iters: int) -> Tuple[PerronResult, bool]:
    v = np.ones(M.shape[0])
    radius = np.inf
    best = PerronResult(np.nan, v, np.inf, 0, shift)
    for it in range(1, max_iters + 1):
        w = M @ v + shift * v
        top = float(w.max())
        if top <= 0.0:
            # M v = 0: raio zero com v no núcleo
            return PerronResult(0.0, v, float(np.max(np.abs(M @ v))), it, shift), True
        residual = float(np.max(np.abs(w - top * v)))
        delta = abs(top - radius)
        radius = top
        if residual < best.residual:
            best = PerronResult(radius - shift, v, residual, it, shift)
        if delta < tol and residual <= tol:
            return PerronResult(radius - shift, v, residual, it, shift), True
        v = w / top
    return best, False


def perron(M: Any, params: PerronParams | Dict[str, Any] | None = None) -> PerronResult:
    """
    Raio espectral e vetor de Perron (à direita) por iteração de potência
    a partir de 1ₙ. Levanta NotConverged com o melhor iterado.
    """
    if params is None:
        params = PerronParams()
    elif isinstance(params, dict):
        params = PerronParams(**params)

    if isinstance(M, SparseCubicalTensor):
        if M.order != 2:
            raise ValueError(f"perron espera matriz (ordem 2), recebeu ordem {M.order}")
        M = M.to_dense()
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"Matriz não quadrada: shape={M.shape}")
    if np.any(M < 0):
        raise ValueError("perron exige matriz não negativa")

    plain_budget = max(1, int(params.max_iters * params.plain_fraction))
    result, ok = _power_iteration(M, 0.0, params.tol, plain_budget)
    if ok:
        return result

    shift = params.shift_factor * float(M.max())
    logger.warning(
        "Perron sem convergência simples | iters=%d residual=%.3e -> reinício com shift=%.3e",
        plain_budget, result.residual, shift,
    )
    shifted, ok = _power_iteration(M, shift, params.tol, max(1, params.max_iters - plain_budget))
    shifted.iterations += plain_budget
    if ok:
        return shifted
    best = shifted if shifted.residual < result.residual else result
    raise NotConverged(
        f"Iteração de potência não convergiu em {params.max_iters} iterações",
        best=best, residual=best.residual, iterations=params.max_iters,
    )
