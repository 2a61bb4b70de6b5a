import sys
from itertools import combinations, permutations
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from contagio_hipergrafo.services import tensor_core as tc  # noqa: E402
from contagio_hipergrafo.services.errors import NotConverged  # noqa: E402
from contagio_hipergrafo.services.tensor_core import SparseCubicalTensor  # noqa: E402


def _random_tensor(rng, order, dim, density=0.4, signed=False):
    dense = rng.random((dim,) * order)
    dense[rng.random(dense.shape) > density] = 0.0
    if signed:
        dense *= rng.choice([-1.0, 1.0], size=dense.shape)
    return SparseCubicalTensor.from_dense(dense), dense


def _dense_power(dense, x, p):
    out = dense
    for _ in range(p):
        out = out @ x                # contrai o último modo
    return out


def _reducible_by_definition(dense):
    """Existe N₁ próprio com A_{i₁…} = 0 para i₁ ∈ N₁ e demais índices fora de N₁."""
    n = dense.shape[0]
    nz = np.argwhere(dense != 0)
    for size in range(1, n):
        for S in combinations(range(n), size):
            S = set(S)
            if not any(row[0] in S and all(j not in S for j in row[1:]) for row in nz):
                return True
    return False


# ----------------------------------------------------------------------
# 1) Construção canônica
# ----------------------------------------------------------------------
def test_duplicates_are_summed_and_zeros_dropped():
    T = SparseCubicalTensor(3, 4, [[2, 1, 0], [0, 1, 2], [2, 1, 0], [1, 1, 1]], [1.0, 2.0, 0.5, 0.0])
    assert T.nnz == 2
    assert T.entries() == {(0, 1, 2): 2.0, (2, 1, 0): 1.5}
    assert T.indices.tolist() == [[0, 1, 2], [2, 1, 0]]


def test_cancelling_duplicates_vanish():
    T = SparseCubicalTensor.from_entries(2, 3, [((0, 1), 1.0), ((0, 1), -1.0), ((2, 0), 3.0)])
    assert T.entries() == {(2, 0): 3.0}


def test_invalid_construction():
    with pytest.raises(ValueError):
        SparseCubicalTensor(3, 2, [[0, 1, 2]], [1.0])
    with pytest.raises(ValueError):
        SparseCubicalTensor(2, 2, [[0, 1]], [1.0, 2.0])
    with pytest.raises(ValueError):
        SparseCubicalTensor(2, 2, [[0, 1]], [np.inf])
    with pytest.raises(ValueError):
        SparseCubicalTensor.from_dense(np.zeros((2, 3)))


def test_tensor_is_read_only():
    T = SparseCubicalTensor.identity(3, 2)
    with pytest.raises(ValueError):
        T.values[0] = 5.0


def test_lift_represents_diag_times_product():
    rng = np.random.default_rng(1)
    A, _ = _random_tensor(rng, 3, 4)
    y = rng.random(4)
    lifted = A.lift()
    assert lifted.order == 4
    np.testing.assert_allclose(tc.tensor_vector_power(lifted, y, 3), y * tc.tensor_vector_power(A, y, 2), atol=1e-14)


# ----------------------------------------------------------------------
# 2) Produtos contra o oráculo denso
# ----------------------------------------------------------------------
@pytest.mark.parametrize("order", [2, 3, 4])
def test_tensor_vector_power_matches_dense(order):
    rng = np.random.default_rng(order)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        A, dense = _random_tensor(rng, order, n, signed=True)
        x = rng.normal(size=n)
        for p in range(1, order + 1):
            got = tc.tensor_vector_power(A, x, p)
            expected = _dense_power(dense, x, p)
            if p == order:
                assert got == pytest.approx(float(expected), abs=1e-12)
            elif p == order - 1:
                np.testing.assert_allclose(got, expected, atol=1e-12)
            else:
                np.testing.assert_allclose(got.to_dense(), expected, atol=1e-12)


def _as_array(value):
    return value.to_dense() if isinstance(value, SparseCubicalTensor) else np.asarray(value)


@pytest.mark.parametrize("order", [2, 3, 4])
def test_tensor_vector_power_is_multilinear(order):
    rng = np.random.default_rng(40 + order)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        A, _ = _random_tensor(rng, order, n, signed=True)
        x, y = rng.normal(size=n), rng.normal(size=n)
        alpha = float(rng.uniform(-2.0, 2.0))
        p = order - 1
        np.testing.assert_allclose(
            tc.tensor_vector_power(A, alpha * x, p),
            alpha ** p * tc.tensor_vector_power(A, x, p),
            rtol=1e-12, atol=1e-12,
        )
        # p = 1 é linear no vetor
        np.testing.assert_allclose(
            _as_array(tc.tensor_vector_power(A, x + y, 1)),
            _as_array(tc.tensor_vector_power(A, x, 1)) + _as_array(tc.tensor_vector_power(A, y, 1)),
            atol=1e-12,
        )


def test_tensor_vector_power_rejects_bad_power():
    A = SparseCubicalTensor.identity(3, 2)
    with pytest.raises(ValueError):
        tc.tensor_vector_power(A, np.ones(2), 0)
    with pytest.raises(ValueError):
        tc.tensor_vector_power(A, np.ones(2), 4)
    with pytest.raises(ValueError):
        tc.tensor_vector_power(A, np.ones(3), 1)


def test_batched_power_matches_row_by_row():
    rng = np.random.default_rng(7)
    A, _ = _random_tensor(rng, 3, 5)
    X = rng.random((9, 5))
    got = tc.tensor_vector_power_rows(A, X)
    for r in range(9):
        np.testing.assert_allclose(got[r], tc.tensor_vector_power_rows(A, X[r:r + 1])[0], rtol=1e-15, atol=0)
        np.testing.assert_allclose(got[r], tc.tensor_vector_power(A, X[r], 2), atol=1e-13)


def test_matrix_tensor_product_matches_tensordot():
    rng = np.random.default_rng(3)
    A, dense = _random_tensor(rng, 3, 4)
    R = rng.normal(size=(4, 4))
    got = tc.matrix_tensor_product(R, A).to_dense()
    np.testing.assert_allclose(got, np.tensordot(R, dense, axes=(1, 0)), atol=1e-12)


# ----------------------------------------------------------------------
# 3) Quase-simetrização
# ----------------------------------------------------------------------
@pytest.mark.parametrize("order", [3, 4])
def test_almost_symmetrize_properties(order):
    rng = np.random.default_rng(10 + order)
    A, dense = _random_tensor(rng, order, 4)
    S = tc.almost_symmetrize(A)
    D = S.to_dense()
    for perm in permutations(range(1, order)):
        np.testing.assert_allclose(D, np.transpose(D, (0, *perm)), atol=1e-14)
    x = rng.random(4)
    np.testing.assert_allclose(tc.tensor_vector_power(S, x, order - 1), _dense_power(dense, x, order - 1), atol=1e-12)
    assert tc.almost_symmetrize(S).allclose(S)


def test_almost_symmetrize_keeps_matrices():
    M = SparseCubicalTensor.from_entries(2, 2, {(0, 1): 2.0})
    assert tc.almost_symmetrize(M) is M


# ----------------------------------------------------------------------
# 4) Irredutibilidade e dominância
# ----------------------------------------------------------------------
def test_irreducible_matrix_cycle():
    cycle = SparseCubicalTensor.from_entries(2, 3, {(0, 1): 1.0, (1, 2): 1.0, (2, 0): 1.0})
    path = SparseCubicalTensor.from_entries(2, 3, {(0, 1): 1.0, (1, 2): 1.0})
    assert tc.is_irreducible(cycle)
    assert not tc.is_irreducible(path)


def test_strongly_connected_pattern_is_not_enough_for_order_three():
    # A_{1,2,1}, A_{2,1,2}: grafo de padrões 1 ↔ 2, mas N₁ = {1} reduz
    A = SparseCubicalTensor.from_entries(3, 2, {(0, 1, 0): 1.0, (1, 0, 1): 1.0})
    assert not tc.is_irreducible(A)
    B = SparseCubicalTensor.from_entries(3, 2, {(0, 1, 1): 1.0, (1, 0, 0): 1.0})
    assert tc.is_irreducible(B)


def test_irreducibility_matches_subset_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        order = int(rng.integers(2, 5))
        n = int(rng.integers(2, 5))
        A, dense = _random_tensor(rng, order, n, density=float(rng.uniform(0.05, 0.4)))
        if A.nnz == 0:
            continue
        assert tc.is_irreducible(A) == (not _reducible_by_definition(dense))


def test_diagonal_dominance_levels():
    strict = SparseCubicalTensor.from_dense([[3.0, 1.0], [-1.0, 2.0]])
    weak = SparseCubicalTensor.from_dense([[1.0, 1.0], [1.0, 1.0]])
    none = SparseCubicalTensor.from_dense([[1.0, 2.0], [0.0, 1.0]])
    assert tc.diagonal_dominance(strict) == "strict"
    assert tc.diagonal_dominance(weak) == "weak"
    assert tc.diagonal_dominance(none) == "none"
    assert tc.diagonal_dominance(SparseCubicalTensor.identity(3, 4)) == "strict"


# ----------------------------------------------------------------------
# 5) Perron
# ----------------------------------------------------------------------
def test_perron_known_matrix():
    res = tc.perron(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert res.radius == pytest.approx(3.0, abs=1e-9)
    np.testing.assert_allclose(res.vector, [1.0, 1.0], atol=1e-8)
    assert res.residual <= 1e-10


def test_perron_matches_eigenvalues_of_random_positive_matrices():
    rng = np.random.default_rng(5)
    for _ in range(20):
        M = rng.random((6, 6))
        res = tc.perron(M)
        assert res.radius == pytest.approx(float(np.max(np.abs(np.linalg.eigvals(M)))), rel=1e-8)


def test_perron_periodic_matrix_uses_shift():
    # permutação cíclica: a iteração simples oscila, o deslocamento resolve
    P = np.roll(np.eye(3), 1, axis=1)
    P[0] *= 2.0
    res = tc.perron(P, tc.PerronParams(max_iters=20_000))
    assert res.radius == pytest.approx(2.0 ** (1 / 3), abs=1e-8)
    assert res.shift > 0


def _weighted_cycle(weights):
    """wᵢ na posição (i, i+1): periódica, ρ = (Π wᵢ)^{1/n}."""
    n = len(weights)
    return np.asarray(weights)[:, None] * np.roll(np.eye(n), 1, axis=1)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_perron_shift_restart_matches_eigenvalues(n):
    rng = np.random.default_rng(60 + n)
    for _ in range(4):
        M = _weighted_cycle(rng.uniform(0.5, 2.0, n))
        params = tc.PerronParams(max_iters=4000)
        res = tc.perron(M, params)
        assert res.shift == pytest.approx(float(M.max()))
        assert res.iterations > 2000
        assert res.radius == pytest.approx(float(np.max(np.abs(np.linalg.eigvals(M)))), rel=1e-8)
        assert res.residual <= params.tol
        # só a fase sem deslocamento não converge nessa matriz
        with pytest.raises(NotConverged):
            tc.perron(M, tc.PerronParams(max_iters=4000, plain_fraction=1.0))


def test_perron_is_monotone_in_entries():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        A = rng.random((n, n))
        extra = rng.random((n, n))
        extra[rng.random((n, n)) > 0.3] = 0.0
        assert tc.perron(A).radius <= tc.perron(A + extra).radius + 1e-9


def test_perron_within_row_sum_bounds():
    rng = np.random.default_rng(13)
    matrices = [rng.random((int(rng.integers(2, 7)),) * 2) for _ in range(30)]
    matrices += [_weighted_cycle(rng.uniform(0.5, 2.0, 4)) for _ in range(5)]
    for M in matrices:
        rows = M.sum(axis=1)
        radius = tc.perron(M, tc.PerronParams(max_iters=20_000)).radius
        assert rows.min() - 1e-9 <= radius <= rows.max() + 1e-9


def test_perron_zero_matrix():
    assert tc.perron(np.zeros((3, 3))).radius == 0.0


def test_perron_rejects_invalid_input():
    with pytest.raises(ValueError):
        tc.perron(np.array([[1.0, -1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        tc.perron(np.ones((2, 3)))
    with pytest.raises(ValueError):
        tc.perron(SparseCubicalTensor.identity(3, 2))


def test_perron_budget_exhausted():
    P = np.roll(np.eye(4), 1, axis=1)
    P[0] *= 3.0
    with pytest.raises(NotConverged) as info:
        tc.perron(P, {"max_iters": 4})
    assert info.value.best is not None
