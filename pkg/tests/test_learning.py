import sys
from itertools import product
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from contagio_hipergrafo.services import learning as lr  # noqa: E402
from contagio_hipergrafo.services.dynamics import Trajectory, build_params, simulate  # noqa: E402
from contagio_hipergrafo.services.hypergraph import cycle_hypergraph  # noqa: E402

TRUE_DELTA = [0.29, 0.25, 0.21, 0.22, 0.35]
TRUE_MU2 = [0.60, 0.73, 0.53, 0.80, 0.65]
TRUE_MU3 = [0.60, 0.70, 0.40, 0.80, 0.57]


@pytest.fixture
def weighted_trajectory(weighted_params):
    return simulate(weighted_params, [0.9, 0.1, 0.5, 0.3, 0.7], 300)


# ----------------------------------------------------------------------
# 1) Recuperação das taxas
# ----------------------------------------------------------------------
def test_recovers_weighted_rates(weighted_trajectory, weighted_hypergraph):
    learned, stats = lr.learn_all(weighted_trajectory, weighted_hypergraph)
    assert stats["rank_ok"] == 5
    assert stats["errors"] == 0
    got = np.array([[p.delta, p.mu2, p.mu3] for p in learned])
    expected = np.column_stack([TRUE_DELTA, TRUE_MU2, TRUE_MU3])
    np.testing.assert_allclose(got, expected, atol=1e-6)
    assert all(p.residual < 1e-12 for p in learned)
    assert all(not p.flags for p in learned)


def test_window_selection(weighted_trajectory, weighted_hypergraph):
    problem = lr.build_problem(weighted_trajectory, weighted_hypergraph, None, 10, 40, 2)
    assert problem.Phi.shape == (40, 3)
    assert problem.columns == ("delta", "mu2", "mu3")
    X = weighted_trajectory.states
    np.testing.assert_allclose(problem.eta, X[11:51, 2] - X[10:50, 2])
    np.testing.assert_allclose(problem.Phi[:, 0], -0.01 * X[10:50, 2])
    sol = lr.solve_nnls(problem)
    assert sol.delta == pytest.approx(TRUE_DELTA[2], abs=1e-6)


@pytest.mark.parametrize("q,m", [(-1, 5), (0, 0), (290, 20)])
def test_invalid_window(weighted_trajectory, weighted_hypergraph, q, m):
    with pytest.raises(ValueError):
        lr.learn_all(weighted_trajectory, weighted_hypergraph, q=q, m=m)


def test_window_start_does_not_change_estimates(weighted_trajectory, weighted_hypergraph):
    thetas = []
    for q in (0, 25, 50):
        learned, stats = lr.learn_all(weighted_trajectory, weighted_hypergraph, q=q, m=100)
        assert stats["rank_ok"] == 5
        thetas.append(np.array([[p.delta, p.mu2, p.mu3] for p in learned]))
    np.testing.assert_allclose(thetas[1], thetas[0], atol=1e-6)
    np.testing.assert_allclose(thetas[2], thetas[0], atol=1e-6)


def test_invalid_node_and_size(weighted_trajectory, weighted_hypergraph):
    with pytest.raises(ValueError):
        lr.build_problem(weighted_trajectory, weighted_hypergraph, None, 0, None, 5)
    with pytest.raises(ValueError):
        lr.learn_all(weighted_trajectory, cycle_hypergraph(4))


# ----------------------------------------------------------------------
# 2) Diagnósticos
# ----------------------------------------------------------------------
def test_single_step_window_is_rank_deficient(weighted_trajectory, weighted_hypergraph):
    learned, stats = lr.learn_all(weighted_trajectory, weighted_hypergraph, q=0, m=1)
    assert stats["rank_ok"] == 0
    assert all("rank_deficient" in p.flags for p in learned)


def test_constant_trajectory_gives_zero_rates(weighted_hypergraph):
    traj = Trajectory(0.01, np.full((20, 5), 0.4))
    learned, _ = lr.learn_all(traj, weighted_hypergraph)
    for p in learned:
        np.testing.assert_array_equal(p.theta, np.zeros(3))
        assert "delta_zero" in p.flags
        assert not p.rank_ok


def test_missing_triples_flag_zero_column():
    H = cycle_hypergraph(3)
    p = build_params(H, [0.3, 0.4, 0.5], 0.01, [0.6, 0.7, 0.8])
    traj = simulate(p, [0.9, 0.2, 0.5], 100)
    learned, stats = lr.learn_all(traj, H)
    assert stats["rank_ok"] == 0
    for node in learned:
        assert "zero_columns:mu3" in node.flags
        assert node.mu3 == 0.0
    np.testing.assert_allclose([node.delta for node in learned], [0.3, 0.4, 0.5], atol=1e-6)


def test_rank_check_reports_conditioning(weighted_trajectory, weighted_hypergraph):
    problem = lr.build_problem(weighted_trajectory, weighted_hypergraph, None, 0, None, 0)
    check = lr.rank_check(problem)
    assert check.rank_ok
    assert 0 < check.conditioning <= 1
    assert check.zero_columns == []


# ----------------------------------------------------------------------
# 3) NNLS contra enumeração dos conjuntos ativos
# ----------------------------------------------------------------------
def _best_by_active_sets(Phi, eta):
    best, best_res = np.zeros(Phi.shape[1]), np.linalg.norm(eta)
    for mask in product([False, True], repeat=Phi.shape[1]):
        mask = np.array(mask)
        if not mask.any():
            continue
        sol, *_ = np.linalg.lstsq(Phi[:, mask], eta, rcond=None)
        if np.any(sol < 0):
            continue
        theta = np.zeros(Phi.shape[1])
        theta[mask] = sol
        res = np.linalg.norm(Phi @ theta - eta)
        if res < best_res:
            best, best_res = theta, res
    return best, best_res


def test_nnls_matches_active_set_enumeration():
    rng = np.random.default_rng(99)
    for _ in range(30):
        Phi = rng.normal(size=(12, 3))
        eta = rng.normal(size=12)
        problem = lr.LearningProblem(0, 0.01, 0, 12, Phi, eta, ("delta", "mu2", "mu3"))
        sol = lr.solve_nnls(problem)
        theta, res = _best_by_active_sets(Phi, eta)
        assert sol.residual == pytest.approx(res, rel=1e-9, abs=1e-12)
        np.testing.assert_allclose(sol.theta, theta, atol=1e-9)
        assert np.all(sol.theta >= 0)
        assert sol.kkt_residual < 1e-9


# ----------------------------------------------------------------------
# 4) Tabela
# ----------------------------------------------------------------------
def test_learned_frame_columns(weighted_trajectory, weighted_hypergraph):
    learned, _ = lr.learn_all(weighted_trajectory, weighted_hypergraph)
    df = lr.learned_frame(learned)
    assert list(df.columns) == ["node", "delta", "mu2", "mu3", "residual", "rank_ok", "kkt_residual", "flags", "error"]
    assert df["node"].tolist() == [1, 2, 3, 4, 5]
