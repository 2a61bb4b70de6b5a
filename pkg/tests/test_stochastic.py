import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from contagio_hipergrafo.services import stochastic as st  # noqa: E402
from contagio_hipergrafo.services.analysis import tune_pairwise_rate  # noqa: E402
from contagio_hipergrafo.services.dynamics import build_params  # noqa: E402
from contagio_hipergrafo.services.errors import AssumptionViolation  # noqa: E402
from contagio_hipergrafo.services.hypergraph import (  # noqa: E402
    DirectedHypergraph,
    consecutive_triples,
    cycle_hypergraph,
    random_ba_hypergraph,
)


def _triangle(h=0.1, delta=0.5, mu2=1.0, mu3=0.5):
    H = cycle_hypergraph(3, consecutive_triples(3))
    ones = np.ones(3)
    return build_params(H, delta * ones, h, mu2 * ones, mu3 * ones)


def _curing_only(n=3, h=0.1, delta=0.4):
    return build_params(DirectedHypergraph(n), delta * np.ones(n), h, np.zeros(n))


# ----------------------------------------------------------------------
# 1) Cadeia exata
# ----------------------------------------------------------------------
def test_exact_chain_is_stochastic():
    chain = st.build_exact_chain(_triangle())
    assert chain.transition.shape == (8, 8)
    assert np.all(chain.transition >= 0)
    np.testing.assert_allclose(chain.transition.sum(axis=1), np.ones(8), atol=1e-12)


def test_exact_chain_healthy_state_is_absorbing():
    chain = st.build_exact_chain(_triangle())
    assert chain.transition[0, 0] == pytest.approx(1.0)


def test_exact_chain_size_cap():
    n = 4
    p = _curing_only(n)
    with pytest.raises(ValueError):
        st.build_exact_chain(p, cap=3)


def test_exact_marginals_start_at_init():
    chain = st.build_exact_chain(_triangle())
    init = np.array([0.2, 0.5, 0.9])
    out = st.exact_marginals(chain, init, 5)
    assert out.shape == (6, 3)
    np.testing.assert_allclose(out[0], init, atol=1e-14)


def test_exact_marginals_accepts_full_distribution():
    chain = st.build_exact_chain(_triangle())
    pi = np.zeros(8)
    pi[0b101] = 1.0                  # agentes 0 e 2 infectados
    out = st.exact_marginals(chain, pi, 0)
    np.testing.assert_allclose(out[0], [1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        st.exact_marginals(chain, np.full(8, 0.2), 1)
    with pytest.raises(ValueError):
        st.exact_marginals(chain, [0.1, 0.2], 1)


def test_pure_curing_decays_geometrically():
    p = _curing_only()
    x0 = np.array([0.3, 0.6, 1.0])
    out = st.exact_marginals(st.build_exact_chain(p), x0, 10)
    decay = (1 - 0.1 * 0.4) ** np.arange(11)
    np.testing.assert_allclose(out, decay[:, None] * x0, atol=1e-14)
    err, frame = st.compare_exact(p, x0, 10)
    assert err < 1e-14
    assert list(frame.columns) == ["t", "meanfield_avg", "exact_avg", "abs_error"]


def test_large_step_is_rejected():
    p = _triangle(h=1.0)
    with pytest.raises(AssumptionViolation):
        st.build_exact_chain(p)
    with pytest.raises(AssumptionViolation):
        st.monte_carlo(p, np.full(3, 0.5), 5, runs=10, seed=0)


# ----------------------------------------------------------------------
# 2) Monte Carlo
# ----------------------------------------------------------------------
def test_monte_carlo_is_independent_of_batches_and_threads():
    p = _triangle()
    init = np.full(3, 0.5)
    a = st.monte_carlo(p, init, 20, runs=150, seed=42, mc_params={"batch_size": 7, "workers": 1})
    b = st.monte_carlo(p, init, 20, runs=150, seed=42, mc_params={"batch_size": 64, "workers": 3})
    np.testing.assert_array_equal(a.avg_infection, b.avg_infection)
    np.testing.assert_array_equal(a.per_node_marginals, b.per_node_marginals)
    c = st.monte_carlo(p, init, 20, runs=150, seed=43)
    assert not np.array_equal(a.per_node_marginals, c.per_node_marginals)


def test_monte_carlo_agrees_with_exact_chain():
    p = _triangle()
    init = np.full(3, 0.5)
    T, runs = 10, 4000
    ens = st.monte_carlo(p, init, T, runs=runs, seed=7)
    exact = st.exact_marginals(st.build_exact_chain(p), init, T)
    se = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / runs)
    assert np.all(np.abs(ens.per_node_marginals - exact) <= 4 * se + 1e-12)


def test_monte_carlo_rejects_bad_input():
    p = _triangle()
    with pytest.raises(ValueError):
        st.monte_carlo(p, np.full(3, 0.5), 5, runs=0, seed=0)
    with pytest.raises(ValueError):
        st.monte_carlo(p, np.full(3, 1.5), 5, runs=5, seed=0)
    with pytest.raises(ValueError):
        st.monte_carlo(p, np.full(4, 0.5), 5, runs=5, seed=0)


def test_ensemble_frame_and_marginals_switch():
    p = _triangle()
    ens = st.monte_carlo(p, np.full(3, 0.5), 4, runs=20, seed=1, mc_params={"record_marginals": False})
    assert ens.per_node_marginals is None
    assert list(ens.to_frame().columns) == ["t", "mc_avg"]
    full = st.monte_carlo(p, np.full(3, 0.5), 4, runs=20, seed=1)
    assert list(full.to_frame().columns) == ["t", "mc_avg", "x1", "x2", "x3"]


def test_compare_meanfield_frame():
    p = _triangle()
    err, frame = st.compare_meanfield(p, np.full(3, 0.5), 15, runs=500, seed=3)
    assert list(frame.columns) == ["t", "meanfield_avg", "mc_avg", "abs_error"]
    assert len(frame) == 16
    assert frame["abs_error"].iloc[0] < 0.1
    assert err == pytest.approx(float(frame["abs_error"].max()))


@pytest.mark.slow
def test_meanfield_error_shrinks_with_network_size():
    def error(n, seed):
        H = random_ba_hypergraph(n, 3, 10 * n, seed=seed)
        ones = np.ones(H.n)
        mu = tune_pairwise_rate(H, 0.5, 0.1, 0.9995)
        p = build_params(H, 0.5 * ones, 0.1, mu * ones, 1e-3 * ones)
        err, _ = st.compare_meanfield(p, np.full(H.n, 1 / 3), 200, runs=2000, seed=seed)
        return err

    mean_err = {n: np.mean([error(n, seed) for seed in (1, 2, 3)]) for n in (10, 30, 102)}
    assert mean_err[102] <= mean_err[10]
    assert mean_err[102] <= 0.1
