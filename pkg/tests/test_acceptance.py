"""Reproduções longas; rodam com `pytest --runslow`."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from contagio_hipergrafo.services import analysis as an  # noqa: E402
from contagio_hipergrafo.services import dynamics as dyn  # noqa: E402
from contagio_hipergrafo.services import stochastic as st  # noqa: E402
from contagio_hipergrafo.services import tensor_core as tc  # noqa: E402
from contagio_hipergrafo.services.hypergraph import (  # noqa: E402
    consecutive_triples,
    cycle_hypergraph,
    random_ba_hypergraph,
)
from contagio_hipergrafo.services.learning import learn_all  # noqa: E402

pytestmark = pytest.mark.slow


def _cycle(rng, n, delta, mu2, mu3, h=0.01):
    H = cycle_hypergraph(n, consecutive_triples(n))
    return dyn.build_params(H, rng.uniform(*delta, n), h, rng.uniform(*mu2, n), rng.uniform(*mu3, n))


# ----------------------------------------------------------------------
# 1) Aprendizado com a trajetória longa
# ----------------------------------------------------------------------
def test_learning_reproduction(weighted_params, weighted_hypergraph):
    traj = dyn.simulate(weighted_params, [0.9, 0.1, 0.5, 0.3, 0.7], 2000)
    learned, stats = learn_all(traj, weighted_hypergraph)
    got = np.array([[p.delta, p.mu2, p.mu3] for p in learned])
    expected = np.column_stack(
        [[0.29, 0.25, 0.21, 0.22, 0.35], [0.60, 0.73, 0.53, 0.80, 0.65], [0.60, 0.70, 0.40, 0.80, 0.57]]
    )
    np.testing.assert_allclose(got, expected, atol=1e-6)


# ----------------------------------------------------------------------
# 2) Multiestabilidade bi-vírus
# ----------------------------------------------------------------------
def test_bivirus_multistability(bivirus_params):
    p = bivirus_params(1)
    n = p.n
    rng = np.random.default_rng(2024)
    X1, X2 = dyn.random_simplex_states(n, 20, rng)
    res = dyn.simulate_bivirus_batch(p, X1, X2, max_steps=1_000_000, tol=1e-11)
    assert res.converged.all()

    eq1 = dyn.find_equilibrium(p.virus1, np.ones(n))
    eq2 = dyn.find_equilibrium(p.virus2, np.ones(n))
    zero = np.zeros(n)
    expected = [np.concatenate([zero, zero]), np.concatenate([eq1, zero]), np.concatenate([zero, eq2])]
    reps, _ = dyn.cluster_limits(res.final, tol=1e-6)
    assert len(reps) <= 3
    dist = np.array([[np.max(np.abs(row - e)) for e in expected] for row in res.final])
    # todo limite é um dos três equilíbrios de fronteira
    assert np.all(dist.min(axis=1) < 1e-6)
    reached = set(dist.argmin(axis=1).tolist())
    assert {1, 2} <= reached


# ----------------------------------------------------------------------
# 3) Biestabilidade de vírus único
# ----------------------------------------------------------------------
def test_bistability_property():
    rng = np.random.default_rng(11)
    found = 0
    for _ in range(200):
        p = _cycle(rng, int(rng.integers(4, 8)), (0.3, 0.6), (0.02, 0.25), (1.0, 4.0))
        if not an.prop2_bistability(p).holds:
            continue
        found += 1
        n = p.n
        top = dyn.simulate_batch(p, np.ones(n), tol=1e-12)
        assert top.converged.all()
        assert np.all(top.final[0] >= 0.5)

        r = min(an.thm1_alpha1(p).radius, 0.01)
        X = rng.uniform(0, r * (1 - 1e-9), size=(20, n))
        low = dyn.simulate_batch(p, X, tol=1e-12)
        assert low.converged.all()
        assert np.max(low.final) < 1e-8
        if found == 10:
            break
    assert found == 10


# ----------------------------------------------------------------------
# 4) Suítes saudável-global e endêmica
# ----------------------------------------------------------------------
def test_healthy_global_suite():
    rng = np.random.default_rng(5)
    found = 0
    for seed in range(400):
        H = random_ba_hypergraph(8, 2, 10, seed=seed)
        n = H.n
        p = dyn.build_params(
            H, rng.uniform(0.5, 1.0, n), 0.1, rng.uniform(0.0, 0.1, n), rng.uniform(0.0, 0.05, n)
        )
        if not an.prop1_healthy_global(p).holds:
            continue
        found += 1
        X = rng.random((100, n))
        res = dyn.simulate_batch(p, X, tol=1e-13)
        assert res.converged.all()
        assert np.max(res.final) < 1e-8
        # decaimento geométrico: a taxa assintótica é ρ(I − h𝒟 + h𝓑) < 1
        traj = dyn.simulate(p, X[0], 400).states.max(axis=1)
        rho = an.reproduction_number(p)
        assert traj[400] <= traj[200] * (rho ** 200) * 10
        assert traj[400] < traj[200] < traj[0]
        if found == 100:
            break
    assert found == 100


def test_endemic_global_suite():
    rng = np.random.default_rng(6)
    for _ in range(20):
        n = 5
        delta = rng.uniform(0.3, 0.5, n)
        H = cycle_hypergraph(n, consecutive_triples(n))
        p = dyn.build_params(H, delta, 0.01, rng.uniform(0.6, 1.0, n), np.full(n, 0.002 * delta.min()))
        assert an.prop3_endemic(p).holds
        X = rng.uniform(1e-3, 1.0, size=(100, n))
        res = dyn.simulate_batch(p, X, tol=1e-13)
        assert res.converged.all()
        assert res.final.min() > 0
        assert np.max(np.abs(res.final - res.final[0])) < 1e-6


# ----------------------------------------------------------------------
# 5) Domínios de atração
# ----------------------------------------------------------------------
def _cycle_virus(delta, mu2, mu3, n=5):
    H = cycle_hypergraph(n, consecutive_triples(n))
    ones = np.ones(n)
    return dyn.build_params(H, delta * ones, 0.01, mu2 * ones, mu3 * ones)


def _endemic_instance():
    rng = np.random.default_rng(12)
    n = 5
    delta = rng.uniform(0.30, 0.35, n)
    H = cycle_hypergraph(n, consecutive_triples(n))
    return dyn.build_params(H, delta, 0.01, rng.uniform(0.8, 0.9, n), np.full(n, 0.002 * delta.min()))


def _upper(p):
    return dyn.find_equilibrium(p, np.ones(p.n))


@pytest.mark.parametrize(
    "kind,samples",
    [
        ("alpha1", 1000),
        ("p_plus_saudavel", 1000),
        ("alpha2", 1000),
        ("p_plus_endemico", 1000),
        ("alpha1_global", 100),
        ("alpha1_local", 100),
        ("alpha2_aleatorio", 1000),
        ("alpha2_global", 100),
    ],
)
def test_domain_soundness(kind, samples):
    bistable = _cycle_virus(0.5, 0.2, 2.0)
    p, build = {
        "alpha1": (bistable, an.thm1_alpha1),
        "p_plus_saudavel": (bistable, an.thm5_healthy_p_plus),
        "alpha2": (bistable, lambda q: an.thm3_alpha2(q, _upper(q))),
        "p_plus_endemico": (bistable, lambda q: an.thm6_endemic_p_plus(q, _upper(q))),
        "alpha1_global": (_cycle_virus(1.0, 0.3, 0.5), an.thm1_alpha1),
        "alpha1_local": (_cycle_virus(0.5, 0.3, 0.5), an.thm1_alpha1),
        "alpha2_aleatorio": (_endemic_instance(), lambda q: an.thm3_alpha2(q, _upper(q))),
        "alpha2_global": (_cycle_virus(0.5, 0.1, 0.1), lambda q: an.thm3_alpha2(q, np.zeros(q.n))),
    }[kind]
    dom = build(p)
    if kind == "alpha2_aleatorio":
        assert an.prop3_endemic(p).holds
    if kind.endswith("_global"):
        assert dom.is_global
    check = an.validate_domain(p, dom, samples=samples, seed=3, step_tol=1e-12)
    assert check.violations == 0
    assert check.ok


# ----------------------------------------------------------------------
# 6) Campo médio contra o modelo estocástico
# ----------------------------------------------------------------------
@pytest.mark.parametrize("target", [0.9995, 1.0056])
def test_meanfield_vs_monte_carlo_on_ba(target):
    H = random_ba_hypergraph(102, 3, 10_000, seed=7)
    mu = an.tune_pairwise_rate(H, 0.5, 0.1, target)
    ones = np.ones(H.n)
    p = dyn.build_params(H, 0.5 * ones, 0.1, mu * ones, 1e-3 * ones)
    assert an.reproduction_number(p) == pytest.approx(target, abs=1e-3)
    err, frame = st.compare_meanfield(p, np.full(H.n, 1 / 3), 1000, runs=5000, seed=7)
    assert len(frame) == 1001
    assert err <= 0.1


def test_exact_chain_oracle():
    rng = np.random.default_rng(8)
    H = random_ba_hypergraph(6, 2, 6, seed=8)
    n = H.n
    p = dyn.build_params(H, rng.uniform(0.3, 0.8, n), 0.1, rng.uniform(0.2, 0.6, n), rng.uniform(0.1, 0.4, n))
    chain = st.build_exact_chain(p)
    np.testing.assert_allclose(chain.transition.sum(axis=1), np.ones(2 ** n), atol=1e-12)
    init = rng.uniform(0.2, 0.8, n)
    T, runs = 25, 100_000
    exact = st.exact_marginals(chain, init, T)
    ens = st.monte_carlo(p, init, T, runs=runs, seed=8)
    se = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / runs)
    assert np.all(np.abs(ens.per_node_marginals - exact) <= 4 * se)


# ----------------------------------------------------------------------
# 7) Suíte de tensores
# ----------------------------------------------------------------------
def _dense_power(dense, x, p):
    out = dense
    for _ in range(p):
        out = out @ x
    return out


def test_tensor_oracle_suite():
    rng = np.random.default_rng(1000)
    for _ in range(1000):
        order = int(rng.integers(2, 5))
        n = int(rng.integers(1, 7))
        dense = rng.normal(size=(n,) * order)
        dense[rng.random(dense.shape) > 0.3] = 0.0
        A = tc.SparseCubicalTensor.from_dense(dense)
        x = rng.normal(size=n)
        for p in range(1, order + 1):
            got = tc.tensor_vector_power(A, x, p)
            expected = _dense_power(dense, x, p)
            got = got.to_dense() if isinstance(got, tc.SparseCubicalTensor) else got
            np.testing.assert_allclose(got, expected, atol=1e-12)
        if order >= 3:
            S = tc.almost_symmetrize(A)
            np.testing.assert_allclose(
                tc.tensor_vector_power(S, x, order - 1), _dense_power(dense, x, order - 1), atol=1e-12
            )


def test_error_dynamics_suite():
    rng = np.random.default_rng(77)
    for _ in range(30):
        p = _cycle(rng, int(rng.integers(3, 7)), (0.2, 0.5), (0.3, 1.0), (0.0, 0.05))
        xbar = dyn.find_equilibrium(p, np.ones(p.n))
        K1, K2, K3 = dyn.error_dynamics_tensors(p, xbar)
        base = dyn.step(p, xbar)
        for _ in range(100):
            y = rng.uniform(-xbar, 1 - xbar)
            rhs = K1 @ y + tc.tensor_vector_power(K2, y, 2) + tc.tensor_vector_power(K3, y, 3)
            np.testing.assert_allclose(dyn.step(p, xbar + y) - base, rhs, atol=1e-12)


# ----------------------------------------------------------------------
# 8) Cenário unitário (topologia inferida dos pesos)
# ----------------------------------------------------------------------
@pytest.mark.xfail(strict=False, reason="topologia do cenário unitário reconstruída a partir dos pesos listados")
def test_unit_topology_reproduction_numbers(unit_params):
    got = [an.reproduction_number(unit_params(cfg)) for cfg in (1, 2, 3)]
    assert got == pytest.approx([0.9986, 0.9995, 1.0021], abs=5e-3)


@pytest.mark.xfail(strict=False, reason="topologia do cenário unitário reconstruída a partir dos pesos listados")
@pytest.mark.parametrize(
    "cfg,expected",
    [
        (2, [0.6306, 0.5926, 0.6559, 0.6371, 0.6679]),
        (3, [0.4913, 0.5663, 0.5547, 0.4750, 0.6455]),
    ],
)
def test_unit_topology_endemic_points(unit_params, cfg, expected):
    xbar = dyn.find_equilibrium(unit_params(cfg), np.ones(5))
    np.testing.assert_allclose(xbar, expected, atol=1e-3)
