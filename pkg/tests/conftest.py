import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))
from contagio_hipergrafo.services import parsing  # noqa: E402
from contagio_hipergrafo.services.dynamics import build_params  # noqa: E402
from contagio_hipergrafo.services.hypergraph import DirectedHypergraph  # noqa: E402

DATA = ROOT / "data"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="roda também os testes marcados slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reproduções longas (Monte Carlo n = 102, suítes aleatórias)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or "slow" in (config.getoption("-m") or ""):
        return
    skip = pytest.mark.skip(reason="lento: use --runslow ou -m slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# ----------------------------------------------------------------------
# Cenários de data/
# ----------------------------------------------------------------------
@pytest.fixture
def weighted_hypergraph():
    return parsing.load_hypergraph(DATA / "rede5" / "hipergrafo.json")


@pytest.fixture
def weighted_params(weighted_hypergraph):
    return parsing.load_params(DATA / "rede5" / "params.json", weighted_hypergraph)


@pytest.fixture
def unit_hypergraph():
    return parsing.load_hypergraph(DATA / "rede5_unitario" / "hipergrafo.json")


@pytest.fixture
def unit_params(unit_hypergraph):
    def load(cfg: int):
        return parsing.load_params(DATA / "rede5_unitario" / f"params_cfg{cfg}.json", unit_hypergraph)
    return load


@pytest.fixture
def cycle_hypergraph():
    return parsing.load_hypergraph(DATA / "ciclo5" / "hipergrafo.json")


@pytest.fixture
def bivirus_params(cycle_hypergraph):
    def load(cfg: int):
        return parsing.load_bivirus_params(DATA / "ciclo5" / f"params_cfg{cfg}.json", cycle_hypergraph)
    return load


@pytest.fixture
def order4_params():
    """Ciclo de 5 nós com uma tripla por cauda e duas arestas de ordem 4."""
    edges = [(i, ((i + 1) % 5,)) for i in range(5)]
    edges += [(i, ((i + 1) % 5, (i + 2) % 5)) for i in range(5)]
    edges += [(0, (1, 2, 3)), (2, (0, 3, 4))]
    H = DirectedHypergraph(5, tuple(edges))
    ones = np.ones(5)
    return build_params(H, 0.5 * ones, 0.01, 0.3 * ones, 0.8 * ones, {4: 0.6 * ones})
