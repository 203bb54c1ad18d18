import json
from pathlib import Path

import pytest

from mlsbm import Assignment, MultiLayerGraph

FIXTURES = Path(__file__).parent / "fixtures"

# Base seed used by scripts/calibrate.py; the frozen numbers in
# fixtures/calibration.json were produced from these exact streams.
CALIBRATION_BASE_SEED = 20260821


@pytest.fixture(scope="session")
def calibration():
    with open(FIXTURES / "calibration.json") as fh:
        return json.load(fh)


def parity_even_graph(n, T, sigma_bits, tau_bits):
    """The noiseless tensor containing exactly the parity-even slots."""
    layers = []
    for t in range(T):
        edges = []
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                if (sigma_bits[i - 1] + sigma_bits[j - 1] + tau_bits[t]) % 2 == 0:
                    edges.append((i, j))
        layers.append(edges)
    return MultiLayerGraph(n=n, T=T, layers=layers)


@pytest.fixture
def six_edge_instance():
    """n=4, T=2 noiseless fixture: 2 within-pair edges + 4 cross-pair edges."""
    sigma = Assignment((0, 0, 1, 1))
    tau = Assignment((0, 1))
    graph = parity_even_graph(4, 2, sigma.labels, tau.labels)
    return graph, sigma, tau
