"""Split-layer detection: recover on early layers, test density on holdouts.

The test recovers a community estimate from the first T layers, estimates the
overall density from the last layer, and measures the cross-block edge average
on the second-to-last layer. Under the null the cross-block average matches
the density estimate; under the planted model it sits near rho/2 or 3*rho/2
(depending on the holdout layer's hidden type), so a relative deviation of
0.3 separates the hypotheses once recovery is reasonably accurate.

The shuffling wrapper reruns the test on uniformly permuted layers and takes
the maximum decision, which guards against adversarially ordered layers; its
per-round false-positive cost is why the wrapper is off by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .model import MultiLayerGraph
from .recovery import RecoveryResult
from .seeding import substream

# Decision margin: decide planted iff |cross_mean - rho_hat| >= 0.3 * rho_hat.
# Fixed, never tuned. The separation budget behind it: with recovery loss
# below 0.1 the planted cross-block mean stays below 0.55*rho in expectation
# (below 0.6*rho with high probability), while rho_hat concentrates within
# 0.1*rho of rho, leaving a 0.3*rho gap on the planted side; under the null
# the cross-block mean also concentrates within 0.1*rho of rho.
MARGIN_FACTOR = 0.3
PLANTED_CROSS_MEAN_CEILING = 0.55
PLANTED_CROSS_HIGH_PROB_CEILING = 0.6
CONCENTRATION_BAND = 0.1

RecoverFn = Callable[[MultiLayerGraph], RecoveryResult]


@dataclass(frozen=True)
class DetectionDecision:
    """Outcome of one detection test."""

    decision: int
    rho_hat: float
    cross_block_mean: float
    shuffle_rounds_used: int

    def __post_init__(self):
        if self.decision not in (0, 1):
            raise ValidationError(f"decision must be 0 or 1, got {self.decision}")
        if self.rho_hat < 0:
            raise ValidationError(f"rho_hat must be >= 0, got {self.rho_hat}")


def to_json_record(decision: DetectionDecision, **metadata) -> dict:
    record = {
        "decision": decision.decision,
        "rho_hat": decision.rho_hat,
        "cross_block_mean": decision.cross_block_mean,
        "shuffle_rounds_used": decision.shuffle_rounds_used,
    }
    record.update(metadata)
    return record


def estimate_density(layer: np.ndarray, n: int) -> float:
    """Edge count of one layer divided by the number of node pairs."""
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    return len(layer) / math.comb(n, 2)


def split_layer_test(graph: MultiLayerGraph, recover: RecoverFn) -> DetectionDecision:
    """Run the three-way split test on a graph with T + 2 layers.

    Layers 1..T feed the recovery procedure only; layer T+1 supplies the
    cross-block average only; layer T+2 supplies the density estimate only.
    An empty density estimate decides 0 (no evidence of anything).
    """
    if graph.T < 3:
        raise ValidationError(f"split_layer_test needs at least 3 layers, got {graph.T}")
    if graph.n % 2 != 0:
        raise ValidationError(f"split_layer_test needs even n, got {graph.n}")
    training = graph.layer_slice(0, graph.T - 2)
    sigma_hat = recover(training).sigma_hat
    rho_hat = estimate_density(graph.layers[-1], graph.n)
    cross_layer = graph.layers[-2]
    if len(cross_layer):
        labels = sigma_hat.as_array()
        cross_count = int(
            (labels[cross_layer[:, 0] - 1] != labels[cross_layer[:, 1] - 1]).sum()
        )
    else:
        cross_count = 0
    cross_mean = 4.0 * cross_count / (graph.n * graph.n)
    if rho_hat == 0.0:
        decision = 0
    else:
        decision = 1 if abs(cross_mean - rho_hat) >= MARGIN_FACTOR * rho_hat else 0
    return DetectionDecision(
        decision=decision,
        rho_hat=rho_hat,
        cross_block_mean=cross_mean,
        shuffle_rounds_used=0,
    )


def default_shuffle_rounds(n: int, rho_hat: float) -> int:
    """Heuristic round count ~ log(n^2 * rho_hat), floored at 1."""
    return max(1, math.ceil(math.log(n * n * rho_hat + 2.0)))


def shuffled_test(
    graph: MultiLayerGraph,
    recover: RecoverFn,
    rounds: Optional[int] = None,
    seed: int = 0,
) -> DetectionDecision:
    """Max of split_layer_test over `rounds` uniform layer permutations.

    Round m permutes layers with the substream (seed, m), so a run with fewer
    rounds is always a prefix of a run with more rounds (monotone decisions).
    With rounds=None the heuristic default based on the unpermuted last
    layer's density is used.
    """
    if graph.T < 3:
        raise ValidationError(f"shuffled_test needs at least 3 layers, got {graph.T}")
    if rounds is None:
        rounds = default_shuffle_rounds(graph.n, estimate_density(graph.layers[-1], graph.n))
    if rounds < 1:
        raise ValidationError(f"rounds must be >= 1, got {rounds}")
    best: Optional[DetectionDecision] = None
    executed = 0
    for m in range(rounds):
        order = substream(seed, m).permutation(graph.T)
        permuted = graph.permute_layers(order)
        outcome = split_layer_test(permuted, recover)
        executed = m + 1
        if best is None or outcome.decision > best.decision:
            best = outcome
        if best.decision == 1:
            # max over rounds is already decided; later rounds cannot flip it
            break
    assert best is not None
    return DetectionDecision(
        decision=best.decision,
        rho_hat=best.rho_hat,
        cross_block_mean=best.cross_block_mean,
        shuffle_rounds_used=executed,
    )
