"""Community recovery: exhaustive/local MLE and three spectral aggregators.

The MLE maximizes the parity-even edge count over balanced (sigma, tau). The
spectral methods aggregate layers three ways: squared adjacencies with the
diagonal degree bias removed (works without knowing layer types), the plain
layer sum (a baseline that cancels under balanced layer types), and the
type-signed sum (an oracle that needs the true tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SizeGuardError, ValidationError
from .model import Assignment, MultiLayerGraph, enumerate_assignments

# Dense n x n matrices are materialized only below this size.
_DENSE_MAX_NODES = 4096
_EXHAUSTIVE_GUARD = 10**7
_ENUM_MAX_ITEMS = 20
_DEGENERATE_EIGEN_TOL = 1e-10
_POWER_TOL = 1e-8
_POWER_MAX_ITER = 1000


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of one recovery method on one graph."""

    sigma_hat: Assignment
    method: str
    tau_hat: Optional[Assignment] = None
    objective: Optional[int] = None
    degenerate: bool = False
    # Objective value after every accepted local-search step; None elsewhere.
    objective_trace: Optional[tuple[int, ...]] = None


def to_json_record(result: RecoveryResult, loss_vs_truth: Optional[float] = None) -> dict:
    """Serializable summary of a recovery result."""
    record: dict = {
        "method": result.method,
        "sigma_hat": result.sigma_hat.bitstring(),
        "degenerate_flag": result.degenerate,
    }
    if result.tau_hat is not None:
        record["tau_hat"] = result.tau_hat.bitstring()
    if result.objective is not None:
        record["objective"] = result.objective
    if loss_vs_truth is not None:
        record["loss_vs_truth"] = loss_vs_truth
    return record


@dataclass(frozen=True, eq=False)
class AggregateMatrix:
    """Symmetric layer aggregate feeding a spectral method."""

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("aggregate matrix must be square")
        if not np.array_equal(m, m.T):
            raise ValidationError("aggregate matrix must be symmetric")
        if self.kind == "bias-adjusted" and np.any(np.diag(m) != 0.0):
            raise ValidationError("bias-adjusted aggregate must have a zero diagonal")
        object.__setattr__(self, "matrix", m)


def _check_dense_size(n: int) -> None:
    if n > _DENSE_MAX_NODES:
        raise SizeGuardError(
            f"dense matrices are capped at n={_DENSE_MAX_NODES}, got n={n}"
        )


def _edge_arrays(graph: MultiLayerGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All edges flattened to 0-based (i, j, t) arrays."""
    rows_i, rows_j, rows_t = [], [], []
    for t, layer in enumerate(graph.layers):
        if len(layer) == 0:
            continue
        rows_i.append(layer[:, 0] - 1)
        rows_j.append(layer[:, 1] - 1)
        rows_t.append(np.full(len(layer), t, dtype=np.int64))
    if not rows_i:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(rows_i), np.concatenate(rows_j), np.concatenate(rows_t)


def aggregate_bias_adjusted(graph: MultiLayerGraph) -> AggregateMatrix:
    """Sum over layers of (A_t @ A_t - degree diagonal), by counting two-hop paths.

    For i != j the (i, j) entry of A_t @ A_t is the number of common neighbors
    of i and j in layer t, so accumulating common-neighbor pairs and leaving
    the diagonal at zero realizes the debiased square without dense products.
    """
    _check_dense_size(graph.n)
    n = graph.n
    m = np.zeros((n, n), dtype=np.float64)
    for layer in graph.layers:
        if len(layer) < 2:
            continue
        neighbors: list[list[int]] = [[] for _ in range(n + 1)]
        for i, j in layer:
            neighbors[int(i)].append(int(j))
            neighbors[int(j)].append(int(i))
        for mid in range(1, n + 1):
            ns = neighbors[mid]
            if len(ns) < 2:
                continue
            arr = np.array(ns, dtype=np.int64) - 1
            a_idx, b_idx = np.triu_indices(len(arr), k=1)
            np.add.at(m, (arr[a_idx], arr[b_idx]), 1.0)
            np.add.at(m, (arr[b_idx], arr[a_idx]), 1.0)
    return AggregateMatrix(m, "bias-adjusted")


def aggregate_layer_sum(graph: MultiLayerGraph) -> AggregateMatrix:
    """Plain sum of adjacency matrices."""
    _check_dense_size(graph.n)
    m = np.zeros((graph.n, graph.n), dtype=np.float64)
    for layer in graph.layers:
        if len(layer) == 0:
            continue
        i = layer[:, 0] - 1
        j = layer[:, 1] - 1
        np.add.at(m, (i, j), 1.0)
        np.add.at(m, (j, i), 1.0)
    return AggregateMatrix(m, "layer-sum")


def aggregate_signed(graph: MultiLayerGraph, tau: Assignment) -> AggregateMatrix:
    """Type-signed sum: layers with tau_t = 1 enter with weight -1."""
    _check_dense_size(graph.n)
    if tau.size != graph.T:
        raise ValidationError(f"tau has {tau.size} labels but the graph has {graph.T} layers")
    m = np.zeros((graph.n, graph.n), dtype=np.float64)
    for t, layer in enumerate(graph.layers):
        if len(layer) == 0:
            continue
        w = -1.0 if tau.labels[t] == 1 else 1.0
        i = layer[:, 0] - 1
        j = layer[:, 1] - 1
        np.add.at(m, (i, j), w)
        np.add.at(m, (j, i), w)
    return AggregateMatrix(m, "signed")


def _power_iteration(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """Deterministic power iteration: largest-|eigenvalue| pair.

    Fixed index-dependent start vector (no randomness); stops when the
    Rayleigh quotient moves by <= 1e-8 relative, or after 1000 iterations.
    """
    n = matrix.shape[0]
    v = np.cos(np.arange(1, n + 1, dtype=np.float64))
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for _ in range(_POWER_MAX_ITER):
        w = matrix @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # v lies in the null space; treat as eigenvalue 0
            return 0.0, v
        v_new = w / norm
        r_new = float(v_new @ (matrix @ v_new))
        if abs(r_new - rayleigh) <= _POWER_TOL * max(1.0, abs(r_new)):
            return r_new, v_new
        v, rayleigh = v_new, r_new
    return rayleigh, v


def top_two_eigenpairs(matrix: np.ndarray) -> tuple[float, np.ndarray, float, np.ndarray]:
    """Top-2 eigenpairs by |eigenvalue| via power iteration plus deflation."""
    lam1, v1 = _power_iteration(matrix)
    deflated = matrix - lam1 * np.outer(v1, v1)
    lam2, v2 = _power_iteration(deflated)
    return lam1, v1, lam2, v2


def balanced_rounding(scores) -> Assignment:
    """Assign 1 to the n/2 largest scores; ties go to the lowest index first."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or len(scores) % 2 != 0 or len(scores) == 0:
        raise ValidationError("scores must be a non-empty even-length vector")
    order = np.argsort(-scores, kind="stable")
    labels = np.zeros(len(scores), dtype=np.int8)
    labels[order[: len(scores) // 2]] = 1
    return Assignment(tuple(int(x) for x in labels))


def _fallback_assignment(n: int) -> Assignment:
    return balanced_rounding(np.zeros(n))


def _spectral_round(agg: AggregateMatrix, method: str, pick_smaller_mean: bool) -> RecoveryResult:
    n = agg.matrix.shape[0]
    if not np.any(agg.matrix):
        return RecoveryResult(_fallback_assignment(n), method, degenerate=True)
    lam1, v1, lam2, v2 = top_two_eigenpairs(agg.matrix)
    if abs(abs(lam1) - abs(lam2)) <= _DEGENERATE_EIGEN_TOL * max(1.0, abs(lam1)):
        return RecoveryResult(_fallback_assignment(n), method, degenerate=True)
    if pick_smaller_mean:
        # The community vector is near-orthogonal to all-ones; the density
        # direction is not, so the smaller |mean| identifies the signal.
        v = v1 if abs(float(v1.mean())) <= abs(float(v2.mean())) else v2
    else:
        v = v1
    return RecoveryResult(balanced_rounding(v), method)


def bias_adjusted_spectral(graph: MultiLayerGraph) -> RecoveryResult:
    """Spectral clustering on the debiased squared-adjacency sum."""
    if graph.n < 4 or graph.n % 2 != 0:
        raise ValidationError(f"bias_adjusted_spectral needs even n >= 4, got n={graph.n}")
    return _spectral_round(aggregate_bias_adjusted(graph), "bias-adjusted", True)


def aggregate_sum_spectral(graph: MultiLayerGraph) -> RecoveryResult:
    """Spectral clustering on the plain layer sum (type-blind baseline)."""
    if graph.n < 2 or graph.n % 2 != 0:
        raise ValidationError(f"aggregate_sum_spectral needs even n >= 2, got n={graph.n}")
    return _spectral_round(aggregate_layer_sum(graph), "sum-aggregate", True)


def oracle_tau_spectral(graph: MultiLayerGraph, tau: Assignment) -> RecoveryResult:
    """Spectral clustering on the type-signed sum, using the true tau."""
    if graph.n < 2 or graph.n % 2 != 0:
        raise ValidationError(f"oracle_tau_spectral needs even n >= 2, got n={graph.n}")
    agg = aggregate_signed(graph, tau)
    # The signed sum cancels the density direction, so the top eigenvector
    # itself carries the community signal.
    return _spectral_round(agg, "oracle-tau", False)


def mle_objective(graph: MultiLayerGraph, sigma: Assignment, tau: Assignment) -> int:
    """Count edges sitting on parity-even slots under (sigma, tau)."""
    if sigma.size != graph.n:
        raise ValidationError(f"sigma has {sigma.size} labels but the graph has {graph.n} nodes")
    if tau.size != graph.T:
        raise ValidationError(f"tau has {tau.size} labels but the graph has {graph.T} layers")
    e_i, e_j, e_t = _edge_arrays(graph)
    if len(e_i) == 0:
        return 0
    sig = sigma.as_array().astype(np.int64)
    ta = tau.as_array().astype(np.int64)
    parity = (sig[e_i] + sig[e_j] + ta[e_t]) % 2
    return int(len(e_i) - parity.sum())


def mle_exhaustive(graph: MultiLayerGraph) -> RecoveryResult:
    """Global maximizer of the parity-even edge count over balanced (sigma, tau).

    Ties break by enumeration order (sigma-major); the reported sigma_hat is
    canonicalized so its first entry is 0, which never changes the objective
    because flipping sigma preserves every pair parity.
    """
    n, T = graph.n, graph.T
    if n % 2 != 0 or T % 2 != 0:
        raise ValidationError("mle_exhaustive needs even n and T")
    if n > _ENUM_MAX_ITEMS or T > _ENUM_MAX_ITEMS:
        raise SizeGuardError(
            f"mle_exhaustive enumeration is capped at {_ENUM_MAX_ITEMS} items per axis"
        )
    n_sigma = math.comb(n, n // 2)
    n_tau = math.comb(T, T // 2)
    if n_sigma * n_tau > _EXHAUSTIVE_GUARD:
        raise SizeGuardError(
            f"mle_exhaustive candidate count {n_sigma * n_tau} exceeds {_EXHAUSTIVE_GUARD}"
        )
    sigmas = enumerate_assignments(n)
    taus = enumerate_assignments(T)
    tau_mat = np.array([a.labels for a in taus], dtype=np.int64)
    e_i, e_j, e_t = _edge_arrays(graph)
    layer_totals = np.bincount(e_t, minlength=T).astype(np.int64)
    onehot = (e_t[:, None] == np.arange(T)[None, :]).astype(np.int64) if len(e_t) else None

    best_val = -1
    best_sigma_idx = 0
    best_tau_idx = 0
    chunk = 2048
    for start in range(0, n_sigma, chunk):
        block = sigmas[start : start + chunk]
        sig_mat = np.array([a.labels for a in block], dtype=np.int64)
        if len(e_i) == 0:
            objs = np.zeros((len(block), n_tau), dtype=np.int64)
        else:
            parity = (sig_mat[:, e_i] + sig_mat[:, e_j]) % 2
            odd_per_layer = parity @ onehot
            even_per_layer = layer_totals[None, :] - odd_per_layer
            # objective(sigma, tau) = sum_t (tau_t ? odd_t : even_t)
            objs = even_per_layer @ (1 - tau_mat.T) + odd_per_layer @ tau_mat.T
        flat = int(np.argmax(objs))
        val = int(objs.flat[flat])
        if val > best_val:
            best_val = val
            best_sigma_idx = start + flat // n_tau
            best_tau_idx = flat % n_tau
    sigma_hat = sigmas[best_sigma_idx]
    if sigma_hat.labels[0] == 1:
        sigma_hat = sigma_hat.flipped()
    return RecoveryResult(
        sigma_hat,
        "mle-exhaustive",
        tau_hat=taus[best_tau_idx],
        objective=best_val,
    )


def _tau_for_sigma(sig: np.ndarray, e_i, e_j, e_t, layer_totals: np.ndarray) -> np.ndarray:
    """Balanced tau maximizing the objective for fixed sigma.

    Layers ranked by margin (even-count minus odd-count); the T/2 largest
    margins get tau_t = 0, ties resolved by layer index.
    """
    T = len(layer_totals)
    if len(e_i):
        parity = (sig[e_i] + sig[e_j]) % 2
        odd = np.bincount(e_t, weights=parity.astype(np.float64), minlength=T)
    else:
        odd = np.zeros(T)
    margin = (layer_totals - odd) - odd
    order = np.argsort(-margin, kind="stable")
    tau = np.ones(T, dtype=np.int64)
    tau[order[: T // 2]] = 0
    return tau


def default_start_battery(graph: MultiLayerGraph) -> list[Assignment]:
    """Deterministic balanced starting points for multistart ascent.

    Roundings of the top-2 eigenvectors of the bias-adjusted aggregate and of
    the plain layer sum, the sum/difference combinations of the former pair,
    and two fixed patterns. Starts that are global flips of an earlier start
    are dropped: the ascent landscape is flip-symmetric, so they converge to
    flip-equivalent results with identical objectives.
    """
    n = graph.n
    starts: list[Assignment] = []
    try:
        l1, v1, l2, v2 = top_two_eigenpairs(aggregate_bias_adjusted(graph).matrix)
        s1, u1, s2, u2 = top_two_eigenpairs(aggregate_layer_sum(graph).matrix)
        for vec in (v1, v2, v1 + v2, v1 - v2, u2, u1):
            starts.append(balanced_rounding(vec))
    except SizeGuardError:
        pass
    starts.append(Assignment(tuple([0] * (n // 2) + [1] * (n // 2))))
    starts.append(Assignment(tuple(i % 2 for i in range(n))))
    seen = set()
    unique = []
    for start in starts:
        key = min(start.labels, start.flipped().labels)
        if key not in seen:
            seen.add(key)
            unique.append(start)
    return unique


def mle_local_search_multistart(graph: MultiLayerGraph, max_rounds: int = 50) -> RecoveryResult:
    """Best of mle_local_search over the deterministic start battery.

    Single-start ascent from one spectral initialization lands in a wrong
    basin on a sizable fraction of small dense instances; restarting from a
    fixed battery of complementary initializations recovers the exhaustive
    optimum far more reliably at unchanged asymptotic cost. Ties keep the
    earliest start, so the result is deterministic.
    """
    best: Optional[RecoveryResult] = None
    for init in default_start_battery(graph):
        result = mle_local_search(graph, init, max_rounds=max_rounds)
        if best is None or result.objective > best.objective:
            best = result
    assert best is not None
    return RecoveryResult(
        sigma_hat=best.sigma_hat,
        method="mle-local-multistart",
        tau_hat=best.tau_hat,
        objective=best.objective,
        objective_trace=best.objective_trace,
    )


def mle_local_search(
    graph: MultiLayerGraph, init: Assignment, max_rounds: int = 50
) -> RecoveryResult:
    """Alternating ascent toward the MLE from a given starting labelling.

    Each round relabels layers optimally for the current sigma, then applies
    best-improvement swaps (one 0-node for one 1-node) while any swap raises
    the objective. The objective never decreases; the result is locally
    optimal under single swaps and layer relabelings.
    """
    n, T = graph.n, graph.T
    if init.size != n:
        raise ValidationError(f"init has {init.size} labels but the graph has {n} nodes")
    if T % 2 != 0:
        raise ValidationError("mle_local_search needs even T for balanced tau")
    if max_rounds < 1:
        raise ValidationError(f"max_rounds must be >= 1, got {max_rounds}")
    e_i, e_j, e_t = _edge_arrays(graph)
    layer_totals = np.bincount(e_t, minlength=T).astype(np.float64)

    def objective_of(sig, tau) -> int:
        if len(e_i) == 0:
            return 0
        parity = (sig[e_i] + sig[e_j] + tau[e_t]) % 2
        return int(len(e_i) - parity.sum())

    sig = init.as_array().astype(np.int64)
    tau = _tau_for_sigma(sig, e_i, e_j, e_t, layer_totals)
    obj = objective_of(sig, tau)
    trace = [obj]

    for _ in range(max_rounds):
        changed = False
        new_tau = _tau_for_sigma(sig, e_i, e_j, e_t, layer_totals)
        if not np.array_equal(new_tau, tau):
            tau = new_tau
            obj = objective_of(sig, tau)
            trace.append(obj)
            changed = True
        # Best-improvement swaps at fixed tau. For a swap (u, v) only edges
        # touching exactly one endpoint flip parity; s_e = +1 if edge e gains
        # by flipping one endpoint, -1 if it loses.
        while True:
            if len(e_i) == 0:
                break
            s_e = (2 * ((sig[e_i] + sig[e_j] + tau[e_t]) % 2) - 1).astype(np.float64)
            d = np.zeros(n)
            np.add.at(d, e_i, s_e)
            np.add.at(d, e_j, s_e)
            c = np.zeros((n, n))
            np.add.at(c, (e_i, e_j), s_e)
            c_sym = c + c.T
            zeros_idx = np.flatnonzero(sig == 0)
            ones_idx = np.flatnonzero(sig == 1)
            delta = (
                d[zeros_idx][:, None]
                + d[ones_idx][None, :]
                - 2.0 * c_sym[np.ix_(zeros_idx, ones_idx)]
            )
            flat = int(np.argmax(delta))
            gain = delta.flat[flat]
            if gain <= 0:
                break
            u = int(zeros_idx[flat // len(ones_idx)])
            v = int(ones_idx[flat % len(ones_idx)])
            sig[u], sig[v] = 1, 0
            obj += int(round(gain))
            trace.append(obj)
            changed = True
        if not changed:
            break
    return RecoveryResult(
        Assignment(tuple(int(x) for x in sig)),
        "mle-local",
        tau_hat=Assignment(tuple(int(x) for x in tau)),
        objective=obj,
        objective_trace=tuple(trace),
    )
