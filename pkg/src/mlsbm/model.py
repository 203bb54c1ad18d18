"""Balanced two-community multilayer graph model: types, sampling, storage.

A planted instance hides one balanced node labelling sigma shared by all
layers and one balanced layer-type labelling tau. The slot (i, j, t) with
i < j holds an edge with probability 3*rho/2 when sigma(i) + sigma(j) + tau(t)
is even and rho/2 when it is odd, independently across slots. The null model
fills every slot independently with probability rho. Layers are simple
undirected graphs stored as sorted edge lists with 1-based node indices.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import SizeGuardError, ValidationError
from .seeding import substream

MAX_DENSITY = 2.0 / 3.0
FORMAT_HEADER = "mlsbm-edges v1"

# Per-slot Bernoulli fallback below this node count; block-binomial counts
# plus distinct-pair unranking at or above it (needed for layer counts ~1e4).
_SPARSE_MIN_NODES = 64

# Substream tags, fixed forever: changing them changes every sampled instance.
_SIGMA_STREAM = 0
_TAU_STREAM = 1
_LAYER_STREAM = 2

_ENUM_MAX_ITEMS = 20


def _check_even(value, name: str, minimum: int) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum or value % 2 != 0:
        raise ValidationError(f"{name} must be an even integer >= {minimum}, got {value}")
    return value


def _check_rho(rho) -> float:
    rho = float(rho)
    if not (0.0 < rho < MAX_DENSITY):
        raise ValidationError(f"rho must lie strictly inside (0, {MAX_DENSITY:.6g}), got {rho}")
    return rho


def _as_bits(values, name: str) -> tuple[int, ...]:
    try:
        bits = tuple(int(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{name} must be a sequence of bits") from exc
    if any(b not in (0, 1) for b in bits):
        raise ValidationError(f"{name} entries must all be 0 or 1")
    return bits


@dataclass(frozen=True)
class MlsbmParams:
    """Model parameters: node count, layer count, overall density scale.

    Both counts must be even (balanced labellings need even sizes) and rho
    must satisfy 0 < rho < 2/3 so that 3*rho/2 is a valid edge probability.
    """

    n: int
    T: int
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "n", _check_even(self.n, "n", 2))
        object.__setattr__(self, "T", _check_even(self.T, "T", 2))
        object.__setattr__(self, "rho", _check_rho(self.rho))


@dataclass(frozen=True)
class Assignment:
    """A balanced binary labelling: exactly half the entries are 1."""

    labels: tuple[int, ...]

    def __post_init__(self):
        bits = _as_bits(self.labels, "labels")
        if len(bits) == 0 or len(bits) % 2 != 0:
            raise ValidationError(f"labels length must be even and positive, got {len(bits)}")
        if sum(bits) != len(bits) // 2:
            raise ValidationError(
                f"labels must be balanced: expected {len(bits) // 2} ones, got {sum(bits)}"
            )
        object.__setattr__(self, "labels", bits)

    @property
    def size(self) -> int:
        return len(self.labels)

    def as_array(self) -> np.ndarray:
        return np.array(self.labels, dtype=np.int8)

    def flipped(self) -> "Assignment":
        return Assignment(tuple(1 - b for b in self.labels))

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.labels)

    @classmethod
    def from_bitstring(cls, text: str) -> "Assignment":
        if not text or any(c not in "01" for c in text):
            raise ValidationError(f"bitstring must be non-empty over {{0,1}}, got {text!r}")
        return cls(tuple(int(c) for c in text))


def _validate_layer_edges(edges: np.ndarray, n: int, where: str) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.int64)
    if edges.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise ValidationError(f"{where}: edge array must have shape (m, 2)")
    i, j = edges[:, 0], edges[:, 1]
    if (i < 1).any() or (j > n).any():
        raise ValidationError(f"{where}: node indices must lie in [1, {n}]")
    if (i >= j).any():
        raise ValidationError(f"{where}: edges must satisfy i < j (no self-loops)")
    if len(edges) > 1:
        keys = i * (n + 1) + j
        if (np.diff(keys) <= 0).any():
            raise ValidationError(f"{where}: edges must be sorted by (i, j) without duplicates")
    edges = edges.copy()
    edges.setflags(write=False)
    return edges


@dataclass(frozen=True, eq=False)
class MultiLayerGraph:
    """Edge lists of T simple undirected layers over n shared nodes.

    Nodes are 1-based. Each layer is an int64 array of shape (m_t, 2) holding
    rows (i, j) with i < j, sorted lexicographically, free of duplicates.
    """

    n: int
    T: int
    layers: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ValidationError(f"n must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.T, (int, np.integer)) or self.T < 1:
            raise ValidationError(f"T must be an integer >= 1, got {self.T!r}")
        if len(self.layers) != self.T:
            raise ValidationError(f"expected {self.T} layers, got {len(self.layers)}")
        checked = tuple(
            _validate_layer_edges(layer, self.n, f"layer {t + 1}")
            for t, layer in enumerate(self.layers)
        )
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "layers", checked)

    def __eq__(self, other):
        if not isinstance(other, MultiLayerGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.T == other.T
            and all(np.array_equal(a, b) for a, b in zip(self.layers, other.layers))
        )

    @property
    def total_edges(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def layer_slice(self, start: int, stop: int) -> "MultiLayerGraph":
        """Sub-graph keeping layers [start, stop) (0-based layer positions)."""
        if not (0 <= start <= stop <= self.T):
            raise ValidationError(f"layer slice [{start}, {stop}) out of range for T={self.T}")
        return MultiLayerGraph(self.n, stop - start, self.layers[start:stop])

    def permute_layers(self, order: Sequence[int]) -> "MultiLayerGraph":
        """Reorder layers; `order[k]` is the old position placed at new position k."""
        order = [int(o) for o in order]
        if sorted(order) != list(range(self.T)):
            raise ValidationError("order must be a permutation of 0..T-1")
        return MultiLayerGraph(self.n, self.T, tuple(self.layers[o] for o in order))


@dataclass(frozen=True)
class PlantedInstance:
    """A sampled graph together with the hidden labels that produced it."""

    graph: MultiLayerGraph
    sigma: Assignment
    tau: Assignment

    def __post_init__(self):
        if self.sigma.size != self.graph.n:
            raise ValidationError(
                f"sigma has {self.sigma.size} labels but the graph has {self.graph.n} nodes"
            )
        if self.tau.size != self.graph.T:
            raise ValidationError(
                f"tau has {self.tau.size} labels but the graph has {self.graph.T} layers"
            )


def edge_probability(sigma_i: int, sigma_j: int, tau_t: int, rho: float) -> float:
    """Slot edge probability: 3*rho/2 on even parity, rho/2 on odd.

    Parity is sigma_i + sigma_j + tau_t; even parity marks the dense slots
    (within-community in assortative layers, cross-community in
    disassortative ones).
    """
    for name, bit in (("sigma_i", sigma_i), ("sigma_j", sigma_j), ("tau_t", tau_t)):
        if bit not in (0, 1):
            raise ValidationError(f"{name} must be 0 or 1, got {bit!r}")
    rho = _check_rho(rho)
    if (sigma_i + sigma_j + tau_t) % 2 == 0:
        return 1.5 * rho
    return 0.5 * rho


@functools.lru_cache(maxsize=64)
def _all_pairs(n: int) -> np.ndarray:
    """All node pairs (i < j, 1-based) in lexicographic order; cached readonly."""
    pairs = np.array(list(itertools.combinations(range(1, n + 1), 2)), dtype=np.int64)
    pairs.setflags(write=False)
    return pairs


def _unrank_within(ranks: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Map lexicographic pair ranks to (i, j) pairs of one sorted member list."""
    m = len(members)
    firsts = np.arange(m, dtype=np.int64)
    # cum[a] = number of pairs whose first position is < a
    cum = firsts * (m - 1) - firsts * (firsts - 1) // 2
    a = np.searchsorted(cum, ranks, side="right") - 1
    b = ranks - cum[a] + a + 1
    return np.column_stack([members[a], members[b]])


def _sorted_edges(rows: list[np.ndarray]) -> np.ndarray:
    if not rows:
        return np.empty((0, 2), dtype=np.int64)
    edges = np.concatenate([r for r in rows if len(r)], axis=0) if any(len(r) for r in rows) else np.empty((0, 2), dtype=np.int64)
    if len(edges) == 0:
        return np.empty((0, 2), dtype=np.int64)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return edges[order]


def _sample_pairs_block(count: int, prob: float, gen: np.random.Generator) -> np.ndarray:
    """Ranks of present pairs in a block of `count` slots with common probability."""
    if count == 0:
        return np.empty(0, dtype=np.int64)
    k = int(gen.binomial(count, prob))
    if k == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(gen.choice(count, size=k, replace=False)).astype(np.int64)


def _sample_layer_planted(
    n: int, rho: float, sigma: np.ndarray, tau_bit: int, gen: np.random.Generator
) -> np.ndarray:
    p_within = 1.5 * rho if tau_bit == 0 else 0.5 * rho
    p_cross = 1.5 * rho if tau_bit == 1 else 0.5 * rho
    if n < _SPARSE_MIN_NODES:
        pairs = _all_pairs(n)
        parity = (sigma[pairs[:, 0] - 1] + sigma[pairs[:, 1] - 1]) % 2
        probs = np.where(parity == 0, p_within, p_cross)
        return pairs[gen.random(len(pairs)) < probs]
    zeros = np.flatnonzero(sigma == 0).astype(np.int64) + 1
    ones = np.flatnonzero(sigma == 1).astype(np.int64) + 1
    n0, n1 = len(zeros), len(ones)
    pairs0 = n0 * (n0 - 1) // 2
    count_within = pairs0 + n1 * (n1 - 1) // 2
    count_cross = n0 * n1
    rows = []
    ranks_within = _sample_pairs_block(count_within, p_within, gen)
    ranks_cross = _sample_pairs_block(count_cross, p_cross, gen)
    if len(ranks_within):
        in0 = ranks_within < pairs0
        if in0.any():
            rows.append(_unrank_within(ranks_within[in0], zeros))
        if (~in0).any():
            rows.append(_unrank_within(ranks_within[~in0] - pairs0, ones))
    if len(ranks_cross):
        i = zeros[ranks_cross // n1]
        j = ones[ranks_cross % n1]
        rows.append(np.column_stack([np.minimum(i, j), np.maximum(i, j)]))
    return _sorted_edges(rows)


def _sample_layer_null(n: int, rho: float, gen: np.random.Generator) -> np.ndarray:
    if n < _SPARSE_MIN_NODES:
        pairs = _all_pairs(n)
        return pairs[gen.random(len(pairs)) < rho]
    members = np.arange(1, n + 1, dtype=np.int64)
    ranks = _sample_pairs_block(n * (n - 1) // 2, rho, gen)
    if len(ranks) == 0:
        return np.empty((0, 2), dtype=np.int64)
    return _unrank_within(ranks, members)


def sample_conditional(
    n: int,
    T: int,
    rho: float,
    sigma_bits: Sequence[int],
    tau_bits: Sequence[int],
    seed: int,
) -> MultiLayerGraph:
    """Sample a graph with fixed labels; balance and evenness are NOT required.

    This is the low-level conditional sampler: sigma_bits and tau_bits may be
    any bit sequences of lengths n and T (e.g. a single layer with tau = (0,)).
    """
    sigma = _as_bits(sigma_bits, "sigma_bits")
    tau = _as_bits(tau_bits, "tau_bits")
    if len(sigma) != n or n < 2:
        raise ValidationError(f"sigma_bits must have length n >= 2, got n={n}, len={len(sigma)}")
    if len(tau) != T or T < 1:
        raise ValidationError(f"tau_bits must have length T >= 1, got T={T}, len={len(tau)}")
    rho = _check_rho(rho)
    sigma_arr = np.array(sigma, dtype=np.int8)
    layers = tuple(
        _sample_layer_planted(n, rho, sigma_arr, tau[t], substream(seed, _LAYER_STREAM, t))
        for t in range(T)
    )
    return MultiLayerGraph(n, T, layers)


def _sample_balanced(m: int, gen: np.random.Generator) -> Assignment:
    order = gen.permutation(m)
    labels = np.zeros(m, dtype=np.int8)
    labels[order[: m // 2]] = 1
    return Assignment(tuple(int(x) for x in labels))


def sample_planted(params: MlsbmParams, seed: int) -> PlantedInstance:
    """Draw sigma and tau uniformly from the balanced labellings, then sample edges.

    Pure function of (params, seed): layer t always consumes substream
    (seed, layer-tag, t), so the output is reproducible and layers could be
    sampled in parallel.
    """
    sigma = _sample_balanced(params.n, substream(seed, _SIGMA_STREAM))
    tau = _sample_balanced(params.T, substream(seed, _TAU_STREAM))
    graph = sample_conditional(params.n, params.T, params.rho, sigma.labels, tau.labels, seed)
    return PlantedInstance(graph=graph, sigma=sigma, tau=tau)


def sample_null(params: MlsbmParams, seed: int) -> MultiLayerGraph:
    """Sample the null model: every slot independently Bernoulli(rho)."""
    layers = tuple(
        _sample_layer_null(params.n, params.rho, substream(seed, _LAYER_STREAM, t))
        for t in range(params.T)
    )
    return MultiLayerGraph(params.n, params.T, layers)


def enumerate_assignments(m: int) -> list[Assignment]:
    """All balanced assignments of m items, ascending in label-tuple order.

    Guarded at m <= 20 (binom(20, 10) = 184756 vectors); the order is pinned
    because MLE tie-breaking references it.
    """
    m = _check_even(m, "m", 2)
    if m > _ENUM_MAX_ITEMS:
        raise SizeGuardError(f"enumerate_assignments is capped at m={_ENUM_MAX_ITEMS}, got {m}")
    out = []
    # Zero positions chosen in lexicographic order produce label tuples in
    # ascending lexicographic order (zeros early = smaller tuple).
    for zero_positions in itertools.combinations(range(m), m // 2):
        labels = [1] * m
        for p in zero_positions:
            labels[p] = 0
        out.append(Assignment(tuple(labels)))
    return out


def write_graph(
    path: Union[str, Path],
    graph: Union[MultiLayerGraph, PlantedInstance],
    sigma: Assignment | None = None,
    tau: Assignment | None = None,
) -> None:
    """Write the text edge format; planted labels go into footer lines.

    Format: header "mlsbm-edges v1 n=<n> T=<T>", one line "t i j" per edge
    (1-based, i < j) sorted by (t, i, j), then optional footers
    "sigma <bits>" and "tau <bits>" (both or neither).
    """
    if isinstance(graph, PlantedInstance):
        if sigma is None:
            sigma = graph.sigma
        if tau is None:
            tau = graph.tau
        graph = graph.graph
    if (sigma is None) != (tau is None):
        raise ValidationError("sigma and tau footers must be written together")
    lines = [f"{FORMAT_HEADER} n={graph.n} T={graph.T}"]
    for t, layer in enumerate(graph.layers, start=1):
        for i, j in layer:
            lines.append(f"{t} {i} {j}")
    if sigma is not None:
        if sigma.size != graph.n or tau.size != graph.T:
            raise ValidationError("footer label lengths must match the graph dimensions")
        lines.append(f"sigma {sigma.bitstring()}")
        lines.append(f"tau {tau.bitstring()}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_graph(path: Union[str, Path]) -> Union[MultiLayerGraph, PlantedInstance]:
    """Parse the text edge format; returns a PlantedInstance when footers exist."""
    text = Path(path).read_text(encoding="ascii")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError(f"{path}: empty file")
    header = lines[0].split()
    if (
        len(header) != 4
        or " ".join(header[:2]) != FORMAT_HEADER
        or not header[2].startswith("n=")
        or not header[3].startswith("T=")
    ):
        raise ValidationError(f"{path}: bad header {lines[0]!r}")
    try:
        n = int(header[2][2:])
        T = int(header[3][2:])
    except ValueError as exc:
        raise ValidationError(f"{path}: bad header numbers") from exc
    per_layer: list[list[tuple[int, int]]] = [[] for _ in range(T)]
    sigma_bits: str | None = None
    tau_bits: str | None = None
    last_t = 0
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "sigma":
            sigma_bits = parts[1] if len(parts) == 2 else None
            if sigma_bits is None:
                raise ValidationError(f"{path}: malformed sigma footer")
            continue
        if parts[0] == "tau":
            tau_bits = parts[1] if len(parts) == 2 else None
            if tau_bits is None:
                raise ValidationError(f"{path}: malformed tau footer")
            continue
        if sigma_bits is not None or tau_bits is not None:
            raise ValidationError(f"{path}: edge lines after footers")
        if len(parts) != 3:
            raise ValidationError(f"{path}: bad edge line {ln!r}")
        try:
            t, i, j = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ValidationError(f"{path}: bad edge line {ln!r}") from exc
        if not (1 <= t <= T):
            raise ValidationError(f"{path}: layer index {t} outside [1, {T}]")
        if t < last_t:
            raise ValidationError(f"{path}: edges must be sorted by layer")
        last_t = t
        per_layer[t - 1].append((i, j))
    layers = tuple(
        np.array(rows, dtype=np.int64) if rows else np.empty((0, 2), dtype=np.int64)
        for rows in per_layer
    )
    graph = MultiLayerGraph(n, T, layers)
    if (sigma_bits is None) != (tau_bits is None):
        raise ValidationError(f"{path}: sigma and tau footers must appear together")
    if sigma_bits is not None:
        sigma = Assignment.from_bitstring(sigma_bits)
        tau = Assignment.from_bitstring(tau_bits)
        return PlantedInstance(graph=graph, sigma=sigma, tau=tau)
    return graph
