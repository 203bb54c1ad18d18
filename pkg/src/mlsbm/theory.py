"""Exact theory quantities and their brute-force verification oracles.

Three families live here, each with at least two independent computation
routes so tests can cross-check them:

- the chi-square divergence between the planted mixture (conditional on the
  layer types) and the null model: a single closed-form sum over community
  overlaps, against full enumeration of every adjacency tensor;
- the squared norm of the low-degree projection of the likelihood ratio: a
  combinatorial triple sum over parity classes, against subset-by-subset
  signed expectations, against an explicit likelihood projection;
- counting/bounding machinery for parity classes of slot subsets, plus two
  small combinatorial identities (a signed convolution identity and a
  hypergeometric tail bound) used by the analysis.

All heavy weights are computed in log-space with log-sum-exp accumulation;
the only signed quantity (the per-subset expectation) handles its sign
separately from its magnitude.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import BoundInapplicableError, SizeGuardError, ValidationError
from .model import Assignment, enumerate_assignments

MAX_DENSITY = 2.0 / 3.0

# Hard enumeration caps (errors, never silent truncation).
TENSOR_GUARD_SLOTS = 24
SUBSET_GUARD = 10**7

Slot = tuple[int, int, int]


def _check_even(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 2 or value % 2 != 0:
        raise ValidationError(f"{name} must be an even integer >= 2, got {value}")
    return value


def _check_rho(rho) -> float:
    rho = float(rho)
    if not (0.0 < rho < MAX_DENSITY):
        raise ValidationError(f"rho must lie strictly inside (0, {MAX_DENSITY:.6g}), got {rho}")
    return rho


def _log_comb(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.log(math.comb(n, k))


def _logsumexp(values) -> float:
    values = [v for v in values if v != -math.inf]
    if not values:
        return -math.inf
    top = max(values)
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def kappa(rho: float) -> float:
    """Per-slot signal amplitude of a standardized edge variable."""
    rho = _check_rho(rho)
    return (rho / 2.0) / math.sqrt(rho * (1.0 - rho))


# ---------------------------------------------------------------------------
# chi-square divergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChiSquareReport:
    """Chi-square divergence with its per-overlap log decomposition."""

    value: float
    per_c_terms: tuple[tuple[int, float], ...]
    closed_form_used: bool

    def __post_init__(self):
        if self.value < 0:
            raise ValidationError(f"chi-square value must be >= 0, got {self.value}")


def _chi_square_bases(rho: float) -> tuple[float, float]:
    """Per-slot factors of the squared-likelihood sum.

    A slot whose parity agrees under the two community labellings contributes
    (1 - 3*rho/4)/(1 - rho); a slot whose parity differs contributes
    (1 - 5*rho/4)/(1 - rho). Both are positive for rho < 2/3.
    """
    same = (1.0 - 0.75 * rho) / (1.0 - rho)
    mixed = (1.0 - 1.25 * rho) / (1.0 - rho)
    return same, mixed


def chi_square_closed_form(n: int, T: int, rho: float) -> ChiSquareReport:
    """Exact chi-square divergence via the overlap sum; layer-type free.

    Averaging the squared likelihood over two independent balanced labellings
    reduces to a sum over the overlap c of their 1-classes: pairs of nodes in
    the same agreement class contribute the `same` base, pairs across classes
    the `mixed` base, with multiplicities C(n-2c,2)+C(2c,2) and 2c(n-2c) per
    layer. The result does not depend on the layer types at all.
    """
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    log_same, log_mixed = (math.log(b) for b in _chi_square_bases(rho))
    log_total = _log_comb(n, n // 2)
    terms = []
    for c in range(n // 2 + 1):
        agree = 2 * c  # nodes on which the two labellings agree as 1s do not matter;
        # what matters is the disagreement count d = n - 2c splitting pairs
        d = n - agree
        same_pairs = math.comb(d, 2) + math.comb(n - d, 2)
        mixed_pairs = d * (n - d)
        log_term = (
            2.0 * _log_comb(n // 2, c)
            + T * same_pairs * log_same
            + T * mixed_pairs * log_mixed
            - log_total
        )
        terms.append((c, log_term))
    value = math.expm1(_logsumexp(t for _, t in terms))
    return ChiSquareReport(value=max(value, 0.0), per_c_terms=tuple(terms), closed_form_used=True)


def chi_square_relaxed_bound(n: int, T: int, rho: float) -> float:
    """Diagnostic variant replacing the exact split exponents by the symmetric
    single-exponent form (geometric mean of the bases times an overlap
    penalty). The replacement enlarges the exponent only where
    (c - n/4)**2 <= n/8, so this dominates the exact value in the
    vanishing-density regime (extreme overlaps negligible) but can dip
    below it at moderate density. Exposed for comparison only; the closed
    form above is exact."""
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    log_same, log_mixed = (math.log(b) for b in _chi_square_bases(rho))
    log_total = _log_comb(n, n // 2)
    pair_count = math.comb(n, 2) * T
    terms = []
    for c in range(n // 2 + 1):
        log_term = (
            2.0 * _log_comb(n // 2, c)
            + 0.5 * pair_count * (log_same + log_mixed)
            + 2.0 * T * (c - n / 4.0) ** 2 * (log_same - log_mixed)
            - log_total
        )
        terms.append(log_term)
    return math.expm1(_logsumexp(terms))


def _tau_bits(tau, T: int) -> tuple[int, ...]:
    if isinstance(tau, Assignment):
        bits = tau.labels
    else:
        try:
            bits = tuple(int(b) for b in tau)
        except (TypeError, ValueError) as exc:
            raise ValidationError("tau must be an Assignment or a bit sequence") from exc
    if any(b not in (0, 1) for b in bits):
        raise ValidationError("tau entries must all be 0 or 1")
    if len(bits) != T:
        raise ValidationError(f"tau has {len(bits)} entries but T={T}")
    return bits


@functools.lru_cache(maxsize=64)
def _slot_list(n: int, T: int) -> tuple[Slot, ...]:
    """Fixed slot order: layer-major, node pairs lexicographic inside a layer."""
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    return tuple((i, j, t) for t in range(1, T + 1) for (i, j) in pairs)


def chi_square_bruteforce(n: int, T: int, rho: float, tau) -> float:
    """Chi-square divergence by enumerating every adjacency tensor.

    tau may be any bit sequence of length T (the divergence is conditional on
    the layer types); only the node labelling is averaged. Guarded at
    binom(n,2)*T <= 24 slots.
    """
    n = _check_even(n, "n")
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ValidationError(f"T must be an integer >= 1, got {T!r}")
    T = int(T)
    rho = _check_rho(rho)
    tau = _tau_bits(tau, T)
    slots = _slot_list(n, T)
    n_slots = len(slots)
    if n_slots > TENSOR_GUARD_SLOTS:
        raise SizeGuardError(
            f"chi_square_bruteforce is capped at {TENSOR_GUARD_SLOTS} slots, got {n_slots}"
        )
    sigmas = enumerate_assignments(n)
    probs = np.empty((len(sigmas), n_slots), dtype=np.float64)
    for row, sigma in enumerate(sigmas):
        lab = sigma.labels
        for col, (i, j, t) in enumerate(slots):
            parity = (lab[i - 1] + lab[j - 1] + tau[t - 1]) % 2
            probs[row, col] = 1.5 * rho if parity == 0 else 0.5 * rho
    log_p = np.log(probs)
    log_q = np.log1p(-probs)
    log_rho = math.log(rho)
    log_1m_rho = math.log1p(-rho)
    log_count = math.log(len(sigmas))

    total_parts = []
    chunk = 1 << 15
    exponents = np.arange(n_slots, dtype=np.uint32)
    for start in range(0, 1 << n_slots, chunk):
        stop = min(start + chunk, 1 << n_slots)
        codes = np.arange(start, stop, dtype=np.uint32)
        bits = ((codes[:, None] >> exponents[None, :]) & 1).astype(np.float64)
        log_like = bits @ log_p.T + (1.0 - bits) @ log_q.T
        top = log_like.max(axis=1)
        log_p1 = top + np.log(np.exp(log_like - top[:, None]).sum(axis=1)) - log_count
        edges = bits.sum(axis=1)
        log_p0 = edges * log_rho + (n_slots - edges) * log_1m_rho
        # (P1 - P0)^2 / P0 = P0 * expm1(log P1 - log P0)^2: every term is
        # non-negative, so no cancellation enters the sum
        total_parts.append(float(np.sum(np.exp(log_p0) * np.expm1(log_p1 - log_p0) ** 2)))
    return math.fsum(total_parts)


# ---------------------------------------------------------------------------
# signed subset expectations and the low-degree norm
# ---------------------------------------------------------------------------


def _validate_alpha(alpha: Iterable, n: int, T: int) -> tuple[Slot, ...]:
    out: list[Slot] = []
    for slot in alpha:
        try:
            i, j, t = (int(x) for x in slot)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed slot {slot!r}") from exc
        if not (1 <= i < j <= n):
            raise ValidationError(f"slot {slot!r} violates 1 <= i < j <= {n}")
        if not (1 <= t <= T):
            raise ValidationError(f"slot {slot!r} has layer outside [1, {T}]")
        out.append((i, j, t))
    if len(set(out)) != len(out):
        raise ValidationError("alpha contains duplicate slots")
    return tuple(out)


def _parity_sets(alpha: Sequence[Slot]) -> tuple[int, int]:
    """Sizes of the odd-appearance node set and odd-appearance layer set."""
    node_mask = 0
    layer_mask = 0
    for i, j, t in alpha:
        node_mask ^= (1 << (i - 1)) | (1 << (j - 1))
        layer_mask ^= 1 << (t - 1)
    return node_mask.bit_count(), layer_mask.bit_count()


def chi_alpha_expectation(alpha, n: int, T: int, rho: float) -> float:
    """Planted-model expectation of the standardized edge product over alpha.

    Zero whenever the odd-appearance layer set has odd size; otherwise
    kappa^{|alpha|} times a signed ratio of binomials determined by the
    odd-appearance set sizes. The odd-appearance node set is always even
    because each slot contributes two node appearances.
    """
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    alpha = _validate_alpha(alpha, n, T)
    u_size, v_size = _parity_sets(alpha)
    assert u_size % 2 == 0, "node parity set size must be even"
    if v_size % 2 == 1:
        return 0.0
    r, k = u_size // 2, v_size // 2
    magnitude = (
        kappa(rho) ** len(alpha)
        * math.comb(n // 2, r)
        * math.comb(T // 2, k)
        / (math.comb(n, u_size) * math.comb(T, v_size))
    )
    return float((-1) ** (r + k) * magnitude)


def chi_alpha_expectation_bruteforce(alpha, n: int, T: int, rho: float) -> float:
    """Same expectation by direct averaging over every balanced (sigma, tau).

    Computes the raw parity sum per slot (no parity-set shortcut), so this is
    an independent route for cross-checking the closed form.
    """
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    alpha = _validate_alpha(alpha, n, T)
    sign_total = 0
    count = 0
    for sigma in enumerate_assignments(n):
        for tau in enumerate_assignments(T):
            parity = sum(
                sigma.labels[i - 1] + sigma.labels[j - 1] + tau.labels[t - 1]
                for (i, j, t) in alpha
            )
            sign_total += -1 if parity % 2 else 1
            count += 1
    return kappa(rho) ** len(alpha) * sign_total / count


def _colex_combinations(total: int, size: int):
    """Yield size-subsets of range(total) in colexicographic order."""
    if size == 0:
        yield ()
        return
    if size > total:
        return
    combo = list(range(size))
    while True:
        yield tuple(combo)
        idx = 0
        while True:
            limit = combo[idx + 1] if idx + 1 < size else total
            if combo[idx] + 1 < limit:
                break
            idx += 1
            if idx == size:
                return
        combo[idx] += 1
        for lower in range(idx):
            combo[lower] = lower


def _check_subset_guard(n: int, T: int, a: int) -> int:
    n_slots = math.comb(n, 2) * T
    total = math.comb(n_slots, a)
    if total > SUBSET_GUARD:
        raise SizeGuardError(
            f"subset enumeration needs binom({n_slots}, {a}) = {total} > {SUBSET_GUARD}"
        )
    return n_slots


@functools.lru_cache(maxsize=256)
def _lambda_table(n: int, T: int, a: int) -> tuple[tuple[tuple[tuple[int, int], int], ...], int, int]:
    """Exact parity-class sizes for slot subsets of size a.

    Returns (((r, k), count), ...), the odd-layer-parity subset count, and the
    total subset count. One colex sweep classifies every subset by the sizes
    of its odd-appearance node and layer sets.
    """
    n_slots = _check_subset_guard(n, T, a)
    slots = _slot_list(n, T)
    node_masks = [((1 << (i - 1)) | (1 << (j - 1))) for (i, j, t) in slots]
    layer_masks = [1 << (t - 1) for (i, j, t) in slots]
    counts: dict[tuple[int, int], int] = {}
    odd_v = 0
    for combo in _colex_combinations(n_slots, a):
        nm = 0
        lm = 0
        for s in combo:
            nm ^= node_masks[s]
            lm ^= layer_masks[s]
        u = nm.bit_count()
        v = lm.bit_count()
        assert u % 2 == 0, "node parity set size must be even"
        if v % 2 == 1:
            odd_v += 1
        else:
            key = (u // 2, v // 2)
            counts[key] = counts.get(key, 0) + 1
    frozen = tuple(sorted(counts.items()))
    return frozen, odd_v, math.comb(n_slots, a)


@dataclass(frozen=True)
class LambdaCount:
    """One parity-class cardinality next to its combinatorial upper bound."""

    n: int
    T: int
    a: int
    r: int
    k: int
    exact: int
    upper_bound: float


def lambda_count_enumerate(n: int, T: int, a: int, r: int, k: int) -> LambdaCount:
    """Exact size of the (a, r, k) parity class by subset enumeration."""
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    for name, v in (("a", a), ("r", r), ("k", k)):
        if not isinstance(v, (int, np.integer)) or v < 0:
            raise ValidationError(f"{name} must be a non-negative integer, got {v!r}")
    if a < 1:
        raise ValidationError(f"a must be >= 1, got {a}")
    table, _, _ = _lambda_table(n, T, int(a))
    exact = dict(table).get((int(r), int(k)), 0)
    return LambdaCount(
        n=n, T=T, a=int(a), r=int(r), k=int(k),
        exact=exact,
        upper_bound=lambda_count_bound(n, T, int(a), int(r), int(k)),
    )


def lambda_count_partition(n: int, T: int, a: int) -> dict:
    """Full classification for one subset size: class sizes plus the excluded
    odd-layer-parity count and the grand total (partition identity check)."""
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    table, odd_v, total = _lambda_table(n, T, int(a))
    return {"counts": dict(table), "odd_layer_parity": odd_v, "total_subsets": total}


def lambda_count_bound(
    n: int, T: int, a: int, r: int, k: int, strengthened: bool = False
) -> float:
    """Combinatorial upper bound 2^{1+5a/2} a^{4a/3} C(n,2r) C(T,2k) n^{a-r} T^{a/2-k}.

    The strengthened variant replaces a^{4a/3} by a^a (valid when the layer
    count dominates the squared degree). Evaluated in log-space; returns inf
    on overflow. The bound is asymptotic in (n, T); at tiny sizes it can in
    principle be crossed, which callers log rather than fail.
    """
    if a < 1:
        raise ValidationError(f"a must be >= 1, got {a}")
    if r < 0 or k < 0:
        raise ValidationError("r and k must be >= 0")
    if 2 * r > n or 2 * k > T:
        return 0.0
    power_term = float(a) * math.log(a) if strengthened else (4.0 * a / 3.0) * math.log(a)
    log_bound = (
        (1.0 + 2.5 * a) * math.log(2.0)
        + power_term
        + _log_comb(n, 2 * r)
        + _log_comb(T, 2 * k)
        + (a - r) * math.log(n)
        + (a / 2.0 - k) * math.log(T)
    )
    try:
        return math.exp(log_bound)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class LdlrReport:
    """Squared norm of the low-degree likelihood-ratio projection minus one."""

    degree: int
    value: float
    per_a_terms: tuple[tuple[int, float], ...]
    kappa: float

    def __post_init__(self):
        if self.value < -1e-15:
            raise ValidationError(f"norm must be >= 0, got {self.value}")


def ldlr_norm_exact(n: int, T: int, rho: float, D: int) -> LdlrReport:
    """Norm via the parity-class triple sum with exact class sizes.

    Term a equals kappa^{2a} times the sum over classes (r, k) of
    count * [C(n/2,r) C(T/2,k) / (C(n,2r) C(T,2k))]^2; the squared
    denominators come from squaring the per-subset signed expectation.
    """
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    if not isinstance(D, (int, np.integer)) or D < 1:
        raise ValidationError(f"D must be an integer >= 1, got {D!r}")
    kap = kappa(rho)
    terms = []
    for a in range(1, int(D) + 1):
        table, _, _ = _lambda_table(n, T, a)
        term = 0.0
        for (r, k), count in table:
            ratio = (
                math.comb(n // 2, r)
                * math.comb(T // 2, k)
                / (math.comb(n, 2 * r) * math.comb(T, 2 * k))
            )
            term += count * ratio * ratio
        terms.append((a, kap ** (2 * a) * term))
    return LdlrReport(
        degree=int(D),
        value=math.fsum(t for _, t in terms),
        per_a_terms=tuple(terms),
        kappa=kap,
    )


def ldlr_norm_bruteforce(n: int, T: int, rho: float, D: int) -> float:
    """Norm by summing squared brute-force expectations over every subset.

    Every slot subset of size 1..D gets its expectation from the exhaustive
    (sigma, tau) average (never the closed form), making this a fully
    independent route.
    """
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    if D < 1:
        raise ValidationError(f"D must be an integer >= 1, got {D!r}")
    slots = _slot_list(n, T)
    n_slots = len(slots)
    for a in range(1, D + 1):
        _check_subset_guard(n, T, a)
    sigmas = enumerate_assignments(n)
    taus = enumerate_assignments(T)
    # sign of each slot under each (sigma, tau): +1 on even parity
    signs = np.empty((len(sigmas) * len(taus), n_slots), dtype=np.int8)
    row = 0
    for sigma in sigmas:
        for tau in taus:
            for col, (i, j, t) in enumerate(slots):
                parity = (sigma.labels[i - 1] + sigma.labels[j - 1] + tau.labels[t - 1]) % 2
                signs[row, col] = -1 if parity else 1
            row += 1
    kap = kappa(rho)
    total = 0.0
    for a in range(1, D + 1):
        scale = kap ** (2 * a)
        for combo in _colex_combinations(n_slots, a):
            mean_sign = float(signs[:, combo].prod(axis=1, dtype=np.int64).mean())
            total += scale * mean_sign * mean_sign
    return total


def ldlr_projection_oracle(n: int, T: int, rho: float, D: int) -> float:
    """Norm by explicit likelihood projection over every adjacency tensor.

    Builds the likelihood ratio L = P1/P0 pointwise on all 2^slots tensors,
    computes each basis coefficient as the P0-expectation of L times the
    standardized edge product, and sums the squares. Validates that the
    standardized products really behave as an orthonormal basis.
    """
    n = _check_even(n, "n")
    T = _check_even(T, "T")
    rho = _check_rho(rho)
    if D < 1:
        raise ValidationError(f"D must be an integer >= 1, got {D!r}")
    slots = _slot_list(n, T)
    n_slots = len(slots)
    if n_slots > TENSOR_GUARD_SLOTS:
        raise SizeGuardError(
            f"ldlr_projection_oracle is capped at {TENSOR_GUARD_SLOTS} slots, got {n_slots}"
        )
    for a in range(1, D + 1):
        _check_subset_guard(n, T, a)
    sigmas = enumerate_assignments(n)
    taus = enumerate_assignments(T)
    probs = np.empty((len(sigmas) * len(taus), n_slots), dtype=np.float64)
    row = 0
    for sigma in sigmas:
        for tau in taus:
            for col, (i, j, t) in enumerate(slots):
                parity = (sigma.labels[i - 1] + sigma.labels[j - 1] + tau.labels[t - 1]) % 2
                probs[row, col] = 1.5 * rho if parity == 0 else 0.5 * rho
            row += 1
    log_p = np.log(probs)
    log_q = np.log1p(-probs)
    codes = np.arange(1 << n_slots, dtype=np.uint32)
    bits = ((codes[:, None] >> np.arange(n_slots, dtype=np.uint32)[None, :]) & 1).astype(
        np.float64
    )
    log_like = bits @ log_p.T + (1.0 - bits) @ log_q.T
    top = log_like.max(axis=1)
    p1 = np.exp(top) * np.exp(log_like - top[:, None]).sum(axis=1) / len(probs)
    edges = bits.sum(axis=1)
    p0 = np.exp(edges * math.log(rho) + (n_slots - edges) * math.log1p(-rho))
    likelihood_ratio = p1 / p0
    std = (bits - rho) / math.sqrt(rho * (1.0 - rho))
    total = 0.0
    for a in range(1, D + 1):
        for combo in _colex_combinations(n_slots, a):
            basis_vec = std[:, combo].prod(axis=1)
            coeff = float(np.sum(p0 * likelihood_ratio * basis_vec))
            total += coeff * coeff
    return total


def ldlr_upper_bound(n: int, T: int, rho: float, D: int, strengthened: bool = False) -> float:
    """Bound 8*xi/(1-xi) with xi = 2 D^{4/3} rho n sqrt(T).

    The strengthened variant uses xi = 2 D rho n sqrt(T), valid when the
    layer count dominates the squared degree. Requires xi < 1; otherwise the
    geometric-sum step behind the bound fails and the bound is inapplicable.
    rho = 0 is allowed here (the bound degenerates to 0).
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ValidationError(f"T must be a positive integer, got {T!r}")
    if not isinstance(D, (int, np.integer)) or D < 1:
        raise ValidationError(f"D must be an integer >= 1, got {D!r}")
    rho = float(rho)
    if rho < 0 or not math.isfinite(rho):
        raise ValidationError(f"rho must be a finite non-negative real, got {rho}")
    power = float(D) if strengthened else float(D) ** (4.0 / 3.0)
    xi = 2.0 * power * rho * n * math.sqrt(T)
    if xi >= 1.0:
        raise BoundInapplicableError(
            f"bound inapplicable: xi = {xi:.6g} >= 1 (needs xi < 1)", xi=xi
        )
    return 8.0 * xi / (1.0 - xi)


# ---------------------------------------------------------------------------
# small combinatorial lemmas
# ---------------------------------------------------------------------------


def signed_vandermonde(m: int, k: int) -> int:
    """Direct evaluation of sum_i (-1)^i C(m,i) C(m,k-i), exact integers."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValidationError(f"m must be a positive integer, got {m!r}")
    if not isinstance(k, (int, np.integer)) or not (0 <= k <= m):
        raise ValidationError(f"k must satisfy 0 <= k <= m, got {k!r}")
    return sum((-1) ** i * math.comb(m, i) * math.comb(m, k - i) for i in range(k + 1))


def signed_vandermonde_closed_form(m: int, k: int) -> int:
    """Closed form: 0 for odd k, (-1)^{k/2} C(m, k/2) for even k."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValidationError(f"m must be a positive integer, got {m!r}")
    if not isinstance(k, (int, np.integer)) or not (0 <= k <= m):
        raise ValidationError(f"k must satisfy 0 <= k <= m, got {k!r}")
    if k % 2 == 1:
        return 0
    return (-1) ** (k // 2) * math.comb(m, k // 2)


def hypergeometric_cdf(N: int, K: int, m: int, x_max: int) -> Fraction:
    """Exact P(X <= x_max) for X ~ Hypergeometric(N, K, m), as a Fraction."""
    for name, v in (("N", N), ("K", K), ("m", m)):
        if not isinstance(v, (int, np.integer)) or v < 0:
            raise ValidationError(f"{name} must be a non-negative integer, got {v!r}")
    if K > N or m > N:
        raise ValidationError("need K <= N and m <= N")
    lo = max(0, m - (N - K))
    hi = min(m, K)
    if x_max < lo:
        return Fraction(0)
    numerator = sum(
        math.comb(K, x) * math.comb(N - K, m - x) for x in range(lo, min(int(x_max), hi) + 1)
    )
    return Fraction(numerator, math.comb(N, m))


def hypergeometric_tail_check(N: int, K: int, m: int, t: float) -> tuple[float, float]:
    """Exact lower-tail probability P(X <= (K/N - t) m) next to exp(-2 t^2 m)."""
    t = float(t)
    if not (0.0 < t < m * K / N):
        raise ValidationError(f"t must satisfy 0 < t < m*K/N = {m * K / N:.6g}, got {t}")
    threshold = (K / N - t) * m
    # tiny slack so thresholds that are mathematically integers are included
    # despite binary rounding (e.g. (0.5 - 0.2) * 10)
    x_max = math.floor(threshold + 1e-9)
    exact = float(hypergeometric_cdf(N, K, m, x_max))
    bound = math.exp(-2.0 * t * t * m)
    return exact, bound
