"""Monte-Carlo orchestration: phase diagrams, detection sweeps, gap demo.

Every sweep is deterministic given its config: trial seeds derive from
(base_seed, cell index, trial index, purpose tag) through independent seed
substreams, methods within a trial run sequentially on the identical
instance (paired comparisons), and output rows are assembled in cell/trial
order no matter how the worker pool schedules them. Wall time is measured
per method call but only written to disk on request, so default output files
are byte-identical across runs and worker counts.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .detection import DetectionDecision, shuffled_test, split_layer_test
from .errors import SizeGuardError, ValidationError
from .metrics import detection_risk, hamming_loss
from .model import (
    MAX_DENSITY,
    Assignment,
    MlsbmParams,
    MultiLayerGraph,
    PlantedInstance,
    _sample_balanced,
    sample_null,
    sample_planted,
)
from .recovery import (
    RecoveryResult,
    aggregate_sum_spectral,
    bias_adjusted_spectral,
    mle_exhaustive,
    mle_local_search_multistart,
    oracle_tau_spectral,
)
from .seeding import derive_seed, substream

CSV_COLUMNS = (
    "cell",
    "n",
    "T",
    "rho",
    "method",
    "trial",
    "seed",
    "loss",
    "decision",
    "objective",
    "wall_time_ms",
    "degenerate",
)

# Seed purpose tags inside one (cell, trial) unit.
_SEED_INSTANCE = 0
_SEED_SHUFFLE_PLANTED = 1
_SEED_NULL = 2
_SEED_SHUFFLE_NULL = 3


RECOVERY_RUNNERS: dict[str, Callable[[PlantedInstance], RecoveryResult]] = {
    "bias-adjusted-spectral": lambda inst: bias_adjusted_spectral(inst.graph),
    "sum-spectral": lambda inst: aggregate_sum_spectral(inst.graph),
    "oracle-tau-spectral": lambda inst: oracle_tau_spectral(inst.graph, inst.tau),
    "mle-exhaustive": lambda inst: mle_exhaustive(inst.graph),
    "mle-local-search": lambda inst: mle_local_search_multistart(inst.graph),
}

DETECTION_METHODS = ("split-test", "shuffled-test")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: a cell grid, the methods to run, and the trial budget."""

    kind: str
    cells: tuple[tuple[int, int, float], ...]
    methods: tuple[str, ...]
    trials: int
    base_seed: int = 0
    output_path: Optional[str] = None
    # Shuffle rounds for detection sweeps; None uses the heuristic default.
    rounds: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("recovery", "detection"):
            raise ValidationError(f"kind must be 'recovery' or 'detection', got {self.kind!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValidationError(f"trials must be an integer >= 1, got {self.trials!r}")
        if not isinstance(self.base_seed, int) or self.base_seed < 0:
            raise ValidationError(f"base_seed must be a non-negative integer, got {self.base_seed!r}")
        cells = []
        if not self.cells:
            raise ValidationError("config needs at least one (n, T, rho) cell")
        for cell in self.cells:
            try:
                n, T, rho = cell
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"malformed cell {cell!r}") from exc
            n, T, rho = int(n), int(T), float(rho)
            if n < 2 or n % 2 != 0 or T < 2 or T % 2 != 0:
                raise ValidationError(f"cell {cell!r} needs even n >= 2 and even T >= 2")
            if not (0.0 < rho < MAX_DENSITY):
                raise ValidationError(
                    f"cell {cell!r} needs rho in (0, {MAX_DENSITY:.6g}), got {rho}"
                )
            cells.append((n, T, rho))
        object.__setattr__(self, "cells", tuple(cells))
        methods = tuple(self.methods)
        if not methods:
            raise ValidationError("config needs at least one method")
        valid = RECOVERY_RUNNERS.keys() if self.kind == "recovery" else DETECTION_METHODS
        for method in methods:
            if method not in valid:
                raise ValidationError(
                    f"unknown {self.kind} method {method!r}; valid: {sorted(valid)}"
                )
        object.__setattr__(self, "methods", methods)
        if self.rounds is not None and (not isinstance(self.rounds, int) or self.rounds < 1):
            raise ValidationError(f"rounds must be an integer >= 1, got {self.rounds!r}")

    @classmethod
    def from_exponents(
        cls,
        n_values: Sequence[int],
        a: float,
        b: float,
        *,
        kind: str = "recovery",
        methods: Sequence[str] = ("bias-adjusted-spectral",),
        trials: int = 1,
        base_seed: int = 0,
        output_path: Optional[str] = None,
        rounds: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Grid from scaling exponents: T = n^a rounded to even, rho = n^-b."""
        cells = []
        for n in n_values:
            n = int(n)
            T = max(2, int(round(float(n) ** float(a))))
            if T % 2 != 0:
                T += 1
            rho = float(n) ** (-float(b))
            cells.append((n, T, rho))
        return cls(
            kind=kind,
            cells=tuple(cells),
            methods=tuple(methods),
            trials=trials,
            base_seed=base_seed,
            output_path=output_path,
            rounds=rounds,
        )

    def to_json_dict(self) -> dict:
        return {
            "format": "mlsbm-sweep-config v1",
            "kind": self.kind,
            "cells": [list(cell) for cell in self.cells],
            "methods": list(self.methods),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "output_path": self.output_path,
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class TrialRecord:
    """One method execution on one sampled instance, CSV-row shaped."""

    cell: str
    n: int
    T: int
    rho: float
    method: str
    trial: int
    seed: int
    loss: Optional[float]
    decision: Optional[int]
    objective: Optional[int]
    wall_time_ms: Optional[float]
    degenerate: bool

    def __post_init__(self):
        if self.loss is not None and not (0.0 <= self.loss <= 0.5):
            raise ValidationError(f"loss must lie in [0, 1/2], got {self.loss}")
        if self.decision is not None and self.decision not in (0, 1):
            raise ValidationError(f"decision must be 0 or 1, got {self.decision}")


def _cell_id(n: int, T: int, rho: float) -> str:
    return f"n{n}-T{T}-rho{rho!r}"


def resolve_worker_count(n_units: int) -> int:
    """Worker pool size: MLSBM_WORKERS if set, else the CPU count, capped."""
    raw = os.environ.get("MLSBM_WORKERS")
    if raw is not None and raw.strip():
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ValidationError(f"MLSBM_WORKERS must be an integer, got {raw!r}") from exc
        if workers < 1:
            raise ValidationError(f"MLSBM_WORKERS must be >= 1, got {workers}")
    else:
        workers = os.cpu_count() or 1
    return max(1, min(workers, n_units))


def _assert_unique_seeds(records: Sequence[TrialRecord]) -> None:
    by_unit: dict[tuple[str, int], int] = {}
    for record in records:
        key = (record.cell, record.trial)
        if key in by_unit and by_unit[key] != record.seed:
            raise AssertionError(f"unit {key} saw two different seeds")
        by_unit[key] = record.seed
    seeds = list(by_unit.values())
    if len(set(seeds)) != len(seeds):
        raise AssertionError("derived seeds collide across (cell, trial) units")


def _run_units(n_units: int, unit_fn: Callable[[int], list[TrialRecord]]) -> list[TrialRecord]:
    """Run unit_fn(0..n_units-1) on a pool; concatenate in unit order."""
    workers = resolve_worker_count(n_units)
    if workers == 1:
        chunks = [unit_fn(u) for u in range(n_units)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(unit_fn, range(n_units)))
    records = [record for chunk in chunks for record in chunk]
    _assert_unique_seeds(records)
    return records


def run_phase_diagram(config: ExperimentConfig) -> list[TrialRecord]:
    """Run every recovery method on planted instances over the cell grid.

    One instance per (cell, trial); methods share it so comparisons are
    paired. A method hitting its size guard is recorded as degenerate with an
    empty loss instead of aborting the sweep.
    """
    if config.kind != "recovery":
        raise ValidationError(f"run_phase_diagram needs kind='recovery', got {config.kind!r}")
    n_cells = len(config.cells)

    def unit(u: int) -> list[TrialRecord]:
        ci, ti = divmod(u, config.trials)
        n, T, rho = config.cells[ci]
        seed = derive_seed(config.base_seed, ci, ti, _SEED_INSTANCE)
        instance = sample_planted(MlsbmParams(n=n, T=T, rho=rho), seed)
        out = []
        for method in config.methods:
            start = time.perf_counter()
            try:
                result = RECOVERY_RUNNERS[method](instance)
                loss = hamming_loss(result.sigma_hat, instance.sigma).value
                objective = result.objective
                degenerate = result.degenerate
            except SizeGuardError:
                loss, objective, degenerate = None, None, True
            elapsed_ms = (time.perf_counter() - start) * 1e3
            out.append(
                TrialRecord(
                    cell=_cell_id(n, T, rho),
                    n=n,
                    T=T,
                    rho=rho,
                    method=method,
                    trial=ti,
                    seed=seed,
                    loss=loss,
                    decision=None,
                    objective=objective,
                    wall_time_ms=elapsed_ms,
                    degenerate=degenerate,
                )
            )
        return out

    return _run_units(n_cells * config.trials, unit)


def run_detection_sweep(config: ExperimentConfig) -> list[TrialRecord]:
    """Paired planted/null trials through the split test or its shuffled max.

    Each (cell, trial) samples one planted and one null graph from disjoint
    seed substreams; cell ids gain a '|planted' / '|null' suffix so the risk
    can be assembled per cell afterwards.
    """
    if config.kind != "detection":
        raise ValidationError(f"run_detection_sweep needs kind='detection', got {config.kind!r}")
    for n, T, rho in config.cells:
        if T < 4:
            raise ValidationError(f"detection cells need T >= 4 for the layer split, got T={T}")

    def run_method(method, graph, shuffle_seed) -> DetectionDecision:
        if method == "split-test":
            return split_layer_test(graph, bias_adjusted_spectral)
        return shuffled_test(
            graph, bias_adjusted_spectral, rounds=config.rounds, seed=shuffle_seed
        )

    def unit(u: int) -> list[TrialRecord]:
        ci, ti = divmod(u, config.trials)
        n, T, rho = config.cells[ci]
        params = MlsbmParams(n=n, T=T, rho=rho)
        arms = (
            ("planted", _SEED_INSTANCE, _SEED_SHUFFLE_PLANTED),
            ("null", _SEED_NULL, _SEED_SHUFFLE_NULL),
        )
        out = []
        for arm, seed_tag, shuffle_tag in arms:
            seed = derive_seed(config.base_seed, ci, ti, seed_tag)
            if arm == "planted":
                graph = sample_planted(params, seed).graph
            else:
                graph = sample_null(params, seed)
            shuffle_seed = derive_seed(config.base_seed, ci, ti, shuffle_tag)
            for method in config.methods:
                start = time.perf_counter()
                outcome = run_method(method, graph, shuffle_seed)
                elapsed_ms = (time.perf_counter() - start) * 1e3
                out.append(
                    TrialRecord(
                        cell=f"{_cell_id(n, T, rho)}|{arm}",
                        n=n,
                        T=T,
                        rho=rho,
                        method=method,
                        trial=ti,
                        seed=seed,
                        loss=None,
                        decision=outcome.decision,
                        objective=None,
                        wall_time_ms=elapsed_ms,
                        degenerate=False,
                    )
                )
        return out

    return _run_units(len(config.cells) * config.trials, unit)


def detection_risk_by_cell(records: Sequence[TrialRecord]) -> dict[tuple[str, str], float]:
    """Type-I + type-II error per (cell, method) from paired sweep records."""
    grouped: dict[tuple[str, str], tuple[list[int], list[int]]] = {}
    for record in records:
        if record.decision is None or "|" not in record.cell:
            raise ValidationError(f"record for cell {record.cell!r} is not a detection record")
        base, arm = record.cell.rsplit("|", 1)
        truths, decisions = grouped.setdefault((base, record.method), ([], []))
        truths.append(1 if arm == "planted" else 0)
        decisions.append(record.decision)
    return {
        key: detection_risk(truths, decisions) for key, (truths, decisions) in grouped.items()
    }


def _empty_layers(n: int, T: int) -> MultiLayerGraph:
    empty = np.empty((0, 2), dtype=np.int64)
    return MultiLayerGraph(n=n, T=T, layers=tuple(empty.copy() for _ in range(T)))


def run_gap_demo(n: int, T: int, rho: float, trials: int, base_seed: int = 0) -> dict:
    """Paired oracle-tau vs type-blind spectral losses on identical instances.

    Interesting parameters sit between the thresholds (n*T*rho large,
    n*sqrt(T)*rho small); anything else triggers a warning but still runs,
    so the easy control cell can reuse this code path. rho = 0 is allowed
    and yields empty graphs: both methods flag degenerate and the gap is
    reported undefined.
    """
    n, T = int(n), int(T)
    if n < 4 or n % 2 != 0 or T < 2 or T % 2 != 0:
        raise ValidationError(f"run_gap_demo needs even n >= 4 and even T >= 2, got {n}, {T}")
    rho = float(rho)
    if not (0.0 <= rho < MAX_DENSITY):
        raise ValidationError(f"rho must lie in [0, {MAX_DENSITY:.6g}), got {rho}")
    if not isinstance(trials, int) or trials < 1:
        raise ValidationError(f"trials must be an integer >= 1, got {trials!r}")
    info_scale = n * T * rho
    comp_scale = n * math.sqrt(T) * rho
    between = info_scale >= 10.0 and comp_scale <= 3.0
    if not between:
        warnings.warn(
            "gap demo parameters are not between the thresholds: "
            f"n*T*rho = {info_scale:.4g} (want >> 1), "
            f"n*sqrt(T)*rho = {comp_scale:.4g} (want <~ 1)",
            RuntimeWarning,
            stacklevel=2,
        )

    def unit(ti: int) -> list[TrialRecord]:
        seed = derive_seed(base_seed, 0, ti, _SEED_INSTANCE)
        if rho == 0.0:
            sigma = _sample_balanced(n, substream(seed, 0))
            tau = _sample_balanced(T, substream(seed, 1))
            instance = PlantedInstance(graph=_empty_layers(n, T), sigma=sigma, tau=tau)
        else:
            instance = sample_planted(MlsbmParams(n=n, T=T, rho=rho), seed)
        out = []
        for method in ("oracle-tau-spectral", "bias-adjusted-spectral"):
            start = time.perf_counter()
            result = RECOVERY_RUNNERS[method](instance)
            loss = hamming_loss(result.sigma_hat, instance.sigma).value
            elapsed_ms = (time.perf_counter() - start) * 1e3
            out.append(
                TrialRecord(
                    cell=f"gap-{_cell_id(n, T, rho)}",
                    n=n,
                    T=T,
                    rho=rho,
                    method=method,
                    trial=ti,
                    seed=seed,
                    loss=loss,
                    decision=None,
                    objective=result.objective,
                    wall_time_ms=elapsed_ms,
                    degenerate=result.degenerate,
                )
            )
        return out

    records = _run_units(trials, unit)
    oracle = [r for r in records if r.method == "oracle-tau-spectral"]
    spectral = [r for r in records if r.method == "bias-adjusted-spectral"]
    paired = [
        (o.loss, s.loss)
        for o, s in zip(oracle, spectral)
        if not o.degenerate and not s.degenerate
    ]
    degenerate_trials = trials - len(paired)
    summary: dict = {
        "n": n,
        "T": T,
        "rho": rho,
        "trials": trials,
        "between_thresholds": between,
        "degenerate_trials": degenerate_trials,
        "oracle_losses": [r.loss for r in oracle],
        "spectral_losses": [r.loss for r in spectral],
        "gap_defined": bool(paired),
        "records": records,
    }
    if paired:
        summary["median_oracle_loss"] = statistics.median(o for o, _ in paired)
        summary["median_spectral_loss"] = statistics.median(s for _, s in paired)
        summary["median_gap"] = statistics.median(s - o for o, s in paired)
    else:
        summary["median_oracle_loss"] = None
        summary["median_spectral_loss"] = None
        summary["median_gap"] = None
        summary["note"] = "gap undefined: every trial was degenerate"
    return summary


# ---------------------------------------------------------------------------
# results round-tripping
# ---------------------------------------------------------------------------


def _format_value(value, *, as_float: bool = False) -> str:
    if value is None:
        return ""
    if as_float:
        return repr(float(value))
    return str(value)


def write_results(
    records: Sequence[TrialRecord],
    path: Union[str, Path],
    config: Optional[ExperimentConfig] = None,
    *,
    overwrite: bool = False,
    include_timing: bool = False,
) -> None:
    """Write records as CSV (fixed schema) plus an optional config sidecar.

    Timing is omitted unless include_timing is set, keeping default output
    byte-identical across runs. Existing files are refused without
    overwrite=True.
    """
    path = Path(path)
    sidecar = Path(str(path) + ".config.json")
    for target in (path,) + ((sidecar,) if config is not None else ()):
        if target.exists() and not overwrite:
            raise FileExistsError(f"{target}: refusing to overwrite without the explicit flag")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for record in records:
                timing = record.wall_time_ms if include_timing else None
                writer.writerow(
                    [
                        record.cell,
                        record.n,
                        record.T,
                        repr(record.rho),
                        record.method,
                        record.trial,
                        record.seed,
                        _format_value(record.loss, as_float=True),
                        _format_value(record.decision),
                        _format_value(record.objective),
                        "" if timing is None else f"{timing:.3f}",
                        "1" if record.degenerate else "0",
                    ]
                )
        if config is not None:
            with open(sidecar, "w", encoding="utf-8") as fh:
                json.dump(config.to_json_dict(), fh, indent=2, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc


def read_results(path: Union[str, Path]) -> list[TrialRecord]:
    """Parse a results CSV back into records (inverse of write_results)."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValidationError(f"{path}: empty results file (missing header)") from None
            if tuple(header) != CSV_COLUMNS:
                raise ValidationError(f"{path}: unexpected header {header!r}")
            records = []
            for row in reader:
                if len(row) != len(CSV_COLUMNS):
                    raise ValidationError(f"{path}: malformed row {row!r}")
                (cell, n, T, rho, method, trial, seed, loss, decision,
                 objective, wall_ms, degenerate) = row
                if degenerate not in ("0", "1"):
                    raise ValidationError(f"{path}: bad degenerate flag {degenerate!r}")
                records.append(
                    TrialRecord(
                        cell=cell,
                        n=int(n),
                        T=int(T),
                        rho=float(rho),
                        method=method,
                        trial=int(trial),
                        seed=int(seed),
                        loss=float(loss) if loss else None,
                        decision=int(decision) if decision else None,
                        objective=int(objective) if objective else None,
                        wall_time_ms=float(wall_ms) if wall_ms else None,
                        degenerate=degenerate == "1",
                    )
                )
            return records
    except OSError as exc:
        raise OSError(f"failed reading results from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# config files: flat key = value text with comma arrays
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "kind", "cells", "methods", "trials", "base_seed",
    "output_path", "rounds", "n_values", "a", "b",
}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the flat key = value sweep-config format.

    Keys: kind, trials, base_seed, methods (comma list), rounds, output_path,
    and either cells (comma list of n:T:rho triples) or the exponent grid
    n_values (comma list) + a + b. Lines starting with # are comments.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValidationError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()

    def parse_int(key: str, default=None) -> Optional[int]:
        if key not in values:
            return default
        try:
            return int(values[key])
        except ValueError as exc:
            raise ValidationError(f"config key {key}: expected integer, got {values[key]!r}") from exc

    kind = values.get("kind", "recovery")
    trials = parse_int("trials", 1)
    base_seed = parse_int("base_seed", 0)
    rounds = parse_int("rounds", None)
    output_path = values.get("output_path") or None
    if "methods" in values:
        methods = tuple(m.strip() for m in values["methods"].split(",") if m.strip())
    else:
        methods = ("shuffled-test",) if kind == "detection" else ("bias-adjusted-spectral",)

    has_cells = "cells" in values
    has_grid = any(k in values for k in ("n_values", "a", "b"))
    if has_cells and has_grid:
        raise ValidationError("config must use either 'cells' or the exponent grid, not both")
    if has_cells:
        cells = []
        for chunk in values["cells"].split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split(":")
            if len(parts) != 3:
                raise ValidationError(f"config cell {chunk!r}: expected n:T:rho")
            try:
                cells.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ValidationError(f"config cell {chunk!r}: bad number") from exc
        return ExperimentConfig(
            kind=kind, cells=tuple(cells), methods=methods, trials=trials,
            base_seed=base_seed, output_path=output_path, rounds=rounds,
        )
    if not all(k in values for k in ("n_values", "a", "b")):
        raise ValidationError("config needs 'cells' or all of 'n_values', 'a', 'b'")
    try:
        n_values = [int(v) for v in values["n_values"].split(",") if v.strip()]
        a = float(values["a"])
        b = float(values["b"])
    except ValueError as exc:
        raise ValidationError("config exponent grid: bad number") from exc
    return ExperimentConfig.from_exponents(
        n_values, a, b, kind=kind, methods=methods, trials=trials,
        base_seed=base_seed, output_path=output_path, rounds=rounds,
    )


def read_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"failed reading config from {path}: {exc}") from exc
    return parse_config_text(text)
