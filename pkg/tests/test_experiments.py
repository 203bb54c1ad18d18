"""Sweep orchestration: configs, determinism, CSV round-trips, risk assembly."""

import dataclasses
import json
import statistics
import warnings

import pytest

from mlsbm.errors import ValidationError
from mlsbm.experiments import (
    CSV_COLUMNS,
    DETECTION_METHODS,
    RECOVERY_RUNNERS,
    ExperimentConfig,
    TrialRecord,
    detection_risk_by_cell,
    parse_config_text,
    read_config,
    read_results,
    resolve_worker_count,
    run_detection_sweep,
    run_gap_demo,
    run_phase_diagram,
    write_results,
)


def small_recovery_config(**overrides):
    base = dict(
        kind="recovery",
        cells=((8, 4, 0.3), (10, 4, 0.2)),
        methods=("bias-adjusted-spectral", "sum-spectral"),
        trials=3,
        base_seed=11,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------


def test_config_rejects_bad_kind():
    with pytest.raises(ValidationError):
        small_recovery_config(kind="benchmark")


def test_config_rejects_odd_cells():
    with pytest.raises(ValidationError):
        small_recovery_config(cells=((7, 4, 0.3),))
    with pytest.raises(ValidationError):
        small_recovery_config(cells=((8, 5, 0.3),))


def test_config_rejects_density_out_of_range():
    with pytest.raises(ValidationError):
        small_recovery_config(cells=((8, 4, 0.0),))
    with pytest.raises(ValidationError):
        small_recovery_config(cells=((8, 4, 2.0 / 3.0),))


def test_config_rejects_empty_and_malformed():
    with pytest.raises(ValidationError):
        small_recovery_config(cells=())
    with pytest.raises(ValidationError):
        small_recovery_config(cells=((8, 4),))
    with pytest.raises(ValidationError):
        small_recovery_config(methods=())
    with pytest.raises(ValidationError):
        small_recovery_config(trials=0)
    with pytest.raises(ValidationError):
        small_recovery_config(base_seed=-1)
    with pytest.raises(ValidationError):
        small_recovery_config(rounds=0)


def test_config_method_names_gated_by_kind():
    # recovery methods are rejected on detection configs and vice versa
    with pytest.raises(ValidationError):
        small_recovery_config(methods=("split-test",))
    with pytest.raises(ValidationError):
        small_recovery_config(kind="detection", methods=("mle-exhaustive",))
    cfg = small_recovery_config(kind="detection", methods=DETECTION_METHODS)
    assert cfg.methods == DETECTION_METHODS
    assert set(RECOVERY_RUNNERS) >= {"bias-adjusted-spectral", "mle-exhaustive"}


def test_from_exponents_rounds_layer_count_to_even():
    cfg = ExperimentConfig.from_exponents([6], a=1.5, b=1.2, trials=2)
    ((n, T, rho),) = cfg.cells
    assert (n, T) == (6, 16)  # 6**1.5 = 14.697 -> 15 -> bumped even
    assert rho == pytest.approx(6.0**-1.2)
    cfg = ExperimentConfig.from_exponents([2], a=0.5, b=1.0)
    assert cfg.cells == ((2, 2, 0.5),)  # floor at T = 2


def test_trial_record_validates_ranges():
    good = dict(
        cell="c", n=8, T=4, rho=0.1, method="sum-spectral", trial=0, seed=1,
        loss=0.25, decision=None, objective=None, wall_time_ms=None, degenerate=False,
    )
    TrialRecord(**good)
    with pytest.raises(ValidationError):
        TrialRecord(**{**good, "loss": 0.6})
    with pytest.raises(ValidationError):
        TrialRecord(**{**good, "loss": None, "decision": 2})


def test_csv_schema_is_pinned():
    assert CSV_COLUMNS == (
        "cell", "n", "T", "rho", "method", "trial", "seed",
        "loss", "decision", "objective", "wall_time_ms", "degenerate",
    )


# ---------------------------------------------------------------------------
# worker pool and determinism
# ---------------------------------------------------------------------------


def test_resolve_worker_count(monkeypatch):
    monkeypatch.setenv("MLSBM_WORKERS", "3")
    assert resolve_worker_count(10) == 3
    assert resolve_worker_count(2) == 2  # capped at the unit count
    monkeypatch.setenv("MLSBM_WORKERS", "0")
    with pytest.raises(ValidationError):
        resolve_worker_count(10)
    monkeypatch.setenv("MLSBM_WORKERS", "four")
    with pytest.raises(ValidationError):
        resolve_worker_count(10)
    monkeypatch.delenv("MLSBM_WORKERS")
    assert resolve_worker_count(4) >= 1


def strip_timing(records):
    return [dataclasses.replace(r, wall_time_ms=None) for r in records]


def test_phase_diagram_identical_across_runs_and_worker_counts(monkeypatch):
    cfg = small_recovery_config()
    monkeypatch.setenv("MLSBM_WORKERS", "1")
    serial = run_phase_diagram(cfg)
    again = run_phase_diagram(cfg)
    monkeypatch.setenv("MLSBM_WORKERS", "3")
    pooled = run_phase_diagram(cfg)
    assert strip_timing(serial) == strip_timing(again) == strip_timing(pooled)


def test_written_files_byte_identical_across_worker_counts(tmp_path, monkeypatch):
    cfg = small_recovery_config()
    paths = []
    for workers in ("1", "3"):
        monkeypatch.setenv("MLSBM_WORKERS", workers)
        path = tmp_path / f"sweep-w{workers}.csv"
        write_results(run_phase_diagram(cfg), path, cfg)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    sidecars = [json.loads((tmp_path / f"sweep-w{w}.csv.config.json").read_text()) for w in ("1", "3")]
    assert sidecars[0] == sidecars[1] == cfg.to_json_dict()


def test_phase_diagram_records_are_ordered_and_paired():
    cfg = small_recovery_config()
    records = run_phase_diagram(cfg)
    assert len(records) == len(cfg.cells) * cfg.trials * len(cfg.methods)
    # cell-major, then trial, then config method order; methods share the seed
    expected = [
        (f"n{n}-T{T}-rho{rho!r}", trial, method)
        for (n, T, rho) in cfg.cells
        for trial in range(cfg.trials)
        for method in cfg.methods
    ]
    assert [(r.cell, r.trial, r.method) for r in records] == expected
    for pair in zip(records[::2], records[1::2]):
        assert pair[0].seed == pair[1].seed


def test_size_guarded_method_records_degenerate_row():
    cfg = ExperimentConfig(
        kind="recovery",
        cells=((24, 2, 0.2),),
        methods=("mle-exhaustive", "sum-spectral"),
        trials=1,
        base_seed=5,
    )
    by_method = {r.method: r for r in run_phase_diagram(cfg)}
    guarded = by_method["mle-exhaustive"]
    assert guarded.degenerate and guarded.loss is None and guarded.objective is None
    survived = by_method["sum-spectral"]
    assert survived.loss is not None and 0.0 <= survived.loss <= 0.5


def test_phase_diagram_rejects_detection_config():
    cfg = small_recovery_config(kind="detection", methods=("split-test",))
    with pytest.raises(ValidationError):
        run_phase_diagram(cfg)
    with pytest.raises(ValidationError):
        run_detection_sweep(small_recovery_config())


def test_loss_trend_non_increasing_in_density():
    # Fixed (n, T) column, five density points, twenty trials: denser graphs
    # carry more signal, so the averaged loss should trend downward with a
    # small Monte-Carlo allowance per step.
    rhos = (0.02, 0.05, 0.1, 0.2, 0.3)
    cfg = ExperimentConfig(
        kind="recovery",
        cells=tuple((16, 8, r) for r in rhos),
        methods=("bias-adjusted-spectral",),
        trials=20,
        base_seed=77,
    )
    losses = {}
    for record in run_phase_diagram(cfg):
        losses.setdefault(record.rho, []).append(record.loss)
    means = [statistics.mean(losses[r]) for r in rhos]
    for earlier, later in zip(means, means[1:]):
        assert later <= earlier + 0.05
    assert means[-1] <= means[0] - 0.15


# ---------------------------------------------------------------------------
# detection sweeps
# ---------------------------------------------------------------------------


def test_detection_sweep_pairs_planted_and_null_arms():
    cfg = ExperimentConfig(
        kind="detection",
        cells=((8, 6, 0.3),),
        methods=("split-test", "shuffled-test"),
        trials=2,
        base_seed=3,
        rounds=1,
    )
    records = run_detection_sweep(cfg)
    assert len(records) == 2 * 2 * 2  # arms x trials x methods
    assert {r.cell.rsplit("|", 1)[1] for r in records} == {"planted", "null"}
    assert all(r.decision in (0, 1) and r.loss is None for r in records)
    risks = detection_risk_by_cell(records)
    assert set(risks) == {
        ("n8-T6-rho0.3", "split-test"),
        ("n8-T6-rho0.3", "shuffled-test"),
    }
    assert all(0.0 <= v <= 2.0 for v in risks.values())


def test_detection_sweep_needs_enough_layers_for_the_split():
    cfg = ExperimentConfig(
        kind="detection", cells=((8, 2, 0.3),), methods=("split-test",), trials=1
    )
    with pytest.raises(ValidationError):
        run_detection_sweep(cfg)


def test_detection_risk_assembly_arithmetic():
    def rec(arm, decision, trial):
        return TrialRecord(
            cell=f"n8-T6-rho0.3|{arm}", n=8, T=6, rho=0.3, method="split-test",
            trial=trial, seed=trial, loss=None, decision=decision,
            objective=None, wall_time_ms=None, degenerate=False,
        )

    records = [
        rec("planted", 1, 0), rec("planted", 1, 1),  # no misses
        rec("null", 0, 0), rec("null", 1, 1),        # one false alarm of two
    ]
    risks = detection_risk_by_cell(records)
    assert risks[("n8-T6-rho0.3", "split-test")] == pytest.approx(0.5)
    bad = dataclasses.replace(records[0], cell="n8-T6-rho0.3", decision=None, loss=0.0)
    with pytest.raises(ValidationError):
        detection_risk_by_cell([bad])


# ---------------------------------------------------------------------------
# gap demo
# ---------------------------------------------------------------------------


def test_gap_demo_zero_density_reports_undefined_gap():
    with pytest.warns(RuntimeWarning):
        summary = run_gap_demo(8, 4, 0.0, trials=2, base_seed=9)
    assert summary["degenerate_trials"] == 2
    assert summary["gap_defined"] is False
    assert summary["median_gap"] is None
    assert "degenerate" in summary["note"]


def test_gap_demo_warns_outside_the_interesting_regime():
    with pytest.warns(RuntimeWarning, match="between the thresholds"):
        run_gap_demo(16, 8, 0.3, trials=1, base_seed=0)


def test_gap_demo_between_thresholds_is_quiet_and_paired():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        summary = run_gap_demo(16, 64, 0.02, trials=3, base_seed=21)
    assert summary["between_thresholds"] is True
    assert len(summary["oracle_losses"]) == len(summary["spectral_losses"]) == 3
    assert summary["gap_defined"] is True
    assert summary["median_gap"] == pytest.approx(
        summary["median_spectral_loss"] - summary["median_oracle_loss"], abs=0.5
    )


def test_gap_demo_validates_arguments():
    with pytest.raises(ValidationError):
        run_gap_demo(7, 4, 0.1, trials=1)
    with pytest.raises(ValidationError):
        run_gap_demo(8, 4, 0.1, trials=0)
    with pytest.raises(ValidationError):
        run_gap_demo(8, 4, 0.7, trials=1)


# ---------------------------------------------------------------------------
# results files
# ---------------------------------------------------------------------------


def test_write_results_empty_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_results([], path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_write_results_line_count_and_round_trip(tmp_path):
    cfg = small_recovery_config(trials=1, methods=("sum-spectral",), cells=((8, 4, 0.3),))
    records = run_phase_diagram(cfg)
    records.append(
        TrialRecord(
            cell="n24-T2-rho0.2", n=24, T=2, rho=0.2, method="mle-exhaustive",
            trial=0, seed=99, loss=None, decision=None, objective=None,
            wall_time_ms=None, degenerate=True,
        )
    )
    records.append(
        TrialRecord(
            cell="n8-T6-rho0.3|null", n=8, T=6, rho=0.3, method="split-test",
            trial=1, seed=7, loss=None, decision=0, objective=None,
            wall_time_ms=12.5, degenerate=False,
        )
    )
    path = tmp_path / "out.csv"
    write_results(records, path)
    assert len(path.read_text().splitlines()) == 1 + len(records)
    # timing is dropped by default, so compare everything else
    assert read_results(path) == strip_timing(records)


def test_write_results_refuses_overwrite_without_flag(tmp_path):
    path = tmp_path / "out.csv"
    write_results([], path)
    with pytest.raises(FileExistsError):
        write_results([], path)
    write_results([], path, overwrite=True)


def test_write_results_surfaces_path_in_io_errors(tmp_path):
    target = tmp_path / "missing-dir" / "out.csv"
    with pytest.raises(OSError, match="missing-dir"):
        write_results([], target)
    with pytest.raises(OSError, match="nothing.csv"):
        read_results(tmp_path / "nothing.csv")


def test_read_results_rejects_bad_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ValidationError, match="missing header"):
        read_results(empty)
    bad_header = tmp_path / "bad.csv"
    bad_header.write_text("cell,n\n")
    with pytest.raises(ValidationError, match="header"):
        read_results(bad_header)
    bad_flag = tmp_path / "flag.csv"
    bad_flag.write_text(
        ",".join(CSV_COLUMNS) + "\n" + "c,8,4,0.1,sum-spectral,0,1,,,,,maybe\n"
    )
    with pytest.raises(ValidationError, match="degenerate"):
        read_results(bad_flag)


def test_timing_column_only_written_on_request(tmp_path):
    cfg = small_recovery_config(trials=1, methods=("sum-spectral",), cells=((8, 4, 0.3),))
    records = run_phase_diagram(cfg)
    bare = tmp_path / "bare.csv"
    timed = tmp_path / "timed.csv"
    write_results(records, bare)
    write_results(records, timed, include_timing=True)
    bare_row = bare.read_text().splitlines()[1].split(",")
    timed_row = timed.read_text().splitlines()[1].split(",")
    timing_col = CSV_COLUMNS.index("wall_time_ms")
    assert bare_row[timing_col] == ""
    assert float(timed_row[timing_col]) >= 0.0


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------


def test_parse_config_cells_form():
    cfg = parse_config_text(
        """
        # recovery sweep over two cells
        kind = recovery
        cells = 8:4:0.3, 10:4:0.2
        methods = sum-spectral, bias-adjusted-spectral
        trials = 3
        base_seed = 11
        """
    )
    assert cfg.cells == ((8, 4, 0.3), (10, 4, 0.2))
    assert cfg.methods == ("sum-spectral", "bias-adjusted-spectral")
    assert cfg.trials == 3 and cfg.base_seed == 11 and cfg.rounds is None


def test_parse_config_exponent_grid_matches_from_exponents():
    cfg = parse_config_text("n_values = 6, 8\na = 1.5\nb = 1.2\ntrials = 2")
    assert cfg == ExperimentConfig.from_exponents([6, 8], a=1.5, b=1.2, trials=2)


def test_parse_config_defaults_methods_by_kind():
    assert parse_config_text("cells = 8:4:0.3").methods == ("bias-adjusted-spectral",)
    cfg = parse_config_text("kind = detection\ncells = 8:6:0.3\nrounds = 2")
    assert cfg.methods == ("shuffled-test",) and cfg.rounds == 2


def test_parse_config_rejects_malformed_text():
    with pytest.raises(ValidationError, match="unknown key"):
        parse_config_text("colour = blue")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_config_text("trials = 1\ntrials = 2\ncells = 8:4:0.3")
    with pytest.raises(ValidationError, match="key = value"):
        parse_config_text("just words")
    with pytest.raises(ValidationError, match="not both"):
        parse_config_text("cells = 8:4:0.3\nn_values = 8\na = 1\nb = 1")
    with pytest.raises(ValidationError, match="needs 'cells'"):
        parse_config_text("trials = 4")
    with pytest.raises(ValidationError, match="n:T:rho"):
        parse_config_text("cells = 8:4")
    with pytest.raises(ValidationError, match="bad number"):
        parse_config_text("cells = eight:4:0.3")
    with pytest.raises(ValidationError, match="integer"):
        parse_config_text("cells = 8:4:0.3\ntrials = 2.5")


def test_read_config_round_trip(tmp_path):
    path = tmp_path / "sweep.cfg"
    path.write_text("cells = 8:4:0.3\nmethods = sum-spectral\ntrials = 2\n")
    cfg = read_config(path)
    assert cfg.cells == ((8, 4, 0.3),) and cfg.trials == 2
    with pytest.raises(OSError, match="absent.cfg"):
        read_config(tmp_path / "absent.cfg")
