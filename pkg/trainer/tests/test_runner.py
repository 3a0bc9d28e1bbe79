from __future__ import annotations

import json

import pytest

from driverfx import DEFAULT_MANIFEST, make_rows, stub_backend, write_rows

from stagedriver.datafiles import (
    DatasetError,
    Row,
    ensure_trainable,
    read_rows,
    training_rows,
)
from stagedriver.plans import FixedEpochs, LossPlateau, plan_stages
from stagedriver.runner import (
    EpochMonitor,
    PlateauMonitor,
    StageError,
    describe_stage,
    preflight,
    run_stage,
)


def test_read_rows_and_training_selection(workspace):
    rows = read_rows(workspace / "data" / "t3_extract.jsonl")
    assert len(rows) == 20
    selected = training_rows(rows)
    assert len(selected) == 14
    assert all(r.split == "train" for r in selected)


def test_unlabeled_files_are_fully_trainable(workspace):
    rows = read_rows(workspace / "data" / "stage1_mult_add.jsonl")
    assert len(training_rows(rows)) == len(rows) == 22


def test_read_rows_rejects_bad_split(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"task": "t", "input": "i", "output": "o", '
                    '"split": "test", "meta": null}\n')
    with pytest.raises(DatasetError, match="bad.jsonl:1"):
        read_rows(path)


def test_read_rows_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        read_rows(tmp_path / "gone.jsonl")


def test_ensure_trainable_rejects_contamination():
    rows = [Row("t", "i", "o", "train"), Row("t", "i", "o", "eval")]
    with pytest.raises(DatasetError, match="eval-labeled"):
        ensure_trainable(rows, "stage 'x'")
    ensure_trainable([rows[0]], "stage 'x'")  # clean selection passes


def test_preflight_counts_and_exclusions(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    result = preflight(plans[1], workspace)
    assert result.rows_per_dataset == (("data/t3_extract.jsonl", 14),)
    assert result.excluded_eval_rows == 6
    assert all(r.split != "eval" for r in result.rows)


def test_preflight_rejects_all_eval_dataset(workspace):
    write_rows(workspace / "data" / "t3_extract.jsonl",
               make_rows("t3_extract", 0, 10))
    plans = plan_stages(DEFAULT_MANIFEST)
    with pytest.raises(StageError, match="eval"):
        preflight(plans[1], workspace)


def test_preflight_rejects_missing_dataset(workspace):
    (workspace / "data" / "t4_concat.jsonl").unlink()
    plans = plan_stages(DEFAULT_MANIFEST)
    with pytest.raises(DatasetError, match="t4_concat.jsonl"):
        preflight(plans[2], workspace)


def test_preflight_requires_base_checkpoint_for_real_runs(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    with pytest.raises(StageError, match="base checkpoint"):
        preflight(plans[1], workspace, workspace / "runs",
                  require_base_checkpoint=True)


def test_describe_stage_is_byte_stable(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    first = describe_stage(preflight(plans[0], workspace))
    second = describe_stage(preflight(plans[0], workspace))
    assert first == second
    assert "stage: stage1_mult_add" in first
    assert "base checkpoint: meta-llama/Llama-3.2-3B-Instruct" in first
    assert "output checkpoint: checkpoints/M1" in first
    assert "22 train rows" in first


def test_run_stage_dry_run_writes_nothing(workspace, capsys):
    plans = plan_stages(DEFAULT_MANIFEST)
    out = run_stage(plans[0], workspace, workspace / "runs", dry_run=True)
    printed = capsys.readouterr().out
    assert "dry run: nothing executed" in printed
    assert "stage: stage1_mult_add" in printed
    assert not out.exists()
    assert not (workspace / "runs").exists()


def test_run_stage_with_stub_backend(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    backend = stub_backend()
    out = run_stage(plans[0], workspace, workspace / "runs", backend=backend)
    assert out == workspace / "runs" / "checkpoints" / "M1"
    assert (out / "weights").read_text() == "ok"
    request = backend.calls[0]
    assert all(r.split != "eval" for r in request.rows)
    assert request.base_checkpoint_path == "meta-llama/Llama-3.2-3B-Instruct"
    log = (workspace / "runs" / "logs" / "stage1_mult_add.csv").read_text()
    lines = log.strip().split("\n")
    assert lines[0] == "step,train_loss,val_loss"
    assert lines[1] == "50,2.0,1.9"


def test_run_stage_chains_checkpoints(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    backend = stub_backend()
    run_stage(plans[0], workspace, workspace / "runs", backend=backend)
    out2 = run_stage(plans[1], workspace, workspace / "runs", backend=backend)
    assert out2.name == "M2"
    # stage 2's base resolves to the stage-1 checkpoint on disk
    assert backend.calls[1].base_checkpoint_path == \
        str(workspace / "runs" / "checkpoints" / "M1")


def test_run_stage_requires_prior_checkpoint(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    with pytest.raises(StageError, match="base checkpoint"):
        run_stage(plans[1], workspace, workspace / "runs",
                  backend=stub_backend())


def test_run_stage_surfaces_backend_failure(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)

    def exploding(request):
        raise RuntimeError("CUDA device exploded")

    with pytest.raises(StageError, match="CUDA device exploded"):
        run_stage(plans[0], workspace, workspace / "runs", backend=exploding)


def test_run_stage_rejects_backend_that_writes_nothing(workspace):
    plans = plan_stages(DEFAULT_MANIFEST)
    with pytest.raises(StageError, match="without writing"):
        run_stage(plans[0], workspace, workspace / "runs",
                  backend=lambda request: None)


def test_plateau_monitor_stops_after_three_flat_evals():
    monitor = PlateauMonitor(LossPlateau(patience=3, min_rel_improvement=0.01))
    assert not monitor.update(1, 10.0, 10.0)   # baseline
    assert not monitor.update(2, 10.0, 8.0)    # 20% better: resets
    assert not monitor.update(3, 10.0, 7.96)   # <1%: flat 1
    assert not monitor.update(4, 10.0, 7.95)   # flat 2
    assert monitor.update(5, 10.0, 7.94)       # flat 3 -> stop
    assert len(monitor.history) == 5


def test_plateau_monitor_uses_train_loss_without_validation():
    monitor = PlateauMonitor(LossPlateau(patience=2, min_rel_improvement=0.05))
    assert not monitor.update(1, 4.0)
    assert not monitor.update(2, 3.99)
    assert monitor.update(3, 3.99)


def test_epoch_monitor_counts_epochs():
    monitor = EpochMonitor(FixedEpochs(epochs=2))
    assert not monitor.update(1, 1.0, None)
    assert not monitor.end_epoch()
    assert monitor.end_epoch()


def test_manifest_written_by_fixture_matches_documented_schema(workspace):
    obj = json.loads((workspace / "manifest.json").read_text())
    assert set(obj) == {"base_model", "output_model_names", "stages"}
    assert all(set(s) == {"name", "datasets", "training_mode",
                          "split_label_used"} for s in obj["stages"])
