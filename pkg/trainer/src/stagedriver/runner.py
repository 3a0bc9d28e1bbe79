"""Stage execution: preflight checks, dry runs, and backend dispatch.

The driver itself never touches model weights. It resolves and checks
everything a training run needs (datasets, the train-only row selection,
the checkpoint chain), renders the exact invocation for dry runs, and
hands a fully-validated request to a training backend. The default
backend drives a causal-LM fine-tune through the huggingface stack and
only makes sense on a GPU machine; tests use stub backends.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .datafiles import DatasetError, Row, ensure_trainable, read_rows, training_rows
from .plans import FixedEpochs, LossPlateau, StagePlan


class StageError(RuntimeError):
    """A stage could not start (preflight) or failed while running."""


@dataclass(frozen=True, slots=True)
class PreflightResult:
    plan: StagePlan
    rows: tuple[Row, ...]          # the exact rows training will see
    rows_per_dataset: tuple[tuple[str, int], ...]
    excluded_eval_rows: int


def preflight(
    plan: StagePlan,
    manifest_dir: str | Path,
    workspace: str | Path | None = None,
    require_base_checkpoint: bool = False,
) -> PreflightResult:
    """Verify a stage can run: datasets parse, and training sees no eval rows.

    Dataset paths resolve relative to the manifest's directory. The
    training selection is rows labeled "train" plus unlabeled rows
    (train-only files); a stage whose datasets leave nothing trainable is
    rejected, and the selection is re-scanned so an eval row can never
    slip through to a backend.
    """
    manifest_dir = Path(manifest_dir)
    selected: list[Row] = []
    per_dataset: list[tuple[str, int]] = []
    excluded = 0
    for rel in plan.dataset_paths:
        path = manifest_dir / rel
        rows = read_rows(path)
        trainable = training_rows(rows)
        excluded += len(rows) - len(trainable)
        if not trainable:
            raise StageError(
                f"stage {plan.stage_name!r}: dataset {path} has no trainable "
                f"rows ({len(rows)} rows, all eval-labeled or empty); refusing "
                f"to train on the eval split"
            )
        per_dataset.append((rel, len(trainable)))
        selected.extend(trainable)
    try:
        ensure_trainable(selected, f"stage {plan.stage_name!r}")
    except DatasetError as exc:
        raise StageError(str(exc)) from exc

    if require_base_checkpoint and workspace is not None and not plan.base_is_model:
        base = Path(workspace) / "checkpoints" / plan.base_checkpoint
        if not base.exists():
            raise StageError(
                f"stage {plan.stage_name!r}: base checkpoint {base} not found; "
                f"run the preceding stage first"
            )
    return PreflightResult(plan, tuple(selected), tuple(per_dataset), excluded)


def describe_stage(result: PreflightResult) -> str:
    """The dry-run block for one stage; byte-stable for fixed inputs."""
    plan = result.plan
    opts = plan.options
    datasets = ", ".join(f"{rel} ({n} train rows)"
                         for rel, n in result.rows_per_dataset)
    lines = [
        f"stage: {plan.stage_name}",
        f"  mode: {plan.mode}",
        f"  base checkpoint: {plan.base_checkpoint}",
        f"  output checkpoint: checkpoints/{plan.output_checkpoint}",
        f"  datasets: {datasets}",
        f"  excluded eval rows: {result.excluded_eval_rows}",
        f"  stop rule: {plan.stop_rule.describe()}",
        f"  options: lr={opts.learning_rate} batch_size={opts.batch_size} "
        f"max_epochs={opts.max_epochs} eval_interval={opts.eval_interval_steps}",
    ]
    return "\n".join(lines)


# --- stop-rule monitors -------------------------------------------------------

@dataclass
class PlateauMonitor:
    """Stops after `patience` consecutive evals with < min_rel improvement."""

    rule: LossPlateau
    best: float | None = None
    flat_evals: int = 0
    history: list[tuple[int, float, float | None]] = field(default_factory=list)

    def update(self, step: int, train_loss: float,
               val_loss: float | None = None) -> bool:
        self.history.append((step, train_loss, val_loss))
        monitored = val_loss if val_loss is not None else train_loss
        if self.best is None:
            self.best = monitored
            return False
        improvement = (self.best - monitored) / abs(self.best) if self.best else 0.0
        if improvement >= self.rule.min_rel_improvement:
            self.best = monitored
            self.flat_evals = 0
        else:
            self.flat_evals += 1
        return self.flat_evals >= self.rule.patience


@dataclass
class EpochMonitor:
    """Stops once the fixed epoch budget is exhausted (loss still logged)."""

    rule: FixedEpochs
    epochs_done: int = 0
    history: list[tuple[int, float, float | None]] = field(default_factory=list)

    def update(self, step: int, train_loss: float,
               val_loss: float | None = None) -> bool:
        self.history.append((step, train_loss, val_loss))
        return False

    def end_epoch(self) -> bool:
        self.epochs_done += 1
        return self.epochs_done >= self.rule.epochs


def make_monitor(plan: StagePlan):
    if isinstance(plan.stop_rule, LossPlateau):
        return PlateauMonitor(plan.stop_rule)
    return EpochMonitor(plan.stop_rule)


# --- backends -----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TrainRequest:
    plan: StagePlan
    rows: tuple[Row, ...]
    base_checkpoint_path: str   # resolved path or model name for stage one
    output_dir: Path
    monitor: PlateauMonitor | EpochMonitor


class TrainingBackend(Protocol):
    def __call__(self, request: TrainRequest) -> None: ...


def hf_backend(request: TrainRequest) -> None:
    """Fine-tune a causal LM on input+output text with the huggingface stack.

    Requires torch and transformers (install the 'train' extra) and in
    practice a GPU; this never runs in the desk test suite.
    """
    try:
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer
    except ImportError as exc:
        raise StageError(
            "the default training backend needs torch and transformers; "
            "install the 'train' extra or pass a custom backend"
        ) from exc

    plan, opts = request.plan, request.plan.options
    torch.manual_seed(opts.seed)
    tokenizer = AutoTokenizer.from_pretrained(request.base_checkpoint_path)
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
    model = AutoModelForCausalLM.from_pretrained(request.base_checkpoint_path)
    device = "cuda" if torch.cuda.is_available() else "cpu"
    model.to(device)
    model.train()

    texts = [r.input + r.output for r in request.rows]
    n_val = max(1, int(len(texts) * opts.val_fraction))
    val_texts, train_texts = texts[:n_val], texts[n_val:]

    def batches(items: list[str], shuffle_seed: int | None):
        order = list(range(len(items)))
        if shuffle_seed is not None:
            import random
            random.Random(shuffle_seed).shuffle(order)
        for i in range(0, len(order), opts.batch_size):
            chunk = [items[k] for k in order[i:i + opts.batch_size]]
            yield tokenizer(chunk, return_tensors="pt", padding=True,
                            truncation=True, max_length=2048).to(device)

    def labels_for(enc):
        labels = enc["input_ids"].clone()
        labels[enc["attention_mask"] == 0] = -100  # no loss on padding
        return labels

    def eval_loss() -> float:
        model.eval()
        total, count = 0.0, 0
        with torch.no_grad():
            for enc in batches(val_texts, None):
                out = model(**enc, labels=labels_for(enc))
                total += float(out.loss)
                count += 1
        model.train()
        return total / max(count, 1)

    optimizer = torch.optim.AdamW(model.parameters(), lr=opts.learning_rate)
    monitor = request.monitor
    step = 0
    try:
        for epoch in range(opts.max_epochs):
            for enc in batches(train_texts, opts.seed + epoch):
                out = model(**enc, labels=labels_for(enc))
                out.loss.backward()
                optimizer.step()
                optimizer.zero_grad()
                step += 1
                if step % opts.eval_interval_steps == 0:
                    if monitor.update(step, float(out.loss), eval_loss()):
                        raise StopIteration
            if isinstance(monitor, EpochMonitor) and monitor.end_epoch():
                raise StopIteration
    except StopIteration:
        pass
    except torch.cuda.OutOfMemoryError as exc:
        raise StageError(
            f"stage {plan.stage_name!r}: GPU out of memory; lower the "
            f"batch_size training option (currently {opts.batch_size}) or "
            f"use a smaller base model"
        ) from exc

    request.output_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(request.output_dir)
    tokenizer.save_pretrained(request.output_dir)


# --- run_stage ------------------------------------------------------------------

def run_stage(
    plan: StagePlan,
    manifest_dir: str | Path,
    workspace: str | Path,
    dry_run: bool = False,
    backend: TrainingBackend = hf_backend,
    echo: Callable[[str], None] = print,
) -> Path:
    """Execute (or describe) one stage; returns the output checkpoint path.

    Preflight always runs first. A dry run prints the full invocation and
    writes nothing. A real run hands the validated train-only rows to the
    backend, then persists the stage's loss log as
    ``logs/<stage>.csv`` (step, train_loss, val_loss).
    """
    workspace = Path(workspace)
    result = preflight(plan, manifest_dir, workspace,
                       require_base_checkpoint=not dry_run)
    output_dir = workspace / "checkpoints" / plan.output_checkpoint
    if dry_run:
        echo(describe_stage(result))
        echo(f"  dry run: nothing executed, would write {output_dir}")
        return output_dir

    ensure_trainable(result.rows, f"stage {plan.stage_name!r}")
    base = workspace / "checkpoints" / plan.base_checkpoint
    base_ref = str(base) if base.exists() else plan.base_checkpoint
    monitor = make_monitor(plan)
    request = TrainRequest(plan, result.rows, base_ref, output_dir, monitor)
    try:
        backend(request)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(f"stage {plan.stage_name!r}: training stack failed: "
                         f"{exc}") from exc
    if not output_dir.exists():
        raise StageError(
            f"stage {plan.stage_name!r}: backend finished without writing "
            f"{output_dir}"
        )
    _write_loss_log(workspace / "logs" / f"{plan.stage_name}.csv",
                    monitor.history)
    return output_dir


def _write_loss_log(path: Path,
                    history: list[tuple[int, float, float | None]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "train_loss", "val_loss"])
        for step, train_loss, val_loss in history:
            writer.writerow([step, train_loss, "" if val_loss is None else val_loss])
