"""Manifest loading and the staged training plan.

A curriculum manifest (see the corpus toolkit's docs/interfaces.md for
the JSON schema) lists ordered stages over dataset files. Planning turns
it into a checkpoint chain: stage k fine-tunes the checkpoint written by
stage k-1, starting from the base model, and writes the k-th output
name. Planning is pure — no file I/O beyond the manifest itself — and
deterministic, so a dry run is byte-stable for a fixed manifest.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

_MODES = ("overfit", "finetune")


class ManifestError(ValueError):
    """The manifest file violates the documented schema."""


class PlanError(ValueError):
    """A stage plan set is internally inconsistent (broken checkpoint chain)."""


@dataclass(frozen=True, slots=True)
class LossPlateau:
    """Stop when relative improvement stays below the threshold.

    Defaults: stop after 3 consecutive evaluation intervals each improving
    the best loss by less than 1%.
    """

    patience: int = 3
    min_rel_improvement: float = 0.01

    def describe(self) -> str:
        return (f"loss plateau (<{self.min_rel_improvement:.1%} relative "
                f"improvement over {self.patience} evals)")


@dataclass(frozen=True, slots=True)
class FixedEpochs:
    epochs: int

    def describe(self) -> str:
        return f"fixed {self.epochs} epoch(s)"


StopRule = LossPlateau | FixedEpochs


@dataclass(frozen=True, slots=True)
class TrainingOptions:
    """Hyperparameters with documented defaults; all overridable per stage
    via the manifest's optional "training_options" objects."""

    learning_rate: float = 2e-4
    batch_size: int = 8
    max_epochs: int = 20
    eval_interval_steps: int = 50
    val_fraction: float = 0.05
    seed: int = 0


@dataclass(frozen=True, slots=True)
class StagePlan:
    stage_name: str
    dataset_paths: tuple[str, ...]
    mode: str  # "overfit" | "finetune"
    base_checkpoint: str
    output_checkpoint: str
    stop_rule: StopRule = field(default_factory=LossPlateau)
    options: TrainingOptions = field(default_factory=TrainingOptions)
    # True on the first stage only: its base is the root model reference,
    # not a checkpoint written by a preceding stage.
    base_is_model: bool = False


def load_manifest(path: str | Path) -> dict:
    """Read and schema-check a manifest file (a standalone revalidation)."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from exc
    _check_schema(obj, str(path))
    return obj


def _check_schema(obj: dict, where: str) -> None:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: top level must be an object")
    for key in ("base_model", "output_model_names", "stages"):
        if key not in obj:
            raise ManifestError(f"{where}: missing field {key!r}")
    stages = obj["stages"]
    names = obj["output_model_names"]
    if not isinstance(stages, list) or not stages:
        raise ManifestError(f"{where}: stages must be a non-empty list")
    if not isinstance(names, list) or len(names) != len(stages):
        raise ManifestError(
            f"{where}: output_model_names must pair one name with each stage"
        )
    seen: set[str] = set()
    for idx, stage in enumerate(stages):
        at = f"{where}: stages[{idx}]"
        if not isinstance(stage, dict):
            raise ManifestError(f"{at}: must be an object")
        for key in ("name", "datasets", "training_mode"):
            if key not in stage:
                raise ManifestError(f"{at}: missing field {key!r}")
        if stage["name"] in seen:
            raise ManifestError(f"{at}: duplicate stage name {stage['name']!r}")
        seen.add(stage["name"])
        if stage["training_mode"] not in _MODES:
            raise ManifestError(
                f"{at}: training_mode must be one of {_MODES}, "
                f"got {stage['training_mode']!r}"
            )
        if stage.get("split_label_used", "train") != "train":
            raise ManifestError(f"{at}: only the train split may feed training")
        if not isinstance(stage["datasets"], list) or not stage["datasets"]:
            raise ManifestError(f"{at}: datasets must be a non-empty list")


def _stop_rule(raw: dict | None) -> StopRule:
    if raw is None:
        return LossPlateau()
    kind = raw.get("type", "loss_plateau")
    if kind == "loss_plateau":
        return LossPlateau(
            patience=int(raw.get("patience", 3)),
            min_rel_improvement=float(raw.get("min_rel_improvement", 0.01)),
        )
    if kind == "fixed_epochs":
        if "epochs" not in raw:
            raise ManifestError("stop_rule fixed_epochs needs an 'epochs' field")
        return FixedEpochs(epochs=int(raw["epochs"]))
    raise ManifestError(f"unknown stop_rule type {kind!r}")


def _options(base: dict, override: dict) -> TrainingOptions:
    merged = {**base, **override}
    merged.pop("stop_rule", None)
    known = {f for f in TrainingOptions.__dataclass_fields__}
    unknown = set(merged) - known
    if unknown:
        raise ManifestError(f"unknown training option(s): {sorted(unknown)}")
    return TrainingOptions(**merged)


def plan_stages(manifest: dict) -> list[StagePlan]:
    """Chain the manifest's stages into executable plans.

    Stage order is taken as given — it is the experimenter's choice. The
    base of stage k is the output name of stage k-1 (the manifest's base
    model for stage 0).
    """
    _check_schema(manifest, "manifest")
    shared = manifest.get("training_options", {})
    plans: list[StagePlan] = []
    previous = manifest["base_model"]
    for idx, (stage, output) in enumerate(
        zip(manifest["stages"], manifest["output_model_names"])
    ):
        stage_options = stage.get("training_options", {})
        plans.append(StagePlan(
            stage_name=stage["name"],
            dataset_paths=tuple(stage["datasets"]),
            mode=stage["training_mode"],
            base_checkpoint=previous,
            output_checkpoint=output,
            stop_rule=_stop_rule(stage_options.get("stop_rule",
                                                   shared.get("stop_rule"))),
            options=_options(shared, stage_options),
            base_is_model=idx == 0,
        ))
        previous = output
    validate_chain(plans, base_model=manifest["base_model"])
    return plans


def validate_chain(plans: list[StagePlan], base_model: str | None = None) -> None:
    """Reject a plan list whose checkpoint lineage does not chain."""
    if not plans:
        raise PlanError("no stages planned")
    if base_model is not None and plans[0].base_checkpoint != base_model:
        raise PlanError(
            f"stage {plans[0].stage_name!r} must start from {base_model!r}, "
            f"not {plans[0].base_checkpoint!r}"
        )
    for prev, cur in zip(plans, plans[1:]):
        if cur.base_checkpoint != prev.output_checkpoint:
            raise PlanError(
                f"broken checkpoint chain: stage {cur.stage_name!r} starts from "
                f"{cur.base_checkpoint!r} but stage {prev.stage_name!r} "
                f"writes {prev.output_checkpoint!r}"
            )
    names = [p.output_checkpoint for p in plans]
    if len(set(names)) != len(names):
        raise PlanError(f"duplicate output checkpoint names: {names}")
