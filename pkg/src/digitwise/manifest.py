"""Curriculum manifest: the declarative staged-training plan.

The manifest is a JSON description of which dataset files feed which
training stage, in what order, under which regime. This package only
validates and describes it; executing the plan belongs to the training
driver that consumes the same file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import corpus

DEFAULT_BASE_MODEL = "meta-llama/Llama-3.2-3B-Instruct"
DEFAULT_OUTPUT_NAMES = ("M1", "M2", "M3", "LLM-DAL")


class TrainingMode(Enum):
    OVERFIT = "overfit"
    FINETUNE = "finetune"


@dataclass(frozen=True, slots=True)
class ManifestStage:
    name: str
    datasets: tuple[str, ...]
    training_mode: TrainingMode
    split_label_used: str = "train"


@dataclass(frozen=True, slots=True)
class CurriculumManifest:
    stages: tuple[ManifestStage, ...]
    base_model: str
    output_model_names: tuple[str, ...]
    path: Path | None = None


def default_manifest(data_dir: str = "data") -> dict:
    """The shipped four-stage curriculum as a plain JSON-ready dict.

    Stage order: the merged multiplication+addition drills first (trained
    to overfit — they are the primitives everything else leans on), then
    digit extraction, then left concatenation, then the composed
    multiplication corpus.
    """
    d = data_dir.rstrip("/")
    return {
        "base_model": DEFAULT_BASE_MODEL,
        "output_model_names": list(DEFAULT_OUTPUT_NAMES),
        "stages": [
            {
                "name": "stage1_mult_add",
                "datasets": [f"{d}/stage1_mult_add.jsonl"],
                "training_mode": "overfit",
                "split_label_used": "train",
            },
            {
                "name": "stage2_extract",
                "datasets": [f"{d}/t3_extract.jsonl"],
                "training_mode": "finetune",
                "split_label_used": "train",
            },
            {
                "name": "stage3_concat",
                "datasets": [f"{d}/t4_concat.jsonl"],
                "training_mode": "finetune",
                "split_label_used": "train",
            },
            {
                "name": "stage4_global",
                "datasets": [f"{d}/global_mult.jsonl"],
                "training_mode": "finetune",
                "split_label_used": "train",
            },
        ],
    }


def init_workspace(
    directory: str | Path,
    seed: int = 1234,
    n_extract: int = 5000,
    n_concat: int = 5000,
    n_global: int = 2000,
) -> Path:
    """Generate the default datasets and manifest under ``directory``.

    The merged first-stage set is train-only (no split labels); the
    extraction and concatenation sets carry a 70/30 train/eval split and
    the composed corpus a 90/10 split. Returns the manifest path.
    """
    directory = Path(directory)
    data = directory / "data"
    data.mkdir(parents=True, exist_ok=True)

    corpus.write_jsonl(corpus.gen_stage1(seed), data / "stage1_mult_add.jsonl")
    corpus.write_jsonl(
        corpus.split_dataset(corpus.gen_t3_extract(n_extract, seed + 1), 0.30, seed + 1),
        data / "t3_extract.jsonl",
    )
    corpus.write_jsonl(
        corpus.split_dataset(corpus.gen_t4_concat(n_concat, seed + 2), 0.30, seed + 2),
        data / "t4_concat.jsonl",
    )
    corpus.write_jsonl(
        corpus.split_dataset(corpus.gen_global(n_global, seed + 3), 0.10, seed + 3),
        data / "global_mult.jsonl",
    )

    manifest_path = directory / "manifest.json"
    manifest_path.write_text(
        json.dumps(default_manifest("data"), indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


def _fail(path: str, message: str) -> ValueError:
    return ValueError(f"manifest {path}: {message}")


def validate_manifest(path: str | Path) -> CurriculumManifest:
    """Parse and validate a manifest file.

    Checks the schema (field presence and enum values), stage-name
    uniqueness, the one-output-name-per-stage pairing, and that every
    referenced dataset file exists relative to the manifest's directory.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _fail(str(path), f"not valid JSON: {exc}") from exc

    if not isinstance(obj, dict):
        raise _fail(str(path), "top level must be an object")
    for key in ("base_model", "output_model_names", "stages"):
        if key not in obj:
            raise _fail(str(path), f"missing required field {key!r}")
    if not isinstance(obj["base_model"], str) or not obj["base_model"]:
        raise _fail(str(path), "base_model: must be a non-empty string")
    names = obj["output_model_names"]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise _fail(str(path), "output_model_names: must be a list of strings")
    raw_stages = obj["stages"]
    if not isinstance(raw_stages, list) or not raw_stages:
        raise _fail(str(path), "stages: must be a non-empty list")
    if len(names) != len(raw_stages):
        raise _fail(
            str(path),
            f"output_model_names: expected one name per stage "
            f"({len(raw_stages)} stages, {len(names)} names)",
        )

    stages: list[ManifestStage] = []
    seen: set[str] = set()
    for idx, raw in enumerate(raw_stages):
        where = f"stages[{idx}]"
        if not isinstance(raw, dict):
            raise _fail(str(path), f"{where}: must be an object")
        for key in ("name", "datasets", "training_mode"):
            if key not in raw:
                raise _fail(str(path), f"{where}.{key}: missing")
        name = raw["name"]
        if not isinstance(name, str) or not name:
            raise _fail(str(path), f"{where}.name: must be a non-empty string")
        if name in seen:
            raise _fail(str(path), f"{where}.name: duplicate stage name {name!r}")
        seen.add(name)
        try:
            mode = TrainingMode(raw["training_mode"])
        except ValueError:
            raise _fail(
                str(path),
                f"{where}.training_mode: unknown mode {raw['training_mode']!r} "
                f"(expected one of {[m.value for m in TrainingMode]})",
            ) from None
        label = raw.get("split_label_used", "train")
        if label != "train":
            raise _fail(
                str(path),
                f"{where}.split_label_used: only 'train' may feed training, got {label!r}",
            )
        datasets = raw["datasets"]
        if not isinstance(datasets, list) or not datasets \
                or not all(isinstance(d, str) for d in datasets):
            raise _fail(str(path), f"{where}.datasets: must be a non-empty list of paths")
        for rel in datasets:
            resolved = (path.parent / rel)
            if not resolved.is_file():
                raise _fail(str(path), f"{where}.datasets: missing dataset file {resolved}")
        stages.append(ManifestStage(name, tuple(datasets), mode, label))

    return CurriculumManifest(
        stages=tuple(stages),
        base_model=obj["base_model"],
        output_model_names=tuple(names),
        path=path,
    )
