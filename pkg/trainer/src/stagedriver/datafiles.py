"""Reading the dataset JSONL interchange format.

Each line is a JSON object with keys task/input/output/split/meta; the
split field is "train", "eval", or null. Training may only ever see rows
whose split is "train" or absent — eval rows exist in the same files and
must be filtered out, then asserted gone.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class DatasetError(ValueError):
    """A dataset file is missing, malformed, or unusable for training."""


@dataclass(frozen=True, slots=True)
class Row:
    task: str
    input: str
    output: str
    split: str | None


def read_rows(path: str | Path) -> list[Row]:
    """Parse one JSONL dataset file; malformed lines abort with a location."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    rows: list[Row] = []
    with path.open("r", encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                split = obj["split"]
                if split not in (None, "train", "eval"):
                    raise ValueError(f"unknown split label {split!r}")
                rows.append(Row(obj["task"], obj["input"], obj["output"], split))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{number}: bad dataset line: {exc}") from exc
    return rows


def training_rows(rows: list[Row]) -> list[Row]:
    """The trainable subset: rows labeled train, or unlabeled (train-only files)."""
    return [r for r in rows if r.split in (None, "train")]


def ensure_trainable(rows: list[Row], where: str) -> None:
    """Reject any eval-labeled row before it can reach a training backend."""
    leaked = sum(1 for r in rows if r.split == "eval")
    if leaked:
        raise DatasetError(
            f"{where}: {leaked} eval-labeled row(s) in the training selection; "
            f"training must never see the eval split"
        )
