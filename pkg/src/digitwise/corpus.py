"""Deterministic dataset generation and JSONL persistence.

The two small tasks are exhaustive enumerations; the larger ones are
seeded uniform samples drawn with replacement (duplicates are allowed and
reproducible). Identical seeds yield byte-identical JSONL files.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .arith import DigitOrder, extract_digit, schoolbook_trace
from .grammar import TaskKind, header_line, render_subtask, render_trace


class Split(Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True, slots=True)
class Example:
    task: TaskKind
    input: str
    output: str
    meta: dict | None = None
    split: Split | None = None


@dataclass(frozen=True, slots=True)
class Dataset:
    """An ordered collection of examples.

    ``task`` is None for mixed datasets (the merged first training stage).
    ``seed`` is None for exhaustive enumerations, which have no sampling.
    """

    examples: tuple[Example, ...]
    task: TaskKind | None = None
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.examples)

    def with_split(self, split: Split) -> tuple[Example, ...]:
        return tuple(e for e in self.examples if e.split is split)


def gen_t1_mult() -> Dataset:
    """All 100 single-digit by single-digit products, in operand order."""
    examples = []
    for a in range(10):
        for b in range(10):
            inp, out = render_subtask(TaskKind.T1_MULT, a=a, b=b)
            examples.append(Example(TaskKind.T1_MULT, inp, out, {"a": a, "b": b}))
    return Dataset(tuple(examples), task=TaskKind.T1_MULT)


def gen_t2_add() -> Dataset:
    """All 1000 sums of a number in [0, 99] and a digit, in operand order."""
    examples = []
    for x in range(100):
        for y in range(10):
            inp, out = render_subtask(TaskKind.T2_ADD, x=x, y=y)
            examples.append(Example(TaskKind.T2_ADD, inp, out, {"x": x, "y": y}))
    return Dataset(tuple(examples), task=TaskKind.T2_ADD)


def gen_t3_extract(n: int, seed: int) -> Dataset:
    """n random digit extractions from 4- to 6-digit numbers (MSB-first)."""
    if n < 1:
        raise ValueError(f"example count must be >= 1, got {n}")
    rng = random.Random(seed)
    examples = []
    for _ in range(n):
        number = rng.randint(1000, 999999)
        pos = rng.randint(1, len(str(number)))
        inp, out = render_subtask(TaskKind.T3_EXTRACT, n=number, pos=pos)
        assert out == str(extract_digit(number, pos, DigitOrder.MSB_FIRST))
        examples.append(
            Example(TaskKind.T3_EXTRACT, inp, out, {"n": number, "pos": pos})
        )
    return Dataset(tuple(examples), task=TaskKind.T3_EXTRACT, seed=seed)


def gen_t4_concat(n: int, seed: int) -> Dataset:
    """n random left-concatenations of a 1-2 digit number onto a 4-6 digit one."""
    if n < 1:
        raise ValueError(f"example count must be >= 1, got {n}")
    rng = random.Random(seed)
    examples = []
    for _ in range(n):
        left = rng.randint(1, 99)
        right = rng.randint(1000, 999999)
        inp, out = render_subtask(TaskKind.T4_CONCAT, left=left, right=right)
        examples.append(
            Example(TaskKind.T4_CONCAT, inp, out, {"left": left, "right": right})
        )
    return Dataset(tuple(examples), task=TaskKind.T4_CONCAT, seed=seed)


def gen_global(n: int, seed: int) -> Dataset:
    """n random composed multiplications: header question, full trace body.

    Multiplicands are 4 to 6 digits, multipliers in [1, 9] (multiplier 0
    never appears — its trace accumulates leading zeros). The input is the
    trace's header line; the output is everything after it.
    """
    if n < 1:
        raise ValueError(f"example count must be >= 1, got {n}")
    rng = random.Random(seed)
    examples = []
    for _ in range(n):
        a = rng.randint(1000, 999999)
        m = rng.randint(1, 9)
        trace = schoolbook_trace(a, m)
        text = render_trace(trace)
        head, _, body = text.partition("\n")
        assert head == header_line(a, m)
        examples.append(Example(
            TaskKind.GLOBAL_MULT, head, body,
            {"multiplicand": a, "multiplier": m, "product": a * m},
        ))
    return Dataset(tuple(examples), task=TaskKind.GLOBAL_MULT, seed=seed)


def gen_stage1(seed: int) -> Dataset:
    """The merged 1100-example first training stage: t1 then t2, shuffled."""
    merged = list(gen_t1_mult().examples) + list(gen_t2_add().examples)
    random.Random(seed).shuffle(merged)
    return Dataset(tuple(merged), task=None, seed=seed)


def split_dataset(ds: Dataset, eval_fraction: float, seed: int) -> Dataset:
    """Label each example Train or Eval by a deterministic shuffle.

    The eval side gets round(n * eval_fraction) examples; example order is
    preserved, only labels are assigned.
    """
    if not 0 < eval_fraction < 1:
        raise ValueError(f"eval fraction must be in (0, 1), got {eval_fraction}")
    n = len(ds.examples)
    eval_count = round(n * eval_fraction)
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    eval_indices = set(indices[:eval_count])
    labeled = tuple(
        replace(e, split=Split.EVAL if i in eval_indices else Split.TRAIN)
        for i, e in enumerate(ds.examples)
    )
    return Dataset(labeled, task=ds.task, seed=ds.seed)


# --- JSONL persistence -------------------------------------------------------
#
# One UTF-8 JSON object per LF-terminated line, keys exactly
# "task", "input", "output", "split", "meta".

def example_to_obj(e: Example) -> dict:
    return {
        "task": e.task.value,
        "input": e.input,
        "output": e.output,
        "split": e.split.value if e.split is not None else None,
        "meta": e.meta,
    }


def example_from_obj(obj: dict) -> Example:
    return Example(
        task=TaskKind(obj["task"]),
        input=obj["input"],
        output=obj["output"],
        meta=obj.get("meta"),
        split=Split(obj["split"]) if obj.get("split") is not None else None,
    )


def write_jsonl(ds: Dataset, path: str | Path) -> None:
    """Write one JSON object per example; LF line endings, UTF-8."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for e in ds.examples:
                fh.write(json.dumps(example_to_obj(e), ensure_ascii=False))
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc


def read_jsonl(path: str | Path) -> Dataset:
    """Read a dataset back; a malformed line aborts with its line number."""
    path = Path(path)
    examples: list[Example] = []
    try:
        with path.open("r", encoding="utf-8") as fh:
            for number, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                    examples.append(example_from_obj(obj))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise ValueError(
                        f"{path}:{number}: malformed dataset line: {exc}"
                    ) from exc
    except OSError as exc:
        raise OSError(f"cannot read dataset from {path}: {exc}") from exc
    tasks = {e.task for e in examples}
    task = tasks.pop() if len(tasks) == 1 else None
    return Dataset(tuple(examples), task=task)
