"""Endpoint evaluation on subtask and composed-multiplication datasets.

Subtask answers are scored by exact string match after whitespace trim:
the expected outputs are bare numerals, and a formatting slip is a real
failure. The composed task is scored two ways — final-answer match (the
headline metric) and full step validity (a stricter diagnostic).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

from .corpus import Dataset, Example, Split
from .grammar import TaskKind
from .harness import EndpointConfig, batch_generate
from .verifier import Verdict, score_final, verify_trace


class EvalMode(Enum):
    DIRECT = "direct"
    COT = "cot"


@dataclass(frozen=True, slots=True)
class PerExample:
    input: str
    expected: str
    got: str
    correct: bool
    iterations: int
    error: str | None = None


@dataclass(frozen=True, slots=True)
class EvalReport:
    task: TaskKind | None
    mode: EvalMode
    total: int
    correct: int
    accuracy: float
    step_valid_rate: float | None
    per_example: tuple[PerExample, ...]

    def to_obj(self) -> dict:
        return {
            "task": self.task.value if self.task else None,
            "mode": self.mode.value,
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "step_valid_rate": self.step_valid_rate,
            "per_example": [
                {
                    "input": p.input,
                    "expected": p.expected,
                    "got": p.got,
                    "correct": p.correct,
                    "iterations": p.iterations,
                    "error": p.error,
                }
                for p in self.per_example
            ],
        }


_HEADER_OPERANDS = re.compile(r"multiplying (\d+) by (\d)")


def _operands(e: Example) -> tuple[int, int]:
    if e.meta and "multiplicand" in e.meta and "multiplier" in e.meta:
        return int(e.meta["multiplicand"]), int(e.meta["multiplier"])
    m = _HEADER_OPERANDS.search(e.input)
    if m is None:
        raise ValueError(f"cannot recover operands of example {e.input!r}")
    return int(m.group(1)), int(m.group(2))


def _eval_examples(ds: Dataset) -> list[Example]:
    examples = [e for e in ds.examples if e.split is Split.EVAL]
    if not examples:
        raise ValueError("dataset has no eval-labeled examples to evaluate")
    return examples


def eval_subtask(
    ds: Dataset, cfg: EndpointConfig, parallelism: int = 1
) -> EvalReport:
    """Score every Eval example with a single-turn prompt, exact match."""
    examples = _eval_examples(ds)
    logs = batch_generate(
        cfg, [e.input for e in examples], parallelism=parallelism, max_iter=1
    )
    rows = []
    correct = 0
    for e, log in zip(examples, logs):
        got = log.stitched_output.strip()
        ok = log.error is None and got == e.output
        correct += ok
        rows.append(PerExample(e.input, e.output, got, ok, log.iterations, log.error))
    return EvalReport(
        task=ds.task,
        mode=EvalMode.DIRECT,
        total=len(rows),
        correct=correct,
        accuracy=correct / len(rows),
        step_valid_rate=None,
        per_example=tuple(rows),
    )


def eval_global(
    ds: Dataset,
    cfg: EndpointConfig,
    mode: EvalMode,
    parallelism: int = 1,
    max_iter: int = 10,
) -> EvalReport:
    """Evaluate the composed multiplication task.

    CoT mode runs the recursive prompting loop on the header question and
    scores the stitched reasoning: final-answer match fills ``correct``,
    full oracle-replay validity fills ``step_valid_rate``. Direct mode is
    the baseline protocol — a single turn expected to answer with the bare
    product.
    """
    if ds.task is not TaskKind.GLOBAL_MULT:
        raise ValueError(f"eval_global needs a {TaskKind.GLOBAL_MULT.value} dataset")
    examples = _eval_examples(ds)
    operands = [_operands(e) for e in examples]

    rows = []
    correct = 0
    valid = 0
    if mode is EvalMode.COT:
        logs = batch_generate(
            cfg, [e.input for e in examples],
            parallelism=parallelism, max_iter=max_iter,
        )
        for e, (a, m), log in zip(examples, operands, logs):
            got = log.stitched_output
            ok = log.error is None and score_final(got, a, m)
            step_valid = (
                log.error is None
                and verify_trace(got, a, m).verdict is Verdict.VALID
            )
            correct += ok
            valid += step_valid
            rows.append(
                PerExample(e.input, str(a * m), got, ok, log.iterations, log.error)
            )
        rate: float | None = valid / len(rows)
    else:
        logs = batch_generate(
            cfg, [e.input for e in examples], parallelism=parallelism, max_iter=1
        )
        for e, (a, m), log in zip(examples, operands, logs):
            got = log.stitched_output.strip()
            ok = log.error is None and got == str(a * m)
            correct += ok
            rows.append(
                PerExample(e.input, str(a * m), got, ok, log.iterations, log.error)
            )
        rate = None

    return EvalReport(
        task=ds.task,
        mode=mode,
        total=len(rows),
        correct=correct,
        accuracy=correct / len(rows),
        step_valid_rate=rate,
        per_example=tuple(rows),
    )


# --- reporting ---------------------------------------------------------------

def format_accuracy(accuracy: float) -> str:
    """0.421 -> '42.1%'; 0.0 -> '0.0%'."""
    return f"{accuracy * 100:.1f}%"


def _task_label(task: TaskKind | None) -> str:
    if task is None:
        return "t1_mult + t2_add"
    return task.value


def _mode_label(mode: EvalMode) -> str:
    return {EvalMode.DIRECT: "Direct", EvalMode.COT: "CoT"}[mode]


def _aligned(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    out = []
    for idx, row in enumerate(rows):
        out.append(" | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if idx == 0:
            out.append("-+-".join("-" * w for w in widths))
    return out


def render_report(reports: list[EvalReport]) -> tuple[str, str]:
    """Render reports as an aligned text table plus machine-readable JSON.

    Composed-task reports collapse into a single "Accuracy Rate" row with
    one value column per evaluated protocol; subtask reports get one row
    per task with a single accuracy column.
    """
    if not reports:
        raise ValueError("nothing to report")
    global_reports = [r for r in reports if r.task is TaskKind.GLOBAL_MULT]
    subtask_reports = [r for r in reports if r.task is not TaskKind.GLOBAL_MULT]

    sections: list[str] = []
    if global_reports:
        rows = [["Task"] + [_mode_label(r.mode) for r in global_reports],
                ["Accuracy Rate"] + [format_accuracy(r.accuracy) for r in global_reports]]
        sections.extend(_aligned(rows))
        steps = [r for r in global_reports if r.step_valid_rate is not None]
        if steps:
            sections.append("")
            for r in steps:
                sections.append(
                    f"step validity ({_mode_label(r.mode)}): "
                    f"{format_accuracy(r.step_valid_rate)}"
                )
    if subtask_reports:
        if sections:
            sections.append("")
        rows = [["Task", "Accuracy Rate"]]
        rows += [[_task_label(r.task), format_accuracy(r.accuracy)]
                 for r in subtask_reports]
        sections.extend(_aligned(rows))

    table = "\n".join(sections)
    payload = json.dumps({"reports": [r.to_obj() for r in reports]}, indent=2)
    return table, payload
