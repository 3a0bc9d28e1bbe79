"""Step-level trace verification against the exact oracle.

Verification does not trust the trace's own internal consistency: it
recomputes the whole walk with the oracle and compares every captured
value line by line, so a globally self-consistent but wrong-algorithm
trace still fails. The header line is optional in the verified text —
the operands come from the caller, and corpus outputs store the header
as the question, not the answer.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .arith import MultiplicationTrace, schoolbook_trace
from .grammar import (
    LineKind,
    ParseMode,
    ParsedLine,
    PlannedLine,
    final_result_digits,
    header_line,
    line_plan,
    parse_trace,
    render_trace,
    scan_line,
)


class Verdict(Enum):
    VALID = "valid"
    INVALID = "invalid"
    UNPARSEABLE = "unparseable"


class ErrorKind(Enum):
    MALFORMED = "malformed"
    ARITHMETIC_ERROR = "arithmetic_error"
    STATE_MISMATCH = "state_mismatch"
    BRANCH_ERROR = "branch_error"
    ORDER_ERROR = "order_error"
    FINAL_MISMATCH = "final_mismatch"


@dataclass(frozen=True, slots=True)
class FirstError:
    line_number: int
    kind: ErrorKind


@dataclass(frozen=True, slots=True)
class VerificationReport:
    verdict: Verdict
    final_correct: bool
    first_error: FirstError | None
    steps_checked: int
    steps_correct: int

    def to_obj(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "final_correct": self.final_correct,
            "first_error": None if self.first_error is None else {
                "line_number": self.first_error.line_number,
                "kind": self.first_error.kind.value,
            },
            "steps_checked": self.steps_checked,
            "steps_correct": self.steps_correct,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj())


# Error kind per (line kind, field). Carry and accumulator fields are
# continuity state; temp_mult/temp_add/fd and the extracted digit are
# computed values; everything else is an echo of walk state.
_VALUE_FIELDS = {
    (LineKind.DIGIT_EXTRACT, "digit"),
    (LineKind.DIGIT_MULT, "temp_mult"),
    (LineKind.CARRY_ADD, "temp_mult"),
    (LineKind.CARRY_ADD, "temp_add"),
    (LineKind.COMPARE_GE10, "temp_add"),
    (LineKind.COMPARE_LT10, "temp_add"),
    (LineKind.FIRST_DIGIT, "temp_add"),
    (LineKind.FIRST_DIGIT, "fd_result"),
}

_STRING_FIELDS = {"result_before", "result_after", "result"}


def _kind_for(line_kind: LineKind, field: str) -> ErrorKind:
    if line_kind is LineKind.FINAL_RESULT:
        return ErrorKind.FINAL_MISMATCH
    if (line_kind, field) in _VALUE_FIELDS:
        return ErrorKind.ARITHMETIC_ERROR
    return ErrorKind.STATE_MISMATCH


def _first_mismatch(expected: PlannedLine, observed: ParsedLine) -> str | None:
    for field, want in expected.values.items():
        got = observed.values.get(field)
        if got == want:
            continue
        if got is None or field in _STRING_FIELDS:
            return field
        if int(got) != int(want):  # tolerate doctored leading zeros
            return field
    return None


_COMPARE_KINDS = {LineKind.COMPARE_GE10, LineKind.COMPARE_LT10}


def _replay(plan: list[PlannedLine], obs: tuple[ParsedLine, ...]):
    """Two-pointer walk of oracle plan vs observed lines.

    Returns (first_error, steps_checked, steps_correct, complete).
    """
    first_error: FirstError | None = None
    checked = correct = 0
    complete = True

    def note(line_number: int, kind: ErrorKind) -> None:
        nonlocal first_error
        if first_error is None:
            first_error = FirstError(line_number, kind)

    i = j = 0
    # The header is checked when present, never required.
    if plan and plan[0].kind is LineKind.HEADER:
        if not obs or obs[0].kind is not LineKind.HEADER:
            i = 1
    while i < len(plan):
        e = plan[i]
        if j >= len(obs):
            complete = False
            anchor = obs[-1].number + 1 if obs else 1
            note(anchor, ErrorKind.ORDER_ERROR)
            break
        o = obs[j]
        if o.kind is e.kind:
            checked += 1
            field = _first_mismatch(e, o)
            if field is None:
                correct += 1
            else:
                note(o.number, _kind_for(e.kind, field))
            i += 1
            j += 1
        elif o.kind in _COMPARE_KINDS and e.kind in _COMPARE_KINDS:
            checked += 1
            note(o.number, ErrorKind.BRANCH_ERROR)
            i += 1
            j += 1
        elif e.kind not in {x.kind for x in obs[j:]}:
            complete = False
            note(o.number, ErrorKind.ORDER_ERROR)
            i += 1
        else:
            note(o.number, ErrorKind.ORDER_ERROR)
            j += 1
    if j < len(obs):
        note(obs[j].number, ErrorKind.ORDER_ERROR)
    return first_error, checked, correct, complete


def _has_header(text: str) -> bool:
    for raw in text.split("\n"):
        line = " ".join(raw.split())
        if not line:
            continue
        hit = scan_line(line)
        if hit is not None and hit[0] is LineKind.HEADER:
            return True
    return False


def score_final(text: str, a: int, m: int) -> bool:
    """True iff the terminal sentence exists and states exactly a*m.

    Only the last terminal sentence counts; intermediate step errors are
    ignored. The comparison is on digit strings, so a positional artifact
    like "0012" never passes for 12.
    """
    return final_result_digits(text) == str(a * m)


def verify_trace(text: str, a: int, m: int) -> VerificationReport:
    """Replay the oracle walk for a*m against trace text.

    The text is parsed leniently (a synthesized header is prepended when
    the text starts without one), then every captured value is compared to
    the oracle's. The first deviation is localized by line number and
    classified; chatter lines that match no template are ignored.
    """
    if a < 0:
        raise ValueError(f"multiplicand must be non-negative, got {a}")
    if not 0 <= m <= 9:
        raise ValueError(f"multiplier must be a single digit, got {m}")

    final_ok = score_final(text, a, m)
    offset = 0
    if not _has_header(text):
        text = header_line(a, m) + "\n" + text
        offset = 1
    outcome = parse_trace(text, ParseMode.LENIENT)
    if outcome.trace is None:
        return VerificationReport(Verdict.UNPARSEABLE, final_ok, None, 0, 0)

    oracle = schoolbook_trace(a, m, allow_zero_multiplicand=True)
    plan = line_plan(oracle)
    first_error, checked, correct, complete = _replay(plan, outcome.lines)

    if first_error is None and not final_ok:
        # Trailing chatter can restate a different final result; the last
        # terminal sentence is the one that counts.
        lines = [ln for ln in outcome.lines if ln.kind is LineKind.FINAL_RESULT]
        anchor = lines[-1].number if lines else 0
        first_error = FirstError(anchor, ErrorKind.FINAL_MISMATCH)
    if first_error is not None and offset and first_error.line_number > 0:
        # report positions in the caller's text, not the synthesized one
        first_error = FirstError(first_error.line_number - offset, first_error.kind)

    valid = complete and first_error is None and final_ok
    return VerificationReport(
        verdict=Verdict.VALID if valid else Verdict.INVALID,
        final_correct=final_ok,
        first_error=None if valid else first_error,
        steps_checked=checked,
        steps_correct=correct,
    )


# --- fault injection ---------------------------------------------------------

@dataclass(frozen=True, slots=True)
class FaultSite:
    """One mutable numeric field of one rendered line."""

    line_number: int
    kind: LineKind
    field: str
    value: str


def fault_sites(t: MultiplicationTrace) -> list[FaultSite]:
    """All numeric fields of the rendered trace, in text order.

    Empty accumulator captures (the first block's bare "temp_result=")
    have no digits to mutate and are not sites.
    """
    sites: list[FaultSite] = []
    for number, raw in enumerate(render_trace(t).split("\n"), start=1):
        if not raw:
            continue
        hit = scan_line(raw)
        assert hit is not None, f"renderer emitted an unscannable line: {raw!r}"
        kind, m, fields = hit
        for field, value in zip(fields, m.groups()):
            if value:
                sites.append(FaultSite(number, kind, field, value))
    return sites


def inject_fault(t: MultiplicationTrace, field_selector: int, seed: int) -> str:
    """Render the trace and corrupt one numeric field.

    ``field_selector`` indexes into ``fault_sites(t)``. The replacement is
    a uniformly chosen different value of the same digit count; accumulator
    strings may receive leading zeros, plain values never do. A no-op
    replacement is impossible by construction.
    """
    sites = fault_sites(t)
    if not 0 <= field_selector < len(sites):
        raise ValueError(
            f"field selector {field_selector} out of range [0, {len(sites)})"
        )
    site = sites[field_selector]
    rng = random.Random(seed)
    n = len(site.value)
    if site.field in _STRING_FIELDS:
        while True:
            mutated = "".join(rng.choice("0123456789") for _ in range(n))
            if mutated != site.value:
                break
    elif n == 1:
        mutated = rng.choice([d for d in "0123456789" if d != site.value])
    else:
        lo, hi = 10 ** (n - 1), 10 ** n - 1
        while True:
            mutated = str(rng.randint(lo, hi))
            if mutated != site.value:
                break

    lines = render_trace(t).split("\n")
    raw = lines[site.line_number - 1]
    hit = scan_line(raw)
    assert hit is not None
    _, m, fields = hit
    group = fields.index(site.field) + 1
    start, end = m.span(group)
    lines[site.line_number - 1] = raw[:start] + mutated + raw[end:]
    return "\n".join(lines)


def verify_batch(
    items: Iterable[tuple[str, int, int]]
) -> list[VerificationReport]:
    """Verify (text, a, m) triples; reports are independent and immutable."""
    return [verify_trace(text, a, m) for text, a, m in items]
