"""The natural-language trace grammar: rendering, parsing, and task templates.

Every sentence of a reasoning trace is one fixed English template with
decimal digit runs in the holes. This module is the single owner of those
templates: the renderer emits them byte-exactly, the parser recognizes
them (strict or lenient), and the subtask input/output formats live here
too. The templates are the interchange format between corpus generation,
model output, and verification — see docs/trace-grammar.md.

Notes on deliberate quirks preserved from the source format:

- The GE10 concat line spells the accumulator ``temp_result`` while the
  LT10 line spells it ``temporary_result``. The renderer reproduces each
  spelling; the parser accepts either in both lines.
- The "Add the multiplication result ..." line is the only one starting
  with a capital letter. Matching is case-insensitive on the leading
  keyword of every template, case-sensitive after it.
- Captured values must be pure decimal digit runs; the parser trims and
  collapses whitespace and tolerates optional spaces around operators.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

from .arith import Branch, DigitBlock, MultiplicationTrace, digit_count


class TaskKind(Enum):
    """The four subtasks plus the composed multiplication task."""

    T1_MULT = "t1_mult"
    T2_ADD = "t2_add"
    T3_EXTRACT = "t3_extract"
    T4_CONCAT = "t4_concat"
    GLOBAL_MULT = "global_mult"


class LineKind(Enum):
    """Tag of one rendered trace line (one tag per sentence template)."""

    HEADER = "header"
    CARRY_INIT = "carry_init"
    DIGIT_EXTRACT = "digit_extract"
    DIGIT_MULT = "digit_mult"
    CARRY_ADD = "carry_add"
    COMPARE_GE10 = "compare_ge10"
    COMPARE_LT10 = "compare_lt10"
    FIRST_DIGIT = "first_digit"
    CONCAT_GE10 = "concat_ge10"
    CONCAT_LT10 = "concat_lt10"
    CONCAT_RESULT = "concat_result"
    CARRY_FROM_SECOND_DIGIT = "carry_from_second_digit"
    FINAL_CARRY_POSITIVE = "final_carry_positive"
    FINAL_CARRY_ZERO = "final_carry_zero"
    FINAL_CARRY_CONCAT = "final_carry_concat"
    FINAL_CONCAT_RESULT = "final_concat_result"
    FINAL_RESULT = "final_result"
    BLANK = "blank"


class ParseMode(Enum):
    STRICT = "strict"
    LENIENT = "lenient"


class IssueKind(Enum):
    MALFORMED = "malformed"
    UNEXPECTED = "unexpected"
    MISSING = "missing"


@dataclass(frozen=True, slots=True)
class Issue:
    line_number: int
    kind: IssueKind
    text: str


@dataclass(frozen=True, slots=True)
class ParsedLine:
    """One recognized line: template tag plus verbatim captured values."""

    number: int
    kind: LineKind
    values: dict[str, str]
    text: str


@dataclass(frozen=True, slots=True)
class ParseOutcome:
    """Result of parsing trace text.

    In strict mode ``trace`` is present iff ``issues`` is empty. In
    lenient mode a best-effort trace may coexist with issues. ``lines``
    is the stream of recognized lines in input order, which the verifier
    replays against the oracle.
    """

    trace: MultiplicationTrace | None
    issues: tuple[Issue, ...]
    lines: tuple[ParsedLine, ...]


# --- templates -------------------------------------------------------------

def _fmt_header(a: int, m: int) -> str:
    return f"multiplying {a} by {m}: {a}*{m}="


def _fmt_carry(c: int) -> str:
    return f"carry={c}"


def _fmt_digit_extract(i: int, a: int, d: int) -> str:
    return f"digit {i} of {a} is {d}"


def _fmt_digit_mult(i: int, a: int, d: int, m: int, tm: int) -> str:
    return f"multiply digit {i} of {a} which is {d} by {m}: temp_mult={d}*{m}={tm}"


def _fmt_carry_add(c: int, tm: int, ta: int) -> str:
    return f"Add the multiplication result to the carry: temp_add=carry+temp_mult={c}+{tm}={ta}"


def _fmt_compare(ta: int, ge: bool) -> str:
    op = ">=" if ge else "<"
    return f"compare the addition result to 10: temp_add={ta}{op}10"


def _fmt_first_digit(ta: int, fd: int) -> str:
    return f"the first digit of temp_add={ta} is fd_result={fd}"


def _fmt_concat_ge(fd: int, before: str) -> str:
    return f"first digit of temp_add which is {fd} is concatenated to the left of temp_result={before}"


def _fmt_concat_lt(before: str) -> str:
    return f"temp_add is concatenated to the left of temporary_result={before}"


def _fmt_concat_result(after: str) -> str:
    return f"the result of the concatenation is {after}"


def _fmt_second_digit_carry(c: int) -> str:
    return f"the second digit of temp_add is {c} which will be the value of the carry: carry={c}"


def _fmt_final_carry_positive(c: int) -> str:
    return f"final carry={c}>0"


def _fmt_final_carry_zero() -> str:
    return "final carry=0"


def _fmt_final_carry_concat(c: int, r: str) -> str:
    return f"the final carry which is {c} is concatenated to the left of the final result which is {r}"


def _fmt_final_result(r: str) -> str:
    return f"the final_result is {r}"


# --- line plan (shared by renderer, verifier, fault injector) --------------

@dataclass(frozen=True, slots=True)
class PlannedLine:
    """One content line of a rendered trace: tag, expected values, text.

    ``group`` is 0 for the header, 1..n for per-digit blocks, n+1 for the
    footer; the renderer puts a blank line between consecutive groups
    except between header and first block.
    """

    group: int
    kind: LineKind
    values: dict[str, str]
    text: str


def _block_plan(group: int, a: int, m: int, b: DigitBlock) -> list[PlannedLine]:
    lines = [
        PlannedLine(group, LineKind.CARRY_INIT,
                    {"carry": str(b.carry_in)}, _fmt_carry(b.carry_in)),
        PlannedLine(group, LineKind.DIGIT_EXTRACT,
                    {"index": str(b.index), "number": str(a), "digit": str(b.digit)},
                    _fmt_digit_extract(b.index, a, b.digit)),
        PlannedLine(group, LineKind.DIGIT_MULT,
                    {"index": str(b.index), "number": str(a), "digit": str(b.digit),
                     "multiplier": str(m), "digit2": str(b.digit),
                     "multiplier2": str(m), "temp_mult": str(b.temp_mult)},
                    _fmt_digit_mult(b.index, a, b.digit, m, b.temp_mult)),
        PlannedLine(group, LineKind.CARRY_ADD,
                    {"carry": str(b.carry_in), "temp_mult": str(b.temp_mult),
                     "temp_add": str(b.temp_add)},
                    _fmt_carry_add(b.carry_in, b.temp_mult, b.temp_add)),
    ]
    if b.branch is Branch.GE10:
        assert b.fd_result is not None
        lines += [
            PlannedLine(group, LineKind.COMPARE_GE10,
                        {"temp_add": str(b.temp_add)}, _fmt_compare(b.temp_add, True)),
            PlannedLine(group, LineKind.FIRST_DIGIT,
                        {"temp_add": str(b.temp_add), "fd_result": str(b.fd_result)},
                        _fmt_first_digit(b.temp_add, b.fd_result)),
            PlannedLine(group, LineKind.CONCAT_GE10,
                        {"fd_result": str(b.fd_result), "result_before": b.result_before},
                        _fmt_concat_ge(b.fd_result, b.result_before)),
            PlannedLine(group, LineKind.CONCAT_RESULT,
                        {"result_after": b.result_after}, _fmt_concat_result(b.result_after)),
            PlannedLine(group, LineKind.CARRY_FROM_SECOND_DIGIT,
                        {"carry": str(b.carry_out), "carry2": str(b.carry_out)},
                        _fmt_second_digit_carry(b.carry_out)),
        ]
    else:
        lines += [
            PlannedLine(group, LineKind.COMPARE_LT10,
                        {"temp_add": str(b.temp_add)}, _fmt_compare(b.temp_add, False)),
            PlannedLine(group, LineKind.CARRY_INIT,
                        {"carry": "0"}, _fmt_carry(0)),
            PlannedLine(group, LineKind.CONCAT_LT10,
                        {"result_before": b.result_before}, _fmt_concat_lt(b.result_before)),
            PlannedLine(group, LineKind.CONCAT_RESULT,
                        {"result_after": b.result_after}, _fmt_concat_result(b.result_after)),
        ]
    return lines


def line_plan(t: MultiplicationTrace) -> list[PlannedLine]:
    """Full ordered content-line plan of a trace (no blank separators)."""
    plan = [
        PlannedLine(0, LineKind.HEADER,
                    {"a": str(t.multiplicand), "m": str(t.multiplier),
                     "a2": str(t.multiplicand), "m2": str(t.multiplier)},
                    _fmt_header(t.multiplicand, t.multiplier)),
    ]
    for i, b in enumerate(t.blocks, start=1):
        plan.extend(_block_plan(i, t.multiplicand, t.multiplier, b))
    footer = len(t.blocks) + 1
    last = t.blocks[-1].result_after
    if t.final_carry > 0:
        plan += [
            PlannedLine(footer, LineKind.FINAL_CARRY_POSITIVE,
                        {"carry": str(t.final_carry)},
                        _fmt_final_carry_positive(t.final_carry)),
            PlannedLine(footer, LineKind.FINAL_CARRY_CONCAT,
                        {"carry": str(t.final_carry), "result_before": last},
                        _fmt_final_carry_concat(t.final_carry, last)),
            PlannedLine(footer, LineKind.FINAL_CONCAT_RESULT,
                        {"result_after": t.final_result},
                        _fmt_concat_result(t.final_result)),
            PlannedLine(footer, LineKind.FINAL_RESULT,
                        {"result": t.final_result}, _fmt_final_result(t.final_result)),
        ]
    else:
        plan += [
            PlannedLine(footer, LineKind.FINAL_CARRY_ZERO,
                        {"carry": "0"}, _fmt_final_carry_zero()),
            PlannedLine(footer, LineKind.FINAL_RESULT,
                        {"result": t.final_result}, _fmt_final_result(t.final_result)),
        ]
    return plan


def render_trace(t: MultiplicationTrace) -> str:
    """Render a trace to its exact text form.

    One line per planned sentence; one blank line between per-digit blocks
    and before the footer; no blank between the header and the first
    block; no trailing newline (the text ends on the final-result line).
    """
    out: list[str] = []
    prev_group = 0
    for line in line_plan(t):
        if line.group != prev_group and line.group >= 2:
            out.append("")
        prev_group = line.group
        out.append(line.text)
    return "\n".join(out)


# --- scanning --------------------------------------------------------------

_WORD_RE = re.compile(r"\w+")
_WS_RE = re.compile(r"\s+")

# Capture-group field names are positional, aligned with each pattern.
_SCAN_TABLE: list[tuple[LineKind, str, tuple[str, ...]]] = [
    (LineKind.HEADER,
     r"multiplying (\d+) by (\d+)\s*:\s*(\d+)\s*\*\s*(\d+)\s*=",
     ("a", "m", "a2", "m2")),
    (LineKind.CARRY_INIT,
     r"carry\s*=\s*(\d+)",
     ("carry",)),
    (LineKind.DIGIT_MULT,
     r"multiply digit (\d+) of (\d+) which is (\d+) by (\d+)\s*:\s*"
     r"temp_mult\s*=\s*(\d+)\s*\*\s*(\d+)\s*=\s*(\d+)",
     ("index", "number", "digit", "multiplier", "digit2", "multiplier2", "temp_mult")),
    (LineKind.DIGIT_EXTRACT,
     r"digit (\d+) of (\d+) is (\d+)",
     ("index", "number", "digit")),
    (LineKind.CARRY_ADD,
     r"add the multiplication result to the carry\s*:\s*"
     r"temp_add\s*=\s*carry\s*\+\s*temp_mult\s*=\s*(\d+)\s*\+\s*(\d+)\s*=\s*(\d+)",
     ("carry", "temp_mult", "temp_add")),
    (LineKind.COMPARE_GE10,
     r"compare the addition result to 10\s*:\s*temp_add\s*=\s*(\d+)\s*>=\s*10",
     ("temp_add",)),
    (LineKind.COMPARE_LT10,
     r"compare the addition result to 10\s*:\s*temp_add\s*=\s*(\d+)\s*<\s*10",
     ("temp_add",)),
    (LineKind.FIRST_DIGIT,
     r"the first digit of temp_add\s*=\s*(\d+) is fd_result\s*=\s*(\d+)",
     ("temp_add", "fd_result")),
    (LineKind.CONCAT_GE10,
     r"first digit of temp_add which is (\d+) is concatenated to the left of "
     r"(?:temp_result|temporary_result)\s*=\s*(\d*)",
     ("fd_result", "result_before")),
    (LineKind.CONCAT_LT10,
     r"temp_add is concatenated to the left of "
     r"(?:temporary_result|temp_result)\s*=\s*(\d*)",
     ("result_before",)),
    (LineKind.CONCAT_RESULT,
     r"the result of the concatenation is (\d+)",
     ("result_after",)),
    (LineKind.CARRY_FROM_SECOND_DIGIT,
     r"the second digit of temp_add is (\d+) which will be the value of the carry\s*:\s*"
     r"carry\s*=\s*(\d+)",
     ("carry", "carry2")),
    (LineKind.FINAL_CARRY_POSITIVE,
     r"final carry\s*=\s*(\d+)\s*>\s*0",
     ("carry",)),
    # Generalized so a doctored carry value still scans (renderer emits 0 only).
    (LineKind.FINAL_CARRY_ZERO,
     r"final carry\s*=\s*(\d+)",
     ("carry",)),
    (LineKind.FINAL_CARRY_CONCAT,
     r"the final carry which is (\d+) is concatenated to the left of "
     r"the final result which is (\d+)",
     ("carry", "result_before")),
    (LineKind.FINAL_RESULT,
     r"the final_result is (\d+)",
     ("result",)),
]

_COMPILED: list[tuple[LineKind, re.Pattern[str], tuple[str, ...]]] = [
    (kind, re.compile(pattern), fields) for kind, pattern, fields in _SCAN_TABLE
]

# Dispatch on the lowercased first word of each template.
_DISPATCH: dict[str, list[tuple[LineKind, re.Pattern[str], tuple[str, ...]]]] = {}
for _kind, _rx, _fields in _COMPILED:
    _keyword = _WORD_RE.match(_rx.pattern).group(0)  # type: ignore[union-attr]
    _DISPATCH.setdefault(_keyword, []).append((_kind, _rx, _fields))

_SENTINEL_RE = re.compile(r"[Tt]he\s+final_result\s+is\s+(\d+)")


def normalize_line(line: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    if "  " not in line and "\t" not in line:
        return line.strip()
    return _WS_RE.sub(" ", line.strip())


def scan_line(
    line: str,
) -> tuple[LineKind, re.Match[str], tuple[str, ...]] | None:
    """Match one normalized line against the templates.

    Returns (kind, match, field names) or None when no template applies.
    Only the leading keyword is matched case-insensitively.
    """
    word = _WORD_RE.match(line)
    if word is None:
        return None
    token = word.group(0)
    keyword = token.lower()
    candidates = _DISPATCH.get(keyword)
    if not candidates:
        return None
    canon = line if token == keyword else keyword + line[word.end():]
    for kind, rx, fields in candidates:
        m = rx.fullmatch(canon)
        if m is not None:
            return kind, m, fields
    return None


def _scan(text: str) -> tuple[list[ParsedLine], list[tuple[int, str]]]:
    """Split text into recognized lines and raw unrecognized lines."""
    parsed: list[ParsedLine] = []
    unknown: list[tuple[int, str]] = []
    for number, raw in enumerate(text.split("\n"), start=1):
        line = normalize_line(raw)
        if not line:
            continue
        hit = scan_line(line)
        if hit is None:
            unknown.append((number, raw))
            continue
        kind, m, fields = hit
        parsed.append(ParsedLine(number, kind, dict(zip(fields, m.groups())), line))
    return parsed, unknown


def detect_terminal(text: str) -> bool:
    """True iff the terminal sentence "the final_result is N" occurs in text."""
    return _SENTINEL_RE.search(text) is not None


def final_result_digits(text: str) -> str | None:
    """Digits of the last terminal sentence in text, or None if absent."""
    last = None
    for m in _SENTINEL_RE.finditer(text):
        last = m.group(1)
    return last


# --- structural walk / trace assembly --------------------------------------

_COMPARES = (LineKind.COMPARE_GE10, LineKind.COMPARE_LT10)
_FOOTER_STARTS = (LineKind.FINAL_CARRY_POSITIVE, LineKind.FINAL_CARRY_ZERO)


class _Walk:
    """Consumes a recognized-line stream in grammar order, assembling a trace.

    Strict mode aborts at the first structural deviation. Lenient mode
    recovers: a line matching a later expectation of the current unit
    fast-forwards (recording Missing), anything else is skipped as
    Unexpected.
    """

    def __init__(self, lines: list[ParsedLine], strict: bool) -> None:
        self.lines = lines
        self.strict = strict
        self.pos = 0
        self.issues: list[Issue] = []
        self.out: list[ParsedLine] = []
        self.aborted = False
        self.header: ParsedLine | None = None
        self.blocks: list[DigitBlock] = []
        self.final_carry: int | None = None
        self.final_result: str | None = None
        self.saw_final_line = False

    def _peek(self) -> ParsedLine | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def _missing_at(self) -> int:
        nxt = self._peek()
        if nxt is not None:
            return nxt.number
        return self.lines[-1].number + 1 if self.lines else 1

    def _fail(self, issue: Issue) -> None:
        self.issues.append(issue)
        if self.strict:
            self.aborted = True

    def _take(self, want: tuple[LineKind, ...],
              upcoming: tuple[LineKind, ...] = ()) -> ParsedLine | None:
        """Consume the next line if it has one of the wanted kinds.

        ``upcoming`` lists kinds that legitimately follow the wanted line;
        in lenient mode, seeing one of those means the wanted line is
        missing rather than the stream being noise.
        """
        while not self.aborted:
            nxt = self._peek()
            if nxt is None:
                self._fail(Issue(self._missing_at(), IssueKind.MISSING,
                                 f"expected {', '.join(k.value for k in want)}"))
                return None
            if nxt.kind in want:
                self.pos += 1
                self.out.append(nxt)
                return nxt
            if self.strict:
                self._fail(Issue(nxt.number, IssueKind.UNEXPECTED, nxt.text))
                return None
            if nxt.kind in upcoming:
                self.issues.append(Issue(nxt.number, IssueKind.MISSING,
                                         f"expected {', '.join(k.value for k in want)}"))
                return None
            self.issues.append(Issue(nxt.number, IssueKind.UNEXPECTED, nxt.text))
            self.pos += 1
        return None

    def run(self) -> None:
        self._header()
        while not self.aborted:
            nxt = self._peek()
            if nxt is None:
                break
            if nxt.kind is LineKind.CARRY_INIT:
                self._block()
            elif nxt.kind in _FOOTER_STARTS or nxt.kind is LineKind.FINAL_RESULT:
                break
            elif self.strict:
                self._fail(Issue(nxt.number, IssueKind.UNEXPECTED, nxt.text))
            else:
                # stray templated line between blocks (a repeated header, say)
                self.issues.append(Issue(nxt.number, IssueKind.UNEXPECTED, nxt.text))
                self.pos += 1
        self._footer()
        if not self.aborted:
            for left in self.lines[self.pos:]:
                self._fail(Issue(left.number, IssueKind.UNEXPECTED, left.text))
                if self.aborted:
                    break

    def _header(self) -> None:
        got = self._take((LineKind.HEADER,), upcoming=(LineKind.CARRY_INIT,))
        if got is not None:
            self.header = got

    def _block(self) -> None:
        rest = (LineKind.DIGIT_EXTRACT, LineKind.DIGIT_MULT, LineKind.CARRY_ADD,
                *_COMPARES, *_FOOTER_STARTS, LineKind.FINAL_RESULT)
        carry = self._take((LineKind.CARRY_INIT,), upcoming=rest)
        rest = rest[1:]
        extract = self._take((LineKind.DIGIT_EXTRACT,), upcoming=rest)
        rest = rest[1:]
        mult = self._take((LineKind.DIGIT_MULT,), upcoming=rest)
        rest = rest[1:]
        add = self._take((LineKind.CARRY_ADD,), upcoming=rest)
        compare = self._take(_COMPARES,
                             upcoming=(*_FOOTER_STARTS, LineKind.FINAL_RESULT))
        if self.aborted:
            return

        fd_line = concat = result = second = reset = None
        if compare is not None and compare.kind is LineKind.COMPARE_GE10:
            tail = (LineKind.CONCAT_GE10, LineKind.CONCAT_RESULT,
                    LineKind.CARRY_FROM_SECOND_DIGIT, LineKind.CARRY_INIT,
                    *_FOOTER_STARTS, LineKind.FINAL_RESULT)
            fd_line = self._take((LineKind.FIRST_DIGIT,), upcoming=tail)
            concat = self._take((LineKind.CONCAT_GE10,), upcoming=tail[1:])
            result = self._take((LineKind.CONCAT_RESULT,), upcoming=tail[2:])
            second = self._take((LineKind.CARRY_FROM_SECOND_DIGIT,), upcoming=tail[3:])
        else:
            tail = (LineKind.CONCAT_LT10, LineKind.CONCAT_RESULT,
                    LineKind.CARRY_INIT, *_FOOTER_STARTS, LineKind.FINAL_RESULT)
            reset = self._take((LineKind.CARRY_INIT,), upcoming=tail)
            concat = self._take((LineKind.CONCAT_LT10,), upcoming=tail[1:])
            result = self._take((LineKind.CONCAT_RESULT,), upcoming=tail[2:])
        if self.aborted:
            return

        ge = compare is not None and compare.kind is LineKind.COMPARE_GE10
        if second is not None:
            carry_out = int(second.values["carry"])
        elif reset is not None:
            carry_out = int(reset.values["carry"])
        else:
            carry_out = 0
        self.blocks.append(DigitBlock(
            index=int(extract.values["index"]) if extract else len(self.blocks) + 1,
            carry_in=int(carry.values["carry"]) if carry else 0,
            digit=int(extract.values["digit"]) if extract else 0,
            temp_mult=int(mult.values["temp_mult"]) if mult else 0,
            temp_add=int(add.values["temp_add"]) if add else 0,
            branch=Branch.GE10 if ge else Branch.LT10,
            fd_result=int(fd_line.values["fd_result"]) if ge and fd_line else None,
            carry_out=carry_out,
            result_before=concat.values["result_before"] if concat else "",
            result_after=result.values["result_after"] if result else "",
        ))

    def _footer(self) -> None:
        if self.aborted:
            return
        start = self._take((*_FOOTER_STARTS,), upcoming=(LineKind.FINAL_RESULT,))
        if self.aborted:
            return
        if start is not None and start.kind is LineKind.FINAL_CARRY_POSITIVE:
            self.final_carry = int(start.values["carry"])
            self._take((LineKind.FINAL_CARRY_CONCAT,),
                       upcoming=(LineKind.CONCAT_RESULT, LineKind.FINAL_RESULT))
            got = self._take((LineKind.CONCAT_RESULT,),
                             upcoming=(LineKind.FINAL_RESULT,))
            if got is not None:
                self.out[-1] = replace(got, kind=LineKind.FINAL_CONCAT_RESULT)
        elif start is not None:
            self.final_carry = int(start.values["carry"])
        final = self._take((LineKind.FINAL_RESULT,), upcoming=())
        if final is not None:
            self.final_result = final.values["result"]
            self.saw_final_line = True

    def assemble(self) -> MultiplicationTrace | None:
        if self.strict and self.issues:
            return None
        if self.header is None or not self.blocks or not self.saw_final_line:
            return None
        # A skeleton needs at least one real per-digit step.
        if not any(b.digit or b.temp_mult or b.result_after for b in self.blocks):
            return None
        return MultiplicationTrace(
            multiplicand=int(self.header.values["a"]),
            multiplier=int(self.header.values["m"]),
            blocks=tuple(self.blocks),
            final_carry=self.final_carry if self.final_carry is not None else 0,
            final_result=self.final_result or "",
        )


def parse_trace(text: str, mode: ParseMode) -> ParseOutcome:
    """Parse trace text into structure and issues.

    Strict: every non-blank line must match a template and appear in
    grammar order; any deviation yields issues and no trace. Values are
    captured verbatim — arithmetic correctness is the verifier's job.
    Lenient: unknown lines become Unexpected issues and are skipped; a
    best-effort trace is returned whenever a header, at least one block
    skeleton, and a final-result line are found.
    """
    parsed, unknown = _scan(text)
    issues: list[Issue] = []
    if mode is ParseMode.STRICT:
        for number, raw in unknown:
            issues.append(Issue(number, IssueKind.MALFORMED, raw))
        if issues:
            return ParseOutcome(None, tuple(issues), tuple(parsed))
        walk = _Walk(parsed, strict=True)
        walk.run()
        issues.extend(walk.issues)
        return ParseOutcome(walk.assemble(), tuple(issues), tuple(walk.out))

    for number, raw in unknown:
        kind = IssueKind.MALFORMED if _looks_templated(raw) else IssueKind.UNEXPECTED
        issues.append(Issue(number, kind, raw))
    walk = _Walk(parsed, strict=False)
    walk.run()
    issues.extend(walk.issues)
    issues.sort(key=lambda i: i.line_number)
    return ParseOutcome(walk.assemble(), tuple(issues), tuple(walk.out))


def _looks_templated(raw: str) -> bool:
    """Heuristic: the line starts like a known template but fails its body."""
    word = _WORD_RE.match(normalize_line(raw))
    return word is not None and word.group(0).lower() in _DISPATCH


# --- subtask templates ------------------------------------------------------

def ordinal(n: int) -> str:
    """1 -> '1st', 2 -> '2nd', 3 -> '3rd', 4 -> '4th', 11 -> '11th', ..."""
    if n % 100 in (11, 12, 13):
        return f"{n}th"
    return f"{n}{({1: 'st', 2: 'nd', 3: 'rd'}.get(n % 10, 'th'))}"


def render_subtask(kind: TaskKind, **params: int) -> tuple[str, str]:
    """Input/output text pair for one subtask example.

    Parameter names and ranges: T1_MULT(a, b) with both in [0, 9];
    T2_ADD(x, y) with x in [0, 99], y in [0, 9]; T3_EXTRACT(n, pos) with n
    in [1000, 999999] and pos a valid 1-based most-significant-first
    position; T4_CONCAT(left, right) with left in [1, 99] and right in
    [1000, 999999].
    """
    if kind is TaskKind.T1_MULT:
        a, b = params["a"], params["b"]
        if not (0 <= a <= 9 and 0 <= b <= 9):
            raise ValueError(f"t1_mult operands must be single digits: {a}, {b}")
        return f"{a} by {b}: {a}*{b} = ", str(a * b)
    if kind is TaskKind.T2_ADD:
        x, y = params["x"], params["y"]
        if not (0 <= x <= 99 and 0 <= y <= 9):
            raise ValueError(f"t2_add operands out of range: {x}, {y}")
        return f"{x} plus {y}: {x}+{y}=", str(x + y)
    if kind is TaskKind.T3_EXTRACT:
        n, pos = params["n"], params["pos"]
        if not 1000 <= n <= 999999:
            raise ValueError(f"t3_extract number must have 4 to 6 digits: {n}")
        if not 1 <= pos <= digit_count(n):
            raise ValueError(f"t3_extract position out of range: {pos} for {n}")
        digit = str(n)[pos - 1]
        return f"The {ordinal(pos)} digit from {n} is ", digit
    if kind is TaskKind.T4_CONCAT:
        left, right = params["left"], params["right"]
        if not 1 <= left <= 99:
            raise ValueError(f"t4_concat left operand must have 1 or 2 digits: {left}")
        if not 1000 <= right <= 999999:
            raise ValueError(f"t4_concat right operand must have 4 to 6 digits: {right}")
        return f"Concatenating {left} to {right} on the left gives ", f"{left}{right}"
    raise ValueError(f"no subtask template for {kind}")


def header_line(a: int, m: int) -> str:
    """The question form of the composed task: the trace's header line."""
    return _fmt_header(a, m)
