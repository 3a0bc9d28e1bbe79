"""Toolkit for digit-by-digit multiplication reasoning traces.

Generates the training corpora for the four arithmetic subtasks and the
composed multiplication task, renders and parses the natural-language
trace grammar, verifies traces step by step against an exact integer
oracle, and evaluates chat-completions endpoints on all of it.
"""
from .arith import (
    Branch,
    DigitBlock,
    DigitOrder,
    MultiplicationTrace,
    add_small,
    concat_left,
    digit_count,
    extract_digit,
    mult_digits,
    schoolbook_trace,
)
from .grammar import (
    Issue,
    IssueKind,
    LineKind,
    ParseMode,
    ParseOutcome,
    ParsedLine,
    TaskKind,
    detect_terminal,
    header_line,
    parse_trace,
    render_subtask,
    render_trace,
)

__all__ = [
    "Branch",
    "DigitBlock",
    "DigitOrder",
    "Issue",
    "IssueKind",
    "LineKind",
    "MultiplicationTrace",
    "ParseMode",
    "ParseOutcome",
    "ParsedLine",
    "TaskKind",
    "add_small",
    "concat_left",
    "detect_terminal",
    "digit_count",
    "extract_digit",
    "header_line",
    "mult_digits",
    "parse_trace",
    "render_subtask",
    "render_trace",
    "schoolbook_trace",
]

__version__ = "0.1.0"
