from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from digitwise.arith import schoolbook_trace
from digitwise.grammar import (
    IssueKind,
    LineKind,
    ParseMode,
    TaskKind,
    detect_terminal,
    final_result_digits,
    header_line,
    line_plan,
    ordinal,
    parse_trace,
    render_subtask,
    render_trace,
)

# The worked 5847*2 example, first block and footer, frozen verbatim.
BLOCK1_LINES = [
    "multiplying 5847 by 2: 5847*2=",
    "carry=0",
    "digit 1 of 5847 is 7",
    "multiply digit 1 of 5847 which is 7 by 2: temp_mult=7*2=14",
    "Add the multiplication result to the carry: temp_add=carry+temp_mult=0+14=14",
    "compare the addition result to 10: temp_add=14>=10",
    "the first digit of temp_add=14 is fd_result=4",
    "first digit of temp_add which is 4 is concatenated to the left of temp_result=",
    "the result of the concatenation is 4",
    "the second digit of temp_add is 1 which will be the value of the carry: carry=1",
]
BLOCK2_LINES = [
    "carry=1",
    "digit 2 of 5847 is 4",
    "multiply digit 2 of 5847 which is 4 by 2: temp_mult=4*2=8",
    "Add the multiplication result to the carry: temp_add=carry+temp_mult=1+8=9",
    "compare the addition result to 10: temp_add=9<10",
    "carry=0",
    "temp_add is concatenated to the left of temporary_result=4",
]
FOOTER_LINES = [
    "final carry=1>0",
    "the final carry which is 1 is concatenated to the left of the final result which is 1694",
    "the result of the concatenation is 11694",
    "the final_result is 11694",
]


def test_render_trace_worked_example_block1_verbatim():
    text = render_trace(schoolbook_trace(5847, 2))
    lines = text.split("\n")
    assert lines[: len(BLOCK1_LINES)] == BLOCK1_LINES


def test_render_trace_worked_example_block2_and_footer():
    text = render_trace(schoolbook_trace(5847, 2))
    for line in BLOCK2_LINES + FOOTER_LINES:
        assert line in text.split("\n")
    assert text.endswith("the final_result is 11694")


def test_render_trace_blocks_separated_by_single_blank_line():
    text = render_trace(schoolbook_trace(5847, 2))
    assert text.count("\n\n") == 4  # 3 block boundaries + footer boundary
    assert "\n\n\n" not in text


def test_render_trace_minimal_lt10_footer():
    text = render_trace(schoolbook_trace(1, 1))
    lines = text.split("\n")
    assert lines[0] == "multiplying 1 by 1: 1*1="
    assert "compare the addition result to 10: temp_add=1<10" in lines
    assert lines[-2] == "final carry=0"
    assert lines[-1] == "the final_result is 1"


def test_render_trace_all_ge10_blocks():
    text = render_trace(schoolbook_trace(9999, 9))
    assert text.count(">=10") == 4
    assert text.endswith(f"the final_result is {9999 * 9}")


def test_renderer_is_deterministic():
    t = schoolbook_trace(380410, 7)
    assert render_trace(t) == render_trace(t)


def test_line_plan_tags_cover_every_rendered_line():
    t = schoolbook_trace(5847, 2)
    plan = line_plan(t)
    rendered = [line for line in render_trace(t).split("\n") if line]
    assert [p.text for p in plan] == rendered


def test_strict_round_trip_worked_example():
    t = schoolbook_trace(5847, 2)
    outcome = parse_trace(render_trace(t), ParseMode.STRICT)
    assert outcome.issues == ()
    assert outcome.trace == t


def test_strict_parse_rejects_garbage():
    outcome = parse_trace("hello world", ParseMode.STRICT)
    assert outcome.trace is None
    assert len(outcome.issues) >= 1
    assert outcome.issues[0].line_number == 1
    assert outcome.issues[0].kind is IssueKind.MALFORMED


def test_strict_parse_rejects_missing_line():
    text = render_trace(schoolbook_trace(5847, 2))
    truncated = "\n".join(
        line for line in text.split("\n") if not line.startswith("digit 2 of")
    )
    outcome = parse_trace(truncated, ParseMode.STRICT)
    assert outcome.trace is None
    assert outcome.issues


def test_lenient_parse_recovers_around_chatter():
    t = schoolbook_trace(5847, 2)
    lines = render_trace(t).split("\n")
    lines.insert(5, "let me think about this step")
    outcome = parse_trace("\n".join(lines), ParseMode.LENIENT)
    assert outcome.trace == t
    assert [i.kind for i in outcome.issues] == [IssueKind.UNEXPECTED]
    assert outcome.issues[0].line_number == 6


def test_lenient_parse_without_skeleton_returns_no_trace():
    outcome = parse_trace("some chatter\nand more chatter", ParseMode.LENIENT)
    assert outcome.trace is None


def test_lenient_trace_coexists_with_malformed_issue():
    # a line that starts like a template but has a broken body is Malformed,
    # yet the surrounding well-formed skeleton is still recovered
    t = schoolbook_trace(5847, 2)
    lines = render_trace(t).split("\n")
    lines.insert(5, "carry=abc")
    outcome = parse_trace("\n".join(lines), ParseMode.LENIENT)
    assert outcome.trace == t
    assert [i.kind for i in outcome.issues] == [IssueKind.MALFORMED]
    assert outcome.issues[0].line_number == 6


def test_lenient_requires_final_result_line():
    text = render_trace(schoolbook_trace(5847, 2))
    prefix = "\n".join(text.split("\n")[:-1])
    outcome = parse_trace(prefix, ParseMode.LENIENT)
    assert outcome.trace is None


def test_parser_accepts_accumulator_spelling_aliases():
    t = schoolbook_trace(5847, 2)
    text = render_trace(t)
    swapped = text.replace("temp_result=", "temporary_result=").replace(
        "temp_add is concatenated to the left of temporary_result",
        "temp_add is concatenated to the left of temp_result",
    )
    outcome = parse_trace(swapped, ParseMode.STRICT)
    assert outcome.trace == t


def test_parser_normalizes_whitespace_and_leading_keyword_case():
    t = schoolbook_trace(12, 3)
    mangled = []
    for line in render_trace(t).split("\n"):
        if line.startswith("Add"):
            line = "add" + line[3:]
        elif line.startswith("carry"):
            line = "Carry" + line[5:]
        mangled.append("  " + line.replace(" ", "  "))
    outcome = parse_trace("\n".join(mangled), ParseMode.STRICT)
    assert outcome.trace == t


def test_parser_tolerates_operator_spacing():
    text = render_trace(schoolbook_trace(41, 2)).replace("*", " * ").replace(">=", " >= ")
    outcome = parse_trace(text, ParseMode.STRICT)
    assert outcome.trace is not None
    assert outcome.trace.final_result == "82"


def test_parsed_line_kinds_follow_grammar_order():
    outcome = parse_trace(render_trace(schoolbook_trace(47, 3)), ParseMode.STRICT)
    kinds = [ln.kind for ln in outcome.lines]
    assert kinds[0] is LineKind.HEADER
    assert kinds[1] is LineKind.CARRY_INIT
    assert LineKind.FINAL_CONCAT_RESULT in kinds or LineKind.FINAL_CARRY_ZERO in kinds
    assert kinds[-1] is LineKind.FINAL_RESULT


@given(st.integers(min_value=1, max_value=999999), st.integers(min_value=1, max_value=9))
@settings(max_examples=200, deadline=None)
def test_strict_round_trip_property(a, m):
    t = schoolbook_trace(a, m)
    outcome = parse_trace(render_trace(t), ParseMode.STRICT)
    assert outcome.issues == ()
    assert outcome.trace == t


@given(st.integers(min_value=1, max_value=999999), st.integers(min_value=1, max_value=9))
@settings(max_examples=100, deadline=None)
def test_lenient_agrees_with_strict_on_clean_text(a, m):
    t = schoolbook_trace(a, m)
    outcome = parse_trace(render_trace(t), ParseMode.LENIENT)
    assert outcome.issues == ()
    assert outcome.trace == t


def test_detect_terminal_full_trace():
    assert detect_terminal(render_trace(schoolbook_trace(5847, 2)))


def test_detect_terminal_absent_in_prefix():
    text = render_trace(schoolbook_trace(5847, 2))
    assert not detect_terminal("\n".join(text.split("\n")[:10]))


@given(st.integers(min_value=1, max_value=99999), st.integers(min_value=1, max_value=9))
@settings(max_examples=50, deadline=None)
def test_detect_terminal_false_for_every_proper_prefix(a, m):
    text = render_trace(schoolbook_trace(a, m))
    cut = text.rfind("\n")
    assert detect_terminal(text)
    assert not detect_terminal(text[:cut])


def test_detect_terminal_embedded_mid_text():
    assert detect_terminal("blah blah\nthe final_result is 42\nmore text")
    assert detect_terminal("so the final_result is 42, done")


def test_final_result_digits_takes_last_sentinel():
    assert final_result_digits("the final_result is 12\nthe final_result is 34") == "34"
    assert final_result_digits("no sentinel here") is None


def test_render_subtask_t1():
    assert render_subtask(TaskKind.T1_MULT, a=6, b=8) == ("6 by 8: 6*8 = ", "48")


def test_render_subtask_t2():
    assert render_subtask(TaskKind.T2_ADD, x=12, y=6) == ("12 plus 6: 12+6=", "18")


def test_render_subtask_t3():
    assert render_subtask(TaskKind.T3_EXTRACT, n=393721, pos=3) == \
        ("The 3rd digit from 393721 is ", "3")


def test_render_subtask_t4():
    assert render_subtask(TaskKind.T4_CONCAT, left=16, right=375347) == \
        ("Concatenating 16 to 375347 on the left gives ", "16375347")


def test_render_subtask_rejects_out_of_range():
    with pytest.raises(ValueError):
        render_subtask(TaskKind.T1_MULT, a=10, b=3)
    with pytest.raises(ValueError):
        render_subtask(TaskKind.T3_EXTRACT, n=999, pos=1)
    with pytest.raises(ValueError):
        render_subtask(TaskKind.T4_CONCAT, left=100, right=123456)
    with pytest.raises(ValueError):
        render_subtask(TaskKind.GLOBAL_MULT)


@pytest.mark.parametrize(
    ("n", "suffix"),
    [(1, "1st"), (2, "2nd"), (3, "3rd"), (4, "4th"), (6, "6th"),
     (11, "11th"), (12, "12th"), (13, "13th"), (21, "21st"), (102, "102nd")],
)
def test_ordinal_general_rule(n, suffix):
    assert ordinal(n) == suffix


def test_header_line_matches_trace_head():
    text = render_trace(schoolbook_trace(5847, 2))
    assert text.split("\n")[0] == header_line(5847, 2)
