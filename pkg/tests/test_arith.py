from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from digitwise.arith import (
    Branch,
    DigitOrder,
    add_small,
    concat_left,
    digit_count,
    extract_digit,
    mult_digits,
    schoolbook_trace,
)


def test_mult_digits_table_example():
    assert mult_digits(6, 8) == 48


def test_mult_digits_zero_and_max():
    assert mult_digits(0, 9) == 0
    assert mult_digits(9, 9) == 81


def test_mult_digits_rejects_out_of_range():
    with pytest.raises(ValueError):
        mult_digits(10, 1)
    with pytest.raises(ValueError):
        mult_digits(3, -1)


def test_add_small_table_example():
    assert add_small(12, 6) == 18


def test_add_small_bounds():
    assert add_small(0, 0) == 0
    assert add_small(99, 9) == 108


def test_add_small_rejects_out_of_range():
    with pytest.raises(ValueError):
        add_small(100, 1)
    with pytest.raises(ValueError):
        add_small(5, 10)


def test_extract_digit_msb_table_example():
    assert extract_digit(393721, 3, DigitOrder.MSB_FIRST) == 3


def test_extract_digit_lsb_trace_example():
    assert extract_digit(5847, 1, DigitOrder.LSB_FIRST) == 7


def test_extract_digit_single_digit_orders_agree():
    assert extract_digit(7, 1, DigitOrder.MSB_FIRST) == 7
    assert extract_digit(7, 1, DigitOrder.LSB_FIRST) == 7


def test_extract_digit_position_out_of_range():
    with pytest.raises(ValueError):
        extract_digit(123, 4, DigitOrder.MSB_FIRST)
    with pytest.raises(ValueError):
        extract_digit(123, 0, DigitOrder.LSB_FIRST)


@given(st.integers(min_value=0, max_value=10**7), st.integers(min_value=1, max_value=8))
def test_extract_digit_order_symmetry(n, pos):
    k = digit_count(n)
    if pos > k:
        pos = (pos - 1) % k + 1
    assert extract_digit(n, pos, DigitOrder.MSB_FIRST) == \
        extract_digit(n, k - pos + 1, DigitOrder.LSB_FIRST)


def test_concat_left_table_example():
    assert concat_left(16, "375347") == "16375347"


def test_concat_left_empty_right():
    assert concat_left(4, "") == "4"


def test_concat_left_final_fold():
    assert concat_left(1, "1694") == "11694"


def test_concat_left_preserves_leading_zeros_in_right():
    assert concat_left(2, "06") == "206"


def test_concat_left_rejects_non_digits():
    with pytest.raises(ValueError):
        concat_left(1, "12a")


@given(st.integers(min_value=0, max_value=999), st.text(alphabet="0123456789", max_size=8))
def test_concat_left_length_law(left, right):
    out = concat_left(left, right)
    assert len(out) == digit_count(left) + len(right)
    assert out.startswith(str(left))
    assert out.endswith(right)


def test_schoolbook_trace_worked_example():
    t = schoolbook_trace(5847, 2)
    assert len(t.blocks) == 4
    b1 = t.blocks[0]
    assert (b1.digit, b1.temp_mult, b1.temp_add) == (7, 14, 14)
    assert b1.branch is Branch.GE10
    assert b1.fd_result == 4
    assert b1.carry_out == 1
    assert b1.result_after == "4"
    b2 = t.blocks[1]
    assert (b2.digit, b2.temp_mult, b2.temp_add) == (4, 8, 9)
    assert b2.branch is Branch.LT10
    assert b2.fd_result is None
    assert t.final_carry == 1
    assert t.final_result == "11694"


def test_schoolbook_trace_identity_case():
    t = schoolbook_trace(1, 1)
    assert len(t.blocks) == 1
    b = t.blocks[0]
    assert (b.digit, b.temp_mult, b.temp_add) == (1, 1, 1)
    assert b.branch is Branch.LT10
    assert t.final_carry == 0
    assert t.final_result == "1"


def test_schoolbook_trace_large_case():
    assert schoolbook_trace(999999, 9).final_result == str(999999 * 9)


def test_schoolbook_trace_rejects_zero_multiplicand_by_default():
    with pytest.raises(ValueError):
        schoolbook_trace(0, 3)
    t = schoolbook_trace(0, 3, allow_zero_multiplicand=True)
    assert t.final_result == "0"


def test_schoolbook_trace_rejects_bad_multiplier():
    with pytest.raises(ValueError):
        schoolbook_trace(5847, 10)
    with pytest.raises(ValueError):
        schoolbook_trace(5847, -1)


def test_mid_word_zero_digit_keeps_positional_zero():
    # 103 * 2: the middle step adds a positional "0" to the accumulator.
    t = schoolbook_trace(103, 2)
    assert t.blocks[1].result_after == "06"
    assert t.final_result == "206"


@given(st.integers(min_value=1, max_value=999999), st.integers(min_value=0, max_value=9))
@settings(max_examples=300)
def test_trace_final_result_matches_native_product(a, m):
    t = schoolbook_trace(a, m)
    assert int(t.final_result) == a * m
    assert len(t.blocks) == digit_count(a)


@given(st.integers(min_value=1, max_value=999999), st.integers(min_value=0, max_value=9))
@settings(max_examples=200)
def test_trace_carry_chain_and_accumulator_growth(a, m):
    t = schoolbook_trace(a, m)
    carry = 0
    for b in t.blocks:
        assert b.carry_in == carry
        assert b.temp_mult == b.digit * m
        assert b.temp_add == b.carry_in + b.temp_mult
        assert (b.branch is Branch.GE10) == (b.temp_add >= 10)
        assert 0 <= b.carry_out <= 9
        grown = digit_count(b.fd_result if b.branch is Branch.GE10 else b.temp_add)
        assert len(b.result_after) == len(b.result_before) + grown
        assert b.result_after.endswith(b.result_before)
        carry = b.carry_out
    assert t.final_carry == carry
