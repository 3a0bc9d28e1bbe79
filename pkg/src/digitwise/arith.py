"""Exact integer arithmetic oracle and the digit-by-digit multiplication walk.

Everything here is pure and exact: plain Python integers for values, plain
digit strings for positional accumulators. The accumulator is kept as a
string on purpose — intermediate results like "06" carry a leading zero
that is positionally meaningful and must survive concatenation verbatim.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class DigitOrder(Enum):
    """Indexing convention for positional digit extraction."""

    MSB_FIRST = "msb_first"
    LSB_FIRST = "lsb_first"


class Branch(Enum):
    """Comparison outcome of a per-digit step: temp_add >= 10 or not."""

    GE10 = "ge10"
    LT10 = "lt10"


@dataclass(frozen=True, slots=True)
class DigitBlock:
    """One per-digit reasoning step of the multiplication walk.

    ``index`` is 1-based, least-significant digit first. ``result_before``
    and ``result_after`` are the accumulator digit strings around this
    step's left-concatenation; ``result_before`` is empty for the first
    block. ``fd_result`` (the kept low digit of ``temp_add``) is only set
    on the GE10 branch.
    """

    index: int
    carry_in: int
    digit: int
    temp_mult: int
    temp_add: int
    branch: Branch
    fd_result: int | None
    carry_out: int
    result_before: str
    result_after: str


@dataclass(frozen=True, slots=True)
class MultiplicationTrace:
    """Structured trace of multiplying ``multiplicand`` by a single digit.

    ``final_result`` is a digit string: for multiplier 0 it may carry
    leading zeros (a positional artifact of left-concatenation), which is
    why corpus generation never uses multiplier 0.
    """

    multiplicand: int
    multiplier: int
    blocks: tuple[DigitBlock, ...]
    final_carry: int
    final_result: str


def digit_count(n: int) -> int:
    """Number of decimal digits of a non-negative integer (0 has one)."""
    if n < 0:
        raise ValueError(f"expected a non-negative integer, got {n}")
    return len(str(n))


def mult_digits(a: int, b: int) -> int:
    """Product of two single digits, in [0, 81]."""
    if not 0 <= a <= 9:
        raise ValueError(f"digit out of range [0, 9]: {a}")
    if not 0 <= b <= 9:
        raise ValueError(f"digit out of range [0, 9]: {b}")
    return a * b


def add_small(x: int, y: int) -> int:
    """Sum of an at-most-two-digit number and a single digit, in [0, 108]."""
    if not 0 <= x <= 99:
        raise ValueError(f"operand out of range [0, 99]: {x}")
    if not 0 <= y <= 9:
        raise ValueError(f"digit out of range [0, 9]: {y}")
    return x + y


def extract_digit(n: int, pos: int, order: DigitOrder) -> int:
    """Digit of ``n`` at 1-based position ``pos`` under the given order."""
    if n < 0:
        raise ValueError(f"expected a non-negative integer, got {n}")
    digits = str(n)
    if not 1 <= pos <= len(digits):
        raise ValueError(
            f"position {pos} out of range for {n} ({len(digits)} digits)"
        )
    if order is DigitOrder.MSB_FIRST:
        return int(digits[pos - 1])
    return int(digits[-pos])


def concat_left(left: int, right: str) -> str:
    """Decimal digits of ``left`` followed verbatim by digit string ``right``.

    ``right`` may be empty (start of the accumulator) and may carry leading
    zeros; both survive untouched.
    """
    if left < 0:
        raise ValueError(f"expected a non-negative integer, got {left}")
    if right and not right.isdigit():
        raise ValueError(f"right operand must be a digit string, got {right!r}")
    return f"{left}{right}"


def schoolbook_trace(
    a: int, m: int, *, allow_zero_multiplicand: bool = False
) -> MultiplicationTrace:
    """Run the per-digit multiplication walk and return its full trace.

    Walks the digits of ``a`` least-significant first. Each step multiplies
    the digit by ``m``, adds the incoming carry, and either splits the
    two-digit sum (GE10: keep the low digit, carry the high one) or keeps
    the single-digit sum with carry 0 (LT10). A positive carry left after
    the last digit is concatenated onto the front of the accumulator.

    Multiplicand 0 is rejected by default: its trace accumulates a bare
    "0" string, which corpus generation never wants.
    """
    if a < 1 and not allow_zero_multiplicand:
        raise ValueError(f"multiplicand must be >= 1, got {a}")
    if a < 0:
        raise ValueError(f"multiplicand must be non-negative, got {a}")
    if not 0 <= m <= 9:
        raise ValueError(f"multiplier must be a single digit, got {m}")

    blocks: list[DigitBlock] = []
    carry = 0
    acc = ""
    for i in range(1, digit_count(a) + 1):
        d = extract_digit(a, i, DigitOrder.LSB_FIRST)
        tm = mult_digits(d, m)
        ta = add_small(tm, carry)
        before = acc
        if ta >= 10:
            branch = Branch.GE10
            fd = ta % 10
            carry_out = ta // 10
            acc = concat_left(fd, before)
        else:
            branch = Branch.LT10
            fd = None
            carry_out = 0
            acc = concat_left(ta, before)
        blocks.append(
            DigitBlock(
                index=i,
                carry_in=carry,
                digit=d,
                temp_mult=tm,
                temp_add=ta,
                branch=branch,
                fd_result=fd,
                carry_out=carry_out,
                result_before=before,
                result_after=acc,
            )
        )
        carry = carry_out

    final_carry = carry
    final_result = concat_left(final_carry, acc) if final_carry > 0 else acc
    return MultiplicationTrace(
        multiplicand=a,
        multiplier=m,
        blocks=tuple(blocks),
        final_carry=final_carry,
        final_result=final_result,
    )
