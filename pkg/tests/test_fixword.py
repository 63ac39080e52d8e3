import random
from fractions import Fraction

import pytest

from metricmux.errors import RangeError
from metricmux.fixword import (
    ONE, UNIT, ZERO, FixWord, fixword_from_real, fixword_to_real, format_decimal, parse_decimal,
)


@pytest.mark.parametrize("value, raw", [
    (1.0, 0x00100000),
    (0.25, 0x00040000),
    (-1.0, -0x00100000),
    (0, 0),
    (Fraction(1, 3), 349525),
])
def test_from_real(value, raw):
    assert fixword_from_real(value).raw == raw


def test_negative_is_twos_complement():
    assert FixWord.from_real(-1.0).unsigned == 0xFFF00000
    assert FixWord.from_unsigned(0xFFF00000) == FixWord.from_real(-1)


def test_to_real_is_exact():
    assert fixword_to_real(FixWord(0x00100000)) == 1.0
    assert fixword_to_real(ZERO) == 0.0
    # 0x119999 is 1153433/2^20 exactly
    assert FixWord(0x00119999).as_fraction() == Fraction(1153433, 1 << 20)
    assert fixword_to_real(FixWord(0x00119999)) == 1153433 / (1 << 20)


def test_half_ulp_rounds_away_from_zero():
    half = Fraction(1, 2 * UNIT)
    assert FixWord.from_real(half).raw == 1
    assert FixWord.from_real(-half).raw == -1
    assert FixWord.from_fraction(half, half_even=True).raw == 0


@pytest.mark.parametrize("value", [2048, -2048.0000001, 4096.5])
def test_out_of_range(value):
    with pytest.raises(RangeError):
        FixWord.from_real(value)


@pytest.mark.parametrize("raw", [-(1 << 31), (1 << 31) - 1, -1, 1])
def test_to_real_then_from_real_at_the_extremes(raw):
    assert fixword_from_real(fixword_to_real(FixWord(raw))) == FixWord(raw)


def test_raw_range_is_enforced():
    with pytest.raises(RangeError):
        FixWord(1 << 31)


def test_bytes_round_trip():
    rng = random.Random(7)
    for _ in range(200):
        f = FixWord(rng.randint(-(1 << 31), (1 << 31) - 1))
        assert FixWord.from_bytes(f.to_bytes()) == f


@pytest.mark.parametrize("text, raw", [
    ("1.0", UNIT),
    ("0.5", UNIT // 2),
    ("-0.25", -UNIT // 4),
    ("10", 10 * UNIT),
    ("+.5", UNIT // 2),
])
def test_parse_decimal(text, raw):
    assert parse_decimal(text).raw == raw


def test_format_decimal():
    assert format_decimal(ONE) == "1.0"
    assert format_decimal(FixWord(10 * UNIT)) == "10.0"
    assert format_decimal(FixWord(UNIT // 2)) == "0.5"
    assert format_decimal(FixWord(-UNIT // 4)) == "-0.25"


def test_decimal_round_trip_on_random_words():
    """Every fix_word below 2048 survives format then parse."""
    rng = random.Random(11)
    for _ in range(2000):
        f = FixWord(rng.randint(-2047 * UNIT, 2047 * UNIT))
        assert parse_decimal(format_decimal(f)) == f


@pytest.mark.parametrize("text", ["", ".", "abc", "1.0x", "2048"])
def test_parse_decimal_rejects(text):
    with pytest.raises(RangeError):
        parse_decimal(text)


def test_scaled_rounds_half_even():
    assert FixWord(1).scaled(Fraction(1, 2)).raw == 0
    assert FixWord(3).scaled(Fraction(1, 2)).raw == 2
    assert FixWord(UNIT).scaled(Fraction(107, 100)) == FixWord.from_fraction(Fraction(107, 100), True)
