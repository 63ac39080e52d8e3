"""32-bit fixed-point numbers with 20 fraction bits (TeX's fix_word).

Every TFM and VF dimension is a FixWord. The decimal reader and writer
follow the stock pltotf/tftopl conventions so that property lists written
here re-read to the identical raw value.
"""

import math
import struct
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Union

from metricmux.errors import RangeError

UNIT = 1 << 20
RAW_MIN = -(1 << 31)
RAW_MAX = (1 << 31) - 1

Real = Union[int, float, Fraction, Decimal]

_WORD = struct.Struct(">i")


def round_half_away(q: Fraction) -> int:
    n = math.floor(abs(q) + Fraction(1, 2))
    return n if q >= 0 else -n


def round_half_even(q: Fraction) -> int:
    return round(q)


@dataclass(frozen=True, order=True)
class FixWord:
    raw: int

    def __post_init__(self):
        if not isinstance(self.raw, int) or not RAW_MIN <= self.raw <= RAW_MAX:
            raise RangeError(f"raw fix_word {self.raw!r} outside 32-bit range")

    @classmethod
    def from_real(cls, x: Real) -> "FixWord":
        """Round x·2^20 half away from zero; x must lie in [-2048, 2048)."""
        q = Fraction(x)
        if not -2048 <= q < 2048:
            raise RangeError(f"{x} is outside the fix_word range [-2048, 2048)")
        raw = round_half_away(q * UNIT)
        if not RAW_MIN <= raw <= RAW_MAX:
            raise RangeError(f"{x} rounds outside the fix_word range")
        return cls(raw)

    @classmethod
    def from_fraction(cls, q: Fraction, half_even: bool = False) -> "FixWord":
        scaled = Fraction(q) * UNIT
        raw = round_half_even(scaled) if half_even else round_half_away(scaled)
        if not RAW_MIN <= raw <= RAW_MAX:
            raise RangeError(f"{float(q)} is outside the fix_word range")
        return cls(raw)

    @classmethod
    def from_unsigned(cls, word: int) -> "FixWord":
        word &= 0xFFFFFFFF
        return cls(word - (1 << 32) if word & 0x80000000 else word)

    @classmethod
    def from_bytes(cls, data: bytes, offset: int = 0) -> "FixWord":
        return cls(_WORD.unpack_from(data, offset)[0])

    def to_bytes(self) -> bytes:
        return _WORD.pack(self.raw)

    def to_real(self) -> float:
        # exact: |raw| < 2^31 fits a double mantissa
        return self.raw / UNIT

    def as_fraction(self) -> Fraction:
        return Fraction(self.raw, UNIT)

    @property
    def unsigned(self) -> int:
        return self.raw & 0xFFFFFFFF

    def scaled(self, ratio: Fraction, half_even: bool = True) -> "FixWord":
        return FixWord.from_fraction(self.as_fraction() * ratio, half_even=half_even)

    def __neg__(self) -> "FixWord":
        return FixWord(-self.raw)

    def __add__(self, other: "FixWord") -> "FixWord":
        return FixWord(self.raw + other.raw)

    def __sub__(self, other: "FixWord") -> "FixWord":
        return FixWord(self.raw - other.raw)

    def __bool__(self) -> bool:
        return self.raw != 0

    def __str__(self) -> str:
        return format_decimal(self)

    def __repr__(self) -> str:
        return f"FixWord({format_decimal(self)})"


ZERO = FixWord(0)
ONE = FixWord(UNIT)


def fixword_from_real(x: Real) -> FixWord:
    return FixWord.from_real(x)


def fixword_to_real(f: FixWord) -> float:
    return f.to_real()


def format_decimal(f: FixWord) -> str:
    """Shortest decimal that reads back as the same fix_word (tftopl's out_fix)."""
    raw = f.raw
    sign = "-" if raw < 0 else ""
    integer, frac = divmod(abs(raw), UNIT)
    digits = []
    frac = 10 * frac + 5
    delta = 10
    while True:
        if delta > UNIT:
            frac = frac + (UNIT >> 1) - delta // 2
        digits.append(str(frac // UNIT))
        frac = 10 * (frac % UNIT)
        delta *= 10
        if frac <= delta:
            break
    return f"{sign}{integer}.{''.join(digits)}"


def parse_decimal(text: str) -> FixWord:
    """Read a decimal constant the way pltotf does: seven fraction digits, rounded."""
    pos = 0
    negative = False
    while pos < len(text) and text[pos] in "+-":
        if text[pos] == "-":
            negative = not negative
        pos += 1
    start = pos
    acc = 0
    while pos < len(text) and text[pos].isdigit():
        acc = acc * 10 + int(text[pos])
        if acc >= 2048:
            raise RangeError("real constants must be less than 2048")
        pos += 1
    int_part = acc
    acc = 0
    seen_digits = pos > start
    if pos < len(text) and text[pos] == ".":
        pos += 1
        fraction_digits = []
        while pos < len(text) and text[pos].isdigit():
            seen_digits = True
            if len(fraction_digits) < 7:
                fraction_digits.append((1 << 21) * int(text[pos]))
            pos += 1
        for digit in reversed(fraction_digits):
            acc = digit + acc // 10
        acc = (acc + 10) // 20
    if pos != len(text) or not seen_digits:
        raise RangeError(f"malformed real constant {text!r}")
    if acc >= UNIT and int_part == 2047:
        raise RangeError("real constants must be less than 2048")
    value = int_part * UNIT + acc
    return FixWord(-value if negative else value)
