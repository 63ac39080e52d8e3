"""Exception hierarchy shared by every metricmux module."""

from typing import Iterable, Optional, Sequence


class MetricMuxError(Exception):
    """Base class for all data errors raised by metricmux."""


class RangeError(MetricMuxError, ValueError):
    pass


# TFM

class TfmError(MetricMuxError):
    pass


class TruncatedFile(TfmError):
    def __init__(self, section: str, offset: int):
        super().__init__(f"TFM truncated in {section} at byte {offset}")
        self.section = section
        self.offset = offset


class LengthMismatch(TfmError):
    def __init__(self, message: str, section: str = "preamble", offset: int = 0):
        super().__init__(f"{message} ({section}, byte {offset})")
        self.section = section
        self.offset = offset


class IndexOutOfRange(TfmError):
    def __init__(self, section: str, offset: int, index: int, limit: int):
        super().__init__(
            f"{section} index {index} out of range (table size {limit}) at byte {offset}"
        )
        self.section = section
        self.offset = offset
        self.index = index


class Unencodable(TfmError):
    def __init__(self, violations: Iterable[str]):
        self.violations = list(violations)
        super().__init__("font cannot be encoded: " + "; ".join(self.violations))


# Property lists

class PlError(MetricMuxError):
    pass


class PlSyntaxError(PlError):
    def __init__(self, line: int, column: int, expected: str):
        super().__init__(f"line {line}, column {column}: expected {expected}")
        self.line = line
        self.column = column
        self.expected = expected


class UnknownProperty(PlSyntaxError):
    def __init__(self, line: int, column: int, name: str):
        super().__init__(line, column, f"a known property, not {name!r}")
        self.name = name


class DuplicateCharacter(PlError):
    def __init__(self, slot: int, line: int = 0):
        super().__init__(f"character {slot:o} (octal) defined twice (line {line})")
        self.slot = slot


class ValueOutOfRange(PlError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingEncoding(PlError):
    pass


# Encodings

class EncodingError(MetricMuxError):
    pass


class EncSyntaxError(EncodingError):
    pass


class WrongSlotCount(EncodingError):
    def __init__(self, n: int):
        super().__init__(f"encoding vector has {n} entries, expected 256")
        self.n = n


class ConflictingRedeclaration(EncodingError):
    pass


class UnknownTarget(EncodingError):
    pass


class UndeclaredScheme(EncodingError):
    pass


# AFM

class AfmError(MetricMuxError):
    pass


class MissingHeader(AfmError):
    pass


class MalformedCharRecord(AfmError):
    def __init__(self, line: int, text: str = ""):
        super().__init__(f"malformed character record on line {line}: {text.strip()}")
        self.line = line


class UnresolvedGlyph(AfmError):
    def __init__(self, name: str, slot: int):
        super().__init__(f"glyph {name!r} for slot {slot} is not in the AFM")
        self.name = name
        self.slot = slot


class DuplicateSlot(AfmError):
    pass


# Virtual fonts

class VfError(MetricMuxError):
    pass


class BadPreamble(VfError):
    pass


class UnbalancedPushPop(VfError):
    pass


class TruncatedPacket(VfError):
    pass


class UnknownMapfont(VfError):
    pass


class UnsupportedPacketOp(VfError):
    pass


# Composition

class CompositionError(MetricMuxError):
    pass


class MissingSource(CompositionError):
    pass


class SlotAbsentInSource(CompositionError):
    def __init__(self, font: str, slot: int):
        super().__init__(f"slot {slot} does not exist in source font {font!r}")
        self.font = font
        self.slot = slot


class CrossFontLigature(CompositionError):
    pass


# Type 1

class Type1Error(MetricMuxError):
    pass


class BadMagic(Type1Error):
    pass


class LengthOverrun(Type1Error):
    pass


class MissingEof(Type1Error):
    pass


class UnsupportedOp(Type1Error):
    def __init__(self, code):
        super().__init__(f"unsupported charstring operator {code}")
        self.code = code


class StackUnderflow(Type1Error):
    pass


class MissingSubr(Type1Error):
    def __init__(self, index: int):
        super().__init__(f"subroutine {index} is not defined")
        self.index = index


class MissingGlyph(Type1Error):
    def __init__(self, name: str):
        super().__init__(f"glyph {name!r} is not defined")
        self.name = name


# Optical transforms

class OpticalError(MetricMuxError):
    pass


class OverlappingZonesAfterScale(OpticalError):
    pass


class ParamsOutOfRange(OpticalError, ValueError):
    pass


# Pipeline

class PipelineError(MetricMuxError):
    pass


class ManifestSyntaxError(PipelineError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CycleDetected(PipelineError):
    def __init__(self, cycle: Sequence[str]):
        super().__init__("dependency cycle: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class DuplicateOutput(PipelineError):
    pass


class UnknownOp(PipelineError):
    pass


class MissingInput(PipelineError):
    pass


class StepFailed(PipelineError):
    def __init__(self, step: str, cause: Optional[BaseException]):
        super().__init__(f"step {step} failed: {cause}")
        self.step = step
        self.cause = cause


class UsageError(MetricMuxError):
    pass
