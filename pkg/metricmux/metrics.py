"""In-memory model of one TFM file, shared by every codec and transform."""

import enum
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from metricmux.fixword import ONE, ZERO, FixWord

STOP_FLAG = 128
KERN_FLAG = 128
MAX_SCHEME = 39
MAX_FAMILY = 19

# op codes of the eight ligature forms, keyed by their property-list names
LIG_OPS = {
    "LIG": 0, "LIG/": 2, "/LIG": 1, "/LIG/": 3,
    "LIG/>": 6, "/LIG>": 5, "/LIG/>": 7, "/LIG/>>": 11,
}
LIG_NAMES = {code: name for name, code in LIG_OPS.items()}

PARAM_NAMES = {
    1: "SLANT", 2: "SPACE", 3: "STRETCH", 4: "SHRINK",
    5: "XHEIGHT", 6: "QUAD", 7: "EXTRASPACE",
}
MATH_SYMBOL_PARAMS = {
    8: "NUM1", 9: "NUM2", 10: "NUM3", 11: "DENOM1", 12: "DENOM2",
    13: "SUP1", 14: "SUP2", 15: "SUP3", 16: "SUB1", 17: "SUB2",
    18: "SUPDROP", 19: "SUBDROP", 20: "DELIM1", 21: "DELIM2", 22: "AXISHEIGHT",
}
MATH_EXTENSION_PARAMS = {
    8: "DEFAULTRULETHICKNESS", 9: "BIGOPSPACING1", 10: "BIGOPSPACING2",
    11: "BIGOPSPACING3", 12: "BIGOPSPACING4", 13: "BIGOPSPACING5",
}


def param_names_for(coding_scheme: str) -> Dict[int, str]:
    names = dict(PARAM_NAMES)
    scheme = coding_scheme.upper()
    if scheme.startswith("TEX MATH SY"):
        names.update(MATH_SYMBOL_PARAMS)
    elif scheme.startswith("TEX MATH EX"):
        names.update(MATH_EXTENSION_PARAMS)
    return names


class CharTag(enum.IntEnum):
    NONE = 0
    LIG = 1
    LIST = 2
    EXT = 3


@dataclass(frozen=True)
class CharDim:
    width: FixWord
    height: FixWord = ZERO
    depth: FixWord = ZERO
    italic: FixWord = ZERO
    tag: CharTag = CharTag.NONE
    remainder: int = 0


@dataclass(frozen=True)
class LigKernStep:
    skip: int
    next_char: int
    op: int
    remainder: int

    @property
    def is_kern(self) -> bool:
        return self.op >= KERN_FLAG

    @property
    def kern_index(self) -> int:
        return 256 * (self.op - KERN_FLAG) + self.remainder

    @property
    def pointer(self) -> int:
        """Target of an indirect or boundary word (skip > 128)."""
        return 256 * self.op + self.remainder


@dataclass(frozen=True)
class ExtensibleRecipe:
    top: int
    mid: int
    bot: int
    rep: int


@dataclass(frozen=True)
class FontMetrics:
    checksum: int = 0
    design_size: FixWord = FixWord(10 * ONE.raw)
    coding_scheme: str = ""
    family: str = ""
    bc: int = 1
    ec: int = 0
    chars: Mapping[int, CharDim] = field(default_factory=dict)
    ligkern: Tuple[LigKernStep, ...] = ()
    kerns: Tuple[FixWord, ...] = ()
    params: Tuple[FixWord, ...] = ()
    extensibles: Tuple[ExtensibleRecipe, ...] = ()
    seven_bit_safe: bool = False
    face: int = 0
    comments: Tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def from_chars(cls, chars: Mapping[int, CharDim], **kwargs) -> "FontMetrics":
        """Build a font whose bc/ec span exactly the given slots."""
        chars = dict(sorted(chars.items()))
        if chars:
            kwargs.setdefault("bc", min(chars))
            kwargs.setdefault("ec", max(chars))
        return cls(chars=chars, **kwargs)

    def replace(self, **changes) -> "FontMetrics":
        return replace(self, **changes)

    def param(self, index: int) -> FixWord:
        if 1 <= index <= len(self.params):
            return self.params[index - 1]
        return ZERO

    def with_param(self, index: int, value: FixWord) -> "FontMetrics":
        params = list(self.params)
        while len(params) < index:
            params.append(ZERO)
        params[index - 1] = value
        return self.replace(params=tuple(params))

    @property
    def slant(self) -> FixWord:
        return self.param(1)

    @property
    def boundary_char(self) -> Optional[int]:
        if self.ligkern and self.ligkern[0].skip == 255:
            return self.ligkern[0].next_char
        return None

    def lig_start(self, slot: int) -> Optional[int]:
        """Resolved lig/kern program start for a char tagged LIG."""
        dim = self.chars.get(slot)
        if dim is None or dim.tag != CharTag.LIG:
            return None
        start = dim.remainder
        if start < len(self.ligkern) and self.ligkern[start].skip > STOP_FLAG:
            start = self.ligkern[start].pointer
        return start


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    def add(self, message: str):
        self.violations.append(message)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self) -> Iterator[str]:
        return iter(self.violations)

    def __contains__(self, text: str) -> bool:
        return any(text in v for v in self.violations)


def _is_byte(value) -> bool:
    return isinstance(value, int) and 0 <= value <= 255


def _table(report: ValidationReport, label: str, value) -> tuple:
    if isinstance(value, (tuple, list)):
        return tuple(value)
    report.add(f"{label} is not a sequence")
    return ()


def validate(m: FontMetrics) -> ValidationReport:
    """List every reason m cannot be written as a TFM file."""
    report = ValidationReport()

    if not isinstance(m.checksum, int) or not 0 <= m.checksum <= 0xFFFFFFFF:
        report.add("checksum is not a 32-bit unsigned integer")
    if not isinstance(m.design_size, FixWord):
        report.add("design size is not a fix_word")
    elif m.design_size.raw < ONE.raw:
        report.add("design size below 1pt")
    for label, text, limit in (("coding scheme", m.coding_scheme, MAX_SCHEME),
                               ("family", m.family, MAX_FAMILY)):
        if not isinstance(text, str):
            report.add(f"{label} is not text")
            continue
        if len(text) > limit:
            report.add(f"{label} longer than {limit} characters")
        if "(" in text or ")" in text:
            report.add(f"{label} contains a parenthesis")
        if not text.isascii():
            report.add(f"{label} is not ASCII")
    if not _is_byte(m.face):
        report.add("face byte out of range")

    bc, ec = m.bc, m.ec
    if not (isinstance(bc, int) and isinstance(ec, int) and 0 <= bc <= ec + 1 <= 256):
        report.add(f"character range bc={bc!r} ec={ec!r} violates 0 <= bc <= ec+1 <= 256")
        bc, ec = 0, 255
    elif isinstance(m.chars, Mapping) and all(isinstance(slot, int) for slot in m.chars):
        span = (min(m.chars), max(m.chars)) if m.chars else (1, 0)
        if (bc, ec) != span:
            report.add(f"character range bc={bc} ec={ec} is not the span {span[0]}..{span[1]} "
                       "of the characters")

    if isinstance(m.chars, Mapping):
        chars = m.chars
    else:
        report.add("chars is not a mapping")
        chars = {}
    ligkern = _table(report, "lig/kern program", m.ligkern)
    kerns = _table(report, "kern table", m.kerns)
    params = _table(report, "parameter table", m.params)
    extensibles = _table(report, "extensible table", m.extensibles)
    widths, heights, depths, italics = set(), set(), set(), set()
    for slot, dim in chars.items():
        if not isinstance(slot, int) or not bc <= slot <= ec:
            report.add(f"character {slot!r} outside bc..ec")
            continue
        if not isinstance(dim, CharDim):
            report.add(f"character {slot} has no dimensions")
            continue
        dims = (dim.width, dim.height, dim.depth, dim.italic)
        if not all(isinstance(d, FixWord) for d in dims):
            report.add(f"character {slot} has a non-fix_word dimension")
            continue
        widths.add(dim.width.raw)
        heights.add(dim.height.raw)
        depths.add(dim.depth.raw)
        italics.add(dim.italic.raw)
        if dim.tag not in tuple(CharTag):
            report.add(f"character {slot} has an unknown tag {dim.tag!r}")
        elif not _is_byte(dim.remainder):
            report.add(f"character {slot} remainder out of range")
        elif dim.tag == CharTag.LIG and dim.remainder >= len(ligkern):
            report.add(f"character {slot} lig/kern start {dim.remainder} beyond program")
        elif dim.tag == CharTag.LIST and dim.remainder not in chars:
            report.add(f"character {slot} lists missing successor {dim.remainder}")
        elif dim.tag == CharTag.EXT and dim.remainder >= len(extensibles):
            report.add(f"character {slot} has dangling extensible recipe {dim.remainder}")

    if len(widths) > 255:
        report.add("width table overflow")
    if len(heights - {0}) > 15:
        report.add("height table overflow")
    if len(depths - {0}) > 15:
        report.add("depth table overflow")
    if len(italics - {0}) > 63:
        report.add("italic table overflow")

    _validate_ligkern(ligkern, len(kerns), chars, report)

    for i, recipe in enumerate(extensibles):
        if not isinstance(recipe, ExtensibleRecipe) or not all(
                _is_byte(p) for p in (recipe.top, recipe.mid, recipe.bot, recipe.rep)):
            report.add(f"extensible recipe {i} is not four slots")
            continue
        parts = (recipe.top, recipe.mid, recipe.bot)
        if recipe.rep not in chars or any(p and p not in chars for p in parts):
            report.add(f"extensible recipe {i} references a missing character")
    for name, table in (("kern", kerns), ("parameter", params)):
        if not all(isinstance(v, FixWord) for v in table):
            report.add(f"{name} table holds a non-fix_word value")
    if len(kerns) > 32767:
        report.add("kern table overflow")
    if len(params) > 254:
        report.add("parameter table overflow")
    return report


def _validate_ligkern(program: Tuple[LigKernStep, ...], nk: int, chars: Mapping[int, CharDim],
                      report: ValidationReport):
    if len(program) > 32767:
        report.add("lig/kern program overflow")
    bchar = None
    if program and isinstance(program[0], LigKernStep) and program[0].skip == 255:
        bchar = program[0].next_char
    for i, step in enumerate(program):
        if not isinstance(step, LigKernStep) or not all(
                _is_byte(v) for v in (step.skip, step.next_char, step.op, step.remainder)):
            report.add(f"lig/kern step {i} is not four bytes")
            continue
        if step.skip > STOP_FLAG:
            if step.skip == 255 and i == len(program) - 1 and i > 0:
                if step.pointer >= len(program):
                    report.add(f"boundary program pointer at step {i} beyond program")
            continue
        if step.next_char not in chars and step.next_char != bchar:
            report.add(f"lig/kern step {i} references missing slot {step.next_char}")
        if step.is_kern:
            if step.kern_index >= nk:
                report.add(f"dangling kern at step {i}: index {step.kern_index}")
        else:
            if step.op not in LIG_NAMES:
                report.add(f"lig/kern step {i} has invalid ligature op {step.op}")
            if step.remainder not in chars:
                report.add(f"ligature at step {i} produces missing slot {step.remainder}")
