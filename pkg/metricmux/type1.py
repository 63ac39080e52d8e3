"""Type 1 font reading: PFB/PFA containers, eexec, and charstring interpretation."""

import enum
import logging
import re
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from fontTools.encodings.StandardEncoding import StandardEncoding
from fontTools.misc import eexec

from metricmux.errors import (
    BadMagic, LengthOverrun, MissingEof, MissingGlyph, MissingSubr, StackUnderflow, Type1Error,
    UnsupportedOp,
)

logger = logging.getLogger(__name__)

EEXEC_KEY = 55665
CHARSTRING_KEY = 4330
DEFAULT_LEN_IV = 4
MAX_SUBR_DEPTH = 10
MAX_OPS = 100000

Number = Union[int, Fraction]


# PFB containers

class SegmentKind(enum.IntEnum):
    ASCII = 1
    BINARY = 2
    EOF = 3


class PfbSegment(NamedTuple):
    kind: SegmentKind
    payload: bytes


def split_pfb(data: bytes) -> List[PfbSegment]:
    if data[:2] != b"\x80\x01":
        raise BadMagic("PFB data must begin with 0x80 0x01")
    segments: List[PfbSegment] = []
    pos = 0
    while pos < len(data):
        if data[pos] != 0x80 or pos + 1 >= len(data) or data[pos + 1] not in (1, 2, 3):
            raise BadMagic(f"bad segment header at byte {pos}")
        kind = SegmentKind(data[pos + 1])
        if kind == SegmentKind.EOF:
            if pos + 2 != len(data):
                raise BadMagic(f"{len(data) - pos - 2} bytes after the end-of-file segment")
            segments.append(PfbSegment(kind, b""))
            return segments
        if pos + 6 > len(data):
            raise LengthOverrun(f"segment header at byte {pos} is cut short")
        length = struct.unpack_from("<I", data, pos + 2)[0]
        if pos + 6 + length > len(data):
            raise LengthOverrun(f"segment at byte {pos} declares {length} bytes, "
                                f"only {len(data) - pos - 6} remain")
        segments.append(PfbSegment(kind, data[pos + 6:pos + 6 + length]))
        pos += 6 + length
    raise MissingEof("PFB data has no end-of-file segment")


def join_pfb(segments: Sequence[PfbSegment]) -> bytes:
    out = bytearray()
    for kind, payload in segments:
        out += bytes([0x80, int(kind)])
        if kind != SegmentKind.EOF:
            out += struct.pack("<I", len(payload)) + payload
    return bytes(out)


def eexec_decrypt(data: bytes, r: int = EEXEC_KEY) -> bytes:
    """Plaintext including the leading random bytes."""
    return eexec.decrypt(data, r)[0]


def eexec_encrypt(data: bytes, r: int = EEXEC_KEY) -> bytes:
    return eexec.encrypt(data, r)[0]


def decrypt_charstring(data: bytes, len_iv: int = DEFAULT_LEN_IV) -> bytes:
    if len_iv < 0:
        return data
    return eexec_decrypt(data, CHARSTRING_KEY)[len_iv:]


# Charstring numbers and operators

def encode_number(n: int) -> bytes:
    if -107 <= n <= 107:
        return bytes([n + 139])
    if 108 <= n <= 1131:
        n -= 108
        return bytes([247 + n // 256, n % 256])
    if -1131 <= n <= -108:
        n = -n - 108
        return bytes([251 + n // 256, n % 256])
    return b"\xff" + struct.pack(">i", n)


def decode_number(data: bytes, pos: int) -> Tuple[int, int]:
    v = data[pos]
    if 32 <= v <= 246:
        return v - 139, pos + 1
    if pos + 1 >= len(data):
        raise StackUnderflow(f"number at byte {pos} is cut short")
    if 247 <= v <= 250:
        return (v - 247) * 256 + data[pos + 1] + 108, pos + 2
    if 251 <= v <= 254:
        return -(v - 251) * 256 - data[pos + 1] - 108, pos + 2
    if v == 255 and pos + 5 <= len(data):
        return struct.unpack_from(">i", data, pos + 1)[0], pos + 5
    raise StackUnderflow(f"number at byte {pos} is cut short")


OPERATORS = {
    1: "hstem", 3: "vstem", 4: "vmoveto", 5: "rlineto", 6: "hlineto", 7: "vlineto",
    8: "rrcurveto", 9: "closepath", 10: "callsubr", 11: "return", 13: "hsbw",
    14: "endchar", 21: "rmoveto", 22: "hmoveto", 30: "vhcurveto", 31: "hvcurveto",
}
ESCAPE_OPERATORS = {
    0: "dotsection", 1: "vstem3", 2: "hstem3", 6: "seac", 7: "sbw", 12: "div",
    16: "callothersubr", 17: "pop", 33: "setcurrentpoint",
}
_OPCODES = {name: bytes([code]) for code, name in OPERATORS.items()}
_OPCODES.update({name: bytes([12, code]) for code, name in ESCAPE_OPERATORS.items()})


def encode_charstring(items: Sequence[Union[int, str]]) -> bytes:
    """Assemble numbers and operator names into an unencrypted charstring."""
    out = bytearray()
    for item in items:
        if isinstance(item, str):
            out += _OPCODES[item]
        else:
            out += encode_number(item)
    return bytes(out)


# Glyph model

@dataclass(frozen=True)
class LineTo:
    x: Number
    y: Number


@dataclass(frozen=True)
class CurveTo:
    x1: Number
    y1: Number
    x2: Number
    y2: Number
    x3: Number
    y3: Number


Segment = Union[LineTo, CurveTo]


@dataclass(frozen=True)
class Contour:
    start: Tuple[Number, Number]
    segments: Tuple[Segment, ...]

    def points(self) -> List[Tuple[Number, Number]]:
        pts = [self.start]
        for seg in self.segments:
            if isinstance(seg, LineTo):
                pts.append((seg.x, seg.y))
            else:
                pts.extend([(seg.x1, seg.y1), (seg.x2, seg.y2), (seg.x3, seg.y3)])
        return pts


@dataclass(frozen=True)
class Stem:
    position: Number
    extent: Number
    edge: bool = False       # negative-width edge hint, normalised
    replaced: bool = False   # declared by a hint replacement subroutine

    @property
    def end(self) -> Number:
        return self.position + self.extent


@dataclass(frozen=True)
class Glyph:
    name: str
    sidebearing_x: Number
    advance: Number
    contours: Tuple[Contour, ...] = ()
    hstems: Tuple[Stem, ...] = ()
    vstems: Tuple[Stem, ...] = ()
    sidebearing_y: Number = 0

    def bounds(self) -> Optional[Tuple[Number, Number, Number, Number]]:
        pts = [p for c in self.contours for p in c.points()]
        if not pts:
            return None
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return min(xs), min(ys), max(xs), max(ys)

    @property
    def negative_overshoot(self) -> bool:
        bounds = self.bounds()
        return bounds is not None and bounds[0] < self.sidebearing_x


def _stem(position: Number, extent: Number, replaced: bool) -> Stem:
    if extent < 0:
        return Stem(position + extent, -extent, True, replaced)
    return Stem(position, extent, False, replaced)


class _Interpreter:
    def __init__(self, subrs: Sequence[Optional[bytes]], name: str,
                 lookup: Optional[Callable[[str], "Glyph"]]):
        self.subrs = subrs
        self.name = name
        self.lookup = lookup
        self.stack: List[Number] = []
        self.ps_stack: List[Number] = []
        self.x: Number = 0
        self.y: Number = 0
        self.sbx: Number = 0
        self.sby: Number = 0
        self.advance: Number = 0
        self.contours: List[Contour] = []
        self.start: Optional[Tuple[Number, Number]] = None
        self.segments: List[Segment] = []
        self.hstems: List[Stem] = []
        self.vstems: List[Stem] = []
        self.flexing = False
        self.flex_points: List[Tuple[Number, Number]] = []
        self.replaced = False
        self.ops = 0
        self.done = False
        self.seac: Optional[Glyph] = None

    # helpers

    def pop(self, count: int) -> List[Number]:
        if len(self.stack) < count:
            raise StackUnderflow(f"{self.name}: operator needs {count} operands, "
                                 f"stack holds {len(self.stack)}")
        values = self.stack[len(self.stack) - count:]
        del self.stack[len(self.stack) - count:]
        return values

    def close_contour(self):
        if self.start is not None and self.segments:
            if (self.x, self.y) != self.start:
                self.segments.append(LineTo(*self.start))
            self.contours.append(Contour(self.start, tuple(self.segments)))
        self.start = None
        self.segments = []

    def move(self, dx: Number, dy: Number):
        self.x += dx
        self.y += dy
        if self.flexing:
            return
        self.close_contour()
        self.start = (self.x, self.y)

    def line(self, dx: Number, dy: Number):
        self._ensure_start()
        self.x += dx
        self.y += dy
        self.segments.append(LineTo(self.x, self.y))

    def curve(self, dx1, dy1, dx2, dy2, dx3, dy3):
        self._ensure_start()
        x1, y1 = self.x + dx1, self.y + dy1
        x2, y2 = x1 + dx2, y1 + dy2
        self.x, self.y = x2 + dx3, y2 + dy3
        self.segments.append(CurveTo(x1, y1, x2, y2, self.x, self.y))

    def _ensure_start(self):
        if self.start is None:
            self.start = (self.x, self.y)

    def add_stem(self, stems: List[Stem], position: Number, extent: Number):
        stem = _stem(position, extent, self.replaced)
        if self.replaced and any(s.position == stem.position and s.extent == stem.extent
                                 for s in stems):
            return
        stems.append(stem)

    # execution

    def run(self, program: bytes, depth: int = 0):
        if depth > MAX_SUBR_DEPTH:
            raise Type1Error(f"{self.name}: subroutines nested deeper than {MAX_SUBR_DEPTH}")
        pos = 0
        while pos < len(program) and not self.done:
            self.ops += 1
            if self.ops > MAX_OPS:
                raise Type1Error(f"{self.name}: charstring exceeds {MAX_OPS} operations")
            v = program[pos]
            if v >= 32:
                value, pos = decode_number(program, pos)
                self.stack.append(value)
                continue
            pos += 1
            if v == 12:
                if pos >= len(program):
                    raise UnsupportedOp("12")
                code = program[pos]
                pos += 1
                self.escape(code)
            elif v == 10:
                index = self.pop(1)[0]
                if not isinstance(index, int) or not 0 <= index < len(self.subrs) \
                        or self.subrs[index] is None:
                    raise MissingSubr(index)
                self.run(self.subrs[index], depth + 1)
            elif v == 11:
                return
            else:
                self.operator(v)

    def operator(self, v: int):
        if v == 13:  # hsbw
            self.sbx, self.advance = self.pop(2)
            self.sby = 0
            self.x, self.y = self.sbx, 0
        elif v == 21:
            self.move(*self.pop(2))
        elif v == 22:
            self.move(self.pop(1)[0], 0)
        elif v == 4:
            self.move(0, self.pop(1)[0])
        elif v == 5:
            self.line(*self.pop(2))
        elif v == 6:
            self.line(self.pop(1)[0], 0)
        elif v == 7:
            self.line(0, self.pop(1)[0])
        elif v == 8:
            self.curve(*self.pop(6))
        elif v == 30:
            dy1, dx2, dy2, dx3 = self.pop(4)
            self.curve(0, dy1, dx2, dy2, dx3, 0)
        elif v == 31:
            dx1, dx2, dy2, dy3 = self.pop(4)
            self.curve(dx1, 0, dx2, dy2, 0, dy3)
        elif v == 9:
            self.close_contour()
        elif v == 1:
            y, dy = self.pop(2)
            self.add_stem(self.hstems, y + self.sby, dy)
        elif v == 3:
            x, dx = self.pop(2)
            self.add_stem(self.vstems, x + self.sbx, dx)
        elif v == 14:
            self.close_contour()
            self.done = True
        else:
            raise UnsupportedOp(str(v))
        self.stack.clear()

    def escape(self, code: int):
        if code == 0:
            pass
        elif code == 1:
            values = self.pop(6)
            for i in (0, 2, 4):
                self.add_stem(self.vstems, values[i] + self.sbx, values[i + 1])
        elif code == 2:
            values = self.pop(6)
            for i in (0, 2, 4):
                self.add_stem(self.hstems, values[i] + self.sby, values[i + 1])
        elif code == 7:
            self.sbx, self.sby, self.advance, _ = self.pop(4)
            self.x, self.y = self.sbx, self.sby
        elif code == 12:
            a, b = self.pop(2)
            if b == 0:
                raise Type1Error(f"{self.name}: division by zero")
            self.stack.append(Fraction(a) / Fraction(b))
            return
        elif code == 6:
            self.do_seac(*self.pop(5))
        elif code == 16:
            self.call_othersubr()
            return
        elif code == 17:
            if not self.ps_stack:
                raise StackUnderflow(f"{self.name}: pop from an empty PostScript stack")
            self.stack.append(self.ps_stack.pop())
            return
        elif code == 33:
            self.x, self.y = self.pop(2)
        else:
            raise UnsupportedOp(f"12 {code}")
        self.stack.clear()

    def call_othersubr(self):
        count, number = self.pop(2)
        args = self.pop(count)
        if number == 1:
            self.flexing = True
            self.flex_points = []
        elif number == 2:
            self.flex_points.append((self.x, self.y))
        elif number == 0:
            self.end_flex()
        elif number == 3:
            self.replaced = True
            self.ps_stack = list(reversed(args))
            return
        elif number in (12, 13):
            logger.debug("%s: ignoring counter control othersubr %d", self.name, number)
            self.ps_stack = list(reversed(args))
            return
        else:
            raise UnsupportedOp(f"othersubr {number}")

    def end_flex(self):
        if len(self.flex_points) != 7:
            raise Type1Error(f"{self.name}: flex collected {len(self.flex_points)} points, not 7")
        self.flexing = False
        pts = self.flex_points
        self._ensure_start()
        self.segments.append(CurveTo(*pts[1], *pts[2], *pts[3]))
        self.segments.append(CurveTo(*pts[4], *pts[5], *pts[6]))
        self.x, self.y = pts[6]
        # the charstring pops these back with `pop pop setcurrentpoint`
        self.ps_stack = [self.y, self.x]

    def do_seac(self, asb, adx, ady, bchar, achar):
        if self.lookup is None:
            raise MissingGlyph(StandardEncoding[int(bchar)])
        base = self.lookup(StandardEncoding[int(bchar)])
        accent = self.lookup(StandardEncoding[int(achar)])
        dx = adx + self.sbx - asb
        self.contours.extend(base.contours)
        self.contours.extend(_shift_contour(c, dx, ady) for c in accent.contours)
        self.hstems.extend(base.hstems)
        self.vstems.extend(base.vstems)
        self.done = True


def _shift_contour(c: Contour, dx: Number, dy: Number) -> Contour:
    segments = []
    for seg in c.segments:
        if isinstance(seg, LineTo):
            segments.append(LineTo(seg.x + dx, seg.y + dy))
        else:
            segments.append(CurveTo(seg.x1 + dx, seg.y1 + dy, seg.x2 + dx, seg.y2 + dy,
                                    seg.x3 + dx, seg.y3 + dy))
    return Contour((c.start[0] + dx, c.start[1] + dy), tuple(segments))


def interpret_charstring(program: bytes, subrs: Sequence[Optional[bytes]] = (), name: str = "",
                         lookup: Optional[Callable[[str], Glyph]] = None) -> Glyph:
    """Run a decrypted charstring into absolute contours and stem hints."""
    interp = _Interpreter(subrs, name, lookup)
    interp.run(program)
    interp.close_contour()
    return Glyph(
        name=name,
        sidebearing_x=interp.sbx,
        advance=interp.advance,
        contours=tuple(interp.contours),
        hstems=tuple(interp.hstems),
        vstems=tuple(interp.vstems),
        sidebearing_y=interp.sby,
    )


# Font programs

_SUBRS = re.compile(rb"/Subrs\s+(\d+)\s+array")
_SUBR = re.compile(rb"\s*dup\s+(\d+)\s+(\d+)\s+\S+ ")
_CHARSTRINGS = re.compile(rb"/CharStrings\s+\d+\s+dict\s+dup\s+begin")
_GLYPH = re.compile(rb"\s*/([^\s/\[\]{}()<>%]+)\s+(\d+)\s+\S+ ")
_TAIL = re.compile(rb"\s*(?:noaccess\s+put|noaccess\s+def|NP|ND|\|-|\||put|def)")
_LEN_IV = re.compile(rb"/lenIV\s+(-?\d+)")
_FONT_NAME = re.compile(r"/FontName\s+/(\S+)")
_FONT_MATRIX = re.compile(r"/FontMatrix\s*[\[{]([^\]}]*)[\]}]")
_ITALIC_ANGLE = re.compile(r"/ItalicAngle\s+(-?[\d.]+)")
_ENCODING_ENTRY = re.compile(r"dup\s+(\d+)\s*/(\S+)\s+put")


@dataclass
class Type1Font:
    name: str
    font_matrix: Tuple[float, ...]
    italic_angle: float
    encoding: Dict[int, str]
    len_iv: int
    subrs: List[Optional[bytes]]
    charstrings: Dict[str, bytes]
    _glyphs: Dict[str, Glyph] = field(default_factory=dict, repr=False)

    @property
    def units_per_em(self) -> int:
        scale = self.font_matrix[0] if self.font_matrix else 0.001
        return round(1 / scale) if scale else 1000

    def glyph(self, name: str) -> Glyph:
        if name not in self._glyphs:
            if name not in self.charstrings:
                raise MissingGlyph(name)
            self._glyphs[name] = interpret_charstring(
                self.charstrings[name], self.subrs, name, self.glyph)
        return self._glyphs[name]

    def advances(self) -> Dict[str, Number]:
        return {name: self.glyph(name).advance for name in self.charstrings}


def _split_type1(data: bytes) -> Tuple[str, bytes]:
    """Cleartext part and eexec-encrypted part of a PFB or PFA file."""
    if data[:1] == b"\x80":
        segments = split_pfb(data)
        first_binary = next((i for i, s in enumerate(segments) if s.kind == SegmentKind.BINARY), None)
        if first_binary is None:
            raise Type1Error("PFB has no binary eexec segment")
        clear = b"".join(s.payload for s in segments[:first_binary] if s.kind == SegmentKind.ASCII)
        encrypted = b"".join(s.payload for s in segments if s.kind == SegmentKind.BINARY)
        return clear.decode("latin-1"), encrypted
    marker = data.find(b"eexec")
    if marker < 0:
        raise Type1Error("no eexec section found")
    clear = data[:marker + 5].decode("latin-1")
    rest = data[marker + 5:]
    end = rest.find(b"cleartomark")
    if end >= 0:
        rest = rest[:end]
    lines = rest.split()
    # the trailer is lines of zeros before cleartomark
    while lines and not lines[-1].strip(b"0"):
        lines.pop()
    return clear, eexec.deHexString(b"".join(lines))


def read_type1(data: bytes) -> Type1Font:
    clear, encrypted = _split_type1(data)
    private = eexec_decrypt(encrypted)[4:]

    name_match = _FONT_NAME.search(clear)
    matrix_match = _FONT_MATRIX.search(clear)
    angle_match = _ITALIC_ANGLE.search(clear)
    if re.search(r"/Encoding\s+StandardEncoding\s+def", clear):
        encoding = {i: n for i, n in enumerate(StandardEncoding) if n != ".notdef"}
    else:
        encoding = {int(code): glyph for code, glyph in _ENCODING_ENTRY.findall(clear)}

    len_iv_match = _LEN_IV.search(private)
    len_iv = int(len_iv_match.group(1)) if len_iv_match else DEFAULT_LEN_IV

    subrs: List[Optional[bytes]] = []
    pos = 0
    subrs_match = _SUBRS.search(private)
    if subrs_match:
        subrs = [None] * int(subrs_match.group(1))
        pos = subrs_match.end()
        while True:
            entry = _SUBR.match(private, pos)
            if entry is None:
                break
            index, length = int(entry.group(1)), int(entry.group(2))
            start = entry.end()
            if start + length > len(private):
                raise LengthOverrun(f"subroutine {index} runs past the end of the font")
            if 0 <= index < len(subrs):
                subrs[index] = decrypt_charstring(private[start:start + length], len_iv)
            pos = start + length
            tail = _TAIL.match(private, pos)
            if tail:
                pos = tail.end()

    charstrings: Dict[str, bytes] = {}
    cs_match = _CHARSTRINGS.search(private, pos)
    if cs_match is None:
        raise Type1Error("font program has no CharStrings dictionary")
    pos = cs_match.end()
    while True:
        entry = _GLYPH.match(private, pos)
        if entry is None:
            break
        glyph_name, length = entry.group(1).decode("latin-1"), int(entry.group(2))
        start = entry.end()
        if start + length > len(private):
            raise LengthOverrun(f"charstring {glyph_name} runs past the end of the font")
        charstrings[glyph_name] = decrypt_charstring(private[start:start + length], len_iv)
        pos = start + length
        tail = _TAIL.match(private, pos)
        if tail:
            pos = tail.end()

    logger.debug("read %d charstrings and %d subroutines", len(charstrings), len(subrs))
    return Type1Font(
        name=name_match.group(1) if name_match else "",
        font_matrix=tuple(float(v) for v in matrix_match.group(1).split()) if matrix_match else (),
        italic_angle=float(angle_match.group(1)) if angle_match else 0.0,
        encoding=encoding,
        len_iv=len_iv,
        subrs=subrs,
        charstrings=charstrings,
    )


def read_type1_file(path) -> Type1Font:
    with open(path, "rb") as f:
        return read_type1(f.read())
