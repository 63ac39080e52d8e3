"""Virtual fonts: the binary VF codec and its VPL property-list twin."""

import logging
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Tuple, Union

from metricmux.errors import (
    BadPreamble, PlSyntaxError, TruncatedPacket, UnbalancedPushPop, UnknownMapfont,
    UnknownProperty, UnsupportedPacketOp, ValueOutOfRange, VfError,
)
from metricmux.fixword import ONE, UNIT, FixWord, format_decimal
from metricmux.metrics import FontMetrics
from metricmux.pl import CharcodeFormat, Node, PlParser, PlWriter, Values

logger = logging.getLogger(__name__)

PRE = 247
POST = 248
VF_ID = 202
FNT_DEF1 = 243
LONG_CHAR = 242

SET_CHAR_0 = 0
SET1 = 128
SET_RULE = 132
PUSH = 141
POP = 142
RIGHT1 = 143
DOWN1 = 157
FNT_NUM_0 = 171
FNT1 = 235
XXX1 = 239


@dataclass(frozen=True)
class SetChar:
    slot: int


@dataclass(frozen=True)
class SelectFont:
    index: int


@dataclass(frozen=True)
class MoveRight:
    amount: FixWord


@dataclass(frozen=True)
class MoveDown:
    amount: FixWord


@dataclass(frozen=True)
class Push:
    pass


@dataclass(frozen=True)
class Pop:
    pass


@dataclass(frozen=True)
class SetRule:
    height: FixWord
    width: FixWord


@dataclass(frozen=True)
class Special:
    text: str


PacketOp = Union[SetChar, SelectFont, MoveRight, MoveDown, Push, Pop, SetRule, Special]


@dataclass(frozen=True)
class Packet:
    tfm_width: FixWord
    program: Tuple[PacketOp, ...] = ()


@dataclass(frozen=True)
class BaseFont:
    index: int
    name: str
    checksum: int = 0
    scale: FixWord = ONE
    design: FixWord = FixWord(10 * UNIT)
    area: str = ""


@dataclass(frozen=True)
class VirtualFont:
    comment: str = ""
    checksum: int = 0
    design_size: FixWord = FixWord(10 * UNIT)
    base_fonts: Tuple[BaseFont, ...] = ()
    packets: Mapping[int, Packet] = field(default_factory=dict)

    def font(self, index: int) -> BaseFont:
        for base in self.base_fonts:
            if base.index == index:
                return base
        raise UnknownMapfont(f"font {index} is not declared")


def check_balanced(program, slot: int):
    depth = 0
    for op in program:
        if isinstance(op, Push):
            depth += 1
        elif isinstance(op, Pop):
            depth -= 1
            if depth < 0:
                raise UnbalancedPushPop(f"packet {slot}: pop without push")
    if depth:
        raise UnbalancedPushPop(f"packet {slot}: {depth} push(es) without pop")


# DVI command encoding

def _signed_size(value: int) -> int:
    for size in (1, 2, 3):
        bound = 1 << (8 * size - 1)
        if -bound <= value < bound:
            return size
    return 4


def _unsigned_size(value: int) -> int:
    for size in (1, 2, 3):
        if value < 1 << (8 * size):
            return size
    return 4


def _int_bytes(value: int, size: int, signed: bool) -> bytes:
    return value.to_bytes(size, "big", signed=signed)


def encode_op(op: PacketOp) -> bytes:
    """Shortest DVI command for one packet operation."""
    if isinstance(op, SetChar):
        if op.slot < SET1:
            return bytes([SET_CHAR_0 + op.slot])
        return bytes([SET1, op.slot])
    if isinstance(op, SelectFont):
        if op.index < 64:
            return bytes([FNT_NUM_0 + op.index])
        size = _unsigned_size(op.index)
        return bytes([FNT1 + size - 1]) + _int_bytes(op.index, size, size == 4)
    if isinstance(op, (MoveRight, MoveDown)):
        size = _signed_size(op.amount.raw)
        first = RIGHT1 if isinstance(op, MoveRight) else DOWN1
        return bytes([first + size - 1]) + _int_bytes(op.amount.raw, size, True)
    if isinstance(op, Push):
        return bytes([PUSH])
    if isinstance(op, Pop):
        return bytes([POP])
    if isinstance(op, SetRule):
        return bytes([SET_RULE]) + op.height.to_bytes() + op.width.to_bytes()
    if isinstance(op, Special):
        payload = op.text.encode("latin-1")
        size = _unsigned_size(len(payload))
        return bytes([XXX1 + size - 1]) + _int_bytes(len(payload), size, False) + payload
    raise UnsupportedPacketOp(f"cannot encode {op!r}")


def decode_program(data: bytes, slot: int) -> Tuple[PacketOp, ...]:
    ops: List[PacketOp] = []
    pos = 0

    def take(size: int) -> bytes:
        nonlocal pos
        if pos + size > len(data):
            raise TruncatedPacket(f"packet {slot}: command runs past the packet end")
        chunk = data[pos:pos + size]
        pos += size
        return chunk

    while pos < len(data):
        code = take(1)[0]
        if code < SET1:
            ops.append(SetChar(code))
        elif code == SET1:
            ops.append(SetChar(take(1)[0]))
        elif code == SET_RULE:
            ops.append(SetRule(FixWord.from_bytes(take(4)), FixWord.from_bytes(take(4))))
        elif code == PUSH:
            ops.append(Push())
        elif code == POP:
            ops.append(Pop())
        elif RIGHT1 <= code < RIGHT1 + 4:
            size = code - RIGHT1 + 1
            ops.append(MoveRight(FixWord(int.from_bytes(take(size), "big", signed=True))))
        elif DOWN1 <= code < DOWN1 + 4:
            size = code - DOWN1 + 1
            ops.append(MoveDown(FixWord(int.from_bytes(take(size), "big", signed=True))))
        elif FNT_NUM_0 <= code < FNT1:
            ops.append(SelectFont(code - FNT_NUM_0))
        elif FNT1 <= code < FNT1 + 4:
            size = code - FNT1 + 1
            ops.append(SelectFont(int.from_bytes(take(size), "big", signed=size == 4)))
        elif XXX1 <= code < XXX1 + 4:
            size = code - XXX1 + 1
            length = int.from_bytes(take(size), "big")
            ops.append(Special(take(length).decode("latin-1")))
        else:
            raise UnsupportedPacketOp(f"packet {slot}: DVI command {code} at byte {pos - 1}")
    check_balanced(ops, slot)
    return tuple(ops)


# VF files

def parse_vf(data: bytes) -> VirtualFont:
    pos = 0

    def take(size: int, what: str) -> bytes:
        nonlocal pos
        if pos + size > len(data):
            raise TruncatedPacket(f"file ends inside {what} at byte {pos}")
        chunk = data[pos:pos + size]
        pos += size
        return chunk

    if len(data) < 3 or data[0] != PRE or data[1] != VF_ID:
        raise BadPreamble("not a VF file: expected bytes 247 202")
    pos = 2
    k = take(1, "preamble")[0]
    comment = take(k, "preamble").decode("latin-1")
    checksum = struct.unpack(">I", take(4, "preamble"))[0]
    design_size = FixWord.from_bytes(take(4, "preamble"))

    base_fonts: List[BaseFont] = []
    while pos < len(data) and FNT_DEF1 <= data[pos] < FNT_DEF1 + 4:
        size = data[pos] - FNT_DEF1 + 1
        pos += 1
        index = int.from_bytes(take(size, "font definition"), "big", signed=size == 4)
        c = struct.unpack(">I", take(4, "font definition"))[0]
        s = FixWord.from_bytes(take(4, "font definition"))
        d = FixWord.from_bytes(take(4, "font definition"))
        a, n = take(2, "font definition")
        area = take(a, "font definition").decode("latin-1")
        name = take(n, "font definition").decode("latin-1")
        base_fonts.append(BaseFont(index, name, c, s, d, area))
    declared = {b.index for b in base_fonts}

    packets: Dict[int, Packet] = {}
    while pos < len(data) and data[pos] <= LONG_CHAR:
        if data[pos] == LONG_CHAR:
            pos += 1
            length, cc, tfm = struct.unpack(">IIi", take(12, "long packet header"))
        else:
            length = data[pos]
            pos += 1
            head = take(4, "packet header")
            cc, tfm = head[0], int.from_bytes(head[1:], "big")
        if not 0 <= cc <= 255:
            raise VfError(f"character code {cc} is outside 0..255")
        program = decode_program(take(length, f"packet {cc}"), cc)
        for op in program:
            if isinstance(op, SelectFont) and op.index not in declared:
                raise UnknownMapfont(f"packet {cc} selects undeclared font {op.index}")
        if cc in packets:
            logger.warning("packet for character %d appears twice; keeping the last", cc)
        packets[cc] = Packet(FixWord(tfm), program)

    if pos >= len(data) or data[pos] != POST:
        raise BadPreamble(f"expected postamble at byte {pos}")
    if any(b != POST for b in data[pos:]) or len(data) % 4:
        raise BadPreamble("postamble must be 248 bytes padding to a multiple of four")
    return VirtualFont(comment, checksum, design_size, tuple(base_fonts), packets)


def emit_vf(v: VirtualFont) -> bytes:
    comment = v.comment.encode("latin-1")
    if len(comment) > 255:
        raise VfError("VF comment is longer than 255 bytes")
    out = bytearray([PRE, VF_ID, len(comment)]) + comment
    out += struct.pack(">I", v.checksum) + v.design_size.to_bytes()
    for base in v.base_fonts:
        size = _unsigned_size(base.index) if base.index >= 0 else 4
        area = base.area.encode("latin-1")
        name = base.name.encode("latin-1")
        out += bytes([FNT_DEF1 + size - 1]) + _int_bytes(base.index, size, size == 4)
        out += struct.pack(">I", base.checksum) + base.scale.to_bytes() + base.design.to_bytes()
        out += bytes([len(area), len(name)]) + area + name
    declared = {b.index for b in v.base_fonts}
    for cc in sorted(v.packets):
        packet = v.packets[cc]
        check_balanced(packet.program, cc)
        for op in packet.program:
            if isinstance(op, SelectFont) and op.index not in declared:
                raise UnknownMapfont(f"packet {cc} selects undeclared font {op.index}")
        dvi = b"".join(encode_op(op) for op in packet.program)
        width = packet.tfm_width.raw
        if len(dvi) < LONG_CHAR and 0 <= cc < 256 and 0 <= width < 1 << 24:
            out += bytes([len(dvi), cc]) + width.to_bytes(3, "big")
        else:
            out += bytes([LONG_CHAR]) + struct.pack(">IIi", len(dvi), cc, width)
        out += dvi
    out.append(POST)
    while len(out) % 4:
        out.append(POST)
    return bytes(out)


def packet_widths_match(v: VirtualFont, m: FontMetrics) -> bool:
    """Whether every packet width equals the companion metric width."""
    if set(v.packets) != set(m.chars):
        return False
    return all(v.packets[c].tfm_width == m.chars[c].width for c in v.packets)


# VPL

class VplDocument(NamedTuple):
    font: VirtualFont
    metrics: FontMetrics
    fmt: CharcodeFormat = CharcodeFormat.DEFAULT

    def text(self) -> str:
        return emit_vpl(self.font, self.metrics, self.fmt)


class VplParser(PlParser):
    def __init__(self, src: str):
        super().__init__(src)
        self.vtitle = ""
        self.mapfonts: Dict[int, BaseFont] = {}

    def top_handlers(self):
        handlers = super().top_handlers()
        handlers["VTITLE"] = self._vtitle
        handlers["MAPFONT"] = self._mapfont
        return handlers

    def character_handlers(self):
        handlers = super().character_handlers()
        handlers["MAP"] = self._map
        return handlers

    def _vtitle(self, node: Node):
        self.vtitle = node.raw

    def _mapfont(self, node: Node):
        values = Values(node)
        index = values.number()
        if index in self.mapfonts:
            raise ValueOutOfRange(f"MAPFONT D {index} declared twice", node.line)
        font = {"name": "NULL", "area": "", "checksum": 0,
                "scale": FixWord(UNIT), "design": FixWord(10 * UNIT)}
        for child in node.children():
            if child.name == "FONTNAME":
                font["name"] = child.raw
            elif child.name == "FONTAREA":
                font["area"] = child.raw
            elif child.name == "FONTCHECKSUM":
                font["checksum"] = Values(child).number()
            elif child.name == "FONTAT":
                font["scale"] = self.scale(Values(child).fix())
            elif child.name == "FONTDSIZE":
                font["design"] = Values(child).fix()
            elif child.name != "COMMENT":
                raise UnknownProperty(child.line, child.column, child.name)
        self.mapfonts[index] = BaseFont(index, font["name"], font["checksum"], font["scale"],
                                        font["design"], font["area"])

    def _map(self, node: Node, char: dict):
        program: List[PacketOp] = []
        for child in node.children():
            values = Values(child)
            name = child.name
            if name == "SELECTFONT":
                index = values.number()
                if index not in self.mapfonts:
                    raise UnknownMapfont(f"line {child.line}: font D {index} has no MAPFONT")
                program.append(SelectFont(index))
            elif name == "SETCHAR":
                program.append(SetChar(values.byte()))
            elif name == "SETRULE":
                program.append(SetRule(self.scale(values.fix()), self.scale(values.fix())))
            elif name in ("MOVERIGHT", "MOVELEFT"):
                amount = self.scale(values.fix())
                program.append(MoveRight(amount if name == "MOVERIGHT" else -amount))
            elif name in ("MOVEDOWN", "MOVEUP"):
                amount = self.scale(values.fix())
                program.append(MoveDown(amount if name == "MOVEDOWN" else -amount))
            elif name == "PUSH":
                program.append(Push())
            elif name == "POP":
                program.append(Pop())
            elif name == "SPECIAL":
                program.append(Special(child.raw))
            elif name == "COMMENT":
                continue
            else:
                raise UnknownProperty(child.line, child.column, name)
        try:
            check_balanced(program, 0)
        except UnbalancedPushPop:
            raise PlSyntaxError(node.line, node.column, "balanced PUSH and POP in MAP") from None
        char["map"] = tuple(program)

    def parse_pair(self) -> Tuple[VirtualFont, FontMetrics]:
        m = self.parse()
        packets = {}
        for slot, dim in m.chars.items():
            program = self.chars[slot].get("map", (SetChar(slot),))
            packets[slot] = Packet(dim.width, program)
        font = VirtualFont(
            comment=self.vtitle,
            checksum=m.checksum,
            design_size=m.design_size,
            base_fonts=tuple(self.mapfonts[i] for i in sorted(self.mapfonts)),
            packets=packets,
        )
        return font, m


def parse_vpl(src: str) -> Tuple[VirtualFont, FontMetrics]:
    return VplParser(src).parse_pair()


def _write_program(writer: PlWriter, program):
    writer.open("MAP")
    for op in program:
        if isinstance(op, SelectFont):
            writer.leaf("SELECTFONT", f"D {op.index}")
        elif isinstance(op, SetChar):
            writer.leaf("SETCHAR", writer.charcode(op.slot))
        elif isinstance(op, SetRule):
            writer.leaf("SETRULE", f"R {format_decimal(op.height)}", f"R {format_decimal(op.width)}")
        elif isinstance(op, MoveRight):
            writer.leaf("MOVERIGHT", f"R {format_decimal(op.amount)}")
        elif isinstance(op, MoveDown):
            writer.leaf("MOVEDOWN", f"R {format_decimal(op.amount)}")
        elif isinstance(op, Push):
            writer.leaf("PUSH")
        elif isinstance(op, Pop):
            writer.leaf("POP")
        elif isinstance(op, Special):
            writer.leaf("SPECIAL", op.text)
    writer.close()


def emit_vpl(v: VirtualFont, m: FontMetrics,
             fmt: CharcodeFormat = CharcodeFormat.DEFAULT, names=None) -> str:
    writer = PlWriter(fmt, names)
    if v.comment:
        writer.leaf("VTITLE", v.comment)
    writer.write_header(m)
    for base in v.base_fonts:
        writer.open("MAPFONT", f"D {base.index}")
        writer.leaf("FONTNAME", base.name)
        if base.area:
            writer.leaf("FONTAREA", base.area)
        writer.leaf("FONTCHECKSUM", f"O {base.checksum:o}")
        writer.leaf("FONTAT", f"R {format_decimal(base.scale)}")
        writer.leaf("FONTDSIZE", f"R {format_decimal(base.design)}")
        writer.close()
    writer.write_params(m)
    writer.write_ligtable(m)
    for slot in sorted(m.chars):
        packet = v.packets.get(slot)
        extra = (lambda p=packet: _write_program(writer, p.program)) if packet else None
        writer.write_character(m, slot, extra)
    return writer.text()
