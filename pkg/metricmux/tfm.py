"""Bit-exact reader and writer for TeX font metric (.tfm) files."""

import logging
import struct
from typing import Dict, List, Tuple

from metricmux.errors import IndexOutOfRange, LengthMismatch, TruncatedFile, Unencodable
from metricmux.fixword import FixWord
from metricmux.metrics import (
    STOP_FLAG, CharDim, CharTag, ExtensibleRecipe, FontMetrics, LigKernStep, validate,
)

logger = logging.getLogger(__name__)

HEADER_WORDS = 18
SCHEME_BYTES = 40
FAMILY_BYTES = 20
SEVEN_BIT_SAFE = 0x80

_LENGTHS = struct.Struct(">12H")
_SECTIONS = ("lf", "lh", "bc", "ec", "nw", "nh", "nd", "ni", "nl", "nk", "ne", "np")


def _bcpl(data: bytes, offset: int, size: int, section: str) -> str:
    length = data[offset]
    if length >= size:
        raise LengthMismatch(f"string length {length} exceeds {size - 1}", section, offset)
    return data[offset + 1:offset + 1 + length].decode("ascii", errors="replace")


def _to_bcpl(text: str, size: int) -> bytes:
    raw = text.encode("ascii")
    return bytes([len(raw)]) + raw + bytes(size - 1 - len(raw))


def parse_tfm(data: bytes) -> FontMetrics:
    """Read a TFM file; every table index is resolved to its value."""
    if len(data) < _LENGTHS.size:
        raise TruncatedFile("preamble", len(data))
    n = dict(zip(_SECTIONS, _LENGTHS.unpack_from(data, 0)))
    lf, lh, bc, ec = n["lf"], n["lh"], n["bc"], n["ec"]
    if 4 * lf > len(data):
        raise TruncatedFile("preamble", len(data))
    if 4 * lf < len(data):
        logger.warning("ignoring %d bytes after the declared TFM length", len(data) - 4 * lf)
    if bc > ec + 1 or ec > 255:
        raise LengthMismatch(f"character range bc={bc} ec={ec} is invalid", "preamble", 4)
    if lh < 2:
        raise LengthMismatch(f"header length {lh} is less than 2", "preamble", 2)
    for key in ("nw", "nh", "nd", "ni"):
        if n[key] == 0:
            raise LengthMismatch(f"{key} must be at least 1", "preamble", 2 * _SECTIONS.index(key))
    expected = 6 + lh + (ec - bc + 1) + sum(n[k] for k in _SECTIONS[4:])
    if lf != expected:
        raise LengthMismatch(f"lf={lf} but section lengths add up to {expected}", "preamble", 0)

    # word offsets of each section
    offsets: Dict[str, int] = {}
    pos = 6
    for name, size in (("header", lh), ("char_info", ec - bc + 1), ("width", n["nw"]),
                       ("height", n["nh"]), ("depth", n["nd"]), ("italic", n["ni"]),
                       ("lig_kern", n["nl"]), ("kern", n["nk"]), ("exten", n["ne"]),
                       ("param", n["np"])):
        offsets[name] = pos * 4
        pos += size

    def table(name: str, count: int) -> List[FixWord]:
        base = offsets[name]
        return [FixWord.from_bytes(data, base + 4 * i) for i in range(count)]

    header = offsets["header"]
    checksum = struct.unpack_from(">I", data, header)[0]
    design_size = FixWord.from_bytes(data, header + 4)
    coding_scheme = _bcpl(data, header + 8, SCHEME_BYTES, "header") if lh >= 12 else ""
    family = _bcpl(data, header + 48, FAMILY_BYTES, "header") if lh >= 17 else ""
    seven_bit_safe, face = False, 0
    if lh >= HEADER_WORDS:
        seven_bit_safe = bool(data[header + 68] & SEVEN_BIT_SAFE)
        face = data[header + 71]
    if lh > HEADER_WORDS:
        logger.info("ignoring %d extra header words", lh - HEADER_WORDS)

    widths = table("width", n["nw"])
    heights = table("height", n["nh"])
    depths = table("depth", n["nd"])
    italics = table("italic", n["ni"])
    for name, values in (("width", widths), ("height", heights),
                         ("depth", depths), ("italic", italics)):
        if values[0].raw != 0:
            raise LengthMismatch(f"{name}[0] must be zero", name, offsets[name])

    lig_base = offsets["lig_kern"]
    ligkern = tuple(LigKernStep(*data[lig_base + 4 * i:lig_base + 4 * i + 4])
                    for i in range(n["nl"]))
    kerns = tuple(table("kern", n["nk"]))
    ext_base = offsets["exten"]
    extensibles = tuple(ExtensibleRecipe(*data[ext_base + 4 * i:ext_base + 4 * i + 4])
                        for i in range(n["ne"]))
    params = tuple(table("param", n["np"]))

    chars: Dict[int, CharDim] = {}
    info_base = offsets["char_info"]
    for c in range(bc, ec + 1):
        at = info_base + 4 * (c - bc)
        wi, hd, it, rem = data[at:at + 4]
        if wi == 0:
            continue
        hi, di, ii, tag = hd >> 4, hd & 15, it >> 2, it & 3
        for section, index, limit in (("width", wi, n["nw"]), ("height", hi, n["nh"]),
                                      ("depth", di, n["nd"]), ("italic", ii, n["ni"])):
            if index >= limit:
                raise IndexOutOfRange(f"char_info {section}", at, index, limit)
        if tag == CharTag.LIG and rem >= n["nl"]:
            raise IndexOutOfRange("char_info lig_kern", at, rem, n["nl"])
        if tag == CharTag.EXT and rem >= n["ne"]:
            raise IndexOutOfRange("char_info exten", at, rem, n["ne"])
        chars[c] = CharDim(widths[wi], heights[hi], depths[di], italics[ii], CharTag(tag), rem)

    for c, dim in chars.items():
        if dim.tag == CharTag.LIST and dim.remainder not in chars:
            at = info_base + 4 * (c - bc)
            raise IndexOutOfRange("char_info charlist", at, dim.remainder, ec + 1)
    for i, step in enumerate(ligkern):
        if step.skip <= STOP_FLAG and step.is_kern and step.kern_index >= n["nk"]:
            raise IndexOutOfRange("lig_kern", lig_base + 4 * i, step.kern_index, n["nk"])
        if step.skip > STOP_FLAG and step.pointer >= n["nl"]:
            raise IndexOutOfRange("lig_kern", lig_base + 4 * i, step.pointer, n["nl"])

    # slots without a width at either end of bc..ec are dropped from the span
    return FontMetrics.from_chars(
        chars,
        checksum=checksum,
        design_size=design_size,
        coding_scheme=coding_scheme,
        family=family,
        ligkern=ligkern,
        kerns=kerns,
        params=params,
        extensibles=extensibles,
        seven_bit_safe=seven_bit_safe,
        face=face,
    )


def _dimension_table(values, keep_zero: bool) -> Tuple[List[int], Dict[int, int]]:
    distinct = sorted(set(values) if keep_zero else set(values) - {0})
    table = [0] + distinct
    return table, {raw: i for i, raw in enumerate(table) if i or not keep_zero}


def emit_tfm(m: FontMetrics) -> bytes:
    """Canonical TFM bytes: deduplicated sorted tables, 18 header words."""
    report = validate(m)
    if report:
        raise Unencodable(report.violations)

    dims = list(m.chars.values())
    widths, width_index = _dimension_table((d.width.raw for d in dims), keep_zero=True)
    heights, height_index = _dimension_table((d.height.raw for d in dims), keep_zero=False)
    depths, depth_index = _dimension_table((d.depth.raw for d in dims), keep_zero=False)
    italics, italic_index = _dimension_table((d.italic.raw for d in dims), keep_zero=False)

    char_info = bytearray()
    for c in range(m.bc, m.ec + 1):
        dim = m.chars.get(c)
        if dim is None:
            char_info += bytes(4)
            continue
        char_info += bytes([
            width_index[dim.width.raw],
            height_index[dim.height.raw] << 4 | depth_index[dim.depth.raw],
            italic_index[dim.italic.raw] << 2 | int(dim.tag),
            dim.remainder,
        ])

    header = bytearray(struct.pack(">I", m.checksum))
    header += m.design_size.to_bytes()
    header += _to_bcpl(m.coding_scheme, SCHEME_BYTES)
    header += _to_bcpl(m.family, FAMILY_BYTES)
    header += bytes([SEVEN_BIT_SAFE if m.seven_bit_safe else 0, 0, 0, m.face])

    sizes = [HEADER_WORDS, m.ec - m.bc + 1, len(widths), len(heights), len(depths),
             len(italics), len(m.ligkern), len(m.kerns), len(m.extensibles), len(m.params)]
    lf = 6 + sum(sizes)
    if lf > 0xFFFF:
        raise Unencodable([f"file length {lf} words exceeds 65535"])

    out = bytearray(_LENGTHS.pack(lf, HEADER_WORDS, m.bc, m.ec, *sizes[2:]))
    out += header
    out += char_info
    for values in (widths, heights, depths, italics):
        out += b"".join(FixWord(raw).to_bytes() for raw in values)
    out += b"".join(bytes([s.skip, s.next_char, s.op, s.remainder]) for s in m.ligkern)
    out += b"".join(k.to_bytes() for k in m.kerns)
    out += b"".join(bytes([e.top, e.mid, e.bot, e.rep]) for e in m.extensibles)
    out += b"".join(p.to_bytes() for p in m.params)
    return bytes(out)


def compute_checksum(m: FontMetrics) -> int:
    """The PLtoTF checksum over bc, ec and the character widths."""
    c0, c1, c2, c3 = m.bc, m.ec, m.bc, m.ec
    for c in range(m.bc, m.ec + 1):
        dim = m.chars.get(c)
        if dim is None:
            continue
        tw = dim.width.raw + (c + 4) * (1 << 22)
        c0 = (c0 + c0 + tw) % 255
        c1 = (c1 + c1 + tw) % 253
        c2 = (c2 + c2 + tw) % 251
        c3 = (c3 + c3 + tw) % 247
    return (c0 << 24) | (c1 << 16) | (c2 << 8) | c3


def with_checksum(m: FontMetrics) -> FontMetrics:
    return m.replace(checksum=compute_checksum(m))


def section_lengths(data: bytes) -> Dict[str, int]:
    if len(data) < _LENGTHS.size:
        raise TruncatedFile("preamble", len(data))
    return dict(zip(_SECTIONS, _LENGTHS.unpack_from(data, 0)))


def read_tfm(path) -> FontMetrics:
    with open(path, "rb") as f:
        return parse_tfm(f.read())


def write_tfm(path, m: FontMetrics):
    data = emit_tfm(m)
    with open(path, "wb") as f:
        f.write(data)
