"""Adobe font metrics: parsing, afm2tfm-style conversion and dvips map lines."""

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Tuple

from metricmux.encodings import NOTDEF, EncodingVector
from metricmux.errors import AfmError, DuplicateSlot, MalformedCharRecord, MissingHeader, UnresolvedGlyph
from metricmux.fixword import FixWord
from metricmux.ligkern import Krn, set_char_programs
from metricmux.metrics import CharDim, FontMetrics
from metricmux.pl import CharcodeFormat
from metricmux.tfm import compute_checksum
from metricmux.vf import BaseFont, Packet, SetChar, VirtualFont, VplDocument

logger = logging.getLogger(__name__)

EM = 1000


@dataclass(frozen=True)
class AfmGlyph:
    code: int
    name: str
    width: Fraction
    bbox: Tuple[Fraction, Fraction, Fraction, Fraction] = (Fraction(0),) * 4


@dataclass(frozen=True)
class KernPair:
    left: str
    right: str
    dx: Fraction


@dataclass
class AfmFont:
    font_name: str = ""
    italic_angle: float = 0.0
    glyphs: List[AfmGlyph] = field(default_factory=list)
    kern_pairs: List[KernPair] = field(default_factory=list)
    full_name: str = ""
    family_name: str = ""
    encoding_scheme: str = ""
    is_fixed_pitch: bool = False
    x_height: Optional[Fraction] = None
    cap_height: Optional[Fraction] = None
    font_bbox: Tuple[Fraction, ...] = ()

    def glyph(self, name: str) -> Optional[AfmGlyph]:
        for g in self.glyphs:
            if g.name == name:
                return g
        return None

    def by_name(self) -> Dict[str, AfmGlyph]:
        return {g.name: g for g in self.glyphs}

    def builtin_vector(self) -> EncodingVector:
        """The AFM's own code assignment as a vector."""
        slots = [NOTDEF] * 256
        for g in self.glyphs:
            if 0 <= g.code <= 255:
                slots[g.code] = g.name
        return EncodingVector(self.encoding_scheme or self.font_name or "BuiltinEncoding",
                              tuple(slots))


def _number(text: str) -> Fraction:
    return Fraction(text)


def _parse_char_record(text: str, line: int) -> AfmGlyph:
    fields = {}
    for part in text.split(";"):
        words = part.split()
        if words:
            fields.setdefault(words[0], words[1:])
    try:
        if "C" in fields:
            code = int(fields["C"][0])
        elif "CH" in fields:
            code = int(fields["CH"][0].strip("<>"), 16)
        else:
            raise MalformedCharRecord(line, text)
        width_words = fields.get("WX") or fields.get("W0X") or fields.get("W") or fields.get("W0")
        name = fields["N"][0]
        width = _number(width_words[0])
        bbox = tuple(_number(w) for w in fields.get("B", ["0", "0", "0", "0"])[:4])
    except (KeyError, IndexError, TypeError, ValueError, ZeroDivisionError):
        raise MalformedCharRecord(line, text) from None
    if len(bbox) != 4:
        raise MalformedCharRecord(line, text)
    return AfmGlyph(code, name, width, bbox)


def parse_afm(src: str) -> AfmFont:
    lines = src.splitlines()
    first = next((i for i, l in enumerate(lines) if l.strip()), None)
    if first is None or not lines[first].split()[0] == "StartFontMetrics":
        raise MissingHeader("AFM must begin with StartFontMetrics")

    afm = AfmFont()
    seen = set()
    section = None
    for number, raw in enumerate(lines[first + 1:], start=first + 2):
        text = raw.strip()
        if not text:
            continue
        key, _, value = text.partition(" ")
        value = value.strip()
        if key == "Comment":
            continue
        if key in ("StartCharMetrics", "StartKernPairs", "StartKernPairs0", "StartComposites"):
            section = key
            continue
        if key.startswith("End") and key not in ("EndFontMetrics",):
            section = None
            continue
        if key == "EndFontMetrics":
            break
        try:
            if section == "StartCharMetrics":
                glyph = _parse_char_record(text, number)
                if glyph.name in seen:
                    logger.warning("line %d: duplicate glyph %s ignored", number, glyph.name)
                    continue
                seen.add(glyph.name)
                afm.glyphs.append(glyph)
            elif section in ("StartKernPairs", "StartKernPairs0"):
                words = text.split()
                if words[0] in ("KPX", "KP"):
                    afm.kern_pairs.append(KernPair(words[1], words[2], _number(words[3])))
            elif section is None:
                _header_field(afm, key, value)
        except (IndexError, ValueError, ZeroDivisionError):
            raise MalformedCharRecord(number, text) from None
    return afm


def _header_field(afm: AfmFont, key: str, value: str):
    if key == "FontName":
        afm.font_name = value
    elif key == "FullName":
        afm.full_name = value
    elif key == "FamilyName":
        afm.family_name = value
    elif key == "EncodingScheme":
        afm.encoding_scheme = value
    elif key == "ItalicAngle":
        afm.italic_angle = float(value)
    elif key == "IsFixedPitch":
        afm.is_fixed_pitch = value.lower() == "true"
    elif key == "XHeight":
        afm.x_height = _number(value)
    elif key == "CapHeight":
        afm.cap_height = _number(value)
    elif key == "FontBBox":
        afm.font_bbox = tuple(_number(v) for v in value.split())


# Map lines

@dataclass(frozen=True)
class MapLine:
    tfm_name: str
    ps_name: str
    vector: Optional[str] = None
    enc_file: Optional[str] = None
    download: Optional[str] = None


def emit_map_line(l: MapLine) -> str:
    parts = [l.tfm_name, l.ps_name]
    if l.vector:
        parts.append(f'" {l.vector} ReEncodeFont "')
    if l.enc_file:
        parts.append("<" + l.enc_file)
    if l.download:
        parts.append("<" + l.download)
    return " ".join(parts)


_MAP_TOKEN = re.compile(r'"[^"]*"|\S+')


def parse_map_line(text: str) -> MapLine:
    tokens = _MAP_TOKEN.findall(text.strip())
    if len(tokens) < 2 or tokens[0].startswith(("<", '"')) or tokens[1].startswith(("<", '"')):
        raise AfmError(f"map line needs a TFM name and a PostScript name: {text!r}")
    vector = enc_file = download = None
    for token in tokens[2:]:
        if token.startswith('"'):
            words = token.strip('"').split()
            if "ReEncodeFont" in words and words.index("ReEncodeFont") > 0:
                vector = words[words.index("ReEncodeFont") - 1]
        elif token.startswith("<"):
            name = token.lstrip("<[")
            if name.lower().endswith(".enc"):
                enc_file = name
            else:
                download = name
        else:
            raise AfmError(f"unexpected map line token {token!r}")
    return MapLine(tokens[0], tokens[1], vector, enc_file, download)


# Conversion

class AfmConversion(NamedTuple):
    metrics: FontMetrics
    vpl: Optional[VplDocument]
    map_line: MapLine


def _em(value: Fraction) -> FixWord:
    return FixWord.from_fraction(Fraction(value) / EM)


def _layout(afm: AfmFont, reenc: Optional[EncodingVector]) -> Dict[int, AfmGlyph]:
    if reenc is None:
        layout: Dict[int, AfmGlyph] = {}
        for g in afm.glyphs:
            if g.code < 0:
                continue
            if g.code > 255:
                logger.warning("glyph %s has code %d beyond 255; skipped", g.name, g.code)
                continue
            if g.code in layout:
                raise DuplicateSlot(f"code {g.code} is given to {layout[g.code].name} and {g.name}")
            layout[g.code] = g
        return layout
    glyphs = afm.by_name()
    layout = {}
    for slot, name in reenc.encoded().items():
        if name not in glyphs:
            raise UnresolvedGlyph(name, slot)
        layout[slot] = glyphs[name]
    return layout


def _font_params(afm: AfmFont) -> Tuple[FixWord, ...]:
    slant = Fraction(-math.tan(math.radians(afm.italic_angle)))
    space_glyph = afm.glyph("space")
    space = space_glyph.width if space_glyph else Fraction(0)
    if afm.x_height is not None:
        x_height = afm.x_height
    else:
        x = afm.glyph("x")
        x_height = x.bbox[3] if x else Fraction(0)
    if afm.is_fixed_pitch:
        stretch, shrink, extra = Fraction(0), Fraction(0), space
    else:
        stretch, shrink, extra = Fraction(300), Fraction(100), Fraction(111)
    return (FixWord.from_fraction(slant), _em(space), _em(stretch), _em(shrink),
            _em(x_height), _em(Fraction(EM)), _em(extra))


def afm_to_metrics(afm: AfmFont, reenc: Optional[EncodingVector] = None, design=10, *,
                   tfm_name: Optional[str] = None, enc_file: Optional[str] = None,
                   pfb_file: Optional[str] = None, vpl: bool = False,
                   vpl_format: CharcodeFormat = CharcodeFormat.DEFAULT) -> AfmConversion:
    """Raw TFM metrics for afm, re-encoded through reenc when given."""
    layout = _layout(afm, reenc)
    slanted = afm.italic_angle != 0
    chars: Dict[int, CharDim] = {}
    for slot, g in layout.items():
        llx, lly, urx, ury = g.bbox
        italic = max(Fraction(0), urx - g.width) if slanted else Fraction(0)
        chars[slot] = CharDim(_em(g.width), _em(max(ury, Fraction(0))),
                              _em(max(-lly, Fraction(0))), _em(italic))

    slots_of: Dict[str, List[int]] = {}
    for slot, g in sorted(layout.items()):
        slots_of.setdefault(g.name, []).append(slot)
    programs: Dict[int, Dict[int, Krn]] = {}
    for pair in afm.kern_pairs:
        for left in slots_of.get(pair.left, ()):
            for right in slots_of.get(pair.right, ()):
                programs.setdefault(left, {}).setdefault(right, Krn(right, _em(pair.dx)))

    scheme = reenc.name if reenc is not None else afm.encoding_scheme
    scheme = scheme.replace("(", "").replace(")", "")[:39]
    m = FontMetrics.from_chars(
        chars,
        design_size=FixWord.from_fraction(Fraction(str(design))),
        coding_scheme=scheme,
        params=_font_params(afm),
    )
    if programs:
        m = set_char_programs(m, {left: [k for _, k in sorted(steps.items())]
                                  for left, steps in programs.items()})
    m = m.replace(checksum=compute_checksum(m))
    logger.info("%s: %d characters, %d kerns", afm.font_name, len(m.chars), len(m.kerns))

    tfm_name = tfm_name or afm.font_name
    map_line = MapLine(
        tfm_name,
        afm.font_name,
        vector=reenc.name if reenc is not None else None,
        enc_file=enc_file if reenc is not None else None,
        download=pfb_file,
    )
    document = None
    if vpl:
        font = VirtualFont(
            comment=f"Created from {afm.font_name}",
            checksum=m.checksum,
            design_size=m.design_size,
            base_fonts=(BaseFont(0, tfm_name, m.checksum, design=m.design_size),),
            packets={slot: Packet(dim.width, (SetChar(slot),)) for slot, dim in m.chars.items()},
        )
        document = VplDocument(font, m, CharcodeFormat(vpl_format))
    return AfmConversion(m, document, map_line)
