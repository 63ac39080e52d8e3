import math
from fractions import Fraction

import pytest

from metricmux.afm import (
    KernPair, MapLine, afm_to_metrics, emit_map_line, parse_afm, parse_map_line,
)
from metricmux.encodings import EncodingVector, NOTDEF
from metricmux.errors import DuplicateSlot, MalformedCharRecord, MissingHeader, UnresolvedGlyph
from metricmux.fixword import UNIT, ZERO, FixWord
from metricmux.ligkern import Krn, char_programs
from metricmux.pl import CharcodeFormat
from metricmux.vf import SetChar, packet_widths_match, parse_vpl
from tests.helpers import afm_text

ITALIC_AFM = """StartFontMetrics 4.1
FontName LinLibertineI
EncodingScheme AdobeStandardEncoding
ItalicAngle -12
XHeight 430
StartCharMetrics 4
C 65 ; WX 722 ; N A ; B 15 0 707 674 ;
C 32 ; WX 250 ; N space ; B 0 0 0 0 ;
C -1 ; WX 500 ; N v.alt ; B 10 -5 520 430 ;
C -1 ; WX 1000 ; N Gamma ; B 0 0 900 650 ;
EndCharMetrics
StartKernData
StartKernPairs 1
KPX A v.alt -80
EndKernPairs
EndKernData
EndFontMetrics
"""


@pytest.mark.parametrize("line, expected", [
    (MapLine("rfxlri-alt", "LinLibertineI", vector="LibertineAltEncoding",
             enc_file="libertinealt.enc"),
     'rfxlri-alt LinLibertineI " LibertineAltEncoding ReEncodeFont " <libertinealt.enc'),
    (MapLine("fxlri-7letters", "LinLibertineI7", download="fxlri-7letters.pfb"),
     "fxlri-7letters LinLibertineI7 <fxlri-7letters.pfb"),
    (MapLine("fxlzi-jv", "fxlzi-Jv", download="fxlzi-jv.pfb"),
     "fxlzi-jv fxlzi-Jv <fxlzi-jv.pfb"),
])
def test_map_lines(line, expected):
    assert emit_map_line(line) == expected
    assert parse_map_line(expected) == line


def test_parse_records():
    afm = parse_afm(ITALIC_AFM)
    assert afm.font_name == "LinLibertineI"
    assert afm.italic_angle == -12
    a = afm.glyph("A")
    assert (a.code, a.width) == (65, 722)
    assert a.bbox == (15, 0, 707, 674)
    assert afm.glyph("v.alt").code == -1
    assert afm.kern_pairs == [KernPair("A", "v.alt", Fraction(-80))]


def test_missing_header():
    with pytest.raises(MissingHeader):
        parse_afm("FontName X\n")


def test_malformed_record():
    with pytest.raises(MalformedCharRecord):
        parse_afm("StartFontMetrics 2.0\nStartCharMetrics 1\nC 65 ; N A ;\nEndCharMetrics\n")


def test_builtin_encoding_conversion():
    m = afm_to_metrics(parse_afm(afm_text())).metrics
    assert sorted(m.chars) == [32, 65, 86, 102, 105, 120, 121]
    assert m.chars[65].width == FixWord.from_fraction(Fraction(722, 1000))
    assert m.chars[121].depth == FixWord.from_fraction(Fraction(218, 1000))
    assert m.chars[65].italic == ZERO
    assert m.param(2) == FixWord.from_fraction(Fraction(250, 1000))
    assert m.param(5) == FixWord.from_fraction(Fraction(450, 1000))
    assert m.param(6) == FixWord(UNIT)
    programs = char_programs(m)
    assert programs[65] == [Krn(86, FixWord.from_fraction(Fraction(-80, 1000)))]
    assert programs[102] == [Krn(105, FixWord.from_fraction(Fraction(20, 1000)))]


def test_reencoding_moves_unencoded_glyphs():
    slots = [NOTDEF] * 256
    slots[0], slots[65], slots[118] = "Gamma", "A", "v.alt"
    vector = EncodingVector("LibertineAltEncoding", tuple(slots))
    result = afm_to_metrics(parse_afm(ITALIC_AFM), vector, tfm_name="rfxlri-alt",
                            enc_file="libertinealt.enc")
    m = result.metrics
    assert sorted(m.chars) == [0, 65, 118]
    # a width of 1000 units is one design unit
    assert m.chars[0].width == FixWord(UNIT)
    assert m.coding_scheme == "LibertineAltEncoding"
    assert m.slant == FixWord.from_fraction(Fraction(math.tan(math.radians(12))))
    assert m.chars[65].italic == ZERO
    assert m.chars[118].italic == FixWord.from_fraction(Fraction(20, 1000))
    assert char_programs(m)[65] == [Krn(118, FixWord.from_fraction(Fraction(-80, 1000)))]
    assert emit_map_line(result.map_line) == \
        'rfxlri-alt LinLibertineI " LibertineAltEncoding ReEncodeFont " <libertinealt.enc'


def test_unresolved_glyph():
    slots = [NOTDEF] * 256
    slots[3] = "nosuchglyph"
    with pytest.raises(UnresolvedGlyph):
        afm_to_metrics(parse_afm(ITALIC_AFM), EncodingVector("E", tuple(slots)))


def test_duplicate_code():
    text = afm_text().replace("C 86 ;", "C 65 ;")
    with pytest.raises(DuplicateSlot):
        afm_to_metrics(parse_afm(text))


def test_design_size():
    m = afm_to_metrics(parse_afm(afm_text()), design=7).metrics
    assert m.design_size == FixWord(7 * UNIT)


def test_vpl_forwards_every_slot():
    result = afm_to_metrics(parse_afm(afm_text()), tfm_name="rtest", vpl=True,
                            vpl_format=CharcodeFormat.OCTAL)
    v, m = parse_vpl(result.vpl.text())
    assert m == result.metrics
    assert v.base_fonts[0].name == "rtest"
    assert all(p.program == (SetChar(slot),) for slot, p in v.packets.items())
    assert packet_widths_match(v, m)
    assert "(CHARACTER C" not in result.vpl.text()
