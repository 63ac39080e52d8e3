import tempfile
from pathlib import Path

import pytest

from metricmux.encodings import (
    NOTDEF, EncodingRegistry, declare_encoding, emit_enc, locate_enc, names_vector, parse_enc,
    read_enc, resolve_slot,
)
from metricmux.errors import (
    ConflictingRedeclaration, EncSyntaxError, RangeError, UndeclaredScheme, UnknownTarget,
    WrongSlotCount,
)
from metricmux.fixword import UNIT, FixWord
from metricmux.metrics import CharDim, FontMetrics
from metricmux.pl import CharcodeFormat, character_labels, emit_pl

FIXTURES = Path(__file__).parent / "fixtures"
OML = FIXTURES / "oml.enc"


def small_vector(name: str, first: str, second: str) -> str:
    return f"/{name} [ /{first} /{second} " + "/.notdef " * 254 + "] def"


def test_parse_small_vector():
    v = parse_enc(small_vector("E", "A", "B"))
    assert v.name == "E"
    assert v.slots[1] == "B"
    assert v.slots[2] == NOTDEF
    assert v.encoded() == {0: "A", 1: "B"}


def test_wrong_slot_count():
    with pytest.raises(WrongSlotCount) as info:
        parse_enc("/E [ " + "/a " * 255 + "] def")
    assert "255" in str(info.value)


@pytest.mark.parametrize("text", [
    "E [ /a ] def",
    "/E [ /a /b",
    "/E [ a ] def",
    "/E [ " + "/a " * 256 + "]",
])
def test_enc_syntax(text):
    with pytest.raises(EncSyntaxError):
        parse_enc(text)


def test_comments_are_ignored():
    v = parse_enc("% header\n" + small_vector("E", "A", "B") + " % trailing")
    assert v.slots[0] == "A"


def test_emit_then_read():
    v = read_enc(OML)
    assert v.name == "TeXMathItalicEncoding"
    assert parse_enc(emit_enc(v)) == v


def test_declaration_is_idempotent():
    reg = EncodingRegistry().load_file(OML)
    once = declare_encoding(reg, "FONTSPECIFIC", "oml")
    assert declare_encoding(once, "FONTSPECIFIC", "oml") == once
    assert declare_encoding(once, "fontspecific", "TeXMathItalicEncoding") == once


def test_conflicting_declaration():
    reg = EncodingRegistry().load_file(OML).load(parse_enc(small_vector("T1Encoding", "A", "B")),
                                                  alias="t1")
    reg = reg.declare("FONTSPECIFIC", "oml")
    with pytest.raises(ConflictingRedeclaration):
        reg.declare("FONTSPECIFIC", "t1")


def test_unknown_target():
    with pytest.raises(UnknownTarget):
        EncodingRegistry().declare("FONTSPECIFIC", "oml")


def test_undeclared_scheme():
    reg = EncodingRegistry().load_file(OML)
    with pytest.raises(UndeclaredScheme):
        resolve_slot(reg, "MYSTERY", 0)


def test_notdef_slots_resolve_to_the_marker():
    reg = EncodingRegistry().load_file(OML).declare("FONTSPECIFIC", "oml")
    assert resolve_slot(reg, "FONTSPECIFIC", 200) == NOTDEF
    assert resolve_slot(reg, "FONTSPECIFIC", 11) == "alpha"
    with pytest.raises(RangeError):
        resolve_slot(reg, "FONTSPECIFIC", 256)


def test_vector_loaded_under_its_own_name_needs_no_declaration():
    reg = EncodingRegistry().load_file(OML)
    assert reg.resolve("TeXMathItalicEncoding", 0) == "Gamma"


def test_names_mode_labels_every_slot():
    """An anonymous 256-slot font listed through the redeclared vector."""
    reg = EncodingRegistry().load_file(OML).declare("FONTSPECIFIC", "oml")
    m = FontMetrics.from_chars({slot: CharDim(FixWord(UNIT)) for slot in range(256)},
                               coding_scheme="FONTSPECIFIC")
    vector = reg.vector_for(m.coding_scheme)
    labels = character_labels(emit_pl(m, CharcodeFormat.NAMES, vector))
    assert len(labels) == 256
    mismatches = [
        slot for slot, (code, comment) in enumerate(labels)
        if code != f"O {slot:o}" or comment != resolve_slot(reg, "FONTSPECIFIC", slot)
    ]
    assert mismatches == []


def test_names_vector_searches_directories():
    v = names_vector("", "oml", [str(FIXTURES)])
    assert v.slots[11] == "alpha"


def test_locate_enc():
    with tempfile.TemporaryDirectory() as tmpdir:
        target = Path(tmpdir) / "t1.enc"
        target.write_text(small_vector("T1", "A", "B"))
        assert locate_enc("t1", [tmpdir]) == target
        assert locate_enc("t1.enc", ["/nonexistent", tmpdir]) == target
        assert locate_enc("missing", [tmpdir]) == Path("missing")
