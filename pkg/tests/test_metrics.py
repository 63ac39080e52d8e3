import random

import pytest

from metricmux.fixword import UNIT, ZERO, FixWord
from metricmux.metrics import (
    CharDim, CharTag, ExtensibleRecipe, FontMetrics, LigKernStep, param_names_for, validate,
)
from tests.helpers import random_metrics


def test_empty_font_is_valid():
    report = validate(FontMetrics())
    assert report.ok
    assert len(report) == 0


def test_width_table_overflow():
    chars = {slot: CharDim(FixWord(slot + 1)) for slot in range(256)}
    report = validate(FontMetrics.from_chars(chars))
    assert "width table overflow" in report


def test_height_table_overflow():
    chars = {slot: CharDim(FixWord(UNIT), FixWord(slot + 1)) for slot in range(16)}
    assert "height table overflow" in validate(FontMetrics.from_chars(chars))


def test_dangling_kern():
    chars = {65: CharDim(FixWord(UNIT), tag=CharTag.LIG, remainder=0), 86: CharDim(FixWord(UNIT))}
    m = FontMetrics.from_chars(chars, ligkern=(LigKernStep(128, 86, 128, 1),),
                               kerns=(FixWord(-UNIT // 10),))
    assert "dangling kern" in validate(m)
    assert validate(m.replace(ligkern=(LigKernStep(128, 86, 128, 0),))).ok


def test_missing_successor_and_recipe():
    chars = {
        1: CharDim(FixWord(UNIT), tag=CharTag.LIST, remainder=2),
        3: CharDim(FixWord(UNIT), tag=CharTag.EXT, remainder=0),
    }
    report = validate(FontMetrics.from_chars(chars))
    assert "missing successor" in report
    assert "dangling extensible" in report


def test_extensible_parts_must_exist():
    chars = {3: CharDim(FixWord(UNIT), tag=CharTag.EXT, remainder=0), 4: CharDim(FixWord(UNIT))}
    m = FontMetrics.from_chars(chars, extensibles=(ExtensibleRecipe(9, 0, 0, 4),))
    assert "references a missing character" in validate(m)


def test_character_range():
    m = FontMetrics(bc=5, ec=2)
    assert "character range" in validate(m)
    m = FontMetrics(bc=10, ec=20, chars={3: CharDim(FixWord(UNIT))})
    assert "outside bc..ec" in validate(m)


def test_design_size_below_one_point():
    assert "design size below 1pt" in validate(FontMetrics(design_size=FixWord(UNIT // 2)))


def test_coding_scheme_limits():
    assert "longer than 39" in validate(FontMetrics(coding_scheme="X" * 40))
    assert "parenthesis" in validate(FontMetrics(family="A(B"))


def test_params():
    m = FontMetrics().with_param(6, FixWord(UNIT))
    assert len(m.params) == 6
    assert m.param(6) == FixWord(UNIT)
    assert m.param(2) == ZERO
    assert m.param(40) == ZERO
    assert m.slant == ZERO


def test_param_names_follow_the_scheme():
    assert param_names_for("TEX MATH SYMBOLS")[22] == "AXISHEIGHT"
    assert param_names_for("TeX math extension")[8] == "DEFAULTRULETHICKNESS"
    assert 8 not in param_names_for("TEX TEXT")


def test_from_chars_spans_slots():
    m = FontMetrics.from_chars({70: CharDim(ZERO), 12: CharDim(ZERO)})
    assert (m.bc, m.ec) == (12, 70)
    assert list(m.chars) == [12, 70]


def test_random_fonts_are_valid():
    rng = random.Random(1)
    for _ in range(100):
        report = validate(random_metrics(rng))
        assert report.ok, report.violations


def test_character_range_must_span_the_characters():
    loose = FontMetrics(bc=0, ec=65, chars={65: CharDim(FixWord(UNIT))})
    assert "is not the span 65..65" in validate(loose)
    assert "is not the span 1..0" in validate(FontMetrics(bc=5, ec=4))
    assert validate(FontMetrics.from_chars(loose.chars)).ok


@pytest.mark.parametrize("m", [
    FontMetrics(ligkern=None),
    FontMetrics(kerns=None),
    FontMetrics(params=None),
    FontMetrics(extensibles=None),
    FontMetrics(chars=None),
    FontMetrics(bc=None, ec="x"),
    FontMetrics(checksum=-1, design_size=1.0, coding_scheme=None, family=7, face=None),
    FontMetrics(ligkern=(None, LigKernStep(None, 0, 0, 0))),
    FontMetrics(kerns=(None,), params=("slant",)),
    FontMetrics(extensibles=(None, ExtensibleRecipe("a", 0, 0, 1))),
    FontMetrics(chars={"A": CharDim(FixWord(UNIT))}),
    FontMetrics.from_chars({65: None}),
    FontMetrics.from_chars({65: CharDim(None)}),
    FontMetrics.from_chars({65: CharDim(FixWord(UNIT), tag=9)}),
    FontMetrics.from_chars({65: CharDim(FixWord(UNIT), tag=CharTag.LIG, remainder=None)}),
])
def test_validate_reports_instead_of_raising(m):
    assert not validate(m).ok
