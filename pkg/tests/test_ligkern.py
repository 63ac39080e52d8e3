import random

import pytest

from metricmux.errors import ValueOutOfRange
from metricmux.fixword import UNIT, FixWord
from metricmux.ligkern import (
    Krn, Label, Lig, Skip, Stop, apply_ligtable, build_ligtable, char_programs, compile_ligtable,
    decompile_ligtable, normalize_ligkern, set_char_programs,
)
from metricmux.metrics import LIG_OPS, CharDim, CharTag, FontMetrics
from tests.helpers import random_metrics

A, V, F, I, FI = 65, 86, 102, 105, 12


def font(*slots):
    return FontMetrics.from_chars({s: CharDim(FixWord(UNIT)) for s in slots})


def test_compile_shares_kern_values():
    kern = FixWord(-UNIT // 10)
    compiled = compile_ligtable([Label(A), Krn(V, kern), Stop(), Label(V), Krn(A, kern), Stop()])
    assert compiled.kerns == (kern,)
    assert compiled.starts == {A: 0, V: 1}
    assert [s.skip for s in compiled.steps] == [128, 128]


def test_stop_needs_a_step():
    with pytest.raises(ValueOutOfRange):
        compile_ligtable([Label(A), Stop()])


def test_skip_must_have_a_target():
    with pytest.raises(ValueOutOfRange):
        compile_ligtable([Label(A), Krn(V, FixWord(1)), Skip(3)])


def test_duplicate_label():
    with pytest.raises(ValueOutOfRange):
        compile_ligtable([Label(A), Krn(V, FixWord(1)), Stop(), Label(A), Krn(V, FixWord(2)), Stop()])


def test_boundary_char_word():
    compiled = compile_ligtable([Label(A), Krn(V, FixWord(1)), Stop()], bchar=V)
    assert compiled.steps[0].skip == 255
    assert compiled.steps[0].next_char == V
    assert compiled.starts[A] == 1


def test_boundary_program_pointer_in_last_word():
    compiled = compile_ligtable([Label(None), Krn(A, FixWord(1)), Stop()], bchar=A)
    last = compiled.steps[-1]
    assert last.skip == 255
    assert last.pointer == 1


def test_far_labels_use_indirect_words():
    instructions = []
    for slot in range(200):
        instructions += [Label(slot), Krn(slot, FixWord(1)), Krn((slot + 1) % 200, FixWord(2)), Stop()]
    m = apply_ligtable(font(*range(200)), instructions)
    assert max(d.remainder for d in m.chars.values()) <= 255
    assert m.ligkern[0].skip == 254
    assert decompile_ligtable(m) == instructions


def test_ligature_program():
    m = apply_ligtable(font(F, I, FI), [Label(F), Lig(LIG_OPS["LIG"], I, FI), Stop()])
    assert m.chars[F].tag == CharTag.LIG
    assert char_programs(m) == {F: [Lig(0, I, FI)]}


def test_label_for_missing_character():
    with pytest.raises(ValueOutOfRange):
        apply_ligtable(font(A), [Label(V), Krn(A, FixWord(1)), Stop()])


def test_label_on_list_character():
    m = font(A, V)
    m = m.replace(chars={A: CharDim(FixWord(UNIT), tag=CharTag.LIST, remainder=V),
                         V: CharDim(FixWord(UNIT))})
    with pytest.raises(ValueOutOfRange):
        apply_ligtable(m, [Label(A), Krn(V, FixWord(1)), Stop()])


def test_skip_is_followed():
    instructions = [Label(A), Krn(V, FixWord(1)), Skip(1), Krn(A, FixWord(2)), Stop(),
                    Krn(I, FixWord(3)), Stop()]
    m = apply_ligtable(font(A, V, I), instructions)
    assert char_programs(m)[A] == [Krn(V, FixWord(1)), Krn(I, FixWord(3))]
    assert decompile_ligtable(m) == instructions


def test_build_groups_identical_programs():
    steps = [Krn(V, FixWord(5))]
    assert build_ligtable({I: steps, A: steps}) == [Label(A), Label(I), Krn(V, FixWord(5)), Stop()]


def test_normalize_merges_equal_kerns():
    m = apply_ligtable(font(A, V), [Label(A), Krn(V, FixWord(1)), Stop()])
    m = m.replace(kerns=(FixWord(1), FixWord(1)))
    assert normalize_ligkern(m).kerns == (FixWord(1),)


def test_programs_survive_decompile_and_recompile():
    rng = random.Random(3)
    for _ in range(100):
        m = random_metrics(rng)
        again = set_char_programs(m, char_programs(m), m.boundary_char)
        assert again == m
