"""Seeded generators of fonts that every codec should carry through unchanged."""

import random
from pathlib import Path
from typing import Dict, List, Optional

from metricmux.fixword import UNIT, FixWord
from metricmux.ligkern import Krn, Lig, set_char_programs
from metricmux.metrics import LIG_OPS, CharDim, CharTag, ExtensibleRecipe, FontMetrics
from metricmux.vf import (
    BaseFont, MoveDown, MoveRight, Packet, Pop, Push, SelectFont, SetChar, SetRule,
    Special, VirtualFont,
)

SCHEMES = ("", "TEX TEXT", "TEX MATH SYMBOLS", "FONTSPECIFIC")


def random_fix(rng: random.Random, limit: int = 16) -> FixWord:
    return FixWord(rng.randint(-limit * UNIT, limit * UNIT))


def _pool(rng: random.Random, size: int) -> List[FixWord]:
    return [FixWord(rng.randint(1, 4 * UNIT)) for _ in range(size)]


def random_metrics(rng: random.Random, max_chars: int = 40) -> FontMetrics:
    slots = sorted(rng.sample(range(256), rng.randint(0, max_chars)))
    heights, depths, italics = _pool(rng, 15), _pool(rng, 15), _pool(rng, 63)

    chars: Dict[int, CharDim] = {}
    for slot in slots:
        chars[slot] = CharDim(
            FixWord(rng.randint(0, 8 * UNIT)),
            rng.choice(heights) if rng.random() < 0.8 else FixWord(0),
            rng.choice(depths) if rng.random() < 0.3 else FixWord(0),
            rng.choice(italics) if rng.random() < 0.2 else FixWord(0),
        )

    programs: Dict[Optional[int], list] = {}
    bchar = rng.choice(slots) if slots and rng.random() < 0.3 else None
    keys = [s for s in slots if rng.random() < 0.3]
    if bchar is not None and rng.random() < 0.5:
        keys.append(None)
    for key in keys:
        steps = []
        for right in rng.sample(slots, min(len(slots), rng.randint(1, 4))):
            if rng.random() < 0.7:
                steps.append(Krn(right, FixWord(rng.randint(-UNIT, UNIT))))
            else:
                steps.append(Lig(rng.choice(list(LIG_OPS.values())), right, rng.choice(slots)))
        programs[key] = steps

    extensibles: List[ExtensibleRecipe] = []
    for slot in slots:
        if slot in programs:
            continue
        roll = rng.random()
        dim = chars[slot]
        if roll < 0.1:
            larger = [s for s in slots if s > slot]
            if larger:
                chars[slot] = CharDim(dim.width, dim.height, dim.depth, dim.italic,
                                      CharTag.LIST, rng.choice(larger))
        elif roll < 0.15:
            parts = [rng.choice(slots) if rng.random() < 0.5 else 0 for _ in range(3)]
            recipe = ExtensibleRecipe(*parts, rng.choice(slots))
            chars[slot] = CharDim(dim.width, dim.height, dim.depth, dim.italic,
                                  CharTag.EXT, len(extensibles))
            extensibles.append(recipe)

    params = tuple(random_fix(rng, 4) for _ in range(rng.choice((0, 7, 7, 13, 22, 30))))
    m = FontMetrics.from_chars(
        chars,
        checksum=rng.getrandbits(32),
        design_size=FixWord(rng.randint(UNIT, 100 * UNIT)),
        coding_scheme=rng.choice(SCHEMES),
        family=rng.choice(("", "CMR", "NEWTX")),
        params=params,
        extensibles=tuple(extensibles),
        seven_bit_safe=rng.random() < 0.2,
        face=rng.choice((0, 2, 5, 17)),
    )
    if programs or bchar is not None:
        m = set_char_programs(m, programs, bchar)
    return m


def random_program(rng: random.Random, fonts: List[int], length: int = 8) -> tuple:
    ops = []
    depth = 0
    for _ in range(rng.randint(0, length)):
        roll = rng.random()
        if roll < 0.3:
            ops.append(SetChar(rng.randrange(256)))
        elif roll < 0.4 and fonts:
            ops.append(SelectFont(rng.choice(fonts)))
        elif roll < 0.55:
            ops.append(MoveRight(random_fix(rng, 4)))
        elif roll < 0.65:
            ops.append(MoveDown(random_fix(rng, 4)))
        elif roll < 0.75:
            ops.append(Push())
            depth += 1
        elif roll < 0.85 and depth:
            ops.append(Pop())
            depth -= 1
        elif roll < 0.93:
            ops.append(SetRule(FixWord(rng.randint(0, UNIT)), FixWord(rng.randint(0, UNIT))))
        else:
            ops.append(Special(rng.choice(("ps: gsave", "color push Red", "pdf:literal"))))
    ops.extend(Pop() for _ in range(depth))
    return tuple(ops)


def random_virtual_font(rng: random.Random, m: Optional[FontMetrics] = None) -> VirtualFont:
    """A VF; when m is given its header and packet widths agree with m."""
    indices = sorted(rng.sample(range(300), rng.randint(0, 4)))
    base_fonts = tuple(
        BaseFont(i, rng.choice(("cmr10", "rtxmi", "ntxsy")) + str(i), rng.getrandbits(32),
                 FixWord(rng.randint(UNIT // 2, 2 * UNIT)), FixWord(rng.randint(UNIT, 20 * UNIT)))
        for i in indices
    )
    if m is not None:
        widths = {slot: dim.width for slot, dim in m.chars.items()}
        checksum, design = m.checksum, m.design_size
    else:
        widths = {slot: random_fix(rng, 8) for slot in rng.sample(range(256), rng.randint(0, 30))}
        checksum, design = rng.getrandbits(32), FixWord(rng.randint(UNIT, 50 * UNIT))
    packets = {slot: Packet(width, random_program(rng, list(indices)))
               for slot, width in sorted(widths.items())}
    return VirtualFont(rng.choice(("", "Created by hand", "virtual test font")),
                       checksum, design, base_fonts, packets)


AFM_TEMPLATE = """StartFontMetrics 2.0
Comment test font
FontName {name}
FamilyName Test
ItalicAngle {angle}
IsFixedPitch false
XHeight 450
StartCharMetrics {count}
{chars}
EndCharMetrics
StartKernData
StartKernPairs {kern_count}
{kerns}
EndKernPairs
EndKernData
EndFontMetrics
"""

AFM_GLYPHS = (
    (32, "space", 250, (0, 0, 0, 0)),
    (65, "A", 722, (15, 0, 706, 674)),
    (86, "V", 722, (16, -16, 697, 662)),
    (102, "f", 333, (20, 0, 383, 683)),
    (105, "i", 278, (16, 0, 253, 683)),
    (120, "x", 500, (17, 0, 479, 450)),
    (121, "y", 500, (14, -218, 475, 450)),
)


def afm_text(name: str = "TestRoman", angle: float = 0, widen: int = 0) -> str:
    chars = "\n".join(
        f"C {code} ; WX {width + widen} ; N {glyph} ; B {' '.join(str(b) for b in bbox)} ;"
        for code, glyph, width, bbox in AFM_GLYPHS
    )
    kerns = "KPX A V -80\nKPX V A -60\nKPX f i 20"
    return AFM_TEMPLATE.format(name=name, angle=angle, count=len(AFM_GLYPHS), chars=chars,
                               kern_count=3, kerns=kerns)


def write_afm(path: Path, name: str = "TestRoman", angle: float = 0, widen: int = 0) -> Path:
    path.write_text(afm_text(name, angle, widen), encoding="ascii")
    return path
