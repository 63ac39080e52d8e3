"""Virtual-font composition: one logical font assembled from several base fonts."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from metricmux.errors import (
    CompositionError, CrossFontLigature, ManifestSyntaxError, MissingSource, RangeError,
    SlotAbsentInSource,
)
from metricmux.fixword import ZERO, FixWord, parse_decimal
from metricmux.ligkern import Krn, Lig, Step, char_programs, set_char_programs
from metricmux.metrics import CharDim, CharTag, FontMetrics
from metricmux.tfm import compute_checksum
from metricmux.utils import read_records
from metricmux.vf import BaseFont, MoveDown, MoveRight, Packet, SelectFont, SetChar, VirtualFont

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotRule:
    source_font: str
    source_slot: int
    width_override: Optional[FixWord] = None
    dx: Optional[FixWord] = None
    dy: Optional[FixWord] = None


@dataclass(frozen=True)
class KernOverride:
    left: int
    right: int
    value: Optional[FixWord]  # None removes the kern


@dataclass
class CompositionPlan:
    default_font: str
    design: Optional[FixWord] = None
    slot_rules: Dict[int, SlotRule] = field(default_factory=dict)
    kern_overrides: List[KernOverride] = field(default_factory=list)
    fonts: Dict[str, str] = field(default_factory=dict)
    title: str = ""

    def font_names(self) -> List[str]:
        """Default font first, then the others in order of first use."""
        names = [self.default_font]
        for slot in sorted(self.slot_rules):
            name = self.slot_rules[slot].source_font
            if name not in names:
                names.append(name)
        return names

    def tfm_name(self, font: str) -> str:
        return Path(self.fonts[font]).stem if font in self.fonts else font


def compose(plan: CompositionPlan,
            sources: Mapping[str, FontMetrics]) -> Tuple[VirtualFont, FontMetrics]:
    names = plan.font_names()
    for name in names:
        if name not in sources:
            raise MissingSource(f"font {name!r} is not among the sources")
    index = {name: i for i, name in enumerate(names)}
    default = sources[plan.default_font]

    chars: Dict[int, CharDim] = {}
    packets: Dict[int, List] = {}
    font_of: Dict[int, str] = {}
    for slot, dim in default.chars.items():
        chars[slot] = dim
        packets[slot] = [SelectFont(0), SetChar(slot)]
        font_of[slot] = plan.default_font

    for slot, rule in sorted(plan.slot_rules.items()):
        if not 0 <= slot <= 255:
            raise RangeError(f"slot {slot} is not 0..255")
        source = sources[rule.source_font]
        dim = source.chars.get(rule.source_slot)
        if dim is None:
            raise SlotAbsentInSource(rule.source_font, rule.source_slot)
        dy = rule.dy or ZERO
        height = max(dim.height + dy, ZERO)
        depth = max(dim.depth - dy, ZERO)
        width = rule.width_override if rule.width_override is not None else dim.width
        chars[slot] = CharDim(width, height, depth, dim.italic)
        program = [SelectFont(index[rule.source_font])]
        if rule.dx:
            program.append(MoveRight(rule.dx))
        if dy:
            program.append(MoveDown(-dy))
        program.append(SetChar(rule.source_slot))
        packets[slot] = program
        font_of[slot] = rule.source_font

    for slot, dim in chars.items():
        if dim.tag == CharTag.LIST and dim.remainder not in chars:
            chars[slot] = CharDim(dim.width, dim.height, dim.depth, dim.italic)

    m = FontMetrics.from_chars(
        chars,
        design_size=plan.design or default.design_size,
        coding_scheme=default.coding_scheme,
        family=default.family,
        params=default.params,
        extensibles=default.extensibles,
        seven_bit_safe=default.seven_bit_safe,
        face=default.face,
    )
    if plan.slot_rules or plan.kern_overrides:
        programs = _inherited_programs(plan, default, chars, font_of)
        _apply_kern_overrides(plan.kern_overrides, programs, chars)
        bchar = default.boundary_char
        if None in programs and bchar is None:
            del programs[None]
        m = set_char_programs(m, programs, bchar)
    else:
        # nothing moved: the default's lig/kern program is kept word for word
        m = m.replace(ligkern=default.ligkern, kerns=default.kerns)
    m = m.replace(checksum=compute_checksum(m))

    base_fonts = tuple(
        BaseFont(i, plan.tfm_name(name), sources[name].checksum, design=sources[name].design_size)
        for i, name in enumerate(names)
    )
    v = VirtualFont(
        comment=plan.title,
        checksum=m.checksum,
        design_size=m.design_size,
        base_fonts=base_fonts,
        packets={slot: Packet(chars[slot].width, tuple(packets[slot])) for slot in sorted(chars)},
    )
    logger.info("composed %d characters from %d fonts", len(chars), len(names))
    return v, m


def _inherited_programs(plan: CompositionPlan, default: FontMetrics, chars: Mapping[int, CharDim],
                        font_of: Mapping[int, str]) -> Dict[Optional[int], List[Step]]:
    programs: Dict[Optional[int], List[Step]] = {}
    for left, steps in char_programs(default).items():
        if left is not None and left not in chars:
            continue
        kept: List[Step] = []
        for step in steps:
            if step.next_char not in chars:
                logger.debug("dropping step %r of %r: next character is gone", step, left)
                continue
            if isinstance(step, Lig):
                involved = {step.next_char, step.result} | ({left} if left is not None else set())
                if step.result not in chars or any(
                        font_of.get(s) != plan.default_font for s in involved):
                    raise CrossFontLigature(
                        f"ligature {step.name} on {left}/{step.next_char} crosses base fonts"
                    )
            kept.append(step)
        if kept:
            programs[left] = kept
    return programs


def _apply_kern_overrides(overrides, programs: Dict[Optional[int], List[Step]],
                          chars: Mapping[int, CharDim]):
    for override in overrides:
        for slot in (override.left, override.right):
            if slot not in chars:
                raise SlotAbsentInSource("composed font", slot)
        steps = programs.setdefault(override.left, [])
        position = next((i for i, s in enumerate(steps)
                         if isinstance(s, Krn) and s.next_char == override.right), None)
        if override.value is None:
            if position is not None:
                del steps[position]
        elif position is None:
            steps.append(Krn(override.right, override.value))
        else:
            steps[position] = Krn(override.right, override.value)
        if not steps:
            del programs[override.left]


def _slot(text: str, line: int) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ManifestSyntaxError(line, f"bad slot number {text!r}") from None


def _real(text: str, line: int) -> FixWord:
    try:
        return parse_decimal(text)
    except RangeError as e:
        raise ManifestSyntaxError(line, str(e)) from None


def load_plan(text: str) -> CompositionPlan:
    """Read a plan from `[plan]`, `[font NAME]`, `[slot N]` and `[kern L R]` records."""
    plan: Optional[CompositionPlan] = None
    fonts: Dict[str, str] = {}
    rules: Dict[int, SlotRule] = {}
    kerns: List[KernOverride] = []
    for record in read_records(text):
        f = record.fields
        if record.kind == "plan":
            if "default" not in f:
                raise ManifestSyntaxError(record.line, "[plan] needs a 'default' font")
            design = _real(f["design"], record.line) if "design" in f else None
            plan = CompositionPlan(f["default"], design, title=f.get("title", ""))
        elif record.kind == "font":
            if not record.name or "file" not in f:
                raise ManifestSyntaxError(record.line, "[font NAME] needs a 'file'")
            fonts[record.name] = f["file"]
        elif record.kind == "slot":
            slot = _slot(record.name or "", record.line)
            if slot in rules:
                raise ManifestSyntaxError(record.line, f"slot {slot} has two rules")
            if "font" not in f:
                raise ManifestSyntaxError(record.line, f"[slot {slot}] needs a 'font'")
            rules[slot] = SlotRule(
                f["font"],
                _slot(f.get("slot", str(slot)), record.line),
                _real(f["width"], record.line) if "width" in f else None,
                _real(f["dx"], record.line) if "dx" in f else None,
                _real(f["dy"], record.line) if "dy" in f else None,
            )
        elif record.kind == "kern":
            words = (record.name or "").split()
            if len(words) != 2:
                raise ManifestSyntaxError(record.line, "[kern L R] needs two slots")
            value = f.get("value", "none")
            kerns.append(KernOverride(
                _slot(words[0], record.line), _slot(words[1], record.line),
                None if value.lower() == "none" else _real(value, record.line),
            ))
        else:
            raise ManifestSyntaxError(record.line, f"unknown record [{record.kind}]")
    if plan is None:
        raise CompositionError("composition plan has no [plan] record")
    for rule in rules.values():
        if rule.source_font != plan.default_font and rule.source_font not in fonts:
            raise ManifestSyntaxError(0, f"font {rule.source_font!r} is not declared")
    plan.fonts = fonts
    plan.slot_rules = rules
    plan.kern_overrides = kerns
    return plan
