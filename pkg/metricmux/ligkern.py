"""Lig/kern programs: compiling LIGTABLE instructions into TFM words and back.

The compiler follows pltotf (label table, boundary char words, indirect
starts for labels beyond 255, kern deduplication) and the decompiler
follows tftopl, so a program compiled here decompiles to the same list.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from metricmux.errors import ValueOutOfRange
from metricmux.fixword import FixWord
from metricmux.metrics import (
    KERN_FLAG, LIG_NAMES, STOP_FLAG, CharDim, CharTag, FontMetrics, LigKernStep,
)

logger = logging.getLogger(__name__)

MAX_SKIP = 127


@dataclass(frozen=True)
class Label:
    slot: Optional[int]  # None labels the left boundary program


@dataclass(frozen=True)
class Lig:
    op: int
    next_char: int
    result: int

    @property
    def name(self) -> str:
        return LIG_NAMES[self.op]


@dataclass(frozen=True)
class Krn:
    next_char: int
    value: FixWord


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Skip:
    count: int


Instruction = Union[Label, Lig, Krn, Stop, Skip]
Step = Union[Lig, Krn]


class CompiledProgram(NamedTuple):
    steps: Tuple[LigKernStep, ...]
    kerns: Tuple[FixWord, ...]
    starts: Dict[int, int]  # char_info remainder for every labelled char


def compile_ligtable(instructions: Sequence[Instruction],
                     bchar: Optional[int] = None) -> CompiledProgram:
    body: List[List[int]] = []
    kerns: List[FixWord] = []
    labels: Dict[int, int] = {}
    bchar_label = None
    min_nl = 0
    step_ended = False

    for inst in instructions:
        nl = len(body)
        if isinstance(inst, Label):
            if inst.slot is None:
                if bchar_label is not None:
                    raise ValueOutOfRange("LABEL BOUNDARYCHAR appears twice")
                bchar_label = nl
            else:
                if inst.slot in labels:
                    raise ValueOutOfRange(f"character {inst.slot:o} already appeared in a LABEL")
                labels[inst.slot] = nl
            min_nl = max(min_nl, nl + 1)
            step_ended = False
        elif isinstance(inst, Lig):
            if inst.op not in LIG_NAMES:
                raise ValueOutOfRange(f"invalid ligature op {inst.op}")
            body.append([0, inst.next_char, inst.op, inst.result])
            step_ended = True
        elif isinstance(inst, Krn):
            try:
                index = kerns.index(inst.value)
            except ValueError:
                index = len(kerns)
                kerns.append(inst.value)
            body.append([0, inst.next_char, KERN_FLAG + index // 256, index % 256])
            step_ended = True
        elif isinstance(inst, Stop):
            if not step_ended:
                raise ValueOutOfRange("STOP must follow LIG or KRN")
            body[-1][0] = STOP_FLAG
            step_ended = False
        elif isinstance(inst, Skip):
            if not step_ended:
                raise ValueOutOfRange("SKIP must follow LIG or KRN")
            if not 0 <= inst.count <= MAX_SKIP:
                raise ValueOutOfRange(f"maximum SKIP amount is {MAX_SKIP}")
            body[-1][0] = inst.count
            min_nl = max(min_nl, nl + inst.count + 1)
            step_ended = False
        else:
            raise TypeError(f"not a lig/kern instruction: {inst!r}")

    if len(body) < min_nl:
        raise ValueOutOfRange("LIGTABLE ends with a LABEL or SKIP that has no target step")

    starts, prefix, offset = _allocate_starts(labels, bchar)
    steps = [LigKernStep(*word) for word in prefix]
    steps.extend(LigKernStep(*word) for word in body)
    if bchar_label is not None:
        target = bchar_label + offset
        steps.append(LigKernStep(255, 0, target // 256, target % 256))
    return CompiledProgram(tuple(steps), tuple(kerns), starts)


def _allocate_starts(labels: Dict[int, int], bchar: Optional[int]):
    """Assign char_info remainders, adding indirect words when starts exceed 255."""
    table = sorted((start, slot) for slot, start in labels.items())
    offset = 1 if bchar is not None else 0
    extra_word = bchar is not None
    starts: Dict[int, int] = {}
    targets: List[int] = []
    ptr = len(table) - 1
    if table and table[ptr][0] + offset > 255:
        offset = 0
        extra_word = False
        while True:
            rr = table[ptr][0]
            while ptr >= 0 and table[ptr][0] == rr:
                starts[table[ptr][1]] = offset
                ptr -= 1
            targets.append(rr)
            offset += 1
            if ptr < 0 or offset + table[ptr][0] < 256:
                break
        if offset > 255:
            raise ValueOutOfRange("too many distinct lig/kern start locations")
    for start, slot in table[:ptr + 1]:
        starts[slot] = start + offset

    if extra_word:
        prefix = [[255, bchar, 0, 0]]
    else:
        first = (255, bchar) if bchar is not None else (254, 0)
        prefix = [[*first, (t + offset) // 256, (t + offset) % 256] for t in targets]
    return starts, prefix, offset


def _prefix_length(program: Sequence[LigKernStep]) -> int:
    prefix = 0
    while prefix < len(program) and program[prefix].skip > STOP_FLAG:
        prefix += 1
    return prefix


def boundary_label(program: Sequence[LigKernStep]) -> Optional[int]:
    """Start of the left boundary program, held in the final word."""
    if _prefix_length(program) < len(program) and program[-1].skip == 255:
        return program[-1].pointer
    return None


def decompile_ligtable(m: FontMetrics) -> List[Instruction]:
    """Render m's program as LIGTABLE instructions the way tftopl lists them."""
    program = m.ligkern
    if not program:
        return []
    prefix = _prefix_length(program)
    bchar_label = boundary_label(program)
    end = len(program) - (1 if bchar_label is not None else 0)

    labels: Dict[int, List[Optional[int]]] = {}
    if bchar_label is not None:
        labels.setdefault(bchar_label, []).append(None)
    for slot in sorted(m.chars):
        start = m.lig_start(slot)
        if start is not None:
            labels.setdefault(start, []).append(slot)

    instructions: List[Instruction] = []
    for i in range(prefix, end):
        step = program[i]
        instructions.extend(Label(slot) for slot in labels.get(i, ()))
        if step.skip > STOP_FLAG:
            logger.debug("dropping pass-through lig/kern word %d", i)
            continue
        instructions.append(_step_instruction(m, step))
        if step.skip >= STOP_FLAG:
            instructions.append(Stop())
        elif step.skip > 0:
            instructions.append(Skip(step.skip))
    return instructions


def _step_instruction(m: FontMetrics, step: LigKernStep) -> Step:
    if step.is_kern:
        return Krn(step.next_char, m.kerns[step.kern_index])
    return Lig(step.op, step.next_char, step.remainder)


def char_programs(m: FontMetrics) -> Dict[Optional[int], List[Step]]:
    """Effective lig/kern steps per character; key None is the left boundary."""
    programs: Dict[Optional[int], List[Step]] = {}
    starts: Dict[Optional[int], int] = {}
    program = m.ligkern
    if boundary_label(program) is not None:
        starts[None] = boundary_label(program)
    for slot in m.chars:
        start = m.lig_start(slot)
        if start is not None:
            starts[slot] = start
    for key, r in starts.items():
        steps: List[Step] = []
        while 0 <= r < len(program):
            step = program[r]
            if step.skip > STOP_FLAG:
                break
            steps.append(_step_instruction(m, step))
            if step.skip >= STOP_FLAG:
                break
            r += 1 + step.skip
        programs[key] = steps
    return programs


def build_ligtable(programs: Mapping[Optional[int], Sequence[Step]]) -> List[Instruction]:
    """Group characters with identical programs under shared labels."""
    groups: Dict[Tuple[Step, ...], List[Optional[int]]] = {}
    for key in sorted(programs, key=lambda k: -1 if k is None else k):
        steps = tuple(programs[key])
        if steps:
            groups.setdefault(steps, []).append(key)
    instructions: List[Instruction] = []
    for steps, keys in groups.items():
        instructions.extend(Label(k) for k in keys)
        instructions.extend(steps)
        instructions.append(Stop())
    return instructions


def apply_ligtable(m: FontMetrics, instructions: Sequence[Instruction],
                   bchar: Optional[int] = None) -> FontMetrics:
    """Compile instructions into m, retagging the labelled characters."""
    compiled = compile_ligtable(instructions, bchar)
    chars: Dict[int, CharDim] = {}
    for slot, dim in m.chars.items():
        if slot in compiled.starts:
            if dim.tag not in (CharTag.NONE, CharTag.LIG):
                raise ValueOutOfRange(f"character {slot:o} already has a {dim.tag.name} tag")
            dim = CharDim(dim.width, dim.height, dim.depth, dim.italic,
                          CharTag.LIG, compiled.starts[slot])
        elif dim.tag == CharTag.LIG:
            dim = CharDim(dim.width, dim.height, dim.depth, dim.italic)
        chars[slot] = dim
    missing = sorted(set(compiled.starts) - set(chars))
    if missing:
        raise ValueOutOfRange(f"LABEL for nonexistent character {missing[0]:o}")
    return m.replace(chars=chars, ligkern=compiled.steps, kerns=compiled.kerns)


def set_char_programs(m: FontMetrics, programs: Mapping[Optional[int], Sequence[Step]],
                      bchar: Optional[int] = None) -> FontMetrics:
    return apply_ligtable(m, build_ligtable(programs), bchar)


def normalize_ligkern(m: FontMetrics) -> FontMetrics:
    """Recompile m's program, merging kern table entries that became equal."""
    if not m.ligkern:
        return m
    return apply_ligtable(m, decompile_ligtable(m), m.boundary_char)
