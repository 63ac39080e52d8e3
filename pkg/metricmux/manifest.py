"""Build manifests: INI-style step records resolved into a dependency graph."""

import logging
import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Set, Tuple

from metricmux.errors import CycleDetected, DuplicateOutput, ManifestSyntaxError, UnknownOp
from metricmux.utils import Record, read_records

logger = logging.getLogger(__name__)

OPS = (
    "tftopl", "pltotf", "vptovf", "vftovp", "afm2tfm", "compose",
    "ew", "ew2", "unslant", "map", "external",
)
# op keys naming files; they become inputs of the step
FILE_KEYS = ("enc", "plan")
KNOWN_KEYS = {"op", "in", "out", "enc", "plan", "design", "charcode-format", "params",
              "assumed", "method", "tfm", "pfb"}

_PATH_LIST = re.compile(r"[\s,]+")


def _paths(text: str) -> Tuple[str, ...]:
    return tuple(os.path.normpath(p) for p in _PATH_LIST.split(text.strip()) if p)


@dataclass(frozen=True)
class Step:
    index: int
    name: str
    op: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    options: Dict[str, str] = field(default_factory=dict, hash=False, compare=False)
    assumed: bool = False
    method: str = ""
    line: int = 0

    @property
    def label(self) -> str:
        return f"{self.op} {self.name}"


@dataclass
class Manifest:
    steps: List[Step]
    order: List[int]
    producers: Dict[str, int]
    depends_on: Dict[int, Set[int]]

    def __len__(self) -> int:
        return len(self.steps)

    def step(self, index: int) -> Step:
        return self.steps[index - 1]

    def ordered(self) -> List[Step]:
        return [self.step(i) for i in self.order]

    def root_inputs(self) -> List[str]:
        """Paths read by some step and produced by none."""
        seen = []
        for step in self.steps:
            for path in step.inputs:
                if path not in self.producers and path not in seen:
                    seen.append(path)
        return seen

    def dependents(self, index: int) -> Set[int]:
        return {i for i, deps in self.depends_on.items() if index in deps}

    def cone(self, indices) -> Set[int]:
        """The given steps and everything downstream of them."""
        pending = list(indices)
        reached: Set[int] = set()
        while pending:
            i = pending.pop()
            if i in reached:
                continue
            reached.add(i)
            pending.extend(self.dependents(i))
        return reached

    def readers_of(self, path: str) -> Set[int]:
        path = os.path.normpath(path)
        return {s.index for s in self.steps if path in s.inputs}


def _step_from_record(record: Record, index: int) -> Step:
    f = record.fields
    for key in f:
        if key not in KNOWN_KEYS:
            raise ManifestSyntaxError(record.field_lines[key], f"unknown key {key!r}")
    op = f.get("op", "").lower()
    if not op:
        raise ManifestSyntaxError(record.line, "step has no 'op'")
    if op not in OPS:
        raise UnknownOp(f"line {record.field_lines['op']}: unknown op {op!r}")
    if "out" not in f or not _paths(f["out"]):
        raise ManifestSyntaxError(record.line, "step has no 'out'")
    inputs = list(_paths(f.get("in", "")))
    for key in FILE_KEYS:
        if key in f:
            for path in _paths(f[key]):
                if path not in inputs:
                    inputs.append(path)
    if not inputs and op != "external":
        raise ManifestSyntaxError(record.line, f"{op} step has no 'in'")
    options = {k: v for k, v in f.items() if k not in ("op", "in", "out", "assumed", "method")}
    return Step(
        index=index,
        name=record.name or f"step{index}",
        op=op,
        inputs=tuple(inputs),
        outputs=_paths(f["out"]),
        options=options,
        assumed=f.get("assumed", "false").lower() in ("1", "true", "yes"),
        method=f.get("method", ""),
        line=record.line,
    )


def _find_cycle(remaining: Set[int], depends_on: Dict[int, Set[int]], steps: Sequence[Step]) -> List[str]:
    start = min(remaining)
    path = [start]
    position = {start: 0}
    while True:
        nxt = min(d for d in depends_on[path[-1]] if d in remaining)
        if nxt in position:
            cycle = path[position[nxt]:] + [nxt]
            return [steps[i - 1].name for i in cycle]
        position[nxt] = len(path)
        path.append(nxt)


def parse_manifest(src: str) -> Manifest:
    steps: List[Step] = []
    for record in read_records(src):
        if record.kind != "step":
            raise ManifestSyntaxError(record.line, f"unknown record [{record.kind}]")
        steps.append(_step_from_record(record, len(steps) + 1))

    names = set()
    producers: Dict[str, int] = {}
    for step in steps:
        if step.name in names:
            raise ManifestSyntaxError(step.line, f"duplicate step name {step.name!r}")
        names.add(step.name)
        for path in step.outputs:
            if path in producers:
                raise DuplicateOutput(
                    f"{path} is produced by both {steps[producers[path] - 1].name} and {step.name}")
            producers[path] = step.index

    depends_on = {
        step.index: {producers[p] for p in step.inputs if p in producers}
        for step in steps
    }

    # Kahn's algorithm, always taking the earliest ready step in file order
    indegree = {i: len(deps) for i, deps in depends_on.items()}
    order: List[int] = []
    ready = sorted(i for i, n in indegree.items() if n == 0)
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in sorted(depends_on):
            if i in depends_on[j]:
                indegree[j] -= 1
                if indegree[j] == 0:
                    ready.append(j)
        ready.sort()
    if len(order) != len(steps):
        remaining = set(depends_on) - set(order)
        raise CycleDetected(_find_cycle(remaining, depends_on, steps))

    logger.debug("manifest: %d steps, order %s", len(steps), order)
    return Manifest(steps, order, producers, depends_on)


def read_manifest(path) -> Manifest:
    with open(path, encoding="utf-8") as f:
        return parse_manifest(f.read())

