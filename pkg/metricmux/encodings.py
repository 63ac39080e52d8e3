"""PostScript encoding vectors and the coding-scheme redeclaration registry."""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

from metricmux.errors import (
    ConflictingRedeclaration, EncSyntaxError, RangeError, UndeclaredScheme, UnknownTarget,
    WrongSlotCount,
)

logger = logging.getLogger(__name__)

NOTDEF = ".notdef"
SLOTS = 256

_TOKEN = re.compile(r"\[|\]|\{|\}|/[^\s\[\]{}()/%<>]*|[^\s\[\]{}()/%<>]+")


@dataclass(frozen=True)
class EncodingVector:
    name: str
    slots: Tuple[str, ...]

    def __post_init__(self):
        if not self.name:
            raise EncSyntaxError("encoding vector needs a name")
        if len(self.slots) != SLOTS:
            raise WrongSlotCount(len(self.slots))

    def slot_of(self, glyph: str) -> Optional[int]:
        try:
            return self.slots.index(glyph)
        except ValueError:
            return None

    def encoded(self) -> Dict[int, str]:
        return {slot: name for slot, name in enumerate(self.slots) if name != NOTDEF}


def _strip_comments(src: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in src.splitlines())


def parse_enc(src: str) -> EncodingVector:
    """Read `/Name [ /g0 ... /g255 ] def`."""
    tokens = _TOKEN.findall(_strip_comments(src))
    if len(tokens) < 2 or not tokens[0].startswith("/") or tokens[1] != "[":
        raise EncSyntaxError("expected '/Name [' at the start of the encoding")
    try:
        close = tokens.index("]")
    except ValueError:
        raise EncSyntaxError("encoding vector is missing ']'") from None
    names = tokens[2:close]
    for token in names:
        if not token.startswith("/") or len(token) < 2:
            raise EncSyntaxError(f"expected a glyph name literal, found {token!r}")
    if tokens[close + 1:close + 2] != ["def"]:
        raise EncSyntaxError("expected 'def' after the encoding vector")
    if len(names) != SLOTS:
        raise WrongSlotCount(len(names))
    return EncodingVector(tokens[0][1:], tuple(name[1:] for name in names))


def emit_enc(v: EncodingVector) -> str:
    lines = [f"/{v.name} ["]
    for start in range(0, SLOTS, 8):
        lines.append(" ".join("/" + name for name in v.slots[start:start + 8]))
    lines.append("] def")
    return "\n".join(lines) + "\n"


def read_enc(path) -> EncodingVector:
    return parse_enc(Path(path).read_text(encoding="latin-1"))


def locate_enc(name: str, directories: Iterable[str]) -> Path:
    """Find an .enc file given as a path or as a bare name on the search path."""
    path = Path(name)
    if path.exists() or path.parent != Path("."):
        return path
    candidates = [name] if path.suffix else [name, name + ".enc"]
    for directory in directories:
        for candidate in candidates:
            found = Path(directory) / candidate
            if found.exists():
                logger.debug("found %s at %s", name, found)
                return found
    return path


def _label(text: str) -> str:
    return text.strip().casefold()


@dataclass(frozen=True)
class EncodingRegistry:
    vectors: Dict[str, EncodingVector] = field(default_factory=dict)
    aliases: Dict[str, str] = field(default_factory=dict)
    declarations: Dict[str, str] = field(default_factory=dict)

    def load(self, vector: EncodingVector, alias: Optional[str] = None) -> "EncodingRegistry":
        """New registry that also knows vector, by its PostScript name and alias."""
        key = _label(vector.name)
        vectors = dict(self.vectors)
        vectors[key] = vector
        aliases = dict(self.aliases)
        if alias:
            aliases[_label(alias)] = key
        return EncodingRegistry(vectors, aliases, dict(self.declarations))

    def load_file(self, path) -> "EncodingRegistry":
        return self.load(read_enc(path), alias=Path(path).stem)

    def target_key(self, name: str) -> Optional[str]:
        key = _label(name)
        if key in self.vectors:
            return key
        return self.aliases.get(key)

    def declare(self, scheme: str, target: str) -> "EncodingRegistry":
        return declare_encoding(self, scheme, target)

    def resolve(self, scheme: str, slot: int) -> str:
        return resolve_slot(self, scheme, slot)

    def vector_for(self, scheme: str) -> EncodingVector:
        key = _label(scheme)
        target = self.declarations.get(key) or self.target_key(scheme)
        if target is None:
            raise UndeclaredScheme(f"coding scheme {scheme!r} is not declared")
        return self.vectors[target]


def declare_encoding(reg: EncodingRegistry, scheme: str, target: str) -> EncodingRegistry:
    """Make metrics labelled `scheme` resolve through the vector `target`."""
    target_key = reg.target_key(target)
    if target_key is None:
        raise UnknownTarget(f"encoding {target!r} is not loaded")
    key = _label(scheme)
    current = reg.declarations.get(key)
    if current == target_key:
        return reg
    if current is not None:
        raise ConflictingRedeclaration(
            f"{scheme!r} is already declared as {reg.vectors[current].name}, not {target}"
        )
    declarations = dict(reg.declarations)
    declarations[key] = target_key
    logger.debug("declared coding scheme %r as %s", scheme, reg.vectors[target_key].name)
    return EncodingRegistry(dict(reg.vectors), dict(reg.aliases), declarations)


def resolve_slot(reg: EncodingRegistry, scheme: str, slot: int) -> str:
    if not 0 <= slot < SLOTS:
        raise RangeError(f"slot {slot} is not 0..255")
    return reg.vector_for(scheme).slots[slot]


def names_vector(scheme: str, enc_file, directories: Iterable[str] = ()) -> EncodingVector:
    """Vector naming the slots of metrics labelled `scheme`, taken from enc_file.

    The scheme (FONTSPECIFIC when empty) is redeclared to the file's vector, so
    anonymous fonts can be listed with glyph names.
    """
    path = locate_enc(str(enc_file), directories)
    scheme = scheme or "FONTSPECIFIC"
    registry = EncodingRegistry().load_file(path).declare(scheme, path.stem)
    return registry.vector_for(scheme)
