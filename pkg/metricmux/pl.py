"""Property-list text for font metrics: the tftopl/pltotf pair."""

import bisect
import enum
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from metricmux.errors import (
    DuplicateCharacter, MissingEncoding, PlSyntaxError, RangeError, UnknownProperty,
    ValueOutOfRange,
)
from metricmux.fixword import UNIT, FixWord, format_decimal, parse_decimal, round_half_away
from metricmux.ligkern import (
    Instruction, Krn, Label, Lig, Skip, Stop, apply_ligtable, decompile_ligtable,
)
from metricmux.metrics import (
    LIG_OPS, CharDim, CharTag, ExtensibleRecipe, FontMetrics, param_names_for,
)
from metricmux.tfm import compute_checksum

logger = logging.getLogger(__name__)

INDENT = "   "


class CharcodeFormat(str, enum.Enum):
    DEFAULT = "default"
    OCTAL = "octal"
    NAMES = "names"


# Reading

@dataclass
class Atom:
    text: str
    line: int
    column: int


@dataclass
class Node:
    name: str
    line: int
    column: int
    items: List[Union[Atom, "Node"]] = field(default_factory=list)
    raw: str = ""

    def atoms(self) -> List[Atom]:
        return [item for item in self.items if isinstance(item, Atom)]

    def children(self) -> List["Node"]:
        return [item for item in self.items if isinstance(item, Node)]


class _TreeReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.newlines = [i for i, ch in enumerate(text) if ch == "\n"]

    def where(self, pos: int) -> Tuple[int, int]:
        line = bisect.bisect_left(self.newlines, pos)
        start = self.newlines[line - 1] + 1 if line else 0
        return line + 1, pos - start + 1

    def error(self, expected: str, pos: Optional[int] = None) -> PlSyntaxError:
        return PlSyntaxError(*self.where(self.pos if pos is None else pos), expected)

    def skip_blanks(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def word(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and not self.text[self.pos].isspace() \
                and self.text[self.pos] not in "()":
            self.pos += 1
        return self.text[start:self.pos]

    def read_all(self) -> List[Node]:
        nodes = []
        while True:
            self.skip_blanks()
            if self.pos >= len(self.text):
                return nodes
            if self.text[self.pos] != "(":
                raise self.error("'('")
            nodes.append(self.read_node())

    def read_node(self) -> Node:
        line, column = self.where(self.pos)
        self.pos += 1
        self.skip_blanks()
        name = self.word()
        if not name:
            raise self.error("a property name")
        node = Node(name.upper(), line, column)
        body_start = self.pos
        if node.name == "COMMENT":
            depth = 1
            while depth:
                if self.pos >= len(self.text):
                    raise self.error("')' closing COMMENT")
                depth += {"(": 1, ")": -1}.get(self.text[self.pos], 0)
                self.pos += 1
            node.raw = self.text[body_start:self.pos - 1].strip()
            return node
        while True:
            self.skip_blanks()
            if self.pos >= len(self.text):
                raise self.error(f"')' closing {node.name}")
            ch = self.text[self.pos]
            if ch == ")":
                node.raw = self.text[body_start:self.pos].strip()
                self.pos += 1
                return node
            if ch == "(":
                node.items.append(self.read_node())
            else:
                at = self.where(self.pos)
                node.items.append(Atom(self.word(), *at))


def read_property_list(src: str) -> List[Node]:
    text = src.replace("\r\n", "\n").replace("\r", "\n")
    return _TreeReader(text).read_all()


FACE_WEIGHTS = "MBL"
FACE_SLOPES = "RI"
FACE_EXPANSIONS = "RCE"


def _face_code(text: str) -> Optional[int]:
    if len(text) != 3:
        return None
    w, s, e = text.upper()
    if w not in FACE_WEIGHTS or s not in FACE_SLOPES or e not in FACE_EXPANSIONS:
        return None
    return 2 * FACE_WEIGHTS.index(w) + FACE_SLOPES.index(s) + 6 * FACE_EXPANSIONS.index(e)


def _face_text(face: int) -> str:
    return (FACE_WEIGHTS[(face % 6) // 2] + FACE_SLOPES[face % 2] + FACE_EXPANSIONS[face // 6])


class Values:
    """Cursor over the atoms of one property."""

    def __init__(self, node: Node):
        self.node = node
        self.atoms = node.atoms()
        self.i = 0

    def _expect(self, what: str) -> PlSyntaxError:
        if self.i < len(self.atoms):
            atom = self.atoms[self.i]
            return PlSyntaxError(atom.line, atom.column, what)
        return PlSyntaxError(self.node.line, self.node.column, f"{what} in {self.node.name}")

    def take(self, what: str) -> Atom:
        if self.i >= len(self.atoms):
            raise self._expect(what)
        atom = self.atoms[self.i]
        self.i += 1
        return atom

    def number(self, allow_face: bool = False) -> int:
        kind = self.take("a number type C, O, D, H or F")
        value = self.take("a value")
        k = kind.text.upper()
        try:
            if k == "C" and len(value.text) == 1:
                return ord(value.text)
            if k == "O":
                return int(value.text, 8)
            if k == "D":
                return int(value.text, 10)
            if k == "H":
                return int(value.text, 16)
            if k == "F" and allow_face:
                code = _face_code(value.text)
                if code is not None:
                    return code
        except ValueError:
            pass
        raise PlSyntaxError(kind.line, kind.column, f"a valid {k} constant, not {value.text!r}")

    def byte(self) -> int:
        at = self.atoms[self.i] if self.i < len(self.atoms) else None
        value = self.number()
        if not 0 <= value <= 255:
            raise ValueOutOfRange(f"character code {value} is not 0..255", at.line if at else 0)
        return value

    def fix(self) -> FixWord:
        kind = self.take("a real constant R")
        value = self.take("a real value")
        if kind.text.upper() not in ("R", "D"):
            raise PlSyntaxError(kind.line, kind.column, "a real constant R")
        try:
            return parse_decimal(value.text)
        except RangeError as e:
            raise ValueOutOfRange(str(e), value.line) from e

    def end(self):
        if self.i < len(self.atoms):
            atom = self.atoms[self.i]
            raise PlSyntaxError(atom.line, atom.column, f"')' after {self.node.name}")


Handler = Callable[[Node], None]


class PlParser:
    """Reads a property list into FontMetrics; subclasses add VPL properties."""

    def __init__(self, src: str):
        self.nodes = read_property_list(src)
        self.checksum: Optional[int] = None
        self.design_size = FixWord(10 * UNIT)
        self.design_units = FixWord(UNIT)
        self.coding_scheme = ""
        self.family = ""
        self.face = 0
        self.seven_bit_safe = False
        self.bchar: Optional[int] = None
        self.params: Dict[int, FixWord] = {}
        self.ligtable: List[Instruction] = []
        self.chars: Dict[int, dict] = {}
        self.comments: List[str] = []

    def top_handlers(self) -> Dict[str, Handler]:
        return {
            "CHECKSUM": self._checksum,
            "DESIGNSIZE": self._design_size,
            "DESIGNUNITS": self._design_units,
            "CODINGSCHEME": self._coding_scheme,
            "FAMILY": self._family,
            "FACE": self._face,
            "SEVENBITSAFEFLAG": self._seven_bit_safe,
            "HEADER": self._header,
            "FONTDIMEN": self._fontdimen,
            "LIGTABLE": self._ligtable,
            "BOUNDARYCHAR": self._boundary_char,
            "CHARACTER": self._character,
            "COMMENT": self._comment,
        }

    def character_handlers(self) -> Dict[str, Callable[[Node, dict], None]]:
        return {
            "CHARWD": lambda n, c: self._char_dim(n, c, "width"),
            "CHARHT": lambda n, c: self._char_dim(n, c, "height"),
            "CHARDP": lambda n, c: self._char_dim(n, c, "depth"),
            "CHARIC": lambda n, c: self._char_dim(n, c, "italic"),
            "NEXTLARGER": self._next_larger,
            "VARCHAR": self._varchar,
            "COMMENT": lambda n, c: None,
        }

    def parse(self) -> FontMetrics:
        handlers = self.top_handlers()
        for node in self.nodes:
            handler = handlers.get(node.name)
            if handler is None:
                raise UnknownProperty(node.line, node.column, node.name)
            handler(node)
        return self.build()

    # top-level properties

    def _checksum(self, node: Node):
        values = Values(node)
        value = values.number()
        values.end()
        if not 0 <= value <= 0xFFFFFFFF:
            raise ValueOutOfRange("checksum must fit in 32 bits", node.line)
        self.checksum = value

    def _design_size(self, node: Node):
        values = Values(node)
        value = values.fix()
        if value.raw < UNIT:
            raise ValueOutOfRange("the design size must be at least 1", node.line)
        self.design_size = value

    def _design_units(self, node: Node):
        value = Values(node).fix()
        if value.raw <= 0:
            raise ValueOutOfRange("the number of units per design size must be positive", node.line)
        self.design_units = value

    def _coding_scheme(self, node: Node):
        if len(node.raw) > 39:
            raise ValueOutOfRange("CODINGSCHEME is longer than 39 characters", node.line)
        self.coding_scheme = node.raw

    def _family(self, node: Node):
        if len(node.raw) > 19:
            raise ValueOutOfRange("FAMILY is longer than 19 characters", node.line)
        self.family = node.raw

    def _face(self, node: Node):
        values = Values(node)
        value = values.number(allow_face=True)
        if not 0 <= value <= 255:
            raise ValueOutOfRange("FACE must be 0..255", node.line)
        self.face = value

    def _seven_bit_safe(self, node: Node):
        flag = Values(node).take("TRUE or FALSE").text.upper()
        if flag not in ("TRUE", "FALSE"):
            raise PlSyntaxError(node.line, node.column, "TRUE or FALSE")
        self.seven_bit_safe = flag == "TRUE"

    def _header(self, node: Node):
        values = Values(node)
        index = values.number()
        if index < 18:
            raise ValueOutOfRange("HEADER indices below 18 are reserved", node.line)
        logger.warning("line %d: ignoring HEADER word %d", node.line, index)

    def _fontdimen(self, node: Node):
        names = {name: index for index, name in param_names_for(self.coding_scheme).items()}
        for child in node.children():
            if child.name == "COMMENT":
                continue
            values = Values(child)
            if child.name == "PARAMETER":
                index = values.number()
                if not 1 <= index <= 254:
                    raise ValueOutOfRange(f"PARAMETER index {index} must be 1..254", child.line)
            elif child.name in names:
                index = names[child.name]
            else:
                raise UnknownProperty(child.line, child.column, child.name)
            self.params[index] = values.fix()
            values.end()

    def _ligtable(self, node: Node):
        for child in node.children():
            values = Values(child)
            if child.name == "COMMENT":
                continue
            if child.name == "LABEL":
                atoms = child.atoms()
                if atoms and atoms[0].text.upper() == "BOUNDARYCHAR":
                    self.ligtable.append(Label(None))
                else:
                    self.ligtable.append(Label(values.byte()))
            elif child.name in LIG_OPS:
                self.ligtable.append(Lig(LIG_OPS[child.name], values.byte(), values.byte()))
            elif child.name == "KRN":
                self.ligtable.append(Krn(values.byte(), values.fix()))
            elif child.name == "STOP":
                self.ligtable.append(Stop())
            elif child.name == "SKIP":
                self.ligtable.append(Skip(values.number()))
            else:
                raise UnknownProperty(child.line, child.column, child.name)

    def _boundary_char(self, node: Node):
        self.bchar = Values(node).byte()

    def _character(self, node: Node):
        slot = Values(node).byte()
        if slot in self.chars:
            raise DuplicateCharacter(slot, node.line)
        char = {"width": FixWord(0), "height": FixWord(0), "depth": FixWord(0),
                "italic": FixWord(0), "tag": CharTag.NONE, "remainder": 0}
        self.chars[slot] = char
        handlers = self.character_handlers()
        for child in node.children():
            handler = handlers.get(child.name)
            if handler is None:
                raise UnknownProperty(child.line, child.column, child.name)
            handler(child, char)

    def _comment(self, node: Node):
        self.comments.append(node.raw)

    # character properties

    def _char_dim(self, node: Node, char: dict, key: str):
        values = Values(node)
        char[key] = values.fix()
        values.end()

    def _set_tag(self, node: Node, char: dict, tag: CharTag, remainder):
        if char["tag"] != CharTag.NONE:
            raise ValueOutOfRange(f"this character already has a {char['tag'].name} tag", node.line)
        char["tag"] = tag
        char["remainder"] = remainder

    def _next_larger(self, node: Node, char: dict):
        self._set_tag(node, char, CharTag.LIST, Values(node).byte())

    def _varchar(self, node: Node, char: dict):
        parts = {"TOP": 0, "MID": 0, "BOT": 0, "REP": 0}
        for child in node.children():
            if child.name == "COMMENT":
                continue
            if child.name not in parts:
                raise UnknownProperty(child.line, child.column, child.name)
            parts[child.name] = Values(child).byte()
        self._set_tag(node, char, CharTag.EXT,
                      ExtensibleRecipe(parts["TOP"], parts["MID"], parts["BOT"], parts["REP"]))

    # assembly

    def scale(self, value: FixWord) -> FixWord:
        if self.design_units.raw == UNIT:
            return value
        return FixWord(round_half_away(Fraction(value.raw * UNIT, self.design_units.raw)))

    def build(self) -> FontMetrics:
        chars: Dict[int, CharDim] = {}
        extensibles: List[ExtensibleRecipe] = []
        for slot in sorted(self.chars):
            char = self.chars[slot]
            remainder = char["remainder"]
            if char["tag"] == CharTag.EXT:
                extensibles.append(remainder)
                remainder = len(extensibles) - 1
            chars[slot] = CharDim(
                self.scale(char["width"]), self.scale(char["height"]),
                self.scale(char["depth"]), self.scale(char["italic"]),
                char["tag"], remainder,
            )
        params = [FixWord(0)] * max(self.params, default=0)
        for index, value in self.params.items():
            params[index - 1] = value if index == 1 else self.scale(value)

        m = FontMetrics.from_chars(
            chars,
            design_size=self.design_size,
            coding_scheme=self.coding_scheme,
            family=self.family,
            params=tuple(params),
            extensibles=tuple(extensibles),
            seven_bit_safe=self.seven_bit_safe,
            face=self.face,
            comments=tuple(self.comments),
        )
        if self.ligtable or self.bchar is not None:
            ligtable = [Krn(i.next_char, self.scale(i.value)) if isinstance(i, Krn) else i
                        for i in self.ligtable]
            m = apply_ligtable(m, ligtable, self.bchar)
        checksum = self.checksum if self.checksum is not None else compute_checksum(m)
        return m.replace(checksum=checksum)


def parse_pl(src: str) -> FontMetrics:
    return PlParser(src).parse()


# Writing

class PlWriter:
    def __init__(self, fmt: CharcodeFormat = CharcodeFormat.DEFAULT, names=None):
        fmt = CharcodeFormat(fmt)
        if fmt == CharcodeFormat.NAMES and names is None:
            raise MissingEncoding("charcode format 'names' needs an encoding vector")
        self.fmt = fmt
        self.names = names
        self.lines: List[str] = []
        self.depth = 0

    def charcode(self, slot: int) -> str:
        if self.fmt == CharcodeFormat.DEFAULT and 0x21 <= slot <= 0x7E and chr(slot) not in "()":
            return f"C {chr(slot)}"
        return f"O {slot:o}"

    def leaf(self, name: str, *values: str):
        self.lines.append(INDENT * self.depth + "(" + " ".join((name,) + values) + ")")

    def open(self, name: str, *values: str):
        self.lines.append(INDENT * self.depth + "(" + " ".join((name,) + values))
        self.depth += 1

    def close(self):
        self.lines.append(INDENT * self.depth + ")")
        self.depth -= 1

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def write_header(self, m: FontMetrics):
        for comment in m.comments:
            self.leaf("COMMENT", comment)
        if m.family:
            self.leaf("FAMILY", m.family)
        if m.face:
            self.leaf("FACE", f"F {_face_text(m.face)}" if m.face < 18 else f"O {m.face:o}")
        if m.coding_scheme:
            self.leaf("CODINGSCHEME", m.coding_scheme)
        self.leaf("DESIGNSIZE", f"R {format_decimal(m.design_size)}")
        self.leaf("CHECKSUM", f"O {m.checksum:o}")
        if m.seven_bit_safe:
            self.leaf("SEVENBITSAFEFLAG", "TRUE")

    def write_params(self, m: FontMetrics):
        if not m.params:
            return
        names = param_names_for(m.coding_scheme)
        self.open("FONTDIMEN")
        for index, value in enumerate(m.params, start=1):
            if index in names:
                self.leaf(names[index], f"R {format_decimal(value)}")
            else:
                self.leaf("PARAMETER", f"D {index}", f"R {format_decimal(value)}")
        self.close()

    def write_ligtable(self, m: FontMetrics):
        if m.boundary_char is not None:
            self.leaf("BOUNDARYCHAR", self.charcode(m.boundary_char))
        instructions = decompile_ligtable(m)
        if not instructions:
            return
        self.open("LIGTABLE")
        for inst in instructions:
            if isinstance(inst, Label):
                self.leaf("LABEL", "BOUNDARYCHAR" if inst.slot is None else self.charcode(inst.slot))
            elif isinstance(inst, Lig):
                self.leaf(inst.name, self.charcode(inst.next_char), self.charcode(inst.result))
            elif isinstance(inst, Krn):
                self.leaf("KRN", self.charcode(inst.next_char), f"R {format_decimal(inst.value)}")
            elif isinstance(inst, Stop):
                self.leaf("STOP")
            elif isinstance(inst, Skip):
                self.leaf("SKIP", f"D {inst.count}")
        self.close()

    def write_character(self, m: FontMetrics, slot: int, extra: Callable[[], None] = None):
        dim = m.chars[slot]
        self.open("CHARACTER", self.charcode(slot))
        if self.fmt == CharcodeFormat.NAMES:
            self.leaf("COMMENT", self.names.slots[slot])
        self.leaf("CHARWD", f"R {format_decimal(dim.width)}")
        for name, value in (("CHARHT", dim.height), ("CHARDP", dim.depth), ("CHARIC", dim.italic)):
            if value.raw:
                self.leaf(name, f"R {format_decimal(value)}")
        if dim.tag == CharTag.LIST:
            self.leaf("NEXTLARGER", self.charcode(dim.remainder))
        elif dim.tag == CharTag.EXT:
            recipe = m.extensibles[dim.remainder]
            self.open("VARCHAR")
            for name, part in (("TOP", recipe.top), ("MID", recipe.mid), ("BOT", recipe.bot)):
                if part:
                    self.leaf(name, self.charcode(part))
            self.leaf("REP", self.charcode(recipe.rep))
            self.close()
        if extra is not None:
            extra()
        self.close()


def emit_pl(m: FontMetrics, fmt: CharcodeFormat = CharcodeFormat.DEFAULT, names=None) -> str:
    """Property list for m; with fmt=names every character carries its glyph name."""
    writer = PlWriter(fmt, names)
    writer.write_header(m)
    writer.write_params(m)
    writer.write_ligtable(m)
    for slot in sorted(m.chars):
        writer.write_character(m, slot)
    return writer.text()


def character_labels(text: str) -> Sequence[Tuple[str, str]]:
    """(charcode, comment) of every CHARACTER in a names-mode property list."""
    labels = []
    for node in read_property_list(text):
        if node.name == "CHARACTER":
            comments = [c.raw for c in node.children() if c.name == "COMMENT"]
            labels.append((" ".join(a.text for a in node.atoms()), comments[0] if comments else ""))
    return labels
