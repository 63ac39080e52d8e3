import contextlib
import hashlib
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from metricmux.errors import ManifestSyntaxError

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

METRIC_EXTENSIONS = ('.tfm', '.pl', '.vf', '.vpl', '.afm', '.enc', '.pfb', '.pfa')

logger = logging.getLogger(__name__)


def find_font_files(paths: Iterable[Union[str, Path]],
                    extensions: Iterable[str] = METRIC_EXTENSIONS) -> List[Path]:
    """
    Expand files and directories into the font files under them.

    Directories are searched recursively; suffixes match case-insensitively.
    Paths that do not exist are logged and skipped.
    """
    wanted = {ext.lower() for ext in extensions}
    found = set()
    for entry in map(Path, paths):
        if entry.is_dir():
            found.update(p for p in entry.rglob("*") if p.is_file() and p.suffix.lower() in wanted)
        elif entry.is_file():
            if entry.suffix.lower() in wanted:
                found.add(entry)
            else:
                logger.debug("skipping %s: not a font file", entry)
        else:
            logger.warning("%s does not exist", entry)
    return sorted(found)


def configure_logging(level: Union[int, str] = logging.WARNING):
    """Route every metricmux logger to stderr at the given level."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    root = logging.getLogger("metricmux")
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def bytes_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_digest(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_atomic(path: Union[str, Path], data: bytes):
    """Write to a uniquely named temporary sibling, then rename over path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


@dataclass
class Record:
    kind: str
    name: Optional[str]
    line: int
    fields: Dict[str, str] = field(default_factory=dict)
    field_lines: Dict[str, int] = field(default_factory=dict)


def read_records(text: str) -> List[Record]:
    """
    Reads INI-style records: `[kind]` or `[kind name ...]` headers followed by
    `key = value` lines. Headers may repeat; `#` starts a comment.
    """
    records: List[Record] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ManifestSyntaxError(number, "unterminated section header")
            words = line[1:-1].split(None, 1)
            if not words:
                raise ManifestSyntaxError(number, "empty section header")
            records.append(Record(words[0].lower(), words[1].strip() if len(words) > 1 else None,
                                  number))
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ManifestSyntaxError(number, f"expected 'key = value', found {line!r}")
        if not records:
            raise ManifestSyntaxError(number, "key outside of a section")
        key = key.strip().lower()
        if key in records[-1].fields:
            raise ManifestSyntaxError(number, f"duplicate key {key!r}")
        records[-1].fields[key] = value.strip()
        records[-1].field_lines[key] = number
    return records
