"""Content-addressed store of step results, keyed by a fingerprint of the step and its inputs."""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from metricmux.manifest import Step
from metricmux.utils import bytes_digest, write_atomic

logger = logging.getLogger(__name__)

DIGEST_ALGORITHM = "sha256"
FORMAT_VERSION = 1


def _path_from_hash(digest: str) -> Path:
    return Path(digest[:2]) / digest[2:]


def step_fingerprint(step: Step, input_digests: Mapping[str, str]) -> str:
    """Digest over the op, its keys, its outputs and the digests of its inputs."""
    payload = {
        "version": FORMAT_VERSION,
        "op": step.op,
        "options": dict(sorted(step.options.items())),
        "inputs": [[path, input_digests[path]] for path in step.inputs],
        "outputs": list(step.outputs),
    }
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    fingerprint: str
    outputs: Dict[str, str]  # output path -> digest
    algorithm: str = DIGEST_ALGORITHM


class CacheStore:
    def __init__(self, root):
        self.root = Path(root)

    def _entry_path(self, fingerprint: str) -> Path:
        return self.root / "entries" / f"{fingerprint}.json"

    def _object_path(self, digest: str) -> Path:
        return self.root / "objects" / _path_from_hash(digest)

    def lookup(self, fingerprint: str) -> Optional[CacheEntry]:
        path = self._entry_path(fingerprint)
        if not path.is_file():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            logger.warning("ignoring unreadable cache entry %s: %s", path, e)
            return None
        if data.get("algorithm") != DIGEST_ALGORITHM:
            return None
        entry = CacheEntry(fingerprint, dict(data.get("outputs", {})), data["algorithm"])
        if not all(self._object_path(d).is_file() for d in entry.outputs.values()):
            logger.debug("cache entry %s refers to missing objects", fingerprint[:12])
            return None
        return entry

    def load(self, digest: str) -> bytes:
        data = self._object_path(digest).read_bytes()
        if bytes_digest(data) != digest:
            raise OSError(f"cache object {digest} is corrupt")
        return data

    def store(self, fingerprint: str, outputs: Mapping[str, bytes]) -> CacheEntry:
        digests = {}
        for path, data in outputs.items():
            digest = bytes_digest(data)
            target = self._object_path(digest)
            if not target.is_file():
                write_atomic(target, data)
            digests[path] = digest
        entry = CacheEntry(fingerprint, digests)
        record = {"algorithm": entry.algorithm, "outputs": digests, "version": FORMAT_VERSION}
        write_atomic(self._entry_path(fingerprint),
                     json.dumps(record, indent=2, sort_keys=True).encode("utf-8"))
        return entry

    def restore(self, entry: CacheEntry, base: Path,
                paths: Optional[Sequence[str]] = None) -> List[str]:
        """
        Write back the entry's outputs that are missing under base.

        Existing files are kept even when their bytes differ from the cache.
        """
        restored = []
        for path, digest in entry.outputs.items():
            if paths is not None and path not in paths:
                continue
            target = base / path
            if target.exists():
                if bytes_digest(target.read_bytes()) != digest:
                    logger.info("keeping edited %s", path)
                continue
            write_atomic(target, self.load(digest))
            restored.append(path)
        return restored
