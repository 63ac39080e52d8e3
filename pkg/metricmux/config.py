import os
from pathlib import Path
from typing import List

from PyQt6.QtCore import QSettings

DEFAULT_CACHE_DIR = ".cache"


def cpu_count() -> int:
    try:
        import psutil
        count = psutil.cpu_count(logical=True)
    except ImportError:
        count = None
    return count or os.cpu_count() or 1


class Settings:
    """User defaults for the command line tools. Flags always win over these."""

    def __init__(self):
        self.settings = QSettings("MetricMux", "MetricMux")

    @property
    def jobs(self) -> int:
        jobs = self.settings.value("jobs", 0, type=int)
        return jobs if jobs > 0 else cpu_count()

    @property
    def cache_dir(self) -> str:
        return self.settings.value("cache_dir", DEFAULT_CACHE_DIR, type=str) or DEFAULT_CACHE_DIR

    def cache_dir_for(self, manifest_path) -> Path:
        cache = Path(self.cache_dir)
        if cache.is_absolute():
            return cache
        return Path(manifest_path).resolve().parent / cache

    @property
    def charcode_format(self) -> str:
        return self.settings.value("charcode_format", "default", type=str) or "default"

    @property
    def design_size(self) -> float:
        return self.settings.value("design_size", 10.0, type=float)

    @property
    def enc_path(self) -> List[str]:
        value = self.settings.value("enc_path", [], type=list)
        if isinstance(value, str):
            value = value.split(os.pathsep)
        return [d for d in value if d]

    @property
    def log_level(self) -> str:
        return self.settings.value("log_level", "WARNING", type=str) or "WARNING"
