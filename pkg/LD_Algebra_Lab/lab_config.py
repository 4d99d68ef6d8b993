"""
Run configuration for the lab: limits, output style and the table cache location.
"""
from dataclasses import dataclass, field
from platform import system
from typing import Optional
import os
import sys

import psutil

from .lab_errors import ConfigError

_RESOURCE_DIRECTORY = "resource"

# environment variable consulted when no --cache-dir flag is given
CACHE_ENV_VAR = "LDLAB_CACHE"

DEFAULT_MAX_K = 16
HARD_MAX_K = 24
DEFAULT_FUEL = 100_000
DEFAULT_EQUIV_MAX_K = 20
DEFAULT_SIZE_CAP = 10**6
DEFAULT_SEED = 1

OUTPUT_TEXT = "text"
OUTPUT_JSON = "json"

#https://stackoverflow.com/a/50914550
def resource_path(relativePath: str, basePath: str = _RESOURCE_DIRECTORY) -> str:
    """ Get absolute path to resource, works for dev and for PyInstaller """
    base_path = getattr(sys, '_MEIPASS', os.path.dirname(os.path.abspath(__file__)))
    return os.path.join(base_path, basePath, relativePath)

def get_version(rel_path: str = "_version.py") -> str:
    try:
        with open(resource_path(rel_path), encoding='utf-8') as fp:
            for line in fp.read().splitlines():
                if line.startswith("__version__"):
                    delim = '"' if '"' in line else "'"
                    return line.split(delim)[1]
    except OSError:
        raise RuntimeError("Unable to find _version.py.")
    raise RuntimeError("Unable to find version string.")

def default_memory_cap() -> int:
    """Half of the memory psutil reports as available right now."""
    return psutil.virtual_memory().available // 2

def platform_cache_dir() -> str:
    """Default cache location for the current operating system."""
    if system() == "Windows":
        base = os.environ.get("LOCALAPPDATA", os.path.expanduser("~"))
        return os.path.join(base, "LD_Algebra_Lab", "cache")
    if system() == "Darwin":
        return os.path.join(os.path.expanduser("~"), "Library", "Caches", "LD_Algebra_Lab")
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return os.path.join(base, "ldlab")

def resolve_cache_dir(flag: Optional[str] = None) -> str:
    """flag > LDLAB_CACHE > platform default"""
    if flag:
        return os.path.abspath(os.path.expanduser(flag))
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return os.path.abspath(os.path.expanduser(env))
    return platform_cache_dir()


@dataclass
class Config:
    cache_dir: str = field(default_factory=resolve_cache_dir)
    max_k: int = DEFAULT_MAX_K
    fuel: int = DEFAULT_FUEL
    output: str = OUTPUT_TEXT
    seed: int = DEFAULT_SEED
    force: bool = False
    equiv_max_k: int = DEFAULT_EQUIV_MAX_K
    size_cap: int = DEFAULT_SIZE_CAP
    memory_cap_bytes: int = field(default_factory=default_memory_cap)

    def validate(self) -> "Config":
        if self.max_k < 1:
            raise ConfigError(f"max_k must be at least 1, got {self.max_k}")
        if self.max_k > HARD_MAX_K and not self.force:
            raise ConfigError(f"max_k {self.max_k} exceeds {HARD_MAX_K}; pass --force to override")
        if self.fuel < 1:
            raise ConfigError(f"fuel must be positive, got {self.fuel}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.output not in (OUTPUT_TEXT, OUTPUT_JSON):
            raise ConfigError(f"unknown output style {self.output!r}")
        if self.size_cap < 1:
            raise ConfigError("size_cap must be positive")
        return self

    @property
    def table_level_cap(self) -> int:
        """Largest level build_table accepts under this configuration."""
        return max(HARD_MAX_K, self.max_k) if self.force else HARD_MAX_K
