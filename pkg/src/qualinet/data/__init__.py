"""Bundled example model and scenarios."""

from importlib.resources import files
from pathlib import Path


def path(name: str) -> Path:
    """Filesystem path of a bundled data file, e.g. path("cm1.qm")."""
    return Path(str(files(__package__).joinpath(name)))
