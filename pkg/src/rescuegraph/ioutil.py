"""Shared helper for loaders that accept either a file path or literal text."""

from __future__ import annotations

from pathlib import Path
from typing import Union


def read_text_or_literal(source: Union[str, Path]) -> str:
    """Return the file content if source names an existing file, else the
    string itself. Strings too long to be a path are always literal text."""
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    try:
        path = Path(source)
        exists = path.exists()
    except (OSError, ValueError):
        return str(source)
    return path.read_text(encoding="utf-8") if exists else str(source)
