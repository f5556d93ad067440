"""Atomic text output.

Report and model writers go through `atomic_write_text` so a failure part-way
through never leaves a truncated file behind: content lands in a temp file in
the destination directory and is renamed into place only when complete.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .errors import IoFailure


def atomic_write_text(path, text: str) -> None:
    target = Path(path)
    try:
        fd, tmp_name = tempfile.mkstemp(
            dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            os.replace(tmp_name, target)
        except BaseException:
            os.unlink(tmp_name)
            raise
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(path, exc.strerror or str(exc)) from exc
