"""
core/checkpoint.py - Atomic writes and replicate checkpoints.

Two concerns:

Atomic output
    Every emitted file (JSON, CSV, SVG) is written to a temporary sibling
    and renamed into place, so an interrupted run never leaves a truncated
    file behind. I/O failures surface as OutputError naming the path.

Replicate checkpoints
    Long experiments record finished replicates so an interrupted run
    resumes where it stopped.
    File: <out_dir>/<experiment>_checkpoint.json
    Layout: {"completed": [indices], "results": {index: record}}

No simulation logic here: only load/save/query.
"""

import json
import time
from pathlib import Path
from typing import Any

from core.errors import OutputError


def write_text_atomic(path: Path | str, text: str) -> Path:
    """
    Write *text* to *path* via a temporary sibling and rename.

    Raises OutputError (with the path) on any OS-level failure.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tmp.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        tmp.replace(path)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def checkpoint_path(out_dir: Path | str, name: str) -> Path:
    """Return the checkpoint file path for experiment *name*."""
    return Path(out_dir) / f"{name}_checkpoint.json"


def load(path: Path | str) -> dict[str, Any]:
    """
    Load a replicate checkpoint.

    A missing or unreadable file yields a fresh checkpoint. Result keys come
    back from JSON as strings and are converted to ints.
    """
    path = Path(path)
    if not path.exists():
        return _fresh()
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (json.JSONDecodeError, OSError):
        return _fresh()

    result = _fresh()
    result["completed"] = sorted(int(i) for i in data.get("completed", []))
    result["results"] = {int(k): v for k, v in (data.get("results") or {}).items()}
    result["parameters"] = data.get("parameters")
    return result


def save(path: Path | str, data: dict[str, Any]) -> None:
    """Atomically write checkpoint data to *path*."""
    payload = {
        "completed": sorted(data.get("completed", [])),
        "results": {str(k): v for k, v in sorted(data.get("results", {}).items())},
        "parameters": data.get("parameters"),
        "_saved_at": time.time(),
    }
    write_text_atomic(path, json.dumps(payload, ensure_ascii=False, indent=2))


def is_complete(path: Path | str, total: int) -> bool:
    """Return True if the checkpoint records all *total* replicates."""
    return len(load(path)["completed"]) >= total


def delete(path: Path | str) -> None:
    """Remove the checkpoint file if it exists."""
    path = Path(path)
    if path.exists():
        path.unlink()


def _fresh() -> dict[str, Any]:
    return {"completed": [], "results": {}, "parameters": None}
