"""File outputs: CSV tables and JSON reports.

Writes are atomic: content goes to a temporary file in the target directory
which is then renamed over the destination. Parent directories are created.
Floats are written with repr() so reruns are byte-identical.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

from .observability import logger

SCHEMA_VERSION = "1"

PathLike = Union[str, os.PathLike]


class OutputError(Exception):
    pass


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    if hasattr(v, "item"):
        return format_value(v.item())
    return str(v)


def _write_atomic(path: PathLike, text: str) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise OutputError(f"failed to write {p}: {e}") from e
    logger.info("output_written", path=str(p), bytes=len(text.encode("utf-8")))
    return p


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise OutputError(f"row has {len(row)} values, header has {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    return _write_atomic(path, "\n".join(lines) + "\n")


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    """Write a report; ``schema_version`` is added when absent."""
    body = {"schema_version": SCHEMA_VERSION, **payload}
    try:
        text = json.dumps(_jsonable(body), sort_keys=True, indent=2, ensure_ascii=False)
    except (TypeError, ValueError) as e:
        raise OutputError(f"payload for {path} is not JSON serialisable: {e}") from e
    return _write_atomic(path, text + "\n")
