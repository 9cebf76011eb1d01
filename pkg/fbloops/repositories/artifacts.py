"""Atomic writers for JSON records, CSV tables and binary files."""

import csv
import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, Mapping, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel

logger = structlog.get_logger(__name__)

PathLike = Union[str, os.PathLike]


@contextmanager
def atomic_write(path: PathLike, mode: str = "w") -> Iterator[Any]:
    """
    Open a temporary file next to ``path`` and move it into place on success.

    The temporary file is removed if the block raises.

    Args:
        path: Final destination
        mode: ``"w"`` for text or ``"wb"`` for binary

    Yields:
        The open temporary file
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(
        prefix=f".{target.name}.", suffix=".tmp", dir=target.parent
    )
    try:
        newline = "" if "b" not in mode else None
        with os.fdopen(fd, mode, newline=newline) as handle:
            yield handle
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("artifact_written", path=str(target))


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, indent=2, default=_to_jsonable)


def write_json(
    path: PathLike, payload: Mapping[str, Any], config: Optional[Any] = None
) -> Path:
    """Write ``payload`` as JSON with the run configuration under ``config``."""
    document = dict(payload)
    if config is not None:
        document["config"] = config
    with atomic_write(path) as handle:
        handle.write(dumps(document))
        handle.write("\n")
    return Path(path)


def write_csv(path: PathLike, rows: Sequence[Mapping[str, Any]]) -> Path:
    """Write homogeneous dict rows as a CSV table with a header line."""
    fieldnames = list(rows[0]) if rows else []
    with atomic_write(path) as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return Path(path)


def write_per_path(path: PathLike, values: np.ndarray, column: str = "value") -> Path:
    """One row per path: ``sample_id,<column>`` with 17 significant digits."""
    table = np.column_stack([np.arange(values.size), values])
    with atomic_write(path) as handle:
        np.savetxt(
            handle,
            table,
            fmt=["%d", "%.17g"],
            delimiter=",",
            header=f"sample_id,{column}",
            comments="",
        )
    return Path(path)
