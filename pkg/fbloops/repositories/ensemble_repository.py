"""
Binary and CSV storage of path ensembles.

Binary layout (little-endian)::

    magic "FRLP" | version u16 | n_samples u64 | n_points u64 | d u32 | H f64
    | meta_len u32 | meta (UTF-8 JSON) | branch i4[n_points] | position f8[n_points]
    | paths f8[n_samples, n_points, d]

The CSV form starts with a ``#`` line holding the same JSON metadata, then
``sample_id,branch,t,x_1..x_d`` rows printed with 17 significant digits.
"""

import io
import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np
import structlog
from pydantic import TypeAdapter, ValidationError

from fbloops.core.exceptions import FormatError
from fbloops.models.ensemble import PathEnsemble, SeedSpec
from fbloops.models.kernel import Geometry, Grid, KernelSpec
from fbloops.repositories.artifacts import PathLike, atomic_write

logger = structlog.get_logger(__name__)

MAGIC = b"FRLP"
VERSION = 1
_HEADER = struct.Struct("<4sHQQId")
_META_LEN = struct.Struct("<I")
_GEOMETRY = TypeAdapter(Geometry)


def _meta(ensemble: PathEnsemble, config: Optional[dict] = None) -> dict:
    meta = {
        "geometry": ensemble.spec.geometry.model_dump(mode="json"),
        "seed": ensemble.seed.master_seed,
        "method": ensemble.method,
        "grid": "circle" if ensemble.grid.is_circle else "star",
    }
    if config is not None:
        meta["config"] = config
    return meta


def _rebuild(
    meta: dict, hurst: float, dim: int, branch, position, paths
) -> PathEnsemble:
    try:
        geometry = _GEOMETRY.validate_python(meta["geometry"])
        spec = KernelSpec(geometry=geometry, hurst=hurst, dim=dim)
        grid = Grid(geometry=geometry, branch=branch, position=position)
        return PathEnsemble(
            spec=spec,
            grid=grid,
            paths=paths,
            seed=SeedSpec(master_seed=meta.get("seed", 0)),
            method=meta.get("method", "dense"),
        )
    except (KeyError, TypeError, ValidationError) as exc:
        raise FormatError(f"inconsistent ensemble metadata: {exc}") from exc


def encode(ensemble: PathEnsemble, config: Optional[dict] = None) -> bytes:
    """Serialize an ensemble; ``config`` is echoed in the metadata block."""
    meta = json.dumps(_meta(ensemble, config)).encode("utf-8")
    grid = ensemble.grid
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        ensemble.n_samples,
        ensemble.n_points,
        ensemble.spec.dim,
        ensemble.spec.hurst,
    )
    return b"".join(
        [
            header,
            _META_LEN.pack(len(meta)),
            meta,
            grid.branch.astype("<i4").tobytes(),
            grid.position.astype("<f8").tobytes(),
            np.ascontiguousarray(ensemble.paths, dtype="<f8").tobytes(),
        ]
    )


def decode(data: bytes) -> PathEnsemble:
    """Parse the binary container; any mismatch raises FormatError."""
    if len(data) < _HEADER.size + _META_LEN.size:
        raise FormatError(
            "file too short for an ensemble header", details={"size": len(data)}
        )
    magic, version, n_samples, n_points, dim, hurst = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(
            "bad magic; not an ensemble file", details={"magic": magic.hex()}
        )
    if version != VERSION:
        raise FormatError(
            f"unsupported format version {version}", details={"version": version}
        )
    offset = _HEADER.size
    (meta_len,) = _META_LEN.unpack_from(data, offset)
    offset += _META_LEN.size
    expected = offset + meta_len + n_points * (4 + 8) + n_samples * n_points * dim * 8
    if len(data) != expected:
        raise FormatError(
            "truncated or oversized ensemble file",
            details={"size": len(data), "expected": expected},
        )
    try:
        meta = json.loads(data[offset : offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable metadata block: {exc}") from exc
    offset += meta_len
    branch = np.frombuffer(data, dtype="<i4", count=n_points, offset=offset)
    offset += 4 * n_points
    position = np.frombuffer(data, dtype="<f8", count=n_points, offset=offset)
    offset += 8 * n_points
    count = n_samples * n_points * dim
    paths = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
    paths = paths.astype(float).reshape(n_samples, n_points, dim)
    branch, position = branch.astype(np.int64), position.astype(float)
    return _rebuild(meta, hurst, dim, branch, position, paths)


def save_ensemble(
    ensemble: PathEnsemble, path: PathLike, config: Optional[dict] = None
) -> Path:
    """Write the binary container atomically."""
    with atomic_write(path, "wb") as handle:
        handle.write(encode(ensemble, config))
    logger.info(
        "ensemble_saved", path=str(path), n_samples=ensemble.n_samples, format="binary"
    )
    return Path(path)


def load_ensemble(path: PathLike) -> PathEnsemble:
    """Read an ensemble, choosing the CSV parser for ``.csv`` files."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_ensemble_csv(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    ensemble = decode(data)
    logger.info("ensemble_loaded", path=str(path), n_samples=ensemble.n_samples)
    return ensemble


def save_ensemble_csv(
    ensemble: PathEnsemble, path: PathLike, config: Optional[dict] = None
) -> Path:
    """Write the ensemble as CSV rows. The metadata line carries the grid."""
    grid = ensemble.grid
    meta = {
        **_meta(ensemble, config),
        "H": ensemble.spec.hurst,
        "d": ensemble.spec.dim,
        "n_samples": ensemble.n_samples,
        "branch": grid.branch.tolist(),
        "position": grid.position.tolist(),
    }
    n, N, d = ensemble.paths.shape
    table = np.column_stack(
        [
            np.repeat(np.arange(n), N),
            np.tile(grid.branch, n),
            np.tile(grid.position, n),
            ensemble.paths.reshape(n * N, d),
        ]
    )
    header = ",".join(["sample_id", "branch", "t"] + [f"x_{c + 1}" for c in range(d)])
    with atomic_write(path) as handle:
        handle.write("# " + json.dumps(meta) + "\n")
        handle.write(header + "\n")
        np.savetxt(handle, table, fmt=["%d", "%d"] + ["%.17g"] * (d + 1), delimiter=",")
    logger.info("ensemble_saved", path=str(path), n_samples=n, format="csv")
    return Path(path)


def load_ensemble_csv(path: PathLike) -> PathEnsemble:
    """Parse a CSV written by ``save_ensemble_csv``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith("#"):
        raise FormatError("missing CSV metadata line")
    try:
        meta = json.loads(lines[0][1:])
        hurst, dim, n = float(meta["H"]), int(meta["d"]), int(meta["n_samples"])
        branch = np.asarray(meta["branch"], dtype=np.int64)
        position = np.asarray(meta["position"], dtype=float)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad CSV metadata: {exc}") from exc
    N = position.size
    if lines[1].split(",")[:3] != ["sample_id", "branch", "t"]:
        raise FormatError("unexpected CSV header", details={"header": lines[1]})
    table = np.zeros((0, 3 + dim))
    if n > 0:
        try:
            rows = io.StringIO("\n".join(lines[2:]))
            table = np.loadtxt(rows, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise FormatError(f"unparseable CSV rows: {exc}") from exc
    if table.shape != (n * N, 3 + dim):
        raise FormatError(
            "CSV row count or width does not match the metadata",
            details={"shape": list(table.shape), "expected": [n * N, 3 + dim]},
        )
    paths = table[:, 3:].reshape(n, N, dim)
    return _rebuild(meta, hurst, dim, branch, position, paths)
