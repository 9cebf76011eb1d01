"""Tests for ensemble persistence and atomic artifact writers."""

import json

import numpy as np
import pytest

from fbloops.core.exceptions import FormatError
from fbloops.models.ensemble import PathEnsemble
from fbloops.repositories.artifacts import (
    atomic_write,
    write_csv,
    write_json,
    write_per_path,
)
from fbloops.repositories.ensemble_repository import (
    MAGIC,
    decode,
    encode,
    load_ensemble,
    save_ensemble,
    save_ensemble_csv,
)


def test_binary_round_trip_is_exact(loop_ensemble: PathEnsemble, tmp_path) -> None:
    """Save then load gives identical arrays and metadata."""
    path = save_ensemble(loop_ensemble, tmp_path / "paths.frlp")
    loaded = load_ensemble(path)
    assert np.array_equal(loaded.paths, loop_ensemble.paths)
    assert loaded.spec == loop_ensemble.spec
    assert np.array_equal(loaded.grid.position, loop_ensemble.grid.position)
    assert loaded.seed == loop_ensemble.seed
    assert loaded.method == "circulant"


def test_binary_starts_with_magic(loop_ensemble: PathEnsemble, tmp_path) -> None:
    """The container begins with "FRLP"."""
    path = save_ensemble(loop_ensemble, tmp_path / "paths.frlp")
    assert path.read_bytes()[:4] == MAGIC == b"FRLP"


def test_star_round_trip(star_ensemble: PathEnsemble) -> None:
    """Starburst grids keep their branch labels."""
    loaded = decode(encode(star_ensemble))
    assert loaded.spec == star_ensemble.spec
    assert np.array_equal(loaded.grid.branch, star_ensemble.grid.branch)
    assert np.array_equal(loaded.paths, star_ensemble.paths)


def test_config_echoed_in_metadata(loop_ensemble: PathEnsemble) -> None:
    """The resolved config is stored in the metadata block."""
    data = encode(loop_ensemble, {"subcommand": "sample", "seed": 11})
    start = 34
    (length,) = np.frombuffer(data[start : start + 4], dtype="<u4")
    meta = json.loads(data[start + 4 : start + 4 + int(length)])
    assert meta["config"]["seed"] == 11
    assert meta["geometry"]["type"] == "circle"


def test_truncated_file_rejected(loop_ensemble: PathEnsemble) -> None:
    """A short file is a format error."""
    data = encode(loop_ensemble)
    with pytest.raises(FormatError):
        decode(data[:-8])
    with pytest.raises(FormatError):
        decode(data[:10])


def test_bad_magic_and_version_rejected(loop_ensemble: PathEnsemble) -> None:
    """Magic and version are checked."""
    data = encode(loop_ensemble)
    with pytest.raises(FormatError):
        decode(b"XXXX" + data[4:])
    with pytest.raises(FormatError):
        decode(data[:4] + (99).to_bytes(2, "little") + data[6:])


def test_missing_file(tmp_path) -> None:
    """Unreadable paths raise FormatError."""
    with pytest.raises(FormatError):
        load_ensemble(tmp_path / "absent.frlp")


def test_csv_round_trip(loop_ensemble: PathEnsemble, tmp_path) -> None:
    """CSV keeps 17 significant digits."""
    small = PathEnsemble(
        spec=loop_ensemble.spec, grid=loop_ensemble.grid, paths=loop_ensemble.paths[:3]
    )
    path = save_ensemble_csv(small, tmp_path / "paths.csv")
    loaded = load_ensemble(path)
    np.testing.assert_allclose(loaded.paths, small.paths, rtol=1e-15, atol=0.0)
    assert path.read_text().splitlines()[1] == "sample_id,branch,t,x_1,x_2"


def test_csv_empty_ensemble(loop_ensemble: PathEnsemble, tmp_path) -> None:
    """An ensemble without paths survives a CSV round trip."""
    empty = PathEnsemble(
        spec=loop_ensemble.spec, grid=loop_ensemble.grid, paths=np.zeros((0, 32, 2))
    )
    loaded = load_ensemble(save_ensemble_csv(empty, tmp_path / "empty.csv"))
    assert loaded.paths.shape == (0, 32, 2)


def test_csv_without_metadata_rejected(tmp_path) -> None:
    """The metadata line is mandatory."""
    path = tmp_path / "bad.csv"
    path.write_text("sample_id,branch,t,x_1\n0,0,0.0,0.0\n")
    with pytest.raises(FormatError):
        load_ensemble(path)


def test_atomic_write_leaves_nothing_on_error(tmp_path) -> None:
    """A failing block neither creates the target nor leaves a temp file."""
    target = tmp_path / "out.json"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as handle:
            handle.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_write_json_echoes_config(tmp_path) -> None:
    """JSON artifacts embed the config and serialize numpy values."""
    payload = {"mean": np.float64(0.5)}
    path = write_json(tmp_path / "r.json", payload, {"subcommand": "loctime"})
    document = json.loads(path.read_text())
    assert document == {"mean": 0.5, "config": {"subcommand": "loctime"}}


def test_csv_writers(tmp_path) -> None:
    """Tables and per-path columns get header lines."""
    table = write_csv(tmp_path / "s.csv", [{"name": "pd", "verdict": "pass"}])
    assert table.read_text().splitlines() == ["name,verdict", "pd,pass"]
    column = write_per_path(tmp_path / "p.csv", np.array([0.25, 1.5]), "L")
    assert column.read_text().splitlines() == ["sample_id,L", "0,0.25", "1,1.5"]
