import numpy as np
import pytest

from kspm.errors import ConfigError, SnapshotFormatError
from kspm.grid import make_grid
from kspm.initial import build_ic
from kspm.snapshots import (
    Manifest,
    read_manifest,
    read_snapshot,
    write_manifest,
    write_snapshot,
)

from conftest import rough_field


def test_constant_selector(grid32):
    f = build_ic(("constant", 0.4), grid32)
    assert f.shape == grid32.shape
    assert np.all(f == 0.4)
    with pytest.raises(ConfigError):
        build_ic(("constant", -0.1), grid32)


def test_cosine_selector(grid32):
    f = build_ic(("cosine", 1, 1, 0.5, 1.0), grid32)
    assert float(np.min(f)) > 0.0
    assert float(np.max(f)) <= 1.5
    # omitted offset defaults to |amplitude|, keeping the field nonnegative
    g = build_ic(("cosine", 2, 0, -0.3), grid32)
    assert float(np.min(g)) >= 0.0
    with pytest.raises(ConfigError):
        build_ic(("cosine", 1, 1, 1.0, 0.2), grid32)


def test_barenblatt_selector_uses_gamma(grid32):
    a = build_ic(("barenblatt", 0.05, 0.01), grid32, gamma=2.0)
    b = build_ic(("barenblatt", 0.05, 0.01), grid32, gamma=3.5)
    assert not np.array_equal(a, b)
    assert float(np.min(a)) == 0.0
    assert float(np.sum(a)) * grid32.cell_area == pytest.approx(0.05, rel=5e-3)


def test_file_selector_round_trip(grid32, tmp_path):
    f = rough_field(grid32, 1)
    path = tmp_path / "ic.kspm"
    write_snapshot(path, f)
    g = build_ic(("file", str(path)), grid32)
    assert np.array_equal(f, g)
    with pytest.raises(ConfigError):
        build_ic(("file", str(path)), make_grid(16))


def test_unknown_selector_rejected(grid32):
    with pytest.raises(ConfigError):
        build_ic(("gaussian", 1.0), grid32)
    with pytest.raises(ConfigError):
        build_ic(("cosine", 1), grid32)
    with pytest.raises(ConfigError):
        build_ic((), grid32)


def test_snapshot_round_trip_bitwise(tmp_path):
    grid = make_grid(16, 24)
    f = rough_field(grid, 2, low=-5.0, high=5.0)
    path = tmp_path / "f.kspm"
    write_snapshot(path, f)
    assert np.array_equal(read_snapshot(path), f)


def test_snapshot_header_layout(tmp_path):
    f = np.arange(48.0).reshape(6, 8)
    path = tmp_path / "f.kspm"
    write_snapshot(path, f)
    raw = path.read_bytes()
    assert raw[:4] == b"KSPM"
    assert int.from_bytes(raw[4:8], "little") == 1  # version
    assert int.from_bytes(raw[8:12], "little") == 6
    assert int.from_bytes(raw[12:16], "little") == 8
    assert len(raw) == 16 + 48 * 8
    assert np.frombuffer(raw[16:], dtype="<f8")[1] == 1.0


def test_snapshot_error_cases(tmp_path):
    grid = make_grid(8)
    f = rough_field(grid, 3)
    path = tmp_path / "f.kspm"
    write_snapshot(path, f)

    truncated = tmp_path / "short.kspm"
    truncated.write_bytes(path.read_bytes()[:10])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(truncated)

    bad_magic = tmp_path / "magic.kspm"
    bad_magic.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(bad_magic)

    # header promises 8x8 but the payload holds a 4x4 field
    mismatch = tmp_path / "mismatch.kspm"
    mismatch.write_bytes(path.read_bytes()[:16] + np.zeros(16).tobytes())
    with pytest.raises(SnapshotFormatError):
        read_snapshot(mismatch)

    with pytest.raises(ValueError):
        write_snapshot(tmp_path / "bad.kspm", np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        write_snapshot(tmp_path / "bad.kspm", np.full((4, 4), np.nan))


def test_manifest_round_trip(tmp_path):
    path = tmp_path / "data.bin"
    path.write_bytes(b"payload")
    manifest = Manifest(
        command="simulate", package_version="0.1.0", backend="python",
        config_text="gamma = 2\n", overrides={"seed": 7}, grid=(64, 64),
        seed=7, num_paths=1, method="direct", wall_clock_s=1.5,
    )
    manifest.add_output("data.bin", str(path))
    mpath = tmp_path / "manifest.json"
    write_manifest(mpath, manifest)
    back = read_manifest(mpath)
    assert back.config_text == "gamma = 2\n"
    assert back.outputs[0]["name"] == "data.bin"
    assert back.outputs[0]["bytes"] == 7
    assert len(back.outputs[0]["sha256"]) == 64
