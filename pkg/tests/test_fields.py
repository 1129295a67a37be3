import numpy as np
import pytest

from ldg2of.common.errors import FieldFormatError, NotUnit
from ldg2of.common.types import EscapeConfig, MaterialParams, RunManifest
from ldg2of.conformal.construct import conformal_field
from ldg2of.grid.fieldio import read_array, read_field, read_sidecar, sidecar_path, write_array, write_field
from ldg2of.grid.fields import DirectorField, QField, field_for


def constant(grid, vector):
    values = np.zeros(grid.shape + (len(vector),))
    values[grid.active] = vector
    return values


def test_director_field_needs_unit_vectors(disk32):
    with pytest.raises(NotUnit):
        DirectorField(disk32, constant(disk32, [1.0, 1.0, 0.0]))
    n = DirectorField.normalized(disk32, constant(disk32, [1.0, 1.0, 0.0]))
    assert np.allclose(np.linalg.norm(n.values[disk32.active], axis=-1), 1.0)
    assert np.all(n.values[~disk32.active] == 0.0)


def test_shape_is_checked(disk32):
    with pytest.raises(ValueError):
        QField(disk32, np.zeros(disk32.shape + (3,)))
    assert isinstance(field_for(disk32, np.zeros(disk32.shape + (5,))), QField)


def test_values_are_read_only(disk32):
    q = QField(disk32, constant(disk32, [0.1, 0.0, 0.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        q.values[0, 0, 0] = 1.0


def test_with_values_keeps_boundary(disk32):
    n = conformal_field(EscapeConfig(m=1, points=[(0.0, 0.0)]), disk32)
    moved = n.with_values(constant(disk32, [0.0, 0.0, 1.0]))
    assert moved.boundary_unchanged(n)
    assert np.all(moved.values[disk32.interior, 2] == 1.0)


def test_reflect_flips_n3(disk32):
    n = conformal_field(EscapeConfig(m=1, points=[(0.0, 0.0)]), disk32)
    r = n.reflect()
    assert np.array_equal(r.values[..., 2], -n.values[..., 2])
    assert np.array_equal(r.values[..., :2], n.values[..., :2])


def test_field_file(tmp_path, disk32, unit_params):
    n = conformal_field(EscapeConfig(m=2, points=[(0.3, 0.0), (-0.3, 0.0)]), disk32)
    manifest = RunManifest(command="conformal", parameters={"m": 2}, domain=disk32.descriptor,
                           resolution=disk32.resolution, material=unit_params)
    path = tmp_path / "n.bin"
    write_field(path, n, manifest)

    loaded = read_field(path)
    assert isinstance(loaded, DirectorField)
    assert loaded.grid.shape == disk32.shape
    assert np.array_equal(loaded.values, n.values)

    meta = read_sidecar(path)
    assert sidecar_path(path).name == "n.meta.json"
    assert meta.command == "conformal"
    assert meta.material == unit_params
    assert meta.resolution == 32


def test_q_field_file_on_ellipse(tmp_path, ellipse32):
    values = constant(ellipse32, [0.1, -0.2, 0.3, 0.0, 0.05])
    write_array(tmp_path / "q.bin", ellipse32, values)
    grid, data = read_array(tmp_path / "q.bin")
    assert grid.descriptor == ellipse32.descriptor
    assert np.array_equal(data, values)


def test_data_block_is_components_by_nx_by_ny(tmp_path, ellipse32):
    grid = ellipse32
    assert grid.nx != grid.ny
    values = np.random.default_rng(3).normal(size=grid.shape + (5,))
    path = tmp_path / "q.bin"
    write_array(path, grid, values)
    raw = path.read_bytes()
    block = np.frombuffer(raw[len(raw) - 8 * values.size:], dtype="<f8").reshape(5, grid.nx, grid.ny)
    iy, ix = 2, grid.nx - 3
    assert block[4, ix, iy] == values[iy, ix, 4]
    assert np.array_equal(block, np.transpose(values, (2, 1, 0)))


def test_corrupt_files(tmp_path, disk32):
    path = tmp_path / "n.bin"
    write_array(path, disk32, constant(disk32, [0.0, 0.0, 1.0]))
    raw = path.read_bytes()

    (tmp_path / "magic.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "magic.bin")

    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "short.bin")

    (tmp_path / "header.bin").write_bytes(raw[:10])
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "header.bin")


def test_write_rejects_bad_shapes(tmp_path, disk32):
    with pytest.raises(FieldFormatError):
        write_array(tmp_path / "bad.bin", disk32, np.zeros(disk32.shape + (4,)))


def test_material_params_json():
    params = MaterialParams(a2=0.5, b2=0.0, c2=2.0, eps=0.05)
    assert MaterialParams.from_json(params.to_json()) == params
