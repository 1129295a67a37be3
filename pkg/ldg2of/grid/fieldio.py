# -*- coding: utf-8 -*-

##
## Binary field files and their JSON sidecars.
##
## Layout (little endian):
##   b"NLC2", version u32, components u32, nx u32, ny u32, h f64, origin 2 x f64,
##   domain tag u32, 4 x f64 domain params, active mask packed bits (row-major),
##   then components x nx x ny f64 row-major: value (c, ix, iy) at flat index
##   (c * nx + ix) * ny + iy. Arrays in memory are (ny, nx, C).
##

import logging
import struct
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from ldg2of.common.errors import FieldFormatError
from ldg2of.common.types import DomainDescriptor, RunManifest
from ldg2of.grid.domain import DomainGrid, make_grid
from ldg2of.grid.fields import DirectorField, GridField, QField

MAGIC = b"NLC2"
VERSION = 2
_HEADER = struct.Struct("<4sIIIIdddIdddd")
_KINDS = {0: "disk", 1: "square", 2: "ellipse"}


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(path).with_suffix(".meta.json")


def write_array(path: Union[str, Path], grid: DomainGrid, data: np.ndarray):
    """Write per-node data of shape (ny, nx, C) with C in {3, 5}."""
    logger = logging.getLogger(__name__)
    data = np.asarray(data, dtype="<f8")
    if data.shape[:2] != grid.shape or data.ndim != 3 or data.shape[2] not in (3, 5):
        raise FieldFormatError(f"cannot write data of shape {data.shape} on a {grid.shape} grid")
    desc = grid.descriptor
    header = _HEADER.pack(MAGIC, VERSION, data.shape[2], grid.nx, grid.ny, grid.h,
                          grid.origin[0], grid.origin[1], desc.tag, *desc.params)
    bits = np.packbits(grid.active.ravel())
    body = np.ascontiguousarray(np.transpose(data, (2, 1, 0))).tobytes()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header)
        f.write(bits.tobytes())
        f.write(body)
    logger.info(f"Wrote {data.shape[2]}-component field {grid.nx}x{grid.ny} to {path}")


def write_field(path: Union[str, Path], fld: GridField, manifest: RunManifest = None):
    write_array(path, fld.grid, fld.values)
    if manifest is not None:
        write_sidecar(path, manifest)


def read_array(path: Union[str, Path]) -> Tuple[DomainGrid, np.ndarray]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise FieldFormatError(f"{path}: truncated header")
    (magic, version, comps, nx, ny, h, ox, oy, tag, rx, ry, _, _) = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported format version {version}")
    if comps not in (3, 5) or tag not in _KINDS:
        raise FieldFormatError(f"{path}: bad component count {comps} or domain tag {tag}")

    grid = make_grid(DomainDescriptor(kind=_KINDS[tag], rx=rx, ry=ry), int(round(1.0 / h)))
    if (grid.nx, grid.ny) != (nx, ny) or not np.allclose(grid.origin, (ox, oy), rtol=0.0, atol=1e-12):
        raise FieldFormatError(f"{path}: header does not match the rebuilt grid")

    offset = _HEADER.size
    nbits = (nx * ny + 7) // 8
    mask = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, count=nbits, offset=offset))[:nx * ny]
    if not np.array_equal(mask.reshape(ny, nx).astype(bool), grid.active):
        raise FieldFormatError(f"{path}: stored mask does not match the rebuilt grid")
    offset += nbits
    count = comps * nx * ny
    if len(raw) - offset != 8 * count:
        raise FieldFormatError(f"{path}: expected {8 * count} data bytes, found {len(raw) - offset}")
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(comps, nx, ny)
    return grid, np.transpose(data, (2, 1, 0)).astype(float)


def read_field(path: Union[str, Path]) -> GridField:
    grid, data = read_array(path)
    if data.shape[2] == 3:
        return DirectorField(grid, data)
    return QField(grid, data)


def write_sidecar(path: Union[str, Path], manifest: RunManifest) -> Path:
    out = sidecar_path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        f.write(manifest.to_json(indent=2))
        f.write("\n")
    return out


def read_sidecar(path: Union[str, Path]) -> RunManifest:
    with open(sidecar_path(path), "r", encoding="utf-8") as f:
        return RunManifest.from_json(f.read())
