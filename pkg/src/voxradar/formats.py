"""On-disk formats. All binary layouts are little-endian unless noted.

HICF raw frame::

    b"HICF" | u16 version | u32 M | u32 N | u32 T | float32 (re, im) * M*N*T
    samples ordered m-major, then n, then t

HGRD power grid::

    b"HGRD" | u16 version | float64 * 9 grid spec
    (r_min, r_max, r_res, theta_min, theta_max, theta_res, phi_min, phi_max, phi_res)
    | u32 * 3 dims | float32 values, r-major, then theta, then phi

Background sidecar (``<file>.meta``): ``key=value`` lines ``frame_count`` and
``creation_epoch``.

PGM heatmap: binary ``P5``, maxval 65535, big-endian 16-bit samples. Rows are range
bins (nearest first), columns are azimuth bins (most negative phi first).

OBJ mesh: ASCII ``v x y z`` then ``f a b c`` records, 1-based indices.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from voxradar.reconstruct import GridSpec, PowerGrid
from voxradar.scenesim import RawFrame

FRAME_MAGIC = b"HICF"
GRID_MAGIC = b"HGRD"
FORMAT_VERSION = 1

_FRAME_HEADER = struct.Struct("<4sHIII")
_GRID_HEADER = struct.Struct("<4sH9d3I")


class FormatError(ValueError):
    """File does not carry the expected magic, version or size."""


def write_frame(path, frame: RawFrame) -> None:
    m, n, t = frame.samples.shape
    inter = np.empty((m, n, t, 2), dtype="<f4")
    inter[..., 0] = frame.samples.real
    inter[..., 1] = frame.samples.imag
    with open(path, "wb") as fh:
        fh.write(_FRAME_HEADER.pack(FRAME_MAGIC, FORMAT_VERSION, m, n, t))
        fh.write(inter.tobytes())


def read_frame(path, epoch: int = 0) -> RawFrame:
    data = Path(path).read_bytes()
    if len(data) < _FRAME_HEADER.size or data[:4] != FRAME_MAGIC:
        raise FormatError(f"{path}: not an HICF frame file")
    _, version, m, n, t = _FRAME_HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported HICF version {version}")
    expected = m * n * t * 2
    if len(data) - _FRAME_HEADER.size != 4 * expected:
        raise FormatError(f"{path}: expected {expected} floats after the header")
    body = np.frombuffer(data, dtype="<f4", offset=_FRAME_HEADER.size)
    pairs = body.astype(np.float64).reshape(m, n, t, 2)
    return RawFrame(pairs[..., 0] + 1j * pairs[..., 1], epoch)


def frame_header(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(_FRAME_HEADER.size)
    if len(head) < _FRAME_HEADER.size or head[:4] != FRAME_MAGIC:
        raise FormatError(f"{path}: not an HICF frame file")
    _, version, m, n, t = _FRAME_HEADER.unpack(head)
    return {"format": "HICF", "version": version, "M": m, "N": n, "T": t}


def write_grid(path, grid: PowerGrid) -> None:
    dims = grid.values.shape
    with open(path, "wb") as fh:
        fh.write(_GRID_HEADER.pack(GRID_MAGIC, FORMAT_VERSION, *grid.spec.as_tuple(), *dims))
        fh.write(np.ascontiguousarray(grid.values, dtype="<f4").tobytes())


def read_grid(path, epoch: int = 0) -> PowerGrid:
    data = Path(path).read_bytes()
    if len(data) < _GRID_HEADER.size or data[:4] != GRID_MAGIC:
        raise FormatError(f"{path}: not an HGRD grid file")
    fields = _GRID_HEADER.unpack_from(data)
    version, spec_vals, dims = fields[1], fields[2:11], fields[11:14]
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported HGRD version {version}")
    spec = GridSpec(*spec_vals)
    if tuple(dims) != spec.dims:
        raise FormatError(f"{path}: dims {dims} disagree with grid spec {spec.dims}")
    if len(data) - _GRID_HEADER.size != 4 * int(np.prod(dims)):
        raise FormatError(f"{path}: grid body size does not match dims")
    body = np.frombuffer(data, dtype="<f4", offset=_GRID_HEADER.size)
    return PowerGrid(body.astype(np.float64).reshape(dims), spec, epoch)


def grid_header(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(_GRID_HEADER.size)
    if len(head) < _GRID_HEADER.size or head[:4] != GRID_MAGIC:
        raise FormatError(f"{path}: not an HGRD grid file")
    fields = _GRID_HEADER.unpack(head)
    names = ("r_min", "r_max", "r_res", "theta_min", "theta_max", "theta_res",
             "phi_min", "phi_max", "phi_res")
    out = {"format": "HGRD", "version": fields[1]}
    out.update(zip(names, fields[2:11]))
    out["dims"] = list(fields[11:14])
    return out


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta")


def write_sidecar(path, frame_count: int, creation_epoch: int) -> None:
    sidecar_path(path).write_text(f"frame_count={frame_count}\ncreation_epoch={creation_epoch}\n")


def read_sidecar(path) -> dict:
    out = {}
    for line in sidecar_path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = int(v)
    return out


def heatmap_to_u16(values: np.ndarray) -> np.ndarray:
    peak = float(values.max()) if values.size else 0.0
    if peak <= 0:
        return np.zeros(values.shape, dtype=np.uint16)
    return np.rint(np.clip(values / peak, 0.0, 1.0) * 65535).astype(np.uint16)


def write_pgm(path, values: np.ndarray) -> None:
    img = heatmap_to_u16(np.asarray(values, dtype=float))
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(img.astype(">u2").tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    cols, rows, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(data, dtype=dtype, offset=pos + 1, count=rows * cols).reshape(rows, cols)


def write_obj(path, mesh) -> None:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_obj(path):
    from voxradar.imaging import Mesh

    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return Mesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))
