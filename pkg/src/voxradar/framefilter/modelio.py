"""HMDL model files.

Layout (little-endian)::

    b"HMDL" | u16 version | u8 pooling (0 = avg, 1 = max) | u8 tensor count
    then per tensor, in the order conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b:
        u8 ndim | u32 * ndim shape | float32 values (C order)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from voxradar.formats import FormatError
from voxradar.framefilter.network import PARAM_ORDER, ClassifierModel, Pooling

MODEL_MAGIC = b"HMDL"
MODEL_VERSION = 1
_POOL_CODE = {Pooling.AVG: 0, Pooling.MAX: 1}


def write_model(path, model: ClassifierModel) -> None:
    chunks = [struct.pack("<4sHBB", MODEL_MAGIC, MODEL_VERSION,
                          _POOL_CODE[model.pooling], len(PARAM_ORDER))]
    for name in PARAM_ORDER:
        arr = np.ascontiguousarray(model.params[name], dtype="<f4")
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_model(path) -> ClassifierModel:
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MODEL_MAGIC:
        raise FormatError(f"{path}: not an HMDL model file")
    _, version, pool, count = struct.unpack_from("<4sHBB", data)
    if version != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported HMDL version {version}")
    if count != len(PARAM_ORDER):
        raise FormatError(f"{path}: expected {len(PARAM_ORDER)} tensors, found {count}")
    pooling = {v: k for k, v in _POOL_CODE.items()}.get(pool)
    if pooling is None:
        raise FormatError(f"{path}: unknown pooling code {pool}")
    pos = 8
    params = {}
    try:
        for name in PARAM_ORDER:
            (ndim,) = struct.unpack_from("<B", data, pos)
            shape = struct.unpack_from(f"<{ndim}I", data, pos + 1)
            pos += 1 + 4 * ndim
            size = int(np.prod(shape))
            params[name] = np.frombuffer(data, "<f4", size, pos).astype(np.float64).reshape(shape)
            pos += 4 * size
    except (struct.error, ValueError) as exc:
        raise FormatError(f"{path}: truncated model file") from exc
    return ClassifierModel(params, pooling)


def model_header(path) -> dict:
    m = read_model(path)
    return {"format": "HMDL", "version": MODEL_VERSION, "pooling": m.pooling.value,
            "shapes": {k: list(v.shape) for k, v in m.params.items()}}
