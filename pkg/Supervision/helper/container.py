"""PGDH heatmap container and the PGDF fusion-parameter file.

PGDH, little-endian:

    b"PGDH" | u32 version=1 | u32 K | u32 H | u32 W | K*H*W float32

values channel-major then row-major. PGDF wraps a JSON header and one
PGDH block (K=1) per matrix:

    b"PGDF" | u32 version=1 | u32 header length | JSON header | blocks
"""
import json
import struct
from pathlib import Path

import numpy as np

from Supervision.helper.exceptions import BadMagic, ContainerError, TruncatedPayload, UnsupportedVersion
from Supervision.helper.heatmap import HeatmapStack
from Supervision.helper.pgfe import FusionParams, MATRIX_FIELDS

MAGIC = b"PGDH"
PARAMS_MAGIC = b"PGDF"
VERSION = 1
HEADER = struct.Struct("<4sIIII")
PARAMS_HEADER = struct.Struct("<4sII")
FLOAT = np.dtype("<f4")


def encode_array(values) -> bytes:
    values = np.asarray(values)
    if values.ndim == 2:
        values = values[None]
    if values.ndim != 3:
        raise ContainerError(f"Container holds K x H x W arrays, got shape {values.shape}")
    K, H, W = values.shape
    return HEADER.pack(MAGIC, VERSION, K, H, W) + np.ascontiguousarray(values, dtype=FLOAT).tobytes()


def _decode_block(data: bytes, offset: int = 0):
    if len(data) - offset < 4:
        raise TruncatedPayload(f"{len(data) - offset} bytes cannot hold a header")
    if data[offset:offset + 4] != MAGIC:
        raise BadMagic(f"Expected {MAGIC!r}, found {bytes(data[offset:offset + 4])!r}")
    if len(data) - offset < HEADER.size:
        raise TruncatedPayload("Header is truncated")
    _, version, K, H, W = HEADER.unpack_from(data, offset)
    if version != VERSION:
        raise UnsupportedVersion(f"Container version {version} is not supported")
    start = offset + HEADER.size
    end = start + K * H * W * FLOAT.itemsize
    if end > len(data):
        raise TruncatedPayload(f"Header declares {K}x{H}x{W} values but only {len(data) - start} payload bytes follow")
    values = np.frombuffer(data, dtype=FLOAT, count=K * H * W, offset=start).reshape(K, H, W)
    return values, end


def decode_array(data: bytes) -> np.ndarray:
    values, end = _decode_block(data)
    if end != len(data):
        raise ContainerError(f"{len(data) - end} trailing bytes after payload")
    return values


def encode_stack(stack: HeatmapStack) -> bytes:
    return encode_array(stack.values)


def decode_stack(data: bytes) -> HeatmapStack:
    return HeatmapStack(decode_array(data).astype(np.float64))


def save_container(path, stack: HeatmapStack) -> None:
    Path(path).write_bytes(encode_stack(stack))


def load_container(path) -> HeatmapStack:
    return decode_stack(Path(path).read_bytes())


# ---------------------------
# Fusion parameters
# ---------------------------
def encode_fusion_params(params: FusionParams) -> bytes:
    header = json.dumps({
        "channels": params.channels,
        "physics_channels": params.physics_channels,
        "hidden": params.hidden,
        "scalars": {name: getattr(params, name) for name in ("lam", "alpha", "beta", "gamma", "delta")},
        "blocks": list(MATRIX_FIELDS),
    }, sort_keys=True).encode()
    blocks = b"".join(encode_array(np.atleast_2d(getattr(params, name))) for name in MATRIX_FIELDS)
    return PARAMS_HEADER.pack(PARAMS_MAGIC, VERSION, len(header)) + header + blocks


def decode_fusion_params(data: bytes) -> FusionParams:
    if data[:4] != PARAMS_MAGIC:
        raise BadMagic(f"Expected {PARAMS_MAGIC!r}, found {bytes(data[:4])!r}")
    if len(data) < PARAMS_HEADER.size:
        raise TruncatedPayload("Header is truncated")
    _, version, length = PARAMS_HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"Parameter file version {version} is not supported")
    offset = PARAMS_HEADER.size + length
    if offset > len(data):
        raise TruncatedPayload("JSON header is truncated")
    try:
        header = json.loads(data[PARAMS_HEADER.size:offset])
    except ValueError as e:
        raise ContainerError(f"Unreadable parameter header: {e}")

    arrays = {}
    for name in MATRIX_FIELDS:
        block, offset = _decode_block(data, offset)
        arrays[name] = block[0].astype(np.float64)
    if offset != len(data):
        raise ContainerError(f"{len(data) - offset} trailing bytes after parameter blocks")
    for name in ("b_lin", "b1", "b2"):
        arrays[name] = arrays[name].reshape(-1)
    return FusionParams(**header["scalars"], **arrays)


def save_fusion_params(path, params: FusionParams) -> None:
    Path(path).write_bytes(encode_fusion_params(params))


def load_fusion_params(path) -> FusionParams:
    return decode_fusion_params(Path(path).read_bytes())
