"""Portable binary weight format for the 6-20-20-3 policy network.

Layout (little-endian):

    offset 0   magic "SEEK" (4 bytes)
    offset 4   u16 format version (1)
    offset 6   u16 layer count (3)
    offset 8   per layer: u16 in_dim, u16 out_dim  (12 bytes total)
    offset 20  u8 activation tag (0 = relu, 1 = tanh)
    offset 21  3 zero padding bytes
    offset 24  parameters as float32: for each layer, the weight matrix
               row-major (one row per output unit), then the bias vector
               (2,492 bytes total)
    offset 2516  u32 CRC-32 of all preceding bytes

Total file size: 2,520 bytes.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

MAGIC = b"SEEK"
VERSION = 1
LAYER_DIMS: tuple[tuple[int, int], ...] = ((6, 20), (20, 20), (20, 3))
ACTIVATION_TAGS = {"relu": 0, "tanh": 1}
ACTIVATION_NAMES = {v: k for k, v in ACTIVATION_TAGS.items()}

HEADER_BYTES = 24
PARAM_COUNT = sum(i * o + o for i, o in LAYER_DIMS)
PARAM_BYTES = 4 * PARAM_COUNT
FILE_BYTES = HEADER_BYTES + PARAM_BYTES + 4


class BlobError(ValueError):
    """Base class for weight-file validation failures."""


class BlobMagicError(BlobError):
    pass


class BlobVersionError(BlobError):
    pass


class BlobDimensionError(BlobError):
    pass


class BlobChecksumError(BlobError):
    pass


def encode(weights: list[np.ndarray], biases: list[np.ndarray], activation: str) -> bytes:
    """Serialize float32 parameters into the blob byte layout."""
    if activation not in ACTIVATION_TAGS:
        raise ValueError(f"unknown activation {activation!r}")
    if len(weights) != len(LAYER_DIMS) or len(biases) != len(LAYER_DIMS):
        raise ValueError("expected exactly three layers")
    parts = [MAGIC, struct.pack("<HH", VERSION, len(LAYER_DIMS))]
    for (in_dim, out_dim), w, b in zip(LAYER_DIMS, weights, biases):
        if w.shape != (out_dim, in_dim) or b.shape != (out_dim,):
            raise ValueError(f"layer shape mismatch: {w.shape}, {b.shape}")
        parts.append(struct.pack("<HH", in_dim, out_dim))
    parts.append(struct.pack("<B3x", ACTIVATION_TAGS[activation]))
    for w, b in zip(weights, biases):
        parts.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode(data: bytes) -> tuple[str, list[np.ndarray], list[np.ndarray]]:
    """Parse and validate a blob, returning (activation, weights, biases)."""
    if len(data) < 8 or data[:4] != MAGIC:
        raise BlobMagicError("not a policy weight file (bad magic)")
    version, layer_count = struct.unpack_from("<HH", data, 4)
    if version != VERSION:
        raise BlobVersionError(f"unsupported format version {version}")
    if layer_count != len(LAYER_DIMS):
        raise BlobDimensionError(f"expected {len(LAYER_DIMS)} layers, file declares {layer_count}")
    if len(data) < HEADER_BYTES:
        raise BlobChecksumError("file truncated inside the header")
    declared = tuple(
        struct.unpack_from("<HH", data, 8 + 4 * k) for k in range(len(LAYER_DIMS))
    )
    if declared != LAYER_DIMS:
        raise BlobDimensionError(f"layer dims {declared} do not match {LAYER_DIMS}")
    activation_tag = data[20]
    if activation_tag not in ACTIVATION_NAMES:
        raise BlobVersionError(f"unknown activation tag {activation_tag}")
    if len(data) != FILE_BYTES:
        raise BlobChecksumError(
            f"file is {len(data)} bytes, expected {FILE_BYTES} (truncated or padded)"
        )
    (stored_crc,) = struct.unpack_from("<I", data, FILE_BYTES - 4)
    if zlib.crc32(data[: FILE_BYTES - 4]) != stored_crc:
        raise BlobChecksumError("CRC-32 mismatch; file is corrupted")

    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    offset = HEADER_BYTES
    for in_dim, out_dim in LAYER_DIMS:
        w = np.frombuffer(data, dtype="<f4", count=out_dim * in_dim, offset=offset)
        offset += 4 * out_dim * in_dim
        b = np.frombuffer(data, dtype="<f4", count=out_dim, offset=offset)
        offset += 4 * out_dim
        weights.append(w.reshape(out_dim, in_dim).copy())
        biases.append(b.copy())
    return ACTIVATION_NAMES[activation_tag], weights, biases
