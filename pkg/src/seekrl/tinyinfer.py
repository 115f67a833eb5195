"""Standalone sensor-to-action inference kernel with a fixed memory budget.

This module mirrors an on-microcontroller deployment: it parses the portable
weight blob with its own reader, owns the low-pass feature state, and runs
the whole sensor-to-action path (laser normalization, feature update, forward
pass, argmax) in one compiled kernel over buffers allocated once at load
time. After construction, infer() acquires no memory.

The forward pass accumulates strictly in ascending input-index order, the
same pinned order as the trainer's reference implementation, so the two
produce bit-identical Q-values for identical inputs. Intentionally the only
imports are numpy, numba, and the standard library; nothing else from this
package is used here.
"""

from __future__ import annotations

import math
import struct
import time
import zlib

import numpy as np
from numba import njit

MAGIC = b"SEEK"
VERSION = 1
LAYER_DIMS = ((6, 20), (20, 20), (20, 3))
PARAM_COUNT = sum(i * o + o for i, o in LAYER_DIMS)
HEADER_BYTES = 24
FILE_BYTES = HEADER_BYTES + 4 * PARAM_COUNT + 4

LASER_MAX_RANGE = 5.0
FILTER_ALPHA = 0.9
FILTER_GUARD = 1e-6

# Static layout of one loaded context, in bytes. footprint() sums this table;
# it is the declared layout, not a heap measurement.
CONTEXT_LAYOUT = (
    ("layer1_weights", 20 * 6 * 4),
    ("layer1_bias", 20 * 4),
    ("layer2_weights", 20 * 20 * 4),
    ("layer2_bias", 20 * 4),
    ("layer3_weights", 3 * 20 * 4),
    ("layer3_bias", 3 * 4),
    ("input_vector", 6 * 4),
    ("scratch_hidden1", 20 * 4),
    ("scratch_hidden2", 20 * 4),
    ("q_out", 3 * 4),
    ("filter_state", 8),
    ("filter_seeded", 1),
    ("filter_alpha", 8),
    ("filter_guard", 8),
    ("laser_max_range", 8),
    ("layer_dims", 12),
    ("activation_tag", 1),
)


class KernelError(Exception):
    """Base error; the numeric code mirrors an embedded status enum."""

    code = 0


class MagicError(KernelError):
    code = 1


class VersionError(KernelError):
    code = 2


class DimensionError(KernelError):
    code = 3


class ChecksumError(KernelError):
    code = 4


class InputError(KernelError):
    code = 5


@njit(cache=True)
def _infer_kernel(w1, b1, w2, b2, w3, b3, activation,
                  l1, l2, l3, l4, c,
                  max_range, alpha, eps_div,
                  filter_state, seeded, x, h1, h2, q):
    if not (math.isfinite(l1) and math.isfinite(l2) and math.isfinite(l3)
            and math.isfinite(l4) and math.isfinite(c)):
        return -1

    if seeded[0] == 0:
        filter_state[0] = c
        seeded[0] = 1
        s1 = 0.0
        s2 = 2.0 * c - 1.0
    else:
        cf = alpha * filter_state[0] + (1.0 - alpha) * c
        filter_state[0] = cf
        denom = cf if cf > eps_div else eps_div
        s1 = (c - cf) / denom
        s2 = 2.0 * cf - 1.0

    x[0] = l1 / max_range
    x[1] = l2 / max_range
    x[2] = l3 / max_range
    x[3] = l4 / max_range
    x[4] = s1
    x[5] = s2

    zero = np.float32(0.0)
    for i in range(20):
        acc = b1[i]
        for j in range(6):
            acc += w1[i, j] * x[j]
        if activation == 0:
            h1[i] = acc if acc > zero else zero
        else:
            h1[i] = np.float32(math.tanh(acc))
    for i in range(20):
        acc = b2[i]
        for j in range(20):
            acc += w2[i, j] * h1[j]
        if activation == 0:
            h2[i] = acc if acc > zero else zero
        else:
            h2[i] = np.float32(math.tanh(acc))
    for i in range(3):
        acc = b3[i]
        for j in range(20):
            acc += w3[i, j] * h2[j]
        q[i] = acc

    best = q[0]
    idx = 0
    for i in range(1, 3):
        if q[i] > best:
            best = q[i]
            idx = i
    return idx


def _parse_blob(data: bytes):
    if len(data) < 8 or data[:4] != MAGIC:
        raise MagicError("not a policy weight blob (bad magic)")
    version, layer_count = struct.unpack_from("<HH", data, 4)
    if version != VERSION:
        raise VersionError(f"unsupported blob version {version}")
    if layer_count != len(LAYER_DIMS):
        raise DimensionError(f"expected {len(LAYER_DIMS)} layers, blob declares {layer_count}")
    if len(data) < HEADER_BYTES:
        raise ChecksumError("blob truncated inside the header")
    declared = tuple(struct.unpack_from("<HH", data, 8 + 4 * k) for k in range(len(LAYER_DIMS)))
    if declared != LAYER_DIMS:
        raise DimensionError(f"layer dims {declared} do not match {LAYER_DIMS}")
    activation = data[20]
    if activation > 1:
        raise VersionError(f"unknown activation tag {activation}")
    if len(data) != FILE_BYTES:
        raise ChecksumError(f"blob is {len(data)} bytes, expected {FILE_BYTES}")
    (stored,) = struct.unpack_from("<I", data, FILE_BYTES - 4)
    if zlib.crc32(data[: FILE_BYTES - 4]) != stored:
        raise ChecksumError("CRC-32 mismatch")

    params = []
    offset = HEADER_BYTES
    for in_dim, out_dim in LAYER_DIMS:
        w = np.frombuffer(data, dtype="<f4", count=out_dim * in_dim, offset=offset)
        offset += 4 * out_dim * in_dim
        b = np.frombuffer(data, dtype="<f4", count=out_dim, offset=offset)
        offset += 4 * out_dim
        params.append((np.ascontiguousarray(w.reshape(out_dim, in_dim)), b.copy()))
    return activation, params


class InferenceContext:
    """One loaded policy plus all scratch state. Single caller per context;
    independent contexts never interact."""

    def __init__(self, data: bytes):
        activation, params = _parse_blob(data)
        self._activation = int(activation)
        (self._w1, self._b1), (self._w2, self._b2), (self._w3, self._b3) = params
        self._x = np.zeros(6, dtype=np.float32)
        self._h1 = np.zeros(20, dtype=np.float32)
        self._h2 = np.zeros(20, dtype=np.float32)
        self._q = np.zeros(3, dtype=np.float32)
        self._filter_state = np.zeros(1, dtype=np.float64)
        self._seeded = np.zeros(1, dtype=np.uint8)
        self.footprint_bytes = sum(size for _, size in CONTEXT_LAYOUT)

    def reset(self) -> None:
        """Start a new episode: the next reading re-seeds the filter."""
        self._seeded[0] = 0
        self._filter_state[0] = 0.0

    @property
    def q(self) -> np.ndarray:
        """Q-value scratch buffer; contents are valid until the next infer()."""
        return self._q

    @property
    def filter_state(self) -> float:
        return float(self._filter_state[0])

    def infer(self, l1: float, l2: float, l3: float, l4: float, c: float) -> int:
        """Full sensor-to-action step. Returns the action index (0 forward,
        1 left, 2 right); performs no memory acquisition."""
        action = _infer_kernel(
            self._w1, self._b1, self._w2, self._b2, self._w3, self._b3,
            self._activation,
            l1, l2, l3, l4, c,
            LASER_MAX_RANGE, FILTER_ALPHA, FILTER_GUARD,
            self._filter_state, self._seeded,
            self._x, self._h1, self._h2, self._q,
        )
        if action < 0:
            raise InputError("non-finite sensor input")
        return int(action)


def load(data: bytes) -> InferenceContext:
    """Validate a blob and build a ready context. All checks happen here."""
    return InferenceContext(data)


def load_file(path) -> InferenceContext:
    with open(path, "rb") as fh:
        return load(fh.read())


def footprint(ctx: InferenceContext) -> int:
    """Total static bytes of one context, from the declared layout."""
    return ctx.footprint_bytes


def measure_throughput(ctx: InferenceContext, n_calls: int = 50_000, seed: int = 0) -> float:
    """Sustained infer() calls per second; input generation is not timed."""
    rng = np.random.default_rng(seed)
    lasers = rng.uniform(0.0, LASER_MAX_RANGE, size=(n_calls, 4))
    cs = rng.uniform(0.0, 1.0, size=n_calls)
    ctx.infer(1.0, 1.0, 1.0, 1.0, 0.5)  # ensure the kernel is compiled
    ctx.reset()
    start = time.perf_counter()
    for i in range(n_calls):
        row = lasers[i]
        ctx.infer(row[0], row[1], row[2], row[3], cs[i])
    elapsed = time.perf_counter() - start
    return n_calls / elapsed
