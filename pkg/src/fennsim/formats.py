"""Binary file formats for spike events and weight matrices.

Events: little-endian (u32 timestep, u32 neuron) pairs, sorted by time.
Weights: little-endian u32 header (rows, cols, frac_bits) followed by
rows*cols int16 raw values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<3I")


class FormatError(ValueError):
    pass


def events_to_bytes(events) -> bytes:
    ev = np.asarray(events, dtype=np.int64).reshape(-1, 2)
    if len(ev) and (ev.min() < 0 or ev.max() > 0xFFFFFFFF):
        raise FormatError("event fields must fit in u32")
    if np.any(np.diff(ev[:, 0]) < 0):
        raise FormatError("events must be sorted by time")
    return ev.astype("<u4").tobytes()


def events_from_bytes(data: bytes) -> np.ndarray:
    if len(data) % 8:
        raise FormatError("event file length is not a multiple of 8 bytes")
    ev = np.frombuffer(data, dtype="<u4").astype(np.int64).reshape(-1, 2)
    if np.any(np.diff(ev[:, 0]) < 0):
        raise FormatError("events are not sorted by time")
    return ev


def weights_to_bytes(raw, frac_bits: int) -> bytes:
    w = np.asarray(raw)
    if w.ndim != 2:
        raise FormatError("weights must be a 2-D matrix")
    if w.size and (w.min() < -32768 or w.max() > 32767):
        raise FormatError("weights must be raw 16-bit values")
    if not 0 <= frac_bits <= 15:
        raise FormatError("frac_bits must be in 0..15")
    return _HEADER.pack(w.shape[0], w.shape[1], frac_bits) + w.astype("<i2").tobytes()


def weights_from_bytes(data: bytes) -> tuple[np.ndarray, int]:
    """Returns (raw int16 matrix, frac_bits)."""
    if len(data) < _HEADER.size:
        raise FormatError("truncated weight header")
    rows, cols, frac = _HEADER.unpack_from(data)
    body = data[_HEADER.size:]
    if len(body) != 2 * rows * cols:
        raise FormatError(f"expected {rows}x{cols} weights, got {len(body)} bytes")
    if frac > 15:
        raise FormatError("frac_bits must be in 0..15")
    return np.frombuffer(body, dtype="<i2").astype(np.int16).reshape(rows, cols), frac


def save_events(path, events):
    Path(path).write_bytes(events_to_bytes(events))


def load_events(path) -> np.ndarray:
    return events_from_bytes(Path(path).read_bytes())


def save_weights(path, raw, frac_bits: int):
    Path(path).write_bytes(weights_to_bytes(raw, frac_bits))


def load_weights(path) -> tuple[np.ndarray, int]:
    return weights_from_bytes(Path(path).read_bytes())
