"""Binary MSFC (coefficients) and MSFG (grid samples) formats.

Layout, all little-endian::

    MSFC v1:  b"MSFC" | u32 version=1 | u32 r | u32 n_neg | u32 n_pos
              | (n_neg + n_pos + 1) * r * r complex values
    MSFG v1:  b"MSFG" | u32 version=1 | u32 r | u32 N_g
              | N_g * r * r complex values

Complex values are (re, im) pairs of float64, coefficient-major (or grid
order), row-major within each matrix.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError
from .laurent import GridSamples, LaurentMatrixPoly, is_power_of_two

VERSION = 1
_C16 = np.dtype("<c16")


def encode_msfc(p: LaurentMatrixPoly) -> bytes:
    head = b"MSFC" + struct.pack("<4I", VERSION, p.r, p.n_neg, p.n_pos)
    return head + np.ascontiguousarray(p.coeffs, dtype=_C16).tobytes()


def encode_msfg(s: GridSamples) -> bytes:
    head = b"MSFG" + struct.pack("<3I", VERSION, s.r, s.n_grid)
    return head + np.ascontiguousarray(s.values, dtype=_C16).tobytes()


def _header(buf: bytes, magic: bytes, nfields: int):
    if len(buf) < 4:
        raise FormatError("truncated magic", offset=len(buf))
    if buf[:4] != magic:
        for i in range(4):
            if buf[i] != magic[i]:
                raise FormatError(f"bad magic {buf[:4]!r}, expected {magic!r}", offset=i)
    end = 4 + 4 * nfields
    if len(buf) < end:
        raise FormatError("truncated header", offset=len(buf))
    fields = struct.unpack_from(f"<{nfields}I", buf, 4)
    if fields[0] != VERSION:
        raise FormatError(f"unsupported version {fields[0]}", offset=4)
    return fields, end


def _payload(buf: bytes, start: int, count: int):
    need = start + 16 * count
    if len(buf) != need:
        raise FormatError(f"payload size mismatch: expected {need} bytes, got {len(buf)}",
                          offset=min(len(buf), need))
    return np.frombuffer(buf, dtype=_C16, count=count, offset=start).astype(complex)


def decode_msfc(buf: bytes) -> LaurentMatrixPoly:
    (_, r, n_neg, n_pos), off = _header(buf, b"MSFC", 4)
    if r < 1:
        raise FormatError("matrix dimension must be positive", offset=8)
    k = n_neg + n_pos + 1
    vals = _payload(buf, off, k * r * r)
    return LaurentMatrixPoly(vals.reshape(k, r, r), n_neg)


def decode_msfg(buf: bytes) -> GridSamples:
    (_, r, ng), off = _header(buf, b"MSFG", 3)
    if r < 1:
        raise FormatError("matrix dimension must be positive", offset=8)
    if ng < 2 or not is_power_of_two(ng):
        raise FormatError(f"grid size {ng} is not a power of two >= 2", offset=12)
    vals = _payload(buf, off, ng * r * r)
    return GridSamples(vals.reshape(ng, r, r))


def write_msfc(path, p: LaurentMatrixPoly):
    with open(path, "wb") as fh:
        fh.write(encode_msfc(p))


def write_msfg(path, s: GridSamples):
    with open(path, "wb") as fh:
        fh.write(encode_msfg(s))


def read_msfc(path) -> LaurentMatrixPoly:
    with open(path, "rb") as fh:
        return decode_msfc(fh.read())


def read_msfg(path) -> GridSamples:
    with open(path, "rb") as fh:
        return decode_msfg(fh.read())


def read_any(path):
    """Dispatch on the magic bytes; returns a LaurentMatrixPoly or GridSamples."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] == b"MSFC":
        return decode_msfc(buf)
    if buf[:4] == b"MSFG":
        return decode_msfg(buf)
    raise FormatError(f"unrecognised magic {buf[:4]!r} in {os.fspath(path)}", offset=0)
