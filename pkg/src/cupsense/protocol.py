"""Binary frame codec and sweep assembly for a streaming impedance front end.

Frame layout (20 bytes, little-endian)::

    0   magic      A5 5A
    2   version    01
    3   sweep_id   uint16
    5   index      uint8
    6   frequency  float32  (Hz)
    10  real       float32  (ohm)
    14  imag       float32  (ohm)
    18  crc16      uint16   CRC-16/CCITT-FALSE over bytes 2..17
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .spectrum import FrequencyGrid, Spectrum, SpectrumMeta

MAGIC = b"\xa5\x5a"
VERSION = 1
_BODY = struct.Struct("<BHBfff")
FRAME_SIZE = len(MAGIC) + _BODY.size + 2
GRID_RTOL = 1e-4
MAX_POINTS = 256


class FrameError(ValueError):
    pass


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class BadLength(FrameError):
    pass


class BadCrc(FrameError):
    pass


class AssemblyError(ValueError):
    pass


class MissingPoints(AssemblyError):
    def __init__(self, indices):
        self.indices = sorted(indices)
        super().__init__(f"missing point indices {self.indices}")


class ConflictingDuplicate(AssemblyError):
    pass


class GridMismatch(AssemblyError):
    pass


class SweepIdMismatch(AssemblyError):
    pass


def crc16_ccitt_false(data: bytes, crc: int = 0xFFFF) -> int:
    for b in data:
        crc ^= b << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
    return crc


@dataclass(frozen=True)
class PointFrame:
    sweep_id: int
    point_index: int
    frequency: float
    real: float
    imag: float

    def __post_init__(self):
        if not 0 <= self.sweep_id <= 0xFFFF:
            raise FrameError(f"sweep_id out of range: {self.sweep_id}")
        if not 0 <= self.point_index <= 0xFF:
            raise FrameError(f"point_index out of range: {self.point_index}")
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise FrameError(f"frequency must be finite and > 0: {self.frequency}")
        if not (math.isfinite(self.real) and math.isfinite(self.imag)):
            raise FrameError("impedance must be finite")


def encode_frame(p: PointFrame) -> bytes:
    body = _BODY.pack(VERSION, p.sweep_id, p.point_index, p.frequency, p.real, p.imag)
    return MAGIC + body + struct.pack("<H", crc16_ccitt_false(body))


def decode_frame(b: bytes) -> PointFrame:
    b = bytes(b)
    if len(b) != FRAME_SIZE:
        raise BadLength(f"frame must be {FRAME_SIZE} bytes, got {len(b)}")
    if b[:2] != MAGIC:
        raise BadMagic(f"bad magic {b[:2].hex()}")
    if b[2] != VERSION:
        raise BadVersion(f"unsupported version {b[2]}")
    body = b[2:-2]
    (crc,) = struct.unpack("<H", b[-2:])
    if crc != crc16_ccitt_false(body):
        raise BadCrc(f"crc mismatch: frame says {crc:#06x}")
    _, sweep_id, index, freq, re, im = _BODY.unpack(body)
    return PointFrame(sweep_id, index, freq, re, im)


def stream_sweep(s: Spectrum, sweep_id: int) -> list[bytes]:
    """One frame per grid point, in index order."""
    if len(s) > MAX_POINTS:
        raise ValueError(f"a sweep holds at most {MAX_POINTS} points, got {len(s)}")
    return [encode_frame(PointFrame(sweep_id, i, float(f), float(z.real), float(z.imag)))
            for i, (f, z) in enumerate(zip(s.grid.points, s.values))]


def iter_frames(buf: bytes, errors: list | None = None) -> Iterator[PointFrame]:
    """Scan a byte stream; on a bad frame skip one byte and resynchronise on the magic."""
    i = 0
    n = len(buf)
    while i + FRAME_SIZE <= n:
        try:
            frame = decode_frame(buf[i:i + FRAME_SIZE])
        except FrameError as exc:
            if errors is not None:
                errors.append((i, exc))
            j = buf.find(MAGIC, i + 1)
            i = j if j >= 0 else n
            continue
        yield frame
        i += FRAME_SIZE
    if i < n and errors is not None:
        errors.append((i, BadLength(f"{n - i} trailing byte(s)")))


class SweepAssembler:
    """Collects frames of one sweep; feed in any order, then ``finish()``.

    Not thread-safe: a single owner feeds it.
    """

    def __init__(self, expected_grid: FrequencyGrid, meta: SpectrumMeta | None = None):
        self.grid = expected_grid
        self.meta = meta or SpectrumMeta()
        self.sweep_id = None
        self.points: dict[int, PointFrame] = {}
        self.duplicates = 0

    def feed(self, frame: PointFrame) -> None:
        if self.sweep_id is None:
            self.sweep_id = frame.sweep_id
        elif frame.sweep_id != self.sweep_id:
            raise SweepIdMismatch(f"frame for sweep {frame.sweep_id} fed to sweep {self.sweep_id}")
        i = frame.point_index
        if i >= len(self.grid):
            raise GridMismatch(f"point index {i} outside a {len(self.grid)}-point grid")
        f_exp = self.grid.points[i]
        if abs(frame.frequency - f_exp) > GRID_RTOL * f_exp:
            raise GridMismatch(f"point {i}: frequency {frame.frequency} Hz, expected {f_exp} Hz")
        old = self.points.get(i)
        if old is not None:
            if old != frame:
                raise ConflictingDuplicate(f"point {i} received twice with different payloads")
            self.duplicates += 1
            return
        self.points[i] = frame

    def missing(self) -> list[int]:
        return [i for i in range(len(self.grid)) if i not in self.points]

    def finish(self) -> Spectrum:
        gaps = self.missing()
        if gaps:
            raise MissingPoints(gaps)
        z = np.array([complex(self.points[i].real, self.points[i].imag)
                      for i in range(len(self.grid))])
        return Spectrum(self.grid, z, self.meta)


def assemble_sweep(frames: Iterable[PointFrame | bytes], expected_grid: FrequencyGrid,
                   meta: SpectrumMeta | None = None) -> Spectrum:
    asm = SweepAssembler(expected_grid, meta)
    for f in frames:
        asm.feed(decode_frame(f) if isinstance(f, (bytes, bytearray)) else f)
    return asm.finish()
