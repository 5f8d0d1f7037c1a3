"""Binary trace files and CSV table helpers.

A trace file is a 32-byte little-endian header followed by float32 samples::

    magic "AETR" | version u16 | channel_id u16 | sample_rate f64 | t0 f64 | count u64
"""
from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .errors import DomainError
from .signal import TraceRecord

MAGIC = b"AETR"
VERSION = 1
HEADER = struct.Struct("<4sHHddQ")


def encode_trace(tr: TraceRecord) -> bytes:
    if not 0 <= tr.channel_id < 2 ** 16:
        raise DomainError(f"channel_id {tr.channel_id} does not fit in u16")
    samples = np.ascontiguousarray(tr.samples, dtype="<f4")
    return HEADER.pack(MAGIC, VERSION, tr.channel_id, tr.sample_rate, tr.t0, samples.size) + samples.tobytes()


def decode_trace(buf: bytes) -> TraceRecord:
    if len(buf) < HEADER.size:
        raise DomainError("trace file shorter than its header")
    magic, version, channel, rate, t0, count = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise DomainError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DomainError(f"unsupported trace version {version}")
    payload = len(buf) - HEADER.size
    if payload != 4 * count:
        raise DomainError(f"header says {count} samples, payload holds {payload / 4:g}")
    samples = np.frombuffer(buf, dtype="<f4", count=count, offset=HEADER.size)
    return TraceRecord(channel, rate, t0, samples)


def write_trace(path, tr: TraceRecord) -> None:
    Path(path).write_bytes(encode_trace(tr))


def read_trace(path) -> TraceRecord:
    return decode_trace(Path(path).read_bytes())


def write_csv(path, header: list[str], rows) -> None:
    """Write rows with ``repr`` float formatting so re-reads are exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
