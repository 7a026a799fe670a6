"""Per-state ensemble records and their CSV file format."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

from .chsh import TSIRELSON, MeasurementSettings

FORMAT_TAG = "ctxlab-records v1"
COLUMNS = (
    "index", "re0", "im0", "re1", "im1", "re2", "im2", "re3", "im3",
    "c_value", "b_max",
    "thetaA1", "phiA1", "thetaA2", "phiA2", "thetaB1", "phiB1", "thetaB2", "phiB2",
    "flag",
)
ORACLE_MISMATCH = "oracle_mismatch"


class RecordFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleRecord:
    index: int
    amplitudes: tuple[complex, complex, complex, complex]
    c_value: float
    b_max: float | None = None
    angles: MeasurementSettings | None = None
    flag: str = ""

    def __post_init__(self):
        if not (2.0 - 1e-9 <= self.c_value <= 6.0 + 1e-9):
            raise ValueError(f"record {self.index}: c_value {self.c_value!r} outside [2, 6]")
        if self.b_max is not None and not (2.0 - 1e-6 <= self.b_max <= TSIRELSON + 1e-9):
            raise ValueError(f"record {self.index}: b_max {self.b_max!r} outside [2, 2 sqrt 2]")

    def with_bmax(self, b_max: float, angles: MeasurementSettings, flag: str = "") -> "EnsembleRecord":
        return replace(self, b_max=b_max, angles=angles, flag=flag)


def header_line(master_seed: int) -> str:
    return f"# {FORMAT_TAG}, master_seed={int(master_seed)}"


def format_record(r: EnsembleRecord) -> str:
    fields = [str(r.index)]
    for z in r.amplitudes:
        fields += [repr(float(z.real)), repr(float(z.imag))]
    fields.append(repr(float(r.c_value)))
    fields.append("" if r.b_max is None else repr(float(r.b_max)))
    if r.angles is None:
        fields += [""] * 8
    else:
        fields += [repr(float(a)) for a in r.angles.angles()]
    fields.append(r.flag)
    return ",".join(fields)


def write_records(records, path, master_seed: int) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header_line(master_seed) + "\n")
        fh.write(",".join(COLUMNS) + "\n")
        for r in records:
            fh.write(format_record(r) + "\n")


def append_records(records, path) -> None:
    with open(path, "a", newline="") as fh:
        for r in records:
            fh.write(format_record(r) + "\n")
        fh.flush()


def parse_record(line: str, lineno: int) -> EnsembleRecord:
    parts = line.split(",")
    if len(parts) != len(COLUMNS):
        raise RecordFormatError(f"line {lineno}: expected {len(COLUMNS)} fields, got {len(parts)}")
    try:
        index = int(parts[0])
        nums = [float(x) for x in parts[1:9]]
        amps = tuple(complex(nums[2 * k], nums[2 * k + 1]) for k in range(4))
        c_value = float(parts[9])
        b_max = float(parts[10]) if parts[10] else None
        angle_fields = parts[11:19]
        if all(a == "" for a in angle_fields):
            angles = None
        else:
            angles = MeasurementSettings.from_angles([float(a) for a in angle_fields])
        flag = parts[19]
        return EnsembleRecord(index, amps, c_value, b_max, angles, flag)
    except ValueError as exc:
        raise RecordFormatError(f"line {lineno}: {exc}") from None


def read_header(first_line: str) -> int:
    s = first_line.strip()
    prefix = f"# {FORMAT_TAG}, master_seed="
    if not s.startswith("#") or "ctxlab-records" not in s:
        raise RecordFormatError("line 1: missing ctxlab-records header")
    if not s.startswith(prefix):
        raise RecordFormatError(f"line 1: unsupported record format header {s!r}, expected {FORMAT_TAG!r}")
    try:
        return int(s[len(prefix):])
    except ValueError:
        raise RecordFormatError(f"line 1: bad master_seed in header {s!r}") from None


def read_records(path, allow_partial_tail: bool = False) -> tuple[list[EnsembleRecord], int]:
    """Read a record file; returns (records, master_seed).

    Every data row must end with a newline.  With ``allow_partial_tail`` an
    unterminated final row (an interrupted write) is dropped instead of
    raising.
    """
    text = Path(path).read_text()
    lines = text.split("\n")
    # split leaves '' after a final newline; anything else is an unterminated row
    tail = lines.pop()
    if not lines:
        raise RecordFormatError("line 1: empty or truncated record file")
    seed = read_header(lines[0])
    if len(lines) < 2 or lines[1].strip() != ",".join(COLUMNS):
        raise RecordFormatError("line 2: column header does not match " + ",".join(COLUMNS))
    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        records.append(parse_record(line, lineno))
    if tail and not allow_partial_tail:
        raise RecordFormatError(f"line {len(lines) + 1}: truncated row (no terminating newline)")
    return records, seed


def records_equal(a: EnsembleRecord, b: EnsembleRecord) -> bool:
    """Bit-exact equality, treating NaN fields and signed zeros strictly."""
    def same(x, y):
        if x is None or y is None:
            return x is y
        return math.copysign(1.0, x) == math.copysign(1.0, y) and (x == y or (math.isnan(x) and math.isnan(y)))

    if a.index != b.index or a.flag != b.flag:
        return False
    for za, zb in zip(a.amplitudes, b.amplitudes):
        if not (same(za.real, zb.real) and same(za.imag, zb.imag)):
            return False
    if not same(a.c_value, b.c_value) or not same(a.b_max, b.b_max):
        return False
    if (a.angles is None) != (b.angles is None):
        return False
    if a.angles is not None:
        return all(same(x, y) for x, y in zip(a.angles.angles(), b.angles.angles()))
    return True
