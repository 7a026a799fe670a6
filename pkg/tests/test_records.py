import math

import numpy as np
import pytest

from ctxlab.chsh import MeasurementSettings
from ctxlab.records import (
    COLUMNS,
    EnsembleRecord,
    RecordFormatError,
    read_records,
    records_equal,
    write_records,
)


def random_records(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        amps /= np.linalg.norm(amps)
        c = float(rng.uniform(2, 6))
        if k % 3:
            angles = MeasurementSettings.from_angles(
                [float(rng.uniform(0, math.pi)) if i % 2 == 0 else float(rng.uniform(0, 2 * math.pi)) for i in range(8)])
            out.append(EnsembleRecord(k, tuple(complex(z) for z in amps), c, float(rng.uniform(2, 2.8)), angles,
                                      "oracle_mismatch" if k == 5 else ""))
        else:
            out.append(EnsembleRecord(k, tuple(complex(z) for z in amps), c))
    return out


def test_empty_roundtrip(tmp_path):
    p = tmp_path / "r.csv"
    write_records([], p, master_seed=3)
    lines = p.read_text().splitlines()
    assert lines == ["# ctxlab-records v1, master_seed=3", ",".join(COLUMNS)]
    assert read_records(p) == ([], 3)


def test_roundtrip_bit_exact(tmp_path):
    recs = random_records(100)
    p = tmp_path / "r.csv"
    write_records(recs, p, master_seed=2**64 - 1)
    back, seed = read_records(p)
    assert seed == 2**64 - 1
    assert len(back) == 100
    assert all(records_equal(a, b) for a, b in zip(recs, back))
    assert back == recs


def test_truncated_file_names_line(tmp_path):
    p = tmp_path / "r.csv"
    write_records(random_records(10), p, master_seed=1)
    text = p.read_text()
    p.write_text(text[: len(text) - 25])
    with pytest.raises(RecordFormatError, match=r"line 12"):
        read_records(p)
    back, _ = read_records(p, allow_partial_tail=True)
    assert len(back) == 9


def test_malformed_row_names_line(tmp_path):
    p = tmp_path / "r.csv"
    write_records(random_records(4), p, master_seed=1)
    lines = p.read_text().splitlines()
    lines[4] = lines[4].replace(",", ",x", 1)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(RecordFormatError, match="line 5"):
        read_records(p)


def test_version_mismatch(tmp_path):
    p = tmp_path / "r.csv"
    write_records([], p, master_seed=1)
    p.write_text(p.read_text().replace("v1", "v2"))
    with pytest.raises(RecordFormatError, match="unsupported"):
        read_records(p)


def test_record_range_invariants():
    with pytest.raises(ValueError):
        EnsembleRecord(0, (1, 0, 0, 0), 6.5)
    with pytest.raises(ValueError):
        EnsembleRecord(0, (1, 0, 0, 0), 4.0, b_max=3.0)
