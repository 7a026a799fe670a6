"""Ensemble experiments: the C distribution, CHSH maxima on the contextual
subensemble, and the C versus B_max scatter."""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import functionals
from .chsh import DEFAULT_RESTARTS, TSIRELSON, optimize_chsh
from .haar import SeedSpec, random_pure_states
from .records import (
    COLUMNS,
    ORACLE_MISMATCH,
    EnsembleRecord,
    append_records,
    header_line,
    read_records,
    write_records,
)
from .stats import Histogram, Moments, SummaryStats, histogram, merge_tree, summarize_values

# Work unit for the C scan.  Fixed so that results do not depend on the
# worker count.
CHUNK = 1000
# Optimizer restarts for record k draw from stream k + BMAX_STREAM_OFFSET,
# disjoint from the state streams 0..n-1.
BMAX_STREAM_OFFSET = 1 << 63
C_RANGE = (2.0, 6.0)
B_RANGE = (2.0, TSIRELSON)
DEFAULT_N = 100_000
DEFAULT_BMAX_CAP = 2000


class PipelineIOError(OSError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n_states: int = DEFAULT_N
    master_seed: int = 0
    c_threshold: float = 4.0
    restarts: int = DEFAULT_RESTARTS
    histogram_bins: int = 100
    c_range: tuple[float, float] = C_RANGE
    b_range: tuple[float, float] = field(default=B_RANGE)
    workers: int = 1

    def __post_init__(self):
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")
        if self.histogram_bins < 1:
            raise ValueError("histogram_bins must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        for lo, hi in (self.c_range, self.b_range):
            if not lo < hi:
                raise ValueError("histogram range needs low < high")
        SeedSpec(self.master_seed, 0)


def _progress(msg: str, enabled: bool) -> None:
    if enabled:
        print(f"\r{msg}", end="", file=sys.stderr, flush=True)


def _c_chunk(args) -> list[EnsembleRecord]:
    master_seed, start, stop = args
    f, r = functionals.build_c()
    states = random_pure_states(master_seed, start, stop)
    values = functionals.evaluate_many(f, r, states)
    return [
        EnsembleRecord(start + i, tuple(complex(z) for z in states[i]), float(values[i]))
        for i in range(stop - start)
    ]


def _chunks(start: int, stop: int):
    k = start
    while k < stop:
        # realign to CHUNK boundaries after a resume
        end = min(stop, (k // CHUNK + 1) * CHUNK)
        yield k, end
        k = end


def _map(fn, items, workers: int):
    if workers <= 1:
        yield from map(fn, items)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # results come back in submission order whatever the finishing order
        yield from pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers)))


def chunk_moments(values) -> Moments:
    """Moments per CHUNK-sized block, reduced by a fixed pairwise tree."""
    values = np.asarray(values, dtype=float)
    parts = [Moments.of(values[i:i + CHUNK]) for i in range(0, len(values), CHUNK)]
    return merge_tree(parts)


def _load_checkpoint(out: Path, cfg: RunConfig) -> list[EnsembleRecord]:
    records, seed = read_records(out, allow_partial_tail=True)
    if seed != cfg.master_seed:
        raise ValueError(f"{out}: checkpoint has master_seed={seed}, run uses {cfg.master_seed}")
    for k, r in enumerate(records):
        if r.index != k:
            raise ValueError(f"{out}: checkpoint rows are not consecutive from 0 (row {k} has index {r.index})")
    records = records[:cfg.n_states]
    try:
        # rewrite without any partial tail row before appending
        write_records(records, out, cfg.master_seed)
    except OSError as exc:
        raise PipelineIOError(f"cannot rewrite checkpoint {out}: {exc}") from exc
    return records


def run_c_scan(cfg: RunConfig, out=None, resume: bool = False, progress: bool = False):
    """Sample ``cfg.n_states`` Haar states and evaluate C on each.

    State k uses stream (master_seed, k).  When ``out`` is given, rows are
    appended chunk by chunk in index order so an interrupted run leaves a
    usable checkpoint; ``resume=True`` continues from it.
    Returns (records, SummaryStats, Histogram).
    """
    records: list[EnsembleRecord] = []
    out = Path(out) if out is not None else None
    if out is not None:
        if resume and out.exists():
            records = _load_checkpoint(out, cfg)
        else:
            try:
                with open(out, "w", newline="") as fh:
                    fh.write(header_line(cfg.master_seed) + "\n")
                    fh.write(",".join(COLUMNS) + "\n")
            except OSError as exc:
                raise PipelineIOError(f"cannot write {out}: {exc}") from exc

    jobs = [(cfg.master_seed, a, b) for a, b in _chunks(len(records), cfg.n_states)]
    for chunk in _map(_c_chunk, jobs, cfg.workers):
        records.extend(chunk)
        if out is not None:
            try:
                append_records(chunk, out)
            except OSError as exc:
                raise PipelineIOError(f"write to {out} failed after {len(records) - len(chunk)} records: {exc}") from exc
        _progress(f"cscan {len(records)}/{cfg.n_states}", progress)
    _progress("\n", progress)

    values = np.array([r.c_value for r in records])
    stats = summarize_values(values, cfg.c_threshold, chunk_moments(values))
    hist = histogram(values, cfg.histogram_bins, *cfg.c_range)
    return records, stats, hist


def filter_contextual(records, threshold: float = 4.0) -> list[EnsembleRecord]:
    """Records with c_value strictly above ``threshold``, order preserved."""
    return [r for r in records if r.c_value > threshold]


def _bmax_one(args) -> EnsembleRecord:
    rec, master_seed, restarts = args
    res = optimize_chsh(
        np.array(rec.amplitudes),
        restarts=restarts,
        seed=SeedSpec(master_seed, (rec.index + BMAX_STREAM_OFFSET) % (1 << 64)),
    )
    return rec.with_bmax(res.b_max, res.settings, "" if res.agrees else ORACLE_MISMATCH)


def run_bmax_scan(records, cfg: RunConfig, progress: bool = False) -> list[EnsembleRecord]:
    """Fill b_max and optimal angles for every record.

    Records whose optimizer value disagrees with the closed form by more
    than 1e-4 carry the ``oracle_mismatch`` flag; the scan continues.
    """
    jobs = [(r, cfg.master_seed, cfg.restarts) for r in records]
    out = []
    for rec in _map(_bmax_one, jobs, cfg.workers):
        out.append(rec)
        if len(out) % 100 == 0:
            _progress(f"bmax {len(out)}/{len(jobs)}", progress)
    _progress("\n", progress)
    return out


def flagged(records) -> list[EnsembleRecord]:
    return [r for r in records if r.flag]


def summarize(records, field: str = "c_value", threshold: float = 4.0) -> SummaryStats:
    if field not in ("c_value", "b_max"):
        raise ValueError(f"unknown field {field!r}")
    if not records:
        raise ValueError("no records to summarize")
    values = [getattr(r, field) for r in records]
    if any(v is None for v in values):
        raise ValueError(f"{field} missing on some records")
    values = np.array(values, dtype=float)
    return summarize_values(values, threshold, chunk_moments(values))


def field_histogram(records, field: str, cfg: RunConfig) -> Histogram:
    lo, hi = cfg.c_range if field == "c_value" else cfg.b_range
    values = [getattr(r, field) for r in records]
    if any(v is None for v in values):
        raise ValueError(f"{field} missing on some records")
    return histogram(values, cfg.histogram_bins, lo, hi)


@dataclass(frozen=True)
class ScatterData:
    c: np.ndarray
    b: np.ndarray
    # largest |delta b_max| over pairs with |delta C| <= window, and that pair
    max_spread: float
    pair: tuple[int, int] | None
    window: float


def scatter_data(records, window: float = 0.01) -> ScatterData:
    """(C, B_max) pairs plus the largest B_max spread among near-equal C."""
    if any(r.b_max is None for r in records):
        raise ValueError("scatter needs b_max on every record")
    c = np.array([r.c_value for r in records], dtype=float)
    b = np.array([r.b_max for r in records], dtype=float)
    order = np.argsort(c, kind="stable")
    cs, bs = c[order], b[order]
    best, pair = 0.0, None
    lo = 0
    # sliding window over sorted C
    for hi in range(len(cs)):
        while cs[hi] - cs[lo] > window:
            lo += 1
        if hi > lo:
            seg = bs[lo:hi]
            j = int(np.argmax(np.abs(seg - bs[hi])))
            d = abs(float(seg[j]) - float(bs[hi]))
            if d > best:
                best, pair = d, (records[order[lo + j]].index, records[order[hi]].index)
    return ScatterData(c, b, best, pair, window)


def write_histogram(hist: Histogram, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("bin_low,bin_high,count,density\n")
        for lo, hi, n, d in hist.rows():
            fh.write(f"{lo!r},{hi!r},{n},{d!r}\n")


def read_histogram(path) -> Histogram:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "bin_low,bin_high,count,density":
        raise ValueError(f"{path}: not a histogram file")
    rows = [ln.split(",") for ln in lines[1:] if ln.strip()]
    edges = [float(r[0]) for r in rows] + ([float(rows[-1][1])] if rows else [])
    return Histogram(np.array(edges), np.array([int(r[2]) for r in rows]))


SUMMARY_KEYS = ("mean", "variance", "skewness", "kurtosis", "median", "fraction_above", "n")


def summary_json(stats: SummaryStats, **extra) -> str:
    d = {k: getattr(stats, k) for k in SUMMARY_KEYS}
    d.update(extra)
    return json.dumps(d, sort_keys=False)


def write_summary(stats: SummaryStats, path, **extra) -> None:
    Path(path).write_text(summary_json(stats, **extra) + "\n")


def default_workers() -> int:
    env = os.environ.get("CTXLAB_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1

