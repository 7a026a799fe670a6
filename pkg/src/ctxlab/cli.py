"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error,
3 numerical-consistency failure (optimizer disagreed with the closed form).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import functionals, pipeline, quantum, svgplot
from .chsh import TSIRELSON, MeasurementSettings
from .haar import SeedSpec, random_pure_states
from .records import RecordFormatError, read_records, write_records

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class CliError(click.ClickException):
    def __init__(self, message: str, exit_code: int = EXIT_USAGE):
        super().__init__(message)
        self.exit_code = exit_code


def _check_writable(*paths) -> None:
    for p in paths:
        if p is None:
            continue
        parent = Path(p).resolve().parent
        if not parent.is_dir():
            raise CliError(f"cannot write {p}: directory {parent} does not exist", EXIT_IO)


def _load_records(path):
    p = Path(path)
    if not p.is_file():
        raise CliError(f"cannot read {path}: no such file", EXIT_IO)
    try:
        return read_records(p)
    except RecordFormatError as exc:
        raise CliError(f"{path}: {exc}") from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def _write(fn, path, *args, **kwargs):
    try:
        fn(*args, path, **kwargs)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _workers_option(f):
    return click.option(
        "--workers", type=click.IntRange(min=1), default=1, envvar="CTXLAB_WORKERS",
        show_default=True, help="Worker processes (default from CTXLAB_WORKERS).",
    )(f)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Contextuality (C functional) versus CHSH violation on Haar-random two-qubit states."""


@cli.command()
@click.option("--inequality", type=click.Choice(functionals.FUNCTIONAL_NAMES), required=True,
              help="Which functional to enumerate.")
def bounds(inequality):
    """Print the classical bound by exhaustive enumeration of +-1 assignments."""
    f, _ = functionals.build(inequality)
    click.echo(f"bound={f.classical_bound} assignments={f.n_assignments}")
    return EXIT_OK


def _parse_angles(text):
    try:
        vals = [float(x) for x in text.replace(",", " ").split()]
        return MeasurementSettings.from_angles(vals)
    except ValueError as exc:
        raise CliError(f"--angles: {exc}") from None


@cli.command("eval")
@click.option("--inequality", type=click.Choice(functionals.FUNCTIONAL_NAMES), required=True)
@click.option("--states", "states_path", required=True, help="State file (8 floats per line).")
@click.option("--angles", default=None,
              help="CHSH only: thetaA1,phiA1,thetaA2,phiA2,thetaB1,phiB1,thetaB2,phiB2 in radians.")
def eval_cmd(inequality, states_path, angles):
    """Evaluate a functional on every state of a state file, one value per line."""
    if not Path(states_path).is_file():
        raise CliError(f"cannot read {states_path}: no such file", EXIT_IO)
    try:
        states, _ = quantum.read_states(states_path)
    except quantum.QuantumError as exc:
        raise CliError(f"{states_path}: {exc}") from None
    if inequality == "chsh":
        if angles is None:
            raise CliError("--angles is required for --inequality chsh")
        f, r = functionals.build_chsh(_parse_angles(angles))
    else:
        if angles is not None:
            raise CliError("--angles only applies to --inequality chsh")
        f, r = functionals.build(inequality)
    for v in functionals.evaluate_many(f, r, states):
        click.echo(repr(float(v)))
    return EXIT_OK


@cli.command()
@click.option("--n", "n", type=int, required=True, help="Number of states.")
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed (64-bit unsigned).")
@click.option("--out", required=True, help="Output state file.")
def sample(n, seed, out):
    """Write Haar-random pure states for stream indices 0..n-1."""
    if n < 1:
        raise CliError("--n must be >= 1")
    _seed(seed)
    _check_writable(out)
    states = random_pure_states(seed, 0, n)
    try:
        quantum.write_states(out, states, master_seed=seed)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from None
    return EXIT_OK


def _seed(seed):
    try:
        SeedSpec(seed, 0)
    except ValueError as exc:
        raise CliError(f"--seed: {exc}") from None


@cli.command()
@click.option("--n", "n", type=int, default=pipeline.DEFAULT_N, show_default=True, help="Ensemble size.")
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed (64-bit unsigned).")
@click.option("--out", required=True, help="Record CSV to write.")
@click.option("--hist", default=None, help="Histogram CSV to write.")
@click.option("--summary", default=None, help="Summary JSON to write.")
@click.option("--bins", type=int, default=100, show_default=True, help="Histogram bins on [2, 6].")
@click.option("--threshold", type=float, default=4.0, show_default=True, help="Threshold for fraction_above.")
@click.option("--resume", is_flag=True, help="Continue from an existing partial --out file.")
@click.option("--progress/--no-progress", default=False, help="Progress line on stderr.")
@_workers_option
def cscan(n, seed, out, hist, summary, bins, threshold, resume, progress, workers):
    """Sample states, evaluate C on each, and report its distribution."""
    if n < 1:
        raise CliError("--n must be >= 1")
    if bins < 1:
        raise CliError("--bins must be >= 1")
    _seed(seed)
    _check_writable(out, hist, summary)
    cfg = pipeline.RunConfig(n_states=n, master_seed=seed, c_threshold=threshold,
                             histogram_bins=bins, workers=workers)
    try:
        _, stats, h = pipeline.run_c_scan(cfg, out=out, resume=resume, progress=progress)
    except pipeline.PipelineIOError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    except (ValueError, RecordFormatError) as exc:
        raise CliError(str(exc)) from None
    if hist:
        _write(pipeline.write_histogram, hist, h)
    if summary:
        _write(pipeline.write_summary, summary, stats)
    click.echo(pipeline.summary_json(stats))
    return EXIT_OK


@cli.command()
@click.option("--in", "in_path", required=True, help="Record CSV from cscan.")
@click.option("--filter-c", type=float, default=4.0, show_default=True, help="Keep records with C above this.")
@click.option("--restarts", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--cap", type=click.IntRange(min=0), default=pipeline.DEFAULT_BMAX_CAP, show_default=True,
              help="Optimize at most this many filtered records (0 = all).")
@click.option("--out", required=True, help="Record CSV with b_max and angles.")
@click.option("--hist", default=None, help="B_max histogram CSV on [2, 2 sqrt 2].")
@click.option("--summary", default=None, help="B_max summary JSON.")
@click.option("--bins", type=int, default=100, show_default=True)
@click.option("--progress/--no-progress", default=False)
@_workers_option
def bmax(in_path, filter_c, restarts, cap, out, hist, summary, bins, progress, workers):
    """Maximize the CHSH value over measurement angles on the contextual records."""
    if bins < 1:
        raise CliError("--bins must be >= 1")
    _check_writable(out, hist, summary)
    records, seed = _load_records(in_path)
    selected = pipeline.filter_contextual(records, filter_c)
    n_contextual = len(selected)
    if cap:
        selected = selected[:cap]
    cfg = pipeline.RunConfig(n_states=max(1, len(records)), master_seed=seed, restarts=restarts,
                             histogram_bins=bins, workers=workers)
    done = pipeline.run_bmax_scan(selected, cfg, progress=progress)
    _write(write_records, out, done, master_seed=seed)
    if not done:
        click.echo(f"0 records (ensemble={len(records)}, C > {filter_c:g})")
        return EXIT_OK
    b = [r.b_max for r in done]
    if hist:
        _write(pipeline.write_histogram, hist, pipeline.field_histogram(done, "b_max", cfg))
    if summary:
        _write(pipeline.write_summary, summary, pipeline.summarize(done, "b_max", 2.0),
               n_ensemble=len(records), n_contextual=n_contextual)
    click.echo(f"{len(done)} records (ensemble={len(records)}, contextual={n_contextual}, C > {filter_c:g})")
    click.echo(f"min_b_max={min(b)!r} max_b_max={max(b)!r}")
    bad = pipeline.flagged(done)
    if bad:
        click.echo(f"oracle disagreement on {len(bad)} records: {[r.index for r in bad][:20]}", err=True)
        return EXIT_NUMERIC
    return EXIT_OK


@cli.command()
@click.option("--in", "in_path", required=True, help="Record CSV.")
@click.option("--field", type=click.Choice(["c_value", "b_max"]), default="c_value", show_default=True)
@click.option("--threshold", type=float, default=None, help="Default 4 for c_value, 2 for b_max.")
@click.option("--summary", default=None, help="Summary JSON to write.")
@click.option("--hist", default=None, help="Histogram CSV to write.")
@click.option("--bins", type=int, default=100, show_default=True)
def stats(in_path, field, threshold, summary, hist, bins):
    """Moments, median and threshold fraction of a record column."""
    if bins < 1:
        raise CliError("--bins must be >= 1")
    _check_writable(summary, hist)
    records, _ = _load_records(in_path)
    if not records:
        raise CliError(f"{in_path}: no records")
    if threshold is None:
        threshold = 4.0 if field == "c_value" else 2.0
    try:
        s = pipeline.summarize(records, field, threshold)
        h = pipeline.field_histogram(records, field, pipeline.RunConfig(histogram_bins=bins))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if summary:
        _write(pipeline.write_summary, summary, s)
    if hist:
        _write(pipeline.write_histogram, hist, h)
    click.echo(pipeline.summary_json(s))
    return EXIT_OK


@cli.command()
@click.option("--in", "in_path", required=True, help="Record CSV with b_max.")
@click.option("--out", default=None, help="Two-column CSV c_value,b_max.")
@click.option("--window", type=float, default=0.01, show_default=True,
              help="Max |delta C| for the B_max spread search.")
def scatter(in_path, out, window):
    """Tabulate (C, B_max) pairs and report the B_max spread at near-equal C."""
    _check_writable(out)
    records, _ = _load_records(in_path)
    if not records:
        raise CliError(f"{in_path}: no records")
    try:
        sd = pipeline.scatter_data(records, window)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if out:
        def dump(path):
            with open(path, "w") as fh:
                fh.write("c_value,b_max\n")
                for c, b in zip(sd.c, sd.b):
                    fh.write(f"{c!r},{b!r}\n")
        _write(dump, out)
    click.echo(f"points={len(sd.c)} max_delta_b={sd.max_spread!r} window={window!r} pair={sd.pair}")
    return EXIT_OK


@cli.command()
@click.option("--in", "in_path", required=True, help="Record CSV.")
@click.option("--kind", type=click.Choice(["hist-c", "hist-b", "scatter"]), required=True)
@click.option("--out", required=True, help="SVG file to write.")
@click.option("--bins", type=int, default=100, show_default=True)
def plot(in_path, kind, out, bins):
    """Render the C histogram, the B_max histogram, or the C-B_max scatter as SVG."""
    if bins < 1:
        raise CliError("--bins must be >= 1")
    _check_writable(out)
    records, _ = _load_records(in_path)
    if not records:
        raise CliError(f"{in_path}: no records, nothing to plot")
    cfg = pipeline.RunConfig(histogram_bins=bins)
    if kind != "hist-c" and any(r.b_max is None for r in records):
        raise CliError(f"{in_path}: b_max missing; run bmax first")
    if kind == "hist-c":
        h = pipeline.field_histogram(records, "c_value", cfg)
        svg = svgplot.histogram_svg(h.edges, h.density, [4.0], f"P(C), n = {len(records)}", "C")
    elif kind == "hist-b":
        h = pipeline.field_histogram(records, "b_max", cfg)
        svg = svgplot.histogram_svg(h.edges, h.density, [2.0, TSIRELSON],
                                    f"P(B_max), n = {len(records)}", "B_max")
    else:
        c = [r.c_value for r in records]
        b = [r.b_max for r in records]
        # vertical guides at the smallest and largest C in the sample
        svg = svgplot.scatter_svg(c, b, [min(c), max(c)], [2.0, TSIRELSON],
                                  (min(4.0, min(c)), 6.0), (1.95, 2.9),
                                  f"B_max versus C, n = {len(records)}", "C", "B_max")
    try:
        Path(out).write_text(svg)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from None
    return EXIT_OK


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="ctxlab", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
