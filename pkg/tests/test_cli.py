import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ctxlab.cli import main
from ctxlab.records import read_records

SUBCOMMANDS = ["bounds", "eval", "sample", "cscan", "bmax", "stats", "scatter", "plot"]


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name,expected", [
    ("c", "bound=4 assignments=256"),
    ("pm", "bound=4 assignments=512"),
    ("cabello18", "bound=7 assignments=262144"),
    ("chsh", "bound=2 assignments=16"),
])
def test_bounds(capsys, name, expected):
    code, out, _ = run(capsys, "bounds", "--inequality", name)
    assert code == 0 and out.strip() == expected


def test_usage_errors(capsys):
    assert run(capsys, "bounds", "--inequality", "nope")[0] == 1
    assert run(capsys, "bounds", "--inequality", "c", "--bogus", "1")[0] == 1
    assert run(capsys, "bounds")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help(capsys, sub):
    code, out, _ = run(capsys, sub, "--help")
    assert code == 0
    assert "--" in out


def test_help_via_entry_point():
    r = subprocess.run([sys.executable, "-m", "ctxlab.cli", "cscan", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--summary" in r.stdout


@pytest.fixture(scope="module")
def scan_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("scan")
    code = main(["cscan", "--n", "4000", "--seed", "7", "--out", str(d / "r.csv"),
                 "--hist", str(d / "h.csv"), "--summary", str(d / "s.json")])
    assert code == 0
    return d


def test_cscan_outputs(scan_dir, tmp_path, capsys):
    s = json.loads((scan_dir / "s.json").read_text())
    assert set(s) == {"mean", "variance", "skewness", "kurtosis", "median", "fraction_above", "n"}
    assert s["n"] == 4000
    assert (scan_dir / "h.csv").read_text().startswith("bin_low,bin_high,count,density\n")
    code, out, _ = run(capsys, "cscan", "--n", "4000", "--seed", "7", "--out", str(tmp_path / "r2.csv"))
    assert code == 0
    assert json.loads(out) == s
    assert (tmp_path / "r2.csv").read_bytes() == (scan_dir / "r.csv").read_bytes()


def test_cscan_bad_args(capsys, tmp_path):
    assert run(capsys, "cscan", "--n", "0", "--out", str(tmp_path / "x.csv"))[0] == 1
    assert not (tmp_path / "x.csv").exists()
    assert run(capsys, "cscan", "--n", "10", "--out", str(tmp_path / "no" / "x.csv"))[0] == 2


def test_workers_env(monkeypatch, capsys, tmp_path, scan_dir):
    monkeypatch.setenv("CTXLAB_WORKERS", "2")
    code, _, _ = run(capsys, "cscan", "--n", "4000", "--seed", "7", "--out", str(tmp_path / "w.csv"))
    assert code == 0
    assert (tmp_path / "w.csv").read_bytes() == (scan_dir / "r.csv").read_bytes()


@pytest.fixture(scope="module")
def bmax_dir(scan_dir):
    code = main(["bmax", "--in", str(scan_dir / "r.csv"), "--cap", "150", "--out", str(scan_dir / "b.csv"),
                 "--hist", str(scan_dir / "bh.csv"), "--summary", str(scan_dir / "bs.json")])
    assert code == 0
    return scan_dir


def test_bmax(bmax_dir):
    recs, seed = read_records(bmax_dir / "b.csv")
    assert seed == 7 and len(recs) == 150
    assert all(2 < r.b_max <= 2 * math.sqrt(2) + 1e-9 for r in recs)
    s = json.loads((bmax_dir / "bs.json").read_text())
    assert s["n"] == 150 and s["n_ensemble"] == 4000


def test_bmax_report_and_empty_filter(scan_dir, capsys, tmp_path):
    code, out, _ = run(capsys, "bmax", "--in", str(scan_dir / "r.csv"), "--cap", "20", "--out", str(tmp_path / "b.csv"))
    assert code == 0
    line = [ln for ln in out.splitlines() if ln.startswith("min_b_max")][0]
    lo, hi = (float(tok.split("=")[1]) for tok in line.split())
    assert lo > 2 and hi <= 2 * math.sqrt(2) + 1e-9

    code, out, _ = run(capsys, "bmax", "--in", str(scan_dir / "r.csv"), "--filter-c", "6.1", "--out", str(tmp_path / "e.csv"))
    assert code == 0 and out.startswith("0 records")
    assert read_records(tmp_path / "e.csv")[0] == []


def test_bmax_oracle_disagreement_exit_3(scan_dir, capsys, tmp_path, monkeypatch):
    from ctxlab import chsh

    monkeypatch.setattr(chsh, "AGREEMENT_TOL", -1.0)
    code, _, err = run(capsys, "bmax", "--in", str(scan_dir / "r.csv"), "--cap", "3", "--out", str(tmp_path / "b.csv"))
    assert code == 3 and "oracle disagreement" in err
    recs, _ = read_records(tmp_path / "b.csv")
    assert len(recs) == 3 and all(r.flag == "oracle_mismatch" for r in recs)


def test_bmax_missing_input(capsys, tmp_path):
    assert run(capsys, "bmax", "--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.csv"))[0] == 2


def test_stats_and_scatter(bmax_dir, capsys, tmp_path):
    code, out, _ = run(capsys, "stats", "--in", str(bmax_dir / "r.csv"), "--summary", str(tmp_path / "s.json"))
    assert code == 0 and json.loads(out)["n"] == 4000
    code, out, _ = run(capsys, "stats", "--in", str(bmax_dir / "r.csv"), "--field", "b_max")
    assert code == 1
    code, out, _ = run(capsys, "scatter", "--in", str(bmax_dir / "b.csv"), "--out", str(tmp_path / "sc.csv"))
    assert code == 0 and out.startswith("points=150")
    rows = (tmp_path / "sc.csv").read_text().splitlines()
    assert rows[0] == "c_value,b_max" and len(rows) == 151


def test_sample_and_eval(capsys, tmp_path):
    p = tmp_path / "s.txt"
    assert run(capsys, "sample", "--n", "5", "--seed", "3", "--out", str(p))[0] == 0
    assert p.read_text().startswith("# ctxlab-states master_seed=3")
    code, out, _ = run(capsys, "eval", "--inequality", "pm", "--states", str(p))
    assert code == 0 and all(abs(float(v) - 6) < 1e-10 for v in out.split())
    code, out, _ = run(capsys, "eval", "--inequality", "cabello18", "--states", str(p))
    assert all(abs(float(v) - 9) < 1e-9 for v in out.split())
    assert run(capsys, "eval", "--inequality", "chsh", "--states", str(p))[0] == 1

    singlet = tmp_path / "singlet.txt"
    r = 1 / math.sqrt(2)
    singlet.write_text(f"0 0 {r!r} 0 {-r!r} 0 0 0\n")
    # a1 = z, a2 = x, b1 = -(z+x)/sqrt2, b2 = (x-z)/sqrt2
    angles = f"0,0,{math.pi / 2},0,{3 * math.pi / 4},{math.pi},{3 * math.pi / 4},0"
    code, out, _ = run(capsys, "eval", "--inequality", "chsh", "--states", str(singlet), "--angles", angles)
    assert code == 0 and float(out) == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def _svg_guides(text, attr):
    import re

    return [float(v) for v in re.findall(rf'class="guide" data-{attr}="([^"]+)"', text)]


def test_plots(bmax_dir, capsys, tmp_path):
    out = tmp_path / "c.svg"
    assert run(capsys, "plot", "--in", str(bmax_dir / "r.csv"), "--kind", "hist-c", "--out", str(out))[0] == 0
    text = out.read_text()
    assert text.startswith("<svg") and 'stroke-dasharray' in text
    assert _svg_guides(text, "x") == [4.0]

    out = tmp_path / "b.svg"
    assert run(capsys, "plot", "--in", str(bmax_dir / "b.csv"), "--kind", "hist-b", "--out", str(out))[0] == 0
    assert _svg_guides(out.read_text(), "x") == [2.0, 2 * math.sqrt(2)]

    out = tmp_path / "s.svg"
    assert run(capsys, "plot", "--in", str(bmax_dir / "b.csv"), "--kind", "scatter", "--out", str(out))[0] == 0
    text = out.read_text()
    assert _svg_guides(text, "y") == [2.0, 2 * math.sqrt(2)]
    assert len(_svg_guides(text, "x")) == 2

    out = tmp_path / "bad.svg"
    assert run(capsys, "plot", "--in", str(bmax_dir / "r.csv"), "--kind", "hist-b", "--out", str(out))[0] == 1
    assert not out.exists()


def test_plot_empty_input(capsys, tmp_path):
    from ctxlab.records import write_records

    empty = tmp_path / "e.csv"
    write_records([], empty, master_seed=0)
    out = tmp_path / "p.svg"
    assert run(capsys, "plot", "--in", str(empty), "--kind", "hist-c", "--out", str(out))[0] == 1
    assert not out.exists()
