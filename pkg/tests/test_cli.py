import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from isokernel.cli import main, read_kernel_csv
from isokernel.errors import DomainError

MODELS = Path(__file__).resolve().parents[1] / "models"
HEAT_S2 = str(MODELS / "heat_s2.json")


def _rows(text: str) -> list[dict]:
    return list(csv.DictReader(ln for ln in text.splitlines() if ln and not ln.startswith("#")))


def test_spectrum(capsys):
    assert main(["spectrum", HEAT_S2, "--n-max", "3"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert [r["chi_n"] for r in rows] == ["0", "2", "6", "12"]
    assert [r["d_n"] for r in rows] == ["1", "3", "5", "7"]
    assert float(rows[1]["coeff"]) == pytest.approx(3 * math.exp(-2.0))


def test_spectrum_single_degree(capsys):
    assert main(["spectrum", HEAT_S2, "--n-max", "0"]) == 0
    assert capsys.readouterr().out.splitlines() == ["n,d_n,kappa_n,chi_n,coeff", "0,1,0,0,1"]


def test_kernel(capsys):
    assert main(["kernel", HEAT_S2, "--t", "0.5", "--angles", "181"]) == 0
    out = capsys.readouterr().out
    rows = _rows(out)
    assert len(rows) == 181
    assert float(rows[0]["theta"]) == 0.0
    assert float(rows[0]["density"]) == pytest.approx(2.370337, abs=1e-5)
    footer = out.splitlines()[-1]
    assert footer.startswith("# mass=")
    assert "tail_bound=" in footer and "uncertified" not in footer


def test_kernel_to_file(tmp_path, capsys):
    target = tmp_path / "kernel.csv"
    assert main(["--out", str(target), "kernel", HEAT_S2, "--t", "0.5", "--volume-normalized"]) == 0
    assert capsys.readouterr().out == ""
    rows = _rows(target.read_text(encoding="utf-8"))
    assert float(rows[0]["density"]) == pytest.approx(2.370337 / (4 * math.pi), abs=1e-6)


def test_kernel_divergence_exit_code(capsys):
    assert main(["kernel", str(MODELS / "atom.json"), "--t", "0.5"]) == 4
    assert "verdict: NoSquareIntegrableDensity" in capsys.readouterr().err


def test_non_integrable_model(tmp_path):
    path = tmp_path / "power2.json"
    path.write_text(json.dumps({"dimension": 3,
                                "levy_measure": {"family": {"type": "power", "c": 1.0, "beta": 2.0}}}),
                    encoding="utf-8")
    assert main(["spectrum", str(path), "--n-max", "4"]) == 3


def test_bad_model_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dimension": 3, "levy_measure": {"atoms": [{"theta": 1.0, "mass": -1}]}}),
                    encoding="utf-8")
    assert main(["kernel", str(path), "--t", "0.5"]) == 2
    assert main(["kernel", str(tmp_path / "missing.json"), "--t", "0.5"]) == 2


def test_trace(capsys):
    assert main(["trace", HEAT_S2, "--t", "0.01", "10"]) == 0
    small, large = _rows(capsys.readouterr().out)
    assert float(small["diagonal"]) == pytest.approx(100.33, abs=0.01)
    assert float(small["asym"]) == pytest.approx(100.0)
    assert float(small["ratio"]) == pytest.approx(1.0033, abs=2e-4)
    assert float(large["trace"]) == pytest.approx(1.0, abs=1e-8)
    assert float(large["trace_K"]) == pytest.approx(1.0, abs=1e-8)


def test_trace_without_asymptotic(capsys):
    assert main(["trace", str(MODELS / "mixed.json"), "--t", "0.5"]) == 0
    (row,) = _rows(capsys.readouterr().out)
    assert math.isnan(float(row["asym"]))


def test_testbed(capsys):
    assert main(["testbed", "--m", "6", "--trials", "0"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pass"] and report["m"] == 6 and report["trials"] == 0


def test_testbed_bad_order():
    assert main(["testbed", "--m", "2", "--trials", "0"]) == 2


def _write(path: Path, s: np.ndarray, v: np.ndarray) -> str:
    lines = ["cos_theta,value"] + [f"{a!r},{b!r}" for a, b in zip(s.tolist(), v.tolist())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def test_funk_hecke_constant(tmp_path, capsys):
    s = np.linspace(-1.0, 1.0, 101)
    assert main(["funk-hecke", _write(tmp_path / "one.csv", s, np.ones_like(s)),
                 "--n-max", "4", "--dimension", "3"]) == 0
    lam = [float(r["lambda_n"]) for r in _rows(capsys.readouterr().out)]
    assert lam[0] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(lam[1:], 0.0, atol=1e-12)


def test_funk_hecke_linear(tmp_path, capsys):
    s = np.linspace(-1.0, 1.0, 101)
    assert main(["funk-hecke", _write(tmp_path / "s.csv", s, s), "--n-max", "2", "--dimension", "3"]) == 0
    lam = [float(r["lambda_n"]) for r in _rows(capsys.readouterr().out)]
    assert lam == pytest.approx([0.0, 1.0 / 3.0, 0.0], abs=1e-12)


def test_funk_hecke_round_trip(tmp_path, capsys):
    kernel_csv = tmp_path / "kernel.csv"
    assert main(["--out", str(kernel_csv), "kernel", HEAT_S2, "--t", "0.5"]) == 0
    assert main(["funk-hecke", str(kernel_csv), "--n-max", "4", "--dimension", "3"]) == 0
    lam = [float(r["lambda_n"]) for r in _rows(capsys.readouterr().out)]
    n = np.arange(5)
    assert np.allclose(lam, np.exp(-0.5 * n * (n + 1)), atol=1e-6)


def test_funk_hecke_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("cos_theta,value\n0.1,1\n0.2,oops\n", encoding="utf-8")
    assert main(["funk-hecke", str(bad), "--n-max", "2", "--dimension", "3"]) == 2
    short = tmp_path / "short.csv"
    short.write_text("x,y\n0.1,1\n", encoding="utf-8")
    with pytest.raises(DomainError, match="cos_theta"):
        read_kernel_csv(short)


def test_simulate_is_reproducible(tmp_path, capsys):
    runs = []
    for name in ("a", "b"):
        hist, summary = tmp_path / f"{name}.csv", tmp_path / f"{name}.json"
        code = main(["--out", str(hist), "simulate", HEAT_S2, "--t", "0.5", "--samples", "2000",
                     "--bins", "16", "--seed", "7", "--summary", str(summary)])
        assert code == 0
        runs.append((hist.read_text(encoding="utf-8"), json.loads(summary.read_text(encoding="utf-8"))))
    assert runs[0] == runs[1]
    hist_text, summary = runs[0]
    assert sum(int(r["count"]) for r in _rows(hist_text)) == 2000
    assert summary["seed"] == 7 and summary["samples"] == 2000 and summary["pass"]
    assert [m["n"] for m in summary["moments"]] == [1, 2, 3]


def test_simulate_needs_samples():
    assert main(["simulate", HEAT_S2, "--t", "0.5", "--samples", "10"]) == 2


def test_simulate_output_ignores_worker_count(tmp_path):
    outputs = []
    for workers in ("1", "2"):
        hist, summary = tmp_path / f"h{workers}.csv", tmp_path / f"s{workers}.json"
        assert main(["--out", str(hist), "simulate", HEAT_S2, "--t", "0.5", "--samples", "5000",
                     "--seed", "11", "--workers", workers, "--summary", str(summary)]) == 0
        outputs.append((hist.read_bytes(), summary.read_bytes()))
    assert outputs[0] == outputs[1]
    assert "workers" not in json.loads(outputs[0][1])
