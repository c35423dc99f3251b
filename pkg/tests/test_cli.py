"""Command line runs and their output files"""
import csv
import json
from pathlib import Path

import pytest

import quantize_cli

from tests.conftest import SYSTEM_FILES


def _run(out: Path, *args: str) -> int:
    return quantize_cli.run([*args, "--out", str(out)])


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def test_demo_is_reproducible(tmp_path: Path) -> None:
    """Test two demo runs with one seed write identical JSON and CSV files"""
    first, second = tmp_path / "a", tmp_path / "b"
    assert _run(first, "demo315", "--seed", "0") == 0
    assert _run(second, "demo315", "--seed", "0") == 0

    produced = sorted(p.name for p in first.iterdir() if p.suffix in (".json", ".csv"))
    assert produced == ["demo315.json", "manifest.json"]
    for name in produced:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert (first / "run.log").exists()


def test_demo_comparison(tmp_path: Path) -> None:
    """Test every row of the demo comparison matches"""
    assert _run(tmp_path, "demo315") == 0
    data = _read_json(tmp_path / "demo315.json")
    assert data['seed'] == 0
    rows = {row['quantity']: row for row in data['comparison']}
    assert rows['phi_1']['computed'] == 12
    assert rows['delta']['computed'] == "5/192"
    assert rows['tau0']['computed'] == "(1,2)"
    assert all(row['match'] is not False for row in data['comparison'])
    assert data['bounds']['separation'] == "pass"
    assert data['reference'] is True


def test_demo_on_other_system(tmp_path: Path) -> None:
    """Test reference values are skipped when the demo runs on another system"""
    assert _run(tmp_path, "demo315", "--system", "nonuniform-b") == 0
    data = _read_json(tmp_path / "demo315.json")
    assert data['reference'] is False
    rows = {row['quantity']: row for row in data['comparison']}
    for quantity in ("s_r", "phi_1", "tau0", "delta"):
        assert rows[quantity]['expected'] is None
        assert rows[quantity]['match'] is None
    assert rows['IOSC']['match'] is True


def test_validate_failure(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    """Test a failing system exits 1 with an A1 witness"""
    assert _run(tmp_path, "validate", "--system", str(SYSTEM_FILES['bad'])) == 1
    error = _read_json(tmp_path / "error.json")
    assert error['error'] == "invalid_system"
    assert "A1" in error['message']
    assert error['command'] == "validate"
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1]) == error
    report = _read_json(tmp_path / "iosc_report.json")
    assert report['passed'] is False


def test_validate_success(tmp_path: Path) -> None:
    """Test a passing system writes its report and manifest"""
    assert _run(tmp_path, "validate", "--system", str(SYSTEM_FILES['ex315'])) == 0
    assert _read_json(tmp_path / "iosc_report.json")['passed'] is True
    manifest = _read_json(tmp_path / "manifest.json")
    assert manifest['outputs'] == ["iosc_report.json"]
    assert manifest['system']['open_set'] == {'lo': "0", 'hi': "1"}


def test_dims_near_crossover(tmp_path: Path) -> None:
    """Test s_r and t_r nearly agree at r = 0.5849625"""
    assert _run(tmp_path, "dims", "--system", "ex315", "--r", "0.5849625") == 0
    data = _read_json(tmp_path / "dims.json")
    assert abs(data['s_r'] - data['t_r']) < 1e-4


def test_dims_scan(tmp_path: Path) -> None:
    """Test the r_0 scan is written next to the dimensions"""
    assert _run(tmp_path, "dims", "--system", "ex315", "--scan-r0") == 0
    data = _read_json(tmp_path / "dims.json")
    assert data['r0'] == pytest.approx(0.5849625007, abs=1e-6)
    assert data['branch'] == "outer"


def test_partition_outputs(tmp_path: Path) -> None:
    """Test bundles and the summary CSV for a k range"""
    assert _run(tmp_path, "partition", "--system", "ex315", "--k", "1", "--k-max", "3") == 0
    assert _read_json(tmp_path / "bundle_k1.json")['counts']['phi'] == 12
    with open(tmp_path / "partition.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row['k'] for row in rows] == ["1", "2", "3"]
    assert rows[0]['phi_kr'] == "12"


def test_bounds_outputs(tmp_path: Path) -> None:
    """Test the codebook CSV and bounds report"""
    assert _run(tmp_path, "bounds", "--system", "ex315", "--k", "1") == 0
    lines = (tmp_path / "codebook_k1.csv").read_text().splitlines()
    assert lines[0] == "a"
    assert len(lines) == 13
    report = _read_json(tmp_path / "bounds.json")['reports'][0]
    assert report['phi'] == 12
    assert report['energy_band'] == "pass"


def test_estimate_needs_seed(tmp_path: Path) -> None:
    """Test estimate refuses to run without --seed"""
    assert _run(tmp_path, "estimate", "--system", "ex315") == 1
    error = _read_json(tmp_path / "error.json")
    assert error['error'] == "invalid_argument"
    assert "--seed" in error['message']


def test_estimate_outputs(tmp_path: Path) -> None:
    """Test the estimate CSV columns"""
    assert _run(tmp_path, "estimate", "--system", "ex315", "--seed", "1", "--samples", "5000",
                "--restarts", "1", "--n-grid", "4:16:2") == 0
    with open(tmp_path / "estimate.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row['n'] for row in rows] == ["4", "8", "16"]
    assert rows[0]['upper_bound_at_matching_phi'] == ""
    assert float(rows[2]['upper_bound_at_matching_phi']) > 0


def test_missing_system_file(tmp_path: Path) -> None:
    """Test a missing file gives the file_not_found code"""
    assert _run(tmp_path, "dims", "--system", str(tmp_path / "nope.json")) == 1
    assert _read_json(tmp_path / "error.json")['error'] == "file_not_found"


def test_missing_system_argument(tmp_path: Path) -> None:
    """Test commands other than the demo need --system"""
    assert _run(tmp_path, "partition") == 1
    assert "--system" in _read_json(tmp_path / "error.json")['message']


def test_bad_exponent() -> None:
    """Test argparse rejects malformed exponents"""
    with pytest.raises(SystemExit):
        quantize_cli.parse_arguments(["dims", "--system", "ex315", "--r", "two"])
    assert quantize_cli.parse_exponent("3/2") == 1.5
    assert quantize_cli.parse_grid("16:256:4") == [16, 64, 256]
