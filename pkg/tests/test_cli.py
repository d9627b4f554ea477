import io
import json
import math
import subprocess
import sys

import pytest

from monodimer.cli import run


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_coeffs_d1():
    code, text = call("coeffs", "--d", "1", "--max-order", "6")
    assert code == 0
    assert json.loads(text)["a_values"] == ["1/8", "1/48", "1/192", "1/640", "1/1920"]


def test_certify_auto_eps():
    code, text = call("certify", "--B", "10.8731", "--auto-eps")
    assert code == 0
    data = json.loads(text)
    assert data["epsilon"] == pytest.approx(0.1096117, abs=1e-7)
    assert data["p0"] == pytest.approx(1.4487e-5, rel=1e-4)
    assert data["binding_k"] == 2
    assert data["map_margin"] > 0 and data["contraction_ratio"] < 1


def test_eval_compare_oracle():
    code, text = call("eval", "--d", "1", "--p", "0.2", "--compare-oracle")
    assert code == 0
    row = json.loads(text)["rows"][0]
    assert row["exact"] == pytest.approx(0.3139488862587, abs=1e-12)
    assert row["diff"] <= row["tail_bound"] and row["within_bound"]


def test_kernel_file_round_trip(tmp_path):
    path = tmp_path / "kernels.json"
    assert call("kernels", "solve", "--output", str(path))[0] == 0
    builtin = call("coeffs", "--d", "3")
    from_file = call("coeffs", "--d", "3", "--kernel-file", str(path))
    assert builtin == from_file


def test_deterministic_output():
    assert call("oracle", "--extents", "6", "--p", "0.3") == call("oracle", "--extents", "6", "--p", "0.3")


def test_table_format_renders_both_forms():
    code, text = call("coeffs", "--d", "1", "--max-order", "6", "--format", "table")
    assert code == 0
    line = next(ln for ln in text.splitlines() if ln.strip().startswith("4 "))
    assert "1/192" in line and "0.00520833333333333" in line


def test_kernels_check():
    code, text = call("kernels", "check")
    data = json.loads(text)
    assert code == 0 and data["support_violations"] == [] and data["bound_ok"]


def test_understated_bound_exit_2():
    assert call("certify", "--B", "0.01")[0] == 2


@pytest.mark.parametrize("argv", [
    ("eval", "--d", "2", "--p", "0.1", "--compare-oracle"),
    ("eval", "--p", "1.5"),
    ("coeffs", "--kernel-file", "/nonexistent/kernels.json"),
    ("oracle", "--extents", "2", "--p", "0.1"),
])
def test_domain_errors_exit_1(argv):
    assert call(*argv)[0] == 1


@pytest.mark.parametrize("argv", [
    ("bogus",),
    ("coeffs", "--max-order", "1"),
    ("eval",),
    ("certify", "--tol", "-1"),
    ("coeffs", "--d", "0"),
])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as exc:
        code = run(list(argv), stdout=io.StringIO())
        raise SystemExit(code)
    assert exc.value.code == 64


def test_output_file(tmp_path):
    target = tmp_path / "out.json"
    assert call("coeffs", "--output", str(target))[0] == 0
    assert json.loads(target.read_text())["d"] == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "monodimer", "certify", "--auto-eps", "--d", "1"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["epsilon"] == pytest.approx((5 - math.sqrt(17)) / 8)
