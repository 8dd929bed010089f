import json
import subprocess
import sys

import pytest

from chromoshuffle.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eigs_k_json(capsys):
    code, out, _ = run(capsys, "eigs-k", "--n", "6", "--m", "2", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["eigenvalues"] == pytest.approx([1.0, -0.5, 1 / 6])
    assert rec["config"]["n"] == 6 and rec["version"]


def test_eigs_k_check(capsys):
    code, out, _ = run(capsys, "eigs-k", "--n", "5", "--m", "2", "--check", "--json")
    assert code == 0 and json.loads(out)["pass"]


def test_gap_two_state(capsys):
    code, out, _ = run(capsys, "gap", "--n", "2", "--L", "1", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["tau"] == pytest.approx(0.5) and rec["schema"] == "chromoshuffle.gap/1"


def test_gap_theta_and_block(capsys):
    code, out, _ = run(capsys, "gap", "--chain", "theta-reversal", "--n", "5", "--theta", "0.5",
                       "--json")
    assert code == 0 and json.loads(out)["gap"] > 0
    code, out, _ = run(capsys, "block-gap", "--N", "3", "--ell", "2", "--json")
    assert code == 0 and json.loads(out)["gap"] == pytest.approx(1.0)


def test_gap_trace(capsys, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, _, _ = run(capsys, "gap", "--n", "4", "--L", "2", "--trace", str(trace),
                     "--trace-horizon", "5")
    lines = [json.loads(l) for l in trace.read_text().splitlines()]
    assert code == 0 and lines
    assert all(a["time"] <= b["time"] for a, b in zip(lines, lines[1:]))


def test_mix(capsys):
    code, out, _ = run(capsys, "mix", "--n", "2", "--L", "1", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["T"] == pytest.approx(0.1534264, abs=1e-4)


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--witness", "chi", "--n", "6", "--L", "2", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["variance"] == pytest.approx(0.24)


@pytest.mark.parametrize("suite", ["lemma2_1", "prop2_2", "prop2_3"])
def test_verify_exact_suites(capsys, suite):
    code, out, _ = run(capsys, "verify", "--suite", suite, "--n-max", "6")
    assert code == 0, out


def test_verify_inequality_suite_summary(capsys, tmp_path):
    summary = tmp_path / "s.csv"
    code, _, _ = run(capsys, "verify", "--suite", "prop2_4", "--n-max", "6", "--trials", "20",
                     "--summary", str(summary))
    assert code == 0
    assert summary.read_text().startswith("suite,")


def test_usage_errors(capsys):
    assert run(capsys, "gap", "--n", "3", "--L", "7")[0] == 2
    assert run(capsys, "gap", "--n", "11", "--L", "1", "--method", "exact-dense")[0] == 2
    assert run(capsys, "eigs-k", "--n", "5", "--m", "3")[0] == 2
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys, "verify")[0] == 2


def test_scaling_csv_deterministic(capsys):
    args = ("scaling", "--ns", "4,5,6", "--no-seconds")
    a = run(capsys, *args)[1]
    b = run(capsys, *args)[1]
    assert a == b and a.splitlines()[0] == "n,L,theta,chain,method,tau,stderr,seed"


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"L": 2, "json": True}))
    code, out, _ = run(capsys, "gap", "--n", "4", "--config", str(cfg))
    assert code == 0 and json.loads(out)["L"] == 2
    # explicit flags win over the file
    code, out, _ = run(capsys, "gap", "--n", "4", "--L", "3", "--config", str(cfg))
    assert json.loads(out)["L"] == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "gap", "--n", "4", "--config", str(cfg))[0] == 2


def test_output_file(capsys, tmp_path):
    dest = tmp_path / "out.json"
    code, out, _ = run(capsys, "gap", "--n", "3", "--L", "1", "--json", "--output", str(dest))
    assert code == 0 and json.loads(dest.read_text())["tau"] == pytest.approx(1.0)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "chromoshuffle", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "chromoshuffle" in res.stdout
