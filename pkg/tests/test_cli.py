import csv
import hashlib
import json
import os

import pytest

from pblab.cli import main


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _manifest(out):
    with open(os.path.join(out, "manifest.json")) as fh:
        return json.load(fh)


def _rerun_and_compare(out, out2, names):
    code = main(["rerun", os.path.join(out, "manifest.json"), f"--out={out2}"])
    assert code == 0
    for name in names:
        assert _read(os.path.join(out, name)) == _read(os.path.join(out2, name)), name


def test_sample_writes_expected_table(tmp_path):
    out = str(tmp_path / "a")
    assert main(["sample", "--M=3", "--samples=50", "--seed=4", f"--out={out}"]) == 0
    with open(os.path.join(out, "samples.csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0].startswith("# config ")
    assert rows[1] == ["x1", "x2", "x3", "log_weight"]
    assert len(rows) == 52
    vals = [float(v) for v in rows[2][:3]]
    assert vals == sorted(vals)


def test_manifest_records_run(tmp_path):
    out = str(tmp_path / "a")
    assert main(["sample", "--M=3", "--samples=50", "--seed=4", f"--out={out}"]) == 0
    m = _manifest(out)
    for key in ("command", "argv", "resolved_config", "config_sha256", "seed",
                "threads", "versions", "wall_time_s", "artifacts"):
        assert key in m, key
    assert m["command"] == "sample"
    assert m["resolved_config"]["M"] == 3
    assert m["seed"] == 4
    digest = hashlib.sha256(_read(os.path.join(out, "samples.csv"))).hexdigest()
    assert m["artifacts"]["samples.csv"] == digest


def test_artifacts_carry_the_config_hash(tmp_path):
    # csv artifacts carry it as a leading comment, json ones as a key,
    # and both must agree with the manifest
    out = str(tmp_path / "a")
    assert main(["bethe-solve", "--L=1", f"--out={out}"]) == 0
    sha = _manifest(out)["config_sha256"]
    with open(os.path.join(out, "bethe.csv")) as fh:
        assert fh.readline() == f"# config {sha}\n"
    with open(os.path.join(out, "bethe_summary.json")) as fh:
        assert json.load(fh)["config_sha256"] == sha


def test_rerun_is_bit_identical_for_sampling(tmp_path):
    out, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["sample", "--M=4", "--samples=200", "--seed=9", f"--out={out}"]) == 0
    _rerun_and_compare(out, out2, ["samples.csv"])


def test_rerun_survives_values_that_start_with_a_dash(tmp_path):
    # "-1..2" would look like a flag if re-emitted as a separate token
    out, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    code = main(["virasoro-check", "--M=2", "--beta=2", "--orders=-1..2",
                 "--samples=2000", f"--out={out}"])
    assert code == 0
    _rerun_and_compare(out, out2, ["virasoro.csv"])


def test_unknown_command_exits_2(capsys):
    assert main(["no-such-command"]) == 2


def test_bad_value_exits_2(tmp_path, capsys):
    out = str(tmp_path / "a")
    assert main(["poles-run", "--kappa=0", f"--out={out}"]) == 2
    assert "kappa" in capsys.readouterr().err


def test_tolerance_failure_exits_3(tmp_path, capsys):
    out = str(tmp_path / "a")
    assert main(["poles-run", "--kappa=1", "--tol=1e-20", f"--out={out}"]) == 3
    assert "exceeds" in capsys.readouterr().err


def test_help_exits_0():
    assert main(["--help"]) == 0
    assert main([]) == 2


def test_config_file_layering(tmp_path, capsys):
    cfg = tmp_path / "lab.ini"
    cfg.write_text("[run]\nseed = 11\n\n[sample]\nM = 2\nsamples = 30\n")
    out = str(tmp_path / "a")
    assert main(["sample", f"--config={cfg}", f"--out={out}"]) == 0
    m = _manifest(out)
    assert m["seed"] == 11
    assert m["resolved_config"]["M"] == 2
    assert m["resolved_config"]["samples"] == 30

    # a flag beats the section value
    out2 = str(tmp_path / "b")
    assert main(["sample", f"--config={cfg}", "--M=5", f"--out={out2}"]) == 0
    assert _manifest(out2)["resolved_config"]["M"] == 5


def test_config_rejects_unknown_file(tmp_path):
    out = str(tmp_path / "a")
    assert main(["sample", f"--config={tmp_path}/nope.ini", f"--out={out}"]) == 2


def test_artifact_float_format_round_trips(tmp_path):
    out = str(tmp_path / "a")
    assert main(["sample", "--M=2", "--samples=5", "--seed=0", f"--out={out}"]) == 0
    from pblab.ensemble import EnsembleSpec, sample_gbeta
    batch = sample_gbeta(EnsembleSpec(n_eigen=2, beta=2.0), 5, seed=0)
    with open(os.path.join(out, "samples.csv")) as fh:
        rows = list(csv.reader(fh))[2:]
    got = [[float(v) for v in r[:2]] for r in rows]
    assert got == batch.configs.tolist()
