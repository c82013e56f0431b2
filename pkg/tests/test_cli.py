import csv
import json

import pytest

from smolkin import cli


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_flag_beats_file_beats_default(tmp_path):
    conf = tmp_path / "m.kv"
    conf.write_text("sigma = 1.85  # from file\nzeros = 4\n")
    code, out = _run(tmp_path, "mellin", "--config", str(conf), "--zeros", "3")
    assert code == 0
    man = _manifest(out)
    assert man["parameters"]["sigma"] == 1.85 and man["parameters"]["zeros"] == 3
    assert man["parameter_sources"] == {**man["parameter_sources"], "sigma": "file", "zeros": "flag"}
    assert man["parameter_sources"]["grid"] == "default"


def test_zero_table_has_three_families(tmp_path):
    code, out = _run(tmp_path, "mellin", "--zeros", "10")
    assert code == 0
    with open(out / "zeros.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 33
    assert {r["family"] for r in rows} == {"0", "1", "2"}


@pytest.mark.parametrize("body, line", [("sigma = 1.8\nbogus = 2\n", 2),
                                         ("sigma 1.8\n", 1),
                                         ("# note\nsigma = 1.8\nsigma = 1.9\n", 3)])
def test_bad_config_names_line(tmp_path, capsys, body, line):
    conf = tmp_path / "bad.kv"
    conf.write_text(body)
    code, _ = _run(tmp_path, "mellin", "--config", str(conf))
    assert code == cli.EXIT_CONFIG
    assert f"line {line}" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["profile", "--sigma", "1.5"],
                                  ["profile", "--sigma", "abc"],
                                  ["simulate", "--n", "0"],
                                  ["simulate", "--law", "nope"]])
def test_domain_errors_exit_2(tmp_path, args):
    code, _ = _run(tmp_path, *args)
    assert code == cli.EXIT_CONFIG


def test_manifest_rerun_is_byte_identical(tmp_path):
    code, first = _run(tmp_path, "simulate", "--n", "300", "--t-checkpoints", "1,10",
                       "--seed", "17", "--small-jump-fraction", "0.01", name="a")
    assert code == 0
    code, second = _run(tmp_path, "simulate", "--config", str(first / "manifest.json"), name="b")
    assert code == 0
    m1, m2 = _manifest(first), _manifest(second)
    assert m1["parameters"] == m2["parameters"]
    assert m1["outputs"] == m2["outputs"]
    for fname in m1["outputs"]:
        assert (first / fname).read_bytes() == (second / fname).read_bytes()


def test_manifest_for_other_command_rejected(tmp_path):
    _, first = _run(tmp_path, "mellin", "--zeros", "2", name="a")
    code, _ = _run(tmp_path, "profile", "--config", str(first / "manifest.json"), name="b")
    assert code == cli.EXIT_CONFIG


def test_json_format(tmp_path):
    code, out = _run(tmp_path, "profile", "--sigma", "1.9", "--format", "json")
    assert code == 0
    data = json.loads((out / "profile.json").read_text())
    assert data
    assert _manifest(out)["format"] == "json"


def test_threads_recorded(tmp_path, monkeypatch):
    monkeypatch.setenv("SMOLKIN_THREADS", "3")
    code, out = _run(tmp_path, "mellin", "--zeros", "2")
    assert code == 0 and _manifest(out)["threads"] == 3
    code, _ = _run(tmp_path, "mellin", "--threads", "0", name="z")
    assert code == cli.EXIT_CONFIG


def test_validate_identities_suite(tmp_path):
    code, out = _run(tmp_path, "validate", "--suite", "identities")
    assert code == 0
    with open(out / "validate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
