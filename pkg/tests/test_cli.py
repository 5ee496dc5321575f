import json

import pytest
from click.testing import CliRunner

from holoqec.cli import cli
from holoqec.lego import build_code, code_to_dict, inflate, load_code


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("HOLOQEC_OUTPUT_DIR", raising=False)
    runner = CliRunner()

    def _run(*args, **kw):
        return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False, **kw)

    return _run


def error_of(result):
    doc = json.loads(result.stderr.strip().splitlines()[-1])
    assert set(doc) == {"error", "message"}
    return doc


def test_build_writes_code_file(run, tmp_path):
    res = run("build", "happy", 0)
    assert res.exit_code == 0, res.output
    summary = json.loads(res.stdout)
    assert (summary["n"], summary["k"]) == (5, 1)
    loaded = load_code(tmp_path / "happy_L0.json")
    assert code_to_dict(loaded) == code_to_dict(build_code(inflate("happy", 0)))


def test_build_steane(run):
    res = run("build", "steane", 0, "--out", "s.json")
    assert json.loads(res.stdout)["n"] == 7


def test_build_rejects_unknown_seed(run):
    res = run("build", "nope", 0)
    assert res.exit_code == 2
    assert error_of(res)["error"] == "BadParameter"


def test_output_dir_from_environment(run, tmp_path):
    out = tmp_path / "outdir"
    res = run("build", "scf", 1, env={"HOLOQEC_OUTPUT_DIR": str(out)})
    assert res.exit_code == 0
    assert (out / "scf_L1.json").exists()


def test_verify(run, tmp_path):
    run("build", "613", 1, "--out", "c.json")
    assert json.loads(run("verify", "c.json").stdout)["ok"] is True
    doc = json.loads((tmp_path / "c.json").read_text())
    doc["code"]["stabilizers"][0], doc["code"]["stabilizers"][1] = doc["code"]["destabilizers"][0], doc["code"]["stabilizers"][1]
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    res = run("verify", "bad.json")
    assert res.exit_code != 0
    error_of(res)


def test_hashing_eta_sweep(run):
    res = run("hashing", "--eta-sweep", "Z")
    lines = res.stdout.strip().splitlines()
    assert lines[0] == "eta,r_x,r_y,r_z,p_star"
    assert len(lines) == 17
    assert lines[8].startswith("0.5,") and abs(float(lines[8].split(",")[-1]) - 0.18929) < 1e-4
    assert lines[-1] == "inf,0,0,1,0.5"


def test_hashing_bound_single_bias(run):
    res = run("hashing-bound", "--bias", "1/2,0,1/2")
    value = float(res.stdout.strip().splitlines()[1].split(",")[-1])
    assert abs(value - 0.22709) < 1e-4
    res = run("hashing-bound")
    assert res.exit_code == 2
    assert error_of(res)["error"] == "UsageError"


def test_invalid_bias_is_reported(run):
    res = run("hashing-bound", "--bias", "1,2")
    assert res.exit_code == 2
    assert "bias" in error_of(res)["message"]


def test_decode(run):
    res = run("decode", "--code", "happy_L1", "--syndrome", "0" * 24, "--p", 0.1)
    doc = json.loads(res.stdout)
    assert doc["chosen_class"] == "I"
    assert set(doc["weights"]) == set("IXYZ")
    assert run("decode", "--code", "happy_L1", "--syndrome", "01", "--p", 0.1).exit_code == 1


def test_missing_code_file(run):
    res = run("decode", "--code", "missing.json", "--syndrome", "0", "--p", 0.1)
    assert res.exit_code == 2
    error_of(res)


def test_seed_is_mandatory(run):
    res = run("lerate", "--code", "happy_L0", "--p", 0.1)
    assert res.exit_code == 2
    assert "--seed" in error_of(res)["message"]


def test_unknown_flag_is_an_error(run):
    res = run("lerate", "--code", "happy_L0", "--p", 0.1, "--seed", 1, "--bogus")
    assert res.exit_code == 2
    error_of(res)


def test_lerate_is_thread_independent(run, tmp_path):
    args = ["lerate", "--code", "happy_L1", "--p", 0.15, "--shots", 2500, "--seed", 4]
    run(*args, "--threads", 1, "--out", "a.json")
    run(*args, "--threads", 2, "--out", "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["ci95"][0] <= doc["rate"] <= doc["ci95"][1]


def test_threshold_command(run, tmp_path):
    res = run("threshold", "--code", "happy_L0", "happy_L1", "--bias", "1/3,1/3,1/3", "--grid", "0.1:0.3:0.1",
              "--shots", 100, "--seed", 1, "--threads", 1, "--results", "r.jsonl")
    assert res.exit_code == 0, res.output
    lines = res.stdout.strip().splitlines()
    assert lines[0] == "code,layers_used,r_x,r_y,r_z,eta,axis,p_th,sigma,hashing_p_star"
    assert len(lines) == 2 and lines[1].startswith("happy,0-1,")
    assert len((tmp_path / "r.jsonl").read_text().splitlines()) == 6


def test_threshold_rejects_mixed_families(run):
    res = run("threshold", "--code", "happy_L0", "--code", "scf_L1", "--seed", 1)
    assert res.exit_code == 2


@pytest.mark.parametrize("extras, rows", [("--no-extras", 3), ("--extras", 7)])
def test_sweep_ternary_rows(run, extras, rows):
    res = run("sweep-ternary", "--family", "happy", "--layers", "0,1", "--resolution", 1, extras,
              "--grid-points", 3, "--shots", 30, "--seed", 2, "--threads", 1)
    assert res.exit_code == 0, res.output
    assert len(res.stdout.strip().splitlines()) == 1 + rows


def test_sweep_eta_rows(run):
    res = run("sweep-eta", "--family", "happy", "--layers", "0,1", "--axis", "x", "--etas", "0,1/2,inf",
              "--grid-points", 3, "--shots", 30, "--seed", 2, "--threads", 1)
    lines = res.stdout.strip().splitlines()
    assert len(lines) == 4
    assert [ln.split(",")[5] for ln in lines[1:]] == ["0", "0.5", "inf"]
    assert {ln.split(",")[6] for ln in lines[1:]} == {"X"}


def test_config_file_supplies_defaults(run, tmp_path):
    (tmp_path / "cfg.yaml").write_text(
        "lerate:\n  code: happy_L0\n  p: 0.2\n  shots: 300\n  seed: 8\n  threads: 1\n"
    )
    res = run("--config", "cfg.yaml", "lerate")
    assert res.exit_code == 0, res.output
    doc = json.loads(res.stdout)
    assert (doc["shots"], doc["seed"], doc["p"]) == (300, 8, 0.2)
    res = run("--config", "cfg.yaml", "lerate", "--shots", 100)
    assert json.loads(res.stdout)["shots"] == 100


def test_help_documents_flags(run):
    res = run("threshold", "--help")
    for flag in ("--code", "--bias", "--grid", "--shots", "--seed", "--threads", "--results", "--out"):
        assert flag in res.stdout
