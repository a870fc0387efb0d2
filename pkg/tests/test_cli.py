import json

import pytest

from cli.app import main
from cli.config import build_config, explicit_flags, float_list, int_list
from cli.verify import GROUPS, verify_bounds, verify_charnums, verify_numlab, verify_poisson
from shared.errors import UsageError

POISSON = ["poisson", "check", "--N", "4", "--suite", "casimir,hamiltonian"]


def _parsed(**overrides):
    parsed = {
        "command": "poisson",
        "subcommand": "check",
        "config": None,
        "seed": 1,
        "cache_dir": "default-cache",
        "workers": None,
        "format": "tsv",
        "out": None,
        "manifest": None,
        "log_level": "INFO",
        "N": 5,
        "trials": 50,
    }
    parsed.update(overrides)
    return parsed


def test_config_precedence():
    """flag > file > environment > default"""
    config = build_config(
        _parsed(),
        explicit={"seed"},
        file_values={"seed": "7", "trials": "9", "cache_dir": "from-file"},
        env={"TODAKDV_CACHE_DIR": "from-env", "TODAKDV_WORKERS": "3"},
    )
    assert config.seed == 1
    assert config.option("trials") == 9
    assert config.cache_dir == "from-file"
    assert config.workers == 3
    assert config.option("N") == 5
    assert config.name == "poisson check"
    assert "out" not in config.echo()


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(UsageError):
        build_config(_parsed(), set(), {"order": "3"}, {})
    with pytest.raises(UsageError):
        build_config(_parsed(), set(), {"trials": "many"}, {})
    with pytest.raises(UsageError):
        build_config(_parsed(workers=0), {"workers"}, {}, {})


def test_explicit_flags():
    argv = ["--cache", "x", "--max-n=3", "--format", "json", "--", "--seed"]
    assert explicit_flags(argv, {"cache": "cache_dir"}) == {"cache_dir", "max_n", "format"}


def test_list_options():
    assert float_list("1/32, 0.5") == [1 / 32, 0.5]
    assert int_list("1,2,3") == [1, 2, 3]
    with pytest.raises(UsageError):
        int_list("1,x")
    with pytest.raises(UsageError):
        float_list("1/0")


def test_poisson_check_writes_tsv(tmp_path):
    out = tmp_path / "poisson.tsv"
    code = main(POISSON + ["--cache-dir", str(tmp_path), "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "suite\tbracket\tcase\tholds\texpected\tstatus"
    assert all(line.endswith("pass") for line in lines[1:])
    assert len(list((tmp_path / "manifests").glob("*.json"))) == 1


def test_gen_toda_emits_json(tmp_path, capsys):
    code = main(["gen", "toda", "--k", "1,2", "--cache-dir", str(tmp_path)])
    assert code == 0
    document = json.loads(capsys.readouterr().out)
    assert [entry["k"] for entry in document["toda"]] == [1, 2]


@pytest.mark.parametrize("argv", [
    ["gen", "kdv", "--bogus"],
    ["nope"],
    ["gen", "kdv", "--n", "-1"],
    ["poisson", "check", "--bracket", "p3"],
    ["deform", "run", "--slow-sign", "2"],
    ["deform", "run", "--config", "missing.env"],
])
def test_usage_errors_exit_64(tmp_path, argv):
    assert main(argv + ["--cache-dir", str(tmp_path)]) == 64


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "run.env"
    out = tmp_path / "kdv.json"
    config.write_text(f"n=1\nout={out}\n")
    code = main(["gen", "kdv", "--config", str(config), "--cache-dir", str(tmp_path)])
    assert code == 0
    document = json.loads(out.read_text())
    assert [entry["n"] for entry in document["kdv"]] == [1]


def test_deform_bounds_table(tmp_path):
    out = tmp_path / "bounds.tsv"
    argv = ["deform", "bounds", "--max-n", "2", "--reconcile", "false"]
    assert main(argv + ["--cache-dir", str(tmp_path), "--out", str(out)]) == 0
    assert "2\t1/2\t0.500" in out.read_text().splitlines()


def test_deform_residual_is_zero(tmp_path):
    out = tmp_path / "residual.tsv"
    argv = ["deform", "residual", "--k", "slow,2", "--n", "3"]
    assert main(argv + ["--cache-dir", str(tmp_path), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert [row.split("\t")[:3] for row in rows] == [["slow", "3", "1"], ["T2", "3", "1"]]


def test_reports_do_not_depend_on_worker_count(tmp_path):
    outputs = []
    for workers in ("1", "3"):
        out = tmp_path / f"report-{workers}.tsv"
        assert main(POISSON + ["--workers", workers, "--cache-dir", str(tmp_path), "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_manifest_hash_is_reproducible(tmp_path):
    out = tmp_path / "report.tsv"
    hashes = []
    for run in ("a", "b"):
        manifest = tmp_path / f"{run}.json"
        argv = POISSON + ["--cache-dir", str(tmp_path), "--out", str(out), "--manifest", str(manifest)]
        assert main(argv) == 0
        document = json.loads(manifest.read_text())
        assert document["exit_code"] == 0
        assert document["artifacts"][0]["role"] == "produced"
        hashes.append(document["content_hash"])
    assert hashes[0] == hashes[1]


def test_tampered_cache_is_recomputed(tmp_path):
    first = tmp_path / "first.tsv"
    second = tmp_path / "second.tsv"
    argv = ["deform", "run", "--order", "3", "--cache-dir", str(tmp_path)]
    assert main(argv + ["--out", str(first)]) == 0
    (cached,) = tmp_path.glob("deform-*.json")
    document = json.loads(cached.read_text())
    document["payload"]["order"] = 9
    cached.write_text(json.dumps(document))
    assert main(argv + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_verify_fast(tmp_path):
    out = tmp_path / "verify.tsv"
    assert main(["verify", "all", "--fast", "--cache-dir", str(tmp_path), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert {row.split("\t")[0] for row in rows} == set(GROUPS)
    assert {"charnums", "bounds", "numlab", "poisson"} <= set(GROUPS)
    assert all(row.split("\t")[2] == "1" for row in rows)


def test_verify_single_group(tmp_path):
    out = tmp_path / "charnums.json"
    argv = ["verify", "charnums", "--fast", "--cache-dir", str(tmp_path), "--out", str(out), "--format", "json"]
    assert main(argv) == 0
    checks = json.loads(out.read_text())["checks"]
    assert [c["check"] for c in checks] == ["pivots_mod_eps5", "leading_terms_span_kdv"]
    assert checks[1]["detail"] == "kdv_scale 12/1"


def test_verify_groups_hold_at_small_size(state5, state6):
    assert all(r.holds for r in verify_charnums(state5, fast=True))
    bounds = verify_bounds(state6, seed=1)
    assert [r.check for r in bounds] == ["K2", "K3", "K4", "K5", "reconciled"]
    assert all(r.holds for r in bounds)
    numlab = verify_numlab(state5, fast=True)
    assert all(r.holds for r in numlab), [r for r in numlab if not r.holds]
    assert all(r.holds for r in verify_poisson(fast=True, seed=1))
