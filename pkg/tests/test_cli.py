import json
import math

import pytest

from hglab import cli, domains
from hglab.errors import ConfigInvalid
from hglab.scenarios import SCENARIOS


def write_config(tmp_path, scenarios, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"output_dir": str(tmp_path / "out"), "scenarios": scenarios}))
    return p


def test_list_contains_all_builtins(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("klein", "simplex", "example51", "coxeter334", "graphp", "counterexample", "rescale36"):
        assert name in out
    assert set(SCENARIOS) == {"klein", "simplex", "example51", "coxeter334", "graphp", "counterexample",
                              "rescale36"}


def test_unknown_scenario_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, [{"id": "nope", "seed": 0}])
    with pytest.raises(ConfigInvalid):
        cli.load_config(cfg)
    assert cli.main(["run", str(cfg)]) == 1
    assert "ConfigInvalid" in capsys.readouterr().err


def test_unknown_keys_rejected(tmp_path):
    cfg = write_config(tmp_path, [{"id": "klein", "seed": 0, "colour": "blue"}])
    with pytest.raises(ConfigInvalid):
        cli.load_config(cfg)


def test_seed_is_mandatory(tmp_path):
    cfg = write_config(tmp_path, [{"id": "klein"}])
    with pytest.raises(ConfigInvalid):
        cli.load_config(cfg)


def test_unknown_tolerance_rejected(tmp_path):
    cfg = write_config(tmp_path, [{"id": "graphp", "seed": 0, "tolerances": {"nope": 1.0}}])
    assert cli.main(["run", str(cfg)]) == 1


def test_empty_diagnostics_gives_empty_manifest(tmp_path):
    cfg = write_config(tmp_path, [{"id": "simplex", "seed": 0, "diagnostics": []}])
    manifest = cli.run(cfg)
    entry = manifest["scenarios"][0]
    assert entry["outputs"] == {} and entry["checks"] == []
    assert (tmp_path / "out" / "manifest.json").exists()
    assert not (tmp_path / "out" / "simplex").exists()


def test_klein_manifest_reports_exponent_two(tmp_path):
    cfg = write_config(tmp_path, [{"id": "klein", "seed": 1, "diagnostics": ["regularity"]}])
    manifest = cli.run(cfg)
    paths = manifest["scenarios"][0]["outputs"]["regularity"]
    assert paths
    report = json.loads(open(paths[0]).read())
    assert abs(report["alpha_spectral"] - 2) <= 1e-9
    assert abs(report["beta_spectral"] - 2) <= 1e-9


def test_counterexample_manifest_has_zero_witness(tmp_path):
    cfg = write_config(tmp_path, [{"id": "counterexample", "seed": 0, "diagnostics": ["strong_uniform"]}])
    manifest = cli.run(cfg)
    checks = {c["name"]: c for c in manifest["scenarios"][0]["checks"]}
    assert checks["strong_uniform_min_zero"]["passed"]
    assert checks["strong_uniform_min_zero"]["value"] == 0.0


def test_manifest_outputs_exist_and_nonempty(tmp_path):
    cfg = write_config(tmp_path, [{"id": "example51", "seed": 0}])
    manifest = cli.run(cfg)
    for paths in manifest["scenarios"][0]["outputs"].values():
        for p in paths:
            with open(p) as fh:
                assert fh.read().strip()


def test_assert_mode_exit_codes(tmp_path):
    ok = write_config(tmp_path, [{"id": "graphp", "seed": 0}], "ok.json")
    assert cli.main(["run", str(ok), "--assert"]) == 0
    bad = write_config(tmp_path, [{"id": "graphp", "seed": 0, "tolerances": {"boundary": 1e-9}}], "bad.json")
    assert cli.main(["run", str(bad)]) == 0
    assert cli.main(["run", str(bad), "--assert"]) == 2


def test_dist_command(tmp_path, capsys):
    p = tmp_path / "disk.json"
    p.write_text(json.dumps(domains.domain_to_json(domains.build_klein_ball(3))))
    assert cli.main(["dist", str(p), "0,0,1", "[0.5, 0, 1]"]) == 0
    val = float(capsys.readouterr().out)
    assert val == pytest.approx(0.5 * math.log(3.0), abs=1e-12)


def test_cartan_command_matrix_and_product(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps([[2.0, 0, 0], [0, 1.0, 0], [0, 0, 0.5]]))
    assert cli.main(["cartan", str(m)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mu_1_d"] == pytest.approx(2 * math.log(2), abs=1e-12)
    prod = tmp_path / "p.json"
    prod.write_text(json.dumps({"product": [[[2.0, 0, 0], [0, 1.0, 0], [0, 0, 0.5]]], "power": 60}))
    assert cli.main(["cartan", str(prod)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mu_1_d"] == pytest.approx(120 * math.log(2), abs=1e-6)


def test_bad_point_is_an_error(tmp_path):
    p = tmp_path / "disk.json"
    p.write_text(json.dumps(domains.domain_to_json(domains.build_klein_ball(3))))
    assert cli.main(["dist", str(p), "a,b", "0,0,1"]) == 1
