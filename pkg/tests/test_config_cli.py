import json

import pytest

from fracstrich import cli, config
from fracstrich.errors import ConfigError

if config.sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_every_subcommand_has_a_round_tripping_default(capsys):
    for sub in config.SUBCOMMANDS:
        assert cli.main([sub, "--print-config"]) == 0
        text = capsys.readouterr().out
        assert config.resolve(sub, tomllib.loads(text)) == config.resolve(sub, {})


def test_schema_violations():
    with pytest.raises(ConfigError):
        config.resolve("vdc-scan", {"bogus": 1})
    with pytest.raises(ConfigError):
        config.resolve("vdc-scan", {"a_values": "2.0"})
    with pytest.raises(ConfigError):
        config.resolve("vdc-scan", {"a_values": []})
    with pytest.raises(ConfigError):
        config.resolve("bessel-check", {"samples": 64.0})
    with pytest.raises(ConfigError):
        config.resolve("bessel-check", {"subcommand": "vdc-scan"})
    cfg = config.resolve("bessel-check", {"r_min": 20})
    assert cfg["r_min"] == 20.0 and isinstance(cfg["r_min"], float)


@pytest.mark.parametrize("text", ["bogus = 1\n", "samples = 'many'\n", "samples = [\n"])
def test_bad_config_exits_2(tmp_path, text, capsys):
    code = cli.main(["bessel-check", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "ConfigError" in capsys.readouterr().err


def test_thread_cap_validation(tmp_path, monkeypatch):
    cfg = write(tmp_path, "samples = 16\n")
    assert cli.main(["bessel-check", "--config", cfg, "--threads", "0", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("FRACSTRICH_THREADS", "two")
    assert cli.main(["bessel-check", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_hypothesis_violation_exits_4(tmp_path):
    cfg = write(tmp_path, "a_values = [1.0]\nR_exponents = [4, 11]\n")
    assert cli.main(["vdc-scan", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


def test_resolution_error_exits_3(tmp_path):
    cfg = write(tmp_path, "a_values = [2.0]\ntimes = [100000.0]\n")
    assert cli.main(["propagate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_outputs_and_manifest_replay(tmp_path, capsys):
    cfg = write(tmp_path, 'subcommand = "bessel-check"\norders = [0.0, 1.0]\nsamples = 32\n')
    first, second = tmp_path / "one", tmp_path / "two"
    assert cli.main(["bessel-check", "--config", cfg, "--out", str(first)]) == 0
    out = capsys.readouterr().out
    assert "criterion 1: PASS" in out
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["config"]["samples"] == 32 and manifest["threads"] == 1
    summary = json.loads((first / "summary.json").read_text())
    assert summary["pass"] is True and summary["acceptance"]["1"]["pass"] is True
    assert cli.main(["bessel-check", "--config", str(first / "manifest.json"), "--out", str(second)]) == 0
    assert (first / "results.csv").read_bytes() == (second / "results.csv").read_bytes()
    assert (first / "manifest.json").read_bytes() == (second / "manifest.json").read_bytes()


def test_manifest_for_other_subcommand_is_rejected(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"subcommand": "vdc-scan", "version": "0", "config": {}}))
    with pytest.raises(ConfigError):
        config.load(path, "bessel-check")


def test_invalid_parameter_values_exit_2(tmp_path):
    cfg = write(tmp_path, "R_exponents = [4, 6]\n")
    assert cli.main(["vdc-scan", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
