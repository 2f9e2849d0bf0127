import csv
import subprocess
import sys

import numpy as np
import pytest

from sobolev_lab.cli import ConfigError, build_parser, main, resolve_config
from sobolev_lab.manifolds import Circle, IntervalDomain
from sobolev_lab.sobolev_maps import SampledMap, write_sampled_map


def cfg_for(argv, env=None):
    return resolve_config(build_parser().parse_args(argv), env=env or {})


def test_defaults_per_command():
    assert cfg_for(["chiron"]).p == 1.0
    assert cfg_for(["family", "--name", "s1-disk"]).p == 1.0
    cfg = cfg_for(["family"])
    assert (cfg.name, cfg.p, cfg.nodes) == ("cg-sasaki", 2.0, 8192)
    assert cfg.lambdas == [1.0, 0.3, 0.1, 0.03, 0.01]


def test_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("seed = 11\np = 3\nnodes = 100\n")
    env = {"SOBOLEV_LAB_SEED": "7"}
    assert cfg_for(["props"], env).seed == 7
    cfg = cfg_for(["props", "--config", str(ini)], env)
    assert (cfg.seed, cfg.p, cfg.nodes) == (11, 3.0, 100)
    cfg = cfg_for(["props", "--config", str(ini), "--seed", "5", "--p", "4"], env)
    assert (cfg.seed, cfg.p, cfg.nodes) == (5, 4.0, 100)


@pytest.mark.parametrize("argv", [
    ["props", "--p", "0.5"],
    ["props", "--p", "20"],
    ["family", "--name", "nope"],
    ["family", "--lambdas", "1,-0.1"],
    ["props", "--nodes", "8"],
    ["props", "--format", "json"],
    ["energy"],
    ["props", "--seed", "x"],
])
def test_invalid_configuration_exits_2(argv, tmp_path):
    with pytest.raises(ConfigError):
        cfg_for(argv)
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_unknown_config_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("colour = blue\n")
    assert main(["props", "--config", str(ini), "--out", str(tmp_path)]) == 2


def test_props_run_writes_outputs(tmp_path, capsys):
    assert main(["props", "--samples", "2000", "--out", str(tmp_path)]) == 0
    summary = (tmp_path / "summary.txt").read_text()
    assert "PASS" in summary and "FAIL" not in summary
    header = (tmp_path / "results.csv").read_text().splitlines()[0]
    assert header == "check,value,tolerance,passed"
    assert capsys.readouterr().out == summary


def test_props_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["props", "--samples", "1000", "--seed", "3", "--out", str(d)]) == 0
    assert (a / "results.csv").read_text() == (b / "results.csv").read_text()


def test_family_tsv(tmp_path):
    code = main(["family", "--name", "cg-sasaki", "--lambdas", "1,0.1", "--nodes", "512",
                 "--format", "tsv", "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "results.tsv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].split("\t")[0] == "family"


def test_chiron_writes_cauchy_table(tmp_path):
    assert main(["chiron", "--ells", "4,16,64", "--nodes", "1024", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "cauchy.csv").read_text().startswith("ell,energy")


def test_energy_command(tmp_path):
    u = SampledMap.sample(IntervalDomain(0, 1), Circle(),
                          lambda t: np.concatenate([np.cos(t), np.sin(t)], -1), 1025)
    src = tmp_path / "u.csv"
    write_sampled_map(u, src)
    assert main(["energy", "--input", str(src), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "results.csv", newline="") as fh:
        rows = dict(csv.reader(fh))
    assert float(rows["energy"]) == pytest.approx(1.0, abs=1e-6)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sobolev_lab", "props", "--p", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "invalid configuration" in proc.stderr
