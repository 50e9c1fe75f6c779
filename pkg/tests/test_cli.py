import csv
import hashlib
import os
import subprocess
import sys

import numpy as np
import pytest

from policy_embed import __version__
from policy_embed.cli import ConfigError, load_config, main
from policy_embed.lattice import BinEdges, LatticePolicy, save_lattice

SMALL = """[run]
env = pendulum
b_s = 4
b_a = 5
n_trajectories = 4
max_steps = 40
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SMALL)
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    meta = dict(l[2:].split(": ", 1) for l in lines if l.startswith("#"))
    return list(csv.DictReader(body)), meta


def digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


def test_precedence_flag_env_file_default(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nsigma = 0.5\nb_s = 7\ngamma = 0.8\n")
    env = {"POLICY_EMBED_B_S": "9", "POLICY_EMBED_GAMMA": "0.7"}
    cfg = load_config(str(ini), {"k": "3"}, environ=env)
    assert (cfg.sigma, cfg.b_s, cfg.gamma, cfg.k, cfg.delta) == (0.5, 9, 0.7, (3,), 0.1)
    cfg = load_config(str(ini), {"seeds": "0-2"}, environ={"POLICY_EMBED_SEEDS": "5"})
    assert cfg.seeds == (0, 1, 2)


def test_config_errors(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nfoo = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(str(ini), environ={})
    ini.write_text("[other]\nenv = cmc\n")
    with pytest.raises(ConfigError, match=r"\[run\]"):
        load_config(str(ini), environ={})
    with pytest.raises(ConfigError, match="delta"):
        load_config(None, environ={"POLICY_EMBED_DELTA": "0.7"})
    with pytest.raises(ConfigError, match="bad value"):
        load_config(None, {"k": "two"}, environ={})


def test_exit_code_config_error(tmp_path, capsys):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nenv = atari\n")
    assert main(["discretize", "--config", str(ini), "--out", str(tmp_path / "o")]) == 1
    assert "env must be one of" in capsys.readouterr().err


def test_exit_code_malformed_lattice(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("# policy-lattice v1\n# b_S 1\n# b_A 2\n0.3 0.3\n")
    ini = tmp_path / "c.ini"
    ini.write_text(f"[run]\nlattice = {bad}\n")
    assert main(["embed", "--config", str(ini), "--out", str(tmp_path / "o")]) == 2
    assert str(ini) in capsys.readouterr().err


def test_missing_lattice_is_config_error(tmp_path):
    assert main(["prune", "--out", str(tmp_path / "empty")]) == 1


def test_svd_parameter_count_in_csv(tmp_path):
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(15), size=35)
    lat = tmp_path / "lat.txt"
    save_lattice(LatticePolicy(probs, BinEdges.uniform(0, 1, 35), BinEdges.uniform(-1, 1, 15)), lat)
    ini = tmp_path / "c.ini"
    ini.write_text(f"[run]\nlattice = {lat}\n")
    out = tmp_path / "o"
    assert main(["embed", "--config", str(ini), "--basis", "svd", "--k", "2", "--out", str(out)]) == 0
    rows, meta = read_csv(out / "embed.csv")
    assert rows[0]["parameter_count"] == "104" and rows[0]["basis"] == "svd"
    assert set(meta) == {"config-hash", "seed", "version"} and meta["version"] == __version__
    assert (out / "embedding_svd_K2.txt").is_file()


def test_pipeline_is_byte_deterministic(tmp_path, small_cfg):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        for cmd in ("discretize", "prune", "embed", "evaluate", "bound"):
            assert main([cmd, "--config", str(small_cfg), "--out", str(out), "--seed", "3", "--k", "2,4"]) == 0
        runs.append(digest(out))
    assert runs[0] == runs[1]
    assert {"discretize.csv", "prune.csv", "embed.csv", "evaluate.csv", "bound.csv", "lattice.txt"} <= set(runs[0])


def test_seed_changes_output(tmp_path, small_cfg):
    for seed in ("0", "1"):
        assert main(["discretize", "--config", str(small_cfg), "--out", str(tmp_path / seed), "--seed", seed]) == 0
    assert (tmp_path / "0" / "lattice.txt").read_bytes() != (tmp_path / "1" / "lattice.txt").read_bytes()


def test_csv_format(tmp_path, small_cfg):
    out = tmp_path / "o"
    main(["discretize", "--config", str(small_cfg), "--out", str(out)])
    raw = (out / "discretize.csv").read_bytes()
    assert b"\r\n" not in raw
    rows, meta = read_csv(out / "discretize.csv")
    assert list(rows[0]) == ["env", "seed", "n_state_bins", "b_A", "n_steps", "pruned_fraction", "mean_return"]
    assert rows[0]["n_state_bins"] == "16" and rows[0]["n_steps"] == "160"
    assert meta["seed"] == "0" and meta["config-hash"] == load_config(str(small_cfg), environ={}).digest()


def test_evaluate_rows(tmp_path, small_cfg):
    out = tmp_path / "o"
    main(["discretize", "--config", str(small_cfg), "--out", str(out)])
    assert main(["evaluate", "--config", str(small_cfg), "--out", str(out), "--k", "3"]) == 0
    rows, _ = read_csv(out / "evaluate.csv")
    assert [r["method"] for r in rows] == ["policy", "lattice", "dft"]


def test_bound_chain_holds(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nenv = chain\nchain_states = 5,10\n")
    out = tmp_path / "o"
    assert main(["bound", "--config", str(ini), "--out", str(out)]) == 0
    rows, _ = read_csv(out / "bound.csv")
    assert rows and all(r["bound_holds"] == "true" for r in rows)


def test_bound_random_mdps(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nenv = random\nn_mdps = 20\n")
    out = tmp_path / "o"
    assert main(["bound", "--config", str(ini), "--out", str(out)]) == 0
    rows, _ = read_csv(out / "bound.csv")
    assert len(rows) == 20 and all(r["bound_holds"] == "true" for r in rows)


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "policy_embed", "bound", "--help"], capture_output=True, text=True,
                         env={**os.environ, "COLUMNS": "200"})
    assert res.returncode == 0 and "coverage_bound" in res.stdout
