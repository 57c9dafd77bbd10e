import csv
from pathlib import Path

import pytest

from odlamc import config as config_io
from odlamc.cli import main
from odlamc.engine import ScenarioConfig

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = """\
[scenario]
name = tiny
seed = 3
episode_length = 400
agents = olla, odl

[channel]
speed_kmh = 30
rank = 2

[agent]
buffer_size = 100
retrain_period = 25

[sweep]
speeds_kmh = 3, 60
ranks = 1, 2, 3
seeds = 1, 2
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(MINIMAL)
    return path


def read_dir(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def rows(path):
    return list(csv.reader(open(path)))


def test_missing_config_exits_2(tmp_path, capsys):
    missing = tmp_path / "nope.ini"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_unknown_key_names_key_and_line(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[channel]\nspeed_kmh = 3\nwarp_factor = 9\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "warp_factor" in err and f"{path}:3" in err


def test_bad_value_names_key(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[scenario]\nname = x\n\n[agent]\nlr = fast\n")
    assert main(["compare", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "agent.lr" in err and f"{path}:5" in err


def test_cross_field_error_is_config_error(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[channel]\nrank = 3\nrx_antennas = 2\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_run_writes_one_summary_row(cfg_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    summary = rows(out / "summary.csv")
    assert summary[0] == ["scenario", "agent", "seed", "mean_tput", "bler", "gain_vs_olla"]
    assert len(summary) == 2 and summary[1][:3] == ["tiny", "odl", "3"]
    log = rows(out / "log_odl_seed3.csv")
    assert log[0] == ["tti", "agent", "mcs", "sinr_eff_db", "ack", "tput"]
    assert len(log) == 401
    assert "tiny odl seed=3" in capsys.readouterr().out


def test_runs_are_byte_identical(cfg_path, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run", "--config", str(cfg_path), "--out", str(out), "--seed", "5"]) == 0
    assert read_dir(a) == read_dir(b)


def test_config_echo_reproduces_outputs(cfg_path, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert main(["compare", "--config", str(cfg_path), "--out", str(first), "--seeds", "4,7"]) == 0
    assert main(["compare", "--config", str(first / "config.ini"), "--out", str(second)]) == 0
    assert read_dir(first) == read_dir(second)
    assert len(rows(first / "summary.csv")) == 1 + 2 * 2


def test_sweep_counts_and_zero_olla_column(cfg_path, tmp_path, capsys):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out)]) == 0
    matrix = rows(out / "gain_matrix.csv")
    assert matrix[0][:5] == ["speed_kmh", "rank", "n_seeds", "olla_mean_gain", "olla_wins"]
    assert len(matrix) == 1 + 6
    assert {r[3] for r in matrix[1:]} == {"0.0"}
    assert len(rows(out / "summary.csv")) == 1 + 6 * 2 * 2
    assert "24 episodes, 6 grid cells" in capsys.readouterr().out


def test_output_dir_from_environment(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv("ODLAMC_OUTPUT_DIR", str(tmp_path / "env_out"))
    assert main(["run", "--config", str(cfg_path), "--agent", "olla"]) == 0
    assert (tmp_path / "env_out" / "log_olla_seed3.csv").exists()


def test_divergence_limit_exits_3(tmp_path):
    text = (MINIMAL.replace("retrain_period = 25", "retrain_period = 5\nlr = 1e300")
            .replace("agents = olla, odl", "agents = olla, qlearning\nmax_divergences = 0"))
    path = tmp_path / "div.ini"
    path.write_text(text)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 3


def test_dumps_loads_round_trip():
    cfg = ScenarioConfig()
    text = config_io.dumps(cfg)
    again = config_io.loads(text)
    assert config_io.dumps(again) == text
    assert again.channel == cfg.channel and again.agent == cfg.agent


@pytest.mark.parametrize("name,tx", [("default.ini", 64), ("mimo.ini", 8)])
def test_shipped_configs(name, tx):
    cfg = config_io.load(CONFIGS / name)
    ch = cfg.channel
    assert ch.tx_antennas == tx and ch.rx_antennas == 4
    assert ch.tx_power_dbm == 40.0 and ch.noise_density_dbm_hz == -174.0
    assert ch.bandwidth_hz == 20e6 and ch.sounding_period_ms == 5.0
