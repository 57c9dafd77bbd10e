import io

import numpy as np
import pytest

from odlamc import buffer as buffer_mod
from odlamc.agents import AgentConfig
from odlamc.channel import ChannelConfig
from odlamc.engine import (
    DivergenceError,
    ScenarioConfig,
    compare,
    run_episode,
    sweep,
)
from odlamc.mcs_model import McsTable, default_thresholds


def small(**kw):
    base = dict(
        channel=ChannelConfig(speed_kmh=30.0),
        agent=AgentConfig(buffer_size=100, retrain_period=20),
        episode_length=600,
    )
    base.update(kw)
    return ScenarioConfig(**base)


def shifted_table(offset):
    return McsTable(thresholds=tuple(t + offset for t in default_thresholds()))


def test_always_ack_channel():
    cfg = small(mcs=shifted_table(-1000.0), episode_length=3000)
    table = cfg.mcs
    for kind in ("olla", "odl"):
        m = run_episode(cfg, kind, 1)
        assert m.ack.all()
        assert np.all(m.mcs[-500:] == table.k)
        assert m.tput[-1] == cfg.channel.rank * table.se[-1]


def test_always_nack_channel():
    cfg = small(mcs=shifted_table(1000.0))
    m = run_episode(cfg, "olla", 1)
    assert m.bler == 1.0 and m.mean_tput == 0.0
    assert np.all(m.mcs[50:] == 1)


def test_olla_stationary_bler_short():
    cfg = small(channel=ChannelConfig(speed_kmh=0.0, sinr_std_db=0.0, mean_sinr_db=8.0),
                agents=("olla",), episode_length=40_000)
    assert run_episode(cfg, "olla", 3).bler == pytest.approx(0.1, abs=0.02)


def test_self_comparison_has_zero_gain():
    comp = compare(small(), agents=("olla",), seeds=(1, 2, 3))
    assert list(comp.gains("olla")) == [0.0, 0.0, 0.0]
    assert comp.wins("olla") == 3


def test_identical_runs_are_bit_identical():
    a, b = run_episode(small(), "odl", 4), run_episode(small(), "odl", 4)
    for field in ("mcs", "sinr_db", "ack", "tput"):
        assert np.array_equal(getattr(a, field), getattr(b, field))
    fa, fb = io.StringIO(), io.StringIO()
    a.write_log(fa)
    b.write_log(fb)
    assert fa.getvalue() == fb.getvalue()


def test_channel_shared_across_agents():
    hashes = {run_episode(small(), k, 5).channel_hash() for k in ("olla", "odl", "qlearning")}
    assert len(hashes) == 1
    assert run_episode(small(), "olla", 6).channel_hash() not in hashes


def test_throughput_accounting():
    cfg = small(channel=ChannelConfig(speed_kmh=30.0, rank=2))
    m = run_episode(cfg, "odl", 7)
    se = np.array(cfg.mcs.se)
    expected = np.where(m.ack, 2 * se[m.mcs - 1], 0.0)
    assert np.array_equal(m.tput, expected)
    assert m.mean_tput == m.tput.sum() / m.length
    assert m.bler == 1 - m.ack.mean()
    assert m.mcs_histogram(28).sum() == m.length


def test_stored_samples_carry_transmitted_mcs(monkeypatch):
    stored = []
    original = buffer_mod.SampleBuffer.push

    def spy(self, sample):
        stored.append((sample.tti, sample.mcs))
        original(self, sample)

    monkeypatch.setattr(buffer_mod.SampleBuffer, "push", spy)
    m = run_episode(small(), "odl", 8)
    assert len(stored) > 100
    assert all(mcs == m.mcs[t] for t, mcs in stored)


def test_divergence_limit_raises():
    cfg = small(agent=AgentConfig(buffer_size=50, retrain_period=5, lr=1e300), max_divergences=0)
    with pytest.raises(DivergenceError):
        run_episode(cfg, "qlearning", 1)


def test_episode_must_outlast_warmup():
    with pytest.raises(ValueError):
        small(episode_length=50)


def test_sweep_shape_and_olla_column():
    cfg = small(speeds_kmh=(3.0, 60.0), ranks=(1, 2), episode_length=300)
    result = sweep(cfg, agents=("olla", "odl"), seeds=(1, 2))
    lines = result.gain_matrix_csv().splitlines()
    assert lines[0] == "speed_kmh,rank,n_seeds,olla_mean_gain,olla_wins,odl_mean_gain,odl_wins"
    assert len(lines) == 5
    assert all(line.split(",")[3] == "0.0" for line in lines[1:])
    assert sum(len(c.metrics) for _, _, c in result.rows) == 2 * 2 * 2 * 2


def test_parallel_matches_serial():
    cfg = small(episode_length=300)
    serial = compare(cfg, seeds=(1, 2), workers=1)
    parallel = compare(cfg, seeds=(1, 2), workers=2)
    assert list(serial.summary_rows()) == list(parallel.summary_rows())
