"""TTI-stepped episode loop and paired agent comparison.

Every episode draws from three independent random streams derived from the
master seed: the channel, the transmission outcomes and the agent.  The
first two do not depend on the agent, so all agents run against the same
channel realisation and the same per-TTI outcome uniforms within a seed.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import KINDS, Agent, AgentConfig
from .buffer import Sample
from .channel import Channel, ChannelConfig
from .mcs_model import CqiTable, McsTable
from .olla import OllaState

OVERHEAD = 0.9


class DivergenceError(RuntimeError):
    """The network had to be reset more often than the configured limit."""


@dataclass
class ScenarioConfig:
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    mcs: McsTable = field(default_factory=McsTable)
    cqi: CqiTable = field(default_factory=CqiTable)
    olla: OllaState = field(default_factory=OllaState)
    agent: AgentConfig = field(default_factory=AgentConfig)
    name: str = "default"
    seed: int = 1
    episode_length: int = 200_000
    agents: tuple[str, ...] = ("olla", "odl", "qlearning")
    max_divergences: int | None = None
    # sweep grid
    speeds_kmh: tuple[float, ...] = (3.0, 60.0)
    ranks: tuple[int, ...] = (1, 2, 3)
    seeds: tuple[int, ...] = tuple(range(1, 11))

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        self.channel.validate()
        for kind in self.agents:
            if kind not in KINDS:
                raise ValueError(f"unknown agent kind {kind!r}")
        if self.episode_length <= self.agent.buffer_size and any(a != "olla" for a in self.agents):
            raise ValueError("episode_length must exceed the warm-up length (buffer_size)")
        if self.episode_length < 1:
            raise ValueError("episode_length must be positive")

    @property
    def n_features(self) -> int:
        return self.channel.rx_antennas + 4

    @property
    def subsample_rate(self) -> float:
        if self.agent.subsample_rate is not None:
            return self.agent.subsample_rate
        return 1.0 / self.channel.sounding_period_ttis

    def with_channel(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, channel=dataclasses.replace(self.channel, **changes))


def stream(seed: int, *labels: str) -> np.random.Generator:
    """Generator keyed by the master seed and fixed string labels."""
    key = [int(seed)] + [zlib.crc32(label.encode()) for label in labels]
    return np.random.default_rng(np.random.SeedSequence(key))


@dataclass
class EpisodeMetrics:
    agent: str
    seed: int
    rank: int
    mcs: np.ndarray
    sinr_db: np.ndarray
    ack: np.ndarray
    tput: np.ndarray
    divergences: int = 0
    fallbacks: int = 0
    retrain_count: int = 0
    flops: int = 0

    @property
    def length(self) -> int:
        return len(self.mcs)

    @property
    def mean_tput(self) -> float:
        """Mean spectral efficiency summed over layers (bit/s/Hz)."""
        return float(self.tput.sum() / self.length)

    @property
    def bler(self) -> float:
        return float(1.0 - self.ack.sum() / self.length)

    def mean_tput_mbps(self, bandwidth_hz: float) -> float:
        return self.mean_tput * bandwidth_hz * OVERHEAD / 1e6

    def mcs_histogram(self, k: int) -> np.ndarray:
        return np.bincount(self.mcs, minlength=k + 1)[1:]

    def channel_hash(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.sinr_db).tobytes()).hexdigest()

    def write_log(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        for t in range(self.length):
            writer.writerow([t, self.agent, int(self.mcs[t]), repr(float(self.sinr_db[t])),
                             int(self.ack[t]), repr(float(self.tput[t]))])


LOG_HEADER = ["tti", "agent", "mcs", "sinr_eff_db", "ack", "tput"]
SUMMARY_HEADER = ["scenario", "agent", "seed", "mean_tput", "bler", "gain_vs_olla"]


def run_episode(config: ScenarioConfig, kind: str, seed: int | None = None) -> EpisodeMetrics:
    seed = config.seed if seed is None else seed
    config.validate()
    ch_cfg = config.channel
    table = config.mcs
    channel = Channel(ch_cfg, stream(seed, "channel"))
    uniforms = stream(seed, "outcome").random(config.episode_length)
    agent = Agent(kind, config.agent, table, config.cqi.n, config.olla, config.n_features,
                  stream(seed, "agent", kind))

    n = config.episode_length
    L = ch_cfg.rank
    rate = config.subsample_rate
    thresholds = table.thresholds
    se = table.se
    slope = table.slope
    mcs_log = np.zeros(n, dtype=np.int64)
    sinr_log = np.zeros(n)
    ack_log = np.zeros(n, dtype=bool)
    tput_log = np.zeros(n)

    for t in range(n):
        if t > 0:
            channel.advance()
        if channel.is_sounding_tti():
            channel.sound()
        meas = channel.measure(config.cqi)
        mcs = agent.select_mcs(meas)
        sinr = channel.true_effective_sinr()
        x = slope * (sinr - thresholds[mcs - 1])
        block_error = 0.0 if x > 700.0 else 1.0 / (1.0 + math.exp(x))
        ack = uniforms[t] >= block_error
        mcs_log[t] = mcs
        sinr_log[t] = sinr
        ack_log[t] = ack
        tput_log[t] = L * se[mcs - 1] if ack else 0.0
        if agent.model is not None:
            agent.observe(Sample(np.append(meas.features(), mcs), ack, t), rate)
            agent.maybe_retrain()
            if config.max_divergences is not None and agent.divergences > config.max_divergences:
                raise DivergenceError(
                    f"{kind} agent diverged {agent.divergences} times (limit {config.max_divergences})")
        else:
            agent.observe(Sample(None, ack, t), rate)

    return EpisodeMetrics(
        agent=kind, seed=seed, rank=L, mcs=mcs_log, sinr_db=sinr_log, ack=ack_log,
        tput=tput_log, divergences=agent.divergences, fallbacks=agent.fallbacks,
        retrain_count=agent.retrain_count,
        flops=0 if agent.model is None else agent.model.flops,
    )


def _run_task(args):
    config, kind, seed = args
    return run_episode(config, kind, seed)


def run_many(tasks, workers: int = 1) -> list[EpisodeMetrics]:
    """Run ``(config, kind, seed)`` tasks, returning results in task order."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks))


@dataclass
class Comparison:
    """Paired results of several agents over a list of seeds."""

    scenario: str
    seeds: tuple[int, ...]
    agents: tuple[str, ...]
    metrics: dict[tuple[str, int], EpisodeMetrics]

    def gain(self, agent: str, seed: int) -> float:
        base = self.metrics[("olla", seed)].mean_tput
        tp = self.metrics[(agent, seed)].mean_tput
        if base == 0:
            return 0.0 if tp == 0 else math.inf
        return (tp - base) / base

    def gains(self, agent: str) -> np.ndarray:
        return np.array([self.gain(agent, s) for s in self.seeds])

    def mean_gain(self, agent: str) -> float:
        return float(np.mean(self.gains(agent)))

    def wins(self, agent: str) -> int:
        """Seeds on which ``agent`` is at least as good as OLLA."""
        return int(sum(self.metrics[(agent, s)].mean_tput >= self.metrics[("olla", s)].mean_tput
                       for s in self.seeds))

    def summary_rows(self):
        for seed in self.seeds:
            for agent in self.agents:
                m = self.metrics[(agent, seed)]
                yield [self.scenario, agent, seed, repr(m.mean_tput), repr(m.bler),
                       repr(self.gain(agent, seed))]


def compare(config: ScenarioConfig, agents=None, seeds=None, workers: int = 1) -> Comparison:
    agents = tuple(agents or config.agents)
    if "olla" not in agents:
        agents = ("olla",) + agents
    seeds = tuple(seeds if seeds is not None else config.seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    tasks = [(config, a, s) for s in seeds for a in agents]
    results = run_many(tasks, workers)
    metrics = {(m.agent, m.seed): m for m in results}
    return Comparison(config.name, seeds, agents, metrics)


@dataclass
class SweepResult:
    rows: list[tuple[float, int, Comparison]]

    @property
    def agents(self) -> tuple[str, ...]:
        return self.rows[0][2].agents

    def gain_matrix_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["speed_kmh", "rank", "n_seeds"]
        for a in self.agents:
            header += [f"{a}_mean_gain", f"{a}_wins"]
        writer.writerow(header)
        for speed, rank, comp in self.rows:
            row = [repr(float(speed)), rank, len(comp.seeds)]
            for a in self.agents:
                row += [repr(comp.mean_gain(a)), comp.wins(a)]
            writer.writerow(row)
        return buf.getvalue()


def sweep(config: ScenarioConfig, agents=None, seeds=None, workers: int = 1) -> SweepResult:
    """Cross product speeds x ranks x seeds x agents, paired within each seed."""
    agents = tuple(agents or config.agents)
    if "olla" not in agents:
        agents = ("olla",) + agents
    seeds = tuple(seeds if seeds is not None else config.seeds)
    cells = []
    tasks = []
    for speed in config.speeds_kmh:
        for rank in config.ranks:
            cell = config.with_channel(speed_kmh=speed, rank=rank)
            cell.name = f"{config.name}_v{speed:g}_r{rank}"
            cells.append((speed, rank, cell))
            tasks += [(cell, a, s) for s in seeds for a in agents]
    results = iter(run_many(tasks, workers))
    rows = []
    for speed, rank, cell in cells:
        metrics = {}
        for s in seeds:
            for a in agents:
                m = next(results)
                metrics[(a, s)] = m
        rows.append((speed, rank, Comparison(cell.name, seeds, agents, metrics)))
    return SweepResult(rows)
