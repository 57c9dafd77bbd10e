"""MCS-selection agents: OLLA, online deep learning (ODL) and Q-learning.

The two learning agents share one lifecycle.  During warm-up they transmit
with OLLA and store every outcome, and once the buffer has filled they switch
to network-driven selection, subsample further outcomes into the buffer and
retrain from the current weights every ``retrain_period`` TTIs.

ODL ranks candidates by ``P(ack | mcs, features) * SE(mcs)`` with a sigmoid
classifier trained on ACK labels; Q-learning ranks them by a regressed reward
``SE(mcs) * ack``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .buffer import Sample, SampleBuffer
from .channel import Measurement
from .mcs_model import McsTable
from .neural import MLP, ModelDivergence
from .olla import OllaState, olla_select, olla_update

KINDS = ("olla", "odl", "qlearning")
PROFILES = {"odl": ("relu", "sigmoid"), "qlearning": ("tanh", "identity")}


@dataclass
class AgentConfig:
    retrain_period: int = 50
    buffer_size: int = 500
    steps: int = 10
    batch_size: int = 64
    lr: float = 1e-3
    epsilon: float = 0.0
    hidden_sizes: tuple[int, int] = (32, 16)
    # None means one sounding period's worth: tti / sounding period
    subsample_rate: float | None = None
    warmup_train_every_tti: bool = False

    def __post_init__(self):
        if self.retrain_period < 1:
            raise ValueError("retrain_period must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.buffer_size < 1 or self.steps < 0 or self.batch_size < 1 or not self.lr > 0:
            raise ValueError("buffer_size, batch_size and lr must be positive and steps >= 0")
        if len(self.hidden_sizes) != 2:
            raise ValueError("exactly two hidden layer widths are required")
        if self.subsample_rate is not None and not 0 < self.subsample_rate <= 1:
            raise ValueError("subsample_rate must lie in (0, 1]")


class Agent:
    """One agent instance owned by one episode."""

    def __init__(self, kind: str, config: AgentConfig, table: McsTable, cqi_levels: int,
                 olla: OllaState, n_features: int, rng: np.random.Generator):
        if kind not in KINDS:
            raise ValueError(f"unknown agent kind {kind!r}; expected one of {KINDS}")
        self.kind = kind
        self.config = config
        self.table = table
        self.cqi_levels = cqi_levels
        self.olla = copy.copy(olla)
        self.rng = rng
        self.tti = 0
        self.retrain_count = 0
        self.fallbacks = 0
        self.loss_history: list[float] = []
        self.model = None
        self.buffer = None
        self.phase = "online" if kind == "olla" else "warmup"
        if kind != "olla":
            hidden, output = PROFILES[kind]
            sizes = (n_features, *config.hidden_sizes, 1)
            self.model = MLP(sizes, hidden=hidden, output=output, rng=rng)
            self.buffer = SampleBuffer(config.buffer_size, n_features)
        self._candidates = np.arange(1, table.k + 1, dtype=float)

    @property
    def divergences(self) -> int:
        return 0 if self.model is None else self.model.divergences

    def _olla_mcs(self, meas: Measurement) -> int:
        return olla_select(self.olla, meas.cqi, self.table.k, self.cqi_levels)

    def scores(self, meas: Measurement) -> np.ndarray:
        """Network score of every candidate MCS for this measurement."""
        X = np.empty((self.table.k, self.model.sizes[0]))
        X[:, :-1] = meas.features()
        X[:, -1] = self._candidates
        out = self.model.predict(X)
        if self.kind == "odl":
            return out * self.table.se_array
        return out

    def select_mcs(self, meas: Measurement) -> int:
        if self.phase == "warmup" or self.kind == "olla":
            return self._olla_mcs(meas)
        if self.config.epsilon > 0 and self.rng.random() < self.config.epsilon:
            return int(self.rng.integers(1, self.table.k + 1))
        try:
            scores = self.scores(meas)
        except ModelDivergence:
            self.fallbacks += 1
            return self._olla_mcs(meas)
        # argmax returns the first maximum, i.e. the smallest MCS on ties
        return int(np.argmax(scores)) + 1

    def observe(self, sample: Sample, subsample_rate: float) -> None:
        self.tti += 1
        if self.kind == "olla":
            olla_update(self.olla, sample.ack)
            return
        if self.phase == "warmup":
            self.buffer.push(sample)
            olla_update(self.olla, sample.ack)
            if self.buffer.full:
                self.phase = "online"
        else:
            self.buffer.maybe_push(sample, subsample_rate, self.rng)

    def targets(self, mcs: np.ndarray, acks: np.ndarray) -> np.ndarray:
        if self.kind == "odl":
            return acks
        return self.table.se_array[mcs.astype(int) - 1] * acks

    def maybe_retrain(self) -> bool:
        if self.model is None or len(self.buffer) == 0:
            return False
        every_tti = self.phase == "warmup" and self.config.warmup_train_every_tti
        if not every_tti and self.tti % self.config.retrain_period != 0:
            return False
        X, acks = self.buffer.arrays()
        trace = self.model.fit(X, self.targets(X[:, -1], acks), steps=self.config.steps,
                               batch_size=self.config.batch_size, lr=self.config.lr, rng=self.rng)
        self.loss_history.extend(trace)
        self.retrain_count += 1
        return True
