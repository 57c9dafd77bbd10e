"""Bounded FIFO sample buffer with subsampled ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class Sample:
    features: np.ndarray  # measurement features followed by the transmitted MCS
    ack: bool
    tti: int = 0

    @property
    def mcs(self) -> int:
        return int(self.features[-1])


class SampleBuffer:
    """Ring buffer of at most ``capacity`` samples; the oldest is evicted first."""

    def __init__(self, capacity: int, n_features: int):
        if capacity < 1:
            raise ValueError("buffer capacity must be at least 1")
        self.capacity = capacity
        self.n_features = n_features
        self._features = np.zeros((capacity, n_features))
        self._acks = np.zeros(capacity)
        self._ttis = np.zeros(capacity, dtype=np.int64)
        self._next = 0
        self.size = 0
        self.inserted = 0

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def push(self, sample: Sample) -> None:
        i = self._next
        self._features[i] = sample.features
        self._acks[i] = float(sample.ack)
        self._ttis[i] = sample.tti
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.inserted += 1

    def maybe_push(self, sample: Sample, rate: float, rng: np.random.Generator) -> bool:
        """Push with probability ``rate``; one uniform draw per offer."""
        if not 0 < rate <= 1:
            raise ValueError("subsampling rate must lie in (0, 1]")
        accepted = rng.random() < rate
        if accepted:
            self.push(sample)
        return accepted

    def _order(self) -> np.ndarray:
        start = (self._next - self.size) % self.capacity
        return (start + np.arange(self.size)) % self.capacity

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Features and ACK labels, oldest first."""
        idx = self._order()
        return self._features[idx], self._acks[idx]

    def __iter__(self):
        for i in self._order():
            yield Sample(self._features[i].copy(), bool(self._acks[i]), int(self._ttis[i]))

    def memory_floats(self) -> int:
        return self.capacity * (self.n_features + 2)

    def to_csv(self, path, feature_names=None) -> None:
        names = feature_names or [f"f{j}" for j in range(self.n_features)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tti", *names, "ack"])
            for s in self:
                writer.writerow([s.tti, *(repr(float(v)) for v in s.features), int(s.ack)])
