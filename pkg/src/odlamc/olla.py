"""Outer-loop link adaptation: a CQI-based MCS plus an ACK/NACK-driven offset."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mcs_model import base_mcs_of_cqi


@dataclass
class OllaState:
    """Offset ``y`` in MCS-index units, step ``d`` and target BLER ``b``.

    Each ACK raises the offset by ``d`` and each NACK lowers it by
    ``d (1 - b) / b``, so the expected drift vanishes exactly when the NACK
    rate equals ``b``.
    """

    offset: float = 0.0
    step: float = 0.1
    target_bler: float = 0.1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("OLLA step must be positive")
        if not 0 < self.target_bler < 1:
            raise ValueError("OLLA target BLER must lie in (0, 1)")


def _round_half_up(x: float) -> int:
    # Python's round() is banker's rounding; MCS selection rounds halves up
    return math.floor(x + 0.5)


def olla_select(state: OllaState, cqi: int, k: int, n: int) -> int:
    m = _round_half_up(base_mcs_of_cqi(cqi, k, n) + state.offset)
    return min(max(m, 1), k)


def olla_update(state: OllaState, ack: bool) -> OllaState:
    if ack:
        state.offset += state.step
    else:
        state.offset -= state.step * (1.0 - state.target_bler) / state.target_bler
    return state
