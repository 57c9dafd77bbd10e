"""MCS and CQI tables, the synthetic BLER curves and the brute-force MCS oracle.

MCS and CQI indices are 1-based throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# NR PDSCH MCS index table 1 (64-QAM), spectral efficiency column.  Index 17
# (64-QAM, 2.5664) is dropped because it is dominated by index 16 (16-QAM,
# 2.5703); the remaining 28 entries are strictly increasing.
NR_64QAM_SE = (
    0.2344, 0.3066, 0.3770, 0.4902, 0.6016, 0.7402, 0.8770, 1.0273,
    1.1758, 1.3262, 1.3281, 1.4766, 1.6953, 1.9141, 2.1602, 2.4063,
    2.5703, 2.7305, 3.0293, 3.3223, 3.6094, 3.9023, 4.2129, 4.5234,
    4.8164, 5.1152, 5.3320, 5.5547,
)


def default_thresholds(k: int = 28, first: float = -6.5, spacing: float = 0.75) -> tuple[float, ...]:
    return tuple(first + spacing * m for m in range(k))


@dataclass(frozen=True)
class McsTable:
    """Spectral efficiency and logistic BLER parameters for ``k`` MCS values.

    Parameters
    ----------
    se : sequence of float
        Spectral efficiency (bit/s/Hz) per MCS, strictly increasing.
    thresholds : sequence of float
        SINR (dB) at which the BLER of each MCS is 0.5, strictly increasing.
    slope : float
        Logistic slope of the BLER curves, per dB.
    """

    se: tuple[float, ...] = NR_64QAM_SE
    thresholds: tuple[float, ...] = field(default_factory=default_thresholds)
    slope: float = 2.0

    def __post_init__(self):
        se = np.asarray(self.se, dtype=float)
        th = np.asarray(self.thresholds, dtype=float)
        if se.ndim != 1 or se.size < 2:
            raise ValueError("MCS table needs at least 2 entries")
        if th.shape != se.shape:
            raise ValueError(f"{se.size} SE values but {th.size} BLER thresholds")
        if np.any(se <= 0) or np.any(np.diff(se) <= 0):
            raise ValueError("spectral efficiencies must be positive and strictly increasing")
        if np.any(np.diff(th) <= 0):
            raise ValueError("BLER thresholds must be strictly increasing")
        if not self.slope > 0:
            raise ValueError("BLER slope must be positive")
        object.__setattr__(self, "se", tuple(float(v) for v in se))
        object.__setattr__(self, "thresholds", tuple(float(v) for v in th))
        # cached arrays for the vectorised paths
        object.__setattr__(self, "_se", se)
        object.__setattr__(self, "_th", th)

    @property
    def k(self) -> int:
        return len(self.se)

    @property
    def se_array(self) -> np.ndarray:
        return self._se

    @property
    def threshold_array(self) -> np.ndarray:
        return self._th


@dataclass(frozen=True)
class CqiTable:
    """Uniform SINR quantizer: CQI ``c`` covers ``[floor + (c-1)*step, floor + c*step)``."""

    n: int = 15
    floor_db: float = -8.0
    step_db: float = 2.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("CQI table needs n >= 2")
        if not self.step_db > 0:
            raise ValueError("CQI step must be positive")


def _check_mcs(table: McsTable, mcs) -> None:
    m = np.asarray(mcs)
    if np.any(m < 1) or np.any(m > table.k):
        raise IndexError(f"MCS index out of range 1..{table.k}: {mcs}")


def se_of(table: McsTable, mcs):
    """Spectral efficiency of ``mcs`` (scalar or integer array)."""
    _check_mcs(table, mcs)
    if np.ndim(mcs) == 0:
        return table.se[int(mcs) - 1]
    return table.se_array[np.asarray(mcs) - 1]


def bler(table: McsTable, mcs, sinr_eff_db):
    """Block error probability ``1 / (1 + exp(slope * (sinr - threshold)))``."""
    _check_mcs(table, mcs)
    if np.ndim(mcs) == 0 and np.ndim(sinr_eff_db) == 0:
        t = table.slope * (float(sinr_eff_db) - table.thresholds[int(mcs) - 1])
        return 0.0 if t > 700.0 else 1.0 / (1.0 + math.exp(t))
    theta = table.threshold_array[np.asarray(mcs) - 1]
    t = table.slope * (np.asarray(sinr_eff_db, dtype=float) - theta)
    # exp overflow at very high SINR is harmless: it drives the BLER to 0
    with np.errstate(over="ignore"):
        out = 1.0 / (1.0 + np.exp(t))
    return float(out) if np.ndim(out) == 0 else out


def success_probabilities(table: McsTable, sinr_eff_db: float) -> np.ndarray:
    """``1 - bler`` for every MCS at one SINR, as a length-k array."""
    t = table.slope * (sinr_eff_db - table.threshold_array)
    return 1.0 / (1.0 + np.exp(-np.clip(t, -700.0, 700.0)))


def oracle_mcs(table: McsTable, sinr_eff_db: float) -> int:
    """MCS maximising ``SE * (1 - BLER)`` when the BLER curves are known."""
    expected = [table.se[m] * (1.0 - bler(table, m + 1, sinr_eff_db)) for m in range(table.k)]
    # strict comparison keeps the smallest index on ties
    best = 0
    for m in range(1, table.k):
        if expected[m] > expected[best]:
            best = m
    return best + 1


def cqi_from_sinr(table: CqiTable, sinr_db: float) -> int:
    c = int(np.floor((sinr_db - table.floor_db) / table.step_db)) + 1
    return min(max(c, 1), table.n)


def base_mcs_of_cqi(cqi: int, k: int, n: int) -> float:
    """Linear map of CQI 1..n onto the real MCS axis 1..k (not rounded)."""
    if not 1 <= cqi <= n:
        raise IndexError(f"CQI {cqi} out of range 1..{n}")
    return 1.0 + (cqi - 1) * (k - 1) / (n - 1)
