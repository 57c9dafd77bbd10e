"""Time-varying channel with periodic sounding and stale measurements.

Two modes share one interface:

* ``gauss_markov``: each receive antenna carries an SINR (dB) that evolves as a
  stationary AR(1) process whose one-TTI correlation follows from the Doppler
  coherence time.
* ``mimo``: the full ``R x T`` complex channel evolves as AR(1); the base
  station holds an SVD precoder computed from the last sounded channel and the
  receiver applies linear MMSE detection.  The mismatch between the current
  channel and the stale precoder is what ages the link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mcs_model import CqiTable, cqi_from_sinr

SPEED_OF_LIGHT = 3.0e8

# random draws are generated in blocks to keep per-TTI overhead small
_BLOCK = 1024


def kmh_to_ms(speed_kmh: float) -> float:
    return speed_kmh / 3.6


def db(x):
    return 10.0 * np.log10(x)


@dataclass
class ChannelConfig:
    mode: str = "gauss_markov"
    tx_antennas: int = 64
    rx_antennas: int = 4
    rank: int = 1
    carrier_hz: float = 3.5e9
    speed_kmh: float = 3.0
    tti_ms: float = 1.0
    sounding_period_ms: float = 5.0
    mean_sinr_db: float = 10.0
    sinr_std_db: float = 8.0
    # mimo mode: linear noise power relative to unit-power symbols over a
    # unit-variance channel; None derives it from the link budget below
    noise_power: float | None = None
    tx_power_dbm: float = 40.0
    pathloss_db: float = 130.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 20e6

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in ("gauss_markov", "mimo"):
            raise ValueError(f"unknown channel mode {self.mode!r}")
        if not 1 <= self.rank <= self.rx_antennas <= self.tx_antennas:
            raise ValueError(
                f"need 1 <= rank <= rx_antennas <= tx_antennas, got "
                f"L={self.rank}, R={self.rx_antennas}, T={self.tx_antennas}"
            )
        if self.tti_ms <= 0 or self.sounding_period_ms <= 0:
            raise ValueError("TTI and sounding period must be positive")
        ratio = self.sounding_period_ms / self.tti_ms
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("sounding period must be an integer multiple of the TTI")
        if self.speed_kmh < 0:
            raise ValueError("speed must be non-negative")
        if self.sinr_std_db < 0:
            raise ValueError("SINR std must be non-negative")
        if self.noise_power is not None and not self.noise_power > 0:
            raise ValueError("noise power must be positive")

    @property
    def speed_ms(self) -> float:
        return kmh_to_ms(self.speed_kmh)

    @property
    def tti_s(self) -> float:
        return self.tti_ms * 1e-3

    @property
    def sounding_period_ttis(self) -> int:
        return int(round(self.sounding_period_ms / self.tti_ms))

    @property
    def rsrp_dbm(self) -> float:
        return self.tx_power_dbm - self.pathloss_db

    @property
    def effective_noise_power(self) -> float:
        if self.noise_power is not None:
            return self.noise_power
        noise_dbm = self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)
        return 10.0 ** ((noise_dbm - self.rsrp_dbm) / 10.0)


def coherence_time(speed_ms: float, carrier_hz: float) -> float:
    """``0.423 / f_d`` with ``f_d = v f_c / c``; infinite for a static user."""
    if speed_ms == 0:
        return math.inf
    return 0.423 * SPEED_OF_LIGHT / (speed_ms * carrier_hz)


def tti_correlation(speed_ms: float, carrier_hz: float, tti_s: float) -> float:
    return math.exp(-tti_s / coherence_time(speed_ms, carrier_hz))


class PrecoderDiagnostics:
    rank_deficient = 0


def svd_precoder(H: np.ndarray, rank: int) -> np.ndarray:
    """First ``rank`` right singular vectors of ``H`` as a ``T x rank`` matrix.

    If ``H`` has fewer than ``rank`` non-negligible singular values the
    returned columns are still orthonormal (they come from the full unitary
    ``V``) and ``PrecoderDiagnostics.rank_deficient`` is incremented.
    """
    R, T = H.shape
    if not 1 <= rank <= min(R, T):
        raise ValueError(f"rank {rank} exceeds min(R, T) = {min(R, T)}")
    _, s, vh = np.linalg.svd(H, full_matrices=True)
    tol = max(R, T) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    if np.count_nonzero(s > tol) < rank:
        PrecoderDiagnostics.rank_deficient += 1
    return vh[:rank].conj().T


def post_detection_sinr(H: np.ndarray, W: np.ndarray, noise: float) -> np.ndarray:
    """Per-layer SINR (dB) after linear MMSE detection of ``r = G(HWx + n)``."""
    if not noise > 0:
        raise ValueError("noise power must be positive")
    A = H @ W
    L = A.shape[1]
    gram = np.eye(L) + (A.conj().T @ A) / noise
    mse = np.real(np.diag(np.linalg.inv(gram)))
    return db(1.0 / mse - 1.0)


@dataclass
class Measurement:
    sinr_db: np.ndarray  # per receive antenna, from the last sounding
    cqi: int
    age_ms: float
    rsrp_dbm: float

    def features(self) -> np.ndarray:
        """Raw feature prefix (everything except the candidate MCS)."""
        return np.concatenate([self.sinr_db, [self.cqi, self.age_ms, self.rsrp_dbm]])


class Channel:
    """Channel state owned by one episode.

    The constructor draws the initial state from the stationary distribution
    and performs no sounding; the engine sounds at TTIs that are multiples of
    the sounding period, starting at TTI 0.
    """

    def __init__(self, config: ChannelConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.rho = tti_correlation(config.speed_ms, config.carrier_hz, config.tti_s)
        self._innov = math.sqrt(max(0.0, 1.0 - self.rho * self.rho))
        self.noise = config.effective_noise_power
        self.tti = 0
        self.last_sounding_tti: int | None = None
        self.precoder: np.ndarray | None = None
        self._block = None
        self._pos = _BLOCK

        R = config.rx_antennas
        if config.mode == "gauss_markov":
            self.state = config.mean_sinr_db + config.sinr_std_db * rng.standard_normal(R)
        else:
            self.state = self._complex_normal((R, config.tx_antennas))
        self.snapshot = None

    def _complex_normal(self, shape):
        z = self.rng.standard_normal(shape + (2,))
        return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)

    def _innovation(self) -> np.ndarray:
        if self._pos == _BLOCK:
            shape = self.state.shape
            if self.config.mode == "gauss_markov":
                self._block = self.rng.standard_normal((_BLOCK,) + shape)
            else:
                self._block = self._complex_normal((_BLOCK,) + shape)
            self._pos = 0
        eps = self._block[self._pos]
        self._pos += 1
        return eps

    def is_sounding_tti(self, tti: int | None = None) -> bool:
        t = self.tti if tti is None else tti
        return t % self.config.sounding_period_ttis == 0

    def advance(self) -> None:
        """Move the true channel one TTI forward."""
        eps = self._innovation()
        if self.config.mode == "gauss_markov":
            mu = self.config.mean_sinr_db
            self.state = mu + self.rho * (self.state - mu) + self._innov * self.config.sinr_std_db * eps
        else:
            self.state = self.rho * self.state + self._innov * eps
        self.tti += 1

    def sound(self) -> None:
        if not self.is_sounding_tti():
            raise RuntimeError(f"TTI {self.tti} is not a sounding instant")
        self.snapshot = self.state.copy()
        self.last_sounding_tti = self.tti
        if self.config.mode == "mimo":
            self.precoder = svd_precoder(self.snapshot, self.config.rank)
        self._sounded_ant = self._antenna_sinr(self.snapshot)
        self._sounded_cqi = None

    @property
    def age_ttis(self) -> int:
        if self.last_sounding_tti is None:
            raise RuntimeError("channel has not been sounded yet")
        return self.tti - self.last_sounding_tti

    def true_effective_sinr(self) -> float:
        """Scalar SINR (dB) that drives the BLER of the current transmission."""
        L = self.config.rank
        if self.config.mode == "gauss_markov":
            return float(self.state.sum()) / self.state.size - 10.0 * math.log10(L)
        if self.precoder is None:
            raise RuntimeError("channel has not been sounded yet")
        # power is split evenly over the L layers
        return float(np.mean(post_detection_sinr(self.state, self.precoder, self.noise * L)))

    def _antenna_sinr(self, snapshot: np.ndarray) -> np.ndarray:
        if self.config.mode == "gauss_markov":
            return snapshot.copy()
        # precoded receive power per antenna, with power split over the layers
        gain = np.sum(np.abs(snapshot @ self.precoder) ** 2, axis=1) / self.config.rank
        return db(gain / self.noise)

    def measure(self, cqi_table: CqiTable) -> Measurement:
        if self.snapshot is None:
            raise RuntimeError("channel has not been sounded yet")
        if self._sounded_cqi is None or self._sounded_cqi[0] is not cqi_table:
            mean_db = float(self._sounded_ant.sum()) / self._sounded_ant.size
            self._sounded_cqi = (cqi_table, cqi_from_sinr(cqi_table, mean_db))
        return Measurement(
            sinr_db=self._sounded_ant,
            cqi=self._sounded_cqi[1],
            age_ms=self.age_ttis * self.config.tti_ms,
            rsrp_dbm=self.config.rsrp_dbm,
        )
