"""Seeded AWGN channel.

SNR is symbol-energy based: snr_db means Es/N0 where Es is the declared frame
power. N0 = P / 10^(snr_db/10), split evenly across I and Q (variance N0/2
per real component). math.inf is the noiseless sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modulation import SymbolFrame


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if math.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db) and self.snr_db > 0


def awgn(frame: SymbolFrame, cfg: ChannelConfig) -> SymbolFrame:
    """Add circularly symmetric complex Gaussian noise; reproducible per seed."""
    if cfg.noiseless or len(frame.symbols) == 0:
        return frame
    n0 = frame.power / (10.0 ** (cfg.snr_db / 10.0))
    if n0 == 0.0:
        return frame
    rng = np.random.default_rng(cfg.seed)
    comps = rng.standard_normal((len(frame.symbols), 2))
    noise = math.sqrt(n0 / 2.0) * (comps[:, 0] + 1j * comps[:, 1])
    return SymbolFrame(frame.symbols + noise, power=frame.power,
                       bit_count=frame.bit_count)


def ebn0_to_esn0(ebn0_db: float, bits_per_symbol: int, code_rate: float = 1.0) -> float:
    """Es/N0 carried by each symbol when every info bit gets Eb: Es = Eb * bps * rate."""
    return ebn0_db + 10.0 * math.log10(bits_per_symbol * code_rate)


def esn0_to_ebn0(esn0_db: float, bits_per_symbol: int, code_rate: float = 1.0) -> float:
    return esn0_db - 10.0 * math.log10(bits_per_symbol * code_rate)
