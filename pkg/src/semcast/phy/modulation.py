"""Gray-mapped digital modulation with hard-decision demapping.

Schemes: BPSK, QPSK, 16QAM, 64QAM at 1/2/4/6 bits per symbol, normalized to
unit average constellation power (factors 1, 1/sqrt(2) per axis, 1/sqrt(10),
1/sqrt(42)). Square QAM axes carry independent reflected-Gray labels, so
hard-decision demapping slices each axis separately.

Per-axis tables:
    BPSK / QPSK axis:  0 -> +1, 1 -> -1
    16QAM axis:        00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    64QAM axis:        000 -> -7, 001 -> -5, 011 -> -3, 010 -> -1,
                       110 -> +1, 111 -> +3, 101 -> +5, 100 -> +7

The first half of a symbol's bits (MSB-first) selects the I level, the rest Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# axis tables indexed by the per-axis Gray label (as an MSB-first integer)
_AXIS2 = np.array([1, -1], dtype=np.int64)
_AXIS4 = np.array([-3, -1, 3, 1], dtype=np.int64)
_AXIS8 = np.array([-7, -5, -1, -3, 7, 5, 1, 3], dtype=np.int64)


def _inverse_axis(table: np.ndarray) -> np.ndarray:
    """Map level position (amplitudes ascending) back to its Gray label."""
    levels = 2 * np.arange(len(table)) - (len(table) - 1)
    inv = np.empty(len(table), dtype=np.int64)
    for pos, amp in enumerate(levels):
        matches = np.flatnonzero(table == amp)
        assert len(matches) == 1
        inv[pos] = matches[0]
    return inv


@dataclass(frozen=True)
class Modulation:
    name: str
    bits_per_symbol: int
    axis_table: np.ndarray = field(repr=False)
    scale: float
    complex_axes: bool  # False: real-only (BPSK)

    @property
    def axis_bits(self) -> int:
        return self.bits_per_symbol // (2 if self.complex_axes else 1)

    @property
    def levels_per_axis(self) -> int:
        return 1 << self.axis_bits


_SCHEMES = {
    "bpsk": Modulation("bpsk", 1, _AXIS2, 1.0, complex_axes=False),
    "qpsk": Modulation("qpsk", 2, _AXIS2, 1.0 / math.sqrt(2.0), complex_axes=True),
    "16qam": Modulation("16qam", 4, _AXIS4, 1.0 / math.sqrt(10.0), complex_axes=True),
    "64qam": Modulation("64qam", 6, _AXIS8, 1.0 / math.sqrt(42.0), complex_axes=True),
}

MODULATION_ORDER = ("bpsk", "qpsk", "16qam", "64qam")


def make_modulation(name: str) -> Modulation:
    key = name.lower()
    if key not in _SCHEMES:
        raise ValueError(f"unknown modulation {name!r}; choose from {MODULATION_ORDER}")
    return _SCHEMES[key]


@dataclass(frozen=True)
class SymbolFrame:
    """Complex baseband symbols with a declared average power.

    bit_count records the unpadded bit length for modulated frames so the
    demapper can strip padding; analog frames leave it None.
    """

    symbols: np.ndarray
    power: float = 1.0
    bit_count: int | None = None

    def __post_init__(self):
        s = self.symbols
        if not isinstance(s, np.ndarray) or s.ndim != 1 or s.dtype != np.complex128:
            raise ValueError("symbols must be a 1-D complex128 array")
        if not (self.power >= 0.0 and math.isfinite(self.power)):
            raise ValueError(f"declared power must be finite and >= 0, got {self.power}")

    def empirical_power(self) -> float:
        if len(self.symbols) == 0:
            return 0.0
        return float(np.mean(np.abs(self.symbols) ** 2))


def _axis_labels(bits: np.ndarray, axis_bits: int) -> np.ndarray:
    # (n, axis_bits) MSB-first -> integer labels
    weights = 1 << np.arange(axis_bits - 1, -1, -1, dtype=np.int64)
    return bits.astype(np.int64) @ weights


def modulate(bits: np.ndarray, scheme: Modulation) -> SymbolFrame:
    b = np.asarray(bits, dtype=np.uint8).reshape(-1)
    bps = scheme.bits_per_symbol
    pad = (-len(b)) % bps
    if pad:
        b = np.concatenate([b, np.zeros(pad, dtype=np.uint8)])
    groups = b.reshape(-1, bps)
    if scheme.complex_axes:
        half = scheme.axis_bits
        i_amp = scheme.axis_table[_axis_labels(groups[:, :half], half)]
        q_amp = scheme.axis_table[_axis_labels(groups[:, half:], half)]
        symbols = scheme.scale * (i_amp + 1j * q_amp)
    else:
        amp = scheme.axis_table[_axis_labels(groups, bps)]
        symbols = scheme.scale * (amp + 0j)
    return SymbolFrame(symbols.astype(np.complex128), power=1.0,
                       bit_count=len(b) - pad)


_INVERSE_CACHE: dict[str, np.ndarray] = {}


def _slice_axis(component: np.ndarray, scheme: Modulation) -> np.ndarray:
    """Nearest level per axis, returned as Gray labels."""
    levels = scheme.levels_per_axis
    scaled = component / scheme.scale
    pos = np.floor((scaled + levels) / 2.0).astype(np.int64)
    np.clip(pos, 0, levels - 1, out=pos)
    inv = _INVERSE_CACHE.get(scheme.name)
    if inv is None:
        inv = _INVERSE_CACHE.setdefault(scheme.name, _inverse_axis(scheme.axis_table))
    return inv[pos]


def _labels_to_bits(labels: np.ndarray, width: int) -> np.ndarray:
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((labels[:, None] >> shifts) & 1).astype(np.uint8)


def demodulate(frame: SymbolFrame, scheme: Modulation) -> np.ndarray:
    s = frame.symbols
    if scheme.complex_axes:
        half = scheme.axis_bits
        i_bits = _labels_to_bits(_slice_axis(s.real, scheme), half)
        q_bits = _labels_to_bits(_slice_axis(s.imag, scheme), half)
        bits = np.concatenate([i_bits, q_bits], axis=1).reshape(-1)
    else:
        bits = _labels_to_bits(_slice_axis(s.real, scheme), scheme.bits_per_symbol).reshape(-1)
    if frame.bit_count is not None:
        bits = bits[:frame.bit_count]
    return bits
