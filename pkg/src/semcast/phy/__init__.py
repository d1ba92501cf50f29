"""Physical layer: modulation, AWGN channel, FEC, and the two transports."""

from .channel import ChannelConfig, awgn, ebn0_to_esn0, esn0_to_ebn0
from .fec import FecScheme, IdentityFec, LdpcFec, RepetitionFec, make_fec
from .modulation import (
    MODULATION_ORDER,
    Modulation,
    SymbolFrame,
    demodulate,
    make_modulation,
    modulate,
)
from .transport import (
    AnalogResult,
    ChannelUsage,
    DigitalResult,
    transmit_analog,
    transmit_digital,
)

__all__ = [
    "AnalogResult",
    "ChannelConfig",
    "ChannelUsage",
    "DigitalResult",
    "FecScheme",
    "IdentityFec",
    "LdpcFec",
    "MODULATION_ORDER",
    "Modulation",
    "RepetitionFec",
    "SymbolFrame",
    "awgn",
    "demodulate",
    "ebn0_to_esn0",
    "esn0_to_ebn0",
    "make_fec",
    "make_modulation",
    "modulate",
    "transmit_analog",
    "transmit_digital",
]
