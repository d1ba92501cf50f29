"""semcast: semantic feature transmission of images over simulated channels.

An image is decomposed into a caption, a color mosaic, and a texture map; the
three ride a framed bitstream (digital, FEC + Gray-mapped modulation) or the
raw channel (analog feature amplitudes), and the receiver rebuilds a picture
from whatever arrived, locally or through a pluggable remote restorer.
"""

from .codec import (
    Bitstream,
    BitstreamHeader,
    QuantizationSpec,
    bpp,
    decode_payload,
    encode_payload,
)
from .errors import (
    CaptionError,
    EncodingError,
    FairnessError,
    FormatError,
    IntegrityError,
    LdpcConstructionError,
    MetricError,
    RestorationError,
    SemcastError,
)
from .features import (
    ColorMosaic,
    ExtractionProfile,
    FillTextureRegion,
    FixedCaption,
    LbpConfig,
    SemanticPayload,
    SetText,
    TextureMap,
    TintColorRegion,
    decompose,
    edit_payload,
    extract_color,
    extract_texture,
    lbp_map,
)
from .imaging import (
    BlockGrid,
    GrayImage,
    RgbImage,
    block_mean_downsample,
    median_filter,
    read_rgb_png,
    to_grayscale,
    upsample,
    write_png,
)
from .metrics import TransmissionReport, ber, mse, psnr, ser
from .phy import (
    ChannelConfig,
    ChannelUsage,
    DigitalResult,
    IdentityFec,
    LdpcFec,
    RepetitionFec,
    SymbolFrame,
    awgn,
    demodulate,
    make_fec,
    make_modulation,
    modulate,
    transmit_analog,
    transmit_digital,
)
from .restore import (
    FallbackBackend,
    RemoteBackend,
    RestorationRequest,
    compose_fallback,
    make_backend,
    restore,
)
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "BlockGrid",
    "Bitstream",
    "BitstreamHeader",
    "CaptionError",
    "ChannelConfig",
    "ChannelUsage",
    "ColorMosaic",
    "DigitalResult",
    "EncodingError",
    "ExtractionProfile",
    "FairnessError",
    "FallbackBackend",
    "FillTextureRegion",
    "FixedCaption",
    "FormatError",
    "GrayImage",
    "IdentityFec",
    "IntegrityError",
    "LbpConfig",
    "LdpcConstructionError",
    "LdpcFec",
    "MetricError",
    "QuantizationSpec",
    "RemoteBackend",
    "RepetitionFec",
    "RestorationError",
    "RestorationRequest",
    "RgbImage",
    "SemanticPayload",
    "SemcastError",
    "SetText",
    "SymbolFrame",
    "TextureMap",
    "TintColorRegion",
    "TransmissionReport",
    "awgn",
    "ber",
    "block_mean_downsample",
    "bpp",
    "compose_fallback",
    "decode_payload",
    "decompose",
    "demodulate",
    "derive_seed",
    "edit_payload",
    "encode_payload",
    "extract_color",
    "extract_texture",
    "lbp_map",
    "make_backend",
    "make_fec",
    "make_modulation",
    "median_filter",
    "modulate",
    "mse",
    "psnr",
    "read_rgb_png",
    "restore",
    "ser",
    "to_grayscale",
    "transmit_analog",
    "transmit_digital",
    "upsample",
    "write_png",
    "__version__",
]
