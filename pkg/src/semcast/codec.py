"""Framed bitstream codec for semantic payloads.

Fixed-width packing with exact bit accounting; no entropy coding. The layout
(little-endian bit packing, LSB-first within each value) is:

    header:  magic(32) version(8) source_w(16) source_h(16)
             color_cols(16) color_rows(16) tex_cols(16) tex_rows(16)
             color_bits(8) tex_bits(8) palette_flag(8)
             [palette: 2^tex_bits entries x 8]
    body:    color cells row-major, R/G/B at color_bits each
             texture cells row-major at tex_bits each
             varint(text byte length) + text bytes
    trailer: CRC-32 over header+body bits (32)

total_bits = header_bits + body_bits + 32. Quantization is uniform mid-rise;
texture may instead use a palette of the 2^tex_bits most frequent codes.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import EncodingError, FormatError, IntegrityError
from .features import ColorMosaic, SemanticPayload, TextureMap

MAGIC = b"SMC1"
VERSION = 1
FIXED_HEADER_BITS = 32 + 8 + 2 * 16 + 4 * 16 + 3 * 8  # 160
CRC_BITS = 32
MAX_TEXT_BYTES = 1024


@dataclass(frozen=True)
class QuantizationSpec:
    """Bit depths for the packed feature fields."""

    color_bits: int = 8        # per channel, 2..8
    texture_bits: int = 8      # 1..8
    texture_palette: bool = False

    def __post_init__(self):
        if not 2 <= self.color_bits <= 8:
            raise ValueError(f"color_bits must be in 2..8, got {self.color_bits}")
        if not 1 <= self.texture_bits <= 8:
            raise ValueError(f"texture_bits must be in 1..8, got {self.texture_bits}")


def quantize_uniform(values: np.ndarray, bits: int) -> np.ndarray:
    """Uniform mid-rise quantizer: [0,256) split into 2^bits equal levels."""
    v = np.asarray(values, dtype=np.uint32)
    return ((v << bits) >> 8).astype(np.uint32)


def dequantize_uniform(levels: np.ndarray, bits: int) -> np.ndarray:
    """Level centers mapped back to the integer range: floor((q+0.5) * 256/2^b)."""
    q = np.asarray(levels, dtype=np.uint32)
    return (((2 * q + 1) << 8) >> (bits + 1)).astype(np.uint8)


def build_texture_palette(cells: np.ndarray, bits: int) -> np.ndarray:
    """2^bits entries: the most frequent code values, frequency ties to the
    lower value; padded with zeros when there are fewer distinct codes."""
    counts = np.bincount(cells.reshape(-1), minlength=256)
    order = np.lexsort((np.arange(256), -counts))  # by count desc, then value asc
    present = order[counts[order] > 0]
    size = 1 << bits
    palette = np.zeros(size, dtype=np.uint8)
    take = min(size, len(present))
    palette[:take] = present[:take]
    return palette


def palette_assign(cells: np.ndarray, palette: np.ndarray) -> np.ndarray:
    """Index of the nearest palette entry per cell; distance ties go to the
    lower entry value, then the lower index."""
    entries = palette.astype(np.int64)
    dist = np.abs(np.arange(256)[:, None] - entries[None, :])
    # lexicographic argmin over (distance, entry value, index)
    rank = dist * (256 * len(entries)) + entries * len(entries) + np.arange(len(entries))
    lut = np.argmin(rank, axis=1).astype(np.uint32)
    return lut[cells.reshape(-1)].reshape(cells.shape)


class BitWriter:
    """Append-only bit buffer, values written LSB-first."""

    def __init__(self):
        self._chunks: list[np.ndarray] = []
        self.bit_count = 0

    def write_uint(self, value: int, width: int) -> None:
        if value < 0 or value >> width:
            raise EncodingError(f"value {value} does not fit in {width} bits")
        bits = (value >> np.arange(width, dtype=np.uint32)) & 1
        self._chunks.append(bits.astype(np.uint8))
        self.bit_count += width

    def write_array(self, values: np.ndarray, width: int) -> None:
        v = np.asarray(values, dtype=np.uint32).reshape(-1)
        if v.size and int(v.max()) >> width:
            raise EncodingError(f"array value exceeds {width} bits")
        bits = ((v[:, None] >> np.arange(width, dtype=np.uint32)) & 1).astype(np.uint8)
        self._chunks.append(bits.reshape(-1))
        self.bit_count += v.size * width

    def write_bytes(self, data: bytes) -> None:
        arr = np.frombuffer(data, dtype=np.uint8)
        self._chunks.append(np.unpackbits(arr, bitorder="little"))
        self.bit_count += 8 * len(data)

    def getbits(self) -> np.ndarray:
        if not self._chunks:
            return np.zeros(0, dtype=np.uint8)
        return np.concatenate(self._chunks)


class BitReader:
    def __init__(self, bits: np.ndarray):
        self.bits = bits
        self.pos = 0

    def remaining(self) -> int:
        return len(self.bits) - self.pos

    def read_uint(self, width: int) -> int:
        if self.remaining() < width:
            raise FormatError("bitstream truncated")
        chunk = self.bits[self.pos:self.pos + width].astype(np.uint64)
        self.pos += width
        return int((chunk << np.arange(width, dtype=np.uint64)).sum())

    def read_array(self, count: int, width: int) -> np.ndarray:
        total = count * width
        if self.remaining() < total:
            raise FormatError("bitstream truncated")
        chunk = self.bits[self.pos:self.pos + total].reshape(count, width).astype(np.uint32)
        self.pos += total
        weights = (np.uint32(1) << np.arange(width, dtype=np.uint32))
        return (chunk * weights).sum(axis=1).astype(np.uint32)

    def read_bytes(self, count: int) -> bytes:
        total = 8 * count
        if self.remaining() < total:
            raise FormatError("bitstream truncated")
        chunk = self.bits[self.pos:self.pos + total]
        self.pos += total
        return np.packbits(chunk, bitorder="little").tobytes()


def _varint_encode(value: int) -> bytes:
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _varint_read(reader: BitReader) -> int:
    value = 0
    shift = 0
    while True:
        byte = reader.read_uint(8)
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value
        shift += 7
        if shift > 28:
            raise FormatError("varint too long")


def varint_bit_length(value: int) -> int:
    """Bits the length prefix occupies; used by the accounting helpers."""
    return 8 * len(_varint_encode(value))


@dataclass(frozen=True, eq=False)
class Bitstream:
    """A framed serialized payload: a flat array of 0/1 uint8 bits."""

    bits: np.ndarray

    def __post_init__(self):
        b = self.bits
        if not isinstance(b, np.ndarray) or b.dtype != np.uint8 or b.ndim != 1:
            raise ValueError("Bitstream.bits must be a 1-D uint8 array of 0/1")

    def __eq__(self, other):
        if not isinstance(other, Bitstream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    @property
    def total_bits(self) -> int:
        return len(self.bits)

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits, bitorder="little").tobytes()

    def save(self, path) -> None:
        payload = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(len(self.bits).to_bytes(4, "little"))
            fh.write(payload)

    @classmethod
    def load(cls, path) -> "Bitstream":
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < 4:
            raise FormatError("bitstream file too short")
        nbits = int.from_bytes(raw[:4], "little")
        packed = np.frombuffer(raw[4:], dtype=np.uint8)
        if len(packed) != (nbits + 7) // 8:
            raise FormatError("bitstream file length does not match bit count")
        bits = np.unpackbits(packed, bitorder="little")[:nbits]
        return cls(bits)


@dataclass(frozen=True)
class BitstreamHeader:
    """Parsed header fields plus the derived bit accounting."""

    version: int
    source_size: tuple[int, int]
    color_grid: tuple[int, int]   # (cols, rows)
    texture_grid: tuple[int, int]
    color_bits: int
    texture_bits: int
    texture_palette: bool
    palette: np.ndarray | None
    text_bytes: int
    header_bits: int
    body_bits: int

    @property
    def total_bits(self) -> int:
        return self.header_bits + self.body_bits + CRC_BITS


def _crc_of(bits: np.ndarray) -> int:
    return zlib.crc32(np.packbits(bits, bitorder="little").tobytes()) & 0xFFFFFFFF


def encode_payload(payload: SemanticPayload, quant: QuantizationSpec) -> Bitstream:
    """Serialize a payload to a CRC-framed bitstream at the given depths."""
    text_raw = payload.text.encode("utf-8")
    if not text_raw:
        raise EncodingError("caption text must be non-empty")
    if len(text_raw) > MAX_TEXT_BYTES:
        raise EncodingError(f"caption exceeds {MAX_TEXT_BYTES} bytes")

    w = BitWriter()
    w.write_bytes(MAGIC)
    w.write_uint(VERSION, 8)
    sw, sh = payload.source_size
    w.write_uint(sw, 16)
    w.write_uint(sh, 16)
    w.write_uint(payload.color.cols, 16)
    w.write_uint(payload.color.rows, 16)
    w.write_uint(payload.texture.cols, 16)
    w.write_uint(payload.texture.rows, 16)
    w.write_uint(quant.color_bits, 8)
    w.write_uint(quant.texture_bits, 8)
    w.write_uint(1 if quant.texture_palette else 0, 8)
    if quant.texture_palette:
        palette = build_texture_palette(payload.texture.cells, quant.texture_bits)
        w.write_array(palette, 8)

    w.write_array(quantize_uniform(payload.color.cells, quant.color_bits), quant.color_bits)
    if quant.texture_palette:
        w.write_array(palette_assign(payload.texture.cells, palette), quant.texture_bits)
    else:
        w.write_array(quantize_uniform(payload.texture.cells, quant.texture_bits),
                      quant.texture_bits)
    w.write_bytes(_varint_encode(len(text_raw)))
    w.write_bytes(text_raw)

    bits = w.getbits()
    tail = BitWriter()
    tail.write_uint(_crc_of(bits), CRC_BITS)
    return Bitstream(np.concatenate([bits, tail.getbits()]))


def parse_header(stream: Bitstream) -> BitstreamHeader:
    """Parse and sanity-check the header; raises FormatError on structural damage."""
    r = BitReader(stream.bits)
    if r.remaining() < FIXED_HEADER_BITS:
        raise FormatError("bitstream shorter than fixed header")
    if r.read_bytes(4) != MAGIC:
        raise FormatError("bad magic")
    version = r.read_uint(8)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    sw = r.read_uint(16)
    sh = r.read_uint(16)
    c_cols = r.read_uint(16)
    c_rows = r.read_uint(16)
    t_cols = r.read_uint(16)
    t_rows = r.read_uint(16)
    color_bits = r.read_uint(8)
    tex_bits = r.read_uint(8)
    flag = r.read_uint(8)
    if flag not in (0, 1):
        raise FormatError("bad palette flag")
    if not (2 <= color_bits <= 8 and 1 <= tex_bits <= 8):
        raise FormatError("bad bit depths")
    if min(sw, sh, c_cols, c_rows, t_cols, t_rows) < 1:
        raise FormatError("zero dimension in header")
    palette = None
    if flag:
        palette = r.read_array(1 << tex_bits, 8).astype(np.uint8)
    header_bits = r.pos

    feature_bits = c_cols * c_rows * 3 * color_bits + t_cols * t_rows * tex_bits
    if r.remaining() < feature_bits + 8 + CRC_BITS:
        raise FormatError("bitstream truncated")
    r.pos += feature_bits
    text_bytes = _varint_read(r)
    body_bits = feature_bits + (r.pos - header_bits - feature_bits) + 8 * text_bytes
    if header_bits + body_bits + CRC_BITS != stream.total_bits:
        raise FormatError("bitstream length does not match header accounting")
    return BitstreamHeader(
        version=version,
        source_size=(sw, sh),
        color_grid=(c_cols, c_rows),
        texture_grid=(t_cols, t_rows),
        color_bits=color_bits,
        texture_bits=tex_bits,
        texture_palette=bool(flag),
        palette=palette,
        text_bytes=text_bytes,
        header_bits=header_bits,
        body_bits=body_bits,
    )


def verify(stream: Bitstream) -> BitstreamHeader:
    """Structural parse plus CRC check; FormatError or IntegrityError on damage."""
    header = parse_header(stream)
    content = stream.bits[:header.header_bits + header.body_bits]
    tail = BitReader(stream.bits[header.header_bits + header.body_bits:])
    if _crc_of(content) != tail.read_uint(CRC_BITS):
        raise IntegrityError("CRC mismatch")
    return header


def decode_payload(stream: Bitstream) -> SemanticPayload:
    """Inverse of encode_payload at the declared precision."""
    header = verify(stream)
    r = BitReader(stream.bits)
    r.pos = header.header_bits

    c_cols, c_rows = header.color_grid
    t_cols, t_rows = header.texture_grid
    color_levels = r.read_array(c_cols * c_rows * 3, header.color_bits)
    color_cells = dequantize_uniform(color_levels, header.color_bits).reshape(c_rows, c_cols, 3)
    tex_raw = r.read_array(t_cols * t_rows, header.texture_bits)
    if header.texture_palette:
        tex_cells = header.palette[np.minimum(tex_raw, len(header.palette) - 1)]
    else:
        tex_cells = dequantize_uniform(tex_raw, header.texture_bits)
    tex_cells = tex_cells.reshape(t_rows, t_cols).astype(np.uint8)
    text_len = _varint_read(r)
    text = r.read_bytes(text_len).decode("utf-8", errors="replace")

    try:
        color = ColorMosaic(color_cells, header.source_size)
        texture = TextureMap(tex_cells, header.source_size)
        return SemanticPayload(text=text, color=color, texture=texture)
    except ValueError as exc:
        raise FormatError(f"decoded fields violate payload invariants: {exc}") from exc


def bpp(stream: Bitstream, source_size: tuple[int, int]) -> float:
    """Source bits per pixel: total stream bits over source pixel count.

    Channel-coding redundancy never appears here; FEC expansion happens after
    serialization and is excluded from the accounting by construction.
    """
    w, h = source_size
    if w < 1 or h < 1:
        raise ValueError(f"source dims must be positive, got {w}x{h}")
    return stream.total_bits / (w * h)


def expected_stream_bits(color_grid: tuple[int, int], texture_grid: tuple[int, int],
                         quant: QuantizationSpec, text_bytes: int) -> int:
    """Closed-form size of an encoded stream; mirrors the layout docstring."""
    header = FIXED_HEADER_BITS + ((1 << quant.texture_bits) * 8 if quant.texture_palette else 0)
    body = (color_grid[0] * color_grid[1] * 3 * quant.color_bits
            + texture_grid[0] * texture_grid[1] * quant.texture_bits
            + varint_bit_length(text_bytes) + 8 * text_bytes)
    return header + body + CRC_BITS
