"""Semantic feature decomposition: caption text, color mosaic, LBP texture map.

The payload produced here is what crosses the channel: a short natural
language description, a heavily downsampled color mosaic, and a downsampled
local-binary-pattern texture image. Extra named feature maps can be attached
through the extension registry without touching the core pipeline.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CaptionError
from .imaging import (
    BlockGrid,
    GrayImage,
    RgbImage,
    block_mean_downsample,
    median_filter,
    to_grayscale,
    write_png,
)

MAX_CAPTION_BYTES = 1024

# Reserved extension slot for a depth map feature; no extractor is bundled.
DEPTH_SLOT = "depth"


@dataclass(frozen=True)
class LbpConfig:
    """3x3 local binary pattern layout.

    Neighbors are visited clockwise from the top-left corner; neighbor k
    contributes 2^k when strictly brighter than the center pixel.
    """

    offsets: tuple[tuple[int, int], ...] = (
        (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1),
    )

    def __post_init__(self):
        if len(self.offsets) != 8:
            raise ValueError("LBP neighborhood must have exactly 8 neighbors")
        if len(set(self.offsets)) != 8 or (0, 0) in self.offsets:
            raise ValueError("LBP offsets must be 8 distinct non-center positions")
        for dy, dx in self.offsets:
            if abs(dy) > 1 or abs(dx) > 1:
                raise ValueError("LBP neighborhood is the 8-connected 3x3 ring")

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(1 << k for k in range(8))


@dataclass(frozen=True, eq=False)
class ColorMosaic:
    """Block-mean color cells: (rows, cols, 3) uint8, plus source image dims."""

    cells: np.ndarray
    source_size: tuple[int, int]  # (width, height)

    def __post_init__(self):
        c = self.cells
        if not isinstance(c, np.ndarray) or c.dtype != np.uint8 or c.ndim != 3 or c.shape[2] != 3:
            raise ValueError("ColorMosaic.cells must be uint8 of shape (rows, cols, 3)")
        w, h = self.source_size
        if c.shape[1] > w or c.shape[0] > h:
            raise ValueError("mosaic grid larger than source image")

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ColorMosaic):
            return NotImplemented
        return (self.source_size == other.source_size
                and np.array_equal(self.cells, other.cells))


@dataclass(frozen=True, eq=False)
class TextureMap:
    """Downsampled LBP code intensities: (rows, cols) uint8, plus source dims."""

    cells: np.ndarray
    source_size: tuple[int, int]
    lbp: LbpConfig = field(default_factory=LbpConfig)

    def __post_init__(self):
        c = self.cells
        if not isinstance(c, np.ndarray) or c.dtype != np.uint8 or c.ndim != 2:
            raise ValueError("TextureMap.cells must be uint8 of shape (rows, cols)")
        w, h = self.source_size
        if c.shape[1] > w or c.shape[0] > h:
            raise ValueError("texture grid larger than source image")

    @property
    def cols(self) -> int:
        return self.cells.shape[1]

    @property
    def rows(self) -> int:
        return self.cells.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TextureMap):
            return NotImplemented
        return (self.source_size == other.source_size
                and self.lbp == other.lbp
                and np.array_equal(self.cells, other.cells))


@dataclass(frozen=True, eq=False)
class SemanticPayload:
    """The transmitted feature set: caption text, color mosaic, texture map."""

    text: str
    color: ColorMosaic
    texture: TextureMap
    extensions: dict[str, GrayImage] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.text.encode("utf-8")) > MAX_CAPTION_BYTES:
            raise ValueError(f"caption exceeds {MAX_CAPTION_BYTES} bytes")
        if self.color.source_size != self.texture.source_size:
            raise ValueError("color and texture must reference the same source dims")

    @property
    def source_size(self) -> tuple[int, int]:
        return self.color.source_size

    def __eq__(self, other):
        if not isinstance(other, SemanticPayload):
            return NotImplemented
        return (self.text == other.text
                and self.color == other.color
                and self.texture == other.texture
                and self.extensions == other.extensions)


def lbp_map(img: GrayImage, cfg: LbpConfig | None = None) -> GrayImage:
    """Per-pixel 8-bit LBP code from strict greater-than comparisons.

    code(x, y) = sum_k 2^k * [g(neighbor_k) > g(x, y)], neighbors ordered
    clockwise from top-left. Border pixels use edge-replicated neighbors,
    so the output has the same dimensions as the input.
    """
    cfg = cfg or LbpConfig()
    if img.width < 3 or img.height < 3:
        raise ValueError(f"LBP needs at least 3x3, got {img.width}x{img.height}")
    g = img.samples
    h, w = g.shape
    padded = np.pad(g, 1, mode="edge")
    code = np.zeros((h, w), dtype=np.uint8)
    for k, (dy, dx) in enumerate(cfg.offsets):
        neighbor = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        code |= (neighbor > g).astype(np.uint8) << k
    return GrayImage(code)


def extract_texture(img: RgbImage, grid: BlockGrid, cfg: LbpConfig | None = None) -> TextureMap:
    """Grayscale -> LBP -> block-mean downsample; codes averaged as intensities."""
    cfg = cfg or LbpConfig()
    codes = lbp_map(to_grayscale(img), cfg)
    small = block_mean_downsample(codes, grid)
    return TextureMap(small.samples, (img.width, img.height), cfg)


def extract_color(img: RgbImage, grid: BlockGrid, median_radius: int) -> ColorMosaic:
    """Median filter then block-mean downsample to a color mosaic."""
    filtered = median_filter(img, median_radius)
    small = block_mean_downsample(filtered, grid)
    return ColorMosaic(small.pixels, (img.width, img.height))


# ---------------------------------------------------------------------------
# Caption sources
# ---------------------------------------------------------------------------

class CaptionSource:
    """Produces the caption text for an image; see the three implementations."""

    def get(self, img: RgbImage, image_path: Path | None) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class FixedCaption(CaptionSource):
    """Always returns the configured text."""

    text: str

    def get(self, img: RgbImage, image_path: Path | None) -> str:
        return self.text


@dataclass(frozen=True)
class SidecarCaption(CaptionSource):
    """Reads `<image>.txt` next to the image file (first 1024 bytes, UTF-8)."""

    def get(self, img: RgbImage, image_path: Path | None) -> str:
        if image_path is None:
            raise CaptionError("sidecar caption source needs the image path")
        sidecar = Path(image_path).with_suffix(Path(image_path).suffix + ".txt")
        if not sidecar.is_file():
            raise CaptionError(f"sidecar caption file missing: {sidecar}")
        data = sidecar.read_bytes()[:MAX_CAPTION_BYTES]
        return data.decode("utf-8", errors="replace").strip()


@dataclass(frozen=True)
class CommandCaption(CaptionSource):
    """Runs an external command with the image path appended; stdout is the caption."""

    argv: tuple[str, ...]
    timeout_s: float = 60.0

    def get(self, img: RgbImage, image_path: Path | None) -> str:
        if image_path is not None:
            return self._run(Path(image_path))
        with tempfile.TemporaryDirectory(prefix="semcast-caption-") as tmp:
            path = Path(tmp) / "input.png"
            write_png(img, path)
            return self._run(path)

    def _run(self, path: Path) -> str:
        try:
            proc = subprocess.run(
                [*self.argv, str(path)],
                capture_output=True,
                timeout=self.timeout_s,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise CaptionError(f"caption command failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise CaptionError(
                f"caption command exited {proc.returncode}: {proc.stderr.decode(errors='replace')[:200]}"
            )
        return proc.stdout.decode("utf-8", errors="replace").strip()


def caption(img: RgbImage, source: CaptionSource, image_path: Path | None = None) -> str:
    """Fetch a caption and enforce the non-empty / max-length contract."""
    text = source.get(img, image_path)
    if not text:
        raise CaptionError("caption source produced empty text")
    raw = text.encode("utf-8")
    if len(raw) > MAX_CAPTION_BYTES:
        text = raw[:MAX_CAPTION_BYTES].decode("utf-8", errors="ignore")
    return text


# ---------------------------------------------------------------------------
# Extension registry
# ---------------------------------------------------------------------------

# name -> extractor(img, profile) -> GrayImage. The "depth" slot is reserved
# for an external depth estimator; nothing is registered by default.
_EXTENSION_REGISTRY: dict = {}


def register_extension(name: str, extractor) -> None:
    if not name:
        raise ValueError("extension name must be non-empty")
    _EXTENSION_REGISTRY[name] = extractor


def unregister_extension(name: str) -> None:
    _EXTENSION_REGISTRY.pop(name, None)


def registered_extensions() -> tuple[str, ...]:
    return tuple(sorted(_EXTENSION_REGISTRY))


@dataclass(frozen=True)
class ExtractionProfile:
    """Everything decompose() needs: grids, median radius, caption source,
    and which registered extension features to attach."""

    color_grid: tuple[int, int]  # (cols, rows)
    texture_grid: tuple[int, int]
    median_radius: int = 1
    caption_source: CaptionSource = field(default_factory=lambda: FixedCaption("an image"))
    lbp: LbpConfig = field(default_factory=LbpConfig)
    extensions: tuple[str, ...] = ()


def decompose(img: RgbImage, profile: ExtractionProfile,
              image_path: Path | None = None) -> SemanticPayload:
    """Split an image into its transmitted feature set."""
    text = caption(img, profile.caption_source, image_path)
    color = extract_color(img, BlockGrid(*profile.color_grid), profile.median_radius)
    texture = extract_texture(img, BlockGrid(*profile.texture_grid), profile.lbp)
    extras: dict[str, GrayImage] = {}
    for name in profile.extensions:
        extractor = _EXTENSION_REGISTRY.get(name)
        if extractor is None:
            known = ", ".join(registered_extensions()) or "none"
            raise ValueError(
                f"extension feature {name!r} is not registered (registered: {known}; "
                f"reserved slot: {DEPTH_SLOT!r})"
            )
        extras[name] = extractor(img, profile)
    return SemanticPayload(text=text, color=color, texture=texture, extensions=extras)


# ---------------------------------------------------------------------------
# Payload edits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetText:
    text: str


@dataclass(frozen=True)
class TintColorRegion:
    """Fill a rect of mosaic cells (grid coordinates) with one RGB color."""

    rect: tuple[int, int, int, int]  # (x, y, w, h) in cells
    rgb: tuple[int, int, int]


@dataclass(frozen=True)
class FillTextureRegion:
    """Fill a rect of texture cells (grid coordinates) with one intensity."""

    rect: tuple[int, int, int, int]
    value: int


EditCommand = SetText | TintColorRegion | FillTextureRegion


def _check_rect(rect: tuple[int, int, int, int], cols: int, rows: int) -> None:
    x, y, w, h = rect
    if w < 1 or h < 1 or x < 0 or y < 0 or x + w > cols or y + h > rows:
        raise ValueError(f"rect {rect} outside {cols}x{rows} grid")


def edit_payload(payload: SemanticPayload, edit: EditCommand) -> SemanticPayload:
    """Apply one edit, returning a new payload; untouched fields are shared."""
    if isinstance(edit, SetText):
        if not edit.text:
            raise ValueError("caption text must be non-empty")
        return SemanticPayload(edit.text, payload.color, payload.texture, payload.extensions)
    if isinstance(edit, TintColorRegion):
        _check_rect(edit.rect, payload.color.cols, payload.color.rows)
        r, g, b = edit.rgb
        if not all(0 <= v <= 255 for v in (r, g, b)):
            raise ValueError(f"RGB out of range: {edit.rgb}")
        x, y, w, h = edit.rect
        cells = payload.color.cells.copy()
        cells[y:y + h, x:x + w] = np.array([r, g, b], dtype=np.uint8)
        color = ColorMosaic(cells, payload.color.source_size)
        return SemanticPayload(payload.text, color, payload.texture, payload.extensions)
    if isinstance(edit, FillTextureRegion):
        _check_rect(edit.rect, payload.texture.cols, payload.texture.rows)
        if not 0 <= edit.value <= 255:
            raise ValueError(f"texture value out of range: {edit.value}")
        x, y, w, h = edit.rect
        cells = payload.texture.cells.copy()
        cells[y:y + h, x:x + w] = edit.value
        texture = TextureMap(cells, payload.texture.source_size, payload.texture.lbp)
        return SemanticPayload(payload.text, payload.color, texture, payload.extensions)
    raise ValueError(f"unknown edit command: {edit!r}")
