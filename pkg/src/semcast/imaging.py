"""Raster primitives: image buffers, grayscale conversion, median filtering,
block-mean downsampling, deterministic resampling, PNG I/O.

Conventions used throughout the package:
  - pixel arrays are row-major numpy uint8, shape (h, w, 3) for RGB and
    (h, w) for grayscale;
  - rounding is round-half-up (ties toward +inf);
  - window/interpolation borders are handled by edge replication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

MAX_SIDE = 65535  # images wider than 2^16 px per side are out of scope

# BT.601 luma weights
_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114


def round_half_up(x: np.ndarray | float) -> np.ndarray | float:
    """Round with ties toward +inf (0.5 -> 1, 1.5 -> 2)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def _check_dims(width: int, height: int) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"image dims must be >= 1, got {width}x{height}")
    if width > MAX_SIDE or height > MAX_SIDE:
        raise ValueError(f"image side exceeds {MAX_SIDE}: {width}x{height}")


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB raster, pixels shaped (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.dtype != np.uint8 or p.ndim != 3 or p.shape[2] != 3:
            raise ValueError("RgbImage.pixels must be a uint8 array of shape (h, w, 3)")
        _check_dims(p.shape[1], p.shape[0])

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def full(cls, width: int, height: int, rgb=(0, 0, 0)) -> "RgbImage":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = np.asarray(rgb, dtype=np.uint8)
        return cls(px)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, samples shaped (height, width)."""

    samples: np.ndarray

    def __post_init__(self):
        s = self.samples
        if not isinstance(s, np.ndarray) or s.dtype != np.uint8 or s.ndim != 2:
            raise ValueError("GrayImage.samples must be a uint8 array of shape (h, w)")
        _check_dims(s.shape[1], s.shape[0])

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def full(cls, width: int, height: int, value: int = 0) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.uint8))


@dataclass(frozen=True)
class BlockGrid:
    """Partition of an image into cols x rows rectangular blocks.

    Blocks tile the source exactly. When a dimension is not divisible the
    remainder pixels go one-per-block to the trailing blocks, so block
    extents along an axis differ by at most one pixel.
    """

    cols: int
    rows: int

    def __post_init__(self):
        if self.cols < 1 or self.rows < 1:
            raise ValueError(f"grid must be >= 1x1, got {self.cols}x{self.rows}")

    @staticmethod
    def edges(size: int, blocks: int) -> np.ndarray:
        """Block boundaries along one axis: blocks+1 increasing offsets."""
        if blocks > size:
            raise ValueError(f"grid of {blocks} blocks larger than dimension {size}")
        base, rem = divmod(size, blocks)
        widths = np.full(blocks, base, dtype=np.int64)
        if rem:
            widths[-rem:] += 1
        return np.concatenate(([0], np.cumsum(widths)))

    def col_edges(self, width: int) -> np.ndarray:
        return self.edges(width, self.cols)

    def row_edges(self, height: int) -> np.ndarray:
        return self.edges(height, self.rows)


def to_grayscale(img: RgbImage) -> GrayImage:
    """BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255]."""
    p = img.pixels.astype(np.float64)
    luma = _LUMA_R * p[:, :, 0] + _LUMA_G * p[:, :, 1] + _LUMA_B * p[:, :, 2]
    return GrayImage(np.clip(round_half_up(luma), 0, 255).astype(np.uint8))


def median_filter(img: RgbImage, radius: int) -> RgbImage:
    """Per-channel median over a (2r+1) x (2r+1) window, edge-replicated borders.

    radius must be 1, 2 or 3 (window side 3, 5 or 7); the window always holds
    an odd number of samples so the median is a single order statistic.
    """
    if radius not in (1, 2, 3):
        raise ValueError(f"median radius must be 1, 2 or 3, got {radius}")
    side = 2 * radius + 1
    padded = np.pad(img.pixels, ((radius, radius), (radius, radius), (0, 0)), mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (side, side), axis=(0, 1))
    # windows: (h, w, 3, side, side); median over the window axes
    out = np.median(windows, axis=(3, 4)).astype(np.uint8)
    return RgbImage(out)


def _block_reduce_mean(arr: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Round-half-up block means; arr is (h, w) or (h, w, c)."""
    h, w = arr.shape[:2]
    xs = grid.col_edges(w)
    ys = grid.row_edges(h)
    acc = arr.astype(np.float64)
    # Two cumulative-sum reductions: rows then cols, via add.reduceat.
    row_sum = np.add.reduceat(acc, ys[:-1], axis=0)
    cell_sum = np.add.reduceat(row_sum, xs[:-1], axis=1)
    areas = np.outer(np.diff(ys), np.diff(xs)).astype(np.float64)
    if arr.ndim == 3:
        areas = areas[:, :, None]
    return np.clip(round_half_up(cell_sum / areas), 0, 255).astype(np.uint8)


def block_mean_downsample(img: RgbImage | GrayImage, grid: BlockGrid):
    """Downsample to grid dimensions; each output sample is the round-half-up
    mean of its block, per channel. Returns the same image kind as the input.
    """
    if isinstance(img, RgbImage):
        return RgbImage(_block_reduce_mean(img.pixels, grid))
    return GrayImage(_block_reduce_mean(img.samples, grid))


def _nearest_indices(target: int, source: int) -> np.ndarray:
    # floor index mapping: dst i covers source floor(i * source / target)
    return (np.arange(target, dtype=np.int64) * source) // target


def _bilinear_axis(target: int, source: int):
    # half-pixel-aligned source coordinates, edge-clamped
    coords = (np.arange(target, dtype=np.float64) + 0.5) * (source / target) - 0.5
    coords = np.clip(coords, 0.0, source - 1.0)
    lo = np.floor(coords).astype(np.int64)
    hi = np.minimum(lo + 1, source - 1)
    frac = coords - lo
    return lo, hi, frac


def _upsample_array(arr: np.ndarray, target_w: int, target_h: int, mode: str) -> np.ndarray:
    h, w = arr.shape[:2]
    if mode == "nearest":
        ys = _nearest_indices(target_h, h)
        xs = _nearest_indices(target_w, w)
        return arr[np.ix_(ys, xs)]
    if mode == "bilinear":
        y_lo, y_hi, fy = _bilinear_axis(target_h, h)
        x_lo, x_hi, fx = _bilinear_axis(target_w, w)
        a = arr.astype(np.float64)
        if arr.ndim == 3:
            fx = fx[:, None]
            fy = fy[:, None, None]
        else:
            fy = fy[:, None]
        top = a[y_lo][:, x_lo] * (1 - fx) + a[y_lo][:, x_hi] * fx
        bot = a[y_hi][:, x_lo] * (1 - fx) + a[y_hi][:, x_hi] * fx
        out = top * (1 - fy) + bot * fy
        return np.clip(round_half_up(out), 0, 255).astype(np.uint8)
    raise ValueError(f"unknown resampling mode: {mode!r}")


def upsample(img: RgbImage | GrayImage, target_w: int, target_h: int, mode: str = "nearest"):
    """Deterministic enlargement to (target_w, target_h), nearest or bilinear."""
    if target_w < img.width or target_h < img.height:
        raise ValueError(
            f"upsample cannot shrink: {img.width}x{img.height} -> {target_w}x{target_h}"
        )
    _check_dims(target_w, target_h)
    if isinstance(img, RgbImage):
        return RgbImage(np.ascontiguousarray(_upsample_array(img.pixels, target_w, target_h, mode)))
    return GrayImage(np.ascontiguousarray(_upsample_array(img.samples, target_w, target_h, mode)))


def read_rgb_png(path) -> RgbImage:
    """Read a PNG as RGB; alpha is dropped, palette/gray files are expanded."""
    with Image.open(path) as im:
        return RgbImage(np.asarray(im.convert("RGB"), dtype=np.uint8))


def read_gray_png(path) -> GrayImage:
    """Read a PNG as grayscale; color files go through to_grayscale."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "1"):
            return GrayImage(np.asarray(im.convert("L"), dtype=np.uint8))
        rgb = RgbImage(np.asarray(im.convert("RGB"), dtype=np.uint8))
    return to_grayscale(rgb)


def write_png(img: RgbImage | GrayImage, path) -> None:
    arr = img.pixels if isinstance(img, RgbImage) else img.samples
    Image.fromarray(arr).save(path, format="PNG")
