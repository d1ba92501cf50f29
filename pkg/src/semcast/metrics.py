"""Transmission quality measures and the per-run report record.

Distortion is plain MSE/PSNR; perceptual metrics run as external command
plugins (an executable taking two PNG paths and printing one real) so no
model weights enter this package.
"""

from __future__ import annotations

import json
import math
import subprocess
import threading
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import MetricError
from .imaging import GrayImage, RgbImage

_PSNR_PEAK_SQ = 255.0 ** 2


def _as_array(image) -> np.ndarray:
    if isinstance(image, RgbImage):
        return image.pixels
    if isinstance(image, GrayImage):
        return image.samples
    return np.asarray(image)


def mse(a, b) -> float:
    x = _as_array(a)
    y = _as_array(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    d = x.astype(np.float64) - y.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a, b) -> float:
    """10*log10(255^2 / mse); infinite exactly when the images are identical."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(_PSNR_PEAK_SQ / err)


def ber(sent, received) -> float:
    s = np.asarray(sent).reshape(-1)
    r = np.asarray(received).reshape(-1)
    if len(s) != len(r):
        raise ValueError(f"length mismatch: {len(s)} vs {len(r)}")
    if len(s) == 0:
        return 0.0
    return float(np.count_nonzero(s != r) / len(s))


def ser(sent_symbols, received_symbols) -> float:
    return ber(sent_symbols, received_symbols)


# external metric plugins: name -> (argv prefix, per-plugin lock)
_PLUGINS: dict[str, tuple[tuple[str, ...], threading.Lock]] = {}


def register_metric_plugin(name: str, argv: list[str] | tuple[str, ...]) -> None:
    if not argv:
        raise ValueError("plugin argv must be non-empty")
    _PLUGINS[name] = (tuple(argv), threading.Lock())


def unregister_metric_plugin(name: str) -> None:
    _PLUGINS.pop(name, None)


def metric_plugin(name: str, png_a, png_b, timeout_s: float = 120.0) -> float:
    """Run a registered plugin on two PNG paths; its stdout is the value."""
    entry = _PLUGINS.get(name)
    if entry is None:
        raise MetricError(f"no metric plugin registered under {name!r}")
    argv, lock = entry
    cmd = [*argv, str(png_a), str(png_b)]
    with lock:
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout_s)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise MetricError(f"plugin {name!r} failed to run: {exc}") from exc
    if proc.returncode != 0:
        raise MetricError(
            f"plugin {name!r} exited {proc.returncode}: {proc.stderr.strip()[:200]}")
    try:
        return float(proc.stdout.strip())
    except ValueError as exc:
        raise MetricError(
            f"plugin {name!r} printed {proc.stdout.strip()[:80]!r}, not a real") from exc


def _encode_real(x: float | None):
    # strict JSON has no Infinity/NaN literals; use string sentinels
    if x is None:
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _decode_real(x):
    if x is None:
        return None
    if isinstance(x, str):
        return float(x)
    return float(x)


@dataclass(frozen=True)
class TransmissionReport:
    """One transmission's quality numbers plus the knobs that produced them."""

    bpp: float
    symbols_used: int
    ber: float
    ser: float
    color_mse: float
    texture_mse: float
    image_psnr_db: float | None  # None when no image was restored
    integrity_failed: bool
    seed: int
    snr_db: float
    scheme: str
    fec: str
    transport: str
    plugins: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for label, rate in (("ber", self.ber), ("ser", self.ser)):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{label} must lie in [0,1], got {rate}")
        # NaN marks "no received features" on failed runs; negatives are bugs
        if self.color_mse < 0 or self.texture_mse < 0:
            raise ValueError("mse fields must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("image_psnr_db", "snr_db", "color_mse", "texture_mse"):
            d[key] = _encode_real(d[key])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TransmissionReport":
        d = dict(d)
        for key in ("image_psnr_db", "snr_db", "color_mse", "texture_mse"):
            d[key] = _decode_real(d.get(key))
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "TransmissionReport":
        return cls.from_dict(json.loads(text))
