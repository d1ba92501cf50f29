"""Receiver-side restoration.

Two real backends: a deterministic local compositor (fallback) and a remote
generative restorer spoken to over a small HTTP+JSON contract. The remote
model itself is out of scope; anything that implements the wire shape can
serve, and restore_stub provides a reference implementation for tests.

Wire contract:
    POST {endpoint}/restore
    body: {"text": str, "color_png_b64": str, "texture_png_b64": str,
           "width": int, "height": int, "seed": int}
    200 -> {"image_png_b64": str}   (8-bit RGB PNG at exactly width x height)
Any other status, schema, or dimension is a RestorationError. A failed remote
is never silently replaced by the fallback; callers choose the policy.
"""

from __future__ import annotations

import base64
import io
import json
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import RestorationError
from .features import SemanticPayload
from .imaging import GrayImage, RgbImage, round_half_up, upsample


@dataclass(frozen=True)
class RestorationRequest:
    """Everything a restorer conditions on: caption, mosaics, dims, seed."""

    text: str
    color: RgbImage      # the color mosaic as a small 8-bit image
    texture: GrayImage   # the texture map as a small 8-bit image
    target_size: tuple[int, int]  # (width, height)
    seed: int = 0

    def __post_init__(self):
        w, h = self.target_size
        if w < 1 or h < 1:
            raise ValueError(f"target size must be positive, got {w}x{h}")
        if not self.text:
            raise ValueError("restoration request requires caption text")
        if self.color.width > w or self.color.height > h:
            raise ValueError("color mosaic larger than target")
        if self.texture.width > w or self.texture.height > h:
            raise ValueError("texture map larger than target")

    @classmethod
    def from_payload(cls, payload: SemanticPayload, seed: int = 0) -> "RestorationRequest":
        return cls(
            text=payload.text,
            color=RgbImage(payload.color.cells),
            texture=GrayImage(payload.texture.cells),
            target_size=payload.color.source_size,
            seed=seed,
        )


@dataclass(frozen=True)
class FallbackBackend:
    """Built-in compositor; no model, fully deterministic."""

    luminance_gain: float = 1.0


@dataclass
class RemoteBackend:
    """Generative restorer behind the wire contract."""

    endpoint: str
    timeout_s: float = 120.0
    max_in_flight: int = 4
    _gate: threading.BoundedSemaphore = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.endpoint:
            raise ValueError("remote backend requires an endpoint URL")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self._gate = threading.BoundedSemaphore(self.max_in_flight)


@dataclass(frozen=True)
class FeatureOnlyBackend:
    """No restoration: callers consume the received features directly."""


RestorerBackend = FallbackBackend | RemoteBackend | FeatureOnlyBackend


def make_backend(name: str, endpoint: str | None = None,
                 luminance_gain: float = 1.0) -> RestorerBackend:
    key = name.lower()
    if key == "fallback":
        return FallbackBackend(luminance_gain=luminance_gain)
    if key == "remote":
        if not endpoint:
            raise ValueError("remote backend needs --endpoint or its env fallback")
        return RemoteBackend(endpoint=endpoint)
    if key == "none":
        return FeatureOnlyBackend()
    raise ValueError(f"unknown backend {name!r}; choose fallback, remote, or none")


def compose_fallback(req: RestorationRequest, luminance_gain: float = 1.0) -> RgbImage:
    """Deterministic compositor: bilinear color base modulated by texture.

    out = clamp(base * (0.5 + texture/255 * gain)) per channel. Uniform gray
    128 with zero texture lands on 64; with saturated texture and gain 1 on
    192. The caption is deliberately unused here.
    """
    w, h = req.target_size
    base = upsample(req.color, w, h, mode="bilinear").pixels.astype(np.float64)
    tex = upsample(req.texture, w, h, mode="nearest").samples.astype(np.float64)
    factor = 0.5 + (tex / 255.0) * luminance_gain
    out = np.clip(round_half_up(base * factor[:, :, None]), 0, 255).astype(np.uint8)
    return RgbImage(out)


def _png_b64(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _decode_png_b64(data: str) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"), validate=True)
    with Image.open(io.BytesIO(raw)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _call_remote(req: RestorationRequest, backend: RemoteBackend) -> RgbImage:
    w, h = req.target_size
    body = json.dumps({
        "text": req.text,
        "color_png_b64": _png_b64(req.color.pixels),
        "texture_png_b64": _png_b64(req.texture.samples),
        "width": w,
        "height": h,
        "seed": req.seed,
    }).encode("utf-8")
    url = backend.endpoint.rstrip("/") + "/restore"
    request = urllib.request.Request(
        url, data=body, method="POST",
        headers={"Content-Type": "application/json"})
    try:
        with backend._gate:
            with urllib.request.urlopen(request, timeout=backend.timeout_s) as resp:
                status = resp.status
                raw = resp.read()
    except urllib.error.HTTPError as exc:
        raise RestorationError(f"restorer at {url} answered HTTP {exc.code}") from exc
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise RestorationError(f"restorer at {url} unreachable: {exc}") from exc
    if status != 200:
        raise RestorationError(f"restorer at {url} answered HTTP {status}")
    try:
        payload = json.loads(raw.decode("utf-8"))
        pixels = _decode_png_b64(payload["image_png_b64"])
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise RestorationError(f"restorer at {url} sent a malformed response: {exc}") from exc
    if pixels.shape != (h, w, 3):
        raise RestorationError(
            f"restorer returned {pixels.shape[1]}x{pixels.shape[0]}, wanted {w}x{h}")
    return RgbImage(pixels)


def restore(req: RestorationRequest, backend: RestorerBackend) -> RgbImage:
    if isinstance(backend, FallbackBackend):
        return compose_fallback(req, backend.luminance_gain)
    if isinstance(backend, RemoteBackend):
        return _call_remote(req, backend)
    if isinstance(backend, FeatureOnlyBackend):
        raise RestorationError("feature-only backend performs no restoration")
    raise ValueError(f"unknown backend: {backend!r}")
