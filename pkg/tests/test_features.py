from __future__ import annotations

import sys

import numpy as np
import pytest

from semcast.errors import CaptionError
from semcast.features import (
    DEPTH_SLOT,
    CommandCaption,
    ExtractionProfile,
    FillTextureRegion,
    FixedCaption,
    LbpConfig,
    SemanticPayload,
    SetText,
    SidecarCaption,
    TintColorRegion,
    caption,
    decompose,
    edit_payload,
    extract_color,
    extract_texture,
    lbp_map,
    register_extension,
    registered_extensions,
    unregister_extension,
)
from semcast.imaging import (
    BlockGrid,
    GrayImage,
    RgbImage,
    block_mean_downsample,
    median_filter,
    to_grayscale,
    write_png,
)

OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def lbp_oracle(samples: np.ndarray) -> np.ndarray:
    """Pure python reference: clamp each neighbor to the edge, compare, sum weights."""
    h, w = samples.shape
    out = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            center = int(samples[y, x])
            code = 0
            for k, (dy, dx) in enumerate(OFFSETS):
                yy = min(max(y + dy, 0), h - 1)
                xx = min(max(x + dx, 0), w - 1)
                if int(samples[yy, xx]) > center:
                    code |= 1 << k
            out[y, x] = code
    return out


def small_payload(text: str = "hello") -> SemanticPayload:
    rng = np.random.default_rng(0)
    img = RgbImage(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
    return SemanticPayload(
        text=text,
        color=extract_color(img, BlockGrid(4, 4), 1),
        texture=extract_texture(img, BlockGrid(8, 8)),
    )


# ---------------------------------------------------------------- LBP

def test_lbp_matches_loop_oracle():
    rng = np.random.default_rng(42)
    for _ in range(10):
        samples = rng.integers(0, 256, (12, 12), dtype=np.uint8)
        got = lbp_map(GrayImage(samples)).samples
        assert np.array_equal(got, lbp_oracle(samples))


def test_lbp_flat_image_is_all_zero():
    # strict greater-than: equal neighbors contribute nothing
    img = GrayImage.full(8, 8, 128)
    assert np.all(lbp_map(img).samples == 0)


def test_lbp_bright_ring_hits_all_weights():
    samples = np.full((3, 3), 200, dtype=np.uint8)
    samples[1, 1] = 10
    assert lbp_map(GrayImage(samples)).samples[1, 1] == 255


def test_lbp_single_neighbor_weights():
    # one bright neighbor at a time isolates each bit position
    for k, (dy, dx) in enumerate(OFFSETS):
        samples = np.full((3, 3), 50, dtype=np.uint8)
        samples[1 + dy, 1 + dx] = 200
        code = lbp_map(GrayImage(samples)).samples[1, 1]
        assert code == (1 << k)


def test_lbp_border_uses_replicated_edge():
    rng = np.random.default_rng(9)
    samples = rng.integers(0, 256, (5, 7), dtype=np.uint8)
    got = lbp_map(GrayImage(samples)).samples
    oracle = lbp_oracle(samples)
    assert np.array_equal(got[0], oracle[0])
    assert np.array_equal(got[:, -1], oracle[:, -1])


def test_lbp_rejects_tiny_images():
    with pytest.raises(ValueError):
        lbp_map(GrayImage.full(2, 3, 0))


def test_lbp_config_validation():
    with pytest.raises(ValueError):
        LbpConfig(offsets=((0, 0),) * 8)
    with pytest.raises(ValueError):
        LbpConfig(offsets=((-2, 0), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)))
    assert LbpConfig().weights == tuple(2 ** k for k in range(8))


# ---------------------------------------------------------------- extraction

def test_extract_texture_composes_lbp_and_downsample():
    rng = np.random.default_rng(3)
    img = RgbImage(rng.integers(0, 256, (20, 24, 3), dtype=np.uint8))
    tex = extract_texture(img, BlockGrid(6, 5))
    codes = lbp_map(to_grayscale(img))
    expect = block_mean_downsample(codes, BlockGrid(6, 5)).samples
    assert np.array_equal(tex.cells, expect)
    assert tex.source_size == (24, 20)


def test_extract_color_composes_median_and_downsample():
    rng = np.random.default_rng(4)
    img = RgbImage(rng.integers(0, 256, (20, 24, 3), dtype=np.uint8))
    mosaic = extract_color(img, BlockGrid(4, 4), 2)
    expect = block_mean_downsample(median_filter(img, 2), BlockGrid(4, 4)).pixels
    assert np.array_equal(mosaic.cells, expect)


def test_payload_rejects_mismatched_source_dims():
    p = small_payload()
    from semcast.features import ColorMosaic
    other = ColorMosaic(p.color.cells, (32, 32))
    with pytest.raises(ValueError):
        SemanticPayload(p.text, other, p.texture)


def test_decompose_produces_consistent_payload():
    rng = np.random.default_rng(5)
    img = RgbImage(rng.integers(0, 256, (32, 32, 3), dtype=np.uint8))
    profile = ExtractionProfile(color_grid=(8, 8), texture_grid=(16, 16),
                                caption_source=FixedCaption("a test scene"))
    payload = decompose(img, profile)
    assert payload.text == "a test scene"
    assert payload.color.cells.shape == (8, 8, 3)
    assert payload.texture.cells.shape == (16, 16)
    assert payload.source_size == (32, 32)
    assert payload == decompose(img, profile)


# ---------------------------------------------------------------- captions

def test_fixed_caption():
    img = RgbImage.full(4, 4)
    assert caption(img, FixedCaption("still life")) == "still life"


def test_caption_rejects_empty():
    with pytest.raises(CaptionError):
        caption(RgbImage.full(4, 4), FixedCaption(""))


def test_caption_truncates_to_byte_budget():
    text = "é" * 600  # 1200 bytes of UTF-8
    got = caption(RgbImage.full(4, 4), FixedCaption(text))
    assert len(got.encode("utf-8")) <= 1024
    assert got == "é" * 512


def test_sidecar_caption(tmp_path):
    img_path = tmp_path / "scene.png"
    img = RgbImage.full(4, 4)
    write_png(img, img_path)
    (tmp_path / "scene.png.txt").write_text("a red square\n")
    assert caption(img, SidecarCaption(), img_path) == "a red square"


def test_sidecar_caption_missing_file(tmp_path):
    img_path = tmp_path / "scene.png"
    write_png(RgbImage.full(4, 4), img_path)
    with pytest.raises(CaptionError):
        caption(RgbImage.full(4, 4), SidecarCaption(), img_path)
    with pytest.raises(CaptionError):
        caption(RgbImage.full(4, 4), SidecarCaption(), None)


def test_command_caption_runs_script(tmp_path):
    script = tmp_path / "cap.py"
    script.write_text("import sys\nprint('caption for', sys.argv[1].rsplit('/', 1)[-1])\n")
    src = CommandCaption((sys.executable, str(script)))
    img_path = tmp_path / "photo.png"
    write_png(RgbImage.full(4, 4), img_path)
    assert caption(RgbImage.full(4, 4), src, img_path) == "caption for photo.png"


def test_command_caption_without_path_writes_temp_png(tmp_path):
    script = tmp_path / "cap.py"
    script.write_text(
        "import sys\n"
        "data = open(sys.argv[1], 'rb').read(8)\n"
        "print('png' if data[1:4] == b'PNG' else 'not-png')\n"
    )
    src = CommandCaption((sys.executable, str(script)))
    assert caption(RgbImage.full(4, 4), src) == "png"


def test_command_caption_failure_modes(tmp_path):
    bad = tmp_path / "bad.py"
    bad.write_text("import sys\nsys.exit(3)\n")
    with pytest.raises(CaptionError):
        caption(RgbImage.full(4, 4), CommandCaption((sys.executable, str(bad))))
    with pytest.raises(CaptionError):
        caption(RgbImage.full(4, 4), CommandCaption(("/nonexistent/tool",)))


# ---------------------------------------------------------------- extensions

def test_extension_registry_round_trip():
    name = "edge-density"

    def extractor(img, profile):
        return GrayImage.full(4, 4, 7)

    register_extension(name, extractor)
    try:
        assert name in registered_extensions()
        rng = np.random.default_rng(6)
        img = RgbImage(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
        profile = ExtractionProfile(color_grid=(4, 4), texture_grid=(4, 4),
                                    extensions=(name,))
        payload = decompose(img, profile)
        assert payload.extensions[name] == GrayImage.full(4, 4, 7)
    finally:
        unregister_extension(name)
    assert name not in registered_extensions()


def test_unknown_extension_mentions_reserved_slot():
    rng = np.random.default_rng(6)
    img = RgbImage(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
    profile = ExtractionProfile(color_grid=(4, 4), texture_grid=(4, 4),
                                extensions=(DEPTH_SLOT,))
    with pytest.raises(ValueError, match=DEPTH_SLOT):
        decompose(img, profile)


def test_register_extension_rejects_empty_name():
    with pytest.raises(ValueError):
        register_extension("", lambda img, profile: None)


# ---------------------------------------------------------------- edits

def test_set_text_edit():
    p = small_payload()
    q = edit_payload(p, SetText("new caption"))
    assert q.text == "new caption"
    assert q.color == p.color and q.texture == p.texture
    with pytest.raises(ValueError):
        edit_payload(p, SetText(""))


def test_tint_color_region_touches_only_rect():
    p = small_payload()
    q = edit_payload(p, TintColorRegion(rect=(1, 0, 2, 3), rgb=(255, 0, 0)))
    assert np.all(q.color.cells[0:3, 1:3] == np.array([255, 0, 0], dtype=np.uint8))
    mask = np.ones((4, 4), dtype=bool)
    mask[0:3, 1:3] = False
    assert np.array_equal(q.color.cells[mask], p.color.cells[mask])
    assert q.texture == p.texture


def test_fill_texture_region_touches_only_rect():
    p = small_payload()
    q = edit_payload(p, FillTextureRegion(rect=(2, 2, 2, 2), value=200))
    assert np.all(q.texture.cells[2:4, 2:4] == 200)
    mask = np.ones((8, 8), dtype=bool)
    mask[2:4, 2:4] = False
    assert np.array_equal(q.texture.cells[mask], p.texture.cells[mask])


def test_edit_rect_validation():
    p = small_payload()
    with pytest.raises(ValueError):
        edit_payload(p, TintColorRegion(rect=(3, 3, 2, 2), rgb=(0, 0, 0)))
    with pytest.raises(ValueError):
        edit_payload(p, FillTextureRegion(rect=(0, 0, 9, 1), value=0))
    with pytest.raises(ValueError):
        edit_payload(p, FillTextureRegion(rect=(0, 0, 1, 1), value=300))
    with pytest.raises(ValueError):
        edit_payload(p, TintColorRegion(rect=(0, 0, 1, 1), rgb=(0, -1, 0)))
