from __future__ import annotations

import math

import numpy as np
import pytest

from semcast.codec import QuantizationSpec, encode_payload
from semcast.features import ColorMosaic, SemanticPayload, TextureMap
from semcast.phy import (
    ChannelConfig,
    IdentityFec,
    LdpcFec,
    RepetitionFec,
    make_modulation,
    transmit_analog,
    transmit_digital,
)

FULL = QuantizationSpec(color_bits=8, texture_bits=8, texture_palette=False)


def make_payload(rng, text="a scene", color_grid=(4, 4), texture_grid=(8, 8),
                 source=(32, 32)) -> SemanticPayload:
    color = ColorMosaic(
        rng.integers(0, 256, (color_grid[1], color_grid[0], 3), dtype=np.uint8), source)
    texture = TextureMap(
        rng.integers(0, 256, (texture_grid[1], texture_grid[0]), dtype=np.uint8), source)
    return SemanticPayload(text, color, texture)


# ---------------------------------------------------------------- digital

def test_noiseless_digital_is_bit_identical():
    rng = np.random.default_rng(0)
    stream = encode_payload(make_payload(rng), FULL)
    for scheme_name in ("bpsk", "qpsk", "16qam", "64qam"):
        result = transmit_digital(stream, make_modulation(scheme_name), IdentityFec(),
                                  ChannelConfig(snr_db=math.inf))
        assert not result.failed
        assert result.stream == stream
        assert result.channel_bit_errors == 0
        assert result.channel_symbol_errors == 0


def test_usage_accounting_uncoded():
    rng = np.random.default_rng(1)
    stream = encode_payload(make_payload(rng), FULL)
    result = transmit_digital(stream, make_modulation("16qam"), IdentityFec(),
                              ChannelConfig(snr_db=math.inf))
    u = result.usage
    assert u.info_bits == stream.total_bits
    assert u.coded_bits == stream.total_bits
    assert u.bits_per_symbol == 4
    assert u.symbols == math.ceil(stream.total_bits / 4)
    d = u.to_dict()
    assert d["symbols"] == u.symbols and d["info_bits"] == u.info_bits


def test_usage_accounting_with_fec_expansion():
    rng = np.random.default_rng(2)
    stream = encode_payload(make_payload(rng), FULL)
    result = transmit_digital(stream, make_modulation("qpsk"), RepetitionFec(),
                              ChannelConfig(snr_db=math.inf))
    assert result.usage.coded_bits == 3 * stream.total_bits
    assert result.usage.symbols == math.ceil(3 * stream.total_bits / 2)


def test_ldpc_protected_stream_survives_moderate_noise():
    rng = np.random.default_rng(3)
    stream = encode_payload(make_payload(rng), FULL)
    result = transmit_digital(stream, make_modulation("bpsk"), LdpcFec(),
                              ChannelConfig(snr_db=4.0, seed=77))
    assert result.channel_bit_errors > 0  # channel genuinely corrupted bits
    assert not result.failed
    assert result.stream == stream


def test_deep_noise_produces_failure_outcome_not_exception():
    rng = np.random.default_rng(4)
    stream = encode_payload(make_payload(rng), FULL)
    result = transmit_digital(stream, make_modulation("64qam"), IdentityFec(),
                              ChannelConfig(snr_db=-5.0, seed=5))
    assert result.failed
    assert result.stream is None
    assert result.channel_bit_errors > 0
    assert result.usage.symbols > 0  # channel was still occupied


def test_digital_determinism_per_seed():
    rng = np.random.default_rng(6)
    stream = encode_payload(make_payload(rng), FULL)
    kw = dict(scheme=make_modulation("qpsk"), fec=IdentityFec())
    a = transmit_digital(stream, cfg=ChannelConfig(snr_db=3.0, seed=9), **kw)
    b = transmit_digital(stream, cfg=ChannelConfig(snr_db=3.0, seed=9), **kw)
    assert a.channel_bit_errors == b.channel_bit_errors
    assert (a.stream is None) == (b.stream is None)


def test_symbol_errors_never_exceed_bit_errors():
    rng = np.random.default_rng(7)
    stream = encode_payload(make_payload(rng), FULL)
    result = transmit_digital(stream, make_modulation("16qam"), IdentityFec(),
                              ChannelConfig(snr_db=8.0, seed=11))
    assert 0 < result.channel_symbol_errors <= result.channel_bit_errors


# ---------------------------------------------------------------- analog

def analog_budget(payload) -> int:
    values = payload.color.cells.size + payload.texture.cells.size
    return math.ceil(values / 2)


def test_analog_noiseless_reconstruction_is_near_exact():
    rng = np.random.default_rng(8)
    payload = make_payload(rng)
    result = transmit_analog(payload, ChannelConfig(snr_db=math.inf),
                             budget=analog_budget(payload))
    # centering/scaling round trip costs at most one intensity step
    diff_c = np.abs(result.payload.color.cells.astype(int) - payload.color.cells.astype(int))
    diff_t = np.abs(result.payload.texture.cells.astype(int) - payload.texture.cells.astype(int))
    assert diff_c.max() <= 1
    assert diff_t.max() <= 1
    assert result.payload.text == payload.text


def test_analog_degrades_with_noise_but_never_fails():
    rng = np.random.default_rng(9)
    payload = make_payload(rng)
    budget = analog_budget(payload)
    mse_by_snr = []
    for snr in (0.0, 10.0, 20.0):
        result = transmit_analog(payload, ChannelConfig(snr_db=snr, seed=13), budget=budget)
        err = result.payload.texture.cells.astype(float) - payload.texture.cells.astype(float)
        mse_by_snr.append(float(np.mean(err ** 2)))
        assert result.payload.source_size == payload.source_size
    assert mse_by_snr[0] > mse_by_snr[2]  # cleaner channel, closer features


def test_analog_budget_shortfall_is_rejected():
    rng = np.random.default_rng(10)
    payload = make_payload(rng)
    with pytest.raises(ValueError):
        transmit_analog(payload, ChannelConfig(snr_db=10.0), budget=analog_budget(payload) - 1)


def test_analog_usage_covers_whole_grant():
    rng = np.random.default_rng(11)
    payload = make_payload(rng)
    tight = transmit_analog(payload, ChannelConfig(snr_db=10.0, seed=1),
                            budget=analog_budget(payload))
    assert tight.usage.symbols >= analog_budget(payload)
    roomy = transmit_analog(payload, ChannelConfig(snr_db=10.0, seed=1), budget=50_000)
    assert roomy.usage.symbols == 50_000  # idle grant still counts as occupied


def test_analog_constant_payload_survives():
    color = ColorMosaic(np.full((4, 4, 3), 128, dtype=np.uint8), (32, 32))
    texture = TextureMap(np.full((8, 8), 128, dtype=np.uint8), (32, 32))
    payload = SemanticPayload("flat", color, texture)
    result = transmit_analog(payload, ChannelConfig(snr_db=0.0, seed=2),
                             budget=analog_budget(payload))
    # zero-variance input transmits silence; the mean restores it exactly
    assert np.all(result.payload.color.cells == 128)
    assert np.all(result.payload.texture.cells == 128)


def test_analog_determinism_per_seed():
    rng = np.random.default_rng(12)
    payload = make_payload(rng)
    budget = analog_budget(payload)
    a = transmit_analog(payload, ChannelConfig(snr_db=5.0, seed=21), budget=budget)
    b = transmit_analog(payload, ChannelConfig(snr_db=5.0, seed=21), budget=budget)
    assert a.payload == b.payload
