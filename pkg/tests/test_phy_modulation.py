from __future__ import annotations

import math
import itertools

import numpy as np
import pytest

from semcast.phy import (
    MODULATION_ORDER,
    SymbolFrame,
    demodulate,
    make_modulation,
    modulate,
)


def all_bit_patterns(width: int) -> np.ndarray:
    rows = list(itertools.product((0, 1), repeat=width))
    return np.array(rows, dtype=np.uint8).reshape(-1)


# ---------------------------------------------------------------- mapping

def test_bpsk_maps_bit_to_sign():
    frame = modulate(np.array([0, 1, 0], dtype=np.uint8), make_modulation("bpsk"))
    assert np.allclose(frame.symbols, [1 + 0j, -1 + 0j, 1 + 0j])


def test_qpsk_maps_bit_pair_to_quadrant():
    scheme = make_modulation("qpsk")
    s = 1.0 / math.sqrt(2.0)
    for b0, b1 in itertools.product((0, 1), repeat=2):
        frame = modulate(np.array([b0, b1], dtype=np.uint8), scheme)
        expect = complex((1 - 2 * b0) * s, (1 - 2 * b1) * s)
        assert frame.symbols[0] == pytest.approx(expect)


def test_16qam_all_zero_label_is_outer_corner():
    frame = modulate(np.zeros(4, dtype=np.uint8), make_modulation("16qam"))
    assert frame.symbols[0] == pytest.approx((-3 - 3j) / math.sqrt(10.0))


def test_64qam_all_zero_label_is_outer_corner():
    frame = modulate(np.zeros(6, dtype=np.uint8), make_modulation("64qam"))
    assert frame.symbols[0] == pytest.approx((-7 - 7j) / math.sqrt(42.0))


@pytest.mark.parametrize("name", MODULATION_ORDER)
def test_adjacent_levels_differ_in_one_bit(name):
    # the defining property of the labeling: nearest neighbors along an axis
    # are one bit apart, so a small noise push costs at most one bit
    scheme = make_modulation(name)
    table = scheme.axis_table
    order = np.argsort(table)
    for a, b in zip(order[:-1], order[1:]):
        assert bin(int(a) ^ int(b)).count("1") == 1


@pytest.mark.parametrize("name", MODULATION_ORDER)
def test_full_constellation_power_is_exactly_unit(name):
    scheme = make_modulation(name)
    bits = all_bit_patterns(scheme.bits_per_symbol)
    frame = modulate(bits, scheme)
    assert np.mean(np.abs(frame.symbols) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", MODULATION_ORDER)
def test_random_symbol_power_within_one_percent(name):
    scheme = make_modulation(name)
    rng = np.random.default_rng(17)
    bits = rng.integers(0, 2, 100_000 * scheme.bits_per_symbol, dtype=np.uint8)
    frame = modulate(bits, scheme)
    assert frame.empirical_power() == pytest.approx(1.0, rel=0.01)
    assert frame.power == 1.0  # declared power is nominal unit energy


# ---------------------------------------------------------------- inverse

@pytest.mark.parametrize("name", MODULATION_ORDER)
def test_demodulate_inverts_modulate(name):
    scheme = make_modulation(name)
    rng = np.random.default_rng(23)
    for length in (1, 5, 960, 1001):
        bits = rng.integers(0, 2, length, dtype=np.uint8)
        frame = modulate(bits, scheme)
        assert frame.bit_count == length
        assert np.array_equal(demodulate(frame, scheme), bits)


def test_modulate_pads_partial_symbol():
    scheme = make_modulation("16qam")
    frame = modulate(np.array([1, 0, 1], dtype=np.uint8), scheme)
    assert len(frame.symbols) == 1
    assert frame.bit_count == 3


def test_symbol_count_accounting():
    # 1000 coded bits at 4 bits/symbol occupy exactly 250 symbols
    scheme = make_modulation("16qam")
    bits = np.zeros(1000, dtype=np.uint8)
    assert len(modulate(bits, scheme).symbols) == 250


# ---------------------------------------------------------------- slicing

def test_bpsk_hard_decision_crosses_zero():
    scheme = make_modulation("bpsk")
    frame = SymbolFrame(np.array([-0.2 + 0j, 0.2 + 0j]), power=1.0, bit_count=2)
    assert list(demodulate(frame, scheme)) == [1, 0]


def test_slicer_clips_overdriven_symbols():
    scheme = make_modulation("16qam")
    frame = SymbolFrame(np.array([100 + 100j, -100 - 100j]), power=1.0, bit_count=8)
    bits = demodulate(frame, scheme)
    corner_hi = modulate(bits[:4], scheme).symbols[0]
    assert corner_hi == pytest.approx((3 + 3j) / math.sqrt(10.0))


def test_qpsk_decision_regions_match_quadrants():
    scheme = make_modulation("qpsk")
    rng = np.random.default_rng(31)
    pts = rng.normal(size=100) + 1j * rng.normal(size=100)
    frame = SymbolFrame(pts, power=1.0, bit_count=200)
    bits = demodulate(frame, scheme).reshape(-1, 2)
    expect_i = (pts.real < 0).astype(np.uint8)
    expect_q = (pts.imag < 0).astype(np.uint8)
    assert np.array_equal(bits[:, 0], expect_i)
    assert np.array_equal(bits[:, 1], expect_q)


# ---------------------------------------------------------------- plumbing

def test_make_modulation_is_case_insensitive():
    assert make_modulation("BPSK").name == "bpsk"
    assert make_modulation("16QAM").bits_per_symbol == 4
    with pytest.raises(ValueError):
        make_modulation("256qam")


def test_symbol_frame_validation():
    with pytest.raises(ValueError):
        SymbolFrame(np.zeros((2, 2), dtype=np.complex128), power=1.0, bit_count=4)
    with pytest.raises(ValueError):
        SymbolFrame(np.zeros(4, dtype=np.complex128), power=-1.0, bit_count=4)


def test_scheme_geometry_table():
    for name, bps, levels in (("bpsk", 1, 2), ("qpsk", 2, 2),
                              ("16qam", 4, 4), ("64qam", 6, 8)):
        scheme = make_modulation(name)
        assert scheme.bits_per_symbol == bps
        assert scheme.levels_per_axis == levels
