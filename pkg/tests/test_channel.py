import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scms.channel import BPSK, QPSK, ChannelSpec, all_zero_llr, ebno_to_sigma, llr, modulate, transmit_awgn


def test_ebno_to_sigma_examples():
    assert ebno_to_sigma(0.0, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert ebno_to_sigma(10 * math.log10(2), 0.25) == pytest.approx(1.0, abs=1e-15)
    # 1.5 dB at rate 1/2: 10**0.15 = 1.41253754..., sigma = 0.84139514...
    assert ebno_to_sigma(1.5, 0.5) == pytest.approx(0.8413951416451951, abs=1e-12)


@pytest.mark.parametrize("rate", [0.0, -0.5, 1.0])
def test_ebno_to_sigma_rejects_rate(rate):
    with pytest.raises(ValueError):
        ebno_to_sigma(1.0, rate)


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec(0.0)
    with pytest.raises(ValueError):
        ChannelSpec(1.0, "16qam")


def test_modulate_examples():
    assert modulate([0]).tolist() == [1.0]
    assert modulate([1]).tolist() == [-1.0]
    assert modulate([0, 1, 0]).tolist() == [1.0, -1.0, 1.0]
    assert modulate([0, 1, 1, 0], QPSK).tolist() == [1 - 1j, -1 + 1j]


def test_noiseless_limit():
    s = modulate([0, 1, 1, 0, 1])
    r = transmit_awgn(s, ChannelSpec(1e-12), seed=3)
    assert np.max(np.abs(r - s)) < 1e-9


def test_noise_moments():
    sigma = 0.7
    noise = transmit_awgn(np.zeros(10**6), ChannelSpec(sigma), seed=11)
    assert abs(noise.mean()) < 5 * sigma / 1e3
    assert noise.var() == pytest.approx(sigma**2, rel=0.01)


def test_deterministic_per_frame():
    spec = ChannelSpec(0.9)
    a = all_zero_llr(100, spec, seed=5, frame=7)
    assert np.array_equal(a, all_zero_llr(100, spec, seed=5, frame=7))
    assert not np.array_equal(a, all_zero_llr(100, spec, seed=5, frame=8))
    assert not np.array_equal(a, all_zero_llr(100, spec, seed=6, frame=7))


def test_llr_examples():
    assert llr(np.array([1.0]), ChannelSpec(1.0)).tolist() == [2.0]
    for sigma in (0.3, 1.0, 4.0):
        assert llr(np.array([0.0]), ChannelSpec(sigma)).tolist() == [0.0]


@given(st.floats(-5, 5), st.floats(0.1, 3))
def test_llr_formula(y, sigma):
    assert llr(np.array([y]), ChannelSpec(sigma))[0] == pytest.approx(2 * y / sigma**2, rel=1e-12, abs=1e-300)


def test_llr_mean_and_consistency():
    g = all_zero_llr(10**6, ChannelSpec(1.0), seed=1)
    assert g.mean() == pytest.approx(2.0, abs=0.01)
    assert g.var() == pytest.approx(2 * g.mean(), rel=0.02)


def test_qpsk_matches_bpsk_statistics():
    spec_b, spec_q = ChannelSpec(0.8, BPSK), ChannelSpec(0.8, QPSK)
    n = 400_000
    ber_b = np.mean(all_zero_llr(n, spec_b, seed=2) < 0)
    ber_q = np.mean(all_zero_llr(n, spec_q, seed=3) < 0)
    p = 0.5 * math.erfc(1 / 0.8 / math.sqrt(2))
    se = math.sqrt(p * (1 - p) / n)
    assert abs(ber_b - p) < 4 * se and abs(ber_q - p) < 4 * se
    assert abs(ber_b - ber_q) < 4 * math.sqrt(2) * se


def test_qpsk_llr_order():
    spec = ChannelSpec(1.0, QPSK)
    r = modulate([0, 1, 1, 1], QPSK)
    assert llr(r, spec).tolist() == [2.0, -2.0, -2.0, -2.0]
