"""AWGN channel with BPSK / Gray-mapped QPSK and channel LLR computation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BPSK = "bpsk"
QPSK = "qpsk"


@dataclass(frozen=True)
class ChannelSpec:
    """Noise standard deviation per real dimension and modulation."""

    sigma: float
    modulation: str = BPSK

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.modulation not in (BPSK, QPSK):
            raise ValueError(f"unknown modulation {self.modulation!r}")

    @classmethod
    def from_ebno(cls, ebno_db: float, rate: float, modulation: str = BPSK) -> "ChannelSpec":
        return cls(ebno_to_sigma(ebno_db, rate), modulation)


def ebno_to_sigma(ebno_db: float, rate: float) -> float:
    """Per-dimension noise std for unit-energy BPSK symbols:
    ``sigma = (2 * rate * 10**(ebno_db/10)) ** -0.5``."""
    if not 0 < rate < 1:
        raise ValueError(f"code rate must lie in (0, 1), got {rate}")
    return float((2.0 * rate * 10.0 ** (ebno_db / 10.0)) ** -0.5)


def frame_rng(seed: int, frame: int = 0) -> np.random.Generator:
    """Independent generator for one frame, keyed by ``(seed, frame)``."""
    return np.random.default_rng([int(seed), int(frame)])


def modulate(bits, modulation: str = BPSK) -> np.ndarray:
    """Map bit 0 to +1 and bit 1 to -1.

    QPSK uses Gray mapping with bits ``2k`` and ``2k+1`` on the in-phase and
    quadrature rails; it returns a complex vector of half the length.
    """
    bits = np.asarray(bits, dtype=np.int64)
    s = 1.0 - 2.0 * (bits & 1)
    if modulation == BPSK:
        return s
    if modulation == QPSK:
        if len(s) % 2:
            raise ValueError("QPSK needs an even number of bits")
        return s[0::2] + 1j * s[1::2]
    raise ValueError(f"unknown modulation {modulation!r}")


def transmit_awgn(symbols, spec: ChannelSpec, seed: int, frame: int = 0) -> np.ndarray:
    """Add i.i.d. N(0, sigma^2) noise to each real dimension of ``symbols``."""
    symbols = np.asarray(symbols)
    rng = frame_rng(seed, frame)
    if np.iscomplexobj(symbols):
        noise = rng.standard_normal((len(symbols), 2)) * spec.sigma
        return symbols + noise[:, 0] + 1j * noise[:, 1]
    return symbols + rng.standard_normal(symbols.shape) * spec.sigma


def llr(received, spec: ChannelSpec) -> np.ndarray:
    """Channel LLRs ``2 y / sigma^2``; QPSK is de-interleaved back to bit order."""
    y = np.asarray(received)
    if np.iscomplexobj(y):
        y = np.column_stack([y.real, y.imag]).ravel()
    return 2.0 * y / spec.sigma**2


def all_zero_llr(N: int, spec: ChannelSpec, seed: int, frame: int = 0) -> np.ndarray:
    """Channel LLRs for one all-zero codeword transmission."""
    symbols = modulate(np.zeros(N, dtype=np.int64), spec.modulation)
    return llr(transmit_awgn(symbols, spec, seed, frame), spec)
