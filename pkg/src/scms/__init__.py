"""Self-corrected min-sum decoding of LDPC codes: decoders, Monte-Carlo
harness and Gaussian-approximation density evolution."""

__version__ = "0.1.0"
