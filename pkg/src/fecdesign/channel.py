"""QPSK/AWGN channel model and SNR bookkeeping.

Gray-labeled QPSK with unit symbol energy over a circular AWGN channel is
equivalent to two independent binary channels per symbol, each with amplitude
1/sqrt(2) and per-dimension noise variance sigma^2.  SNR in dB is
-10*log10(2*sigma^2).  Under the all-zero-codeword convention the channel LLR
of a bit is Gaussian with mean 1/sigma^2 and variance 2/sigma^2.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .rng import stream

_A = 1.0 / np.sqrt(2.0)  # per-dimension signal amplitude


def qfunc(x):
    """Gaussian tail probability Q(x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def snr_to_sigma2(es_n0_db: float) -> float:
    """Per-dimension noise variance for a given Es/N0 in dB."""
    return 10.0 ** (-es_n0_db / 10.0) / 2.0


def sigma2_to_snr(sigma2: float) -> float:
    """Inverse of :func:`snr_to_sigma2`."""
    if sigma2 <= 0:
        raise ValueError("variance must be positive")
    return -10.0 * np.log10(2.0 * sigma2)


def channel_ber(sigma2: float) -> float:
    """Raw hard-decision bit error probability Q(1/(sigma*sqrt(2)))."""
    if sigma2 <= 0:
        raise ValueError("variance must be positive")
    return float(qfunc(_A / np.sqrt(sigma2)))


@dataclass(frozen=True)
class SnrPoint:
    """One operating point: Es/N0 in dB with derived variance and raw BER."""

    es_n0_db: float
    sigma2: float
    p0: float

    @classmethod
    def from_db(cls, es_n0_db: float) -> "SnrPoint":
        s2 = snr_to_sigma2(es_n0_db)
        return cls(es_n0_db=float(es_n0_db), sigma2=s2, p0=channel_ber(s2))

    @property
    def llr_mean(self) -> float:
        return 1.0 / self.sigma2


@dataclass(frozen=True)
class LlrFrame:
    """Channel LLRs for one frame, tagged with the seed that produced them."""

    values: np.ndarray
    seed: int


def generate_llrs(n: int, sigma2: float, seed: int, frame_id: int = 0) -> LlrFrame:
    """Draw i.i.d. channel LLRs for the all-zero codeword.

    LLR = 2a(a + noise)/sigma^2 with a = 1/sqrt(2), so the LLRs are Gaussian
    with mean 1/sigma^2 and variance 2/sigma^2.  Deterministic for a fixed
    (seed, frame_id).
    """
    if n < 1:
        raise ValueError("need at least one bit")
    if sigma2 <= 0:
        raise ValueError("variance must be positive")
    rng = stream(seed, "llr", frame_id)
    noise = rng.standard_normal(n) * np.sqrt(sigma2)
    values = 2.0 * _A * (_A + noise) / sigma2
    return LlrFrame(values=values, seed=seed)


# 128-node Gauss-Hermite rule for expectations over N(0,1).
_GH_X, _GH_W = np.polynomial.hermite_e.hermegauss(128)
_GH_W = _GH_W / np.sqrt(2.0 * np.pi)


def _binary_input_capacity(sigma2: float) -> float:
    """Capacity (bits/dim) of the binary-input AWGN channel at variance sigma2.

    Computed as 1 - E[log2(1 + exp(-L))] with L ~ N(m, 2m), m = 1/sigma2,
    by Gauss-Hermite quadrature.
    """
    m = 1.0 / sigma2
    llr = m + np.sqrt(2.0 * m) * _GH_X
    # log1p(exp(-x)) evaluated stably for large |x|
    t = np.where(llr > 0, np.log1p(np.exp(-np.abs(llr))), -llr + np.log1p(np.exp(-np.abs(llr))))
    return float(1.0 - np.dot(_GH_W, t) / np.log(2.0))


def qpsk_constrained_capacity(es_n0_db: float) -> float:
    """Constrained capacity of Gray QPSK in bits per 2D symbol."""
    return 2.0 * _binary_input_capacity(snr_to_sigma2(es_n0_db))


def shannon_limit_snr(r_cat: float, lo: float = -20.0, hi: float = 30.0) -> float:
    """Es/N0 (dB) at which the QPSK constrained capacity equals 2*r_cat."""
    if not 0.0 < r_cat < 1.0:
        raise ValueError("rate must be in (0, 1)")
    target = 2.0 * r_cat
    f_lo = qpsk_constrained_capacity(lo) - target
    f_hi = qpsk_constrained_capacity(hi) - target
    if f_lo > 0 or f_hi < 0:
        raise ValueError("rate outside the bracketed capacity range")
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if qpsk_constrained_capacity(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shannon_gap(r_cat: float, es_n0_db: float) -> float:
    """Gap in dB between an operating SNR and the constrained Shannon limit."""
    return es_n0_db - shannon_limit_snr(r_cat)
