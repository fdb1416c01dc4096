"""Uplink NOMA superposition channel with complex AWGN.

The received block is y = sum_l sqrt(P_l) * (h_l . x_l) + w, with fixed
per-user channel vectors h_l and strictly decreasing power coefficients.
SNR(dB) is referenced to a unit-energy symbol, so N0 = 10^(-snr_db/10).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NomaChannel:
    """Per-user channel vectors h (L, N) and linear power coefficients P (L,)."""

    h: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if h.shape[0] != p.shape[0]:
            raise ValueError(f"{h.shape[0]} channel vectors but {p.shape[0]} power coefficients")
        if np.any(h[0] == 0):
            raise ValueError("h_1 must have no zero entries (ZF divides by it)")
        if np.any(np.diff(p) >= 0):
            raise ValueError(f"power coefficients must be strictly decreasing, got {p}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "p", p)

    @property
    def n_users(self):
        return self.h.shape[0]

    @property
    def n_subcarriers(self):
        return self.h.shape[1]


@dataclass(frozen=True)
class RxSignal:
    y: np.ndarray
    snr_db: float


def superimpose(tx, ch: NomaChannel) -> np.ndarray:
    """Noiseless received signal sum_l sqrt(P_l) * h_l . x_l.

    Each tx[l] may be a single length-N vector or a (B, N) batch; h_l
    broadcasts over leading axes.
    """
    if len(tx) != ch.n_users:
        raise ValueError(f"got {len(tx)} transmit vectors for {ch.n_users} users")
    total = None
    for l, x in enumerate(tx):
        x = np.asarray(x)
        if x.shape[-1] != ch.n_subcarriers:
            raise ValueError(f"user {l + 1} vector has length {x.shape[-1]}, expected {ch.n_subcarriers}")
        term = np.sqrt(ch.p[l]) * (ch.h[l] * x)
        total = term if total is None else total + term
    return total


def noise_variance_from_snr(snr_db: float) -> float:
    """N0 = 10^(-snr_db/10); snr_db = inf gives exactly 0."""
    return float(10.0 ** (-snr_db / 10.0))


def awgn(signal: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise, N0/2 per real dimension.

    An infinite snr_db bypasses the noise draw entirely, leaving the rng
    stream untouched.
    """
    signal = np.asarray(signal, dtype=complex)
    if np.isinf(snr_db):
        return signal.copy()
    n0 = noise_variance_from_snr(snr_db)
    scale = np.sqrt(n0 / 2.0)
    noise = rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape)
    return signal + scale * noise


def add_awgn(signal: np.ndarray, snr_db: float, rng: np.random.Generator) -> RxSignal:
    """Noisy received block at the given SNR, tagged with that SNR."""
    return RxSignal(y=awgn(signal, snr_db, rng), snr_db=float(snr_db))
