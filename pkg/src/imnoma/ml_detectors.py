"""Hand-crafted baselines: joint ML exhaustive search and ML-SIC.

Both detectors precompute the per-codeword effective vectors
sqrt(P_l) * h_l . x once per (channel, codebook) pair and are immutable
afterwards.  `detect` scans hypotheses one by one (the reference path, also
what the runtime benchmark times); `detect_classes_batch` evaluates the same
argmin vectorized over a block of received signals for Monte-Carlo sweeps.
Squared norms are used internally; reported metrics are Euclidean norms.
Ties break toward the lowest class index.
"""

from dataclasses import dataclass

import numpy as np

from .channel import NomaChannel, RxSignal
from .im_codec import Codebook


@dataclass(frozen=True)
class DetectionResult:
    bits: tuple
    classes: tuple
    metric: float


def _rx_vector(y):
    return y.y if isinstance(y, RxSignal) else np.asarray(y)


def effective_codewords(book: Codebook, h: np.ndarray, p: float) -> np.ndarray:
    """(2^b, N) array of sqrt(p) * h . x over all codewords x."""
    return np.sqrt(p) * (h * book.vectors)


def _check_two_users(ch: NomaChannel, books):
    if ch.n_users != 2 or len(books) != 2:
        raise ValueError(f"only L=2 is supported, got L={ch.n_users}")


class JmlDetector:
    """Exhaustive argmin over all codeword pairs of ||y - s1(c1) - s2(c2)||."""

    def __init__(self, ch: NomaChannel, books):
        _check_two_users(ch, books)
        self.books = tuple(books)
        eff1 = effective_codewords(books[0], ch.h[0], ch.p[0])
        eff2 = effective_codewords(books[1], ch.h[1], ch.p[1])
        n1, n2 = len(books[0]), len(books[1])
        # pair p = c1 * n2 + c2, so argmin's first-index tie-break is
        # lexicographic in (c1, c2)
        self._pair_sums = (eff1[:, None, :] + eff2[None, :, :]).reshape(n1 * n2, -1)
        self._pair_norms = np.einsum("ij,ij->i", self._pair_sums, self._pair_sums.conj()).real
        self._n2 = n2

    def detect(self, y) -> DetectionResult:
        y = _rx_vector(y)
        pair_sums = self._pair_sums
        best_p = 0
        best_m = np.inf
        for p in range(pair_sums.shape[0]):
            d = y - pair_sums[p]
            m = d.real @ d.real + d.imag @ d.imag
            if m < best_m:
                best_m = m
                best_p = p
        c1, c2 = divmod(best_p, self._n2)
        return DetectionResult(bits=(self.books[0].entries[c1].bits, self.books[1].entries[c2].bits),
                               classes=(c1, c2), metric=float(np.sqrt(best_m)))

    def detect_classes_batch(self, y_batch: np.ndarray) -> np.ndarray:
        """(B, 2) decided classes for a (B, N) block of received signals."""
        n_pairs = self._pair_sums.shape[0]
        step = max(1, (1 << 23) // n_pairs)  # cap the score matrix at ~64 MB
        best = np.empty(y_batch.shape[0], dtype=np.int64)
        for lo in range(0, y_batch.shape[0], step):
            chunk = y_batch[lo:lo + step]
            # ||y - s||^2 = ||y||^2 - 2 Re<y, s> + ||s||^2; drop the constant ||y||^2
            scores = self._pair_norms[None, :] - 2.0 * (chunk @ self._pair_sums.conj().T).real
            best[lo:lo + step] = np.argmin(scores, axis=1)
        return np.stack(divmod(best, self._n2), axis=1)


def ml_single_user(y_eff: np.ndarray, h: np.ndarray, p: float, book: Codebook):
    """Single-user ML: argmin over the codebook of ||y_eff - sqrt(p) h . x||."""
    eff = effective_codewords(book, h, p)
    d = y_eff - eff
    metrics = np.einsum("ij,ij->i", d, d.conj()).real
    cls = int(np.argmin(metrics))
    return cls, float(np.sqrt(metrics[cls]))


class SicDetector:
    """Two-stage ML-SIC: decode user 1 treating user 2 as noise, cancel, decode user 2."""

    def __init__(self, ch: NomaChannel, books):
        _check_two_users(ch, books)
        if not ch.p[0] > ch.p[1]:
            raise ValueError("SIC ordering needs P1 > P2")
        self.books = tuple(books)
        self._eff = [effective_codewords(books[l], ch.h[l], ch.p[l]) for l in range(2)]
        self._eff_norms = [np.einsum("ij,ij->i", e, e.conj()).real for e in self._eff]

    @staticmethod
    def _scan(y, eff):
        best_c = 0
        best_m = np.inf
        for c in range(eff.shape[0]):
            d = y - eff[c]
            m = d.real @ d.real + d.imag @ d.imag
            if m < best_m:
                best_m = m
                best_c = c
        return best_c, best_m

    def detect(self, y) -> DetectionResult:
        y = _rx_vector(y)
        c1, _ = self._scan(y, self._eff[0])
        residual = y - self._eff[0][c1]
        c2, m2 = self._scan(residual, self._eff[1])
        return DetectionResult(bits=(self.books[0].entries[c1].bits, self.books[1].entries[c2].bits),
                               classes=(c1, c2), metric=float(np.sqrt(m2)))

    def detect_classes_batch(self, y_batch: np.ndarray) -> np.ndarray:
        s1 = self._eff_norms[0][None, :] - 2.0 * (y_batch @ self._eff[0].conj().T).real
        c1 = np.argmin(s1, axis=1)
        residual = y_batch - self._eff[0][c1]
        s2 = self._eff_norms[1][None, :] - 2.0 * (residual @ self._eff[1].conj().T).real
        c2 = np.argmin(s2, axis=1)
        return np.stack([c1, c2], axis=1)


def jml_detect(y, ch: NomaChannel, books) -> DetectionResult:
    """One-shot joint ML detection; hot loops should hold a JmlDetector instead."""
    return JmlDetector(ch, books).detect(y)


def sic_detect(y, ch: NomaChannel, books) -> DetectionResult:
    """One-shot ML-SIC detection; hot loops should hold a SicDetector instead."""
    return SicDetector(ch, books).detect(y)
