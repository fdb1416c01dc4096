"""Bit-block <-> index-modulation codeword mapping.

A transmit block encodes b = b_ind + b_sym bits: the b_ind most significant
bits pick which K of the N subcarriers are active (combinadic subset
unranking, lexicographic order), the remaining b_sym bits Gray-map to K
unit-energy M-PSK symbols placed on the active subcarriers in increasing
order.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ImScheme:
    """An (N, K, M) index-modulation configuration with derived bit counts."""

    n: int
    k: int
    m: int
    b_ind: int
    b_sym: int
    b: int

    @property
    def n_classes(self):
        return 1 << self.b


def make_scheme(n: int, k: int, m: int) -> ImScheme:
    """Build an ImScheme, deriving b_ind = floor(log2(C(n,k))) and b_sym = k*log2(m)."""
    if n < 1 or k < 1 or k > n:
        raise ValueError(f"invalid parameters: need 1 <= K <= N, got N={n}, K={k}")
    if m < 2 or (m & (m - 1)) != 0:
        raise ValueError(f"invalid parameters: M must be a power of two >= 2, got M={m}")
    b_ind = int(math.comb(n, k)).bit_length() - 1  # floor(log2(C(n,k)))
    b_sym = k * (m.bit_length() - 1)
    return ImScheme(n=n, k=k, m=m, b_ind=b_ind, b_sym=b_sym, b=b_ind + b_sym)


def unrank_pattern(rank: int, n: int, k: int) -> tuple:
    """Return the K-subset of {0..n-1} at position `rank` in lexicographic order."""
    if rank < 0 or rank >= math.comb(n, k):
        raise ValueError(f"rank {rank} out of range for C({n},{k})={math.comb(n, k)}")
    pattern = []
    r = rank
    j = 0
    for i in range(k):
        # advance j past all subsets starting with a smaller element
        while math.comb(n - 1 - j, k - 1 - i) <= r:
            r -= math.comb(n - 1 - j, k - 1 - i)
            j += 1
        pattern.append(j)
        j += 1
    return tuple(pattern)


def rank_pattern(pattern, n: int) -> int:
    """Lexicographic rank of a strictly increasing K-subset of {0..n-1}."""
    pattern = tuple(pattern)
    k = len(pattern)
    if any(p < 0 or p >= n for p in pattern) or list(pattern) != sorted(set(pattern)):
        raise ValueError(f"invalid pattern {pattern} for N={n}")
    rank = 0
    prev = -1
    for i, p in enumerate(pattern):
        for j in range(prev + 1, p):
            rank += math.comb(n - 1 - j, k - 1 - i)
        prev = p
    return rank


def _psk_points(m: int) -> np.ndarray:
    """Unit-energy M-PSK points in increasing-angle order.

    Built from shared first-quadrant values with sign flips and axis swaps,
    so that points of equal magnitude are bit-identical (plain cos/sin of
    each angle would differ in the last ulp and break exact-tie behavior).
    """
    if m == 2:
        return np.array([1.0 + 0j, -1.0 + 0j])
    if m == 4:
        a = np.sqrt(0.5)  # 00 -> (1+j)/sqrt(2) by convention
        return np.array([a + a * 1j, -a + a * 1j, -a - a * 1j, a - a * 1j])
    quarter = m // 4
    c = np.cos(2 * np.pi * np.arange(quarter + 1) / m)
    c[0], c[-1] = 1.0, 0.0
    points = np.empty(m, dtype=complex)
    for i in range(m):
        q, r = divmod(i, quarter)
        cr, sr = c[r], c[quarter - r]  # sin(t) = cos(pi/2 - t), same table
        re, im = ((cr, sr), (-sr, cr), (-cr, -sr), (sr, -cr))[q]
        points[i] = complex(re, im)
    return points


def _gray_psk_table(m: int) -> np.ndarray:
    """Constellation point for each m-bit label, Gray-coded unit-energy M-PSK.

    The point at circle position i carries the label i ^ (i >> 1), so
    adjacent points differ in one bit.
    """
    pos = np.arange(m)
    table = np.empty(m, dtype=complex)
    table[pos ^ (pos >> 1)] = _psk_points(m)
    return table


def modulate_symbols(sym_bits: int, scheme: ImScheme) -> np.ndarray:
    """Map a b_sym-bit word to K Gray-coded M-PSK symbols, MSB group first."""
    if sym_bits < 0 or sym_bits >= (1 << scheme.b_sym):
        raise ValueError(f"symbol word {sym_bits} does not fit in {scheme.b_sym} bits")
    m_bits = scheme.m.bit_length() - 1
    table = _gray_psk_table(scheme.m)
    labels = [(sym_bits >> ((scheme.k - 1 - s) * m_bits)) & (scheme.m - 1)
              for s in range(scheme.k)]
    return table[labels]


def map_bits(bits: int, scheme: ImScheme) -> np.ndarray:
    """Map a b-bit word to its length-N transmit vector.

    Index bits occupy the most significant positions of the word and select
    the active-subcarrier pattern; symbol bits fill the active positions in
    increasing subcarrier order.
    """
    if bits < 0 or bits >= (1 << scheme.b):
        raise ValueError(f"bit word {bits} does not fit in {scheme.b} bits")
    idx_rank = bits >> scheme.b_sym
    sym_bits = bits & ((1 << scheme.b_sym) - 1)
    pattern = unrank_pattern(idx_rank, scheme.n, scheme.k)
    vec = np.zeros(scheme.n, dtype=complex)
    vec[list(pattern)] = modulate_symbols(sym_bits, scheme)
    return vec


def demap_vector(entry: np.ndarray, scheme: ImScheme) -> int:
    """Inverse of map_bits; raises ValueError if `entry` is not a codeword."""
    entry = np.asarray(entry)
    if entry.shape != (scheme.n,):
        raise ValueError(f"expected a length-{scheme.n} vector, got shape {entry.shape}")
    active = np.flatnonzero(entry)
    if len(active) != scheme.k:
        raise ValueError(f"not a codeword: {len(active)} nonzero entries, expected {scheme.k}")
    rank = rank_pattern(tuple(int(i) for i in active), scheme.n)
    if rank >= (1 << scheme.b_ind):
        raise ValueError(f"not a codeword: pattern rank {rank} is not a legal index word")
    table = _gray_psk_table(scheme.m)
    m_bits = scheme.m.bit_length() - 1
    sym_bits = 0
    for value in entry[active]:
        dist = np.abs(table - value)
        label = int(np.argmin(dist))
        if dist[label] > 1e-9:
            raise ValueError(f"not a codeword: entry {value} matches no constellation point")
        sym_bits = (sym_bits << m_bits) | label
    return (rank << scheme.b_sym) | sym_bits


@dataclass(frozen=True)
class CodebookEntry:
    bits: int
    cls: int
    pattern: tuple
    symbols: np.ndarray
    vector: np.ndarray


@dataclass(frozen=True)
class Codebook:
    """All 2^b legal transmit vectors of one user, indexed by class = bit word."""

    scheme: ImScheme
    entries: list
    vectors: np.ndarray = field(repr=False)  # (2^b, N) complex, row i = class i

    def __len__(self):
        return len(self.entries)


def build_codebook(scheme: ImScheme) -> Codebook:
    """Enumerate every legal codeword; entry at class i is map_bits(i)."""
    if scheme.b > 20:
        raise ValueError(f"codebook too large: b={scheme.b} exceeds the b <= 20 guard")
    entries = []
    vectors = np.zeros((scheme.n_classes, scheme.n), dtype=complex)
    for word in range(scheme.n_classes):
        vec = map_bits(word, scheme)
        idx_rank = word >> scheme.b_sym
        entries.append(CodebookEntry(
            bits=word,
            cls=word,
            pattern=unrank_pattern(idx_rank, scheme.n, scheme.k),
            symbols=vec[vec != 0],
            vector=vec,
        ))
        vectors[word] = vec
    return Codebook(scheme=scheme, entries=entries, vectors=vectors)


@functools.lru_cache(maxsize=16)
def cached_codebook(scheme: ImScheme) -> Codebook:
    """Memoized build_codebook; codebooks are immutable and safe to share."""
    return build_codebook(scheme)


def class_to_onehot(cls: int, scheme: ImScheme) -> np.ndarray:
    """Unit vector of length 2^b with a 1 at position `cls`."""
    if cls < 0 or cls >= scheme.n_classes:
        raise ValueError(f"class {cls} out of range [0, {scheme.n_classes})")
    vec = np.zeros(scheme.n_classes)
    vec[cls] = 1.0
    return vec


def onehot_to_class(vec: np.ndarray) -> int:
    """Largest entry wins; lowest index on exact ties."""
    return int(np.argmax(vec))
