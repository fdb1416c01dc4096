"""Link-level simulator for two-user uplink index-modulation NOMA.

Codec, superposition channel, joint-ML and ML-SIC baselines, a learned
SIC detector trained from scratch, and a reproduction harness for BER
sweeps and runtime benchmarks.
"""

__version__ = "0.1.0"

from .channel import NomaChannel, RxSignal, add_awgn, noise_variance_from_snr, superimpose
from .im_codec import (
    Codebook,
    ImScheme,
    build_codebook,
    class_to_onehot,
    demap_vector,
    make_scheme,
    map_bits,
    modulate_symbols,
    onehot_to_class,
    rank_pattern,
    unrank_pattern,
)
from .ml_detectors import DetectionResult, JmlDetector, SicDetector, jml_detect, ml_single_user, sic_detect

__all__ = [
    "__version__",
    "NomaChannel", "RxSignal", "add_awgn", "noise_variance_from_snr", "superimpose",
    "Codebook", "ImScheme", "build_codebook", "class_to_onehot", "demap_vector",
    "make_scheme", "map_bits", "modulate_symbols", "onehot_to_class",
    "rank_pattern", "unrank_pattern",
    "DetectionResult", "JmlDetector", "SicDetector", "jml_detect", "ml_single_user", "sic_detect",
]
