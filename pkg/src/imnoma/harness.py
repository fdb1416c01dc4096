"""Reproduction front-end: config parsing, BER sweeps, runtime benchmark.

Configs are flat `key = value` text files; every key has a documented
default so an empty file runs the reference two-user setup.  Sweeps derive
one RNG stream per (detector, SNR point) from the master seed, count bit
errors as exact integers, and emit a CSV plus a run manifest; identical
config and seed reproduce both byte for byte.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, deepsic
from .channel import NomaChannel, awgn, superimpose
from .im_codec import cached_codebook, make_scheme
from .ml_detectors import JmlDetector, SicDetector

DETECTOR_IDS = {"jml": 0, "mlsic": 1, "deepsic": 2}


@dataclass(frozen=True)
class SimConfig:
    n: int = 4
    k: int = 1
    m: int = 4
    h1: tuple = (2.0, 2.0, 2.0, 2.0)
    h2: tuple = (1.0, 1.0, 1.0, 1.0)
    p1: float = 2.0
    p2: float = 1.0
    detectors: tuple = ("jml", "mlsic", "deepsic")
    snr_db: tuple = tuple(float(s) for s in range(0, 25, 2))
    blocks: int = 1000000
    seed: int = 0
    output: str = ""
    model_path: str = ""
    train_snr_db: float = 18.0
    epochs: int = 500
    samples_per_epoch: int = 4000
    batch_size: int = 200
    learning_rate: float = 0.001
    end_to_end: bool = True
    hidden1: tuple = (32, 64)
    hidden2: tuple = (128, 256)
    bench_samples: int = 10000
    bench_warmup: int = 100
    bench_snr_db: float = 20.0


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_complex_list(text):
    return tuple(complex(part.strip().replace("i", "j")) for part in text.split(","))


def _parse_int_list(text):
    return tuple(int(part.strip()) for part in text.split(","))


def _parse_float_list(text):
    return tuple(float(part.strip()) for part in text.split(","))


def _parse_str_list(text):
    return tuple(part.strip().lower() for part in text.split(",") if part.strip())


_COERCERS = {
    "n": int, "k": int, "m": int,
    "h1": _parse_complex_list, "h2": _parse_complex_list,
    "p1": float, "p2": float,
    "detectors": _parse_str_list,
    "snr_db": _parse_float_list,
    "blocks": int, "seed": int,
    "output": str.strip, "model_path": str.strip,
    "train_snr_db": float, "epochs": int, "samples_per_epoch": int,
    "batch_size": int, "learning_rate": float, "end_to_end": _parse_bool,
    "hidden1": _parse_int_list, "hidden2": _parse_int_list,
    "bench_samples": int, "bench_warmup": int, "bench_snr_db": float,
}


def _validate(cfg: SimConfig) -> SimConfig:
    make_scheme(cfg.n, cfg.k, cfg.m)  # rejects bad (N, K, M)
    for name, h in (("h1", cfg.h1), ("h2", cfg.h2)):
        if len(h) != cfg.n:
            raise ValueError(f"{name} has {len(h)} entries, expected N={cfg.n}")
    if not cfg.snr_db:
        raise ValueError("snr_db grid is empty")
    if any(b <= a for a, b in zip(cfg.snr_db, cfg.snr_db[1:])):
        raise ValueError(f"snr_db grid must be strictly increasing, got {cfg.snr_db}")
    if cfg.blocks < 1:
        raise ValueError("blocks must be >= 1")
    unknown = set(cfg.detectors) - set(DETECTOR_IDS)
    if unknown:
        raise ValueError(f"unknown detectors {sorted(unknown)}; choose from {sorted(DETECTOR_IDS)}")
    if not cfg.detectors:
        raise ValueError("detectors list is empty")
    train_config_from(cfg)  # rejects bad training keys up front
    return cfg


def _apply_items(cfg: SimConfig, items) -> SimConfig:
    updates = {}
    for where, key, text in items:
        if key not in _COERCERS:
            raise ValueError(f"{where}: unknown key {key!r}")
        try:
            updates[key] = _COERCERS[key](text)
        except ValueError as exc:
            raise ValueError(f"{where}: bad value for {key!r}: {exc}") from exc
    return replace(cfg, **updates)


def parse_config(path, overrides=()) -> SimConfig:
    """Strict key=value parse; unknown keys and malformed values are errors."""
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            items.append((f"{path}:{lineno}", key.strip().lower(), value.strip()))
    cfg = _apply_items(SimConfig(), items)
    cfg = apply_overrides(cfg, overrides)
    return _validate(cfg)


def apply_overrides(cfg: SimConfig, overrides) -> SimConfig:
    """Apply 'key=value' strings (CLI flags) on top of a config."""
    items = []
    for text in overrides:
        if "=" not in text:
            raise ValueError(f"override {text!r} is not of the form key=value")
        key, _, value = text.partition("=")
        items.append((f"override {text!r}", key.strip().lower(), value.strip()))
    return _validate(_apply_items(cfg, items))


def default_config() -> SimConfig:
    return SimConfig()


def build_channel(cfg: SimConfig) -> NomaChannel:
    return NomaChannel(h=np.array([cfg.h1, cfg.h2]), p=np.array([cfg.p1, cfg.p2]))


def train_config_from(cfg: SimConfig) -> deepsic.TrainConfig:
    return deepsic.TrainConfig(
        lambda_train=cfg.train_snr_db, epochs=cfg.epochs,
        samples_per_epoch=cfg.samples_per_epoch, batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate, seed=cfg.seed,
        end_to_end=cfg.end_to_end, hidden=(cfg.hidden1, cfg.hidden2))


@dataclass(frozen=True)
class BerRow:
    detector: str
    user: int
    snr_db: float
    bit_errors: int
    bits_tested: int
    ber: float


@dataclass
class BerCurve:
    rows: list = field(default_factory=list)

    def as_csv(self) -> str:
        lines = ["detector,user,snr_db,bit_errors,bits_tested,ber"]
        for r in self.rows:
            lines.append(f"{r.detector},{r.user},{r.snr_db:g},{r.bit_errors},"
                         f"{r.bits_tested},{r.ber:.12e}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.as_csv())

    def ber(self, detector: str, user: int):
        """(snr_db, ber) arrays for one detector/user, in grid order."""
        pts = [(r.snr_db, r.ber) for r in self.rows if r.detector == detector and r.user == user]
        snr, ber = zip(*pts)
        return np.array(snr), np.array(ber)


def config_manifest(cfg: SimConfig) -> str:
    lines = [f"imnoma {__version__}"]
    for key in sorted(_COERCERS):
        value = getattr(cfg, key)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_manifest(cfg: SimConfig, output_path) -> str:
    path = f"{output_path}.manifest.txt"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_manifest(cfg))
    return path


def _deepsic_model(cfg: SimConfig, scheme, ch, model=None):
    if model is None and cfg.model_path:
        model, _ = deepsic.load_bundle(cfg.model_path)
    elif model is None:
        model, _ = deepsic.train(train_config_from(cfg), scheme, ch)
    if model.scheme != scheme:
        raise ValueError(f"model bundle was trained for (N,K,M)="
                         f"({model.scheme.n},{model.scheme.k},{model.scheme.m}), "
                         f"config wants ({scheme.n},{scheme.k},{scheme.m})")
    return model


def _batch_detectors(cfg: SimConfig, scheme, ch, model):
    book = cached_codebook(scheme)
    fns = {}
    for name in cfg.detectors:
        if name == "jml":
            fns[name] = JmlDetector(ch, (book, book)).detect_classes_batch
        elif name == "mlsic":
            fns[name] = SicDetector(ch, (book, book)).detect_classes_batch
        else:
            fns[name] = lambda y: deepsic.detect_classes_batch(model, y, ch)
    return fns


def run_sweep(cfg: SimConfig, model=None) -> BerCurve:
    """Monte-Carlo BER over the SNR grid for every selected detector.

    The DeepSIC detector takes `model` if given, else loads cfg.model_path,
    else trains inline from the config's training keys.  Writes the CSV and
    manifest when cfg.output is set.
    """
    scheme = make_scheme(cfg.n, cfg.k, cfg.m)
    ch = build_channel(cfg)
    if "deepsic" in cfg.detectors:
        model = _deepsic_model(cfg, scheme, ch, model)
    fns = _batch_detectors(cfg, scheme, ch, model)

    curve = BerCurve()
    for name in cfg.detectors:
        for snr_index, snr in enumerate(cfg.snr_db):
            rng = np.random.default_rng([cfg.seed, DETECTOR_IDS[name], snr_index])
            errors, bits, ber = deepsic.ber_of_detector(
                fns[name], scheme, ch, snr, cfg.blocks, rng)
            for user in range(ch.n_users):
                curve.rows.append(BerRow(detector=name, user=user + 1, snr_db=snr,
                                         bit_errors=int(errors[user]),
                                         bits_tested=int(bits[user]),
                                         ber=float(ber[user])))
    if cfg.output:
        curve.write_csv(cfg.output)
        write_manifest(cfg, cfg.output)
    return curve


@dataclass(frozen=True)
class RuntimeReport:
    samples: int
    seconds: dict  # detector -> total timed seconds
    seconds_per_sample: dict

    def as_text(self) -> str:
        lines = [f"samples per detector: {self.samples}"]
        for name, sps in self.seconds_per_sample.items():
            lines.append(f"{name}: {sps:.3e} s/sample ({self.seconds[name]:.3f} s total)")
        return "\n".join(lines) + "\n"


def _time_detector(fn, views, warmup: int) -> float:
    for v in views[:warmup]:
        fn(v)
    timed = views[warmup:]
    t0 = time.perf_counter()
    for v in timed:
        fn(v)
    return time.perf_counter() - t0


def run_bench(cfg: SimConfig, model=None) -> RuntimeReport:
    """Per-sample runtime of single-block detection on one shared input stream.

    All detectors see the same pregenerated received blocks; warm-up calls
    and all setup (codebooks, model load) are excluded from timing.  Raises
    if the measured ordering is not t_jml > t_mlsic > t_deepsic.
    """
    if cfg.bench_samples < 10000:
        raise ValueError("bench_samples must be >= 10000 for a reportable run")
    if cfg.bench_warmup < 100:
        raise ValueError("bench_warmup must be >= 100")
    scheme = make_scheme(cfg.n, cfg.k, cfg.m)
    ch = build_channel(cfg)
    if model is None and not cfg.model_path:
        raise ValueError("bench needs a trained model: pass one or set model_path")
    model = _deepsic_model(cfg, scheme, ch, model)
    book = cached_codebook(scheme)

    rng = np.random.default_rng([cfg.seed, 0xBE])
    total = cfg.bench_warmup + cfg.bench_samples
    words = [rng.integers(0, scheme.n_classes, size=total) for _ in range(ch.n_users)]
    y = awgn(superimpose([book.vectors[w] for w in words], ch), cfg.bench_snr_db, rng)
    views = [y[i] for i in range(total)]

    jml = JmlDetector(ch, (book, book))
    sic = SicDetector(ch, (book, book))
    deep_fn = lambda v: deepsic.detect(model, v, ch)
    seconds = {
        "jml": _time_detector(jml.detect, views, cfg.bench_warmup),
        "mlsic": _time_detector(sic.detect, views, cfg.bench_warmup),
        "deepsic": _time_detector(deep_fn, views, cfg.bench_warmup),
    }
    sps = {name: t / cfg.bench_samples for name, t in seconds.items()}
    if not (sps["jml"] > sps["mlsic"] > sps["deepsic"]):
        raise RuntimeError(f"runtime ordering violated: {sps}")
    return RuntimeReport(samples=cfg.bench_samples, seconds=seconds,
                         seconds_per_sample=sps)


def cmd_train(cfg: SimConfig):
    """Train from the config's training keys and write the model bundle."""
    if not cfg.model_path:
        raise ValueError("set model_path (or --output) to say where the bundle goes")
    scheme = make_scheme(cfg.n, cfg.k, cfg.m)
    ch = build_channel(cfg)
    model, history = deepsic.train(train_config_from(cfg), scheme, ch)
    deepsic.save_bundle(model, cfg.model_path, lambda_train=cfg.train_snr_db,
                        seed=cfg.seed, end_to_end=cfg.end_to_end)
    return model, history
