"""Learned SIC detector: ZF preprocessing plus cascaded per-user DNN blocks.

The received block is zero-forced against user 1's channel and split into a
2N real vector z.  DNN block l consumes [z, u_hat_1, ..., u_hat_{l-1}]
(soft probability vectors are fed forward, never hard decisions) and emits a
2^b softmax vector over that user's bit words.  Training is joint and
offline: one Adam optimizer drives both blocks to minimize the summed
per-user MSE, with fresh random batches every step; by default the gradient
of user 2's loss flows back into DNN 1 through the concatenated u_hat_1
slice (disable with end_to_end=False to ablate).

A trained model persists as a bundle: magic "DSBD", format version, the
scheme (N, K, M), user count, training SNR, seed, end-to-end flag, then one
"DSIM" weight block per DNN.  Loading refuses anything malformed; sweep
harnesses refuse bundles whose scheme disagrees with the run config.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import neural_net as nn
from .channel import NomaChannel, RxSignal, awgn, superimpose
from .im_codec import ImScheme, cached_codebook, make_scheme

_BUNDLE_MAGIC = b"DSBD"
_BUNDLE_VERSION = 1

TABLE_HIDDEN = ((32, 64), (128, 256))
TABLE_HIDDEN_ACTIVATIONS = ("tanh", "relu")  # user 1 prefers tanh, user 2 relu


@dataclass
class DeepSicModel:
    scheme: ImScheme
    dnns: list
    zf_reference: int = 0

    def __post_init__(self):
        q = self.scheme.n_classes
        for l, dnn in enumerate(self.dnns):
            want_in = 2 * self.scheme.n + l * q
            if dnn.in_dim != want_in:
                raise ValueError(f"DNN {l + 1} input width {dnn.in_dim}, expected {want_in}")
            if dnn.out_dim != q:
                raise ValueError(f"DNN {l + 1} output width {dnn.out_dim}, expected {q}")

    @property
    def n_users(self):
        return len(self.dnns)


@dataclass(frozen=True)
class TrainConfig:
    lambda_train: float = 18.0
    epochs: int = 500
    samples_per_epoch: int = 4000
    batch_size: int = 200
    learning_rate: float = 0.001
    seed: int = 0
    end_to_end: bool = True
    hidden: tuple = TABLE_HIDDEN

    def __post_init__(self):
        if self.epochs < 1 or self.samples_per_epoch < 1 or self.batch_size < 1:
            raise ValueError("epochs, samples_per_epoch and batch_size must be positive")
        if self.samples_per_epoch % self.batch_size != 0:
            raise ValueError(
                f"batch_size {self.batch_size} does not divide samples_per_epoch {self.samples_per_epoch}")


@dataclass
class TrainHistory:
    joint_loss: list = field(default_factory=list)  # per-epoch mean of the summed MSE
    train_ber: list = field(default_factory=list)  # per-epoch [user1, user2] error rates


def zf_equalize(y, h_ref: np.ndarray) -> np.ndarray:
    """Divide by the reference channel and split into [Re, Im], length 2N."""
    y = y.y if isinstance(y, RxSignal) else np.asarray(y)
    return zf_equalize_batch(y, h_ref)


def zf_equalize_batch(y: np.ndarray, h_ref: np.ndarray) -> np.ndarray:
    h_ref = np.asarray(h_ref)
    if np.any(h_ref == 0):
        raise ValueError("reference channel has a zero entry, cannot zero-force")
    y_bar = np.asarray(y) / h_ref
    return np.concatenate([y_bar.real, y_bar.imag], axis=-1)


def build_model(scheme: ImScheme, rng: np.random.Generator,
                hidden=TABLE_HIDDEN, n_users: int = 2) -> DeepSicModel:
    """Fresh Glorot-initialized DNN chain; block l has input 2N + (l-1)*2^b."""
    q = scheme.n_classes
    dnns = []
    for l in range(n_users):
        dims = [2 * scheme.n + l * q, *hidden[l], q]
        act = TABLE_HIDDEN_ACTIVATIONS[min(l, len(TABLE_HIDDEN_ACTIVATIONS) - 1)]
        activations = [act] * len(hidden[l]) + ["softmax"]
        dnns.append(nn.init_params(dims, activations, rng))
    return DeepSicModel(scheme=scheme, dnns=dnns)


def _cascade_forward(model: DeepSicModel, z: np.ndarray):
    """Soft outputs and caches of every DNN block on z of shape (..., 2N)."""
    softs, caches, inputs = [], [], []
    s = z
    for dnn in model.dnns:
        u_hat, cache = nn.forward(dnn, s)
        softs.append(u_hat)
        caches.append(cache)
        inputs.append(s)
        s = np.concatenate([s, u_hat], axis=-1)
    return softs, caches, inputs


def detect(model: DeepSicModel, y, ch: NomaChannel):
    """Per-user (soft output, hard class, bit word) for one received block."""
    z = zf_equalize(y, ch.h[model.zf_reference])
    softs, _, _ = _cascade_forward(model, z)
    out = []
    for u_hat in softs:
        cls = int(np.argmax(u_hat))
        out.append((u_hat, cls, cls))  # bit word == class by the word layout
    return out


def detect_classes_batch(model: DeepSicModel, y_batch: np.ndarray,
                         ch: NomaChannel) -> np.ndarray:
    """(B, L) hard classes for a (B, N) block of received signals."""
    z = zf_equalize_batch(y_batch, ch.h[model.zf_reference])
    softs, _, _ = _cascade_forward(model, z)
    return np.stack([np.argmax(u, axis=1) for u in softs], axis=1)


def generate_training_batch(scheme: ImScheme, ch: NomaChannel, snr_db: float,
                            batch_size: int, rng: np.random.Generator):
    """Random bit words -> superimposed noisy channel -> ZF inputs and one-hot labels."""
    book = cached_codebook(scheme)
    q = scheme.n_classes
    words = [rng.integers(0, q, size=batch_size) for _ in range(ch.n_users)]
    tx = [book.vectors[w] for w in words]
    y = awgn(superimpose(tx, ch), snr_db, rng)
    z = zf_equalize_batch(y, ch.h[0])
    eye = np.eye(q)
    labels = [eye[w] for w in words]
    return z, labels


def _bit_errors(words_a: np.ndarray, words_b: np.ndarray) -> int:
    return int(np.bitwise_count(np.bitwise_xor(words_a, words_b)).sum())


def train(cfg: TrainConfig, scheme: ImScheme, ch: NomaChannel, rng=None):
    """Joint offline training; returns the trained model and per-epoch history.

    Weight init and data generation use separate streams derived from
    cfg.seed, so the run is reproducible end to end.
    """
    if ch.n_users != 2:
        raise ValueError(f"training recipe is validated for L=2 only, got L={ch.n_users}")
    if rng is None:
        rng = np.random.default_rng([int(cfg.seed), 0x5EED])
    init_rng, data_rng = rng.spawn(2)
    model = build_model(scheme, init_rng, hidden=cfg.hidden, n_users=ch.n_users)
    dnn1, dnn2 = model.dnns
    adam1 = nn.init_adam(dnn1, eta=cfg.learning_rate)
    adam2 = nn.init_adam(dnn2, eta=cfg.learning_rate)

    b = scheme.b
    n2 = 2 * scheme.n
    batches = cfg.samples_per_epoch // cfg.batch_size
    history = TrainHistory()
    for _ in range(cfg.epochs):
        loss_sum = 0.0
        err = [0, 0]
        for _ in range(batches):
            z, (u1, u2) = generate_training_batch(scheme, ch, cfg.lambda_train,
                                                  cfg.batch_size, data_rng)
            u1_hat, cache1 = nn.forward(dnn1, z)
            s2 = np.concatenate([z, u1_hat], axis=1)
            u2_hat, cache2 = nn.forward(dnn2, s2)

            loss1, g1 = nn.mse_loss(u1_hat, u1, b)
            loss2, g2 = nn.mse_loss(u2_hat, u2, b)
            grads2, d_s2 = nn.backward(dnn2, cache2, g2)
            if cfg.end_to_end:
                g1 = g1 + d_s2[:, n2:]
            grads1, _ = nn.backward(dnn1, cache1, g1)
            nn.adam_step(dnn1, grads1, adam1)
            nn.adam_step(dnn2, grads2, adam2)

            loss_sum += loss1 + loss2
            for l, (u_hat, u) in enumerate(((u1_hat, u1), (u2_hat, u2))):
                err[l] += _bit_errors(np.argmax(u_hat, axis=1), np.argmax(u, axis=1))
        history.joint_loss.append(loss_sum / batches)
        history.train_ber.append([e / (cfg.samples_per_epoch * b) for e in err])
    return model, history


def ber_of_detector(classes_fn, scheme: ImScheme, ch: NomaChannel, snr_db: float,
                    n_blocks: int, rng: np.random.Generator, chunk_size: int = 10000):
    """Monte-Carlo per-user BER of any batched detector.

    classes_fn maps a (B, N) complex block of received signals to (B, L)
    decided classes.  Each chunk runs on its own child stream, so error
    counts are exact integers whose aggregation is order-independent.
    Returns (errors, bits_tested, ber) arrays over users.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    book = cached_codebook(scheme)
    q = scheme.n_classes
    n_users = ch.n_users
    errors = np.zeros(n_users, dtype=np.int64)
    n_chunks = (n_blocks + chunk_size - 1) // chunk_size
    streams = rng.spawn(n_chunks)
    done = 0
    for stream in streams:
        size = min(chunk_size, n_blocks - done)
        words = [stream.integers(0, q, size=size) for _ in range(n_users)]
        tx = [book.vectors[w] for w in words]
        y = awgn(superimpose(tx, ch), snr_db, stream)
        decided = classes_fn(y)
        for l in range(n_users):
            errors[l] += _bit_errors(words[l], decided[:, l])
        done += size
    bits_tested = np.full(n_users, n_blocks * scheme.b, dtype=np.int64)
    return errors, bits_tested, errors / bits_tested


def ber_of_model(model: DeepSicModel, ch: NomaChannel, snr_db: float,
                 n_blocks: int, rng: np.random.Generator):
    """Per-user Monte-Carlo BER of a trained model."""
    fn = lambda y: detect_classes_batch(model, y, ch)
    _, _, ber = ber_of_detector(fn, model.scheme, ch, snr_db, n_blocks, rng)
    return ber


def save_bundle(model: DeepSicModel, path, lambda_train: float, seed: int,
                end_to_end: bool) -> None:
    """Write the model plus the metadata needed to refuse mismatched schemes."""
    s = model.scheme
    with open(path, "wb") as fh:
        fh.write(_BUNDLE_MAGIC)
        fh.write(struct.pack("<HIIII", _BUNDLE_VERSION, s.n, s.k, s.m, model.n_users))
        fh.write(struct.pack("<dQB", float(lambda_train), int(seed), int(bool(end_to_end))))
        for dnn in model.dnns:
            nn.save_weights(dnn, fh)


def load_bundle(path):
    """Read a model bundle; returns (model, info dict)."""
    with open(path, "rb") as fh:
        if fh.read(4) != _BUNDLE_MAGIC:
            raise ValueError(f"{path}: not a model bundle (bad magic)")
        version, n, k, m, n_users = struct.unpack("<HIIII", fh.read(18))
        if version != _BUNDLE_VERSION:
            raise ValueError(f"{path}: unsupported bundle version {version}")
        lambda_train, seed, end_to_end = struct.unpack("<dQB", fh.read(17))
        scheme = make_scheme(n, k, m)
        dnns = [nn.load_weights(fh) for _ in range(n_users)]
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after the last weight block")
    model = DeepSicModel(scheme=scheme, dnns=dnns)
    info = {"lambda_train": lambda_train, "seed": int(seed), "end_to_end": bool(end_to_end)}
    return model, info
