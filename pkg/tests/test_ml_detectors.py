"""Classical detector tests: exhaustive noiseless recovery, naive oracle
agreement, invariances."""

import numpy as np
import pytest

from imnoma.channel import NomaChannel, add_awgn, awgn, superimpose
from imnoma.im_codec import build_codebook, make_scheme
from imnoma.ml_detectors import (
    JmlDetector,
    SicDetector,
    effective_codewords,
    jml_detect,
    ml_single_user,
    sic_detect,
)


@pytest.fixture(scope="module")
def setup414():
    scheme = make_scheme(4, 1, 4)
    ch = NomaChannel(h=np.array([[2, 2, 2, 2], [1, 1, 1, 1]]), p=np.array([2.0, 1.0]))
    book = build_codebook(scheme)
    return scheme, ch, (book, book)


def naive_jml(y, ch, books):
    """Independent double-loop reference: recompute the metric from scratch."""
    best = (np.inf, None, None)
    for c1 in range(len(books[0])):
        for c2 in range(len(books[1])):
            r = (y - np.sqrt(ch.p[0]) * ch.h[0] * books[0].vectors[c1]
                   - np.sqrt(ch.p[1]) * ch.h[1] * books[1].vectors[c2])
            m = float(np.sum(np.abs(r) ** 2))
            if m < best[0]:
                best = (m, c1, c2)
    return best[1], best[2]


class TestJml:
    def test_search_space_is_all_pairs(self, setup414):
        _, ch, books = setup414
        det = JmlDetector(ch, books)
        assert det._pair_sums.shape == (16 * 16, 4)

    def test_noiseless_exact_recovery_sample(self, setup414):
        _, ch, books = setup414
        det = JmlDetector(ch, books)
        rng = np.random.default_rng(1)
        for _ in range(40):
            w1, w2 = rng.integers(0, 16, size=2)
            y = superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch)
            res = det.detect(y)
            assert res.classes == (w1, w2)
            assert res.metric == 0.0

    def test_matches_naive_double_loop(self, setup414):
        _, ch, books = setup414
        det = JmlDetector(ch, books)
        rng = np.random.default_rng(2)
        for _ in range(200):
            w1, w2 = rng.integers(0, 16, size=2)
            y = awgn(superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch), 10.0, rng)
            assert det.detect(y).classes == naive_jml(y, ch, books)

    def test_batch_agrees_with_scalar(self, setup414):
        _, ch, books = setup414
        det = JmlDetector(ch, books)
        rng = np.random.default_rng(3)
        w1 = rng.integers(0, 16, 300)
        w2 = rng.integers(0, 16, 300)
        y = awgn(superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch), 8.0, rng)
        batch = det.detect_classes_batch(y)
        for i in range(300):
            assert tuple(batch[i]) == det.detect(y[i]).classes

    def test_accepts_rx_signal(self, setup414):
        _, ch, books = setup414
        rx = add_awgn(superimpose([books[0].vectors[5], books[1].vectors[9]], ch),
                      float("inf"), np.random.default_rng(0))
        assert jml_detect(rx, ch, books).classes == (5, 9)

    def test_rejects_three_users(self, setup414):
        _, _, books = setup414
        ch3 = NomaChannel(h=np.ones((3, 4)), p=np.array([3.0, 2.0, 1.0]))
        with pytest.raises(ValueError):
            JmlDetector(ch3, (books[0],) * 3)

    def test_deterministic(self, setup414):
        _, ch, books = setup414
        det = JmlDetector(ch, books)
        y = awgn(superimpose([books[0].vectors[7], books[1].vectors[11]], ch),
                 5.0, np.random.default_rng(9))
        assert det.detect(y) == det.detect(y)


class TestMlSingleUser:
    def test_exact_codeword_gives_zero_metric(self, setup414):
        _, ch, books = setup414
        for c in (0, 7, 15):
            y_eff = np.sqrt(ch.p[0]) * ch.h[0] * books[0].vectors[c]
            cls, metric = ml_single_user(y_eff, ch.h[0], ch.p[0], books[0])
            assert cls == c and metric == 0.0

    def test_zero_input_ties_break_to_class_zero(self, setup414):
        # unit-energy PSK with a flat channel: every codeword has the same norm
        _, ch, books = setup414
        eff = effective_codewords(books[0], ch.h[0], ch.p[0])
        norms = np.sum(np.abs(eff) ** 2, axis=1)
        np.testing.assert_allclose(norms, norms[0], rtol=1e-12)
        cls, _ = ml_single_user(np.zeros(4, dtype=complex), ch.h[0], ch.p[0], books[0])
        assert cls == 0

    def test_matches_jml_user1_when_p2_zero(self, setup414):
        _, _, books = setup414
        ch = NomaChannel(h=np.array([[2, 2, 2, 2], [1, 1, 1, 1]]), p=np.array([2.0, 0.0]))
        det = JmlDetector(ch, books)
        rng = np.random.default_rng(4)
        for _ in range(50):
            w1, w2 = rng.integers(0, 16, size=2)
            y = awgn(superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch), 12.0, rng)
            cls, _ = ml_single_user(y, ch.h[0], ch.p[0], books[0])
            assert det.detect(y).classes[0] == cls


class TestSic:
    def test_silent_second_user(self, setup414):
        _, _, books = setup414
        ch = NomaChannel(h=np.array([[2, 2, 2, 2], [1, 1, 1, 1]]), p=np.array([2.0, 0.0]))
        det = SicDetector(ch, books)
        y = superimpose([books[0].vectors[13], books[1].vectors[6]], ch)
        res = det.detect(y)
        assert res.classes[0] == 13
        assert res.metric == 0.0  # residual after cancelling user 1 is exactly zero

    def test_noiseless_exhaustive_recovery(self, setup414):
        _, ch, books = setup414
        det = SicDetector(ch, books)
        for w1 in range(16):
            for w2 in range(16):
                y = superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch)
                assert det.detect(y).classes == (w1, w2)

    def test_batch_agrees_with_scalar(self, setup414):
        _, ch, books = setup414
        det = SicDetector(ch, books)
        rng = np.random.default_rng(5)
        w1 = rng.integers(0, 16, 300)
        w2 = rng.integers(0, 16, 300)
        y = awgn(superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch), 8.0, rng)
        batch = det.detect_classes_batch(y)
        for i in range(300):
            assert tuple(batch[i]) == det.detect(y[i]).classes

    def test_requires_power_ordering(self, setup414):
        _, _, books = setup414
        # bypass the channel's own ordering check to hit the detector's guard
        ch = NomaChannel(h=np.ones((2, 4)), p=np.array([2.0, 1.0]))
        object.__setattr__(ch, "p", np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            SicDetector(ch, books)

    def test_wrapper_matches_class(self, setup414):
        _, ch, books = setup414
        y = awgn(superimpose([books[0].vectors[2], books[1].vectors[3]], ch),
                 15.0, np.random.default_rng(8))
        assert sic_detect(y, ch, books) == SicDetector(ch, books).detect(y)


class TestDetectorProperties:
    def test_jml_never_worse_than_sic(self, setup414):
        scheme, ch, books = setup414
        jml = JmlDetector(ch, books)
        sic = SicDetector(ch, books)
        rng = np.random.default_rng(6)
        n = 10 ** 4
        w = np.stack([rng.integers(0, 16, n), rng.integers(0, 16, n)], axis=1)
        y = awgn(superimpose([books[0].vectors[w[:, 0]], books[1].vectors[w[:, 1]]], ch),
                 20.0, rng)
        errs = {}
        for name, det in (("jml", jml), ("sic", sic)):
            decided = det.detect_classes_batch(y)
            errs[name] = np.array([
                np.bitwise_count(np.bitwise_xor(w[:, l], decided[:, l])).sum()
                for l in range(2)])
        bits = n * scheme.b
        for l in range(2):
            p_sic = errs["sic"][l] / bits
            sigma = np.sqrt(max(p_sic * (1 - p_sic), 1e-12) / bits)
            assert errs["jml"][l] / bits <= p_sic + 3 * sigma

    def test_decisions_invariant_under_common_scaling(self, setup414):
        _, ch, books = setup414
        rng = np.random.default_rng(7)
        for scale in (2.0, 3.7):
            ch_scaled = NomaChannel(h=ch.h * scale, p=ch.p)
            jml, jml_s = JmlDetector(ch, books), JmlDetector(ch_scaled, books)
            sic, sic_s = SicDetector(ch, books), SicDetector(ch_scaled, books)
            for _ in range(50):
                w1, w2 = rng.integers(0, 16, size=2)
                y = awgn(superimpose([books[0].vectors[w1], books[1].vectors[w2]], ch), 10.0, rng)
                assert jml.detect(y).classes == jml_s.detect(y * scale).classes
                assert sic.detect(y).classes == sic_s.detect(y * scale).classes

    def test_result_bits_match_classes(self, setup414):
        _, ch, books = setup414
        det = JmlDetector(ch, books)
        y = awgn(superimpose([books[0].vectors[3], books[1].vectors[12]], ch),
                 6.0, np.random.default_rng(10))
        res = det.detect(y)
        assert res.bits == tuple(books[l].entries[res.classes[l]].bits for l in range(2))
