from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from daclab import ac_core as ac
from daclab.ac_core import AMBIGUOUS, ONE, ZERO, BitSink, BitSource, CoderState

P = ac.DEFAULT_PARAMS
W = P.register_width


def state(rng_value, low=0):
    return CoderState(low, rng_value)


class TestParams:
    def test_defaults(self):
        assert (P.register_width, P.prob_fraction_bits) == (32, 16)
        assert P.half == 2**31 and P.quarter == 2**30 and P.one == 65536

    def test_width_must_exceed_fraction(self):
        with pytest.raises(ValueError):
            ac.FixedPointParams(16, 16)

    @pytest.mark.parametrize("prob,q", [(0.0, 1), (1.0, 65536), (0.5, 32768), (2**-17, 1)])
    def test_quantize_clamps(self, prob, q):
        assert P.quantize(prob) == q


class TestSubdivide:
    def test_plain_split(self):
        plan = ac.subdivide(state(65536), 32768, 32768)
        assert (plan.c0, plan.c1, plan.overlap_width) == (32768, 32768, 0)

    def test_balanced_overlap(self):
        plan = ac.subdivide(state(65536), 46341, 46341)
        assert (plan.c0, plan.c1) == (46341, 46341)
        assert plan.overlap_width == 2 * 46341 - 65536 == 27146

    def test_skewed_overlap(self):
        # widths are floor(range * q / 2^F); with range = 2^16 they equal q
        plan = ac.subdivide(state(65536), 62176, 20724)
        assert (plan.c0, plan.c1, plan.overlap_width) == (62176, 20724, 17364)

    def test_min_width_one(self):
        plan = ac.subdivide(state(5), 1, 1)
        assert plan.c1 >= 1 and plan.c0 + plan.c1 >= plan.range

    def test_gap_goes_to_zero_symbol(self):
        plan = ac.subdivide(state(2**31 + 3), 32768, 32768)
        assert plan.c0 + plan.c1 == plan.range
        assert plan.c1 == (plan.range * 32768) >> 16


@given(low=st.integers(0, 2**31), rng_exp=st.integers(31, 32), extra=st.integers(0, 2**30),
       q0=st.integers(1, 65536), q1=st.integers(1, 65536))
def test_no_gap_partition(low, rng_exp, extra, q0, q1):
    rng_v = min(2**rng_exp, 2**30 + 1 + extra)
    plan = ac.subdivide(CoderState(low, rng_v), q0, q1)
    if q0 + q1 < 65536:
        return  # assumes p̃0 + p̃1 >= 1 as every schedule does
    z, o, n = plan.zero_only, plan.overlap, plan.one_only
    assert z[0] == low and n[1] == low + rng_v
    assert z[1] == o[0] and o[1] == n[0]
    assert z[0] <= z[1] <= o[1] <= n[1]


class TestEncodeSelect:
    def test_symbol_zero_emits_zero(self):
        sink = BitSink()
        st0 = ac.encoder_init()
        out = ac.encode_select(st0, ac.subdivide(st0, 32768, 32768), 0, sink)
        assert sink.bits == [0]
        assert (out.low, out.range) == (0, 2**W)

    def test_symbol_one_emits_one(self):
        sink = BitSink()
        st0 = ac.encoder_init()
        out = ac.encode_select(st0, ac.subdivide(st0, 32768, 32768), 1, sink)
        assert sink.bits == [1]
        assert (out.low, out.range) == (0, 2**W)

    def test_overlapped_one_emits_nothing(self):
        sink = BitSink()
        st0 = ac.encoder_init()
        out = ac.encode_select(st0, ac.subdivide(st0, 46341, 46341), 1, sink)
        assert sink.bits == []
        assert out.low == (65536 - 46341) << 16 == 19195 << 16
        assert out.range == 46341 << 16


class TestFinalize:
    def test_whole_interval(self):
        sink = BitSink()
        ac.finalize(ac.encoder_init(), sink)
        assert sink.bits == [1, 0]

    def test_after_one_symbol(self):
        bits = ac.encode_symbols([0], [32768], [32768])
        assert bits == [0, 1, 0]

    def test_length_bound_k0(self, rng):
        x = rng.integers(0, 2, 1000)
        bits = ac.encode_symbols(x, [32768] * 1000, [32768] * 1000)
        assert 1000 <= len(bits) <= 1000 + W + 2


class TestBits:
    def test_pack_roundtrip(self):
        bits = [1, 0, 1, 1, 0, 0, 0, 1, 1]
        assert ac.pack_bits(bits) == bytes([0b10110001, 0b10000000])
        assert ac.unpack_bits(ac.pack_bits(bits), len(bits)) == bits

    def test_source_reads_zero_past_end(self):
        src = BitSource([1])
        assert [src.read(), src.read(), src.read()] == [1, 0, 0]
        assert src.exhausted

    def test_unpack_too_many(self):
        with pytest.raises(ValueError):
            ac.unpack_bits(b"\x00", 9)


def _decode_plain(bits, n, q0, q1):
    src = BitSource(bits)
    s = ac.decoder_init(src)
    out = []
    for _ in range(n):
        plan = ac.subdivide(s, q0, q1)
        c = ac.decoder_classify(s, plan)
        out.append(c)
        s = ac.decoder_select(s, plan, c, src)
    return out


class TestDecoder:
    def test_leading_zero_classifies_zero(self):
        src = BitSource([0] * 8)
        s = ac.decoder_init(src)
        assert ac.decoder_classify(s, ac.subdivide(s, 32768, 32768)) == ZERO

    def test_k0_roundtrip_101(self):
        bits = ac.encode_symbols([1, 0, 1], [32768] * 3, [32768] * 3)
        assert _decode_plain(bits, 3, 32768, 32768) == [ONE, ZERO, ONE]

    def test_overlapped_single_symbol_both_branches_valid(self):
        q = P.quantize(0.5 ** 0.1)
        bits = ac.encode_symbols([0], [q], [q])
        src = BitSource(bits)
        s = ac.decoder_init(src)
        plan = ac.subdivide(s, q, q)
        assert ac.decoder_classify(s, plan) == AMBIGUOUS
        for sym in (0, 1):
            child = ac.decoder_select(s, plan, sym, src)
            assert child.low <= child.value < child.low + child.range

    def test_outside_value_raises(self):
        s = CoderState(0, 2**W, 0, 2**W + 5, W)
        with pytest.raises(ac.InconsistentPath):
            ac.decoder_classify(s, ac.subdivide(s, 32768, 32768))

    def test_strict_select_rejects_excluding_symbol(self):
        src = BitSource([0] * 40)
        s = ac.decoder_init(src)
        plan = ac.subdivide(s, 32768, 32768)
        with pytest.raises(ac.InconsistentPath):
            ac.decoder_select(s, plan, 1, src)
        loose = ac.decoder_select(s, plan, 1, src, strict=False)
        assert not loose.low <= loose.value < loose.low + loose.range

    def test_two_bit_codewords_match_rational_oracle(self):
        # exact-rational classification of every 2-bit codeword of a one-symbol block
        q = P.quantize(0.5 ** 0.1)
        plan = ac.subdivide(ac.encoder_init(), q, q)
        lo1 = Fraction(plan.range - plan.c1, 2**W)
        hi0 = Fraction(plan.c0, 2**W)
        seen = []
        for b0 in (0, 1):
            for b1 in (0, 1):
                v = Fraction(2 * b0 + b1, 4)
                want = ZERO if v < lo1 else ONE if v >= hi0 else AMBIGUOUS
                s = ac.decoder_init(BitSource([b0, b1]))
                got = ac.decoder_classify(s, ac.subdivide(s, q, q))
                assert got == want
                seen.append(got)
        assert seen.count(AMBIGUOUS) == 3


sym_lists = st.lists(st.integers(0, 1), min_size=1, max_size=120)


@settings(max_examples=150, deadline=None)
@given(x=sym_lists, data=st.data())
def test_lockstep_and_renorm_safety(x, data):
    n = len(x)
    q0 = data.draw(st.lists(st.integers(1, 65535), min_size=n, max_size=n))
    q1 = [max(1, 65536 - a + data.draw(st.integers(0, 30000))) for a in q0]
    q1 = [min(b, 65536) for b in q1]
    sink = BitSink()
    enc = ac.encoder_init()
    traj = []
    for sym, a, b in zip(x, q0, q1):
        enc = ac.encode_select(enc, ac.subdivide(enc, a, b), sym, sink)
        assert 2 <= enc.range <= 2**W and enc.low + enc.range <= 2**W
        assert enc.range > P.quarter
        traj.append((enc.low, enc.range))
    ac.finalize(enc, sink)
    src = BitSource(sink.bits)
    dec = ac.decoder_init(src)
    for i, (sym, a, b) in enumerate(zip(x, q0, q1)):
        plan = ac.subdivide(dec, a, b)
        cls = ac.decoder_classify(dec, plan)
        assert cls in (sym, AMBIGUOUS)
        dec = ac.decoder_select(dec, plan, sym, src)
        assert (dec.low, dec.range) == traj[i]


@settings(max_examples=100, deadline=None)
@given(x=sym_lists, p0=st.floats(0.02, 0.98))
def test_classical_never_ambiguous(x, p0):
    q0 = P.quantize(p0)
    q0 = min(q0, 65535)
    q1 = 65536 - q0
    bits = ac.encode_symbols(x, [q0] * len(x), [q1] * len(x))
    assert _decode_plain(bits, len(x), q0, q1) == list(x)


def test_length_tracks_entropy():
    rng = np.random.default_rng(7)
    p0 = 0.8
    x = (rng.random(100_000) >= p0).astype(int)
    q0 = P.quantize(p0)
    bits = ac.encode_symbols(x, [q0] * len(x), [65536 - q0] * len(x))
    h = -(p0 * np.log2(p0) + (1 - p0) * np.log2(1 - p0))
    assert abs(len(bits) / len(x) - h) < 0.01
