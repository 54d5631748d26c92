"""Fixed-point binary arithmetic coding primitives with optional interval overlap.

The encoder and the decoder share the same subdivision and renormalization
arithmetic, so both sides walk bit-identical interval trajectories. The
coder keeps ``low`` and ``range`` as W-bit integers and renormalizes with the
usual half/quarter (pending-bit) scheme until ``range`` exceeds a quarter of
the register.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

ZERO = 0
ONE = 1
AMBIGUOUS = 2


class InconsistentPath(Exception):
    """A forced symbol selected a subinterval that excludes the codeword."""


@dataclass(frozen=True)
class FixedPointParams:
    register_width: int = 32
    prob_fraction_bits: int = 16

    def __post_init__(self):
        if self.prob_fraction_bits < 1:
            raise ValueError("prob_fraction_bits must be >= 1")
        if self.register_width < self.prob_fraction_bits + 2:
            raise ValueError("register_width must be >= prob_fraction_bits + 2")

    @property
    def full(self) -> int:
        return 1 << self.register_width

    @property
    def half(self) -> int:
        return 1 << (self.register_width - 1)

    @property
    def quarter(self) -> int:
        return 1 << (self.register_width - 2)

    @property
    def one(self) -> int:
        """Quantized probability 1.0."""
        return 1 << self.prob_fraction_bits

    def quantize(self, prob: float) -> int:
        """Round a probability to the F-bit grid, keeping it in [1, 2^F]."""
        q = int(round(prob * self.one))
        return min(max(q, 1), self.one)


DEFAULT_PARAMS = FixedPointParams()


class CoderState(NamedTuple):
    """Interval state. ``pending`` is encoder-only; ``value``/``cursor`` decoder-only."""

    low: int
    range: int
    pending: int = 0
    value: int = 0
    cursor: int = 0


class SubdivisionPlan(NamedTuple):
    low: int
    range: int
    c0: int
    c1: int

    @property
    def zero_only(self) -> tuple[int, int]:
        return self.low, self.low + self.range - self.c1

    @property
    def overlap(self) -> tuple[int, int]:
        return self.low + self.range - self.c1, self.low + self.c0

    @property
    def one_only(self) -> tuple[int, int]:
        return self.low + self.c0, self.low + self.range

    @property
    def overlap_width(self) -> int:
        return self.c0 + self.c1 - self.range


class BitSink:
    """Append-only bit buffer."""

    def __init__(self):
        self.bits: list[int] = []

    def append(self, bit: int) -> None:
        self.bits.append(bit)

    def extend(self, bits: Iterable[int]) -> None:
        self.bits.extend(bits)

    def __len__(self) -> int:
        return len(self.bits)

    def to_bytes(self) -> bytes:
        return pack_bits(self.bits)


class BitSource:
    """Random-access / sequential bit reader that yields 0 past the end."""

    def __init__(self, bits: Sequence[int]):
        self.bits = list(bits)
        self.pos = 0
        self.exhausted = False

    @classmethod
    def from_bytes(cls, data: bytes, nbits: int | None = None) -> "BitSource":
        return cls(unpack_bits(data, nbits))

    def __len__(self) -> int:
        return len(self.bits)

    def bit_at(self, cursor: int) -> int:
        if cursor < len(self.bits):
            return self.bits[cursor]
        self.exhausted = True
        return 0

    def read(self) -> int:
        bit = self.bit_at(self.pos)
        self.pos += 1
        return bit


def pack_bits(bits: Sequence[int]) -> bytes:
    """Big-endian bit order within bytes, zero-padded to a byte boundary."""
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i >> 3] |= 0x80 >> (i & 7)
    return bytes(out)


def unpack_bits(data: bytes, nbits: int | None = None) -> list[int]:
    if nbits is None:
        nbits = 8 * len(data)
    if nbits > 8 * len(data):
        raise ValueError(f"need {nbits} bits, have {8 * len(data)}")
    return [(data[i >> 3] >> (7 - (i & 7))) & 1 for i in range(nbits)]


def subdivide(state: CoderState, pt0_q: int, pt1_q: int,
              params: FixedPointParams = DEFAULT_PARAMS) -> SubdivisionPlan:
    """Split ``state``'s interval into two (possibly overlapping) subintervals.

    Symbol 0 is anchored at ``low`` and symbol 1 at the top of the interval.
    Widths are floored with a minimum of one; a rounding gap is closed by
    widening the symbol-0 interval.
    """
    rng = state.range
    f = params.prob_fraction_bits
    c0 = max(1, (rng * pt0_q) >> f)
    c1 = max(1, (rng * pt1_q) >> f)
    if c0 + c1 < rng:
        c0 = rng - c1
    return SubdivisionPlan(state.low, rng, c0, c1)


def _narrow(low: int, plan: SubdivisionPlan, symbol: int) -> tuple[int, int]:
    if symbol:
        return low + plan.range - plan.c1, plan.c1
    return low, plan.c0


def encode_select(state: CoderState, plan: SubdivisionPlan, symbol: int, sink: BitSink,
                  params: FixedPointParams = DEFAULT_PARAMS) -> CoderState:
    low, rng = _narrow(state.low, plan, symbol)
    pending = state.pending
    half, quarter = params.half, params.quarter
    while True:
        if low + rng <= half:
            sink.append(0)
            sink.extend([1] * pending)
            pending = 0
        elif low >= half:
            sink.append(1)
            sink.extend([0] * pending)
            pending = 0
            low -= half
        elif low >= quarter and low + rng <= 3 * quarter:
            pending += 1
            low -= quarter
        else:
            break
        low <<= 1
        rng <<= 1
    return CoderState(low, rng, pending)


def finalize(state: CoderState, sink: BitSink,
             params: FixedPointParams = DEFAULT_PARAMS) -> None:
    """Flush two guard bits (plus pending) naming a quarter inside the interval.

    After renormalization the interval straddles the half point, so it
    contains either [1/2, 3/4) or [1/4, 1/2); that quarter is emitted, and any
    trailing padding keeps the value inside the final interval.
    """
    pending = state.pending + 1
    if state.low + state.range >= 3 * params.quarter:
        sink.append(1)
        sink.extend([0] * pending)
    else:
        sink.append(0)
        sink.extend([1] * pending)


def encoder_init(params: FixedPointParams = DEFAULT_PARAMS) -> CoderState:
    return CoderState(0, params.full)


def decoder_init(source: BitSource, params: FixedPointParams = DEFAULT_PARAMS) -> CoderState:
    w = params.register_width
    value = 0
    for i in range(w):
        value = (value << 1) | source.bit_at(i)
    return CoderState(0, params.full, 0, value, w)


def decoder_classify(state: CoderState, plan: SubdivisionPlan) -> int:
    off = state.value - state.low
    if off < 0 or off >= plan.range:
        raise InconsistentPath("codeword value outside the current interval")
    if off < plan.range - plan.c1:
        return ZERO
    if off >= plan.c0:
        return ONE
    return AMBIGUOUS


def decoder_select(state: CoderState, plan: SubdivisionPlan, symbol: int, source: BitSource,
                   params: FixedPointParams = DEFAULT_PARAMS, strict: bool = True) -> CoderState:
    """Mirror of :func:`encode_select` that also shifts codeword bits into ``value``.

    With ``strict=False`` a value outside the chosen subinterval is carried
    along (it stays outside through renormalization) instead of raising.
    """
    low, rng = _narrow(state.low, plan, symbol)
    value, cursor = state.value, state.cursor
    if strict and not low <= value < low + rng:
        raise InconsistentPath(f"symbol {symbol} excludes codeword value")
    half, quarter = params.half, params.quarter
    while True:
        if low + rng <= half:
            pass
        elif low >= half:
            low -= half
            value -= half
        elif low >= quarter and low + rng <= 3 * quarter:
            low -= quarter
            value -= quarter
        else:
            break
        low <<= 1
        rng <<= 1
        value = (value << 1) | source.bit_at(cursor)
        cursor += 1
    return CoderState(low, rng, 0, value, cursor)


def encode_symbols(symbols: Sequence[int], pt0_q: Sequence[int], pt1_q: Sequence[int],
                   params: FixedPointParams = DEFAULT_PARAMS) -> list[int]:
    """Run the encoder over a whole block and return the flushed bits."""
    sink = BitSink()
    state = encoder_init(params)
    for sym, a, b in zip(symbols, pt0_q, pt1_q):
        state = encode_select(state, subdivide(state, a, b, params), sym, sink, params)
    finalize(state, sink, params)
    return sink.bits
