"""Asymmetric distributed arithmetic coding: schedules, container, tree decoder."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import ac_core as ac
from ._backend import kernels_for
from .corr_models import CorrelationModel
from .rate_alloc import InvalidParam

MAGIC = b"DAC1"
VERSION = 1
MODE_ASYMMETRIC = 0
MODE_SYMMETRIC = 1
MODE_EQUAL_ALPHA = 2
HEADER_FRAC_BITS = 16
_HEADER = struct.Struct(">4sBBIHHHI")
_SYM_EXT = struct.Struct(">BB")

DEFAULT_M = 2048
DEFAULT_T = 15


class EmptyFrontier(RuntimeError):
    """Every decoding path left the codeword (corrupted or mismatched stream)."""


class HeaderError(ValueError):
    pass


def _q16(v: float) -> int:
    return int(round(v * (1 << HEADER_FRAC_BITS)))


@dataclass(frozen=True)
class EncoderSchedule:
    """Per-index enlarged probabilities for one block.

    ``p0_q`` and ``k_q`` are 16-bit fractions; everything else is derived
    from them, so a decoder rebuilds the identical schedule from a header.
    For the equal-alpha rule (``mode == MODE_EQUAL_ALPHA``) ``k_q`` holds
    ``alpha - 1`` instead of the exponent.
    """

    n: int
    t: int
    p0_q: int
    k_q: int
    mode: int = MODE_ASYMMETRIC
    role: int = 0
    n_sources: int = 1
    params: ac.FixedPointParams = ac.DEFAULT_PARAMS
    k_vec: np.ndarray = field(init=False, repr=False, compare=False)
    pt0_q: np.ndarray = field(init=False, repr=False, compare=False)
    pt1_q: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.t <= self.n:
            raise InvalidParam(f"need 0 <= T <= N, got T={self.t}, N={self.n}")
        if not 0 < self.p0_q < (1 << HEADER_FRAC_BITS):
            raise InvalidParam(f"quantized p0 {self.p0_q} out of range")
        active = np.zeros(self.n, dtype=bool)
        active[: self.n - self.t] = True
        if self.mode == MODE_SYMMETRIC:
            active &= (np.arange(self.n) % self.n_sources) == self.role
        one = self.params.one
        p0, p1 = self.p0, 1.0 - self.p0
        plain0 = self.params.quantize(p0)
        plain1 = one - plain0
        if self.mode == MODE_EQUAL_ALPHA:
            alpha = self.alpha
            e0 = self.params.quantize(min(alpha * p0, 1.0))
            e1 = self.params.quantize(min(alpha * p1, 1.0))
            k = 0.0
        else:
            k = self.k
            e0 = self.params.quantize(p0 ** (1.0 - k))
            e1 = self.params.quantize(p1 ** (1.0 - k))
        e1 = max(e1, one - e0)
        k_vec = np.where(active, k, 0.0)
        pt0 = np.where(active, e0, plain0).astype(np.int64)
        pt1 = np.where(active, e1, plain1).astype(np.int64)
        object.__setattr__(self, "k_vec", k_vec)
        object.__setattr__(self, "pt0_q", pt0)
        object.__setattr__(self, "pt1_q", pt1)

    @property
    def p0(self) -> float:
        return self.p0_q / (1 << HEADER_FRAC_BITS)

    @property
    def k(self) -> float:
        return 0.0 if self.mode == MODE_EQUAL_ALPHA else self.k_q / (1 << HEADER_FRAC_BITS)

    @property
    def alpha(self) -> float:
        return 1.0 + self.k_q / (1 << HEADER_FRAC_BITS)

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.k_vec > 0)

    def plan_probs(self, i: int) -> tuple[int, int]:
        return int(self.pt0_q[i]), int(self.pt1_q[i])


def build_schedule(n: int, t: int, k: float, p0: float,
                   active_set: Iterable[int] | None = None,
                   params: ac.FixedPointParams = ac.DEFAULT_PARAMS) -> EncoderSchedule:
    """Overlap ``k`` on non-terminal indexes (optionally restricted to ``active_set``).

    An explicit ``active_set`` must be a residue class ``{i | i % P == j}``;
    that is the only shape the container can signal.
    """
    if n <= 0:
        raise InvalidParam(f"block length must be positive, got {n}")
    if not 0 <= t <= n:
        raise InvalidParam(f"need 0 <= T <= N, got T={t}, N={n}")
    if not 0.0 <= k < 1.0:
        raise InvalidParam(f"k={k} outside [0, 1)")
    if not 0.0 < p0 < 1.0:
        raise InvalidParam(f"p0={p0} outside (0, 1)")
    p0_q = min(max(_q16(p0), 1), (1 << HEADER_FRAC_BITS) - 1)
    k_q = min(_q16(k), (1 << HEADER_FRAC_BITS) - 1)
    if active_set is None:
        return EncoderSchedule(n, t, p0_q, k_q, params=params)
    role, n_sources = _residue_class(active_set, n)
    if n_sources == 1:
        return EncoderSchedule(n, t, p0_q, k_q, params=params)
    return EncoderSchedule(n, t, p0_q, k_q, MODE_SYMMETRIC, role, n_sources, params)


def _residue_class(active_set: Iterable[int], n: int) -> tuple[int, int]:
    idx = sorted(set(int(i) for i in active_set))
    if any(i < 0 or i >= n for i in idx):
        raise InvalidParam("active set indexes must lie in [0, N)")
    if not idx:
        raise InvalidParam("empty active set: encode with k=0 instead")
    role = idx[0]
    step = idx[1] - idx[0] if len(idx) > 1 else max(n, role + 1)
    if idx != list(range(role, n, step)) or role >= step:
        raise InvalidParam("active set must be {i | i % P == j}")
    return role, step


def build_equal_alpha_schedule(n: int, t: int, alpha: float, p0: float,
                               params: ac.FixedPointParams = ac.DEFAULT_PARAMS) -> EncoderSchedule:
    """Schedule using the equal-enlargement rule on non-terminal indexes."""
    if not 1.0 <= alpha < 2.0:
        raise InvalidParam(f"alpha={alpha} outside [1, 2)")
    p0_q = min(max(_q16(p0), 1), (1 << HEADER_FRAC_BITS) - 1)
    a_q = min(_q16(alpha - 1.0), (1 << HEADER_FRAC_BITS) - 1)
    return EncoderSchedule(n, t, p0_q, a_q, MODE_EQUAL_ALPHA, params=params)


@dataclass
class DacBitstream:
    schedule: EncoderSchedule
    payload: np.ndarray

    @property
    def n_bits(self) -> int:
        return int(len(self.payload))

    @property
    def rate(self) -> float:
        """Payload bits per source symbol; the header is not counted."""
        return self.n_bits / self.schedule.n

    def to_bytes(self) -> bytes:
        s = self.schedule
        head = _HEADER.pack(MAGIC, VERSION, s.mode, s.n, s.t, s.p0_q, s.k_q, self.n_bits)
        if s.mode == MODE_SYMMETRIC:
            head += _SYM_EXT.pack(s.role, s.n_sources)
        return head + np.packbits(self.payload).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes,
                   params: ac.FixedPointParams = ac.DEFAULT_PARAMS) -> "DacBitstream":
        if len(data) < _HEADER.size:
            raise HeaderError("truncated header")
        magic, version, mode, n, t, p0_q, k_q, nbits = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise HeaderError(f"bad magic {magic!r}")
        if version != VERSION:
            raise HeaderError(f"unsupported version {version}")
        off = _HEADER.size
        role, n_sources = 0, 1
        if mode == MODE_SYMMETRIC:
            if len(data) < off + _SYM_EXT.size:
                raise HeaderError("truncated symmetric header")
            role, n_sources = _SYM_EXT.unpack_from(data, off)
            off += _SYM_EXT.size
        elif mode not in (MODE_ASYMMETRIC, MODE_EQUAL_ALPHA):
            raise HeaderError(f"unknown mode {mode}")
        need = (nbits + 7) // 8
        body = data[off:]
        if len(body) < need:
            raise HeaderError(f"payload truncated: {len(body)} of {need} bytes")
        try:
            schedule = EncoderSchedule(n, t, p0_q, k_q, mode, role, n_sources, params)
        except InvalidParam as exc:
            raise HeaderError(str(exc)) from exc
        payload = np.unpackbits(np.frombuffer(body[:need], dtype=np.uint8))[:nbits]
        return cls(schedule, payload.astype(np.uint8))


def encode(x: Sequence[int], schedule: EncoderSchedule) -> DacBitstream:
    x = np.ascontiguousarray(x, dtype=np.uint8)
    if len(x) != schedule.n:
        raise InvalidParam(f"sequence length {len(x)} != N={schedule.n}")
    p = schedule.params
    kern = kernels_for(p.register_width, p.prob_fraction_bits)
    bits = kern.encode_payload(x, schedule.pt0_q, schedule.pt1_q,
                               p.register_width, p.prob_fraction_bits)
    return DacBitstream(schedule, np.asarray(bits, dtype=np.uint8))


def plan_at(schedule: EncoderSchedule, sigma: ac.CoderState, i: int) -> ac.SubdivisionPlan:
    a, b = schedule.plan_probs(i)
    return ac.subdivide(sigma, a, b, schedule.params)


def test_one_symbol(sigma: ac.CoderState, plan: ac.SubdivisionPlan, source: ac.BitSource,
                    params: ac.FixedPointParams = ac.DEFAULT_PARAMS):
    """``(symbol, next_state)``; on ambiguity ``(AMBIGUOUS, sigma)`` unchanged."""
    cls = ac.decoder_classify(sigma, plan)
    if cls == ac.AMBIGUOUS:
        return ac.AMBIGUOUS, sigma
    return cls, ac.decoder_select(sigma, plan, cls, source, params)


test_one_symbol.__test__ = False


def force_one_symbol(sigma: ac.CoderState, symbol: int, plan: ac.SubdivisionPlan,
                     source: ac.BitSource,
                     params: ac.FixedPointParams = ac.DEFAULT_PARAMS) -> ac.CoderState:
    """Take ``symbol``'s subinterval whatever the codeword says.

    A wrong choice is not reported here; the next classify on a descendant
    raises :class:`~daclab.ac_core.InconsistentPath`.
    """
    return ac.decoder_select(sigma, plan, symbol, source, params, strict=False)


def branch_metric(x: int, y: int, corr: CorrelationModel) -> float:
    """log2 P(X=x | Y=y) under the correlation model."""
    return corr.metric(x, y)


@dataclass(frozen=True)
class DecodeResult:
    x: np.ndarray
    metric: float
    peak_candidates: int
    branchings: int


def decode_detail(cw: DacBitstream, y: Sequence[int] | None, corr: CorrelationModel | None,
                  M: int = DEFAULT_M) -> DecodeResult:
    s = cw.schedule
    if M < 1:
        raise InvalidParam(f"M must be >= 1, got {M}")
    if y is None:
        if s.k_vec.any():
            raise InvalidParam("side information required for overlapped streams")
        y = np.zeros(s.n, np.uint8)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    if len(y) != s.n:
        raise InvalidParam(f"side information length {len(y)} != N={s.n}")
    lam = corr.table if corr is not None else np.zeros((2, 2))
    kern = kernels_for(s.params.register_width, s.params.prob_fraction_bits)
    status, xhat, metric, peak, branchings = kern.decode_tree(
        cw.payload, s.pt0_q, s.pt1_q, np.ascontiguousarray(lam, dtype=np.float64), y,
        int(M), s.params.register_width, s.params.prob_fraction_bits)
    if status == 1:
        raise EmptyFrontier("all decoding paths are inconsistent with the codeword")
    return DecodeResult(np.asarray(xhat, dtype=np.uint8), float(metric), int(peak),
                        int(branchings))


def decode(cw: DacBitstream, y: Sequence[int] | None, corr: CorrelationModel | None,
           M: int = DEFAULT_M) -> np.ndarray:
    return decode_detail(cw, y, corr, M).x


def map_oracle(cw: DacBitstream, y: Sequence[int], corr: CorrelationModel,
               max_n: int = 20) -> np.ndarray:
    """Exhaustive MAP decode over all 2^N sequences (ties -> lexicographically smallest).

    Sequences are walked depth-first in lexicographic order; a prefix whose
    forced subinterval excludes the codeword eliminates all its extensions.
    """
    s = cw.schedule
    if s.n > max_n:
        raise InvalidParam(f"oracle limited to N <= {max_n}")
    source = ac.BitSource([int(b) for b in cw.payload])
    params = s.params
    y = [int(v) for v in y]
    lam = [[corr.metric(a, b) for b in (0, 1)] for a in (0, 1)]
    best_metric = float("-inf")
    best_path: list[int] | None = None
    path: list[int] = []

    def walk(i: int, state: ac.CoderState, metric: float) -> None:
        nonlocal best_metric, best_path
        if i == s.n:
            if metric > best_metric:
                best_metric, best_path = metric, list(path)
            return
        a, b = s.plan_probs(i)
        plan = ac.subdivide(state, a, b, params)
        for sym in (0, 1):
            try:
                child = ac.decoder_select(state, plan, sym, source, params)
            except ac.InconsistentPath:
                continue
            path.append(sym)
            walk(i + 1, child, metric + lam[sym][y[i]])
            path.pop()

    walk(0, ac.decoder_init(source, params), 0.0)
    if best_path is None:
        raise EmptyFrontier("no sequence is consistent with the codeword")
    return np.asarray(best_path, dtype=np.uint8)
