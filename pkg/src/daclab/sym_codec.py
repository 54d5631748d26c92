"""Time-shared (symmetric) DAC: sources take turns carrying the ambiguity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import ac_core as ac
from ._backend import kernels_for
from .corr_models import CorrelationModel
from .dac_codec import (DEFAULT_M, MODE_SYMMETRIC, DacBitstream, EmptyFrontier, EncoderSchedule,
                        build_schedule, encode)
from .rate_alloc import InvalidParam


class RoleViolation(RuntimeError):
    """The source that should be unambiguous at this index tested ambiguous."""


@dataclass(frozen=True)
class RoleSchedule:
    n: int
    n_sources: int

    def role_set(self, j: int) -> np.ndarray:
        return np.arange(j, self.n, self.n_sources)

    @property
    def sets(self) -> list[np.ndarray]:
        return [self.role_set(j) for j in range(self.n_sources)]

    def owner(self) -> np.ndarray:
        """Index of the source allowed ambiguity at each position."""
        return np.arange(self.n) % self.n_sources


def role_sets(n: int, n_sources: int = 2) -> RoleSchedule:
    if n_sources < 1:
        raise InvalidParam("need at least one source")
    return RoleSchedule(n, n_sources)


def encode_sources(seqs: Sequence[Sequence[int]], ks: Sequence[float], p0s: Sequence[float],
                   n: int, t: int, params: ac.FixedPointParams = ac.DEFAULT_PARAMS
                   ) -> list[DacBitstream]:
    """Encode P sources, source j overlapping only on indexes i % P == j."""
    n_sources = len(seqs)
    if not (len(ks) == len(p0s) == n_sources):
        raise InvalidParam("one k and one p0 per source")
    roles = role_sets(n, n_sources)
    out = []
    for j, (x, k, p0) in enumerate(zip(seqs, ks, p0s)):
        if len(x) != n:
            raise InvalidParam(f"source {j} has length {len(x)} != N={n}")
        ids = roles.role_set(j) if n_sources > 1 else None
        if ids is not None and len(ids) == 0:
            ids = None
            k = 0.0
        sched = build_schedule(n, t, k, p0, active_set=ids, params=params)
        out.append(encode(x, sched))
    return out


def encode_pair(x: Sequence[int], y: Sequence[int], kx: float, ky: float, p0x: float,
                p0y: float, n: int, t: int,
                params: ac.FixedPointParams = ac.DEFAULT_PARAMS
                ) -> tuple[DacBitstream, DacBitstream]:
    cx, cy = encode_sources([x, y], [kx, ky], [p0x, p0y], n, t, params)
    return cx, cy


def joint_branch_metric(i: int, x: int, y: int, corr: CorrelationModel) -> float:
    """Even indexes score X given Y; odd indexes score Y given X."""
    if i % 2 == 0:
        return float(corr.table[x, y])
    return float(corr.reverse_table()[y, x])


def _role_of(s: EncoderSchedule, default: int) -> int:
    return s.role if s.mode == MODE_SYMMETRIC else default


def _check_pair(cx: DacBitstream, cy: DacBitstream) -> None:
    sx, sy = cx.schedule, cy.schedule
    if sx.n != sy.n or sx.t != sy.t:
        raise InvalidParam("streams disagree on N or T")
    if sx.params != sy.params:
        raise InvalidParam("streams use different fixed-point parameters")
    for s, role in ((sx, 0), (sy, 1)):
        if s.mode == MODE_SYMMETRIC and (s.n_sources != 2 or s.role != role):
            raise InvalidParam("joint decoding supports two sources with roles X=0, Y=1")
        if s.mode != MODE_SYMMETRIC and s.k_vec.any():
            raise InvalidParam("asymmetric overlapped stream cannot be jointly time-shared")


@dataclass(frozen=True)
class JointDecodeResult:
    x: np.ndarray
    y: np.ndarray
    metric: float
    peak_candidates: int
    branchings: int
    pair_tests: int


def decode_pair_detail(cx: DacBitstream, cy: DacBitstream, corr: CorrelationModel,
                       M: int = DEFAULT_M) -> JointDecodeResult:
    _check_pair(cx, cy)
    if M < 1:
        raise InvalidParam(f"M must be >= 1, got {M}")
    sx, sy = cx.schedule, cy.schedule
    p = sx.params
    active = (np.arange(sx.n) % 2).astype(np.uint8)
    kern = kernels_for(p.register_width, p.prob_fraction_bits)
    status, xh, yh, metric, peak, branchings, tests = kern.decode_joint(
        cx.payload, cy.payload, sx.pt0_q, sx.pt1_q, sy.pt0_q, sy.pt1_q,
        np.ascontiguousarray(corr.table), np.ascontiguousarray(corr.reverse_table()),
        active, int(M), p.register_width, p.prob_fraction_bits)
    if status == 2:
        raise RoleViolation("inactive source decoded ambiguously")
    if status == 1:
        raise EmptyFrontier("all joint paths are inconsistent with the codewords")
    return JointDecodeResult(np.asarray(xh, np.uint8), np.asarray(yh, np.uint8), float(metric),
                             int(peak), int(branchings), int(tests))


def decode_pair(cx: DacBitstream, cy: DacBitstream, corr: CorrelationModel,
                M: int = DEFAULT_M) -> tuple[np.ndarray, np.ndarray]:
    r = decode_pair_detail(cx, cy, corr, M)
    return r.x, r.y


def joint_oracle(cx: DacBitstream, cy: DacBitstream, corr: CorrelationModel,
                 max_n: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive joint MAP over the 2^N choices of the active source's bit.

    At each index the inactive source is read off its codeword; the active
    source's bit is enumerated. Ties go to the lexicographically smallest
    choice vector.
    """
    _check_pair(cx, cy)
    sx, sy = cx.schedule, cy.schedule
    n = sx.n
    if n > max_n:
        raise InvalidParam(f"joint oracle limited to N <= {max_n}")
    params = sx.params
    sources = (ac.BitSource([int(b) for b in cx.payload]),
               ac.BitSource([int(b) for b in cy.payload]))
    scheds = (sx, sy)
    fwd = corr.table
    rev = corr.reverse_table()
    best = (float("-inf"), None)
    seq: list[tuple[int, int]] = []

    def walk(i: int, states: tuple[ac.CoderState, ac.CoderState], metric: float) -> None:
        nonlocal best
        if i == n:
            if metric > best[0]:
                best = (metric, list(seq))
            return
        act = i % 2
        ina = 1 - act
        st_in = states[ina]
        plan_in = ac.subdivide(st_in, *scheds[ina].plan_probs(i), params)
        s_in = ac.decoder_classify(st_in, plan_in)
        if s_in == ac.AMBIGUOUS:
            raise RoleViolation(f"inactive source ambiguous at index {i}")
        st_in = ac.decoder_select(st_in, plan_in, s_in, sources[ina], params)
        st_act = states[act]
        plan_act = ac.subdivide(st_act, *scheds[act].plan_probs(i), params)
        for s in (0, 1):
            try:
                child = ac.decoder_select(st_act, plan_act, s, sources[act], params)
            except ac.InconsistentPath:
                continue
            if act == 0:
                seq.append((s, s_in))
                walk(i + 1, (child, st_in), metric + float(fwd[s, s_in]))
            else:
                seq.append((s_in, s))
                walk(i + 1, (st_in, child), metric + float(rev[s, s_in]))
            seq.pop()

    roots = (ac.decoder_init(sources[0], params), ac.decoder_init(sources[1], params))
    walk(0, roots, 0.0)
    if best[1] is None:
        raise EmptyFrontier("no joint sequence is consistent with the codewords")
    pairs = best[1]
    return (np.array([a for a, _ in pairs], np.uint8), np.array([b for _, b in pairs], np.uint8))
