# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled encoder and M-algorithm decoders.

Arithmetic mirrors ``daclab.ac_core`` operation for operation; the pure-Python
twin lives in ``daclab._pykernels`` and the test suite checks both agree bit
for bit.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint8_t, uint64_t, int64_t, int32_t
from libcpp.vector cimport vector
from libcpp.algorithm cimport nth_element
from libcpp.functional cimport greater

cnp.import_array()

ctypedef struct Interval:
    uint64_t low
    uint64_t rng
    uint64_t value
    int64_t cursor


def encode_payload(const uint8_t[:] x, const int64_t[:] pt0, const int64_t[:] pt1,
                   int W, int F):
    cdef Py_ssize_t n = x.shape[0], i
    cdef uint64_t half = (<uint64_t>1) << (W - 1)
    cdef uint64_t quarter = (<uint64_t>1) << (W - 2)
    cdef uint64_t low = 0, rng = (<uint64_t>1) << W, c0, c1
    cdef int64_t pending = 0, j
    cdef vector[uint8_t] out
    out.reserve(n + W + 8)
    for i in range(n):
        c0 = (rng * <uint64_t>pt0[i]) >> F
        c1 = (rng * <uint64_t>pt1[i]) >> F
        if c0 < 1:
            c0 = 1
        if c1 < 1:
            c1 = 1
        if c0 + c1 < rng:
            c0 = rng - c1
        if x[i]:
            low = low + rng - c1
            rng = c1
        else:
            rng = c0
        while True:
            if low + rng <= half:
                out.push_back(0)
                for j in range(pending):
                    out.push_back(1)
                pending = 0
            elif low >= half:
                out.push_back(1)
                for j in range(pending):
                    out.push_back(0)
                pending = 0
                low -= half
            elif low >= quarter and low + rng <= 3 * quarter:
                pending += 1
                low -= quarter
            else:
                break
            low <<= 1
            rng <<= 1
    pending += 1
    if low + rng >= 3 * quarter:
        out.push_back(1)
        for j in range(pending):
            out.push_back(0)
    else:
        out.push_back(0)
        for j in range(pending):
            out.push_back(1)
    res = np.empty(out.size(), dtype=np.uint8)
    cdef uint8_t[:] rv = res
    for i in range(<Py_ssize_t>out.size()):
        rv[i] = out[i]
    return res


cdef inline uint64_t _init_value(const uint8_t[:] bits, int W) noexcept nogil:
    cdef uint64_t v = 0
    cdef Py_ssize_t L = bits.shape[0], i
    for i in range(W):
        v = (v << 1) | (bits[i] if i < L else 0)
    return v


cdef inline bint _select(Interval* s, uint64_t c0, uint64_t c1, int sym,
                         const uint8_t[:] bits, uint64_t half, uint64_t quarter) noexcept nogil:
    """Narrow to ``sym``'s subinterval and renormalize; False if value falls out."""
    cdef uint64_t low = s.low, rng = s.rng, value = s.value
    cdef int64_t cur = s.cursor
    cdef Py_ssize_t L = bits.shape[0]
    if sym:
        low = low + rng - c1
        rng = c1
    else:
        rng = c0
    if value < low or value >= low + rng:
        return False
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
        value = (value << 1) | (bits[cur] if cur < L else 0)
        cur += 1
    s.low = low
    s.rng = rng
    s.value = value
    s.cursor = cur
    return True


cdef inline int _classify(const Interval* s, uint64_t pt0, uint64_t pt1, int F,
                          uint64_t* c0, uint64_t* c1) noexcept nogil:
    cdef uint64_t rng = s.rng, a, b, off
    a = (rng * pt0) >> F
    b = (rng * pt1) >> F
    if a < 1:
        a = 1
    if b < 1:
        b = 1
    if a + b < rng:
        a = rng - b
    c0[0] = a
    c1[0] = b
    off = s.value - s.low
    if off < rng - b:
        return 0
    if off >= a:
        return 1
    return 2


cdef Py_ssize_t _prune(double* met, Py_ssize_t nc, Py_ssize_t M, uint8_t* keep,
                       vector[double]& scratch) noexcept nogil:
    """Mark the top-M candidates by (metric desc, index asc)."""
    cdef Py_ssize_t j, kept = 0, above = 0
    cdef double thr
    if nc <= M:
        for j in range(nc):
            keep[j] = 1
        return nc
    scratch.resize(nc)
    for j in range(nc):
        scratch[j] = met[j]
    nth_element(scratch.begin(), scratch.begin() + (M - 1), scratch.end(), greater[double]())
    thr = scratch[M - 1]
    for j in range(nc):
        if met[j] > thr:
            above += 1
    cdef Py_ssize_t ties = M - above
    for j in range(nc):
        if met[j] > thr:
            keep[j] = 1
        elif met[j] == thr and ties > 0:
            keep[j] = 1
            ties -= 1
        else:
            keep[j] = 0
    return M


def decode_tree(const uint8_t[:] bits, const int64_t[:] pt0, const int64_t[:] pt1,
                const double[:, :] lam, const uint8_t[:] y, Py_ssize_t M, int W, int F):
    """Asymmetric M-algorithm decode.

    Returns ``(status, xhat, metric, peak_candidates, branchings)``; status 1
    means every path left the codeword.
    """
    cdef Py_ssize_t n = y.shape[0], i, j, nc, nf, k, kk
    cdef uint64_t half = (<uint64_t>1) << (W - 1)
    cdef uint64_t quarter = (<uint64_t>1) << (W - 2)
    cdef Py_ssize_t cap = 2 * M
    cdef vector[Interval] cur_s, nxt_s
    cdef vector[double] cur_m, nxt_m, scratch
    cdef vector[int32_t] cand_parent
    cdef vector[uint8_t] cand_sym, keep
    cdef vector[int32_t] parent
    cdef vector[uint8_t] symbol
    cdef Interval base, child
    cdef uint64_t c0, c1
    cdef int cls, yi, s
    cdef double m0
    cdef Py_ssize_t peak = 1, branchings = 0

    cur_s.resize(cap)
    nxt_s.resize(cap)
    cur_m.resize(cap)
    nxt_m.resize(cap)
    cand_parent.resize(cap)
    cand_sym.resize(cap)
    keep.resize(cap)
    parent.resize(n * M if n > 0 else 1)
    symbol.resize(n * M if n > 0 else 1)

    base.low = 0
    base.rng = (<uint64_t>1) << W
    base.value = _init_value(bits, W)
    base.cursor = W
    cur_s[0] = base
    cur_m[0] = 0.0
    nf = 1
    nc = 0
    with nogil:
        for i in range(n):
            yi = y[i]
            nc = 0
            for j in range(nf):
                base = cur_s[j]
                m0 = cur_m[j]
                cls = _classify(&base, <uint64_t>pt0[i], <uint64_t>pt1[i], F, &c0, &c1)
                if cls == 2:
                    branchings += 1
                    for s in range(2):
                        child = base
                        if _select(&child, c0, c1, s, bits, half, quarter):
                            nxt_s[nc] = child
                            nxt_m[nc] = m0 + lam[s, yi]
                            cand_parent[nc] = <int32_t>j
                            cand_sym[nc] = <uint8_t>s
                            nc += 1
                else:
                    child = base
                    if _select(&child, c0, c1, cls, bits, half, quarter):
                        nxt_s[nc] = child
                        nxt_m[nc] = m0 + lam[cls, yi]
                        cand_parent[nc] = <int32_t>j
                        cand_sym[nc] = <uint8_t>cls
                        nc += 1
            if nc > peak:
                peak = nc
            if nc == 0:
                break
            _prune(&nxt_m[0], nc, M, &keep[0], scratch)
            k = 0
            for j in range(nc):
                if keep[j]:
                    cur_s[k] = nxt_s[j]
                    cur_m[k] = nxt_m[j]
                    parent[i * M + k] = cand_parent[j]
                    symbol[i * M + k] = cand_sym[j]
                    k += 1
            nf = k
    xhat = np.zeros(n, dtype=np.uint8)
    if n > 0 and nc == 0:
        return 1, xhat, float("-inf"), peak, branchings
    if n == 0:
        return 0, xhat, 0.0, peak, branchings
    cdef uint8_t[:] xv = xhat
    cdef Py_ssize_t best = 0
    for j in range(1, nf):
        if cur_m[j] > cur_m[best]:
            best = j
    cdef double metric = cur_m[best]
    kk = best
    for i in range(n - 1, -1, -1):
        xv[i] = symbol[i * M + kk]
        kk = parent[i * M + kk]
    return 0, xhat, metric, peak, branchings


ctypedef struct PairState:
    Interval x
    Interval y


def decode_joint(const uint8_t[:] bits_x, const uint8_t[:] bits_y,
                 const int64_t[:] pt0x, const int64_t[:] pt1x,
                 const int64_t[:] pt0y, const int64_t[:] pt1y,
                 const double[:, :] lam_x, const double[:, :] lam_y,
                 const uint8_t[:] active, Py_ssize_t M, int W, int F):
    """Two-source time-shared decode.

    ``lam_x[a, b] = log2 P(X=a|Y=b)`` is used where X is active,
    ``lam_y[b, a] = log2 P(Y=b|X=a)`` where Y is active. Returns
    ``(status, xhat, yhat, metric, peak, branchings, pair_tests)``; status 1 is
    an empty frontier, 2 an ambiguous inactive source.
    """
    cdef Py_ssize_t n = active.shape[0], i, j, nc, nf, k, kk
    cdef uint64_t half = (<uint64_t>1) << (W - 1)
    cdef uint64_t quarter = (<uint64_t>1) << (W - 2)
    cdef Py_ssize_t cap = 2 * M
    cdef vector[PairState] cur_s, nxt_s
    cdef vector[double] cur_m, nxt_m, scratch
    cdef vector[int32_t] cand_parent
    cdef vector[uint8_t] cand_sym, keep
    cdef vector[int32_t] parent
    cdef vector[uint8_t] symbol
    cdef PairState base, child
    cdef uint64_t ax0, ax1, ay0, ay1
    cdef int cls_in, cls_act, s, act
    cdef double m0, lm
    cdef Py_ssize_t peak = 1, branchings = 0, pair_tests = 0
    cdef int status = 0

    cur_s.resize(cap)
    nxt_s.resize(cap)
    cur_m.resize(cap)
    nxt_m.resize(cap)
    cand_parent.resize(cap)
    cand_sym.resize(cap)
    keep.resize(cap)
    parent.resize(n * M if n > 0 else 1)
    symbol.resize(n * M if n > 0 else 1)

    base.x.low = 0
    base.x.rng = (<uint64_t>1) << W
    base.x.value = _init_value(bits_x, W)
    base.x.cursor = W
    base.y.low = 0
    base.y.rng = (<uint64_t>1) << W
    base.y.value = _init_value(bits_y, W)
    base.y.cursor = W
    cur_s[0] = base
    cur_m[0] = 0.0
    nf = 1
    nc = 1
    with nogil:
        for i in range(n):
            act = active[i]
            nc = 0
            for j in range(nf):
                child = cur_s[j]
                m0 = cur_m[j]
                pair_tests += 1
                # inactive source first: it must decode unambiguously
                if act == 0:
                    cls_in = _classify(&child.y, <uint64_t>pt0y[i], <uint64_t>pt1y[i], F, &ay0, &ay1)
                    if cls_in == 2:
                        status = 2
                        break
                    if not _select(&child.y, ay0, ay1, cls_in, bits_y, half, quarter):
                        continue
                    cls_act = _classify(&child.x, <uint64_t>pt0x[i], <uint64_t>pt1x[i], F, &ax0, &ax1)
                else:
                    cls_in = _classify(&child.x, <uint64_t>pt0x[i], <uint64_t>pt1x[i], F, &ax0, &ax1)
                    if cls_in == 2:
                        status = 2
                        break
                    if not _select(&child.x, ax0, ax1, cls_in, bits_x, half, quarter):
                        continue
                    cls_act = _classify(&child.y, <uint64_t>pt0y[i], <uint64_t>pt1y[i], F, &ay0, &ay1)
                base = child
                for s in range(2):
                    if cls_act != 2 and s != cls_act:
                        continue
                    child = base
                    if act == 0:
                        if not _select(&child.x, ax0, ax1, s, bits_x, half, quarter):
                            continue
                        lm = lam_x[s, cls_in]
                    else:
                        if not _select(&child.y, ay0, ay1, s, bits_y, half, quarter):
                            continue
                        lm = lam_y[s, cls_in]
                    nxt_s[nc] = child
                    nxt_m[nc] = m0 + lm
                    cand_parent[nc] = <int32_t>j
                    # bit0: x symbol, bit1: y symbol
                    if act == 0:
                        cand_sym[nc] = <uint8_t>(s | (cls_in << 1))
                    else:
                        cand_sym[nc] = <uint8_t>(cls_in | (s << 1))
                    nc += 1
                if cls_act == 2:
                    branchings += 1
            if status != 0:
                break
            if nc > peak:
                peak = nc
            if nc == 0:
                break
            _prune(&nxt_m[0], nc, M, &keep[0], scratch)
            k = 0
            for j in range(nc):
                if keep[j]:
                    cur_s[k] = nxt_s[j]
                    cur_m[k] = nxt_m[j]
                    parent[i * M + k] = cand_parent[j]
                    symbol[i * M + k] = cand_sym[j]
                    k += 1
            nf = k
    xhat = np.zeros(n, dtype=np.uint8)
    yhat = np.zeros(n, dtype=np.uint8)
    if status != 0:
        return status, xhat, yhat, float("-inf"), peak, branchings, pair_tests
    if n > 0 and nc == 0:
        return 1, xhat, yhat, float("-inf"), peak, branchings, pair_tests
    if n == 0:
        return 0, xhat, yhat, 0.0, peak, branchings, pair_tests
    cdef uint8_t[:] xv = xhat
    cdef uint8_t[:] yv = yhat
    cdef Py_ssize_t best = 0
    for j in range(1, nf):
        if cur_m[j] > cur_m[best]:
            best = j
    cdef double metric = cur_m[best]
    kk = best
    for i in range(n - 1, -1, -1):
        xv[i] = symbol[i * M + kk] & 1
        yv[i] = symbol[i * M + kk] >> 1
        kk = parent[i * M + kk]
    return 0, xhat, yhat, metric, peak, branchings, pair_tests
