"""Pure-Python kernels, call-compatible with the compiled ``_ckernels``.

Built directly on the :mod:`daclab.ac_core` primitives. Used when the
extension is not built, or when ``DACLAB_BACKEND=python``.
"""
from __future__ import annotations

import numpy as np

from . import ac_core as ac


def _params(W: int, F: int) -> ac.FixedPointParams:
    return ac.FixedPointParams(W, F)


def encode_payload(x, pt0, pt1, W: int, F: int) -> np.ndarray:
    bits = ac.encode_symbols([int(v) for v in x], [int(v) for v in pt0],
                             [int(v) for v in pt1], _params(W, F))
    return np.asarray(bits, dtype=np.uint8)


def _prune(metrics: list[float], M: int) -> list[int]:
    """Indices of the top-M candidates by (metric desc, index asc), in index order."""
    if len(metrics) <= M:
        return list(range(len(metrics)))
    best = sorted(range(len(metrics)), key=lambda j: (-metrics[j], j))[:M]
    return sorted(best)


def decode_tree(bits, pt0, pt1, lam, y, M: int, W: int, F: int):
    params = _params(W, F)
    source = ac.BitSource([int(b) for b in bits])
    lam = [[float(lam[a][b]) for b in (0, 1)] for a in (0, 1)]
    pt0 = [int(v) for v in pt0]
    pt1 = [int(v) for v in pt1]
    frontier = [(ac.decoder_init(source, params), 0.0)]
    history: list[list[tuple[int, int]]] = []
    peak = 1
    branchings = 0
    for i, yi in enumerate(int(v) for v in y):
        cand_states, cand_metrics, cand_link = [], [], []
        for j, (state, metric) in enumerate(frontier):
            plan = ac.subdivide(state, pt0[i], pt1[i], params)
            cls = ac.decoder_classify(state, plan)
            if cls == ac.AMBIGUOUS:
                branchings += 1
                choices = (0, 1)
            else:
                choices = (cls,)
            for s in choices:
                try:
                    child = ac.decoder_select(state, plan, s, source, params)
                except ac.InconsistentPath:
                    continue
                cand_states.append(child)
                cand_metrics.append(metric + lam[s][yi])
                cand_link.append((j, s))
        peak = max(peak, len(cand_states))
        if not cand_states:
            return 1, np.zeros(len(y), np.uint8), float("-inf"), peak, branchings
        kept = _prune(cand_metrics, M)
        frontier = [(cand_states[j], cand_metrics[j]) for j in kept]
        history.append([cand_link[j] for j in kept])
    return _backtrack_single(frontier, history, len(y), peak, branchings)


def _best(frontier) -> int:
    best = 0
    for j in range(1, len(frontier)):
        if frontier[j][1] > frontier[best][1]:
            best = j
    return best


def _backtrack_single(frontier, history, n, peak, branchings):
    xhat = np.zeros(n, np.uint8)
    if n == 0:
        return 0, xhat, 0.0, peak, branchings
    k = _best(frontier)
    metric = frontier[k][1]
    for i in range(n - 1, -1, -1):
        parent, s = history[i][k]
        xhat[i] = s
        k = parent
    return 0, xhat, metric, peak, branchings


def decode_joint(bits_x, bits_y, pt0x, pt1x, pt0y, pt1y, lam_x, lam_y, active, M: int,
                 W: int, F: int):
    params = _params(W, F)
    sources = (ac.BitSource([int(b) for b in bits_x]), ac.BitSource([int(b) for b in bits_y]))
    pts = (([int(v) for v in pt0x], [int(v) for v in pt1x]),
           ([int(v) for v in pt0y], [int(v) for v in pt1y]))
    lams = ([[float(lam_x[a][b]) for b in (0, 1)] for a in (0, 1)],
            [[float(lam_y[a][b]) for b in (0, 1)] for a in (0, 1)])
    n = len(active)
    root = (ac.decoder_init(sources[0], params), ac.decoder_init(sources[1], params))
    frontier = [(root, 0.0)]
    history: list[list[tuple[int, int]]] = []
    peak, branchings, pair_tests = 1, 0, 0
    for i in range(n):
        act = int(active[i])
        ina = 1 - act
        cand_states, cand_metrics, cand_link = [], [], []
        for j, (states, metric) in enumerate(frontier):
            pair_tests += 1
            st_in = states[ina]
            plan_in = ac.subdivide(st_in, pts[ina][0][i], pts[ina][1][i], params)
            s_in = ac.decoder_classify(st_in, plan_in)
            if s_in == ac.AMBIGUOUS:
                return (2, np.zeros(n, np.uint8), np.zeros(n, np.uint8), float("-inf"),
                        peak, branchings, pair_tests)
            try:
                st_in = ac.decoder_select(st_in, plan_in, s_in, sources[ina], params)
            except ac.InconsistentPath:
                continue
            st_act = states[act]
            plan_act = ac.subdivide(st_act, pts[act][0][i], pts[act][1][i], params)
            cls = ac.decoder_classify(st_act, plan_act)
            if cls == ac.AMBIGUOUS:
                branchings += 1
                choices = (0, 1)
            else:
                choices = (cls,)
            for s in choices:
                try:
                    child = ac.decoder_select(st_act, plan_act, s, sources[act], params)
                except ac.InconsistentPath:
                    continue
                pair = (child, st_in) if act == 0 else (st_in, child)
                cand_states.append(pair)
                cand_metrics.append(metric + lams[act][s][s_in])
                xs, ys = (s, s_in) if act == 0 else (s_in, s)
                cand_link.append((j, xs | (ys << 1)))
        peak = max(peak, len(cand_states))
        if not cand_states:
            return (1, np.zeros(n, np.uint8), np.zeros(n, np.uint8), float("-inf"),
                    peak, branchings, pair_tests)
        kept = _prune(cand_metrics, M)
        frontier = [(cand_states[j], cand_metrics[j]) for j in kept]
        history.append([cand_link[j] for j in kept])
    xhat = np.zeros(n, np.uint8)
    yhat = np.zeros(n, np.uint8)
    if n == 0:
        return 0, xhat, yhat, 0.0, peak, branchings, pair_tests
    k = _best(frontier)
    metric = frontier[k][1]
    for i in range(n - 1, -1, -1):
        parent, code = history[i][k]
        xhat[i] = code & 1
        yhat[i] = code >> 1
        k = parent
    return 0, xhat, yhat, metric, peak, branchings, pair_tests
