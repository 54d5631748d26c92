"""Compare the compiled and pure-Python kernels on the hot encode/decode paths.

    python benchmarks/bench_decode.py [--blocks 20] [--m 64 256]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from daclab import _pykernels
from daclab import rate_alloc as ra
from daclab.corr_models import CorrelationModel, TrialSeed, apply_bsc, gen_source
from daclab.dac_codec import build_schedule

try:
    from daclab import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

W, F = 32, 16


def _blocks(n, p0, p, count):
    out = []
    for trial in range(count):
        s = TrialSeed(9000, trial)
        x = gen_source(n, p0, s)
        out.append((x, apply_bsc(x, p, s)))
    return out


def bench(kern, sched, corr, data, m):
    t0 = time.perf_counter()
    payloads = [kern.encode_payload(x, sched.pt0_q, sched.pt1_q, W, F) for x, _ in data]
    t_enc = time.perf_counter() - t0
    t0 = time.perf_counter()
    errors = 0
    for (x, y), bits in zip(data, payloads):
        _, xh, *_ = kern.decode_tree(bits, sched.pt0_q, sched.pt1_q, corr.table, y, m, W, F)
        errors += int(np.count_nonzero(np.asarray(xh) != x))
    t_dec = time.perf_counter() - t0
    return 1e3 * t_enc / len(data), 1e3 * t_dec / len(data), errors


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--blocks", type=int, default=20)
    ap.add_argument("--m", type=int, nargs="+", default=[16, 64, 256])
    args = ap.parse_args(argv)

    p = ra.crossover_for_cond_entropy(0.5, 0.25)
    corr = CorrelationModel(0.5, p)
    sched = build_schedule(args.n, 15, ra.solve_k(0.5, 0.5, args.n, 15), 0.5)
    data = _blocks(args.n, 0.5, p, args.blocks)
    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.insert(0, ("compiled", _ckernels))

    print(f"N={args.n} rate=0.5 H(X|Y)=0.25 blocks={args.blocks}")
    print(f"{'M':>6} {'backend':>9} {'enc ms':>9} {'dec ms':>10} {'errors':>7} {'speedup':>8}")
    for m in args.m:
        rows = [(name, *bench(k, sched, corr, data, m)) for name, k in backends]
        ref = rows[-1][2]
        for name, enc, dec, err in rows:
            print(f"{m:>6} {name:>9} {enc:>9.3f} {dec:>10.2f} {err:>7} {ref / dec:>7.1f}x")
        if len(rows) == 2 and rows[0][3] != rows[1][3]:
            raise SystemExit("backends disagree")


if __name__ == "__main__":
    main()
