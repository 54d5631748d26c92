"""``daclab`` command line: encode/decode bit-files, allocate rates, run experiments.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 decode failure. Every option can also be
set through a ``DACLAB_<OPTION>`` environment variable.
"""
from __future__ import annotations

import logging
import struct
import sys
from pathlib import Path

import click
import numpy as np

from . import harness
from . import rate_alloc as ra
from ._backend import BACKEND
from .corr_models import CorrelationModel
from .dac_codec import (DEFAULT_M, DEFAULT_T, DacBitstream, EmptyFrontier, HeaderError,
                        build_schedule, decode_detail, encode)
from .sym_codec import RoleViolation, decode_pair_detail, encode_pair

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DECODE = 4

_LEN = struct.Struct(">Q")


class CliExit(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def read_bitfile(path: str | Path) -> np.ndarray:
    """Raw packed bits behind an 8-byte big-endian bit count."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CliExit(f"cannot read {path}: {exc.strerror}", EXIT_IO)
    if len(data) < _LEN.size:
        raise CliExit(f"{path}: missing length prefix", EXIT_IO)
    (nbits,) = _LEN.unpack_from(data)
    body = np.frombuffer(data, dtype=np.uint8, offset=_LEN.size)
    if nbits > 8 * len(body):
        raise CliExit(f"{path}: prefix says {nbits} bits, file holds {8 * len(body)}", EXIT_IO)
    return np.unpackbits(body)[:nbits].astype(np.uint8)


def write_bitfile(path: str | Path, bits: np.ndarray) -> None:
    bits = np.asarray(bits, dtype=np.uint8)
    _write(path, _LEN.pack(len(bits)) + np.packbits(bits).tobytes())


def _write(path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise CliExit(f"cannot write {path}: {exc.strerror}", EXIT_IO)


def _read_stream(path) -> DacBitstream:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CliExit(f"cannot read {path}: {exc.strerror}", EXIT_IO)
    try:
        return DacBitstream.from_bytes(data)
    except HeaderError as exc:
        raise CliExit(f"{path}: {exc}", EXIT_USAGE)


def _opt(*decls, **kw):
    name = decls[0].lstrip("-").replace("-", "_").upper()
    kw.setdefault("show_default", True)
    return click.option(*decls, envvar=f"DACLAB_{name}", **kw)


def _split(ctx, param, value):
    if value is None:
        return None
    try:
        rx, ry = (float(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter("expected RX,RY")
    return rx, ry


def _echo_config(cmd: str, **values) -> None:
    parts = " ".join(f"{k}={v}" for k, v in values.items())
    click.echo(f"config: {cmd} {parts} backend={BACKEND}", err=True)


def _crossover(p0: float, crossover: float | None, hxy: float | None,
               required: bool = True) -> float | None:
    if crossover is not None and hxy is not None:
        raise click.UsageError("give only one of --crossover and --hxy")
    if crossover is None and hxy is None:
        if required:
            raise click.UsageError("give one of --crossover or --hxy")
        return None
    try:
        if crossover is not None:
            if not 0.0 <= crossover <= 0.5:
                raise ra.InvalidParam("crossover must lie in [0, 0.5]")
            return crossover
        return ra.crossover_for_cond_entropy(p0, hxy)
    except (ra.InvalidParam, ra.Infeasible) as exc:
        raise click.UsageError(str(exc))


def _usage_guard(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ra.InvalidParam, ra.Infeasible, ra.DoesNotFit, harness.ConfigError) as exc:
        raise click.UsageError(str(exc))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log per-point progress.")
def main(verbose: bool) -> None:
    """Distributed arithmetic coding toolkit."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


_corr_opts = [
    _opt("--crossover", type=float, default=None, help="BSC crossover p."),
    _opt("--hxy", type=float, default=None, help="Target H(X|Y) (resolved to p)."),
]


def _with(opts):
    def deco(f):
        for o in reversed(opts):
            f = o(f)
        return f
    return deco


@main.command("encode")
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@_opt("--n", type=int, default=None, help="Block length (default: input length).")
@_opt("--t", type=int, default=DEFAULT_T, help="Termination symbols.")
@_opt("--p0", type=float, required=True, help="P(X=0).")
@_opt("--k", type=float, default=None, help="Overlap exponent.")
@_opt("--rate", type=float, default=None, help="Target rate in bps (solves k).")
@_opt("--mu", type=float, default=None, help="Rate margin over H(X|Y) (needs correlation).")
@_with(_corr_opts)
@_opt("--mode", type=click.Choice(["asym", "sym"]), default="asym")
@_opt("--split", type=str, default=None, callback=_split, help="Symmetric RX,RY.")
@_opt("--out", type=click.Path(), required=True, help="Output file (sym: prefix).")
def encode_cmd(inputs, n, t, p0, k, rate, mu, crossover, hxy, mode, split, out):
    """Encode bit-file(s) into DAC container(s)."""
    seqs = [read_bitfile(p) for p in inputs]
    if mode == "asym" and len(seqs) != 1:
        raise click.UsageError("asymmetric mode takes one input")
    if mode == "sym" and len(seqs) != 2:
        raise click.UsageError("symmetric mode takes two inputs (X then Y)")
    if n is None:
        n = len(seqs[0])
    if n <= 0 or any(len(s) < n for s in seqs):
        raise click.UsageError(f"input shorter than N={n}")
    seqs = [s[:n] for s in seqs]
    _echo_config("encode", n=n, t=t, p0=p0, k=k, rate=rate, mu=mu, crossover=crossover,
                 hxy=hxy, mode=mode, split=split)
    if mode == "asym":
        if sum(v is not None for v in (k, rate, mu)) != 1:
            raise click.UsageError("give exactly one of --k, --rate, --mu")
        if rate is not None:
            k = _usage_guard(ra.solve_k, p0, rate, n, t)
        elif mu is not None:
            p = _crossover(p0, crossover, hxy)
            k = _usage_guard(ra.allocate_margin, p0, p, mu, n, t).k
        cw = encode(seqs[0], _usage_guard(build_schedule, n, t, k, p0))
        _write(out, cw.to_bytes())
        click.echo(f"k={cw.schedule.k:.6g} bits={cw.n_bits} rate={cw.rate:.6g}")
        return
    p = _crossover(p0, crossover, hxy, required=split is not None)
    if (k is None) == (split is None):
        raise click.UsageError("symmetric mode needs exactly one of --k or --split")
    p0y = ra.bsc_output_prob(p0, p) if p is not None else p0
    if split is not None:
        kx, ky = _usage_guard(ra.allocate_symmetric, p0, p0y, p, split[0], split[1], n, t)
    else:
        kx = ky = k
    cx, cy = _usage_guard(encode_pair, seqs[0], seqs[1], kx, ky, p0, p0y, n, t)
    _write(f"{out}.x.dac", cx.to_bytes())
    _write(f"{out}.y.dac", cy.to_bytes())
    click.echo(f"kx={kx:.6g} ky={ky:.6g} rate_x={cx.rate:.6g} rate_y={cy.rate:.6g} "
               f"total={cx.rate + cy.rate:.6g}")


@main.command("decode")
@click.argument("stream", type=click.Path())
@click.argument("side_info", required=False, type=click.Path())
@_with(_corr_opts)
@_opt("--m", type=int, default=DEFAULT_M, help="Decoder list size.")
@_opt("--out", type=click.Path(), required=True, help="Output bit-file.")
def decode_cmd(stream, side_info, crossover, hxy, m, out):
    """Decode a container using side information (optional for k=0 streams)."""
    cw = _read_stream(stream)
    s = cw.schedule
    _echo_config("decode", n=s.n, t=s.t, p0=s.p0, k=s.k, crossover=crossover, hxy=hxy, m=m)
    y = corr = None
    if side_info is not None:
        y = read_bitfile(side_info)
        if len(y) < s.n:
            raise CliExit(f"side information has {len(y)} bits, header N={s.n}", EXIT_USAGE)
        y = y[: s.n]
        p = _crossover(s.p0, crossover, hxy)
        corr = CorrelationModel(s.p0, p)
    elif s.k_vec.any():
        raise click.UsageError("overlapped stream: side information required")
    if m < 1:
        raise click.UsageError("--m must be >= 1")
    try:
        r = decode_detail(cw, y, corr, m)
    except EmptyFrontier as exc:
        raise CliExit(str(exc), EXIT_DECODE)
    write_bitfile(out, r.x)
    click.echo(f"metric={r.metric:.6g} peak_candidates={r.peak_candidates} "
               f"branchings={r.branchings}")


@main.command("decode-joint")
@click.argument("stream_x", type=click.Path())
@click.argument("stream_y", type=click.Path())
@_with(_corr_opts)
@_opt("--m", type=int, default=DEFAULT_M, help="Decoder list size.")
@_opt("--out", type=click.Path(), required=True, help="Output prefix.")
def decode_joint_cmd(stream_x, stream_y, crossover, hxy, m, out):
    """Jointly decode a time-shared symmetric pair."""
    cx, cy = _read_stream(stream_x), _read_stream(stream_y)
    s = cx.schedule
    _echo_config("decode-joint", n=s.n, t=s.t, p0=s.p0, crossover=crossover, hxy=hxy, m=m)
    p = _crossover(s.p0, crossover, hxy)
    if m < 1:
        raise click.UsageError("--m must be >= 1")
    try:
        r = _usage_guard(decode_pair_detail, cx, cy, CorrelationModel(s.p0, p), m)
    except (EmptyFrontier, RoleViolation) as exc:
        raise CliExit(str(exc), EXIT_DECODE)
    write_bitfile(f"{out}.x.bits", r.x)
    write_bitfile(f"{out}.y.bits", r.y)
    click.echo(f"metric={r.metric:.6g} peak_candidates={r.peak_candidates} "
               f"pair_tests={r.pair_tests}")


@main.command("allocate")
@_opt("--n", type=int, default=200)
@_opt("--t", type=int, default=DEFAULT_T)
@_opt("--p0", type=float, required=True)
@_with(_corr_opts)
@_opt("--rate", type=float, default=None)
@_opt("--mu", type=float, default=None)
@_opt("--mode", type=click.Choice(["asym", "sym"]), default="asym")
@_opt("--split", type=str, default=None, callback=_split)
def allocate_cmd(n, t, p0, crossover, hxy, rate, mu, mode, split):
    """Print the overlap parameters for a target rate."""
    _echo_config("allocate", n=n, t=t, p0=p0, crossover=crossover, hxy=hxy, rate=rate,
                 mu=mu, mode=mode, split=split)
    if mode == "sym":
        if split is None:
            raise click.UsageError("symmetric allocation needs --split")
        p = _crossover(p0, crossover, hxy)
        p0y = ra.bsc_output_prob(p0, p)
        kx, ky = _usage_guard(ra.allocate_symmetric, p0, p0y, p, split[0], split[1], n, t)
        click.echo(f"kx={kx:.6g} ky={ky:.6g} p0y={p0y:.6g} "
                   f"h_joint={ra.joint_entropy_bsc(p0, p):.6g}")
        return
    if (rate is None) == (mu is None):
        raise click.UsageError("give exactly one of --rate or --mu")
    if rate is not None:
        k = _usage_guard(ra.solve_k, p0, rate, n, t)
        a0, a1, pt0, pt1 = ra.overlap_factors(p0, k)
        click.echo(f"k={k:.6g} k_q={round(k * 65536)} alpha0={a0:.6g} alpha1={a1:.6g}")
        return
    p = _crossover(p0, crossover, hxy)
    res = _usage_guard(ra.allocate_margin, p0, p, mu, n, t)
    click.echo(f"k={res.k:.6g} target_rate={res.target_rate:.6g} "
               f"predicted_rate={res.predicted_rate:.6g}")


@main.command("experiment")
@click.argument("name")
@_opt("--n", type=int, default=200)
@_opt("--t", type=int, default=DEFAULT_T)
@_opt("--m", type=int, default=DEFAULT_M)
@_opt("--seed", type=int, default=1)
@_opt("--trials", type=int, default=None, help="Blocks (or realizations) per point.")
@_opt("--workers", type=int, default=1)
@_opt("--out", type=click.Path(), default=None, help="CSV path (default NAME.csv).")
def experiment_cmd(name, n, t, m, seed, trials, workers, out):
    """Run a named preset and write its CSV."""
    if name not in harness.PRESETS:
        raise click.UsageError(f"unknown preset {name!r}; choose from {', '.join(harness.PRESETS)}")
    out = out or f"{name}.csv"
    _echo_config("experiment", name=name, n=n, t=t, m=m, seed=seed, trials=trials,
                 workers=workers, out=out)
    rows = _usage_guard(harness.preset, name, n=n, m=m, t=t, seed=seed, trials=trials,
                        workers=workers)
    for s in rows:
        click.echo(s.summary())
    try:
        harness.emit_csv(rows, out)
    except OSError as exc:
        raise CliExit(str(exc), EXIT_IO)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
