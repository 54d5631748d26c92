"""Monte-Carlo experiment engine: fixed/variable-rate BER and FER sweeps, CSV output."""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import rate_alloc as ra
from .corr_models import CorrelationModel, TrialSeed, apply_bsc, gen_source
from .dac_codec import (DEFAULT_M, DEFAULT_T, EmptyFrontier, build_equal_alpha_schedule,
                        build_schedule, decode, encode)
from .sym_codec import RoleViolation, decode_pair_detail, encode_pair

log = logging.getLogger(__name__)

DEFAULT_FIXED_BITS = 10**6
DEFAULT_REALIZATIONS = 300
RATE_STEP = 0.01


class ConfigError(ValueError):
    pass


class RateCeiling(RuntimeError):
    """Raised only in strict mode when a realization needs the full entropy rate."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "fixed"
    n: int = 200
    t: int = DEFAULT_T
    m: int = DEFAULT_M
    p0: float = 0.5
    crossover: float | None = None
    h_cond: float | None = None
    h_joint: float | None = None
    rate: float | None = None
    split: tuple[float, float] | None = None
    variable: bool = False
    rate_step: float = RATE_STEP
    rule: str = "proportional"
    bits: int | None = None
    blocks: int | None = None
    min_error_blocks: int | None = None
    max_blocks: int | None = None
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        given = [v for v in (self.crossover, self.h_cond, self.h_joint) if v is not None]
        if len(given) != 1:
            raise ConfigError("give exactly one of crossover, h_cond, h_joint")
        specs = sum(x for x in (self.rate is not None, self.split is not None, self.variable))
        if specs != 1:
            raise ConfigError("give exactly one rate spec: rate, split, or variable")
        if self.bits is not None and self.blocks is not None:
            raise ConfigError("give a bit budget or a block count, not both")
        for name in ("bits", "blocks", "min_error_blocks", "max_blocks"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.rule not in ("proportional", "equal"):
            raise ConfigError(f"unknown overlap rule {self.rule!r}")
        if self.n <= 0 or not 0 <= self.t <= self.n or self.m < 1:
            raise ConfigError("need N > 0, 0 <= T <= N, M >= 1")

    @property
    def p(self) -> float:
        """Crossover, resolving an entropy spec by bisection."""
        if self.crossover is not None:
            return self.crossover
        if self.h_cond is not None:
            return ra.crossover_for_cond_entropy(self.p0, self.h_cond)
        return ra.crossover_for_joint_entropy(self.p0, self.h_joint)

    @property
    def n_blocks(self) -> int:
        if self.blocks is not None:
            return self.blocks
        if self.variable:
            return DEFAULT_REALIZATIONS
        return math.ceil((self.bits or DEFAULT_FIXED_BITS) / self.n)


@dataclass
class TrialStats:
    """Aggregated outcome of one sweep point.

    Per-block rates and first-error positions are kept as lists and reduced
    with :func:`math.fsum`, so totals do not depend on how blocks were chunked.
    """

    config: ExperimentConfig
    sources: int = 1
    bits: int = 0
    bit_errors: int = 0
    blocks: int = 0
    block_errors: int = 0
    rates: list = field(default_factory=list)
    achieved: list = field(default_factory=list)
    first_errors: list = field(default_factory=list)
    ceiling_hits: int = 0
    pair_tests: int = 0
    role_violations: int = 0
    elapsed: float = 0.0
    label: str = ""

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.block_errors / self.blocks if self.blocks else 0.0

    @staticmethod
    def _mean(v) -> float:
        return math.fsum(v) / len(v) if v else float("nan")

    @staticmethod
    def _std(v) -> float:
        if not v:
            return float("nan")
        mu = math.fsum(v) / len(v)
        return math.sqrt(math.fsum((a - mu) ** 2 for a in v) / len(v))

    @property
    def rate_mean(self) -> float:
        return self._mean(self.rates)

    @property
    def rate_std(self) -> float:
        return self._std(self.rates)

    @property
    def achieved_rate_mean(self) -> float:
        return self._mean(self.achieved)

    @property
    def first_error_mean(self) -> float:
        return self._mean(self.first_errors)

    @property
    def first_error_std(self) -> float:
        return self._std(self.first_errors)

    @property
    def ms_per_block(self) -> float:
        return 1000.0 * self.elapsed / self.blocks if self.blocks else 0.0

    def merge(self, other: "TrialStats") -> None:
        for name in ("bits", "bit_errors", "blocks", "block_errors", "ceiling_hits",
                     "pair_tests", "role_violations"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        for name in ("rates", "achieved", "first_errors"):
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def add_block(self, n: int, errors: Sequence[int], rate: float, achieved: float) -> None:
        self.blocks += 1
        self.bits += n * self.sources
        self.bit_errors += len(errors)
        self.rates.append(rate)
        self.achieved.append(achieved)
        if len(errors):
            self.block_errors += 1
            self.first_errors.append(float(min(errors)))

    def summary(self) -> str:
        c = self.config
        head = f"{self.label or c.kind}: N={c.n} T={c.t} M={c.m} p0={c.p0} p={c.p:.6g}"
        return (f"{head} blocks={self.blocks} BER={self.ber:.3g} FER={self.fer:.3g} "
                f"rate={self.rate_mean:.4f}+-{self.rate_std:.4f} {self.ms_per_block:.1f}ms/block")


# --- per-block workers -----------------------------------------------------

def _asym_schedule(cfg: ExperimentConfig, rate: float):
    if cfg.rule == "equal":
        alpha = ra.solve_equal_alpha(cfg.p0, rate, cfg.n, cfg.t)
        return build_equal_alpha_schedule(cfg.n, cfg.t, alpha, cfg.p0)
    k = ra.solve_k(cfg.p0, rate, cfg.n, cfg.t)
    return build_schedule(cfg.n, cfg.t, k, cfg.p0)


def _errors(xhat: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.flatnonzero(xhat != x)


def _fixed_range(cfg: ExperimentConfig, trials: Iterable[int]) -> TrialStats:
    stats = TrialStats(cfg)
    p = cfg.p
    corr = CorrelationModel(cfg.p0, p)
    sched = _asym_schedule(cfg, cfg.rate)
    for trial in trials:
        seed = TrialSeed(cfg.seed, trial)
        x = gen_source(cfg.n, cfg.p0, seed)
        y = apply_bsc(x, p, seed)
        cw = encode(x, sched)
        try:
            xhat = decode(cw, y, corr, cfg.m)
        except EmptyFrontier:
            xhat = 1 - x
        stats.add_block(cfg.n, _errors(xhat, x), cfg.rate, cw.rate)
    return stats


def _rate_grid(start: float, ceiling: float, step: float) -> list[float]:
    count = int(math.floor((ceiling - start) / step + 1e-9)) + 1
    return [round(start + j * step, 10) for j in range(max(count, 1))]


def _variable_range(cfg: ExperimentConfig, trials: Iterable[int]) -> TrialStats:
    stats = TrialStats(cfg)
    p = cfg.p
    corr = CorrelationModel(cfg.p0, p)
    hx = ra.binary_entropy(cfg.p0)
    start = ra.cond_entropy_bsc(cfg.p0, p)
    grid = _rate_grid(start, hx, cfg.rate_step)
    schedules = {}
    for trial in trials:
        seed = TrialSeed(cfg.seed, trial)
        x = gen_source(cfg.n, cfg.p0, seed)
        y = apply_bsc(x, p, seed)
        found = None
        for r in grid:
            if r not in schedules:
                try:
                    schedules[r] = _asym_schedule(replace(cfg, rate=None, variable=True), r)
                except (ra.Infeasible, ra.DoesNotFit):
                    schedules[r] = None
            sched = schedules[r]
            if sched is None:
                continue
            cw = encode(x, sched)
            try:
                ok = np.array_equal(decode(cw, y, corr, cfg.m), x)
            except EmptyFrontier:
                ok = False
            if ok:
                found = (r, cw.rate)
                break
        if found is None:
            # plain AC at H(X) is lossless
            stats.ceiling_hits += 1
            found = (hx, encode(x, build_schedule(cfg.n, cfg.t, 0.0, cfg.p0)).rate)
        stats.add_block(cfg.n, [], found[0], found[1])
    return stats


def _sym_setup(cfg: ExperimentConfig, rate_x: float, rate_y: float):
    p = cfg.p
    p0y = ra.bsc_output_prob(cfg.p0, p)
    hx, hy = ra.binary_entropy(cfg.p0), ra.binary_entropy(p0y)
    kx, ky = ra.allocate_symmetric(cfg.p0, p0y, p, min(rate_x, hx), min(rate_y, hy),
                                   cfg.n, cfg.t)
    return kx, ky, p0y


def _sym_block(cfg, x, y, kx, ky, p0y, corr, stats):
    cx, cy = encode_pair(x, y, kx, ky, cfg.p0, p0y, cfg.n, cfg.t)
    try:
        r = decode_pair_detail(cx, cy, corr, cfg.m)
        xh, yh = r.x, r.y
        stats.pair_tests += r.pair_tests
    except RoleViolation:
        stats.role_violations += 1
        xh, yh = 1 - x, 1 - y
    except EmptyFrontier:
        xh, yh = 1 - x, 1 - y
    errs = np.concatenate([_errors(xh, x), _errors(yh, y)])
    return errs, cx.rate + cy.rate


def _symmetric_range(cfg: ExperimentConfig, trials: Iterable[int]) -> TrialStats:
    stats = TrialStats(cfg, sources=2)
    p = cfg.p
    corr = CorrelationModel(cfg.p0, p)
    kx, ky, p0y = _sym_setup(cfg, *cfg.split)
    total = cfg.split[0] + cfg.split[1]
    for trial in trials:
        seed = TrialSeed(cfg.seed, trial)
        x = gen_source(cfg.n, cfg.p0, seed)
        y = apply_bsc(x, p, seed)
        errs, achieved = _sym_block(cfg, x, y, kx, ky, p0y, corr, stats)
        stats.add_block(cfg.n, errs, total, achieved)
    return stats


def _symmetric_variable_range(cfg: ExperimentConfig, trials: Iterable[int]) -> TrialStats:
    """Sweep the total rate from H(X,Y) at a fixed X share until both decode."""
    stats = TrialStats(cfg, sources=2)
    p = cfg.p
    corr = CorrelationModel(cfg.p0, p)
    p0y = ra.bsc_output_prob(cfg.p0, p)
    hx, hy = ra.binary_entropy(cfg.p0), ra.binary_entropy(p0y)
    share = 0.5 if cfg.split is None else cfg.split[0] / (cfg.split[0] + cfg.split[1])
    grid = _rate_grid(ra.joint_entropy_bsc(cfg.p0, p), hx + hy, cfg.rate_step)
    setups = {}
    for trial in trials:
        seed = TrialSeed(cfg.seed, trial)
        x = gen_source(cfg.n, cfg.p0, seed)
        y = apply_bsc(x, p, seed)
        found = None
        for r in grid:
            if r not in setups:
                rx = min(share * r, hx)
                try:
                    setups[r] = _sym_setup(cfg, rx, r - rx)
                except ra.Infeasible:
                    setups[r] = None
            if setups[r] is None:
                continue
            kx, ky, _ = setups[r]
            errs, achieved = _sym_block(cfg, x, y, kx, ky, p0y, corr, stats)
            if len(errs) == 0:
                found = (r, achieved)
                break
        if found is None:
            stats.ceiling_hits += 1
            found = (hx + hy, float("nan"))
        stats.add_block(cfg.n, [], found[0], found[1])
    return stats


def _dispatch(cfg: ExperimentConfig) -> Callable[[ExperimentConfig, Iterable[int]], TrialStats]:
    if cfg.split is not None and not cfg.variable:
        return _symmetric_range
    if cfg.variable and cfg.kind == "symmetric":
        return _symmetric_variable_range
    if cfg.variable:
        return _variable_range
    return _fixed_range


def _run_chunk(args) -> TrialStats:
    cfg, lo, hi = args
    return _dispatch(cfg)(cfg, range(lo, hi))


def _execute(cfg: ExperimentConfig, label: str = "") -> TrialStats:
    worker = _dispatch(cfg)
    t0 = time.perf_counter()
    if cfg.min_error_blocks is not None:
        stats = _until_errors(cfg, worker)
    elif cfg.workers > 1:
        n = cfg.n_blocks
        edges = np.linspace(0, n, cfg.workers + 1).astype(int)
        chunks = [(cfg, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        stats = TrialStats(cfg, sources=2 if cfg.split is not None or cfg.kind == "symmetric" else 1)
        with ProcessPoolExecutor(cfg.workers) as pool:
            for part in pool.map(_run_chunk, chunks):
                stats.merge(part)
    else:
        stats = worker(cfg, range(cfg.n_blocks))
    stats.elapsed = time.perf_counter() - t0
    stats.label = label
    log.info("%s", stats.summary())
    return stats


def _until_errors(cfg: ExperimentConfig, worker) -> TrialStats:
    """Run blocks until ``min_error_blocks`` erroneous blocks (or ``max_blocks``)."""
    stats = None
    trial = 0
    chunk = 200
    cap = cfg.max_blocks or 10**7
    while trial < cap:
        hi = min(trial + chunk, cap)
        part = worker(cfg, range(trial, hi))
        if stats is None:
            stats = part
        else:
            stats.merge(part)
        trial = hi
        if stats.block_errors >= cfg.min_error_blocks:
            break
    return stats


# --- public runners --------------------------------------------------------

def run_fixed_rate(cfg: ExperimentConfig) -> TrialStats:
    if cfg.rate is None:
        raise ConfigError("fixed-rate run needs a rate")
    return _execute(cfg, f"fixed R={cfg.rate:g}")


def run_variable_rate(cfg: ExperimentConfig) -> TrialStats:
    if not cfg.variable:
        raise ConfigError("variable-rate run needs variable=True")
    return _execute(replace(cfg, kind="variable"), "variable")


def run_termination_sweep(cfg: ExperimentConfig, t_values: Sequence[int] = (0, 5, 10, 15, 20)
                          ) -> list[tuple[int, TrialStats]]:
    out = []
    for t in t_values:
        c = replace(cfg, t=t, kind="termination")
        _asym_schedule(c, c.rate)  # surface Infeasible up front
        out.append((t, _execute(c, f"T={t}")))
    return out


def run_m_sweep(cfg: ExperimentConfig, m_values: Sequence[int] = (64, 256, 512, 1024, 2048)
                ) -> list[tuple[int, TrialStats]]:
    return [(m, _execute(replace(cfg, m=m, kind="m_sweep"), f"M={m}")) for m in m_values]


def run_symmetric(cfg: ExperimentConfig) -> TrialStats:
    c = replace(cfg, kind="symmetric")
    if c.variable:
        return _execute(c, "symmetric variable")
    if c.split is None:
        raise ConfigError("symmetric fixed-rate run needs a split")
    return _execute(c, f"symmetric {c.split[0]:g}/{c.split[1]:g}")


# --- CSV -------------------------------------------------------------------

CSV_COLUMNS = [
    "label", "kind", "n", "t", "m", "p0", "crossover", "h_cond", "h_joint", "rate", "rate_x",
    "rate_y", "rule", "ber", "fer", "rate_mean", "rate_std", "achieved_rate_mean",
    "first_error_mean", "first_error_std", "bits", "bit_errors", "blocks", "block_errors",
    "ceiling_hits", "role_violations", "seed", "elapsed_ms",
]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def stats_row(s: TrialStats) -> dict:
    c = s.config
    p = c.p
    split = c.split or (None, None)
    return {
        "label": s.label, "kind": c.kind, "n": c.n, "t": c.t, "m": c.m, "p0": float(c.p0),
        "crossover": float(p), "h_cond": ra.cond_entropy_bsc(c.p0, p),
        "h_joint": ra.joint_entropy_bsc(c.p0, p), "rate": c.rate,
        "rate_x": split[0], "rate_y": split[1], "rule": c.rule,
        "ber": s.ber, "fer": s.fer, "rate_mean": s.rate_mean, "rate_std": s.rate_std,
        "achieved_rate_mean": s.achieved_rate_mean, "first_error_mean": s.first_error_mean,
        "first_error_std": s.first_error_std, "bits": s.bits, "bit_errors": s.bit_errors,
        "blocks": s.blocks, "block_errors": s.block_errors, "ceiling_hits": s.ceiling_hits,
        "role_violations": s.role_violations, "seed": c.seed,
        "elapsed_ms": 1000.0 * s.elapsed,
    }


def emit_csv(stats: Iterable[TrialStats], path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for s in stats:
                row = stats_row(s)
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


# --- presets ---------------------------------------------------------------

def _fixed(p0, rate, **kw) -> ExperimentConfig:
    return ExperimentConfig(kind="fixed", p0=p0, rate=rate, **kw)


def _rate_for_total(p0: float, total: float, rate_x: float) -> float:
    """Crossover making H(Y) = total - rate_x (side information coded at H(Y))."""
    target = total - rate_x
    hx = ra.binary_entropy(p0)
    if not hx <= target <= 1.0:
        raise ConfigError(f"H(Y)={target} not reachable for p0={p0}")
    return ra._bisect(lambda p: ra.binary_entropy(ra.bsc_output_prob(p0, p)) - target, 0.0, 0.5)


def preset(name: str, n: int = 200, m: int = DEFAULT_M, t: int = DEFAULT_T, seed: int = 1,
           trials: int | None = None, bits: int | None = None, workers: int = 1
           ) -> list[TrialStats]:
    """Run one of the named reference experiments and return one stats row per point."""
    budget = {"blocks": trials} if trials is not None else {"bits": bits} if bits else {}
    common = dict(n=n, m=m, t=t, seed=seed, workers=workers, **budget)
    if name == "table1":
        return [run_fixed_rate(_fixed(0.5, 0.1, h_cond=h, **common)) for h in (0.1, 0.01, 0.001)]
    if name == "table2":
        var = dict(common)
        if "bits" in var:
            del var["bits"]
        return [
            run_variable_rate(ExperimentConfig(p0=0.5, h_cond=0.5, variable=True, **var)),
            run_variable_rate(ExperimentConfig(p0=0.9, h_joint=1.0, variable=True, **var)),
        ]
    if name == "table3":
        cfg = _fixed(0.5, 0.5, h_cond=0.25, **common)
        return [s for _, s in run_m_sweep(cfg)]
    if name == "fig3":
        cfg = _fixed(0.5, 0.5, h_cond=0.25, **common)
        return [s for _, s in run_termination_sweep(cfg)]
    if name == "fig4":
        return [run_fixed_rate(_fixed(0.5, 0.5, h_joint=1.0 + h, **common))
                for h in (0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)]
    if name == "fig5":
        out = []
        for hj in (1.0, 1.05, 1.1, 1.15, 1.2):
            for rule in ("proportional", "equal"):
                out.append(run_fixed_rate(_fixed(0.8, 0.5, h_joint=hj, rule=rule, **common)))
        return out
    if name == "fig6":
        return [run_fixed_rate(_fixed(0.8, r, crossover=_rate_for_total(0.8, 1.5, r), **common))
                for r in (0.68, 0.67, 0.66, 0.64, 0.63, 0.61, 0.59, 0.58)]
    if name == "fig7":
        return [run_fixed_rate(_fixed(0.9, r, crossover=_rate_for_total(0.9, 1.0, r), **common))
                for r in (0.31, 0.33, 0.36, 0.38, 0.41, 0.43, 0.46)]
    if name == "fig8":
        out = []
        for split in ((0.75, 0.75), (0.6, 0.9)):
            for hj in (1.2, 1.25, 1.3, 1.35, 1.4):
                cfg = ExperimentConfig(kind="symmetric", p0=0.5, h_joint=hj, split=split, **common)
                out.append(run_symmetric(cfg))
        return out
    if name == "fig9":
        var = {k: v for k, v in common.items() if k != "bits"}
        return [
            run_symmetric(ExperimentConfig(kind="symmetric", p0=0.5, h_cond=0.5, variable=True, **var)),
            run_symmetric(ExperimentConfig(kind="symmetric", p0=0.9, h_joint=1.0, variable=True, **var)),
        ]
    raise KeyError(name)


PRESETS = ("table1", "table2", "table3", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9")
