"""Correlated binary sources: Bernoulli X, side information Y = X through a BSC."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rate_alloc import InvalidParam, bsc_output_prob

LAMBDA_FLOOR = -60.0
# Branch metrics live on a 2^-20 grid so path sums are exact in float64 and
# equal-likelihood paths tie exactly.
METRIC_SCALE = 2.0 ** 20

SOURCE_STREAM = 0
CHANNEL_STREAM = 1
SOURCE_Y_STREAM = 2


def _quantize_metric(v: float) -> float:
    return round(v * METRIC_SCALE) / METRIC_SCALE


def _log2_clamped(v: float) -> float:
    if v <= 0.0:
        return LAMBDA_FLOOR
    return max(math.log2(v), LAMBDA_FLOOR)


def posterior_table(p0: float, p: float) -> np.ndarray:
    """``table[a, b] = log2 P(X=a | Y=b)`` by Bayes, clamped at -60."""
    if not 0.0 < p0 < 1.0:
        raise InvalidParam(f"p0={p0} outside (0, 1)")
    if not 0.0 <= p <= 1.0:
        raise InvalidParam(f"crossover p={p} outside [0, 1]")
    px = (p0, 1.0 - p0)
    py = (bsc_output_prob(p0, p), 1.0 - bsc_output_prob(p0, p))
    table = np.empty((2, 2))
    for a in (0, 1):
        for b in (0, 1):
            like = 1.0 - p if a == b else p
            table[a, b] = _quantize_metric(_log2_clamped(like * px[a] / py[b]))
    return table


def channel_table(p: float) -> np.ndarray:
    """``table[b, a] = log2 P(Y=b | X=a)``: the BSC itself."""
    table = np.empty((2, 2))
    for a in (0, 1):
        for b in (0, 1):
            table[b, a] = _quantize_metric(_log2_clamped(1.0 - p if a == b else p))
    return table


@dataclass(frozen=True)
class CorrelationModel:
    p0: float
    crossover: float
    table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "table", posterior_table(self.p0, self.crossover))

    @property
    def p0_y(self) -> float:
        return bsc_output_prob(self.p0, self.crossover)

    def metric(self, x: int, y: int) -> float:
        return float(self.table[x, y])

    def reverse_table(self) -> np.ndarray:
        """log2 P(Y=b | X=a), indexed ``[b, a]``."""
        return channel_table(self.crossover)


@dataclass(frozen=True)
class TrialSeed:
    master: int
    trial: int

    def generator(self, stream: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master, spawn_key=(self.trial, stream))
        return np.random.Generator(np.random.Philox(seq))


def gen_source(n: int, p0: float, seed: TrialSeed, stream: int = SOURCE_STREAM) -> np.ndarray:
    u = seed.generator(stream).random(n)
    return (u >= p0).astype(np.uint8)


def apply_bsc(x: np.ndarray, p: float, seed: TrialSeed) -> np.ndarray:
    w = seed.generator(CHANNEL_STREAM).random(len(x)) < p
    return (np.asarray(x, dtype=np.uint8) ^ w).astype(np.uint8)
