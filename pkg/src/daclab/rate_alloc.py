"""Entropy helpers and the solvers that turn target rates into overlap parameters."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

K_MAX = 0.99


class InvalidParam(ValueError):
    pass


class Infeasible(ValueError):
    """The requested rate needs more overlap than ``K_MAX`` allows."""


class DoesNotFit(ValueError):
    """An equal-overlap enlargement pushes a subinterval outside [0, 1)."""


class SlepianWolfWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AllocationResult:
    k: float
    alpha: tuple[float, float]
    enlarged: tuple[float, float]
    target_rate: float
    predicted_rate: float


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def bsc_output_prob(p0: float, p: float) -> float:
    """P(Y=0) when Y is X sent through a BSC with crossover ``p``."""
    return p0 * (1.0 - p) + (1.0 - p0) * p


def cond_entropy_bsc(p0: float, p: float) -> float:
    """H(X|Y) for Y = X xor Bernoulli(p) noise."""
    return binary_entropy(p0) + binary_entropy(p) - binary_entropy(bsc_output_prob(p0, p))


def joint_entropy_bsc(p0: float, p: float) -> float:
    return binary_entropy(p0) + binary_entropy(p)


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def crossover_for_cond_entropy(p0: float, hxy: float) -> float:
    """Invert H(X|Y) (increasing in p on [0, 1/2]) by bisection."""
    hx = binary_entropy(p0)
    if not 0.0 <= hxy <= hx:
        raise InvalidParam(f"H(X|Y)={hxy} outside [0, H(X)={hx:.6f}]")
    if hxy == 0.0:
        return 0.0
    return _bisect(lambda p: cond_entropy_bsc(p0, p) - hxy, 0.0, 0.5)


def crossover_for_joint_entropy(p0: float, h_joint: float) -> float:
    hx = binary_entropy(p0)
    if not hx <= h_joint <= hx + 1.0:
        raise InvalidParam(f"H(X,Y)={h_joint} outside [H(X), H(X)+1]")
    if h_joint == hx:
        return 0.0
    return _bisect(lambda p: binary_entropy(p) - (h_joint - hx), 0.0, 0.5)


def overlap_factors(p0: float, k: float) -> tuple[float, float, float, float]:
    """Proportional rule: alpha_j = p_j^-k, enlarged p_j = p_j^(1-k)."""
    if not 0.0 <= k < 1.0:
        raise InvalidParam(f"k={k} outside [0, 1)")
    p = (p0, 1.0 - p0)
    a0, a1 = (pj ** -k for pj in p)
    return a0, a1, p[0] ** (1.0 - k), p[1] ** (1.0 - k)


def equal_overlap_factor(p0: float, target_rate: float, strict: bool = False) -> tuple[float, bool]:
    """Equal-alpha rule. Returns ``(alpha, fits)``.

    ``fits`` is False when the most probable symbol's enlarged interval would
    exceed the unit interval.
    """
    hx = binary_entropy(p0)
    if target_rate > hx + 1e-12:
        raise InvalidParam(f"target rate {target_rate} above H(X)={hx:.6f}")
    alpha = 2.0 ** (hx - target_rate)
    fits = alpha * max(p0, 1.0 - p0) <= 1.0
    if strict and not fits:
        raise DoesNotFit(f"alpha={alpha:.4f} does not fit for p0={p0}")
    return alpha, fits


def predicted_rate(p0: float, pt0: float, pt1: float) -> float:
    """Expected bits per symbol when the coder uses enlarged probabilities."""
    return -(p0 * math.log2(pt0) + (1.0 - p0) * math.log2(pt1))


def predicted_rate_k(p0: float, k: float) -> float:
    return (1.0 - k) * binary_entropy(p0)


def schedule_rate(p0: float, k: float, n: int, n_overlapped: int) -> float:
    """Rate when only ``n_overlapped`` of ``n`` symbols use overlap ``k``."""
    hx = binary_entropy(p0)
    return (n_overlapped * (1.0 - k) * hx + (n - n_overlapped) * hx) / n


def _solve_overlapped(p0: float, target_rate: float, n: int, n_overlapped: int) -> float:
    hx = binary_entropy(p0)
    if target_rate > hx + 1e-12:
        raise InvalidParam(f"target rate {target_rate} above H(X)={hx:.6f}")
    if target_rate >= hx:
        return 0.0
    if n_overlapped <= 0:
        raise Infeasible("no overlapped symbols available to lower the rate")
    k = n * (hx - target_rate) / (n_overlapped * hx)
    if k > K_MAX:
        raise Infeasible(f"rate {target_rate} needs k={k:.4f} > {K_MAX}")
    return max(k, 0.0)


def solve_k(p0: float, target_rate: float, n: int, t: int = 0) -> float:
    """Overlap exponent giving ``target_rate`` once the T plain symbols are paid for."""
    if not 0 <= t <= n or n <= 0:
        raise InvalidParam(f"need 0 <= T <= N, got T={t}, N={n}")
    return _solve_overlapped(p0, target_rate, n, n - t)


def solve_equal_alpha(p0: float, target_rate: float, n: int, t: int = 0) -> float:
    """Equal-alpha counterpart of :func:`solve_k`, with termination compensation."""
    hx = binary_entropy(p0)
    if n - t <= 0:
        if target_rate >= hx:
            return 1.0
        raise Infeasible("no overlapped symbols available to lower the rate")
    delta = n * (hx - target_rate) / (n - t)
    alpha = 2.0 ** max(delta, 0.0)
    if alpha * max(p0, 1.0 - p0) > 1.0:
        raise DoesNotFit(f"alpha={alpha:.4f} does not fit for p0={p0}")
    return alpha


def allocate_margin(p0: float, p: float, mu: float, n: int, t: int = 0) -> AllocationResult:
    """Target min(H(X), mu*H(X|Y)) and solve for k."""
    if mu < 1.0:
        raise InvalidParam(f"margin mu={mu} must be >= 1")
    hx = binary_entropy(p0)
    target = min(hx, mu * cond_entropy_bsc(p0, p))
    k = solve_k(p0, target, n, t)
    a0, a1, pt0, pt1 = overlap_factors(p0, k)
    return AllocationResult(k, (a0, a1), (pt0, pt1), target,
                            schedule_rate(p0, k, n, n - t))


def active_overlapped_count(n: int, t: int, role: int, n_sources: int = 2) -> int:
    """Indexes i < N-T with i % P == role."""
    limit = n - t
    if limit <= role:
        return 0
    return (limit - 1 - role) // n_sources + 1


def allocate_symmetric(p0x: float, p0y: float, p: float, rate_x: float, rate_y: float,
                       n: int | None = None, t: int = 0) -> tuple[float, float]:
    """Split overlap between two time-shared encoders.

    Without ``n`` the plain half-duty formula k = 2(1 - R/H) is used; with
    ``n`` the termination tail and the exact active-set size are accounted
    for.
    """
    hx, hy = binary_entropy(p0x), binary_entropy(p0y)
    h_xgy = cond_entropy_bsc(p0x, p)
    h_joint = joint_entropy_bsc(p0x, p)
    h_ygx = h_joint - hx
    if (rate_x < h_xgy - 1e-12 or rate_y < h_ygx - 1e-12
            or rate_x + rate_y < h_joint - 1e-12):
        warnings.warn(
            f"rates ({rate_x:.4f}, {rate_y:.4f}) outside the Slepian-Wolf region",
            SlepianWolfWarning, stacklevel=2)
    if n is None:
        ks = []
        for r, h in ((rate_x, hx), (rate_y, hy)):
            if r > h + 1e-12:
                raise InvalidParam(f"rate {r} above entropy {h:.6f}")
            k = 2.0 * (1.0 - r / h) if h > 0 else 0.0
            if k > K_MAX:
                raise Infeasible(f"rate {r} needs k={k:.4f} > {K_MAX}")
            ks.append(max(k, 0.0))
        return ks[0], ks[1]
    kx = _solve_overlapped(p0x, rate_x, n, active_overlapped_count(n, t, 0))
    ky = _solve_overlapped(p0y, rate_y, n, active_overlapped_count(n, t, 1))
    return kx, ky
