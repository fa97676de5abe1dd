"""Consumer side: reservation values, Pandora's rule and effective values.

Firm indices are 0-based. ``None`` stands for the outside option wherever a
purchase is reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import optimize

from .core import DiscreteDistribution, MarketError

TieBreak = Union[str, np.random.Generator]


class InternalError(RuntimeError):
    pass


def reservation_value(F: DiscreteDistribution, p: float, c: float) -> float:
    """Solve ``c = E_F[(x - p - U)^+]`` for ``U`` exactly.

    The right-hand side is piecewise linear in ``U`` with kinks at the atoms
    of ``F``, so we walk the support from the top down and solve the linear
    piece that brackets ``c``.  With ``c = 0`` the smallest root,
    ``max(x) - p``, is returned.
    """
    if c < 0:
        raise MarketError(f"search cost c={c} must be nonnegative")
    x, w = F.values, F.weights
    if c >= F.mean():
        raise MarketError(f"search cost c={c} must be below the prior mean {F.mean()}")
    tail_mass = 0.0
    tail_value = 0.0
    for k in range(len(x) - 1, -1, -1):
        tail_mass += w[k]
        tail_value += w[k] * x[k]
        # g(y) = tail_value - y * tail_mass on [x[k-1], x[k]]
        if k == 0 or tail_value - x[k - 1] * tail_mass >= c:
            y = (tail_value - c) / tail_mass
            return float(y - p)
    raise InternalError("reservation value scan fell through")


def reservation_value_bisect(F: DiscreteDistribution, p: float, c: float, xtol: float = 1e-14) -> float:
    """Root of the reservation equation by bisection (cross-check only)."""

    def residual(u):
        return float(np.dot(np.maximum(F.values - p - u, 0.0), F.weights)) - c

    lo, hi = -p - 1.0, float(F.values[-1]) - p
    if residual(lo) < 0 or residual(hi) > 0:
        raise InternalError("reservation equation is not bracketed")
    if c == 0:
        return hi
    root = optimize.bisect(residual, lo, hi, xtol=xtol, maxiter=400)
    if abs(residual(root)) > 1e-12:
        raise InternalError(f"bisection residual {residual(root)} above tolerance")
    return float(root)


@dataclass(frozen=True)
class EffectiveValueLottery:
    dist: DiscreteDistribution
    reservation: float
    price: float

    def mean(self) -> float:
        return self.dist.mean()


def effective_value_lottery(F: DiscreteDistribution, p: float, c: float) -> EffectiveValueLottery:
    """Distribution of ``min(x - p, U)`` when ``x`` is drawn from ``F``."""
    U = reservation_value(F, p, c)
    dist = F.map(lambda x: np.minimum(x - p, U))
    return EffectiveValueLottery(dist=dist, reservation=U, price=p)


def tie_priority(n: int, tie_break: TieBreak = "lowest") -> np.ndarray:
    """Rank used to break ties between firms; lower rank wins.

    ``"lowest"`` favours the lowest firm index. Passing a numpy Generator
    draws a uniformly random ranking instead.
    """
    if isinstance(tie_break, np.random.Generator):
        return tie_break.permutation(n)
    if tie_break == "lowest":
        return np.arange(n)
    raise ValueError(f"unknown tie_break {tie_break!r}")


@dataclass(frozen=True)
class SearchOutcome:
    visit_order: tuple[int, ...]
    purchase: Optional[int]
    consumer_payoff: float
    firm_revenues: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.visit_order)


def _best(values, candidates, priority) -> Optional[int]:
    best = None
    for i in candidates:
        if best is None or values[i] > values[best] or (values[i] == values[best] and priority[i] < priority[best]):
            best = i
    return best


def pandora_search(
    reservations: Sequence[float],
    net_values: Sequence[float],
    c: float,
    prices: Optional[Sequence[float]] = None,
    tie_break: TieBreak = "lowest",
    priority: Optional[np.ndarray] = None,
) -> SearchOutcome:
    """Run Weitzman's selection and stopping rules on one sample path.

    Args:
        reservations: reservation value of each firm (as the consumer sees it).
        net_values: realized posterior minus price, revealed on visiting.
        c: per-visit search cost.
        prices: used only to report firm revenues; zeros if omitted.
        tie_break: see :func:`tie_priority`. Ignored when ``priority`` is given.

    The consumer stops as soon as the best sampled net value weakly exceeds
    the highest remaining reservation value, or when every remaining
    reservation value is strictly negative.
    """
    n = len(reservations)
    if len(net_values) != n:
        raise ValueError("reservations and net_values differ in length")
    if priority is None:
        priority = tie_priority(n, tie_break)
    order = sorted(range(n), key=lambda i: (-reservations[i], priority[i]))
    visited: list[int] = []
    best: Optional[int] = None
    for i in order:
        top = reservations[i]
        if top < 0 or (best is not None and net_values[best] >= top):
            break
        visited.append(i)
        best = _best(net_values, [best, i] if best is not None else [i], priority)
    k = len(visited)
    purchase = best if best is not None and net_values[best] >= 0 else None
    revenues = [0.0] * n
    if purchase is not None:
        payoff = float(net_values[purchase]) - k * c
        revenues[purchase] = float(prices[purchase]) if prices is not None else 0.0
    else:
        payoff = -k * c
    return SearchOutcome(tuple(visited), purchase, payoff, tuple(revenues))


def static_winner(
    effective_values: Sequence[float],
    tie_break: TieBreak = "lowest",
    priority: Optional[np.ndarray] = None,
) -> Optional[int]:
    """Firm with the highest effective value, or ``None`` if all are negative."""
    if priority is None:
        priority = tie_priority(len(effective_values), tie_break)
    best = _best(effective_values, range(len(effective_values)), priority)
    if best is None or effective_values[best] < 0:
        return None
    return best


def pandora_search_batch(reservations: np.ndarray, net_values: np.ndarray, c: float, prices: Optional[np.ndarray] = None):
    """Vectorised :func:`pandora_search` over rows, lowest-index tie-break.

    Returns ``(purchase, visits, payoff, revenue)`` arrays with ``purchase``
    set to -1 for the outside option and ``revenue`` the price collected by
    the seller (0 without a sale).
    """
    U = np.asarray(reservations, dtype=float)
    V = np.asarray(net_values, dtype=float)
    m, n = U.shape
    order = np.argsort(-U, axis=1, kind="stable")
    U_sorted = np.take_along_axis(U, order, axis=1)
    V_sorted = np.take_along_axis(V, order, axis=1)
    best_val = np.full(m, -np.inf)
    best_idx = np.full(m, -1, dtype=np.int64)
    visits = np.zeros(m, dtype=np.int64)
    active = np.ones(m, dtype=bool)
    for k in range(n):
        top = U_sorted[:, k]
        active &= ~((top < 0) | ((best_idx >= 0) & (best_val >= top)))
        v = V_sorted[:, k]
        idx = order[:, k]
        visits += active
        better = active & ((v > best_val) | ((v == best_val) & (idx < best_idx)))
        best_val = np.where(better, v, best_val)
        best_idx = np.where(better, idx, best_idx)
    purchase = np.where((best_idx >= 0) & (best_val >= 0), best_idx, -1)
    bought = purchase >= 0
    payoff = np.where(bought, best_val, 0.0) - visits * c
    if prices is None:
        revenue = np.zeros(m)
    else:
        revenue = np.where(bought, np.take_along_axis(np.asarray(prices, float), np.maximum(purchase, 0)[:, None], 1)[:, 0], 0.0)
    return purchase, visits, payoff, revenue


def static_winner_batch(effective_values: np.ndarray) -> np.ndarray:
    W = np.asarray(effective_values, dtype=float)
    idx = np.argmax(W, axis=1)
    return np.where(W[np.arange(W.shape[0]), idx] >= 0, idx, -1)
