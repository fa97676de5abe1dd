"""Closed-form symmetric equilibria, profits and consumer welfare."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    FirmStrategy,
    MarketError,
    MarketParams,
    OutOfRange,
    PostedPriceDistribution,
    Regime,
    full_info,
    no_info,
    validate,
)

# relative margin below which welfare comparisons count as ties
TIE_TOL = 1e-12


class NonpositivePrice(MarketError):
    pass


@dataclass(frozen=True)
class EquilibriumProfile:
    params: MarketParams
    regime: Regime
    strategy: FirmStrategy
    firm_profit: float
    consumer_welfare: float


def hidden_equilibrium(params: MarketParams) -> EquilibriumProfile:
    """Zero prices and uninformative signals; the consumer buys at the first visit."""
    params = validate(params)
    strategy = FirmStrategy(Regime.HIDDEN, 0.0, no_info(params.mu), mu=params.mu)
    return EquilibriumProfile(params, Regime.HIDDEN, strategy, 0.0, params.mu - params.c)


def posted_equilibrium(params: MarketParams) -> EquilibriumProfile:
    params = validate(params)
    strategy = FirmStrategy(Regime.POSTED, PostedPriceDistribution(params), full_info(params.mu), mu=params.mu)
    return EquilibriumProfile(
        params, Regime.POSTED, strategy, posted_equilibrium_profit(params), consumer_welfare(params, Regime.POSTED)
    )


def equilibrium(params: MarketParams, regime) -> EquilibriumProfile:
    regime = Regime.parse(regime)
    return hidden_equilibrium(params) if regime is Regime.HIDDEN else posted_equilibrium(params)


def _price_cdf(params: MarketParams, p):
    lo, hi = params.price_support
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        ratio = np.where(p > 0, hi / np.where(p > 0, p, 1.0), np.inf)
    inner = 1.0 / params.mu - (1.0 - params.mu) / params.mu * ratio ** (1.0 / (params.n - 1))
    out = np.where(p <= lo, 0.0, np.where(p >= hi, 1.0, np.clip(inner, 0.0, 1.0)))
    return float(out) if out.ndim == 0 else out


def posted_price_cdf(params: MarketParams, p):
    """Equilibrium price CDF of the posted regime; vectorised over ``p``.

    Zero below the support, one from the top of the support (the
    full-information reservation value at zero price) upward.
    """
    params = validate(params)
    if np.any(np.asarray(p) <= 0):
        raise NonpositivePrice(f"price must be positive, got {p}")
    return _price_cdf(params, p)


def posted_price_quantile(params: MarketParams, u):
    """Inverse of :func:`posted_price_cdf`; maps uniforms to prices."""
    params = validate(params)
    u_arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u_arr)) or np.any(u_arr < 0.0) or np.any(u_arr > 1.0):
        raise OutOfRange("u", u, "0 <= u <= 1")
    mu = params.mu
    out = params.u_high * ((1.0 - mu) / (1.0 - mu * u_arr)) ** (params.n - 1)
    return float(out) if out.ndim == 0 else out


def posted_equilibrium_profit(params: MarketParams) -> float:
    params = validate(params)
    return (params.mu - params.c) * math.exp((params.n - 1) * math.log1p(-params.mu))


def _log_welfare_tail(n: int, mu: float) -> float:
    # n mu (1-mu)^(n-1) + (1-mu)^n == (1-mu)^(n-1) (1 + (n-1) mu)
    return (n - 1) * math.log1p(-mu) + math.log1p((n - 1) * mu)


def posted_welfare(params: MarketParams) -> float:
    """Expected maximum effective value under full disclosure and dispersed prices."""
    params = validate(params)
    return params.u_high * -math.expm1(_log_welfare_tail(params.n, params.mu))


def posted_welfare_gap(params: MarketParams) -> float:
    """Distance of posted-regime welfare below its many-firm limit ``(mu - c) / mu``."""
    params = validate(params)
    return params.u_high * math.exp(_log_welfare_tail(params.n, params.mu))


def log_welfare_increment(params: MarketParams) -> float:
    """``log(u(n+1) - u(n))`` for posted-regime welfare ``u``.

    The increment simplifies to ``(mu - c) n mu (1 - mu)^(n-1)``, which is
    positive for every ``n``; working with its log keeps that visible when
    the increment itself underflows.
    """
    params = validate(params)
    n, mu = params.n, params.mu
    return math.log(params.mu - params.c) + math.log(n) + math.log(mu) + (n - 1) * math.log1p(-mu)


def consumer_welfare(params: MarketParams, regime) -> float:
    regime = Regime.parse(regime)
    params = validate(params)
    if regime is Regime.HIDDEN:
        return params.mu - params.c
    return posted_welfare(params)


def _first_true(pred, start: int = 2, limit: int = 1 << 62) -> int:
    """Smallest ``n >= start`` with ``pred(n)``, for predicates false then true."""
    if pred(start):
        return start
    lo, hi = start, start + 1
    while not pred(hi):
        lo, hi = hi, 2 * hi
        if hi > limit:
            raise MarketError("posting threshold search did not terminate")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def posting_threshold(mu: float, c: float | None = None) -> int:
    """Smallest market size at which consumers strictly prefer posted information.

    Without ``c`` this uses the cost-free reduced inequality
    ``(1 - mu)^(n-2) (1 + (n-1) mu) < 1``. With ``c`` it compares the two
    welfare levels directly, which must give the same answer.
    """
    if not 0.0 < mu < 1.0:
        raise OutOfRange("mu", mu, "0 < mu < 1")
    if c is None:
        return _first_true(lambda n: (n - 2) * math.log1p(-mu) + math.log1p((n - 1) * mu) < -TIE_TOL)

    def benefits(n):
        params = MarketParams(n, mu, c)
        hidden = consumer_welfare(params, Regime.HIDDEN)
        return posted_welfare(params) - hidden > TIE_TOL * hidden

    validate(MarketParams(2, mu, c))
    return _first_true(benefits)
