"""Numerical certification of the posted- and hidden-information equilibria.

Deviation profits are evaluated against the demand a single firm faces when
all rivals play the posted-information equilibrium.  The brute-force oracle
only searches pure deviations: a mixed deviation's profit is an average of
pure-deviation profits against the same rival profile, so it can never beat
the best pure one.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import MarketError, MarketParams, no_info, validate
from .equilibrium import _price_cdf, posted_equilibrium_profit
from .weitzman import pandora_search

DOMAIN_TOL = 1e-12


class OutOfDomain(MarketError):
    pass


class PriceOutsideSupport(MarketError):
    pass


class InfeasibleSupport(MarketError):
    pass


class EmptyInput(MarketError):
    pass


@dataclass(frozen=True)
class DemandCurve:
    """Probability that a deviant with effective value ``w`` makes the sale.

    ``__call__`` composes the rivals' equilibrium price CDF; ``closed_form``
    is the simplified piecewise expression. They are kept separate so that
    each can check the other.
    """

    params: MarketParams

    @property
    def d0(self) -> float:
        return (1.0 - self.params.mu) ** (self.params.n - 1)

    @property
    def d_bar(self) -> float:
        return self.params.u_high * (1.0 - self.d0)

    def __call__(self, w):
        prm = self.params
        w = np.asarray(w, dtype=float)
        lost = 1.0 - prm.mu * _price_cdf(prm, prm.u_high - w)
        out = np.where(w < 0, 0.0, np.asarray(lost) ** (prm.n - 1))
        return float(out) if out.ndim == 0 else out

    def closed_form(self, w):
        prm = self.params
        w = np.asarray(w, dtype=float)
        inner = np.where(w < prm.u_high, w, 0.0)
        hyper = self.d0 * prm.u_high / (prm.u_high - inner)
        out = np.where(w < 0, 0.0, np.where(w <= self.d_bar, hyper, 1.0))
        return float(out) if out.ndim == 0 else out


def demand_curve(params: MarketParams) -> DemandCurve:
    return DemandCurve(validate(params))


def deviation_payoff(params: MarketParams, p: float, w):
    """Deviant's profit at price ``p`` as a function of its realized effective value.

    Zero below the outside option; above it, the price times the
    hyperbolic demand, capped at ``p`` once demand reaches one (only
    possible for prices below the equilibrium support).
    """
    params = validate(params)
    if not 0.0 < p <= params.u_high + DOMAIN_TOL:
        raise OutOfDomain(f"price {p} outside (0, {params.u_high}]")
    w = np.asarray(w, dtype=float)
    if np.any(w < -p - DOMAIN_TOL) or np.any(w > params.u_high - p + DOMAIN_TOL):
        raise OutOfDomain(f"effective value outside [{-p}, {params.u_high - p}]")
    mu, c, n = params.mu, params.c, params.n
    scale = p * (1.0 - mu) ** (n - 1)
    with np.errstate(divide="ignore"):
        hyper = scale * (mu - c) / (mu - c - mu * np.maximum(w, 0.0))
    out = np.where(w < 0, 0.0, np.minimum(hyper, p))
    return float(out) if out.ndim == 0 else out


def _in_support(params: MarketParams, p: float) -> bool:
    lo, hi = params.price_support
    return lo - DOMAIN_TOL <= p <= hi + DOMAIN_TOL


def majorizing_line(params: MarketParams, p: float) -> tuple[float, float]:
    """Slope and intercept of the line through the deviation payoff at ``-p``, ``0`` and ``u_high - p``."""
    params = validate(params)
    if not _in_support(params, p):
        raise PriceOutsideSupport(f"price {p} outside equilibrium support {params.price_support}")
    d0 = (1.0 - params.mu) ** (params.n - 1)
    return d0, d0 * p


@dataclass
class MajorizationCheck:
    price: float
    grid: np.ndarray = field(repr=False)
    gap: np.ndarray = field(repr=False)
    touch_points: tuple[float, float, float]
    touch_gaps: tuple[float, float, float]

    @property
    def min_gap(self) -> float:
        return float(self.gap.min())

    def strict_elsewhere(self) -> bool:
        """Line strictly above the payoff at every grid point other than the touch points."""
        touching = np.isin(self.grid, np.array(self.touch_points))
        return bool(np.all(self.gap[~touching] > 0.0))


def check_majorization(params: MarketParams, p: float, grid_size: int = 10_000) -> MajorizationCheck:
    params = validate(params)
    slope, intercept = majorizing_line(params, p)
    top = params.u_high - p
    touch = (-p, 0.0, top)
    grid = np.linspace(-p, top, grid_size)
    # drop float near-duplicates of the touch points before inserting them exactly
    near = np.min(np.abs(grid[:, None] - np.array(touch)[None, :]), axis=1) <= 1e-12
    grid = np.unique(np.concatenate([grid[~near], touch]))
    gap = slope * grid + intercept - deviation_payoff(params, p, grid)
    touch_gaps = tuple(float(slope * t + intercept - deviation_payoff(params, p, t)) for t in touch)
    return MajorizationCheck(p, grid, gap, touch, touch_gaps)


def _ternary_parts(params: MarketParams, p, w2):
    """Mass on the top effective value and the mean of the remaining mass."""
    mu, c = params.mu, params.c
    s = np.asarray(w2, dtype=float) + p
    if c == 0.0:
        top = np.zeros_like(s)
        rest_mean = np.full_like(s, mu - p)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            top = c / (1.0 - s)
            rest_mean = ((mu - c - p) * (1.0 - s) - c * w2) / (1.0 - s - c)
    return top, rest_mean


def ternary_effective_weights(params: MarketParams, p: float, w0: float, w1: float, w2: float):
    """Weights on ``w0 < w1 < w2`` for the three-point effective-value lottery.

    The top value ``w2`` is the reservation value; the bottom two carry the
    remaining mass so that the lottery's mean is ``mu - c - p``.

    Returns:
        ``((weight0, weight1, weight2), rest_mean)`` where ``rest_mean`` is
        the conditional mean of the lottery below ``w2``.
    """
    params = validate(params)
    if not w0 < w1 < w2:
        raise InfeasibleSupport(f"need w0 < w1 < w2, got {(w0, w1, w2)}")
    if w0 < -p - DOMAIN_TOL:
        raise InfeasibleSupport(f"w0={w0} below -p={-p}")
    if not params.u_low - p - DOMAIN_TOL <= w2 <= params.u_high - p + DOMAIN_TOL:
        raise InfeasibleSupport(f"w2={w2} outside [{params.u_low - p}, {params.u_high - p}]")
    top, a = _ternary_parts(params, p, w2)
    top, a = float(top), float(a)
    span = w1 - w0
    weights = ((1.0 - top) * (w1 - a) / span, (1.0 - top) * (a - w0) / span, top)
    if any(not (-DOMAIN_TOL <= x <= 1.0 + DOMAIN_TOL) for x in weights):
        raise InfeasibleSupport(f"weights {weights} fall outside [0, 1]")
    return tuple(min(max(x, 0.0), 1.0) for x in weights), a


@dataclass(frozen=True)
class ConcaveEnvelope:
    """Least concave majorant of a finite point set, linear between vertices."""

    xs: np.ndarray
    ys: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.xs[0] - DOMAIN_TOL) or np.any(x > self.xs[-1] + DOMAIN_TOL):
            raise OutOfDomain("envelope evaluated outside the sampled range")
        out = np.interp(x, self.xs, self.ys)
        return float(out) if out.ndim == 0 else out


def concave_envelope(points: Sequence[tuple[float, float]]) -> ConcaveEnvelope:
    """Upper hull of ``points`` by a monotone-chain scan."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise EmptyInput("no points given")
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    # one point per abscissa, the highest
    first = np.concatenate([[True], np.diff(pts[:, 0]) > 0])
    pts = pts[first]
    hull: list[tuple[float, float]] = []
    for x, y in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle vertex unless it lies strictly above the chord
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    arr = np.array(hull)
    return ConcaveEnvelope(arr[:, 0].copy(), arr[:, 1].copy())


# ---------------------------------------------------------------------------
# brute-force deviation oracle


@dataclass(frozen=True)
class Candidate:
    profit: float
    price: float
    kind: str
    support: tuple[float, ...]
    weights: tuple[float, ...]


def _posterior_grids(mu: float, size: int):
    lows = np.linspace(0.0, mu, size + 1)[:-1]
    highs = np.linspace(mu, 1.0, size + 1)[1:]
    return lows, highs


def binary_deviation_profits(params: MarketParams, p: float, lows: np.ndarray, highs: np.ndarray, demand: DemandCurve):
    """Profit matrix over binary signals ``{a, b}`` (rows ``a``, columns ``b``) at price ``p``."""
    mu, c = params.mu, params.c
    a = lows[:, None]
    b = highs[None, :]
    w_high = (mu - a) / (b - a)
    w_low = 1.0 - w_high
    y = np.where(a <= mu - c, b - c / w_high, mu - c)
    U = y - p
    eff_low = np.minimum(a - p, U)
    return p * (w_low * demand.closed_form(eff_low) + w_high * demand.closed_form(U))


def _ternary_best(params: MarketParams, p: float, size: int, demand: DemandCurve) -> Optional[Candidate]:
    w2 = np.linspace(params.u_low - p, params.u_high - p, size)
    lower = np.linspace(-p, params.u_high - p, size)
    top, a = _ternary_parts(params, p, w2)
    W0 = lower[:, None, None]
    W1 = lower[None, :, None]
    W2 = w2[None, None, :]
    T = top[None, None, :]
    A = a[None, None, :]
    valid = (W0 < W1) & (W1 < W2)
    with np.errstate(divide="ignore", invalid="ignore"):
        span = np.where(valid, W1 - W0, 1.0)
        g0 = (1.0 - T) * (W1 - A) / span
        g1 = (1.0 - T) * (A - W0) / span
    tol = DOMAIN_TOL
    ok = valid & (g0 >= -tol) & (g1 >= -tol) & (T >= -tol) & (T <= 1.0 + tol) & np.isfinite(g0) & np.isfinite(g1)
    if not ok.any():
        return None
    dw = demand.closed_form
    profit = p * (g0 * dw(W0) + g1 * dw(W1) + T * dw(W2))
    profit = np.where(ok, profit, -np.inf)
    flat = int(np.argmax(profit))
    i, j, k = np.unravel_index(flat, profit.shape)
    support = (lower[i] + p, lower[j] + p, 1.0)
    weights = tuple(min(max(float(x), 0.0), 1.0) for x in (g0[i, j, k], g1[i, j, k], top[k]))
    return Candidate(float(profit[i, j, k]), p, "ternary", support, weights)


def best_deviation_at_price(
    params: MarketParams,
    p: float,
    support_grid_size: int = 200,
    include_ternary: bool = False,
    ternary_grid_size: int = 40,
) -> Candidate:
    """Most profitable signal at a fixed price.

    Candidates are compared in a fixed order: binary signals by low then
    high posterior, then no information, then ternary lotteries; a later
    candidate replaces the incumbent only if strictly better.
    """
    params = validate(params)
    demand = DemandCurve(params)
    lows, highs = _posterior_grids(params.mu, support_grid_size)
    prof = binary_deviation_profits(params, p, lows, highs, demand)
    i, j = np.unravel_index(int(np.argmax(prof)), prof.shape)
    a, b, mu = lows[i], highs[j], params.mu
    best = Candidate(float(prof[i, j]), p, "binary", (float(a), float(b)), ((b - mu) / (b - a), (mu - a) / (b - a)))
    silent = p * float(demand.closed_form(params.u_low - p))
    if silent > best.profit:
        best = Candidate(silent, p, "no_info", (params.mu,), (1.0,))
    if include_ternary:
        tern = _ternary_best(params, p, ternary_grid_size, demand)
        if tern is not None and tern.profit > best.profit:
            best = tern
    return best


@dataclass
class DeviationReport:
    best_profit: float
    best_price: float
    best_kind: str
    best_support: tuple[float, ...]
    best_weights: tuple[float, ...]
    equilibrium_profit: float
    margin: float
    price_grid_size: int
    support_grid_size: int
    include_ternary: bool
    ternary_grid_size: int
    tolerance: float
    refinements: int = 0

    @property
    def certified(self) -> bool:
        return self.margin <= self.tolerance

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["best_support"] = ";".join(repr(float(x)) for x in self.best_support)
        rec["best_weights"] = ";".join(repr(float(x)) for x in self.best_weights)
        rec["certified"] = self.certified
        return rec


def _scan_prices(args) -> Candidate:
    params, prices, support_grid_size, include_ternary, ternary_grid_size = args
    best = None
    for p in prices:
        cand = best_deviation_at_price(params, float(p), support_grid_size, include_ternary, ternary_grid_size)
        if best is None or cand.profit > best.profit:
            best = cand
    return best


def _search_once(params, price_grid_size, support_grid_size, include_ternary, ternary_grid_size, workers) -> Candidate:
    prices = np.linspace(params.u_high / price_grid_size, params.u_high, price_grid_size)
    if workers <= 1:
        return _scan_prices((params, prices, support_grid_size, include_ternary, ternary_grid_size))
    chunks = [c for c in np.array_split(prices, workers) if c.size]
    jobs = [(params, chunk, support_grid_size, include_ternary, ternary_grid_size) for chunk in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_scan_prices, jobs))
    # chunks are in ascending price order; strict '>' keeps the lowest price on ties
    best = results[0]
    for cand in results[1:]:
        if cand.profit > best.profit:
            best = cand
    return best


def best_deviation_search(
    params: MarketParams,
    price_grid_size: int = 200,
    support_grid_size: int = 200,
    include_ternary: bool = False,
    ternary_grid_size: int = 40,
    tolerance: float = 1e-6,
    workers: int = 1,
    refine: bool = False,
    max_refinements: int = 3,
    equilibrium_profit: Optional[float] = None,
) -> DeviationReport:
    """Grid search for a profitable unilateral deviation from the posted equilibrium.

    ``equilibrium_profit`` overrides the analytic benchmark the best
    deviation is compared with. With ``refine`` the price and support
    grids are doubled until the best profit moves by less than 1e-7.
    """
    params = validate(params)
    if min(price_grid_size, support_grid_size) < 50:
        raise MarketError("price and support grids need at least 50 points each")
    best = _search_once(params, price_grid_size, support_grid_size, include_ternary, ternary_grid_size, workers)
    rounds = 0
    while refine and rounds < max_refinements:
        price_grid_size *= 2
        support_grid_size *= 2
        finer = _search_once(params, price_grid_size, support_grid_size, include_ternary, ternary_grid_size, workers)
        rounds += 1
        moved = abs(finer.profit - best.profit)
        best = finer if finer.profit > best.profit else best
        if moved < 1e-7:
            break
    eq = posted_equilibrium_profit(params) if equilibrium_profit is None else float(equilibrium_profit)
    return DeviationReport(
        best_profit=best.profit,
        best_price=best.price,
        best_kind=best.kind,
        best_support=tuple(float(x) for x in best.support),
        best_weights=tuple(float(x) for x in best.weights),
        equilibrium_profit=eq,
        margin=best.profit - eq,
        price_grid_size=price_grid_size,
        support_grid_size=support_grid_size,
        include_ternary=include_ternary,
        ternary_grid_size=ternary_grid_size,
        tolerance=tolerance,
        refinements=rounds,
    )


def hidden_deviation_check(params: MarketParams, p_dev: float, signal=None) -> float:
    """Expected profit of a single deviant when rivals price at 0 with no information.

    The consumer cannot see the deviant's signal. At a positive price she
    conjectures no information, so its reservation value is
    ``mu - c - p_dev``; at price 0 she keeps the equilibrium conjecture,
    which gives the same value. The deviant is placed first in the
    tie-break order, the most favourable position for it.
    """
    params = validate(params)
    if p_dev < 0:
        raise MarketError(f"deviation price {p_dev} must be nonnegative")
    signal = no_info(params.mu) if signal is None else signal
    n = params.n
    conjectured = params.u_low - p_dev
    reservations = [conjectured] + [params.u_low] * (n - 1)
    prices = [p_dev] + [0.0] * (n - 1)
    profit = 0.0
    for x, weight in signal.atoms():
        nets = [x - p_dev] + [params.mu] * (n - 1)
        outcome = pandora_search(reservations, nets, params.c, prices=prices)
        profit += weight * outcome.firm_revenues[0]
    return profit


__all__ = [
    "Candidate",
    "ConcaveEnvelope",
    "DemandCurve",
    "DeviationReport",
    "EmptyInput",
    "InfeasibleSupport",
    "MajorizationCheck",
    "OutOfDomain",
    "PriceOutsideSupport",
    "best_deviation_at_price",
    "best_deviation_search",
    "binary_deviation_profits",
    "check_majorization",
    "concave_envelope",
    "demand_curve",
    "deviation_payoff",
    "hidden_deviation_check",
    "majorizing_line",
    "ternary_effective_weights",
]
