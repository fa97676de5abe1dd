"""Seeded simulation of the market game in either regime.

Replications are grouped into fixed blocks of ``BLOCK_SIZE``. Block ``b``
draws from a Philox stream keyed by the master seed with counter ``b``, so a
replication's randomness depends only on ``(master_seed, index)`` and never
on how blocks are spread over workers. Block summaries (count, mean, M2)
are merged in block order with Chan's pairwise update, which makes the
reduction independent of scheduling as well.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import MarketError, MarketParams, Regime, validate
from .equilibrium import posted_price_quantile
from .weitzman import pandora_search_batch, static_winner_batch

BLOCK_SIZE = 1 << 15
METRICS = ("consumer_surplus", "firm_profit", "purchase", "visits", "transaction_price")


def block_generator(master_seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(master_seed), counter=[0, int(block), 0, 0]))


@dataclass(frozen=True)
class Moments:
    count: int
    mean: float
    m2: float

    @classmethod
    def of(cls, x: np.ndarray) -> "Moments":
        if x.size == 0:
            return cls(0, 0.0, 0.0)
        mean = float(x.mean())
        # one correction pass; constant samples then give their exact value
        mean += float((x - mean).mean())
        return cls(int(x.size), mean, float(np.sum((x - mean) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def se(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1)) / math.sqrt(self.count)


@dataclass(frozen=True)
class MarketStats:
    """Means and standard errors of the simulated per-replication outcomes.

    ``firm_profit`` averages revenue over the ``n`` symmetric firms within
    each replication. ``transaction_price`` is conditional on a purchase.
    """

    params: MarketParams
    regime: Regime
    replications: int
    master_seed: int
    consumer_surplus: float
    consumer_surplus_se: float
    firm_profit: float
    firm_profit_se: float
    purchase: float
    purchase_se: float
    visits: float
    visits_se: float
    transaction_price: float
    transaction_price_se: float
    static_mismatches: int = 0

    def to_record(self) -> dict:
        rec = {
            "n": self.params.n,
            "mu": self.params.mu,
            "c": self.params.c,
            "regime": self.regime.value,
            "replications": self.replications,
            "master_seed": self.master_seed,
        }
        for name in METRICS:
            rec[name] = getattr(self, name)
            rec[name + "_se"] = getattr(self, name + "_se")
        rec["static_mismatches"] = self.static_mismatches
        return rec


def simulate_block(params: MarketParams, regime: Regime, master_seed: int, block: int, size: int):
    """Play ``size`` independent markets; returns per-replication outcome arrays."""
    n, mu, c = params.n, params.mu, params.c
    rng = block_generator(master_seed, block)
    price_u = rng.random((size, n))
    match_u = rng.random((size, n))
    if regime is Regime.POSTED:
        prices = posted_price_quantile(params, price_u)
        posteriors = (match_u < mu).astype(float)
        reservations = params.u_high - prices
    else:
        prices = np.zeros((size, n))
        posteriors = np.full((size, n), mu)
        reservations = np.full((size, n), params.u_low)
    nets = posteriors - prices
    purchase, visits, payoff, revenue = pandora_search_batch(reservations, nets, c, prices)
    effective = np.minimum(nets, reservations)
    mismatches = int(np.count_nonzero(static_winner_batch(effective) != purchase))
    return {
        "consumer_surplus": payoff,
        "firm_profit": revenue / n,
        "purchase": (purchase >= 0).astype(float),
        "visits": visits.astype(float),
        "transaction_price": revenue[purchase >= 0],
        "prices": prices,
        "mismatches": mismatches,
    }


def _summarise_block(args):
    params, regime, master_seed, block, size = args
    out = simulate_block(params, regime, master_seed, block, size)
    return {name: Moments.of(out[name]) for name in METRICS}, out["mismatches"]


def _blocks(replications: int):
    full, rest = divmod(replications, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def simulate_market(
    params: MarketParams,
    regime,
    replications: int,
    master_seed: int = 0,
    workers: int = 1,
) -> MarketStats:
    """Estimate welfare, profit, purchase rate and search length by simulation."""
    params = validate(params)
    regime = Regime.parse(regime)
    if replications < 1:
        raise MarketError("replications must be at least 1")
    jobs = [(params, regime, master_seed, b, size) for b, size in _blocks(replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_summarise_block, jobs))
    else:
        results = [_summarise_block(job) for job in jobs]
    totals = {name: Moments(0, 0.0, 0.0) for name in METRICS}
    mismatches = 0
    for moments, miss in results:
        for name in METRICS:
            totals[name] = totals[name].merge(moments[name])
        mismatches += miss
    fields = {}
    for name in METRICS:
        fields[name] = totals[name].mean
        fields[name + "_se"] = totals[name].se
    return MarketStats(params, regime, replications, int(master_seed), static_mismatches=mismatches, **fields)


def sample_posted_prices(params: MarketParams, size: int, master_seed: int = 0) -> np.ndarray:
    """Equilibrium prices as drawn inside the simulation (first ``size`` draws, row-major)."""
    params = validate(params)
    per_firm = math.ceil(size / params.n)
    chunks = []
    for b, block_size in _blocks(per_firm):
        chunks.append(simulate_block(params, Regime.POSTED, master_seed, b, block_size)["prices"].ravel())
    return np.concatenate(chunks)[:size]
