"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import itertools
import time

import mpmath
import numpy as np
import pytest
from scipy import stats

from pandora_market.cli import render
from pandora_market.core import MarketParams, full_info, make_binary_posterior, no_info
from pandora_market.equilibrium import (
    consumer_welfare,
    log_welfare_increment,
    posted_equilibrium_profit,
    posted_price_cdf,
    posted_price_quantile,
    posting_threshold,
)
from pandora_market.montecarlo import sample_posted_prices, simulate_market
from pandora_market.verify import (
    best_deviation_at_price,
    best_deviation_search,
    check_majorization,
    demand_curve,
    hidden_deviation_check,
)
from pandora_market.weitzman import pandora_search, reservation_value, static_winner

GRID = [MarketParams(n, mu, f * mu) for n, mu, f in itertools.product((2, 3, 5, 10), (0.2, 0.5, 0.8), (0.0, 0.5, 0.9))]
KS_CRIT_1PCT = 1.63


@pytest.fixture
def report(capsys):
    def _report(tag, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {tag}: {detail} ({elapsed:.2f} s)")
        assert ok, f"{tag}: {detail}"

    return _report


def test_ac1_reservation_closed_forms(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        mu = rng.uniform(0.01, 0.99)
        c = rng.uniform(0, mu)
        p = rng.uniform(0, 1)
        worst = max(
            worst,
            abs(reservation_value(full_info(mu), p, c) - ((mu - c) / mu - p)),
            abs(reservation_value(no_info(mu), p, c) - (mu - c - p)),
        )
    elapsed = time.perf_counter() - t0
    report("AC1 reservation closed forms", worst <= 1e-10 and elapsed < 1, f"max error {worst:.2e} over 1000 draws", elapsed)


def _market(rng):
    n = int(rng.integers(1, 6))
    mu = rng.uniform(0.05, 0.95)
    c = rng.uniform(0, mu)
    U, nets = [], []
    for _ in range(n):
        # coarse grids make exact ties between firms common
        a = np.round(rng.uniform(0, mu), 2) if rng.random() < 0.5 else rng.uniform(0, mu)
        b = mu + (1 - mu) * rng.choice([0.5, 1.0]) if rng.random() < 0.5 else rng.uniform(mu, 1)
        a = min(a, mu * (1 - 1e-9))
        F = make_binary_posterior(a, b, mu)
        p = np.round(rng.uniform(0, 1), 1)
        U.append(reservation_value(F, p, c))
        nets.append(F.sample(rng) - p)
    return np.array(U), np.array(nets), c


def test_ac2_pandora_equals_static(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    agree, ties = 0, 0
    total = 100_000
    for _ in range(total):
        U, nets, c = _market(rng)
        W = np.minimum(nets, U)
        ties += int(np.sum(W == W.max()) > 1)
        agree += pandora_search(U, nets, c).purchase == static_winner(W)
    elapsed = time.perf_counter() - t0
    ok = agree == total and elapsed < 30
    report("AC2 Pandora's rule equals argmax of effective values", ok, f"{agree}/{total} agree, {ties} tied markets", elapsed)


def test_ac3_price_cdf(report):
    t0 = time.perf_counter()
    worst_end, worst_id, worst_ks = 0.0, 0.0, 0.0
    for prm in (MarketParams(2, 0.5, 0.1), MarketParams(5, 0.2, 0.1), MarketParams(10, 0.8, 0.0)):
        lo, hi = prm.price_support
        worst_end = max(worst_end, abs(posted_price_cdf(prm, lo)), abs(posted_price_cdf(prm, hi) - 1))
        p = np.linspace(lo, hi, 1000)
        worst_id = max(worst_id, np.max(np.abs(posted_price_quantile(prm, posted_price_cdf(prm, p)) - p)))
        prices = sample_posted_prices(prm, 10**6, master_seed=42)
        ks = stats.kstest(prices, lambda x: posted_price_cdf(prm, x)).statistic
        worst_ks = max(worst_ks, ks * np.sqrt(prices.size))
    elapsed = time.perf_counter() - t0
    ok = worst_end <= 1e-12 and worst_id <= 1e-12 and worst_ks < KS_CRIT_1PCT
    detail = f"endpoint error {worst_end:.1e}, quantile-cdf error {worst_id:.1e}, sqrt(N)*KS {worst_ks:.3f} < {KS_CRIT_1PCT}"
    report("AC3 equilibrium price distribution", ok, detail, elapsed)


def test_ac4_equal_profit_line(report):
    t0 = time.perf_counter()
    worst = 0.0
    for prm in GRID:
        D = demand_curve(prm)
        lo, hi = prm.price_support
        p = np.linspace(lo, hi, 1000)
        worst = max(worst, np.max(np.abs(p * prm.mu * D(prm.u_high - p) - posted_equilibrium_profit(prm))))
    elapsed = time.perf_counter() - t0
    report("AC4 equal-profit line", worst <= 1e-10, f"max deviation {worst:.2e} over {len(GRID)} markets", elapsed)


def test_ac5_deviation_proofness(report):
    t0 = time.perf_counter()
    worst_margin, slowest, failures = -np.inf, 0.0, []
    for prm in GRID:
        s = time.perf_counter()
        rep = best_deviation_search(prm, 200, 200, include_ternary=True)
        slowest = max(slowest, time.perf_counter() - s)
        worst_margin = max(worst_margin, rep.margin)
        if rep.margin > 1e-6:
            failures.append((prm, rep.best_kind, rep.margin))
    elapsed = time.perf_counter() - t0
    ok = not failures and slowest < 120
    detail = f"worst margin {worst_margin:.2e}, slowest point {slowest:.2f} s, failures {failures}"
    report("AC5 no profitable deviation", ok, detail, elapsed)


def test_ac6_majorization(report):
    t0 = time.perf_counter()
    worst_touch, worst_gap, strict = 0.0, np.inf, True
    worst_below = -np.inf
    for prm in GRID:
        lo, hi = prm.price_support
        for p in np.linspace(lo, hi, 100):
            chk = check_majorization(prm, float(p), grid_size=10_000)
            worst_touch = max(worst_touch, max(abs(g) for g in chk.touch_gaps))
            worst_gap = min(worst_gap, chk.min_gap)
            strict &= chk.strict_elsewhere()
        bound = prm.u_high * prm.mu * (1 - prm.mu) ** (prm.n - 1)
        for p in np.linspace(0, lo, 101)[1:-1].tolist() + [lo * (1 - 1e-9)]:
            best = best_deviation_at_price(prm, p, 200, include_ternary=True)
            worst_below = max(worst_below, best.profit - bound)
    elapsed = time.perf_counter() - t0
    ok = worst_touch <= 1e-10 and worst_gap >= -1e-12 and strict and worst_below <= 1e-6
    detail = (
        f"touch gap {worst_touch:.1e}, min gap {worst_gap:.1e}, strict elsewhere {strict}, "
        f"below-support excess {worst_below:.2e}"
    )
    report("AC6 majorization", ok, detail, elapsed)


def test_ac7_welfare(report):
    t0 = time.perf_counter()
    checks = {}
    two = [abs(consumer_welfare(MarketParams(2, mu, f * mu), "posted") - mu * (mu - f * mu)) for mu in np.linspace(0.05, 0.95, 19) for f in (0.0, 0.3, 0.9)]
    checks["u(2)"] = max(two) <= 4e-16
    # increments reach 1e-1000 at mu = 0.9, far below double precision: compare at 1200 digits
    mpmath.mp.dps = 1200
    inc_ok = True
    for mu, c in ((0.1, 0.05), (0.5, 0.1), (0.9, 0.3)):
        m, cc = mpmath.mpf(mu), mpmath.mpf(c)
        u = [(m - cc) / m * (1 - n * m * (1 - m) ** (n - 1) - (1 - m) ** n) for n in range(2, 1001)]
        inc_ok &= all(b > a for a, b in zip(u, u[1:]))
        inc_ok &= all(np.isfinite(log_welfare_increment(MarketParams(n, mu, c))) for n in range(2, 1000))
    mpmath.mp.dps = 15
    checks["increasing"] = inc_ok
    lim = [abs(consumer_welfare(MarketParams(400, mu, f * mu), "posted") - (1 - f)) for mu in np.linspace(0.1, 0.95, 18) for f in (0.0, 0.5, 0.9)]
    checks["n=400"] = max(lim) < 1e-6
    checks["n*"] = posting_threshold(0.5) == 4 and all(posting_threshold(0.5, c) == 4 for c in np.linspace(0, 0.49, 50))
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items()) + f"; u(2) err {max(two):.1e}, n=400 gap {max(lim):.1e}"
    report("AC7 posted-regime welfare", all(checks.values()), detail, elapsed)


def test_ac8_hidden_regime(report):
    t0 = time.perf_counter()
    worst_dev = 0.0
    for prm in GRID:
        for p in np.linspace(0, 1, 101):
            worst_dev = max(worst_dev, hidden_deviation_check(prm, float(p)))
    sims = [simulate_market(prm, "hidden", 100_000, master_seed=42) for prm in (MarketParams(2, 0.5, 0.1), MarketParams(10, 0.2, 0.15))]
    sim_ok = all(
        s.consumer_surplus == pytest.approx(s.params.mu - s.params.c, abs=1e-15)
        and s.consumer_surplus_se == 0.0
        and s.visits == 1.0
        and s.visits_se == 0.0
        for s in sims
    )
    elapsed = time.perf_counter() - t0
    report("AC8 hidden regime", worst_dev == 0.0 and sim_ok, f"max deviation gain {worst_dev}, simulation degenerate {sim_ok}", elapsed)


@pytest.mark.parametrize("n", [2, 5, 10])
def test_ac9_monte_carlo(report, n):
    prm = MarketParams(n, 0.5, 0.1)
    t0 = time.perf_counter()
    s = simulate_market(prm, "posted", 10**6, master_seed=42)
    elapsed = time.perf_counter() - t0
    z = {
        "profit": (s.firm_profit - posted_equilibrium_profit(prm)) / s.firm_profit_se,
        "surplus": (s.consumer_surplus - consumer_welfare(prm, "posted")) / s.consumer_surplus_se,
        "purchase": (s.purchase - (1 - (1 - prm.mu) ** n)) / s.purchase_se,
    }
    texts = {render("simulate", [s.to_record()], "csv")}
    for workers in (2, 4):
        texts.add(render("simulate", [simulate_market(prm, "posted", 10**6, master_seed=42, workers=workers).to_record()], "csv"))
    ok = all(abs(v) <= 3 for v in z.values()) and len(texts) == 1 and elapsed < 60
    detail = ", ".join(f"z_{k} {v:+.2f}" for k, v in z.items()) + f", identical across workers {len(texts) == 1}"
    report(f"AC9 Monte-Carlo agreement n={n}", ok, detail, elapsed)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
