"""Command-line front end: ``pandora-market {equilibrium,verify,welfare,simulate}``.

Settings are resolved as command-line flag, then ``--config`` file
(``key=value`` lines, keys named like the long flags with underscores),
then built-in default. The seed falls back to ``PANDORA_MARKET_SEED``.
Exit codes: 0 success, 1 certification failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import MarketError, MarketParams, Regime, validate
from .equilibrium import (
    consumer_welfare,
    equilibrium,
    posted_equilibrium_profit,
    posted_price_cdf,
    posting_threshold,
)
from .montecarlo import simulate_market
from .verify import best_deviation_search, check_majorization

SCHEMA_VERSION = 1
SEED_ENV = "PANDORA_MARKET_SEED"

DEFAULTS = {
    "n": 2,
    "mu": 0.5,
    "c": 0.1,
    "regime": "posted",
    "seed": 0,
    "reps": 100_000,
    "workers": 1,
    "price_grid": 200,
    "support_grid": 200,
    "ternary_grid": 40,
    "include_ternary": False,
    "tolerance": 1e-6,
    "out": None,
    "format": "csv",
    "n_min": 2,
    "n_max": 10,
    "cdf_points": 11,
    "majorization_prices": 25,
}
INT_KEYS = {"n", "seed", "reps", "workers", "price_grid", "support_grid", "ternary_grid", "n_min", "n_max", "cdf_points", "majorization_prices"}
FLOAT_KEYS = {"mu", "c", "tolerance"}
BOOL_KEYS = {"include_ternary"}


@dataclass
class RunConfig:
    command: str
    params: MarketParams
    regime: Regime
    seed: int
    reps: int
    workers: int
    price_grid: int
    support_grid: int
    ternary_grid: int
    include_ternary: bool
    tolerance: float
    out: Optional[str]
    format: str
    n_min: int
    n_max: int
    cdf_points: int
    majorization_prices: int
    benchmark_profit: Optional[float] = None


def read_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise MarketError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise MarketError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise MarketError(f"{key}={value!r} is not a number") from None
    if key in BOOL_KEYS:
        if isinstance(value, bool):
            return value
        return str(value).lower() in {"1", "true", "yes", "on"}
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = _coerce(key, flag)
        elif key in file_values:
            merged[key] = _coerce(key, file_values[key])
        elif key == "seed" and os.environ.get(SEED_ENV):
            merged[key] = _coerce(key, os.environ[SEED_ENV])
        else:
            merged[key] = default
    if merged["format"] not in {"csv", "json"}:
        raise MarketError(f"format must be csv or json, got {merged['format']!r}")
    params = validate(MarketParams(merged["n"], merged["mu"], merged["c"]))
    return RunConfig(
        command=args.command,
        params=params,
        regime=Regime.parse(merged["regime"]),
        seed=merged["seed"],
        reps=merged["reps"],
        workers=merged["workers"],
        price_grid=merged["price_grid"],
        support_grid=merged["support_grid"],
        ternary_grid=merged["ternary_grid"],
        include_ternary=merged["include_ternary"],
        tolerance=merged["tolerance"],
        out=merged["out"],
        format=merged["format"],
        n_min=merged["n_min"],
        n_max=merged["n_max"],
        cdf_points=merged["cdf_points"],
        majorization_prices=merged["majorization_prices"],
        benchmark_profit=getattr(args, "benchmark_profit", None),
    )


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(format(value, ".12g")) if math.isfinite(value) else str(value)
    return value


def render(command: str, rows: list[dict], fmt_name: str) -> str:
    columns = list(rows[0].keys())
    if fmt_name == "json":
        doc = {
            "schema": f"pandora-market/{command}/v{SCHEMA_VERSION}",
            "columns": columns,
            "rows": [{k: _json_value(r[k]) for k in columns} for r in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema: pandora-market/{command}/v{SCHEMA_VERSION}\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r[k]) for k in columns) + "\n")
    return buf.getvalue()


def emit(cfg: RunConfig, rows: list[dict]) -> None:
    text = render(cfg.command, rows, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_equilibrium(cfg: RunConfig) -> int:
    prm = cfg.params
    profile = equilibrium(prm, cfg.regime)
    base = {
        "regime": cfg.regime.value,
        "n": prm.n,
        "mu": prm.mu,
        "c": prm.c,
    }
    if cfg.regime is Regime.HIDDEN:
        lo = hi = 0.0
        prices = [0.0]
        cdf = [1.0]
        signal = "none"
    else:
        lo, hi = prm.price_support
        prices = np.linspace(lo, hi, cfg.cdf_points)
        cdf = posted_price_cdf(prm, prices)
        signal = "full"
    rows = []
    for p, phi in zip(prices, cdf):
        rows.append(
            dict(
                base,
                signal=signal,
                price_low=lo,
                price_high=hi,
                firm_profit=profile.firm_profit,
                consumer_welfare=profile.consumer_welfare,
                price=float(p),
                price_cdf=float(phi),
            )
        )
    emit(cfg, rows)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    prm = cfg.params
    lo, hi = prm.price_support
    worst_touch = 0.0
    worst_gap = math.inf
    strict = True
    for p in np.linspace(lo, hi, cfg.majorization_prices):
        check = check_majorization(prm, float(p))
        worst_touch = max(worst_touch, max(abs(g) for g in check.touch_gaps))
        worst_gap = min(worst_gap, check.min_gap)
        strict &= check.strict_elsewhere()
    majorized = worst_touch <= 1e-10 and worst_gap >= -1e-12 and strict
    report = best_deviation_search(
        prm,
        price_grid_size=cfg.price_grid,
        support_grid_size=cfg.support_grid,
        include_ternary=cfg.include_ternary,
        ternary_grid_size=cfg.ternary_grid,
        tolerance=cfg.tolerance,
        workers=cfg.workers,
        equilibrium_profit=cfg.benchmark_profit,
    )
    row = {"n": prm.n, "mu": prm.mu, "c": prm.c}
    row.update(report.to_record())
    row.update(majorization_min_gap=worst_gap, majorization_touch_gap=worst_touch, majorized=majorized)
    emit(cfg, [row])
    if not (report.certified and majorized):
        print(
            f"certification failed: deviation {report.best_kind} at price {report.best_price:.12g} "
            f"with support {report.best_support} earns {report.best_profit:.12g} "
            f"vs equilibrium {report.equilibrium_profit:.12g} (margin {report.margin:.3g}); "
            f"majorized={majorized}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_welfare(cfg: RunConfig) -> int:
    prm = cfg.params
    if cfg.n_min < 2 or cfg.n_max < cfg.n_min:
        raise MarketError(f"invalid n range {cfg.n_min}..{cfg.n_max}")
    threshold = posting_threshold(prm.mu)
    rows = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        p = MarketParams(n, prm.mu, prm.c)
        hidden = consumer_welfare(p, Regime.HIDDEN)
        posted = consumer_welfare(p, Regime.POSTED)
        rows.append(
            {
                "n": n,
                "mu": prm.mu,
                "c": prm.c,
                "hidden_welfare": hidden,
                "posted_welfare": posted,
                "posted_profit": posted_equilibrium_profit(p),
                "posting_benefits_consumer": n >= threshold,
                "posting_threshold": threshold,
            }
        )
    emit(cfg, rows)
    return 0


def _z(estimate: float, target: float, se: float) -> float:
    diff = estimate - target
    if se > 0:
        return diff / se
    return 0.0 if diff == 0 else math.copysign(math.inf, diff)


def cmd_simulate(cfg: RunConfig) -> int:
    prm = cfg.params
    stats = simulate_market(prm, cfg.regime, cfg.reps, cfg.seed, cfg.workers)
    if cfg.regime is Regime.POSTED:
        targets = {
            "firm_profit": posted_equilibrium_profit(prm),
            "consumer_surplus": consumer_welfare(prm, Regime.POSTED),
            "purchase": 1.0 - (1.0 - prm.mu) ** prm.n,
        }
    else:
        targets = {"firm_profit": 0.0, "consumer_surplus": prm.mu - prm.c, "purchase": 1.0}
    row = stats.to_record()
    for name, target in targets.items():
        row[f"analytic_{name}"] = target
        row[f"z_{name}"] = _z(getattr(stats, name), target, getattr(stats, name + "_se"))
    emit(cfg, [row])
    return 0


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "verify": cmd_verify,
    "welfare": cmd_welfare,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override its entries")
    common.add_argument("--n", type=int)
    common.add_argument("--mu", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--regime", choices=["hidden", "posted"])
    common.add_argument("--seed", type=int, help=f"default: ${SEED_ENV} or 0")
    common.add_argument("--reps", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--price-grid", dest="price_grid", type=int)
    common.add_argument("--support-grid", dest="support_grid", type=int)
    common.add_argument("--ternary-grid", dest="ternary_grid", type=int)
    common.add_argument("--include-ternary", dest="include_ternary", action="store_const", const=True)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--n-min", dest="n_min", type=int)
    common.add_argument("--n-max", dest="n_max", type=int)
    common.add_argument("--cdf-points", dest="cdf_points", type=int)
    common.add_argument("--majorization-prices", dest="majorization_prices", type=int)
    # negative-control hook: certify against a different profit benchmark
    common.add_argument("--benchmark-profit", dest="benchmark_profit", type=float, help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="pandora-market", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibrium", parents=[common], help="analytic equilibrium objects")
    sub.add_parser("verify", parents=[common], help="majorization checks and deviation search")
    sub.add_parser("welfare", parents=[common], help="welfare and profit sweep over n")
    sub.add_parser("simulate", parents=[common], help="Monte-Carlo market simulation")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except MarketError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
