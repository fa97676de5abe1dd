"""Market primitives and finite-support distributions.

Every other module works with a :class:`MarketParams` triple ``(n, mu, c)``
and with :class:`DiscreteDistribution` objects, which represent both
distributions over posterior match values and effective-value lotteries.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

ATOM_TOL = 1e-12


class MarketError(ValueError):
    """Base class for invalid inputs to the market model."""


class OutOfRange(MarketError):
    def __init__(self, field_name: str, value, bound: str):
        self.field = field_name
        self.value = value
        super().__init__(f"{field_name}={value!r} violates {bound}")


class DegenerateN(MarketError):
    pass


class InvalidSupport(MarketError):
    pass


class Regime(enum.Enum):
    HIDDEN = "hidden"
    POSTED = "posted"

    @classmethod
    def parse(cls, value: Union[str, "Regime"]) -> "Regime":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise MarketError(f"unknown regime {value!r}; expected 'hidden' or 'posted'") from None


@dataclass(frozen=True)
class MarketParams:
    """Firm count ``n``, prior match probability ``mu`` and search cost ``c``."""

    n: int
    mu: float
    c: float

    @property
    def u_low(self) -> float:
        """Reservation value at zero price under no information."""
        return self.mu - self.c

    @property
    def u_high(self) -> float:
        """Reservation value at zero price under full information."""
        return (self.mu - self.c) / self.mu

    @property
    def price_support(self) -> tuple[float, float]:
        """Support of the posted-information equilibrium price distribution."""
        return (1.0 - self.mu) ** (self.n - 1) * self.u_high, self.u_high


def validate(params: MarketParams) -> MarketParams:
    """Check parameter ranges and return ``params`` unchanged.

    Raises :class:`DegenerateN` when ``n < 2`` and :class:`OutOfRange`
    naming the offending field for any other violated bound.
    """
    n, mu, c = params.n, params.mu, params.c
    if isinstance(n, bool) or int(n) != n:
        raise OutOfRange("n", n, "n must be an integer")
    if n < 2:
        raise DegenerateN(f"n={n}: at least two firms are required")
    if not np.isfinite(mu) or not 0.0 < mu < 1.0:
        raise OutOfRange("mu", mu, "0 < mu < 1")
    if not np.isfinite(c) or c < 0.0:
        raise OutOfRange("c", c, "c >= 0")
    if c >= mu:
        raise OutOfRange("c", c, f"c < mu = {mu}")
    if not isinstance(n, int):
        params = MarketParams(int(n), float(mu), float(c))
    return params


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-support distribution with strictly increasing values.

    Build instances through :meth:`from_atoms`, which sorts, merges atoms
    closer than ``ATOM_TOL`` and normalises rounding drift in the weights.
    """

    values: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_atoms(cls, values: Iterable[float], weights: Iterable[float]) -> "DiscreteDistribution":
        v = np.asarray(list(values), dtype=float)
        w = np.asarray(list(weights), dtype=float)
        if v.shape != w.shape or v.ndim != 1 or v.size == 0:
            raise InvalidSupport("values and weights must be non-empty 1-d sequences of equal length")
        if np.any(w < -ATOM_TOL) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(v)):
            raise InvalidSupport("weights must be finite and nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise InvalidSupport(f"weights sum to {total}, not 1")
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        keep_v, keep_w = [v[0]], [w[0]]
        for x, p in zip(v[1:], w[1:]):
            if x - keep_v[-1] < ATOM_TOL:
                keep_w[-1] += p
            else:
                keep_v.append(x)
                keep_w.append(p)
        v = np.array(keep_v)
        w = np.array(keep_w)
        mask = w > 0.0
        v, w = v[mask], w[mask]
        w = w / w.sum()
        v.setflags(write=False)
        w.setflags(write=False)
        return cls(v, w)

    @classmethod
    def degenerate(cls, value: float) -> "DiscreteDistribution":
        return cls.from_atoms([value], [1.0])

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        if len(self) != len(other):
            return False
        return bool(
            np.allclose(self.values, other.values, rtol=0, atol=ATOM_TOL)
            and np.allclose(self.weights, other.weights, rtol=0, atol=ATOM_TOL)
        )

    __hash__ = None

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.weights.tolist()))

    def mean(self) -> float:
        return float(np.dot(self.values, self.weights))

    def cdf(self, x):
        """Right-continuous CDF, vectorised over ``x``."""
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(self.values, x, side="right")
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, u):
        """Generalised inverse ``inf{x : cdf(x) >= u}``; always returns an atom."""
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, np.asarray(u, dtype=float) - ATOM_TOL, side="left")
        out = self.values[np.clip(idx, 0, len(self) - 1)]
        return float(out) if np.ndim(out) == 0 else out

    def expect(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(np.asarray(fn(self.values), dtype=float), self.weights))

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "DiscreteDistribution":
        """Push the distribution forward through ``fn`` (atoms may merge)."""
        return DiscreteDistribution.from_atoms(np.asarray(fn(self.values), dtype=float), self.weights)

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(rng.random(size))

    def is_bayes_plausible(self, mu: float, tol: float = ATOM_TOL) -> bool:
        return (
            self.values[0] >= -tol
            and self.values[-1] <= 1.0 + tol
            and abs(self.mean() - mu) <= tol
        )


def full_info(mu: float) -> DiscreteDistribution:
    """Fully revealing signal: posteriors 0 and 1."""
    return DiscreteDistribution.from_atoms([0.0, 1.0], [1.0 - mu, mu])


def no_info(mu: float) -> DiscreteDistribution:
    return DiscreteDistribution.degenerate(mu)


def make_binary_posterior(a: float, b: float, mu: float) -> DiscreteDistribution:
    """Two-point Bayes-plausible distribution over posteriors ``{a, b}``."""
    if not 0.0 <= a < mu:
        raise InvalidSupport(f"low posterior a={a} must satisfy 0 <= a < mu={mu}")
    if not mu < b <= 1.0:
        raise InvalidSupport(f"high posterior b={b} must satisfy mu={mu} < b <= 1")
    span = b - a
    return DiscreteDistribution.from_atoms([a, b], [(b - mu) / span, (mu - a) / span])


@dataclass(frozen=True)
class PostedPriceDistribution:
    """Descriptor for the mixed equilibrium price of the posted regime.

    The distribution functions themselves live in :mod:`pandora_market.equilibrium`.
    """

    params: MarketParams

    @property
    def support(self) -> tuple[float, float]:
        return self.params.price_support


PricePolicy = Union[float, PostedPriceDistribution]


@dataclass(frozen=True)
class FirmStrategy:
    """A firm's price policy paired with its signal.

    Both equilibria use the same signal at every price on the support, so
    ``signal`` is stored once; :meth:`signal_at` is the price-indexed view.
    """

    regime: Regime
    price_policy: PricePolicy
    signal: DiscreteDistribution
    mu: float = field(repr=False, default=float("nan"))

    def __post_init__(self):
        if isinstance(self.price_policy, (int, float)) and self.price_policy < 0:
            raise OutOfRange("price", self.price_policy, "price >= 0")
        if not np.isnan(self.mu) and not self.signal.is_bayes_plausible(self.mu):
            raise InvalidSupport("signal is not Bayes-plausible")

    @property
    def is_pure_price(self) -> bool:
        return not isinstance(self.price_policy, PostedPriceDistribution)

    def signal_at(self, price: Optional[float] = None) -> DiscreteDistribution:
        return self.signal
