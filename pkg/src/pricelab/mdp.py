"""MDP vocabulary: action spaces, reward functions, and state construction.

The observation vector has a fixed 12-feature layout built from four blocks
(indices are part of the demonstration-file contract):

======  =======================================================
index   feature
======  =======================================================
0       last price, normalized to [0, 1] over the price bounds
1       discount rate versus the price ceiling (1 - price/p_max)
2       promotion indicator (1.0 while a demand shock is active)
3       last sales volume
4       last revenue
5       trailing-window mean sales volume
6       trailing-window mean revenue
7       last unique visitors (uv)
8       trailing-window mean uv
9       last realized conversion (sales / uv)
10      group-mates' mean normalized price
11      group-mates' mean realized conversion
======  =======================================================

Features 3-9 are raw counts/currency; training consumes them through a
min-max :class:`FeatureNormalizer` fitted on the pre-training window of the
demonstration log and clipped afterwards, so offline and live phases see the
same scaling. The competitiveness block (10-11) is a synthetic stand-in
built from group-mates' observable prices and conversions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .market import PeriodObservables

STATE_DIM = 12
TRAILING_WINDOW = 7

RCR = "rcr"
DRCR = "drcr"
PROFIT_CR = "profit_cr"
REWARD_KINDS = (RCR, DRCR, PROFIT_CR)


@dataclass(frozen=True)
class ActionSpace:
    """Price bounds plus bucket count (None = continuous prices).

    With ``discount_grid=True`` the K buckets are read as discount levels:
    bucket k prices at ``p_max * k / (K + 1)`` (k=5 of 9 -> 50% of p_max),
    the convention used for markdown seasons.
    """

    p_min: float
    p_max: float
    n_buckets: int | None = None
    discount_grid: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.p_min < self.p_max:
            raise ValueError("need 0 < p_min < p_max")
        if self.n_buckets is not None and self.n_buckets < 2:
            raise ValueError("discrete spaces need n_buckets >= 2")
        if self.discount_grid:
            if self.n_buckets is None:
                raise ValueError("discount_grid requires a discrete space")
            if self.p_max * 1 / (self.n_buckets + 1) < self.p_min:
                raise ValueError("discount_grid bucket 1 prices below p_min")

    @property
    def is_discrete(self) -> bool:
        return self.n_buckets is not None

    @property
    def width(self) -> float:
        return self.p_max - self.p_min

    def contains(self, price: float) -> bool:
        return self.p_min <= price <= self.p_max


def bucket_index(space: ActionSpace, price: float) -> int:
    """Bucket of ``price``; p_max maps to the top bucket K."""
    if not space.is_discrete:
        raise ValueError("bucket_index needs a discrete space")
    if not space.contains(price):
        raise ValueError(f"price {price} outside [{space.p_min}, {space.p_max}]")
    k_max = space.n_buckets
    if space.discount_grid:
        k = int(round((k_max + 1) * price / space.p_max))
    else:
        k = 1 + int(math.floor(k_max * (price - space.p_min) / space.width))
    return min(max(k, 1), k_max)


def bucket_price(space: ActionSpace, k: int) -> float:
    """Representative price of bucket k (midpoint of its half-open interval)."""
    if not space.is_discrete:
        raise ValueError("bucket_price needs a discrete space")
    if not 1 <= k <= space.n_buckets:
        raise ValueError(f"bucket {k} outside [1, {space.n_buckets}]")
    if space.discount_grid:
        return space.p_max * k / (space.n_buckets + 1)
    return space.p_min + (k - 0.5) * space.width / space.n_buckets


@dataclass(frozen=True)
class PricingAction:
    """A chosen price; discrete policies also carry the bucket index."""

    price: float
    bucket: int | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.price):
            raise ValueError("price must be finite")


def action_in_space(action: PricingAction, space: ActionSpace) -> bool:
    if not space.contains(action.price):
        return False
    if space.is_discrete:
        return action.bucket is not None and 1 <= action.bucket <= space.n_buckets
    return action.bucket is None


@dataclass(frozen=True)
class MarketState:
    """Fixed-dimension feature vector plus the period it describes."""

    features: np.ndarray
    period_index: int

    def __post_init__(self) -> None:
        if self.features.shape != (STATE_DIM,):
            raise ValueError(f"expected {STATE_DIM} features, got {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("state features must be finite")


@dataclass(frozen=True)
class Transition:
    """One (s, a, r, s', done) record; the unit of replay and evaluation."""

    state: np.ndarray
    action: PricingAction
    reward: float
    next_state: np.ndarray
    done: bool

    def __post_init__(self) -> None:
        if not math.isfinite(self.reward):
            raise ValueError("reward must be finite")
        if self.state.shape != self.next_state.shape:
            raise ValueError("state and next_state dimensions differ")


@dataclass(frozen=True)
class RewardSpec:
    """Which per-period reward to emit: rate level, rate difference, or profit rate."""

    kind: str
    tau: int = 1

    def __post_init__(self) -> None:
        if self.kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind {self.kind!r}")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")

    def label(self) -> str:
        return f"{self.kind}({self.tau})" if self.kind == DRCR else self.kind


class RewardTracker:
    """Accumulates per-period (revenue, uv, profit) and emits rewards.

    ``add`` returns ``None`` while a rate-difference reward is still pending
    (fewer than tau prior periods). Periods with uv = 0 yield reward 0 but
    still advance the history.
    """

    def __init__(self, spec: RewardSpec):
        self.spec = spec
        self._rates: list[float] = []
        self._profit_rates: list[float] = []

    def __len__(self) -> int:
        return len(self._rates)

    def rate(self, t: int) -> float:
        """Revenue conversion rate of period t (1-based)."""
        return self._rates[t - 1]

    def add(self, revenue: float, uv: int, profit: float = 0.0) -> float | None:
        rate = revenue / uv if uv > 0 else 0.0
        profit_rate = profit / uv if uv > 0 else 0.0
        self._rates.append(rate)
        self._profit_rates.append(profit_rate)
        t = len(self._rates)
        if uv == 0:
            return 0.0
        if self.spec.kind == RCR:
            return rate
        if self.spec.kind == PROFIT_CR:
            return profit_rate
        if t - self.spec.tau < 1:
            return None
        return rate - self._rates[t - self.spec.tau - 1]

    def add_observables(self, obs: PeriodObservables) -> float | None:
        return self.add(obs.revenue, obs.uv, obs.profit)


@dataclass(frozen=True)
class GroupContext:
    """Competitiveness features observed from group-mates in the same period."""

    mean_price_norm: float
    mean_conversion: float


def build_state(
    history: Sequence[PeriodObservables],
    space: ActionSpace,
    group: GroupContext | None = None,
    shock_active: bool = False,
    window: int = TRAILING_WINDOW,
) -> MarketState:
    """Raw (unnormalized) state from the completed periods in ``history``."""
    if not history:
        raise ValueError("build_state needs at least one completed period")
    last = history[-1]
    tail = history[-window:]
    price_norm = (last.price_paid - space.p_min) / space.width
    if group is None:
        group = GroupContext(mean_price_norm=price_norm, mean_conversion=last.conversion)
    features = np.array(
        [
            price_norm,
            1.0 - last.price_paid / space.p_max,
            1.0 if shock_active else 0.0,
            float(last.sales_volume),
            last.revenue,
            sum(o.sales_volume for o in tail) / len(tail),
            sum(o.revenue for o in tail) / len(tail),
            float(last.uv),
            sum(o.uv for o in tail) / len(tail),
            last.conversion,
            group.mean_price_norm,
            group.mean_conversion,
        ],
        dtype=np.float64,
    )
    return MarketState(features=features, period_index=last.period_index)


class FeatureNormalizer:
    """Per-feature min-max scaling with clipping outside the fitted range.

    Fit once on the pre-training window; constant features map to 0.
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        if lo.shape != hi.shape:
            raise ValueError("bound shapes differ")
        self.lo = lo.astype(np.float64)
        self.hi = hi.astype(np.float64)
        span = self.hi - self.lo
        self._span = np.where(span > 0, span, 1.0)
        self._constant = span <= 0

    @classmethod
    def fit(cls, states: Sequence[np.ndarray]) -> "FeatureNormalizer":
        if not len(states):
            raise ValueError("cannot fit normalizer on empty state set")
        stacked = np.stack(list(states))
        return cls(stacked.min(axis=0), stacked.max(axis=0))

    @classmethod
    def identity(cls, dim: int) -> "FeatureNormalizer":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, features: np.ndarray) -> np.ndarray:
        scaled = (features - self.lo) / self._span
        scaled = np.where(self._constant, 0.0, scaled)
        return np.clip(scaled, 0.0, 1.0)
