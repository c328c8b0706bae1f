"""Synthetic e-commerce market with seeded traffic and price-dependent demand.

Two product regimes are modelled:

* ``luxury`` -- stocked markdown products. Mean conversion falls steeply with
  price (logistic curve), so revenue per visitor is unimodal with a maximizer
  strictly inside the price range, and the episode ends when stock runs out.
* ``fmcg`` -- unlimited-supply goods priced daily. Mean conversion depends
  only weakly on price but oscillates on its own seasonal cycle, so revenue
  rates fluctuate largely independently of the price path.

All draws are pure functions of (profile, period, seed), via named
substreams, so simulations are reproducible and products never interact
through the RNG.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import seeds

LUXURY = "luxury"
FMCG = "fmcg"
REGIMES = (LUXURY, FMCG)

# Conversion-curve level per regime; the profile's demand_elasticity sets the
# logistic slope. Fmcg uses twice the level because its curve sits near the
# logistic midpoint (sigmoid ~ 0.5) instead of the saturated branch.
LUXURY_CR_SCALE = 0.30
FMCG_CR_SCALE = 0.50
FMCG_OSC_AMP = 0.35    # autonomous conversion oscillation, fmcg only
UV_SEASONAL_AMP = 0.20  # traffic seasonality amplitude, both regimes


@dataclass(frozen=True)
class ProductProfile:
    """Generative parameters of one SKU."""

    id: int
    regime: str
    p_min: float
    p_max: float
    unit_cost: float
    base_uv: float
    uv_volatility: float
    demand_elasticity: float
    demand_noise: float
    seasonality_period: int
    initial_stock: int  # 0 = unlimited supply (daily-pricing regime)
    group_id: int

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if not 0 < self.p_min < self.p_max:
            raise ValueError("need 0 < p_min < p_max")
        if self.unit_cost < 0:
            raise ValueError("unit_cost must be >= 0")
        if self.base_uv <= 0:
            raise ValueError("base_uv must be > 0")
        if self.uv_volatility < 0 or self.demand_noise < 0:
            raise ValueError("noise scales must be >= 0")
        if self.demand_elasticity < 0:
            raise ValueError("demand_elasticity must be >= 0")
        if self.seasonality_period < 0:
            raise ValueError("seasonality_period must be >= 0")
        if self.regime == LUXURY and self.initial_stock <= 0:
            raise ValueError("luxury products require initial_stock > 0")
        if self.regime == FMCG and self.initial_stock != 0:
            raise ValueError("fmcg products must have initial_stock = 0")

    @property
    def stocked(self) -> bool:
        return self.initial_stock > 0

    @property
    def price_range(self) -> float:
        return self.p_max - self.p_min


@dataclass(frozen=True)
class PeriodObservables:
    """Realized outcomes of one pricing period."""

    uv: int
    sales_volume: int
    revenue: float
    profit: float
    price_paid: float
    stock_remaining: int
    period_index: int

    def __post_init__(self) -> None:
        if self.uv < 0 or self.sales_volume < 0 or self.stock_remaining < 0:
            raise ValueError("counts must be >= 0")
        if self.sales_volume > self.uv:
            raise ValueError("sales_volume cannot exceed uv")

    @property
    def conversion(self) -> float:
        return self.sales_volume / self.uv if self.uv > 0 else 0.0


@dataclass
class SimClock:
    """Current period (1-based, one period = one day) and episode horizon."""

    t: int
    horizon: int

    def __post_init__(self) -> None:
        if self.horizon < 1 or self.t < 1 or self.t > self.horizon + 1:
            raise ValueError("need 1 <= t <= horizon + 1")


class EpisodeFinished(RuntimeError):
    """Raised when stepping a finished episode."""


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _price_x(profile: ProductProfile, price: float) -> float:
    if not profile.p_min <= price <= profile.p_max:
        raise ValueError(
            f"price {price} outside [{profile.p_min}, {profile.p_max}] "
            f"for product {profile.id}"
        )
    return (price - profile.p_min) / profile.price_range


def _osc_phase(group_id: int) -> float:
    # Knuth multiplicative hash so each group oscillates with its own phase.
    return 2.0 * math.pi * ((group_id * 2654435761) % 997) / 997.0


def mean_conversion(profile: ProductProfile, price: float, t: int) -> float:
    """Noise-free mean conversion rate at (price, period)."""
    x = _price_x(profile, price)
    slope = profile.demand_elasticity
    if profile.regime == LUXURY:
        cr = LUXURY_CR_SCALE * _sigmoid(-slope * (x - 0.5))
    else:
        cr = FMCG_CR_SCALE * _sigmoid(-slope * (x - 0.5))
        if profile.seasonality_period > 0:
            phase = _osc_phase(profile.group_id)
            cr *= 1.0 + FMCG_OSC_AMP * math.sin(
                2.0 * math.pi * t / profile.seasonality_period + phase
            )
    return min(max(cr, 0.0), 1.0)


def conversion_rate(
    profile: ProductProfile, price: float, t: int, seed: int, stream_tag: int = 0
) -> float:
    """Realized conversion rate in [0, 1]; deterministic in (profile, price, t, seed)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    cr = mean_conversion(profile, price, t)
    if profile.demand_noise > 0:
        rng = seeds.substream(seed, stream_tag, profile.id, t, seeds.CONVERSION)
        sigma = profile.demand_noise
        cr *= rng.lognormal(-0.5 * sigma * sigma, sigma)
    return min(max(cr, 0.0), 1.0)


def draw_uv(profile: ProductProfile, t: int, seed: int, stream_tag: int = 0) -> int:
    """Unique visitors for period t: seasonal baseline with log-normal noise."""
    if t < 1:
        raise ValueError("t must be >= 1")
    expected = profile.base_uv
    if profile.seasonality_period > 0:
        phase = _osc_phase(profile.group_id)
        expected *= 1.0 + UV_SEASONAL_AMP * math.sin(
            2.0 * math.pi * t / profile.seasonality_period + phase
        )
    if profile.uv_volatility > 0:
        rng = seeds.substream(seed, stream_tag, profile.id, t, seeds.UV)
        sigma = profile.uv_volatility
        expected *= rng.lognormal(-0.5 * sigma * sigma, sigma)
    return max(0, int(round(expected)))


@dataclass(frozen=True)
class DemandShock:
    """Bounded multiplicative demand perturbation over a period window."""

    start: int
    end: int
    scale: float

    def active(self, t: int) -> bool:
        return self.start <= t <= self.end


class MarketSim:
    """One product's market episode; step once per period with a price.

    ``demand_scale`` rescales mean conversion (used e.g. to simulate a
    lower-demand comparison year); ``stream_tag`` keeps RNG streams of
    parallel simulation phases disjoint.
    """

    def __init__(
        self,
        profile: ProductProfile,
        horizon: int,
        seed: int,
        demand_scale: float = 1.0,
        shock: DemandShock | None = None,
        stream_tag: int = 0,
    ):
        if demand_scale <= 0:
            raise ValueError("demand_scale must be > 0")
        self.profile = profile
        self.clock = SimClock(t=1, horizon=horizon)
        self.seed = seed
        self.demand_scale = demand_scale
        self.shock = shock
        self.stream_tag = stream_tag
        self.stock_remaining = profile.initial_stock
        self.done = False

    def shock_active(self, t: int) -> bool:
        return self.shock is not None and self.shock.active(t)

    def step(self, price: float) -> tuple[PeriodObservables, bool]:
        if self.done:
            raise EpisodeFinished(f"product {self.profile.id}: episode already finished")
        profile = self.profile
        t = self.clock.t
        uv = draw_uv(profile, t, self.seed, self.stream_tag)
        cr = conversion_rate(profile, price, t, self.seed, self.stream_tag)
        cr = min(cr * self.demand_scale, 1.0)
        if self.shock_active(t):
            cr = min(cr * self.shock.scale, 1.0)
        if uv > 0 and cr > 0:
            rng = seeds.substream(self.seed, self.stream_tag, profile.id, t, seeds.SALES)
            sales = int(rng.binomial(uv, cr))
        else:
            sales = 0
        if profile.stocked:
            sales = min(sales, self.stock_remaining)
            self.stock_remaining -= sales
        obs = PeriodObservables(
            uv=uv,
            sales_volume=sales,
            revenue=price * sales,
            profit=(price - profile.unit_cost) * sales,
            price_paid=price,
            stock_remaining=self.stock_remaining,
            period_index=t,
        )
        self.clock.t = t + 1
        self.done = (profile.stocked and self.stock_remaining == 0) or (
            self.clock.t > self.clock.horizon
        )
        return obs, self.done


def luxury_profile(pid: int = 1, group_id: int = 1, **overrides) -> ProductProfile:
    """Stocked markdown product with steep conversion-price coupling."""
    profile = ProductProfile(
        id=pid,
        regime=LUXURY,
        p_min=60.0,
        p_max=140.0,
        unit_cost=50.0,
        base_uv=120.0,
        uv_volatility=0.2,
        demand_elasticity=8.0,
        demand_noise=0.15,
        seasonality_period=0,
        initial_stock=600,
        group_id=group_id,
    )
    return replace(profile, **overrides) if overrides else profile


def fmcg_profile(pid: int = 1, group_id: int = 1, **overrides) -> ProductProfile:
    """Unlimited-supply daily-priced product with weak price coupling."""
    profile = ProductProfile(
        id=pid,
        regime=FMCG,
        p_min=20.0,
        p_max=40.0,
        unit_cost=15.0,
        base_uv=400.0,
        uv_volatility=0.25,
        demand_elasticity=0.15,
        demand_noise=0.2,
        seasonality_period=21,
        initial_stock=0,
        group_id=group_id,
    )
    return replace(profile, **overrides) if overrides else profile


def make_simi_groups(
    template: ProductProfile,
    n_groups: int,
    sizes: Sequence[int],
    seed: int,
    scale_range: tuple[float, float] = (0.7, 1.3),
) -> list[list[ProductProfile]]:
    """Matched product groups sharing the template's demand shape.

    Members differ from the template only in id, group_id, and base_uv, the
    latter scaled per product by a uniform factor from ``scale_range``.
    """
    if n_groups < 2:
        raise ValueError("need n_groups >= 2")
    if len(sizes) != n_groups:
        raise ValueError("sizes must have one entry per group")
    if any(s < 1 for s in sizes):
        raise ValueError("group sizes must be >= 1")
    lo, hi = scale_range
    if not 0 < lo <= hi:
        raise ValueError("scale_range must be 0 < lo <= hi")
    rng = seeds.substream(seed, seeds.GROUPS)
    groups: list[list[ProductProfile]] = []
    pid = template.id
    for g in range(n_groups):
        group_id = template.group_id + g
        members = []
        for _ in range(sizes[g]):
            factor = float(rng.uniform(lo, hi))
            members.append(
                replace(template, id=pid, group_id=group_id, base_uv=template.base_uv * factor)
            )
            pid += 1
        groups.append(members)
    return groups


PROFILE_FIELDS = (
    "id",
    "group_id",
    "regime",
    "p_min",
    "p_max",
    "unit_cost",
    "base_uv",
    "uv_volatility",
    "demand_elasticity",
    "demand_noise",
    "seasonality_period",
    "initial_stock",
)


def save_profiles(path: str | Path, profiles: Sequence[ProductProfile]) -> None:
    """Write profiles as tab-separated lines with a header (one product per line)."""
    lines = ["\t".join(PROFILE_FIELDS)]
    for p in profiles:
        lines.append(
            "\t".join(
                [
                    str(p.id),
                    str(p.group_id),
                    p.regime,
                    repr(p.p_min),
                    repr(p.p_max),
                    repr(p.unit_cost),
                    repr(p.base_uv),
                    repr(p.uv_volatility),
                    repr(p.demand_elasticity),
                    repr(p.demand_noise),
                    str(p.seasonality_period),
                    str(p.initial_stock),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_profiles(path: str | Path) -> list[ProductProfile]:
    """Read a profile file written by :func:`save_profiles`."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    lines = path.read_text().splitlines()
    if not lines or tuple(lines[0].split("\t")) != PROFILE_FIELDS:
        raise ValueError(f"{path}: missing or wrong profile header")
    profiles = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != len(PROFILE_FIELDS):
            raise ValueError(f"{path}: line {lineno}: expected {len(PROFILE_FIELDS)} fields")
        try:
            profiles.append(
                ProductProfile(
                    id=int(parts[0]),
                    group_id=int(parts[1]),
                    regime=parts[2],
                    p_min=float(parts[3]),
                    p_max=float(parts[4]),
                    unit_cost=float(parts[5]),
                    base_uv=float(parts[6]),
                    uv_volatility=float(parts[7]),
                    demand_elasticity=float(parts[8]),
                    demand_noise=float(parts[9]),
                    seasonality_period=int(parts[10]),
                    initial_stock=int(parts[11]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    return profiles
