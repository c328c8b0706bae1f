"""Rule-based behavior pricing, the stand-in for manual price managers.

The rule starts each cycle at a fixed level, marks the price down when
trailing revenue drops below an anchor set right after the last re-price,
and adds a small transient jitter, so logged data covers raises, drops, and
holds. All randomness comes from per-(product, period) substreams.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import seeds
from .market import PeriodObservables
from .mdp import ActionSpace


@dataclass(frozen=True)
class BaselinePolicyConfig:
    start_frac: float = 0.7      # typical opening price as a fraction of the range
    start_spread: float = 0.25   # per-cycle opening varies uniformly by +- this much
    drop_frac: float = 0.1       # markdown size as a fraction of the range
    drop_threshold: float = 0.85  # trigger when trailing revenue < threshold * anchor
    trailing: int = 3
    reset_every: int = 30        # re-open at a fresh start price every N periods; 0 = never
    jitter_prob: float = 0.2
    jitter_frac: float = 0.05

    def __post_init__(self) -> None:
        if not 0 <= self.start_frac <= 1:
            raise ValueError("start_frac must be in [0, 1]")
        if self.start_spread < 0:
            raise ValueError("start_spread must be >= 0")
        if self.trailing < 1:
            raise ValueError("trailing must be >= 1")


class RuleBasedPricer:
    def __init__(
        self, space: ActionSpace, cfg: BaselinePolicyConfig, seed: int, product_id: int
    ):
        self.space = space
        self.cfg = cfg
        self.seed = seed
        self.product_id = product_id
        self._price = space.p_min + cfg.start_frac * space.width
        self._anchor: float | None = None

    def _clip(self, price: float) -> float:
        return min(max(price, self.space.p_min), self.space.p_max)

    def price_for(self, t: int, history: Sequence[PeriodObservables]) -> float:
        cfg = self.cfg
        if t == 1 or (cfg.reset_every > 0 and (t - 1) % cfg.reset_every == 0):
            frac = cfg.start_frac
            if cfg.start_spread > 0:
                cycle_rng = seeds.substream(self.seed, self.product_id, t, seeds.BEHAVIOR, 1)
                frac += float(cycle_rng.uniform(-cfg.start_spread, cfg.start_spread))
            self._price = self._clip(self.space.p_min + frac * self.space.width)
            self._anchor = None
        elif len(history) >= cfg.trailing:
            trail = sum(o.revenue for o in history[-cfg.trailing :]) / cfg.trailing
            if self._anchor is None:
                self._anchor = trail
            elif trail < cfg.drop_threshold * self._anchor:
                self._price = self._clip(self._price - cfg.drop_frac * self.space.width)
                self._anchor = None
        price = self._price
        rng = seeds.substream(self.seed, self.product_id, t, seeds.BEHAVIOR)
        if cfg.jitter_prob > 0 and rng.random() < cfg.jitter_prob:
            price += float(rng.uniform(-cfg.jitter_frac, cfg.jitter_frac)) * self.space.width
        return self._clip(price)
