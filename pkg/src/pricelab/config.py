"""Scenario configuration: a flat dataclass loadable from a JSON file.

Validation reports the offending field by name; the CLI turns that into a
nonzero exit with the message on stderr.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .mdp import DRCR, REWARD_KINDS, RewardSpec

SCENARIOS = ("daily", "markdown")
AGENT_KINDS = ("dqn", "ddpg", "baseline")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = "daily"
    seed: int = 0
    out_dir: str = "out"

    # product source: either a profile file or generated simi-groups
    profile_file: str | None = None
    regime: str = "fmcg"
    n_groups: int = 2
    group_size: int = 8
    scale_min: float = 0.7
    scale_max: float = 1.3

    # agent
    agent_kind: str = "dqn"
    gamma: float = 0.99
    alpha: float = 0.01
    k: int = 100
    c: int = 100
    eps_explore: float = 0.1
    sigma: float = 0.1
    lr: float = 1e-3
    hidden: tuple[int, ...] = (64, 64)
    batch_size: int = 64
    buffer_capacity: int = 100_000
    rho: float = 0.005
    discount_grid: bool = False

    # demonstration log and pre-training
    periods: int = 60            # T: simulated periods per product
    pretrain_periods: int = 45   # D: transitions up to this period pre-train
    epochs: int = 30
    train_reward: str = DRCR
    train_tau: int = 1
    eval_reward: str = DRCR
    eval_tau: int = 1

    # offline evaluation and field analog
    eps_match: float = 0.05
    horizon: int = 30            # field-analog evaluation days
    yoy_growth: float = 0.5      # year-on-year demand growth injected for DID
    pricing_period_days: int = 1  # fixed: one action per day
    shock_start: int = 0         # optional demand shock window (0 = off)
    shock_end: int = 0
    shock_scale: float = 1.0
    demo_file: str | None = None  # reuse an existing log instead of generating

    def validate(self) -> "ScenarioConfig":
        def fail(name: str, why: str):
            raise ConfigError(f"{name}: {why}")

        if self.scenario not in SCENARIOS:
            fail("scenario", f"must be one of {SCENARIOS}")
        if self.seed < 0:
            fail("seed", "must be >= 0")
        if self.agent_kind not in AGENT_KINDS:
            fail("agent_kind", f"must be one of {AGENT_KINDS}")
        if not 0 < self.gamma <= 1:
            fail("gamma", "must be in (0, 1]")
        if not 0 < self.alpha <= 1:
            fail("alpha", "must be in (0, 1]")
        if self.k < 2:
            fail("k", "must be >= 2")
        if self.c < 1:
            fail("c", "must be >= 1")
        if not 0 <= self.eps_explore <= 1:
            fail("eps_explore", "must be in [0, 1]")
        if self.sigma < 0:
            fail("sigma", "must be >= 0")
        if self.lr <= 0:
            fail("lr", "must be > 0")
        if self.batch_size < 1:
            fail("batch_size", "must be >= 1")
        if self.buffer_capacity < 1:
            fail("buffer_capacity", "must be >= 1")
        if not 0 <= self.rho <= 1:
            fail("rho", "must be in [0, 1]")
        if self.train_reward not in REWARD_KINDS:
            fail("train_reward", f"must be one of {REWARD_KINDS}")
        if self.eval_reward not in REWARD_KINDS:
            fail("eval_reward", f"must be one of {REWARD_KINDS}")
        if self.train_tau < 1:
            fail("train_tau", "must be >= 1")
        if self.eval_tau < 1:
            fail("eval_tau", "must be >= 1")
        if self.periods < 3:
            fail("periods", "must be >= 3")
        if not 1 <= self.pretrain_periods < self.periods:
            fail("pretrain_periods", "must satisfy 1 <= pretrain_periods < periods")
        if self.epochs < 0:
            fail("epochs", "must be >= 0")
        if self.eps_match <= 0:
            fail("eps_match", "must be > 0")
        if self.horizon < 1:
            fail("horizon", "must be >= 1")
        if self.yoy_growth <= -1:
            fail("yoy_growth", "must be > -1")
        if self.pricing_period_days != 1:
            fail("pricing_period_days", "only daily re-pricing is supported")
        if self.n_groups < 2:
            fail("n_groups", "must be >= 2")
        if self.group_size < 1:
            fail("group_size", "must be >= 1")
        if not 0 < self.scale_min <= self.scale_max:
            fail("scale_min", "need 0 < scale_min <= scale_max")
        if self.regime not in ("luxury", "fmcg"):
            fail("regime", "must be 'luxury' or 'fmcg'")
        if self.shock_start < 0 or self.shock_end < self.shock_start:
            fail("shock_start", "need 0 <= shock_start <= shock_end")
        if self.shock_scale <= 0:
            fail("shock_scale", "must be > 0")
        if self.profile_file is not None and not Path(self.profile_file).exists():
            fail("profile_file", f"file not found: {self.profile_file}")
        if self.demo_file is not None and not Path(self.demo_file).exists():
            fail("demo_file", f"file not found: {self.demo_file}")
        return self

    def train_reward_spec(self) -> RewardSpec:
        return RewardSpec(kind=self.train_reward, tau=self.train_tau)

    def eval_reward_spec(self) -> RewardSpec:
        return RewardSpec(kind=self.eval_reward, tau=self.eval_tau)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config: file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config: unknown fields {unknown}")
        if "hidden" in data:
            data["hidden"] = tuple(data["hidden"])
        return cls(**data).validate()
