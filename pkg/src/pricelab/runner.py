"""Experiment operations behind the CLI verbs.

``generate`` logs a rule-based behavior policy into demonstration files;
``sweep`` pre-trains and offline-evaluates an agent across a parameter axis;
``field-analog`` runs a treatment/control comparison scored by the
year-on-year rate-difference index; ``evaluate`` scores one policy.

Every stochastic choice flows from the scenario seed through named
substreams, so identical configs produce byte-identical output files.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import seeds
from .agents import DdpgAgent, DdpgConfig, DqnAgent, DqnConfig, load_checkpoint, save_checkpoint
from .baseline import BaselinePolicyConfig, RuleBasedPricer
from .config import ConfigError, ScenarioConfig
from .demos import DemonstrationSet, demos_from_records, pretrain, recompute_rewards
from .evaluate import (
    DidReport,
    EvalConfig,
    GroupSeries,
    did_index,
    evaluate_policy_counts,
    write_did_csv,
    write_did_summary,
)
from .market import (
    DemandShock,
    MarketSim,
    PeriodObservables,
    ProductProfile,
    fmcg_profile,
    load_profiles,
    luxury_profile,
    make_simi_groups,
    save_profiles,
)
from .mdp import ActionSpace, FeatureNormalizer, GroupContext, STATE_DIM, build_state
from .records import DemoRecord, write_records

# stream tags keep the RNG of simulation phases disjoint
TAG_DEMO = 0
TAG_YEARAGO = 1
TAG_LIVE = 2

SWEEP_AXES = ("gamma", "k", "reward")


def build_profiles(cfg: ScenarioConfig) -> list[list[ProductProfile]]:
    """Product groups from the profile file or generated simi-groups."""
    if cfg.profile_file is not None:
        profiles = load_profiles(cfg.profile_file)
        by_group: dict[int, list[ProductProfile]] = {}
        for p in profiles:
            by_group.setdefault(p.group_id, []).append(p)
        return list(by_group.values())
    template = luxury_profile() if cfg.regime == "luxury" else fmcg_profile()
    return make_simi_groups(
        template,
        cfg.n_groups,
        [cfg.group_size] * cfg.n_groups,
        cfg.seed,
        (cfg.scale_min, cfg.scale_max),
    )


def action_space_for(cfg: ScenarioConfig, profiles: Sequence[ProductProfile]) -> ActionSpace:
    p_min, p_max = profiles[0].p_min, profiles[0].p_max
    if any(p.p_min != p_min or p.p_max != p_max for p in profiles):
        raise ConfigError("profile_file: all products must share one price range")
    if cfg.agent_kind == "dqn":
        return ActionSpace(p_min, p_max, n_buckets=cfg.k, discount_grid=cfg.discount_grid)
    return ActionSpace(p_min, p_max)


def build_agent(cfg: ScenarioConfig, space: ActionSpace, state_dim: int, seed: int):
    if cfg.agent_kind == "dqn":
        return DqnAgent(
            space,
            state_dim,
            DqnConfig(
                gamma=cfg.gamma,
                alpha=cfg.alpha,
                lr=cfg.lr,
                hidden=cfg.hidden,
                batch_size=cfg.batch_size,
                buffer_capacity=cfg.buffer_capacity,
                target_sync=cfg.c,
                eps_start=cfg.eps_explore,
                eps_end=cfg.eps_explore,
            ),
            seed,
        )
    if cfg.agent_kind == "ddpg":
        return DdpgAgent(
            space,
            state_dim,
            DdpgConfig(
                gamma=cfg.gamma,
                actor_lr=cfg.lr,
                critic_lr=cfg.lr,
                hidden=cfg.hidden,
                batch_size=cfg.batch_size,
                buffer_capacity=cfg.buffer_capacity,
                noise_sigma=cfg.sigma,
                rho=cfg.rho,
                target_sync=cfg.c if cfg.rho == 1.0 else 1,
            ),
            seed,
        )
    raise ConfigError(f"agent_kind: no trainable agent for {cfg.agent_kind!r}")


@dataclass
class ProductTrack:
    """Per-product simulation trace: one entry per completed period."""

    profile: ProductProfile
    observables: list[PeriodObservables]
    states: list[np.ndarray]  # raw feature vector after each period
    terminal_period: int | None  # period at which stock ran out, if any

    @property
    def periods(self) -> int:
        return len(self.observables)


class Pricer:
    """Chooses the price for period t given the product's history so far."""

    def price_for(
        self, t: int, history: Sequence[PeriodObservables], raw_state: np.ndarray | None
    ) -> float:
        raise NotImplementedError


class RulePricer(Pricer):
    def __init__(self, space: ActionSpace, seed: int, product_id: int,
                 policy_cfg: BaselinePolicyConfig | None = None):
        self._inner = RuleBasedPricer(space, policy_cfg or BaselinePolicyConfig(), seed, product_id)

    def price_for(self, t, history, raw_state):
        return self._inner.price_for(t, history)


class AgentPricer(Pricer):
    """Greedy agent pricing; falls back to the rule price for the opening period."""

    def __init__(self, agent, normalizer: FeatureNormalizer, fallback: RulePricer):
        self.agent = agent
        self.normalizer = normalizer
        self.fallback = fallback

    def price_for(self, t, history, raw_state):
        if raw_state is None:
            return self.fallback.price_for(t, history, raw_state)
        return self.agent.act(self.normalizer.transform(raw_state)).price


def simulate_cohort(
    profiles: Sequence[ProductProfile],
    periods: int,
    seed: int,
    space: ActionSpace,
    make_pricer: Callable[[ProductProfile], Pricer],
    demand_scale: float = 1.0,
    shock: DemandShock | None = None,
    stream_tag: int = 0,
) -> dict[int, ProductTrack]:
    """Step all products in lockstep so competitiveness features see same-period peers."""
    sims = {p.id: MarketSim(p, periods, seed, demand_scale, shock, stream_tag) for p in profiles}
    pricers = {p.id: make_pricer(p) for p in profiles}
    tracks = {
        p.id: ProductTrack(profile=p, observables=[], states=[], terminal_period=None)
        for p in profiles
    }
    groups: dict[int, list[int]] = {}
    for p in profiles:
        groups.setdefault(p.group_id, []).append(p.id)

    for t in range(1, periods + 1):
        stepped: list[int] = []
        for p in profiles:
            sim = sims[p.id]
            if sim.done:
                continue
            track = tracks[p.id]
            raw_state = track.states[-1] if track.states else None
            price = pricers[p.id].price_for(t, track.observables, raw_state)
            obs, _ = sim.step(price)
            track.observables.append(obs)
            if p.stocked and sim.stock_remaining == 0:
                track.terminal_period = t
            stepped.append(p.id)
        if not stepped:
            break
        # competitiveness context from group-mates active this period
        period_price_norm = {
            pid: (tracks[pid].observables[-1].price_paid - space.p_min) / space.width
            for pid in stepped
        }
        period_conv = {pid: tracks[pid].observables[-1].conversion for pid in stepped}
        shock_on = shock is not None and shock.active(t)
        for pid in stepped:
            mates = [q for q in groups[tracks[pid].profile.group_id] if q != pid and q in period_price_norm]
            if mates:
                ctx = GroupContext(
                    mean_price_norm=sum(period_price_norm[q] for q in mates) / len(mates),
                    mean_conversion=sum(period_conv[q] for q in mates) / len(mates),
                )
            else:
                ctx = GroupContext(period_price_norm[pid], period_conv[pid])
            state = build_state(tracks[pid].observables, space, ctx, shock_active=shock_on)
            tracks[pid].states.append(state.features)
    return tracks


def cohort_records(tracks: dict[int, ProductTrack]) -> list[DemoRecord]:
    """Transitions in period-major order: all products' period 2, then 3, ...

    The opening period only seeds the state, so a product simulated for T
    periods contributes T - 1 records.
    """
    records: list[DemoRecord] = []
    max_periods = max((tr.periods for tr in tracks.values()), default=0)
    for t in range(2, max_periods + 1):
        for pid in sorted(tracks):
            track = tracks[pid]
            if track.periods < t:
                continue
            obs = track.observables[t - 1]
            prev = track.observables[t - 2]
            records.append(
                DemoRecord(
                    product_id=pid,
                    group_id=track.profile.group_id,
                    period=t,
                    done=track.terminal_period == t,
                    action=obs.price_paid,
                    uv=obs.uv,
                    revenue=obs.revenue,
                    profit=obs.profit,
                    prev_uv=prev.uv,
                    prev_revenue=prev.revenue,
                    prev_profit=prev.profit,
                    state=track.states[t - 2],
                    next_state=track.states[t - 1],
                )
            )
    return records


@dataclass
class GenerateResult:
    profiles: list[ProductProfile]
    records: list[DemoRecord]
    rewards: list[float | None]  # generation-time rewards under the training spec
    profile_path: Path
    demo_path: Path


def run_generate(cfg: ScenarioConfig) -> GenerateResult:
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = build_profiles(cfg)
    profiles = [p for group in groups for p in group]
    space = ActionSpace(profiles[0].p_min, profiles[0].p_max)  # behavior policy is continuous
    tracks = simulate_cohort(
        profiles,
        cfg.periods,
        cfg.seed,
        space,
        make_pricer=lambda p: RulePricer(
            space, seeds.derive_seed(cfg.seed, TAG_DEMO, seeds.BEHAVIOR), p.id
        ),
        stream_tag=TAG_DEMO,
    )
    records = cohort_records(tracks)
    profile_path = out / "profiles.tsv"
    demo_path = out / "demos.tsv"
    save_profiles(profile_path, profiles)
    write_records(demo_path, records)
    rewards = recompute_rewards(records, cfg.train_reward_spec())
    return GenerateResult(profiles, records, rewards, profile_path, demo_path)


def _sweep_settings(cfg: ScenarioConfig, axis: str, values: Sequence) -> list[ScenarioConfig]:
    if axis == "gamma":
        return [dataclasses.replace(cfg, gamma=float(v)) for v in values]
    if axis == "k":
        return [dataclasses.replace(cfg, k=int(v)) for v in values]
    if axis == "reward":
        return [dataclasses.replace(cfg, train_reward=str(v)) for v in values]
    raise ConfigError(f"axis: must be one of {SWEEP_AXES}")


def _demo_records(cfg: ScenarioConfig) -> list[DemoRecord]:
    if cfg.demo_file is not None:
        from .records import read_records

        return read_records(cfg.demo_file)
    return run_generate(cfg).records


def run_sweep(cfg: ScenarioConfig, axis: str, values: Sequence) -> tuple[Path, list[dict]]:
    """Pretrain + offline-evaluate one agent per axis value; CSV row per setting.

    All settings share the demonstration log, the seed, and the evaluation
    reward, so scores are comparable across the axis.
    """
    cfg.validate()
    if cfg.agent_kind == "baseline":
        raise ConfigError("agent_kind: sweep needs a trainable agent")
    if not values:
        raise ConfigError("axis: empty value list")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = _demo_records(cfg)
    eval_spec = cfg.eval_reward_spec()
    rows = []
    for setting in _sweep_settings(cfg, axis, values):
        groups = build_profiles(setting)
        profiles = [p for g in groups for p in g]
        space = action_space_for(setting, profiles)
        demos_train = demos_from_records(
            records, setting.train_reward_spec(), pretrain_periods=setting.pretrain_periods
        )
        demos_eval = demos_from_records(
            records, eval_spec, pretrain_periods=setting.pretrain_periods
        )
        agent = build_agent(setting, space, STATE_DIM, setting.seed)
        pretrain(agent, demos_train, setting.epochs, setting.seed)
        eval_cfg = EvalConfig(eps_match=setting.eps_match, space=space)
        total, matched = evaluate_policy_counts(
            agent.policy(), demos_eval.eval_slice(), eval_cfg
        )
        r_pi = total / matched if matched > 0 else 0.0
        value = setting.gamma if axis == "gamma" else setting.k if axis == "k" else setting.train_reward
        rows.append({"axis": axis, "value": value, "r_pi": r_pi, "n_matched": matched})
    csv_path = out / f"sweep_{axis}.csv"
    with open(csv_path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "r_pi", "n_matched"])
        for row in rows:
            value = row["value"]
            writer.writerow(
                [
                    row["axis"],
                    repr(value) if isinstance(value, float) else str(value),
                    repr(row["r_pi"]),
                    row["n_matched"],
                ]
            )
    return csv_path, rows


def _series_arrays(
    tracks: dict[int, ProductTrack], pids: Sequence[int], days: int
) -> np.ndarray:
    """(n_products, days, 2) revenue/uv arrays; post-stockout days count as zero."""
    arr = np.zeros((len(pids), days, 2))
    for i, pid in enumerate(pids):
        for obs in tracks[pid].observables[:days]:
            arr[i, obs.period_index - 1, 0] = obs.revenue
            arr[i, obs.period_index - 1, 1] = obs.uv
    return arr


def run_field_analog(cfg: ScenarioConfig) -> tuple[DidReport, Path, Path]:
    """Treatment/control comparison over matched groups.

    Group one is the control, priced by the rule-based baseline throughout.
    The remaining groups are treatment: their products' behavior log
    pre-trains the configured agent, which then prices them for the
    evaluation window. The report indexes each day against a comparison
    window simulated with demand scaled down by the configured year-on-year
    growth, so the index reads as year-on-year rate growth.
    """
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = build_profiles(cfg)
    if len(groups) < 2:
        raise ConfigError("n_groups: field analog needs a control and a treatment group")
    profiles = [p for g in groups for p in g]
    control_gid = groups[0][0].group_id
    treatment_profiles = [p for g in groups[1:] for p in g]
    space = action_space_for(cfg, profiles)
    behavior_space = ActionSpace(profiles[0].p_min, profiles[0].p_max)

    def rule_pricers(tag: int) -> Callable[[ProductProfile], Pricer]:
        pricer_seed = seeds.derive_seed(cfg.seed, tag, seeds.BEHAVIOR)
        return lambda p: RulePricer(behavior_space, pricer_seed, p.id)

    shock = (
        DemandShock(cfg.shock_start, cfg.shock_end, cfg.shock_scale)
        if cfg.shock_start > 0
        else None
    )

    # 1) behavior log on the treatment products, then pre-train the agent
    agent = None
    normalizer: FeatureNormalizer | None = None
    if cfg.agent_kind != "baseline":
        demo_tracks = simulate_cohort(
            treatment_profiles, cfg.periods, cfg.seed, space,
            rule_pricers(TAG_DEMO), stream_tag=TAG_DEMO,
        )
        demos = demos_from_records(
            cohort_records(demo_tracks),
            cfg.train_reward_spec(),
            pretrain_periods=cfg.pretrain_periods,
        )
        agent = build_agent(cfg, space, STATE_DIM, cfg.seed)
        pretrain(agent, demos, cfg.epochs, cfg.seed)
        normalizer = demos.normalizer

    # 2) year-ago comparison window: everyone on the rule policy, lower demand
    yearago_tracks = simulate_cohort(
        profiles, cfg.horizon, cfg.seed, space,
        rule_pricers(TAG_YEARAGO),
        demand_scale=1.0 / (1.0 + cfg.yoy_growth),
        stream_tag=TAG_YEARAGO,
    )

    # 3) evaluation window: control on rules, treatment on the agent
    def live_pricer(p: ProductProfile) -> Pricer:
        rule = RulePricer(behavior_space, seeds.derive_seed(cfg.seed, TAG_LIVE, seeds.BEHAVIOR), p.id)
        if agent is None or p.group_id == control_gid:
            return rule
        return AgentPricer(agent, normalizer, fallback=rule)

    live_tracks = simulate_cohort(
        profiles, cfg.horizon, cfg.seed, space, live_pricer, shock=shock, stream_tag=TAG_LIVE
    )

    series = []
    for group in groups:
        pids = [p.id for p in group]
        series.append(
            GroupSeries(
                group_id=group[0].group_id,
                current=_series_arrays(live_tracks, pids, cfg.horizon),
                baseline=_series_arrays(yearago_tracks, pids, cfg.horizon),
            )
        )
    report = did_index(series, control_group=control_gid, tau_index=365)
    daily_path = out / "did_daily.csv"
    summary_path = out / "did_summary.csv"
    write_did_csv(report, daily_path)
    write_did_summary(report, summary_path)
    return report, daily_path, summary_path


def run_evaluate(
    cfg: ScenarioConfig, checkpoint: str | Path | None = None
) -> tuple[float, int, Path]:
    """Score one policy on the evaluation slice; returns (R, matches, csv path)."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = _demo_records(cfg)
    groups = build_profiles(cfg)
    profiles = [p for g in groups for p in g]
    if checkpoint is not None:
        agent, saved_norm = load_checkpoint(checkpoint)
        space = agent.space
        demos_eval = demos_from_records(
            records, cfg.eval_reward_spec(),
            pretrain_periods=cfg.pretrain_periods, normalizer=saved_norm,
        )
    else:
        space = action_space_for(cfg, profiles)
        demos_train = demos_from_records(
            records, cfg.train_reward_spec(), pretrain_periods=cfg.pretrain_periods
        )
        agent = build_agent(cfg, space, STATE_DIM, cfg.seed)
        pretrain(agent, demos_train, cfg.epochs, cfg.seed)
        demos_eval = demos_from_records(
            records, cfg.eval_reward_spec(), pretrain_periods=cfg.pretrain_periods
        )
    eval_cfg = EvalConfig(eps_match=cfg.eps_match, space=space)
    total, matched = evaluate_policy_counts(agent.policy(), demos_eval.eval_slice(), eval_cfg)
    r_pi = total / matched if matched > 0 else 0.0
    csv_path = out / "evaluate.csv"
    with open(csv_path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent_kind", "eval_reward", "r_pi", "n_matched"])
        writer.writerow([cfg.agent_kind, cfg.eval_reward_spec().label(), repr(r_pi), matched])
    return r_pi, matched, csv_path
