"""pricelab: a seeded dynamic-pricing laboratory.

Synthetic market simulation, discrete (DQN) and continuous (DDPG) pricing
agents, demonstration-based pre-training, offline policy evaluation on
logged tuples, and treatment/control index reports — all reproducible from
one master seed.
"""
from .agents import (
    DdpgAgent,
    DdpgConfig,
    DqnAgent,
    DqnConfig,
    ReplayBuffer,
    load_checkpoint,
    save_checkpoint,
)
from .baseline import BaselinePolicyConfig, RuleBasedPricer
from .config import ConfigError, ScenarioConfig
from .demos import DemonstrationSet, demos_from_records, load_demonstrations, pretrain
from .evaluate import (
    DidReport,
    EvalConfig,
    GroupSeries,
    did_index,
    evaluate_policy,
    evaluate_policy_counts,
)
from .market import (
    DemandShock,
    EpisodeFinished,
    MarketSim,
    PeriodObservables,
    ProductProfile,
    conversion_rate,
    draw_uv,
    fmcg_profile,
    load_profiles,
    luxury_profile,
    make_simi_groups,
    save_profiles,
)
from .mdp import (
    ActionSpace,
    FeatureNormalizer,
    GroupContext,
    MarketState,
    PricingAction,
    RewardSpec,
    RewardTracker,
    Transition,
    bucket_index,
    bucket_price,
    build_state,
)
from .records import DemoRecord, read_records, write_records
from .runner import run_evaluate, run_field_analog, run_generate, run_sweep

__version__ = "0.1.0"
