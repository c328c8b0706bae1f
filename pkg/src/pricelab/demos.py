"""Demonstration sets: logged transitions split into pre-training and evaluation.

Rewards are recomputed from the raw observables at load time under the
requested reward definition, so one log serves rate-level, rate-difference,
and profit-rate experiments. Feature normalization bounds are fitted on the
pre-training slice only and then applied (with clipping) to every state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import seeds
from .mdp import DRCR, FeatureNormalizer, PricingAction, RewardSpec, Transition
from .records import DemoRecord, read_records


class DemoError(ValueError):
    """Invalid demonstration set (bad split, empty file, inconsistent records)."""


@dataclass
class DemonstrationSet:
    """Ordered transitions with a pretrain/evaluation split index."""

    tuples: list[Transition]
    split: int
    normalizer: FeatureNormalizer

    def __post_init__(self) -> None:
        if not 0 < self.split < len(self.tuples):
            raise DemoError(
                f"split must satisfy 0 < split < total, got split={self.split} "
                f"total={len(self.tuples)}"
            )

    @property
    def total(self) -> int:
        return len(self.tuples)

    def pretrain_slice(self) -> list[Transition]:
        return self.tuples[: self.split]

    def eval_slice(self) -> list[Transition]:
        return self.tuples[self.split :]


def recompute_rewards(records: Sequence[DemoRecord], reward: RewardSpec) -> list[float | None]:
    """Per-record rewards under ``reward``; None where a rate difference is pending.

    Rate histories are reconstructed per product from each record's own
    observables plus the inline previous-period fields, so a difference over
    tau periods is available whenever period - tau is covered by the log.
    """
    rates: dict[int, dict[int, float]] = {}
    for rec in records:
        per_product = rates.setdefault(rec.product_id, {})
        per_product.setdefault(
            rec.period - 1, rec.prev_revenue / rec.prev_uv if rec.prev_uv > 0 else 0.0
        )
        per_product[rec.period] = rec.revenue / rec.uv if rec.uv > 0 else 0.0
    out: list[float | None] = []
    for rec in records:
        if rec.uv == 0:
            out.append(0.0)
        elif reward.kind == "rcr":
            out.append(rec.revenue / rec.uv)
        elif reward.kind == "profit_cr":
            out.append(rec.profit / rec.uv)
        else:
            base = rates[rec.product_id].get(rec.period - reward.tau)
            out.append(None if base is None else rec.revenue / rec.uv - base)
    return out


def demos_from_records(
    records: Sequence[DemoRecord],
    reward: RewardSpec,
    pretrain_tuples: int | None = None,
    pretrain_periods: int | None = None,
    normalizer: FeatureNormalizer | None = None,
) -> DemonstrationSet:
    """Build a split demonstration set; exactly one split argument must be given.

    Records whose rate-difference reward is still pending are dropped (they
    carry no usable signal under that reward). Unless a pre-fitted
    ``normalizer`` is supplied, feature bounds are fitted on the pre-training
    slice.
    """
    if (pretrain_tuples is None) == (pretrain_periods is None):
        raise DemoError("provide exactly one of pretrain_tuples / pretrain_periods")
    if not records:
        raise DemoError("no demonstration records")
    rewards = recompute_rewards(records, reward)
    kept = [(rec, r) for rec, r in zip(records, rewards) if r is not None]
    if not kept:
        raise DemoError(f"no usable records under reward {reward.label()}")
    if pretrain_periods is not None:
        split = sum(1 for rec, _ in kept if rec.period <= pretrain_periods)
    else:
        split = pretrain_tuples
    raw_states = [rec.state for rec, _ in kept]
    if not 0 < split < len(kept):
        raise DemoError(
            f"split {split} out of range for {len(kept)} usable tuples "
            "(need 0 < pretrain count < total)"
        )
    if normalizer is None:
        normalizer = FeatureNormalizer.fit(raw_states[:split])
    tuples = [
        Transition(
            state=normalizer.transform(rec.state),
            action=PricingAction(price=rec.action),
            reward=r,
            next_state=normalizer.transform(rec.next_state),
            done=rec.done,
        )
        for rec, r in kept
    ]
    return DemonstrationSet(tuples=tuples, split=split, normalizer=normalizer)


def load_demonstrations(
    path: str | Path,
    reward: RewardSpec,
    pretrain_tuples: int | None = None,
    pretrain_periods: int | None = None,
) -> DemonstrationSet:
    """Read a record file and build the split set (see :func:`demos_from_records`)."""
    return demos_from_records(
        read_records(path),
        reward,
        pretrain_tuples=pretrain_tuples,
        pretrain_periods=pretrain_periods,
    )


def pretrain(agent, demos: DemonstrationSet, epochs: int, seed: int):
    """Replay the pre-training slice through the agent's buffer and train steps.

    One epoch makes ceil(split / batch_size) sampled gradient steps. The
    evaluation slice is never touched. Returns the agent.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if epochs == 0:
        return agent
    for tr in demos.pretrain_slice():
        agent.observe(tr)
    steps_per_epoch = math.ceil(demos.split / agent.cfg.batch_size)
    rng = seeds.substream(seed, seeds.REPLAY)
    for _ in range(epochs):
        for _ in range(steps_per_epoch):
            agent.train_step(rng)
    return agent
