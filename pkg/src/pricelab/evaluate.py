"""Offline policy evaluation on logged tuples, and group-index DID reports.

The evaluator walks the evaluation tuples in order and averages the logged
reward over the tuples whose logged action lies strictly within the match
tolerance of the policy's output; with no matches the score is 0. The match
tolerance is expressed in normalized units so one epsilon applies to both
action kinds: ``eps * K`` bucket indices for discrete policies, and
``eps * (p_max - p_min)`` currency for continuous ones.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .mdp import ActionSpace, PricingAction, Transition, bucket_index

Policy = Callable[[np.ndarray], PricingAction]


@dataclass(frozen=True)
class EvalConfig:
    eps_match: float
    space: ActionSpace

    def __post_init__(self) -> None:
        if self.eps_match <= 0:
            raise ValueError("eps_match must be > 0")

    def threshold(self) -> float:
        if self.space.is_discrete:
            return self.eps_match * self.space.n_buckets
        return self.eps_match * self.space.width


def action_offset(space: ActionSpace, proposed: PricingAction, logged: PricingAction) -> float:
    """Distance between actions: bucket indices if discrete, currency otherwise."""
    if space.is_discrete:
        kp = proposed.bucket if proposed.bucket is not None else bucket_index(space, proposed.price)
        kl = logged.bucket if logged.bucket is not None else bucket_index(space, logged.price)
        return float(abs(kp - kl))
    return abs(proposed.price - logged.price)


def evaluate_policy_counts(
    policy: Policy, tuples: Sequence[Transition], cfg: EvalConfig
) -> tuple[float, int]:
    """(summed reward over matches, match count), iterating tuples in order."""
    threshold = cfg.threshold()
    total = 0.0
    matched = 0
    for tr in tuples:
        proposed = policy(tr.state)
        if action_offset(cfg.space, proposed, tr.action) < threshold:
            total += tr.reward
            matched += 1
    return total, matched


def evaluate_policy(policy: Policy, tuples: Sequence[Transition], cfg: EvalConfig) -> float:
    """Average logged reward over action-matched tuples; 0 if nothing matches."""
    total, matched = evaluate_policy_counts(policy, tuples, cfg)
    return total / matched if matched > 0 else 0.0


class DidError(ValueError):
    """Invalid group series for a difference-index report."""


@dataclass(frozen=True)
class GroupSeries:
    """Daily (revenue, uv) per product for the report window and its comparison window.

    ``current`` and ``baseline`` are (n_products, n_days, 2) arrays; baseline
    day d is the year-ago counterpart of current day d.
    """

    group_id: int
    current: np.ndarray
    baseline: np.ndarray

    def __post_init__(self) -> None:
        for name, arr in (("current", self.current), ("baseline", self.baseline)):
            if arr.ndim != 3 or arr.shape[2] != 2:
                raise DidError(f"{name} must have shape (n_products, n_days, 2)")
        if self.current.shape != self.baseline.shape:
            raise DidError(
                f"group {self.group_id}: baseline periods missing or misaligned "
                f"({self.baseline.shape} vs {self.current.shape})"
            )


@dataclass(frozen=True)
class DidReport:
    """Per-group daily rate-difference index with control-rescaled ratios."""

    days: int
    tau_index: int
    control_group: int
    group_ids: tuple[int, ...]
    series: dict[int, np.ndarray]  # group -> daily index, length ``days``
    means: dict[int, float]
    ratios: dict[int, float]  # control group maps to exactly 1.0


def _rates(arr: np.ndarray) -> np.ndarray:
    revenue, uv = arr[..., 0], arr[..., 1]
    return np.divide(revenue, uv, out=np.zeros_like(revenue, dtype=np.float64), where=uv > 0)


def did_index(
    groups: Sequence[GroupSeries], control_group: int, tau_index: int = 365
) -> DidReport:
    """Daily group means of (current rate - year-ago rate), rescaled to the control.

    Per product and day the index is the difference of revenue conversion
    rates between the report window and the comparison window ``tau_index``
    days earlier; group series average over their products.
    """
    if len(groups) < 2:
        raise DidError("need at least two groups (control plus treatment)")
    ids = [g.group_id for g in groups]
    if len(set(ids)) != len(ids):
        raise DidError("duplicate group ids")
    if control_group not in ids:
        raise DidError(f"control group {control_group} not among {ids}")
    days = groups[0].current.shape[1]
    if any(g.current.shape[1] != days for g in groups):
        raise DidError("all groups must cover the same number of days")
    series: dict[int, np.ndarray] = {}
    means: dict[int, float] = {}
    for g in groups:
        daily = (_rates(g.current) - _rates(g.baseline)).mean(axis=0)
        series[g.group_id] = daily
        means[g.group_id] = float(daily.mean())
    control_mean = means[control_group]
    if abs(control_mean) < 1e-9:
        raise DidError("control group index mean is ~0; ratios are undefined")
    ratios = {gid: means[gid] / control_mean for gid in ids}
    return DidReport(
        days=days,
        tau_index=tau_index,
        control_group=control_group,
        group_ids=tuple(ids),
        series=series,
        means=means,
        ratios=ratios,
    )


def write_did_csv(report: DidReport, path: str | Path) -> None:
    """Per-day rows: day, group, index, rescaled_ratio."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "group", "index", "rescaled_ratio"])
        for day in range(1, report.days + 1):
            for gid in report.group_ids:
                writer.writerow(
                    [day, gid, repr(float(report.series[gid][day - 1])), repr(report.ratios[gid])]
                )


def write_did_summary(report: DidReport, path: str | Path) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "mean_index", "rescaled_ratio", "is_control"])
        for gid in report.group_ids:
            writer.writerow(
                [
                    gid,
                    repr(report.means[gid]),
                    repr(report.ratios[gid]),
                    int(gid == report.control_group),
                ]
            )
