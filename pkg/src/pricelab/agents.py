"""Pricing agents: DQN over price buckets and DDPG over continuous prices.

Both agents own a uniform replay buffer and delayed target networks. The
value-loss convention is ``0.5 * mean(td_error^2)``, so a single-transition
SGD step with learning rate alpha reproduces the classic tabular update
``Q <- Q + alpha * (r + gamma * max Q' - Q)`` exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import seeds
from .mdp import ActionSpace, FeatureNormalizer, PricingAction, Transition, bucket_index, bucket_price
from .nets import (
    Adam,
    Network,
    Sgd,
    copy_into,
    init_network,
    load_network,
    make_optimizer,
    save_network,
    soft_update,
)


class ReplayBuffer:
    """Bounded FIFO transition store with seeded uniform sampling (with replacement)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
            self._next = (self._next + 1) % self.capacity

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        if not self._items:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self._items), size=n)
        return [self._items[i] for i in idx]

    def items(self) -> list[Transition]:
        return list(self._items)


@dataclass
class DqnConfig:
    gamma: float = 0.99
    alpha: float = 0.01  # tabular-iteration rate; becomes the lr with optimizer="sgd"
    lr: float = 1e-3
    optimizer: str = "adam"
    hidden: tuple[int, ...] = (64, 64)
    batch_size: int = 64
    buffer_capacity: int = 100_000
    target_sync: int = 100  # hard-copy the target every this many train calls
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 5000

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.target_sync < 1:
            raise ValueError("target_sync must be >= 1")
        if self.batch_size < 1 or self.buffer_capacity < 1:
            raise ValueError("batch_size and buffer_capacity must be >= 1")
        if not 0 <= self.eps_end <= self.eps_start <= 1:
            raise ValueError("need 0 <= eps_end <= eps_start <= 1")


class DqnAgent:
    """Discrete pricing policy trained on one-step bootstrapped TD targets."""

    def __init__(self, space: ActionSpace, state_dim: int, cfg: DqnConfig, seed: int):
        if not space.is_discrete:
            raise ValueError("DqnAgent needs a discrete action space")
        self.space = space
        self.state_dim = state_dim
        self.cfg = cfg
        rng = seeds.substream(seed, seeds.NET_INIT, 0)
        dims = (state_dim, *cfg.hidden, space.n_buckets)
        acts = ("relu",) * len(cfg.hidden) + ("identity",)
        self.q_net = init_network(dims, acts, rng)
        self.q_target = self.q_net.copy()
        self.opt = make_optimizer(cfg.optimizer, cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.train_calls = 0
        self.explore_steps = 0

    @property
    def n_actions(self) -> int:
        return self.space.n_buckets

    def epsilon(self) -> float:
        cfg = self.cfg
        if cfg.eps_decay_steps <= 0:
            return cfg.eps_end
        frac = min(1.0, self.explore_steps / cfg.eps_decay_steps)
        return cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start)

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return self.q_net.forward(state)

    def act(
        self, state: np.ndarray, explore: bool = False, rng: np.random.Generator | None = None
    ) -> PricingAction:
        """Greedy bucket (ties -> lowest k), or epsilon-greedy when exploring."""
        if explore:
            if rng is None:
                raise ValueError("exploration requires an rng")
            self.explore_steps += 1
            if rng.random() < self.epsilon():
                k = int(rng.integers(1, self.n_actions + 1))
                return PricingAction(price=bucket_price(self.space, k), bucket=k)
        q = self.q_values(state)
        k = int(np.argmax(q)) + 1
        return PricingAction(price=bucket_price(self.space, k), bucket=k)

    def policy(self) -> Callable[[np.ndarray], PricingAction]:
        return lambda state: self.act(state, explore=False)

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def _bucket_of(self, action: PricingAction) -> int:
        if action.bucket is not None:
            return action.bucket
        return bucket_index(self.space, action.price)

    def train_on_batch(self, batch: Sequence[Transition]) -> float:
        """One gradient step on 0.5 * mean((target - Q(s, a))^2) over the batch."""
        n = len(batch)
        states = np.stack([tr.state for tr in batch])
        next_states = np.stack([tr.next_state for tr in batch])
        actions = np.array([self._bucket_of(tr.action) - 1 for tr in batch])
        rewards = np.array([tr.reward for tr in batch])
        not_done = np.array([0.0 if tr.done else 1.0 for tr in batch])

        next_q = self.q_target.forward(next_states).max(axis=1)
        targets = rewards + self.cfg.gamma * next_q * not_done
        q_all, cache = self.q_net.forward_cache(states)
        rows = np.arange(n)
        err = q_all[rows, actions] - targets
        loss = 0.5 * float(np.mean(err * err))

        upstream = np.zeros_like(q_all)
        upstream[rows, actions] = err / n
        grads, _ = self.q_net.backward(cache, upstream)
        self.opt.update(self.q_net, grads)

        self.train_calls += 1
        if self.train_calls % self.cfg.target_sync == 0:
            copy_into(self.q_target, self.q_net)
        return loss

    def train_step(self, rng: np.random.Generator) -> float:
        if len(self.buffer) < self.cfg.batch_size:
            raise ValueError("buffer smaller than batch_size")
        return self.train_on_batch(self.buffer.sample(self.cfg.batch_size, rng))


@dataclass
class DdpgConfig:
    gamma: float = 0.99
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    hidden: tuple[int, ...] = (64, 64)
    batch_size: int = 64
    buffer_capacity: int = 100_000
    noise_sigma: float = 0.1  # exploration noise as a fraction of the price range
    rho: float = 0.005  # target blend weight; 1.0 = hard copy
    target_sync: int = 1  # apply the blend every this many train calls

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must be in [0, 1]")
        if self.target_sync < 1:
            raise ValueError("target_sync must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


class DdpgAgent:
    """Continuous pricing policy: deterministic actor plus action-value critic.

    The actor emits tanh output u in (-1, 1), rescaled to a price; the critic
    consumes (state, price normalized to [0, 1]).
    """

    def __init__(self, space: ActionSpace, state_dim: int, cfg: DdpgConfig, seed: int):
        if space.is_discrete:
            raise ValueError("DdpgAgent needs a continuous action space")
        self.space = space
        self.state_dim = state_dim
        self.cfg = cfg
        acts = ("relu",) * len(cfg.hidden)
        actor_rng = seeds.substream(seed, seeds.NET_INIT, 1)
        critic_rng = seeds.substream(seed, seeds.NET_INIT, 2)
        self.actor = init_network((state_dim, *cfg.hidden, 1), acts + ("tanh",), actor_rng)
        self.critic = init_network((state_dim + 1, *cfg.hidden, 1), acts + ("identity",), critic_rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(lr=cfg.actor_lr)
        self.critic_opt = Adam(lr=cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.train_calls = 0

    def _to_price(self, u: np.ndarray) -> np.ndarray:
        mid = 0.5 * (self.space.p_min + self.space.p_max)
        return mid + 0.5 * self.space.width * u

    def _norm(self, price: np.ndarray) -> np.ndarray:
        return (price - self.space.p_min) / self.space.width

    def mu(self, state: np.ndarray) -> float:
        """Deterministic policy price for one state."""
        u = float(self.actor.forward(state)[0])
        return float(self._to_price(np.array(u)))

    def act(
        self, state: np.ndarray, explore: bool = False, rng: np.random.Generator | None = None
    ) -> PricingAction:
        price = self.mu(state)
        if explore and self.cfg.noise_sigma > 0:
            if rng is None:
                raise ValueError("exploration requires an rng")
            price += float(rng.normal(0.0, self.cfg.noise_sigma * self.space.width))
        price = min(max(price, self.space.p_min), self.space.p_max)
        return PricingAction(price=price)

    def policy(self) -> Callable[[np.ndarray], PricingAction]:
        return lambda state: self.act(state, explore=False)

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)

    def train_on_batch(
        self,
        batch: Sequence[Transition],
        update_critic: bool = True,
        update_actor: bool = True,
    ) -> tuple[float, float]:
        """Critic step on the bootstrapped value loss, actor step up the critic.

        Returns (critic loss, mean critic value of the actor's actions).
        """
        n = len(batch)
        states = np.stack([tr.state for tr in batch])
        next_states = np.stack([tr.next_state for tr in batch])
        prices = np.array([tr.action.price for tr in batch])
        rewards = np.array([tr.reward for tr in batch])
        not_done = np.array([0.0 if tr.done else 1.0 for tr in batch])

        critic_loss = 0.0
        if update_critic:
            u_next = self.actor_target.forward(next_states)
            a_next = self._norm(self._to_price(u_next))
            q_next = self.critic_target.forward(np.hstack([next_states, a_next]))[:, 0]
            targets = rewards + self.cfg.gamma * q_next * not_done
            q, cache = self.critic.forward_cache(np.hstack([states, self._norm(prices)[:, None]]))
            err = q[:, 0] - targets
            critic_loss = 0.5 * float(np.mean(err * err))
            upstream = (err / n)[:, None]
            grads, _ = self.critic.backward(cache, upstream)
            self.critic_opt.update(self.critic, grads)

        u, actor_cache = self.actor.forward_cache(states)
        a_norm = 0.5 * (u + 1.0)  # price normalization of the rescaled tanh output
        q_pi, critic_cache = self.critic.forward_cache(np.hstack([states, a_norm]))
        actor_value = float(np.mean(q_pi[:, 0]))
        if update_actor:
            ones = np.full_like(q_pi, 1.0 / n)
            _, input_grad = self.critic.backward(critic_cache, ones)
            dq_du = input_grad[:, -1:] * 0.5  # chain through the price rescaling
            grads, _ = self.actor.backward(actor_cache, -dq_du)  # ascend on mean Q
            self.actor_opt.update(self.actor, grads)

        self.train_calls += 1
        if self.train_calls % self.cfg.target_sync == 0:
            soft_update(self.actor_target, self.actor, self.cfg.rho)
            soft_update(self.critic_target, self.critic, self.cfg.rho)
        return critic_loss, actor_value

    def train_step(self, rng: np.random.Generator) -> tuple[float, float]:
        if len(self.buffer) < self.cfg.batch_size:
            raise ValueError("buffer smaller than batch_size")
        return self.train_on_batch(self.buffer.sample(self.cfg.batch_size, rng))


CHECKPOINT_MANIFEST = "manifest.txt"


def save_checkpoint(
    agent: DqnAgent | DdpgAgent,
    dirpath: str | Path,
    normalizer: FeatureNormalizer | None = None,
) -> Path:
    """Write networks plus a manifest of hyperparameters and counters."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    lines = []
    if isinstance(agent, DqnAgent):
        lines += [
            "kind dqn",
            f"p_min {agent.space.p_min!r}",
            f"p_max {agent.space.p_max!r}",
            f"n_buckets {agent.space.n_buckets}",
            f"discount_grid {int(agent.space.discount_grid)}",
            f"state_dim {agent.state_dim}",
            f"gamma {agent.cfg.gamma!r}",
            f"alpha {agent.cfg.alpha!r}",
            f"lr {agent.cfg.lr!r}",
            f"optimizer {agent.cfg.optimizer}",
            f"hidden {','.join(map(str, agent.cfg.hidden))}",
            f"batch_size {agent.cfg.batch_size}",
            f"buffer_capacity {agent.cfg.buffer_capacity}",
            f"target_sync {agent.cfg.target_sync}",
            f"train_calls {agent.train_calls}",
        ]
        save_network(agent.q_net, dirpath / "q_net.txt")
        save_network(agent.q_target, dirpath / "q_target.txt")
    else:
        lines += [
            "kind ddpg",
            f"p_min {agent.space.p_min!r}",
            f"p_max {agent.space.p_max!r}",
            f"state_dim {agent.state_dim}",
            f"gamma {agent.cfg.gamma!r}",
            f"actor_lr {agent.cfg.actor_lr!r}",
            f"critic_lr {agent.cfg.critic_lr!r}",
            f"hidden {','.join(map(str, agent.cfg.hidden))}",
            f"batch_size {agent.cfg.batch_size}",
            f"buffer_capacity {agent.cfg.buffer_capacity}",
            f"noise_sigma {agent.cfg.noise_sigma!r}",
            f"rho {agent.cfg.rho!r}",
            f"target_sync {agent.cfg.target_sync}",
            f"train_calls {agent.train_calls}",
        ]
        save_network(agent.actor, dirpath / "actor.txt")
        save_network(agent.critic, dirpath / "critic.txt")
        save_network(agent.actor_target, dirpath / "actor_target.txt")
        save_network(agent.critic_target, dirpath / "critic_target.txt")
    if normalizer is not None:
        lines.append("norm_lo " + " ".join(repr(v) for v in normalizer.lo))
        lines.append("norm_hi " + " ".join(repr(v) for v in normalizer.hi))
    (dirpath / CHECKPOINT_MANIFEST).write_text("\n".join(lines) + "\n")
    return dirpath


def load_checkpoint(dirpath: str | Path) -> tuple[DqnAgent | DdpgAgent, FeatureNormalizer | None]:
    dirpath = Path(dirpath)
    manifest = dirpath / CHECKPOINT_MANIFEST
    if not manifest.exists():
        raise FileNotFoundError(manifest)
    fields: dict[str, str] = {}
    for line in manifest.read_text().splitlines():
        if line.strip():
            key, _, value = line.partition(" ")
            fields[key] = value
    hidden = tuple(int(v) for v in fields["hidden"].split(",") if v)
    if fields["kind"] == "dqn":
        space = ActionSpace(
            p_min=float(fields["p_min"]),
            p_max=float(fields["p_max"]),
            n_buckets=int(fields["n_buckets"]),
            discount_grid=bool(int(fields["discount_grid"])),
        )
        cfg = DqnConfig(
            gamma=float(fields["gamma"]),
            alpha=float(fields["alpha"]),
            lr=float(fields["lr"]),
            optimizer=fields["optimizer"],
            hidden=hidden,
            batch_size=int(fields["batch_size"]),
            buffer_capacity=int(fields["buffer_capacity"]),
            target_sync=int(fields["target_sync"]),
        )
        agent: DqnAgent | DdpgAgent = DqnAgent(space, int(fields["state_dim"]), cfg, seed=0)
        agent.q_net = load_network(dirpath / "q_net.txt")
        agent.q_target = load_network(dirpath / "q_target.txt")
        agent.train_calls = int(fields["train_calls"])
    elif fields["kind"] == "ddpg":
        space = ActionSpace(p_min=float(fields["p_min"]), p_max=float(fields["p_max"]))
        cfg = DdpgConfig(
            gamma=float(fields["gamma"]),
            actor_lr=float(fields["actor_lr"]),
            critic_lr=float(fields["critic_lr"]),
            hidden=hidden,
            batch_size=int(fields["batch_size"]),
            buffer_capacity=int(fields["buffer_capacity"]),
            noise_sigma=float(fields["noise_sigma"]),
            rho=float(fields["rho"]),
            target_sync=int(fields["target_sync"]),
        )
        agent = DdpgAgent(space, int(fields["state_dim"]), cfg, seed=0)
        agent.actor = load_network(dirpath / "actor.txt")
        agent.critic = load_network(dirpath / "critic.txt")
        agent.actor_target = load_network(dirpath / "actor_target.txt")
        agent.critic_target = load_network(dirpath / "critic_target.txt")
        agent.train_calls = int(fields["train_calls"])
    else:
        raise ValueError(f"{manifest}: unknown agent kind {fields['kind']!r}")
    normalizer = None
    if "norm_lo" in fields and "norm_hi" in fields:
        lo = np.array([float(v) for v in fields["norm_lo"].split()])
        hi = np.array([float(v) for v in fields["norm_hi"].split()])
        normalizer = FeatureNormalizer(lo, hi)
    return agent, normalizer
