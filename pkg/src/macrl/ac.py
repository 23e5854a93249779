"""Asynchronous actor-critic learners: independent, centralized, and the two
CTDE forms (shared centralized critic vs one centralized critic per agent).
Critics are trained with n-step TD targets whose discounting stays accurate
at primitive-tick resolution; exploration is a linearly decaying epsilon-soft
mixture, and the mixture is also the distribution differentiated in the
policy gradient."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import nn
from .buffers import (
    MacroEpisode, PaddedBatch, collect_episode, pad_trajectories,
    squeeze_decentralized, squeeze_iaicc, squeeze_joint,
)
from .core import MacroEnv, consistent_mask, decode_joint, joint_catalog_size
from .qlearn import epsilon_at
from .seq import dec_inputs, joint_inputs, onehot

PolicyHead = nn.NetworkParams


@dataclass
class ActorCriticConfig:
    actor_lr: float = 0.001
    critic_lr: float = 0.003
    episodes_per_train: int = 8
    target_sync_episodes: int = 32
    n_step: int = 0                    # 0 means one-step TD
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_episodes: int = 4000
    gamma: float = 0.95
    critic_input: str = "history"      # or "state"
    fc: int = 32
    gru_dec: int = 32
    gru_cen: int = 64

    def __post_init__(self) -> None:
        if self.n_step < 0:
            raise ValueError("n_step must be >= 0")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must be <= eps_start")
        if self.critic_input not in ("history", "state"):
            raise ValueError("critic_input must be 'history' or 'state'")


# -- small pure pieces ---------------------------------------------------------------


def advantage(rc: float, gamma: float, tau: int, v_next: float, v_now: float) -> float:
    """One macro-step advantage: rc + gamma**tau * v_next - v_now (v_next is
    zero at terminal histories)."""
    return rc + gamma ** tau * v_next - v_now


def n_step_target(
    rewards: Sequence[float],
    taus: Sequence[int],
    gamma: float,
    v_tail: float,
) -> float:
    """n-step bootstrap over macro records: each reward is discounted by the
    cumulative primitive-tick offset of its record, and the tail value by the
    total offset."""
    total = 0.0
    offset = 0
    for r, tau in zip(rewards, taus):
        total += gamma ** offset * r
        offset += int(tau)
    return total + gamma ** offset * v_tail


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def epsilon_soft_sample(
    probs: np.ndarray, eps: float, rng: np.random.Generator,
    allowed: Optional[np.ndarray] = None,
) -> int:
    """Sample from (1-eps)*probs + eps*uniform, optionally restricted (and
    renormalized) over an allowed set."""
    mixed = epsilon_soft_probs(probs, eps, allowed)
    u = rng.random()
    return int(np.searchsorted(np.cumsum(mixed), u, side="right").clip(0, len(mixed) - 1))


def epsilon_soft_probs(
    probs: np.ndarray, eps: float, allowed: Optional[np.ndarray] = None
) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if allowed is None:
        return (1.0 - eps) * probs + eps / len(probs)
    allowed = np.asarray(allowed, dtype=bool)
    restricted = np.where(allowed, probs, 0.0)
    total = restricted.sum()
    if total <= 0:
        restricted = allowed / allowed.sum()
    else:
        restricted = restricted / total
    mixed = (1.0 - eps) * restricted + eps * allowed / allowed.sum()
    return mixed


# -- vectorized n-step targets over padded batches -------------------------------------


def _nstep_batch(
    rc: np.ndarray, tau: np.ndarray, done: np.ndarray, mask: np.ndarray,
    v_all: np.ndarray, gamma: float, n_step: int,
) -> np.ndarray:
    """Targets y[k, b] = sum_j gamma^{T_j} rc[k+j] + gamma^{T_n} v_all[k+n]
    with the window truncated at episode end (then the tail bootstrap is 0)."""
    K, B = rc.shape
    n_eff = max(1, n_step)
    y = np.zeros((K, B))
    for k in range(K):
        acc = np.zeros(B)
        offset = np.zeros(B)
        alive = mask[k] > 0
        tail_pos = np.full(B, k, dtype=np.int64)
        for j in range(n_eff):
            idx = k + j
            if idx >= K:
                break
            step = alive & (mask[idx] > 0)
            if not step.any():
                break
            acc[step] += gamma ** offset[step] * rc[idx, step]
            offset[step] += tau[idx, step]
            tail_pos[step] = idx + 1
            alive = alive & (mask[idx] > 0) & ~done[idx]
        boot = alive
        if boot.any():
            cols = np.flatnonzero(boot)
            acc[cols] += gamma ** offset[cols] * v_all[tail_pos[cols], cols]
        y[k] = acc
    return y


def _nstep_flagged(
    rc: np.ndarray, tau: np.ndarray, done: np.ndarray, mask: np.ndarray,
    loss_flag: np.ndarray, v_all: np.ndarray, gamma: float, n_step: int,
) -> np.ndarray:
    """Per-agent variant: the reward/duration chain runs over the flagged
    records only, with the tail value taken right after the last one used."""
    K, B = rc.shape
    n_eff = max(1, n_step)
    y = np.zeros((K, B))
    for b in range(B):
        rows = np.flatnonzero((mask[:, b] > 0) & loss_flag[:, b])
        for pos, k in enumerate(rows):
            acc = 0.0
            offset = 0.0
            tail = None
            for j in range(n_eff):
                if pos + j >= len(rows):
                    break
                idx = rows[pos + j]
                acc += gamma ** offset * rc[idx, b]
                offset += tau[idx, b]
                if done[idx, b]:
                    tail = None
                    break
                tail = idx + 1
            if tail is not None:
                acc += gamma ** offset * v_all[tail, b]
            y[k, b] = acc
    return y


# -- shared update steps ----------------------------------------------------------------


def _critic_update(
    net: nn.NetworkParams,
    inputs: np.ndarray,
    emask: np.ndarray,
    loss_mask: np.ndarray,
    y: np.ndarray,
    lr: float,
) -> tuple[float, np.ndarray]:
    """Regress V toward y at the loss-masked positions; returns the loss and
    the pre-update online values (the actor's baseline)."""
    K = y.shape[0]
    v_on, _, cache = nn.forward_sequence(net.online, inputs, emask)
    v_now = v_on[:K, :, 0]
    n_valid = max(1, int(loss_mask.sum()))
    delta = (y - v_now) * loss_mask
    loss = float((delta * delta).sum() / n_valid)
    gout = np.zeros_like(v_on)
    gout[:K, :, 0] = -2.0 * delta / n_valid
    grads = nn.backward(net.online, cache, gout)
    nn.adam_step(net.online, grads, net.adam, lr)
    return loss, v_now


def _critic_values(net_params: dict, inputs: np.ndarray, emask: np.ndarray) -> np.ndarray:
    v, _, _ = nn.forward_sequence(net_params, inputs, emask)
    return v[:, :, 0]


def _actor_update(
    net: nn.NetworkParams,
    inputs: np.ndarray,
    emask: np.ndarray,
    actions: np.ndarray,
    advantages: np.ndarray,
    loss_mask: np.ndarray,
    eps: np.ndarray,
    lr: float,
    allowed: Optional[np.ndarray] = None,
) -> float:
    """Ascend sum log p_mix(action) * advantage over the masked records; the
    differentiated distribution is the epsilon-soft behavior mixture (with an
    optional restriction to the joint actions consistent with still-running
    macros)."""
    K, B = actions.shape
    logits, _, cache = nn.forward_sequence(net.online, inputs, emask)
    logits = logits[:K]
    pi = softmax(logits)
    A = logits.shape[2]
    if allowed is not None:
        restricted = np.where(allowed, pi, 0.0)
        total = restricted.sum(axis=2, keepdims=True)
        safe = np.where(total > 0, total, 1.0)
        pi_s = restricted / safe
        n_allowed = allowed.sum(axis=2, keepdims=True).clip(min=1)
        mixed = (1.0 - eps)[None, :, None] * pi_s + (
            eps[None, :, None] * allowed / n_allowed
        )
    else:
        pi_s = pi
        mixed = (1.0 - eps)[None, :, None] * pi + eps[None, :, None] / A

    n_valid = max(1, int(loss_mask.sum()))
    p_taken = np.take_along_axis(mixed, actions.reshape(K, B, 1), axis=2)[:, :, 0]
    pi_taken = np.take_along_axis(pi_s, actions.reshape(K, B, 1), axis=2)[:, :, 0]
    coef = loss_mask * advantages * (1.0 - eps)[None, :] / np.where(
        p_taken > 0, p_taken, 1.0
    )
    # d pi_s(a) / d logit_j = pi_s(a) * (1[j == a] - pi_s(j)) on the allowed set
    gout_core = -coef[:, :, None] * pi_taken[:, :, None] * (
        (np.arange(A)[None, None, :] == actions[:, :, None]).astype(float) - pi_s
    ) / n_valid
    if allowed is not None:
        gout_core = np.where(allowed, gout_core, 0.0)
    gout = np.zeros((inputs.shape[0],) + gout_core.shape[1:])
    gout[:K] = gout_core
    grads = nn.backward(net.online, cache, gout)
    nn.adam_step(net.online, grads, net.adam, lr)
    obj = float((loss_mask * np.log(np.where(p_taken > 0, p_taken, 1.0)) * advantages).sum() / n_valid)
    return obj


# -- behavior drivers ---------------------------------------------------------------------


class ACDecDriver:
    """Per-agent recurrent epsilon-soft policies."""

    def __init__(self, actors: Sequence[nn.NetworkParams], catalog_sizes, rng, eps=0.0):
        self.actors = list(actors)
        self.sizes = list(catalog_sizes)
        self.rng = rng
        self.eps = eps
        self._hidden: list[np.ndarray] = []
        self._prev: list[int] = []
        self._current: list[int] = []

    def begin_episode(self, obs) -> None:
        self._hidden = [np.zeros((1, a.spec.gru)) for a in self.actors]
        self._prev = [-1] * len(self.actors)
        self._current = [-1] * len(self.actors)

    def act(self, statuses, obs) -> list[int]:
        for i, st in enumerate(statuses):
            if not st.terminated:
                continue
            x = np.concatenate(
                [obs[i], onehot(np.array([self._prev[i]]), self.sizes[i])[0]]
            )
            logits, h, _ = nn.forward_sequence(
                self.actors[i].online, x.reshape(1, 1, -1), h0=self._hidden[i]
            )
            self._hidden[i] = h
            probs = softmax(logits[0, 0])
            a = epsilon_soft_sample(probs, self.eps, self.rng)
            self._prev[i] = a
            self._current[i] = a
        return list(self._current)


class ACJointDriver:
    """Centralized recurrent epsilon-soft policy; sampling is restricted to
    joint macro-actions that agree with every still-running agent."""

    def __init__(self, actor: nn.NetworkParams, catalog_sizes, rng, eps=0.0):
        self.actor = actor
        self.sizes = list(catalog_sizes)
        self.rng = rng
        self.eps = eps
        self._hidden = np.zeros((1, actor.spec.gru))
        self._prev = [-1] * len(catalog_sizes)
        self._current = [-1] * len(catalog_sizes)

    def begin_episode(self, obs) -> None:
        self._hidden = np.zeros((1, self.actor.spec.gru))
        self._prev = [-1] * len(self.sizes)
        self._current = [-1] * len(self.sizes)

    def act(self, statuses, obs) -> list[int]:
        if not any(st.terminated for st in statuses):
            return list(self._current)
        parts = [np.concatenate(list(obs))]
        for i, n in enumerate(self.sizes):
            parts.append(onehot(np.array([self._prev[i]]), n)[0])
        x = np.concatenate(parts)
        logits, h, _ = nn.forward_sequence(
            self.actor.online, x.reshape(1, 1, -1), h0=self._hidden
        )
        self._hidden = h
        forced = [
            None if st.terminated else int(self._current[i])
            for i, st in enumerate(statuses)
        ]
        allowed = consistent_mask(forced, self.sizes)
        probs = softmax(logits[0, 0])
        a = epsilon_soft_sample(probs, self.eps, self.rng, allowed)
        comps = list(decode_joint(a, self.sizes))
        self._prev = comps
        self._current = comps
        return comps


# -- learners ----------------------------------------------------------------------------


class _ACBase:
    kind = "ac"

    def __init__(self, env: MacroEnv, cfg: ActorCriticConfig,
                 rng_explore: np.random.Generator) -> None:
        self.cfg = cfg
        self.sizes = list(env.catalog_sizes)
        self.obs_widths = list(env.obs_widths)
        self.n_agents = env.n_agents
        self.rng_explore = rng_explore
        self.episodes: list[MacroEpisode] = []
        self.episodes_done = 0
        self.train_rounds = 0
        self.collect_state = cfg.critic_input == "state"

    def set_epsilon(self, episode: int) -> None:
        self.driver.eps = epsilon_at(
            episode, self.cfg.eps_start, self.cfg.eps_end,
            self.cfg.eps_decay_episodes,
        )

    def current_epsilon(self) -> float:
        return self.driver.eps

    def train_episode(self, env: MacroEnv, seed: int) -> float:
        ep = collect_episode(
            env, seed, self.driver, self.cfg.gamma,
            collect_state=self.collect_state,
            behavior_eps=self.driver.eps, provenance="train",
        )
        self.episodes.append(ep)
        self.episodes_done += 1
        if self.episodes_done % self.cfg.episodes_per_train == 0:
            self.train_on_episodes(self.episodes)
            self.episodes = []
            self.train_rounds += 1
        if self.episodes_done % self.cfg.target_sync_episodes == 0:
            self._sync_targets()
        gam = np.power(self.cfg.gamma, np.arange(ep.length))
        return float((gam * ep.team_reward).sum())


class MacIAC(_ACBase):
    """Independent actor-critic: local recurrent actor and local history-value
    critic per agent, trained on that agent's own squeezed trajectories."""

    def __init__(self, env, cfg, rng_init, rng_explore) -> None:
        super().__init__(env, cfg, rng_explore)
        self.collect_state = False
        self.actors, self.critics = [], []
        for i in range(self.n_agents):
            w = self.obs_widths[i] + self.sizes[i]
            self.actors.append(nn.make_network(
                nn.NetworkSpec(w, cfg.fc, cfg.fc, cfg.gru_dec, cfg.fc, self.sizes[i]),
                rng_init,
            ))
            self.critics.append(nn.make_network(
                nn.NetworkSpec(w, cfg.fc, cfg.fc, cfg.gru_dec, cfg.fc, 1),
                rng_init,
            ))
        self.driver = ACDecDriver(self.actors, self.sizes, rng_explore, cfg.eps_start)

    def make_driver(self, eps: float, rng=None) -> ACDecDriver:
        return ACDecDriver(self.actors, self.sizes, rng or self.rng_explore, eps)

    def _sync_targets(self) -> None:
        for c in self.critics:
            c.sync_target()

    def train_on_episodes(self, episodes: Sequence[MacroEpisode]) -> dict[str, float]:
        losses = {}
        for i in range(self.n_agents):
            batch = pad_trajectories(
                [squeeze_decentralized(ep, i) for ep in episodes]
            )
            inputs, emask, _ = dec_inputs(batch, self.sizes[i])
            v_tail = _critic_values(self.critics[i].target, inputs, emask)
            y = _nstep_batch(
                batch.rc, batch.tau, batch.done, batch.mask, v_tail,
                self.cfg.gamma, self.cfg.n_step,
            )
            closs, v_now = _critic_update(
                self.critics[i], inputs, emask, batch.mask, y, self.cfg.critic_lr
            )
            adv = (y - v_now) * batch.mask
            K = batch.m.shape[0]
            _actor_update(
                self.actors[i], inputs[:K], emask[:K], batch.m, adv, batch.mask,
                batch.eps, self.cfg.actor_lr,
            )
            losses[f"critic{i}"] = closs
        return losses

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i in range(self.n_agents):
            for k, v in self.actors[i].online.items():
                out[f"actor{i}/{k}"] = v
            for k, v in self.critics[i].online.items():
                out[f"critic{i}/{k}"] = v
        return out

    def load_checkpoint_arrays(self, arrays) -> None:
        for i in range(self.n_agents):
            for k in self.actors[i].online:
                self.actors[i].online[k] = arrays[f"actor{i}/{k}"].copy()
            for k in self.critics[i].online:
                self.critics[i].online[k] = arrays[f"critic{i}/{k}"].copy()
            self.critics[i].sync_target()


class MacCAC(_ACBase):
    """Fully centralized actor-critic over the joint catalog; both sampling
    and the differentiated mixture respect still-running macros."""

    def __init__(self, env, cfg, rng_init, rng_explore) -> None:
        super().__init__(env, cfg, rng_explore)
        self.collect_state = False
        total = joint_catalog_size(self.sizes)
        width = sum(self.obs_widths) + sum(self.sizes)
        self.actor = nn.make_network(
            nn.NetworkSpec(width, cfg.fc, cfg.fc, cfg.gru_cen, cfg.fc, total),
            rng_init,
        )
        self.critic = nn.make_network(
            nn.NetworkSpec(width, cfg.fc, cfg.fc, cfg.gru_cen, cfg.fc, 1),
            rng_init,
        )
        self.total = total
        self.driver = ACJointDriver(self.actor, self.sizes, rng_explore, cfg.eps_start)

    def make_driver(self, eps: float, rng=None) -> ACJointDriver:
        return ACJointDriver(self.actor, self.sizes, rng or self.rng_explore, eps)

    def _sync_targets(self) -> None:
        self.critic.sync_target()

    def _allowed(self, batch: PaddedBatch) -> np.ndarray:
        K, B = batch.m.shape
        allowed = np.ones((K, B, self.total), dtype=bool)
        for k in range(K):
            for b in range(B):
                if batch.mask[k, b] == 0:
                    continue
                if batch.undone_start[k, b].any():
                    forced = [
                        int(batch.m_comp[k, b, i]) if batch.undone_start[k, b, i] else None
                        for i in range(len(self.sizes))
                    ]
                    allowed[k, b] = consistent_mask(forced, self.sizes)
        return allowed

    def train_on_episodes(self, episodes: Sequence[MacroEpisode]) -> dict[str, float]:
        batch = pad_trajectories(
            [squeeze_joint(ep, self.sizes) for ep in episodes]
        )
        inputs, emask, _ = joint_inputs(batch, self.sizes)
        v_tail = _critic_values(self.critic.target, inputs, emask)
        y = _nstep_batch(
            batch.rc, batch.tau, batch.done, batch.mask, v_tail,
            self.cfg.gamma, self.cfg.n_step,
        )
        closs, v_now = _critic_update(
            self.critic, inputs, emask, batch.mask, y, self.cfg.critic_lr
        )
        adv = (y - v_now) * batch.mask
        K = batch.m.shape[0]
        _actor_update(
            self.actor, inputs[:K], emask[:K], batch.m, adv, batch.mask,
            batch.eps, self.cfg.actor_lr, allowed=self._allowed(batch),
        )
        return {"critic": closs}

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {f"actor/{k}": v for k, v in self.actor.online.items()}
        out.update({f"critic/{k}": v for k, v in self.critic.online.items()})
        return out

    def load_checkpoint_arrays(self, arrays) -> None:
        for k in self.actor.online:
            self.actor.online[k] = arrays[f"actor/{k}"].copy()
        for k in self.critic.online:
            self.critic.online[k] = arrays[f"critic/{k}"].copy()
        self.critic.sync_target()


class _IACCBase(_ACBase):
    """Shared machinery for the two CTDE learners: decentralized actors plus
    centralized critic(s) over joint-termination records."""

    def __init__(self, env, cfg, rng_init, rng_explore) -> None:
        super().__init__(env, cfg, rng_explore)
        self.state_width = env.state_width if cfg.critic_input == "state" else 0
        self.actors = []
        for i in range(self.n_agents):
            w = self.obs_widths[i] + self.sizes[i]
            self.actors.append(nn.make_network(
                nn.NetworkSpec(w, cfg.fc, cfg.fc, cfg.gru_dec, cfg.fc, self.sizes[i]),
                rng_init,
            ))
        self.driver = ACDecDriver(self.actors, self.sizes, rng_explore, cfg.eps_start)

    def make_driver(self, eps: float, rng=None) -> ACDecDriver:
        return ACDecDriver(self.actors, self.sizes, rng or self.rng_explore, eps)

    def _critic_spec(self) -> nn.NetworkSpec:
        if self.cfg.critic_input == "state":
            width = self.state_width + sum(self.sizes)
        else:
            width = sum(self.obs_widths) + sum(self.sizes)
        return nn.NetworkSpec(
            width, self.cfg.fc, self.cfg.fc, self.cfg.gru_cen, self.cfg.fc, 1
        )

    def _use_state(self) -> bool:
        return self.cfg.critic_input == "state"

    def _actor_pass(self, i: int, episodes, advantages_by_sample) -> None:
        batch = pad_trajectories([squeeze_decentralized(ep, i) for ep in episodes])
        K, B = batch.m.shape
        lengths = batch.mask.sum(axis=0).astype(np.int64)
        adv = np.zeros((K, B))
        for b in range(B):
            vals = advantages_by_sample[b]
            assert len(vals) == lengths[b], (
                "flagged joint records must match the agent's own records"
            )
            adv[: len(vals), b] = vals
        inputs, emask, _ = dec_inputs(batch, self.sizes[i])
        _actor_update(
            self.actors[i], inputs[:K], emask[:K], batch.m, adv * batch.mask,
            batch.mask, batch.eps, self.cfg.actor_lr,
        )


class NaiveMacIACC(_IACCBase):
    """One shared centralized critic trained on joint-termination records;
    every actor's advantage reuses the joint segment reward and duration at
    its own decision records (the documented mismatch under asynchrony)."""

    def __init__(self, env, cfg, rng_init, rng_explore) -> None:
        super().__init__(env, cfg, rng_init, rng_explore)
        self.critic = nn.make_network(self._critic_spec(), rng_init)

    def _sync_targets(self) -> None:
        self.critic.sync_target()

    def train_on_episodes(self, episodes: Sequence[MacroEpisode]) -> dict[str, float]:
        batch = pad_trajectories(
            [squeeze_joint(ep, self.sizes, with_state=self._use_state()) for ep in episodes]
        )
        inputs, emask, _ = joint_inputs(batch, self.sizes, use_state=self._use_state())
        v_tail = _critic_values(self.critic.target, inputs, emask)
        y = _nstep_batch(
            batch.rc, batch.tau, batch.done, batch.mask, v_tail,
            self.cfg.gamma, self.cfg.n_step,
        )
        closs, v_now = _critic_update(
            self.critic, inputs, emask, batch.mask, y, self.cfg.critic_lr
        )
        adv_all = y - v_now
        for i in range(self.n_agents):
            per_sample = []
            for b in range(len(episodes)):
                rows = np.flatnonzero(
                    (batch.mask[:, b] > 0) & batch.flags[:, b, i]
                )
                per_sample.append(adv_all[rows, b])
            self._actor_pass(i, episodes, per_sample)
        return {"critic": closs}

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {f"critic/{k}": v for k, v in self.critic.online.items()}
        for i in range(self.n_agents):
            for k, v in self.actors[i].online.items():
                out[f"actor{i}/{k}"] = v
        return out

    def load_checkpoint_arrays(self, arrays) -> None:
        for k in self.critic.online:
            self.critic.online[k] = arrays[f"critic/{k}"].copy()
        self.critic.sync_target()
        for i in range(self.n_agents):
            for k in self.actors[i].online:
                self.actors[i].online[k] = arrays[f"actor{i}/{k}"].copy()


class MacIAICC(_IACCBase):
    """One centralized critic per agent: its recurrent pass covers every
    joint-termination record, but TD losses (and the actor's advantages) use
    only the records where that agent's own macro terminated, with the
    agent's own accumulated reward and duration."""

    def __init__(self, env, cfg, rng_init, rng_explore) -> None:
        super().__init__(env, cfg, rng_init, rng_explore)
        self.critics = [
            nn.make_network(self._critic_spec(), rng_init)
            for _ in range(self.n_agents)
        ]

    def _sync_targets(self) -> None:
        for c in self.critics:
            c.sync_target()

    def train_on_episodes(self, episodes: Sequence[MacroEpisode]) -> dict[str, float]:
        losses = {}
        for i in range(self.n_agents):
            batch = pad_trajectories(
                [
                    squeeze_iaicc(ep, i, self.sizes, with_state=self._use_state())
                    for ep in episodes
                ]
            )
            inputs, emask, _ = joint_inputs(batch, self.sizes, use_state=self._use_state())
            v_tail = _critic_values(self.critics[i].target, inputs, emask)
            y = _nstep_flagged(
                batch.rc, batch.tau, batch.done, batch.mask, batch.loss_flag,
                v_tail, self.cfg.gamma, self.cfg.n_step,
            )
            loss_mask = batch.mask * batch.loss_flag
            closs, v_now = _critic_update(
                self.critics[i], inputs, emask, loss_mask, y, self.cfg.critic_lr
            )
            adv_all = y - v_now
            per_sample = []
            for b in range(len(episodes)):
                rows = np.flatnonzero(
                    (batch.mask[:, b] > 0) & batch.loss_flag[:, b]
                )
                per_sample.append(adv_all[rows, b])
            self._actor_pass(i, episodes, per_sample)
            losses[f"critic{i}"] = closs
        return losses

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i in range(self.n_agents):
            for k, v in self.actors[i].online.items():
                out[f"actor{i}/{k}"] = v
            for k, v in self.critics[i].online.items():
                out[f"critic{i}/{k}"] = v
        return out

    def load_checkpoint_arrays(self, arrays) -> None:
        for i in range(self.n_agents):
            for k in self.actors[i].online:
                self.actors[i].online[k] = arrays[f"actor{i}/{k}"].copy()
            for k in self.critics[i].online:
                self.critics[i].online[k] = arrays[f"critic{i}/{k}"].copy()
            self.critics[i].sync_target()
