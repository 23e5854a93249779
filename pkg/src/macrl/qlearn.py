"""Value-based learners over macro-actions: decentralized hysteretic double
DRQN, centralized double DRQN with conditional or unconditional targets, the
CTDE variant that bootstraps decentralized nets through the centralized one,
and its two-environment parallel form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import nn
from .buffers import (
    EpisodeRecorder, MacCerts, MacJerts, PaddedBatch, batch_from_slices,
)
from .core import MacroEnv, consistent_mask, decode_joint, joint_catalog_size
from .seq import allowed_next_mask, comp_table, dec_inputs, gather_actions, joint_inputs, onehot


@dataclass
class QLearnerConfig:
    lr: float = 0.001
    hysteretic_beta: Optional[float] = None   # None: single learning rate
    batch_size: int = 32
    trace_len: Optional[int] = None           # None: full episodes
    train_freq: int = 10                      # primitive ticks
    target_sync: int = 5000                   # primitive ticks
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_decay_episodes: int = 4000
    gamma: float = 0.95
    buffer_episodes: Optional[int] = None
    buffer_steps: Optional[int] = 100_000
    conditional: bool = True
    explore: str = "cen"                      # MacDec-DDRQN behavior policy
    literal_onestep_discount: bool = False    # bootstrap gamma^1, not gamma^tau
    fc: int = 32
    gru_dec: int = 32
    gru_cen: int = 64

    def __post_init__(self) -> None:
        if self.hysteretic_beta is not None and not (
            0.0 < self.hysteretic_beta <= self.lr
        ):
            raise ValueError("hysteretic beta must satisfy 0 < beta <= lr")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must be <= eps_start")
        if self.explore not in ("cen", "dec"):
            raise ValueError("explore must be 'cen' or 'dec'")


def epsilon_at(episode: int, start: float, end: float, decay_episodes: int) -> float:
    """Linear decay from start to end over the given number of episodes."""
    if decay_episodes <= 0:
        return end
    frac = min(1.0, episode / decay_episodes)
    return start + (end - start) * frac


def epsilon_greedy(
    q_values: np.ndarray,
    eps: float,
    rng: np.random.Generator,
    allowed: Optional[np.ndarray] = None,
) -> int:
    """Uniform over the allowed set with probability eps, else the
    lowest-index argmax of the allowed values."""
    q_values = np.asarray(q_values, dtype=np.float64)
    if allowed is None:
        allowed = np.ones(len(q_values), dtype=bool)
    candidates = np.flatnonzero(allowed)
    if eps > 0.0 and rng.random() < eps:
        return int(candidates[rng.integers(0, len(candidates))])
    masked = np.where(allowed, q_values, -np.inf)
    return int(np.argmax(masked))


def hysteretic_update(q: float, target: float, alpha: float, beta: float) -> float:
    """Tabular two-rate update: the smaller rate applies to negative errors."""
    delta = target - q
    return q + (alpha if delta > 0 else beta) * delta


@dataclass
class ConditioningMask:
    """Per-agent forced macro ids (the still-running macros); None means the
    agent is free to pick."""

    forced: tuple[Optional[int], ...]

    def mask(self, catalog_sizes: Sequence[int]) -> np.ndarray:
        return consistent_mask(self.forced, catalog_sizes)


# -- behavior drivers ---------------------------------------------------------------


class DecDriver:
    """Per-agent recurrent epsilon-greedy policies; each decision consumes
    one (observation, previous macro) input."""

    def __init__(
        self,
        nets: Sequence[nn.NetworkParams],
        catalog_sizes: Sequence[int],
        rng: Optional[np.random.Generator] = None,
        eps: float = 0.0,
    ) -> None:
        self.nets = list(nets)
        self.sizes = list(catalog_sizes)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.eps = eps
        self._hidden: list[np.ndarray] = []
        self._prev: list[int] = []
        self._current: list[int] = []

    def begin_episode(self, obs: Sequence[np.ndarray]) -> None:
        self._hidden = [np.zeros((1, net.spec.gru)) for net in self.nets]
        self._prev = [-1] * len(self.nets)
        self._current = [-1] * len(self.nets)

    def act(self, statuses, obs) -> list[int]:
        for i, st in enumerate(statuses):
            if not st.terminated:
                continue
            x = np.concatenate([obs[i], onehot(np.array([self._prev[i]]), self.sizes[i])[0]])
            q, h, _ = nn.forward_sequence(
                self.nets[i].online, x.reshape(1, 1, -1), h0=self._hidden[i]
            )
            self._hidden[i] = h
            a = epsilon_greedy(q[0, 0], self.eps, self.rng)
            self._prev[i] = a
            self._current[i] = a
        return list(self._current)


class JointDriver:
    """Centralized recurrent epsilon-greedy policy over the product catalog;
    consumes one input per joint decision point and respects still-running
    macros."""

    def __init__(
        self,
        net: nn.NetworkParams,
        catalog_sizes: Sequence[int],
        rng: Optional[np.random.Generator] = None,
        eps: float = 0.0,
    ) -> None:
        self.net = net
        self.sizes = list(catalog_sizes)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.eps = eps
        self._hidden = np.zeros((1, net.spec.gru))
        self._prev = [-1] * len(catalog_sizes)
        self._current = [-1] * len(catalog_sizes)

    def begin_episode(self, obs: Sequence[np.ndarray]) -> None:
        self._hidden = np.zeros((1, self.net.spec.gru))
        self._prev = [-1] * len(self.sizes)
        self._current = [-1] * len(self.sizes)

    def act(self, statuses, obs) -> list[int]:
        if not any(st.terminated for st in statuses):
            return list(self._current)
        parts = [np.concatenate(list(obs))]
        for i, n in enumerate(self.sizes):
            parts.append(onehot(np.array([self._prev[i]]), n)[0])
        x = np.concatenate(parts)
        q, h, _ = nn.forward_sequence(
            self.net.online, x.reshape(1, 1, -1), h0=self._hidden
        )
        self._hidden = h
        forced = [
            None if st.terminated else int(self._current[i])
            for i, st in enumerate(statuses)
        ]
        allowed = ConditioningMask(tuple(forced)).mask(self.sizes)
        a = epsilon_greedy(q[0, 0], self.eps, self.rng, allowed)
        comps = list(decode_joint(a, self.sizes))
        self._prev = comps
        self._current = comps
        return comps


# -- gradient updates ----------------------------------------------------------------


def _dec_update(
    net: nn.NetworkParams,
    batch: PaddedBatch,
    cfg: QLearnerConfig,
    n_macros: int,
    target_actions: Optional[np.ndarray] = None,
) -> float:
    """Double-Q update of one agent's net over a padded decentralized batch.
    When target_actions is given (CTDE suggestion), it replaces the online
    argmax in the bootstrap."""
    inputs, emask, _ = dec_inputs(batch, n_macros)
    q_on, _, cache = nn.forward_sequence(net.online, inputs, emask)
    q_tg, _, _ = nn.forward_sequence(net.target, inputs, emask)
    K, B = batch.m.shape
    valid = batch.mask > 0
    q_sa = gather_actions(q_on[:K], batch.m)
    if target_actions is None:
        astar = np.argmax(q_on[1 : K + 1], axis=2)
    else:
        astar = target_actions
    boot = gather_actions(q_tg[1 : K + 1], astar)
    exponent = np.ones_like(batch.tau) if cfg.literal_onestep_discount else batch.tau
    y = batch.rc + (cfg.gamma ** exponent) * (~batch.done) * boot
    delta = y - q_sa
    beta = cfg.hysteretic_beta if cfg.hysteretic_beta is not None else cfg.lr
    scale = np.where(delta > 0, 1.0, beta / cfg.lr)
    n_valid = max(1, int(valid.sum()))
    loss = float((scale * delta * delta * valid).sum() / n_valid)
    gout = np.zeros_like(q_on)
    gvals = -2.0 * scale * delta * valid / n_valid
    np.put_along_axis(gout[:K], batch.m.reshape(K, B, 1), gvals.reshape(K, B, 1), axis=2)
    grads = nn.backward(net.online, cache, gout)
    nn.adam_step(net.online, grads, net.adam, cfg.lr)
    return loss


def _cen_update(
    net: nn.NetworkParams,
    batch: PaddedBatch,
    cfg: QLearnerConfig,
    sizes: Sequence[int],
    ctable: np.ndarray,
    conditional: bool,
) -> float:
    """Double-Q update of the joint net; the conditional variant restricts the
    bootstrap argmax to joint macro-actions that keep every still-running
    agent on its macro."""
    inputs, emask, _ = joint_inputs(batch, sizes)
    q_on, _, cache = nn.forward_sequence(net.online, inputs, emask)
    q_tg, _, _ = nn.forward_sequence(net.target, inputs, emask)
    K, B = batch.m.shape
    valid = batch.mask > 0
    q_sa = gather_actions(q_on[:K], batch.m)
    nxt_on = q_on[1 : K + 1]
    if conditional:
        allowed = allowed_next_mask(batch, ctable)
        astar = np.argmax(np.where(allowed, nxt_on, -np.inf), axis=2)
    else:
        astar = np.argmax(nxt_on, axis=2)
    boot = gather_actions(q_tg[1 : K + 1], astar)
    exponent = np.ones_like(batch.tau) if cfg.literal_onestep_discount else batch.tau
    y = batch.rc + (cfg.gamma ** exponent) * (~batch.done) * boot
    delta = y - q_sa
    n_valid = max(1, int(valid.sum()))
    loss = float((delta * delta * valid).sum() / n_valid)
    gout = np.zeros_like(q_on)
    gvals = -2.0 * delta * valid / n_valid
    np.put_along_axis(gout[:K], batch.m.reshape(K, B, 1), gvals.reshape(K, B, 1), axis=2)
    grads = nn.backward(net.online, cache, gout)
    nn.adam_step(net.online, grads, net.adam, cfg.lr)
    return loss


def suggested_actions(
    cen_net: nn.NetworkParams,
    joint_batch: PaddedBatch,
    dec_lengths: np.ndarray,
    agent: int,
    sizes: Sequence[int],
    ctable: np.ndarray,
    conditional: bool,
) -> np.ndarray:
    """Per-agent bootstrap actions projected from the centralized net's
    (conditionally restricted) joint argmax at each of the agent's own
    decision records."""
    inputs, emask, _ = joint_inputs(joint_batch, sizes)
    q_on, _, _ = nn.forward_sequence(cen_net.online, inputs, emask)
    K, B = joint_batch.m.shape
    nxt = q_on[1 : K + 1]
    if conditional:
        allowed = allowed_next_mask(joint_batch, ctable)
        astar = np.argmax(np.where(allowed, nxt, -np.inf), axis=2)
    else:
        astar = np.argmax(nxt, axis=2)
    proj = ctable[astar, agent]            # [K, B]
    Kd = int(dec_lengths.max()) if len(dec_lengths) else 0
    out = np.zeros((max(Kd, 1), B), dtype=np.int64)
    jmask = joint_batch.mask > 0
    for b in range(B):
        rows = np.flatnonzero(jmask[:, b] & joint_batch.flags[:, b, agent])
        assert len(rows) == int(dec_lengths[b]), (
            "joint records flagged for an agent must match its own records"
        )
        out[: len(rows), b] = proj[rows, b]
    return out


# -- learners ------------------------------------------------------------------------


class _QLearnerBase:
    kind = "q"

    def __init__(self, env: MacroEnv, cfg: QLearnerConfig,
                 rng_init: np.random.Generator,
                 rng_explore: np.random.Generator,
                 rng_sample: np.random.Generator) -> None:
        self.cfg = cfg
        self.sizes = list(env.catalog_sizes)
        self.obs_widths = list(env.obs_widths)
        self.n_agents = env.n_agents
        self.rng_explore = rng_explore
        self.rng_sample = rng_sample
        self.tick_count = 0
        self.train_steps = 0
        self.sync_count = 0

    # subclasses define: driver, buffers, _train_step, nets()

    def set_epsilon(self, episode: int) -> None:
        self.driver.eps = epsilon_at(
            episode, self.cfg.eps_start, self.cfg.eps_end,
            self.cfg.eps_decay_episodes,
        )

    def current_epsilon(self) -> float:
        return self.driver.eps

    def _maybe_train(self) -> None:
        self.tick_count += 1
        if self.tick_count % self.cfg.train_freq == 0 and len(self.buffer) > 0:
            self._train_step()
            self.train_steps += 1
        if self.tick_count % self.cfg.target_sync == 0:
            self._sync_targets()
            self.sync_count += 1

    def _sample_mode(self) -> tuple[str, Optional[int]]:
        if self.cfg.trace_len is None:
            return "episode", None
        return "trace", self.cfg.trace_len

    def train_episode(self, env: MacroEnv, seed: int) -> float:
        """One behavior episode with mid-episode training on the configured
        tick schedule; returns the episode's discounted return."""
        obs, statuses = env.reset(seed)
        self.driver.begin_episode(obs)
        rec = EpisodeRecorder(
            env.n_agents, self.cfg.gamma, obs,
            behavior_eps=self.driver.eps, provenance="train", seed=seed,
        )
        ret, disc = 0.0, 1.0
        while True:
            current = self.driver.act(statuses, obs)
            res = env.step(current)
            rec.add_tick(
                current, res.reward,
                [st.terminated for st in res.statuses], res.observations,
            )
            ret += disc * res.reward
            disc *= self.cfg.gamma
            self._maybe_train()
            obs, statuses = res.observations, res.statuses
            if res.done:
                break
        self.buffer.push(rec.finish())
        return ret

    def _make_buffer(self, cls, provenance: Optional[str] = None):
        return cls(
            capacity_episodes=self.cfg.buffer_episodes,
            capacity_steps=self.cfg.buffer_steps,
            expected_provenance=provenance,
        )


class DecHDDRQN(_QLearnerBase):
    """Fully decentralized double DRQN with optional hysteretic scaling."""

    def __init__(self, env, cfg, rng_init, rng_explore, rng_sample) -> None:
        super().__init__(env, cfg, rng_init, rng_explore, rng_sample)
        self.nets = [
            nn.make_network(
                nn.NetworkSpec(
                    self.obs_widths[i] + self.sizes[i],
                    cfg.fc, cfg.fc, cfg.gru_dec, cfg.fc, self.sizes[i],
                ),
                rng_init,
            )
            for i in range(self.n_agents)
        ]
        self.buffer = self._make_buffer(MacCerts)
        self.driver = DecDriver(self.nets, self.sizes, rng_explore, cfg.eps_start)

    def make_driver(self, eps: float, rng=None) -> DecDriver:
        return DecDriver(self.nets, self.sizes, rng or self.rng_explore, eps)

    def _sync_targets(self) -> None:
        for net in self.nets:
            net.sync_target()

    def _train_step(self) -> float:
        mode, tl = self._sample_mode()
        slices = self.buffer.sample_slices(
            self.rng_sample, self.cfg.batch_size, mode, tl
        )
        total = 0.0
        for i in range(self.n_agents):
            batch = batch_from_slices(slices, view="dec", agent=i)
            total += _dec_update(self.nets[i], batch, self.cfg, self.sizes[i])
        return total

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, net in enumerate(self.nets):
            for k, v in net.online.items():
                out[f"agent{i}/{k}"] = v
        return out

    def load_checkpoint_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for i, net in enumerate(self.nets):
            for k in net.online:
                net.online[k] = arrays[f"agent{i}/{k}"].copy()
            net.sync_target()


class CenDDRQN(_QLearnerBase):
    """Fully centralized double DRQN over the joint catalog with conditional
    or unconditional target prediction."""

    def __init__(self, env, cfg, rng_init, rng_explore, rng_sample) -> None:
        super().__init__(env, cfg, rng_init, rng_explore, rng_sample)
        total = joint_catalog_size(self.sizes)
        width = sum(self.obs_widths) + sum(self.sizes)
        self.net = nn.make_network(
            nn.NetworkSpec(width, cfg.fc, cfg.fc, cfg.gru_cen, cfg.fc, total),
            rng_init,
        )
        self.ctable = comp_table(self.sizes)
        self.buffer = self._make_buffer(MacJerts)
        self.driver = JointDriver(self.net, self.sizes, rng_explore, cfg.eps_start)

    def make_driver(self, eps: float, rng=None) -> JointDriver:
        return JointDriver(self.net, self.sizes, rng or self.rng_explore, eps)

    def _sync_targets(self) -> None:
        self.net.sync_target()

    def _train_step(self) -> float:
        mode, tl = self._sample_mode()
        slices = self.buffer.sample_slices(
            self.rng_sample, self.cfg.batch_size, mode, tl
        )
        batch = batch_from_slices(slices, view="joint", catalog_sizes=self.sizes)
        return _cen_update(
            self.net, batch, self.cfg, self.sizes, self.ctable, self.cfg.conditional
        )

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        return {f"central/{k}": v for k, v in self.net.online.items()}

    def load_checkpoint_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k in self.net.online:
            self.net.online[k] = arrays[f"central/{k}"].copy()
        self.net.sync_target()


class MacDecDDRQN(_QLearnerBase):
    """CTDE double-Q learning: the centralized net is optimized first each
    iteration, then every decentralized net bootstraps through the joint
    (conditionally restricted) argmax projected onto its own catalog."""

    def __init__(self, env, cfg, rng_init, rng_explore, rng_sample) -> None:
        super().__init__(env, cfg, rng_init, rng_explore, rng_sample)
        total = joint_catalog_size(self.sizes)
        width = sum(self.obs_widths) + sum(self.sizes)
        self.cen_net = nn.make_network(
            nn.NetworkSpec(width, cfg.fc, cfg.fc, cfg.gru_cen, cfg.fc, total),
            rng_init,
        )
        self.nets = [
            nn.make_network(
                nn.NetworkSpec(
                    self.obs_widths[i] + self.sizes[i],
                    cfg.fc, cfg.fc, cfg.gru_dec, cfg.fc, self.sizes[i],
                ),
                rng_init,
            )
            for i in range(self.n_agents)
        ]
        self.ctable = comp_table(self.sizes)
        self.buffer = self._make_buffer(MacJerts)   # merged: episodes carry both views
        if cfg.explore == "cen":
            self.driver = JointDriver(self.cen_net, self.sizes, rng_explore, cfg.eps_start)
        else:
            self.driver = DecDriver(self.nets, self.sizes, rng_explore, cfg.eps_start)

    def make_driver(self, eps: float, rng=None) -> DecDriver:
        # execution is always decentralized
        return DecDriver(self.nets, self.sizes, rng or self.rng_explore, eps)

    def _sync_targets(self) -> None:
        self.cen_net.sync_target()
        for net in self.nets:
            net.sync_target()

    def _train_step(self) -> float:
        mode, tl = self._sample_mode()
        slices = self.buffer.sample_slices(
            self.rng_sample, self.cfg.batch_size, mode, tl
        )
        joint_batch = batch_from_slices(slices, view="joint", catalog_sizes=self.sizes)
        total = _cen_update(
            self.cen_net, joint_batch, self.cfg, self.sizes, self.ctable,
            self.cfg.conditional,
        )
        for i in range(self.n_agents):
            dec_batch = batch_from_slices(slices, view="dec", agent=i)
            lengths = dec_batch.mask.sum(axis=0).astype(np.int64)
            suggest = suggested_actions(
                self.cen_net, joint_batch, lengths, i, self.sizes, self.ctable,
                self.cfg.conditional,
            )
            total += _dec_update(
                self.nets[i], dec_batch, self.cfg, self.sizes[i],
                target_actions=suggest[: dec_batch.m.shape[0]],
            )
        return total

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {f"central/{k}": v for k, v in self.cen_net.online.items()}
        for i, net in enumerate(self.nets):
            for k, v in net.online.items():
                out[f"agent{i}/{k}"] = v
        return out

    def load_checkpoint_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k in self.cen_net.online:
            self.cen_net.online[k] = arrays[f"central/{k}"].copy()
        self.cen_net.sync_target()
        for i, net in enumerate(self.nets):
            for k in net.online:
                net.online[k] = arrays[f"agent{i}/{k}"].copy()
            net.sync_target()


class ParallelMacDecDDRQN:
    """Two parallel environments: the centralized net explores and trains on
    its own environment's joint experiences; the decentralized nets explore in
    the other environment and bootstrap through the centralized net.  Both
    buffers are provenance-checked; the environments reset independently."""

    kind = "q"

    def __init__(
        self,
        env: MacroEnv,
        cen_env: MacroEnv,
        cfg: QLearnerConfig,
        rng_init: np.random.Generator,
        rng_explore: np.random.Generator,
        rng_sample: np.random.Generator,
        rng_env: np.random.Generator,
    ) -> None:
        self.cfg = cfg
        self.sizes = list(env.catalog_sizes)
        self.obs_widths = list(env.obs_widths)
        self.n_agents = env.n_agents
        total = joint_catalog_size(self.sizes)
        width = sum(self.obs_widths) + sum(self.sizes)
        self.cen_net = nn.make_network(
            nn.NetworkSpec(width, cfg.fc, cfg.fc, cfg.gru_cen, cfg.fc, total),
            rng_init,
        )
        self.nets = [
            nn.make_network(
                nn.NetworkSpec(
                    self.obs_widths[i] + self.sizes[i],
                    cfg.fc, cfg.fc, cfg.gru_dec, cfg.fc, self.sizes[i],
                ),
                rng_init,
            )
            for i in range(self.n_agents)
        ]
        self.ctable = comp_table(self.sizes)
        self.cen_buffer = MacJerts(
            capacity_episodes=cfg.buffer_episodes,
            capacity_steps=cfg.buffer_steps,
            expected_provenance="cen",
        )
        self.dec_buffer = MacCerts(
            capacity_episodes=cfg.buffer_episodes,
            capacity_steps=cfg.buffer_steps,
            expected_provenance="dec",
        )
        self.cen_driver = JointDriver(self.cen_net, self.sizes, rng_explore, cfg.eps_start)
        self.driver = DecDriver(self.nets, self.sizes, rng_explore, cfg.eps_start)
        self.rng_sample = rng_sample
        self.rng_explore = rng_explore
        self.rng_env = rng_env
        self.cen_env = cen_env
        self.tick_count = 0
        self.train_steps = 0
        self.cen_resets: list[int] = []
        self.dec_resets: list[int] = []
        self._cen_obs = None
        self._cen_statuses = None
        self._cen_rec: Optional[EpisodeRecorder] = None

    def set_epsilon(self, episode: int) -> None:
        # both schedules anneal on the decentralized episode counter
        eps = epsilon_at(
            episode, self.cfg.eps_start, self.cfg.eps_end,
            self.cfg.eps_decay_episodes,
        )
        self.driver.eps = eps
        self.cen_driver.eps = eps

    def current_epsilon(self) -> float:
        return self.driver.eps

    def make_driver(self, eps: float, rng=None) -> DecDriver:
        return DecDriver(self.nets, self.sizes, rng or self.rng_explore, eps)

    def _start_cen_episode(self) -> None:
        seed = int(self.rng_env.integers(0, 2**63 - 1))
        obs, statuses = self.cen_env.reset(seed)
        self.cen_driver.begin_episode(obs)
        self._cen_obs, self._cen_statuses = obs, statuses
        self._cen_rec = EpisodeRecorder(
            self.cen_env.n_agents, self.cfg.gamma, obs,
            behavior_eps=self.cen_driver.eps, provenance="cen", seed=seed,
        )

    def _cen_tick(self) -> None:
        if self._cen_rec is None:
            self._start_cen_episode()
        current = self.cen_driver.act(self._cen_statuses, self._cen_obs)
        res = self.cen_env.step(current)
        self._cen_rec.add_tick(
            current, res.reward,
            [st.terminated for st in res.statuses], res.observations,
        )
        self._cen_obs, self._cen_statuses = res.observations, res.statuses
        if res.done:
            self.cen_buffer.push(self._cen_rec.finish())
            self.cen_resets.append(self.tick_count)
            self._start_cen_episode()

    def _train_step(self) -> None:
        mode = "episode" if self.cfg.trace_len is None else "trace"
        if len(self.cen_buffer) > 0:
            slices = self.cen_buffer.sample_slices(
                self.rng_sample, self.cfg.batch_size, mode, self.cfg.trace_len
            )
            batch = batch_from_slices(slices, view="joint", catalog_sizes=self.sizes)
            _cen_update(
                self.cen_net, batch, self.cfg, self.sizes, self.ctable,
                self.cfg.conditional,
            )
        if len(self.dec_buffer) > 0:
            slices = self.dec_buffer.sample_slices(
                self.rng_sample, self.cfg.batch_size, mode, self.cfg.trace_len
            )
            joint_batch = batch_from_slices(
                slices, view="joint", catalog_sizes=self.sizes
            )
            for i in range(self.n_agents):
                dec_batch = batch_from_slices(slices, view="dec", agent=i)
                lengths = dec_batch.mask.sum(axis=0).astype(np.int64)
                suggest = suggested_actions(
                    self.cen_net, joint_batch, lengths, i, self.sizes,
                    self.ctable, self.cfg.conditional,
                )
                _dec_update(
                    self.nets[i], dec_batch, self.cfg, self.sizes[i],
                    target_actions=suggest[: dec_batch.m.shape[0]],
                )

    def train_episode(self, env: MacroEnv, seed: int) -> float:
        """Run both environments tick-interleaved until the decentralized
        environment finishes one episode."""
        obs, statuses = env.reset(seed)
        self.driver.begin_episode(obs)
        rec = EpisodeRecorder(
            env.n_agents, self.cfg.gamma, obs,
            behavior_eps=self.driver.eps, provenance="dec", seed=seed,
        )
        ret, disc = 0.0, 1.0
        while True:
            self._cen_tick()
            current = self.driver.act(statuses, obs)
            res = env.step(current)
            rec.add_tick(
                current, res.reward,
                [st.terminated for st in res.statuses], res.observations,
            )
            ret += disc * res.reward
            disc *= self.cfg.gamma
            self.tick_count += 1
            if self.tick_count % self.cfg.train_freq == 0:
                self._train_step()
                self.train_steps += 1
            if self.tick_count % self.cfg.target_sync == 0:
                self.cen_net.sync_target()
                for net in self.nets:
                    net.sync_target()
            obs, statuses = res.observations, res.statuses
            if res.done:
                break
        self.dec_buffer.push(rec.finish())
        self.dec_resets.append(self.tick_count)
        return ret

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        out = {f"central/{k}": v for k, v in self.cen_net.online.items()}
        for i, net in enumerate(self.nets):
            for k, v in net.online.items():
                out[f"agent{i}/{k}"] = v
        return out

    def load_checkpoint_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k in self.cen_net.online:
            self.cen_net.online[k] = arrays[f"central/{k}"].copy()
        self.cen_net.sync_target()
        for i, net in enumerate(self.nets):
            for k in net.online:
                net.online[k] = arrays[f"agent{i}/{k}"].copy()
            net.sync_target()


# -- tabular learner for the oracle suites ------------------------------------------


class TabularCenDDRQN:
    """Joint Q-learning on history keys, with the same conditional double-Q
    target rule as the network learner; used on tabular instances where the
    exact values are enumerable."""

    def __init__(
        self,
        catalog_sizes: Sequence[int],
        obs_widths: Sequence[int],
        lr: float = 1.0,
        gamma: float = 1.0,
        conditional: bool = True,
        hysteretic_beta: Optional[float] = None,
    ) -> None:
        self.sizes = list(catalog_sizes)
        self.obs_widths = list(obs_widths)
        self.lr = lr
        self.gamma = gamma
        self.conditional = conditional
        self.beta = hysteretic_beta if hysteretic_beta is not None else lr
        self.total = joint_catalog_size(self.sizes)
        self.q: dict[tuple, np.ndarray] = {}
        self.q_target: dict[tuple, np.ndarray] = {}

    def _symbols(self, z: np.ndarray) -> tuple[int, ...]:
        out = []
        base = 0
        for w in self.obs_widths:
            out.append(int(np.argmax(z[base : base + w])))
            base += w
        return tuple(out)

    def _row(self, table: dict, key: tuple) -> np.ndarray:
        if key not in table:
            table[key] = np.zeros(self.total)
        return table[key]

    def history_keys(self, traj) -> list[tuple]:
        keys = []
        key = (self._symbols(traj.z[0]),)
        for k in range(traj.length):
            keys.append(key)
            key = key + (
                tuple(int(c) for c in traj.m_comp[k]),
                self._symbols(traj.z_next[k]),
            )
        keys.append(key)   # next-history key after the final record
        return keys

    def update_trajectory(self, traj) -> float:
        """One sweep of double-Q backups over a joint squeezed trajectory."""
        keys = self.history_keys(traj)
        total_abs_delta = 0.0
        for k in range(traj.length):
            a = int(traj.m[k])
            row = self._row(self.q, keys[k])
            if traj.done[k]:
                boot = 0.0
            else:
                nxt_on = self._row(self.q, keys[k + 1])
                if self.conditional:
                    forced = [
                        None if traj.flags[k][i] else int(traj.m_comp[k][i])
                        for i in range(len(self.sizes))
                    ]
                    allowed = ConditioningMask(tuple(forced)).mask(self.sizes)
                else:
                    allowed = np.ones(self.total, dtype=bool)
                astar = int(np.argmax(np.where(allowed, nxt_on, -np.inf)))
                boot = self._row(self.q_target, keys[k + 1])[astar]
            y = traj.rc[k] + self.gamma ** int(traj.tau[k]) * boot
            old = row[a]
            row[a] = hysteretic_update(old, y, self.lr, self.beta)
            total_abs_delta += abs(y - old)
        return total_abs_delta

    def sync_target(self) -> None:
        self.q_target = {k: v.copy() for k, v in self.q.items()}

    def values(self, key: tuple) -> np.ndarray:
        return self._row(self.q, key).copy()
