"""Replay structures for asynchronous macro-action trajectories.

Episodes are recorded at primitive-tick resolution and later "squeezed" down
to decision-point records:

- decentralized squeezing keeps the ticks where one agent's macro-action
  terminated (its concurrent replay view),
- joint squeezing keeps the ticks where any agent terminated (the joint
  replay view),
- the per-agent joint squeeze keeps the joint ticks but carries that agent's
  own accumulated reward and duration, with a flag marking which records may
  contribute TD losses.

Sampling is concurrent: every agent sees the same episode indices and trace
offsets.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import encode_joint, MacroEnv


def accumulate_reward(partial: float, tick_reward: float, gamma: float, elapsed: int) -> float:
    """Fold one tick into a macro-action's accumulating reward:
    partial + gamma**elapsed * tick_reward, where elapsed counts ticks since
    the macro started."""
    return partial + gamma ** elapsed * tick_reward


@dataclass
class ConcurrentStep:
    """One agent's primitive-tick experience view (observation at the running
    macro's choice time, the macro id, the observation after this tick, the
    partial accumulated reward, and the termination flag)."""

    z: np.ndarray
    m: int
    z_next: np.ndarray
    rc: float
    terminated: bool
    tau: int


@dataclass
class MacroEpisode:
    """One complete episode at primitive resolution, stored compactly.

    Stale observations are reconstructed on demand: an agent's observation
    after tick u is its most recent fresh observation at or before u.
    """

    n_agents: int
    gamma: float
    team_reward: np.ndarray          # [T]
    m: np.ndarray                    # [T, n] running macro ids
    term: np.ndarray                 # [T, n] terminated-at-tick flags
    reset_obs: list[np.ndarray]
    fresh_obs: list[np.ndarray]      # per agent [K_i, w_i] rows at term ticks
    term_ticks: list[np.ndarray]     # per agent sorted tick indices
    reset_state: Optional[np.ndarray] = None
    fresh_state: Optional[np.ndarray] = None   # [K_joint, ws] at any-term ticks
    joint_ticks: Optional[np.ndarray] = None
    behavior_eps: float = 0.0
    provenance: str = ""
    seed: int = 0

    @property
    def length(self) -> int:
        return len(self.team_reward)

    def obs_after(self, agent: int, t: int) -> np.ndarray:
        """Agent's observation after tick t (t = -1 gives the reset
        observation)."""
        idx = np.searchsorted(self.term_ticks[agent], t, side="right") - 1
        if idx < 0:
            return self.reset_obs[agent]
        return self.fresh_obs[agent][idx]

    def state_after(self, t: int) -> np.ndarray:
        if self.fresh_state is None:
            raise ValueError("episode was collected without state features")
        idx = np.searchsorted(self.joint_ticks, t, side="right") - 1
        if idx < 0:
            return self.reset_state
        return self.fresh_state[idx]

    def macro_start(self, agent: int, t: int) -> int:
        """First tick of the macro that agent is running at tick t."""
        ticks = self.term_ticks[agent]
        idx = np.searchsorted(ticks, t - 1, side="right") - 1
        return 0 if idx < 0 else int(ticks[idx]) + 1

    def joint_start(self, t: int) -> int:
        any_ticks = self.joint_ticks
        if any_ticks is None:
            any_ticks = np.flatnonzero(self.term.any(axis=1))
        idx = np.searchsorted(any_ticks, t - 1, side="right") - 1
        return 0 if idx < 0 else int(any_ticks[idx]) + 1

    def concurrent_step(self, agent: int, t: int) -> ConcurrentStep:
        """Materialize one agent's per-tick tuple; the partial reward covers
        the macro from its start tick through t."""
        s = self.macro_start(agent, t)
        rc = 0.0
        for u in range(s, t + 1):
            rc = accumulate_reward(rc, float(self.team_reward[u]), self.gamma, u - s)
        return ConcurrentStep(
            z=self.obs_after(agent, s - 1),
            m=int(self.m[t, agent]),
            z_next=self.obs_after(agent, t),
            rc=rc,
            terminated=bool(self.term[t, agent]),
            tau=t - s + 1,
        )


class EpisodeRecorder:
    """Accumulates per-tick data during a rollout and assembles the compact
    MacroEpisode at episode end."""

    def __init__(
        self,
        n_agents: int,
        gamma: float,
        reset_obs: Sequence[np.ndarray],
        reset_state: Optional[np.ndarray] = None,
        behavior_eps: float = 0.0,
        provenance: str = "",
        seed: int = 0,
    ) -> None:
        self.n = n_agents
        self.gamma = gamma
        self.reset_obs = [np.asarray(o, dtype=np.float64).copy() for o in reset_obs]
        self.reset_state = (
            None if reset_state is None else np.asarray(reset_state).copy()
        )
        self.collect_state = reset_state is not None
        self.behavior_eps = behavior_eps
        self.provenance = provenance
        self.seed = seed
        self._reward: list[float] = []
        self._m: list[list[int]] = []
        self._term: list[list[bool]] = []
        self._fresh: list[list[np.ndarray]] = [[] for _ in range(n_agents)]
        self._term_ticks: list[list[int]] = [[] for _ in range(n_agents)]
        self._fresh_state: list[np.ndarray] = []
        self._joint_ticks: list[int] = []
        self._t = 0

    def add_tick(
        self,
        current: Sequence[int],
        reward: float,
        term_flags: Sequence[bool],
        observations: Sequence[np.ndarray],
        state: Optional[np.ndarray] = None,
    ) -> None:
        self._reward.append(float(reward))
        self._m.append([int(m) for m in current])
        self._term.append([bool(f) for f in term_flags])
        for i in range(self.n):
            if term_flags[i]:
                self._fresh[i].append(np.asarray(observations[i]).copy())
                self._term_ticks[i].append(self._t)
        if any(term_flags):
            self._joint_ticks.append(self._t)
            if self.collect_state:
                self._fresh_state.append(np.asarray(state).copy())
        self._t += 1

    def finish(self) -> MacroEpisode:
        return MacroEpisode(
            n_agents=self.n,
            gamma=self.gamma,
            team_reward=np.asarray(self._reward, dtype=np.float64),
            m=np.asarray(self._m, dtype=np.int64),
            term=np.asarray(self._term, dtype=bool),
            reset_obs=self.reset_obs,
            fresh_obs=[
                np.asarray(rows, dtype=np.float64).reshape(len(rows), -1)
                for rows in self._fresh
            ],
            term_ticks=[
                np.asarray(ticks, dtype=np.int64) for ticks in self._term_ticks
            ],
            reset_state=self.reset_state,
            fresh_state=(
                np.asarray(self._fresh_state, dtype=np.float64)
                if self.collect_state
                else None
            ),
            joint_ticks=np.asarray(self._joint_ticks, dtype=np.int64),
            behavior_eps=self.behavior_eps,
            provenance=self.provenance,
            seed=self.seed,
        )


def collect_episode(
    env: MacroEnv,
    seed: int,
    driver,
    gamma: float,
    collect_state: bool = False,
    behavior_eps: float = 0.0,
    provenance: str = "",
) -> MacroEpisode:
    """Roll one episode to completion.  `driver` supplies begin_episode(obs)
    and act(statuses, obs) -> joint macro ids (changing only terminated
    agents).  Episode end force-terminates every running macro so the final
    partial experience is flushed."""
    obs, statuses = env.reset(seed)
    driver.begin_episode(obs)
    rec = EpisodeRecorder(
        env.n_agents,
        gamma,
        obs,
        env.state_features().copy() if collect_state else None,
        behavior_eps,
        provenance,
        seed,
    )
    while True:
        current = [int(m) for m in driver.act(statuses, obs)]
        result = env.step(current)
        rec.add_tick(
            current,
            result.reward,
            [st.terminated for st in result.statuses],
            result.observations,
            env.state_features() if collect_state else None,
        )
        obs = result.observations
        statuses = result.statuses
        if result.done:
            return rec.finish()


# -- squeezed trajectories ------------------------------------------------------


@dataclass
class SqueezedTrajectory:
    """Decision-point records of one episode (or trace slice).

    For the joint views, `m` holds the product-catalog id and `m_comp` the
    per-agent components; `flags` marks who terminated at each record and
    `loss_flag` marks the records that may contribute TD losses (always all
    True except in the per-agent joint view).
    """

    kind: str
    z: np.ndarray                 # [K, w]
    m: np.ndarray                 # [K]
    z_next: np.ndarray            # [K, w]
    rc: np.ndarray                # [K]
    tau: np.ndarray               # [K]
    done: np.ndarray              # [K] bool
    prev_m: np.ndarray            # [K] id of preceding macro (-1 at episode start)
    eps: float = 0.0
    m_comp: Optional[np.ndarray] = None        # [K, n]
    prev_m_comp: Optional[np.ndarray] = None   # [K, n]
    flags: Optional[np.ndarray] = None         # [K, n]
    undone_start: Optional[np.ndarray] = None  # [K, n] running at segment start
    loss_flag: Optional[np.ndarray] = None     # [K]
    x: Optional[np.ndarray] = None             # [K, ws]
    x_next: Optional[np.ndarray] = None

    @property
    def length(self) -> int:
        return len(self.m)


def _segment_reward(ep: MacroEpisode, start: int, stop_inclusive: int) -> float:
    rc = 0.0
    for u in range(start, stop_inclusive + 1):
        rc = accumulate_reward(rc, float(ep.team_reward[u]), ep.gamma, u - start)
    return rc


def squeeze_decentralized(
    ep: MacroEpisode, agent: int, start: int = 0, stop: Optional[int] = None
) -> SqueezedTrajectory:
    """Keep exactly the ticks where the agent's macro terminated.  Each record
    carries the macro's full accumulated reward and duration, measured from
    the macro's true start tick even when a trace slice cuts into it."""
    stop = ep.length if stop is None else stop
    kept = [t for t in range(start, stop) if ep.term[t, agent]]
    z, z2, ms, rcs, taus, dones, prevs = [], [], [], [], [], [], []
    for t in kept:
        s = ep.macro_start(agent, t)
        z.append(ep.obs_after(agent, s - 1))
        z2.append(ep.obs_after(agent, t))
        ms.append(int(ep.m[t, agent]))
        rcs.append(_segment_reward(ep, s, t))
        taus.append(t - s + 1)
        dones.append(t == ep.length - 1)
        prevs.append(int(ep.m[s - 1, agent]) if s > 0 else -1)
    w = len(ep.reset_obs[agent])
    return SqueezedTrajectory(
        kind="dec",
        z=np.asarray(z, dtype=np.float64).reshape(len(kept), w),
        m=np.asarray(ms, dtype=np.int64),
        z_next=np.asarray(z2, dtype=np.float64).reshape(len(kept), w),
        rc=np.asarray(rcs, dtype=np.float64),
        tau=np.asarray(taus, dtype=np.int64),
        done=np.asarray(dones, dtype=bool),
        prev_m=np.asarray(prevs, dtype=np.int64),
        eps=ep.behavior_eps,
    )


def _joint_obs(ep: MacroEpisode, t: int) -> np.ndarray:
    return np.concatenate([ep.obs_after(i, t) for i in range(ep.n_agents)])


def _squeeze_any(
    ep: MacroEpisode,
    start: int,
    stop: Optional[int],
    catalog_sizes: Optional[Sequence[int]],
    with_state: bool,
    reward_agent: Optional[int],
) -> SqueezedTrajectory:
    """Shared machinery: records at any-agent-termination ticks.  The reward
    and duration fields are the joint segment's (reward_agent None) or the
    given agent's own macro accumulation."""
    stop = ep.length if stop is None else stop
    n = ep.n_agents
    kept = [t for t in range(start, stop) if ep.term[t].any()]
    sizes = catalog_sizes
    z, z2, rcs, taus, dones = [], [], [], [], []
    comps, prev_comps, flag_rows, undone_rows, loss_flags = [], [], [], [], []
    xs, x2s = [], []
    for t in kept:
        s = ep.joint_start(t)
        z.append(_joint_obs(ep, s - 1) if s > 0 else np.concatenate(ep.reset_obs))
        z2.append(_joint_obs(ep, t))
        if reward_agent is None:
            rcs.append(_segment_reward(ep, s, t))
            taus.append(t - s + 1)
        else:
            sa = ep.macro_start(reward_agent, t)
            rcs.append(_segment_reward(ep, sa, t))
            taus.append(t - sa + 1)
        dones.append(t == ep.length - 1)
        comps.append(list(ep.m[t]))
        prev_comps.append(list(ep.m[s - 1]) if s > 0 else [-1] * n)
        flag_rows.append(list(ep.term[t]))
        undone_rows.append(
            list(~ep.term[s - 1]) if s > 0 else [False] * n
        )
        loss_flags.append(
            True if reward_agent is None else bool(ep.term[t, reward_agent])
        )
        if with_state:
            xs.append(ep.state_after(s - 1))
            x2s.append(ep.state_after(t))
    m_comp = np.asarray(comps, dtype=np.int64).reshape(len(kept), n)
    prev_m_comp = np.asarray(prev_comps, dtype=np.int64).reshape(len(kept), n)
    if sizes is not None:
        joint_ids = np.array(
            [encode_joint(row, sizes) for row in m_comp], dtype=np.int64
        )
        prev_ids = np.array(
            [-1 if row[0] < 0 else encode_joint(row, sizes) for row in prev_m_comp],
            dtype=np.int64,
        )
    else:
        joint_ids = np.zeros(len(kept), dtype=np.int64)
        prev_ids = np.full(len(kept), -1, dtype=np.int64)
    wj = sum(len(o) for o in ep.reset_obs)
    return SqueezedTrajectory(
        kind="joint" if reward_agent is None else "iaicc",
        z=np.asarray(z, dtype=np.float64).reshape(len(kept), wj),
        m=joint_ids,
        z_next=np.asarray(z2, dtype=np.float64).reshape(len(kept), wj),
        rc=np.asarray(rcs, dtype=np.float64),
        tau=np.asarray(taus, dtype=np.int64),
        done=np.asarray(dones, dtype=bool),
        prev_m=prev_ids,
        eps=ep.behavior_eps,
        m_comp=m_comp,
        prev_m_comp=prev_m_comp,
        flags=np.asarray(flag_rows, dtype=bool).reshape(len(kept), n),
        undone_start=np.asarray(undone_rows, dtype=bool).reshape(len(kept), n),
        loss_flag=np.asarray(loss_flags, dtype=bool),
        x=(np.asarray(xs, dtype=np.float64) if with_state else None),
        x_next=(np.asarray(x2s, dtype=np.float64) if with_state else None),
    )


def squeeze_joint(
    ep: MacroEpisode,
    catalog_sizes: Optional[Sequence[int]] = None,
    start: int = 0,
    stop: Optional[int] = None,
    with_state: bool = False,
) -> SqueezedTrajectory:
    """Keep the ticks where at least one agent terminated; the joint reward
    accumulates between consecutive kept ticks and the joint duration is the
    tick gap."""
    return _squeeze_any(ep, start, stop, catalog_sizes, with_state, None)


def squeeze_iaicc(
    ep: MacroEpisode,
    agent: int,
    catalog_sizes: Optional[Sequence[int]] = None,
    start: int = 0,
    stop: Optional[int] = None,
    with_state: bool = False,
) -> SqueezedTrajectory:
    """Joint-termination records carrying one agent's own accumulated reward
    and duration; loss_flag marks the records where that agent terminated."""
    return _squeeze_any(ep, start, stop, catalog_sizes, with_state, agent)


# -- ring buffers -----------------------------------------------------------------


class EpisodeBuffer:
    """Ring buffer of whole episodes.  Capacity is counted either in episodes
    or in primitive steps; eviction always removes whole episodes, oldest
    first."""

    def __init__(
        self,
        capacity_episodes: Optional[int] = None,
        capacity_steps: Optional[int] = None,
        expected_provenance: Optional[str] = None,
    ) -> None:
        if (capacity_episodes is None) == (capacity_steps is None):
            raise ValueError("set exactly one of capacity_episodes/capacity_steps")
        self.capacity_episodes = capacity_episodes
        self.capacity_steps = capacity_steps
        self.expected_provenance = expected_provenance
        self._episodes: deque[MacroEpisode] = deque()
        self._total_steps = 0

    def __len__(self) -> int:
        return len(self._episodes)

    @property
    def total_steps(self) -> int:
        return self._total_steps

    def __iter__(self) -> Iterator[MacroEpisode]:
        return iter(self._episodes)

    def push(self, ep: MacroEpisode) -> None:
        if self.expected_provenance is not None:
            assert ep.provenance == self.expected_provenance, (
                f"cross-buffer contamination: episode from {ep.provenance!r} "
                f"pushed into {self.expected_provenance!r} buffer"
            )
        self._episodes.append(ep)
        self._total_steps += ep.length
        if self.capacity_episodes is not None:
            while len(self._episodes) > self.capacity_episodes:
                self._evict()
        else:
            while self._total_steps > self.capacity_steps and len(self._episodes) > 1:
                self._evict()

    def _evict(self) -> None:
        old = self._episodes.popleft()
        self._total_steps -= old.length

    def clear(self) -> None:
        self._episodes.clear()
        self._total_steps = 0

    def sample_slices(
        self,
        rng: np.random.Generator,
        batch_size: int,
        mode: str = "episode",
        trace_len: Optional[int] = None,
    ) -> list[tuple[MacroEpisode, int, int]]:
        """Concurrent sampling: the slice (episode, offset) choices are shared
        by every agent's view of the batch."""
        if not self._episodes:
            raise ValueError("cannot sample from an empty buffer")
        eps = list(self._episodes)
        idx = rng.integers(0, len(eps), size=batch_size)
        out = []
        for i in idx:
            ep = eps[int(i)]
            if mode == "episode":
                out.append((ep, 0, ep.length))
            elif mode == "trace":
                if trace_len is None:
                    raise ValueError("trace mode requires trace_len")
                if ep.length <= trace_len:
                    out.append((ep, 0, ep.length))
                else:
                    off = int(rng.integers(0, ep.length - trace_len + 1))
                    out.append((ep, off, off + trace_len))
            else:
                raise ValueError(f"unknown sampling mode {mode!r}")
        return out


class MacCerts(EpisodeBuffer):
    """Concurrent per-agent replay trajectories (decentralized squeezing)."""


class MacJerts(EpisodeBuffer):
    """Joint replay trajectories (any-agent-termination squeezing)."""


# -- padding ----------------------------------------------------------------------


@dataclass
class PaddedBatch:
    """Squeezed trajectories padded to a common record count, mask marks the
    valid records."""

    z: np.ndarray            # [K, B, w]
    m: np.ndarray            # [K, B]
    z_next: np.ndarray       # [K, B, w]
    rc: np.ndarray           # [K, B]
    tau: np.ndarray          # [K, B]
    done: np.ndarray         # [K, B]
    prev_m: np.ndarray       # [K, B]
    mask: np.ndarray         # [K, B]
    eps: np.ndarray          # [B]
    m_comp: Optional[np.ndarray] = None
    prev_m_comp: Optional[np.ndarray] = None
    flags: Optional[np.ndarray] = None
    undone_start: Optional[np.ndarray] = None
    loss_flag: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    x_next: Optional[np.ndarray] = None

    @property
    def max_len(self) -> int:
        return self.z.shape[0]

    @property
    def batch_size(self) -> int:
        return self.z.shape[1]


def pad_trajectories(trajs: Sequence[SqueezedTrajectory]) -> PaddedBatch:
    B = len(trajs)
    K = max(tr.length for tr in trajs)
    K = max(K, 1)
    w = trajs[0].z.shape[1]
    n = trajs[0].m_comp.shape[1] if trajs[0].m_comp is not None else 0
    has_state = trajs[0].x is not None
    ws = trajs[0].x.shape[1] if has_state else 0

    batch = PaddedBatch(
        z=np.zeros((K, B, w)),
        m=np.zeros((K, B), dtype=np.int64),
        z_next=np.zeros((K, B, w)),
        rc=np.zeros((K, B)),
        tau=np.ones((K, B), dtype=np.int64),
        done=np.zeros((K, B), dtype=bool),
        prev_m=np.full((K, B), -1, dtype=np.int64),
        mask=np.zeros((K, B)),
        eps=np.array([tr.eps for tr in trajs], dtype=np.float64),
        m_comp=(np.zeros((K, B, n), dtype=np.int64) if n else None),
        prev_m_comp=(np.full((K, B, n), -1, dtype=np.int64) if n else None),
        flags=(np.zeros((K, B, n), dtype=bool) if n else None),
        undone_start=(np.zeros((K, B, n), dtype=bool) if n else None),
        loss_flag=(
            np.zeros((K, B), dtype=bool) if trajs[0].loss_flag is not None else None
        ),
        x=(np.zeros((K, B, ws)) if has_state else None),
        x_next=(np.zeros((K, B, ws)) if has_state else None),
    )
    for b, tr in enumerate(trajs):
        k = tr.length
        if k == 0:
            continue
        batch.z[:k, b] = tr.z
        batch.m[:k, b] = tr.m
        batch.z_next[:k, b] = tr.z_next
        batch.rc[:k, b] = tr.rc
        batch.tau[:k, b] = tr.tau
        batch.done[:k, b] = tr.done
        batch.prev_m[:k, b] = tr.prev_m
        batch.mask[:k, b] = 1.0
        if tr.m_comp is not None:
            batch.m_comp[:k, b] = tr.m_comp
            batch.prev_m_comp[:k, b] = tr.prev_m_comp
            batch.flags[:k, b] = tr.flags
            batch.undone_start[:k, b] = tr.undone_start
        if tr.loss_flag is not None:
            batch.loss_flag[:k, b] = tr.loss_flag
        if has_state:
            batch.x[:k, b] = tr.x
            batch.x_next[:k, b] = tr.x_next
    return batch


def save_episode(path: str, ep: MacroEpisode) -> None:
    """Serialize one episode in the checkpoint container format (used for
    oracle replay in tests)."""
    from . import nn

    arrays = {
        "team_reward": ep.team_reward,
        "m": ep.m.astype(np.float64),
        "term": ep.term.astype(np.float64),
        "joint_ticks": ep.joint_ticks.astype(np.float64),
    }
    for i in range(ep.n_agents):
        arrays[f"reset_obs{i}"] = ep.reset_obs[i]
        arrays[f"fresh_obs{i}"] = ep.fresh_obs[i]
        arrays[f"term_ticks{i}"] = ep.term_ticks[i].astype(np.float64)
    if ep.reset_state is not None:
        arrays["reset_state"] = ep.reset_state
        arrays["fresh_state"] = ep.fresh_state
    meta = {
        "n_agents": ep.n_agents, "gamma": ep.gamma,
        "behavior_eps": ep.behavior_eps, "provenance": ep.provenance,
        "seed": ep.seed,
    }
    nn.save_checkpoint(path, arrays, meta)


def load_episode(path: str) -> MacroEpisode:
    from . import nn

    arrays, meta = nn.load_checkpoint(path)
    n = int(meta["n_agents"])
    return MacroEpisode(
        n_agents=n,
        gamma=float(meta["gamma"]),
        team_reward=arrays["team_reward"],
        m=arrays["m"].astype(np.int64),
        term=arrays["term"].astype(bool),
        reset_obs=[arrays[f"reset_obs{i}"] for i in range(n)],
        fresh_obs=[arrays[f"fresh_obs{i}"] for i in range(n)],
        term_ticks=[arrays[f"term_ticks{i}"].astype(np.int64) for i in range(n)],
        reset_state=arrays.get("reset_state"),
        fresh_state=arrays.get("fresh_state"),
        joint_ticks=arrays["joint_ticks"].astype(np.int64),
        behavior_eps=float(meta["behavior_eps"]),
        provenance=str(meta["provenance"]),
        seed=int(meta["seed"]),
    )


def sample_batch(
    buffer: EpisodeBuffer,
    rng: np.random.Generator,
    batch_size: int,
    mode: str = "episode",
    trace_len: Optional[int] = None,
    view: str = "dec",
    agent: Optional[int] = None,
    catalog_sizes: Optional[Sequence[int]] = None,
    with_state: bool = False,
) -> PaddedBatch:
    """Sample, squeeze, and pad in one call.  view selects decentralized
    (one agent), joint, or per-agent joint squeezing."""
    slices = buffer.sample_slices(rng, batch_size, mode, trace_len)
    return batch_from_slices(
        slices, view=view, agent=agent, catalog_sizes=catalog_sizes,
        with_state=with_state,
    )


def batch_from_slices(
    slices: Sequence[tuple[MacroEpisode, int, int]],
    view: str = "dec",
    agent: Optional[int] = None,
    catalog_sizes: Optional[Sequence[int]] = None,
    with_state: bool = False,
) -> PaddedBatch:
    if view == "dec":
        trajs = [squeeze_decentralized(ep, agent, a, b) for ep, a, b in slices]
    elif view == "joint":
        trajs = [
            squeeze_joint(ep, catalog_sizes, a, b, with_state) for ep, a, b in slices
        ]
    elif view == "iaicc":
        trajs = [
            squeeze_iaicc(ep, agent, catalog_sizes, a, b, with_state)
            for ep, a, b in slices
        ]
    else:
        raise ValueError(f"unknown view {view!r}")
    return pad_trajectories(trajs)
