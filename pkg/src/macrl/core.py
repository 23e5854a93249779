"""Core abstractions for asynchronous macro-action environments.

An environment is ticked at primitive resolution.  Each agent runs one
macro-action at a time; the environment decides when it terminates.  Between
terminations the agent's macro-observation is repeated verbatim, so learners
only ever see fresh observations at decision points.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

AgentId = int


class SwitchWhileRunning(Exception):
    """A running agent's macro id was changed before the environment
    terminated it."""


class NumericError(Exception):
    """A non-finite value appeared where a finite one is required."""


@dataclass
class MacroAction:
    """A macro-action pick: catalog id plus ticks elapsed since it began."""

    id: int
    duration_so_far: int = 0


@dataclass
class ExecutionStatus:
    """Per-agent execution state of the current macro-action."""

    terminated: bool = True
    elapsed: int = 0
    start_tick: int = 0

    def copy(self) -> "ExecutionStatus":
        return replace(self)


@dataclass
class StepResult:
    """Outcome of one primitive tick."""

    reward: float
    statuses: list[ExecutionStatus]
    observations: list[np.ndarray]
    done: bool


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Split one run seed into independent streams so exploration draws never
    perturb environment dynamics (or vice versa)."""
    children = np.random.SeedSequence(seed).spawn(5)
    names = ("env", "explore", "init", "eval", "sample")
    return {n: np.random.default_rng(s) for n, s in zip(names, children)}


class MacroEnv(ABC):
    """Environment contract: primitive-tick stepping with per-agent
    macro-action execution tracked by the environment itself.

    Subclasses implement `_do_reset` and `_do_tick`; this base class owns the
    bookkeeping that the contract requires: status validation, observation
    repetition for still-running agents, horizon cutoff, and force-termination
    of every macro at episode end so the final partial experience is flushed.
    """

    n_agents: int
    horizon: int

    def __init__(self) -> None:
        self._tick = 0
        self._done = True
        self._statuses: list[ExecutionStatus] = []
        self._current: list[int] = []
        self._last_obs: list[np.ndarray] = []

    # -- catalog ------------------------------------------------------------

    @property
    @abstractmethod
    def macro_names(self) -> tuple[tuple[str, ...], ...]:
        """Per-agent macro-action catalogs, index = macro id."""

    @property
    def catalog_sizes(self) -> tuple[int, ...]:
        return tuple(len(names) for names in self.macro_names)

    @property
    @abstractmethod
    def obs_widths(self) -> tuple[int, ...]:
        """Per-agent macro-observation feature widths."""

    @property
    def state_width(self) -> int:
        return len(self.state_features())

    @abstractmethod
    def state_features(self) -> np.ndarray:
        """Ground-truth state as a normalized feature vector."""

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed: int) -> tuple[list[np.ndarray], list[ExecutionStatus]]:
        """Start an episode.  Deterministic for a fixed seed.  All agents are
        gated to choose a macro-action at tick 1."""
        self._tick = 0
        self._done = False
        self._statuses = [ExecutionStatus(True, 0, 0) for _ in range(self.n_agents)]
        self._current = [-1] * self.n_agents
        obs = self._do_reset(int(seed))
        self._last_obs = [np.asarray(o, dtype=np.float64) for o in obs]
        return [o.copy() for o in self._last_obs], [s.copy() for s in self._statuses]

    def step(self, joint: Sequence[int]) -> StepResult:
        if self._done:
            raise RuntimeError("step() after episode end; call reset()")
        joint = [int(m) for m in joint]
        for i, st in enumerate(self._statuses):
            if not st.terminated and joint[i] != self._current[i]:
                raise SwitchWhileRunning(
                    f"agent {i} is running macro {self._current[i]} "
                    f"but was given {joint[i]}"
                )
        self._tick += 1
        for i, st in enumerate(self._statuses):
            if st.terminated:
                self._current[i] = joint[i]
                st.terminated = False
                st.elapsed = 0
                st.start_tick = self._tick
        reward, term, fresh_obs, done = self._do_tick(list(self._current))
        if self._tick >= self.horizon:
            done = True
        for i, st in enumerate(self._statuses):
            st.elapsed += 1
            st.terminated = bool(term[i]) or done
            if st.terminated and fresh_obs[i] is not None:
                self._last_obs[i] = np.asarray(fresh_obs[i], dtype=np.float64)
        self._done = done
        return StepResult(
            reward=float(reward),
            statuses=[s.copy() for s in self._statuses],
            observations=[o.copy() for o in self._last_obs],
            done=done,
        )

    @property
    def tick(self) -> int:
        return self._tick

    @abstractmethod
    def _do_reset(self, seed: int) -> list[np.ndarray]:
        """Initialize internal state; return initial per-agent observations."""

    @abstractmethod
    def _do_tick(
        self, current: list[int]
    ) -> tuple[float, list[bool], list[Optional[np.ndarray]], bool]:
        """Advance one primitive tick under the running macro ids.

        Returns (team reward, per-agent terminated flags, per-agent fresh
        observations for agents that terminated (None otherwise), done).
        """


# -- decision gating ----------------------------------------------------------


def decision_gate(
    statuses: Sequence[ExecutionStatus],
    current: Sequence[int],
    choose: Callable[[AgentId], int],
) -> list[MacroAction]:
    """Gate asynchronous action selection: invoke the choice function only for
    agents whose macro-action terminated; running agents keep their macro id
    and their elapsed counter."""
    joint: list[MacroAction] = []
    for i, st in enumerate(statuses):
        if st.terminated:
            joint.append(MacroAction(int(choose(i)), 0))
        else:
            joint.append(MacroAction(int(current[i]), st.elapsed))
    return joint


def joint_decision_gate(
    statuses: Sequence[ExecutionStatus],
    current: Sequence[int],
    choose_joint: Callable[[list[Optional[int]]], Sequence[int]],
) -> list[MacroAction]:
    """Centralized variant: the choice function picks a full joint macro but
    must agree with every still-running agent (their forced ids are passed
    in)."""
    forced: list[Optional[int]] = [
        None if st.terminated else int(current[i]) for i, st in enumerate(statuses)
    ]
    picked = list(choose_joint(forced))
    joint: list[MacroAction] = []
    for i, st in enumerate(statuses):
        if forced[i] is not None and picked[i] != forced[i]:
            raise SwitchWhileRunning(
                f"joint choice changed running agent {i}: "
                f"{forced[i]} -> {picked[i]}"
            )
        elapsed = 0 if st.terminated else st.elapsed
        joint.append(MacroAction(int(picked[i]), elapsed))
    return joint


# -- joint macro-action catalogs ----------------------------------------------


def joint_catalog_size(sizes: Sequence[int]) -> int:
    n = 1
    for s in sizes:
        n *= int(s)
    return n


def joint_strides(sizes: Sequence[int]) -> tuple[int, ...]:
    """Mixed-radix strides; agent 0 is the most significant digit."""
    strides = [1] * len(sizes)
    for i in range(len(sizes) - 2, -1, -1):
        strides[i] = strides[i + 1] * int(sizes[i + 1])
    return tuple(strides)


def encode_joint(components: Sequence[int], sizes: Sequence[int]) -> int:
    strides = joint_strides(sizes)
    return int(sum(int(c) * s for c, s in zip(components, strides)))


def decode_joint(joint_id: int, sizes: Sequence[int]) -> tuple[int, ...]:
    out = []
    rem = int(joint_id)
    for s in joint_strides(sizes):
        out.append(rem // s)
        rem = rem % s
    return tuple(out)


def consistent_mask(
    forced: Sequence[Optional[int]], sizes: Sequence[int]
) -> np.ndarray:
    """Boolean mask over the product catalog selecting the joint macro-actions
    that agree with every forced (still-running) component."""
    total = joint_catalog_size(sizes)
    mask = np.ones(total, dtype=bool)
    strides = joint_strides(sizes)
    ids = np.arange(total)
    for i, f in enumerate(forced):
        if f is None:
            continue
        comp = (ids // strides[i]) % sizes[i]
        mask &= comp == int(f)
    return mask


# -- trace dump -----------------------------------------------------------------


def trace_tick_line(
    tick: int, macro_ids: Sequence[int], terminated: Sequence[bool], reward: float
) -> str:
    """One line per primitive tick: tick, per-agent macro id, per-agent
    terminated flag, team reward."""
    ms = ",".join(str(int(m)) for m in macro_ids)
    ts = ",".join("1" if t else "0" for t in terminated)
    return f"t={tick} m=[{ms}] term=[{ts}] r={reward:.6g}"


def trace_decision_line(tick: int, agent: AgentId, macro_name: str) -> str:
    return f"t={tick} agent={agent} choose {macro_name}"
