"""Brute-force ground truth for tests: exact macro-level Bellman values on
tabular instances, an independently written squeeze filter, scripted
best-effort-optimal returns, and central-difference gradients.

Everything here is a separate code path from the production modules: values
are computed by exhaustive tree walks over histories, and the squeeze oracle
re-derives every field from raw per-tick data with plain loops.
"""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .buffers import MacroEpisode, SqueezedTrajectory
from .core import encode_joint


# -- tabular problem description ---------------------------------------------------


@dataclass(frozen=True)
class TabularMacDecSpec:
    """Explicit enumeration of a tiny asynchronous macro-action problem:
    states, per-agent macro catalogs with fixed durations, per-tick transition
    and reward tables keyed by the running joint macro, and per-agent
    termination-time observation symbols by state."""

    n_agents: int
    n_states: int
    initial_state: int
    horizon: int
    durations: tuple[tuple[int, ...], ...]
    transitions: dict[tuple[int, tuple[int, ...]], tuple[tuple[int, float], ...]]
    rewards: dict[tuple[int, tuple[int, ...]], float]
    obs: tuple[tuple[int, ...], ...]
    terminal_states: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        for i, durs in enumerate(self.durations):
            if not durs or any(d < 1 for d in durs):
                raise ValueError(f"agent {i} durations must all be >= 1")
        for (s, mvec), outcomes in self.transitions.items():
            if not (0 <= s < self.n_states):
                raise ValueError(f"transition row state {s} out of range")
            total = sum(p for _, p in outcomes)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(
                    f"transition row {(s, mvec)} probabilities sum to {total}"
                )
            for s2, _ in outcomes:
                if not (0 <= s2 < self.n_states):
                    raise ValueError(f"transition target {s2} out of range")
        for row in self.obs:
            if len(row) != self.n_states:
                raise ValueError("observation tables must cover every state")

    @property
    def catalog_sizes(self) -> tuple[int, ...]:
        return tuple(len(d) for d in self.durations)

    @property
    def obs_symbol_counts(self) -> tuple[int, ...]:
        return tuple(max(row) + 1 for row in self.obs)

    def outcomes(self, s: int, mvec: tuple[int, ...]) -> tuple[tuple[int, float], ...]:
        return self.transitions.get((s, mvec), ((s, 1.0),))

    def reward(self, s: int, mvec: tuple[int, ...]) -> float:
        return self.rewards.get((s, mvec), 0.0)


def load_tabular_spec(path: str | Path) -> TabularMacDecSpec:
    """Parse the structured-text table format (see fixtures/)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path, "r", encoding="utf-8") as f:
        parser.read_file(f)
    try:
        gen = parser["general"]
        n_agents = gen.getint("agents")
        n_states = gen.getint("states")
        initial = gen.getint("initial")
        horizon = gen.getint("horizon")
        durations = tuple(
            tuple(int(x) for x in parser["durations"][f"agent{i}"].split())
            for i in range(n_agents)
        )
        transitions: dict = {}
        if parser.has_section("transitions"):
            for key, val in parser["transitions"].items():
                lhs, arrow, target = key.partition("->")
                if not arrow:
                    raise ValueError(f"malformed transition key {key!r}")
                parts = [int(x) for x in lhs.split()]
                s, mvec = parts[0], tuple(parts[1:])
                if len(mvec) != n_agents:
                    raise ValueError(f"transition key {key!r} has wrong arity")
                s2 = int(target.strip())
                transitions.setdefault((s, mvec), []).append((s2, float(val)))
        rewards: dict = {}
        if parser.has_section("rewards"):
            for key, val in parser["rewards"].items():
                parts = [int(x) for x in key.split()]
                if len(parts) != n_agents + 1:
                    raise ValueError(f"reward key {key!r} has wrong arity")
                rewards[(parts[0], tuple(parts[1:]))] = float(val)
        obs = tuple(
            tuple(int(x) for x in parser["observations"][f"agent{i}"].split())
            for i in range(n_agents)
        )
        terminal: frozenset[int] = frozenset()
        if parser.has_section("terminal"):
            raw = parser["terminal"].get("states", "").split()
            terminal = frozenset(int(x) for x in raw)
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed tabular spec {path}: {exc}") from exc
    return TabularMacDecSpec(
        n_agents=n_agents,
        n_states=n_states,
        initial_state=initial,
        horizon=horizon,
        durations=tuple(tuple(d) for d in durations),
        transitions={k: tuple(v) for k, v in transitions.items()},
        rewards=rewards,
        obs=obs,
        terminal_states=terminal,
    )


def fixture_path(name: str) -> Path:
    from importlib import resources

    return Path(str(resources.files("macrl") / "fixtures" / f"{name}.cfg"))


# -- exact values by exhaustive tree walk -------------------------------------------

PolicyFn = Callable[[tuple], Sequence[tuple[int, float]]]


@dataclass
class ExactValues:
    """Expected discounted values aggregated over history keys.

    Histories are interleaved tuples (z, m, z, ...) of observation symbols
    and macro ids; joint keys use per-agent tuples at each slot.  Values are
    discounted from the tick the key's decision happens at (for the per-agent
    joint view, from the start tick of the macro ending the record's
    segment).
    """

    root_value: float
    joint_v: dict = field(default_factory=dict)
    joint_q: dict = field(default_factory=dict)
    dec_v: list = field(default_factory=list)
    dec_q: list = field(default_factory=list)
    iaicc_v: list = field(default_factory=list)


class _Accum:
    def __init__(self) -> None:
        self.num: dict = {}
        self.den: dict = {}

    def add(self, key, prob: float, value: float) -> None:
        self.num[key] = self.num.get(key, 0.0) + prob * value
        self.den[key] = self.den.get(key, 0.0) + prob

    def finalize(self) -> dict:
        return {k: self.num[k] / self.den[k] for k in self.num}


@dataclass
class _AgentNode:
    macro: Optional[int]
    left: int
    t0: int
    partial: float
    hist: tuple
    cur_obs: int


def exact_q(
    spec: TabularMacDecSpec,
    policy: Optional[Sequence[PolicyFn]] = None,
    gamma: float = 1.0,
    history_cap: int = 100_000,
) -> ExactValues:
    """Exact expectation (or maximization, when policy is None) by backward
    recursion over the full history tree.

    With a fixed per-agent policy the result carries fixed-policy values for
    every learner view; with policy=None, joint_q/joint_v hold the optimal
    values of the gated joint decision process.
    """
    optimal = policy is None
    n = spec.n_agents
    visits = [0]

    joint_v_acc, joint_q_acc = _Accum(), _Accum()
    dec_v_acc = [_Accum() for _ in range(n)]
    dec_q_acc = [_Accum() for _ in range(n)]
    iaicc_acc = [_Accum() for _ in range(n)]

    def bump() -> None:
        visits[0] += 1
        if visits[0] > history_cap:
            raise RuntimeError(
                f"history enumeration exceeded cap of {history_cap} nodes"
            )

    def decide(t: int, s: int, agents: list[_AgentNode], joint_hist: tuple,
               reach: float) -> float:
        bump()
        choosers = [i for i in range(n) if agents[i].macro is None]
        options: list[list[tuple[int, float]]] = []
        for i in choosers:
            if optimal:
                options.append([(m, 1.0) for m in range(len(spec.durations[i]))])
            else:
                options.append(list(policy[i](agents[i].hist)))

        branch_values: list[tuple[float, float]] = []   # (prob, q)
        for combo in itertools.product(*options) if choosers else [()]:
            p_branch = 1.0
            next_agents = [
                _AgentNode(a.macro, a.left, a.t0, a.partial, a.hist, a.cur_obs)
                for a in agents
            ]
            for idx, i in enumerate(choosers):
                m, pm = combo[idx]
                p_branch *= pm
                next_agents[i].macro = m
                next_agents[i].left = spec.durations[i][m]
                next_agents[i].t0 = t
                next_agents[i].partial = 0.0
            mvec = tuple(a.macro for a in next_agents)
            # snapshot before the recursion: execute accumulates partials in
            # place while simulating the future
            pre = [(a.partial, a.t0) for a in next_agents]
            min_left = min(a.left for a in next_agents)
            q = execute(t, s, next_agents, joint_hist, reach * p_branch)

            joint_q_acc.add((joint_hist, mvec), reach * p_branch, q)
            for idx, i in enumerate(choosers):
                dec_q_acc[i].add(
                    (agents[i].hist, combo[idx][0]), reach * p_branch, q
                )
            # records whose segment ends with agent i terminating carry that
            # agent's reward window, anchored at its macro's start tick
            for i in range(n):
                if next_agents[i].left == min_left:
                    partial_i, t0_i = pre[i]
                    iaicc_acc[i].add(
                        joint_hist,
                        reach * p_branch,
                        partial_i + gamma ** (t - t0_i) * q,
                    )
            branch_values.append((p_branch, q))

        if optimal:
            v = max(q for _, q in branch_values)
        else:
            v = sum(p * q for p, q in branch_values)
        joint_v_acc.add(joint_hist, reach, v)
        for i in choosers:
            dec_v_acc[i].add(agents[i].hist, reach, v)
        return v

    def execute(t: int, s: int, agents: list[_AgentNode], joint_hist: tuple,
                reach: float) -> float:
        bump()
        mvec = tuple(a.macro for a in agents)
        r = spec.reward(s, mvec)
        for a in agents:
            a.partial += gamma ** (t - a.t0) * r
        value = r
        cont = 0.0
        for s2, p_s in spec.outcomes(s, mvec):
            branch = [
                _AgentNode(a.macro, a.left - 1, a.t0, a.partial, a.hist, a.cur_obs)
                for a in agents
            ]
            term = [i for i in range(n) if branch[i].left == 0]
            for i in term:
                z = spec.obs[i][s2]
                branch[i].hist = branch[i].hist + (branch[i].macro, z)
                branch[i].cur_obs = z
                branch[i].macro = None
            done = s2 in spec.terminal_states or t + 1 >= spec.horizon
            if done or not term:
                sub = 0.0 if done else execute(
                    t + 1, s2, branch, joint_hist, reach * p_s
                )
            else:
                zvec = tuple(b.cur_obs for b in branch)
                sub = decide(
                    t + 1, s2, branch, joint_hist + (mvec, zvec), reach * p_s
                )
            cont += p_s * sub
        return value + gamma * cont

    if spec.horizon == 0 or spec.initial_state in spec.terminal_states:
        return ExactValues(root_value=0.0)

    init_agents = [
        _AgentNode(None, 0, 0, 0.0, (spec.obs[i][spec.initial_state],),
                   spec.obs[i][spec.initial_state])
        for i in range(n)
    ]
    root_hist = (tuple(a.cur_obs for a in init_agents),)
    root = decide(0, spec.initial_state, init_agents, root_hist, 1.0)
    return ExactValues(
        root_value=root,
        joint_v=joint_v_acc.finalize(),
        joint_q=joint_q_acc.finalize(),
        dec_v=[acc.finalize() for acc in dec_v_acc],
        dec_q=[acc.finalize() for acc in dec_q_acc],
        iaicc_v=[acc.finalize() for acc in iaicc_acc],
    )


def return_distribution(
    spec: TabularMacDecSpec,
    policy: Optional[Sequence[PolicyFn]] = None,
    gamma: float = 1.0,
    path_cap: int = 1_000_000,
) -> list[tuple[float, float]]:
    """Enumerate (probability, discounted return) over every episode path
    under the policy (uniform when None)."""
    n = spec.n_agents
    out: list[tuple[float, float]] = []

    def uniform(i: int) -> PolicyFn:
        k = len(spec.durations[i])
        return lambda hist: [(m, 1.0 / k) for m in range(k)]

    pol = policy if policy is not None else [uniform(i) for i in range(n)]

    def walk(t, s, agents, prob, ret):
        if len(out) > path_cap:
            raise RuntimeError("path enumeration exceeded cap")
        choosers = [i for i in range(n) if agents[i][0] is None]
        options = [list(pol[i](agents[i][2])) for i in choosers]
        for combo in itertools.product(*options) if choosers else [()]:
            p = prob
            ag = [list(a) for a in agents]
            for idx, i in enumerate(choosers):
                m, pm = combo[idx]
                p *= pm
                ag[i][0] = m
                ag[i][1] = spec.durations[i][m]
            step(t, s, ag, p, ret)

    def step(t, s, agents, prob, ret):
        mvec = tuple(a[0] for a in agents)
        r = spec.reward(s, mvec)
        ret = ret + gamma ** t * r
        for s2, p_s in spec.outcomes(s, mvec):
            ag = [[a[0], a[1] - 1, a[2]] for a in agents]
            term = [i for i in range(n) if ag[i][1] == 0]
            for i in term:
                ag[i][2] = ag[i][2] + (ag[i][0], spec.obs[i][s2])
                ag[i][0] = None
            done = s2 in spec.terminal_states or t + 1 >= spec.horizon
            if done:
                out.append((prob * p_s, ret))
            elif term:
                walk(t + 1, s2, [tuple(a) for a in ag], prob * p_s, ret)
            else:
                step(t + 1, s2, ag, prob * p_s, ret)

    if spec.horizon == 0 or spec.initial_state in spec.terminal_states:
        return [(1.0, 0.0)]
    init = [(None, 0, (spec.obs[i][spec.initial_state],)) for i in range(n)]
    walk(0, spec.initial_state, init, 1.0, 0.0)
    return out


# -- independent squeeze filter ----------------------------------------------------


def brute_force_squeeze(
    ep: MacroEpisode,
    agent: Optional[int] = None,
    joint: bool = False,
    reward_agent: Optional[int] = None,
    catalog_sizes: Optional[Sequence[int]] = None,
) -> SqueezedTrajectory:
    """Definitionally direct squeeze: every field re-derived from the per-tick
    arrays with plain filters and a direct discounted sum (no shared helpers
    with the buffers module)."""
    T = ep.length
    n = ep.n_agents
    gamma = ep.gamma

    def obs_of(i: int, t: int) -> np.ndarray:
        # most recent fresh observation at or before t, else reset
        last = None
        for k, tick in enumerate(ep.term_ticks[i]):
            if tick <= t:
                last = k
        return ep.reset_obs[i] if last is None else ep.fresh_obs[i][last]

    def direct_sum(a: int, b: int) -> float:
        total = 0.0
        for u in range(a, b + 1):
            total += gamma ** (u - a) * float(ep.team_reward[u])
        return total

    if not joint:
        kept = [t for t in range(T) if ep.term[t, agent]]
        starts = []
        prev = -1
        for t in kept:
            starts.append(prev + 1)
            prev = t
        z = [obs_of(agent, s - 1) for s in starts]
        z2 = [obs_of(agent, t) for t in kept]
        return SqueezedTrajectory(
            kind="dec",
            z=np.array(z).reshape(len(kept), -1),
            m=np.array([ep.m[t, agent] for t in kept], dtype=np.int64),
            z_next=np.array(z2).reshape(len(kept), -1),
            rc=np.array([direct_sum(s, t) for s, t in zip(starts, kept)]),
            tau=np.array([t - s + 1 for s, t in zip(starts, kept)], dtype=np.int64),
            done=np.array([t == T - 1 for t in kept], dtype=bool),
            prev_m=np.array(
                [ep.m[s - 1, agent] if s > 0 else -1 for s in starts],
                dtype=np.int64,
            ),
        )

    kept = [t for t in range(T) if any(ep.term[t, i] for i in range(n))]
    seg_starts = []
    prev = -1
    for t in kept:
        seg_starts.append(prev + 1)
        prev = t
    rows_z = [
        np.concatenate([obs_of(i, s - 1) for i in range(n)]) for s in seg_starts
    ]
    rows_z2 = [np.concatenate([obs_of(i, t) for i in range(n)]) for t in kept]
    if reward_agent is None:
        rcs = [direct_sum(s, t) for s, t in zip(seg_starts, kept)]
        taus = [t - s + 1 for s, t in zip(seg_starts, kept)]
        loss = [True] * len(kept)
    else:
        rcs, taus, loss = [], [], []
        for t in kept:
            start = 0
            for tick in ep.term_ticks[reward_agent]:
                if tick < t:
                    start = tick + 1
            rcs.append(direct_sum(start, t))
            taus.append(t - start + 1)
            loss.append(bool(ep.term[t, reward_agent]))
    m_comp = np.array([list(ep.m[t]) for t in kept], dtype=np.int64)
    prev_comp = np.array(
        [list(ep.m[s - 1]) if s > 0 else [-1] * n for s in seg_starts],
        dtype=np.int64,
    )
    if catalog_sizes is not None:
        ids = np.array([encode_joint(row, catalog_sizes) for row in m_comp])
        prev_ids = np.array(
            [
                -1 if row[0] < 0 else encode_joint(row, catalog_sizes)
                for row in prev_comp
            ]
        )
    else:
        ids = np.zeros(len(kept), dtype=np.int64)
        prev_ids = np.full(len(kept), -1, dtype=np.int64)
    return SqueezedTrajectory(
        kind="joint" if reward_agent is None else "iaicc",
        z=np.array(rows_z).reshape(len(kept), -1),
        m=ids,
        z_next=np.array(rows_z2).reshape(len(kept), -1),
        rc=np.array(rcs),
        tau=np.array(taus, dtype=np.int64),
        done=np.array([t == T - 1 for t in kept], dtype=bool),
        prev_m=prev_ids,
        m_comp=m_comp,
        prev_m_comp=prev_comp,
        flags=np.array([[bool(ep.term[t, i]) for i in range(n)] for t in kept]),
        undone_start=np.array(
            [
                [not bool(ep.term[s - 1, i]) if s > 0 else False for i in range(n)]
                for s in seg_starts
            ]
        ),
        loss_flag=np.array(loss, dtype=bool),
    )


# -- scripted plans -----------------------------------------------------------------


def scripted_optimal_return(env, gamma: float, plan: str = "big_box") -> float:
    """Roll out a hand-scripted macro plan and return its discounted return.
    Box Pushing: both robots to the big-box waypoints (the early arriver
    stalls), then a simultaneous push; or each robot to its small box.
    Warehouse: the alternating search/pass interleaving with robot 1 serving
    workshop 1 and robot 0 workshop 0."""
    from .envs.box_pushing import BoxPushing, MOVE_BB0, MOVE_BB1, MOVE_SB0, MOVE_SB1, PUSH, STAY
    from .envs.warehouse import (
        WarehouseA, GET_TOOL, GO_W0, GO_W1, WAIT_M, SEARCH_0, PASS_0,
    )

    if isinstance(env, BoxPushing):
        if plan == "big_box":
            goals = (MOVE_BB0, MOVE_BB1)
        elif plan == "small_boxes":
            goals = (MOVE_SB0, MOVE_SB1)
        else:
            raise ValueError(f"no scripted plan {plan!r} for BoxPushing")
        env.reset(0)
        arrived = [False, False]
        current = list(goals)
        statuses = None
        ret, disc, t = 0.0, 1.0, 0

        def choose(i: int) -> int:
            if not arrived[i]:
                return goals[i]
            if plan == "big_box" and not all(arrived):
                return STAY
            return PUSH

        done = False
        while not done:
            for i in range(2):
                if statuses is not None and statuses[i].terminated and current[i] == goals[i]:
                    arrived[i] = True
            for i in range(2):
                if statuses is None or statuses[i].terminated:
                    current[i] = choose(i)
            res = env.step(current)
            statuses = res.statuses
            ret += disc * res.reward
            disc *= gamma
            t += 1
            done = res.done
        return ret

    if isinstance(env, WarehouseA):
        if plan != "deliveries":
            raise ValueError(f"no scripted plan {plan!r} for WarehouseA")
        env.reset(0)
        # alternating schedule: search tool k, pass to robot 1, search tool k
        # again, pass to robot 0, for k = 0, 1, 2
        schedule: list[int] = []
        for k in range(env.n_tool_types):
            schedule += [SEARCH_0 + k, PASS_0 + 1, SEARCH_0 + k, PASS_0]
        step_idx = [0]
        statuses = None
        current = [GET_TOOL, GET_TOOL, WAIT_M]
        ret, disc = 0.0, 1.0

        def choose_arm() -> int:
            if step_idx[0] >= len(schedule):
                return WAIT_M
            nxt = schedule[step_idx[0]]
            if nxt >= PASS_0:
                if not env.robot_waiting(nxt - PASS_0):
                    return WAIT_M
            elif env.staging_count() >= env.staging_capacity:
                return WAIT_M
            step_idx[0] += 1
            return nxt

        def choose_mobile(i: int) -> int:
            if env.carrying(i):
                return GO_W0 + i
            return GET_TOOL

        done = False
        while not done:
            for i in range(2):
                if statuses is None or statuses[i].terminated:
                    current[i] = choose_mobile(i)
            if statuses is None or statuses[2].terminated:
                current[2] = choose_arm()
            res = env.step(current)
            statuses = res.statuses
            ret += disc * res.reward
            disc *= gamma
            done = res.done
        return ret

    raise ValueError(f"no scripted plan for environment {type(env).__name__}")


# -- finite differences --------------------------------------------------------------


def finite_diff_grad(
    loss_fn: Callable[[], float],
    params: dict[str, np.ndarray],
    h: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central differences per scalar parameter at double precision.  loss_fn
    must read the (mutated in place) params."""
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            hi = loss_fn()
            flat[j] = orig - h
            lo = loss_fn()
            flat[j] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise ValueError(f"non-finite loss while perturbing {name}[{j}]")
            gflat[j] = (hi - lo) / (2.0 * h)
        grads[name] = g
    return grads
