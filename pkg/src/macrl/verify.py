"""Oracle verification suites runnable from the CLI: each check pits a
production code path against its independent brute-force counterpart and
reports pass/fail."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import nn, oracle
from .buffers import accumulate_reward, collect_episode, squeeze_decentralized, squeeze_iaicc, squeeze_joint
from .core import consistent_mask, decode_joint, joint_catalog_size, rng_streams
from .envs import BoxPushing, CaptureTarget, ToyChain, WarehouseA
from .qlearn import TabularCenDDRQN


class _RandomDriver:
    """Uniform gated behavior for randomized episodes."""

    def __init__(self, catalog_sizes, rng):
        self.sizes = list(catalog_sizes)
        self.rng = rng
        self._current = [-1] * len(catalog_sizes)

    def begin_episode(self, obs):
        self._current = [-1] * len(self.sizes)

    def act(self, statuses, obs):
        for i, st in enumerate(statuses):
            if st.terminated:
                self._current[i] = int(self.rng.integers(0, self.sizes[i]))
        return list(self._current)


def _kink_margin(cache: dict, mask: np.ndarray) -> float:
    """Distance of the nearest unmasked Leaky-ReLU pre-activation to its
    kink; central differences are only valid away from it."""
    margin = np.inf
    for t, step in enumerate(cache["steps"]):
        rows = mask[t] > 0
        if not rows.any():
            continue
        for key in ("a1p", "a2p", "a3p"):
            margin = min(margin, float(np.abs(step[key][rows]).min()))
    return margin


def _random_net_loss(rng: np.random.Generator, widths_cap: int = 8, seq_cap: int = 8):
    # widths stay small so the per-scalar central-difference sweep of 100
    # nets fits the one-minute budget; sizes remain within the <= 32 cap
    while True:
        spec = nn.NetworkSpec(
            input_width=int(rng.integers(2, 7)),
            fc1=int(rng.integers(2, widths_cap + 1)),
            fc2=int(rng.integers(2, widths_cap + 1)),
            gru=int(rng.integers(2, widths_cap + 1)),
            fc3=int(rng.integers(2, widths_cap + 1)),
            output_width=int(rng.integers(1, 5)),
        )
        params = nn.init_params(spec, rng)
        T = int(rng.integers(1, seq_cap + 1))
        B = int(rng.integers(1, 4))
        inputs = rng.normal(size=(T, B, spec.input_width))
        mask = (rng.random((T, B)) < 0.8).astype(np.float64)
        mask[0] = 1.0
        _, _, cache = nn.forward_sequence(params, inputs, mask)
        # redraw evaluation points straddling a kink: finite differences are
        # undefined there, not the gradient
        if _kink_margin(cache, mask) > 1e-3:
            break
    weights = rng.normal(size=(T, B, spec.output_width))

    def loss() -> float:
        out, _, _ = nn.forward_sequence(params, inputs, mask)
        return float((weights * out * mask[:, :, None]).sum())

    def analytic() -> dict[str, np.ndarray]:
        _, _, cache = nn.forward_sequence(params, inputs, mask)
        return nn.backward(params, cache, weights)

    return params, loss, analytic


def check_gradients(trials: int = 100, seed: int = 0) -> tuple[bool, str]:
    """Analytic BPTT vs central differences on random nets."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        params, loss, analytic = _random_net_loss(rng)
        grads = analytic()
        fd = oracle.finite_diff_grad(loss, params)
        for name in params:
            denom = np.maximum(np.abs(fd[name]), 1.0)
            err = float(np.max(np.abs(grads[name] - fd[name]) / denom))
            worst = max(worst, err)
    return worst < 1e-4, f"max relative gradient error {worst:.3g}"


def _random_episodes(env, n_episodes: int, seed: int):
    streams = rng_streams(seed)
    driver = _RandomDriver(env.catalog_sizes, streams["explore"])
    for _ in range(n_episodes):
        ep_seed = int(streams["env"].integers(0, 2**63 - 1))
        yield collect_episode(env, ep_seed, driver, gamma=0.95)


def _traj_equal(a, b) -> bool:
    fields = ["z", "m", "z_next", "rc", "tau", "done", "prev_m"]
    if a.kind != "dec":
        fields += ["m_comp", "prev_m_comp", "flags", "undone_start", "loss_flag"]
    for f in fields:
        va, vb = getattr(a, f), getattr(b, f)
        if va.shape != vb.shape or not np.array_equal(va, vb):
            return False
    return True


def check_squeeze(episodes_per_env: int = 1000, seed: int = 1) -> tuple[bool, str]:
    """Production squeezing equals the independent filter, field-exactly."""
    envs = [
        CaptureTarget(n=4),
        BoxPushing(n=4),
        WarehouseA(),
    ]
    checked = 0
    for env in envs:
        sizes = env.catalog_sizes
        for ep in _random_episodes(env, episodes_per_env, seed):
            for agent in range(env.n_agents):
                got = squeeze_decentralized(ep, agent)
                want = oracle.brute_force_squeeze(ep, agent=agent)
                if not _traj_equal(got, want):
                    return False, f"dec squeeze mismatch in {type(env).__name__}"
                got = squeeze_iaicc(ep, agent, sizes)
                want = oracle.brute_force_squeeze(
                    ep, joint=True, reward_agent=agent, catalog_sizes=sizes
                )
                if not _traj_equal(got, want):
                    return False, f"iaicc squeeze mismatch in {type(env).__name__}"
            got = squeeze_joint(ep, sizes)
            want = oracle.brute_force_squeeze(ep, joint=True, catalog_sizes=sizes)
            if not _traj_equal(got, want):
                return False, f"joint squeeze mismatch in {type(env).__name__}"
            checked += 1
    return True, f"{checked} episodes squeezed identically in all three views"


def check_reward_accumulation(streams: int = 10_000, seed: int = 2) -> tuple[bool, str]:
    """Incremental accumulation equals the direct discounted sum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(streams):
        k = int(rng.integers(1, 12))
        gamma = float(rng.uniform(0.05, 1.0))
        rewards = rng.normal(size=k) * 10
        partial = 0.0
        for e, r in enumerate(rewards):
            partial = accumulate_reward(partial, float(r), gamma, e)
        direct = sum(gamma ** t * rewards[t] for t in range(k))
        worst = max(worst, abs(partial - direct))
    return worst < 1e-12, f"max |incremental - direct| = {worst:.3g}"


def check_conditional_argmax(trials: int = 1000, seed: int = 3) -> tuple[bool, str]:
    """Masked joint argmax equals exhaustive search over the consistent set."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(2, 4))
        sizes = [int(rng.integers(2, 5)) for _ in range(n)]
        total = joint_catalog_size(sizes)
        q = rng.normal(size=total)
        forced = [
            int(rng.integers(0, sizes[i])) if rng.random() < 0.5 else None
            for i in range(n)
        ]
        mask = consistent_mask(forced, sizes)
        got = int(np.argmax(np.where(mask, q, -np.inf)))
        best, best_q = None, -np.inf
        for a in range(total):
            comps = decode_joint(a, sizes)
            if any(f is not None and comps[i] != f for i, f in enumerate(forced)):
                continue
            if q[a] > best_q:
                best, best_q = a, q[a]
        if got != best:
            return False, f"restricted argmax mismatch: {got} vs {best}"
    return True, f"{trials} random tables and masks agree with enumeration"


class PrefixDriver:
    """Follows a prescribed list of decision picks (agent order within a
    tick); decisions beyond the prefix pick option 0 and are counted so the
    caller can enumerate all choice paths."""

    def __init__(self, catalog_sizes, prefix):
        self.sizes = list(catalog_sizes)
        self.prefix = list(prefix)
        self.decisions = 0
        self._current = [-1] * len(catalog_sizes)

    def begin_episode(self, obs):
        self.decisions = 0
        self._current = [-1] * len(self.sizes)

    def act(self, statuses, obs):
        for i, st in enumerate(statuses):
            if st.terminated:
                pick = (
                    self.prefix[self.decisions]
                    if self.decisions < len(self.prefix)
                    else 0
                )
                self._current[i] = int(pick)
                self.decisions += 1
        return list(self._current)


def enumerate_choice_paths(env, gamma: float = 1.0) -> list[list[int]]:
    """All complete decision sequences of a deterministic environment."""
    sizes = env.catalog_sizes
    paths: list[list[int]] = []

    def explore(prefix: list[int]) -> None:
        driver = PrefixDriver(sizes, prefix)
        obs, statuses = env.reset(0)
        driver.begin_episode(obs)
        slot_agents: list[int] = []
        while True:
            for i, st in enumerate(statuses):
                if st.terminated:
                    slot_agents.append(i)
            current = driver.act(statuses, obs)
            res = env.step(current)
            obs, statuses = res.observations, res.statuses
            if res.done:
                break
        total = driver.decisions
        if total == len(prefix):
            paths.append(list(prefix))
            return
        next_agent = slot_agents[len(prefix)]
        for option in range(sizes[next_agent]):
            explore(prefix + [option])

    explore([])
    return paths


def check_toy_bellman() -> tuple[bool, str]:
    """Tabular joint Q-learning on the deterministic fixture reaches the
    enumerated exact values."""
    spec = oracle.load_tabular_spec(oracle.fixture_path("chain_det"))
    exact = oracle.exact_q(spec, policy=None, gamma=1.0)
    env = ToyChain(spec)
    sizes = env.catalog_sizes
    learner = TabularCenDDRQN(sizes, env.obs_widths, lr=1.0, gamma=1.0, conditional=True)
    paths = enumerate_choice_paths(env)
    for _ in range(12):
        for path in paths:
            driver = PrefixDriver(sizes, path)
            ep = collect_episode(env, 0, driver, gamma=1.0)
            learner.update_trajectory(squeeze_joint(ep, sizes))
        learner.sync_target()
    from .core import encode_joint

    worst = 0.0
    missing = 0
    for (hist, mvec), q_exact in exact.joint_q.items():
        if hist not in learner.q:
            missing += 1
            continue
        q_learned = learner.q[hist][encode_joint(mvec, sizes)]
        worst = max(worst, abs(q_learned - q_exact))
    ok = worst < 1e-6 and missing == 0
    return ok, f"max |Q_learned - Q_exact| = {worst:.3g}, {missing} keys unvisited"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "gradients": lambda: check_gradients(trials=25),
    "squeeze": lambda: check_squeeze(episodes_per_env=100),
    "reward-accumulation": check_reward_accumulation,
    "conditional-argmax": check_conditional_argmax,
    "toy-bellman": check_toy_bellman,
}


def run_all(names=None) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        passed, detail = fn()
        ok = ok and passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok
