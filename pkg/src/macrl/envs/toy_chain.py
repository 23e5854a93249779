"""Tabular toy environment driven by an explicit table description; used by
the oracle acceptance suites where exact values are enumerable."""

from __future__ import annotations

import numpy as np

from ..core import MacroEnv
from ..oracle import TabularMacDecSpec


class ToyChain(MacroEnv):
    """Generic tabular MacDec environment: per-tick transition and reward
    tables keyed by the running joint macro, fixed per-macro durations, and
    termination-time observation symbols (one-hot encoded)."""

    def __init__(self, spec: TabularMacDecSpec) -> None:
        super().__init__()
        self.spec = spec
        self.n_agents = spec.n_agents
        self.horizon = spec.horizon
        self._state = spec.initial_state
        self._rng = np.random.default_rng(0)
        self.reset(0)

    @property
    def macro_names(self) -> tuple[tuple[str, ...], ...]:
        return tuple(
            tuple(f"m{m}(len{d})" for m, d in enumerate(durs))
            for durs in self.spec.durations
        )

    @property
    def obs_widths(self) -> tuple[int, ...]:
        return self.spec.obs_symbol_counts

    def obs_symbol(self, agent: int, onehot: np.ndarray) -> int:
        return int(np.argmax(onehot))

    def state_features(self) -> np.ndarray:
        out = np.zeros(self.spec.n_states)
        out[self._state] = 1.0
        return out

    def _onehot(self, agent: int, state: int) -> np.ndarray:
        out = np.zeros(self.spec.obs_symbol_counts[agent])
        out[self.spec.obs[agent][state]] = 1.0
        return out

    def _do_reset(self, seed: int) -> list[np.ndarray]:
        self._rng = np.random.default_rng(seed)
        self._state = self.spec.initial_state
        return [self._onehot(i, self._state) for i in range(self.n_agents)]

    def _do_tick(self, current):
        mvec = tuple(int(m) for m in current)
        reward = self.spec.reward(self._state, mvec)
        outcomes = self.spec.outcomes(self._state, mvec)
        if len(outcomes) == 1:
            self._state = outcomes[0][0]
        else:
            u = self._rng.random()
            acc = 0.0
            for s2, p in outcomes:
                acc += p
                if u <= acc:
                    self._state = s2
                    break
            else:
                self._state = outcomes[-1][0]
        term = []
        obs = []
        for i in range(self.n_agents):
            dur = self.spec.durations[i][mvec[i]]
            finished = self._statuses[i].elapsed + 1 >= dur
            term.append(finished)
            obs.append(self._onehot(i, self._state) if finished else None)
        done = self._state in self.spec.terminal_states
        return reward, term, obs, done
