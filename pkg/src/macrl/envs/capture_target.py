"""Capture Target: two robots must land on a randomly moving target's cell at
the same tick.  The target's observed position flickers away with probability
0.3; the navigation macro keeps heading for the last sighted cell."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from ..core import MacroEnv
from .schema import load_schema, schema_path

MOVE_TO_TARGET = 0
STAY = 1

# primitive mode: up, down, left, right, stay (row +1 is north)
_PRIMITIVE_DELTAS = ((1, 0), (-1, 0), (0, -1), (0, 1), (0, 0))


class CaptureTarget(MacroEnv):
    def __init__(
        self,
        n: int = 4,
        primitive: bool = False,
        schema_file: Optional[str | Path] = None,
    ) -> None:
        super().__init__()
        if n < 2:
            raise ValueError("grid side must be >= 2")
        self.n = n
        self.primitive = primitive
        self.schema_file = Path(schema_file) if schema_file else schema_path("capture_target")
        cfg = load_schema(self.schema_file)["capture_target"]
        self.flicker_prob = cfg.getfloat("flicker_prob")
        self.capture_reward = cfg.getfloat("capture_reward")
        self.n_agents = 2
        self.horizon = cfg.getint("horizon_per_cell") * n
        self._rng: np.random.Generator = np.random.default_rng(0)
        self._agents = np.zeros((2, 2), dtype=np.int64)
        self._target = np.zeros(2, dtype=np.int64)
        self._belief: list[Optional[np.ndarray]] = [None, None]

    @property
    def macro_names(self) -> tuple[tuple[str, ...], ...]:
        if self.primitive:
            names = ("Up", "Down", "Left", "Right", "Stay")
        else:
            names = ("Move-to-Target", "Stay")
        return (names, names)

    @property
    def obs_widths(self) -> tuple[int, ...]:
        return (5, 5)

    def state_features(self) -> np.ndarray:
        d = self.n - 1
        return np.array(
            [
                self._agents[0, 0] / d, self._agents[0, 1] / d,
                self._agents[1, 0] / d, self._agents[1, 1] / d,
                self._target[0] / d, self._target[1] / d,
            ]
        )

    def _observe(self, agent: int) -> np.ndarray:
        d = self.n - 1
        own = self._agents[agent]
        flicked = self._rng.random() < self.flicker_prob
        if flicked:
            tgt = np.array([-1.0, -1.0, 0.0])
        else:
            tgt = np.array([self._target[0] / d, self._target[1] / d, 1.0])
            self._belief[agent] = self._target.copy()
        return np.array([own[0] / d, own[1] / d, tgt[0], tgt[1], tgt[2]])

    def _do_reset(self, seed: int) -> list[np.ndarray]:
        self._rng = np.random.default_rng(seed)
        cells = self._rng.integers(0, self.n, size=(3, 2))
        self._agents = cells[:2].astype(np.int64)
        self._target = cells[2].astype(np.int64)
        self._belief = [None, None]
        return [self._observe(0), self._observe(1)]

    def _greedy_step(self, pos: np.ndarray, goal: np.ndarray) -> np.ndarray:
        delta = goal - pos
        step = pos.copy()
        if abs(delta[0]) >= abs(delta[1]) and delta[0] != 0:
            step[0] += np.sign(delta[0])
        elif delta[1] != 0:
            step[1] += np.sign(delta[1])
        return step

    def _do_tick(self, current):
        move = self._rng.integers(0, 5)
        delta = _PRIMITIVE_DELTAS[move]
        self._target = np.clip(
            self._target + np.array(delta), 0, self.n - 1
        )

        term = [True, True]
        for i, m in enumerate(current):
            if self.primitive:
                d = _PRIMITIVE_DELTAS[m]
                self._agents[i] = np.clip(
                    self._agents[i] + np.array(d), 0, self.n - 1
                )
            elif m == MOVE_TO_TARGET:
                if self._belief[i] is not None:
                    self._agents[i] = self._greedy_step(
                        self._agents[i], self._belief[i]
                    )

        obs = [self._observe(0), self._observe(1)]
        if not self.primitive:
            for i, m in enumerate(current):
                if m == MOVE_TO_TARGET:
                    arrived = self._belief[i] is None or np.array_equal(
                        self._agents[i], self._belief[i]
                    )
                    term[i] = arrived

        captured = np.array_equal(self._agents[0], self._target) and np.array_equal(
            self._agents[1], self._target
        )
        reward = self.capture_reward if captured else 0.0
        return reward, term, obs, captured
