"""Box Pushing: two robots in an N x N grid must push the big box (two cells
wide, movable only by pushing both cells at once) north to the goal strip.
The two small boxes tempt each robot into a lone-push local optimum."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from ..core import MacroEnv
from .schema import load_schema, schema_path

# headings
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
_FORWARD = {NORTH: (1, 0), EAST: (0, 1), SOUTH: (-1, 0), WEST: (0, -1)}

# macro ids
STAY = 0
TURN_LEFT = 1
TURN_RIGHT = 2
MOVE_SB0 = 3
MOVE_SB1 = 4
MOVE_BB0 = 5
MOVE_BB1 = 6
PUSH = 7

_MACROS = (
    "Stay", "Turn-left", "Turn-right",
    "Move-to-small-box(0)", "Move-to-small-box(1)",
    "Move-to-big-box(0)", "Move-to-big-box(1)", "Push",
)
_PRIMITIVES = ("Move-forward", "Turn-left", "Turn-right", "Stay")

# observation categories for the cell ahead
OBS_EMPTY, OBS_TEAMMATE, OBS_BOUNDARY, OBS_SMALL, OBS_BIG = range(5)


class BoxPushing(MacroEnv):
    def __init__(
        self,
        n: int = 4,
        primitive: bool = False,
        schema_file: Optional[str | Path] = None,
    ) -> None:
        super().__init__()
        if n < 4 or n % 2:
            raise ValueError("grid side must be even and >= 4")
        self.n = n
        self.primitive = primitive
        self.schema_file = Path(schema_file) if schema_file else schema_path("box_pushing")
        cfg = load_schema(self.schema_file)["box_pushing"]
        self.step_reward = cfg.getfloat("step_reward")
        self.big_box_reward = cfg.getfloat("big_box_reward")
        self.small_box_reward = cfg.getfloat("small_box_reward")
        self.penalty = cfg.getfloat("penalty")
        self.horizon = (
            cfg.getint("horizon_small")
            if n < cfg.getint("large_from")
            else cfg.getint("horizon_large")
        )
        self.n_agents = 2
        self.box_row = n // 2
        # [row, col] cells; big box tracked by its west cell
        self._small = np.zeros((2, 2), dtype=np.int64)
        self._big = np.zeros(2, dtype=np.int64)
        self._pos = np.zeros((2, 2), dtype=np.int64)
        self._heading = np.zeros(2, dtype=np.int64)

    @property
    def macro_names(self) -> tuple[tuple[str, ...], ...]:
        names = _PRIMITIVES if self.primitive else _MACROS
        return (names, names)

    @property
    def obs_widths(self) -> tuple[int, ...]:
        return (5, 5)

    def state_features(self) -> np.ndarray:
        d = self.n - 1
        feats = [
            self._pos[0, 0] / d, self._pos[0, 1] / d,
            self._pos[1, 0] / d, self._pos[1, 1] / d,
        ]
        for i in range(2):
            one_hot = [0.0] * 4
            one_hot[self._heading[i]] = 1.0
            feats.extend(one_hot)
        feats.extend([
            self._small[0, 0] / d, self._small[0, 1] / d,
            self._small[1, 0] / d, self._small[1, 1] / d,
            self._big[0] / d, self._big[1] / d,
        ])
        return np.array(feats)

    def _waypoint(self, macro: int) -> np.ndarray:
        row = self.box_row - 1
        if macro == MOVE_SB0:
            return np.array([row, self._small[0, 1]])
        if macro == MOVE_SB1:
            return np.array([row, self._small[1, 1]])
        if macro == MOVE_BB0:
            return np.array([row, self._big[1]])
        return np.array([row, self._big[1] + 1])

    def _ahead(self, agent: int) -> tuple[int, int]:
        dr, dc = _FORWARD[int(self._heading[agent])]
        return int(self._pos[agent, 0] + dr), int(self._pos[agent, 1] + dc)

    def _cell_status(self, agent: int) -> int:
        r, c = self._ahead(agent)
        if not (0 <= r < self.n and 0 <= c < self.n):
            return OBS_BOUNDARY
        other = 1 - agent
        if r == self._pos[other, 0] and c == self._pos[other, 1]:
            return OBS_TEAMMATE
        for b in range(2):
            if r == self._small[b, 0] and c == self._small[b, 1]:
                return OBS_SMALL
        if r == self._big[0] and c in (self._big[1], self._big[1] + 1):
            return OBS_BIG
        return OBS_EMPTY

    def _observe(self, agent: int) -> np.ndarray:
        out = np.zeros(5)
        out[self._cell_status(agent)] = 1.0
        return out

    def _do_reset(self, seed: int) -> list[np.ndarray]:
        half = self.n // 2
        self._small = np.array(
            [[self.box_row, half - 2], [self.box_row, half + 1]], dtype=np.int64
        )
        self._big = np.array([self.box_row, half - 1], dtype=np.int64)
        self._pos = np.array([[0, 0], [0, self.n - 1]], dtype=np.int64)
        self._heading = np.array([NORTH, NORTH], dtype=np.int64)
        return [self._observe(0), self._observe(1)]

    def _forward_move(self, agent: int) -> tuple[float, bool, bool]:
        """Move one robot forward, pushing a small box if it is ahead and the
        heading is north.  Returns (reward, terminate_macro, episode_done).
        The big box case is resolved jointly before this is called."""
        r, c = self._ahead(agent)
        if not (0 <= r < self.n and 0 <= c < self.n):
            return self.penalty, True, False
        if r == self._big[0] and c in (self._big[1], self._big[1] + 1):
            return self.penalty, True, False
        for b in range(2):
            if r == self._small[b, 0] and c == self._small[b, 1]:
                if self._heading[agent] != NORTH:
                    return 0.0, True, False
                self._small[b, 0] += 1
                self._pos[agent] = (r, c)
                if self._small[b, 0] == self.n - 1:
                    return self.small_box_reward, True, True
                return 0.0, False, False
        self._pos[agent] = (r, c)
        return 0.0, False, False

    def _both_push_big(self) -> bool:
        cells = {
            (int(self._big[0]), int(self._big[1])),
            (int(self._big[0]), int(self._big[1]) + 1),
        }
        if any(self._heading[agent] != NORTH for agent in range(2)):
            return False
        return {self._ahead(0), self._ahead(1)} == cells

    def _do_tick(self, current):
        reward = self.step_reward
        term = [False, False]
        done = False

        # one-step macros (turns and stay)
        for i, m in enumerate(current):
            if self.primitive:
                if m == 1:
                    self._heading[i] = (self._heading[i] - 1) % 4
                elif m == 2:
                    self._heading[i] = (self._heading[i] + 1) % 4
                term[i] = True
            else:
                if m == STAY:
                    term[i] = True
                elif m == TURN_LEFT:
                    self._heading[i] = (self._heading[i] - 1) % 4
                    term[i] = True
                elif m == TURN_RIGHT:
                    self._heading[i] = (self._heading[i] + 1) % 4
                    term[i] = True

        # navigation macros: column first, then row; arrival faces north
        if not self.primitive:
            for i, m in enumerate(current):
                if m in (MOVE_SB0, MOVE_SB1, MOVE_BB0, MOVE_BB1):
                    goal = self._waypoint(m)
                    if self._pos[i, 1] != goal[1]:
                        self._pos[i, 1] += np.sign(goal[1] - self._pos[i, 1])
                    elif self._pos[i, 0] != goal[0]:
                        self._pos[i, 0] += np.sign(goal[0] - self._pos[i, 0])
                    if np.array_equal(self._pos[i], goal):
                        self._heading[i] = NORTH
                        term[i] = True

        # forward movers: the joint big-box push is resolved first
        if self.primitive:
            forward = [i for i in range(2) if current[i] == 0]
        else:
            forward = [i for i in range(2) if current[i] == PUSH]
        if len(forward) == 2 and self._both_push_big():
            self._big[0] += 1
            for i in range(2):
                self._pos[i] = self._ahead(i)
            if self._big[0] == self.n - 1:
                reward += self.big_box_reward
                done = True
        else:
            for i in forward:
                r, t, d = self._forward_move(i)
                reward += r
                done = done or d
                if t:
                    term[i] = True

        obs = [self._observe(0), self._observe(1)]
        return reward, term, obs, done
