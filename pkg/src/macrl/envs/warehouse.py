"""Warehouse Tool Delivery (scenario A): a robot arm stages tools from a
table; two mobile robots ferry them to two humans who each need tool 0, 1,
then 2 to progress through a four-subtask job.  Fully deterministic dynamics;
all geometry is frozen in the schema file."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..core import MacroEnv
from .schema import load_schema, schema_path

# mobile macros
GO_W0, GO_W1, GO_TR, GET_TOOL = 0, 1, 2, 3
_MOBILE_MACROS = ("Go-W(0)", "Go-W(1)", "Go-TR", "Get-Tool")
# arm macros
WAIT_M, SEARCH_0, SEARCH_1, SEARCH_2, PASS_0, PASS_1 = range(6)
_ARM_MACROS = (
    "Wait-M", "Search-Tool(0)", "Search-Tool(1)", "Search-Tool(2)",
    "Pass-to-M(0)", "Pass-to-M(1)",
)

_MOBILE_PRIMITIVES = ("North", "South", "East", "West", "Stay")
_ARM_PRIMITIVES = (
    "Wait-M", "Search-tick(0)", "Search-tick(1)", "Search-tick(2)",
    "Pass-tick(0)", "Pass-tick(1)",
)

ARM = 2
_ARRIVE_EPS = 1e-9


@dataclass
class _Human:
    durations: list[int]
    subtask: int = 0
    progress: int = 0
    delivered: int = 0
    waiting: bool = False
    done: bool = False

    def advance(self) -> None:
        if self.done:
            return
        if self.waiting:
            if self.delivered > self.subtask:
                self.subtask += 1
                self.progress = 0
                self.waiting = False
            return
        self.progress += 1
        if self.progress >= self.durations[self.subtask]:
            if self.subtask == len(self.durations) - 1:
                self.done = True
            elif self.delivered > self.subtask:
                self.subtask += 1
                self.progress = 0
            else:
                self.waiting = True


@dataclass
class _Mobile:
    pos: np.ndarray
    basket: list[int] = field(default_factory=list)
    wait_count: int = 0


class WarehouseA(MacroEnv):
    def __init__(
        self,
        primitive: bool = False,
        schema_file: Optional[str | Path] = None,
    ) -> None:
        super().__init__()
        self.primitive = primitive
        self.schema_file = Path(schema_file) if schema_file else schema_path("warehouse_a")
        parser = load_schema(self.schema_file)
        cfg = parser["warehouse_a"]
        self.velocity = cfg.getfloat("velocity")
        self.horizon = cfg.getint("horizon")
        self.step_reward = cfg.getfloat("step_reward")
        self.delivery_reward = cfg.getfloat("delivery_reward")
        self.delayed_penalty = cfg.getfloat("delayed_penalty")
        self.bad_pass_penalty = cfg.getfloat("bad_pass_penalty")
        self.search_ticks = cfg.getint("search_ticks")
        self.pass_ticks = cfg.getint("pass_ticks")
        self.get_tool_wait_cap = cfg.getint("get_tool_wait_cap")
        self.staging_capacity = cfg.getint("staging_capacity")
        self.n_tool_types = cfg.getint("n_tool_types")
        self.human_durations = [
            int(x) for x in cfg.get("human_subtask_ticks").split(",")
        ]
        self.tool_room_x_max = cfg.getfloat("tool_room_x_max")
        self.workshop_radius = cfg.getfloat("workshop_radius")

        def point(section: str, key: str) -> np.ndarray:
            x, y = parser[section][key].split(",")
            return np.array([float(x), float(y)])

        self.wp_get_tool = [point("waypoints", "get_tool_0"),
                            point("waypoints", "get_tool_1")]
        self.wp_tr = point("waypoints", "tool_room_right")
        self.wp_workshop = [point("waypoints", "workshop_0"),
                            point("waypoints", "workshop_1")]
        self.start_pos = [point("starts", "mobile_0"), point("starts", "mobile_1")]

        self.n_agents = 3
        self.n_humans = 2
        self._mobiles: list[_Mobile] = []
        self._humans: list[_Human] = []
        self._table: list[int] = []
        self._staging: list[int] = []
        self._arm_left = 0
        self._arm_kind = -1      # running arm macro id
        self._prim_count = 0     # consecutive identical arm primitive ticks
        self._prim_last = -1
        self.reset(0)

    @property
    def macro_names(self) -> tuple[tuple[str, ...], ...]:
        if self.primitive:
            return (_MOBILE_PRIMITIVES, _MOBILE_PRIMITIVES, _ARM_PRIMITIVES)
        return (_MOBILE_MACROS, _MOBILE_MACROS, _ARM_MACROS)

    @property
    def obs_widths(self) -> tuple[int, ...]:
        return (21, 21, 10)

    # -- observations ------------------------------------------------------

    def _observe_mobile(self, i: int) -> np.ndarray:
        m = self._mobiles[i]
        out = np.zeros(21)
        out[0] = m.pos[0] / 7.0
        out[1] = m.pos[1] / 5.0
        for tool in m.basket:
            out[2 + tool] += 0.5
        if m.pos[0] <= self.tool_room_x_max:
            out[5 + min(len(self._staging), 2)] = 1.0
            out[8] = 1.0
        base = 9
        for h in range(self.n_humans):
            if self._near(m.pos, self.wp_workshop[h]):
                human = self._humans[h]
                out[base + human.subtask] = 1.0
                out[base + 4] = 1.0 if human.done else 0.0
                out[base + 5] = 1.0
            base += 6
        return out

    def _observe_arm(self) -> np.ndarray:
        out = np.zeros(10)
        for slot in range(2):
            if slot < len(self._staging):
                out[slot * 4 + 1 + self._staging[slot]] = 1.0
            else:
                out[slot * 4] = 1.0
        for i in range(2):
            if self._robot_waiting(i):
                out[8 + i] = 1.0
        return out

    def _observe(self) -> list[np.ndarray]:
        return [self._observe_mobile(0), self._observe_mobile(1), self._observe_arm()]

    def state_features(self) -> np.ndarray:
        feats: list[float] = []
        for m in self._mobiles:
            feats.extend([m.pos[0] / 7.0, m.pos[1] / 5.0])
        for m in self._mobiles:
            counts = [0.0] * self.n_tool_types
            for tool in m.basket:
                counts[tool] += 0.5
            feats.extend(counts)
        for slot in range(2):
            one_hot = [0.0] * 4
            if slot < len(self._staging):
                one_hot[1 + self._staging[slot]] = 1.0
            else:
                one_hot[0] = 1.0
            feats.extend(one_hot)
        feats.append(self._arm_left / 6.0)
        for h in self._humans:
            one_hot = [0.0] * 4
            one_hot[h.subtask] = 1.0
            feats.extend(one_hot)
            feats.append(h.progress / 40.0)
            feats.append(1.0 if h.waiting else 0.0)
            feats.append(1.0 if h.done else 0.0)
            feats.append(h.delivered / 3.0)
        return np.array(feats)

    # -- helpers -----------------------------------------------------------

    def _near(self, pos: np.ndarray, wp: np.ndarray) -> bool:
        return bool(np.linalg.norm(pos - wp) <= self.workshop_radius)

    def _at(self, pos: np.ndarray, wp: np.ndarray) -> bool:
        return bool(np.linalg.norm(pos - wp) <= _ARRIVE_EPS)

    def _robot_waiting(self, i: int) -> bool:
        if not self._at(self._mobiles[i].pos, self.wp_get_tool[i]):
            return False
        if self.primitive:
            return True
        return bool(self._current) and self._current[i] == GET_TOOL

    def _move_toward(self, i: int, wp: np.ndarray) -> bool:
        """Advance one velocity step toward wp; True when arrived."""
        m = self._mobiles[i]
        delta = wp - m.pos
        dist = float(np.linalg.norm(delta))
        if dist <= self.velocity + _ARRIVE_EPS:
            m.pos = wp.copy()
            return True
        m.pos = m.pos + delta * (self.velocity / dist)
        return False

    def travel_ticks(self, start: np.ndarray, wp: np.ndarray) -> int:
        """Macro travel duration: ceil(distance / velocity)."""
        dist = float(np.linalg.norm(np.asarray(wp) - np.asarray(start)))
        return max(1, math.ceil((dist - _ARRIVE_EPS) / self.velocity))

    def staging_count(self) -> int:
        return len(self._staging)

    def staging_tools(self) -> list[int]:
        return list(self._staging)

    def human_state(self, h: int) -> dict:
        hm = self._humans[h]
        return {
            "subtask": hm.subtask, "progress": hm.progress,
            "delivered": hm.delivered, "waiting": hm.waiting, "done": hm.done,
        }

    def mobile_pos(self, i: int) -> np.ndarray:
        return self._mobiles[i].pos.copy()

    def robot_waiting(self, i: int) -> bool:
        return self._robot_waiting(i)

    def carrying(self, i: int) -> list[int]:
        return list(self._mobiles[i].basket)

    def tool_counts(self) -> dict[str, list[int]]:
        """Where every tool instance currently is (conservation check)."""
        table = list(self._table)
        staging = [0] * self.n_tool_types
        for t in self._staging:
            staging[t] += 1
        baskets = [0] * self.n_tool_types
        for m in self._mobiles:
            for t in m.basket:
                baskets[t] += 1
        delivered = [0] * self.n_tool_types
        for h in self._humans:
            for t in range(h.delivered):
                delivered[t] += 1
        return {
            "table": table, "staging": staging,
            "baskets": baskets, "delivered": delivered,
        }

    # -- lifecycle -----------------------------------------------------------

    def _do_reset(self, seed: int) -> list[np.ndarray]:
        self._mobiles = [_Mobile(pos=p.copy()) for p in self.start_pos]
        self._humans = [
            _Human(durations=list(self.human_durations)) for _ in range(self.n_humans)
        ]
        self._table = [self.n_humans] * self.n_tool_types
        self._staging = []
        self._arm_left = 0
        self._arm_kind = -1
        self._prim_count = 0
        self._prim_last = -1
        return self._observe()

    def _complete_search(self, tool: int) -> None:
        if len(self._staging) < self.staging_capacity and self._table[tool] > 0:
            self._table[tool] -= 1
            self._staging.append(tool)

    def _complete_pass(self, robot: int) -> tuple[float, bool]:
        """Returns (reward, receiving robot's Get-Tool terminated)."""
        if not self._robot_waiting(robot):
            return self.bad_pass_penalty, False
        if self._staging:
            self._mobiles[robot].basket.append(self._staging.pop(0))
            return 0.0, True
        return 0.0, False

    def _mobile_tick(self, i: int, macro: int) -> bool:
        """Move mobile robot i under its macro; True if the macro terminated
        (receipt-driven Get-Tool termination handled by the arm phase)."""
        m = self._mobiles[i]
        if macro in (GO_W0, GO_W1):
            return self._move_toward(i, self.wp_workshop[macro])
        if macro == GO_TR:
            return self._move_toward(i, self.wp_tr)
        # Get-Tool: travel, then wait up to the cap
        if not self._at(m.pos, self.wp_get_tool[i]):
            self._move_toward(i, self.wp_get_tool[i])
            return False
        m.wait_count += 1
        return m.wait_count >= self.get_tool_wait_cap

    def _do_tick(self, current):
        reward = self.step_reward
        term = [False, False, False]

        if self.primitive:
            term = [True, True, True]
            for i in range(2):
                m = current[i]
                deltas = {
                    0: (0.0, self.velocity), 1: (0.0, -self.velocity),
                    2: (self.velocity, 0.0), 3: (-self.velocity, 0.0), 4: (0.0, 0.0),
                }[m]
                pos = self._mobiles[i].pos + np.array(deltas)
                self._mobiles[i].pos = np.clip(pos, [0.0, 0.0], [7.0, 5.0])
            arm_action = current[ARM]
            if arm_action == self._prim_last:
                self._prim_count += 1
            else:
                self._prim_count = 1
                self._prim_last = arm_action
            if arm_action in (SEARCH_0, SEARCH_1, SEARCH_2):
                if self._prim_count >= self.search_ticks:
                    self._complete_search(arm_action - SEARCH_0)
                    self._prim_count = 0
                    self._prim_last = -1
            elif arm_action in (PASS_0, PASS_1):
                if self._prim_count >= self.pass_ticks:
                    r, _ = self._complete_pass(arm_action - PASS_0)
                    reward += r
                    self._prim_count = 0
                    self._prim_last = -1
        else:
            # fresh macro picks reset per-macro counters
            for i in range(2):
                if self._statuses[i].elapsed == 0 and current[i] == GET_TOOL:
                    self._mobiles[i].wait_count = 0
            if self._statuses[ARM].elapsed == 0:
                self._arm_kind = current[ARM]
                self._arm_left = {
                    WAIT_M: 1,
                    SEARCH_0: self.search_ticks, SEARCH_1: self.search_ticks,
                    SEARCH_2: self.search_ticks,
                    PASS_0: self.pass_ticks, PASS_1: self.pass_ticks,
                }[self._arm_kind]

            # mobile robots move first so an arriving robot can receive a
            # pass completing on the same tick
            for i in range(2):
                if self._mobile_tick(i, current[i]):
                    term[i] = True

            self._arm_left -= 1
            if self._arm_left <= 0:
                term[ARM] = True
                if self._arm_kind in (SEARCH_0, SEARCH_1, SEARCH_2):
                    self._complete_search(self._arm_kind - SEARCH_0)
                elif self._arm_kind in (PASS_0, PASS_1):
                    robot = self._arm_kind - PASS_0
                    r, received = self._complete_pass(robot)
                    reward += r
                    if received:
                        term[robot] = True

        # deliveries: a robot in a workshop region hands over the next tool
        for i in range(2):
            pos = self._mobiles[i].pos
            for h in range(self.n_humans):
                human = self._humans[h]
                if human.delivered >= self.n_tool_types:
                    continue
                if not self._near(pos, self.wp_workshop[h]):
                    continue
                needed = human.delivered
                if needed in self._mobiles[i].basket:
                    self._mobiles[i].basket.remove(needed)
                    human.delivered += 1
                    reward += (
                        self.delayed_penalty if human.waiting else self.delivery_reward
                    )

        for human in self._humans:
            human.advance()

        done = all(h.delivered >= self.n_tool_types for h in self._humans)
        obs = self._observe()
        return reward, term, obs, done
