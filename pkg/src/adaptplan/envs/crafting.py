"""Ground-truth PogoCraft: a 10x10 crafting world scored by points.

Every action costs ``action_cost`` (also when it turns out to be inapplicable);
crafting the pogostick pays ``goal_reward`` and ends the episode.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

from ..planner import Guidance, register_heuristic

MOVES = {"move_north": (0, 1), "move_south": (0, -1), "move_east": (1, 0), "move_west": (-1, 0)}
ACTIONS = (*MOVES, "break_tree", "collect_sapling", "break_platinum", "break_diamond", "craft_pogostick",
           "trade", "scan_area", "open_safe", "mine_unknown")
GRID = 10
RECIPE_LOGS = 6
RECIPE_SAPLINGS = 1
INVENTORY = ("logs", "saplings", "platinum", "diamonds", "pogosticks")


@dataclass(frozen=True)
class CraftParams:
    break_log: int = 2
    break_platinum: int = 1
    break_diamond: int = 9
    collect_saplings: int = 1
    action_cost: float = 4000.0
    goal_reward: float = 128000.0
    reward_scale: float = 1.0

    def as_dict(self) -> dict:
        return asdict(self)


PARAM_NAMES = tuple(f.name for f in fields(CraftParams))
YIELDS = ("break_log", "break_platinum", "break_diamond", "collect_saplings")


@dataclass(frozen=True)
class Layout:
    start: tuple[int, int] = (0, 0)
    table: tuple[int, int] = (5, 5)
    trees: tuple[tuple[str, int, int], ...] = (
        ("t1", 1, 1), ("t2", 4, 2), ("t3", 6, 3), ("t4", 8, 8), ("t5", 1, 8))
    platinum: tuple[tuple[str, int, int], ...] = (("p1", 9, 0),)
    diamond: tuple[tuple[str, int, int], ...] = (("d1", 0, 9),)


class CraftingEnv:
    name = "crafting"
    actions = ACTIONS
    base_entities = ("tree", "crafting_table", "platinum_ore", "diamond_ore")

    def __init__(self, params: CraftParams | None = None, layout: Layout | None = None, max_steps: int = 60):
        self.nominal = params or CraftParams()
        self.params = self.nominal
        self.layout = layout or Layout()
        self.max_steps = max_steps
        self.extra_entities: tuple[str, ...] = ()
        self.terminal = True
        self.invalid_actions: list[str] = []

    # novelty hooks
    def set_params(self, overrides: dict) -> None:
        updates = {}
        for name, value in overrides.items():
            if name not in PARAM_NAMES:
                raise KeyError(f"unknown crafting parameter {name!r}")
            updates[name] = value if name not in YIELDS else int(value)
            if name in YIELDS and (int(value) != value or value < 1):
                raise ValueError(f"{name} must be a positive integer")
        self.params = replace(self.params, **updates)

    def scale_params(self, multipliers: dict) -> None:
        self.set_params({k: getattr(self.params, k) * m for k, m in multipliers.items() if self._known(k)})

    def _known(self, name: str) -> bool:
        if name not in PARAM_NAMES:
            raise KeyError(f"unknown crafting parameter {name!r}")
        return True

    def add_entities(self, types) -> None:
        self.extra_entities = tuple(dict.fromkeys((*self.extra_entities, *types)))

    def restore_nominal(self) -> None:
        self.params = self.nominal
        self.extra_entities = ()

    def entities(self) -> list[tuple[str, float]]:
        return [(t, 1.0) for t in (*self.base_entities, *self.extra_entities)]

    def reset(self, seed: int) -> dict:
        # the map is fixed; the seed is accepted for interface symmetry
        self.pos = list(self.layout.start)
        self.inv = dict.fromkeys(INVENTORY, 0)
        self.broken = {t: False for t, _, _ in self.layout.trees}
        self.taken = {t: False for t, _, _ in self.layout.trees}
        self.mined = {o: False for o, _, _ in (*self.layout.platinum, *self.layout.diamond)}
        self.explored = False
        self.steps = 0
        self.terminal = False
        self.invalid_actions = []
        return self.observe()

    def observe(self) -> dict:
        lay = self.layout
        obs: dict = {"pos_x": self.pos[0], "pos_y": self.pos[1], "table_x": lay.table[0], "table_y": lay.table[1]}
        obs.update(self.inv)
        obs["explored"] = self.explored
        for t, x, y in lay.trees:
            obs[f"tree_x {t}"], obs[f"tree_y {t}"] = x, y
            obs[f"broken {t}"], obs[f"sapling_taken {t}"] = self.broken[t], self.taken[t]
        for o, x, y in lay.platinum:
            obs[f"platinum_x {o}"], obs[f"platinum_y {o}"] = x, y
            obs[f"mined_platinum {o}"] = self.mined[o]
        for o, x, y in lay.diamond:
            obs[f"diamond_x {o}"], obs[f"diamond_y {o}"] = x, y
            obs[f"mined_diamond {o}"] = self.mined[o]
        return obs

    def _at(self, places, name: str) -> bool:
        for n, x, y in places:
            if n == name:
                return self.pos == [x, y]
        return False

    def _apply(self, name: str, arg: str | None) -> bool:
        p = self.params
        if name in MOVES:
            dx, dy = MOVES[name]
            x, y = self.pos[0] + dx, self.pos[1] + dy
            if not (0 <= x < GRID and 0 <= y < GRID):
                return False
            self.pos = [x, y]
            return True
        if name == "break_tree":
            if arg not in self.broken or self.broken[arg] or not self._at(self.layout.trees, arg):
                return False
            self.broken[arg] = True
            self.inv["logs"] += p.break_log
            return True
        if name == "collect_sapling":
            if arg not in self.taken or not self.broken[arg] or self.taken[arg] or not self._at(self.layout.trees, arg):
                return False
            self.taken[arg] = True
            self.inv["saplings"] += p.collect_saplings
            return True
        if name in ("break_platinum", "break_diamond"):
            places = self.layout.platinum if name == "break_platinum" else self.layout.diamond
            if arg not in self.mined or self.mined[arg] or not self._at(places, arg):
                return False
            self.mined[arg] = True
            key, amount = ("platinum", p.break_platinum) if name == "break_platinum" else ("diamonds", p.break_diamond)
            self.inv[key] += amount
            return True
        if name == "craft_pogostick":
            if self.pos != list(self.layout.table) or self.inv["logs"] < RECIPE_LOGS or self.inv["saplings"] < RECIPE_SAPLINGS:
                return False
            self.inv["logs"] -= RECIPE_LOGS
            self.inv["saplings"] -= RECIPE_SAPLINGS
            self.inv["pogosticks"] += 1
            return True
        if name == "scan_area":
            self.explored = True
            return True
        # trade, open_safe, mine_unknown: no traders, keys or novel blocks on this map
        return False

    def step(self, action: str | None) -> tuple[dict, float, bool]:
        if self.terminal:
            raise RuntimeError("episode is over; call reset()")
        name, _, arg = (action or "").partition(" ")
        if name not in ACTIONS:
            raise ValueError(f"unknown crafting action {action!r}")
        ok = self._apply(name, arg.strip() or None)
        if not ok:
            self.invalid_actions.append(action)
        self.steps += 1
        scale = self.params.reward_scale
        reward = -self.params.action_cost * scale
        if ok and name == "craft_pogostick":
            reward += self.params.goal_reward * scale
            self.terminal = True
        if self.steps >= self.max_steps:
            self.terminal = True
        return self.observe(), reward, self.terminal

    def normalized(self, total_reward: float) -> float:
        return total_reward


def normalize_reward(r: float, params: CraftParams = CraftParams()) -> float:
    """Map a per-step reward onto [0, 1] using the nominal cost and goal reward."""
    return (r + params.action_cost) / params.goal_reward


def reward_features(obs: dict, action: str | None) -> tuple[list[float], list[float]]:
    state = [float(obs[k]) / 10.0 for k in INVENTORY] + [obs["pos_x"] / 10.0, obs["pos_y"] / 10.0]
    name = (action or "").split(" ")[0]
    onehot = [1.0 if name == a else 0.0 for a in ACTIONS]
    return state, onehot


class CraftGuidance(Guidance):
    """Unit action cost; estimate counts breaks, sapling, craft and grid travel still needed."""

    def __init__(self, model):
        pos = model.table.position
        self.px, self.py = pos("pos_x"), pos("pos_y")
        self.logs, self.saps, self.pogo = pos("logs"), pos("saplings"), pos("pogosticks")
        self.yield_ = pos("break_log")
        self.table = (pos("table_x"), pos("table_y"))
        self.trees = [(pos(("tree_x", o)), pos(("tree_y", o)), pos(("broken", o)), pos(("sapling_taken", o)))
                      for o in sorted(n for n, t in model.problem.objects.items() if t == "tree")]

    def estimate(self, v, depth):
        if v[self.pogo] >= 1:
            return 0.0
        x, y = v[self.px], v[self.py]
        need = RECIPE_LOGS - v[self.logs]
        breaks = math.ceil(need / v[self.yield_]) if need > 0 and v[self.yield_] > 0 else (0 if need <= 0 else 99)
        sapling = 1 if v[self.saps] < RECIPE_SAPLINGS else 0
        tx, ty = v[self.table[0]], v[self.table[1]]
        if breaks or sapling:
            useful = [(v[i], v[j]) for i, j, b, s in self.trees
                      if (breaks and not v[b]) or (sapling and not v[s])]
            if not useful:
                return 999.0
            travel = min(abs(a - x) + abs(b - y) + abs(tx - a) + abs(ty - b) for a, b in useful)
        else:
            travel = abs(tx - x) + abs(ty - y)
        return float(breaks + sapling + 1 + travel)


@register_heuristic("crafting")
def _crafting(model, goal, cfg) -> Guidance:
    return CraftGuidance(model)
