"""Ground-truth CartPole++: two decoupled planar cart-poles sharing one cart.

The arithmetic below mirrors the bundled PDDL+ domain operation for operation,
so with matching parameters the agent's model reproduces this environment
bit for bit.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, fields, replace

MAX_STEPS = 200
ACTIONS = ("none", "push_left", "push_right", "push_fwd", "push_back")

# push action -> (plane, push-force parameter, sign)
_PUSHES = {
    "push_left": ("x", "push_force_l", -1),
    "push_right": ("x", "push_force_r", 1),
    "push_back": ("y", "push_force_b", -1),
    "push_fwd": ("y", "push_force_f", 1),
}


@dataclass(frozen=True)
class CartPoleParams:
    l_pole: float = 0.5
    m_pole: float = 0.1
    m_cart: float = 1.0
    force_mag: float = 10.0
    gravity: float = 9.81
    angle_limit: float = 0.165
    push_force_l: float = 10.0
    push_force_r: float = 10.0
    push_force_f: float = 10.0
    push_force_b: float = 10.0
    pole_vel_x: float = 1.0
    pole_vel_y: float = 1.0
    cart_vel_x: float = 1.0
    cart_vel_y: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


PARAM_NAMES = tuple(f.name for f in fields(CartPoleParams))
ALIASES = {
    "length_pole": "l_pole",
    "mass_pole": "m_pole",
    "mass_cart": "m_cart",
    "force_magnitude": "force_mag",
    "pole_angle_limit": "angle_limit",
}


def plane_accels(force: float, theta: float, theta_dot: float, p: CartPoleParams) -> tuple[float, float]:
    """Cart and pole accelerations of one plane (classic frictionless cart-pole)."""
    s = math.sin(theta)
    c = math.cos(theta)
    total = p.m_pole + p.m_cart
    temp = (force + ((p.m_pole * p.l_pole) * (theta_dot * theta_dot)) * s) / total
    theta_acc = (p.gravity * s - c * temp) / (p.l_pole * (1.3333333333333333 - (p.m_pole * (c * c)) / total))
    x_acc = temp - (((p.m_pole * p.l_pole) * theta_acc) * c) / total
    return x_acc, theta_acc


@dataclass
class CartPoleState:
    cart_x: float = 0.0
    cart_x_dot: float = 0.0
    theta_x: float = 0.0
    theta_x_dot: float = 0.0
    cart_y: float = 0.0
    cart_y_dot: float = 0.0
    theta_y: float = 0.0
    theta_y_dot: float = 0.0
    elapsed_time: float = 0.0
    elapsed_steps: float = 0.0
    failed: bool = False


def cartpole_step(s: CartPoleState, action: str, p: CartPoleParams, dt: float = 0.02) -> CartPoleState:
    """One explicit-Euler step; returns a new state."""
    if action not in ACTIONS:
        raise ValueError(f"unknown cart-pole action {action!r}")
    forces = {"x": 0.0, "y": 0.0}
    if action != "none":
        plane, param, sign = _PUSHES[action]
        f = (p.force_mag * getattr(p, param)) / 10.0
        forces[plane] = f if sign > 0 else -f
    xa, ta = plane_accels(forces["x"], s.theta_x, s.theta_x_dot, p)
    ya, tb = plane_accels(forces["y"], s.theta_y, s.theta_y_dot, p)
    n = CartPoleState(
        cart_x=s.cart_x + dt * (p.cart_vel_x * s.cart_x_dot),
        cart_x_dot=s.cart_x_dot + dt * xa,
        theta_x=s.theta_x + dt * (p.pole_vel_x * s.theta_x_dot),
        theta_x_dot=s.theta_x_dot + dt * ta,
        cart_y=s.cart_y + dt * (p.cart_vel_y * s.cart_y_dot),
        cart_y_dot=s.cart_y_dot + dt * ya,
        theta_y=s.theta_y + dt * (p.pole_vel_y * s.theta_y_dot),
        theta_y_dot=s.theta_y_dot + dt * tb,
        elapsed_time=s.elapsed_time + dt * 1.0,
        elapsed_steps=s.elapsed_steps + 1.0,
    )
    lim = p.angle_limit
    n.failed = n.theta_x >= lim or n.theta_x <= -lim or n.theta_y >= lim or n.theta_y <= -lim
    return n


class CartPoleEnv:
    """Episode interface: ``reset(seed)`` then ``step(action)`` until terminal."""

    name = "cartpole"
    actions = ACTIONS
    entity_types = ("cart", "pole")

    def __init__(self, params: CartPoleParams | None = None, dt: float = 0.02, init_range: float = 0.02,
                 max_steps: int = MAX_STEPS):
        self.nominal = params or CartPoleParams()
        self.params = self.nominal
        self.dt = dt
        self.init_range = init_range
        self.max_steps = max_steps
        self.state: CartPoleState | None = None
        self.terminal = True

    # novelty hooks
    def set_params(self, overrides: dict[str, float]) -> None:
        updates = {}
        for name, value in overrides.items():
            key = ALIASES.get(name, name)
            if key not in PARAM_NAMES:
                raise KeyError(f"unknown cart-pole parameter {name!r}")
            updates[key] = float(value)
        self.params = replace(self.params, **updates)

    def scale_params(self, multipliers: dict[str, float]) -> None:
        current = self.params.as_dict()
        scaled = {}
        for name, factor in multipliers.items():
            key = ALIASES.get(name, name)
            if key not in current:
                raise KeyError(f"unknown cart-pole parameter {name!r}")
            scaled[key] = current[key] * factor
        self.set_params(scaled)

    def restore_nominal(self) -> None:
        self.params = self.nominal

    def observe(self) -> dict[str, float]:
        s = self.state
        return {
            "cart_x": s.cart_x, "cart_x_dot": s.cart_x_dot, "theta_x": s.theta_x, "theta_x_dot": s.theta_x_dot,
            "cart_y": s.cart_y, "cart_y_dot": s.cart_y_dot, "theta_y": s.theta_y, "theta_y_dot": s.theta_y_dot,
            "elapsed_time": s.elapsed_time, "elapsed_steps": s.elapsed_steps, "total_failure": s.failed,
        }

    def entities(self) -> list[tuple[str, float]]:
        return [(t, 1.0) for t in self.entity_types]

    def reset(self, seed: int) -> dict[str, float]:
        rng = random.Random(seed)
        r = self.init_range
        vals = [rng.uniform(-r, r) for _ in range(8)]
        self.state = CartPoleState(*vals)
        self.terminal = False
        return self.observe()

    def step(self, action: str | None) -> tuple[dict[str, float], float, bool]:
        if self.terminal:
            raise RuntimeError("episode is over; call reset()")
        self.state = cartpole_step(self.state, action or "none", self.params, self.dt)
        reward = 0.0 if self.state.failed else 1.0
        self.terminal = self.state.failed or self.state.elapsed_steps >= self.max_steps
        return self.observe(), reward, self.terminal

    @staticmethod
    def normalized(total_reward: float) -> float:
        return total_reward / MAX_STEPS
