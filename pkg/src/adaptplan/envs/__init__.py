"""Bundled ground-truth environments."""

from .cartpole import CartPoleEnv, CartPoleParams, cartpole_step
from .crafting import CraftingEnv, CraftParams
from .novelty import NoveltySpec, inject_novelty

ENVIRONMENTS = {"cartpole": CartPoleEnv, "crafting": CraftingEnv}


def make_env(name: str, **kwargs):
    try:
        return ENVIRONMENTS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; known: {sorted(ENVIRONMENTS)}") from None


__all__ = ["CartPoleEnv", "CartPoleParams", "CraftParams", "CraftingEnv", "ENVIRONMENTS", "NoveltySpec",
           "cartpole_step", "inject_novelty", "make_env"]
