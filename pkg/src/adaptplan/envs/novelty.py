"""Hidden novelty injection at episode boundaries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping


@dataclass(frozen=True)
class NoveltySpec:
    """Overrides (absolute values) and multipliers applied from episode ``episode`` on."""

    name: str
    episode: int
    overrides: Mapping[str, float] = field(default_factory=dict)
    multipliers: Mapping[str, float] = field(default_factory=dict)
    new_entities: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.episode < 1:
            raise ValueError("novelty episode must be >= 1")

    @classmethod
    def from_config(cls, raw: Mapping, episode: int | None = None) -> "NoveltySpec":
        return cls(
            name=raw.get("name", "novelty"),
            episode=int(episode if episode is not None else raw.get("episode", 1)),
            overrides=dict(raw.get("overrides", {})),
            multipliers=dict(raw.get("multipliers", {})),
            new_entities=tuple(raw.get("new_entities", ())),
        )

    def as_dict(self) -> dict:
        return {"name": self.name, "episode": self.episode, "overrides": dict(self.overrides),
                "multipliers": dict(self.multipliers), "new_entities": list(self.new_entities)}


def inject_novelty(env, spec: NoveltySpec | None, episode_index: int):
    """Set the environment's ground truth for ``episode_index``: nominal before ``spec.episode``, novel from then on."""
    env.restore_nominal()
    if spec is None or episode_index < spec.episode:
        return env
    if spec.overrides:
        env.set_params(dict(spec.overrides))
    if spec.multipliers:
        if not hasattr(env, "scale_params"):
            current = {k: getattr(env.params, k) for k in spec.multipliers}
            env.set_params({k: current[k] * m for k, m in spec.multipliers.items()})
        else:
            env.scale_params(dict(spec.multipliers))
    if spec.new_entities:
        if not hasattr(env, "add_entities"):
            raise ValueError(f"environment {env.name} cannot host new entity types")
        env.add_entities(spec.new_entities)
    return env
