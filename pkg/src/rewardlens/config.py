"""Run-config documents: YAML files validated against ``configs/schema.json``."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from .core import HyperParams
from .envs import make_env
from .summarizer import SummarySpec

OUTPUT_ENV = "REWARDLENS_OUTPUT"
BUNDLED = ("highway", "pacman")


class ConfigError(ValueError):
    pass


def _schema() -> dict:
    return json.loads(resources.files("rewardlens").joinpath("configs/schema.json").read_text())


@dataclass(frozen=True)
class AgentSpec:
    id: str
    weights: tuple[float, ...]
    preferences: tuple[str, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    name: str
    env: str
    agents: tuple[AgentSpec, ...]
    env_config: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "rewardlens-out"
    hyperparams: dict = field(default_factory=dict)
    record_episodes: int = 100
    summary: dict = field(default_factory=dict)
    judge: dict = field(default_factory=dict)
    sanity: dict = field(default_factory=dict)
    source: str = "<memory>"

    def make_env(self, weights=None):
        return make_env(self.env, self.env_config, weights)

    def agent(self, agent_id: str) -> AgentSpec:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise ConfigError(f"{self.source}: no agent {agent_id!r} "
                          f"(have {', '.join(a.id for a in self.agents)})")

    def hp(self, seed: int) -> HyperParams:
        d = dict(self.hyperparams)
        frac = d.pop("epsilon_decay_fraction", 0.8)
        episodes = d.get("episodes", 2000)
        return HyperParams(**d, epsilon_decay_episodes=int(round(frac * episodes)), seed=seed)

    def summary_spec(self, seed: int = 0, method: str | None = None) -> SummarySpec:
        s = self.summary
        method = method or s.get("method", "highlights")
        threshold = s.get("div_threshold") if method == "highlights-div" else None
        return SummarySpec(k=s.get("k", 5), context_window=s.get("window", 10),
                           interval=s.get("interval", 10),
                           metric=s.get("metric", self.make_env().default_metric),
                           div_threshold=threshold, selection=method, seed=seed)

    def judged_components(self) -> list[str]:
        return list(self.judge.get("components") or self.make_env().components)

    def output_root(self, override: str | Path | None = None) -> Path:
        """``override`` beats the ``REWARDLENS_OUTPUT`` variable, which beats the config."""
        root = override or os.environ.get(OUTPUT_ENV) or self.output_dir
        return Path(root) / self.name


def parse_config(doc, source: str = "<memory>") -> RunConfig:
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{source}: {where}: {e.message}") from None
    agents = tuple(AgentSpec(a["id"], tuple(float(w) for w in a["weights"]),
                             tuple(a["preferences"]) if "preferences" in a else None)
                   for a in doc["agents"])
    ids = [a.id for a in agents]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{source}: agent ids must be unique")
    cfg = RunConfig(
        name=doc["name"], env=doc["env"], agents=agents,
        env_config=dict(doc.get("env_config", {})), seed=int(doc.get("seed", 0)),
        output_dir=doc.get("output_dir", "rewardlens-out"),
        hyperparams=dict(doc.get("hyperparams", {})),
        record_episodes=int(doc.get("record", {}).get("episodes", 100)),
        summary=dict(doc.get("summary", {})), judge=dict(doc.get("judge", {})),
        sanity=dict(doc.get("sanity", {})), source=source,
    )
    try:
        env = cfg.make_env()
        comps = env.components
        for a in agents:
            if len(a.weights) != len(comps):
                raise ConfigError(f"{source}: agent {a.id!r} has {len(a.weights)} weights, "
                                  f"environment {cfg.env!r} has components {list(comps)}")
        if "weights" in cfg.sanity and len(cfg.sanity["weights"]) != len(comps):
            raise ConfigError(f"{source}: sanity weights must have {len(comps)} entries")
        unknown = set(cfg.judged_components()) - set(comps)
        if unknown:
            raise ConfigError(f"{source}: judge components {sorted(unknown)} not in {list(comps)}")
        cfg.hp(0)
        cfg.summary_spec()
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{source}: {e}") from None
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML: {e}") from None
    return parse_config(doc, str(path))


def bundled_config_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("rewardlens").joinpath(f"configs/{name}.yaml")))


def load_bundled(name: str) -> RunConfig:
    return load_config(bundled_config_path(name))
