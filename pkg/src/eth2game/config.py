"""JSON configuration: one section per module, unknown keys rejected.

Environment variables ``ETH2GAME_<SECTION>__<KEY>[__<SUBKEY>]`` override
single keys, e.g. ``ETH2GAME_GAME_CORE__N_AGENTS=5``. Values are parsed
as JSON when possible and as plain strings otherwise.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .game_core import GameConfig, LeakMode, Strategy
from .incentive_model import (
    CostSchedule,
    DomainError,
    IncentiveParams,
    NetworkParams,
    ProtocolWeights,
    TransactionTips,
)

ENV_PREFIX = "ETH2GAME_"


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SimulationSettings:
    epochs: int = 3125
    seed: int = 0
    proposer_cooperate: Fraction = Fraction(1)
    attester_cooperate: Fraction = Fraction(1)

    def __post_init__(self):
        if self.epochs < 1:
            raise DomainError("epochs must be >= 1")
        Strategy(self.proposer_cooperate, self.attester_cooperate)

    @property
    def strategy(self) -> Strategy:
        return Strategy(self.proposer_cooperate, self.attester_cooperate)


@dataclass(frozen=True)
class RunConfig:
    game: GameConfig = field(default_factory=GameConfig)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)


# -- value coercion ---------------------------------------------------------


def _int(path, v):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, str):
            try:
                return int(v)
            except ValueError:
                pass
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return v


def _frac(path, v):
    if isinstance(v, bool):
        raise ConfigError(path, f"expected a number, got {v!r}")
    try:
        if isinstance(v, float):
            return Fraction(str(v))
        if isinstance(v, (int, str)):
            return Fraction(v)
    except (ValueError, ZeroDivisionError):
        pass
    raise ConfigError(path, f"expected a number or 'p/q' string, got {v!r}")


def _optional(conv):
    def inner(path, v):
        return None if v is None else conv(path, v)
    return inner


def _leak(path, v):
    try:
        return LeakMode(v)
    except ValueError:
        raise ConfigError(path, f"expected one of {[m.value for m in LeakMode]}, got {v!r}") from None


def _frac_list(path, v):
    if not isinstance(v, list):
        raise ConfigError(path, f"expected a list, got {v!r}")
    return tuple(_frac(f"{path}[{k}]", x) for k, x in enumerate(v))


_WEIGHTS = {f.name: _int for f in fields(ProtocolWeights)}
_NETWORK = {f.name: _int for f in fields(NetworkParams)}
_NETWORK["total_staked"] = _optional(_int)
_NETWORK["n_attesters_per_epoch"] = _optional(_int)
_COSTS = {f.name: _frac for f in fields(CostSchedule)}
_GAME = {
    "n_agents": _int,
    "gamma_threshold": _frac,
    "inactivity_penalty": _optional(_frac),
    "leak_mode": _leak,
    "cost_per_epoch": _optional(_frac),
}
_SIM = {"epochs": _int, "seed": _int, "proposer_cooperate": _frac, "attester_cooperate": _frac}


def _section(path: str, data: Any, schema: Mapping) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")
    return {k: schema[k](f"{path}.{k}", v) for k, v in data.items()}


def _build(path, cls, kwargs):
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise DomainError(f"{path}: {exc}") from None


def from_dict(data: Mapping) -> RunConfig:
    top = _section("$", dict(data), {"incentive_model": lambda p, v: v,
                                     "game_core": lambda p, v: v,
                                     "slot_simulator": lambda p, v: v})
    im = top.get("incentive_model", {})
    if not isinstance(im, dict):
        raise ConfigError("$.incentive_model", "expected an object")
    unknown = sorted(set(im) - {"weights", "network", "costs", "tips", "effective_balance"})
    if unknown:
        raise ConfigError(f"$.incentive_model.{unknown[0]}", "unknown key")
    weights = _build("$.incentive_model.weights", ProtocolWeights,
                     _section("$.incentive_model.weights", im.get("weights", {}), _WEIGHTS))
    network = _build("$.incentive_model.network", NetworkParams,
                     _section("$.incentive_model.network", im.get("network", {}), _NETWORK))
    costs = _build("$.incentive_model.costs", CostSchedule,
                   _section("$.incentive_model.costs", im.get("costs", {}), _COSTS))
    tips = _build("$.incentive_model.tips", TransactionTips,
                  {"tips": _frac_list("$.incentive_model.tips", im.get("tips", []))})
    extra = {}
    if "effective_balance" in im:
        extra["effective_balance"] = _int("$.incentive_model.effective_balance", im["effective_balance"])
    params = _build("$.incentive_model", IncentiveParams,
                    dict(weights=weights, network=network, costs=costs, tips=tips, **extra))
    game = _build("$.game_core", GameConfig,
                  dict(_section("$.game_core", top.get("game_core", {}), _GAME), incentive_params=params))
    sim = _build("$.slot_simulator", SimulationSettings,
                 _section("$.slot_simulator", top.get("slot_simulator", {}), _SIM))
    return RunConfig(game, sim)


def _dump_value(v):
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, LeakMode):
        return v.value
    if isinstance(v, tuple):
        return [_dump_value(x) for x in v]
    return v


def _dump_dc(obj) -> dict:
    return {f.name: _dump_value(getattr(obj, f.name)) for f in fields(obj)}


def to_dict(cfg: RunConfig) -> dict:
    g = cfg.game
    ip = g.incentive_params
    return {
        "incentive_model": {
            "weights": _dump_dc(ip.weights),
            "network": _dump_dc(ip.network),
            "costs": _dump_dc(ip.costs),
            "tips": _dump_value(ip.tips.tips),
            "effective_balance": ip.effective_balance,
        },
        "game_core": {
            "n_agents": g.n_agents,
            "gamma_threshold": _dump_value(g.gamma_threshold),
            "inactivity_penalty": _dump_value(g.inactivity_penalty),
            "leak_mode": g.leak_mode.value,
            "cost_per_epoch": _dump_value(g.cost_per_epoch),
        },
        "slot_simulator": _dump_dc(cfg.simulation),
    }


def apply_env(data: dict, environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    data = json.loads(json.dumps(data))
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX):
            continue
        parts = [p.lower() for p in key[len(ENV_PREFIX):].split("__")]
        raw = environ[key]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("$." + ".".join(parts), "cannot override inside a non-object")
        node[parts[-1]] = value
    return data


def load(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from None
        except OSError as exc:
            raise ConfigError("$", f"cannot read {path}: {exc.strerror}") from None
    return from_dict(apply_env(data, environ))
