"""Scenario configuration: population, capacities, tree count, tracker width, seed."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigInvalidError

FRACTION_TOL = 1e-9

# Canonical scheme names. "proposed" is accepted as a CLI alias of "economy".
SCHEME_ECONOMY = "economy"
SCHEME_BASELINE = "baseline"
SCHEMES = (SCHEME_ECONOMY, SCHEME_BASELINE)
_SCHEME_ALIASES = {"proposed": SCHEME_ECONOMY}


def normalize_scheme(name: str) -> str:
    scheme = _SCHEME_ALIASES.get(str(name).strip().lower(), str(name).strip().lower())
    if scheme not in SCHEMES:
        raise ConfigInvalidError(
            f"unknown scheme {name!r}; expected one of {SCHEMES + tuple(_SCHEME_ALIASES)}"
        )
    return scheme


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario.

    ``peer_classes`` is a list of (budget, fraction) pairs; fractions must sum
    to 1. ``stream_rate`` defaults to ``num_substreams`` (each tree carries one
    normalized sub-stream unit).
    """

    name: str
    n: int
    num_substreams: int
    server_budget: int
    peer_classes: tuple[tuple[int, float], ...]
    neighbor_count: int
    seed: int = 0
    stream_rate: int = 0  # 0 → defaults to num_substreams
    substream_rate: int = 1

    def __post_init__(self):
        if self.stream_rate == 0:
            object.__setattr__(self, "stream_rate", self.num_substreams)
        object.__setattr__(
            self, "peer_classes", tuple((int(b), float(f)) for b, f in self.peer_classes)
        )
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.name, str) or not self.name:
            raise ConfigInvalidError("name must be a non-empty string")
        if self.n < 1:
            raise ConfigInvalidError(f"n must be >= 1, got {self.n}")
        if self.num_substreams < 1:
            raise ConfigInvalidError(f"num_substreams must be >= 1, got {self.num_substreams}")
        if self.server_budget < 1:
            raise ConfigInvalidError(f"server_budget must be >= 1, got {self.server_budget}")
        if self.neighbor_count < 1:
            raise ConfigInvalidError(f"neighbor_count must be >= 1, got {self.neighbor_count}")
        if self.seed < 0:
            raise ConfigInvalidError(f"seed must be >= 0, got {self.seed}")
        if self.stream_rate < 1 or self.substream_rate < 1:
            raise ConfigInvalidError("stream_rate and substream_rate must be >= 1")
        if not self.peer_classes:
            raise ConfigInvalidError("peer_classes must be non-empty")
        for budget, frac in self.peer_classes:
            if budget < 0:
                raise ConfigInvalidError(f"class budget must be >= 0, got {budget}")
            if not (0.0 <= frac <= 1.0):
                raise ConfigInvalidError(f"class fraction must be in [0,1], got {frac}")
        total = sum(f for _, f in self.peer_classes)
        if abs(total - 1.0) > FRACTION_TOL:
            raise ConfigInvalidError(f"class fractions must sum to 1, got {total!r}")

    @property
    def mean_budget(self) -> float:
        return sum(b * f for b, f in self.peer_classes)

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "num_substreams": self.num_substreams,
            "server_budget": self.server_budget,
            "peer_classes": [[b, f] for b, f in self.peer_classes],
            "neighbor_count": self.neighbor_count,
            "seed": self.seed,
            "stream_rate": self.stream_rate,
            "substream_rate": self.substream_rate,
        }


# Heterogeneous populations share one class mix: 37% low, 27% medium, 36% high.
_HET_FRACTIONS = (0.37, 0.27, 0.36)


def _het_classes(low: int, mid: int, high: int) -> tuple[tuple[int, float], ...]:
    return tuple(zip((low, mid, high), _HET_FRACTIONS))


def _preset(name, n_trees, server, classes, D) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        n=10000,
        num_substreams=n_trees,
        server_budget=server,
        peer_classes=classes,
        neighbor_count=D,
    )


# Named presets; D defaults to 4N and is overridable from the CLI.
PRESETS: dict[str, ScenarioConfig] = {
    "HM4-1": _preset("HM4-1", 4, 4, ((4, 1.0),), 16),
    "HM4-2": _preset("HM4-2", 4, 5, ((5, 1.0),), 16),
    "HM8-1": _preset("HM8-1", 8, 8, ((8, 1.0),), 32),
    "HM8-2": _preset("HM8-2", 8, 10, ((10, 1.0),), 32),
    "HT4-1": _preset("HT4-1", 4, 4, _het_classes(1, 3, 8), 16),
    "HT4-2": _preset("HT4-2", 4, 4, _het_classes(1, 4, 10), 16),
    "HT8-1": _preset("HT8-1", 8, 8, _het_classes(2, 6, 16), 32),
    "HT8-2": _preset("HT8-2", 8, 8, _het_classes(3, 7, 20), 32),
}


def load_config(source: str | Path) -> ScenarioConfig:
    """Resolve a preset name or a JSON config file path."""
    key = str(source)
    if key in PRESETS:
        return PRESETS[key]
    path = Path(source)
    if not path.exists():
        raise ConfigInvalidError(
            f"{source!r} is neither a preset ({', '.join(sorted(PRESETS))}) nor a file"
        )
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigInvalidError("config must be a JSON object")
    known = {
        "name", "n", "num_substreams", "server_budget", "peer_classes",
        "neighbor_count", "seed", "stream_rate", "substream_rate",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigInvalidError(f"unknown config keys: {sorted(unknown)}")
    missing = {"name", "n", "num_substreams", "server_budget", "peer_classes",
               "neighbor_count"} - set(raw)
    if missing:
        raise ConfigInvalidError(f"missing config keys: {sorted(missing)}")
    classes = raw["peer_classes"]
    try:
        classes = tuple((int(b), float(f)) for b, f in classes)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(f"peer_classes must be [[budget, fraction], ...]: {exc}")
    try:
        return ScenarioConfig(
            name=str(raw["name"]),
            n=int(raw["n"]),
            num_substreams=int(raw["num_substreams"]),
            server_budget=int(raw["server_budget"]),
            peer_classes=classes,
            neighbor_count=int(raw["neighbor_count"]),
            seed=int(raw.get("seed", 0)),
            stream_rate=int(raw.get("stream_rate", 0)),
            substream_rate=int(raw.get("substream_rate", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(f"bad config field: {exc}") from exc
