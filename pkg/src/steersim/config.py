"""Session configuration: one self-contained JSON file per session.

The file carries the timing block, the noise model, the strategy, the trial
count and an explicit seed (no implicit entropy anywhere). Strategy
references may point at ensemble/analyzer files; manifests always embed
them inline so a manifest alone reproduces the session byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ConfigurationError, MalformedInputError
from .model import SETTINGS, AnalyzerModel, LhsEnsemble, NoiseModel
from .protocol import HonestStrategy, LhsStrategy, Strategy
from .timing import TimingConfig


def noise_to_json(noise: NoiseModel) -> dict:
    return {
        "eta_alice": noise.eta_alice,
        "eta_bob": noise.eta_bob,
        "visibility": {s.name: noise.v_per_basis[s] for s in SETTINGS},
    }


def noise_from_json(data: Mapping) -> NoiseModel:
    try:
        return NoiseModel(
            eta_alice=float(data["eta_alice"]),
            eta_bob=float(data.get("eta_bob", 1.0)),
            v_per_basis=data.get("visibility", 1.0)
            if isinstance(data.get("visibility", 1.0), Mapping)
            else {s: float(data.get("visibility", 1.0)) for s in SETTINGS},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed noise block: {exc}") from None


@dataclass(frozen=True)
class SessionConfig:
    timing: TimingConfig
    noise: NoiseModel
    strategy: Strategy
    n_trials: int
    seed: int
    output_dir: Path | None = None
    write_events: bool = True

    def echo(self) -> dict:
        """Canonical self-contained form (strategy embedded inline)."""
        if isinstance(self.strategy, HonestStrategy):
            strategy: object = "honest"
        else:
            strategy = {
                "lhs": {
                    "ensemble": self.strategy.ensemble.to_json(),
                    "bob_analyzer": None
                    if self.strategy.bob_analyzer is None
                    else self.strategy.bob_analyzer.to_json(),
                }
            }
        return {
            "timing": self.timing.to_json(),
            "noise": noise_to_json(self.noise),
            "strategy": strategy,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "output_dir": None if self.output_dir is None else str(self.output_dir),
            "write_events": self.write_events,
        }


def _load_ref(ref, base_dir: Path, loader, what: str):
    """Resolve an inline object or a path reference relative to the config."""
    if isinstance(ref, Mapping):
        return loader(ref)
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigurationError(f"{what} file does not exist: {path}")
        with open(path) as fh:
            try:
                return loader(json.load(fh))
            except json.JSONDecodeError as exc:
                raise MalformedInputError(f"{path}: {exc}") from None
    raise ConfigurationError(f"{what} must be a path or an inline object")


def config_from_json(data: Mapping, base_dir: Path | None = None) -> SessionConfig:
    base_dir = base_dir or Path.cwd()
    try:
        timing = TimingConfig.from_json(dict(data.get("timing", {})))
        noise = noise_from_json(data.get("noise", {"eta_alice": 1.0}))
        n_trials = int(data["n_trials"])
        seed = int(data["seed"])
    except KeyError as exc:
        raise ConfigurationError(f"config is missing required field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed config: {exc}") from None

    raw_strategy = data.get("strategy", "honest")
    strategy: Strategy
    if raw_strategy == "honest":
        strategy = HonestStrategy()
    elif isinstance(raw_strategy, Mapping) and "lhs" in raw_strategy:
        block = raw_strategy["lhs"]
        if not isinstance(block, Mapping) or "ensemble" not in block:
            raise ConfigurationError("lhs strategy needs an 'ensemble' entry")
        ensemble = _load_ref(block["ensemble"], base_dir, LhsEnsemble.from_json, "ensemble")
        analyzer = None
        if block.get("bob_analyzer") is not None:
            analyzer = _load_ref(
                block["bob_analyzer"], base_dir, AnalyzerModel.from_json, "analyzer"
            )
        strategy = LhsStrategy(ensemble=ensemble, bob_analyzer=analyzer)
    else:
        raise ConfigurationError(f"unknown strategy {raw_strategy!r}")

    if n_trials < 1:
        raise ConfigurationError(f"n_trials must be >= 1, got {n_trials}")
    output_dir = data.get("output_dir")
    return SessionConfig(
        timing=timing,
        noise=noise,
        strategy=strategy,
        n_trials=n_trials,
        seed=seed,
        output_dir=None if output_dir is None else Path(output_dir),
        write_events=bool(data.get("write_events", True)),
    )


def load_config(path: str | Path) -> SessionConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file does not exist: {path}")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"{path}: {exc}") from None
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{path}: config root must be an object")
    return config_from_json(data, base_dir=path.parent)
