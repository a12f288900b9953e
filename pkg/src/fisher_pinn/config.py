"""Experiment configuration: one JSON document describing problem, model,
and optimization settings, with every omitted field falling back to the
default experimental setup and unknown keys rejected."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigurationError, UsageError
from .model import NetworkConfig
from .physics import FisherProblem
from .sampling import Domain
from .training import MODEL_VARIANTS, TrainConfig, config_hash

# dataclass attribute -> JSON key (only where they differ)
_JSON_KEYS = {"lam": "lambda"}


@dataclass
class ExperimentConfig:
    model: str = "wave-pinn"
    rho: float | list = 1000.0  # scalar: discrete-rho; [lo, hi]: generalizing
    mu: float = 10.0
    lam: float = 1.0
    x_range: list = field(default_factory=lambda: [-5.0, 5.0])
    t_range: list = field(default_factory=lambda: [0.0, 0.004])
    epochs: int | None = None
    lr0: float = 1e-3
    decay: float = 0.95
    decay_every: int = 1000
    n_data: int = 1024
    n_col: int = 1024
    n_test: int = 1024
    record_stride: int = 100
    hidden_layers: int | None = None
    neurons: int = 20
    activation: str = "tanh"
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str | None = None

    def __post_init__(self):
        if self.model not in MODEL_VARIANTS:
            raise ConfigurationError(f"unknown model {self.model!r}")
        if isinstance(self.rho, (list, tuple)) and len(self.rho) != 2:
            raise ConfigurationError("rho range must be [lo, hi]")
        if not self.seeds:
            raise ConfigurationError("seeds must be non-empty")

    # -- construction --------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        json_to_attr = {_JSON_KEYS.get(f.name, f.name): f.name for f in fields(cls)}
        unknown = sorted(set(data) - set(json_to_attr))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{json_to_attr[k]: v for k, v in data.items()})

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    # -- derived views --------------------------------------------------------

    @property
    def generalizing(self) -> bool:
        return isinstance(self.rho, (list, tuple))

    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return int(self.epochs)
        return 100_000 if self.generalizing else 50_000

    def resolved_hidden_layers(self) -> int:
        if self.hidden_layers is not None:
            return int(self.hidden_layers)
        return 3 if self.generalizing else 2

    def problem(self) -> FisherProblem:
        domain = Domain(x=tuple(self.x_range), t=tuple(self.t_range),
                        rho=tuple(self.rho) if self.generalizing else self.rho)
        if self.generalizing:
            return FisherProblem(rho=None, mu=self.mu, lam=self.lam, domain=domain,
                                 rho_range=tuple(self.rho))
        return FisherProblem(rho=float(self.rho), mu=self.mu, lam=self.lam,
                             domain=domain)

    def network_config(self, seed: int) -> NetworkConfig:
        return NetworkConfig(
            architecture=MODEL_VARIANTS[self.model][0],
            generalizing=self.generalizing,
            hidden_layers=self.resolved_hidden_layers(),
            neurons=self.neurons,
            activation=self.activation,
            seed=seed,
        )

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            model=self.model, epochs=self.epochs, lr0=self.lr0, decay=self.decay,
            decay_every=self.decay_every, n_data=self.n_data, n_col=self.n_col,
            n_test=self.n_test, record_stride=self.record_stride, seed=seed,
        )

    def echo(self) -> dict:
        """Full resolved configuration, JSON-keyed, for provenance sidecars."""
        out = {}
        for f in fields(self):
            out[_JSON_KEYS.get(f.name, f.name)] = getattr(self, f.name)
        out["epochs"] = self.resolved_epochs()
        out["hidden_layers"] = self.resolved_hidden_layers()
        return out

    def run_signature(self) -> str:
        """Hash of the fields that define one trained run (seed excluded)."""
        ident = self.echo()
        ident.pop("seeds")
        ident.pop("out_dir")
        return config_hash(ident)[:10]
