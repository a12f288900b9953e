"""Full-batch Adam training of the four model variants with per-epoch
resampling, staircase learning-rate decay and learning-curve capture.

One epoch = one freshly sampled batch and one Adam step.  Data-driven
variants minimize the data loss on interior samples; physics-informed
variants minimize boundary/IC data loss plus the (optionally weighted)
collocation residual loss.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import evaluation, kernels
from .backend import BACKEND
from .errors import ConfigurationError, UsageError
from .model import ACTIVATION_IDS, Network, NetworkConfig, init_params
from .physics import FisherProblem
from .sampling import draw_epoch, sample_test_points

# model name -> (architecture, uses physics loss)
MODEL_VARIANTS = {
    "standard-ann": ("standard", False),
    "wave-ann": ("wave", False),
    "standard-pinn": ("standard", True),
    "wave-pinn": ("wave", True),
}


@dataclass
class TrainConfig:
    model: str = "wave-pinn"
    epochs: int | None = None  # resolved: 50k discrete, 100k generalizing
    lr0: float = 1e-3
    decay: float = 0.95
    decay_every: int = 1000
    n_data: int = 1024
    n_col: int = 1024
    n_test: int = 1024
    record_stride: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_VARIANTS:
            raise ConfigurationError(
                f"unknown model {self.model!r}, expected one of {sorted(MODEL_VARIANTS)}"
            )
        if self.epochs is not None and self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")

    def resolved_epochs(self, generalizing: bool) -> int:
        if self.epochs is not None:
            return self.epochs
        return 100_000 if generalizing else 50_000

    @property
    def use_physics(self) -> bool:
        return MODEL_VARIANTS[self.model][1]

    @property
    def architecture(self) -> str:
        return MODEL_VARIANTS[self.model][0]


@dataclass
class OptimizerState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int) -> "OptimizerState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def lr_schedule(epoch: int, lr0: float = 1e-3, decay: float = 0.95,
                every: int = 1000) -> float:
    """Staircase exponential decay: lr0 * decay^floor(epoch / every)."""
    if epoch < 0:
        raise UsageError(f"epoch must be >= 0, got {epoch}")
    return lr0 * decay ** (epoch // every)


def adam_step(params: np.ndarray, grads: np.ndarray, state: OptimizerState,
              lr: float) -> np.ndarray:
    """One bias-corrected Adam update, in place."""
    if params.shape != grads.shape:
        raise UsageError("parameter/gradient length mismatch")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    mhat = state.m / (1.0 - state.beta1 ** state.step)
    vhat = state.v / (1.0 - state.beta2 ** state.step)
    params -= lr * mhat / (np.sqrt(vhat) + state.eps)
    return params


@dataclass
class RunRecord:
    """Everything one training run produced.

    ``rows`` holds the strided learning curve; data-driven runs have no
    physics-loss column.  The CSV body is a pure function of (config, seed,
    backend); wall time and timestamps live only in the JSON sidecar.
    """

    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int = 0
    final_params: np.ndarray | None = None
    final_l2: float = float("nan")
    wall_time_s: float = 0.0
    diverged: bool = False

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                                  for v in row))
        return "\n".join(lines) + "\n"

    def sidecar(self) -> dict:
        return {
            "config": self.config,
            "config_hash": config_hash(self.config),
            "seed": self.seed,
            "final_l2": self.final_l2,
            "wall_time_s": self.wall_time_s,
            "diverged": self.diverged,
            "backend": BACKEND,
        }

    def write(self, directory, stem: str) -> None:
        (directory / f"{stem}.csv").write_text(self.to_csv_text(), encoding="utf-8")
        (directory / f"{stem}.json").write_text(
            json.dumps(self.sidecar(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


def train(problem: FisherProblem, net_config: NetworkConfig,
          train_config: TrainConfig, config_echo: dict | None = None) -> RunRecord:
    """Train one seed and capture its learning curve and final error."""
    if net_config.architecture != train_config.architecture:
        raise UsageError("network architecture does not match the model variant")
    seed = train_config.seed
    use_physics = train_config.use_physics
    network = Network.for_problem(net_config, problem)
    params = init_params(net_config, seed).values
    state = OptimizerState.zeros(params.size)
    epochs = train_config.resolved_epochs(problem.generalizing)

    cfg = net_config
    act_id = ACTIVATION_IDS[cfg.activation]
    wave = 1 if cfg.wave else 0
    starts = network.starts

    test = sample_test_points(train_config.n_test, problem, seed)
    X_test, _, _ = network.kernel_inputs(
        test.labeled_x, test.labeled_t, test.labeled_rho if cfg.generalizing else None
    )

    columns = ["epoch", "loss_total", "loss_data", "loss_physics", "test_mse"]
    if not use_physics:
        columns = ["epoch", "loss_total", "loss_data", "test_mse"]

    record = RunRecord(columns=columns, config=config_echo or {}, seed=seed)
    t_start = time.perf_counter()
    grad = np.zeros(params.size)

    for epoch in range(epochs):
        batch = draw_epoch(problem, use_physics, train_config.n_data,
                           train_config.n_col, seed, epoch)
        grad[:] = 0.0
        Xl, _, _ = network.kernel_inputs(
            batch.labeled_x, batch.labeled_t,
            batch.labeled_rho if cfg.generalizing else None,
        )
        loss_data = kernels.loss_grad_plain(
            params, starts, cfg.d0, cfg.neurons, cfg.hidden_layers, act_id, wave,
            Xl, batch.labeled_u, grad,
        )
        loss_physics = None
        if use_physics:
            Xc, SXc, STc = network.kernel_inputs(
                batch.collocation_x, batch.collocation_t,
                batch.collocation_rho if cfg.generalizing else None,
            )
            loss_physics = kernels.loss_grad_jet(
                params, starts, cfg.d0, cfg.neurons, cfg.hidden_layers, act_id, wave,
                Xc, SXc, STc, batch.collocation_rho, problem.mu, problem.lam, grad,
            )
        loss_total = loss_data + (loss_physics if loss_physics is not None else 0.0)

        if epoch % train_config.record_stride == 0 or epoch == epochs - 1:
            pred = kernels.forward_plain(
                params, starts, cfg.d0, cfg.neurons, cfg.hidden_layers, act_id, wave,
                X_test,
            )
            test_mse = float(np.mean((pred - test.labeled_u) ** 2))
            if use_physics:
                record.rows.append((epoch, float(loss_total), float(loss_data),
                                    float(loss_physics), test_mse))
            else:
                record.rows.append((epoch, float(loss_total), float(loss_data), test_mse))

        if not np.isfinite(loss_total) or not np.all(np.isfinite(grad)):
            record.diverged = True
            break

        adam_step(params, grad, state,
                  lr_schedule(epoch, train_config.lr0, train_config.decay,
                              train_config.decay_every))

    record.final_params = params
    record.wall_time_s = time.perf_counter() - t_start
    if not record.diverged or np.all(np.isfinite(params)):
        if problem.generalizing:
            record.final_l2 = evaluation.interior_rho_l2(network, params, problem)
        else:
            record.final_l2 = evaluation.l2_error(network, params, problem)
    return record
