"""Network variants, parameter initialization, feature scaling, forward
evaluation (plain and jet mode), and checkpoint serialization.

Four variants arise from two switches: the optional trainable wave layer
``z = th1*a1 + th2*a2 + th3`` squeezed between the inputs and the hidden
stack, and the optional reaction-rate input for generalizing networks.
The wave layer forces the network into traveling-wave form: the output
depends on (x, t) only through z.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .autodiff import Jet, jet_binary, jet_scale, jet_unary
from .errors import ConfigurationError, UsageError
from .sampling import INIT_STREAM, rng_for

ACTIVATION_IDS = {"tanh": 0, "swish": 1, "sigmoid": 2, "sine": 3}

CHECKPOINT_MAGIC = b"FPNN"
CHECKPOINT_VERSION = 1


@dataclass
class NetworkConfig:
    architecture: str = "wave"
    generalizing: bool = False
    hidden_layers: int | None = None
    neurons: int = 20
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        if self.architecture not in ("standard", "wave"):
            raise ConfigurationError(f"unknown architecture {self.architecture!r}")
        if self.activation not in ACTIVATION_IDS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.hidden_layers is None:
            self.hidden_layers = 3 if self.generalizing else 2
        if self.hidden_layers < 1 or self.neurons < 1:
            raise ConfigurationError("need at least one hidden layer and one neuron")

    @property
    def wave(self) -> bool:
        return self.architecture == "wave"

    @property
    def n_inputs(self) -> int:
        """Logical inputs: (x, t) plus rho when generalizing."""
        return 3 if self.generalizing else 2

    @property
    def d0(self) -> int:
        """Fan-in of the first dense layer (the wave layer emits one scalar)."""
        return 1 if self.wave else self.n_inputs


@dataclass(frozen=True)
class LayerBlock:
    name: str
    offset: int
    shape: tuple


def layout(config: NetworkConfig) -> list[LayerBlock]:
    """Flat parameter layout: wave triple first, then W/b per dense layer."""
    blocks = []
    off = 0
    if config.wave:
        blocks.append(LayerBlock("wave", 0, (3,)))
        off = 3
    fan_in = config.d0
    for l in range(config.hidden_layers + 1):
        fan_out = config.neurons if l < config.hidden_layers else 1
        blocks.append(LayerBlock(f"W{l}", off, (fan_in, fan_out)))
        off += fan_in * fan_out
        blocks.append(LayerBlock(f"b{l}", off, (fan_out,)))
        off += fan_out
        fan_in = fan_out
    return blocks


def param_count(config: NetworkConfig) -> int:
    last = layout(config)[-1]
    return last.offset + int(np.prod(last.shape))


def dense_starts(config: NetworkConfig) -> np.ndarray:
    return np.array(
        [b.offset for b in layout(config) if b.name.startswith("W")], dtype=np.int64
    )


class ParameterVector:
    """Flat float64 parameter array plus a (block, row, col) -> index map."""

    def __init__(self, config: NetworkConfig, values: np.ndarray):
        expected = param_count(config)
        if values.shape != (expected,):
            raise UsageError(f"expected {expected} parameters, got {values.shape}")
        self.config = config
        self.values = np.asarray(values, dtype=np.float64)
        self.blocks = {b.name: b for b in layout(config)}

    def __len__(self) -> int:
        return self.values.size

    def index_of(self, name: str, i: int = 0, j: int | None = None) -> int:
        b = self.blocks[name]
        if len(b.shape) == 1:
            if j is not None:
                raise UsageError(f"block {name} is one-dimensional")
            if not 0 <= i < b.shape[0]:
                raise UsageError(f"index {i} out of range for block {name}")
            return b.offset + i
        rows, cols = b.shape
        if j is None or not (0 <= i < rows and 0 <= j < cols):
            raise UsageError(f"index ({i}, {j}) out of range for block {name}")
        return b.offset + i * cols + j

    def block(self, name: str) -> np.ndarray:
        b = self.blocks[name]
        return self.values[b.offset:b.offset + int(np.prod(b.shape))].reshape(b.shape)

    def copy(self) -> "ParameterVector":
        return ParameterVector(self.config, self.values.copy())


def init_params(config: NetworkConfig, seed: int | None = None) -> ParameterVector:
    """Glorot-uniform weights, zero biases, deterministic in the seed.

    The wave-layer slopes use the Glorot bound for (fan_in = logical wave
    inputs, fan_out = 1); its bias starts at zero like every other bias.
    """
    if seed is None:
        seed = config.seed
    rng = rng_for(seed, INIT_STREAM)
    values = np.zeros(param_count(config))
    if config.wave:
        bound = np.sqrt(6.0 / (config.n_inputs + 1))
        values[0:2] = rng.uniform(-bound, bound, size=2)
    for b in layout(config):
        if not b.name.startswith("W"):
            continue
        fan_in, fan_out = b.shape
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        values[b.offset:b.offset + fan_in * fan_out] = w.ravel()
    return ParameterVector(config, values)


@dataclass
class FeatureScaler:
    """Input scaling with the Jacobian factors used to seed jets.

    standard: every input mapped affinely onto [0, 1].
    wave:     x passed through unscaled, t mapped onto [0, 1], and the
              reaction rate turned into the pair (sqrt(rho), rho) that feeds
              the wave layer.
    """

    mode: str
    x_range: tuple[float, float]
    t_range: tuple[float, float]
    rho_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.mode not in ("standard", "wave"):
            raise ConfigurationError(f"unknown scaler mode {self.mode!r}")
        for name, rng in (("x", self.x_range), ("t", self.t_range)):
            if not rng[0] < rng[1]:
                raise ConfigurationError(f"degenerate {name} range {rng}")
        if self.rho_range is not None and not self.rho_range[0] < self.rho_range[1]:
            raise ConfigurationError(f"degenerate rho range {self.rho_range}")

    @property
    def s_x(self) -> float:
        if self.mode == "wave":
            return 1.0
        return 1.0 / (self.x_range[1] - self.x_range[0])

    @property
    def s_t(self) -> float:
        return 1.0 / (self.t_range[1] - self.t_range[0])

    def scale_x(self, x):
        if self.mode == "wave":
            return np.asarray(x, dtype=float)
        return (np.asarray(x, dtype=float) - self.x_range[0]) * self.s_x

    def scale_t(self, t):
        return (np.asarray(t, dtype=float) - self.t_range[0]) * self.s_t

    def scale_rho(self, rho):
        """Unit-range rho for the standard architecture (linear)."""
        if self.rho_range is None:
            raise ConfigurationError("scaler has no rho range configured")
        lo, hi = self.rho_range
        return (np.asarray(rho, dtype=float) - lo) / (hi - lo)

    def rho_features(self, rho):
        """Wave-layer rho transform (sqrt(rho), rho), raw magnitudes."""
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(rho), rho


class Network:
    """A network variant bound to a feature scaler; evaluates batches."""

    def __init__(self, config: NetworkConfig, scaler: FeatureScaler):
        if config.wave != (scaler.mode == "wave"):
            raise ConfigurationError("scaler mode does not match architecture")
        if config.generalizing and config.architecture == "standard" and scaler.rho_range is None:
            raise ConfigurationError("generalizing standard network needs a rho range")
        self.config = config
        self.scaler = scaler
        self.starts = dense_starts(config)
        self.n_params = param_count(config)

    @classmethod
    def for_problem(cls, config: NetworkConfig, problem) -> "Network":
        if config.generalizing != problem.generalizing:
            raise UsageError("network and problem disagree about generalizing mode")
        scaler = FeatureScaler(
            mode=config.architecture,
            x_range=problem.domain.x,
            t_range=problem.domain.t,
            rho_range=problem.rho_range,
        )
        return cls(config, scaler)

    # -- kernel input assembly ---------------------------------------------

    def _check_rho(self, rho):
        if self.config.generalizing and rho is None:
            raise UsageError("generalizing network needs a rho input")
        if not self.config.generalizing and rho is not None:
            raise UsageError("rho supplied to a non-generalizing network")

    def kernel_inputs(self, x, t, rho=None):
        """Scaled input matrix X plus the d/dx and d/dt seed matrices."""
        self._check_rho(rho)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, t = np.broadcast_arrays(x, t)
        n = x.size
        cfg, sc = self.config, self.scaler
        if cfg.wave:
            ts = sc.scale_t(t)
            if cfg.generalizing:
                rho = np.broadcast_to(np.asarray(rho, dtype=float), x.shape)
                r1, r2 = sc.rho_features(rho)
                a1, a2 = r1 * x, r2 * ts
                j1, j2 = r1 * sc.s_x, r2 * sc.s_t
            else:
                a1, a2 = x, ts
                j1 = np.full(n, sc.s_x)
                j2 = np.full(n, sc.s_t)
            X = np.stack((a1, a2), axis=1)
            SX = np.zeros((n, 2))
            SX[:, 0] = j1
            ST = np.zeros((n, 2))
            ST[:, 1] = j2
            return np.ascontiguousarray(X), SX, ST
        cols = [sc.scale_x(x), sc.scale_t(t)]
        if cfg.generalizing:
            rho = np.broadcast_to(np.asarray(rho, dtype=float), x.shape)
            cols.append(sc.scale_rho(rho))
        X = np.stack(cols, axis=1)
        d = len(cols)
        SX = np.zeros((n, d))
        SX[:, 0] = sc.s_x
        ST = np.zeros((n, d))
        ST[:, 1] = sc.s_t
        return np.ascontiguousarray(X), SX, ST

    # -- evaluation ----------------------------------------------------------

    def value(self, params, x, t, rho=None) -> np.ndarray:
        X, _, _ = self.kernel_inputs(x, t, rho)
        cfg = self.config
        return kernels.forward_plain(
            _values(params), self.starts, cfg.d0, cfg.neurons, cfg.hidden_layers,
            ACTIVATION_IDS[cfg.activation], 1 if cfg.wave else 0, X,
        )

    def jet(self, params, x, t, rho=None) -> Jet:
        """Prediction with physical-coordinate derivatives d/dx, d/dt, d2/dx2."""
        X, SX, ST = self.kernel_inputs(x, t, rho)
        cfg = self.config
        u, ux, ut, uxx = kernels.forward_jet(
            _values(params), self.starts, cfg.d0, cfg.neurons, cfg.hidden_layers,
            ACTIVATION_IDS[cfg.activation], 1 if cfg.wave else 0, X, SX, ST,
        )
        return Jet(u, ux, ut, uxx)


def _values(params) -> np.ndarray:
    if isinstance(params, ParameterVector):
        return params.values
    return np.asarray(params, dtype=np.float64)


def forward_reference(network: Network, params, x: float, t: float, rho=None) -> Jet:
    """Single-point forward pass built from jet algebra.

    ``params`` is any indexable of floats or tape Nodes; with Nodes the whole
    jet propagation lands on the tape, so a reverse sweep differentiates
    through it.  Slow; exists as the independently-written reference the
    vectorized kernels are tested against.
    """
    cfg, sc = network.config, network.scaler
    network._check_rho(rho)
    pv = ParameterVector(cfg, np.zeros(network.n_params))  # layout only
    idx = pv.index_of

    if cfg.wave:
        ts = float(sc.scale_t(t))
        if cfg.generalizing:
            r1, r2 = float(np.sqrt(rho)), float(rho)
            a1 = Jet(r1 * x, r1 * sc.s_x, 0.0, 0.0)
            a2 = Jet(r2 * ts, 0.0, r2 * sc.s_t, 0.0)
        else:
            a1 = Jet(float(x), sc.s_x, 0.0, 0.0)
            a2 = Jet(ts, 0.0, sc.s_t, 0.0)
        z = jet_binary("add", jet_scale(params[idx("wave", 0)], a1),
                       jet_scale(params[idx("wave", 1)], a2))
        z = jet_binary("add", z, Jet.constant(params[idx("wave", 2)]))
        hidden = [z]
    else:
        hidden = [
            Jet(float(sc.scale_x(x)), sc.s_x, 0.0, 0.0),
            Jet(float(sc.scale_t(t)), 0.0, sc.s_t, 0.0),
        ]
        if cfg.generalizing:
            hidden.append(Jet.constant(float(sc.scale_rho(rho))))

    for l in range(cfg.hidden_layers + 1):
        fan_out = cfg.neurons if l < cfg.hidden_layers else 1
        act = cfg.activation if l < cfg.hidden_layers else "sigmoid"
        act = "sin" if act == "sine" else act
        outputs = []
        for j in range(fan_out):
            acc = Jet.constant(params[idx(f"b{l}", j)])
            for i, h in enumerate(hidden):
                acc = jet_binary("add", acc, jet_scale(params[idx(f"W{l}", i, j)], h))
            outputs.append(jet_unary(act, acc))
        hidden = outputs
    return hidden[0]


# ---------------------------------------------------------------------------
# Checkpoints: magic, version, length-prefixed JSON header, raw float64 LE.
# ---------------------------------------------------------------------------


def save_checkpoint(path, header: dict, params) -> None:
    values = _values(params)
    meta = dict(header)
    meta["param_count"] = int(values.size)
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(values.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise UsageError(f"{path}: not a checkpoint file")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise UsageError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        values = np.frombuffer(fh.read(), dtype="<f8").copy()
    if values.size != header.get("param_count"):
        raise UsageError(f"{path}: parameter payload truncated")
    return header, values
