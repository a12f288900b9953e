"""Independent gradient verification.

Three routes to the same total-loss gradient:

1. the fused vectorized kernels (production path),
2. the scalar reference tape (independent implementation),
3. central finite differences of the loss value (oracle).

The residual weights are stop-gradients, so the differentiated objective is
the loss with the weights frozen at the evaluation point; the finite
difference oracle therefore freezes them too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .autodiff import Tape
from .errors import UsageError
from .model import (
    ACTIVATION_IDS,
    Network,
    NetworkConfig,
    forward_reference,
    init_params,
    layout,
)
from .physics import FisherProblem, reaction, weight
from .sampling import SampleBatch, draw_epoch
from .training import MODEL_VARIANTS


def _kernel_args(network: Network):
    cfg = network.config
    return (network.starts, cfg.d0, cfg.neurons, cfg.hidden_layers,
            ACTIVATION_IDS[cfg.activation], 1 if cfg.wave else 0)


def loss_value(network: Network, params: np.ndarray, problem: FisherProblem,
               batch: SampleBatch, use_physics: bool,
               frozen_omega: np.ndarray | None = None) -> float:
    """Total loss via the forward kernels only (no gradient path shared with
    the fused backward)."""
    cfg = network.config
    rho_l = batch.labeled_rho if cfg.generalizing else None
    Xl, _, _ = network.kernel_inputs(batch.labeled_x, batch.labeled_t, rho_l)
    pred = kernels.forward_plain(params, *_kernel_args(network), Xl)
    loss = float(np.mean((pred - batch.labeled_u) ** 2))
    if use_physics:
        rho_c = batch.collocation_rho if cfg.generalizing else None
        Xc, SXc, STc = network.kernel_inputs(batch.collocation_x, batch.collocation_t, rho_c)
        u, ux, ut, uxx = kernels.forward_jet(params, *_kernel_args(network), Xc, SXc, STc)
        f = ut - problem.mu * uxx - reaction(u, batch.collocation_rho)
        om = frozen_omega
        if om is None:
            om = weight(u, batch.collocation_rho, problem.lam)
        loss += float(np.mean((om * f) ** 2))
    return loss


def frozen_omegas(network: Network, params: np.ndarray, problem: FisherProblem,
                  batch: SampleBatch) -> np.ndarray:
    """Residual weights at the current parameters (the stop-gradient values)."""
    cfg = network.config
    rho_c = batch.collocation_rho if cfg.generalizing else None
    Xc, SXc, STc = network.kernel_inputs(batch.collocation_x, batch.collocation_t, rho_c)
    u, _, _, _ = kernels.forward_jet(params, *_kernel_args(network), Xc, SXc, STc)
    return weight(u, batch.collocation_rho, problem.lam)


def fused_loss_grad(network: Network, params: np.ndarray, problem: FisherProblem,
                    batch: SampleBatch, use_physics: bool):
    """Loss and gradient from the production kernels."""
    cfg = network.config
    grad = np.zeros(params.size)
    rho_l = batch.labeled_rho if cfg.generalizing else None
    Xl, _, _ = network.kernel_inputs(batch.labeled_x, batch.labeled_t, rho_l)
    loss = kernels.loss_grad_plain(params, *_kernel_args(network), Xl,
                                   batch.labeled_u, grad)
    if use_physics:
        rho_c = batch.collocation_rho if cfg.generalizing else None
        Xc, SXc, STc = network.kernel_inputs(batch.collocation_x, batch.collocation_t, rho_c)
        loss += kernels.loss_grad_jet(params, *_kernel_args(network), Xc, SXc, STc,
                                      batch.collocation_rho, problem.mu, problem.lam,
                                      grad)
    return float(loss), grad


def tape_loss_grad(network: Network, params: np.ndarray, problem: FisherProblem,
                   batch: SampleBatch, use_physics: bool):
    """Loss and gradient from the scalar reference tape."""
    cfg = network.config
    tape = Tape()
    pnodes = tape.params_from(params)
    terms = []
    for i in range(batch.labeled_x.size):
        rho_i = batch.labeled_rho[i] if cfg.generalizing else None
        jet = forward_reference(network, pnodes, batch.labeled_x[i],
                                batch.labeled_t[i], rho_i)
        terms.append(tape.square(jet.v - float(batch.labeled_u[i])))
    loss = tape.mean(terms)
    if use_physics:
        pterms = []
        for i in range(batch.collocation_x.size):
            rho_i = float(batch.collocation_rho[i])
            jet = forward_reference(network, pnodes, batch.collocation_x[i],
                                    batch.collocation_t[i],
                                    rho_i if cfg.generalizing else None)
            f = jet.dt - problem.mu * jet.dxx - rho_i * (jet.v * (1.0 - jet.v))
            om = float(weight(jet.v.value, rho_i, problem.lam))
            pterms.append(tape.square(om * f))
        loss = loss + tape.mean(pterms)
    return loss.value, tape.gradient(loss, params.size)


def fd_gradient(fn, params: np.ndarray, step=1e-5) -> np.ndarray:
    """Central finite differences of a scalar function of the parameters.

    ``step`` may be a scalar or a per-parameter array.
    """
    steps = np.broadcast_to(np.asarray(step, dtype=float), params.shape)
    grad = np.empty(params.size)
    work = params.copy()
    for k in range(params.size):
        work[k] = params[k] + steps[k]
        fp = fn(work)
        work[k] = params[k] - steps[k]
        fm = fn(work)
        work[k] = params[k]
        grad[k] = (fp - fm) / (2.0 * steps[k])
    return grad


class OracleLoss:
    """Independent plain-numpy evaluation of the per-point loss terms.

    Written directly from the layer equations (no kernel code shared) and
    parameterized over the float dtype: the finite-difference oracle runs it
    in extended precision, where the  |f|^2-sized physics loss would
    otherwise drown small parameter sensitivities in float64 rounding.
    """

    def __init__(self, network: Network, problem: FisherProblem,
                 batch: SampleBatch, use_physics: bool,
                 frozen_omega: np.ndarray | None, dtype=np.longdouble):
        cfg = network.config
        self.cfg = cfg
        self.problem = problem
        self.use_physics = use_physics
        self.dtype = dtype
        rho_l = batch.labeled_rho if cfg.generalizing else None
        Xl, _, _ = network.kernel_inputs(batch.labeled_x, batch.labeled_t, rho_l)
        self.Xl = Xl.astype(dtype)
        self.targets = batch.labeled_u.astype(dtype)
        self.blocks = {b.name: b for b in layout(cfg)}
        if use_physics:
            rho_c = batch.collocation_rho if cfg.generalizing else None
            Xc, SXc, STc = network.kernel_inputs(
                batch.collocation_x, batch.collocation_t, rho_c)
            self.Xc = Xc.astype(dtype)
            self.SXc = SXc.astype(dtype)
            self.STc = STc.astype(dtype)
            self.rho_c = batch.collocation_rho.astype(dtype)
            self.omega = None if frozen_omega is None else frozen_omega.astype(dtype)

    def _weights(self, params, l):
        blk = self.blocks[f"W{l}"]
        W = params[blk.offset:blk.offset + blk.shape[0] * blk.shape[1]].reshape(blk.shape)
        bblk = self.blocks[f"b{l}"]
        return W, params[bblk.offset:bblk.offset + bblk.shape[0]]

    def _act(self, A, order: int, output: bool):
        kind = "sigmoid" if output else self.cfg.activation
        if kind == "tanh":
            Y = np.tanh(A)
            F1 = 1 - Y * Y
            F2 = -2 * Y * F1
        elif kind == "sigmoid":
            Y = 1 / (1 + np.exp(-A))
            F1 = Y * (1 - Y)
            F2 = F1 * (1 - 2 * Y)
        elif kind == "swish":
            S = 1 / (1 + np.exp(-A))
            S1 = S * (1 - S)
            Y = A * S
            F1 = S + A * S1
            F2 = 2 * S1 + A * S1 * (1 - 2 * S)
        else:
            Y = np.sin(A)
            F1 = np.cos(A)
            F2 = -Y
        if order == 0:
            return (Y,)
        return Y, F1, F2

    def terms(self, params64: np.ndarray):
        """(data errors, weighted residuals or None) at these parameters."""
        params = params64.astype(self.dtype)
        cfg = self.cfg
        if cfg.wave:
            H = (params[0] * self.Xl[:, 0] + params[1] * self.Xl[:, 1]
                 + params[2]).reshape(-1, 1)
        else:
            H = self.Xl
        for l in range(cfg.hidden_layers + 1):
            W, b = self._weights(params, l)
            (H,) = self._act(H @ W + b, 0, output=(l == cfg.hidden_layers))
        err = H[:, 0] - self.targets
        if not self.use_physics:
            return err, None

        if cfg.wave:
            HV = (params[0] * self.Xc[:, 0] + params[1] * self.Xc[:, 1]
                  + params[2]).reshape(-1, 1)
            HX = (params[0] * self.SXc[:, 0]).reshape(-1, 1)
            HT = (params[1] * self.STc[:, 1]).reshape(-1, 1)
            HXX = np.zeros_like(HV)
        else:
            HV, HX, HT = self.Xc, self.SXc, self.STc
            HXX = np.zeros_like(HV)
        for l in range(cfg.hidden_layers + 1):
            W, b = self._weights(params, l)
            AV = HV @ W + b
            AX, AT, AXX = HX @ W, HT @ W, HXX @ W
            V, F1, F2 = self._act(AV, 2, output=(l == cfg.hidden_layers))
            HV, HX, HT = V, F1 * AX, F1 * AT
            HXX = F2 * AX * AX + F1 * AXX
        u, ut, uxx = HV[:, 0], HT[:, 0], HXX[:, 0]
        F = self.rho_c * u * (1 - u)
        f = ut - self.dtype(self.problem.mu) * uxx - F
        om = self.omega
        if om is None:
            om = 1 / (self.dtype(self.problem.lam) * np.abs(F) + 1)
        return err, om * f

    def value(self, params64: np.ndarray) -> float:
        err, wf = self.terms(params64)
        loss = np.mean(err * err)
        if wf is not None:
            loss = loss + np.mean(wf * wf)
        return float(loss)


def fd_gradient_oracle(oracle: OracleLoss, params: np.ndarray, steps) -> np.ndarray:
    """Central finite differences of the extended-precision loss, with the
    difference assembled per point: L(+) - L(-) = sum((a - b) * (a + b)) over
    the residual terms, which sidesteps the catastrophic cancellation a loss
    of magnitude ~|f|^2 causes at small steps."""
    steps = np.broadcast_to(np.asarray(steps, dtype=float), params.shape)
    grad = np.empty(params.size)
    work = params.copy()
    for k in range(params.size):
        work[k] = params[k] + steps[k]
        ep, fp = oracle.terms(work)
        work[k] = params[k] - steps[k]
        em, fm = oracle.terms(work)
        work[k] = params[k]
        diff = np.mean((ep - em) * (ep + em))
        if fp is not None:
            diff = diff + np.mean((fp - fm) * (fp + fm))
        grad[k] = float(diff) / (2.0 * steps[k])
    return grad


def fd_steps(network: Network, params: np.ndarray, batch: SampleBatch,
             use_physics: bool, base: float = 1e-5,
             floor: float = 1e-8) -> np.ndarray:
    """Per-parameter central-difference steps normalized by input magnitude.

    A weight fed by a value of magnitude ``a`` perturbs its preactivation by
    ``a * h``; generalizing wave layers carry inputs up to rho ~ 1e4, where a
    flat step loses the oracle to truncation error.  Scaling each step by the
    largest value-channel input seen in the batch keeps the induced
    perturbation uniform (the jet channels enter the loss linearly in the
    jets, so they do not drive truncation).  ``floor`` stops the scaling from
    running into the extended-precision rounding noise: inputs past a few
    hundred sit deep in activation saturation and contribute no curvature.
    """
    cfg = network.config
    xs, ts = [batch.labeled_x], [batch.labeled_t]
    rhos = [batch.labeled_rho]
    if use_physics:
        xs.append(batch.collocation_x)
        ts.append(batch.collocation_t)
        rhos.append(batch.collocation_rho)
    x = np.concatenate(xs)
    t = np.concatenate(ts)
    rho = np.concatenate(rhos) if cfg.generalizing else None
    X, _, _ = network.kernel_inputs(x, t, rho)

    scales = np.ones(params.size)
    blocks = {b.name: b for b in layout(cfg)}
    if cfg.wave:
        scales[0] = np.abs(X[:, 0]).max()
        scales[1] = np.abs(X[:, 1]).max()
        H = (params[0] * X[:, 0] + params[1] * X[:, 1] + params[2]).reshape(-1, 1)
    else:
        H = X
    act_id = ACTIVATION_IDS[cfg.activation]
    for l in range(cfg.hidden_layers + 1):
        blk = blocks[f"W{l}"]
        col_scale = np.abs(H).max(axis=0)
        for i in range(blk.shape[0]):
            row = blk.offset + i * blk.shape[1]
            scales[row:row + blk.shape[1]] = col_scale[i]
        W = params[blk.offset:blk.offset + blk.shape[0] * blk.shape[1]].reshape(blk.shape)
        bias = params[blocks[f"b{l}"].offset:blocks[f"b{l}"].offset + blk.shape[1]]
        A = H @ W + bias
        act = act_id if l < cfg.hidden_layers else 2
        H = kernels._act_value(A, act)
    return np.maximum(base / np.maximum(1.0, scales), floor)


def max_relative_error(g1: np.ndarray, g2: np.ndarray, floor: float = 1e-8):
    """Largest relative deviation over components where either gradient is
    above ``floor`` in magnitude; returns (max_err, n_compared)."""
    scale = np.maximum(np.abs(g1), np.abs(g2))
    mask = scale > floor
    if not np.any(mask):
        return 0.0, 0
    rel = np.abs(g1 - g2)[mask] / scale[mask]
    return float(rel.max()), int(mask.sum())


@dataclass
class GradCheckReport:
    rows: list = field(default_factory=list)  # (case, draw, max_rel_err, n)
    max_error: float = 0.0

    def add(self, case: str, draw: int, err: float, n: int) -> None:
        self.rows.append((case, draw, err, n))
        self.max_error = max(self.max_error, err)


def run_gradcheck(lambdas=(0.0, 1.0), draws: int = 5, n_labeled: int = 8,
                  n_collocation: int = 8, rho: float = 1e3,
                  rho_range=(1e2, 1e4), step: float = 1e-5,
                  corrupt: bool = False) -> GradCheckReport:
    """Fused-kernel gradients vs the finite-difference oracle over the full
    variant matrix: 4 models x lambdas x {discrete, generalizing}.

    Generalizing wave layers get their slope draws rescaled by 1/rho_max so
    the check runs at the parameter scale training actually inhabits; Glorot
    slopes against inputs of size rho drive every activation into exact
    saturation, where both engines return identical zeros and finite
    differences certify nothing.

    ``corrupt`` injects an offset into one gradient component (negative
    control for the check itself).
    """
    report = GradCheckReport()
    for generalizing in (False, True):
        for model, (arch, use_physics) in sorted(MODEL_VARIANTS.items()):
            for lam in lambdas:
                if generalizing:
                    problem = FisherProblem(rho=None, lam=lam,
                                            rho_range=tuple(rho_range))
                else:
                    problem = FisherProblem(rho=rho, lam=lam)
                net_config = NetworkConfig(architecture=arch, generalizing=generalizing)
                network = Network.for_problem(net_config, problem)
                case = f"{model}/{'gen' if generalizing else 'disc'}/lam={lam:g}"
                for draw in range(draws):
                    seed = 1000 + 17 * draw
                    params = init_params(net_config, seed).values
                    if net_config.wave and generalizing:
                        params[0] /= np.sqrt(problem.rho_range[1])
                        params[1] /= problem.rho_range[1]
                    batch = draw_epoch(problem, use_physics, n_labeled,
                                       n_collocation, seed, draw)
                    _, grad = fused_loss_grad(network, params, problem, batch,
                                              use_physics)
                    if corrupt:
                        grad[0] += 1e-2 * (1.0 + abs(grad[0]))
                    om = None
                    if use_physics:
                        om = frozen_omegas(network, params, problem, batch)
                    steps = fd_steps(network, params, batch, use_physics, base=step)
                    oracle = OracleLoss(network, problem, batch, use_physics, om)
                    fd = fd_gradient_oracle(oracle, params, steps)
                    err, n = max_relative_error(grad, fd)
                    report.add(case, draw, err, n)
    return report
