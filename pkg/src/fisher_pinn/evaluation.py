"""Error metrics against the analytical solution, parameter-space sweeps,
residual profiles, and aggregation across seeds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .model import Network
from .physics import FisherProblem, analytical, residual, weight
from .sampling import test_grid


@dataclass
class EvalReport:
    l2: float
    rho: float | None
    nx: int
    nt: int
    abs_errors: np.ndarray | None = None


@dataclass
class SeedStats:
    mean: float
    std: float
    median: float
    q25: float
    q75: float
    n: int


def l2_error(network: Network, params, problem: FisherProblem,
             rho: float | None = None, nx: int = 100, nt: int = 100) -> float:
    """Root mean squared deviation from the analytical solution on a uniform
    inclusive nx x nt grid over the domain."""
    x, t = test_grid(problem.domain, nx, nt)
    rho_eval = _eval_rho(problem, rho)
    pred = network.value(params, x, t, rho_eval if problem.generalizing else None)
    truth = analytical(x, t, rho_eval if rho_eval is not None else problem.rho, problem.mu)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def _eval_rho(problem: FisherProblem, rho):
    if problem.generalizing:
        if rho is None:
            raise UsageError("generalizing evaluation needs a rho value")
        return float(rho)
    if rho is not None and rho != problem.rho:
        raise UsageError("rho override on a discrete-rho problem")
    return None if rho is None else float(rho)


def default_rho_sweep(lo: float = 1e2, hi: float = 1e5, n: int = 50) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n)


def rho_sweep(network: Network, params, problem: FisherProblem,
              rhos=None, nx: int = 100, nt: int = 100):
    """Per-rho grid L2 for a generalizing network, extrapolation included."""
    if not problem.generalizing or not network.config.generalizing:
        raise UsageError("rho sweep needs a generalizing network")
    if rhos is None:
        rhos = default_rho_sweep()
    return [(float(r), l2_error(network, params, problem, rho=r, nx=nx, nt=nt))
            for r in np.asarray(rhos, dtype=float)]


def interior_rho_values(rho_range, count: int = 20) -> np.ndarray:
    """Uniformly spaced rho values strictly inside (rho_min, rho_max)."""
    lo, hi = rho_range
    return np.linspace(lo, hi, count + 2)[1:-1]


def interior_rho_l2(network: Network, params, problem: FisherProblem,
                    count: int = 20, nx: int = 100, nt: int = 100) -> float:
    """Mean per-rho grid L2 over uniformly sampled interior rho values: the
    continuous-rho test protocol (range endpoints excluded)."""
    if not problem.generalizing:
        raise UsageError("interior-rho protocol needs a generalizing problem")
    values = [l2_error(network, params, problem, rho=r, nx=nx, nt=nt)
              for r in interior_rho_values(problem.rho_range, count)]
    return float(np.mean(values))


def wavefront_profile(network: Network, params, problem: FisherProblem,
                      t: float = 0.002, x_grid=None, lambdas=(0.0, 0.1, 1.0, 10.0),
                      rho: float | None = None):
    """Wave front snapshot: prediction, truth, raw residual, and the weighted
    residual for each requested weighting strength.

    Returns a dict of columns keyed 'x', 'u_true', 'u_pred', 'f_raw' and
    'f_lam{value}' per lambda.
    """
    if x_grid is None:
        x_grid = np.linspace(problem.domain.x[0], problem.domain.x[1], 1001)
    x = np.asarray(x_grid, dtype=float)
    tt = np.full_like(x, float(t))
    rho_val = _eval_rho(problem, rho)
    rho_arr = np.full_like(x, rho_val if rho_val is not None else problem.rho)
    jet = network.jet(params, x, tt, rho_arr if problem.generalizing else None)
    f_raw = residual(jet, rho_arr, problem.mu)
    cols = {
        "x": x,
        "u_true": analytical(x, tt, rho_arr, problem.mu),
        "u_pred": jet.v,
        "f_raw": f_raw,
    }
    for lam in lambdas:
        cols[f"f_lam{lam:g}"] = weight(jet.v, rho_arr, lam) * f_raw
    return cols


def aggregate(l2_values) -> SeedStats:
    """Mean / population std / median / linearly interpolated quartiles."""
    values = np.asarray(list(l2_values), dtype=float)
    if values.size == 0:
        raise UsageError("aggregate of an empty list")
    return SeedStats(
        mean=float(np.mean(values)),
        std=float(np.std(values)),
        median=float(np.median(values)),
        q25=float(np.quantile(values, 0.25)),
        q75=float(np.quantile(values, 0.75)),
        n=int(values.size),
    )


def write_csv(path, header: list[str], rows) -> None:
    """Deterministic CSV: repr() for floats, no timestamps in the body."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
