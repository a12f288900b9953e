"""Fisher's reaction-diffusion equation: reaction term, residual, weighting,
loss functions and the closed-form traveling-wave solution used as oracle.

The governing PDE is ``u_t - mu * u_xx = rho * u * (1 - u)`` on a rectangle
in (x, t).  With the spatial rescaling x -> x/sqrt(mu) the classical
traveling-wave solution applies verbatim, so the oracle below evaluates

    u(x, t) = [1 + exp(sqrt(rho/6) * x / sqrt(mu) - (5 rho / 6) t)]^-2

which solves the PDE exactly for every rho, mu > 0 (wave speed 5*sqrt(rho/6)
in the rescaled frame).  All functions are plain numpy and vectorize over
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .autodiff import Jet
from .errors import ConfigurationError, UsageError

if TYPE_CHECKING:
    from .sampling import Domain


@dataclass
class FisherProblem:
    """One PDE instance: reaction rate, diffusion, weighting strength, domain.

    ``rho`` is the fixed reaction rate coefficient for discrete-rho problems;
    generalizing problems set ``rho_range`` instead and leave ``rho`` None.
    """

    rho: float | None = 1000.0
    mu: float = 10.0
    lam: float = 1.0
    domain: "Domain" = None
    rho_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.domain is None:
            from .sampling import Domain

            self.domain = Domain()
        if self.mu <= 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam}")
        if self.rho_range is not None:
            lo, hi = self.rho_range
            if not (0 < lo < hi):
                raise ConfigurationError(f"invalid rho range {self.rho_range}")
        elif self.rho is None or self.rho <= 0:
            raise ConfigurationError(f"rho must be positive, got {self.rho}")

    @property
    def generalizing(self) -> bool:
        return self.rho_range is not None


@dataclass
class ResidualSample:
    """Residual diagnostics at one collocation point."""

    point: tuple
    u: float
    f: float
    omega: float


def reaction(u, rho):
    """Logistic reaction term rho * u * (1 - u)."""
    return rho * u * (1.0 - u)


def residual(jet: Jet, rho, mu):
    """PDE residual u_t - mu * u_xx - rho * u * (1 - u) from a physical-units jet."""
    return jet.dt - mu * jet.dxx - reaction(jet.v, rho)


def weight(u, rho, lam):
    """Residual weight 1 / (lam * |F(u; rho)| + 1), in (0, 1]."""
    return 1.0 / (lam * np.abs(reaction(u, rho)) + 1.0)


def _stable_softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def analytical(x, t, rho, mu=10.0):
    """Closed-form traveling-wave solution, overflow-safe for any |x|."""
    z = np.sqrt(rho / 6.0) * (np.asarray(x, dtype=float) / np.sqrt(mu)) - (5.0 * rho / 6.0) * np.asarray(t, dtype=float)
    return np.exp(-2.0 * _stable_softplus(z))


def analytical_jet(x, t, rho, mu=10.0) -> Jet:
    """Exact solution value and derivatives (d/dx, d/dt, d2/dx2).

    Expressed through exp(a*z - b*softplus(z)) terms so both wave tails
    underflow cleanly instead of producing inf * 0.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    k = np.sqrt(rho / (6.0 * mu))
    w = 5.0 * rho / 6.0
    z = k * x - w * t
    s = _stable_softplus(z)
    e13 = np.exp(z - 3.0 * s)  # E / (1+E)^3
    u = np.exp(-2.0 * s)
    ux = -2.0 * k * e13
    ut = 2.0 * w * e13
    uxx = 2.0 * k * k * (2.0 * np.exp(2.0 * z - 4.0 * s) - np.exp(z - 4.0 * s))
    return Jet(u, ux, ut, uxx)


def data_loss(predictions, targets):
    """Mean squared error over a labeled batch."""
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.size == 0:
        raise UsageError("data_loss on an empty batch")
    if predictions.shape != targets.shape:
        raise UsageError(
            f"prediction/target shapes differ: {predictions.shape} vs {targets.shape}"
        )
    return float(np.mean((predictions - targets) ** 2))


def physics_loss(f, u, rho, lam):
    """Mean squared weighted residual (1/N) sum |omega * f|^2.

    With lam = 0 every weight is 1 and this is exactly the unweighted
    mean squared residual.
    """
    f = np.asarray(f, dtype=float)
    if f.size == 0:
        raise UsageError("physics_loss on an empty batch")
    omega = weight(np.asarray(u, dtype=float), rho, lam)
    return float(np.mean((omega * f) ** 2))


def total_loss(loss_data, loss_physics):
    """Plain unweighted sum of the two loss terms."""
    return loss_data + loss_physics
