"""Seeded, reproducible point generation: Latin hypercube collocation batches,
boundary/IC data, interior data for the purely data-driven models, and the
dense evaluation grids.

Every batch is a pure function of (run seed, epoch index): each epoch gets
its own generator derived from ``SeedSequence([seed, epoch])``, and the
auxiliary streams (parameter init, fixed test set) use tag constants far
outside the epoch range.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UsageError

# Stream tags; epochs occupy [0, 2**32).
INIT_STREAM = 1 << 40
TEST_STREAM = (1 << 40) + 1


def rng_for(seed: int, stream: int) -> np.random.Generator:
    """Deterministic generator for one (seed, stream) pair."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


@dataclass
class Domain:
    """Rectangular computational domain, optionally carrying the rho setting."""

    x: tuple[float, float] = (-5.0, 5.0)
    t: tuple[float, float] = (0.0, 0.004)
    rho: float | tuple[float, float] | None = None

    def __post_init__(self):
        if not self.x[0] < self.x[1]:
            raise ConfigurationError(f"empty x interval {self.x}")
        if not self.t[0] < self.t[1]:
            raise ConfigurationError(f"empty t interval {self.t}")

    @property
    def x_width(self) -> float:
        return self.x[1] - self.x[0]

    @property
    def t_width(self) -> float:
        return self.t[1] - self.t[0]


@dataclass
class SampleBatch:
    """Per-epoch training data: labeled points and unlabeled collocation points.

    ``labeled_rho`` / ``collocation_rho`` are per-point arrays (constant for
    discrete-rho problems) so the kernels treat both modes uniformly.
    """

    labeled_x: np.ndarray
    labeled_t: np.ndarray
    labeled_rho: np.ndarray
    labeled_u: np.ndarray
    collocation_x: np.ndarray = field(default_factory=lambda: np.empty(0))
    collocation_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    collocation_rho: np.ndarray = field(default_factory=lambda: np.empty(0))


def lhs(n: int, bounds, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample: n points in the box given by ``bounds`` (k x 2).

    Each dimension is cut into n equal strata; every stratum receives exactly
    one point, uniformly placed inside it, with strata permuted independently
    per dimension.
    """
    if n < 1:
        raise UsageError(f"need at least one sample, got n={n}")
    bounds = np.asarray(bounds, dtype=float)
    k = bounds.shape[0]
    pts = np.empty((n, k))
    for d in range(k):
        strata = rng.permutation(n)
        offsets = rng.uniform(size=n)
        unit = (strata + offsets) / n
        lo, hi = bounds[d]
        pts[:, d] = lo + (hi - lo) * unit
    return pts


def sample_boundary(n: int, problem, rng: np.random.Generator) -> SampleBatch:
    """Labeled IC/BC points: each point lands uniformly on one of the three
    boundary segments {t=t_min, x=x_min, x=x_max}, labeled by the analytical
    solution.  Generalizing problems draw rho uniformly from the two range
    endpoints.
    """
    from .physics import analytical

    if n < 3:
        raise UsageError(f"boundary batch needs n >= 3, got {n}")
    dom = problem.domain
    segment = rng.integers(0, 3, size=n)
    xu = rng.uniform(size=n)
    tu = rng.uniform(size=n)
    x = np.where(segment == 0, dom.x[0] + dom.x_width * xu,
                 np.where(segment == 1, dom.x[0], dom.x[1]))
    t = np.where(segment == 0, dom.t[0], dom.t[0] + dom.t_width * tu)
    rho = _labeled_rho(n, problem, rng)
    u = analytical(x, t, rho, problem.mu)
    return SampleBatch(x, t, rho, u)


def sample_ann_data(n: int, problem, rng: np.random.Generator) -> SampleBatch:
    """Labeled interior points for the data-driven reference models.

    (x, t) comes from a 2-D Latin hypercube over the domain box; generalizing
    problems label at the two boundary rho values only, mirroring how the
    generalizing data-driven models are trained.
    """
    from .physics import analytical

    if n < 1:
        raise UsageError(f"need at least one sample, got n={n}")
    dom = problem.domain
    pts = lhs(n, [dom.x, dom.t], rng)
    rho = _labeled_rho(n, problem, rng)
    u = analytical(pts[:, 0], pts[:, 1], rho, problem.mu)
    return SampleBatch(pts[:, 0], pts[:, 1], rho, u)


def sample_collocation(n: int, problem, rng: np.random.Generator):
    """Unlabeled collocation points: 2-D LHS for discrete rho, 3-D LHS with
    linearly-scaled rho for generalizing problems."""
    if n < 1:
        raise UsageError(f"need at least one sample, got n={n}")
    dom = problem.domain
    if problem.generalizing:
        pts = lhs(n, [dom.x, dom.t, problem.rho_range], rng)
        return pts[:, 0], pts[:, 1], pts[:, 2]
    pts = lhs(n, [dom.x, dom.t], rng)
    rho = np.full(n, float(problem.rho))
    return pts[:, 0], pts[:, 1], rho


def _labeled_rho(n: int, problem, rng: np.random.Generator) -> np.ndarray:
    if problem.generalizing:
        lo, hi = problem.rho_range
        return np.where(rng.integers(0, 2, size=n) == 0, lo, hi)
    return np.full(n, float(problem.rho))


def draw_epoch(problem, use_physics: bool, n_data: int, n_col: int,
               seed: int, epoch: int) -> SampleBatch:
    """Fresh training batch for one epoch, fully determined by (seed, epoch)."""
    rng = rng_for(seed, epoch)
    if use_physics:
        batch = sample_boundary(n_data, problem, rng)
        cx, ct, crho = sample_collocation(n_col, problem, rng)
        batch.collocation_x, batch.collocation_t, batch.collocation_rho = cx, ct, crho
        return batch
    return sample_ann_data(n_data, problem, rng)


def sample_test_points(n: int, problem, seed: int) -> SampleBatch:
    """Fixed interior test set used for learning-curve errors (LHS, labeled)."""
    from .physics import analytical

    rng = rng_for(seed, TEST_STREAM)
    dom = problem.domain
    if problem.generalizing:
        pts = lhs(n, [dom.x, dom.t, problem.rho_range], rng)
        rho = pts[:, 2]
    else:
        pts = lhs(n, [dom.x, dom.t], rng)
        rho = np.full(n, float(problem.rho))
    u = analytical(pts[:, 0], pts[:, 1], rho, problem.mu)
    return SampleBatch(pts[:, 0], pts[:, 1], rho, u)


def test_grid(domain: Domain, nx: int = 100, nt: int = 100, rhos=None):
    """Inclusive uniform nx x nt grid over (x, t), optionally crossed with
    each rho in ``rhos``.  Returns flat (x, t) or (x, t, rho) arrays."""
    if nx < 2 or nt < 2:
        raise UsageError(f"grid needs nx, nt >= 2, got {nx}x{nt}")
    xs = np.linspace(domain.x[0], domain.x[1], nx)
    ts = np.linspace(domain.t[0], domain.t[1], nt)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    x, t = X.ravel(), T.ravel()
    if rhos is None:
        return x, t
    rhos = np.asarray(rhos, dtype=float)
    m = rhos.size
    return (np.tile(x, m), np.tile(t, m), np.repeat(rhos, x.size))
