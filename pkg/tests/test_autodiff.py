"""Jet propagation rules and the reference gradient tape."""

import numpy as np
import pytest

from fisher_pinn.autodiff import (
    BINARY_OPS,
    UNARY_FUNCTIONS,
    Jet,
    Tape,
    jet_binary,
    jet_scale,
    jet_unary,
)
from fisher_pinn.errors import ConfigurationError, UsageError

SCALAR_FUNCS = {
    "tanh": np.tanh,
    "sigmoid": lambda v: 1.0 / (1.0 + np.exp(-v)),
    "sin": np.sin,
    "swish": lambda v: v / (1.0 + np.exp(-v)),
    "exp": np.exp,
    "negate": lambda v: -v,
    "square": lambda v: v * v,
}


def test_jet_unary_known_values():
    out = jet_unary("tanh", Jet(0.0, 1.0, 0.0, 0.0))
    assert (out.v, out.dx, out.dt, out.dxx) == (0.0, 1.0, 0.0, 0.0)

    out = jet_unary("square", Jet(2.0, 1.0, 0.0, 0.0))
    assert (out.v, out.dx, out.dt, out.dxx) == (4.0, 4.0, 0.0, 2.0)

    out = jet_unary("sigmoid", Jet(0.0, 3.0, 2.0, 0.0))
    assert out.v == 0.5
    assert out.dx == pytest.approx(0.75)
    assert out.dt == pytest.approx(0.5)
    assert out.dxx == 0.0


def test_jet_binary_known_values():
    x = Jet(3.0, 1.0, 0.0, 0.0)
    sq = jet_binary("mul", x, x)
    assert (sq.v, sq.dx, sq.dt, sq.dxx) == (9.0, 6.0, 0.0, 2.0)

    s = jet_binary("add", Jet(1.0, 1.0, 0.0, 0.0), Jet(2.0, 0.0, 1.0, 0.0))
    assert (s.v, s.dx, s.dt, s.dxx) == (3.0, 1.0, 1.0, 0.0)


def test_constant_jet_scaling():
    rng = np.random.default_rng(0)
    u = Jet(*rng.normal(size=4))
    c = 2.5
    out = jet_binary("mul", Jet.constant(c), u)
    for got, want in zip(out.as_arrays(), u.as_arrays()):
        assert got == pytest.approx(c * want)
    scaled = jet_scale(c, u)
    for got, want in zip(scaled.as_arrays(), out.as_arrays()):
        assert got == pytest.approx(want)


def test_constant_jet_invariant_under_unary_ops():
    for f in UNARY_FUNCTIONS:
        out = jet_unary(f, Jet.constant(0.3))
        assert out.dx == 0.0 and out.dt == 0.0 and out.dxx == 0.0


def test_unknown_ids_rejected():
    with pytest.raises(ConfigurationError):
        jet_unary("cosh", Jet.constant(0.0))
    with pytest.raises(ConfigurationError):
        jet_binary("div", Jet.constant(1.0), Jet.constant(2.0))


LD = np.longdouble  # FD oracle precision: float64's eps/h^2 noise floor
# (~2e-6 at step 1e-5) would swamp a 1e-6 relative second-derivative check


@pytest.mark.parametrize("f", UNARY_FUNCTIONS)
def test_jet_unary_matches_finite_differences(f):
    """First/second x-derivatives and first t-derivative against central FD
    (step 1e-5, extended-precision evaluation)."""
    rng = np.random.default_rng(42)
    h = LD(1e-5)
    for _ in range(10):
        # compose: g(x, t) = f(a*x + b*t + c) with a generic inner jet
        a, b, c = rng.uniform(-1.0, 1.0, size=3)
        x0, t0 = rng.uniform(-1.0, 1.0, size=2)

        def g(x, t):
            return SCALAR_FUNCS[f](LD(a) * x + LD(b) * t + LD(c))

        inner = Jet(a * x0 + b * t0 + c, a, b, 0.0)
        out = jet_unary(f, inner)
        x0, t0 = LD(x0), LD(t0)
        fd_x = float((g(x0 + h, t0) - g(x0 - h, t0)) / (2 * h))
        fd_t = float((g(x0, t0 + h) - g(x0, t0 - h)) / (2 * h))
        fd_xx = float((g(x0 + h, t0) - 2 * g(x0, t0) + g(x0 - h, t0)) / h**2)
        assert out.v == pytest.approx(float(g(x0, t0)), rel=1e-12)
        assert out.dx == pytest.approx(fd_x, rel=1e-6, abs=1e-12)
        assert out.dt == pytest.approx(fd_t, rel=1e-6, abs=1e-12)
        assert out.dxx == pytest.approx(fd_xx, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("op", BINARY_OPS)
def test_jet_binary_matches_finite_differences(op):
    rng = np.random.default_rng(7)
    h = LD(1e-5)
    combine = {"add": np.add, "sub": np.subtract, "mul": np.multiply}[op]
    for _ in range(10):
        a1, b1, a2, b2 = rng.uniform(-1.0, 1.0, size=4)
        x0, t0 = rng.uniform(-1.0, 1.0, size=2)

        def g(x, t):
            return combine(np.sin(LD(a1) * x + LD(b1) * t),
                           np.exp(LD(a2) * x + LD(b2) * t))

        u = jet_unary("sin", Jet(a1 * x0 + b1 * t0, a1, b1, 0.0))
        w = jet_unary("exp", Jet(a2 * x0 + b2 * t0, a2, b2, 0.0))
        out = jet_binary(op, u, w)
        x0, t0 = LD(x0), LD(t0)
        fd_x = float((g(x0 + h, t0) - g(x0 - h, t0)) / (2 * h))
        fd_t = float((g(x0, t0 + h) - g(x0, t0 - h)) / (2 * h))
        fd_xx = float((g(x0 + h, t0) - 2 * g(x0, t0) + g(x0 - h, t0)) / h**2)
        assert out.v == pytest.approx(float(g(x0, t0)), rel=1e-12)
        assert out.dx == pytest.approx(fd_x, rel=1e-6, abs=1e-12)
        assert out.dt == pytest.approx(fd_t, rel=1e-6, abs=1e-12)
        assert out.dxx == pytest.approx(fd_xx, rel=1e-6, abs=1e-9)


class TestTape:
    def test_theta_squared(self):
        tape = Tape()
        theta = tape.param(3.0, 0)
        loss = tape.square(theta)
        grad = tape.gradient(loss, 1)
        assert grad[0] == 6.0

    def test_unused_parameter_gradient_is_exactly_zero(self):
        tape = Tape()
        a = tape.param(1.5, 0)
        tape.param(2.5, 1)  # recorded but unused
        loss = tape.mul(a, a)
        grad = tape.gradient(loss, 2)
        assert grad[1] == 0.0

    def test_loss_from_other_tape_rejected(self):
        tape1, tape2 = Tape(), Tape()
        loss = tape1.square(tape1.param(1.0, 0))
        with pytest.raises(UsageError):
            tape2.gradient(loss, 1)
        with pytest.raises(UsageError):
            tape1.gradient(3.0, 1)

    def test_reverse_sweep_handles_shared_subexpressions(self):
        # d/dx (x*x + x) = 2x + 1, with x reused by two consumers
        tape = Tape()
        x = tape.param(1.7, 0)
        loss = x * x + x
        grad = tape.gradient(loss, 1)
        assert grad[0] == pytest.approx(2 * 1.7 + 1.0, rel=1e-15)

    def test_gradient_matches_fd_on_composite_expression(self):
        def f(v):
            tape = Tape()
            p = tape.params_from(v)
            e = tape.exp(p[0] * p[1])
            s = tape.sin(p[0]) * tape.sigmoid(p[1])
            w = tape.swish(p[2]) - tape.tanh(p[2] * 0.5)
            return tape, tape.square(e + s + w)

        v = np.array([0.4, -0.7, 1.1])
        tape, loss = f(v)
        grad = tape.gradient(loss, 3)
        h = 1e-6
        for k in range(3):
            vp, vm = v.copy(), v.copy()
            vp[k] += h
            vm[k] -= h
            fd = (f(vp)[1].value - f(vm)[1].value) / (2 * h)
            assert grad[k] == pytest.approx(fd, rel=1e-7)

    def test_jet_components_are_differentiable_through_tape(self):
        # push a jet whose coefficient is a parameter; d(dx)/d(theta) exact
        tape = Tape()
        theta = tape.param(0.8, 0)
        seed = Jet(tape.constant(0.3), tape.constant(2.0), tape.constant(0.0),
                   tape.constant(0.0))
        out = jet_unary("tanh", jet_scale(theta, seed))
        # out.dx = theta * 2 * tanh'(0.3 theta)
        grad = tape.gradient(out.dx, 1)
        th = 0.8
        expected = 2 * (1 - np.tanh(0.3 * th) ** 2) + th * 2 * 0.3 * (
            -2 * np.tanh(0.3 * th) * (1 - np.tanh(0.3 * th) ** 2))
        assert grad[0] == pytest.approx(expected, rel=1e-12)
