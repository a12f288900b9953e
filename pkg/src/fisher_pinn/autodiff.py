"""Mixed-mode automatic differentiation primitives.

Two cooperating pieces:

* ``Jet`` - a value bundled with the input derivatives needed by the PDE
  residual (d/dx, d/dt, d2/dx2).  ``jet_unary`` / ``jet_binary`` propagate
  jets through elementary operations via first/second-order chain rules.
* ``Tape`` - a reverse-mode gradient tape over recorded scalar operations,
  used to differentiate losses with respect to network parameters.  Jet
  components can themselves be tape nodes, so the reverse sweep
  differentiates straight through the forward derivative propagation.

The tape is the slow, obviously-correct reference engine.  Training uses the
vectorized kernels in :mod:`fisher_pinn.kernels`, which are cross-checked
against this tape and against finite differences by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, UsageError

UNARY_FUNCTIONS = ("tanh", "sigmoid", "sin", "swish", "exp", "negate", "square")
BINARY_OPS = ("add", "sub", "mul")


class Node:
    """One recorded scalar on a gradient tape."""

    __slots__ = ("tape", "value", "grad", "_backward")

    def __init__(self, tape: "Tape", value: float, backward: Callable[[], None] | None):
        self.tape = tape
        self.value = float(value)
        self.grad = 0.0
        self._backward = backward

    def __add__(self, other):
        return self.tape.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.tape.sub(self, other)

    def __rsub__(self, other):
        return self.tape.sub(other, self)

    def __mul__(self, other):
        return self.tape.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.tape.negate(self)

    def __repr__(self):
        return f"Node({self.value!r})"


class Tape:
    """Reverse-mode tape over scalar operations.

    Nodes are replayed in exact reverse recording order during the backward
    sweep; recording order is a topological order because operands must
    exist before an operation is recorded.  A tape instance is
    single-threaded; independent tapes may run concurrently.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.parameter_slots: dict[int, Node] = {}

    # -- leaves ----------------------------------------------------------

    def constant(self, value: float) -> Node:
        node = Node(self, value, None)
        self.nodes.append(node)
        return node

    def param(self, value: float, slot: int) -> Node:
        if slot in self.parameter_slots:
            raise UsageError(f"parameter slot {slot} already registered")
        node = Node(self, value, None)
        self.nodes.append(node)
        self.parameter_slots[slot] = node
        return node

    def params_from(self, values: Sequence[float]) -> list[Node]:
        return [self.param(v, i) for i, v in enumerate(values)]

    # -- recorded operations ----------------------------------------------

    def _lift(self, x) -> Node:
        if isinstance(x, Node):
            if x.tape is not self:
                raise UsageError("node belongs to a different tape")
            return x
        return self.constant(float(x))

    def _record(self, value: float, parents: tuple[Node, ...], partials: tuple[float, ...]) -> Node:
        def backward(node_grad, parents=parents, partials=partials):
            for p, d in zip(parents, partials):
                p.grad += d * node_grad

        node = Node(self, value, backward)
        self.nodes.append(node)
        return node

    def add(self, a, b) -> Node:
        a, b = self._lift(a), self._lift(b)
        return self._record(a.value + b.value, (a, b), (1.0, 1.0))

    def sub(self, a, b) -> Node:
        a, b = self._lift(a), self._lift(b)
        return self._record(a.value - b.value, (a, b), (1.0, -1.0))

    def mul(self, a, b) -> Node:
        a, b = self._lift(a), self._lift(b)
        return self._record(a.value * b.value, (a, b), (b.value, a.value))

    def negate(self, a) -> Node:
        a = self._lift(a)
        return self._record(-a.value, (a,), (-1.0,))

    def square(self, a) -> Node:
        a = self._lift(a)
        return self._record(a.value * a.value, (a,), (2.0 * a.value,))

    def exp(self, a) -> Node:
        a = self._lift(a)
        y = math.exp(a.value)
        return self._record(y, (a,), (y,))

    def tanh(self, a) -> Node:
        a = self._lift(a)
        y = math.tanh(a.value)
        return self._record(y, (a,), (1.0 - y * y,))

    def sigmoid(self, a) -> Node:
        a = self._lift(a)
        s = _sigmoid_float(a.value)
        return self._record(s, (a,), (s * (1.0 - s),))

    def sin(self, a) -> Node:
        a = self._lift(a)
        return self._record(math.sin(a.value), (a,), (math.cos(a.value),))

    def cos(self, a) -> Node:
        a = self._lift(a)
        return self._record(math.cos(a.value), (a,), (-math.sin(a.value),))

    def swish(self, a) -> Node:
        a = self._lift(a)
        s = _sigmoid_float(a.value)
        return self._record(a.value * s, (a,), (s * (1.0 + a.value * (1.0 - s)),))

    def sum(self, terms: Sequence[Node]) -> Node:
        terms = [self._lift(t) for t in terms]
        value = math.fsum(t.value for t in terms)
        return self._record(value, tuple(terms), tuple(1.0 for _ in terms))

    def mean(self, terms: Sequence[Node]) -> Node:
        if not terms:
            raise UsageError("mean of an empty sequence")
        return self.mul(self.sum(terms), 1.0 / len(terms))

    # -- reverse sweep ----------------------------------------------------

    def gradient(self, loss: Node, n_params: int) -> np.ndarray:
        """Return d(loss)/d(theta_k) for parameter slots 0..n_params-1.

        Slots never used by the loss get an exact 0.
        """
        if not isinstance(loss, Node) or loss.tape is not self:
            raise UsageError("loss was not recorded on this tape")
        for node in self.nodes:
            node.grad = 0.0
        loss.grad = 1.0
        for node in reversed(self.nodes):
            if node._backward is not None and node.grad != 0.0:
                node._backward(node.grad)
        grad = np.zeros(n_params)
        for slot, node in self.parameter_slots.items():
            if slot < n_params:
                grad[slot] = node.grad
        return grad


def _sigmoid_float(v: float) -> float:
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


# ---------------------------------------------------------------------------
# Dispatching elementary functions: work on floats, numpy arrays and Nodes.
# ---------------------------------------------------------------------------


def _is_node(x) -> bool:
    return isinstance(x, Node)


def tanh(x):
    return x.tape.tanh(x) if _is_node(x) else np.tanh(x)


def sigmoid(x):
    if _is_node(x):
        return x.tape.sigmoid(x)
    return 1.0 / (1.0 + np.exp(-x))


def sin(x):
    return x.tape.sin(x) if _is_node(x) else np.sin(x)


def cos(x):
    return x.tape.cos(x) if _is_node(x) else np.cos(x)


def exp(x):
    return x.tape.exp(x) if _is_node(x) else np.exp(x)


def square(x):
    return x.tape.square(x) if _is_node(x) else x * x


def swish(x):
    return x.tape.swish(x) if _is_node(x) else x * sigmoid(x)


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------


@dataclass
class Jet:
    """Value plus the propagated input derivatives (d/dx, d/dt, d2/dx2).

    Components may be floats, numpy arrays, or tape ``Node`` scalars; the
    propagation rules below only use +, -, * and the elementary functions,
    all of which dispatch on the component type.  Derivatives are with
    respect to *physical* coordinates provided the seeds carry the feature
    scaling Jacobian factors (see ``seed_x`` / ``seed_t``).
    """

    v: object
    dx: object
    dt: object
    dxx: object

    @classmethod
    def constant(cls, value) -> "Jet":
        return cls(value, _zero_like(value), _zero_like(value), _zero_like(value))

    @classmethod
    def seed_x(cls, value, sx) -> "Jet":
        return cls(value, sx, _zero_like(value), _zero_like(value))

    @classmethod
    def seed_t(cls, value, st) -> "Jet":
        return cls(value, _zero_like(value), st, _zero_like(value))

    def as_arrays(self):
        return self.v, self.dx, self.dt, self.dxx


def _zero_like(value):
    if isinstance(value, Node):
        return value.tape.constant(0.0)
    if isinstance(value, np.ndarray):
        return np.zeros_like(value)
    return 0.0


def jet_unary(f: str, u: Jet) -> Jet:
    """Apply elementary function ``f`` to a jet via first/second chain rules."""
    v, dx, dt, dxx = u.v, u.dx, u.dt, u.dxx
    if f == "negate":
        return Jet(-v, -dx, -dt, -dxx)
    if f == "tanh":
        y = tanh(v)
        f1 = 1.0 - square(y)
        f2 = -2.0 * y * f1
    elif f == "sigmoid":
        y = sigmoid(v)
        f1 = y * (1.0 - y)
        f2 = f1 * (1.0 - 2.0 * y)
    elif f == "sin":
        y = sin(v)
        f1 = cos(v)
        f2 = -y
    elif f == "swish":
        s = sigmoid(v)
        s1 = s * (1.0 - s)
        y = v * s
        f1 = s + v * s1
        f2 = 2.0 * s1 + v * (s1 * (1.0 - 2.0 * s))
    elif f == "exp":
        y = exp(v)
        f1 = y
        f2 = y
    elif f == "square":
        y = square(v)
        f1 = 2.0 * v
        f2 = 2.0
    else:
        raise ConfigurationError(f"unknown elementary function {f!r}")
    return Jet(y, f1 * dx, f1 * dt, f2 * square(dx) + f1 * dxx)


def jet_binary(op: str, u: Jet, w: Jet) -> Jet:
    if op == "add":
        return Jet(u.v + w.v, u.dx + w.dx, u.dt + w.dt, u.dxx + w.dxx)
    if op == "sub":
        return Jet(u.v - w.v, u.dx - w.dx, u.dt - w.dt, u.dxx - w.dxx)
    if op == "mul":
        return Jet(
            u.v * w.v,
            u.dx * w.v + u.v * w.dx,
            u.dt * w.v + u.v * w.dt,
            u.dxx * w.v + 2.0 * (u.dx * w.dx) + u.v * w.dxx,
        )
    raise ConfigurationError(f"unknown binary op {op!r}")


def jet_scale(c, u: Jet) -> Jet:
    """Multiply a jet by a coefficient with no input derivatives of its own.

    ``c`` may be a float or a parameter Node; either way its x/t derivatives
    vanish, so this is the constant-jet specialization of ``jet_binary(mul)``.
    """
    return Jet(c * u.v, c * u.dx, c * u.dt, c * u.dxx)
