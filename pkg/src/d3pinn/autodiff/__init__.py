"""Exact derivatives of scalar MLPs w.r.t. inputs and parameters.

Input derivatives come from forward-mode jet propagation (:mod:`.jet`);
parameter gradients from reverse accumulation through the same pass.
Objectives are assembled from a closed primitive set (:mod:`.expr`), so an
unsupported construction fails when the objective is built rather than
being silently mis-differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet
from . import expr as expressions
from .expr import (
    AnalyticBatch,
    Evaluation,
    Expr,
    FieldBatch,
    NetworkBatch,
    UnsupportedExpressionError,
)


@dataclass(frozen=True)
class DerivativeBundle:
    """Network output and its input derivatives at one (x, t) point."""

    value: float
    d_dt: float
    d_dx: float
    d2_dx2: float


def _check_finite(name, arr):
    arr = np.asarray(arr, dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise ValueError(
            f"non-finite {name} at index {bad[0]} (value {arr.flat[bad[0]]!r})"
        )
    return arr


def eval_with_derivatives(model, x: float, t: float) -> DerivativeBundle:
    """u, u_t, u_x, u_xx at one point, exactly (no numerical differencing)."""
    _check_finite("model parameter", model.params)
    _check_finite("input coordinate", [x, t])
    jets, _ = jet.jet_forward(
        model.dims, model.activation, model.params, [x], [t], jet.RESIDUAL
    )
    return DerivativeBundle(
        value=float(jets["v"][0]),
        d_dt=float(jets["t"][0]),
        d_dx=float(jets["x"][0]),
        d2_dx2=float(jets["xx"][0]),
    )


class Objective:
    """Scalar function of a model's parameters with an exact gradient."""

    def value(self, model) -> float:
        raise NotImplementedError

    def gradient(self, model) -> np.ndarray:
        raise NotImplementedError

    def __mul__(self, c):
        return ScaledSumObjective([(float(c), self)])

    __rmul__ = __mul__

    def __add__(self, other):
        return ScaledSumObjective([(1.0, self), (1.0, other)])


class PointObjective(Objective):
    """Sum or mean over a point batch of an expression in the network's jets.

    ``build`` receives a :class:`FieldBatch` bound to this objective's points
    and returns the pointwise expression; construction errors surface here,
    before any differentiation happens.
    """

    def __init__(self, build, xs, ts, reduction: str = "sum"):
        if reduction not in ("sum", "mean"):
            raise ValueError("reduction must be 'sum' or 'mean'")
        self.build = build
        self.xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        self.ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
        self.reduction = reduction

    def _expr(self, model):
        return self.build(NetworkBatch(model, self.xs, self.ts))

    def value(self, model) -> float:
        e = self._expr(model)
        (vals,) = Evaluation([e]).values()
        s = float(np.sum(vals))
        return s / self.xs.size if self.reduction == "mean" else s

    def gradient(self, model) -> np.ndarray:
        e = self._expr(model)
        ev = Evaluation([e], need_grad=True)
        ev.values()
        w = 1.0 / self.xs.size if self.reduction == "mean" else 1.0
        grads = ev.param_grads([np.full(self.xs.size, w)])
        return grads.get(model, np.zeros_like(model.params))


class QuadraticParamObjective(Objective):
    """coeff * ||theta - center||^2; gradient 2 * coeff * (theta - center)."""

    def __init__(self, center=0.0, coeff: float = 0.5):
        self.center = center
        self.coeff = float(coeff)

    def value(self, model) -> float:
        d = model.params - self.center
        return self.coeff * float(d @ d)

    def gradient(self, model) -> np.ndarray:
        return 2.0 * self.coeff * (model.params - self.center)


class ScaledSumObjective(Objective):
    def __init__(self, terms):
        self.terms = list(terms)

    def value(self, model) -> float:
        return sum(c * o.value(model) for c, o in self.terms)

    def gradient(self, model) -> np.ndarray:
        g = np.zeros_like(model.params)
        for c, o in self.terms:
            g += c * o.gradient(model)
        return g


def loss_param_gradient(objective: Objective, model) -> np.ndarray:
    """Exact gradient of the objective w.r.t. the model's parameter vector."""
    _check_finite("model parameter", model.params)
    return objective.gradient(model)
