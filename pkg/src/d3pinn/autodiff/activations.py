"""Scalar activations with derivative chains up to fourth order.

Fourth derivatives are needed because interface losses differentiate the
PDE residual (which already contains second spatial derivatives of the
network) once more in space, and parameter gradients backpropagate through
that, costing one extra order.
"""

from __future__ import annotations

import numpy as np


class Activation:
    """Elementwise activation with derivatives expressed from a cached forward pass.

    ``forward`` returns ``(value, aux)`` where ``aux`` is whatever the
    derivative formulas need (kept to avoid re-evaluating transcendentals
    in the backward pass).  ``derivs(aux, order)`` returns ``[d1, ..., d_order]``.
    """

    name = "base"

    def forward(self, z):
        raise NotImplementedError

    def derivs(self, aux, order):
        raise NotImplementedError


class Tanh(Activation):
    name = "tanh"

    def forward(self, z):
        v = np.tanh(z)
        return v, v

    def derivs(self, aux, order):
        t = aux
        s = 1.0 - t * t  # sech^2
        out = [s]
        if order >= 2:
            out.append(-2.0 * t * s)
        if order >= 3:
            out.append(2.0 * s * (3.0 * t * t - 1.0))
        if order >= 4:
            out.append(8.0 * t * s * (2.0 - 3.0 * t * t))
        return out


class Tan(Activation):
    name = "tan"

    def forward(self, z):
        v = np.tan(z)
        return v, v

    def derivs(self, aux, order):
        u = aux
        d1 = 1.0 + u * u  # sec^2
        out = [d1]
        if order >= 2:
            out.append(2.0 * u * d1)
        if order >= 3:
            out.append(d1 * (2.0 + 6.0 * u * u))
        if order >= 4:
            out.append(8.0 * u * d1 * (2.0 + 3.0 * u * u))
        return out


class Sin(Activation):
    name = "sin"

    def forward(self, z):
        s = np.sin(z)
        c = np.cos(z)
        return s, (s, c)

    def derivs(self, aux, order):
        s, c = aux
        out = [c]
        if order >= 2:
            out.append(-s)
        if order >= 3:
            out.append(-c)
        if order >= 4:
            out.append(s)
        return out


ACTIVATIONS = {a.name: a for a in (Tanh(), Tan(), Sin())}


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(
            f"unknown activation {name!r}; supported: {sorted(ACTIVATIONS)}"
        ) from None
