"""Pointwise expressions over network jets, with exact (x,t)-differentiation
and reverse-mode parameter adjoints.

An expression is built against one or more *field batches* (a scalar field --
either a network or a closed form -- evaluated on a fixed point batch) from a
closed primitive set: jet references, space-time coefficient functions,
constants, +, -, *, and scalar scaling.  Derivatives in x or t are formed
structurally (jet channels shift, product rule for *), so anything the
primitive set cannot differentiate is rejected when the expression is built,
never silently mis-differentiated.
"""

from __future__ import annotations

import numpy as np

from . import jet


class UnsupportedExpressionError(ValueError):
    """Raised at construction time for operations outside the primitive set."""


_DX_SHIFT = {"v": "x", "x": "xx", "t": "xt", "xx": "xxx", "xt": "xxt"}
_DT_SHIFT = {"v": "t", "x": "xt", "t": "tt", "xx": "xxt"}


class FieldBatch:
    """A scalar field bound to a fixed batch of (x, t) points."""

    def __init__(self, xs, ts):
        xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
        if xs.shape != ts.shape or xs.ndim != 1:
            raise ValueError("batch coordinates must be 1-D arrays of equal length")
        self.xs = xs
        self.ts = ts
        self.n = xs.size

    # symbolic handles
    def value(self) -> "Expr":
        return Ref(self, "v")

    def ddx(self) -> "Expr":
        return Ref(self, "x")

    def ddt(self) -> "Expr":
        return Ref(self, "t")

    def d2dx2(self) -> "Expr":
        return Ref(self, "xx")

    def coeff(self, fn, dfdx=None, dfdt=None) -> "Expr":
        """Known space-time function evaluated on this batch's coordinates."""
        return Coeff(self, fn, dfdx, dfdt)

    def jets(self, channels, need_cache):
        raise NotImplementedError


class NetworkBatch(FieldBatch):
    """An MLP (anything exposing .dims/.activation/.params) on a point batch."""

    def __init__(self, model, xs, ts):
        super().__init__(xs, ts)
        self.model = model

    def jets(self, channels, need_cache):
        return jet.jet_forward(
            self.model.dims, self.model.activation, self.model.params,
            self.xs, self.ts, channels, need_cache=need_cache,
        )


class AnalyticBatch(FieldBatch):
    """A closed-form field on a point batch; carries no trainable parameters."""

    def __init__(self, field, xs, ts):
        super().__init__(xs, ts)
        self.field = field  # mapping channel -> callable(x, t)

    def jets(self, channels, need_cache):
        out = {}
        for c in jet.closure(channels):
            fn = self.field.get(c)
            if fn is None:
                raise UnsupportedExpressionError(
                    f"closed-form field provides no {c!r} derivative"
                )
            out[c] = np.asarray(fn(self.xs, self.ts), dtype=np.float64) * np.ones(self.n)
        return out, None


class Expr:
    n = None  # batch length; None for pure constants

    def dx(self) -> "Expr":
        raise NotImplementedError

    def dt(self) -> "Expr":
        raise NotImplementedError

    def _eval(self, env):
        raise NotImplementedError

    def _backward(self, adj, env, sink):
        raise NotImplementedError

    def refs(self, out):
        """Accumulate required channels per batch into ``out``."""

    # operator sugar; scalars are promoted
    def __add__(self, other):
        return Add(self, _wrap(other))

    def __radd__(self, other):
        return Add(_wrap(other), self)

    def __sub__(self, other):
        return Sub(self, _wrap(other))

    def __rsub__(self, other):
        return Sub(_wrap(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Scale(float(other), self)
        return Mul(self, _wrap(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return Neg(self)


def _wrap(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float)):
        return Const(float(v))
    raise UnsupportedExpressionError(f"cannot use {type(v).__name__} in an expression")


def _join(a, b):
    if a.n is not None and b.n is not None and a.n != b.n:
        raise UnsupportedExpressionError(
            f"batch length mismatch: {a.n} vs {b.n}"
        )
    return a.n if a.n is not None else b.n


class Ref(Expr):
    def __init__(self, batch, channel):
        if channel not in jet.CHANNELS:
            raise UnsupportedExpressionError(f"unknown jet channel {channel!r}")
        self.batch = batch
        self.channel = channel
        self.n = batch.n

    def dx(self):
        nxt = _DX_SHIFT.get(self.channel)
        if nxt is None:
            raise UnsupportedExpressionError(
                f"d/dx of jet channel {self.channel!r} is beyond the tracked order"
            )
        return Ref(self.batch, nxt)

    def dt(self):
        nxt = _DT_SHIFT.get(self.channel)
        if nxt is None:
            raise UnsupportedExpressionError(
                f"d/dt of jet channel {self.channel!r} is beyond the tracked order"
            )
        return Ref(self.batch, nxt)

    def refs(self, out):
        out.setdefault(self.batch, set()).add(self.channel)

    def _eval(self, env):
        return env.jets[self.batch][self.channel]

    def _backward(self, adj, env, sink):
        key = (self.batch, self.channel)
        if key in sink:
            sink[key] = sink[key] + adj
        else:
            sink[key] = adj


class Coeff(Expr):
    def __init__(self, batch, fn, dfdx=None, dfdt=None):
        self.batch = batch
        self.fn = fn
        self.dfdx = dfdx
        self.dfdt = dfdt
        self.n = batch.n

    def dx(self):
        if self.dfdx is None:
            raise UnsupportedExpressionError(
                "coefficient has no x-derivative registered"
            )
        return Coeff(self.batch, self.dfdx)

    def dt(self):
        if self.dfdt is None:
            raise UnsupportedExpressionError(
                "coefficient has no t-derivative registered"
            )
        return Coeff(self.batch, self.dfdt)

    def _eval(self, env):
        return np.asarray(self.fn(self.batch.xs, self.batch.ts), dtype=np.float64) * np.ones(self.n)

    def _backward(self, adj, env, sink):
        pass  # no trainable dependence


class Const(Expr):
    def __init__(self, c):
        self.c = float(c)

    def dx(self):
        return Const(0.0)

    dt = dx

    def _eval(self, env):
        return self.c

    def _backward(self, adj, env, sink):
        pass


class Add(Expr):
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.n = _join(a, b)

    def dx(self):
        return Add(self.a.dx(), self.b.dx())

    def dt(self):
        return Add(self.a.dt(), self.b.dt())

    def refs(self, out):
        self.a.refs(out)
        self.b.refs(out)

    def _eval(self, env):
        return env.value(self.a) + env.value(self.b)

    def _backward(self, adj, env, sink):
        env.push(self.a, adj)
        env.push(self.b, adj)


class Sub(Expr):
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.n = _join(a, b)

    def dx(self):
        return Sub(self.a.dx(), self.b.dx())

    def dt(self):
        return Sub(self.a.dt(), self.b.dt())

    def refs(self, out):
        self.a.refs(out)
        self.b.refs(out)

    def _eval(self, env):
        return env.value(self.a) - env.value(self.b)

    def _backward(self, adj, env, sink):
        env.push(self.a, adj)
        env.push(self.b, -adj)


class Neg(Expr):
    def __init__(self, a):
        self.a = a
        self.n = a.n

    def dx(self):
        return Neg(self.a.dx())

    def dt(self):
        return Neg(self.a.dt())

    def refs(self, out):
        self.a.refs(out)

    def _eval(self, env):
        return -env.value(self.a)

    def _backward(self, adj, env, sink):
        env.push(self.a, -adj)


class Mul(Expr):
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.n = _join(a, b)

    def dx(self):
        return Add(Mul(self.a.dx(), self.b), Mul(self.a, self.b.dx()))

    def dt(self):
        return Add(Mul(self.a.dt(), self.b), Mul(self.a, self.b.dt()))

    def refs(self, out):
        self.a.refs(out)
        self.b.refs(out)

    def _eval(self, env):
        return env.value(self.a) * env.value(self.b)

    def _backward(self, adj, env, sink):
        env.push(self.a, adj * env.value(self.b))
        env.push(self.b, adj * env.value(self.a))


class Scale(Expr):
    def __init__(self, c, a):
        self.c = float(c)
        self.a = a
        self.n = a.n

    def dx(self):
        return Scale(self.c, self.a.dx())

    def dt(self):
        return Scale(self.c, self.a.dt())

    def refs(self, out):
        self.a.refs(out)

    def _eval(self, env):
        return self.c * env.value(self.a)

    def _backward(self, adj, env, sink):
        env.push(self.a, self.c * adj)


def required_channels(exprs) -> dict:
    """Map batch -> canonical channel tuple needed to evaluate ``exprs``."""
    out = {}
    for e in exprs:
        e.refs(out)
    return {b: jet.closure(chs) for b, chs in out.items()}


class Evaluation:
    """One forward (and optionally reverse) pass shared by several expressions.

    Jets per field batch are computed once for the union of required
    channels; expression values are memoized by node identity.
    """

    def __init__(self, exprs, need_grad=False):
        self.exprs = list(exprs)
        self.need_grad = need_grad
        self.jets = {}
        self.caches = {}
        self._memo = {}
        self._pending = {}
        for batch, channels in required_channels(self.exprs).items():
            jets, cache = batch.jets(channels, need_cache=need_grad)
            self.jets[batch] = jets
            self.caches[batch] = cache

    def value(self, e):
        key = id(e)
        v = self._memo.get(key)
        if v is None:
            v = e._eval(self)
            self._memo[key] = v
        return v

    def values(self):
        return [self.value(e) for e in self.exprs]

    # reverse pass: seed adjoints per expression, then pull parameter grads
    def push(self, e, adj):
        key = id(e)
        if key in self._pending:
            self._pending[key] = (self._pending[key][0] + adj, e)
        else:
            self._pending[key] = (adj, e)

    def param_grads(self, adjoints) -> dict:
        """Parameter gradients per model given per-expression output adjoints.

        ``adjoints`` is a list aligned with the constructor's expressions.
        Returns {model: flat gradient array}; closed-form batches contribute
        nothing.
        """
        if not self.need_grad:
            raise RuntimeError("Evaluation built without need_grad=True")
        for e in self.exprs:
            self.value(e)  # ensure forward memo is populated
        sink = {}
        for e, adj in zip(self.exprs, adjoints):
            self.push(e, adj)
        # propagate in reverse construction order via repeated sweeps:
        # expressions form a DAG; process nodes lazily until no work remains
        stack = list(self._pending.items())
        self._pending = {}
        while stack:
            for _, (adj, e) in stack:
                e._backward(adj, self, sink)
            stack = list(self._pending.items())
            self._pending = {}
        grads = {}
        per_batch = {}
        for (batch, channel), adj in sink.items():
            per_batch.setdefault(batch, {})[channel] = adj
        for batch, chan_adj in per_batch.items():
            cache = self.caches.get(batch)
            if cache is None:
                continue  # analytic field
            g = jet.jet_backward(cache, chan_adj)
            model = batch.model
            if model in grads:
                grads[model] = grads[model] + g
            else:
                grads[model] = g
        return grads
