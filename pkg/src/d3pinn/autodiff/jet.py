"""Batched propagation of input-derivative jets through a fully connected MLP.

A "jet" carries the network output together with its partial derivatives
with respect to the two scalar inputs (x, t), tracked as named channels:

    v, x, t, xx, xt, tt, xxx, xxt

Affine layers map every channel linearly; activations mix channels via the
Faa di Bruno rules written out below.  ``jet_backward`` accumulates exact
parameter gradients of any scalar objective whose adjoints with respect to
the output channels are known, which makes losses containing u_xx (and its
spatial derivative u_xxx) exactly differentiable in the parameters.

Everything is float64 and deterministic: fixed summation order, no RNG.
"""

from __future__ import annotations

import numpy as np

from .activations import get_activation

CHANNELS = ("v", "x", "t", "xx", "xt", "tt", "xxx", "xxt")

# channels each activation rule reads besides the pre-activation value
_DEPS = {
    "v": (),
    "x": ("x",),
    "t": ("t",),
    "xx": ("x", "xx"),
    "xt": ("x", "t", "xt"),
    "tt": ("t", "tt"),
    "xxx": ("x", "xx", "xxx"),
    "xxt": ("x", "t", "xx", "xt", "xxt"),
}

# highest sigma-derivative order used by the forward rule of each channel
_ORDER = {"v": 0, "x": 1, "t": 1, "xx": 2, "xt": 2, "tt": 2, "xxx": 3, "xxt": 3}


def closure(channels) -> tuple:
    """Dependency-closed channel set in canonical order (always includes "v")."""
    need = {"v"}
    stack = list(channels)
    while stack:
        c = stack.pop()
        if c not in CHANNELS:
            raise ValueError(f"unknown jet channel {c!r}")
        if c not in need:
            need.add(c)
            stack.extend(d for d in _DEPS[c] if d not in need)
    return tuple(c for c in CHANNELS if c in need)


VALUE = closure(())
FIRST = closure(("x", "t"))
RESIDUAL = closure(("x", "t", "xx"))
FULL = CHANNELS


def mlp_dims(input_dim: int, depth: int, width: int) -> list[int]:
    """Unit counts per layer; ``depth`` counts affine maps, the last is linear."""
    if depth < 1 or width < 1:
        raise ValueError("depth and width must be >= 1")
    return [input_dim] + [width] * (depth - 1) + [1]


def param_count(input_dim: int, depth: int, width: int) -> int:
    dims = mlp_dims(input_dim, depth, width)
    return sum((dims[i] + 1) * dims[i + 1] for i in range(len(dims) - 1))


def unpack_params(params: np.ndarray, dims: list[int]):
    """Views (W, b) per layer into the flat parameter vector."""
    layers = []
    k = 0
    for i in range(len(dims) - 1):
        n_in, n_out = dims[i], dims[i + 1]
        w = params[k : k + n_in * n_out].reshape(n_out, n_in)
        k += n_in * n_out
        b = params[k : k + n_out]
        k += n_out
        layers.append((w, b))
    if k != params.size:
        raise ValueError(f"parameter vector length {params.size} != expected {k}")
    return layers


def _input_jet(xs, ts, ch):
    n = xs.size
    a0 = np.zeros((2, len(ch), n))
    a0[0, 0, :] = xs
    a0[1, 0, :] = ts
    if "x" in ch:
        a0[0, ch.index("x"), :] = 1.0
    if "t" in ch:
        a0[1, ch.index("t"), :] = 1.0
    return a0


def _act_forward(z, ch, act):
    """Apply activation jet rules to pre-activation jets z of shape (w, C, n)."""
    order = max(_ORDER[c] for c in ch)
    val, aux = act.forward(z[:, 0, :])
    d = act.derivs(aux, order) if order >= 1 else []
    a = np.empty_like(z)
    a[:, 0, :] = val
    ci = {c: k for k, c in enumerate(ch)}

    def zc(name):
        return z[:, ci[name], :]

    if "x" in ci:
        a[:, ci["x"], :] = d[0] * zc("x")
    if "t" in ci:
        a[:, ci["t"], :] = d[0] * zc("t")
    if "xx" in ci:
        a[:, ci["xx"], :] = d[1] * zc("x") ** 2 + d[0] * zc("xx")
    if "xt" in ci:
        a[:, ci["xt"], :] = d[1] * zc("x") * zc("t") + d[0] * zc("xt")
    if "tt" in ci:
        a[:, ci["tt"], :] = d[1] * zc("t") ** 2 + d[0] * zc("tt")
    if "xxx" in ci:
        a[:, ci["xxx"], :] = (
            d[2] * zc("x") ** 3 + 3.0 * d[1] * zc("x") * zc("xx") + d[0] * zc("xxx")
        )
    if "xxt" in ci:
        a[:, ci["xxt"], :] = (
            d[2] * zc("x") ** 2 * zc("t")
            + d[1] * (zc("xx") * zc("t") + 2.0 * zc("xt") * zc("x"))
            + d[0] * zc("xxt")
        )
    return a, aux


def _act_backward(abar, z, aux, ch, act):
    """Pre-activation adjoints from post-activation adjoints (exact transpose
    of the rules in :func:`_act_forward`)."""
    order = max(_ORDER[c] for c in ch) + 1
    d = act.derivs(aux, order)
    zbar = np.zeros_like(z)
    ci = {c: k for k, c in enumerate(ch)}

    def zc(name):
        return z[:, ci[name], :]

    def ab(name):
        return abar[:, ci[name], :]

    zv_bar = zbar[:, 0, :]
    zv_bar += ab("v") * d[0]
    if "x" in ci:
        g = ab("x")
        zv_bar += g * d[1] * zc("x")
        zbar[:, ci["x"], :] += g * d[0]
    if "t" in ci:
        g = ab("t")
        zv_bar += g * d[1] * zc("t")
        zbar[:, ci["t"], :] += g * d[0]
    if "xx" in ci:
        g = ab("xx")
        zv_bar += g * (d[2] * zc("x") ** 2 + d[1] * zc("xx"))
        zbar[:, ci["x"], :] += g * 2.0 * d[1] * zc("x")
        zbar[:, ci["xx"], :] += g * d[0]
    if "xt" in ci:
        g = ab("xt")
        zv_bar += g * (d[2] * zc("x") * zc("t") + d[1] * zc("xt"))
        zbar[:, ci["x"], :] += g * d[1] * zc("t")
        zbar[:, ci["t"], :] += g * d[1] * zc("x")
        zbar[:, ci["xt"], :] += g * d[0]
    if "tt" in ci:
        g = ab("tt")
        zv_bar += g * (d[2] * zc("t") ** 2 + d[1] * zc("tt"))
        zbar[:, ci["t"], :] += g * 2.0 * d[1] * zc("t")
        zbar[:, ci["tt"], :] += g * d[0]
    if "xxx" in ci:
        g = ab("xxx")
        zv_bar += g * (d[3] * zc("x") ** 3 + 3.0 * d[2] * zc("x") * zc("xx") + d[1] * zc("xxx"))
        zbar[:, ci["x"], :] += g * 3.0 * (d[2] * zc("x") ** 2 + d[1] * zc("xx"))
        zbar[:, ci["xx"], :] += g * 3.0 * d[1] * zc("x")
        zbar[:, ci["xxx"], :] += g * d[0]
    if "xxt" in ci:
        g = ab("xxt")
        zv_bar += g * (
            d[3] * zc("x") ** 2 * zc("t")
            + d[2] * (zc("xx") * zc("t") + 2.0 * zc("xt") * zc("x"))
            + d[1] * zc("xxt")
        )
        zbar[:, ci["x"], :] += g * 2.0 * (d[2] * zc("x") * zc("t") + d[1] * zc("xt"))
        zbar[:, ci["t"], :] += g * (d[2] * zc("x") ** 2 + d[1] * zc("xx"))
        zbar[:, ci["xx"], :] += g * d[1] * zc("t")
        zbar[:, ci["xt"], :] += g * 2.0 * d[1] * zc("x")
        zbar[:, ci["xxt"], :] += g * d[0]
    return zbar


class JetCache:
    """Intermediate states of one forward pass, consumed by jet_backward."""

    __slots__ = ("dims", "activation", "channels", "params", "inputs", "zs", "auxs", "n")

    def __init__(self, dims, activation, channels, params, inputs, zs, auxs, n):
        self.dims = dims
        self.activation = activation
        self.channels = channels
        self.params = params
        self.inputs = inputs  # affine inputs per layer (post-activation jets)
        self.zs = zs          # pre-activation jets per hidden layer
        self.auxs = auxs      # activation caches per hidden layer
        self.n = n


def jet_forward(dims, activation, params, xs, ts, channels, need_cache=False):
    """Propagate jets for a point batch.

    Returns (jets, cache) with ``jets`` a dict channel -> (n,) array of the
    scalar network output's derivatives, and ``cache`` a JetCache when
    requested (None otherwise).
    """
    ch = closure(channels)
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
    if xs.shape != ts.shape or xs.ndim != 1:
        raise ValueError("xs and ts must be 1-D arrays of equal length")
    act = get_activation(activation)
    layers = unpack_params(params, dims)
    n = xs.size
    nch = len(ch)

    a = _input_jet(xs, ts, ch)
    inputs, zs, auxs = [], [], []
    n_layers = len(layers)
    for i, (w, b) in enumerate(layers):
        if need_cache:
            inputs.append(a)
        z = (w @ a.reshape(a.shape[0], nch * n)).reshape(w.shape[0], nch, n)
        z[:, 0, :] += b[:, None]
        if i < n_layers - 1:
            a, aux = _act_forward(z, ch, act)
            if need_cache:
                zs.append(z)
                auxs.append(aux)
        else:
            a = z
    jets = {c: a[0, k, :].copy() for k, c in enumerate(ch)}
    cache = (
        JetCache(dims, activation, ch, params, inputs, zs, auxs, n)
        if need_cache
        else None
    )
    return jets, cache


def jet_backward(cache: JetCache, adjoints: dict) -> np.ndarray:
    """Exact parameter gradient given adjoints on the output jet channels.

    ``adjoints`` maps channel name -> (n,) array dJ/d(output channel at each
    point); missing channels are treated as zero.
    """
    ch = cache.channels
    nch = len(ch)
    n = cache.n
    act = get_activation(cache.activation)
    layers = unpack_params(cache.params, cache.dims)
    grad = np.zeros_like(cache.params)
    glayers = unpack_params(grad, cache.dims)

    abar = np.zeros((1, nch, n))
    for k, c in enumerate(ch):
        if c in adjoints:
            abar[0, k, :] = adjoints[c]

    n_layers = len(layers)
    for i in range(n_layers - 1, -1, -1):
        w, _ = layers[i]
        gw, gb = glayers[i]
        if i < n_layers - 1:
            zbar = _act_backward(abar, cache.zs[i], cache.auxs[i], ch, act)
        else:
            zbar = abar
        a_in = cache.inputs[i]
        zb2 = zbar.reshape(zbar.shape[0], nch * n)
        gw += zb2 @ a_in.reshape(a_in.shape[0], nch * n).T
        gb += zbar[:, 0, :].sum(axis=1)
        if i > 0:
            abar = (w.T @ zb2).reshape(w.shape[1], nch, n)
    return grad
