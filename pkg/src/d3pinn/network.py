"""Subdomain MLPs (forward evaluation via the jet engine) and Adam."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .autodiff import jet
from .autodiff.activations import get_activation
from . import storage


@dataclass(frozen=True)
class MlpConfig:
    depth: int          # number of affine layers; the last one is linear
    width: int
    activation: str = "tanh"
    seed: int = 0
    input_dim: int = 2

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.input_dim != 2:
            raise ValueError("networks take (x, t), input_dim must be 2")
        get_activation(self.activation)  # validate name

    @property
    def dims(self) -> list:
        return jet.mlp_dims(self.input_dim, self.depth, self.width)

    @property
    def param_count(self) -> int:
        return jet.param_count(self.input_dim, self.depth, self.width)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "width": self.width,
            "activation": self.activation,
            "seed": self.seed,
            "input_dim": self.input_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpConfig":
        return cls(**d)


class MlpModel:
    """Parameter vector + architecture; compared and hashed by identity so a
    model can key gradient dictionaries."""

    def __init__(self, config: MlpConfig, params: np.ndarray):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (config.param_count,):
            raise ValueError(
                f"parameter vector length {params.size} != P(config) = {config.param_count}"
            )
        self.config = config
        self.params = params

    # jet-engine protocol
    @property
    def dims(self):
        return self.config.dims

    @property
    def activation(self):
        return self.config.activation

    def forward(self, xs, ts) -> np.ndarray:
        """Network values on a batch (derivative-free evaluation)."""
        jets, _ = jet.jet_forward(
            self.dims, self.activation, self.params, xs, ts, jet.VALUE
        )
        return jets["v"]

    def with_params(self, params) -> "MlpModel":
        return MlpModel(self.config, params)

    def copy(self) -> "MlpModel":
        return MlpModel(self.config, self.params.copy())


def init_model(config: MlpConfig) -> MlpModel:
    """Glorot-uniform weights, zero biases, reproducible from config.seed."""
    rng = np.random.default_rng(config.seed)
    dims = config.dims
    params = np.zeros(config.param_count)
    layers = jet.unpack_params(params, dims)
    for w, _ in layers:
        fan_out, fan_in = w.shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w[:] = rng.uniform(-limit, limit, size=w.shape)
    return MlpModel(config, params)


def save_model(path, model: MlpModel) -> None:
    storage.save_bundle(
        path, "mlp-model", {"config": model.config.to_dict()}, {"params": model.params}
    )


def load_model(path) -> MlpModel:
    meta, arrays = storage.load_bundle(path, "mlp-model")
    return MlpModel(MlpConfig.from_dict(meta["config"]), arrays["params"])


class NonFiniteGradientError(RuntimeError):
    """Gradient contained NaN/Inf; the optimizer step was rejected."""


@dataclass
class AdamState:
    step: int
    m: np.ndarray
    v: np.ndarray
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def fresh(cls, n_params: int, lr: float = 0.001, **kw) -> "AdamState":
        return cls(step=0, m=np.zeros(n_params), v=np.zeros(n_params), lr=lr, **kw)


def adam_update(params: np.ndarray, grad: np.ndarray, state: AdamState):
    """One Adam step with bias correction on a flat parameter vector.

    Returns (new_params, new_state); inputs are not mutated.
    """
    if grad.shape != params.shape or grad.shape != state.m.shape:
        raise ValueError("gradient/state length mismatch")
    bad = np.flatnonzero(~np.isfinite(grad))
    if bad.size:
        raise NonFiniteGradientError(
            f"non-finite gradient component at index {bad[0]} "
            f"(value {grad[bad[0]]!r}); step rejected"
        )
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = replace(state, step=t, m=m, v=v)
    return new_params, new_state


def adam_step(model: MlpModel, grad: np.ndarray, state: AdamState):
    """Model-level wrapper around :func:`adam_update`."""
    new_params, new_state = adam_update(model.params, grad, state)
    return model.with_params(new_params), new_state
