"""Benchmark problem definitions and the Burgers finite-difference reference.

A problem supplies the spatial operator N (so the PDE is u_t + N[u] = 0) as
an expression builder, the initial/boundary data, and, when available, the
exact solution as a table of closed-form derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import AnalyticBatch, DerivativeBundle, Evaluation
from .fields import SolutionField

PI = np.pi


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    operator: object                 # callable FieldBatch -> Expr, N[u]
    boundary: str                    # "dirichlet_zero" | "periodic"
    initial: object                  # h(x), vectorized
    boundary_data: object            # b(x, t), vectorized (unused for periodic)
    space_interval: tuple
    time_horizon: float
    exact: dict | None = None        # channel -> callable(x, t), when known

    def __post_init__(self):
        if self.boundary not in ("dirichlet_zero", "periodic"):
            raise ValueError(f"unknown boundary kind {self.boundary!r}")

    def exact_batch(self, xs, ts) -> AnalyticBatch:
        if self.exact is None:
            raise ValueError(f"problem {self.name!r} has no closed-form solution")
        return AnalyticBatch(self.exact, xs, ts)


def apply_operator(problem: ProblemSpec, bundle: DerivativeBundle, x: float, t: float) -> float:
    """Evaluate N[u](x, t) from an already-computed derivative bundle."""
    fld = {
        "v": lambda xs, ts: bundle.value,
        "x": lambda xs, ts: bundle.d_dx,
        "t": lambda xs, ts: bundle.d_dt,
        "xx": lambda xs, ts: bundle.d2_dx2,
    }
    batch = AnalyticBatch(fld, [x], [t])
    expr = problem.operator(batch)
    (vals,) = Evaluation([expr]).values()
    return float(np.asarray(vals).reshape(-1)[0])


# --- Example 1: forced diffusion with a known solution -----------------------

def _diffusion_source(xs, ts):
    return np.exp(-ts) * (PI**2 * np.sin(PI * xs) - np.sin(PI * xs))


def _diffusion_source_dx(xs, ts):
    return np.exp(-ts) * (PI**3 * np.cos(PI * xs) - PI * np.cos(PI * xs))


def _diffusion_source_dt(xs, ts):
    return -_diffusion_source(xs, ts)


_DIFFUSION_EXACT = {
    "v": lambda x, t: np.exp(-t) * np.sin(PI * x),
    "x": lambda x, t: PI * np.exp(-t) * np.cos(PI * x),
    "t": lambda x, t: -np.exp(-t) * np.sin(PI * x),
    "xx": lambda x, t: -(PI**2) * np.exp(-t) * np.sin(PI * x),
    "xt": lambda x, t: -PI * np.exp(-t) * np.cos(PI * x),
    "tt": lambda x, t: np.exp(-t) * np.sin(PI * x),
    "xxx": lambda x, t: -(PI**3) * np.exp(-t) * np.cos(PI * x),
    "xxt": lambda x, t: PI**2 * np.exp(-t) * np.sin(PI * x),
}


def example1_diffusion() -> ProblemSpec:
    """u_t = u_xx + e^{-t}(pi^2 sin(pi x) - sin(pi x)) on [-1,1] x [0,1],
    homogeneous Dirichlet, u(x,0) = sin(pi x); exact u = e^{-t} sin(pi x)."""

    def operator(u):
        return -u.d2dx2() - u.coeff(
            _diffusion_source, _diffusion_source_dx, _diffusion_source_dt
        )

    return ProblemSpec(
        name="example1",
        operator=operator,
        boundary="dirichlet_zero",
        initial=lambda x: np.sin(PI * np.asarray(x, dtype=np.float64)),
        boundary_data=lambda x, t: np.zeros_like(np.asarray(x, dtype=np.float64)),
        space_interval=(-1.0, 1.0),
        time_horizon=1.0,
        exact=_DIFFUSION_EXACT,
    )


# --- Example 2: inviscid Burgers, periodic, smooth up to T = 1 ---------------

def example2_burgers() -> ProblemSpec:
    """u_t = -u u_x on [-1,1] x [0,1], periodic, u(x,0) = 0.3 exp(-9 x^2) + 1.

    The initial hump steepens but 1/max(-h') ~ 1.30 > 1, so no shock forms
    inside the time horizon.
    """

    def operator(u):
        return u.value() * u.ddx()

    return ProblemSpec(
        name="example2",
        operator=operator,
        boundary="periodic",
        initial=lambda x: 0.3 * np.exp(-9.0 * np.asarray(x, dtype=np.float64) ** 2) + 1.0,
        boundary_data=None,
        space_interval=(-1.0, 1.0),
        time_horizon=1.0,
        exact=None,
    )


def get_problem(name: str) -> ProblemSpec:
    try:
        return {"example1": example1_diffusion, "example2": example2_burgers}[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}") from None


# --- finite-difference reference for Burgers ---------------------------------

class CflViolationError(RuntimeError):
    pass


def _flux_divergence(u, dx):
    f = 0.5 * u * u
    return -(np.roll(f, -1) - np.roll(f, 1)) / (2.0 * dx)


def burgers_fd_reference(
    dx: float = 0.01,
    dt: float = 0.0001,
    store_every_t: float = 0.01,
    scheme: str = "rk4",
    problem: ProblemSpec | None = None,
) -> SolutionField:
    """Method-of-lines reference on a periodic grid (x = -1 identified with 1).

    Space: central differences of the flux u^2/2.  Time: classical RK4 by
    default; ``scheme="leapfrog"`` gives the literal central-in-time variant
    (one RK4 start-up step) for audits.  The returned grid duplicates the
    x = 1 endpoint so periodicity is explicit in the output.
    """
    if dx <= 0 or dt <= 0:
        raise ValueError("dx and dt must be positive")
    if scheme not in ("rk4", "leapfrog"):
        raise ValueError("scheme must be 'rk4' or 'leapfrog'")
    problem = problem if problem is not None else example2_burgers()
    x_lo, x_hi = problem.space_interval
    T = problem.time_horizon
    m = round((x_hi - x_lo) / dx)
    if abs(m * dx - (x_hi - x_lo)) > 1e-9:
        raise ValueError("dx must divide the spatial interval")
    steps_per_store = round(store_every_t / dt)
    if abs(steps_per_store * dt - store_every_t) > 1e-9:
        raise ValueError("store_every_t must be an integer multiple of dt")
    n_steps = round(T / dt)
    if abs(n_steps * dt - T) > 1e-9:
        raise ValueError("dt must divide the time horizon")

    xs = x_lo + dx * np.arange(m)  # unique nodes; x_hi duplicates xs[0]
    u = problem.initial(xs)
    snapshots = [u.copy()]
    u_prev = None
    for k in range(n_steps):
        cfl = dt * float(np.max(np.abs(u))) / dx
        if cfl >= 1.0:
            raise CflViolationError(f"CFL {cfl:.3f} >= 1 at step {k} (t={k * dt:.6f})")
        if not np.all(np.isfinite(u)):
            raise CflViolationError(f"non-finite state at step {k} (t={k * dt:.6f})")
        if scheme == "rk4" or u_prev is None:
            k1 = _flux_divergence(u, dx)
            k2 = _flux_divergence(u + 0.5 * dt * k1, dx)
            k3 = _flux_divergence(u + 0.5 * dt * k2, dx)
            k4 = _flux_divergence(u + dt * k3, dx)
            u_next = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            u_next = u_prev + 2.0 * dt * _flux_divergence(u, dx)
        u_prev = u if scheme == "leapfrog" else None
        u = u_next
        if (k + 1) % steps_per_store == 0:
            snapshots.append(u.copy())

    vals = np.stack(snapshots, axis=1)
    x_full = np.append(xs, x_hi)
    vals_full = np.vstack([vals, vals[0:1, :]])  # shared endpoint, exact equality
    t_grid = store_every_t * np.arange(len(snapshots))
    return SolutionField(
        x_full,
        t_grid,
        vals_full,
        step_size=dt,
        meta={"solver": f"fd-central-{scheme}", "dx": dx, "dt": dt},
    )
