"""The weighted training objective: PDE residual, boundary, initial, and the
six interface components, plus exact parameter gradients.

Component order (matching the weight vector lambda1..lambda9):

    1 residual             sum over subdomains of mean |u_t + N[u]|^2
    2 boundary             mean squared boundary mismatch
    3 initial              mean squared initial mismatch
    4 residual_jump        mean |F_i - F_j|^2 across each interface
    5 value_gap            mean |(u_i - u_j)/2|^2 at each interface
    6 residual_grad        mean |grad F_k|^2, both sides of each interface
    7 grad_gap             mean |grad u_i - grad u_j|^2 at each interface
    8 residual_grad_jump   mean |grad F_i - grad F_j|^2 at each interface
    9 residual_mag         mean |F_k|^2, both sides of each interface

F_k is the full PDE residual of side k's network and grad is the space-time
gradient (d/dx, d/dt) unless configured space-only.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .autodiff import Evaluation, NetworkBatch
from .geometry import Decomposition, PointSets

COMPONENT_NAMES = (
    "residual",
    "boundary",
    "initial",
    "residual_jump",
    "value_gap",
    "residual_grad",
    "grad_gap",
    "residual_grad_jump",
    "residual_mag",
)


@dataclass(frozen=True)
class LossWeights:
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    lambda4: float = 1.0
    lambda5: float = 1.0
    lambda6: float = 0.0
    lambda7: float = 0.0
    lambda8: float = 0.0
    lambda9: float = 0.0

    def __post_init__(self):
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be finite and >= 0, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f"lambda{k}") for k in range(1, 10)])

    @classmethod
    def from_sequence(cls, seq) -> "LossWeights":
        seq = list(seq)
        if len(seq) != 9:
            raise ValueError("need exactly 9 weights")
        return cls(**{f"lambda{k + 1}": float(v) for k, v in enumerate(seq)})

    def to_dict(self) -> dict:
        return {f"lambda{k}": getattr(self, f"lambda{k}") for k in range(1, 10)}

    def without_interface_enhancements(self) -> "LossWeights":
        """lambda6..9 zeroed: the plain decomposed objective."""
        return LossWeights(
            self.lambda1, self.lambda2, self.lambda3, self.lambda4, self.lambda5,
            0.0, 0.0, 0.0, 0.0,
        )


@dataclass(frozen=True)
class LossOptions:
    # mean |u_i - (u_i + u_j)/2|^2 is the default interface value term; the
    # printed variant |u_i - (u_i - u_j)/2|^2 is kept for audits
    literal_interface_average: bool = False
    gradient_mode: str = "space_time"  # or "space_only"

    def __post_init__(self):
        if self.gradient_mode not in ("space_time", "space_only"):
            raise ValueError("gradient_mode must be 'space_time' or 'space_only'")

    def to_dict(self) -> dict:
        return {
            "literal_interface_average": self.literal_interface_average,
            "gradient_mode": self.gradient_mode,
        }


@dataclass(frozen=True)
class LossBreakdown:
    residual: float
    boundary: float
    initial: float
    residual_jump: float
    value_gap: float
    residual_grad: float
    grad_gap: float
    residual_grad_jump: float
    residual_mag: float
    total: float

    def components(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in COMPONENT_NAMES])

    def to_dict(self) -> dict:
        d = {n: getattr(self, n) for n in COMPONENT_NAMES}
        d["total"] = self.total
        return d


class _SqGroup:
    """(1/denom) * sum over points of e^2, for each expression e."""

    __slots__ = ("exprs", "denom")

    def __init__(self, exprs, denom):
        self.exprs = list(exprs)
        self.denom = float(denom)


def _weighted_total(weights: LossWeights, comps) -> float:
    lam = weights.as_array()
    total = 0.0
    for lk, ck in zip(lam, comps):
        total += lk * ck
    return total


class LossProgram:
    """All loss expressions for fixed (models, decomposition, points, problem).

    Built once per training run; each evaluation recomputes jets for the
    current parameters.  Point sets are validated against the decomposition
    on construction.
    """

    def __init__(self, models, dec: Decomposition, points: PointSets, problem, options=None):
        if len(models) != dec.n_subdomains:
            raise ValueError(
                f"{len(models)} models for {dec.n_subdomains} subdomains"
            )
        self.models = list(models)
        self.dec = dec
        self.points = points
        self.problem = problem
        self.options = options or LossOptions()
        self._validate_points()
        self._build()

    def _validate_points(self):
        dec, pts = self.dec, self.points
        if len(pts.residual_per_subdomain) != dec.n_subdomains:
            raise ValueError("one residual point set per subdomain required")
        if len(pts.interface_per_pair) != len(dec.interfaces):
            raise ValueError("one interface point set per interface required")
        for sub, arr in zip(dec.subdomains, pts.residual_per_subdomain):
            if not np.all(sub.contains(arr[:, 0])):
                raise ValueError(
                    f"residual point outside subdomain {sub.index} [{sub.x_lo}, {sub.x_hi}]"
                )
        for iface, arr in zip(dec.interfaces, pts.interface_per_pair):
            if arr.shape[0] < 1:
                raise ValueError("interface needs at least one point")
            if not np.all(arr[:, 0] == iface.x):
                raise ValueError(f"interface points must sit on x = {iface.x}")
        x_lo, x_hi = dec.space_interval
        bx = pts.boundary[:, 0]
        if not np.all((bx == x_lo) | (bx == x_hi)):
            raise ValueError("boundary points must lie on the spatial endpoints")
        if not np.all(pts.initial[:, 1] == 0.0):
            raise ValueError("initial points must have t = 0")

    def _residual_expr(self, batch):
        return batch.ddt() + self.problem.operator(batch)

    def _build(self):
        dec, pts, problem = self.dec, self.points, self.problem
        groups = {name: [] for name in COMPONENT_NAMES}

        # interior residual, one mean per subdomain, summed
        for model, arr in zip(self.models, pts.residual_per_subdomain):
            b = NetworkBatch(model, arr[:, 0], arr[:, 1])
            groups["residual"].append(_SqGroup([self._residual_expr(b)], arr.shape[0]))

        # boundary
        n_b = pts.boundary.shape[0]
        x_lo, x_hi = dec.space_interval
        if problem.boundary == "dirichlet_zero":
            for endpoint, model in ((x_lo, self.models[0]), (x_hi, self.models[-1])):
                sel = pts.boundary[:, 0] == endpoint
                if sel.any():
                    xs, ts = pts.boundary[sel, 0], pts.boundary[sel, 1]
                    b = NetworkBatch(model, xs, ts)
                    e = b.value() - b.coeff(problem.boundary_data)
                    groups["boundary"].append(_SqGroup([e], n_b))
        else:  # periodic: match the two spatial endpoints at every sampled time
            ts = pts.boundary[:, 1]
            left = NetworkBatch(self.models[0], np.full(n_b, x_lo), ts)
            right = NetworkBatch(self.models[-1], np.full(n_b, x_hi), ts)
            groups["boundary"].append(_SqGroup([left.value() - right.value()], n_b))

        # initial data, owner-evaluated
        n_0 = pts.initial.shape[0]
        owner = np.array([dec.owner_of(x) for x in pts.initial[:, 0]])
        for i, model in enumerate(self.models):
            sel = owner == i
            if sel.any():
                xs, ts = pts.initial[sel, 0], pts.initial[sel, 1]
                b = NetworkBatch(model, xs, ts)
                e = b.value() - b.coeff(lambda x, t: problem.initial(x))
                groups["initial"].append(_SqGroup([e], n_0))

        # interface terms: every interface point is seen by both sides
        literal = self.options.literal_interface_average
        grads_of = (
            (lambda e: (e.dx(), e.dt()))
            if self.options.gradient_mode == "space_time"
            else (lambda e: (e.dx(),))
        )
        for iface, arr in zip(dec.interfaces, pts.interface_per_pair):
            n_if = arr.shape[0]
            bi = NetworkBatch(self.models[iface.left], arr[:, 0], arr[:, 1])
            bj = NetworkBatch(self.models[iface.right], arr[:, 0], arr[:, 1])
            fi, fj = self._residual_expr(bi), self._residual_expr(bj)
            ui, uj = bi.value(), bj.value()

            groups["residual_jump"].append(_SqGroup([fi - fj], n_if))
            gap = 0.5 * (ui - uj) if not literal else 0.5 * (ui + uj)
            groups["value_gap"].append(_SqGroup([gap], n_if))
            groups["residual_grad"].append(
                _SqGroup([*grads_of(fi), *grads_of(fj)], n_if)
            )
            dgi, dgj = grads_of(ui), grads_of(uj)
            groups["grad_gap"].append(
                _SqGroup([a - b for a, b in zip(dgi, dgj)], n_if)
            )
            dfi, dfj = grads_of(fi), grads_of(fj)
            groups["residual_grad_jump"].append(
                _SqGroup([a - b for a, b in zip(dfi, dfj)], n_if)
            )
            groups["residual_mag"].append(_SqGroup([fi, fj], n_if))

        self._groups = groups
        self._all_exprs = [
            e for name in COMPONENT_NAMES for g in groups[name] for e in g.exprs
        ]

    def _component_values(self, ev: Evaluation):
        vals = {id(e): v for e, v in zip(self._all_exprs, ev.values())}
        comps = []
        for name in COMPONENT_NAMES:
            c = 0.0
            for g in self._groups[name]:
                for e in g.exprs:
                    v = vals[id(e)]
                    c += float(np.dot(v, v)) / g.denom
            comps.append(c)
        return comps

    def breakdown(self, weights: LossWeights) -> LossBreakdown:
        ev = Evaluation(self._all_exprs)
        comps = self._component_values(ev)
        return LossBreakdown(*comps, total=_weighted_total(weights, comps))

    def breakdown_and_grads(self, weights: LossWeights):
        """Loss breakdown plus exact parameter gradients of the weighted total.

        Returns (breakdown, grads) with grads a list aligned with the models
        (zero vectors for models that receive no contribution).
        """
        ev = Evaluation(self._all_exprs, need_grad=True)
        comps = self._component_values(ev)
        lam = weights.as_array()
        adjoints = []
        for name, lk in zip(COMPONENT_NAMES, lam):
            for g in self._groups[name]:
                for e in g.exprs:
                    v = ev.value(e)
                    adjoints.append((2.0 * lk / g.denom) * v)
        by_model = ev.param_grads(adjoints)
        grads = [
            by_model.get(m, np.zeros_like(m.params)) for m in self.models
        ]
        bd = LossBreakdown(*comps, total=_weighted_total(weights, comps))
        return bd, grads


# --- spec-level convenience operations ---------------------------------------

def residual_loss(models, dec, points, problem) -> float:
    return _single_component(models, dec, points, problem, "residual")


def boundary_loss(models, dec, points, problem) -> float:
    return _single_component(models, dec, points, problem, "boundary")


def initial_loss(models, dec, points, problem) -> float:
    return _single_component(models, dec, points, problem, "initial")


def interface_losses(models, dec, points, problem, options=None) -> dict:
    """The six interface components keyed by name."""
    prog = LossProgram(models, dec, points, problem, options)
    comps = prog._component_values(Evaluation(prog._all_exprs))
    d = dict(zip(COMPONENT_NAMES, comps))
    return {k: d[k] for k in COMPONENT_NAMES[3:]}


def total_loss(models, dec, points, problem, weights, options=None) -> LossBreakdown:
    return LossProgram(models, dec, points, problem, options).breakdown(weights)


def xpinn_objective(models, dec, points, problem, weights, options=None) -> float:
    """The five-term decomposed objective computed by an independent summation
    path (used to confirm that zeroing lambda6..9 reduces the full objective
    to this one)."""
    prog = LossProgram(models, dec, points, problem, options)
    comps = prog._component_values(Evaluation(prog._all_exprs))
    lam = weights.as_array()
    total = 0.0
    for lk, ck in zip(lam[:5], comps[:5]):
        total += lk * ck
    return total


def _single_component(models, dec, points, problem, name) -> float:
    prog = LossProgram(models, dec, points, problem)
    comps = prog._component_values(Evaluation(prog._all_exprs))
    return dict(zip(COMPONENT_NAMES, comps))[name]
