"""Space-time domain, its decomposition into subdomains, and collocation
point sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Subdomain:
    index: int
    x_lo: float
    x_hi: float

    def contains(self, x, strict=False):
        if strict:
            return (x > self.x_lo) & (x < self.x_hi)
        return (x >= self.x_lo) & (x <= self.x_hi)


@dataclass(frozen=True)
class Interface:
    """Shared boundary of two adjacent subdomains: the line x = cut, t in [0, T]."""

    left: int
    right: int
    x: float


@dataclass(frozen=True)
class Decomposition:
    space_interval: tuple
    time_interval: tuple
    cut_points: tuple
    subdomains: tuple = field(init=False)
    interfaces: tuple = field(init=False)

    def __post_init__(self):
        x_lo, x_hi = self.space_interval
        t0, T = self.time_interval
        if not (np.isfinite(x_lo) and np.isfinite(x_hi) and x_lo < x_hi):
            raise ValueError("space interval must be finite with x_lo < x_hi")
        if t0 != 0.0 or T <= 0.0:
            raise ValueError("time interval must be [0, T] with T > 0")
        cuts = tuple(float(c) for c in self.cut_points)
        if any(c2 <= c1 for c1, c2 in zip(cuts, cuts[1:])):
            raise ValueError("cut points must be strictly increasing")
        for c in cuts:
            if not (x_lo < c < x_hi):
                raise ValueError(f"cut point {c} not strictly inside {self.space_interval}")
        edges = (x_lo,) + cuts + (x_hi,)
        subs = tuple(
            Subdomain(i, edges[i], edges[i + 1]) for i in range(len(edges) - 1)
        )
        ifaces = tuple(Interface(i, i + 1, cuts[i]) for i in range(len(cuts)))
        object.__setattr__(self, "cut_points", cuts)
        object.__setattr__(self, "subdomains", subs)
        object.__setattr__(self, "interfaces", ifaces)

    @property
    def n_subdomains(self) -> int:
        return len(self.subdomains)

    @property
    def T(self) -> float:
        return self.time_interval[1]

    def owners(self, x: float) -> list:
        """Indices of subdomains whose closed interval contains x (two at a cut)."""
        out = [s.index for s in self.subdomains if s.contains(x)]
        if not out:
            raise ValueError(f"x = {x} outside the spatial domain {self.space_interval}")
        return out

    def owner_of(self, x: float) -> int:
        """Single owning subdomain; ties at a cut go to the left side."""
        return self.owners(x)[0]

    def to_dict(self) -> dict:
        return {
            "space_interval": list(self.space_interval),
            "time_interval": list(self.time_interval),
            "cut_points": list(self.cut_points),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Decomposition":
        return cls(
            tuple(d["space_interval"]), tuple(d["time_interval"]), tuple(d["cut_points"])
        )


def build_decomposition(space_interval, T: float, cuts=()) -> Decomposition:
    return Decomposition(tuple(space_interval), (0.0, float(T)), tuple(cuts))


@dataclass(frozen=True)
class PointCounts:
    residual_per_subdomain: int
    interface: int
    boundary: int
    initial: int

    def __post_init__(self):
        for name in ("residual_per_subdomain", "interface", "boundary", "initial"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def to_dict(self) -> dict:
        return {
            "residual_per_subdomain": self.residual_per_subdomain,
            "interface": self.interface,
            "boundary": self.boundary,
            "initial": self.initial,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PointCounts":
        return cls(**d)


@dataclass
class PointSets:
    """All collocation points of one training run, grouped by role.

    Each entry is an (n, 2) array of (x, t) rows.  ``residual_per_subdomain``
    and ``interface_per_pair`` are aligned with ``Decomposition.subdomains``
    and ``.interfaces`` respectively.
    """

    residual_per_subdomain: list
    interface_per_pair: list
    boundary: np.ndarray
    initial: np.ndarray
    seed: int


def _uniform(rng, lo, hi, n):
    return lo + (hi - lo) * rng.random(n)


def _latin(rng, lo, hi, n):
    # stratified 1-D sample: one draw per equal-width stratum, shuffled
    strata = (rng.permutation(n) + rng.random(n)) / n
    return lo + (hi - lo) * strata


def sample_points(
    dec: Decomposition, counts: PointCounts, seed: int, sampler: str = "uniform"
) -> PointSets:
    """Draw all collocation sets; deterministic in (dec, counts, seed, sampler).

    Residual points are strictly interior to their subdomain x (0, T);
    interface points sit exactly on x = cut; boundary points split evenly
    between the two spatial endpoints; initial points have t = 0.
    """
    if sampler not in ("uniform", "latin"):
        raise ValueError("sampler must be 'uniform' or 'latin'")
    draw = _uniform if sampler == "uniform" else _latin
    rng = np.random.default_rng(seed)
    x_lo, x_hi = dec.space_interval
    T = dec.T

    residual = []
    for sub in dec.subdomains:
        xs = draw(rng, sub.x_lo, sub.x_hi, counts.residual_per_subdomain)
        ts = draw(rng, 0.0, T, counts.residual_per_subdomain)
        # open-interval roles: redraw the measure-zero event of landing on an edge
        for arr, lo, hi in ((xs, sub.x_lo, sub.x_hi), (ts, 0.0, T)):
            onedge = (arr <= lo) | (arr >= hi)
            while onedge.any():
                arr[onedge] = _uniform(rng, lo, hi, int(onedge.sum()))
                onedge = (arr <= lo) | (arr >= hi)
        residual.append(np.column_stack([xs, ts]))

    interface = []
    for iface in dec.interfaces:
        ts = draw(rng, 0.0, T, counts.interface)
        interface.append(np.column_stack([np.full(counts.interface, iface.x), ts]))

    n_left = counts.boundary // 2
    n_right = counts.boundary - n_left
    bx = np.concatenate([np.full(n_left, x_lo), np.full(n_right, x_hi)])
    bt = draw(rng, 0.0, T, counts.boundary)
    boundary = np.column_stack([bx, bt])

    ix = draw(rng, x_lo, x_hi, counts.initial)
    initial = np.column_stack([ix, np.zeros(counts.initial)])

    return PointSets(
        residual_per_subdomain=residual,
        interface_per_pair=interface,
        boundary=boundary,
        initial=initial,
        seed=seed,
    )


def export_points(path, dec: Decomposition, points: PointSets) -> None:
    """Write all points as 'role subdomain x t' rows for audit/plotting."""
    with open(path, "w") as fh:
        fh.write("role\tsubdomain\tx\tt\n")
        for i, arr in enumerate(points.residual_per_subdomain):
            for x, t in arr:
                fh.write(f"residual\t{i}\t{x!r}\t{t!r}\n")
        for k, arr in enumerate(points.interface_per_pair):
            pair = f"{dec.interfaces[k].left}-{dec.interfaces[k].right}"
            for x, t in arr:
                fh.write(f"interface\t{pair}\t{x!r}\t{t!r}\n")
        for x, t in points.boundary:
            fh.write(f"boundary\t{dec.owner_of(x)}\t{x!r}\t{t!r}\n")
        for x, t in points.initial:
            fh.write(f"initial\t{dec.owner_of(x)}\t{x!r}\t{t!r}\n")
