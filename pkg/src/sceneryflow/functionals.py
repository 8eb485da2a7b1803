"""Bounded probes of normalized window measures.

A :class:`TestFunctional` maps a unit-mass measure on [-1, 1] to a value
in [0, 1]: the mass of a subinterval, a moment of order up to 4 (affinely
mapped into [0, 1]), or the integral of a fixed piecewise-linear function
with values in [0, 1]. Six of these make up the default bank; they probe
asymmetry and spread at several scales and were calibrated so the shipped
models are well separated along their zoom orbits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .localzoom import PointContext

DEFAULT_MOMENT_CELLS = 128


@dataclass(frozen=True)
class TestFunctional:
    """A bounded functional of normalized measures on [-1, 1]."""

    kind: str  # "interval_mass" | "moment" | "smooth_integral"
    params: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind == "interval_mass":
            a, b = self.params
            if not (-1.0 <= a < b <= 1.0):
                raise DomainError("interval functional needs -1 <= a < b <= 1")
        elif self.kind == "moment":
            (order,) = self.params
            if not (1 <= int(order) <= 4):
                raise DomainError("moment order must be 1..4")
        elif self.kind == "smooth_integral":
            knots, values = self.params
            k = np.asarray(knots, dtype=np.float64)
            v = np.asarray(values, dtype=np.float64)
            if k.size != v.size or k.size < 2 or np.any(np.diff(k) <= 0):
                raise DomainError("smooth functional needs increasing knots")
            if k[0] > -1.0 or k[-1] < 1.0 or np.any(v < 0) or np.any(v > 1):
                raise DomainError("smooth functional must cover [-1,1] with values in [0,1]")
        else:
            raise DomainError(f"unknown functional kind {self.kind!r}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def interval(cls, a: float, b: float, label: str = "") -> "TestFunctional":
        return cls("interval_mass", (float(a), float(b)), label or f"mass[{a:g},{b:g}]")

    @classmethod
    def moment(cls, order: int, label: str = "") -> "TestFunctional":
        return cls("moment", (int(order),), label or f"moment{order}")

    @classmethod
    def smooth(cls, knots, values, label: str = "") -> "TestFunctional":
        return cls(
            "smooth_integral",
            (tuple(map(float, knots)), tuple(map(float, values))),
            label or "smooth",
        )

    # -- evaluation ---------------------------------------------------------
    def breakpoints(self) -> np.ndarray:
        if self.kind == "interval_mass":
            return np.asarray(self.params, dtype=np.float64)
        if self.kind == "smooth_integral":
            return np.asarray(self.params[0], dtype=np.float64)
        return np.asarray([], dtype=np.float64)

    def from_cells(self, edges: np.ndarray, masses: np.ndarray) -> np.ndarray:
        """Evaluate from unit cell masses over `edges` (vectorized over rows).

        Interval functionals require their endpoints to be grid edges.
        """
        masses = np.atleast_2d(masses)
        if self.kind == "interval_mass":
            a, b = self.params
            ia = int(np.argmin(np.abs(edges - a)))
            ib = int(np.argmin(np.abs(edges - b)))
            if abs(edges[ia] - a) > 1e-12 or abs(edges[ib] - b) > 1e-12:
                raise DomainError("interval endpoints must lie on the cell grid")
            return masses[:, ia:ib].sum(axis=1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        if self.kind == "moment":
            (order,) = self.params
            raw = masses @ np.power(mid, order)
            return 0.5 * (1.0 + raw)
        knots, values = self.params
        g = np.interp(mid, knots, values)
        return masses @ g

    def on_grid(self, gm) -> float:
        """Evaluate on a normalized GridMeasure supported in [-1, 1]."""
        if abs(gm.total_mass - 1.0) > 1e-8:
            raise DomainError("functionals are defined on unit-mass measures")
        if self.kind == "interval_mass":
            a, b = self.params
            return float(gm.mass_between(a, b))
        edges = gm.edges()
        return float(self.from_cells(edges, gm.masses[None, :])[0])


def default_functionals(base: int = 3):
    """The shipped six-functional bank."""
    third = 1.0 / base
    return [
        TestFunctional.interval(0.0, third, f"mass[0,1/{base}]"),
        TestFunctional.interval(-third, third, f"mass[-1/{base},1/{base}]"),
        TestFunctional.interval(0.0, 1.0, "mass[0,1]"),
        TestFunctional.moment(1),
        TestFunctional.moment(2),
        TestFunctional.smooth((-1.0, 0.0, 1.0), (0.0, 1.0, 0.0), "hat"),
    ]


def merged_edges(functionals, n_cells: int = DEFAULT_MOMENT_CELLS) -> np.ndarray:
    """Union of the uniform moment grid and all functional breakpoints."""
    edges = np.linspace(-1.0, 1.0, n_cells + 1)
    extra = [f.breakpoints() for f in functionals]
    return np.unique(np.concatenate([edges] + extra))


def orbit_series(
    model,
    digits,
    times,
    functionals,
    n_cells: int = DEFAULT_MOMENT_CELLS,
    diffeo=None,
    start_state: int | None = None,
) -> np.ndarray:
    """Functional values along a zoom orbit, shape (n_times, n_functionals).

    Frame f_i is the normalized window measure at zoom time times[i] around
    the coded point (of the diffeo image measure when a map is given); all
    frames are evaluated through one batched digit-walk call.
    """
    times = np.asarray(times, dtype=np.float64)
    if np.any(times < 0):
        raise DomainError("zoom times must be nonnegative")
    ctx = PointContext(model, digits, start_state=start_state)
    edges = merged_edges(functionals, n_cells)
    scales = np.exp(-times)
    image_offsets = scales[:, None] * edges[None, :]
    if diffeo is None:
        offsets = image_offsets
    else:
        offsets = diffeo.rel_inverse(ctx.x, image_offsets)
    masses = ctx.window_masses(offsets)
    out = np.empty((times.size, len(functionals)), dtype=np.float64)
    for jf, f in enumerate(functionals):
        out[:, jf] = f.from_cells(edges, masses)
    return out
