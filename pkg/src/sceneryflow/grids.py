"""Finite-resolution measures on real intervals.

A :class:`GridMeasure` stores nonnegative cell masses over a uniform
refinement of an interval. Mass is treated as uniform within a cell, so
the CDF is piecewise linear; restriction, resampling, transport distance
and pushforward all follow from that convention.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NormalizationError, OutsideSupportError, ResolutionError
from .models import MAX_DEPTH_DEFAULT, DigitModel

MIN_CELL_WIDTH = 1e-15
MAX_CELLS = 1 << 26


@dataclass(frozen=True)
class GridMeasure:
    """Masses over the base**depth uniform cells of [lo, hi)."""

    base: int
    depth: int
    lo: float
    hi: float
    masses: np.ndarray
    normalized_box: bool = field(default=False, compare=False)

    def __post_init__(self):
        m = np.ascontiguousarray(self.masses, dtype=np.float64)
        n = self.base**self.depth
        if m.shape != (n,):
            raise DomainError(f"expected {n} cells, got {m.shape}")
        if self.hi <= self.lo:
            raise DomainError("empty support interval")
        if self.cell_width <= MIN_CELL_WIDTH:
            raise ResolutionError("cell width below resolution floor")
        if np.any(m < 0):
            if np.min(m) < -1e-12 * max(m.max(), 1.0):
                raise DomainError("negative cell mass")
            m = np.clip(m, 0.0, None)
        object.__setattr__(self, "masses", m)
        if self.normalized_box:
            if self.lo < -1.0 - 1e-12 or self.hi > 1.0 + 1e-12:
                raise DomainError("normalized-box measure must live in [-1, 1]")
            if abs(self.total_mass - 1.0) > 1e-10:
                raise DomainError("normalized-box measure must have unit mass")

    # -- geometry ----------------------------------------------------------
    @property
    def n_cells(self) -> int:
        return self.masses.shape[0]

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.base**self.depth

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def edges(self) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * np.arange(self.n_cells + 1) / self.n_cells

    def midpoints(self) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * (np.arange(self.n_cells) + 0.5) / self.n_cells

    # -- piecewise-linear CDF ----------------------------------------------
    def cdf_at(self, x) -> np.ndarray:
        """Mass of (-inf, x] under the uniform-within-cell convention."""
        x = np.asarray(x, dtype=np.float64)
        knots = self.edges()
        cum = np.concatenate([[0.0], np.cumsum(self.masses)])
        return np.interp(x, knots, cum)

    def mass_between(self, a, b) -> np.ndarray:
        return self.cdf_at(b) - self.cdf_at(a)

    def normalized(self) -> "GridMeasure":
        t = self.total_mass
        if t <= 0:
            raise NormalizationError("cannot normalize a zero-mass measure")
        return GridMeasure(self.base, self.depth, self.lo, self.hi, self.masses / t)


# -- constructors ------------------------------------------------------------

def from_model(
    model: DigitModel,
    lo: float,
    hi: float,
    depth: int,
    grid_base: int = 2,
    diffeo=None,
    walk_depth: int = MAX_DEPTH_DEFAULT,
    start_state: int | None = None,
) -> GridMeasure:
    """Grid measure of a digit model (optionally distorted by a map) on [lo, hi].

    Cell masses come from exact CDF queries at the cell edges; with a
    distortion f the cell [a, b] receives the model mass of [f^-1 a, f^-1 b].
    """
    n = grid_base**depth
    if n > MAX_CELLS:
        raise ResolutionError("too many cells")
    edges = lo + (hi - lo) * np.arange(n + 1) / n
    if diffeo is not None:
        src = diffeo.inverse(edges)
    else:
        src = edges
    F = model.grid_cdf(src, depth=walk_depth, start_state=start_state)
    masses = np.diff(F)
    return GridMeasure(grid_base, depth, float(lo), float(hi), masses)


def uniform(lo: float, hi: float, depth: int, base: int = 2, mass: float = 1.0) -> GridMeasure:
    n = base**depth
    return GridMeasure(base, depth, float(lo), float(hi), np.full(n, mass / n))


def cell_atom(z: float, depth: int = 10, base: int = 2, mass: float = 1.0,
              width: float | None = None) -> GridMeasure:
    """Point mass represented as one full cell containing z."""
    w = width if width is not None else base**-depth
    return GridMeasure(base, 0, float(z), float(z) + w, np.asarray([mass]))


# -- geometric operations ----------------------------------------------------

def affine_rescale(gm: GridMeasure, shift: float, log_scale: float | None = None,
                   scale: float | None = None) -> GridMeasure:
    """Translate by -shift then scale by e**log_scale: y -> scale * (y - shift).

    Cell masses are carried along unchanged; pass ``scale`` directly when an
    exact factor (e.g. a power of the grid base) is wanted.
    """
    if scale is None:
        if log_scale is None:
            raise DomainError("need log_scale or scale")
        scale = float(np.exp(log_scale))
    if scale <= 0:
        raise DomainError("scale must be positive")
    lo = scale * (gm.lo - shift)
    hi = scale * (gm.hi - shift)
    if (hi - lo) / gm.n_cells <= MIN_CELL_WIDTH:
        raise ResolutionError("rescale underflows the cell width floor")
    if not np.isfinite(lo) or not np.isfinite(hi):
        raise ResolutionError("rescale overflows")
    return GridMeasure(gm.base, gm.depth, lo, hi, gm.masses.copy())


def resample(gm: GridMeasure, lo: float, hi: float, depth: int, base: int = 2) -> GridMeasure:
    """Re-grid onto [lo, hi]; boundary cells split proportionally to length."""
    n = base**depth
    edges = lo + (hi - lo) * np.arange(n + 1) / n
    masses = np.diff(gm.cdf_at(edges))
    return GridMeasure(base, depth, float(lo), float(hi), masses)


def restrict_normalize(gm: GridMeasure, depth: int | None = None) -> GridMeasure:
    """Clip to [-1, 1] and rescale to unit mass.

    When the support is already inside [-1, 1] the grid is kept as is;
    otherwise the measure is resampled onto a [-1, 1] grid of comparable
    cell width (partial cells split proportionally).
    """
    inside = gm.lo >= -1.0 - 1e-15 and gm.hi <= 1.0 + 1e-15
    if inside and depth is None:
        total = gm.total_mass
        if total <= 0:
            raise NormalizationError("no mass on [-1, 1]")
        return GridMeasure(gm.base, gm.depth, gm.lo, gm.hi, gm.masses / total,
                           normalized_box=True)
    if depth is None:
        width = gm.cell_width
        depth = max(1, int(np.ceil(np.log(2.0 / width) / np.log(gm.base))))
        depth = min(depth, int(np.log(MAX_CELLS) / np.log(gm.base)))
    clipped = resample(gm, -1.0, 1.0, depth, base=gm.base)
    total = clipped.total_mass
    if total <= 0:
        raise NormalizationError("no mass on [-1, 1]")
    return GridMeasure(clipped.base, clipped.depth, -1.0, 1.0, clipped.masses / total,
                       normalized_box=True)


# -- comparisons -------------------------------------------------------------

def wasserstein1(g1: GridMeasure, g2: GridMeasure) -> float:
    """L1 distance between the CDFs of two unit-mass measures on [-1, 1]."""
    for g in (g1, g2):
        if abs(g.total_mass - 1.0) > 1e-8:
            raise DomainError("wasserstein1 requires unit-mass measures")
        if g.lo < -1.0 - 1e-9 or g.hi > 1.0 + 1e-9:
            raise DomainError("wasserstein1 requires support within [-1, 1]")
    knots = np.union1d(g1.edges(), g2.edges())
    f1 = g1.cdf_at(knots)
    f2 = g2.cdf_at(knots)
    d = f1 - f2
    d0, d1 = d[:-1], d[1:]
    w = np.diff(knots)
    same = d0 * d1 >= 0
    seg = np.where(
        same,
        0.5 * (np.abs(d0) + np.abs(d1)) * w,
        0.5 * (d0 * d0 + d1 * d1) / np.maximum(np.abs(d0 - d1), 1e-300) * w,
    )
    return float(seg.sum())


def overlap_statistic(g1: GridMeasure, g2: GridMeasure) -> float:
    """Sum over common cells of min(m1, m2) for unit-mass measures.

    Grids of unequal depth are handled by uniformly refining the coarser
    (the uniform-within-cell convention); supports must agree.
    """
    if abs(g1.total_mass - 1.0) > 1e-8 or abs(g2.total_mass - 1.0) > 1e-8:
        raise DomainError("overlap_statistic requires unit-mass measures")
    if abs(g1.lo - g2.lo) > 1e-12 or abs(g1.hi - g2.hi) > 1e-12:
        raise DomainError("overlap_statistic requires a common support window")
    m1, m2 = g1.masses, g2.masses
    if g1.n_cells != g2.n_cells:
        n = np.lcm(g1.n_cells, g2.n_cells)
        if n > MAX_CELLS:
            raise ResolutionError("no affordable common refinement")
        m1 = np.repeat(m1 / (n // g1.n_cells), n // g1.n_cells)
        m2 = np.repeat(m2 / (n // g2.n_cells), n // g2.n_cells)
    return float(np.minimum(m1, m2).sum())


# -- pushforward and convolution ---------------------------------------------

def pushforward(source, f, depth: int, window=None, grid_base: int = 2) -> GridMeasure:
    """Image measure under a strictly monotone differentiable map.

    ``source`` is a DigitModel (domain [0, 1]) or a GridMeasure. Cell masses
    of the image grid are source masses of the preimage intervals.
    """
    if isinstance(source, DigitModel):
        dom_lo, dom_hi = 0.0, 1.0
    else:
        dom_lo, dom_hi = source.lo, source.hi
    a, b = float(f(dom_lo)), float(f(dom_hi))
    increasing = b > a
    if not increasing:
        a, b = b, a
    if window is not None:
        a, b = window
    n = grid_base**depth
    edges = a + (b - a) * np.arange(n + 1) / n
    src = f.inverse(edges)
    if isinstance(source, DigitModel):
        F = source.grid_cdf(src)
    else:
        F = source.cdf_at(src)
    masses = np.diff(F)
    if not increasing:
        masses = -masses
    return GridMeasure(grid_base, depth, a, b, masses)


def convolve(g1: GridMeasure, g2: GridMeasure) -> GridMeasure:
    """Distribution of the sum: discrete convolution of cell masses.

    Masses are treated as sitting at cell left edges, so the support is
    [lo1 + lo2, hi1 + hi2 - w]; total mass is the product of totals.
    """
    w1, w2 = g1.cell_width, g2.cell_width
    if abs(w1 - w2) > 1e-9 * max(w1, w2):
        raise DomainError("convolve requires a common cell width")
    if g1.n_cells * g2.n_cells > 5 * 10**8:
        raise ResolutionError("convolution too large")
    masses = np.convolve(g1.masses, g2.masses)
    n_out = masses.shape[0]
    lo = g1.lo + g2.lo
    hi = lo + n_out * w1
    base = g1.base
    depth = int(round(np.log(n_out) / np.log(base)))
    if base**depth != n_out:
        # cell count is not a clean power; store as a base-n 1-level grid
        base, depth = n_out, 1
    return GridMeasure(base, depth, lo, hi, masses)


# -- local dimension ----------------------------------------------------------

def local_dimension_estimate(model: DigitModel, x: float, depths,
                             walk_depth: int | None = None):
    """Least-squares slope of log mass([x-r, x+r]) against log r, r = b**-depth.

    Returns (slope, rms residual of the fit).
    """
    if not (0.0 <= x <= 1.0):
        raise DomainError("x must lie in [0, 1]")
    depths = np.asarray(sorted(depths), dtype=np.int64)
    r = np.power(float(model.base), -depths.astype(np.float64))
    if walk_depth is None:
        walk_depth = int(depths.max()) + 25
    lo = np.clip(x - r, 0.0, 1.0)
    hi = np.clip(x + r, 0.0, 1.0)
    F, _ = model.cdf(np.concatenate([lo, hi]), depth=walk_depth)
    mass = F[len(r):] - F[: len(r)]
    if np.any(mass <= 0):
        raise OutsideSupportError("zero-mass ball: point outside support")
    lx = np.log(r)
    ly = np.log(mass)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))


# -- serialization -------------------------------------------------------------

_MAGIC = b"SFGM"


def to_csv(gm: GridMeasure) -> str:
    edges = gm.edges()
    buf = io.StringIO()
    buf.write("cell_lo,cell_hi,mass\n")
    for a, b, m in zip(edges[:-1], edges[1:], gm.masses):
        buf.write(f"{a!r},{b!r},{m!r}\n")
    return buf.getvalue()


def to_binary(gm: GridMeasure) -> bytes:
    head = struct.pack("<4sqqddq", _MAGIC, gm.base, gm.depth, gm.lo, gm.hi, gm.n_cells)
    return head + gm.masses.astype("<f8").tobytes()


def from_binary(data: bytes) -> GridMeasure:
    head_size = struct.calcsize("<4sqqddq")
    magic, base, depth, lo, hi, n = struct.unpack("<4sqqddq", data[:head_size])
    if magic != _MAGIC:
        raise DomainError("not a grid-measure dump")
    masses = np.frombuffer(data[head_size:], dtype="<f8", count=n)
    return GridMeasure(base, depth, lo, hi, masses.copy())
