"""Multiscale overlap tests between (possibly distorted) digit measures.

Two unit-mass measures on a common window are compared by the summed
cellwise minimum over dyadic partitions of increasing depth. The overlap
is nonincreasing under refinement and decays to zero exactly when the
measures are mutually singular, so a fitted geometric decay with a small
terminal value is the workable finite-resolution proxy for singularity.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grids import GridMeasure, convolve, from_model
from .localzoom import PointContext, digits_of_float
from .models import DigitModel

CROSS_BASE_DEPTH_CAP = 22


@dataclass(frozen=True)
class SingularityReport:
    """Overlap profile over dyadic depths with a fitted decay verdict."""

    depths: tuple
    overlaps: tuple
    decay_rate: float
    r2: float
    verdict: str  # "equivalent-like" | "singular-like" | "inconclusive"
    label: str = ""

    def __post_init__(self):
        o = np.asarray(self.overlaps)
        if np.any(np.diff(o) > 1e-12):
            raise DomainError("overlaps must be nonincreasing in depth")

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                "depths": list(self.depths),
                "overlaps": list(self.overlaps),
                "decay_rate": self.decay_rate,
                "r2": self.r2,
                "verdict": self.verdict,
            },
            indent=2,
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("depth,overlap\n")
        for d, o in zip(self.depths, self.overlaps):
            buf.write(f"{d},{o!r}\n")
        return buf.getvalue()


def _window_masses(source, depth: int, window) -> np.ndarray:
    model, diffeo = source
    lo, hi = window
    gm = from_model(model, lo, hi, depth, grid_base=2, diffeo=diffeo)
    total = gm.total_mass
    if total <= 0:
        raise DomainError("source carries no mass on the comparison window")
    return gm.masses / total


def overlap_profile(
    source1,
    source2,
    depths,
    window=(0.0, 1.0),
    equivalent_floor: float = 0.9,
    singular_ceiling: float = 0.2,
    r2_min: float = 0.9,
    label: str = "",
) -> SingularityReport:
    """Cellwise-minimum overlaps of two normalized sources over dyadic depths.

    Sources are (model, diffeo-or-None) pairs; masses come from exact
    interval queries pushed through the inverse map when distorted. The
    verdict is equivalent-like when every overlap stays above the floor,
    singular-like when the log-overlap decay fits a positive rate with
    R^2 above the threshold and the final overlap is small, and
    inconclusive otherwise.
    """
    depths = sorted(int(d) for d in depths)
    if depths[0] < 1 or depths[-1] > CROSS_BASE_DEPTH_CAP:
        raise DomainError(f"dyadic depths must lie in [1, {CROSS_BASE_DEPTH_CAP}]")
    m1 = _window_masses(_as_source(source1), depths[-1], window)
    m2 = _window_masses(_as_source(source2), depths[-1], window)
    overlaps = []
    for d in depths:
        k = 2 ** (depths[-1] - d)
        c1 = m1.reshape(-1, k).sum(axis=1)
        c2 = m2.reshape(-1, k).sum(axis=1)
        overlaps.append(float(np.minimum(c1, c2).sum()))
    overlaps_arr = np.asarray(overlaps)

    decay_rate, r2 = _fit_decay(np.asarray(depths, dtype=np.float64), overlaps_arr)
    if overlaps_arr.min() >= equivalent_floor:
        verdict = "equivalent-like"
    elif decay_rate > 0 and r2 >= r2_min and overlaps_arr[-1] < singular_ceiling:
        verdict = "singular-like"
    else:
        verdict = "inconclusive"
    return SingularityReport(tuple(depths), tuple(overlaps), decay_rate, r2,
                             verdict, label)


def _as_source(source):
    if isinstance(source, DigitModel):
        return (source, None)
    model, diffeo = source
    return (model, diffeo)


def _fit_decay(depths: np.ndarray, overlaps: np.ndarray) -> tuple:
    pos = overlaps > 0
    if pos.sum() < 2:
        return float("inf"), 1.0
    x = depths[pos]
    y = np.log(overlaps[pos])
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r2


@dataclass(frozen=True)
class ConvolutionProbe:
    """Observed local dimensions of a d-fold self-convolution (reported)."""

    d: int
    slopes: tuple
    mean_slope: float
    grid_depth: int


def convolution_dimension_probe(
    model: DigitModel,
    d: int,
    depths=None,
    grid_depth: int = 14,
    n_sample_points: int = 5,
    seed: int = 0,
) -> ConvolutionProbe:
    """Local dimension of the d-fold self-convolution at sampled points.

    The convolution lives on a grid of 2**grid_depth cells per unit; local
    dimensions are least-squares slopes of log ball mass against log radius
    over dyadic radii resolvable on that grid. d = 1 reduces to the plain
    local dimension of the model.
    """
    if d < 1:
        raise DomainError("need d >= 1")
    if depths is None:
        depths = range(3, grid_depth - 3)
    rng = np.random.default_rng([seed])
    if d == 1:
        slopes = []
        for _ in range(n_sample_points):
            digits = _model_digits(model, rng, 80)
            ctx = PointContext(model, digits)
            radii = np.power(2.0, -np.asarray(list(depths), dtype=np.float64))
            logm = ctx.log_ball_masses(radii)
            slope = np.polyfit(np.log(radii), logm, 1)[0]
            slopes.append(float(slope))
        return ConvolutionProbe(1, tuple(slopes), float(np.mean(slopes)), grid_depth)

    base_grid = from_model(model, 0.0, 1.0, grid_depth)
    conv = base_grid
    for _ in range(d - 1):
        conv = convolve(conv, base_grid)
    slopes = []
    for _ in range(n_sample_points):
        x = sum(_sample_x(model, rng) for _ in range(d))
        radii = np.power(2.0, -np.asarray(list(depths), dtype=np.float64))
        mass = conv.mass_between(x - radii, x + radii)
        if np.any(mass <= 0):
            continue
        slope = np.polyfit(np.log(radii), np.log(mass), 1)[0]
        slopes.append(float(slope))
    if not slopes:
        raise DomainError("all sampled points fell outside the convolution support")
    return ConvolutionProbe(d, tuple(slopes), float(np.mean(slopes)), grid_depth)


def _model_digits(model: DigitModel, rng, n: int):
    from .models import sample_digits

    return sample_digits(model, n, rng)


def _sample_x(model: DigitModel, rng) -> float:
    digits = _model_digits(model, rng, 60)
    total = 0.0
    for dd in digits[::-1]:
        total = (total + float(dd)) / model.base
    return total


def rebase_power(model: DigitModel, power: int, label: str = "") -> DigitModel:
    """The same measure presented in base b**power (digit blocks of length
    `power` become single digits). Only Bernoulli models are supported."""
    if not model.is_bernoulli:
        raise DomainError("rebasing is implemented for Bernoulli models only")
    b = model.base
    w = model.weights
    new = w.copy()
    for _ in range(power - 1):
        new = np.outer(new, w).reshape(-1)
    return DigitModel.bernoulli(new, label or f"{model.label}-pow{power}")
