"""Two-sided digit paths and the conditional measures they drive.

A two-sided path samples the invertible cover of the digit system. Given
the digits up to position k <= 0, the conditional law of the coded point,
recentred on the point, is a measure anchored at the origin; as k walks
left these measures are consistent and define the limit measure that the
zoom flow shifts through. With order-1 chains the conditioning collapses
to the digit at position k, so every query below is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grids import GridMeasure, affine_rescale, from_model, restrict_normalize, wasserstein1
from .localzoom import PointContext
from .models import MAX_DEPTH_DEFAULT, DigitModel, reversed_transition, sample_digits

PREDICTION_DEPTH_DEFAULT = 13


@dataclass(frozen=True)
class TwoSidedPath:
    """Digits at positions k_min..k_max (inclusive), k_min <= 0 < k_max."""

    digits: np.ndarray
    k_min: int
    k_max: int
    base: int
    seed: object = None

    def __post_init__(self):
        d = np.ascontiguousarray(self.digits, dtype=np.int64)
        if d.size != self.k_max - self.k_min + 1:
            raise DomainError("digit array does not match the window bounds")
        if np.any((d < 0) | (d >= self.base)):
            raise DomainError("digit out of range")
        if self.k_min > 0 or self.k_max < 1:
            raise DomainError("window must contain positions <= 0 and >= 1")
        object.__setattr__(self, "digits", d)

    def digit(self, i: int) -> int:
        if not (self.k_min <= i <= self.k_max):
            raise DomainError(f"position {i} outside window [{self.k_min}, {self.k_max}]")
        return int(self.digits[i - self.k_min])

    def digits_after(self, k: int) -> np.ndarray:
        """Digits at positions k+1 .. k_max."""
        if k < self.k_min - 1:
            raise DomainError("window too small")
        return self.digits[k + 1 - self.k_min :]

    def shifted(self, n: int = 1) -> "TwoSidedPath":
        """The path of the index-shifted sequence (new position i holds old i+n)."""
        if self.k_max - n < 1:
            raise DomainError("window too small to shift")
        return TwoSidedPath(
            self.digits[n:], self.k_min, self.k_max - n, self.base, self.seed
        )

    def xi(self, k: int = 0) -> float:
        """Value of the tail sum of b**-i digits over i > k."""
        tail = self.digits_after(k)
        total = 0.0
        for d in tail[::-1]:
            total = (total + float(d)) / self.base
        return float(self.base) ** (-k) * total

    def tail_value(self, k: int) -> float:
        """xi_k rescaled to [0, 1] (the coded point of digits after k)."""
        tail = self.digits_after(k)
        total = 0.0
        for d in tail[::-1]:
            total = (total + float(d)) / self.base
        return total

    def serialize(self) -> str:
        body = "".join(str(int(d)) for d in self.digits)
        return f"{self.k_min}:{self.k_max}:{body}"

    @classmethod
    def deserialize(cls, text: str, base: int) -> "TwoSidedPath":
        k_min, k_max, body = text.split(":")
        digits = np.asarray([int(c) for c in body], dtype=np.int64)
        return cls(digits, int(k_min), int(k_max), base)


def sample_path(model: DigitModel, K: int, M: int, seed) -> TwoSidedPath:
    """Two-sided stationary sample: positions -K+1..M.

    Forward digits follow the model's chain; the digits left of position 1
    follow the time-reversed chain, so every window is stationary.
    """
    if K < 1 or M < 1:
        raise DomainError("need K, M >= 1")
    rng = np.random.default_rng(seed)
    fwd = sample_digits(model, M, rng)
    Phat = reversed_transition(model)
    back = sample_digits(model, K, rng, start_state=int(fwd[0]), transition=Phat)
    digits = np.concatenate([back[::-1], fwd])
    return TwoSidedPath(digits, -K + 1, M, model.base, seed=seed)


@dataclass(frozen=True)
class PredictionMeasure:
    """Conditional window measure anchored at the origin, unit mass on [-1, 1]."""

    grid: GridMeasure
    k: int
    coverage_ok: bool
    path: TwoSidedPath

    def __post_init__(self):
        if abs(float(self.grid.mass_between(-1.0, 1.0)) - 1.0) > 1e-9:
            raise DomainError("prediction measure must carry unit mass on [-1, 1]")

    @property
    def origin_mass(self) -> float:
        w = self.grid.cell_width
        return float(self.grid.mass_between(0.0, w))


def choose_truncation(model: DigitModel, path: TwoSidedPath, R: float) -> tuple:
    """Deepest-needed k <= -1 whose window covers [-R, R] on both sides.

    Deeper digits only add mass outside [-xi_k, b^-k - xi_k], so coverage of
    [-R, R] makes the truncated measure exact there.
    """
    b = model.base
    for k in range(-1, path.k_min - 1, -1):
        xk = path.xi(k)
        if xk >= R and float(b) ** (-k) - xk >= R:
            return k, True
    return path.k_min, False


def prediction_measure(
    model: DigitModel,
    path: TwoSidedPath,
    k: int | None = None,
    depth: int = PREDICTION_DEPTH_DEFAULT,
    R: float | None = None,
) -> PredictionMeasure:
    """The k-truncated conditional measure on [-R, R], unit mass on [-1, 1].

    With k omitted the truncation is chosen so that [-R, R] is covered
    exactly; R defaults to the base.
    """
    model.require_nonatomic()
    b = model.base
    R = float(b) if R is None else float(R)
    if k is None:
        k, coverage_ok = choose_truncation(model, path, R)
    else:
        if k > 0:
            raise DomainError("truncation index must be <= 0")
        if k - 1 < path.k_min - 1 or k > path.k_max:
            raise DomainError("window too small for the requested truncation")
        xk = path.xi(k)
        coverage_ok = xk >= R and float(b) ** (-k) - xk >= R
    state = path.digit(k) if k >= path.k_min else None
    y = path.tail_value(k)
    n = 2**depth
    edges = -R + 2 * R * np.arange(n + 1) / n
    scale = float(b) ** k
    src = np.clip(scale * edges + y, 0.0, 1.0)
    F = model.grid_cdf(src, start_state=state)
    raw = GridMeasure(2, depth, -R, R, np.diff(F))
    unit = float(raw.mass_between(-1.0, 1.0))
    if unit <= 0:
        raise DomainError("conditional measure carries no mass on [-1, 1]")
    grid = GridMeasure(2, depth, -R, R, raw.masses / unit)
    return PredictionMeasure(grid, k, coverage_ok, path)


def _box_frame(model: DigitModel, path: TwoSidedPath, depth: int,
               shrink: float = 1.0) -> GridMeasure:
    """Normalized [-1, 1] frame of the truncated conditional measure, with
    the window pre-shrunk in source coordinates (shrink = 1/b realizes the
    log-b zoom). Built by direct conditional queries at the comparison
    resolution, so no mass is smeared by intermediate grids."""
    k, _ = choose_truncation(model, path, float(model.base))
    state = path.digit(k)
    y = path.tail_value(k)
    n = 2**depth
    edges = np.linspace(-1.0, 1.0, n + 1)
    scale = float(model.base) ** k
    src = np.clip(scale * (edges * shrink) + y, 0.0, 1.0)
    F = model.grid_cdf(src, start_state=state)
    masses = np.diff(F)
    total = masses.sum()
    if total <= 0:
        raise DomainError("conditional measure carries no mass on the window")
    return GridMeasure(2, depth, -1.0, 1.0, masses / total, normalized_box=True)


def intertwine_check(model: DigitModel, path: TwoSidedPath,
                     depth: int = PREDICTION_DEPTH_DEFAULT) -> float:
    """Distance between the zoomed-by-log-b conditional measure and the
    shifted path's conditional measure, both normalized on [-1, 1].

    With exact truncation both sides are the same measure, so the contract
    is a distance at grid-quantization level.
    """
    model.require_nonatomic()
    zoomed = _box_frame(model, path, depth, shrink=1.0 / model.base)
    shifted = _box_frame(model, path.shifted(1), depth, shrink=1.0)
    return wasserstein1(zoomed, shifted)


def superposition_check(model: DigitModel, n_paths: int, depth: int, seed) -> float:
    """Distance between the model and the average of translated conditionals.

    Each sampled path contributes its origin-anchored measure translated
    back over the coded point and restricted to [0, 1]; for order-1 chains
    that term is exactly the chain restarted from the digit at position 0,
    so the average converges at the Monte-Carlo rate.
    """
    if n_paths < 1:
        raise DomainError("need at least one path")
    model.require_nonatomic()
    rng = np.random.default_rng(seed)
    b = model.base
    # the digit at position 0 of each independent path is stationary-distributed
    cum = np.cumsum(model.weights)
    states = np.minimum(
        np.searchsorted(cum, rng.random(n_paths), side="right"), b - 1
    )
    counts = np.bincount(states, minlength=b).astype(np.float64)
    freq = counts / n_paths
    component = [
        from_model(model, 0.0, 1.0, depth, start_state=s) if freq[s] > 0 else None
        for s in range(b)
    ]
    n = 2**depth
    avg = np.zeros(n)
    for s in range(b):
        if component[s] is not None:
            avg += freq[s] * component[s].masses
    mix = GridMeasure(2, depth, 0.0, 1.0, avg).normalized()
    target = from_model(model, 0.0, 1.0, depth).normalized()
    to_box = lambda g: restrict_normalize(affine_rescale(g, 0.5, scale=2.0))
    return wasserstein1(to_box(mix), to_box(target))


def prediction_dimension_check(model: DigitModel, path: TwoSidedPath, depths):
    """Local dimension of the conditional measure at its anchor point.

    The anchor is typical for the measure because the forward digits were
    sampled from the chain; balls are resolved through the conditional
    digit walk, radii b**-depth.
    """
    model.require_nonatomic()
    depths = np.asarray(sorted(depths), dtype=np.int64)
    k, _ = choose_truncation(model, path, 1.0)
    state = path.digit(k)
    tail = path.digits_after(k)
    ctx = PointContext(model, tail, start_state=state)
    scale = float(model.base) ** k
    radii = scale * np.power(float(model.base), -depths.astype(np.float64))
    logm = ctx.log_ball_masses(radii)
    lx = np.log(radii)
    slope, intercept = np.polyfit(lx, logm, 1)
    resid = logm - (slope * lx + intercept)
    return float(slope), float(np.sqrt(np.mean(resid**2)))
