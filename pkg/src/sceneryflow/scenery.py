"""Zoom orbits of digit-defined measures.

The frame at zoom time t around a point x is the window measure on
[x - e**-t, x + e**-t], translated to the origin, rescaled to [-1, 1] and
normalized to unit mass. Frames are computed directly from exact digit-walk
queries at every time (no compounding of grid transforms), in coordinates
relative to the point so that arbitrary zoom depths stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDigitsError
from .functionals import orbit_series
from .grids import GridMeasure, wasserstein1
from .localzoom import GUARD_DIGITS, PointContext, digits_of_float
from .models import DigitModel, sample_digits

FRAME_DEPTH_DEFAULT = 12


@dataclass(frozen=True)
class PointSpec:
    """A zoom point given by its digit expansion (plus the seed that drew it)."""

    digits: np.ndarray
    base: int
    seed: object = None
    label: str = ""

    def __post_init__(self):
        d = np.ascontiguousarray(self.digits, dtype=np.int64)
        if np.any((d < 0) | (d >= self.base)):
            raise DomainError("digit out of range")
        object.__setattr__(self, "digits", d)

    @property
    def x(self) -> float:
        total = 0.0
        for d in self.digits[::-1]:
            total = (total + float(d)) / self.base
        return total

    def __len__(self):
        return len(self.digits)


def sample_point(model: DigitModel, n_digits: int, seed) -> PointSpec:
    """Draw a typical point of the model: n_digits digits from its chain."""
    rng = np.random.default_rng(seed)
    digits = sample_digits(model, n_digits, rng)
    return PointSpec(digits, model.base, seed=seed)


def point_for_times(model: DigitModel, t_max: float, seed,
                    extra: int = 10) -> PointSpec:
    """Sample a point with enough digits for zooms up to t_max."""
    need = int(np.ceil(t_max / np.log(model.base))) + GUARD_DIGITS + extra
    return sample_point(model, need, seed)


def _as_digits(model: DigitModel, point, t_needed: float, frame_depth: int):
    if isinstance(point, PointSpec):
        if point.base != model.base:
            raise DomainError("point base does not match the model")
        need = int(np.ceil(t_needed / np.log(model.base))) + GUARD_DIGITS
        if len(point) < need:
            raise InsufficientDigitsError(
                f"point carries {len(point)} digits, zoom needs {need}"
            )
        return point.digits
    x = float(point)
    need = int(np.ceil((t_needed + frame_depth) / np.log(model.base))) + GUARD_DIGITS + 60
    return digits_of_float(x, model.base, need)


@dataclass(frozen=True)
class SceneryOrbit:
    """Frames of one zoom orbit, all normalized on [-1, 1]."""

    model: DigitModel
    point: object
    times: np.ndarray
    frames: tuple
    distortion: object = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if np.any(t < 0):
            raise DomainError("orbit times must be nonnegative")
        for fr in self.frames:
            if not fr.normalized_box:
                raise DomainError("orbit frames must be normalized window measures")
        object.__setattr__(self, "times", t)


@dataclass(frozen=True)
class EmpiricalSceneryDistribution:
    """Functional values over the frames of an orbit, uniformly weighted."""

    values: np.ndarray  # (n_frames, n_functionals)
    functionals: tuple
    times: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(self.functionals):
            raise DomainError("value matrix does not match the functional bank")
        object.__setattr__(self, "values", v)

    @property
    def weights(self) -> np.ndarray:
        n = self.values.shape[0]
        return np.full(n, 1.0 / n)

    def prefix_average(self, n: int) -> np.ndarray:
        if not (1 <= n <= self.values.shape[0]):
            raise DomainError("prefix length out of range")
        return self.values[:n].mean(axis=0)

    def cauchy_gap(self, n: int) -> np.ndarray:
        """|avg over n frames - avg over 2n frames| per functional."""
        return np.abs(self.prefix_average(n) - self.prefix_average(2 * n))

    def variances(self) -> np.ndarray:
        return self.values.var(axis=0)


def scenery_frames(model: DigitModel, point, times, frame_depth: int = FRAME_DEPTH_DEFAULT,
                   distortion=None) -> list:
    """Normalized window measures at the given zoom times (batched)."""
    model.require_nonatomic()
    times = np.asarray(times, dtype=np.float64)
    if np.any(times < 0):
        raise DomainError("zoom times must be nonnegative")
    digits = _as_digits(model, point, float(times.max(initial=0.0)), frame_depth)
    ctx = PointContext(model, digits)
    rel = np.linspace(-1.0, 1.0, 2**frame_depth + 1)
    image_offsets = np.exp(-times)[:, None] * rel[None, :]
    if distortion is None:
        offsets = image_offsets
    else:
        if not distortion.increasing:
            raise DomainError("zoom distortions must preserve orientation")
        offsets = distortion.rel_inverse(ctx.x, image_offsets)
    masses = ctx.window_masses(offsets)
    return [
        GridMeasure(2, frame_depth, -1.0, 1.0, m, normalized_box=True) for m in masses
    ]


def scenery(model: DigitModel, point, t: float, frame_depth: int = FRAME_DEPTH_DEFAULT,
            distortion=None) -> GridMeasure:
    """The single frame at zoom time t."""
    return scenery_frames(model, point, [float(t)], frame_depth, distortion)[0]


def scenery_orbit(model: DigitModel, point, t_max: float, dt: float,
                  frame_depth: int = FRAME_DEPTH_DEFAULT, distortion=None) -> SceneryOrbit:
    """Frames at t = 0, dt, ..., t_max."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    n = int(np.floor(t_max / dt + 1e-9))
    times = dt * np.arange(n + 1)
    frames = scenery_frames(model, point, times, frame_depth, distortion)
    return SceneryOrbit(model, point, times, tuple(frames), distortion)


def maker_average(orbit: SceneryOrbit, functionals, step: float | None = None
                  ) -> EmpiricalSceneryDistribution:
    """Discrete-time functional averages over frames at times n*log(base).

    The orbit must be sampled at (or include) the multiples of log(base);
    prefix averages and their Cauchy gaps diagnose the convergence of the
    empirical frame distribution.
    """
    logb = np.log(orbit.model.base) if step is None else float(step)
    times = orbit.times
    k = np.rint(times / logb)
    on_lattice = (np.abs(times - k * logb) < 1e-9) & (k >= 1)
    if not np.any(on_lattice):
        raise DomainError("orbit carries no frames at positive multiples of the step")
    idx = np.nonzero(on_lattice)[0]
    lattice_k = k[idx].astype(np.int64)
    if np.any(np.diff(lattice_k) != 1) or lattice_k[0] != 1:
        raise DomainError("orbit misses some multiples of the step")
    values = np.empty((idx.size, len(functionals)), dtype=np.float64)
    for row, i in enumerate(idx):
        fr = orbit.frames[i]
        for jf, f in enumerate(functionals):
            values[row, jf] = f.on_grid(fr)
    return EmpiricalSceneryDistribution(values, tuple(functionals), times[idx])


def maker_series(model: DigitModel, point, n_frames: int, functionals,
                 n_cells: int = 256, distortion=None) -> EmpiricalSceneryDistribution:
    """Fast-path discrete-time averages straight from digit-walk queries."""
    logb = np.log(model.base)
    times = logb * np.arange(1, n_frames + 1)
    model.require_nonatomic()
    digits = _as_digits(model, point, float(times[-1]), 0)
    values = orbit_series(model, digits, times, functionals, n_cells=n_cells,
                          diffeo=distortion)
    return EmpiricalSceneryDistribution(values, tuple(functionals), times)


def diffeo_shift_check(model: DigitModel, point, f, times,
                       frame_depth: int = FRAME_DEPTH_DEFAULT):
    """Transport distance between the point's frames and the image measure's
    frames at times shifted by log f'(x).

    Returns (times_used, distances, skipped): pairs with t - log f'(x) < 0
    are skipped and reported.
    """
    if not f.increasing:
        raise DomainError("shift check needs an orientation-preserving map")
    times = np.asarray(times, dtype=np.float64)
    digits = _as_digits(model, point, float(times.max()), frame_depth)
    x = PointContext(model, digits).x
    s = float(f.log_deriv(np.asarray([x]))[0])
    usable = times - s >= 0.0
    skipped = times[~usable]
    used = times[usable]
    base_frames = scenery_frames(model, point, used, frame_depth)
    image_frames = scenery_frames(model, point, used - s, frame_depth, distortion=f)
    dists = np.asarray(
        [wasserstein1(a, b) for a, b in zip(base_frames, image_frames)]
    )
    return used, dists, skipped
