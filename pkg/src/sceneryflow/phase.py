"""Relative phases of zoom-flow eigenfunctions and their distributions.

The Fourier average of a functional along one point's zoom orbit, at an
eigenvalue alpha, converges to (projection constant) * (eigenfunction at
that point's window measure). Ratios of such averages across points cancel
the projection constant, leaving the relative eigenfunction phase. The
distribution of these ratios over model-sampled points is the phase
measure; its shape (single atom, roots of unity, diffuse) separates the
dynamical situations the experiments exercise.

Phases of a distorted measure are always referenced to the plain model's
reference point, so the derivative-driven rotation e(-alpha log f') is
observable rather than quotiented away.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from ._parallel import det_map, split_seed
from .errors import DomainError, LowSignalError
from .functionals import default_functionals
from .models import DigitModel
from .scenery import point_for_times
from .spectral import SCAN_CELLS_DEFAULT, _orbit_values, fourier_matrix

HIST_BITS_DEFAULT = 8
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseParams:
    """Estimation parameters shared across the phase operations."""

    T: float
    dt: float
    magnitude_floor: float = 0.004
    n_cells: int = SCAN_CELLS_DEFAULT
    hist_bits: int = HIST_BITS_DEFAULT

    @classmethod
    def for_model(cls, model: DigitModel, T_periods: float = 400.0,
                  samples_per_period: int = 8, **kw) -> "PhaseParams":
        logb = math.log(model.base)
        return cls(T=T_periods * logb, dt=logb / samples_per_period, **kw)


@dataclass(frozen=True)
class PhaseSample:
    """One relative phase estimate (unit modulus) with its signal strength."""

    point_seed: object
    alpha: float
    value: complex
    magnitude: float
    quality: bool
    functional_idx: int

    def __post_init__(self):
        if abs(abs(self.value) - 1.0) > 1e-12:
            raise DomainError("phase values must have unit modulus")

    @property
    def angle(self) -> float:
        return float(np.angle(self.value))


@dataclass(frozen=True)
class PhaseMeasure:
    """Empirical distribution of relative phases against one reference point."""

    samples: tuple
    alpha: float
    hist_bits: int
    model_label: str = ""
    reference_seed: object = None
    n_low_signal: int = 0

    def angles(self) -> np.ndarray:
        return np.asarray([s.angle for s in self.samples], dtype=np.float64)

    def values(self) -> np.ndarray:
        return np.asarray([s.value for s in self.samples], dtype=np.complex128)

    def histogram(self) -> tuple:
        """(bin centers, normalized masses) over [0, 2 pi)."""
        n = 1 << self.hist_bits
        ang = np.mod(self.angles(), TWO_PI)
        counts, edges = np.histogram(ang, bins=n, range=(0.0, TWO_PI))
        centers = 0.5 * (edges[:-1] + edges[1:])
        return centers, counts / max(len(self.samples), 1)

    def rotated(self, angle: float) -> "PhaseMeasure":
        rot = complex(np.exp(1j * angle))
        new = tuple(
            PhaseSample(s.point_seed, s.alpha, _unit(s.value * rot), s.magnitude,
                        s.quality, s.functional_idx)
            for s in self.samples
        )
        return PhaseMeasure(new, self.alpha, self.hist_bits, self.model_label,
                            self.reference_seed, self.n_low_signal)

    def histogram_csv(self) -> str:
        centers, mass = self.histogram()
        buf = io.StringIO()
        buf.write("bin_center,mass\n")
        for c, m in zip(centers, mass):
            buf.write(f"{c!r},{m!r}\n")
        return buf.getvalue()

    def samples_csv(self) -> str:
        buf = io.StringIO()
        buf.write("point_seed,re,im,magnitude,quality\n")
        for s in self.samples:
            buf.write(f"{s.point_seed},{s.value.real!r},{s.value.imag!r},"
                      f"{s.magnitude!r},{int(s.quality)}\n")
        return buf.getvalue()


def _unit(z: complex) -> complex:
    a = abs(z)
    if a == 0:
        raise LowSignalError("zero spectral average has no phase")
    return complex(z / a)


def _phase_vector(model, point, alpha, functionals, params: PhaseParams,
                  distortion=None) -> np.ndarray:
    times, values = _orbit_values(model, point, functionals, params.T, params.dt,
                                  params.n_cells, distortion=distortion)
    return fourier_matrix(times, values, [alpha], demean=True)[0]


def phase_at_point(model: DigitModel, point, alpha: float, functionals,
                   params: PhaseParams, distortion=None) -> PhaseSample:
    """Normalized best-functional Fourier average at one point.

    Raises LowSignalError when every functional's magnitude sits below the
    floor (alpha not in the spectrum, or the horizon too short).
    """
    c = _phase_vector(model, point, alpha, functionals, params, distortion)
    j = int(np.argmax(np.abs(c)))
    mag = float(abs(c[j]))
    if mag < params.magnitude_floor:
        raise LowSignalError(
            f"spectral average magnitude {mag:.2e} below floor "
            f"{params.magnitude_floor:.2e} at alpha={alpha:g}"
        )
    seed = getattr(point, "seed", None)
    return PhaseSample(seed, alpha, _unit(c[j]), mag, True, j)


def relative_phase(model: DigitModel, x0, y, alpha: float, params: PhaseParams,
                   functionals=None, distortion_x0=None, distortion_y=None) -> complex:
    """phase(x0) / phase(y) using the shared best functional for the pair."""
    if functionals is None:
        functionals = default_functionals(model.base)
    c0 = _phase_vector(model, x0, alpha, functionals, params, distortion_x0)
    cy = _phase_vector(model, y, alpha, functionals, params, distortion_y)
    strength = np.minimum(np.abs(c0), np.abs(cy))
    j = int(np.argmax(strength))
    if strength[j] < params.magnitude_floor:
        raise LowSignalError("no functional carries signal at both points")
    return _unit(c0[j] / cy[j])


def phase_measure(
    model: DigitModel,
    x0,
    n_points: int,
    alpha: float,
    params: PhaseParams,
    seed,
    functionals=None,
    distortion=None,
    threads: int = 1,
    max_low_signal: float = 0.2,
) -> PhaseMeasure:
    """Distribution of relative phases of n_points model-sampled points.

    Sample points are drawn from the plain model; with a distortion the
    orbit of the image measure at the image point is used, while the
    reference stays the plain model's x0 (the rotation law needs a shared
    reference). Low-signal points are counted and reported; more than
    ``max_low_signal`` of them aborts with a diagnostic.
    """
    if n_points < 1:
        raise DomainError("need at least one sample point")
    if functionals is None:
        functionals = default_functionals(model.base)
    c0 = _phase_vector(model, x0, alpha, functionals, params)
    if float(np.max(np.abs(c0))) < params.magnitude_floor:
        raise LowSignalError("reference point carries no signal at this alpha")

    def one(i):
        pt = point_for_times(model, params.T, seed=split_seed(seed, i))
        cy = _phase_vector(model, pt, alpha, functionals, params, distortion)
        return pt.seed, cy

    results = det_map(one, range(n_points), threads=threads)
    samples = []
    n_low = 0
    for pt_seed, cy in results:
        strength = np.minimum(np.abs(c0), np.abs(cy))
        j = int(np.argmax(strength))
        mag = float(strength[j])
        if mag < params.magnitude_floor:
            n_low += 1
            continue
        samples.append(
            PhaseSample(pt_seed, alpha, _unit(c0[j] / cy[j]), mag, True, j)
        )
    if n_low > max_low_signal * n_points:
        raise LowSignalError(
            f"{n_low}/{n_points} sample points below the magnitude floor; "
            "alpha may not be in the spectrum or T is too small"
        )
    return PhaseMeasure(tuple(samples), alpha, params.hist_bits, model.label,
                        getattr(x0, "seed", None), n_low)


def phase_measure_mixture(components, x0, n_points: int, alpha: float,
                          params: PhaseParams, seed, threads: int = 1) -> PhaseMeasure:
    """Phase distribution of a finite mixture, sampled per component.

    ``components`` lists (model, distortion or None, weight); sample points
    are allocated proportionally and evaluated through their component,
    all against the reference point of the first component's plain model.
    """
    models = [c[0] for c in components]
    weights = np.asarray([c[2] for c in components], dtype=np.float64)
    weights = weights / weights.sum()
    counts = np.floor(weights * n_points).astype(int)
    counts[0] += n_points - counts.sum()
    base_model = models[0]
    functionals = default_functionals(base_model.base)
    c0 = _phase_vector(base_model, x0, alpha, functionals, params)
    samples = []
    n_low = 0
    for ci, ((m, dist, _), cnt) in enumerate(zip(components, counts)):
        fns = default_functionals(m.base)

        def one(i, m=m, dist=dist, fns=fns, ci=ci):
            pt = point_for_times(m, params.T, seed=split_seed(seed, ci, i))
            return pt.seed, _phase_vector(m, pt, alpha, fns, params, dist)

        for pt_seed, cy in det_map(one, range(cnt), threads=threads):
            strength = np.minimum(np.abs(c0), np.abs(cy))
            j = int(np.argmax(strength))
            mag = float(strength[j])
            if mag < params.magnitude_floor:
                n_low += 1
                continue
            samples.append(PhaseSample(pt_seed, alpha, _unit(c0[j] / cy[j]), mag, True, j))
    if n_low > 0.2 * n_points:
        raise LowSignalError(f"{n_low}/{n_points} mixture points below the floor")
    return PhaseMeasure(tuple(samples), alpha, params.hist_bits, "mixture",
                        getattr(x0, "seed", None), n_low)


# -- circular statistics -------------------------------------------------------

@dataclass(frozen=True)
class CircularStats:
    resultant_length: float
    circular_variance: float
    n_modes: int
    mode_centers: tuple
    mode_resultants: tuple
    mode_masses: tuple


def circular_stats(pm: PhaseMeasure, min_samples: int = 30,
                   mode_level: float = 3.0, min_mode_mass: float = 0.05,
                   min_separation: float = np.pi / 8) -> CircularStats:
    """Resultant length plus a histogram-peak mode count.

    Modes are maximal runs of smoothed histogram bins above ``mode_level``
    times the uniform level carrying at least ``min_mode_mass`` of the
    samples; clusters closer than ``min_separation`` merge. Each sample is
    assigned to the circularly nearest mode center.
    """
    vals = pm.values()
    if vals.size < min_samples:
        raise DomainError(f"need at least {min_samples} good samples")
    mean = vals.mean()
    R = float(abs(mean))
    centers, mass = pm.histogram()
    n = mass.size
    win = max(3, n // 64)
    kernel = np.ones(win) / win
    padded = np.concatenate([mass[-win:], mass, mass[:win]])
    smooth = np.convolve(padded, kernel, mode="same")[win : win + n]
    above = smooth > mode_level / n
    clusters = _circular_runs(above)
    modes = []
    for run in clusters:
        m = float(mass[run].sum())
        if m < min_mode_mass:
            continue
        z = np.sum(mass[run] * np.exp(1j * centers[run]))
        modes.append((float(np.angle(z)), m))
    # merge clusters whose centers nearly coincide (atoms split by noise)
    merged = []
    for ang, m in sorted(modes, key=lambda t: -t[1]):
        for k, (a2, m2) in enumerate(merged):
            if abs(np.angle(np.exp(1j * (ang - a2)))) < min_separation:
                z = m2 * np.exp(1j * a2) + m * np.exp(1j * ang)
                merged[k] = (float(np.angle(z)), m2 + m)
                break
        else:
            merged.append((ang, m))
    modes = merged
    if not modes:
        return CircularStats(R, 1.0 - R, 0, (), (), ())
    mode_centers = np.asarray([m[0] for m in modes])
    ang = pm.angles()
    diffs = np.angle(np.exp(1j * (ang[:, None] - mode_centers[None, :])))
    assign = np.argmin(np.abs(diffs), axis=1)
    res, ms = [], []
    for i in range(len(modes)):
        sel = assign == i
        if not np.any(sel):
            res.append(0.0)
            ms.append(0.0)
            continue
        res.append(float(abs(vals[sel].mean())))
        ms.append(float(sel.mean()))
    return CircularStats(R, 1.0 - R, len(modes), tuple(mode_centers.tolist()),
                         tuple(res), tuple(ms))


def _circular_runs(mask: np.ndarray) -> list:
    """Maximal runs of True in a circular boolean array (as index arrays)."""
    n = mask.size
    if mask.all():
        return [np.arange(n)]
    if not mask.any():
        return []
    start = int(np.argmin(mask))  # first False, so runs never wrap past it
    runs, current = [], []
    for k in range(n):
        i = (start + k) % n
        if mask[i]:
            current.append(i)
        elif current:
            runs.append(np.asarray(current))
            current = []
    if current:
        runs.append(np.asarray(current))
    return runs


def resultant_length(angles) -> float:
    z = np.exp(1j * np.asarray(angles, dtype=np.float64))
    return float(abs(z.mean()))


def uniform_null_resultants(n_samples: int, n_seeds: int, seed0: int = 0) -> np.ndarray:
    """Resultant lengths of uniform random phase clouds (null reference)."""
    out = np.empty(n_seeds)
    for i in range(n_seeds):
        rng = np.random.default_rng([seed0, i])
        out[i] = resultant_length(rng.uniform(0.0, TWO_PI, n_samples))
    return out


# -- circular transport --------------------------------------------------------

def circular_w1(angles_a, angles_b, weights_a=None, weights_b=None) -> float:
    """W1 between measures on the circle of circumference 2 pi (radians).

    Computed as min over t of the integral of |F_a - F_b - t|, i.e. the
    length-weighted median correction of the CDF difference.
    """
    xa = np.mod(np.asarray(angles_a, dtype=np.float64) / TWO_PI, 1.0)
    xb = np.mod(np.asarray(angles_b, dtype=np.float64) / TWO_PI, 1.0)
    wa = np.full(xa.size, 1.0 / xa.size) if weights_a is None else \
        np.asarray(weights_a, dtype=np.float64) / np.sum(weights_a)
    wb = np.full(xb.size, 1.0 / xb.size) if weights_b is None else \
        np.asarray(weights_b, dtype=np.float64) / np.sum(weights_b)
    pos = np.concatenate([xa, xb])
    dw = np.concatenate([wa, -wb])
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    dw = dw[order]
    G = np.cumsum(dw)
    seg = np.diff(np.concatenate([pos, [pos[0] + 1.0]]))
    med = _weighted_median(G, seg)
    return float(TWO_PI * np.sum(np.abs(G - med) * seg))


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    v = values[order]
    w = weights[order]
    cum = np.cumsum(w)
    half = 0.5 * cum[-1]
    return float(v[np.searchsorted(cum, half)])


def rotation_aligned_w1(pm_a: PhaseMeasure, pm_b: PhaseMeasure,
                        n_grid: int = 512, refine: int = 40) -> tuple:
    """min over rotations theta of W1(A, B rotated by theta); returns
    (distance, best rotation angle)."""
    a = pm_a.angles() if isinstance(pm_a, PhaseMeasure) else np.asarray(pm_a)
    b = pm_b.angles() if isinstance(pm_b, PhaseMeasure) else np.asarray(pm_b)

    def d(theta):
        return circular_w1(a, b + theta)

    grid = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    vals = np.asarray([d(t) for t in grid])
    i = int(np.argmin(vals))
    lo = grid[i] - TWO_PI / n_grid
    hi = grid[i] + TWO_PI / n_grid
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = d(x1), d(x2)
    for _ in range(refine):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = d(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = d(x2)
    best = 0.5 * (lo + hi)
    return float(d(best)), float(np.mod(best, TWO_PI))


def circular_mean_angle(pm: PhaseMeasure) -> float:
    return float(np.angle(pm.values().mean()))


# -- diffeo phase law ------------------------------------------------------------

@dataclass(frozen=True)
class PhasePushforwardReport:
    measured: PhaseMeasure
    predicted: PhaseMeasure
    distance: float
    rotation: float


def pushforward_phase_check(model: DigitModel, x0, f, alpha: float,
                            params: PhaseParams, n_points: int, seed,
                            functionals=None, threads: int = 1) -> PhasePushforwardReport:
    """Image-measure phase cloud versus the derivative-rotation prediction.

    measured: phases of the image measure at image points, plain reference.
    predicted: the plain cloud of the same sample points, each rotated by
    e(-alpha log f'(y)). Distance is the rotation-aligned circular W1.
    """
    if not f.increasing:
        raise DomainError("phase law requires an orientation-preserving map")
    if functionals is None:
        functionals = default_functionals(model.base)
    measured = phase_measure(model, x0, n_points, alpha, params, seed,
                             functionals=functionals, distortion=f, threads=threads)
    plain = phase_measure(model, x0, n_points, alpha, params, seed,
                          functionals=functionals, threads=threads)
    predicted_samples = []
    for s in plain.samples:
        pt = point_for_times(model, params.T, seed=s.point_seed)
        y = pt.x
        rot = complex(np.exp(-2j * np.pi * alpha * float(f.log_deriv(np.asarray([y]))[0])))
        predicted_samples.append(
            PhaseSample(s.point_seed, alpha, _unit(s.value * rot), s.magnitude,
                        s.quality, s.functional_idx)
        )
    predicted = PhaseMeasure(tuple(predicted_samples), alpha, params.hist_bits,
                             model.label + "+predicted", plain.reference_seed,
                             plain.n_low_signal)
    dist, rot = rotation_aligned_w1(measured, predicted)
    return PhasePushforwardReport(measured, predicted, dist, rot)
