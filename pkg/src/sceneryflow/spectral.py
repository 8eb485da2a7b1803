"""Pure-point spectrum of the zoom flow, probed by Fourier averages.

An eigenvalue alpha of the flow makes e(-alpha*t) * F(frame_t) average to
a nonzero limit for functionals F correlated with the eigenfunction; off
the point spectrum the averages decay. The scan never solves for
frequencies: it rasters a grid containing the lattice candidates
k/(m log b) together with off-lattice controls and thresholds the
magnitudes against the control level.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._parallel import det_map, split_seed
from .errors import DomainError
from .functionals import default_functionals, orbit_series
from .models import DigitModel
from .scenery import point_for_times

SCAN_CELLS_DEFAULT = 64
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def e(t):
    """The unit character exp(2 pi i t)."""
    return np.exp(2j * np.pi * np.asarray(t, dtype=np.float64))


def fourier_average(model: DigitModel, point, alpha: float, functional, T: float,
                    dt: float, demean: bool = False, distortion=None,
                    n_cells: int = SCAN_CELLS_DEFAULT) -> complex:
    """(1/T) * sum of e(-alpha t_i) F(frame at t_i) dt over t_i = i dt < T.

    At alpha = 0 this is the plain time average. ``demean`` subtracts the
    orbit mean of F first, which removes the O(1/(alpha T)) leakage of the
    constant component (used by the scan's detification thresholds).
    """
    times, values = _orbit_values(model, point, [functional], T, dt,
                                  n_cells=n_cells, distortion=distortion)
    series = values[:, 0]
    if demean:
        series = series - series.mean()
    return complex(np.mean(series * e(-alpha * times)))


def _orbit_values(model, point, functionals, T, dt, n_cells, distortion=None):
    if dt <= 0 or T <= dt:
        raise DomainError("need 0 < dt < T")
    n = int(round(T / dt))
    times = dt * np.arange(n)
    digits = point.digits if hasattr(point, "digits") else None
    if digits is None:
        from .localzoom import digits_of_float

        need = int(np.ceil(T / np.log(model.base))) + 90
        digits = digits_of_float(float(point), model.base, need)
    values = orbit_series(model, digits, times, functionals, n_cells=n_cells,
                          diffeo=distortion)
    return times, values


def fourier_matrix(times, values, alphas, demean: bool = True) -> np.ndarray:
    """Complex averages for all (alpha, functional) pairs, shape (A, J)."""
    v = np.asarray(values, dtype=np.float64)
    if demean:
        v = v - v.mean(axis=0, keepdims=True)
    E = np.exp(-2j * np.pi * np.outer(np.asarray(alphas), times))
    return (E @ v) / v.shape[0]


def lattice_alphas(base: int, max_k: int = 6, max_m: int = 3):
    """Distinct lattice candidates k/(m log b) with their reduced labels."""
    logb = math.log(base)
    seen = {}
    for m in range(1, max_m + 1):
        for k in range(1, max_k + 1):
            frac = Fraction(k, m)
            if frac not in seen:
                seen[frac] = float(frac) / logb
    fracs = sorted(seen)
    return [(seen[f], (f.numerator, f.denominator)) for f in fracs]


def control_alphas(base: int, n_controls: int = 24, max_k: int = 6,
                   max_m: int = 3, min_gap: float = 0.04):
    """Golden-spaced off-lattice frequencies in the scanned band."""
    logb = math.log(base)
    lattice = {Fraction(k, m) for k in range(1, max_k + 1) for m in range(1, max_m + 1)}
    lattice_vals = sorted(float(f) for f in lattice)
    out = []
    i = 1
    lo, hi = 0.35, max_k + 0.65
    while len(out) < n_controls:
        c = lo + ((i * GOLDEN) % 1.0) * (hi - lo)
        i += 1
        if min(abs(c - v) for v in lattice_vals) < min_gap:
            continue
        out.append(c / logb)
    return sorted(out)


@dataclass(frozen=True)
class SpectrumScan:
    """Per-frequency magnitudes of a scan, with their provenance."""

    alphas: np.ndarray
    magnitudes: np.ndarray
    magnitude_std: np.ndarray
    lattice_labels: tuple  # (k, m) for lattice rows, None for controls
    n_points: int
    T: float
    dt: float
    base: int
    model_label: str = ""

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=np.float64)
        m = np.asarray(self.magnitudes, dtype=np.float64)
        if np.any(np.diff(a) <= 0):
            raise DomainError("alpha grid must be strictly increasing")
        if np.any(m < 0) or np.any(m > 1 + 1e-9):
            raise DomainError("magnitudes must lie in [0, 1]")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "magnitudes", m)

    def control_median(self) -> float:
        ctrl = [m for m, lab in zip(self.magnitudes, self.lattice_labels) if lab is None]
        if not ctrl:
            raise DomainError("scan has no control frequencies")
        return float(np.median(ctrl))

    def magnitude_at(self, alpha: float) -> float:
        i = int(np.argmin(np.abs(self.alphas - alpha)))
        if abs(self.alphas[i] - alpha) > 1e-9 * max(1.0, abs(alpha)):
            raise DomainError(f"alpha {alpha} is not on the scanned grid")
        return float(self.magnitudes[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("alpha,magnitude,magnitude_std,n_points,T\n")
        for a, m, s in zip(self.alphas, self.magnitudes, self.magnitude_std):
            buf.write(f"{a!r},{m!r},{s!r},{self.n_points},{self.T!r}\n")
        return buf.getvalue()


def spectrum_scan(
    model: DigitModel,
    n_points: int,
    functionals=None,
    alphas=None,
    lattice_labels=None,
    T: float | None = None,
    dt: float | None = None,
    seed=0,
    n_cells: int = SCAN_CELLS_DEFAULT,
    threads: int = 1,
) -> SpectrumScan:
    """Scan the frequency grid with n_points independent zoom orbits.

    The per-frequency magnitude is the mean over points of the best
    functional's |average| (orbit means removed first). Frequencies beyond
    the 1/(2 dt) sampling limit alias; the default grid and dt keep the
    acceptance-relevant candidates well inside it.
    """
    model.require_nonatomic()
    logb = math.log(model.base)
    T = 400.0 * logb if T is None else float(T)
    dt = logb / 8.0 if dt is None else float(dt)
    if functionals is None:
        functionals = default_functionals(model.base)
    if alphas is None:
        lat = lattice_alphas(model.base)
        ctr = control_alphas(model.base)
        pairs = sorted([(a, lab) for a, lab in lat] + [(c, None) for c in ctr])
        alphas = np.asarray([p[0] for p in pairs])
        lattice_labels = tuple(p[1] for p in pairs)
    else:
        alphas = np.asarray(alphas, dtype=np.float64)
        if lattice_labels is None:
            lattice_labels = tuple(None for _ in alphas)

    def one_point(i):
        pt = point_for_times(model, T, seed=split_seed(seed, i))
        times, values = _orbit_values(model, pt, functionals, T, dt, n_cells)
        M = fourier_matrix(times, values, alphas, demean=True)
        return np.abs(M).max(axis=1)

    per_point = det_map(one_point, range(n_points), threads=threads)
    stacked = np.stack(per_point)
    mags = np.asarray([math.fsum(stacked[:, j]) / n_points for j in range(len(alphas))])
    std = stacked.std(axis=0)
    return SpectrumScan(alphas, mags, std, tuple(lattice_labels), n_points, T, dt,
                        model.base, model.label)


@dataclass(frozen=True)
class PresenceDecision:
    decision: str  # "present" | "absent" | "inconclusive"
    magnitude: float
    control_median: float
    ratio: float


def eigenvalue_present(scan: SpectrumScan, alpha: float, present_ratio: float = 5.0,
                       absent_ratio: float = 2.0, floor: float = 0.01) -> PresenceDecision:
    """Threshold rule over a scan.

    Present needs both a clear multiple of the control median and an
    absolute magnitude floor; the floor keeps ratios of float-noise
    magnitudes (trivial flows have nothing but those) from registering as
    structure. Clear-ratio-but-subfloor candidates stay inconclusive.
    """
    mag = scan.magnitude_at(alpha)
    med = scan.control_median()
    ratio = mag / med if med > 0 else math.inf
    if scan.n_points < 1 or scan.T < 20.0 * math.log(scan.base):
        return PresenceDecision("inconclusive", mag, med, ratio)
    if mag >= present_ratio * med and mag >= floor:
        return PresenceDecision("present", mag, med, ratio)
    if ratio <= absent_ratio or (mag < floor and ratio < present_ratio):
        return PresenceDecision("absent", mag, med, ratio)
    return PresenceDecision("inconclusive", mag, med, ratio)


def peak_report(scan: SpectrumScan, present_ratio: float = 5.0,
                absent_ratio: float = 2.0, floor: float = 0.01) -> dict:
    """Smallest integer n with n/log b present, plus per-candidate ratios."""
    logb = math.log(scan.base)
    candidates = {}
    for a, lab in zip(scan.alphas, scan.lattice_labels):
        if lab is not None and lab[1] == 1:
            dec = eigenvalue_present(scan, a, present_ratio, absent_ratio, floor)
            candidates[lab[0]] = dec
    detected = [n for n, dec in sorted(candidates.items()) if dec.decision == "present"]
    return {
        "model": scan.model_label,
        "detected_n": detected[0] if detected else None,
        "ratios": {n: dec.ratio for n, dec in sorted(candidates.items())},
        "decisions": {n: dec.decision for n, dec in sorted(candidates.items())},
        "control_median": scan.control_median(),
        "alpha_unit": 1.0 / logb,
    }
