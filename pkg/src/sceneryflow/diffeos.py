"""Monotone differentiable map specifications.

Maps are affine, polynomial (restricted to a validity interval on which
they are strictly monotone), or compositions. Each spec evaluates the map,
its derivative, and its inverse; polynomial inverses use a bracketed
Newton iteration driven to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DERIV_MIN = 1e-6
DERIV_MAX = 1e6
_CHECK_GRID = 4096


@dataclass(frozen=True)
class DiffeoSpec:
    """A strictly monotone C^1 map on a validity interval."""

    kind: str  # "affine" | "polynomial" | "composition"
    coeffs: tuple = ()  # affine: (u, v) for u*x + v; polynomial: ascending
    domain: tuple = (0.0, 1.0)
    parts: tuple = ()  # composition: applied left to right

    def __post_init__(self):
        lo, hi = self.domain
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise DomainError("invalid validity interval")
        if self.kind == "affine":
            u, v = self.coeffs
            if u == 0 or not np.isfinite(u) or not np.isfinite(v):
                raise DomainError("affine map needs a nonzero finite slope")
            if not (DERIV_MIN <= abs(u) <= DERIV_MAX):
                raise DomainError("affine slope outside admissible derivative range")
        elif self.kind == "polynomial":
            c = np.asarray(self.coeffs, dtype=np.float64)
            if c.size < 2 or not np.all(np.isfinite(c)):
                raise DomainError("polynomial needs finite coefficients, degree >= 1")
            x = np.linspace(lo, hi, _CHECK_GRID)
            y = _polyval(c, x)
            if not (np.all(np.diff(y) > 0) or np.all(np.diff(y) < 0)):
                raise DomainError("polynomial is not strictly monotone on its interval")
            interior = x[1:-1]
            dy = np.abs(_polyval(_polyder(c), interior))
            if dy.min() < DERIV_MIN or dy.max() > DERIV_MAX:
                raise DomainError("polynomial derivative outside [1e-6, 1e6] on interval")
        elif self.kind == "composition":
            if len(self.parts) < 1:
                raise DomainError("empty composition")
        else:
            raise DomainError(f"unknown diffeo kind {self.kind!r}")

    # -- constructors --------------------------------------------------------
    @classmethod
    def affine(cls, u: float, v: float = 0.0, domain=(0.0, 1.0)) -> "DiffeoSpec":
        return cls("affine", (float(u), float(v)), tuple(map(float, domain)))

    @classmethod
    def identity(cls, domain=(0.0, 1.0)) -> "DiffeoSpec":
        return cls.affine(1.0, 0.0, domain)

    @classmethod
    def polynomial(cls, coeffs, domain=(0.0, 1.0)) -> "DiffeoSpec":
        return cls("polynomial", tuple(map(float, coeffs)), tuple(map(float, domain)))

    @classmethod
    def compose(cls, parts) -> "DiffeoSpec":
        parts = tuple(parts)
        return cls("composition", (), parts[0].domain, parts)

    # -- evaluation ------------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "affine":
            u, v = self.coeffs
            return u * x + v
        if self.kind == "polynomial":
            return _polyval(np.asarray(self.coeffs), x)
        y = x
        for p in self.parts:
            y = p(y)
        return y

    def deriv(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "affine":
            return np.full_like(x, self.coeffs[0])
        if self.kind == "polynomial":
            return _polyval(_polyder(np.asarray(self.coeffs)), x)
        d = np.ones_like(x)
        y = x
        for p in self.parts:
            d = d * p.deriv(y)
            y = p(y)
        return d

    @property
    def increasing(self) -> bool:
        lo, hi = self.domain
        return bool(self(hi) > self(lo))

    def inverse(self, y):
        """Preimage of y, clamped to the validity interval."""
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "affine":
            u, v = self.coeffs
            return (y - v) / u
        if self.kind == "composition":
            x = y
            for p in reversed(self.parts):
                x = p.inverse(x)
            return x
        lo, hi = self.domain
        f_lo, f_hi = float(self(lo)), float(self(hi))
        if f_lo > f_hi:
            f_lo, f_hi = f_hi, f_lo
        yc = np.clip(y, f_lo, f_hi)
        a = np.full(yc.shape, float(lo))
        b = np.full(yc.shape, float(hi))
        x = 0.5 * (a + b)
        c = np.asarray(self.coeffs)
        dc = _polyder(c)
        sign = 1.0 if self.increasing else -1.0
        for _ in range(80):
            fx = _polyval(c, x)
            too_low = sign * (fx - yc) < 0
            a = np.where(too_low, x, a)
            b = np.where(too_low, b, x)
            dfx = _polyval(dc, x)
            step = np.where(np.abs(dfx) > 1e-300, (fx - yc) / dfx, 0.0)
            xn = x - step
            bad = (xn < a) | (xn > b) | ~np.isfinite(xn)
            x = np.where(bad, 0.5 * (a + b), xn)
        return x if y.shape else float(x)

    def log_deriv(self, x):
        d = self.deriv(x)
        if np.any(d <= 0):
            raise DomainError("log-derivative of a non-increasing map")
        return np.log(d)

    def rel_inverse(self, x: float, delta):
        """Solve f(x + rho) - f(x) = delta for rho, stably in rho.

        Uses the factorization f(x + rho) - f(x) = rho * G(rho) with G built
        from the difference-quotient expansion, so deltas far below float
        resolution of x are handled without cancellation.
        """
        delta = np.asarray(delta, dtype=np.float64)
        if self.kind == "affine":
            return delta / self.coeffs[0]
        if self.kind == "composition":
            y = delta
            anchors = [float(x)]
            for p in self.parts[:-1]:
                anchors.append(float(p(anchors[-1])))
            rho = y
            for p, a in zip(reversed(self.parts), reversed(anchors)):
                rho = p.rel_inverse(a, rho)
            return rho
        c = np.asarray(self.coeffs, dtype=np.float64)
        rho = delta / float(self.deriv(x))
        for _ in range(8):
            g = _difference_quotient(c, x, rho)
            gp = _difference_quotient_deriv(c, x, rho)
            h = rho * g - delta
            hp = g + rho * gp
            step = np.where(np.abs(hp) > 1e-300, h / hp, 0.0)
            rho = rho - step
        return rho


def _difference_quotient(c, x, rho):
    """G with f(x + rho) - f(x) = rho * G(rho), via the telescoped expansion
    (x+rho)^m - x^m = rho * sum of (x+rho)^l * x^(m-1-l)."""
    xr = x + rho
    g = np.zeros_like(np.asarray(rho, dtype=np.float64))
    for m in range(1, len(c)):
        if c[m] == 0.0:
            continue
        s = np.zeros_like(g)
        for l in range(m):
            s = s + xr**l * x ** (m - 1 - l)
        g = g + c[m] * s
    return g


def _difference_quotient_deriv(c, x, rho):
    xr = x + rho
    g = np.zeros_like(np.asarray(rho, dtype=np.float64))
    for m in range(2, len(c)):
        if c[m] == 0.0:
            continue
        s = np.zeros_like(g)
        for l in range(1, m):
            s = s + l * xr ** (l - 1) * x ** (m - 1 - l)
        g = g + c[m] * s
    return g


def _polyval(c, x):
    y = np.zeros_like(np.asarray(x, dtype=np.float64))
    for a in c[::-1]:
        y = y * x + a
    return y


def _polyder(c):
    c = np.asarray(c, dtype=np.float64)
    if c.size <= 1:
        return np.zeros(1)
    return c[1:] * np.arange(1, c.size)


# fixed non-affine maps shipped with the experiments
def gentle_quadratic(domain=(0.0, 1.0)) -> DiffeoSpec:
    """x + x^2/10: slope drifts from 1 to 1.2 across [0, 1]."""
    return DiffeoSpec.polynomial((0.0, 1.0, 0.1), domain)


def gentle_cubic(domain=(0.0, 1.0)) -> DiffeoSpec:
    """0.9x + 0.2x^2 - 0.05x^3: strictly increasing on [0, 1]."""
    return DiffeoSpec.polynomial((0.0, 0.9, 0.2, -0.05), domain)
