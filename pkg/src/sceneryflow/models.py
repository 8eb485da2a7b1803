"""Measures on [0, 1] defined by digit statistics.

A :class:`DigitModel` fixes a base ``b`` and the law of the base-b digit
sequence: i.i.d. digits (Bernoulli), a stationary order-1 Markov chain, or
Lebesgue (uniform digits). Stationarity of the digit law makes the coded
measure invariant under ``x -> b*x mod 1``. The module answers exact
cylinder and interval mass queries, entropy/dimension queries, and
invariance diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import DomainError

MAX_DEPTH_DEFAULT = 60

BERNOULLI = "bernoulli"
MARKOV = "markov"


def _as_fraction(value):
    """Exact rational from int/str/Fraction inputs, None otherwise."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return None


def _parse_weights(values):
    """Return (float array, tuple of Fractions or None)."""
    fracs = []
    floats = []
    exact = True
    for v in values:
        f = _as_fraction(v)
        if f is None:
            exact = False
            floats.append(float(v))
        else:
            fracs.append(f)
            floats.append(float(f))
    arr = np.asarray(floats, dtype=np.float64)
    return arr, (tuple(fracs) if exact else None)


@dataclass(frozen=True)
class Word:
    """A finite digit string over {0, ..., base-1}."""

    digits: tuple
    base: int

    def __post_init__(self):
        if self.base < 2:
            raise DomainError("base must be >= 2")
        for d in self.digits:
            if not (0 <= int(d) < self.base):
                raise DomainError(f"digit {d} out of range for base {self.base}")
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))

    def __len__(self):
        return len(self.digits)

    @classmethod
    def from_string(cls, text: str, base: int) -> "Word":
        return cls(tuple(int(c) for c in text), base)


@dataclass(frozen=True)
class DigitModel:
    """A digit-stationary measure on [0, 1].

    ``weights`` is the first-digit law; ``transition`` the next-digit law
    given the previous digit (for Bernoulli both are the same row repeated).
    Exact rational copies of the parameters are kept when the model was
    built from rationals, enabling exact-arithmetic acceptance checks.
    """

    base: int
    kind: str
    weights: np.ndarray
    transition: np.ndarray
    label: str = ""
    exact_weights: tuple | None = field(default=None, compare=False)
    exact_transition: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        b = self.base
        if not (2 <= b <= 2048):
            raise DomainError("base must be in [2, 2048]")
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        P = np.ascontiguousarray(self.transition, dtype=np.float64)
        if w.shape != (b,) or P.shape != (b, b):
            raise DomainError("weight/transition shapes do not match base")
        if np.any(w < 0) or np.any(P < 0):
            raise DomainError("negative digit weight")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("first-digit weights must sum to 1 within 1e-12")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise DomainError("each transition row must sum to 1 within 1e-12")
        if self.kind == MARKOV:
            defect = np.max(np.abs(w @ P - w))
            if defect > 1e-12:
                raise DomainError(
                    f"start distribution is not stationary (defect {defect:.2e})"
                )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "transition", P)
        # kernel-ready rows: states 0..b-1 are next-digit laws, state b the
        # unconditioned first-digit law; cum rows hold exclusive prefix sums
        rows = np.vstack([P, w[None, :]])
        cum = np.cumsum(rows, axis=1)
        rows_cum = np.concatenate([np.zeros((b + 1, 1)), cum[:, :-1]], axis=1)
        object.__setattr__(self, "_rows_w", np.ascontiguousarray(rows.reshape(-1)))
        object.__setattr__(self, "_rows_cum", np.ascontiguousarray(rows_cum.reshape(-1)))

    # -- constructors ---------------------------------------------------
    @classmethod
    def bernoulli(cls, weights, label: str = "") -> "DigitModel":
        w, fracs = _parse_weights(weights)
        b = len(w)
        P = np.tile(w, (b, 1))
        exact_P = tuple(fracs for _ in range(b)) if fracs is not None else None
        return cls(b, BERNOULLI, w, P, label or f"bernoulli-b{b}", fracs, exact_P)

    @classmethod
    def lebesgue(cls, base: int, label: str = "") -> "DigitModel":
        w = tuple(Fraction(1, base) for _ in range(base))
        model = cls.bernoulli(w, label or f"lebesgue-b{base}")
        return model

    @classmethod
    def markov(cls, stationary, transition, label: str = "") -> "DigitModel":
        pi, pi_fracs = _parse_weights(stationary)
        rows = [_parse_weights(row) for row in transition]
        P = np.asarray([r[0] for r in rows], dtype=np.float64)
        exact_P = tuple(r[1] for r in rows)
        if any(r is None for r in exact_P):
            exact_P = None
        b = len(pi)
        return cls(b, MARKOV, pi, P, label or f"markov-b{b}", pi_fracs, exact_P)

    @classmethod
    def markov_from_transition(cls, transition, label: str = "") -> "DigitModel":
        """Markov model with the stationary distribution solved from P."""
        P = np.asarray(transition, dtype=np.float64)
        vals, vecs = np.linalg.eig(P.T)
        i = int(np.argmin(np.abs(vals - 1.0)))
        pi = np.real(vecs[:, i])
        pi = pi / pi.sum()
        pi = np.abs(pi)
        pi = pi / pi.sum()
        return cls(len(pi), MARKOV, pi, P, label or f"markov-b{len(pi)}")

    # -- structural flags ------------------------------------------------
    @property
    def is_bernoulli(self) -> bool:
        return self.kind == BERNOULLI

    @property
    def is_atomic(self) -> bool:
        """True when some digit ray carries mass bounded away from zero.

        That happens exactly when a reachable state enters a cycle whose
        transition probabilities are all 1.
        """
        b = self.base
        forced = np.full(b, -1, dtype=np.int64)
        for s in range(b):
            hits = np.nonzero(self.transition[s] >= 1.0 - 1e-15)[0]
            if hits.size == 1:
                forced[s] = hits[0]
        reachable = np.nonzero(self.weights > 0)[0].tolist()
        seen_from = set()
        for s0 in reachable:
            s, path = s0, set()
            while s not in seen_from:
                if forced[s] < 0:
                    break
                if s in path:
                    return True
                path.add(s)
                s = forced[s]
            seen_from.update(path)
        return False

    @property
    def has_exact_params(self) -> bool:
        return self.exact_weights is not None and self.exact_transition is not None

    # -- entropy and dimension -------------------------------------------
    def entropy(self) -> float:
        """Shannon entropy of the digit process, in nats per digit."""
        P = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(P > 0, np.log(P), 0.0)
        row_h = -(P * logs).sum(axis=1)
        return float(np.dot(self.weights, row_h))

    def dimension(self) -> float:
        return self.entropy() / np.log(self.base)

    @property
    def is_intermediate(self) -> bool:
        """0 < dimension < 1: neither atomic-deterministic nor full."""
        d = self.dimension()
        return 1e-12 < d < 1.0 - 1e-12

    def require_nonatomic(self):
        if self.is_atomic or self.entropy() <= 1e-12:
            raise DomainError(
                f"model {self.label!r} is atomic/deterministic; "
                "zoom-in operations are undefined for it"
            )

    # -- mass queries ------------------------------------------------------
    def cylinder_mass(self, word, exact: bool = False):
        """Mass of the cylinder of points whose expansion starts with `word`."""
        if isinstance(word, str):
            word = Word.from_string(word, self.base)
        if word.base != self.base:
            raise DomainError("word base does not match model base")
        if exact:
            if not self.has_exact_params:
                raise DomainError("model was not built from exact rationals")
            mass = Fraction(1)
            prev = None
            for d in word.digits:
                mass *= self.exact_weights[d] if prev is None else self.exact_transition[prev][d]
                prev = d
            return mass
        mass = 1.0
        prev = None
        for d in word.digits:
            mass *= self.weights[d] if prev is None else self.transition[prev, d]
            prev = d
        return float(mass)

    @property
    def start_row(self) -> int:
        """Kernel row index of the unconditioned first-digit law."""
        return self.base

    def cdf(self, x, depth: int = MAX_DEPTH_DEFAULT, start_state=None):
        """Mass of [0, x) (vectorized), with a per-query tail bound.

        ``start_state`` switches the first-digit law to the transition row
        of that digit (the conditional future law of the chain); it may be
        a scalar or a per-query array. None means the stationary law.
        """
        if start_state is None:
            s0 = np.uint64(self.base)
        elif np.ndim(start_state) == 0:
            s0 = np.uint64(int(start_state))
        else:
            s0 = np.asarray(start_state, dtype=np.uint64)
        return kernels.cdf_walk_points(
            x, self.base, self._rows_w, self._rows_cum, s0, depth
        )

    def interval_mass(self, lo: float, hi: float, depth: int = MAX_DEPTH_DEFAULT):
        """Mass of [lo, hi] with an error bound.

        The digit walk of each endpoint sums the masses of the maximal
        base-b cells between the endpoints, resolving the two boundary
        cells to ``depth``; the returned error bound is the total mass of
        those two unresolved boundary cells.
        """
        if not (0.0 <= lo <= hi <= 1.0):
            raise DomainError("need 0 <= lo <= hi <= 1")
        if depth > 4 * MAX_DEPTH_DEFAULT:
            raise DomainError("depth beyond supported resolution")
        F, tail = self.cdf(np.asarray([lo, hi]), depth=depth)
        mass = float(F[1] - F[0])
        err = float(tail[0] + tail[1])
        return mass, err

    def grid_cdf(self, points, depth: int = MAX_DEPTH_DEFAULT, start_state=None):
        """CDF values only (convenience for mass-array construction)."""
        F, _ = self.cdf(points, depth=depth, start_state=start_state)
        return F

    # -- invariance diagnostics --------------------------------------------
    def _level_masses(self, depth: int):
        """Masses of all words of length `depth`, lexicographic order."""
        b = self.base
        m = self.weights.copy()
        for _ in range(1, depth):
            rows = np.tile(self.transition, (len(m) // b, 1))
            m = (m[:, None] * rows).reshape(-1)
        return m

    def additivity_defect(self, depth: int) -> float:
        """max over words of |sum of child masses - word mass|, lengths <= depth."""
        worst = 0.0
        for L in range(1, depth + 1):
            m = self._level_masses(L)
            children = self._level_masses(L + 1).reshape(-1, self.base).sum(axis=1)
            worst = max(worst, float(np.max(np.abs(children - m))))
        return worst

    def invariance_defect(self, depth: int) -> float:
        """max over words of |mass of the b prepend-extensions - word mass|.

        The prepend sum is the mass of the preimage of the cylinder under
        x -> b*x mod 1, so this measures the invariance defect directly.
        """
        if depth < 1:
            raise DomainError("depth must be >= 1")
        worst = 0.0
        for L in range(1, depth + 1):
            m = self._level_masses(L)
            ext = self._level_masses(L + 1)
            pre = ext.reshape(self.base, -1).sum(axis=0)
            worst = max(worst, float(np.max(np.abs(pre - m))))
        return worst

    def _exact_level_numerators(self, depth: int):
        """Integer numerators of all depth-`depth` word masses over a common
        denominator, or None when int64 would overflow."""
        if not self.has_exact_params:
            return None
        den_w = int(np.lcm.reduce([f.denominator for f in self.exact_weights]))
        dens_P = [f.denominator for row in self.exact_transition for f in row]
        den_p = int(np.lcm.reduce(dens_P))
        wn = np.array([int(f * den_w) for f in self.exact_weights], dtype=np.int64)
        Pn = np.array(
            [[int(f * den_p) for f in row] for row in self.exact_transition], dtype=np.int64
        )
        bound = int(wn.max()) * (int(Pn.max()) ** max(depth - 1, 0))
        if bound >= 2**62:
            return None
        m = wn.copy()
        for _ in range(1, depth):
            rows = np.tile(Pn, (len(m) // self.base, 1))
            m = (m[:, None] * rows).reshape(-1)
        return m, den_w, den_p

    def additivity_defect_exact(self, depth: int):
        """Exact rational additivity defect (0 means exact additivity)."""
        worst = Fraction(0)
        for L in range(1, depth + 1):
            lev = self._exact_level_numerators(L)
            ext = self._exact_level_numerators(L + 1)
            if lev is None or ext is None:
                raise DomainError("exact mode unavailable (no rationals or overflow)")
            m, den_w, den_p = lev
            me, _, _ = ext
            children = me.reshape(-1, self.base).sum(axis=1)
            diff = np.abs(children - m * den_p)
            worst = max(worst, Fraction(int(diff.max()), den_w * den_p**L))
        return worst


def xi(digits, base: int) -> float:
    """Coded point of a digit string: sum of d_i * b**-i, i = 1..len.

    Summed from the least significant digit for a stable float result.
    """
    total = 0.0
    for d in reversed(np.asarray(digits, dtype=np.int64)):
        total = (total + float(d)) / base
    return total


def xi_k(digits, base: int, k: int) -> float:
    """Shifted coding map: sum of d_i * b**-i over i > k.

    ``digits`` lists d_{k+1}, d_{k+2}, ...; equals b**-k * xi(digits, base).
    """
    return float(base) ** (-k) * xi(digits, base)


def point_from_digits(digits, base: int, k: int = 0) -> float:
    """Coded point of a digit window (the k-shifted coding map)."""
    return xi_k(digits, base, k)


def reversed_transition(model: DigitModel) -> np.ndarray:
    """Transition matrix of the time-reversed stationary chain:
    Phat[i, j] = pi[j] * P[j, i] / pi[i]."""
    pi = model.weights
    if np.any(pi <= 0):
        keep = pi > 0
        Phat = np.zeros_like(model.transition)
        sub = pi[keep]
        M = model.transition[np.ix_(keep, keep)]
        Phat[np.ix_(keep, keep)] = M.T * sub[None, :] / sub[:, None]
        # rows of zero-mass states are unreachable; make them valid rows
        for s in np.nonzero(~keep)[0]:
            Phat[s, s] = 1.0
        return Phat
    return (model.transition * pi[:, None]).T / pi[:, None]


def sample_digits(model: DigitModel, n: int, rng, start_state: int | None = None,
                  transition: np.ndarray | None = None) -> np.ndarray:
    """Draw n digits from the model's chain (or a supplied transition)."""
    P = model.transition if transition is None else transition
    b = model.base
    out = np.empty(n, dtype=np.int64)
    u = rng.random(n)
    if model.is_bernoulli and transition is None and start_state is None:
        cum = np.cumsum(model.weights)
        return np.searchsorted(cum, u, side="right").astype(np.int64)
    cumP = np.cumsum(P, axis=1)
    if start_state is None:
        cum0 = np.cumsum(model.weights)
        state = int(np.searchsorted(cum0, u[0], side="right"))
        out[0] = state
        start = 1
    else:
        state = start_state
        start = 0
    for i in range(start, n):
        state = min(int(np.searchsorted(cumP[state], u[i], side="right")), b - 1)
        out[i] = state
    return out
