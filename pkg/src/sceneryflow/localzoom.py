"""Exact mass queries in coordinates relative to a digit-coded point.

Zooming to scale e**-t with t of several hundred cannot be done with
absolute float positions. Instead we consume the first j digits of the
point, so that the window lives inside the depth-j cylinder and its two
neighbors, and query the conditional digit chain there in coordinates
rescaled by b**j. The chain restarted from the last consumed digit is
exactly the conditional law of the model on that cylinder, so the masses
are exact up to the walk depth; neighbor cylinders enter with mass ratios
computed in log space along the (de/in)cremented digit word.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DomainError, InsufficientDigitsError, OutsideSupportError
from .models import MAX_DEPTH_DEFAULT, DigitModel

GUARD_DIGITS = 30


class PointContext:
    """Local mass oracle of a digit model around one coded point."""

    def __init__(self, model: DigitModel, digits, start_state: int | None = None,
                 walk_depth: int = MAX_DEPTH_DEFAULT):
        self.model = model
        self.walk_depth = walk_depth
        b = model.base
        d = np.asarray(digits, dtype=np.int64)
        if d.ndim != 1 or d.size == 0:
            raise DomainError("need a nonempty digit vector")
        if np.any((d < 0) | (d >= b)):
            raise DomainError("digit out of range")
        self.digits = d
        self.K = d.size
        self._b = b
        self._logb = np.log(b)
        s_start = model.start_row if start_state is None else int(start_state)
        self._s_start = s_start

        # row used when emitting digit i (1-based): the previous state
        prev = np.empty(self.K, dtype=np.int64)
        prev[0] = s_start
        prev[1:] = d[:-1]
        self._prev = prev

        rows = model._rows_w.reshape(b + 1, b)
        with np.errstate(divide="ignore"):
            logrows = np.log(rows)
        self._logrows = logrows
        step_logw = logrows[prev, d]
        self._logW = np.concatenate([[0.0], np.cumsum(step_logw)])
        dead = np.nonzero(np.isneginf(step_logw))[0]
        self._first_dead = int(dead[0]) + 1 if dead.size else self.K + 1

        # tail value after j digits: 0.d_{j+1} ... d_K in [0, 1]
        S = np.empty(self.K + 1, dtype=np.float64)
        S[self.K] = 0.0
        for i in range(self.K - 1, -1, -1):
            S[i] = (d[i] + S[i + 1]) / b
        self._S = S

        # most recent digit index (1-based) that can be decremented/incremented
        low = np.zeros(self.K + 1, dtype=np.int64)
        high = np.zeros(self.K + 1, dtype=np.int64)
        for i in range(1, self.K + 1):
            low[i] = i if d[i - 1] > 0 else low[i - 1]
            high[i] = i if d[i - 1] < b - 1 else high[i - 1]
        self._prev_lower = low
        self._prev_raise = high

    @property
    def x(self) -> float:
        """Coded point (float truncation of the digit ray)."""
        return float(self._S[0])

    # -- neighbor cylinders --------------------------------------------------
    def _neighbor(self, j, side: int):
        """Mass ratio (to the depth-j cylinder of the point) and restart state
        of the adjacent depth-j cylinder on the given side (-1 left, +1 right)."""
        j = np.asarray(j, dtype=np.int64)
        b = self._b
        idx = (self._prev_lower if side < 0 else self._prev_raise)[j]
        has = (idx > 0) & (j > 0)
        i = np.maximum(idx, 1)
        d_i = self.digits[i - 1]
        prev_state = self._prev[i - 1]
        d_new = d_i - 1 if side < 0 else d_i + 1
        d_new = np.clip(d_new, 0, b - 1)
        edge = b - 1 if side < 0 else 0
        step1 = self._logrows[prev_state, d_new]
        more = j > i
        run = np.maximum(j - i - 1, 0).astype(np.float64)
        with np.errstate(invalid="ignore"):
            extra = np.where(
                more, self._logrows[d_new, edge] + run * self._logrows[edge, edge], 0.0
            )
        logmass = self._logW[i - 1] + step1 + extra
        with np.errstate(invalid="ignore"):
            ratio = np.where(has, np.exp(logmass - self._logW[j]), 0.0)
        ratio = np.where(np.isfinite(ratio), ratio, 0.0)
        state = np.where(more, edge, d_new)
        return ratio, state.astype(np.int64)

    # -- main query ------------------------------------------------------------
    def cumulative_rel(self, offsets, j=None):
        """Cumulative window mass at point-relative positions.

        ``offsets`` has shape (n_frames, n_edges), each row increasing; M[f, e]
        is the mass of [x + offsets[f, 0], x + offsets[f, e]] divided by the
        mass of the depth-j(f) cylinder of the point, up to a per-frame
        additive constant (callers use within-frame differences only).
        """
        offsets = np.atleast_2d(np.asarray(offsets, dtype=np.float64))
        n_frames, n_edges = offsets.shape
        maxabs = np.max(np.abs(offsets), axis=1)
        if np.any(maxabs <= 0) or np.any(~np.isfinite(maxabs)):
            raise DomainError("offset rows must contain a nonzero finite offset")
        if j is None:
            j = np.floor(-np.log(maxabs) / self._logb - 1e-12).astype(np.int64)
            j = np.maximum(j, 0)
        else:
            j = np.broadcast_to(np.asarray(j, dtype=np.int64), (n_frames,)).copy()
            if np.any(np.power(float(self._b), j.astype(float)) * maxabs > 1.0 + 1e-9):
                raise DomainError("explicit cylinder depth too deep for the offsets")
        if np.any(j > self.K - GUARD_DIGITS):
            need = int(j.max()) + GUARD_DIGITS
            raise InsufficientDigitsError(
                f"zoom needs {need} digits, point carries {self.K}"
            )
        if np.any(j >= self._first_dead):
            raise OutsideSupportError("point leaves the support of the model")

        pw = np.power(float(self._b), j.astype(np.float64))
        p = self._S[j][:, None] + offsets * pw[:, None]
        deep = j >= 1
        if np.any(deep & ((p.min(axis=1) < -1.0 - 1e-6) | (p.max(axis=1) > 2.0 + 1e-6))):
            raise DomainError("offsets reach beyond the neighbor cylinders")
        p = np.clip(p, -1.0, 2.0)

        s_main = np.where(j == 0, self._s_start, self.digits[np.maximum(j, 1) - 1])

        q_main = np.clip(p, 0.0, 1.0)
        s0_main = np.repeat(s_main.astype(np.uint64), n_edges)

        sel_l = np.nonzero(p.min(axis=1) < 0.0)[0]
        sel_r = np.nonzero(p.max(axis=1) > 1.0)[0]
        ratio_l = state_l = ratio_r = state_r = None
        q_parts = [q_main.ravel()]
        s_parts = [s0_main]
        if sel_l.size:
            ratio_l, state_l = self._neighbor(j[sel_l], -1)
            q_parts.append(np.clip(p[sel_l] + 1.0, 0.0, 1.0).ravel())
            s_parts.append(np.repeat(state_l.astype(np.uint64), n_edges))
        if sel_r.size:
            ratio_r, state_r = self._neighbor(j[sel_r], +1)
            q_parts.append(np.clip(p[sel_r] - 1.0, 0.0, 1.0).ravel())
            s_parts.append(np.repeat(state_r.astype(np.uint64), n_edges))

        q = np.concatenate(q_parts)
        s0 = np.concatenate(s_parts)
        F, _ = kernels.cdf_walk_points(
            q, self._b, self.model._rows_w, self.model._rows_cum, s0, self.walk_depth
        )

        n_main = n_frames * n_edges
        M = F[:n_main].reshape(n_frames, n_edges).copy()
        pos = n_main
        if sel_l.size:
            FL = F[pos : pos + sel_l.size * n_edges].reshape(sel_l.size, n_edges)
            M[sel_l] += ratio_l[:, None] * FL
            pos += sel_l.size * n_edges
        if sel_r.size:
            FR = F[pos:].reshape(sel_r.size, n_edges)
            M[sel_r] += ratio_r[:, None] * FR
        return M

    def window_masses(self, offsets, j=None):
        """Per-frame cell masses over the offset partitions, normalized to
        unit mass per frame; raises if a frame window carries no mass."""
        M = self.cumulative_rel(offsets, j=j)
        cells = np.diff(M, axis=1)
        totals = M[:, -1] - M[:, 0]
        if np.any(totals <= 0):
            raise OutsideSupportError("zero-mass zoom window")
        return cells / totals[:, None]

    def log_ball_masses(self, radii):
        """log of the absolute masses of [x - r, x + r], one radius per row.

        Each radius zooms through its own cylinder depth, so the per-frame
        units are restored via the log prefix masses before taking logs.
        """
        r = np.asarray(radii, dtype=np.float64).reshape(-1, 1)
        offsets = np.concatenate([-r, r], axis=1)
        maxabs = r[:, 0]
        j = np.floor(-np.log(maxabs) / self._logb - 1e-12).astype(np.int64)
        j = np.maximum(j, 0)
        M = self.cumulative_rel(offsets, j=j)
        rel = M[:, 1] - M[:, 0]
        if np.any(rel <= 0):
            raise OutsideSupportError("zero-mass ball around the point")
        return np.log(rel) + self._logW[j]


def digits_of_float(x: float, base: int, n_digits: int) -> np.ndarray:
    """Exact base-b digit expansion of the 2**-52 quantization of x."""
    q = int(kernels.quantize(np.asarray([x]))[0])
    out = np.empty(n_digits, dtype=np.int64)
    one = 1 << kernels.FRAC_BITS
    for i in range(n_digits):
        q *= base
        out[i] = q >> kernels.FRAC_BITS
        q &= one - 1
    return out
