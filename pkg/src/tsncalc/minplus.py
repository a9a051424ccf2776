"""Exact min-plus curve algebra for worst-case traffic analysis.

Curves are non-decreasing functions of time, kept in a closed (symbolic)
representation and compiled on demand to an exact piecewise-linear form on
[0, horizon].  Jumps are first-class: every breakpoint carries the value at
the point and the right limit, and curves are left-continuous at jumps
(``Affine(b, r)`` is 0 at t = 0 and b + r*t for t > 0).

Units are microseconds for time and bits for data, so rates are bits/us
(numerically equal to Mb/s).

All operators (convolution, deconvolution, min, sum, horizontal/vertical
deviation, non-negative and non-decreasing closures) are computed exactly at
curve breakpoints; nothing is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DivergenceError, HorizonExceededError, InstabilityError

#: Absolute comparison tolerance in internal units (us, bits).
TOLERANCE = 1e-9

INF = float("inf")


# ---------------------------------------------------------------------------
# Piecewise-linear backing store
# ---------------------------------------------------------------------------

class Segments:
    """Exact piecewise-linear function on [0, horizon] with up/down jumps.

    ``t`` are strictly increasing breakpoints with t[0] == 0.  For each k,
    ``at[k]`` is f(t[k]), ``right[k]`` is f(t[k]+) and ``slope[k]`` applies on
    (t[k], t[k+1]); the last slope extends to the horizon.  ``inf`` values are
    permitted (burst-delay curves) and always ride on zero slopes.
    """

    __slots__ = ("t", "at", "right", "slope", "horizon")

    def __init__(self, t, at, right, slope, horizon):
        self.t = np.asarray(t, dtype=float)
        self.at = np.asarray(at, dtype=float)
        self.right = np.asarray(right, dtype=float)
        self.slope = np.asarray(slope, dtype=float)
        self.horizon = float(horizon)
        if self.t[0] != 0.0:
            raise ValueError("segments must start at t = 0")

    def __len__(self):
        return len(self.t)

    def left_values(self) -> np.ndarray:
        """Left limits at each breakpoint; left[0] is defined as at[0]."""
        left = np.empty_like(self.at)
        left[0] = self.at[0]
        if len(self.t) > 1:
            dt = self.t[1:] - self.t[:-1]
            left[1:] = self.right[:-1] + self.slope[:-1] * dt
        return left

    def end_left(self) -> np.ndarray:
        """Left limit at the end of each segment (horizon for the last)."""
        ends = np.append(self.t[1:], self.horizon)
        return self.right + self.slope * (ends - self.t)

    def _locate(self, ts: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, len(self.t) - 1)

    def value_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        k = self._locate(ts)
        on_point = ts == self.t[k]
        interior = self.right[k] + self.slope[k] * (ts - self.t[k])
        return np.where(on_point, self.at[k], interior)

    def right_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        k = self._locate(ts)
        on_point = ts == self.t[k]
        interior = self.right[k] + self.slope[k] * (ts - self.t[k])
        return np.where(on_point, self.right[k], interior)

    def left_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        k = self._locate(ts)
        on_point = ts == self.t[k]
        interior = self.right[k] + self.slope[k] * (ts - self.t[k])
        return np.where(on_point, self.left_values()[k], interior)

    def value(self, t: float) -> float:
        return float(self.value_many(np.array([t]))[0])

    def is_nondecreasing(self, tol: float | None = None) -> bool:
        if tol is None:
            finite = self.right[np.isfinite(self.right)]
            scale = float(np.max(np.abs(finite), initial=1.0))
            tol = max(TOLERANCE, 1e-12 * scale)
        left = self.left_values()
        if np.any(self.right - self.at < -tol) or np.any(self.at - left < -tol):
            return False
        return bool(np.all(self.slope[np.isfinite(self.right)] >= -tol))

    def restrict(self, horizon: float) -> "Segments":
        if horizon >= self.horizon:
            return self
        keep = self.t <= horizon
        return Segments(self.t[keep], self.at[keep], self.right[keep], self.slope[keep], horizon)

    def compress(self, tol: float = 1e-12) -> "Segments":
        """Drop breakpoints that carry neither a jump nor a slope change."""
        n = len(self.t)
        if n <= 1:
            return self
        left = self.left_values()
        keep = np.ones(n, dtype=bool)
        finite = np.isfinite(self.at) & np.isfinite(self.right) & np.isfinite(left)
        no_jump = (np.abs(self.at - left) <= tol) & (np.abs(self.right - self.at) <= tol)
        same_slope = np.empty(n, dtype=bool)
        same_slope[0] = False
        same_slope[1:] = np.abs(self.slope[1:] - self.slope[:-1]) <= tol
        keep[1:] = ~(finite[1:] & no_jump[1:] & same_slope[1:])
        keep[0] = True
        return Segments(self.t[keep], self.at[keep], self.right[keep], self.slope[keep], self.horizon)


def _zero_segments(horizon: float) -> Segments:
    return Segments([0.0], [0.0], [0.0], [0.0], horizon)


def _resample(seg: Segments, grid: np.ndarray):
    """(at, right, slope) of ``seg`` on a grid containing seg's breakpoints or
    points strictly between them."""
    k = seg._locate(grid)
    on_point = grid == seg.t[k]
    interior = seg.right[k] + seg.slope[k] * (grid - seg.t[k])
    at = np.where(on_point, seg.at[k], interior)
    right = np.where(on_point, seg.right[k], interior)
    return at, right, seg.slope[k]


def _combine(a: Segments, b: Segments, op: str) -> Segments:
    """Pointwise add/sub/min/max of two segment functions, exactly."""
    horizon = min(a.horizon, b.horizon)
    a = a.restrict(horizon)
    b = b.restrict(horizon)
    grid = np.unique(np.concatenate([a.t, b.t]))

    if op in ("min", "max"):
        # Locate sign changes of (a - b) strictly inside intervals.
        ra = _resample(a, grid)
        rb = _resample(b, grid)
        ends = np.append(grid[1:], horizon)
        dt = ends - grid
        d0 = ra[1] - rb[1]
        d1 = (ra[1] + ra[2] * dt) - (rb[1] + rb[2] * dt)
        cross = np.isfinite(d0) & np.isfinite(d1) & (d0 * d1 < 0.0)
        if np.any(cross):
            frac = d0[cross] / (d0[cross] - d1[cross])
            extra = grid[cross] + frac * dt[cross]
            grid = np.unique(np.concatenate([grid, extra]))

    a_at, a_right, a_slope = _resample(a, grid)
    b_at, b_right, b_slope = _resample(b, grid)

    if op == "add":
        return Segments(grid, a_at + b_at, a_right + b_right, a_slope + b_slope, horizon)
    if op == "sub":
        return Segments(grid, a_at - b_at, a_right - b_right, a_slope - b_slope, horizon)

    fn = np.minimum if op == "min" else np.maximum
    ends = np.append(grid[1:], horizon)
    half = np.where(ends > grid, (ends - grid) * 0.5, 0.0)
    a_mid = a_right + a_slope * half
    b_mid = b_right + b_slope * half
    if op == "min":
        pick_a = a_mid <= b_mid
    else:
        pick_a = a_mid >= b_mid
    slope = np.where(pick_a, a_slope, b_slope)
    return Segments(grid, fn(a_at, b_at), fn(a_right, b_right), slope, horizon)


def _scale_segments(seg: Segments, factor: float) -> Segments:
    if not np.all(np.isfinite(seg.right)) and factor < 0:
        raise ValueError("cannot negate a curve with infinite values")
    return Segments(seg.t, seg.at * factor, seg.right * factor, seg.slope * factor, seg.horizon)


def _pos_part_segments(seg: Segments) -> Segments:
    return _combine(seg, _zero_segments(seg.horizon), "max")


def _up_closure_segments(seg: Segments) -> Segments:
    """Running maximum with zero: t -> max(0, sup_{0<=s<=t} f(s))."""
    ts, ats, rights, slopes = [], [], [], []
    n = len(seg.t)
    run = max(0.0, seg.at[0])

    def emit(t, at, right, slope):
        ts.append(t)
        ats.append(at)
        rights.append(right)
        slopes.append(slope)

    for k in range(n):
        t0 = seg.t[k]
        t1 = seg.t[k + 1] if k + 1 < n else seg.horizon
        at_k = max(run, seg.at[k])
        right_k = max(at_k, seg.right[k])
        f_start = seg.right[k]
        slope_k = seg.slope[k]
        if not math.isfinite(f_start):
            emit(t0, at_k, INF, 0.0)
            run = INF
            continue
        if f_start >= right_k - 0.0 and slope_k > 0.0:
            # f is (weakly) the running max and rising: follow it.
            emit(t0, at_k, right_k, slope_k)
            run = right_k + slope_k * (t1 - t0)
        elif slope_k > 0.0:
            f_end = f_start + slope_k * (t1 - t0)
            if f_end > right_k:
                # flat until f re-reaches the running max, then follow f
                emit(t0, at_k, right_k, 0.0)
                t_cross = t0 + (right_k - f_start) / slope_k
                if t_cross > t0 and t_cross < t1:
                    emit(t_cross, right_k, right_k, slope_k)
                    run = right_k + slope_k * (t1 - t_cross)
                else:
                    run = max(right_k, f_end)
            else:
                emit(t0, at_k, right_k, 0.0)
                run = right_k
        else:
            emit(t0, at_k, right_k, 0.0)
            run = right_k
    return Segments(np.array(ts), np.array(ats), np.array(rights), np.array(slopes), seg.horizon)


def _shift_left_segments(seg: Segments, delay: float) -> Segments:
    """f(t + delay) on [0, horizon - delay]; the shifted-curve deconvolution."""
    if delay < 0:
        raise ValueError("delay must be >= 0")
    if delay == 0:
        return seg
    horizon = seg.horizon - delay
    if horizon <= 0:
        raise HorizonExceededError(f"shift by {delay} exceeds horizon {seg.horizon}")
    k0 = int(np.searchsorted(seg.t, delay, side="right") - 1)
    if seg.t[k0] == delay:
        at0, right0, slope0 = seg.at[k0], seg.right[k0], seg.slope[k0]
    else:
        v = seg.right[k0] + seg.slope[k0] * (delay - seg.t[k0])
        at0, right0, slope0 = v, v, seg.slope[k0]
    later = seg.t > delay
    t = np.concatenate([[0.0], seg.t[later] - delay])
    at = np.concatenate([[at0], seg.at[later]])
    right = np.concatenate([[right0], seg.right[later]])
    slope = np.concatenate([[slope0], seg.slope[later]])
    keep = t <= horizon
    return Segments(t[keep], at[keep], right[keep], slope[keep], horizon)


# ---------------------------------------------------------------------------
# Pseudo-inverses and deviations
# ---------------------------------------------------------------------------

def _pinv(seg: Segments, levels: np.ndarray, strict: bool) -> np.ndarray:
    """First time f reaches (strict: exceeds) each level; inf if not on [0, H].

    Requires a non-decreasing function.
    """
    end_left = seg.end_left()
    reach = np.maximum.accumulate(np.maximum(end_left, np.maximum(seg.at, seg.right)))
    side = "right" if strict else "left"
    k = np.searchsorted(reach, levels, side=side)
    out = np.full(levels.shape, INF)
    ok = k < len(seg.t)
    if not np.any(ok):
        return out
    ki = k[ok]
    y = levels[ok]
    t_k, at_k, right_k, slope_k = seg.t[ki], seg.at[ki], seg.right[ki], seg.slope[ki]
    if strict:
        hit_at = at_k > y
        hit_jump = right_k > y
    else:
        hit_at = at_k >= y
        hit_jump = right_k >= y
    with np.errstate(divide="ignore", invalid="ignore"):
        ramp = t_k + (y - right_k) / slope_k
    res = np.where(hit_at, t_k, np.where(hit_jump, t_k, ramp))
    out[ok] = res
    return out


@dataclass(frozen=True)
class Deviation:
    """Maximum horizontal/vertical deviation between two curves with witnesses."""

    horizontal: float
    vertical: float
    argmax_h: float
    argmax_v: float

    @property
    def argmax_t(self) -> float:
        return self.argmax_h


def _check_rates(alpha: "Curve", beta: "Curve") -> None:
    ra = alpha.long_term_rate()
    rb = beta.long_term_rate()
    if ra > rb + max(TOLERANCE, 1e-9 * abs(rb)):
        raise InstabilityError(
            f"arrival rate {ra:.6g} bits/us exceeds service rate {rb:.6g} bits/us"
        )


def _hdev_segments(a: Segments, b: Segments):
    levels = np.concatenate([a.at, a.right, a.end_left(), b.at, b.right, b.end_left()])
    levels = levels[np.isfinite(levels)]
    a_sup = max(np.max(a.at), np.max(a.right), np.max(a.end_left()[np.isfinite(a.end_left())], initial=0.0))
    levels = np.unique(np.clip(levels, 0.0, a_sup))
    if len(levels) == 0:
        return 0.0, 0.0
    ta = _pinv(a, levels, strict=False)
    tb = _pinv(b, levels, strict=False)
    ta_plus = _pinv(a, levels, strict=True)
    tb_plus = _pinv(b, levels, strict=True)
    # g(y) and its right limit in y; unreachable beta levels mean a too-short horizon
    if np.any(np.isinf(tb[np.isfinite(ta)])):
        raise HorizonExceededError("service curve does not reach an arrival level within the horizon")
    g = tb - ta
    with np.errstate(invalid="ignore"):
        g_plus = tb_plus - ta_plus
    g_plus[~np.isfinite(g_plus)] = -INF
    g[~np.isfinite(g)] = -INF
    all_g = np.concatenate([g, g_plus])
    i = int(np.argmax(all_g))
    best = max(0.0, float(all_g[i]))
    if i < len(levels):
        witness = ta[i]
    else:
        witness = ta_plus[i - len(levels)]
    if not np.isfinite(witness):
        witness = 0.0
    return best, float(witness)


def _vdev_segments(a: Segments, b: Segments):
    horizon = min(a.horizon, b.horizon)
    a = a.restrict(horizon)
    b = b.restrict(horizon)
    grid = np.unique(np.concatenate([a.t, b.t]))
    a_at, a_right, a_slope = _resample(a, grid)
    b_at, b_right, b_slope = _resample(b, grid)
    ends = np.append(grid[1:], horizon)
    with np.errstate(invalid="ignore"):
        d_at = a_at - b_at
        d_right = a_right - b_right
        d_end = (a_right + a_slope * (ends - grid)) - (b_right + b_slope * (ends - grid))
    for d in (d_at, d_right, d_end):
        d[~np.isfinite(d)] = -INF
    stack = np.stack([d_at, d_right, d_end])
    flat = int(np.argmax(stack))
    best = max(0.0, float(stack.flat[flat]))
    which, idx = divmod(flat, len(grid))
    witness = float(grid[idx] if which < 2 else ends[idx])
    return best, witness


# ---------------------------------------------------------------------------
# Curve nodes
# ---------------------------------------------------------------------------

class Curve:
    """A non-decreasing function on [0, horizon] in closed representation."""

    __slots__ = ("horizon", "_segments")

    def __init__(self, horizon: float):
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        self.horizon = float(horizon)
        self._segments = None

    @property
    def segments(self) -> Segments:
        if self._segments is None:
            self._segments = self._build()
        return self._segments

    def _build(self) -> Segments:
        raise NotImplementedError

    def long_term_rate(self) -> float:
        raise NotImplementedError

    def evaluate(self, t: float) -> float:
        if t < 0:
            return 0.0
        if t > self.horizon + TOLERANCE:
            raise HorizonExceededError(f"t={t} exceeds curve horizon {self.horizon}")
        return self.segments.value(min(t, self.horizon))

    def __repr__(self):
        return f"<{type(self).__name__} horizon={self.horizon:g}>"


class Affine(Curve):
    """Token bucket: 0 at t = 0, burst + rate*t for t > 0.

    Negative bursts are tolerated so that service-curve expressions can embed
    constant offsets; arrival curves always use burst >= 0.
    """

    __slots__ = ("burst", "rate")

    def __init__(self, burst: float, rate: float, horizon: float):
        super().__init__(horizon)
        if rate < 0:
            raise ValueError("rate must be >= 0")
        self.burst = float(burst)
        self.rate = float(rate)

    def _build(self) -> Segments:
        return Segments([0.0], [0.0], [self.burst], [self.rate], self.horizon)

    def long_term_rate(self) -> float:
        return self.rate


class RateLatency(Curve):
    """rate * max(0, t - latency)."""

    __slots__ = ("rate", "latency")

    def __init__(self, rate: float, latency: float, horizon: float):
        super().__init__(horizon)
        if rate < 0 or latency < 0:
            raise ValueError("rate and latency must be >= 0")
        self.rate = float(rate)
        self.latency = float(latency)

    def _build(self) -> Segments:
        if self.latency == 0.0 or self.latency >= self.horizon:
            slope = self.rate if self.latency == 0.0 else 0.0
            return Segments([0.0], [0.0], [0.0], [slope], self.horizon)
        return Segments([0.0, self.latency], [0.0, 0.0], [0.0, 0.0], [0.0, self.rate], self.horizon)

    def long_term_rate(self) -> float:
        return self.rate


class BurstDelay(Curve):
    """0 up to and including the delay, +inf after (delta_D)."""

    __slots__ = ("delay",)

    def __init__(self, delay: float, horizon: float):
        super().__init__(horizon)
        if delay < 0:
            raise ValueError("delay must be >= 0")
        self.delay = float(delay)

    def _build(self) -> Segments:
        if self.delay >= self.horizon:
            return _zero_segments(self.horizon)
        if self.delay == 0.0:
            return Segments([0.0], [0.0], [INF], [0.0], self.horizon)
        return Segments([0.0, self.delay], [0.0, 0.0], [0.0, INF], [0.0, 0.0], self.horizon)

    def long_term_rate(self) -> float:
        return INF


class Staircase(Curve):
    """Sum of periodic step terms height * ceil((t - offset)/period), each
    clamped below at zero; the shape of gate-window arrival envelopes."""

    __slots__ = ("terms",)

    def __init__(self, terms: Sequence[tuple], horizon: float):
        super().__init__(horizon)
        cleaned = []
        for height, offset, period in terms:
            if height < 0 or offset < -TOLERANCE or period <= 0:
                raise ValueError("staircase terms need height >= 0, offset >= 0, period > 0")
            cleaned.append((float(height), max(0.0, float(offset)), float(period)))
        self.terms = tuple(cleaned)

    def _build(self) -> Segments:
        jump_times, jump_heights = [], []
        for height, offset, period in self.terms:
            if height == 0.0 or offset > self.horizon:
                continue
            n = int(math.floor((self.horizon - offset) / period)) + 1
            jump_times.append(offset + period * np.arange(n))
            jump_heights.append(np.full(n, height))
        if not jump_times:
            return _zero_segments(self.horizon)
        raw_t = np.concatenate(jump_times)
        raw_h = np.concatenate(jump_heights)
        times, inverse = np.unique(raw_t, return_inverse=True)
        jumps = np.zeros(len(times))
        np.add.at(jumps, inverse, raw_h)
        if times[0] != 0.0:
            times = np.concatenate([[0.0], times])
            jumps = np.concatenate([[0.0], jumps])
        right = np.cumsum(jumps)
        at = right - jumps
        return Segments(times, at, right, np.zeros_like(times), self.horizon)

    def long_term_rate(self) -> float:
        return sum(h / p for h, _, p in self.terms)


class PiecewiseLinear(Curve):
    """Explicit breakpoints (t, value, right-slope); value holds at the point
    and the segment continues with the given slope until the next breakpoint."""

    __slots__ = ("breakpoints",)

    def __init__(self, breakpoints: Sequence[tuple], horizon: float):
        super().__init__(horizon)
        pts = [(float(t), float(v), float(s)) for t, v, s in breakpoints]
        if not pts:
            raise ValueError("need at least one breakpoint")
        ts = [p[0] for p in pts]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("breakpoints must be strictly increasing in t")
        if pts[0][0] > 0.0:
            pts.insert(0, (0.0, 0.0, 0.0))
        self.breakpoints = tuple(pts)

    def _build(self) -> Segments:
        t = np.array([p[0] for p in self.breakpoints])
        v = np.array([p[1] for p in self.breakpoints])
        s = np.array([p[2] for p in self.breakpoints])
        keep = t <= self.horizon
        return Segments(t[keep], v[keep], v[keep], s[keep], self.horizon)

    def long_term_rate(self) -> float:
        return self.breakpoints[-1][2]


def _common_horizon(curves: Sequence[Curve]) -> float:
    return min(c.horizon for c in curves)


class Min(Curve):
    __slots__ = ("curves",)

    def __init__(self, curves: Sequence[Curve]):
        curves = list(curves)
        if not curves:
            raise ValueError("min of an empty curve list")
        super().__init__(_common_horizon(curves))
        self.curves = tuple(curves)

    def _build(self) -> Segments:
        seg = self.curves[0].segments
        for c in self.curves[1:]:
            seg = _combine(seg, c.segments, "min")
        return seg.compress()

    def long_term_rate(self) -> float:
        return min(c.long_term_rate() for c in self.curves)


class Max(Curve):
    __slots__ = ("curves",)

    def __init__(self, curves: Sequence[Curve]):
        curves = list(curves)
        if not curves:
            raise ValueError("max of an empty curve list")
        super().__init__(_common_horizon(curves))
        self.curves = tuple(curves)

    def _build(self) -> Segments:
        seg = self.curves[0].segments
        for c in self.curves[1:]:
            seg = _combine(seg, c.segments, "max")
        return seg.compress()

    def long_term_rate(self) -> float:
        return max(c.long_term_rate() for c in self.curves)


class Sum(Curve):
    __slots__ = ("curves",)

    def __init__(self, curves: Sequence[Curve]):
        curves = list(curves)
        if not curves:
            raise ValueError("sum of an empty curve list")
        super().__init__(_common_horizon(curves))
        self.curves = tuple(curves)

    def _build(self) -> Segments:
        seg = self.curves[0].segments
        for c in self.curves[1:]:
            seg = _combine(seg, c.segments, "add")
        return seg.compress()

    def long_term_rate(self) -> float:
        return sum(c.long_term_rate() for c in self.curves)


class Scale(Curve):
    """Pointwise factor * f(t); negative factors build the subtracted terms of
    leftover-service expressions and must be closed afterwards."""

    __slots__ = ("factor", "curve")

    def __init__(self, factor: float, curve: Curve):
        super().__init__(curve.horizon)
        self.factor = float(factor)
        self.curve = curve

    def _build(self) -> Segments:
        return _scale_segments(self.curve.segments, self.factor)

    def long_term_rate(self) -> float:
        return self.factor * self.curve.long_term_rate()


class PosPart(Curve):
    """[f(t)]^+ = max(f(t), 0)."""

    __slots__ = ("curve",)

    def __init__(self, curve: Curve):
        super().__init__(curve.horizon)
        self.curve = curve

    def _build(self) -> Segments:
        return _pos_part_segments(self.curve.segments).compress()

    def long_term_rate(self) -> float:
        return max(0.0, self.curve.long_term_rate())


class UpClosure(Curve):
    """[f(t)]_up^+ = max(0, max_{0<=s<=t} f(s)): the non-decreasing closure."""

    __slots__ = ("curve",)

    def __init__(self, curve: Curve):
        super().__init__(curve.horizon)
        self.curve = curve

    def _build(self) -> Segments:
        return _up_closure_segments(self.curve.segments).compress()

    def long_term_rate(self) -> float:
        return max(0.0, self.curve.long_term_rate())


class _Computed(Curve):
    """Result of convolution/deconvolution, carried as explicit segments."""

    __slots__ = ("_rate",)

    def __init__(self, seg: Segments, rate: float):
        super().__init__(seg.horizon)
        self._segments = seg
        self._rate = rate

    def _build(self) -> Segments:
        return self._segments

    def long_term_rate(self) -> float:
        return self._rate


# ---------------------------------------------------------------------------
# Public operators
# ---------------------------------------------------------------------------

def evaluate(curve: Curve, t: float) -> float:
    """Value of a curve at time t (left-continuous at jumps)."""
    return curve.evaluate(t)


def min_of(curves: Iterable[Curve]) -> Curve:
    return Min(list(curves))


def max_of(curves: Iterable[Curve]) -> Curve:
    return Max(list(curves))


def sum_of(curves: Iterable[Curve]) -> Curve:
    return Sum(list(curves))


def scale(factor: float, curve: Curve) -> Curve:
    return Scale(factor, curve)


def pos_part(curve: Curve) -> Curve:
    return PosPart(curve)


def up_closure(curve: Curve) -> Curve:
    return UpClosure(curve)


def zero(horizon: float) -> Curve:
    return Affine(0.0, 0.0, horizon)


class _MinPlusOp(Curve):
    """Lazy convolution/deconvolution result: values are computed on demand,
    the full piecewise-linear form only when segments are requested."""

    __slots__ = ("_value_fn", "_cands", "_rate")

    def __init__(self, value_fn, cands: np.ndarray, horizon: float, rate: float):
        super().__init__(horizon)
        self._value_fn = value_fn
        self._cands = cands
        self._rate = rate

    def evaluate(self, t: float) -> float:
        if t < 0:
            return 0.0
        if t > self.horizon + TOLERANCE:
            raise HorizonExceededError(f"t={t} exceeds curve horizon {self.horizon}")
        if self._segments is not None:
            return self._segments.value(min(t, self.horizon))
        return float(self._value_fn(np.array([min(t, self.horizon)]))[0])

    def _build(self) -> Segments:
        cands = np.unique(self._cands[(self._cands >= 0.0) & (self._cands <= self.horizon)])
        if len(cands) == 0 or cands[0] != 0.0:
            cands = np.concatenate([[0.0], cands])
        ends = np.append(cands[1:], self.horizon)
        width = ends - cands
        q1 = cands + width * 0.25
        q2 = cands + width * 0.75
        at = self._value_fn(cands)
        v1 = self._value_fn(q1)
        v2 = self._value_fn(q2)
        with np.errstate(invalid="ignore"):
            slope = np.where(width > 0, (v2 - v1) / np.maximum(q2 - q1, 1e-300), 0.0)
            right = np.where(width > 0, v1 - slope * (q1 - cands), at)
        bad = ~np.isfinite(slope)
        slope[bad] = 0.0
        right[bad] = np.where(np.isfinite(v1[bad]), v1[bad], INF)
        return Segments(cands, at, right, slope, self.horizon)

    def long_term_rate(self) -> float:
        return self._rate


def convolve(f: Curve, g: Curve) -> Curve:
    """Min-plus convolution inf_{0<=s<=t} { f(t-s) + g(s) }.

    The infimum over each closed interval between breakpoints is linear, so
    evaluating at breakpoints of both operands (including one-sided limits at
    jumps) is exact.
    """
    horizon = min(f.horizon, g.horizon)
    fs = f.segments.restrict(horizon)
    gs = g.segments.restrict(horizon)
    pair_sums = (fs.t[:, None] + gs.t[None, :]).ravel()
    cands = np.concatenate([fs.t, gs.t, pair_sums])

    def value_fn(ts):
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            # probe at g's exact breakpoints (s) and at f's exact breakpoints (u = t - s)
            s = np.concatenate([gs.t, [0.0, t]])
            s = s[(s >= 0.0) & (s <= t)]
            u = np.concatenate([fs.t, [0.0, t]])
            u = u[(u >= 0.0) & (u <= t)]
            vals = np.concatenate([
                fs.value_many(t - s) + gs.value_many(s),
                fs.left_many(t - s) + gs.right_many(s),
                fs.right_many(t - s) + gs.left_many(s),
                fs.value_many(u) + gs.value_many(t - u),
                fs.right_many(u) + gs.left_many(t - u),
                fs.left_many(u) + gs.right_many(t - u),
            ])
            out[i] = np.min(vals)
        return out

    rate = min(f.long_term_rate(), g.long_term_rate())
    return _MinPlusOp(value_fn, cands, horizon, rate)


def deconvolve(f: Curve, g: Curve) -> Curve:
    """Min-plus deconvolution sup_{s>=0} { f(t+s) - g(s) }.

    Deconvolving by a burst-delay curve is the exact shift f(t + D).  The
    supremum is otherwise taken over the curves' common validity window,
    which is exact for stable pairs whose argmax lies within the horizon;
    a numerator outgrowing the denominator raises DivergenceError.
    """
    if isinstance(g, BurstDelay):
        seg = _shift_left_segments(f.segments, g.delay)
        return _Computed(seg, f.long_term_rate())
    rf = f.long_term_rate()
    rg = g.long_term_rate()
    if rf > rg + max(TOLERANCE, 1e-9 * abs(rg)):
        raise DivergenceError(
            f"deconvolution diverges: numerator rate {rf:.6g} exceeds denominator rate {rg:.6g}"
        )
    horizon = f.horizon
    fs = f.segments
    gs = g.segments.restrict(horizon)
    diffs = (fs.t[:, None] - gs.t[None, :]).ravel()
    cands = np.concatenate([fs.t, diffs])

    def value_fn(ts):
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            smax = horizon - t
            # probe at g's exact breakpoints (s) and at f's exact breakpoints (u = t + s)
            s = np.concatenate([gs.t, [0.0, smax]])
            s = s[(s >= 0.0) & (s <= smax)]
            u = np.concatenate([fs.t, [t, horizon]])
            u = u[(u >= t) & (u <= horizon)]
            with np.errstate(invalid="ignore"):
                vals = np.concatenate([
                    fs.value_many(t + s) - gs.value_many(s),
                    fs.right_many(t + s) - gs.right_many(s),
                    fs.left_many(t + s) - gs.left_many(s),
                    fs.value_many(u) - gs.value_many(u - t),
                    fs.right_many(u) - gs.right_many(u - t),
                    fs.left_many(u) - gs.left_many(u - t),
                ])
            vals = vals[~np.isnan(vals)]
            out[i] = np.max(vals) if len(vals) else 0.0
        return out

    return _MinPlusOp(value_fn, cands, horizon, rf)


def hdev(alpha: Curve, beta: Curve) -> float:
    """Maximum horizontal deviation h(alpha, beta): the delay bound."""
    return deviations(alpha, beta).horizontal


def vdev(alpha: Curve, beta: Curve) -> float:
    """Maximum vertical deviation v(alpha, beta): the backlog bound."""
    return deviations(alpha, beta).vertical


def deviations(alpha: Curve, beta: Curve) -> Deviation:
    """Both deviations between an arrival and a service curve, with witnesses.

    Computed exactly at the union of curve breakpoints, staircase jump points
    and the level crossings they induce; raises InstabilityError when the
    arrival's long-term rate exceeds the service rate.
    """
    _check_rates(alpha, beta)
    a = alpha.segments
    b = beta.segments
    if not np.all(np.isfinite(a.right)):
        raise ValueError("arrival curve must be finite")
    if not a.is_nondecreasing() or not b.is_nondecreasing():
        raise ValueError("deviations require non-decreasing curves")
    h, wh = _hdev_segments(a, b)
    v, wv = _vdev_segments(a, b)
    return Deviation(horizontal=h, vertical=v, argmax_h=wh, argmax_v=wv)
