"""Per-queue service and arrival curves for each shaper architecture.

Covers gate-driven time-triggered transmission (staircase arrival envelopes
and TDMA-style leftover service), per-hop reshaping with shaped/shared
queues, credit-based shaping with frozen or non-frozen credit during guard
bands, and strict priority, alone and in combination.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import minplus as mp
from . import netmodel as nm
from .errors import ConfigurationError, InfeasibleScheduleError, StarvationError

ARCHITECTURES = (
    "TAS", "ATS", "CBS", "SP",
    "TAS+SP", "TAS+CBS", "TAS+ATS+SP", "TAS+ATS+CBS",
)

CREDIT_MODES = ("frozen", "nonfrozen")


@dataclass(frozen=True)
class Architecture:
    name: str
    tas: bool
    ats: bool
    cbs: bool

    @property
    def needs_credit_mode(self) -> bool:
        return self.tas and self.cbs


def parse_architecture(name: str) -> Architecture:
    if name not in ARCHITECTURES:
        raise ConfigurationError(f"unknown architecture {name!r}; expected one of {ARCHITECTURES}")
    parts = name.split("+")
    return Architecture(name=name, tas="TAS" in parts, ats="ATS" in parts, cbs="CBS" in parts)


# ---------------------------------------------------------------------------
# Time-triggered gate curves
# ---------------------------------------------------------------------------

def tt_arrival_curve(gcl, guard_bands, variant: str, rate: float, horizon: float) -> mp.Curve:
    """Upper envelope of link time blocked for lower-priority traffic by the
    gate windows, as a max over window rotations of periodic burst staircases.

    ``variant`` selects whether each burst covers the window alone ("TT") or
    the window plus its preceding guard band ("GB+TT").
    """
    if gcl is None or not gcl.windows:
        return mp.zero(horizon)
    if variant not in ("TT", "GB+TT"):
        raise ValueError(f"unknown variant {variant!r}")
    n = len(gcl.windows)
    period = gcl.period
    offs = [w.offset for w in gcl.windows]
    lens = [w.length for w in gcl.windows]
    gbs = list(guard_bands) if variant == "GB+TT" else [0.0] * n
    rotations = []
    for i in range(n):
        terms = []
        for jj in range(i, i + n):
            j = jj % n
            oj = offs[j] + (period if jj >= n else 0.0)
            height = (lens[j] + gbs[j]) * rate
            offset = oj - offs[i] + gbs[i] - gbs[j]
            terms.append((height, max(0.0, offset), period))
        rotations.append(mp.Staircase(terms, horizon))
    return rotations[0] if n == 1 else mp.max_of(rotations)


def _tdma_curve(rate: float, period: float, length: float, t0: float, horizon: float) -> mp.Curve:
    """One window of ``length`` per ``period``, observed from a clock that
    starts ``t0`` before the worst-case alignment point: plateau/ramp curve
    with value rate*length gained per full period."""
    pts = {0.0: (0.0, 0.0)}
    k = 0
    while True:
        ramp_start = (k + 1) * period - length - t0
        ramp_end = (k + 1) * period - t0
        if ramp_start > horizon:
            break
        if ramp_start >= 0.0:
            pts[ramp_start] = (k * length * rate, rate)
        if 0.0 <= ramp_end <= horizon:
            pts[ramp_end] = ((k + 1) * length * rate, 0.0)
        k += 1
    bps = [(t, v, s) for t, (v, s) in sorted(pts.items())]
    return mp.PiecewiseLinear(bps, horizon)


def tt_service_curve(gcl, rate: float, horizon: float) -> mp.Curve:
    """Minimum service obtained by gate-scheduled traffic over any interval:
    the worst rotation of per-window TDMA curves, observed from the end of
    the previous window."""
    if gcl is None or not gcl.windows:
        return mp.zero(horizon)
    n = len(gcl.windows)
    period = gcl.period
    offs = [w.offset for w in gcl.windows]
    lens = [w.length for w in gcl.windows]
    rotations = []
    for i in range(n):
        prev = (i - 1) % n
        prev_end = offs[prev] + lens[prev] - (period if i == 0 else 0.0)
        pieces = []
        for jj in range(i, i + n):
            j = jj % n
            oj = offs[j] + (period if jj >= n else 0.0)
            t0 = period - lens[j] - oj + prev_end
            pieces.append(_tdma_curve(rate, period, lens[j], t0, horizon))
        rotations.append(mp.sum_of(pieces))
    return rotations[0] if n == 1 else mp.min_of(rotations)


def gb_envelope(gcl, guard_bands, rate: float):
    """Tightest linear envelope (sigma, rho) of guard-band link time:
    rate * gb_time(s, t) <= sigma + rho * (t - s - tt_time(s, t)) for all
    intervals.  rho is pinned to the per-period guard-band share of non-TT
    time; sigma is fitted over all window-aligned interval pairs spanning up
    to two schedule rotations.  Checked against random intervals in tests.
    """
    if gcl is None or not gcl.windows:
        return 0.0, 0.0
    gbs = list(guard_bands)
    if all(g <= 0.0 for g in gbs):
        return 0.0, 0.0
    period = gcl.period
    total_tt = sum(w.length for w in gcl.windows)
    total_gb = sum(gbs)
    non_tt = period - total_tt
    if non_tt <= 1e-12:
        return 0.0, 0.0
    rho = rate * total_gb / non_tt

    gb_iv, tt_iv = [], []
    for rep in range(-1, 3):
        base = rep * period
        for w, gb in zip(gcl.windows, gbs):
            tt_iv.append((base + w.offset, base + w.end))
            if gb > 0.0:
                gb_iv.append((base + w.offset - gb, base + w.offset))
    points = np.unique(np.array(
        [p for iv in itertools.chain(gb_iv, tt_iv) for p in iv], dtype=float))

    def measure(intervals):
        pref = np.zeros_like(points)
        for lo, hi in intervals:
            pref += np.clip(points, lo, hi) - lo
        return pref

    m_gb = measure(gb_iv)
    m_tt = measure(tt_iv)
    span = points[None, :] - points[:, None]
    ok = (span > 0) & (span <= 2 * period)
    d_gb = m_gb[None, :] - m_gb[:, None]
    d_tt = m_tt[None, :] - m_tt[:, None]
    slack = rate * d_gb - rho * (span - d_tt)
    sigma = float(np.max(slack[ok], initial=0.0))
    return max(0.0, sigma), rho


# ---------------------------------------------------------------------------
# Analysis context
# ---------------------------------------------------------------------------

class ShaperContext:
    """Immutable per-analysis state: architecture, credit mode, horizon, and
    cached gate curves / credit bounds per egress port."""

    def __init__(self, network: nm.Network, arch: Architecture, credit_mode, horizon: float):
        if arch.needs_credit_mode:
            if credit_mode not in CREDIT_MODES:
                raise ConfigurationError(
                    f"architecture {arch.name} requires credit_mode in {CREDIT_MODES}")
        elif credit_mode is not None:
            raise ConfigurationError(
                f"credit_mode only applies when gates and credit shaping are combined, not {arch.name}")
        self.network = network
        self.arch = arch
        self.credit_mode = credit_mode
        self.horizon = float(horizon)
        self._tt_arrival = {}
        self._tt_service = {}
        self._guard_bands = {}
        self._gb_envelope = {}
        self._idle_slopes = {}

    # -- per-port gate state ------------------------------------------------

    def link_rate(self, link_id: str) -> float:
        return self.network.links[link_id].rate

    def guard_bands(self, link_id: str):
        if link_id not in self._guard_bands:
            self._guard_bands[link_id] = nm.guard_band_lengths(self.network, link_id)
        return self._guard_bands[link_id]

    def _gcl(self, link_id: str):
        return self.network.gcl(link_id) if self.arch.tas else None

    def tt_arrival(self, link_id: str, variant: str) -> mp.Curve:
        key = (link_id, variant)
        if key not in self._tt_arrival:
            self._tt_arrival[key] = tt_arrival_curve(
                self._gcl(link_id), self.guard_bands(link_id), variant,
                self.link_rate(link_id), self.horizon)
        return self._tt_arrival[key]

    def tt_service(self, link_id: str) -> mp.Curve:
        if link_id not in self._tt_service:
            self._tt_service[link_id] = tt_service_curve(
                self._gcl(link_id), self.link_rate(link_id), self.horizon)
        return self._tt_service[link_id]

    def envelope(self, link_id: str):
        if link_id not in self._gb_envelope:
            self._gb_envelope[link_id] = gb_envelope(
                self._gcl(link_id), self.guard_bands(link_id), self.link_rate(link_id))
        return self._gb_envelope[link_id]

    # -- per-port class structure --------------------------------------------

    def priorities_at(self, link_id: str):
        return nm.event_priorities(self.network, link_id)

    def class_frames(self, link_id: str, priority: int):
        sizes = [f.size for f in nm.event_flows_on(self.network, link_id) if f.priority == priority]
        return (max(sizes), min(sizes)) if sizes else (0.0, 0.0)

    def idle_slope(self, link_id: str, priority: int) -> float:
        """Configured idle slope, or the default reservable share split in
        proportion to class committed rates."""
        key = (link_id, priority)
        if key in self._idle_slopes:
            return self._idle_slopes[key]
        explicit = self.network.idle_slopes.get(link_id, {})
        if priority in explicit:
            slope = explicit[priority]
        else:
            budget = self.network.cbs_fraction * self.link_rate(link_id)
            class_rates = {}
            for f in nm.event_flows_on(self.network, link_id):
                _, r = nm.leaky_bucket_of(f)
                class_rates[f.priority] = class_rates.get(f.priority, 0.0) + r
            total = sum(class_rates.values())
            if priority not in class_rates or total <= 0.0:
                raise ConfigurationError(
                    f"no idle slope configured or derivable for priority {priority} at {link_id}")
            if len(class_rates) == 1:
                slope = budget
            else:
                slope = budget * class_rates[priority] / total
        self._idle_slopes[key] = slope
        return slope


# ---------------------------------------------------------------------------
# Credit bounds (credit-based shaping)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CreditBounds:
    c_max: float            # frozen-credit upper bound (also the standalone bound)
    c_max_nonfrozen: float  # upper bound with credit accruing during guard bands
    c_min: float
    sigma_gb: float
    rho_gb: float

    def upper(self, credit_mode) -> float:
        return self.c_max_nonfrozen if credit_mode == "nonfrozen" else self.c_max


def cbs_credit_bounds(ctx: ShaperContext, link_id: str, priority: int) -> CreditBounds:
    """Credit bounds of the class serving ``priority`` at a port, for any
    number of classes above it."""
    rate = ctx.link_rate(link_id)
    prios = ctx.priorities_at(link_id)
    if priority not in prios:
        raise ConfigurationError(f"priority {priority} has no traffic at {link_id}")
    rank = prios.index(priority)  # number of higher classes
    higher = prios[:rank]
    idsl_i = ctx.idle_slope(link_id, priority)
    lower_max = nm.lower_priority_max_frame(ctx.network, link_id, priority)

    c_min_sum = 0.0
    idsl_sum = 0.0
    for p in higher:
        idsl_j = ctx.idle_slope(link_id, p)
        l_max_j, _ = ctx.class_frames(link_id, p)
        c_min_sum += (idsl_j - rate) * l_max_j / rate
        idsl_sum += idsl_j

    denom = idsl_sum - rate
    if denom >= 0.0:
        raise ConfigurationError(
            f"over-reserved credit shaping at {link_id}: higher-class idle slopes "
            f"{idsl_sum:.3f} reach link rate {rate:.3f} (priority {priority})")
    c_max = idsl_i * (c_min_sum - lower_max) / denom

    l_max_i, _ = ctx.class_frames(link_id, priority)
    c_min = (idsl_i - rate) * l_max_i / rate

    sigma, rho = ctx.envelope(link_id) if ctx.arch.tas else (0.0, 0.0)
    denom_nf = rho + idsl_sum - rate
    if denom_nf >= 0.0:
        raise ConfigurationError(
            f"over-reserved credit shaping at {link_id} including guard-band rate "
            f"{rho:.3f} (priority {priority})")
    c_max_nf = idsl_i * (c_min_sum - lower_max - sigma) / denom_nf
    return CreditBounds(c_max=c_max, c_max_nonfrozen=c_max_nf, c_min=c_min,
                        sigma_gb=sigma, rho_gb=rho)


def cbs_service_curve(ctx: ShaperContext, link_id: str, priority: int,
                      bounds: CreditBounds | None = None) -> mp.Curve:
    """Guaranteed service for one credit-shaped class; under gate schedules
    the gate-blocked envelope is subtracted before the closure."""
    bounds = bounds or cbs_credit_bounds(ctx, link_id, priority)
    idsl = ctx.idle_slope(link_id, priority)
    if not ctx.arch.tas:
        return mp.RateLatency(idsl, bounds.c_max / idsl, ctx.horizon)
    variant = "TT" if ctx.credit_mode == "nonfrozen" else "GB+TT"
    c_upper = bounds.upper(ctx.credit_mode)
    rate = ctx.link_rate(link_id)
    inner = mp.sum_of([
        mp.Affine(-c_upper, idsl, ctx.horizon),
        mp.scale(-idsl / rate, ctx.tt_arrival(link_id, variant)),
    ])
    return mp.up_closure(inner)


def cbs_shaping_curve(ctx: ShaperContext, link_id: str, priority: int,
                      bounds: CreditBounds | None = None) -> mp.Curve:
    """Upper envelope of a class's departures; reused as an arrival constraint
    downstream.  Under gate schedules the service consumed by scheduled
    traffic is subtracted inside the closure."""
    bounds = bounds or cbs_credit_bounds(ctx, link_id, priority)
    idsl = ctx.idle_slope(link_id, priority)
    if not ctx.arch.tas:
        return mp.Affine(bounds.c_max - bounds.c_min, idsl, ctx.horizon)
    c_upper = bounds.upper(ctx.credit_mode)
    rate = ctx.link_rate(link_id)
    inner = mp.sum_of([
        mp.Affine(c_upper - bounds.c_min, idsl, ctx.horizon),
        mp.scale(-idsl / rate, ctx.tt_service(link_id)),
    ])
    return mp.up_closure(inner)


# ---------------------------------------------------------------------------
# Strict-priority service
# ---------------------------------------------------------------------------

def sp_service_curve(ctx: ShaperContext, link_id: str, priority: int,
                     higher_arrivals) -> mp.Curve:
    """Leftover link service for one priority: capacity minus gate-blocked
    time, minus higher-priority arrivals, minus one blocking lower frame.

    ``higher_arrivals`` are this architecture's own arrival curves of the
    strictly higher priorities at the port, highest first.
    """
    rate = ctx.link_rate(link_id)
    lower_max = nm.lower_priority_max_frame(ctx.network, link_id, priority)
    terms = [mp.Affine(-lower_max, rate, ctx.horizon)]
    rate_budget = rate
    if ctx.arch.tas:
        gate = ctx.tt_arrival(link_id, "GB+TT")
        terms.append(mp.scale(-1.0, gate))
        rate_budget -= gate.long_term_rate()
    for alpha in higher_arrivals:
        terms.append(mp.scale(-1.0, alpha))
        rate_budget -= alpha.long_term_rate()
    if rate_budget <= mp.TOLERANCE:
        raise StarvationError(
            f"priority {priority} at {link_id} has no residual service "
            f"(residual rate {rate_budget:.6g} bits/us)")
    inner = mp.sum_of(terms)
    # the pure reshaping architecture keeps the plain non-negative part; gate
    # staircases make the inner term non-monotone and need the closure
    if ctx.arch.ats and not ctx.arch.tas:
        return mp.pos_part(inner)
    return mp.up_closure(inner)


# ---------------------------------------------------------------------------
# Arrival curves
# ---------------------------------------------------------------------------

def shared_queue_arrival_ats(ctx: ShaperContext, link_id: str, priority: int) -> mp.Curve:
    """Aggregate input at a shared queue when every flow was reshaped to its
    committed envelope: a plain sum of token buckets."""
    curves = []
    for f in sorted(nm.event_flows_on(ctx.network, link_id), key=lambda f: f.id):
        if f.priority != priority:
            continue
        b, r = nm.leaky_bucket_of(f)
        curves.append(mp.Affine(b, r, ctx.horizon))
    return mp.sum_of(curves) if curves else mp.zero(ctx.horizon)


def unshaped_queue_arrival(ctx: ShaperContext, link_id: str, priority: int,
                           groups, source_bursts) -> mp.Curve:
    """Aggregate input at a priority queue without reshaping.

    ``groups`` lists per-upstream-port contributions as
    (upstream_link_id, upstream_delay_bound, [(flow, burst_at_upstream)]);
    each group is delayed by the upstream bound, then capped by the upstream
    link's serialization and, for credit-shaped classes, by the upstream
    class shaping curve.  ``source_bursts`` are (flow, burst) pairs entering
    at this port from their source end system, contributing raw envelopes.
    """
    parts = []
    for f, burst in sorted(source_bursts, key=lambda fb: fb[0].id):
        _, r = nm.leaky_bucket_of(f)
        parts.append(mp.Affine(burst, r, ctx.horizon))
    for upstream_id, delay, flows in sorted(groups, key=lambda g: g[0]):
        terms = []
        for f, burst in sorted(flows, key=lambda fb: fb[0].id):
            _, r = nm.leaky_bucket_of(f)
            terms.append(mp.Affine(burst + r * delay, r, ctx.horizon))
        group = mp.sum_of(terms)
        up_rate = ctx.link_rate(upstream_id)
        up_lmax = max(
            (f.size for f in nm.event_flows_on(ctx.network, upstream_id)
             if f.priority == priority),
            default=0.0)
        candidates = [group, mp.Affine(up_lmax, up_rate, ctx.horizon)]
        if ctx.arch.cbs:
            shaping = cbs_shaping_curve(ctx, upstream_id, priority)
            candidates.append(mp.sum_of([shaping, mp.Affine(up_lmax, 0.0, ctx.horizon)]))
        parts.append(mp.min_of(candidates))
    return mp.sum_of(parts) if parts else mp.zero(ctx.horizon)


# ---------------------------------------------------------------------------
# Shaped-queue (per-hop regulator) analysis
# ---------------------------------------------------------------------------

def shaped_queue_analysis(ctx: ShaperContext, link_id: str, upstream_id: str,
                          priority: int, upstream_delay: float):
    """Delay and backlog bound of one shaped queue, fed by the upstream
    shared queue of the same priority.

    Reshaping adds nothing to the combined upstream-plus-regulator delay, so
    the shaped-queue bound is the upstream bound minus the minimum residence
    time there; its service is a pure delay element.
    """
    flows = [f for f in nm.event_flows_on(ctx.network, link_id)
             if f.priority == priority and ctx.network.previous_link(f, link_id) == upstream_id]
    if not flows:
        raise ValueError(f"no flows from {upstream_id} into {link_id} at priority {priority}")
    up_rate = ctx.link_rate(upstream_id)
    l_min = min(f.size for f in flows)
    delay = upstream_delay - l_min / up_rate
    if delay < 0.0:
        delay = 0.0
    terms = []
    for f in sorted(flows, key=lambda f: f.id):
        b, r = nm.leaky_bucket_of(f)
        terms.append(mp.Affine(b + r * upstream_delay, r, ctx.horizon))
    up_lmax = max(
        (f.size for f in nm.event_flows_on(ctx.network, upstream_id) if f.priority == priority),
        default=0.0)
    candidates = [mp.sum_of(terms), mp.Affine(up_lmax, up_rate, ctx.horizon)]
    if ctx.arch.cbs:
        shaping = cbs_shaping_curve(ctx, upstream_id, priority)
        candidates.append(mp.sum_of([shaping, mp.Affine(up_lmax, 0.0, ctx.horizon)]))
    alpha = mp.min_of(candidates)
    beta = mp.BurstDelay(delay, ctx.horizon)
    backlog = mp.vdev(alpha, beta)
    return delay, backlog


# ---------------------------------------------------------------------------
# Time-triggered flow bounds
# ---------------------------------------------------------------------------

def tas_flow_bounds(network: nm.Network, flow: nm.Flow):
    """Deterministic end-to-end latency and zero jitter of a scheduled flow,
    straight from its offsets."""
    if flow.kind != "TT":
        raise ValueError(f"flow {flow.id} is not time-triggered")
    for link_id in flow.route:
        if link_id not in flow.offsets:
            raise InfeasibleScheduleError(f"flow {flow.id} lacks an offset on {link_id}")
    prev = None
    for link_id in flow.route:
        if prev is not None:
            lk = network.links[prev]
            earliest = flow.offsets[prev] + flow.size / lk.rate + lk.prop_delay + lk.fwd_delay
            if flow.offsets[link_id] < earliest - 1e-9:
                raise InfeasibleScheduleError(
                    f"flow {flow.id}: offset on {link_id} precedes arrival from {prev}")
        prev = link_id
    last = flow.route[-1]
    first = flow.route[0]
    delay = flow.offsets[last] + flow.size / network.links[last].rate - flow.offsets[first]
    return delay + network.precision, 0.0


def tt_queue_backlogs(network: nm.Network, link_id: str):
    """Per-TT-queue backlog bound at a port: the largest frame assigned to
    each queue (frames are isolated, one flow in a queue at a time)."""
    out = {}
    for f in nm.tt_flows_on(network, link_id):
        q = f.tt_queue
        out[q] = max(out.get(q, 0.0), f.size)
    return out
