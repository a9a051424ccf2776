"""Per-queue analysis orchestration and end-to-end metric assembly.

Queues are analyzed in dependency order along flow routes; per-queue delay
and backlog come from the horizontal/vertical deviations of the architecture's
arrival and service curves, and per-flow end-to-end bounds sum the per-queue
bounds with the constant link delays.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import minplus as mp
from . import netmodel as nm
from . import shapers as sh
from .errors import (
    ConfigurationError,
    CycleError,
    DependencyError,
    FixedPointError,
    HorizonExceededError,
    InstabilityError,
    StarvationError,
    TsnCalcError,
)

log = logging.getLogger(__name__)

FIXED_POINT_EPS = 0.01   # us, convergence threshold of the iterative mode
FIXED_POINT_MAX_ITER = 100
HORIZON_RETRIES = 5      # doublings when deviations are not attained in-horizon


class ValidationError(TsnCalcError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"network validation failed: {lines}{more}")


@dataclass(frozen=True)
class FlowBounds:
    flow: str
    priority: int
    kind: str
    wcd: float      # end-to-end delay upper bound, us
    lb: float       # end-to-end delay lower bound, us
    jitter: float   # us


@dataclass(frozen=True)
class QueueBounds:
    link: str
    priority: int
    delay: float    # us
    backlog: float  # bits


@dataclass(frozen=True)
class ShapedQueueBounds:
    link: str
    upstream: str
    priority: int
    delay: float
    backlog: float


@dataclass
class AnalysisReport:
    architecture: str
    credit_mode: str | None
    horizon: float
    flows: dict = field(default_factory=dict)          # id -> FlowBounds
    queues: dict = field(default_factory=dict)         # (link, prio) -> QueueBounds
    tt_queues: dict = field(default_factory=dict)      # (link, index) -> backlog bits
    shaped_queues: dict = field(default_factory=dict)  # (link, upstream, prio) -> ShapedQueueBounds


# ---------------------------------------------------------------------------
# Queue dependency graph
# ---------------------------------------------------------------------------

def queue_dependency_graph(network: nm.Network):
    """Nodes are (link, priority) queues of event traffic; an edge A -> B
    means some flow traverses A immediately before B, refined so that a
    queue also waits for the upstream queues its service curve consults
    (all higher-or-equal priorities at the upstream port feeding this port)."""
    nodes = set()
    for link_id in network.links:
        for p in nm.event_priorities(network, link_id):
            nodes.add((link_id, p))
    edges = {n: set() for n in nodes}
    for f in network.flows.values():
        if f.kind not in ("SP", "AVB"):
            continue
        for a, b in zip(f.route, f.route[1:]):
            for r in nm.event_priorities(network, b):
                if r <= f.priority:
                    edges[(a, f.priority)].add((b, r))
    return nodes, edges


def _queue_sort_key(network: nm.Network, node):
    link_id, prio = node
    link = network.links[link_id]
    return (link.src, link_id, -prio)


def _topological_order(network: nm.Network, nodes, edges):
    indeg = {n: 0 for n in nodes}
    for srcs in edges.values():
        for dst in srcs:
            indeg[dst] += 1
    ready = sorted((n for n in nodes if indeg[n] == 0),
                   key=lambda n: _queue_sort_key(network, n))
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        changed = False
        for m in edges[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
                changed = True
        if changed:
            ready.sort(key=lambda n: _queue_sort_key(network, n))
    if len(order) < len(nodes):
        raise CycleError(_find_cycle(nodes, edges, set(order)))
    return order


def _find_cycle(nodes, edges, done):
    remaining = sorted(nodes - done)
    rem = set(remaining)
    for start in remaining:
        seen = []
        node = start
        while node is not None and node not in seen:
            seen.append(node)
            nxt = sorted(m for m in edges[node] if m in rem)
            node = nxt[0] if nxt else None
        if node is not None:
            return seen[seen.index(node):] + [node]
    return remaining


# ---------------------------------------------------------------------------
# Core analysis
# ---------------------------------------------------------------------------

def analyze(network: nm.Network, architecture: str, credit_mode: str | None = None,
            horizon: float | None = None, fixed_point: bool = False) -> AnalysisReport:
    """Worst-case bounds for every flow and queue under one architecture.

    ``credit_mode`` defaults to "frozen" where gates and credit shaping
    coexist.  The curve horizon defaults to four times the longest schedule
    or flow period and is doubled (a bounded number of times) when a
    deviation is not attained within it.
    """
    violations = nm.validate(network)
    if violations:
        raise ValidationError(violations)
    arch = sh.parse_architecture(architecture)
    if credit_mode is None and arch.needs_credit_mode:
        credit_mode = "frozen"

    tt = [f for f in network.flows.values() if f.kind == "TT"]
    if tt and not arch.tas:
        raise ConfigurationError(
            f"architecture {arch.name} cannot schedule the time-triggered flows "
            f"{sorted(f.id for f in tt)[:3]}")
    events = [f for f in network.flows.values() if f.kind in ("SP", "AVB")]
    if events and arch.name == "TAS":
        raise ConfigurationError(
            "pure gate scheduling serves only time-triggered flows; "
            f"found event-triggered {sorted(f.id for f in events)[:3]}")

    h = horizon if horizon is not None else nm.hyperperiod_horizon(network)
    last_exc = None
    for _ in range(HORIZON_RETRIES):
        try:
            return _analyze_at_horizon(network, arch, credit_mode, h, fixed_point)
        except HorizonExceededError as exc:
            last_exc = exc
            h *= 2.0
    raise last_exc


def _analyze_at_horizon(network, arch, credit_mode, horizon, fixed_point):
    ctx = sh.ShaperContext(network, arch, credit_mode, horizon)
    report = AnalysisReport(architecture=arch.name, credit_mode=credit_mode, horizon=horizon)

    for f in sorted(network.flows.values(), key=lambda f: f.id):
        if f.kind != "TT":
            continue
        wcd, jitter = sh.tas_flow_bounds(network, f)
        lb = _transmission_floor(network, f)
        report.flows[f.id] = FlowBounds(f.id, f.priority, f.kind, wcd, lb, jitter)
    for link_id in sorted(network.links):
        for q, backlog in sorted(sh.tt_queue_backlogs(network, link_id).items()):
            report.tt_queues[(link_id, q)] = backlog

    if any(f.kind in ("SP", "AVB") for f in network.flows.values()):
        if arch.ats:
            _analyze_ats(ctx, report)
        else:
            _analyze_feed_forward(ctx, report, fixed_point)
        _assemble_event_flows(ctx, report)
    return report


def _transmission_floor(network, flow):
    total = 0.0
    for link_id in flow.route:
        lk = network.links[link_id]
        total += flow.size / lk.rate + lk.prop_delay + lk.fwd_delay
    return total - network.links[flow.route[-1]].fwd_delay


def _queue_deviation(ctx, link_id, priority, alpha, beta):
    try:
        dev = mp.deviations(alpha, beta)
    except InstabilityError as exc:
        raise InstabilityError(f"queue ({link_id}, P{priority}): {exc}") from exc
    return dev.horizontal, dev.vertical


def _service_curve(ctx, link_id, priority, higher_arrivals):
    if ctx.arch.cbs:
        return sh.cbs_service_curve(ctx, link_id, priority)
    return sh.sp_service_curve(ctx, link_id, priority, higher_arrivals)


def _analyze_ats(ctx, report):
    """Shared queues are local under per-hop reshaping: arrivals are sums of
    committed envelopes, so no upstream bound is needed.  Shaped queues are
    then a reporting pass over the shared-queue results."""
    network = ctx.network
    shared_delay = {}
    for link_id in sorted(network.links):
        prios = ctx.priorities_at(link_id)
        arrivals = []
        for priority in prios:
            alpha = sh.shared_queue_arrival_ats(ctx, link_id, priority)
            beta = _service_curve(ctx, link_id, priority, arrivals)
            d, b = _queue_deviation(ctx, link_id, priority, alpha, beta)
            report.queues[(link_id, priority)] = QueueBounds(link_id, priority, d, b)
            shared_delay[(link_id, priority)] = d
            arrivals.append(alpha)
    for link_id in sorted(network.links):
        for (upstream, priority), flows in sorted(nm.shaped_queue_map(network, link_id).items()):
            d_up = shared_delay.get((upstream, priority))
            if d_up is None:
                raise DependencyError(
                    f"missing upstream bound for shaped queue ({link_id} <- {upstream}, P{priority})")
            d_q, b_q = sh.shaped_queue_analysis(ctx, link_id, upstream, priority, d_up)
            report.shaped_queues[(link_id, upstream, priority)] = ShapedQueueBounds(
                link_id, upstream, priority, d_q, b_q)


def _event_queue_inputs(ctx, link_id, priority, delays, bursts):
    """Group this queue's flows by upstream port and collect their bursts."""
    network = ctx.network
    groups = {}
    source = []
    for f in nm.event_flows_on(network, link_id):
        if f.priority != priority:
            continue
        b, r = nm.leaky_bucket_of(f)
        prev = network.previous_link(f, link_id)
        if prev is None:
            source.append((f, b))
            bursts[(f.id, link_id)] = b
        else:
            d_up = delays.get((prev, priority))
            if d_up is None:
                raise DependencyError(
                    f"queue ({link_id}, P{priority}) needs the bound of ({prev}, P{priority})")
            burst_up = bursts.get((f.id, prev))
            if burst_up is None:
                raise DependencyError(f"flow {f.id} has no burst recorded at {prev}")
            groups.setdefault(prev, []).append((f, burst_up))
            bursts[(f.id, link_id)] = burst_up + r * d_up
    group_list = [(up, delays[(up, priority)], flows) for up, flows in sorted(groups.items())]
    return group_list, source


def _analyze_feed_forward(ctx, report, fixed_point):
    network = ctx.network
    nodes, edges = queue_dependency_graph(network)
    try:
        order = _topological_order(network, nodes, edges)
    except CycleError:
        if not fixed_point:
            raise
        _analyze_fixed_point(ctx, report, nodes)
        return

    delays = {}
    bursts = {}
    port_arrivals = {}
    for link_id, priority in order:
        groups, source = _event_queue_inputs(ctx, link_id, priority, delays, bursts)
        alpha = sh.unshaped_queue_arrival(ctx, link_id, priority, groups, source)
        higher = [port_arrivals[(link_id, p)] for p in ctx.priorities_at(link_id)
                  if p > priority]
        beta = _service_curve(ctx, link_id, priority, higher)
        d, b = _queue_deviation(ctx, link_id, priority, alpha, beta)
        report.queues[(link_id, priority)] = QueueBounds(link_id, priority, d, b)
        delays[(link_id, priority)] = d
        port_arrivals[(link_id, priority)] = alpha


def _analyze_fixed_point(ctx, report, nodes):
    """Monotone iteration for cyclic dependency graphs: start every queue at
    its minimum frame transmission time and resweep until bounds settle."""
    network = ctx.network
    queues = sorted(nodes, key=lambda n: _queue_sort_key(network, n))
    delays = {}
    for link_id, priority in queues:
        flows = [f for f in nm.event_flows_on(network, link_id) if f.priority == priority]
        l_min = min(f.size for f in flows)
        delays[(link_id, priority)] = l_min / network.links[link_id].rate

    for _ in range(FIXED_POINT_MAX_ITER):
        new_delays = {}
        results = {}
        bursts = {}
        for f in sorted(network.flows.values(), key=lambda f: f.id):
            if f.kind not in ("SP", "AVB"):
                continue
            b, r = nm.leaky_bucket_of(f)
            acc = b
            for link_id in f.route:
                bursts[(f.id, link_id)] = acc
                acc += r * delays[(link_id, f.priority)]
        for link_id, priority in queues:
            groups, source = _event_queue_inputs(ctx, link_id, priority, delays, dict(bursts))
            alpha = sh.unshaped_queue_arrival(ctx, link_id, priority, groups, source)
            higher_alphas = []
            for p in ctx.priorities_at(link_id):
                if p > priority:
                    g, s = _event_queue_inputs(ctx, link_id, p, delays, dict(bursts))
                    higher_alphas.append(sh.unshaped_queue_arrival(ctx, link_id, p, g, s))
            beta = _service_curve(ctx, link_id, priority, higher_alphas)
            d, b = _queue_deviation(ctx, link_id, priority, alpha, beta)
            new_delays[(link_id, priority)] = d
            results[(link_id, priority)] = QueueBounds(link_id, priority, d, b)
        worst = max(abs(new_delays[q] - delays[q]) for q in queues)
        delays = new_delays
        if worst < FIXED_POINT_EPS:
            report.queues.update(results)
            return
    raise FixedPointError(
        f"fixed-point iteration did not converge within {FIXED_POINT_MAX_ITER} sweeps "
        f"(last change {worst:.4f} us)")


def _assemble_event_flows(ctx, report):
    network = ctx.network
    for f in sorted(network.flows.values(), key=lambda f: f.id):
        if f.kind not in ("SP", "AVB"):
            continue
        total = 0.0
        for link_id in f.route:
            qb = report.queues.get((link_id, f.priority))
            if qb is None:
                raise DependencyError(f"no bound computed for queue ({link_id}, P{f.priority})")
            lk = network.links[link_id]
            total += qb.delay + lk.prop_delay + lk.fwd_delay
        total -= network.links[f.route[-1]].fwd_delay
        lb = _transmission_floor(network, f)
        report.flows[f.id] = FlowBounds(f.id, f.priority, f.kind, total, lb, total - lb)


# ---------------------------------------------------------------------------
# Closed-form reshaping cross-check
# ---------------------------------------------------------------------------

def ats_hop_delta(network: nm.Network, link_id: str, flow: nm.Flow) -> float:
    """Per-hop pessimism of the curve-based bound over the closed-form
    eligibility-time bound for reshaped traffic: the worst same-priority
    frame time at the residual rate left by higher priorities, minus its
    time at the full link rate."""
    c = network.links[link_id].rate
    same = [f for f in nm.event_flows_on(network, link_id) if f.priority == flow.priority]
    higher = [f for f in nm.event_flows_on(network, link_id) if f.priority > flow.priority]
    higher_rate = sum(nm.leaky_bucket_of(f)[1] for f in sorted(higher, key=lambda f: f.id))
    if higher_rate >= c:
        raise InstabilityError(
            f"higher-priority rate {higher_rate:.3f} reaches link rate {c} at {link_id}")
    return max((f.size / (c - higher_rate) - f.size / c for f in same), default=0.0)


def ats_closed_form_bounds(network: nm.Network, report: AnalysisReport):
    """Per flow: (curve bound, closed-form bound, total delta) where the
    closed-form bound subtracts the per-hop delta on every crossed port."""
    out = {}
    for fid, fb in sorted(report.flows.items()):
        f = network.flows[fid]
        if f.kind not in ("SP", "AVB"):
            continue
        delta = sum(ats_hop_delta(network, link_id, f) for link_id in f.route)
        out[fid] = (fb.wcd, fb.wcd - delta, delta)
    return out


# ---------------------------------------------------------------------------
# Shaper comparison
# ---------------------------------------------------------------------------

def difference_ratio(report1: AnalysisReport, report2: AnalysisReport, metric: str):
    """Relative difference (x1 - x2)/x2 per item plus its average; items with
    a zero reference are skipped with a warning."""
    if metric == "delay":
        items1 = {k: v.wcd for k, v in report1.flows.items()}
        items2 = {k: v.wcd for k, v in report2.flows.items()}
    elif metric == "jitter":
        items1 = {k: v.jitter for k, v in report1.flows.items()}
        items2 = {k: v.jitter for k, v in report2.flows.items()}
    elif metric == "backlog":
        items1 = {k: v.backlog for k, v in report1.queues.items()}
        items2 = {k: v.backlog for k, v in report2.queues.items()}
    else:
        raise ValueError(f"unknown metric {metric!r}")
    if set(items1) != set(items2):
        raise ValueError("reports cover different item sets")
    ratios = {}
    for key in sorted(items1):
        ref = items2[key]
        if ref == 0.0:
            log.warning("difference ratio: skipping %s with zero reference %s", metric, key)
            continue
        ratios[key] = (items1[key] - ref) / ref
    mean = sum(ratios.values()) / len(ratios) if ratios else float("nan")
    return ratios, mean


def effective_idle_slope(gcl: nm.Gcl | None, oper_idle_slope: float) -> float:
    """Scale a reserved bandwidth by the fraction of time the gate is open
    for its class (closed only during scheduled windows)."""
    if gcl is None or not gcl.windows:
        return oper_idle_slope
    open_time = gcl.period - sum(w.length for w in gcl.windows)
    if open_time <= 0.0:
        raise StarvationError("gates leave no open time for reserved classes")
    return oper_idle_slope * gcl.period / open_time


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def report_to_dict(report: AnalysisReport) -> dict:
    return {
        "architecture": report.architecture,
        "credit_mode": report.credit_mode,
        "horizon_us": report.horizon,
        "flows": {
            fid: {"priority": fb.priority, "kind": fb.kind, "wcd_us": fb.wcd,
                  "lb_us": fb.lb, "jitter_us": fb.jitter}
            for fid, fb in sorted(report.flows.items())
        },
        "queues": [
            {"link": qb.link, "priority": qb.priority,
             "delay_us": qb.delay, "backlog_bits": qb.backlog}
            for _, qb in sorted(report.queues.items())
        ],
        "tt_queues": [
            {"link": link, "queue": q, "backlog_bits": b}
            for (link, q), b in sorted(report.tt_queues.items())
        ],
        "shaped_queues": [
            {"link": sq.link, "upstream": sq.upstream, "priority": sq.priority,
             "delay_us": sq.delay, "backlog_bits": sq.backlog}
            for _, sq in sorted(report.shaped_queues.items())
        ],
    }


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def flows_csv(report: AnalysisReport) -> str:
    lines = ["id,priority,architecture,wcd_us,lb_us,jitter_us"]
    for fid, fb in sorted(report.flows.items()):
        lines.append(
            f"{fid},{fb.priority},{report.architecture},"
            f"{_fmt(fb.wcd)},{_fmt(fb.lb)},{_fmt(fb.jitter)}")
    return "\n".join(lines) + "\n"


def queues_csv(report: AnalysisReport, network: nm.Network) -> str:
    lines = ["node,port,queue,backlog_bits"]
    rows = []
    for (link, prio), qb in report.queues.items():
        rows.append((network.links[link].src, link, f"P{prio}", qb.backlog))
    for (link, q), b in report.tt_queues.items():
        rows.append((network.links[link].src, link, f"TT{q}", b))
    for (link, upstream, prio), sq in report.shaped_queues.items():
        rows.append((network.links[link].src, link, f"shaped:{upstream}:P{prio}", sq.backlog))
    for node, port, queue, backlog in sorted(rows):
        lines.append(f"{node},{port},{queue},{_fmt(backlog)}")
    return "\n".join(lines) + "\n"


def write_report(report: AnalysisReport, network: nm.Network, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for name, text in (
        ("flows.csv", flows_csv(report)),
        ("queues.csv", queues_csv(report, network)),
        ("report.json", json.dumps(report_to_dict(report), indent=2) + "\n"),
    ):
        path = out / name
        path.write_text(text)
        files.append(path)
    return files
