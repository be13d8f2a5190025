"""Trace-driven offloading simulation.

One run builds the closeness graph and OffSN partition, warms the IBP up,
then lets every measured user select contents and serves each request
either from the eNB or over a D2D link from the closest holder in the same
OffSN.

Each user's requests form one scheduling epoch. eNB-served requests get a
resource block each; every successful D2D link reuses the block of one
uniformly chosen cellular link of that epoch (or a shared extra block when
there is none), and links on the same block interfere.
"""
from __future__ import annotations

import csv
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import ibp as ibp_mod
from .errors import ConfigError, InvariantViolation
from .phy import (
    ENB,
    ChannelParams,
    Hotspot,
    Link,
    LinkSet,
    Topology,
    place_nodes,
    rate_cellular,
    rate_d2d,
    rate_interference_free,
)
from .social import ClosenessGraph, OffsnPartition, build_closeness_graph, build_offsn
from .trace import EncounterRecord, aggregate_contacts, read_trace

log = logging.getLogger(__name__)

RESULT_HEADER = ["param_value", "seed", "enb_sum_rate", "d2d_sum_rate", "offloaded_fraction", "mean_utility"]
DECISION_HEADER = ["user", "content", "route", "provider", "rate", "cost"]
SWEEPABLE = ("d_max", "c_c")


class Route(str, enum.Enum):
    D2D_SUCCESS = "D2D_SUCCESS"
    D2D_FAIL_FALLBACK = "D2D_FAIL_FALLBACK"
    CELLULAR_NEW = "CELLULAR_NEW"
    CELLULAR_WHITE_AREA = "CELLULAR_WHITE_AREA"


@dataclass(frozen=True)
class SyntheticTrace:
    """Encounter generator used when no trace file is configured.

    Pairs closer than ``contact_radius`` meet ``2 + Poisson(mean_encounters)``
    times; durations are Gamma(``duration_shape``, scale) with the scale
    shrinking linearly with distance from ``duration_scale`` at zero.
    """

    contact_radius: float = 150.0
    mean_encounters: float = 10.0
    duration_shape: float = 4.0
    duration_scale: float = 60.0


@dataclass(frozen=True)
class SimConfig:
    alpha: float = 20.0
    n_users: int = 27
    warmup_users: int = 0
    w_T: float = 0.5
    x_min: float = 60.0
    n_min: int = 2
    d_max: float = 50.0
    c_c: float = 0.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    n_ues: int = 27
    cell_radius: float = 500.0
    hotspots: tuple[Hotspot, ...] = (Hotspot((250.0, 0.0), 50.0, 1.0),)
    trace_path: Optional[str] = None
    synthetic: SyntheticTrace = field(default_factory=SyntheticTrace)
    seed: int = 0

    def validate(self):
        checks = [
            (self.alpha > 0, "alpha", "must be positive"),
            (self.n_users >= 1, "n_users", "must be at least 1"),
            (self.warmup_users >= 0, "warmup_users", "must be non-negative"),
            (0 <= self.w_T <= 1, "w_T", "must lie in [0, 1]"),
            (self.x_min >= 0, "x_min", "must be non-negative"),
            (self.n_min >= 1, "n_min", "must be at least 1"),
            (self.d_max > 0, "d_max", "must be positive"),
            (self.c_c >= 0, "c_c", "must be non-negative"),
            (self.n_ues >= 1, "n_ues", "must be at least 1"),
            (self.cell_radius > 0, "cell_radius", "must be positive"),
            (self.seed >= 0, "seed", "must be non-negative"),
        ]
        for ok, path, msg in checks:
            if not ok:
                raise ConfigError(msg, path)
        return self


@dataclass(frozen=True)
class ServiceDecision:
    user: int
    content: int
    route: Route
    provider: str
    rate_delivered: float
    control_cost_charged: float
    ue: str = ""


@dataclass
class RunMetrics:
    enb_sum_rate: float = 0.0
    d2d_sum_rate: float = 0.0
    offloaded_fraction: float = 0.0
    utility_per_user: list = field(default_factory=list)
    route_counts: dict = field(default_factory=lambda: {r.value: 0 for r in Route})
    decisions: list = field(default_factory=list)

    @property
    def total_requests(self) -> int:
        return sum(self.route_counts.values())

    @property
    def mean_utility(self) -> float:
        return float(np.mean(self.utility_per_user)) if self.utility_per_user else 0.0


@dataclass
class Scenario:
    """Static part of a run: geometry, social graph and OffSN partition."""

    topology: Topology
    graph: ClosenessGraph
    partition: OffsnPartition
    ue_order: list


def enb_utility(prior_mass, r_d, r_c, m_n_0, m_n, c_c) -> float:
    """eNB utility for user n.

    ``prior_mass`` is the sum over already-selected contents of m_k / n,
    taken from the IBP state before user n selects.
    """
    return prior_mass * r_d + m_n_0 * r_c - m_n * c_c


def _rngs(seed):
    ss = np.random.SeedSequence(seed)
    return dict(zip(("place", "trace", "ibp", "d2d", "rb"), (np.random.default_rng(s) for s in ss.spawn(5))))


def synthesize_trace(topo: Topology, params: SyntheticTrace, rng) -> list[EncounterRecord]:
    ues = sorted(topo.ue_positions)
    records = []
    for a_idx, a in enumerate(ues):
        for b in ues[a_idx + 1:]:
            d = topo.distance(a, b)
            if d >= params.contact_radius:
                continue
            scale = params.duration_scale * max(1.0 - d / params.contact_radius, 1e-3)
            n_enc = 2 + int(rng.poisson(params.mean_encounters))
            durations = rng.gamma(params.duration_shape, scale, size=n_enc)
            gaps = rng.exponential(3600.0, size=n_enc)
            t = 0.0
            for dur, gap in zip(durations, gaps):
                t += gap
                records.append(EncounterRecord(a, b, t, t + max(dur, 1e-6)))
                t += dur
    return records


def build_scenario(config: SimConfig, rngs=None) -> Scenario:
    rngs = rngs or _rngs(config.seed)
    if config.trace_path:
        records = read_trace(config.trace_path)
        stats = aggregate_contacts(records)
        graph = build_closeness_graph(stats, config.x_min, config.n_min)
        partition = build_offsn(graph, config.w_T)
        # cluster members first so they land in the hotspots
        ue_order = [u for c in partition.clusters for u in sorted(c)] + sorted(partition.white_nodes)
        if not ue_order:
            raise ConfigError("trace contains no UEs", "trace")
        topo = place_nodes(ue_order, config.cell_radius, config.hotspots, rngs["place"])
    else:
        topo = place_nodes(config.n_ues, config.cell_radius, config.hotspots, rngs["place"])
        records = synthesize_trace(topo, config.synthetic, rngs["trace"])
        stats = aggregate_contacts(records)
        graph = build_closeness_graph(stats, config.x_min, config.n_min)
        graph = ClosenessGraph(frozenset(topo.ue_positions), graph.edges)
        partition = build_offsn(graph, config.w_T)
        ue_order = list(topo.ue_positions)
    return Scenario(topo, graph, partition, ue_order)


def serve_request(
    user: int,
    content: int,
    is_old: bool,
    offsn: OffsnPartition,
    holders: dict,
    topology: Topology,
    graph: ClosenessGraph,
    config: SimConfig,
    ue: str,
    u_success: float,
) -> ServiceDecision:
    """Route one request and register the requesting UE as a holder.

    ``u_success`` is the uniform variate deciding whether an attempted D2D
    setup succeeds (it does when ``u_success < w``). The returned rate is the
    single-link rate; :func:`run_simulation` refines it per epoch.
    """
    params = config.channel
    eta = params.path_loss_exponent
    v_c = rate_interference_free(params, topology.gain(ENB, ue, eta))
    cluster = offsn.cluster_of(ue)
    current = holders.setdefault(content, set())
    if is_old and not current:
        raise InvariantViolation(f"old content {content} has no holder")
    if not is_old and current:
        raise InvariantViolation(f"new content {content} already held by {sorted(current)}")

    if cluster is None:
        decision = ServiceDecision(user, content, Route.CELLULAR_WHITE_AREA, ENB, v_c, 0.0, ue)
    elif not is_old:
        decision = ServiceDecision(user, content, Route.CELLULAR_NEW, ENB, v_c, 0.0, ue)
    else:
        members = offsn.clusters[cluster]
        eligible = [
            h for h in current
            if h != ue and h in members and topology.distance(h, ue) <= config.d_max
        ]
        if not eligible:
            decision = ServiceDecision(user, content, Route.CELLULAR_NEW, ENB, v_c, 0.0, ue)
        else:
            best = min(eligible, key=lambda h: (-graph.weight(ue, h), h))
            w = graph.weight(ue, best)
            if u_success < w:
                link = Link(best, ue, 0, content)
                r_d = rate_d2d(LinkSet(d2d=(link,)), params, topology, link)
                decision = ServiceDecision(user, content, Route.D2D_SUCCESS, best, r_d, config.c_c, ue)
            else:
                decision = ServiceDecision(user, content, Route.D2D_FAIL_FALLBACK, ENB, v_c, config.c_c, ue)
    current.add(ue)
    return decision


def _epoch_rates(decisions, topology, params, rng):
    """Assign resource blocks for one user's requests and recompute rates."""
    # all requests of an epoch come from one UE, so every cellular link is in
    # the requester's OffSN (white-area users never get D2D links)
    cell = [Link(ENB, d.ue, i, d.content) for i, d in enumerate(x for x in decisions if x.provider == ENB)]
    d2d = []
    for d in decisions:
        if d.route != Route.D2D_SUCCESS:
            continue
        rb = cell[int(rng.integers(len(cell)))].rb if cell else len(cell)
        d2d.append(Link(d.provider, d.ue, rb, d.content))
    links = LinkSet(tuple(cell), tuple(d2d))
    by_content = {l.tag: l for l in cell + d2d}

    out = []
    for d in decisions:
        link = by_content[d.content]
        if d.route == Route.CELLULAR_WHITE_AREA:
            rate = d.rate_delivered
        elif link.is_cellular:
            rate = rate_cellular(links, params, topology, link)
        else:
            rate = rate_d2d(links, params, topology, link)
        out.append(replace(d, rate_delivered=rate))
    return out


def user_ue(scenario: Scenario, n: int) -> str:
    return scenario.ue_order[(n - 1) % len(scenario.ue_order)]


def run_simulation(config: SimConfig, scenario: Scenario | None = None, keep_decisions=False) -> RunMetrics:
    config.validate()
    rngs = _rngs(config.seed)
    if scenario is None:
        scenario = build_scenario(config, rngs)
    topo, params = scenario.topology, config.channel

    state = ibp_mod.IbpState(config.alpha)
    holders: dict[int, set] = {}
    for _ in range(config.warmup_users):
        out = ibp_mod.ibp_select(state, rngs["ibp"])
        ue = user_ue(scenario, out.user_index)
        for k in out.old_contents | out.new_contents:
            holders.setdefault(k, set()).add(ue)

    metrics = RunMetrics()
    n_d2d = 0
    for _ in range(config.n_users):
        prior_mass = state.prior_mass()
        out = ibp_mod.ibp_select(state, rngs["ibp"])
        n = out.user_index
        ue = user_ue(scenario, n)
        requested = sorted(out.old_contents | out.new_contents)
        u = rngs["d2d"].random(len(requested))
        decisions = [
            serve_request(n, k, k in out.old_contents, scenario.partition, holders, topo,
                          scenario.graph, config, ue, uk)
            for k, uk in zip(requested, u)
        ]
        decisions = _epoch_rates(decisions, topo, params, rngs["rb"])

        d2d_rates = [d.rate_delivered for d in decisions if d.route == Route.D2D_SUCCESS]
        enb_rates = [d.rate_delivered for d in decisions if d.route != Route.D2D_SUCCESS]
        if d2d_rates and len(d2d_rates) > out.m_n_h:
            raise InvariantViolation("more offloaded requests than old contents")
        r_d = float(np.mean(d2d_rates)) if d2d_rates else 0.0
        r_c = float(np.mean(enb_rates)) if enb_rates else rate_interference_free(
            params, topo.gain(ENB, ue, params.path_loss_exponent))
        metrics.utility_per_user.append(enb_utility(prior_mass, r_d, r_c, out.m_n_0, out.m_n, config.c_c))
        metrics.enb_sum_rate += math.fsum(enb_rates)
        metrics.d2d_sum_rate += math.fsum(d2d_rates)
        n_d2d += len(d2d_rates)
        for d in decisions:
            metrics.route_counts[d.route.value] += 1
        if keep_decisions:
            metrics.decisions.extend(decisions)

    total = metrics.total_requests
    metrics.offloaded_fraction = n_d2d / total if total else 0.0
    return metrics


def rep_seed(base_seed: int, rep: int) -> int:
    """Per-repetition seed; shared across sweep values (common random numbers)."""
    return int(np.random.SeedSequence([base_seed, rep]).generate_state(1, dtype=np.uint32)[0])


def _run_row(args):
    config, param, value = args
    m = run_simulation(config)
    return [value, config.seed, m.enb_sum_rate, m.d2d_sum_rate, m.offloaded_fraction, m.mean_utility]


def sweep(config: SimConfig, parameter: str | None, values: Sequence[float], reps: int = 1, workers: int = 1):
    """Rows ``[param_value, seed, enb_sum_rate, d2d_sum_rate, offloaded_fraction, mean_utility]``.

    With ``parameter=None`` a single value (ignored) is expected and the
    configured run is repeated ``reps`` times. A single value with one
    repetition reproduces :func:`run_simulation` with the base seed.
    """
    if parameter is not None and parameter not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {parameter!r}; choose one of {SWEEPABLE}", "sweep.parameter")
    if not values:
        raise ConfigError("sweep needs at least one value", "sweep.values")
    if reps < 1:
        raise ConfigError("reps must be at least 1", "sweep.reps")
    config.validate()

    jobs = []
    for value in values:
        for r in range(reps):
            seed = config.seed if reps == 1 else rep_seed(config.seed, r)
            cfg = replace(config, seed=seed)
            if parameter is not None:
                cfg = replace(cfg, **{parameter: float(value)}).validate()
            jobs.append((cfg, parameter, value))

    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_run_row, jobs))
    else:
        rows = [_run_row(j) for j in jobs]
    order = {float(v): i for i, v in enumerate(values)}
    rows.sort(key=lambda r: (order[float(r[0])], r[1]) if parameter else (0, r[1]))
    return rows


def aggregate(rows):
    """Mean of each metric column per parameter value, in first-seen order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(row[0], []).append(row[2:])
    return [(v, *np.mean(np.asarray(g, dtype=float), axis=0)) for v, g in groups.items()]


def rate_gain(config: SimConfig, reps: int = 5) -> float:
    """Mean rate of a successful D2D delivery, the reference for relative control costs."""
    rates = []
    for r in range(reps):
        m = run_simulation(replace(config, c_c=0.0, seed=rep_seed(config.seed, r)), keep_decisions=True)
        rates += [d.rate_delivered for d in m.decisions if d.route == Route.D2D_SUCCESS]
    return float(np.mean(rates)) if rates else 0.0


def write_results_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for v, seed, enb, d2d, frac, util in rows:
        writer.writerow([repr(float(v)) if v is not None else "", seed, repr(float(enb)), repr(float(d2d)),
                         repr(float(frac)), repr(float(util))])


def write_decisions_csv(decisions, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(DECISION_HEADER)
    for d in decisions:
        writer.writerow([d.user, d.content, d.route.value, d.provider, repr(float(d.rate_delivered)),
                         repr(float(d.control_cost_charged))])
