"""Node placement, path-loss gains and SINR rates for cellular and D2D links.

Rates are spectral efficiencies in bits/s/Hz. Powers and noise are linear
(watts). The channel is deterministic path loss ``max(d, 1 m) ** -eta``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError

ENB = "eNB"
REFERENCE_DISTANCE = 1.0


@dataclass(frozen=True)
class ChannelParams:
    p_enb: float = 20.0
    p_d2d: float = 0.1
    noise: float = 1e-10
    path_loss_exponent: float = 3.5
    d2d_power: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.p_enb > 0 and self.p_d2d > 0 and self.noise > 0):
            raise ConfigError("powers and noise must be strictly positive", "channel")
        if not 2 <= self.path_loss_exponent <= 6:
            raise ConfigError("path_loss_exponent must lie in [2, 6]", "channel.path_loss_exponent")
        if any(p <= 0 for p in self.d2d_power.values()):
            raise ConfigError("per-UE D2D powers must be positive", "channel.d2d_power")

    def tx_power(self, node) -> float:
        if node == ENB:
            return self.p_enb
        return self.d2d_power.get(node, self.p_d2d)


@dataclass(frozen=True)
class Hotspot:
    center: tuple[float, float]
    radius: float
    fraction: float


@dataclass(frozen=True)
class Topology:
    cell_radius: float
    ue_positions: Mapping[str, tuple[float, float]]
    hotspots: tuple[Hotspot, ...] = ()
    enb_position: tuple[float, float] = (0.0, 0.0)

    def position(self, node):
        if node == ENB:
            return self.enb_position
        return self.ue_positions[node]

    def distance(self, a, b) -> float:
        pa, pb = self.position(a), self.position(b)
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def gain(self, a, b, eta) -> float:
        return channel_gain(self.position(a), self.position(b), eta)


def _uniform_disk(rng, center, radius):
    r = radius * math.sqrt(rng.random())
    t = 2 * math.pi * rng.random()
    return (center[0] + r * math.cos(t), center[1] + r * math.sin(t))


def _allocate(n, fractions):
    target = [f * n for f in fractions]
    counts = [int(math.floor(t)) for t in target]
    wanted = min(n, int(round(sum(target))))
    order = sorted(range(len(target)), key=lambda i: (counts[i] - target[i], i))
    for i in order[: max(0, wanted - sum(counts))]:
        counts[i] += 1
    return counts


def place_nodes(
    ue_ids: int | Sequence[str],
    cell_radius: float,
    hotspots: Sequence[Hotspot],
    rng: np.random.Generator,
    min_separation: float = 1e-3,
) -> Topology:
    """Scatter UEs: hotspot members uniformly in their disk, the rest in the cell.

    ``ue_ids`` is either a count (ids become ``ue0``, ``ue1``, ...) or an
    explicit sequence; UEs are assigned to hotspots in that order.
    """
    if isinstance(ue_ids, int):
        ue_ids = [f"ue{i}" for i in range(ue_ids)]
    ue_ids = list(ue_ids)
    if not ue_ids:
        raise ConfigError("need at least one UE", "n_ues")
    if not cell_radius > 0:
        raise ConfigError("cell_radius must be positive", "cell_radius")
    for i, h in enumerate(hotspots):
        if not h.radius > 0 or not 0 <= h.fraction <= 1:
            raise ConfigError("hotspot radius must be > 0 and fraction in [0, 1]", f"hotspots[{i}]")
        if math.hypot(*h.center) + h.radius > cell_radius:
            raise ConfigError("hotspot disk extends beyond the cell", f"hotspots[{i}]")
    if sum(h.fraction for h in hotspots) > 1 + 1e-9:
        raise ConfigError("hotspot fractions sum above 1", "hotspots")

    counts = _allocate(len(ue_ids), [h.fraction for h in hotspots])
    areas = []
    for h, c in zip(hotspots, counts):
        areas += [(h.center, h.radius)] * c
    areas += [((0.0, 0.0), cell_radius)] * (len(ue_ids) - len(areas))

    positions: dict[str, tuple[float, float]] = {}
    taken = [(0.0, 0.0)]
    for ue, (center, radius) in zip(ue_ids, areas):
        for _ in range(10000):
            p = _uniform_disk(rng, center, radius)
            if all(math.hypot(p[0] - q[0], p[1] - q[1]) >= min_separation for q in taken):
                break
        else:
            raise ConfigError("could not place UEs with the requested separation", "placement")
        positions[ue] = p
        taken.append(p)
    return Topology(float(cell_radius), positions, tuple(hotspots))


def channel_gain(a, b, eta: float) -> float:
    d = math.hypot(a[0] - b[0], a[1] - b[1])
    if d == 0:
        raise DomainError("coincident points have no defined path loss")
    return max(d, REFERENCE_DISTANCE) ** -eta


@dataclass(frozen=True)
class Link:
    tx: str
    rx: str
    rb: int
    tag: Hashable = None

    @property
    def is_cellular(self) -> bool:
        return self.tx == ENB


@dataclass(frozen=True)
class LinkSet:
    """Active links; two links interfere (beta = 1) iff they share a resource block."""

    cellular: tuple[Link, ...] = ()
    d2d: tuple[Link, ...] = ()

    def __post_init__(self):
        if any(not l.is_cellular for l in self.cellular):
            raise DomainError("cellular links must originate at the eNB")
        if any(l.is_cellular or l.tx == l.rx for l in self.d2d):
            raise DomainError("D2D links join two distinct UEs")
        if {l.tx for l in self.d2d} & {l.rx for l in self.d2d}:
            raise DomainError("a UE cannot be both D2D transmitter and receiver")

    def beta(self, a: Link, b: Link) -> int:
        return int(a != b and a.rb == b.rb)


def sinr_rate(signal: float, interference: float, noise: float) -> float:
    return math.log2(1.0 + signal / (interference + noise))


def rate_cellular(links: LinkSet, params: ChannelParams, topo: Topology, link: Link) -> float:
    eta = params.path_loss_exponent
    signal = params.p_enb * topo.gain(ENB, link.rx, eta)
    interference = sum(
        params.tx_power(d.tx) * topo.gain(d.tx, link.rx, eta)
        for d in links.d2d
        if links.beta(link, d)
    )
    return sinr_rate(signal, interference, params.noise)


def rate_d2d(links: LinkSet, params: ChannelParams, topo: Topology, link: Link) -> float:
    eta = params.path_loss_exponent
    signal = params.tx_power(link.tx) * topo.gain(link.tx, link.rx, eta)
    interference = params.p_enb * topo.gain(ENB, link.rx, eta)
    interference += sum(
        params.tx_power(d.tx) * topo.gain(d.tx, link.rx, eta)
        for d in links.d2d
        if links.beta(link, d)
    )
    return sinr_rate(signal, interference, params.noise)


def rate_interference_free(params: ChannelParams, gain: float) -> float:
    return math.log2(1.0 + params.p_enb * gain / params.noise)


def write_topology_csv(topo: Topology, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["ue_id", "x", "y"])
    for ue in sorted(topo.ue_positions):
        x, y = topo.ue_positions[ue]
        writer.writerow([ue, repr(x), repr(y)])
