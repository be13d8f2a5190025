"""Contact-duration Gamma model, closeness weights and OffSN clustering."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import networkx as nx
import numpy as np

from . import kernels
from .errors import DegenerateFit, DomainError
from .trace import ContactStats, canonical_pair


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError(f"Gamma parameters must be positive, got {self}")

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def var(self):
        return self.shape * self.scale**2


def fit_gamma(stats: ContactStats) -> GammaParams:
    """Method-of-moments Gamma fit: shape = M^2 / I, scale = I / M.

    Raises :class:`DegenerateFit` when the variance is zero.
    """
    m, v = stats.mean_duration, stats.var_duration
    if not m > 0:
        raise DomainError(f"mean contact duration must be positive, got {m}")
    if v == 0:
        raise DegenerateFit(m)
    return GammaParams(m * m / v, v / m)


def fit_gamma_samples(samples) -> GammaParams:
    """Moment fit straight from raw durations (population variance)."""
    x = np.asarray(samples, dtype=float)
    m = float(x.mean())
    v = float(((x - m) ** 2).mean())
    if v == 0:
        raise DegenerateFit(m)
    return GammaParams(m * m / v, v / m)


def regularized_lower_incomplete_gamma(shape: float, x: float) -> float:
    """P(shape, x) = gamma(shape, x) / Gamma(shape)."""
    if not shape > 0:
        raise DomainError(f"shape must be positive, got {shape}")
    if not x >= 0:
        raise DomainError(f"x must be non-negative, got {x}")
    if math.isinf(x):
        return 1.0
    return kernels.gammainc_lower(float(shape), float(x))


def contact_pdf(params: GammaParams, x: float) -> float:
    if x < 0:
        raise DomainError(f"duration must be non-negative, got {x}")
    k, theta = params.shape, params.scale
    if x == 0:
        if k < 1:
            return math.inf
        return 1.0 / theta if k == 1 else 0.0
    return math.exp((k - 1) * math.log(x) - x / theta - k * math.log(theta) - math.lgamma(k))


def closeness(params: GammaParams | float, x_min: float) -> float:
    """Probability that a contact lasts at least ``x_min`` seconds.

    ``params`` is either a Gamma fit or, for zero-variance pairs, the
    deterministic mean duration, in which case the weight is a step.
    """
    if x_min < 0:
        raise DomainError(f"x_min must be non-negative, got {x_min}")
    if not isinstance(params, GammaParams):
        return 1.0 if params >= x_min else 0.0
    if x_min == 0:
        return 1.0
    w = 1.0 - regularized_lower_incomplete_gamma(params.shape, x_min / params.scale)
    return min(max(w, 0.0), 1.0)


def pair_closeness(stats: ContactStats, x_min: float) -> float:
    try:
        params = fit_gamma(stats)
    except DegenerateFit as exc:
        return closeness(exc.mean, x_min)
    return closeness(params, x_min)


@dataclass(frozen=True)
class ClosenessGraph:
    nodes: frozenset
    edges: Mapping[tuple, float] = field(default_factory=dict)

    def weight(self, a, b) -> float:
        if a == b:
            return 0.0
        return self.edges.get(canonical_pair(a, b), 0.0)

    def neighbors(self, a):
        for (i, j), w in self.edges.items():
            if i == a:
                yield j, w
            elif j == a:
                yield i, w


def build_closeness_graph(
    stats: Mapping[tuple, ContactStats], x_min: float, n_min: int = 2
) -> ClosenessGraph:
    if x_min < 0:
        raise DomainError(f"x_min must be non-negative, got {x_min}")
    if n_min < 1:
        raise DomainError(f"n_min must be at least 1, got {n_min}")
    nodes = set()
    edges = {}
    for pair in sorted(stats):
        s = stats[pair]
        nodes.update(s.pair)
        if s.n_encounters >= n_min:
            edges[s.pair] = pair_closeness(s, x_min)
    return ClosenessGraph(frozenset(nodes), edges)


@dataclass(frozen=True)
class OffsnPartition:
    clusters: tuple[frozenset, ...]
    white_nodes: frozenset
    threshold: float

    def cluster_of(self, node):
        """Index of the cluster holding ``node``, or None for white-area nodes."""
        for idx, c in enumerate(self.clusters):
            if node in c:
                return idx
        return None

    def to_json(self) -> dict:
        return {
            "clusters": [sorted(c) for c in self.clusters],
            "white": sorted(self.white_nodes),
            "w_T": self.threshold,
        }

    @classmethod
    def from_json(cls, obj) -> "OffsnPartition":
        return cls(
            tuple(frozenset(c) for c in obj["clusters"]),
            frozenset(obj["white"]),
            float(obj["w_T"]),
        )


def build_offsn(graph: ClosenessGraph, w_T: float) -> OffsnPartition:
    """Connected components (size >= 2) of the graph thresholded at ``w_T``."""
    if not 0 <= w_T <= 1:
        raise DomainError(f"w_T must lie in [0, 1], got {w_T}")
    g = nx.Graph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from(pair for pair, w in graph.edges.items() if w >= w_T)
    clusters, white = [], set()
    for comp in nx.connected_components(g):
        if len(comp) >= 2:
            clusters.append(frozenset(comp))
        else:
            white.update(comp)
    clusters.sort(key=lambda c: min(c))
    return OffsnPartition(tuple(clusters), frozenset(white), float(w_T))


def write_graph_csv(graph: ClosenessGraph, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["node_i", "node_j", "weight"])
    for (i, j) in sorted(graph.edges):
        writer.writerow([i, j, repr(float(graph.edges[(i, j)]))])


def read_graph_csv(fh) -> ClosenessGraph:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != ["node_i", "node_j", "weight"]:
        raise DomainError(f"bad graph header {header!r}")
    nodes, edges = set(), {}
    for row in reader:
        if not row:
            continue
        if len(row) != 3:
            raise DomainError(f"line {reader.line_num}: expected 3 fields")
        i, j = row[0], row[1]
        try:
            w = float(row[2])
        except ValueError:
            raise DomainError(f"line {reader.line_num}: non-numeric weight") from None
        if i == j or not 0 <= w <= 1:
            raise DomainError(f"line {reader.line_num}: invalid edge")
        nodes.update((i, j))
        edges[canonical_pair(i, j)] = w
    return ClosenessGraph(frozenset(nodes), edges)


def write_partition_json(partition: OffsnPartition, fh) -> None:
    json.dump(partition.to_json(), fh, indent=2, sort_keys=True)
    fh.write("\n")
