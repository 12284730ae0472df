# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Virtual node-splitting of a network into a homogeneous graph.

Every bus becomes a real node and every generator its own virtual node hung
off the bus it is attached to, so generator attributes get a feature row of
their own. Real nodes come first in bus-id order, then virtual nodes in
generator-id order.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from grid import LoadVector, Network

logger = logging.getLogger(__name__)

FEATURE_COLUMNS = (
    "load_pu",
    "is_real",
    "pmax_pu",
    "pmin_pu",
    "cost_norm",
    "ramp_norm",
    "cong_mean",
    "cong_max",
)
N_FEATURES = len(FEATURE_COLUMNS)
_LOAD, _IS_REAL, _PMAX, _PMIN, _COST, _RAMP, _CONG_MEAN, _CONG_MAX = range(N_FEATURES)


class FeatureError(ValueError):
    """Line probabilities do not cover the network or are out of range."""


@dataclass(frozen=True)
class ExpandedGraph:
    """The node-split graph and its index maps back to the network."""

    n_nodes: int
    real_node_of_bus: Dict[int, int]
    virtual_node_of_gen: Dict[int, int]
    edges: Tuple[Tuple[int, int], ...]
    line_of_edge: Dict[int, int]

    @property
    def n_real(self) -> int:
        """Number of real (bus) nodes."""
        return len(self.real_node_of_bus)

    def adjacency(self) -> np.ndarray:
        """0/1 adjacency matrix; parallel lines collapse to a single entry."""
        matrix = np.zeros((self.n_nodes, self.n_nodes))
        for u, v in self.edges:
            matrix[u, v] = matrix[v, u] = 1.0
        return matrix


def expand(net: Network) -> ExpandedGraph:
    """Split every generator onto its own virtual node.

    The edge list holds one edge per line (between the endpoint real nodes,
    in line-id order) followed by one edge per generator (virtual node to its
    bus's real node, in generator-id order).
    """
    real_node_of_bus = {bus_id: i for i, bus_id in enumerate(net.bus_ids)}
    n_real = len(real_node_of_bus)
    virtual_node_of_gen = {gen_id: n_real + i for i, gen_id in enumerate(net.gen_ids)}

    lines = net.line_map()
    gens = net.gen_map()
    edges: List[Tuple[int, int]] = []
    line_of_edge: Dict[int, int] = {}
    for line_id in net.line_ids:
        line = lines[line_id]
        line_of_edge[len(edges)] = line_id
        edges.append((real_node_of_bus[line.from_bus], real_node_of_bus[line.to_bus]))
    for gen_id in net.gen_ids:
        edges.append((virtual_node_of_gen[gen_id], real_node_of_bus[gens[gen_id].bus]))

    graph = ExpandedGraph(
        n_nodes=n_real + len(virtual_node_of_gen),
        real_node_of_bus=real_node_of_bus,
        virtual_node_of_gen=virtual_node_of_gen,
        edges=tuple(edges),
        line_of_edge=line_of_edge,
    )
    logger.debug(
        "Expanded %s into %d nodes and %d edges", net.name, graph.n_nodes, len(graph.edges)
    )
    return graph


def normalize_adjacency(graph: ExpandedGraph) -> np.ndarray:
    """Symmetric normalization with self-loops: D^-1/2 (A + I) D^-1/2."""
    a_hat = graph.adjacency() + np.eye(graph.n_nodes)
    inv_sqrt_degree = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt_degree[:, None] * inv_sqrt_degree[None, :]


def line_endpoints(graph: ExpandedGraph, net: Network) -> Tuple[np.ndarray, np.ndarray]:
    """Real-node indices of the sending and receiving ends, in line-id order."""
    lines = net.line_map()
    from_nodes = [graph.real_node_of_bus[lines[k].from_bus] for k in net.line_ids]
    to_nodes = [graph.real_node_of_bus[lines[k].to_bus] for k in net.line_ids]
    return np.array(from_nodes, dtype=int), np.array(to_nodes, dtype=int)


def gen_nodes(graph: ExpandedGraph, net: Network) -> np.ndarray:
    """Virtual-node indices in generator-id order."""
    return np.array([graph.virtual_node_of_gen[g] for g in net.gen_ids], dtype=int)


def _static_features(graph: ExpandedGraph, net: Network) -> np.ndarray:
    features = np.zeros((graph.n_nodes, N_FEATURES))
    base = net.base_mva
    gens = net.gen_map()
    max_cost = max((g.cost_per_mwh for g in net.generators), default=0.0) or 1.0
    max_ramp = max((g.ramp_mw_per_min for g in net.generators), default=0.0) or 1.0

    features[list(graph.real_node_of_bus.values()), _IS_REAL] = 1.0
    for gen_id, node in graph.virtual_node_of_gen.items():
        gen = gens[gen_id]
        features[node, _PMAX] = gen.pmax_mw / base
        features[node, _PMIN] = gen.pmin_mw / base
        features[node, _COST] = gen.cost_per_mwh / max_cost
        features[node, _RAMP] = gen.ramp_mw_per_min / max_ramp
    return features


def _congestion_columns(
    graph: ExpandedGraph, net: Network, line_probs: Mapping[int, float]
) -> np.ndarray:
    missing = sorted(set(net.line_ids) - set(line_probs))
    if missing:
        raise FeatureError(f"line_probs missing lines {missing}")
    out_of_range = sorted(k for k in net.line_ids if not 0.0 <= line_probs[k] <= 1.0)
    if out_of_range:
        raise FeatureError(f"line_probs outside [0, 1] for lines {out_of_range}")

    lines = net.line_map()
    incident: Dict[int, List[float]] = {bus_id: [] for bus_id in net.bus_ids}
    for k in net.line_ids:
        incident[lines[k].from_bus].append(line_probs[k])
        incident[lines[k].to_bus].append(line_probs[k])

    columns = np.zeros((graph.n_nodes, 2))
    for bus_id, probs in incident.items():
        if probs:
            columns[graph.real_node_of_bus[bus_id]] = (float(np.mean(probs)), max(probs))
    gens = net.gen_map()
    for gen_id, node in graph.virtual_node_of_gen.items():
        columns[node] = columns[graph.real_node_of_bus[gens[gen_id].bus]]
    return columns


def build_features(
    graph: ExpandedGraph,
    loads: LoadVector,
    net: Network,
    line_probs: Optional[Mapping[int, float]] = None,
) -> np.ndarray:
    """Raw (unstandardized) feature matrix, one row per node.

    Without line_probs the congestion columns are zero (stage-1 layout); with
    them each real node carries the mean and max probability of its incident
    lines and each virtual node copies its parent's values.

    Raises:
        FeatureError: If line_probs is incomplete or out of range.
    """
    features = _static_features(graph, net)
    for bus_id, node in graph.real_node_of_bus.items():
        features[node, _LOAD] = loads[bus_id] / net.base_mva
    if line_probs is not None:
        features[:, _CONG_MEAN : _CONG_MAX + 1] = _congestion_columns(graph, net, line_probs)
    return features


def feature_batch(
    graph: ExpandedGraph,
    net: Network,
    load_vectors: Sequence[LoadVector],
    line_probs: Optional[Sequence[Mapping[int, float]]] = None,
) -> np.ndarray:
    """Stack per-sample feature matrices into a (samples, nodes, features) array."""
    static = _static_features(graph, net)
    real_nodes = np.array([graph.real_node_of_bus[b] for b in net.bus_ids], dtype=int)
    batch = np.repeat(static[None, :, :], len(load_vectors), axis=0)
    for s, loads in enumerate(load_vectors):
        batch[s, real_nodes, _LOAD] = [loads[b] / net.base_mva for b in net.bus_ids]
        if line_probs is not None:
            batch[s, :, _CONG_MEAN : _CONG_MAX + 1] = _congestion_columns(
                graph, net, line_probs[s]
            )
    return batch


def has_congestion_features(features: np.ndarray) -> bool:
    """Whether any congestion column is nonzero (stage-2 layout)."""
    return bool(np.any(features[..., _CONG_MEAN : _CONG_MAX + 1] != 0.0))
