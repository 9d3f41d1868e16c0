"""Graph data model for pipeline networks.

A network is a connected graph whose edges are pipes or compressors and
whose nodes are either slack nodes (pressure given) or non-slack nodes
(injection given). The model also owns the bookkeeping that maps nodes
and edges to slots of the Newton unknown vector: nodes in id order, then
all edges in id order.

Sign conventions: an edge flow is positive in the declared from->to
direction; a nodal injection is positive when gas enters the network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Union

import numpy as np
import structlog
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

logger = structlog.get_logger()


class Units(str, Enum):
    """Unit system a network or solution is expressed in."""

    SI = "si"
    NONDIMENSIONAL = "nondimensional"


class NodeKind(str, Enum):
    SLACK = "slack"
    NON_SLACK = "nonslack"


@dataclass(frozen=True)
class Node:
    """A junction. Slack nodes carry ``pressure``, others ``injection``."""

    id: str
    kind: NodeKind
    pressure: float | None = None
    injection: float = 0.0
    elevation: float | None = None

    @property
    def is_slack(self) -> bool:
        return self.kind is NodeKind.SLACK


@dataclass(frozen=True)
class PipeEdge:
    """A pipe between two nodes, with constant cross-section."""

    id: str
    from_node: str
    to_node: str
    length: float
    diameter: float
    friction: float
    sin_theta: float = 0.0

    @property
    def area(self) -> float:
        return math.pi * self.diameter * self.diameter / 4.0


@dataclass(frozen=True)
class CompressorEdge:
    """A compressor boosting pressure by ``ratio`` from inlet to outlet."""

    id: str
    from_node: str
    to_node: str
    ratio: float


Edge = Union[PipeEdge, CompressorEdge]


class DiagnosticCode(str, Enum):
    NO_PIPES = "NoPipes"
    NO_SLACK_NODE = "NoSlackNode"
    DISCONNECTED = "Disconnected"
    DUPLICATE_ID = "DuplicateId"
    UNKNOWN_NODE = "UnknownNode"
    SELF_LOOP = "SelfLoop"
    NONPOSITIVE_GEOMETRY = "NonPositiveGeometry"
    NEGATIVE_FRICTION = "NegativeFriction"
    INCLINE_OUT_OF_RANGE = "InclineOutOfRange"
    COMPRESSOR_RATIO = "CompressorRatioBelowOne"
    SLACK_PRESSURE = "NonPositiveSlackPressure"
    MISSING_PRESSURE = "MissingSlackPressure"
    PARALLEL_EDGES = "ParallelEdges"
    REVERSE_COMPRESSOR_FLOW = "ReverseCompressorFlow"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    """A structural finding about a network, tied to one entity."""

    code: DiagnosticCode
    entity: str
    message: str
    severity: Severity = Severity.ERROR

    def format(self) -> str:
        icon = "✗" if self.severity is Severity.ERROR else "⚠"
        return f"{icon} [{self.code.value}] {self.entity}: {self.message}"


@dataclass(frozen=True)
class NetworkStats:
    """Summary numbers for the ``info`` command."""

    nodes: int
    slack_nodes: int
    injection_nodes: int
    pipes: int
    compressors: int
    total_length: float
    unknowns: int
    equations: int


@dataclass(frozen=True)
class Network:
    """Nodes, pipes and compressors of one pipeline system."""

    name: str
    nodes: tuple[Node, ...]
    pipes: tuple[PipeEdge, ...]
    compressors: tuple[CompressorEdge, ...] = ()
    units: Units = Units.SI

    @cached_property
    def node_ids(self) -> list[str]:
        return sorted(n.id for n in self.nodes)

    @cached_property
    def edge_ids(self) -> list[str]:
        return sorted([p.id for p in self.pipes] + [c.id for c in self.compressors])

    @cached_property
    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def edge_map(self) -> dict[str, Edge]:
        edges: dict[str, Edge] = {p.id: p for p in self.pipes}
        edges.update({c.id: c for c in self.compressors})
        return edges

    @cached_property
    def node_slot(self) -> dict[str, int]:
        """Unknown-vector slot of each node (transformed pressure)."""
        return {nid: i for i, nid in enumerate(self.node_ids)}

    @cached_property
    def edge_slot(self) -> dict[str, int]:
        """Unknown-vector slot of each edge (flow), after all node slots."""
        offset = len(self.nodes)
        return {eid: offset + k for k, eid in enumerate(self.edge_ids)}

    @property
    def size(self) -> int:
        """Number of unknowns, |V| + |E|."""
        return len(self.nodes) + len(self.pipes) + len(self.compressors)

    @cached_property
    def slack_nodes(self) -> list[Node]:
        """Slack nodes in declaration order (the first one sets p0)."""
        return [n for n in self.nodes if n.is_slack]

    @cached_property
    def _incidence(self) -> dict[str, tuple[list[Edge], list[Edge]]]:
        table: dict[str, tuple[list[Edge], list[Edge]]] = {n.id: ([], []) for n in self.nodes}
        for eid in self.edge_ids:
            edge = self.edge_map[eid]
            if edge.to_node in table:
                table[edge.to_node][0].append(edge)
            if edge.from_node in table:
                table[edge.from_node][1].append(edge)
        return table

    def incidence(self, node_id: str) -> tuple[list[Edge], list[Edge]]:
        """Return (incoming, outgoing) edges of a node by declared orientation.

        Raises:
            KeyError: If the node id is not in the network.
        """
        if node_id not in self._incidence:
            raise KeyError(f"Unknown node: {node_id!r}")
        incoming, outgoing = self._incidence[node_id]
        return list(incoming), list(outgoing)

    def stats(self) -> NetworkStats:
        n_slack = len(self.slack_nodes)
        return NetworkStats(
            nodes=len(self.nodes),
            slack_nodes=n_slack,
            injection_nodes=sum(1 for n in self.nodes if not n.is_slack and n.injection != 0.0),
            pipes=len(self.pipes),
            compressors=len(self.compressors),
            total_length=float(sum(p.length for p in self.pipes)),
            unknowns=self.size,
            equations=len(self.compressors) + len(self.pipes) + len(self.nodes),
        )

    def with_edge_flipped(self, edge_id: str) -> Network:
        """Return a copy with one edge declared in the opposite direction.

        Pipe inclination changes sign with the direction. Compressors are
        directional devices and cannot be flipped.
        """
        edge = self.edge_map[edge_id]
        if isinstance(edge, CompressorEdge):
            raise ValueError(f"Compressor {edge_id!r} cannot be flipped")
        flipped = PipeEdge(
            id=edge.id, from_node=edge.to_node, to_node=edge.from_node,
            length=edge.length, diameter=edge.diameter, friction=edge.friction,
            sin_theta=-edge.sin_theta,
        )
        pipes = tuple(flipped if p.id == edge_id else p for p in self.pipes)
        return Network(self.name, self.nodes, pipes, self.compressors, self.units)

    def adjacency(self) -> coo_matrix:
        """Symmetric node adjacency matrix in node-slot order."""
        rows, cols = [], []
        for edge in self.edge_map.values():
            if edge.from_node in self.node_slot and edge.to_node in self.node_slot:
                i, j = self.node_slot[edge.from_node], self.node_slot[edge.to_node]
                rows += [i, j]
                cols += [j, i]
        n = len(self.nodes)
        return coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


@dataclass
class PipeProfile:
    """Pressure samples along one pipe (the accepted integration steps)."""

    x: np.ndarray
    p: np.ndarray


@dataclass
class NetworkSolution:
    """Nodal pressures, edge flows and nodal injections of a solved network.

    ``injections`` holds the computed value at slack nodes and the given
    value elsewhere. ``collocation`` optionally keeps the coarse-stage
    solution the final one was started from.
    """

    pressures: dict[str, float]
    flows: dict[str, float]
    injections: dict[str, float]
    units: Units = Units.NONDIMENSIONAL
    profiles: dict[str, PipeProfile] = field(default_factory=dict)
    collocation: NetworkSolution | None = None


def incline_from_elevations(z_from: float, z_to: float, length: float) -> float:
    """sin(theta) of a pipe from its end elevations, clamped to [-1, 1]."""
    return max(-1.0, min(1.0, (z_to - z_from) / length))


def validate(network: Network) -> list[Diagnostic]:
    """Check a network for structural problems.

    Returns an empty list for a well-posed network. Parallel edges only
    produce warnings.
    """
    diags: list[Diagnostic] = []

    seen: set[str] = set()
    for entity in [*network.nodes, *network.pipes, *network.compressors]:
        if entity.id in seen:
            diags.append(Diagnostic(
                DiagnosticCode.DUPLICATE_ID, entity.id, "identifier used twice",
            ))
        seen.add(entity.id)

    if not network.pipes:
        diags.append(Diagnostic(DiagnosticCode.NO_PIPES, network.name, "network has no pipes"))
    if not network.slack_nodes:
        diags.append(Diagnostic(DiagnosticCode.NO_SLACK_NODE, network.name, "no slack node"))

    for node in network.slack_nodes:
        if node.pressure is None:
            diags.append(Diagnostic(
                DiagnosticCode.MISSING_PRESSURE, node.id, "slack node has no pressure",
            ))
        elif not node.pressure > 0:
            diags.append(Diagnostic(
                DiagnosticCode.SLACK_PRESSURE, node.id, f"slack pressure {node.pressure!r} <= 0",
            ))

    pairs: dict[frozenset[str], list[str]] = {}
    for edge in network.edge_map.values():
        for end in (edge.from_node, edge.to_node):
            if end not in network.node_map:
                diags.append(Diagnostic(
                    DiagnosticCode.UNKNOWN_NODE, edge.id, f"unknown node {end!r}",
                ))
        if edge.from_node == edge.to_node:
            diags.append(Diagnostic(
                DiagnosticCode.SELF_LOOP, edge.id, "edge starts and ends at one node",
            ))
        pairs.setdefault(frozenset((edge.from_node, edge.to_node)), []).append(edge.id)

    for pipe in network.pipes:
        if not (pipe.length > 0 and pipe.diameter > 0):
            diags.append(Diagnostic(
                DiagnosticCode.NONPOSITIVE_GEOMETRY, pipe.id,
                f"length={pipe.length!r}, diameter={pipe.diameter!r}",
            ))
        if pipe.friction < 0:
            diags.append(Diagnostic(
                DiagnosticCode.NEGATIVE_FRICTION, pipe.id, f"friction={pipe.friction!r}",
            ))
        if abs(pipe.sin_theta) > 1:
            diags.append(Diagnostic(
                DiagnosticCode.INCLINE_OUT_OF_RANGE, pipe.id, f"sin_theta={pipe.sin_theta!r}",
            ))

    for comp in network.compressors:
        if not comp.ratio >= 1:
            diags.append(Diagnostic(
                DiagnosticCode.COMPRESSOR_RATIO, comp.id, f"ratio={comp.ratio!r} < 1",
            ))

    for ids in pairs.values():
        if len(ids) > 1:
            diags.append(Diagnostic(
                DiagnosticCode.PARALLEL_EDGES, ",".join(sorted(ids)),
                "edges share the same end nodes", Severity.WARNING,
            ))

    dangling = any(d.code is DiagnosticCode.UNKNOWN_NODE for d in diags)
    if network.nodes and not dangling:
        n_comp, _ = connected_components(network.adjacency(), directed=False)
        if n_comp > 1:
            diags.append(Diagnostic(
                DiagnosticCode.DISCONNECTED, network.name, f"graph has {n_comp} components",
            ))

    logger.debug("network_validated", network=network.name, diagnostics=len(diags))
    return diags


def errors_only(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity is Severity.ERROR]


def net_outflow(network: Network, flows: dict[str, float], node_id: str) -> float:
    """Sum of outgoing minus incoming edge flows at a node."""
    incoming, outgoing = network.incidence(node_id)
    return sum(flows[e.id] for e in outgoing) - sum(flows[e.id] for e in incoming)


def slack_injection(network: Network, solution: NetworkSolution) -> dict[str, float]:
    """Injection at each slack node implied by the solved edge flows."""
    return {n.id: net_outflow(network, solution.flows, n.id) for n in network.slack_nodes}


def balance_residuals(network: Network, flows: dict[str, float]) -> dict[str, float]:
    """Mass-balance residual at every non-slack node."""
    return {
        n.id: net_outflow(network, flows, n.id) - n.injection
        for n in network.nodes if not n.is_slack
    }


def global_balance(network: Network, solution: NetworkSolution) -> float:
    """Sum of all nodal injections, computed and specified; zero when conserved."""
    slack = slack_injection(network, solution)
    return sum(slack.values()) + sum(n.injection for n in network.nodes if not n.is_slack)


def flow_diagnostics(network: Network, solution: NetworkSolution) -> list[Diagnostic]:
    """Warnings about a solved network, such as flow against a compressor."""
    return [
        Diagnostic(
            DiagnosticCode.REVERSE_COMPRESSOR_FLOW, comp.id,
            f"flow {solution.flows[comp.id]:.6g} runs against the boost direction",
            Severity.WARNING,
        )
        for comp in network.compressors if solution.flows.get(comp.id, 0.0) < 0
    ]


def tree_flows(network: Network, circulation: float = 0.0) -> dict[str, float]:
    """Edge flows that satisfy every non-slack balance using a spanning tree.

    The tree is grown breadth-first from the first slack node, which
    absorbs the net injection; other slack nodes are treated as passive.
    Chords carry zero flow unless ``circulation`` is nonzero: then that
    amount circulates around the fundamental cycle of every chord and
    runs from the first slack node to every other slack node. Both keep
    every non-slack balance satisfied.
    """
    flows = {eid: 0.0 for eid in network.edge_ids}
    if not network.slack_nodes:
        return flows

    root = network.node_slot[network.slack_nodes[0].id]
    order, predecessors = breadth_first_order(
        network.adjacency().tocsr(), root, directed=False, return_predecessors=True,
    )

    by_pair: dict[tuple[str, str], Edge] = {}
    for eid in network.edge_ids:
        edge = network.edge_map[eid]
        by_pair.setdefault((edge.from_node, edge.to_node), edge)

    ids = network.node_ids
    subtree = {
        nid: (0.0 if network.node_map[nid].is_slack else network.node_map[nid].injection)
        for nid in ids
    }
    # child -> (edge to parent, +1 if declared child -> parent)
    uplink: dict[str, tuple[Edge, float]] = {}
    for slot in order[::-1]:
        if slot == root:
            continue
        child, parent = ids[slot], ids[predecessors[slot]]
        if (child, parent) in by_pair:
            uplink[child] = (by_pair[(child, parent)], 1.0)
        else:
            uplink[child] = (by_pair[(parent, child)], -1.0)
        edge, sign = uplink[child]
        flows[edge.id] = sign * subtree[child]
        subtree[parent] += subtree[child]

    if circulation == 0.0:
        return flows

    depth = {ids[root]: 0}
    for slot in order:
        if slot != root:
            depth[ids[slot]] = depth[ids[predecessors[slot]]] + 1

    def push(source: str, target: str, amount: float) -> None:
        """Send ``amount`` from source to target along the tree path."""
        x, y = source, target
        while x != y:
            if depth[x] >= depth[y]:
                edge, sign = uplink[x]
                flows[edge.id] += sign * amount
                x = edge.to_node if edge.from_node == x else edge.from_node
            else:
                edge, sign = uplink[y]
                flows[edge.id] -= sign * amount
                y = edge.to_node if edge.from_node == y else edge.from_node

    tree_edges = {edge.id for edge, _ in uplink.values()}
    for eid in network.edge_ids:
        edge = network.edge_map[eid]
        if eid in tree_edges or edge.from_node not in depth or edge.to_node not in depth:
            continue
        flows[eid] += circulation
        push(edge.to_node, edge.from_node, circulation)
    for node in network.slack_nodes[1:]:
        if node.id in depth:
            push(ids[root], node.id, circulation)
    return flows
