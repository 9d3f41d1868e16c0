"""Tests for the network data model and structural validation."""

from __future__ import annotations

from dataclasses import replace

import pytest

from gasflow.network.model import (
    CompressorEdge,
    DiagnosticCode,
    Network,
    NetworkSolution,
    Node,
    NodeKind,
    PipeEdge,
    Severity,
    balance_residuals,
    errors_only,
    flow_diagnostics,
    global_balance,
    incline_from_elevations,
    slack_injection,
    tree_flows,
    validate,
)


def codes(network: Network) -> set[DiagnosticCode]:
    return {d.code for d in validate(network)}


def two_node(**pipe_kwargs) -> Network:
    fields = dict(length=1000.0, diameter=0.5, friction=0.01)
    fields.update(pipe_kwargs)
    return Network(
        "pair",
        (Node("a", NodeKind.SLACK, pressure=5.0e6), Node("b", NodeKind.NON_SLACK, injection=-1.0)),
        (PipeEdge("p", "a", "b", **fields),),
    )


class TestValidate:
    def test_well_posed(self, five_node: Network) -> None:
        assert validate(five_node) == []

    def test_no_slack(self, five_node: Network) -> None:
        nodes = tuple(replace(n, kind=NodeKind.NON_SLACK, pressure=None) for n in five_node.nodes)
        assert DiagnosticCode.NO_SLACK_NODE in codes(replace(five_node, nodes=nodes))

    def test_disconnected(self, five_node: Network) -> None:
        island = Node("z", NodeKind.NON_SLACK)
        diags = validate(replace(five_node, nodes=(*five_node.nodes, island)))
        assert [d.code for d in diags] == [DiagnosticCode.DISCONNECTED]
        assert "2 components" in diags[0].message

    def test_unknown_node_and_self_loop(self, five_node: Network) -> None:
        pipes = (
            *five_node.pipes,
            PipeEdge("px", "a", "nowhere", 10.0, 0.1, 0.01),
            PipeEdge("py", "b", "b", 10.0, 0.1, 0.01),
        )
        found = codes(replace(five_node, pipes=pipes))
        assert DiagnosticCode.UNKNOWN_NODE in found
        assert DiagnosticCode.SELF_LOOP in found
        assert DiagnosticCode.DISCONNECTED not in found

    def test_duplicate_ids(self, five_node: Network) -> None:
        dup = replace(five_node.pipes[0], from_node="b", to_node="d")
        network = replace(five_node, pipes=(*five_node.pipes, dup))
        assert DiagnosticCode.DUPLICATE_ID in codes(network)

    @pytest.mark.parametrize(
        "kwargs, code",
        [
            ({"length": 0.0}, DiagnosticCode.NONPOSITIVE_GEOMETRY),
            ({"diameter": -1.0}, DiagnosticCode.NONPOSITIVE_GEOMETRY),
            ({"friction": -0.1}, DiagnosticCode.NEGATIVE_FRICTION),
            ({"sin_theta": 1.2}, DiagnosticCode.INCLINE_OUT_OF_RANGE),
        ],
    )
    def test_pipe_data(self, kwargs: dict, code: DiagnosticCode) -> None:
        assert code in codes(two_node(**kwargs))

    def test_slack_pressure(self) -> None:
        net = two_node()
        missing = replace(net, nodes=(Node("a", NodeKind.SLACK), net.nodes[1]))
        negative = replace(net, nodes=(Node("a", NodeKind.SLACK, pressure=-1.0), net.nodes[1]))
        assert DiagnosticCode.MISSING_PRESSURE in codes(missing)
        assert DiagnosticCode.SLACK_PRESSURE in codes(negative)

    def test_compressor_ratio(self, five_node: Network) -> None:
        comp = replace(five_node.compressors[0], ratio=0.9)
        assert DiagnosticCode.COMPRESSOR_RATIO in codes(replace(five_node, compressors=(comp,)))

    def test_no_pipes(self) -> None:
        net = replace(two_node(), pipes=(), compressors=(CompressorEdge("c", "a", "b", 1.1),))
        assert codes(net) == {DiagnosticCode.NO_PIPES}

    def test_parallel_edges_only_warn(self) -> None:
        net = two_node()
        net = replace(net, pipes=(*net.pipes, PipeEdge("q", "b", "a", 500.0, 0.3, 0.01)))
        diags = validate(net)
        assert [d.code for d in diags] == [DiagnosticCode.PARALLEL_EDGES]
        assert diags[0].severity is Severity.WARNING
        assert diags[0].entity == "p,q"
        assert errors_only(diags) == []

    def test_format(self) -> None:
        diag = validate(two_node(friction=-1.0))[0]
        assert diag.format().startswith("✗ [NegativeFriction] p:")


class TestStructure:
    def test_slots_follow_id_order(self, five_node: Network) -> None:
        assert five_node.node_ids == ["a", "b", "c", "d", "s"]
        assert five_node.node_slot["s"] == 4
        assert five_node.edge_ids == ["c1", "p1", "p2", "p3", "p4"]
        assert five_node.edge_slot["c1"] == 5
        assert five_node.edge_slot["p4"] == 9
        assert five_node.size == 10

    def test_incidence(self, five_node: Network) -> None:
        incoming, outgoing = five_node.incidence("c")
        assert sorted(e.id for e in incoming) == ["p2", "p3"]
        assert [e.id for e in outgoing] == ["p4"]
        with pytest.raises(KeyError, match="nowhere"):
            five_node.incidence("nowhere")

    def test_stats(self, five_node: Network) -> None:
        stats = five_node.stats()
        assert (stats.nodes, stats.slack_nodes, stats.injection_nodes) == (5, 1, 3)
        assert (stats.pipes, stats.compressors) == (4, 1)
        assert stats.total_length == 70_000.0
        assert stats.unknowns == stats.equations == 10

    def test_flip_pipe(self, five_node: Network) -> None:
        flipped = five_node.with_edge_flipped("p2")
        pipe = flipped.edge_map["p2"]
        original = five_node.edge_map["p2"]
        assert (pipe.from_node, pipe.to_node) == ("c", "b")
        assert pipe.sin_theta == -original.sin_theta
        assert validate(flipped) == []

    def test_flip_compressor(self, five_node: Network) -> None:
        with pytest.raises(ValueError, match="cannot be flipped"):
            five_node.with_edge_flipped("c1")

    def test_incline_is_clamped(self) -> None:
        assert incline_from_elevations(0.0, 50.0, 1000.0) == pytest.approx(0.05)
        assert incline_from_elevations(0.0, 50.0, 10.0) == 1.0
        assert incline_from_elevations(50.0, 0.0, 10.0) == -1.0


class TestBalance:
    def test_tree_flows_satisfy_balance(self, five_node: Network) -> None:
        flows = tree_flows(five_node)
        assert all(abs(r) < 1e-12 for r in balance_residuals(five_node, flows).values())
        # chord of the a-b-c loop carries nothing
        assert sum(1 for v in flows.values() if v == 0.0) == 1
        assert flows["c1"] == pytest.approx(45.0)

    def test_tree_flows_respect_orientation(self, five_node: Network) -> None:
        flipped = five_node.with_edge_flipped("p4")
        flows = tree_flows(flipped)
        assert flows["p4"] == pytest.approx(-15.0)
        assert all(abs(r) < 1e-12 for r in balance_residuals(flipped, flows).values())

    def test_circulation_around_chords(self, five_node: Network) -> None:
        flows = tree_flows(five_node, circulation=0.5)
        assert all(abs(r) < 1e-12 for r in balance_residuals(five_node, flows).values())
        assert flows["p2"] == pytest.approx(0.5)
        assert flows["p1"] == pytest.approx(20.5)
        assert flows["p3"] == pytest.approx(24.5)
        assert flows["c1"] == pytest.approx(45.0)

    def test_circulation_between_slack_nodes(self) -> None:
        network = Network(
            "two-supplies",
            (
                Node("s1", NodeKind.SLACK, pressure=5.0e6),
                Node("a", NodeKind.NON_SLACK),
                Node("s2", NodeKind.SLACK, pressure=5.0e6),
            ),
            (
                PipeEdge("p1", "s1", "a", 1000.0, 0.5, 0.01),
                PipeEdge("p2", "s2", "a", 1000.0, 0.5, 0.01),
            ),
        )
        assert tree_flows(network) == {"p1": 0.0, "p2": 0.0}
        flows = tree_flows(network, circulation=0.5)
        assert flows == {"p1": pytest.approx(0.5), "p2": pytest.approx(-0.5)}
        assert balance_residuals(network, flows) == {"a": pytest.approx(0.0)}

    def test_global_balance(self, five_node: Network) -> None:
        flows = tree_flows(five_node)
        solution = NetworkSolution(pressures={}, flows=flows, injections={})
        assert slack_injection(five_node, solution) == {"s": pytest.approx(45.0)}
        assert global_balance(five_node, solution) == pytest.approx(0.0, abs=1e-12)

    def test_reverse_compressor_flow_warns(self, five_node: Network) -> None:
        flows = {eid: 0.0 for eid in five_node.edge_ids}
        assert flow_diagnostics(five_node, NetworkSolution({}, flows, {})) == []
        flows["c1"] = -1.0
        diags = flow_diagnostics(five_node, NetworkSolution({}, flows, {}))
        assert [(d.code, d.entity) for d in diags] == [
            (DiagnosticCode.REVERSE_COMPRESSOR_FLOW, "c1"),
        ]
        assert diags[0].severity is Severity.WARNING
