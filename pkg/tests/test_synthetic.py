"""Tests for the seeded synthetic network generator."""

from __future__ import annotations

import pytest

from gasflow.network.model import balance_residuals, tree_flows, validate
from gasflow.network.synthetic import SyntheticSpec, generate_network


class TestGenerateNetwork:
    def test_same_seed_same_network(self) -> None:
        assert generate_network(n_nodes=40, seed=3) == generate_network(n_nodes=40, seed=3)
        assert generate_network(n_nodes=40, seed=3) != generate_network(n_nodes=40, seed=4)

    @pytest.mark.parametrize("n", [10, 100])
    def test_is_well_posed(self, n: int) -> None:
        net = generate_network(n_nodes=n, seed=1)
        assert validate(net) == []
        assert len(net.nodes) == n
        assert len(net.slack_nodes) == 1

    def test_counts(self) -> None:
        net = generate_network(n_nodes=100, seed=2, chord_fraction=0.1)
        assert len(net.compressors) == 4
        # tree edges plus chords
        assert len(net.pipes) + len(net.compressors) == 99 + 10

    def test_demand_sums_to_total(self) -> None:
        spec = SyntheticSpec(n_nodes=50, seed=5, total_demand=120.0)
        net = generate_network(spec)
        assert sum(n.injection for n in net.nodes) == pytest.approx(-120.0)
        assert all(n.injection <= 0 for n in net.nodes)

    def test_tree_flows_balance(self) -> None:
        net = generate_network(n_nodes=60, seed=7)
        flows = tree_flows(net)
        assert max(abs(r) for r in balance_residuals(net, flows).values()) < 1e-9

    def test_horizontal(self) -> None:
        net = generate_network(n_nodes=30, seed=0, horizontal=True)
        assert all(p.sin_theta == 0.0 for p in net.pipes)
        assert all(n.elevation is None for n in net.nodes)

    def test_inclined_by_default(self) -> None:
        net = generate_network(n_nodes=30, seed=0)
        assert any(p.sin_theta != 0.0 for p in net.pipes)
        assert all(-1.0 <= p.sin_theta <= 1.0 for p in net.pipes)

    def test_overrides_replace_spec_fields(self) -> None:
        net = generate_network(SyntheticSpec(n_nodes=20), n_compressors=0, chord_fraction=0.0)
        assert net.compressors == ()
        assert len(net.pipes) == 19

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"n_nodes": 1}, "two nodes"),
            ({"chord_fraction": 1.5}, "chord_fraction"),
            ({"withdrawal_fraction": 0.0}, "withdrawal_fraction"),
        ],
    )
    def test_rejects_bad_spec(self, kwargs: dict, match: str) -> None:
        with pytest.raises(ValueError, match=match):
            SyntheticSpec(**kwargs)
