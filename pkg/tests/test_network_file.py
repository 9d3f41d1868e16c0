"""Tests for reading and writing network documents."""

from __future__ import annotations

import math
from pathlib import Path

import pytest

from gasflow.config import EosKind
from gasflow.errors import NetworkFileError
from gasflow.io.network_file import MetaEntry, load_network_document, read_network, write_network
from gasflow.network.model import Network, NodeKind
from gasflow.network.synthetic import generate_network


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "net.yaml"
    path.write_text(text)
    return path


class TestReadNetwork:
    def test_yamal(self, yamal_file: Path) -> None:
        net = read_network(yamal_file)
        assert net.name == "yamal"
        assert [n.kind for n in net.nodes] == [NodeKind.SLACK, NodeKind.NON_SLACK]
        assert net.nodes[1].injection == -400.0
        pipe = net.pipes[0]
        assert (pipe.from_node, pipe.to_node) == ("inlet", "outlet")
        assert pipe.sin_theta == 0.0

    def test_incline_from_elevations(self, tmp_path: Path) -> None:
        path = write(tmp_path, """
nodes:
  - {id: a, kind: slack, pressure: 5.0e6, elevation: 100}
  - {id: b, kind: nonslack, injection: -1, elevation: 300}
pipes:
  - {id: p, from: a, to: b, length: 10000, diameter: 0.5, friction: 0.01, sin_theta: -0.5}
""")
        assert read_network(path).pipes[0].sin_theta == pytest.approx(0.02)

    def test_explicit_incline_without_elevations(self, tmp_path: Path) -> None:
        path = write(tmp_path, """
nodes:
  - {id: a, kind: slack, pressure: 5.0e6}
  - {id: b, kind: nonslack}
pipes:
  - {id: p, from: a, to: b, length: 10000, diameter: 0.5, friction: 0.01,
     sin_theta: 0.0697564737441253}
""")
        assert math.degrees(math.asin(read_network(path).pipes[0].sin_theta)) == pytest.approx(4.0)

    def test_meta(self, tmp_path: Path) -> None:
        path = write(tmp_path, """
meta: {name: m, eos: cnga, nominal: {p0: 7.0e6}}
nodes:
  - {id: a, kind: slack, pressure: 5.0e6}
""")
        doc = load_network_document(path)
        assert doc.meta.eos is EosKind.CNGA
        assert doc.meta.nominal.p0 == 7.0e6
        assert doc.to_network().pipes == ()


class TestReadErrors:
    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(NetworkFileError, match="cannot read"):
            read_network(tmp_path / "absent.yaml")

    def test_bad_yaml(self, tmp_path: Path) -> None:
        with pytest.raises(NetworkFileError, match="invalid YAML") as exc_info:
            read_network(write(tmp_path, "nodes: [\n  {id: a,\n"))
        assert exc_info.value.line is not None

    def test_not_a_mapping(self, tmp_path: Path) -> None:
        with pytest.raises(NetworkFileError, match="mapping"):
            read_network(write(tmp_path, "- 1\n- 2\n"))

    def test_schema_error_has_location_and_line(self, tmp_path: Path) -> None:
        path = write(tmp_path, """nodes:
  - {id: a, kind: slack, pressure: 5.0e6}
  - {id: b, kind: nonslack}
pipes:
  - {id: p, from: a, to: b, length: -3, diameter: 0.5, friction: 0.01}
""")
        with pytest.raises(NetworkFileError) as exc_info:
            read_network(path)
        assert exc_info.value.location == "pipes.0.length"
        assert exc_info.value.line == 5

    def test_unknown_key(self, tmp_path: Path) -> None:
        path = write(tmp_path, "nodes:\n  - {id: a, kind: slack, pressure: 1.0e6, colour: red}\n")
        with pytest.raises(NetworkFileError, match="colour"):
            read_network(path)

    @pytest.mark.parametrize(
        "node, match",
        [
            ("{id: a, kind: slack}", "needs a pressure"),
            ("{id: a, kind: nonslack, pressure: 1.0e6}", "only slack"),
            ("{id: a, kind: slack, pressure: 1.0e6, injection: 3}", "computed"),
        ],
    )
    def test_node_kind_rules(self, tmp_path: Path, node: str, match: str) -> None:
        with pytest.raises(NetworkFileError, match=match):
            read_network(write(tmp_path, f"nodes:\n  - {node}\n"))

    def test_dangling_reference(self, tmp_path: Path) -> None:
        path = write(tmp_path, """nodes:
  - {id: a, kind: slack, pressure: 5.0e6}
compressors:
  - {id: c, from: a, to: ghost, ratio: 1.1}
""")
        with pytest.raises(NetworkFileError, match="ghost") as exc_info:
            read_network(path)
        assert exc_info.value.location == "compressors.0.to"
        assert exc_info.value.line == 4


class TestWriteNetwork:
    def test_round_trip(self, tmp_path: Path, five_node: Network) -> None:
        path = write_network(five_node, tmp_path / "out" / "five.yaml")
        assert read_network(path) == five_node

    def test_round_trip_synthetic(self, tmp_path: Path) -> None:
        net = generate_network(n_nodes=25, seed=9)
        assert read_network(write_network(net, tmp_path / "syn.yaml")) == net

    def test_meta_is_written(self, tmp_path: Path, five_node: Network) -> None:
        meta = MetaEntry(name="x", eos=EosKind.CNGA)
        path = write_network(five_node, tmp_path / "five.yaml", meta)
        doc = load_network_document(path)
        assert doc.meta.name == "x"
        assert doc.meta.eos is EosKind.CNGA
        assert doc.meta.nominal is None
