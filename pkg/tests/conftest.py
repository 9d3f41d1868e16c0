"""Shared test fixtures for gasflow tests."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import pytest
import yaml

from gasflow.config import EosKind, IntegratorConfig, SolverSettings
from gasflow.io.network_file import write_network
from gasflow.network.model import (
    CompressorEdge,
    Network,
    Node,
    NodeKind,
    PipeEdge,
    incline_from_elevations,
)
from gasflow.physics.eos import EosModel
from gasflow.physics.nondim import NominalScales, ScaledEos, default_scales, nondimensionalize
from gasflow.physics.pipe import PipeGeometry, PipeModel
from gasflow.studies import PipeCase

TIGHT_INTEGRATOR = IntegratorConfig(rtol=1e-12, atol=1e-14, max_steps=200_000)


@dataclass(frozen=True)
class PipeSetup:
    """One pipe of a :class:`PipeCase` in nondimensional form."""

    case: PipeCase
    scales: NominalScales
    geom: PipeGeometry
    model: PipeModel

    @property
    def p_in(self) -> float:
        return self.case.p_in / self.scales.p0

    @property
    def f(self) -> float:
        return self.case.flow / self.scales.f0


def eos_for(kind: EosKind) -> EosModel:
    return EosModel.ideal() if kind is EosKind.IDEAL else EosModel.cnga()


@pytest.fixture
def ideal_eos() -> EosModel:
    return EosModel.ideal()


@pytest.fixture
def cnga_eos() -> EosModel:
    return EosModel.cnga()


@pytest.fixture
def pipe_setup() -> Callable[..., PipeSetup]:
    """Factory for a nondimensional single pipe, the Yamal case by default."""

    def build(
        eos: EosModel,
        angle_deg: float = 0.0,
        inertia: bool = True,
        gravity: bool = True,
        case: PipeCase | None = None,
    ) -> PipeSetup:
        case = case or PipeCase.yamal()
        network = case.network(angle_deg)
        scales = default_scales(network, eos)
        geom = PipeGeometry.from_edge(nondimensionalize(network, scales).pipes[0], scales)
        model = PipeModel(ScaledEos.from_model(eos, scales), inertia, gravity)
        return PipeSetup(case, scales, geom, model)

    return build


@pytest.fixture
def tight_settings() -> SolverSettings:
    """Newton and integrator tolerances for invariance and oracle checks."""
    return SolverSettings(tol_newton=1e-11, integrator=TIGHT_INTEGRATOR)


def five_node_network(elevations: bool = True) -> Network:
    """Slack, one compressor, a three-pipe loop and a spur: 5 nodes, 5 edges."""
    z = {"s": 0.0, "a": 0.0, "b": 40.0, "c": 90.0, "d": 60.0}

    def node(nid: str, injection: float = 0.0) -> Node:
        return Node(nid, NodeKind.NON_SLACK, injection=injection,
                    elevation=z[nid] if elevations else None)

    nodes = (
        Node("s", NodeKind.SLACK, pressure=5.0e6, elevation=z["s"] if elevations else None),
        node("a"),
        node("b", -20.0),
        node("c", -10.0),
        node("d", -15.0),
    )

    def pipe(pid: str, a: str, b: str, length: float, diameter: float) -> PipeEdge:
        sin_theta = incline_from_elevations(z[a], z[b], length) if elevations else 0.0
        return PipeEdge(pid, a, b, length, diameter, 0.01, sin_theta)

    pipes = (
        pipe("p1", "a", "b", 20_000.0, 0.6),
        pipe("p2", "b", "c", 15_000.0, 0.5),
        pipe("p3", "a", "c", 25_000.0, 0.6),
        pipe("p4", "c", "d", 10_000.0, 0.4),
    )
    compressors = (CompressorEdge("c1", "s", "a", 1.2),)
    return Network("five-node", nodes, pipes, compressors)


@pytest.fixture
def five_node() -> Network:
    return five_node_network()


@pytest.fixture
def five_node_flat() -> Network:
    return five_node_network(elevations=False)


@pytest.fixture
def yamal_file(tmp_path: Path) -> Path:
    path = tmp_path / "yamal.yaml"
    path.write_text(
        "meta:\n"
        "  name: yamal\n"
        "nodes:\n"
        "  - {id: inlet, kind: slack, pressure: 8.8e6}\n"
        "  - {id: outlet, kind: nonslack, injection: -400.0}\n"
        "pipes:\n"
        "  - {id: pipe, from: inlet, to: outlet, length: 122000, diameter: 1.422,"
        " friction: 0.03}\n"
    )
    return path


@pytest.fixture
def five_node_file(tmp_path: Path, five_node: Network) -> Path:
    return write_network(five_node, tmp_path / "five.yaml")


@pytest.fixture
def config_dir(tmp_path: Path) -> Path:
    """Config directory with tight integrator tolerances."""
    path = tmp_path / "config"
    path.mkdir()
    solver = {
        "tol_newton": 1.0e-10,
        "integrator": {"rtol": 1.0e-11, "atol": 1.0e-13},
    }
    (path / "solver.yaml").write_text(yaml.safe_dump(solver))
    (path / "physics.yaml").write_text(yaml.safe_dump({"eos": {"kind": "ideal"}}))
    return path
