"""Native network document: a YAML file with meta, nodes, pipes and compressors.

    meta:
      name: yamal
      eos: ideal                 # optional, overrides physics.yaml
      nominal: {p0: 8.8e6}       # optional nominal-scale overrides
    nodes:
      - {id: inlet, kind: slack, pressure: 8.8e6, elevation: 0.0}
      - {id: outlet, kind: nonslack, injection: -400.0}
    pipes:
      - {id: p1, from: inlet, to: outlet, length: 122000, diameter: 1.422, friction: 0.03}
    compressors:
      - {id: c1, from: a, to: b, ratio: 1.2}

Units are SI: Pa, kg/s, m. Unknown keys are rejected. When both end
nodes of a pipe carry an elevation, the pipe incline is derived from them
and any ``sin_theta`` given on the pipe is ignored.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from gasflow.config import EosKind, NominalConfig
from gasflow.errors import NetworkFileError
from gasflow.network.model import (
    CompressorEdge,
    Network,
    Node,
    NodeKind,
    PipeEdge,
    incline_from_elevations,
)

logger = structlog.get_logger()


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class MetaEntry(_Strict):
    name: str = "network"
    eos: EosKind | None = None
    nominal: NominalConfig | None = None


class NodeEntry(_Strict):
    id: str = Field(min_length=1)
    kind: Literal["slack", "nonslack"]
    pressure: float | None = Field(default=None, description="Pa, slack nodes only")
    injection: float = Field(default=0.0, description="kg/s, positive into the network")
    elevation: float | None = Field(default=None, description="m")

    @model_validator(mode="after")
    def pressure_matches_kind(self) -> NodeEntry:
        if self.kind == "slack" and self.pressure is None:
            raise ValueError("slack node needs a pressure")
        if self.kind == "nonslack" and self.pressure is not None:
            raise ValueError("only slack nodes carry a pressure")
        if self.kind == "slack" and self.injection != 0.0:
            raise ValueError("slack node injection is computed, not given")
        return self


class PipeEntry(_Strict):
    id: str = Field(min_length=1)
    from_node: str = Field(alias="from")
    to_node: str = Field(alias="to")
    length: float = Field(gt=0, description="m")
    diameter: float = Field(gt=0, description="m")
    friction: float = Field(ge=0)
    sin_theta: float | None = Field(default=None, ge=-1, le=1)


class CompressorEntry(_Strict):
    id: str = Field(min_length=1)
    from_node: str = Field(alias="from")
    to_node: str = Field(alias="to")
    ratio: float = Field(ge=1)


class NetworkDocument(_Strict):
    """Parsed network file, before conversion to :class:`Network`."""

    meta: MetaEntry = Field(default_factory=MetaEntry)
    nodes: list[NodeEntry]
    pipes: list[PipeEntry] = Field(default_factory=list)
    compressors: list[CompressorEntry] = Field(default_factory=list)

    def to_network(self) -> Network:
        elevations = {n.id: n.elevation for n in self.nodes}
        nodes = tuple(
            Node(
                id=n.id,
                kind=NodeKind(n.kind),
                pressure=n.pressure,
                injection=n.injection,
                elevation=n.elevation,
            )
            for n in self.nodes
        )
        pipes = []
        for p in self.pipes:
            z_from, z_to = elevations.get(p.from_node), elevations.get(p.to_node)
            if z_from is not None and z_to is not None:
                sin_theta = incline_from_elevations(z_from, z_to, p.length)
            else:
                sin_theta = p.sin_theta or 0.0
            pipes.append(PipeEdge(
                p.id, p.from_node, p.to_node, p.length, p.diameter, p.friction, sin_theta,
            ))
        compressors = tuple(
            CompressorEdge(c.id, c.from_node, c.to_node, c.ratio) for c in self.compressors
        )
        return Network(self.meta.name, nodes, tuple(pipes), compressors)


def _line_of(root: yaml.Node | None, loc: tuple[Any, ...]) -> int | None:
    """1-based line of the YAML node at a pydantic error location."""
    node = root
    line = None
    for key in loc:
        if node is None:
            break
        line = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
    if node is not None:
        line = node.start_mark.line + 1
    return line


def _check_references(doc: NetworkDocument, root: yaml.Node | None, path: str) -> None:
    known = {n.id for n in doc.nodes}
    for section in ("pipes", "compressors"):
        for k, edge in enumerate(getattr(doc, section)):
            for end, alias in (("from_node", "from"), ("to_node", "to")):
                target = getattr(edge, end)
                if target not in known:
                    loc = (section, k, alias)
                    raise NetworkFileError(
                        path, ".".join(map(str, loc)),
                        f"edge {edge.id!r} references unknown node {target!r}",
                        line=_line_of(root, loc),
                    )


def load_network_document(path: str | Path) -> NetworkDocument:
    """Parse and schema-check a network file.

    Raises:
        NetworkFileError: On YAML syntax errors, schema violations (with the
            dotted field location and line) or dangling node references.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise NetworkFileError(str(path), "-", f"cannot read file: {exc.strerror}") from None
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise NetworkFileError(
            str(path), "-", f"invalid YAML: {getattr(exc, 'problem', exc)}",
            line=mark.line + 1 if mark is not None else None,
        ) from None
    if not isinstance(data, dict):
        raise NetworkFileError(str(path), "-", "document must be a mapping")

    try:
        doc = NetworkDocument.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = tuple(first["loc"])
        raise NetworkFileError(
            str(path), ".".join(map(str, loc)) or "-", first["msg"], line=_line_of(root, loc),
        ) from None
    _check_references(doc, root, str(path))
    logger.info("network_loaded", path=str(path), nodes=len(doc.nodes), pipes=len(doc.pipes),
                compressors=len(doc.compressors))
    return doc


def read_network(path: str | Path) -> Network:
    """Read a network file into an SI :class:`Network`."""
    return load_network_document(path).to_network()


def network_document(network: Network, meta: MetaEntry | None = None) -> dict[str, Any]:
    """Plain-data form of a network, ready for YAML."""
    meta = meta or MetaEntry(name=network.name)
    doc: dict[str, Any] = {"meta": meta.model_dump(mode="json", exclude_none=True)}
    doc["nodes"] = []
    for n in network.nodes:
        entry: dict[str, Any] = {"id": n.id, "kind": n.kind.value}
        if n.is_slack:
            entry["pressure"] = n.pressure
        else:
            entry["injection"] = n.injection
        if n.elevation is not None:
            entry["elevation"] = n.elevation
        doc["nodes"].append(entry)
    doc["pipes"] = [
        {"id": p.id, "from": p.from_node, "to": p.to_node, "length": p.length,
         "diameter": p.diameter, "friction": p.friction, "sin_theta": p.sin_theta}
        for p in network.pipes
    ]
    doc["compressors"] = [
        {"id": c.id, "from": c.from_node, "to": c.to_node, "ratio": c.ratio}
        for c in network.compressors
    ]
    return doc


def write_network(network: Network, path: str | Path, meta: MetaEntry | None = None) -> Path:
    """Write a network file that :func:`read_network` reads back unchanged."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(network_document(network, meta), f, sort_keys=False)
    logger.debug("network_written", path=str(path))
    return path
