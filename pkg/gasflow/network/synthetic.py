"""Seeded random pipeline networks for scale experiments.

A random recursive tree is grown from a single slack node, some tree
edges become compressors, and chords close loops. Chords only join nodes
that are separated by no compressor, so every loop consists of pipes and
the compressor equations stay consistent with the pipe physics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import structlog

from gasflow.network.model import (
    CompressorEdge,
    Network,
    Node,
    NodeKind,
    PipeEdge,
    incline_from_elevations,
)

logger = structlog.get_logger()


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs of :func:`generate_network`; SI units throughout."""

    n_nodes: int = 100
    seed: int = 0
    chord_fraction: float = 0.1
    n_compressors: int | None = None
    withdrawal_fraction: float = 0.2
    total_demand: float = 300.0
    slack_pressure: float = 7.0e6
    length_range: tuple[float, float] = (5_000.0, 30_000.0)
    diameter_range: tuple[float, float] = (0.8, 1.2)
    friction: float = 0.01
    ratio_range: tuple[float, float] = (1.05, 1.25)
    elevation_range: tuple[float, float] = (0.0, 3_000.0)
    elevation_step: float = 200.0
    horizontal: bool = False

    def __post_init__(self) -> None:
        if self.n_nodes < 2:
            raise ValueError("a network needs at least two nodes")
        if not 0 <= self.chord_fraction <= 1:
            raise ValueError("chord_fraction must lie in [0, 1]")
        if not 0 < self.withdrawal_fraction <= 1:
            raise ValueError("withdrawal_fraction must lie in (0, 1]")

    @property
    def compressors(self) -> int:
        if self.n_compressors is not None:
            return min(self.n_compressors, self.n_nodes - 1)
        return max(1, round(0.04 * self.n_nodes))


def generate_network(spec: SyntheticSpec | None = None, **overrides) -> Network:
    """Build a connected network with one slack node and SI data.

    Keyword arguments override fields of ``spec``.
    """
    if spec is None:
        spec = SyntheticSpec(**overrides)
    elif overrides:
        spec = replace(spec, **overrides)
    rng = np.random.default_rng(spec.seed)
    n = spec.n_nodes
    width = len(str(n))
    node_id = [f"n{k:0{width}d}" for k in range(n)]

    parent = np.zeros(n, dtype=int)
    for k in range(1, n):
        parent[k] = rng.integers(0, k)

    compressed = set(rng.choice(np.arange(1, n), size=spec.compressors, replace=False).tolist())
    zone = np.zeros(n, dtype=int)
    for k in range(1, n):
        zone[k] = k if k in compressed else zone[parent[k]]

    lo, hi = spec.elevation_range
    elevation = np.zeros(n)
    elevation[0] = rng.uniform(lo, hi)
    for k in range(1, n):
        elevation[k] = np.clip(elevation[parent[k]] + rng.normal(0.0, spec.elevation_step), lo, hi)

    withdrawing = rng.choice(
        np.arange(1, n), size=max(1, round(spec.withdrawal_fraction * (n - 1))), replace=False,
    )
    weights = rng.uniform(0.5, 1.5, size=withdrawing.size)
    demand = np.zeros(n)
    demand[withdrawing] = -spec.total_demand * weights / weights.sum()

    def pipe(pid: str, a: int, b: int) -> PipeEdge:
        length = float(rng.uniform(*spec.length_range))
        sin_theta = 0.0 if spec.horizontal else incline_from_elevations(
            float(elevation[a]), float(elevation[b]), length,
        )
        return PipeEdge(
            id=pid, from_node=node_id[a], to_node=node_id[b], length=length,
            diameter=float(rng.uniform(*spec.diameter_range)), friction=spec.friction,
            sin_theta=sin_theta,
        )

    pipes: list[PipeEdge] = []
    compressors: list[CompressorEdge] = []
    adjacent: set[frozenset[int]] = set()
    for k in range(1, n):
        adjacent.add(frozenset((int(parent[k]), k)))
        if k in compressed:
            compressors.append(CompressorEdge(
                id=f"c{k:0{width}d}", from_node=node_id[parent[k]], to_node=node_id[k],
                ratio=float(rng.uniform(*spec.ratio_range)),
            ))
        else:
            pipes.append(pipe(f"p{k:0{width}d}", int(parent[k]), k))

    wanted = round(spec.chord_fraction * (n - 1))
    chords, attempts = 0, 0
    while chords < wanted and attempts < 50 * max(wanted, 1):
        attempts += 1
        a, b = (int(v) for v in rng.integers(0, n, size=2))
        if a == b or zone[a] != zone[b] or frozenset((a, b)) in adjacent:
            continue
        adjacent.add(frozenset((a, b)))
        chords += 1
        pipes.append(pipe(f"q{chords:0{width}d}", a, b))

    nodes = tuple(
        Node(
            id=node_id[k],
            kind=NodeKind.SLACK if k == 0 else NodeKind.NON_SLACK,
            pressure=spec.slack_pressure if k == 0 else None,
            injection=float(demand[k]),
            elevation=None if spec.horizontal else float(elevation[k]),
        )
        for k in range(n)
    )
    logger.info(
        "synthetic_network", nodes=n, pipes=len(pipes), compressors=len(compressors),
        chords=chords, seed=spec.seed,
    )
    return Network(f"synthetic-{n}-s{spec.seed}", nodes, tuple(pipes), tuple(compressors))
