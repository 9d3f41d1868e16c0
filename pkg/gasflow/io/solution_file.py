"""Solution tables in CSV or JSON.

CSV output is a directory::

    nodes.csv       id, p_Pa, pi_Pa3, q_kg_s[, p_collocation_Pa]
    edges.csv       id, type, f_kg_s[, f_collocation_kg_s]
    report.yaml     solve report, kept apart from the data tables
    profiles/<pipe>.csv   x_m, p_Pa   (only when profiles were computed)

JSON output is one file holding the same tables. Floats are written with
17 significant digits and read back with round-trip precision.
"""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import structlog
import yaml

from gasflow.errors import NetworkFileError
from gasflow.network.model import CompressorEdge, Network, NetworkSolution, PipeProfile, Units

logger = structlog.get_logger()

FLOAT_FORMAT = "%.17g"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


def node_table(solution: NetworkSolution) -> pd.DataFrame:
    ids = sorted(solution.pressures)
    data: dict[str, Any] = {
        "id": ids,
        "p_Pa": [solution.pressures[i] for i in ids],
        "pi_Pa3": [solution.pressures[i] ** 3 for i in ids],
        "q_kg_s": [solution.injections[i] for i in ids],
    }
    if solution.collocation is not None:
        data["p_collocation_Pa"] = [solution.collocation.pressures[i] for i in ids]
    return pd.DataFrame(data)


def edge_table(solution: NetworkSolution, network: Network) -> pd.DataFrame:
    ids = sorted(solution.flows)
    data: dict[str, Any] = {
        "id": ids,
        "type": [
            "compressor" if isinstance(network.edge_map[i], CompressorEdge) else "pipe" for i in ids
        ],
        "f_kg_s": [solution.flows[i] for i in ids],
    }
    if solution.collocation is not None:
        data["f_collocation_kg_s"] = [solution.collocation.flows[i] for i in ids]
    return pd.DataFrame(data)


def profile_table(profile: PipeProfile) -> pd.DataFrame:
    return pd.DataFrame({"x_m": profile.x, "p_Pa": profile.p})


def write_solution(
    solution: NetworkSolution,
    network: Network,
    path: str | Path,
    report: dict[str, Any] | None = None,
    fmt: OutputFormat = OutputFormat.CSV,
) -> Path:
    """Write an SI solution; ``path`` is a directory for CSV, a file for JSON."""
    if solution.units is not Units.SI:
        raise ValueError("only SI solutions are written")
    path = Path(path)
    nodes, edges = node_table(solution), edge_table(solution, network)

    if fmt is OutputFormat.JSON:
        doc = {
            "nodes": nodes.to_dict(orient="records"),
            "edges": edges.to_dict(orient="records"),
            "profiles": {
                pid: profile_table(prof).to_dict(orient="list")
                for pid, prof in sorted(solution.profiles.items())
            },
            "report": report or {},
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=False))
    else:
        path.mkdir(parents=True, exist_ok=True)
        nodes.to_csv(path / "nodes.csv", index=False, float_format=FLOAT_FORMAT)
        edges.to_csv(path / "edges.csv", index=False, float_format=FLOAT_FORMAT)
        if solution.profiles:
            (path / "profiles").mkdir(exist_ok=True)
            for pid, prof in sorted(solution.profiles.items()):
                profile_table(prof).to_csv(
                    path / "profiles" / f"{pid}.csv", index=False, float_format=FLOAT_FORMAT,
                )
        if report is not None:
            with open(path / "report.yaml", "w") as f:
                yaml.safe_dump(report, f, sort_keys=False)
    logger.info("solution_written", path=str(path), format=fmt.value)
    return path


def _assemble(
    nodes: pd.DataFrame, edges: pd.DataFrame, profiles: dict[str, pd.DataFrame],
) -> NetworkSolution:
    ids = nodes["id"].astype(str).tolist()
    eids = edges["id"].astype(str).tolist()
    solution = NetworkSolution(
        pressures=dict(zip(ids, nodes["p_Pa"].astype(float))),
        flows=dict(zip(eids, edges["f_kg_s"].astype(float))),
        injections=dict(zip(ids, nodes["q_kg_s"].astype(float))),
        units=Units.SI,
        profiles={
            pid: PipeProfile(
                x=np.asarray(t["x_m"], dtype=float), p=np.asarray(t["p_Pa"], dtype=float),
            )
            for pid, t in profiles.items()
        },
    )
    if "p_collocation_Pa" in nodes and "f_collocation_kg_s" in edges:
        solution.collocation = NetworkSolution(
            pressures=dict(zip(ids, nodes["p_collocation_Pa"].astype(float))),
            flows=dict(zip(eids, edges["f_collocation_kg_s"].astype(float))),
            injections={},
            units=Units.SI,
        )
    return solution


def read_solution(path: str | Path) -> tuple[NetworkSolution, dict[str, Any]]:
    """Read a solution written by :func:`write_solution`.

    Returns:
        The SI solution and the report mapping (empty when none was written).

    Raises:
        NetworkFileError: If the path holds no readable solution.
    """
    path = Path(path)
    try:
        if path.is_dir():
            nodes = pd.read_csv(path / "nodes.csv", dtype={"id": str}, float_precision="round_trip")
            edges = pd.read_csv(path / "edges.csv", dtype={"id": str}, float_precision="round_trip")
            profiles = {
                f.stem: pd.read_csv(f, float_precision="round_trip")
                for f in sorted((path / "profiles").glob("*.csv"))
            }
            report_file = path / "report.yaml"
            report = yaml.safe_load(report_file.read_text()) if report_file.exists() else {}
        else:
            doc = json.loads(path.read_text())
            nodes = pd.DataFrame.from_records(doc["nodes"])
            edges = pd.DataFrame.from_records(doc["edges"])
            profiles = {pid: pd.DataFrame(t) for pid, t in doc.get("profiles", {}).items()}
            report = doc.get("report", {})
        solution = _assemble(nodes, edges, profiles)
    except (OSError, KeyError, ValueError) as exc:
        raise NetworkFileError(str(path), "-", f"not a solution: {exc}") from None
    logger.debug("solution_loaded", path=str(path), nodes=len(solution.pressures))
    return solution, report or {}
