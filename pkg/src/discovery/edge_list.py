import logging
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.errors import ValidationError
from src.discovery.pc import Cpdag

_HEADER = re.compile(r"^#\s*p\s*=\s*(\d+)\s*$")
_LINE = re.compile(r"^(\d+)\s+(\d+)\s+(->|--)\s+(\S+)$")


@dataclass(frozen=True)
class EdgeList:
    cpdag: Cpdag
    weights: np.ndarray


def write_edge_list(path: str, cpdag: Cpdag, weights: Optional[np.ndarray] = None) -> None:
    """
    Write one `i j -> w` (directed) or `i j -- w` (undirected) line per edge.

    Indices are 0-based; weights default to 1 and are written at full precision.
    """
    weights = np.ones((cpdag.p, cpdag.p)) if weights is None else np.asarray(weights, dtype=float)
    lines = [f"# p={cpdag.p}"]
    for i, j in cpdag.directed_edges():
        lines.append(f"{i} {j} -> {weights[i, j]:.17g}")
    for i, j in cpdag.undirected_edges():
        lines.append(f"{i} {j} -- {weights[i, j]:.17g}")
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
    except OSError as e:
        raise ValidationError(f"Cannot write {path}: {e}")
    logging.info(f"Wrote {cpdag.n_edges} edges to {path}")


def read_edge_list(path: str) -> EdgeList:
    """Parse a file written by write_edge_list."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = [line.strip() for line in handle]
    except OSError as e:
        raise ValidationError(f"Cannot read {path}: {e}")
    raw = [line for line in raw if line]
    if not raw or not _HEADER.match(raw[0]):
        raise ValidationError(f"{path}: missing '# p=<count>' header")
    p = int(_HEADER.match(raw[0]).group(1))
    directed = np.zeros((p, p), dtype=bool)
    undirected = np.zeros((p, p), dtype=bool)
    weights = np.zeros((p, p))
    for number, line in enumerate(raw[1:], start=2):
        match = _LINE.match(line)
        if not match:
            raise ValidationError(f"{path}: cannot parse line {number}: '{line}'")
        i, j = int(match.group(1)), int(match.group(2))
        if i >= p or j >= p or i == j:
            raise ValidationError(f"{path}: invalid edge {i} {j} on line {number}")
        try:
            weight = float(match.group(4))
        except ValueError:
            raise ValidationError(f"{path}: invalid weight on line {number}")
        if match.group(3) == "->":
            directed[i, j] = True
            weights[i, j] = weight
        else:
            undirected[i, j] = undirected[j, i] = True
            weights[i, j] = weights[j, i] = weight
    return EdgeList(cpdag=Cpdag(p=p, directed=directed, undirected=undirected), weights=weights)
