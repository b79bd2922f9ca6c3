"""PageRank by power iteration, and score selection/serialization.

The iteration is the standard damped formulation with the mass of dangling
nodes redistributed uniformly over all nodes, so the score vector keeps
summing to one. Edge contributions are accumulated with numpy in a fixed
order, which makes results bit-reproducible for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .linkgraph import LinkGraph


@dataclass(frozen=True)
class RankConfig:
    damping: float = 0.85
    epsilon: float = 1e-9  # L1 residual threshold
    max_iterations: int = 1000
    top_k: int = 25000

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must be in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")


@dataclass(frozen=True)
class ScoreVector:
    scores: np.ndarray
    iterations_run: int
    final_residual: float
    converged: bool


def pagerank(graph: LinkGraph, config: RankConfig = RankConfig()) -> ScoreVector:
    """Power-iterate until the L1 residual drops below epsilon.

    Starts from the uniform vector. Stopping at max_iterations without
    converging is reported, not raised.
    """
    n = graph.node_count
    if n == 0:
        raise ValueError("cannot rank an empty graph")
    src = np.fromiter(
        (s for s, targets in enumerate(graph.out_edges) for _ in targets),
        dtype=np.int64,
        count=graph.edge_count,
    )
    dst = np.fromiter(
        (d for targets in graph.out_edges for d in targets),
        dtype=np.int64,
        count=graph.edge_count,
    )
    out_degree = np.array([len(t) for t in graph.out_edges], dtype=np.float64)
    dangling = out_degree == 0.0
    safe_degree = np.where(dangling, 1.0, out_degree)

    d = config.damping
    x = np.full(n, 1.0 / n)
    iterations = 0
    residual = float("inf")
    for iterations in range(1, config.max_iterations + 1):
        contrib = x / safe_degree
        flowed = np.bincount(dst, weights=contrib[src], minlength=n)
        dangling_mass = float(x[dangling].sum())
        new_x = (1.0 - d) / n + d * (flowed + dangling_mass / n)
        residual = float(np.abs(new_x - x).sum())
        x = new_x
        if residual < config.epsilon:
            return ScoreVector(x, iterations, residual, converged=True)
    return ScoreVector(x, iterations, residual, converged=False)


def top_k(graph: LinkGraph, result: ScoreVector, k: int | None = None) -> list[tuple[str, float]]:
    """Top-k (title, score) pairs, highest score first; ties break by title ascending."""
    if k is None:
        k = graph.node_count
    scores = result.scores
    order = sorted(range(graph.node_count), key=lambda i: (-scores[i], graph.titles[i]))
    return [(graph.titles[i], float(scores[i])) for i in order[: max(0, k)]]


def write_scores(path, ranked: Sequence[tuple[str, float]], header: Mapping[str, str] | None = None) -> None:
    """Write ``title\\tscore`` lines, score in repr precision, after optional ``#`` comments."""
    lines = [f"# {key}: {value}" for key, value in (header or {}).items()]
    lines.extend(f"{title}\t{score!r}" for title, score in ranked)
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def read_scores(path) -> list[tuple[str, float]]:
    ranked: list[tuple[str, float]] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        title, score = line.split("\t")
        ranked.append((title, float(score)))
    return ranked
