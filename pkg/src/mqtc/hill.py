"""Randomized first-improvement hill climbing over labeled trees."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from .exact import SolverResult
from .quartet import DistanceMatrix, cost_bounds, cost_tolerance, normalized_score, tree_cost
from .tree import LabeledTree, to_newick, tree_from_graph

NEIGHBORHOODS = ("leaf-swap", "subtree-move", "both")


@dataclass(frozen=True)
class SearchConfig:
    seed: int = 1
    restarts: int = 20
    max_steps_per_restart: int = 500
    neighborhood: str = "both"

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_steps_per_restart < 0:
            raise ValueError("max_steps_per_restart must be non-negative")
        if self.neighborhood not in NEIGHBORHOODS:
            raise ValueError(f"neighborhood must be one of {NEIGHBORHOODS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    """PCG64 substream for one restart, derived from ``(seed, restart)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(restart,))))


def random_tree(labels: int | Sequence[str], rng: np.random.Generator) -> LabeledTree:
    """Uniform random labeled tree, built by inserting each leaf on a random edge."""
    if isinstance(labels, int):
        labels = [f"t{i}" for i in range(labels)]
    labels = list(labels)
    if len(labels) < 4:
        raise ValueError("need at least 4 leaves")
    centre = ("mid", 2)
    edges = [(centre, ("leaf", lab)) for lab in labels[:3]]
    for k in range(3, len(labels)):
        u, v = edges.pop(int(rng.integers(len(edges))))
        mid = ("mid", k)
        edges += [(u, mid), (mid, v), (mid, ("leaf", labels[k]))]
    adj: dict = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    return tree_from_graph(adj, {("leaf", lab): lab for lab in labels})


def _swaps(t: LabeledTree) -> Iterator[LabeledTree]:
    labels = list(t.leaf_labels)
    for i, j in combinations(range(t.n), 2):
        if t.parent_of(t.n - 2 + i) == t.parent_of(t.n - 2 + j):
            continue
        new = labels.copy()
        new[i], new[j] = new[j], new[i]
        yield LabeledTree(t.n, t.edges, tuple(new))


def _moves(t: LabeledTree) -> Iterator[LabeledTree]:
    for x in t.leaves:
        p = t.parent_of(x)
        u, w = (y for y in t.adjacency[p] if y != x)
        base = set(t.edges) - {tuple(sorted(e)) for e in ((p, x), (p, u), (p, w))}
        joined = tuple(sorted((u, w)))
        base.add(joined)
        for s, r in sorted(base):
            if (s, r) == joined:
                continue
            edges = base - {(s, r)}
            edges |= {tuple(sorted((s, p))), tuple(sorted((p, r))), (p, x)}
            yield LabeledTree(t.n, frozenset(edges), t.leaf_labels)


def neighbors(t: LabeledTree, neighborhood: str = "both", unique: bool = True) -> Iterator[LabeledTree]:
    """Trees one move away from ``t``, in deterministic order.

    Leaf swaps exchange the labels of two leaves that do not form a cherry;
    subtree moves detach a leaf and regraft it on another edge. With
    ``unique`` each labeled tree is yielded once and ``t`` itself never.
    """
    gens = []
    if neighborhood in ("leaf-swap", "both"):
        gens.append(_swaps(t))
    if neighborhood in ("subtree-move", "both"):
        gens.append(_moves(t))
    seen = {t.split_key}
    for gen in gens:
        for nb in gen:
            if unique:
                if nb.split_key in seen:
                    continue
                seen.add(nb.split_key)
            yield nb


def raw_move_count(t: LabeledTree, neighborhood: str = "both") -> int:
    """Moves generated before duplicate removal."""
    n = t.n
    swaps = n * (n - 1) // 2 - len(t.cherries())
    moves = n * (2 * n - 6)
    return {"leaf-swap": swaps, "subtree-move": moves, "both": swaps + moves}[neighborhood]


class _Scorer:
    def __init__(self, D: DistanceMatrix):
        self.D = D
        self.seen: set = set()
        self.evaluated = 0

    def __call__(self, t: LabeledTree) -> float:
        self.evaluated += 1
        self.seen.add(t.split_key)
        return tree_cost(t, self.D)


def _climb(D: DistanceMatrix, cfg: SearchConfig, restart: int):
    rng = restart_rng(cfg.seed, restart)
    score = _Scorer(D)
    tol = cost_tolerance(D.n)
    cur = random_tree(D.labels, rng)
    cur_cost = score(cur)
    trajectory = [cur_cost]
    for _ in range(cfg.max_steps_per_restart):
        for nb in neighbors(cur, cfg.neighborhood):
            c = score(nb)
            if c < cur_cost - tol:
                cur, cur_cost = nb, c
                trajectory.append(c)
                break
        else:
            break
    return cur, cur_cost, tuple(trajectory), score.evaluated, score.seen


def solve_hill_climbing(D: DistanceMatrix, cfg: SearchConfig = SearchConfig(), workers: int = 1) -> SolverResult:
    """Best local optimum over independent restarts."""
    t0 = time.perf_counter()
    args = [(D, cfg, r) for r in range(cfg.restarts)]
    if workers > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_climb, *zip(*args)))
    else:
        runs = [_climb(*a) for a in args]
    tol = cost_tolerance(D.n)
    best = min(c for _, c, *_ in runs)
    best_tree = min((t for t, c, *_ in runs if c <= best + tol), key=to_newick)
    best_cost = tree_cost(best_tree, D)
    seen = set().union(*(s for *_, s in runs))
    m, M = cost_bounds(D)
    return SolverResult(
        best_tree=best_tree,
        best_cost=best_cost,
        normalized_score=normalized_score(best_cost, m, M),
        shapes_evaluated=0,
        assignments_evaluated=sum(r[3] for r in runs),
        distinct_labeled_trees=len(seen),
        elapsed=time.perf_counter() - t0,
        lower_bound=m,
        upper_bound=M,
        trajectories=tuple(r[2] for r in runs),
    )
