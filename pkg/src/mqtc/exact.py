"""Exhaustive MQTC solver: every shape, every leaf assignment."""

from __future__ import annotations

import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import factorial
from typing import Iterator

import numpy as np

from .errors import ResourceLimitError
from .quartet import DistanceMatrix, coefficient_matrix, cost_bounds, cost_tolerance, normalized_score, tree_cost
from .shapes import DEFAULT_MAX_N as SHAPE_MAX_N
from .shapes import TopologyShape, automorphism_count, generate_shapes
from .tree import LabeledTree, to_newick

log = logging.getLogger(__name__)

DEFAULT_MAX_N = 12
BLOCK_SIZE = 1 << 15
SYMMETRY_MODES = ("none", "cherry", "full")


def exact_ceiling() -> int:
    """Exact-solver ceiling, overridable through ``MQTC_MAX_N``."""
    raw = os.environ.get("MQTC_MAX_N")
    if raw is None or raw == "":
        return DEFAULT_MAX_N
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"MQTC_MAX_N must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class SolverResult:
    best_tree: LabeledTree
    best_cost: float
    normalized_score: float
    shapes_evaluated: int
    assignments_evaluated: int
    distinct_labeled_trees: int
    elapsed: float
    lower_bound: float
    upper_bound: float
    trajectories: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    @property
    def newick(self) -> str:
        return to_newick(self.best_tree)


def double_factorial(k: int) -> int:
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


# -- assignments -----------------------------------------------------------------


def _split_sides(shape: TopologyShape) -> list[list[int]]:
    """For each internal edge, the leaf slots on one side of it."""
    k = shape.n - 2
    slots_at: list[list[int]] = [[] for _ in range(k)]
    for j, p in enumerate(shape.slot_parents):
        slots_at[p].append(j)
    sides = []
    for u, v in shape.internal_edges:
        side, stack, seen = [], [v], {u, v}
        while stack:
            x = stack.pop()
            side.extend(slots_at[x])
            for w in shape.neighbours[x]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        sides.append(side)
    return sides


def split_keys(shape: TopologyShape, P: np.ndarray) -> np.ndarray:
    """Canonical labeled form of each assignment row in ``P``.

    Row ``r`` lists, sorted, the bitmask over object indices of each internal
    edge's side that excludes object 0.
    """
    n = shape.n
    full = np.int64((1 << n) - 1)
    bits = np.left_shift(np.int64(1), P.astype(np.int64))
    cols = []
    for side in _split_sides(shape):
        m = bits[:, side].sum(axis=1)
        cols.append(np.where(m & 1, full ^ m, m))
    if not cols:
        return np.zeros((len(P), 0), dtype=np.int64)
    return np.sort(np.stack(cols, axis=1), axis=1)


def _assignment_blocks(shape: TopologyShape, symmetry: str = "cherry", block: int = BLOCK_SIZE) -> Iterator[np.ndarray]:
    if symmetry not in SYMMETRY_MODES:
        raise ValueError(f"symmetry must be one of {SYMMETRY_MODES}, got {symmetry!r}")
    n = shape.n
    perms = itertools.permutations(range(n))
    seen: set[bytes] = set()
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(perms, block)), dtype=np.int8)
        if flat.size == 0:
            return
        P = flat.reshape(-1, n)
        if symmetry != "none":
            keep = np.ones(len(P), dtype=bool)
            for a, b in shape.cherry_slots:
                keep &= P[:, a] < P[:, b]
            P = P[keep]
        if symmetry == "full":
            keys = split_keys(shape, P)
            keep = np.zeros(len(P), dtype=bool)
            for r, row in enumerate(keys):
                key = row.tobytes()
                if key not in seen:
                    seen.add(key)
                    keep[r] = True
            P = P[keep]
        if len(P):
            yield P


def enumerate_assignments(shape: TopologyShape, n: int | None = None, symmetry: str = "cherry") -> Iterator[tuple[int, ...]]:
    """Leaf assignments for ``shape`` in lexicographic order.

    Item ``a`` puts object ``a[j]`` on leaf slot ``j``. With ``"cherry"``
    the two leaves of a cherry always appear in increasing order; ``"full"``
    additionally drops assignments that repeat an earlier labeled tree;
    ``"none"`` yields all ``n!`` permutations.
    """
    if n is not None and n != shape.n:
        raise ValueError(f"shape has {shape.n} leaves, not {n}")
    for P in _assignment_blocks(shape, symmetry):
        yield from (tuple(int(x) for x in row) for row in P)


def count_labeled_trees(n: int, max_n: int | None = None) -> int:
    """Distinct labeled trees reached by the cherry-pruned enumeration of all shapes."""
    max_n = exact_ceiling() if max_n is None else max_n
    if n > max_n:
        raise ResourceLimitError(f"n={n} exceeds the exact-solver ceiling {max_n}")
    seen: set[bytes] = set()
    for shape in generate_shapes(n, max_n=max(max_n, SHAPE_MAX_N)):
        for P in _assignment_blocks(shape, "cherry"):
            seen.update(row.tobytes() for row in split_keys(shape, P))
    return len(seen)


# -- solving -----------------------------------------------------------------------


@dataclass
class _ShapeOutcome:
    best: float
    candidates: np.ndarray
    costs: np.ndarray
    evaluated: int


def _solve_shape(shape: TopologyShape, d: np.ndarray, symmetry: str, tol: float) -> _ShapeOutcome:
    # permuting leaf rows/columns permutes the coefficients with them, so the
    # slot coefficient matrix is computed once per shape
    coef = coefficient_matrix(shape.to_tree([str(j) for j in range(shape.n)]))
    iu, ju = np.nonzero(np.triu(coef, 1))
    w = coef[iu, ju].astype(float)
    best = np.inf
    cand: list[np.ndarray] = []
    cand_cost: list[np.ndarray] = []
    evaluated = 0
    for P in _assignment_blocks(shape, symmetry):
        P = P.astype(np.intp)
        costs = (d[P[:, iu], P[:, ju]] * w).sum(axis=1)
        evaluated += len(P)
        block_best = costs.min()
        if block_best < best:
            best = block_best
            keep = [c <= best + tol for c in cand_cost]
            cand = [p[k] for p, k in zip(cand, keep)]
            cand_cost = [c[k] for c, k in zip(cand_cost, keep)]
        sel = costs <= best + tol
        if sel.any():
            cand.append(P[sel])
            cand_cost.append(costs[sel])
    n = shape.n
    return _ShapeOutcome(
        best,
        np.concatenate(cand) if cand else np.zeros((0, n), dtype=np.intp),
        np.concatenate(cand_cost) if cand_cost else np.zeros(0),
        evaluated,
    )


class _Inline:
    """Serial stand-in for a process pool."""

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, *iterables):
        return map(fn, *iterables)


def _pick(trees: list[LabeledTree]) -> LabeledTree:
    """Deterministic tie-break: smallest Newick text."""
    return min(trees, key=to_newick)


def solve_exact(
    D: DistanceMatrix,
    max_n: int | None = None,
    workers: int = 1,
    symmetry: str = "cherry",
) -> SolverResult:
    """Global optimum by enumerating every shape and leaf assignment."""
    t0 = time.perf_counter()
    n = D.n
    max_n = exact_ceiling() if max_n is None else max_n
    if n > max_n:
        raise ResourceLimitError(f"n={n} exceeds the exact-solver ceiling {max_n}; use the heuristic")
    shapes = generate_shapes(n, max_n=max(max_n, SHAPE_MAX_N))
    tol = cost_tolerance(n)
    d = np.asarray(D.d, dtype=float)
    args = [(s, d, symmetry, tol) for s in shapes]
    outcomes = []
    with ProcessPoolExecutor(max_workers=workers) if workers > 1 and len(shapes) > 1 else _Inline() as pool:
        ts = time.perf_counter()
        for i, out in enumerate(pool.map(_solve_shape, *zip(*args))):
            outcomes.append(out)
            done = sum(o.evaluated for o in outcomes)
            log.info(
                "shape %d/%d done: %d assignments so far, %.0f/s",
                i + 1, len(shapes), done, done / max(time.perf_counter() - ts, 1e-9),
            )

    best = min(o.best for o in outcomes)
    ties: dict[tuple, LabeledTree] = {}
    for shape, o in zip(shapes, outcomes):
        for row in o.candidates[o.costs <= best + tol]:
            t = shape.to_tree([D.labels[i] for i in row])
            ties.setdefault(t.split_key, t)
    best_tree = _pick(list(ties.values()))
    best_cost = tree_cost(best_tree, D)
    m, M = cost_bounds(D)
    return SolverResult(
        best_tree=best_tree,
        best_cost=best_cost,
        normalized_score=normalized_score(best_cost, m, M),
        shapes_evaluated=len(shapes),
        assignments_evaluated=sum(o.evaluated for o in outcomes),
        distinct_labeled_trees=sum(factorial(n) // automorphism_count(s) for s in shapes),
        elapsed=time.perf_counter() - t0,
        lower_bound=m,
        upper_bound=M,
    )
