"""Quartet topologies, quartet costs and tree costs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import InputFormatError, InputSizeError
from .tree import LabeledTree, check_label, leaf_path

SYMMETRY_TOL = 1e-9
DIAGONAL_TOL = 1e-12
SCORE_SLACK = 1e-9


def cost_tolerance(n: int) -> float:
    """Absolute tolerance for comparing two tree costs on ``n`` objects."""
    return 1e-12 * comb(n, 4)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric dissimilarities in [0, 1] between ``n >= 4`` labeled objects.

    Use :meth:`from_array` to build one from raw values; it applies the
    symmetrization and range checks.
    """

    labels: tuple[str, ...]
    d: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, labels: Sequence[str], values) -> "DistanceMatrix":
        labels = tuple(labels)
        d = np.array(values, dtype=float)
        n = len(labels)
        if d.ndim != 2 or d.shape != (n, n):
            raise InputFormatError(f"expected a {n}x{n} matrix for {n} labels, got shape {d.shape}")
        if n < 4:
            raise InputSizeError(f"need at least 4 objects, got {n}")
        for lab in labels:
            try:
                check_label(lab)
            except ValueError as exc:
                raise InputFormatError(str(exc)) from None
        if len(set(labels)) != n:
            dup = next(lab for lab in labels if labels.count(lab) > 1)
            raise InputFormatError(f"duplicate label {dup!r}")
        if not np.all(np.isfinite(d)):
            raise InputFormatError("matrix contains non-finite entries")
        asym = np.abs(d - d.T)
        worst = np.unravel_index(np.argmax(asym), asym.shape)
        if asym[worst] > SYMMETRY_TOL:
            i, j = worst
            raise InputFormatError(
                f"matrix is not symmetric: D[{labels[i]},{labels[j]}]={float(d[i, j])!r} "
                f"vs D[{labels[j]},{labels[i]}]={float(d[j, i])!r}"
            )
        d = (d + d.T) / 2.0
        diag = np.abs(np.diag(d))
        if np.any(diag > DIAGONAL_TOL):
            i = int(np.argmax(diag))
            raise InputFormatError(f"nonzero diagonal entry D[{labels[i]},{labels[i]}]={float(d[i, i])!r}")
        np.fill_diagonal(d, 0.0)
        bad = np.argwhere((d < 0.0) | (d > 1.0))
        if len(bad):
            i, j = bad[0]
            raise InputFormatError(f"entry D[{labels[i]},{labels[j]}]={float(d[i, j])!r} outside [0, 1]")
        d.setflags(write=False)
        return cls(labels, d)

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown object {label!r}") from None

    def reorder(self, labels: Sequence[str]) -> "DistanceMatrix":
        idx = [self.index(lab) for lab in labels]
        return DistanceMatrix(tuple(labels), self.d[np.ix_(idx, idx)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.d, other.d)

    __hash__ = None


@dataclass(frozen=True, order=True)
class QuartetTopology:
    """An unordered split ``ab|cd`` of four distinct objects."""

    left: tuple
    right: tuple

    @classmethod
    def of(cls, a, b, c, d) -> "QuartetTopology":
        if len({a, b, c, d}) != 4:
            raise ValueError("quartet members must be distinct")
        p, q = tuple(sorted((a, b))), tuple(sorted((c, d)))
        return cls(*sorted((p, q)))

    @classmethod
    def candidates(cls, a, b, c, d) -> tuple["QuartetTopology", ...]:
        """The three topologies ``ab|cd``, ``ac|bd``, ``ad|bc``."""
        return cls.of(a, b, c, d), cls.of(a, c, b, d), cls.of(a, d, b, c)

    @property
    def members(self) -> tuple:
        return tuple(sorted(self.left + self.right))

    def __str__(self) -> str:
        return f"{''.join(map(str, self.left))}|{''.join(map(str, self.right))}"


def _resolve(x, D: DistanceMatrix) -> int:
    if isinstance(x, str):
        return D.index(x)
    i = int(x)
    if not 0 <= i < D.n:
        raise ValueError(f"object index {i} out of range for n={D.n}")
    return i


def quartet_cost(q: QuartetTopology, D: DistanceMatrix) -> float:
    """``D(a,b) + D(c,d)`` for ``q = ab|cd``; members may be labels or indices."""
    a, b = (_resolve(x, D) for x in q.left)
    c, d = (_resolve(x, D) for x in q.right)
    return float(D.d[a, b] + D.d[c, d])


def consistent_topology(t: LabeledTree, s: Iterable[str]) -> QuartetTopology:
    """The quartet on ``s`` embedded in ``t``: the one whose pair paths are node-disjoint."""
    s = sorted(set(s))
    if len(s) != 4:
        raise ValueError("need exactly four distinct objects")
    found = [
        q
        for q in QuartetTopology.candidates(*s)
        if not set(leaf_path(t, *q.left)) & set(leaf_path(t, *q.right))
    ]
    if len(found) != 1:
        raise AssertionError(f"{len(found)} consistent topologies for {s}")
    return found[0]


def coefficient_matrix(t: LabeledTree, order: Sequence[str] | None = None) -> np.ndarray:
    """Number of embedded quartets pairing each two objects.

    ``coef[a, b]`` sums ``C(k, 2)`` over the subtrees hanging off the
    internal nodes of the a-b path, where ``k`` is the subtree's leaf count.
    Rows follow ``order`` (default: ``t.leaf_labels``).
    """
    n = t.n
    if order is None:
        order = t.leaf_labels
    col = {t.node_of(lab): i for i, lab in enumerate(order)}
    if len(col) != n:
        raise ValueError("order must list every leaf label exactly once")
    adj = t.adjacency
    coef = np.zeros((n, n), dtype=np.int64)
    for a_node, a in col.items():
        parent = [-1] * t.n_nodes
        order_ = [a_node]
        parent[a_node] = a_node
        for v in order_:
            for w in adj[v]:
                if parent[w] < 0:
                    parent[w] = v
                    order_.append(w)
        below = [0] * t.n_nodes
        for v in reversed(order_):
            if t.is_leaf(v) and v != a_node:
                below[v] = 1
            if v != a_node:
                below[parent[v]] += below[v]
        acc = [0] * t.n_nodes
        for v in order_[1:]:
            if t.is_leaf(v):
                coef[a, col[v]] = acc[v]
                continue
            x, y = (w for w in adj[v] if w != parent[v])
            acc[x] = acc[v] + comb(below[y], 2)
            acc[y] = acc[v] + comb(below[x], 2)
    return coef


def tree_cost(t: LabeledTree, D: DistanceMatrix) -> float:
    """Sum of embedded quartet costs, ``0.5 * sum(coef * D)``."""
    if set(t.leaf_labels) != set(D.labels):
        raise ValueError("tree labels do not match the distance matrix labels")
    coef = coefficient_matrix(t, D.labels)
    return float(0.5 * np.sum(coef * D.d))


def tree_cost_bruteforce(t: LabeledTree, D: DistanceMatrix) -> float:
    """Reference cost: sums the consistent quartet of every 4-subset directly."""
    if set(t.leaf_labels) != set(D.labels):
        raise ValueError("tree labels do not match the distance matrix labels")
    return float(sum(quartet_cost(consistent_topology(t, s), D) for s in itertools.combinations(D.labels, 4)))


def _subset_costs(D: DistanceMatrix) -> np.ndarray:
    """Costs of ``ab|cd``, ``ac|bd``, ``ad|bc`` for every 4-subset, shape (C(n,4), 3)."""
    idx = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(D.n), 4)),
        dtype=np.intp,
        count=4 * comb(D.n, 4),
    ).reshape(-1, 4)
    a, b, c, d = idx.T
    x = D.d
    return np.stack([x[a, b] + x[c, d], x[a, c] + x[b, d], x[a, d] + x[b, c]], axis=1)


def cost_bounds(D: DistanceMatrix) -> tuple[float, float]:
    """``(m, M)``: totals of the per-subset cheapest and dearest topology costs."""
    costs = _subset_costs(D)
    return float(costs.min(axis=1).sum()), float(costs.max(axis=1).sum())


def normalized_score(cost: float, m: float, M: float) -> float:
    """``(M - cost) / (M - m)``, or 1 when ``M == m``."""
    if cost < m - SCORE_SLACK or cost > M + SCORE_SLACK:
        raise ValueError(f"cost {cost!r} outside bounds [{m!r}, {M!r}]")
    if M == m:
        return 1.0
    return float(min(1.0, max(0.0, (M - cost) / (M - m))))
