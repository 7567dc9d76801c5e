"""Unlabeled tree shapes: generation, invariants and canonical codes.

A shape is the tree spanned by the ``n - 2`` internal nodes together with
the number of leaves each internal node carries. Shapes with ``k + 1``
internal nodes are grown from shapes with ``k`` by turning one leaf into a
new internal node carrying a cherry. Duplicates are removed per level:
algebraic invariants of the internal adjacency matrix bucket candidates and
an exact canonical code decides.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from math import factorial, prod
from typing import Sequence

import numpy as np

from .errors import InvalidTreeError, ResourceLimitError
from .tree import LabeledTree

log = logging.getLogger(__name__)

DEFAULT_MAX_N = 14
SPECTRUM_TOL = 1e-9


@dataclass(frozen=True)
class TopologyShape:
    n: int
    internal_edges: tuple[tuple[int, int], ...]
    leaf_slots: tuple[int, ...]

    def __post_init__(self):
        k = self.n - 2
        if self.n < 4 or len(self.leaf_slots) != k:
            raise InvalidTreeError(f"shape with n={self.n} needs {k} internal nodes")
        if len(self.internal_edges) != k - 1:
            raise InvalidTreeError(f"internal tree needs {k - 1} edges, got {len(self.internal_edges)}")
        deg = [0] * k
        for u, v in self.internal_edges:
            deg[u] += 1
            deg[v] += 1
        for i in range(k):
            if deg[i] + self.leaf_slots[i] != 3:
                raise InvalidTreeError(f"internal node {i} has degree {deg[i] + self.leaf_slots[i]}")
        if sum(self.leaf_slots) != self.n:
            raise InvalidTreeError("leaf slots do not add up to n")
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in self.neighbours[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != k:
            raise InvalidTreeError("internal nodes are disconnected")

    @classmethod
    def from_edges(cls, n: int, edges, leaf_slots: Sequence[int]) -> "TopologyShape":
        return cls(n, tuple(sorted((min(u, v), max(u, v)) for u, v in edges)), tuple(leaf_slots))

    @classmethod
    def of_tree(cls, t: LabeledTree) -> "TopologyShape":
        k = t.n - 2
        edges = [(u, v) for u, v in t.edges if v < k]
        slots = [sum(1 for w in t.adjacency[i] if t.is_leaf(w)) for i in range(k)]
        return cls.from_edges(t.n, edges, slots)

    @cached_property
    def neighbours(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n - 2)]
        for u, v in self.internal_edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @property
    def K(self) -> np.ndarray:
        k = self.n - 2
        K = np.zeros((k, k), dtype=np.int64)
        for u, v in self.internal_edges:
            K[u, v] = K[v, u] = 1
        return K

    @cached_property
    def slot_parents(self) -> tuple[int, ...]:
        """Internal node carrying each leaf slot; slot ``j`` becomes node ``n - 2 + j``."""
        return tuple(i for i, s in enumerate(self.leaf_slots) for _ in range(s))

    @cached_property
    def cherry_slots(self) -> tuple[tuple[int, int], ...]:
        out = []
        j = 0
        for s in self.leaf_slots:
            if s == 2:
                out.append((j, j + 1))
            j += s
        return tuple(out)

    def to_tree(self, labels: Sequence[str]) -> LabeledTree:
        """Place ``labels[j]`` on leaf slot ``j``."""
        if len(labels) != self.n:
            raise ValueError(f"need {self.n} labels")
        edges = set(self.internal_edges)
        edges.update((p, self.n - 2 + j) for j, p in enumerate(self.slot_parents))
        return LabeledTree(self.n, frozenset(edges), tuple(labels))

    def permuted(self, perm: Sequence[int]) -> "TopologyShape":
        """Same shape with internal node ``i`` renamed ``perm[i]``."""
        slots = [0] * len(perm)
        for i, p in enumerate(perm):
            slots[p] = self.leaf_slots[i]
        return TopologyShape.from_edges(self.n, [(perm[u], perm[v]) for u, v in self.internal_edges], slots)

    @cached_property
    def code(self) -> bytes:
        return canonical_code(self)


def initial_caterpillar(n: int) -> TopologyShape:
    """The single-branch shape: internal nodes on a path, cherries at both ends."""
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    k = n - 2
    slots = [1] * k
    slots[0] = slots[-1] = 2
    return TopologyShape.from_edges(n, [(i, i + 1) for i in range(k - 1)], slots)


# -- invariants --------------------------------------------------------------


def characteristic_polynomial(M: np.ndarray) -> tuple[int, ...]:
    """Integer coefficients of ``det(x I - M)``, highest degree first.

    Faddeev-LeVerrier over Python integers; every division is exact for an
    integer matrix.
    """
    m = M.shape[0]
    A = [[int(x) for x in row] for row in M]
    coeffs = [1]
    Mk = [[0] * m for _ in range(m)]
    for k in range(1, m + 1):
        # Mk <- A @ M_{k-1} + c_{k-1} I
        c_prev = coeffs[-1]
        for i in range(m):
            Mk[i][i] += c_prev
        AM = [[sum(A[i][l] * Mk[l][j] for l in range(m)) for j in range(m)] for i in range(m)]
        tr = sum(AM[i][i] for i in range(m))
        assert tr % k == 0
        coeffs.append(-tr // k)
        Mk = AM
    return tuple(coeffs)


@dataclass(frozen=True)
class InvariantSignature:
    charpoly: tuple[int, ...]
    spectrum: tuple[float, ...]
    determinant: int
    trace: int
    slot_multiset: tuple[int, ...]

    @property
    def exact_key(self) -> tuple:
        return self.charpoly, self.determinant, self.trace, self.slot_multiset

    def matches(self, other: "InvariantSignature", tol: float = SPECTRUM_TOL) -> bool:
        return self.exact_key == other.exact_key and bool(
            np.all(np.abs(np.subtract(self.spectrum, other.spectrum)) <= tol)
        )


def invariant_signature(s: TopologyShape) -> InvariantSignature:
    K = s.K
    m = K.shape[0]
    cp = characteristic_polynomial(K)
    spectrum = tuple(float(x) for x in np.sort(np.linalg.eigvalsh(K.astype(float))))
    return InvariantSignature(
        charpoly=cp,
        spectrum=spectrum,
        determinant=(-1) ** m * cp[-1],
        trace=int(np.trace(K)),
        slot_multiset=tuple(sorted(s.leaf_slots)),
    )


# -- canonical form ------------------------------------------------------------


def _centres(s: TopologyShape) -> list[int]:
    k = s.n - 2
    if k <= 2:
        return list(range(k))
    deg = [len(a) for a in s.neighbours]
    layer = [v for v in range(k) if deg[v] == 1]
    left = k
    while left > 2:
        left -= len(layer)
        nxt = []
        for v in layer:
            for w in s.neighbours[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    return sorted(layer)


def _rooted(s: TopologyShape, root: int, parent: int) -> tuple[str, int]:
    """AHU code and automorphism count of the subtree at ``root``."""
    kids = [_rooted(s, w, root) for w in s.neighbours[root] if w != parent]
    kids.sort()
    aut = factorial(s.leaf_slots[root]) * prod(a for _, a in kids)
    aut *= prod(factorial(c) for c in Counter(c for c, _ in kids).values())
    return f"({s.leaf_slots[root]}{''.join(c for c, _ in kids)})", aut


def _canonical(s: TopologyShape) -> tuple[str, int]:
    centres = _centres(s)
    if len(centres) == 1:
        return _rooted(s, centres[0], -1)
    a, b = centres
    ca, aa = _rooted(s, a, b)
    cb, ab = _rooted(s, b, a)
    lo, hi = sorted((ca, cb))
    return f"[{lo}{hi}]", aa * ab * (2 if ca == cb else 1)


def canonical_code(s: TopologyShape) -> bytes:
    """Isomorphism-complete code: equal iff the shapes are isomorphic."""
    return _canonical(s)[0].encode("ascii")


def automorphism_count(s: TopologyShape) -> int:
    """Order of the shape's automorphism group (it acts faithfully on the leaves)."""
    return _canonical(s)[1]


# -- generation ----------------------------------------------------------------


def _grow(s: TopologyShape) -> list[TopologyShape]:
    k = s.n - 2
    out = []
    for i in range(k):
        if s.leaf_slots[i] == 0:
            continue
        slots = list(s.leaf_slots) + [2]
        slots[i] -= 1
        out.append(TopologyShape.from_edges(s.n + 1, list(s.internal_edges) + [(i, k)], slots))
    return out


@dataclass
class _Dedup:
    buckets: dict
    prefilter_hits: int = 0
    cospectral_rejects: int = 0

    def add(self, s: TopologyShape) -> bool:
        sig = invariant_signature(s)
        entries = self.buckets.setdefault(sig.exact_key, [])
        for other_sig, other in entries:
            if sig.matches(other_sig):
                self.prefilter_hits += 1
                if other.code == s.code:
                    return False
                self.cospectral_rejects += 1
        entries.append((sig, s))
        return True


def generate_shapes(n: int, max_n: int = DEFAULT_MAX_N) -> list[TopologyShape]:
    """One representative per isomorphism class of shapes with ``n`` leaves, sorted by code."""
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    if n > max_n:
        raise ResourceLimitError(f"n={n} exceeds the shape generation ceiling {max_n}")
    level = [initial_caterpillar(4)]
    for m in range(5, n + 1):
        dedup = _Dedup({})
        nxt = []
        for s in level:
            for child in _grow(s):
                if dedup.add(child):
                    nxt.append(child)
        log.debug(
            "n=%d: %d shapes (%d invariant collisions, %d resolved as non-isomorphic)",
            m, len(nxt), dedup.prefilter_hits, dedup.cospectral_rejects,
        )
        level = nxt
    return sorted(level, key=lambda s: s.code)
