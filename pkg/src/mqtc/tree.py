"""Full unrooted binary trees with labeled leaves.

Node numbering follows a fixed convention for a tree with ``n`` leaves:
ids ``0 .. n-3`` are internal nodes and ids ``n-2 .. 2n-3`` are leaves, so
``leaf_labels[k]`` is the label carried by node ``n - 2 + k``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import InvalidTreeError

FORBIDDEN_LABEL_CHARS = frozenset("(),;:")


def check_label(label: str) -> str:
    if not isinstance(label, str) or not label:
        raise ValueError(f"labels must be non-empty strings, got {label!r}")
    bad = FORBIDDEN_LABEL_CHARS.intersection(label)
    if bad:
        raise ValueError(f"label {label!r} contains forbidden characters {''.join(sorted(bad))!r}")
    if label != label.strip():
        raise ValueError(f"label {label!r} has leading or trailing whitespace")
    return label


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class LabeledTree:
    """An unrooted binary tree whose ``n`` leaves carry distinct labels.

    Instances are not validated on construction so that malformed trees can
    be inspected with :func:`validate_tree`; use :meth:`build` for a checked
    constructor.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    leaf_labels: tuple[str, ...]

    @classmethod
    def build(cls, n: int, edges: Iterable[tuple[int, int]], leaf_labels: Sequence[str]) -> "LabeledTree":
        t = cls(n, frozenset(_norm_edge(u, v) for u, v in edges), tuple(leaf_labels))
        report = validate_tree(t)
        if not report:
            raise InvalidTreeError(report.message)
        return t

    @property
    def n_internal(self) -> int:
        return self.n - 2

    @property
    def n_nodes(self) -> int:
        return 2 * self.n - 2

    def is_leaf(self, node: int) -> bool:
        return self.n - 2 <= node < 2 * self.n - 2

    @property
    def leaves(self) -> range:
        return range(self.n - 2, 2 * self.n - 2)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(a) for a in adj)

    @cached_property
    def _label_index(self) -> dict[str, int]:
        return {lab: self.n - 2 + k for k, lab in enumerate(self.leaf_labels)}

    def label_of(self, node: int) -> str:
        return self.leaf_labels[node - (self.n - 2)]

    def node_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise ValueError(f"{label!r} is not a leaf label of this tree") from None

    def parent_of(self, leaf: int) -> int:
        return self.adjacency[leaf][0]

    def cherries(self) -> list[tuple[str, str]]:
        """Label pairs attached to a common internal node, sorted."""
        out = []
        for v in range(self.n_internal):
            leaves = sorted(self.label_of(w) for w in self.adjacency[v] if self.is_leaf(w))
            if len(leaves) == 2:
                out.append((leaves[0], leaves[1]))
        return sorted(out)

    @cached_property
    def split_key(self) -> tuple[int, ...]:
        """Canonical form of the leaf-labeled tree.

        Each internal edge is encoded as the bitmask (over sorted labels) of
        the side not containing the smallest label. Two trees are equal as
        leaf-labeled unrooted trees iff their keys are equal.
        """
        order = {lab: i for i, lab in enumerate(sorted(self.leaf_labels))}
        full = (1 << self.n) - 1
        root = self.node_of(min(self.leaf_labels))
        masks = [0] * self.n_nodes
        parent = [-1] * self.n_nodes
        seen = [False] * self.n_nodes
        stack = [root]
        post = []
        seen[root] = True
        while stack:
            v = stack.pop()
            post.append(v)
            for w in self.adjacency[v]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = v
                    stack.append(w)
        for v in reversed(post):
            if self.is_leaf(v) and v != root:
                masks[v] = 1 << order[self.label_of(v)]
            if parent[v] >= 0:
                masks[parent[v]] |= masks[v]
        splits = []
        for v in range(self.n_internal):
            p = parent[v]
            if p >= 0 and not self.is_leaf(p):
                m = masks[v]
                splits.append(m if not m & 1 else full ^ m)
        return tuple(sorted(splits))

    def same_topology(self, other: "LabeledTree") -> bool:
        return set(self.leaf_labels) == set(other.leaf_labels) and self.split_key == other.split_key

    def relabel(self, mapping: Mapping[str, str]) -> "LabeledTree":
        return LabeledTree(self.n, self.edges, tuple(mapping[lab] for lab in self.leaf_labels))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    kind: str | None = None
    message: str = "ok"

    def __bool__(self) -> bool:
        return self.ok


def _fail(kind: str, message: str) -> ValidationReport:
    return ValidationReport(False, kind, message)


def validate_tree(t: LabeledTree, objects: Iterable[str] | None = None) -> ValidationReport:
    """Check the structural invariants of ``t`` and report the first violation.

    Checks run in order: node ids, leaf degrees, internal degrees, edge
    count, connectivity, label bijection (against ``objects`` when given).
    """
    n = t.n
    if n < 4:
        return _fail("node_count", f"need at least 4 leaves, got n={n}")
    n_nodes = 2 * n - 2
    for u, v in t.edges:
        if u == v:
            return _fail("node_count", f"self-loop on node {u}")
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            return _fail("node_count", f"edge ({u}, {v}) references a node outside 0..{n_nodes - 1}")
    if len(t.leaf_labels) != n:
        return _fail("labels", f"expected {n} leaf labels, got {len(t.leaf_labels)}")
    degree = [0] * n_nodes
    for u, v in t.edges:
        degree[u] += 1
        degree[v] += 1
    for node in range(n - 2, n_nodes):
        if degree[node] != 1:
            return _fail("degree", f"leaf {t.label_of(node)} has degree {degree[node]}, expected 1")
    for node in range(n - 2):
        if degree[node] != 3:
            return _fail("degree", f"internal node {node} has degree {degree[node]}, expected 3")
    if len(t.edges) != 2 * n - 3:
        return _fail("edge_count", f"expected {2 * n - 3} edges, got {len(t.edges)}")
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in t.adjacency[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != n_nodes:
        return _fail("connectivity", f"tree is disconnected ({len(seen)} of {n_nodes} nodes reachable)")
    labels = t.leaf_labels
    if len(set(labels)) != n:
        return _fail("labels", "leaf labels are not distinct")
    for lab in labels:
        try:
            check_label(lab)
        except ValueError as exc:
            return _fail("labels", str(exc))
    if objects is not None and set(objects) != set(labels):
        return _fail("labels", "leaf labels are not a bijection onto the given objects")
    return ValidationReport(True)


def tree_from_graph(adjacency: Mapping[Hashable, Iterable[Hashable]], labels: Mapping[Hashable, str]) -> LabeledTree:
    """Renumber an arbitrary node graph into the internal-first convention.

    ``labels`` maps each leaf node of ``adjacency`` to its label. Internal
    nodes are numbered in first-seen order of a BFS from the leaf with the
    smallest label; leaves are ordered by label.
    """
    leaves = sorted(labels, key=lambda v: labels[v])
    n = len(leaves)
    start = leaves[0]
    order = []
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if v not in labels:
            order.append(v)
        for w in sorted(adjacency[v], key=repr):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    ids = {v: i for i, v in enumerate(order)}
    ids.update({v: n - 2 + k for k, v in enumerate(leaves)})
    if len(ids) != len(adjacency):
        raise InvalidTreeError("graph is disconnected or has unlabeled degree-1 nodes")
    edges = {_norm_edge(ids[u], ids[w]) for u in adjacency for w in adjacency[u]}
    return LabeledTree.build(n, edges, [labels[v] for v in leaves])


# -- complete pseudo-adjacency matrix ---------------------------------------


@dataclass(frozen=True)
class CompleteMatrix:
    """The (2n-2)x(2n-2) block matrix ``[[K, L], [L', C]]``.

    ``K`` is the internal-internal adjacency, ``L`` the internal-leaf
    adjacency and ``C`` the pairwise quartet coefficients of the leaves.
    ``labels[k]`` names the object in leaf row ``n - 2 + k``.
    """

    n: int
    A: np.ndarray = field(repr=False)
    labels: tuple[str, ...]

    @property
    def K(self) -> np.ndarray:
        return self.A[: self.n - 2, : self.n - 2]

    @property
    def L(self) -> np.ndarray:
        return self.A[: self.n - 2, self.n - 2 :]

    @property
    def Lt(self) -> np.ndarray:
        return self.A[self.n - 2 :, : self.n - 2]

    @property
    def C(self) -> np.ndarray:
        return self.A[self.n - 2 :, self.n - 2 :]


def to_complete_matrix(t: LabeledTree, coefficients: np.ndarray | None = None) -> CompleteMatrix:
    """Encode ``t`` as a complete pseudo-adjacency matrix.

    Adjacent node pairs get entry 1. ``coefficients`` is indexed in leaf
    order (``t.leaf_labels``); it defaults to the tree's own coefficient
    matrix.
    """
    report = validate_tree(t)
    if not report:
        raise InvalidTreeError(report.message)
    n = t.n
    if coefficients is None:
        from .quartet import coefficient_matrix

        coefficients = coefficient_matrix(t)
    coefficients = np.asarray(coefficients)
    if coefficients.shape != (n, n):
        raise ValueError(f"coefficients must be {n}x{n}, got {coefficients.shape}")
    if not np.array_equal(coefficients, coefficients.T) or np.any(np.diag(coefficients) != 0):
        raise ValueError("coefficients must be symmetric with zero diagonal")
    A = np.zeros((2 * n - 2, 2 * n - 2), dtype=np.int64)
    for u, v in t.edges:
        A[u, v] = A[v, u] = 1
    A[n - 2 :, n - 2 :] = coefficients
    A.setflags(write=False)
    return CompleteMatrix(n, A, t.leaf_labels)


def from_complete_matrix(cm: CompleteMatrix) -> LabeledTree:
    n = cm.n
    A = np.asarray(cm.A)
    if A.shape != (2 * n - 2, 2 * n - 2):
        raise InvalidTreeError(f"matrix must be {2 * n - 2}x{2 * n - 2}, got {A.shape}")
    if not np.array_equal(A, A.T):
        raise InvalidTreeError("matrix is not symmetric")
    if np.any(A[: n - 2, :] < 0):
        raise InvalidTreeError("negative entries in the structure or leaves block")
    L = cm.L
    for k in range(n):
        hits = np.count_nonzero(L[:, k] > 0)
        if hits != 1:
            raise InvalidTreeError(f"leaf column {k} ({cm.labels[k]}) has {hits} attachments, expected 1")
    edges = set()
    K = cm.K
    for i in range(n - 2):
        if K[i, i] != 0:
            raise InvalidTreeError(f"nonzero diagonal entry for internal node {i}")
        for j in range(i + 1, n - 2):
            if K[i, j] > 0:
                edges.add((i, j))
        for k in range(n):
            if L[i, k] > 0:
                edges.add((i, n - 2 + k))
    t = LabeledTree(n, frozenset(edges), tuple(cm.labels))
    report = validate_tree(t)
    if not report:
        raise InvalidTreeError(report.message)
    return t


# -- paths -------------------------------------------------------------------


def _as_leaf(t: LabeledTree, x: str | int) -> int:
    if isinstance(x, str):
        return t.node_of(x)
    if not t.is_leaf(x):
        raise ValueError(f"node {x} is not a leaf")
    return x


def leaf_path(t: LabeledTree, x: str | int, y: str | int) -> list[int]:
    """Node ids on the unique path from leaf ``x`` to leaf ``y``, inclusive."""
    a, b = _as_leaf(t, x), _as_leaf(t, y)
    if a == b:
        raise ValueError("path endpoints must be distinct leaves")
    prev = {a: a}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        if v == b:
            break
        for w in t.adjacency[v]:
            if w not in prev:
                prev[w] = v
                queue.append(w)
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    path.reverse()
    return path


# -- enumeration -------------------------------------------------------------


def insertion_trees(labels: Sequence[str]) -> Iterator[LabeledTree]:
    """Every leaf-labeled tree on ``labels``, each exactly once.

    Starts from the three-leaf star and inserts the remaining labels one at
    a time on every edge; yields ``(2n-5)!!`` trees.
    """
    labels = list(labels)
    if len(labels) < 4:
        raise ValueError("need at least 4 labels")
    leaf_ids = {("leaf", lab): lab for lab in labels}

    def grow(edges: list[tuple], k: int) -> Iterator[list[tuple]]:
        if k == len(labels):
            yield edges
            return
        new_leaf, new_mid = ("leaf", labels[k]), ("mid", k)
        for i, (u, v) in enumerate(edges):
            rest = edges[:i] + edges[i + 1 :]
            yield from grow(rest + [(u, new_mid), (new_mid, v), (new_mid, new_leaf)], k + 1)

    centre = ("mid", 2)
    star = [(centre, ("leaf", lab)) for lab in labels[:3]]
    for edges in grow(star, 3):
        adj: dict = {}
        for u, v in edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        yield tree_from_graph(adj, leaf_ids)


# -- Newick ------------------------------------------------------------------


def to_newick(t: LabeledTree) -> str:
    """Deterministic Newick text for ``t``.

    Rooted (trifurcating) at the internal neighbour of the smallest label;
    children are ordered by their smallest descendant label.
    """
    first = t.node_of(min(t.leaf_labels))
    root = t.parent_of(first)
    parent = {root: -1}
    order = [root]
    for v in order:
        for w in t.adjacency[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    smallest: dict[int, str] = {}
    text: dict[int, str] = {}
    for v in reversed(order):
        if t.is_leaf(v):
            smallest[v] = text[v] = t.label_of(v)
            continue
        kids = sorted((w for w in t.adjacency[v] if w != parent[v]), key=smallest.__getitem__)
        smallest[v] = smallest[kids[0]]
        text[v] = "(" + ",".join(text[w] for w in kids) + ")"
    return text[root] + ";"


def parse_newick(text: str) -> LabeledTree:
    """Read an unrooted binary tree from Newick text.

    Branch lengths and internal node names are ignored; a bifurcating root is
    suppressed.
    """
    s = text.strip()
    if not s.endswith(";"):
        raise InvalidTreeError("Newick text must end with ';'")
    s = s[:-1]
    adj: dict[int, list[int]] = {}
    labels: dict[int, str] = {}
    pos = 0

    def new_node() -> int:
        v = len(adj)
        adj[v] = []
        return v

    def read_name() -> str:
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos] not in "(),:;":
            pos += 1
        name = s[start:pos].strip()
        if pos < len(s) and s[pos] == ":":
            pos += 1
            while pos < len(s) and s[pos] not in "(),;":
                pos += 1
        return name

    def read_subtree() -> int:
        nonlocal pos
        v = new_node()
        if pos < len(s) and s[pos] == "(":
            pos += 1
            while True:
                w = read_subtree()
                adj[v].append(w)
                adj[w].append(v)
                if pos >= len(s):
                    raise InvalidTreeError("unbalanced parentheses")
                if s[pos] == ",":
                    pos += 1
                elif s[pos] == ")":
                    pos += 1
                    break
                else:
                    raise InvalidTreeError(f"unexpected {s[pos]!r} at offset {pos}")
            read_name()
        else:
            name = read_name()
            if not name:
                raise InvalidTreeError(f"empty leaf name at offset {pos}")
            try:
                labels[v] = check_label(name)
            except ValueError as exc:
                raise InvalidTreeError(str(exc)) from None
        return v

    root = read_subtree()
    if pos != len(s.rstrip()):
        raise InvalidTreeError(f"trailing text at offset {pos}")
    if len(adj[root]) == 2 and root not in labels:
        u, w = adj.pop(root)
        adj[u].remove(root)
        adj[w].remove(root)
        adj[u].append(w)
        adj[w].append(u)
    if len(set(labels.values())) != len(labels):
        raise InvalidTreeError("duplicate leaf labels in Newick text")
    return tree_from_graph(adj, labels)
