"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np

from mqtc.shapes import TopologyShape
from mqtc.quartet import DistanceMatrix


def random_matrix(rng, n, scale=1.0):
    x = rng.random((n, n)) * scale
    x = (x + x.T) / 2
    np.fill_diagonal(x, 0.0)
    return DistanceMatrix.from_array([f"o{i:02d}" for i in range(n)], x)


def isomorphic_bruteforce(s1: TopologyShape, s2: TopologyShape) -> bool:
    """Search every internal-node bijection (with early rejection of partial maps)."""
    if s1.n != s2.n:
        return False
    k = s1.n - 2
    adj1 = [set(a) for a in s1.neighbours]
    adj2 = [set(a) for a in s2.neighbours]
    image = [-1] * k
    used = [False] * k

    def extend(i):
        if i == k:
            return True
        for j in range(k):
            if used[j] or s1.leaf_slots[i] != s2.leaf_slots[j]:
                continue
            if any((image[p] in adj2[j]) != (p in adj1[i]) for p in range(i)):
                continue
            image[i], used[j] = j, True
            if extend(i + 1):
                return True
            image[i], used[j] = -1, False
        return False

    return extend(0)


def shapes_bruteforce(n: int) -> list[TopologyShape]:
    """Every shape on n leaves, up to isomorphism, from all recursive trees.

    Each tree on k nodes has a labeling where every node j > 0 attaches to a
    smaller node, so attaching node j to each i < j in turn reaches every
    isomorphism class.
    """
    k = n - 2
    reps: list[TopologyShape] = []
    for parents in itertools.product(*[range(j) for j in range(1, k)]):
        deg = [0] * k
        edges = []
        for j, p in enumerate(parents, start=1):
            edges.append((p, j))
            deg[p] += 1
            deg[j] += 1
        if max(deg) > 3:
            continue
        s = TopologyShape.from_edges(n, edges, [3 - d for d in deg])
        if not any(isomorphic_bruteforce(s, r) for r in reps):
            reps.append(s)
    return reps


def restricted_splits(t, drop):
    """Nontrivial splits of ``t`` after deleting leaf ``drop``, as frozensets of label sets."""
    keep = [lab for lab in t.leaf_labels if lab != drop]
    out = set()
    for v in range(t.n_internal):
        for w in t.adjacency[v]:
            if t.is_leaf(w):
                continue
            side = _side_labels(t, v, w)
            side.discard(drop)
            other = set(keep) - side
            if len(side) >= 2 and len(other) >= 2:
                out.add(frozenset((frozenset(side), frozenset(other))))
    return out


def _side_labels(t, v, w):
    seen, stack, labs = {v, w}, [w], set()
    while stack:
        x = stack.pop()
        if t.is_leaf(x):
            labs.add(t.label_of(x))
        for y in t.adjacency[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return labs
