"""Finite tree-structured probability spaces.

A tree space is a rooted hierarchy of measurable sets.  The root carries
mass 1, every internal node splits into at least two pairwise disjoint
children whose masses add up to the parent mass, and the leaves are the
atoms of the space.  Interval-based trees (used by the extremal weight
construction) additionally attach a subinterval of [0, 1] to every node,
stored with exact integer endpoints (lo, hi, den) meaning [lo/den, hi/den]
so that endpoint arithmetic never drifts.

Trees are immutable after construction and safe to share between threads;
all builders are pure functions of their arguments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TreeNode",
    "TreeSpace",
    "build_uniform_dyadic",
    "build_sharpness_tree",
    "build_random_tree",
    "ancestors",
    "audit_tree",
]

# Mass bookkeeping (child sums, level covers) is done in double precision;
# this is the slack we allow before declaring a tree malformed.
MASS_TOL = 1e-12


@dataclass(frozen=True)
class TreeNode:
    """One node of a :class:`TreeSpace`: a measurable set with positive mass."""

    id: int
    parent: int | None
    children: tuple[int, ...]
    mass: float
    depth: int
    interval: tuple[float, float] | None = None
    interval_exact: tuple[int, int, int] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


class TreeSpace:
    """A rooted probability tree with at least two children per internal node.

    Nodes are integer ids ``0 .. n_nodes - 1`` with the root at index 0 and
    every child id larger than its parent id.  Derived structure:

    * ``preorder`` / ``pos``: depth-first order and each node's position in it,
      so every subtree is a contiguous slice of ``preorder``.
    * ``leaves``: leaf ids in depth-first order; ``leaf_lo[n]:leaf_hi[n]`` is
      the slice of that order holding the leaves below node ``n``.  Prefix sums
      over the leaf order therefore give every node integral in O(1).
    * ``levels[m]``: ids of the nodes at depth exactly m.  The sets covering
      the whole space at generation m are ``levels[m]`` plus the leaves of
      smaller depth, carried forward; see :meth:`level_cover`.
    """

    def __init__(
        self,
        parents: list[int | None],
        masses: list[float],
        intervals: list[tuple[float, float] | None] | None = None,
        exact_intervals: list[tuple[int, int, int] | None] | None = None,
        validate: bool = True,
    ) -> None:
        n = len(parents)
        if n == 0:
            raise ValueError("tree must contain at least the root")
        if len(masses) != n:
            raise ValueError("parents and masses must have equal length")
        if parents[0] is not None:
            raise ValueError("node 0 must be the root (parent None)")
        for i in range(1, n):
            p = parents[i]
            if p is None or not 0 <= p < i:
                raise ValueError(f"node {i}: parent must be an earlier node, got {p}")

        self.n_nodes = n
        self.parent = np.array([-1] + [parents[i] for i in range(1, n)], dtype=np.int64)
        self.mass = np.asarray(masses, dtype=float)

        children: list[list[int]] = [[] for _ in range(n)]
        for i in range(1, n):
            children[self.parent[i]].append(i)
        self.children = [tuple(c) for c in children]

        self.depth = np.zeros(n, dtype=np.int64)
        for i in range(1, n):
            self.depth[i] = self.depth[self.parent[i]] + 1

        self.intervals = list(intervals) if intervals is not None else [None] * n
        self.exact_intervals = (
            list(exact_intervals) if exact_intervals is not None else [None] * n
        )

        self.root = 0
        self._build_orders()
        if validate:
            self._validate()

    # ------------------------------------------------------------------
    # construction helpers
    # ------------------------------------------------------------------

    def _build_orders(self) -> None:
        n = self.n_nodes
        preorder = np.empty(n, dtype=np.int64)
        pos = np.empty(n, dtype=np.int64)
        stack = [0]
        k = 0
        while stack:
            node = stack.pop()
            preorder[k] = node
            pos[node] = k
            k += 1
            stack.extend(reversed(self.children[node]))
        if k != n:
            raise ValueError("tree is not connected")
        self.preorder = preorder
        self.pos = pos

        size = np.ones(n, dtype=np.int64)
        for node in preorder[::-1]:
            p = self.parent[node]
            if p >= 0:
                size[p] += size[node]
        self.subtree_size = size

        is_leaf = np.array([not c for c in self.children])
        self.is_leaf = is_leaf
        self.leaves = [int(v) for v in preorder[is_leaf[preorder]]]
        self.n_leaves = len(self.leaves)
        self.leaf_mass = self.mass[self.leaves]
        self._leaf_index = {node: i for i, node in enumerate(self.leaves)}

        # leaf span per node in depth-first leaf order
        leaf_lo = np.zeros(n, dtype=np.int64)
        leaf_hi = np.zeros(n, dtype=np.int64)
        counter = 0
        # preorder guarantees all leaves of a subtree are consecutive
        order_leaf_count = np.zeros(n, dtype=np.int64)
        for node in preorder:
            if is_leaf[node]:
                leaf_lo[node] = counter
                counter += 1
                leaf_hi[node] = counter
                order_leaf_count[node] = 1
        for node in preorder[::-1]:
            p = self.parent[node]
            if p >= 0:
                order_leaf_count[p] += order_leaf_count[node]
        for node in preorder:
            if not is_leaf[node]:
                # first leaf below equals first leaf of first child chain
                child = self.children[node][0]
                while not is_leaf[child]:
                    child = self.children[child][0]
                leaf_lo[node] = leaf_lo[child]
                leaf_hi[node] = leaf_lo[node] + order_leaf_count[node]
        self.leaf_lo = leaf_lo
        self.leaf_hi = leaf_hi

        max_depth = int(self.depth.max())
        levels: list[list[int]] = [[] for _ in range(max_depth + 1)]
        for node in range(n):
            levels[self.depth[node]].append(node)
        self.levels = levels

    def _validate(self) -> None:
        if abs(self.mass[self.root] - 1.0) > MASS_TOL:
            raise ValueError("root mass must equal 1")
        if np.any(self.mass <= 0):
            raise ValueError("every node mass must be positive")
        for node, kids in enumerate(self.children):
            if len(kids) == 1:
                raise ValueError(f"internal node {node} must have >= 2 children")
            if kids:
                gap = abs(self.mass[list(kids)].sum() - self.mass[node])
                if gap > MASS_TOL:
                    raise ValueError(
                        f"children of node {node} have mass defect {gap:.3e}"
                    )
        for node, iv in enumerate(self.intervals):
            if iv is None:
                continue
            a, b = iv
            if not (0.0 <= a < b):
                raise ValueError(f"node {node}: invalid interval {iv}")
            if abs((b - a) - self.mass[node]) > MASS_TOL:
                raise ValueError(f"node {node}: interval length != mass")

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    def node(self, node_id: int) -> TreeNode:
        self._check_id(node_id)
        return TreeNode(
            id=node_id,
            parent=None if node_id == self.root else int(self.parent[node_id]),
            children=self.children[node_id],
            mass=float(self.mass[node_id]),
            depth=int(self.depth[node_id]),
            interval=self.intervals[node_id],
            interval_exact=self.exact_intervals[node_id],
        )

    def leaf_index(self, node_id: int) -> int:
        self._check_id(node_id)
        try:
            return self._leaf_index[node_id]
        except KeyError:
            raise ValueError(f"node {node_id} is not a leaf") from None

    def leaf_slice(self, node_id: int) -> slice:
        """Slice of the depth-first leaf order holding the leaves below a node."""
        self._check_id(node_id)
        return slice(int(self.leaf_lo[node_id]), int(self.leaf_hi[node_id]))

    def level_cover(self, m: int) -> list[int]:
        """Nodes of depth m together with shallower leaves: a partition of X."""
        if not 0 <= m < len(self.levels):
            raise ValueError(f"level {m} out of range")
        cover = list(self.levels[m])
        for node in range(self.n_nodes):
            if self.is_leaf[node] and self.depth[node] < m:
                cover.append(node)
        return cover

    def _check_id(self, node_id: int) -> None:
        if not 0 <= node_id < self.n_nodes:
            raise ValueError(f"unknown node id {node_id}")

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "parents": [None] + [int(p) for p in self.parent[1:]],
            "masses": [float(m) for m in self.mass],
            "intervals": [list(iv) if iv else None for iv in self.intervals],
            "exact_intervals": [
                list(iv) if iv else None for iv in self.exact_intervals
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TreeSpace":
        return cls(
            parents=data["parents"],
            masses=data["masses"],
            intervals=[tuple(iv) if iv else None for iv in data["intervals"]],
            exact_intervals=[
                tuple(iv) if iv else None for iv in data["exact_intervals"]
            ],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "TreeSpace":
        return cls.from_json(json.loads(text))

    def __repr__(self) -> str:
        return (
            f"TreeSpace(nodes={self.n_nodes}, leaves={self.n_leaves}, "
            f"depth={int(self.depth.max())})"
        )


# ----------------------------------------------------------------------
# builders
# ----------------------------------------------------------------------


def build_uniform_dyadic(depth: int) -> TreeSpace:
    """Full binary tree of the given depth; a depth-k node has mass 2**-k."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    parents: list[int | None] = [None]
    masses = [1.0]
    frontier = [0]
    for level in range(depth):
        mass = 2.0 ** -(level + 1)
        new_frontier = []
        for node in frontier:
            for _ in range(2):
                parents.append(node)
                masses.append(mass)
                new_frontier.append(len(parents) - 1)
        frontier = new_frontier
    return TreeSpace(parents, masses)


def build_sharpness_tree(N: int) -> TreeSpace:
    """Biased tree on [0, 1] whose prefix [0, (N-n)/N] keeps splitting.

    Generation n (0 <= n <= N-1) consists of the interval [0, (N-n)/N] and
    the chunks (k/N, (k+1)/N] for k = N-n, ..., N-1.  Each step splits the
    prefix into [0, (N-n-1)/N] and ((N-n-1)/N, (N-n)/N]; the chunks are
    leaves, and [0, 1/N] survives as a leaf at depth N-1.  All N leaves have
    mass 1/N.  Endpoints are kept as exact integers over the denominator N.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    parents: list[int | None] = [None]
    masses = [1.0]
    intervals: list[tuple[float, float] | None] = [(0.0, 1.0)]
    exact: list[tuple[int, int, int] | None] = [(0, N, N)]
    prefix = 0  # id of the current prefix node [0, (N-n)/N]
    for n in range(N - 1):
        hi = N - n
        # prefix child [0, (hi-1)/N]
        parents.append(prefix)
        masses.append((hi - 1) / N)
        intervals.append((0.0, (hi - 1) / N))
        exact.append((0, hi - 1, N))
        new_prefix = len(parents) - 1
        # chunk child ((hi-1)/N, hi/N], a leaf
        parents.append(prefix)
        masses.append(1.0 / N)
        intervals.append(((hi - 1) / N, hi / N))
        exact.append((hi - 1, hi, N))
        prefix = new_prefix
    return TreeSpace(parents, masses, intervals, exact)


def build_random_tree(seed: int, max_depth: int, max_branch: int) -> TreeSpace:
    """Seeded random tree: random branch counts and random child mass splits.

    The root always splits; deeper internal nodes split with probability 0.7
    until ``max_depth``.  Sibling masses are strictly positive fractions of
    the parent mass whose sum reproduces it exactly (the last child takes the
    remainder).  Identical seeds give identical trees.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if max_branch < 2:
        raise ValueError("max_branch must be >= 2")
    rng = np.random.default_rng(seed)
    parents: list[int | None] = [None]
    masses = [1.0]
    frontier = [(0, 1.0, 0)]  # (node, mass, depth)
    while frontier:
        node, mass, depth = frontier.pop()
        if depth >= max_depth:
            continue
        if depth > 0 and rng.random() < 0.3:
            continue  # stays a leaf
        k = int(rng.integers(2, max_branch + 1))
        w = rng.uniform(0.25, 1.0, size=k)
        w /= w.sum()
        child_masses = mass * w
        child_masses[-1] = mass - child_masses[:-1].sum()
        for j in range(k):
            parents.append(node)
            masses.append(float(child_masses[j]))
            frontier.append((len(parents) - 1, float(child_masses[j]), depth + 1))
    return TreeSpace(parents, masses)


# ----------------------------------------------------------------------
# structural operations
# ----------------------------------------------------------------------


def ancestors(tree: TreeSpace, leaf: int) -> list[int]:
    """Chain of nodes from a leaf up to the root, both inclusive."""
    tree._check_id(leaf)
    if not tree.is_leaf[leaf]:
        raise ValueError(f"node {leaf} is not a leaf")
    chain = [leaf]
    node = leaf
    while node != tree.root:
        node = int(tree.parent[node])
        chain.append(node)
    return chain


def audit_tree(tree: TreeSpace, tol: float = MASS_TOL) -> None:
    """Re-check every structural invariant; raises ValueError on the first failure.

    Covers positivity, child-mass additivity, branch arity, the level cover
    masses summing to one, per-leaf uniqueness of the level-m ancestor, and
    interval consistency (tiling and length/mass agreement) when present.
    """
    if abs(tree.mass[tree.root] - 1.0) > tol:
        raise ValueError("root mass != 1")
    if np.any(tree.mass <= 0):
        raise ValueError("nonpositive node mass")
    for node, kids in enumerate(tree.children):
        if len(kids) == 1:
            raise ValueError(f"node {node} has a single child")
        if kids and abs(tree.mass[list(kids)].sum() - tree.mass[node]) > tol:
            raise ValueError(f"node {node}: child masses do not sum to parent")
    for m in range(len(tree.levels)):
        cover = tree.level_cover(m)
        if abs(tree.mass[cover].sum() - 1.0) > tol:
            raise ValueError(f"level {m} cover mass != 1")
    # every leaf has exactly one ancestor at each depth <= its own
    for leaf in tree.leaves:
        chain = ancestors(tree, leaf)
        depths = sorted(int(tree.depth[n]) for n in chain)
        if depths != list(range(len(chain))):
            raise ValueError(f"leaf {leaf}: ancestor chain misses a level")
    if any(iv is not None for iv in tree.intervals):
        for node, kids in enumerate(tree.children):
            if not kids or tree.intervals[node] is None:
                continue
            a, b = tree.intervals[node]
            spans = sorted(tree.intervals[c] for c in kids)
            if abs(spans[0][0] - a) > tol or abs(spans[-1][1] - b) > tol:
                raise ValueError(f"node {node}: children do not tile interval")
            for (_, r1), (l2, _) in zip(spans, spans[1:]):
                if abs(r1 - l2) > tol:
                    raise ValueError(f"node {node}: interval gap between children")
