"""Averages, the fractional maximal operator, and its linearization.

Functions here act on tree-simple functions: functions constant on the
leaves of a :class:`~treemax.tree.TreeSpace`.  The fractional maximal
operator of order alpha sends f to

    leaf w  ->  max over nodes Q containing w of  mass(Q)**alpha * avg(|f|, Q),

where avg is the probability average over Q.  The fast evaluation is a
single root-to-leaf pass carrying the running maximum; the per-leaf
ancestor scan is kept as an independent oracle for tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import TreeSpace, ancestors

__all__ = [
    "SimpleFunction",
    "Linearization",
    "node_integrals",
    "average",
    "weighted_average",
    "frac_maximal",
    "frac_maximal_by_scan",
    "linearize",
]


class SimpleFunction:
    """A function constant on each leaf atom of a tree space."""

    __slots__ = ("tree", "values")

    def __init__(self, tree: TreeSpace, values) -> None:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (tree.n_leaves,):
            raise ValueError(
                f"expected {tree.n_leaves} leaf values, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("leaf values must be finite")
        self.tree = tree
        self.values = arr

    @classmethod
    def constant(cls, tree: TreeSpace, c: float) -> "SimpleFunction":
        return cls(tree, np.full(tree.n_leaves, float(c)))

    @classmethod
    def indicator(cls, tree: TreeSpace, node: int) -> "SimpleFunction":
        tree._check_id(node)
        vals = np.zeros(tree.n_leaves)
        vals[tree.leaf_slice(node)] = 1.0
        return cls(tree, vals)

    def with_values(self, values) -> "SimpleFunction":
        return SimpleFunction(self.tree, values)

    def integral(self) -> float:
        """Integral against the underlying probability measure."""
        return float(self.values @ self.tree.leaf_mass)

    def __repr__(self) -> str:
        return f"SimpleFunction({self.tree!r}, n={len(self.values)})"


def node_integrals(f: SimpleFunction) -> np.ndarray:
    """Per-node integrals of f over the node, via leaf-order prefix sums."""
    w = f.values * f.tree.leaf_mass
    pref = np.concatenate(([0.0], np.cumsum(w)))
    return pref[f.tree.leaf_hi] - pref[f.tree.leaf_lo]


def average(f: SimpleFunction, node: int) -> float:
    """Probability average of f over one node."""
    tree = f.tree
    tree._check_id(node)
    sl = tree.leaf_slice(node)
    return float(
        (f.values[sl] * tree.leaf_mass[sl]).sum() / tree.mass[node]
    )


def weighted_average(f: SimpleFunction, node: int, sigma: SimpleFunction) -> float:
    """sigma-weighted average of f over one node: int_Q f dsigma / sigma(Q)."""
    tree = f.tree
    tree._check_id(node)
    sl = tree.leaf_slice(node)
    w = sigma.values[sl] * tree.leaf_mass[sl]
    denom = w.sum()
    if denom <= 0.0:
        raise ValueError(f"sigma has zero mass on node {node}")
    return float((f.values[sl] * w).sum() / denom)


def _node_values(f: SimpleFunction, alpha: float) -> np.ndarray:
    """mass(Q)**alpha * avg(|f|, Q) for every node Q."""
    tree = f.tree
    g = f.with_values(np.abs(f.values))
    sums = node_integrals(g)
    avgs = sums / tree.mass
    if alpha == 0.0:
        return avgs
    return tree.mass**alpha * avgs


def frac_maximal(f: SimpleFunction, alpha: float) -> SimpleFunction:
    """Fractional maximal function of order alpha, evaluated on each leaf."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    tree = f.tree
    vals = _node_values(f, alpha)
    best = np.empty(tree.n_nodes)
    out = np.empty(tree.n_leaves)
    for node in tree.preorder:
        p = tree.parent[node]
        b = vals[node] if p < 0 else max(vals[node], best[p])
        best[node] = b
        if tree.is_leaf[node]:
            out[tree.leaf_lo[node]] = b
    return SimpleFunction(tree, out)


def frac_maximal_by_scan(f: SimpleFunction, alpha: float) -> SimpleFunction:
    """Same operator via an explicit per-leaf ancestor scan (test oracle)."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    tree = f.tree
    vals = _node_values(f, alpha)
    out = np.empty(tree.n_leaves)
    for i, leaf in enumerate(tree.leaves):
        out[i] = max(vals[n] for n in ancestors(tree, leaf))
    return SimpleFunction(tree, out)


@dataclass(frozen=True, eq=False)
class Linearization:
    """Leafwise argmax structure of the fractional maximal operator.

    ``assignment[i]`` is the shallowest node at which the maximum defining
    the operator is attained for leaf i, and ``fibers[Q]`` collects the leaf
    indices assigned to node Q.  The fibers are pairwise disjoint and cover
    all leaves, and summing mass(Q)**alpha * avg(f, Q) over the fibers
    reproduces the maximal function exactly.
    """

    tree: TreeSpace
    alpha: float
    assignment: np.ndarray
    leaf_values: np.ndarray
    fibers: dict[int, np.ndarray]
    source_values: np.ndarray

    def reconstruct(self) -> SimpleFunction:
        """Rebuilds the maximal function from the fiber decomposition."""
        out = np.empty(self.tree.n_leaves)
        vals = _node_values(
            SimpleFunction(self.tree, self.source_values), self.alpha
        )
        for node, leaf_idx in self.fibers.items():
            out[leaf_idx] = vals[node]
        return SimpleFunction(self.tree, out)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "assignment": [int(q) for q in self.assignment],
            "fibers": {
                str(int(q)): [int(i) for i in idx] for q, idx in self.fibers.items()
            },
        }


def linearize(f: SimpleFunction, alpha: float) -> Linearization:
    """Assign each leaf the shallowest node attaining its maximal value.

    Requires f >= 0.  Ties in value are broken by minimal depth; within one
    generation the node containing a given leaf is unique, so depth alone
    pins the choice.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if np.any(f.values < 0):
        raise ValueError("linearize requires a nonnegative function")
    tree = f.tree
    vals = _node_values(f, alpha)
    assignment = np.empty(tree.n_leaves, dtype=np.int64)
    leaf_values = np.empty(tree.n_leaves)
    fibers: dict[int, list[int]] = {}
    for i, leaf in enumerate(tree.leaves):
        chain = ancestors(tree, leaf)  # leaf first, root last
        chain_vals = vals[chain]
        assert len({int(tree.depth[n]) for n in chain}) == len(chain)
        m = chain_vals.max()
        # walk from the root end to find the shallowest maximizer
        for n, v in zip(reversed(chain), reversed(chain_vals.tolist())):
            if v == m:
                pick = int(n)
                break
        assignment[i] = pick
        leaf_values[i] = m
        fibers.setdefault(pick, []).append(i)
    return Linearization(
        tree=tree,
        alpha=alpha,
        assignment=assignment,
        leaf_values=leaf_values,
        fibers={q: np.asarray(idx, dtype=np.int64) for q, idx in fibers.items()},
        source_values=f.values.copy(),
    )
