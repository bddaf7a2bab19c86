"""Shared fixtures and independent oracles.

The oracles here recompute quantities by definition-level brute force
(explicit leaf loops, membership tests, trapezoid refinement) and stay
independent of the fast paths they are used to check.
"""

from __future__ import annotations

import numpy as np
import pytest

from treemax import SimpleFunction, ancestors, frac_maximal
from treemax.weights import WeightPair


def leaves_under(tree, node) -> list[int]:
    """Leaf ids below a node, by explicit ancestor membership."""
    return [leaf for leaf in tree.leaves if node in ancestors(tree, leaf)]


def brute_average(f, node) -> float:
    tree = f.tree
    num = 0.0
    den = 0.0
    for leaf in leaves_under(tree, node):
        i = tree.leaf_index(leaf)
        num += f.values[i] * tree.leaf_mass[i]
        den += tree.leaf_mass[i]
    return num / den


def brute_weighted_average(f, node, sigma) -> float:
    tree = f.tree
    num = 0.0
    den = 0.0
    for leaf in leaves_under(tree, node):
        i = tree.leaf_index(leaf)
        num += f.values[i] * sigma.values[i] * tree.leaf_mass[i]
        den += sigma.values[i] * tree.leaf_mass[i]
    return num / den


def brute_frac_maximal(f, alpha) -> np.ndarray:
    """Per-leaf max over ancestors of mass**alpha times the brute average."""
    tree = f.tree
    g = f.with_values(np.abs(f.values))
    out = np.empty(tree.n_leaves)
    for i, leaf in enumerate(tree.leaves):
        out[i] = max(
            tree.mass[n] ** alpha * brute_average(g, n) for n in ancestors(tree, leaf)
        )
    return out


def brute_testing_ratio(pair: WeightPair, node: int, alpha: float, q: float) -> float:
    """Testing ratio of one node via the global maximal operator.

    Builds sigma * chi_Q explicitly, applies the full-tree operator, and
    integrates over the node; does not share the subtree shortcut with the
    implementation under test.
    """
    tree = pair.tree
    chi = np.zeros(tree.n_leaves)
    sl = tree.leaf_slice(node)
    chi[sl] = pair.sigma.values[sl]
    M = frac_maximal(SimpleFunction(tree, chi), alpha)
    lhs_q = float(
        (M.values[sl] ** q * pair.u.values[sl] * tree.leaf_mass[sl]).sum()
    )
    sigma_q = float((pair.sigma.values[sl] * tree.leaf_mass[sl]).sum())
    return lhs_q ** (1.0 / q) / sigma_q ** (1.0 / pair.p)


def richardson_trapezoid(fn, a: float, b: float, panels: int) -> float:
    """Trapezoid at n and 2n panels, Richardson-extrapolated."""

    def trap(n):
        x = np.linspace(a, b, n + 1)
        y = np.array([fn(t) for t in x])
        return float(np.trapezoid(y, x))

    t1 = trap(panels)
    t2 = trap(2 * panels)
    return t2 + (t2 - t1) / 3.0


def node_value_oracle(f, node, alpha) -> float:
    return f.tree.mass[node] ** alpha * brute_average(
        f.with_values(np.abs(f.values)), node
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
