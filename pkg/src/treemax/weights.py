"""Weight pairs, weighted norms, testing constants and Carleson embeddings.

Everything here operates on a fixed tree space.  A weight is a strictly
positive leaf function; for a pair (u, v) and exponent p the dual weight is
sigma = v**(1 - p') with p' = p/(p-1).  The testing constant is the largest,
over tree nodes Q, of

    ( int_Q M_alpha(sigma * chi_Q)**q u dmu )**(1/q)  /  sigma(Q)**(1/p)

where M_alpha is the fractional maximal operator restricted to the tree.
The two-weight bound then controls the full operator norm by cpq(p, q)
times that constant, which is what ``main_inequality_check`` certifies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import cpq
from .maximal import (
    SimpleFunction,
    frac_maximal,
    linearize,
    node_integrals,
)
from .tree import TreeSpace

__all__ = [
    "WeightPair",
    "CarlesonSequence",
    "dual_weight",
    "weighted_lp_norm",
    "testing_ratios",
    "testing_constant",
    "carleson_constant",
    "carleson_from_linearization",
    "embedding_check",
    "main_inequality_check",
    "operator_norm_lower",
]

REL_TOL = 1e-9
ABS_FLOOR = 1e-12


def _require_positive(f: SimpleFunction, name: str) -> None:
    if np.any(f.values <= 0) or not np.all(np.isfinite(f.values)):
        raise ValueError(f"{name} must be strictly positive and finite")


def dual_weight(v: SimpleFunction, p: float) -> SimpleFunction:
    """Leafwise v**(1 - p'), the dual weight of v for the exponent p."""
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    _require_positive(v, "v")
    p_prime = p / (p - 1.0)
    return v.with_values(v.values ** (1.0 - p_prime))


class WeightPair:
    """A pair (u, v) of weights with its derived dual weight.

    ``sigma`` defaults to the leafwise dual of v and is then checked against
    it.  An explicit sigma may be supplied instead (the extremal power-law
    construction fixes leaf values by exact interval integrals, where the
    duality holds in the integral sense rather than leafwise).
    """

    def __init__(
        self,
        u: SimpleFunction,
        v: SimpleFunction,
        p: float,
        sigma: SimpleFunction | None = None,
    ) -> None:
        if u.tree is not v.tree:
            raise ValueError("u and v must live on the same tree")
        if p <= 1.0:
            raise ValueError(f"p must exceed 1, got {p}")
        _require_positive(u, "u")
        _require_positive(v, "v")
        if sigma is None:
            sigma = dual_weight(v, p)
        else:
            if sigma.tree is not u.tree:
                raise ValueError("sigma must live on the same tree")
            _require_positive(sigma, "sigma")
        self.u = u
        self.v = v
        self.p = float(p)
        self.sigma = sigma

    @property
    def tree(self) -> TreeSpace:
        return self.u.tree

    def __repr__(self) -> str:
        return f"WeightPair(p={self.p}, tree={self.tree!r})"


def weighted_lp_norm(f: SimpleFunction, w: SimpleFunction, p: float) -> float:
    """(int |f|**p w dmu)**(1/p)."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    _require_positive(w, "w")
    total = float(
        (np.abs(f.values) ** p * w.values * f.tree.leaf_mass).sum()
    )
    return total ** (1.0 / p)


def testing_ratios(pair: WeightPair, alpha: float, q: float) -> np.ndarray:
    """Per-node testing ratio; the testing constant is the maximum entry.

    For each node Q the maximal function of sigma*chi_Q is evaluated on the
    subtree of Q only: for any node R containing a point of Q, either
    R lies inside Q, or R contains Q and its candidate value
    mass(R)**(alpha-1) * sigma(Q) is dominated by the value at R = Q because
    alpha < 1.  So a downward pass over the subtree suffices.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    tree = pair.tree
    sig = node_integrals(pair.sigma)
    vals = tree.mass ** (alpha - 1.0) * sig
    u_leaf = pair.u.values * tree.leaf_mass
    pre = tree.preorder
    pos = tree.pos
    parent = tree.parent
    is_leaf = tree.is_leaf
    leaf_lo = tree.leaf_lo
    size = tree.subtree_size
    inv_q = 1.0 / q
    inv_p = 1.0 / pair.p

    best = np.empty(tree.n_nodes)
    ratios = np.empty(tree.n_nodes)
    for Q in range(tree.n_nodes):
        p0 = pos[Q]
        acc = 0.0
        best[p0] = vals[Q]
        if is_leaf[Q]:
            acc = vals[Q] ** q * u_leaf[leaf_lo[Q]]
        else:
            for j in range(p0 + 1, p0 + size[Q]):
                n = pre[j]
                b = vals[n]
                bp = best[pos[parent[n]]]
                if bp > b:
                    b = bp
                best[j] = b
                if is_leaf[n]:
                    acc += b**q * u_leaf[leaf_lo[n]]
        ratios[Q] = acc**inv_q / sig[Q] ** inv_p
    return ratios


def testing_constant(pair: WeightPair, alpha: float, q: float) -> tuple[float, int]:
    """Largest per-node testing ratio together with a witness node."""
    ratios = testing_ratios(pair, alpha, q)
    witness = int(np.argmax(ratios))
    return float(ratios[witness]), witness


@dataclass(frozen=True, eq=False)
class CarlesonSequence:
    """A nonnegative number attached to every tree node."""

    tree: TreeSpace
    a: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.a, dtype=float)
        if arr.shape != (self.tree.n_nodes,):
            raise ValueError("need one entry per tree node")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("entries must be nonnegative and finite")
        object.__setattr__(self, "a", arr)

    def subtree_sums(self) -> np.ndarray:
        """Sum of the entries over each node's full subtree."""
        sums = self.a.copy()
        for node in self.tree.preorder[::-1]:
            p = self.tree.parent[node]
            if p >= 0:
                sums[p] += sums[node]
        return sums


def carleson_constant(
    seq: CarlesonSequence, sigma: SimpleFunction, p: float, q: float
) -> float:
    """max over Q of (sum over the subtree of Q)**(1/q) / sigma(Q)**(1/p)."""
    sums = seq.subtree_sums()
    sig = node_integrals(sigma)
    return float(np.max(sums ** (1.0 / q) / sig ** (1.0 / p)))


def carleson_from_linearization(
    pair: WeightPair, f: SimpleFunction, alpha: float, q: float
) -> CarlesonSequence:
    """Sequence a_Q = (mass(Q)**alpha * avg(sigma, Q))**q * u(fiber(Q)).

    The fibers come from linearizing the maximal operator applied to
    f * sigma; summing a_Q times the q-th power of the sigma-average of f
    over Q reproduces int (M(f sigma))**q u exactly.
    """
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    tree = pair.tree
    g = f.with_values(f.values * pair.sigma.values)
    lin = linearize(g, alpha)
    sig_avg = node_integrals(pair.sigma) / tree.mass
    u_leaf = pair.u.values * tree.leaf_mass
    a = np.zeros(tree.n_nodes)
    for node, leaf_idx in lin.fibers.items():
        a[node] = (tree.mass[node] ** alpha * sig_avg[node]) ** q * u_leaf[
            leaf_idx
        ].sum()
    return CarlesonSequence(tree, a)


def embedding_check(
    seq: CarlesonSequence,
    phi: SimpleFunction,
    sigma: SimpleFunction,
    p: float,
    q: float,
) -> tuple[float, float, float]:
    """Carleson embedding bound: returns (lhs, rhs, lhs/rhs) with lhs <= rhs.

    lhs = (sum_Q a_Q * wavg(phi, Q)**q)**(1/q) with sigma-weighted averages,
    rhs = cpq(p, q) * (int phi**p dsigma)**(1/p).  Requires the sequence to
    satisfy the normalized Carleson condition (constant <= 1).
    """
    if np.any(phi.values < 0):
        raise ValueError("phi must be nonnegative")
    constant = carleson_constant(seq, sigma, p, q)
    if constant > 1.0 + REL_TOL:
        raise ValueError(
            f"sequence violates the Carleson condition (constant {constant:.6g})"
        )
    tree = seq.tree
    sig_leaf = sigma.values * tree.leaf_mass
    pref_s = np.concatenate(([0.0], np.cumsum(sig_leaf)))
    pref_fs = np.concatenate(([0.0], np.cumsum(phi.values * sig_leaf)))
    sig = pref_s[tree.leaf_hi] - pref_s[tree.leaf_lo]
    wavg = (pref_fs[tree.leaf_hi] - pref_fs[tree.leaf_lo]) / sig
    lhs = float((seq.a * wavg**q).sum() ** (1.0 / q))
    rhs = cpq(p, q) * float((phi.values**p * sig_leaf).sum() ** (1.0 / p))
    ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return lhs, rhs, ratio


def main_inequality_check(
    pair: WeightPair, f: SimpleFunction, alpha: float, q: float
) -> tuple[float, float, float]:
    """Two-weight bound for one function: returns (lhs, rhs, lhs/rhs).

    lhs is the L^q(u) norm of the maximal function of f, rhs is
    cpq(p, q) * testing constant * L^p(v) norm of f; the contract is
    lhs <= rhs for every tree-simple f.
    """
    L, _ = testing_constant(pair, alpha, q)
    lhs = weighted_lp_norm(frac_maximal(f, alpha), pair.u, q)
    rhs = cpq(pair.p, q) * L * weighted_lp_norm(f, pair.v, pair.p)
    ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return lhs, rhs, ratio


def _norm_ratio(
    pair: WeightPair, values: np.ndarray, alpha: float, q: float
) -> float:
    f = SimpleFunction(pair.tree, values)
    num = weighted_lp_norm(frac_maximal(f, alpha), pair.u, q)
    den = weighted_lp_norm(f, pair.v, pair.p)
    return num / den if den > 0 else 0.0


def operator_norm_lower(
    pair: WeightPair,
    alpha: float,
    q: float,
    budget: int,
    seed: int = 0,
    starts: int = 4,
) -> tuple[float, SimpleFunction]:
    """Lower-bounds the operator norm by ascent over nonnegative functions.

    Seeded random starts followed by coordinate ascent with multiplicative
    perturbations; the step halves after a sweep without improvement.  The
    evaluation sequence does not depend on the budget, so a larger budget
    only extends it and the best ratio found is monotone in the budget.
    Deterministic in the seed.  Purely a lower bound.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    tree = pair.tree
    rng = np.random.default_rng(seed)
    start_vals = [np.ones(tree.n_leaves)]
    for _ in range(max(0, starts - 1)):
        start_vals.append(np.exp(rng.uniform(-2.0, 2.0, size=tree.n_leaves)))

    evals = 0
    best_ratio = -np.inf
    best_values = start_vals[0]
    for values in start_vals:
        if evals >= budget:
            break
        values = values.copy()
        ratio = _norm_ratio(pair, values, alpha, q)
        evals += 1
        if ratio > best_ratio:
            best_ratio, best_values = ratio, values.copy()
        step = 0.5
        for _ in range(8):
            if evals >= budget or step < 1e-3:
                break
            improved = False
            for i in range(tree.n_leaves):
                if evals >= budget:
                    break
                for factor in (1.0 + step, 1.0 / (1.0 + step)):
                    old = values[i]
                    values[i] = old * factor
                    trial = _norm_ratio(pair, values, alpha, q)
                    evals += 1
                    if trial > ratio:
                        ratio = trial
                        improved = True
                        break
                    values[i] = old
                    if evals >= budget:
                        break
                if ratio > best_ratio:
                    best_ratio, best_values = ratio, values.copy()
            if not improved:
                step *= 0.5
    return float(best_ratio), SimpleFunction(tree, best_values)


def pair_to_json(pair: WeightPair) -> dict:
    return {
        "p": pair.p,
        "u": [float(x) for x in pair.u.values],
        "v": [float(x) for x in pair.v.values],
        "sigma": [float(x) for x in pair.sigma.values],
    }


def pair_from_json(tree: TreeSpace, data: dict) -> WeightPair:
    return WeightPair(
        SimpleFunction(tree, data["u"]),
        SimpleFunction(tree, data["v"]),
        data["p"],
        sigma=SimpleFunction(tree, data["sigma"]),
    )
