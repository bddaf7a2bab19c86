"""Seeded random instances for property campaigns and their replay files.

Every generator is a pure function of its seed, so campaigns parallelize
over seeds and failures replay exactly.  Weight values are log-uniform in
[e**-2, e**2]; exponents are drawn with 1 < p <= q <= 6 and alpha in [0, 1).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .constants import Exponents, cpq
from .maximal import SimpleFunction
from .stepfun import StepFunction
from .tree import TreeSpace, build_random_tree
from .weights import (
    CarlesonSequence,
    WeightPair,
    carleson_constant,
    embedding_check,
    main_inequality_check,
    operator_norm_lower,
    pair_from_json,
    pair_to_json,
    testing_constant,
)

__all__ = [
    "random_exponents",
    "random_weight_pair",
    "random_function",
    "random_instance",
    "random_carleson_sequence",
    "random_step_function",
    "run_main_inequality_case",
    "run_carleson_case",
    "dump_case",
    "load_case",
]


def random_exponents(rng: np.random.Generator, q_max: float = 6.0) -> Exponents:
    p = rng.uniform(1.1, q_max)
    q = rng.uniform(p, q_max)
    alpha = rng.uniform(0.0, 1.0 - 1e-9)
    return Exponents(p, q, alpha)


def random_weight_pair(
    rng: np.random.Generator, tree: TreeSpace, p: float
) -> WeightPair:
    u = SimpleFunction(tree, np.exp(rng.uniform(-2.0, 2.0, tree.n_leaves)))
    v = SimpleFunction(tree, np.exp(rng.uniform(-2.0, 2.0, tree.n_leaves)))
    return WeightPair(u, v, p)


def random_function(
    rng: np.random.Generator, tree: TreeSpace, signed: bool = False
) -> SimpleFunction:
    vals = np.exp(rng.uniform(-2.0, 2.0, tree.n_leaves))
    if signed:
        vals *= rng.choice([-1.0, 1.0], size=tree.n_leaves)
    return SimpleFunction(tree, vals)


def random_instance(
    seed: int, max_depth: int = 6, max_branch: int = 3
) -> tuple[TreeSpace, WeightPair, Exponents]:
    tree = build_random_tree(seed, max_depth, max_branch)
    rng = np.random.default_rng(seed + 10_000)
    exps = random_exponents(rng)
    pair = random_weight_pair(rng, tree, exps.p)
    return tree, pair, exps


def random_step_function(
    rng: np.random.Generator, max_pieces: int = 16
) -> StepFunction:
    """Random nonnegative step function, occasionally with zero pieces."""
    k = int(rng.integers(1, max_pieces + 1))
    lengths = rng.uniform(0.05, 1.0, size=k)
    values = rng.uniform(0.0, 3.0, size=k)
    values[rng.uniform(size=k) < 0.15] = 0.0
    return StepFunction(lengths, values)


def random_carleson_sequence(
    rng: np.random.Generator, pair: WeightPair, p: float, q: float
) -> CarlesonSequence:
    """Random nonnegative sequence rescaled to Carleson constant exactly 1."""
    tree = pair.tree
    a = rng.uniform(0.0, 1.0, tree.n_nodes) * (rng.uniform(0.0, 1.0, tree.n_nodes) < 0.7)
    if a.sum() == 0.0:
        a[0] = 1.0
    seq = CarlesonSequence(tree, a)
    c = carleson_constant(seq, pair.sigma, p, q)
    return CarlesonSequence(tree, a * c**-q)


def run_main_inequality_case(
    seed: int,
    n_funcs: int = 20,
    ascent_budget: int = 256,
    max_depth: int = 6,
    max_branch: int = 3,
) -> dict:
    """Worst two-weight ratio over random functions plus an ascent witness."""
    tree, pair, exps = random_instance(seed, max_depth, max_branch)
    rng = np.random.default_rng(seed + 20_000)
    L, _ = testing_constant(pair, exps.alpha, exps.q)
    worst = (0.0, 0.0, 0.0)
    for k in range(n_funcs):
        f = random_function(rng, tree, signed=(k % 3 == 0))
        res = main_inequality_check(pair, f, exps.alpha, exps.q)
        if res[2] > worst[2]:
            worst = res
    ratio_ascent, witness = operator_norm_lower(
        pair, exps.alpha, exps.q, budget=ascent_budget, seed=seed
    )
    res = main_inequality_check(pair, witness, exps.alpha, exps.q)
    if res[2] > worst[2]:
        worst = res
    return {
        "seed": seed,
        "p": exps.p,
        "q": exps.q,
        "alpha": exps.alpha,
        "L": L,
        "lhs": worst[0],
        "rhs": worst[1],
        "ratio": worst[2],
        "ascent_ratio": ratio_ascent,
        "bound": cpq(exps.p, exps.q) * L,
    }


def run_carleson_case(seed: int, max_depth: int = 5, max_branch: int = 3) -> dict:
    """Embedding bound for one normalized random sequence and function."""
    tree, pair, exps = random_instance(seed, max_depth, max_branch)
    rng = np.random.default_rng(seed + 30_000)
    seq = random_carleson_sequence(rng, pair, exps.p, exps.q)
    phi = random_function(rng, tree)
    lhs, rhs, ratio = embedding_check(seq, phi, pair.sigma, exps.p, exps.q)
    return {
        "seed": seed,
        "p": exps.p,
        "q": exps.q,
        "alpha": exps.alpha,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
    }


def dump_case(
    path: str | Path,
    tree: TreeSpace,
    pair: WeightPair,
    f: SimpleFunction,
    seed: int,
    exps: Exponents,
) -> None:
    """Writes one replayable fuzz case (tree, weights, function, seed)."""
    payload = {
        "seed": seed,
        "p": exps.p,
        "q": exps.q,
        "alpha": exps.alpha,
        "tree": tree.to_json(),
        "pair": pair_to_json(pair),
        "f": [float(v) for v in f.values],
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_case(path: str | Path) -> tuple[TreeSpace, WeightPair, SimpleFunction, Exponents]:
    data = json.loads(Path(path).read_text())
    tree = TreeSpace.from_json(data["tree"])
    pair = pair_from_json(tree, data["pair"])
    f = SimpleFunction(tree, data["f"])
    return tree, pair, f, Exponents(data["p"], data["q"], data["alpha"])
