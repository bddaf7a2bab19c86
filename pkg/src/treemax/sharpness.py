"""Extremal power-law weights on the biased tree and sharpness experiments.

On [0, 1] with the prefix-splitting tree, the weight family

    u(w) = ((1-a)q/p) * w**(q(1-a)/p - 1),   v(w) = (1-a)**(1-p) * w**(a(p-1)),
    sigma(w) = v(w)**(1-p') = (1-a) * w**(-a),

has closed-form integrals over every node interval, keeps the testing
constant exactly 1 on prefix intervals [0, r] and below 1 elsewhere, and
drives the ratio of the two-weight norms toward the sharp constant as the
tree refines.  The singularity of sigma at 0 is never evaluated pointwise;
only interval integrals appear, all finite for a < 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bellman import bliss_inequality_check
from .constants import cpq, sharpness_regime
from .maximal import SimpleFunction, frac_maximal
from .quadrature import integrate_over_breakpoints
from .stepfun import StepFunction
from .tree import TreeSpace, build_sharpness_tree
from .weights import WeightPair, weighted_lp_norm

__all__ = [
    "ExtremalWeights",
    "extremal_pair",
    "frac_sigma_average",
    "reciprocal_convexity_gap",
    "reciprocal_convexity_inner",
    "technical_gap_grid",
    "jensen_route_gap",
    "jensen_route_rhs",
    "NodeRatioRow",
    "verify_extremal_testing",
    "lower_bound_trial",
    "power_profile",
    "RatioExperiment",
    "ratio_experiment",
    "ratio_vs_refinement",
    "indicator_prefix_trend",
    "power_substitution_check",
    "SubstitutionReport",
]


@dataclass(frozen=True)
class ExtremalWeights:
    """Closed-form interval integrals of the extremal weight family."""

    alpha: float
    p: float
    q: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must lie in [0, 1)")

    @property
    def u_exponent(self) -> float:
        return self.q * (1.0 - self.alpha) / self.p

    @property
    def sigma_exponent(self) -> float:
        return 1.0 - self.alpha

    @property
    def v_exponent(self) -> float:
        return self.alpha * (self.p - 1.0) + 1.0

    def u_mass(self, a: float, b: float) -> float:
        e = self.u_exponent
        return b**e - a**e

    def sigma_mass(self, a: float, b: float) -> float:
        e = self.sigma_exponent
        return b**e - a**e

    def v_mass(self, a: float, b: float) -> float:
        e = self.v_exponent
        coef = (1.0 - self.alpha) ** (1.0 - self.p) / e
        return coef * (b**e - a**e)

    def v_pointwise(self, w: float) -> float:
        return (1.0 - self.alpha) ** (1.0 - self.p) * w ** (
            self.alpha * (self.p - 1.0)
        )


def extremal_pair(tree: TreeSpace, alpha: float, p: float, q: float) -> WeightPair:
    """Leaf weights whose value times leaf mass equals the exact interval
    integral of u, v and sigma; duality holds in the integral sense."""
    ew = ExtremalWeights(alpha, p, q)
    n = tree.n_leaves
    u_vals = np.empty(n)
    v_vals = np.empty(n)
    s_vals = np.empty(n)
    for i, leaf in enumerate(tree.leaves):
        exact = tree.exact_intervals[leaf]
        if exact is None:
            raise ValueError(f"leaf {leaf} carries no interval")
        lo, hi, den = exact
        a, b = lo / den, hi / den
        mu = tree.leaf_mass[i]
        u_vals[i] = ew.u_mass(a, b) / mu
        v_vals[i] = ew.v_mass(a, b) / mu
        s_vals[i] = ew.sigma_mass(a, b) / mu
    return WeightPair(
        SimpleFunction(tree, u_vals),
        SimpleFunction(tree, v_vals),
        p,
        sigma=SimpleFunction(tree, s_vals),
    )


def frac_sigma_average(a: float, b: float, alpha: float) -> float:
    """(b-a)**(alpha-1) * (b**(1-alpha) - a**(1-alpha)).

    This is mass**alpha times the average of the power-law dual weight over
    [a, b]; it equals 1 exactly when a = 0 (the powers cancel), and for
    fixed b it only grows as the left endpoint moves down to 0.
    """
    if not 0.0 <= a < b:
        raise ValueError(f"need 0 <= a < b, got a={a}, b={b}")
    if a == 0.0:
        return 1.0
    e = 1.0 - alpha
    return (b - a) ** (alpha - 1.0) * (b**e - a**e)


def reciprocal_convexity_gap(x, s):
    """D(x) = (x**(1/s) + 1) ln x - 2 s (x**(1/s) - 1), nonnegative for x > 1.

    Nonnegativity of D certifies convexity of s -> 1/(x**(1/s) - 1), the
    fact behind the monotonicity of the per-node testing ratios.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(x <= 1.0) or np.any(s <= 0.0):
        raise ValueError("need x > 1 and s > 0")
    r = x ** (1.0 / s)
    return (r + 1.0) * np.log(x) - 2.0 * s * (r - 1.0)


def reciprocal_convexity_inner(x, s):
    """E(x) = (1/s) x**(1/s) ln x + 1 - x**(1/s); E >= 0 drives D' >= 0."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(x <= 1.0) or np.any(s <= 0.0):
        raise ValueError("need x > 1 and s > 0")
    r = x ** (1.0 / s)
    return r * np.log(x) / s + 1.0 - r


def technical_gap_grid(
    x_count: int = 200,
    s_count: int = 200,
    x_max: float = 1e3,
    s_range: tuple[float, float] = (1e-2, 1e2),
) -> tuple[float, float]:
    """Minimum of D and of E over a log grid; both should be >= -1e-12."""
    x = 1.0 + np.logspace(-6, np.log10(x_max - 1.0), x_count)
    s = np.logspace(np.log10(s_range[0]), np.log10(s_range[1]), s_count)
    X, S = np.meshgrid(x, s)
    return (
        float(reciprocal_convexity_gap(X, S).min()),
        float(reciprocal_convexity_inner(X, S).min()),
    )


def jensen_route_rhs(x, alpha: float, p: float, q: float):
    """(1 - 1/p) / (x**(1-alpha) - 1) + (1/p) / (x**(q(1-alpha)/p) - 1).

    The denominators are computed as expm1 of e*log(x): near x = 1 all three
    quantities in the route are of size 1/(x-1) and cancel to O(x-1), so the
    naive power-minus-one form would drown the gap in rounding noise.
    """
    x = np.asarray(x, dtype=float)
    lx = np.log(x)
    return (1.0 - 1.0 / p) / np.expm1((1.0 - alpha) * lx) + (1.0 / p) / np.expm1(
        q * (1.0 - alpha) / p * lx
    )


def jensen_route_gap(x, p: float, q: float):
    """rhs - 1/(x-1) at the boundary alpha = 1/p - 1/q; nonnegative for x > 1.

    It suffices to check the boundary: the rhs only grows with alpha.
    """
    alpha0 = 1.0 / p - 1.0 / q
    x = np.asarray(x, dtype=float)
    if np.any(x <= 1.0):
        raise ValueError("need x > 1")
    return jensen_route_rhs(x, alpha0, p, q) - 1.0 / np.expm1(np.log(x))


# ----------------------------------------------------------------------
# testing condition with exact node integrals
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class NodeRatioRow:
    node: int
    lo: float
    hi: float
    lhs: float
    rhs: float
    ratio: float
    prefix: bool


def verify_extremal_testing(
    tree: TreeSpace, alpha: float, p: float, q: float
) -> tuple[float, list[NodeRatioRow]]:
    """Per-node testing ratios of the extremal pair, via closed forms only.

    On this tree the maximal function of sigma restricted to a node is
    constant on the node: 1 on prefixes [0, r] and frac_sigma_average(l, r)
    on chunks (l, r].  No quadrature enters, so the ratios are clean to
    float rounding: exactly 1 at prefixes and <= 1 elsewhere.
    """
    ew = ExtremalWeights(alpha, p, q)
    rows = []
    L = 0.0
    for node in range(tree.n_nodes):
        exact = tree.exact_intervals[node]
        if exact is None:
            raise ValueError(f"node {node} carries no interval")
        lo, hi, den = exact
        a, b = lo / den, hi / den
        mval = frac_sigma_average(a, b, alpha)
        lhs = mval * ew.u_mass(a, b) ** (1.0 / q)
        rhs = ew.sigma_mass(a, b) ** (1.0 / p)
        ratio = lhs / rhs
        rows.append(
            NodeRatioRow(
                node=node, lo=a, hi=b, lhs=lhs, rhs=rhs, ratio=ratio, prefix=lo == 0
            )
        )
        L = max(L, ratio)
    return L, rows


# ----------------------------------------------------------------------
# trial functions and the refinement experiment
# ----------------------------------------------------------------------


def lower_bound_trial(tree: TreeSpace, phi: SimpleFunction, alpha: float) -> SimpleFunction:
    """Lower envelope of the maximal function using one prefix per leaf.

    Each leaf with interval (a, b] is contained in the prefix [0, b]; the
    envelope takes only that candidate: mass([0, b])**(alpha-1) times the
    integral of phi over [0, b].  Always dominated by the maximal function.
    """
    if np.any(phi.values < 0):
        raise ValueError("phi must be nonnegative")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    prefix_mass = np.empty(tree.n_leaves)
    for i, leaf in enumerate(tree.leaves):
        exact = tree.exact_intervals[leaf]
        if exact is None:
            raise ValueError(f"leaf {leaf} carries no interval")
        _, hi, den = exact
        prefix_mass[i] = hi / den
    cum = np.cumsum(phi.values * tree.leaf_mass)
    return SimpleFunction(tree, prefix_mass ** (alpha - 1.0) * cum)


def power_profile(tree: TreeSpace, gamma: float) -> SimpleFunction:
    """Trial function with leaf value (right endpoint)**(-gamma)."""
    vals = np.empty(tree.n_leaves)
    for i, leaf in enumerate(tree.leaves):
        exact = tree.exact_intervals[leaf]
        if exact is None:
            raise ValueError(f"leaf {leaf} carries no interval")
        _, hi, den = exact
        vals[i] = (hi / den) ** (-gamma)
    return SimpleFunction(tree, vals)


def _norm_ratio(
    pair: WeightPair, values: np.ndarray, alpha: float, q: float
) -> float:
    f = SimpleFunction(pair.tree, values)
    den = weighted_lp_norm(f, pair.v, pair.p)
    if den == 0.0:
        return 0.0
    return weighted_lp_norm(frac_maximal(f, alpha), pair.u, q) / den


@dataclass(frozen=True)
class RatioExperiment:
    N: int
    alpha: float
    p: float
    q: float
    L: float
    bound: float
    sharp_regime: bool
    gammas: np.ndarray
    ratios: np.ndarray
    best_gamma: float
    best_ratio: float
    within_bound: bool


def ratio_experiment(
    N: int,
    alpha: float,
    p: float,
    q: float,
    gammas: np.ndarray | None = None,
    budget: int = 400,
) -> RatioExperiment:
    """Largest two-weight norm ratio reachable by the power trial family.

    Scans the one-parameter family of power profiles, then refines the best
    one by deterministic coordinate ascent with multiplicative steps until
    the evaluation budget is exhausted.  The achieved ratio is reported,
    never asserted to approach the constant; it must stay below
    cpq(p, q) times the measured testing constant.
    """
    tree = build_sharpness_tree(N)
    pair = extremal_pair(tree, alpha, p, q)
    L, _ = verify_extremal_testing(tree, alpha, p, q)
    bound = cpq(p, q) * L
    if gammas is None:
        # the norm of the trial profile degenerates at (alpha(p-1)+1)/p in
        # the continuum; the discrete optimum sits above it, so scan past it
        gamma_hi = (alpha * (p - 1.0) + 1.0) / p + 1.0
        gammas = np.linspace(0.0, gamma_hi, 33)
    if len(gammas) == 0:
        raise ValueError("need at least one trial exponent")

    ratios = np.empty(len(gammas))
    evals = 0
    best_ratio = -np.inf
    best_values = None
    for i, g in enumerate(gammas):
        values = power_profile(tree, g).values
        ratios[i] = _norm_ratio(pair, values, alpha, q)
        evals += 1
        if ratios[i] > best_ratio:
            best_ratio = ratios[i]
            best_gamma = float(g)
            best_values = values

    values = best_values.copy()
    current = best_ratio
    step = 0.25
    while evals < budget and step >= 1e-4:
        improved = False
        for i in range(tree.n_leaves):
            if evals >= budget:
                break
            for factor in (1.0 + step, 1.0 / (1.0 + step)):
                old = values[i]
                values[i] = old * factor
                trial = _norm_ratio(pair, values, alpha, q)
                evals += 1
                if trial > current:
                    current = trial
                    improved = True
                    break
                values[i] = old
                if evals >= budget:
                    break
        if current > best_ratio:
            best_ratio = current
        if not improved:
            step *= 0.5

    return RatioExperiment(
        N=N,
        alpha=alpha,
        p=p,
        q=q,
        L=L,
        bound=bound,
        sharp_regime=sharpness_regime(p, q, alpha),
        gammas=np.asarray(gammas, dtype=float),
        ratios=ratios,
        best_gamma=best_gamma,
        best_ratio=float(best_ratio),
        within_bound=best_ratio <= bound * (1.0 + 1e-9) + 1e-12,
    )


def ratio_vs_refinement(
    schedule: list[int],
    alpha: float,
    p: float,
    q: float,
    budget: int = 400,
) -> list[dict]:
    """Ratio experiment along a refinement schedule, with the gap to cpq."""
    target = cpq(p, q)
    rows = []
    for N in schedule:
        exp = ratio_experiment(N, alpha, p, q, budget=budget)
        rows.append(
            {
                "N": N,
                "best_gamma": exp.best_gamma,
                "best_ratio": exp.best_ratio,
                "bound": exp.bound,
                "gap": target - exp.best_ratio,
                "within_bound": exp.within_bound,
            }
        )
    return rows


def indicator_prefix_trend(
    max_depth: int, alpha: float, p: float, q: float
) -> list[dict]:
    """Indicator ratios on shrinking prefix sets under flat weights.

    With u = v = 1 the single-indicator lower bound for the operator norm
    on a set of mass mu is mu**(alpha + 1/q - 1/p); when alpha < 1/p - 1/q
    this blows up as mu shrinks, which is why no finite bound can hold
    there on refining trees.  Exploratory output only.
    """
    rows = []
    for depth in range(1, max_depth + 1):
        mu = 2.0**-depth
        rows.append(
            {
                "depth": depth,
                "mass": mu,
                "expression": mu ** (alpha + 1.0 / q - 1.0 / p),
            }
        )
    return rows


# ----------------------------------------------------------------------
# change of variables and dilation checks
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SubstitutionReport:
    hardy_value: float
    bliss_value: float
    diff: float
    dilation_ratio_base: float
    dilation_ratio_scaled: float
    dilation_diff: float


def power_substitution_check(
    phi: StepFunction,
    alpha: float,
    p: float,
    q: float,
    tol: float = 1e-9,
    dilation: float = 10.0,
) -> SubstitutionReport:
    """Checks the power change of variables and the dilation invariance.

    Two quadratures of the same quantity: the weighted integral

        int_0^1 (t**(alpha-1) int_0^t phi)**q u(t) dt

    against its form after t = r**(1/(1-alpha)), which is the localized
    sharp one-dimensional integral in disguise.  Also verifies that the
    ratio in ``bliss_inequality_check`` is invariant under stretching the
    domain of phi, which is the scaling step that globalizes the bound.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    beta = 1.0 / (1.0 - alpha)
    coef_u = (1.0 - alpha) * q / p
    eu = q * (1.0 - alpha) / p - 1.0
    qp = q / p
    v0 = float(phi.values[0])
    # exponents of both integrands at 0 are >= 0 since q >= p; equality only
    # at alpha = 0, p = q, where the limit is the first piece value to the q
    hardy_exp0 = q * alpha + eu
    bliss_exp0 = qp - 1.0 + q * (beta - 1.0)

    def hardy_integrand(t: float) -> float:
        if t <= 0.0:
            return 0.0 if hardy_exp0 > 0 else coef_u * v0**q
        ft = float(phi.integral_to(t))
        return (t ** (alpha - 1.0) * ft) ** q * coef_u * t**eu

    def bliss_integrand(r: float) -> float:
        if r <= 0.0:
            return 0.0 if bliss_exp0 > 0 else qp * v0**q
        ft = float(phi.integral_to(r**beta))
        return qp * r ** (qp - 1.0) * (ft / r) ** q

    bk = [float(b) for b in phi.breakpoints() if 0.0 < b < 1.0]
    hardy = integrate_over_breakpoints(hardy_integrand, [0.0, *bk, 1.0], tol)
    bk_r = [float(b) ** (1.0 / beta) for b in phi.breakpoints() if 0.0 < b < 1.0]
    bliss = integrate_over_breakpoints(bliss_integrand, [0.0, *sorted(bk_r), 1.0], tol)

    _, _, ratio_base = bliss_inequality_check(phi, p, q, tol)
    _, _, ratio_scaled = bliss_inequality_check(phi.scale_domain(dilation), p, q, tol)
    return SubstitutionReport(
        hardy_value=hardy,
        bliss_value=bliss,
        diff=hardy - bliss,
        dilation_ratio_base=ratio_base,
        dilation_ratio_scaled=ratio_scaled,
        dilation_diff=ratio_base - ratio_scaled,
    )
