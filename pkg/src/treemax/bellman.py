"""Bliss-type functional, its numerical supremum, and structural checks.

For a nonnegative step function phi on [0, s] and a budget 0 <= t <= s**(q/p)
the functional is

    J(phi, t) = int_0^{t**(p/q)} u**(q/p-1) * ((1/u) int_0^u phi)**q du
              = (p/q) * int_0^t ((1/w**(p/q)) int_0^{w**(p/q)} phi)**q dw,

where the substituted form on the right has a bounded integrand and is the
one actually integrated.  ``bellman_lower`` maximizes J over nonincreasing
m-piece step functions with prescribed mean and p-th moment mean, which
yields certified lower bounds for the value function

    B(x, y, s, t) = sup { J(phi, t) : mean(phi) = x, pmean(phi, p) = y }.

The restriction to nonincreasing phi is lossless: rearranging any candidate
decreasingly preserves both moments and can only increase every running
average, hence J.  The same rearrangement and concatenation devices certify
the structural inequalities checked by ``check_tail_extension`` and
``check_merge_superadditivity``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .constants import cpq
from .quadrature import integrate_over_breakpoints
from .stepfun import StepFunction, concat, rearrange_decreasing

__all__ = [
    "BellmanPoint",
    "bliss_functional",
    "bliss_functional_raw",
    "bliss_inequality_check",
    "bellman_lower",
    "bellman_cap",
    "check_tail_extension",
    "check_merge_superadditivity",
    "TailExtensionReport",
    "MergeReport",
]


@dataclass(frozen=True)
class BellmanPoint:
    """State (x, y, s, t): prescribed mean, p-th moment mean, length, budget."""

    x: float
    y: float
    s: float
    t: float

    def validate(self, p: float, q: float, rtol: float = 1e-12) -> None:
        if self.x < 0 or self.y < 0 or self.t < 0 or self.s <= 0:
            raise ValueError(f"coordinates out of range: {self}")
        if self.x**p > self.y * (1.0 + rtol) + 1e-300:
            raise ValueError(f"infeasible moments: x**p > y at {self}")
        if self.t ** (p / q) > self.s * (1.0 + rtol):
            raise ValueError(f"budget too large: t**(p/q) > s at {self}")


# ----------------------------------------------------------------------
# the functional
# ----------------------------------------------------------------------


def _check_budget(phi: StepFunction, t: float, p: float, q: float) -> float:
    t_max = phi.total_length ** (q / p)
    if t < 0 or t > t_max * (1.0 + 1e-12):
        raise ValueError(f"t={t} outside [0, s**(q/p)]={t_max}")
    return min(t, t_max)


def bliss_functional(
    phi: StepFunction, t: float, p: float, q: float, tol: float = 1e-9
) -> float:
    """J(phi, t) by adaptive Simpson in the substituted (bounded) variable.

    The integration range is cut at the images of the piece boundaries, so
    each panel has a smooth integrand; on [0, w_1] the inner average equals
    the first piece value and the contribution is computed exactly.
    """
    t = _check_budget(phi, t, p, q)
    if t == 0.0:
        return 0.0
    pq = p / q
    bk = phi.breakpoints().tolist()
    cum = phi.cumulative().tolist()
    vals = phi.values.tolist()
    mlast = len(vals) - 1

    def avg_pow(w: float) -> float:
        x = w**pq
        i = bisect.bisect_right(bk, x) - 1
        if i > mlast:
            i = mlast
        return ((cum[i] + vals[i] * (x - bk[i])) / x) ** q

    w_first = bk[1] ** (q / p)
    head = min(w_first, t)
    total = head * vals[0] ** q
    if t > head:
        pts = [head]
        for xb in bk[2:-1]:
            wb = xb ** (q / p)
            if head < wb < t:
                pts.append(wb)
        pts.append(t)
        total += integrate_over_breakpoints(avg_pow, pts, tol)
    return pq * total


def bliss_functional_raw(
    phi: StepFunction, t: float, p: float, q: float, tol: float = 1e-6
) -> float:
    """Same quantity integrated in the original variable (cross-check only).

    The weight u**(q/p-1) makes the integrand merely Hoelder at 0, so this
    path is kept at loose tolerance purely as an independent oracle.
    """
    t = _check_budget(phi, t, p, q)
    if t == 0.0:
        return 0.0
    T = min(t ** (p / q), phi.total_length)
    bk = phi.breakpoints().tolist()
    cum = phi.cumulative().tolist()
    vals = phi.values.tolist()
    mlast = len(vals) - 1
    qp = q / p

    def raw(u: float) -> float:
        i = bisect.bisect_right(bk, u) - 1
        if i > mlast:
            i = mlast
        return u ** (qp - 1.0) * ((cum[i] + vals[i] * (u - bk[i])) / u) ** q

    head = min(bk[1], T)
    # on [0, x_1] the average is the first value: integral in closed form
    total = vals[0] ** q * head**qp / qp
    if T > head:
        pts = [head] + [xb for xb in bk[2:-1] if head < xb < T] + [T]
        total += integrate_over_breakpoints(raw, pts, tol)
    return total


def bliss_inequality_check(
    phi: StepFunction, p: float, q: float, tol: float = 1e-9
) -> tuple[float, float, float]:
    """Sharp one-dimensional bound: returns (lhs, rhs, lhs/rhs), lhs <= rhs.

    lhs = J(phi, s**(q/p))**(1/q);  rhs = (p/q)**(1/q) * cpq(p, q) * ||phi||_p.
    """
    s = phi.total_length
    lhs = bliss_functional(phi, s ** (q / p), p, q, tol) ** (1.0 / q)
    rhs = (p / q) ** (1.0 / q) * cpq(p, q) * phi.lp_norm(p)
    ratio = 0.0 if lhs == 0.0 else lhs / rhs
    return lhs, rhs, ratio


def bellman_cap(x: float, y: float, s: float, p: float, q: float) -> float:
    """Upper bound (p/q) * cpq(p,q)**q * (s*y)**(q/p) for the value function."""
    return (p / q) * cpq(p, q) ** q * (s * y) ** (q / p)


# ----------------------------------------------------------------------
# fast fixed-grid quadrature used inside the optimizer
# ----------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_PANEL_RATIO = 4.0


class _QuadGrid:
    """Precomputed Gauss-Legendre grid for J(., t) at fixed piece lengths.

    Piece lengths are fixed for a whole optimization run, so the panel
    layout, the inner-variable positions and the piece index of every node
    can be computed once; evaluating a candidate then costs one cumulative
    sum and a weighted power sum.  Verified against the adaptive path in
    the test suite.
    """

    def __init__(self, lengths: np.ndarray, t: float, p: float, q: float):
        self.q = q
        pq = p / q
        bk = np.concatenate(([0.0], np.cumsum(lengths)))
        wb = bk[1:] ** (q / p)
        self.head = min(wb[0], t)
        self.coef_first = (p / q) * self.head

        los, his = [], []
        prev = self.head
        for w in wb[1:]:
            hi = min(w, t)
            if hi <= prev:
                continue
            lo = prev
            n_panels = max(1, math.ceil(math.log(hi / lo) / math.log(_PANEL_RATIO)))
            edges = lo * (hi / lo) ** (np.arange(n_panels + 1) / n_panels)
            los.extend(edges[:-1])
            his.extend(edges[1:])
            prev = hi
            if hi >= t:
                break
        if los:
            lo = np.asarray(los)
            hi = np.asarray(his)
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            w_nodes = (half[:, None] * _GL_X[None, :] + mid[:, None]).ravel()
            wts = (half[:, None] * _GL_W[None, :]).ravel()
            x_nodes = w_nodes**pq
            idx = np.clip(
                np.searchsorted(bk, x_nodes, side="right") - 1, 0, len(lengths) - 1
            )
            self.idx = idx
            self.dx = x_nodes - bk[idx]
            self.invx = 1.0 / x_nodes
            self.wts = (p / q) * wts
        else:
            self.idx = np.empty(0, dtype=np.int64)
            self.dx = np.empty(0)
            self.invx = np.empty(0)
            self.wts = np.empty(0)
        self._ell = lengths
        self._cum = np.empty(len(lengths) + 1)
        self._cum[0] = 0.0

    def value(self, v: np.ndarray) -> float:
        np.cumsum(self._ell * v, out=self._cum[1:])
        phi = self._cum[self.idx] + v[self.idx] * self.dx
        avg = phi * self.invx
        return self.coef_first * v[0] ** self.q + float(self.wts @ avg**self.q)


# ----------------------------------------------------------------------
# moment-constrained parametrization
# ----------------------------------------------------------------------


def _profile_from_theta(theta: np.ndarray) -> np.ndarray:
    """Nonincreasing profile with last value 0 from unconstrained parameters."""
    d = theta * theta
    return np.concatenate((np.cumsum(d[::-1])[::-1], (0.0,)))


def _theta_from_profile(profile: np.ndarray) -> np.ndarray:
    d = profile[:-1] - profile[1:]
    return np.sqrt(np.maximum(d, 0.0))


class _MomentFit:
    """Solves mean and p-th moment constraints for the scale and shift.

    A candidate is phi = c + a * profile with a, c >= 0.  The mean pins
    c = x - a * mean(profile); the p-th moment is then nondecreasing in a
    (the profile and phi**(p-1) are similarly ordered), so the remaining
    equation has at most one root, found by safeguarded Newton.  When the
    profile cannot spread enough to reach y the moment defect is returned
    as a penalty.
    """

    def __init__(self, lw: np.ndarray, x: float, y: float, p: float):
        self.lw = lw  # length weights, summing to 1
        self.x = x
        self.y = y
        self.p = p

    def pmean(self, a: float, prof: np.ndarray, mp: float) -> float:
        w = (self.x - a * mp) + a * prof
        return float(self.lw @ w**self.p)

    def solve(self, prof: np.ndarray, a_start: float) -> tuple[float, float, float]:
        """Returns (a, c, penalty); penalty > 0 flags an infeasible profile."""
        x, y, p = self.x, self.y, self.p
        mp = float(self.lw @ prof)
        if mp <= 0.0:
            defect = y - x**p
            return 0.0, x, (defect if defect > 1e-12 * max(y, 1.0) else 0.0)
        a_hi = x / mp
        g_hi = self.pmean(a_hi, prof, mp) - y
        if g_hi < 0.0:
            return a_hi, 0.0, -g_hi
        g_lo = x**p - y  # a = 0 gives the constant function
        if g_lo >= 0.0:
            return 0.0, x, 0.0
        lo, hi = 0.0, a_hi
        a = a_start if 0.0 < a_start < a_hi else 0.5 * a_hi
        gtol = 1e-13 * max(abs(y), 1.0)
        for _ in range(60):
            c = x - a * mp
            w = c + a * prof
            wp1 = w ** (p - 1.0)
            g = float(self.lw @ (wp1 * w)) - y
            if abs(g) <= gtol:
                return a, c, 0.0
            if g > 0.0:
                hi = a
            else:
                lo = a
            deriv = p * float(self.lw @ (wp1 * (prof - mp)))
            if deriv > 0.0:
                a_new = a - g / deriv
            else:
                a_new = 0.5 * (lo + hi)
            if not lo < a_new < hi:
                a_new = 0.5 * (lo + hi)
            if hi - lo <= 1e-15 * a_hi:
                a = 0.5 * (lo + hi)
                break
            a = a_new
        c = x - a * mp
        return a, c, 0.0


def _compile_core():
    """Optional numba kernel fusing profile build, moment fit and quadrature.

    The direct search spends nearly all its time here (tens of thousands of
    evaluations per call), so the scalar-loop version is compiled when numba
    is available; the numpy path below remains as the fallback and the two
    agree to rounding.
    """
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba present in the test env
        return None

    @njit(cache=True)
    def core(theta, lw, ell, x, y, p, q, idx, dx, invx, wts, coef_first, a_warm):
        m = lw.shape[0]
        prof = np.empty(m)
        prof[m - 1] = 0.0
        acc = 0.0
        for i in range(m - 2, -1, -1):
            acc += theta[i] * theta[i]
            prof[i] = acc
        mp = 0.0
        for i in range(m):
            mp += lw[i] * prof[i]
        yscale = y if y > 1.0 else 1.0
        a = 0.0
        c = x
        if mp <= 0.0:
            defect = y - x**p
            if defect > 1e-12 * yscale:
                return 100.0 * (1.0 + defect / yscale), -1.0, 0.0, 0.0
        else:
            a_hi = x / mp
            g_hi = -y
            for i in range(m):
                g_hi += lw[i] * (a_hi * prof[i]) ** p
            if g_hi < 0.0:
                return 100.0 * (1.0 - g_hi / yscale), -1.0, a_hi, 0.0
            g_lo = x**p - y
            if g_lo < 0.0:
                lo = 0.0
                hi = a_hi
                a = a_warm if 0.0 < a_warm < a_hi else 0.5 * a_hi
                gtol = 1e-13 * yscale
                for _ in range(60):
                    c = x - a * mp
                    g = -y
                    deriv = 0.0
                    for i in range(m):
                        w = c + a * prof[i]
                        wp1 = w ** (p - 1.0)
                        g += lw[i] * wp1 * w
                        deriv += lw[i] * wp1 * (prof[i] - mp)
                    deriv *= p
                    if abs(g) <= gtol:
                        break
                    if g > 0.0:
                        hi = a
                    else:
                        lo = a
                    a_new = a - g / deriv if deriv > 0.0 else 0.5 * (lo + hi)
                    if not lo < a_new < hi:
                        a_new = 0.5 * (lo + hi)
                    if hi - lo <= 1e-15 * a_hi:
                        a = 0.5 * (lo + hi)
                        break
                    a = a_new
                c = x - a * mp
        cum = 0.0
        cums = np.empty(m + 1)
        cums[0] = 0.0
        for i in range(m):
            cum += ell[i] * (c + a * prof[i])
            cums[i + 1] = cum
        val = coef_first * (c + a * prof[0]) ** q
        for j in range(idx.shape[0]):
            i = idx[j]
            phi = cums[i] + (c + a * prof[i]) * dx[j]
            val += wts[j] * (phi * invx[j]) ** q
        return -val, val, a, 1.0

    return core


_JIT_CORE = _compile_core()


# ----------------------------------------------------------------------
# deterministic Nelder-Mead direct search
# ----------------------------------------------------------------------


def _nelder_mead(fn, x0: np.ndarray, budget: int) -> int:
    """Classic simplex search; fn tracks its own best point.  Returns evals."""
    n = len(x0)
    pts = np.tile(x0, (n + 1, 1))
    for i in range(n):
        step = 0.25 * abs(pts[i + 1, i])
        pts[i + 1, i] += step if step > 1e-3 else 0.25
    evals = 0
    f = np.empty(n + 1)
    for i in range(n + 1):
        if evals >= budget:
            f[i:] = np.inf
            break
        f[i] = fn(pts[i])
        evals += 1
    while evals < budget:
        order = np.argsort(f, kind="stable")
        pts = pts[order]
        f = f[order]
        if f[-1] - f[0] < 1e-13 * (abs(f[0]) + 1e-13):
            break
        centroid = pts[:-1].mean(axis=0)
        xr = centroid + (centroid - pts[-1])
        fr = fn(xr)
        evals += 1
        if fr < f[0]:
            if evals >= budget:
                break
            xe = centroid + 2.0 * (centroid - pts[-1])
            fe = fn(xe)
            evals += 1
            if fe < fr:
                pts[-1], f[-1] = xe, fe
            else:
                pts[-1], f[-1] = xr, fr
        elif fr < f[-2]:
            pts[-1], f[-1] = xr, fr
        else:
            xc = centroid + 0.5 * (pts[-1] - centroid)
            fc = fn(xc)
            evals += 1
            if fc < f[-1]:
                pts[-1], f[-1] = xc, fc
            else:  # shrink toward the best vertex
                for i in range(1, n + 1):
                    if evals >= budget:
                        break
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    f[i] = fn(pts[i])
                    evals += 1
    return evals


# ----------------------------------------------------------------------
# the numerical lower bound
# ----------------------------------------------------------------------


def _piece_lengths(m: int, s: float, p: float, spread: float) -> np.ndarray:
    """Equal lengths unless the moment spread y/x**p needs thin lead pieces.

    On m equal pieces the largest reachable spread is m**(p-1) (all mass on
    one piece), so equal lengths are kept while that leaves a 2x margin;
    doubling m then keeps the grids nested, which makes the value monotone
    under piece refinement when the coarse witness seeds the finer run.
    """
    cap = float(m) ** (p - 1.0)
    if spread <= 0.5 * cap:
        return np.full(m, s / m)
    # geometric lengths: the shortest piece supports a spike reaching
    # roughly 100x the requested spread
    ratio_needed = (100.0 * spread) ** (1.0 / (p - 1.0))
    r = ratio_needed ** (1.0 / (m - 1))
    raw = r ** np.arange(m)
    return s * raw / raw.sum()


def _curated_profiles(m: int) -> list[np.ndarray]:
    grid = (np.arange(m) + 0.5) / m
    profiles = [
        grid**-0.3 - grid[-1] ** -0.3,
        grid**-0.6 - grid[-1] ** -0.6,
        grid**-0.9 - grid[-1] ** -0.9,
        (1.0 - grid) * 2.0,
        np.concatenate((np.ones(max(1, m // 4)), np.zeros(m - max(1, m // 4)))),
    ]
    return profiles


def bellman_lower(
    point: BellmanPoint | tuple,
    p: float,
    q: float,
    m: int = 32,
    budget: int = 2000,
    seed: int = 0,
    starts: int = 16,
    warm_starts: list[StepFunction] | None = None,
    tol: float = 1e-9,
) -> tuple[float, StepFunction]:
    """Certified lower bound for the value function, with its witness.

    Multi-start Nelder-Mead over nonincreasing m-piece profiles whose scale
    and shift are eliminated through the two moment constraints; ``budget``
    caps the functional evaluations per start.  The search runs on a fixed
    fast quadrature grid and the winning witness is re-evaluated with the
    adaptive path, so the returned value is a genuine quadrature-accurate
    lower bound.  Deterministic in ``seed``; extra ``warm_starts`` (for
    example a coarser witness) join the start list ahead of random starts.
    """
    pt = point if isinstance(point, BellmanPoint) else BellmanPoint(*point)
    pt.validate(p, q)
    if m < 2:
        raise ValueError("m must be >= 2")
    if pt.y < pt.x**p * (1.0 - 1e-12):
        raise ValueError("infeasible moments: y < x**p")
    x, y, s, t = pt.x, pt.y, pt.s, pt.t

    if x == 0.0:
        if y > 1e-300:
            raise ValueError("infeasible moments: zero mean with positive y")
        return 0.0, StepFunction(np.full(m, s / m), np.zeros(m))
    # Jensen equality: the constant function is the only candidate
    if y <= x**p * (1.0 + 1e-12):
        witness = StepFunction(np.full(m, s / m), np.full(m, x))
        return bliss_functional(witness, t, p, q, tol), witness

    lengths = _piece_lengths(m, s, p, y / x**p)
    lw = lengths / lengths.sum()
    fit = _MomentFit(lw, x, y, p)

    start_profiles = []
    if warm_starts:
        for w in warm_starts:
            start_profiles.append(_resample_profile(w, lengths))
    start_profiles.extend(_curated_profiles(m))
    rng = np.random.default_rng(seed)
    while len(start_profiles) < max(starts, len(start_profiles)):
        raw = rng.uniform(0.0, 1.0, size=m) ** 2
        prof = np.sort(raw)[::-1]
        start_profiles.append(prof - prof[-1])
    start_profiles = start_profiles[: max(starts, len(warm_starts or []))]

    grid = _QuadGrid(lengths, t, p, q)
    state = {"best": -math.inf, "v": None, "a_warm": 0.0}

    if _JIT_CORE is not None:

        def objective(theta: np.ndarray) -> float:
            obj, val, a, ok = _JIT_CORE(
                theta, lw, lengths, x, y, p, q,
                grid.idx, grid.dx, grid.invx, grid.wts, grid.coef_first,
                state["a_warm"],
            )
            if ok == 1.0:
                state["a_warm"] = a
                if val > state["best"]:
                    state["best"] = val
                    prof = _profile_from_theta(theta)
                    state["v"] = (x - a * float(lw @ prof)) + a * prof
            return obj

    else:

        def objective(theta: np.ndarray) -> float:
            prof = _profile_from_theta(theta)
            a, c, pen = fit.solve(prof, state["a_warm"])
            if pen > 0.0:
                return 100.0 * (1.0 + pen / max(y, 1.0))
            state["a_warm"] = a
            v = c + a * prof
            val = grid.value(v)
            if val > state["best"]:
                state["best"] = val
                state["v"] = v
            return -val

    if t == 0.0:
        # any feasible candidate scores zero; still produce a witness
        for prof in start_profiles:
            a, c, pen = fit.solve(prof, 0.0)
            if pen == 0.0:
                return 0.0, StepFunction(lengths, c + a * prof)
        raise ValueError("no feasible witness found at t = 0")

    for prof in start_profiles:
        theta0 = _theta_from_profile(np.asarray(prof, dtype=float))
        scale = theta0.max()
        if scale > 0:
            theta0 = theta0 / scale
        _nelder_mead(objective, theta0, budget)

    if state["v"] is None:
        raise ValueError("no feasible candidate found; grow m or the budget")
    witness = StepFunction(lengths, state["v"])
    value = bliss_functional(witness, t, p, q, tol)
    return value, witness


def _resample_profile(w: StepFunction, lengths: np.ndarray) -> np.ndarray:
    """Profile of an existing witness sampled at the new piece midpoints."""
    mids = np.cumsum(lengths) - 0.5 * lengths
    mids = mids / lengths.sum() * w.total_length
    edges = w.breakpoints()
    idx = np.clip(np.searchsorted(edges, mids, side="right") - 1, 0, len(w.values) - 1)
    prof = np.maximum.accumulate(w.values[idx][::-1])[::-1]
    return prof - prof[-1]


# ----------------------------------------------------------------------
# structural property checks
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TailExtensionReport:
    point: BellmanPoint
    u: float
    value_short: float
    value_extended: float
    floor: float
    margin: float
    witness: StepFunction


@dataclass(frozen=True)
class MergeReport:
    parent: BellmanPoint
    value_first: float
    value_second: float
    value_merged: float
    margin: float
    witness: StepFunction


def check_tail_extension(
    point: BellmanPoint | tuple,
    u: float,
    p: float,
    q: float,
    m: int = 32,
    budget: int = 2000,
    seed: int = 0,
    starts: int = 16,
    tol: float = 1e-9,
) -> TailExtensionReport:
    """Extending the budget from t-u to t gains at least (p/q) * x**q * u.

    Constructive: take the witness found at budget t-u, rearrange it
    decreasingly (its running averages then dominate the mean), and evaluate
    the functional at the full budget t.  The reported margin is the excess
    over value(t-u) + (p/q) * x**q * u and should be nonnegative up to
    quadrature error.
    """
    pt = point if isinstance(point, BellmanPoint) else BellmanPoint(*point)
    pt.validate(p, q)
    if not 0.0 <= u <= pt.t:
        raise ValueError(f"u must lie in [0, t], got {u}")
    short_pt = BellmanPoint(pt.x, pt.y, pt.s, pt.t - u)
    value_short, witness = bellman_lower(
        short_pt, p, q, m=m, budget=budget, seed=seed, starts=starts, tol=tol
    )
    tilde = rearrange_decreasing(witness)
    value_ext = bliss_functional(tilde, pt.t, p, q, tol)
    floor = (p / q) * pt.x**q * u + value_short
    return TailExtensionReport(
        point=pt,
        u=u,
        value_short=value_short,
        value_extended=value_ext,
        floor=floor,
        margin=value_ext - floor,
        witness=tilde,
    )


def check_merge_superadditivity(
    point1: BellmanPoint | tuple,
    point2: BellmanPoint | tuple,
    p: float,
    q: float,
    m: int = 32,
    budget: int = 2000,
    seed: int = 0,
    starts: int = 16,
    tol: float = 1e-9,
) -> MergeReport:
    """Merging two constrained families cannot lose value.

    The parent state is derived from the children (length-weighted means,
    summed lengths and budgets); it is feasible automatically, by convexity
    of the p-th power and since (t1+t2)**(p/q) <= t1**(p/q) + t2**(p/q) for
    p <= q.  Constructive check: concatenate the two witnesses, rearrange
    decreasingly, evaluate at the merged budget, and compare against the sum
    of the children's values.
    """
    p1 = point1 if isinstance(point1, BellmanPoint) else BellmanPoint(*point1)
    p2 = point2 if isinstance(point2, BellmanPoint) else BellmanPoint(*point2)
    p1.validate(p, q)
    p2.validate(p, q)
    s = p1.s + p2.s
    parent = BellmanPoint(
        x=(p1.s * p1.x + p2.s * p2.x) / s,
        y=(p1.s * p1.y + p2.s * p2.y) / s,
        s=s,
        t=p1.t + p2.t,
    )
    parent.validate(p, q, rtol=1e-9)
    v1, w1 = bellman_lower(p1, p, q, m=m, budget=budget, seed=seed, starts=starts, tol=tol)
    v2, w2 = bellman_lower(p2, p, q, m=m, budget=budget, seed=seed, starts=starts, tol=tol)
    merged = rearrange_decreasing(concat(w1, w2))
    value = bliss_functional(merged, parent.t, p, q, tol)
    return MergeReport(
        parent=parent,
        value_first=v1,
        value_second=v2,
        value_merged=value,
        margin=value - (v1 + v2),
        witness=merged,
    )
