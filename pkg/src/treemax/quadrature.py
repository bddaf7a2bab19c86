"""Scalar adaptive quadrature helpers.

Composite Simpson with adaptive bisection, accepting a panel once the
usual Richardson estimate |S(a,m) + S(m,b) - S(a,b)| / 15 drops below the
local tolerance.  Integrands are assumed bounded on each panel.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

__all__ = ["adaptive_simpson", "integrate_over_breakpoints"]


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adapt(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fm: float,
    fb: float,
    whole: float,
    tol: float,
    depth: int,
) -> float:
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    half = 0.5 * tol
    return _adapt(f, a, m, fa, flm, fm, left, half, depth - 1) + _adapt(
        f, m, b, fm, frm, fb, right, half, depth - 1
    )


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 48,
) -> float:
    """Integral of f over [a, b] to absolute tolerance roughly tol."""
    if b <= a:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _adapt(f, a, b, fa, fm, fb, whole, tol, max_depth)


def integrate_over_breakpoints(
    f: Callable[[float], float],
    breakpoints: Sequence[float],
    tol: float = 1e-9,
) -> float:
    """Sum of adaptive Simpson over consecutive breakpoint panels.

    The tolerance is allocated proportionally to panel length so the total
    absolute error stays near tol.
    """
    pts = list(breakpoints)
    total_len = pts[-1] - pts[0]
    if total_len <= 0:
        return 0.0
    out = 0.0
    for a, b in zip(pts, pts[1:]):
        if b <= a:
            continue
        out += adaptive_simpson(f, a, b, tol * max((b - a) / total_len, 1e-3))
    return out
