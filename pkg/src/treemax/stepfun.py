"""Step functions on [0, s] and their rearrangement calculus.

A step function is a finite ordered list of (length, value) pieces with
positive lengths and nonnegative values.  The decreasing rearrangement and
the concatenation of two step functions are the only structural operations
needed: rearranging preserves all moments while improving every running
average, and concatenation mixes moments linearly in length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["StepFunction", "rearrange_decreasing", "concat", "running_average"]


@dataclass(frozen=True, eq=False)
class StepFunction:
    lengths: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        lengths = np.atleast_1d(np.asarray(self.lengths, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if lengths.size == 0:
            raise ValueError("a step function needs at least one piece")
        if lengths.shape != values.shape:
            raise ValueError("lengths and values must have equal shape")
        if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
            raise ValueError("piece lengths must be positive and finite")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("piece values must be nonnegative and finite")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_pieces(cls, pieces) -> "StepFunction":
        lengths, values = zip(*pieces)
        return cls(np.asarray(lengths), np.asarray(values))

    @classmethod
    def constant(cls, value: float, length: float) -> "StepFunction":
        return cls(np.array([length]), np.array([value]))

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def pieces(self) -> list[tuple[float, float]]:
        return [(float(l), float(v)) for l, v in zip(self.lengths, self.values)]

    def breakpoints(self) -> np.ndarray:
        """Cumulative piece boundaries 0 = x_0 < x_1 < ... < x_m = s."""
        return np.concatenate(([0.0], np.cumsum(self.lengths)))

    def cumulative(self) -> np.ndarray:
        """Running integral at the breakpoints."""
        return np.concatenate(([0.0], np.cumsum(self.lengths * self.values)))

    def integral_to(self, x) -> np.ndarray | float:
        """Integral of the function from 0 to x (clamped to [0, s])."""
        return np.interp(x, self.breakpoints(), self.cumulative())

    def mean(self) -> float:
        return float((self.lengths * self.values).sum() / self.lengths.sum())

    def pmean(self, p: float) -> float:
        """Average of the p-th power over the domain."""
        return float((self.lengths * self.values**p).sum() / self.lengths.sum())

    def lp_norm(self, p: float) -> float:
        return float((self.lengths * self.values**p).sum() ** (1.0 / p))

    def scale_domain(self, T: float) -> "StepFunction":
        """Dilation r -> r/T of the argument: same values, lengths times T."""
        if T <= 0:
            raise ValueError("T must be positive")
        return StepFunction(self.lengths * T, self.values.copy())

    def __repr__(self) -> str:
        return f"StepFunction(pieces={len(self.lengths)}, s={self.total_length:.6g})"


def rearrange_decreasing(phi: StepFunction) -> StepFunction:
    """Nonincreasing rearrangement; merges adjacent pieces of equal value."""
    order = np.argsort(-phi.values, kind="stable")
    lengths = phi.lengths[order]
    values = phi.values[order]
    keep_lengths = [lengths[0]]
    keep_values = [values[0]]
    for l, v in zip(lengths[1:], values[1:]):
        if v == keep_values[-1]:
            keep_lengths[-1] += l
        else:
            keep_lengths.append(l)
            keep_values.append(v)
    return StepFunction(np.asarray(keep_lengths), np.asarray(keep_values))


def concat(phi1: StepFunction, phi2: StepFunction) -> StepFunction:
    """Place phi2 after phi1 on [0, s1 + s2]."""
    return StepFunction(
        np.concatenate((phi1.lengths, phi2.lengths)),
        np.concatenate((phi1.values, phi2.values)),
    )


def running_average(phi: StepFunction, w) -> np.ndarray | float:
    """(1/w) * integral of phi from 0 to w, for w in (0, s]."""
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr <= 0):
        raise ValueError("running averages need w > 0")
    return phi.integral_to(w_arr) / w_arr
