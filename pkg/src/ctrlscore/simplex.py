"""Capped probability simplex: weight vectors and Euclidean projection.

The feasible set throughout the package is ``{p : sum(p) = 1, 0 <= p_i <= a_i}``
where ``a`` is a vector of per-node caps (all ones when unconstrained).  The
set is nonempty iff ``sum(a) >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyFeasibleSet, InvalidWeights

#: Absolute tolerance on the sum-to-one constraint.
SUM_TOL = 1e-12

#: Slack allowed on the box constraints when validating a weight vector.
BOX_TOL = 1e-12


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidWeights(f"{name} must be a nonempty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidWeights(f"{name} must be finite")
    return arr


def validate_caps(caps) -> np.ndarray:
    """Return caps as an array, requiring caps >= 0 and sum(caps) >= 1."""
    arr = _as_vector(caps, "caps")
    if np.any(arr < 0):
        raise InvalidWeights("caps must be nonnegative")
    if arr.sum() < 1.0 - SUM_TOL:
        raise EmptyFeasibleSet(
            f"caps sum to {arr.sum():.6g} < 1; the capped simplex is empty"
        )
    return arr


@dataclass(frozen=True)
class SimplexWeights:
    """A weight vector on the capped simplex.

    Attributes
    ----------
    values : ndarray
        Nonnegative weights summing to one (within ``SUM_TOL``).
    caps : ndarray
        Per-node upper bounds; ``values <= caps`` entrywise.
    """

    values: np.ndarray
    caps: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = _as_vector(self.values, "values")
        caps = np.ones_like(values) if self.caps is None else validate_caps(self.caps)
        if caps.shape != values.shape:
            raise InvalidWeights("values and caps must have the same length")
        total = values.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise InvalidWeights(f"weights sum to {total!r}, expected 1 within {SUM_TOL}")
        if np.any(values < -BOX_TOL) or np.any(values > caps + BOX_TOL):
            raise InvalidWeights("weights violate 0 <= p_i <= a_i")
        values = np.clip(values, 0.0, caps)
        values.flags.writeable = False
        caps.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "caps", caps)

    def __len__(self) -> int:
        return self.values.size

    @staticmethod
    def uniform(size: int, caps=None) -> "SimplexWeights":
        """The projection of the uniform vector onto the capped simplex."""
        caps_arr = np.ones(size) if caps is None else validate_caps(caps)
        return project_capped_simplex(np.full(size, 1.0 / size), caps_arr)


def central_point(caps) -> SimplexWeights:
    """Interior starting point: projection of the uniform vector onto the set."""
    caps_arr = validate_caps(caps)
    return project_capped_simplex(np.full(caps_arr.size, 1.0 / caps_arr.size), caps_arr)


def project_capped_simplex(point, caps) -> SimplexWeights:
    """Euclidean projection onto ``{x : sum(x) = 1, 0 <= x <= caps}``.

    The projection is ``x_i = clip(v_i - tau, 0, a_i)`` for the unique dual
    shift ``tau`` making the result sum to one.  ``tau`` is located by
    bisection on the monotone map ``tau -> sum(clip(v - tau, 0, a))`` and then
    polished with one exact linear solve on the identified free set, so the
    result is a fixed point for feasible input and sums to one at machine
    precision.

    Raises
    ------
    EmptyFeasibleSet
        If ``sum(caps) < 1``.
    """
    v = _as_vector(point, "point")
    a = validate_caps(caps)
    if a.shape != v.shape:
        raise InvalidWeights("point and caps must have the same length")

    # Feasible input is returned unchanged (idempotency, bitwise).
    if abs(v.sum() - 1.0) <= SUM_TOL and np.all(v >= 0.0) and np.all(v <= a):
        return SimplexWeights(v.copy(), a.copy())

    def mass(tau: float) -> float:
        return float(np.minimum(np.maximum(v - tau, 0.0), a).sum())

    lo = float(np.min(v - a))  # mass(lo) = sum(a) >= 1
    hi = float(np.max(v))      # mass(hi) = 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mass(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-18 * max(1.0, abs(lo)):
            break
    tau = 0.5 * (lo + hi)

    # Polish: with the active sets fixed by tau, tau solves a linear equation.
    shifted = v - tau
    free = (shifted > 0.0) & (shifted < a)
    capped = shifted >= a
    if np.any(free):
        tau_exact = (v[free].sum() + a[capped].sum() - 1.0) / free.sum()
        shifted_exact = v - tau_exact
        free_exact = (shifted_exact > 0.0) & (shifted_exact < a)
        capped_exact = shifted_exact >= a
        if np.array_equal(free_exact, free) and np.array_equal(capped_exact, capped):
            tau = tau_exact

    x = np.minimum(np.maximum(v - tau, 0.0), a)
    # Distribute residual rounding mass over the free coordinates.  The
    # cancellation in v - tau leaves errors of order ulp(|v|), so the repair
    # gate must scale with the input magnitude.
    repair_gate = max(1e-9, 1e-12 * float(np.max(np.abs(v))))
    for _ in range(3):
        residual = 1.0 - x.sum()
        if residual == 0.0:
            break
        free = (x > 0.0) & (x < a)
        if not np.any(free) or abs(residual) > repair_gate:
            break
        x[free] += residual / free.sum()
        x = np.minimum(np.maximum(x, 0.0), a)
    return SimplexWeights(x, a.copy())


def weight_vector(weights, size: int | None = None) -> np.ndarray:
    """Coerce ``SimplexWeights`` or an array-like to a plain float vector."""
    values = weights.values if isinstance(weights, SimplexWeights) else weights
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidWeights("weights must be a 1-d vector")
    if size is not None and arr.size != size:
        raise InvalidWeights(f"expected {size} weights, got {arr.size}")
    return arr
