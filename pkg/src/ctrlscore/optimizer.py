"""Capped-simplex solver for the score problems, plus independent oracles.

The solver is projected gradient descent with Armijo backtracking.  Trial
points are always projected back onto the feasible polytope, and any trial
that evaluates to ``+inf`` (eigenvalue rank loss) simply fails the acceptance
test, so the boundary of the feasible region acts as a barrier.  Convergence
is declared on the projected-gradient residual

    r(p) = || p - project(p - grad h(p)) ||_inf,

which is the KKT stationarity measure for this constraint set.  A brute-force
lattice enumeration (:func:`grid_oracle`) provides an independent check of
the optimizer on small node sets.

Multi-start behaviour: models that pass the commutation, n-spectrum and
feasibility checks have a provably unique optimum and default to a single
start from the central point; anything else defaults to eight seeded starts,
and starts that disagree on the optimal value by more than ``1e-6`` raise
:class:`~ctrlscore.errors.NonConvexAmbiguous` (with the merged result
attached).  ``CTRLSCORE_THREADS`` caps how many starts run concurrently
(0 or unset picks the CPU count).
"""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InfeasiblePoint, NonConvexAmbiguous, TooLarge
from .scores import ObjectiveKind, _Objective
from .simplex import (
    SimplexWeights,
    central_point,
    project_capped_simplex,
    validate_caps,
    weight_vector,
)
from .spectral import AssumptionReport, check_feasibility

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SolveConfig:
    """Solver knobs.

    ``starts=None`` means automatic: one start when the model is certified
    convex by the assumption checks, eight otherwise.  ``seed`` makes the
    extra starts (and therefore the whole solve) reproducible.
    """

    max_iters: int = 5000
    grad_tol: float = 1e-9
    step_shrink: float = 0.5
    armijo_c: float = 1e-4
    starts: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_iters <= 0 or self.grad_tol <= 0:
            raise ValueError("max_iters and grad_tol must be positive")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError("step_shrink must lie in (0, 1)")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if self.starts is not None and self.starts <= 0:
            raise ValueError("starts must be positive")


@dataclass(frozen=True)
class ScoreResult:
    """Solver output: optimal weights plus certification diagnostics."""

    weights: SimplexWeights
    objective: float
    kkt_residual: float
    iterations: int
    assumption_report: AssumptionReport
    uniqueness_certified: bool
    selection_history: tuple[tuple[int, ...], ...]
    converged: bool
    warnings: tuple[str, ...]
    start_objectives: tuple[float, ...]
    start_weights: tuple[tuple[float, ...], ...]
    kind: ObjectiveKind
    score_order: int


@dataclass(frozen=True)
class KKTReport:
    """Stationarity diagnostics at a feasible point."""

    residual: float
    multiplier: float
    stationarity_gaps: np.ndarray
    lower_active: tuple[int, ...]
    upper_active: tuple[int, ...]
    objective: float


def attach_warning(result: ScoreResult, message: str) -> ScoreResult:
    return dataclasses.replace(result, warnings=result.warnings + (message,))


def _thread_limit(n_tasks: int) -> int:
    raw = os.environ.get("CTRLSCORE_THREADS", "0")
    try:
        limit = int(raw)
    except ValueError:
        limit = 0
    if limit <= 0:
        limit = os.cpu_count() or 1
    return max(1, min(limit, n_tasks))


def _pg_residual(point: np.ndarray, grad: np.ndarray, caps: np.ndarray) -> float:
    stepped = project_capped_simplex(point - grad, caps)
    return float(np.max(np.abs(point - stepped.values)))


@dataclass(eq=False)
class _Trajectory:
    point: np.ndarray
    value: float
    residual: float
    iterations: int
    converged: bool
    selections: tuple[tuple[int, ...], ...]
    warnings: tuple[str, ...]


def _descend(objective: _Objective, start: np.ndarray, caps: np.ndarray,
             config: SolveConfig, trace: list | None = None) -> _Trajectory:
    point = start.copy()
    current = objective(point)
    if not current.feasible:
        return _Trajectory(point, math.inf, math.inf, 0, False, (),
                           ("start point infeasible",))
    if trace is not None:
        trace.append(current.value)
    selections: list[tuple[int, ...]] = []
    if current.active_rows is not None:
        selections.append(tuple(sorted(current.active_rows)))
    warnings: list[str] = []
    step = 1.0 / (1.0 + float(np.max(np.abs(current.gradient))))
    prev_point: np.ndarray | None = None
    prev_grad: np.ndarray | None = None
    iterations = 0
    converged = False

    for _ in range(config.max_iters):
        grad = current.gradient
        residual = _pg_residual(point, grad, caps)
        if residual <= config.grad_tol:
            converged = True
            break
        iterations += 1

        # Barzilai-Borwein spectral step as the first trial size; Armijo
        # backtracking below still decides acceptance, so descent is kept.
        if prev_point is not None:
            dp = point - prev_point
            dg = grad - prev_grad
            curvature = float(dp @ dg)
            if curvature > 0.0:
                step = float(dp @ dp) / curvature
        prev_point, prev_grad = point, grad

        # Backtracking line search with a float-plateau safeguard: once the
        # predicted decrease falls below the resolution of the objective
        # value, Armijo can no longer certify progress (equal floats pass the
        # test even for overshooting steps), so acceptance switches to a
        # strict decrease of the KKT residual.
        plateau_tol = 64.0 * _EPS * (1.0 + abs(current.value))
        accepted = None
        size = min(step * 2.0, 1e12)
        while size > 1e-18:
            trial = project_capped_simplex(point - size * grad, caps)
            direction = trial.values - point
            if not np.any(direction):
                size *= config.step_shrink
                continue
            candidate = objective(trial.values)
            predicted = config.armijo_c * float(grad @ direction)
            if abs(predicted) >= plateau_tol:
                ok = candidate.feasible and candidate.value <= current.value + predicted
            else:
                ok = (candidate.feasible
                      and candidate.value <= current.value + plateau_tol
                      and _pg_residual(trial.values, candidate.gradient, caps)
                      < residual)
            if ok:
                accepted = (trial, candidate)
                break
            size *= config.step_shrink
        if accepted is None:
            warnings.append("line search stalled before reaching grad_tol")
            break
        trial, candidate = accepted

        # A change in the selected eigen-rows means the objective switched
        # branch; damp the step once to limit oscillation at the crossing.
        if (candidate.active_rows is not None
                and current.active_rows is not None
                and set(candidate.active_rows) != set(current.active_rows)):
            half = project_capped_simplex(point - 0.5 * size * grad, caps)
            half_dir = half.values - point
            half_eval = objective(half.values)
            if (half_eval.feasible and np.any(half_dir)
                    and half_eval.value
                    <= current.value + config.armijo_c * float(grad @ half_dir)):
                trial, candidate = half, half_eval
                size *= 0.5

        point = trial.values
        current = candidate
        step = size
        if trace is not None:
            trace.append(current.value)
        if current.active_rows is not None:
            rows = tuple(sorted(current.active_rows))
            if not selections or selections[-1] != rows:
                selections.append(rows)
    else:
        warnings.append("MaxItersExceeded: returning best iterate")

    residual = _pg_residual(point, current.gradient, caps)
    converged = residual <= config.grad_tol
    return _Trajectory(point, current.value, residual, iterations, converged,
                       tuple(selections), tuple(warnings))


def _starting_points(objective: _Objective, count: int, caps: np.ndarray,
                     seed: int, witness: SimplexWeights) -> list[np.ndarray]:
    points = [central_point(caps).values.copy()]
    rng = np.random.default_rng(seed)
    while len(points) < count:
        sample = rng.dirichlet(np.ones(caps.size))
        points.append(project_capped_simplex(sample, caps).values.copy())
    # Pull any infeasible start toward the witness until the objective is
    # finite, so every trajectory begins inside the feasible region.
    usable = []
    for candidate in points:
        value = candidate
        for _ in range(60):
            if objective(value).feasible:
                break
            value = project_capped_simplex(
                0.5 * (value + witness.values), caps
            ).values
        else:
            value = witness.values.copy()
        usable.append(value)
    return usable


def solve(kind: ObjectiveKind, model, count: int | None = None,
          config: SolveConfig | None = None, caps=None,
          warm_start=None) -> ScoreResult:
    """Minimize a score objective over the capped simplex.

    Parameters
    ----------
    kind : ObjectiveKind
        Which score to compute.
    model : SpectralModel or NodeGramianFamily
        The system under evaluation.
    count : int, optional
        Number of selected eigenvalues (defaults to the model's score order,
        or the full dimension for matrix families).
    config : SolveConfig, optional
    caps : array-like, optional
        Per-node upper bounds (defaults to all ones).
    warm_start : array-like, optional
        Replaces the central point as the first start (projected onto the
        feasible set first).

    Raises
    ------
    Infeasible
        If no candidate weight vector keeps the n-th eigenvalue positive.
    NonConvexAmbiguous
        If multi-starts disagree on the optimal value by more than 1e-6.
        The merged result is attached to the exception.
    """
    config = config or SolveConfig()
    objective = _Objective(kind, model, count)
    caps_arr = (np.ones(objective.node_count) if caps is None
                else validate_caps(caps))
    if caps_arr.size != objective.node_count:
        raise InfeasiblePoint(
            f"caps length {caps_arr.size} != node count {objective.node_count}"
        )
    report = check_feasibility(model, objective.count, caps_arr)
    if not report.feasible:
        raise Infeasible(
            f"no feasible weights found: best mu_{objective.count} = "
            f"{report.nth_eigenvalue:.3e}"
        )
    certified = report.all_pass()
    n_starts = config.starts if config.starts is not None else (1 if certified else 8)
    starts = _starting_points(objective, n_starts, caps_arr, config.seed,
                              report.witness)
    if warm_start is not None:
        starts[0] = project_capped_simplex(
            weight_vector(warm_start, caps_arr.size), caps_arr
        ).values.copy()

    if n_starts == 1 or _thread_limit(n_starts) == 1:
        trajectories = [_descend(objective, s, caps_arr, config) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=_thread_limit(n_starts)) as pool:
            trajectories = list(
                pool.map(lambda s: _descend(objective, s, caps_arr, config), starts)
            )

    finite_idx = [i for i, t in enumerate(trajectories) if math.isfinite(t.value)]
    if not finite_idx:
        raise Infeasible("no start produced a finite objective value")
    converged_idx = [i for i in finite_idx if trajectories[i].converged]
    candidate_idx = converged_idx if converged_idx else finite_idx
    best = trajectories[min(candidate_idx,
                            key=lambda i: (trajectories[i].value, i))]

    warnings: list[str] = []
    if not certified:
        failed = [name for name, ok in (("feasibility", report.feasible),
                                        ("commuting", report.commuting),
                                        ("n-spectrum", report.n_spectrum))
                  if not ok]
        warnings.append(
            "uniqueness not certified (failed checks: " + ", ".join(failed)
            + "); the objective may be a minimum over eigenvalue selections"
        )
    for t in trajectories:
        for w in t.warnings:
            if w not in warnings:
                warnings.append(w)
    if not best.converged:
        warnings.append(
            f"solver did not reach grad_tol (residual {best.residual:.3e})"
        )

    selection_union: list[tuple[int, ...]] = []
    for i in finite_idx:
        for rows in trajectories[i].selections:
            if rows not in selection_union:
                selection_union.append(rows)

    result = ScoreResult(
        weights=SimplexWeights(best.point, caps_arr.copy()),
        objective=float(best.value),
        kkt_residual=float(best.residual),
        iterations=best.iterations,
        assumption_report=report,
        uniqueness_certified=certified,
        selection_history=tuple(selection_union),
        converged=best.converged,
        warnings=tuple(warnings),
        start_objectives=tuple(float(t.value) for t in trajectories),
        start_weights=tuple(tuple(float(x) for x in t.point) for t in trajectories),
        kind=kind,
        score_order=objective.count,
    )

    values = [trajectories[i].value for i in candidate_idx]
    if len(values) > 1 and max(values) - min(values) > 1e-6:
        raise NonConvexAmbiguous(
            "starts disagree on the optimal value: "
            + ", ".join(f"{v:.9g}" for v in values),
            result=result,
        )
    return result


def diagonal_optimum(kind: ObjectiveKind, model, caps=None,
                     config: SolveConfig | None = None) -> SimplexWeights:
    """Closed-form optimum of a diagonal model, falling back to the solver
    when a cap binds.

    The fallback warm-starts the solver at the projection of the
    unconstrained closed form onto the capped simplex, which already has the
    binding caps active.
    """
    from .errors import CapsBind
    from .scores import closed_form_optimum

    try:
        return closed_form_optimum(kind, model, caps)
    except CapsBind:
        unconstrained = closed_form_optimum(kind, model)
        result = solve(kind, model, config=config, caps=caps,
                       warm_start=unconstrained.values)
        return result.weights


def _lattice_count(total: int, cap_units: np.ndarray) -> int:
    ways = np.zeros(total + 1, dtype=object)
    ways[0] = 1
    for cap in cap_units:
        new = np.zeros(total + 1, dtype=object)
        for r in range(total + 1):
            if ways[r]:
                for k in range(0, min(int(cap), total - r) + 1):
                    new[r + k] += ways[r]
        ways = new
    return int(ways[total])


def _compositions(total: int, cap_units: np.ndarray):
    m = len(cap_units)
    suffix = np.concatenate([np.cumsum(cap_units[::-1])[::-1][1:], [0]])

    def rec(i: int, remaining: int, prefix: tuple[int, ...]):
        if i == m - 1:
            if remaining <= cap_units[i]:
                yield prefix + (remaining,)
            return
        low = max(0, remaining - int(suffix[i]))
        high = min(int(cap_units[i]), remaining)
        for k in range(low, high + 1):
            yield from rec(i + 1, remaining - k, prefix + (k,))

    yield from rec(0, total, ())


def grid_oracle(kind: ObjectiveKind, model, count: int | None = None,
                step: float = 0.01, caps=None,
                budget: int = 2_000_000) -> tuple[SimplexWeights, float]:
    """Exhaustive lattice minimization over the capped simplex.

    Enumerates every point of the lattice with spacing ``step`` inside the
    feasible polytope and returns the minimizer and its objective value.
    ``step`` must divide 1.  This is deliberately independent of the
    projected-gradient path so it can serve as a correctness oracle.

    Raises
    ------
    TooLarge
        If the lattice holds more than ``budget`` points.
    """
    objective = _Objective(kind, model, count)
    m = objective.node_count
    caps_arr = np.ones(m) if caps is None else validate_caps(caps)
    units = round(1.0 / step)
    if units <= 0 or abs(units * step - 1.0) > 1e-9:
        raise ValueError(f"step {step!r} must divide 1")
    cap_units = np.minimum(np.floor(caps_arr * units + 1e-9), units).astype(int)
    total = _lattice_count(units, cap_units)
    if total == 0:
        raise Infeasible("no lattice point lies inside the capped simplex")
    if total > budget:
        raise TooLarge(f"lattice has {total} points, budget is {budget}")
    points = np.array(list(_compositions(units, cap_units)), dtype=float) * step
    values = objective.batch_values(points)
    best = int(np.argmin(values))
    if not math.isfinite(values[best]):
        raise Infeasible("objective is infinite on the whole lattice")
    return SimplexWeights(points[best], caps_arr.copy()), float(values[best])


def kkt_report(kind: ObjectiveKind, model, weights, count: int | None = None,
               caps=None) -> KKTReport:
    """Stationarity diagnostics at a given feasible point.

    Reports the projected-gradient residual, an estimate of the equality
    multiplier (mean gradient over coordinates strictly inside the box), and
    per-coordinate stationarity gaps: ``|g_i - nu|`` for free coordinates,
    ``max(0, nu - g_i)`` at the lower bound and ``max(0, g_i - nu)`` at a cap.

    Raises
    ------
    InfeasiblePoint
        If the point leaves the capped simplex or the objective is infinite.
    """
    objective = _Objective(kind, model, count)
    if isinstance(weights, SimplexWeights) and caps is None:
        caps_arr = weights.caps.copy()
    else:
        caps_arr = (np.ones(objective.node_count) if caps is None
                    else validate_caps(caps))
    p = weight_vector(weights, objective.node_count)
    if (abs(p.sum() - 1.0) > 1e-9 or np.any(p < -1e-9)
            or np.any(p > caps_arr + 1e-9)):
        raise InfeasiblePoint("point is outside the capped simplex")
    evaluation = objective(p)
    if not evaluation.feasible:
        raise InfeasiblePoint("objective is infinite at this point")
    grad = evaluation.gradient
    residual = _pg_residual(p, grad, caps_arr)

    act_tol = 1e-10
    lower = p <= act_tol
    upper = p >= caps_arr - act_tol
    free = ~lower & ~upper
    multiplier = float(np.mean(grad[free])) if np.any(free) else float(np.median(grad))
    gaps = np.where(
        free,
        np.abs(grad - multiplier),
        np.where(lower, np.maximum(0.0, multiplier - grad),
                 np.maximum(0.0, grad - multiplier)),
    )
    return KKTReport(
        residual=residual,
        multiplier=multiplier,
        stationarity_gaps=gaps,
        lower_active=tuple(int(i) for i in np.nonzero(lower)[0]),
        upper_active=tuple(int(i) for i in np.nonzero(upper)[0]),
        objective=float(evaluation.value),
    )
