"""Command-line front end.

Subcommands
-----------
score      compute VCS or AECS weights for a model file
check      run the assumption checkers and report residuals
heat-demo  closed-form scores for sine-mode node sets of the heat equation
energy     minimum energy and reachable-ellipsoid data for given weights

Exit codes: 0 success, 1 parse/usage error, 2 infeasible or unstable model
(or failed checks for ``check``), 3 ambiguous non-convex result (report still
emitted), 4 target outside the reachable span (``energy``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from .energy import EnergyQuery, min_energy, reachable_ellipsoid
from .errors import (
    BadIndexSet,
    CtrlscoreError,
    Infeasible,
    NonConvexAmbiguous,
    ParseError,
    SingularGramian,
    RankDeficient,
    TargetOutsideSpan,
    UnstableSystem,
)
from .modelfile import ModelFile, parse_model_text
from .optimizer import SolveConfig, grid_oracle, solve
from .scores import ObjectiveKind, closed_form_optimum
from .simplex import SimplexWeights
from .spectral import AssumptionReport, check_feasibility, heat_dirichlet_model

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_AMBIGUOUS = 3
EXIT_TARGET = 4

#: The demo's default node sets (four sine modes each).
DEFAULT_DEMO_ROWS = "1,2,3,4;1,2,3,5;1,2,3,6;2,3,4,5;2,3,4,6;3,4,5,6"


def truncate_toward_zero(value: float, decimals: int = 2) -> float:
    """Drop digits past ``decimals`` without rounding (0.2857 -> 0.28).

    The tiny guard absorbs binary representation error so exact decimal
    values such as 0.30 never slip below their boundary.
    """
    scale = 10.0**decimals
    return math.floor(abs(value) * scale + 1e-9) / scale * (1.0 if value >= 0 else -1.0)


@dataclass(frozen=True)
class RunReport:
    """One solver run, serializable as a JSON line."""

    schema_version: int
    input_digest: str
    model_kind: str
    score_kind: str
    score_order: int
    node_indices: tuple[int, ...]
    weights: tuple[float, ...]
    objective: float
    kkt_residual: float
    iterations: int
    uniqueness_certified: bool
    feasible: bool
    commuting: bool
    commutator_residual: float
    n_spectrum: bool
    n_spectrum_residual: float
    nth_eigenvalue: float
    warnings: tuple[str, ...]

    def to_json_line(self) -> str:
        payload = asdict(self)
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "RunReport":
        data = json.loads(line)
        data["node_indices"] = tuple(int(i) for i in data["node_indices"])
        data["weights"] = tuple(float(w) for w in data["weights"])
        data["warnings"] = tuple(str(w) for w in data["warnings"])
        return cls(**data)


def _build_report(digest: str, model_file_kind: str, kind: ObjectiveKind,
                  node_indices, result) -> RunReport:
    rep: AssumptionReport = result.assumption_report
    return RunReport(
        schema_version=1,
        input_digest=digest,
        model_kind=model_file_kind,
        score_kind=kind.value,
        score_order=result.score_order,
        node_indices=tuple(node_indices),
        weights=tuple(float(w) for w in result.weights.values),
        objective=float(result.objective),
        kkt_residual=float(result.kkt_residual),
        iterations=result.iterations,
        uniqueness_certified=result.uniqueness_certified,
        feasible=rep.feasible,
        commuting=rep.commuting,
        commutator_residual=rep.commutator_residual,
        n_spectrum=rep.n_spectrum,
        n_spectrum_residual=rep.n_spectrum_residual,
        nth_eigenvalue=rep.nth_eigenvalue,
        warnings=result.warnings,
    )


def _format_table(report: RunReport) -> str:
    lines = [
        f"model: {report.model_kind} (digest {report.input_digest[:16]})",
        f"kind: {report.score_kind}   n: {report.score_order}   "
        f"nodes: {' '.join(str(i) for i in report.node_indices)}",
        "assumptions: "
        f"feasible={'yes' if report.feasible else 'no'} "
        f"commuting={'yes' if report.commuting else 'no'} "
        f"(residual {report.commutator_residual:.3e}) "
        f"n-spectrum={'yes' if report.n_spectrum else 'no'} "
        f"(residual {report.n_spectrum_residual:.3e}) "
        f"mu_n={report.nth_eigenvalue:.6e}",
        f"uniqueness certified: {'yes' if report.uniqueness_certified else 'no'}",
        "node  weight",
    ]
    for node, weight in zip(report.node_indices, report.weights):
        lines.append(f"{node:>4d}  {weight:.6f}")
    lines.append(f"objective: {report.objective:.9g}")
    lines.append(f"kkt residual: {report.kkt_residual:.3e}")
    lines.append(f"iterations: {report.iterations}")
    if report.warnings:
        lines.extend(f"warning: {w}" for w in report.warnings)
    return "\n".join(lines) + "\n"


def _format_csv(report: RunReport) -> str:
    rows = ["node,weight"]
    rows.extend(
        f"{node},{weight:.6f}"
        for node, weight in zip(report.node_indices, report.weights)
    )
    return "\n".join(rows) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str) -> tuple[ModelFile, str]:
    with open(path, "rb") as handle:
        raw = handle.read()
    digest = hashlib.sha256(raw).hexdigest()
    return parse_model_text(raw.decode("utf-8")), digest


def _parse_float_list(text: str, what: str) -> np.ndarray:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ParseError(f"{what} must be a comma-separated list of numbers")
    if not values:
        raise ParseError(f"{what} is empty")
    return np.asarray(values, dtype=float)


def _cmd_score(args) -> int:
    kind = ObjectiveKind.from_string(args.kind)
    model_file, digest = _load(args.model)
    try:
        model = model_file.build()
    except UnstableSystem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    count = args.n if args.n is not None else model_file.default_score_order()
    caps = model_file.caps_vector()
    config = SolveConfig(seed=args.seed)

    exit_code = EXIT_OK
    try:
        result = solve(kind, model, count, config, caps)
    except Infeasible as exc:
        print(f"error: infeasible model: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvexAmbiguous as exc:
        result = exc.result
        exit_code = EXIT_AMBIGUOUS
        print(f"warning: {exc}", file=sys.stderr)

    report = _build_report(digest, model_file.kind, kind,
                           model_file.node_indices, result)
    if args.format == "table":
        text = _format_table(report)
    elif args.format == "csv":
        text = _format_csv(report)
    else:
        text = report.to_json_line() + "\n"
    _emit(text, args.out)

    if args.grid_check is not None:
        grid_weights, grid_value = grid_oracle(kind, model, count,
                                               step=args.grid_check, caps=caps)
        gap = result.objective - grid_value
        distance = float(np.max(np.abs(result.weights.values - grid_weights.values)))
        agree = result.objective <= grid_value + 1e-9 and distance <= args.grid_check
        sys.stdout.write(
            f"grid-check: step={args.grid_check:g} oracle_objective={grid_value:.9g} "
            f"objective_gap={gap:.3e} weight_distance={distance:.3e} "
            f"agreement={'pass' if agree else 'FAIL'}\n"
        )
    return exit_code


def _cmd_check(args) -> int:
    model_file, digest = _load(args.model)
    try:
        model = model_file.build()
    except UnstableSystem as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    count = args.n if args.n is not None else model_file.default_score_order()
    report = check_feasibility(model, count, model_file.caps_vector())
    witness = (
        " ".join(f"{w:.6f}" for w in report.witness.values)
        if report.witness is not None
        else "none"
    )
    sys.stdout.write(
        f"model: {model_file.kind} (digest {digest[:16]})\n"
        f"finite node set: yes ({report.node_count} nodes, n={report.score_order})\n"
        f"feasible: {'yes' if report.feasible else 'no'} (witness {witness})\n"
        f"mu_n at witness: {report.nth_eigenvalue:.6e}\n"
        f"commuting: {'yes' if report.commuting else 'no'} "
        f"(residual {report.commutator_residual:.6e})\n"
        f"n-spectrum: {'yes' if report.n_spectrum else 'no'} "
        f"(residual {report.n_spectrum_residual:.6e})\n"
    )
    return EXIT_OK if report.all_pass() else EXIT_INFEASIBLE


def _parse_demo_rows(text: str) -> list[tuple[int, ...]]:
    sets = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            indices = tuple(int(tok) for tok in chunk.split(","))
        except ValueError:
            raise BadIndexSet(f"bad index set {chunk!r}")
        if not indices or any(i < 1 for i in indices):
            raise BadIndexSet(f"bad index set {chunk!r}: indices must be >= 1")
        if len(set(indices)) != len(indices):
            raise BadIndexSet(f"bad index set {chunk!r}: repeated index")
        sets.append(indices)
    if not sets:
        raise BadIndexSet("no index sets given")
    return sets


def _cmd_heat_demo(args) -> int:
    sets = _parse_demo_rows(args.rows)
    # Scores are displayed truncated toward zero at two decimals, matching
    # the presentation convention of the reference table for this model.
    for indices in sets:
        model = heat_dirichlet_model(indices)
        aecs = closed_form_optimum(ObjectiveKind.AECS, model)
        vcs = closed_form_optimum(ObjectiveKind.VCS, model)
        aecs_txt = ", ".join(
            f"{truncate_toward_zero(w):.2f}" for w in aecs.values
        )
        vcs_txt = ", ".join(
            f"{truncate_toward_zero(w):.2f}" for w in vcs.values
        )
        set_txt = "{" + ",".join(str(i) for i in indices) + "}"
        sys.stdout.write(f"I={set_txt}  AECS=({aecs_txt})  VCS=({vcs_txt})\n")
    return EXIT_OK


def _cmd_energy(args) -> int:
    model_file, _ = _load(args.model)
    try:
        model = model_file.build()
    except UnstableSystem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    values = _parse_float_list(args.p, "--p")
    total = values.sum()
    if abs(total - 1.0) > 1e-6:
        print(f"error: weights sum to {total:.6g}, expected 1", file=sys.stderr)
        return EXIT_PARSE
    values = values / total
    weights = SimplexWeights(values, model_file.caps_vector())
    target = _parse_float_list(args.target, "--target")
    count = args.n if args.n is not None else model_file.default_score_order()
    try:
        energy_value = min_energy(model, weights, EnergyQuery(target, count))
        ellipsoid = reachable_ellipsoid(model, weights, count)
    except TargetOutsideSpan as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TARGET
    except (SingularGramian, RankDeficient) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    sys.stdout.write(
        f"energy {energy_value:.6f}\n"
        "semi-axes " + " ".join(f"{s:.6e}" for s in ellipsoid.semi_axes) + "\n"
        f"log-volume {ellipsoid.log_volume:.9g}\n"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctrlscore",
        description="Controllability scores for stable linear systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="compute VCS or AECS weights")
    score.add_argument("model", help="model file path")
    score.add_argument("--kind", required=True, choices=["vcs", "aecs"])
    score.add_argument("--n", type=int, default=None,
                       help="number of selected eigenvalues")
    score.add_argument("--out", default=None, help="write the report here")
    score.add_argument("--format", default="table",
                       choices=["table", "csv", "json-lines"])
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("--grid-check", type=float, default=None, metavar="STEP",
                       help="verify against the lattice oracle at this spacing")
    score.set_defaults(handler=_cmd_score)

    check = sub.add_parser("check", help="run the assumption checkers")
    check.add_argument("model", help="model file path")
    check.add_argument("--n", type=int, default=None)
    check.set_defaults(handler=_cmd_check)

    demo = sub.add_parser("heat-demo",
                          help="closed-form scores for heat-equation node sets")
    demo.add_argument("--rows", default=DEFAULT_DEMO_ROWS,
                      help="semicolon-separated index sets, e.g. '1,2,3,4;2,3,4,5'")
    demo.set_defaults(handler=_cmd_heat_demo)

    energy = sub.add_parser("energy",
                            help="minimum energy and reachable ellipsoid")
    energy.add_argument("model", help="model file path")
    energy.add_argument("--p", required=True, help="comma-separated weights")
    energy.add_argument("--target", required=True,
                        help="comma-separated target state")
    energy.add_argument("--n", type=int, default=None)
    energy.set_defaults(handler=_cmd_energy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BadIndexSet as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CtrlscoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
