"""Model file format: parsing, validation, serialization.

A model file is a line-oriented text format with an explicit schema version.
``#`` starts a comment, blank lines are ignored, tokens are whitespace
separated.  Grammar (EBNF, also documented in the README):

    file    = header { line } ;
    header  = "ctrlscore-model" "v" INT EOL ;
    line    = EOL | stmt EOL ;
    stmt    = "kind" KIND
            | "nodes" INT { INT }
            | "n" INT
            | "caps" NUM { NUM }
            | "matrix" INT EOL { row }      (* dense_lti payload, d rows *)
            | "table" INT INT EOL { row } ; (* spectral_table payload, K rows *)
    row     = NUM { NUM } EOL ;
    KIND    = "dense_lti" | "spectral_table" | "heat_dirichlet" ;

Exactly one payload kind per file: ``dense_lti`` carries a square dynamics
matrix (row-major), ``spectral_table`` a K x m nonnegative eigenvalue table,
``heat_dirichlet`` only the node indices.  ``caps`` is optional and must
match the node count.  Parse and consistency failures raise
:class:`~ctrlscore.errors.ParseError` with a 1-based line and column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .linsys import NodeGramianFamily, check_stability, gramian_family
from .spectral import SpectralModel, heat_dirichlet_model

SCHEMA_VERSION = 1
MODEL_KINDS = ("dense_lti", "spectral_table", "heat_dirichlet")


@dataclass(frozen=True)
class ModelFile:
    """Parsed, validated model file content."""

    schema_version: int
    kind: str
    node_indices: tuple[int, ...]
    score_order: int | None = None
    caps: tuple[float, ...] | None = None
    dynamics: tuple[tuple[float, ...], ...] | None = None
    table: tuple[tuple[float, ...], ...] | None = None

    def default_score_order(self) -> int:
        if self.score_order is not None:
            return self.score_order
        if self.kind == "spectral_table":
            return min(len(self.node_indices), len(self.table))
        if self.kind == "dense_lti":
            return len(self.dynamics)
        return len(self.node_indices)

    def caps_vector(self) -> np.ndarray | None:
        return None if self.caps is None else np.asarray(self.caps, dtype=float)

    def build(self) -> SpectralModel | NodeGramianFamily:
        """Construct the solver-side model object.

        Stability of a ``dense_lti`` matrix is checked here and
        :class:`~ctrlscore.errors.UnstableSystem` propagates to the caller.
        """
        if self.kind == "heat_dirichlet":
            return heat_dirichlet_model(self.node_indices)
        if self.kind == "spectral_table":
            return SpectralModel(
                self.node_indices,
                np.asarray(self.table, dtype=float),
                self.default_score_order(),
            )
        system = check_stability(np.asarray(self.dynamics, dtype=float))
        return gramian_family(system, self.node_indices)


class _Lines:
    """Token stream over comment-stripped lines with position tracking."""

    def __init__(self, text: str):
        self.rows: list[tuple[int, list[tuple[str, int]]]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            tokens = []
            col = 0
            while col < len(body):
                if body[col].isspace():
                    col += 1
                    continue
                start = col
                while col < len(body) and not body[col].isspace():
                    col += 1
                tokens.append((body[start:col], start + 1))
            if tokens:
                self.rows.append((lineno, tokens))
        self.cursor = 0

    def peek(self):
        return self.rows[self.cursor] if self.cursor < len(self.rows) else None

    def advance(self):
        row = self.rows[self.cursor]
        self.cursor += 1
        return row


def _to_int(token: str, line: int, col: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected integer, got {token!r}", line, col)


def _to_float(token: str, line: int, col: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected number, got {token!r}", line, col)


def _read_rows(lines: _Lines, nrows: int, ncols: int, what: str):
    data = []
    for _ in range(nrows):
        row = lines.peek()
        if row is None:
            raise ParseError(
                f"{what}: expected {nrows} rows, file ended after {len(data)}",
                lines.rows[-1][0] if lines.rows else 1, 1,
            )
        lineno, tokens = lines.advance()
        if len(tokens) != ncols:
            raise ParseError(
                f"{what}: expected {ncols} entries per row, got {len(tokens)}",
                lineno, tokens[0][1],
            )
        data.append(tuple(_to_float(t, lineno, c) for t, c in tokens))
    return tuple(data)


def parse_model_text(text: str) -> ModelFile:
    """Parse and validate a model file; raises ParseError on any defect."""
    lines = _Lines(text)
    header = lines.peek()
    if header is None:
        raise ParseError("empty model file", 1, 1)
    lineno, tokens = lines.advance()
    if tokens[0][0] != "ctrlscore-model":
        raise ParseError("expected header 'ctrlscore-model v<INT>'",
                         lineno, tokens[0][1])
    if len(tokens) != 2 or not tokens[1][0].startswith("v"):
        raise ParseError("header must be 'ctrlscore-model v<INT>'",
                         lineno, tokens[-1][1])
    version = _to_int(tokens[1][0][1:], lineno, tokens[1][1])
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {version}",
                         lineno, tokens[1][1])

    kind = None
    nodes = None
    order = None
    caps = None
    matrix = None
    table = None
    positions: dict[str, tuple[int, int]] = {}

    while lines.peek() is not None:
        lineno, tokens = lines.advance()
        word, col = tokens[0]
        seen_before = word in positions
        positions[word] = (lineno, col)
        if seen_before:
            raise ParseError(f"duplicate statement {word!r}", lineno, col)
        if word == "kind":
            if len(tokens) != 2:
                raise ParseError("kind takes exactly one value", lineno, col)
            kind = tokens[1][0]
            if kind not in MODEL_KINDS:
                raise ParseError(
                    f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}",
                    lineno, tokens[1][1],
                )
        elif word == "nodes":
            if len(tokens) < 2:
                raise ParseError("nodes needs at least one index", lineno, col)
            nodes = tuple(_to_int(t, lineno, c) for t, c in tokens[1:])
        elif word == "n":
            if len(tokens) != 2:
                raise ParseError("n takes exactly one value", lineno, col)
            order = _to_int(tokens[1][0], lineno, tokens[1][1])
        elif word == "caps":
            caps = tuple(_to_float(t, lineno, c) for t, c in tokens[1:])
            if not caps:
                raise ParseError("caps needs at least one value", lineno, col)
        elif word == "matrix":
            if len(tokens) != 2:
                raise ParseError("matrix takes one dimension argument", lineno, col)
            dim = _to_int(tokens[1][0], lineno, tokens[1][1])
            if dim < 1:
                raise ParseError("matrix dimension must be >= 1", lineno, tokens[1][1])
            matrix = _read_rows(lines, dim, dim, "matrix")
        elif word == "table":
            if len(tokens) != 3:
                raise ParseError("table takes row and column counts", lineno, col)
            nrows = _to_int(tokens[1][0], lineno, tokens[1][1])
            ncols = _to_int(tokens[2][0], lineno, tokens[2][1])
            if nrows < 1 or ncols < 1:
                raise ParseError("table dimensions must be >= 1", lineno, tokens[1][1])
            table = _read_rows(lines, nrows, ncols, "table")
        else:
            raise ParseError(f"unknown statement {word!r}", lineno, col)

    def where(name: str) -> tuple[int, int]:
        return positions.get(name, (1, 1))

    if kind is None:
        raise ParseError("missing 'kind' statement", *where("kind"))
    if nodes is None:
        raise ParseError("missing 'nodes' statement", *where("nodes"))
    if len(set(nodes)) != len(nodes) or any(i < 1 for i in nodes):
        raise ParseError("node indices must be distinct and >= 1", *where("nodes"))

    if kind == "dense_lti":
        if matrix is None:
            raise ParseError("dense_lti requires a 'matrix' block", *where("kind"))
        if table is not None:
            raise ParseError("dense_lti cannot carry a 'table' block", *where("table"))
        dim = len(matrix)
        if any(i > dim for i in nodes):
            raise ParseError(
                f"node indices must be <= matrix dimension {dim}", *where("nodes")
            )
        if order is not None and not 1 <= order <= dim:
            raise ParseError(f"n must lie in 1..{dim}", *where("n"))
    elif kind == "spectral_table":
        if table is None:
            raise ParseError("spectral_table requires a 'table' block", *where("kind"))
        if matrix is not None:
            raise ParseError(
                "spectral_table cannot carry a 'matrix' block", *where("matrix")
            )
        if len(table[0]) != len(nodes):
            raise ParseError(
                f"table has {len(table[0])} columns but {len(nodes)} nodes",
                *where("table"),
            )
        if any(entry < 0 for row in table for entry in row):
            raise ParseError("table entries must be >= 0", *where("table"))
        if order is not None and not 1 <= order <= len(table):
            raise ParseError(f"n must lie in 1..{len(table)}", *where("n"))
    else:  # heat_dirichlet
        if matrix is not None or table is not None:
            raise ParseError(
                "heat_dirichlet carries no matrix or table payload", *where("kind")
            )
        if order is not None and order != len(nodes):
            raise ParseError(
                f"heat_dirichlet requires n == node count ({len(nodes)})", *where("n")
            )

    if caps is not None:
        if len(caps) != len(nodes):
            raise ParseError(
                f"caps has {len(caps)} entries but there are {len(nodes)} nodes",
                *where("caps"),
            )
        if any(c < 0 for c in caps):
            raise ParseError("caps must be nonnegative", *where("caps"))
        if sum(caps) < 1.0 - 1e-12:
            raise ParseError("caps must sum to at least 1", *where("caps"))

    return ModelFile(
        schema_version=version,
        kind=kind,
        node_indices=tuple(nodes),
        score_order=order,
        caps=caps,
        dynamics=matrix,
        table=table,
    )


def load_model_file(path) -> ModelFile:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_model_text(handle.read())


def model_file_from_spectral(model: SpectralModel, caps=None) -> ModelFile:
    """Wrap a spectral model as a serializable ``spectral_table`` file."""
    caps_tuple = None if caps is None else tuple(float(c) for c in caps)
    return ModelFile(
        schema_version=SCHEMA_VERSION,
        kind="spectral_table",
        node_indices=model.node_indices,
        score_order=model.score_order,
        caps=caps_tuple,
        table=tuple(tuple(float(x) for x in row) for row in model.eigen_table),
    )


def dump_model_text(model: ModelFile) -> str:
    """Serialize a ModelFile back to the text format (full float precision)."""
    out = [f"ctrlscore-model v{model.schema_version}"]
    out.append(f"kind {model.kind}")
    out.append("nodes " + " ".join(str(i) for i in model.node_indices))
    if model.score_order is not None:
        out.append(f"n {model.score_order}")
    if model.caps is not None:
        out.append("caps " + " ".join(repr(c) for c in model.caps))
    if model.dynamics is not None:
        out.append(f"matrix {len(model.dynamics)}")
        out.extend(" ".join(repr(x) for x in row) for row in model.dynamics)
    if model.table is not None:
        out.append(f"table {len(model.table)} {len(model.table[0])}")
        out.extend(" ".join(repr(x) for x in row) for row in model.table)
    return "\n".join(out) + "\n"
