"""Commuting Gramian families as eigenvalue tables, and assumption checkers.

When the node Gramians commute they share an eigenbasis ``{z_k}`` and are
fully described by the nonnegative table ``table[k, i] = z_k^T W_i z_k``.
The mixed Gramian ``W(p)`` then has eigenvalues ``table @ p`` with fixed
eigenvectors, which is what makes the score objectives convex.  This module
holds that truncated representation (``SpectralModel``), the closed-form
builder for the Dirichlet heat equation on the unit interval, a joint
diagonalizer for commuting matrix families, and executable checkers for the
structural assumptions behind the uniqueness guarantee:

* feasibility -- some weight vector keeps the n-th eigenvalue positive;
* commutation -- ``W_i W_j = W_j W_i`` for all pairs;
* n-spectrum  -- every ``W_i`` vanishes outside one fixed n-dimensional span.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadIndexSet,
    DiagonalizationResidualTooLarge,
    EmptyIndexSet,
    IndexMismatch,
    NotCommuting,
)
from .linsys import NodeGramianFamily, assemble_gramian, top_eigenvalues
from .simplex import SimplexWeights, central_point, validate_caps, weight_vector

#: Default relative tolerance for the assumption checkers.
CHECK_TOL = 1e-8

#: Relative eigenvalue gap below which eigenvalues are treated as degenerate.
DEGENERACY_GAP = 1e-8

#: An eigenvalue counts as positive only above this relative floor.
POSITIVE_FLOOR = 1e-12


def positive_floor(top_eigenvalue: float) -> float:
    """Threshold below which an eigenvalue is treated as zero."""
    return POSITIVE_FLOOR * max(1.0, float(top_eigenvalue))


@dataclass(frozen=True)
class SpectralModel:
    """Eigenvalue table of a commuting node-Gramian family.

    Attributes
    ----------
    node_indices : tuple of int
        The evaluated nodes (1-based labels, order fixes the columns).
    eigen_table : ndarray, shape (K, m)
        Nonnegative entries; row ``k`` holds the eigenvalue contributed by
        every node to shared eigenmode ``k``.
    score_order : int
        How many of the largest eigenvalues the score objectives use (n <= K).
    """

    node_indices: tuple[int, ...]
    eigen_table: np.ndarray
    score_order: int

    def __post_init__(self):
        indices = tuple(int(i) for i in self.node_indices)
        if len(indices) == 0:
            raise EmptyIndexSet("node index set is empty")
        if len(set(indices)) != len(indices):
            raise BadIndexSet("node indices must be distinct")
        table = np.asarray(self.eigen_table, dtype=float)
        if table.ndim != 2 or table.shape[1] != len(indices):
            raise IndexMismatch(
                f"eigen table must have {len(indices)} columns, got shape {table.shape}"
            )
        if not np.all(np.isfinite(table)) or np.any(table < 0):
            raise IndexMismatch("eigen table entries must be finite and >= 0")
        if not 1 <= self.score_order <= table.shape[0]:
            raise IndexMismatch(
                f"score order {self.score_order} out of range 1..{table.shape[0]}"
            )
        table.flags.writeable = False
        object.__setattr__(self, "eigen_table", table)
        object.__setattr__(self, "node_indices", indices)
        object.__setattr__(self, "score_order", int(self.score_order))

    @property
    def mode_count(self) -> int:
        return self.eigen_table.shape[0]

    @property
    def node_count(self) -> int:
        return len(self.node_indices)


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the executable assumption checks for one model.

    ``residual <= tol`` is what the booleans encode; residuals are kept so a
    near-miss is visible.  ``witness`` is the first weight vector found with
    ``mu_n > 0`` (None when infeasible), and ``nth_eigenvalue`` is ``mu_n``
    there (the best value seen when infeasible).
    """

    feasible: bool
    witness: SimplexWeights | None
    nth_eigenvalue: float
    commuting: bool
    commutator_residual: float
    n_spectrum: bool
    n_spectrum_residual: float
    node_count: int
    score_order: int

    def all_pass(self) -> bool:
        return self.feasible and self.commuting and self.n_spectrum


def heat_dirichlet_model(node_indices, score_order: int | None = None) -> SpectralModel:
    """Spectral model of the heat equation on (0, 1) with Dirichlet ends.

    The dynamics operator is the second spatial derivative; its eigenmodes
    ``sqrt(2) sin(k pi x)`` are the nodes, and node ``k`` contributes the
    single Gramian eigenvalue ``1 / (2 pi^2 k^2)`` on its own mode.  The
    table is therefore diagonal with one row per requested node and all
    unlisted modes carry exactly zero, so truncation at ``K = len(I)`` rows
    is lossless.

    ``score_order`` must equal the number of nodes (the regime in which the
    optimum is unique); it defaults to that.
    """
    indices = tuple(int(i) for i in node_indices)
    if len(indices) == 0:
        raise EmptyIndexSet("heat model needs at least one node index")
    if any(i < 1 for i in indices):
        raise BadIndexSet(f"heat mode numbers must be >= 1, got {indices}")
    if len(set(indices)) != len(indices):
        raise BadIndexSet(f"heat mode numbers must be distinct, got {indices}")
    m = len(indices)
    if score_order is None:
        score_order = m
    if score_order != m:
        raise IndexMismatch(
            f"heat model requires score order == node count ({m}), got {score_order}"
        )
    table = np.zeros((m, m))
    for row, k in enumerate(indices):
        table[row, row] = 1.0 / (2.0 * np.pi**2 * k**2)
    return SpectralModel(indices, table, score_order)


def model_eigenvalues(model: SpectralModel, weights) -> np.ndarray:
    """All ``K`` eigenvalues of ``W(p)``, sorted descending."""
    p = weight_vector(weights, model.node_count)
    values = model.eigen_table @ p
    return np.sort(values)[::-1]


def _select_rows(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest values, ties broken by lowest index."""
    order = np.argsort(-values, kind="stable")
    return order[:count]


def check_commuting(family, tol: float = CHECK_TOL) -> tuple[bool, float]:
    """Largest normalized pairwise commutator residual of the family.

    Returns ``(residual <= tol, residual)`` with
    ``residual = max_{i<j} ||W_i W_j - W_j W_i||_F / max(1, ||W_i||_F ||W_j||_F)``.
    Spectral models commute by construction and report residual 0.
    """
    if isinstance(family, SpectralModel):
        return True, 0.0
    grams = family.gramians
    worst = 0.0
    for i in range(len(grams)):
        for j in range(i + 1, len(grams)):
            cross = grams[i] @ grams[j]
            num = np.linalg.norm(cross - cross.T)
            den = max(1.0, float(np.linalg.norm(grams[i]) * np.linalg.norm(grams[j])))
            worst = max(worst, float(num / den))
    return worst <= tol, worst


def check_n_spectrum(model, count: int | None = None,
                     tol: float = CHECK_TOL) -> tuple[bool, float]:
    """Whether every node Gramian vanishes outside one fixed n-mode span.

    For a spectral model the candidate span is the ``count`` rows with the
    largest row sums (ties to the lowest row index) and the residual is the
    largest table entry outside them.  For a matrix family the span is the
    top eigenspace of ``sum_i W_i`` and the residual is
    ``max_i ||W_i - Pi W_i Pi||_F / max(1, ||W_i||_F)`` for the orthogonal
    projection ``Pi`` onto the span.
    """
    if isinstance(model, SpectralModel):
        n = model.score_order if count is None else int(count)
        table = model.eigen_table
        if n >= table.shape[0]:
            return True, 0.0
        selected = _select_rows(table.sum(axis=1), n)
        outside = np.ones(table.shape[0], dtype=bool)
        outside[selected] = False
        residual = float(table[outside].max(initial=0.0))
        return residual <= tol, residual

    family: NodeGramianFamily = model
    n = family.system.n_dim if count is None else int(count)
    if n >= family.system.n_dim:
        return True, 0.0
    total = np.sum(family.stacked(), axis=0)
    _, vecs = np.linalg.eigh(total)
    span = vecs[:, ::-1][:, :n]
    projector = span @ span.T
    worst = 0.0
    for gram in family.gramians:
        kept = projector @ gram @ projector
        worst = max(
            worst,
            float(np.linalg.norm(gram - kept) / max(1.0, np.linalg.norm(gram))),
        )
    return worst <= tol, worst


def _nth_eigenvalue(model, weights, count: int) -> tuple[float, float]:
    """(mu_n, mu_1) of ``W(p)`` for either model kind."""
    if isinstance(model, SpectralModel):
        values = model_eigenvalues(model, weights)
    else:
        values = top_eigenvalues(assemble_gramian(model, weights), model.system.n_dim)
    return float(values[count - 1]), float(values[0])


def _witness_candidates(caps: np.ndarray):
    """Interior point first, then the greedy cap-saturating extreme patterns."""
    yield central_point(caps)
    m = caps.size
    for lead in range(m):
        values = np.zeros(m)
        remaining = 1.0
        for i in [lead] + [j for j in range(m) if j != lead]:
            take = min(caps[i], remaining)
            values[i] = take
            remaining -= take
            if remaining <= 0.0:
                break
        if remaining <= 1e-12:
            yield SimplexWeights(values, caps.copy())


def check_feasibility(model, count: int | None = None, caps=None,
                      tol: float = CHECK_TOL) -> AssumptionReport:
    """Run all assumption checks and search for a feasibility witness.

    Tries the central point of the capped simplex and then each greedy
    cap-saturating pattern, accepting the first weights with a strictly
    positive n-th eigenvalue.  Infeasibility is reported, never raised.
    """
    if isinstance(model, SpectralModel):
        m = model.node_count
        n = model.score_order if count is None else int(count)
        limit = model.mode_count
    else:
        m = model.node_count
        n = model.system.n_dim if count is None else int(count)
        limit = model.system.n_dim
    if not 1 <= n <= limit:
        raise IndexMismatch(f"score order {n} out of range 1..{limit}")
    caps_arr = np.ones(m) if caps is None else validate_caps(caps)

    witness = None
    best_mu = -np.inf
    for candidate in _witness_candidates(caps_arr):
        mu_n, mu_1 = _nth_eigenvalue(model, candidate, n)
        best_mu = max(best_mu, mu_n)
        if mu_n > positive_floor(mu_1):
            witness = candidate
            best_mu = mu_n
            break

    commuting, comm_residual = check_commuting(model, tol)
    n_spec, spec_residual = check_n_spectrum(model, n, tol)
    return AssumptionReport(
        feasible=witness is not None,
        witness=witness,
        nth_eigenvalue=float(best_mu),
        commuting=commuting,
        commutator_residual=comm_residual,
        n_spectrum=n_spec,
        n_spectrum_residual=spec_residual,
        node_count=m,
        score_order=n,
    )


def _refine_block(block_vectors: np.ndarray, grams, gram_index: int,
                  gap: float) -> np.ndarray:
    """Rotate a degenerate eigenblock to diagonalize the remaining Gramians."""
    if block_vectors.shape[1] <= 1 or gram_index >= len(grams):
        return block_vectors
    restricted = block_vectors.T @ grams[gram_index] @ block_vectors
    restricted = 0.5 * (restricted + restricted.T)
    vals, vecs = np.linalg.eigh(restricted)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    rotated = block_vectors @ vecs
    scale = max(1.0, float(abs(vals[0])) if vals.size else 1.0)
    pieces = []
    start = 0
    for stop in range(1, vals.size + 1):
        if stop == vals.size or vals[stop - 1] - vals[stop] > gap * scale:
            pieces.append(
                _refine_block(rotated[:, start:stop], grams, gram_index + 1, gap)
            )
            start = stop
    return np.hstack(pieces)


def spectral_model_from_gramians(family: NodeGramianFamily,
                                 score_order: int | None = None,
                                 tol: float = CHECK_TOL) -> SpectralModel:
    """Jointly diagonalize a commuting family into a spectral model.

    The shared eigenbasis is the eigenbasis of ``sum_i W_i``, refined inside
    degenerate eigenvalue blocks by recursively diagonalizing each ``W_i``
    restricted to the block.  Rows come out ordered by descending eigenvalue
    of the sum.  The reconstruction ``||W_i - Z diag(table[:, i]) Z^T||_F``
    is verified for every node.

    Raises
    ------
    NotCommuting
        If the family's commutator residual exceeds ``tol``.
    DiagonalizationResidualTooLarge
        If any reconstruction residual exceeds ``tol``.
    """
    commuting, residual = check_commuting(family, tol)
    if not commuting:
        raise NotCommuting(
            f"family commutator residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    n_dim = family.system.n_dim
    n = n_dim if score_order is None else int(score_order)

    total = np.sum(family.stacked(), axis=0)
    total = 0.5 * (total + total.T)
    vals, vecs = np.linalg.eigh(total)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    scale = max(1.0, float(abs(vals[0])))
    pieces = []
    start = 0
    for stop in range(1, vals.size + 1):
        if stop == vals.size or vals[stop - 1] - vals[stop] > DEGENERACY_GAP * scale:
            pieces.append(
                _refine_block(vecs[:, start:stop], family.gramians, 0, DEGENERACY_GAP)
            )
            start = stop
    basis = np.hstack(pieces)

    table = np.empty((n_dim, family.node_count))
    for col, gram in enumerate(family.gramians):
        table[:, col] = np.einsum("kn,nm,mk->k", basis.T, gram, basis)
    table[(table < 0) & (table > -tol)] = 0.0

    worst = 0.0
    for col, gram in enumerate(family.gramians):
        rebuilt = (basis * table[:, col]) @ basis.T
        worst = max(
            worst,
            float(np.linalg.norm(gram - rebuilt) / max(1.0, np.linalg.norm(gram))),
        )
    if worst > tol or np.any(table < 0):
        raise DiagonalizationResidualTooLarge(
            f"joint diagonalization residual {worst:.3e} exceeds tolerance {tol:.1e}"
        )
    return SpectralModel(family.node_indices, table, n)
