"""Stable LTI systems and per-node controllability Gramians.

For an exponentially stable ``A`` the Gramian of node ``i`` is

    W_i = integral_0^inf  exp(t A) P_i P_i^T exp(t A)^T dt,

with ``P_i`` the rank-one projection onto node i's basis vector.  ``W_i`` is
the unique solution of the continuous Lyapunov equation
``A W_i + W_i A^T + P_i P_i^T = 0`` and is computed with the dense
Schur-based solver; the defining integral is kept only as a test oracle.
The mixed Gramian for a weight vector ``p`` is ``W(p) = sum_i p_i W_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .errors import (
    EigenFailure,
    EmptyIndexSet,
    IndexMismatch,
    LyapunovSolveFailure,
    NonSquare,
    UnstableSystem,
)
from .simplex import weight_vector

#: Default absolute tolerance for residuals, symmetry and eigenvalue clamping.
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class StableLTISystem:
    """An exponentially stable dynamics matrix with its spectral abscissa."""

    dynamics: np.ndarray
    spectral_abscissa: float

    def __post_init__(self):
        arr = np.asarray(self.dynamics, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "dynamics", arr)

    @property
    def n_dim(self) -> int:
        return self.dynamics.shape[0]


def check_stability(a_matrix) -> StableLTISystem:
    """Validate stability of ``A`` and return it with its spectral abscissa.

    Raises
    ------
    NonSquare
        If ``A`` is not a square 2-d matrix.
    UnstableSystem
        If the largest real part of the eigenvalues of ``A`` is >= 0.
    """
    arr = np.asarray(a_matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise NonSquare(f"dynamics matrix must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UnstableSystem("dynamics matrix has non-finite entries")
    abscissa = float(np.max(np.linalg.eigvals(arr).real))
    if abscissa >= 0.0:
        raise UnstableSystem(
            f"UnstableSystem: spectral abscissa {abscissa:.6g} >= 0"
        )
    return StableLTISystem(arr, abscissa)


@dataclass(frozen=True)
class NodeGramianFamily:
    """A stable system with one controllability Gramian per node.

    ``node_indices`` are 1-based.  ``basis`` holds the node directions as
    columns (identity for standard-basis nodes).  Each Gramian must be
    symmetric and positive semidefinite within tolerance; objects built by
    :func:`gramian_family` additionally satisfy the Lyapunov residual bound.
    """

    system: StableLTISystem
    node_indices: tuple[int, ...]
    gramians: tuple[np.ndarray, ...]
    basis: np.ndarray | None = None

    def __post_init__(self):
        if len(self.node_indices) == 0:
            raise EmptyIndexSet("node index set is empty")
        if len(set(self.node_indices)) != len(self.node_indices):
            raise IndexMismatch("node indices must be distinct")
        if len(self.gramians) != len(self.node_indices):
            raise IndexMismatch("one Gramian per node index is required")
        n = self.system.n_dim
        frozen = []
        for idx, gram in zip(self.node_indices, self.gramians):
            arr = np.asarray(gram, dtype=float)
            if arr.shape != (n, n):
                raise IndexMismatch(f"Gramian for node {idx} has shape {arr.shape}")
            scale = max(1.0, float(np.linalg.norm(arr)))
            if np.linalg.norm(arr - arr.T) > DEFAULT_TOL * scale:
                raise EigenFailure(f"Gramian for node {idx} is not symmetric")
            if float(np.linalg.eigvalsh(arr)[0]) < -DEFAULT_TOL * scale:
                raise EigenFailure(f"Gramian for node {idx} is not PSD")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "gramians", tuple(frozen))
        object.__setattr__(self, "node_indices", tuple(int(i) for i in self.node_indices))
        if self.basis is not None:
            basis = np.asarray(self.basis, dtype=float)
            basis.flags.writeable = False
            object.__setattr__(self, "basis", basis)

    @property
    def node_count(self) -> int:
        return len(self.node_indices)

    def stacked(self) -> np.ndarray:
        """Gramians stacked along axis 0, shape (m, n, n)."""
        return np.stack(self.gramians)


def node_direction(system: StableLTISystem, node: int, basis=None) -> np.ndarray:
    """Unit vector of node ``node`` (1-based), standard basis by default."""
    n = system.n_dim
    if not 1 <= node <= n:
        raise IndexMismatch(f"node {node} out of range 1..{n}")
    if basis is None:
        direction = np.zeros(n)
        direction[node - 1] = 1.0
        return direction
    basis = np.asarray(basis, dtype=float)
    if basis.shape != (n, n):
        raise IndexMismatch(f"basis must be {n}x{n}, got {basis.shape}")
    return basis[:, node - 1].copy()


def node_gramian(system: StableLTISystem, node: int, basis=None,
                 tol: float = DEFAULT_TOL) -> np.ndarray:
    """Solve ``A W + W A^T = -d d^T`` for node direction ``d``.

    Parameters
    ----------
    system : StableLTISystem
        The (stable) dynamics.
    node : int
        1-based node index.
    basis : ndarray, optional
        Orthonormal matrix whose columns are the node directions.  Defaults
        to the standard basis.
    tol : float
        Relative bound on the Lyapunov residual.

    Returns
    -------
    ndarray
        The symmetric PSD node Gramian.

    Raises
    ------
    LyapunovSolveFailure
        If the residual exceeds ``tol * max(1, ||W||_F)``.
    """
    direction = node_direction(system, node, basis)
    rhs = -np.outer(direction, direction)
    a = system.dynamics
    try:
        gram = solve_continuous_lyapunov(a, rhs)
    except Exception as exc:  # scipy raises LinAlgError / ValueError
        raise LyapunovSolveFailure(f"Lyapunov solve failed for node {node}: {exc}")
    gram = 0.5 * (gram + gram.T)
    residual = np.linalg.norm(a @ gram + gram @ a.T - rhs)
    if residual > tol * max(1.0, float(np.linalg.norm(gram))):
        raise LyapunovSolveFailure(
            f"Lyapunov residual {residual:.3e} exceeds tolerance for node {node}"
        )
    return gram


def gramian_family(system: StableLTISystem, node_indices, basis=None,
                   tol: float = DEFAULT_TOL) -> NodeGramianFamily:
    """Compute the node Gramians for every index in ``node_indices``."""
    indices = tuple(int(i) for i in node_indices)
    if len(indices) == 0:
        raise EmptyIndexSet("node index set is empty")
    grams = tuple(node_gramian(system, i, basis, tol) for i in indices)
    return NodeGramianFamily(system, indices, grams, basis)


def assemble_gramian(family: NodeGramianFamily, weights) -> np.ndarray:
    """Mixed Gramian ``W(p) = sum_i p_i W_i`` for the given weights."""
    p = weight_vector(weights)
    if p.size != family.node_count:
        raise IndexMismatch(
            f"{family.node_count} node weights expected, got {p.size}"
        )
    return np.tensordot(p, family.stacked(), axes=1)


def top_eigenvalues(matrix, count: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """The ``count`` largest eigenvalues of a symmetric PSD matrix, descending.

    Eigenvalues within ``-tol * max(1, mu_max)`` of zero are clamped to zero;
    anything more negative raises, since that indicates a modeling bug rather
    than roundoff.
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"matrix must be square, got shape {arr.shape}")
    if not 0 < count <= arr.shape[0]:
        raise IndexMismatch(f"count {count} out of range 1..{arr.shape[0]}")
    scale = max(1.0, float(np.linalg.norm(arr)))
    if np.linalg.norm(arr - arr.T) > tol * scale:
        raise EigenFailure("matrix is not symmetric within tolerance")
    try:
        eigvals = np.linalg.eigvalsh(arr)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigendecomposition failed: {exc}")
    eigvals = eigvals[::-1]
    floor = -tol * max(1.0, float(eigvals[0]) if eigvals.size else 1.0)
    if float(eigvals[-1]) < floor:
        raise EigenFailure(
            f"matrix has eigenvalue {eigvals[-1]:.3e} below the PSD tolerance"
        )
    return np.maximum(eigvals[:count], 0.0)
