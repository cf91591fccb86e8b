"""Dense complex-matrix quantum primitives.

States, tensor products, partial traces, spectra, entropies and seeded
random ensembles used by every other module.

Conventions
-----------
* Composite systems use the product basis ``|a> (x) |b>`` with the second
  (B) index fastest, matching ``np.kron``: the row index of a bipartite
  matrix is ``a * dim_b + b``.
* Entropies are in bits (log base 2).
* A matrix is accepted as a state when it is Hermitian and unit trace to
  1e-9 and its smallest eigenvalue is at least -1e-9.  Negative eigenvalues
  within that tolerance are clipped to zero and the state renormalised;
  larger violations raise :class:`InvalidStateError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9
PSD_TOL = 1e-9
ENTROPY_EIGENVALUE_CUTOFF = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)
for _p in (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z):
    _p.setflags(write=False)


class InvalidStateError(ValueError):
    """A matrix failed the density-operator invariants."""


def as_rng(seed: int | np.random.Generator | list | None) -> np.random.Generator:
    """Coerce an integer seed (or seed sequence) into a numpy Generator.

    Existing generators pass through unchanged so callers can thread one
    generator through a pipeline of sampling calls.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _freeze(m: np.ndarray) -> np.ndarray:
    m = np.ascontiguousarray(m)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive semidefinite, unit-trace operator on a ``dim``-dimensional space."""

    dim: int
    matrix: np.ndarray

    @classmethod
    def from_matrix(cls, matrix, *, name: str = "state") -> "DensityOperator":
        """Validate ``matrix`` and wrap it.

        Hermiticity and trace must hold to 1e-9; eigenvalues in
        ``[-1e-9, 0)`` are clipped to the PSD cone and the result
        renormalised.  Violations raise :class:`InvalidStateError` with a
        message naming the offending invariant.
        """
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"{name}: expected a square matrix, got shape {m.shape}")
        scale = max(1.0, float(np.linalg.norm(m)))
        herm_defect = float(np.linalg.norm(m - m.conj().T))
        if herm_defect > HERMITICITY_TOL * scale:
            raise InvalidStateError(
                f"{name}: matrix is not Hermitian (defect {herm_defect:.3e})"
            )
        m = (m + m.conj().T) / 2.0
        trace = float(np.trace(m).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"{name}: trace is {trace!r}, expected 1")
        eigvals, eigvecs = np.linalg.eigh(m)
        if eigvals[0] < -PSD_TOL:
            raise InvalidStateError(
                f"{name}: matrix is not positive semidefinite "
                f"(min eigenvalue {eigvals[0]:.3e})"
            )
        if eigvals[0] < 0.0:
            clipped = np.clip(eigvals, 0.0, None)
            m = (eigvecs * clipped) @ eigvecs.conj().T
            m = (m + m.conj().T) / 2.0
            m = m / np.trace(m).real
        return cls(dim=m.shape[0], matrix=_freeze(m))

    @classmethod
    def pure(cls, vector, *, name: str = "state") -> "DensityOperator":
        """Rank-1 projector onto the (normalised) ``vector``."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise InvalidStateError(f"{name}: zero vector cannot define a pure state")
        v = v / norm
        return cls(dim=v.size, matrix=_freeze(np.outer(v, v.conj())))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(dim=dim, matrix=_freeze(np.eye(dim, dtype=complex) / dim))

    @classmethod
    def diagonal(cls, probs, *, name: str = "state") -> "DensityOperator":
        p = np.asarray(probs, dtype=float)
        return cls.from_matrix(np.diag(p.astype(complex)), name=name)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """State on a composite A (x) B system with the shared basis convention."""

    dim_a: int
    dim_b: int
    state: DensityOperator

    def __post_init__(self):
        if self.dim_a * self.dim_b != self.state.dim:
            raise InvalidStateError(
                f"subsystem dims ({self.dim_a}, {self.dim_b}) do not match "
                f"total dimension {self.state.dim}"
            )

    @classmethod
    def from_matrix(cls, matrix, dim_a: int, dim_b: int, *, name: str = "state") -> "BipartiteState":
        return cls(dim_a, dim_b, DensityOperator.from_matrix(matrix, name=name))

    @property
    def matrix(self) -> np.ndarray:
        return self.state.matrix


def tensor(x: DensityOperator, y: DensityOperator) -> DensityOperator:
    """Kronecker product of two states (second factor fastest)."""
    return DensityOperator(dim=x.dim * y.dim, matrix=_freeze(np.kron(x.matrix, y.matrix)))


def product_state(a: DensityOperator, b: DensityOperator) -> BipartiteState:
    return BipartiteState(a.dim, b.dim, tensor(a, b))


def partial_trace_matrix(m: np.ndarray, dim_a: int, dim_b: int, keep: str) -> np.ndarray:
    """Partial trace of a raw ``(dim_a*dim_b)``-square matrix."""
    r = np.asarray(m).reshape(dim_a, dim_b, dim_a, dim_b)
    keep = keep.upper()
    if keep == "A":
        return np.trace(r, axis1=1, axis2=3)
    if keep == "B":
        return np.trace(r, axis1=0, axis2=2)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_trace(rho: BipartiteState, keep: str) -> DensityOperator:
    """Reduced state of the kept subsystem."""
    reduced = partial_trace_matrix(rho.matrix, rho.dim_a, rho.dim_b, keep)
    return DensityOperator.from_matrix(reduced, name=f"tr over {keep}-complement")


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvector columns.  Raises ``ValueError`` for non-Hermitian input.
    """
    h = np.asarray(h, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(h)))
    if np.linalg.norm(h - h.conj().T) > HERMITICITY_TOL * scale:
        raise ValueError("eig_hermitian: input is not Hermitian")
    return np.linalg.eigh((h + h.conj().T) / 2.0)


def entropy_from_eigenvalues(eigvals: np.ndarray) -> float:
    """Shannon entropy in bits of a spectrum, with the 0*log(0) := 0 rule.

    Eigenvalues below 1e-12 (including small negatives from roundoff)
    contribute nothing.
    """
    w = np.asarray(eigvals, dtype=float)
    w = w[w > ENTROPY_EIGENVALUE_CUTOFF]
    if w.size == 0:
        return 0.0
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(rho: DensityOperator | np.ndarray) -> float:
    """Von Neumann entropy in bits."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    return entropy_from_eigenvalues(np.linalg.eigvalsh(m))


ENSEMBLES = ("hilbert-schmidt", "haar-pure", "rank")


def random_density(
    dim: int,
    ensemble: str,
    rng: int | np.random.Generator,
    *,
    rank: int | None = None,
) -> DensityOperator:
    """Draw a random state from a named ensemble.

    ``hilbert-schmidt`` uses G G^dag / tr(G G^dag) with complex
    standard-normal G; ``haar-pure`` a Haar-random unit vector; ``rank``
    the induced measure with ``rank`` Ginibre columns.  Deterministic for
    a given seed.
    """
    rng = as_rng(rng)
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if ensemble == "haar-pure":
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return DensityOperator.pure(v)
    if ensemble == "hilbert-schmidt":
        k = dim
    elif ensemble == "rank":
        if rank is None or not (1 <= rank <= dim):
            raise ValueError(f"rank ensemble needs 1 <= rank <= {dim}, got {rank}")
        k = rank
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    m = g @ g.conj().T
    return DensityOperator.from_matrix(m / np.trace(m).real)


def random_unitary(dim: int, rng: int | np.random.Generator) -> np.ndarray:
    """Haar-random unitary via the phase-fixed QR of a Ginibre matrix."""
    rng = as_rng(rng)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_bipartite(
    dim_a: int,
    dim_b: int,
    rng: int | np.random.Generator,
    ensemble: str = "hilbert-schmidt",
    *,
    rank: int | None = None,
) -> BipartiteState:
    op = random_density(dim_a * dim_b, ensemble, rng, rank=rank)
    return BipartiteState(dim_a, dim_b, op)


def basis_ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def max_entangled(dim: int) -> BipartiteState:
    """Maximally entangled state sum_i |ii> / sqrt(dim) on dim (x) dim."""
    v = np.zeros(dim * dim, dtype=complex)
    for i in range(dim):
        v[i * dim + i] = 1.0
    return BipartiteState(dim, dim, DensityOperator.pure(v))


def bell_state(which: int = 0) -> BipartiteState:
    """The four Bell states on 2 (x) 2, indexed 0..3 as Phi+, Phi-, Psi+, Psi-."""
    s = 1 / np.sqrt(2)
    vectors = {
        0: [s, 0, 0, s],
        1: [s, 0, 0, -s],
        2: [0, s, s, 0],
        3: [0, s, -s, 0],
    }
    if which not in vectors:
        raise ValueError(f"Bell index must be 0..3, got {which}")
    return BipartiteState(2, 2, DensityOperator.pure(vectors[which]))


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    """Orthonormal Hermitian operator basis with the identity direction first.

    Element 0 is 1/sqrt(dim); the rest are the normalised generalised
    Gell-Mann matrices, ordered as the symmetric and antisymmetric pair
    elements for each index pair (j < k), followed by the diagonal
    elements.  For dim 2 this is exactly (1, X, Y, Z)/sqrt(2).
    """

    dim: int
    elements: tuple[np.ndarray, ...]


@lru_cache(maxsize=None)
def hermitian_basis(dim: int) -> HermitianBasis:
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    elements = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    for j in range(dim):
        for k in range(j + 1, dim):
            sym = np.zeros((dim, dim), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            elements.append(sym / np.sqrt(2.0))
            antisym = np.zeros((dim, dim), dtype=complex)
            antisym[j, k] = -1j
            antisym[k, j] = 1j
            elements.append(antisym / np.sqrt(2.0))
    for level in range(1, dim):
        diag = np.zeros(dim, dtype=complex)
        diag[:level] = 1.0
        diag[level] = -level
        norm = np.sqrt(level * (level + 1.0))
        elements.append(np.diag(diag) / norm)
    return HermitianBasis(dim=dim, elements=tuple(_freeze(e) for e in elements))
