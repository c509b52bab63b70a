"""Dense complex operator algebra for small Hilbert spaces (dim 2..9).

Wraps the handful of exact-enough primitives the simulator needs: Hermitian
operators with validated invariants, spectral decompositions with degenerate
eigenvalues merged, Kronecker products, and the Pauli / spin-1 operator
families.  Dimensions are capped at 9, which covers C^2, C^3, C^2⊗C^2 and
C^3⊗C^3 — everything the experiments use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DIM = 9
HERMITIAN_TOL = 1e-12
EIGENVALUE_MERGE_TOL = 1e-9
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
ORTHONORMAL_TOL = 1e-10
NORM_TOL = 1e-12


class InvariantViolation(ValueError):
    """A domain type's defining invariant failed to hold."""


def _as_square_complex(entries) -> np.ndarray:
    mat = np.array(entries, dtype=complex, order="C")
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvariantViolation(f"expected a square matrix, got shape {mat.shape}")
    dim = mat.shape[0]
    if not 2 <= dim <= MAX_DIM:
        raise InvariantViolation(f"dimension {dim} outside supported range 2..{MAX_DIM}")
    mat.setflags(write=False)
    return mat


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(matrix, 2))


def round_near_integers(values: np.ndarray, tol: float = EIGENVALUE_MERGE_TOL) -> np.ndarray:
    """Snap entries within ``tol`` of an integer to that integer.

    The Pauli and spin operator families all have exact small-integer spectra;
    this removes eigensolver dust below the merge tolerance so downstream
    exact-equality checks (per-shot context products, coloring laws) hold in
    float arithmetic.  Generic non-integer values pass through untouched.
    """
    values = np.asarray(values, dtype=float)
    nearest = np.rint(values)
    return np.where(np.abs(values - nearest) < tol, nearest, values)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Finite-dimensional self-adjoint operator; the carrier of all observables."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = _as_square_complex(self.matrix)
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise InvariantViolation("matrix is not Hermitian within 1e-12")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semi-definite, unit-trace operator."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = _as_square_complex(self.matrix)
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise InvariantViolation("density matrix is not Hermitian within 1e-12")
        if abs(np.trace(mat).real - 1.0) > TRACE_TOL:
            raise InvariantViolation(f"trace {np.trace(mat).real!r} differs from 1 beyond 1e-10")
        if float(np.linalg.eigvalsh(mat).min()) < -PSD_TOL:
            raise InvariantViolation("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vector) -> DensityOperator:
        """|v><v| for a (normalised up to float dust) state vector."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise InvariantViolation("cannot build a pure state from the zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityOperator:
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def _trusted(cls, matrix: np.ndarray) -> DensityOperator:
        # Collapse produces valid states by construction; skip re-validation
        # on the per-shot hot path.
        out = object.__new__(cls)
        matrix = np.ascontiguousarray(matrix)
        matrix.setflags(write=False)
        object.__setattr__(out, "matrix", matrix)
        return out


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Orthonormal basis of C^dim; ``vectors`` holds one basis vector per row."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        mat = _as_square_complex(self.vectors)
        gram = mat.conj() @ mat.T
        if np.max(np.abs(np.diag(gram).real - 1.0)) > NORM_TOL:
            raise InvariantViolation("basis vector norm differs from 1 beyond 1e-12")
        off = gram - np.diag(np.diag(gram))
        if np.max(np.abs(off)) > ORTHONORMAL_TOL:
            raise InvariantViolation("basis vectors are not orthogonal within 1e-10")
        object.__setattr__(self, "vectors", mat)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def projector(self, i: int) -> np.ndarray:
        v = self.vectors[i]
        return np.outer(v, v.conj())

    def rank1_projectors(self) -> np.ndarray:
        """Stack of the dim rank-1 projectors, shape (dim, dim, dim)."""
        return np.einsum("ia,ib->iab", self.vectors, self.vectors.conj())

    @classmethod
    def computational(cls, dim: int) -> OrthonormalBasis:
        return cls(np.eye(dim, dtype=complex))


def spectral_decomposition(
    op: HermitianOperator,
) -> list[tuple[float, HermitianOperator]]:
    """Eigenvalues (ascending) with their spectral projectors.

    Eigenvalues closer than 1e-9 are treated as one degenerate level and get a
    single projector of the corresponding rank.  The projectors are idempotent,
    mutually orthogonal and sum to the identity; sum(a_i P_i) reconstructs the
    operator within 1e-9 in operator norm.
    """
    if not isinstance(op, HermitianOperator):
        raise InvariantViolation("spectral_decomposition expects a HermitianOperator")
    evals, evecs = np.linalg.eigh(op.matrix)
    out: list[tuple[float, HermitianOperator]] = []
    start = 0
    for stop in range(1, len(evals) + 1):
        if stop == len(evals) or evals[stop] - evals[stop - 1] > EIGENVALUE_MERGE_TOL:
            block = evecs[:, start:stop]
            proj = block @ block.conj().T
            proj = (proj + proj.conj().T) / 2.0
            value = float(round_near_integers(np.array([evals[start:stop].mean()]))[0])
            out.append((value, HermitianOperator(proj)))
            start = stop
    return out


def tensor(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    """Kronecker product; rejects results beyond the supported dimension cap."""
    if a.dim * b.dim > MAX_DIM:
        raise ValueError(f"tensor dimension {a.dim * b.dim} exceeds supported maximum {MAX_DIM}")
    return HermitianOperator(np.kron(a.matrix, b.matrix))


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_SQRT2_INV = 1.0 / np.sqrt(2.0)
_SPIN1 = (
    _SQRT2_INV * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex),
    _SQRT2_INV * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex),
    np.diag([1.0, 0.0, -1.0]).astype(complex),
)


def pauli(which: str) -> HermitianOperator:
    """One of the 2x2 Pauli operators 'x', 'y', 'z' (spectrum {-1, +1})."""
    try:
        return HermitianOperator(_PAULI[which])
    except KeyError:
        raise ValueError(f"unknown Pauli axis {which!r}; expected 'x', 'y' or 'z'") from None


def identity(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim, dtype=complex))


def spin1_component(axis) -> HermitianOperator:
    """Spin-1 component S_r = r·(S_x, S_y, S_z) for a unit 3-vector r."""
    r = np.asarray(axis, dtype=float).reshape(-1)
    if r.shape != (3,):
        raise ValueError("axis must be a 3-vector")
    if abs(np.linalg.norm(r) - 1.0) > 1e-10:
        raise ValueError(f"axis norm {np.linalg.norm(r):.12g} is not 1 within 1e-10")
    return HermitianOperator(r[0] * _SPIN1[0] + r[1] * _SPIN1[1] + r[2] * _SPIN1[2])


def born_expectation(rho: DensityOperator, op: HermitianOperator) -> float:
    """Tr(rho·op); the sub-1e-10 imaginary residue of the trace is discarded."""
    if rho.dim != op.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, operator {op.dim}")
    return float(np.trace(rho.matrix @ op.matrix).real)
