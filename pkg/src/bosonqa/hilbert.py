"""Composite Hilbert space of qubits and truncated bosonic modes.

Basis convention (used everywhere in this package): little-endian, spins
before modes.  A basis index decomposes as

    idx = sum_i s_i * 2**i  +  2**n_spins * sum_r n_r * (cutoff+1)**r

with spin site 0 the fastest-varying factor, then spins in ascending site
order, then modes in ascending order.  Equivalently, reshaping an amplitude
array to ``(boson_dim, 2**n_spins)`` (C order) puts the spin index on the
last axis.  Spin basis states are sigma^z eigenstates with s=0 -> |up>
(sigma^z = +1) and s=1 -> |down>.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

__all__ = [
    "SpaceLayout",
    "SparseOperator",
    "StateVector",
    "EigensolverError",
    "spin_operator",
    "boson_operator",
    "identity_operator",
    "apply",
    "extremal_eigs",
    "parity_diagonal",
]

# Dense diagonalisation is cheaper and more robust below this dimension.
_DENSE_EIG_CUTOFF = 512


class EigensolverError(RuntimeError):
    """Raised when an iterative eigensolve does not converge.

    Carries the residual norms of whatever eigenpairs were available so the
    caller can diagnose the failure.
    """

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class SpaceLayout:
    """Shape of the spin (x) boson product space."""

    n_spins: int
    n_modes: int = 0
    cutoff: int = 0

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("need at least one spin")
        if self.n_modes < 0 or self.cutoff < 0:
            raise ValueError("n_modes and cutoff must be non-negative")
        if self.n_modes > 0 and self.cutoff < 1:
            raise ValueError("modes require cutoff >= 1")

    @property
    def spin_dim(self) -> int:
        return 2**self.n_spins

    @property
    def mode_dim(self) -> int:
        return self.cutoff + 1

    @property
    def boson_dim(self) -> int:
        return self.mode_dim**self.n_modes

    @property
    def dim(self) -> int:
        return self.spin_dim * self.boson_dim


@dataclass(frozen=True)
class SparseOperator:
    """Sparse operator tagged with the layout it acts on.

    The matrix is stored as CSR; real float64 when all entries are real
    (every Hamiltonian in this package is), which halves memory and lets the
    propagator split complex matvecs into two real ones.
    """

    layout: SpaceLayout
    matrix: sp.csr_matrix

    def __post_init__(self):
        if self.matrix.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match layout dim {self.layout.dim}"
            )

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def dot(self, vec: np.ndarray) -> np.ndarray:
        return matvec(self.matrix, vec)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        _check_same_layout(self.layout, other.layout)
        return SparseOperator(self.layout, _canonical((self.matrix + other.matrix).tocsr()))

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        _check_same_layout(self.layout, other.layout)
        return SparseOperator(self.layout, _canonical((self.matrix - other.matrix).tocsr()))

    def __mul__(self, scalar: float) -> "SparseOperator":
        return SparseOperator(self.layout, _canonical(self.matrix * scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        _check_same_layout(self.layout, other.layout)
        return SparseOperator(self.layout, _canonical((self.matrix @ other.matrix).tocsr()))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, tol: float = 0.0) -> bool:
        diff = (self.matrix - self.matrix.conj().T).tocsr()
        if diff.nnz == 0:
            return True
        return float(np.abs(diff.data).max()) <= tol


@dataclass
class StateVector:
    """Complex amplitudes over the composite basis."""

    layout: SpaceLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if self.amplitudes.size != self.layout.dim:
            raise ValueError("amplitude length does not match layout dimension")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes / self.norm)

    def overlap(self, other: "StateVector") -> complex:
        _check_same_layout(self.layout, other.layout)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _check_same_layout(a: SpaceLayout, b: SpaceLayout) -> None:
    if a != b:
        raise ValueError(f"layout mismatch: {a} vs {b}")


def _canonical(m: sp.csr_matrix) -> sp.csr_matrix:
    m = m.tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def _embed_factor(op2: sp.spmatrix, pos: int, n_factors: int, factor_dim: int) -> sp.csr_matrix:
    """Embed a single-factor operator at position ``pos`` (pos 0 fastest)."""
    low = sp.identity(factor_dim**pos, format="csr", dtype=op2.dtype)
    high = sp.identity(factor_dim ** (n_factors - 1 - pos), format="csr", dtype=op2.dtype)
    return sp.kron(high, sp.kron(op2, low, format="csr"), format="csr")


def _lift(spin_part: sp.spmatrix | None, boson_part: sp.spmatrix | None, layout: SpaceLayout) -> sp.csr_matrix:
    """Combine spin-sector and boson-sector operators into the full space.

    Boson factors are slower-varying than spins, so the full operator is
    kron(boson_part, spin_part).
    """
    dtype = np.result_type(
        spin_part.dtype if spin_part is not None else np.float64,
        boson_part.dtype if boson_part is not None else np.float64,
    )
    if spin_part is None:
        spin_part = sp.identity(layout.spin_dim, format="csr", dtype=dtype)
    if boson_part is None:
        boson_part = sp.identity(layout.boson_dim, format="csr", dtype=dtype)
    return _canonical(sp.kron(boson_part, spin_part, format="csr"))


def identity_operator(layout: SpaceLayout) -> SparseOperator:
    return SparseOperator(layout, sp.identity(layout.dim, format="csr", dtype=np.float64))


def spin_operator(site: int, axis: str, layout: SpaceLayout) -> SparseOperator:
    """Pauli operator on one site, identity on every other factor."""
    if not 0 <= site < layout.n_spins:
        raise IndexError(f"site {site} out of range for {layout.n_spins} spins")
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    pauli = _PAULI[axis]
    dtype = np.complex128 if axis == "y" else np.float64
    op2 = sp.csr_matrix(pauli.astype(dtype))
    spin_part = _embed_factor(op2, site, layout.n_spins, 2)
    return SparseOperator(layout, _lift(spin_part, None, layout))


def _ladder(cutoff: int, kind: str) -> sp.csr_matrix:
    d = cutoff + 1
    n = np.arange(1, d, dtype=np.float64)
    lower = sp.diags(np.sqrt(n), offsets=1, shape=(d, d), format="csr")
    if kind == "annihilate":
        return lower
    if kind == "create":
        return _canonical(lower.T.tocsr())
    if kind == "number":
        return sp.diags(np.arange(d, dtype=np.float64), format="csr")
    if kind == "position":
        return _canonical((lower + lower.T).tocsr())
    raise ValueError(f"unknown boson operator kind {kind!r}")


def boson_operator(mode: int, kind: str, layout: SpaceLayout) -> SparseOperator:
    """Truncated ladder operator on one mode (kind: annihilate, create, number, position)."""
    if layout.n_modes == 0:
        raise ValueError("layout has no bosonic modes")
    if not 0 <= mode < layout.n_modes:
        raise IndexError(f"mode {mode} out of range for {layout.n_modes} modes")
    op = _ladder(layout.cutoff, kind)
    boson_part = _embed_factor(op, mode, layout.n_modes, layout.mode_dim)
    return SparseOperator(layout, _lift(None, boson_part, layout))


def matvec(matrix: sp.csr_matrix, vec: np.ndarray) -> np.ndarray:
    """Matrix-vector product that avoids upcasting a real matrix to complex."""
    if matrix.dtype == np.float64 and np.iscomplexobj(vec):
        return matrix @ vec.real + 1j * (matrix @ vec.imag)
    return matrix @ vec


def apply(op: SparseOperator, psi: StateVector) -> StateVector:
    """Apply ``op`` to ``psi``; O(nnz)."""
    _check_same_layout(op.layout, psi.layout)
    return StateVector(psi.layout, matvec(op.matrix, psi.amplitudes))


def _residual_norms(matrix: sp.spmatrix, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    r = matrix @ vecs - vecs * vals[np.newaxis, :]
    return np.linalg.norm(r, axis=0)


def extremal_eigs(
    op: SparseOperator,
    k: int,
    *,
    v0: np.ndarray | None = None,
    tol: float = 0.0,
    maxiter: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a Hermitian operator.

    Returns ``(values, vectors)`` with eigenvalues ascending and the columns
    of ``vectors`` orthonormal.  Degenerate subspaces come back with an
    arbitrary orthonormal basis.  Small problems go through dense LAPACK;
    larger ones through ARPACK (implicitly restarted Lanczos with full
    orthogonalisation).  ``v0`` warm-starts the iteration.
    """
    dim = op.dim
    if not 1 <= k <= dim:
        raise ValueError(f"k={k} out of range for dimension {dim}")
    if dim <= _DENSE_EIG_CUTOFF or k >= dim - 1:
        vals, vecs = eigh(op.toarray())
        return vals[:k].copy(), vecs[:, :k].copy()
    ncv = min(dim - 1, max(2 * k + 10, 24))
    try:
        vals, vecs = spla.eigsh(
            op.matrix, k=k, which="SA", v0=v0, ncv=ncv, tol=tol, maxiter=maxiter
        )
    except spla.ArpackNoConvergence as exc:
        res = None
        if exc.eigenvectors is not None and exc.eigenvectors.size:
            res = _residual_norms(op.matrix, exc.eigenvalues, exc.eigenvectors)
        raise EigensolverError(
            f"ARPACK did not converge for k={k}, dim={dim}: {exc}", residuals=res
        ) from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def parity_diagonal(layout: SpaceLayout) -> np.ndarray:
    """Diagonal of the global parity operator prod_i sigma_i^z * (-1)^(N_b).

    Both chain models built in this package commute with it, so it labels
    the symmetry sector of every eigenstate.  Diagonal in the computational
    basis: spin contributes (-1)^(#down spins), each mode (-1)^(n_r).
    """
    spins = np.arange(layout.spin_dim)
    popcount = np.array([bin(s).count("1") for s in spins], dtype=np.int64)
    spin_par = np.where(popcount % 2 == 0, 1.0, -1.0)
    if layout.n_modes == 0:
        return spin_par
    occ = np.arange(layout.mode_dim)
    mode_par = np.where(occ % 2 == 0, 1.0, -1.0)
    boson_par = mode_par
    for _ in range(layout.n_modes - 1):
        boson_par = np.kron(mode_par, boson_par)
    return np.kron(boson_par, spin_par)
