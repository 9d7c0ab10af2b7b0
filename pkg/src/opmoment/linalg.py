"""Dense Hermitian matrix arithmetic, eigendecomposition and PSD testing."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, NotHermitian, NotPsd, SingularOperator

logger = logging.getLogger(__name__)

PSD_EPS = 1e-9
RECON_EPS = 1e-10
RANK_TOL = 1e-12
HERMITIAN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A d x d complex Hermitian matrix.

    The entries are Hermitized on construction and stored read-only, so
    entries[i, j] == conj(entries[j, i]) holds exactly.
    """

    entries: np.ndarray

    def __post_init__(self):
        raw = np.array(self.entries, dtype=complex)
        if raw.ndim != 2 or raw.shape[0] != raw.shape[1] or raw.shape[0] < 1:
            raise ValueError(f"Expected a non-empty square matrix, got shape {raw.shape}")
        sym = (raw + raw.conj().T) / 2
        sym.flags.writeable = False
        object.__setattr__(self, "entries", sym)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "HermitianMatrix":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> "HermitianMatrix":
        return cls(np.zeros((dim, dim)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.entries + as_array(other))

    def __sub__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.entries - as_array(other))

    def __mul__(self, scalar: float) -> "HermitianMatrix":
        return HermitianMatrix(self.entries * float(scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"HermitianMatrix(dim={self.dim})"

    def norm(self) -> float:
        """Operator norm, the largest absolute eigenvalue."""
        return op_norm(self)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    def quadratic_form(self, x: np.ndarray) -> complex:
        """<A x, x> = x* A x."""
        x = np.asarray(x, dtype=complex)
        return complex(np.vdot(x, self.entries @ x))


@dataclass(frozen=True)
class Eigendecomposition:
    """Ascending real eigenvalues with unitary eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T

    def apply(self, func) -> HermitianMatrix:
        """Spectral calculus: U diag(func(lambda)) U*."""
        values = func(self.eigenvalues)
        return HermitianMatrix((self.eigenvectors * values) @ self.eigenvectors.conj().T)


@dataclass(frozen=True)
class PsdReport:
    """Outcome of a positive semidefiniteness test."""

    is_psd: bool
    min_eigenvalue: float
    tolerance_used: float

    @property
    def margin(self) -> float:
        """Distance of the smallest eigenvalue from the rejection threshold."""
        return self.min_eigenvalue + self.tolerance_used

    def to_dict(self) -> dict:
        return {
            "is_psd": self.is_psd,
            "min_eigenvalue": self.min_eigenvalue,
            "tolerance_used": self.tolerance_used,
        }


def as_array(A) -> np.ndarray:
    """Return the complex ndarray behind a HermitianMatrix or array-like."""
    if isinstance(A, HermitianMatrix):
        return A.entries
    return np.asarray(A, dtype=complex)


def as_hermitian(A) -> HermitianMatrix:
    if isinstance(A, HermitianMatrix):
        return A
    return HermitianMatrix(A)


def hermitize(raw, tol: float = HERMITIAN_TOL) -> HermitianMatrix:
    """
    Symmetrize a nearly Hermitian matrix.

    Args:
        raw: Square complex array
        tol: Allowed relative asymmetry ||raw - raw*||_F / max(1, ||raw||_F)

    Returns:
        The Hermitian part (raw + raw*) / 2

    Raises:
        NotHermitian: If the asymmetry exceeds tol
    """
    arr = np.asarray(raw, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {arr.shape}")
    asym = float(np.linalg.norm(arr - arr.conj().T))
    scale = max(1.0, float(np.linalg.norm(arr)))
    if asym > tol * scale:
        raise NotHermitian(f"Matrix asymmetry {asym:.3e} exceeds {tol:.1e} x {scale:.3e}")
    return HermitianMatrix(arr)


def eig(A, recon_eps: float = RECON_EPS) -> Eigendecomposition:
    """Eigendecomposition of a Hermitian matrix with a reconstruction check."""
    arr = as_array(A)
    try:
        values, vectors = scipy.linalg.eigh(arr)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"Hermitian eigensolver failed: {e}")
    decomposition = Eigendecomposition(eigenvalues=values, eigenvectors=vectors)

    scale = float(np.linalg.norm(arr))
    residual = float(np.linalg.norm(decomposition.reconstruct() - arr))
    if residual > recon_eps * max(scale, np.finfo(float).tiny) and residual > 0:
        raise ConvergenceFailure(
            f"Eigendecomposition residual {residual:.3e} exceeds {recon_eps:.1e} x {scale:.3e}"
        )
    return decomposition


def eigenvalues(A) -> np.ndarray:
    """Ascending eigenvalues only."""
    try:
        return scipy.linalg.eigvalsh(as_array(A))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"Hermitian eigensolver failed: {e}")


def op_norm(A) -> float:
    """Operator norm of a Hermitian matrix (largest absolute eigenvalue)."""
    values = eigenvalues(A)
    return float(np.max(np.abs(values)))


def psd_check(A, eps: float = PSD_EPS) -> PsdReport:
    """
    Test A >= 0 with the relative tolerance eps * max(1, |lambda|_max).

    Args:
        A: Hermitian matrix
        eps: Relative tolerance (>= 0)

    Returns:
        PsdReport with the smallest eigenvalue and the absolute tolerance applied
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    values = eigenvalues(A)
    tolerance = eps * max(1.0, float(np.max(np.abs(values))))
    min_eigenvalue = float(values[0])
    return PsdReport(
        is_psd=min_eigenvalue >= -tolerance,
        min_eigenvalue=min_eigenvalue,
        tolerance_used=tolerance,
    )


def sqrt_psd(A, eps: float = PSD_EPS) -> HermitianMatrix:
    """Positive square root; eigenvalues in [-tolerance, 0) are clamped to zero."""
    decomposition = eig(A)
    values = decomposition.eigenvalues
    tolerance = eps * max(1.0, float(np.max(np.abs(values))))
    if values[0] < -tolerance:
        raise NotPsd(f"Smallest eigenvalue {values[0]:.3e} below -{tolerance:.1e}")
    return decomposition.apply(lambda w: np.sqrt(np.clip(w, 0.0, None)))


def inv_sqrt_psd(A, rank_tol: float = RANK_TOL) -> HermitianMatrix:
    """Inverse positive square root of a well-conditioned positive matrix."""
    decomposition = eig(A)
    values = decomposition.eigenvalues
    largest = float(values[-1])
    if largest <= 0 or values[0] <= rank_tol * largest:
        raise SingularOperator(
            f"Eigenvalue range [{values[0]:.3e}, {largest:.3e}] is singular at rank_tol {rank_tol:.1e}"
        )
    return decomposition.apply(lambda w: 1.0 / np.sqrt(w))


def min_eigenvector(A) -> np.ndarray:
    """Unit eigenvector for the smallest eigenvalue."""
    return eig(A).eigenvectors[:, 0]


def relative_residual(actual, expected, scale: float | None = None) -> float:
    """||actual - expected||_F relative to ||expected||_F, or to an explicit scale."""
    diff = float(np.linalg.norm(np.asarray(actual) - np.asarray(expected)))
    if diff == 0.0:
        return 0.0
    denominator = float(np.linalg.norm(np.asarray(expected))) if scale is None else scale
    if denominator <= 0.0:
        return float("inf")
    return diff / denominator
