"""Finitely atomic operator-valued measures and charges."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotMeasure, NotSemiSpectral, OverflowRisk, ReconstructionMismatch
from .linalg import PSD_EPS, HermitianMatrix, psd_check, relative_residual, sqrt_psd
from .moments import MAGNITUDE_LIMIT, OperatorSequence
from .verdict import Verdict

logger = logging.getLogger(__name__)

MERGE_REL_TOL = 1e-8
SEMISPECTRAL_TOL = 1e-10
SPECTRAL_TOL = 1e-9
DILATION_TOL = 1e-9
ZERO_WEIGHT_TOL = 1e-12


def atom_merge_tol(atoms) -> float:
    """Atoms closer than this are the same atom."""
    largest = max((abs(a) for a in atoms), default=0.0)
    return MERGE_REL_TOL * (1.0 + largest)


@dataclass(frozen=True)
class AtomicOVM:
    """E = sum_k S_k delta_{lambda_k} on C^dim.

    Atoms are sorted on construction and atoms within `atom_merge_tol` are
    merged by summing their weights. Weights need not be positive: the same
    type carries operator-valued charges, and `is_measure` tells them apart.
    """

    atoms: tuple[float, ...]
    weights: tuple[HermitianMatrix, ...]
    dim: int = 0

    def __post_init__(self):
        atoms = [float(a) for a in self.atoms]
        weights = [w if isinstance(w, HermitianMatrix) else HermitianMatrix(w) for w in self.weights]
        if len(atoms) != len(weights):
            raise ValueError(f"{len(atoms)} atoms but {len(weights)} weights")
        if not all(math.isfinite(a) for a in atoms):
            raise ValueError("Atoms must be finite")
        dims = {w.dim for w in weights}
        if len(dims) > 1:
            raise ValueError(f"Weights have mixed dimensions {sorted(dims)}")
        dim = dims.pop() if dims else self.dim
        if dim < 1:
            raise ValueError("An empty measure needs an explicit dim")
        if self.dim and self.dim != dim:
            raise ValueError(f"dim={self.dim} does not match weights of dimension {dim}")

        order = sorted(range(len(atoms)), key=lambda k: atoms[k])
        tol = atom_merge_tol(atoms)
        merged_atoms: list[float] = []
        merged_weights: list[HermitianMatrix] = []
        for k in order:
            if merged_atoms and atoms[k] - merged_atoms[-1] <= tol:
                logger.debug("Merging atom %r into %r", atoms[k], merged_atoms[-1])
                merged_weights[-1] = merged_weights[-1] + weights[k]
                continue
            merged_atoms.append(atoms[k])
            merged_weights.append(weights[k])

        object.__setattr__(self, "atoms", tuple(merged_atoms))
        object.__setattr__(self, "weights", tuple(merged_weights))
        object.__setattr__(self, "dim", dim)

    @classmethod
    def from_arrays(cls, atoms, weights, dim: int = 0) -> "AtomicOVM":
        return cls(tuple(atoms), tuple(HermitianMatrix(w) for w in weights), dim)

    @property
    def r(self) -> int:
        """Number of atoms."""
        return len(self.atoms)

    @property
    def total_mass(self) -> HermitianMatrix:
        """E(R) = sum of the weights."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for weight in self.weights:
            total += weight.entries
        return HermitianMatrix(total)

    @property
    def is_measure(self) -> bool:
        return is_measure(self).passed

    def first_moments(self, power: int) -> HermitianMatrix:
        """sum_k lambda_k^power S_k."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for atom, weight in zip(self.atoms, self.weights):
            total += _power(atom, power) * weight.entries
        return HermitianMatrix(total)

    def to_dict(self) -> dict:
        from .verdict import to_jsonable

        return {
            "dim": self.dim,
            "atoms": list(self.atoms),
            "weights": [to_jsonable(w.entries) for w in self.weights],
        }


@dataclass(frozen=True)
class DilationData:
    """E(.) = V* F(.) V with F the spectral measure of diag(lambda_k I_d)."""

    embedding: np.ndarray
    dilated_atoms: np.ndarray
    residuals: list[float] = field(default_factory=list)
    is_isometry: bool = False

    @property
    def dilated_operator(self) -> np.ndarray:
        return np.diag(self.dilated_atoms).astype(complex)

    def compress(self, n: int) -> HermitianMatrix:
        """V* B^n V."""
        V = self.embedding
        powers = np.array([_power(a, n) for a in self.dilated_atoms])
        return HermitianMatrix(V.conj().T @ (powers[:, None] * V))

    def to_dict(self) -> dict:
        from .verdict import to_jsonable

        return {
            "embedding": to_jsonable(self.embedding),
            "dilated_atoms": to_jsonable(self.dilated_atoms),
            "residuals": self.residuals,
            "is_isometry": self.is_isometry,
        }


def _power(atom: float, n: int) -> float:
    # 0^0 = 1 so that T_0 = E(R) when 0 is an atom
    return 1.0 if n == 0 else atom**n


def moments(E: AtomicOVM, count: int, limit: float = MAGNITUDE_LIMIT) -> OperatorSequence:
    """
    Compute T_0, ..., T_count with T_n = sum_k lambda_k^n S_k.

    Args:
        E: Atomic measure or charge
        count: Index of the last moment
        limit: Largest allowed |lambda_k|^count ||S_k||

    Returns:
        The moment sequence of E

    Raises:
        OverflowRisk: If a term would exceed the magnitude limit
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    log_limit = math.log(limit)
    for atom, weight in zip(E.atoms, E.weights):
        norm = weight.norm()
        if norm == 0 or atom == 0 or count == 0:
            continue
        if count * math.log(abs(atom)) + math.log(norm) > log_limit:
            raise OverflowRisk(f"|{atom!r}|^{count} x ||S|| exceeds {limit:.0e}")
    if E.r == 0:
        return OperatorSequence(tuple(HermitianMatrix.zeros(E.dim) for _ in range(count + 1)))
    return OperatorSequence(tuple(E.first_moments(n) for n in range(count + 1)))


def moment_residuals(E: AtomicOVM, seq: OperatorSequence) -> list[float]:
    """Relative Frobenius misfit between the moments of E and each term of seq."""
    produced = moments(E, seq.N)
    residuals = []
    for n in range(len(seq)):
        scale = max(
            seq[n].frobenius(),
            sum(abs(_power(a, n)) * w.frobenius() for a, w in zip(E.atoms, E.weights)),
        )
        residuals.append(relative_residual(produced[n].entries, seq[n].entries, scale=scale))
    return residuals


def is_measure(E: AtomicOVM, eps: float = PSD_EPS) -> Verdict:
    """Positive measure test: every weight is PSD."""
    reports = [psd_check(weight, eps) for weight in E.weights]
    verdict = Verdict(
        name="is_measure",
        passed=all(report.is_psd for report in reports),
        margins={"min_weight_eigenvalue": min((r.min_eigenvalue for r in reports), default=0.0)},
        certificates={"atom_min_eigenvalues": [r.min_eigenvalue for r in reports]},
    )
    for atom, report in zip(E.atoms, reports):
        if not report.is_psd:
            verdict.diagnostics.append(
                f"Weight at atom {atom!r} has eigenvalue {report.min_eigenvalue:.6g}"
            )
    return verdict


def is_semispectral(E: AtomicOVM, tol: float = SEMISPECTRAL_TOL, eps: float = PSD_EPS) -> Verdict:
    """Positive measure with E(R) = I."""
    positivity = is_measure(E, eps)
    deviation = float(np.linalg.norm(E.total_mass.entries - np.eye(E.dim)))
    mass_ok = deviation <= tol * math.sqrt(E.dim)
    verdict = Verdict(
        name="is_semispectral",
        passed=positivity.passed and mass_ok,
        margins={"total_mass_deviation": deviation},
        children=[positivity],
    )
    if not mass_ok:
        verdict.diagnostics.append(f"||E(R) - I||_F = {deviation:.3e}")
    return verdict


def is_spectral(E: AtomicOVM, tol: float = SPECTRAL_TOL) -> Verdict:
    """
    Decide whether a semi-spectral E is projection valued.

    Two characterizations are evaluated: M_1^2 = M_2 for the first two
    moments, and the weights being mutually annihilating projections. The
    certificate `consistent` records whether they agree.

    Raises:
        NotSemiSpectral: If E is not a semi-spectral measure
    """
    semispectral = is_semispectral(E)
    if not semispectral.passed:
        raise NotSemiSpectral("; ".join(semispectral.diagnostics) or "E is not a positive measure")

    M1 = E.first_moments(1).entries
    M2 = E.first_moments(2).entries
    moment_defect = float(np.linalg.norm(M1 @ M1 - M2)) / max(1.0, float(np.linalg.norm(M2)))
    by_moments = moment_defect <= tol

    worst_idempotent = 0.0
    worst_product = 0.0
    for i, Si in enumerate(E.weights):
        S = Si.entries
        scale = max(1.0, Si.frobenius())
        worst_idempotent = max(worst_idempotent, float(np.linalg.norm(S @ S - S)) / scale)
        for Sj in E.weights[i + 1 :]:
            worst_product = max(worst_product, float(np.linalg.norm(S @ Sj.entries)) / scale)
    by_projections = worst_idempotent <= tol and worst_product <= tol

    verdict = Verdict(
        name="is_spectral",
        passed=by_moments and by_projections,
        margins={
            "moment_defect": moment_defect,
            "idempotent_defect": worst_idempotent,
            "product_defect": worst_product,
        },
        certificates={
            "by_moments": by_moments,
            "by_projections": by_projections,
            "consistent": by_moments == by_projections,
        },
        children=[semispectral],
    )
    if by_moments != by_projections:
        verdict.diagnostics.append("M_1^2 = M_2 and the projection test disagree")
    return verdict


def naimark_dilate(E: AtomicOVM, tol: float = DILATION_TOL) -> DilationData:
    """
    Dilate E to the spectral measure of a diagonal operator.

    V stacks the blocks S_k^(1/2); the dilated operator acts as lambda_k on
    block k. Compressions V* B^n V are checked against the moments of E for
    n <= 2r.

    Raises:
        NotMeasure: If a weight is not PSD
        ReconstructionMismatch: If a compression misses its moment
    """
    positivity = is_measure(E)
    if not positivity.passed:
        raise NotMeasure("; ".join(positivity.diagnostics))
    if E.r == 0:
        raise NotMeasure("The zero measure has no dilation")

    V = np.vstack([sqrt_psd(weight).entries for weight in E.weights])
    dilated_atoms = np.repeat(np.asarray(E.atoms, dtype=float), E.dim)
    data = DilationData(embedding=V, dilated_atoms=dilated_atoms)

    expected = moments(E, 2 * E.r)
    residuals = []
    for n in range(len(expected)):
        scale = max(
            expected[n].frobenius(),
            sum(abs(_power(a, n)) * w.frobenius() for a, w in zip(E.atoms, E.weights)),
        )
        residuals.append(relative_residual(data.compress(n).entries, expected[n].entries, scale=scale))
    worst = max(residuals)
    if worst > tol:
        raise ReconstructionMismatch(f"Dilation residual {worst:.3e} exceeds {tol:.1e}")

    isometry = bool(np.allclose(V.conj().T @ V, np.eye(E.dim), atol=SEMISPECTRAL_TOL * E.dim))
    return DilationData(
        embedding=V, dilated_atoms=dilated_atoms, residuals=residuals, is_isometry=isometry
    )


def support(E: AtomicOVM, tol: float = ZERO_WEIGHT_TOL) -> tuple[float, ...]:
    """Atoms carrying a nonzero weight."""
    norms = [weight.norm() for weight in E.weights]
    cutoff = tol * max(1.0, max(norms, default=0.0))
    return tuple(atom for atom, norm in zip(E.atoms, norms) if norm > cutoff)


def restrict_to_support(E: AtomicOVM, tol: float = ZERO_WEIGHT_TOL) -> AtomicOVM:
    kept = set(support(E, tol))
    pairs = [(a, w) for a, w in zip(E.atoms, E.weights) if a in kept]
    return AtomicOVM(tuple(a for a, _ in pairs), tuple(w for _, w in pairs), E.dim)

