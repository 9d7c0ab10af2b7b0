"""Operator sequences, block and localized Hankel tests, support radius and Carleman diagnostics."""

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InsufficientMoments, NonRealQuadraticForm, NotUnitVector
from .linalg import (
    HERMITIAN_TOL,
    PSD_EPS,
    RANK_TOL,
    HermitianMatrix,
    PsdReport,
    as_array,
    hermitize,
    inv_sqrt_psd,
    op_norm,
    psd_check,
)
from .sampling import SampleScheme
from .verdict import Verdict

logger = logging.getLogger(__name__)

MAGNITUDE_LIMIT = 1e150
UNIT_TOL = 1e-12
IMAG_TOL = 1e-12


@dataclass(frozen=True)
class OperatorSequence:
    """The prefix (T_0, ..., T_N) of an operator sequence on C^dim."""

    terms: tuple[HermitianMatrix, ...]

    def __post_init__(self):
        terms = tuple(t if isinstance(t, HermitianMatrix) else HermitianMatrix(t) for t in self.terms)
        if not terms:
            raise ValueError("An operator sequence needs at least T_0")
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise ValueError(f"All terms must share one dimension, got {sorted(dims)}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_arrays(cls, arrays: Iterable, tol: float = HERMITIAN_TOL) -> "OperatorSequence":
        """Build from raw arrays, rejecting matrices that are not Hermitian within tol."""
        return cls(tuple(hermitize(np.atleast_2d(a), tol) for a in arrays))

    @classmethod
    def scalar(cls, values: Iterable[float]) -> "OperatorSequence":
        """A 1 x 1 sequence from scalar moments."""
        return cls(tuple(HermitianMatrix([[v]]) for v in values))

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    @property
    def N(self) -> int:
        """Index of the last available term."""
        return len(self.terms) - 1

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, n: int) -> HermitianMatrix:
        return self.terms[n]

    def stacked(self) -> np.ndarray:
        """Array of shape (N + 1, dim, dim)."""
        return np.stack([t.entries for t in self.terms])

    def prefix(self, count: int) -> "OperatorSequence":
        """The first `count` terms."""
        return OperatorSequence(self.terms[:count])

    def norms(self) -> np.ndarray:
        return np.array([op_norm(t) for t in self.terms])


@dataclass(frozen=True)
class BlockHankel:
    """The (n + 1) x (n + 1) block matrix with block (i, j) = T_{i+j}."""

    order: int
    dim: int
    flattened: HermitianMatrix

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.dim
        return self.flattened.entries[i * d : (i + 1) * d, j * d : (j + 1) * d]

    def quadratic_form(self, vectors: np.ndarray) -> float:
        """Sum over i, j of <T_{i+j} x_i, x_j> for the stacked (n + 1, dim) vectors."""
        stacked = np.asarray(vectors, dtype=complex).reshape(-1)
        return float(np.vdot(stacked, self.flattened.entries @ stacked).real)


@dataclass(frozen=True)
class LocalizedSequence:
    """The scalar sequence s_n = <T_n x, x> for a unit vector x."""

    vector: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class ScalarHankel:
    order: int
    matrix: np.ndarray


@dataclass
class CarlemanDiagnostic:
    """Partial sums of sum_n ||T_2n||^(-1/2n) with a growth classification.

    Divergence cannot be decided from a prefix; the classification only
    describes how the available terms behave.
    """

    indices: list[int]
    terms: list[float]
    partial_sums: list[float]
    skipped: list[int] = field(default_factory=list)
    growth_rate: float = 0.0
    decay_exponent: float | None = None
    classification: str = "undetermined"

    def to_dict(self) -> dict:
        return {
            "indices": self.indices,
            "terms": self.terms,
            "partial_sums": self.partial_sums,
            "skipped": self.skipped,
            "growth_rate": self.growth_rate,
            "decay_exponent": self.decay_exponent,
            "classification": self.classification,
        }


def _require(seq: OperatorSequence, last_index: int, what: str):
    if last_index > seq.N:
        raise InsufficientMoments(f"{what} needs T_0..T_{last_index}, sequence ends at T_{seq.N}")


def _assemble(seq: OperatorSequence, n: int, offset: int = 0) -> np.ndarray:
    return np.block([[seq[i + j + offset].entries for j in range(n + 1)] for i in range(n + 1)])


def block_hankel(seq: OperatorSequence, n: int) -> BlockHankel:
    """Block Hankel matrix of order n (needs 2n <= N)."""
    if n < 0:
        raise ValueError("order must be non-negative")
    _require(seq, 2 * n, f"Block Hankel of order {n}")
    return BlockHankel(order=n, dim=seq.dim, flattened=HermitianMatrix(_assemble(seq, n)))


def _worst(reports: dict[str, PsdReport]) -> PsdReport:
    """Combine reports: the one closest to (or furthest past) rejection decides."""
    return min(reports.values(), key=lambda report: report.margin)


def hamburger_check(seq: OperatorSequence, n: int, eps: float = PSD_EPS) -> PsdReport:
    """Positivity of the block Hankel matrix of order n."""
    return psd_check(block_hankel(seq, n).flattened, eps)


def hausdorff_check(seq: OperatorSequence, n: int, eps: float = PSD_EPS) -> PsdReport:
    """Support in [-1, 1]: block Hankel and the blocks T_{i+j} - T_{i+j+2} both positive."""
    _require(seq, 2 * n + 2, f"Hausdorff test of order {n}")
    stacked = seq.stacked()
    differences = OperatorSequence(tuple(stacked[k] - stacked[k + 2] for k in range(2 * n + 1)))
    return _worst(
        {
            "hankel": hamburger_check(seq, n, eps),
            "localized": hamburger_check(differences, n, eps),
        }
    )


def stieltjes_check(seq: OperatorSequence, n: int, eps: float = PSD_EPS) -> PsdReport:
    """Support in [0, inf): block Hankel and the shifted block Hankel both positive."""
    _require(seq, 2 * n + 1, f"Stieltjes test of order {n}")
    shifted = HermitianMatrix(_assemble(seq, n, offset=1))
    return _worst({"hankel": hamburger_check(seq, n, eps), "shifted": psd_check(shifted, eps)})


def localize(seq: OperatorSequence, x) -> LocalizedSequence:
    """The scalar sequence <T_n x, x>."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.shape[0] != seq.dim:
        raise ValueError(f"Vector has length {x.shape[0]}, expected {seq.dim}")
    norm = float(np.linalg.norm(x))
    if abs(norm - 1.0) > UNIT_TOL:
        raise NotUnitVector(f"||x|| = {norm!r} is not 1")
    values = np.einsum("i,nij,j->n", x.conj(), seq.stacked(), x)
    scales = seq.norms()
    for n, (value, scale) in enumerate(zip(values, scales)):
        if abs(value.imag) > IMAG_TOL * max(scale, 1.0):
            raise NonRealQuadraticForm(f"<T_{n} x, x> has imaginary part {value.imag:.3e}")
    return LocalizedSequence(vector=x, values=values.real.copy())


def scalar_hankel(ls: LocalizedSequence, n: int) -> ScalarHankel:
    """The (n + 1) x (n + 1) Hankel matrix (s_{i+j})."""
    values = np.asarray(ls.values, dtype=float)
    if 2 * n >= len(values):
        raise InsufficientMoments(f"Hankel of order {n} needs {2 * n + 1} values, got {len(values)}")
    return ScalarHankel(order=n, matrix=scipy.linalg.hankel(values[: n + 1], values[n : 2 * n + 1]))


def local_moment_check(
    seq: OperatorSequence, scheme: SampleScheme, n: int, eps: float = PSD_EPS
) -> Verdict:
    """
    Check that <T x, x> passes the scalar Hankel test of order n for every sampled x.

    Args:
        seq: Operator sequence with 2n <= N
        scheme: Localizing vectors to sample
        n: Hankel order
        eps: Relative PSD tolerance

    Returns:
        Verdict whose certificates name the worst vector and its smallest eigenvalue

    Raises:
        InsufficientMoments: If 2n > N
        ValueError: If the scheme yields no vectors
    """
    _require(seq, 2 * n, f"Local Hankel test of order {n}")
    vectors = scheme.generate(seq.dim)
    if not len(vectors):
        raise ValueError("The sample scheme produced no vectors")
    worst = None
    failures = 0
    for index, x in enumerate(vectors):
        report = psd_check(scalar_hankel(localize(seq, x), n).matrix, eps)
        if not report.is_psd:
            failures += 1
        key = (report.margin, index)
        if worst is None or key < worst[0]:
            worst = (key, x, report)

    _, worst_vector, worst_report = worst
    verdict = Verdict(
        name="local_moment",
        passed=failures == 0,
        margins={
            "worst_min_eigenvalue": worst_report.min_eigenvalue,
            "worst_margin": worst_report.margin,
        },
        certificates={
            "order": n,
            "samples": len(vectors),
            "failures": failures,
            "worst_vector": worst_vector,
        },
    )
    if failures:
        verdict.diagnostics.append(f"{failures} of {len(vectors)} sampled Hankels are not PSD")
    return verdict


def support_radius(seq: OperatorSequence) -> float:
    """
    Estimate the support radius L = lim ||T_2n||^(1/2n) from the tail of the prefix.

    The estimate is (||T_2m|| / ||T_2j||)^(1/(2(m - j))) between the middle and
    the end of the available even indices. The mass factor cancels in the
    quotient, so a finite prefix is not biased by ||T_0||^(1/2n).
    """
    _require(seq, 4, "Support radius")
    norms = seq.norms()
    last = seq.N // 2
    first = last - last // 2
    if norms[2 * last] == 0.0:
        return 0.0
    if norms[2 * first] == 0.0:
        # not a moment sequence; fall back to the plain root
        return float(norms[2 * last] ** (1.0 / (2 * last)))
    return float((norms[2 * last] / norms[2 * first]) ** (1.0 / (2 * (last - first))))


def carleman_partial_sums(seq: OperatorSequence) -> CarlemanDiagnostic:
    """Partial sums of the Carleman series over the available even moments."""
    _require(seq, 2, "Carleman diagnostic")
    norms = seq.norms()
    indices, terms, partial, skipped = [], [], [], []
    running = 0.0
    for k in range(1, seq.N // 2 + 1):
        norm = norms[2 * k]
        if norm == 0:
            skipped.append(2 * k)
            continue
        term = norm ** (-1.0 / (2 * k))
        running += term
        indices.append(k)
        terms.append(float(term))
        partial.append(float(running))

    diagnostic = CarlemanDiagnostic(indices=indices, terms=terms, partial_sums=partial, skipped=skipped)
    if skipped:
        logger.debug("Carleman terms skipped at zero moments %s", skipped)
    if len(terms) >= 3:
        tail = terms[len(terms) // 2 :]
        diagnostic.growth_rate = float(np.mean(tail))
        slope = np.polyfit(np.log(indices), np.log(terms), 1)[0]
        diagnostic.decay_exponent = float(slope)
        if slope >= -0.25:
            diagnostic.classification = "linear"
        elif slope >= -1.25:
            diagnostic.classification = "sublinear"
        else:
            diagnostic.classification = "stalled"
    elif terms:
        diagnostic.growth_rate = float(np.mean(terms))
    return diagnostic


def normalize(seq: OperatorSequence, rank_tol: float = RANK_TOL) -> OperatorSequence:
    """The sequence T_0^(-1/2) T_n T_0^(-1/2)."""
    root = inv_sqrt_psd(seq[0], rank_tol).entries
    return OperatorSequence(tuple(HermitianMatrix(root @ t.entries @ root) for t in seq.terms))


def truncate_overflow(
    seq: OperatorSequence, limit: float = MAGNITUDE_LIMIT
) -> tuple[OperatorSequence, list[str]]:
    """
    Drop the tail of a sequence from the first term whose magnitude is unsafe.

    Norms and quadratic forms square the entries, so terms above `limit`
    (default 1e150) or with non-finite entries end the analysable prefix.
    """
    for n, term in enumerate(seq.terms):
        entries = as_array(term)
        if not np.all(np.isfinite(entries)) or float(np.max(np.abs(entries))) > limit:
            if n == 0:
                raise InsufficientMoments("T_0 is outside the safe magnitude range")
            message = f"OverflowRisk: analysis truncated at T_{n - 1} (|T_{n}| exceeds {limit:.0e})"
            logger.debug(message)
            return seq.prefix(n), [message]
    return seq, []
