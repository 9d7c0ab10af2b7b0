"""Canned examples with their expected verdicts."""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .atomic import AtomicOVM, moments
from .errors import DegenerateBlock, NotFlatAtK
from .linalg import HermitianMatrix
from .moments import OperatorSequence, hamburger_check, local_moment_check, truncate_overflow
from .pair import kimsey_section, kimsey_sequence, pencil_bounds, two_atomic
from .recursive import check_order2_closed_form, solve_recursive
from .sampling import SampleScheme
from .shift import (
    WeightFamily,
    flatness_identity_check,
    propagation_check,
    shift_moments,
    subnormality_check,
)
from .verdict import Verdict

logger = logging.getLogger(__name__)

SEQUENCE = "sequence"
WEIGHTS = "weights"


@dataclass
class Fixture:
    """A payload together with the verdicts it is known to produce."""

    name: str
    kind: str
    payload: OperatorSequence | WeightFamily
    expected: dict[str, Any] = field(default_factory=dict)
    description: str = ""


def bisgaard() -> Fixture:
    """Positive at every vector, yet the block Hankel of order 1 is not positive."""
    terms = [
        np.array([[4.0, 0.0], [0.0, 1.0]]),
        np.array([[0.0, 2.0], [2.0, 0.0]]),
        np.array([[1.0, 0.0], [0.0, 4.0]]),
    ]
    for n in range(3, 9):
        if n % 2:
            terms.append(np.zeros((2, 2)))
        else:
            terms.append(2.0 ** math.factorial(n // 2 + 2) * np.eye(2))
    seq, notes = truncate_overflow(OperatorSequence.from_arrays(terms))
    for note in notes:
        logger.debug(note)
    # Hankel tests read T_0..T_2n, so end on an even index
    seq = seq.prefix(seq.N + 1 - seq.N % 2)
    return Fixture(
        name="bisgaard",
        kind=SEQUENCE,
        payload=seq,
        expected={
            "hamburger_order": 1,
            "hamburger_min_eigenvalue": -1.0,
            "local_orders": [1, 2],
            "random_samples": 1000,
            "last_index": 6,
        },
        description="Locally a moment sequence at every x, not an operator moment sequence",
    )


def kimsey(d: int = 6) -> Fixture:
    """The d-dimensional section of diag(e^(-n) delta_(-n))."""
    return Fixture(
        name="kimsey",
        kind=SEQUENCE,
        payload=kimsey_sequence(d, 4),
        expected={"dimension": d, "alpha": -float(d), "beta": -1.0},
        description="Pencil bound alpha(d) = -d, unbounded as d grows",
    )


def block_shift_example(a: float = 1.0, b: float = 1.0, c: float = 1.0, dim: int = 2) -> Fixture:
    """
    T_n = W* B^n W with B = [[a I, b I], [b I, c I]] and W x = (x, x).

    Raises:
        DegenerateBlock: If (a - c)^2 + b^2 = 0
    """
    if (a - c) ** 2 + b**2 == 0:
        raise DegenerateBlock(f"(a - c)^2 + b^2 = 0 for a={a!r}, b={b!r}, c={c!r}")
    B = np.array([[a, b], [b, c]])
    e = np.ones(2)
    values = [float(e @ np.linalg.matrix_power(B, n) @ e) for n in range(7)]
    discriminant = math.sqrt((a - c) ** 2 + 4 * b**2)
    roots = [((a + c) - discriminant) / 2, ((a + c) + discriminant) / 2]
    return Fixture(
        name="block_shift",
        kind=SEQUENCE,
        payload=OperatorSequence(tuple(HermitianMatrix(v * np.eye(dim)) for v in values)),
        expected={"roots": roots, "cauchy_schwarz_gap": (a - c) ** 2, "parameters": [a, b, c]},
        description="Order-2 recurrence T_{n+2} = (a + c) T_{n+1} - (ac - b^2) T_n",
    )


def order2_example() -> Fixture:
    """Exact moments of a two-atom measure with non-commuting weights."""
    E = AtomicOVM.from_arrays([-1.0, 2.0], [[[2.0, 1.0], [1.0, 1.0]], [[1.0, 0.0], [0.0, 3.0]]])
    return Fixture(
        name="order2",
        kind=SEQUENCE,
        payload=moments(E, 6),
        expected={"order": 2, "atoms": [-1.0, 2.0], "measure": E},
        description="Two atoms, recovered by the closed form and the general solver",
    )


def bergman_shift(length: int = 64) -> Fixture:
    """Scalar weights sqrt((n + 1) / (n + 2)) with Berger measure dt on [0, 1]."""
    weights = [math.sqrt((n + 1) / (n + 2)) for n in range(length)]
    return Fixture(
        name="bergman",
        kind=WEIGHTS,
        payload=WeightFamily.scalar(weights, operator_norm=1.0),
        expected={"subnormal_order": 5, "flat": False},
        description="Subnormal scalar shift with no two equal weights",
    )


def flat_shift(A=None, length: int = 12) -> Fixture:
    """A_k = A for every k."""
    A = np.array([[2.0, 1.0], [1.0, 2.0]]) if A is None else np.asarray(A)
    return Fixture(
        name="flat",
        kind=WEIGHTS,
        payload=WeightFamily.flat(A, length),
        expected={"subnormal_order": 2, "flat_at": 0, "n_max": 4, "identity_residual": 1e-12},
        description="Constant weights: subnormal, flat everywhere",
    )


def stampfli_violation(length: int = 8) -> Fixture:
    """Weights 2, 1, 1, 1, ...: two equal weights after a larger one."""
    return Fixture(
        name="stampfli",
        kind=WEIGHTS,
        payload=WeightFamily.scalar([2.0] + [1.0] * (length - 1)),
        expected={"failing_orders": [1, 2], "flat_at": 1, "first_violation": 0},
        description="Flat from index 1 but not from 0: not subnormal",
    )


FIXTURES: dict[str, Callable[[], Fixture]] = {
    "bisgaard": bisgaard,
    "kimsey": kimsey,
    "block_shift": block_shift_example,
    "order2": order2_example,
    "bergman": bergman_shift,
    "flat": flat_shift,
    "stampfli": stampfli_violation,
}


def _expect(name: str, passed: bool, **evidence) -> Verdict:
    return Verdict(name=name, passed=bool(passed), certificates=evidence)


def _reproduce_bisgaard(fixture: Fixture) -> list[Verdict]:
    seq = fixture.payload
    expected = fixture.expected
    block = hamburger_check(seq, expected["hamburger_order"])
    checks = [
        _expect(
            "hamburger",
            not block.is_psd and abs(block.min_eigenvalue - expected["hamburger_min_eigenvalue"]) <= 1e-10,
            min_eigenvalue=block.min_eigenvalue,
        ),
        _expect("truncation", seq.N == expected["last_index"], last_index=seq.N),
    ]
    scheme = SampleScheme(count=expected["random_samples"], seed=0)
    for order in expected["local_orders"]:
        local = local_moment_check(seq, scheme, order)
        checks.append(_expect(f"local_order_{order}", local.passed, **local.margins))
    return checks


def _reproduce_kimsey(fixture: Fixture) -> list[Verdict]:
    seq = fixture.payload
    bounds = pencil_bounds(seq[0], seq[1])
    E = two_atomic(seq[0], seq[1])
    section = kimsey_section(fixture.expected["dimension"])
    d = fixture.expected["dimension"]
    return [
        _expect("alpha", abs(bounds.alpha - fixture.expected["alpha"]) <= 1e-12 * d, alpha=bounds.alpha),
        _expect("beta", abs(bounds.beta - fixture.expected["beta"]) <= 1e-12, beta=bounds.beta),
        _expect("two_atomic", E.r == (2 if d > 1 else 1), atoms=list(E.atoms)),
        _expect("section", section.passed, alphas=section.certificates["alphas"]),
    ]


def _reproduce_block_shift(fixture: Fixture) -> list[Verdict]:
    seq = fixture.payload
    lambda1, lambda2 = fixture.expected["roots"]
    closed = check_order2_closed_form(seq[0], seq[1], lambda1, lambda2)
    solution = solve_recursive(seq, 2)
    atoms_ok = all(
        min(abs(atom - root) for root in (lambda1, lambda2)) <= 1e-8 * (1 + abs(atom))
        for atom in solution.charge.atoms
    )
    x = np.zeros(seq.dim)
    x[0] = 1.0
    q = [seq[n].quadratic_form(x).real for n in range(3)]
    gap = q[2] * q[0] - q[1] ** 2
    return [
        _expect("closed_form", closed.passed, conditions=closed.certificates["conditions"]),
        _expect("recursive", solution.is_moment_sequence.passed and atoms_ok, atoms=list(solution.charge.atoms)),
        _expect(
            "cauchy_schwarz_gap",
            abs(gap - fixture.expected["cauchy_schwarz_gap"]) <= 1e-9 * max(1.0, abs(gap)),
            gap=gap,
        ),
    ]


def _reproduce_order2(fixture: Fixture) -> list[Verdict]:
    seq = fixture.payload
    lambda1, lambda2 = fixture.expected["atoms"]
    solution = solve_recursive(seq, 3)
    closed = check_order2_closed_form(seq[0], seq[1], lambda1, lambda2)
    measure = fixture.expected["measure"]
    gap = max(
        float(np.linalg.norm(a.entries - b.entries))
        for a, b in zip(solution.charge.weights, measure.weights)
    )
    return [
        _expect("order", solution.fit.order == fixture.expected["order"], order=solution.fit.order),
        _expect("recursive", solution.is_moment_sequence.passed, atoms=list(solution.charge.atoms)),
        _expect("closed_form", closed.passed),
        _expect("weights", gap <= 1e-8, weight_gap=gap),
    ]


def _reproduce_bergman(fixture: Fixture) -> list[Verdict]:
    family = fixture.payload
    verdict = subnormality_check(family, fixture.expected["subnormal_order"])
    try:
        propagation_check(family, 0)
        flat = True
    except NotFlatAtK:
        flat = False
    return [
        _expect("subnormal", verdict.passed, **verdict.margins),
        _expect("not_flat", flat == fixture.expected["flat"]),
    ]


def _reproduce_flat(fixture: Fixture) -> list[Verdict]:
    family = fixture.payload
    expected = fixture.expected
    subnormal = subnormality_check(family, expected["subnormal_order"])
    identity = flatness_identity_check(shift_moments(family), expected["flat_at"], expected["n_max"])
    propagation = propagation_check(family, expected["flat_at"])
    return [
        _expect("subnormal", subnormal.passed, **subnormal.margins),
        _expect(
            "flatness_identity",
            identity.passed and identity.margins["max_residual"] <= expected["identity_residual"],
            **identity.margins,
        ),
        _expect("propagation", propagation.passed),
    ]


def _reproduce_stampfli(fixture: Fixture) -> list[Verdict]:
    family = fixture.payload
    expected = fixture.expected
    checks = []
    for order in expected["failing_orders"]:
        verdict = subnormality_check(family, order)
        checks.append(_expect(f"fails_order_{order}", not verdict.passed, **verdict.margins))
    propagation = propagation_check(family, expected["flat_at"])
    checks.append(
        _expect(
            "propagation_violation",
            propagation.certificates.get("first_violation") == expected["first_violation"],
            first_violation=propagation.certificates.get("first_violation"),
        )
    )
    return checks


_REPRODUCERS: dict[str, Callable[[Fixture], list[Verdict]]] = {
    "bisgaard": _reproduce_bisgaard,
    "kimsey": _reproduce_kimsey,
    "block_shift": _reproduce_block_shift,
    "order2": _reproduce_order2,
    "bergman": _reproduce_bergman,
    "flat": _reproduce_flat,
    "stampfli": _reproduce_stampfli,
}


def reproduce(fixture: Fixture) -> Verdict:
    """Run the operations named by a fixture's expected record and compare."""
    if fixture.name not in _REPRODUCERS:
        raise KeyError(f"No expectations registered for fixture '{fixture.name}'")
    checks = _REPRODUCERS[fixture.name](fixture)
    verdict = Verdict(name=f"reproduce_{fixture.name}", passed=all(c.passed for c in checks), children=checks)
    for check in checks:
        if not check.passed:
            verdict.diagnostics.append(f"{check.name} does not match the expected record")
    return verdict
