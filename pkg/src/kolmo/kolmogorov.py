"""Admissibility of derivative-norm tuples on the AM and MM classes.

Builds the uniquely determined comparison splines, decides admissibility of a
norm tuple by the recursive trichotomy over trailing sub-tuples, and exposes
the extremal spline family whose norm tuples exhaust the admissible set.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

from .core import (
    Atom,
    ExponentVector,
    FunctionFamily,
    MomentVector,
    NormVector,
    Representation,
    moment_coordinates,
)
from .errors import (
    DomainError,
    DomainExitError,
    NotAttainableError,
    NotBoundaryError,
    NotInteriorError,
    NumericalFailureError,
    UnsupportedSystemError,
)
from .oracle import t_max_heuristic
from .representations import (
    ACCEPT_TOL,
    _Workspace,
    _ascending_indices,
    interlace_hints,
    solve_structure,
)
from .splines import IdealSpline, evaluate, norms, spline_from_representation

#: Relative band inside which the recursion's "=" comparison is declared.
EQUALITY_BAND = 1e-7

#: Relative tolerance at which a witness must reproduce the norm tuple.
WITNESS_TOL = 1e-6


class Status(Enum):
    NOT_ADMISSIBLE = "not_admissible"
    ADMISSIBLE_BOUNDARY = "admissible_boundary"
    ADMISSIBLE_INTERIOR = "admissible_interior"


@dataclass(frozen=True)
class LevelRecord:
    """One recursion level: exponents, outcome, and the compared norms."""

    exponents: tuple[int, ...]
    classification: str
    lhs: float | None = None
    rhs: float | None = None


@dataclass(frozen=True)
class AdmissibilityResult:
    status: Status
    witness: IdealSpline | None
    trace: tuple[LevelRecord, ...]


def _require_positive(M: NormVector):
    if any(v <= 0 for v in M.values):
        raise DomainError(f"norm components must be strictly positive: {M.values}")


def interior_spline(
    M: NormVector, tol: float = ACCEPT_TOL, init_seed: int = 0
) -> IdealSpline:
    """The unique spline with d/2 knots and no constant matching 2m norms."""
    if M.d % 2 != 0:
        raise DomainError(f"interior spline needs an even norm count, got {M.d}")
    _require_positive(M)
    c = moment_coordinates(M)
    try:
        rep = solve_structure(c, M.d // 2, False, tol=tol, init_seed=init_seed)
    except DomainExitError as exc:
        raise NotInteriorError(
            "the knot-count d/2 system has no positive solution; the tuple is "
            "not interior"
        ) from exc
    return spline_from_representation(rep, M.family)


def boundary_spline(M: NormVector, tol: float = ACCEPT_TOL) -> IdealSpline:
    """Minimal spline with at most floor((d-1)/2) knots matching all d norms."""
    _require_positive(M)
    c = moment_coordinates(M)
    k1_zero = M.exponents.exponents[0] == 0
    ws = _Workspace(c)
    for _twice, n_pos, with_zero in _ascending_indices(M.d, k1_zero, M.d - 1):
        try:
            rep = solve_structure(c, n_pos, with_zero, tol=tol, workspace=ws)
        except (NumericalFailureError, DomainError):
            continue
        return spline_from_representation(rep, M.family)
    raise NotBoundaryError(
        "no spline with at most floor((d-1)/2) knots matches the tuple; it is "
        "not a boundary point"
    )


def canonical_spline(
    M: NormVector, a_star: float, tol: float = ACCEPT_TOL
) -> IdealSpline:
    """Spline with (d+1)/2 knots, one pinned at a_star, matching an odd tuple."""
    if a_star <= 0:
        raise DomainError(f"prescribed knot must be positive, got {a_star}")
    if M.d % 2 != 1:
        raise DomainError(f"canonical spline needs an odd norm count, got {M.d}")
    _require_positive(M)
    c = moment_coordinates(M)
    u_star = 1.0 / a_star
    principal = _check_pin_coincidence(c, u_star, tol)
    hints = interlace_hints(principal, u_star) if principal is not None else None
    rep = solve_structure(
        c, (M.d + 1) // 2, False, pinned=(u_star,), tol=tol, free_hint=hints
    )
    return spline_from_representation(rep, M.family)


def _check_pin_coincidence(c: MomentVector, u_star: float, tol: float):
    """Reject pins that collide with a root of the knot-minimal structure.

    Returns that minimal (principal) structure when it exists, for use as an
    interlacing reference, and ``None`` otherwise.
    """
    d = c.d
    if d % 2 == 1 and c.exponents.exponents[0] != 0:
        return None  # no square unpinned structure exists; rely on the solve
    n_pos, with_zero = (d // 2, False) if d % 2 == 0 else ((d - 1) // 2, True)
    try:
        principal = solve_structure(c, n_pos, with_zero, tol=tol)
    except (NumericalFailureError, DomainError):
        return None
    theta = t_max_heuristic(c)
    for atom in principal.atoms:
        if atom.node > 0 and abs(atom.node - u_star) <= 1e-8 * theta:
            from .errors import PinnedNodeCoincidenceError

            raise PinnedNodeCoincidenceError(
                f"prescribed knot {1.0 / u_star} coincides with a root of the "
                "minimal structure; the pinned system degenerates"
            )
    return principal


def matching_spline(M: NormVector, tol: float = ACCEPT_TOL) -> IdealSpline:
    """The uniquely determined spline attaining an even-count norm tuple.

    Searches structures by ascending knot index, so a boundary tuple yields
    its thin spline and an interior tuple yields the d/2-knot spline.
    """
    if M.d % 2 != 0:
        raise DomainError(f"matching spline needs an even norm count, got {M.d}")
    _require_positive(M)
    c = moment_coordinates(M)
    k1_zero = M.exponents.exponents[0] == 0
    ws = _Workspace(c)
    for _twice, n_pos, with_zero in _ascending_indices(M.d, k1_zero, M.d):
        try:
            rep = solve_structure(c, n_pos, with_zero, tol=tol, workspace=ws)
        except (NumericalFailureError, DomainError):
            continue
        return spline_from_representation(rep, M.family)
    raise NotAttainableError("no ideal spline attains the tuple")


def decide_admissible(M: NormVector, tol: float = ACCEPT_TOL) -> AdmissibilityResult:
    """Trichotomy for a norm tuple with k_d = r, with a realizing witness."""
    k = M.exponents
    if k.exponents[-1] != k.r:
        raise UnsupportedSystemError(
            f"the decision procedure requires k_d = r, got k_d={k.exponents[-1]}, "
            f"r={k.r}"
        )
    _require_positive(M)
    trace: list[LevelRecord] = []
    status = _decide(M, tol, trace)
    witness = None
    if status is not Status.NOT_ADMISSIBLE:
        witness = _build_witness(M, status, tol)
        _check_witness(witness, M)
    return AdmissibilityResult(status, witness, tuple(trace))


def _decide(M: NormVector, tol: float, trace: list[LevelRecord]) -> Status:
    d = M.d
    k = M.exponents.exponents
    if d <= 2:
        # One or two strictly positive norms are always attained by a single
        # knot: two free parameters fit any positive pair exactly.
        trace.append(LevelRecord(k, "interior (base case)"))
        return Status.ADMISSIBLE_INTERIOR
    sub = _decide(M.drop_first(), tol, trace)
    if sub is Status.NOT_ADMISSIBLE:
        trace.append(LevelRecord(k, "not_admissible (from sublevel)"))
        return Status.NOT_ADMISSIBLE
    cmp_M = M.drop_first() if d % 2 == 1 else M.drop_first_and_last()
    phi = matching_spline(cmp_M, tol)
    lhs = M.values[0]
    rhs = evaluate(phi, 0.0, k[0])
    band = EQUALITY_BAND * max(lhs, rhs)
    if sub is Status.ADMISSIBLE_INTERIOR:
        if lhs > rhs + band:
            status = Status.ADMISSIBLE_INTERIOR
        elif lhs >= rhs - band:
            status = Status.ADMISSIBLE_BOUNDARY
        else:
            status = Status.NOT_ADMISSIBLE
    else:
        if k[0] > 0:
            admissible = abs(lhs - rhs) <= band
        else:
            admissible = lhs >= rhs - band
        status = Status.ADMISSIBLE_BOUNDARY if admissible else Status.NOT_ADMISSIBLE
    trace.append(LevelRecord(k, status.value, lhs, rhs))
    return status


def _build_witness(M: NormVector, status: Status, tol: float) -> IdealSpline:
    if status is Status.ADMISSIBLE_INTERIOR:
        return _attain_interior(M, tol)
    try:
        return boundary_spline(M, tol)
    except NotBoundaryError:
        # Even-count equality edge: fall back to the full ascending search.
        return matching_spline(M, tol) if M.d % 2 == 0 else _attain_interior(M, tol)


def _attain_interior(M: NormVector, tol: float) -> IdealSpline:
    """A spline realizing an interior norm tuple."""
    d = M.d
    c = moment_coordinates(M)
    k = M.exponents.exponents
    if d == 1:
        rep = Representation((Atom(1.0, c.values[0]),))
    elif d == 2:
        u = (c.values[1] / c.values[0]) ** (1.0 / (k[1] - k[0]))
        rep = Representation((Atom(u, c.values[0] / u ** k[0]),))
    elif d % 2 == 0:
        rep = solve_structure(c, d // 2, False, tol=tol)
    elif k[0] == 0:
        rep = solve_structure(c, (d - 1) // 2, True, tol=tol)
    else:
        # Odd count without exponent 0: square the system by pinning one root
        # near (then progressively away from) the estimated largest atom.
        theta = t_max_heuristic(c)
        last_exc: Exception | None = None
        for scale in (0.2, 0.05, 0.8, 0.0125, 3.2):
            try:
                rep = solve_structure(
                    c, (d + 1) // 2, False, pinned=(scale * theta,), tol=tol
                )
                break
            except (NumericalFailureError, DomainError) as exc:
                last_exc = exc
        else:
            raise NumericalFailureError(
                "no pinned-root structure realized the interior tuple"
            ) from last_exc
    return spline_from_representation(rep, M.family)


def _check_witness(spline: IdealSpline, M: NormVector):
    got = norms(spline, M.exponents)
    for g, want in zip(got.values, M.values):
        if abs(g - want) > WITNESS_TOL * max(abs(want), abs(g)):
            raise NumericalFailureError(
                f"witness norms {got.values} do not reproduce {M.values}"
            )


def extremal_family_member(
    family: FunctionFamily,
    k: ExponentVector,
    knots: tuple[float, ...],
    weights: tuple[float, ...],
    constant: float = 0.0,
) -> IdealSpline:
    """Member of the extremal family for the system k: floor(d/2) knots.

    Its norm tuple is admissible by construction; for even d the constant is
    redundant and a nonzero value is accepted but flagged with a warning.
    """
    if family.r != k.r:
        raise DomainError(f"family order {family.r} != exponent order {k.r}")
    m = k.d // 2
    if len(knots) != m or len(weights) != m:
        raise DomainError(
            f"extremal family members for d={k.d} have exactly {m} knots, "
            f"got {len(knots)}"
        )
    if k.d % 2 == 0 and constant > 0:
        warnings.warn(
            "the constant is redundant for even-length exponent systems and "
            "may be set to zero",
            stacklevel=2,
        )
    return IdealSpline(family, knots, weights, constant)


__all__ = [
    "AdmissibilityResult",
    "LevelRecord",
    "Status",
    "boundary_spline",
    "canonical_spline",
    "decide_admissible",
    "extremal_family_member",
    "interior_spline",
    "matching_spline",
]
