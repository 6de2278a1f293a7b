"""Elimination-template engine for the two polynomial systems.

The pipeline is generic over the generators: multiply them by a fixed set of
monomials, reduce every product modulo the sphere constraint, stack the
remainder-block coefficients into a template matrix, row-reduce it, read the
quotient-ring basis off the non-pivot columns, build the multiplication
matrix for gamma, and recover candidate roots from its eigenvectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BasisAnomaly,
    DegreeOverflow,
    EigenFailure,
    RankDeficient,
    UnreachableMonomial,
)
from .geom import RotationConstraint
from .poly import (
    DensePolynomial,
    GrevlexBasis,
    Monomial,
    grevlex_basis,
    grevlex_key,
    monomial_poly,
    poly_mul,
    reduce_mod_h,
    sphere_constraint_poly,
)

DEFAULT_PIVOT_TOL = 1e-10
DEFAULT_IMAG_TOL = 1e-6
DEFAULT_ROOT_TOL = 1e-6

# Row plans of the two problems: multiplier monomials applied to every
# generator, plus individually listed extra rows (multiplier, generator index).
REGULAR_MULTIPLIERS: tuple[Monomial, ...] = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))
REGULAR_TARGET_DEGREE = 5
REGULAR_TEMPLATE_SHAPE = (16, 36)
REGULAR_BASIS_SIZE = 20

GENERAL_MULTIPLIERS: tuple[Monomial, ...] = (
    (0, 2, 0),
    (1, 0, 1),
    (0, 1, 1),
    (0, 0, 2),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
)
GENERAL_EXTRA_ROWS: tuple[tuple[Monomial, int], ...] = (((0, 0, 0), 0), ((0, 0, 0), 1))
GENERAL_TARGET_DEGREE = 8
GENERAL_TEMPLATE_SHAPE = (37, 81)
GENERAL_BASIS_SIZE = 44


@dataclass(frozen=True, eq=False)
class EliminationTemplate:
    """Reduced coefficient matrix over the remainder-block monomials."""

    basis: GrevlexBasis
    matrix: np.ndarray
    row_labels: tuple[tuple[Monomial, int], ...]

    @property
    def columns(self) -> tuple[Monomial, ...]:
        return self.basis.remainder_monomials


def assemble_reduced_template(
    generators: list[DensePolynomial],
    multipliers: tuple[Monomial, ...],
    target_degree: int,
    c: RotationConstraint,
    extra_rows: tuple[tuple[Monomial, int], ...] = (),
) -> EliminationTemplate:
    """Stack reduced multiplier-times-generator rows over the remainder block."""
    basis = grevlex_basis(target_degree)
    plan = [(m, gi) for m in multipliers for gi in range(len(generators))]
    plan.extend(extra_rows)
    rows = []
    for m, gi in plan:
        g = generators[gi]
        if sum(m) + g.basis.max_degree > target_degree:
            raise DegreeOverflow(
                f"multiplier {m} on a degree-{g.basis.max_degree} generator exceeds degree {target_degree}"
            )
        prod = poly_mul(monomial_poly(m), g, basis)
        rows.append(reduce_mod_h(prod, c).coeffs[basis.alpha2_size :])
    return EliminationTemplate(basis=basis, matrix=np.array(rows), row_labels=tuple(plan))


def schur_equivalence_check(generators: list[DensePolynomial], c: RotationConstraint) -> float:
    """Maximum deviation between the two elimination routes of the 16x36 template.

    The explicit route builds the full 36x56 coefficient matrix (twenty rows of
    sphere-constraint multiples on top of the sixteen generator rows),
    partitions it against the alpha^2-divisible block and forms the Schur
    complement X - W U^{-1} V.  The modular route is
    :func:`assemble_reduced_template`.  The two are algebraically identical.
    """
    if len(generators) != 4:
        raise ValueError("the explicit block elimination is defined for the 4-generator problem")
    b5 = grevlex_basis(REGULAR_TARGET_DEGREE)
    h = sphere_constraint_poly(c)
    cube_monomials = sorted(
        ((a, b, cc) for a in range(4) for b in range(4 - a) for cc in range(4 - a - b)),
        key=grevlex_key,
        reverse=True,
    )
    h_rows = [poly_mul(monomial_poly(m), h, b5).coeffs for m in cube_monomials]
    f_rows = [
        poly_mul(monomial_poly(m), g, b5).coeffs for m in REGULAR_MULTIPLIERS for g in generators
    ]
    ahat = np.array(h_rows + f_rows)
    k = b5.alpha2_size
    U, V = ahat[:k, :k], ahat[:k, k:]
    W, X = ahat[k:, :k], ahat[k:, k:]
    if np.max(np.abs(np.tril(U, -1))) != 0.0 or np.max(np.abs(np.diag(U) - 1.0)) != 0.0:
        raise AssertionError("constraint-multiple block is not unit upper triangular")
    b_schur = X - W @ np.linalg.solve(U, V)
    b_mod = assemble_reduced_template(generators, REGULAR_MULTIPLIERS, REGULAR_TARGET_DEGREE, c).matrix
    return float(np.max(np.abs(b_schur - b_mod)))


def rref(B: np.ndarray, pivot_tol: float = DEFAULT_PIVOT_TOL) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan reduction with partial pivoting, columns left to right.

    A pivot is accepted only when its magnitude exceeds ``pivot_tol`` times the
    max-norm of its row.  Raises when fewer pivots than rows are found.
    """
    A = np.array(B, dtype=float)
    n_rows, n_cols = A.shape
    # Pivot magnitudes are judged against each row's incoming scale so that
    # rows annihilated by the elimination cannot supply pivots.
    scales = np.max(np.abs(A), axis=1)
    pivots: list[int] = []
    r = 0
    for col in range(n_cols):
        if r == n_rows:
            break
        sub = np.abs(A[r:, col])
        cand = int(np.argmax(sub)) + r
        if scales[cand] == 0.0 or abs(A[cand, col]) <= pivot_tol * scales[cand]:
            continue
        if cand != r:
            A[[r, cand]] = A[[cand, r]]
            scales[[r, cand]] = scales[[cand, r]]
        A[r] /= A[r, col]
        others = np.concatenate([np.arange(r), np.arange(r + 1, n_rows)])
        A[others] -= np.outer(A[others, col], A[r])
        pivots.append(col)
        r += 1
    if r < n_rows:
        raise RankDeficient(f"only {r} pivots found for {n_rows} rows")
    return A, pivots


def rref_conditioned(
    B: np.ndarray,
    pivot_tol: float = DEFAULT_PIVOT_TOL,
    protected_cols: frozenset[int] = frozenset(),
    eliminate_first: tuple[int, ...] = (),
) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan reduction with conditioning-driven pivot columns.

    The left-to-right column order of :func:`rref` forces the grevlex-largest
    monomials to become pivots, and on the degree-8 generalized template that
    pivot block is nearly singular (condition numbers around 1e7 on
    benchmark-geometry data), which inflates the action matrix to norm ~1e5 and
    ruins its eigenvectors.  This variant instead picks, at every step, the
    remaining entry of largest magnitude (complete pivoting), which keeps the
    reduced rows O(1).  ``eliminate_first`` columns are pivoted before all
    others (the top-degree monomials must be pivots or multiplication by gamma
    would leave the template), and ``protected_cols`` are never pivoted so the
    root-reading monomials stay in the quotient basis.  Fully deterministic.
    """
    A = np.array(B, dtype=float)
    n_rows, n_cols = A.shape
    scales = np.max(np.abs(A), axis=1)
    pivots: list[int] = []
    r = 0

    def eliminate(col: int) -> bool:
        nonlocal r
        sub = np.abs(A[r:, col])
        cand = int(np.argmax(sub)) + r
        if scales[cand] == 0.0 or abs(A[cand, col]) <= pivot_tol * scales[cand]:
            return False
        if cand != r:
            A[[r, cand]] = A[[cand, r]]
            scales[[r, cand]] = scales[[cand, r]]
        A[r] /= A[r, col]
        others = np.concatenate([np.arange(r), np.arange(r + 1, n_rows)])
        A[others] -= np.outer(A[others, col], A[r])
        pivots.append(col)
        r += 1
        return True

    first = list(eliminate_first)
    while first and r < n_rows:
        sub = np.abs(A[r:, :][:, first])
        col = first[int(np.unravel_index(np.argmax(sub), sub.shape)[1])]
        if not eliminate(col):
            break
        first.remove(col)
    remaining = [
        c for c in range(n_cols)
        if c not in pivots and c not in protected_cols and c not in first
    ]
    while r < n_rows and remaining:
        sub = np.abs(A[r:, :][:, remaining])
        col = remaining[int(np.unravel_index(np.argmax(sub), sub.shape)[1])]
        if not eliminate(col):
            break
        remaining.remove(col)
    if r < n_rows:
        raise RankDeficient(f"only {r} pivots found for {n_rows} rows")
    return A, pivots


@dataclass(frozen=True, eq=False)
class QuotientBasis:
    """Standard monomials of the quotient ring, ascending grevlex."""

    monomials: tuple[Monomial, ...]
    template_cols: np.ndarray
    index: dict[Monomial, int]
    pos_one: int
    pos_alpha: int
    pos_beta: int
    pos_gamma: int

    @property
    def size(self) -> int:
        return len(self.monomials)


def quotient_basis_from_pivots(
    basis: GrevlexBasis, pivots: list[int], expected_size: int | None = None
) -> QuotientBasis:
    """Non-pivot template columns as standard monomials, ascending grevlex."""
    remainder = basis.remainder_monomials
    pivot_set = set(pivots)
    standard = [(remainder[j], j) for j in range(len(remainder)) if j not in pivot_set]
    standard.sort(key=lambda mc: grevlex_key(mc[0]))
    monomials = tuple(m for m, _ in standard)
    index = {m: i for i, m in enumerate(monomials)}
    if expected_size is not None and len(monomials) != expected_size:
        raise BasisAnomaly(f"quotient basis has size {len(monomials)}, expected {expected_size}")
    for needed in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)):
        if needed not in index:
            raise BasisAnomaly(f"quotient basis is missing monomial {needed}")
    return QuotientBasis(
        monomials=monomials,
        template_cols=np.array([col for _, col in standard], dtype=np.int64),
        index=index,
        pos_one=index[(0, 0, 0)],
        pos_alpha=index[(1, 0, 0)],
        pos_beta=index[(0, 1, 0)],
        pos_gamma=index[(0, 0, 1)],
    )


def build_action_matrix(
    reduced: np.ndarray, pivots: list[int], basis: GrevlexBasis, qb: QuotientBasis
) -> np.ndarray:
    """Multiplication-by-gamma matrix on the quotient-ring basis.

    Each row is either a unit row (gamma times the monomial stays standard) or
    the negated coefficient row of the pivot polynomial whose leading monomial
    it hits.
    """
    remainder = basis.remainder_monomials
    pivot_row = {remainder[col]: r for r, col in enumerate(pivots)}
    n = qb.size
    M = np.zeros((n, n))
    for i, (a, b, c) in enumerate(qb.monomials):
        m = (a, b, c + 1)
        if m in qb.index:
            M[i, qb.index[m]] = 1.0
        elif m in pivot_row:
            M[i, :] = -reduced[pivot_row[m], qb.template_cols]
        else:
            raise UnreachableMonomial(f"gamma * {qb.monomials[i]} = {m} is outside the template")
    return M


def eigensolve_real(
    M: np.ndarray, eps_im: float = DEFAULT_IMAG_TOL
) -> list[tuple[float, np.ndarray]]:
    """Eigenpairs of a real square matrix whose eigenvalue is (near-)real.

    Eigenvectors are returned as real unit vectors; the complex phase is fixed
    by the largest-magnitude entry before the real part is taken.
    """
    M = np.asarray(M, dtype=float)
    try:
        w, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    out: list[tuple[float, np.ndarray]] = []
    for k in range(len(w)):
        if abs(w[k].imag) > eps_im * (1.0 + abs(w[k].real)):
            continue
        v = V[:, k]
        v = v / v[int(np.argmax(np.abs(v)))]
        vr = np.real(v)
        out.append((float(w[k].real), vr / np.linalg.norm(vr)))
    return out


@dataclass(frozen=True)
class ExtractedRoots:
    """Recovered root vectors and counts of candidates dropped by the filters."""

    roots: tuple[np.ndarray, ...]
    n_dropped_at_infinity: int
    n_dropped_inconsistent: int


def _product_checks(qb: QuotientBasis) -> list[tuple[int, int, int]]:
    """Indices (m, x, y) with basis monomial m equal to the product of the
    degree-one basis monomials x and y."""
    ones = {
        (1, 0, 0): qb.pos_alpha,
        (0, 1, 0): qb.pos_beta,
        (0, 0, 1): qb.pos_gamma,
    }
    checks = []
    for m, i in qb.index.items():
        if sum(m) != 2:
            continue
        first = next(k for k in range(3) if m[k] > 0)
        x = tuple(1 if k == first else 0 for k in range(3))
        y = (m[0] - x[0], m[1] - x[1], m[2] - x[2])
        if y in ones:
            checks.append((i, ones[x], ones[y]))
    return checks


def extract_roots(
    pairs: list[tuple[float, np.ndarray]],
    qb: QuotientBasis,
    eps_root: float = DEFAULT_ROOT_TOL,
) -> ExtractedRoots:
    """Read candidate (alpha, beta, gamma) vectors off near-real eigenvectors.

    Candidates whose eigenvector cannot be normalized at the monomial 1, whose
    gamma entry disagrees with the eigenvalue, or whose degree-two entries are
    not products of the degree-one entries are dropped.
    """
    checks = _product_checks(qb)
    roots: list[np.ndarray] = []
    n_inf = 0
    n_incons = 0
    for lam, v in pairs:
        v1 = v[qb.pos_one]
        if abs(v1) <= 1e-10 * float(np.max(np.abs(v))):
            n_inf += 1
            continue
        v = v / v1
        if abs(lam - v[qb.pos_gamma]) > eps_root:
            n_incons += 1
            continue
        if any(abs(v[m] - v[x] * v[y]) > eps_root for m, x, y in checks):
            n_incons += 1
            continue
        roots.append(np.array([v[qb.pos_alpha], v[qb.pos_beta], v[qb.pos_gamma]]))
    return ExtractedRoots(
        roots=tuple(roots),
        n_dropped_at_infinity=n_inf,
        n_dropped_inconsistent=n_incons,
    )
