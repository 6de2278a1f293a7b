"""Polynomial arithmetic over the quaternion unknowns (alpha, beta, gamma).

Coefficient vectors are dense and aligned to a fixed monomial basis.  A basis
of maximal total degree d lists every monomial of degree <= d in descending
graded reverse lexicographic order (alpha > beta > gamma), with the monomials
divisible by alpha^2 placed first.  That partition is what the elimination
step operates on: reducing a polynomial modulo the sphere constraint

    h = alpha^2 + beta^2 + gamma^2 + tau,   tau = sigma^2 - 1

repeatedly substitutes alpha^2 <- -(beta^2 + gamma^2 + tau) until only the
non-divisible remainder block carries coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DegenerateInput, DegreeOverflow
from .geom import BearingPair, PluckerPair, RotationConstraint

Monomial = tuple[int, int, int]

# Coincident rays are detected on cross-product norms below this.
COINCIDENT_RAY_EPS = 1e-12


def grevlex_key(m: Monomial) -> tuple[int, int, int, int]:
    """Sort key that increases with the graded reverse lexicographic order."""
    a, b, c = m
    return (a + b + c, -c, -b, -a)


def grevlex_compare(m1: Monomial, m2: Monomial) -> int:
    """+1 if ``m1`` is grevlex-greater than ``m2``, -1 if smaller, 0 if equal."""
    k1, k2 = grevlex_key(m1), grevlex_key(m2)
    return (k1 > k2) - (k1 < k2)


class GrevlexBasis:
    """Monomials of total degree <= ``max_degree``, alpha^2-divisible block first."""

    def __init__(self, max_degree: int):
        if max_degree < 0:
            raise ValueError("max_degree must be non-negative")
        self.max_degree = max_degree
        mons = [
            (a, b, c)
            for a in range(max_degree + 1)
            for b in range(max_degree + 1 - a)
            for c in range(max_degree + 1 - a - b)
        ]
        mons.sort(key=grevlex_key, reverse=True)
        alpha2 = [m for m in mons if m[0] >= 2]
        remainder = [m for m in mons if m[0] < 2]
        self.monomials: tuple[Monomial, ...] = tuple(alpha2 + remainder)
        self.alpha2_size = len(alpha2)
        self.size = len(self.monomials)
        self.index: dict[Monomial, int] = {m: i for i, m in enumerate(self.monomials)}
        self.exponents = np.array(self.monomials, dtype=np.int64).reshape(self.size, 3)
        # Substitution plan: higher alpha-degree first so every write lands on
        # a monomial that has not been processed yet.
        steps = []
        for m in sorted(alpha2, key=lambda m: -m[0]):
            a, b, c = m
            steps.append(
                (
                    self.index[m],
                    self.index[(a - 2, b + 2, c)],
                    self.index[(a - 2, b, c + 2)],
                    self.index[(a - 2, b, c)],
                )
            )
        self._reduction_steps = tuple(steps)

    @property
    def remainder_monomials(self) -> tuple[Monomial, ...]:
        return self.monomials[self.alpha2_size :]

    def __repr__(self) -> str:  # pragma: no cover
        return f"GrevlexBasis(max_degree={self.max_degree}, size={self.size})"


@lru_cache(maxsize=None)
def grevlex_basis(max_degree: int) -> GrevlexBasis:
    return GrevlexBasis(max_degree)


@dataclass(frozen=True, eq=False)
class DensePolynomial:
    """Coefficient vector aligned to a :class:`GrevlexBasis`."""

    basis: GrevlexBasis
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.shape != (self.basis.size,):
            raise ValueError(
                f"coefficient vector length {coeffs.shape} does not match basis size {self.basis.size}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, u) -> float:
        u = np.asarray(u, dtype=float)
        powers = np.prod(u[None, :] ** self.basis.exponents, axis=1)
        return float(powers @ self.coeffs)

    def __add__(self, other: "DensePolynomial") -> "DensePolynomial":
        self._check_same_basis(other)
        return DensePolynomial(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other: "DensePolynomial") -> "DensePolynomial":
        self._check_same_basis(other)
        return DensePolynomial(self.basis, self.coeffs - other.coeffs)

    def __neg__(self) -> "DensePolynomial":
        return DensePolynomial(self.basis, -self.coeffs)

    def __mul__(self, scalar: float) -> "DensePolynomial":
        return DensePolynomial(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def coefficient(self, m: Monomial) -> float:
        return float(self.coeffs[self.basis.index[m]])

    def _check_same_basis(self, other: "DensePolynomial") -> None:
        if other.basis is not self.basis:
            raise ValueError("polynomials live on different bases")


def monomial_poly(m: Monomial) -> DensePolynomial:
    """The monomial ``m`` as a one-hot polynomial on the basis of its degree."""
    basis = grevlex_basis(sum(m))
    coeffs = np.zeros(basis.size)
    coeffs[basis.index[m]] = 1.0
    return DensePolynomial(basis, coeffs)


def embed(p: DensePolynomial, out_basis: GrevlexBasis) -> DensePolynomial:
    """Re-express ``p`` on a basis of equal or higher degree."""
    if p.basis.max_degree > out_basis.max_degree:
        raise DegreeOverflow("cannot embed into a smaller basis")
    coeffs = np.zeros(out_basis.size)
    for m, c in zip(p.basis.monomials, p.coeffs):
        coeffs[out_basis.index[m]] = c
    return DensePolynomial(out_basis, coeffs)


_MUL_TABLES: dict[tuple[int, int, int], np.ndarray] = {}


def _mul_table(d1: int, d2: int, dout: int) -> np.ndarray:
    table = _MUL_TABLES.get((d1, d2, dout))
    if table is None:
        b1, b2, bout = grevlex_basis(d1), grevlex_basis(d2), grevlex_basis(dout)
        table = np.empty((b1.size, b2.size), dtype=np.int64)
        for i, mi in enumerate(b1.monomials):
            for j, mj in enumerate(b2.monomials):
                table[i, j] = bout.index[(mi[0] + mj[0], mi[1] + mj[1], mi[2] + mj[2])]
        _MUL_TABLES[(d1, d2, dout)] = table
    return table


def poly_mul(p: DensePolynomial, q: DensePolynomial, out_basis: GrevlexBasis) -> DensePolynomial:
    """Exact coefficient convolution of ``p * q`` on ``out_basis``."""
    if p.basis.max_degree + q.basis.max_degree > out_basis.max_degree:
        raise DegreeOverflow(
            f"degree {p.basis.max_degree} * degree {q.basis.max_degree} exceeds basis degree "
            f"{out_basis.max_degree}"
        )
    table = _mul_table(p.basis.max_degree, q.basis.max_degree, out_basis.max_degree)
    out = np.zeros(out_basis.size)
    np.add.at(out, table.ravel(), np.outer(p.coeffs, q.coeffs).ravel())
    return DensePolynomial(out_basis, out)


def sphere_constraint_poly(c: RotationConstraint) -> DensePolynomial:
    """The quadratic ``alpha^2 + beta^2 + gamma^2 + tau``."""
    basis = grevlex_basis(2)
    coeffs = np.zeros(basis.size)
    coeffs[basis.index[(2, 0, 0)]] = 1.0
    coeffs[basis.index[(0, 2, 0)]] = 1.0
    coeffs[basis.index[(0, 0, 2)]] = 1.0
    coeffs[basis.index[(0, 0, 0)]] = c.tau
    return DensePolynomial(basis, coeffs)


def reduce_mod_h(p: DensePolynomial, c: RotationConstraint) -> DensePolynomial:
    """Normal form of ``p`` modulo the sphere constraint.

    Substitutes ``alpha^2 <- -(beta^2 + gamma^2 + tau)`` until no monomial is
    divisible by ``alpha^2``; the result is supported on the remainder block
    and agrees with ``p`` on the constraint sphere.
    """
    out = p.coeffs.copy()
    tau = c.tau
    for src, ib, ic, it in p.basis._reduction_steps:
        v = out[src]
        if v != 0.0:
            out[ib] -= v
            out[ic] -= v
            out[it] -= tau * v
            out[src] = 0.0
    return DensePolynomial(p.basis, out)


def rotation_bilinear_form(a, b, c: RotationConstraint) -> DensePolynomial:
    """The quadratic polynomial ``b^T R a`` in (alpha, beta, gamma).

    With the rotation written as ``(2 sigma^2 - 1) I + 2 (u u^T - sigma [u]x)``
    the coefficients are: constant ``(2 sigma^2 - 1)(a.b)``, linear
    ``-2 sigma (a x b)``, and quadratic terms from ``2 (b.u)(u.a)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    basis = grevlex_basis(2)
    coeffs = np.zeros(basis.size)
    coeffs[basis.index[(0, 0, 0)]] = (2.0 * c.sigma * c.sigma - 1.0) * float(a @ b)
    lin = -2.0 * c.sigma * np.cross(a, b)
    coeffs[basis.index[(1, 0, 0)]] = lin[0]
    coeffs[basis.index[(0, 1, 0)]] = lin[1]
    coeffs[basis.index[(0, 0, 1)]] = lin[2]
    coeffs[basis.index[(2, 0, 0)]] = 2.0 * b[0] * a[0]
    coeffs[basis.index[(0, 2, 0)]] = 2.0 * b[1] * a[1]
    coeffs[basis.index[(0, 0, 2)]] = 2.0 * b[2] * a[2]
    coeffs[basis.index[(1, 1, 0)]] = 2.0 * (b[0] * a[1] + b[1] * a[0])
    coeffs[basis.index[(1, 0, 1)]] = 2.0 * (b[0] * a[2] + b[2] * a[0])
    coeffs[basis.index[(0, 1, 1)]] = 2.0 * (b[1] * a[2] + b[2] * a[1])
    return DensePolynomial(basis, coeffs)


@dataclass(frozen=True, eq=False)
class FMatrixSpec:
    """2x2 matrix of quadratics tying the anchor depth pair to two other
    correspondences of a central-camera problem."""

    anchor: int
    j: int
    k: int
    entries: tuple[tuple[DensePolynomial, DensePolynomial], tuple[DensePolynomial, DensePolynomial]]

    def evaluate(self, u) -> np.ndarray:
        return np.array([[e(u) for e in row] for row in self.entries])

    def det(self) -> DensePolynomial:
        b4 = grevlex_basis(4)
        (f11, f12), (f21, f22) = self.entries
        return poly_mul(f11, f22, b4) - poly_mul(f12, f21, b4)


def f_matrix_spec(pairs: list[BearingPair], i: int, j: int, k: int, c: RotationConstraint) -> FMatrixSpec:
    """Depth-elimination matrix for anchor ``i`` and free correspondences ``j, k``."""

    def row(jj: int) -> tuple[DensePolynomial, DensePolynomial]:
        p1 = np.cross(pairs[i].q1, pairs[jj].q1)
        p2 = np.cross(pairs[i].q2, pairs[jj].q2)
        return (
            rotation_bilinear_form(p1, pairs[jj].q2, c),
            rotation_bilinear_form(pairs[jj].q1, p2, c),
        )

    return FMatrixSpec(anchor=i, j=j, k=k, entries=(row(j), row(k)))


def build_f_polynomials(pairs: list[BearingPair], c: RotationConstraint) -> list[DensePolynomial]:
    """The four quartic determinant constraints of the 4-point problem.

    The cyclic anchor pattern (2,3,4), (3,4,1), (4,1,2), (1,2,3) makes the set
    symmetric under relabelling of the four correspondences.
    """
    if len(pairs) != 4:
        raise ValueError("exactly 4 bearing pairs required")
    for i in range(4):
        for j in range(i + 1, 4):
            for qa, qb, view in (
                (pairs[i].q1, pairs[j].q1, "view 1"),
                (pairs[i].q2, pairs[j].q2, "view 2"),
            ):
                if np.linalg.norm(np.cross(qa, qb)) < COINCIDENT_RAY_EPS:
                    raise DegenerateInput(
                        f"rays {i} and {j} coincide in {view}; correspondences must be distinct"
                    )
    triples = [(1, 2, 3), (2, 3, 0), (3, 0, 1), (0, 1, 2)]
    return [f_matrix_spec(pairs, i, j, k, c).det() for i, j, k in triples]


@dataclass(frozen=True, eq=False)
class GMatrixSpec:
    """3x3 matrix of quadratics tying the anchor depth pair of a generalized
    problem to three other correspondences; rows act on (lambda, mu, 1)."""

    anchor: int
    j: int
    k: int
    l: int
    rows: tuple[tuple[DensePolynomial, DensePolynomial, DensePolynomial], ...]

    def evaluate(self, u) -> np.ndarray:
        return np.array([[e(u) for e in row] for row in self.rows])

    def det(self) -> DensePolynomial:
        b4 = grevlex_basis(4)
        b6 = grevlex_basis(6)
        (a1, b1, w1), (a2, b2, w2), (a3, b3, w3) = self.rows
        m1 = poly_mul(b2, w3, b4) - poly_mul(w2, b3, b4)
        m2 = poly_mul(a2, w3, b4) - poly_mul(w2, a3, b4)
        m3 = poly_mul(a2, b3, b4) - poly_mul(b2, a3, b4)
        return poly_mul(a1, m1, b6) - poly_mul(b1, m2, b6) + poly_mul(w1, m3, b6)


def g_constraint_row(
    pairs: list[PluckerPair], i: int, j: int, c: RotationConstraint
) -> tuple[DensePolynomial, DensePolynomial, DensePolynomial]:
    """Generalized epipolar constraint of correspondence ``j`` under the
    anchor-``i`` translation parametrization, collected against (lambda, mu, 1)."""
    pi, pj = pairs[i], pairs[j]
    p1 = np.cross(pi.q1, pj.q1)
    p2 = np.cross(pi.q2, pj.q2)
    a = rotation_bilinear_form(p1, pj.q2, c)
    b = rotation_bilinear_form(pj.q1, p2, c)
    e1 = np.cross(pi.m1, pi.q1)
    e2 = np.cross(pi.m2, pi.q2)
    w = (
        rotation_bilinear_form(np.cross(e1, pj.q1), pj.q2, c)
        + rotation_bilinear_form(pj.q1, np.cross(e2, pj.q2), c)
        + rotation_bilinear_form(pj.m1, pj.q2, c)
        + rotation_bilinear_form(pj.q1, pj.m2, c)
    )
    return a, b, w


def g_matrix_spec(
    pairs: list[PluckerPair], i: int, j: int, k: int, l: int, c: RotationConstraint
) -> GMatrixSpec:
    rows = tuple(g_constraint_row(pairs, i, jj, c) for jj in (j, k, l))
    return GMatrixSpec(anchor=i, j=j, k=k, l=l, rows=rows)


def build_g_polynomials(pairs: list[PluckerPair], c: RotationConstraint) -> list[DensePolynomial]:
    """The five sextic determinant constraints of the generalized 5-point problem."""
    if len(pairs) != 5:
        raise ValueError("exactly 5 Pluecker pairs required")
    quadruples = [(1, 2, 3, 4), (2, 3, 4, 0), (3, 4, 0, 1), (4, 0, 1, 2), (0, 1, 2, 3)]
    out = []
    for i, j, k, l in quadruples:
        g = g_matrix_spec(pairs, i, j, k, l, c).det()
        if g.max_abs() < 1e-12:
            raise DegenerateInput(
                "a determinant constraint collapsed to zero; the ray configuration is degenerate"
            )
        out.append(g)
    return out
