"""Minimal 5-point solver for calibrated generalized cameras with a known
relative rotation angle, including metric translation recovery, plus the
point-to-ray scoring function used by the robust estimator."""

from __future__ import annotations

import numpy as np

from .exceptions import (
    BasisAnomaly,
    DegenerateConfiguration,
    DegenerateInput,
    NearZeroVector,
    RankDeficient,
    ScaleUnobservable,
    SkewDegenerate,
    UnreachableMonomial,
)
from .gbsolver import (
    DEFAULT_PIVOT_TOL,
    GENERAL_BASIS_SIZE,
    GENERAL_EXTRA_ROWS,
    GENERAL_MULTIPLIERS,
    GENERAL_TARGET_DEGREE,
    GENERAL_TEMPLATE_SHAPE,
    assemble_reduced_template,
    build_action_matrix,
    eigensolve_real,
    extract_roots,
    quotient_basis_from_pivots,
    rref_conditioned,
)
from .geom import (
    PluckerPair,
    RelativePose,
    quat_to_rotation,
    rectify_quaternion,
    sigma_from_angle,
)
from .poly import build_g_polynomials

# All moments below this norm mean a purely central configuration.
CENTRAL_MOMENT_EPS = 1e-12

# Depth-system singular values: scale is unobservable when the second singular
# value collapses relative to the first, or when the null vector has no
# inhomogeneous component.
SCALE_RANK_EPS = 1e-10
SCALE_COMPONENT_EPS = 1e-10


def _rotation_candidates(pairs, c, pivot_tol):
    gs = build_g_polynomials(pairs, c)
    template = assemble_reduced_template(
        gs, GENERAL_MULTIPLIERS, GENERAL_TARGET_DEGREE, c, extra_rows=GENERAL_EXTRA_ROWS
    )
    assert template.matrix.shape == GENERAL_TEMPLATE_SHAPE
    # Pivot columns are chosen for conditioning rather than left to right: the
    # top-degree monomials must be pivots, the root-reading monomials must
    # stay in the basis, everything else goes to the largest remaining entry.
    rem = template.basis.remainder_monomials
    top = tuple(j for j, m in enumerate(rem) if sum(m) == GENERAL_TARGET_DEGREE)
    keep = frozenset(
        j for j, m in enumerate(rem) if m in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))
    )
    reduced, pivots = rref_conditioned(
        template.matrix, pivot_tol, protected_cols=keep, eliminate_first=top
    )
    qb = quotient_basis_from_pivots(template.basis, pivots, expected_size=GENERAL_BASIS_SIZE)
    action = build_action_matrix(reduced, pivots, template.basis, qb)
    assert action.shape == (GENERAL_BASIS_SIZE, GENERAL_BASIS_SIZE)
    return extract_roots(eigensolve_real(action), qb)


def _depth_rows(pairs: list[PluckerPair], R: np.ndarray) -> np.ndarray:
    """Stacked constraint rows on (lambda, mu, 1) for anchor 0 under rotation R."""
    pi = pairs[0]
    e1 = np.cross(pi.m1, pi.q1)
    e2 = np.cross(pi.m2, pi.q2)
    rows = []
    for pj in pairs[1:]:
        p1 = np.cross(pi.q1, pj.q1)
        p2 = np.cross(pi.q2, pj.q2)
        a = float(pj.q2 @ R @ p1)
        b = float(p2 @ R @ pj.q1)
        w = float(
            pj.q2 @ R @ np.cross(e1, pj.q1)
            + np.cross(e2, pj.q2) @ R @ pj.q1
            + pj.q2 @ R @ pj.m1
            + pj.m2 @ R @ pj.q1
        )
        rows.append((a, b, w))
    return np.array(rows)


def solve_gen5pt_angle(
    pairs: list[PluckerPair],
    theta: float,
    *,
    anchor: int = 0,
    pivot_tol: float = DEFAULT_PIVOT_TOL,
) -> list[RelativePose]:
    """All relative poses consistent with five Pluecker pairs and the rotation angle.

    Returns up to 44 poses with metric translation.  For each rotation
    candidate the depth pair of the anchor correspondence is recovered as the
    null vector of the stacked constraint rows, scaled so its inhomogeneous
    component is one; candidates whose scale is unobservable are dropped.
    """
    if len(pairs) != 5:
        raise ValueError(f"exactly 5 Pluecker pairs required, got {len(pairs)}")
    c = sigma_from_angle(theta)
    ordered = list(pairs[anchor % 5 :]) + list(pairs[: anchor % 5])

    if max(float(np.linalg.norm(m)) for p in ordered for m in (p.m1, p.m2)) < CENTRAL_MOMENT_EPS:
        raise ScaleUnobservable(
            "all ray moments vanish: a central configuration carries no translation scale"
        )

    if c.tau == 0.0:
        roots = [np.zeros(3)]
    else:
        try:
            extraction = _rotation_candidates(ordered, c, pivot_tol)
        except (DegenerateInput, RankDeficient, BasisAnomaly, UnreachableMonomial) as exc:
            raise DegenerateConfiguration(str(exc)) from exc
        roots = list(extraction.roots)
    root_count = len(roots)

    anchor_pair = ordered[0]
    e1 = np.cross(anchor_pair.m1, anchor_pair.q1)
    e2 = np.cross(anchor_pair.m2, anchor_pair.q2)
    poses: list[RelativePose] = []
    n_scale_dropped = 0
    for u in roots:
        try:
            quat = rectify_quaternion(u, c)
        except NearZeroVector:
            continue
        R = quat_to_rotation(quat)
        rows = _depth_rows(ordered, R)
        _, s, vt = np.linalg.svd(rows)
        if s[1] <= SCALE_RANK_EPS * s[0]:
            n_scale_dropped += 1
            continue
        v = vt[-1]
        if abs(v[2]) < SCALE_COMPONENT_EPS:
            n_scale_dropped += 1
            continue
        lam = float(v[0] / v[2])
        mu = float(v[1] / v[2])
        t1 = e1 + lam * anchor_pair.q1
        t2 = e2 + mu * anchor_pair.q2
        poses.append(
            RelativePose(
                R=R,
                t=t2 - R @ t1,
                quat=quat,
                depths=(lam, mu),
                root_count=root_count,
            )
        )
    if not poses:
        if n_scale_dropped:
            raise ScaleUnobservable(
                "translation scale is unobservable for every rotation candidate"
            )
        raise DegenerateConfiguration("no usable rotation candidates survived filtering")
    return poses


def _rays_in_common_frame(pose: RelativePose, pair: PluckerPair):
    o1 = np.cross(pair.m1, pair.q1)
    d1 = pair.q1
    o2 = pose.R.T @ (np.cross(pair.m2, pair.q2) - pose.t)
    d2 = pose.R.T @ pair.q2
    return o1, d1, o2, d2


def ray_point_errors(pose: RelativePose, pairs: list[PluckerPair]) -> np.ndarray:
    """Vectorized point-to-ray RMS distances; +inf for parallel-ray pairs."""
    n = len(pairs)
    o1 = np.empty((n, 3))
    d1 = np.empty((n, 3))
    o2 = np.empty((n, 3))
    d2 = np.empty((n, 3))
    for i, pair in enumerate(pairs):
        o1[i], d1[i], o2[i], d2[i] = _rays_in_common_frame(pose, pair)
    eye = np.eye(3)
    proj1 = eye[None, :, :] - d1[:, :, None] * d1[:, None, :]
    proj2 = eye[None, :, :] - d2[:, :, None] * d2[:, None, :]
    gram = np.einsum("ij,ij->i", d1, d2)
    parallel = 1.0 - gram**2 <= 1e-12
    A = proj1 + proj2
    rhs = np.einsum("ijk,ik->ij", proj1, o1) + np.einsum("ijk,ik->ij", proj2, o2)
    A_safe = np.where(parallel[:, None, None], eye[None, :, :], A)
    X = np.linalg.solve(A_safe, rhs[:, :, None])[:, :, 0]
    r1 = np.einsum("ijk,ik->ij", proj1, X - o1)
    r2 = np.einsum("ijk,ik->ij", proj2, X - o2)
    rms = np.sqrt(
        (np.einsum("ij,ij->i", r1, r1) + np.einsum("ij,ij->i", r2, r2)) / 2.0
    )
    return np.where(parallel, np.inf, rms)


def ray_point_error(pose: RelativePose, pair: PluckerPair) -> float:
    """RMS of the two point-to-ray distances after triangulating the point
    that minimizes the summed squared distance to both rays."""
    err = float(ray_point_errors(pose, [pair])[0])
    if not np.isfinite(err):
        raise SkewDegenerate("rays are parallel; the correspondence cannot be triangulated")
    return err
