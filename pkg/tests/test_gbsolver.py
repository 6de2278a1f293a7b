import math

import numpy as np
import pytest

from relpose import gbsolver
from relpose.exceptions import BasisAnomaly, RankDeficient
from relpose.gbsolver import (
    GENERAL_EXTRA_ROWS,
    GENERAL_MULTIPLIERS,
    REGULAR_MULTIPLIERS,
    assemble_reduced_template,
    build_action_matrix,
    eigensolve_real,
    extract_roots,
    quotient_basis_from_pivots,
    rref,
    rref_conditioned,
    schur_equivalence_check,
)
from relpose.geom import quat_from_rotation, rotation_angle, sigma_from_angle
from relpose.poly import (
    build_f_polynomials,
    build_g_polynomials,
    grevlex_basis,
    grevlex_key,
    reduce_mod_h,
)
from relpose.synth import SceneConfig, generate_scene

# Leading exponents of the ten reduced generating polynomials of the regular
# problem; the expected quotient basis is everything they do not divide.
REGULAR_LEADING_EXPONENTS = [
    (0, 2, 3), (1, 0, 4), (0, 1, 4), (0, 0, 5), (1, 3, 0),
    (0, 4, 0), (1, 2, 1), (0, 3, 1), (1, 1, 2), (2, 0, 0),
]


def regular_instance(seed):
    truth, pairs = generate_scene(SceneConfig(seed=seed), 4)
    theta = rotation_angle(truth.R)
    c = sigma_from_angle(theta)
    return build_f_polynomials(pairs, c), c, quat_from_rotation(truth.R).u


def general_instance(seed):
    truth, pairs = generate_scene(SceneConfig(seed=seed, generalized=True), 5)
    theta = rotation_angle(truth.R)
    c = sigma_from_angle(theta)
    return build_g_polynomials(pairs, c), c, quat_from_rotation(truth.R).u


def regular_template(seed):
    fs, c, u = regular_instance(seed)
    return assemble_reduced_template(fs, REGULAR_MULTIPLIERS, 5, c), c, u


def general_template(seed):
    gs, c, u = general_instance(seed)
    tpl = assemble_reduced_template(gs, GENERAL_MULTIPLIERS, 8, c, extra_rows=GENERAL_EXTRA_ROWS)
    return tpl, c, u


class TestAssemble:
    def test_regular_shape(self):
        tpl, _, _ = regular_template(0)
        assert tpl.matrix.shape == (16, 36)

    def test_general_shape(self):
        tpl, _, _ = general_template(0)
        assert tpl.matrix.shape == (37, 81)

    def test_unit_multiplier_row_is_reduced_generator(self):
        fs, c, _ = regular_instance(1)
        tpl = assemble_reduced_template(fs, REGULAR_MULTIPLIERS, 5, c)
        b5 = grevlex_basis(5)
        embedded = np.zeros(b5.size)
        for m, v in zip(fs[0].basis.monomials, fs[0].coeffs):
            embedded[b5.index[m]] = v
        from relpose.poly import DensePolynomial

        reduced = reduce_mod_h(DensePolynomial(b5, embedded), c)
        assert np.allclose(tpl.matrix[0], reduced.coeffs[b5.alpha2_size :], atol=1e-15)
        assert tpl.row_labels[0] == ((0, 0, 0), 0)

    def test_determinism(self):
        a, _, _ = regular_template(2)
        b, _, _ = regular_template(2)
        assert np.array_equal(a.matrix, b.matrix)


class TestSchurEquivalence:
    @pytest.mark.parametrize("seed", range(5))
    def test_routes_agree(self, seed):
        fs, c, _ = regular_instance(seed)
        assert schur_equivalence_check(fs, c) < 1e-11

    def test_right_angle_instance(self):
        truth, pairs = generate_scene(SceneConfig(seed=6, theta_rad=math.pi / 2), 4)
        c = sigma_from_angle(math.pi / 2)
        fs = build_f_polynomials(pairs, c)
        assert schur_equivalence_check(fs, c) < 1e-11

    def test_spot_entry_formula(self):
        # The entry of a reduced multiplier row at the (multiplier * c^2)
        # column is a fixed four-term combination of the generator's raw
        # coefficients: 2*tau*A[a^4] - tau*A[a^2 c^2] - A[a^2] + A[c^2].
        fs, c, _ = regular_instance(7)
        tpl = assemble_reduced_template(fs, REGULAR_MULTIPLIERS, 5, c)
        b4 = grevlex_basis(4)
        plain = sorted(b4.monomials, key=grevlex_key, reverse=True)
        A = np.zeros((4, 35))
        for r, f in enumerate(fs):
            for m, v in zip(f.basis.monomials, f.coeffs):
                A[r, plain.index(m)] = v
        # 1-indexed positions in the plain descending-grevlex coefficient
        # vector: 1 = a^4, 10 = a^2 c^2, 26 = a^2, 31 = c^2.
        assert plain[0] == (4, 0, 0)
        assert plain[9] == (2, 0, 2)
        assert plain[25] == (2, 0, 0)
        assert plain[30] == (0, 0, 2)
        rem = tpl.basis.remainder_monomials
        for mi, mult in enumerate(REGULAR_MULTIPLIERS):
            for gi in range(4):
                row = mi * 4 + gi
                col = rem.index((mult[0], mult[1], mult[2] + 2))
                expected = (
                    2 * c.tau * A[gi, 0] - c.tau * A[gi, 9] - A[gi, 25] + A[gi, 30]
                )
                assert tpl.matrix[row, col] == pytest.approx(expected, abs=1e-11)
        # The template row for the third multiplier applied to the last
        # generator is row 16 in 1-based counting, as published.
        assert tpl.row_labels[15] == ((0, 0, 1), 3)


class TestRref:
    def test_identity(self):
        red, piv = rref(np.eye(4))
        assert np.array_equal(red, np.eye(4)) and piv == [0, 1, 2, 3]

    def test_generic_regular_instance_pivots_lead(self):
        tpl, _, _ = regular_template(3)
        red, piv = rref(tpl.matrix)
        assert piv == list(range(16))
        assert np.allclose(red[:, :16], np.eye(16), atol=1e-9)

    def test_duplicated_row_is_rank_deficient(self):
        tpl, _, _ = regular_template(4)
        bad = tpl.matrix.copy()
        bad[7] = bad[3]
        with pytest.raises(RankDeficient):
            rref(bad)

    def test_determinism(self):
        tpl, _, _ = regular_template(5)
        r1, p1 = rref(tpl.matrix)
        r2, p2 = rref(tpl.matrix)
        assert np.array_equal(r1, r2) and p1 == p2


class TestRrefConditioned:
    def test_row_space_preserved(self):
        tpl, _, _ = general_template(1)
        rem = tpl.basis.remainder_monomials
        top = tuple(j for j, m in enumerate(rem) if sum(m) == 8)
        keep = frozenset(
            j for j, m in enumerate(rem)
            if m in ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1))
        )
        red, piv = rref_conditioned(tpl.matrix, protected_cols=keep, eliminate_first=top)
        assert len(piv) == 37
        assert set(piv).isdisjoint(keep)
        assert set(top) <= set(piv)
        # the reduced rows reproduce the template through the pivot block
        assert np.max(np.abs(tpl.matrix[:, piv] @ red - tpl.matrix)) < 1e-8

    def test_determinism(self):
        tpl, _, _ = general_template(2)
        r1, p1 = rref_conditioned(tpl.matrix)
        r2, p2 = rref_conditioned(tpl.matrix)
        assert np.array_equal(r1, r2) and p1 == p2


class TestQuotientBasis:
    def test_regular_monomials_match_leading_ideal(self):
        tpl, _, _ = regular_template(8)
        _, piv = rref(tpl.matrix)
        qb = quotient_basis_from_pivots(tpl.basis, piv, expected_size=20)
        b5 = grevlex_basis(5)
        divisible = {
            m
            for m in b5.monomials
            if any(all(m[k] >= lm[k] for k in range(3)) for lm in REGULAR_LEADING_EXPONENTS)
        }
        expected = {m for m in b5.monomials if m not in divisible}
        assert set(qb.monomials) == expected
        assert qb.size == 20

    def test_ascending_order_and_positions(self):
        tpl, _, _ = regular_template(9)
        _, piv = rref(tpl.matrix)
        qb = quotient_basis_from_pivots(tpl.basis, piv)
        keys = [grevlex_key(m) for m in qb.monomials]
        assert keys == sorted(keys)
        assert qb.monomials[qb.pos_one] == (0, 0, 0)
        assert qb.monomials[qb.pos_alpha] == (1, 0, 0)
        assert qb.monomials[qb.pos_beta] == (0, 1, 0)
        assert qb.monomials[qb.pos_gamma] == (0, 0, 1)

    def test_general_size_44(self):
        tpl, _, _ = general_template(3)
        _, piv = rref(tpl.matrix)
        qb = quotient_basis_from_pivots(tpl.basis, piv, expected_size=44)
        assert qb.size == 44

    def test_unexpected_size_raises(self):
        tpl, _, _ = regular_template(10)
        _, piv = rref(tpl.matrix)
        with pytest.raises(BasisAnomaly):
            quotient_basis_from_pivots(tpl.basis, piv, expected_size=44)


class TestActionMatrix:
    def build(self, seed):
        tpl, c, u = regular_template(seed)
        red, piv = rref(tpl.matrix)
        qb = quotient_basis_from_pivots(tpl.basis, piv, expected_size=20)
        return tpl, red, piv, qb, build_action_matrix(red, piv, tpl.basis, qb), u

    def test_shape(self):
        *_, M, _ = self.build(11)
        assert M.shape == (20, 20)

    def test_unit_entry_pattern(self):
        # Published pattern in descending-grevlex indexing; our basis is
        # ascending, so published (i, j) maps to (21 - i, 21 - j), 1-based.
        published = [
            (8, 1), (9, 2), (10, 3), (11, 4), (12, 7), (13, 8), (14, 9),
            (15, 10), (16, 11), (17, 14), (18, 15), (19, 16), (20, 19),
        ]
        *_, M, _ = self.build(12)
        for i, j in published:
            assert M[20 - i, 20 - j] == 1.0

    def test_rows_are_unit_or_copied(self):
        tpl, red, piv, qb, M, _ = self.build(13)
        rem = tpl.basis.remainder_monomials
        pivot_row = {rem[col]: r for r, col in enumerate(piv)}
        n_unit = 0
        for i, m in enumerate(qb.monomials):
            lifted = (m[0], m[1], m[2] + 1)
            if lifted in qb.index:
                n_unit += 1
                assert M[i, qb.index[lifted]] == 1.0
                assert np.count_nonzero(M[i]) == 1
            else:
                r = pivot_row[lifted]
                assert np.allclose(M[i], -red[r, qb.template_cols])
        assert n_unit == 13  # 20 basis monomials, 7 hit pivot leading monomials


class TestEigensolve:
    def test_diagonal(self):
        pairs = eigensolve_real(np.diag([1.0, 2.0, 3.0]))
        assert sorted(w for w, _ in pairs) == [1.0, 2.0, 3.0]
        for _, v in pairs:
            assert np.linalg.norm(v) == pytest.approx(1.0)

    def test_pure_rotation_has_no_real_pairs(self):
        assert eigensolve_real(np.array([[0.0, -1.0], [1.0, 0.0]])) == []

    def test_ground_truth_gamma_among_eigenvalues(self):
        tpl, c, u = regular_template(7)
        red, piv = rref(tpl.matrix)
        qb = quotient_basis_from_pivots(tpl.basis, piv, expected_size=20)
        M = build_action_matrix(red, piv, tpl.basis, qb)
        values = [w for w, _ in eigensolve_real(M)]
        assert min(abs(w - u[2]) for w in values) < 1e-9


class TestExtractRoots:
    def full_pipeline(self, seed):
        tpl, c, u = regular_template(seed)
        red, piv = rref(tpl.matrix)
        qb = quotient_basis_from_pivots(tpl.basis, piv, expected_size=20)
        M = build_action_matrix(red, piv, tpl.basis, qb)
        return qb, eigensolve_real(M), u

    def test_recovers_ground_truth(self):
        qb, eig, u = self.full_pipeline(11)
        ext = extract_roots(eig, qb)
        assert min(np.linalg.norm(r - u) for r in ext.roots) < 1e-9

    def test_at_most_matrix_size_roots(self):
        qb, eig, _ = self.full_pipeline(16)
        ext = extract_roots(eig, qb)
        assert len(ext.roots) <= 20

    def test_drops_solutions_at_infinity(self):
        qb, eig, _ = self.full_pipeline(17)
        v = np.zeros(20)
        v[qb.pos_gamma] = 1.0
        ext = extract_roots([(0.5, v)], qb)
        assert ext.roots == () and ext.n_dropped_at_infinity == 1

    def test_drops_inconsistent_products(self):
        qb, eig, _ = self.full_pipeline(18)
        v = np.zeros(20)
        v[qb.pos_one] = 1.0
        v[qb.pos_alpha] = 0.1
        v[qb.pos_beta] = 0.2
        v[qb.pos_gamma] = 0.3
        # degree-two entries left at zero contradict the degree-one entries
        ext = extract_roots([(0.3, v)], qb)
        assert ext.roots == () and ext.n_dropped_inconsistent == 1


class TestRootResiduals:
    @pytest.mark.parametrize("seed", range(4))
    def test_regular_roots_satisfy_system(self, seed):
        from relpose.geom import rectify_quaternion
        from relpose.solver_reg4 import _rotation_candidates

        truth, pairs = generate_scene(SceneConfig(seed=seed), 4)
        theta = rotation_angle(truth.R)
        c = sigma_from_angle(theta)
        fs = build_f_polynomials(pairs, c)
        ext = _rotation_candidates(pairs, c, 1e-10)
        scale = max(f.max_abs() for f in fs)
        for u in ext.roots:
            q = rectify_quaternion(np.asarray(u), c)
            assert max(abs(f(q.u)) for f in fs) < 1e-8 * scale
            assert abs(q.u @ q.u + c.tau) < 1e-8
