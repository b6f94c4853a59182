import math
from itertools import combinations

import numpy as np
import pytest

from isoplete.diagnostics import (
    coherence_condition_holds,
    column_rank_deficiency,
    diagnose,
    gamma_1d,
    gamma_2d,
    gamma_pair,
    is_k_isomeric,
    is_omega_isomeric,
    is_pair_isomeric,
    min_isomeric_k,
    projection_gap,
    sufficient_fraction,
    witness_nonidentifiability,
)
from isoplete.errors import BudgetExceededError, EmptyLineError, InvalidInputError, UndefinedQuantityError
from isoplete.forecasting import convolution_matrix, sine_series
from isoplete.instances import ill_conditioned_instance, near_all_ones_instance, single_entry_instance
from isoplete.linalg import coherence, skinny_svd
from isoplete.sampling import SamplingSet, gen_uniform_mask, mask_from_convolution

# hand-computed for [[1, 10/9], [9/10, 1]]: column space u ~ [1, 0.9], |u|^2 = 1.81
GAMMA_FIRST_ROW = 1 / 1.81
GAMMA_NEAR_ALL_ONES = 0.81 / 1.81


def _brute_k_isomeric(M, k):
    r = np.linalg.matrix_rank(M)
    return all(np.linalg.matrix_rank(M[list(s)]) == r for s in combinations(range(M.shape[0]), k))


class TestKIsomeric:
    def test_zero_rows_break_1_isomerism(self):
        M = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
        res = is_k_isomeric(M, 1)
        assert not res and res.certain

    def test_full_row_set(self):
        M = np.random.default_rng(0).standard_normal((5, 3))
        assert is_k_isomeric(M, 5)

    def test_sign_pattern_matrix(self):
        H = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        assert not is_k_isomeric(H, 2)
        assert is_k_isomeric(H, 3)

    def test_min_k_generic(self):
        M = np.random.default_rng(1).standard_normal((6, 2))
        assert min_isomeric_k(M) == 2
        assert all(_brute_k_isomeric(M, k) == bool(is_k_isomeric(M, k)) for k in range(1, 7))

    def test_min_k_single_row(self):
        M = np.zeros((5, 3))
        M[2] = [1.0, 2.0, 3.0]
        assert min_isomeric_k(M) == 5

    def test_min_k_identity(self):
        assert min_isomeric_k(np.eye(3)) == 3

    def test_budget(self):
        M = np.random.default_rng(2).standard_normal((30, 2))
        with pytest.raises(BudgetExceededError):
            is_k_isomeric(M, 15, budget=1000)
        res = is_k_isomeric(M, 15, mode="randomized", trials=200, seed=0)
        assert res.isomeric and not res.certain

    def test_randomized_false_is_certain(self):
        M = np.zeros((6, 2))
        M[0] = [1.0, 0.0]
        M[1] = [0.0, 1.0]
        res = is_k_isomeric(M, 3, mode="randomized", trials=500, seed=1)
        assert not res.isomeric and res.certain

    def test_bad_k(self):
        with pytest.raises(InvalidInputError):
            is_k_isomeric(np.eye(3), 0)

    def test_monotone_in_k(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            M = rng.standard_normal((7, 2)) * (rng.random((7, 1)) < 0.7)
            flags = [bool(is_k_isomeric(M, k)) for k in range(1, 8)] if np.any(M) else []
            first = flags.index(True) if True in flags else len(flags)
            assert all(flags[first:])


class TestOmegaIsomeric:
    def test_single_entry_instance(self):
        L, omega = single_entry_instance()
        assert is_omega_isomeric(L, omega)
        assert is_pair_isomeric(L, omega)

    def test_identity_one_row_observed(self):
        omega = SamplingSet.from_pairs(2, 2, [(0, 0), (0, 1)])
        assert not is_omega_isomeric(np.eye(2), omega)

    def test_full_set(self):
        M = np.random.default_rng(4).standard_normal((4, 3))
        assert is_omega_isomeric(M, SamplingSet.full(4, 6))

    def test_near_all_ones(self):
        L, omega = near_all_ones_instance()
        assert is_pair_isomeric(L, omega)

    def test_identity_diagonal(self):
        assert not is_pair_isomeric(np.eye(2), SamplingSet.from_pairs(2, 2, [(0, 0), (1, 1)]))

    def test_empty_column_is_error(self):
        omega = SamplingSet.from_pairs(2, 2, [(0, 0), (1, 0)])
        with pytest.raises(EmptyLineError) as err:
            is_omega_isomeric(np.eye(2), omega)
        assert err.value.indices == [1]

    def test_k_isomerism_implies_omega_isomerism(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            M = rng.standard_normal((6, 2))
            omega = gen_uniform_mask(6, 5, 0.6, seed=rng)
            if omega.empty_columns().size:
                continue
            k = int(omega.column_counts().min())
            if is_k_isomeric(M, k):
                assert is_omega_isomeric(M, omega)


class TestGamma:
    def test_full_rows(self):
        M = np.random.default_rng(6).standard_normal((5, 3))
        assert gamma_1d(M, np.arange(5)) == pytest.approx(1.0)

    def test_near_all_ones_first_row(self):
        L, _ = near_all_ones_instance()
        assert gamma_1d(L, [0]) == pytest.approx(GAMMA_FIRST_ROW, abs=1e-12)
        assert gamma_1d(L, [0], route="eigen") == pytest.approx(GAMMA_FIRST_ROW, abs=1e-12)

    def test_near_all_ones_2d(self):
        L, omega = near_all_ones_instance()
        g, per = gamma_2d(L, omega)
        assert g == pytest.approx(GAMMA_NEAR_ALL_ONES, abs=1e-12)
        np.testing.assert_allclose(per, [1 / 1.81, 0.81 / 1.81], atol=1e-12)
        assert gamma_pair(L, omega) == pytest.approx(81 / 181, abs=1e-12)

    def test_single_entry(self):
        L, omega = single_entry_instance()
        g, per = gamma_2d(L, omega)
        assert g == pytest.approx(1.0) and np.allclose(per, 1.0)
        assert gamma_pair(L, omega) == pytest.approx(1.0, abs=1e-12)

    def test_ill_conditioned(self):
        L, omega = ill_conditioned_instance(2.0)
        assert gamma_pair(L, omega) == pytest.approx(0.25, abs=1e-12)
        assert gamma_pair(L, omega, route="eigen") == pytest.approx(0.25, abs=1e-12)

    def test_full_sampling_set(self):
        M = np.random.default_rng(7).standard_normal((4, 2)) @ np.ones((2, 3))
        assert gamma_2d(M, SamplingSet.full(4, 3))[0] == pytest.approx(1.0)

    def test_zero_submatrix_undefined(self):
        L, _ = single_entry_instance()
        with pytest.raises(UndefinedQuantityError):
            gamma_1d(L, [1, 2])

    def test_eigen_route_needs_rank_preservation(self):
        with pytest.raises(UndefinedQuantityError):
            gamma_1d(np.eye(2), [0], route="eigen")
        # the pinv route is still defined
        assert gamma_1d(np.eye(2), [0]) == pytest.approx(1.0)

    def test_bounds(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            M = rng.standard_normal((8, 3)) @ rng.standard_normal((3, 5))
            rows = rng.choice(8, size=rng.integers(3, 9), replace=False)
            g = gamma_1d(M, rows)
            # smallest nonzero singular value of the sampled rows against the full spectral norm
            s_sub = np.linalg.svd(M[rows], compute_uv=False)[2]
            assert s_sub**2 / np.linalg.norm(M, 2) ** 2 - 1e-12 <= g <= 1 + 1e-12

    def test_bad_route(self):
        with pytest.raises(InvalidInputError):
            gamma_1d(np.eye(2), [0, 1], route="nope")


def _explicit_operator_norm(L, omega):
    """``||P_U P_Omega^perp P_U||`` built as an explicit (mn x mn) matrix on vec(X)."""
    m, n = L.shape
    svd = skinny_svd(L)
    PU = svd.U @ svd.U.T
    left = np.kron(np.eye(n), PU)                       # vec(P_U X) column-major
    Pperp = np.diag((~omega.mask).ravel(order="F").astype(float))
    return np.linalg.norm(left @ Pperp @ left, 2)


def test_projection_gap_matches_explicit_operator():
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(40):
        m, n, r = 6, 5, 2
        L = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        omega = gen_uniform_mask(m, n, 0.7, seed=rng)
        if omega.empty_columns().size or not is_omega_isomeric(L, omega):
            continue
        gap = projection_gap(L, omega)
        assert gap == pytest.approx(_explicit_operator_norm(L, omega), abs=1e-10)
        assert gap == pytest.approx(1 - gamma_2d(L, omega)[0], abs=1e-10)
        checked += 1
    assert checked >= 10


def test_sufficient_fraction():
    assert sufficient_fraction(1.0, 2, 0.5) == pytest.approx(0.75)
    assert sufficient_fraction(2.0, 3, 0.0) == pytest.approx(1 - 1 / 6)
    assert coherence_condition_holds(1.0, 2, 0.8, 0.5)
    assert not coherence_condition_holds(1.0, 2, 0.75, 0.5)
    with pytest.raises(InvalidInputError):
        sufficient_fraction(0.5, 2, 0.0)


def test_coherence_condition_on_sine_circulant():
    m = 20
    L = convolution_matrix(sine_series(m))
    y = np.zeros(m, dtype=int)
    y[:16] = 1
    omega = mask_from_convolution(y)
    mu0 = coherence(L)
    assert mu0 == pytest.approx(1.0)
    assert coherence_condition_holds(mu0, 2, omega.min_observed_fraction())
    assert gamma_pair(L, omega) > 0.5


class TestWitness:
    def _check(self, L, omega, delta):
        assert delta is not None
        assert np.linalg.norm(delta) == pytest.approx(1.0)
        assert not np.any(delta[omega.mask])
        r = np.linalg.matrix_rank(L)
        assert np.linalg.matrix_rank(L + delta) <= r
        assert np.linalg.matrix_rank(L + 3.7 * delta) <= r

    def test_identity_diagonal(self):
        omega = SamplingSet.from_pairs(2, 2, [(0, 0), (1, 1)])
        delta = witness_nonidentifiability(np.eye(2), omega)
        self._check(np.eye(2), omega, delta)
        np.testing.assert_allclose(np.abs(delta), [[0, 0], [1, 0]], atol=1e-12)

    def test_isomeric_has_none(self):
        L, omega = near_all_ones_instance()
        assert witness_nonidentifiability(L, omega) is None

    def test_missing_column(self):
        L = np.ones((3, 3))
        omega = SamplingSet(np.array([[1, 1, 0], [1, 1, 0], [1, 1, 0]], dtype=bool))
        delta = witness_nonidentifiability(L, omega)
        self._check(L, omega, delta)
        assert not np.any(delta[:, :2])
        # oracle: the column space is span(1), so the perturbation is a multiple of 1 e_3^T
        np.testing.assert_allclose(np.abs(delta[:, 2]), np.full(3, 1 / np.sqrt(3)), atol=1e-12)

    def test_random_non_isomeric(self):
        rng = np.random.default_rng(10)
        found = 0
        for _ in range(50):
            L = rng.standard_normal((6, 3)) @ rng.standard_normal((3, 6))
            omega = gen_uniform_mask(6, 6, 0.45, seed=rng)
            if omega.empty_rows().size or omega.empty_columns().size:
                continue
            delta = witness_nonidentifiability(L, omega)
            if is_pair_isomeric(L, omega):
                assert delta is None
            else:
                self._check(L, omega, delta)
                found += 1
        assert found >= 5


class TestDiagnose:
    def test_single_entry_report(self):
        L, omega = single_entry_instance()
        rep = diagnose(L, omega)
        assert rep.rank == 1 and rep.coherence == pytest.approx(3.0)
        assert rep.pair_isomeric and rep.witness is None
        assert rep.gamma_pair == pytest.approx(1.0)
        d = rep.to_dict()
        assert d["gamma_pair"] == pytest.approx(1.0) and d["pair_isomeric"] is True

    def test_report_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            L = rng.standard_normal((7, 2)) @ rng.standard_normal((2, 6))
            omega = gen_uniform_mask(7, 6, 0.5, seed=rng)
            if omega.empty_rows().size or omega.empty_columns().size:
                continue
            rep = diagnose(L, omega)
            assert rep.gamma_pair == pytest.approx(min(rep.gamma_omega, rep.gamma_omegaT))
            assert 0 <= rep.gamma_pair <= 1 + 1e-12
            assert np.all((rep.per_column_gammas >= 0) & (rep.per_column_gammas <= 1 + 1e-12))
            assert (rep.witness is None) == rep.pair_isomeric
            assert rep.deficient_columns == np.flatnonzero(
                column_rank_deficiency(L, omega)).tolist()

    def test_rejects_empty_lines(self):
        omega = SamplingSet.from_pairs(2, 2, [(0, 0), (0, 1)])
        with pytest.raises(EmptyLineError):
            diagnose(np.ones((2, 2)), omega)

    def test_rejects_zero_matrix(self):
        with pytest.raises(UndefinedQuantityError):
            diagnose(np.zeros((2, 2)), SamplingSet.full(2, 2))


def test_coherent_sampling_bound_frequency_report(capsys):
    """Frequency of ``gamma_pair > (1 - 1/sqrt(a)) rho0`` over seeded Bernoulli masks.

    The bound carries an unspecified constant, so the frequency is reported
    rather than asserted.
    """
    rng = np.random.default_rng(12)
    rho0, n, r = 0.7, 60, 3
    hits = 0
    trials = 50
    for _ in range(trials):
        L = rng.standard_normal((n, r)) @ rng.standard_normal((r, n))
        omega = gen_uniform_mask(n, n, rho0, seed=rng)
        mu0 = coherence(L)
        a = rho0 * n / (mu0 * r * math.log(n))
        bound = (1 - 1 / math.sqrt(a)) * rho0 if a > 1 else 0.0
        hits += gamma_pair(L, omega) > bound
    print(f"bound held in {hits}/{trials} trials")
    assert 0 <= hits <= trials
