"""Randomized invariants checked with hypothesis."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from isoplete import io
from isoplete.diagnostics import (
    gamma_1d,
    is_k_isomeric,
    is_omega_isomeric,
    witness_nonidentifiability,
)
from isoplete.errors import EmptyLineError
from isoplete.forecasting import convolution_matrix, deconvolve
from isoplete.linalg import coherence, pinv, svt
from isoplete.metrics import mse, psnr, rank_estimate
from isoplete.sampling import PartialMatrix, gen_uniform_mask, mask_from_convolution

SETTINGS = settings(max_examples=60, deadline=None,
                    suppress_health_check=[HealthCheck.function_scoped_fixture])

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 12)


def _low_rank(rng, m, n, r):
    return rng.standard_normal((m, r)) @ rng.standard_normal((r, n))


@SETTINGS
@given(seeds, dims, dims, st.integers(1, 6))
def test_penrose_identities(seed, m, n, r):
    rng = np.random.default_rng(seed)
    M = _low_rank(rng, m, n, min(r, m, n))
    P = pinv(M)
    scale = max(1.0, np.linalg.norm(M) * np.linalg.norm(P))
    assert np.linalg.norm(M @ P @ M - M) <= 1e-8 * scale * np.linalg.norm(M)
    assert np.linalg.norm(P @ M @ P - P) <= 1e-8 * scale * np.linalg.norm(P)
    assert np.allclose(M @ P, (M @ P).T, atol=1e-8)
    assert np.allclose(P @ M, (P @ M).T, atol=1e-8)


@SETTINGS
@given(seeds, dims, dims, st.floats(0.0, 5.0))
def test_svt_non_expansive(seed, m, n, tau):
    rng = np.random.default_rng(seed)
    M, N = rng.standard_normal((m, n)), rng.standard_normal((m, n))
    assert np.linalg.norm(svt(M, tau) - svt(N, tau)) <= np.linalg.norm(M - N) * (1 + 1e-10) + 1e-12


@SETTINGS
@given(seeds, st.integers(2, 24))
def test_circulant_coherence_is_one(seed, m):
    x = np.random.default_rng(seed).standard_normal(m)
    assert abs(coherence(convolution_matrix(x)) - 1.0) <= 1e-8


@SETTINGS
@given(seeds, st.integers(1, 16), st.integers(1, 16), st.floats(0.05, 1.0))
def test_uniform_mask_reproducible_and_partitioned(seed, m, n, rho):
    a = gen_uniform_mask(m, n, rho, seed=seed)
    assert a == gen_uniform_mask(m, n, rho, seed=seed)
    assert a.row_counts().sum() == a.column_counts().sum() == len(a)
    assert sum(a.column(j).size for j in range(n)) == len(a)


@SETTINGS
@given(st.lists(st.integers(0, 1), min_size=1, max_size=20))
def test_convolution_mask_constant_line_counts(y):
    omega = mask_from_convolution(y)
    assert np.all(omega.row_counts() == sum(y))
    assert np.all(omega.column_counts() == sum(y))


@SETTINGS
@given(seeds, st.integers(3, 9), st.integers(2, 7), st.integers(1, 3))
def test_k_isomerism_monotone(seed, m, n, r):
    rng = np.random.default_rng(seed)
    M = _low_rank(rng, m, n, min(r, n))
    M[rng.integers(m)] = 0.0  # give some instances a weak row
    flags = [bool(is_k_isomeric(M, k)) for k in range(1, m + 1)]
    for lo, hi in zip(flags, flags[1:]):
        assert not lo or hi


@SETTINGS
@given(seeds, st.integers(4, 10), st.integers(2, 8), st.integers(1, 3))
def test_k_isomeric_implies_omega_isomeric(seed, m, n, r):
    rng = np.random.default_rng(seed)
    M = _low_rank(rng, m, n, r)
    omega = gen_uniform_mask(m, n, 0.7, seed=rng)
    k = int(omega.column_counts().min())
    if k >= 1 and is_k_isomeric(M, k):
        assert is_omega_isomeric(M, omega)


@SETTINGS
@given(seeds, st.integers(3, 15), st.integers(1, 4))
def test_gamma_routes_agree(seed, m, r):
    rng = np.random.default_rng(seed)
    r = min(r, m)
    M = _low_rank(rng, m, 6, r)
    rows = rng.choice(m, size=rng.integers(r, m + 1), replace=False)
    if np.linalg.matrix_rank(M[rows]) < np.linalg.matrix_rank(M):
        return
    assert abs(gamma_1d(M, rows) - gamma_1d(M, rows, route="eigen")) <= 1e-8
    assert -1e-12 <= gamma_1d(M, rows) <= 1 + 1e-12


@SETTINGS
@given(seeds, st.integers(3, 8), st.integers(3, 8), st.integers(1, 3), st.floats(0.3, 0.8))
def test_witness_soundness(seed, m, n, r, rho):
    rng = np.random.default_rng(seed)
    L = _low_rank(rng, m, n, r)
    omega = gen_uniform_mask(m, n, rho, seed=rng)
    try:
        delta = witness_nonidentifiability(L, omega)
    except EmptyLineError:
        return
    if delta is None:
        return
    assert np.all(delta[omega.mask] == 0)
    assert np.linalg.norm(delta) > 0
    assert rank_estimate(L + delta, 1e-9) <= rank_estimate(L, 1e-9)


@SETTINGS
@given(seeds, st.integers(1, 12))
def test_deconvolve_round_trip(seed, m):
    x = np.random.default_rng(seed).standard_normal(m)
    assert np.allclose(deconvolve(convolution_matrix(x)), x, atol=1e-12)


@SETTINGS
@given(seeds, st.integers(2, 10), st.integers(2, 10))
def test_metrics_permutation_invariant(seed, m, n):
    rng = np.random.default_rng(seed)
    L0, L1 = rng.standard_normal((m, n)), rng.standard_normal((m, n))
    perm = rng.permutation(m * n)
    P0, P1 = L0.ravel()[perm].reshape(m, n), L1.ravel()[perm].reshape(m, n)
    assert np.isclose(mse(L0, L1), mse(P0, P1), rtol=1e-12)
    assert np.isclose(psnr(L0, L1), psnr(P0, P1), rtol=1e-12)
    rows, cols = rng.permutation(m), rng.permutation(n)
    assert rank_estimate(L0) == rank_estimate(L0[rows][:, cols])


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 9), st.integers(1, 9), st.floats(0.05, 1.0))
def test_partial_matrix_file_round_trip(tmp_path_factory, seed, m, n, rho):
    rng = np.random.default_rng(seed)
    P = PartialMatrix.from_dense(rng.standard_normal((m, n)) * 10.0 ** rng.integers(-5, 6),
                                 gen_uniform_mask(m, n, rho, seed=rng))
    path = tmp_path_factory.mktemp("rt") / "p.csv"
    io.save_partial_matrix(path, P)
    assert io.load_partial_matrix(path, (m, n)) == P
