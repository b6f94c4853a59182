"""Small hand-checkable instances used in tests, docs and the CLI demo."""

from __future__ import annotations

import numpy as np

from .sampling import SamplingSet


def single_entry_instance():
    """3x3 matrix with a single unit entry at (0, 0), sampled on row 0 and column 0.

    Highly coherent, not uniformly sampled, yet pair-isomeric with
    relative condition number 1.
    """
    L = np.zeros((3, 3))
    L[0, 0] = 1.0
    omega = SamplingSet.from_pairs(3, 3, [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0)])
    return L, omega


def near_all_ones_instance():
    """Rank-1 ``[[1, 10/9], [9/10, 1]]`` observed on the diagonal.

    Pair-isomeric but ill-conditioned (gamma = 81/181): the all-ones matrix
    fits the same observations with the same rank.
    """
    L = np.array([[1.0, 10.0 / 9.0], [9.0 / 10.0, 1.0]])
    omega = SamplingSet.from_pairs(2, 2, [(0, 0), (1, 1)])
    return L, omega


def ill_conditioned_instance(alpha: float):
    """Rank-1 ``[[1, s], [1/s, 1]]`` with ``s = sqrt(alpha^2 - 1)``, observed on the diagonal.

    Its relative condition number is ``1 / alpha^2``. Needs ``alpha > 1``.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    s = np.sqrt(alpha**2 - 1.0)
    L = np.array([[1.0, s], [1.0 / s, 1.0]])
    omega = SamplingSet.from_pairs(2, 2, [(0, 0), (1, 1)])
    return L, omega


def balanced_factors(alpha: float):
    """Exact balanced rank-1 factors ``(A0, X0)`` of :func:`ill_conditioned_instance`."""
    q = (alpha**2 - 1.0) ** 0.25
    return np.array([[q], [1.0 / q]]), np.array([[1.0 / q, q]])


def rescaled_factors(alpha: float, eps: float):
    """Feasible factors that rescale the first row of A and first column of X by ``1 + eps``.

    They still fit both diagonal observations; for ``0 < eps < sqrt(alpha^2 - 1) - 1``
    their Frobenius objective is strictly below that of :func:`balanced_factors`.
    """
    q = (alpha**2 - 1.0) ** 0.25
    A = np.array([[q / (1.0 + eps)], [1.0 / q]])
    X = np.array([[(1.0 + eps) / q, q]])
    return A, X
