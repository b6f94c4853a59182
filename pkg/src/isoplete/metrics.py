"""Recovery metrics."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

PSNR_CAP = 300.0
SUCCESS_PSNR = 40.0
RANK_RATIO = 1e-4


def mse(values_true, values_pred) -> float:
    a = np.asarray(values_true, dtype=float).ravel()
    b = np.asarray(values_pred, dtype=float).ravel()
    if a.size != b.size or a.size == 0:
        raise InvalidInputError("mse needs two non-empty inputs of equal length")
    return float(np.mean((a - b) ** 2))


def psnr(L0, L_hat) -> float:
    """``10 log10(peak^2 / MSE)`` with ``peak = max |L0|``; exact recovery is capped at 300 dB."""
    L0 = np.asarray(L0, dtype=float)
    L_hat = np.asarray(L_hat, dtype=float)
    if L0.shape != L_hat.shape:
        raise InvalidInputError("psnr needs matrices of equal shape")
    peak = float(np.max(np.abs(L0)))
    if peak == 0.0:
        raise InvalidInputError("psnr is undefined for a zero reference")
    err = mse(L0, L_hat)
    if err == 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(peak**2 / err), PSNR_CAP))


def rank_estimate(L, ratio: float = RANK_RATIO) -> int:
    """``#{i : sigma_i >= ratio * sigma_1}``; 0 for the zero matrix."""
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        return 0
    s = np.linalg.svd(L, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s >= ratio * s[0]))


def relative_error(L0, L_hat) -> float:
    L0 = np.asarray(L0, dtype=float)
    return float(np.linalg.norm(np.asarray(L_hat) - L0) / np.linalg.norm(L0))
