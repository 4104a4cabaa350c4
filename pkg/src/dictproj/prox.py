"""Proximal operators for the l1 norm, nuclear norm, and columnwise l2,1 norm.

Each ``prox_*(M, tau)`` returns ``argmin_Z tau*g(Z) + 0.5*||Z - M||_F^2`` for
its regularizer ``g``; all three reduce to the identity at ``tau = 0``.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ParameterError

__all__ = [
    "prox_l1",
    "prox_nuclear",
    "prox_l21",
    "l1_norm",
    "l21_norm",
    "nuclear_norm",
]


def _check_tau(tau):
    if tau < 0:
        raise ParameterError(f"threshold must be >= 0, got {tau}")


def prox_l1(M, tau):
    """Elementwise soft threshold: sign(m) * max(|m| - tau, 0)."""
    _check_tau(tau)
    M = np.asarray(M, dtype=np.float64)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def prox_nuclear(M, tau):
    """Singular value thresholding: U * max(S - tau, 0) * Vt for M = U S Vt."""
    _check_tau(tau)
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise NumericError("prox_nuclear input has non-finite entries")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return (U * np.maximum(s - tau, 0.0)) @ Vt


def prox_l21(M, tau):
    """Columnwise shrinkage: scale each column c by max(1 - tau/||c||_2, 0)."""
    _check_tau(tau)
    M = np.asarray(M, dtype=np.float64)
    norms = np.linalg.norm(M, axis=0)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(1.0 - tau / norms[nz], 0.0)
    return M * scale


def l1_norm(M):
    return float(np.abs(M).sum())


def l21_norm(M):
    """Sum over columns of column l2 norms."""
    return float(np.linalg.norm(M, axis=0).sum())


def nuclear_norm(M):
    """Sum of singular values."""
    return float(np.linalg.svd(M, compute_uv=False).sum())
