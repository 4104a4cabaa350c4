"""Orthonormal projection updates with the dictionary and coefficients fixed.

The reconstruction part of the objective is rewritten as a single stacked
system: for each class the pair (D A_i, D_i A_i^i) must match P^T X_i, so the
sample matrix is duplicated class-block-wise and the stacked dictionary
[D, D_1, D, D_2, ...] acts on a block-diagonal coefficient matrix. The
resulting trace form tr(P^T (phi(P) + delta X L_hat X^T) P) is minimized over
orthonormal P by an eigendecomposition, and the committed projection is a
blend of the previous one with the minimizer, re-orthonormalized by QR.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, NumericError, ParameterError
from .fisher import CodingMatrix
from .model import StructuredDictionary


def assemble_stacked_system(D: StructuredDictionary, A: CodingMatrix):
    """Build (D_hat, Z_hat, column_index) for the stacked reconstruction.

    D_hat = [D, D_1, D, D_2, ..., D, D_K]; Z_hat is block-diagonal with the
    class-i block diag(A_i, A_i^i) spanning 2 n_i columns, so that with
    X_tilde = X[:, column_index]

        ||P^T X_tilde - D_hat Z_hat||_F^2
            = sum_i ( ||P^T X_i - D A_i||_F^2 + ||P^T X_i - D_i A_i^i||_F^2 ).
    """
    if D.n_classes != A.n_classes:
        raise DimensionError("dictionary and coding matrix disagree on class count")
    n_atoms = D.n_atoms
    total_rows = sum(n_atoms + (stop - start) for start, stop in D.atom_ranges)
    total_cols = 2 * A.values.shape[1]
    d_hat = np.empty((D.atoms.shape[0], total_rows))
    z_hat = np.zeros((total_rows, total_cols))
    column_index = np.empty(total_cols, dtype=np.int64)
    row = col = 0
    for i in range(D.n_classes):
        sub = D.sub(i)
        block = A.block(i)
        own = A.sub_block(i, i)
        n_i = block.shape[1]
        d_hat[:, row : row + n_atoms] = D.atoms
        d_hat[:, row + n_atoms : row + n_atoms + sub.shape[1]] = sub
        z_hat[row : row + n_atoms, col : col + n_i] = block
        z_hat[row + n_atoms : row + n_atoms + sub.shape[1], col + n_i : col + 2 * n_i] = own
        cstart, cstop = A.col_ranges[i]
        column_index[col : col + n_i] = np.arange(cstart, cstop)
        column_index[col + n_i : col + 2 * n_i] = np.arange(cstart, cstop)
        row += n_atoms + sub.shape[1]
        col += 2 * n_i
    return d_hat, z_hat, column_index


def _sign_fix(vectors):
    """Make the largest-magnitude entry of each column positive (in place)."""
    anchor = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[anchor, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs
    return vectors


def projection_target(P_prev, X, d_hat, z_hat, laplacian_hat, delta, column_index, select="smallest"):
    """Eigenvector solution of the trace minimization around the previous P.

    Forms S = (X_tilde - P_prev D_hat Z_hat)(...)^T + delta * X L_hat X^T
    (graph term on the original samples) and returns the d eigenvectors with
    the smallest eigenvalues, sign-fixed; ``select='largest'`` flips the end
    of the spectrum that is kept.
    """
    P_prev = np.asarray(P_prev, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if P_prev.shape[0] != X.shape[0]:
        raise DimensionError("projection rows must match the feature dimension")
    x_tilde = X[:, column_index]
    residual = x_tilde - P_prev @ (d_hat @ z_hat)
    S = residual @ residual.T
    if delta != 0:
        S = S + delta * (X @ laplacian_hat @ X.T)
    S = 0.5 * (S + S.T)
    try:
        _, vectors = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"projection eigendecomposition failed: {exc}") from exc
    d = P_prev.shape[1]
    picked = vectors[:, :d] if select == "smallest" else vectors[:, ::-1][:, :d]
    return _sign_fix(picked.copy())


def blend_projection(P_prev, P_new, gamma):
    """P_prev + gamma (P_new - P_prev), re-orthonormalized by thin QR.

    gamma = 1 returns P_new unchanged; a rank-deficient blend falls back to
    P_new.
    """
    if not 0 < gamma <= 1:
        raise ParameterError(f"gamma must lie in (0, 1], got {gamma}")
    if gamma == 1:
        return np.asarray(P_new, dtype=np.float64)
    blended = P_prev + gamma * (P_new - P_prev)
    q, r = np.linalg.qr(blended)
    diag = np.diag(r)
    if np.abs(diag).min() < 1e-12 * max(np.abs(diag).max(), 1.0):
        return np.asarray(P_new, dtype=np.float64)
    signs = np.sign(diag)
    signs[signs == 0] = 1.0
    return q * signs


def pca_projection(X, d):
    """Top-d principal directions of the column-centered data, sign-fixed."""
    X = np.asarray(X, dtype=np.float64)
    if d >= X.shape[0]:
        raise DimensionError(f"target dimension {d} must be below feature dim {X.shape[0]}")
    centered = X - X.mean(axis=1, keepdims=True)
    _, vectors = np.linalg.eigh(centered @ centered.T)
    return _sign_fix(vectors[:, ::-1][:, :d].copy())
