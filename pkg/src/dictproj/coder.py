"""Coefficient updates: per-class proximal-gradient descent on the smooth
reconstruction + discriminant objective with an l1 penalty.

For class i with the projection and dictionary fixed, the smooth part is

    Q(A_i) = ||Y_i - D A_i||_F^2 + ||Y_i - D_i A_i^i||_F^2
             + sum_{j!=i} ||D_j A_i^j||_F^2 + lambda2 * F_i(A_i)

with Y_i = P^T X_i, and the full subproblem adds lambda1 * ||A_i||_1. Each
step takes a gradient move of length 1/L followed by a soft threshold at
lambda1/L; L starts from a spectral bound and doubles whenever the quadratic
majorization check fails, which makes the composite objective non-increasing.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, NumericError
from .fisher import CodingMatrix, fisher_term_class, fisher_term_grad
from .model import ModelState
from .prox import prox_l1

RELATIVE_STOP = 1e-6


def _reconstruction_terms(A_i, state: ModelState, class_i: int):
    Y_i = state.reduced_class(class_i)
    if A_i.shape != (state.D.n_atoms, Y_i.shape[1]):
        raise DimensionError(
            f"A_i must be {state.D.n_atoms} x {Y_i.shape[1]}, got {A_i.shape}"
        )
    whole = Y_i - state.D.atoms @ A_i
    rstart, rstop = state.A.row_ranges[class_i]
    own = Y_i - state.D.sub(class_i) @ A_i[rstart:rstop]
    cross = 0.0
    for j in range(state.n_classes):
        if j == class_i:
            continue
        jstart, jstop = state.A.row_ranges[j]
        cross += float(np.sum((state.D.sub(j) @ A_i[jstart:jstop]) ** 2))
    return float(np.sum(whole**2)) + float(np.sum(own**2)) + cross


def smooth_objective_Q(A_i, state: ModelState, class_i: int) -> float:
    """Q(A_i): reconstruction triple plus the weighted per-class discriminant."""
    value = _reconstruction_terms(A_i, state, class_i)
    if state.hp.lambda2 > 0:
        value += state.hp.lambda2 * fisher_term_class(state.A, class_i, state.hp.eta, block=A_i)
    return value


def smooth_objective_grad(A_i, state: ModelState, class_i: int) -> np.ndarray:
    """Gradient of Q at A_i (other classes' coefficients held fixed)."""
    Y_i = state.reduced_class(class_i)
    D = state.D.atoms
    grad = 2.0 * (D.T @ (D @ A_i - Y_i))
    for j in range(state.n_classes):
        jstart, jstop = state.A.row_ranges[j]
        D_j = state.D.sub(j)
        if j == class_i:
            grad[jstart:jstop] += 2.0 * (D_j.T @ (D_j @ A_i[jstart:jstop] - Y_i))
        else:
            grad[jstart:jstop] += 2.0 * (D_j.T @ (D_j @ A_i[jstart:jstop]))
    if state.hp.lambda2 > 0:
        swapped = state.A.copy()
        cstart, cstop = state.A.col_ranges[class_i]
        swapped.values[:, cstart:cstop] = A_i
        grad += state.hp.lambda2 * fisher_term_grad(swapped, class_i, state.hp.eta)
    return grad


def _spectral_step_bound(state: ModelState, class_i: int) -> float:
    """Initial curvature estimate for the gradient step; backtracking corrects
    any underestimate."""
    hp = state.hp
    sigma_whole = np.linalg.norm(state.D.atoms, 2) ** 2
    sigma_own = np.linalg.norm(state.D.sub(class_i), 2) ** 2
    sigma_cross = max(
        (np.linalg.norm(state.D.sub(j), 2) ** 2 for j in range(state.n_classes) if j != class_i),
        default=0.0,
    )
    n_i = state.col_ranges[class_i][1] - state.col_ranges[class_i][0]
    n_total = state.X.shape[1]
    mean_curvature = 2.0 * (1.0 + hp.eta + 2.0 / n_i + state.n_classes / n_total)
    return 2.0 * (sigma_whole + sigma_own + sigma_cross) + hp.lambda2 * mean_curvature


def update_codes_class(state: ModelState, class_i: int, max_inner=None) -> np.ndarray:
    """Run proximal-gradient steps on class i's coefficients; returns the new A_i.

    The state's coding matrix is updated in place. Iteration stops after
    ``max_inner`` steps or when the relative change drops below 1e-6.
    """
    hp = state.hp
    if max_inner is None:
        max_inner = hp.inner_iters
    A_i = state.A.block(class_i).copy()
    L = max(_spectral_step_bound(state, class_i), 1e-12)
    q_value = smooth_objective_Q(A_i, state, class_i)
    for iteration in range(max_inner):
        grad = smooth_objective_grad(A_i, state, class_i)
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite coefficient gradient at inner iteration {iteration}")
        while True:
            candidate = prox_l1(A_i - grad / L, hp.lambda1 / L)
            diff = candidate - A_i
            q_candidate = smooth_objective_Q(candidate, state, class_i)
            bound = q_value + float(np.sum(grad * diff)) + 0.5 * L * float(np.sum(diff**2))
            if q_candidate <= bound + 1e-12 * max(1.0, abs(bound)):
                break
            L *= 2.0  # majorization failed: curvature estimate too small
        step = float(np.linalg.norm(diff))
        A_i = candidate
        q_value = q_candidate
        cstart, cstop = state.A.col_ranges[class_i]
        state.A.values[:, cstart:cstop] = A_i
        if step < RELATIVE_STOP * max(1.0, float(np.linalg.norm(A_i))):
            break
    return A_i


def update_all_codes(state: ModelState, max_inner=None) -> CodingMatrix:
    """Sweep the classes in index order, updating each block in place."""
    for i in range(state.n_classes):
        update_codes_class(state, i, max_inner=max_inner)
    return state.A


def lasso_vector(D, y, weight, max_iter=500, tol=1e-12):
    """min_a ||y - D a||_2^2 + weight * ||a||_1 by the same prox-gradient steps.

    Used for query encoding; returns the coefficient vector.
    """
    D = np.asarray(D, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if D.shape[0] != y.shape[0]:
        raise DimensionError(f"dictionary rows {D.shape[0]} != signal length {y.shape[0]}")
    L = max(2.0 * np.linalg.norm(D, 2) ** 2, 1e-12)
    a = np.zeros(D.shape[1])
    Dty = D.T @ y
    DtD = D.T @ D
    for _ in range(max_iter):
        grad = 2.0 * (DtD @ a - Dty)
        new = prox_l1(a - grad / L, weight / L)
        change = float(np.linalg.norm(new - a))
        a = new
        if change < tol * max(1.0, float(np.linalg.norm(a))):
            break
    return a
