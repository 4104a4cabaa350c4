"""Per-class sub-dictionary updates by inexact augmented Lagrangian descent.

For class i (projection, other sub-dictionaries, and cross-class coefficients
fixed) the subproblem is

    min ||Z||_1 + alpha ||J||_* + beta ||E||_{2,1} + lam * r(D_i)
    s.t.  Y = D_i A + E,   D_i = J,   A = Z

with Y = P^T X_i, A = A_i^i, and the coupling term
r(D_i) = ||Y - D_i A - C||_F^2 + const,  C = sum_{j!=i} D_j A_i^j.
Each pass solves the blocks once in closed form (soft threshold, ridge solve,
singular value threshold, ridge solve, column shrinkage), ascends the three
multipliers, and grows the penalty mu by rho up to max_mu; it stops when all
three infinity-norm constraint residuals drop below eps.

After a class converges its atoms are rescaled to unit norm with the matching
coefficient rows rescaled inversely, so every product D_i A_j^i is preserved;
atoms that collapsed to zero are reseeded from the worst-reconstructed
residual column.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelState, StructuredDictionary
from .prox import prox_l1, prox_l21, prox_nuclear

MU_INIT = 1e-6
MU_MAX = 1e30
RHO = 1.1
EPSILON = 1e-8
ZERO_ATOM_TOL = 1e-12


@dataclass
class AlmTrace:
    """Per-iteration diagnostics of one class's solve."""

    residual_data: list[float] = field(default_factory=list)
    residual_dict: list[float] = field(default_factory=list)
    residual_code: list[float] = field(default_factory=list)
    mu: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.mu)

    def rows(self):
        """(iteration, residual_data, residual_dict, residual_code, mu) tuples."""
        return [
            (t, self.residual_data[t], self.residual_dict[t], self.residual_code[t], self.mu[t])
            for t in range(self.iterations)
        ]


def _inf_norm(M) -> float:
    return float(np.abs(M).max()) if M.size else 0.0


def update_subdictionary(state: ModelState, class_i: int):
    """Solve class i's sub-dictionary block; returns (D_i, A_i^i, E_i, trace).

    The dictionary and own-class coefficients warm-start from the state; the
    state itself is not modified (sweep_dictionary commits results).
    """
    hp = state.hp
    Y = state.reduced_class(class_i)
    D_i = state.D.sub(class_i).copy()
    A = state.A.sub_block(class_i, class_i).copy()
    # cross-class reconstruction is constant while class i is being solved
    C = np.zeros_like(Y)
    for j in range(state.n_classes):
        if j != class_i:
            C += state.D.sub(j) @ state.A.sub_block(class_i, j)

    J = np.zeros_like(D_i)
    E = np.zeros_like(Y)
    T1 = np.zeros_like(Y)
    T2 = np.zeros_like(D_i)
    T3 = np.zeros_like(A)
    Z = A.copy()
    mu = MU_INIT
    n_atoms = D_i.shape[1]
    eye_atoms = np.eye(n_atoms)
    blow_up = 1e9 * max(1.0, _inf_norm(Y))
    best = (np.inf, D_i.copy(), A.copy(), E.copy())

    trace = AlmTrace()
    for _ in range(hp.max_alm_iters):
        Z = prox_l1(A + T3 / mu, 1.0 / mu)
        A = np.linalg.solve(
            D_i.T @ D_i + eye_atoms,
            D_i.T @ (Y - E) + Z + (D_i.T @ T1 - T3) / mu,
        )
        J = prox_nuclear(D_i + T2 / mu, hp.alpha / mu)
        # stationarity of the Lagrangian in D_i, with the coupling term folded in
        lhs = (2.0 * hp.lam / mu + 1.0) * (A @ A.T) + eye_atoms
        rhs = (
            (2.0 * hp.lam / mu) * ((Y - C) @ A.T)
            + (Y - E) @ A.T
            + J
            + (T1 @ A.T - T2) / mu
        )
        D_i = np.linalg.solve(lhs.T, rhs.T).T
        E = prox_l21(Y - D_i @ A + T1 / mu, hp.beta / mu)

        res_data = Y - D_i @ A - E
        res_dict = D_i - J
        res_code = A - Z
        T1 = T1 + mu * res_data
        T2 = T2 + mu * res_dict
        T3 = T3 + mu * res_code
        mu = min(RHO * mu, MU_MAX)

        trace.residual_data.append(_inf_norm(res_data))
        trace.residual_dict.append(_inf_norm(res_dict))
        trace.residual_code.append(_inf_norm(res_code))
        trace.mu.append(mu)
        worst = max(trace.residual_data[-1], trace.residual_dict[-1], trace.residual_code[-1])
        finite = np.all(np.isfinite(D_i)) and np.all(np.isfinite(A)) and np.all(np.isfinite(E))
        if finite and worst < best[0]:
            best = (worst, D_i.copy(), A.copy(), E.copy())
        if not finite or _inf_norm(D_i) > blow_up or _inf_norm(A) > blow_up:
            # bilinear see-saw escaped while mu is still tiny: keep the best iterate
            break
        if worst < EPSILON:
            trace.converged = True
            break
    if not trace.converged:
        _, D_i, A, E = best
    return D_i, A, E, trace


def _renormalize_atoms(state: ModelState, class_i: int) -> None:
    """Scale class i's atoms to unit norm, rescaling coefficient rows inversely.

    Every product D_i A_j^i is preserved. Zero atoms get their coefficient
    row cleared (the product was already zero) and are reseeded from the
    residual column the dictionary currently explains worst.
    """
    astart, astop = state.D.atom_ranges[class_i]
    atoms = state.D.atoms[:, astart:astop]
    norms = np.linalg.norm(atoms, axis=0)
    dead = np.flatnonzero(norms <= ZERO_ATOM_TOL)
    live = np.flatnonzero(norms > ZERO_ATOM_TOL)
    if live.size:
        atoms[:, live] /= norms[live]
        state.A.values[astart + live, :] *= norms[live][:, None]
    if dead.size:
        residual = state.reduced() - state.D.atoms @ state.A.values
        order = np.argsort(-np.linalg.norm(residual, axis=0), kind="stable")
        for rank, atom_idx in enumerate(dead):
            column = residual[:, order[rank % order.size]]
            norm = np.linalg.norm(column)
            if norm <= ZERO_ATOM_TOL:
                column = np.zeros(atoms.shape[0])
                column[atom_idx % atoms.shape[0]] = 1.0
                norm = 1.0
            atoms[:, atom_idx] = column / norm
            state.A.values[astart + atom_idx, :] = 0.0


def sweep_dictionary(state: ModelState, snapshot=False, collect_traces=None) -> StructuredDictionary:
    """Update every sub-dictionary in class order, committing results in place.

    ``snapshot=True`` solves every class against the start-of-sweep blocks
    instead of the freshest ones (order-independent semantics). Pass a list
    as ``collect_traces`` to receive each class's AlmTrace.
    """
    source = state
    if snapshot:
        source = ModelState(
            X=state.X,
            labels=state.labels,
            col_ranges=state.col_ranges,
            P=state.P,
            D=state.D.copy(),
            A=state.A.copy(),
            graph=state.graph,
            hp=state.hp,
        )
    for i in range(state.n_classes):
        D_i, A_ii, _, trace = update_subdictionary(source, i)
        astart, astop = state.D.atom_ranges[i]
        cstart, cstop = state.A.col_ranges[i]
        state.D.atoms[:, astart:astop] = D_i
        state.A.values[astart:astop, cstart:cstop] = A_ii
        _renormalize_atoms(state, i)
        if collect_traces is not None:
            collect_traces.append(trace)
    return state.D
