"""Supervised k-nearest-neighbor graph and its normalized Laplacian.

An edge (i, j) exists only when both samples share a label and one is among
the k nearest same-class neighbors of the other (symmetric union rule). Edge
weights use the heat kernel exp(-||x_i - x_j||^2 / t). The normalized
Laplacian is L_hat = I - D^{-1/2} W D^{-1/2}; degree-zero vertices keep a
unit diagonal so L_hat stays positive semidefinite with spectrum in [0, 2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class SupervisedGraph:
    weights: np.ndarray
    laplacian_hat: np.ndarray
    k: int
    t: float


def _pairwise_sq_dists(X):
    diff = X[:, :, None] - X[:, None, :]
    return np.einsum("mij,mij->ij", diff, diff)


def default_neighbor_count(ds: LabeledDataset) -> int:
    """min(5, smallest class size - 1), floored at 1."""
    return max(1, min(5, int(ds.class_counts.min()) - 1))


def build_graph(ds: LabeledDataset, k=None, t="auto") -> SupervisedGraph:
    """Build the supervised neighborhood graph of a labeled dataset.

    Parameters
    ----------
    ds : LabeledDataset
    k : int or None
        Neighbors per vertex within its own class; None picks the default.
    t : float or "auto"
        Heat-kernel bandwidth in squared-distance units. "auto" uses the
        median squared distance over the selected neighbor pairs (1.0 when
        that median vanishes or no pairs exist).
    """
    n = ds.n_samples
    if n < 2:
        raise ParameterError("graph construction needs at least 2 samples")
    if k is None:
        k = default_neighbor_count(ds)
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if t != "auto" and not t > 0:
        raise ParameterError(f"bandwidth t must be > 0, got {t}")

    sq = _pairwise_sq_dists(ds.samples)
    adjacency = np.zeros((n, n), dtype=bool)
    for label in range(1, ds.n_classes + 1):
        cols = ds.class_columns(label)
        if cols.size < 2:
            continue
        local = sq[np.ix_(cols, cols)]
        k_eff = min(k, cols.size - 1)
        order = np.argsort(local, axis=0, kind="stable")
        for j in range(cols.size):
            picked = [i for i in order[:, j] if i != j][:k_eff]
            adjacency[cols[picked], cols[j]] = True
    adjacency |= adjacency.T  # "or vice versa" union rule

    if t == "auto":
        ii, jj = np.nonzero(np.triu(adjacency, 1))
        med = float(np.median(sq[ii, jj])) if ii.size else 0.0
        t = med if med > 0 else 1.0
    t = float(t)

    weights = np.where(adjacency, np.exp(-sq / t), 0.0)
    np.fill_diagonal(weights, 0.0)

    deg = weights.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = np.eye(n) - (inv_sqrt[:, None] * weights) * inv_sqrt[None, :]
    return SupervisedGraph(weights=weights, laplacian_hat=lap, k=int(k), t=t)


def projection_graph_cost(P, ds: LabeledDataset, g: SupervisedGraph) -> float:
    """tr(P^T X L_hat X^T P): how far projected neighbors drift apart."""
    P = np.asarray(P, dtype=np.float64)
    X = ds.samples
    if P.shape[0] != X.shape[0]:
        raise DimensionError(f"P has {P.shape[0]} rows but samples have dim {X.shape[0]}")
    if g.laplacian_hat.shape[0] != X.shape[1]:
        raise DimensionError(
            f"graph built over {g.laplacian_hat.shape[0]} vertices, dataset has {X.shape[1]}"
        )
    Y = P.T @ X
    return float(np.einsum("di,ij,dj->", Y, g.laplacian_hat, Y))


def dump_edges(g: SupervisedGraph, path: str) -> None:
    """Write the upper-triangular edge list as 'i,j,w' text (0-based indices)."""
    ii, jj = np.nonzero(np.triu(g.weights, 1))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("i,j,w\n")
        for i, j in zip(ii, jj):
            handle.write(f"{i},{j},{g.weights[i, j]!r}\n")
