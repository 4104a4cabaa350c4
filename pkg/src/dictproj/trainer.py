"""Outer alternating loop: coefficients, sub-dictionaries, projection.

The full objective being tracked is

    sum_i ( ||P^T X_i - D A_i||^2 + ||P^T X_i - D_i A_i^i||^2
            + sum_{j!=i} ||D_j A_i^j||^2 )
    + lambda1 ||A||_1
    + lambda2 ( tr(S_W - S_B) + eta ||A||_F^2 )
    + alpha sum_i ||D_i||_*
    + delta tr(P^T X L_hat X^T P)

subject to P^T P = I and unit-norm atoms. Each outer iteration runs one
coefficient sweep, one dictionary sweep, and one blended projection update,
recording the objective after the full iteration. The supervised graph is
built once from the raw training data and frozen.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .coder import update_all_codes
from .data import LabeledDataset
from .dict_update import sweep_dictionary
from .errors import NumericError, ParameterError
from .fisher import CodingMatrix, scatter_between, scatter_within
from .graph import SupervisedGraph, build_graph
from .model import Hyperparameters, ModelState, StructuredDictionary
from .prox import l1_norm, nuclear_norm
from .proj_update import assemble_stacked_system, blend_projection, pca_projection, projection_target

log = logging.getLogger(__name__)

EARLY_STOP_REL = 1e-4
MODEL_FORMAT_VERSION = 1


@dataclass
class TrainedModel:
    """Learned projection, dictionary, per-class mean codes, and diagnostics.

    ``scale`` is the global factor the training columns were divided by;
    queries must be divided by it before projection so the scalar weights
    keep their meaning regardless of the raw data's magnitude.
    """

    P: np.ndarray
    D: StructuredDictionary
    mean_codes: np.ndarray  # one column per class, length = total atoms
    hp: Hyperparameters
    objective_trace: np.ndarray
    scale: float
    state: ModelState = field(repr=False)

    @property
    def n_classes(self) -> int:
        return self.D.n_classes


def objective(state: ModelState) -> float:
    """Evaluate the full training objective at the current state."""
    hp = state.hp
    Y = state.reduced()
    value = 0.0
    for i in range(state.n_classes):
        cstart, cstop = state.A.col_ranges[i]
        Y_i = Y[:, cstart:cstop]
        A_i = state.A.block(i)
        value += float(np.sum((Y_i - state.D.atoms @ A_i) ** 2))
        value += float(np.sum((Y_i - state.D.sub(i) @ state.A.sub_block(i, i)) ** 2))
        for j in range(state.n_classes):
            if j != i:
                value += float(np.sum((state.D.sub(j) @ state.A.sub_block(i, j)) ** 2))
    value += hp.lambda1 * l1_norm(state.A.values)
    value += hp.lambda2 * (
        float(np.trace(scatter_within(state.A)) - np.trace(scatter_between(state.A)))
        + hp.eta * float(np.sum(state.A.values**2))
    )
    if hp.alpha > 0:
        value += hp.alpha * sum(nuclear_norm(state.D.sub(i)) for i in range(state.n_classes))
    if hp.delta > 0:
        value += hp.delta * float(
            np.einsum("di,ij,dj->", Y, state.graph.laplacian_hat, Y)
        )
    return value


def _class_ordered(ds):
    order = np.argsort(ds.labels, kind="stable")
    X = ds.samples[:, order]
    labels = ds.labels[order]
    counts = np.bincount(labels, minlength=int(labels.max()) + 1)[1:]
    ranges, pos = [], 0
    for c in counts:
        ranges.append((pos, pos + int(c)))
        pos += int(c)
    return X, labels, ranges


def _init_dictionary(Y, col_ranges, atoms_per_class, rng):
    """Seed atoms from projected class samples, unit-normalized; tiny jitter
    disambiguates recycled columns when a class is smaller than its atom count."""
    blocks = []
    for start, stop in col_ranges:
        n_i = stop - start
        if n_i >= atoms_per_class:
            picked = rng.choice(n_i, size=atoms_per_class, replace=False)
            block = Y[:, start + picked]
        else:
            picked = rng.choice(n_i, size=atoms_per_class, replace=True)
            block = Y[:, start + picked] + 1e-3 * rng.normal(size=(Y.shape[0], atoms_per_class))
        norms = np.linalg.norm(block, axis=0)
        norms[norms == 0] = 1.0
        blocks.append(block / norms)
    atoms = np.concatenate(blocks, axis=1)
    ranges = [(i * atoms_per_class, (i + 1) * atoms_per_class) for i in range(len(col_ranges))]
    return StructuredDictionary(atoms, ranges)


def fit(ds, hp: Hyperparameters) -> TrainedModel:
    """Train a model on a labeled dataset.

    Initialization: projection from PCA, dictionary from projected class
    samples, coefficients from a ridge solve. Each outer iteration then runs
    the three update phases; training stops early once the relative objective
    change falls below 1e-4.
    """
    if hp.dim >= ds.dim:
        raise ParameterError(f"dim must be below the feature dimension {ds.dim}")
    if int(ds.class_counts.min()) < 1:
        raise ParameterError("every class needs at least one training sample")

    X, labels, col_ranges = _class_ordered(ds)
    # one global scale factor keeps the solver and the scalar weights at
    # unit data magnitude no matter how the raw features are scaled
    scale = float(np.mean(np.linalg.norm(X, axis=0)))
    scale = scale if scale > 0 else 1.0
    X = X / scale
    rng = np.random.default_rng(hp.seed)
    graph = build_graph(
        LabeledDataset(X, labels, max_value=ds.max_value), k=hp.k_neighbors, t=hp.bandwidth
    )
    P = pca_projection(X, hp.dim)
    Y = P.T @ X
    D = _init_dictionary(Y, col_ranges, hp.atoms_per_class, rng)
    gram = D.atoms.T @ D.atoms + 0.01 * np.eye(D.n_atoms)
    A = CodingMatrix(np.linalg.solve(gram, D.atoms.T @ Y), list(D.atom_ranges), col_ranges)
    state = ModelState(
        X=X, labels=labels, col_ranges=col_ranges, P=P, D=D, A=A, graph=graph, hp=hp
    )

    trace = [objective(state)]
    phase = "init"
    try:
        for iteration in range(hp.outer_iters):
            phase = f"codes/iteration {iteration + 1}"
            update_all_codes(state)
            phase = f"dict/iteration {iteration + 1}"
            sweep_dictionary(state)
            if not hp.fixed_projection:
                phase = f"proj/iteration {iteration + 1}"
                d_hat, z_hat, column_index = assemble_stacked_system(state.D, state.A)
                target = projection_target(
                    state.P,
                    state.X,
                    d_hat,
                    z_hat,
                    state.graph.laplacian_hat,
                    hp.delta,
                    column_index,
                    select=hp.eig_select,
                )
                state.P = blend_projection(state.P, target, hp.gamma)
            trace.append(objective(state))
            log.debug("outer iteration %d objective %.6g", iteration + 1, trace[-1])
            if abs(trace[-1] - trace[-2]) < EARLY_STOP_REL * max(abs(trace[-2]), 1e-30):
                break
    except NumericError as exc:
        raise NumericError(f"{exc} (phase: {phase})") from exc

    mean_codes = np.stack(
        [state.A.block(i).mean(axis=1) for i in range(state.n_classes)], axis=1
    )
    return TrainedModel(
        P=state.P,
        D=state.D,
        mean_codes=mean_codes,
        hp=hp,
        objective_trace=np.asarray(trace),
        scale=scale,
        state=state,
    )


def save_model(model: TrainedModel, path) -> None:
    """Persist the model plus enough training state to recompute the objective."""
    np.savez(
        path,
        format_version=np.array(MODEL_FORMAT_VERSION),
        P=model.P,
        atoms=model.D.atoms,
        atom_ranges=np.asarray(model.D.atom_ranges, dtype=np.int64),
        mean_codes=model.mean_codes,
        objective_trace=model.objective_trace,
        scale=np.array(model.scale),
        hp_json=np.frombuffer(json.dumps(model.hp.to_dict()).encode(), dtype=np.uint8),
        X=model.state.X,
        labels=model.state.labels,
        col_ranges=np.asarray(model.state.col_ranges, dtype=np.int64),
        A=model.state.A.values,
        graph_weights=model.state.graph.weights,
        graph_laplacian=model.state.graph.laplacian_hat,
        graph_k=np.array(model.state.graph.k),
        graph_t=np.array(model.state.graph.t),
    )


def load_model(path) -> TrainedModel:
    with np.load(path) as blob:
        version = int(blob["format_version"])
        if version != MODEL_FORMAT_VERSION:
            raise ParameterError(f"unsupported model format version {version}")
        hp_dict = json.loads(bytes(blob["hp_json"]).decode())
        hp_dict["k_neighbors"] = (
            None if hp_dict["k_neighbors"] is None else int(hp_dict["k_neighbors"])
        )
        hp = Hyperparameters(**hp_dict)
        atom_ranges = [tuple(r) for r in blob["atom_ranges"].tolist()]
        col_ranges = [tuple(r) for r in blob["col_ranges"].tolist()]
        D = StructuredDictionary(blob["atoms"], atom_ranges)
        A = CodingMatrix(blob["A"], atom_ranges, col_ranges)
        graph = SupervisedGraph(
            weights=blob["graph_weights"],
            laplacian_hat=blob["graph_laplacian"],
            k=int(blob["graph_k"]),
            t=float(blob["graph_t"]),
        )
        state = ModelState(
            X=blob["X"],
            labels=blob["labels"],
            col_ranges=col_ranges,
            P=blob["P"],
            D=D,
            A=A,
            graph=graph,
            hp=hp,
        )
        return TrainedModel(
            P=state.P,
            D=D,
            mean_codes=blob["mean_codes"],
            hp=hp,
            objective_trace=blob["objective_trace"],
            scale=float(blob["scale"]),
            state=state,
        )
