"""Shared model structures: hyperparameters, the class-structured dictionary,
and the mutable training state threaded through the update phases."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DimensionError, ParameterError
from .fisher import CodingMatrix, Range
from .graph import SupervisedGraph


@dataclass
class Hyperparameters:
    """All scalar weights and iteration limits.

    lambda1/lambda2 weigh the sparsity and discriminant terms, alpha the
    nuclear norm on sub-dictionaries, delta the graph term, eta the
    discriminant ridge, beta/lam the error and coupling weights inside the
    sub-dictionary solver, gamma the projection blend step, xi/omega the
    query coding penalty and mean-deviation weight of the classifier.
    """

    lambda1: float = 0.05
    lambda2: float = 0.05
    eta: float = 1.0
    alpha: float = 1.0
    delta: float = 1.0
    beta: float = 1.0
    lam: float = 1.0
    gamma: float = 0.1
    xi: float = 0.01
    omega: float = 0.001
    dim: int = 8
    atoms_per_class: int = 8
    k_neighbors: int | None = None
    bandwidth: float | str = "auto"
    outer_iters: int = 10
    inner_iters: int = 50
    max_alm_iters: int = 500
    seed: int = 0
    fixed_projection: bool = False
    eig_select: str = "smallest"

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "eta", "alpha", "delta", "beta", "lam", "xi", "omega"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ParameterError("gamma must lie in (0, 1]")
        if self.atoms_per_class < 1:
            raise ParameterError("atoms_per_class must be >= 1")
        if self.outer_iters < 1:
            raise ParameterError("outer_iters must be >= 1")
        if self.inner_iters < 1 or self.max_alm_iters < 1:
            raise ParameterError("iteration caps must be >= 1")
        if self.eig_select not in ("smallest", "largest"):
            raise ParameterError("eig_select must be 'smallest' or 'largest'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StructuredDictionary:
    """Dictionary whose atom columns are partitioned by class."""

    atoms: np.ndarray
    atom_ranges: list[Range]

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=np.float64)
        if self.atoms.ndim != 2:
            raise DimensionError("dictionary must be a 2-D matrix")
        pos = 0
        for start, stop in self.atom_ranges:
            if start != pos or stop <= start:
                raise DimensionError("atom ranges must partition the columns contiguously")
            pos = stop
        if pos != self.atoms.shape[1]:
            raise DimensionError("atom ranges do not cover all atoms")

    @property
    def n_classes(self) -> int:
        return len(self.atom_ranges)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def sub(self, i: int) -> np.ndarray:
        """D_i: the atoms dedicated to class i (view)."""
        start, stop = self.atom_ranges[i]
        return self.atoms[:, start:stop]

    def copy(self) -> "StructuredDictionary":
        return StructuredDictionary(self.atoms.copy(), list(self.atom_ranges))


@dataclass
class ModelState:
    """Everything the alternating update phases read and write.

    Samples are stored class-contiguously (columns sorted by label) so the
    coding matrix's column partition lines up with the dataset.
    """

    X: np.ndarray
    labels: np.ndarray
    col_ranges: list[Range] = field(repr=False)
    P: np.ndarray = field(repr=False)
    D: StructuredDictionary = field(repr=False)
    A: CodingMatrix = field(repr=False)
    graph: SupervisedGraph = field(repr=False)
    hp: Hyperparameters = field(repr=False)

    @property
    def n_classes(self) -> int:
        return len(self.col_ranges)

    def class_samples(self, i: int) -> np.ndarray:
        start, stop = self.col_ranges[i]
        return self.X[:, start:stop]

    def reduced(self) -> np.ndarray:
        """P^T X for the current projection."""
        return self.P.T @ self.X

    def reduced_class(self, i: int) -> np.ndarray:
        return self.P.T @ self.class_samples(i)
