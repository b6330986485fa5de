"""Weighted discrete classical sample spaces and Markov kernels.

A space is an ordered list of cells with strictly positive reference-measure
weights.  A kernel is column-stochastic in the mass convention: ``P[m, n]`` is
the total probability mass moved from source cell ``n`` to target cell ``m``,
so column sums equal one regardless of the cell weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BadKernel, BadMap, BadRange, SpaceMismatch

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ClassicalSpace:
    """Finite cell list with positive weights; labels are metadata only."""

    weights: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise BadRange("a space needs at least one cell")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise BadRange("cell weights must be strictly positive and finite")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != w.size:
                raise BadRange(f"{len(labels)} labels for {w.size} cells")
            object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def __eq__(self, other) -> bool:
        # labels never affect computation, so they do not affect identity
        return isinstance(other, ClassicalSpace) and np.array_equal(self.weights, other.weights)

    def __repr__(self) -> str:
        return f"ClassicalSpace(size={self.size})"


def counting_space(n_cells: int, labels: tuple | None = None) -> ClassicalSpace:
    """Counting-measure space: ``n_cells`` cells of weight one."""
    if n_cells < 1:
        raise BadRange("need at least one cell")
    return ClassicalSpace(np.ones(n_cells), labels)


def discretize_interval(a: float, b: float, n_cells: int) -> ClassicalSpace:
    """Uniform partition of [a, b] into cells of Lebesgue weight (b - a) / n."""
    if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
        raise BadRange(f"invalid interval [{a}, {b}]")
    if n_cells < 1:
        raise BadRange("need at least one cell")
    edges = np.linspace(a, b, n_cells + 1)
    labels = tuple((float(edges[i]), float(edges[i + 1])) for i in range(n_cells))
    return ClassicalSpace(np.full(n_cells, (b - a) / n_cells), labels)


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """Column-stochastic transition matrix between two spaces."""

    src: ClassicalSpace
    dst: ClassicalSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.dst.size, self.src.size):
            raise BadKernel(
                f"kernel shape {m.shape} does not match spaces "
                f"({self.dst.size} x {self.src.size})"
            )
        report = validate_kernel(m)
        if not report.ok:
            raise BadKernel(report.message)
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class KernelReport:
    ok: bool
    column: int | None
    deviation: float
    message: str


def validate_kernel(kernel, tol: float = STOCHASTIC_TOL) -> KernelReport:
    """Check non-negativity and unit column sums; names the first bad column."""
    m = np.asarray(kernel.matrix if isinstance(kernel, MarkovKernel) else kernel, dtype=float)
    if m.ndim != 2 or m.size == 0:
        return KernelReport(False, None, np.inf, "kernel must be a non-empty 2-d matrix")
    if not np.all(np.isfinite(m)):
        return KernelReport(False, None, np.inf, "kernel has non-finite entries")
    neg = m < -tol
    if neg.any():
        col = int(np.argwhere(neg)[0][1])
        dev = float(-m[neg].min())
        return KernelReport(False, col, dev, f"negative entry ({dev:.3e}) in column {col}")
    sums = m.sum(axis=0)
    dev = np.abs(sums - 1.0)
    if dev.max() > tol:
        col = int(dev.argmax())
        return KernelReport(
            False, col, float(dev[col]), f"column {col} sums to {sums[col]!r}, expected 1"
        )
    return KernelReport(True, None, float(dev.max()), "ok")


def kernel_from_map(space: ClassicalSpace, phi: Callable[[int], int] | Sequence[int]) -> MarkovKernel:
    """Deterministic kernel sending all mass of cell n to cell phi(n)."""
    n = space.size
    targets = [phi(i) for i in range(n)] if callable(phi) else [int(phi[i]) for i in range(n)]
    matrix = np.zeros((n, n))
    for src, dst in enumerate(targets):
        if not 0 <= dst < n:
            raise BadMap(f"cell {src} maps to {dst}, outside 0..{n - 1}")
        matrix[dst, src] = 1.0
    return MarkovKernel(space, space, matrix)


def identity_kernel(space: ClassicalSpace) -> MarkovKernel:
    return MarkovKernel(space, space, np.eye(space.size))


def uniform_mixing_kernel(space: ClassicalSpace) -> MarkovKernel:
    """Complete classical mixing: every column is the uniform distribution."""
    n = space.size
    return MarkovKernel(space, space, np.full((n, n), 1.0 / n))


def compose_kernels(second: MarkovKernel, first: MarkovKernel) -> MarkovKernel:
    """Kernel of "apply first, then second"."""
    if first.dst != second.src:
        raise SpaceMismatch("destination space of the first kernel differs from source of the second")
    return MarkovKernel(first.src, second.dst, second.matrix @ first.matrix)
