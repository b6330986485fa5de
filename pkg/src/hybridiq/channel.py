"""Hybrid operations in discrete Kraus-block form.

A channel holds, for each (target cell m, source cell n) pair, a finite list
of ``qdim_dst x qdim_src`` blocks.  Blocks act on cell masses, so the single
validity condition is per-source completeness: summing L^dag L over all
targets and blocks of a source cell gives the identity, independent of cell
weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classical import ClassicalSpace, MarkovKernel, validate_kernel
from .errors import (
    BadBasis,
    BadKernel,
    IncompleteChannel,
    IncompleteKraus,
    NotPSDCoefficients,
    NumericalFailure,
    ShapeMismatch,
    SpaceMismatch,
)
from .linalg import dagger
from .rand import random_complex
from .state import HybridState, new_state

COMPLETENESS_TOL = 1e-9
# above this many product blocks per cell pair, compose() stays lazy
LAZY_BLOCK_LIMIT = 10_000
COEFF_EIGENVALUE_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class HybridChannel:
    """Validated Kraus-block channel; construct through :func:`from_blocks`."""

    src_space: ClassicalSpace
    dst_space: ClassicalSpace
    qdim_src: int
    qdim_dst: int
    blocks: Mapping[tuple[int, int], np.ndarray]  # (m, n) -> stacked (k, q_dst, q_src)
    kind: str = field(default="blocks", compare=False)

    def __repr__(self) -> str:
        return (
            f"HybridChannel({self.src_space.size}x{self.qdim_src} -> "
            f"{self.dst_space.size}x{self.qdim_dst}, kind={self.kind!r})"
        )


@dataclass(frozen=True, eq=False)
class ChannelPipeline:
    """Lazy composition: stages applied left to right."""

    stages: tuple[HybridChannel, ...]

    @property
    def src_space(self) -> ClassicalSpace:
        return self.stages[0].src_space

    @property
    def dst_space(self) -> ClassicalSpace:
        return self.stages[-1].dst_space

    @property
    def qdim_src(self) -> int:
        return self.stages[0].qdim_src

    @property
    def qdim_dst(self) -> int:
        return self.stages[-1].qdim_dst


def completeness_defect(channel: HybridChannel) -> float:
    """Max entrywise deviation of sum_{m,a} L^dag L from identity over source cells."""
    worst = 0.0
    for n in range(channel.src_space.size):
        worst = max(worst, _source_defect(channel, n))
    return worst


def _source_defect(channel: HybridChannel, n: int) -> float:
    total = np.zeros((channel.qdim_src, channel.qdim_src), dtype=complex)
    for (m, n2), stack in channel.blocks.items():
        if n2 == n:
            total += np.einsum("aji,ajk->ik", stack.conj(), stack)
    return float(np.abs(total - np.eye(channel.qdim_src)).max())


def from_blocks(
    src_space: ClassicalSpace,
    dst_space: ClassicalSpace,
    qdim_src: int,
    qdim_dst: int,
    blocks,
    kind: str = "blocks",
    tol: float = COMPLETENESS_TOL,
) -> HybridChannel:
    """Build a channel from {(m, n): [L, ...]} and verify per-source completeness."""
    if qdim_src < 1 or qdim_dst < 1:
        raise ShapeMismatch("quantum dimensions must be positive")
    normalized: dict[tuple[int, int], np.ndarray] = {}
    for key in sorted(blocks):
        m, n = int(key[0]), int(key[1])
        if not (0 <= m < dst_space.size and 0 <= n < src_space.size):
            raise ShapeMismatch(f"block key ({m}, {n}) outside the cell grid")
        stack = np.asarray(blocks[key], dtype=complex)
        if stack.ndim == 2:
            stack = stack[None]
        if stack.ndim != 3 or stack.shape[1:] != (qdim_dst, qdim_src):
            raise ShapeMismatch(
                f"blocks at ({m}, {n}) have shape {stack.shape}, "
                f"expected (k, {qdim_dst}, {qdim_src})"
            )
        if stack.shape[0] == 0:
            continue
        if not np.all(np.isfinite(stack.real) & np.isfinite(stack.imag)):
            raise NumericalFailure(f"blocks at ({m}, {n}) have non-finite entries")
        stack = stack.copy()
        stack.flags.writeable = False
        normalized[(m, n)] = stack

    channel = HybridChannel(src_space, dst_space, qdim_src, qdim_dst, normalized, kind)
    for n in range(src_space.size):
        defect = _source_defect(channel, n)
        if defect > tol:
            raise IncompleteChannel(n, defect)
    return channel


def identity_channel(space: ClassicalSpace, qdim: int) -> HybridChannel:
    blocks = {(n, n): np.eye(qdim, dtype=complex)[None] for n in range(space.size)}
    return from_blocks(space, space, qdim, qdim, blocks)


def apply(channel: HybridChannel | ChannelPipeline, state: HybridState) -> HybridState:
    """Transform cell masses: sigma'_m = sum_{n,a} L_a(m,n) sigma_n L_a(m,n)^dag."""
    if isinstance(channel, ChannelPipeline):
        for stage in channel.stages:
            state = apply(stage, state)
        return state
    if channel.src_space != state.space or channel.qdim_src != state.qdim:
        raise SpaceMismatch(
            f"channel source ({channel.src_space.size} cells, qdim {channel.qdim_src}) "
            f"does not match state ({state.space.size} cells, qdim {state.qdim})"
        )
    out = np.zeros((channel.dst_space.size, channel.qdim_dst, channel.qdim_dst), dtype=complex)
    for (m, n), stack in channel.blocks.items():
        out[m] += np.einsum("aij,jk,alk->il", stack, state.masses[n], stack.conj())
    return new_state(channel.dst_space, out)


def _as_stages(channel) -> tuple[HybridChannel, ...]:
    return channel.stages if isinstance(channel, ChannelPipeline) else (channel,)


def compose(second, first):
    """Channel equal to "apply first, then second".

    Product blocks are materialized eagerly; when some cell pair would exceed
    LAZY_BLOCK_LIMIT blocks the result stays a :class:`ChannelPipeline`, which
    is apply-equivalent.
    """
    if first.dst_space != second.src_space or first.qdim_dst != second.qdim_src:
        raise SpaceMismatch("destination of the first channel does not match source of the second")
    stages = _as_stages(first) + _as_stages(second)
    if len(stages) > 2:
        return ChannelPipeline(stages)
    ch1, ch2 = stages

    per_pair: dict[tuple[int, int], int] = {}
    for (k, m2), stack2 in ch2.blocks.items():
        for (m1, n), stack1 in ch1.blocks.items():
            if m1 == m2:
                per_pair[(k, n)] = per_pair.get((k, n), 0) + stack2.shape[0] * stack1.shape[0]
    if per_pair and max(per_pair.values()) > LAZY_BLOCK_LIMIT:
        return ChannelPipeline(stages)

    merged: dict[tuple[int, int], list[np.ndarray]] = {}
    for (k, m2), stack2 in sorted(ch2.blocks.items()):
        for (m1, n), stack1 in sorted(ch1.blocks.items()):
            if m1 != m2:
                continue
            prod = np.einsum("bij,ajk->baik", stack2, stack1)
            merged.setdefault((k, n), []).append(prod.reshape(-1, ch2.qdim_dst, ch1.qdim_src))
    blocks = {key: np.concatenate(parts) for key, parts in merged.items()}
    return from_blocks(
        ch1.src_space, ch2.dst_space, ch1.qdim_src, ch2.qdim_dst, blocks, kind="composed"
    )


def non_interacting(kernel: MarkovKernel, kraus: Sequence[np.ndarray]) -> HybridChannel:
    """Channel of non-interacting subsystems: blocks sqrt(P[m,n]) * L_a.

    The classical marginal evolves by the kernel alone, the quantum marginal by
    the Kraus set alone, and product states stay product states.
    """
    report = validate_kernel(kernel)
    if not report.ok:
        raise BadKernel(report.message)
    stack = np.asarray(kraus, dtype=complex)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise IncompleteKraus(f"Kraus set must stack to (k, d, d), got shape {stack.shape}")
    q = stack.shape[1]
    defect = np.abs(np.einsum("aji,ajk->ik", stack.conj(), stack) - np.eye(q)).max()
    if defect > COMPLETENESS_TOL:
        raise IncompleteKraus(f"sum L^dag L deviates from identity by {defect:.3e}")

    p = kernel.matrix
    blocks = {
        (m, n): np.sqrt(p[m, n]) * stack
        for m in range(kernel.dst.size)
        for n in range(kernel.src.size)
        if p[m, n] > 0.0
    }
    return from_blocks(kernel.src, kernel.dst, q, q, blocks, kind="non_interacting")


def from_coeff_kernel(
    src_space: ClassicalSpace,
    dst_space: ClassicalSpace,
    basis: Sequence[np.ndarray],
    coeffs,
) -> HybridChannel:
    """Channel from an operator basis and per-cell-pair coefficient matrices.

    ``coeffs[m, n]`` is the matrix k_{ab}(m, n) weighting L_a sigma L_b^dag.
    Each Hermitized coefficient matrix must be PSD; its eigendecomposition
    yields the Kraus blocks sqrt(lambda) * sum_a v[a] L_a.  Eigenvalues below
    1e-12 of the largest are dropped (the factorization is not unique and
    minimal rank is not needed).
    """
    mats = np.asarray(basis, dtype=complex)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise BadBasis(f"basis must stack to (b, d, d), got shape {mats.shape}")
    d = mats.shape[1]
    b = mats.shape[0]
    if b != d * d:
        raise BadBasis(f"{b} basis elements cannot span the {d * d}-dimensional operator space")
    gram = mats.reshape(b, -1)
    if np.linalg.matrix_rank(gram, tol=1e-10 * max(1.0, float(np.abs(gram).max()))) < b:
        raise BadBasis("basis elements are linearly dependent")

    k = np.asarray(coeffs, dtype=complex)
    expected = (dst_space.size, src_space.size, b, b)
    if k.shape != expected:
        raise ShapeMismatch(f"coefficients have shape {k.shape}, expected {expected}")

    blocks: dict[tuple[int, int], np.ndarray] = {}
    for m in range(dst_space.size):
        for n in range(src_space.size):
            s = (k[m, n] + dagger(k[m, n])) / 2
            vals, vecs = np.linalg.eigh(s)
            scale = max(1.0, float(np.abs(vals).sum()))
            if vals[0] < -COMPLETENESS_TOL * scale:
                raise NotPSDCoefficients(m, n)
            keep = vals > COEFF_EIGENVALUE_CUTOFF * max(vals[-1], 0.0)
            if not keep.any():
                continue
            factors = np.sqrt(vals[keep])[:, None] * vecs[:, keep].T  # (g, b)
            blocks[(m, n)] = np.einsum("gb,bij->gij", factors, mats)
    return from_blocks(src_space, dst_space, d, d, blocks, kind="coeff_kernel")


def extend_with_ancilla(channel: HybridChannel, ancilla_dim: int) -> HybridChannel:
    """Tensor every block with the identity on a non-interacting ancilla."""
    if ancilla_dim < 1:
        raise ShapeMismatch("ancilla dimension must be positive")
    if ancilla_dim == 1:
        return channel
    eye = np.eye(ancilla_dim, dtype=complex)
    blocks = {
        key: np.stack([np.kron(block, eye) for block in stack])
        for key, stack in channel.blocks.items()
    }
    return from_blocks(
        channel.src_space,
        channel.dst_space,
        channel.qdim_src * ancilla_dim,
        channel.qdim_dst * ancilla_dim,
        blocks,
        kind=channel.kind,
    )


def random_channel(
    src_space: ClassicalSpace,
    dst_space: ClassicalSpace,
    qdim_src: int,
    qdim_dst: int,
    branching: int,
    seed,
) -> HybridChannel:
    """Seeded random channel; blocks are right-normalized per source cell."""
    if branching < 1:
        raise ShapeMismatch("branching must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_dst = dst_space.size
    blocks: dict[tuple[int, int], np.ndarray] = {}
    for n in range(src_space.size):
        for attempt in range(3):
            raw = random_complex(rng, (n_dst, branching, qdim_dst, qdim_src))
            total = np.einsum("maji,majk->ik", raw.conj(), raw)
            vals, vecs = np.linalg.eigh(total)
            if vals[0] > 1e-12 * vals[-1]:
                break
        else:
            raise NumericalFailure(f"normalizer for source cell {n} is singular")
        inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
        for m in range(n_dst):
            blocks[(m, n)] = raw[m] @ inv_sqrt
    return from_blocks(src_space, dst_space, qdim_src, qdim_dst, blocks)
