"""Seeded random generators for matrices, effects, and stochastic kernels.

Every function takes an explicit ``numpy.random.Generator`` so callers control
determinism.  ``seeded_rng`` derives independent streams from a single 64-bit
seed by fixed label splitting: adding a new labelled stream never perturbs
the draws of existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def seeded_rng(seed: int, *key) -> np.random.Generator:
    """Generator for stream ``key`` (strings or ints) under a master seed."""
    words = tuple(
        zlib.crc32(part.encode()) if isinstance(part, str) else int(part) & 0xFFFFFFFF
        for part in key
    )
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=words))


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-like unitary from the QR decomposition of a Ginibre matrix."""
    q, r = np.linalg.qr(random_complex(rng, (dim, dim)))
    phases = np.diagonal(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_psd(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = random_complex(rng, (dim, rank or dim))
    return g @ g.conj().T


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    m = random_psd(dim, rng, rank)
    return m / np.trace(m).real


def random_effect(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Effect with eigenvalues drawn uniformly from [0, 1]."""
    u = random_unitary(dim, rng)
    return (u * rng.uniform(0.0, 1.0, dim)) @ u.conj().T


def random_probability_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    p = rng.uniform(0.1, 1.0, n)
    return p / p.sum()


def random_stochastic_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Column-stochastic matrix with entries bounded away from zero."""
    m = rng.uniform(0.05, 1.0, (rows, cols))
    return m / m.sum(axis=0)


def random_kraus_set(dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Kraus operators of a CPTP map, right-normalized so sum L^dag L = I."""
    raw = random_complex(rng, (count, dim, dim))
    total = np.einsum("aji,ajk->ik", raw.conj(), raw)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    return [k @ inv_sqrt for k in raw]
