"""Deterministic numerical primitives shared by every other module.

Bessel evaluation, seeded complex Gaussian sampling on independent
substreams, and the small linear-algebra surface (SVD, Hermitian solve,
log-det) the simulator needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "RngStream",
    "bessel_j0",
    "bessel_j1",
    "sample_complex_gaussian",
    "svd",
    "hermitian_solve",
    "logdet_hermitian",
    "check_finite",
]


def check_finite(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Reject NaN/Inf entries; returns the array unchanged."""
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def bessel_j0(x: float) -> float:
    """Zero-order Bessel function of the first kind, J0(x)."""
    if not math.isfinite(x):
        raise ValueError(f"bessel_j0: non-finite argument {x!r}")
    return float(special.j0(x))


def bessel_j1(x: float) -> float:
    """First-order Bessel function of the first kind, J1(x) = -d/dx J0(x)."""
    if not math.isfinite(x):
        raise ValueError(f"bessel_j1: non-finite argument {x!r}")
    return float(special.j1(x))


@dataclass(frozen=True)
class RngStream:
    """Counter-based substream selector.

    The same (master_seed, stream_id) pair always yields the same sample
    sequence, independently of platform and of how many other streams
    exist.  Distinct stream_ids give statistically independent substreams
    (numpy SeedSequence spawning keys).
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_id,))
        )

    def substream(self, stream_id: int) -> "RngStream":
        """Derive a sibling stream off the same master seed."""
        return RngStream(self.master_seed, stream_id)


def sample_complex_gaussian(
    rows: int,
    cols: int,
    variance: float,
    stream: RngStream | np.random.Generator,
) -> np.ndarray:
    """Draw an i.i.d. circularly-symmetric complex Gaussian matrix.

    ``variance`` is the per-entry E|x|^2 (the CN(0, sigma^2) convention);
    real and imaginary parts carry variance/2 each.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    rng = stream.generator() if isinstance(stream, RngStream) else stream
    if variance == 0.0:
        # still consume no randomness: degenerate distribution
        return np.zeros((rows, cols), dtype=complex)
    scale = math.sqrt(variance / 2.0)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return scale * (re + 1j * im)


def sample_cn(shape, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Batched CN(0, variance) draw of arbitrary shape (internal helper)."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0.0:
        return np.zeros(shape, dtype=complex)
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def svd(m: np.ndarray):
    """Full SVD m = U @ diag(gammas) @ V^+ with gammas sorted descending.

    Returns (U, gammas, V); note V, not V^+, so the precoder can use V
    directly.
    """
    m = check_finite(m, "svd input")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return u, s, vh.conj().T


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b for Hermitian positive-definite a."""
    return np.linalg.solve(a, b)


def logdet_hermitian(a: np.ndarray) -> float:
    """log2 det(a) for Hermitian positive-definite a (batched ok)."""
    sign, logdet = np.linalg.slogdet(a)
    return logdet / math.log(2.0)
