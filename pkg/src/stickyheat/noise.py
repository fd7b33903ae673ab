"""Correlated Wiener increments (dw_1^n, ..., dw_n^n) with covariance q^n dt.

Normals come from numpy's counter-based Philox generator. The key holds
(master_seed, path) and the counter holds (offset, chunk, stream). Step s of a
path reads row ``s % chunk_len`` of chunk ``s // chunk_len``, so any (path,
step) can be regenerated on its own, and the result never depends on which
worker produced it or in what order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .spectral import EigenSpec, q_matrix

log = logging.getLogger(__name__)

U64 = 2**64
FACTOR_REJECT_TOL = 1e-8
CLIP_WARN_TOL = 1e-8


@dataclass(frozen=True)
class SeedPolicy:
    master_seed: int
    chunk_len: int = 256

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < U64):
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.chunk_len < 1:
            raise ValueError("chunk_len must be positive")

    def generator(self, path: int, chunk: int, stream: int = 0) -> np.random.Generator:
        if path < 0 or chunk < 0 or stream < 0:
            raise ValueError("path, chunk and stream must be nonnegative")
        key = int(self.master_seed) + (int(path) << 64)
        counter = (int(chunk) << 64) + (int(stream) << 128)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def normals(self, path: int, chunk: int, width: int, stream: int = 0) -> np.ndarray:
        """Standard normals for one chunk of steps, shape (chunk_len, width)."""
        return self.generator(path, chunk, stream).standard_normal((self.chunk_len, width))

    def step_normals(self, path: int, step: int, width: int, stream: int = 0) -> np.ndarray:
        chunk, row = divmod(int(step), self.chunk_len)
        return self.normals(path, chunk, width, stream)[row]

    def block(self, paths, step0: int, nsteps: int, width: int, stream: int = 0) -> np.ndarray:
        """Normals for steps [step0, step0 + nsteps) of each path: (P, nsteps, width)."""
        paths = np.atleast_1d(paths)
        out = np.empty((paths.size, nsteps, width))
        if nsteps == 0 or width == 0:
            return out
        c0 = step0 // self.chunk_len
        c1 = (step0 + nsteps - 1) // self.chunk_len
        for i, p in enumerate(paths):
            rows = np.concatenate([self.normals(int(p), c, width, stream) for c in range(c0, c1 + 1)])
            off = step0 - c0 * self.chunk_len
            out[i] = rows[off:off + nsteps]
        return out

    def to_json(self) -> dict:
        return {"master_seed": int(self.master_seed)}


@dataclass(frozen=True)
class NoiseFactor:
    """Matrix F (n x m) with F F^T = q^n; increments are F xi sqrt(dt)."""

    n: int
    backend: str
    matrix: np.ndarray

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def covariance(self) -> np.ndarray:
        return self.matrix @ self.matrix.T

    def combine(self, xi: np.ndarray) -> np.ndarray:
        """F xi over the last axis, accumulated column by column.

        Deliberately elementwise (no BLAS) so a path's bits do not depend on
        the batch it was computed in.
        """
        out = np.zeros(xi.shape[:-1] + (self.n,))
        for j in range(self.width):
            col = self.matrix[:, j]
            if np.any(col):
                out += xi[..., j, None] * col
        return out


def factor_from_covariance(q: np.ndarray) -> NoiseFactor:
    q = np.asarray(q, dtype=float)
    q = 0.5 * (q + q.T)
    scale = max(np.max(np.abs(q)), 0.0)
    w, V = np.linalg.eigh(q)
    if scale > 0 and w.min() < -FACTOR_REJECT_TOL * scale:
        raise ValueError(f"matrix is not a covariance: min eigenvalue {w.min():.3e}")
    clipped = -np.sum(w[w < 0])
    if clipped > CLIP_WARN_TOL * max(np.trace(q), 0.0) and clipped > 0:
        log.warning("clipped %.3e of negative eigenvalue mass from q", clipped)
    F = V * np.sqrt(np.clip(w, 0.0, None))
    return NoiseFactor(q.shape[0], "factor", F)


def build_noise_factor(spec: EigenSpec, n: int, backend: str = "spectral") -> NoiseFactor:
    """Factor realizing covariance q^n.

    ``spectral``: B[k, j] = sqrt(n) mu_j <pi_k, e_j>, exact by construction.
    ``factor``: symmetric square root of the assembled q^n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if backend == "spectral":
        B = np.sqrt(n) * spec.cell_matrix(n) * spec.mus
        return NoiseFactor(n, "spectral", B.reshape(n, spec.J))
    if backend == "factor":
        return factor_from_covariance(q_matrix(spec, n))
    raise ValueError(f"unknown noise backend {backend!r}")


def sample_increments(factor: NoiseFactor, seeds: SeedPolicy, path: int, step: int, dt: float,
                      stream: int = 0) -> np.ndarray:
    """One increment vector of (w_1^n, ..., w_n^n) over a step of length dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    xi = seeds.step_normals(path, step, factor.width, stream)
    return factor.combine(xi) * np.sqrt(dt)
