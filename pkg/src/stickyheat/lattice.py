"""Cell lattice on [0, 1]: discrete Laplacian with ghost cells, discrete heat
kernel, and embeddings of particle states into functions of u."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .spectral import GridFunction

NEUMANN, DIRICHLET = 1, 0


def _check_alpha0(alpha0: int) -> int:
    if alpha0 not in (0, 1):
        raise ValueError(f"alpha0 must be 0 (Dirichlet) or 1 (Neumann), got {alpha0}")
    return int(alpha0)


@dataclass(frozen=True)
class LatticeState:
    """Cell values x_1..x_n; ``deficit`` is the clamped overshoot still owed (empty = none)."""

    x: tuple
    alpha0: int = NEUMANN
    deficit: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in np.ravel(self.x)))
        object.__setattr__(self, "deficit", tuple(float(v) for v in np.ravel(self.deficit)))
        _check_alpha0(self.alpha0)
        if not self.x:
            raise ValueError("LatticeState needs n >= 1 cells")
        if self.deficit and len(self.deficit) != len(self.x):
            raise ValueError("deficit must have one entry per cell")

    def deficit_array(self) -> np.ndarray:
        return np.asarray(self.deficit, dtype=float) if self.deficit else np.zeros(self.n)

    @property
    def n(self) -> int:
        return len(self.x)

    def array(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)


def laplacian(x: np.ndarray, alpha0: int) -> np.ndarray:
    """n^2 (x_{k+1} + x_{k-1} - 2 x_k) along the last axis, ghosts x_0 = a0 x_1, x_{n+1} = a0 x_n."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    left = np.empty_like(x)
    right = np.empty_like(x)
    left[..., 1:] = x[..., :-1]
    left[..., 0] = alpha0 * x[..., 0]
    right[..., :-1] = x[..., 1:]
    right[..., -1] = alpha0 * x[..., -1]
    return (n * n) * (right + left - 2.0 * x)


def laplacian_matrix(n: int, alpha0: int) -> np.ndarray:
    return laplacian(np.eye(n), _check_alpha0(alpha0)).T


def _laplacian_bands(n: int, alpha0: int) -> tuple[np.ndarray, np.ndarray]:
    diag = np.full(n, -2.0 * n * n)
    diag[0] += alpha0 * n * n
    diag[-1] += alpha0 * n * n
    off = np.full(n - 1, float(n * n))
    return diag, off


def apply_laplacian(state: LatticeState) -> np.ndarray:
    return laplacian(state.array(), state.alpha0)


def apply_tilde_delta(phi: GridFunction, alpha0: int) -> GridFunction:
    """Discrete second derivative of the cell averages of phi.

    This is the adjoint of the particle Laplacian under <., .>_{L2}: for any step
    function X^n, <X^n, tilde_delta(phi)> = <Delta^n x, phi> cellwise.
    """
    return GridFunction(tuple(laplacian(phi.array(), _check_alpha0(alpha0))))


@dataclass(frozen=True)
class HeatKernel:
    """Eigen-decomposition of (1/2) Delta^n; p(t) = n V exp(L t) V^T."""

    n: int
    alpha0: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def matrix(self, t: float) -> np.ndarray:
        """The fundamental solution p^n_{k,l}(t), with p(0) = n I."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        V = self.eigenvectors
        return self.n * (V * np.exp(self.eigenvalues * t)) @ V.T

    def apply(self, t: float, v) -> np.ndarray:
        """(1/n) p(t) v, the semigroup exp(t Delta^n / 2) acting on cell data."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        v = np.asarray(v, dtype=float)
        if t == 0:
            return v.copy()
        V = self.eigenvectors
        return V @ (np.exp(self.eigenvalues * t) * (V.T @ v))


def heat_kernel_build(n: int, alpha0: int) -> HeatKernel:
    if n < 1:
        raise ValueError("n must be >= 1")
    alpha0 = _check_alpha0(alpha0)
    diag, off = _laplacian_bands(n, alpha0)
    if n == 1:
        w, V = np.array([0.5 * diag[0]]), np.ones((1, 1))
    else:
        w, V = eigh_tridiagonal(0.5 * diag, 0.5 * off)
    if alpha0 == NEUMANN:
        # the null mode is exactly constant; remove roundoff so p(t) -> 1
        i0 = int(np.argmax(w))
        w = w.copy()
        w[i0] = 0.0
        V = V.copy()
        V[:, i0] = 1.0 / np.sqrt(n)
    w = np.minimum(w, 0.0)
    return HeatKernel(n, alpha0, w, V)


def heat_kernel_apply(kernel: HeatKernel, t: float, v) -> np.ndarray:
    return kernel.apply(t, v)


def polygonal_interpolate(state: LatticeState, u):
    """Continuous piecewise-linear field (un-k+1) x_k + (k-nu) x_{k-1} on cell k.

    u = 1 is taken by left continuity; x_0 = alpha0 * x_1.
    """
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("u must lie in [0, 1]")
    x = state.array()
    n = state.n
    ext = np.concatenate([[state.alpha0 * x[0]], x])
    k = np.minimum(np.floor(u * n).astype(int) + 1, n)
    out = (u * n - k + 1) * ext[k] + (k - n * u) * ext[k - 1]
    return out if out.ndim else float(out)


def step_embedding(state: LatticeState, u):
    """X^n(u) = x_k for u in [(k-1)/n, k/n), x_n at u = 1."""
    return GridFunction(state.x)(u)


class ThetaSolver:
    """Solves (I - c Delta^n) y = r for a batch of right-hand sides.

    Thomas algorithm with the elimination factors precomputed. All arithmetic
    is elementwise over the leading (path) axis, so each path's result is
    independent of how many paths share the batch.
    """

    def __init__(self, n: int, alpha0: int, c: float):
        self.n = n
        self.trivial = c == 0.0
        diag, off = _laplacian_bands(n, alpha0)
        b = 1.0 - c * diag
        a = -c * off  # symmetric: sub == super
        self.sub = a
        cp = np.zeros(max(n - 1, 0))
        inv = np.zeros(n)
        inv[0] = 1.0 / b[0]
        for i in range(n - 1):
            cp[i] = a[i] * inv[i]
            inv[i + 1] = 1.0 / (b[i + 1] - a[i] * cp[i])
        self.cp = cp
        self.inv = inv

    def solve(self, r: np.ndarray) -> np.ndarray:
        if self.trivial:
            return r
        n = self.n
        y = np.empty_like(r)
        y[..., 0] = r[..., 0] * self.inv[0]
        for i in range(1, n):
            y[..., i] = (r[..., i] - self.sub[i - 1] * y[..., i - 1]) * self.inv[i]
        for i in range(n - 2, -1, -1):
            y[..., i] -= self.cp[i] * y[..., i + 1]
        return y
