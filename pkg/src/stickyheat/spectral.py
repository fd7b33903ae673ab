"""Covariance operator Q in eigen-decomposed form and its lattice discretizations.

Q is stored as a finite list of eigenpairs (mu_j, e_j). Everything the particle
system needs from Q, the noise intensity chi^2, the cell covariance matrix q^n,
the masked cell averages of lambda, and the quadratic-variation density of the
martingale part, is computed here from cell integrals <e_j, pi_k^n>.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .functions import FunctionSpec, basis_from_json, cell_integrals, piecewise_integral

PSD_ZERO_TOL = 1e-14
ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class GridFunction:
    """Step function sum_k values[k] * pi_k^n (values are cell averages)."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in np.ravel(self.values)))
        if len(self.values) < 1:
            raise ValueError("GridFunction needs at least one cell")

    @property
    def n(self) -> int:
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        k = np.clip(np.floor(u * self.n).astype(int), 0, self.n - 1)
        return self.array()[k]

    @property
    def breaks(self) -> tuple:
        return tuple(np.arange(1, self.n) / self.n)

    def inner(self, other: "GridFunction") -> float:
        """L2 inner product of two step functions on the same lattice."""
        if other.n != self.n:
            raise ValueError(f"cell count mismatch: {self.n} vs {other.n}")
        return float(np.dot(self.array(), other.array()) / self.n)

    @classmethod
    def project(cls, fn: Callable, n: int) -> "GridFunction":
        """pr^n fn: the cell averages n <fn, pi_k^n>."""
        if hasattr(fn, "antiderivative"):
            return cls(tuple(n * cell_integrals(fn, n)))
        edges = np.arange(n + 1) / n
        brk = getattr(fn, "breaks", ())
        return cls(tuple(n * piecewise_integral(fn, edges[k], edges[k + 1], brk) for k in range(n)))

    def to_json(self) -> dict:
        return {"n": self.n, "values": list(self.values)}

    @classmethod
    def from_json(cls, obj: dict) -> "GridFunction":
        g = cls(tuple(obj["values"]))
        if "n" in obj and int(obj["n"]) != g.n:
            raise ValueError(f"GridFunction n={obj['n']} but {g.n} values given")
        return g


@dataclass(frozen=True)
class EigenSpec:
    """Finite eigen-decomposition of the covariance operator Q."""

    pairs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pairs = tuple((float(mu), fn) for mu, fn in self.pairs)
        for mu, _ in pairs:
            if not mu >= 0.0:
                raise ValueError(f"eigenvalues must be nonnegative, got {mu}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def J(self) -> int:
        return len(self.pairs)

    @property
    def mus(self) -> np.ndarray:
        return np.array([mu for mu, _ in self.pairs], dtype=float)

    @property
    def fns(self) -> list:
        return [fn for _, fn in self.pairs]

    def gram(self) -> np.ndarray:
        """Gram matrix of the eigenfunctions by piecewise Gauss-Legendre quadrature."""
        fns = self.fns
        brk = sorted({b for fn in fns for b in fn.breaks})
        freq = max([getattr(fn, "j", 1) for fn in fns] + [1])
        panels = 1 + freq // 4
        G = np.empty((self.J, self.J))
        for i, fi in enumerate(fns):
            for j in range(i, self.J):
                fj = fns[j]
                G[i, j] = G[j, i] = piecewise_integral(lambda u: fi(u) * fj(u), 0.0, 1.0, brk, panels)
        return G

    def orthonormality_defect(self) -> float:
        if self.J == 0:
            return 0.0
        return float(np.max(np.abs(self.gram() - np.eye(self.J))))

    def cell_matrix(self, n: int) -> np.ndarray:
        """C[k, j] = <e_j, pi_k^n>, shape (n, J)."""
        if n < 1:
            raise ValueError("cell count n must be >= 1")
        if self.J == 0:
            return np.zeros((n, 0))
        return np.column_stack([cell_integrals(fn, n) for fn in self.fns])

    def to_json(self) -> dict:
        return {"pairs": [{"mu": mu, "fn": fn.to_json()} for mu, fn in self.pairs]}

    @classmethod
    def from_json(cls, obj: dict) -> "EigenSpec":
        return cls(tuple((float(p["mu"]), basis_from_json(p["fn"])) for p in obj.get("pairs", [])))


LambdaLike = Union[GridFunction, FunctionSpec, Callable, float]


def _as_callable(lam: LambdaLike) -> Callable:
    if isinstance(lam, (int, float)):
        return FunctionSpec.constant(float(lam))
    return lam


def chi_squared(spec: EigenSpec, u):
    """Pointwise noise intensity sum_k mu_k^2 e_k(u)^2."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise ValueError("u must lie in [0, 1]")
    out = np.zeros_like(u)
    for mu, fn in spec.pairs:
        out = out + mu * mu * fn(u) ** 2
    return out if out.ndim else float(out)


def check_drift_condition(spec: EigenSpec, lam: LambdaLike, n_points: int | None = None,
                          tol: float = 1e-12) -> tuple[bool, np.ndarray]:
    """Check that lambda vanishes wherever chi does, on a midpoint grid.

    Returns ``(ok, violations)`` where ``violations`` are the grid points with
    chi^2 == 0 and lambda > tol. Default resolution is 10 * 100 * max(J, 1).
    """
    if n_points is None:
        n_points = 10 * 100 * max(spec.J, 1)
    u = (np.arange(n_points) + 0.5) / n_points
    chi2 = np.asarray(chi_squared(spec, u))
    lam_u = np.asarray(_as_callable(lam)(u), dtype=float)
    bad = (chi2 <= 0.0) & (lam_u > tol)
    return (not bool(bad.any())), u[bad]


def q_matrix(spec: EigenSpec, n: int) -> np.ndarray:
    """q^n_{k,l} = n <Q pi_k, Q pi_l> = n sum_j mu_j^2 <e_j,pi_k><e_j,pi_l>."""
    C = spec.cell_matrix(n)
    q = n * (C * spec.mus**2) @ C.T
    return 0.5 * (q + q.T)


def cell_means(lam: LambdaLike, n: int) -> np.ndarray:
    """n <lambda, pi_k^n> per cell (exact for descriptors, quadrature otherwise)."""
    if isinstance(lam, GridFunction):
        if lam.n == n:
            return lam.array()
    return GridFunction.project(_as_callable(lam), n).array()


def discretize_lambda(spec: EigenSpec, lam: LambdaLike, n: int) -> GridFunction:
    """Cell averages of lambda, zeroed on cells that receive no noise."""
    means = cell_means(lam, n)
    qdiag = np.diag(q_matrix(spec, n))
    return GridFunction(tuple(np.where(qdiag > PSD_ZERO_TOL, means, 0.0)))


def l2_distance(a: GridFunction, lam: LambdaLike) -> float:
    """||a - lambda||_{L2[0,1]} with a a step function, cellwise Gauss-Legendre."""
    f = _as_callable(lam)
    n = a.n
    edges = np.arange(n + 1) / n
    brk = getattr(f, "breaks", ())
    vals = a.array()
    total = 0.0
    for k in range(n):
        total += piecewise_integral(lambda u, c=vals[k]: (f(u) - c) ** 2, edges[k], edges[k + 1], brk)
    return float(np.sqrt(total))


def lambda_convergence_table(spec: EigenSpec, lam: LambdaLike,
                             n_list: Sequence[int]) -> list[tuple[int, float]]:
    return [(int(n), l2_distance(discretize_lambda(spec, lam, n), lam)) for n in n_list]


def qv_target_density(spec: EigenSpec, indicator_cells, phi) -> float:
    """||Q(1_{X>0} phi)||^2 = sum_j mu_j^2 <1 phi, e_j>^2.

    ``indicator_cells`` is a 0/1 vector (or GridFunction) over the n cells; ``phi``
    is a GridFunction on the same lattice or a basis function.
    """
    ind = indicator_cells.array() if isinstance(indicator_cells, GridFunction) else np.asarray(indicator_cells, float)
    if not np.all((ind == 0.0) | (ind == 1.0)):
        raise ValueError("indicator cells must be 0 or 1")
    if spec.J == 0:
        return 0.0
    n = ind.size
    if isinstance(phi, GridFunction):
        if phi.n != n:
            raise ValueError(f"phi has {phi.n} cells, indicator has {n}")
        coef = spec.cell_matrix(n).T @ (ind * phi.array())
    else:
        edges = np.arange(n + 1) / n
        coef = np.zeros(spec.J)
        for j, fn in enumerate(spec.fns):
            brk = tuple(fn.breaks) + tuple(getattr(phi, "breaks", ()))
            for k in np.flatnonzero(ind):
                coef[j] += piecewise_integral(lambda u: phi(u) * fn(u), edges[k], edges[k + 1], brk)
    return float(np.sum(spec.mus**2 * coef**2))


def qv_density_batch(q: np.ndarray, indicator: np.ndarray, phi_cells: np.ndarray) -> np.ndarray:
    """Vectorized lattice QV density (1/n) c^T q c with c = indicator * phi.

    ``indicator`` has shape (..., n); equals ``qv_target_density`` for a
    GridFunction phi.
    """
    n = q.shape[0]
    c = indicator * phi_cells
    return np.einsum("...k,kl,...l->...", c, q, c) / n
