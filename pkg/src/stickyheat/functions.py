"""Functions on [0, 1]: orthonormal basis descriptors, data descriptors for
lambda and g, and the quadrature used to integrate them over lattice cells."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence, Union

import numpy as np

GL64_NODES, GL64_WEIGHTS = np.polynomial.legendre.leggauss(64)
GL32_NODES, GL32_WEIGHTS = np.polynomial.legendre.leggauss(32)

SQRT2 = np.sqrt(2.0)


def gauss_legendre(func: Callable, a: float, b: float, panels: int = 1) -> float:
    """Composite 64-point Gauss-Legendre integral of ``func`` over [a, b]."""
    if b <= a:
        return 0.0
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    u = 0.5 * (hi + lo) + half * GL64_NODES[None, :]
    vals = np.asarray(func(u.ravel()), dtype=float).reshape(u.shape)
    return float(np.sum(half * (vals @ GL64_WEIGHTS[:, None])))


def _cell_edges(n: int) -> np.ndarray:
    return np.arange(n + 1) / n


def _split_points(a: float, b: float, breaks: Sequence[float]) -> list[float]:
    pts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    return pts


def piecewise_integral(func: Callable, a: float, b: float, breaks: Sequence[float] = (),
                       panels: int = 1) -> float:
    """Gauss-Legendre integral that splits [a, b] at the given discontinuities."""
    pts = _split_points(a, b, breaks)
    return sum(gauss_legendre(func, lo, hi, panels) for lo, hi in zip(pts[:-1], pts[1:]))


# ---------------------------------------------------------------------------
# Basis functions (eigenfunctions of Q)


@dataclass(frozen=True)
class Constant:
    def __call__(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def antiderivative(self, u):
        return np.asarray(u, dtype=float)

    breaks = ()

    def to_json(self) -> dict:
        return {"type": "constant"}


@dataclass(frozen=True)
class Cosine:
    """sqrt(2) cos(pi j u)."""

    j: int

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"Cosine index must be a positive integer, got {self.j}")

    breaks = ()

    def __call__(self, u):
        return SQRT2 * np.cos(np.pi * self.j * np.asarray(u, dtype=float))

    def antiderivative(self, u):
        return SQRT2 * np.sin(np.pi * self.j * np.asarray(u, dtype=float)) / (np.pi * self.j)

    def to_json(self) -> dict:
        return {"type": "cosine", "j": int(self.j)}


@dataclass(frozen=True)
class Sine:
    """sqrt(2) sin(pi j u)."""

    j: int

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise ValueError(f"Sine index must be a positive integer, got {self.j}")

    breaks = ()

    def __call__(self, u):
        return SQRT2 * np.sin(np.pi * self.j * np.asarray(u, dtype=float))

    def antiderivative(self, u):
        return -SQRT2 * np.cos(np.pi * self.j * np.asarray(u, dtype=float)) / (np.pi * self.j)

    def to_json(self) -> dict:
        return {"type": "sine", "j": int(self.j)}


@dataclass(frozen=True)
class NormalizedIndicator:
    """1_[a, b) / sqrt(b - a)."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"indicator needs 0 <= a < b <= 1, got [{self.a}, {self.b})")

    @property
    def breaks(self):
        return (self.a, self.b)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return ((u >= self.a) & (u < self.b)) / np.sqrt(self.b - self.a)

    def antiderivative(self, u):
        u = np.asarray(u, dtype=float)
        return (np.clip(u, self.a, self.b) - self.a) / np.sqrt(self.b - self.a)

    def to_json(self) -> dict:
        return {"type": "indicator", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolant of values on a uniform grid of [0, 1].

    Not rescaled automatically; use ``Tabulated.normalized`` to get unit norm.
    """

    values: tuple

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError("tabulated function needs at least two grid values")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def normalized(cls, values) -> "Tabulated":
        v = np.asarray(values, dtype=float)
        return cls(tuple(v / cls(tuple(v)).l2_norm()))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, len(self.values))

    @property
    def breaks(self):
        return tuple(self.grid[1:-1])

    def __call__(self, u):
        return np.interp(np.asarray(u, dtype=float), self.grid, np.asarray(self.values))

    def l2_norm(self) -> float:
        v = np.asarray(self.values)
        h = 1.0 / (len(v) - 1)
        a, b = v[:-1], v[1:]
        return float(np.sqrt(np.sum(h * (a * a + a * b + b * b) / 3.0)))

    def to_json(self) -> dict:
        return {"type": "tabulated", "values": list(self.values)}


BasisFn = Union[Constant, Cosine, Sine, NormalizedIndicator, Tabulated]


def basis_from_json(obj: dict) -> BasisFn:
    kind = obj["type"]
    if kind == "constant":
        return Constant()
    if kind == "cosine":
        return Cosine(int(obj["j"]))
    if kind == "sine":
        return Sine(int(obj["j"]))
    if kind == "indicator":
        return NormalizedIndicator(float(obj["a"]), float(obj["b"]))
    if kind == "tabulated":
        return Tabulated(tuple(obj["values"]))
    raise ValueError(f"unknown basis function type {kind!r}")


def cell_integrals(fn, n: int) -> np.ndarray:
    """Integrals of ``fn`` over the n lattice cells [(k-1)/n, k/n).

    Closed form when ``fn`` has an antiderivative, otherwise 64-point
    Gauss-Legendre per cell, split at the function's kinks.
    """
    edges = _cell_edges(n)
    if hasattr(fn, "antiderivative"):
        F = fn.antiderivative(edges)
        return np.diff(F)
    brk = getattr(fn, "breaks", ())
    return np.array([piecewise_integral(fn, edges[k], edges[k + 1], brk) for k in range(n)])


def inner_on_cells(f: Callable, g: Callable, n: int, breaks: Sequence[float] = ()) -> np.ndarray:
    """Per-cell integrals of the product f*g, split at discontinuities."""
    edges = _cell_edges(n)
    prod = lambda u: f(u) * g(u)  # noqa: E731
    return np.array([piecewise_integral(prod, edges[k], edges[k + 1], breaks) for k in range(n)])


# ---------------------------------------------------------------------------
# Data descriptors for lambda and g


@dataclass(frozen=True)
class FunctionSpec:
    """A nonnegative data function on [0, 1] given by a small descriptor.

    kinds: ``constant`` (value), ``linear`` (intercept + slope*u),
    ``cosine``/``sine`` (offset + amplitude * cos/sin(pi j u), no sqrt(2)),
    ``tabulated`` (piecewise linear on a uniform grid of [0, 1]).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "cosine", "sine", "tabulated"):
            raise ValueError(f"unknown function kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @classmethod
    def constant(cls, value: float) -> "FunctionSpec":
        return cls("constant", (value,))

    @classmethod
    def linear(cls, intercept: float, slope: float) -> "FunctionSpec":
        return cls("linear", (intercept, slope))

    @classmethod
    def cosine(cls, offset: float, amplitude: float, j: int = 1) -> "FunctionSpec":
        return cls("cosine", (offset, amplitude, j))

    @classmethod
    def sine(cls, offset: float, amplitude: float, j: int = 1) -> "FunctionSpec":
        return cls("sine", (offset, amplitude, j))

    @classmethod
    def tabulated(cls, values) -> "FunctionSpec":
        return cls("tabulated", tuple(values))

    @property
    def breaks(self) -> tuple:
        if self.kind == "tabulated":
            return tuple(np.linspace(0, 1, len(self.params))[1:-1])
        return ()

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "constant":
            return np.full_like(u, p[0])
        if self.kind == "linear":
            return p[0] + p[1] * u
        if self.kind == "cosine":
            return p[0] + p[1] * np.cos(np.pi * p[2] * u)
        if self.kind == "sine":
            return p[0] + p[1] * np.sin(np.pi * p[2] * u)
        return np.interp(u, np.linspace(0, 1, len(p)), np.asarray(p))

    def antiderivative(self, u):
        u = np.asarray(u, dtype=float)
        p = self.params
        if self.kind == "constant":
            return p[0] * u
        if self.kind == "linear":
            return p[0] * u + 0.5 * p[1] * u * u
        if self.kind == "cosine":
            return p[0] * u + p[1] * np.sin(np.pi * p[2] * u) / (np.pi * p[2])
        if self.kind == "sine":
            return p[0] * u - p[1] * np.cos(np.pi * p[2] * u) / (np.pi * p[2])
        # exact integral of the piecewise-linear interpolant
        grid = np.linspace(0, 1, len(p))
        v = np.asarray(p)
        h = grid[1] - grid[0]
        cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (v[1:] + v[:-1]))])
        idx = np.clip(np.searchsorted(grid, u, side="right") - 1, 0, len(p) - 2)
        du = u - grid[idx]
        slope = (v[idx + 1] - v[idx]) / h
        return cum[idx] + v[idx] * du + 0.5 * slope * du * du

    def scaled(self, c: float) -> "FunctionSpec":
        p = list(self.params)
        if self.kind in ("constant", "tabulated"):
            p = [c * x for x in p]
        elif self.kind == "linear":
            p = [c * p[0], c * p[1]]
        else:
            p = [c * p[0], c * p[1], p[2]]
        return FunctionSpec(self.kind, tuple(p))

    def cell_means(self, n: int) -> np.ndarray:
        """n * <f, pi_k^n> for every cell."""
        return n * cell_integrals(self, n)

    def to_json(self) -> dict:
        p = self.params
        if self.kind == "constant":
            return {"type": "constant", "value": p[0]}
        if self.kind == "linear":
            return {"type": "linear", "intercept": p[0], "slope": p[1]}
        if self.kind in ("cosine", "sine"):
            return {"type": self.kind, "offset": p[0], "amplitude": p[1], "j": int(p[2])}
        return {"type": "tabulated", "values": list(p)}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "FunctionSpec":
        kind = obj["type"]
        if kind == "constant":
            return cls.constant(obj["value"])
        if kind == "linear":
            return cls.linear(obj.get("intercept", 0.0), obj["slope"])
        if kind in ("cosine", "sine"):
            return cls(kind, (obj["offset"], obj["amplitude"], obj.get("j", 1)))
        if kind == "tabulated":
            return cls.tabulated(obj["values"])
        raise ValueError(f"unknown function type {kind!r}")
