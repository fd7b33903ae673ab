"""Time integrators for sticky-reflected dynamics.

Two levels share one set of steppers:

* the 1-D sticky-reflected Brownian motion
  dx = lam 1{x=0} dt + sigma 1{x>0} dw, with its kappa_eps regularization;
* the n-particle lattice system
  dx_k = 1/2 Delta^n x_k dt + lam_k 1{x_k=0} dt + f(x_k) dt + sqrt(n) 1{x_k>0} dw_k^n.

Noise normalization: the lattice steppers take ``dw`` as increments of the
Wiener processes w_k^n themselves (covariance q^n dt, as produced by
``noise.sample_increments``) and multiply by sqrt(n) here, exactly where the
particle SDE puts it. A positive cell therefore receives noise of variance
n q_kk dt per step.

Sticky time and the clamp. The hard steppers evaluate 1{x=0} as
1{x <= delta_ind} with delta_ind = 0 by default. A plain clamp max(0, .) would
then turn every visit to zero into an instantaneous reflection: one drift
step lifts the particle off zero and the noise resumes. Instead the clamped
overshoot is carried as a per-cell deficit d >= 0. The reported state stays
max(z, 0) >= 0, but the particle remains exactly at zero (noise off, drift
lam on) until lam has repaid d. This is the discrete counterpart of the
time-change picture: the reflection regulator of the free walk, divided by
lam, is the time spent at zero. Setting ``carry_deficit=False`` restores the
memoryless clamp; a positive ``indicator_threshold`` gives the band variant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .functions import GL32_NODES, GL32_WEIGHTS
from .lattice import LatticeState, ThetaSolver, laplacian
from .noise import NoiseFactor, SeedPolicy

OVERFLOW_GUARD = 1e12
BLOCK_PATHS = 2048


# ---------------------------------------------------------------------------
# regularization primitives


def kappa_eps(x, epsilon: float):
    """Smoothstep ramp kappa(x / eps), kappa(s) = 3 s^2 - 2 s^3 on [0, 1]."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    s = np.clip(np.asarray(x, dtype=float) / epsilon, 0.0, 1.0)
    out = s * s * (3.0 - 2.0 * s)
    return out if out.ndim else float(out)


def mollifier(z):
    """theta(z) = 15/16 (1 - z^2)^2 on [-1, 1]; C^1, unit mass."""
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= 1.0, (15.0 / 16.0) * (1.0 - z * z) ** 2, 0.0)


@dataclass(frozen=True)
class DriftSpec:
    """Nonnegative drift f on [0, inf) with f(0) = 0 and f(x) <= A + B x.

    kinds: ``zero``, ``linear`` (c x), ``saturated`` (c min(x, K)),
    ``tabulated`` (piecewise linear on a uniform grid of [0, x_max], held
    constant beyond x_max).
    """

    kind: str = "zero"
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        if self.kind == "zero":
            pass
        elif self.kind == "linear":
            if len(p) != 1 or p[0] < 0:
                raise ValueError("linear drift needs one coefficient c >= 0")
        elif self.kind == "saturated":
            if len(p) != 2 or p[0] < 0 or p[1] <= 0:
                raise ValueError("saturated drift needs c >= 0 and K > 0")
        elif self.kind == "tabulated":
            if len(p) < 3 or p[0] <= 0:
                raise ValueError("tabulated drift needs x_max > 0 and at least two values")
            vals = np.asarray(p[1:])
            if abs(vals[0]) > 1e-14 or np.any(vals < 0):
                raise ValueError("tabulated drift must satisfy f(0) = 0 and f >= 0")
        else:
            raise ValueError(f"unknown drift kind {self.kind!r}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def linear(cls, c: float):
        return cls("linear", (c,))

    @classmethod
    def saturated(cls, c: float, K: float):
        return cls("saturated", (c, K))

    @classmethod
    def tabulated(cls, x_max: float, values):
        return cls("tabulated", (x_max, *values))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind in ("linear", "saturated") and self.params[0] == 0.0)

    @property
    def growth(self) -> tuple[float, float]:
        """Declared (A, B) with f(x) <= A + B x."""
        p = self.params
        if self.kind == "zero":
            return 0.0, 0.0
        if self.kind == "linear":
            return 0.0, p[0]
        if self.kind == "saturated":
            return p[0] * p[1], 0.0
        return float(max(p[1:])), 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "linear":
            return p[0] * np.maximum(x, 0.0)
        if self.kind == "saturated":
            return p[0] * np.clip(x, 0.0, p[1])
        grid = np.linspace(0.0, p[0], len(p) - 1)
        return np.interp(np.maximum(x, 0.0), grid, np.asarray(p[1:]))

    def mollified(self, epsilon: float, x):
        return mollify_drift(self, epsilon, x)

    def to_json(self) -> dict:
        p = self.params
        if self.kind == "zero":
            return {"type": "zero"}
        if self.kind == "linear":
            return {"type": "linear", "c": p[0]}
        if self.kind == "saturated":
            return {"type": "saturated", "c": p[0], "K": p[1]}
        return {"type": "tabulated", "x_max": p[0], "values": list(p[1:])}

    @classmethod
    def from_json(cls, obj: dict) -> "DriftSpec":
        kind = obj.get("type", "zero")
        if kind == "zero":
            return cls.zero()
        if kind == "linear":
            return cls.linear(obj["c"])
        if kind == "saturated":
            return cls.saturated(obj["c"], obj["K"])
        if kind == "tabulated":
            return cls.tabulated(obj["x_max"], obj["values"])
        raise ValueError(f"unknown drift type {kind!r}")


def _drift_kinks(drift: DriftSpec) -> np.ndarray:
    p = drift.params
    if drift.kind == "saturated":
        return np.array([p[1]])
    if drift.kind == "tabulated":
        return np.linspace(0.0, p[0], len(p) - 1)[1:]
    return np.empty(0)


def mollify_drift(drift: DriftSpec, epsilon: float, x):
    """f_eps(x) = int_0^inf theta_eps(x - y) f(y) dy.

    32-point Gauss-Legendre on each piece of [max(0, x - eps), x + eps] between
    kinks of f, so piecewise-linear drifts are integrated to rounding error.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=float)
    if drift.is_zero:
        out = np.zeros_like(x)
        return out if out.ndim else float(out)
    lo = np.maximum(0.0, x - epsilon)
    hi = np.maximum(lo, x + epsilon)
    kinks = _drift_kinks(drift)
    if kinks.size:
        # only the kinks that can fall inside a window of width 2 eps
        m = kinks.size if kinks.size < 2 else min(kinks.size, int(math.ceil(2 * epsilon / (kinks[1] - kinks[0]))) + 2)
        start = np.minimum(np.searchsorted(kinks, lo), kinks.size - m)
        inner = np.clip(kinks[start[..., None] + np.arange(m)], lo[..., None], hi[..., None])
        edges = np.concatenate([lo[..., None], inner, hi[..., None]], axis=-1)
    else:
        edges = np.stack([lo, hi], axis=-1)
    a, b = edges[..., :-1], edges[..., 1:]
    half = 0.5 * (b - a)
    y = (0.5 * (a + b))[..., None] + half[..., None] * GL32_NODES
    w = mollifier((x[..., None, None] - y) / epsilon) / epsilon * drift(y)
    out = np.sum(half * (w @ GL32_WEIGHTS), axis=-1)
    if drift.kind == "linear":
        # symmetric kernel, zero first moment: exact away from the origin
        out = np.where(x >= epsilon, drift(x), out)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# scheme parameters and records


@dataclass(frozen=True)
class SchemeParams:
    dt: float
    epsilon: float = 0.05
    theta_implicit: float = 0.5
    clamp_negatives: bool = True
    carry_deficit: bool = True
    indicator_threshold: float = 0.0
    stability_factor: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.theta_implicit <= 1.0:
            raise ValueError("theta_implicit must lie in [0, 1]")
        if not self.indicator_threshold >= 0:
            raise ValueError("indicator_threshold must be >= 0")


def _clamp(z, deficit, params: SchemeParams):
    """Split z - deficit into (state >= 0, new deficit, newly clamped mass)."""
    if not params.clamp_negatives:
        return z, deficit, 0.0
    if params.carry_deficit:
        z = z - deficit
        d = np.maximum(-z, 0.0)
        return z + d, d, np.maximum(d - deficit, 0.0)
    d = np.maximum(-z, 0.0)
    return z + d, deficit, d


@dataclass
class PathRecord:
    times: np.ndarray
    states: np.ndarray  # (nt,) for scalar paths, (nt, n) for the lattice
    master_seed: int
    path: int
    scheme: str
    alpha0: int = 1
    extras: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n(self) -> int:
        return 1 if self.states.ndim == 1 else self.states.shape[1]


@dataclass
class Ensemble:
    """P paths on a common recording grid, plus per-path step-level statistics."""

    times: np.ndarray
    states: np.ndarray  # (P, nt, n)
    paths: np.ndarray
    master_seed: int
    scheme: str
    alpha0: int
    clamp_mass: np.ndarray
    overflow: np.ndarray
    occupation: np.ndarray | None = None  # (P, n), left-endpoint rule on every step
    tracked: dict = field(default_factory=dict)  # name -> (P, nt, n)
    meta: dict = field(default_factory=dict)

    @property
    def P(self) -> int:
        return self.states.shape[0]

    def path(self, i: int) -> PathRecord:
        extras = {k: v[i] for k, v in self.tracked.items()}
        return PathRecord(self.times, self.states[i], self.master_seed, int(self.paths[i]),
                          self.scheme, self.alpha0, extras)


# ---------------------------------------------------------------------------
# 1-D sticky-reflected Brownian motion


def _srbm_core(x, d, lam, sigma, dw, params: SchemeParams, scheme: str):
    if scheme == "hard":
        at0 = x <= params.indicator_threshold
        dpart = np.where(at0, lam, 0.0)
        npart = np.where(at0, 0.0, sigma * dw)
    else:
        k = kappa_eps(x, params.epsilon)
        dpart = lam * (1.0 - k * k)
        npart = k * (sigma * dw)
    z = x + dpart * params.dt + npart
    return (*_clamp(z, d, params), dpart, npart)


def _srbm_public(x, lam, sigma, dw, params, deficit, scheme):
    x = np.asarray(x, dtype=float)
    d = np.zeros_like(x) if deficit is None else np.asarray(deficit, dtype=float)
    y, d2 = _srbm_core(x, d, lam, sigma, np.asarray(dw, dtype=float), params, scheme)[:2]
    y = y if y.ndim else float(y)
    if deficit is None:
        return y
    return y, (d2 if np.ndim(d2) else float(d2))


def step_srbm_hard(x, lam, sigma, dw, params: SchemeParams, deficit=None):
    """x' = x + lam 1{x<=delta} dt + 1{x>delta} sigma dw, then clamped at 0.

    Pass ``deficit`` to carry the clamped overshoot between steps; the call
    then returns ``(x', deficit')``.
    """
    return _srbm_public(x, lam, sigma, dw, params, deficit, "hard")


def step_srbm_regularized(x, lam, sigma, dw, params: SchemeParams, deficit=None):
    """x' = x + lam (1 - k^2) dt + k sigma dw with k = kappa_eps(x), then clamped."""
    return _srbm_public(x, lam, sigma, dw, params, deficit, "regularized")


def _reflect_skorokhod(y: np.ndarray):
    ell = np.maximum.accumulate(np.maximum(0.0, -y), axis=-1)
    return y + ell, ell


def local_time_occupation(r: np.ndarray, dt: float, eps: float) -> np.ndarray:
    """ell(s_i) ~ Leb{s < s_i : r <= eps} / (2 eps), left-endpoint rule."""
    occ = (r[..., :-1] <= eps) * dt
    return np.concatenate([np.zeros(r.shape[:-1] + (1,)), np.cumsum(occ, axis=-1)], axis=-1) / (2 * eps)


OVERSHOOT = 0.5826  # -zeta(1/2) / sqrt(2 pi), mean overshoot of a Gaussian walk in units of sqrt(dt)


def local_time_downcrossing(r: np.ndarray, h: float, dt: float = 0.0) -> np.ndarray:
    """ell ~ w * #downcrossings of [h/2, h] by r (Levy's downcrossing theorem).

    For a continuous path w = h/2. A path sampled every dt overshoots both
    barriers, which widens the effective band; passing ``dt`` uses
    w = h/2 + 2 * OVERSHOOT * sqrt(dt).
    """
    r = np.atleast_2d(r)
    out = np.zeros_like(r)
    for p in range(r.shape[0]):
        count = 0
        armed = r[p, 0] >= h
        row = out[p]
        for i, v in enumerate(r[p]):
            if armed and v <= 0.5 * h:
                count += 1
                armed = False
            elif not armed and v >= h:
                armed = True
            row[i] = count
    return (0.5 * h + 2 * OVERSHOOT * math.sqrt(dt)) * out


def srbm_time_change_ensemble(lam: float, sigma: float, x0: float, T: float, dt: float,
                              seeds: SeedPolicy, paths: Sequence[int], local_time: str = "skorokhod",
                              stream: int = 1) -> Ensemble:
    """Sticky BM built as a time change of reflected BM.

    With r a standard reflected BM started at x0/sigma and ell its local time
    at zero (the Skorokhod regulator, r = y + ell), set
    A(s) = s + (sigma / lam) ell(s) and x(t) = sigma r(A^{-1}(t)). Then
    x = x0 + sigma beta(Leb{x>0}) + lam Leb{s <= t: x = 0}, which is the
    sticky SDE. The constant sigma/lam comes from matching the pushing term
    sigma ell with the drift lam * (time at zero) = lam (sigma/lam) ell.
    """
    if lam <= 0 or sigma <= 0:
        raise ValueError("time-change construction needs lam > 0 and sigma > 0")
    if x0 < 0:
        raise ValueError("x0 must be nonnegative")
    N = int(round(T / dt))
    paths = np.asarray(paths)
    xi = seeds.block(paths, 0, N, 1, stream)[..., 0]
    y = np.concatenate([np.full((paths.size, 1), x0 / sigma),
                        x0 / sigma + np.cumsum(xi * math.sqrt(dt), axis=1)], axis=1)
    eps = 4.0 * math.sqrt(dt)
    if local_time == "skorokhod":
        r, ell = _reflect_skorokhod(y)
    elif local_time == "occupation":
        r = np.abs(y)
        ell = local_time_occupation(r, dt, eps)
    elif local_time == "downcrossing":
        r = np.abs(y)
        ell = local_time_downcrossing(r, eps, dt)
    else:
        raise ValueError(f"unknown local time estimator {local_time!r}")
    s = np.arange(N + 1) * dt
    A = s + (sigma / lam) * ell
    times = np.arange(N + 1) * dt
    states = np.empty((paths.size, N + 1, 1))
    for i in range(paths.size):
        j = np.minimum(np.searchsorted(A[i], times, side="left"), N)
        states[i, :, 0] = sigma * r[i, j]
    return Ensemble(times, states, paths, seeds.master_seed, f"time_change:{local_time}", 1,
                    np.zeros(paths.size), np.zeros(paths.size, bool),
                    tracked={"local_time": ell[..., None]}, meta={"lam": lam, "sigma": sigma})


def srbm_time_change_oracle(lam: float, sigma: float, x0: float, T: float, dt: float,
                            seeds: SeedPolicy, path: int = 0, local_time: str = "skorokhod") -> PathRecord:
    ens = srbm_time_change_ensemble(lam, sigma, x0, T, dt, seeds, [path], local_time)
    rec = ens.path(0)
    rec.states = rec.states[:, 0]
    rec.extras = {"local_time": rec.extras["local_time"][:, 0]}
    return rec


# ---------------------------------------------------------------------------
# lattice system


def _lattice_step(x, d, lam_n, drift: DriftSpec, noise_field, params: SchemeParams, alpha0: int,
                  solver: ThetaSolver, scheme: str):
    """One step on a batch x of shape (..., n).

    Returns (x', d', clamped, drift_part, noise_part). ``noise_field`` already
    carries the sqrt(n) amplitude.
    """
    dt = params.dt
    theta = params.theta_implicit
    if scheme == "hard":
        at0 = x <= params.indicator_threshold
        dpart = np.where(at0, lam_n, 0.0)
        npart = np.where(at0, 0.0, noise_field)
        f = drift(x) if not drift.is_zero else 0.0
    else:
        k = kappa_eps(x, params.epsilon)
        dpart = lam_n * (1.0 - k * k)
        npart = k * noise_field
        f = drift.mollified(params.epsilon, x) if not drift.is_zero else 0.0
    rhs = x
    if theta < 1.0:
        rhs = rhs + ((1.0 - theta) * dt * 0.5) * laplacian(x, alpha0)
    rhs = rhs + (dpart + f) * dt + npart
    z = solver.solve(rhs)
    return (*_clamp(z, d, params), dpart, npart)


def _system_step_public(state, lambda_n, drift, dw, params, alpha0, deficit, scheme):
    if isinstance(state, LatticeState):
        x, alpha0 = state.array(), state.alpha0
        deficit = state.deficit_array()
    else:
        x = np.asarray(state, dtype=float)
    n = x.shape[-1]
    d = np.zeros_like(x) if deficit is None else np.asarray(deficit, dtype=float)
    lam = lambda_n.array() if hasattr(lambda_n, "array") else np.asarray(lambda_n, dtype=float)
    solver = ThetaSolver(n, alpha0, params.theta_implicit * params.dt * 0.5)
    noise = math.sqrt(n) * np.asarray(dw, dtype=float)
    y, d2 = _lattice_step(x, d, lam, drift, noise, params, alpha0, solver, scheme)[:2]
    if isinstance(state, LatticeState):
        return LatticeState(tuple(y), alpha0, tuple(np.broadcast_to(d2, y.shape)))
    return y if deficit is None else (y, d2)


def step_system_hard(state, lambda_n, drift: DriftSpec, dw, params: SchemeParams,
                     alpha0: int = 1, deficit=None):
    """theta-scheme step of the sticky particle system with hard indicators.

    ``dw`` are increments of w_k^n (covariance q^n dt); the sqrt(n) factor is
    applied here. A LatticeState carries its own boundary and deficit; for a
    plain array pass ``alpha0`` and optionally ``deficit`` (then a pair is
    returned).
    """
    return _system_step_public(state, lambda_n, drift, dw, params, alpha0, deficit, "hard")


def step_system_regularized(state, lambda_n, drift: DriftSpec, dw, params: SchemeParams,
                            alpha0: int = 1, deficit=None):
    """As ``step_system_hard`` with 1{x>0} -> kappa_eps, 1{x=0} -> 1 - kappa_eps^2, f -> f_eps."""
    return _system_step_public(state, lambda_n, drift, dw, params, alpha0, deficit, "regularized")


# ---------------------------------------------------------------------------
# ensemble driver


@dataclass
class Prepared:
    """Everything ``simulate`` derives once from a scenario."""

    n: int
    alpha0: int
    steps: int
    record_every: int
    params: SchemeParams
    scheme: str
    lam_n: np.ndarray
    g_n: np.ndarray
    q: np.ndarray
    factor: NoiseFactor
    drift: DriftSpec
    seeds: SeedPolicy
    occupation_delta: float | None
    track: bool


def _run_block(prep: Prepared, paths: np.ndarray) -> dict[str, Any]:
    P, n = paths.size, prep.n
    dt = prep.params.dt
    solver = ThetaSolver(n, prep.alpha0, prep.params.theta_implicit * dt * 0.5)
    nrec = prep.steps // prep.record_every + 1
    states = np.empty((P, nrec, n))
    x = np.tile(prep.g_n, (P, 1))
    d = np.zeros_like(x)
    states[:, 0] = x
    clamp = np.zeros(P)
    alive = np.ones(P, bool)
    occ = np.zeros((P, n)) if prep.occupation_delta is not None else None
    tracked = {}
    if prep.track:
        acc = {k: np.zeros((P, n)) for k in ("drift_integral", "noise_integral", "noise_qv")}
        tracked = {k: np.zeros((P, nrec, n)) for k in acc}
    sqrt_n = math.sqrt(n)
    sqrt_dt = math.sqrt(dt)
    L = prep.seeds.chunk_len
    step = 0
    while step < prep.steps:
        nsteps = min(L - step % L, prep.steps - step)
        xi = prep.seeds.block(paths, step, nsteps, prep.factor.width)
        dW = prep.factor.combine(xi) * sqrt_dt
        for s in range(nsteps):
            if occ is not None:
                occ += (x <= prep.occupation_delta) * dt
            y, d, cl, dpart, npart = _lattice_step(x, d, prep.lam_n, prep.drift, sqrt_n * dW[:, s],
                                                   prep.params, prep.alpha0, solver, prep.scheme)
            if prep.track:
                acc["drift_integral"] += dpart * dt
                acc["noise_integral"] += npart
                acc["noise_qv"] += npart * npart
            if prep.params.clamp_negatives:
                clamp += np.sum(cl, axis=-1)
            bad = ~np.all(np.abs(y) <= OVERFLOW_GUARD, axis=-1)
            if bad.any():
                alive &= ~bad
                y[bad] = np.nan
            x = y
            step += 1
            if step % prep.record_every == 0:
                r = step // prep.record_every
                states[:, r] = x
                for k in tracked:
                    tracked[k][:, r] = acc[k]
    return {"states": states, "clamp": clamp, "overflow": ~alive, "occ": occ, "tracked": tracked,
            "deficit": d.sum(axis=-1)}


def run_paths(prep: Prepared, paths: Sequence[int], threads: int = 1) -> dict[str, Any]:
    """Simulate the given path indices, split across ``threads`` workers.

    Each path's trajectory depends only on (master_seed, path index), so the
    merged result is identical for any thread count or block split. With
    several threads the paths are cut into at least one block per thread.
    """
    paths = np.asarray(paths, dtype=np.int64)
    size = max(1, min(BLOCK_PATHS, -(-paths.size // max(threads, 1))))
    blocks = [paths[i:i + size] for i in range(0, paths.size, size)] or [paths]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda b: _run_block(prep, b), blocks))
    else:
        results = [_run_block(prep, b) for b in blocks]
    out = {
        "states": np.concatenate([r["states"] for r in results]),
        "clamp": np.concatenate([r["clamp"] for r in results]),
        "overflow": np.concatenate([r["overflow"] for r in results]),
        "deficit": np.concatenate([r["deficit"] for r in results]),
        "occ": None if results[0]["occ"] is None else np.concatenate([r["occ"] for r in results]),
        "tracked": {k: np.concatenate([r["tracked"][k] for r in results]) for k in results[0]["tracked"]},
    }
    return out


def simulate(config, threads: int = 1, paths: Sequence[int] | None = None,
             track_integrals: bool = False) -> Ensemble:
    """Run the ensemble described by a ScenarioConfig."""
    prep = config.prepare(track_integrals=track_integrals)
    if paths is None:
        paths = np.arange(config.ensemble)
    res = run_paths(prep, paths, threads)
    times = np.arange(prep.steps // prep.record_every + 1) * (prep.record_every * prep.params.dt)
    return Ensemble(times, res["states"], np.asarray(paths), prep.seeds.master_seed, prep.scheme,
                    prep.alpha0, res["clamp"], res["overflow"], res["occ"], res["tracked"],
                    meta={"threshold": prep.params.indicator_threshold, "n": prep.n,
                          "final_deficit": res["deficit"]})


def simulate_srbm(lam: float, sigma: float, x0: float, T: float, params: SchemeParams,
                  seeds: SeedPolicy, paths: Sequence[int], scheme: str = "hard",
                  record_every: int = 1, track: bool = False, stream: int = 0) -> Ensemble:
    """Ensemble of the scalar sticky BM with the hard or regularized stepper.

    With ``track`` the regularized drift integral a(t) = int lam (1 - kappa^2) ds,
    the noise integral eta(t) = int kappa sigma dw and its realized QV are
    recorded alongside the state (hard scheme: indicators in place of kappa).
    """
    if scheme not in ("hard", "regularized"):
        raise ValueError(f"unknown scheme {scheme!r}")
    dt = params.dt
    steps = int(round(T / dt))
    if steps % record_every:
        raise ValueError("T/dt must be a multiple of record_every")
    paths = np.asarray(paths, dtype=np.int64)
    P = paths.size
    nrec = steps // record_every + 1
    states = np.empty((P, nrec))
    x = np.full(P, float(x0))
    states[:, 0] = x
    names = ("drift_integral", "noise_integral", "noise_qv")
    acc = {k: np.zeros(P) for k in names}
    tracked = {k: np.zeros((P, nrec)) for k in names} if track else {}
    clamp = np.zeros(P)
    d = np.zeros(P)
    sqrt_dt = math.sqrt(dt)
    L = seeds.chunk_len
    step = 0
    while step < steps:
        nsteps = min(L - step % L, steps - step)
        dW = seeds.block(paths, step, nsteps, 1, stream)[..., 0] * sqrt_dt
        for s in range(nsteps):
            x, d, cl, dpart, npart = _srbm_core(x, d, lam, sigma, dW[:, s], params, scheme)
            clamp += cl
            if track:
                acc["drift_integral"] += dpart * dt
                acc["noise_integral"] += npart
                acc["noise_qv"] += npart * npart
            step += 1
            if step % record_every == 0:
                r = step // record_every
                states[:, r] = x
                for k in tracked:
                    tracked[k][:, r] = acc[k]
    times = np.arange(nrec) * (record_every * dt)
    return Ensemble(times, states[..., None], paths, seeds.master_seed, f"srbm_{scheme}", 1, clamp,
                    np.zeros(P, bool), None, {k: v[..., None] for k, v in tracked.items()},
                    meta={"lam": lam, "sigma": sigma, "threshold": params.indicator_threshold,
                          "q": sigma * sigma, "final_deficit": d})
