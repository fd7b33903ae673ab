"""Path and ensemble statistics for the sticky dynamics.

Conventions: series are arrays with time on the last axis (a leading axis
indexes paths), recorded on a uniform grid. Pairings of lattice data use
<a, b> = (1/n) sum_k a_k b_k, the L2 product of the step functions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .dynamics import DriftSpec, Ensemble, PathRecord
from .lattice import apply_tilde_delta
from .spectral import GridFunction, qv_density_batch

MIN_ZTEST_PATHS = 30


def _cumtrapz(h: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative trapezoid along the last axis, starting at 0."""
    out = np.zeros_like(h)
    out[..., 1:] = np.cumsum(0.5 * dt * (h[..., 1:] + h[..., :-1]), axis=-1)
    return out


def _uniform_dt(times) -> float:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least two recorded times")
    d = np.diff(times)
    if np.max(np.abs(d - d[0])) > 1e-9 * max(d[0], 1e-300):
        raise ValueError("series must be recorded on a uniform grid")
    return float(d[0])


# ---------------------------------------------------------------------------
# martingale problem


def martingale_residuals(states: np.ndarray, times, phi: GridFunction, lambda_n, drift: DriftSpec,
                         alpha0: int, delta_diag: float = 0.0) -> np.ndarray:
    """M^phi(t) for a batch of lattice paths; ``states`` is (..., nt, n).

    M(t) = <X_t,phi> - <X_0,phi> - 1/2 int <X, D phi> - int <lam 1{X<=delta}, phi> - int <f(X), phi>,
    with D the particle Laplacian applied to the cell values of phi (so that
    <X, D phi> = <Delta^n X, phi> exactly) and trapezoid time integrals.
    """
    states = np.asarray(states, dtype=float)
    n = states.shape[-1]
    if phi.n != n:
        raise ValueError(f"phi has {phi.n} cells but the path has {n}")
    lam = lambda_n.array() if hasattr(lambda_n, "array") else np.broadcast_to(np.asarray(lambda_n, float), (n,))
    if lam.shape != (n,):
        raise ValueError("lambda_n must have one value per cell")
    dt = _uniform_dt(times)
    p = phi.array()
    dphi = apply_tilde_delta(phi, alpha0).array()
    pair = states @ p / n
    lap = states @ dphi / n
    sticky = (states <= delta_diag) @ (lam * p) / n
    integrand = 0.5 * lap + sticky
    if not drift.is_zero:
        integrand = integrand + drift(states) @ p / n
    return pair - pair[..., :1] - _cumtrapz(integrand, dt)


def martingale_residual_path(path: PathRecord, phi: GridFunction, lambda_n, drift: DriftSpec,
                             config=None, delta_diag: float | None = None) -> np.ndarray:
    """M^phi along one recorded lattice path.

    ``delta_diag`` defaults to ``config.diag_delta()`` when a config is given,
    otherwise to 0.
    """
    if delta_diag is None:
        delta_diag = config.diag_delta() if config is not None else 0.0
    states = path.states if path.states.ndim == 2 else path.states[:, None]
    return martingale_residuals(states, path.times, phi, lambda_n, drift, path.alpha0, delta_diag)


def qv_targets(states: np.ndarray, times, phi: GridFunction, q: np.ndarray,
               delta_diag: float = 0.0) -> np.ndarray:
    """int_0^t ||Q(1{X_s > delta} phi)||^2 ds per path, trapezoid on the recorded grid."""
    states = np.asarray(states, dtype=float)
    dens = qv_density_batch(q, (states > delta_diag).astype(float), phi.array())
    return _cumtrapz(dens, _uniform_dt(times))


# ---------------------------------------------------------------------------
# quadratic variation


def realized_qv(series) -> np.ndarray | float:
    """Sum of squared increments along the last axis."""
    d = np.diff(np.asarray(series, dtype=float), axis=-1)
    out = np.sum(d * d, axis=-1)
    return out if np.ndim(out) else float(out)


def realized_cross_qv(a, b) -> np.ndarray | float:
    da = np.diff(np.asarray(a, dtype=float), axis=-1)
    db = np.diff(np.asarray(b, dtype=float), axis=-1)
    if da.shape != db.shape:
        raise ValueError("series must have the same shape")
    out = np.sum(da * db, axis=-1)
    return out if np.ndim(out) else float(out)


@dataclass
class QVReport:
    realized: list
    target: list
    ratios: list
    pooled_ratio: float | None
    pooled_se: float | None
    degenerate: bool

    def to_json(self) -> dict:
        return {"pooled_ratio": self.pooled_ratio, "pooled_se": self.pooled_se, "degenerate": self.degenerate,
                "P": len(self.realized)}


def pooled_ratio(realized, target) -> QVReport:
    """Ratio of summed realized QV to summed target, with a delta-method SE."""
    realized = np.atleast_1d(np.asarray(realized, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    tsum = math.fsum(target)
    if tsum <= 0.0:
        return QVReport(realized.tolist(), target.tolist(), [None] * realized.size, None, None, True)
    R = math.fsum(realized) / tsum
    ratios = [float(r / t) if t > 0 else None for r, t in zip(realized, target)]
    P = realized.size
    se = None
    if P > 1:
        resid = realized - R * target
        se = float(np.std(resid, ddof=1) / (math.sqrt(P) * (tsum / P)))
    return QVReport(realized.tolist(), target.tolist(), ratios, float(R), se, False)


def qv_identity_check(paths, phi: GridFunction, q: np.ndarray, lambda_n, drift: DriftSpec,
                      alpha0: int, delta_diag: float = 0.0, times=None) -> QVReport:
    """Realized [M^phi]_T against int_0^T ||Q(1{X>delta} phi)||^2 ds.

    ``paths`` is a PathRecord or a (P, nt, n) state array (then ``times`` is
    required). ``q`` is the cell covariance q^n. The ratio is invariant under
    phi -> c phi.
    """
    if isinstance(paths, PathRecord):
        times = paths.times
        states = paths.states if paths.states.ndim == 2 else paths.states[:, None]
        states = states[None]
    else:
        states = np.asarray(paths, dtype=float)
    M = martingale_residuals(states, times, phi, lambda_n, drift, alpha0, delta_diag)
    realized = realized_qv(M)
    target = qv_targets(states, times, phi, q, delta_diag)[..., -1]
    return pooled_ratio(realized, target)


def qv_support_check(series, deltas: Sequence[float]) -> list[tuple[float, np.ndarray | float]]:
    """Fraction of realized QV accrued while |x| <= delta, per delta.

    The increment x_{i+1} - x_i is attributed to the left endpoint x_i. A
    path with zero total QV reports 0 for every delta.
    """
    x = np.asarray(series, dtype=float)
    d = np.diff(x, axis=-1)
    d2 = d * d
    total = np.sum(d2, axis=-1)
    left = np.abs(x[..., :-1])
    out = []
    for delta in deltas:
        part = np.sum(d2 * (left <= delta), axis=-1)
        frac = np.divide(part, total, out=np.zeros_like(np.asarray(part, float)), where=total > 0)
        out.append((float(delta), frac if np.ndim(frac) else float(frac)))
    return out


def bookkeeping_check(path: PathRecord, k: int, lambda_k: float, q_kk: float) -> float:
    """max_t |a_k(t) - lam_k (t - [eta_k]_t / q_kk)| for a regularized path.

    ``path.extras`` must hold the stepper's ``drift_integral`` (accumulated
    (1 - kappa^2) dt, times lam) and ``noise_qv`` (realized [eta_k]). ``q_kk``
    is the variance rate of the full noise term in cell k.
    """
    if not q_kk > 0:
        raise ValueError("q_kk must be positive")
    try:
        a = np.asarray(path.extras["drift_integral"], dtype=float)
        qv = np.asarray(path.extras["noise_qv"], dtype=float)
    except KeyError as exc:
        raise ValueError("path was not recorded with tracked integrals") from exc
    if a.ndim == 2:
        a, qv = a[:, k], qv[:, k]
    if lambda_k == 0:
        return 0.0
    t = np.asarray(path.times, dtype=float)
    return float(np.max(np.abs(a - lambda_k * (t - qv / q_kk))))


# ---------------------------------------------------------------------------
# stickiness


def occupation_time(series, delta: float, dt: float) -> np.ndarray | float:
    """dt * #{grid points t_i < T with x(t_i) <= delta} (left-endpoint rule)."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    x = np.asarray(series, dtype=float)
    out = dt * np.sum(x[..., :-1] <= delta, axis=-1)
    return out if np.ndim(out) else float(out)


@dataclass
class StickinessReport:
    delta: float
    T: float
    per_path: list
    mean: float
    se: float
    ci_low: float
    ci_high: float
    level: float = 0.99

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("per_path")
        d["P"] = len(self.per_path)
        return d


def stickiness_report(occupation, delta: float, T: float, level: float = 0.99) -> StickinessReport:
    occ = np.ravel(np.asarray(occupation, dtype=float))
    P = occ.size
    mean = math.fsum(occ) / P
    se = float(np.std(occ, ddof=1) / math.sqrt(P)) if P > 1 else float("nan")
    z = stats.norm.ppf(0.5 + level / 2)
    return StickinessReport(float(delta), float(T), occ.tolist(), mean, se, mean - z * se, mean + z * se, level)


# ---------------------------------------------------------------------------
# tests


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.ravel(np.asarray(a, dtype=float))
    b = np.ravel(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    res = stats.ks_2samp(a, b, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ensemble_ztest(increments) -> np.ndarray:
    """Z(t) = mean / (std / sqrt(P)) over paths, for increments shaped (P, nt)."""
    inc = np.asarray(increments, dtype=float)
    if inc.ndim == 1:
        inc = inc[:, None]
    P = inc.shape[0]
    if P < MIN_ZTEST_PATHS:
        raise ValueError(f"need at least {MIN_ZTEST_PATHS} paths, got {P}")
    mean = inc.mean(axis=0)
    se = inc.std(axis=0, ddof=1) / math.sqrt(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, mean / np.where(se > 0, se, 1.0), np.where(mean == 0, 0.0, np.sign(mean) * np.inf))
    return z


@dataclass
class MartingaleTestReport:
    phi: list
    times: list
    z: list
    frac_within: float
    qv: QVReport
    P: int
    delta_diag: float
    z_bound: float = 3.0
    extras: dict = field(default_factory=dict)

    @property
    def z_max(self) -> float:
        return float(np.max(np.abs(self.z))) if self.z else 0.0

    def to_json(self) -> dict:
        return {"phi": self.phi, "times": self.times, "z": self.z, "frac_within": self.frac_within,
                "z_max": self.z_max, "qv": self.qv.to_json(), "P": self.P, "delta_diag": self.delta_diag,
                **self.extras}


def martingale_test(ensemble: Ensemble, phi: GridFunction, lambda_n, drift: DriftSpec, q: np.ndarray,
                    delta_diag: float, z_bound: float = 3.0) -> MartingaleTestReport:
    """Z-tests on the increments of M^phi between recorded times, plus the QV ratio."""
    M = martingale_residuals(ensemble.states, ensemble.times, phi, lambda_n, drift, ensemble.alpha0, delta_diag)
    ok = np.all(np.isfinite(M), axis=-1)
    M = M[ok]
    z = ensemble_ztest(np.diff(M, axis=-1))
    realized = realized_qv(M)
    target = qv_targets(ensemble.states[ok], ensemble.times, phi, q, delta_diag)[..., -1]
    return MartingaleTestReport(list(phi.values), ensemble.times[1:].tolist(), z.tolist(),
                                float(np.mean(np.abs(z) < z_bound)), pooled_ratio(realized, target),
                                int(M.shape[0]), float(delta_diag), z_bound)
