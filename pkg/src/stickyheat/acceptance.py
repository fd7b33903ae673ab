"""The nine acceptance checks, shared by ``stickyheat selftest`` and the test suite.

Each check returns a ``Result`` with a pass flag and a one-line detail string
listing the measured quantities next to their thresholds.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .diagnostics import ks_two_sample, martingale_test, occupation_time, qv_support_check
from .dynamics import DriftSpec, SchemeParams, simulate, simulate_srbm, srbm_time_change_ensemble
from .functions import Constant, Cosine, FunctionSpec, NormalizedIndicator, Sine
from .noise import SeedPolicy, build_noise_factor
from .spectral import EigenSpec, GridFunction, lambda_convergence_table, q_matrix


@dataclass
class Result:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} [{flag}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


TWO_MODE_SPEC = EigenSpec(((1.0, Constant()), (0.5, Cosine(1))))


# -- 1 ----------------------------------------------------------------------


def deterministic_reduction() -> Result:
    n, T = 128, 0.1
    cfg = ScenarioConfig("heat", n=n, T=T, dt=1e-3, g=FunctionSpec.cosine(1.0, 1.0, 1),
                         theta_implicit=0.5, record_every=100)
    x = simulate(cfg).states[0, -1]
    u = (np.arange(n) + 0.5) / n
    exact = 1.0 + math.exp(-math.pi**2 * T / 2) * np.cos(math.pi * u)
    err = float(np.max(np.abs(x - exact)))
    return Result(1, "deterministic heat flow", err <= 1e-3, f"max error {err:.2e} <= 1e-3")


# -- 2, 3 -------------------------------------------------------------------


@dataclass
class StickyBMSamples:
    terminal_hard: np.ndarray
    terminal_oracle: np.ndarray
    occ_hard: np.ndarray
    occ_oracle: np.ndarray
    support_hard: np.ndarray  # (3, P) QV fractions at deltas
    support_oracle: np.ndarray
    deltas: tuple
    oracle_drift_residual: np.ndarray  # x(T) - lam Leb{x=0}, mean zero iff the time change is right


_STICKY_CACHE: dict = {}


def sticky_bm_samples(P: int = 10_000, dt: float = 1e-4, batch: int = 1000) -> StickyBMSamples:
    key = (P, dt)
    if key in _STICKY_CACHE:
        return _STICKY_CACHE[key]
    lam = sigma = 1.0
    T = 1.0
    delta = 2 * math.sqrt(dt)
    deltas = (0.04, 0.02, 0.01)
    params = SchemeParams(dt)
    parts: dict[str, list] = {k: [] for k in ("xh", "xo", "oh", "oo", "sh", "so", "dr")}
    for b in range(0, P, batch):
        paths = range(b, min(b + batch, P))
        hard = simulate_srbm(lam, sigma, 0.0, T, params, SeedPolicy(20_250_101), paths).states[..., 0]
        orc = srbm_time_change_ensemble(lam, sigma, 0.0, T, dt, SeedPolicy(20_250_102), paths).states[..., 0]
        for tag, s in (("h", hard), ("o", orc)):
            parts["x" + tag].append(s[:, -1])
            parts["o" + tag].append(occupation_time(s, delta, dt))
            parts["s" + tag].append(np.array([f for _, f in qv_support_check(s, deltas)]))
        parts["dr"].append(orc[:, -1] - lam * occupation_time(orc, 0.0, dt))
    res = StickyBMSamples(*(np.concatenate(parts[k], axis=-1) for k in ("xh", "xo", "oh", "oo", "sh", "so")),
                          deltas, np.concatenate(parts["dr"]))
    _STICKY_CACHE[key] = res
    return res


def cross_scheme_equivalence(P: int = 10_000) -> Result:
    s = sticky_bm_samples(P)
    stat, p = ks_two_sample(s.terminal_hard, s.terminal_oracle)
    mh, mo = s.occ_hard.mean(), s.occ_oracle.mean()
    rel = abs(mh - mo) / mo
    z_orc = s.oracle_drift_residual.mean() / (s.oracle_drift_residual.std(ddof=1) / math.sqrt(P))
    ok = p > 0.01 and rel < 0.05
    return Result(2, "sticky BM: hard scheme vs time change",
                  ok, f"KS p={p:.3f} (D={stat:.4f}) > 0.01; occupation {mh:.4f} vs {mo:.4f}, "
                      f"rel diff {rel:.3%} < 5%; oracle drift check Z={z_orc:.2f}")


def qv_support(P: int = 10_000) -> Result:
    s = sticky_bm_samples(P)
    fh = s.support_hard.mean(axis=1)
    fo = s.support_oracle.mean(axis=1)
    ok = True
    parts = []
    for tag, f in (("hard", fh), ("oracle", fo)):
        mono = bool(f[0] > f[1] > f[2])
        ok &= bool(f[2] <= 0.10) and mono
        parts.append(f"{tag} " + "/".join(f"{v:.4f}" for v in f) + (" decreasing" if mono else " NOT decreasing"))
    return Result(3, "QV accrued near zero", ok,
                  f"fractions at delta={'/'.join(map(str, s.deltas))}: " + "; ".join(parts) + "; need <= 0.10 at 0.01")


# -- 4 ----------------------------------------------------------------------


def martingale_problem(P: int = 2000, threads: int = 1) -> Result:
    cfg = ScenarioConfig("mart", n=32, T=0.5, dt=1e-4, spec=TWO_MODE_SPEC, lam=FunctionSpec.constant(0.5),
                         g=FunctionSpec.constant(0.2), drift=DriftSpec.linear(0.2), ensemble=P,
                         record_every=25, master_seed=4)
    ens = simulate(cfg, threads=threads)
    ok = True
    parts = []
    for name, fn in (("e1", Constant()), ("e2", Cosine(1))):
        phi = GridFunction.project(fn, cfg.n)
        rep = martingale_test(ens, phi, cfg.lambda_n(), cfg.drift, cfg.q(), cfg.diag_delta())
        r = rep.qv.pooled_ratio
        good = rep.frac_within >= 0.95 and r is not None and 0.9 <= r <= 1.1
        ok &= good
        parts.append(f"{name}: |Z|<3 at {rep.frac_within:.1%} of {len(rep.z)} times, "
                     f"QV ratio {r:.4f}+-{rep.qv.pooled_se:.4f}")
    return Result(4, "lattice martingale problem", ok, "; ".join(parts) + " (need >=95%, ratio in [0.9, 1.1])")


# -- 5 ----------------------------------------------------------------------


def lambda_discretization() -> Result:
    spec = EigenSpec(((1.0, Constant()),))
    table = lambda_convergence_table(spec, FunctionSpec.linear(0.0, 1.0), [8, 16, 32, 64])
    errs = np.array([e for _, e in table])
    oracle = np.array([1 / (2 * math.sqrt(3) * n) for n, _ in table])
    dev = float(np.max(np.abs(errs - oracle)))
    dec = bool(np.all(np.diff(errs) < 0))
    return Result(5, "lambda discretization", dec and dev <= 1e-10,
                  f"errors {', '.join(f'{e:.6e}' for e in errs)}; strictly decreasing={dec}; "
                  f"max |err - 1/(2 sqrt3 n)| = {dev:.1e} <= 1e-10")


# -- 6 ----------------------------------------------------------------------


def regularization_consistency(P: int = 2000, threads: int = 1) -> Result:
    """Cell-averaged fraction of [0, T] spent below 0.1, regularized vs hard.

    The limit is extrapolated with first order in epsilon from the last pair,
    path by path on common seeds: L = 2 o(0.025) - o(0.05).
    """
    T, dt = 0.1, 1e-5
    base = ScenarioConfig("reg", n=16, T=T, dt=dt, spec=TWO_MODE_SPEC, lam=FunctionSpec.constant(1.0),
                          ensemble=P, record_every=int(round(T / dt)), occupation_delta=0.1, master_seed=6)
    occ = {}
    for eps in (0.1, 0.05, 0.025):
        ens = simulate(base.with_(scheme="regularized", epsilon=eps), threads=threads)
        occ[eps] = ens.occupation.mean(axis=1) / T
    hard = simulate(base.with_(scheme="hard"), threads=threads).occupation.mean(axis=1) / T
    means = [occ[e].mean() for e in (0.1, 0.05, 0.025)]
    mono = bool(means[0] > means[1] > means[2] or means[0] < means[1] < means[2])
    L = 2 * occ[0.025] - occ[0.05]
    se = math.sqrt(L.var(ddof=1) / P + hard.var(ddof=1) / P)
    gap = (L.mean() - hard.mean()) / se
    ok = mono and abs(gap) <= 2.0
    return Result(6, "regularized -> hard occupation", ok,
                  f"eps 0.1/0.05/0.025: {means[0]:.4f}/{means[1]:.4f}/{means[2]:.4f} (monotone={mono}); "
                  f"extrapolated {L.mean():.4f} vs hard {hard.mean():.4f}, {gap:+.2f} combined SE (need |.|<=2)")


# -- 7 ----------------------------------------------------------------------


def bookkeeping_refinement(P: int = 1000) -> Result:
    lam = sigma = 1.0
    dts = (1e-3, 5e-4, 2.5e-4)
    means = []
    for dt in dts:
        params = SchemeParams(dt, epsilon=0.1)
        ens = simulate_srbm(lam, sigma, 0.0, 1.0, params, SeedPolicy(7), range(P), scheme="regularized",
                            track=True)
        a = ens.tracked["drift_integral"][..., 0]
        qv = ens.tracked["noise_qv"][..., 0]
        defect = np.max(np.abs(a - lam * (ens.times - qv / sigma**2)), axis=1)
        means.append(defect.mean())
    ratios = [means[i + 1] / means[i] for i in range(len(means) - 1)]
    ok = all(r < 0.8 for r in ratios)
    return Result(7, "drift/QV bookkeeping refinement", ok,
                  f"mean max defect {', '.join(f'{m:.4e}' for m in means)} at dt {dts}; "
                  f"ratios {', '.join(f'{r:.3f}' for r in ratios)} < 0.8")


# -- 8 ----------------------------------------------------------------------


def reproducibility() -> Result:
    from .cli import run_scenario

    cfg = ScenarioConfig("repro", n=8, T=0.05, dt=2.5e-4, spec=TWO_MODE_SPEC, lam=FunctionSpec.constant(1.0),
                         g=FunctionSpec.constant(0.05), ensemble=40, record_every=1, master_seed=8)
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for i, threads in enumerate((1, 1, 3)):
            out = Path(tmp) / f"r{i}"
            code = run_scenario(cfg, out, threads=threads)
            if code != 0:
                return Result(8, "reproducibility", False, f"run exited with {code}")
            digests.append(tuple((out / f"repro.{ext}").read_bytes() for ext in ("paths.csv", "diag.json")))
    same = digests[0] == digests[1]
    thr = digests[0] == digests[2]
    return Result(8, "reproducibility", same and thr,
                  f"identical bytes across reruns={same}, across 1 vs 3 threads={thr}")


# -- 9 ----------------------------------------------------------------------


def noise_calibration(N: int = 100_000) -> Result:
    n, dt = 8, 1e-3
    specs = {
        "two-mode": TWO_MODE_SPEC,
        "sines": EigenSpec(((1.0, Sine(1)), (0.5, Sine(2)), (0.25, Sine(3)))),
        "rank-2 local": EigenSpec(((1.0, NormalizedIndicator(0.0, 0.25)), (0.5, NormalizedIndicator(0.5, 0.75)))),
    }
    ok = True
    parts = []
    for name, spec in specs.items():
        target = q_matrix(spec, n) * dt
        for backend in ("spectral", "factor"):
            fac = build_noise_factor(spec, n, backend)
            xi = SeedPolicy(9).block([0], 0, N, fac.width)[0]
            inc = fac.combine(xi) * math.sqrt(dt)
            emp = inc.T @ inc / N  # mean is zero by construction
            var = (np.outer(np.diag(target), np.diag(target)) + target**2) / N
            se = np.sqrt(var)
            diff = np.abs(emp - target)
            zero = se == 0
            worst = float(np.max(np.where(zero, 0.0, diff / np.where(zero, 1.0, se))))
            exact_zero = bool(np.all(diff[zero] == 0))
            good = worst < 4 and exact_zero
            ok &= good
            parts.append(f"{name}/{backend} max {worst:.2f} SE")
    return Result(9, "noise covariance calibration", ok, "; ".join(parts) + " (need < 4)")


CRITERIA = {
    1: deterministic_reduction,
    2: cross_scheme_equivalence,
    3: qv_support,
    4: martingale_problem,
    5: lambda_discretization,
    6: regularization_consistency,
    7: bookkeeping_refinement,
    8: reproducibility,
    9: noise_calibration,
}


def run_one(number: int, threads: int = 1) -> Result:
    fn = CRITERIA[number]
    t0 = time.perf_counter()
    kwargs = {"threads": threads} if number in (4, 6) else {}
    res = fn(**kwargs)
    res.seconds = time.perf_counter() - t0
    return res


def run_all(only=None, threads: int = 1, echo: bool = False) -> list[Result]:
    out = []
    for k in sorted(only or CRITERIA):
        r = run_one(k, threads)
        if echo:
            print(r.line(), flush=True)
        out.append(r)
    return out
