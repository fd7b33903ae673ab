"""Scenario and sweep configuration, JSON round trip, and validation.

Config schema (one JSON object per scenario)::

    {
      "name": str,
      "boundary": "neumann" | "dirichlet",
      "n": int, "T": float, "dt": float,
      "scheme": "hard" | "regularized",
      "epsilon": float, "theta_implicit": float,
      "indicator_threshold": float,          # delta_ind, default 0
      "carry_deficit": bool,                 # keep clamped overshoot as sticky time
      "spec": {"pairs": [{"mu": float, "fn": {...}}]},
      "lambda": {"type": ...}, "g": {"type": ...},
      "drift": {"type": "zero" | "linear" | "saturated" | "tabulated", ...},
      "ensemble": int,
      "seeds": {"master_seed": int},
      "record_every": int,
      "outputs": ["paths", "diag", "plot"],
      "noise_backend": "spectral" | "factor",
      "occupation_delta": float | null,
      "diag_threshold": float | null,
      "clamp_negatives": bool,
      "stability_factor": float
    }
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dynamics import DriftSpec, Prepared, SchemeParams
from .functions import FunctionSpec
from .lattice import DIRICHLET, NEUMANN
from .noise import SeedPolicy, build_noise_factor
from .spectral import ORTHONORMAL_TOL, EigenSpec, check_drift_condition, discretize_lambda, q_matrix

BOUNDARIES = {"neumann": NEUMANN, "dirichlet": DIRICHLET}
OUTPUTS = ("paths", "diag", "plot")
ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    n: int
    T: float
    dt: float
    spec: EigenSpec = field(default_factory=EigenSpec)
    lam: FunctionSpec = field(default_factory=lambda: FunctionSpec.constant(0.0))
    g: FunctionSpec = field(default_factory=lambda: FunctionSpec.constant(0.0))
    drift: DriftSpec = field(default_factory=DriftSpec.zero)
    boundary: str = "neumann"
    scheme: str = "hard"
    epsilon: float = 0.05
    theta_implicit: float = 0.5
    indicator_threshold: float = 0.0
    carry_deficit: bool = True
    ensemble: int = 1
    master_seed: int = 0
    record_every: int = 1
    outputs: tuple = OUTPUTS
    noise_backend: str = "spectral"
    occupation_delta: float | None = None
    diag_threshold: float | None = None
    clamp_negatives: bool = True
    stability_factor: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))

    @property
    def alpha0(self) -> int:
        return BOUNDARIES[self.boundary]

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    def scheme_params(self) -> SchemeParams:
        return SchemeParams(self.dt, self.epsilon, self.theta_implicit, self.clamp_negatives,
                            self.carry_deficit, self.indicator_threshold, self.stability_factor)

    def q(self) -> np.ndarray:
        return q_matrix(self.spec, self.n)

    def noise_rate(self) -> float:
        """Largest per-unit-time variance of a positive cell's noise, n max_k q_kk."""
        return self.n * float(np.max(np.diag(self.q()))) if self.spec.J else 0.0

    def diag_delta(self) -> float:
        """Diagnostic 'at zero' threshold, 2 sqrt(n max q_kk dt) unless set."""
        if self.diag_threshold is not None:
            return float(self.diag_threshold)
        return 2.0 * math.sqrt(self.noise_rate() * self.dt)

    def lambda_n(self):
        return discretize_lambda(self.spec, self.lam, self.n)

    def g_n(self) -> np.ndarray:
        return self.g.cell_means(self.n)

    def prepare(self, track_integrals: bool = False) -> Prepared:
        params = self.scheme_params()
        return Prepared(
            n=self.n, alpha0=self.alpha0, steps=self.steps, record_every=self.record_every,
            params=params, scheme=self.scheme, lam_n=self.lambda_n().array(), g_n=self.g_n(),
            q=self.q(), factor=build_noise_factor(self.spec, self.n, self.noise_backend),
            drift=self.drift, seeds=SeedPolicy(self.master_seed),
            occupation_delta=self.occupation_delta, track=track_integrals,
        )

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    # -- serialization

    def to_json(self) -> dict:
        return {
            "name": self.name, "boundary": self.boundary, "n": self.n, "T": self.T, "dt": self.dt,
            "scheme": self.scheme, "epsilon": self.epsilon, "theta_implicit": self.theta_implicit,
            "indicator_threshold": self.indicator_threshold, "carry_deficit": self.carry_deficit,
            "spec": self.spec.to_json(),
            "lambda": self.lam.to_json(), "g": self.g.to_json(), "drift": self.drift.to_json(),
            "ensemble": self.ensemble, "seeds": {"master_seed": self.master_seed},
            "record_every": self.record_every, "outputs": list(self.outputs),
            "noise_backend": self.noise_backend, "occupation_delta": self.occupation_delta,
            "diag_threshold": self.diag_threshold, "clamp_negatives": self.clamp_negatives,
            "stability_factor": self.stability_factor,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioConfig":
        obj = dict(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__) - {"lambda", "seeds"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {k: obj[k] for k in cls.__dataclass_fields__ if k in obj and k not in ("spec", "lam", "g", "drift")}
        if "seeds" in obj:
            kw["master_seed"] = int(obj["seeds"]["master_seed"])
        if "spec" in obj:
            kw["spec"] = EigenSpec.from_json(obj["spec"])
        if "lambda" in obj:
            kw["lam"] = FunctionSpec.from_json(obj["lambda"])
        if "g" in obj:
            kw["g"] = FunctionSpec.from_json(obj["g"])
        if "drift" in obj:
            kw["drift"] = DriftSpec.from_json(obj["drift"])
        for key in ("n", "ensemble", "record_every", "master_seed"):
            if key in kw:
                kw[key] = int(kw[key])
        return cls(**kw)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_json(json.loads(Path(path).read_text()))

    def hash(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _nonneg_on_grid(fn: FunctionSpec, n_points: int = 2001) -> bool:
    u = np.linspace(0.0, 1.0, n_points)
    return bool(np.all(np.asarray(fn(u)) >= -1e-14))


def validate(cfg: ScenarioConfig) -> tuple[list[str], list[str]]:
    """All errors and warnings for a scenario. Pure: touches no files or RNG."""
    errors: list[str] = []
    warnings: list[str] = []
    if cfg.boundary not in BOUNDARIES:
        errors.append(f"boundary must be one of {sorted(BOUNDARIES)}, got {cfg.boundary!r}")
    if cfg.scheme not in ("hard", "regularized"):
        errors.append(f"scheme must be 'hard' or 'regularized', got {cfg.scheme!r}")
    if cfg.noise_backend not in ("spectral", "factor"):
        errors.append(f"noise_backend must be 'spectral' or 'factor', got {cfg.noise_backend!r}")
    if not isinstance(cfg.n, int) or cfg.n < 1:
        errors.append("n must be a positive integer")
    if not cfg.T > 0:
        errors.append("T must be positive")
    if not cfg.dt > 0:
        errors.append("dt must be positive")
    if cfg.ensemble < 1:
        errors.append("ensemble must be >= 1")
    if cfg.record_every < 1:
        errors.append("record_every must be >= 1")
    if not 0.0 <= cfg.theta_implicit <= 1.0:
        errors.append("theta_implicit must lie in [0, 1]")
    if cfg.scheme == "regularized" and not cfg.epsilon > 0:
        errors.append("epsilon must be positive for the regularized scheme")
    if not cfg.indicator_threshold >= 0:
        errors.append("indicator_threshold must be >= 0")
    if not 0 <= cfg.master_seed < 2**64:
        errors.append("master_seed must be an unsigned 64-bit integer")
    bad_out = [o for o in cfg.outputs if o not in OUTPUTS]
    if bad_out:
        errors.append(f"unknown outputs {bad_out}; allowed {list(OUTPUTS)}")
    if errors:
        return errors, warnings

    ratio = cfg.T / cfg.dt
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        errors.append(f"T/dt = {ratio} is not an integer")
    elif cfg.steps % cfg.record_every:
        errors.append(f"T/dt = {cfg.steps} is not a multiple of record_every = {cfg.record_every}")
    # explicit part of the theta-scheme is stable for dt (1 - 2 theta) n^2 <= stability_factor
    expl = 1.0 - 2.0 * cfg.theta_implicit
    if expl > 0 and cfg.dt * expl * cfg.n**2 > cfg.stability_factor:
        errors.append(f"dt = {cfg.dt} exceeds the explicit stability bound "
                      f"{cfg.stability_factor / (expl * cfg.n**2):.3e} for theta = {cfg.theta_implicit}")
    if not _nonneg_on_grid(cfg.g):
        errors.append("initial data g must be nonnegative")
    if not _nonneg_on_grid(cfg.lam):
        errors.append("lambda must be nonnegative")
    if cfg.boundary == "dirichlet":
        ends = np.asarray(cfg.g(np.array([0.0, 1.0])))
        if np.any(np.abs(ends) > ENDPOINT_TOL):
            errors.append(f"Dirichlet initial data must vanish at u=0 and u=1, got g(0)={ends[0]}, g(1)={ends[1]}")
    defect = cfg.spec.orthonormality_defect()
    if defect > ORTHONORMAL_TOL:
        errors.append(f"eigenfunctions are not orthonormal (max Gram defect {defect:.2e})")
    ok, bad = check_drift_condition(cfg.spec, cfg.lam)
    if not ok:
        warnings.append(f"lambda is positive where the noise intensity vanishes ({bad.size} grid points); "
                        "existence still holds in special cases, e.g. Q = 0")
    if cfg.scheme == "hard" and not cfg.carry_deficit and cfg.indicator_threshold == 0.0:
        warnings.append("a memoryless clamp with indicator_threshold = 0 reflects instead of sticking")
    if cfg.record_every * cfg.dt > cfg.T / 200:
        warnings.append("recording stride exceeds T/200; trapezoid diagnostics will be coarse")
    return errors, warnings


SWEEP_AXES = ("n", "dt", "epsilon", "lambda_scale")
SWEEP_STATISTICS = ("lambda_l2_error", "occupation_time", "terminal_mass", "martingale_z_max")


@dataclass(frozen=True)
class SweepPlan:
    base: ScenarioConfig
    axis: str
    values: tuple
    statistic: str

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def validate(self) -> list[str]:
        errors = []
        if self.axis not in SWEEP_AXES:
            errors.append(f"axis must be one of {list(SWEEP_AXES)}")
        if self.statistic not in SWEEP_STATISTICS:
            errors.append(f"statistic must be one of {list(SWEEP_STATISTICS)}")
        v = np.asarray(self.values, dtype=float)
        if v.size == 0:
            errors.append("sweep needs at least one value")
        elif v.size > 1:
            d = np.diff(v)
            if not (np.all(d > 0) or np.all(d < 0)):
                errors.append("sweep values must be strictly monotone")
        return errors

    def point(self, value) -> ScenarioConfig:
        b = self.base
        if self.axis == "n":
            return replace(b, n=int(value), name=f"{b.name}_n{int(value)}")
        if self.axis == "dt":
            return replace(b, dt=float(value), name=f"{b.name}_dt{value:g}")
        if self.axis == "epsilon":
            return replace(b, epsilon=float(value), name=f"{b.name}_eps{value:g}")
        if self.axis == "lambda_scale":
            return replace(b, lam=b.lam.scaled(float(value)), name=f"{b.name}_lam{value:g}")
        raise ValueError(f"unknown sweep axis {self.axis!r}")

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "axis": self.axis, "values": list(self.values),
                "statistic": self.statistic}

    @classmethod
    def from_json(cls, obj: dict, root: Path | None = None) -> "SweepPlan":
        base = obj["base"]
        if isinstance(base, str):
            base = json.loads(((root or Path(".")) / base).read_text())
        return cls(ScenarioConfig.from_json(base), obj["axis"], tuple(obj["values"]), obj["statistic"])

    @classmethod
    def load(cls, path) -> "SweepPlan":
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), path.parent)
