"""Command-line entry point: validate, run, sweep, selftest.

Files written by ``run`` (prefix = scenario name):

* ``<name>.paths.csv``  columns ``path,t,k,x`` (k is the 1-based cell index)
* ``<name>.summary.json``  config, config hash, master seed, ensemble statistics
* ``<name>.diag.json``  clamp/overflow log, martingale and stickiness reports
* ``<name>.plot.gp``  gnuplot script for field snapshots of path 0

With ``outputs: []`` only the summary is written. The summary's ``timestamp``
is the one field not covered by ``content_hash``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, SweepPlan, validate
from .diagnostics import martingale_test, stickiness_report
from .dynamics import simulate
from .functions import Constant, Cosine, Sine
from .lattice import heat_kernel_build
from .noise import build_noise_factor
from .spectral import GridFunction, discretize_lambda, l2_distance

log = logging.getLogger("stickyheat")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_OVERFLOW, EXIT_FAILED = 0, 1, 2, 3, 4


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("STICKYHEAT_THREADS")
    return max(1, int(env)) if env else 1


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def probe_functions(cfg: ScenarioConfig) -> dict[str, GridFunction]:
    """The two lowest Laplacian eigenfunctions for the boundary, projected onto the lattice."""
    if cfg.boundary == "neumann":
        fns = {"constant": Constant(), "cos1": Cosine(1)}
    else:
        fns = {"sin1": Sine(1), "sin2": Sine(2)}
    return {k: GridFunction.project(f, cfg.n) for k, f in fns.items()}


def write_paths_csv(path: Path, ens) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "t", "k", "x"])
        P, nt, n = ens.states.shape
        for i in range(P):
            pid = int(ens.paths[i])
            for r in range(nt):
                t = repr(float(ens.times[r]))
                row = ens.states[i, r]
                for k in range(n):
                    w.writerow([pid, t, k + 1, repr(float(row[k]))])


def plot_script(cfg: ScenarioConfig, ens) -> str:
    nt = ens.times.size
    picks = sorted({0, nt // 4, nt // 2, (3 * nt) // 4, nt - 1})
    data = f"'{cfg.name}.paths.csv' every ::1"
    lines = [
        "# left: field snapshots of path 0; right: its cell-averaged mass over time",
        "set datafile separator ','",
        "set key outside",
        "set multiplot layout 1,2",
        f"set title '{cfg.name}: path 0 snapshots'",
        "set xlabel 'u'",
        "set ylabel 'x'",
        "plot " + ", \\\n     ".join(
            f"{data} using (($1==0 && abs($2-{ens.times[r]!r})<1e-12) ? "
            f"($3-0.5)/{cfg.n} : 1/0):4 with linespoints title 't={ens.times[r]:.4g}'"
            for r in picks
        ),
        f"set title '{cfg.name}: mass of path 0'",
        "set xlabel 't'",
        "set ylabel '<x, 1>'",
        f"plot {data} using ($1==0 ? $2 : 1/0):4 smooth unique with lines title 'mass'",
        "unset multiplot",
        "pause -1",
    ]
    return "\n".join(lines) + "\n"


def ensemble_summary(cfg: ScenarioConfig, ens) -> dict:
    ok = ~ens.overflow
    mass = ens.states[ok, -1, :].mean(axis=-1) if ok.any() else np.zeros(0)
    P = mass.size
    out = {
        "P": int(ens.P),
        "completed": int(P),
        "terminal_mass_mean": math.fsum(mass) / P if P else None,
        "terminal_mass_se": float(np.std(mass, ddof=1) / math.sqrt(P)) if P > 1 else None,
        "initial_mass": float(np.mean(cfg.g_n())),
        "indicator_threshold": ens.meta.get("threshold"),
    }
    return out


def run_scenario(cfg: ScenarioConfig, out_dir: Path, threads: int = 1, dump_kernel: bool = False,
                 dump_noise: bool = False, timestamp: str | None = None) -> int:
    errors, warnings = validate(cfg)
    for w in warnings:
        log.warning("%s: %s", cfg.name, w)
    if errors:
        for e in errors:
            log.error("%s: %s", cfg.name, e)
        return EXIT_INVALID
    occ_delta = cfg.occupation_delta
    run_cfg = cfg if occ_delta is not None else cfg.with_(occupation_delta=cfg.diag_delta())
    ens = simulate(run_cfg, threads=threads)
    chash = cfg.hash()
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "paths" in cfg.outputs:
            write_paths_csv(out_dir / f"{cfg.name}.paths.csv", ens)
            written.append(f"{cfg.name}.paths.csv")
        if "diag" in cfg.outputs:
            diag = diagnostics_payload(run_cfg, ens, chash)
            (out_dir / f"{cfg.name}.diag.json").write_text(_dump(diag))
            written.append(f"{cfg.name}.diag.json")
        if "plot" in cfg.outputs:
            (out_dir / f"{cfg.name}.plot.gp").write_text(plot_script(cfg, ens))
            written.append(f"{cfg.name}.plot.gp")
        if dump_kernel:
            hk = heat_kernel_build(cfg.n, cfg.alpha0)
            (out_dir / f"{cfg.name}.kernel.json").write_text(_dump(
                {"n": cfg.n, "alpha0": cfg.alpha0, "eigenvalues": hk.eigenvalues.tolist(),
                 "eigenvectors": hk.eigenvectors.tolist()}))
            written.append(f"{cfg.name}.kernel.json")
        if dump_noise:
            fac = build_noise_factor(cfg.spec, cfg.n, cfg.noise_backend)
            (out_dir / f"{cfg.name}.noise.json").write_text(_dump(
                {"backend": fac.backend, "factor": fac.matrix.tolist(), "q": cfg.q().tolist()}))
            written.append(f"{cfg.name}.noise.json")
        summary = {
            "name": cfg.name,
            "config_hash": chash,
            "master_seed": cfg.master_seed,
            "config": cfg.to_json(),
            "warnings": warnings,
            "ensemble": ensemble_summary(cfg, ens),
            "overflow_paths": ens.paths[ens.overflow].tolist(),
            "files": written,
        }
        summary["content_hash"] = hashlib.sha256(_dump(summary).encode()).hexdigest()
        summary["timestamp"] = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat()
        (out_dir / f"{cfg.name}.summary.json").write_text(_dump(summary))
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return EXIT_IO
    if ens.overflow.any():
        log.error("%d path(s) exceeded the overflow guard: %s", int(ens.overflow.sum()),
                  ens.paths[ens.overflow].tolist())
        return EXIT_OVERFLOW
    return EXIT_OK


def diagnostics_payload(cfg: ScenarioConfig, ens, chash: str) -> dict:
    clamp = ens.clamp_mass
    payload = {
        "config_hash": chash,
        "master_seed": cfg.master_seed,
        "clamp": {"total": math.fsum(clamp), "max_per_path": float(np.max(clamp)) if clamp.size else 0.0,
                  "paths_clamped": int(np.sum(clamp > 0))},
        "overflow": {"guard": 1e12, "paths": ens.paths[ens.overflow].tolist()},
    }
    if ens.occupation is not None:
        occ = ens.occupation[~ens.overflow].mean(axis=-1)
        if occ.size:
            rep = stickiness_report(occ, cfg.occupation_delta, cfg.T)
            payload["occupation"] = rep.to_json()
    if cfg.spec.J and ens.P - int(ens.overflow.sum()) >= 30:
        lam_n = cfg.lambda_n()
        q = cfg.q()
        payload["martingale"] = {
            name: martingale_test(ens, phi, lam_n, cfg.drift, q, cfg.diag_delta()).to_json()
            for name, phi in probe_functions(cfg).items()
        }
    else:
        payload["martingale"] = None
    return payload


# ---------------------------------------------------------------------------
# sweeps


def sweep_point(cfg: ScenarioConfig, statistic: str, threads: int = 1) -> dict:
    if statistic == "lambda_l2_error":
        v = l2_distance(discretize_lambda(cfg.spec, cfg.lam, cfg.n), cfg.lam)
        return {"mean": v, "se": 0.0, "P": 0}
    errors, _ = validate(cfg)
    if errors:
        raise ValueError("; ".join(errors))
    if statistic == "occupation_time":
        delta = cfg.occupation_delta if cfg.occupation_delta is not None else cfg.diag_delta()
        ens = simulate(cfg.with_(occupation_delta=delta), threads=threads)
        vals = ens.occupation[~ens.overflow].mean(axis=-1)
    elif statistic == "terminal_mass":
        ens = simulate(cfg, threads=threads)
        vals = ens.states[~ens.overflow, -1, :].mean(axis=-1)
    elif statistic == "martingale_z_max":
        ens = simulate(cfg, threads=threads)
        phi = next(iter(probe_functions(cfg).values()))
        rep = martingale_test(ens, phi, cfg.lambda_n(), cfg.drift, cfg.q(), cfg.diag_delta())
        return {"mean": rep.z_max, "se": 0.0, "P": rep.P}
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    P = vals.size
    se = float(np.std(vals, ddof=1) / math.sqrt(P)) if P > 1 else float("nan")
    return {"mean": math.fsum(vals) / P, "se": se, "P": int(P)}


def run_sweep(plan: SweepPlan, out_dir: Path, threads: int = 1) -> tuple[int, list[dict]]:
    errs = plan.validate()
    if errs:
        for e in errs:
            log.error("sweep: %s", e)
        return EXIT_INVALID, []
    rows = []
    for v in plan.values:
        row = {"axis": plan.axis, "value": v, "statistic": plan.statistic}
        try:
            res = sweep_point(plan.point(v), plan.statistic, threads)
            row.update(res, status="ok", ci_low=res["mean"] - 1.96 * res["se"],
                       ci_high=res["mean"] + 1.96 * res["se"], error="")
        except Exception as exc:  # recorded per point; the sweep continues
            row.update(mean=None, se=None, P=0, ci_low=None, ci_high=None, status="failed", error=str(exc))
        rows.append(row)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{plan.base.name}.sweep"
    cols = ["axis", "value", "statistic", "mean", "se", "ci_low", "ci_high", "P", "status", "error"]
    with (out_dir / f"{stem}.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k) for k in cols})
    (out_dir / f"{stem}.json").write_text(_dump({"base_hash": plan.base.hash(), "plan": plan.to_json(),
                                                 "rows": rows}))
    return (EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAILED), rows


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stickyheat", description="Sticky-reflected stochastic heat equation toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a scenario config")
    p.add_argument("config")

    p = sub.add_parser("run", help="simulate a scenario and write artifacts")
    p.add_argument("config")
    p.add_argument("--out", default=".")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--dump-kernel", action="store_true")
    p.add_argument("--dump-noise", action="store_true")

    p = sub.add_parser("sweep", help="run a one-axis convergence sweep")
    p.add_argument("plan")
    p.add_argument("--out", default=".")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("selftest", help="run the acceptance criteria")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.add_argument("--threads", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.verb == "validate":
            cfg = ScenarioConfig.load(args.config)
            errors, warnings = validate(cfg)
            for w in warnings:
                print(f"warning: {w}")
            for e in errors:
                print(f"error: {e}")
            if not errors:
                print(f"ok {cfg.name} {cfg.hash()}")
            return EXIT_INVALID if errors else EXIT_OK
        if args.verb == "run":
            cfg = ScenarioConfig.load(args.config)
            return run_scenario(cfg, Path(args.out), _threads(args.threads), args.dump_kernel, args.dump_noise)
        if args.verb == "sweep":
            code, rows = run_sweep(SweepPlan.load(args.plan), Path(args.out), _threads(args.threads))
            for r in rows:
                print(f"{r['axis']}={r['value']}: {r['statistic']} = {r['mean']} ({r['status']})")
            return code
        if args.verb == "selftest":
            from .acceptance import run_all

            only = [int(s) for s in args.only.split(",")] if args.only else None
            results = run_all(only, threads=_threads(args.threads), echo=True)
            return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
