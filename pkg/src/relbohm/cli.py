"""Scenario runner.

    relbohm run scenarios/standing_wave_equivariance.json --out out/
    relbohm suite scenarios/ --out out/ --jobs 4

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or scenario error,
3 runtime error.  Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import dynamics, measure, stats
from .errors import NodeProximity, StepLimitExceeded
from .scenario import Scenario, ScenarioError, parse_scenario
from .spacetime import LorentzBoost, as_configuration
from .wavefn import kg_residual

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3
AXIS_INDEX = {"t": 0, "x": 1, "y": 2, "z": 3}


@dataclass
class RunReport:
    scenario: str
    scenario_hash: str
    task: str
    seed: int
    checks: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    manifest: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "header": {"wall_clock_seconds": self.wall_clock,
                       "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")},
            "scenario": self.scenario,
            "scenario_hash": self.scenario_hash,
            "task": self.task,
            "seed": self.seed,
            "pass": self.passed,
            "checks": self.checks,
            "metrics": self.metrics,
            "manifest": sorted(self.manifest),
        }


def _dump(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _settings(params, scale):
    s = dynamics.IntegratorSettings(**params.get("settings", {}))
    return s.scaled(scale) if scale != 1.0 else s


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def _beta(b):
    return (float(b), 0.0, 0.0) if isinstance(b, (int, float)) else tuple(map(float, b))


def _tag(x: float) -> str:
    return f"{x:g}".replace("-", "m")


class _Run:
    def __init__(self, sc: Scenario, out: Path, seed: int, scale: float, report: RunReport):
        self.sc, self.out, self.seed, self.scale, self.report = sc, out, seed, scale, report
        self.psi = sc.wavefunction
        self.p = sc.params

    def emit(self, name: str) -> Path:
        self.report.manifest.append(name)
        return self.out / name

    def check(self, name, ok, **metrics):
        self.report.checks[name] = bool(ok)
        for k, v in metrics.items():
            self.report.metrics[f"{name}.{k}" if k else name] = v

    # tasks -------------------------------------------------------------

    def trajectory(self):
        settings = _settings(self.p, self.scale)
        span = self.p.get("s_span", [0.0, 1.0])
        n_samples = int(self.p.get("n_samples", 101))
        finals = self.p.get("expect_final")
        for i, x0 in enumerate(self.p["initial"]):
            x0 = as_configuration(x0, self.psi.n)
            try:
                traj = dynamics.integrate(self.psi, x0, span, settings, n_samples=n_samples)
                completed, msg = True, ""
            except (NodeProximity, StepLimitExceeded) as e:
                traj = getattr(e, "trajectory", None)
                completed, msg = False, str(e)
            if traj is not None and len(traj):
                dynamics.write_trajectory_csv(traj, self.emit(f"trajectory_{i:03d}.csv"))
            tag = f"trajectory_{i:03d}"
            self.check(f"{tag}.completed", completed, message=msg, steps=traj.steps if traj else 0)
            if traj is None or not len(traj):
                continue
            frac = dynamics.superluminal_fraction(traj)
            self.report.metrics[f"{tag}.superluminal_fraction"] = frac
            self.report.metrics[f"{tag}.final"] = traj.final.tolist()
            if "expect_superluminal" in self.p:
                want = bool(self.p["expect_superluminal"])
                self.check(f"{tag}.superluminal", (frac > 0) == want)
            if finals is not None:
                dev = float(np.max(np.abs(traj.final - np.asarray(finals[i], dtype=float))))
                self.check(f"{tag}.final_state", completed and dev <= float(self.p.get("final_tol", 1e-8)),
                           deviation=dev)

    def ensemble(self):
        count = int(self.p.get("count", 10000))
        ens = stats.sample(self.psi, count, self.seed)
        stats.write_ensemble_csv(ens, self.emit("ensemble.csv"))
        self.report.metrics["ensemble.acceptance_rate"] = count / ens.proposals
        alpha = float(self.p.get("alpha", 0.01))
        rows = []
        for ref in self.p.get("reference", []):
            a, mu = int(ref.get("particle", 0)), AXIS_INDEX[ref.get("axis", "x")]
            lo, hi = self.psi.domain[a].lo[mu], self.psi.domain[a].hi[mu]
            cdf = reference_cdf(ref.get("density", "uniform"), lo, hi, float(ref.get("wavenumber", 1.0)))
            res = sps.kstest(ens.axis(a, mu), cdf)
            ok = bool(res.pvalue > alpha)
            name = f"ks_1samp[particle={a},axis={'txyz'[mu]},density={ref.get('density', 'uniform')}]"
            rows.append(stats.CheckRecord(name, float(res.statistic), float(res.pvalue), count, self.seed, ok).to_dict())
            self.check(name, ok, statistic=float(res.statistic), p_value=float(res.pvalue))
        if rows:
            stats.write_report_json(rows, self.emit("ensemble_ks.json"))

    def equivariance(self):
        settings = _settings(self.p, self.scale)
        count = int(self.p.get("count", 20000))
        for ds in _as_list(self.p.get("delta_s", 0.5)):
            rep = stats.equivariance_test(self.psi, count, self.seed, float(ds), settings,
                                          float(self.p.get("alpha", 0.01)), int(self.p.get("jobs", 1)))
            stats.write_report_json(rep.to_json(), self.emit(f"equivariance_ds{_tag(ds)}.json"))
            self.check(f"equivariance[delta_s={ds:g}]", rep.passed, leak_fraction=rep.leak_fraction,
                       min_p_value=min(r.p_value for r in rep.records))

    def continuity(self):
        count = int(self.p.get("count", 100))
        h = float(self.p.get("h", 1e-4))
        tol = float(self.p.get("tol", 1e-5))
        # oversample; configurations within 2h of the boundary are skipped
        cfgs = stats.sample(self.psi, 2 * count, self.seed).configurations
        res = []
        for c in cfgs:
            if len(res) == count:
                break
            try:
                res.append(stats.continuity_residual(self.psi, c, h))
            except (NodeProximity, ValueError):
                continue
        worst = max(res) if res else float("inf")
        row = stats.CheckRecord("continuity_residual", worst, None, len(res), self.seed,
                               bool(len(res) == count and worst <= tol))
        stats.write_report_json([row.to_dict()], self.emit("continuity.json"))
        self.check("continuity", row.passed, max_residual=worst, evaluated=len(res))

    def covariance(self):
        settings = _settings(self.p, self.scale)
        x0 = as_configuration(self.p["initial"], self.psi.n)
        span = self.p.get("s_span", [0.0, 2.0])
        tol = float(self.p.get("tol", 1e-6))
        rows = []
        for b in self.p.get("betas", [0.3, 0.6]):
            beta = _beta(b)
            dev = dynamics.covariance_deviation(self.psi, LorentzBoost(beta), x0, span, settings,
                                                int(self.p.get("n_samples", 101)))
            name = f"covariance[beta=({beta[0]:g},{beta[1]:g},{beta[2]:g})]"
            rows.append(stats.CheckRecord(name, dev, None, 1, self.seed, dev <= tol).to_dict())
            self.check(name, dev <= tol, deviation=dev)
        stats.write_report_json(rows, self.emit("covariance.json"))

    def measurement(self):
        if self.psi.n != 1:
            raise ScenarioError("measurement scenarios describe the one-particle system state (n = 1)")
        box = self.psi.domain[0]
        basis = measure.EigenBasis.box_harmonics(box, self.psi.masses[0], self.p["harmonics"])
        exp = measure.expand(self.psi, basis)
        born_tol = float(self.p.get("born_tol", 1e-8))
        self.check("expansion_complete", exp.residual <= born_tol, residual=exp.residual)
        c = exp.coefficients
        c = c / np.sqrt(np.sum(np.abs(c) ** 2))
        pc = dict(self.p.get("pointer", {}))
        if "cell" in pc:
            pc["cell"] = tuple(tuple(x) for x in pc["cell"])
        pointers = measure.PointerFamily.evenly_spaced(len(c), **pc)
        joint = measure.couple(c, pointers, basis)
        p_theory = measure.outcome_probabilities(joint)
        born_dev = float(np.max(np.abs(p_theory - np.abs(c) ** 2)))
        self.check("born_rule", born_dev <= born_tol, max_deviation=born_dev,
                   probabilities=p_theory.tolist())
        settings = _settings(self.p, self.scale)
        for ds in _as_list(self.p.get("delta_s", 0.3)):
            rep = measure.bohmian_outcome_frequencies(joint, int(self.p.get("count", 20000)), self.seed, float(ds),
                                                      settings, float(self.p.get("pointer_mass", 1.0)),
                                                      jobs=int(self.p.get("jobs", 1)))
            measure.write_outcome_json(rep, self.emit(f"outcomes_ds{_tag(ds)}.json"))
            self.check(f"bohmian_frequencies[delta_s={ds:g}]", rep.passed, frequencies=rep.frequencies.tolist(),
                       unresolved_fraction=rep.unresolved_fraction)

    def nonlocality(self):
        cfg = as_configuration(self.p["configuration"], self.psi.n)
        a, b = int(self.p.get("a", 0)), int(self.p.get("b", 1))
        value = stats.nonlocality_witness(self.psi, cfg, a, b, self.p.get("displacement", [0, 0.5, 0, 0]))
        expect = self.p.get("expect", "positive")
        if expect == "zero":
            ok = value <= 1e-14
        else:
            ok = value > float(self.p.get("threshold", 1e-3))
        stats.write_report_json([stats.CheckRecord("nonlocality_witness", value, None, 1, self.seed, ok).to_dict()],
                                self.emit("nonlocality.json"))
        self.check("nonlocality", ok, witness=value, expect=expect)

    def kg_check(self, count=10):
        rng = stats.rng_stream(self.seed, 99)
        lo = np.array([b.lo for b in self.psi.domain])
        hi = np.array([b.hi for b in self.psi.domain])
        cfgs = lo + (hi - lo) * rng.random((count, self.psi.n, 4))
        worst = float(np.max(kg_residual(self.psi, cfgs)))
        bound = 1e-10 * float(np.sum(np.abs(self.psi.coefficients)))
        self.check("kg_exact", worst <= bound, max_residual=worst)


def reference_cdf(kind: str, lo: float, hi: float, k: float = 1.0):
    if kind == "uniform":
        return lambda x: np.clip((np.asarray(x) - lo) / (hi - lo), 0.0, 1.0)
    if kind == "cos2":
        def prim(x):
            return 0.5 * x + np.sin(2 * k * x) / (4 * k)
        total = prim(hi) - prim(lo)
        return lambda x: np.clip((prim(np.asarray(x)) - prim(lo)) / total, 0.0, 1.0)
    raise ScenarioError(f"unknown reference density {kind!r}")


def run(sc: Scenario, out_dir, seed: int | None = None, tolerance_scale: float = 1.0) -> RunReport:
    """Execute the scenario's task, write its outputs under ``out_dir`` and return the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = int(seed if seed is not None else sc.params.get("seed", 0))
    report = RunReport(sc.name, sc.source_hash, sc.task, seed)
    t0 = time.perf_counter()
    r = _Run(sc, out, seed, tolerance_scale, report)
    r.kg_check()
    getattr(r, sc.task)()
    report.wall_clock = time.perf_counter() - t0
    report.manifest.append("report.json")
    _dump(report.to_json(), out / "report.json")
    return report


def _error(kind, exc, **extra):
    obj = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    obj.update({k: v for k, v in extra.items() if v is not None})
    return obj


def run_file(path, out_root, seed=None, scale=1.0, nested=True):
    """Parse and run one scenario; returns (exit_code, summary dict)."""
    try:
        sc = parse_scenario(path)
    except ScenarioError as e:
        return EXIT_USAGE, _error("scenario", e, path=str(path), line=getattr(e, "line", None),
                                  field=getattr(e, "field", None))
    out = Path(out_root) / sc.name if nested else Path(out_root)
    try:
        rep = run(sc, out, seed, scale)
    except ScenarioError as e:
        return EXIT_USAGE, _error("scenario", e, path=str(path))
    except Exception as e:  # noqa: BLE001 - mapped to the runtime exit code
        return EXIT_RUNTIME, _error("runtime", e, path=str(path), traceback=traceback.format_exc(limit=3))
    summary = {"scenario": sc.name, "pass": rep.passed, "failed_checks": sorted(k for k, v in rep.checks.items() if not v),
               "output": str(out)}
    return (EXIT_PASS if rep.passed else EXIT_FAIL), summary


def _suite_job(args):
    return run_file(*args)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="relbohm", description="Relativistic Bohmian scenario runner")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, helptext in (("run", "run one scenario file"), ("suite", "run every *.json scenario in a directory")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("path")
        sp.add_argument("--out", default="out")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--tolerance-scale", type=float, default=1.0,
                        help="multiply integrator tolerances by this factor")
        if name == "suite":
            sp.add_argument("--jobs", type=int, default=1)
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS

    if args.cmd == "run":
        code, info = run_file(args.path, args.out, args.seed, args.tolerance_scale, nested=False)
        print(json.dumps(info, sort_keys=True), file=sys.stderr if code >= EXIT_USAGE else sys.stdout)
        return code

    files = sorted(Path(args.path).glob("*.json"))
    if not files:
        print(json.dumps({"error": "usage", "message": f"no scenarios in {args.path}"}), file=sys.stderr)
        return EXIT_USAGE
    work = [(f, args.out, args.seed, args.tolerance_scale, True) for f in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_suite_job, work))
    else:
        results = [_suite_job(w) for w in work]
    rows = []
    for f, (code, info) in zip(files, results):
        rows.append({"file": f.name, "exit_code": code, **info})
        print(f"{'PASS' if code == 0 else 'FAIL'} [{code}] {f.name}")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    _dump(rows, Path(args.out) / "suite.json")
    return max(code for code, _ in results)


if __name__ == "__main__":
    sys.exit(main())
