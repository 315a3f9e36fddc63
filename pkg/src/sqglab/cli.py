"""Command line front end: ``sqglab simulate | verify | holder``.

Exit codes: 0 success, 1 a check failed or the solver aborted, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from contextlib import contextmanager
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, runtime
from . import degiorgi as dg
from . import io
from . import kernels as kn
from . import littlewood_paley as lp
from .barriers import BarrierFn
from .config import ConfigError, RunConfig, load_config
from .eigenbasis import (
    DomainSpec, RectangleBasis, SpectralField, gradient, sobolev_norm,
)
from .solver import (
    SolverAbort, TrajectoryRecord, initial_bump, initial_mode, initial_random, initial_zero, run,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUITES = ("kernels", "lp", "calibration", "degiorgi", "interpolation", "barrier")


class UsageError(Exception):
    pass


def bundled_config() -> Path:
    return Path(str(resources.files("sqglab") / "data" / "tiny.ini"))


def golden_dir() -> Path:
    env = os.environ.get("SQG_GOLDEN_DIR")
    return Path(env) if env else Path(str(resources.files("sqglab") / "data" / "golden"))


# ---------------------------------------------------------------------------
# manifest


class Manifest:
    """Artifacts with checksums plus per-phase wall-clock timings."""

    def __init__(self, out: Path, cfg: RunConfig, command: str):
        self.out, self.cfg, self.command = out, cfg, command
        self.artifacts, self.timings, self.extra = [], {}, {}

    def add(self, *paths):
        for p in paths:
            self.artifacts.append(Path(p))

    @contextmanager
    def phase(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def write(self) -> Path:
        body = {
            "command": self.command,
            "config": self.cfg.source,
            "config_sha256": self.cfg.digest,
            "code_version": __version__,
            "seed": self.cfg.solver.seed,
            "domain": io.to_jsonable(vars(self.cfg.domain)),
            "artifacts": [{"path": p.name, "sha256": io.sha256(p)} for p in self.artifacts],
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
        }
        body.update(io.to_jsonable(self.extra))
        path = self.out / "manifest.json"
        path.write_text(json.dumps(body, indent=2) + "\n")
        return path


# ---------------------------------------------------------------------------
# helpers


def initial_field(cfg: RunConfig, basis=None) -> SpectralField:
    basis = basis or cfg.solver.basis(cfg.domain.spec())
    ini = cfg.initial
    if ini.kind == "mode":
        try:
            return initial_mode(basis, ini.mode, ini.amplitude)
        except KeyError:
            raise UsageError(f"mode {ini.mode} is not in the basis {basis!r}") from None
    if ini.kind == "random":
        return initial_random(basis, cfg.solver.seed, ini.kmax, ini.amplitude, ini.decay)
    if ini.kind == "bump":
        center = ini.center or None
        return initial_bump(basis, center, ini.radius or None, ini.amplitude)
    return initial_zero(basis)


def _record_snapshots(rec: TrajectoryRecord, out: Path, every: int):
    idx = list(range(0, len(rec), every)) if every else []
    if len(rec) - 1 not in idx:
        idx.append(len(rec) - 1)
    files = []
    for i in idx:
        name = "final.sqgf" if (i == len(rec) - 1 and not every) else f"snapshot_{i:05d}.sqgf"
        p = io.write_snapshot(out / name, rec.field(i))
        files.append((p, float(rec.times[i])))
    return files


def load_trajectory(path, cfg: RunConfig) -> TrajectoryRecord:
    """Rebuild a record from a simulate output directory (manifest plus snapshots)."""
    path = Path(path)
    man = path / "manifest.json" if path.is_dir() else path
    if not man.exists():
        raise UsageError(f"trajectory manifest not found: {man}")
    body = json.loads(man.read_text())
    snaps = body.get("snapshots", [])
    if len(snaps) < 2:
        raise UsageError(f"{man} lists {len(snaps)} snapshot(s); rerun simulate with snapshot_every > 0")
    d = body.get("domain", {})
    shape = d.get("shape", "rectangle")
    dom = DomainSpec.rectangle(d.get("Lx", math.pi), d.get("Ly", math.pi)) if shape == "rectangle" \
        else DomainSpec.disk(d.get("R", 1.0))
    rec = None
    for s in snaps:
        _, f = io.read_snapshot(man.parent / s["file"], dom)
        if rec is None:
            rec = TrajectoryRecord(f.basis, cfg.solver)
        rec.times.append(float(s["t"]))
        rec.states.append(f.coeffs)
    return rec


def _write_rows(out, name, columns, rows, manifest):
    p = io.write_csv(out / name, columns, rows)
    manifest.add(p)
    return p


def _report(out, stem, title, checks, manifest, extra=None):
    paths = io.write_report(out / stem, title, checks, extra)
    manifest.add(*paths)
    return all(bool(c.get("pass")) for c in checks.values())


def _golden(name: str, cfg: RunConfig):
    p = golden_dir() / f"{name}.json"
    if not p.exists():
        return None
    body = json.loads(p.read_text())
    if body.get("config_sha256") not in (None, cfg.digest):
        return None
    return body


def _golden_check(name, cfg, measured: dict, rtol: float = 1e-6) -> dict | None:
    g = _golden(name, cfg)
    if g is None:
        return None
    worst, rows = 0.0, {}
    for k, v in measured.items():
        if k not in g.get("values", {}):
            continue
        ref = g["values"][k]
        if isinstance(ref, list):  # [lo, hi] range
            ok = ref[0] <= v <= ref[1]
            rows[k] = {"measured": v, "range": ref, "ok": ok}
            worst = max(worst, 0.0 if ok else math.inf)
        else:
            err = abs(v - ref) / max(abs(ref), 1e-300)
            rows[k] = {"measured": v, "golden": ref, "rel_err": err}
            worst = max(worst, err)
    return {"file": f"{name}.json", "compared": len(rows), "worst_rel_err": worst, "rows": rows,
            "pass": bool(worst <= rtol)}


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    man = Manifest(out, cfg, "simulate")
    basis = cfg.solver.basis(cfg.domain.spec())
    theta0 = initial_field(cfg, basis)
    with man.phase("solve"):
        try:
            rec = run(theta0, cfg.solver)
        except SolverAbort as e:
            dump = {"reason": e.reason, "time": e.time}
            if e.state is not None:
                p = io.write_snapshot(out / "abort_state.sqgf", e.state)
                man.add(p)
                dump["state"] = p.name
            p = out / "abort.json"
            p.write_text(json.dumps(io.to_jsonable(dump), indent=2) + "\n")
            man.add(p)
            man.write()
            print(f"solver aborted: {e}", file=sys.stderr)
            return EXIT_FAIL
    with man.phase("write"):
        _write_rows(out, "trajectory.csv", io.TRAJECTORY_COLUMNS, rec.rows(), man)
        snaps = _record_snapshots(rec, out, cfg.output.snapshot_every)
        man.add(*(p for p, _ in snaps))
        man.extra["snapshots"] = [{"file": p.name, "t": t} for p, t in snaps]
        man.extra["max_energy_residual"] = rec.max_energy_residual
    man.write()
    print(f"{len(rec)} records to t={rec.times[-1]:g}; max energy residual {rec.max_energy_residual:.3g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify suites; each returns (checks, extra)


def suite_kernels(cfg, out, man):
    v = cfg.verify
    b = RectangleBasis(cfg.domain.spec() if cfg.domain.shape == "rectangle" else DomainSpec.rectangle(),
                       v.kernel_truncation, v.kernel_truncation)
    dom = b.domain
    checks = {}
    pairs = kn.sample_pairs(dom, v.kernel_samples, cfg.solver.seed, 2 * dom.diameter / 100)
    bpts = kn.boundary_layer_points(dom, dom.inradius / 20, 2)[0]
    tab = kn.build_table(b, 0.5, pairs, bpts)
    _write_rows(out, "kernels_s0.5.csv", io.KERNEL_COLUMNS, tab.rows(), man)
    checks["nonnegativity"] = tab.check_signs()
    swap = [kn.kernel_K(b, 0.5, y, x) for x, y in pairs[:4]]
    sym = float(np.max(np.abs(np.array(swap) - tab.K[:4]) / tab.K[:4]))
    checks["symmetry"] = {"max_rel": sym, "pass": sym <= 1e-10}
    checks["upper_bound_s0.5"] = kn.verify_upper_bound(tab)
    c = dom.center
    deep = np.array([[c - (r / 2, 0), c + (r / 2, 0)] for r in (0.1, 0.2)])
    kd = np.array([kn.kernel_K(b, 0.5, x, y) for x, y in deep]) * np.array([0.1, 0.2]) ** 3
    ratio = kd / kn.free_space_constant(0.5)
    checks["deep_interior_s0.5"] = {"ratios": ratio, "min": float(ratio.min()), "max": float(ratio.max()),
                                    "pass": bool((ratio <= 2).all() and (ratio >= 0.5).all())}
    tab8 = kn.build_table(b, 0.125, pairs)
    _write_rows(out, "kernels_s0.125.csv", io.KERNEL_COLUMNS, tab8.rows(), man)
    ub8 = kn.verify_upper_bound(tab8)
    checks["upper_bound_s0.125"] = {"sup": ub8["sup"], "pass": bool(np.isfinite(ub8["sup"]))}
    cd = kn.estimate_C_dmn(b, samples=pairs)
    checks["C_dmn"] = {"C_dmn": cd.C_dmn, "label": cd.label, "rescaled_ratio": cd.rescaled_ratio,
                       "skipped": cd.skipped, "pass": bool(abs(cd.rescaled_ratio - 1) <= 0.05)}
    checks["relation_K1_K1/4"] = kn.relation_sup(b, samples=pairs[:8])
    e = [SpectralField.mode(b, m) for m in ((1, 1), (1, 2), (2, 1))]
    for name, (f, g) in {"e11_e11": (e[0], e[0]), "e11_mix": (e[0], e[1] + 0.5 * e[2]),
                         "mix_mix": (e[1] + e[2], e[1] - 0.3 * e[2])}.items():
        r = kn.verify_bilinear_identity(f, g, 0.5, levels=(12, 24, 48))
        checks[f"bilinear_{name}"] = {k: r[k] for k in ("lhs", "rhs", "rel_err", "converging", "pass")}
    f1 = initial_bump(b, c - (0.6, 0), 0.45)
    f2 = initial_bump(b, c + (0.6, 0), 0.45)
    checks["disjoint_pairing"] = kn.disjoint_pairing(f1, f2, 0.5)
    checks["product_rule"] = kn.product_rule_ratios(f1, e[0] + 0.5 * e[1], 0.5)
    sp = [kn.support_pairing_ratio(initial_bump(b, c, rho), 0.25, support=math.pi * rho**2)["ratio"]
          for rho in (0.8, 0.4)]
    checks["support_pairing"] = {"ratios": sp, "pass": bool(np.isfinite(sp).all() and max(sp) <= 4 * min(sp))}
    f = initial_random(b, cfg.solver.seed, 8.0)
    gx, gy = gradient(f).values
    grid = b.grid(2, True)
    h1 = sobolev_norm(f, 1.0) ** 2
    q = grid.integrate(gx**2 + gy**2)
    checks["gradient_identity"] = {"rel_err": abs(h1 - q) / h1, "pass": abs(h1 - q) / h1 <= 1e-8}
    g = _golden_check("kernels", cfg, {"C_dmn": cd.C_dmn, "sup_s0.125": ub8["sup"]})
    if g is not None:
        checks["golden"] = g
    return checks


def suite_lp(cfg, out, man):
    M = cfg.verify.lp_truncation
    b = RectangleBasis(DomainSpec.rectangle(), M, M)
    f = lp.dyadic_test_field(b, cfg.solver.seed)
    pe = lp.partition_error(b)
    checks = {"partition_of_unity": {"error": pe, "pass": pe <= 1e-12}}
    for p in (2, math.inf):
        for a in (-0.25, 0.0, 1.0):
            r = lp.bernstein_check(f, a, p)
            checks[f"bernstein_a{a:g}_p{p:g}"] = {k: r[k] for k in ("spread", "grad_spread", "pass")}
        r = lp.commutator_grid(f, p)
        checks[f"commutator_p{p:g}"] = {k: r[k] for k in ("max_ratio", "slack", "pass")}
    # P_j = (P_{j-1} + P_j + P_{j+1}) P_j on the multipliers
    js = lp.band_range(b)
    worst = 0.0
    for j in js:
        mj = lp.multiplier(b, j)
        around = sum(lp.multiplier(b, i) for i in (j - 1, j, j + 1))
        worst = max(worst, float(np.abs(around * mj - mj).max()))
    checks["neighbour_identity"] = {"max_err": worst, "pass": worst <= 1e-14}
    rf = lp.random_field(b, cfg.solver.seed, decay=1.0)
    mr = lp.bernstein_check(rf, -0.25, math.inf)["max_ratio"]
    checks["bernstein_random_max_ratio"] = {"max_ratio": mr, "pass": math.isfinite(mr) and mr > 0}
    g = _golden_check("lp", cfg, {"bernstein_max_ratio": mr})
    if g is not None:
        checks["golden"] = g
    return checks


def _center_check(dec):
    r = dec.rescale or {}
    ok = (not r.get("violations")) and r.get("center_shift") == 1 and r.get("kappa_drift", 1) <= 0.01
    return {"center_shift": r.get("center_shift"), "kappa_drift": r.get("kappa_drift"), "pass": bool(ok)}


def suite_calibration(cfg, out, man):
    M = cfg.verify.calibration_truncation
    b = RectangleBasis(DomainSpec.rectangle(), M, M)
    checks = {}
    fields = {"dyadic": lp.dyadic_test_field(b, cfg.solver.seed),
              "random": initial_random(b, cfg.solver.seed, 6.0)}
    for name, f in fields.items():
        dec = lp.calibrate(f)
        bad = dec.bound_violations(dec.kappa, dec.center_N, 1e-12)
        checks[f"{name}_calibrated"] = {"kappa": dec.kappa, "center_N": dec.center_N, "j0": dec.j0,
                                        "violations": len(bad), "reconstruction_error": dec.reconstruction_error,
                                        "pass": not bad and dec.reconstruction_error <= 1e-10}
        checks[f"{name}_rescale"] = _center_check(dec)
        worst = {"grad": 0.0, "lmq": 0.0}
        ok = True
        for N in range(dec.center_N - 1, dec.center_N + 3):
            _, _, rep = lp.split_low_high(dec, N)
            ok &= bool(rep["pass"])
            worst["grad"] = max(worst["grad"], rep["grad_u_low"] / rep["grad_bound"])
            worst["lmq"] = max(worst["lmq"], rep["lmq_u_high"] / rep["lmq_bound"])
        checks[f"{name}_split"] = {"worst_grad_fraction": worst["grad"], "worst_lmq_fraction": worst["lmq"],
                                   "pass": ok}
        _write_rows(out, f"bands_{name}.csv", io.BAND_COLUMNS, dec.rows(), man)
    return checks


def suite_degiorgi(cfg, out, man):
    v = cfg.verify
    dom = cfg.domain.spec()
    scfg = _with(cfg.solver, truncation=(v.degiorgi_truncation, v.degiorgi_truncation))
    b = scfg.basis(dom)
    checks = {}
    theta0 = initial_random(b, scfg.seed, 5.0, 1.0, 1.0)
    theta0 = theta0 * (1.5 / float(np.abs(b.values(theta0.coeffs, 2, True)).max()))
    rec = run(theta0, scfg)
    lad = dg.ladder(rec, None, 10)
    _write_rows(out, "ladder.csv", io.LADDER_COLUMNS, lad.rows(), man)
    mono = bool(np.all(np.diff(lad.E) <= 1e-15 * max(lad.E[0], 1e-300)))
    checks["ladder_monotone"] = {"E_0": lad.E[0], "E_K": lad.E[-1], "pass": mono}
    # constant field c on [-2, 0]: E_k = (c - a_k)_+^2 |Omega| (-t_k)
    grid = b.grid(2, True)
    src = dg.FunctionSource(lambda t, x, y: 1.5 + 0 * x, grid, (-2.0, 0.0), dom)
    cl = dg.ladder(src, (-2.0, 0.0), 10)
    exact = np.maximum(1.5 - cl.a, 0) ** 2 * grid.integrate(np.ones_like(grid.x)) * (-cl.t)
    err = float(np.abs(cl.E - exact).max() / exact.max())
    checks["constant_closed_form"] = {"max_rel_err": err, "pass": err <= 1e-12}
    ests = []
    wcfg = _with(scfg, t_end=min(scfg.t_end, 0.5))
    for seed in range(v.seeds):
        shape = initial_random(b, seed, 6.0, 1.0, 1.0)
        ests.append(dg.estimate_delta(shape, wcfg, iters=14, amp_hi=1.0)["delta_est"])
    med = float(np.median(ests))
    dev = float(np.max(np.abs(np.array(ests) - med)) / med)
    checks["delta_reproducible"] = {"delta_est": ests, "median": med, "max_rel_dev": dev, "pass": dev <= 0.5}
    d1 = dg.dg1_empirical(dg.RecordSource(rec))
    checks["first_lemma_probe"] = {"mass": d1["mass"], "sup": d1["sup"], "hypothesis_ok": d1["hypothesis_ok"],
                                   "pass": all(p["holds"] for p in d1["probes"])}
    bh = dg.BandHistory(rec)
    gr = dg.gamma_recursion(bh, eps=0.125, K=3)
    checks["gamma_recursion"] = {k: gr[k] for k in gr if isinstance(gr[k], (int, float, bool, np.floating))}
    checks["gamma_recursion"]["pass"] = bool(gr["pass"])
    g = _golden_check("degiorgi", cfg, {"delta_median": med}, rtol=1e-6)
    if g is not None:
        checks["golden"] = g
    return checks


def suite_interpolation(cfg, out, man):
    b = RectangleBasis(DomainSpec.rectangle(), 16, 16)
    checks = {}
    ok2, worst = True, 0.0
    for seed in range(20):
        f = lp.random_field(b, cfg.solver.seed + seed, 2.0, 6.0)
        for a in (0.25, 0.5, 0.75):
            r = dg.verify_interpolation(f, a)
            ok2 &= bool(r["holder_pass"])
            worst = max(worst, r["holder"] / r["holder_bound"])
    checks["holder_interpolation_random"] = {"fields": 20, "worst_fraction_of_bound": worst, "pass": ok2}
    r = dg.verify_interpolation(SpectralField.mode(b, (1, 1)), 0.5)
    checks["gradient_interpolation_e11"] = {"constant": r["gradient_constant"], "reference": r["gradient_reference"], "pass": bool(r["gradient_pass"])}
    return checks


def suite_barrier(cfg, out, man):
    alpha, lam, rep = dg.verify_barrier_lemma()
    checks = {"barrier_lemma": {k: rep[k] for k in ("alpha", "lambda_bar", "gap_at_one", "largest_admissible_alpha",
                                                    "zmax", "pass")}}
    checks["barrier_lemma"]["pass"] = bool(rep["pass"] and alpha > 1 and lam > 0)
    rows = dg.harnack_sweep(alpha, lam)
    checks["harnack_sweep"] = {"rows": rows, "pass": all(r["lambda"] > 0 for r in rows)}
    psi = BarrierFn()
    checks["profile_norms"] = {"grad_norm": psi.grad_norm, "hess_norm": psi.hess_norm,
                               "holder_quarter": psi.holder_quarter, "pass": bool(np.isfinite(psi.hess_norm))}
    return checks


_SUITE_FN = {"kernels": suite_kernels, "lp": suite_lp, "calibration": suite_calibration,
             "degiorgi": suite_degiorgi, "interpolation": suite_interpolation, "barrier": suite_barrier}


def _with(sc, **kw):
    from dataclasses import replace
    return replace(sc, **kw)


def cmd_verify(cfg: RunConfig, suite: str, out: Path) -> int:
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES + ('all',))}")
    man = Manifest(out, cfg, f"verify {suite}")
    names = SUITES if suite == "all" else (suite,)
    ok = True
    for name in names:
        with man.phase(name), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            try:
                checks = _SUITE_FN[name](cfg, out, man)
            except (ValueError, ArithmeticError, RuntimeError) as e:
                checks = {"suite_error": {"error": f"{type(e).__name__}: {e}", "pass": False}}
        good = _report(out, f"verify_{name}", f"verify {name}", checks, man)
        for cname, c in checks.items():
            print(f"{'PASS' if c.get('pass') else 'FAIL'}  {name}/{cname}")
        ok &= good
    man.write()
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# holder


def cmd_holder(cfg: RunConfig, out: Path, trajectory=None, inline: bool = False) -> int:
    man = Manifest(out, cfg, "holder")
    trajectory = trajectory or cfg.holder.trajectory or None
    with man.phase("trajectory"):
        if trajectory:
            rec = load_trajectory(trajectory, cfg)
        elif inline:
            basis = cfg.solver.basis(cfg.domain.spec())
            rec = run(initial_field(cfg, basis), cfg.solver)
        else:
            raise UsageError("no trajectory: pass --trajectory DIR or --inline")
    h = cfg.holder
    dom = rec.basis.domain
    span = rec.times[-1] - rec.times[0]
    if span <= 0:
        raise UsageError("trajectory spans no time")
    t_ref = rec.times[-1] if h.t_ref < 0 else h.t_ref
    with man.phase("scan"), warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        osc = dg.oscillation_scan(dg.RecordSource(rec), eps=h.eps, K=h.levels,
                                  center=np.asarray(h.center) if h.center else None,
                                  r0=h.radius or 0.5 * dom.inradius,
                                  t_scale=h.t_scale or min(span, t_ref - rec.times[0]), t_ref=t_ref)
    _write_rows(out, "oscillation.csv", io.OSCILLATION_COLUMNS, osc.rows(), man)
    fit = {"alpha": osc.alpha, "alpha_parabolic": osc.alpha_parabolic, "constant": osc.constant,
           "K_requested": osc.K_requested, "K_used": osc.K_used, "reduced": osc.reduced, "regular": osc.regular,
           "nested": osc.nested, "warnings": [str(w.message) for w in caught]}
    fit["pass"] = bool(osc.regular or osc.alpha > 0)
    checks = {"holder_fit": fit}
    g = _golden_check("holder", cfg, {"alpha": osc.alpha})
    if g is not None:
        checks["golden"] = g
    ok = _report(out, "holder", "holder exponent", checks, man)
    man.write()
    tag = " (K reduced)" if osc.reduced else ""
    print(f"alpha = {osc.alpha:.6g}{' regular sentinel' if osc.regular else ''}{tag}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI run configuration")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--threads", type=int, default=None, help="cap worker threads")
    common.add_argument("--deterministic", action="store_true", help="single thread, fixed reduction order")
    p = argparse.ArgumentParser(prog="sqglab", description="critical SQG on bounded domains")
    p.add_argument("--version", action="version", version=f"sqglab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the solver and write a trajectory")
    v = sub.add_parser("verify", parents=[common], help="run diagnostic suites")
    v.add_argument("--suite", default="all", help=f"one of {', '.join(SUITES)}, all")
    h = sub.add_parser("holder", parents=[common], help="oscillation scan and Holder exponent")
    h.add_argument("--trajectory", type=Path, default=None, help="simulate output directory")
    h.add_argument("--inline", action="store_true", help="run the solver first")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        runtime.set_threads(1 if args.deterministic else args.threads)
        if args.config is None:
            if args.command == "simulate":
                raise UsageError("simulate needs --config")
            args.config = bundled_config()
        cfg = load_config(args.config)
        out = args.out or Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite, out)
        return cmd_holder(cfg, out, args.trajectory, args.inline)
    except ConfigError as e:
        print(f"config error: {args.config}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
