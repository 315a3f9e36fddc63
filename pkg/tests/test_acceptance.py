"""The twelve acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line (visible under ``pytest -v``).  Run the
file directly to get just those lines:  python3 tests/test_acceptance.py
"""

import json
import math
import sys
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

from oracles import tensor_oracle
from sqglab import cli
from sqglab import degiorgi as dg
from sqglab import kernels as kn
from sqglab import littlewood_paley as lp
from sqglab.config import load_config
from sqglab.eigenbasis import (
    DiskBasis, DomainSpec, RectangleBasis, SpectralField, gradient, sobolev_norm,
)
from sqglab.solver import (
    SolverConfig, initial_random, linfty_decay_constant, nonlinear_term, run, skew_defect,
)

pytestmark = pytest.mark.slow


def _line(n, title, ok, detail):
    msg = f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}"
    cap = _line.capsys
    if cap is not None:
        with cap.disabled():
            print("\n" + msg)
    else:
        print(msg)
    return ok


_line.capsys = None


@pytest.fixture(autouse=True)
def _printer(capsys):
    _line.capsys = capsys
    yield
    _line.capsys = None


# ---------------------------------------------------------------------------


def criterion_1():
    worst_r, worst_d, slow = 0.0, 0.0, 0.0
    rng = np.random.default_rng(0)
    for M in (8, 16, 32, 64):
        b = RectangleBasis(DomainSpec.rectangle(1.3, 2.1), M, M)
        c = rng.standard_normal(b.n_modes)
        b.values(c)
        t = time.perf_counter()
        back = b.project(b.values(c))
        slow = max(slow, time.perf_counter() - t)
        worst_r = max(worst_r, float(np.abs(back - c).max() / np.abs(c).max()))
    for M in (8, 32, 64):
        b = DiskBasis(DomainSpec.disk(0.8), M, M)
        c = rng.standard_normal(b.n_modes)
        b.values(c)
        t = time.perf_counter()
        back = b.project(b.values(c))
        slow = max(slow, time.perf_counter() - t)
        worst_d = max(worst_d, float(np.abs(back - c).max() / np.abs(c).max()))
    ok = worst_r <= 1e-10 and worst_d <= 1e-8 and slow < 1.0
    return _line(1, "transform exactness", ok,
                 f"rect err {worst_r:.2e}, disk err {worst_d:.2e}, slowest round trip {slow:.3f} s")


def criterion_2():
    worst = 0.0
    bases = [RectangleBasis(DomainSpec.rectangle(), 16, 16), RectangleBasis(DomainSpec.rectangle(2.0, 1.3), 14, 10),
             DiskBasis(DomainSpec.disk(), 10, 10)]
    for seed in range(50):
        b = bases[seed % 3]
        f = SpectralField(b, np.random.default_rng(seed).standard_normal(b.n_modes) / b.eigenvalues)
        h1 = sobolev_norm(f, 1.0) ** 2
        worst = max(worst, abs(h1 - gradient(f).integrate_square()) / h1)
    return _line(2, "H1 gradient identity", worst <= 1e-8, f"worst rel err {worst:.2e} over 50 fields")


def criterion_3():
    b = RectangleBasis(DomainSpec.rectangle(), 32, 32)
    theta0 = initial_random(b, seed=0, kmax=8.0, amplitude=2.0)
    res = {}
    for eps in (0.0, 0.1, 1.0):
        rec = run(theta0, SolverConfig(truncation=(32, 32), epsilon=eps, dt=1e-3, t_end=1.0, record_stride=100))
        assert sum(rec.substeps) == 1000
        res[eps] = rec.max_energy_residual
    skew = max(skew_defect(initial_random(b, seed=s, kmax=8.0)) for s in range(5))
    ok = max(res.values()) <= 1e-5 and skew <= 1e-10
    detail = ", ".join(f"eps={e:g}: {r:.2e}" for e, r in res.items())
    return _line(3, "energy identity", ok, f"max residual / |theta0|^2 {detail}; skew {skew:.1e}")


def criterion_4():
    worst = 0.0
    for lengths in ((math.pi, math.pi), (2.0, 1.3)):
        labels, B = tensor_oracle(*lengths, 8)
        b = RectangleBasis(DomainSpec.rectangle(*lengths), 8, 8)
        perm = [b.modes.index(lab) for lab in labels]
        for seed in range(5):
            c = np.random.default_rng(seed).standard_normal(b.n_modes)
            want = np.einsum("ijk,j,k->i", B, c[perm], c[perm])
            got = nonlinear_term(SpectralField(b, c)).coeffs[perm]
            worst = max(worst, float(np.linalg.norm(got - want) / np.linalg.norm(want)))
    return _line(4, "nonlinear term vs tensor", worst <= 1e-8, f"worst rel err {worst:.2e} at M=8")


def criterion_5():
    excess, ratios = 0.0, []
    for seed in range(5):
        C = []
        for M in (32, 64):
            b = RectangleBasis(DomainSpec.rectangle(), M, M)
            rec = run(initial_random(b, seed, 8.0, 2.0), SolverConfig(truncation=(M, M), dt=0.01, t_end=2.0,
                                                                      record_stride=2))
            excess = max(excess, rec.max_principle_excess())
            C.append(linfty_decay_constant(rec))
        ratios.append(max(C) / min(C))
    ok = excess <= 1e-3 and max(ratios) <= 2.0
    return _line(5, "maximum principle and Linf decay", ok,
                 f"max excess {excess:.1e} |theta0|inf; decay-constant ratio M=32/64 <= {max(ratios):.4f}")


def criterion_6():
    b = RectangleBasis(DomainSpec.rectangle(), 24, 24)
    e = {m: SpectralField.mode(b, m) for m in ((1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1))}
    pairs = [(e[1, 1], e[1, 1]),
             (e[1, 1], e[1, 1] + 0.5 * e[2, 2]),
             (e[1, 2] + e[2, 1], e[1, 2] - 0.3 * e[2, 1]),
             (e[2, 2], e[2, 2] + e[1, 1]),
             (e[1, 3] + e[3, 1], e[1, 3] + 0.5 * e[1, 1])]
    errs = [kn.verify_bilinear_identity(f, g, 0.5, levels=(12, 24, 48))["rel_err"] for f, g in pairs]
    dom = b.domain
    pts = kn.sample_pairs(dom, 24, 0, 2 * dom.diameter / 100)
    bpts = kn.boundary_layer_points(dom, dom.inradius / 20, 2)[0]
    signs = kn.build_table(b, 0.5, pts, bpts).check_signs()
    c = dom.center
    ratio = [kn.kernel_K(b, 0.5, c - (r / 2, 0), c + (r / 2, 0)) * r**3 * 2 * math.pi for r in (0.05, 0.1, 0.2)]
    ok = max(errs) <= 0.02 and min(signs["min_K"], signs["min_B"]) >= -1e-12 and all(0.5 <= q <= 2 for q in ratio)
    return _line(6, "bilinear identity and kernel", ok,
                 f"worst rel err {max(errs):.2e}; min K {signs['min_K']:.2e}, min B {signs['min_B']:.2e}; "
                 f"K|x-y|^3 * 2pi in [{min(ratio):.3f}, {max(ratio):.3f}]")


def criterion_7():
    spread, comm = 0.0, 0.0
    ok = True
    for basis in (RectangleBasis(DomainSpec.rectangle(), 32, 32), DiskBasis(DomainSpec.disk(), 16, 16)):
        for seed in range(2):
            f = lp.dyadic_test_field(basis, seed)
            for p in (2, math.inf):
                for a in (-0.25, 0.0, 1.0):
                    r = lp.bernstein_check(f, a, p)
                    ok &= r["pass"]
                    spread = max(spread, r["spread"], r["grad_spread"])
                r = lp.commutator_grid(f, p)
                ok &= r["pass"]
                comm = max(comm, r["max_ratio"])
    return _line(7, "Bernstein and commutator", bool(ok), f"max spread {spread:.3f}, max commutator ratio {comm:.3f} "
                 "(slack 10)")


def criterion_8():
    b = RectangleBasis(DomainSpec.rectangle(), 24, 24)
    fields = [lp.dyadic_test_field(b, 0), initial_random(b, 0, 6.0), lp.random_field(b, 1, 2.0, 10.0)]
    viol, split_ok, drift, shift_ok = 0, True, 0.0, True
    gfrac, lfrac = 0.0, 0.0
    for f in fields:
        dec = lp.calibrate(f, rescale_eps=0.5)
        viol += len(dec.bound_violations())
        _, _, rep = lp.split_low_high(dec, 0)
        split_ok &= rep["grad_u_low"] <= 2 * dec.kappa and rep["lmq_u_high"] <= 6 * dec.kappa
        gfrac = max(gfrac, rep["grad_u_low"] / (2 * dec.kappa))
        lfrac = max(lfrac, rep["lmq_u_high"] / (6 * dec.kappa))
        shift_ok &= dec.rescale["center_shift"] == 1 and not dec.rescale["violations"]
        drift = max(drift, dec.rescale["kappa_drift"])
    ok = viol == 0 and split_ok and shift_ok and drift <= 0.01
    return _line(8, "calibration", bool(ok), f"{viol} band violations; split at {gfrac:.2f} and {lfrac:.2f} of "
                 f"2k, 6k; center shift 1, kappa drift {drift:.1e}")


def criterion_9():
    b = RectangleBasis(DomainSpec.rectangle(), 16, 16)
    rec = run(initial_random(b, 0, 5.0, 2.0, 1.0), SolverConfig(truncation=(16, 16), dt=0.01, t_end=1.0,
                                                                record_stride=5))
    mono = dg.ladder(rec, K=10).monotone
    grid = b.grid(2, True)
    cerr = 0.0
    for cval in (2.0, 1.5, 0.9):
        lad = dg.ladder(dg.FunctionSource(lambda t, x, y: cval + 0 * x, grid, (-2.0, 0.0)), K=10)
        exact = np.maximum(cval - lad.a, 0) ** 2 * math.pi**2 * (-lad.t)
        cerr = max(cerr, float(np.abs(lad.E - exact).max() / exact.max()))
    cfg = SolverConfig(truncation=(16, 16), dt=0.01, t_end=0.5)
    ests = [dg.estimate_delta(initial_random(b, s, 6.0, 1.0, 1.0), cfg, iters=14, amp_hi=1.0)["delta_est"]
            for s in range(5)]
    med = float(np.median(ests))
    dev = max(abs(x - med) / med for x in ests)
    ok = mono and cerr <= 1e-12 and dev <= 0.5
    return _line(9, "De Giorgi ladder", ok, f"monotone {mono}; constant-field err {cerr:.1e}; "
                 f"delta_est median {med:.4g}, max deviation {dev:.0%}")


def criterion_10():
    alpha, lam, rep = dg.verify_barrier_lemma(zmax=1e6)
    b = RectangleBasis(DomainSpec.rectangle(), 16, 16)
    worst, a2 = 0.0, True
    for seed in range(20):
        f = lp.random_field(b, seed, 2.0, 6.0)
        for a in (0.25, 0.5, 0.75):
            r = dg.verify_interpolation(f, a)
            a2 &= r["holder_pass"]
            worst = max(worst, r["holder"] / r["holder_bound"])
    ok = alpha > 1 and lam > 0 and rep["pass"] and a2
    return _line(10, "barrier and interpolation", bool(ok), f"alpha {alpha:.4f}, lambda_bar {lam:.4g}; "
                 f"interpolation at {worst:.2f} of the bound on 20 fields")


def criterion_11():
    grid = RectangleBasis(DomainSpec.rectangle(1.0, 1.0), 8).grid(2, True)
    x0 = np.array([0.43, 0.61])
    syn = dg.oscillation_scan(dg.FunctionSource(lambda t, x, y: np.hypot(x - x0[0], y - x0[1]) ** 0.5, grid),
                              eps=0.5, K=6, center=x0, r0=0.3)
    alphas = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for M in (48, 96):
            b = RectangleBasis(DomainSpec.rectangle(), M, M)
            rec = run(initial_random(b, 0, 8.0, 1.0, 1.0), SolverConfig(truncation=(M, M), dt=0.01, t_end=1.5,
                                                                        record_stride=5))
            osc = dg.oscillation_scan(rec, eps=0.8, K=6, t_scale=1.0)
            assert osc.K_used == 6
            alphas.append(osc.alpha)
    rel = abs(alphas[0] - alphas[1]) / max(alphas)
    ok = abs(syn.alpha - 0.5) <= 0.05 and min(alphas) > 0 and rel <= 0.3
    return _line(11, "Holder pipeline", ok, f"synthetic alpha {syn.alpha:.4f}; SQG alpha {alphas[0]:.4f} (M=48), "
                 f"{alphas[1]:.4f} (M=96), rel diff {rel:.1e}")


def criterion_12():
    cfg = load_config(cli.bundled_config())
    sums, times, codes = [], [], []
    with tempfile.TemporaryDirectory() as tmp:
        for d in ("a", "b"):
            out = Path(tmp) / d
            out.mkdir()
            t = time.perf_counter()
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                codes.append(cli.main(["verify", "--suite", "all", "--deterministic", "--out", str(out)]))
            times.append(time.perf_counter() - t)
            man = json.loads((out / "manifest.json").read_text())
            sums.append([(a["path"], a["sha256"]) for a in man["artifacts"]])
    same = sums[0] == sums[1] and len(sums[0]) > 0
    ok = codes == [0, 0] and max(times) < 300 and same
    return _line(12, "end to end", ok, f"exit codes {codes}; {max(times):.1f} s; "
                 f"{len(sums[0])} artifacts {'bit-identical' if same else 'DIFFER'} on rerun")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 13)])
def test_acceptance(crit):
    assert crit()


if __name__ == "__main__":
    sys.path.insert(0, str(Path(__file__).parent))
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
