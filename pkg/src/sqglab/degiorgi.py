"""De Giorgi diagnostics on solver trajectories.

Truncation-energy ladders, first-lemma probes, Lagrangian paths and their
zoom recursion, oscillation decay on nested cylinders, and standalone checks
of barrier scaling and the two interpolation bounds.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .barriers import BarrierFn, ConstantBarrier
from .eigenbasis import EigenBasis, GridField, SpectralField, analyze
from .littlewood_paley import calibrate
from .solver import SolverConfig, TrajectoryRecord, run, suitability_monitor

log = logging.getLogger(__name__)

__all__ = [
    "BarrierFn",
    "RecordSource",
    "FunctionSource",
    "DeGiorgiLadder",
    "ladder",
    "estimate_delta",
    "dg1_empirical",
    "VelocityHistory",
    "BandHistory",
    "LagrangianPath",
    "integrate_path",
    "gamma_recursion",
    "OscillationReport",
    "oscillation_scan",
    "verify_barrier_lemma",
    "verify_interpolation",
    "harnack_sweep",
    "trichotomy_measures",
    "cutoff_energy_monitor",
]


# ---------------------------------------------------------------------------
# field sources


class RecordSource:
    """A trajectory seen as theta(t, x): quadrature grid values and point evaluation."""

    def __init__(self, record: TrajectoryRecord, refine: int = 2, scale: float = 1.0):
        self.record = record
        self.basis = record.basis
        self.refine = refine
        self.scale = scale
        self.grid = self.basis.grid(refine, True)
        self.times = np.asarray(record.times, dtype=float)
        self.spacing = self.grid.spacing
        self.domain = self.basis.domain

    def _state(self, t):
        return self.record.state_at(t).coeffs / self.scale

    def grid_values(self, t):
        return self.basis.values(self._state(t), self.refine, True)

    def values(self, t, pts):
        return self.basis.evaluate(self._state(t), pts)


class FunctionSource:
    """theta(t, x) given by a function; for synthetic fields with known answers."""

    def __init__(self, fn, grid, times=(0.0,), domain=None, spacing: float = 0.0):
        self.fn = fn
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.domain = domain
        self.spacing = spacing

    def grid_values(self, t):
        return np.broadcast_to(np.asarray(self.fn(t, self.grid.x, self.grid.y), dtype=float), self.grid.x.shape)

    def values(self, t, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        return np.broadcast_to(np.asarray(self.fn(t, pts[:, 0], pts[:, 1]), dtype=float), (len(pts),))


def _as_source(obj):
    return RecordSource(obj) if isinstance(obj, TrajectoryRecord) else obj


def _check_window(src, window):
    a, b = window
    if not b > a:
        raise ValueError("window must have positive length")
    if a < src.times[0] - 1e-12 or b > src.times[-1] + 1e-12:
        raise ValueError(f"window [{a}, {b}] not covered by record span [{src.times[0]}, {src.times[-1]}]")


def _nodes(src, lo, hi):
    ts = src.times
    inner = ts[(ts > lo + 1e-12) & (ts < hi - 1e-12)]
    return np.concatenate([[lo], inner, [hi]])


# ---------------------------------------------------------------------------
# ladder


@dataclass
class DeGiorgiLadder:
    k: np.ndarray
    a: np.ndarray
    t: np.ndarray
    E: np.ndarray
    levelset: np.ndarray
    recursion_constant: float
    window: tuple

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.E) <= 1e-14 * max(self.E[0], 1e-300)))

    def rows(self):
        for i in range(len(self.k)):
            yield int(self.k[i]), self.t[i], self.a[i], self.E[i], self.levelset[i]


def ladder(source, window=None, K: int = 10) -> DeGiorgiLadder:
    """E_k = int_{t_k}^0 int (f - a_k)_+^2 with a_k = 1 - 2^-k, t_k = -1 - 2^-k.

    The physical window is mapped affinely onto [-2, 0]; space keeps its own
    measure.  Time integrals use the trapezoid rule on the record times plus
    the gate t_k, where the state is interpolated linearly.  Convexity of the
    truncation keeps E_k monotone under this rule.
    """
    src = _as_source(source)
    window = (src.times[0], src.times[-1]) if window is None else tuple(window)
    if len(src.times) > 1 or window[0] != window[1]:
        _check_window(src, window)
    a_t, b_t = window
    span = (b_t - a_t) / 2.0
    w = src.grid.weights
    ks = np.arange(K + 1)
    ak = 1.0 - 2.0 ** (-ks)
    tk = -1.0 - 2.0 ** (-ks)
    cache = {}

    def frame(t):
        if t not in cache:
            cache[t] = src.grid_values(t)
        return cache[t]

    E, L = np.zeros(K + 1), np.zeros(K + 1)
    for k in ks:
        phys = _nodes(src, a_t + (tk[k] + 2.0) * span, b_t)
        tau = (phys - a_t) / span - 2.0
        g = [float(np.sum(w * np.maximum(frame(t) - ak[k], 0.0) ** 2)) for t in phys]
        m = [float(np.sum(w * (frame(t) > ak[k]))) for t in phys]
        E[k] = np.trapezoid(g, tau)
        L[k] = np.trapezoid(m, tau)
    consts = []
    for k in range(1, K):
        if E[k + 1] > 0 and E[k - 1] > 0:
            consts.append((math.log(E[k + 1]) - 1.5 * math.log(E[k - 1])) / k)
    rc = math.exp(max(consts)) if consts else 0.0
    return DeGiorgiLadder(ks, ak, tk, E, L, rc, window)


def estimate_delta(shape: SpectralField, config: SolverConfig, K: int = 10, tol: float = 1e-12,
                   amp_hi: float = 64.0, iters: int = 30, window=None) -> dict:
    """Largest amplitude A with E_K <= tol for the run from A * shape, by bisection.

    delta_est is E_0 at that amplitude: the empirical smallness threshold.
    The shape is first flipped and scaled so its larger one-sided peak is
    +1, so A is the initial sup of theta_+.
    """
    v = shape.basis.values(shape.coeffs, 2, True)
    peak = v.max() if v.max() >= -v.min() else v.min()
    if peak == 0:
        raise ValueError("shape vanishes on the grid")
    shape = shape * (1.0 / peak)

    def probe(A):
        rec = run(shape * A, config)
        return ladder(rec, window, K)

    lo, hi = 0.0, amp_hi
    for _ in range(8):
        if probe(hi).E[K] > tol:
            break
        lo, hi = hi, 4.0 * hi
    else:
        raise ValueError("E_K stays below tol up to amplitude %g" % hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if probe(mid).E[K] <= tol:
            lo = mid
        else:
            hi = mid
    lad = probe(lo)
    return {"amplitude": lo, "delta_est": float(lad.E[0]), "E_K": float(lad.E[K]), "K": K, "ladder": lad}


# ---------------------------------------------------------------------------
# first De Giorgi probe


def _growth(r):
    return 2.0 + np.maximum(r**0.25 - 2**0.25, 0.0)


def dg1_empirical(source, window=None, center=None, path=None, length_scale: float = 1.0,
                  probes=(1e-4, 1e-3, 1e-2, 1e-1)) -> dict:
    """Mass int_{-2}^0 int_{B_2} f_+^2 against sup over [-1,0] x B_1, around Gamma.

    Space is measured in units of ``length_scale`` around the center (fixed
    ``center`` or a LagrangianPath).  The growth hypothesis
    f <= 2 + (|x - Gamma|^{1/4} - 2^{1/4})_+ is checked on every node.
    """
    src = _as_source(source)
    window = (src.times[0], src.times[-1]) if window is None else tuple(window)
    a_t, b_t = window
    if len(src.times) > 1:
        _check_window(src, window)
    span = (b_t - a_t) / 2.0
    g = src.grid
    w = g.weights
    if center is None and path is None:
        center = src.domain.center if src.domain is not None else np.zeros(2)
    phys = _nodes(src, a_t, b_t) if b_t > a_t else np.array([a_t])
    tau = (phys - a_t) / span - 2.0 if span > 0 else np.zeros(1)
    dens, sups, worst = [], [], (0.0, None)
    for t, s in zip(phys, tau):
        c = path.position(t - b_t) if path is not None else np.asarray(center)
        r = np.hypot(g.x - c[0], g.y - c[1]) / length_scale
        f = src.grid_values(t)
        excess = f - _growth(r)
        i = np.unravel_index(np.argmax(excess), excess.shape)
        if excess[i] > worst[0]:
            worst = (float(excess[i]), (float(t), float(g.x[i]), float(g.y[i])))
        dens.append(float(np.sum(w * (r <= 2) * np.maximum(f, 0) ** 2)) / length_scale**2)
        if s >= -1 - 1e-12:
            sups.append(float(f[r <= 1].max(initial=-np.inf)))
    mass = float(np.trapezoid(dens, tau)) if len(tau) > 1 else 0.0
    sup = max(sups) if sups else -np.inf
    return {
        "mass": mass,
        "sup": sup,
        "hypothesis_ok": worst[1] is None,
        "hypothesis_violation": worst,
        "probes": [{"delta": d, "holds": bool(mass > d or sup <= 1.0 + 1e-12)} for d in probes],
    }


# ---------------------------------------------------------------------------
# velocity histories and paths


class VelocityHistory:
    """Velocity frames on a grid; bilinear in space, linear in time.

    Rectangle frames live on a Cartesian closed grid, disk frames on the polar
    closed grid (bilinear in r and phi, r clamped to the innermost ring).
    """

    def __init__(self, times, frames, grid, domain):
        self.times = np.asarray(times, dtype=float)
        self.frames = list(frames)
        self.grid = grid
        self.domain = domain
        self.polar = grid.key[0] == "disk"
        if self.polar:
            r = np.hypot(grid.x[:, 0], grid.y[:, 0])
            phi = np.arctan2(grid.y[0], grid.x[0]) % (2 * np.pi)
            self._axes = (r, np.append(phi, 2 * np.pi))
        else:
            self._axes = (grid.x[:, 0], grid.y[0, :])
        self._interp = [self._make(fr) for fr in self.frames]

    def _make(self, fr):
        ux, uy = fr
        if self.polar:
            ux = np.concatenate([ux, ux[:, :1]], axis=1)
            uy = np.concatenate([uy, uy[:, :1]], axis=1)
        return (RegularGridInterpolator(self._axes, ux, bounds_error=False, fill_value=None),
                RegularGridInterpolator(self._axes, uy, bounds_error=False, fill_value=None))

    @classmethod
    def from_function(cls, fn, times, basis: EigenBasis, refine: int = 2):
        g = basis.grid(refine, True)
        frames = [tuple(np.asarray(v, dtype=float) for v in fn(t, g.x, g.y)) for t in times]
        return cls(times, frames, g, basis.domain)

    def _coords(self, p):
        p = np.atleast_2d(p)
        if self.polar:
            c = self.domain.center
            r = np.hypot(p[:, 0] - c[0], p[:, 1] - c[1])
            r = np.clip(r, self._axes[0][0], self._axes[0][-1])
            phi = np.arctan2(p[:, 1] - c[1], p[:, 0] - c[0]) % (2 * np.pi)
            return np.stack([r, phi], axis=1)
        lo = [self._axes[0][0], self._axes[1][0]]
        hi = [self._axes[0][-1], self._axes[1][-1]]
        return np.clip(p, lo, hi)

    def at_frame(self, i, p):
        q = self._coords(p)
        fx, fy = self._interp[i]
        return np.stack([fx(q), fy(q)], axis=1)

    def __call__(self, t, p):
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValueError(f"t={t} outside velocity record [{ts[0]}, {ts[-1]}]")
        if len(ts) == 1:
            return self.at_frame(0, p)
        i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        w = min(max((t - ts[i]) / (ts[i + 1] - ts[i]), 0.0), 1.0)
        return (1 - w) * self.at_frame(i, p) + w * self.at_frame(i + 1, p)

    @property
    def sup(self) -> float:
        return max(float(np.hypot(*fr).max()) for fr in self.frames)


class BandHistory:
    """Calibrated band velocities at every record time."""

    def __init__(self, record: TrajectoryRecord, lift: int = 4):
        self.record = record
        self.times = np.asarray(record.times, dtype=float)
        self.decomps = [calibrate(record.field(i), lift=lift, rescale_eps=None) for i in range(len(record))]
        self.kappa = max(d.kappa for d in self.decomps)
        d0 = self.decomps[0]
        self.grid = next(iter(d0.bands.values())).velocity.grid
        self.domain = record.basis.domain

    def low_pass(self, N: float) -> VelocityHistory:
        frames = []
        z = np.zeros(self.grid.shape)
        for d in self.decomps:
            lo = [b for j, b in d.bands.items() if j <= N]
            frames.append((sum((b.velocity.values[0] for b in lo), z), sum((b.velocity.values[1] for b in lo), z)))
        return VelocityHistory(self.times, frames, self.grid, self.domain)


@dataclass
class LagrangianPath:
    """Path sampled on s in [-T, 0] relative to the reference time ``t_ref``."""

    s: np.ndarray
    points: np.ndarray
    t_ref: float
    speed: np.ndarray
    C_pth: float
    clamp_events: int
    step_error: float
    generator: str = ""
    gamma: np.ndarray | None = None
    gamma_speed: np.ndarray | None = None

    def position(self, s):
        """Position at offset s (linear interpolation between samples)."""
        x = np.interp(s, self.s, self.points[:, 0])
        y = np.interp(s, self.s, self.points[:, 1])
        return np.array([x, y])


def _rk4_path(vel, start, t_ref, T, n, domain):
    h = -T / n
    p = np.asarray(start, dtype=float).reshape(1, 2)
    pts = [p[0].copy()]
    events = 0
    t = t_ref
    for _ in range(n):
        k1 = vel(t, p)
        k2 = vel(t + h / 2, p + h / 2 * k1)
        k3 = vel(t + h / 2, p + h / 2 * k2)
        k4 = vel(t + h, p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_ref + h * (len(pts))
        if domain is not None and not domain.contains(p, tol=1e-12)[0]:
            events += 1
            p = domain.clamp(p)
        pts.append(p[0].copy())
    return np.array(pts[::-1]), events


def integrate_path(velocity: VelocityHistory, start, T: float, t_ref: float | None = None,
                   tol: float = 1e-6, n0: int = 32, max_steps: int = 1 << 14, generator: str = "") -> LagrangianPath:
    """Solve dGamma/dt = u(t, Gamma) backward from Gamma(t_ref) = start over [t_ref - T, t_ref].

    RK4 with the step halved until two successive resolutions agree to
    tol * diam(Omega) at the shared nodes.
    """
    t_ref = velocity.times[-1] if t_ref is None else t_ref
    if t_ref - T < velocity.times[0] - 1e-12 or t_ref > velocity.times[-1] + 1e-12:
        raise ValueError("path span exceeds the velocity record")
    dom = velocity.domain
    diam = dom.diameter if dom is not None else 1.0
    n = n0
    pts, ev = _rk4_path(velocity, start, t_ref, T, n, dom)
    err = math.inf
    while n < max_steps:
        fine, ev2 = _rk4_path(velocity, start, t_ref, T, 2 * n, dom)
        err = float(np.abs(fine[::2] - pts).max())
        pts, ev, n = fine, ev2, 2 * n
        if err <= tol * diam:
            break
    else:
        warnings.warn(f"path step control stopped at {n} steps with error {err:.2e}", RuntimeWarning, stacklevel=2)
    s = np.linspace(-T, 0.0, n + 1)
    speed = np.array([np.hypot(*velocity(t_ref + si, p)[0]) for si, p in zip(s, pts)])
    return LagrangianPath(s, pts, t_ref, speed, float(speed.max(initial=0.0)), ev, err, generator)


def gamma_recursion(bands: BandHistory, start=None, eps: float = 0.125, K: int = 4, T: float | None = None,
                    t_ref: float | None = None, tol: float = 1e-6) -> dict:
    """Nested paths X_k for the low-pass velocities at centers N_k = k log2(1/eps).

    X_k solves dX/dt = u_low^(k)(t, X) backward from the common end point over
    a span eps^k T; gamma_k = X_k - X_{k-1} and gamma_0 = X_0 - start.  The
    measured sup |dgamma_k/dt| is compared with -kappa log2(eps) e^{10 eps kappa}.
    """
    if not 0 < eps <= 0.2:
        raise ValueError("eps must lie in (0, 1/5]")
    shift = -math.log2(eps)
    if abs(shift - round(shift)) > 1e-12:
        raise ValueError("eps must be a power of two")
    shift = int(round(shift))
    dom = bands.domain
    start = dom.center if start is None else np.asarray(start, dtype=float)
    t_ref = bands.times[-1] if t_ref is None else t_ref
    T = t_ref - bands.times[0] if T is None else T
    bound = shift * bands.kappa * math.exp(10 * eps * bands.kappa)
    paths, sups = [], []
    prev, prev_vel = None, None
    for k in range(K + 1):
        vel = bands.low_pass(k * shift)
        p = integrate_path(vel, start, T * eps**k, t_ref, tol, generator=f"low-pass N={k * shift}")
        if p.clamp_events:
            raise RuntimeError(f"level {k} path left the domain ({p.clamp_events} clamp events)")
        if prev is None:
            p.gamma = p.points - start
            p.gamma_speed = p.speed
        else:
            base = np.array([prev.position(si) for si in p.s])
            p.gamma = p.points - base
            vp = np.array([prev_vel(t_ref + si, b)[0] for si, b in zip(p.s, base)])
            vk = np.array([vel(t_ref + si, x)[0] for si, x in zip(p.s, p.points)])
            p.gamma_speed = np.hypot(*(vk - vp).T)
        sups.append(float(p.gamma_speed.max(initial=0.0)))
        paths.append(p)
        prev, prev_vel = p, vel
    C_pth = max(sups[1:], default=0.0)
    return {
        "paths": paths,
        "gamma_speed_sup": sups,
        "kappa": bands.kappa,
        "bound": bound,
        "C_pth": C_pth,
        "pass": bool(all(s <= bound for s in sups[1:])),
    }


# ---------------------------------------------------------------------------
# oscillation


@dataclass
class OscillationReport:
    eps: float
    k: np.ndarray
    radius: np.ndarray
    timespan: np.ndarray
    osc: np.ndarray
    centers: np.ndarray
    alpha: float
    constant: float
    alpha_parabolic: float
    C_pth: float
    nested: bool
    K_requested: int
    K_used: int
    reduced: bool
    regular: bool = False

    def rows(self):
        for i in range(len(self.k)):
            yield int(self.k[i]), self.radius[i], self.timespan[i], self.osc[i], self.centers[i, 0], self.centers[i, 1]


def _stencil(n: int = 12):
    g = np.linspace(-1, 1, 2 * n + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    inside = X**2 + Y**2 <= 1
    ang = np.linspace(0, 2 * np.pi, 8 * n, endpoint=False)
    return np.concatenate([np.stack([X[inside], Y[inside]], 1), np.stack([np.cos(ang), np.sin(ang)], 1)])


RESOLVED_CELLS = 2.0


def oscillation_scan(source, eps: float = 0.5, K: int = 6, center=None, paths=None, r0: float | None = None,
                     t_scale: float = 1.0, t_ref: float | None = None, C_pth: float = 0.0,
                     stencil: int = 12) -> OscillationReport:
    """osc_k = sup - inf of theta on Q_k = [t_ref - tau_k, t_ref] x B(c_k(t), eps^k r0).

    tau_k = t_scale eps^k min(1, 1/(k C_pth)).  Centers follow ``paths[k]``
    when given, otherwise stay at ``center``.  The Holder exponent is
    alpha = -slope / ln(1/eps) from a least-squares fit of ln osc_k against k,
    and alpha / (1 + C_pth) in the parabolic metric.
    """
    src = _as_source(source)
    dom = src.domain
    if r0 is None:
        r0 = 0.5 * dom.inradius
    if center is None:
        center = dom.center if dom is not None else np.zeros(2)
    center = np.asarray(center, dtype=float)
    t_ref = src.times[-1] if t_ref is None else t_ref
    K_req = K
    if src.spacing > 0:
        # point values are spectral interpolants; a radius of two refined
        # spacings is one native grid cell, the shortest resolved length
        floor = RESOLVED_CELLS * src.spacing
        kmax = int(math.floor(math.log(floor / r0) / math.log(eps) + 1e-9)) if floor <= r0 else 0
        if kmax < K:
            warnings.warn(f"smallest cylinder under-resolved; K reduced from {K} to {kmax}", RuntimeWarning, stacklevel=2)
            K = kmax
    if paths is not None:
        K = min(K, len(paths) - 1)
    st = _stencil(stencil)
    ks = np.arange(K + 1)
    radii = r0 * eps**ks
    taus = np.array([t_scale * eps**k * (1.0 if k == 0 or C_pth <= 0 else min(1.0, 1.0 / (k * C_pth))) for k in ks])
    if len(src.times) > 1 and t_ref - taus[0] < src.times[0] - 1e-12:
        raise ValueError("cylinder time span exceeds the record")
    osc, cents = np.zeros(K + 1), np.zeros((K + 1, 2))
    nested = True
    for k in ks:
        ts = _nodes(src, t_ref - taus[k], t_ref) if len(src.times) > 1 else np.array([t_ref])
        lo, hi = np.inf, -np.inf
        for t in ts:
            c = paths[k].position(t - t_ref) if paths is not None else center
            pts = c + radii[k] * st
            if dom is not None:
                pts = pts[dom.contains(pts, tol=1e-12)]
            if len(pts) == 0:
                continue
            v = src.values(t, pts)
            lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
            if k > 0 and paths is not None:
                cp = paths[k - 1].position(t - t_ref)
                nested &= bool(np.hypot(*(c - cp)) + radii[k] <= radii[k - 1] + 1e-12)
        osc[k] = max(hi - lo, 0.0)
        cents[k] = paths[k].position(0.0) if paths is not None else center
    nested &= bool(np.all(np.diff(taus) <= 1e-15))
    scale = max(osc.max(initial=0.0), 1e-300)
    pos = osc > 1e-13 * scale
    if not pos.any():
        alpha, const, regular = math.inf, 0.0, True
    elif pos.sum() < 2:
        alpha, const, regular = math.nan, float(osc[pos][0]), False
    else:
        slope, icpt = np.polyfit(ks[pos], np.log(osc[pos]), 1)
        alpha, const, regular = float(-slope / math.log(1 / eps)), float(math.exp(icpt)), False
    return OscillationReport(eps, ks, radii, taus, osc, cents, alpha, const, alpha / (1 + C_pth),
                             C_pth, nested, K_req, K, K < K_req, regular)


# ---------------------------------------------------------------------------
# barrier and interpolation bounds


def barrier_gap(z, alpha: float, eps: float = 0.5):
    """(|(z-1)/eps + 3|^{1/4} - 2^{1/4})_+ - alpha (|z|^{1/4} - 2^{1/4})_+."""
    z = np.asarray(z, dtype=float)
    a = np.maximum(np.abs((z - 1) / eps + 3) ** 0.25 - 2**0.25, 0.0)
    b = np.maximum(np.abs(z) ** 0.25 - 2**0.25, 0.0)
    return a - alpha * b


def _min_gap(alpha, eps, z):
    v = barrier_gap(z, alpha, eps)
    i = int(np.argmin(v))
    lo, hi = z[max(i - 1, 0)], z[min(i + 1, len(z) - 1)]
    # golden-section polish between the neighbouring grid nodes
    g = (math.sqrt(5) - 1) / 2
    for _ in range(60):
        m1, m2 = hi - g * (hi - lo), lo + g * (hi - lo)
        if barrier_gap(m1, alpha, eps) < barrier_gap(m2, alpha, eps):
            hi = m2
        else:
            lo = m1
    zm = 0.5 * (lo + hi)
    return min(float(v[i]), float(barrier_gap(zm, alpha, eps))), float(zm if barrier_gap(zm, alpha, eps) < v[i] else z[i])


def verify_barrier_lemma(zmax: float = 1e6, eps_grid=(0.5, 0.25, 0.1, 0.01), n_alpha: int = 200,
                         n_z: int = 200_000) -> tuple:
    """Search alpha in (1, 2^{1/4}) for the best lower bound of the barrier gap over z in [1, zmax].

    The gap decreases in alpha and increases as eps decreases, so eps = 1/2
    decides; other eps values are re-checked with the chosen alpha.
    """
    if zmax < 10:
        raise ValueError("zmax must be >= 10")
    z = np.unique(np.concatenate([np.linspace(1.0, 10.0, n_z // 4), np.geomspace(10.0, zmax, n_z)]))
    top = 2**0.25
    alphas = 1.0 + (top - 1.0) * np.arange(1, n_alpha) / n_alpha
    lam, where = [], []
    for a in alphas:
        m, zm = _min_gap(a, 0.5, z)
        lam.append(m)
        where.append(zm)
    lam = np.array(lam)
    ok = lam > 0
    if not ok.any():
        return math.nan, math.nan, {"pass": False, "reason": "no admissible alpha"}
    best = int(np.argmax(lam))
    alpha, lam_bar = float(alphas[best]), float(lam[best])
    eps_rows = [{"eps": e, "min_gap": _min_gap(alpha, e, z)[0]} for e in eps_grid]
    report = {
        "alpha": alpha,
        "lambda_bar": lam_bar,
        "argmin_z": where[best],
        "largest_admissible_alpha": float(alphas[ok].max()),
        "gap_at_one": float(barrier_gap(1.0, alpha)),
        "tail_coefficient": top - alpha,
        "zmax": zmax,
        "eps_rows": eps_rows,
    }
    report["pass"] = bool(alpha > 1 and lam_bar > 0 and top - alpha > 0 and all(r["min_gap"] >= lam_bar - 1e-12 for r in eps_rows))
    return alpha, lam_bar, report


def _holder_seminorm(x, y, v, alpha, chunk: int = 2048):
    """sup |v(p) - v(q)| / |p - q|^alpha over all node pairs; v may carry a trailing component axis."""
    P = np.stack([x.ravel(), y.ravel()], 1)
    V = v.reshape(len(P), -1)
    best = 0.0
    for i in range(0, len(P), chunk):
        d = np.hypot(P[i:i + chunk, None, 0] - P[None, :, 0], P[i:i + chunk, None, 1] - P[None, :, 1])
        dv = np.sqrt(((V[i:i + chunk, None, :] - V[None, :, :]) ** 2).sum(-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(d > 0, dv / d**alpha, 0.0)
        best = max(best, float(r.max()))
    return best


def verify_interpolation(f, alpha: float, refine: int = 1, deltas=None) -> dict:
    """Check [f]_a <= 2^{1-a} ||f||^{1-a} ||grad f||^a and fit C in
    ||grad f|| <= C (d^-1 ||f|| + d^a [grad f]_a) for d up to the inradius.

    Sups come from the 2x closed grid; seminorms from all node pairs on the
    ``refine`` closed grid, repeated one level coarser to report convergence.
    The gradient constant is compared with 2 sqrt(2), what the averaging argument
    gives when two orthogonal rays of length d fit at every point.
    """
    if isinstance(f, GridField):
        f = analyze(f)
    b = f.basis
    c = f.coeffs
    sup = float(np.abs(b.values(c, 2, True)).max())
    gx, gy = b.values(c, 2, True, (1, 0)), b.values(c, 2, True, (0, 1))
    gsup = float(np.hypot(gx, gy).max())

    def seminorms(r):
        g = b.grid(r, True)
        v = b.values(c, r, True)
        gr = np.stack([b.values(c, r, True, (1, 0)), b.values(c, r, True, (0, 1))], -1)
        return _holder_seminorm(g.x, g.y, v, alpha), _holder_seminorm(g.x, g.y, gr, alpha)

    hf, hg = seminorms(refine)
    bound = 2 ** (1 - alpha) * sup ** (1 - alpha) * gsup**alpha
    ell = b.domain.inradius
    deltas = ell * np.geomspace(1e-2, 1.0, 25) if deltas is None else np.asarray(deltas)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = gsup / (sup / deltas + deltas**alpha * hg)
    C = float(np.nanmax(ratios)) if gsup > 0 else 0.0
    return {
        "alpha": alpha,
        "sup": sup,
        "grad_sup": gsup,
        "holder": hf,
        "grad_holder": hg,
        "holder_bound": bound,
        "holder_pass": bool(hf <= bound * (1 + 1e-12) + 1e-14),
        "gradient_constant": C,
        "gradient_reference": 2 * math.sqrt(2),
        "gradient_pass": bool(C <= 2 * math.sqrt(2)),
        "ell": ell,
    }


def harnack_sweep(alpha: float, lambda_bar: float, k0_values=range(2, 13), eps: float = 0.125) -> list:
    """Largest lambda meeting the three smallness conditions for each k0.

    Conditions: 2 lam <= 2^-k0, (2 + lam) 2/(2 - lam) <= 2 + 2^-k0 lambda_bar,
    2/(2 - lam) <= alpha.  The oscillation factor 2/(2-lam) per zoom gives the
    exponent ln(2/(2-lam)) / ln(1/eps).
    """
    rows = []
    for k0 in k0_values:
        def ok(lam):
            q = 2 / (2 - lam)
            return 2 * lam <= 2.0**-k0 and (2 + lam) * q <= 2 + 2.0**-k0 * lambda_bar and q <= alpha
        lo, hi = 0.0, 2.0**-k0 / 2
        if ok(hi):
            lam = hi
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if ok(mid) else (lo, mid)
            lam = lo
        q = 2 / (2 - lam)
        rows.append({"k0": k0, "lambda": lam, "factor": q, "exponent": math.log(q) / math.log(1 / eps)})
    return rows


def trichotomy_measures(source, window=None, center=None, length_scale: float = 1.0) -> dict:
    """Space-time measures of {f >= 1} on [-2,0] x B_2, {f <= 0} and {0 < f < 1} on [-4,0] x B_4.

    The physical window maps onto [-4, 0]; lengths are in units of ``length_scale``.
    """
    src = _as_source(source)
    window = (src.times[0], src.times[-1]) if window is None else tuple(window)
    _check_window(src, window)
    a_t, b_t = window
    span = (b_t - a_t) / 4.0
    g = src.grid
    c = (src.domain.center if center is None else np.asarray(center))
    r = np.hypot(g.x - c[0], g.y - c[1]) / length_scale
    w = g.weights / length_scale**2
    phys = _nodes(src, a_t, b_t)
    tau = (phys - a_t) / span - 4.0
    above, below, between = [], [], []
    for t in phys:
        f = src.grid_values(t)
        above.append(float(np.sum(w * (r <= 2) * (f >= 1))))
        below.append(float(np.sum(w * (r <= 4) * (f <= 0))))
        between.append(float(np.sum(w * (r <= 4) * (f > 0) * (f < 1))))
    late = tau >= -2 - 1e-12
    return {
        "above_1_B2": float(np.trapezoid(np.asarray(above)[late], tau[late])) if late.sum() > 1 else 0.0,
        "below_0_B4": float(np.trapezoid(below, tau)),
        "between_B4": float(np.trapezoid(between, tau)),
        "B4_measure": float(np.sum(w * (r <= 4))) * 4.0,
    }


def cutoff_energy_monitor(record: TrajectoryRecord, levels=(0.0, 0.25, 0.5), tol: float = 1e-3) -> dict:
    """d/dt int (theta - a)_+^2 + ||Lambda^{1/2} (theta - a)_+||^2 for constant cutoffs a.

    Without transport the left side should be <= 0 up to the time-differencing
    error; with transport the ratio to the localized right-hand side is reported.
    """
    rows = []
    scale = max(record.l2[0] ** 2, 1e-300)
    for a in levels:
        s = suitability_monitor(record, ConstantBarrier(a), check_bounds=False, advect=record.config.transport)
        rows.append({"a": a, "max_lhs": float(s.lhs.max()) / scale, "C_star": s.C_star})
    return {
        "transport": record.config.transport,
        "rows": rows,
        "pass": bool(record.config.transport or all(r["max_lhs"] <= tol for r in rows)),
    }

