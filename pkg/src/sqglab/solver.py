"""Galerkin SQG solver: theta_t + u . grad theta + Lambda theta = eps Delta theta.

The linear part is diagonal in the eigenbasis and integrated exactly; the
transport term is evaluated pseudospectrally on a padded grid and advanced
with third-order Runge-Kutta in integrating-factor form.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .barriers import measured_bounds
from .eigenbasis import (
    DomainSpec,
    EigenBasis,
    SpectralField,
    build_basis,
    riesz_velocity,
    sobolev_norm,
)

log = logging.getLogger(__name__)

SCHEMES = ("IF-RK3", "IF-Euler")


class SolverAbort(RuntimeError):
    """Raised on non-finite state or exhausted CFL halvings; carries the last good state."""

    def __init__(self, reason: str, time: float, state: SpectralField | None):
        super().__init__(f"{reason} at t={time:.6g}")
        self.reason = reason
        self.time = time
        self.state = state


@dataclass(frozen=True)
class SolverConfig:
    truncation: tuple = (32, 32)
    epsilon: float = 0.0
    dt: float = 1e-2
    t_end: float = 1.0
    dealias_pad: int = 2
    scheme: str = "IF-RK3"
    record_stride: int = 1
    seed: int = 0
    cfl: float = 0.5
    max_halvings: int = 4
    tol_energy: float = 1e-5
    transport: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if int(self.dealias_pad) != self.dealias_pad or self.dealias_pad < 2:
            raise ValueError("dealias_pad must be an integer >= 2")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        # the last step is shortened to land on t_end
        return int(math.ceil(self.t_end / self.dt * (1 - 1e-12)))

    def step_size(self, n: int) -> float:
        return min(self.dt, self.t_end - n * self.dt)

    def basis(self, domain: DomainSpec) -> EigenBasis:
        return build_basis(domain, self.truncation)


def linear_rates(basis: EigenBasis, epsilon: float) -> np.ndarray:
    """Per-mode decay rate sqrt(lambda) + eps lambda."""
    return basis.sqrt_eigenvalues + epsilon * basis.eigenvalues


def _advection(basis: EigenBasis, coeffs: np.ndarray, pad: int):
    """Coefficients of P(u . grad theta) and sup |u| on the padded grid."""
    psi = coeffs / basis.sqrt_eigenvalues
    ux = -basis.values(psi, pad, False, (0, 1))
    uy = basis.values(psi, pad, False, (1, 0))
    tx = basis.values(coeffs, pad, False, (1, 0))
    ty = basis.values(coeffs, pad, False, (0, 1))
    umax = float(np.sqrt((ux * ux + uy * uy).max(initial=0.0)))
    return basis.project(ux * tx + uy * ty, pad), umax


def nonlinear_term(theta: SpectralField, pad: int = 2) -> SpectralField:
    """Galerkin projection of u . grad theta with u = perp-grad Lambda^{-1} theta."""
    c, _ = _advection(theta.basis, theta.coeffs, pad)
    return SpectralField(theta.basis, c)


def skew_defect(theta: SpectralField, pad: int = 2) -> float:
    """|<theta, P(u . grad theta)>| / (||theta||_2 ||theta||_{H^1})."""
    den = theta.norm() * sobolev_norm(theta, 1.0)
    if den == 0:
        return 0.0
    return abs(float(np.dot(theta.coeffs, nonlinear_term(theta, pad).coeffs))) / den


class _Stepper:
    def __init__(self, basis: EigenBasis, config: SolverConfig):
        self.basis = basis
        self.cfg = config
        self.rates = linear_rates(basis, config.epsilon)
        self._cache = {}

    def factors(self, h):
        if h not in self._cache:
            self._cache[h] = (np.exp(-self.rates * h), np.exp(-self.rates * h / 2))
        return self._cache[h]

    def rhs(self, c):
        if not self.cfg.transport:
            return np.zeros_like(c), 0.0
        n, umax = _advection(self.basis, c, self.cfg.dealias_pad)
        return -n, umax

    def step(self, c, h, k1=None):
        E, E2 = self.factors(h)
        if k1 is None:
            k1, _ = self.rhs(c)
        if self.cfg.scheme == "IF-Euler":
            return E * (c + h * k1)
        # Kutta's third-order tableau (nodes 0, 1/2, 1): only forward factors appear
        k2, _ = self.rhs(E2 * (c + 0.5 * h * k1))
        k3, _ = self.rhs(E * (c - h * k1) + 2 * h * (E2 * k2))
        return E * (c + h / 6 * k1) + (4 * h / 6) * (E2 * k2) + h / 6 * k3

    def dissipation(self, c0, c1, h):
        """Time integral over the step of 2 sum a_k theta_k^2, divided by h.

        Each mode is modelled as theta_k(s) = alpha e^{-a s} + beta (exact decay
        plus constant forcing) through both endpoint values, then integrated in
        closed form.  Exact for the linear flow.
        """
        a = self.rates
        ah = a * h
        g1 = -np.expm1(-ah)
        g2 = -np.expm1(-2 * ah)
        beta = (c1 - c0 * np.exp(-ah)) / g1
        alpha = c0 - beta
        integral = alpha**2 * g2 / 2 + 2 * alpha * beta * g1 + beta**2 * ah
        return float(2.0 * np.sum(integral) / h)


def step(theta: SpectralField, config: SolverConfig, dt: float | None = None) -> SpectralField:
    """One integrating-factor step without CFL control."""
    st = _Stepper(theta.basis, config)
    out = st.step(theta.coeffs, config.dt if dt is None else dt)
    return SpectralField(theta.basis, out)


@dataclass
class TrajectoryRecord:
    basis: EigenBasis
    config: SolverConfig
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    h_half: list = field(default_factory=list)
    visc: list = field(default_factory=list)
    energy_residual: list = field(default_factory=list)
    step_residuals: list = field(default_factory=list)
    substeps: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def field(self, i: int) -> SpectralField:
        return SpectralField(self.basis, self.states[i])

    @property
    def theta0(self) -> SpectralField:
        return self.field(0)

    @property
    def max_energy_residual(self) -> float:
        return float(max(self.step_residuals, default=0.0))

    def state_at(self, t: float) -> SpectralField:
        """Linear interpolation between records."""
        ts = np.asarray(self.times)
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValueError(f"t={t} outside recorded span [{ts[0]}, {ts[-1]}]")
        i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2)) if len(ts) > 1 else 0
        if len(ts) == 1:
            return self.field(0)
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        w = min(max(w, 0.0), 1.0)
        return SpectralField(self.basis, (1 - w) * self.states[i] + w * self.states[i + 1])

    def rows(self):
        for i, t in enumerate(self.times):
            yield t, self.l2[i], self.linf[i], self.h_half[i], self.energy_residual[i]

    def l2_monotone(self, rtol: float = 1e-12) -> bool:
        l2 = np.asarray(self.l2)
        return bool(np.all(np.diff(l2) <= rtol * l2[0]))

    def max_principle_excess(self) -> float:
        """max_i (||theta(t_i)||_inf - min_{j<i} ||theta(t_j)||_inf) relative to ||theta0||_inf."""
        li = np.asarray(self.linf)
        if li[0] == 0:
            return 0.0
        run = np.minimum.accumulate(li)
        return float(max(0.0, (li[1:] - run[:-1]).max(initial=0.0)) / li[0])


def _sup(basis, c):
    return float(np.abs(basis.values(c, 2, True)).max(initial=0.0))


def _push(rec: TrajectoryRecord, t, c, res):
    b = rec.basis
    rec.times.append(t)
    rec.states.append(c.copy())
    rec.l2.append(float(np.linalg.norm(c)))
    rec.linf.append(_sup(b, c))
    rec.h_half.append(float(np.sqrt(np.sum(b.sqrt_eigenvalues * c * c))))
    rec.visc.append(rec.config.epsilon * float(np.sum(b.eigenvalues * c * c)))
    rec.energy_residual.append(res)


def run(theta0: SpectralField, config: SolverConfig, on_record=None) -> TrajectoryRecord:
    """Evolve to t_end in steps of dt, halving within a step when the CFL bound fails.

    Every (sub)step records the energy residual
    (||theta'||^2 - ||theta||^2)/h + dissipation, normalized by ||theta0||^2.
    """
    b = theta0.basis
    c = np.asarray(theta0.coeffs, dtype=float).copy()
    if not np.all(np.isfinite(c)):
        raise SolverAbort("non-finite initial data", 0.0, None)
    st = _Stepper(b, config)
    rec = TrajectoryRecord(b, config)
    e0 = float(np.dot(c, c)) or 1.0
    spacing = b.cfl_spacing()
    _push(rec, 0.0, c, 0.0)
    worst = 0.0
    for n in range(config.n_steps):
        t = n * config.dt
        k1, umax = st.rhs(c)
        h, halvings = config.step_size(n), 0
        while h * umax > config.cfl * spacing:
            halvings += 1
            if halvings > config.max_halvings:
                raise SolverAbort(f"CFL violated after {config.max_halvings} halvings (|u|={umax:.3g})",
                                  t, SpectralField(b, c))
            h /= 2
        if halvings:
            warnings.warn(f"CFL: dt reduced to {h:.3g} at t={t:.4g}", RuntimeWarning, stacklevel=2)
        for sub in range(2**halvings):
            new = st.step(c, h, k1 if sub == 0 else None)
            if not np.all(np.isfinite(new)):
                raise SolverAbort("non-finite state", t + sub * h, SpectralField(b, c))
            r = (float(np.dot(new, new)) - float(np.dot(c, c))) / h + st.dissipation(c, new, h)
            r = abs(r) / e0
            rec.step_residuals.append(r)
            worst = max(worst, r)
            c = new
        rec.substeps.append(2**halvings)
        if (n + 1) % config.record_stride == 0 or n + 1 == config.n_steps:
            _push(rec, min((n + 1) * config.dt, config.t_end), c, worst)
            worst = 0.0
            if on_record is not None:
                on_record(rec)
    return rec


def linfty_decay_constant(record: TrajectoryRecord) -> float:
    """sup_t t ||theta(t)||_inf / ||theta0||_2 over the records."""
    l20 = record.l2[0]
    if l20 == 0:
        return 0.0
    t = np.asarray(record.times)
    return float((t * np.asarray(record.linf)).max() / l20)


# ---------------------------------------------------------------------------
# initial data


def initial_mode(basis: EigenBasis, mode=None, amplitude: float = 1.0) -> SpectralField:
    mode = basis.modes[0] if mode is None else mode
    return SpectralField.mode(basis, mode, amplitude)


def initial_random(basis: EigenBasis, seed: int = 0, kmax: float = 8.0, amplitude: float = 1.0,
                   decay: float = 2.0) -> SpectralField:
    """Band-limited random data, ||theta0||_2 = amplitude.

    Each coefficient comes from its own generator keyed by (seed, mode label),
    so the field is the same function for every truncation resolving kmax.
    """
    if kmax**2 > basis.complete_below:
        raise ValueError(f"kmax={kmax} not resolved by this truncation")
    c = np.zeros(basis.n_modes)
    for i, lab in enumerate(basis.modes):
        lam = basis.eigenvalues[i] / basis.eigenvalues[0]
        if basis.sqrt_eigenvalues[i] <= kmax:
            g = np.random.default_rng([seed, *[int(v) for v in lab]])
            c[i] = g.standard_normal() * lam ** (-0.5 * decay)
    nrm = np.linalg.norm(c)
    return SpectralField(basis, c * (amplitude / nrm if nrm else 0.0))


def initial_bump(basis: EigenBasis, center=None, radius: float | None = None, amplitude: float = 1.0,
                 refine: int = 2) -> SpectralField:
    """Smooth compactly supported bump exp(1 - 1/(1 - r^2/rho^2)) projected onto the basis."""
    d = basis.domain
    center = d.center if center is None else np.asarray(center, dtype=float)
    radius = 0.3 * d.inradius if radius is None else radius
    g = basis.grid(refine)
    q = ((g.x - center[0]) ** 2 + (g.y - center[1]) ** 2) / radius**2
    v = np.zeros_like(q)
    m = q < 1
    v[m] = amplitude * np.exp(1.0 - 1.0 / (1.0 - q[m]))
    return SpectralField(basis, basis.project(v, refine))


def initial_zero(basis: EigenBasis) -> SpectralField:
    return SpectralField.zeros(basis)


# ---------------------------------------------------------------------------
# monitors


@dataclass
class SuitabilityResidual:
    barrier: str
    k: float
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    C_star: float
    max_ratio: float
    skipped: int
    skipped_max_lhs: float

    def holds(self, C=None, atol: float = 1e-12) -> bool:
        C = self.C_star if C is None else C
        ok = self.rhs >= 1e-12
        return bool(np.all(self.lhs[ok] - C * self.rhs[ok] <= atol))


def suitability_monitor(record: TrajectoryRecord, barrier, refine: int = 2, check_bounds: bool = True,
                        advect: bool = True) -> SuitabilityResidual:
    """Both sides of the localized energy inequality for theta_+ = (theta - Psi)_+.

    lhs = d/dt int theta_+^2 + ||Lambda^{1/2} theta_+||^2 (time derivative by
    differences between records), rhs = k^2 |{theta >= Psi}| +
    |int theta_+ (d_t Psi + u . grad Psi)|.  C* is the largest lhs/rhs ratio
    over times with rhs >= 1e-12, floored at 0; the signed maximum is kept as
    ``max_ratio`` since it is the resolution-sensitive quantity.
    """
    b = record.basis
    g = b.grid(refine)
    k = float(barrier.k)
    if check_bounds and k > 0:
        gm, hm = measured_bounds(barrier, record.times[:: max(1, len(record) // 8)], g.x, g.y)
        if max(gm, hm) > k * (1 + 1e-6):
            raise ValueError(f"barrier exceeds its k bound: |grad|={gm:.4g}, [.]_1/4={hm:.4g}, k={k:.4g}")
    t = np.asarray(record.times)
    mass, h_half, meas, trans = [], [], [], []
    for i, ti in enumerate(t):
        c = record.states[i]
        th = b.values(c, refine)
        psi_v = barrier.value(ti, g.x, g.y)
        tp = np.maximum(th - psi_v, 0.0)
        mass.append(g.integrate(tp**2))
        cp = b.project(tp, refine)
        h_half.append(float(np.sum(b.sqrt_eigenvalues * cp * cp)))
        meas.append(g.integrate((th >= psi_v).astype(float)))
        dpsi = barrier.time_derivative(ti, g.x, g.y)
        if advect:
            u = riesz_velocity(SpectralField(b, c), refine, False)
            gx, gy = barrier.gradient(ti, g.x, g.y)
            dpsi = dpsi + u.values[0] * gx + u.values[1] * gy
        trans.append(abs(g.integrate(tp * dpsi)))
    mass = np.asarray(mass)
    dmass = np.gradient(mass, t) if len(t) > 1 else np.zeros(1)
    lhs = dmass + np.asarray(h_half)
    rhs = k**2 * np.asarray(meas) + np.asarray(trans)
    ok = rhs >= 1e-12
    ratio = float((lhs[ok] / rhs[ok]).max()) if ok.any() else -math.inf
    C = max(0.0, ratio)
    return SuitabilityResidual(
        barrier=type(barrier).__name__,
        k=k,
        times=t,
        lhs=lhs,
        rhs=rhs,
        C_star=C,
        max_ratio=ratio,
        skipped=int((~ok).sum()),
        skipped_max_lhs=float(lhs[~ok].max(initial=-np.inf)) if (~ok).any() else 0.0,
    )


def vanishing_viscosity_sweep(theta0: SpectralField, eps_list, config: SolverConfig) -> dict:
    """Terminal L2 distance of each viscous run to the eps = 0 run, plus a slope fit in eps."""
    eps_list = [float(e) for e in eps_list]
    pos = [e for e in eps_list if e > 0]
    if any(a <= b for a, b in zip(pos, pos[1:])):
        raise ValueError("positive viscosities must be strictly decreasing")
    ref = run(theta0, _replace(config, epsilon=0.0)).states[-1]
    rows = []
    for e in eps_list:
        fin = ref if e == 0 else run(theta0, _replace(config, epsilon=e)).states[-1]
        rows.append({"epsilon": e, "discrepancy": float(np.linalg.norm(fin - ref))})
    d = [(r["epsilon"], r["discrepancy"]) for r in rows if r["epsilon"] > 0 and r["discrepancy"] > 0]
    slope = float(np.polyfit(np.log([a for a, _ in d]), np.log([x for _, x in d]), 1)[0]) if len(d) >= 2 else math.nan
    disc = [x for _, x in d]
    return {
        "rows": rows,
        "slope": slope,
        "monotone": bool(all(a >= b for a, b in zip(disc, disc[1:]))),
    }


def _replace(cfg: SolverConfig, **kw) -> SolverConfig:
    from dataclasses import replace

    return replace(cfg, **kw)


def scaling_check(theta0: SpectralField, config: SolverConfig, eps: float = 0.5) -> dict:
    """Evolve theta0(eps x) on eps^{-1} Omega for time T/eps and compare to theta(T, eps x).

    Critical scaling: theta_eps(t, x) = theta(eps t, eps x); coefficients in the
    rescaled basis are theta_k / eps.  Inviscid only (eps Delta breaks the scaling).
    """
    if config.epsilon != 0:
        raise ValueError("scaling covariance holds for the inviscid equation only")
    a = run(theta0, config).states[-1]
    rb = theta0.basis.rescaled(eps)
    cfg = _replace(config, dt=config.dt / eps, t_end=config.t_end / eps)
    bfin = run(SpectralField(rb, theta0.coeffs / eps), cfg).states[-1]
    err = float(np.linalg.norm(bfin * eps - a) / max(np.linalg.norm(a), 1e-300))
    return {"eps": eps, "rel_error": err}
