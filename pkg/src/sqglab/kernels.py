"""Heat kernels and the interior/boundary kernels K_{2s}, B_{2s} by subordination.

    K_{2s}(x, y) = |Gamma(-s)|^{-1} int_0^inf p_t(x, y) t^{-1-s} dt
    B_{2s}(x)    = |Gamma(-s)|^{-1} int_0^inf (1 - int p_t(x, y) dy) t^{-1-s} dt

With this normalization the bilinear form of Lambda^s splits as

    int Lambda^s f Lambda^s g = 1/2 iint [f(x)-f(y)][g(x)-g(y)] K_{2s} + int f g B_{2s}.

The t-integrals run in u = log t.  The heat kernel is bounded by the free
Gaussian, so the range t < |x-y|^2/100 contributes below 1e-7 relatively and
is dropped.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma
from scipy.stats import qmc

from .eigenbasis import DomainSpec, EigenBasis, RectangleBasis, SpectralField, sobolev_norm

TAIL = -math.log(1e-16)
SMALL_T = 100.0
LARGE_T = 50.0
GL_NODES = 64


class TruncationError(ValueError):
    """The eigenbasis cannot resolve the heat kernel at the requested small times."""


def free_space_constant(s: float, n: int = 2) -> float:
    """C_{n,s} = 4^s Gamma(n/2 + s) / (pi^{n/2} |Gamma(-s)|), kernel of (-Delta)^s on R^n."""
    return 4.0**s * gamma(0.5 * n + s) / (math.pi ** (0.5 * n) * abs(gamma(-s)))


def half_plane_boundary_constant(s: float) -> float:
    """lim d^{2s} B_{2s} at distance d from a flat boundary.

    For a half plane 1 - int p_t dy = erfc(d / 2 sqrt t), and
    int_0^inf erfc(sqrt tau) tau^{s-1} dtau = Gamma(s + 1/2) / (s sqrt pi).
    """
    return 4.0**s * gamma(s + 0.5) / (s * math.sqrt(math.pi) * abs(gamma(-s)))


def lattice_zeta(s: float) -> float:
    """Regularized sum over nonzero n in Z^2 of |n|^{-2s}, equal to 4 zeta(s) beta(s)."""
    import mpmath

    return float(4 * mpmath.zeta(s) * mpmath.dirichlet(s, [0, 1, 0, -1]))


class _Interval:
    """Dirichlet heat kernel on (0, L) as an eigen-sum."""

    def __init__(self, L: float):
        self.L = L
        self.k1 = math.pi / L

    def n_modes(self, t_min: float) -> int:
        return int(math.ceil(math.sqrt(TAIL / t_min + self.k1**2) / self.k1))

    def _k(self, t_min):
        return self.k1 * np.arange(1, self.n_modes(t_min) + 1)

    def kernel(self, ts, x, y):
        k = self._k(ts.min())
        E = np.exp(-np.outer(ts, k**2))
        return E @ ((2.0 / self.L) * np.sin(np.outer(k, x)) * np.sin(np.outer(k, y)))

    def survival(self, ts, x):
        k = self._k(ts.min())
        m = np.arange(1, len(k) + 1)
        E = np.exp(-np.outer(ts, k**2))
        w = (2.0 / self.L) * (1.0 - (-1.0) ** m) / k
        return E @ (w[:, None] * np.sin(np.outer(k, x)))

    def matrix(self, t, xs):
        k = self._k(t)
        S = np.sin(np.outer(xs, k))
        return (S * ((2.0 / self.L) * np.exp(-t * k**2))) @ S.T


class RectangleHeat:
    """Products of interval kernels; the number of sine modes grows as t decreases."""

    def __init__(self, domain: DomainSpec):
        Lx, Ly = domain.lengths
        self.domain = domain
        self.ix, self.iy = _Interval(Lx), _Interval(Ly)
        self.lam0 = self.ix.k1**2 + self.iy.k1**2

    def kernel(self, ts, x, y):
        x, y = np.atleast_2d(x), np.atleast_2d(y)
        return self.ix.kernel(ts, x[:, 0], y[:, 0]) * self.iy.kernel(ts, x[:, 1], y[:, 1])

    def survival(self, ts, x):
        x = np.atleast_2d(x)
        return self.ix.survival(ts, x[:, 0]) * self.iy.survival(ts, x[:, 1])

    def cutoff(self, x, y):
        return 0.0


class EigenHeat:
    """Eigen-sum over a given basis, with the free Gaussian below a switch time.

    Below t_sw = (d_x + d_y)^2 / 160 the Dirichlet kernel differs from the
    free one by less than exp(-40) relative to the Gaussian normalization.
    """

    def __init__(self, basis: EigenBasis):
        self.basis = basis
        self.domain = basis.domain
        self.lam = basis.eigenvalues
        self.lam0 = float(self.lam[0])
        g = basis.grid(1)
        self._means = basis.project(np.ones(g.shape))

    def cutoff(self, x, y):
        d = self.domain.boundary_distance(np.asarray(x)) + self.domain.boundary_distance(np.asarray(y))
        return float(np.min(d) ** 2 / 160.0)

    def _need(self, t_min):
        need = self.lam0 + TAIL / t_min
        if self.basis.complete_below < need:
            raise TruncationError(
                f"heat kernel at t={t_min:.3g} needs all eigenvalues up to {need:.4g}; "
                f"basis {self.basis!r} is complete only below {self.basis.complete_below:.4g}"
            )

    def _eigen(self, ts, x, y):
        self._need(ts.min())
        Ex = self.basis.evaluation_matrix(np.atleast_2d(x))
        Ey = self.basis.evaluation_matrix(np.atleast_2d(y))
        return np.exp(-np.outer(ts, self.lam)) @ (Ex * Ey).T

    def kernel(self, ts, x, y):
        x, y = np.atleast_2d(x), np.atleast_2d(y)
        t_sw = self.cutoff(x, y)
        out = np.empty((len(ts), len(x)))
        lo = ts < t_sw
        if lo.any():
            r2 = np.sum((x - y) ** 2, axis=1)
            out[lo] = np.exp(-r2[None, :] / (4 * ts[lo, None])) / (4 * np.pi * ts[lo, None])
        if (~lo).any():
            out[~lo] = self._eigen(ts[~lo], x, y)
        return out

    def survival(self, ts, x):
        x = np.atleast_2d(x)
        self._need(ts.min())
        Ex = self.basis.evaluation_matrix(x)
        return np.exp(-np.outer(ts, self.lam)) @ (Ex * self._means).T


def heat_provider(basis: EigenBasis):
    if isinstance(basis, RectangleBasis):
        return RectangleHeat(basis.domain)
    return EigenHeat(basis)


def heat_kernel(basis: EigenBasis, t: float, x, y) -> float:
    """p_t(x, y) = sum_k exp(-lambda_k t) e_k(x) e_k(y) over the basis modes.

    Terms with exp(-lambda_k t) < 1e-16 exp(-lambda_0 t) are negligible; a
    basis that stops short of that level raises TruncationError.
    """
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    x, y = np.atleast_2d(x), np.atleast_2d(y)
    lam = basis.eigenvalues
    need = lam[0] + TAIL / t
    if basis.complete_below < need:
        raise TruncationError(
            f"t={t:.3g} needs all eigenvalues up to {need:.4g}; basis is complete only below {basis.complete_below:.4g}"
        )
    keep = lam <= need
    Ex = basis.evaluation_matrix(x)[:, keep]
    Ey = basis.evaluation_matrix(y)[:, keep]
    return float(((Ex * Ey) @ np.exp(-lam[keep] * t))[0])


def _gl_panels(lo, hi, n_panels, nodes=GL_NODES):
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    u = (0.5 * (b - a) * (xi + 1) + a).ravel()
    w = (0.5 * (b - a) * wi).ravel()
    return u, w


def _adaptive(integrand, segments, rtol, max_panels=64):
    """Sum of GL panel integrals over ``segments``; panels doubled until converged."""
    n = 1
    prev = None
    while True:
        total = 0.0
        for lo, hi in segments:
            if hi > lo:
                u, w = _gl_panels(lo, hi, n)
                total += float(integrand(u) @ w)
        if prev is not None and abs(total - prev) <= rtol * abs(total):
            return total, n
        if n >= max_panels:
            warnings.warn(f"subordination quadrature stalled at {n} panels (rel change {abs(total - prev) / max(abs(total), 1e-300):.2e})")
            return total, n
        prev = total
        n *= 2


def _large_time(heat):
    return LARGE_T / heat.lam0


def _kernel_pair(heat, s, x, y, rtol):
    r2 = float(np.sum((np.asarray(x) - np.asarray(y)) ** 2))
    if r2 == 0.0:
        raise ValueError("K is singular at x = y")
    norm = 1.0 / abs(gamma(-s))
    t_hi = max(4 * r2, _large_time(heat))
    x2, y2 = np.atleast_2d(x), np.atleast_2d(y)

    def f(u):
        ts = np.exp(u)
        return heat.kernel(ts, x2, y2)[:, 0] * np.exp(-s * u) * norm

    segs = [(math.log(r2 / SMALL_T), math.log(r2)), (math.log(r2), math.log(t_hi))]
    return _adaptive(f, segs, rtol)


def _boundary_point(heat, s, x, rtol):
    d = float(heat.domain.boundary_distance(np.asarray(x)))
    if d <= 0:
        raise ValueError("B needs an interior point")
    norm = 1.0 / abs(gamma(-s))
    t_hi = max(4 * d * d, _large_time(heat))
    x2 = np.atleast_2d(x)

    def f(u):
        ts = np.exp(u)
        return (1.0 - heat.survival(ts, x2)[:, 0]) * np.exp(-s * u) * norm

    segs = [(math.log(d * d / SMALL_T), math.log(d * d)), (math.log(d * d), math.log(t_hi))]
    val, n = _adaptive(f, segs, rtol)
    # beyond t_hi the survival is below exp(-50): only the constant remains
    return val + norm * t_hi ** (-s) / s, n


def kernel_K(basis: EigenBasis, s: float, x, y, rtol: float = 1e-6) -> float:
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    return _kernel_pair(heat_provider(basis), s, x, y, rtol)[0]


def kernel_B(basis: EigenBasis, s: float, x, rtol: float = 1e-6) -> float:
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    return _boundary_point(heat_provider(basis), s, x, rtol)[0]


@dataclass
class KernelTable:
    basis: EigenBasis
    s: float
    pairs: np.ndarray  # (P, 2, 2)
    K: np.ndarray
    boundary_points: np.ndarray  # (Q, 2)
    B: np.ndarray
    quadrature_meta: dict = field(default_factory=dict)

    @property
    def dist(self) -> np.ndarray:
        return np.linalg.norm(self.pairs[:, 0] - self.pairs[:, 1], axis=1)

    def check_signs(self, tol: float = 1e-12) -> dict:
        return {
            "min_K": float(self.K.min(initial=np.inf)),
            "min_B": float(self.B.min(initial=np.inf)),
            "pass": bool((self.K >= -tol).all() and (self.B >= -tol).all()),
        }

    def rows(self):
        d = self.dist
        for (x, y), k, r in zip(self.pairs, self.K, d):
            yield (self.s, x[0], x[1], y[0], y[1], r, k, k * r ** (2 + 2 * self.s))


def build_table(basis: EigenBasis, s: float, pairs, boundary_points=(), rtol: float = 1e-6) -> KernelTable:
    heat = heat_provider(basis)
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2, 2)
    bpts = np.asarray(boundary_points, dtype=float).reshape(-1, 2)
    K = np.empty(len(pairs))
    panels = []
    for i, (x, y) in enumerate(pairs):
        K[i], n = _kernel_pair(heat, s, x, y, rtol)
        panels.append(n)
    B = np.empty(len(bpts))
    for i, x in enumerate(bpts):
        B[i], n = _boundary_point(heat, s, x, rtol)
        panels.append(n)
    meta = {
        "variable": "u = log t",
        "gl_nodes_per_panel": GL_NODES,
        "t_min": f"|x-y|^2/{SMALL_T:g} (K), d^2/{SMALL_T:g} (B)",
        "t_split": "|x-y|^2 (K), d^2 (B)",
        "t_max": f"max(4 r^2, {LARGE_T:g}/lambda_0)",
        "max_panels_per_side": int(max(panels, default=0)),
        "rtol": rtol,
    }
    return KernelTable(basis, s, pairs, K, bpts, B, meta)


def sample_pairs(domain: DomainSpec, n: int, seed: int = 0, min_dist: float = 0.0) -> np.ndarray:
    """Scrambled-Sobol point pairs in the domain with |x - y| >= min_dist."""
    sob = qmc.Sobol(d=4, scramble=True, seed=seed)
    out = []
    while len(out) < n:
        u = sob.random_base2(max(4, int(math.ceil(math.log2(2 * n)))))
        p = np.stack([_map_unit(domain, u[:, :2]), _map_unit(domain, u[:, 2:])], axis=1)
        d = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
        out.extend(p[d >= min_dist])
    return np.asarray(out[:n])


def _map_unit(domain, u):
    if domain.shape == "rectangle":
        return u * np.array(domain.lengths)
    r = domain.radius * np.sqrt(u[:, 0])
    phi = 2 * np.pi * u[:, 1]
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)


def boundary_layer_points(domain: DomainSpec, h: float, per_side: int = 4, corner_margin: float | None = None):
    """Points at distances h, 2h, 4h from the boundary.

    Returns (points, corner_flag); rectangle points within ``corner_margin``
    (default 4h) of two sides are flagged as corner-adjacent.
    """
    dists = np.array([h, 2 * h, 4 * h])
    pts = []
    if domain.shape == "rectangle":
        Lx, Ly = domain.lengths
        ts = (np.arange(per_side) + 0.5) / per_side
        for d in dists:
            for t in ts:
                pts += [(t * Lx, d), (t * Lx, Ly - d), (d, t * Ly), (Lx - d, t * Ly)]
        pts = np.asarray(pts)
        cm = 4 * h if corner_margin is None else corner_margin
        dx = np.minimum(pts[:, 0], Lx - pts[:, 0])
        dy = np.minimum(pts[:, 1], Ly - pts[:, 1])
        corner = (dx < cm) & (dy < cm)
        return pts, corner
    R = domain.radius
    phis = 2 * np.pi * np.arange(4 * per_side) / (4 * per_side)
    for d in dists:
        pts += [((R - d) * np.cos(p), (R - d) * np.sin(p)) for p in phis]
    pts = np.asarray(pts)
    return pts, np.zeros(len(pts), dtype=bool)


def verify_upper_bound(table: KernelTable, factor: float = 2.0) -> dict:
    """sup K_{2s} |x-y|^{2+2s} against ``factor`` times the free-space constant."""
    c = free_space_constant(table.s)
    rep = {"s": table.s, "free_space_constant": c, "threshold": factor * c, "n_samples": len(table.K)}
    if len(table.K) == 0:
        warnings.warn("verify_upper_bound: empty sample set, vacuous pass")
        rep.update(sup=None, pass_=True, warning="empty sample set")
        return _fix_pass(rep)
    scaled = table.K * table.dist ** (2 + 2 * table.s)
    i = int(np.argmax(scaled))
    rep.update(
        sup=float(scaled[i]),
        argmax=table.pairs[i].tolist(),
        pass_=bool(np.isfinite(scaled[i]) and scaled[i] <= factor * c),
    )
    return _fix_pass(rep)


def _fix_pass(rep):
    rep["pass"] = rep.pop("pass_")
    return rep


@dataclass
class DomainConstant:
    C_dmn: float
    s_from: float
    s_to: float
    sample_count: int
    max_ratio_location: tuple
    skipped: int = 0
    rescaled_ratio: float | None = None
    reverse_sup: float | None = None
    label: str = "sampled lower estimate of the true constant"


def _ratio_samples(basis, s_from, s_to, pairs, rtol, noise):
    heat = heat_provider(basis)
    # kernel K_a corresponds to subordination exponent a/2
    a, b = 0.5 * s_from, 0.5 * s_to
    ratios, rev, keep = [], [], []
    for i, (x, y) in enumerate(pairs):
        ka = _kernel_pair(heat, a, x, y, rtol)[0]
        kb = _kernel_pair(heat, b, x, y, rtol)[0]
        if kb <= noise or ka <= noise:
            continue
        r = float(np.linalg.norm(x - y))
        ratios.append(ka / (r ** (s_to - s_from) * kb))
        rev.append(kb * r ** (s_to - s_from) / ka)
        keep.append(i)
    return np.asarray(ratios), np.asarray(rev), keep


def estimate_C_dmn(basis: EigenBasis, s_from: float = 0.25, s_to: float = 1.0, samples=None,
                   n_samples: int = 200, seed: int = 0, min_dist: float | None = None,
                   rescale_eps: float | None = 0.5, rtol: float = 1e-6, noise: float = 1e-12) -> DomainConstant:
    """C_dmn = max K_{s_from} / (|x-y|^{s_to - s_from} K_{s_to}) over sampled pairs.

    The ratio is scale free, so repeating on eps^{-1} * domain with the pairs
    scaled by 1/eps must give the same value up to quadrature error.
    """
    dom = basis.domain
    if min_dist is None:
        min_dist = 2 * dom.diameter / 100
    pairs = sample_pairs(dom, n_samples, seed, min_dist) if samples is None else np.asarray(samples, float)
    ratios, rev, keep = _ratio_samples(basis, s_from, s_to, pairs, rtol, noise)
    i = int(np.argmax(ratios))
    out = DomainConstant(
        C_dmn=float(ratios[i]),
        s_from=s_from,
        s_to=s_to,
        sample_count=len(keep),
        max_ratio_location=tuple(map(tuple, pairs[keep[i]].tolist())),
        skipped=len(pairs) - len(keep),
        reverse_sup=float(rev.max()),
    )
    if rescale_eps is not None:
        big = basis.rescaled(rescale_eps)
        r2, _, _ = _ratio_samples(big, s_from, s_to, pairs / rescale_eps, rtol, noise * rescale_eps**3)
        out.rescaled_ratio = float(ratios.max() / r2.max())
    return out


def _grid_fields(basis: RectangleBasis, coeffs, xs, ys):
    Sx = basis._axis_matrix(xs, basis.Lx, basis.Mx, 0)
    Sy = basis._axis_matrix(ys, basis.Ly, basis.My, 0)
    return Sx @ basis.to_array(coeffs) @ Sy.T


def _bilinear_level(basis: RectangleBasis, f, g, s, n, panel_width, gl_nodes):
    Lx, Ly = basis.Lx, basis.Ly
    nx = n
    ny = max(2, int(round((n + 1) * Ly / Lx)) - 1)
    hx, hy = Lx / (nx + 1), Ly / (ny + 1)
    xs = hx * np.arange(1, nx + 1)
    ys = hy * np.arange(1, ny + 1)
    F = _grid_fields(basis, f.coeffs, xs, ys)
    G = _grid_fields(basis, g.coeffs, xs, ys)
    W = hx * hy
    heat = RectangleHeat(basis.domain)
    h_min = min(hx, hy)
    lo = math.log(h_min**2 / SMALL_T)
    hi = math.log(max(LARGE_T / heat.lam0, 4 * (Lx**2 + Ly**2)))
    n_pan = max(1, int(math.ceil((hi - lo) / panel_width)))
    u, w = _gl_panels(lo, hi, n_pan, gl_nodes)
    norm = 1.0 / abs(gamma(-s))
    FG = F * G
    double = 0.0
    Bint = np.zeros_like(F)
    for ui, wi in zip(u, w):
        t = math.exp(ui)
        c = wi * math.exp(-s * ui) * norm
        P1 = heat.ix.matrix(t, xs)
        P2 = heat.iy.matrix(t, ys)
        row = np.outer(P1.sum(axis=1), P2.sum(axis=1)) * W
        cross = np.sum(F * (P1 @ G @ P2.T)) * W
        double += c * 2.0 * (np.sum(FG * row) - cross) * W
        S = np.outer(heat.ix.survival(np.array([t]), xs)[0], heat.iy.survival(np.array([t]), ys)[0])
        Bint += c * (1.0 - S)
    Bint += norm * math.exp(hi) ** (-s) / s
    bterm = float(np.sum(FG * Bint) * W)
    raw = 0.5 * double + bterm
    corr = 0.0
    if abs(hx - hy) <= 1e-12 * hx:
        grad = _grad_inner(basis, f, g)
        corr = -0.5 * hx ** (2 - 2 * s) * free_space_constant(s) * lattice_zeta(s) * 0.5 * grad
    return {"n": n, "h": h_min, "raw": raw, "corrected": raw + corr, "boundary_term": bterm, "t_nodes": len(u)}


def _grad_inner(basis, f, g):
    # int grad f . grad g = sum lambda_k f_k g_k
    return float(np.sum(basis.eigenvalues * f.coeffs * g.coeffs))


def verify_bilinear_identity(f: SpectralField, g: SpectralField, s: float, levels=(16, 32, 64),
                             tol: float = 0.02, panel_width: float = 1.0, gl_nodes: int = 20) -> dict:
    """Spectral int Lambda^s f Lambda^s g against the kernel quadrature.

    Tensor trapezoid grid; the diagonal drops out because the integrand has
    the factor [f(x)-f(y)].  On square cells the leading O(h^{2-2s}) lattice
    error of the punctured sum is removed analytically (Epstein zeta
    constant); the two finest levels are then Richardson-extrapolated at
    order h^2.
    """
    b = f.basis
    if not isinstance(b, RectangleBasis):
        raise NotImplementedError("bilinear quadrature uses the tensor grid of a rectangle")
    if not b.same_as(g.basis):
        raise ValueError("f and g live on different bases")
    lhs = float(np.sum(b.eigenvalues**s * f.coeffs * g.coeffs))
    if not f.coeffs.any() or not g.coeffs.any():
        return {"s": s, "lhs": lhs, "rhs": 0.0, "rel_err": 0.0, "trace": [], "pass": True}
    trace = [_bilinear_level(b, f, g, s, n, panel_width, gl_nodes) for n in levels]
    vals = [t["corrected"] for t in trace]
    if len(vals) >= 2:
        h1, h2 = trace[-2]["h"], trace[-1]["h"]
        q = (h1 / h2) ** 2
        rhs = (q * vals[-1] - vals[-2]) / (q - 1)
    else:
        rhs = vals[-1]
    scale = max(abs(lhs), sobolev_norm(f, s) * sobolev_norm(g, s))
    rel = abs(rhs - lhs) / scale
    diffs = np.abs(np.diff(vals))
    # differences at rounding level say nothing about convergence
    converging = len(diffs) < 2 or diffs[-1] <= max(diffs[-2] * 1.05, 1e-10 * scale)
    return {
        "s": s,
        "lhs": lhs,
        "rhs": rhs,
        "rel_err": rel,
        "finest_rel_err": abs(vals[-1] - lhs) / scale,
        "converging": bool(converging),
        "trace": trace,
        "tol": tol,
        "pass": bool(rel <= tol and converging),
    }


# ---------------------------------------------------------------------------
# inequalities derived from the representation


def relation_sup(basis: EigenBasis, s: float = 0.25, t: float = 1.0, samples=None, n_samples: int = 60,
                 seed: int = 0, min_dist: float | None = None, rtol: float = 1e-6, noise: float = 1e-12) -> dict:
    """sup K_t / (|x-y|^{s-t} K_s) over sampled pairs; finite means the comparison holds."""
    dom = basis.domain
    if min_dist is None:
        min_dist = 2 * dom.diameter / 100
    pairs = sample_pairs(dom, n_samples, seed, min_dist) if samples is None else np.asarray(samples, float)
    ratios, _, keep = _ratio_samples(basis, t, s, pairs, rtol, noise)
    sup = float(ratios.max()) if len(ratios) else 0.0
    return {"s": s, "t": t, "sup": sup, "samples": len(keep), "skipped": len(pairs) - len(keep),
            "pass": bool(np.isfinite(sup))}


def disjoint_pairing(f: SpectralField, g: SpectralField, s: float, refine: int = 2, rtol: float = 1e-9) -> dict:
    """int Lambda^s f Lambda^s g for nonnegative f, g with disjoint supports; must be <= 0.

    Supports are taken on the grid, so the projections are checked for
    sign and overlap first.
    """
    b = f.basis
    fv, gv = b.values(f.coeffs, refine, True), b.values(g.coeffs, refine, True)
    scale = max(np.abs(fv).max(), np.abs(gv).max(), 1e-300)
    overlap = float(np.max(np.minimum(np.abs(fv), np.abs(gv)))) / scale
    negative = float(max(-fv.min(), -gv.min(), 0.0)) / scale
    val = float(np.sum(b.eigenvalues**s * f.coeffs * g.coeffs))
    bound = rtol * sobolev_norm(f, s) * sobolev_norm(g, s)
    return {"s": s, "pairing": val, "overlap": overlap, "negative_part": negative,
            "pass": bool(val <= bound)}


def _sup_increment_integral(g, x, y, w, s, stride):
    # sup over a subsample of y of sum_x w |g(x)-g(y)|^2 / |x-y|^{2+2s}, punctured at x = y
    xf, yf, gf, wf = x.ravel(), y.ravel(), g.ravel(), w.ravel()
    best = 0.0
    for i in range(0, len(xf), stride):
        d2 = (xf - xf[i]) ** 2 + (yf - yf[i]) ** 2
        m = d2 > 0
        best = max(best, float(np.sum(wf[m] * (gf[m] - gf[i]) ** 2 / d2[m] ** (1 + s))))
    return best


def product_rule_ratios(f: SpectralField, g: SpectralField, s: float, refine: int = 2, stride: int = 7) -> dict:
    """Constants implied by two product rules for ||fg||_{H^s}.

    C_b = (||fg||_{H^s} - 2||g||_inf ||f||_{H^s})_+ / (||f||_2 sup_y int |g(x)-g(y)|^2 |x-y|^{-2-2s} dx)
    C_c = ||fg||_{H^s} / (||g||_{C^{0,1}} (||f||_2 + ||f||_{H^s}))
    Both must be finite and stable under refinement; neither has a known value.
    """
    b = f.basis
    grid = b.grid(refine, True)
    fv, gv = b.values(f.coeffs, refine, True), b.values(g.coeffs, refine, True)
    prod = b.values(f.coeffs, refine, False) * b.values(g.coeffs, refine, False)
    fg = SpectralField(b, b.project(prod, refine))
    gx = b.values(g.coeffs, refine, True, (1, 0))
    gy = b.values(g.coeffs, refine, True, (0, 1))
    g_inf = float(np.abs(gv).max())
    lip = g_inf + float(np.hypot(gx, gy).max())
    lhs = sobolev_norm(fg, s)
    f2, fs = sobolev_norm(f, 0.0), sobolev_norm(f, s)
    incr = _sup_increment_integral(gv, grid.x, grid.y, grid.weights, s, stride)
    excess = max(lhs - 2 * g_inf * fs, 0.0)
    C_b = excess / (f2 * incr) if f2 * incr > 0 else 0.0
    C_c = lhs / (lip * (f2 + fs)) if lip * (f2 + fs) > 0 else 0.0
    return {"s": s, "norm_fg": lhs, "C_b": float(C_b), "C_c": float(C_c),
            "pass": bool(np.isfinite(C_b) and np.isfinite(C_c))}


def support_pairing_ratio(f: SpectralField, s: float, g: SpectralField | None = None, refine: int = 2,
                          support: float | None = None, support_tol: float = 1e-2) -> dict:
    """int Lambda^{s/2} g Lambda^{s/2} f / (||g||_inf |supp f|^{1/2} (||f||_2 + ||f||_{H^{2s}})).

    Without g the worst case over ||g||_inf <= 1 is used, the pairing
    becoming ||Lambda^s f||_1.  Pass the exact ``support`` area when known;
    otherwise it is measured on the grid above ``support_tol`` times the max,
    since truncated projections ring at a low level everywhere.
    """
    b = f.basis
    grid = b.grid(refine, True)
    fv = b.values(f.coeffs, refine, True)
    if support is None:
        supp = float(np.sum(grid.weights * (fv > support_tol * np.abs(fv).max())))
    else:
        supp = float(support)
    lam = b.values(b.eigenvalues ** (s / 2) * f.coeffs, refine, True)
    if g is None:
        pairing, g_inf = float(np.sum(grid.weights * np.abs(lam))), 1.0
    else:
        pairing = float(np.sum(b.eigenvalues ** (s / 2) * f.coeffs * g.coeffs))
        g_inf = float(np.abs(b.values(g.coeffs, refine, True)).max())
    den = g_inf * math.sqrt(supp) * (sobolev_norm(f, 0.0) + sobolev_norm(f, 2 * s))
    ratio = pairing / den if den > 0 else 0.0
    return {"s": s, "pairing": pairing, "support": supp, "ratio": float(ratio), "pass": bool(np.isfinite(ratio))}
