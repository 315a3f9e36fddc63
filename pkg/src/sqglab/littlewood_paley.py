"""Dyadic spectral projections, Bernstein/commutator diagnostics and calibration.

Band j holds eigen-frequencies sqrt(lambda) near 2^j: the multiplier of P_j is
phi(2^-j sqrt(lambda)) with phi(xi) = chi(xi) - chi(2 xi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigenbasis import (
    EigenBasis,
    GridField,
    RectangleBasis,
    SpectralField,
    apply_fractional,
    riesz_velocity,
    sobolev_norm,
    stream_function,
    velocity_jacobian,
)


def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class LPBump:
    """chi = 1 on [0, 1], 0 on [2, inf), exp-mollified in between."""

    support: tuple = (0.5, 2.0)

    def chi(self, xi):
        xi = np.asarray(xi, dtype=float)
        a, b = _h(2.0 - xi), _h(xi - 1.0)
        return a / (a + b)

    def phi(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.chi(xi) - self.chi(2.0 * xi)


DEFAULT_BUMP = LPBump()


def lowest_band(basis: EigenBasis) -> int:
    """j_0 = floor(log2 sqrt(lambda_0)) - 1; P_j vanishes for j <= j_0."""
    return int(math.floor(math.log2(math.sqrt(basis.eigenvalues[0])))) - 1


def band_range(basis: EigenBasis) -> range:
    j0 = lowest_band(basis)
    jmax = int(math.ceil(math.log2(math.sqrt(basis.eigenvalues[-1])))) + 1
    return range(j0, jmax + 1)


def resolved_bands(basis: EigenBasis) -> list[int]:
    """Bands whose whole frequency support [2^{j-1}, 2^{j+1}] lies in the complete spectrum."""
    top = math.sqrt(basis.complete_below)
    return [j for j in band_range(basis) if 2.0 ** (j + 1) <= top and 2.0 ** (j + 1) > math.sqrt(basis.eigenvalues[0])]


def multiplier(basis: EigenBasis, j: int, bump: LPBump = DEFAULT_BUMP) -> np.ndarray:
    return bump.phi(2.0 ** (-j) * basis.sqrt_eigenvalues)


def lp_project(f: SpectralField, j: int, bump: LPBump = DEFAULT_BUMP) -> SpectralField:
    return SpectralField(f.basis, f.coeffs * multiplier(f.basis, j, bump))


def partition_error(basis: EigenBasis, bump: LPBump = DEFAULT_BUMP) -> float:
    total = sum(multiplier(basis, j, bump) for j in band_range(basis))
    return float(np.abs(total - 1.0).max())


def dyadic_test_field(basis: EigenBasis, seed: int = 0) -> SpectralField:
    """Random signs times lambda^{-1/2}: roughly equal energy per dyadic band."""
    rng = np.random.default_rng(seed)
    c = rng.choice([-1.0, 1.0], size=basis.n_modes) / basis.sqrt_eigenvalues
    c[basis.eigenvalues >= basis.complete_below] = 0.0
    return SpectralField(basis, c)


def random_field(basis: EigenBasis, seed: int = 0, decay: float = 1.0, kmax: float | None = None) -> SpectralField:
    """Gaussian coefficients with amplitude lambda^{-decay/2}, optionally band-limited."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(basis.n_modes) * basis.eigenvalues ** (-0.5 * decay)
    if kmax is not None:
        c[basis.sqrt_eigenvalues > kmax] = 0.0
    return SpectralField(basis, c)


def _sup(basis, coeffs, deriv=(0, 0)):
    return float(np.abs(basis.values(coeffs, 2, True, deriv)).max())


def _sup_grad(basis, coeffs):
    gx = basis.values(coeffs, 2, True, (1, 0))
    gy = basis.values(coeffs, 2, True, (0, 1))
    return float(np.hypot(gx, gy).max())


def _norm(f: SpectralField, p):
    return f.norm() if p == 2 else _sup(f.basis, f.coeffs)


def _grad_norm(f: SpectralField, p):
    return sobolev_norm(f, 1.0) if p == 2 else _sup_grad(f.basis, f.coeffs)


def _check_p(p):
    if p not in (2, math.inf):
        raise ValueError("p must be 2 or inf")


def bernstein_check(f: SpectralField, alpha: float, p=math.inf, bands=None, slack: float = 10.0,
                    bump: LPBump = DEFAULT_BUMP) -> dict:
    """Ratios ||Lambda^alpha P_j f||_p / (2^{alpha j} ||f||_p) and the gradient variant.

    Bands default to the resolved, nonempty ones.  PASS when max/min of each
    ratio family stays within ``slack``.
    """
    _check_p(p)
    b = f.basis
    fn = _norm(f, p)
    if fn == 0:
        raise ValueError("bernstein_check needs a nonzero field")
    bands = resolved_bands(b) if bands is None else list(bands)
    rows = []
    for j in bands:
        pj = lp_project(f, j, bump)
        if pj.norm() <= 1e-12 * f.norm():
            continue
        g = apply_fractional(pj, alpha)
        rows.append({
            "j": j,
            "ratio": _norm(g, p) / (2.0 ** (alpha * j) * fn),
            "grad_ratio": _grad_norm(g, p) / (2.0 ** ((1 + alpha) * j) * fn),
        })
    r = np.array([x["ratio"] for x in rows])
    gr = np.array([x["grad_ratio"] for x in rows])
    spread = float(r.max() / r.min()) if len(r) else 1.0
    gspread = float(gr.max() / gr.min()) if len(gr) else 1.0
    return {
        "alpha": alpha,
        "p": "inf" if p == math.inf else 2,
        "bands": rows,
        "max_ratio": float(r.max(initial=0.0)),
        "max_grad_ratio": float(gr.max(initial=0.0)),
        "spread": spread,
        "grad_spread": gspread,
        "slack": slack,
        "pass": bool(spread <= slack and gspread <= slack),
    }


def _project_gradient(f: SpectralField):
    """Coefficients of the two gradient components projected onto the sine/Bessel basis."""
    b = f.basis
    if isinstance(b, RectangleBasis):
        _, cx = b.derivative_projection(f.coeffs, 0)
        _, cy = b.derivative_projection(f.coeffs, 1)
        return SpectralField(b, cx), SpectralField(b, cy)
    gx = b.values(f.coeffs, 2, False, (1, 0))
    gy = b.values(f.coeffs, 2, False, (0, 1))
    return SpectralField(b, b.project(gx, 2)), SpectralField(b, b.project(gy, 2))


def commutator_check(f: SpectralField, i: int, j: int, p=math.inf, slack: float = 10.0,
                     bump: LPBump = DEFAULT_BUMP, _grad=None) -> dict:
    """||P_i grad P_j f||_p / (min(2^i, 2^j) ||f||_p)."""
    _check_p(p)
    fn = _norm(f, p)
    if fn == 0:
        return {"i": i, "j": j, "ratio": 0.0, "pass": True}
    gx, gy = _grad if _grad is not None else _project_gradient(lp_project(f, j, bump))
    px, py = lp_project(gx, i, bump), lp_project(gy, i, bump)
    if p == 2:
        num = math.hypot(px.norm(), py.norm())
    else:
        b = f.basis
        num = float(np.hypot(b.values(px.coeffs, 2, True), b.values(py.coeffs, 2, True)).max())
    ratio = num / (min(2.0**i, 2.0**j) * fn)
    return {"i": i, "j": j, "ratio": ratio, "pass": bool(ratio <= slack)}


def commutator_grid(f: SpectralField, p=math.inf, bands=None, slack: float = 10.0,
                    bump: LPBump = DEFAULT_BUMP) -> dict:
    bands = resolved_bands(f.basis) if bands is None else list(bands)
    cells = []
    for j in bands:
        grad = _project_gradient(lp_project(f, j, bump))
        for i in bands:
            cells.append(commutator_check(f, i, j, p, slack, bump, _grad=grad))
    ratios = np.array([c["ratio"] for c in cells])
    return {
        "p": "inf" if p == math.inf else 2,
        "bands": bands,
        "cells": cells,
        "max_ratio": float(ratios.max(initial=0.0)),
        "slack": slack,
        "pass": bool((ratios <= slack).all()),
    }


# ---------------------------------------------------------------------------
# calibration


@dataclass
class Band:
    j: int
    stream: SpectralField
    velocity: GridField
    jacobian: tuple
    lam_quarter: tuple  # Lambda^{-1/4} u_j components on the lift grid
    sup_u: float
    sup_grad_u: float
    sup_lmq_u: float


@dataclass
class CalibratedDecomposition:
    basis: EigenBasis
    bands: dict
    kappa: float
    center_N: int
    j0: int
    reconstruction_error: float
    lift: int
    rescale: dict = field(default_factory=dict)

    @property
    def per_band_stats(self) -> dict:
        return {j: (b.sup_u, b.sup_grad_u, b.sup_lmq_u) for j, b in self.bands.items()}

    def bound_violations(self, kappa: float | None = None, N: int | None = None, rtol: float = 1e-12) -> list:
        """Bands where one of the three calibration inequalities fails."""
        kappa = self.kappa if kappa is None else kappa
        N = self.center_N if N is None else N
        bad = []
        for j, b in self.bands.items():
            lim = kappa * (1 + rtol)
            if b.sup_u > lim:
                bad.append((j, "sup_u"))
            if b.sup_grad_u > 2.0 ** (j - N) * lim:
                bad.append((j, "sup_grad_u"))
            if b.sup_lmq_u > 2.0 ** ((N - j) / 4) * lim:
                bad.append((j, "sup_lam_minus_quarter_u"))
        return bad

    def rows(self):
        for j, b in sorted(self.bands.items()):
            N = self.center_N
            yield (
                j, b.sup_u, b.sup_grad_u, b.sup_lmq_u,
                b.sup_u / self.kappa,
                2.0 ** (N - j) * b.sup_grad_u / self.kappa,
                2.0 ** ((j - N) / 4) * b.sup_lmq_u / self.kappa,
            )


def _lift_target(basis, lift):
    return basis.enlarged(lift) if (lift > 1 and isinstance(basis, RectangleBasis)) else basis


def _lam_quarter(stream: SpectralField, lift: int):
    """Lambda^{-1/4} of u = (-psi_y, psi_x) after L2 projection of each component.

    Rectangles project exactly onto a basis ``lift`` times larger and sample
    on its closed grid; disks project by quadrature on the 2x grid.
    """
    b = stream.basis
    if isinstance(b, RectangleBasis):
        tgt, cy = b.derivative_projection(stream.coeffs, 1, lift)
        _, cx = b.derivative_projection(stream.coeffs, 0, lift)
        w = tgt.eigenvalues ** (-0.125)
        return -tgt.values(cy * w, 1, True), tgt.values(cx * w, 1, True)
    uy = b.values(stream.coeffs, 2, False, (1, 0))
    ux = -b.values(stream.coeffs, 2, False, (0, 1))
    w = b.eigenvalues ** (-0.125)
    return b.values(b.project(ux, 2) * w, 2, True), b.values(b.project(uy, 2) * w, 2, True)


def _band(theta: SpectralField, j: int, bump: LPBump, lift: int) -> Band:
    pj = lp_project(theta, j, bump)
    u = riesz_velocity(pj)
    jac = velocity_jacobian(pj)
    lq = _lam_quarter(u.stream, lift)
    return Band(
        j=j,
        stream=u.stream,
        velocity=u,
        jacobian=jac,
        lam_quarter=lq,
        sup_u=u.sup(),
        sup_grad_u=float(np.sqrt(sum(a**2 for a in jac)).max()),
        sup_lmq_u=float(np.hypot(*lq).max()),
    )


def _kappa(bands, N):
    return max(
        max(b.sup_u, 2.0 ** (N - j) * b.sup_grad_u, 2.0 ** ((j - N) / 4) * b.sup_lmq_u)
        for j, b in bands.items()
    )


def calibrate(theta: SpectralField, bump: LPBump = DEFAULT_BUMP, lift: int = 4,
              rescale_eps: float | None = 0.5) -> CalibratedDecomposition:
    """Velocity bands u_j = perp-grad Lambda^{-1} P_j theta and the smallest kappa at center 0.

    The gradient norm is the pointwise Frobenius norm of the velocity
    Jacobian; all sup norms are taken on the 2x closed grid (the lifted grid
    for Lambda^{-1/4} u_j on rectangles).
    """
    b = theta.basis
    if b.n_modes == 0:
        raise ValueError("empty spectrum")
    bands = {}
    for j in band_range(b):
        if np.any(multiplier(b, j, bump) * theta.coeffs):
            bands[j] = _band(theta, j, bump, lift)
    if not bands:
        j0 = lowest_band(b)
        bands[j0 + 1] = _band(theta, j0 + 1, bump, lift)
    kappa = _kappa(bands, 0)
    u = riesz_velocity(theta)
    sx = sum(bd.velocity.values[0] for bd in bands.values())
    sy = sum(bd.velocity.values[1] for bd in bands.values())
    g = u.grid
    full = g.integrate(u.values[0] ** 2 + u.values[1] ** 2)
    err = g.integrate((sx - u.values[0]) ** 2 + (sy - u.values[1]) ** 2)
    rec = math.sqrt(err / full) if full > 0 else math.sqrt(err)
    dec = CalibratedDecomposition(b, bands, kappa, 0, lowest_band(b), rec, lift)
    if rescale_eps is not None:
        dec.rescale = rescaled_center_check(theta, dec, rescale_eps, bump)
    return dec


def rescaled_center_check(theta: SpectralField, dec: CalibratedDecomposition, eps: float,
                          bump: LPBump = DEFAULT_BUMP) -> dict:
    """Recalibrate theta(eps x) on eps^{-1} Omega with labels shifted by log2(eps).

    theta(eps x) has coefficients theta_k / eps in the rescaled basis, native
    band j' there is the image of band j' - log2(eps) here, and the kappa
    recomputed at center N - log2(eps) should equal the original one.
    """
    shift = math.log2(eps)
    if shift != int(shift):
        raise ValueError("rescale factor must be a power of two")
    shift = int(shift)
    rb = theta.basis.rescaled(eps)
    tb = SpectralField(rb, theta.coeffs / eps)
    bands = {}
    for j in dec.bands:
        bands[j] = _band(tb, j + shift, bump, dec.lift)
    N_new = dec.center_N - shift
    k_new = _kappa(bands, N_new)
    viol = CalibratedDecomposition(rb, bands, dec.kappa, N_new, dec.j0, 0.0, dec.lift).bound_violations(rtol=0.01)
    return {
        "eps": eps,
        "center_shift": N_new - dec.center_N,
        "new_center": N_new,
        "kappa": k_new,
        "kappa_drift": abs(k_new / dec.kappa - 1.0),
        "violations": viol,
    }


def split_low_high(decomp: CalibratedDecomposition, N: int) -> tuple:
    """u_low = sum_{j <= N} u_j, u_high = sum_{j > N} u_j with the geometric-sum bounds.

    With kappa calibrated at center 0 the bounds read
    ||grad u_low|| <= 2 * 2^N kappa and ||Lambda^{-1/4} u_high|| <= 6 * 2^{-N/4} kappa.
    """
    b = decomp.basis
    bands = decomp.bands
    any_band = next(iter(bands.values()))
    g = any_band.velocity.grid
    zero = np.zeros(g.shape)
    lo = [bd for j, bd in bands.items() if j <= N]
    hi = [bd for j, bd in bands.items() if j > N]
    ulx = sum((bd.velocity.values[0] for bd in lo), zero)
    uly = sum((bd.velocity.values[1] for bd in lo), zero)
    uhx = sum((bd.velocity.values[0] for bd in hi), zero)
    uhy = sum((bd.velocity.values[1] for bd in hi), zero)
    jac = [sum((bd.jacobian[k] for bd in lo), zero) for k in range(4)]
    lq_shape = any_band.lam_quarter[0].shape
    lqx = sum((bd.lam_quarter[0] for bd in hi), np.zeros(lq_shape))
    lqy = sum((bd.lam_quarter[1] for bd in hi), np.zeros(lq_shape))
    grad_low = float(np.sqrt(sum(a**2 for a in jac)).max())
    lmq_high = float(np.hypot(lqx, lqy).max())
    k = decomp.kappa
    tail = 2 ** -0.25 / (1 - 2 ** -0.25)
    rep = {
        "N": N,
        "kappa": k,
        "grad_u_low": grad_low,
        "grad_bound": 2.0 * 2.0**N * k,
        "lmq_u_high": lmq_high,
        "lmq_bound": 6.0 * 2.0 ** (-N / 4) * k,
        "geometric_tail_constant": tail,
    }
    rep["pass"] = bool(grad_low <= rep["grad_bound"] * (1 + 1e-12) and lmq_high <= rep["lmq_bound"] * (1 + 1e-12))
    u_low = GridField(b, (ulx, uly), g)
    u_high = GridField(b, (uhx, uhy), g)
    return u_low, u_high, rep
