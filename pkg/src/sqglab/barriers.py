"""Radial barrier profiles and space-time barriers built from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _outer(r):
    r = np.asarray(r, dtype=float)
    return 2.0 + np.maximum(r**0.25 - 2**0.25, 0.0)


def _outer_d1(r):
    r = np.asarray(r, dtype=float)
    return np.where(r >= 2.0, 0.25 * np.maximum(r, 2.0) ** -0.75, 0.0)


def _outer_d2(r):
    r = np.asarray(r, dtype=float)
    return np.where(r >= 2.0, -0.1875 * np.maximum(r, 2.0) ** -1.75, 0.0)


def _quintic(a, b, left, right):
    """Coefficients of p on [a, b] matching (value, slope, curvature) at both ends."""
    rows, rhs = [], []
    for x0, (v, d, dd) in ((a, left), (b, right)):
        rows.append([x0**i for i in range(6)])
        rows.append([i * x0 ** (i - 1) if i else 0.0 for i in range(6)])
        rows.append([i * (i - 1) * x0 ** (i - 2) if i > 1 else 0.0 for i in range(6)])
        rhs += [v, d, dd]
    return np.linalg.solve(np.array(rows), np.array(rhs))


@dataclass
class BarrierFn:
    """psi = 0 on |x| <= r_in, 2 + (|x|^{1/4} - 2^{1/4})_+ beyond r_out, C^2 quintic between.

    The outer profile has a kink at |x| = 2, so with r_out = 2 the one-sided
    slope and curvature from the right are matched.
    """

    r_in: float = 1.0
    r_out: float = 2.0
    grad_norm: float = field(init=False)
    hess_norm: float = field(init=False)
    holder_quarter: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.r_in < self.r_out:
            raise ValueError("need 0 < r_in < r_out")
        b = self.r_out
        # in the local variable r - r_in, which keeps the monomial coefficients tame
        self._c = _quintic(0.0, b - self.r_in, (0.0, 0.0, 0.0),
                           (float(_outer(b)), float(_outer_d1(b)), float(_outer_d2(b))))
        self.grad_norm, self.hess_norm, self.holder_quarter = self._measure()

    def __call__(self, r):
        return self.profile(r)

    def _poly(self, r, d):
        c = np.polynomial.polynomial.polyder(self._c, d) if d else self._c
        return np.polynomial.polynomial.polyval(r - self.r_in, c)

    def _piece(self, r, d, outer):
        r = np.asarray(r, dtype=float)
        mid = (r > self.r_in) & (r < self.r_out)
        out = np.where(r >= self.r_out, outer(r), 0.0)
        return np.where(mid, self._poly(r, d), out)

    def profile(self, r):
        return self._piece(r, 0, _outer)

    def d1(self, r):
        return self._piece(r, 1, _outer_d1)

    def d2(self, r):
        return self._piece(r, 2, _outer_d2)

    def value(self, x, y):
        return self.profile(np.hypot(x, y))

    def gradient(self, x, y):
        r = np.hypot(x, y)
        g = self.d1(r) / np.where(r > 0, r, 1.0)
        return g * x, g * y

    def _measure(self, n: int = 4001):
        r = np.linspace(0.0, 4 * self.r_out, n)
        d1 = np.abs(self.d1(r))
        # Hessian eigenvalues of a radial function: psi'' and psi'/r
        with np.errstate(divide="ignore", invalid="ignore"):
            hr = np.where(r > 0, d1 / r, 0.0)
        hess = max(np.abs(self.d2(r)).max(), hr.max())
        return float(d1.max()), float(hess), self.measure_holder()

    def measure_holder(self, rmax: float = 1e4, n: int = 1500) -> float:
        """[psi]_{1/4} of the radial profile; equals the planar seminorm for radial functions."""
        r = np.unique(np.concatenate([
            np.linspace(0.0, 2 * self.r_out, n),
            np.geomspace(2 * self.r_out, rmax, n // 3),
        ]))
        v = self.profile(r)
        best = 0.0
        for i in range(len(r) - 1):
            dv = np.abs(v[i + 1:] - v[i])
            dr = (r[i + 1:] - r[i]) ** 0.25
            best = max(best, float((dv / dr).max()))
        return best


class ConstantBarrier:
    """Psi(t, x) = c."""

    def __init__(self, c: float):
        if c < 0:
            raise ValueError("barrier must be nonnegative")
        self.c = float(c)
        self.k = 0.0

    def value(self, t, x, y):
        return np.full(np.shape(x), self.c)

    def gradient(self, t, x, y):
        z = np.zeros(np.shape(x))
        return z, z

    def time_derivative(self, t, x, y):
        return np.zeros(np.shape(x))


class MovingBarrier:
    """Psi(t, x) = A psi((x - Gamma(t)) / rho) for Gamma(t) = x0 + v t.

    ``k`` bounds both ||grad Psi||_inf and the 1/4-Holder seminorm.
    """

    def __init__(self, profile: BarrierFn, x0, velocity=(0.0, 0.0), amplitude: float = 1.0, scale: float = 1.0):
        if amplitude < 0 or scale <= 0:
            raise ValueError("need amplitude >= 0 and scale > 0")
        self.profile = profile
        self.x0 = np.asarray(x0, dtype=float)
        self.v = np.asarray(velocity, dtype=float)
        self.A = float(amplitude)
        self.rho = float(scale)
        self.k = max(self.A / self.rho * profile.grad_norm, self.A * self.rho**-0.25 * profile.holder_quarter)

    def center(self, t):
        return self.x0 + self.v * t

    def value(self, t, x, y):
        c = self.center(t)
        return self.A * self.profile.value((x - c[0]) / self.rho, (y - c[1]) / self.rho)

    def gradient(self, t, x, y):
        c = self.center(t)
        gx, gy = self.profile.gradient((x - c[0]) / self.rho, (y - c[1]) / self.rho)
        f = self.A / self.rho
        return f * gx, f * gy

    def time_derivative(self, t, x, y):
        gx, gy = self.gradient(t, x, y)
        return -(gx * self.v[0] + gy * self.v[1])


def measured_bounds(barrier, times, x, y, pairs: int = 4000, seed: int = 0) -> tuple:
    """Grid sup of |grad Psi| and a sampled 1/4-Holder seminorm over the given times."""
    rng = np.random.default_rng(seed)
    g = 0.0
    h = 0.0
    xf, yf = x.ravel(), y.ravel()
    for t in times:
        gx, gy = barrier.gradient(t, x, y)
        g = max(g, float(np.hypot(gx, gy).max()))
        v = barrier.value(t, x, y).ravel()
        i = rng.integers(0, len(v), pairs)
        j = rng.integers(0, len(v), pairs)
        d = np.hypot(xf[i] - xf[j], yf[i] - yf[j])
        ok = d > 0
        if ok.any():
            h = max(h, float((np.abs(v[i] - v[j])[ok] / d[ok] ** 0.25).max()))
    return g, h
