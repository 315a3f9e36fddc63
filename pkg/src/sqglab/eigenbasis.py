"""Dirichlet eigensystems on rectangles and disks.

A field is a coefficient vector over L2-normalized Dirichlet eigenfunctions,
ordered by eigenvalue.  Rectangles use sine transforms on interior DST-I
nodes; disks use Gauss-Legendre nodes in r and a uniform grid in phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy.special import jv

from . import runtime
from .bessel import bessel_zeros


class BasisMismatchError(ValueError):
    """Raised when a field is used with a basis or grid it does not belong to."""


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle (0, Lx) x (0, Ly) or disk of radius R centred at the origin.

    ``scale_factor`` multiplies every length; ``rescale(eps)`` maps the domain
    to ``eps**-1 * domain``.  The factor is stored as a Fraction so repeated
    rescalings compose exactly.
    """

    shape: str
    Lx: float = 0.0
    Ly: float = 0.0
    R: float = 0.0
    scale_factor: Fraction = Fraction(1)

    def __post_init__(self):
        if self.shape not in ("rectangle", "disk"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        sf = Fraction(self.scale_factor)
        object.__setattr__(self, "scale_factor", sf)
        if sf <= 0:
            raise ValueError("scale_factor must be positive")
        if self.shape == "rectangle" and not (self.Lx > 0 and self.Ly > 0):
            raise ValueError(f"rectangle side lengths must be positive, got {self.Lx}, {self.Ly}")
        if self.shape == "disk" and not self.R > 0:
            raise ValueError(f"disk radius must be positive, got {self.R}")

    @classmethod
    def rectangle(cls, Lx: float = math.pi, Ly: float = math.pi) -> DomainSpec:
        return cls("rectangle", Lx=float(Lx), Ly=float(Ly))

    @classmethod
    def disk(cls, R: float = 1.0) -> DomainSpec:
        return cls("disk", R=float(R))

    def rescale(self, eps: float) -> DomainSpec:
        """The domain {x : eps*x in self}."""
        eps = Fraction(eps)
        if eps <= 0:
            raise ValueError("rescale factor must be positive")
        return replace(self, scale_factor=self.scale_factor / eps)

    @property
    def lengths(self) -> tuple[float, float]:
        s = float(self.scale_factor)
        return self.Lx * s, self.Ly * s

    @property
    def radius(self) -> float:
        return self.R * float(self.scale_factor)

    @property
    def area(self) -> float:
        if self.shape == "rectangle":
            Lx, Ly = self.lengths
            return Lx * Ly
        return math.pi * self.radius**2

    @property
    def diameter(self) -> float:
        if self.shape == "rectangle":
            return math.hypot(*self.lengths)
        return 2.0 * self.radius

    @property
    def inradius(self) -> float:
        if self.shape == "rectangle":
            return 0.5 * min(self.lengths)
        return self.radius

    @property
    def center(self) -> np.ndarray:
        if self.shape == "rectangle":
            return 0.5 * np.array(self.lengths)
        return np.zeros(2)

    def boundary_distance(self, pts) -> np.ndarray:
        """Signed distance to the boundary, positive inside."""
        p = np.asarray(pts, dtype=float)
        if self.shape == "rectangle":
            Lx, Ly = self.lengths
            return np.minimum.reduce([p[..., 0], Lx - p[..., 0], p[..., 1], Ly - p[..., 1]])
        return self.radius - np.hypot(p[..., 0], p[..., 1])

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        return self.boundary_distance(pts) >= -tol

    def clamp(self, pts) -> np.ndarray:
        """Nearest point of the closed domain."""
        p = np.array(pts, dtype=float)
        if self.shape == "rectangle":
            Lx, Ly = self.lengths
            p[..., 0] = np.clip(p[..., 0], 0.0, Lx)
            p[..., 1] = np.clip(p[..., 1], 0.0, Ly)
            return p
        r = np.hypot(p[..., 0], p[..., 1])
        f = np.where(r > self.radius, self.radius / np.maximum(r, 1e-300), 1.0)
        return p * f[..., None]


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes (Cartesian arrays ``x``, ``y``) and quadrature weights.

    Closed rectangle grids carry trapezoid weights on the boundary; the disk
    boundary ring has zero weight.  ``spacing`` is the largest node gap, used
    for resolution checks.
    """

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    boundary: np.ndarray
    spacing: float
    key: tuple

    @property
    def shape(self):
        return self.x.shape

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * values))


_SIGN = (1.0, 1.0, -1.0, -1.0)


def _sort_modes(lam, *keys):
    lam_key = np.round(lam / lam.max(), 12)
    return np.lexsort(tuple(reversed(keys)) + (lam_key,))


class EigenBasis:
    """Common interface; see RectangleBasis and DiskBasis."""

    domain: DomainSpec
    modes: tuple
    eigenvalues: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def index(self, mode) -> int:
        return self._index[tuple(mode)]

    def unit(self, mode) -> np.ndarray:
        c = np.zeros(self.n_modes)
        c[self.index(mode)] = 1.0
        return c

    def _check(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (self.n_modes,):
            raise BasisMismatchError(f"expected {self.n_modes} coefficients, got shape {c.shape}")
        return c

    def same_as(self, other) -> bool:
        return other is self or (
            type(other) is type(self) and other.domain == self.domain and other.truncation == self.truncation
        )

    def evaluate(self, coeffs, points, deriv=(0, 0)) -> np.ndarray:
        """Field (or a Cartesian derivative) at arbitrary points of shape (..., 2)."""
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        out = self.evaluation_matrix(flat, deriv) @ self._check(coeffs)
        return out.reshape(pts.shape[:-1])

    def cfl_spacing(self) -> float:
        raise NotImplementedError

    @property
    def complete_below(self) -> float:
        """Every Dirichlet eigenvalue below this level is in the basis."""
        raise NotImplementedError


class RectangleBasis(EigenBasis):
    """Sine modes e_mn = 2/sqrt(Lx Ly) sin(m pi x/Lx) sin(n pi y/Ly)."""

    def __init__(self, domain: DomainSpec, Mx: int, My: int | None = None):
        My = Mx if My is None else My
        if domain.shape != "rectangle":
            raise ValueError("RectangleBasis needs a rectangle domain")
        if Mx < 1 or My < 1:
            raise ValueError(f"truncation must be >= 1 in each direction, got ({Mx}, {My})")
        self.domain = domain
        self.Mx, self.My = int(Mx), int(My)
        self.truncation = (self.Mx, self.My)
        Lx, Ly = domain.lengths
        self.Lx, self.Ly = Lx, Ly
        m, n = np.meshgrid(np.arange(1, Mx + 1), np.arange(1, My + 1), indexing="ij")
        lam = np.pi**2 * (m**2 / Lx**2 + n**2 / Ly**2)
        order = _sort_modes(lam.ravel(), m.ravel(), n.ravel())
        self._order = order
        self.eigenvalues = lam.ravel()[order]
        self.mode_m = m.ravel()[order]
        self.mode_n = n.ravel()[order]
        self.modes = tuple(zip(self.mode_m.tolist(), self.mode_n.tolist()))
        self._index = {md: i for i, md in enumerate(self.modes)}
        self._grids = {}

    def __repr__(self):
        return f"RectangleBasis(Lx={self.Lx:g}, Ly={self.Ly:g}, M=({self.Mx}, {self.My}))"

    def rescaled(self, eps: float) -> RectangleBasis:
        return RectangleBasis(self.domain.rescale(eps), self.Mx, self.My)

    def enlarged(self, factor: int) -> RectangleBasis:
        return RectangleBasis(self.domain, factor * self.Mx, factor * self.My)

    def mode_labels(self):
        return self.mode_m, self.mode_n

    def to_array(self, coeffs) -> np.ndarray:
        a = np.zeros(self.Mx * self.My)
        a[self._order] = self._check(coeffs)
        return a.reshape(self.Mx, self.My)

    def from_array(self, arr) -> np.ndarray:
        return np.asarray(arr).reshape(-1)[self._order].copy()

    def grid_size(self, refine: int = 1) -> tuple[int, int]:
        return refine * (self.Mx + 1) - 1, refine * (self.My + 1) - 1

    def grid(self, refine: int = 1, closed: bool = False) -> Grid:
        key = ("rect", refine, closed)
        if key not in self._grids:
            Nx, Ny = self.grid_size(refine)
            hx, hy = self.Lx / (Nx + 1), self.Ly / (Ny + 1)
            if closed:
                xs = np.arange(Nx + 2) * hx
                ys = np.arange(Ny + 2) * hy
            else:
                xs = np.arange(1, Nx + 1) * hx
                ys = np.arange(1, Ny + 1) * hy
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            W = np.full(X.shape, hx * hy)
            bnd = np.zeros(X.shape, dtype=bool)
            if closed:
                # trapezoid weights: exact for the cosine products in gradients
                bnd[[0, -1], :] = True
                bnd[:, [0, -1]] = True
                W[[0, -1], :] *= 0.5
                W[:, [0, -1]] *= 0.5
            self._grids[key] = Grid(X, Y, W, bnd, max(hx, hy), key)
        return self._grids[key]

    @property
    def complete_below(self) -> float:
        kx, ky = np.pi / self.Lx, np.pi / self.Ly
        return float(min(((self.Mx + 1) * kx) ** 2 + ky**2, kx**2 + ((self.My + 1) * ky) ** 2))

    def cfl_spacing(self) -> float:
        Nx, Ny = self.grid_size(1)
        return min(self.Lx / (Nx + 1), self.Ly / (Ny + 1))

    def _axis_synth(self, A, axis, L, M, N, d, closed):
        k = np.arange(1, M + 1) * np.pi / L
        shape = [1, 1]
        shape[axis] = M
        A = A * (_SIGN[d % 4] * math.sqrt(2.0 / L) * k.reshape(shape) ** d)
        pad = [(0, 0), (0, 0)]
        if d % 2 == 0:
            pad[axis] = (0, N - M)
            out = 0.5 * sfft.dst(np.pad(A, pad), type=1, axis=axis, workers=runtime.workers)
            if closed:
                zpad = [(0, 0), (0, 0)]
                zpad[axis] = (1, 1)
                out = np.pad(out, zpad)
            return out
        pad[axis] = (1, N + 1 - M)
        out = 0.5 * sfft.dct(np.pad(A, pad), type=1, axis=axis, workers=runtime.workers)
        if closed:
            return out
        sl = [slice(None), slice(None)]
        sl[axis] = slice(1, N + 1)
        return out[tuple(sl)]

    def values(self, coeffs, refine: int = 1, closed: bool = False, deriv=(0, 0)) -> np.ndarray:
        """Field or Cartesian derivative on the (refine, closed) grid."""
        Nx, Ny = self.grid_size(refine)
        if Nx < self.Mx:
            raise ValueError("refine must be >= 1")
        A = self.to_array(coeffs)
        A = self._axis_synth(A, 0, self.Lx, self.Mx, Nx, deriv[0], closed)
        return self._axis_synth(A, 1, self.Ly, self.My, Ny, deriv[1], closed)

    def project(self, values, refine: int = 1, closed: bool = False) -> np.ndarray:
        """Quadrature projection onto the basis; exact for sine series of degree <= grid size."""
        Nx, Ny = self.grid_size(refine)
        v = np.asarray(values, dtype=float)
        if closed:
            v = v[1:-1, 1:-1]
        if v.shape != (Nx, Ny):
            raise BasisMismatchError(f"grid values of shape {v.shape} do not match grid ({Nx}, {Ny})")
        hx, hy = self.Lx / (Nx + 1), self.Ly / (Ny + 1)
        A = 0.25 * sfft.dstn(v, type=1, workers=runtime.workers)[: self.Mx, : self.My]
        A *= hx * hy * math.sqrt(4.0 / (self.Lx * self.Ly))
        return self.from_array(A)

    def _axis_matrix(self, x, L, M, d):
        k = np.arange(1, M + 1) * np.pi / L
        arg = np.outer(x, k)
        trig = np.sin(arg) if d % 2 == 0 else np.cos(arg)
        return _SIGN[d % 4] * math.sqrt(2.0 / L) * trig * k**d

    def evaluation_matrix(self, points, deriv=(0, 0)) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        Sx = self._axis_matrix(p[:, 0], self.Lx, self.Mx, deriv[0])
        Sy = self._axis_matrix(p[:, 1], self.Ly, self.My, deriv[1])
        return Sx[:, self.mode_m - 1] * Sy[:, self.mode_n - 1]

    def evaluate(self, coeffs, points, deriv=(0, 0)) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 2)
        Sx = self._axis_matrix(flat[:, 0], self.Lx, self.Mx, deriv[0])
        Sy = self._axis_matrix(flat[:, 1], self.Ly, self.My, deriv[1])
        out = np.einsum("pm,mn,pn->p", Sx, self.to_array(coeffs), Sy)
        return out.reshape(pts.shape[:-1])

    def derivative_projection(self, coeffs, axis: int, factor: int = 1):
        """Exact L2 projection of d f/d x_axis onto a sine basis ``factor`` times larger.

        Uses <cos(m pi x/L), sin(p pi x/L)> = (L/pi) p (1 - (-1)^{p+m}) / (p^2 - m^2).
        Returns (target basis, coefficients).
        """
        target = self if factor == 1 else self.enlarged(factor)
        L, M, P = (self.Lx, self.Mx, target.Mx) if axis == 0 else (self.Ly, self.My, target.My)
        m = np.arange(1, M + 1)
        p = np.arange(1, P + 1)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            D = np.where(p == m, 0.0, (2.0 / np.pi) * p * (1.0 - (-1.0) ** (p + m)) / (p**2 - m**2))
        D = D * (m * np.pi / L)
        A = self.to_array(coeffs)
        if axis == 0:
            B = np.zeros((target.Mx, target.My))
            B[:, : self.My] = D @ A
        else:
            B = np.zeros((target.Mx, target.My))
            B[: self.Mx, :] = A @ D.T
        return target, target.from_array(B)


@lru_cache(maxsize=None)
def _zeros_cached(m: int, count: int) -> tuple:
    return tuple(bessel_zeros(m, count))


class DiskBasis(EigenBasis):
    """Modes N_mk J_m(j_mk r/R) {cos, sin}(m phi); mode id (m, k, c), c=0 cos, c=1 sin.

    Radial quadrature: Gauss-Legendre with ``nr`` nodes (weight r dr).  The
    default node count 2*(M_rad + M_ang) + 16 keeps orthonormality at the
    1e-12 level; plain 2x mode counts are not enough for Bessel products.
    """

    def __init__(self, domain: DomainSpec, M_ang: int, M_rad: int, nr: int | None = None, nphi: int | None = None):
        if domain.shape != "disk":
            raise ValueError("DiskBasis needs a disk domain")
        if M_ang < 0 or M_rad < 1:
            raise ValueError(f"need M_ang >= 0 and M_rad >= 1, got ({M_ang}, {M_rad})")
        self.domain = domain
        self.M_ang, self.M_rad = int(M_ang), int(M_rad)
        self.truncation = (self.M_ang, self.M_rad)
        self.R = domain.radius
        self.nr = nr or 2 * (self.M_rad + self.M_ang) + 16
        self.nphi = nphi or 4 * self.M_ang + 4
        mm, kk, cc, zz = [], [], [], []
        for m in range(self.M_ang + 1):
            z = _zeros_cached(m, self.M_rad)
            for c in (0, 1) if m > 0 else (0,):
                for k in range(self.M_rad):
                    mm.append(m)
                    kk.append(k + 1)
                    cc.append(c)
                    zz.append(z[k])
        mm, kk, cc, zz = map(np.asarray, (mm, kk, cc, zz))
        kappa = zz / self.R
        lam = kappa**2
        order = _sort_modes(lam, mm, kk, cc)
        self.mode_m, self.mode_k, self.mode_c = mm[order], kk[order], cc[order]
        self.kappa = kappa[order]
        self.eigenvalues = lam[order]
        self.modes = tuple(zip(self.mode_m.tolist(), self.mode_k.tolist(), self.mode_c.tolist()))
        self._index = {md: i for i, md in enumerate(self.modes)}
        self._grids = {}
        self._mats = {}
        # normalization by the base quadrature
        r, w = self._radial_nodes(1)
        ang = np.where(self.mode_m == 0, 2.0 * np.pi, np.pi)
        jr = jv(self.mode_m[None, :], np.outer(r, self.kappa))
        self.norm = 1.0 / np.sqrt(ang * (w[:, None] * jr**2).sum(axis=0))

    def __repr__(self):
        return f"DiskBasis(R={self.R:g}, M_ang={self.M_ang}, M_rad={self.M_rad})"

    def rescaled(self, eps: float) -> DiskBasis:
        return DiskBasis(self.domain.rescale(eps), self.M_ang, self.M_rad, self.nr, self.nphi)

    def enlarged(self, factor: int) -> DiskBasis:
        return DiskBasis(self.domain, factor * self.M_ang, factor * self.M_rad)

    def mode_labels(self):
        return self.mode_m, self.mode_k

    def _radial_nodes(self, refine):
        xi, wi = np.polynomial.legendre.leggauss(refine * self.nr)
        r = 0.5 * self.R * (xi + 1.0)
        return r, 0.5 * self.R * wi * r

    def grid(self, refine: int = 1, closed: bool = False) -> Grid:
        key = ("disk", refine, closed)
        if key not in self._grids:
            r, w = self._radial_nodes(refine)
            nphi = refine * self.nphi
            phi = 2.0 * np.pi * np.arange(nphi) / nphi
            if closed:
                r = np.append(r, self.R)
                w = np.append(w, 0.0)
            Rg, P = np.meshgrid(r, phi, indexing="ij")
            W = np.outer(w, np.full(nphi, 2.0 * np.pi / nphi))
            bnd = np.zeros(Rg.shape, dtype=bool)
            if closed:
                bnd[-1, :] = True
            gaps = np.diff(np.concatenate([[0.0], r, [self.R]]))
            spacing = max(gaps.max(), self.R * 2.0 * np.pi / nphi)
            self._grids[key] = Grid(Rg * np.cos(P), Rg * np.sin(P), W, bnd, float(spacing), key)
        return self._grids[key]

    @property
    def complete_below(self) -> float:
        nxt = [_zeros_cached(m, self.M_rad + 1)[-1] for m in range(self.M_ang + 1)]
        nxt.append(_zeros_cached(self.M_ang + 1, 1)[0])
        return float((min(nxt) / self.R) ** 2)

    def cfl_spacing(self) -> float:
        return float(np.pi / np.sqrt(self.eigenvalues[-1]))

    def _polar(self, refine, closed):
        r, _ = self._radial_nodes(refine)
        if closed:
            r = np.append(r, self.R)
        nphi = refine * self.nphi
        return r, 2.0 * np.pi * np.arange(nphi) / nphi

    def _terms(self, coeffs, deriv):
        # complex ladder terms: field = Re sum c J_n(kappa r) e^{i n phi}
        a = self._check(coeffs) * self.norm
        n = self.mode_m.copy()
        kap = self.kappa.copy()
        idx = np.arange(self.n_modes)
        c = np.where(self.mode_c == 0, a + 0j, -1j * a)
        for axis, count in ((0, deriv[0]), (1, deriv[1])):
            for _ in range(count):
                h = 0.5 * c * kap
                if axis == 0:
                    n = np.concatenate([n - 1, n + 1])
                    c = np.concatenate([h, -h])
                else:
                    n = np.concatenate([n + 1, n - 1])
                    c = np.concatenate([1j * h, 1j * h])
                kap = np.concatenate([kap, kap])
                idx = np.concatenate([idx, idx])
        return n, kap, c, idx

    def _radial_matrix(self, refine, closed, m):
        key = (refine, closed, m)
        if key not in self._mats:
            r, _ = self._polar(refine, closed)
            sel = np.nonzero((self.mode_m == m) & (self.mode_c == 0))[0]
            sel = sel[np.argsort(self.mode_k[sel])]
            self._mats[key] = (jv(m, np.outer(r, self.kappa[sel])) * self.norm[sel], sel)
        return self._mats[key]

    def _order_matrix(self, refine, closed, o):
        # J_o(kappa_k r) for every mode k, reused by derivative synthesis
        key = ("J", refine, closed, o)
        if key not in self._mats:
            r, _ = self._polar(refine, closed)
            self._mats[key] = jv(o, np.outer(r, self.kappa))
        return self._mats[key]

    def _mode_indices(self, m):
        cos = np.nonzero((self.mode_m == m) & (self.mode_c == 0))[0]
        cos = cos[np.argsort(self.mode_k[cos])]
        sin = np.nonzero((self.mode_m == m) & (self.mode_c == 1))[0]
        sin = sin[np.argsort(self.mode_k[sin])]
        return cos, sin

    def values(self, coeffs, refine: int = 1, closed: bool = False, deriv=(0, 0)) -> np.ndarray:
        r, phi = self._polar(refine, closed)
        a = self._check(coeffs)
        if deriv == (0, 0):
            Gc = np.zeros((len(r), self.M_ang + 1))
            Gs = np.zeros_like(Gc)
            for m in range(self.M_ang + 1):
                Rm, _ = self._radial_matrix(refine, closed, m)
                cos, sin = self._mode_indices(m)
                Gc[:, m] = Rm @ a[cos]
                if m > 0:
                    Gs[:, m] = Rm @ a[sin]
            ms = np.arange(self.M_ang + 1)
            return Gc @ np.cos(np.outer(ms, phi)) + Gs @ np.sin(np.outer(ms, phi))
        n, kap, c, idx = self._terms(a, deriv)
        orders = np.unique(n)
        G = np.zeros((len(r), len(orders)), dtype=complex)
        for i, o in enumerate(orders):
            sel = n == o
            J = self._order_matrix(refine, closed, abs(int(o)))
            sign = -1.0 if (o < 0 and o % 2) else 1.0
            G[:, i] = sign * (J[:, idx[sel]] @ c[sel])
        return (G @ np.exp(1j * np.outer(orders, phi))).real

    def project(self, values, refine: int = 1, closed: bool = False) -> np.ndarray:
        r, phi = self._polar(refine, closed)
        v = np.asarray(values, dtype=float)
        if v.shape != (len(r), len(phi)):
            raise BasisMismatchError(f"grid values of shape {v.shape} do not match grid {(len(r), len(phi))}")
        _, w = self._radial_nodes(refine)
        if closed:
            w = np.append(w, 0.0)
        dphi = 2.0 * np.pi / len(phi)
        ms = np.arange(self.M_ang + 1)
        Ac = (v @ np.cos(np.outer(ms, phi)).T) * dphi
        As = (v @ np.sin(np.outer(ms, phi)).T) * dphi
        out = np.zeros(self.n_modes)
        for m in range(self.M_ang + 1):
            Rm, _ = self._radial_matrix(refine, closed, m)
            cos, sin = self._mode_indices(m)
            out[cos] = Rm.T @ (w * Ac[:, m])
            if m > 0:
                out[sin] = Rm.T @ (w * As[:, m])
        return out

    def evaluation_matrix(self, points, deriv=(0, 0)) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        r = np.hypot(p[:, 0], p[:, 1])
        phi = np.arctan2(p[:, 1], p[:, 0])
        n_modes = self.n_modes
        n, kap, c, _ = self._terms(np.ones(n_modes), deriv)
        owner = np.tile(np.arange(n_modes), len(n) // n_modes)
        vals = (c[None, :] * jv(n[None, :], np.outer(r, kap)) * np.exp(1j * np.outer(phi, n))).real
        out = np.zeros((len(r), n_modes))
        np.add.at(out.T, owner, vals.T)
        return out


def build_basis(domain: DomainSpec, truncation) -> EigenBasis:
    """Eigenbasis with ``truncation`` = M, (Mx, My) for rectangles or (M_ang, M_rad) for disks."""
    t = (truncation, truncation) if np.isscalar(truncation) else tuple(truncation)
    if len(t) != 2 or any(int(v) != v for v in t):
        raise ValueError(f"truncation must be one or two integers, got {truncation!r}")
    if domain.shape == "rectangle":
        return RectangleBasis(domain, int(t[0]), int(t[1]))
    if t[1] < 1 or t[0] < 1:
        raise ValueError(f"truncation must be >= 1 in each direction, got {t}")
    return DiskBasis(domain, int(t[0]), int(t[1]))


@dataclass(frozen=True, eq=False)
class SpectralField:
    basis: EigenBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.n_modes,):
            raise BasisMismatchError(f"coefficient vector of shape {c.shape} for {self.basis.n_modes} modes")
        object.__setattr__(self, "coeffs", c)

    def _other(self, other):
        if isinstance(other, SpectralField):
            if not self.basis.same_as(other.basis):
                raise BasisMismatchError("fields live on different bases")
            return other.coeffs
        return other

    def __add__(self, other):
        return SpectralField(self.basis, self.coeffs + self._other(other))

    def __sub__(self, other):
        return SpectralField(self.basis, self.coeffs - self._other(other))

    def __mul__(self, a: float):
        return SpectralField(self.basis, self.coeffs * a)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.basis, -self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def dot(self, other: SpectralField) -> float:
        return float(self.coeffs @ self._other(other))

    @classmethod
    def zeros(cls, basis):
        return cls(basis, np.zeros(basis.n_modes))

    @classmethod
    def mode(cls, basis, mode, amplitude=1.0):
        return cls(basis, amplitude * basis.unit(mode))


@dataclass(frozen=True, eq=False)
class GridField:
    """Scalar values or a pair of component arrays on one of the basis grids."""

    basis: EigenBasis
    values: object
    grid: Grid
    stream: SpectralField | None = None

    @property
    def is_vector(self) -> bool:
        return isinstance(self.values, tuple)

    def magnitude(self) -> np.ndarray:
        if self.is_vector:
            return np.hypot(*self.values)
        return np.abs(self.values)

    def sup(self) -> float:
        return float(self.magnitude().max(initial=0.0))

    def integrate_square(self) -> float:
        return self.grid.integrate(self.magnitude() ** 2)


def synthesize(field: SpectralField, refine: int = 1, closed: bool = False) -> GridField:
    b = field.basis
    return GridField(b, b.values(field.coeffs, refine, closed), b.grid(refine, closed))


def analyze(field: GridField) -> SpectralField:
    if field.is_vector:
        raise BasisMismatchError("analyze expects a scalar grid field")
    b = field.basis
    kind, refine, closed = field.grid.key
    if b.grid(refine, closed) is not field.grid:
        raise BasisMismatchError("grid does not belong to this basis")
    return SpectralField(b, b.project(field.values, refine, closed))


def apply_fractional(f: SpectralField, s: float) -> SpectralField:
    """Multiply coefficient k by lambda_k**(s/2)."""
    if s == 0:
        return f
    return SpectralField(f.basis, f.coeffs * f.basis.eigenvalues ** (0.5 * s))


def sobolev_norm(f: SpectralField, s: float) -> float:
    return float(np.sqrt(np.sum(f.basis.eigenvalues**s * f.coeffs**2)))


def gradient(f: SpectralField, refine: int = 2, closed: bool = True) -> GridField:
    """Term-by-term gradient on the oversampled closed grid by default."""
    b = f.basis
    gx = b.values(f.coeffs, refine, closed, (1, 0))
    gy = b.values(f.coeffs, refine, closed, (0, 1))
    return GridField(b, (gx, gy), b.grid(refine, closed))


def stream_function(theta: SpectralField) -> SpectralField:
    return apply_fractional(theta, -1.0)


def riesz_velocity(theta: SpectralField, refine: int = 2, closed: bool = True) -> GridField:
    """u = perp-gradient of Lambda^{-1} theta = (-d_y psi, d_x psi)."""
    psi = stream_function(theta)
    b = theta.basis
    ux = -b.values(psi.coeffs, refine, closed, (0, 1))
    uy = b.values(psi.coeffs, refine, closed, (1, 0))
    return GridField(b, (ux, uy), b.grid(refine, closed), stream=psi)


def velocity_divergence(u: GridField) -> np.ndarray:
    """Centered finite-difference divergence of a velocity on a closed rectangle grid.

    Interior nodes only.  The spectral divergence -psi_yx + psi_xy vanishes
    identically, so this is the meaningful discrete check.
    """
    g = u.grid
    if g.key[0] != "rect" or not g.key[2]:
        raise ValueError("finite-difference divergence needs a closed rectangle grid")
    hx = g.x[1, 0] - g.x[0, 0]
    hy = g.y[0, 1] - g.y[0, 0]
    ux, uy = u.values
    return (ux[2:, 1:-1] - ux[:-2, 1:-1]) / (2 * hx) + (uy[1:-1, 2:] - uy[1:-1, :-2]) / (2 * hy)


def velocity_jacobian(theta: SpectralField, refine: int = 2, closed: bool = True):
    """Entries (du_x/dx, du_x/dy, du_y/dx, du_y/dy) on the grid."""
    psi = stream_function(theta).coeffs
    b = theta.basis
    pxx = b.values(psi, refine, closed, (2, 0))
    pxy = b.values(psi, refine, closed, (1, 1))
    pyy = b.values(psi, refine, closed, (0, 2))
    return -pxy, -pyy, pxx, pxy


def extension_embedding_check(f: SpectralField, s: float, tol_proxy: float = 0.05, oversample: int = 8) -> dict:
    """Compare the torus proxy of ||(-Delta)^{s/2} E f||^2 with ||Lambda^s f||^2.

    E is zero extension.  Each side of the torus is the smallest integer
    multiple of the rectangle side that is at least 4*max(Lx, Ly), so grid
    nodes stay aligned with the rectangle and the s = 0 case is exact.
    """
    b = f.basis
    if b.domain.shape != "rectangle":
        raise NotImplementedError("extension check is only available on rectangles")
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    rhs = sobolev_norm(f, s) ** 2
    if rhs == 0.0:
        return {"s": s, "lhs": 0.0, "rhs": 0.0, "ratio": 0.0, "tol_proxy": tol_proxy, "pass": True}
    Lmax = max(b.Lx, b.Ly)
    kx = math.ceil(4 * Lmax / b.Lx - 1e-12)
    ky = math.ceil(4 * Lmax / b.Ly - 1e-12)
    Nx = oversample * (b.Mx + 1) - 1
    Ny = oversample * (b.My + 1) - 1
    vals = b.values(f.coeffs, oversample, closed=True)
    nx, ny = kx * (Nx + 1), ky * (Ny + 1)
    big = np.zeros((nx, ny))
    big[: Nx + 2, : Ny + 2] = vals
    Tx, Ty = kx * b.Lx, ky * b.Ly
    F = sfft.fft2(big, workers=runtime.workers) * (Tx / nx) * (Ty / ny)
    qx = 2 * np.pi * sfft.fftfreq(nx, d=Tx / nx)
    qy = 2 * np.pi * sfft.fftfreq(ny, d=Ty / ny)
    q2 = qx[:, None] ** 2 + qy[None, :] ** 2
    with np.errstate(divide="ignore"):
        mult = np.where(q2 > 0, q2**s, 1.0 if s == 0 else 0.0)
    lhs = float(np.sum(mult * np.abs(F) ** 2) / (Tx * Ty))
    ratio = lhs / rhs
    return {
        "s": s,
        "lhs": lhs,
        "rhs": rhs,
        "ratio": ratio,
        "tol_proxy": tol_proxy,
        "torus": [Tx, Ty],
        "pass": bool(ratio <= 1.0 + tol_proxy),
    }
