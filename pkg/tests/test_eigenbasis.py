import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sqglab.bessel import bessel_zeros
from sqglab.eigenbasis import (
    BasisMismatchError, DiskBasis, DomainSpec, GridField, RectangleBasis, SpectralField, analyze,
    apply_fractional, build_basis, extension_embedding_check, gradient, riesz_velocity, sobolev_norm,
    synthesize, velocity_divergence,
)


def _j0_series(x, terms=60):
    # independent power series for J_0
    s, term = 0.0, 1.0
    for k in range(terms):
        if k:
            term *= -(x * x / 4) / (k * k)
        s += term
    return s


def _bisect(f, a, b, n=200):
    fa = f(a)
    for _ in range(n):
        m = 0.5 * (a + b)
        if (f(m) > 0) == (fa > 0):
            a, fa = m, f(m)
        else:
            b = m
    return 0.5 * (a + b)


# -- construction


def test_rectangle_eigenvalues_match_sine_formula():
    b = RectangleBasis(DomainSpec.rectangle(), 4, 4)
    assert b.eigenvalues[b.index((1, 1))] == pytest.approx(2.0, rel=1e-15)
    assert b.eigenvalues[b.index((2, 3))] == pytest.approx(13.0, rel=1e-15)
    assert np.all(np.diff(b.eigenvalues) >= 0)


def test_ties_broken_lexicographically():
    b = RectangleBasis(DomainSpec.rectangle(), 4, 4)
    i, j = b.index((1, 2)), b.index((2, 1))
    assert b.eigenvalues[i] == b.eigenvalues[j] and i < j


def test_disk_lowest_eigenvalue_against_series_root():
    b = DiskBasis(DomainSpec.disk(1.0), 2, 3)
    j01 = _bisect(_j0_series, 2.0, 3.0)
    assert b.eigenvalues[0] == pytest.approx(j01**2, rel=1e-12)
    assert b.eigenvalues[0] == pytest.approx(5.7832, abs=1e-4)


def test_bessel_zeros_interlace():
    z0, z1 = bessel_zeros(0, 6), bessel_zeros(1, 6)
    assert np.all(z0 < z1) and np.all(z1[:-1] < z0[1:])


@pytest.mark.parametrize("bad", [(0, 4), (4, 0)])
def test_rejects_zero_truncation(bad):
    with pytest.raises(ValueError):
        build_basis(DomainSpec.rectangle(), bad)


@pytest.mark.parametrize("kw", [dict(shape="rectangle", Lx=-1.0, Ly=1.0), dict(shape="disk", R=0.0),
                                dict(shape="triangle")])
def test_rejects_bad_geometry(kw):
    with pytest.raises(ValueError):
        DomainSpec(**kw)


# -- transforms


def _orthonormality_defect(b, refine=1):
    g = b.grid(refine)
    E = np.stack([b.values(b.unit(m), refine) for m in b.modes])
    G = np.einsum("ixy,jxy,xy->ij", E, E, g.weights)
    return np.abs(G - np.eye(b.n_modes)).max()


def test_orthonormality_rectangle(rect):
    assert _orthonormality_defect(rect) <= 1e-10


def test_orthonormality_disk(disk):
    assert _orthonormality_defect(disk) <= 1e-8


@pytest.mark.parametrize("basis", ["rect", "disk"])
def test_unit_mode_round_trip(basis, request):
    b = request.getfixturevalue(basis)
    k = b.modes[3]
    g = synthesize(SpectralField.mode(b, k))
    assert np.allclose(analyze(g).coeffs, b.unit(k), atol=1e-10)


def test_zero_field_round_trip(rect):
    assert not analyze(synthesize(SpectralField.zeros(rect))).coeffs.any()


@given(st.integers(0, 2**31 - 1))
def test_round_trip_random_rectangle(seed):
    b = RectangleBasis(DomainSpec.rectangle(1.7, 2.2), 10, 7)
    c = np.random.default_rng(seed).standard_normal(b.n_modes)
    back = analyze(synthesize(SpectralField(b, c))).coeffs
    assert np.abs(back - c).max() <= 1e-10 * np.abs(c).max()


def test_fast_transform_matches_dense_matrix(rect):
    # dense evaluation matrix on the grid points as oracle
    c = np.random.default_rng(1).standard_normal(rect.n_modes)
    g = rect.grid()
    pts = np.stack([g.x.ravel(), g.y.ravel()], axis=-1)
    dense = rect.evaluation_matrix(pts) @ c
    assert np.allclose(rect.values(c).ravel(), dense, atol=1e-12)


def test_disk_round_trip_random(disk):
    c = np.random.default_rng(2).standard_normal(disk.n_modes)
    back = analyze(synthesize(SpectralField(disk, c))).coeffs
    assert np.abs(back - c).max() <= 1e-8


def test_analyze_rejects_foreign_grid(rect, square16):
    g = synthesize(SpectralField.zeros(square16))
    with pytest.raises(BasisMismatchError):
        analyze(GridField(rect, g.values, g.grid))


def test_field_arithmetic_rejects_mixed_bases(rect, square16):
    with pytest.raises(BasisMismatchError):
        SpectralField.zeros(rect) + SpectralField.zeros(square16)


def test_transform_runtime_at_64():
    b = RectangleBasis(DomainSpec.rectangle(), 64, 64)
    c = np.random.default_rng(0).standard_normal(b.n_modes)
    b.values(c)  # warm caches
    t = time.perf_counter()
    v = b.values(c)
    b.project(v)
    assert time.perf_counter() - t < 1.0


# -- spectral calculus


def test_apply_fractional_identities(rect):
    f = SpectralField(rect, np.random.default_rng(3).standard_normal(rect.n_modes))
    k = rect.modes[5]
    e = SpectralField.mode(rect, k)
    assert apply_fractional(e, 2.0).coeffs[rect.index(k)] == pytest.approx(rect.eigenvalues[rect.index(k)], rel=1e-15)
    assert apply_fractional(f, 0.0) is f
    back = apply_fractional(apply_fractional(f, -1.0), 1.0)
    assert np.allclose(back.coeffs, f.coeffs, rtol=1e-14, atol=0)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_apply_fractional_group_action(a, b_):
    b = RectangleBasis(DomainSpec.rectangle(), 6, 6)
    f = SpectralField(b, np.linspace(-1, 1, b.n_modes))
    lhs = apply_fractional(apply_fractional(f, a), b_).coeffs
    rhs = apply_fractional(f, a + b_).coeffs
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_sobolev_norm_examples(rect):
    k = rect.modes[4]
    assert sobolev_norm(SpectralField.mode(rect, k), 1.0) == pytest.approx(math.sqrt(rect.eigenvalues[4]))
    assert sobolev_norm(SpectralField.zeros(rect), 0.5) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_gradient_identity(square16, seed):
    f = SpectralField(square16, np.random.default_rng(seed).standard_normal(square16.n_modes)
                      / square16.eigenvalues)
    g = gradient(f)
    lhs = sobolev_norm(f, 1.0) ** 2
    assert abs(g.integrate_square() - lhs) / lhs <= 1e-8


def test_gradient_identity_disk(disk):
    f = SpectralField(disk, np.random.default_rng(4).standard_normal(disk.n_modes) / disk.eigenvalues)
    lhs = sobolev_norm(f, 1.0) ** 2
    assert abs(gradient(f).integrate_square() - lhs) / lhs <= 1e-8


def test_gradient_of_e11():
    b = RectangleBasis(DomainSpec.rectangle(), 4, 4)
    g = gradient(SpectralField.mode(b, (1, 1)))
    x, y = g.grid.x, g.grid.y
    assert np.allclose(g.values[0], 2 / np.pi * np.cos(x) * np.sin(y), atol=1e-13)
    assert np.allclose(g.values[1], 2 / np.pi * np.sin(x) * np.cos(y), atol=1e-13)


def test_gradient_finite_difference_rate():
    # centered differences at two spacings; error ratio ~ 4
    b = RectangleBasis(DomainSpec.rectangle(), 6, 6)
    f = SpectralField(b, np.random.default_rng(5).standard_normal(b.n_modes))
    p = np.array([[1.1, 0.7]])
    exact = b.evaluate(f.coeffs, p, (1, 0))[0]
    errs = []
    for h in (1e-2, 5e-3):
        fd = (b.evaluate(f.coeffs, p + [h, 0])[0] - b.evaluate(f.coeffs, p - [h, 0])[0]) / (2 * h)
        errs.append(abs(fd - exact))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_riesz_velocity_of_e11():
    b = RectangleBasis(DomainSpec.rectangle(), 4, 4)
    u = riesz_velocity(SpectralField.mode(b, (1, 1)))
    x, y = u.grid.x, u.grid.y
    c = 2 ** -0.5 * 2 / np.pi
    assert np.allclose(u.values[0], -c * np.sin(x) * np.cos(y), atol=1e-13)
    assert np.allclose(u.values[1], c * np.cos(x) * np.sin(y), atol=1e-13)


def test_riesz_velocity_zero(rect):
    assert riesz_velocity(SpectralField.zeros(rect)).sup() == 0.0


def test_riesz_divergence_free(square32):
    f = SpectralField(square32, np.random.default_rng(6).standard_normal(square32.n_modes)
                      / square32.eigenvalues)
    u = riesz_velocity(f, refine=8)
    assert np.abs(velocity_divergence(u)).max() <= 1e-2 * u.sup()
    # spectral divergence is exact
    from sqglab.eigenbasis import velocity_jacobian
    a, _, _, d = velocity_jacobian(f)
    assert np.abs(a + d).max() <= 1e-12 * max(np.abs(a).max(), 1.0)


def test_riesz_velocity_tangent_at_boundary(rect):
    f = SpectralField(rect, np.random.default_rng(7).standard_normal(rect.n_modes))
    u = riesz_velocity(f, closed=True)
    ux, uy = u.values
    assert np.abs(ux[[0, -1], :]).max() <= 1e-12 and np.abs(uy[:, [0, -1]]).max() <= 1e-12


def test_rescaling_covariance():
    b = RectangleBasis(DomainSpec.rectangle(), 5, 5)
    eps = 0.5
    big = b.rescaled(eps)
    assert np.allclose(big.eigenvalues, eps**2 * b.eigenvalues, rtol=1e-14)


def test_extension_embedding_examples():
    b = RectangleBasis(DomainSpec.rectangle(), 8, 8)
    assert extension_embedding_check(SpectralField.zeros(b), 0.5)["ratio"] == 0.0
    e = SpectralField.mode(b, (1, 1))
    assert extension_embedding_check(e, 0.0)["ratio"] == pytest.approx(1.0, abs=1e-12)
    r = extension_embedding_check(e, 0.5)
    assert r["pass"] and r["ratio"] <= 1.05


def test_extension_rejects_disk(disk):
    with pytest.raises(NotImplementedError):
        extension_embedding_check(SpectralField.zeros(disk), 0.5)
