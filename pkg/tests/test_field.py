import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

import oracles
from inls.exponents import DEFOCUSING, PhysParams
from inls.field import (
    PHI_BLEND,
    RadialField,
    RadialGrid,
    WeightConstraintError,
    functionals,
    h1_norm,
    kinetic,
    make_cutoff_chi,
    make_weight_phi,
    mass,
    potential,
    radial_sup_ratio,
    read_snapshot,
    singular_factor,
    virial_moment,
    write_snapshot,
)


def gaussian(grid, chirp=0.0):
    return RadialField.from_function(grid, lambda r: np.exp(-r**2 / 2) * np.exp(0.5j * chirp * r**2))


class TestGrid:
    def test_nodes(self):
        g = RadialGrid(8, 4.0, 2)
        assert g.h == 0.5
        np.testing.assert_allclose(g.r, [0.25, 0.75, 1.25, 1.75, 2.25, 2.75, 3.25, 3.75])
        assert g.r[0] > 0 and g.J * g.h == g.r_max

    def test_sphere_measure(self):
        assert RadialGrid(8, 1.0, 2).sphere_measure == pytest.approx(2 * math.pi)
        assert RadialGrid(8, 1.0, 3).sphere_measure == pytest.approx(4 * math.pi)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            RadialGrid(2, 1.0)
        with pytest.raises(ValueError):
            RadialGrid(16, 0.0)


class TestField:
    def test_rejects_nonfinite(self):
        g = RadialGrid(8, 1.0)
        with pytest.raises(ValueError):
            RadialField(g, np.full(8, np.nan))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            RadialField(RadialGrid(8, 1.0), np.zeros(7))

    def test_grid_mismatch(self):
        a = gaussian(RadialGrid(64, 8.0))
        b = gaussian(RadialGrid(128, 8.0))
        with pytest.raises(ValueError, match="grid mismatch"):
            a - b


class TestFunctionals:
    @pytest.fixture
    def grid(self):
        return RadialGrid(4096, 20.0, 2)

    # midpoint quadrature: relative errors of order h^2 = 2.4e-5 here

    def test_gaussian_closed_forms(self, grid):
        u = gaussian(grid)
        params = PhysParams(2, 0.5, 2.0, DEFOCUSING)
        f = functionals(u, params)
        assert f.mass == pytest.approx(oracles.gaussian_mass(2), rel=grid.h**2)
        assert f.kinetic == pytest.approx(oracles.gaussian_kinetic(2), rel=grid.h**2)
        pot = oracles.gaussian_potential(2, 0.5, 2.0)
        assert pot == pytest.approx(2 * math.pi * 2 ** (-7 / 4) * math.gamma(0.75), rel=1e-14)
        assert f.potential == pytest.approx(pot, rel=grid.h**2)
        assert f.energy == pytest.approx(math.pi / 2 + pot / 4, rel=grid.h**2)

    def test_three_dimensional_closed_forms(self):
        g = RadialGrid(4096, 20.0, 3)
        u = gaussian(g)
        f = functionals(u, PhysParams(3, 0.5, 1.5))
        assert f.mass == pytest.approx(oracles.gaussian_mass(3), rel=g.h**2)
        assert f.kinetic == pytest.approx(oracles.gaussian_kinetic(3), rel=g.h**2)
        assert f.potential == pytest.approx(oracles.gaussian_potential(3, 0.5, 1.5), rel=g.h**2)

    def test_second_order_quadrature(self):
        params = PhysParams(2, 0.5, 2.0)
        errs = []
        for J in (256, 512, 1024):
            u = gaussian(RadialGrid(J, 16.0, 2))
            errs.append([abs(mass(u) - math.pi), abs(kinetic(u) - math.pi),
                         abs(potential(u, params) - oracles.gaussian_potential(2, 0.5, 2.0))])
        errs = np.array(errs)
        ratios = errs[:-1] / errs[1:]
        assert np.all((ratios > 3.5) & (ratios < 4.5)), ratios

    def test_singular_factor_matches_power_away_from_origin(self):
        g = RadialGrid(1000, 10.0, 2)
        v = singular_factor(g, 0.5)
        far = g.r > 1.0
        np.testing.assert_allclose(v[far], g.r[far] ** -0.5, rtol=1e-4)
        assert not v.flags.writeable

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            functionals(gaussian(RadialGrid(64, 8.0, 3)), PhysParams(2, 0.5, 2.0))

    @given(c=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
    def test_mass_homogeneity(self, c):
        u = gaussian(RadialGrid(128, 8.0))
        assert mass(u * c) == pytest.approx(abs(c) ** 2 * mass(u), rel=1e-12)
        assert kinetic(u * c) == pytest.approx(abs(c) ** 2 * kinetic(u), rel=1e-12)


class TestVirialWeight:
    @pytest.fixture
    def grid(self):
        return RadialGrid(4096, 60.0, 2)

    def test_inner_region(self, grid):
        w = make_weight_phi(10.0, grid)
        inner = grid.r <= 10.0
        np.testing.assert_allclose(w.phi[inner], grid.r[inner] ** 2)
        np.testing.assert_allclose(w.d2phi[inner], 2.0)
        np.testing.assert_allclose(w.lap[inner], 4.0)
        np.testing.assert_allclose(w.bilap[inner], 0.0, atol=1e-12)

    def test_outer_region(self, grid):
        w = make_weight_phi(10.0, grid)
        outer = grid.r >= 20.0
        np.testing.assert_allclose(w.phi[outer], 200.0)
        for k in range(1, 5):
            assert np.all(w.d[k][outer] == 0)
        assert np.all(w.lap[outer] == 0) and np.all(w.bilap[outer] == 0)

    def test_blend_junctions_are_c3(self):
        for k, (at1, at2) in enumerate([(1, 2), (2, 0), (2, 0), (0, 0)]):
            assert PHI_BLEND.deriv(k)(1.0) == pytest.approx(at1, abs=1e-9)
            assert PHI_BLEND.deriv(k)(2.0) == pytest.approx(at2, abs=1e-9)

    @pytest.mark.parametrize("R", [2.0, 5.0, 10.0, 20.0])
    @pytest.mark.parametrize("N", [2, 3])
    def test_constraints(self, R, N):
        grid = RadialGrid(4096, 60.0, N)
        w = make_weight_phi(R, grid)
        assert w.d2phi.max() <= 2 + 1e-12
        assert w.dphi.min() >= -1e-12
        assert (2 * N - w.lap).min() >= -1e-9
        # sup |phi_R^{(k)}| scales as R^{2-k}
        for k in range(5):
            assert np.abs(w.d[k]).max() <= w.sup_scaled[k] * R ** (2 - k) * (1 + 1e-9)

    def test_scaling_of_sup_bounds(self, grid):
        a, b = make_weight_phi(5.0, grid), make_weight_phi(10.0, grid)
        for k in range(5):
            top_a = np.abs(a.d[k]).max() / 5.0 ** (2 - k)
            top_b = np.abs(b.d[k]).max() / 10.0 ** (2 - k)
            assert top_a == pytest.approx(top_b, rel=0.05)

    def test_tampered_blend_rejected(self, grid):
        bump = Polynomial([-1.0, 1.0]) ** 4 * Polynomial([-2.0, 1.0]) ** 4
        bad = PHI_BLEND + 500.0 * bump
        with pytest.raises(WeightConstraintError):
            make_weight_phi(10.0, grid, blend=bad)

    def test_unresolved_R(self, grid):
        with pytest.raises(ValueError):
            make_weight_phi(2 * grid.h, grid)


class TestCutoff:
    def test_values(self):
        g = RadialGrid(2000, 40.0, 2)
        chi = make_cutoff_chi(8.0, g)
        assert np.all(chi.values[g.r <= 4.0] == 1.0)
        assert np.all(chi.values[g.r >= 8.0] == 0.0)
        assert chi.values.min() >= 0 and chi.values.max() <= 1
        assert np.all(np.diff(chi.values) <= 1e-15)

    def test_laplacian_scaling(self):
        g = RadialGrid(4000, 80.0, 2)
        a, b = make_cutoff_chi(5.0, g), make_cutoff_chi(10.0, g)
        assert a.lap_sup * 25 == pytest.approx(b.lap_sup * 100)
        assert np.abs(a.lap).max() <= a.lap_sup * (1 + 1e-9)


class TestVirialMoment:
    def test_real_field_is_zero(self):
        g = RadialGrid(1024, 20.0)
        assert virial_moment(gaussian(g), make_weight_phi(15.0, g)) == 0.0

    def test_chirped_gaussian(self):
        g = RadialGrid(8192, 20.0)
        m = virial_moment(gaussian(g, chirp=1.0), make_weight_phi(15.0, g))
        assert m == pytest.approx(oracles.chirped_gaussian_moment(2), rel=1e-5)
        assert m == pytest.approx(4 * math.pi, rel=1e-5)

    @given(theta=st.floats(0, 2 * math.pi))
    @settings(max_examples=20)
    def test_phase_invariance(self, theta):
        g = RadialGrid(512, 16.0)
        w = make_weight_phi(10.0, g)
        u = gaussian(g, chirp=0.7)
        assert virial_moment(u * np.exp(1j * theta), w) == pytest.approx(virial_moment(u, w), rel=1e-12)

    def test_affine_in_chirp(self):
        # exact in the continuum; the centered difference adds an O(h^2) defect
        defects = []
        for J in (1024, 2048, 4096):
            g = RadialGrid(J, 20.0)
            w = make_weight_phi(15.0, g)
            m = [virial_moment(gaussian(g, c), w) for c in (0.0, 0.5, 1.0)]
            assert m[0] == 0.0
            defects.append(abs(m[1] - 0.5 * (m[0] + m[2])) / abs(m[2]))
        assert defects[-1] < 1e-5
        assert 3.5 < defects[0] / defects[1] < 4.5 and 3.5 < defects[1] / defects[2] < 4.5


class TestRadialSupRatio:
    def test_gaussian(self):
        g = RadialGrid(2048, 20.0)
        ratio = radial_sup_ratio(gaussian(g))
        # sup r^{1/2} e^{-r^2/2} = (2e)^{-1/4} at r = 1/sqrt 2
        assert ratio == pytest.approx((2 * math.e) ** -0.25 / math.sqrt(2 * math.pi), rel=1e-4)

    def test_dilations(self):
        g = RadialGrid(4096, 40.0)
        base = radial_sup_ratio(gaussian(g))
        for lam in np.linspace(0.5, 2.0, 7):
            u = RadialField.from_function(g, lambda r: np.exp(-(lam * r) ** 2 / 2))
            assert 0 < radial_sup_ratio(u) < 2 * base

    def test_homogeneous(self):
        g = RadialGrid(256, 10.0)
        u = gaussian(g)
        assert radial_sup_ratio(10 * u) == pytest.approx(radial_sup_ratio(u))

    def test_zero_field(self):
        with pytest.raises(ValueError):
            radial_sup_ratio(RadialField(RadialGrid(16, 1.0), np.zeros(16)))


def test_snapshot_round_trip(tmp_path):
    g = RadialGrid(64, 8.0, 3)
    u = gaussian(g, chirp=0.3)
    params = PhysParams(3, 0.5, 1.5, DEFOCUSING)
    write_snapshot(tmp_path / "s.csv", u, params, 2.5)
    v, meta = read_snapshot(tmp_path / "s.csv")
    assert v.grid == g
    np.testing.assert_array_equal(v.values, u.values)
    assert meta == {"N": 3, "b": 0.5, "alpha": 1.5, "sign": DEFOCUSING, "t": 2.5, "J": 64, "h": 0.125}
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[8] == "r,re,im"
    assert h1_norm(v) == h1_norm(u)
