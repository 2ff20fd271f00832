import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from illposed.errors import ParameterError, PreconditionError
from illposed.spectral import (
    Field2D,
    biot_savart,
    frac_laplacian,
    inv_laplacian,
    laplacian,
    load_field,
    make_grid,
    save_field,
    spectral_derivative,
)

from conftest import random_bandlimited


def maxerr(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)).max()


class TestGrid:
    def test_unit_frequency_step(self):
        g = make_grid(np.pi, 16)
        assert g.h == pytest.approx(2 * np.pi / 16)
        assert g.dxi == pytest.approx(1.0)

    def test_spacing(self):
        g = make_grid(8, 256)
        assert g.h == 1 / 16
        assert g.h * g.N == 2 * g.L

    @pytest.mark.parametrize("L,N", [(8, 100), (8, 8), (0, 64), (-1, 64)])
    def test_invalid(self, L, N):
        with pytest.raises(ParameterError):
            make_grid(L, N)

    def test_nodes_and_lattice(self):
        g = make_grid(2.0, 32)
        assert g.x[0] == -2.0
        np.testing.assert_allclose(np.diff(g.x), g.h)
        assert sorted(g.mode_index) == list(range(-16, 16))
        # reflection symmetric node set
        assert np.array_equal(-g.x[1:], g.x[1:][::-1])


class TestField:
    def test_roundtrip(self, grid_pi, rng):
        v = rng.standard_normal((64, 64))
        f = Field2D(grid_pi, values=v)
        back = Field2D(grid_pi, coeffs=f.coeffs).values
        assert maxerr(back, v) / np.abs(v).max() < 1e-12

    def test_hermitian(self, grid_pi, rng):
        f = Field2D(grid_pi, values=rng.standard_normal((64, 64)))
        c = f.coeffs
        flipped = np.roll(np.flip(c), 1, axis=(0, 1))
        assert maxerr(c, np.conj(flipped)) < 1e-10

    def test_series_coefficients_single_mode(self):
        g = make_grid(np.pi, 16)
        f = Field2D.from_function(g, lambda x1, x2: np.cos(3 * x1 + 2 * x2))
        c = f.series_coefficients()
        assert c[3, 2] == pytest.approx(0.5)
        assert c[-3, -2] == pytest.approx(0.5)
        back = Field2D.from_series(g, c)
        assert maxerr(back.values, f.values) < 1e-13

    def test_immutable(self, grid_pi):
        f = Field2D.zeros(grid_pi)
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0

    def test_parseval(self, grid_pi, rng):
        f = random_bandlimited(grid_pi, 10, rng)
        g = grid_pi
        phys = np.sum(f.values**2) * g.h**2
        spec = np.sum(np.abs(f.series_coefficients()) ** 2) * g.area
        assert phys == pytest.approx(spec, rel=1e-10)


class TestDerivative:
    def test_sine(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda x1, x2: np.sin(x1))
        d = spectral_derivative(f, 1)
        assert maxerr(d.values, np.cos(grid_pi.mesh[0])) < 1e-10

    def test_constant(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda x1, x2: 3.0 + 0 * x1)
        assert maxerr(spectral_derivative(f, 2).values, 0) < 1e-12

    def test_mixed_mode(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda a, b: np.sin(3 * a) * np.cos(2 * b))
        x1, x2 = grid_pi.mesh
        assert maxerr(spectral_derivative(f, 2).values, -2 * np.sin(3 * x1) * np.sin(2 * x2)) < 1e-10

    def test_bad_axis(self, grid_pi):
        with pytest.raises(ParameterError):
            spectral_derivative(Field2D.zeros(grid_pi), 3)


def quadrupole_like(grid):
    def fn(x1, x2):
        out = np.zeros_like(x1)
        for e1 in (-1, 1):
            for e2 in (-1, 1):
                out += e1 * e2 * np.exp(-8 * ((x1 - e1) ** 2 + (x2 - e2) ** 2))
        return out

    return Field2D.from_function(grid, fn)


class TestInvLaplacian:
    def test_eigenfunction(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda a, b: np.sin(a))
        assert maxerr(inv_laplacian(f).values, -np.sin(grid_pi.mesh[0])) < 1e-12

    def test_zero(self, grid_pi):
        assert maxerr(inv_laplacian(Field2D.zeros(grid_pi)).values, 0) == 0

    def test_roundtrip_quadrupole(self):
        g = make_grid(4.0, 128)
        f = quadrupole_like(g)
        back = laplacian(inv_laplacian(f))
        assert maxerr(back.values, f.values) / np.abs(f.values).max() < 1e-8

    def test_mean_rejected(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda a, b: 1.0 + np.sin(a))
        with pytest.raises(PreconditionError):
            inv_laplacian(f)


class TestFracLaplacian:
    def test_identity(self, grid_pi, rng):
        f = random_bandlimited(grid_pi, 8, rng)
        assert maxerr(frac_laplacian(f, 0).values, f.values) < 1e-13

    def test_eigenfunction(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda a, b: np.sin(2 * a))
        assert maxerr(frac_laplacian(f, 1).values, 2 * np.sin(2 * grid_pi.mesh[0])) < 1e-12

    def test_s2_matches_second_derivatives(self, grid_pi, rng):
        f = random_bandlimited(grid_pi, 12, rng)
        lap = spectral_derivative(spectral_derivative(f, 1), 1) + spectral_derivative(
            spectral_derivative(f, 2), 2
        )
        fl = frac_laplacian(f, 2)
        assert maxerr(fl.values, -lap.values) / np.abs(lap.values).max() < 1e-9

    def test_negative_s(self, grid_pi):
        with pytest.raises(ParameterError):
            frac_laplacian(Field2D.zeros(grid_pi), -0.5)

    @settings(max_examples=15, deadline=None)
    @given(
        s1=st.floats(0.0, 2.5),
        s2=st.floats(0.0, 2.5),
        seed=st.integers(0, 2**31 - 1),
    )
    def test_semigroup(self, s1, s2, seed):
        g = make_grid(np.pi, 32)
        f = random_bandlimited(g, 10, np.random.default_rng(seed))
        a = frac_laplacian(frac_laplacian(f, s1), s2).values
        b = frac_laplacian(f, s1 + s2).values
        assert maxerr(a, b) <= 1e-9 * max(np.abs(b).max(), 1e-300) + 1e-300


class TestBiotSavart:
    def test_single_mode(self, grid_pi):
        f = Field2D.from_function(grid_pi, lambda a, b: np.sin(a))
        u = biot_savart(f)
        assert maxerr(u.u1.values, 0) < 1e-12
        assert maxerr(u.u2.values, -np.cos(grid_pi.mesh[0])) < 1e-12

    def test_zero(self, grid_pi):
        u = biot_savart(Field2D.zeros(grid_pi))
        assert u.sup_norm() == 0

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), kmax=st.integers(1, 20))
    def test_divergence_free_and_curl(self, seed, kmax):
        g = make_grid(np.pi, 64)
        w = random_bandlimited(g, kmax, np.random.default_rng(seed))
        u = biot_savart(w)
        scale = u.sup_norm() * kmax
        assert np.abs(u.divergence().values).max() <= 1e-10 * scale
        assert maxerr(u.curl().values, w.values) <= 1e-8 * np.abs(w.values).max()


class TestSerialization:
    def test_roundtrip(self, tmp_path, grid_pi, rng):
        f = Field2D(grid_pi, values=rng.standard_normal((64, 64)))
        p = tmp_path / "f.ilf2"
        save_field(f, p)
        raw = p.read_bytes()
        assert raw[:4] == b"ILF2"
        assert len(raw) == 4 + 4 + 8 + 4 + 8 * 64 * 64
        g = load_field(p)
        assert g.grid == grid_pi
        assert np.array_equal(g.values, f.values)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad"
        p.write_bytes(b"XXXX" + bytes(100))
        with pytest.raises(ValueError):
            load_field(p)
