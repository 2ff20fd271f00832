import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from illposed.errors import DomainExitError, ParameterError
from illposed.euler2d import DiagnosticSpec, SolverConfig, solve
from illposed.funcspace import smooth_step
from illposed.initdata import Omega0Params, omega0, omega0_sources
from illposed.lagrangian import (
    FunctionSampler,
    GridVelocitySampler,
    QuadratureSampler,
    advect,
    field_c1_sup,
    flow_distance,
    max_jacobian,
    seed_grid,
)
from illposed.spectral import Field2D, Velocity2D, biot_savart, make_grid, spectral_derivative

from conftest import random_bandlimited


def hyperbolic_velocity(grid):
    """u = (-d2, d1) psi with psi = x1 x2 chi(|x|): exactly (-x1, x2) for |x| < 1."""
    x1, x2 = grid.mesh
    r = np.hypot(x1, x2)
    chi = 1 - smooth_step(r - 1.0)  # 1 on [0, 1], 0 beyond 2
    psi = Field2D(grid, values=x1 * x2 * chi)
    return Velocity2D(-spectral_derivative(psi, 2), spectral_derivative(psi, 1))


def zero_sampler():
    return FunctionSampler(lambda t, p: (np.zeros_like(p), np.zeros((len(p), 2, 2))))


def swirl(t, p):
    """Time-dependent incompressible field for order checks."""
    x, y = p[:, 0], p[:, 1]
    c = 1 + 0.5 * np.sin(t)
    u = np.stack([c * np.sin(y), np.cos(x) * c], 1)
    G = np.zeros((len(p), 2, 2))
    G[:, 0, 1] = c * np.cos(y)
    G[:, 1, 0] = -np.sin(x) * c
    return u, G


class TestBasics:
    def test_zero_flow(self):
        seeds = np.array([[0.1, 0.2], [-0.3, 0.5]])
        fl = advect(zero_sampler(), seeds, 0.1, 1.0)
        assert np.array_equal(fl.positions[-1], seeds)
        assert np.array_equal(fl.jacobians[-1], np.broadcast_to(np.eye(2), (2, 2, 2)))
        m = max_jacobian(fl)
        assert m.value == 1.0

    def test_initial_state_exact(self):
        seeds = seed_grid(0.5, 4)
        fl = advect(FunctionSampler(swirl), seeds, 0.1, 0.3)
        assert np.array_equal(fl.positions[0], seeds)
        assert np.array_equal(fl.jacobians[0], np.broadcast_to(np.eye(2), (len(seeds), 2, 2)))
        assert fl.times[-1] == 0.3

    def test_seed_grid(self):
        s = seed_grid(1.0, 64, axes=8)
        assert s.shape == (64 * 64 + 16 + 1, 2)

    def test_store_every(self):
        fl = advect(FunctionSampler(swirl), seed_grid(0.5, 2), 0.1, 1.0, store_every=3)
        assert np.allclose(fl.times, [0, 0.3, 0.6, 0.9, 1.0])

    def test_csv(self, tmp_path):
        fl = advect(FunctionSampler(swirl), seed_grid(0.5, 2), 0.1, 0.2)
        fl.to_csv(tmp_path / "f.csv")
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert lines[0] == "t,seed,eta1,eta2,J11,J12,J21,J22"
        assert len(lines) == 1 + 3 * 5


class TestGridSampler:
    def test_interpolation_accuracy(self):
        g = make_grid(np.pi, 64)
        w = Field2D.from_function(g, lambda a, b: np.sin(a) * np.sin(b))
        S = GridVelocitySampler.steady(biot_savart(w))
        p = np.random.default_rng(0).uniform(-2.5, 2.5, (50, 2))
        u, G = S(0.0, p)
        # psi = -sin x1 sin x2 / 2
        ex = 0.5 * np.stack([np.sin(p[:, 0]) * np.cos(p[:, 1]), -np.cos(p[:, 0]) * np.sin(p[:, 1])], 1)
        assert np.abs(u - ex).max() < 1e-5
        assert np.abs(G[:, 0, 0] + G[:, 1, 1]).max() < 1e-14

    def test_time_linear(self):
        g = make_grid(np.pi, 32)
        w = random_bandlimited(g, 4, np.random.default_rng(1))
        v = biot_savart(w)
        S = GridVelocitySampler([0.0, 1.0], [v * 0.0, v])
        p = np.array([[0.3, -0.7]])
        assert np.allclose(S(0.25, p)[0], 0.25 * S(1.0, p)[0], rtol=0, atol=1e-15)

    def test_domain_exit(self):
        g = make_grid(1.0, 64)
        S = GridVelocitySampler.steady(Velocity2D(Field2D.zeros(g), Field2D.zeros(g)))
        with pytest.raises(DomainExitError):
            S(0.0, np.array([[1.0 - 3 * g.h, 0.0]]))
        # a uniform drift carries a seed into the seam margin
        one = Field2D(g, values=np.ones((64, 64)))
        drift = GridVelocitySampler.steady(Velocity2D(one, Field2D.zeros(g)))
        with pytest.raises(DomainExitError):
            advect(drift, [[0.5, 0.0]], 0.05, 1.0)

    def test_dt_exceeds_spacing(self):
        g = make_grid(np.pi, 32)
        v = biot_savart(random_bandlimited(g, 4, np.random.default_rng(1)))
        S = GridVelocitySampler([0.0, 0.1, 0.2], [v, v, v])
        with pytest.raises(ParameterError):
            advect(S, [[0.0, 0.0]], 0.15, 0.2)
        with pytest.raises(ParameterError):
            advect(S, [[0.0, 0.0]], 0.1, 0.5)


@pytest.fixture(scope="module")
def flow():
    g = make_grid(np.pi, 128)
    S = GridVelocitySampler.steady(hyperbolic_velocity(g))
    seeds = np.array([[0.3, 0.05], [-0.2, 0.1], [0.0, 0.0], [0.1, -0.2]])
    return advect(S, seeds, 0.01, 1.0, store_every=10)


class TestHyperbolic:
    def test_jacobian_diag(self, flow):
        for i, t in enumerate(flow.times):
            ex = np.diag([np.exp(-t), np.exp(t)])
            assert np.abs(flow.jacobians[i] - ex).max() <= 0.01 * np.exp(t)

    def test_max_is_e(self, flow):
        m = max_jacobian(flow)
        assert m.value == pytest.approx(np.e, rel=0.01)
        assert m.entry == (1, 1) and m.time == 1.0

    def test_positions(self, flow):
        ex = flow.seeds * np.array([np.exp(-1), np.e])
        assert np.abs(flow.positions[-1] - ex).max() < 1e-4

    def test_volume(self, flow):
        assert flow.volume_defect() < 1e-6


class TestOrder:
    def test_rk4_order(self):
        seeds = seed_grid(1.0, 5)
        T = 2.0
        ref = advect(FunctionSampler(swirl), seeds, T / 1024, T).positions[-1]
        ns = np.array([8, 16, 32, 64])
        errs = [np.abs(advect(FunctionSampler(swirl), seeds, T / n, T).positions[-1] - ref).max() for n in ns]
        slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
        assert slope == pytest.approx(4.0, abs=0.3)

    def test_volume_swirl(self):
        fl = advect(FunctionSampler(swirl), seed_grid(1.0, 8), 0.01, 2.0)
        assert fl.volume_defect() < 1e-6


@pytest.fixture(scope="module")
def gronwall():
    g = make_grid(np.pi, 64)
    u = biot_savart(random_bandlimited(g, 4, np.random.default_rng(3)))
    v = biot_savart(random_bandlimited(g, 6, np.random.default_rng(4)))
    seeds = seed_grid(1.0, 8)
    base = advect(GridVelocitySampler.steady(u), seeds, 0.02, 1.0, store_every=5)
    out = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        vv = v * eps
        fl = advect(GridVelocitySampler.steady(u + vv), seeds, 0.02, 1.0, store_every=5)
        out.append((flow_distance(base, fl), field_c1_sup(vv)))
    return out


class TestDistance:
    def test_self_zero_and_symmetric(self):
        seeds = seed_grid(0.5, 4)
        a = advect(FunctionSampler(swirl), seeds, 0.05, 0.5)
        b = advect(zero_sampler(), seeds, 0.05, 0.5)
        assert flow_distance(a, a) == 0
        assert abs(flow_distance(a, b) - flow_distance(b, a)) < 1e-12

    def test_mismatch(self):
        a = advect(zero_sampler(), seed_grid(0.5, 4), 0.05, 0.5)
        b = advect(zero_sampler(), seed_grid(0.4, 4), 0.05, 0.5)
        c = advect(zero_sampler(), seed_grid(0.5, 4), 0.05, 0.4)
        with pytest.raises(ParameterError):
            flow_distance(a, b)
        with pytest.raises(ParameterError):
            flow_distance(a, c)

    def test_gronwall_constant_stable(self, gronwall):
        C = [d / n for d, n in gronwall]
        assert max(C) / min(C) < 1.2

    def test_linear_in_perturbation(self, gronwall):
        for (d1, _), (d2, _) in zip(gronwall, gronwall[1:]):
            assert d1 / d2 == pytest.approx(2.0, rel=0.2)


@pytest.fixture(scope="module")
def sampler():
    P = Omega0Params(2, 1, 2, 2.25)
    return QuadratureSampler(*omega0_sources(P, n_local=24))


class TestOmega0Flow:
    def test_origin_stagnation_hyperbolic(self, sampler):
        u, G = sampler(0.0, np.zeros((1, 2)))
        assert np.abs(u).max() < 1e-15
        a = G[0, 0, 0]
        assert abs(G[0, 0, 1]) < 1e-12 * abs(a) and abs(G[0, 1, 0]) < 1e-12 * abs(a)
        assert G[0, 1, 1] == pytest.approx(-a, rel=1e-12)

    def test_quadrature_converged(self, sampler):
        P = Omega0Params(2, 1, 2, 2.25)
        p = seed_grid(0.05, 5)
        a, b = (QuadratureSampler(*omega0_sources(P, n_local=n))(0, p)[1] for n in (48, 96))
        assert np.abs(a - b).max() < 1e-5 * np.abs(b).max()

    def test_origin_jacobian_is_matrix_exponential(self, sampler):
        fl = advect(sampler, np.zeros((1, 2)), 1 / 80, 1 / 8)
        G = sampler(0.0, np.zeros((1, 2)))[1][0]
        assert np.abs(fl.jacobians[-1, 0] - expm(G / 8)).max() < 1e-12

    def test_axes_preserved(self, sampler):
        a = np.linspace(0.01, 0.1, 5)
        z = np.zeros_like(a)
        seeds = np.concatenate([np.stack([a, z], 1), np.stack([z, a], 1)])
        fl = advect(sampler, seeds, 1 / 80, 1 / 8)
        assert np.abs(fl.positions[:, :5, 1]).max() < 1e-6
        assert np.abs(fl.positions[:, 5:, 0]).max() < 1e-6

    def test_matches_grid_sampler(self):
        # single resolved level: spectral velocity of the grid field vs quadrature
        P = Omega0Params(2, 1, 1, 2.5)
        g = make_grid(4.0, 512)
        S = GridVelocitySampler.steady(biot_savart(omega0(P, g)))
        Q = QuadratureSampler(*omega0_sources(P, n_local=48))
        p = seed_grid(0.1, 5)
        ug, Gg = S(0.0, p)
        uq, Gq = Q(0.0, p)
        # torus periodisation differs from the plane by O(|x| / L^2) terms
        assert np.abs(Gg - Gq).max() < 0.02 * np.abs(Gq).max()

    def test_euler_run_volume_and_axes(self):
        P = Omega0Params(2, 1, 1, 2.5)
        g = make_grid(2.0, 256)
        res = solve(omega0(P, g), SolverConfig(dt=0.1, t_end=1.0, cadence=1), DiagnosticSpec(refine_sup=False, hist_oversample=1))
        S = GridVelocitySampler.from_states(res.states)
        a = np.linspace(0.05, 0.6, 6)
        z = np.zeros_like(a)
        seeds = np.concatenate([seed_grid(0.6, 8, origin=False), np.stack([a, z], 1), np.stack([z, a], 1)])
        fl = advect(S, seeds, 0.05, 1.0)
        assert fl.volume_defect() < 1e-6
        assert np.abs(fl.positions[:, 64:70, 1]).max() < 1e-6
        assert np.abs(fl.positions[:, 70:, 0]).max() < 1e-6

    @settings(max_examples=5, deadline=None)
    @given(x=st.floats(-0.05, 0.05), y=st.floats(-0.05, 0.05))
    def test_odd_symmetry(self, sampler, x, y):
        # the field is equivariant under x1 -> -x1
        u, G = sampler(0.0, np.array([[x, y], [-x, y]]))
        assert u[1, 0] == pytest.approx(-u[0, 0], abs=1e-15)
        assert u[1, 1] == pytest.approx(u[0, 1], abs=1e-15)
