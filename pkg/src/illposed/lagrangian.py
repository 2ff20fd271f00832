"""Lagrangian flow maps and their deformation gradients.

Trajectories solve ``d eta/dt = u(t, eta)`` and the Jacobian solves the
variational equation ``d(D eta)/dt = Du(t, eta) D eta``; both are advanced
together with classical RK4.  Velocity comes from a sampler:

* :class:`GridVelocitySampler` -- spectral snapshots (e.g. an Euler run),
  cubic-spline interpolation in space, linear in time;
* :class:`QuadratureSampler` -- Biot-Savart sum over point vortices, used for
  the frozen velocity of the multiscale initial vorticity, whose finest
  scales are far below any affordable grid;
* :class:`FunctionSampler` -- closed-form fields for oracles.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy import ndimage

from illposed.errors import DomainExitError, ParameterError
from illposed.spectral import GridSpec, Velocity2D

__all__ = [
    "VelocitySampler",
    "GridVelocitySampler",
    "QuadratureSampler",
    "FunctionSampler",
    "FlowState",
    "FlowTrajectory",
    "JacobianMax",
    "advect",
    "max_jacobian",
    "flow_distance",
    "field_c1_sup",
    "seed_grid",
    "EXIT_MARGIN_CELLS",
]

EXIT_MARGIN_CELLS = 4


class VelocitySampler(Protocol):
    t_span: tuple

    def __call__(self, t: float, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return velocity (n, 2) and gradient (n, 2, 2) with G[:, i, j] = d_j u_i."""
        ...


# ----------------------------------------------------------------------
# samplers


class GridVelocitySampler:
    """Velocity snapshots on a periodic grid.

    The velocity and its spectral gradient are prefiltered once per snapshot
    for cubic B-spline interpolation (``scipy.ndimage.map_coordinates``);
    values between snapshots are linear in time.
    """

    def __init__(self, times, velocities: list[Velocity2D], margin_cells: int = EXIT_MARGIN_CELLS):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) != len(velocities) or len(times) == 0:
            raise ParameterError("need one time per velocity snapshot")
        if np.any(np.diff(times) <= 0):
            raise ParameterError("snapshot times must be strictly increasing")
        grid = velocities[0].grid
        if any(v.grid != grid for v in velocities):
            raise ParameterError("snapshots live on different grids")
        self.grid: GridSpec = grid
        self.times = times
        self.t_span = (float(times[0]), float(times[-1]))
        self.margin = margin_cells * grid.h
        self._coef = [self._prefilter(v) for v in velocities]

    @classmethod
    def steady(cls, velocity: Velocity2D, **kw) -> GridVelocitySampler:
        s = cls([0.0], [velocity], **kw)
        s.t_span = (-np.inf, np.inf)
        return s

    @classmethod
    def from_states(cls, states, **kw) -> GridVelocitySampler:
        """Build from a sequence of euler2d states."""
        return cls([s.t for s in states], [s.velocity for s in states], **kw)

    @property
    def spacing(self) -> float:
        return float(np.diff(self.times).min()) if len(self.times) > 1 else np.inf

    @staticmethod
    def _prefilter(v: Velocity2D) -> np.ndarray:
        G = v.gradient()
        comps = [v.u1.values, v.u2.values, G[0, 0], G[0, 1], G[1, 0], G[1, 1]]
        return np.stack([ndimage.spline_filter(c, order=3, mode="grid-wrap") for c in comps])

    def _eval(self, coef: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return np.stack(
            [ndimage.map_coordinates(c, idx, order=3, mode="grid-wrap", prefilter=False) for c in coef]
        )

    def check(self, pts: np.ndarray) -> None:
        lim = self.grid.L - self.margin
        if not np.all(np.abs(pts) <= lim):
            bad = np.abs(pts).max()
            raise DomainExitError(
                f"trajectory at |x_i| = {bad:.4g} is within {EXIT_MARGIN_CELLS} cells of the periodic seam (limit {lim:.4g})"
            )

    def __call__(self, t: float, pts: np.ndarray):
        self.check(pts)
        lo, hi = self.t_span
        if not (lo - 1e-12 <= t <= hi + 1e-12):
            raise ParameterError(f"time {t} outside snapshot span [{lo}, {hi}]")
        idx = ((pts + self.grid.L) / self.grid.h).T
        if len(self.times) == 1:
            vals = self._eval(self._coef[0], idx)
        else:
            i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
            t0, t1 = self.times[i], self.times[i + 1]
            w = (t - t0) / (t1 - t0)
            vals = (1 - w) * self._eval(self._coef[i], idx) + w * self._eval(self._coef[i + 1], idx)
        u = vals[:2].T
        G = vals[2:].T.reshape(-1, 2, 2)
        return u, G


class QuadratureSampler:
    """Steady planar Biot-Savart velocity of weighted point vortices.

    ``u(x) = sum_j w_j K(x - y_j)`` with ``K(x) = (-x2, x1) / (2 pi |x|^2)``.
    Accurate for query points well outside the vorticity support (the
    integrand is then smooth on each source cell).
    """

    def __init__(self, points: np.ndarray, weights: np.ndarray, chunk: int = 4_000_000):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if self.points.shape != (len(self.weights), 2):
            raise ParameterError("points must have shape (n, 2) matching weights")
        self.t_span = (-np.inf, np.inf)
        self.chunk = chunk

    def __call__(self, t: float, pts: np.ndarray):
        pts = np.atleast_2d(pts)
        n = len(pts)
        u = np.zeros((n, 2))
        G = np.zeros((n, 2, 2))
        step = max(1, self.chunk // max(n, 1))
        for s in range(0, len(self.weights), step):
            y = self.points[s : s + step]
            w = self.weights[s : s + step] / (2 * np.pi)
            d1 = pts[:, None, 0] - y[None, :, 0]
            d2 = pts[:, None, 1] - y[None, :, 1]
            r2 = d1 * d1 + d2 * d2
            inv = 1.0 / r2
            inv2 = inv * inv
            u[:, 0] -= (d2 * inv) @ w
            u[:, 1] += (d1 * inv) @ w
            a = (2 * d1 * d2 * inv2) @ w
            b = ((d2 * d2 - d1 * d1) * inv2) @ w
            G[:, 0, 0] += a
            G[:, 0, 1] += b
            G[:, 1, 0] += b
            G[:, 1, 1] -= a
        return u, G


class FunctionSampler:
    """Closed-form velocity ``fn(t, pts) -> (u, G)``."""

    def __init__(self, fn, t_span=(-np.inf, np.inf)):
        self.fn = fn
        self.t_span = t_span

    def __call__(self, t: float, pts: np.ndarray):
        return self.fn(t, pts)


# ----------------------------------------------------------------------
# flow


@dataclass(frozen=True)
class FlowState:
    t: float
    seeds: np.ndarray
    positions: np.ndarray
    jacobians: np.ndarray

    def det(self) -> np.ndarray:
        return np.linalg.det(self.jacobians)


@dataclass(frozen=True)
class FlowTrajectory:
    """Positions (m, n, 2) and Jacobians (m, n, 2, 2) at stored times (m,)."""

    seeds: np.ndarray
    times: np.ndarray
    positions: np.ndarray
    jacobians: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> FlowState:
        return FlowState(float(self.times[i]), self.seeds, self.positions[i], self.jacobians[i])

    @property
    def final(self) -> FlowState:
        return self.state(-1)

    def volume_defect(self) -> float:
        """max |det D eta - 1| over seeds and stored times."""
        return float(np.abs(np.linalg.det(self.jacobians) - 1).max())

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "seed", "eta1", "eta2", "J11", "J12", "J21", "J22"])
            for i, t in enumerate(self.times):
                for s in range(len(self.seeds)):
                    p = self.positions[i, s]
                    J = self.jacobians[i, s]
                    w.writerow([repr(float(t)), s] + [repr(float(v)) for v in (*p, *J.ravel())])


def _rk4(sampler, t, X, J, dt):
    u1, G1 = sampler(t, X)
    u2, G2 = sampler(t + dt / 2, X + dt / 2 * u1)
    K1 = G1 @ J
    K2 = G2 @ (J + dt / 2 * K1)
    u3, G3 = sampler(t + dt / 2, X + dt / 2 * u2)
    K3 = G3 @ (J + dt / 2 * K2)
    u4, G4 = sampler(t + dt, X + dt * u3)
    K4 = G4 @ (J + dt * K3)
    X = X + dt / 6 * (u1 + 2 * u2 + 2 * u3 + u4)
    J = J + dt / 6 * (K1 + 2 * K2 + 2 * K3 + K4)
    return X, J


def advect(sampler, seeds, dt: float, t_end: float, t0: float = 0.0, store_every: int = 1) -> FlowTrajectory:
    """RK4 for positions and the variational equation from t0 to t_end."""
    seeds = np.array(seeds, dtype=float).reshape(-1, 2)
    if not (np.isfinite(dt) and dt > 0):
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if t_end < t0:
        raise ParameterError("t_end must not precede t0")
    spacing = getattr(sampler, "spacing", np.inf)
    if dt > spacing * (1 + 1e-12):
        raise ParameterError(f"dt = {dt} exceeds the snapshot spacing {spacing}")
    lo, hi = sampler.t_span
    if t0 < lo - 1e-12 or t_end > hi + 1e-12:
        raise ParameterError(f"[{t0}, {t_end}] not inside sampler span [{lo}, {hi}]")
    if hasattr(sampler, "check"):
        sampler.check(seeds)

    n_steps = int(np.ceil((t_end - t0) / dt - 1e-9))
    X = seeds.copy()
    J = np.broadcast_to(np.eye(2), (len(seeds), 2, 2)).copy()
    times, P, Js = [t0], [X.copy()], [J.copy()]
    for i in range(1, n_steps + 1):
        t = t0 + (i - 1) * dt
        h = min(dt, t_end - t)
        X, J = _rk4(sampler, t, X, J, h)
        if i % store_every == 0 or i == n_steps:
            times.append(t_end if i == n_steps else t0 + i * dt)
            P.append(X.copy())
            Js.append(J.copy())
    return FlowTrajectory(seeds, np.array(times), np.array(P), np.array(Js))


@dataclass(frozen=True)
class JacobianMax:
    value: float
    point: np.ndarray
    entry: tuple
    time: float
    seed_index: int


def max_jacobian(flow: FlowTrajectory) -> JacobianMax:
    """Largest |(D eta)_ij| over seeds and stored times, with its seed x* and time."""
    if len(flow) == 0 or len(flow.seeds) == 0:
        raise ParameterError("empty flow")
    a = np.abs(flow.jacobians)
    m, s, i, j = np.unravel_index(np.argmax(a), a.shape)
    return JacobianMax(float(a[m, s, i, j]), flow.seeds[s].copy(), (int(i), int(j)), float(flow.times[m]), int(s))


def flow_distance(a: FlowTrajectory, b: FlowTrajectory) -> float:
    """sup_t ( max_seeds |eta_a - eta_b| + max_seeds |D eta_a - D eta_b| ).

    Euclidean norm for positions, Frobenius norm for Jacobians.
    """
    if a.seeds.shape != b.seeds.shape or not np.array_equal(a.seeds, b.seeds):
        raise ParameterError("flows use different seeds")
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise ParameterError("flows use different time grids")
    dp = np.sqrt(np.sum((a.positions - b.positions) ** 2, axis=-1)).max(axis=1)
    dj = np.sqrt(np.sum((a.jacobians - b.jacobians) ** 2, axis=(-2, -1))).max(axis=1)
    return float((dp + dj).max())


def field_c1_sup(v: Velocity2D) -> float:
    """sup |v| + sup |Dv| (Frobenius), the right-hand side norm of the comparison bound."""
    G = v.gradient()
    return v.sup_norm() + float(np.sqrt(np.sum(G**2, axis=(0, 1))).max())


def seed_grid(half_width: float, n: int = 64, axes: int = 0, origin: bool = True) -> np.ndarray:
    """``n x n`` tensor seeds on [-w, w]^2, plus ``axes`` seeds on each positive half-axis."""
    s = np.linspace(-half_width, half_width, n)
    pts = [np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1).reshape(-1, 2)]
    if axes:
        a = np.linspace(half_width / axes, half_width, axes)
        z = np.zeros_like(a)
        pts += [np.stack([a, z], 1), np.stack([z, a], 1)]
    if origin:
        pts.append(np.zeros((1, 2)))
    return np.concatenate(pts)
