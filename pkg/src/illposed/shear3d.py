"""Exact 3D shear flows and the jump in their C^{1+sigma} distance.

For bounded profiles ``f`` and ``h`` the field

    u(t, x) = (f(x2), 0, h(x1 - t f(x2)))

solves the incompressible Euler equations with constant pressure.  Two such
flows with nearby ``f`` and ``g`` start ``||f - g||_{C^{1+sigma}}`` apart,
yet when ``h'(s) = |s|^sigma`` near the origin the sigma-Hoelder seminorm of
``h'(x1 - t f(x2)) - h'(x1 - t g(x2))`` is at least 2 for every t > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from illposed.errors import ParameterError
from illposed.funcspace import holder_seminorm_1d

__all__ = [
    "Profile",
    "HProfile",
    "ShearSpec",
    "ShearSolution",
    "GapResult",
    "build_h",
    "constant_pair",
    "bump_pair",
    "verify_euler",
    "solution_gap",
    "c1s_norm_1d",
    "holder_seminorm_2d",
    "C_SWEEP",
]

# values of the constant c on the line x2 = y2 = c where witness pairs live
C_SWEEP = np.linspace(-1.0, 1.0, 17)


def _check_sigma(sigma):
    if not 0 < sigma < 1:
        raise ParameterError(f"sigma must lie in (0, 1), got {sigma!r}")


@dataclass(frozen=True)
class Profile:
    """A bounded C^{1+sigma} function of one variable with its derivative."""

    fn: Callable
    dfn: Callable
    extent: float = 1.0  # half-width of an interval outside which the profile is constant
    name: str = "profile"

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def d(self, x):
        return self.dfn(np.asarray(x, dtype=float))

    def sup(self) -> float:
        x = np.linspace(-self.extent, self.extent, 4097)
        return float(np.abs(self(x)).max())

    @classmethod
    def constant(cls, value: float) -> Profile:
        v = float(value)
        return cls(lambda x: np.full(np.shape(x), v), lambda x: np.zeros(np.shape(x)), 1.0, f"const({v!r})")

    @classmethod
    def bump(cls, amplitude: float, width: float = 2.0) -> Profile:
        """``amplitude * exp(1 - 1/(1 - (x/w)^2))`` on |x| < w, zero outside."""
        A, w = float(amplitude), float(width)

        def fn(x):
            s = x / w
            out = np.zeros(np.shape(x))
            m = np.abs(s) < 1
            out[m] = A * np.exp(1 - 1 / (1 - s[m] ** 2))
            return out

        def dfn(x):
            s = x / w
            out = np.zeros(np.shape(x))
            m = np.abs(s) < 1
            q = 1 - s[m] ** 2
            out[m] = A * np.exp(1 - 1 / q) * (-2 * s[m] / (w * q * q))
            return out

        return cls(fn, dfn, w, f"bump({A!r}, {w!r})")

    @classmethod
    def tabulated(cls, x, y, name: str = "spline") -> Profile:
        """Clamped cubic spline through (x, y), constant outside the table."""
        x = np.asarray(x, dtype=float)
        cs = CubicSpline(x, y, bc_type="clamped")
        d = cs.derivative()
        lo, hi = x[0], x[-1]
        return cls(lambda t: cs(np.clip(t, lo, hi)), lambda t: np.where((t < lo) | (t > hi), 0.0, d(np.clip(t, lo, hi))),
                   float(max(abs(lo), abs(hi))), name)


@dataclass(frozen=True)
class HProfile:
    """Odd profile with h'(s) = |s|^sigma on [-2a, 2a] and a cubic cap beyond.

    On [2a, 2a + 1] the derivative follows the cubic Hermite blend from
    ((2a)^sigma, sigma (2a)^{sigma-1}) to (0, 0); past 2a + 1 the profile is
    constant, so h is bounded and C^2 away from the origin.
    """

    sigma: float
    a: float

    @property
    def edge(self) -> float:
        return 2 * self.a

    def _cap(self):
        e, s = self.edge, self.sigma
        return e**s, s * e ** (s - 1), e ** (1 + s) / (1 + s)

    def d(self, x):
        """h'(x)."""
        x = np.abs(np.asarray(x, dtype=float))
        A, B, _ = self._cap()
        u = np.clip(x - self.edge, 0.0, 1.0)
        cap = A * (2 * u**3 - 3 * u**2 + 1) + B * (u**3 - 2 * u**2 + u)
        return np.where(x <= self.edge, x**self.sigma, cap)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x)
        A, B, h0 = self._cap()
        u = np.clip(r - self.edge, 0.0, 1.0)
        cap = h0 + A * (u**4 / 2 - u**3 + u) + B * (u**4 / 4 - 2 * u**3 / 3 + u**2 / 2)
        core = r ** (1 + self.sigma) / (1 + self.sigma)
        return np.sign(x) * np.where(r <= self.edge, core, cap)

    def sup(self) -> float:
        A, B, h0 = self._cap()
        return h0 + A / 2 + B / 12


def build_h(sigma: float, a: float) -> HProfile:
    _check_sigma(sigma)
    if not a > 0:
        raise ParameterError(f"a must be positive, got {a!r}")
    return HProfile(float(sigma), float(a))


@dataclass(frozen=True)
class ShearSpec:
    f: Profile
    g: Profile
    sigma: float
    h: HProfile = field(init=False)

    def __post_init__(self):
        _check_sigma(self.sigma)
        a = max(self.f.sup(), self.g.sup())
        if a == 0:
            raise ParameterError("f and g vanish identically")
        object.__setattr__(self, "h", build_h(self.sigma, a))

    @property
    def a(self) -> float:
        return max(self.f.sup(), self.g.sup())

    @property
    def b(self) -> float:
        return min(self.f.sup(), self.g.sup())


def constant_pair(sigma: float, eps: float) -> ShearSpec:
    """f = 0, g = eps: ||f - g||_{C^{1+sigma}} = eps exactly."""
    return ShearSpec(Profile.constant(0.0), Profile.constant(eps), sigma)


@lru_cache(maxsize=32)
def _bump_norm(sigma: float, width: float) -> float:
    return c1s_norm_1d(Profile.bump(1.0, width), sigma)


def bump_pair(sigma: float, eps: float, width: float = 2.0) -> ShearSpec:
    """f = +s phi, g = -s phi with phi a smooth bump and s set so ||f - g||_{C^{1+sigma}} = eps."""
    s = eps / (2 * _bump_norm(float(sigma), float(width)))
    return ShearSpec(Profile.bump(s, width), Profile.bump(-s, width), sigma)


def c1s_norm_1d(p: Profile, sigma: float, n: int = 4097) -> float:
    """sup|p| + sup|p'| + [p']_sigma by dense pair maximisation on [-extent, extent]."""
    x = np.linspace(-p.extent, p.extent, n)
    d = p.d(x)
    return float(np.abs(p(x)).max() + np.abs(d).max() + holder_seminorm_1d(x, d, sigma))


def _difference(f: Profile, g: Profile) -> Profile:
    ext = max(f.extent, g.extent)
    return Profile(lambda x: f(x) - g(x), lambda x: f.d(x) - g.d(x), ext, "f-g")


@dataclass(frozen=True)
class ShearSolution:
    spec: ShearSpec
    t: float
    which: str = "f"

    @property
    def profile(self) -> Profile:
        return self.spec.f if self.which == "f" else self.spec.g

    def velocity(self, x1, x2):
        f, h = self.profile, self.spec.h
        x1 = np.asarray(x1, dtype=float)
        fx = f(x2)
        return np.stack([fx * np.ones_like(x1), np.zeros(np.broadcast(x1, fx).shape), h(x1 - self.t * fx)])

    def grad_u3(self, x1, x2):
        """(d1 u3, d2 u3) by the chain rule."""
        f, h = self.profile, self.spec.h
        hp = h.d(x1 - self.t * f(x2))
        return hp, -self.t * f.d(x2) * hp


def verify_euler(sol: ShearSolution, t: float | None = None, n: int = 129) -> float:
    """max |d_t u + (u . grad) u| over a sample grid, plus |div u| (pressure is constant).

    Components 1 and 2 are time independent and depend on x2 only while
    u2 = 0, so their transport terms vanish identically; component 3 is
    differentiated in closed form.
    """
    if t is not None:
        sol = ShearSolution(sol.spec, float(t), sol.which)
    if sol.t < 0:
        raise ParameterError("t must be non-negative")
    f = sol.profile
    R = 2 * sol.spec.a + 1.5
    x1, x2 = np.meshgrid(np.linspace(-R, R, n), np.linspace(-f.extent - 0.5, f.extent + 0.5, n), indexing="ij")
    u = sol.velocity(x1, x2)
    d1, d2 = sol.grad_u3(x1, x2)
    dt_u3 = -f(x2) * sol.spec.h.d(x1 - sol.t * f(x2))
    # component 1: d_t u1 = 0 and u . grad u1 = u2 f'(x2) = 0
    r1 = u[1] * f.d(x2)
    r3 = dt_u3 + u[0] * d1 + u[1] * d2
    div = np.zeros_like(x1)  # d1 f(x2) + d2 0 + d3 h(...) = 0 identically
    return float(max(np.abs(r1).max(), np.abs(r3).max(), np.abs(div).max()))


def holder_seminorm_2d(pts: np.ndarray, vals: np.ndarray, sigma: float, chunk: int = 4_000_000) -> float:
    """Exact sigma-Hoelder seminorm of samples at distinct 2D points (all pairs)."""
    pts = np.asarray(pts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    n = len(vals)
    step = max(1, chunk // max(n, 1))
    best = 0.0
    for s in range(0, n, step):
        d = np.hypot(pts[s : s + step, None, 0] - pts[None, :, 0], pts[s : s + step, None, 1] - pts[None, :, 1])
        dv = np.abs(vals[s : s + step, None] - vals[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(d > 0, dv / d**sigma, 0.0)
        best = max(best, float(q.max()))
    return best


@dataclass(frozen=True)
class GapResult:
    sigma: float
    t: float
    initial_distance: float
    gap_lower_bound: float
    gap_coarse: float
    tol_disc: float
    witness_quotients: np.ndarray
    n_points: int


def _gradient_difference(spec: ShearSpec, t: float, x1, x2):
    h = spec.h
    return h.d(x1 - t * spec.f(x2)) - h.d(x1 - t * spec.g(x2))


def _sample_gap(spec: ShearSpec, t: float, level: int) -> tuple[float, int]:
    a = spec.a
    witnesses = np.concatenate([t * spec.g(C_SWEEP), t * spec.f(C_SWEEP)])
    X1 = np.unique(np.concatenate([np.linspace(-a, a, 2**level + 1), witnesses]))
    X2 = np.linspace(-1.0, 1.0, 2 ** (level - 2) + 1)  # contains C_SWEEP for level >= 6
    x1, x2 = np.meshgrid(X1, X2, indexing="ij")
    pts = np.stack([x1.ravel(), x2.ravel()], 1)
    vals = _gradient_difference(spec, t, x1, x2).ravel()
    return holder_seminorm_2d(pts, vals, spec.sigma), len(vals)


def solution_gap(spec: ShearSpec, t: float, level: int = 6) -> GapResult:
    """Initial C^{1+sigma} distance and a sampled lower bound for the distance at time t.

    The lower bound is the sigma-Hoelder seminorm of
    ``h'(x1 - t f(x2)) - h'(x1 - t g(x2))`` over a nested grid on
    [-a, a] x [-1, 1] that contains every witness point t g(c), t f(c).
    Grids at ``level`` and ``level - 1`` give the discretisation defect.
    """
    if not 0 < t <= 1:
        raise ParameterError(f"t must lie in (0, 1], got {t!r} (t = 0 gives identical solutions)")
    if level < 6:
        raise ParameterError("level must be at least 6 so the sample grid contains the c sweep")
    d = _difference(spec.f, spec.g)
    x = np.linspace(-d.extent, d.extent, 4097)
    if not np.any(d(x)) and not np.any(d(C_SWEEP)):
        raise ParameterError("f and g coincide: the initial distance is zero")
    init = c1s_norm_1d(d, spec.sigma)

    s = spec.sigma
    fc, gc = spec.f(C_SWEEP), spec.g(C_SWEEP)
    live = fc != gc
    xq = np.stack([t * gc[live], C_SWEEP[live]], 1)
    yq = np.stack([t * fc[live], C_SWEEP[live]], 1)
    num = np.abs(_gradient_difference(spec, t, xq[:, 0], xq[:, 1]) - _gradient_difference(spec, t, yq[:, 0], yq[:, 1]))
    quot = num / np.abs(xq[:, 0] - yq[:, 0]) ** s

    fine, n = _sample_gap(spec, t, level)
    coarse, _ = _sample_gap(spec, t, level - 1)
    fine = max(fine, float(quot.max()))
    coarse = max(coarse, float(quot.max()))
    return GapResult(s, float(t), init, fine, coarse, (fine - coarse) / fine, quot, n)
