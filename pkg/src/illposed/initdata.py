"""Explicit initial vorticities and high-frequency perturbations.

* ``base_bump`` / ``quadrupole`` / ``omega0``: the odd-odd multiscale vorticity
  built from rescaled four-bump quadrupoles ``phi_k``.
* ``RhoSpec`` / ``Rho`` / ``rho_field``: a Fourier-side bump ``chi_hat``
  shifted to ``+-xi0`` so that ``rho = 2 cos(xi0 . x) chi(x)``.
* ``beta_perturbation`` / ``beta_hat``: the modulated, concentrated
  perturbation and its closed-form Fourier transform.

Fourier convention: ``f(x) = int f_hat(xi) exp(i x.xi) dxi`` (angular
frequencies), so ``rho(0) = int rho_hat = 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft
from numpy.polynomial.legendre import leggauss
from scipy.special import j0

from illposed.errors import ParameterError, ResolutionError
from illposed.funcspace.norms import _lp_values, smooth_step
from illposed.spectral import Field2D, GridSpec, make_grid, spectral_derivative

__all__ = [
    "RadialBump",
    "base_bump",
    "quadrupole",
    "quadrupole_values",
    "Omega0Params",
    "omega0",
    "omega0_w1r_norm",
    "omega0_sources",
    "RhoSpec",
    "Rho",
    "rho_field",
    "PerturbParams",
    "perturb_params",
    "beta_hat",
    "beta_perturbation",
    "perturbed_vorticity",
    "fit_grid",
    "OMEGA0_W1R_BOUND",
    "OMEGA0N_W1R_BOUND",
]

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
MIN_CELLS = 8

# frozen regression bounds, measured on the reference sweeps:
# M^2 ||omega_0||_{W^{1,r}} in [8.01, 9.97] for M, N in {2,4,8}, r in {2.25,2.5,3};
# ||omega_{0,n}||_{W^{1,4}} in [4.81, 4.90] for n = 32..256 (M = 2, N = 1)
OMEGA0_W1R_BOUND = 12.0
OMEGA0N_W1R_BOUND = 6.0


# ----------------------------------------------------------------------
# bumps and the quadrupole family


@dataclass(frozen=True)
class RadialBump:
    """``exp(1 - 1/(1 - |x/s|^2))`` inside ``|x| < s``, zero outside."""

    s: float = 0.25

    def __post_init__(self):
        if not 0 < self.s <= 0.25:
            raise ParameterError(f"bump radius must lie in (0, 1/4], got {self.s!r}")

    def profile(self, rad):
        t = np.asarray(rad, dtype=float) / self.s
        inside = t < 1
        with np.errstate(divide="ignore", over="ignore"):
            val = np.exp(1.0 - 1.0 / np.where(inside, 1.0 - t * t, 1.0))
        return np.where(inside, val, 0.0)

    def __call__(self, x1, x2):
        return self.profile(np.hypot(x1, x2))


def base_bump(radius_scale: float = 0.25) -> RadialBump:
    return RadialBump(radius_scale)


def _phi0(bump: RadialBump, x1, x2):
    # grouped so that x -> -x on either axis flips the sign bit-for-bit
    upper = bump(x1 - 1, x2 - 1) - bump(x1 + 1, x2 - 1)
    lower = bump(x1 - 1, x2 + 1) - bump(x1 + 1, x2 + 1)
    return upper - lower


def quadrupole_values(k: int, r: float, x1, x2, bump: RadialBump | None = None):
    """phi_k(x) = 2^{(-1+2/r) k} phi_0(2^k x) at arbitrary points."""
    bump = bump or RadialBump()
    s = 2.0**k
    return s ** (-1.0 + 2.0 / r) * _phi0(bump, s * np.asarray(x1), s * np.asarray(x2))


def _check_scale(k: int, grid: GridSpec, bump: RadialBump):
    diam = 2 * bump.s * 2.0**-k
    if diam < MIN_CELLS * grid.h:
        raise ResolutionError(
            f"bump diameter {diam:.3g} at level k={k} spans fewer than {MIN_CELLS} cells (h={grid.h:.3g})"
        )
    if 2.0**-k * (1 + bump.s) >= grid.L:
        raise ParameterError(f"level k={k} quadrupole does not fit in [-L, L)^2 with L={grid.L}")


def quadrupole(k: int, r: float, grid: GridSpec, bump: RadialBump | None = None) -> Field2D:
    if k < 0 or int(k) != k:
        raise ParameterError(f"k must be a non-negative integer, got {k!r}")
    bump = bump or RadialBump()
    _check_scale(k, grid, bump)
    x1, x2 = grid.mesh
    return Field2D(grid, values=quadrupole_values(k, r, x1, x2, bump))


# ----------------------------------------------------------------------
# omega_0


@dataclass(frozen=True)
class Omega0Params:
    M: float
    N0: int
    N: int
    r: float

    def __post_init__(self):
        if not self.M >= 2:
            raise ParameterError(f"M must be >= 2, got {self.M!r}")
        if int(self.N0) != self.N0 or self.N0 < 1:
            raise ParameterError(f"N0 must be a positive integer, got {self.N0!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer, got {self.N!r}")
        if not 2 < self.r < np.inf:
            raise ParameterError(f"r must lie in (2, inf), got {self.r!r}")

    @property
    def levels(self) -> range:
        return range(self.N0, self.N0 + self.N + 1)

    @property
    def amplitude(self) -> float:
        return self.M**-2 * self.N ** (-1.0 / self.r)


def omega0(params: Omega0Params, grid: GridSpec, bump: RadialBump | None = None) -> Field2D:
    bump = bump or RadialBump()
    _check_scale(params.N0 + params.N, grid, bump)
    _check_scale(params.N0, grid, bump)
    x1, x2 = grid.mesh
    vals = np.zeros_like(x1)
    for k in params.levels:
        vals += quadrupole_values(k, params.r, x1, x2, bump)
    return Field2D(grid, values=params.amplitude * vals)


def _local_grid(k: int, bump: RadialBump, n: int) -> GridSpec:
    # box around the (1,1) bump of level k, with room for the smooth tail
    return make_grid(2 * bump.s * 2.0**-k, n)


def omega0_w1r_norm(params: Omega0Params, bump: RadialBump | None = None, n_local: int = 128) -> float:
    """||omega_0||_{W^{1,r}} evaluated shell by shell.

    The supports of the ``phi_k`` (and of their four bumps) are pairwise
    disjoint, so ``||f||_r^r`` and ``||d_j f||_r^r`` are sums over bumps.
    Each bump is sampled on its own local periodic grid (``n_local`` nodes
    over a box twice its diameter) with spectral derivatives; by symmetry the
    four bumps of one level have equal norms.
    """
    bump = bump or RadialBump()
    r = params.r
    acc = np.zeros(3)
    for k in params.levels:
        g = _local_grid(k, bump, n_local)
        x1, x2 = g.mesh
        amp = params.amplitude * 2.0 ** ((-1.0 + 2.0 / r) * k)
        f = Field2D(g, values=amp * bump(2.0**k * x1, 2.0**k * x2))
        parts = (f, spectral_derivative(f, 1), spectral_derivative(f, 2))
        cell = g.h**2
        acc += [4 * _lp_values(p.values, cell, r) ** r for p in parts]
    return float(np.sum(acc ** (1.0 / r)))


def omega0_sources(params: Omega0Params, bump: RadialBump | None = None, n_local: int = 48):
    """Quadrature nodes and weights ``(y_i, omega_0(y_i) dA_i)`` for omega_0.

    Every bump is sampled at the midpoints of an ``n_local x n_local`` grid
    covering its support; the midpoint rule is spectrally accurate for the
    smooth, compactly supported integrand.  Returns ``(points (n, 2), weights (n,))``.
    """
    bump = bump or RadialBump()
    pts, wts = [], []
    for k in params.levels:
        rad = bump.s * 2.0**-k
        h = 2 * rad / n_local
        t = -rad + h * (np.arange(n_local) + 0.5)
        a, b = np.meshgrid(t, t, indexing="ij")
        keep = a**2 + b**2 < rad**2
        a, b = a[keep], b[keep]
        amp = params.amplitude * 2.0 ** ((-1.0 + 2.0 / params.r) * k)
        v = amp * bump(2.0**k * a, 2.0**k * b) * h * h
        c = 2.0**-k
        for e1, e2 in SIGNS:
            pts.append(np.stack([e1 * c + a, e2 * c + b], axis=1))
            wts.append(e1 * e2 * v)
    return np.concatenate(pts), np.concatenate(wts)


# ----------------------------------------------------------------------
# rho


@dataclass(frozen=True)
class RhoSpec:
    """``chi_hat(xi) = c * S(|xi|)`` with ``S`` = 1 on ``[0, inner]`` and a
    smooth step down to 0 at ``|xi| = 1``; ``c`` normalises ``int chi_hat = 1``."""

    inner: float = 0.25
    xi0: tuple[float, float] = (2.0, 0.0)
    n_quad: int = 800

    def __post_init__(self):
        if not 0 <= self.inner < 1:
            raise ParameterError(f"inner radius must lie in [0, 1), got {self.inner!r}")

    def profile(self, s):
        return 1.0 - smooth_step((np.asarray(s, dtype=float) - self.inner) / (1.0 - self.inner))

    @cached_property
    def _nodes(self):
        x, w = leggauss(self.n_quad)
        s = 0.5 * (x + 1.0)
        return s, 0.5 * w * self.profile(s) * s

    @cached_property
    def norm_const(self) -> float:
        _, w = self._nodes
        return 1.0 / (2 * np.pi * np.sum(w))

    def chi_hat(self, xi1, xi2):
        return self.norm_const * self.profile(np.hypot(xi1, xi2))

    def rho_hat(self, xi1, xi2):
        a, b = self.xi0
        return self.chi_hat(xi1 - a, xi2 - b) + self.chi_hat(xi1 + a, xi2 + b)

    def chi(self, rad, chunk: int = 20000):
        """chi(|x|) = 2 pi int_0^1 chi_hat(s) J0(|x| s) s ds (Gauss-Legendre)."""
        rad = np.asarray(rad, dtype=float)
        s, w = self._nodes
        flat = rad.ravel()
        out = np.empty_like(flat)
        for i in range(0, flat.size, chunk):
            out[i : i + chunk] = j0(np.outer(flat[i : i + chunk], s)) @ w
        return (2 * np.pi * self.norm_const * out).reshape(rad.shape)


class Rho:
    """Pointwise evaluator of ``rho(x) = 2 cos(xi0 . x) chi(|x|)`` (no periodisation)."""

    def __init__(self, spec: RhoSpec | None = None):
        self.spec = spec or RhoSpec()

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        rad = np.hypot(x1, x2)
        # radii repeat a lot on symmetric grids
        u, inv = np.unique(np.round(rad, 13), return_inverse=True)
        chi = self.spec.chi(u)[inv].reshape(rad.shape)
        a, b = self.spec.xi0
        return 2.0 * np.cos(a * x1 + b * x2) * chi


def _synth_copy(spec: RhoSpec, grid: GridSpec, lam: float, shift) -> np.ndarray:
    """Series coefficients of the periodisation of rho(lam (x - shift))."""
    k1, k2 = grid.kmesh
    phase = np.exp(-1j * (k1 * shift[0] + k2 * shift[1]))
    return grid.dxi**2 * lam**-2 * spec.rho_hat(k1 / lam, k2 / lam) * phase


def _check_band(grid: GridSpec, top: float, what: str):
    if top >= grid.nyquist:
        raise ResolutionError(f"{what} reaches |xi_1| = {top:.4g} >= Nyquist {grid.nyquist:.4g}")


def rho_field(spec: RhoSpec, grid: GridSpec) -> Field2D:
    """rho periodised onto the torus (exact lattice synthesis)."""
    a = np.hypot(*spec.xi0)
    _check_band(grid, a + 1, "rho_hat support")
    return Field2D.from_series(grid, _synth_copy(spec, grid, 1.0, (0.0, 0.0)))


# ----------------------------------------------------------------------
# beta


@dataclass(frozen=True)
class PerturbParams:
    k: int
    lam: float
    alpha_tilde: float = 0.5
    r: float = 4.0
    x_star: tuple[float, float] | None = None
    sigma: float = 0.5
    rho: RhoSpec = field(default_factory=RhoSpec)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 8:
            raise ParameterError(f"k must be an integer >= 8, got {self.k!r}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam!r}")
        if not 0 < self.alpha_tilde <= 1:
            raise ParameterError(f"alpha_tilde must lie in (0, 1], got {self.alpha_tilde!r}")
        if not 2 < self.r < np.inf:
            raise ParameterError(f"r must lie in (2, inf), got {self.r!r}")

    @property
    def amplitude(self) -> float:
        return self.lam ** (-1.0 + 2.0 / self.r) / self.k ** (1.0 - self.alpha_tilde)

    def star(self, grid: GridSpec) -> tuple[float, float]:
        """x*; defaults to the centre of the positive quadrant of the grid."""
        if self.x_star is None:
            return (grid.L / 2, grid.L / 2)
        return tuple(map(float, self.x_star))


def perturb_params(n: int, alpha_tilde: float = 0.5, r: float = 4.0, **kw) -> PerturbParams:
    """The one-parameter family k = n, lambda = n^alpha_tilde."""
    return PerturbParams(k=n, lam=float(n) ** alpha_tilde, alpha_tilde=alpha_tilde, r=r, **kw)


def beta_hat(params: PerturbParams, xi1, xi2, grid: GridSpec | None = None):
    """Closed-form Fourier transform of beta on R^2 (angular convention)."""
    xs = params.star(grid) if grid is not None else params.x_star
    if xs is None:
        raise ParameterError("beta_hat needs x_star or a grid to default it")
    lam, k = params.lam, params.k
    out = np.zeros(np.broadcast(xi1, xi2).shape, dtype=np.complex128)
    for e1, e2 in SIGNS:
        p = (e1 * xs[0], e2 * xs[1])
        for j in (1, 2):
            s1 = xi1 + (-1) ** j * k
            term = params.rho.rho_hat(s1 / lam, xi2 / lam) * np.exp(-1j * (p[0] * s1 + p[1] * xi2))
            out += e1 * e2 * (-1) ** (j + 1) / (2j * lam**2) * term
    return params.amplitude * out


def beta_perturbation(params: PerturbParams, grid: GridSpec) -> Field2D:
    """beta on the torus.

    Each concentrated copy ``rho(lam (x - x*_eps))`` is synthesised exactly
    from its Fourier transform on the lattice (the periodisation, which is
    band-limited), then the sum is multiplied by ``sin(k x_1)`` in physical
    space; the product stays below Nyquist so no aliasing occurs.
    """
    lam, k = params.lam, params.k
    xs = params.star(grid)
    if 1.0 / lam < MIN_CELLS * grid.h:
        raise ResolutionError(f"1/lambda = {1 / lam:.3g} spans fewer than {MIN_CELLS} cells")
    if 2 * np.pi / k < MIN_CELLS * grid.h:
        raise ResolutionError(f"wavelength 2 pi/k = {2 * np.pi / k:.3g} spans fewer than {MIN_CELLS} cells")
    m = k / grid.dxi
    if abs(m - round(m)) > 1e-9:
        raise ParameterError(f"sin(k x_1) with k={k} is not periodic on [-L, L) (L={grid.L})")
    margin = min(grid.L - abs(xs[0]), grid.L - abs(xs[1]), abs(xs[0]), abs(xs[1]))
    if margin < 2.0 / lam:
        raise ParameterError(f"x* = {xs} and its reflections need margin >= 2/lambda = {2 / lam:.3g}")
    a = np.hypot(*params.rho.xi0)
    _check_band(grid, lam * (a + 1), "concentrated rho")
    _check_band(grid, k + lam * (a + 1), "modulated beta")

    c = np.zeros((grid.N, grid.N), dtype=np.complex128)
    for e1, e2 in SIGNS:
        c += e1 * e2 * _synth_copy(params.rho, grid, lam, (e1 * xs[0], e2 * xs[1]))
    bump_sum = Field2D.from_series(grid, c).values
    x1 = grid.mesh[0]
    return Field2D(grid, values=params.amplitude * bump_sum * np.sin(k * x1))


def fit_grid(params: PerturbParams, N: int = 1024, max_L: float = 8 * np.pi) -> GridSpec:
    """Largest torus ``L = pi 2^j <= max_L`` on which ``beta`` is resolved with ``N`` nodes.

    Powers of two times pi keep the lattice step ``2^-j`` compatible with
    integer ``k``.
    """
    need = min(1.0 / params.lam, 2 * np.pi / params.k) / MIN_CELLS
    L = max_L
    while L >= np.pi * 2.0**-12:
        g = make_grid(L, N)
        ok = g.h <= need and abs(params.k / g.dxi - round(params.k / g.dxi)) < 1e-9
        if ok:
            return g
        L /= 2
    raise ResolutionError(f"no torus with N={N} resolves k={params.k}, lambda={params.lam:.4g}")


def perturbed_vorticity(n: int, base: Omega0Params, pert: PerturbParams | None, grid: GridSpec) -> Field2D:
    """omega_{0,n} = omega_0 + beta_n; ``pert=None`` returns omega_0."""
    w = omega0(base, grid)
    if pert is None:
        return w
    if pert.k != n or not np.isclose(pert.lam, n**pert.alpha_tilde, rtol=1e-12):
        raise ParameterError("perturbation must use k = n and lambda = n^alpha_tilde")
    return w + beta_perturbation(pert, grid)
