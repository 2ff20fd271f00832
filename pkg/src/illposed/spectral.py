"""Periodic-grid fields on the square [-L, L)^2 and their Fourier-side operators.

The plane is approximated by a large torus.  Samples live at the nodes
``x_j = (j - N/2) h`` so that reflection ``x -> -x`` maps nodes onto nodes
exactly, which keeps odd/even symmetries bitwise exact.

Spectral coefficients are stored in the unnormalised ``scipy.fft.fft2``
convention (zero frequency at index 0).  Use
:meth:`Field2D.series_coefficients` for the coefficients ``c_xi`` of the
expansion ``f(x) = sum_xi c_xi exp(i xi . x)``.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from illposed.errors import ParameterError, PreconditionError

__all__ = [
    "GridSpec",
    "Field2D",
    "Velocity2D",
    "make_grid",
    "spectral_derivative",
    "laplacian",
    "inv_laplacian",
    "frac_laplacian",
    "biot_savart",
    "save_field",
    "load_field",
]

# relative threshold on |mean| for inverting the Laplacian on the torus
MEAN_TOL = 1e-8


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Square periodic grid: ``N`` nodes per axis on ``[-L, L)``."""

    L: float
    N: int

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and _is_pow2(int(self.N))):
            raise ParameterError(f"N must be a power of two, got {self.N!r}")
        if self.N < 16:
            raise ParameterError(f"N must be at least 16, got {self.N}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ParameterError(f"L must be positive, got {self.L!r}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        """Frequency-lattice step pi/L."""
        return np.pi / self.L

    @property
    def nyquist(self) -> float:
        return self.dxi * (self.N // 2)

    @property
    def area(self) -> float:
        return (2.0 * self.L) ** 2

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.h

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.x, self.x, indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order."""
        return sfft.fftfreq(self.N, d=1.0 / self.N) * self.dxi

    @cached_property
    def kmesh(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self.k, self.k, indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.kmesh
        return k1**2 + k2**2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Signed integer mode numbers in FFT order."""
        return np.rint(sfft.fftfreq(self.N, d=1.0 / self.N)).astype(np.int64)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """1-D boolean mask, False at the Nyquist index."""
        m = np.ones(self.N, dtype=bool)
        m[self.N // 2] = False
        return m


def make_grid(L: float, N: int) -> GridSpec:
    return GridSpec(L, N)


class Field2D:
    """Real scalar field on a :class:`GridSpec`.

    Holds physical samples and/or FFT coefficients; whichever is missing is
    computed on first access and cached.  Cached arrays are read-only, so a
    field behaves as an immutable value.
    """

    __slots__ = ("grid", "_values", "_coeffs", "_lock")

    def __init__(self, grid: GridSpec, values=None, coeffs=None):
        if values is None and coeffs is None:
            raise ParameterError("Field2D needs values or coeffs")
        shape = (grid.N, grid.N)
        self.grid = grid
        self._lock = threading.Lock()
        self._values = None
        self._coeffs = None
        if values is not None:
            v = np.array(values, dtype=np.float64)
            if v.shape != shape:
                raise ParameterError(f"values shape {v.shape} != {shape}")
            v.flags.writeable = False
            self._values = v
        if coeffs is not None:
            c = np.array(coeffs, dtype=np.complex128)
            if c.shape != shape:
                raise ParameterError(f"coeffs shape {c.shape} != {shape}")
            c.flags.writeable = False
            self._coeffs = c

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> Field2D:
        x1, x2 = grid.mesh
        return cls(grid, values=fn(x1, x2))

    @classmethod
    def zeros(cls, grid: GridSpec) -> Field2D:
        return cls(grid, values=np.zeros((grid.N, grid.N)))

    @classmethod
    def from_series(cls, grid: GridSpec, c) -> Field2D:
        """Build from Fourier-series coefficients ``c_xi`` (FFT ordering)."""
        m = grid.mode_index
        sign = np.where((m[:, None] + m[None, :]) % 2 == 0, 1.0, -1.0)
        return cls(grid, coeffs=np.asarray(c) * sign * grid.N**2)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            with self._lock:
                if self._values is None:
                    v = sfft.ifft2(self._coeffs).real
                    v.flags.writeable = False
                    self._values = v
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            with self._lock:
                if self._coeffs is None:
                    c = sfft.fft2(self._values)
                    c.flags.writeable = False
                    self._coeffs = c
        return self._coeffs

    def series_coefficients(self) -> np.ndarray:
        """Coefficients of ``f(x) = sum c_xi exp(i xi.x)`` in FFT order."""
        m = self.grid.mode_index
        sign = np.where((m[:, None] + m[None, :]) % 2 == 0, 1.0, -1.0)
        return self.coeffs * sign / self.grid.N**2

    def mean(self) -> float:
        return float(self.coeffs[0, 0].real) / self.grid.N**2

    def _check(self, other: Field2D):
        if other.grid != self.grid:
            raise ParameterError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field2D):
            self._check(other)
            return Field2D(self.grid, values=self.values + other.values)
        return Field2D(self.grid, values=self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field2D):
            self._check(other)
            return Field2D(self.grid, values=self.values - other.values)
        return Field2D(self.grid, values=self.values - other)

    def __neg__(self):
        return Field2D(self.grid, values=-self.values)

    def __mul__(self, other):
        if isinstance(other, Field2D):
            self._check(other)
            return Field2D(self.grid, values=self.values * other.values)
        return Field2D(self.grid, values=self.values * float(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Field2D(L={self.grid.L}, N={self.grid.N})"


@dataclass(frozen=True)
class Velocity2D:
    u1: Field2D
    u2: Field2D

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ParameterError("velocity components on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    def divergence(self) -> Field2D:
        return spectral_derivative(self.u1, 1) + spectral_derivative(self.u2, 2)

    def curl(self) -> Field2D:
        return spectral_derivative(self.u2, 1) - spectral_derivative(self.u1, 2)

    def sup_norm(self) -> float:
        return float(np.sqrt(self.u1.values**2 + self.u2.values**2).max())

    def gradient(self) -> np.ndarray:
        """Array ``G[i, j] = d u_i / d x_j`` of shape (2, 2, N, N)."""
        comps = (self.u1, self.u2)
        return np.array(
            [[spectral_derivative(c, ax).values for ax in (1, 2)] for c in comps]
        )

    def __add__(self, other: Velocity2D) -> Velocity2D:
        return Velocity2D(self.u1 + other.u1, self.u2 + other.u2)

    def __mul__(self, c: float) -> Velocity2D:
        return Velocity2D(self.u1 * c, self.u2 * c)

    __rmul__ = __mul__


def _deriv_symbol(grid: GridSpec, axis: int) -> np.ndarray:
    if axis not in (1, 2):
        raise ParameterError(f"axis must be 1 or 2, got {axis!r}")
    k = grid.k * grid.nyquist_mask
    return 1j * (k[:, None] if axis == 1 else k[None, :])


def spectral_derivative(f: Field2D, axis: int) -> Field2D:
    """Partial derivative along x_axis (1 or 2); Nyquist mode dropped."""
    return Field2D(f.grid, coeffs=f.coeffs * _deriv_symbol(f.grid, axis))


def laplacian(f: Field2D) -> Field2D:
    g = f.grid
    k = g.k * g.nyquist_mask
    return Field2D(g, coeffs=-f.coeffs * (k[:, None] ** 2 + k[None, :] ** 2))


def _check_mean_zero(f: Field2D):
    l2 = np.sqrt(np.sum(f.values**2) * f.grid.h**2)
    if abs(f.mean()) > MEAN_TOL * l2:
        raise PreconditionError(
            f"field mean {f.mean():.3e} is not negligible (||f||_2 = {l2:.3e}); "
            "the torus Laplacian is invertible only on mean-zero fields"
        )


def inv_laplacian(f: Field2D) -> Field2D:
    """Solve Delta g = f - mean(f) with mean(g) = 0."""
    _check_mean_zero(f)
    g = f.grid
    ksq = g.ksq.copy()
    ksq[0, 0] = 1.0
    c = -f.coeffs / ksq
    c[0, 0] = 0.0
    return Field2D(g, coeffs=c)


def frac_laplacian(f: Field2D, s: float) -> Field2D:
    """Apply the Fourier multiplier |xi|^s (s >= 0)."""
    if not s >= 0:
        raise ParameterError(f"s must be non-negative, got {s!r}")
    if s == 0:
        return Field2D(f.grid, coeffs=f.coeffs)
    return Field2D(f.grid, coeffs=f.coeffs * f.grid.kabs**s)


def biot_savart(omega: Field2D) -> Velocity2D:
    """Velocity u = (-d2, d1) Delta^{-1} omega."""
    psi = inv_laplacian(omega)
    return Velocity2D(-spectral_derivative(psi, 2), spectral_derivative(psi, 1))


_MAGIC = b"ILF2"
_VERSION = 1
_HEADER = struct.Struct("<4sIdi")


def save_field(f: Field2D, path) -> None:
    """Write the ILF2 binary format: magic, version, L, N, N*N float64 LE."""
    g = f.grid
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, g.L, g.N))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> Field2D:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated ILF2 header")
    magic, version, L, N = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"unsupported ILF2 version {version}")
    body = data[_HEADER.size :]
    if len(body) != 8 * N * N:
        raise ValueError("ILF2 payload size does not match header")
    vals = np.frombuffer(body, dtype="<f8").reshape(N, N)
    return Field2D(GridSpec(L, N), values=vals)


def random_bandlimited(grid: GridSpec, kmax: int, rng, mean_zero: bool = True) -> Field2D:
    """Real random field with Fourier support in |m_i| <= kmax, scaled to sup 1."""
    m = grid.mode_index
    mask = (np.abs(m)[:, None] <= kmax) & (np.abs(m)[None, :] <= kmax)
    c = rng.standard_normal((grid.N, grid.N)) + 1j * rng.standard_normal((grid.N, grid.N))
    c = np.where(mask, c, 0.0)
    if mean_zero:
        c[0, 0] = 0.0
    # real part of the synthesised field keeps the support Hermitian
    vals = np.fft.ifft2(c).real
    vals /= np.abs(vals).max()
    return Field2D(grid, values=vals)
