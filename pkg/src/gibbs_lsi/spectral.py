"""Fourier-side representation of complex fields on the torus R/2piZ.

Lebesgue measure is normalized so that integral_T dx = 1.  This makes the
characters e^{inx} an orthonormal basis of L^2, so Parseval carries no 2pi
factors: ||u||_{L2}^2 = sum_n |u_n|^2.  Fields are stored as coefficient
arrays on n = -N..N; an equispaced grid is used only for quadrature of
nonlinear quantities such as integral |u|^p dx.

The grid has G >= q_os*(2N+1) points (G a power of two), so products of up
to q_os bandlimited factors are integrated exactly by the rectangle rule.
For non-even p the integrand |u|^p is not bandlimited and the rule carries
aliasing error controlled by q_os.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SpectralSpace",
    "SpectralField",
    "japanese_bracket",
    "project",
    "lp_norm_p",
    "sobolev_norms",
    "real_inner",
]


def japanese_bracket(n):
    """<n> = sqrt(1 + n^2), elementwise."""
    n = np.asarray(n, dtype=float)
    return np.sqrt(1.0 + n * n)


def _next_pow2(m: int) -> int:
    g = 1
    while g < m:
        g <<= 1
    return g


class SpectralSpace:
    """Truncated Fourier space on frequencies |n| <= N with quadrature grid.

    Immutable; instances are shared freely between workers.
    """

    def __init__(self, N: int, q_os: int = 4):
        if N < 0:
            raise ValueError("max frequency N must be >= 0")
        if q_os < 1:
            raise ValueError("oversampling factor must be >= 1")
        self.N = int(N)
        self.q_os = int(q_os)
        self.n_modes = 2 * self.N + 1
        self.G = _next_pow2(self.q_os * self.n_modes)
        self.freqs = np.arange(-self.N, self.N + 1)
        self.jb = japanese_bracket(self.freqs)
        self.jb2 = 1.0 + self.freqs.astype(float) ** 2
        self.grid_x = 2.0 * np.pi * np.arange(self.G) / self.G
        # position of coefficient n inside the length-G DFT spectrum
        self._dft_index = np.mod(self.freqs, self.G)

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Grid values of sum_n c_n e^{inx}; accepts (..., 2N+1) blocks."""
        coeffs = np.asarray(coeffs)
        spec = np.zeros(coeffs.shape[:-1] + (self.G,), dtype=complex)
        spec[..., self._dft_index] = coeffs
        # numpy ifft divides by G; e^{inx} synthesis needs the plain sum
        return np.fft.ifft(spec, axis=-1) * self.G

    def analyze(self, grid_values: np.ndarray) -> np.ndarray:
        """Coefficients on |n| <= N of grid data (rectangle-rule projection)."""
        spec = np.fft.fft(np.asarray(grid_values, dtype=complex), axis=-1) / self.G
        return spec[..., self._dft_index]

    def quad_mean(self, grid_values: np.ndarray) -> np.ndarray:
        """Rectangle rule for integral f dx under the normalized measure."""
        return np.mean(grid_values, axis=-1)

    def __eq__(self, other):
        return (
            isinstance(other, SpectralSpace)
            and self.N == other.N
            and self.q_os == other.q_os
        )

    def __hash__(self):
        return hash((self.N, self.q_os))

    def __repr__(self):
        return f"SpectralSpace(N={self.N}, G={self.G}, q_os={self.q_os})"


class SpectralField:
    """A field u = sum_{|n|<=N} c_n e^{inx}, stored by coefficients."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: SpectralSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (space.n_modes,):
            raise ValueError(
                f"expected {space.n_modes} coefficients for N={space.N}, "
                f"got shape {coeffs.shape}"
            )
        self.space = space
        self.coeffs = coeffs.copy()
        self.coeffs.setflags(write=False)

    @classmethod
    def zero(cls, space: SpectralSpace) -> "SpectralField":
        return cls(space, np.zeros(space.n_modes, dtype=complex))

    @classmethod
    def mode(cls, space: SpectralSpace, n: int, amplitude=1.0) -> "SpectralField":
        """amplitude * e^{inx}."""
        if abs(n) > space.N:
            raise ValueError(f"frequency {n} outside |n| <= {space.N}")
        c = np.zeros(space.n_modes, dtype=complex)
        c[n + space.N] = amplitude
        return cls(space, c)

    @classmethod
    def constant(cls, space: SpectralSpace, value) -> "SpectralField":
        return cls.mode(space, 0, value)

    def coeff(self, n: int) -> complex:
        if abs(n) > self.space.N:
            raise ValueError(f"frequency {n} outside |n| <= {self.space.N}")
        return complex(self.coeffs[n + self.space.N])

    def grid_values(self) -> np.ndarray:
        return self.space.synthesize(self.coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_space(self, other)
        return SpectralField(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_space(self, other)
        return SpectralField(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.space, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.space, -self.coeffs)

    def __repr__(self):
        return f"SpectralField(N={self.space.N}, ||u||^2={sobolev_norms(self)[0]:.6g})"


def _check_same_space(f: SpectralField, g: SpectralField) -> None:
    if f.space != g.space:
        raise ValueError("fields live in different spectral spaces")


def project(u: SpectralField, M: int) -> SpectralField:
    """Zero out all coefficients with |n| > M (L^2-orthogonal projection)."""
    if M < 0 or M > u.space.N:
        raise ValueError(f"projection level {M} outside [0, {u.space.N}]")
    c = u.coeffs.copy()
    mask = np.abs(u.space.freqs) > M
    c[mask] = 0.0
    return SpectralField(u.space, c)


def lp_norm_p(u: SpectralField, p: float) -> float:
    """integral |u|^p dx by the rectangle rule on the oversampled grid."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.mean(np.abs(u.grid_values()) ** p))


def sobolev_norms(u: SpectralField):
    """(||u||_{L2}^2, ||u||_{H1}^2) = (sum |c_n|^2, sum <n>^2 |c_n|^2)."""
    a2 = np.abs(u.coeffs) ** 2
    return float(np.sum(a2)), float(np.sum(u.space.jb2 * a2))


def real_inner(f: SpectralField, g: SpectralField) -> float:
    """Re integral f conj(g) dx, the real Hilbert inner product."""
    _check_same_space(f, g)
    return float(np.sum(f.coeffs.real * g.coeffs.real + f.coeffs.imag * g.coeffs.imag))
