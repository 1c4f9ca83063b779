"""Base Gaussian measure, its heat-regularized family, and Gibbs log-weights.

The reference measure mu has independent coefficients u_n = g_n / <n> with
E g_n = 0, E |g_n|^2 = 1 (real and imaginary parts independent, variance 1/2
each), so E u_n conj(u_m) = delta_{nm} / <n>^2 and E ||u||_{L2}^2 =
sum_{|n|<=N} <n>^{-2}.  All Gibbs measures are specified by their log-density
relative to mu; the sharp-cutoff weight returns -inf outside the mass ball so
importance weights exponentiate to exact zeros.

Two call styles coexist: field-level functions mirror the math one field at a
time, and `*_block` factories return closures acting on (m, 2N+1) coefficient
blocks for the Monte Carlo engine.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .rng import RngStream
from .spectral import SpectralField, SpectralSpace, project

__all__ = [
    "GibbsParams",
    "NEG_INF",
    "sample_mu",
    "sample_mu_bar",
    "sample_mu_block",
    "sample_mu_bar_block",
    "mass",
    "hamiltonian",
    "log_weight_sharp",
    "log_weight_polynomial",
    "log_weight_soft",
    "log_weight_smoothed",
    "make_log_weight_sharp",
    "make_log_weight_polynomial",
    "make_log_weight_soft",
    "make_log_weight_smoothed",
    "mass_block",
    "lp_integral_block",
    "DiagonalGaussianProposal",
    "MixtureProposal",
    "mu_proposal",
    "mass_tilted_mixture",
    "shifted_spread_mixture",
    "field_to_bytes",
    "field_from_bytes",
    "field_to_csv_row",
    "field_from_csv_row",
]

NEG_INF = float("-inf")


@dataclass(frozen=True)
class GibbsParams:
    """Physical and regularization parameters shared across the measures.

    p: nonlinearity exponent, 2 <= p < 6.
    K: mass cutoff level (> 0).
    lam: quadratic tilt Lambda (>= 0).
    R: polynomial / smoothed penalty strength (>= 0).
    L: soft-cutoff penalty (>= 0).
    eps0: penalty scale for the dyadic family, L = eps0 * M^{p/2-1}.
    sigma: smoothed-cutoff exponent, strictly > p/2 + 1.
    N: Fourier truncation.
    """

    p: float = 4.0
    K: float = 1.0
    lam: float = 1.0
    R: float = 1.0
    L: float = 1.0
    eps0: float = 0.1
    sigma: float | None = None
    N: int = 8

    def __post_init__(self):
        if not (2.0 <= self.p < 6.0):
            raise ValueError(f"p={self.p} outside [2, 6)")
        if self.K <= 0:
            raise ValueError("K must be > 0")
        if self.lam < 0:
            raise ValueError("Lambda must be >= 0")
        if self.R < 0:
            raise ValueError("R must be >= 0")
        if self.L < 0:
            raise ValueError("L must be >= 0")
        if not (0.0 < self.eps0 < 1.0):
            raise ValueError("eps0 must lie in (0, 1)")
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.p / 2.0 + 1.5)
        if self.sigma <= self.p / 2.0 + 1.0:
            raise ValueError(f"sigma={self.sigma} must exceed p/2+1={self.p/2+1}")
        if self.N < 0:
            raise ValueError("N must be >= 0")

    def with_(self, **kw) -> "GibbsParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "p": self.p, "K": self.K, "lam": self.lam, "R": self.R,
            "L": self.L, "eps0": self.eps0, "sigma": self.sigma, "N": self.N,
        }


# ---------------------------------------------------------------------------
# samplers

def sample_mu_block(space: SpectralSpace, n: int, rng: RngStream) -> np.ndarray:
    """n independent samples of (P_N)_* mu as an (n, 2N+1) coefficient block."""
    g = rng.complex_normal((n, space.n_modes))
    return g / space.jb[None, :]

def sample_mu(space: SpectralSpace, rng: RngStream) -> SpectralField:
    return SpectralField(space, sample_mu_block(space, 1, rng)[0])

def sample_mu_bar_block(space: SpectralSpace, t: float, n: int, rng: RngStream) -> np.ndarray:
    if t < 0:
        raise ValueError("heat time t must be >= 0")
    scale = np.sqrt(-np.expm1(-t * space.jb2))
    return sample_mu_block(space, n, rng) * scale[None, :]

def sample_mu_bar(space: SpectralSpace, t: float, rng: RngStream) -> SpectralField:
    return SpectralField(space, sample_mu_bar_block(space, t, 1, rng)[0])


# ---------------------------------------------------------------------------
# block-level functionals

def mass_block(U: np.ndarray) -> np.ndarray:
    """||u||_{L2}^2 rowwise for an (m, 2N+1) block."""
    return np.sum(np.abs(U) ** 2, axis=-1)

def lp_integral_block(space: SpectralSpace, U: np.ndarray, p: float) -> np.ndarray:
    """integral |u|^p dx rowwise (grid quadrature)."""
    return np.mean(np.abs(space.synthesize(U)) ** p, axis=-1)

def _projection_mask(space: SpectralSpace, N: int) -> np.ndarray:
    if N > space.N:
        raise ValueError(f"params.N={N} exceeds space truncation {space.N}")
    return (np.abs(space.freqs) <= N).astype(float)

def _phi_coeffs(space: SpectralSpace, phi: SpectralField | None) -> np.ndarray:
    if phi is None:
        return np.zeros(space.n_modes, dtype=complex)
    if phi.space != space:
        raise ValueError("phi lives in a different spectral space")
    return phi.coeffs


# ---------------------------------------------------------------------------
# log-weights relative to mu (block factories, then field-level wrappers)

def make_log_weight_sharp(space: SpectralSpace, phi: SpectralField | None,
                          params: GibbsParams):
    """(1/p) integral |u+phi|^p if ||u+phi||^2 <= K, else -inf."""
    ph = _phi_coeffs(space, phi)
    p, K = params.p, params.K

    def logw(U: np.ndarray) -> np.ndarray:
        V = U + ph[None, :]
        inside = mass_block(V) <= K
        out = np.full(U.shape[0], NEG_INF)
        if inside.any():
            out[inside] = lp_integral_block(space, V[inside], p) / p
        return out

    return logw


def make_log_weight_polynomial(space: SpectralSpace, params: GibbsParams):
    """-Lam ||P_N u||^2 + (1/p) integral |P_N u|^p - R (||P_N u||^2 - K)_+^8."""
    mask = _projection_mask(space, params.N)
    p, K, lam, R = params.p, params.K, params.lam, params.R

    def logw(U: np.ndarray) -> np.ndarray:
        V = U * mask[None, :]
        m = mass_block(V)
        f = lp_integral_block(space, V, p) / p
        return -lam * m + f - R * np.maximum(m - K, 0.0) ** 8

    return logw


def make_log_weight_soft(space: SpectralSpace, phi: SpectralField | None,
                         params: GibbsParams):
    """(1/p) integral |P_N(u+phi)|^p on the mass ball, -L outside."""
    mask = _projection_mask(space, params.N)
    ph = _phi_coeffs(space, phi) * mask
    p, K, L = params.p, params.K, params.L

    def logw(U: np.ndarray) -> np.ndarray:
        V = U * mask[None, :] + ph[None, :]
        inside = mass_block(V) <= K
        out = np.full(U.shape[0], -L)
        if inside.any():
            out[inside] = lp_integral_block(space, V[inside], p) / p
        return out

    return logw


def make_log_weight_smoothed(space: SpectralSpace, phi: SpectralField | None,
                             params: GibbsParams):
    """(1/p) integral |u+phi|^p - R (||u+phi||^2 - K)_+^sigma; C^2 in phi."""
    ph = _phi_coeffs(space, phi)
    p, K, R, sigma = params.p, params.K, params.R, params.sigma

    def logw(U: np.ndarray) -> np.ndarray:
        V = U + ph[None, :]
        m = mass_block(V)
        f = lp_integral_block(space, V, p) / p
        return f - R * np.maximum(m - K, 0.0) ** sigma

    return logw


def _scalarize(factory, u: SpectralField, phi, params, with_phi=True):
    if with_phi:
        fn = factory(u.space, phi, params)
    else:
        fn = factory(u.space, params)
    return float(fn(u.coeffs[None, :])[0])

def log_weight_sharp(u: SpectralField, phi: SpectralField | None,
                     params: GibbsParams) -> float:
    return _scalarize(make_log_weight_sharp, u, phi, params)

def log_weight_polynomial(u: SpectralField, params: GibbsParams) -> float:
    return _scalarize(make_log_weight_polynomial, u, None, params, with_phi=False)

def log_weight_soft(u: SpectralField, phi: SpectralField | None,
                    params: GibbsParams) -> float:
    return _scalarize(make_log_weight_soft, u, phi, params)

def log_weight_smoothed(u: SpectralField, phi: SpectralField | None,
                        params: GibbsParams) -> float:
    return _scalarize(make_log_weight_smoothed, u, phi, params)


def mass(u: SpectralField) -> float:
    """||u||_{L2}^2."""
    return float(np.sum(np.abs(u.coeffs) ** 2))


def hamiltonian(u: SpectralField, p: float) -> float:
    """(1/2) integral |grad u|^2 - (1/p) integral |u|^p.

    integral |grad u|^2 = sum n^2 |u_n|^2 = ||u||_{H1}^2 - ||u||_{L2}^2.
    """
    a2 = np.abs(u.coeffs) ** 2
    grad_sq = float(np.sum(u.space.freqs.astype(float) ** 2 * a2))
    f = float(np.mean(np.abs(u.grid_values()) ** p))
    return 0.5 * grad_sq - f / p


# ---------------------------------------------------------------------------
# proposal distributions for importance sampling
#
# Mass-tilted diagonal Gaussians: mode variances v_n / (1 + theta v_n) where
# v_n is the base variance (1/<n>^2 for mu).  The density ratio to the base
# depends on u only through sum_n |u_n|^2 / weights, so it is exact:
#   log dq_theta/dbase (u) = sum_n log(1 + theta v_n) - theta ||u||^2
# for the mu-tilt; the mixture takes a logsumexp over components.  theta = 0
# recovers the base measure, so defensive mixtures always dominate it.

class DiagonalGaussianProposal:
    """Complex Gaussian with independent modes; per-mode variance given."""

    def __init__(self, space: SpectralSpace, variances: np.ndarray):
        self.space = space
        self.variances = np.asarray(variances, dtype=float)
        if self.variances.shape != (space.n_modes,):
            raise ValueError("one variance per mode required")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be positive")
        self._std = np.sqrt(self.variances)

    def sample_block(self, n: int, rng: RngStream) -> np.ndarray:
        return rng.complex_normal((n, self.space.n_modes)) * self._std[None, :]

    def log_density_rel(self, U: np.ndarray, base_variances: np.ndarray) -> np.ndarray:
        """log dq/dbase at each row, for a diagonal Gaussian base."""
        bv = np.asarray(base_variances, dtype=float)
        logdet = np.sum(np.log(bv) - np.log(self.variances))
        quad = np.sum(np.abs(U) ** 2 * (1.0 / self.variances - 1.0 / bv)[None, :],
                      axis=-1)
        return logdet - quad


class MixtureProposal:
    """Defensive mixture of mass-tilted diagonal Gaussians over a base.

    Component j has variances v_n / (1 + theta_j v_n) and an optional mean
    field; weight alpha_j.  Positive tilts shrink the mass (covering cutoff
    events), negative tilts inflate it (covering log-convex weights); any
    theta with 1 + theta v_n > 0 for every mode is exact.  Mean shifts cover
    measures concentrated off the origin (shifted-field weights).
    `log_ratio_to_base(U)` is the exact log density ratio to the centered
    base Gaussian with variances v_n.
    """

    def __init__(self, space: SpectralSpace, base_variances: np.ndarray,
                 thetas, alphas=None, means=None):
        self.space = space
        self.base_variances = np.asarray(base_variances, dtype=float)
        self.thetas = np.asarray(thetas, dtype=float)
        if np.any(1.0 + self.thetas[:, None] * self.base_variances[None, :]
                  <= 0.0):
            raise ValueError(
                "tilts must satisfy 1 + theta * v_n > 0 for every mode")
        k = len(self.thetas)
        if alphas is None:
            alphas = np.full(k, 1.0 / k)
        self.alphas = np.asarray(alphas, dtype=float)
        if abs(self.alphas.sum() - 1.0) > 1e-12 or np.any(self.alphas <= 0):
            raise ValueError("mixture weights must be positive and sum to 1")
        if means is None:
            means = np.zeros((k, space.n_modes), dtype=complex)
        self.means = np.asarray(means, dtype=complex)
        if self.means.shape != (k, space.n_modes):
            raise ValueError("means must have shape (n_components, n_modes)")
        # c_j = sum_n log(1 + theta_j v_n); the quadratic part of the ratio is
        # -theta_j * sum_n |u_n|^2 because 1/v_prop - 1/v = theta exactly.
        self._c = np.array([
            np.sum(np.log1p(th * self.base_variances)) for th in self.thetas
        ])
        self._comp_vars = np.stack([
            self.base_variances / (1.0 + th * self.base_variances)
            for th in self.thetas
        ], axis=0)
        # mean terms: log q_j picks up (2 Re<u, m_j/s_j> - |m_j|^2/s_j)
        self._lin = np.conj(self.means) / self._comp_vars
        self._d = np.sum(np.abs(self.means) ** 2 / self._comp_vars, axis=1)

    def sample_block(self, n: int, rng: RngStream) -> np.ndarray:
        comp = rng.choice(len(self.thetas), size=n, p=self.alphas)
        g = rng.complex_normal((n, self.space.n_modes))
        return g * np.sqrt(self._comp_vars)[comp] + self.means[comp]

    def log_ratio_to_base(self, U: np.ndarray) -> np.ndarray:
        m = mass_block(U)
        expo = (np.log(self.alphas) + self._c - self._d)[None, :] \
            - np.outer(m, self.thetas) + 2.0 * np.real(U @ self._lin.T)
        mx = expo.max(axis=1)
        return mx + np.log(np.sum(np.exp(expo - mx[:, None]), axis=1))


def mu_proposal(space: SpectralSpace) -> MixtureProposal:
    """mu itself as a (trivial) proposal: single theta = 0 component."""
    return MixtureProposal(space, 1.0 / space.jb2, [0.0])


def mass_tilted_mixture(space: SpectralSpace, thetas=(0.0, 8.0, 25.0, 45.0),
                        alphas=None) -> MixtureProposal:
    """Default defensive mixture for small-mass events under mu.

    Larger theta concentrates the proposal near u = 0, reaching mass levels
    around sum_n v_n/(1+theta v_n); theta = 0 keeps the base covered.
    """
    return MixtureProposal(space, 1.0 / space.jb2, thetas, alphas)


def shifted_spread_mixture(space: SpectralSpace, phi: SpectralField | None = None,
                           amplitudes=(0.0, 0.6, 1.0, 1.3),
                           thetas=(-0.2, 0.0, 0.5, 1.5, 4.0, 8.0)) -> MixtureProposal:
    """Defensive mixture for shifted-field weights at moderate penalty.

    Smoothed measures tilted by a bump shift phi put mass both on spread
    low-amplitude fields and on inflated bumps u ~ c*phi; components place
    means on the amplitude ladder c*phi crossed with mass tilts.  With
    phi absent (or zero) this reduces to the centered tilt grid.
    """
    if phi is None or not np.any(phi.coeffs):
        return MixtureProposal(space, 1.0 / space.jb2, thetas)
    means, th = [], []
    for c in amplitudes:
        for t in thetas:
            means.append(c * phi.coeffs)
            th.append(t)
    return MixtureProposal(space, 1.0 / space.jb2, th, means=np.stack(means))


# ---------------------------------------------------------------------------
# serialization: int64 N then (Re, Im) float64 pairs, n ascending

def field_to_bytes(u: SpectralField) -> bytes:
    parts = [struct.pack("<q", u.space.N)]
    inter = np.empty(2 * u.space.n_modes, dtype="<f8")
    inter[0::2] = u.coeffs.real
    inter[1::2] = u.coeffs.imag
    parts.append(inter.tobytes())
    return b"".join(parts)


def field_from_bytes(data: bytes, q_os: int = 4) -> SpectralField:
    (N,) = struct.unpack_from("<q", data, 0)
    space = SpectralSpace(int(N), q_os=q_os)
    inter = np.frombuffer(data, dtype="<f8", offset=8, count=2 * space.n_modes)
    return SpectralField(space, inter[0::2] + 1j * inter[1::2])


def field_to_csv_row(u: SpectralField) -> str:
    vals = [str(u.space.N)]
    for c in u.coeffs:
        vals.append(repr(float(c.real)))
        vals.append(repr(float(c.imag)))
    return ",".join(vals)


def field_from_csv_row(row: str, q_os: int = 4) -> SpectralField:
    toks = row.strip().split(",")
    N = int(toks[0])
    space = SpectralSpace(N, q_os=q_os)
    vals = np.array([float(t) for t in toks[1:]])
    return SpectralField(space, vals[0::2] + 1j * vals[1::2])
