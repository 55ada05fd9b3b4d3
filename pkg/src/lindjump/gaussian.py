"""Gaussian states: width matrix, covariance, Hagedorn vector and Wigner grids.

A Gaussian Wigner function is

    W(z) = sqrt(det G)/(pi hbar) exp(-(1/hbar) dz.G dz),   dz = z - centre,

so the covariance is ``Sigma = (hbar/2) G^{-1}``. The state is pure iff
``det G = 1``, in which case ``G = Omega^T Re(a a^+) Omega`` for a normalised
Hagedorn vector ``a``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .core import OMEGA, as_point, as_vec2, check_normalised

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class GaussianState:
    centre: np.ndarray
    G: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float).reshape(2, 2)
        if not np.allclose(G, G.T, rtol=0, atol=1e-10 * max(1.0, np.abs(G).max())):
            raise ValueError("G must be symmetric")
        G = 0.5 * (G + G.T)
        if G[0, 0] <= 0 or np.linalg.det(G) <= 0:
            raise ValueError("G must be positive definite")
        object.__setattr__(self, "centre", as_point(self.centre))
        object.__setattr__(self, "G", G)

    @property
    def is_pure(self):
        return abs(np.linalg.det(self.G) - 1.0) < 1e-8

    @classmethod
    def squeezed(cls, zeta=2.0, centre=(2.0, 0.0)):
        """Position-squeezed state ``G = diag(zeta, 1/zeta)``."""
        return cls(centre, np.diag([zeta, 1.0 / zeta]))


@dataclass(frozen=True)
class WignerGrid:
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    values: np.ndarray  # shape (np, nq), row index runs over p

    @property
    def nq(self):
        return self.values.shape[1]

    @property
    def np(self):
        return self.values.shape[0]

    @property
    def q(self):
        return np.linspace(self.q_min, self.q_max, self.nq)

    @property
    def p(self):
        return np.linspace(self.p_min, self.p_max, self.np)

    def integral(self):
        dq = (self.q_max - self.q_min) / (self.nq - 1)
        dp = (self.p_max - self.p_min) / (self.np - 1)
        return float(self.values.sum() * dq * dp)


def covariance_from_g(state, hbar=1.0):
    """Sigma = (hbar/2) G^{-1}."""
    G = state.G if isinstance(state, GaussianState) else np.asarray(state, dtype=float)
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if det < SINGULAR_TOL:
        raise ValueError(f"G is singular (det = {det:.3e})")
    inv = np.array([[G[1, 1], -G[0, 1]], [-G[1, 0], G[0, 0]]]) / det
    return 0.5 * hbar * inv


def g_from_covariance(sigma, hbar=1.0):
    """Inverse of :func:`covariance_from_g`."""
    return 0.5 * hbar * np.linalg.inv(np.asarray(sigma, dtype=float))


def g_from_hagedorn(a):
    """Width matrix of the Gaussian with Hagedorn vector ``a``."""
    a = as_vec2(a)
    check_normalised(a)
    G = OMEGA.T @ np.outer(a, a.conj()).real @ OMEGA
    return 0.5 * (G + G.T)


def hagedorn_from_g(G, tol=1e-8):
    """Normalised Hagedorn vector with ``g_from_hagedorn(a) = G`` and ``a_q > 0``."""
    G = np.asarray(G, dtype=float).reshape(2, 2)
    det = np.linalg.det(G)
    if abs(det - 1.0) > tol:
        raise ValueError(f"G does not describe a pure state (det G = {det!r})")
    # Re(a a^+) = Omega G Omega^T, Im(a a^+) = Omega^T
    X = OMEGA @ G @ OMEGA.T
    aq = np.sqrt(X[0, 0])
    return np.array([aq, X[0, 1] / aq + 1j / aq])


def wigner_gaussian(state, hbar, q, p):
    """Evaluate the Gaussian Wigner function on the mesh spanned by ``q`` and ``p``.

    Returns an array of shape ``(len(p), len(q))``.
    """
    Q, P = np.meshgrid(np.asarray(q, float) - state.centre[0], np.asarray(p, float) - state.centre[1])
    G = state.G
    quad = G[0, 0] * Q * Q + 2 * G[0, 1] * Q * P + G[1, 1] * P * P
    return np.sqrt(np.linalg.det(G)) / (np.pi * hbar) * np.exp(-quad / hbar)


def default_grid_spec(state, hbar=1.0, n=257, width=6.0):
    """Grid centred on the state, ``width`` standard deviations each side."""
    sig = covariance_from_g(state, hbar)
    sq, sp = width * np.sqrt(sig[0, 0]), width * np.sqrt(sig[1, 1])
    c = state.centre
    return dict(q_min=c[0] - sq, q_max=c[0] + sq, p_min=c[1] - sp, p_max=c[1] + sp, nq=n, np=n)


def wigner_gaussian_on_grid(state, hbar=1.0, grid=None):
    """Tabulate the Wigner function on a rectangular grid.

    ``grid`` is a mapping with keys ``q_min, q_max, p_min, p_max, nq, np``;
    the default covers six standard deviations with 257 points per axis.
    """
    grid = default_grid_spec(state, hbar) if grid is None else grid
    q = np.linspace(grid["q_min"], grid["q_max"], grid["nq"])
    p = np.linspace(grid["p_min"], grid["p_max"], grid["np"])
    out = WignerGrid(grid["q_min"], grid["q_max"], grid["p_min"], grid["p_max"],
                     wigner_gaussian(state, hbar, q, p))
    mass = out.integral()
    if abs(mass - 1.0) > 1e-3:
        warnings.warn(f"Wigner grid too coarse or too small: integral = {mass:.6f}", stacklevel=2)
    return out
