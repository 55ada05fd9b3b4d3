"""Linearised flow of the effective Hamiltonian and the moving Hagedorn frame.

Under ``exp(-i Weyl(K) t / hbar)`` a Hagedorn state keeps its Gaussian shape,
with frame vector transported by ``S(t) = exp(t Omega K2)`` and complex centre
``Phi(t, z) = S(t) z + v(t)``. The propagated ground state is

    U(t)|0, a0, z0> = exp(i alpha / hbar) sqrt(N) |0, a_t, z_t>,

and excited states expand as triangular combinations of the moving basis
(see :mod:`lindjump.hagedorn`).

The action ``alpha`` is obtained from the exact complex-centre thawed Gaussian
``Q^{-1/2} exp{(i/hbar)[B (x - q_c)^2 / 2 + p_c (x - q_c) + sigma]}`` where
``(Q, P) = S a0``, ``B = P/Q``, ``(q_c, p_c) = Phi`` and
``d sigma / dt = p_c dq_c/dt - K(q_c, p_c)``. The moments ``q^2, qp, p^2, q, p``
obey a closed linear system, so ``sigma`` is integrated exactly by a 7x7
matrix exponential.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import OMEGA, as_point, as_vec2, check_normalised, hermitian_form, mat_exp_2x2


@dataclass(frozen=True)
class LinearizedFlow:
    S: np.ndarray
    v: np.ndarray
    t: float

    def phi(self, z):
        """Complex centre ``Phi(t, z) = S z + v``."""
        return self.S @ np.asarray(z) + self.v


@dataclass(frozen=True)
class HagedornFrame:
    """Frame data at time ``t`` relative to the initial frame ``(a0, z0)``.

    ``amplitude`` is ``exp(i alpha/hbar) sqrt(N)``, the coefficient of the
    moving ground state in the propagated initial ground state.
    """

    a: np.ndarray
    z: np.ndarray
    N: float
    M: complex
    h0: complex
    alpha: complex
    t: float
    S: np.ndarray
    phi: np.ndarray
    hbar: float = 1.0

    @property
    def amplitude(self):
        return np.exp(1j * self.alpha / self.hbar) * np.sqrt(self.N)

    @property
    def J(self):
        return -np.outer(self.a, self.a.conj()).real @ OMEGA


def linearized_flow(K, t):
    """``S(t) = exp(t Omega K2)`` and ``v(t) = int_0^t S(t-s) k1 ds``."""
    S = mat_exp_2x2(K.generator, t)
    A = np.zeros((3, 3), dtype=complex)
    A[:2, :2], A[:2, 2] = K.generator, K.k1
    v = expm(A * t)[:2, 2]
    return LinearizedFlow(S, v, float(t))


def _action_generator(K):
    """7x7 generator for y = [q^2, qp, p^2, q, p, 1, sigma] along the complex flow."""
    F = K.generator
    Km = K.K2
    k = K.k1
    A = np.zeros((7, 7), dtype=complex)
    A[0, [0, 1, 3]] = 2 * F[0, 0], 2 * F[0, 1], 2 * k[0]
    A[1, [0, 1, 2, 3, 4]] = F[1, 0], F[0, 0] + F[1, 1], F[0, 1], k[1], k[0]
    A[2, [1, 2, 4]] = 2 * F[1, 0], 2 * F[1, 1], 2 * k[1]
    A[3, [3, 4, 5]] = F[0, 0], F[0, 1], k[0]
    A[4, [3, 4, 5]] = F[1, 0], F[1, 1], k[1]
    # sigma' = p q' - K(q, p)
    A[6, [0, 1, 2, 3, 5]] = (
        -0.5 * Km[0, 0], F[0, 0] - Km[0, 1], F[0, 1] - 0.5 * Km[1, 1], k[1], -K.k0,
    )
    return A


def _branch_signs(a0, K, times):
    """Sign relating the continuous ``Q^{-1/2}`` to the principal branch of ``a_q^{-1/2}``."""
    times = np.asarray(times, dtype=float)
    tmax = float(times.max()) if times.size else 0.0
    if tmax <= 0:
        return np.ones(times.shape)
    rate = np.abs(np.linalg.eigvals(K.generator)).max()
    n_fine = int(np.ceil(tmax * max(rate, 1.0) / 0.05)) + 2
    fine = np.union1d(np.linspace(0.0, tmax, n_fine), times)
    Q = (mat_exp_2x2(K.generator, fine) @ a0)[:, 0]
    cont = np.unwrap(np.angle(Q))
    cont += np.angle(a0[0]) - cont[0]
    turns = np.rint((cont - np.angle(Q)) / (2 * np.pi)).astype(int)
    k = turns[np.searchsorted(fine, times)]
    return np.where(k % 2 == 0, 1.0, -1.0)


def propagate_frames(a0, z0, K, hbar, times, track_branch=True):
    """Frames at each of ``times`` (non-negative), sharing one exact recursion.

    Successive times are reached by multiplying cached exponentials of the
    7x7 action generator, so uniform grids cost one ``expm`` in total.
    With ``track_branch=False`` the sign of the square-root prefactor is not
    followed, so ``alpha`` is only correct modulo ``hbar pi``; moduli such as
    :func:`frame_norm_factor` are unaffected.
    """
    a0 = as_vec2(a0)
    check_normalised(a0, 1e-10)
    z0 = as_point(z0)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("frame times must be non-negative")
    order = np.argsort(times, kind="stable")
    gen = _action_generator(K)
    q0, p0 = z0
    y = np.array([q0 * q0, q0 * p0, p0 * p0, q0, p0, 1.0, 0.5 * p0 * q0], dtype=complex)
    cache = {}
    ys = np.empty((times.size, 7), dtype=complex)
    t_prev = 0.0
    for i in order:
        dt = times[i] - t_prev
        if dt > 0:
            key = round(dt, 14)
            if key not in cache:
                cache[key] = expm(gen * dt)
            y = cache[key] @ y
        ys[i] = y
        t_prev = times[i]

    S = mat_exp_2x2(K.generator, times)
    signs = _branch_signs(a0, K, times) if track_branch else np.ones(times.shape)
    a0bar = a0.conj()
    frames = []
    for i, t in enumerate(times):
        frames.append(_assemble(a0, a0bar, z0, K, hbar, t, S[i], ys[i], signs[i]))
    return frames


def _assemble(a0, a0bar, z0, K, hbar, t, S, y, sign):
    Sa = S @ a0
    Sab = S @ a0bar
    hss = hermitian_form(Sa, Sa).real
    if not hss > 0:
        raise FloatingPointError(f"propagated frame lost normalisability at t={t}")
    N = hss**-0.5
    M = hermitian_form(Sa, Sab) / hss
    a = N * Sa
    phi = y[3:5].copy()
    J = -np.outer(a, a.conj()).real @ OMEGA
    z = phi.real + J @ phi.imag
    h0 = -1j / np.sqrt(2 * hbar) * (Sab @ OMEGA @ (z - phi))

    B = Sa[1] / Sa[0]
    qc, pc = phi
    q, p = z
    delta = 0.5 * B * qc * qc - pc * qc + y[6] - 0.5 * B * q * q + 0.5 * p * q
    # constant offset between H - (i/2) L^+ L and Weyl(K)
    alpha = delta - K.trace_correction * t
    if sign < 0:
        alpha = alpha + hbar * np.pi
    return HagedornFrame(a=a, z=z, N=N, M=M, h0=h0, alpha=alpha, t=float(t), S=S, phi=phi, hbar=hbar)


def propagate_frame(a0, z0, K, hbar, t, track_branch=True):
    """Frame at a single time ``t``."""
    return propagate_frames(a0, z0, K, hbar, [t], track_branch)[0]


def frame_norm_factor(frame, hbar=None):
    """Norm of the propagated normalised ground state, ``sqrt(N) |exp(i alpha/hbar)|``."""
    hbar = frame.hbar if hbar is None else hbar
    return float(np.sqrt(frame.N) * np.exp(-np.imag(frame.alpha) / hbar))


def relative_frame(frame, K, tau):
    """Frame obtained by re-seating at ``frame`` and propagating for ``tau``."""
    return propagate_frame(frame.a, frame.z, K, frame.hbar, tau)


def h0_from_frame_formula(a0, z0, frame, hbar):
    """Displacement coefficient from its closed expression in N and M.

    Valid when the linear part ``k1`` of K vanishes, so that ``Phi = S z0``.
    """
    z0 = np.asarray(z0, dtype=complex)
    return np.sqrt(2 / hbar) * (
        hermitian_form(a0, z0) * (frame.N**2 - 1) + hermitian_form(np.conj(a0), z0) * frame.M
    )
