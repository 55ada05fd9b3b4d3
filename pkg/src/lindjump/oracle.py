"""Dense truncated-Fock reference implementations.

Everything here is brute force on the number basis ``|0>, ..., |D-1>`` and
serves as ground truth for the Gaussian and Hagedorn machinery. Operators are
built in dimension ``D + 4`` and cropped, so that products such as ``x^2`` are
exact on the retained block.
"""

import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hagedorn import eval_basis_stack

log = logging.getLogger(__name__)

Frame = namedtuple("Frame", "a z")
FOCK_FRAME = Frame(np.array([1.0, 1j]), np.zeros(2))

LEAK_TOL = 1e-6


class TruncationLeakError(RuntimeError):
    """Population reached the top of the truncated number basis."""


@dataclass(frozen=True)
class FockOperators:
    D: int
    hbar: float
    a: np.ndarray
    x: np.ndarray
    p: np.ndarray
    H: np.ndarray
    L: np.ndarray
    LdL: np.ndarray

    @property
    def K(self):
        """Non-Hermitian generator ``H - (i/2) L^+ L``."""
        return self.H - 0.5j * self.LdL


def fock_operators(model, D=96):
    """Dense operators of ``model`` on a number basis of dimension ``D``."""
    if D < 8:
        raise ValueError("truncation dimension must be at least 8")
    hbar = model.hbar
    E = D + 4
    a = np.diag(np.sqrt(np.arange(1, E)), 1).astype(complex)
    ad = a.conj().T
    x = np.sqrt(hbar / 2) * (a + ad)
    p = 1j * np.sqrt(hbar / 2) * (ad - a)
    ham, lin = model.hamiltonian, model.lindbladian
    H2 = ham.H2
    eye = np.eye(E)
    # Weyl ordering of the quadratic form
    H = 0.5 * (H2[0, 0] * x @ x + H2[1, 1] * p @ p + H2[0, 1] * (x @ p + p @ x))
    H = H + ham.h1[0] * x + ham.h1[1] * p + ham.h0 * eye
    L = lin.gradL[0] * x + lin.gradL[1] * p + lin.L0 * eye
    LdL = L.conj().T @ L
    c = slice(0, D)
    return FockOperators(D, hbar, a[c, c], x[c, c], p[c, c], H[c, c], L[c, c], LdL[c, c])


def fock_basis_matrix(frame, hbar, n_max, D, n_grid=4096, half_width=None):
    """Fock coefficients of the Hagedorn states ``|n, a, z>``, ``n <= n_max``.

    Column ``n`` holds ``<k|n, a, z>`` for ``k < D``, computed by quadrature.
    """
    if half_width is None:
        half_width = np.sqrt(2 * hbar * (D + 8)) + 8 * np.sqrt(hbar) + abs(frame.z[0])
        half_width += 4 * np.sqrt(hbar) * abs(frame.a[0])
    x = np.linspace(-half_width, half_width, n_grid)
    dx = x[1] - x[0]
    fock = eval_basis_stack(D - 1, FOCK_FRAME, hbar, x)
    hag = eval_basis_stack(n_max, frame, hbar, x)
    return fock.conj() @ hag.T * dx


def gaussian_to_fock(state, hbar, D, **kw):
    """Fock vector of the pure Gaussian ``state`` (det G = 1)."""
    from .gaussian import hagedorn_from_g

    return fock_basis_matrix(Frame(hagedorn_from_g(state.G), state.centre), hbar, 0, D, **kw)[:, 0]


def check_leak(vec_or_rho, tol=LEAK_TOL, top=4):
    arr = np.asarray(vec_or_rho)
    if arr.ndim == 1:
        pop = np.abs(arr[-top:]) ** 2
        total = np.vdot(arr, arr).real
    else:
        pop = np.abs(np.diag(arr)[-top:])
        total = abs(np.trace(arr))
    leak = pop.sum() / total
    if leak > tol:
        raise TruncationLeakError(f"top-level population {leak:.2e} exceeds {tol:.0e}")
    return leak


def lindblad_rhs(rho, ops):
    """``d rho/dt`` for the master equation with one Lindblad operator."""
    L, Ld = ops.L, ops.L.conj().T
    comm = ops.H @ rho - rho @ ops.H
    diss = L @ rho @ Ld - 0.5 * (ops.LdL @ rho + rho @ ops.LdL)
    return (-1j * comm + diss) / ops.hbar


def fock_lindblad_evolve(rho0, ops, t, dt=5e-3, sample_times=None, leak_tol=LEAK_TOL):
    """RK4 integration of the master equation.

    Returns the final density matrix, or a list of density matrices at
    ``sample_times`` when given (each must be a multiple of ``dt``).
    """
    rho = np.array(rho0, dtype=complex)
    n = int(round(t / dt))
    samples = {} if sample_times is None else {int(round(s / dt)): s for s in sample_times}
    out = []
    if 0 in samples:
        out.append(rho.copy())
    for k in range(1, n + 1):
        k1 = lindblad_rhs(rho, ops)
        k2 = lindblad_rhs(rho + 0.5 * dt * k1, ops)
        k3 = lindblad_rhs(rho + 0.5 * dt * k2, ops)
        k4 = lindblad_rhs(rho + dt * k3, ops)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if k in samples:
            check_leak(rho, leak_tol)
            out.append(rho.copy())
    check_leak(rho, leak_tol)
    return out if sample_times is not None else rho


def nonhermitian_propagator(ops, t):
    """Dense ``exp(-i (H - (i/2) L^+ L) t / hbar)``."""
    return expm(-1j * ops.K * t / ops.hbar)


def expectation_moments(psi_or_rho, ops):
    """Mean ``(<x>, <p>)`` and symmetrised covariance of a state vector or density matrix."""
    arr = np.asarray(psi_or_rho)
    rho = np.outer(arr, arr.conj()) / np.vdot(arr, arr).real if arr.ndim == 1 else arr / np.trace(arr)
    ev = lambda A: np.trace(rho @ A).real
    x, p = ops.x, ops.p
    mx, mp = ev(x), ev(p)
    vxx = ev(x @ x) - mx * mx
    vpp = ev(p @ p) - mp * mp
    vxp = 0.5 * ev(x @ p + p @ x) - mx * mp
    return np.array([mx, mp]), np.array([[vxx, vxp], [vxp, vpp]])


@dataclass
class FockJumpRecord:
    times: np.ndarray
    states: np.ndarray  # normalised, (n_times, D)
    norms: np.ndarray  # unnormalised squared norms before the final pass
    jump_times: list


def fock_jump_trajectory(psi0, ops, t_end, dt, driver=None, step="rk4", forced_jumps=None,
                         leak_tol=LEAK_TOL):
    """Naive quantum-jump trajectory on the number basis.

    With a ``driver`` the classic loop is followed: draw ``R``; at every grid
    step jump if ``R >= |psi|^2`` (the jump occupies that step), otherwise take
    one deterministic step; finally normalise every stored state.

    With ``forced_jumps`` (times on the grid) no random numbers are used: the
    state is propagated without jumps and ``L`` is applied exactly at each
    listed time, which is the reference for comparing schemes on a shared
    jump record.

    ``step`` selects the deterministic update: ``"euler"`` (first order, as in
    the textbook loop), ``"rk4"`` or ``"expm"`` (exact for the truncated
    generator).
    """
    hbar = ops.hbar
    G = -1j * ops.K / hbar
    if step == "expm":
        P = expm(G * dt)
        advance = lambda v: P @ v
    elif step == "rk4":
        def advance(v):
            k1 = G @ v
            k2 = G @ (v + 0.5 * dt * k1)
            k3 = G @ (v + 0.5 * dt * k2)
            k4 = G @ (v + dt * k3)
            return v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    elif step == "euler":
        advance = lambda v: v + dt * (G @ v)
    else:
        raise ValueError(f"unknown step {step!r}")

    n = int(round(t_end / dt))
    psi = np.array(psi0, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    states = np.empty((n + 1, psi.size), dtype=complex)
    states[0] = psi
    jumps = []
    if forced_jumps is not None:
        forced = {int(round(tj / dt)): tj for tj in forced_jumps}
        for k in range(n):
            if k in forced:
                psi = _jump(ops.L, psi)
                jumps.append(k * dt)
            psi = advance(psi)
            states[k + 1] = psi
        if n in forced:
            psi = _jump(ops.L, psi)
            jumps.append(n * dt)
            states[n] = psi
    else:
        R = driver.uniform()
        for k in range(n):
            if R >= np.vdot(psi, psi).real:
                psi = _jump(ops.L, psi)
                jumps.append((k + 1) * dt)
                R = driver.uniform()
            else:
                psi = advance(psi)
            states[k + 1] = psi
    check_leak(psi, leak_tol)
    norms = np.einsum("ij,ij->i", states.conj(), states).real
    states = states / np.sqrt(norms)[:, None]
    return FockJumpRecord(dt * np.arange(n + 1), states, norms, jumps)


def _jump(L, psi):
    phi = L @ psi
    nrm = np.linalg.norm(phi)
    if nrm == 0:
        raise ValueError("jump from a dark state: L psi = 0")
    return phi / nrm


def fock_sse_trajectory(psi0, ops, t_end, dt, driver, increments=None, leak_tol=LEAK_TOL):
    """Euler-Maruyama integration of the stochastic Schroedinger equation.

    The state is renormalised after every step. ``increments`` (shape
    ``(n, 2)``) can be supplied to share a noise path with another solver;
    otherwise they are drawn from ``driver``.
    Returns ``(times, states)``.
    """
    hbar = ops.hbar
    n = int(round(t_end / dt))
    dW = driver.increments(dt, n) if increments is None else np.asarray(increments)
    L, Ld = ops.L, ops.L.conj().T
    Hn = -1j * ops.H - 0.5 * ops.LdL
    psi = np.array(psi0, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    states = np.empty((n + 1, psi.size), dtype=complex)
    states[0] = psi
    c = 1.0 / np.sqrt(2 * hbar)
    for k in range(n):
        Lpsi = L @ psi
        l = np.vdot(psi, Lpsi)
        drift = (Hn @ psi + np.conj(l) * Lpsi - 0.5 * abs(l) ** 2 * psi) / hbar
        noise = c * (Lpsi - l * psi) * (dW[k, 0] + 1j * dW[k, 1])
        psi = psi + drift * dt + noise
        psi = psi / np.linalg.norm(psi)
        states[k + 1] = psi
    check_leak(psi, leak_tol)
    return dt * np.arange(n + 1), states


def ladder_power_expansion(h_plus, h_minus, h0, n_max, dim=None):
    """Rows of ``(h_plus a^+ + h_minus a + h0)^n |0> / sqrt(n!)`` by explicit matrix powers."""
    dim = 2 * n_max + 4 if dim is None else dim
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    X = h_plus * a.conj().T + h_minus * a + h0 * np.eye(dim)
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    rows = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    fact = 1.0
    for n in range(n_max + 1):
        if n:
            v = X @ v
            fact *= n
        rows[n] = v[: n_max + 1] / np.sqrt(fact)
    return rows
