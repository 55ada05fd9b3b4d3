"""Time evolution of Gaussian parameters (centre, G).

Three flows are provided:

* Lindblad: deterministic, the state becomes mixed (det G decreases).
* SSE: stochastic centre driven by two real Wiener increments; G follows a
  deterministic Riccati flow that keeps the state pure.
* Non-Hermitian: the no-jump evolution between quantum jumps. Its G-flow is
  the same Riccati flow as for the SSE.

With ``Gamma = Re(gradL gradL^+)`` and ``Im = Im(gradL gradL^+)`` the centre drift
of the Lindblad and SSE flows is ``F z + b`` where ``F = Omega (H2 - Im)``.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import OMEGA, mat_exp_2x2
from .gaussian import GaussianState, hagedorn_from_g
from .model import build_effective_k

log = logging.getLogger(__name__)


class NoiseDriver:
    """Reproducible per-trajectory random stream.

    The stream depends only on ``(seed, index)``: a ``SeedSequence`` built from
    both feeds a counter-based Philox generator, so trajectories can be run in
    any order or on any worker.
    """

    def __init__(self, seed=0, index=0):
        self.seed = int(seed)
        self.index = int(index)
        self.rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, self.index])))
        self.steps = 0

    def increments(self, dt, n=None):
        """Return ``(dxi_R, dxi_I)`` with variance ``dt`` each.

        With ``n`` given, returns an array of shape ``(n, 2)``.
        """
        shape = (2,) if n is None else (n, 2)
        self.steps += 1 if n is None else n
        return np.sqrt(dt) * self.rng.standard_normal(shape)

    def uniform(self):
        return self.rng.random()


@dataclass(frozen=True)
class ParamTrajectory:
    times: np.ndarray
    centres: np.ndarray  # (n, 2)
    G: np.ndarray  # (n, 2, 2)
    method: str

    def covariances(self, hbar=1.0):
        return 0.5 * hbar * np.linalg.inv(self.G)

    def state(self, i):
        return GaussianState(self.centres[i], self.G[i])


def _drift_parts(model):
    ham, lin = model.hamiltonian, model.lindbladian
    F = OMEGA @ (ham.H2 - lin.im_matrix)
    b = OMEGA @ ham.h1 + OMEGA @ (lin.L0 * np.conj(lin.gradL)).imag
    return F, b


def lindblad_rhs(state, model):
    """Right-hand side ``(dz/dt, dG/dt)`` of the Gaussian Lindblad flow."""
    H2 = model.hamiltonian.H2
    Gam, Im = model.lindbladian.gamma_matrix, model.lindbladian.im_matrix
    F, b = _drift_parts(model)
    G = state.G
    dG = (H2 + Im) @ OMEGA @ G - G @ OMEGA @ (H2 - Im) + 2 * G @ OMEGA @ Gam @ OMEGA @ G
    return F @ state.centre + b, dG


def _riccati_rhs(G, model):
    H2 = model.hamiltonian.H2
    Gam = model.lindbladian.gamma_matrix
    return -G @ OMEGA @ H2 + H2 @ OMEGA @ G + Gam + G @ OMEGA @ Gam @ OMEGA @ G


def nonhermitian_rhs(state, model):
    """Right-hand side of the no-jump (non-Hermitian) parameter flow."""
    ham, lin = model.hamiltonian, model.lindbladian
    z, G = state.centre, state.G
    # Re(conj(L) gradL) at z
    damp = lin.gamma_matrix @ z + (np.conj(lin.L0) * lin.gradL).real
    dz = OMEGA @ ham.grad(z) - np.linalg.solve(G, damp)
    return dz, _riccati_rhs(G, model)


def _van_loan(F, Q, t):
    """Return (exp(F t), int_0^t exp(F s) Q exp(F s)^T ds)."""
    C = np.zeros((4, 4))
    C[:2, :2] = -F
    C[:2, 2:] = Q
    C[2:, 2:] = F.T
    E = expm(C * t)
    Ft = E[2:, 2:].T
    return Ft, Ft @ E[:2, 2:]


def lindblad_closed_form(state, model, t):
    """Exact Gaussian Lindblad solution at time ``t``.

    The inverse width ``X = G^{-1}`` obeys the linear equation
    ``dX/dt = F X + X F^T + 2 Omega Gamma Omega^T``, solved with a Van Loan
    block exponential. Equivalently ``G(t) = [2D + (E^T(-t) G0 E(-t))^{-1}]^{-1}``
    with ``E = exp(F t)`` and ``D`` the integral of the diffusion term.
    """
    F, b = _drift_parts(model)
    Q = 2 * OMEGA @ model.lindbladian.gamma_matrix @ OMEGA.T
    E, D = _van_loan(F, Q, t)
    X = E @ np.linalg.inv(state.G) @ E.T + D
    # centre: augmented exponential handles singular F
    A = np.zeros((3, 3))
    A[:2, :2], A[:2, 2] = F, b
    zt = (expm(A * t) @ np.append(state.centre, 1.0))[:2]
    G = np.linalg.inv(X)
    return GaussianState(zt, 0.5 * (G + G.T))


def lindblad_g_closed_form(G0, model, t):
    """Width matrix G(t) of the Lindblad flow."""
    return lindblad_closed_form(GaussianState(np.zeros(2), G0), model, t).G


def sse_g_closed_form(G0, model, t, _eps=1e-9):
    """Width matrix along the SSE / non-Hermitian flow.

    With ``S = exp(t Omega K2)`` split as ``S = R + i I``,

        G(t) = (-Omega R Omega G0 + Omega I) (I Omega G0 + R)^{-1}.

    ``t`` may be an array, giving shape ``t.shape + (2, 2)``.
    """
    G0 = np.asarray(G0, dtype=float)
    K = build_effective_k(model)
    S = mat_exp_2x2(K.generator, t)
    R, I = S.real, S.imag
    num = -OMEGA @ R @ OMEGA @ G0 + OMEGA @ I
    den = I @ OMEGA @ G0 + R
    det = den[..., 0, 0] * den[..., 1, 1] - den[..., 0, 1] * den[..., 1, 0]
    if np.any(np.abs(det) < 1e-14):
        log.warning("singular denominator in G(t); shifting t by %g", _eps)
        return sse_g_closed_form(G0, model, np.asarray(t) + _eps)
    G = num @ np.linalg.inv(den)
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def sse_g_from_frame(G0, model, t):
    """Same flow as :func:`sse_g_closed_form`, via the propagated Hagedorn vector."""
    a0 = hagedorn_from_g(G0)
    K = build_effective_k(model)
    b = mat_exp_2x2(K.generator, t) @ a0
    # h(b, b) = Im(conj(b_q) b_p)
    norm = np.imag(np.conj(b[..., 0]) * b[..., 1])
    re = np.einsum("...i,...j->...ij", b, b.conj()).real / norm[..., None, None]
    return OMEGA.T @ re @ OMEGA


def sse_noise_matrix(G, model):
    """Columns multiplying ``dxi_R`` and ``dxi_I`` in the SSE centre equation.

    Returns an array of shape ``G.shape[:-2] + (2, 2)`` whose last axis indexes
    the two noise channels.
    """
    g = model.lindbladian.gradL
    gR, gI = g.real, g.imag
    Ginv = np.linalg.inv(G)
    c = np.sqrt(model.hbar / 2)
    colR = c * (Ginv @ gR - OMEGA @ gI)
    colI = -c * (Ginv @ gI + OMEGA @ gR)
    return np.stack([colR, colI], axis=-1)


def sse_step(state, model, dt, noise, max_halvings=10):
    """One Euler-Maruyama step of the Gaussian SSE.

    ``noise`` is either a :class:`NoiseDriver` or a pre-drawn increment pair.
    G is advanced with one RK4 step of its deterministic flow; if the result
    is not positive definite the step is redone as ``2^k`` sub-steps sharing
    the drawn increment equally.
    """
    dW = noise.increments(dt) if isinstance(noise, NoiseDriver) else np.asarray(noise, float)
    F, b = _drift_parts(model)
    for k in range(max_halvings + 1):
        n_sub = 2**k
        h = dt / n_sub
        z, G = state.centre.copy(), state.G.copy()
        ok = True
        for _ in range(n_sub):
            z = z + (F @ z + b) * h + sse_noise_matrix(G, model) @ (dW / n_sub)
            G = _rk4_matrix_step(lambda X: _riccati_rhs(X, model), G, h)
            if not _is_spd(G):
                ok = False
                break
        if ok:
            return GaussianState(z, G)
        log.debug("non-SPD G after SSE step; halving dt (%d)", k + 1)
    raise FloatingPointError(f"SSE step failed to keep G positive definite after {max_halvings} halvings")


def _is_spd(G):
    return G[0, 0] > 0 and G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0] > 0


def _rk4_matrix_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rhs, y0, t_end, dt, t0=0.0, method="rk4", noise=None, diffusion=None):
    """Fixed-step integrator returning ``(times, samples)``.

    Parameters
    ----------
    rhs : callable ``rhs(t, y)``
        Drift of the flow.
    y0 : array_like
    method : {"rk4", "euler-maruyama"}
        For Euler-Maruyama, ``diffusion(t, y)`` returns the matrix applied to
        ``noise.increments(dt)``.
    """
    n = int(round((t_end - t0) / dt))
    if n < 0 or abs(t0 + n * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"dt={dt} does not divide the interval [{t0}, {t_end}]")
    y = np.array(y0, dtype=float if np.isrealobj(y0) else complex)
    out = np.empty((n + 1,) + y.shape, dtype=y.dtype)
    out[0] = y
    times = t0 + dt * np.arange(n + 1)
    for i in range(n):
        t = times[i]
        try:
            if method == "rk4":
                y = _rk4(rhs, t, y, dt)
            elif method == "euler-maruyama":
                y = y + rhs(t, y) * dt + diffusion(t, y) @ noise.increments(dt)
            else:
                raise ValueError(f"unknown method {method!r}")
        except FloatingPointError as exc:
            raise FloatingPointError(f"step failed at t={t:.6g}: {exc}") from exc
        out[i + 1] = y
    return times, out


def _rk4(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _pack(state):
    return np.concatenate([state.centre, state.G.ravel()])


def _unpack(y):
    return y[:2], y[2:].reshape(2, 2)


def integrate_params(rhs_fn, state, model, t_end, dt, method_tag):
    """RK4 integration of a parameter flow such as :func:`lindblad_rhs`."""

    def rhs(t, y):
        z, G = _unpack(y)
        dz, dG = rhs_fn(_RawState(z, G), model)
        return np.concatenate([dz, dG.ravel()])

    times, ys = integrate(rhs, _pack(state), t_end, dt)
    return ParamTrajectory(times, ys[:, :2], ys[:, 2:].reshape(-1, 2, 2), method_tag)


class _RawState:
    """Unvalidated (centre, G) pair used inside integrators."""

    __slots__ = ("centre", "G")

    def __init__(self, centre, G):
        self.centre, self.G = centre, G


def run_sse(model, state, t_end, dt, driver, stride=1):
    """One Gaussian SSE trajectory.

    G is taken from its closed form at every step and only the centre is
    stepped with Euler-Maruyama (Ito, noise coefficient frozen at the start
    of the step).
    """
    n = int(round(t_end / dt))
    times = dt * np.arange(n + 1)
    G = sse_g_closed_form(state.G, model, times)
    B = sse_noise_matrix(G, model)
    F, b = _drift_parts(model)
    dW = driver.increments(dt, n)
    z = np.empty((n + 1, 2))
    z[0] = state.centre
    for i in range(n):
        z[i + 1] = z[i] + (F @ z[i] + b) * dt + B[i] @ dW[i]
    sl = slice(None, None, stride)
    return ParamTrajectory(times[sl], z[sl], G[sl], "sse")


__all__ = [
    "NoiseDriver", "ParamTrajectory", "lindblad_rhs", "nonhermitian_rhs", "lindblad_closed_form",
    "lindblad_g_closed_form", "sse_g_closed_form", "sse_g_from_frame", "sse_noise_matrix",
    "sse_step", "integrate", "integrate_params", "run_sse",
]
