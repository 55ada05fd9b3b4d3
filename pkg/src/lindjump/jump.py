"""Quantum-jump trajectories in a moving Hagedorn basis.

Between jumps the state evolves under ``exp(-i(H - (i/2)L^+L)t/hbar)``, which
maps the Hagedorn basis of a frame ``(a, z)`` triangularly onto the basis of
the propagated frame. A trajectory is therefore a short coefficient vector
plus frame data.

Scheme A keeps an orthonormal basis: after each jump the current frame
becomes the new origin, and jump times are found by bisection on the
survival function ``|U(tau) psi|^2``.

Scheme B keeps the propagated initial basis ``U(t)|n, a0, z0>`` for the whole
run. The coefficients stay constant between jumps and the survival function is
``c^+ O(t) c``. Jumps happen on a fixed time grid.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .flow import propagate_frame, propagate_frames
from .gaussian import hagedorn_from_g
from .hagedorn import (
    b_apply, b_matrix, dual_b_matrix, eval_basis_stack, ladder_moments,
    l_matrix_orthonormal,
)
from .model import build_effective_k

log = logging.getLogger(__name__)

ROOT_TOL = 1e-10
MONOTONE_TOL = 1e-12
# Scheme B restarts its propagated basis once the coefficient norm exceeds this
REBASE_GROWTH = 1e3


class DarkStateJumpError(ValueError):
    """A jump was requested from a state annihilated by L."""


@dataclass
class JumpTrajectory:
    """Observable record of one quantum-jump trajectory.

    ``norms`` is the unnormalised survival norm squared since the last jump.
    ``jumps`` holds ``(t_J, frame, d)`` right after each jump, where ``d`` are
    the orthonormal coefficients in the basis of ``frame``. Scheme B also
    keeps ``evolved_coefficients``: ``(offset, c)`` after each jump, the
    coefficients in the basis propagated from grid index ``offset`` (0 unless
    the basis was re-seated).
    """

    times: np.ndarray
    centres: np.ndarray
    covariances: np.ndarray
    norms: np.ndarray
    n_jumps: np.ndarray
    jump_times: list
    final_frame: object
    final_coefficients: np.ndarray
    jumps: list = field(default_factory=list)
    evolved_coefficients: list = field(default_factory=list)
    scheme: str = ""

    def wavefunction(self, x, hbar, index=None):
        """Normalised position-space state at the end, or right after jump ``index``."""
        if index is None:
            frame, d = self.final_frame, self.final_coefficients
        else:
            _, frame, d = self.jumps[index]
        return coefficients_to_wavefunction(d, frame, hbar, x)


def coefficients_to_wavefunction(d, frame, hbar, x):
    d = np.asarray(d, dtype=complex)
    psi = d @ eval_basis_stack(d.size - 1, frame, hbar, x)
    return psi / np.linalg.norm(d)


def apply_jump_orthonormal(d, Lm):
    """``L d / |L d|`` for coefficients in an orthonormal basis."""
    d = np.asarray(d, dtype=complex)
    out = Lm[: d.size + 1, : d.size] @ d
    nrm = np.linalg.norm(out)
    if nrm == 0:
        raise DarkStateJumpError("L annihilates the current state")
    return out / nrm


def apply_jump_nonorthogonal(c, LL, O):
    """``LL c`` normalised in the metric ``O``; the active length grows by one."""
    c = np.asarray(c, dtype=complex)
    s = c.size
    out = LL[: s + 1, :s] @ c
    nrm2 = np.vdot(out, O[: s + 1, : s + 1] @ out).real
    if not nrm2 > 0:
        raise DarkStateJumpError("L annihilates the current state")
    return out / np.sqrt(nrm2)


def survival(frames, c):
    """``|U c|^2`` for coefficients ``c`` in the propagated basis, at each frame."""
    c = np.asarray(c, dtype=complex)
    if not frames:
        return np.empty(0)
    N = np.array([f.N for f in frames])
    M = np.array([f.M for f in frames])
    h0 = np.array([f.h0 for f in frames])
    amp2 = np.array([abs(f.amplitude) ** 2 for f in frames])
    return _survival_arrays(N, M, h0, amp2, c)


def _survival_arrays(N, M, h0, amp2, c):
    d = b_apply(N, M, h0, c)
    return amp2 * np.einsum("tm,tm->t", d.conj(), d).real


def _check_monotone(values, context):
    rise = np.diff(values)
    if rise.size and rise.max() > MONOTONE_TOL:
        k = int(np.argmax(rise))
        raise AssertionError(f"survival norm increased by {rise[k]:.3e} ({context}, step {k})")


def sample_jump_time(c, a, z, K, hbar, R, t_start, t_max, probe_step=0.05, chunk=20):
    """Time at which the survival ``|U(t - t_start) psi|^2`` first reaches ``R``.

    ``c`` are orthonormal coefficients in the frame ``(a, z)`` at ``t_start``
    (normalised). The survival is monotone, so the crossing is bracketed on a
    probe grid, scanned ``chunk`` probes at a time, and refined by bisection
    to ``ROOT_TOL``. Returns ``None`` if the survival at ``t_max`` still
    exceeds ``R``.
    """
    c = np.asarray(c, dtype=complex)
    if R >= 1.0:
        return t_start
    span = t_max - t_start
    if span <= 0:
        return None
    n = max(2, int(np.ceil(span / probe_step)) + 1)
    taus = np.linspace(0.0, span, n)
    k = None
    for lo_i in range(0, n, chunk):
        block = taus[lo_i: lo_i + chunk]
        f = survival(propagate_frames(a, z, K, hbar, block, track_branch=False), c)
        hit = np.nonzero(f <= R)[0]
        if hit.size:
            k = lo_i + hit[0]
            break
    if k is None:
        return None
    lo, hi = taus[k - 1], taus[k]
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        fm = survival([propagate_frame(a, z, K, hbar, mid, track_branch=False)], c)[0]
        if fm <= R:
            hi = mid
        else:
            lo = mid
    return t_start + hi


def _initial(model, state):
    if not state.is_pure:
        raise ValueError("quantum-jump trajectories need a pure initial Gaussian")
    return hagedorn_from_g(state.G), state.centre.copy()


def _record(frame, d, hbar):
    mean, cov = ladder_moments(d, frame, hbar)
    return mean, cov


def run_scheme_a(model, state, t_end, driver=None, output_times=None, forced_jumps=None,
                 probe_step=0.05, check_monotone=True, max_jumps=None):
    """Event-driven jump trajectory with an orthonormal moving basis.

    Either ``driver`` supplies the uniform thresholds, or ``forced_jumps`` fixes
    the jump times (no random numbers are drawn). With ``max_jumps`` the run
    stops right after that many jumps; output times beyond it are not filled
    and the record is truncated to the ones reached.
    """
    hbar = model.hbar
    K = build_effective_k(model)
    lin = model.lindbladian
    a, z = _initial(model, state)
    out_t = np.linspace(0, t_end, 101) if output_times is None else np.asarray(output_times, float)
    n_out = out_t.size
    centres = np.empty((n_out, 2))
    covs = np.empty((n_out, 2, 2))
    norms = np.empty(n_out)
    counts = np.zeros(n_out, dtype=int)
    d = np.array([1.0 + 0j])
    t_s = 0.0
    jump_times, jumps = [], []
    forced = list(forced_jumps) if forced_jumps is not None else None
    i_out = 0
    frame = None
    while True:
        if forced is not None:
            t_j = forced.pop(0) if forced else None
            if t_j is not None and t_j > t_end:
                t_j = None
        else:
            R = driver.uniform()
            t_j = sample_jump_time(d, a, z, K, hbar, R, t_s, t_end, probe_step)
        seg_end = t_end if t_j is None else t_j
        # observables on output times inside [t_s, seg_end)
        stop = np.searchsorted(out_t, seg_end, side="left" if t_j is not None else "right")
        if stop > i_out:
            taus = out_t[i_out:stop] - t_s
            frs = propagate_frames(a, z, K, hbar, taus, track_branch=False)
            f = survival(frs, d)
            if check_monotone:
                _check_monotone(f, f"scheme A segment from t={t_s:.6g}")
            for j, fr in enumerate(frs):
                dd = fr.amplitude * b_apply(fr.N, fr.M, fr.h0, d)
                centres[i_out + j], covs[i_out + j] = _record(fr, dd, hbar)
                norms[i_out + j] = f[j]
                counts[i_out + j] = len(jump_times)
            i_out = stop
        frame = propagate_frame(a, z, K, hbar, seg_end - t_s)
        d = frame.amplitude * b_apply(frame.N, frame.M, frame.h0, d)
        if t_j is None:
            break
        Lm = l_matrix_orthonormal(frame, lin, hbar, d.size)
        d = apply_jump_orthonormal(d, Lm)
        a, z, t_s = frame.a, frame.z, t_j
        jump_times.append(t_j)
        jumps.append((t_j, _Frame(a.copy(), z.copy()), d.copy()))
        if max_jumps is not None and len(jump_times) >= max_jumps:
            out_t, centres, covs = out_t[:i_out], centres[:i_out], covs[:i_out]
            norms, counts = norms[:i_out], counts[:i_out]
            break
    return JumpTrajectory(
        out_t, centres, covs, norms, counts, jump_times,
        final_frame=_Frame(frame.a, frame.z), final_coefficients=d / np.linalg.norm(d),
        jumps=jumps, scheme="A",
    )


@dataclass(frozen=True)
class _Frame:
    a: np.ndarray
    z: np.ndarray


class FrameTable:
    """Frame data of the propagated initial basis on a uniform time grid.

    Shared read-only by all Scheme B trajectories with the same model and
    initial Gaussian.
    """

    def __init__(self, model, state, t_end, dt):
        n = int(round(t_end / dt))
        if abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
            raise ValueError("dt must divide t_end")
        a0, z0 = _initial(model, state)
        self._build(model, a0, z0, dt, n, 0)

    def _build(self, model, a0, z0, dt, n, offset):
        self.model = model
        self.hbar = model.hbar
        self.K = build_effective_k(model)
        self.dt = float(dt)
        self.offset = offset
        self.times = dt * np.arange(offset, offset + n + 1)
        self.frames = propagate_frames(a0, z0, self.K, self.hbar, dt * np.arange(n + 1))
        self.N = np.array([f.N for f in self.frames])
        self.M = np.array([f.M for f in self.frames])
        self.h0 = np.array([f.h0 for f in self.frames])
        self.amp = np.array([f.amplitude for f in self.frames])
        self.amp2 = np.abs(self.amp) ** 2

    def reseated(self, k):
        """Table of the basis propagated from the frame at local index ``k``.

        Its index 0 is this table's index ``k``; global grid indices are kept
        in ``offset``.
        """
        fr = self.frames[k]
        new = object.__new__(FrameTable)
        new._build(self.model, fr.a, fr.z, self.dt, self.times.size - 1 - k, self.offset + k)
        return new

    def survival(self, c, start=0, stop=None):
        sl = slice(start, stop)
        return _survival_arrays(self.N[sl], self.M[sl], self.h0[sl], self.amp2[sl], c)

    def jump_matrices(self, k, size):
        """(LL, O) at grid index ``k`` for an active length ``size``."""
        fr = self.frames[k]
        B = b_matrix(fr, size)
        Bt = dual_b_matrix(fr, size)
        Lm = l_matrix_orthonormal(fr, self.model.lindbladian, self.hbar, size)
        LL = Bt.conj() @ Lm @ B.T
        O = self.amp2[k] * (B.conj() @ B.T)
        return LL, O

    def orthonormal(self, k, c):
        fr = self.frames[k]
        return fr.amplitude * b_apply(fr.N, fr.M, fr.h0, c)


def run_scheme_b(model, state, table, driver=None, output_stride=1, output_indices=None,
                 forced_jumps=None, check_monotone=True):
    """Grid-based jump trajectory in the propagated initial basis.

    At grid index ``k`` the trajectory jumps if ``c^+ O(t_k) c <= R``; the jump
    maps ``c -> LL c`` renormalised in ``O(t_k)`` and draws a new ``R``. Between
    jumps ``c`` is constant. ``forced_jumps`` lists jump times on the grid
    instead of drawing thresholds.

    The propagated basis grows skewed as jumps accumulate and ``c`` grows
    roughly like ``N^-n``. Once ``|c|`` exceeds ``REBASE_GROWTH`` after a jump
    the basis is restarted from the current frame, with ``c`` replaced by the
    orthonormal coefficients there; the state itself is unchanged.
    """
    hbar = model.hbar
    n_grid = table.times.size
    if output_indices is None:
        output_indices = np.arange(0, n_grid, output_stride)
        if output_indices[-1] != n_grid - 1:
            output_indices = np.append(output_indices, n_grid - 1)
    output_indices = np.asarray(output_indices, dtype=int)
    n_out = output_indices.size
    centres = np.empty((n_out, 2))
    covs = np.empty((n_out, 2, 2))
    norms = np.empty(n_out)
    counts = np.zeros(n_out, dtype=int)
    c = np.array([1.0 + 0j])
    jump_times, jumps, evolved = [], [], []
    forced_idx = None
    if forced_jumps is not None:
        forced_idx = sorted(int(round(tj / table.dt)) for tj in forced_jumps)
    tab, off = table, 0  # current basis table and its global index offset
    k0 = 0
    i_out = 0
    while True:
        if forced_idx is not None:
            k_j = forced_idx.pop(0) if forced_idx else None
            if k_j is not None and k_j >= n_grid:
                k_j = None
            f_seg = tab.survival(c, k0 - off, (n_grid if k_j is None else k_j + 1) - off)
        else:
            R = driver.uniform()
            f_seg = tab.survival(c, k0 - off, n_grid - off)
            hit = np.nonzero(f_seg <= R)[0]
            k_j = k0 + int(hit[0]) if hit.size else None
            if k_j is not None:
                f_seg = f_seg[: k_j - k0 + 1]
        if check_monotone:
            _check_monotone(f_seg, f"scheme B segment from index {k0}")
        end = n_grid if k_j is None else k_j
        while i_out < n_out and output_indices[i_out] < end:
            k = output_indices[i_out]
            d = tab.orthonormal(k - off, c)
            centres[i_out], covs[i_out] = _record(tab.frames[k - off], d, hbar)
            norms[i_out] = f_seg[k - k0]
            counts[i_out] = len(jump_times)
            i_out += 1
        if k_j is None:
            break
        LL, O = tab.jump_matrices(k_j - off, c.size)
        c = apply_jump_nonorthogonal(c, LL, O)
        t_j = table.times[k_j]
        jump_times.append(t_j)
        fr = tab.frames[k_j - off]
        d = tab.orthonormal(k_j - off, c)
        jumps.append((t_j, _Frame(fr.a, fr.z), d))
        if np.linalg.norm(c) > REBASE_GROWTH:
            # the propagated basis has become too skewed: restart it here
            log.debug("re-seating scheme B basis at t=%.6g (|c| = %.3g)", t_j, np.linalg.norm(c))
            tab, off = tab.reseated(k_j - off), k_j
            c = d / np.linalg.norm(d)
        evolved.append((off, c.copy()))
        k0 = k_j
    d = tab.orthonormal(n_grid - 1 - off, c)
    fr = tab.frames[n_grid - 1 - off]
    return JumpTrajectory(
        table.times[output_indices], centres, covs, norms, counts, jump_times,
        final_frame=_Frame(fr.a, fr.z), final_coefficients=d / np.linalg.norm(d),
        jumps=jumps, evolved_coefficients=evolved, scheme="B",
    )


def ground_state_mass(traj):
    """Weight of the lowest moving-basis state in the final normalised coefficients."""
    d = traj.final_coefficients
    return float(abs(d[0]) ** 2 / np.vdot(d, d).real)


def coherent_fidelity(traj, hbar, n_grid=2048):
    """Overlap squared of the final state with the coherent state at its own centre.

    The coherent state has the standard frame ``a = (1, i)``; it is the ground
    state of a number basis displaced to the trajectory's mean. Computed by
    position-space quadrature.
    """
    frame, d = traj.final_frame, traj.final_coefficients
    mean, _ = ladder_moments(d, frame, hbar)
    width = np.sqrt(hbar * (2 * d.size + 8)) * max(1.0, abs(frame.a[0])) * 4
    lo = min(mean[0], frame.z[0]) - width
    hi = max(mean[0], frame.z[0]) + width
    x = np.linspace(lo, hi, n_grid)
    psi = coefficients_to_wavefunction(d, frame, hbar, x)
    g = eval_basis_stack(0, _Frame(np.array([1.0, 1j]), mean), hbar, x)[0]
    dx = x[1] - x[0]
    return float(abs(np.vdot(g, psi) * dx) ** 2 / (np.vdot(psi, psi).real * dx))


def fock_state_of(traj, hbar, D, index=None, **kw):
    """Number-basis vector of the final state (or the state right after jump ``index``)."""
    from .oracle import fock_basis_matrix

    if index is None:
        frame, d = traj.final_frame, traj.final_coefficients
    else:
        _, frame, d = traj.jumps[index]
    P = fock_basis_matrix(frame, hbar, d.size - 1, D, **kw)
    v = P @ d
    return v / np.linalg.norm(v)
