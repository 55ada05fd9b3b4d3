"""Matrices of the moving Hagedorn basis and position-space evaluation.

Conventions
-----------
Ladder operators of the frame ``(a, z)``::

    A(a, z)   =  (i/sqrt(2 hbar)) a.Omega(zhat - z)
    A^+(a, z) = -(i/sqrt(2 hbar)) conj(a).Omega(zhat - z)

so that ``zhat - z = sqrt(hbar/2) (a A^+ + conj(a) A)`` and the standard
number basis is the frame ``a = (1, i)``, ``z = 0``.

``B[n, m]`` is the coefficient of ``|m, a_t, z_t>`` in ``U(t)|n, a0, z0>``
divided by the frame amplitude ``c = exp(i alpha/hbar) sqrt(N)``. It vanishes
for ``m > n``. The propagator matrix in the usual row = output convention
is therefore ``U[m, n] = c B[n, m]``.
"""

import numpy as np
from scipy.special import gammaln

from .core import hermitian_form
from .gaussian import WignerGrid
from .model import lindbladian_to_ladder_params


def _powers(x, n):
    """Array ``P[..., j] = x**j`` for ``j = 0..n`` (with ``0**0 = 1``)."""
    x = np.asarray(x, dtype=complex)
    P = np.ones(x.shape + (n + 1,), dtype=complex)
    for j in range(1, n + 1):
        P[..., j] = P[..., j - 1] * x
    return P


def _ladder_sum(x, y, w, n_max):
    """T[..., n, m] = w^m sum_k sqrt(n!/m!) y^k x^(n-m-2k) / (2^k k! (n-m-2k)!), m <= n.

    ``x``, ``y``, ``w`` may be arrays of a common shape; the matrix axes are
    appended.
    """
    size = n_max + 1
    n = np.arange(size)
    lf = gammaln(n + 1.0)
    d = n[:, None] - n[None, :]
    half = 0.5 * (lf[:, None] - lf[None, :])
    Px, Py, Pw = _powers(x, n_max), _powers(y, n_max // 2 + 1), _powers(w, n_max)
    shape = np.shape(x)
    T = np.zeros(shape + (size, size), dtype=complex)
    for k in range(n_max // 2 + 1):
        j = d - 2 * k
        mask = j >= 0
        jj = np.where(mask, j, 0)
        coef = np.where(mask, np.exp(half - gammaln(jj + 1.0) - gammaln(k + 1.0) - k * np.log(2.0)), 0.0)
        T += coef * Py[..., k, None, None] * Px[..., jj]
    return T * Pw[..., None, :]


def b_matrix(frame, n_max):
    """Propagator coefficients ``B[n, m]`` (lower triangular)."""
    return _ladder_sum(frame.h0, -frame.M, frame.N, n_max)


def b_matrix_batch(N, M, h0, n_max):
    """:func:`b_matrix` for arrays of frame parameters, shape ``N.shape + (n, n)``."""
    return _ladder_sum(h0, -np.asarray(M), np.asarray(N, dtype=float), n_max)


def b_apply(N, M, h0, c):
    """``sum_n c[n] B[..., n, :]`` without forming ``B``.

    Uses the row recursion ``B[n] = (N A^+ - (M/N) A + h0) B[n-1] / sqrt(n)``,
    which costs ``O(n^2)`` per frame. ``N``, ``M``, ``h0`` may be arrays of a
    common shape; the coefficient axis is appended.
    """
    c = np.asarray(c, dtype=complex)
    size = c.size
    N = np.asarray(N, dtype=float)[..., None]
    M = np.asarray(M, dtype=complex)[..., None]
    h0 = np.asarray(h0, dtype=complex)[..., None]
    lower = -M / N
    s = np.sqrt(np.arange(1, size))
    row = np.zeros(np.broadcast_shapes(N.shape, M.shape, h0.shape)[:-1] + (size,), dtype=complex)
    row[..., 0] = 1.0
    out = c[0] * row
    for n in range(1, size):
        nxt = h0 * row
        nxt[..., 1:] += N * s * row[..., :-1]
        nxt[..., :-1] += lower * s * row[..., 1:]
        row = nxt / np.sqrt(n)
        out = out + c[n] * row
    return out


def dual_b_matrix(frame, n_max):
    """Dual coefficients ``Bt[n, m]`` (upper triangular) with ``conj(Bt) B^T = I``."""
    D = _ladder_sum(np.conj(frame.h0), np.conj(frame.M), 1.0, n_max).T
    m = np.arange(n_max + 1)
    sign = (-1.0) ** (m[:, None] + m[None, :])
    return D * sign * (float(frame.N) ** -m)[None, :]


def ladder_expansion_b(h_plus, h_minus, h0, n_max):
    """Rows of ``(h_plus A^+ + h_minus A + h0)^n |0> / sqrt(n!)`` from the closed form.

    With ``h_plus = N`` and ``h_minus = -M/N`` this is :func:`b_matrix`.
    """
    return _ladder_sum(h0, h_plus * h_minus, h_plus, n_max)


def overlap_matrix(frame, hbar=None, n_max=32):
    """Gram matrix ``O[n, n'] = <U n | U n'>`` of the propagated initial basis."""
    B = b_matrix(frame, n_max)
    amp2 = abs(frame.amplitude) ** 2
    O = amp2 * (B.conj() @ B.T)
    return 0.5 * (O + O.conj().T)


def u_matrix(frame1, frame2, K, n_max, tol=1e-8):
    """``<m, a_t2, z_t2| U(t2 - t1) |n, a_t1, z_t1>`` as ``U[m, n]``.

    The relative frame is obtained by re-seating at ``frame1``; ``frame2`` is
    used to check that it lands on the same basis.
    """
    from .flow import relative_frame

    tau = frame2.t - frame1.t
    if tau < 0:
        raise ValueError("u_matrix requires t2 >= t1")
    rel = relative_frame(frame1, K, tau)
    if np.abs(rel.z - frame2.z).max() > tol * max(1.0, np.abs(frame2.z).max()):
        raise ValueError("frames are not connected by the flow of K")
    phase = hermitian_form(frame2.a, rel.a)
    if abs(abs(phase) - 1) > tol:
        raise ValueError("frames are not connected by the flow of K")
    if abs(phase - 1) > tol:
        raise ValueError("target frame vector differs by a phase; re-seat frames consistently")
    return rel.amplitude * b_matrix(rel, n_max).T


def propagator_matrix(frame, n_max):
    """``U[m, n] = <m, a_t, z_t|U(t)|n, a0, z0>`` for a frame relative to its own origin."""
    return frame.amplitude * b_matrix(frame, n_max).T


def l_matrix_orthonormal(frame, lin, hbar, n_max):
    """Matrix ``Lm[n, m] = <n, a_t, z_t| L |m, a_t, z_t>``.

    Tridiagonal: the raising part carries ``h(conj(a), l)``, the lowering part
    ``h(a, l)`` and the diagonal is ``L(z_t)``.
    """
    l, _ = lindbladian_to_ladder_params(lin, hbar)
    size = n_max + 1
    s = np.sqrt(np.arange(1, size))
    Lm = np.zeros((size, size), dtype=complex)
    Lm[np.arange(size - 1), np.arange(1, size)] = hermitian_form(frame.a, l) * s
    Lm[np.arange(1, size), np.arange(size - 1)] = hermitian_form(np.conj(frame.a), l) * s
    Lm[np.diag_indices(size)] = lin(frame.z)
    return Lm


def l_matrix_nonorthogonal(frame, lin, hbar, n_max):
    """Action of L on coefficients in the propagated basis ``U(t)|n, a0, z0>``.

    ``c' = LL @ c`` with ``LL = conj(Bt) Lm B^T``. Raising one level needs one
    extra row, so the result is ``(n_max + 2) x (n_max + 1)``.
    """
    B = b_matrix(frame, n_max + 1)
    Bt = dual_b_matrix(frame, n_max + 1)
    Lm = l_matrix_orthonormal(frame, lin, hbar, n_max + 1)
    return (Bt.conj() @ Lm @ B.T)[:, : n_max + 1]


def ladder_moments(d, frame, hbar):
    """Mean and covariance of ``zhat`` for coefficients ``d`` in the orthonormal frame basis.

    ``d`` need not be normalised; moments are taken for the normalised state.
    """
    d = np.asarray(d, dtype=complex)
    nrm = np.vdot(d, d).real
    n = np.arange(d.size)
    sq = np.sqrt(n[1:])
    A = np.vdot(d[:-1], sq * d[1:]) / nrm  # <A>
    AA = np.vdot(d[:-2], np.sqrt(n[1:-1] * n[2:]) * d[2:]) / nrm if d.size > 2 else 0.0  # <A^2>
    num = np.vdot(d, n * d).real / nrm  # <A^+ A>
    a = frame.a
    mean = frame.z + np.sqrt(2 * hbar) * (a.conj() * A).real
    # symmetrised second moments about z
    second = 0.5 * hbar * (
        2 * (np.outer(a.conj(), a.conj()) * AA).real
        + np.outer(a, a.conj()).real * (2 * num + 1)
    )
    dev = mean - frame.z
    cov = second - np.outer(dev, dev)
    return mean, 0.5 * (cov + cov.T)


def eval_basis_wavefunction(n, frame, hbar, x):
    """Position-space values of ``|n, a, z>`` for ``n`` (int) or all states up to ``n``.

    Returns a 1-D array for integer ``n``; use :func:`eval_basis_stack` for
    the whole ladder.
    """
    return eval_basis_stack(n, frame, hbar, x)[n]


def eval_basis_stack(n_max, frame, hbar, x):
    a_q, a_p = frame.a
    if abs(a_q) < 1e-12:
        raise ValueError("a_q vanishes: state is momentum-localised; rotate the grid first")
    q, p = frame.z
    x = np.asarray(x, dtype=float)
    dx = x - q
    out = np.empty((n_max + 1,) + x.shape, dtype=complex)
    out[0] = (
        (np.pi * hbar) ** -0.25
        * a_q**-0.5
        * np.exp(1j / hbar * (0.5 * a_p / a_q * dx * dx + p * dx + 0.5 * p * q))
    )
    ratio = np.conj(a_q) / a_q
    pre = np.sqrt(2 / hbar) * dx / a_q
    for k in range(n_max):
        prev = out[k - 1] if k > 0 else 0.0
        out[k + 1] = (pre * out[k] - np.sqrt(k) * ratio * prev) / np.sqrt(k + 1)
    return out


def wigner_from_wavefunction(psi, x, hbar, p=None):
    """Wigner function of a pure state sampled on a uniform symmetric ``x`` grid.

    W(x, p) = (1/(2 pi hbar)) int psi(x - s/2) conj(psi(x + s/2)) e^{i p s/hbar} ds

    Shifts ``s = 2 k dx`` keep both arguments on the grid. The transform over
    ``s`` is a direct matrix product, exact for arbitrary ``p`` samples.
    """
    psi = np.asarray(psi, dtype=complex)
    x = np.asarray(x, dtype=float)
    nx = x.size
    dx = x[1] - x[0]
    edge = max(abs(psi[0]), abs(psi[-1]))
    if edge > 1e-10 * np.abs(psi).max() and edge > 1e-10:
        raise ValueError(f"wavefunction does not decay at the grid edges ({edge:.2e})")
    if p is None:
        p = np.linspace(-np.pi * hbar / (2 * dx), np.pi * hbar / (2 * dx), nx)
    p = np.asarray(p, dtype=float)
    k = np.arange(-(nx - 1), nx)
    # correlation C[i, k] = psi[i - k] conj(psi[i + k])
    idx = np.arange(nx)[:, None]
    lo, hi = idx - k[None, :], idx + k[None, :]
    valid = (lo >= 0) & (lo < nx) & (hi >= 0) & (hi < nx)
    C = np.where(valid, psi[np.clip(lo, 0, nx - 1)] * np.conj(psi[np.clip(hi, 0, nx - 1)]), 0.0)
    s = 2 * k * dx
    phase = np.exp(1j * np.outer(s, p) / hbar)
    W = (C @ phase).real * (2 * dx) / (2 * np.pi * hbar)
    return WignerGrid(float(x[0]), float(x[-1]), float(p[0]), float(p[-1]), W.T.copy())


def wigner_window(psi_fn, mean, sigma, hbar, nq=257, n_p=257, width=6.0, support=14.0):
    """Wigner grid of a pure state on ``mean +- width * sigma``.

    ``psi_fn(x)`` evaluates the wavefunction. The transform integrates over
    a wider grid reaching ``support`` standard deviations (same spacing as
    the output ``q`` samples), and the result is cropped to the window.
    """
    sx, sp = sigma
    dx = 2 * width * sx / (nq - 1)
    m = int(np.ceil(max(support - width, 0.0) * sx / dx))
    x = mean[0] - width * sx + dx * np.arange(-m, nq + m)
    p = mean[1] + np.linspace(-width * sp, width * sp, n_p)
    W = wigner_from_wavefunction(psi_fn(x), x, hbar, p)
    return WignerGrid(float(x[m]), float(x[m + nq - 1]), W.p_min, W.p_max, W.values[:, m: m + nq].copy())


def wigner_of_coefficients(d, frame, hbar, nq=257, n_p=257, width=6.0, support=14.0):
    """Wigner grid of the state with coefficients ``d`` in the basis of ``frame``.

    The window is centred on the state's mean and spans ``width`` standard
    deviations per axis.
    """
    d = np.asarray(d, dtype=complex)
    mu, cov = ladder_moments(d, frame, hbar)
    sigma = np.sqrt(np.diag(cov))

    def psi(x):
        return d @ eval_basis_stack(d.size - 1, frame, hbar, x) / np.linalg.norm(d)

    return wigner_window(psi, mu, sigma, hbar, nq, n_p, width, support)
