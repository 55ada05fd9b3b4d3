"""Phase-space primitives shared across the package.

Points are ordered ``z = (q, p)``. The symplectic form is

    OMEGA = [[0, 1], [-1, 0]]

and complex 2-vectors ``a = (a_q, a_p)`` parametrise Hagedorn frames.
"""

import numpy as np

OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA.setflags(write=False)

FRAME_TOL = 1e-8


class FrameNotNormalisedError(ValueError):
    """Raised when a frame vector does not satisfy h_Omega(a, a) = 1."""


def as_point(z):
    """Return ``z`` as a finite real array of shape (2,)."""
    z = np.asarray(z, dtype=float).reshape(2)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"phase-space point must be finite, got {z}")
    return z


def as_vec2(a):
    """Return ``a`` as a finite complex array of shape (2,)."""
    a = np.asarray(a, dtype=complex).reshape(2)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"complex 2-vector must be finite, got {a}")
    return a


def hermitian_form(a, b):
    r"""Hermitian form :math:`h_\Omega(a, b) = \frac{1}{2i} a^\dagger \Omega b`.

    Conjugate-linear in ``a``, linear in ``b``. Trailing axis of length 2 is
    contracted, so stacks of vectors broadcast.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    # a^dagger Omega b = conj(a_q) b_p - conj(a_p) b_q
    return (np.conj(a[..., 0]) * b[..., 1] - np.conj(a[..., 1]) * b[..., 0]) / 2j


def check_normalised(a, tol=FRAME_TOL):
    norm = hermitian_form(a, a).real
    if abs(norm - 1.0) > tol:
        raise FrameNotNormalisedError(f"h_Omega(a, a) = {norm!r}, expected 1")


def expand_in_frame(b, a, tol=FRAME_TOL):
    """Coefficients of ``b`` in the frame ``(a, conj(a))``.

    Returns ``(c_plus, c_minus)`` with ``b = c_plus * a + c_minus * conj(a)``.
    """
    a = as_vec2(a)
    b = as_vec2(b)
    check_normalised(a, tol)
    return hermitian_form(a, b), -hermitian_form(np.conj(a), b)


def _expm_taylor(M, t):
    """Scaling-and-squaring Taylor exponential, used near degenerate spectra."""
    A = np.asarray(M, dtype=complex) * t
    norm = np.abs(A).sum(axis=1).max()
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    A = A / 2.0**squarings
    result = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, 30):
        term = term @ A / k
        result = result + term
        if np.abs(term).max() < 1e-18:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def mat_exp_2x2(M, t=1.0, degenerate_tol=1e-8):
    """Exact exponential ``exp(t M)`` of a 2x2 complex matrix.

    ``t`` may be a scalar or an array; the result then has shape
    ``t.shape + (2, 2)``. With ``mu = tr(M)/2`` and ``d^2 = mu^2 - det(M)``,

        exp(tM) = e^{mu t} [cosh(d t) I + sinh(d t)/d (M - mu I)].

    When the eigenvalue gap ``2|d|`` falls below ``degenerate_tol * |M|``
    the scaling-and-squaring series is used instead.
    """
    M = np.asarray(M, dtype=complex).reshape(2, 2)
    t_arr = np.asarray(t, dtype=float)
    mu = 0.5 * (M[0, 0] + M[1, 1])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    d = np.sqrt(mu * mu - det)
    scale = np.abs(M).max()
    if scale == 0.0:
        return np.broadcast_to(np.eye(2, dtype=complex), t_arr.shape + (2, 2)).copy()
    if 2 * abs(d) < degenerate_tol * scale:
        if t_arr.ndim == 0:
            return _expm_taylor(M, float(t_arr))
        out = np.empty(t_arr.shape + (2, 2), dtype=complex)
        for idx in np.ndindex(t_arr.shape):
            out[idx] = _expm_taylor(M, float(t_arr[idx]))
        return out
    dt = d * t_arr
    ch = np.cosh(dt)
    sh_over_d = np.sinh(dt) / d
    pref = np.exp(mu * t_arr)
    shifted = M - mu * np.eye(2)
    out = ch[..., None, None] * np.eye(2) + sh_over_d[..., None, None] * shifted
    return pref[..., None, None] * out


def is_symplectic(S, tol=1e-10):
    S = np.asarray(S)
    return np.abs(S.T @ OMEGA @ S - OMEGA).max() < tol
