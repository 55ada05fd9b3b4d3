"""Quadratic one-mode models and their closed-form reference solutions.

A model is a Weyl-quantised quadratic Hamiltonian

    H(z) = 1/2 z.H2 z + h1.z + h0

together with one Lindblad operator that is linear in phase space,

    L(z) = gradL.z + L0          (gradL complex, no conjugation).

The master equation is ``i hbar drho/dt = [H, rho] + i (L rho L^+ - 1/2 {L^+ L, rho})``.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .core import OMEGA, as_point, as_vec2

PRESETS = ("position-measurement", "damped-oscillator")


@dataclass(frozen=True)
class QuadraticHamiltonian:
    H2: np.ndarray
    h1: np.ndarray = field(default_factory=lambda: np.zeros(2))
    h0: float = 0.0

    def __post_init__(self):
        H2 = np.asarray(self.H2, dtype=float).reshape(2, 2)
        if not np.allclose(H2, H2.T, atol=1e-14):
            raise ValueError("H2 must be symmetric")
        object.__setattr__(self, "H2", H2)
        object.__setattr__(self, "h1", as_point(self.h1))
        object.__setattr__(self, "h0", float(self.h0))

    def __call__(self, z):
        z = np.asarray(z)
        return 0.5 * z @ self.H2 @ z + self.h1 @ z + self.h0

    def grad(self, z):
        return self.H2 @ np.asarray(z) + self.h1


@dataclass(frozen=True)
class LinearLindbladian:
    gradL: np.ndarray
    L0: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gradL", as_vec2(self.gradL))
        L0 = complex(self.L0)
        if not np.isfinite(L0):
            raise ValueError("L0 must be finite")
        object.__setattr__(self, "L0", L0)

    def __call__(self, z):
        return np.asarray(z) @ self.gradL + self.L0

    @property
    def gamma_matrix(self):
        """Re(gradL gradL^+), the decoherence matrix Gamma."""
        return np.outer(self.gradL, self.gradL.conj()).real

    @property
    def im_matrix(self):
        """Im(gradL gradL^+), antisymmetric."""
        return np.outer(self.gradL, self.gradL.conj()).imag


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """K(z) = H(z) - (i/2)|L(z)|^2 = 1/2 z.K2 z + k1.Omega z + k0.

    ``trace_correction`` is the constant c in the operator identity
    ``H - (i/2) L^+ L = Weyl(K) + c`` with ``c = (hbar/4) conj(gradL).Omega gradL``
    (purely imaginary). The non-Hermitian propagator is therefore
    ``exp(-i c t / hbar) exp(-i Weyl(K) t / hbar)``.
    """

    K2: np.ndarray
    k1: np.ndarray
    k0: complex
    trace_correction: complex

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return 0.5 * z @ self.K2 @ z + self.k1 @ (OMEGA @ z) + self.k0

    @property
    def generator(self):
        """Omega K2, the matrix generating the linearised flow."""
        return OMEGA @ self.K2


@dataclass(frozen=True)
class ModelConfig:
    hamiltonian: QuadraticHamiltonian
    lindbladian: LinearLindbladian
    hbar: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")


def build_effective_k(model):
    """Assemble the complex effective Hamiltonian of ``model``."""
    ham, lin = model.hamiltonian, model.lindbladian
    K2 = ham.H2 - 1j * lin.gamma_matrix
    g = ham.h1 - 1j * (np.conj(lin.L0) * lin.gradL).real
    k1 = OMEGA @ g
    k0 = ham.h0 - 0.5j * abs(lin.L0) ** 2
    X = np.conj(lin.gradL) @ OMEGA @ lin.gradL
    return EffectiveHamiltonian(K2=K2, k1=k1, k0=k0, trace_correction=model.hbar / 4 * X)


def lindbladian_to_ladder_params(lin, hbar):
    """Write L as ``(i/sqrt(2 hbar)) l.Omega(z - chi)``.

    Returns
    -------
    l : complex (2,)
        ``-i sqrt(2 hbar) Omega gradL``.
    chi : complex (2,)
        Minimum-norm complex root of ``L(chi) = 0``.
    """
    g = lin.gradL
    norm2 = np.vdot(g, g).real
    if norm2 == 0.0:
        raise ValueError("Lindbladian has zero gradient; a constant L only contributes a phase")
    l = -1j * np.sqrt(2 * hbar) * (OMEGA @ g)
    chi = -lin.L0 * np.conj(g) / norm2
    return l, chi


def ladder_to_lindbladian(l, chi, hbar):
    """Inverse of :func:`lindbladian_to_ladder_params`."""
    l, chi = as_vec2(l), as_vec2(chi)
    gradL = 1j / np.sqrt(2 * hbar) * (OMEGA.T @ l)
    return LinearLindbladian(gradL=gradL, L0=-(gradL @ chi))


def harmonic_hamiltonian(omega):
    return QuadraticHamiltonian(H2=omega * np.eye(2))


def position_measurement(omega=1.0, gamma=0.2, hbar=1.0):
    """Harmonic oscillator with L = sqrt(gamma) x."""
    _check_rates(omega, gamma)
    lin = LinearLindbladian(gradL=[np.sqrt(gamma), 0.0])
    return ModelConfig(harmonic_hamiltonian(omega), lin, hbar, "position-measurement")


def damped_oscillator(omega=1.0, gamma=0.2, hbar=1.0):
    """Harmonic oscillator with L = sqrt(gamma/2) (x + i p)."""
    _check_rates(omega, gamma)
    lin = LinearLindbladian(gradL=np.sqrt(gamma / 2) * np.array([1.0, 1j]))
    return ModelConfig(harmonic_hamiltonian(omega), lin, hbar, "damped-oscillator")


def preset(name, omega=1.0, gamma=0.2, hbar=1.0):
    builders = {"position-measurement": position_measurement, "damped-oscillator": damped_oscillator}
    try:
        return builders[name](omega, gamma, hbar)
    except KeyError:
        raise ValueError(f"unknown model preset {name!r}; choose from {PRESETS}") from None


def _check_rates(omega, gamma):
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if not gamma >= 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")


class ReferenceBundle(Mapping):
    """Read-only record of named closed-form values (attribute or key access)."""

    def __init__(self, **values):
        self._values = dict(values)

    def __getitem__(self, key):
        return self._values[key]

    def __getattr__(self, key):
        try:
            return self.__dict__["_values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"ReferenceBundle({', '.join(self._values)})"


def example1_reference(t, omega=1.0, gamma=0.2, zeta=2.0, hbar=1.0):
    """Closed forms for the position-measurement model.

    The initial state is the squeezed Gaussian ``G0 = diag(zeta, 1/zeta)``.
    ``t`` may be an array; time-dependent entries broadcast over it.

    Keys
    ----
    lam, Lam : float, complex
        ``sqrt(gamma^2 + omega^2)`` and ``sqrt(lam - omega) + i sqrt(lam + omega)``.
    var_x, var_p : Lindblad variances.
    cov_xp_alt : an alternative closed form for the covariance that does not satisfy the
        initial condition; kept for documentation only.
    S : linearised flow, shape ``t.shape + (2, 2)``.
    sigma_inf : fixed point of the SSE covariance.
    N_inf, N_rate : ``N(t) ~ N_inf exp(-N_rate t)``.
    M_inf : limit of M(t).
    """
    t = np.asarray(t, dtype=float)
    w, g, z = omega, gamma, zeta
    lam = np.sqrt(g**2 + w**2)
    Lam = np.sqrt(lam - w) + 1j * np.sqrt(lam + w)

    base = (z**2 + 2 * g * z * t + 1) / z
    osc_s = g / w * np.sin(2 * w * t)
    osc_c = (z**2 - 1) / z * np.cos(2 * w * t)
    var_x = hbar / 4 * (base - osc_s - osc_c)
    var_p = hbar / 4 * (base + osc_s + osc_c)
    cov_xp_alt = hbar / 4 * (
        g / (w**2 * z) + (z**2 * w - w - g * z) / (w**2 * z**2) * np.cos(2 * w * t)
    )

    kappa = np.sqrt(w / 2) * Lam
    ch, sh = np.cosh(kappa * t), np.sinh(kappa * t)
    S = np.empty(t.shape + (2, 2), dtype=complex)
    S[..., 0, 0] = ch
    S[..., 0, 1] = np.sqrt(w / (2 * lam**2)) * np.conj(Lam) * sh
    S[..., 1, 0] = np.sqrt(1 / (2 * w)) * Lam * sh
    S[..., 1, 1] = ch

    sigma_inf = hbar / (2 * g) * np.array(
        [
            [np.sqrt(2 * w * (lam - w)), lam - w],
            [lam - w, lam * np.sqrt(2 * (lam - w) / w)],
        ]
    ) if g > 0 else hbar / 2 * np.eye(2)

    N_inf = np.sqrt(
        8 * z * lam * w
        / (2 * z * w * (lam + w) + (z**2 * w + lam) * np.sqrt(2 * w * (lam + w)))
    )
    N_rate = np.sqrt(w * (lam - w) / 2)
    M_inf = (lam - z**2 * w - 1j * z * np.sqrt(2 * w * (lam - w))) / (
        lam + z**2 * w + z * np.sqrt(2 * w * (lam + w))
    )
    return ReferenceBundle(
        t=t, lam=lam, Lam=Lam, var_x=var_x, var_p=var_p, cov_xp_alt=cov_xp_alt,
        S=S, sigma_inf=sigma_inf, N_inf=N_inf, N_rate=N_rate, M_inf=M_inf,
        osc_freq=np.sqrt(w * (lam + w) / 2),
    )


def example2_reference(t, omega=1.0, gamma=0.2, zeta=2.0, hbar=1.0, z0=(2.0, 0.0)):
    """Closed forms for the damped-oscillator model.

    Keys
    ----
    centre : Lindblad (and SSE mean) centre, shape ``t.shape + (2,)``.
    sigma_lindblad, sigma_sse : covariances, shape ``t.shape + (2, 2)``.
    f : ``(zeta^2+1) sinh(gamma t) + 2 zeta cosh(gamma t)``.
    S : linearised flow.
    N, M : Hagedorn frame normalisation and mixing coefficient.
    N_inf_coeff : ``N(t) ~ N_inf_coeff exp(-gamma t / 2)``.
    M_inf : ``-(zeta - 1)/(zeta + 1)``, the limit of M(t).
    M_inf_alt : the alternative asymptote ``(1-gamma)/(1+gamma)``,
        which does not agree with the limit of M(t).
    """
    t = np.asarray(t, dtype=float)
    w, g, z = omega, gamma, zeta
    z0 = as_point(z0)

    c, s = np.cos(w * t), np.sin(w * t)
    damp = np.exp(-g * t / 2)
    centre = np.stack(
        [damp * (c * z0[0] + s * z0[1]), damp * (-s * z0[0] + c * z0[1])], axis=-1
    )

    c2, s2 = np.cos(2 * w * t), np.sin(2 * w * t)
    pref = hbar * np.exp(-g * t) / (4 * z)
    sig_l = np.empty(t.shape + (2, 2))
    sig_l[..., 0, 0] = hbar / 2 + pref * ((z - 1) ** 2 - (z**2 - 1) * c2)
    sig_l[..., 1, 1] = hbar / 2 + pref * ((z - 1) ** 2 + (z**2 - 1) * c2)
    sig_l[..., 0, 1] = sig_l[..., 1, 0] = pref * (z**2 - 1) * s2

    ch, sh = np.cosh(g * t), np.sinh(g * t)
    f = (z**2 + 1) * sh + 2 * z * ch
    diag = (z**2 + 1) * ch + 2 * z * sh
    sig_s = np.empty(t.shape + (2, 2))
    sig_s[..., 0, 0] = hbar / (2 * f) * (diag - (z**2 - 1) * c2)
    sig_s[..., 1, 1] = hbar / (2 * f) * (diag + (z**2 - 1) * c2)
    sig_s[..., 0, 1] = sig_s[..., 1, 0] = hbar / (2 * f) * (z**2 - 1) * s2

    arg = (g + 2j * w) / 2 * t
    S = np.empty(t.shape + (2, 2), dtype=complex)
    S[..., 0, 0] = S[..., 1, 1] = np.cosh(arg)
    S[..., 0, 1] = -1j * np.sinh(arg)
    S[..., 1, 0] = 1j * np.sinh(arg)

    return ReferenceBundle(
        t=t, centre=centre, sigma_lindblad=sig_l, sigma_sse=sig_s, f=f, S=S,
        N=np.sqrt(2 * z / f), M=-(z**2 - 1) * sh / f,
        N_inf_coeff=2 * np.sqrt(z) / (1 + z), M_inf=-(z - 1) / (z + 1),
        M_inf_alt=(1 - g) / (1 + g),
    )
