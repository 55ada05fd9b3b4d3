"""Acceptance checks shared by the test suite and ``lindjump validate``.

Each ``check_*`` function runs one criterion at its stated tolerance and
returns a :class:`CheckResult`. Nothing here raises on failure; callers decide
what to do with a red result.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .core import OMEGA, mat_exp_2x2
from .dynamics import (
    NoiseDriver, _riccati_rhs, integrate, integrate_params, lindblad_closed_form, lindblad_rhs,
    sse_g_closed_form,
)
from .ensemble import compare_to_lindblad, run_ensemble
from .flow import linearized_flow, propagate_frame
from .gaussian import GaussianState, covariance_from_g, hagedorn_from_g
from .hagedorn import ladder_expansion_b, u_matrix, wigner_of_coefficients
from .jump import (
    FrameTable, coherent_fidelity, fock_state_of, ground_state_mass, run_scheme_a, run_scheme_b,
)
from .model import (
    PRESETS, build_effective_k, damped_oscillator, example1_reference,
    position_measurement, preset,
)
from .oracle import (
    Frame, fock_basis_matrix, fock_jump_trajectory, fock_operators, gaussian_to_fock,
    ladder_power_expansion, nonhermitian_propagator,
)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2} {self.name}: {self.detail}"


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def random_pure_g(rng, n, max_log_squeeze=1.5):
    """``n`` random width matrices with det G = 1 (rotation, squeeze and shear)."""
    th = rng.uniform(0, np.pi, n)
    s = np.exp(rng.uniform(-max_log_squeeze, max_log_squeeze, n))
    sh = rng.uniform(-1, 1, n)
    c, si = np.cos(th), np.sin(th)
    R = np.stack([np.stack([c, -si], -1), np.stack([si, c], -1)], -2)
    D = np.zeros((n, 2, 2))
    D[:, 0, 0], D[:, 1, 1] = s, 1 / s
    Sh = np.tile(np.eye(2), (n, 1, 1))
    Sh[:, 0, 1] = sh
    G = np.swapaxes(Sh, 1, 2) @ R @ D @ np.swapaxes(R, 1, 2) @ Sh
    return 0.5 * (G + np.swapaxes(G, 1, 2))


def unit_disk(rng, size):
    r = np.sqrt(rng.uniform(0, 1, size))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, size))


def check_lindblad_variances(dt=1e-2, tol=1e-6, max_seconds=1.0):
    m = position_measurement()
    s0 = GaussianState.squeezed()
    traj, elapsed = _timed(integrate_params, lindblad_rhs, s0, m, 10.0, dt, "lindblad")
    sig = 0.5 * m.hbar * np.linalg.inv(traj.G)
    closed = np.array([covariance_from_g(lindblad_closed_form(s0, m, t), m.hbar) for t in traj.times])
    ref = example1_reference(traj.times)
    expected = np.stack([ref.var_x, ref.var_p], -1)
    errs = {
        "rk4_vs_closed": np.abs(sig - closed).max(),
        "rk4_vs_reference": np.abs(np.stack([sig[:, 0, 0], sig[:, 1, 1]], -1) - expected).max(),
        "closed_vs_reference": np.abs(np.stack([closed[:, 0, 0], closed[:, 1, 1]], -1) - expected).max(),
    }
    worst = max(errs.values())
    ok = worst < tol and elapsed < max_seconds
    return CheckResult(1, "Example-1 Lindblad variances", ok,
                       f"max error {worst:.2e} (< {tol:.0e}), RK4 {elapsed:.2f}s (< {max_seconds}s)",
                       dict(errs, seconds=elapsed))


def check_sse_fixed_point(dt=2e-2, t_end=50.0, tol=1e-3, max_seconds=1.0):
    m = position_measurement()
    G0 = GaussianState.squeezed().G

    def run():
        _, ys = integrate(lambda t, y: _riccati_rhs(y.reshape(2, 2), m).ravel(), G0.ravel(), t_end, dt)
        return ys[-1].reshape(2, 2)

    G, elapsed = _timed(run)
    sig = covariance_from_g(G, m.hbar)
    got = np.array([sig[0, 0], sig[1, 1], sig[0, 1]])
    expected = np.array([0.4975, 0.5074, 0.0495])
    err = np.abs(got - expected).max()
    ok = err < tol and elapsed < max_seconds
    return CheckResult(2, "Example-1 SSE covariance fixed point", ok,
                       f"(var_x, var_p, cov_xp) = ({got[0]:.4f}, {got[1]:.4f}, {got[2]:.4f}), "
                       f"max error {err:.1e}, {elapsed:.2f}s",
                       dict(values=got, error=err, seconds=elapsed))


def check_lambda():
    import sympy

    w, g = sympy.Integer(1), sympy.Rational(1, 5)
    exact = sympy.simplify(sympy.sqrt(g**2 + w**2) - sympy.sqrt(26) / 5) == 0
    lam = example1_reference(0.0).lam
    target = np.sqrt(26.0) / 5
    ulps = abs(lam - target) / np.spacing(target)
    ok = bool(exact) and ulps <= 1
    return CheckResult(3, "lambda = sqrt(26)/5", ok,
                       f"symbolic identity {'holds' if exact else 'fails'}, float result within {ulps:.0f} ulp",
                       dict(lam=lam, ulps=ulps))


def check_symplectic(tol=1e-10):
    times = np.linspace(0, 10, 1000)
    worst = 0.0
    for name in PRESETS:
        K = build_effective_k(preset(name))
        S = mat_exp_2x2(K.generator, times)
        dev = np.swapaxes(S, -1, -2) @ OMEGA @ S - OMEGA
        worst = max(worst, np.abs(dev).max())
    return CheckResult(4, "symplecticity of S(t)", worst < tol, f"max |S^T Omega S - Omega| = {worst:.1e}",
                       dict(error=worst))


def check_purity(n_states=100, seed=0, dt=2.5e-3, tol=1e-8):
    rng = np.random.default_rng(seed)
    G0 = random_pure_g(rng, n_states)
    times = np.linspace(0, 10, 1001)
    worst_rk4 = worst_closed = 0.0
    n = int(round(10.0 / dt))
    for name in PRESETS:
        m = preset(name)
        G = G0.copy()
        f = lambda X: _riccati_rhs(X, m)
        for _ in range(n):
            k1 = f(G)
            k2 = f(G + 0.5 * dt * k1)
            k3 = f(G + 0.5 * dt * k2)
            k4 = f(G + dt * k3)
            G = G + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            worst_rk4 = max(worst_rk4, np.abs(np.linalg.det(G) - 1).max())
        for g in G0:
            worst_closed = max(worst_closed, np.abs(np.linalg.det(sse_g_closed_form(g, m, times)) - 1).max())
    worst = max(worst_rk4, worst_closed)
    return CheckResult(5, "purity conservation", worst <= tol,
                       f"max |det G - 1| = {worst:.1e} (RK4 {worst_rk4:.1e}, closed form {worst_closed:.1e})",
                       dict(rk4=worst_rk4, closed=worst_closed))


def _initial_frame():
    s0 = GaussianState.squeezed()
    return hagedorn_from_g(s0.G), s0.centre


def check_propagator_oracle(n_max=8, D=96, t=1.0, tol=1e-6, max_seconds=30.0):
    t0 = time.perf_counter()
    a0, z0 = _initial_frame()
    worst = 0.0
    for name in PRESETS:
        m = preset(name)
        K = build_effective_k(m)
        f0 = propagate_frame(a0, z0, K, m.hbar, 0.0)
        f1 = propagate_frame(a0, z0, K, m.hbar, t)
        U = u_matrix(f0, f1, K, n_max)
        ops = fock_operators(m, D)
        P0 = fock_basis_matrix(Frame(f0.a, f0.z), m.hbar, n_max, D)
        P1 = fock_basis_matrix(Frame(f1.a, f1.z), m.hbar, n_max, D)
        ref = P1.conj().T @ nonhermitian_propagator(ops, t) @ P0
        worst = max(worst, np.abs(U - ref).max())
    elapsed = time.perf_counter() - t0
    ok = worst < tol and elapsed < max_seconds
    return CheckResult(6, "Hagedorn propagator vs Fock oracle", ok,
                       f"max entry error {worst:.1e}, {elapsed:.1f}s", dict(error=worst, seconds=elapsed))


def check_ladder_identity(n_draws=100, n_max=10, seed=0, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_draws):
        hp, hm, h0 = unit_disk(rng, 3)
        err = np.abs(ladder_expansion_b(hp, hm, h0, n_max) - ladder_power_expansion(hp, hm, h0, n_max)).max()
        worst = max(worst, err)
    return CheckResult(7, "ladder-power closed form", worst < tol, f"max error {worst:.1e}", dict(error=worst))


def check_egorov(D=96, block=40, t=1.0, tol=1e-6):
    b = _initial_frame()[0]
    chi = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    worst = 0.0
    for name in PRESETS:
        m = preset(name)
        K = build_effective_k(m)
        ops = fock_operators(m, D)
        eye = np.eye(D)
        c = 1j / np.sqrt(2 * m.hbar)

        def ladder(v, w):
            return c * (v[0] * (ops.p - w[1] * eye) - v[1] * (ops.x - w[0] * eye))

        U = expm(-1j * ops.K * t / m.hbar)
        Uinv = expm(1j * ops.K * t / m.hbar)
        fl = linearized_flow(K, t)
        dev = U @ ladder(b, chi) @ Uinv - ladder(fl.S @ b, fl.phi(chi))
        worst = max(worst, np.abs(dev[:block, :block]).max())
    return CheckResult(8, "transport of ladder operators", worst < tol,
                       f"max deviation {worst:.1e} on the {block}x{block} block", dict(error=worst))


FORCED_JUMPS = (1.5, 3.2, 6.0, 8.75)


def check_jump_equivalence(D=96, dt=1e-3, t_end=10.0, tol=1e-6):
    s0 = GaussianState.squeezed()
    worst = 0.0
    for name in PRESETS:
        m = preset(name)
        A = run_scheme_a(m, s0, t_end, forced_jumps=list(FORCED_JUMPS))
        B = run_scheme_b(m, s0, FrameTable(m, s0, t_end, dt), forced_jumps=list(FORCED_JUMPS))
        ops = fock_operators(m, D)
        F = fock_jump_trajectory(gaussian_to_fock(s0, m.hbar, D), ops, t_end, dt, step="expm",
                                 forced_jumps=list(FORCED_JUMPS))
        vA, vB, vF = fock_state_of(A, m.hbar, D), fock_state_of(B, m.hbar, D), F.states[-1]
        for u, v in ((vA, vB), (vA, vF), (vB, vF)):
            worst = max(worst, abs(1 - abs(np.vdot(u, v)) ** 2))
    return CheckResult(9, "jump-scheme equivalence", worst <= tol,
                       f"min fidelity 1 - {worst:.1e}", dict(infidelity=worst))


def check_ensemble(n_traj=2000, seed=0, dt=1e-3, workers=1, max_seconds=300.0):
    s0 = GaussianState.squeezed()
    times = np.array([0.0, 1.0, 5.0])
    t0 = time.perf_counter()
    rows, ok = [], True
    for name in PRESETS:
        m = preset(name)
        for method in ("sse", "jump-b"):
            stats = run_ensemble(method, m, s0, 5.0, n_traj, seed=seed, dt=dt, output_times=times,
                                 workers=workers)
            cmp = compare_to_lindblad(stats, m, s0)
            sel = times > 0
            z, rel = cmp["z_scores"][sel].max(), cmp["rel_cov_error"][sel].max()
            good = z <= 3 and rel <= 0.05
            ok &= good
            rows.append(dict(model=name, method=method, z=z, rel=rel))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < max_seconds
    worst_z = max(r["z"] for r in rows)
    worst_rel = max(r["rel"] for r in rows)
    return CheckResult(10, "ensembles recover Lindblad", bool(ok),
                       f"max |z| {worst_z:.2f} (<= 3), max rel. cov. error {worst_rel:.3f} (<= 0.05), "
                       f"{elapsed:.0f}s", dict(rows=rows, seconds=elapsed))


def check_damped_asymptotics(n_runs=200, seed=0, dt=1e-3, t_end=10.0):
    m = damped_oscillator()
    s0 = GaussianState.squeezed()
    half = 0.5 * m.hbar * np.eye(2)
    gamma = 0.2
    env = 0.2 * np.exp(-gamma * t_end)
    dev_l = np.abs(covariance_from_g(lindblad_closed_form(s0, m, t_end), m.hbar) - half).max()
    dev_s = np.abs(covariance_from_g(sse_g_closed_form(s0.G, m, t_end), m.hbar) - half).max()
    table = FrameTable(m, s0, t_end, dt)
    last = table.times.size - 1
    mass, fid, centres, covs = [], [], [], []
    for i in range(n_runs):
        tr = run_scheme_b(m, s0, table, NoiseDriver(seed, i), output_indices=[last])
        mass.append(ground_state_mass(tr))
        fid.append(coherent_fidelity(tr, m.hbar))
        centres.append(tr.centres[-1])
        covs.append(tr.covariances[-1])
    mass, fid, covs = np.array(mass), np.array(fid), np.array(covs)
    dev_traj = np.abs(covs - half).max(axis=(1, 2))
    spread = np.array(centres) - np.mean(centres, axis=0)
    mix = covs.mean(axis=0) + spread.T @ spread / n_runs
    dev_j = np.abs(mix - half).max()
    frac_mass = (mass >= 0.99).mean()
    ok = dev_l <= env and dev_s <= env and dev_j <= env and frac_mass >= 0.9
    detail = (f"envelope {env:.4f}; |Sigma(10) - I/2| Lindblad {dev_l:.4f}, SSE {dev_s:.4f}, "
              f"jump mixture {dev_j:.4f}; moving-basis ground mass >= 0.99 in {frac_mass:.1%} of runs "
              f"(own-centre coherent fidelity >= 0.99 in {(fid >= 0.99).mean():.1%})")
    return CheckResult(11, "Example-2 asymptotics", bool(ok), detail, dict(
        envelope=env, lindblad=dev_l, sse=dev_s, jump_mixture=dev_j, jump_per_traj=dev_traj,
        mass=mass, coherent_fidelity=fid, frac_mass=frac_mass))


def post_jump_wigner(traj, hbar, index=0, n=257, width=6.0):
    """Wigner grid of the state right after jump ``index``."""
    _, frame, d = traj.jumps[index]
    return wigner_of_coefficients(d, frame, hbar, n, n, width)


def check_post_jump_negativity(n_seeds=50, seed=0, t_end=50.0, rel_floor=1e-6):
    m = position_measurement()
    s0 = GaussianState.squeezed()
    ratios = []
    for i in range(n_seeds):
        tr = run_scheme_a(m, s0, t_end, NoiseDriver(seed, i), output_times=[0.0], max_jumps=1)
        if not tr.jumps:
            ratios.append(np.nan)
            continue
        W = post_jump_wigner(tr, m.hbar).values
        ratios.append(W.min() / W.max())
    ratios = np.array(ratios)
    negative = ratios < -rel_floor
    return CheckResult(12, "Wigner negativity after the first jump", bool(negative.all()),
                       f"{negative.sum()}/{n_seeds} seeds negative; weakest min/max {np.nanmax(ratios):.1e}",
                       dict(ratios=ratios))


def check_norm_monotone(n_traj=1000, seed=0, dt=1e-3, t_end=10.0):
    s0 = GaussianState.squeezed()
    failures = []
    per_model = n_traj // len(PRESETS)
    for j, name in enumerate(PRESETS):
        m = preset(name)
        table = FrameTable(m, s0, t_end, dt)
        last = table.times.size - 1
        for i in range(per_model):
            try:
                run_scheme_b(m, s0, table, NoiseDriver(seed + j, i), output_indices=[last],
                             check_monotone=True)
            except AssertionError as exc:
                failures.append(f"{name}/{i}: {exc}")
    n = per_model * len(PRESETS)
    return CheckResult(13, "survival norm monotone between jumps", not failures,
                       f"{n - len(failures)}/{n} trajectories monotone to 1e-12 per step",
                       dict(failures=failures))


CHECKS = {
    1: check_lindblad_variances,
    2: check_sse_fixed_point,
    3: check_lambda,
    4: check_symplectic,
    5: check_purity,
    6: check_propagator_oracle,
    7: check_ladder_identity,
    8: check_egorov,
    9: check_jump_equivalence,
    10: check_ensemble,
    11: check_damped_asymptotics,
    12: check_post_jump_negativity,
    13: check_norm_monotone,
}

SLOW = (10, 11, 13)


def run_checks(numbers=None, quick=False, report=print):
    """Run the selected criteria and report one line each. Returns the results."""
    numbers = sorted(CHECKS) if numbers is None else list(numbers)
    out = []
    for k in numbers:
        if quick and k in SLOW:
            continue
        res = CHECKS[k]()
        out.append(res)
        if report is not None:
            report(res.line())
    return out
