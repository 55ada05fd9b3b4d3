import numpy as np
import pytest
from scipy.optimize import brentq

from lindjump.dynamics import NoiseDriver, lindblad_closed_form
from lindjump.flow import propagate_frame
from lindjump.gaussian import GaussianState, covariance_from_g
from lindjump.hagedorn import l_matrix_nonorthogonal, l_matrix_orthonormal, overlap_matrix
from lindjump.jump import (
    DarkStateJumpError, FrameTable, apply_jump_nonorthogonal, apply_jump_orthonormal,
    coherent_fidelity, fock_state_of, ground_state_mass, run_scheme_a, run_scheme_b,
    sample_jump_time,
)
from lindjump.model import build_effective_k, damped_oscillator, position_measurement
from lindjump.oracle import (
    FOCK_FRAME, expectation_moments, fock_jump_trajectory, fock_operators, gaussian_to_fock,
    nonhermitian_propagator,
)

A0 = np.array([1 / np.sqrt(2), 1j * np.sqrt(2)])
Z0 = np.array([2.0, 0.0])
COHERENT = np.array([1.0, 1j])


def test_sample_jump_time_trivial(ex1):
    K = build_effective_k(ex1)
    assert sample_jump_time([1.0], A0, Z0, K, 1.0, 1.0, 2.5, 10.0) == 2.5


def test_dark_state_never_jumps(ex2):
    K = build_effective_k(ex2)
    for R in (0.999999, 0.5, 1e-6):
        assert sample_jump_time([1.0], COHERENT, [0.0, 0.0], K, 1.0, R, 0.0, 20.0) is None


def test_waiting_time_vs_dense(ex1):
    K = build_effective_k(ex1)
    t_j = sample_jump_time([1.0], COHERENT, [0.0, 0.0], K, 1.0, 0.5, 0.0, 50.0)
    ops = fock_operators(ex1, 64)
    psi0 = np.zeros(64, complex)
    psi0[0] = 1
    surv = lambda t: np.linalg.norm(nonhermitian_propagator(ops, t) @ psi0) ** 2 - 0.5
    assert t_j == pytest.approx(brentq(surv, 0.1, 50.0, xtol=1e-12), abs=1e-4)


def test_jump_orthonormal_ground_state():
    Lm = l_matrix_orthonormal(FOCK_FRAME, position_measurement().lindbladian, 1.0, 4)
    d = apply_jump_orthonormal([1.0], Lm)
    assert np.allclose(np.abs(d), [0, 1])
    again = d / np.linalg.norm(d)
    assert np.array_equal(again, d)
    lm_dark = l_matrix_orthonormal(FOCK_FRAME, damped_oscillator().lindbladian, 1.0, 4)
    with pytest.raises(DarkStateJumpError):
        apply_jump_orthonormal([1.0], lm_dark)


def test_jump_orthonormal_vs_dense(ex1):
    f = propagate_frame(A0, Z0, build_effective_k(ex1), 1.0, 1.3)
    d = np.array([0.6, 0.3 - 0.2j, 0.1j])
    d /= np.linalg.norm(d)
    new = apply_jump_orthonormal(d, l_matrix_orthonormal(f, ex1.lindbladian, 1.0, 3))
    from lindjump.oracle import fock_basis_matrix

    F = fock_basis_matrix(f, 1.0, 3, 96)
    ops = fock_operators(ex1, 96)
    dense = ops.L @ F[:, :3] @ d
    dense /= np.linalg.norm(dense)
    assert abs(np.vdot(dense, F @ new)) ** 2 > 1 - 1e-8


def test_jump_nonorthogonal_at_t0_matches_orthonormal(ex1):
    f0 = propagate_frame(A0, Z0, build_effective_k(ex1), 1.0, 0.0)
    c = np.array([0.8, 0.6j])
    LL = np.zeros((4, 4), complex)
    LL[:, :3] = l_matrix_nonorthogonal(f0, ex1.lindbladian, 1.0, 2)
    c_new = apply_jump_nonorthogonal(c, LL, overlap_matrix(f0, n_max=3))
    d_new = apply_jump_orthonormal(c, l_matrix_orthonormal(f0, ex1.lindbladian, 1.0, 3))
    assert c_new.size == c.size + 1
    assert np.allclose(c_new, d_new, atol=1e-14)


def test_closed_system_has_no_jumps(squeezed):
    m = position_measurement(1.0, 0.0)
    tr = run_scheme_a(m, squeezed, 5.0, NoiseDriver(0, 0), output_times=[0, 2.5, 5.0])
    assert tr.jump_times == []
    assert np.allclose(tr.norms, 1)
    assert np.allclose(tr.centres[-1], [2 * np.cos(5), -2 * np.sin(5)])


def test_mixed_initial_state_rejected(ex1):
    with pytest.raises(ValueError):
        run_scheme_a(ex1, GaussianState([0, 0], 0.5 * np.eye(2)), 1.0, NoiseDriver(0, 0))


def test_frame_table_grid_check(ex1, squeezed):
    with pytest.raises(ValueError):
        FrameTable(ex1, squeezed, 1.0, 0.3)


@pytest.fixture(scope="module")
def shared_seed():
    m = position_measurement()
    s = GaussianState.squeezed()
    table = FrameTable(m, s, 10.0, 1e-3)
    for i in range(200):
        b = run_scheme_b(m, s, table, NoiseDriver(7, i), output_stride=50)
        if len(b.jump_times) >= 3:
            return m, s, table, i, b
    raise RuntimeError("no trajectory with three jumps")


def test_schemes_agree_on_shared_seed(shared_seed):
    m, s, _, i, b = shared_seed
    a = run_scheme_a(m, s, 10.0, NoiseDriver(7, i), output_times=b.times)
    assert len(a.jump_times) == len(b.jump_times)
    assert 0 <= b.jump_times[0] - a.jump_times[0] < 1e-3
    assert np.all(np.diff(b.jump_times) > 0)
    # later jumps: each grid lag shifts the following state, so compare every
    # waiting time from the same post-jump state and the same threshold
    drv = NoiseDriver(7, i)
    thresholds = [drv.uniform() for _ in range(len(b.jump_times))]
    K = build_effective_k(m)
    for j in range(1, len(b.jump_times)):
        t_prev, frame, d = b.jumps[j - 1]
        exact = sample_jump_time(d, frame.a, frame.z, K, 1.0, thresholds[j], t_prev, 10.0)
        assert 0 <= b.jump_times[j] - exact < 1e-3 + 1e-9
    # between jumps the survival is non-increasing
    seg = np.searchsorted(b.jump_times, b.times, side="right")
    for k in np.unique(seg):
        assert np.all(np.diff(b.norms[seg == k]) <= 1e-12)


def test_scheme_b_observables_vs_dense(shared_seed):
    m, s, table, _, b = shared_seed
    ops = fock_operators(m, 96)
    psi0 = gaussian_to_fock(s, 1.0, 96)
    rec = fock_jump_trajectory(psi0, ops, 10.0, 1e-3, forced_jumps=b.jump_times)
    forced = run_scheme_b(m, s, table, forced_jumps=b.jump_times, output_stride=50)
    idx = np.rint(forced.times / 1e-3).astype(int)
    jumps = set(np.rint(np.array(b.jump_times) / 1e-3).astype(int))
    for j, k in enumerate(idx):
        if k in jumps:
            continue
        mean, cov = expectation_moments(rec.states[k], ops)
        assert np.abs(mean - forced.centres[j]).max() < 1e-5
        assert np.abs(cov - forced.covariances[j]).max() < 1e-5
    assert np.array_equal(forced.centres, b.centres)


def test_final_state_helpers(shared_seed):
    m, s, table, i, b = shared_seed
    assert 0 <= ground_state_mass(b) <= 1
    assert 0 <= coherent_fidelity(b, 1.0) <= 1 + 1e-12
    v = fock_state_of(b, 1.0, 96)
    assert np.linalg.norm(v) == pytest.approx(1)
    mean, _ = expectation_moments(v, fock_operators(m, 96))
    assert np.abs(mean - b.centres[-1]).max() < 1e-6


def test_rebase_keeps_state(ex1, squeezed):
    table = FrameTable(ex1, squeezed, 10.0, 1e-3)
    times = list(np.round(np.linspace(0.3, 9.9, 30), 3))
    b = run_scheme_b(ex1, squeezed, table, forced_jumps=times, output_stride=1000)
    a = run_scheme_a(ex1, squeezed, 10.0, forced_jumps=times, output_times=b.times)
    assert any(off > 0 for off, _ in b.evolved_coefficients)
    va, vb = fock_state_of(a, 1.0, 96), fock_state_of(b, 1.0, 96)
    assert abs(np.vdot(va, vb)) ** 2 > 1 - 1e-6


def test_expected_jump_count(squeezed):
    # the norm-threshold construction fixes the rate to <L^+L>/hbar
    hbar = 0.5
    m = position_measurement(1.0, 0.2, hbar)
    s = GaussianState.squeezed(2.0, (2.0, 0.0))
    t_end, n = 5.0, 2000
    table = FrameTable(m, s, t_end, 1e-3)
    counts = np.array([len(run_scheme_b(m, s, table, NoiseDriver(21, i), output_indices=[0]).jump_times)
                       for i in range(n)])
    t = np.linspace(0, t_end, 501)
    rate = []
    for tk in t:
        st = lindblad_closed_form(s, m, tk)
        rate.append(0.2 * (covariance_from_g(st, hbar)[0, 0] + st.centre[0] ** 2) / hbar)
    expected = np.trapezoid(rate, t)
    se = counts.std(ddof=1) / np.sqrt(n)
    assert abs(counts.mean() - expected) <= 3 * se
