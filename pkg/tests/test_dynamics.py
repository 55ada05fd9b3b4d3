import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindjump.core import OMEGA
from lindjump.dynamics import (
    NoiseDriver, integrate, integrate_params, lindblad_closed_form, lindblad_g_closed_form,
    lindblad_rhs, nonhermitian_rhs, run_sse, sse_g_closed_form, sse_g_from_frame, sse_noise_matrix,
    sse_step,
)
from lindjump.gaussian import GaussianState, covariance_from_g
from lindjump.model import (
    LinearLindbladian, ModelConfig, QuadraticHamiltonian, example1_reference,
    example2_reference, position_measurement,
)
from lindjump.validation import random_pure_g


def _riccati(G, model):
    _, dG = nonhermitian_rhs(GaussianState([0, 0], G), model)
    return dG


def test_noise_driver_reproducible_and_independent():
    a = NoiseDriver(3, 7).increments(0.01, 1000)
    b = NoiseDriver(3, 7).increments(0.01, 1000)
    c = NoiseDriver(3, 8).increments(0.01, 1000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    big = NoiseDriver(0, 0).increments(0.01, 200000)
    assert big.var(axis=0) == pytest.approx([0.01, 0.01], rel=0.02)
    assert abs(np.mean(big[:, 0] * big[:, 1])) < 5 * 0.01 / np.sqrt(200000)


def test_lindblad_rhs_centres(ex1, ex2):
    z = np.array([0.7, -0.3])
    s = GaussianState(z, np.eye(2))
    dz, _ = lindblad_rhs(s, ex1)
    assert np.allclose(dz, OMEGA @ z)
    dz, _ = lindblad_rhs(s, ex2)
    assert np.allclose(dz, OMEGA @ z - 0.1 * z)


def test_lindblad_rhs_closed_system():
    m = position_measurement(1.3, 0.0)
    G = np.array([[2.0, 0.3], [0.3, 0.6]])
    _, dG = lindblad_rhs(GaussianState([0, 0], G), m)
    H2 = m.hamiltonian.H2
    assert np.allclose(dG, H2 @ OMEGA @ G - G @ OMEGA @ H2)


def test_lindblad_closed_form_matches_reference_variances(ex1, squeezed):
    for t in (1.0, 5.0, 10.0):
        sig = covariance_from_g(lindblad_closed_form(squeezed, ex1, t), 1.0)
        ref = example1_reference(t)
        assert sig[0, 0] == pytest.approx(ref.var_x, abs=1e-8)
        assert sig[1, 1] == pytest.approx(ref.var_p, abs=1e-8)
    assert np.allclose(lindblad_g_closed_form(squeezed.G, ex1, 0.0), squeezed.G, atol=1e-15)


def test_lindblad_closed_form_vs_rk4(ex1, ex2, squeezed):
    for m in (ex1, ex2):
        tr = integrate_params(lindblad_rhs, squeezed, m, 10.0, 1e-3, "lindblad")
        for k in range(0, tr.times.size, 500):
            ref = lindblad_closed_form(squeezed, m, tr.times[k])
            assert np.abs(tr.G[k] - ref.G).max() < 1e-7
            assert np.abs(tr.centres[k] - ref.centre).max() < 1e-7


def test_lindblad_det_g_bounded(ex1, ex2, squeezed):
    t = np.linspace(0, 10, 101)
    for m in (ex1, ex2):
        dets = [np.linalg.det(lindblad_closed_form(squeezed, m, tk).G) for tk in t]
        assert max(dets) <= 1 + 1e-9
    # Hermitian L: purity decreases monotonically; the damped oscillator
    # instead relaxes back towards the pure vacuum
    dets = [np.linalg.det(lindblad_closed_form(squeezed, ex1, tk).G) for tk in t]
    assert np.all(np.diff(dets) <= 1e-12)


def test_example2_lindblad_covariance(ex2, squeezed):
    for t in (0.5, 3.0, 10.0):
        sig = covariance_from_g(lindblad_closed_form(squeezed, ex2, t), 1.0)
        assert np.abs(sig - example2_reference(t).sigma_lindblad).max() < 1e-12


def test_sse_g_closed_form(ex1, ex2, squeezed):
    assert np.allclose(sse_g_closed_form(squeezed.G, ex1, 0.0), squeezed.G)
    t = np.linspace(0, 10, 41)
    G = sse_g_closed_form(squeezed.G, ex2, t)
    sig = 0.5 * np.linalg.inv(G)
    assert np.abs(sig - example2_reference(t).sigma_sse).max() < 1e-8
    for m in (ex1, ex2):
        G = sse_g_closed_form(squeezed.G, m, t)
        assert np.abs(np.linalg.det(G) - 1).max() < 1e-10
        assert np.abs(G - sse_g_from_frame(squeezed.G, m, t)).max() < 1e-10


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_sse_g_closed_form_solves_riccati(seed):
    G0 = random_pure_g(np.random.default_rng(seed), 1)[0]
    m = position_measurement()
    _, Gs = integrate(lambda t, G: _riccati(G, m), G0, 1.0, 2e-3)
    assert np.abs(Gs[-1] - sse_g_closed_form(G0, m, 1.0)).max() < 1e-8 * np.abs(G0).max() ** 2


def test_sse_noise_blocks(ex1, ex2):
    G = np.array([[2.0, 0.3], [0.3, 0.545]])
    B = sse_noise_matrix(G, ex1)
    c = np.sqrt(0.2 / 2)
    assert np.allclose(B[:, 0], c * np.linalg.inv(G)[:, 0])
    assert np.allclose(B[:, 1], [0, c])
    assert np.abs(sse_noise_matrix(np.eye(2), ex2)).max() < 1e-16


def test_sse_step_zero_noise_is_lindblad_drift(ex1, squeezed):
    s = sse_step(squeezed, ex1, 1e-3, np.zeros(2))
    dz, _ = lindblad_rhs(squeezed, ex1)
    assert np.allclose(s.centre, squeezed.centre + 1e-3 * dz, atol=1e-15)
    assert abs(np.linalg.det(s.G) - 1) < 1e-12


def test_sse_step_halves_on_bad_g(ex1):
    # a very long step would leave the SPD cone; sub-steps recover
    s = GaussianState([0, 0], np.diag([50.0, 0.02]))
    out = sse_step(s, ex1, 0.5, np.zeros(2))
    assert np.all(np.linalg.eigvalsh(out.G) > 0)


def test_nonhermitian_centres(ex1, ex2, squeezed):
    z = np.array([0.8, -0.4])
    G = sse_g_closed_form(squeezed.G, ex1, 1.3)
    sig = 0.5 * np.linalg.inv(G)
    dz, _ = nonhermitian_rhs(GaussianState(z, G), ex1)
    assert np.allclose(dz, OMEGA @ z - 2 * 0.2 * z[0] * sig[:, 0])
    G = sse_g_closed_form(squeezed.G, ex2, 1.3)
    sig = 0.5 * np.linalg.inv(G)
    dz, _ = nonhermitian_rhs(GaussianState(z, G), ex2)
    assert np.allclose(dz, OMEGA @ z - 0.2 * sig @ z)
    free = ModelConfig(QuadraticHamiltonian(np.eye(2)), LinearLindbladian([0, 0]))
    dz, dG = nonhermitian_rhs(GaussianState(z, G), free)
    assert np.allclose(dz, OMEGA @ z)


def test_coherent_state_is_fixed_point(ex2):
    c = GaussianState([0.5, 0.2], np.eye(2))
    _, dG = lindblad_rhs(c, ex2)
    assert np.abs(dG).max() < 1e-15
    _, dG = nonhermitian_rhs(c, ex2)
    assert np.abs(dG).max() < 1e-15


def test_integrate_linear_and_errors():
    t, y = integrate(lambda t, y: np.array([2.0]), [1.0], 1.0, 0.1)
    assert np.allclose(y[:, 0], 1 + 2 * t)
    with pytest.raises(ValueError):
        integrate(lambda t, y: y, [1.0], 1.0, 0.3)


def test_sse_strong_order(ex1, squeezed):
    # shared Brownian path on the finest grid, coarsened by summation
    n_paths, t_end, fine = 20, 2.0, 1e-4
    K = int(t_end / fine)
    errs = {}
    for dt in (4e-3, 2e-3):
        e = []
        for j in range(n_paths):
            dW = NoiseDriver(11, j).increments(fine, K)
            ref = _em(ex1, squeezed, fine, dW)
            r = int(round(dt / fine))
            e.append(np.abs(_em(ex1, squeezed, dt, dW.reshape(-1, r, 2).sum(1)) - ref).max())
        errs[dt] = np.mean(e)
    ratio = errs[4e-3] / errs[2e-3]
    assert 2 * 0.8 <= ratio <= 2 * 1.2


def _em(model, state, dt, dW):
    G = sse_g_closed_form(state.G, model, dt * np.arange(dW.shape[0] + 1))
    B = sse_noise_matrix(G, model)
    F = OMEGA @ model.hamiltonian.H2
    z = state.centre.copy()
    for k in range(dW.shape[0]):
        z = z + F @ z * dt + B[k] @ dW[k]
    return z


def test_run_sse_reproducible_and_pure(ex1, squeezed):
    a = run_sse(ex1, squeezed, 1.0, 1e-3, NoiseDriver(5, 2), stride=100)
    b = run_sse(ex1, squeezed, 1.0, 1e-3, NoiseDriver(5, 2), stride=100)
    assert np.array_equal(a.centres, b.centres)
    assert a.times.size == 11
    assert np.abs(np.linalg.det(a.G) - 1).max() < 1e-10
