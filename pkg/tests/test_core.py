import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from lindjump.core import (
    OMEGA, FrameNotNormalisedError, expand_in_frame, hermitian_form, mat_exp_2x2,
)

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)
vec2 = st.builds(lambda a, b: np.array([a, b]), cplx, cplx)


def normalised(v):
    h = hermitian_form(v, v).real
    if abs(h) < 1e-3:
        return None
    return v / np.sqrt(h) if h > 0 else np.conj(v) / np.sqrt(-h)


def taylor(M, t, terms=60):
    # scaled Taylor series: exp(A) = exp(A/2^s)^(2^s)
    A = np.asarray(M, complex) * t
    s = max(0, int(np.ceil(np.log2(max(np.abs(A).sum(), 1.0)))) + 2)
    A = A / 2**s
    out, term = np.eye(2, dtype=complex), np.eye(2, dtype=complex)
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def test_symplectic_form():
    assert np.array_equal(OMEGA.T, -OMEGA)
    assert np.array_equal(OMEGA @ OMEGA, -np.eye(2))


@pytest.mark.parametrize("a", [[1, 1j], [1 / np.sqrt(2), 1j * np.sqrt(2)]])
def test_hermitian_form_normalisation(a):
    assert hermitian_form(a, a) == pytest.approx(1, abs=1e-15)


def test_conjugate_pair_is_h_orthogonal():
    a = np.array([0.7 + 0.2j, 0.1 + 1.5j])
    a = normalised(a)
    assert abs(hermitian_form(np.conj(a), a)) < 1e-15


@given(vec2)
def test_hermitian_form_real_and_conjugate_flip(a):
    h = hermitian_form(a, a)
    assert abs(h.imag) <= 1e-12 * max(1, abs(h))
    assert hermitian_form(np.conj(a), np.conj(a)) == pytest.approx(-h, abs=1e-12)


@given(vec2, vec2, cplx)
def test_hermitian_form_sesquilinear(a, b, s):
    assert hermitian_form(s * a, b) == pytest.approx(np.conj(s) * hermitian_form(a, b), abs=1e-9)
    assert hermitian_form(a, s * b) == pytest.approx(s * hermitian_form(a, b), abs=1e-9)


def test_expand_trivial_cases():
    a = np.array([1, 1j])
    assert np.allclose(expand_in_frame(a, a), (1, 0), atol=1e-15)
    assert np.allclose(expand_in_frame(np.conj(a), a), (0, 1), atol=1e-15)
    cp, cm = expand_in_frame([1, 0], a)
    assert np.abs(cp * a + cm * np.conj(a) - [1, 0]).max() < 1e-14


@given(vec2, vec2)
def test_expand_reconstructs(a, b):
    a = normalised(a)
    if a is None:
        return
    cp, cm = expand_in_frame(b, a)
    assert np.abs(cp * a + cm * np.conj(a) - b).max() < 1e-13 * max(1, np.abs(b).max()) * max(1, np.abs(a).max()) ** 2


def test_expand_rejects_unnormalised():
    with pytest.raises(FrameNotNormalisedError):
        expand_in_frame([1, 0], [1, 2j])


def test_mat_exp_trivial():
    assert np.array_equal(mat_exp_2x2(np.zeros((2, 2)), 3.0), np.eye(2))
    assert np.abs(mat_exp_2x2(OMEGA, np.pi / 2) - [[0, 1], [-1, 0]]).max() < 1e-15


def test_mat_exp_example1_generator():
    M = np.array([[0, 1], [-1 + 0.2j, 0]])
    assert np.abs(mat_exp_2x2(M, 1.0) - taylor(M, 1.0)).max() < 1e-12


def test_mat_exp_degenerate_and_nilpotent():
    N = np.array([[0, 1], [0, 0]], complex)
    assert np.abs(mat_exp_2x2(N, 2.5) - [[1, 2.5], [0, 1]]).max() < 1e-14
    J = np.array([[0.3, 1], [0, 0.3 + 1e-10]])
    assert np.abs(mat_exp_2x2(J, 1.7) - expm(1.7 * J)).max() < 1e-12


def test_mat_exp_vectorised_over_t():
    M = np.array([[0.1, 1], [-1, 0.2j]])
    t = np.array([0.0, 0.5, 2.0])
    out = mat_exp_2x2(M, t)
    assert out.shape == (3, 2, 2)
    for k, tk in enumerate(t):
        assert np.abs(out[k] - expm(tk * M)).max() < 1e-13


@given(st.lists(cplx, min_size=4, max_size=4), st.floats(-2, 2), st.floats(-2, 2))
def test_mat_exp_group_property(entries, s, t):
    M = np.array(entries).reshape(2, 2)
    nrm = np.linalg.norm(M)  # can underflow to zero for subnormal entries
    if nrm > 0:
        M = M * min(1.0, 5 / nrm)
    lhs = mat_exp_2x2(M, s + t)
    rhs = mat_exp_2x2(M, s) @ mat_exp_2x2(M, t)
    assert np.abs(lhs - rhs).max() < 1e-11 * max(1, np.abs(lhs).max())


@given(finite, finite, finite, st.floats(-2, 2))
def test_real_hamiltonian_flow_is_real_symplectic(h00, h01, h11, t):
    M = OMEGA @ np.array([[h00, h01], [h01, h11]])
    S = mat_exp_2x2(M, t)
    assert np.abs(S.imag).max() < 1e-12 * max(1, np.abs(S).max())
    assert np.abs(S.T @ OMEGA @ S - OMEGA).max() < 1e-12 * max(1, np.abs(S).max()) ** 2
