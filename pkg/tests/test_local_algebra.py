import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freemotzkin import local_algebra as la
from freemotzkin.local_algebra import D, F, U

finite = st.floats(-4, 4, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


def ket(a, b):
    return la.two_site_ket(a, b)


def test_projectors_agree_with_pauli_forms():
    assert np.allclose(la.u_projector(), la.u_projector_pauli())
    assert np.allclose(la.d_projector(), la.d_projector_pauli())


def test_tl_generator_squares_to_twice_itself():
    e = la.build_tl_generator()
    assert np.allclose(e @ e, 2 * e)
    assert np.linalg.matrix_rank(e) == 2
    assert np.allclose(e, e.T)


def test_tl_braid_relation_on_three_sites():
    e = la.build_tl_generator()
    e12 = np.kron(e, np.eye(3))
    e23 = np.kron(np.eye(3), e)
    assert np.allclose(e12 @ e23 @ e12, e12)
    assert np.allclose(e23 @ e12 @ e23, e23)


@pytest.mark.parametrize("lam,eta", [(0.7, 1.0), (-1.3 + 0.4j, 0.5 - 0.2j)])
def test_r_matrix_elements_by_hand(lam, eta):
    r = la.build_r(lam, eta)
    # e annihilates |uu>, |ud>, |du>, |ff>: R is (lam + eta) times the swap there.
    for a, b in [(U, U), (U, D), (D, U), (F, F), (D, D)]:
        assert np.allclose(r @ ket(a, b), (lam + eta) * ket(b, a))
    # e|uf> = |uf> - |fu>, so R|uf> = eta|fu> + lam|uf>.
    assert np.allclose(r @ ket(U, F), eta * ket(F, U) + lam * ket(U, F))
    assert np.allclose(r @ ket(F, D), eta * ket(D, F) + lam * ket(F, D))


def test_initial_condition_and_projection():
    assert la.initial_condition_residual(0.8) == 0
    assert la.projection_residual(0.8) == 0
    assert np.allclose(la.build_r(0, 1.3), 1.3 * la.permutation())


def test_r_tilde_is_large_lambda_limit():
    lam = 1e8
    assert np.allclose(la.build_r(lam, 1.0) / lam, la.r_tilde(), atol=1e-7)


def test_embed_three_matches_kron():
    op = np.arange(81.0).reshape(9, 9)
    assert np.allclose(la.embed_three(op, (0, 1)), np.kron(op, np.eye(3)))
    assert np.allclose(la.embed_three(op, (1, 2)), np.kron(np.eye(3), op))
    p = la.permutation()
    p12 = np.kron(p, np.eye(3))
    assert np.allclose(la.embed_three(op, (1, 0)), p12 @ np.kron(op, np.eye(3)) @ p12)


def test_partial_transpose_is_singular_but_r_is_not():
    for lam in [0.3, 1.7 - 0.2j, -2.5]:
        assert abs(la.check_partial_transpose_degenerate(lam)) < 1e-10
        assert abs(np.linalg.det(la.build_r(lam))) > 1e-6


def test_ybe_fails_for_a_perturbed_r():
    # Guard against a vacuous check: a generic deformation must break YBE.
    def bad_r(lam, eta=1.0):
        return la.build_r(lam, eta) + 0.1 * lam**2 * np.eye(9)

    r12 = la.embed_three(bad_r(0.4), (0, 1))
    r13 = la.embed_three(bad_r(1.1), (0, 2))
    r23 = la.embed_three(bad_r(0.7), (1, 2))
    assert np.abs(r12 @ r13 @ r23 - r23 @ r13 @ r12).max() > 1e-3


@settings(max_examples=60, deadline=None)
@given(cplx, cplx, st.sampled_from([1.0, 0.5, -0.7 + 0.3j]))
def test_ybe_property(lam, nu, eta):
    assert la.ybe_relative(lam, nu, eta) < 1e-12


@settings(max_examples=60, deadline=None)
@given(cplx, st.sampled_from([1.0, 2.0, 0.3 - 1.1j]))
def test_unitarity_property(lam, eta):
    assert la.unitarity_relative(lam, eta) < 1e-12
    assert la.partial_transpose_relative(lam, eta) < 1e-12


def test_operators_close():
    a = np.eye(3)
    assert la.operators_close(a, a + 1e-14)
    assert not la.operators_close(a, a + 1e-6)
    assert not la.operators_close(a, np.eye(4))
