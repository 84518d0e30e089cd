"""
Local (one- and two-site) operators of the free Motzkin chain.

Single-site basis ordering is u=0, f=1, d=2.  Two-site operators are 9x9
matrices in row-major tensor order, i.e. the basis
|uu>, |uf>, |ud>, |fu>, |ff>, |fd>, |du>, |df>, |dd>.

The R-matrix is

    R(lam) = P [(lam + eta) 1 - lam e]

with P the swap and e = U + D the Temperley-Lieb generator, U and D being
unnormalised projectors on |uf>-|fu> and |df>-|fd>.
"""

import numpy as np

from .config import DEFAULT_TOL

U, F, D = 0, 1, 2
LETTERS = "ufd"

KET = np.eye(3)

# Single-site operators.  I_u / u^a act on span{u, f}; I_d / d^a on span{f, d}.
I_U = np.diag([1.0, 1.0, 0.0])
UX = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
UY = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
UZ = np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex)

I_D = np.diag([0.0, 1.0, 1.0])
DX = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
DY = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex)
DZ = np.array([[0, 0, 0], [0, 1, 0], [0, 0, -1]], dtype=complex)

# S^+ = |u><d|,  S^- = |d><u|
S_PLUS = np.outer(KET[U], KET[D])
S_MINUS = np.outer(KET[D], KET[U])


def two_site_ket(a, b):
    return np.kron(KET[a], KET[b])


def permutation(local_dim=3):
    """Swap operator on C^d (x) C^d."""
    d = local_dim
    p = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            p[b * d + a, a * d + b] = 1.0
    return p


def _rank_one(v):
    return np.outer(v, v.conj())


def u_projector():
    """U = (|uf> - |fu>)(<uf| - <fu|)."""
    return _rank_one(two_site_ket(U, F) - two_site_ket(F, U))


def d_projector():
    """D = (|df> - |fd>)(<df| - <fd|)."""
    return _rank_one(two_site_ket(D, F) - two_site_ket(F, D))


def u_projector_pauli():
    """U through the su(2)-like matrices acting on span{u, f}."""
    return 0.5 * (np.kron(I_U, I_U) - np.kron(UX, UX) - np.kron(UY, UY) - np.kron(UZ, UZ))


def d_projector_pauli():
    return 0.5 * (np.kron(I_D, I_D) - np.kron(DX, DX) - np.kron(DY, DY) - np.kron(DZ, DZ))


def build_tl_generator():
    """Temperley-Lieb generator e = U + D; e/2 is an orthogonal projector of rank 2."""
    return u_projector() + d_projector()


_P9 = permutation(3)
_E9 = build_tl_generator()


def build_r(lam, eta=1.0):
    """9x9 R-matrix R(lam) = P[(lam + eta) 1 - lam e] as a complex array."""
    lam = complex(lam)
    eta = complex(eta)
    return _P9 @ ((lam + eta) * np.eye(9) - lam * _E9)


def r_tilde():
    """lim R(lam)/lam: swaps |ud> and |du>, identity elsewhere."""
    v = two_site_ket(U, D) - two_site_ket(D, U)
    return np.eye(9) - _rank_one(v)


def embed_three(op, pair):
    """Embed a 9x9 two-site operator into the 27-dim space of three sites.

    pair is an ordered tuple of distinct site labels from {0, 1, 2}; the first
    tensor leg of op acts on pair[0].  This gives R_12, R_13, R_23 and also the
    reversed R_21 = P R_12 P when pair=(1, 0).
    """
    i, j = pair
    (k,) = {0, 1, 2} - {i, j}
    t = op.reshape(3, 3, 3, 3)
    full = np.einsum("ABab,Cc->ABCabc", t, np.eye(3))
    # Legs are now (i, j, k) for outputs and inputs; move them into site order.
    order = np.argsort([i, j, k])
    full = full.transpose(*order, *(order + 3))
    return full.reshape(27, 27)


def _scale(*mats):
    return max(1.0, *(float(np.abs(m).max()) for m in mats))


def check_ybe(lam, nu, eta=1.0):
    """Max-norm of R12(lam) R13(lam+nu) R23(nu) - R23(nu) R13(lam+nu) R12(lam)."""
    r12 = embed_three(build_r(lam, eta), (0, 1))
    r13 = embed_three(build_r(lam + nu, eta), (0, 2))
    r23 = embed_three(build_r(nu, eta), (1, 2))
    lhs = r12 @ r13 @ r23
    rhs = r23 @ r13 @ r12
    return float(np.abs(lhs - rhs).max())


def ybe_relative(lam, nu, eta=1.0):
    r = build_r
    scale = _scale(r(lam, eta)) * _scale(r(lam + nu, eta)) * _scale(r(nu, eta))
    return check_ybe(lam, nu, eta) / scale


def check_unitarity(lam, eta=1.0):
    """Max-norm of R12(lam) R21(-lam) - (eta + lam)(eta - lam) 1."""
    r12 = build_r(lam, eta)
    r21 = _P9 @ build_r(-lam, eta) @ _P9
    target = (eta + lam) * (eta - lam) * np.eye(9)
    return float(np.abs(r12 @ r21 - target).max())


def unitarity_relative(lam, eta=1.0):
    return check_unitarity(lam, eta) / (_scale(build_r(lam, eta)) * _scale(build_r(-lam, eta)))


def partial_transpose_first(op, local_dim=3):
    d = local_dim
    t = op.reshape(d, d, d, d)  # (a', b', a, b)
    return t.transpose(2, 1, 0, 3).reshape(d * d, d * d)


def check_partial_transpose_degenerate(lam, eta=1.0):
    """Determinant of R(lam)^{t_1}; vanishes identically for this R-matrix."""
    return complex(np.linalg.det(partial_transpose_first(build_r(lam, eta))))


def partial_transpose_relative(lam, eta=1.0):
    return abs(check_partial_transpose_degenerate(lam, eta)) / _scale(build_r(lam, eta)) ** 9


def initial_condition_residual(eta=1.0):
    return float(np.abs(build_r(0.0, eta) - eta * _P9).max())


def projection_residual(eta=1.0):
    return float(np.abs(build_r(-eta, eta) + eta * _E9).max())


def operators_close(a, b, tol=DEFAULT_TOL):
    """Entrywise equality of two operators within the shared tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return bool(np.allclose(a, b, rtol=tol.rtol, atol=tol.atol))
