"""
Monodromy and transfer matrices of the periodic chain.

    T_0(lam) = R_0N(lam - theta_N) ... R_01(lam - theta_1)

The auxiliary space is the leftmost tensor factor and site 1 the most
significant quantum digit, so T_0 is a (3*3^N) x (3*3^N) matrix whose 3x3
auxiliary blocks are

    A   B1  B2
    C1  D11 D12
    C2  D21 D22

and t(lam) = A + D11 + D22.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .config import ConfigurationError, PreconditionError, check_dense_cap
from .local_algebra import build_r, build_tl_generator


@dataclass
class ChainConfig:
    n_sites: int
    eta: complex = 1.0
    thetas: np.ndarray = None
    max_sites: int = 8
    allow_large: bool = False

    def __post_init__(self):
        if self.n_sites < 1:
            raise ConfigurationError("n_sites must be positive")
        if self.eta == 0:
            raise ConfigurationError("eta must be non-zero")
        if self.thetas is None:
            self.thetas = np.zeros(self.n_sites, dtype=complex)
        self.thetas = np.asarray(self.thetas, dtype=complex)
        if self.thetas.shape != (self.n_sites,):
            raise ConfigurationError(
                f"expected {self.n_sites} inhomogeneities, got shape {self.thetas.shape}"
            )

    @property
    def dim(self):
        return 3**self.n_sites

    @property
    def homogeneous(self):
        return bool(np.all(self.thetas == 0))

    def check_generic(self, tol=1e-12):
        """Raise unless theta_j - theta_k avoids {0, +-eta} for j != k."""
        th = self.thetas
        diff = th[:, None] - th[None, :]
        off = ~np.eye(self.n_sites, dtype=bool)
        for shift in (0.0, self.eta, -self.eta):
            if np.any(np.abs(diff[off] - shift) < tol):
                raise PreconditionError(
                    "inhomogeneities must satisfy theta_j - theta_k not in {0, +-eta}"
                )

    def a(self, lam):
        """Vacuum eigenvalue of A: prod_j (lam - theta_j + eta)."""
        return complex(np.prod(lam - self.thetas + self.eta))

    def d(self, lam):
        """Vacuum eigenvalue of D11: prod_j (lam - theta_j)."""
        return complex(np.prod(lam - self.thetas))


def random_thetas(n_sites, seed, width=1.0):
    """Inhomogeneities drawn uniformly from [-width, width) with numpy's PCG64."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-width, width, size=n_sites).astype(complex)


def _apply_r0j(state, r, j, n_sites, local_dim=3):
    """Left-multiply a (d * d^N, K) array by R_0j, site j counted from 0."""
    d = local_dim
    k = state.shape[1]
    t = state.reshape(d, d**j, d, d ** (n_sites - j - 1), k)
    t = np.einsum("ASas,axsyk->AxSyk", r.reshape(d, d, d, d), t, optimize=True)
    return t.reshape(d ** (n_sites + 1), k)


def _product_on(cols, lam, thetas, eta, r_builder=build_r, local_dim=3):
    n_sites = len(thetas)
    for j in range(n_sites):
        cols = _apply_r0j(cols, r_builder(lam - thetas[j], eta), j, n_sites, local_dim)
    return cols


def auxiliary_trace(lam, thetas, eta, r_builder=build_r, local_dim=3):
    """tr_0 of R_0N(lam - theta_N) ... R_01(lam - theta_1) for any local dimension."""
    d = local_dim
    dim = d ** len(thetas)
    out = np.zeros((dim, dim), dtype=complex)
    for a in range(d):
        cols = np.zeros((d * dim, dim), dtype=complex)
        cols[a * dim:(a + 1) * dim] = np.eye(dim)
        out += _product_on(cols, lam, thetas, eta, r_builder, d)[a * dim:(a + 1) * dim]
    return out


def build_monodromy(lam, cfg):
    """Dense monodromy matrix T_0(lam)."""
    check_dense_cap(cfg.n_sites, cfg.max_sites, cfg.allow_large)
    dim = 3 * cfg.dim
    return _product_on(np.eye(dim, dtype=complex), lam, cfg.thetas, cfg.eta)


@dataclass
class MonodromyBlocks:
    a: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    d11: np.ndarray
    d12: np.ndarray
    c2: np.ndarray
    d21: np.ndarray
    d22: np.ndarray

    def grid(self):
        return [
            [self.a, self.b1, self.b2],
            [self.c1, self.d11, self.d12],
            [self.c2, self.d21, self.d22],
        ]

    def assemble(self):
        return np.block(self.grid())


def extract_blocks(T, n_sites):
    d = 3**n_sites
    if T.shape != (3 * d, 3 * d):
        raise ConfigurationError(f"monodromy of shape {T.shape} does not match N={n_sites}")
    blk = [[T[r * d:(r + 1) * d, c * d:(c + 1) * d] for c in range(3)] for r in range(3)]
    return MonodromyBlocks(
        a=blk[0][0], b1=blk[0][1], b2=blk[0][2],
        c1=blk[1][0], d11=blk[1][1], d12=blk[1][2],
        c2=blk[2][0], d21=blk[2][1], d22=blk[2][2],
    )


def diagonal_blocks(lam, cfg):
    """(A, D11, D22) at lam without materialising the off-diagonal columns."""
    check_dense_cap(cfg.n_sites, cfg.max_sites, cfg.allow_large)
    d = cfg.dim
    out = []
    for a in range(3):
        cols = np.zeros((3 * d, d), dtype=complex)
        cols[a * d:(a + 1) * d] = np.eye(d)
        cols = _product_on(cols, lam, cfg.thetas, cfg.eta)
        out.append(cols[a * d:(a + 1) * d])
    return tuple(out)


def transfer_matrix(lam, cfg):
    check_dense_cap(cfg.n_sites, cfg.max_sites, cfg.allow_large)
    return auxiliary_trace(lam, cfg.thetas, cfg.eta)


@dataclass
class OperatorPolynomial:
    """Matrix polynomial sum_k coeffs[k] lam^k."""

    coeffs: list = field(default_factory=list)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, lam):
        out = np.zeros_like(self.coeffs[-1])
        for c in reversed(self.coeffs):
            out = out * lam + c
        return out

    def derivative(self):
        return OperatorPolynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    @property
    def top(self):
        return self.coeffs[-1]


def interpolation_nodes(cfg):
    """N+1 equispaced real nodes on [-s, s], s = max(1, max|theta| + |eta|)."""
    s = max(1.0, float(np.abs(cfg.thetas).max(initial=0.0)) + abs(cfg.eta))
    return s * np.linspace(-1.0, 1.0, cfg.n_sites + 1)


def interpolate_operator(func, nodes, jobs=1):
    nodes = np.asarray(nodes, dtype=float)
    if len(np.unique(nodes)) != len(nodes):
        raise ConfigurationError("interpolation nodes must be distinct")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            values = list(ex.map(func, nodes))
    else:
        values = [func(x) for x in nodes]
    vals = np.stack(values)
    vander = np.vander(nodes, increasing=True)
    coeffs = np.linalg.solve(vander, vals.reshape(len(nodes), -1))
    shape = vals.shape[1:]
    return OperatorPolynomial([c.reshape(shape) for c in coeffs])


def transfer_polynomial(cfg, nodes=None, jobs=1):
    """Matrix coefficients of t(lam), a polynomial of degree N."""
    if nodes is None:
        nodes = interpolation_nodes(cfg)
    if len(nodes) != cfg.n_sites + 1:
        raise ConfigurationError("need exactly N+1 nodes")
    return interpolate_operator(lambda x: transfer_matrix(x, cfg), nodes, jobs)


def block_polynomials(cfg, nodes=None):
    """Polynomials for A, D11 and D22 interpolated through the same nodes."""
    if nodes is None:
        nodes = interpolation_nodes(cfg)
    stacked = interpolate_operator(lambda x: np.stack(diagonal_blocks(x, cfg)), nodes)
    return tuple(OperatorPolynomial([c[i] for c in stacked.coeffs]) for i in range(3))


def _digits(n_sites, base=3):
    idx = np.arange(base**n_sites)
    powers = base ** np.arange(n_sites - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % base, powers


def embed_two_site(op, j, k, n_sites, local_dim=3):
    """Sparse embedding of a (d^2 x d^2) operator acting on sites (j, k)."""
    op = np.asarray(op)
    digits, powers = _digits(n_sites, local_dim)
    local = digits[:, j] * local_dim + digits[:, k]
    rows, cols, vals = [], [], []
    src = np.arange(local_dim**n_sites)
    for r, c in zip(*np.nonzero(op)):
        sel = local == c
        shift = (r // local_dim - c // local_dim) * powers[j] + (r % local_dim - c % local_dim) * powers[k]
        rows.append(src[sel] + shift)
        cols.append(src[sel])
        vals.append(np.full(sel.sum(), op[r, c]))
    dim = local_dim**n_sites
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )


def periodic_bond_sum(op, n_sites, local_dim=3):
    """sum_j op_{j,j+1} with op_{N,N+1} = op_{N,1}, as a sparse matrix."""
    if n_sites < 2:
        raise PreconditionError("a periodic bond sum needs N >= 2")
    total = None
    for j in range(n_sites):
        term = embed_two_site(op, j, (j + 1) % n_sites, n_sites, local_dim)
        total = term if total is None else total + term
    return total


def hamiltonian_sparse(n_sites):
    return periodic_bond_sum(build_tl_generator(), n_sites).real


def hamiltonian_direct(n_sites):
    """H = sum_j e_{j,j+1} with periodic boundary, dense and real."""
    check_dense_cap(n_sites)
    return hamiltonian_sparse(n_sites).toarray()


def cyclic_shift(n_sites, local_dim=3):
    """Permutation S with S|s_1 s_2 ... s_N> = |s_N s_1 ... s_{N-1}>.

    At theta = 0 one has t(0) = eta^N S.
    """
    digits, powers = _digits(n_sites, local_dim)
    target = np.roll(digits, 1, axis=1) @ powers
    dim = local_dim**n_sites
    s = np.zeros((dim, dim))
    s[target, np.arange(dim)] = 1.0
    return s


def hamiltonian_from_trace_identity(cfg, jobs=1):
    """H = -eta t'(0) t(0)^{-1} + N at theta = 0."""
    if not cfg.homogeneous:
        raise PreconditionError("the trace identity is evaluated at theta_j = 0")
    poly = transfer_polynomial(cfg, jobs=jobs)
    t_prime0 = poly.coeffs[1]
    # t(0)^{-1} = eta^{-N} S^{-1} and S^{-1} = S^T for a permutation.
    t0_inv = cyclic_shift(cfg.n_sites).T / cfg.eta**cfg.n_sites
    return -cfg.eta * (t_prime0 @ t0_inv) + cfg.n_sites * np.eye(cfg.dim)
