"""
Brute-force checks against exact diagonalisation.

The Hamiltonian, Omega and t(lam) commute, so the spectrum is resolved in
three nested stages: eigenspaces of the real symmetric H, then Omega
eigenspaces inside each (Omega is normal and its eigenvalues are exact roots
of unity, so grouping is unambiguous), then the eigenvalues of t(probe) on
each joint block.  Every basis state thereby gets a triple
(E, omega, Lam(probe)) that can be compared with a Bethe solution from the
same omega sector.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import local_algebra as la
from .bethe import problem_scale, tq_evaluate
from .chain_operators import (
    ChainConfig,
    build_monodromy,
    hamiltonian_direct,
    hamiltonian_from_trace_identity,
    hamiltonian_sparse,
    random_thetas,
    transfer_matrix,
    transfer_polynomial,
)
from .config import COMPLEX_ED_SITE_CAP, DEFAULT_TOL, PreconditionError, SizeError
from .omega import (
    OmegaValue,
    eigenvalue_multiset,
    omega_matrix_limit,
    omega_matrix_permutation,
    omega_matrix_recursive,
)

CLUSTER_TOL = 1e-8
ENERGY_MATCH_TOL = 1e-7
LAMBDA_MATCH_TOL = 1e-6
ILL_CONDITIONED = 1e6


def _rel(diff, *refs):
    return float(np.abs(diff).max()) / max(1.0, *(float(np.abs(r).max()) for r in refs))


def diagonalize_hamiltonian(n_sites, k=None):
    """All 3^N eigenvalues of H ascending (dense, N <= 8).

    With k given and N <= 12, only the k smallest are computed with a sparse
    Lanczos solver.
    """
    if k is not None:
        if n_sites > 12:
            raise SizeError("sparse extremal eigenvalues are capped at N <= 12")
        h = hamiltonian_sparse(n_sites)
        vals = spla.eigsh(h, k=k, which="SA", return_eigenvectors=False)
        return np.sort(vals)
    if n_sites > 8:
        raise SizeError("dense diagonalisation of H is capped at N <= 8")
    h = hamiltonian_direct(n_sites)
    if not np.allclose(h, h.T.conj(), atol=DEFAULT_TOL.atol):
        raise AssertionError("Hamiltonian is not hermitian")
    return np.linalg.eigvalsh(h)


def verify_operator_identities(cfg):
    """Relative residuals of t(theta_j) t(theta_j - eta) - Omega a(theta_j) d(theta_j - eta)."""
    if cfg.n_sites > 5:
        raise PreconditionError("operator identities are checked for N <= 5")
    cfg.check_generic()
    om = omega_matrix_permutation(cfg.n_sites)
    out = []
    for th in cfg.thetas:
        prod = transfer_matrix(th, cfg) @ transfer_matrix(th - cfg.eta, cfg)
        target = om * cfg.a(th) * cfg.d(th - cfg.eta)
        out.append(_rel(prod - target, target))
    return out


def verify_asymptotic(cfg):
    """Max-norm of (top coefficient of t) - (Omega + 1)."""
    if cfg.n_sites > 5:
        raise PreconditionError("asymptotic check is limited to N <= 5")
    top = transfer_polynomial(cfg).top
    target = omega_matrix_permutation(cfg.n_sites) + np.eye(cfg.dim)
    return float(np.abs(top - target).max())


def verify_commuting_family(n_sites, eta=1.0, n_pairs=10, seed=0, thetas=None):
    """Largest relative ||[t(lam), t(nu)]|| over random complex pairs."""
    if n_sites > 5:
        raise PreconditionError("commutativity sweep is limited to N <= 5")
    cfg = ChainConfig(n_sites, eta, thetas)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        lam, nu = 2 * (rng.uniform(-1, 1, 2) + 1j * rng.uniform(-1, 1, 2))
        t1 = transfer_matrix(lam, cfg)
        t2 = transfer_matrix(nu, cfg)
        worst = max(worst, _rel(t1 @ t2 - t2 @ t1, t1 @ t2))
    return worst


def verify_rtt(cfg, lam, nu):
    """R_12(lam - nu) T_1(lam) T_2(nu) - T_2(nu) T_1(lam) R_12(lam - nu), relative."""
    q = cfg.dim
    t_lam = build_monodromy(lam, cfg).reshape(3, q, 3, q)
    t_nu = build_monodromy(nu, cfg).reshape(3, q, 3, q)
    eye3 = np.eye(3)
    # Space ordering: aux 1, aux 2, quantum.
    t1 = np.einsum("aqbr,cd->acqbdr", t_lam, eye3).reshape(9 * q, 9 * q)
    t2 = np.einsum("cqdr,ab->acqbdr", t_nu, eye3).reshape(9 * q, 9 * q)
    r12 = np.kron(la.build_r(lam - nu, cfg.eta), np.eye(q))
    lhs = r12 @ t1 @ t2
    rhs = t2 @ t1 @ r12
    return _rel(lhs - rhs, lhs)


@dataclass
class EDState:
    energy: float
    omega: OmegaValue
    t_value: complex
    condition: float

    def to_json(self):
        return {
            "energy": self.energy,
            "omega": self.omega.to_json(),
            "t_value": [self.t_value.real, self.t_value.imag],
            "condition": self.condition,
        }


def _clusters(values, tol):
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or abs(values[i] - values[start]) > tol * max(1.0, abs(values[start])):
            yield start, i
            start = i


def joint_spectrum(n_sites, eta=1.0, probe=None):
    """Resolve every eigenstate into (energy, omega sector, eigenvalue of t(probe))."""
    if n_sites > COMPLEX_ED_SITE_CAP:
        raise SizeError(f"joint diagonalisation is capped at N <= {COMPLEX_ED_SITE_CAP}")
    cfg = ChainConfig(n_sites, eta)
    if probe is None:
        probe = default_probe(eta)
    h = hamiltonian_direct(n_sites)
    om = omega_matrix_permutation(n_sites)
    tp = transfer_matrix(probe, cfg)
    energies, vecs = np.linalg.eigh(h)
    states = []
    for lo, hi in _clusters(energies, CLUSTER_TOL):
        v = vecs[:, lo:hi]
        e = float(np.mean(energies[lo:hi]))
        ow, ov = np.linalg.eig(v.T @ om @ v)
        labels = [OmegaValue.from_complex(z) for z in ow]
        for label in sorted(set(labels)):
            sel = np.array([lab == label for lab in labels])
            w, _ = np.linalg.qr(v @ ov[:, sel])
            block = w.conj().T @ tp @ w
            tw, tv = np.linalg.eig(block)
            cond = float(np.linalg.cond(tv)) if len(tw) > 1 else 1.0
            states.extend(EDState(e, label, complex(x), cond) for x in tw)
    return states


def default_probe(eta=1.0):
    return (0.37 + 0.29j) * abs(eta)


@dataclass
class SpectrumReport:
    n_sites: int
    eta: complex
    probe: complex
    ed_energies: list
    matched: int
    unmatched_ed: list = field(default_factory=list)
    unmatched_bethe: list = field(default_factory=list)
    per_omega: dict = field(default_factory=dict)
    ill_conditioned: list = field(default_factory=list)

    @property
    def complete(self):
        return self.matched == len(self.ed_energies) and not self.unmatched_ed

    def to_json(self):
        eta = complex(self.eta)
        return {
            "n_sites": self.n_sites,
            "eta": [eta.real, eta.imag],
            "probe": [self.probe.real, self.probe.imag],
            "ed_energies": [float(e) for e in self.ed_energies],
            "matched": self.matched,
            "total": len(self.ed_energies),
            "unmatched_ed": self.unmatched_ed,
            "unmatched_bethe": self.unmatched_bethe,
            "per_omega": [
                {"omega": om.to_json(), **stats} for om, stats in sorted(self.per_omega.items())
            ],
            "ill_conditioned": self.ill_conditioned,
        }


def _sector_stats(dim):
    keys = ("ed_states", "solutions", "matched", "reduced_degree_matches", "singular_matches")
    return {"dimension": dim, **dict.fromkeys(keys, 0)}


def match_spectra(n_sites, eta, solutions, probe_lambda=None):
    """Match every ED eigenstate to a Bethe solution of the same omega sector.

    `solutions` is either a flat list of BetheSolution or the dict returned by
    `solve_all_sectors`.  Solutions must be homogeneous (theta = 0).
    """
    if isinstance(solutions, dict):
        solutions = [s for sols in solutions.values() for s in sols]
    if probe_lambda is None:
        probe_lambda = default_probe(eta)
    scale = max(1.0, abs(eta))
    for bad in (0.0, -eta):
        if abs(probe_lambda - bad) < 1e-6 * scale:
            raise PreconditionError(f"probe {probe_lambda} is too close to a pole of the T-Q relation")
    for s in solutions:
        if np.any(s.thetas != 0):
            raise PreconditionError("spectrum matching requires theta = 0")
        if len(s.roots) and np.min(np.abs(s.roots - probe_lambda)) < 1e-6 * scale:
            raise PreconditionError(f"probe {probe_lambda} is too close to a Bethe root")

    states = joint_spectrum(n_sites, eta, probe_lambda)
    values = [tq_evaluate(probe_lambda, s) for s in solutions]
    used = [0] * len(solutions)
    dims = eigenvalue_multiset(n_sites)
    per_omega = {om: _sector_stats(dim) for om, dim in dims.items()}
    for s in solutions:
        per_omega.setdefault(s.omega, _sector_stats(0))["solutions"] += 1

    matched = 0
    unmatched_ed = []
    for st in states:
        stats = per_omega.setdefault(st.omega, _sector_stats(0))
        stats["ed_states"] += 1
        hit = None
        for i, (s, v) in enumerate(zip(solutions, values)):
            if s.omega != st.omega:
                continue
            if abs(v - st.t_value) < LAMBDA_MATCH_TOL and abs(s.energy - st.energy) < ENERGY_MATCH_TOL:
                hit = i
                break
        if hit is None:
            payload = st.to_json()
            candidates = [
                (abs(v - st.t_value), abs(s.energy - st.energy), s)
                for s, v in zip(solutions, values)
                if s.omega == st.omega
            ]
            if candidates:
                dl, de, best = min(candidates, key=lambda c: c[0] + c[1])
                payload["nearest_solution"] = {**best.to_json(), "t_distance": dl, "energy_distance": de}
            unmatched_ed.append(payload)
            continue
        matched += 1
        used[hit] += 1
        stats["matched"] += 1
        if solutions[hit].reduced_degree:
            stats["reduced_degree_matches"] += 1
        if solutions[hit].singular:
            stats["singular_matches"] += 1

    unmatched_bethe = [
        {**s.to_json(), "t_value": [complex(v).real, complex(v).imag]}
        for s, v, n in zip(solutions, values, used)
        if n == 0
    ]
    ill = [st.to_json() for st in states if st.condition > ILL_CONDITIONED]
    return SpectrumReport(
        n_sites=n_sites,
        eta=eta,
        probe=complex(probe_lambda),
        ed_energies=sorted(st.energy for st in states),
        matched=matched,
        unmatched_ed=unmatched_ed,
        unmatched_bethe=unmatched_bethe,
        per_omega=per_omega,
        ill_conditioned=ill,
    )


def random_generic_thetas(n_sites, seed, eta=1.0, width=1.0, min_gap=1e-2):
    """Random inhomogeneities satisfying the distinctness preconditions."""
    attempt = 0
    while True:
        th = random_thetas(n_sites, seed + 7919 * attempt, width)
        diff = th[:, None] - th[None, :]
        off = ~np.eye(n_sites, dtype=bool)
        if all(np.all(np.abs(diff[off] - s) > min_gap) for s in (0.0, eta, -eta)):
            return th
        attempt += 1


def algebra_suite(n_sites=3, eta=1.0, seed=0, n_draws=100, tol=DEFAULT_TOL, chain_tol=1e-9):
    """Residuals of every algebraic identity, as {name: (value, threshold)}.

    Local R-matrix identities are gated by `tol`; chain-level identities by
    `chain_tol`.  Random draws use numpy's default PCG64 generator seeded
    with `seed`.
    """
    rng = np.random.default_rng(seed)
    rtol = tol.rtol
    out = {}

    draws = 5 * (rng.uniform(-1, 1, (n_draws, 2)) + 1j * rng.uniform(-1, 1, (n_draws, 2))) / np.sqrt(2)
    out["ybe"] = (max(la.ybe_relative(l, n, eta) for l, n in draws), rtol)
    out["unitarity"] = (max(la.unitarity_relative(l, eta) for l, _ in draws), rtol)
    out["partial_transpose_det"] = (max(la.partial_transpose_relative(l, eta) for l, _ in draws), rtol)
    out["initial_condition"] = (la.initial_condition_residual(eta) / abs(eta), tol.atol)
    out["projection"] = (la.projection_residual(eta) / abs(eta), tol.atol)

    n = min(n_sites, 5)
    th = random_generic_thetas(n, seed, eta)
    cfg = ChainConfig(n, eta, th)
    out["commuting_family"] = (verify_commuting_family(n, eta, 5, seed, th), rtol)
    if n <= 3:
        lam, nu = 0.4 + 0.3j, -0.8 + 0.1j
        out["rtt"] = (verify_rtt(cfg, lam, nu), rtol)
    if n >= 2:
        out["operator_identity"] = (max(verify_operator_identities(cfg)), chain_tol)
        out["trace_identity"] = (
            float(np.abs(hamiltonian_from_trace_identity(ChainConfig(n, eta)) - hamiltonian_direct(n)).max()),
            chain_tol,
        )
    out["asymptotic"] = (verify_asymptotic(cfg), chain_tol)
    perm = omega_matrix_permutation(n)
    out["omega_recursive"] = (float(np.abs(omega_matrix_recursive(n) - perm).max()), 0.0)
    lim, d11_top = omega_matrix_limit(cfg)
    out["omega_limit"] = (float(np.abs(lim - perm).max()), chain_tol)
    out["d11_leading_identity"] = (float(np.abs(d11_top - np.eye(cfg.dim)).max()), chain_tol)
    out["omega_commutes_h"] = (omega_commutator(n, hamiltonian_direct(n)) if n >= 2 else 0.0, chain_tol)
    out["omega_commutes_t"] = (omega_commutator(n, transfer_matrix(0.3 - 0.7j, cfg)), chain_tol)
    return out


def omega_commutator(n_sites, op):
    om = omega_matrix_permutation(n_sites)
    return _rel(om @ op - op @ om, om @ op)
