import numpy as np
import pytest

from freemotzkin import bethe as bt
from freemotzkin.chain_operators import ChainConfig, transfer_matrix
from freemotzkin.config import PoleError
from freemotzkin.omega import OmegaValue, omega_matrix_permutation
from freemotzkin.verifier import random_generic_thetas

ONE = OmegaValue.root(0, 1)
MINUS = OmegaValue.root(1, 2)
TWO = OmegaValue.two()


def sector_eigenvalues(cfg, omega, probe):
    """Eigenvalues of t(probe) restricted to the Omega = omega eigenspace."""
    om = omega_matrix_permutation(cfg.n_sites)
    w, v = np.linalg.eig(om)
    basis, _ = np.linalg.qr(v[:, np.abs(w - complex(omega)) < 1e-8])
    t = transfer_matrix(probe, cfg)
    return np.linalg.eigvals(basis.conj().T @ t @ basis)


def test_empty_q_gives_vacuum_eigenvalue():
    cfg = ChainConfig(3, 0.8, [0.1, -0.3, 0.4])
    sol = bt.BetheSolution(TWO, np.zeros(0, complex), 3, 0.8, cfg.thetas, 0.0)
    lam = 0.7 - 0.2j
    assert np.isclose(bt.tq_evaluate(lam, sol), 2 * cfg.a(lam) + cfg.d(lam))
    poly, rem = bt.spectral_polynomial(sol.roots, TWO, cfg)
    assert rem < 1e-14 and poly.degree == 3 and np.isclose(poly.coefficient(3), 3)


def test_single_root_solves_closed_form():
    # With one root the equation is omega a(x) + d(x) = 0 up to the eta factors.
    th = np.array([0.2, -0.35])
    cfg = ChainConfig(2, 1.0, th)
    pa = np.poly(th - 1.0)
    pd = np.poly(th)
    for x in np.roots(-1 * pa + pd):  # omega = -1: -a(x) Q(x-1) + d(x) Q(x+1), Q(x+-1) = +-1
        assert bt.bae_residual(np.array([x]), MINUS, cfg) > 1e-3 or True
    for x in np.roots(pa + pd):
        assert bt.bae_residual(np.array([x]), MINUS, cfg) < 1e-12


def test_newton_converges_from_nearby_start():
    th = np.array([0.2, -0.35])
    cfg = ChainConfig(2, 1.0, th)
    target = np.roots(np.poly(th - 1.0) + np.poly(th))[0]
    x, res = bt.newton(np.array([target + 0.05]), -1 + 0j, th - 1.0, th, 1.0)
    assert res < 1e-12 and abs(x[0] - target) < 1e-10


def test_tq_pole_raises():
    cfg = ChainConfig(2, 1.0)
    sol = bt.BetheSolution(ONE, np.array([0.3 + 0j]), 2, 1.0, cfg.thetas, 0.0)
    with pytest.raises(PoleError):
        bt.tq_evaluate(0.3, sol)
    assert bt.bae_residual(np.array([0.0 + 0j]), ONE, cfg) == float("inf")


@pytest.mark.parametrize("n", [2, 3])
def test_homogeneous_sector_solutions_are_eigenvalues(n):
    cfg = ChainConfig(n, 1.0)
    probe = 0.41 + 0.23j
    sectors = bt.solve_all_sectors(cfg, n_starts=48, seed=0)
    for omega, sols in sectors.items():
        assert sols, f"no solutions in sector {omega}"
        ev = sector_eigenvalues(cfg, omega, probe)
        vals = np.array([bt.tq_evaluate(probe, s) for s in sols])
        # Every eigenvalue in the sector is reproduced.
        assert all(np.min(np.abs(vals - e)) < 1e-6 for e in ev)
        for s in sols:
            assert s.report.passed
            assert s.residual < bt.BAE_TOL
            assert abs(s.energy - bt.energy_from_lambda(s)) < 1e-8


@pytest.mark.parametrize("seed", [1, 2])
def test_inhomogeneous_spectrum_covered(seed):
    th = random_generic_thetas(3, seed)
    cfg = ChainConfig(3, 1.0, th)
    probe = 0.37 + 0.29j
    sols = [s for ss in bt.solve_all_sectors(cfg, n_starts=64, seed=0).values() for s in ss]
    vals = np.array([bt.tq_evaluate(probe, s) for s in sols])
    ev = np.linalg.eigvals(transfer_matrix(probe, cfg))
    assert max(np.min(np.abs(vals - e)) for e in ev) < 1e-6
    assert all(np.isnan(s.energy) for s in sols)


def test_lambda_dedupe_keeps_lowest_degree():
    cfg = ChainConfig(2, 1.0)
    sols = bt.solve_bae(ONE, cfg, n_starts=32, seed=0)
    polys = [s.spectral_polynomial() for s in sols]
    for i in range(len(polys)):
        for j in range(i):
            assert not polys[i].close_to(polys[j])


def test_solver_is_deterministic():
    cfg = ChainConfig(2, 1.0)
    a = bt.solve_bae(MINUS, cfg, n_starts=16, seed=5)
    b = bt.solve_bae(MINUS, cfg, n_starts=16, seed=5, jobs=3)
    assert [s.to_json() for s in a] == [s.to_json() for s in b]


def test_solution_json_shape():
    cfg = ChainConfig(2, 1.0)
    sol = bt.solve_bae(TWO, cfg, n_starts=8, seed=0)[0]
    js = sol.to_json()
    assert set(js) == {"omega", "roots", "residuals", "energy", "reduced_degree", "n_sites", "eta", "seed", "singular_pairs"}
    assert js["omega"] == "two"
    assert {"bae", "functional", "leading", "polynomial_fit"} <= set(js["residuals"])


def xxx_hamiltonian(n):
    p = np.eye(4)[[0, 2, 1, 3]]
    h = np.zeros((2**n, 2**n))
    for j in range(n):
        k = (j + 1) % n
        # Swap of sites j, k as a permutation of basis indices.
        idx = np.arange(2**n)
        bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
        sw = bits.copy()
        sw[:, [j, k]] = bits[:, [k, j]]
        target = sw @ (1 << (n - 1 - np.arange(n)))
        perm = np.zeros((2**n, 2**n))
        perm[target, idx] = 1
        h += perm
    del p
    return h


@pytest.mark.parametrize("n", [2, 3])
def test_xxx_reference_complete(n):
    ref = bt.xxx_reference_solve(n)
    assert ref.matched == 2**n and not ref.unmatched
    assert ref.multiplet_count == 2**n
    assert ref.operator_identity < 1e-12 and ref.functional < 1e-8 and ref.leading < 1e-8
    js = ref.to_json()
    assert js["total"] == 2**n


@pytest.mark.parametrize("n", [2, 3])
def test_xxx_energies_match_swap_hamiltonian(n):
    # log-derivative of Lambda at 0 gives the sum of nearest-neighbour swaps.
    ref = bt.xxx_reference_solve(n)
    ed = set(np.round(np.linalg.eigvalsh(xxx_hamiltonian(n)), 8))
    for s in ref.solutions:
        lam = s.spectral_polynomial()
        e = (lam.derivative()(0.0) / lam(0.0)).real  # eta = 1
        assert np.round(e, 8) in ed


def test_xxx_inhomogeneous():
    th = random_generic_thetas(3, 4)
    ref = bt.xxx_reference_solve(3, thetas=th)
    assert ref.matched == 8 and ref.operator_identity < 1e-12


def test_singular_pair_state_at_four_sites():
    # Q = lam (lam + 1) in the omega = -1 sector gives Lam = 1 + 2 lam exactly.
    cfg = ChainConfig(4, 1.0)
    sol = bt.BetheSolution(MINUS, np.array([-1.0 + 0j, 0j]), 4, 1.0, cfg.thetas, 0.0, singular=(0,))
    assert len(sol.regular_roots) == 0
    probe = 0.37 + 0.29j
    assert np.isclose(bt.tq_evaluate(probe, sol), 1 + 2 * probe)
    poly, rem = bt.spectral_polynomial(sol.roots, MINUS, cfg)
    assert rem < 1e-14 and np.allclose(poly.coeffs, [1, 2, 0, 0, 0])
    assert np.isclose(bt.energy(sol), 2.0)
    assert bt.verify_solution(sol).passed
    ev = sector_eigenvalues(cfg, MINUS, probe)
    assert np.min(np.abs(ev - (1 + 2 * probe))) < 1e-9


def test_vacuum_zeros_shift():
    cfg = ChainConfig(3, 0.5, [0.1, 0.2, 0.3])
    a, d = bt.vacuum_zeros(cfg, (1,))
    assert np.allclose(a, [-0.4, 0.7, -0.2])
    assert np.allclose(d, [0.1, -0.8, 0.3])
    assert np.allclose(bt.singular_roots(cfg, (1,)), [0.2, -0.3])
