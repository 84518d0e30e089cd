"""
T-Q relation, Bethe equations and a multistart Newton solver.

In the Omega-eigensector with eigenvalue omega the transfer-matrix eigenvalue
is sought in the form

    Lam(lam) = omega a(lam) Q(lam - eta)/Q(lam) + d(lam) Q(lam + eta)/Q(lam),
    a(lam) = prod_j (lam - theta_j + eta),  d(lam) = prod_j (lam - theta_j),
    Q(lam) = prod_{j<=M} (lam - lam_j).

Cancelling the poles of Lam at the roots of Q gives, for every j,

    omega prod_k (lam_j - theta_k + eta)/(lam_j - theta_k)
        = prod_{l != j} (lam_j - lam_l + eta)/(lam_j - lam_l - eta).

Any M in 0..N leaves the leading coefficient at omega + 1, and different M
give different sub-leading coefficients, so the solver scans all degrees.
Solutions with M < N are flagged ``reduced_degree``.

A pair of roots {theta_j, theta_j - eta} cancels identically against a and d,
so Lam stays polynomial whatever the rest of Q is.  Such singular pairs are
factored out: the remaining roots obey the same equations with the vacuum
zeros theta_j - eta of a moved to theta_j + eta and theta_j of d moved to
theta_j - 2 eta.  On the homogeneous chain some eigenstates need them.

At omega = 1 the
equations coincide with the periodic XXX spin-1/2 chain, which is also used as
a reference problem (see `xxx_reference_solve`).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .chain_operators import ChainConfig, auxiliary_trace
from .config import PoleError
from .omega import OmegaValue, eigenvalue_multiset

log = logging.getLogger(__name__)

BAE_TOL = 1e-10
VERIFY_TOL = 1e-8
DEDUPE_TOL = 1e-7
# Roots further out than this (in units of the problem scale) count as escaped.
ESCAPE_RADIUS = 1e4


@dataclass
class SpectralPolynomial:
    """Lam(lam) as ascending complex coefficients."""

    coeffs: np.ndarray

    def __call__(self, lam):
        return npoly.polyval(lam, self.coeffs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def coefficient(self, k):
        return complex(self.coeffs[k]) if k < len(self.coeffs) else 0j

    def derivative(self):
        return SpectralPolynomial(npoly.polyder(self.coeffs))

    def close_to(self, other, tol=DEDUPE_TOL):
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.pad(self.coeffs, (0, n - len(self.coeffs)))
        b = np.pad(other.coeffs, (0, n - len(other.coeffs)))
        scale = max(1.0, np.abs(a).max(), np.abs(b).max())
        return bool(np.abs(a - b).max() <= tol * scale)


@dataclass
class SolutionReport:
    functional: float
    leading: float
    polynomial_fit: float
    tol: float = VERIFY_TOL

    @property
    def passed(self):
        return max(self.functional, self.leading, self.polynomial_fit) < self.tol

    def as_dict(self):
        return {
            "functional": self.functional,
            "leading": self.leading,
            "polynomial_fit": self.polynomial_fit,
        }


@dataclass
class BetheSolution:
    omega: OmegaValue
    roots: np.ndarray
    n_sites: int
    eta: complex
    thetas: np.ndarray
    residual: float
    energy: complex = complex("nan")
    seed: int = None
    report: SolutionReport = None
    singular: tuple = ()

    @property
    def regular_roots(self):
        """Roots with the singular pairs removed."""
        if not self.singular:
            return np.asarray(self.roots, dtype=complex)
        rest = list(np.asarray(self.roots, dtype=complex))
        for z in singular_roots(self.config, self.singular):
            rest.pop(int(np.argmin(np.abs(np.array(rest) - z))))
        return np.array(rest, dtype=complex)

    @property
    def reduced_degree(self):
        return len(self.roots) < self.n_sites

    @property
    def config(self):
        return ChainConfig(self.n_sites, self.eta, self.thetas)

    def spectral_polynomial(self):
        return spectral_polynomial(self.roots, self.omega, self.config)[0]

    def to_json(self):
        residuals = {"bae": self.residual}
        if self.report is not None:
            residuals.update(self.report.as_dict())
        return {
            "omega": self.omega.to_json(),
            "roots": [[float(z.real), float(z.imag)] for z in self.roots],
            "residuals": residuals,
            "energy": [float(self.energy.real), float(self.energy.imag)] if np.isfinite(self.energy) else None,
            "reduced_degree": self.reduced_degree,
            "n_sites": self.n_sites,
            "eta": [float(complex(self.eta).real), float(complex(self.eta).imag)],
            "seed": self.seed,
            "singular_pairs": [int(j) for j in self.singular],
        }


def vacuum_zeros(cfg, singular=()):
    """Zeros of the effective a and d once the singular pairs at `singular` are removed."""
    a_zeros = cfg.thetas - cfg.eta
    d_zeros = cfg.thetas.copy()
    for j in singular:
        a_zeros[j] = cfg.thetas[j] + cfg.eta
        d_zeros[j] = cfg.thetas[j] - 2 * cfg.eta
    return a_zeros, d_zeros


def singular_roots(cfg, singular):
    return np.array([z for j in singular for z in (cfg.thetas[j], cfg.thetas[j] - cfg.eta)], dtype=complex)


def q_value(lam, roots):
    return complex(np.prod(lam - roots))


def tq_evaluate(lam, sol):
    """Right-hand side of the T-Q relation at lam, singular pairs cancelled."""
    roots = sol.regular_roots
    cfg = sol.config
    a_zeros, d_zeros = vacuum_zeros(cfg, sol.singular)
    scale = max(1.0, abs(lam))
    if len(roots) and np.min(np.abs(lam - roots)) < 1e-12 * scale:
        raise PoleError(f"T-Q evaluated at a Bethe root {lam}")
    q0 = q_value(lam, roots)
    om = complex(sol.omega)
    return (
        om * q_value(lam, a_zeros) * q_value(lam - cfg.eta, roots) / q0
        + q_value(lam, d_zeros) * q_value(lam + cfg.eta, roots) / q0
    )


def spectral_polynomial(roots, omega, cfg):
    """Lam as an exact quotient; also returns the relative division remainder."""
    roots = np.asarray(roots, dtype=complex)
    om = complex(omega)
    a = npoly.polyfromroots(cfg.thetas - cfg.eta)
    d = npoly.polyfromroots(cfg.thetas)
    q = npoly.polyfromroots(roots) if len(roots) else np.array([1.0 + 0j])
    q_minus = npoly.polyfromroots(roots + cfg.eta) if len(roots) else q
    q_plus = npoly.polyfromroots(roots - cfg.eta) if len(roots) else q
    numer = npoly.polyadd(om * npoly.polymul(a, q_minus), npoly.polymul(d, q_plus))
    quot, rem = npoly.polydiv(numer, q)
    quot = np.pad(quot, (0, max(0, cfg.n_sites + 1 - len(quot))))[: cfg.n_sites + 1]
    rel = float(np.abs(rem).max() / max(1.0, np.abs(numer).max()))
    return SpectralPolynomial(quot), rel


def _bae_system(x, om, a_zeros, d_zeros, eta):
    """Log-form Bethe equations G_j = log(LHS_j / RHS_j) and their Jacobian."""
    da = x[:, None] - a_zeros[None, :]
    dd = x[:, None] - d_zeros[None, :]
    g = np.log(om) + np.sum(np.log(da) - np.log(dd), axis=1)
    jac_diag = np.sum(1.0 / da - 1.0 / dd, axis=1)
    m = len(x)
    jac = np.zeros((m, m), dtype=complex)
    if m > 1:
        dx = x[:, None] - x[None, :]
        off = ~np.eye(m, dtype=bool)
        dx_off = np.where(off, dx, 1.0)
        term = np.where(off, np.log(dx_off - eta) - np.log(dx_off + eta), 0.0)
        g = g + term.sum(axis=1)
        c = np.where(off, 1.0 / (dx_off - eta) - 1.0 / (dx_off + eta), 0.0)
        jac_diag = jac_diag + c.sum(axis=1)
        jac = -c
    jac[np.diag_indices(m)] = jac_diag
    g = g.real + 1j * ((g.imag + np.pi) % (2 * np.pi) - np.pi)
    return g, jac


def bae_residual(roots, omega, cfg, singular=()):
    """max_j |log(LHS_j / RHS_j)| on the principal branch; inf at a pole.

    `roots` are the regular roots only when `singular` pairs are given.
    """
    x = np.asarray(roots, dtype=complex)
    if len(x) == 0:
        return 0.0
    a_zeros, d_zeros = vacuum_zeros(cfg, singular)
    with np.errstate(all="ignore"):
        g, _ = _bae_system(x, complex(omega), a_zeros, d_zeros, complex(cfg.eta))
    if not np.all(np.isfinite(g)):
        return float("inf")
    return float(np.abs(g).max())


def newton(x0, om, a_zeros, d_zeros, eta, max_iter=80, tol=1e-13):
    """Damped Newton on the log-form equations; returns (roots, residual).

    For the plain chain a_zeros = theta - eta and d_zeros = theta.
    """
    x = np.array(x0, dtype=complex)
    with np.errstate(all="ignore"):
        g, jac = _bae_system(x, om, a_zeros, d_zeros, eta)
    norm = np.linalg.norm(g)
    for _ in range(max_iter):
        if not np.isfinite(norm):
            return x, float("inf")
        if np.abs(g).max() < tol:
            break
        step = np.linalg.lstsq(jac, -g, rcond=None)[0]
        t = 1.0
        while t > 1e-4:
            trial = x + t * step
            with np.errstate(all="ignore"):
                g_new, jac_new = _bae_system(trial, om, a_zeros, d_zeros, eta)
            norm_new = np.linalg.norm(g_new)
            if np.isfinite(norm_new) and norm_new < norm:
                break
            t *= 0.5
        else:
            break
        x, g, jac, norm = trial, g_new, jac_new, norm_new
    return x, float(np.abs(g).max()) if len(g) else 0.0


def problem_scale(cfg):
    return max(abs(cfg.eta), 1.0, float(np.abs(cfg.thetas).max(initial=0.0)))


def _admissible(x, cfg, singular=()):
    scale = problem_scale(cfg)
    if len(x) == 0:
        return True
    if not np.all(np.isfinite(x)) or np.abs(x).max() > ESCAPE_RADIUS * scale:
        return False
    if len(x) > 1:
        gaps = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < 1e-6 * scale:
            return False
    for centre in (cfg.thetas, cfg.thetas - cfg.eta, *vacuum_zeros(cfg, singular)):
        if np.min(np.abs(x[:, None] - centre[None, :])) < 1e-8 * scale:
            return False
    return True


def energy(sol):
    """E = -sum_j eta^2 / (lam_j (lam_j + eta)); the physical energy at theta = 0.

    Singular pairs make the sum ill-defined, so those fall back to
    `energy_from_lambda`.
    """
    if sol.singular:
        return energy_from_lambda(sol)
    x = np.asarray(sol.roots, dtype=complex)
    eta = complex(sol.eta)
    scale = max(1.0, abs(eta))
    if len(x) and (np.min(np.abs(x)) < 1e-12 * scale or np.min(np.abs(x + eta)) < 1e-12 * scale):
        raise PoleError("Bethe root at 0 or -eta")
    return complex(-np.sum(eta**2 / (x * (x + eta))))


def energy_from_lambda(sol):
    """E = -eta Lam'(0)/Lam(0) + N, evaluated on the spectral polynomial."""
    lam = sol.spectral_polynomial()
    return complex(-sol.eta * lam.derivative()(0.0) / lam(0.0) + sol.n_sites)


def _sample_points(sol, count):
    cfg = sol.config
    radius = 2.0 * max(problem_scale(cfg), float(np.abs(sol.roots).max(initial=0.0)))
    phases = 2 * np.pi * (np.arange(count) + 0.3183) / count
    pts = radius * np.exp(1j * phases)
    return pts, radius


def verify_solution(sol, tol=VERIFY_TOL):
    """Functional relations, leading coefficient and polynomiality of Lam."""
    cfg = sol.config
    om = complex(sol.omega)

    functional = 0.0
    for th in cfg.thetas:
        lhs = tq_evaluate(th, sol) * tq_evaluate(th - cfg.eta, sol)
        rhs = om * cfg.a(th) * cfg.d(th - cfg.eta)
        functional = max(functional, abs(lhs - rhs) / max(1.0, abs(rhs), abs(lhs)))

    n = cfg.n_sites
    pts, radius = _sample_points(sol, n + 3)
    vals = np.array([tq_evaluate(z, sol) for z in pts])
    # Fit in the rescaled variable z / radius for conditioning.
    vander = np.vander(pts / radius, n + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(vander, vals, rcond=None)
    fit = float(np.abs(vander @ coef - vals).max() / max(1.0, np.abs(vals).max()))
    lead = coef[-1] / radius**n
    leading = float(abs(lead - (om + 1)) / max(1.0, abs(om + 1)))
    return SolutionReport(float(functional), leading, fit, tol)


def _rng_for(seed, omega, degree, n_singular=0):
    code = 0 if omega.is_two else 1
    key = (code, omega.p, omega.k, degree) + ((n_singular,) if n_singular else ())
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _random_starts(rng, cfg, degree, count, singular=()):
    """Uniform starts in two discs, half of them placed near the poles.

    Roots squeezed against theta_j or theta_j - eta have tiny basins that
    uniform sampling misses, so those starts pick centres among theta_j,
    theta_j - eta/2 and theta_j - eta and add a jitter whose size is
    log-uniform between 1e-3 and 0.3 times the problem scale.
    """
    scale = problem_scale(cfg)
    centre = complex(np.mean(cfg.thetas))
    n_near = count // 2
    n_far = count - n_near
    # Roots spread out roughly linearly with N, so half the uniform starts use a wider disc.
    radius = np.where(np.arange(n_far) % 2 == 0, 2.0, cfg.n_sites + 1.0)[:, None] * scale
    r = radius * np.sqrt(rng.uniform(size=(n_far, degree)))
    phi = rng.uniform(0, 2 * np.pi, size=(n_far, degree))
    far = centre + r * np.exp(1j * phi)
    eta = complex(cfg.eta)
    poles = np.concatenate([cfg.thetas, cfg.thetas - eta / 2, cfg.thetas - eta])
    if singular:
        poles = np.unique(np.concatenate([poles, *vacuum_zeros(cfg, singular)]))
    near = np.empty((n_near, degree), dtype=complex)
    for i in range(n_near):
        pick = rng.choice(len(poles), size=degree, replace=degree > len(poles))
        size = scale * 10 ** rng.uniform(-3, np.log10(0.3), size=degree)
        jitter = size * np.exp(2j * np.pi * rng.uniform(size=degree))
        near[i] = poles[pick] + jitter
    return np.concatenate([far, near])


def solve_bae(omega, cfg, n_starts=64, seed=0, degrees=None, seeds=(), jobs=1):
    """All distinct verified T-Q solutions found in the sector `omega`.

    Each degree M in `degrees` (default 0..N) gets `n_starts` random starts
    plus any root sets in `seeds` with matching length.  On the homogeneous
    chain every M is also tried with p = 1, 2, ... singular pairs and M - 2p
    regular roots.  Accepted solutions have BAE residual < 1e-10 and pass
    `verify_solution`; they are deduplicated by their Lam polynomial, keeping
    the lowest degree and the fewest singular pairs.  Output is sorted by
    (Re E, M, roots).
    """
    if degrees is None:
        degrees = range(cfg.n_sites + 1)
    om = complex(omega)
    eta = complex(cfg.eta)
    max_pairs = cfg.n_sites // 2 if cfg.homogeneous else 0
    found = []
    polys = []
    for m in degrees:
        for n_pairs in range(min(max_pairs, m // 2) + 1):
            singular = tuple(range(n_pairs))
            m_reg = m - 2 * n_pairs
            a_zeros, d_zeros = vacuum_zeros(cfg, singular)
            if m_reg == 0:
                starts = [np.zeros(0, dtype=complex)]
            else:
                rng = _rng_for(seed, omega, m_reg, n_pairs)
                starts = list(_random_starts(rng, cfg, m_reg, n_starts, singular))
                if not singular:
                    starts += [np.asarray(x, dtype=complex) for x in seeds if len(x) == m_reg]

            def run(x0):
                if len(x0) == 0:
                    return x0, 0.0
                return newton(x0, om, a_zeros, d_zeros, eta)

            if jobs > 1 and len(starts) > 1:
                with ThreadPoolExecutor(max_workers=jobs) as ex:
                    results = list(ex.map(run, starts))
            else:
                results = [run(x0) for x0 in starts]

            pair_roots = singular_roots(cfg, singular)
            for x, res in results:
                if res >= BAE_TOL or not _admissible(x, cfg, singular):
                    continue
                full = np.sort_complex(np.concatenate([pair_roots, x]))
                poly, _ = spectral_polynomial(full, omega, cfg)
                if any(poly.close_to(p) for p in polys):
                    continue
                sol = BetheSolution(omega, full, cfg.n_sites, cfg.eta, cfg.thetas.copy(), res,
                                    seed=seed, singular=singular)
                sol.report = verify_solution(sol)
                if not sol.report.passed:
                    log.debug("rejected candidate %s: %s", full, sol.report)
                    continue
                if cfg.homogeneous:
                    try:
                        sol.energy = energy(sol)
                    except PoleError:
                        pass
                polys.append(poly)
                found.append(sol)
    found.sort(key=_solution_order)
    return found


def _solution_order(sol):
    e = sol.energy.real if np.isfinite(sol.energy.real) else np.inf
    return (round(e, 9), len(sol.roots), [(round(z.real, 9), round(z.imag, 9)) for z in sol.roots])


def solve_all_sectors(cfg, n_starts=64, seed=0, jobs=1, omegas=None):
    """Solve every Omega sector of the chain, seeding each from earlier sectors.

    Returns {OmegaValue: [BetheSolution, ...]} in the sector order of
    `eigenvalue_multiset`.
    """
    if omegas is None:
        omegas = list(eigenvalue_multiset(cfg.n_sites))
    out = {}
    seeds = []
    for om in omegas:
        sols = solve_bae(om, cfg, n_starts=n_starts, seed=seed, seeds=seeds, jobs=jobs)
        out[om] = sols
        seeds.extend(s.roots for s in sols if len(s.roots))
    return out


def xxx_r(lam, eta=1.0):
    """Rational spin-1/2 R-matrix lam 1 + eta P."""
    p = np.eye(4)[[0, 2, 1, 3]]
    return complex(lam) * np.eye(4) + complex(eta) * p


def xxx_transfer_matrix(lam, thetas, eta=1.0):
    return auxiliary_trace(lam, np.asarray(thetas, dtype=complex), eta, xxx_r, 2)


@dataclass
class XXXReference:
    n_sites: int
    eta: complex
    thetas: np.ndarray
    probe: complex
    solutions: list
    ed_eigenvalues: np.ndarray
    unmatched: list = field(default_factory=list)
    operator_identity: float = 0.0
    functional: float = 0.0
    leading: float = 0.0

    @property
    def matched(self):
        return len(self.ed_eigenvalues) - len(self.unmatched)

    @property
    def multiplet_count(self):
        """Sum of SU(2) multiplet dimensions N - 2M + 1 over distinct solutions."""
        return sum(self.n_sites - 2 * len(s.roots) + 1 for s in self.solutions)

    def to_json(self):
        pair = lambda z: [float(complex(z).real), float(complex(z).imag)]
        return {
            "n_sites": self.n_sites,
            "eta": pair(self.eta),
            "thetas": [pair(t) for t in self.thetas],
            "probe": pair(self.probe),
            "solutions": [s.to_json() for s in self.solutions],
            "ed_eigenvalues": sorted((pair(z) for z in self.ed_eigenvalues)),
            "matched": self.matched,
            "total": len(self.ed_eigenvalues),
            "multiplet_count": self.multiplet_count,
            "unmatched": [pair(z) for z in self.unmatched],
            "operator_identity": self.operator_identity,
            "functional": self.functional,
            "leading": self.leading,
        }


def xxx_reference_solve(n_sites, eta=1.0, thetas=None, n_starts=64, seed=0, probe=None, tol=VERIFY_TOL):
    """Solve the periodic XXX spin-1/2 T-Q system and check it against ED.

    The XXX chain shares a(lam), d(lam) with the Motzkin chain and its T-Q
    relation is the omega = 1 case, so the same Newton machinery is used with
    M <= N/2 magnons.  Every eigenvalue of the 2^N x 2^N transfer matrix at a
    generic probe must be reproduced by some solution.
    """
    if n_sites > 6:
        raise ValueError("xxx reference solver is limited to N <= 6")
    cfg = ChainConfig(n_sites, eta, thetas)
    one = OmegaValue.root(0, 1)
    sols = solve_bae(one, cfg, n_starts=n_starts, seed=seed, degrees=range(n_sites // 2 + 1))
    if probe is None:
        probe = (0.31 + 0.57j) * problem_scale(cfg)
    ed = np.linalg.eigvals(xxx_transfer_matrix(probe, cfg.thetas, cfg.eta))
    values = np.array([tq_evaluate(probe, s) for s in sols])
    unmatched = []
    for ev in ed:
        if len(values) == 0 or np.min(np.abs(values - ev)) > tol * max(1.0, abs(ev)):
            unmatched.append(complex(ev))

    ident = 0.0
    eye = np.eye(2**n_sites)
    for th in cfg.thetas:
        prod = xxx_transfer_matrix(th, cfg.thetas, cfg.eta) @ xxx_transfer_matrix(th - cfg.eta, cfg.thetas, cfg.eta)
        target = cfg.a(th) * cfg.d(th - cfg.eta) * eye
        ident = max(ident, float(np.abs(prod - target).max()) / max(1.0, float(np.abs(target).max())))

    functional = max((s.report.functional for s in sols), default=0.0)
    leading = max((s.report.leading for s in sols), default=0.0)
    return XXXReference(n_sites, cfg.eta, cfg.thetas, probe, sols, ed, unmatched, ident, functional, leading)
