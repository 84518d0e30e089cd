"""
The Omega operator: leading coefficient of A(lam) + D22(lam), and its spectrum.

On basis states Omega is a weighted permutation.  The all-flat state is fixed
with weight 2; every other state is mapped by a cyclic shift of its non-flat
letters, flat positions staying put.  `omega_apply` gives the *left* shift,
which is how Omega acts on row vectors (bras) in our tensor conventions:

    <s| Omega = c(s) <omega_apply(s)|.

On kets Omega is therefore the right shift.  Since the two are mutually
inverse permutations the spectrum is unaffected, but only this orientation
satisfies t(theta_j) t(theta_j - eta) = Omega a(theta_j) d(theta_j - eta).

A cycle of length k contributes each k-th root of unity once, so the
spectrum follows from the cycle type of the permutation.  Counting primitive
binary necklaces gives the closed form

    f(N, k) = (sum_{d | k} 2^d mu(k/d)) * sum_{m >= 1} C(N, k m).
"""

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import numpy as np

from .chain_operators import block_polynomials
from .config import ENUMERATION_SITE_CAP, PreconditionError, SizeError, check_dense_cap
from .local_algebra import F, I_D, I_U, LETTERS, S_MINUS, S_PLUS


@dataclass(frozen=True)
class SpinBasisState:
    letters: str

    def __post_init__(self):
        if not self.letters or set(self.letters) - set(LETTERS):
            raise ValueError(f"not a word over 'ufd': {self.letters!r}")

    @property
    def n_sites(self):
        return len(self.letters)

    @property
    def index(self):
        out = 0
        for ch in self.letters:
            out = 3 * out + LETTERS.index(ch)
        return out

    @classmethod
    def from_index(cls, index, n_sites):
        if not 0 <= index < 3**n_sites:
            raise ValueError(f"index {index} out of range for N={n_sites}")
        chars = []
        for _ in range(n_sites):
            index, r = divmod(index, 3)
            chars.append(LETTERS[r])
        return cls("".join(reversed(chars)))

    def __str__(self):
        return self.letters


@total_ordering
@dataclass(frozen=True)
class OmegaValue:
    """Exact eigenvalue of Omega: the special value 2 or exp(2 pi i p/k)."""

    kind: str
    p: int = 0
    k: int = 1

    def __post_init__(self):
        if self.kind == "special_two":
            object.__setattr__(self, "p", 0)
            object.__setattr__(self, "k", 1)
        elif self.kind == "root_of_unity":
            if self.k < 1:
                raise ValueError("root order must be positive")
            frac = Fraction(self.p % self.k, self.k)
            object.__setattr__(self, "p", frac.numerator)
            object.__setattr__(self, "k", frac.denominator)
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    @classmethod
    def two(cls):
        return cls("special_two")

    @classmethod
    def root(cls, p, k):
        return cls("root_of_unity", p, k)

    @classmethod
    def from_complex(cls, z, max_order=64, tol=1e-6):
        """Snap a numerical eigenvalue to the nearest exact Omega value."""
        if abs(z - 2) < tol:
            return cls.two()
        if abs(abs(z) - 1) > tol:
            raise ValueError(f"{z} is neither 2 nor on the unit circle")
        turns = (np.angle(z) / (2 * np.pi)) % 1.0
        for k in range(1, max_order + 1):
            p = round(turns * k)
            if abs(np.exp(2j * np.pi * p / k) - z) < tol:
                return cls.root(p, k)
        raise ValueError(f"{z} is not a root of unity of order <= {max_order}")

    @property
    def is_two(self):
        return self.kind == "special_two"

    @property
    def value(self):
        if self.is_two:
            return 2.0 + 0j
        if self.k == 1:
            return 1.0 + 0j
        if self.k == 2:
            return -1.0 + 0j
        if self.k == 4:
            return 1j if self.p == 1 else -1j
        return complex(np.exp(2j * np.pi * self.p / self.k))

    def __complex__(self):
        return self.value

    def conjugate(self):
        return self if self.is_two else OmegaValue.root(-self.p, self.k)

    def sort_key(self):
        # 2 first, then roots by order, then by angle.
        return (0, 0, 0) if self.is_two else (1, self.k, self.p)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def to_json(self):
        return "two" if self.is_two else {"p": self.p, "k": self.k}

    @classmethod
    def from_json(cls, obj):
        return cls.two() if obj == "two" else cls.root(obj["p"], obj["k"])

    def __str__(self):
        if self.is_two:
            return "2"
        if self.k == 1:
            return "1"
        return f"exp(2pi i {self.p}/{self.k})"


def omega_apply(state):
    """Image of a basis word under the bra action of Omega, with its weight."""
    if isinstance(state, str):
        state = SpinBasisState(state)
    w = state.letters
    pos = [i for i, ch in enumerate(w) if ch != "f"]
    if not pos:
        return state, 2
    chars = list(w)
    moved = [w[i] for i in pos[1:]] + [w[pos[0]]]
    for i, ch in zip(pos, moved):
        chars[i] = ch
    return SpinBasisState("".join(chars)), 1


def omega_successor(n_sites):
    """Vectorised omega_apply over all 3^N indices.

    Returns (succ, weight) with succ[i] the index of omega_apply(state_i).
    """
    dim = 3**n_sites
    powers = 3 ** np.arange(n_sites - 1, -1, -1)
    digits = (np.arange(dim)[:, None] // powers) % 3
    nonflat = digits != F
    m = nonflat.sum(axis=1)
    # Stable sort brings non-flat positions to the front in site order.
    order = np.argsort(~nonflat, axis=1, kind="stable")
    slot = np.arange(n_sites)[None, :]
    src_slot = np.where(slot < m[:, None] - 1, slot + 1, 0)
    src_pos = np.take_along_axis(order, src_slot, axis=1)
    new_vals = np.take_along_axis(digits, src_pos, axis=1)
    new_digits = digits.copy()
    rows = np.broadcast_to(np.arange(dim)[:, None], order.shape)
    active = slot < m[:, None]
    new_digits[rows[active], order[active]] = new_vals[active]
    succ = new_digits @ powers
    weight = np.where(m == 0, 2, 1)
    return succ, weight


def omega_matrix_permutation(n_sites, allow_large=False):
    """Omega as a dense matrix: entry (s, omega_apply(s)) = weight."""
    check_dense_cap(n_sites, allow_large=allow_large)
    succ, weight = omega_successor(n_sites)
    dim = 3**n_sites
    mat = np.zeros((dim, dim))
    mat[np.arange(dim), succ] = weight
    return mat


def central_rotation(mat):
    """Entry (i, j) -> (dim-1-i, dim-1-j): 180 degree rotation about the centre."""
    return mat[::-1, ::-1]


def leading_blocks_recursive(n_sites):
    """Leading lam^N coefficients of A and C2 built site by site.

    With T = R_0N ... R_01 and R ~ lam * (swap of |ud>, |du>):

        A<1> = I_u,   C<1> = S^+,
        A<N> = A<N-1> (x) I_u + C<N-1> (x) S^-,
        C<N> = A<N-1> (x) S^+ + C<N-1> (x) I_d.

    The transpose of this recursion is the familiar (A, B2) one written with
    S^- before S^+.
    """
    a, c = I_U, S_PLUS
    for _ in range(n_sites - 1):
        a, c = np.kron(a, I_U) + np.kron(c, S_MINUS), np.kron(a, S_PLUS) + np.kron(c, I_D)
    return a, c


def omega_matrix_recursive(n_sites, allow_large=False):
    """Omega = A<N> + D<N>, where D<N> is the central rotation of A<N>."""
    check_dense_cap(n_sites, allow_large=allow_large)
    a, _ = leading_blocks_recursive(n_sites)
    return a + central_rotation(a)


def omega_matrix_limit(cfg):
    """Omega read off as the top coefficient of A(lam) + D22(lam).

    Returns (omega, top coefficient of D11) so callers can check the latter
    is the identity.
    """
    pa, pd11, pd22 = block_polynomials(cfg)
    return pa.top + pd22.top, pd11.top


@dataclass
class CycleDecomposition:
    n_sites: int
    counts: dict
    fixed_special: int = 1

    def covered(self):
        return sum(k * c for k, c in self.counts.items()) + self.fixed_special


def cycle_census(n_sites, cap=ENUMERATION_SITE_CAP):
    """Cycle type of omega_apply on the 3^N - 1 non-flat words, by brute force.

    Follows every index under repeated application of the successor map; the
    first return time is the length of its cycle.  No matrix is built.
    """
    if n_sites > cap:
        raise SizeError(f"cycle census capped at N<={cap}")
    succ, weight = omega_successor(n_sites)
    dim = 3**n_sites
    idx = np.arange(dim)
    length = np.zeros(dim, dtype=np.int64)
    cur = succ.copy()
    # A cycle cannot be longer than the number of non-flat letters.
    for step in range(1, n_sites + 1):
        hit = (cur == idx) & (length == 0)
        length[hit] = step
        cur = succ[cur]
    if np.any(length == 0):
        raise RuntimeError("successor map is not a permutation")
    special = weight == 2
    lengths = length[~special]
    counts = {}
    for k, n_elems in sorted(Counter(lengths.tolist()).items()):
        counts[int(k)] = n_elems // k
    return CycleDecomposition(n_sites, counts, int(special.sum()))


def eigenvalue_multiset(n_sites):
    """Exact eigenvalues of Omega with multiplicities."""
    census = cycle_census(n_sites)
    out = Counter({OmegaValue.two(): census.fixed_special})
    for k, n_cycles in census.counts.items():
        for p in range(k):
            out[OmegaValue.root(p, k)] += n_cycles
    return dict(sorted(out.items()))


def mobius(n):
    if n < 1:
        raise ValueError("mobius is defined for n >= 1")
    result = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def primitive_binary_words(k):
    """Number of aperiodic binary words of length k: sum_{d|k} 2^d mu(k/d)."""
    return sum(2**d * mobius(k // d) for d in range(1, k + 1) if k % d == 0)


def moebius_count(n_sites, k):
    """f(N, k): eigenvalues of Omega coming from cycles of length k."""
    if k < 1:
        raise ValueError("k must be positive")
    binom_sum = sum(math.comb(n_sites, k * m) for m in range(1, n_sites // k + 1))
    return primitive_binary_words(k) * binom_sum


@dataclass
class RootDistribution:
    n_sites: int
    per_order: dict
    diag_special: int = 1
    census_agrees: bool = None

    def row(self, n_cols):
        return [self.per_order.get(k, 0) for k in range(1, n_cols + 1)]


def table_census(n_max, check_cap=ENUMERATION_SITE_CAP):
    """Rows N = 1..n_max of the k-th-root distribution.

    Rows with N <= check_cap are also compared against the brute-force cycle
    census; census_agrees is None above the cap.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    rows = []
    for n in range(1, n_max + 1):
        per_order = {k: moebius_count(n, k) for k in range(1, n + 1)}
        agrees = None
        if n <= check_cap:
            census = cycle_census(n)
            agrees = all(per_order[k] == k * census.counts.get(k, 0) for k in per_order)
        rows.append(RootDistribution(n, per_order, 1, agrees))
    return rows


def ordinal(k):
    if k == 1:
        return "Diag"
    if k == 2:
        return "sqrt"
    if 10 <= k % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(k % 10, "th")
    return f"{k}{suffix}"


def table_csv(rows, n_cols=None, check_column=True):
    """CSV text laid out as Length, Diag, sqrt, 3rd, ..., with at least 10 order columns."""
    if n_cols is None:
        n_cols = max(10, max(r.n_sites for r in rows))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["Length"] + [ordinal(k) for k in range(1, n_cols + 1)]
    if check_column:
        header.append("brute_force")
    writer.writerow(header)
    for r in rows:
        line = [r.n_sites] + r.row(n_cols)
        if check_column:
            line.append({True: "ok", False: "MISMATCH", None: "skipped"}[r.census_agrees])
        writer.writerow(line)
    return buf.getvalue()


def is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def prime_divisibility_check(n_sites):
    """For prime N: f(N, N) and whether it equals 2^N - 2 and is divisible by N."""
    if not is_prime(n_sites):
        raise PreconditionError(f"{n_sites} is not prime")
    f_nn = moebius_count(n_sites, n_sites)
    return f_nn, f_nn == 2**n_sites - 2 and f_nn % n_sites == 0

