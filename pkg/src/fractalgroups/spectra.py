"""Level pencils, symmetric eigenproblems and densities of states."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import AsymmetricPencil, NoConvergence, RootCountMismatch
from .treeauto import level_permutation

MAX_DIM = 4096
CLUSTER_TOL = 1e-8


@dataclass(frozen=True)
class Pencil:
    """Linear combination ``sum w_g g + identity * 1`` of generators.

    Keys are generator names, optionally with ``^-1`` for inverses.
    """

    weights: dict
    identity: object = 0
    symmetric: bool = True

    def elements(self, spec):
        for key, w in self.weights.items():
            if key.endswith("^-1"):
                yield spec.gen(key[:-3], inverse=True), w
            else:
                yield spec.gen(key), w


def markov_pencil(spec):
    """Simple random walk operator on the symmetric generating set."""
    moves = spec.symmetric_generators()
    w = Fraction(1, len(moves))
    return Pencil({label: w for label, _ in moves})


def adjacency_pencil(spec):
    return Pencil({label: 1 for label, _ in spec.symmetric_generators()})


def pencil_matrix(spec, pencil, n, exact=False):
    """Matrix of the pencil on level ``n``: entry ``[g(v), v]`` gets ``w_g``.

    With ``exact=True`` the matrix holds Fractions (object dtype) and the
    symmetry check is exact; otherwise it is a float array.
    """
    size = spec.machine.d ** n
    if exact:
        mat = np.empty((size, size), dtype=object)
        mat[...] = Fraction(0)
        idx = np.arange(size)
        for g, w in pencil.elements(spec):
            perm = level_permutation(g, n)
            for v in range(size):
                mat[perm[v], v] += Fraction(w)
        for v in idx:
            mat[v, v] += Fraction(pencil.identity)
        sym = all(mat[i, j] == mat[j, i] for i in range(size) for j in range(i))
    else:
        mat = np.zeros((size, size))
        idx = np.arange(size)
        for g, w in pencil.elements(spec):
            np.add.at(mat, (level_permutation(g, n), idx), float(w))
        mat[idx, idx] += float(pencil.identity)
        sym = np.array_equal(mat, mat.T)
    if pencil.symmetric and not sym:
        raise AsymmetricPencil("pencil is not self-adjoint; add the inverse generators")
    return mat


def cluster(values, tol=CLUSTER_TOL):
    """Group sorted values whose neighbours lie within ``tol``:
    list of (mean value, multiplicity)."""
    out = []
    group = []
    for v in values:
        if group and v - group[-1] > tol:
            out.append((float(np.mean(group)), len(group)))
            group = []
        group.append(float(v))
    if group:
        out.append((float(np.mean(group)), len(group)))
    return out


@dataclass
class Spectrum:
    values: np.ndarray
    clusters: list = field(default_factory=list)

    def multiplicity(self, value, tol=1e-6):
        return sum(m for v, m in self.clusters if abs(v - value) < tol)


def jacobi_eigenvalues(matrix, tol=1e-12, max_sweeps=60):
    """Cyclic Jacobi rotations until the off-diagonal norm drops below
    ``tol * ||M||``; returns sorted eigenvalues."""
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    norm = np.linalg.norm(a)
    if n < 2 or norm == 0.0:
        return np.sort(np.diag(a))
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < tol * norm:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                small = 100.0 * abs(apq)
                if abs(apq) < 1e-300 or (abs(a[p, p]) + small == abs(a[p, p])
                                         and abs(a[q, q]) + small == abs(a[q, q])):
                    # negligible against both diagonal entries: drop it
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    raise NoConvergence(f"Jacobi sweeps did not converge in {max_sweeps} sweeps")


def eigen_sym(matrix, tol=CLUSTER_TOL, method="lapack"):
    """Eigenvalues of a real symmetric matrix, sorted, with clustered
    multiplicities.  ``method="jacobi"`` uses the rotation solver above."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max(initial=0.0))):
        raise AsymmetricPencil("matrix is not symmetric")
    if method == "jacobi":
        vals = jacobi_eigenvalues(a)
    else:
        try:
            vals = np.linalg.eigvalsh(a)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from None
    vals = np.sort(vals)
    return Spectrum(vals, cluster(vals, tol))


@dataclass
class DensityOfStates:
    level: int
    atoms: list

    def cdf(self, x):
        return sum(m for v, m in self.atoms if v <= x)

    def mass_near(self, value, tol=1e-6):
        return sum(m for v, m in self.atoms if abs(v - value) < tol)


def density_of_states(values, level=None, tol=CLUSTER_TOL):
    values = np.sort(np.asarray(values, dtype=float))
    total = len(values)
    return DensityOfStates(level, [(v, m / total) for v, m in cluster(values, tol)])


def kolmogorov_distance(mu, nu):
    """Sup distance between the distribution functions of two atomic measures."""
    points = sorted({v for v, _ in mu.atoms} | {v for v, _ in nu.atoms})
    return max((abs(mu.cdf(x) - nu.cdf(x)) for x in points), default=0.0)


def dos(spec, pencil, levels):
    """Empirical spectral measures for each level and the Kolmogorov
    distances between consecutive ones."""
    measures = [density_of_states(eigen_sym(pencil_matrix(spec, pencil, n)).values, n) for n in levels]
    dists = [kolmogorov_distance(a, b) for a, b in zip(measures, measures[1:])]
    return measures, dists


def hanoi_polynomial(x):
    return x * x - x - 3


def _preimages(t):
    r = math.sqrt(13.0 + 4.0 * t)
    return [(1.0 - r) / 2.0, (1.0 + r) / 2.0]


def preimage_sets(start, depth):
    """``[f^-i(start) for i in range(depth)]`` for ``f(x) = x^2 - x - 3``."""
    sets = [[float(start)]]
    for _ in range(1, depth):
        sets.append(sorted(y for t in sets[-1] for y in _preimages(t)))
    return sets


def hanoi_reference_spectrum(n):
    """Closed-form adjacency spectrum of the level-``n`` Hanoi graph as
    sorted ``(value, multiplicity)`` pairs."""
    spectrum = [(3.0, 1)]
    for i, pts in enumerate(preimage_sets(0.0, n)):
        mult = (3 ** (n - i - 1) + 3) // 2
        spectrum.extend((p, mult) for p in pts)
    for j, pts in enumerate(preimage_sets(-2.0, n - 1)):
        mult = (3 ** (n - j - 1) - 1) // 2
        spectrum.extend((p, mult) for p in pts if mult > 0)
    spectrum.sort()
    assert sum(m for _, m in spectrum) == 3 ** n
    return spectrum


def chebyshev_u(k, t):
    """U_k(t) by the three-term recurrence (U_{-1} = 0)."""
    if k < 0:
        return 0.0 * t
    prev, cur = 0.0 * t, 1.0 + 0.0 * t
    for _ in range(k):
        prev, cur = cur, 2.0 * t * cur - prev
    return cur


def lamplighter_polynomial(k, z, mu):
    t = (-z - mu) / 4.0
    return 2.0 ** k * (chebyshev_u(k, t) + mu * chebyshev_u(k - 1, t))


def _bisect(f, lo, hi, tol):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lamplighter_zeros(k, mu, tol=1e-12):
    """The ``k`` real zeros in ``z`` of ``U_k(t) + mu U_{k-1}(t)``, ``t = (-z-mu)/4``.

    At the zeros of ``U_{k-1}`` the polynomial equals ``U_k = +-1`` with
    alternating sign, which brackets every root.
    """
    if k == 0:
        return []
    bound = 2.0 + abs(mu)
    marks = [-bound] + sorted(math.cos(j * math.pi / k) for j in range(1, k)) + [bound]

    def p(t):
        return chebyshev_u(k, t) + mu * chebyshev_u(k - 1, t)

    roots = []
    for lo, hi in zip(marks, marks[1:]):
        plo, phi = p(lo), p(hi)
        if plo == 0.0:
            roots.append(lo)
        elif plo * phi < 0:
            roots.append(_bisect(p, lo, hi, tol / 4.0))
    roots = sorted(set(roots))
    if len(roots) != k:
        raise RootCountMismatch(f"found {len(roots)} of {k} zeros for mu={mu}")
    return sorted(-4.0 * t - mu for t in roots)


def lamplighter_spectral_atoms(mu, k_max):
    """Atoms of the lamplighter spectral measure truncated at ``k_max``:
    ``1/4`` at ``mu`` and ``2^-(k+1)`` at each zero of ``G_k``, ``k >= 2``."""
    atoms = [(float(mu), 0.25)]
    for k in range(2, k_max + 1):
        w = 2.0 ** -(k + 1)
        atoms.extend((z, w) for z in lamplighter_zeros(k, mu))
    return atoms
