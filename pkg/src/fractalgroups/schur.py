"""Schur complements of self-similar pencils and the maps they induce.

A pencil ``M = sum w_g g`` splits along the first tree level into a 2x2
block matrix whose entries are again group-algebra elements.  When the
diagonal block to be inverted lives in the algebra of an elementary abelian
2-group, its inverse is computed through the characters (a Walsh-Hadamard
transform), and the complement is read back as a new pencil.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import exact
from .catalog import get as get_group, omega_group
from .errors import SingularBlock, ZeroCharacter
from .treeauto import ElementWord, canonical_form, is_identity


# -- block matrices ------------------------------------------------------------

def _is_exact(mat):
    return np.asarray(mat).dtype == object


@dataclass
class BlockMatrix:
    """``[[A, B], [C, D]]`` with square diagonal blocks."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @classmethod
    def split(cls, matrix, k=None):
        m = np.asarray(matrix)
        if k is None:
            k = m.shape[0] // 2
        return cls(m[:k, :k], m[:k, k:], m[k:, :k], m[k:, k:])

    def assemble(self):
        return np.block([[self.A, self.B], [self.C, self.D]])


def _solve(a, b):
    """``a^-1 b`` exactly for object arrays, by LU with partial pivoting otherwise."""
    if _is_exact(a) or _is_exact(b):
        return np.array(exact.solve(np.asarray(a).tolist(), np.asarray(b).tolist()), dtype=object)
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise SingularBlock("diagonal block is singular") from None


def schur1(m):
    """``A - B D^-1 C``."""
    return m.A - m.B.dot(_solve(m.D, m.C))


def schur2(m):
    """``D - C A^-1 B``."""
    return m.D - m.C.dot(_solve(m.A, m.B))


def frobenius_inverse(m):
    """Inverse of the whole block matrix from ``S1 = A - B D^-1 C``."""
    n1 = m.A.shape[0]
    ident = (np.array(exact.identity(n1), dtype=object) if _is_exact(m.A) else np.eye(n1))
    s1_inv = _solve(schur1(m), ident)
    d_inv_c = _solve(m.D, m.C)
    b_d_inv = _solve(m.D.T, m.B.T).T
    n2 = m.D.shape[0]
    ident2 = (np.array(exact.identity(n2), dtype=object) if _is_exact(m.D) else np.eye(n2))
    d_inv = _solve(m.D, ident2)
    top = np.hstack([s1_inv, -s1_inv.dot(b_d_inv)])
    bottom = np.hstack([-d_inv_c.dot(s1_inv), d_inv_c.dot(s1_inv).dot(b_d_inv) + d_inv])
    return np.vstack([top, bottom])


# -- algebra of an elementary abelian 2-group ----------------------------------

def walsh_hadamard(values):
    """Unnormalized transform ``h[chi] = sum_m (-1)^{|chi & m|} v[m]``."""
    h = list(values)
    n = len(h)
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    step = 1
    while step < n:
        for start in range(0, n, 2 * step):
            for i in range(start, start + step):
                a, b = h[i], h[i + step]
                h[i], h[i + step] = a + b, a - b
        step *= 2
    return h


@dataclass(frozen=True)
class EA2Element:
    """Element of the group algebra of ``(Z/2)^rank``; ``coeffs[mask]`` is
    the coefficient of the basis product selected by the bits of ``mask``."""

    rank: int
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != 1 << self.rank:
            raise ValueError("need 2**rank coefficients")

    def __mul__(self, other):
        n = 1 << self.rank
        out = [0] * n
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i ^ j] += a * b
        return EA2Element(self.rank, tuple(out))

    def characters(self):
        return walsh_hadamard(self.coeffs)

    def inverse(self):
        return ea2_invert(self)


def ea2_invert(e):
    """Invert through the characters; fails when one of them vanishes."""
    chars = e.characters()
    for i, c in enumerate(chars):
        if c == 0:
            raise ZeroCharacter(f"character {i:0{e.rank}b} vanishes")
    exact_mode = all(isinstance(c, (int, Fraction)) for c in chars)
    recip = [Fraction(1) / c if exact_mode else 1.0 / c for c in chars]
    n = 1 << e.rank
    back = walsh_hadamard(recip)
    return EA2Element(e.rank, tuple(v / n for v in back))


# -- symbolic derivation from the wreath recursion -----------------------------

class PencilAlgebra:
    """Group-algebra bookkeeping for one machine, keyed by canonical forms."""

    def __init__(self, spec, names):
        self.spec = spec
        self.machine = spec.machine
        self.names = list(names)
        self.words = {}
        self.product_cache = {}
        self.span_cache = {}
        self.one = self.form(())
        self.name_of = {}
        for name in self.names:
            f = self.one if name == "1" else self.form(spec.gen(name).letters)
            self.name_of.setdefault(f, name)
        self.sections = {}
        for name in self.names:
            if name == "1":
                continue
            letters = spec.gen(name).letters
            entries = []
            for x in range(self.machine.d):
                y, sec = self.machine.expand(letters, x)
                entries.append((y, x, self.form(sec)))
            self.sections[name] = entries

    def form(self, letters):
        word = self.machine.reduce(letters)
        f = canonical_form(ElementWord(self.machine, word))
        old = self.words.get(f)
        if old is None or len(word) < len(old):
            self.words[f] = word
        return f

    def mul_forms(self, f, g):
        key = (f, g)
        if key not in self.product_cache:
            self.product_cache[key] = self.form(self.words[f] + self.words[g])
        return self.product_cache[key]

    def mul(self, e1, e2):
        out = {}
        for f, a in e1.items():
            for g, b in e2.items():
                h = self.mul_forms(f, g)
                out[h] = out.get(h, 0) + a * b
        return out

    def blocks(self, coeffs):
        """First-level blocks of ``sum coeffs[name] * name``: ``block[y][x]``."""
        d = self.machine.d
        block = [[{} for _ in range(d)] for _ in range(d)]
        for name, w in coeffs.items():
            if name == "1":
                for x in range(d):
                    block[x][x][self.one] = block[x][x].get(self.one, 0) + w
                continue
            for y, x, f in self.sections[name]:
                block[y][x][f] = block[y][x].get(f, 0) + w
        return block

    def abelian_span(self, support):
        """Bitmask coordinates for the elementary abelian 2-group generated by
        ``support``; checks involutions and commutation on the way."""
        key = frozenset(support)
        if key in self.span_cache:
            return self.span_cache[key]
        span = {self.one: 0}
        basis = []
        for f in sorted(support, key=lambda f: (len(self.words[f]), self.words[f])):
            if f in span:
                continue
            g = ElementWord(self.machine, self.words[f])
            if not is_identity(g * g):
                raise ValueError(f"{g} is not an involution")
            for b in basis:
                h = ElementWord(self.machine, self.words[b])
                if not is_identity(g * h * g * h):
                    raise ValueError(f"{g} and {h} do not commute")
            bit = 1 << len(basis)
            basis.append(f)
            for s, mask in list(span.items()):
                span[self.mul_forms(s, f)] = mask | bit
        result = (len(basis), span)
        self.span_cache[key] = result
        return result

    def invert(self, elem):
        rank, span = self.abelian_span([f for f, c in elem.items() if c != 0] or [self.one])
        coeffs = [0] * (1 << rank)
        for f, c in elem.items():
            if c != 0:
                coeffs[span[f]] += c
        inv = ea2_invert(EA2Element(rank, tuple(coeffs)))
        by_mask = {mask: f for f, mask in span.items()}
        return {by_mask[m]: c for m, c in enumerate(inv.coeffs)}

    def as_pencil(self, elem):
        out = {}
        for f, c in elem.items():
            if c == 0:
                continue
            if f not in self.name_of:
                raise ValueError(f"complement has a term {self.words[f]} outside the pencil basis")
            name = self.name_of[f]
            out[name] = out.get(name, 0) + c
        return out

    def complements(self, coeffs):
        """``(S1, S2)`` of the pencil as dicts over the basis names."""
        (a, b), (c, d) = self.blocks(coeffs)
        s1 = _sub(a, self.mul(b, self.mul(self.invert(d), c)))
        s2 = _sub(d, self.mul(c, self.mul(self.invert(a), b)))
        return self.as_pencil(s1), self.as_pencil(s2)


def _sub(e1, e2):
    out = dict(e1)
    for f, c in e2.items():
        out[f] = out.get(f, 0) - c
    return out


GRIGORCHUK_BASIS = ("a", "b", "c", "d", "1")
OVERGROUP_BASIS = ("a", "b", "c", "d", "A", "B", "C", "D", "1")


@lru_cache(maxsize=None)
def _algebra(group_name):
    if group_name == "grigorchuk":
        return PencilAlgebra(get_group("grigorchuk"), GRIGORCHUK_BASIS)
    if group_name == "overgroup":
        return PencilAlgebra(get_group("overgroup"), OVERGROUP_BASIS)
    if group_name.startswith("omega"):
        w0 = int(group_name[-1])
        spec = omega_group((w0,), (0, 1, 2))
        # shifted names first: c_w may coincide with b_Tw as an element
        return PencilAlgebra(spec, ("a", "b1", "c1", "d1", "1", "b", "c", "d"))
    raise KeyError(group_name)


def _derive(group_name, basis, values):
    alg = _algebra(group_name)
    coeffs = {name: Fraction(v) if isinstance(v, int) else v for name, v in zip(basis, values)}
    s1, s2 = alg.complements(coeffs)
    zero = 0 * values[0]
    return (tuple(s1.get(n, zero) for n in basis), tuple(s2.get(n, zero) for n in basis))


def derive_grigorchuk_maps(x, y, z, u, v):
    """Both complements of ``x a + y b + z c + u d + v 1``, as coefficient
    tuples over ``(a, b, c, d, 1)``."""
    return _derive("grigorchuk", GRIGORCHUK_BASIS, (x, y, z, u, v))


def derive_overgroup_maps(x, y, z, u, q, r, s, t, v):
    """Complements of ``x a + y b + z c + u d + q A + r B + s C + t D + v 1``
    over ``(a, b, c, d, A, B, C, D, 1)``; capitals are the tilde generators."""
    return _derive("overgroup", OVERGROUP_BASIS, (x, y, z, u, q, r, s, t, v))


def derive_gomega_schur2_full(x, v, y, z, u, omega0):
    """``D - C A^-1 B`` for ``x a + y b_w + z c_w + u d_w + v 1`` as
    coefficients of ``(a, b_Tw, c_Tw, d_Tw, 1)``."""
    basis = ("a", "b", "c", "d", "1")
    alg = _algebra(f"omega{int(omega0)}")
    coeffs = dict(zip(basis, (x, y, z, u, v)))
    coeffs = {k: Fraction(c) if isinstance(c, int) else c for k, c in coeffs.items()}
    _, s2 = alg.complements(coeffs)
    zero = 0 * x
    return tuple(s2.get(n, zero) for n in ("a", "b1", "c1", "d1", "1"))


def derive_gomega_schur2(x, v, y, z, u, omega0):
    """``(x', v')`` of the second complement; ``y, z, u`` pass through."""
    xs, ys, zs, us, vs = derive_gomega_schur2_full(x, v, y, z, u, omega0)
    if (ys, zs, us) != (y, z, u):
        raise AssertionError("middle coefficients changed")
    return xs, vs


# -- numeric cross-check on finite levels --------------------------------------

RENORMALIZATION_MAPS = {
    ("grigorchuk", 1): "grigorchuk_s1",
    ("grigorchuk", 2): "grigorchuk_s2",
    ("overgroup", 1): "overgroup_s1",
    ("overgroup", 2): "overgroup_s2",
}


def level_renormalization_check(spec, point, n, complement=2):
    """Max-entry residual between the numeric complement of the level-``n``
    pencil and the level ``n-1`` pencil at the mapped parameters."""
    from . import dynamics
    from .spectra import Pencil, pencil_matrix

    spec = get_group(spec) if isinstance(spec, str) else spec
    basis = GRIGORCHUK_BASIS if spec.name == "grigorchuk" else OVERGROUP_BASIS
    map_id = RENORMALIZATION_MAPS[(spec.name, complement)]
    point = tuple(float(p) for p in point)

    def matrix(values, level):
        weights = dict(zip(basis[:-1], values[:-1]))
        return pencil_matrix(spec, Pencil(weights, values[-1], symmetric=False), level)

    blocks = BlockMatrix.split(matrix(point, n))
    numeric = schur1(blocks) if complement == 1 else schur2(blocks)
    mapped = dynamics.evaluate(map_id, point)
    return float(np.max(np.abs(numeric - matrix(mapped, n - 1))))
