"""Probabilistic Schur complements of random walks on the Grigorchuk group.

A walk ``M = x a + y b + z c + u d`` with ``x + y + z + u = 1`` is cut at
the first level.  ``k1`` returns the first-return walk on the subtree
below ``0`` (``A + B (1 - D)^-1 C``) and ``k2`` the one below ``1``; both
are written as coefficients ``(X, Y, Z, U, V)`` on ``(a, b, c, d, 1)``.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import Indeterminate

FIXED_POINT = (Fraction(4, 7), Fraction(1, 7), Fraction(1, 7), Fraction(1, 7))


def _check(value, what, p):
    if value == 0:
        raise Indeterminate(f"{what} vanishes at {p}")


def _simplex(p):
    if len(p) == 4:
        return tuple(p)
    y, z, u = p
    return (1 - y - z - u, y, z, u)


def k1(p):
    """First complement; ``p = (x, y, z, u)``."""
    x, y, z, u = p
    den = (u + y + z - 1) * (-u + y - z - 1) * (u - y - z - 1) * (-u - y + z - 1)
    _check(den, "k1 denominator", p)
    x2 = x * x
    return (
        y + z,
        x2 * (2 * y * z + u * (1 - u * u + y * y + z * z)) / den,
        x2 * (2 * u * z + y * (1 + u * u - y * y + z * z)) / den,
        x2 * (2 * u * y + z * (1 + u * u + y * y - z * z)) / den,
        u - x2 * (2 * u * y * z + u * u + y * y + z * z - 1) / den,
    )


def k2(p):
    """Second complement; ``p = (x, y, z, u)``."""
    x, y, z, u = p
    den = (1 - u - y - z) * (1 - u + y + z)
    _check(den, "k2 denominator", p)
    return (x * x * (y + z) / den, u, y, z, x * x * (1 - u) / den)


def _normalize(out, p):
    X, Y, Z, U, V = out
    _check(1 - V, "1 - V", p)
    return (X / (1 - V), Y / (1 - V), Z / (1 - V), U / (1 - V))


def k1_normalized(p):
    return _normalize(k1(p), p)


def k2_normalized(p):
    return _normalize(k2(p), p)


def k1_hat(p):
    """``k1_normalized`` extended to the closed simplex.

    On the simplex ``u + y + z - 1 = -x``, so one factor ``x`` cancels
    between ``x^2`` and the denominator; the formula below is defined on
    every face and undefined only at the four vertices.
    """
    x, y, z, u = _simplex(p)
    rest = (-u + y - z - 1) * (u - y - z - 1) * (-u - y + z - 1)
    _check(rest, "reduced denominator", p)
    X = y + z
    Y = -x * (2 * y * z + u * (1 - u * u + y * y + z * z)) / rest
    Z = -x * (2 * u * z + y * (1 + u * u - y * y + z * z)) / rest
    U = -x * (2 * u * y + z * (1 + u * u + y * y - z * z)) / rest
    V = u + x * (2 * u * y * z + u * u + y * y + z * z - 1) / rest
    out = (X, Y, Z, U, V)
    if 1 - V == 0 and all(c == 0 for c in out[:4]):
        raise Indeterminate(f"k1_hat is 0/0 at {p}")
    return _normalize(out, p)


def self_similarity_factor(p):
    """``alpha`` with ``k1(p) = (1 - alpha) 1 + alpha p``, or ``None``."""
    out = k1(p)
    x = p[0]
    if x == 0:
        return None
    alpha = out[0] / x
    if all(out[i] == alpha * p[i] for i in range(4)) and out[4] == 1 - alpha:
        return alpha
    return None


def _simplex_grid(grid):
    pts = []
    for i in range(1, grid):
        for j in range(1, grid - i):
            for k in range(1, grid - i - j):
                l = grid - i - j - k
                if l > 0:
                    pts.append((i / grid, j / grid, k / grid, l / grid))
    return pts


def find_fixed_points(grid=10, tol=1e-12, max_iter=2000, which="k1", cluster_tol=1e-8):
    """Iterate the normalized complement from interior grid seeds.

    Returns the distinct interior limits reached (as float 4-tuples), each
    with the number of seeds that converged to it.
    """
    base = k1_hat if which == "k1" else k2_normalized

    def f(p):
        # recompute x so that rounding cannot push the orbit off the simplex
        return base(_simplex(tuple(p[1:])))

    limits = []
    for seed in _simplex_grid(grid):
        p = np.array(seed)
        for _ in range(max_iter):
            try:
                q = np.array(f(p))
            except (Indeterminate, ZeroDivisionError):
                break
            if not np.all(np.isfinite(q)):
                break
            step = np.max(np.abs(q - p))
            p = q
            if step < tol:
                if np.all(p > cluster_tol):
                    for entry in limits:
                        if np.max(np.abs(entry[0] - p)) < cluster_tol:
                            entry[1] += 1
                            break
                    else:
                        limits.append([p, 1])
                break
    return [(tuple(float(c) for c in p), n) for p, n in limits]


def rational_fixed_point(p, max_den=1000):
    """Snap a float fixed point of ``k1_normalized`` to a rational one, if exact."""
    cand = tuple(Fraction(c).limit_denominator(max_den) for c in p)
    if sum(cand) == 1 and k1_normalized(cand) == cand:
        return cand
    return None


def consistency_with_schur(p):
    """Largest coefficient difference between ``k1``/``k2`` and the algebraic
    complements of the pencil at ``v = -1`` (plus one on the identity
    coefficient).  Both paths fail together; that raises Indeterminate."""
    from .errors import ZeroCharacter
    from .schur import derive_grigorchuk_maps

    x, y, z, u = p
    try:
        direct = (k1(p), k2(p))
    except Indeterminate:
        direct = None
    try:
        s1, s2 = derive_grigorchuk_maps(x, y, z, u, Fraction(-1) if isinstance(x, (int, Fraction)) else -1.0)
    except ZeroCharacter:
        s1 = None
    if direct is None or s1 is None:
        if (direct is None) != (s1 is None):
            raise AssertionError(f"only one path is defined at {p}")
        raise Indeterminate(f"complements undefined at {p}")
    shift = lambda s: (s[0], s[1], s[2], s[3], s[4] + 1)
    return max(abs(a - b) for ours, theirs in zip(direct, (shift(s1), shift(s2))) for a, b in zip(ours, theirs))
