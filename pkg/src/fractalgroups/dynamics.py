"""Registry of the rational maps attached to self-similar pencils.

Each map is a plain function of a point (and optional parameters) written
with ``+ - * /`` only, so the same code evaluates over Fractions, floats
or numpy arrays.  Denominators are listed separately so that points where
the map is undefined are reported instead of divided by.
"""
from __future__ import annotations

import hashlib
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import Indeterminate, UnknownName

FLOAT_EPS = 1e-13
ESCAPE_RADIUS = 1e6


@dataclass(frozen=True)
class RationalMapSpec:
    name: str
    dim: int
    func: object
    denominators: object
    params: tuple = ()
    description: str = ""
    defaults: dict = field(default_factory=dict)


# -- the maps --------------------------------------------------------------------

def _f(p, k):
    x, y = p
    den = 4 - y * y
    return (2 * x * x / den, y + x * x * y / den)


def _g(p, k):
    x, y = p
    return (2 * (4 - y * y) / (x * x), -y - y * (4 - y * y) / (x * x))


def _h(p, k):
    x, y = p
    return (4 / x, -2 * y / x)


def _grig_s2(p, k):
    x, y, z, u, v = p
    den = (v + u + y + z) * (v + u - y - z)
    return (x * x * (y + z) / den, u, y, z, v - x * x * (v + u) / den)


def _grig_chars(p):
    x, y, z, u, v = p
    return ((v + u + y + z), (v - u + y - z), (v + u - y - z), (v - u - y + z))


def _grig_s1(p, k):
    x, y, z, u, v = p
    c0, c1, c2, c3 = _grig_chars(p)
    den = c0 * c1 * c2 * c3
    x2 = x * x
    return (
        y + z,
        -x2 * (2 * v * y * z - u * (v * v - u * u + y * y + z * z)) / den,
        -x2 * (2 * v * u * z - y * (v * v + u * u - y * y + z * z)) / den,
        -x2 * (2 * v * u * y - z * (v * v + u * u + y * y - z * z)) / den,
        v + u - x2 * (2 * u * y * z - v * (-v * v + u * u + y * y + z * z)) / den,
    )


def _overgroup_hats(p):
    x, y, z, u, q, r, s, t, v = p
    return (
        v + u + y + s + z + r + t + q,    # 000
        v - u + y + s - z - r + t - q,    # 100
        v + u - y + s - z + r - t - q,    # 010
        v + u + y - s + z - r - t - q,    # 001
        v - u - y + s + z - r - t + q,    # 110
        v - u + y - s - z + r - t + q,    # 101
        v + u - y - s - z - r + t + q,    # 011
        v - u - y - s + z + r + t - q,    # 111
    )


# rows in the order b, c, d, A, B, C, D; columns follow _overgroup_hats
OVERGROUP_SIGNS = (
    (1, -1, 1, 1, -1, -1, 1, -1),
    (1, 1, -1, 1, -1, 1, -1, -1),
    (1, -1, -1, 1, 1, -1, -1, 1),
    (1, -1, -1, -1, 1, 1, 1, -1),
    (1, 1, -1, -1, -1, -1, 1, 1),
    (1, -1, 1, -1, -1, 1, -1, 1),
    (1, 1, 1, -1, 1, -1, -1, -1),
)


def _overgroup_s1(p, k):
    x, y, z, u, q, r, s, t, v = p
    inv = [1 / h for h in _overgroup_hats(p)]
    scale = -x * x / 8
    rows = [scale * sum(sg * w for sg, w in zip(signs, inv)) for signs in OVERGROUP_SIGNS]
    return (y + z + q + t, *rows, (u + r + s + v) + scale * sum(inv))


def _overgroup_s2(p, k):
    x, y, z, u, q, r, s, t, v = p
    w = v + u + r + s
    m = y + z + q + t
    den = (w + m) * (w - m)
    return (x * x * m / den, u, y, z, q, t, r, s, v - x * x * w / den)


def _lamplighter(p, k):
    x, y = p
    return ((x * x - y * y - 2) / (y - x), 2 / (y - x))


def _hanoi_den(p):
    x, y = p
    return (x - y - 1) * (x * x + y - y * y - 1)


def _hanoi(p, k):
    x, y = p
    den = _hanoi_den(p)
    y2 = y * y
    return (x - 2 * (x * x - x - y2) * y2 / den, (x + y - 1) * y2 / den)


def _basilica(p, k):
    x, y = p
    return (-2 + x * (x - 2) / (y * y), (2 - x) / (y * y))


def _img_q(p):
    y, z, lam = p
    return -y * y + z * z - 2 * z * lam + lam * lam


def _img(p, k):
    y, z, lam = p
    q = _img_q(p)
    num = -lam * y * y + lam * z * z - 2 * z * lam * lam + lam ** 3 + z - lam
    return (z / y, 1 / q, num / (y * q))


def _img_simple(p, k):
    y, z, lam = p
    return (z / y, (lam / y) * (-2 + y * lam), (1 / lam) * (-y - y * lam * lam - lam))


def _omega_branch(which):
    def f(p, k):
        x, v = p
        y, z, u = k["y"], k["z"], k["u"]
        if which == 0:
            s, w = y + z, u
        elif which == 1:
            s, w = y + u, z
        else:
            s, w = z + u, y
        den = (v + w + s) * (v + w - s)
        return (x * x * s / den, v - x * x * (v + w) / den)

    def den(p, k):
        x, v = p
        y, z, u = k["y"], k["z"], k["u"]
        s, w = [(y + z, u), (y + u, z), (z + u, y)][which]
        return [("v+w+s", v + w + s), ("v+w-s", v + w - s)]

    return f, den


def _four_param(p, k):
    x, v = p
    a, b, g, d = k["alpha"], k["beta"], k["gamma"], k["delta"]
    den = (v + g) * (v + d)
    return (a * x * x / den, v - (v + b) * x * x / den)


def _three_param(p, k):
    x, v = p
    a, b, g = k["alpha"], k["beta"], k["gamma"]
    den = g * g - v * v
    return (a * x * x / den, v + (v + b) * x * x / den)


def _two_param(p, k):
    a, b = k["alpha"], k["beta"]
    return _four_param(p, {"alpha": a, "beta": b, "gamma": b + a, "delta": b - a})


def _conj_r(p, k):
    x, v = p
    a, b = k["alpha"], k["beta"]
    return (-2 * x / a, -2 * v / a - 2 * b / a)


def _conj_s(p, k):
    x, v = p
    return (-x, -v - (k["gamma"] + k["delta"]) / 2)


def _identity(p, k):
    return tuple(p)


def _dens(*pairs):
    return lambda p, k: [(label, fn(p)) for label, fn in pairs]


REGISTRY = {}


def register(spec):
    REGISTRY[spec.name] = spec
    return spec


register(RationalMapSpec("F", 2, _f, _dens(("4-y^2", lambda p: 4 - p[1] * p[1])),
                         description="Grigorchuk slice map"))
register(RationalMapSpec("G", 2, _g, _dens(("x^2", lambda p: p[0] * p[0])),
                         description="second Grigorchuk slice map"))
register(RationalMapSpec("H", 2, _h, _dens(("x", lambda p: p[0])), description="involution with H F = G"))
register(RationalMapSpec("grigorchuk_s2", 5, _grig_s2, _dens(
    ("v+u+y+z", lambda p: p[4] + p[3] + p[1] + p[2]),
    ("v+u-y-z", lambda p: p[4] + p[3] - p[1] - p[2])),
    description="second complement of the Grigorchuk pencil"))
register(RationalMapSpec("grigorchuk_s1", 5, _grig_s1, lambda p, k: list(zip(
    ("v+u+y+z", "v-u+y-z", "v+u-y-z", "v-u-y+z"), _grig_chars(p))),
    description="first complement of the Grigorchuk pencil"))
register(RationalMapSpec("overgroup_s1", 9, _overgroup_s1, lambda p, k: list(zip(
    ("000", "100", "010", "001", "110", "101", "011", "111"), _overgroup_hats(p))),
    description="first complement of the overgroup pencil"))
register(RationalMapSpec("overgroup_s2", 9, _overgroup_s2, _dens(
    ("w+m", lambda p: p[8] + p[3] + p[5] + p[6] + p[1] + p[2] + p[4] + p[7]),
    ("w-m", lambda p: p[8] + p[3] + p[5] + p[6] - p[1] - p[2] - p[4] - p[7])),
    description="second complement of the overgroup pencil"))
register(RationalMapSpec("lamplighter", 2, _lamplighter, _dens(("y-x", lambda p: p[1] - p[0])),
                         description="lamplighter pencil map"))
register(RationalMapSpec("hanoi", 2, _hanoi, _dens(
    ("x-y-1", lambda p: p[0] - p[1] - 1),
    ("x^2+y-y^2-1", lambda p: p[0] * p[0] + p[1] - p[1] * p[1] - 1)),
    description="Hanoi pencil map"))
register(RationalMapSpec("basilica", 2, _basilica, _dens(("y^2", lambda p: p[1] * p[1])),
                         description="Basilica pencil map"))
register(RationalMapSpec("img", 3, _img, _dens(("y", lambda p: p[0]), ("q", _img_q)),
                         description="z^2 + i pencil map, variables (y, z, lambda)"))
register(RationalMapSpec("img_simple", 3, _img_simple, _dens(("y", lambda p: p[0]), ("lambda", lambda p: p[2])),
                         description="simplified z^2 + i pencil map"))
for _w in range(3):
    _fn, _den = _omega_branch(_w)
    register(RationalMapSpec(f"omega{_w}", 2, _fn, _den, params=("y", "z", "u"),
                             defaults={"y": 1, "z": 1, "u": 1},
                             description=f"G_w second complement for w0 = {_w}"))
register(RationalMapSpec("F4", 2, _four_param, lambda p, k: [
    ("v+gamma", p[1] + k["gamma"]), ("v+delta", p[1] + k["delta"])],
    params=("alpha", "beta", "gamma", "delta"), description="four-parameter family"))
register(RationalMapSpec("F3", 2, _three_param, lambda p, k: [("gamma^2-v^2", k["gamma"] ** 2 - p[1] ** 2)],
                         params=("alpha", "beta", "gamma"), description="three-parameter form"))
register(RationalMapSpec("F2", 2, _two_param, lambda p, k: [
    ("v+beta+alpha", p[1] + k["beta"] + k["alpha"]), ("v+beta-alpha", p[1] + k["beta"] - k["alpha"])],
    params=("alpha", "beta"), defaults={"alpha": 1, "beta": 1}, description="F4 on the diagonal gamma - beta = beta - delta"))
register(RationalMapSpec("R", 2, _conj_r, lambda p, k: [("alpha", k["alpha"])], params=("alpha", "beta"),
                         description="affine conjugacy from F2 to F"))
register(RationalMapSpec("S", 2, _conj_s, lambda p, k: [], params=("gamma", "delta"),
                         description="affine conjugacy from F4 to F3"))
register(RationalMapSpec("identity", 2, _identity, lambda p, k: [], description="identity map"))


def lookup(map_id):
    if map_id not in REGISTRY:
        raise UnknownName(f"unknown map {map_id!r}; known: {', '.join(REGISTRY)}")
    return REGISTRY[map_id]


def _params(spec, params):
    out = dict(spec.defaults)
    out.update(params or {})
    missing = [p for p in spec.params if p not in out]
    if missing:
        raise UnknownName(f"map {spec.name} needs parameters {missing}")
    return out


def _is_zero(value, exact_mode):
    if exact_mode:
        return value == 0
    return abs(value) < FLOAT_EPS


def evaluate(map_id, point, params=None):
    """Image of ``point``; exact when all inputs are ints or Fractions."""
    spec = lookup(map_id)
    if len(point) != spec.dim:
        raise ValueError(f"map {map_id} takes {spec.dim} coordinates")
    prm = _params(spec, params)
    exact_mode = all(isinstance(c, (int, Fraction)) for c in list(point) + list(prm.values()))
    if exact_mode:
        point = tuple(Fraction(c) for c in point)
        prm = {k: Fraction(v) for k, v in prm.items()}
    else:
        point = tuple(float(c) for c in point)
        prm = {k: float(v) for k, v in prm.items()}
    for label, value in spec.denominators(point, prm):
        if _is_zero(value, exact_mode):
            raise Indeterminate(f"{map_id}: denominator {label} vanishes at {point}")
    return tuple(spec.func(point, prm))


# -- semiconjugacies and invariant families -------------------------------------

def chebyshev_t2(z):
    return 2 * z * z - 1


def theta(x, y):
    """Parameter of the hyperbola ``4 + x^2 - y^2 - 4 theta x = 0`` through (x, y)."""
    if x == 0:
        raise Indeterminate("theta needs x != 0")
    return (4 + x * x - y * y) / (4 * x)


def eta(x, y):
    """Parameter of the hyperbola ``4 - x^2 + y^2 - 4 eta y = 0`` through (x, y)."""
    if y == 0:
        raise Indeterminate("eta needs y != 0")
    return (4 - x * x + y * y) / (4 * y)


def cross_parameters(x, y):
    return theta(x, y), eta(x, y)


def hyperbola_point(family, param, t):
    """A point on one of the invariant hyperbolas, parametrized by ``t``
    (the x coordinate for theta, the y coordinate for eta); ``None`` when
    the curve has no real point there."""
    from math import sqrt

    if family == "theta":
        s = 4 + t * t - 4 * param * t
        if s < 0:
            return None
        return (t, sqrt(s) if not isinstance(s, Fraction) else _frac_sqrt(s))
    if family == "eta":
        s = 4 + t * t - 4 * param * t
        if s < 0:
            return None
        return (sqrt(s) if not isinstance(s, Fraction) else _frac_sqrt(s), t)
    raise UnknownName(family)


def _frac_sqrt(s):
    from math import isqrt

    n, d = s.numerator, s.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return float(s) ** 0.5


def hanoi_invariant(x, y):
    if y == 0:
        raise Indeterminate("hanoi invariant needs y != 0")
    return (x * x - 1 - x * y - 2 * y * y) / y


def hanoi_polynomial(t):
    return t * t - t - 3


def semiconjugacy_residual(map_id, point):
    """Residuals of the semiconjugacies of ``map_id`` at ``point``.

    ``F``: ``(|theta(F p) - T2(theta p)|, |eta(F p) - eta p|)``;
    ``hanoi``: ``(|psi(H p) - beta(psi p)|,)`` with ``psi = hanoi_invariant``.
    Both are exactly zero on rational points.
    """
    point = tuple(Fraction(c) if isinstance(c, int) else c for c in point)
    if map_id == "F":
        t0, e0 = cross_parameters(*point)
        t1, e1 = cross_parameters(*evaluate("F", point))
        return abs(t1 - chebyshev_t2(t0)), abs(e1 - e0)
    if map_id == "hanoi":
        before = hanoi_invariant(*point)
        after = hanoi_invariant(*evaluate("hanoi", point))
        return (abs(after - hanoi_polynomial(before)),)
    raise UnknownName(f"no semiconjugacy registered for {map_id!r}")


def line_family_check_lamplighter(c, samples=5):
    """Image of the line ``x + y = c`` and the Mobius form of the restriction.

    Returns ``(c_image, matrix)`` where the image line is ``x + y = c_image``
    and ``matrix`` acts on the x coordinate after the reflection
    ``(x, y) -> (-x, -y)`` brings the image line back to ``x + y = c``.
    Raises ``AssertionError`` if a sampled point disagrees.
    """
    c = Fraction(c)
    matrix = ((c, -c * c / 2 - 1), (Fraction(1), -c / 2))
    images = set()
    for i in range(samples):
        x = Fraction(2 * i + 1, 3) + c
        y = c - x
        if y == x:
            continue
        fx, fy = evaluate("lamplighter", (x, y))
        images.add(fx + fy)
        (a, b), (cc, d) = matrix
        assert -fx == (a * x + b) / (cc * x + d), "restriction is not the stated Mobius map"
    assert len(images) == 1
    (a, b), (cc, d) = matrix
    assert a * d - b * cc == 1
    return images.pop(), matrix


# -- conjugacies -----------------------------------------------------------------

def _compose(*steps):
    """Apply ``steps`` right to left; each step is ``(map_id, params)``."""
    def run(p):
        for map_id, prm in reversed(steps):
            p = evaluate(map_id, p, prm)
        return p
    return run


def _slice_f_tilde(p):
    x, v = p
    out = evaluate("grigorchuk_s2", (x, 1, 1, 1, v))
    return (out[0], out[4])


def _slice_g_tilde(p):
    # the middle coordinates all equal x^2 / ((v+3)(v-1)); rescale by its inverse
    x, v = p
    out = evaluate("grigorchuk_s1", (x, 1, 1, 1, v))
    if out[1] == 0:
        raise Indeterminate("G tilde slice needs x != 0")
    k = 1 / out[1]
    return (out[0] * k, out[4] * k)


def _to_tilde(p):
    x, y = p
    return (-x, -1 - y)


def three_param_of(alpha, beta, gamma, delta):
    """Parameters of the three-parameter form conjugate to ``F4`` under ``S``."""
    return alpha, (gamma + delta) / 2 - beta, (gamma - delta) / 2


def conjugacy_pairs(params=None):
    """``name -> (left, right)`` callables that must agree pointwise."""
    k = params or {}
    a, b = Fraction(k.get("alpha", 3)), Fraction(k.get("beta", 2))
    g, d = Fraction(k.get("gamma", 5)), Fraction(k.get("delta", -1))
    ab = {"alpha": a, "beta": b}
    four = {"alpha": a, "beta": b, "gamma": g, "delta": d}
    a3, b3, g3 = three_param_of(a, b, g, d)
    three = {"alpha": a3, "beta": b3, "gamma": g3}
    return {
        "H.F = G": (_compose(("H", None), ("F", None)), _compose(("G", None))),
        "H.G = F": (_compose(("H", None), ("G", None)), _compose(("F", None))),
        "H.H = id": (_compose(("H", None), ("H", None)), _compose(("identity", None))),
        "R.F2 = F.R": (_compose(("R", ab), ("F2", ab)), _compose(("F", None), ("R", ab))),
        "S.F4 = F3.S": (_compose(("S", four), ("F4", four)), _compose(("F3", three), ("S", four))),
        "F2 = F4 on the diagonal": (
            _compose(("F2", ab)),
            _compose(("F4", {"alpha": a, "beta": b, "gamma": b + a, "delta": b - a}))),
        "F tilde slice ~ F": (lambda p: _slice_f_tilde(_to_tilde(p)), lambda p: _to_tilde(evaluate("F", p))),
        "G tilde slice ~ G": (lambda p: _slice_g_tilde(_to_tilde(p)), lambda p: _to_tilde(evaluate("G", p))),
    }


def conjugacy_check(name, points, params=None):
    """Number of sample points where both sides were defined and agreed;
    raises ``AssertionError`` on the first disagreement."""
    left, right = conjugacy_pairs(params)[name]
    agreed = 0
    for p in points:
        try:
            lhs, rhs = left(p), right(p)
        except Indeterminate:
            continue
        if tuple(lhs) != tuple(rhs):
            raise AssertionError(f"{name} fails at {p}: {lhs} != {rhs}")
        agreed += 1
    return agreed


# -- iteration and rendering -----------------------------------------------------

@dataclass
class Orbit:
    points: list
    status: str          # "bounded", "escaped" or "indeterminate"
    step: int | None = None


def _norm2(p):
    return sum(c * c for c in p)


def omega_sequence(prefix, length, seed=0):
    """``prefix`` followed by letters from a seeded PCG64 stream."""
    rng = np.random.default_rng(seed)
    seq = [int(v) for v in prefix][:length]
    if len(seq) < length:
        seq.extend(int(v) for v in rng.integers(0, 3, size=length - len(seq)))
    return seq


def _step_ids(map_id, n, sequence):
    if sequence is None:
        return [map_id] * n
    return [f"omega{w}" for w in sequence[:n]]


def iterate(map_id, point, n, params=None, escape_radius=ESCAPE_RADIUS, sequence=None):
    """Orbit of ``point`` for ``n`` steps (or the maps ``omega<w>`` named by
    ``sequence``); stops at escape or indeterminacy."""
    pts = [tuple(point)]
    r2 = escape_radius * escape_radius
    for i, mid in enumerate(_step_ids(map_id, n, sequence)):
        try:
            p = evaluate(mid, pts[-1], params)
        except Indeterminate:
            return Orbit(pts, "indeterminate", i)
        pts.append(p)
        if not all(np.isfinite(float(c)) for c in p) or _norm2(p) > r2:
            return Orbit(pts, "escaped", i + 1)
    return Orbit(pts, "bounded", None)


def _escape_rows(spec_ids, params, xs, ys, iters, radius):
    gx, gy = np.meshgrid(xs, ys)
    x, y = gx.ravel().astype(float), gy.ravel().astype(float)
    steps = np.full(x.shape, 255, dtype=np.uint8)
    alive = np.ones(x.shape, dtype=bool)
    r2 = radius * radius
    with np.errstate(all="ignore"):
        for i, mid in enumerate(spec_ids[:iters]):
            spec = lookup(mid)
            prm = {k: float(v) for k, v in _params(spec, params).items()}
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            p = (x[idx], y[idx])
            bad = np.zeros(idx.size, dtype=bool)
            for _, den in spec.denominators(p, prm):
                bad |= np.abs(den) < FLOAT_EPS
            nx, ny = spec.func(p, prm)
            nx = np.broadcast_to(np.asarray(nx, dtype=float), idx.shape)
            ny = np.broadcast_to(np.asarray(ny, dtype=float), idx.shape)
            out = bad | ~np.isfinite(nx) | ~np.isfinite(ny) | (nx * nx + ny * ny > r2)
            steps[idx[bad]] = 0
            esc = out & ~bad
            steps[idx[esc]] = min(i + 1, 254)
            alive[idx[out]] = False
            keep = ~out
            x[idx[keep]] = nx[keep]
            y[idx[keep]] = ny[keep]
    return steps.reshape(len(ys), len(xs))


def render(map_id, window, res, iters, params=None, sequence=None,
           escape_radius=ESCAPE_RADIUS, threads=None):
    """Escape-time image of a planar map as a ``(res, res)`` uint8 array.

    ``window = (xmin, xmax, ymin, ymax)``; row 0 is the top (``ymax``).
    Pixel values are escape steps, 255 means bounded for all iterations,
    0 marks an undefined image.
    """
    spec = lookup(map_id) if sequence is None else None
    if spec is not None and spec.dim != 2:
        raise ValueError("render needs a planar map")
    xmin, xmax, ymin, ymax = (float(w) for w in window)
    width = height = int(res)
    xs = xmin + (np.arange(width) + 0.5) * (xmax - xmin) / width
    ys = ymax - (np.arange(height) + 0.5) * (ymax - ymin) / height
    ids = _step_ids(map_id, iters, sequence)
    threads = threads or int(os.environ.get("FRACTALGROUPS_THREADS", "1"))
    chunks = np.array_split(np.arange(height), max(1, min(threads, height)))
    if threads <= 1:
        rows = [_escape_rows(ids, params, xs, ys[c], iters, escape_radius) for c in chunks]
    else:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda c: _escape_rows(ids, params, xs, ys[c], iters, escape_radius), chunks))
    return np.vstack(rows)


def ppm_bytes(image):
    """Binary PPM (P6) with the gray value in all three channels."""
    img = np.asarray(image, dtype=np.uint8)
    h, w = img.shape
    header = f"P6\n{w} {h}\n255\n".encode()
    return header + np.repeat(img[:, :, None], 3, axis=2).tobytes()


def write_image(image, path):
    if str(path).lower().endswith(".png"):
        from PIL import Image

        Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(path)
        return
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(image))


def image_hash(image):
    return hashlib.sha256(ppm_bytes(image)).hexdigest()


def random_rationals(rng, count, dim, span=5, den=7):
    """Random points with small numerators and denominators."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    return [tuple(Fraction(rng.randint(-span * den, span * den), rng.randint(1, den)) for _ in range(dim))
            for _ in range(count)]
