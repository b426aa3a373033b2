import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractalgroups import catalog, dynamics, schur
from fractalgroups.errors import Indeterminate, SingularBlock, ZeroCharacter
from fractalgroups.schur import BlockMatrix, EA2Element

import oracles


def rationals(rng, count, dim, span=6, den=9):
    return [tuple(Fraction(rng.randint(-span * den, span * den), rng.randint(1, den)) for _ in range(dim))
            for _ in range(count)]


def exact_array(rows):
    return np.array([[Fraction(x) for x in r] for r in rows], dtype=object)


# -- block complements -------------------------------------------------------------------

def test_scalar_complements():
    m = BlockMatrix.split(exact_array([[2, 1], [1, 3]]))
    assert schur.schur1(m)[0, 0] == Fraction(5, 3)
    assert schur.schur2(m)[0, 0] == Fraction(5, 2)


def test_identity_lower_block():
    rng = np.random.default_rng(1)
    a, b, c = rng.normal(size=(3, 3)), rng.normal(size=(3, 2)), rng.normal(size=(2, 3))
    m = BlockMatrix(a, b, c, np.eye(2))
    assert np.allclose(schur.schur1(m), a - b @ c)


def test_frobenius_two_by_two():
    inv = schur.frobenius_inverse(BlockMatrix.split(exact_array([[2, 1], [1, 3]])))
    assert inv.tolist() == [[Fraction(3, 5), Fraction(-1, 5)], [Fraction(-1, 5), Fraction(2, 5)]]


def test_frobenius_block_diagonal():
    a = exact_array([[2, 1], [0, 1]])
    d = exact_array([[1, 4], [0, 2]])
    z = exact_array([[0, 0], [0, 0]])
    inv = schur.frobenius_inverse(BlockMatrix(a, z, z, d))
    assert inv[:2, :2].tolist() == [[Fraction(1, 2), Fraction(-1, 2)], [0, 1]]
    assert inv[2:, 2:].tolist() == [[1, -2], [0, Fraction(1, 2)]]


def test_frobenius_random_rational_eight_by_eight():
    rng = random.Random(8)
    for _ in range(5):
        rows = [[Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(8)] for _ in range(8)]
        m = exact_array(rows)
        inv = schur.frobenius_inverse(BlockMatrix.split(m))
        prod = m.dot(inv)
        assert prod.tolist() == np.eye(8, dtype=int).tolist()


def test_frobenius_float_and_reconstruction():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(6, 6)) + 6 * np.eye(6)
    inv = schur.frobenius_inverse(BlockMatrix.split(m))
    assert np.allclose(m @ inv, np.eye(6), atol=1e-12)
    assert np.allclose(inv, np.linalg.inv(m))
    # the top-left block of the inverse is the inverse of the first complement
    assert np.allclose(inv[:3, :3], np.linalg.inv(schur.schur1(BlockMatrix.split(m))))
    assert np.allclose(inv[3:, 3:], np.linalg.inv(schur.schur2(BlockMatrix.split(m))))


def test_singular_block():
    m = BlockMatrix.split(np.array([[1.0, 2.0, 0.0, 0.0], [2.0, 4.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]))
    with pytest.raises(SingularBlock):
        schur.schur2(m)
    exact = BlockMatrix.split(exact_array([[1, 2, 0, 0], [2, 4, 1, 0], [0, 1, 1, 0], [0, 0, 0, 1]]))
    with pytest.raises(SingularBlock):
        schur.schur2(exact)


# -- elementary abelian 2-group algebra -------------------------------------------------

def test_walsh_hadamard_is_self_inverse_up_to_scale():
    rng = random.Random(4)
    for rank in range(0, 5):
        v = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(1 << rank)]
        twice = schur.walsh_hadamard(schur.walsh_hadamard(v))
        assert [x / (1 << rank) for x in twice] == v


def test_scalar_inverse():
    e = EA2Element(2, (Fraction(5), 0, 0, 0))
    assert schur.ea2_invert(e).coeffs == (Fraction(1, 5), 0, 0, 0)


def test_rank_two_characters_and_inverse():
    # coefficients on (1, b, c, bc = d) with u = y = z = 1 and v = 0
    e = EA2Element(2, (Fraction(0), Fraction(1), Fraction(1), Fraction(1)))
    assert e.characters() == [3, -1, -1, -1]
    assert (e * e.inverse()).coeffs == (1, 0, 0, 0)


def test_vanishing_character():
    # v + u - y - z = 0
    e = EA2Element(2, (Fraction(1), Fraction(1), Fraction(1), Fraction(1)))
    with pytest.raises(ZeroCharacter):
        schur.ea2_invert(e)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.data())
def test_inverse_is_an_involution(rank, data):
    coeffs = tuple(Fraction(data.draw(st.integers(-20, 20)), data.draw(st.integers(1, 6))) for _ in range(1 << rank))
    e = EA2Element(rank, coeffs)
    if any(c == 0 for c in e.characters()):
        with pytest.raises(ZeroCharacter):
            schur.ea2_invert(e)
        return
    inv = schur.ea2_invert(e)
    assert schur.ea2_invert(inv) == e
    assert (e * inv).coeffs == (1,) + (0,) * ((1 << rank) - 1)


# -- derived maps against the printed formulas ---------------------------------------------

def both_or_neither(derive, hardcoded):
    try:
        left = derive()
    except (ZeroCharacter, SingularBlock):
        left = None
    try:
        right = hardcoded()
    except Indeterminate:
        right = None
    return left, right


def test_grigorchuk_derivation_matches_formulas():
    checked = 0
    for p in rationals(random.Random(10), 120, 5):
        s1, s2 = schur.derive_grigorchuk_maps(*p)
        assert s1 == dynamics.evaluate("grigorchuk_s1", p)
        assert s2 == dynamics.evaluate("grigorchuk_s2", p)
        checked += 1
    assert checked >= 100


def test_overgroup_derivation_matches_formulas():
    for p in rationals(random.Random(11), 100, 9):
        s1, s2 = schur.derive_overgroup_maps(*p)
        assert s1 == dynamics.evaluate("overgroup_s1", p)
        assert s2 == dynamics.evaluate("overgroup_s2", p)


@pytest.mark.parametrize("omega0", [0, 1, 2])
def test_gomega_derivation_matches_formulas(omega0):
    for x, v, y, z, u in rationals(random.Random(12 + omega0), 100, 5):
        derived = schur.derive_gomega_schur2(x, v, y, z, u, omega0)
        assert derived == dynamics.evaluate(f"omega{omega0}", (x, v), {"y": y, "z": z, "u": u})


def test_singularities_agree_between_paths():
    # points on the wall v + u - y - z = 0 are singular for both complements
    for x, y, z, u in rationals(random.Random(20), 20, 4):
        p = (x, y, z, u, y + z - u)
        for map_id in ("grigorchuk_s1", "grigorchuk_s2"):
            left, right = both_or_neither(lambda: schur.derive_grigorchuk_maps(*p),
                                          lambda: dynamics.evaluate(map_id, p))
            assert left is None and right is None


def test_s2_first_coordinate_example():
    _, s2 = schur.derive_grigorchuk_maps(1, 1, 1, 1, 0)
    assert s2[0] == Fraction(-2, 3)


def test_s2_fixes_middle_on_unit_slice():
    for x, v in rationals(random.Random(13), 20, 2):
        try:
            _, s2 = schur.derive_grigorchuk_maps(x, Fraction(1), Fraction(1), Fraction(1), v)
        except ZeroCharacter:
            continue
        assert s2[1:4] == (1, 1, 1)


def test_overgroup_reduces_to_grigorchuk():
    zero = Fraction(0)
    for x, y, z, u, v in rationals(random.Random(14), 30, 5):
        o1, o2 = schur.derive_overgroup_maps(x, y, z, u, zero, zero, zero, zero, v)
        g1, g2 = schur.derive_grigorchuk_maps(x, y, z, u, v)
        assert o1[:4] + o1[8:] == g1 and o1[4:8] == (0, 0, 0, 0)
        assert o2[:4] + o2[8:] == g2 and o2[4:8] == (0, 0, 0, 0)


def test_overgroup_s2_middle_permutation():
    for p in rationals(random.Random(15), 20, 9):
        x, y, z, u, q, r, s, t, v = p
        _, s2 = schur.derive_overgroup_maps(*p)
        assert s2[1:8] == (u, y, z, q, t, r, s)


def test_gomega_zero_reproduces_grigorchuk_s2():
    for x, v, y, z, u in rationals(random.Random(16), 30, 5):
        xs, vs = schur.derive_gomega_schur2(x, v, y, z, u, 0)
        _, s2 = schur.derive_grigorchuk_maps(x, y, z, u, v)
        assert (xs, vs) == (s2[0], s2[4])


def test_gomega_one_is_a_role_swap_of_zero():
    for x, v, y, z, u in rationals(random.Random(17), 30, 5):
        assert schur.derive_gomega_schur2(x, v, y, z, u, 1) == schur.derive_gomega_schur2(x, v, y, u, z, 0)


# -- finite-level renormalization -------------------------------------------------------------

def test_renormalization_example():
    assert schur.level_renormalization_check("grigorchuk", (1, 2, 3, 5, 7), 3) < 1e-10
    assert schur.level_renormalization_check("grigorchuk", (1, 2, 3, 5, 7), 3, complement=1) < 1e-10


def test_renormalization_identity_pencil():
    assert schur.level_renormalization_check("grigorchuk", (0, 0, 0, 0, 1), 3) == 0


def test_renormalization_overgroup():
    p = rationals(random.Random(18), 1, 9)[0]
    assert schur.level_renormalization_check("overgroup", p, 3) < 1e-10


def test_exact_renormalization_against_brute_force_complements():
    grig = catalog.get("grigorchuk")
    names = ("a", "b", "c", "d")
    for p in rationals(random.Random(19), 4, 5):
        mat = oracles.exact_pencil_matrix(grig.machine, dict(zip(names, p[:4])), p[4], 3)
        s1, s2 = oracles.schur_complements(mat)
        for numeric, map_id in ((s1, "grigorchuk_s1"), (s2, "grigorchuk_s2")):
            q = dynamics.evaluate(map_id, p)
            lower = oracles.exact_pencil_matrix(grig.machine, dict(zip(names, q[:4])), q[4], 2)
            assert numeric == lower
