import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import Polynomial

from fractalgroups import catalog, spectra
from fractalgroups.errors import AsymmetricPencil, NoConvergence

import oracles

GRIG = catalog.get("grigorchuk")
HANOI = catalog.get("hanoi3")


def test_isotropic_grigorchuk_level_one():
    pencil = spectra.markov_pencil(GRIG)
    mat = spectra.pencil_matrix(GRIG, pencil, 1, exact=True)
    q = Fraction(1, 4)
    assert mat.tolist() == [[3 * q, q], [q, 3 * q]]
    vals = spectra.eigen_sym(mat.astype(float)).values
    assert np.allclose(vals, [0.5, 1.0])


def test_identity_pencil_is_identity():
    mat = spectra.pencil_matrix(GRIG, spectra.Pencil({}, 1), 3)
    assert np.array_equal(mat, np.eye(8))


def test_hanoi_level_one_adjacency_is_all_ones():
    mat = spectra.pencil_matrix(HANOI, spectra.adjacency_pencil(HANOI), 1)
    assert np.array_equal(mat, np.ones((3, 3)))
    assert np.allclose(spectra.eigen_sym(mat).values, [0, 0, 3])


@pytest.mark.parametrize("group", ["grigorchuk", "hanoi3", "basilica", "overgroup"])
def test_pencil_matrix_matches_table_oracle(group):
    spec = catalog.get(group)
    for n in (1, 2, 3, 4):
        ours = spectra.pencil_matrix(spec, spectra.adjacency_pencil(spec), n)
        assert np.array_equal(ours, oracles.adjacency(spec.machine, spec.generators, n))


def test_exact_and_float_builds_agree():
    pencil = spectra.Pencil({"a": Fraction(1, 3), "b": Fraction(2, 7), "c": 5, "d": Fraction(-1, 2)}, Fraction(3, 4))
    exact = spectra.pencil_matrix(GRIG, pencil, 4, exact=True)
    flt = spectra.pencil_matrix(GRIG, pencil, 4)
    assert np.allclose(exact.astype(float), flt, atol=0)


def test_asymmetric_pencil_is_rejected():
    spec = catalog.get("basilica")
    with pytest.raises(AsymmetricPencil):
        spectra.pencil_matrix(spec, spectra.Pencil({"a": 1, "b": 1}), 3)
    assert spectra.pencil_matrix(spec, spectra.Pencil({"a": 1, "b": 1}, symmetric=False), 3).shape == (8, 8)


def test_diagonal_spectrum():
    vals = spectra.eigen_sym(np.diag([3.0, -1.0, 2.0, 2.0]))
    assert list(vals.values) == [-1.0, 2.0, 2.0, 3.0]
    assert vals.clusters == [(-1.0, 1), (2.0, 2), (3.0, 1)]


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10 ** 6))
def test_jacobi_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    ours = spectra.eigen_sym(a, method="jacobi").values
    assert np.allclose(ours, np.linalg.eigvalsh(a), atol=1e-10)


def test_jacobi_off_diagonal_residual():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(20, 20))
    a = a + a.T
    vals = spectra.jacobi_eigenvalues(a)
    assert abs(vals.sum() - np.trace(a)) < 1e-10
    assert abs((vals ** 2).sum() - (a * a).sum()) < 1e-9


def test_jacobi_reports_non_convergence():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(12, 12))
    with pytest.raises(NoConvergence):
        spectra.jacobi_eigenvalues(a + a.T, max_sweeps=1)


def test_spectrum_is_invariant_under_relabeling():
    mat = spectra.pencil_matrix(GRIG, spectra.markov_pencil(GRIG), 5)
    perm = np.random.default_rng(4).permutation(32)
    relabeled = mat[np.ix_(perm, perm)]
    assert np.allclose(spectra.eigen_sym(mat).values, spectra.eigen_sym(relabeled).values)


# -- Hanoi -------------------------------------------------------------------------------

def test_hanoi_reference_small_levels():
    assert spectra.hanoi_reference_spectrum(1) == [(0.0, 2), (3.0, 1)]
    ref = dict((round(v, 12), m) for v, m in spectra.hanoi_reference_spectrum(2))
    r13 = math.sqrt(13)
    expected = {3.0: 1, 0.0: 3, -2.0: 1, round((1 - r13) / 2, 12): 2, round((1 + r13) / 2, 12): 2}
    assert ref == expected


def test_hanoi_reference_total_and_distinct_count():
    for n in range(1, 7):
        ref = spectra.hanoi_reference_spectrum(n)
        assert sum(m for _, m in ref) == 3 ** n
        assert len(ref) == 3 * 2 ** (n - 1) - 1


def test_hanoi_preimages_against_polynomial_roots():
    sets = spectra.preimage_sets(0.0, 5)
    for prev, cur in zip(sets, sets[1:]):
        roots = sorted(r.real for t in prev for r in np.roots([1, -1, -3 - t]))
        assert np.allclose(cur, roots, atol=1e-12)


@pytest.mark.parametrize("n", range(1, 7))
def test_hanoi_spectrum_matches_eigenvalues(n):
    mat = oracles.adjacency(HANOI.machine, HANOI.generators, n)
    found = spectra.cluster(np.linalg.eigvalsh(mat))
    ref = spectra.hanoi_reference_spectrum(n)
    assert len(found) == len(ref)
    for (v, m), (rv, rm) in zip(found, ref):
        assert abs(v - rv) < 1e-8 and m == rm


def test_hanoi_finite_level_masses():
    # exact finite-level mass at a point of f^-i(0): (3^(n-i-1) + 3) / (2 3^n)
    for n in range(4, 7):
        measure = spectra.density_of_states(np.linalg.eigvalsh(oracles.adjacency(HANOI.machine, HANOI.generators, n)))
        for i, pts in enumerate(spectra.preimage_sets(0.0, n)):
            for p in pts:
                mass = measure.mass_near(p)
                assert mass == pytest.approx(1 / (6 * 3 ** i) + 1.5 / 3 ** n, abs=1e-12)
        for j, pts in enumerate(spectra.preimage_sets(-2.0, n - 1)):
            for p in pts:
                assert measure.mass_near(p) == pytest.approx(1 / (6 * 3 ** j) - 0.5 / 3 ** n, abs=1e-12)


# -- density of states ----------------------------------------------------------------

def test_dos_masses_sum_to_one():
    measures, dists = spectra.dos(GRIG, spectra.markov_pencil(GRIG), [3, 4, 5, 6])
    assert len(dists) == 3
    for m in measures:
        assert abs(sum(w for _, w in m.atoms) - 1) < 1e-10
    counts = spectra.cluster(np.linalg.eigvalsh(spectra.pencil_matrix(GRIG, spectra.markov_pencil(GRIG), 5)))
    assert sum(Fraction(c, 32) for _, c in counts) == 1


def test_single_level_dos():
    (m,), dists = spectra.dos(HANOI, spectra.adjacency_pencil(HANOI), [3])
    assert dists == [] and abs(sum(w for _, w in m.atoms) - 1) < 1e-12


def test_kolmogorov_distance_of_point_masses():
    mu = spectra.DensityOfStates(0, [(0.0, 0.5), (1.0, 0.5)])
    nu = spectra.DensityOfStates(0, [(0.0, 0.25), (1.0, 0.75)])
    assert spectra.kolmogorov_distance(mu, nu) == pytest.approx(0.25)
    assert spectra.kolmogorov_distance(mu, mu) == 0


def test_grigorchuk_spectra_are_nested_and_contained():
    pencil = spectra.markov_pencil(GRIG)
    prev = None
    for n in range(1, 9):
        vals = spectra.eigen_sym(spectra.pencil_matrix(GRIG, pencil, n)).values
        inside = ((vals >= -0.5 - 1e-9) & (vals <= 1e-9)) | ((vals >= 0.5 - 1e-9) & (vals <= 1 + 1e-9))
        assert inside.all()
        if prev is not None:
            assert max(np.min(np.abs(vals - p)) for p in prev) < 1e-8
        prev = vals


def test_hausdorff_distance_to_deep_level_decreases():
    pencil = spectra.markov_pencil(GRIG)
    deep = spectra.eigen_sym(spectra.pencil_matrix(GRIG, pencil, 10)).values

    def hausdorff(x, y):
        d = np.abs(x[:, None] - y[None, :])
        return max(d.min(axis=1).max(), d.min(axis=0).max())

    dists = [hausdorff(spectra.eigen_sym(spectra.pencil_matrix(GRIG, pencil, n)).values, deep) for n in range(1, 9)]
    assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))


def test_level_too_large_is_rejected():
    with pytest.raises(ValueError):
        spectra.eigen_sym(np.eye(spectra.MAX_DIM + 1))


# -- Lamplighter ------------------------------------------------------------------------

def u_poly(k):
    prev, cur = Polynomial([0]), Polynomial([1])
    for _ in range(k):
        prev, cur = cur, Polynomial([0, 2]) * cur - prev
    return cur


@pytest.mark.parametrize("mu", [0.0, 0.5, 2.0, -1.3])
def test_lamplighter_zeros_against_polynomial_roots(mu):
    for k in range(1, 12):
        p = u_poly(k) + mu * u_poly(k - 1)
        ts = np.sort(p.roots().real)
        expected = np.sort(-4 * ts - mu)
        assert np.allclose(spectra.lamplighter_zeros(k, mu), expected, atol=1e-9)


def test_lamplighter_atoms_at_mu_zero():
    atoms = spectra.lamplighter_spectral_atoms(0.0, 20)
    assert all(-4 <= v <= 4 for v, _ in atoms)
    assert abs(sum(w for _, w in atoms) - 1) < 1e-4


def test_lamplighter_partial_mass_is_geometric():
    for k_max in (2, 5, 10, 20):
        mass = sum(w for _, w in spectra.lamplighter_spectral_atoms(1.0, k_max))
        expected = 0.25 + sum(k * 2.0 ** -(k + 1) for k in range(2, k_max + 1))
        assert mass == pytest.approx(expected, abs=1e-15)


def test_lamplighter_accumulation_outside_interval_for_large_mu():
    atoms = spectra.lamplighter_spectral_atoms(2.0, 20)
    outside = [v for v, _ in atoms if v > 2 + 1e-9]
    assert outside
    assert abs(max(outside) - 3.0) < 1e-3
