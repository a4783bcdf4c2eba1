import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsm_jacobi.errors import BudgetExceeded, InvalidGrid, InvalidInput, UnsupportedShift
from fsm_jacobi.fsm import inverse_norm
from fsm_jacobi.operator import from_bands, laurent_spectrum, materialize, reflect
from fsm_jacobi.pseudoergodic import constant_field, explicit_field, sample_iid
from fsm_jacobi.spectra import (GridSpec, convergence_study, eigenvalues, hausdorff,
                                is_selfadjoint, pseudospectrum_grid, singular_values)
from fsm_jacobi.symbol_sets import SymbolSet, TriSymbolSet

ANDERSON = TriSymbolSet(SymbolSet.points([1]), SymbolSet.points([0, 2]), SymbolSet.points([1]))


def test_eigenvalues_diag():
    sys = materialize(constant_field(0, 2, 0, -3, 3), -1, 1)
    assert np.allclose(eigenvalues(sys).points, [2, 2, 2])


@pytest.mark.parametrize("n", [1, 2, 7, 50])
def test_free_laplacian_eigenvalues(n):
    sys = materialize(constant_field(1, 0, 1, 0, n + 1), 1, n)
    k = np.arange(1, n + 1)
    expected = np.sort(2 * np.cos(k * np.pi / (n + 1)))
    got = eigenvalues(sys).points
    assert np.all(got.imag == 0)
    assert np.allclose(np.sort(got.real), expected, atol=1e-12)


def test_anderson_eigenvalues_in_band():
    sys = materialize(sample_iid(ANDERSON, 1, -200, 200), -150, 150)
    assert is_selfadjoint(sys)
    ev = eigenvalues(sys).points.real
    assert ev.min() >= -2 - 1e-12 and ev.max() <= 4 + 1e-12


def test_selfadjoint_route_matches_general_path(rng):
    n = 60
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    v = rng.normal(size=n)
    w = np.conj(np.r_[u[1:], 0])
    sys = from_bands(0, 0, u, v, w)
    assert is_selfadjoint(sys)
    fast = np.sort(eigenvalues(sys).points.real)
    general = np.sort(np.linalg.eigvals(sys.to_dense()).real)
    assert np.allclose(fast, general, atol=1e-8)


def test_general_eigenvalue_backward_error(hn_sets):
    sys = materialize(sample_iid(hn_sets, 0, -100, 100), -40, 40)
    M = sys.to_dense()
    for lam in eigenvalues(sys).points[:10]:
        s = np.linalg.svd(M - lam * np.eye(len(M)), compute_uv=False).min()
        assert s <= 1e-8 * np.linalg.norm(M, 2)


def test_eigenvalue_limits():
    with pytest.raises(UnsupportedShift):
        eigenvalues(from_bands(0, -1, [1, 1], [1, 1], [1, 1]))
    big = from_bands(0, 0, np.zeros(4001), np.arange(4001) * 1j, np.ones(4001))
    with pytest.raises(BudgetExceeded):
        eigenvalues(big)


def test_singular_values_examples(rng):
    assert np.allclose(singular_values(materialize(constant_field(0, 1, 0, 0, 9), 0, 9)).points, 1)
    sv = singular_values(from_bands(0, 0, [0, 0], [3, 4], [0, 0])).points
    assert np.allclose(sv, [3, 4])
    sys = from_bands(0, 0, *(rng.normal(size=25) + 1j * rng.normal(size=25) for _ in range(3)))
    assert np.allclose(singular_values(sys).points, singular_values(reflect(sys)).points,
                       atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 80), st.sampled_from([-1, 0, 1]), st.integers(0, 2**32 - 1))
def test_min_singular_value_times_inverse_norm(n, k, seed):
    r = np.random.default_rng(seed)
    sys = from_bands(0, k, *(r.normal(size=n) + 1j * r.normal(size=n) for _ in range(3)))
    sv = singular_values(sys).points.real
    assert np.all(sv >= 0)
    inv = inverse_norm(sys)
    if np.isfinite(inv) and sv.min() > 1e-12:
        assert sv.min() * inv == pytest.approx(1, abs=1e-6)


def test_pseudospectrum_one_by_one():
    sys = from_bands(0, 0, [0], [2], [0])
    grid = GridSpec(1, 3, -1, 1, 41, 41)
    res = pseudospectrum_grid(sys, grid, [0.5])
    nodes = grid.nodes()
    assert np.allclose(res.sigma_min, np.abs(nodes - 2))
    inside = res.levels[0.5].points
    assert set(np.round(inside, 12)) == set(np.round(nodes[np.abs(nodes - 2) <= 0.5], 12))


def test_pseudospectrum_normal_window_and_nesting():
    sys = materialize(sample_iid(ANDERSON, 3, -100, 100), -40, 40)
    ev = eigenvalues(sys).points
    grid = GridSpec(-3, 5, -1, 1, 41, 11)
    eps = [0.05, 0.2, 0.5]
    res = pseudospectrum_grid(sys, grid, eps)
    for e in eps:
        pts = res.levels[e].points
        if pts.size:
            assert np.abs(pts[:, None] - ev[None, :]).min(axis=1).max() <= e + grid.diagonal
    sets = [set(res.levels[e].points.tolist()) for e in eps]
    assert sets[0] <= sets[1] <= sets[2]
    # normal matrix: sigma_min(A - lambda) is the distance to the spectrum
    dist = np.abs(grid.nodes()[..., None] - ev).min(axis=-1)
    assert np.allclose(res.sigma_min, dist, atol=1e-8)


def test_pseudospectrum_sparse_path_matches_dense(hn_sets):
    sys = materialize(sample_iid(hn_sets, 0, -100, 100), -50, 50)
    grid = GridSpec(-1, 1, -0.5, 0.5, 3, 3)
    res = pseudospectrum_grid(sys, grid)
    M = sys.to_dense()
    for lam, s in zip(grid.nodes().ravel(), res.sigma_min.ravel()):
        exact = np.linalg.svd(M - lam * np.eye(len(M)), compute_uv=False).min()
        assert s == pytest.approx(exact, rel=1e-6)


def test_pseudospectrum_threads_do_not_change_results(hn_sets):
    sys = materialize(sample_iid(hn_sets, 0, -100, 100), -10, 10)
    grid = GridSpec(-1, 1, -1, 1, 5, 5)
    a = pseudospectrum_grid(sys, grid, threads=1).sigma_min
    b = pseudospectrum_grid(sys, grid, threads=3).sigma_min
    assert np.array_equal(a, b)


def test_grid_validation():
    with pytest.raises(InvalidGrid):
        GridSpec(1, 1, 0, 1)
    with pytest.raises(InvalidGrid):
        GridSpec(0, 1, 0, 1, 1, 5)
    with pytest.raises(InvalidGrid):
        GridSpec.parse("0,1,2")
    assert GridSpec.parse("-1,1,-2,2,11") == GridSpec(-1, 1, -2, 2, 11, 11)


def test_pseudospectrum_size_cap():
    n = 1501
    with pytest.raises(BudgetExceeded):
        pseudospectrum_grid(from_bands(0, 0, np.ones(n), np.ones(n), np.ones(n)))


def test_hausdorff_examples():
    assert hausdorff([1, 2j], [2j, 1]) == 0
    assert hausdorff([0], [3, 4]) == 4
    assert hausdorff([3, 4], [0]) == 4
    with pytest.raises(InvalidInput):
        hausdorff([], [1])


def brute_hausdorff(M, N):
    D = np.abs(np.asarray(M)[:, None] - np.asarray(N)[None, :])
    return max(D.min(axis=1).max(), D.min(axis=0).max())


clouds = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                  min_size=1, max_size=30)


@settings(max_examples=60, deadline=None)
@given(clouds, clouds, clouds)
def test_hausdorff_axioms(M, N, P):
    d = hausdorff(M, N)
    assert d == pytest.approx(brute_hausdorff(M, N), abs=1e-12)
    assert d == hausdorff(N, M)
    assert hausdorff(M, M) == 0
    assert d <= hausdorff(M, P) + hausdorff(P, N) + 1e-12
    if set(M) == set(N):
        assert d == 0
    if d == 0:  # squared distances below ~1e-308 underflow, so only up to that
        assert all(min(abs(m - n) for n in N) < 1e-150 for m in M)


def test_convergence_study_circulant():
    fld = constant_field(1, 0, 1, -5, 5)
    rep = convergence_study(fld, [64, 256, 1024], "circulant", laurent_spectrum(1, 0, 1, 8192))
    assert all(d <= 10 / n for n, d in zip(rep.sizes, rep.distances))
    assert rep.decreasing


def test_convergence_study_flags_non_normal_toeplitz():
    # finite sections of a non-normal Toeplitz matrix have spectra on a segment,
    # far from the symbol curve: no convergence, and the report says so
    fld = constant_field(2, 0, 0.5, -10, 10)
    target = laurent_spectrum(2, 0, 0.5, 4096)
    rep = convergence_study(fld, [10, 20, 40], "eig", target, tolerance=0.25)
    assert not rep.converged
    assert min(rep.distances) > 1.0
    assert "engineering" in rep.to_json()["note"]


def test_convergence_study_rejects_unsorted_sizes():
    with pytest.raises(InvalidInput):
        convergence_study(constant_field(1, 0, 1, -5, 5), [20, 10], "eig", [0])
