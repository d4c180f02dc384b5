import numpy as np
import pytest

from chiralqed.errors import EmptyBand, GapCollapse, UnsupportedDisorder
from chiralqed.lattice import DisorderSpec, Geometry, Kind, apply_disorder, build_lattice, field_hamiltonian
from chiralqed.spectral import (
    analytic_cls,
    cls_overlap,
    default_tol,
    dump_spectrum,
    eigendecompose,
    flat_band_basis,
    modified_gram_schmidt,
    residuals,
    sublattice_counts,
)

from .conftest import GEOMETRIES, clean


def near_zero_count(h, tol):
    """Independent route: LAPACK eigenvalues counted within tol."""
    return int(np.sum(np.abs(np.linalg.eigvalsh(h)) <= tol))


def test_diamond_cls_are_zero_modes_brute_force():
    geometry, lat, h = clean(Kind.DIAMOND, 31)
    # the N analytic CLSs are annihilated by H and mutually orthogonal
    vecs = np.stack([analytic_cls(geometry, n) for n in range(31)], axis=1)
    assert np.abs(h @ vecs).max() <= 1e-12
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(31), atol=1e-15)
    sp = eigendecompose(h)
    zeros = np.abs(sp.eigenvalues) <= 1e-10
    assert zeros.sum() == 31


@pytest.mark.parametrize("geometry", GEOMETRIES)
@pytest.mark.parametrize("width", [0.0, 1.0, 2.0])
def test_spectrum_is_chiral(geometry, width):
    lat = apply_disorder(build_lattice(geometry), DisorderSpec(width, seed=17))
    w = eigendecompose(field_hamiltonian(lat)).eigenvalues
    assert np.abs(w + w[::-1]).max() <= 1e-10


def test_stub_dimension_matches_counting():
    geometry, lat, h = clean(Kind.STUB, 31, v=1.0)
    sp = eigendecompose(h)
    basis = flat_band_basis(sp, lat)
    maj, mino = sublattice_counts(lat)
    assert (maj, mino) == (62, 31)
    assert basis.dimension == maj - mino == 31
    assert near_zero_count(h, default_tol(sp)) == 31


@pytest.mark.parametrize("seed", range(8))
def test_double_comb_dimension_any_seed(seed):
    lat = apply_disorder(build_lattice(Geometry(Kind.DOUBLE_COMB, 20)), DisorderSpec(1.0, seed=seed))
    basis = flat_band_basis(eigendecompose(field_hamiltonian(lat)), lat)
    assert basis.dimension == 20


@pytest.mark.parametrize("geometry", GEOMETRIES)
@pytest.mark.parametrize("seed", range(3))
def test_basis_orthonormal_and_minority_free(geometry, seed):
    lat = apply_disorder(build_lattice(geometry), DisorderSpec(1.0, seed=seed))
    h = field_hamiltonian(lat)
    basis = flat_band_basis(eigendecompose(h), lat)
    v = basis.vectors
    assert np.abs(v.T @ v - np.eye(basis.dimension)).max() <= 1e-12
    assert np.abs(h @ v).max() <= 1e-10
    assert np.abs(v[lat.minority]).max() <= 1e-8
    assert basis.dimension >= lat.majority.sum() - lat.minority.sum()


def test_gap_diamond_matches_dispersion():
    # bright (a+c)/sqrt2 modes and b sites form a 2N ring with hopping sqrt(2) J,
    # eigenvalues 2 sqrt2 cos(pi m / N); smallest nonzero |.| for N odd
    n = 31
    _, lat, h = clean(Kind.DIAMOND, n)
    basis = flat_band_basis(eigendecompose(h), lat)
    m = np.arange(2 * n)
    ring = np.abs(2 * np.sqrt(2) * np.cos(np.pi * m / n))
    np.testing.assert_allclose(basis.gap, ring.min(), rtol=1e-12)


def test_gap_collapse_even_stub():
    # even N contains k = pi where the dispersive bands sit at +-v; v tiny -> no gap
    _, lat, h = clean(Kind.STUB, 30, v=1e-7)
    sp = eigendecompose(h)
    with pytest.raises(GapCollapse) as info:
        flat_band_basis(sp, lat)
    assert info.value.gap == pytest.approx(1e-7, rel=1e-6)


def test_small_eta_odd_stub_keeps_gap():
    _, lat, h = clean(Kind.STUB, 31, v=0.05)
    basis = flat_band_basis(eigendecompose(h), lat)
    assert basis.dimension == 31
    # k closest to pi: 2 sin(pi / 2N) with eta added in quadrature
    expected = np.sqrt(0.05**2 + (2 * np.sin(np.pi / 62)) ** 2)
    np.testing.assert_allclose(basis.gap, expected, rtol=1e-10)


def test_empty_band():
    sp = eigendecompose(np.diag([1.0, -2.0, 3.0]))
    with pytest.raises(EmptyBand):
        flat_band_basis(sp)


def test_custom_tol():
    sp = eigendecompose(np.diag([0.0, 1e-6, 1.0]))
    assert flat_band_basis(sp, tol=1e-5).dimension == 2
    with pytest.raises(GapCollapse):
        flat_band_basis(sp, tol=1e-7)


def test_analytic_cls_values():
    dc = Geometry(Kind.DOUBLE_COMB, 5)
    psi = analytic_cls(dc, 2)
    np.testing.assert_allclose(psi[[6, 8]], [1 / np.sqrt(2), -1 / np.sqrt(2)], rtol=1e-15)
    assert np.count_nonzero(psi) == 2
    stub = Geometry(Kind.STUB, 5, v=1.0)
    psi = analytic_cls(stub, 1)
    np.testing.assert_allclose(psi[[3, 6, 5]], np.array([1, 1, -1]) / np.sqrt(3), rtol=1e-15)
    assert np.count_nonzero(psi) == 3


@pytest.mark.parametrize("geometry", [
    Geometry(Kind.DOUBLE_COMB, 20, v1=0.7, v2=1.9),
    Geometry(Kind.DIAMOND, 31),
    Geometry(Kind.STUB, 31, v=0.37),
    Geometry(Kind.STUB, 31, v=10.0),
])
def test_analytic_cls_residual(geometry):
    h = field_hamiltonian(build_lattice(geometry))
    for n in range(geometry.cells):
        psi = analytic_cls(geometry, n)
        assert abs(np.linalg.norm(psi) - 1) <= 1e-15
        assert np.abs(h @ psi).max() <= 1e-12


def test_double_comb_cls_with_realized_couplings():
    geometry = Geometry(Kind.DOUBLE_COMB, 20)
    lat = apply_disorder(build_lattice(geometry), DisorderSpec(1.0, seed=4))
    h = field_hamiltonian(lat)
    for n in range(20):
        psi = analytic_cls(geometry, n, lat.base_couplings(n))
        assert np.abs(h @ psi).max() <= 1e-12


def test_cls_unsupported_disorder():
    with pytest.raises(UnsupportedDisorder):
        analytic_cls(Geometry(Kind.DIAMOND, 5), 0, {"J": 1.1})


@pytest.mark.parametrize("eta", [0.1, 0.5, 1.0, 3.0, 10.0])
def test_stub_overlap(eta):
    assert cls_overlap(Geometry(Kind.STUB, 31, v=eta)) == pytest.approx(1 / (2 + eta**2), abs=1e-12)


def test_stub_overlap_limits():
    assert cls_overlap(Geometry(Kind.STUB, 31, v=1.0)) == pytest.approx(1 / 3, abs=1e-15)
    assert cls_overlap(Geometry(Kind.STUB, 31, v=100.0)) <= 1e-4
    assert cls_overlap(Geometry(Kind.DIAMOND, 31)) == 0.0


def test_mgs_reproducible(rng):
    a = rng.normal(size=(20, 6))
    q = modified_gram_schmidt(a)
    np.testing.assert_allclose(q.T @ q, np.eye(6), atol=1e-14)
    assert q.tobytes() == modified_gram_schmidt(a).tobytes()
    # first column only normalised
    np.testing.assert_allclose(q[:, 0], a[:, 0] / np.linalg.norm(a[:, 0]))


def test_residual_helper():
    _, _, h = clean(Kind.DIAMOND, 31)
    res, orth = residuals(h, eigendecompose(h))
    assert res <= 1e-10 * 4 and orth <= 1e-10


def test_dump_spectrum_format():
    sp = eigendecompose(np.array([[0.0, 0.1], [0.1, 0.0]]))
    lines = dump_spectrum(sp).splitlines()
    assert [float(x) for x in lines] == list(sp.eigenvalues)
