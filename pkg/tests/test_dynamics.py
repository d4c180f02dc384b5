import csv
import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import ortho_group

from chiralqed.dynamics import (
    EmitterConfig,
    amplitudes,
    dark_state_count,
    effective_model,
    evolve,
    first_emission_time,
    full_hamiltonian,
    lifted_mode_fidelity,
    photonic_state,
    time_grid,
    write_trace_csv,
)
from chiralqed.errors import BadSite, MissingTau, WeakCouplingViolated, ZeroWeight
from chiralqed.lattice import DisorderSpec, Geometry, Kind, apply_disorder, build_lattice, field_hamiltonian
from chiralqed.spectral import FlatBandBasis, eigendecompose, flat_band_basis


def setup(geometry, width=0.0, seed=0, **emitter):
    lat = apply_disorder(build_lattice(geometry), DisorderSpec(width, seed=seed))
    basis = flat_band_basis(eigendecompose(field_hamiltonian(lat)), lat)
    em = EmitterConfig(**emitter)
    return lat, basis, em


def test_full_hamiltonian_layout():
    lat = build_lattice(Geometry(Kind.DOUBLE_COMB, 20))
    em = EmitterConfig(g=1e-3, x0=(0, "a"))
    h = full_hamiltonian(lat, em)
    assert h.shape == (61, 61)
    np.testing.assert_array_equal(h[:60, :60], field_hamiltonian(lat))
    assert h[60, 0] == h[0, 60] == 1e-3
    assert np.count_nonzero(h[60]) == 1


def test_zero_coupling_decouples():
    lat = build_lattice(Geometry(Kind.DIAMOND, 5))
    h = full_hamiltonian(lat, EmitterConfig(g=0.0, omega_e=0.2))
    assert np.all(h[-1, :-1] == 0) and np.all(h[:-1, -1] == 0)
    tr = evolve(h, [0.0, 3.0, 50.0])
    np.testing.assert_allclose(np.abs(tr.f_e), 1.0, atol=1e-13)


def test_bad_site():
    lat = build_lattice(Geometry(Kind.DIAMOND, 5))
    with pytest.raises(BadSite):
        full_hamiltonian(lat, EmitterConfig(x0=(5, "a")))
    with pytest.raises(BadSite):
        full_hamiltonian(lat, EmitterConfig(x0=(0, "d")))


def test_minority_site_zero_weight():
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 31), x0=(0, "b"))
    # the matrix is still assembled fine
    assert full_hamiltonian(lat, em).shape == (94, 94)
    g_k = em.g * basis.vectors[lat.index(0, "b")]
    assert np.abs(g_k).max() <= 1e-12 * em.g
    with pytest.raises(ZeroWeight):
        effective_model(basis, em, lat)


def test_evolve_initial_and_norm():
    lat, basis, em = setup(Geometry(Kind.STUB, 31, v=0.5), width=2.0, seed=3)
    model = effective_model(basis, em, lat)
    tr = evolve(full_hamiltonian(lat, em), time_grid(model.tau))
    assert tr.f_e[0] == pytest.approx(1.0, abs=1e-14)
    assert np.abs(tr.f_x[0]).max() <= 1e-14
    assert tr.norm_drift() <= 1e-10


def test_evolve_matches_matrix_exponential():
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 5), width=1.0, seed=1, g=0.05)
    h = full_hamiltonian(lat, em)
    psi0 = np.zeros(h.shape[0])
    psi0[-1] = 1.0
    tr = evolve(h, [0.7, 13.0])
    for k, t in enumerate([0.7, 13.0]):
        ref = expm(-1j * h * t) @ psi0
        np.testing.assert_allclose(tr.f_x[k], ref[:-1], atol=1e-12)
        assert abs(tr.f_e[k] - ref[-1]) <= 1e-12


def test_default_grid_contains_tau():
    grid = time_grid(123.4)
    assert len(grid) == 401
    assert grid[0] == 0.0 and grid[-1] == pytest.approx(246.8)
    assert grid[200] == 123.4


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_double_comb_rabi_frequency(r):
    lat, basis, em = setup(Geometry(Kind.DOUBLE_COMB, 20, v2=r))
    model = effective_model(basis, em, lat)
    assert model.lam == pytest.approx(em.g * r / math.sqrt(1 + r * r), rel=1e-10)
    assert model.tau == pytest.approx(math.pi / (2 * model.lam))


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_double_comb_rabi_frequency_c_site(r):
    # derived from the exact zero-mode projector computed with LAPACK
    lat, basis, em = setup(Geometry(Kind.DOUBLE_COMB, 20, v2=r), x0=(0, "c"))
    w, v = np.linalg.eigh(field_hamiltonian(lat))
    p = v[:, np.abs(w) < 1e-9]
    x0 = lat.index(0, "c")
    oracle = em.g * math.sqrt(float(p[x0] @ p[x0]))
    model = effective_model(basis, em, lat)
    assert model.lam == pytest.approx(oracle, rel=1e-10)
    assert model.lam == pytest.approx(em.g / math.sqrt(1 + r * r), rel=1e-10)


def test_diamond_clean_lifted_mode():
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 31))
    model = effective_model(basis, em, lat)
    assert model.lam == pytest.approx(em.g / math.sqrt(2), rel=1e-12)
    expected = np.zeros(lat.n_sites)
    expected[lat.index(0, "a")] = 1 / math.sqrt(2)
    expected[lat.index(0, "c")] = -1 / math.sqrt(2)
    np.testing.assert_allclose(model.lifted_mode, expected, atol=1e-12)
    # single nonzero coupling in the CLS basis
    cls_basis = FlatBandBasis(
        vectors=np.stack([(np.eye(93)[3 * n] - np.eye(93)[3 * n + 2]) / math.sqrt(2) for n in range(31)], 1),
        gap=basis.gap, tol=basis.tol)
    m2 = effective_model(cls_basis, em, lat)
    assert np.count_nonzero(np.abs(m2.g_k) > 1e-15) == 1


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_double_comb_full_emission(r):
    lat, basis, em = setup(Geometry(Kind.DOUBLE_COMB, 20, v2=r))
    model = effective_model(basis, em, lat)
    tr = evolve(full_hamiltonian(lat, em), [model.tau])
    assert abs(tr.f_e[0]) ** 2 <= 1e-4
    assert lifted_mode_fidelity(model, tr) >= 1 - 1e-4


@pytest.mark.parametrize("geometry,width", [
    (Geometry(Kind.DIAMOND, 31), 1.0),
    (Geometry(Kind.STUB, 31, v=1.0), 2.0),
    (Geometry(Kind.DOUBLE_COMB, 20), 1.0),
])
def test_gauge_invariance(geometry, width):
    lat, basis, em = setup(geometry, width=width, seed=8)
    ref = effective_model(basis, em, lat)
    for k in range(5):
        q = ortho_group.rvs(basis.dimension, random_state=k)
        mixed = FlatBandBasis(vectors=basis.vectors @ q, gap=basis.gap, tol=basis.tol)
        m = effective_model(mixed, em, lat)
        assert abs(m.lam - ref.lam) <= 1e-10 * ref.lam
        assert np.abs(m.projector - ref.projector).max() <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_lambda_weight_identity(seed):
    lat, basis, em = setup(Geometry(Kind.STUB, 31, v=0.8), width=2.0, seed=seed, x0=(4, "c"))
    model = effective_model(basis, em, lat)
    x0 = lat.index(4, "c")
    p_diag = basis.projector[x0, x0]
    assert abs(model.lam**2 - em.g**2 * p_diag) <= 1e-10 * em.g**2
    assert abs(model.lam**2 - em.g**2 * np.sum(basis.vectors[x0] ** 2)) <= 1e-10 * em.g**2


@pytest.mark.parametrize("geometry", [Geometry(Kind.DIAMOND, 31), Geometry(Kind.STUB, 31, v=2.0)])
def test_dark_states(geometry):
    lat, basis, em = setup(geometry, width=1.0, seed=2)
    sp = eigendecompose(full_hamiltonian(lat, em))
    assert dark_state_count(sp, 1e-8 * sp.norm) == basis.dimension - 1 == geometry.cells - 1


@pytest.mark.parametrize("seed", range(4))
def test_rabi_law_first_zero(seed):
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 31), width=1.0, seed=seed)
    model = effective_model(basis, em, lat)
    sp = eigendecompose(full_hamiltonian(lat, em))
    t0 = first_emission_time(sp, model.tau)
    assert abs(t0 - model.tau) <= 10 * (em.g / basis.gap) * model.tau


def test_two_level_reduction():
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 31), width=1.0, seed=5)
    model = effective_model(basis, em, lat)
    sp = eigendecompose(full_hamiltonian(lat, em))
    times = time_grid(model.tau, 101)
    amp = amplitudes(sp, times)
    on_mode = amp[:, :-1] @ model.lifted_mode
    lam = model.lam
    bound = em.g / basis.gap
    assert np.abs(amp[:, -1] - np.cos(lam * times)).max() <= bound
    assert np.abs(on_mode - (-1j) * np.sin(lam * times)).max() <= bound


@pytest.mark.parametrize("seed", range(20))
def test_fidelity_first_order_bound(seed):
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 31), width=1.0, seed=seed)
    model = effective_model(basis, em, lat)
    tr = evolve(full_hamiltonian(lat, em), [model.tau])
    assert lifted_mode_fidelity(model, tr) >= 1 - 10 * (em.g / basis.gap) ** 2


def test_strong_coupling_degrades_fidelity():
    lat, basis, _ = setup(Geometry(Kind.DIAMOND, 31), width=1.0, seed=0)
    em = EmitterConfig(g=0.3 * basis.gap)
    with pytest.warns(RuntimeWarning):
        model = effective_model(basis, em, lat)
    tr = evolve(full_hamiltonian(lat, em), [model.tau])
    weak = EmitterConfig(g=1e-3)
    wmodel = effective_model(basis, weak, lat)
    wtr = evolve(full_hamiltonian(lat, weak), [wmodel.tau])
    strong_f = lifted_mode_fidelity(model, tr)
    print(f"fidelity at g=0.3*gap: {strong_f:.6f}; at g=1e-3: {lifted_mode_fidelity(wmodel, wtr):.9f}")
    assert strong_f < lifted_mode_fidelity(wmodel, wtr)


def test_weak_coupling_violated():
    lat, basis, _ = setup(Geometry(Kind.DIAMOND, 31))
    with pytest.raises(WeakCouplingViolated):
        effective_model(basis, EmitterConfig(g=basis.gap), lat)


def test_no_warning_in_regime():
    lat, basis, em = setup(Geometry(Kind.DOUBLE_COMB, 20))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        effective_model(basis, em, lat)


def test_missing_tau():
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 31))
    model = effective_model(basis, em, lat)
    tr = evolve(full_hamiltonian(lat, em), np.linspace(0, 2 * model.tau, 400))
    with pytest.raises(MissingTau):
        lifted_mode_fidelity(model, tr)
    with pytest.raises(MissingTau):
        photonic_state(tr, model.tau)


def test_detuned_emitter_stays_excited():
    lat, basis, _ = setup(Geometry(Kind.DIAMOND, 31))
    em = EmitterConfig(g=1e-3, omega_e=0.05)
    tr = evolve(full_hamiltonian(lat, em), [0.0, 2000.0])
    assert abs(tr.f_e[1]) ** 2 > 0.99


def test_trace_csv(tmp_path):
    lat, basis, em = setup(Geometry(Kind.DIAMOND, 5))
    model = effective_model(basis, em, lat)
    tr = evolve(full_hamiltonian(lat, em), time_grid(model.tau, 11))
    path = tmp_path / "trace.csv"
    write_trace_csv(tr, path, lat)
    rows = list(csv.reader(open(path)))
    assert rows[0][:4] == ["t", "re_fe", "im_fe", "pe"]
    assert rows[0][4:7] == ["p_a0", "p_b0", "p_c0"]
    assert len(rows) == 12 and len(rows[1]) == 4 + 15
    assert float(rows[1][1]) == 1.0
    mid = rows[6]
    assert float(mid[3]) < 1e-4
    assert sum(float(x) for x in mid[3:]) == pytest.approx(1.0, abs=1e-10)
