"""Single-excitation emitter + lattice dynamics and the resonant effective model.

Basis convention for the full Hamiltonian: indices ``0..S-1`` are the
single-photon states ``|x>`` in lattice order, index ``S`` is the excited
emitter ``|e>``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BadSite, MissingTau, WeakCouplingViolated, ZeroWeight
from .lattice import Lattice, field_hamiltonian
from .spectral import FlatBandBasis, Spectrum, eigendecompose


@dataclass(frozen=True)
class EmitterConfig:
    g: float = 1e-3
    x0: tuple[int, str] = (0, "a")
    omega_e: float = 0.0

    def site(self, lattice: Lattice) -> int:
        cell, label = self.x0
        try:
            return lattice.index(cell, label)
        except IndexError as exc:
            raise BadSite(str(exc)) from None


@dataclass(frozen=True, eq=False)
class WavefunctionTrace:
    times: np.ndarray
    f_e: np.ndarray  # (T,)
    f_x: np.ndarray  # (T, S)

    @property
    def emitter_population(self) -> np.ndarray:
        return np.abs(self.f_e) ** 2

    def norm_drift(self) -> float:
        total = np.abs(self.f_e) ** 2 + (np.abs(self.f_x) ** 2).sum(axis=1)
        return float(np.abs(total - 1.0).max())


@dataclass(frozen=True, eq=False)
class EffectiveModel:
    g_k: np.ndarray
    lam: float  # Rabi frequency |lambda|
    lifted_mode: np.ndarray
    gap: float
    g: float

    @property
    def tau(self) -> float:
        return math.pi / (2.0 * self.lam)

    @property
    def projector(self) -> np.ndarray:
        return np.outer(self.lifted_mode, self.lifted_mode)


def full_hamiltonian(lattice: Lattice, emitter: EmitterConfig) -> np.ndarray:
    """``(S+1) x (S+1)`` Jaynes-Cummings Hamiltonian in the one-excitation sector."""
    x0 = emitter.site(lattice)
    s = lattice.n_sites
    h = np.zeros((s + 1, s + 1))
    h[:s, :s] = field_hamiltonian(lattice)
    h[s, s] = emitter.omega_e
    h[s, x0] = h[x0, s] = emitter.g
    return h


def _initial_overlaps(spectrum: Spectrum) -> np.ndarray:
    # <j|e> with |e> the last basis state
    return spectrum.eigenvectors[-1, :]


def amplitudes(spectrum: Spectrum, times) -> np.ndarray:
    """``<n|exp(-iHt)|e>`` for every basis state ``n``; shape ``(T, S+1)``."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    v = spectrum.eigenvectors
    phases = np.exp(-1j * np.outer(times, spectrum.eigenvalues))
    return (phases * _initial_overlaps(spectrum)) @ v.T


def evolve(h: np.ndarray, times, spectrum: Spectrum | None = None) -> WavefunctionTrace:
    """Exact evolution of ``|e>`` by spectral resolution (no time stepping)."""
    if spectrum is None:
        spectrum = eigendecompose(h)
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    amp = amplitudes(spectrum, times)
    return WavefunctionTrace(times=times, f_e=amp[:, -1], f_x=amp[:, :-1])


def time_grid(tau: float, samples: int = 401, periods: float = 2.0) -> np.ndarray:
    """Uniform grid on ``[0, periods * tau]``; with the defaults the midpoint is ``tau``."""
    grid = np.linspace(0.0, periods * tau, samples)
    # snap the sample nearest tau onto it so lifted_mode_fidelity can find it
    k = int(np.argmin(np.abs(grid - tau)))
    if abs(grid[k] - tau) <= 1e-9 * tau:
        grid[k] = tau
    return grid


def effective_model(basis: FlatBandBasis, emitter: EmitterConfig, lattice: Lattice) -> EffectiveModel:
    """Couplings to the flat band, Rabi frequency and lifted mode.

    ``g_k = g <x0|psi_k>`` over the zero-mode basis, ``|lambda| = sqrt(sum g_k^2)``
    and ``|psi~> = sum_k g_k |psi_k> / |lambda|``. All three are independent
    of how the degenerate basis is chosen.

    Raises
    ------
    ZeroWeight
        The flat band has no amplitude on ``x0``.
    WeakCouplingViolated
        ``g >= gap``; a warning is emitted already for ``g/gap > 1e-2``.
    """
    x0 = emitter.site(lattice)
    g = emitter.g
    if g >= basis.gap:
        raise WeakCouplingViolated(g, basis.gap)
    if g / basis.gap > 1e-2:
        warnings.warn(
            f"g/gap = {g / basis.gap:.3g} exceeds 1e-2; first-order description degrades",
            RuntimeWarning,
            stacklevel=2,
        )
    g_k = g * basis.vectors[x0, :]
    if np.all(np.abs(g_k) <= 1e-12 * g):
        raise ZeroWeight(f"flat band has no weight on site {emitter.x0}")
    lam = math.sqrt(float(g_k @ g_k))
    mode = basis.vectors @ g_k / lam
    mode /= np.linalg.norm(mode)
    return EffectiveModel(g_k=g_k, lam=lam, lifted_mode=mode, gap=basis.gap, g=g)


def photonic_state(trace: WavefunctionTrace, t: float, rtol: float = 1e-9) -> np.ndarray:
    """Photonic amplitudes at the sample ``t`` (relative match within ``rtol``)."""
    hit = np.flatnonzero(np.abs(trace.times - t) <= rtol * max(abs(t), 1e-300))
    if hit.size == 0:
        raise MissingTau(f"trace has no sample at t={t:.6g}")
    return trace.f_x[hit[0]]


def lifted_mode_fidelity(model: EffectiveModel, trace: WavefunctionTrace) -> float:
    """``|<psi~|phi(tau)>|^2`` with ``phi`` the normalised photonic part at ``tau``."""
    phi = photonic_state(trace, model.tau)
    phi = phi / np.linalg.norm(phi)
    return float(abs(np.vdot(model.lifted_mode, phi)) ** 2)


def first_emission_time(spectrum: Spectrum, tau: float) -> float:
    """Numerical minimum of ``|f_e(t)|^2`` near ``tau`` (diagnostic only)."""

    def pe(t):
        return float(abs(amplitudes(spectrum, t)[0, -1]) ** 2)

    res = minimize_scalar(pe, bounds=(0.5 * tau, 1.5 * tau), method="bounded",
                          options={"xatol": 1e-10 * tau})
    return float(res.x)


def dark_state_count(spectrum: Spectrum, tol: float, weight_tol: float = 1e-8) -> int:
    """Zero-energy eigenstates of the full Hamiltonian with no emitter amplitude."""
    zero = np.abs(spectrum.eigenvalues) <= tol
    weights = np.abs(spectrum.eigenvectors[-1, zero])
    return int(np.count_nonzero(weights <= weight_tol))


def write_trace_csv(trace: WavefunctionTrace, path, lattice: Lattice | None = None) -> None:
    """CSV: ``t, re_fe, im_fe, pe`` then one population column per site."""
    s = trace.f_x.shape[1]
    if lattice is not None:
        names = [f"p_{lab}{n}" for n, lab in lattice.sites]
    else:
        names = [f"p_{x}" for x in range(s)]
    pops = np.abs(trace.f_x) ** 2
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["t", "re_fe", "im_fe", "pe", *names]) + "\n")
        for k, t in enumerate(trace.times):
            fe = trace.f_e[k]
            row = [t, fe.real, fe.imag, abs(fe) ** 2, *pops[k]]
            fh.write(",".join(f"{val:.12g}" for val in row) + "\n")
