"""Numerical invariant suite run alongside every experiment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EmitterConfig, dark_state_count, evolve, full_hamiltonian, time_grid
from .lattice import Lattice, chiral_operator, field_hamiltonian
from .spectral import FlatBandBasis, Spectrum, eigendecompose, residuals


@dataclass
class Check:
    name: str
    value: float
    bound: float
    ok: bool
    skipped: bool = False

    def as_dict(self):
        return {"name": self.name, "value": self.value, "bound": self.bound,
                "ok": self.ok, "skipped": self.skipped}


def _le(name, value, bound):
    return Check(name, float(value), float(bound), bool(value <= bound))


def spectral_checks(h: np.ndarray, spectrum: Spectrum, label: str) -> list[Check]:
    res, orth = residuals(h, spectrum)
    return [
        _le(f"{label}.eigen_residual", res, 1e-10 * spectrum.norm),
        _le(f"{label}.orthonormality", orth, 1e-10),
    ]


def chirality_gap(spectrum: Spectrum) -> float:
    """``max_j |w_j + w_{S+1-j}|`` over the ascending spectrum."""
    w = spectrum.eigenvalues
    return float(np.abs(w + w[::-1]).max()) if len(w) else 0.0


def run_suite(lattice: Lattice, emitter: EmitterConfig, basis: FlatBandBasis,
              tau: float, samples: int = 64) -> list[Check]:
    """Residuals, chirality, sublattice counting, dark states and unitarity for one realization."""
    checks = []
    h_field = field_hamiltonian(lattice)
    sp_field = eigendecompose(h_field)
    checks += spectral_checks(h_field, sp_field, "field")

    chiral = chiral_operator(lattice)
    if chiral is None:
        checks.append(Check("field.chiral_spectrum", float("nan"), 1e-10, True, skipped=True))
    else:
        d = chiral.astype(float)
        checks.append(_le("field.chiral_operator", np.abs(d[:, None] * h_field * d[None, :] + h_field).max(), 0.0))
        checks.append(_le("field.chiral_spectrum", chirality_gap(sp_field), 1e-10 * max(1.0, sp_field.norm)))

    minority = np.abs(basis.vectors[lattice.minority]).max() if basis.dimension else 0.0
    checks.append(_le("flat_band.minority_amplitude", minority, 1e-8))
    maj, mino = int(lattice.majority.sum()), int(lattice.minority.sum())
    checks.append(Check("flat_band.dimension_vs_M_minus_m", basis.dimension, maj - mino,
                        basis.dimension >= maj - mino))

    h_full = full_hamiltonian(lattice, emitter)
    sp_full = eigendecompose(h_full)
    checks += spectral_checks(h_full, sp_full, "full")
    if chiral is not None and emitter.omega_e == 0:
        dark = dark_state_count(sp_full, 1e-8 * sp_full.norm)
        checks.append(Check("full.dark_states", dark, basis.dimension - 1, dark == basis.dimension - 1))
    else:
        checks.append(Check("full.dark_states", float("nan"), basis.dimension - 1, True, skipped=True))

    trace = evolve(h_full, time_grid(tau, samples), sp_full)
    checks.append(_le("trace.norm_drift", trace.norm_drift(), 1e-10))
    return checks
