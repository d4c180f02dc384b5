"""Dense eigendecomposition, zero-energy subspace extraction and analytic CLSs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import BadParams, EmptyBand, GapCollapse, NoConvergence, UnsupportedDisorder
from .lattice import Geometry, Kind, Lattice, build_lattice, field_hamiltonian, site_index

MAX_SWEEPS = 60


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    norm: float  # infinity norm of the decomposed matrix

    def __len__(self):
        return len(self.eigenvalues)


@dataclass(frozen=True, eq=False)
class FlatBandBasis:
    vectors: np.ndarray  # (S, dimension), orthonormal columns
    gap: float
    tol: float

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


def inf_norm(h: np.ndarray) -> float:
    return float(np.abs(h).sum(axis=1).max()) if h.size else 0.0


def eigendecompose(h: np.ndarray, kernel=None) -> Spectrum:
    """Full eigendecomposition of a real symmetric matrix.

    Householder tridiagonalisation followed by implicit-shift QL; eigenvalues
    come out ascending with orthonormal eigenvectors in the columns. ``kernel``
    overrides the backend chosen at import (see ``chiralqed._backend``).

    Raises
    ------
    NoConvergence
        If any eigenvalue needs more than ``MAX_SWEEPS`` QL sweeps.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    kernel = kernel or _backend.eigh_kernel
    w, v, status, residual = kernel(h, MAX_SWEEPS)
    if status != 0:
        raise NoConvergence(h.shape[0], residual, MAX_SWEEPS)
    w = np.asarray(w)
    v = np.asarray(v)
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(eigenvalues=w, eigenvectors=v, norm=inf_norm(h))


def residuals(h: np.ndarray, spectrum: Spectrum) -> tuple[float, float]:
    """``(max |H v - w v|, max |V^T V - 1|)`` for a decomposition of ``h``."""
    v, w = spectrum.eigenvectors, spectrum.eigenvalues
    res = float(np.abs(h @ v - v * w).max()) if len(w) else 0.0
    orth = float(np.abs(v.T @ v - np.eye(len(w))).max()) if len(w) else 0.0
    return res, orth


def default_tol(spectrum: Spectrum) -> float:
    return 1e-8 * spectrum.norm


def modified_gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """Orthonormalise columns left to right; columns that vanish are dropped."""
    q = np.array(vectors, dtype=np.float64, copy=True)
    kept = []
    for j in range(q.shape[1]):
        col = q[:, j]
        for k in kept:
            col -= (q[:, k] @ col) * q[:, k]
        nrm = np.linalg.norm(col)
        if nrm > 1e-12:
            q[:, j] = col / nrm
            kept.append(j)
    return q[:, kept]


def flat_band_basis(spectrum: Spectrum, lattice: Lattice | None = None, tol: float | None = None) -> FlatBandBasis:
    """Orthonormal basis of the zero-energy eigenspace and the gap above it.

    Eigenvectors with ``|w| <= tol`` (default ``1e-8 * ||H||_inf``) are kept
    in ascending eigenvalue order and re-orthonormalised. The gap is the
    smallest ``|w|`` among the remaining eigenvalues.

    Raises
    ------
    EmptyBand
        No eigenvalue within ``tol``.
    GapCollapse
        Gap ``<= 10 * tol``.
    """
    if tol is None:
        tol = default_tol(spectrum)
    w = spectrum.eigenvalues
    if lattice is not None and len(w) != lattice.n_sites:
        raise ValueError("spectrum and lattice sizes differ")
    zero = np.abs(w) <= tol
    if not zero.any():
        raise EmptyBand(f"no eigenvalue within {tol:.3e} of zero")
    rest = np.abs(w[~zero])
    gap = float(rest.min()) if rest.size else float("inf")
    if gap <= 10 * tol:
        raise GapCollapse(gap, tol)
    vectors = modified_gram_schmidt(spectrum.eigenvectors[:, zero])
    vectors.setflags(write=False)
    return FlatBandBasis(vectors=vectors, gap=gap, tol=tol)


def sublattice_counts(lattice: Lattice) -> tuple[int, int]:
    """``(M, m)``: majority and minority site counts."""
    maj = int(lattice.majority.sum())
    return maj, lattice.n_sites - maj


def analytic_cls(geometry: Geometry, cell: int, couplings: dict | None = None) -> np.ndarray:
    """Normalised compact localized state of ``cell`` (wrapped periodically).

    For the double comb, ``couplings`` may supply the realized ``v1``/``v2`` of
    that cell (see :meth:`Lattice.base_couplings`), so ``r_n = v2/v1`` is
    per cell. Diamond and stub states only exist in closed form for the clean
    lattice; passing couplings for them raises :class:`UnsupportedDisorder`.
    """
    n = geometry.cells
    psi = np.zeros(geometry.n_sites)
    if geometry.kind is Kind.DOUBLE_COMB:
        c = couplings or {}
        r = c.get("v2", geometry.v2) / c.get("v1", geometry.v1)
        psi[site_index(cell, "a", n)] = r
        psi[site_index(cell, "c", n)] = -1.0
    elif couplings:
        raise UnsupportedDisorder(f"no closed-form CLS for disordered {geometry.kind.value}")
    elif geometry.kind is Kind.DIAMOND:
        psi[site_index(cell, "a", n)] = 1.0
        psi[site_index(cell, "c", n)] = -1.0
    else:
        if not geometry.periodic and cell == n - 1:
            raise BadParams("the last stub cell has no CLS with open boundaries")
        psi[site_index(cell, "a", n)] += 1.0
        psi[site_index(cell + 1, "a", n)] += 1.0
        psi[site_index(cell, "c", n)] = -geometry.eta
    return psi / np.linalg.norm(psi)


def cls_overlap(geometry: Geometry, cell: int = 0) -> float:
    """``<psi_n|psi_{n+1}>`` between neighbouring analytic CLSs."""
    return float(analytic_cls(geometry, cell) @ analytic_cls(geometry, cell + 1))


def clean_flat_band(geometry: Geometry) -> FlatBandBasis:
    """Convenience: flat band of the disorder-free lattice."""
    lattice = build_lattice(geometry)
    return flat_band_basis(eigendecompose(field_hamiltonian(lattice)), lattice)


def dump_spectrum(spectrum: Spectrum) -> str:
    return "".join(f"{w:.17g}\n" for w in spectrum.eigenvalues)
