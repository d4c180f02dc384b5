"""Localization observables and deterministic disorder ensembles."""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EmitterConfig, effective_model, evolve, full_hamiltonian, photonic_state
from .errors import AllRealizationsFailed, GapCollapse, NotNormalized, WeakCouplingViolated
from .lattice import DisorderSpec, Geometry, Kind, apply_disorder, build_lattice, field_hamiltonian
from .spectral import eigendecompose, flat_band_basis


def participation_ratio(state) -> float:
    """``xi = 1 / sum_x |psi_x|^4`` for a unit-norm state."""
    state = np.asarray(state)
    p = np.abs(state) ** 2
    norm = float(p.sum())
    if abs(norm - 1.0) > 1e-8:
        raise NotNormalized(f"state norm^2 is {norm:.12g}")
    return float(1.0 / np.sum(p * p))


def population_profile(state, majority: np.ndarray | None = None) -> np.ndarray:
    """Per-site ``|psi_x|^2``; pass a majority mask to keep only a/c sites."""
    p = np.abs(np.asarray(state)) ** 2
    return p if majority is None else p[majority]


def localization_slopes(profile: np.ndarray, cells: int, x0_cell: int = 0, skip: int = 2):
    """Least-squares slope of ``log(population)`` against cell distance.

    Works on majority sites only, per side of ``x0_cell`` on the periodic
    chain, skipping the ``skip`` cells nearest the emitter on each side (the
    emitter cell counts as the first). Returns ``(left, right)``; negative
    slopes mean decay away from the emitter.
    """
    profile = np.asarray(profile).reshape(cells, 3)
    per_cell = profile[:, 0] + profile[:, 2]
    half = cells // 2
    slopes = []
    for sign in (-1, 1):
        dist = np.arange(skip, half + 1)
        vals = per_cell[(x0_cell + sign * dist) % cells]
        ok = vals > 0
        if ok.sum() < 2:
            slopes.append(float("nan"))
            continue
        slopes.append(float(np.polyfit(dist[ok], np.log(vals[ok]), 1)[0]))
    return tuple(slopes)


@dataclass(frozen=True)
class GridPoint:
    value: float  # disorder width W, or eta for an eta sweep
    x0: tuple[int, str] = (0, "a")


@dataclass(frozen=True)
class EnsembleSpec:
    """What to average over.

    ``param`` is ``"W"`` (grid values are disorder widths) or ``"eta"`` (grid
    values set the stub coupling ``v = eta * J``, with disorder ``width``).
    """

    realizations: int
    master_seed: int
    grid: tuple[GridPoint, ...]
    param: str = "W"
    width: float = 0.0
    allow_sign_change: bool = False
    use_dynamics: bool = False

    def check(self) -> None:
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if not self.grid:
            raise ValueError("empty parameter grid")
        if self.param not in ("W", "eta"):
            raise ValueError(f"unknown sweep parameter {self.param!r}")


@dataclass
class PointResult:
    value: float
    x0: tuple[int, str]
    mean_xi: float
    stderr_xi: float
    std_xi: float
    mean_profile: np.ndarray
    count: int
    excluded: int
    slopes: tuple[float, float] = (float("nan"), float("nan"))


@dataclass
class EnsembleResult:
    param: str
    master_seed: int
    realizations: int
    points: list[PointResult] = field(default_factory=list)

    def xi_table(self):
        return [(p.value, p.x0, p.mean_xi, p.stderr_xi) for p in self.points]


def _point_setup(geometry: Geometry, spec: EnsembleSpec, point: GridPoint):
    if spec.param == "eta":
        if geometry.kind is not Kind.STUB:
            raise ValueError("eta sweeps need the stub geometry")
        geom = Geometry(Kind.STUB, geometry.cells, J=geometry.J, v=point.value * geometry.J,
                        periodic=geometry.periodic)
        width = spec.width
    else:
        geom = geometry
        width = point.value
    return geom, width


def realization(geometry: Geometry, emitter: EmitterConfig, width: float, seed: int, index: int,
                allow_sign_change: bool = False, use_dynamics: bool = False):
    """One pipeline pass: build, disorder, diagonalise, lift. Returns ``(xi, profile)``.

    Returns ``None`` when the realization must be excluded (gap collapse or
    ``g`` above the gap).
    """
    lattice = apply_disorder(
        build_lattice(geometry),
        DisorderSpec(width=width, seed=seed, realization=index, allow_sign_change=allow_sign_change),
    )
    try:
        basis = flat_band_basis(eigendecompose(field_hamiltonian(lattice)), lattice)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = effective_model(basis, emitter, lattice)
    except (GapCollapse, WeakCouplingViolated):
        return None
    state = model.lifted_mode
    if use_dynamics:
        h = full_hamiltonian(lattice, emitter)
        phi = photonic_state(evolve(h, [model.tau]), model.tau)
        state = phi / np.linalg.norm(phi)
    return participation_ratio(state), population_profile(state)


def _shifted_stats(values: list[float]) -> tuple[float, float]:
    # exact summation around the first sample: order independent, and zero
    # spread yields exactly zero variance
    ref = values[0]
    dev = [v - ref for v in values]
    n = len(values)
    mean_dev = math.fsum(dev) / n
    if n < 2:
        return ref + mean_dev, 0.0
    var = (math.fsum(d * d for d in dev) - n * mean_dev * mean_dev) / (n - 1)
    return ref + mean_dev, math.sqrt(max(var, 0.0))


def run_ensemble(geometry: Geometry, emitter: EmitterConfig, spec: EnsembleSpec,
                 threads: int = 1) -> EnsembleResult:
    """Disorder-average the participation ratio and population profile of the lifted mode.

    Realization ``i`` at every grid point draws from the stream keyed by
    ``(master_seed, i)``. Work is spread over ``threads`` workers (0 = one
    per CPU); results are reduced in realization order with exact sums, so
    the output does not depend on the worker count.
    """
    spec.check()
    tasks = []
    for p_idx, point in enumerate(spec.grid):
        geom, width = _point_setup(geometry, spec, point)
        geom.check()
        em = EmitterConfig(g=emitter.g, x0=point.x0, omega_e=emitter.omega_e)
        for i in range(spec.realizations):
            tasks.append((p_idx, geom, em, width, i))

    def work(task):
        _, geom, em, width, i = task
        return realization(geom, em, width, spec.master_seed, i,
                           spec.allow_sign_change, spec.use_dynamics)

    if threads == 1:
        outputs = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as pool:
            outputs = list(pool.map(work, tasks))

    result = EnsembleResult(param=spec.param, master_seed=spec.master_seed,
                            realizations=spec.realizations)
    for p_idx, point in enumerate(spec.grid):
        rows = [out for t, out in zip(tasks, outputs) if t[0] == p_idx]
        good = [r for r in rows if r is not None]
        if not good:
            raise AllRealizationsFailed(f"every realization failed at {spec.param}={point.value}")
        xi_mean, xi_std = _shifted_stats([r[0] for r in good])
        profiles = np.stack([r[1] for r in good])
        mean_profile = np.array([math.fsum(col) for col in profiles.T]) / len(good)
        geom, _ = _point_setup(geometry, spec, point)
        result.points.append(PointResult(
            value=point.value,
            x0=point.x0,
            mean_xi=xi_mean,
            stderr_xi=xi_std / math.sqrt(len(good)),
            std_xi=xi_std,
            mean_profile=mean_profile,
            count=len(good),
            excluded=len(rows) - len(good),
            slopes=localization_slopes(mean_profile, geom.cells, point.x0[0]),
        ))
    return result


def format_x0(x0) -> str:
    return f"{x0[1]}{x0[0]}"


def write_ensemble_csv(result: EnsembleResult, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "x0", "mean_xi", "stderr_xi", "excluded", "R"])
        for p in result.points:
            w.writerow([f"{p.value:.12g}", format_x0(p.x0), f"{p.mean_xi:.12g}",
                        f"{p.stderr_xi:.12g}", p.excluded, result.realizations])


def write_profile_csv(result: EnsembleResult, path) -> None:
    """Companion file: one row per site, one mean-population column per grid point."""
    if not result.points:
        return
    n_sites = len(result.points[0].mean_profile)
    cols = [f"{result.param}={p.value:.6g}|x0={format_x0(p.x0)}" for p in result.points]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["site", "cell", "label", *cols])
        for x in range(n_sites):
            w.writerow([x, x // 3, "abc"[x % 3],
                        *(f"{p.mean_profile[x]:.12g}" for p in result.points)])
