"""Command-line front end.

    chiralqed run [CONFIG] [--preset NAME] [--seed U64] [--out DIR]
                  [--dump-lattice] [--dump-spectrum] [--threads N]
                  [--realizations R]

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 I/O failure. On
failure a one-line JSON error record goes to stderr and no output files are
left behind.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
import time
from dataclasses import replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import _backend
from .checks import run_suite
from .config import ExperimentConfig, format_x0, parse_config, render
from .dynamics import (EmitterConfig, effective_model, evolve, first_emission_time,
                       full_hamiltonian, lifted_mode_fidelity, photonic_state, time_grid,
                       write_trace_csv)
from .errors import ConfigError, NumericError, ChiralQEDError
from .lattice import (DisorderSpec, Kind, apply_disorder, build_lattice, dump_lattice,
                      field_hamiltonian)
from .observables import (EnsembleSpec, GridPoint, participation_ratio, run_ensemble,
                          write_ensemble_csv, write_profile_csv)
from .spectral import analytic_cls, dump_spectrum, eigendecompose, flat_band_basis

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
REFERENCE_REALIZATIONS = {"fig2": 10_000, "fig3a": 1_000}


class InvariantFailure(NumericError):
    pass


def code_version() -> str:
    try:
        return metadata.version("chiralqed")
    except metadata.PackageNotFoundError:
        return "unknown"


def _emitter(cfg: ExperimentConfig, x0=None) -> EmitterConfig:
    return EmitterConfig(g=cfg.g, x0=x0 or cfg.x0, omega_e=cfg.omega_e)


def _disorder(cfg: ExperimentConfig, width: float, realization: int = 0) -> DisorderSpec:
    return DisorderSpec(width=width, seed=cfg.seed, realization=realization, onsite=cfg.onsite_W,
                        allow_sign_change=cfg.allow_sign_change)


def _write_dumps(cfg, lattice, stage: Path, files: list, suffix: str = ""):
    if cfg.dump_lattice:
        (stage / f"lattice{suffix}.txt").write_text(dump_lattice(lattice))
        files.append(f"lattice{suffix}.txt")
    if cfg.dump_spectrum:
        sp = eigendecompose(field_hamiltonian(lattice))
        (stage / f"spectrum{suffix}.txt").write_text(dump_spectrum(sp))
        files.append(f"spectrum{suffix}.txt")


def _suite(lattice, emitter, basis, tau):
    checks = run_suite(lattice, emitter, basis, tau)
    failed = [c.name for c in checks if not c.ok]
    return [c.as_dict() for c in checks], failed


def run_trace(cfg: ExperimentConfig, stage: Path) -> dict:
    geometry = cfg.geometry_obj()
    lattice = apply_disorder(build_lattice(geometry), _disorder(cfg, cfg.width))
    emitter = _emitter(cfg)
    basis = flat_band_basis(eigendecompose(field_hamiltonian(lattice)), lattice)
    model = effective_model(basis, emitter, lattice)
    h = full_hamiltonian(lattice, emitter)
    spectrum = eigendecompose(h)
    trace = evolve(h, time_grid(model.tau, cfg.samples, cfg.periods), spectrum)
    files = ["trace.csv", "lifted_mode.csv"]
    write_trace_csv(trace, stage / "trace.csv", lattice)

    phi = photonic_state(evolve(h, [model.tau], spectrum), model.tau)
    with open(stage / "lifted_mode.csv", "w", encoding="utf-8") as fh:
        fh.write("site,cell,label,psi_tilde,re_fx_tau,im_fx_tau,pop_tau\n")
        for x, (n, lab) in enumerate(lattice.sites):
            fh.write(f"{x},{n},{lab},{model.lifted_mode[x]:.12g},{phi[x].real:.12g},"
                     f"{phi[x].imag:.12g},{abs(phi[x]) ** 2:.12g}\n")
    _write_dumps(cfg, lattice, stage, files)
    if cfg.dump_spectrum:
        (stage / "spectrum_full.txt").write_text(dump_spectrum(spectrum))
        files.append("spectrum_full.txt")

    results = {
        "rabi_frequency": model.lam,
        "tau": model.tau,
        "gap": basis.gap,
        "g_over_gap": cfg.g / basis.gap,
        "flat_band_dimension": basis.dimension,
        "pe_at_tau": float(abs(evolve(h, [model.tau], spectrum).f_e[0]) ** 2),
        "first_emission_time": first_emission_time(spectrum, model.tau),
        "lifted_mode_fidelity": lifted_mode_fidelity(model, evolve(h, [model.tau], spectrum)),
        "participation_ratio": participation_ratio(model.lifted_mode),
    }
    if geometry.kind is Kind.DOUBLE_COMB:
        cell = emitter.x0[0]
        cls = analytic_cls(geometry, cell, lattice.base_couplings(cell))
        results["cls_fidelity"] = float(abs(cls @ model.lifted_mode) ** 2)
    invariants, failed = _suite(lattice, emitter, basis, model.tau)
    return {"files": files, "results": results, "invariants": invariants, "failed": failed}


def run_ensemble_task(cfg: ExperimentConfig, stage: Path) -> dict:
    geometry = cfg.geometry_obj()
    grid = tuple(GridPoint(val, x0) for val in cfg.values for x0 in cfg.x0s)
    widths = cfg.W if cfg.sweep == "eta" else (None,)
    files, results, invariants, failed = [], [], [], []
    for width in widths:
        spec = EnsembleSpec(realizations=cfg.realizations, master_seed=cfg.seed, grid=grid,
                            param=cfg.sweep, width=width or 0.0,
                            allow_sign_change=cfg.allow_sign_change,
                            use_dynamics=cfg.use_dynamics)
        res = run_ensemble(geometry, _emitter(cfg), spec, threads=cfg.threads)
        suffix = "" if len(widths) == 1 else f"_W{width:g}"
        write_ensemble_csv(res, stage / f"ensemble{suffix}.csv")
        write_profile_csv(res, stage / f"profiles{suffix}.csv")
        files += [f"ensemble{suffix}.csv", f"profiles{suffix}.csv"]
        for p in res.points:
            results.append({"param": cfg.sweep, "value": p.value, "x0": format_x0(p.x0),
                            "W": width if width is not None else p.value,
                            "mean_xi": p.mean_xi, "stderr_xi": p.stderr_xi, "count": p.count,
                            "excluded": p.excluded, "log_slopes": list(p.slopes)})

        # invariant suite on realization 0 of every grid point
        for point in grid:
            geom = geometry
            w = point.value
            if cfg.sweep == "eta":
                geom = replace(geometry, v=point.value * geometry.J)
                w = width
            lattice = apply_disorder(build_lattice(geom), _disorder(cfg, w))
            emitter = _emitter(cfg, point.x0)
            try:
                basis = flat_band_basis(eigendecompose(field_hamiltonian(lattice)), lattice)
                model = effective_model(basis, emitter, lattice)
            except NumericError:
                continue
            checks, bad = _suite(lattice, emitter, basis, model.tau)
            tag = f"{cfg.sweep}={point.value:g},x0={format_x0(point.x0)}" + (suffix and f",{suffix[1:]}")
            invariants.append({"point": tag, "checks": checks})
            failed += [f"{tag}:{name}" for name in bad]
    first = grid[0]
    geom0 = replace(geometry, v=first.value * geometry.J) if cfg.sweep == "eta" else geometry
    _write_dumps(cfg, apply_disorder(build_lattice(geom0),
                                     _disorder(cfg, widths[0] if cfg.sweep == "eta" else first.value)),
                 stage, files)
    return {"files": files, "results": results, "invariants": invariants, "failed": failed}


def run(cfg: ExperimentConfig) -> Path:
    """Execute ``cfg`` and move all artifacts into ``cfg.out``; returns that path.

    Artifacts are staged in a temporary directory first, so a failure leaves
    nothing behind in the output directory.
    """
    started = time.time()
    out = Path(cfg.out)
    stage = Path(tempfile.mkdtemp(prefix="chiralqed-"))
    moved: list[Path] = []
    try:
        task = run_trace if cfg.task == "trace" else run_ensemble_task
        report = task(cfg, stage)
        if report["failed"]:
            raise InvariantFailure("invariant checks failed: " + ", ".join(report["failed"]))
        manifest = {
            "code_version": code_version(),
            "eigensolver_backend": _backend.BACKEND,
            "created_unix": started,
            "elapsed_s": time.time() - started,
            "preset": cfg.preset or None,
            "config": render(cfg),
            "geometry": {"kind": cfg.kind.value, "cells": cfg.cells, "J": cfg.J, "v1": cfg.v1,
                         "v2": cfg.v2, "v": cfg.v, "boundary": cfg.boundary},
            "emitter": {"g": cfg.g, "omega_e": cfg.omega_e, "x0": format_x0(cfg.x0)},
            "seeds": {"master_seed": cfg.seed,
                      "generator": "Philox4x64-10, key=(master_seed, realization index)",
                      "realizations": cfg.realizations},
            "tolerances": {"zero_mode": "1e-8*||H||_inf", "gap_collapse": "10*zero_mode_tol",
                           "eigen_residual": "1e-10*||H||_inf", "norm_drift": 1e-10,
                           "minority_amplitude": 1e-8},
            "deviations": [],
            "files": report["files"] + ["manifest.json"],
            "results": report["results"],
            "invariants": report["invariants"],
        }
        reference_r = REFERENCE_REALIZATIONS.get(cfg.preset)
        if reference_r and cfg.realizations < reference_r:
            manifest["deviations"].append(
                f"realizations={cfg.realizations} (reference runs average {reference_r})")
        (stage / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default))

        out.mkdir(parents=True, exist_ok=True)
        for name in manifest["files"]:
            target = out / name
            shutil.move(str(stage / name), str(target))
            moved.append(target)
        return out
    except BaseException:
        for path in moved:
            path.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _error(code: int, exc: BaseException) -> int:
    record = {"status": "error", "exit_code": code, "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chiralqed", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment config or preset")
    p.add_argument("config", nargs="?", help="key=value config file ('-' for stdin)")
    p.add_argument("--preset", choices=["fig1", "fig2", "fig3a", "fig3c"])
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-lattice", action="store_true")
    p.add_argument("--dump-spectrum", action="store_true")
    p.add_argument("--threads", type=int, help="worker threads, 0 = one per CPU")
    p.add_argument("--realizations", type=int, help="disorder realizations per grid point")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config == "-":
            text = sys.stdin.read()
        elif args.config:
            text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _error(EXIT_IO, exc)
    if args.preset:
        text = f"preset={args.preset}\n" + text
    if not text.strip():
        return _error(EXIT_CONFIG, ConfigError("no config given; pass a file or --preset"))
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "threads": args.threads,
        "realizations": args.realizations,
        "dump_lattice": "true" if args.dump_lattice else None,
        "dump_spectrum": "true" if args.dump_spectrum else None,
    }
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    try:
        out = run(cfg)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc)
    except (NumericError, FloatingPointError) as exc:
        return _error(EXIT_NUMERIC, exc)
    except OSError as exc:
        return _error(EXIT_IO, exc)
    except ChiralQEDError as exc:
        return _error(EXIT_NUMERIC, exc)
    print(json.dumps({"status": "ok", "out": str(out)}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
