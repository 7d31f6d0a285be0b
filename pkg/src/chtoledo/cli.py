"""Command-line experiment runner: JSON reports, CSV tables, fixed exit codes."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Any, Callable, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import __version__
from .curvature_algebra import LEMMA_TOL, CurvatureError, verify_lemmas
from .harmonic_solver import (
    SolverConfig,
    SolverError,
    cusp_energy_profile,
    discrete_energy,
    minimize,
    model_map,
    retraction_energy,
)
from .hermitian_core import HermitianError, HermitianForm
from .isometry_toolkit import classify
from .mesh import build_mesh
from .serialization import dumps, matrix_from_json
from .surface_groups import (
    SurfaceRep,
    bent_rep,
    build_fuchsian,
    deformed_fuchsian_rep,
    double,
    fuchsian_rep,
    random_rep,
    upper_triangular_rep,
)
from .toledo import TOL_REPORT, MilnorWoodViolation, milnor_wood_report, tau

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ASSERT = 2

COMMANDS = ("classify", "tau", "harmonic", "verify-lemmas", "cusp-energy", "fuzz-milnor-wood", "double")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SurfaceSpec(_Strict):
    genus: int = 1
    punctures: int = 1


class RepSpec(_Strict):
    kind: Literal["fuchsian", "deformed", "bent", "random", "upper-triangular", "custom"] = "fuchsian"
    n: int = Field(1, ge=1)
    stretch: float = 1.2
    angle: float = 0.3
    generators: list[Any] | None = None
    file: str | None = None


class SolverSpec(_Strict):
    solve: bool = True
    tol: float = 1e-8
    max_sweeps: int = Field(10000, ge=1)
    colorize: bool = True
    accelerate: bool = True


class FuzzSpec(_Strict):
    count: int = Field(100, ge=1)
    n: int = Field(2, ge=1)
    surfaces: list[tuple[int, int]] = [(0, 3), (1, 1)]
    max_sweeps: int = Field(20, ge=0)
    scale: float = 1.0


class ExperimentConfig(_Strict):
    command: Literal["classify", "tau", "harmonic", "verify-lemmas", "cusp-energy", "fuzz-milnor-wood", "double"]
    surface: SurfaceSpec = SurfaceSpec()
    resolution: float = Field(0.25, gt=0)
    truncation: float = Field(3.0, gt=0)
    rep: RepSpec = RepSpec()
    solver: SolverSpec = SolverSpec()
    fuzz: FuzzSpec = FuzzSpec()
    matrix: list[Any] | None = None
    matrix_file: str | None = None
    m: int = 2
    trials: int = Field(100, ge=1)
    seed: int = 0
    output: str | None = None
    csv: str | None = None

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v: int) -> int:
        if not 0 <= v < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v


class InputError(Exception):
    pass


class AssertionFailure(Exception):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- config assembly


def _set_path(d: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


FLAG_KEYS = {
    "genus": "surface.genus",
    "punctures": "surface.punctures",
    "resolution": "resolution",
    "truncation": "truncation",
    "rep_kind": "rep.kind",
    "n": "rep.n",
    "stretch": "rep.stretch",
    "angle": "rep.angle",
    "rep_file": "rep.file",
    "solve": "solver.solve",
    "tol": "solver.tol",
    "max_sweeps": "solver.max_sweeps",
    "colorize": "solver.colorize",
    "accelerate": "solver.accelerate",
    "count": "fuzz.count",
    "fuzz_n": "fuzz.n",
    "fuzz_sweeps": "fuzz.max_sweeps",
    "matrix_file": "matrix_file",
    "m": "m",
    "trials": "trials",
    "seed": "seed",
    "output": "output",
    "csv": "csv",
}


def load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InputError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError("config must be a mapping at the top level")
    return data


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    data = load_config_file(args.config) if args.config else {}
    data["command"] = args.command
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            _set_path(data, key, val)
    if getattr(args, "surfaces", None):
        _set_path(data, "fuzz.surfaces", [tuple(int(x) for x in s.split(",")) for s in args.surfaces])
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise InputError(str(exc)) from exc


# ---------------------------------------------------------------- builders


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path}: {exc}") from exc


def build_rep(cfg: ExperimentConfig, rng: np.random.Generator) -> SurfaceRep:
    spec = cfg.rep
    model = build_fuchsian(cfg.surface.genus, cfg.surface.punctures)
    if spec.file:
        data = _read_json(spec.file)
        gens = data.get("generators") if isinstance(data, dict) else data
        if gens is None:
            raise InputError("rep file has no 'generators'")
        mats = [matrix_from_json(g) for g in gens]
        return SurfaceRep(model, mats[0].shape[0] - 1, mats, "file")
    if spec.kind == "custom":
        if not spec.generators:
            raise InputError("rep.kind = custom needs rep.generators")
        mats = [matrix_from_json(g) for g in spec.generators]
        return SurfaceRep(model, mats[0].shape[0] - 1, mats, "custom")
    if spec.kind == "fuchsian":
        return fuchsian_rep(model, spec.n)
    if spec.kind == "deformed":
        return deformed_fuchsian_rep(model, spec.stretch, spec.n)
    if spec.kind == "bent":
        return bent_rep(model, spec.angle, max(spec.n, 2))
    if spec.kind == "random":
        return random_rep(model, spec.n, rng)
    return upper_triangular_rep(model, max(spec.n, 1), rng)


def solver_config(cfg: ExperimentConfig) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(tol=s.tol, max_sweeps=s.max_sweeps, colorize=s.colorize, accelerate=s.accelerate)


def provenance(cfg: ExperimentConfig) -> dict:
    return {"version": __version__, "seed": cfg.seed, "config": cfg.model_dump(mode="json")}


def _write_csv(path: str | None, header: list[str], rows: list[list[Any]]) -> None:
    if not path:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


# ---------------------------------------------------------------- commands


def cmd_classify(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    if cfg.matrix is not None or cfg.matrix_file:
        raw = cfg.matrix if cfg.matrix is not None else _read_json(cfg.matrix_file)
        if isinstance(raw, dict):
            mats = raw.get("matrices") or ([raw["matrix"]] if "matrix" in raw else None)
            if mats is None:
                raise InputError("matrix file needs a 'matrix' or 'matrices' key")
        else:
            mats = [raw]
        out = []
        for mraw in mats:
            try:
                M = matrix_from_json(mraw)
            except ValueError as exc:
                raise InputError(str(exc)) from exc
            out.append(classify(M, HermitianForm.ball(M.shape[0] - 1)).to_json())
        return {"classes": out}
    rep = build_rep(cfg, rng)
    return {
        "generators": [classify(g, rep.form).to_json() for g in rep.generators],
        "peripherals": [c.to_json() for c in rep.peripheral_classes()],
        "tame": rep.tame(),
        "reductive_hint": rep.reductive_hint(),
    }


def cmd_tau(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    rep = build_rep(cfg, rng)
    mesh = build_mesh(rep.model, cfg.resolution, cfg.truncation)
    report = None
    try:
        report = milnor_wood_report(rep, resolution=cfg.resolution, truncation=cfg.truncation,
                                    solve=cfg.solver.solve, cfg=solver_config(cfg), seed=cfg.seed,
                                    fmap=model_map(rep, mesh) if rep.reductive_hint() else None)
    except MilnorWoodViolation as exc:
        raise AssertionFailure(str(exc), {"error": str(exc)}) from exc
    out = report.to_json()
    out["mesh"] = mesh.summary()
    rows = [[report.truncation, report.tau_s]]
    if report.tau_s_plus_1 is not None:
        rows.append([report.truncation + 1.0, report.tau_s_plus_1])
    _write_csv(cfg.csv, ["s", "tau"], rows)
    return out


def cmd_harmonic(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    rep = build_rep(cfg, rng)
    mesh = build_mesh(rep.model, cfg.resolution, cfg.truncation)
    seed_map = model_map(rep, mesh)
    fmap, sr = minimize(seed_map, solver_config(cfg))
    profiles = cusp_energy_profile(fmap, seed_map)
    energy = discrete_energy(fmap)
    out = {
        "solver": sr.to_json(),
        "energy": energy,
        "energy_per_area": energy / mesh.total_area(),
        "profiles": [p.to_json() for p in profiles],
        "mesh": mesh.summary(),
    }
    rows = []
    for p in profiles:
        for t, a, ps in zip(p.t, p.alpha, p.partial_sums):
            rows.append([p.cusp, float(t), float(a), float(ps)])
    _write_csv(cfg.csv, ["cusp", "t", "alpha", "partial_sum"], rows)
    return out


def cmd_verify_lemmas(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    try:
        res = verify_lemmas(cfg.m, cfg.trials, cfg.seed)
    except CurvatureError as exc:
        raise InputError(str(exc)) from exc
    out = {"m": cfg.m, "trials": cfg.trials, "residuals": res, "tolerance": LEMMA_TOL,
           "passed": all(v <= LEMMA_TOL for v in res.values())}
    if not out["passed"]:
        raise AssertionFailure("lemma residual above tolerance", out)
    return out


def cmd_cusp_energy(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    try:
        r = retraction_energy(cfg.m)
    except SolverError as exc:
        raise InputError(str(exc)) from exc
    out = r.to_json()
    out["verdict"] = "Divergent" if r.divergent else "Finite"
    return out


def cmd_fuzz(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    f = cfg.fuzz
    results = []
    rows = []
    violations = 0
    for g, p in f.surfaces:
        model = build_fuchsian(g, p)
        mesh = build_mesh(model, cfg.resolution, cfg.truncation)
        for k in range(f.count):
            rep = random_rep(model, f.n, rng, f.scale)
            try:
                fmap = model_map(rep, mesh)
                rep_ = milnor_wood_report(
                    rep, solve=f.max_sweeps > 0, cfg=SolverConfig(max_sweeps=max(f.max_sweeps, 1)),
                    check_truncation=False, check_conjugation=False, fmap=fmap, seed=cfg.seed,
                )
                ratio, value, flags = rep_.ratio, rep_.tau, rep_.flags
            except MilnorWoodViolation as exc:
                violations += 1
                ratio, value, flags = float("nan"), float("nan"), [f"violation:{exc}"]
            results.append({"surface": [g, p], "index": k, "tau": value, "ratio": ratio, "flags": flags})
            rows.append([g, p, k, value, ratio])
    ratios = [r["ratio"] for r in results if r["ratio"] == r["ratio"]]
    out = {"count": len(results), "violations": violations, "max_ratio": max(ratios) if ratios else None,
           "tolerance": 1.0 + TOL_REPORT, "results": results}
    _write_csv(cfg.csv, ["genus", "punctures", "index", "tau", "ratio"], rows)
    if violations:
        raise AssertionFailure(f"{violations} Milnor-Wood violations", out)
    return out


def cmd_double(cfg: ExperimentConfig, rng: np.random.Generator) -> dict:
    if cfg.rep.kind == "fuchsian" and not cfg.rep.file and not cfg.rep.generators:
        cfg = cfg.model_copy(update={"rep": cfg.rep.model_copy(update={"kind": "deformed"})})
    rep = build_rep(cfg, rng)
    try:
        d = double(rep)
    except HermitianError as exc:
        raise InputError(str(exc)) from exc
    half = tau(rep, resolution=cfg.resolution, truncation=cfg.truncation, check_conjugation=False)
    full = tau(d.rep, resolution=cfg.resolution, check_truncation=False, check_conjugation=False)
    gap = abs(full.tau - 2.0 * half.tau)
    tol = 1e-3 * d.rep.topology.bound
    out = {
        "tau_half": half.to_json(),
        "tau_double": full.to_json(),
        "chi_half": rep.topology.chi,
        "chi_double": d.rep.topology.chi,
        "gap": gap,
        "tolerance": tol,
        "doubled_generators": d.rep.to_json()["generators"],
    }
    if gap > tol:
        raise AssertionFailure("tau(2 rho) differs from 2 tau(rho)", out)
    return out


HANDLERS: dict[str, Callable[[ExperimentConfig, np.random.Generator], dict]] = {
    "classify": cmd_classify,
    "tau": cmd_tau,
    "harmonic": cmd_harmonic,
    "verify-lemmas": cmd_verify_lemmas,
    "cusp-energy": cmd_cusp_energy,
    "fuzz-milnor-wood": cmd_fuzz,
    "double": cmd_double,
}


def run(cfg: ExperimentConfig) -> tuple[int, str]:
    """Execute one experiment. Returns (exit status, JSON text)."""
    rng = np.random.default_rng(cfg.seed)
    status = EXIT_OK
    try:
        body = HANDLERS[cfg.command](cfg, rng)
    except AssertionFailure as exc:
        body = dict(exc.report)
        body["assertion"] = str(exc)
        status = EXIT_ASSERT
    except (InputError, HermitianError) as exc:
        body = {"error": str(exc)}
        status = EXIT_INPUT
    report = {"command": cfg.command, "status": status, "provenance": provenance(cfg), "result": body}
    text = dumps(report) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    return status, text


# ---------------------------------------------------------------- argument parsing


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s}")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chtoledo", description="Complex hyperbolic Toledo-invariant experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file; flags override its keys")
        p.add_argument("--output", "-o", help="write the JSON report here (default: stdout only)")
        p.add_argument("--csv", help="write the command's table as CSV")
        p.add_argument("--seed", type=int)
        p.add_argument("--genus", type=int)
        p.add_argument("--punctures", type=int)
        p.add_argument("--resolution", type=float)
        p.add_argument("--truncation", type=float)
        p.add_argument("--rep-kind", dest="rep_kind")
        p.add_argument("--n", type=int)
        p.add_argument("--stretch", type=float)
        p.add_argument("--angle", type=float)
        p.add_argument("--rep-file", dest="rep_file")
        p.add_argument("--solve", type=_bool)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
        p.add_argument("--colorize", type=_bool)
        p.add_argument("--accelerate", type=_bool)
        if name == "classify":
            p.add_argument("--matrix-file", dest="matrix_file")
        if name in ("verify-lemmas", "cusp-energy"):
            p.add_argument("--m", type=int)
        if name == "verify-lemmas":
            p.add_argument("--trials", type=int)
        if name == "fuzz-milnor-wood":
            p.add_argument("--count", type=int)
            p.add_argument("--fuzz-n", dest="fuzz_n", type=int)
            p.add_argument("--fuzz-sweeps", dest="fuzz_sweeps", type=int)
            p.add_argument("--surface", dest="surfaces", action="append", help="genus,punctures (repeatable)")
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT
    status, text = run(cfg)
    sys.stdout.write(text)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
