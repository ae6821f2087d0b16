"""Configuration, orchestration, and machine-readable output for experiments.

Configuration is an INI-style document with flat sections [params], [grid],
[solver], [experiment], [initial]; every key can be overridden on the command
line with a dotted flag (e.g. ``--solver.safety 0.25``).  Each run writes a
manifest first, then its artifacts; scalar reports are JSON, trajectories are
CSV with a fixed column schema and 17-significant-digit floats so repeated
runs with the same seed are byte-identical (the manifest also records wall
time and is therefore exempt from that guarantee).

Exit status: 0 success, 2 a mathematical property check failed, 1 runtime
error.
"""

from __future__ import annotations

import configparser
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, diagnostics, kernels
from .conformal import BubbleParams, bubble_zonal
from .errors import ConfigError, FracflowError
from .flow import (
    FlowKind,
    SolverConfig,
    Termination,
    run,
    write_trajectory_csv,
)
from .specfun import SphereParams, constants
from .zonal import ZonalField, apply_psigma, apply_psigma_pv, build_grid, synthesize

EXPERIMENTS = (
    "constants",
    "operator-check",
    "flow-normalized",
    "flow-rescaled",
    "flow-extinction",
    "inequality",
    "sweep",
)

INITIAL_KINDS = ("constant", "bubble", "random", "coefficients")


@dataclass
class InitialSpec:
    kind: str = "random"
    constant: float = 1.0
    lam: float = 1.0
    amplitude: float = 1.0
    coefficients: Optional[list] = None


@dataclass
class RunConfig:
    params: SphereParams = field(default_factory=lambda: SphereParams(3, 0.5))
    degree_max: int = 32
    node_count: Optional[int] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    experiment: str = "constants"
    initial: InitialSpec = field(default_factory=InitialSpec)
    output_dir: str = "out"
    seed: int = 0
    tol: float = 1e-3  # operator-check tolerance
    trials: int = 1  # inequality trial count
    count: int = 4  # sweep fan-out
    base: str = "flow-rescaled"  # sweep base experiment

    def as_dict(self) -> dict:
        d = {
            "params": {"n": self.params.n, "sigma": self.params.sigma},
            "grid": {"degree_max": self.degree_max, "node_count": self.node_count},
            "solver": asdict(self.solver),
            "experiment": {
                "kind": self.experiment,
                "tol": self.tol,
                "trials": self.trials,
                "count": self.count,
                "base": self.base,
            },
            "initial": {
                "kind": self.initial.kind,
                "constant": self.initial.constant,
                "lam": self.initial.lam,
                "amplitude": self.initial.amplitude,
                "coefficients": self.initial.coefficients,
            },
            "output_dir": self.output_dir,
            "seed": self.seed,
        }
        return d


# (section, key) -> (attribute path, parser)
def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean from {s!r}")


def _parse_coeffs(s: str) -> list:
    return [float(x) for x in s.replace(";", ",").split(",") if x.strip()]


_SCHEMA = {
    ("params", "n"): int,
    ("params", "sigma"): float,
    ("grid", "degree_max"): int,
    ("grid", "node_count"): int,
    ("solver", "dt_init"): float,
    ("solver", "safety"): float,
    ("solver", "positivity_floor"): float,
    ("solver", "max_steps"): int,
    ("solver", "stop_residual"): float,
    ("solver", "record_every"): int,
    ("solver", "renormalize"): _parse_bool,
    ("solver", "extinct_f_frac"): float,
    ("experiment", "kind"): str,
    ("experiment", "tol"): float,
    ("experiment", "trials"): int,
    ("experiment", "count"): int,
    ("experiment", "base"): str,
    ("initial", "kind"): str,
    ("initial", "constant"): float,
    ("initial", "lam"): float,
    ("initial", "amplitude"): float,
    ("initial", "coefficients"): _parse_coeffs,
    ("run", "out"): str,
    ("run", "seed"): int,
}


def _apply_kv(values: dict, section: str, key: str, raw: str):
    if (section, key) not in _SCHEMA:
        raise ConfigError(f"unknown key '{key}' in section [{section}]")
    try:
        values[(section, key)] = _SCHEMA[(section, key)](raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc


def _build_config(values: dict) -> RunConfig:
    cfg = RunConfig()
    n = values.get(("params", "n"), 3)
    sigma = values.get(("params", "sigma"), 0.5)
    cfg.params = SphereParams(n, sigma)  # raises DomainError naming the invariant
    cfg.degree_max = values.get(("grid", "degree_max"), 32)
    cfg.node_count = values.get(("grid", "node_count"), None)
    if cfg.degree_max < 8:
        raise ConfigError(f"degree_max must be >= 8, got {cfg.degree_max}")
    if cfg.node_count is not None and cfg.node_count < cfg.degree_max + 1:
        raise ConfigError(
            f"node_count must be >= degree_max+1 ({cfg.degree_max + 1}), got {cfg.node_count}"
        )
    solver_kwargs = {}
    for key in (
        "dt_init",
        "safety",
        "positivity_floor",
        "max_steps",
        "stop_residual",
        "record_every",
        "renormalize",
        "extinct_f_frac",
    ):
        if ("solver", key) in values:
            solver_kwargs[key] = values[("solver", key)]
    cfg.solver = SolverConfig(**solver_kwargs)
    cfg.experiment = values.get(("experiment", "kind"), "constants")
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment kind must be one of {', '.join(EXPERIMENTS)}; got '{cfg.experiment}'"
        )
    cfg.tol = values.get(("experiment", "tol"), 1e-3)
    cfg.trials = values.get(("experiment", "trials"), 1)
    cfg.count = values.get(("experiment", "count"), 4)
    cfg.base = values.get(("experiment", "base"), "flow-rescaled")
    if cfg.base not in EXPERIMENTS or cfg.base == "sweep":
        raise ConfigError(f"sweep base must be a non-sweep experiment, got '{cfg.base}'")
    init_kind = values.get(("initial", "kind"), "random")
    if init_kind not in INITIAL_KINDS:
        raise ConfigError(
            f"initial kind must be one of {', '.join(INITIAL_KINDS)}; got '{init_kind}'"
        )
    cfg.initial = InitialSpec(
        kind=init_kind,
        constant=values.get(("initial", "constant"), 1.0),
        lam=values.get(("initial", "lam"), 1.0),
        amplitude=values.get(("initial", "amplitude"), 1.0),
        coefficients=values.get(("initial", "coefficients"), None),
    )
    cfg.output_dir = values.get(("run", "out"), "out")
    cfg.seed = values.get(("run", "seed"), 0)
    return cfg


def parse_config(text: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse an INI document into a validated RunConfig.

    ``overrides`` maps dotted keys ('solver.safety') to raw string values and
    wins over the document field-by-field.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config document: {exc}") from exc
    values: dict = {}
    for section in parser.sections():
        if section not in ("params", "grid", "solver", "experiment", "initial", "run"):
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            _apply_kv(values, section, key, raw)
    for dotted, raw in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigError(f"override key must be dotted section.key, got '{dotted}'")
        section, key = dotted.split(".", 1)
        _apply_kv(values, section, key, str(raw))
    return _build_config(values)


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


def _json_dump(obj, path: Path):
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _initial_field(cfg: RunConfig, grid) -> ZonalField:
    init = cfg.initial
    if init.kind == "constant":
        return ZonalField(grid, np.full(grid.node_count, init.constant))
    if init.kind == "bubble":
        return bubble_zonal(
            cfg.params, BubbleParams(lam=init.lam, amplitude=init.amplitude), grid
        )
    if init.kind == "coefficients":
        coeffs = np.zeros(grid.degree_max + 1)
        given = np.asarray(init.coefficients or [], dtype=float)
        if given.size > coeffs.size:
            raise ConfigError(
                f"{given.size} coefficients exceed grid degree_max+1 = {coeffs.size}"
            )
        coeffs[: given.size] = given
        return synthesize(grid, coeffs)
    return diagnostics.trial_field(grid, cfg.seed, amplitude=init.amplitude)


def _monotone_violation(series, direction: int) -> float:
    """Worst relative violation of monotonicity (0 when clean)."""
    vals = [v for v in series if v is not None]
    if len(vals) < 2:
        return 0.0
    arr = np.asarray(vals, dtype=float)
    scale = np.abs(arr).max() or 1.0
    diffs = np.diff(arr) * direction  # direction=+1: require nondecreasing
    worst = float(-(diffs.min()) / scale) if diffs.size else 0.0
    return max(worst, 0.0)


def _harnack_window_ok(traj, factor: float = 1.05, window: float = 1.0) -> bool:
    ratios = np.array([s.record.harnack_ratio for s in traj.snapshots])
    clocks = traj.clocks
    in_window = ratios[clocks <= window]
    if in_window.size == 0:
        in_window = ratios[:1]
    return bool(ratios.max() <= factor * in_window.max())


def _slope_convexity_violation(clocks, values) -> float:
    """Worst negative increase of consecutive secant slopes, relative to |F|."""
    t = np.asarray(clocks, dtype=float)
    F = np.asarray(values, dtype=float)
    if t.size < 3:
        return 0.0
    slopes = np.diff(F) / np.diff(t)
    worst = float(np.diff(slopes).min())
    return max(0.0, -worst / np.abs(F).max())


def _experiment_constants(cfg: RunConfig, outdir: Path) -> int:
    cs = constants(cfg.params)
    payload = cs.as_dict()
    _json_dump(payload, outdir / "constants.json")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _experiment_operator_check(cfg: RunConfig, outdir: Path) -> int:
    grid = build_grid(cfg.params, cfg.degree_max, cfg.node_count)
    coeffs = np.zeros(grid.degree_max + 1)
    coeffs[0] = math.sqrt(constants(cfg.params).vol_sn)
    coeffs[1] = 0.3
    coeffs[2] = 0.2
    fld = synthesize(grid, coeffs)
    spectral = apply_psigma(fld)
    # generous internal tolerance: the spectral path is the oracle here, and
    # the report below is what decides pass/fail
    pv = apply_psigma_pv(fld, tol=1.0)
    err = float(np.abs(pv.nodal - spectral.nodal).max() / np.abs(spectral.nodal).max())
    ok = err <= cfg.tol
    payload = {
        "n": cfg.params.n,
        "sigma": cfg.params.sigma,
        "K": cfg.degree_max,
        "max_rel_err": err,
        "tol": cfg.tol,
        "pass": ok,
    }
    _json_dump(payload, outdir / "operator_check.json")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if ok else 2


def _flow_kind(experiment: str) -> FlowKind:
    return {
        "flow-normalized": FlowKind.NORMALIZED_YAMABE,
        "flow-rescaled": FlowKind.RESCALED_FAST_DIFFUSION,
        "flow-extinction": FlowKind.UNNORMALIZED,
    }[experiment]


def _experiment_flow(cfg: RunConfig, outdir: Path) -> int:
    grid = build_grid(cfg.params, cfg.degree_max, cfg.node_count)
    initial = _initial_field(cfg, grid)
    kind = _flow_kind(cfg.experiment)
    traj = run(initial, kind, cfg.solver)
    write_trajectory_csv(traj, outdir / "trajectory.csv")

    cs = constants(cfg.params)
    checks = {}
    if kind is FlowKind.NORMALIZED_YAMABE:
        vols = np.array([s.record.volume for s in traj.snapshots])
        checks["terminated_converged"] = traj.termination is Termination.CONVERGED
        checks["volume_drift_ok"] = bool(
            np.abs(vols - vols[0]).max() / vols[0] <= 1e-6
        )
        checks["S_nonincreasing"] = (
            _monotone_violation([s.record.S_func for s in traj.snapshots], -1) <= 1e-8
        )
        checks["harnack_window"] = _harnack_window_ok(traj)
    elif kind is FlowKind.RESCALED_FAST_DIFFUSION:
        Js = [s.record.J for s in traj.snapshots]
        checks["terminated_converged"] = traj.termination is Termination.CONVERGED
        checks["J_nonincreasing"] = _monotone_violation(Js, -1) <= 1e-8
        checks["J_nonnegative"] = bool(min(Js) >= -1e-9 * max(abs(Js[0]), 1.0))
        checks["final_fit_residual"] = bool(
            traj.snapshots[-1].record.fit_residual <= 1e-4
        )
        checks["kappa2_barrier"] = bool(
            max(float(s.field.nodal.min()) for s in traj.snapshots)
            <= cs.kappa2 * (1 + 1e-6)
        )
        checks["harnack_window"] = _harnack_window_ok(traj)
    else:
        checks["terminated_extinct"] = traj.termination is Termination.EXTINCT
        report = diagnostics.extinction_report(
            [s.clock for s in traj.snapshots], [s.field for s in traj.snapshots], cfg.params
        )
        _json_dump(report.as_dict(), outdir / "extinction.json")
        with open(outdir / "residual_history.csv", "w", newline="\n") as fh:
            fh.write("s,sup_residual,lambda_fit\n")
            for s_val, resid, lam_fit in report.residual_history:
                fh.write("%.17g,%.17g,%.17g\n" % (s_val, resid, lam_fit))
        checks["sandwich_ok"] = report.sandwich_ok
        Hs = [s.record.H for s in traj.snapshots]
        checks["H_nondecreasing"] = _monotone_violation(Hs, +1) <= 1e-8
        checks["H_nonpositive"] = bool(max(Hs) <= 1e-9)
        checks["F_convex"] = (
            _slope_convexity_violation(
                [s.clock for s in traj.snapshots], [s.record.F for s in traj.snapshots]
            )
            <= 1e-8
        )

    all_ok = all(checks.values())
    summary = {
        "experiment": cfg.experiment,
        "termination": traj.termination.value,
        "steps": traj.snapshots[-1].step_index,
        "final_clock": traj.snapshots[-1].clock,
        "checks": checks,
        "pass": all_ok,
    }
    _json_dump(summary, outdir / "summary.json")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if all_ok else 2


def _experiment_inequality(cfg: RunConfig, outdir: Path) -> int:
    grid = build_grid(cfg.params, cfg.degree_max, cfg.node_count)
    reports = []
    for i in range(cfg.trials):
        fld = diagnostics.trial_field(grid, cfg.seed + i)
        reports.append(diagnostics.deficits(fld))
    first = reports[0]
    gated = first.remainder_ok is not None
    all_ok = all(
        r.sobolev_deficit >= -1e-9 and r.hls_deficit >= -1e-9 for r in reports
    ) and all(r.remainder_ok for r in reports if r.remainder_ok is not None)
    payload = {
        "n": cfg.params.n,
        "sigma": cfg.params.sigma,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "remainder_gated": gated,
        "all_ok": bool(all_ok),
        "min_sobolev_deficit": min(r.sobolev_deficit for r in reports),
        "min_hls_deficit": min(r.hls_deficit for r in reports),
        "report": first.as_dict(),
    }
    _json_dump(payload, outdir / "deficit.json")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0 if all_ok else 2


def _experiment_sweep(cfg: RunConfig, outdir: Path) -> int:
    workers = int(os.environ.get("FRACFLOW_THREADS", "0")) or min(cfg.count, os.cpu_count() or 1)

    def one(i: int) -> int:
        sub = replace(cfg)
        sub.experiment = cfg.base
        sub.seed = cfg.seed + i
        sub.output_dir = str(outdir / f"run_{i:03d}")
        return execute(sub)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        codes = list(pool.map(one, range(cfg.count)))
    payload = {
        "base": cfg.base,
        "count": cfg.count,
        "exit_codes": codes,
        "pass": all(c == 0 for c in codes),
    }
    _json_dump(payload, outdir / "sweep.json")
    print(json.dumps(payload, indent=2, sort_keys=True))
    if any(c == 1 for c in codes):
        return 1
    return 0 if all(c == 0 for c in codes) else 2


def execute(cfg: RunConfig) -> int:
    """Run one experiment; writes a manifest before any long computation."""
    outdir = Path(cfg.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir {outdir}: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": _scipy_version(),
            "fracflow": __version__,
            "kernel_backend": kernels.backend(),
        },
        "wall_time_s": None,
    }
    _json_dump(manifest, outdir / "manifest.json")
    start = time.monotonic()
    try:
        if cfg.experiment == "constants":
            code = _experiment_constants(cfg, outdir)
        elif cfg.experiment == "operator-check":
            code = _experiment_operator_check(cfg, outdir)
        elif cfg.experiment in ("flow-normalized", "flow-rescaled", "flow-extinction"):
            code = _experiment_flow(cfg, outdir)
        elif cfg.experiment == "inequality":
            code = _experiment_inequality(cfg, outdir)
        elif cfg.experiment == "sweep":
            code = _experiment_sweep(cfg, outdir)
        else:  # pragma: no cover - guarded by parse
            raise ConfigError(f"unknown experiment '{cfg.experiment}'")
    except FracflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest["wall_time_s"] = time.monotonic() - start
    _json_dump(manifest, outdir / "manifest.json")
    return code


_USAGE = """usage: fracflow SUBCOMMAND [options]

subcommands:
  constants         print/write the closed-form constant set
  operator-check    cross-validate the spectral operator against its
                    principal-value integral form
  flow-normalized   volume-preserving curvature flow run
  flow-rescaled     fast-diffusion rescaled flow run
  flow-extinction   plain flow run to extinction, with time bounds
  inequality        sharp-inequality deficits on seeded trial fields
  sweep             fan out seeded runs of a base experiment

options:
  --config PATH     INI document with sections [params] [grid] [solver]
                    [experiment] [initial]
  --out DIR         output directory (default: out)
  --seed INT        base random seed (default: 0)
  --SECTION.KEY V   dotted override for any config key, e.g.
                    --params.n 3 --params.sigma 0.5 --grid.degree_max 32
                    --solver.safety 0.25 --initial.kind bubble
                    --experiment.trials 100

defaults: n=3 sigma=0.5 degree_max=32 node_count=ceil(3(K+1)/2)
          dt_init=0.1 safety=0.5 max_steps=200000 stop_residual=1e-9
          record_every=10 initial.kind=random amplitude=1.0

environment: FRACFLOW_THREADS caps sweep parallelism,
             FRACFLOW_PURE_PY=1 forces the pure-python kernels
"""


def main(argv=None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print(_USAGE)
        return 0
    sub = args[0]
    if sub not in EXPERIMENTS:
        print(f"error: unknown subcommand '{sub}'", file=sys.stderr)
        print(_USAGE)
        return 1
    config_text = ""
    overrides: dict = {}
    i = 1
    try:
        while i < len(args):
            flag = args[i]
            if not flag.startswith("--"):
                raise ConfigError(f"unexpected argument '{flag}'")
            name = flag[2:]
            if "=" in name:
                name, value = name.split("=", 1)
            else:
                i += 1
                if i >= len(args):
                    raise ConfigError(f"flag '{flag}' needs a value")
                value = args[i]
            if name == "config":
                config_text = Path(value).read_text()
            elif name == "out":
                overrides["run.out"] = value
            elif name == "seed":
                overrides["run.seed"] = value
            else:
                overrides[name] = value
            i += 1
        overrides["experiment.kind"] = sub
        cfg = parse_config(config_text, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FracflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
