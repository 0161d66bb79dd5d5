"""Configuration-driven scenario runner and property-check suites.

Scenarios are described by a single JSON document (unknown keys rejected)
and write CSV files whose first line embeds the full configuration, so
outputs are reproducible byte-for-byte for a fixed config and seed.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from alesolve import diagnostics, dgsem, fv1d, operators
from alesolve.errors import (
    ConfigurationError,
    GeometryError,
    StateError,
    TimeStepError,
    UsageError,
)
from alesolve.fluxes import FluxSpec, check_spd, check_symmetry, check_tadmor
from alesolve.mesh import (
    MeshMotion,
    build_box_mesh,
    metric_identity_residual,
    watertightness_residual,
)
from alesolve.timeint import get_scheme

_SCENARIOS = (
    "convergence",
    "tgv",
    "freestream",
    "robustness",
    "fv1d",
    "check-operators",
    "check-fluxes",
)

_DEFAULTS = {
    "system": "euler",
    "degree": 3,
    "elements": 4,
    "cfl": 0.5,
    "final_time": 1.0,
    "motion": "sinusoidal",
    "amplitude": 0.05,
    "flux_variant": "chandrashekar",
    "dissipation": "none",
    "alpha": 0.0,
    "domain": None,
    "seed": 0,
    "output_dir": ".",
    "rk_scheme": "lserk45",
    "record_every": 1,
    "num_cells": 64,
    "dt": None,
    "samples": 1000,
}


@dataclass
class RunConfig:
    """Validated scenario description."""

    scenario: str
    system: str = "euler"
    degree: int = 3
    elements: object = 4  # int or list of ints (per direction)
    cfl: object = 0.5  # float or list of floats
    final_time: float = 1.0
    motion: str = "sinusoidal"
    amplitude: float = 0.05
    flux_variant: str = "chandrashekar"
    dissipation: str = "none"
    alpha: float = 0.0
    domain: object = None  # [x_min, x_max]
    seed: int = 0
    output_dir: str = "."
    rk_scheme: str = "lserk45"
    record_every: int = 1
    num_cells: int = 64
    dt: object = None
    samples: int = 1000
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ConfigurationError(
                f"scenario must be one of {_SCENARIOS}, got {self.scenario!r}"
            )
        for cfl in self.cfl_list():
            if not 0.0 < cfl <= 1.0:
                raise ConfigurationError(f"cfl must be in (0, 1], got {cfl}")
        if self.final_time <= 0.0:
            raise ConfigurationError("final_time must be positive")
        if self.domain is not None:
            if len(self.domain) != 2 or not self.domain[1] > self.domain[0]:
                raise ConfigurationError(f"invalid domain {self.domain}")

    def cfl_list(self):
        return list(self.cfl) if isinstance(self.cfl, (list, tuple)) else [self.cfl]

    def element_list(self):
        if isinstance(self.elements, (list, tuple)):
            return [int(k) for k in self.elements]
        return [int(self.elements)]

    def bounds(self, default):
        return tuple(self.domain) if self.domain is not None else default

    def flux_spec(self):
        return FluxSpec(
            system=self.system,
            variant=self.flux_variant,
            dissipation=self.dissipation,
            alpha=self.alpha,
        )

    def config_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.config_json().encode()).hexdigest()[:12]


def load_config(source) -> RunConfig:
    """Build a RunConfig from a dict or a JSON file path."""
    if isinstance(source, dict):
        raw = dict(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if "scenario" not in raw:
        raise ConfigurationError("missing required field 'scenario'")
    unknown = set(raw) - ({"scenario"} | set(_DEFAULTS))
    if unknown:
        raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
    merged = {**_DEFAULTS, **raw}
    return RunConfig(raw=raw, **merged)


def _write_csv(path: Path, config: RunConfig, header: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config: {config.config_json()}", header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# -- 3D experiment setups ---------------------------------------------------

_TGV_MACH = 0.1


def tgv_initial_state(x: np.ndarray) -> np.ndarray:
    """Taylor-Green vortex initial data at Mach 0.1 (gamma = 1.4)."""
    gamma = 1.4
    p0 = 1.0 / (gamma * _TGV_MACH**2)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    u1 = np.sin(x1) * np.cos(x2) * np.cos(x3)
    u2 = -np.cos(x1) * np.sin(x2) * np.cos(x3)
    p = p0 + (np.cos(2 * x1) + np.cos(2 * x2)) * (np.cos(2 * x3) + 2.0) / 16.0
    out = np.empty(x.shape[:-1] + (5,))
    out[..., 0] = 1.0
    out[..., 1] = u1
    out[..., 2] = u2
    out[..., 3] = 0.0
    out[..., 4] = p / (gamma - 1.0) + 0.5 * (u1 * u1 + u2 * u2)
    return out


FREESTREAM_STATE = np.array([1.0, 0.3, 0.0, 0.0, 17.0])


def freestream_initial_state(x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[:-1] + (5,))
    out[...] = FREESTREAM_STATE
    return out


def _build_mesh(config: RunConfig, k_per_direction: int, default_bounds):
    bounds = config.bounds(default_bounds)
    ops = operators.build_lgl(config.degree)
    motion = MeshMotion(bounds[0], bounds[1], config.amplitude, config.motion)
    return build_box_mesh(
        k_per_direction, k_per_direction, k_per_direction, bounds, motion, ops
    )


def _run_box(mesh, fields, spec, scheme, final_time, cfl, source=None,
             record=None, record_every=1):
    """Advance to final_time under the CFL restriction; optionally record."""
    t = fields.t
    step = 0
    if record is not None:
        record.record(mesh, fields)
    while t < final_time - 1e-12:
        dt = dgsem.compute_dt(mesh, fields, t, cfl, spec, dt_max=final_time - t)
        dt = min(dt, final_time - t)
        fields = dgsem.rk_step(mesh, fields, spec, scheme, t, dt, source)
        t = fields.t
        step += 1
        if record is not None and (step % record_every == 0
                                   or t >= final_time - 1e-12):
            record.record(mesh, fields)
    return fields


# -- scenarios --------------------------------------------------------------


def _scenario_convergence(config: RunConfig, outdir: Path) -> int:
    spec = config.flux_spec()
    scheme = get_scheme(config.rk_scheme)
    cfl = config.cfl_list()[0]
    rows = []
    results = []
    for k in config.element_list():
        mesh = _build_mesh(config, k, (-1.0, 1.0))
        fields = dgsem.initial_fields(mesh, lambda x: diagnostics.mms_exact(x, 0.0))
        fields = _run_box(mesh, fields, spec, scheme, config.final_time, cfl,
                          source=diagnostics.mms_source)
        l2, _ = diagnostics.error_norms(
            mesh, fields, diagnostics.mms_exact, fields.t
        )
        results.append((k, l2))
    for idx, (k, l2) in enumerate(results):
        row = [k]
        for c in range(5):
            row.append(float(l2[c]))
            if idx == 0:
                row.append("")
            else:
                rate = diagnostics.eoc(
                    [(results[idx - 1][0], results[idx - 1][1][c]), (k, l2[c])]
                )[0]
                row.append(float(rate) if rate is not None else "")
        rows.append(row)
    header = "K," + ",".join(
        f"l2_{name},eoc_{name}" for name in ("rho", "mom1", "mom2", "mom3", "energy")
    )
    _write_csv(outdir / "convergence.csv", config, header, rows)
    return 0


def _scenario_tgv(config: RunConfig, outdir: Path) -> int:
    spec = config.flux_spec()
    scheme = get_scheme(config.rk_scheme)
    k = config.element_list()[0]
    slope_rows = []
    for cfl in config.cfl_list():
        mesh = _build_mesh(config, k, (0.0, 2.0 * np.pi))
        fields = dgsem.initial_fields(mesh, tgv_initial_state)
        record = diagnostics.RunRecord(metadata=mesh.summary())
        fields = _run_box(mesh, fields, spec, scheme, config.final_time, cfl,
                          record=record, record_every=config.record_every)
        delta = diagnostics.entropy_error(record, config.final_time)
        tag = repr(float(cfl)).replace(".", "p")
        rows = [
            (t, s, s - record.entropy[0], m, *mom, en)
            for t, s, m, mom, en in zip(
                record.times, record.entropy, record.mass,
                record.momentum, record.energy,
            )
        ]
        _write_csv(
            outdir / f"entropy_cfl{tag}.csv", config,
            "t,entropy,entropy_error,mass,momentum1,momentum2,momentum3,energy",
            rows,
        )
        slope_rows.append((float(cfl), float(delta)))
    if len(slope_rows) >= 2:
        logs = np.log(
            [[c, abs(d)] for c, d in slope_rows if d != 0.0]
        )
        slope = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
    else:
        slope = float("nan")
    _write_csv(
        outdir / "entropy_error_vs_cfl.csv", config,
        "cfl,entropy_error,slope",
        [(c, d, slope) for c, d in slope_rows],
    )
    return 0


def _scenario_freestream(config: RunConfig, outdir: Path) -> int:
    spec = config.flux_spec()
    scheme = get_scheme(config.rk_scheme)
    k = config.element_list()[0]
    rows = []
    worst = 0.0
    for cfl in config.cfl_list():
        mesh = _build_mesh(config, k, (0.0, 2.0 * np.pi))
        fields = dgsem.initial_fields(mesh, freestream_initial_state)
        fields = _run_box(mesh, fields, spec, scheme, config.final_time, cfl)
        errors = np.max(
            np.abs(fields.u - FREESTREAM_STATE[None, :, None, None, None]),
            axis=(0, 2, 3, 4),
        )
        worst = max(worst, float(errors.max()))
        rows.append((float(cfl), *[float(e) for e in errors]))
    _write_csv(
        outdir / "freestream.csv", config,
        "cfl,linf_rho,linf_mom1,linf_mom2,linf_mom3,linf_energy",
        rows,
    )
    return 0


def _scenario_robustness(config: RunConfig, outdir: Path) -> int:
    spec = config.flux_spec()
    scheme = get_scheme(config.rk_scheme)
    k = config.element_list()[0]
    mesh = _build_mesh(config, k, (0.0, 2.0 * np.pi))
    fields = dgsem.initial_fields(mesh, tgv_initial_state)
    record = diagnostics.RunRecord(metadata=mesh.summary())
    fields = _run_box(mesh, fields, spec, scheme, config.final_time,
                      config.cfl_list()[0], record=record,
                      record_every=config.record_every)
    rows = [
        (t, s, s - record.entropy[0])
        for t, s in zip(record.times, record.entropy)
    ]
    _write_csv(outdir / "robustness_entropy.csv", config,
               "t,entropy,entropy_error", rows)
    _write_csv(outdir / "robustness_status.csv", config, "final_time,status",
               [(float(fields.t), "completed")])
    return 0


def _scenario_fv1d(config: RunConfig, outdir: Path) -> int:
    spec = config.flux_spec()
    scheme = get_scheme(config.rk_scheme)
    bounds = config.bounds((0.0, 2.0 * np.pi))
    motion = fv1d.IntervalMotion(
        bounds[0], bounds[1], config.num_cells, config.amplitude, config.motion
    )
    length = bounds[1] - bounds[0]
    centers = motion.initial_nodes[:-1] + np.diff(motion.initial_nodes) / 2.0
    phase = 2.0 * np.pi * centers / length
    if config.system == "euler":
        rho = 2.0 + 0.5 * np.sin(phase)
        vel = 0.3 + 0.2 * np.cos(phase)
        p = 1.0 + 0.3 * np.sin(phase + 0.4)
        u0 = np.stack(
            [rho, rho * vel, np.zeros_like(rho), np.zeros_like(rho),
             p / 0.4 + 0.5 * rho * vel**2], axis=1
        )
    else:
        h = 2.0 + 0.5 * np.sin(phase)
        vel = 0.3 + 0.2 * np.cos(phase)
        u0 = np.stack([h, h * vel, np.zeros_like(h)], axis=1)
    state = fv1d.initial_state(motion, u0)
    baseline = u0.copy()

    t = 0.0
    rows = []

    def log_row(st):
        ent = fv1d.total_entropy_for(config.system, st)
        mass = float(np.dot(st.jac, st.u[:, 0]))
        drift = float(np.max(np.abs(st.u - baseline)))
        rows.append((float(st.t), ent, mass, drift))

    log_row(state)
    step = 0
    while t < config.final_time - 1e-12:
        if config.dt is not None:
            dt = float(config.dt)
        else:
            dt = fv1d.compute_dt(state, spec, t, config.cfl_list()[0])
        dt = min(dt, config.final_time - t)
        state = fv1d.fv_rk_step(state, spec, t, dt, scheme)
        t = state.t
        step += 1
        if step % config.record_every == 0 or t >= config.final_time - 1e-12:
            log_row(state)
    _write_csv(outdir / "fv1d_series.csv", config,
               "t,total_entropy,mass,freestream_linf", rows)
    return 0


def operator_residual_rows(max_degree: int = 10):
    rows = []
    for degree in range(1, max_degree + 1):
        ops = operators.build_lgl(degree)
        rows.append(
            (
                degree,
                operators.sbp_residual(ops),
                operators.quadrature_residual(ops),
                operators.row_sum_residual(ops),
            )
        )
    return rows


def _scenario_check_operators(config: RunConfig, outdir: Path) -> int:
    rows = operator_residual_rows()
    _write_csv(outdir / "check_operators.csv", config,
               "N,sbp_residual,quad_residual,row_sum_residual", rows)
    ok = all(r[1] <= 1e-13 and r[2] <= 1e-12 and r[3] <= 1e-13 for r in rows)
    return 0 if ok else 1


def flux_check_rows(samples: int, seed: int):
    rows = []
    for system, variants in (("euler", ("chandrashekar", "ranocha")),
                             ("shallow", ("wgwk", "fmt"))):
        for variant in variants:
            spec = FluxSpec(system=system, variant=variant)
            spec_diss = FluxSpec(system=system, variant=variant,
                                 dissipation="roe")
            rows.append(
                (
                    variant,
                    samples,
                    check_tadmor(spec, samples, seed),
                    check_symmetry(spec, min(samples, 200), seed),
                    check_spd(spec_diss, min(samples, 200), seed),
                )
            )
    return rows


def _scenario_check_fluxes(config: RunConfig, outdir: Path) -> int:
    rows = flux_check_rows(config.samples, config.seed)
    _write_csv(outdir / "check_fluxes.csv", config,
               "variant,samples,tadmor_residual,symmetry_residual,spd_min_eig",
               rows)
    ok = all(r[2] <= 1e-11 and r[3] == 0.0 and r[4] >= -1e-12 for r in rows)
    return 0 if ok else 1


_RUNNERS = {
    "convergence": _scenario_convergence,
    "tgv": _scenario_tgv,
    "freestream": _scenario_freestream,
    "robustness": _scenario_robustness,
    "fv1d": _scenario_fv1d,
    "check-operators": _scenario_check_operators,
    "check-fluxes": _scenario_check_fluxes,
}


def run_scenario(config: RunConfig, output_dir=None) -> int:
    """Execute one scenario; returns the process exit status."""
    outdir = Path(output_dir if output_dir is not None else config.output_dir)
    try:
        return _RUNNERS[config.scenario](config, outdir)
    except (StateError, GeometryError, TimeStepError) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return 3


def check_suite(seed: int = 0, verbose: bool = True) -> list:
    """Operator, mesh, flux, and face-residual property suites.

    Returns (name, residual, tolerance, passed) tuples; any failure makes
    the aggregate fail.
    """
    results = []

    rows = operator_residual_rows()
    results.append(("operators.sbp", max(r[1] for r in rows), 1e-13))
    results.append(("operators.quadrature", max(r[2] for r in rows), 1e-12))
    results.append(("operators.row_sums", max(r[3] for r in rows), 1e-13))

    ops = operators.build_lgl(3)
    motion = MeshMotion(0.0, 2.0 * np.pi, 0.05, "sinusoidal")
    mesh = build_box_mesh(2, 2, 2, (0.0, 2.0 * np.pi), motion, ops)
    results.append(
        ("mesh.metric_identities",
         max(metric_identity_residual(mesh, t) for t in (0.0, 0.13, 0.25, 0.4)),
         1e-11)
    )
    results.append(
        ("mesh.watertightness",
         max(watertightness_residual(mesh, t) for t in (0.0, 0.13, 0.25, 0.4)),
         1e-12)
    )

    for system, variants in (("euler", ("chandrashekar", "ranocha")),
                             ("shallow", ("wgwk", "fmt"))):
        for variant in variants:
            spec = FluxSpec(system=system, variant=variant)
            results.append(
                (f"fluxes.tadmor.{variant}", check_tadmor(spec, 1000, seed), 1e-11)
            )
            results.append(
                (f"fluxes.symmetry.{variant}",
                 check_symmetry(spec, 200, seed), 0.0)
            )
            diss = FluxSpec(system=system, variant=variant, dissipation="roe")
            results.append(
                (f"fluxes.spd.{variant}", -check_spd(diss, 200, seed), 1e-12)
            )

    rng = np.random.default_rng(seed)
    shape = (mesh.num_elements, 4, 4, 4)
    rho = rng.uniform(0.5, 2.0, shape)
    p = rng.uniform(0.5, 2.0, shape)
    vel = rng.uniform(-1.0, 1.0, (mesh.num_elements, 3, 4, 4, 4))
    u = np.empty((mesh.num_elements, 5, 4, 4, 4))
    u[:, 0] = rho
    u[:, 1:4] = rho[:, None] * vel
    u[:, 4] = p / 0.4 + 0.5 * rho * np.sum(vel * vel, axis=1)
    _, _, _, _, jac = mesh.geometry_all(0.13)
    fields = dgsem.FieldState(u=u, jac=jac.copy(), t=0.13)
    for mode in ("none", "roe"):
        spec = FluxSpec("euler", "chandrashekar", dissipation=mode)
        res = diagnostics.interior_face_entropy_residual(mesh, fields, spec, 0.13)
        results.append((f"faces.entropy_residual.{mode}", res, 1e-11))

    report = []
    for name, residual, tol in results:
        passed = residual <= tol
        report.append((name, float(residual), float(tol), passed))
        if verbose:
            status = "pass" if passed else "FAIL"
            print(f"{status}  {name}: residual {residual:.3e} (tol {tol:.1e})")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="alesolve",
        description="entropy-stable moving-mesh DGSEM / FV scenario runner",
    )
    parser.add_argument("--workers", type=int, default=1,
                        help="numba thread count (does not change results)")
    parser.add_argument("--output-dir", default=None,
                        help="override the config output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario from a JSON config")
    p_run.add_argument("config")
    sub.add_parser("check", help="run the property-check suites")
    p_ops = sub.add_parser("check-operators", help="operator residual table")
    p_flux = sub.add_parser("check-fluxes", help="flux residual table")
    for p in (p_ops, p_flux):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=1000)
    p_fv = sub.add_parser("fv1d", help="run a 1D FV scenario config")
    p_fv.add_argument("config")

    args = parser.parse_args(argv)
    _set_workers(args.workers)

    try:
        if args.command == "run":
            config = load_config(args.config)
            return run_scenario(config, args.output_dir)
        if args.command == "fv1d":
            config = load_config(args.config)
            if config.scenario != "fv1d":
                raise ConfigurationError("fv1d subcommand needs scenario 'fv1d'")
            return run_scenario(config, args.output_dir)
        if args.command == "check":
            report = check_suite()
            return 0 if all(item[3] for item in report) else 1
        if args.command == "check-operators":
            rows = operator_residual_rows()
            print("N,sbp_residual,quad_residual,row_sum_residual")
            for row in rows:
                print(",".join(_fmt(v) for v in row))
            return 0
        if args.command == "check-fluxes":
            rows = flux_check_rows(args.samples, args.seed)
            print("variant,samples,tadmor_residual,symmetry_residual,spd_min_eig")
            for row in rows:
                print(",".join(_fmt(v) for v in row))
            return 0
    except (ConfigurationError, UsageError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except (StateError, GeometryError, TimeStepError) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return 3
    return 2


def _set_workers(workers: int) -> None:
    try:
        import numba

        numba.set_num_threads(max(1, min(workers, numba.config.NUMBA_NUM_THREADS)))
    except ImportError:  # pragma: no cover
        pass


if __name__ == "__main__":
    sys.exit(main())
