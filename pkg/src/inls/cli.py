"""Command line entry point: exponents, groundstate, run, sweep, check.

Run configurations are flat ``section.key = value`` text files::

    # defocusing Gaussian
    physics.N = 2
    physics.b = 0.5
    physics.alpha = 2
    physics.sign = defocusing
    grid.r_max = 200
    grid.points = 4000
    time.t_final = 20
    initial.kind = gaussian
    output.directory = out

A sweep file is a run file plus ``sweep.*`` keys (comma-separated lists).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from inls import diagnostics as dg
from inls.evolve import BLOWUP, NAN_ABORT, Schedule, evolve
from inls.exponents import (
    DEFOCUSING,
    FOCUSING,
    INF,
    PhysParams,
    appendix_feasible,
    classify_regime,
    critical_exponents,
    in_2d_scope,
    in_appendix_scope,
    lemma31_feasible,
)
from inls.field import (
    PHI_BLEND,
    RadialField,
    RadialGrid,
    WeightConstraintError,
    _check_phi_blend,
    read_snapshot,
    write_snapshot,
)
from inls.groundstate import (
    cache_path,
    cached_ground_state,
    gn_constant,
    pohozaev_report,
    solve_ground_state,
    write_profile,
)

log = logging.getLogger("inls")

SCOPES = ("any", "2d", "appendix")
INITIAL_KINDS = ("gaussian", "ground_state_multiple", "file")


class ConfigError(ValueError):
    """Invalid or unknown configuration entry (exit status 1)."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class PhysicsSection:
    N: int = 2
    b: float = 0.5
    alpha: float = 2.0
    sign: str = FOCUSING
    scope: str = "any"


@dataclass(frozen=True)
class GridSection:
    r_max: float = 40.0
    points: int = 4096


@dataclass(frozen=True)
class TimeSection:
    dt: Optional[float] = None
    t_final: float = 10.0
    record_every: int = 10


@dataclass(frozen=True)
class InitialSection:
    kind: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    multiple: float = 1.0
    path: Optional[str] = None


@dataclass(frozen=True)
class OutputSection:
    directory: str = "inls_out"
    ladder_base: float = 2.0


@dataclass(frozen=True)
class DiagnosticsSection:
    # first entry is the virial weight radius and the threshold monitor's chosen R
    virial_R: tuple = (10.0, 5.0, 20.0)
    scattering_tol: float = 0.05
    morawetz_horizon: Optional[float] = None
    decomposition_eps: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)

    @property
    def params(self) -> PhysParams:
        p = self.physics
        return PhysParams(p.N, p.b, p.alpha, p.sign)

    @property
    def radial_grid(self) -> RadialGrid:
        return RadialGrid(self.grid.points, self.grid.r_max, self.physics.N)

    @property
    def dt(self) -> float:
        """Configured step, or h/4 when omitted."""
        return self.time.dt if self.time.dt is not None else self.grid.r_max / self.grid.points / 4


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    b: tuple = ()
    alpha: tuple = ()
    amplitude: tuple = ()
    workers: int = 1

    def axes(self) -> tuple[tuple, tuple, tuple]:
        """Axis values with unset axes collapsed to the base value."""
        base = self.base
        amp = base.initial.multiple if base.initial.kind == "ground_state_multiple" else base.initial.amplitude
        return (
            tuple(sorted(self.b)) or (base.physics.b,),
            tuple(sorted(self.alpha)) or (base.physics.alpha,),
            tuple(sorted(self.amplitude)) or (amp,),
        )

    def points(self) -> list[tuple[float, float, float]]:
        return list(itertools.product(*self.axes()))


_SECTIONS = {f.name: f.default_factory for f in fields(RunConfig)}
_SWEEP_KEYS = ("b", "alpha", "amplitude", "workers")


def _section_types(section_cls) -> dict:
    defaults = section_cls()
    return {f.name: getattr(defaults, f.name) for f in fields(section_cls)}


def _convert(key: str, raw: str, default):
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if raw.lower() in ("none", "null", ""):
            return None
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        if isinstance(default, float) or default is None and key not in ("initial.path",):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


def _parse_lines(text: str) -> dict:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"duplicate key {key}")
        entries[key] = value
    return entries


def _build_run(entries: dict) -> RunConfig:
    sections = {}
    for name, factory in _SECTIONS.items():
        cls = type(factory())
        types = _section_types(cls)
        values = {}
        for key, default in types.items():
            full = f"{name}.{key}"
            if full in entries:
                values[key] = _convert(full, entries.pop(full), default)
        sections[name] = cls(**values)
    if entries:
        raise ConfigError(f"unknown key {sorted(entries)[0]}")
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse a run configuration; raises ConfigError naming the offending key."""
    return _build_run(_parse_lines(text))


def parse_sweep(text: str) -> SweepConfig:
    entries = _parse_lines(text)
    sweep = {}
    for key in _SWEEP_KEYS:
        full = f"sweep.{key}"
        if full in entries:
            raw = entries.pop(full)
            sweep[key] = _convert(full, raw, 1 if key == "workers" else ())
    base = _build_run(entries)
    cfg = SweepConfig(base=base, **sweep)
    if cfg.workers < 1:
        raise ConfigError("sweep.workers must be >= 1")
    if not (cfg.b or cfg.alpha or cfg.amplitude):
        raise ConfigError("sweep needs at least one nonempty axis (sweep.b, sweep.alpha, sweep.amplitude)")
    for b, alpha, amp in cfg.points():
        validate(_point_config(base, b, alpha, amp))
    return cfg


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(f"{v:.17g}" for v in value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Emit every key (defaults included) in a stable order."""
    lines = []
    for name in _SECTIONS:
        section = getattr(cfg, name)
        for f in fields(section):
            lines.append(f"{name}.{f.name} = {_fmt(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"


def validate(cfg: RunConfig) -> None:
    p = cfg.physics
    try:
        params = cfg.params
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if p.scope not in SCOPES:
        raise ConfigError(f"physics.scope must be one of {SCOPES}, got {p.scope!r}")
    if p.scope == "2d" and not in_2d_scope(params):
        if p.N != 2:
            raise ConfigError(f"N out of range: the 2d scope needs N = 2, got {p.N}")
        if not 0 < p.b < 1:
            raise ConfigError(f"b out of range: the 2d scope needs 0 < b < 1, got b={p.b}")
        raise ConfigError(f"alpha out of range: the 2d scope needs alpha > 2 - b, got alpha={p.alpha}")
    if p.scope == "appendix" and not in_appendix_scope(params):
        raise ConfigError(f"b or alpha out of range for the appendix scope (N={p.N}, b={p.b}, alpha={p.alpha})")
    g = cfg.grid
    if g.points < 8:
        raise ConfigError(f"grid.points must be an integer >= 8, got {g.points}")
    if not g.r_max > 0:
        raise ConfigError(f"grid.r_max must be positive, got {g.r_max}")
    h = g.r_max / g.points
    t = cfg.time
    if t.dt is not None and not 0 < t.dt < h:
        raise ConfigError(f"time.dt must satisfy 0 < dt < h = {h:.6g}, got {t.dt}")
    if not t.t_final > 0:
        raise ConfigError(f"time.t_final must be positive, got {t.t_final}")
    if t.record_every < 1:
        raise ConfigError(f"time.record_every must be >= 1, got {t.record_every}")
    i = cfg.initial
    if i.kind not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}, got {i.kind!r}")
    if i.kind == "file" and not i.path:
        raise ConfigError("initial.path is required for initial.kind = file")
    if i.kind == "gaussian" and not i.width > 0:
        raise ConfigError(f"initial.width must be positive, got {i.width}")
    if cfg.output.ladder_base <= 1:
        raise ConfigError(f"output.ladder_base must exceed 1, got {cfg.output.ladder_base}")
    d = cfg.diagnostics
    if not d.virial_R or min(d.virial_R) <= 0:
        raise ConfigError("diagnostics.virial_R must list positive radii")
    if not 0 < d.scattering_tol:
        raise ConfigError("diagnostics.scattering_tol must be positive")
    if not 0 < d.decomposition_eps < 1:
        raise ConfigError("diagnostics.decomposition_eps must lie in (0, 1)")


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# --------------------------------------------------------------------------
# run


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    if obj is INF:
        return "inf"
    return obj


def initial_field(cfg: RunConfig, grid: RadialGrid) -> RadialField:
    i = cfg.initial
    if i.kind == "gaussian":
        return RadialField.from_function(grid, lambda r: i.amplitude * np.exp(-(r**2) / (2 * i.width**2)))
    if i.kind == "ground_state_multiple":
        p = cfg.params
        try:
            prof = cached_ground_state(PhysParams(p.N, p.b, p.alpha, FOCUSING), grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return RadialField(grid, (i.multiple * prof.samples).astype(complex))
    u, meta = read_snapshot(i.path)
    if (u.grid.J, u.grid.N) != (grid.J, grid.N) or not math.isclose(u.grid.r_max, grid.r_max):
        raise ConfigError(f"initial.path grid (J={u.grid.J}, r_max={u.grid.r_max}, N={u.grid.N}) "
                          f"does not match the configured grid")
    return u


def _diag(fn, *args, **kw) -> dict:
    try:
        return fn(*args, **kw).as_dict()
    except ValueError as exc:
        return {"error": str(exc)}


def write_series(path: Path, series: dict) -> None:
    keys = list(series)
    data = np.column_stack([np.asarray(series[k], dtype=float) for k in keys])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Evolve one configuration and write series.csv, snapshots/ and summary.json."""
    params, grid = cfg.params, cfg.radial_grid
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    u0 = initial_field(cfg, grid)
    profile = None
    if params.sign == FOCUSING:
        try:
            profile = cached_ground_state(params, grid)
        except ValueError as exc:
            log.info("no ground state for threshold monitoring: %s", exc)
    radii = cfg.diagnostics.virial_R
    schedule = Schedule(cfg.dt, cfg.time.t_final, cfg.time.record_every)
    started = time.perf_counter()
    traj = evolve(u0, schedule, params, virial_R=radii[0], cutoff_R=tuple(radii),
                  ladder_base=cfg.output.ladder_base)
    elapsed = time.perf_counter() - started

    write_series(out / "series.csv", traj.series)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for k, t in enumerate(sorted(traj.snapshots)):
        write_snapshot(snap_dir / f"snapshot_{k:03d}.csv", traj.snapshot(t), params, t)

    summary = {
        "outcome": traj.outcome,
        "params": {"N": params.N, "b": params.b, "alpha": params.alpha, "sign": params.sign},
        "regime": classify_regime(params) if params.b > 0 else "homogeneous",
        "steps": schedule.steps,
        "dt": traj.dt,
        "t_end": float(traj.times[-1]),
        "elapsed_seconds": elapsed,
        "conservation": dg.conservation_report(traj),
    }
    summary["threshold"] = (_diag(dg.threshold_monitor, traj, profile, R=radii[0])
                            if profile is not None and profile.threshold_gradient is not None else None)
    horizon = cfg.diagnostics.morawetz_horizon
    summary["morawetz"] = _diag(_morawetz_until, traj, horizon)
    summary["scattering"] = _diag(dg.scattering_report, traj, tol=cfg.diagnostics.scattering_tol,
                                  eps=cfg.diagnostics.decomposition_eps)
    summary["virial"] = _diag(dg.virial_consistency, traj)
    summary["interaction_l4"] = _diag(dg.interaction_l4_check, traj) if params.N == 3 else None
    if traj.outcome == NAN_ABORT:
        summary["verdict"] = NAN_ABORT
    elif traj.outcome == BLOWUP:
        summary["verdict"] = dg.BLEW_UP
    else:
        summary["verdict"] = summary["scattering"].get("verdict", dg.UNDECIDED)
    (out / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    (out / "config.txt").write_text(format_config(cfg))
    return (2 if traj.outcome == NAN_ABORT else 0), summary


class _Truncated:
    """Trajectory view restricted to t <= horizon (for the Morawetz fit)."""

    def __init__(self, traj, horizon):
        keep = traj.series["t"] <= horizon * (1 + 1e-12)
        self.params = traj.params
        self.series = {k: v[keep] for k, v in traj.series.items()}


def _morawetz_until(traj, horizon):
    view = traj if horizon is None else _Truncated(traj, horizon)
    return dg.morawetz_report(view)


# --------------------------------------------------------------------------
# sweep

SWEEP_COLUMNS = ("b", "alpha", "amplitude", "verdict", "min_margin", "fitted_exponent_A", "fitted_exponent_B")


def _point_config(base: RunConfig, b: float, alpha: float, amp: float, directory: Optional[str] = None) -> RunConfig:
    initial = (replace(base.initial, multiple=amp) if base.initial.kind == "ground_state_multiple"
               else replace(base.initial, amplitude=amp))
    out = base.output if directory is None else replace(base.output, directory=directory)
    return replace(base, physics=replace(base.physics, b=b, alpha=alpha), initial=initial, output=out)


def _sweep_worker(text: str) -> dict:
    cfg = parse_config(text)
    code, summary = run(cfg)
    thr = summary.get("threshold") or {}
    mor = summary.get("morawetz") or {}
    return {
        "b": cfg.physics.b,
        "alpha": cfg.physics.alpha,
        "amplitude": (cfg.initial.multiple if cfg.initial.kind == "ground_state_multiple"
                      else cfg.initial.amplitude),
        "verdict": summary["verdict"],
        "min_margin": thr.get("min_margin"),
        "fitted_exponent_A": mor.get("fitted_exponent_A"),
        "fitted_exponent_B": mor.get("fitted_exponent_B"),
    }


def sweep(cfg: SweepConfig) -> list[dict]:
    """Run the Cartesian product of the axes; rows come back sorted by (b, alpha, amplitude)."""
    root = Path(cfg.base.output.directory)
    root.mkdir(parents=True, exist_ok=True)
    texts = []
    for b, alpha, amp in cfg.points():
        sub = root / f"b{b:.17g}_alpha{alpha:.17g}_amp{amp:.17g}"
        texts.append(format_config(_point_config(cfg.base, b, alpha, amp, str(sub))))
    if cfg.workers == 1:
        rows = [_sweep_worker(t) for t in texts]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_worker, texts))
    rows.sort(key=lambda r: (r["b"], r["alpha"], r["amplitude"]))
    with open(root / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) if isinstance(row[c], float) else
                             ("" if row[c] is None else row[c]) for c in SWEEP_COLUMNS])
    return rows


# --------------------------------------------------------------------------
# check


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: str


def tampered_blend(target: float = 3.0) -> Polynomial:
    """PHI_BLEND plus a bump (rho-1)^4 (rho-2)^4 scaled so that phi''(1.5) = target.

    The bump leaves all junction derivatives up to third order untouched, so
    only the interior constraint phi'' <= 2 is violated.
    """
    bump = Polynomial([-1.0, 1.0]) ** 4 * Polynomial([-2.0, 1.0]) ** 4
    c = (target - PHI_BLEND.deriv(2)(1.5)) / bump.deriv(2)(1.5)
    return PHI_BLEND + c * bump


def _check(name, fn) -> CheckResult:
    try:
        ok, value = fn()
    except Exception as exc:  # a crashing check is a failing check
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    return CheckResult(name, bool(ok), value)


def run_checks(phi_blend: Optional[Polynomial] = None) -> list[CheckResult]:
    """Reduced-resolution self-check suite."""
    from inls.diagnostics import virial_consistency

    results = []

    def exponent_identity():
        worst = 0
        for b in np.linspace(0.05, 0.95, 10):
            for alpha in np.linspace(2.1, 6.0, 10):
                e = critical_exponents(PhysParams(2, float(b), float(alpha)))
                worst = max(worst, abs(e.sigma_c * e.gamma_c - (1 - e.gamma_c)))
                if not e.beta1 + e.beta2 < 1:
                    return False, f"beta1+beta2={float(e.beta1 + e.beta2)} at b={b}, alpha={alpha}"
        return worst == 0, f"max |sigma_c gamma_c - (1 - gamma_c)| = {worst}"

    def lemma31_spot():
        rep = lemma31_feasible(0.5, 2.0, eta=0.05)
        got = 2.0 * rep.theta0
        return abs(got - 1.63125) < 1e-12 and rep.feasible, f"alpha*theta0 = {got:.6f}"

    def weight_constraints():
        blend = PHI_BLEND if phi_blend is None else phi_blend
        try:
            _check_phi_blend(blend, 2)
            _check_phi_blend(blend, 3)
        except WeightConstraintError as exc:
            return False, str(exc)
        return True, "phi'' <= 2, phi' >= 0, phi'/r <= 2, 2N - lap(phi) >= 0"

    params = PhysParams(2, 0.5, 2.0)
    gs_grid = RadialGrid(2048, 20.0, 2)

    def pohozaev():
        prof = cached_ground_state(params, gs_grid)
        r1, r2 = pohozaev_report(prof)
        _, _, rel = gn_constant(prof)
        return max(r1, r2) < 1e-4 and rel < 1e-3, f"residuals ({r1:.2e}, {r2:.2e}), C_opt rel {rel:.2e}"

    def conservation():
        g = RadialGrid(1024, 20.0, 2)
        p = PhysParams(2, 0.5, 2.0, DEFOCUSING)
        u0 = RadialField.from_function(g, lambda r: np.exp(-(r**2) / 2))
        drift = []
        for dt in (4e-3, 2e-3):
            tr = evolve(u0, Schedule(dt, 2.0, record_every=50), p, virial_R=None)
            m, e = tr.series["mass"], tr.series["energy"]
            drift.append((np.max(np.abs(m - m[0])) / m[0], np.max(np.abs(e - e[0])) / abs(e[0])))
        ratio = drift[0][1] / drift[1][1]
        ok = drift[1][0] <= 1e-10 and drift[1][1] <= 1e-5 and 3 <= ratio <= 5
        return ok, f"mass {drift[1][0]:.1e}, energy {drift[1][1]:.1e}, halving ratio {ratio:.2f}"

    def soliton():
        errs = []
        for J, dt in ((512, 4e-3), (1024, 2e-3)):
            g = RadialGrid(J, 20.0, 2)
            prof = solve_ground_state(params, grid=g)
            q = RadialField(g, prof.samples.astype(complex))
            tr = evolve(q, Schedule(dt, 1.0, record_every=250), params, virial_R=None)
            diff = tr.final.values - np.exp(1j) * q.values
            errs.append(math.sqrt(g.integrate(np.abs(diff) ** 2) / g.integrate(np.abs(q.values) ** 2)))
        ratio = errs[0] / errs[1]
        return 3 <= ratio <= 5, f"errors {errs[0]:.2e}, {errs[1]:.2e}, ratio {ratio:.2f}"

    def virial():
        p = PhysParams(2, 0.5, 2.0, DEFOCUSING)
        res = []
        for J, dt in ((256, 8e-3), (512, 4e-3)):
            g = RadialGrid(J, 20.0, 2)
            u0 = RadialField.from_function(g, lambda r: np.exp(-(r**2) / 2))
            tr = evolve(u0, Schedule(dt, 1.0, record_every=2), p, virial_R=5.0)
            res.append(virial_consistency(tr).max_residual)
        ratio = res[0] / res[1]
        return 3 <= ratio <= 5, f"residuals {res[0]:.2e}, {res[1]:.2e}, ratio {ratio:.2f}"

    for name, fn in (
        ("exponent identities", exponent_identity),
        ("Holder exponent spot value", lemma31_spot),
        ("virial weight constraints", weight_constraints),
        ("ground-state Pohozaev / C_opt", pohozaev),
        ("conservation", conservation),
        ("soliton refinement", soliton),
        ("virial consistency", virial),
    ):
        results.append(_check(name, fn))
    return results


# --------------------------------------------------------------------------
# entry point


def _exponents_cmd(args) -> int:
    try:
        params = PhysParams(args.N, args.b, args.alpha, args.sign)
        out = {"N": params.N, "b": params.b, "alpha": params.alpha, "sign": params.sign}
        out.update(critical_exponents(params).as_dict())
        out["regime"] = classify_regime(params)
        out.update(lemma31_feasible(params.b, params.alpha).as_dict("lemma31_"))
        try:
            out.update(appendix_feasible(params).as_dict("appendix_"))
        except ValueError as exc:
            out["appendix_feasible"] = False
            out["appendix_reason"] = str(exc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_jsonable(out), sort_keys=True))
    return 0


def _groundstate_cmd(args) -> int:
    try:
        params = PhysParams(args.N, args.b, args.alpha)
        grid = RadialGrid(args.points, args.r_max, params.N)
        prof = cached_ground_state(params, grid, args.tol)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        path = Path(args.out)
        write_profile(path, prof)
        sidecar = path.with_suffix(".json")
        sidecar.write_text(json.dumps(_jsonable(prof.scalars()), indent=2, sort_keys=True) + "\n")
        print(json.dumps(_jsonable({"csv": str(path), "json": str(sidecar), "cache": str(cache_path(params))})))
    else:
        print("# " + json.dumps(_jsonable(prof.scalars()), sort_keys=True))
        print("r,Q")
        np.savetxt(sys.stdout, np.column_stack([prof.grid.r, prof.samples]), fmt="%.17g", delimiter=",")
    return 0


def _run_cmd(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.output:
            cfg = replace(cfg, output=replace(cfg.output, directory=args.output))
        code, summary = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"outcome": summary["outcome"], "verdict": summary["verdict"],
                      "directory": cfg.output.directory}))
    return code


def _sweep_cmd(args) -> int:
    try:
        text = Path(args.config).read_text()
        cfg = parse_sweep(text)
        if args.workers:
            cfg = replace(cfg, workers=args.workers)
        rows = sweep(cfg)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"{len(rows)} rows written to {Path(cfg.base.output.directory) / 'sweep.csv'}")
    return 0


def _check_cmd(args) -> int:
    results = run_checks(tampered_blend() if args.tamper_phi else None)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.value}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inls", description="Radial inhomogeneous NLS laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="critical exponents and feasibility reports as JSON")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sign", default=FOCUSING, choices=(FOCUSING, DEFOCUSING))
    p.set_defaults(func=_exponents_cmd)

    p = sub.add_parser("groundstate", help="solve (or load) the ground state and emit it as CSV")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--points", type=int, default=4096)
    p.add_argument("--r-max", dest="r_max", type=float, default=20.0)
    p.add_argument("--out", help="write CSV here plus a .json sidecar instead of printing")
    p.set_defaults(func=_groundstate_cmd)

    p = sub.add_parser("run", help="evolve one configuration")
    p.add_argument("config")
    p.add_argument("--output", help="override output.directory")
    p.set_defaults(func=_run_cmd)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("config")
    p.add_argument("--workers", type=int, help="override sweep.workers")
    p.set_defaults(func=_sweep_cmd)

    p = sub.add_parser("check", help="reduced-resolution self-check suite")
    p.add_argument("--tamper-phi", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=_check_cmd)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
