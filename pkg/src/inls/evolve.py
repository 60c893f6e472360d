"""Time stepping for  i u_t + Δu = κ|x|^{-b}|u|^α u  on the radial grid.

Strang splitting, nonlinear / kinetic / nonlinear.  The nonlinear substep
i u_t = κ V |u|^α u keeps |u| fixed pointwise and is solved exactly as a phase
rotation.  The kinetic substep is Crank-Nicolson for the conservative radial
Laplacian, which is self-adjoint for the metric weight, so the Cayley
transform is unitary and the discrete mass is conserved to round-off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.linalg import lapack

from inls.exponents import PhysParams
from inls.field import (
    RadialField,
    RadialGrid,
    face_gradient,
    kinetic,
    make_cutoff_chi,
    make_weight_phi,
    mass,
    potential,
    scatter_exponent,
    singular_factor,
    virial_moment,
)

log = logging.getLogger(__name__)

COMPLETED, BLOWUP, NAN_ABORT = "completed", "blowup_detected", "nan_abort"


@dataclass(frozen=True)
class Schedule:
    dt: float
    t_final: float
    record_every: int = 1
    blowup_gradient_factor: float = 100.0

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0):
            raise ValueError(f"dt and t_final must be positive: dt={self.dt}, t_final={self.t_final}")
        if self.record_every < 1 or int(self.record_every) != self.record_every:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")

    @property
    def steps(self) -> int:
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """dt adjusted so that an integer number of steps lands on t_final."""
        return self.t_final / self.steps


def laplacian_bands(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lower, diagonal, upper) of the conservative radial Laplacian.

    L u_j = [r_{j+1/2}^{N-1}(u_{j+1}-u_j) - r_{j-1/2}^{N-1}(u_j-u_{j-1})] / (r_j^{N-1} h^2);
    the flux through r = 0 vanishes and u_J = 0 beyond r_max.
    """
    h, N = grid.h, grid.N
    face = grid.r_face ** (N - 1)  # r_{j+1/2}^{N-1}
    node = grid.r ** (N - 1) * h * h
    upper_flux = face / node
    lower_flux = np.concatenate(([0.0], face[:-1])) / node
    return lower_flux[1:], -(upper_flux + lower_flux), upper_flux[:-1]


def apply_laplacian(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    lo, d, up = laplacian_bands(grid)
    out = d * u
    out[1:] += lo * u[:-1]
    out[:-1] += up * u[1:]
    return out


class _CrankNicolson:
    """(I - iτL) u' = (I + iτL) u with τ = dt/2, factorised once."""

    def __init__(self, grid: RadialGrid, dt: float):
        lo, d, up = laplacian_bands(grid)
        tau = 0.5j * dt
        self.lo, self.d, self.up = tau * lo, 1 + tau * d, tau * up
        dl, dd, du, du2, ipiv, info = lapack.zgttrf(-tau * lo, 1 - tau * d, -tau * up)
        if info != 0:
            raise RuntimeError(f"Crank-Nicolson factorisation failed (info={info})")
        self._factors = (dl, dd, du, du2, ipiv)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        rhs = self.d * u
        rhs[1:] += self.lo * u[:-1]
        rhs[:-1] += self.up * u[1:]
        out, info = lapack.zgttrs(*self._factors, rhs)
        if info != 0:
            raise RuntimeError(f"Crank-Nicolson solve failed (info={info})")
        return out


@lru_cache(maxsize=16)
def _propagator(grid: RadialGrid, dt: float) -> _CrankNicolson:
    return _CrankNicolson(grid, dt)


def nonlinear_phase(values: np.ndarray, tau: float, params: PhysParams, v: np.ndarray) -> np.ndarray:
    """Exact flow of i u_t = κ V |u|^α u over time tau."""
    return values * np.exp(-1j * params.kappa * tau * v * np.abs(values) ** params.alpha)


def strang_step(u: RadialField, dt: float, params: PhysParams, *, kinetic_step: bool = True,
                nonlinear: bool = True) -> RadialField:
    """One step of nonlinear(dt/2) - kinetic(dt) - nonlinear(dt/2).

    Raises FloatingPointError when the step produces non-finite values.
    """
    if dt == 0:
        return u
    values = u.values
    v = singular_factor(u.grid, params.b)
    if nonlinear:
        values = nonlinear_phase(values, dt / 2, params, v)
    if kinetic_step:
        values = _propagator(u.grid, dt)(values)
    if nonlinear:
        values = nonlinear_phase(values, dt / 2, params, v)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite values after Strang step")
    return RadialField(u.grid, values)


def free_propagate(u: RadialField, t: float, schedule: Schedule | float) -> RadialField:
    """Apply the Crank-Nicolson free flow over time t (t < 0 runs backwards).

    ``schedule`` supplies the step (a Schedule or a bare dt); |t| is split into
    an integer number of equal steps no longer than it.
    """
    dt = schedule.step if isinstance(schedule, Schedule) else float(schedule)
    if t == 0:
        return u
    n = max(1, math.ceil(abs(t) / dt - 1e-9))
    step = t / n
    prop = _propagator(u.grid, step)
    values = u.values
    for _ in range(n):
        values = prop(values)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite values in free propagation")
    return RadialField(u.grid, values)


def dyadic_ladder(t_final: float, base: float = 2.0) -> list[float]:
    """t = 1, base, base^2, ... <= t_final."""
    out, t = [], 1.0
    while t <= t_final * (1 + 1e-12):
        out.append(t)
        t *= base
    return out


@dataclass
class Trajectory:
    params: PhysParams
    schedule: Schedule
    grid: RadialGrid
    series: dict
    snapshots: dict
    outcome: str
    u0: RadialField
    final: RadialField
    nonlinear: bool = True
    virial_R: Optional[float] = None
    cutoff_R: tuple = ()
    dt: float = math.nan
    ladder_base: float = 2.0

    @property
    def times(self) -> np.ndarray:
        return self.series["t"]

    def snapshot(self, t: float) -> RadialField:
        return RadialField(self.grid, self.snapshots[t])

    def ladder(self) -> list[float]:
        """Snapshot times on the ladder 1, base, base^2, ..."""
        rungs = dyadic_ladder(self.schedule.t_final, self.ladder_base)
        return [t for t in sorted(self.snapshots) if any(abs(t - s) <= 1e-9 * s for s in rungs)]


def _threshold_product(k: float, m: float, params: PhysParams) -> float:
    N, b, a = params.N, params.b, params.alpha
    denom = N * a - 4 + 2 * b
    if denom == 0:
        return math.nan
    sigma_c = (4 - 2 * b - (N - 2) * a) / denom
    return math.sqrt(k) * m ** (sigma_c / 2)


def _record(u: RadialField, t: float, params: PhysParams, weight, cutoffs) -> dict:
    from inls.diagnostics import virial_rhs

    grid = u.grid
    amp2 = np.abs(u.values) ** 2
    m = mass(u)
    k = kinetic(u)
    pot = potential(u, params)
    p_sc = scatter_exponent(params)
    p_st = params.alpha + 2 + params.b
    rec = {
        "t": t,
        "mass": m,
        "kinetic": k,
        "potential": pot,
        "energy": k / 2 + params.kappa * pot / (params.alpha + 2),
        "l_scatter": grid.integrate(amp2 ** (p_sc / 2)) ** (1 / p_sc),
        "l_strichartz": grid.integrate(amp2 ** (p_st / 2)) ** (1 / p_st),
        "l4": grid.integrate(amp2**2),
        "threshold_lhs": _threshold_product(k, m, params),
        "boundary_mass": float(np.dot(grid.weights[-max(1, grid.J // 20):], amp2[-max(1, grid.J // 20):])),
    }
    if weight is not None:
        rec["virial_M"] = virial_moment(u, weight)
        rec["virial_rhs"] = virial_rhs(u, weight, params)
    for R, chi in cutoffs:
        cu = chi.apply(u)
        km, mm = kinetic(cu), mass(cu)
        rec[f"chi{R:g}_kinetic"] = km
        rec[f"chi{R:g}_mass"] = mm
        rec[f"chi{R:g}_potential"] = potential(cu, params)
        rec[f"chi{R:g}_lhs"] = _threshold_product(km, mm, params)
    return rec


def evolve(
    u0: RadialField,
    schedule: Schedule,
    params: PhysParams,
    observer: Optional[Callable] = None,
    *,
    virial_R: Optional[float] = 10.0,
    cutoff_R: Iterable[float] = (),
    snapshot_times: Optional[Iterable[float]] = None,
    nonlinear: bool = True,
    ladder_base: float = 2.0,
) -> Trajectory:
    """Integrate from u0 over [0, t_final].

    Stops early with outcome ``blowup_detected`` once the kinetic energy exceeds
    ``blowup_gradient_factor`` times its initial value, or ``nan_abort`` on
    non-finite values.  ``nonlinear=False`` runs the free equation (test mode).
    """
    grid = u0.grid
    if grid.N != params.N:
        raise ValueError("grid dimension does not match params")
    n_steps, dt = schedule.steps, schedule.step
    weight = None
    if virial_R is not None and virial_R >= 4 * grid.h:
        weight = make_weight_phi(virial_R, grid)
    cutoffs = [(R, make_cutoff_chi(R, grid)) for R in cutoff_R if R >= 4 * grid.h]
    if snapshot_times is None:
        snapshot_times = [0.0] + dyadic_ladder(schedule.t_final, ladder_base) + [schedule.t_final]
    snap_steps = {}
    for t in snapshot_times:
        n = int(round(t / dt))
        if 0 <= n <= n_steps:
            snap_steps[n] = n * dt
    v = singular_factor(grid, params.b)
    prop = _propagator(grid, dt)
    p_sc = scatter_exponent(params)

    series: dict[str, list] = {}
    snapshots: dict[float, np.ndarray] = {}
    acc = {"A": 0.0, "B": 0.0}
    last = {}

    def emit(values: np.ndarray, n: int):
        u = RadialField(grid, values)
        rec = _record(u, n * dt, params, weight, cutoffs)
        if last:
            span = rec["t"] - last["t"]
            acc["A"] += 0.5 * span * (rec["potential"] + last["potential"])
            acc["B"] += 0.5 * span * (rec["l_scatter"] ** p_sc + last["l_scatter"] ** p_sc)
        rec["morawetz_A"] = acc["A"]
        rec["morawetz_B"] = acc["B"]
        last.clear()
        last.update(rec)
        for key, val in rec.items():
            series.setdefault(key, []).append(val)
        if observer is not None:
            observer(MappingProxyType(dict(rec)))

    values = u0.values.copy()
    k0 = kinetic(u0)
    limit = schedule.blowup_gradient_factor * k0
    outcome = COMPLETED
    emit(values, 0)
    if 0 in snap_steps:
        snapshots[snap_steps[0]] = values.copy()
    n = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_steps + 1):
            if nonlinear:
                values = nonlinear_phase(values, dt / 2, params, v)
            values = prop(values)
            if nonlinear:
                values = nonlinear_phase(values, dt / 2, params, v)
            k = float(np.dot(grid.face_weights, np.abs(face_gradient(values, grid.h)) ** 2))
            if not math.isfinite(k):
                outcome = NAN_ABORT
                break
            if n in snap_steps:
                snapshots[snap_steps[n]] = values.copy()
            if n % schedule.record_every == 0 or n == n_steps:
                emit(values, n)
            if k > limit and nonlinear:
                outcome = BLOWUP
                if n % schedule.record_every != 0 and n != n_steps:
                    emit(values, n)
                break
    if outcome == NAN_ABORT:
        log.warning("non-finite values at step %d (t=%.6g)", n, n * dt)
        final = RadialField(grid, np.nan_to_num(values))
    else:
        final = RadialField(grid, values)
    bm = series.get("boundary_mass", [0.0])
    if max(bm) > 1e-6 * series["mass"][0]:
        log.info("mass near r_max reached %.3g of the total; reflections possible", max(bm) / series["mass"][0])
    return Trajectory(
        params=params,
        schedule=schedule,
        grid=grid,
        series={k: np.asarray(v) for k, v in series.items()},
        snapshots=snapshots,
        outcome=outcome,
        u0=u0,
        final=final,
        nonlinear=nonlinear,
        virial_R=weight.R if weight is not None else None,
        cutoff_R=tuple(R for R, _ in cutoffs),
        dt=dt,
        ladder_base=ladder_base,
    )
