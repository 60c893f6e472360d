"""Post-processing of trajectories: virial identity, thresholds, Morawetz growth, scattering.

None of the implicit constants C(u0, Q) of the estimates are estimated; the
reports compare growth exponents and monotonicity only.  A finite horizon
cannot certify a t -> ∞ statement, so the scattering verdict is a heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from inls.evolve import BLOWUP, Trajectory, free_propagate
from inls.exponents import FOCUSING, PhysParams, morawetz_exponents
from inls.field import (
    RadialField,
    VirialWeight,
    _same_grid,
    face_gradient,
    h1_norm,
    singular_factor,
)
from inls.groundstate import GroundStateProfile

SCATTERED, BLEW_UP, UNDECIDED = "scattered", "blew_up", "undecided"


def virial_rhs(u: RadialField, w: VirialWeight, params: PhysParams) -> float:
    """Right-hand side of dM_phi/dt for radial u.

    -∫Δ²φ|u|² + 4∫φ''|∂_r u|² + κ 2α/(α+2) ∫|x|^{-b}Δφ|u|^{α+2}
    + κ 4b/(α+2) ∫|x|^{-b-2}(x·∇φ)|u|^{α+2}
    """
    grid = _same_grid(u, w)
    amp2 = np.abs(u.values) ** 2
    grad2 = np.abs(face_gradient(u.values, grid.h)) ** 2
    nl = singular_factor(grid, params.b) * amp2 ** ((params.alpha + 2) / 2)
    a, k = params.alpha, params.kappa
    t1 = -grid.integrate(w.bilap * amp2)
    t2 = 4 * float(np.dot(grid.face_weights * w.d2phi_face, grad2))
    t3 = k * 2 * a / (a + 2) * grid.integrate(w.lap * nl)
    t4 = k * 4 * params.b / (a + 2) * grid.integrate(w.dphi / grid.r * nl)
    return t1 + t2 + t3 + t4


@dataclass
class VirialReport:
    times: np.ndarray
    dM_dt: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    max_residual: float
    relative_residual: float

    def as_dict(self) -> dict:
        return {"max_residual": self.max_residual, "relative_residual": self.relative_residual,
                "points": int(len(self.times))}


def virial_consistency(trajectory: Trajectory) -> VirialReport:
    """Centered time difference of the recorded M_phi against the recorded RHS."""
    s = trajectory.series
    if "virial_M" not in s:
        raise ValueError("trajectory carries no virial data")
    t, M, rhs = s["t"], s["virial_M"], s["virial_rhs"]
    if len(t) < 3:
        raise ValueError("need at least three records")
    dM = (M[2:] - M[:-2]) / (t[2:] - t[:-2])
    res = dM - rhs[1:-1]
    scale = float(np.max(np.abs(rhs))) or 1.0
    return VirialReport(t[1:-1], dM, rhs[1:-1], res, float(np.max(np.abs(res))),
                        float(np.max(np.abs(res)) / scale))


@dataclass
class ThresholdReport:
    below_energy: bool
    below_gradient: bool
    min_margin: float
    truncated_margin: float
    delta_hat: float
    ratio_initial: float
    ratio_max: float
    holds_everywhere: bool
    R: Optional[float] = None
    truncated_by_R: dict = field(default_factory=dict)
    delta_by_R: dict = field(default_factory=dict)
    ratio_series: np.ndarray = field(default=None, repr=False)

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "ratio_series"}
        d["truncated_by_R"] = {f"{k:g}": v for k, v in self.truncated_by_R.items()}
        d["delta_by_R"] = {f"{k:g}": v for k, v in self.delta_by_R.items()}
        return d


def threshold_monitor(trajectory: Trajectory, profile: GroundStateProfile, R: float = 10.0) -> ThresholdReport:
    """Sub-threshold conditions at t = 0 and their persistence along the run.

    ``min_margin`` is the largest ρ with ‖∇u‖‖u‖^{σc} <= (1-2ρ)·threshold at all
    records.  ``truncated_margin`` is 1 - max_t of the same ratio for χ_R u,
    i.e. the truncated bound with (1-ρ) holds for every ρ below it.
    ``delta_hat`` is min_t of (‖∇(χ_R u)‖² - (Nα+2b)/(2(α+2)) P(χ_R u)) / P(χ_R u).
    """
    params = trajectory.params
    if params.sign != FOCUSING:
        raise ValueError("threshold monitor applies to focusing trajectories")
    pp = profile.params
    if (pp.N, pp.b, pp.alpha) != (params.N, params.b, params.alpha):
        raise ValueError("ground-state profile was computed for different parameters")
    if profile.threshold_gradient is None:
        raise ValueError("profile carries no threshold quantities")
    s = trajectory.series
    N, b, a = params.N, params.b, params.alpha
    sigma_c = (4 - 2 * b - (N - 2) * a) / (N * a - 4 + 2 * b)
    ratio = s["threshold_lhs"] / profile.threshold_gradient
    e0m = s["energy"][0] * s["mass"][0] ** sigma_c
    ratio_max = float(np.max(ratio))
    coeff = (N * a + 2 * b) / (2 * (a + 2))
    trunc, deltas = {}, {}
    for Rc in trajectory.cutoff_R:
        key = f"chi{Rc:g}"
        trunc[Rc] = 1.0 - float(np.max(s[f"{key}_lhs"])) / profile.threshold_gradient
        pot = s[f"{key}_potential"]
        with np.errstate(divide="ignore", invalid="ignore"):
            dl = (s[f"{key}_kinetic"] - coeff * pot) / pot
        deltas[Rc] = float(np.nanmin(dl)) if np.any(np.isfinite(dl)) else math.nan
    chosen = R if R in trunc else (min(trunc, key=lambda x: abs(x - R)) if trunc else None)
    return ThresholdReport(
        below_energy=bool(e0m < profile.threshold_energy),
        below_gradient=bool(ratio[0] < 1.0),
        min_margin=float(np.clip((1.0 - ratio_max) / 2, 0.0, 0.5)),
        truncated_margin=trunc.get(chosen, math.nan) if chosen is not None else math.nan,
        delta_hat=deltas.get(chosen, math.nan) if chosen is not None else math.nan,
        ratio_initial=float(ratio[0]),
        ratio_max=ratio_max,
        holds_everywhere=bool(np.all(ratio < 1.0)),
        R=chosen,
        truncated_by_R=trunc,
        delta_by_R=deltas,
        ratio_series=ratio,
    )


def fit_growth_exponent(t: np.ndarray, y: np.ndarray, min_points: int = 10) -> float:
    """Least-squares slope of log y against log t over the upper half of the log-time range."""
    keep = (t > 0) & (y > 0)
    t, y = t[keep], y[keep]
    if len(t) < 2:
        raise ValueError("not enough positive records for a growth fit")
    lt = np.log(t)
    mid = 0.5 * (lt[0] + lt[-1])
    sel = lt >= mid
    if sel.sum() < min_points:
        raise ValueError(f"horizon too short: {sel.sum()} records in the upper half, need {min_points}")
    return float(np.polyfit(lt[sel], np.log(y[sel]), 1)[0])


@dataclass
class MorawetzReport:
    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    fitted_exponent_A: float
    fitted_exponent_B: float
    beta1: float
    beta2: float

    @property
    def within_A(self) -> bool:
        return self.fitted_exponent_A <= self.beta1 + 0.1

    @property
    def within_B(self) -> bool:
        return self.fitted_exponent_B <= self.beta2 + 0.1

    def as_dict(self) -> dict:
        return {
            "A_final": float(self.A[-1]),
            "B_final": float(self.B[-1]),
            "fitted_exponent_A": self.fitted_exponent_A,
            "fitted_exponent_B": self.fitted_exponent_B,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "within_A": self.within_A,
            "within_B": self.within_B,
        }


def morawetz_report(trajectory: Trajectory, params: Optional[PhysParams] = None) -> MorawetzReport:
    params = trajectory.params if params is None else params
    s = trajectory.series
    beta1, beta2 = morawetz_exponents(params.N, params.b, params.alpha)
    t, A, B = s["t"], s["morawetz_A"], s["morawetz_B"]
    return MorawetzReport(t, A, B, fit_growth_exponent(t, A), fit_growth_exponent(t, B),
                          float(beta1), float(beta2))


@dataclass
class DecompositionTimes:
    t0: float
    t1: float
    window_integral: float
    mean_window_integral: float
    windows: int
    window_length: float


def decomposition_times(trajectory: Trajectory, eps: float, T: Optional[float] = None) -> DecompositionTimes:
    """Pigeonhole choice of a quiet window [t0, t1] inside [T/4, T/2].

    Windows of length eps*T^{1-β2} tile [T/4, T/2] from the left; the one with
    the smallest ∫‖u‖_p^p dt (p = α+2+b/(N-1)) wins, ties going to the earliest.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    params = trajectory.params
    s = trajectory.series
    T = float(s["t"][-1]) if T is None else float(T)
    if T > s["t"][-1] * (1 + 1e-12):
        raise ValueError(f"trajectory ends at {s['t'][-1]}, before T={T}")
    _, beta2 = morawetz_exponents(params.N, params.b, params.alpha)
    width = eps * T ** (1 - float(beta2))
    L = int(math.floor((T / 4) / width + 1e-9))
    if L < 4:
        raise ValueError(f"T={T} leaves only {L} windows of length {width:.4g} in [T/4, T/2]")
    edges = T / 4 + width * np.arange(L + 1)
    cum = np.interp(edges, s["t"], s["morawetz_B"])
    ints = np.diff(cum)
    best = float(ints.min())
    l0 = int(np.argmax(ints <= best + 1e-12 * abs(best)))
    return DecompositionTimes(
        t0=float(edges[l0]),
        t1=float(edges[l0]) + width,
        window_integral=float(ints[l0]),
        mean_window_integral=float(ints.mean()),
        windows=L,
        window_length=width,
    )


@dataclass
class ScatteringReport:
    ladder: list
    cauchy_deltas: list
    final_delta: float
    relative_final_delta: float
    monotone_tail: bool
    scatter_norm_decay: np.ndarray
    verdict: str
    t0: Optional[float] = None
    t1: Optional[float] = None

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "scatter_norm_decay"}
        d["scatter_norm_final"] = float(self.scatter_norm_decay[-1]) if len(self.scatter_norm_decay) else None
        return d


def scattering_report(trajectory: Trajectory, params: Optional[PhysParams] = None, tol: float = 0.05,
                      eps: float = 0.1) -> ScatteringReport:
    """Cauchy test for v(t) = e^{-itΔ}u(t) on the dyadic snapshot ladder."""
    params = trajectory.params if params is None else params
    ladder = trajectory.ladder()
    decay = trajectory.series.get("l_strichartz", np.array([]))
    if trajectory.outcome == BLOWUP:
        return ScatteringReport(ladder, [], math.nan, math.nan, False, decay, BLEW_UP)
    if len(ladder) < 3:
        raise ValueError(f"need at least 3 ladder snapshots, have {len(ladder)}")
    ref = h1_norm(trajectory.u0)
    pulled = [free_propagate(trajectory.snapshot(t), -t, trajectory.dt) for t in ladder]
    deltas = [h1_norm(b - a) for a, b in zip(pulled, pulled[1:])]
    floor = 1e-10 * ref
    tail = deltas[-3:]
    monotone = all(y <= x + floor for x, y in zip(tail, tail[1:]))
    final = deltas[-1]
    if trajectory.outcome != "completed":
        verdict = UNDECIDED
    elif final < tol * ref and monotone:
        verdict = SCATTERED
    else:
        verdict = UNDECIDED
    t0 = t1 = None
    try:
        d = decomposition_times(trajectory, eps)
        t0, t1 = d.t0, d.t1
    except ValueError:
        pass
    return ScatteringReport(ladder, deltas, final, final / ref, monotone, decay, verdict, t0, t1)


@dataclass
class InteractionReport:
    T: float
    lhs: float
    rhs: float
    ratio: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def interaction_l4_check(trajectory: Trajectory, T: Optional[float] = None) -> InteractionReport:
    """(∫∫|u|^4)^{1/4} against sup M^{3/8} sup K^{1/8} over [0, T] (N = 3)."""
    if trajectory.params.N != 3:
        raise ValueError("the interaction Morawetz check is implemented for N = 3 only")
    s = trajectory.series
    t = s["t"]
    T = float(t[-1]) if T is None else float(T)
    sel = t <= T * (1 + 1e-12)
    tt = t[sel]
    l4 = s["l4"][sel]
    integral = float(np.sum(0.5 * np.diff(tt) * (l4[1:] + l4[:-1]))) if len(tt) > 1 else 0.0
    lhs = integral**0.25
    rhs = float(np.max(s["mass"][sel])) ** 0.375 * float(np.max(s["kinetic"][sel])) ** 0.125
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return InteractionReport(T, lhs, rhs, ratio)


def conservation_report(trajectory: Trajectory) -> dict:
    """Mass and energy drift recomputed from the stored snapshots."""
    from inls.field import functionals

    out = {"mass": [], "energy": []}
    for t in sorted(trajectory.snapshots):
        f = functionals(trajectory.snapshot(t), trajectory.params)
        out["mass"].append(f.mass)
        out["energy"].append(f.energy)
    m, e = np.array(out["mass"]), np.array(out["energy"])
    return {
        "mass_drift": float(np.max(np.abs(m - m[0])) / m[0]) if len(m) else math.nan,
        "energy_drift": float(np.max(np.abs(e - e[0])) / abs(e[0])) if len(e) and e[0] != 0 else math.nan,
    }
