"""Ground state of  ΔQ - Q + |x|^{-b}|Q|^α Q = 0  by amplitude shooting.

The radial ODE  Q'' + (N-1)Q'/r = Q - r^{-b}|Q|^α Q  is started off the origin
with a truncated series (the r^{-b} forcing makes r = 0 a weak singularity) and
integrated outward with fixed-step RK4.  An amplitude that is too small turns
back up before reaching zero; one that is too large crosses zero.  Bisection
between the two isolates the decaying solution.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numba
import numpy as np
from scipy.interpolate import CubicHermiteSpline

from inls.exponents import FOCUSING, PhysParams, two_star, _q, INF
from inls.field import RadialField, RadialGrid, kinetic, mass, potential

log = logging.getLogger(__name__)

GROWS, CROSSES_ZERO, DECAYS = "grows", "crosses_zero", "decays"
_CODES = {0: GROWS, 1: CROSSES_ZERO, 2: DECAYS}

SHOOT_RADIUS = 20.0
SHOOT_STEP = 1e-4
START_FRACTION = 1e-4
SCAN_POWERS = range(-10, 11)
# relative gap between the bracketing trajectories beyond which the shooting
# profile is replaced by the far-field tail
RELIABLE_GAP = 1e-4


class GroundStateError(RuntimeError):
    pass


def local_series(a: float, r: float, params: PhysParams) -> tuple[float, float]:
    """Q(r), Q'(r) from the two leading terms of the expansion at the origin."""
    if r <= 0 or a <= 0:
        raise ValueError(f"need r > 0 and a > 0, got r={r}, a={a}")
    return _series(a, r, params.N, params.b, params.alpha)


@numba.njit(cache=True)
def _series(a, r, N, b, alpha):
    c1 = a / (2.0 * N)
    c2 = a ** (alpha + 1.0) / ((2.0 - b) * (N - b))
    q = a + c1 * r * r - c2 * r ** (2.0 - b)
    dq = 2.0 * c1 * r - (2.0 - b) * c2 * r ** (1.0 - b)
    return q, dq


@numba.njit(cache=True)
def _series_start(a, r, N, b, alpha):
    """Five-term expansion used to start the integration.

    Beyond the two published orders it adds the r^{2(2-b)}, r^{4-b} and r^4
    terms.  Without them the O(r^2) slope error at r0 excites the singular
    homogeneous solution and shifts the profile by about 1e-6.
    """
    s = 2.0 - b
    c1 = a / (2.0 * N)
    c2 = a ** (alpha + 1.0) / (s * (N - b))
    lin = (alpha + 1.0) * a**alpha
    c3 = lin * c2 / (2.0 * s * (2.0 * s + N - 2.0))
    c4 = -(c2 + lin * c1) / ((s + 2.0) * (s + N))
    c5 = c1 / (4.0 * (N + 2.0))
    q = a + c1 * r * r - c2 * r**s + c3 * r ** (2.0 * s) + c4 * r ** (s + 2.0) + c5 * r**4
    dq = (2.0 * c1 * r - s * c2 * r ** (s - 1.0) + 2.0 * s * c3 * r ** (2.0 * s - 1.0)
          + (s + 2.0) * c4 * r ** (s + 1.0) + 4.0 * c5 * r**3)
    return q, dq


@numba.njit(cache=True)
def _rhs(r, q, p, N, b, alpha):
    return p, q - r ** (-b) * abs(q) ** alpha * q - (N - 1.0) * p / r


@numba.njit(cache=True)
def _rk4(r, q, p, dr, N, b, alpha):
    k1q, k1p = _rhs(r, q, p, N, b, alpha)
    k2q, k2p = _rhs(r + 0.5 * dr, q + 0.5 * dr * k1q, p + 0.5 * dr * k1p, N, b, alpha)
    k3q, k3p = _rhs(r + 0.5 * dr, q + 0.5 * dr * k2q, p + 0.5 * dr * k2p, N, b, alpha)
    k4q, k4p = _rhs(r + dr, q + dr * k3q, p + dr * k3p, N, b, alpha)
    q = q + dr * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
    p = p + dr * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
    return q, p


@numba.njit(cache=True)
def _classify(a, N, b, alpha, r0, r_max, dr):
    q, p = _series_start(a, r0, N, b, alpha)
    n = int((r_max - r0) / dr)
    r = r0
    for _ in range(n):
        q, p = _rk4(r, q, p, dr, N, b, alpha)
        r += dr
        if not (np.isfinite(q) and np.isfinite(p)):
            return 0, r
        if q <= 0.0:
            return 1, r
        if p > 0.0:
            return 0, r
    return 2, r


@numba.njit(cache=True)
def _trajectory(a, N, b, alpha, r0, r_max, dr):
    n = int((r_max - r0) / dr)
    rs = np.empty(n + 1)
    qs = np.empty(n + 1)
    ps = np.empty(n + 1)
    q, p = _series_start(a, r0, N, b, alpha)
    r = r0
    rs[0], qs[0], ps[0] = r, q, p
    for i in range(1, n + 1):
        q, p = _rk4(r, q, p, dr, N, b, alpha)
        r = r0 + i * dr
        rs[i], qs[i], ps[i] = r, q, p
    return rs, qs, ps


def shoot(a: float, params: PhysParams, r_max: float = SHOOT_RADIUS, step: float = SHOOT_STEP) -> str:
    """Classify the outward solution with Q(0) = a.

    ``grows``: Q' turns positive while Q > 0 (or the integration overflows);
    ``crosses_zero``: Q reaches zero first; ``decays``: neither event before r_max.
    """
    if a <= 0:
        raise ValueError(f"amplitude must be positive, got {a}")
    code, _ = _classify(float(a), float(params.N), float(params.b), float(params.alpha),
                        START_FRACTION * r_max, float(r_max), float(step))
    return _CODES[code]


@dataclass
class GroundStateProfile:
    params: PhysParams
    amplitude: float
    grid: RadialGrid
    samples: np.ndarray
    massQ: float
    kineticQ: float
    potentialQ: float
    c_opt: float
    threshold_energy: Optional[float]
    threshold_gradient: Optional[float]
    tol: float = 1e-12
    reliable_radius: float = math.nan
    tail_mismatch: float = math.nan
    bracket: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def field(self) -> RadialField:
        return RadialField(self.grid, self.samples.astype(complex))

    def scalars(self) -> dict:
        p = self.params
        return {
            "N": p.N,
            "b": p.b,
            "alpha": p.alpha,
            "amplitude": self.amplitude,
            "J": self.grid.J,
            "r_max": self.grid.r_max,
            "tol": self.tol,
            "grid_signature": self.grid.signature,
            "massQ": self.massQ,
            "kineticQ": self.kineticQ,
            "potentialQ": self.potentialQ,
            "c_opt": self.c_opt,
            "threshold_energy": self.threshold_energy,
            "threshold_gradient": self.threshold_gradient,
            "reliable_radius": self.reliable_radius,
            "tail_mismatch": self.tail_mismatch,
        }


def _bracket(params: PhysParams, r_shoot: float) -> tuple[float, float]:
    prev_a, prev_c = None, None
    for k in SCAN_POWERS:
        a = 2.0**k
        c = shoot(a, params, r_shoot)
        if c == DECAYS:
            return a, a
        if prev_c == GROWS and c == CROSSES_ZERO:
            return prev_a, a
        prev_a, prev_c = a, c
    raise GroundStateError(
        f"no grows/crosses_zero bracket for amplitudes 2^-10..2^10 at {params}"
    )


def find_amplitude(params: PhysParams, tol: float = 1e-12, r_shoot: float = SHOOT_RADIUS):
    """Bisect the shooting amplitude; returns (lo, hi) with lo growing, hi crossing."""
    lo, hi = _bracket(params, r_shoot)
    if lo == hi:
        return lo, hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        c = shoot(mid, params, r_shoot)
        if c == GROWS:
            lo = mid
        elif c == CROSSES_ZERO:
            hi = mid
        else:
            return mid, mid
    # the classification must stay ordered across the final bracket
    if shoot(lo, params, r_shoot) != GROWS or shoot(hi, params, r_shoot) != CROSSES_ZERO:
        raise GroundStateError("shooting classification is not monotone across the bracket")
    return lo, hi


def _reliable_profile(params: PhysParams, lo: float, hi: float, r_shoot: float):
    args = (float(params.N), float(params.b), float(params.alpha), START_FRACTION * r_shoot,
            float(r_shoot), SHOOT_STEP)
    r, q_lo, p_lo = _trajectory(lo, *args)
    _, q_hi, p_hi = _trajectory(hi, *args)
    q = 0.5 * (q_lo + q_hi)
    p = 0.5 * (p_lo + p_hi)
    with np.errstate(invalid="ignore", over="ignore"):
        bad = ~np.isfinite(q_lo) | ~np.isfinite(q_hi) | (q_hi <= 0) | (p_lo > 0) | (p_hi > 0)
        bad |= np.abs(q_hi - q_lo) > RELIABLE_GAP * np.abs(q)
    stop = int(np.argmax(bad)) if bad.any() else len(r)
    # leave a margin so the tail is attached well before the trajectories part
    stop = max(int(stop * 0.95), 10)
    return r[:stop], q[:stop], p[:stop]


def _tail(r: np.ndarray, N: int, r_rel: float, q_rel: float) -> np.ndarray:
    c = q_rel * r_rel ** ((N - 1) / 2) * math.exp(r_rel)
    return c * r ** (-(N - 1) / 2) * np.exp(-r)


def resample(params: PhysParams, a: float, r_s, q_s, p_s, grid: RadialGrid) -> np.ndarray:
    r = grid.r
    out = np.empty_like(r)
    r0, r_rel = r_s[0], r_s[-1]
    inner = r < r0
    outer = r > r_rel
    mid = ~(inner | outer)
    for j in np.nonzero(inner)[0]:
        out[j] = _series_start(a, r[j], float(params.N), float(params.b), float(params.alpha))[0]
    out[mid] = CubicHermiteSpline(r_s, q_s, p_s)(r[mid])
    out[outer] = _tail(r[outer], params.N, r_rel, q_s[-1])
    return out


def gn_exponents(params: PhysParams) -> tuple[float, float]:
    """Exponents of ‖f‖_{L2} and ‖∇f‖_{L2} in the weighted Gagliardo-Nirenberg inequality."""
    N, b, a = params.N, params.b, params.alpha
    return (4 - 2 * b - (N - 2) * a) / 2, (N * a + 2 * b) / 2


def _sigma_c(params: PhysParams) -> Optional[float]:
    N, b, a = params.N, params.b, params.alpha
    denom = N * a - 4 + 2 * b
    return None if denom == 0 else (4 - 2 * b - (N - 2) * a) / denom


def solve_ground_state(
    params: PhysParams,
    tol: float = 1e-12,
    grid: Optional[RadialGrid] = None,
    r_shoot: float = SHOOT_RADIUS,
) -> GroundStateProfile:
    ts = two_star(params.N, params.b)
    if not (0 <= params.b < min(2, params.N)) or (ts is not INF and _q(params.alpha) >= ts):
        raise ValueError(f"ground state needs 0 <= b < min(2,N) and 0 < alpha < 2*: {params}")
    if grid is None:
        grid = RadialGrid(J=4096, r_max=20.0, N=params.N)
    if grid.N != params.N:
        raise ValueError("grid dimension does not match params")
    lo, hi = find_amplitude(params, tol, r_shoot)
    a = 0.5 * (lo + hi)
    r_s, q_s, p_s = _reliable_profile(params, lo, hi, r_shoot)
    samples = resample(params, a, r_s, q_s, p_s, grid)

    # local decay rate at the junction versus the e^{-r} r^{-(N-1)/2} ansatz
    rate = p_s[-1] / q_s[-1]
    ansatz_rate = -1.0 - (params.N - 1) / (2 * r_s[-1])
    tail_mismatch = abs(rate - ansatz_rate)
    if tail_mismatch > 0.05:
        log.warning("shooting tail decay rate %.4g differs from ansatz %.4g", rate, ansatz_rate)

    u = RadialField(grid, samples)
    m, k, pot = mass(u), kinetic(u), potential(u, params)
    prof = GroundStateProfile(
        params=params, amplitude=a, grid=grid, samples=samples, massQ=m, kineticQ=k, potentialQ=pot,
        c_opt=math.nan, threshold_energy=None, threshold_gradient=None, tol=tol,
        reliable_radius=float(r_s[-1]), tail_mismatch=float(tail_mismatch), bracket=(lo, hi),
    )
    prof.c_opt = gn_constant(prof)[0]
    if params.sign == FOCUSING and _sigma_c(params) is not None:
        prof.threshold_energy, prof.threshold_gradient = threshold_quantities(prof)
    return prof


def profile_on_grid(profile: GroundStateProfile, grid: RadialGrid) -> np.ndarray:
    """Q on another grid (re-runs the final trajectories; the amplitude is kept)."""
    lo, hi = profile.bracket
    r_s, q_s, p_s = _reliable_profile(profile.params, lo, hi, SHOOT_RADIUS)
    return resample(profile.params, profile.amplitude, r_s, q_s, p_s, grid)


def pohozaev_report(profile: GroundStateProfile) -> tuple[float, float]:
    N, b, a = profile.params.N, profile.params.b, profile.params.alpha
    top = 4 - 2 * b - (N - 2) * a
    c1 = top / (N * a + 2 * b)
    c2 = top / (2 * (a + 2))
    m = profile.massQ
    return abs(m - c1 * profile.kineticQ) / m, abs(m - c2 * profile.potentialQ) / m


def gn_constant(profile: GroundStateProfile) -> tuple[float, float, float]:
    p = profile.params
    em, ek = gn_exponents(p)
    m, k, pot = profile.massQ, profile.kineticQ, profile.potentialQ
    c_direct = pot / (m ** (em / 2) * k ** (ek / 2))
    pref = 2 * (p.alpha + 2) / (p.N * p.alpha + 2 * p.b)
    power = (p.N * p.alpha - 4 + 2 * p.b) / 2
    sc = _sigma_c(p)
    if sc is None:
        # mass-critical line: the printed form degenerates, use its Pohozaev equivalent
        c_closed = pref * k ** (1 - ek / 2) * m ** (-em / 2)
    else:
        c_closed = pref * (math.sqrt(k) * m ** (sc / 2)) ** (-power)
    return c_direct, c_closed, abs(c_direct - c_closed) / c_closed


def threshold_quantities(profile: GroundStateProfile) -> tuple[float, float]:
    p = profile.params
    if p.sign != FOCUSING:
        raise ValueError("threshold quantities exist only for the focusing equation")
    sc = _sigma_c(p)
    if sc is None:
        raise ValueError("sigma_c is undefined on the mass-critical line")
    m, k = profile.massQ, profile.kineticQ
    energy = k / 2 - profile.potentialQ / (p.alpha + 2)
    return energy * m**sc, math.sqrt(k) * m ** (sc / 2)


# ---------------------------------------------------------------------------
# cache


# bumped whenever the solver changes the samples it produces
SOLVER_REVISION = 2


def cache_dir() -> Path:
    env = os.environ.get("INLS_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "inls"


def cache_path(params: PhysParams, directory: Optional[Path] = None) -> Path:
    d = cache_dir() if directory is None else Path(directory)
    return d / f"gs_N{params.N}_b{params.b:.17g}_alpha{params.alpha:.17g}.csv"


def write_profile(path, profile: GroundStateProfile) -> None:
    """CSV (r, Q) with the scalar fields as JSON on a leading '#' line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = profile.scalars()
    meta["sign"] = profile.params.sign
    meta["solver_revision"] = SOLVER_REVISION
    meta["bracket"] = list(profile.bracket)
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    with open(tmp, "w", newline="\n") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write("r,Q\n")
        np.savetxt(fh, np.column_stack([profile.grid.r, profile.samples]), fmt="%.17g", delimiter=",")
    os.replace(tmp, path)


def read_profile(path, params: Optional[PhysParams] = None) -> GroundStateProfile:
    with open(path) as fh:
        meta = json.loads(fh.readline()[1:])
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    if params is None:
        params = PhysParams(meta["N"], meta["b"], meta["alpha"], meta.get("sign", FOCUSING))
    grid = RadialGrid(J=int(meta["J"]), r_max=float(meta["r_max"]), N=int(meta["N"]))
    prof = GroundStateProfile(
        params=params, amplitude=meta["amplitude"], grid=grid, samples=data[:, 1],
        massQ=meta["massQ"], kineticQ=meta["kineticQ"], potentialQ=meta["potentialQ"],
        c_opt=meta["c_opt"], threshold_energy=meta["threshold_energy"],
        threshold_gradient=meta["threshold_gradient"], tol=meta["tol"],
        reliable_radius=meta["reliable_radius"], tail_mismatch=meta["tail_mismatch"],
        bracket=tuple(meta.get("bracket", ())),
    )
    if params.sign == FOCUSING and prof.threshold_gradient is None and _sigma_c(params) is not None:
        prof.threshold_energy, prof.threshold_gradient = threshold_quantities(prof)
    return prof


def cached_ground_state(params: PhysParams, grid: RadialGrid, tol: float = 1e-12,
                        directory: Optional[Path] = None) -> GroundStateProfile:
    """Solve, or load from the cache when (N, b, alpha, grid, tol) match."""
    path = cache_path(params, directory)
    if path.exists():
        try:
            with open(path) as fh:
                meta = json.loads(fh.readline()[1:])
            if (meta.get("grid_signature") == grid.signature and meta.get("tol") == tol
                    and meta.get("solver_revision") == SOLVER_REVISION):
                return read_profile(path, params)
        except (OSError, ValueError, KeyError) as exc:
            log.warning("ignoring unreadable cache file %s: %s", path, exc)
    profile = solve_ground_state(params, tol, grid)
    try:
        write_profile(path, profile)
    except OSError as exc:
        log.warning("could not write cache file %s: %s", path, exc)
    return profile
