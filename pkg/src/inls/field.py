"""Radial grids, complex radial fields and the static functionals evaluated on them.

The grid is half-offset, r_j = (j + 1/2) h, so |x|^{-b} is never evaluated at
the origin.  Quadrature is the midpoint rule with the metric weight
ω_{N-1} r^{N-1}; gradients live on the cell faces r_{j+1/2} = (j + 1) h with a
homogeneous Dirichlet value beyond r_max.  This pairing makes the discrete
kinetic energy exactly the quadratic form of the conservative radial Laplacian
used by the time stepper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial

from inls.exponents import PhysParams


@dataclass(frozen=True)
class RadialGrid:
    J: int
    r_max: float
    N: int = 2

    def __post_init__(self):
        if self.J < 4:
            raise ValueError(f"need at least 4 grid points, got J={self.J}")
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.N < 1:
            raise ValueError(f"bad dimension N={self.N}")

    @property
    def h(self) -> float:
        return self.r_max / self.J

    @cached_property
    def r(self) -> np.ndarray:
        return (np.arange(self.J) + 0.5) * self.h

    @cached_property
    def r_face(self) -> np.ndarray:
        """Outer cell faces r_{j+1/2}, j = 0..J-1 (the last one is r_max)."""
        return (np.arange(self.J) + 1.0) * self.h

    @property
    def sphere_measure(self) -> float:
        return 2 * math.pi ** (self.N / 2) / math.gamma(self.N / 2)

    @cached_property
    def weights(self) -> np.ndarray:
        """Midpoint quadrature weights ω r_j^{N-1} h."""
        return self.sphere_measure * self.r ** (self.N - 1) * self.h

    @cached_property
    def face_weights(self) -> np.ndarray:
        return self.sphere_measure * self.r_face ** (self.N - 1) * self.h

    @property
    def signature(self) -> str:
        return f"N{self.N}_J{self.J}_R{self.r_max:.17g}"

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.weights, f))


@dataclass(frozen=True, eq=False)
class RadialField:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.J,):
            raise ValueError(f"field has shape {v.shape}, grid expects ({self.grid.J},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: RadialGrid, f) -> "RadialField":
        return cls(grid, f(grid.r))

    def __mul__(self, c) -> "RadialField":
        return RadialField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __sub__(self, other: "RadialField") -> "RadialField":
        _same_grid(self, other)
        return RadialField(self.grid, self.values - other.values)

    def __add__(self, other: "RadialField") -> "RadialField":
        _same_grid(self, other)
        return RadialField(self.grid, self.values + other.values)


def _same_grid(*objs) -> RadialGrid:
    grid = objs[0].grid
    for o in objs[1:]:
        if o.grid != grid:
            raise ValueError(f"grid mismatch: {grid} vs {o.grid}")
    return grid


def face_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """(u_{j+1} - u_j)/h on the faces r_{j+1/2}, with u_J = 0."""
    return np.diff(values, append=0.0) / h


def node_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Centered differences in the interior, one-sided at both ends."""
    return np.gradient(values, h)


def mass(u: RadialField) -> float:
    return u.grid.integrate(np.abs(u.values) ** 2)


def kinetic(u: RadialField) -> float:
    g = face_gradient(u.values, u.grid.h)
    return float(np.dot(u.grid.face_weights, np.abs(g) ** 2))


@lru_cache(maxsize=64)
def _singular_factor(grid: RadialGrid, b: float) -> np.ndarray:
    r, h, s = grid.r, grid.h, grid.N - b
    return ((r + h / 2) ** s - (r - h / 2) ** s) / (s * r ** (grid.N - 1) * h)


def singular_factor(grid: RadialGrid, b: float) -> np.ndarray:
    """Discrete stand-in for r^{-b}: the cell average of r^{N-1-b} over r_j^{N-1}.

    Integrating the weight exactly on each cell keeps the quadrature of
    |x|^{-b} f second-order accurate; the plain midpoint rule loses to
    O(h^{2-b}) at the origin.  Away from the first few cells it equals r_j^{-b}
    up to O(h^2/r^2).
    """
    out = _singular_factor(grid, float(b))
    out.flags.writeable = False
    return out


def potential(u: RadialField, params: PhysParams) -> float:
    v = singular_factor(u.grid, params.b)
    return u.grid.integrate(v * np.abs(u.values) ** (params.alpha + 2))


def lp_norm(u: RadialField, p: float) -> float:
    return u.grid.integrate(np.abs(u.values) ** p) ** (1.0 / p)


def h1_norm(u: RadialField) -> float:
    return math.sqrt(mass(u) + kinetic(u))


def scatter_exponent(params: PhysParams) -> float:
    """Lebesgue exponent α + 2 + b/(N-1) of the Morawetz space-time norm."""
    return params.alpha + 2 + params.b / (params.N - 1)


@dataclass(frozen=True)
class Functionals:
    mass: float
    kinetic: float
    potential: float
    energy: float
    l_scatter: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def functionals(u: RadialField, params: PhysParams) -> Functionals:
    if u.grid.N != params.N:
        raise ValueError(f"grid dimension {u.grid.N} does not match N={params.N}")
    m, k, p = mass(u), kinetic(u), potential(u, params)
    return Functionals(
        mass=m,
        kinetic=k,
        potential=p,
        energy=k / 2 + params.kappa * p / (params.alpha + 2),
        l_scatter=lp_norm(u, scatter_exponent(params)),
    )


# ---------------------------------------------------------------------------
# virial weight and cutoff


# Degree-7 Hermite blend on 1 <= rho <= 2 joining rho^2 (value, slope, second
# and third derivative 1, 2, 2, 0) to the constant 2 (2, 0, 0, 0).
PHI_BLEND = Polynomial([-62.0, 320.0, -688.0, 800.0, -540.0, 212.0, -45.0, 4.0])

# 7th-order smoothstep S(x) = 35x^4 - 84x^5 + 70x^6 - 20x^7 on 0 <= x <= 1.
SMOOTHSTEP = Polynomial([0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0])

TOL = 1e-12


class WeightConstraintError(RuntimeError):
    """A blend polynomial violates the constraints the virial argument relies on."""


def _radial_derived(d: list[np.ndarray], r: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Laplacian and bi-Laplacian of a radial profile from its derivatives d[0..4]."""
    f1, f2, f3, f4 = d[1], d[2], d[3], d[4]
    lap = f2 + (N - 1) * f1 / r
    lap1 = f3 + (N - 1) * (f2 / r - f1 / r**2)
    lap2 = f4 + (N - 1) * (f3 / r - 2 * f2 / r**2 + 2 * f1 / r**3)
    return lap, lap2 + (N - 1) * lap1 / r


def _phi_profile(rho: np.ndarray, blend: Polynomial) -> list[np.ndarray]:
    """phi and its first four derivatives at rho >= 0."""
    rho = np.asarray(rho, dtype=float)
    inner, outer = rho <= 1.0, rho >= 2.0
    mid = ~(inner | outer)
    out = [np.zeros_like(rho) for _ in range(5)]
    out[0][inner] = rho[inner] ** 2
    out[1][inner] = 2 * rho[inner]
    out[2][inner] = 2.0
    out[0][outer] = 2.0
    p = blend
    for k in range(5):
        out[k][mid] = p(rho[mid])
        p = p.deriv()
    return out


@dataclass(frozen=True, eq=False)
class VirialWeight:
    """phi_R(r) = R^2 phi(r/R) tabulated on a grid.

    ``d[k]`` holds the k-th radial derivative on the grid nodes; ``lap`` and
    ``bilap`` the Laplacian and bi-Laplacian.  ``sup_scaled[k]`` is
    sup |phi^{(k)}|, so sup |phi_R^{(k)}| = sup_scaled[k] * R^{2-k}.
    """

    R: float
    grid: RadialGrid
    blend: Polynomial
    d: tuple
    lap: np.ndarray
    bilap: np.ndarray
    sup_scaled: tuple

    @property
    def phi(self):
        return self.d[0]

    @property
    def dphi(self):
        return self.d[1]

    @property
    def d2phi(self):
        return self.d[2]

    @cached_property
    def d2phi_face(self) -> np.ndarray:
        """phi_R'' on the cell faces, where the discrete gradient lives."""
        return self.at(self.grid.r_face)["d"][2]

    def at(self, r: np.ndarray) -> dict:
        """Derivatives and Laplacians at arbitrary radii."""
        r = np.asarray(r, dtype=float)
        prof = _phi_profile(r / self.R, self.blend)
        d = [self.R ** (2 - k) * prof[k] for k in range(5)]
        lap, bilap = _radial_derived(d, r, self.grid.N)
        return {"d": d, "lap": lap, "bilap": bilap}


def _check_phi_blend(blend: Polynomial, N: int, samples: int = 1000) -> None:
    rho = np.linspace(1.0, 2.0, samples)
    d = _phi_profile(rho, blend)
    ends = [(blend.deriv(k)(1.0), blend.deriv(k)(2.0)) for k in range(4)]
    want = [(1.0, 2.0), (2.0, 0.0), (2.0, 0.0), (0.0, 0.0)]
    for k, (got, exp) in enumerate(zip(ends, want)):
        if not np.allclose(got, exp, atol=1e-9):
            raise WeightConstraintError(f"blend derivative {k} does not match at the junctions: {got}")
    lap = d[2] + (N - 1) * d[1] / rho
    checks = {
        "phi'' <= 2": d[2].max() <= 2 + TOL,
        "phi' >= 0": d[1].min() >= -TOL,
        "phi'/r <= 2": (d[1] / rho).max() <= 2 + TOL,
        "2N - lap(phi) >= 0": (2 * N - lap).min() >= -TOL,
    }
    failed = [k for k, ok in checks.items() if not ok]
    if failed:
        raise WeightConstraintError(f"virial weight blend violates {', '.join(failed)}")


def _sup_derivatives(blend: Polynomial) -> tuple:
    """Exact sup |phi^{(k)}|, k = 0..4, from the pieces and the blend's critical points."""
    inner = (1.0, 2.0, 2.0, 0.0, 0.0)  # sup over 0 <= rho <= 1 of rho^2 and its derivatives
    outer = (2.0, 0.0, 0.0, 0.0, 0.0)
    out = []
    p = blend
    for k in range(5):
        dp = p.deriv()
        crit = [x.real for x in dp.roots() if abs(x.imag) < 1e-12 and 1.0 <= x.real <= 2.0]
        top = max(abs(p(x)) for x in [1.0, 2.0, *crit])
        out.append(float(max(top, inner[k], outer[k])))
        p = dp
    return tuple(out)


def make_weight_phi(R: float, grid: RadialGrid, blend: Polynomial | None = None) -> VirialWeight:
    if R < 4 * grid.h:
        raise ValueError(f"R={R} does not resolve the blend region on h={grid.h}")
    blend = PHI_BLEND if blend is None else blend
    _check_phi_blend(blend, grid.N)
    sup_scaled = _sup_derivatives(blend)
    r = grid.r
    prof = _phi_profile(r / R, blend)
    d = tuple(R ** (2 - k) * prof[k] for k in range(5))
    lap, bilap = _radial_derived(list(d), r, grid.N)
    return VirialWeight(R=R, grid=grid, blend=blend, d=d, lap=lap, bilap=bilap, sup_scaled=sup_scaled)


def _chi_profile(rho: np.ndarray) -> list[np.ndarray]:
    rho = np.asarray(rho, dtype=float)
    out = [np.zeros_like(rho) for _ in range(3)]
    out[0][rho <= 0.5] = 1.0
    mid = (rho > 0.5) & (rho < 1.0)
    x = 2 * rho[mid] - 1
    p = SMOOTHSTEP
    for k in range(3):
        out[k][mid] = (1.0 if k == 0 else 0.0) - (2.0**k) * p(x)
        p = p.deriv()
    return out


@dataclass(frozen=True, eq=False)
class Cutoff:
    R: float
    grid: RadialGrid
    values: np.ndarray
    lap: np.ndarray
    lap_sup_scaled: float  # sup |Δχ| for R = 1

    @property
    def lap_sup(self) -> float:
        return self.lap_sup_scaled / self.R**2

    def apply(self, u: RadialField) -> RadialField:
        _same_grid(self, u)
        return RadialField(u.grid, self.values * u.values)


def make_cutoff_chi(R: float, grid: RadialGrid) -> Cutoff:
    if R < 4 * grid.h:
        raise ValueError(f"R={R} does not resolve the cutoff on h={grid.h}")
    rho = np.linspace(0.5, 1.0, 1001)
    c = _chi_profile(rho)
    lap_sup_scaled = float(np.abs(c[2] + (grid.N - 1) * c[1] / rho).max())
    c = _chi_profile(grid.r / R)
    lap = (c[2] + (grid.N - 1) * c[1] * R / grid.r) / R**2
    return Cutoff(R=R, grid=grid, values=c[0], lap=lap, lap_sup_scaled=lap_sup_scaled)


def virial_moment(u: RadialField, w: VirialWeight) -> float:
    """M_phi = 2 ∫ φ' Im(ū ∂_r u)."""
    _same_grid(u, w)
    du = node_gradient(u.values, u.grid.h)
    return 2 * u.grid.integrate(w.dphi * np.imag(np.conj(u.values) * du))


def radial_sup_ratio(u: RadialField) -> float:
    """sup r^{(N-1)/2}|u| over the discrete H^1 norm."""
    amp = np.abs(u.values)
    if not amp.any():
        raise ValueError("radial_sup_ratio is undefined for the zero field")
    top = float(np.max(u.grid.r ** ((u.grid.N - 1) / 2) * amp))
    return top / h1_norm(u)


# ---------------------------------------------------------------------------
# snapshot files


def write_snapshot(path, u: RadialField, params: PhysParams, t: float) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [
        f"# N={params.N}",
        f"# b={params.b:.17g}",
        f"# alpha={params.alpha:.17g}",
        f"# sign={params.sign}",
        f"# t={t:.17g}",
        f"# J={u.grid.J}",
        f"# h={u.grid.h:.17g}",
        f"# r_max={u.grid.r_max:.17g}",
        "r,re,im",
    ]
    body = np.column_stack([u.grid.r, u.values.real, u.values.imag])
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(header) + "\n")
        np.savetxt(fh, body, fmt="%.17g", delimiter=",")


def read_snapshot(path) -> tuple[RadialField, dict]:
    meta = {}
    header_lines = 0
    with open(path) as fh:
        for line in fh:
            header_lines += 1
            if not line.startswith("#"):
                break  # the column row r,re,im
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
    data = np.loadtxt(path, delimiter=",", skiprows=header_lines, ndmin=2)
    N, J = int(meta["N"]), int(meta["J"])
    r_max = float(meta["r_max"]) if "r_max" in meta else J * float(meta["h"])
    grid = RadialGrid(J=J, r_max=r_max, N=N)
    u = RadialField(grid, data[:, 1] + 1j * data[:, 2])
    typed = {
        "N": N,
        "b": float(meta["b"]),
        "alpha": float(meta["alpha"]),
        "sign": meta["sign"],
        "t": float(meta["t"]),
        "J": J,
        "h": float(meta["h"]),
    }
    return u, typed
