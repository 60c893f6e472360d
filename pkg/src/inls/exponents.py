"""Exponent arithmetic for the radial inhomogeneous NLS.

Everything here is pure arithmetic on the parameters (N, b, alpha).  Identity
checks run in exact rational arithmetic: a float input is converted to the
exact binary rational it denotes, so ``sigma_c * gamma_c == 1 - gamma_c`` can be
asserted with ``==``.  Feasibility witnesses (theta, eta, epsilon, ...) are
ordinary floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Union

FOCUSING = "focusing"
DEFOCUSING = "defocusing"
SIGNS = (FOCUSING, DEFOCUSING)

REGIMES = (
    "scattering_scope_2d",
    "scattering_scope_appendix",
    "intercritical_only",
    "mass_critical",
    "mass_subcritical",
    "out_of_scope",
)

# eta is tried on a descending decade ladder; the first three rungs are the
# nominal schedule, the rest only matter within ~1e-3 of a scope boundary.
ETA_SCHEDULE = tuple(10.0 ** -k for k in range(1, 10))
EPS_START = 1e-3
EPS_HALVINGS = 60
MARGIN = 1e-6


class _Infinity:
    """Marker for an infinite Lebesgue/power exponent."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()

Exponent = Union[Fraction, _Infinity]


def _q(x) -> Fraction:
    """Exact rational value of an int, Fraction or float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


@dataclass(frozen=True)
class PhysParams:
    """Equation instance  i u_t + Δu = κ |x|^{-b}|u|^α u,  κ = +1 defocusing, -1 focusing.

    ``b = 0`` is accepted as the homogeneous limit (classical NLS), which the
    ground-state solver uses as a validation point; the exponent routines
    reject it.
    """

    N: int
    b: float
    alpha: float
    sign: str = FOCUSING

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not (0 <= self.b < min(2, self.N)):
            raise ValueError(f"b out of range: need 0 < b < min(2, N), got b={self.b!r}")
        if not (self.alpha > 0) or not math.isfinite(self.alpha):
            raise ValueError(f"alpha out of range: need alpha > 0, got {self.alpha!r}")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}, got {self.sign!r}")

    @property
    def kappa(self) -> int:
        return 1 if self.sign == DEFOCUSING else -1

    @property
    def homogeneous(self) -> bool:
        return self.b == 0


def _require_inhomogeneous(params: PhysParams) -> None:
    if params.b <= 0:
        raise ValueError("b out of range: exponent analysis needs 0 < b < min(2, N)")


@dataclass(frozen=True)
class ExponentBundle:
    gamma_c: Fraction
    sigma_c: Optional[Fraction]  # None on the mass-critical line gamma_c == 0
    two_star: Exponent
    two_lower_star: Fraction
    gamma_b: Fraction
    beta1: Fraction
    beta2: Fraction

    def as_dict(self) -> dict:
        def conv(v):
            if v is None:
                return None
            if v is INF:
                return "inf"
            return float(v)

        return {
            "gamma_c": conv(self.gamma_c),
            "sigma_c": conv(self.sigma_c),
            "two_star": conv(self.two_star),
            "two_lower_star": conv(self.two_lower_star),
            "gamma_b": conv(self.gamma_b),
            "beta1": conv(self.beta1),
            "beta2": conv(self.beta2),
        }


def two_star(N: int, b) -> Exponent:
    if N <= 2:
        return INF
    return (4 - 2 * _q(b)) / (N - 2)


def two_lower_star(N: int, b) -> Fraction:
    return (4 - 2 * _q(b)) / N


def _below(x: Fraction, bound: Exponent) -> bool:
    return bound is INF or x < bound


def morawetz_exponents(N: int, b, alpha) -> tuple[Fraction, Fraction]:
    b, a = _q(b), _q(alpha)
    denom = (N - 1) * a + 2 + 2 * b
    beta1 = max(Fraction(1, 3), 2 / denom)
    beta2 = max((2 + b) / 6, (2 + b) / denom)
    return beta1, beta2


def critical_exponents(params: PhysParams) -> ExponentBundle:
    _require_inhomogeneous(params)
    N, b, a = params.N, _q(params.b), _q(params.alpha)
    gamma_c = Fraction(N, 2) - (2 - b) / a
    # second printed form of sigma_c; the first form (1 - gamma_c)/gamma_c is
    # the cross-check used by the tests
    denom = N * a - 4 + 2 * b
    sigma_c = None if denom == 0 else (4 - 2 * b - (N - 2) * a) / denom
    beta1, beta2 = morawetz_exponents(N, b, a)
    return ExponentBundle(
        gamma_c=gamma_c,
        sigma_c=sigma_c,
        two_star=two_star(N, b),
        two_lower_star=two_lower_star(N, b),
        gamma_b=(a - 2 + b) / (a + 2 + b),
        beta1=beta1,
        beta2=beta2,
    )


def locally_well_posed(params: PhysParams) -> bool:
    """Strichartz-based local well-posedness table in H^1."""
    N, b, a = params.N, _q(params.b), _q(params.alpha)
    if b <= 0:
        return False
    if N >= 4:
        return b < 2 and _below(a, two_star(N, b))
    if N == 3:
        if b < 1:
            return _below(a, two_star(N, b))
        if b < Fraction(3, 2):
            return a < (6 - 4 * b) / (2 * b - 1)
        return False
    return b < 1  # N == 2, 2* = inf


def in_2d_scope(params: PhysParams) -> bool:
    b, a = _q(params.b), _q(params.alpha)
    return params.N == 2 and 0 < b < 1 and a > 2 - b


def in_appendix_scope(params: PhysParams) -> bool:
    N, b, a = params.N, _q(params.b), _q(params.alpha)
    lower = two_lower_star(N, b)
    if N >= 4:
        return 0 < b < 2 and lower < a < two_star(N, b)
    if N == 3:
        return 0 < b < Fraction(5, 4) and lower < a < 3 - 2 * b
    return False


def classify_regime(params: PhysParams) -> str:
    _require_inhomogeneous(params)
    if not locally_well_posed(params):
        return "out_of_scope"
    if in_2d_scope(params):
        return "scattering_scope_2d"
    if in_appendix_scope(params):
        return "scattering_scope_appendix"
    a, lower = _q(params.alpha), two_lower_star(params.N, params.b)
    if a == lower:
        return "mass_critical"
    if a < lower:
        return "mass_subcritical"
    if _below(a, two_star(params.N, params.b)):
        return "intercritical_only"
    return "out_of_scope"


def _exponent(x) -> Exponent:
    if x is INF or (isinstance(x, float) and math.isinf(x) and x > 0):
        return INF
    return _q(x)


def is_admissible_pair(q, r, N: int) -> bool:
    """Schrödinger admissibility 2/q + N/r = N/2, excluding (2, INF, 2)."""
    q, r = _exponent(q), _exponent(r)
    for name, v in (("q", q), ("r", r)):
        if v is not INF and v < 2:
            raise ValueError(f"{name} must be >= 2, got {v}")
    if q == 2 and r is INF and N == 2:
        return False
    inv_q = Fraction(0) if q is INF else 1 / q
    inv_r = Fraction(0) if r is INF else 1 / r
    return 2 * inv_q + N * inv_r == Fraction(N, 2)


@dataclass
class FeasibilityReport:
    feasible: bool
    theta: Optional[float] = None
    eta: Optional[float] = None
    epsilon: Optional[float] = None
    ratio: Optional[float] = None
    theta0: Optional[float] = None
    a1: Optional[float] = None
    b1: Optional[float] = None
    a2: Optional[float] = None
    b2: Optional[float] = None
    tau: Optional[float] = None
    limits: dict = field(default_factory=dict)
    reason: str = ""

    def as_dict(self, prefix: str = "") -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if k == "limits":
                out.update({f"{prefix}limit_{kk}": vv for kk, vv in v.items()})
            else:
                out[prefix + k] = v
        return out


def holder_theta(b: float, alpha: float, eta: float, eps: float) -> float:
    """Hölder exponent theta(eps) on the unit ball; eps = 0 gives theta_0."""
    return (2 - b - eta - 2 * alpha * eps) / (4 * alpha / (alpha + 2 + b) - 2 * alpha * eps)


def _theta_ok(theta: float, alpha: float) -> bool:
    return theta >= MARGIN and 1 - theta >= MARGIN and alpha * theta - 1 >= MARGIN


def lemma31_feasible(b: float, alpha: float, eta: Optional[float] = None) -> FeasibilityReport:
    """Find (eta, eps) with theta(eps) in (0, 1) and alpha*theta > 1.

    With ``eta`` given only that value is tried.
    """
    if not (0 < b < 2) or not (alpha > 0):
        raise ValueError(f"parameters out of scope: b={b}, alpha={alpha}")
    if b >= 1 or alpha <= 2 - b:
        return FeasibilityReport(False, reason="outside 0<b<1, alpha>2-b")
    etas = (eta,) if eta is not None else ETA_SCHEDULE
    for e in etas:
        theta0 = holder_theta(b, alpha, e, 0.0)
        eps = EPS_START
        for _ in range(EPS_HALVINGS):
            theta = holder_theta(b, alpha, e, eps)
            if _theta_ok(theta, alpha):
                return FeasibilityReport(
                    True,
                    theta=theta,
                    eta=e,
                    epsilon=eps,
                    ratio=alpha * theta / (alpha + 2 + b),
                    theta0=theta0,
                )
            eps /= 2
    theta0 = holder_theta(b, alpha, etas[-1], 0.0)
    return FeasibilityReport(
        False, eta=etas[-1], theta0=theta0, ratio=alpha * theta0 / (alpha + 2 + b),
        reason="no eta on the schedule gives theta in (0,1) with alpha*theta > 1",
    )


# Exponents for N >= 3.  ``g`` is the value of N/gamma (the Hölder exponent of
# the |x|^{-b} or |x|^{-b-1} factor) chosen on the ball or its complement.

def _a1(N, alpha, g, eps):
    return (N + 2) / 2 - g - (2 * (N - 2) * (alpha + 1) + eps * (N + 1 + (N - 2) * alpha)) / (2 * (2 + eps))


def _b1(N, alpha, g, eps):
    return g - (N + 2) / 2 + (2 * (N * alpha + N - 2) + N * alpha * eps) / (2 * (2 + eps))


def _a2_high(N, alpha, g, eps):
    return _a1(N, alpha, g, eps) + 1


def _b2_high(N, alpha, g, eps):
    return _b1(N, alpha, g, eps) - 1


def _a2_three(alpha, tau, g, eps):
    return 2.5 - g - (2 * (alpha + tau) + eps * (3 * tau + 3 - (2 - alpha))) / (2 * (2 + eps))


def _b2_three(alpha, tau, g, eps):
    return g - 2.5 + (2 * (3 * alpha + tau) + eps * (3 * tau + 3 - 3 * (2 - alpha))) / (2 * (2 + eps))


def appendix_exponents(params: PhysParams, eta: float, eps: float, tau: Optional[float] = None) -> dict:
    """a1, b1, a2, b2 on the ball (``_B``) and its complement (``_Bc``)."""
    N, b, a = params.N, float(params.b), float(params.alpha)
    out = {}
    for region, s in (("B", 1.0), ("Bc", -1.0)):
        g1 = b + s * eta
        g2 = b + 1 + s * eta
        out[f"a1_{region}"] = _a1(N, a, g1, eps)
        out[f"b1_{region}"] = _b1(N, a, g1, eps)
        if N == 3:
            out[f"a2_{region}"] = _a2_three(a, tau, g2, eps)
            out[f"b2_{region}"] = _b2_three(a, tau, g2, eps)
        else:
            out[f"a2_{region}"] = _a2_high(N, a, g2, eps)
            out[f"b2_{region}"] = _b2_high(N, a, g2, eps)
    return out


def appendix_tau(b: float, alpha: float) -> float:
    return min(0.5 * (3 - 2 * b - alpha), 0.1)


def appendix_feasible(params: PhysParams, eta: Optional[float] = None) -> FeasibilityReport:
    _require_inhomogeneous(params)
    if not in_appendix_scope(params):
        raise ValueError(
            f"parameters outside the appendix region: N={params.N}, b={params.b}, alpha={params.alpha}"
        )
    tau = appendix_tau(params.b, params.alpha) if params.N == 3 else None
    etas = (eta,) if eta is not None else ETA_SCHEDULE
    for e in etas:
        limits = appendix_exponents(params, e, 0.0, tau)
        if min(limits.values()) < MARGIN:
            continue
        eps = EPS_START
        for _ in range(EPS_HALVINGS):
            vals = appendix_exponents(params, e, eps, tau)
            if min(vals.values()) > 0:
                worst = {k: min(vals[f"{k}_B"], vals[f"{k}_Bc"]) for k in ("a1", "b1", "a2", "b2")}
                return FeasibilityReport(
                    True, eta=e, epsilon=eps, tau=tau, limits=limits, **worst
                )
            eps /= 2
    return FeasibilityReport(
        False, eta=etas[-1], tau=tau, limits=appendix_exponents(params, etas[-1], 0.0, tau),
        reason="no eta on the schedule makes all limit exponents positive",
    )
