"""Model parameters, reaction terms and closed-form parameter gates.

Nondimensional reduced system (nu = 0) in the moving frame xi = x + c t::

    u'' - c u' + u (1 - lam - u + lam K v) = 0
    -c v' + lam u (1 - K v) = 0

with (u, v)(-inf) = (0, 0) and (u, v)(+inf) = (1, 1/K).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ParameterDomainError, PreconditionError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DimensionalParams:
    d: float
    alpha: float
    beta: float
    k1: float
    k2: float
    nu: float = 0.0

    def __post_init__(self):
        for name in ("d", "alpha", "beta", "k1", "k2"):
            if not getattr(self, name) > 0:
                raise ParameterDomainError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.nu >= 0:
            raise ParameterDomainError(f"nu must be >= 0, got {self.nu}")


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional parameters.

    ``lam`` is beta/alpha, ``K`` is k1/k2 and ``l`` the depression parameter of
    the lower KPP sub-wave.  ``l=None`` selects the default ``0.1 * (1 - lam)``.
    Construction does not enforce ``lam < 1``; operations that need it
    (``min_speed`` and everything downstream) raise ``ParameterDomainError``.
    """

    lam: float
    K: float = 1.0
    nu: float = 0.0
    l: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterDomainError(f"lambda must be > 0, got {self.lam}")
        if not (math.isfinite(self.K) and self.K > 0):
            raise ParameterDomainError(f"K must be > 0, got {self.K}")
        if not self.nu >= 0:
            raise ParameterDomainError(f"nu must be >= 0, got {self.nu}")
        if self.l is None:
            object.__setattr__(self, "l", 0.1 * abs(1.0 - self.lam))
        if not self.l > 0:
            raise ParameterDomainError(f"l must be > 0, got {self.l}")

    @property
    def abar(self) -> float:
        """Linear growth rate of u at the invasion-free state, 1 - lam."""
        require_subunit_lambda(self)
        return 1.0 - self.lam

    @property
    def c_star(self) -> float:
        return min_speed(self)

    @property
    def lambda_max(self) -> float:
        return lambda_gate(self)[0]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Equilibria:
    A: tuple[float, float]
    B: tuple[float, float]
    B_reduced: tuple[float, float]


@dataclass(frozen=True)
class OriginClassification:
    discriminant: float
    roots: tuple[complex, complex]
    oscillatory: bool


def require_subunit_lambda(p: ModelParams) -> None:
    if not p.lam < 1.0:
        raise ParameterDomainError(f"lambda must satisfy 0 < lambda < 1, got {p.lam}")


def require_wave_params(p: ModelParams) -> None:
    """Preconditions shared by every traveling-wave construction."""
    require_subunit_lambda(p)
    if p.nu != 0:
        raise ParameterDomainError("traveling-wave construction requires nu = 0")


def nondimensionalize(p: DimensionalParams, l: float | None = None) -> ModelParams:
    if p.alpha == 0 or p.k2 == 0:
        raise ParameterDomainError("alpha and k2 must be nonzero")
    return ModelParams(lam=p.beta / p.alpha, K=p.k1 / p.k2, nu=p.nu, l=l)


def reaction(u, v, p: ModelParams):
    """Reaction terms (f_u, f_v) of the reduced system; works on scalars and arrays."""
    f_u = u * (1.0 - p.lam - u + p.lam * p.K * v)
    f_v = p.lam * u * (1.0 - p.K * v)
    return f_u, f_v


def equilibria(p: ModelParams) -> Equilibria:
    return Equilibria(A=(0.0, 0.0), B=(1.0 - p.nu / p.K, 1.0 / p.K), B_reduced=(1.0, 1.0 / p.K))


def min_speed(p: ModelParams) -> float:
    require_subunit_lambda(p)
    return 2.0 * math.sqrt(1.0 - p.lam)


def lambda_gate(p: ModelParams) -> tuple[float, bool]:
    bound = 2.0 / (2.0 + p.K * (1.0 + SQRT2))
    return bound, bool(0.0 < p.lam <= bound)


def decay_ordering_g(c: float, p: ModelParams) -> float:
    a = 1.0 - p.lam
    return 2.0 * c * a / (c + math.sqrt(c * c + 4.0 * a))


def decay_ordering_gate(c: float, p: ModelParams) -> tuple[float, bool]:
    """Return (g, ok) with g = 2c(1-lam)/(c + sqrt(c^2 + 4(1-lam))) and ok = g >= lam K.

    g is the modulus of the slow approach rate of the upper sub-wave to 1 times c;
    ok means that rate is at least as fast as lam K / c.
    """
    cs = min_speed(p)
    if c < cs * (1.0 - 1e-12):
        raise PreconditionError(f"c = {c} is below the minimal speed {cs}")
    g = decay_ordering_g(c, p)
    return g, bool(g >= p.lam * p.K * (1.0 - 1e-12))


def classify_origin(c: float, p: ModelParams) -> OriginClassification:
    if not c > 0:
        raise PreconditionError("c must be > 0")
    a = 1.0 - p.lam
    disc = c * c - 4.0 * a
    sq = np.sqrt(complex(disc))
    roots = ((c - sq) / 2.0, (c + sq) / 2.0)
    return OriginClassification(discriminant=disc, roots=roots, oscillatory=bool(disc < 0))


def mu_minus(c: float, abar: float) -> float:
    """Slow growth exponent of a KPP front at -inf; sqrt(abar) at the critical speed."""
    disc = c * c - 4.0 * abar
    if disc < 0:
        if disc > -1e-12 * c * c:
            disc = 0.0
        else:
            raise PreconditionError(f"c = {c} below critical speed {2 * math.sqrt(abar)}")
    return (c - math.sqrt(disc)) / 2.0


def is_critical(c: float, abar: float, rtol: float = 1e-9) -> bool:
    return abs(c - 2.0 * math.sqrt(abar)) <= rtol * c
