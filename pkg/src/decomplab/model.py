"""Model specifications for the coupled risk and queueing models.

Each entity is driven by ``X(t) = c t - sum_{k <= N(t)} J_k`` with Poisson
arrivals ``N`` of rate ``lambda`` and i.i.d. positive jumps ``J``.  A
:class:`RiskModel` couples two such drivers through the deficit-coverage
rates ``(r1, r2)`` and a :class:`QueueModel` through the idle-assistance
proportions ``(rho1, rho2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import (
    DegenerateModelError,
    HypothesisError,
    InfiniteRateWithNonpositiveDriftError,
    ModelError,
    UnstableModelError,
)

WEIGHT_TOL = 1e-12


# --------------------------------------------------------------------------
# Jump laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        _require_positive("Exponential rate", self.rate)

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def transform(self, s):
        """``E exp(-s J)``; accepts real or complex arrays."""
        return self.rate / (self.rate + s)

    def transform_minus_one(self, s):
        """``E exp(-s J) - 1`` without cancellation at small ``s``."""
        return -s / (self.rate + s)

    def transform_derivative(self, s):
        return -self.rate / (self.rate + s) ** 2

    def scaled(self, c: float) -> "Exponential":
        return Exponential(self.rate / c)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_exponential(n) / self.rate


@dataclass(frozen=True)
class Erlang:
    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ModelError(f"Erlang shape must be an integer >= 1, got {self.shape}")
        _require_positive("Erlang rate", self.rate)

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def transform(self, s):
        return (self.rate / (self.rate + s)) ** self.shape

    def transform_minus_one(self, s):
        # a^k - 1 = (a - 1)(1 + a + ... + a^{k-1})
        a = self.rate / (self.rate + s)
        return (-s / (self.rate + s)) * sum(a**j for j in range(int(self.shape)))

    def transform_derivative(self, s):
        return -self.shape * self.rate**self.shape / (self.rate + s) ** (self.shape + 1)

    def scaled(self, c: float) -> "Erlang":
        return Erlang(self.shape, self.rate / c)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.standard_gamma(float(self.shape), n) / self.rate


@dataclass(frozen=True)
class HyperExponential:
    weights: tuple
    rates: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        a = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", a)
        if len(w) == 0 or len(w) != len(a):
            raise ModelError("HyperExponential needs matching, nonempty weights and rates")
        if any(p <= 0 for p in w):
            raise ModelError("HyperExponential weights must be strictly positive")
        for x in a:
            _require_positive("HyperExponential rate", x)
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise ModelError(f"HyperExponential weights sum to {math.fsum(w)!r}, not 1")

    @property
    def mean(self) -> float:
        return math.fsum(p / a for p, a in zip(self.weights, self.rates))

    def transform(self, s):
        return sum(p * a / (a + s) for p, a in zip(self.weights, self.rates))

    def transform_minus_one(self, s):
        return sum(-p * s / (a + s) for p, a in zip(self.weights, self.rates))

    def transform_derivative(self, s):
        return sum(-p * a / (a + s) ** 2 for p, a in zip(self.weights, self.rates))

    def scaled(self, c: float) -> "HyperExponential":
        return HyperExponential(self.weights, tuple(a / c for a in self.rates))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # one (component, exponential) pair of uniforms per draw keeps the
        # first n draws independent of how many are requested
        u = rng.random((n, 2))
        idx = np.searchsorted(np.cumsum(self.weights), u[:, 0], side="right")
        idx = np.minimum(idx, len(self.rates) - 1)
        return -np.log1p(-u[:, 1]) / np.asarray(self.rates)[idx]


@dataclass(frozen=True)
class Deterministic:
    size: float

    def __post_init__(self):
        _require_positive("Deterministic size", self.size)

    @property
    def mean(self) -> float:
        return self.size

    def transform(self, s):
        return np.exp(-s * self.size)

    def transform_minus_one(self, s):
        return np.expm1(-s * self.size)

    def transform_derivative(self, s):
        return -self.size * np.exp(-s * self.size)

    def scaled(self, c: float) -> "Deterministic":
        return Deterministic(self.size * c)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.size)


JumpDistribution = Union[Exponential, Erlang, HyperExponential, Deterministic]

# variants whose inverse exponent is continued analytically
CONTINUABLE = (Exponential, Erlang, HyperExponential)


def _require_positive(name: str, x) -> None:
    if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
        raise ModelError(f"{name} must be finite and > 0, got {x!r}")


# --------------------------------------------------------------------------
# Drivers and rates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoissonSpec:
    """Drifted compound Poisson driver ``c t - sum J_k``."""

    drift: float
    rate: float
    jumps: JumpDistribution

    def __post_init__(self):
        _require_positive("drift", self.drift)
        if not (math.isfinite(self.rate) and self.rate >= 0):
            raise ModelError(f"arrival rate must be finite and >= 0, got {self.rate!r}")

    @property
    def mean(self) -> float:
        return mean_drift(self)

    def scaled(self, c: float) -> "CompoundPoissonSpec":
        """Driver of ``c X``: drift and jump sizes scaled, arrival rate unchanged."""
        return CompoundPoissonSpec(self.drift * c, self.rate, self.jumps.scaled(c))


def mean_drift(spec: CompoundPoissonSpec) -> float:
    """``E X(1) = c - lambda E[J]``."""
    return spec.drift - spec.rate * spec.jumps.mean


@dataclass(frozen=True)
class ExtendedRate:
    """Nonnegative rate or the distinguished value infinity.

    Infinity is a tag, never a float sentinel; ``value`` is ``None`` for it.
    """

    value: float | None

    def __post_init__(self):
        if self.value is not None:
            v = float(self.value)
            if not math.isfinite(v) or v < 0:
                raise ModelError(f"finite rate must be in [0, inf), got {self.value!r}")
            object.__setattr__(self, "value", v)

    @classmethod
    def of(cls, x) -> "ExtendedRate":
        if isinstance(x, ExtendedRate):
            return x
        if isinstance(x, str):
            if x.strip().lower() in ("inf", "infinity", "+inf"):
                return INF
            raise ModelError(f"cannot parse rate {x!r}")
        if isinstance(x, (int, float)) and math.isinf(x) and x > 0:
            return INF
        return cls(float(x))

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    @property
    def finite(self) -> float:
        if self.value is None:
            raise ModelError("rate is infinite")
        return self.value

    def __mul__(self, other) -> "ExtendedRate":
        o = ExtendedRate.of(other)
        if (self.is_infinite and o.is_zero) or (o.is_infinite and self.is_zero):
            raise ModelError("inf * 0 is not a valid rate")
        if self.is_infinite or o.is_infinite:
            return INF
        return ExtendedRate(self.value * o.value)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "ExtendedRate":
        if not (math.isfinite(c) and c > 0):
            raise ModelError("rates may only be divided by finite positive scalars")
        return INF if self.is_infinite else ExtendedRate(self.value / c)

    def __lt__(self, other) -> bool:
        o = ExtendedRate.of(other)
        if self.is_infinite:
            return False
        return o.is_infinite or self.value < o.value

    def __le__(self, other) -> bool:
        o = ExtendedRate.of(other)
        return self == o or self < o

    def __float__(self) -> float:
        return math.inf if self.is_infinite else self.value

    def __str__(self) -> str:
        return "inf" if self.is_infinite else repr(self.value)

    def to_json(self):
        return "inf" if self.is_infinite else self.value


INF = ExtendedRate(None)


class Stability(enum.Enum):
    BOTH_POSITIVE = "BothPositive"
    FIRST_NONPOSITIVE = "FirstNonpositive"
    SECOND_NONPOSITIVE = "SecondNonpositive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RiskModel:
    spec1: CompoundPoissonSpec
    spec2: CompoundPoissonSpec
    r1: ExtendedRate
    r2: ExtendedRate

    def __post_init__(self):
        object.__setattr__(self, "r1", ExtendedRate.of(self.r1))
        object.__setattr__(self, "r2", ExtendedRate.of(self.r2))

    def with_rates(self, r1, r2) -> "RiskModel":
        return replace(self, r1=ExtendedRate.of(r1), r2=ExtendedRate.of(r2))

    def swapped(self) -> "RiskModel":
        """Same model seen from company 2 (roles and rates exchanged)."""
        return RiskModel(self.spec2, self.spec1, self.r2, self.r1)

    @property
    def degenerate_product(self) -> bool:
        """True when ``r1 r2 = 1`` (reducible to a one-dimensional problem)."""
        if self.r1.is_infinite or self.r2.is_infinite:
            return False
        return abs(self.r1.value * self.r2.value - 1.0) < 1e-12


@dataclass(frozen=True)
class QueueModel:
    spec1: CompoundPoissonSpec
    spec2: CompoundPoissonSpec
    rho1: float
    rho2: float

    def __post_init__(self):
        for name in ("rho1", "rho2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ModelError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, float(v))

    def with_rates(self, rho1, rho2) -> "QueueModel":
        return replace(self, rho1=float(rho1), rho2=float(rho2))

    def swapped(self) -> "QueueModel":
        return QueueModel(self.spec2, self.spec1, self.rho2, self.rho1)


# --------------------------------------------------------------------------
# Validation and rescaling
# --------------------------------------------------------------------------


def validate_risk(model: RiskModel) -> Stability:
    """Classify which safety-loading clause holds, or raise."""
    m1, m2 = mean_drift(model.spec1), mean_drift(model.spec2)
    for rate, m, i in ((model.r1, m1, 1), (model.r2, m2, 2)):
        if rate.is_infinite and m <= 0:
            raise InfiniteRateWithNonpositiveDriftError(
                f"r{i} = inf requires mu{i} > 0, got mu{i} = {m}"
            )
    if m1 > 0 and m2 > 0:
        return Stability.BOTH_POSITIVE
    # infinite r_i only reaches these clauses with mu_i > 0
    if m1 <= 0 and m2 + model.r1.finite * m1 > 0:
        return Stability.FIRST_NONPOSITIVE
    if m2 <= 0 and m1 + model.r2.finite * m2 > 0:
        return Stability.SECOND_NONPOSITIVE
    raise UnstableModelError(
        f"no stability clause holds for mu = ({m1}, {m2}), r = ({model.r1}, {model.r2})"
    )


def validate_queue(model: QueueModel) -> Stability:
    m1, m2 = mean_drift(model.spec1), mean_drift(model.spec2)
    if m1 > 0 and m2 > 0:
        return Stability.BOTH_POSITIVE
    if m1 <= 0 and m1 + model.rho2 * m2 > 0:
        return Stability.FIRST_NONPOSITIVE
    if m2 <= 0 and m2 + model.rho1 * m1 > 0:
        return Stability.SECOND_NONPOSITIVE
    raise UnstableModelError(
        f"no stability clause holds for mu = ({m1}, {m2}), rho = ({model.rho1}, {model.rho2})"
    )


def require_decomposition_hypotheses(model: QueueModel) -> None:
    """Hypotheses of the queue decomposition: rho1 rho2 < 1 and both drifts positive."""
    if model.rho1 * model.rho2 >= 1.0:
        raise DegenerateModelError(
            f"rho1 * rho2 = {model.rho1 * model.rho2} must be < 1"
        )
    validate_queue(model)
    if mean_drift(model.spec1) <= 0 or mean_drift(model.spec2) <= 0:
        raise HypothesisError("queue decomposition requires mu1 > 0 and mu2 > 0")


def rescale_risk(model: RiskModel, c: float) -> RiskModel:
    """Model ``(X1, c X2, c r1, r2 / c)``; survival is ``phi(x1, c x2)`` there."""
    if not (math.isfinite(c) and c > 0):
        raise ModelError(f"scale must be finite and > 0, got {c!r}")
    return RiskModel(model.spec1, model.spec2.scaled(c), model.r1 * c, model.r2 / c)


def rescale_queue(model: QueueModel, c: float) -> QueueModel:
    """Model ``(X1, c X2, c rho1, rho2 / c)``; workloads become ``(W1, c W2)``."""
    if not (math.isfinite(c) and c > 0):
        raise ModelError(f"scale must be finite and > 0, got {c!r}")
    return QueueModel(model.spec1, model.spec2.scaled(c), model.rho1 * c, model.rho2 / c)


def positive_part(x: float) -> float:
    return max(x, 0.0)


def negative_part(x: float) -> float:
    return max(-x, 0.0)
