"""Bounded reward distributions on [0, 1] and the bandit environment built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np
from scipy import integrate, special

# numeric codes shared with the compiled simulation kernel
BERNOULLI, BETA, TWO_POINT, UNIFORM = 0, 1, 2, 3


class ArmDistribution:
    """Base class for a reward law supported on ``[0, 1]``.

    Subclasses are frozen dataclasses. Every draw consumes random numbers in a
    fixed pattern so that the compiled kernel in :mod:`ldpbandit.harness`
    reproduces the same stream.
    """

    variant: ClassVar[str]
    code: ClassVar[int]

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        raise NotImplementedError

    def mgf(self, epsilon: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def params(self) -> dict:
        raise NotImplementedError

    def kernel_params(self) -> tuple[float, float, float]:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"variant": self.variant, "params": self.params}


def _check_unit(name, value):
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Bernoulli(ArmDistribution):
    mu: float

    variant: ClassVar[str] = "bernoulli"
    code: ClassVar[int] = BERNOULLI

    def __post_init__(self):
        _check_unit("mu", self.mu)

    @property
    def mean(self):
        return float(self.mu)

    @property
    def variance(self):
        return self.mu * (1.0 - self.mu)

    def mgf(self, epsilon):
        return (1.0 - self.mu) + self.mu * math.exp(epsilon)

    def sample(self, rng):
        return 1.0 if rng.random() < self.mu else 0.0

    def sample_many(self, rng, size):
        return (rng.random(size) < self.mu).astype(float)

    @property
    def params(self):
        return {"mu": self.mu}

    def kernel_params(self):
        return (self.mu, 0.0, 0.0)


@dataclass(frozen=True)
class Beta(ArmDistribution):
    alpha: float
    beta: float

    variant: ClassVar[str] = "beta"
    code: ClassVar[int] = BETA

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self):
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))

    def mgf(self, epsilon):
        # 1 + E[expm1(eps R)]; the x^(a-1) (1-x)^(b-1) weight is handled by QUADPACK's
        # algebraic-singularity rule, so endpoint singularities cost no accuracy
        if epsilon == 0:
            return 1.0
        value, _ = integrate.quad(
            lambda x: math.expm1(epsilon * x),
            0.0,
            1.0,
            weight="alg",
            wvar=(self.alpha - 1.0, self.beta - 1.0),
            epsabs=0.0,
            epsrel=1e-10,
            limit=200,
        )
        return 1.0 + value / math.exp(special.betaln(self.alpha, self.beta))

    def sample(self, rng):
        return float(rng.beta(self.alpha, self.beta))

    def sample_many(self, rng, size):
        return rng.beta(self.alpha, self.beta, size)

    @property
    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}

    def kernel_params(self):
        return (self.alpha, self.beta, 0.0)


@dataclass(frozen=True)
class TwoPoint(ArmDistribution):
    """Reward ``hi`` with probability ``p_hi``, otherwise ``lo``."""

    lo: float
    hi: float
    p_hi: float = 0.5

    variant: ClassVar[str] = "two_point"
    code: ClassVar[int] = TWO_POINT

    def __post_init__(self):
        _check_unit("lo", self.lo)
        _check_unit("hi", self.hi)
        _check_unit("p_hi", self.p_hi)
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got lo={self.lo}, hi={self.hi}")

    @property
    def mean(self):
        return self.p_hi * self.hi + (1.0 - self.p_hi) * self.lo

    @property
    def variance(self):
        d = self.hi - self.lo
        return self.p_hi * (1.0 - self.p_hi) * d * d

    def mgf(self, epsilon):
        return (1.0 - self.p_hi) * math.exp(epsilon * self.lo) + self.p_hi * math.exp(epsilon * self.hi)

    def sample(self, rng):
        return self.hi if rng.random() < self.p_hi else self.lo

    def sample_many(self, rng, size):
        return np.where(rng.random(size) < self.p_hi, self.hi, self.lo)

    @property
    def params(self):
        return {"lo": self.lo, "hi": self.hi, "p_hi": self.p_hi}

    def kernel_params(self):
        return (self.lo, self.hi, self.p_hi)


@dataclass(frozen=True)
class UniformInterval(ArmDistribution):
    lo: float = 0.0
    hi: float = 1.0

    variant: ClassVar[str] = "uniform"
    code: ClassVar[int] = UNIFORM

    def __post_init__(self):
        _check_unit("lo", self.lo)
        _check_unit("hi", self.hi)
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got lo={self.lo}, hi={self.hi}")

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def variance(self):
        d = self.hi - self.lo
        return d * d / 12.0

    def mgf(self, epsilon):
        if epsilon == 0:
            return 1.0
        x = epsilon * (self.hi - self.lo)
        # (e^{eps hi} - e^{eps lo}) / (eps (hi - lo)), written to stay accurate as eps -> 0
        return math.exp(epsilon * self.lo) * math.expm1(x) / x

    def sample(self, rng):
        return self.lo + (self.hi - self.lo) * rng.random()

    def sample_many(self, rng, size):
        return self.lo + (self.hi - self.lo) * rng.random(size)

    @property
    def params(self):
        return {"lo": self.lo, "hi": self.hi}

    def kernel_params(self):
        return (self.lo, self.hi, 0.0)


VARIANTS: dict[str, type[ArmDistribution]] = {
    cls.variant: cls for cls in (Bernoulli, Beta, TwoPoint, UniformInterval)
}


def distribution_from_dict(spec: dict) -> ArmDistribution:
    """Build a distribution from ``{"variant": ..., "params": {...}}``."""
    try:
        cls = VARIANTS[spec["variant"]]
    except KeyError:
        raise ValueError(f"unknown arm variant {spec.get('variant')!r}; expected one of {sorted(VARIANTS)}") from None
    return cls(**spec.get("params", {}))


def sample(dist: ArmDistribution, rng: np.random.Generator) -> float:
    return dist.sample(rng)


def mean(dist: ArmDistribution) -> float:
    return dist.mean


def variance(dist: ArmDistribution) -> float:
    return dist.variance


def mgf(dist: ArmDistribution, epsilon: float) -> float:
    """Moment generating function ``E[exp(epsilon * R)]`` for finite ``epsilon >= 0``."""
    if not (math.isfinite(epsilon) and epsilon >= 0):
        raise ValueError(f"mgf needs a finite non-negative epsilon, got {epsilon}")
    return dist.mgf(epsilon)


def jensen_gap(dist: ArmDistribution, epsilon: float) -> float:
    """``E[exp(eps R)] - exp(eps E[R])``; non-negative by convexity."""
    return mgf(dist, epsilon) - math.exp(epsilon * dist.mean)


@dataclass(frozen=True)
class BanditEnvironment:
    """An ordered collection of arms.

    Single-arm environments are allowed for simulation; the regret-bound
    calculators additionally require at least two arms and a strictly
    positive minimum gap.
    """

    arms: tuple[ArmDistribution, ...]
    means: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arms = tuple(self.arms)
        if not arms:
            raise ValueError("environment needs at least one arm")
        object.__setattr__(self, "arms", arms)
        means = np.array([a.mean for a in arms], dtype=float)
        means.flags.writeable = False
        object.__setattr__(self, "means", means)

    def __len__(self):
        return len(self.arms)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def best_mean(self) -> float:
        return float(self.means.max())

    @property
    def optimal_arm(self) -> int:
        """Lowest index among the arms attaining the maximal mean."""
        return int(np.argmax(self.means))

    @property
    def gaps(self) -> np.ndarray:
        return self.best_mean - self.means

    @property
    def delta_min(self) -> float:
        """Smallest gap among the arms other than :attr:`optimal_arm` (``inf`` for one arm)."""
        others = np.delete(self.gaps, self.optimal_arm)
        return float(others.min()) if others.size else math.inf

    @property
    def delta_max(self) -> float:
        return float(self.gaps.max())

    @property
    def has_tied_optimum(self) -> bool:
        return self.n_arms > 1 and self.delta_min == 0.0

    def to_groups(self) -> list[dict]:
        """Run-length encode the arm list into ``{variant, params, count}`` groups."""
        groups: list[dict] = []
        for arm in self.arms:
            if groups and groups[-1]["variant"] == arm.variant and groups[-1]["params"] == arm.params:
                groups[-1]["count"] += 1
            else:
                groups.append({"variant": arm.variant, "params": dict(arm.params), "count": 1})
        return groups

    @classmethod
    def from_groups(cls, groups: Sequence[dict]) -> "BanditEnvironment":
        arms = []
        for g in groups:
            count = int(g.get("count", 1))
            if count < 1:
                raise ValueError(f"arm group count must be positive, got {count}")
            arms.extend([distribution_from_dict(g)] * count)
        return cls(tuple(arms))
