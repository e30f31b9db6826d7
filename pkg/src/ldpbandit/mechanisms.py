"""
Bernoulli response mechanisms for bounded rewards under local differential privacy.

A mechanism maps a reward ``r`` in ``[0, 1]`` to a single bit that equals 1
with probability ``p(r)``. Three response-probability families are provided
(linear, quadratic, exponential); ``epsilon = inf`` selects the non-private
baseline ``p(r) = r`` for every family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside the domain an operation accepts."""


class MechanismKind(str, Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    EXPONENTIAL = "exponential"


def parse_epsilon(value) -> float:
    """Parse a privacy budget given as a number or the literal ``"inf"``."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "+inf"):
            return math.inf
        try:
            value = float(text)
        except ValueError:
            raise DomainError(f"epsilon must be a positive number or 'inf', got {value!r}") from None
    eps = float(value)
    if math.isnan(eps) or eps <= 0:
        raise DomainError(f"epsilon must be positive, got {eps}")
    return eps


def max_quadratic_b(epsilon: float) -> float:
    """Upper end of the admissible range ``[0, 2(e^eps - 1)]`` for the quadratic shape parameter."""
    return 2.0 * math.expm1(epsilon)


@dataclass(frozen=True)
class Mechanism:
    """An immutable Bernoulli response mechanism.

    Parameters
    ----------
    kind : MechanismKind or str
        ``"linear"``, ``"quadratic"`` or ``"exponential"``.
    epsilon : float
        Privacy budget in nats, strictly positive; ``math.inf`` gives the
        non-private baseline.
    b : float
        Linear coefficient of the quadratic family. Ignored (and normalised
        to 0) for the other families.
    """

    kind: MechanismKind
    epsilon: float
    b: float = 0.0

    def __post_init__(self):
        try:
            kind = MechanismKind(self.kind)
        except ValueError:
            raise DomainError(f"unknown mechanism kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "epsilon", parse_epsilon(self.epsilon))
        b = float(self.b)
        if kind is MechanismKind.QUADRATIC:
            if math.isnan(b) or b < 0:
                raise DomainError(f"quadratic b must be non-negative, got {b}")
            if self.private and b > max_quadratic_b(self.epsilon):
                raise DomainError(
                    f"quadratic b={b} exceeds 2(e^eps - 1)={max_quadratic_b(self.epsilon)} "
                    f"at epsilon={self.epsilon}"
                )
        else:
            b = 0.0
        object.__setattr__(self, "b", b)

    @property
    def private(self) -> bool:
        return math.isfinite(self.epsilon)

    @property
    def exp_eps(self) -> float:
        return math.exp(self.epsilon)

    @property
    def quadratic_coefficient(self) -> float:
        # e^eps - 1 - b; exactly 0.0 when b was built as math.expm1(eps)
        return math.expm1(self.epsilon) - self.b

    def p(self, r):
        return response_probability(self, r)

    def __str__(self) -> str:
        eps = "inf" if not self.private else f"{self.epsilon:g}"
        if self.kind is MechanismKind.QUADRATIC:
            return f"quadratic(b={self.b:g}, eps={eps})"
        return f"{self.kind.value}(eps={eps})"


def _check_reward(r):
    arr = np.asarray(r, dtype=float)
    if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
        bad = arr[(arr < 0) | (arr > 1) | np.isnan(arr)].ravel()[0]
        raise DomainError(f"reward must lie in [0, 1], got {bad}")
    return arr


def response_probability(mech: Mechanism, r):
    """Probability that the mechanism emits 1 given reward ``r``.

    Accepts a scalar or an array; returns the same shape. Rewards outside
    ``[0, 1]`` raise :class:`DomainError` rather than being clipped.
    """
    arr = _check_reward(r)
    if arr.ndim == 0:
        return _p_scalar(mech, float(arr))
    if not mech.private:
        out = arr.copy()
    else:
        denom = 1.0 + mech.exp_eps
        if mech.kind is MechanismKind.LINEAR:
            out = (math.expm1(mech.epsilon) * arr + 1.0) / denom
        elif mech.kind is MechanismKind.QUADRATIC:
            c = mech.quadratic_coefficient
            out = ((c * arr + mech.b) * arr + 1.0) / denom
        else:
            out = np.exp(mech.epsilon * arr) / denom
    return out


def _p_scalar(mech: Mechanism, r: float) -> float:
    # scalar path uses libm like the compiled kernel, so both draw identical bits
    if not mech.private:
        return r
    denom = 1.0 + mech.exp_eps
    if mech.kind is MechanismKind.LINEAR:
        return (math.expm1(mech.epsilon) * r + 1.0) / denom
    if mech.kind is MechanismKind.QUADRATIC:
        return ((mech.quadratic_coefficient * r + mech.b) * r + 1.0) / denom
    return math.exp(mech.epsilon * r) / denom


def perturb(mech: Mechanism, r: float, rng: np.random.Generator) -> int:
    """Privatize one reward; consumes exactly one uniform draw from ``rng``."""
    p = response_probability(mech, r)
    return 1 if rng.random() < p else 0


def perturb_many(mech: Mechanism, r, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`perturb`: one uniform per element, in order."""
    p = response_probability(mech, np.asarray(r, dtype=float))
    u = rng.random(np.shape(p))
    return (u < p).astype(np.int8)


def _grid(grid_points: int) -> np.ndarray:
    if grid_points < 1:
        raise DomainError(f"grid_points must be positive, got {grid_points}")
    return np.linspace(0.0, 1.0, int(grid_points))


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    lhs: float
    rhs: float
    witness_r: float | None = None


@dataclass(frozen=True)
class ConditionReport:
    mechanism: Mechanism
    grid_points: int
    conditions: tuple[Condition, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __iter__(self) -> Iterator[Condition]:
        return iter(self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_records(self) -> list[dict]:
        return [
            {
                "condition": c.name,
                "passed": c.passed,
                "witness_r": c.witness_r,
                "lhs": c.lhs,
                "rhs": c.rhs,
            }
            for c in self.conditions
        ]

    def to_text(self) -> str:
        lines = [f"mechanism: {self.mechanism}", f"grid_points: {self.grid_points}"]
        for c in self.conditions:
            status = "PASS" if c.passed else "FAIL"
            witness = "-" if c.witness_r is None else f"{c.witness_r:.6g}"
            lines.append(
                f"{c.name:<16} {status}  lhs={c.lhs:.12g}  rhs={c.rhs:.12g}  witness_r={witness}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# absorbs last-ulp differences between e.g. expm1(eps)+1 and exp(eps)
_BOUNDARY_TOL = 1e-12


def verify_ldp_conditions(mech: Mechanism, grid_points: int = 1001) -> ConditionReport:
    """Check the boundary and monotonicity conditions on a uniform grid.

    The three conditions are ``p(0) >= 1/(e^eps+1)``,
    ``p(1) <= e^eps/(e^eps+1)`` and ``p`` non-decreasing on the grid.
    For a non-private mechanism the boundary targets are ``0`` and ``1``.
    """
    grid = _grid(max(grid_points, 2))
    p = np.asarray(response_probability(mech, grid))
    if mech.private:
        lo_target = 1.0 / (mech.exp_eps + 1.0)
        hi_target = mech.exp_eps / (mech.exp_eps + 1.0)
    else:
        lo_target, hi_target = 0.0, 1.0

    p0, p1 = float(p[0]), float(p[-1])
    lower = Condition(
        "lower_boundary",
        p0 >= lo_target - _BOUNDARY_TOL,
        p0,
        lo_target,
        None if p0 >= lo_target - _BOUNDARY_TOL else 0.0,
    )
    upper = Condition(
        "upper_boundary",
        p1 <= hi_target + _BOUNDARY_TOL,
        p1,
        hi_target,
        None if p1 <= hi_target + _BOUNDARY_TOL else 1.0,
    )
    steps = np.diff(p)
    drops = np.flatnonzero(steps < -_BOUNDARY_TOL)
    worst = float(steps.min())
    monotone = Condition(
        "monotone",
        drops.size == 0,
        worst,
        0.0,
        None if drops.size == 0 else float(grid[drops[0] + 1]),
    )
    return ConditionReport(mech, len(grid), (lower, upper, monotone))


def worst_case_ratio(mech: Mechanism, grid_points: int = 1001) -> float:
    """Largest ``Pr(Y=y|r) / Pr(Y=y|r')`` over ``y`` in {0, 1} and grid pairs.

    Equals ``max p / min p`` for ``y=1`` and ``max(1-p) / min(1-p)`` for
    ``y=0``. A correct mechanism never exceeds ``e^eps``.
    """
    if not mech.private:
        raise DomainError("worst-case ratio is unbounded for the non-private baseline")
    p = np.asarray(response_probability(mech, _grid(grid_points)))
    q = 1.0 - p
    return float(max(p.max() / p.min(), q.max() / q.min()))
