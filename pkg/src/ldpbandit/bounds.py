"""
Privatized means, privatized gaps and problem-dependent regret upper bounds.

The TS bounds contain big-O remainders whose constants are not pinned down
analytically. They are evaluated with an explicit constant ``c0`` and the
leading logarithmic part is always reported separately, so comparisons do
not depend on that choice.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .environments import ArmDistribution, BanditEnvironment, mgf
from .mechanisms import DomainError, Mechanism, MechanismKind


class DegenerateEnvironmentError(ValueError):
    """Raised when gap-dependent bounds are requested for an environment they do not cover."""


def privacy_factor(epsilon: float) -> float:
    """Gap contraction ``(e^eps - 1) / (e^eps + 1)`` of the linear mechanism (1 at ``inf``)."""
    if math.isinf(epsilon):
        return 1.0
    return math.tanh(epsilon / 2.0)


def privatized_mean(mech: Mechanism, dist: ArmDistribution) -> float:
    """Expected output bit ``E[p(R)]`` when ``R`` follows ``dist``."""
    if not mech.private:
        raise DomainError("privatized mean is undefined at epsilon=inf; use the true mean")
    denom = mech.exp_eps + 1.0
    mu = dist.mean
    if mech.kind is MechanismKind.LINEAR:
        return (math.expm1(mech.epsilon) * mu + 1.0) / denom
    if mech.kind is MechanismKind.QUADRATIC:
        second_moment = mu * mu + dist.variance
        return (second_moment * mech.quadratic_coefficient + mech.b * mu + 1.0) / denom
    return mgf(dist, mech.epsilon) / denom


@dataclass(frozen=True)
class GapReport:
    """True and privatized gaps for every arm of an environment.

    ``privatized_gaps`` are measured from the largest privatized mean, which
    need not belong to :attr:`optimal_arm` for non-linear mechanisms.
    """

    mechanism: Mechanism
    true_means: np.ndarray
    privatized_means: np.ndarray
    optimal_arm: int
    true_gaps: np.ndarray
    privatized_gaps: np.ndarray

    @property
    def best_privatized_mean(self) -> float:
        return float(self.privatized_means.max())

    @property
    def delta_min(self) -> float:
        return float(np.delete(self.true_gaps, self.optimal_arm).min())

    @property
    def ordering_preserved(self) -> bool:
        """True when every suboptimal arm keeps a strictly positive privatized gap."""
        others = np.delete(self.privatized_gaps, self.optimal_arm)
        return bool((others > 0).all())


def _require_gaps(env: BanditEnvironment) -> None:
    if env.n_arms < 2:
        raise DegenerateEnvironmentError("regret bounds need at least two arms")
    if env.delta_min <= 0:
        raise DegenerateEnvironmentError(
            "minimum gap is zero (tied optimal arms); gap-dependent bounds are undefined"
        )


def privatized_gap(mech: Mechanism, env: BanditEnvironment) -> GapReport:
    """Compute privatized means and gaps; refuses environments with a zero minimum gap.

    At ``epsilon=inf`` the privatized quantities are the true ones.
    """
    _require_gaps(env)
    true_means = np.asarray(env.means, dtype=float)
    if mech.private:
        pm = np.array([privatized_mean(mech, arm) for arm in env.arms])
    else:
        pm = true_means.copy()
    return GapReport(
        mechanism=mech,
        true_means=true_means,
        privatized_means=pm,
        optimal_arm=env.optimal_arm,
        true_gaps=env.best_mean - true_means,
        privatized_gaps=pm.max() - pm,
    )


@dataclass(frozen=True)
class BoundReport:
    """Evaluated regret upper bound at horizon ``T``.

    ``arm_terms[i]`` is the per-arm contribution of arm ``i`` (zero for the
    optimal arm), including any per-arm constant; ``total = leading +
    constant_term``.
    """

    algorithm: str
    form: str
    gaps: GapReport
    horizon: float
    gamma: float | None
    c0: float | None
    arm_terms: np.ndarray
    constant_term: float
    constant_policy: str

    @property
    def mechanism(self) -> Mechanism:
        return self.gaps.mechanism

    @property
    def leading(self) -> float:
        return float(self.arm_terms.sum())

    @property
    def total(self) -> float:
        return self.leading + self.constant_term

    def rows(self) -> list[tuple[int, float, float, float]]:
        g = self.gaps
        return [
            (i, float(g.true_gaps[i]), float(g.privatized_gaps[i]), float(self.arm_terms[i]))
            for i in range(len(self.arm_terms))
        ]

    def footer(self) -> list[tuple[str, str]]:
        eps = self.mechanism.epsilon
        return [
            ("leading", repr(self.leading)),
            ("constant", repr(self.constant_term)),
            ("total", repr(self.total)),
            ("gamma", "" if self.gamma is None else repr(self.gamma)),
            ("c0", "" if self.c0 is None else repr(self.c0)),
            ("epsilon", "inf" if math.isinf(eps) else repr(eps)),
            ("T", repr(self.horizon)),
        ]

    def to_text(self) -> str:
        lines = [
            f"algorithm: {self.algorithm}  form: {self.form}  mechanism: {self.mechanism}",
            f"{'arm':>4} {'gap':>12} {'priv_gap':>12} {'term':>14}",
        ]
        for i, d, de, term in self.rows():
            lines.append(f"{i:>4} {d:>12.6f} {de:>12.6f} {term:>14.6f}")
        lines.append(f"sum of arm terms:     {self.leading:.6f}")
        lines.append(f"constant term:        {self.constant_term:.6f}  [{self.constant_policy}]")
        lines.append(f"total:                {self.total:.6f}")
        gamma = "-" if self.gamma is None else f"{self.gamma:g}"
        c0 = "-" if self.c0 is None else f"{self.c0:g}"
        lines.append(f"gamma={gamma} c0={c0} T={self.horizon:g}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["arm", "gap", "privatized_gap", "term"])
        for i, d, de, term in self.rows():
            w.writerow([i, repr(d), repr(de), repr(term)])
        for key, value in self.footer():
            w.writerow([key, value, "", ""])
        return buf.getvalue()


def _check_horizon(T: float) -> float:
    T = float(T)
    if not (T >= 1 and math.isfinite(T)):
        raise ValueError(f"horizon must be a finite number >= 1, got {T}")
    return T


def _suboptimal_gaps(gaps: GapReport) -> tuple[np.ndarray, np.ndarray]:
    if not gaps.ordering_preserved:
        raise DegenerateEnvironmentError(
            "privatized means reorder the arms (a suboptimal arm has privatized gap <= 0); "
            "the bound is undefined"
        )
    mask = np.ones(len(gaps.true_gaps), dtype=bool)
    mask[gaps.optimal_arm] = False
    return mask, gaps.privatized_gaps


def ts_bound(
    mech: Mechanism,
    env: BanditEnvironment,
    T: float,
    gamma: float = 0.1,
    c0: float = 1.0,
    form: str | None = None,
) -> BoundReport:
    """Thompson Sampling regret bound.

    ``form="linear"`` evaluates
    ``(1+g)^2 k^{-2} [sum_i log T / (2 D_i) + c0 N / (2 D_min)]`` with
    ``k = (e^eps-1)/(e^eps+1)``. ``form="nonlinear"`` evaluates
    ``(1+g)^2 sum_i (log T + 1) / (2 D_{i,eps}^2) D_i + c0 N``.
    By default the linear mechanism uses the linear form and the other
    families the non-linear one.
    """
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    T = _check_horizon(T)
    if form is None:
        form = "linear" if mech.kind is MechanismKind.LINEAR else "nonlinear"
    if form not in ("linear", "nonlinear"):
        raise ValueError(f"unknown bound form {form!r}")
    if form == "linear" and mech.kind is not MechanismKind.LINEAR:
        raise ValueError("the linear-form bound applies only to the linear mechanism")

    gaps = privatized_gap(mech, env)
    mask, priv = _suboptimal_gaps(gaps)
    true = gaps.true_gaps
    inflate = (1.0 + gamma) ** 2
    n = env.n_arms
    terms = np.zeros(n)
    if form == "linear":
        scale = inflate / privacy_factor(mech.epsilon) ** 2
        terms[mask] = scale * math.log(T) / (2.0 * true[mask])
        constant = scale * c0 * n / (2.0 * gaps.delta_min)
        policy = f"c0*N/(2*delta_min) scaled by the leading factor, c0={c0:g}"
    else:
        terms[mask] = inflate * (math.log(T) + 1.0) / (2.0 * priv[mask] ** 2) * true[mask]
        constant = c0 * n
        policy = f"c0*N, c0={c0:g}"
    return BoundReport("ts", form, gaps, T, gamma, c0, terms, float(constant), policy)


def ucb_bound(mech: Mechanism, env: BanditEnvironment, T: float) -> BoundReport:
    """UCB regret bound ``sum_i [8 log T / D_{i,eps}^2 + 1 + pi^2/3] D_i`` (fully explicit)."""
    T = _check_horizon(T)
    gaps = privatized_gap(mech, env)
    mask, priv = _suboptimal_gaps(gaps)
    true = gaps.true_gaps
    terms = np.zeros(env.n_arms)
    terms[mask] = (8.0 * math.log(T) / priv[mask] ** 2 + 1.0 + math.pi**2 / 3.0) * true[mask]
    return BoundReport("ucb", "explicit", gaps, T, None, None, terms, 0.0, "none (explicit bound)")
