"""
Bandit policies that learn from privatized binary feedback only.

Both agents keep integer sufficient statistics per arm and expose
``select(rng)`` / ``update(arm, y)``. ``update`` accepts nothing but the bits
0 and 1, so a raw reward can never reach an agent by accident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TS, UCB = "ts", "ucb"
AGENTS = (TS, UCB)


def _check_bit(y) -> int:
    if isinstance(y, (bool, np.bool_)):
        return int(y)
    if isinstance(y, (int, np.integer)) and y in (0, 1):
        return int(y)
    raise TypeError(f"agents accept only privatized bits 0/1, got {y!r}")


def _check_arm(arm, n_arms: int) -> int:
    arm = int(arm)
    if not 0 <= arm < n_arms:
        raise IndexError(f"arm {arm} out of range for {n_arms} arms")
    return arm


@dataclass
class TsState:
    """Beta-Bernoulli posterior counts for Thompson Sampling.

    Arm ``i`` has posterior ``Beta(successes[i] + 1, failures[i] + 1)``.
    """

    successes: np.ndarray
    failures: np.ndarray

    @classmethod
    def fresh(cls, n_arms: int) -> "TsState":
        return cls(np.zeros(n_arms, dtype=np.int64), np.zeros(n_arms, dtype=np.int64))

    @property
    def n_arms(self) -> int:
        return len(self.successes)

    @property
    def rounds(self) -> int:
        return int(self.successes.sum() + self.failures.sum())

    def select(self, rng: np.random.Generator) -> int:
        # one Beta draw per arm in index order; ties resolved from the same stream
        theta = rng.beta(self.successes + 1.0, self.failures + 1.0)
        best = np.flatnonzero(theta == theta.max())
        if best.size == 1:
            return int(best[0])
        return int(best[rng.integers(0, best.size)])

    def update(self, arm: int, y: int) -> None:
        arm = _check_arm(arm, self.n_arms)
        if _check_bit(y):
            self.successes[arm] += 1
        else:
            self.failures[arm] += 1


@dataclass
class UcbState:
    """Pull and success counts for UCB on privatized means.

    The first ``n_arms`` rounds play every arm once in index order; after
    that the arm maximising ``s/n + sqrt(2 ln t / n)`` is played, where ``t``
    is the number of completed rounds. Ties go to the lowest index.
    """

    pulls: np.ndarray
    successes: np.ndarray
    t: int = 0

    @classmethod
    def fresh(cls, n_arms: int) -> "UcbState":
        return cls(np.zeros(n_arms, dtype=np.int64), np.zeros(n_arms, dtype=np.int64), 0)

    @property
    def n_arms(self) -> int:
        return len(self.pulls)

    def indices(self) -> np.ndarray:
        n = self.pulls.astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            idx = self.successes / n + np.sqrt(2.0 * math.log(max(self.t, 1)) / n)
        return np.where(self.pulls == 0, np.inf, idx)

    def select(self, rng: np.random.Generator | None = None) -> int:
        unplayed = np.flatnonzero(self.pulls == 0)
        if unplayed.size:
            return int(unplayed[0])
        return int(np.argmax(self.indices()))

    def update(self, arm: int, y: int) -> None:
        arm = _check_arm(arm, self.n_arms)
        self.pulls[arm] += 1
        self.successes[arm] += _check_bit(y)
        self.t += 1


def ts_select(state: TsState, rng: np.random.Generator) -> int:
    return state.select(rng)


def ts_update(state: TsState, arm: int, y: int) -> TsState:
    state.update(arm, y)
    return state


def ucb_select(state: UcbState) -> int:
    return state.select()


def ucb_update(state: UcbState, arm: int, y: int) -> UcbState:
    state.update(arm, y)
    return state


def make_agent(name: str, n_arms: int):
    if name == TS:
        return TsState.fresh(n_arms)
    if name == UCB:
        return UcbState.fresh(n_arms)
    raise ValueError(f"unknown agent {name!r}; expected one of {AGENTS}")
