"""
Seeded experiment runner: environment -> mechanism -> agent, with pseudo-regret.

Random streams
--------------
Every trial owns three independent ``numpy.random.Generator`` objects
(PCG64), one per role: environment sampling, mechanism perturbation and agent
randomness. The generator for role ``k`` of trial ``i`` under base seed ``s``
is ``Generator(PCG64(SeedSequence([s, i, k])))`` with roles
``environment=0, mechanism=1, agent=2``. Traces therefore depend only on
``(s, i)``, never on execution order or worker count.

Two engines run the same interaction loop. ``"python"`` drives the objects in
:mod:`ldpbandit.agents` and :mod:`ldpbandit.mechanisms` directly; ``"numba"``
is a compiled transcription that consumes the generators in the same order
and reproduces the python traces bit for bit. ``"numba"`` is the default.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from . import agents as agents_mod
from .environments import BanditEnvironment
from .mechanisms import Mechanism, MechanismKind, parse_epsilon, perturb

ROLE_ENVIRONMENT, ROLE_MECHANISM, ROLE_AGENT = 0, 1, 2
ENGINES = ("numba", "python")
RNG_DESCRIPTION = "numpy PCG64 via SeedSequence([seed, trial, role]); roles environment=0, mechanism=1, agent=2"

_MECH_CODES = {MechanismKind.LINEAR: 0, MechanismKind.QUADRATIC: 1, MechanismKind.EXPONENTIAL: 2}
_AGENT_CODES = {agents_mod.TS: 0, agents_mod.UCB: 1}


def default_checkpoints(horizon: int, n: int = 100) -> tuple[int, ...]:
    """About ``n`` geometrically spaced rounds in ``[1, horizon]``, always ending at ``horizon``."""
    pts = np.unique(np.rint(np.geomspace(1, horizon, n)).astype(np.int64))
    pts = pts[(pts >= 1) & (pts <= horizon)]
    if pts[-1] != horizon:
        pts = np.append(pts, horizon)
    return tuple(int(x) for x in pts)


def _format_epsilon(eps: float):
    return "inf" if math.isinf(eps) else eps


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell: environment, mechanism, agent and run sizes.

    ``arms`` uses the grouped form ``[{variant, params, count}, ...]``.
    ``checkpoints=None`` means the default geometric schedule.
    """

    arms: tuple
    mechanism: str = "linear"
    epsilon: float = 1.0
    b: float = 0.0
    agent: str = "ts"
    horizon: int = 50_000
    trials: int = 50
    seed: int = 0
    checkpoints: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(copy.deepcopy(dict(g)) for g in self.arms))
        object.__setattr__(self, "epsilon", parse_epsilon(self.epsilon))
        object.__setattr__(self, "b", float(self.b))
        if self.agent not in agents_mod.AGENTS:
            raise ValueError(f"agent must be one of {agents_mod.AGENTS}, got {self.agent!r}")
        if int(self.horizon) < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if int(self.trials) < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if int(self.seed) < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))
        if self.checkpoints is not None:
            cps = tuple(int(c) for c in self.checkpoints)
            if not cps:
                raise ValueError("checkpoints must be non-empty")
            if list(cps) != sorted(set(cps)):
                raise ValueError("checkpoints must be strictly increasing")
            if cps[0] < 1 or cps[-1] > self.horizon:
                raise ValueError(f"checkpoints must lie in [1, {self.horizon}]")
            object.__setattr__(self, "checkpoints", cps)
        # fail early on bad mechanism or arm specs
        self.mechanism_obj()
        self.environment()

    def environment(self) -> BanditEnvironment:
        return BanditEnvironment.from_groups(self.arms)

    def mechanism_obj(self) -> Mechanism:
        return Mechanism(self.mechanism, self.epsilon, self.b)

    def resolved_checkpoints(self) -> tuple[int, ...]:
        if self.checkpoints is None:
            return default_checkpoints(self.horizon)
        return self.checkpoints

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **clean)

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "epsilon": _format_epsilon(self.epsilon),
            "b": self.b,
            "agent": self.agent,
            "horizon": self.horizon,
            "trials": self.trials,
            "seed": self.seed,
            "checkpoints": None if self.checkpoints is None else list(self.checkpoints),
            "arms": [copy.deepcopy(g) for g in self.arms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"mechanism", "epsilon", "b", "agent", "horizon", "trials", "seed", "checkpoints", "arms"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "arms" not in data:
            raise ValueError("config is missing the 'arms' list")
        kwargs = dict(data)
        if kwargs.get("checkpoints") is not None:
            kwargs["checkpoints"] = tuple(kwargs["checkpoints"])
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def cell_name(self) -> str:
        eps = "inf" if math.isinf(self.epsilon) else f"{self.epsilon:g}"
        mech = self.mechanism
        if mech == MechanismKind.QUADRATIC.value:
            mech = f"quadratic-b{self.b:g}"
        return f"{self.agent}_{mech}_eps{eps}"


FIG2_GROUPS = (
    {"variant": "bernoulli", "params": {"mu": 0.9}, "count": 1},
    {"variant": "beta", "params": {"alpha": 4.0, "beta": 1.0}, "count": 5},
    {"variant": "two_point", "params": {"lo": 0.4, "hi": 1.0, "p_hi": 0.5}, "count": 5},
    {"variant": "bernoulli", "params": {"mu": 0.6}, "count": 5},
    {"variant": "uniform", "params": {"lo": 0.0, "hi": 1.0}, "count": 4},
)
FIG2_TRIALS = 50


def fig2_preset() -> dict:
    """The 20-arm environment and trial count of the reference regret study."""
    return {"arms": [copy.deepcopy(g) for g in FIG2_GROUPS], "trials": FIG2_TRIALS}


def fig2_config(**overrides) -> ExperimentConfig:
    base = ExperimentConfig(arms=FIG2_GROUPS, trials=FIG2_TRIALS)
    return base.with_overrides(**overrides)


def trial_rngs(seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Environment, mechanism and agent generators for one trial."""
    return tuple(
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial, role])))
        for role in (ROLE_ENVIRONMENT, ROLE_MECHANISM, ROLE_AGENT)
    )


@dataclass
class RegretTrace:
    trial: int
    seed: int
    checkpoints: np.ndarray
    regret: np.ndarray
    pulls: np.ndarray


def pseudo_regret(choices: Sequence[int], means: Sequence[float], checkpoints: Sequence[int]) -> np.ndarray:
    """Cumulative ``max(means) - means[I_t]`` after each checkpoint round.

    Depends on the arm sequence only; realized rewards never enter.
    """
    means = np.asarray(means, dtype=float)
    best = means.max()
    out = np.empty(len(checkpoints))
    total = 0.0
    k = 0
    for t, arm in enumerate(choices, start=1):
        total += best - means[arm]
        while k < len(checkpoints) and checkpoints[k] == t:
            out[k] = total
            k += 1
    if k != len(checkpoints):
        raise ValueError("checkpoints extend past the end of the choice sequence")
    return out


def _run_python(config: ExperimentConfig, trial: int, record_choices: bool = False):
    env = config.environment()
    mech = config.mechanism_obj()
    env_rng, mech_rng, agent_rng = trial_rngs(config.seed, trial)
    agent = agents_mod.make_agent(config.agent, env.n_arms)
    checkpoints = np.asarray(config.resolved_checkpoints())
    means = env.means
    best = env.best_mean
    regret = np.empty(len(checkpoints))
    pulls = np.zeros(env.n_arms, dtype=np.int64)
    choices = [] if record_choices else None
    total = 0.0
    k = 0
    for t in range(1, config.horizon + 1):
        arm = agent.select(agent_rng)
        r = env.arms[arm].sample(env_rng)
        y = perturb(mech, r, mech_rng)
        agent.update(arm, y)
        pulls[arm] += 1
        total += best - means[arm]
        if choices is not None:
            choices.append(arm)
        if k < len(checkpoints) and checkpoints[k] == t:
            regret[k] = total
            k += 1
    trace = RegretTrace(trial, config.seed, checkpoints, regret, pulls)
    return (trace, choices) if record_choices else trace


@numba.njit(cache=True)
def _kernel(
    codes, p1, p2, p3, means,
    mech_code, private, eps, b, quad_c,
    agent_code, horizon, checkpoints,
    env_rng, mech_rng, agent_rng,
):
    n = codes.shape[0]
    best = means.max()
    denom = 1.0 + math.exp(eps) if private else 1.0
    lin_c = math.expm1(eps) if private else 0.0
    s = np.zeros(n, dtype=np.int64)
    f = np.zeros(n, dtype=np.int64)
    pulls = np.zeros(n, dtype=np.int64)
    theta = np.empty(n)
    regret = np.empty(checkpoints.shape[0])
    total = 0.0
    k = 0
    for t in range(1, horizon + 1):
        # --- select
        if agent_code == 0:
            for i in range(n):
                theta[i] = agent_rng.beta(s[i] + 1.0, f[i] + 1.0)
            top = theta.max()
            n_top = 0
            for i in range(n):
                if theta[i] == top:
                    n_top += 1
            if n_top == 1:
                arm = np.argmax(theta)
            else:
                pick = agent_rng.integers(0, n_top)
                arm = -1
                for i in range(n):
                    if theta[i] == top:
                        if pick == 0:
                            arm = i
                            break
                        pick -= 1
        else:
            arm = -1
            for i in range(n):
                if pulls[i] == 0:
                    arm = i
                    break
            if arm < 0:
                logt = math.log(max(t - 1, 1))
                best_idx = -np.inf
                for i in range(n):
                    idx = s[i] / pulls[i] + math.sqrt(2.0 * logt / pulls[i])
                    if idx > best_idx:
                        best_idx = idx
                        arm = i
        # --- reward
        c = codes[arm]
        if c == 0:
            r = 1.0 if env_rng.random() < p1[arm] else 0.0
        elif c == 1:
            r = env_rng.beta(p1[arm], p2[arm])
        elif c == 2:
            r = p2[arm] if env_rng.random() < p3[arm] else p1[arm]
        else:
            r = p1[arm] + (p2[arm] - p1[arm]) * env_rng.random()
        # --- privatize
        if not private:
            p = r
        elif mech_code == 0:
            p = (lin_c * r + 1.0) / denom
        elif mech_code == 1:
            p = ((quad_c * r + b) * r + 1.0) / denom
        else:
            p = math.exp(eps * r) / denom
        y = 1 if mech_rng.random() < p else 0
        # --- update
        pulls[arm] += 1
        if agent_code == 0:
            if y == 1:
                s[arm] += 1
            else:
                f[arm] += 1
        else:
            s[arm] += y
        total += best - means[arm]
        if k < checkpoints.shape[0] and checkpoints[k] == t:
            regret[k] = total
            k += 1
    return regret, pulls


def _run_numba(config: ExperimentConfig, trial: int) -> RegretTrace:
    env = config.environment()
    mech = config.mechanism_obj()
    env_rng, mech_rng, agent_rng = trial_rngs(config.seed, trial)
    codes = np.array([a.code for a in env.arms], dtype=np.int64)
    params = np.array([a.kernel_params() for a in env.arms], dtype=float)
    checkpoints = np.asarray(config.resolved_checkpoints(), dtype=np.int64)
    private = mech.private
    regret, pulls = _kernel(
        codes, params[:, 0].copy(), params[:, 1].copy(), params[:, 2].copy(), np.asarray(env.means, dtype=float),
        _MECH_CODES[mech.kind], private, mech.epsilon if private else 0.0, mech.b,
        mech.quadratic_coefficient if private else 0.0,
        _AGENT_CODES[config.agent], config.horizon, checkpoints,
        env_rng, mech_rng, agent_rng,
    )
    return RegretTrace(trial, config.seed, checkpoints, regret, pulls)


def run_trial(config: ExperimentConfig, trial_index: int, engine: str = "numba") -> RegretTrace:
    """Run one trial of ``config.horizon`` rounds and return its regret trace."""
    if engine == "numba":
        return _run_numba(config, trial_index)
    if engine == "python":
        return _run_python(config, trial_index)
    raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    checkpoints: np.ndarray
    traces: np.ndarray  # (trials, checkpoints)
    pulls: np.ndarray  # (trials, arms)
    engine: str = "numba"
    mean: np.ndarray = field(init=False)
    std: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mean = self.traces.mean(axis=0)
        if self.n_trials > 1:
            self.std = self.traces.std(axis=0, ddof=1)
        else:
            self.std = np.zeros_like(self.mean)

    @property
    def n_trials(self) -> int:
        return self.traces.shape[0]

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])

    @property
    def final_sem(self) -> float:
        return float(self.std[-1] / math.sqrt(self.n_trials))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["checkpoint_t", "trial", "cumulative_regret"])
        for i, row in enumerate(self.traces):
            for t, v in zip(self.checkpoints, row):
                w.writerow([int(t), i, repr(float(v))])
        for label, row in (("mean", self.mean), ("std", self.std)):
            for t, v in zip(self.checkpoints, row):
                w.writerow([int(t), label, repr(float(v))])
        return buf.getvalue()

    def manifest(self, csv_name: str) -> dict:
        return {
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "trials": self.n_trials,
            "trial_seed_keys": [[self.config.seed, i] for i in range(self.n_trials)],
            "rng": RNG_DESCRIPTION,
            "engine": self.engine,
            "csv": csv_name,
            "final_mean_regret": self.final_mean,
            "final_std_regret": float(self.std[-1]),
        }

    def write(self, out_dir) -> tuple[Path, Path]:
        """Write ``<cell>.csv`` and ``<cell>.manifest.json`` into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = self.config.cell_name()
        csv_path = out / f"{name}.csv"
        manifest_path = out / f"{name}.manifest.json"
        csv_path.write_text(self.to_csv())
        manifest_path.write_text(json.dumps(self.manifest(csv_path.name), indent=2, sort_keys=True) + "\n")
        return csv_path, manifest_path


def _trial_worker(args):
    config, trial, engine = args
    return run_trial(config, trial, engine)


def run_experiment(config: ExperimentConfig, jobs: int | None = 1, engine: str = "numba") -> ExperimentResult:
    """Run every trial and aggregate mean and sample standard deviation per checkpoint.

    ``jobs > 1`` fans trials out to worker processes; results are identical
    for any worker count because each trial owns its random streams.
    """
    if jobs is None:
        jobs = os.cpu_count() or 1
    tasks = [(config, i, engine) for i in range(config.trials)]
    if jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_trial_worker, tasks))
    else:
        traces = [_trial_worker(t) for t in tasks]
    traces.sort(key=lambda tr: tr.trial)
    return ExperimentResult(
        config=config,
        checkpoints=np.asarray(config.resolved_checkpoints()),
        traces=np.vstack([tr.regret for tr in traces]),
        pulls=np.vstack([tr.pulls for tr in traces]),
        engine=engine,
    )
