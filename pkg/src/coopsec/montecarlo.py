"""Seeded Monte-Carlo trials and sweeps over (N, J) grids.

Trial ``t`` of a sweep draws its scenario from a seed derived from
``(base_seed, t)`` only.  Because sampled scenarios are nested (see
:mod:`coopsec.channel`), each trial samples the largest grid point once and
every smaller grid point reuses a prefix of it.  Two consequences:

* direct-transmission metrics do not depend on N, and
* per-trial cooperative metrics are monotone along both grid axes, which
  keeps the sweep trends free of between-point sampling noise.

Infeasible trials are excluded from means and counted per grid point.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .channel import PRNG_ID, GeometryConfig, Scenario, csi_error_stream, dbm_to_watts, sample_scenario
from .design import DEFAULT_MAX_ITER, DEFAULT_THRESHOLD, DesignProblem, Objective, solve
from .errors import InvalidConfig, SecrecyError
from .secrecy import OFF, BeamformerSolution, Stage1Accounting, direct_min_power, direct_solution


class Strategy(enum.Enum):
    COOP_MIN_POWER = "coop_min_power"
    COOP_MAX_SECRECY = "coop_max_secrecy"
    DIRECT_MIN_POWER = "direct_min_power"
    DIRECT_MAX_SECRECY = "direct_max_secrecy"

    @property
    def cooperative(self) -> bool:
        return self.name.startswith("COOP")

    @property
    def objective(self) -> Objective:
        return Objective.MIN_POWER if self.name.endswith("MIN_POWER") else Objective.MAX_SECRECY

    @property
    def metric_name(self) -> str:
        return "transmit_power_w" if self.objective is Objective.MIN_POWER else "secrecy_capacity_bps_hz"


@dataclass(frozen=True)
class TrialOutcome:
    metric: float | None
    solution: BeamformerSolution | None
    reason: str | None = None

    @property
    def feasible(self) -> bool:
        return self.metric is not None


@dataclass(frozen=True)
class SweepConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    n_nodes: tuple[int, ...] = (10, 30, 50)
    n_eavesdroppers: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    strategies: tuple[Strategy, ...] = (Strategy.COOP_MIN_POWER,)
    fixed_value: float = 3.0
    trials: int = 1000
    base_seed: int = 1
    csi_error_variance: float | None = None
    stage1: Stage1Accounting = OFF
    threshold: float = DEFAULT_THRESHOLD
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.trials < 1:
            raise InvalidConfig("trials must be >= 1")
        if not self.n_nodes or not self.n_eavesdroppers:
            raise InvalidConfig("grid must be non-empty")
        if min(self.n_nodes) < 1 or min(self.n_eavesdroppers) < 0:
            raise InvalidConfig("grid needs n_nodes >= 1 and n_eavesdroppers >= 0")
        if not self.strategies:
            raise InvalidConfig("at least one strategy is required")
        if len({s.objective for s in self.strategies}) != 1:
            raise InvalidConfig("all strategies in one sweep must share an objective")
        if not self.fixed_value > 0:
            raise InvalidConfig("fixed_value must be positive")
        if not 0 <= self.base_seed < 2**64:
            raise InvalidConfig("base_seed must be an unsigned 64-bit integer")
        if self.csi_error_variance is not None and self.csi_error_variance < 0:
            raise InvalidConfig("csi_error_variance must be non-negative")

    @property
    def objective(self) -> Objective:
        return self.strategies[0].objective

    def problem(self) -> DesignProblem:
        return DesignProblem(
            objective=self.objective,
            budget=self.fixed_value,
            r_delta=self.csi_error_variance,
            stage1=self.stage1,
            threshold=self.threshold,
            max_iter=self.max_iter,
        )

    def echo(self) -> dict:
        g = self.geometry
        return {
            "wavelength": g.wavelength,
            "cluster_radius": g.cluster_radius,
            "path_loss_exponent": g.path_loss_exponent,
            "noise_power": g.noise_power,
            "dest_distance": g.dest_distance,
            "eav_distance_min": g.eav_distance_range[0],
            "eav_distance_max": g.eav_distance_range[1],
            "phase_model": g.phase_model,
            "n_nodes": list(self.n_nodes),
            "n_eavesdroppers": list(self.n_eavesdroppers),
            "strategy": [s.value for s in self.strategies],
            "fixed_value": self.fixed_value,
            "trials": self.trials,
            "seed": self.base_seed,
            "csi_error_variance": self.csi_error_variance,
            "stage1": self.stage1.enabled,
            "stage1_power": self.stage1.stage1_power,
            "threshold": self.threshold,
            "max_iter": self.max_iter,
            "direct_rate_factor": 1.0,
        }


@dataclass(frozen=True)
class SweepRow:
    n_nodes: int
    n_eavesdroppers: int
    strategy: str
    metric_name: str
    mean: float
    stderr: float
    infeasible: int
    trials: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict
    # per-trial metrics keyed by (N, J, strategy value); NaN marks infeasible
    samples: dict = field(default_factory=dict, repr=False)

    def row(self, n_nodes: int, n_eavesdroppers: int, strategy: Strategy | str) -> SweepRow:
        name = strategy.value if isinstance(strategy, Strategy) else strategy
        for r in self.rows:
            if (r.n_nodes, r.n_eavesdroppers, r.strategy) == (n_nodes, n_eavesdroppers, name):
                return r
        raise KeyError((n_nodes, n_eavesdroppers, name))


def trial_seed(base_seed: int, trial: int) -> int:
    """Scenario seed for one trial index; independent of grid point and order."""
    ss = np.random.SeedSequence([int(base_seed), int(trial)])
    return int(ss.generate_state(1, np.uint64)[0])


def _estimate(scenario: Scenario, r_delta: np.ndarray) -> np.ndarray:
    """Channel estimates ``g_hat_j = g_j - delta_j`` with ``delta_j ~ CN(0, r_delta)``.

    For ``r_delta = eps * I`` the draws are nested in N like the geometry.
    """
    N, J = scenario.G.shape
    lam, V = np.linalg.eigh(r_delta)
    root = V * np.sqrt(np.clip(lam, 0.0, None) / 2.0)
    G_hat = scenario.G.copy()
    for j in range(J):
        z = csi_error_stream(scenario.seed, j).standard_normal((N, 2))
        G_hat[:, j] -= root @ (z[:, 0] + 1j * z[:, 1])
    return G_hat


def run_trial(scenario: Scenario, problem: DesignProblem, strategy: Strategy) -> TrialOutcome:
    """Solve one scenario; solver failures come back as infeasible outcomes.

    Cooperative strategies use the optimal design for one eavesdropper and
    the nulling design otherwise.  The metric is the transmit power for
    min-power objectives and the secrecy capacity (its ergodic lower bound
    under imperfect CSI) for fixed-power objectives.
    """
    strategy = Strategy(strategy)
    if strategy.objective is not problem.objective:
        raise InvalidConfig(f"{strategy.value} does not match objective {problem.objective.value}")
    h, G, s2 = scenario.h, scenario.G, scenario.noise_power
    try:
        if not strategy.cooperative:
            if problem.objective is Objective.MIN_POWER:
                p = direct_min_power(problem.budget, h[0], G[0, :], s2)
            else:
                p = problem.budget
            sol = direct_solution(p, h, G, s2)
        else:
            G_design = G
            if problem.imperfect:
                G_design = _estimate(scenario, problem.r_delta_matrix(scenario.n_nodes))
            sol, _ = solve(problem, h, G_design, s2)
    except (SecrecyError, np.linalg.LinAlgError) as exc:
        return TrialOutcome(None, None, f"{type(exc).__name__}: {exc}")
    metric = sol.transmit_power if problem.objective is Objective.MIN_POWER else sol.secrecy_capacity
    return TrialOutcome(float(metric), sol)


def _run_chunk(config: SweepConfig, trials: range) -> np.ndarray:
    """Metrics for a block of trials, shape (trials, |N grid|, |J grid|, |strategies|)."""
    problem = config.problem()
    geom = replace(config.geometry, n_nodes=max(config.n_nodes), n_eavesdroppers=max(config.n_eavesdroppers))
    out = np.full((len(trials), len(config.n_nodes), len(config.n_eavesdroppers), len(config.strategies)), np.nan)
    for t_i, t in enumerate(trials):
        full = sample_scenario(geom, trial_seed(config.base_seed, t))
        for n_i, n in enumerate(config.n_nodes):
            for j_i, j in enumerate(config.n_eavesdroppers):
                sc = full.subset(n, j)
                for s_i, strat in enumerate(config.strategies):
                    res = run_trial(sc, problem, strat)
                    if res.feasible:
                        out[t_i, n_i, j_i, s_i] = res.metric
    return out


def worker_count() -> int:
    cap = os.environ.get("SECRECY_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise InvalidConfig(f"SECRECY_THREADS must be an integer, got {cap!r}") from exc
    return n


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    # fsum is exactly rounded, hence independent of summation order
    n = x.size
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(x.tolist()) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum(((x - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var / n)


def run_sweep(config: SweepConfig, workers: int | None = None) -> SweepResult:
    config.validate()
    workers = worker_count() if workers is None else max(1, workers)
    T = config.trials
    if workers == 1 or T < 2 * workers:
        metrics = _run_chunk(config, range(T))
    else:
        bounds = np.linspace(0, T, workers + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [config] * len(chunks), chunks))
        metrics = np.concatenate(parts, axis=0)

    rows = []
    samples = {}
    for n_i, n in enumerate(config.n_nodes):
        for j_i, j in enumerate(config.n_eavesdroppers):
            for s_i, strat in enumerate(config.strategies):
                col = metrics[:, n_i, j_i, s_i]
                ok = col[~np.isnan(col)]
                mean, se = _mean_stderr(ok)
                rows.append(SweepRow(n, j, strat.value, strat.metric_name, mean, se, int(T - ok.size), T))
                samples[(n, j, strat.value)] = col
    meta = {
        "seed": config.base_seed,
        "prng": PRNG_ID,
        "version": __version__,
        "config": config.echo(),
    }
    return SweepResult(rows, meta, samples)


# --- presets for the four simulation figures ----------------------------------

P0_FIG45 = dbm_to_watts(5.0)

PRESETS = {
    # transmit power vs J, C_s fixed at 3 b/s/Hz
    "fig2": dict(
        n_nodes=(10, 30, 50),
        n_eavesdroppers=(1, 2, 3, 4, 5, 6),
        strategies=(Strategy.COOP_MIN_POWER, Strategy.DIRECT_MIN_POWER),
        fixed_value=3.0,
    ),
    # transmit power vs N
    "fig3": dict(
        n_nodes=(10, 20, 30, 40, 50),
        n_eavesdroppers=(1, 3, 6),
        strategies=(Strategy.COOP_MIN_POWER, Strategy.DIRECT_MIN_POWER),
        fixed_value=3.0,
    ),
    # secrecy capacity vs J, P0 fixed at 5 dBm
    "fig4": dict(
        n_nodes=(10, 30, 50),
        n_eavesdroppers=(1, 2, 3, 4, 5, 6),
        strategies=(Strategy.COOP_MAX_SECRECY, Strategy.DIRECT_MAX_SECRECY),
        fixed_value=P0_FIG45,
    ),
    # secrecy capacity vs N
    "fig5": dict(
        n_nodes=(10, 20, 30, 40, 50),
        n_eavesdroppers=(1, 3, 6),
        strategies=(Strategy.COOP_MAX_SECRECY, Strategy.DIRECT_MAX_SECRECY),
        fixed_value=P0_FIG45,
    ),
}


def preset(name: str, **overrides) -> SweepConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise InvalidConfig(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return SweepConfig(**{**base, **overrides})
