"""Experiment engine: replicated filter runs, grids, bandit runs and the Kalman check.

Every replicate ``r`` simulates its trajectory from ``RngStream(seed, (r, 0))``
and runs its filter on ``RngStream(seed, (r, 1))``, so different algorithms
and particle counts at the same seed share random numbers (paired runs).
Outputs are long-format CSV files with floats at 17 significant digits.
"""

from __future__ import annotations

import csv
import dataclasses
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .bandit import Controller, controller_step
from .dpf import MARGINAL_MODES
from .filters import ALGORITHMS, Filter
from .kalman import kalman_filter
from .models import (
    ChangePointModel,
    Model1,
    StateSpaceModel,
    Trajectory,
    linear_gaussian_model,
    model1,
    model2,
    simulate_trajectory,
    swap_decomposition,
)
from .randomness import RngStream

__all__ = [
    "ConfigError",
    "LengthMismatch",
    "ExperimentConfig",
    "RunRecord",
    "Aggregate",
    "ExperimentResult",
    "BanditRun",
    "OracleResult",
    "load_config",
    "build_model",
    "register_model",
    "rmse",
    "divergence_rate",
    "aggregate",
    "run_replicate",
    "run_experiment",
    "compare_suite",
    "bandit_demo",
    "oracle_check",
]

SCHEMES = ("systematic", "multinomial")
BANDIT_MODES = ("hedge", "exp3")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class LengthMismatch(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Flat experiment configuration. Every field can be set from a file or a CLI flag."""

    model: str = "model1"
    algorithm: str = "dpf"
    T: int = 250
    runs: int = 500
    n_x: int = 100
    n_z: int = 19
    n_x_prime: int = 5
    n_z_prime: int = 5
    lookahead_match: bool = False  # look-ahead table sized n_x by n_z instead of n_x_prime by n_z_prime
    n_pf: int | None = None  # defaults to n_x * (n_z + 1)
    marginal_mode: str = "monte_carlo"
    scheme: str = "systematic"
    reuse_lookahead: bool = True
    divergence_factor: float = 10.0
    # compare
    grid_algorithms: list = field(default_factory=lambda: ["pf", "dpf", "ladpf"])
    grid: list = field(default_factory=lambda: [[10, 9], [20, 9], [20, 19]])
    # bandit
    bandit_mode: str = "exp3"
    bandit_filter: str = "dpf"
    eta: float = 0.5
    gamma: float = 0.2
    alpha: float = 0.001
    change_point: int | None = None
    exp3_keep_alive: bool = True
    convergence_threshold: float = 0.8
    window: int | None = None  # RMSE window length at the end of the run; default from the change point
    # oracle
    oracle_totals: list = field(default_factory=lambda: [100, 10000])
    oracle_n_z: int = 10
    # run control
    seed: int = 0
    out: str | None = None
    threads: int = 1
    record_wall_time: bool = True

    def validate(self) -> "ExperimentConfig":
        def need(name, check, message):
            try:
                ok = bool(check())
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise ConfigError(name, f"{message}, got {getattr(self, name, None)!r}")

        def count(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1

        for name in ("T", "runs", "n_x", "n_z", "n_x_prime", "n_z_prime", "oracle_n_z", "threads"):
            need(name, lambda: count(getattr(self, name)), "must be an integer >= 1")
        need("n_pf", lambda: self.n_pf is None or count(self.n_pf), "must be an integer >= 1")
        need("algorithm", lambda: self.algorithm in ALGORITHMS + ("bandit",), f"must be one of {ALGORITHMS + ('bandit',)}")
        need("bandit_filter", lambda: self.bandit_filter in ALGORITHMS, f"must be one of {ALGORITHMS}")
        need("marginal_mode", lambda: self.marginal_mode in MARGINAL_MODES, f"must be one of {MARGINAL_MODES}")
        need("scheme", lambda: self.scheme in SCHEMES, f"must be one of {SCHEMES}")
        need("bandit_mode", lambda: self.bandit_mode in BANDIT_MODES, f"must be one of {BANDIT_MODES}")
        for name in ("lookahead_match", "reuse_lookahead", "exp3_keep_alive", "record_wall_time"):
            need(name, lambda: isinstance(getattr(self, name), bool), "must be true or false")
        need("eta", lambda: self.eta > 0, "must be positive")
        need("gamma", lambda: 0 < self.gamma <= 1, "must lie in (0, 1]")
        need("alpha", lambda: self.alpha > 0, "must be positive")
        need("divergence_factor", lambda: self.divergence_factor > 0, "must be positive")
        need("convergence_threshold", lambda: 0 < self.convergence_threshold < 1, "must lie in (0, 1)")
        need("change_point", lambda: self.change_point is None or (count(self.change_point) and self.change_point < self.T),
             "must be an integer strictly inside the run")
        need("window", lambda: self.window is None or (count(self.window) and self.window <= self.T), "must lie in [1, T]")
        need("seed", lambda: isinstance(self.seed, int) and not isinstance(self.seed, bool) and self.seed >= 0,
             "must be a non-negative integer")
        need("grid_algorithms", lambda: isinstance(self.grid_algorithms, list) and self.grid_algorithms
             and all(a in ALGORITHMS for a in self.grid_algorithms), f"must be a non-empty list drawn from {ALGORITHMS}")
        need("grid", lambda: isinstance(self.grid, list) and self.grid
             and all(len(g) == 2 and count(g[0]) and count(g[1]) for g in self.grid),
             "must be a non-empty list of [n_x, n_z] pairs with counts >= 1")
        need("oracle_totals", lambda: isinstance(self.oracle_totals, list) and self.oracle_totals
             and all(count(n) and n >= self.oracle_n_z for n in self.oracle_totals),
             "must be a non-empty list of totals, each at least oracle_n_z")
        need("out", lambda: self.out is None or isinstance(self.out, str), "must be a path")
        need("model", lambda: isinstance(self.model, str) and build_model(self.model), "unknown model")
        return self

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        unknown = set(kwargs) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        return dataclasses.replace(self, **kwargs)

    @property
    def pf_particles(self) -> int:
        return self.n_pf if self.n_pf is not None else self.n_x * (self.n_z + 1)


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a flat YAML mapping, apply overrides (CLI wins) and validate."""
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"not valid YAML: {exc}") from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config", "must be a flat key-value mapping")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig().with_overrides(**values).validate()


# ---------------------------------------------------------------- models

LINEAR_GAUSSIAN_DEFAULT = dict(
    A=[[0.9, 0.3], [-0.2, 0.8]], B=np.eye(2), C=[[1.0, 0.5]],
    Q=[[0.5, 0.1], [0.1, 0.5]], R=[[0.5]], dim_x=1,
)

_MODELS = {
    "model1": model1,
    "model2": model2,
    "linear_gaussian": lambda: linear_gaussian_model(**LINEAR_GAUSSIAN_DEFAULT),
}


def register_model(name: str, factory) -> None:
    """Make ``factory()`` available to configs under ``name``."""
    if not re.fullmatch(r"\w+", name):
        raise ValueError("model names must be identifiers")
    _MODELS[name] = factory


def build_model(name: str) -> tuple[StateSpaceModel, StateSpaceModel]:
    """``(simulation model, filtering model)`` for a registry name.

    ``"swapped(<name>)"`` filters with the groups exchanged; trajectories are
    always simulated from the un-swapped model.
    """
    m = re.fullmatch(r"\s*swapped\((\w+)\)\s*", name)
    base_name = m.group(1) if m else name.strip()
    if base_name not in _MODELS:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(_MODELS)} or swapped(<name>)")
    base = _MODELS[base_name]()
    return base, (swap_decomposition(base) if m else base)


def change_point_model(name: str, change_point: int) -> StateSpaceModel:
    """The named model with its two transition equations exchanged from ``change_point`` on."""
    before, _ = build_model(name)
    if not isinstance(before, Model1):
        raise ConfigError("change_point", "transition swapping is defined for model1 only")
    return ChangePointModel(before, Model1(swapped_dynamics=True), change_point)


def component_names(model: StateSpaceModel) -> list[str]:
    return [f"x{i}" for i in range(model.dim_x)] + [f"z{i}" for i in range(model.dim_z)]


# ---------------------------------------------------------------- metrics


def rmse(truth, estimates, component: int | None = None):
    """Root of the time-averaged squared error, per component or for one ``component``."""
    truth = truth.states if isinstance(truth, Trajectory) else np.asarray(truth, dtype=float)
    est = np.asarray(estimates, dtype=float)
    truth = truth.reshape(len(truth), -1)
    est = est.reshape(len(est), -1)
    if truth.shape != est.shape:
        raise LengthMismatch(f"truth {truth.shape} vs estimates {est.shape}")
    out = np.sqrt(np.mean((est - truth) ** 2, axis=0))
    return out if component is None else float(out[component])


@dataclass
class RunRecord:
    algorithm: str
    n_x: int
    n_z: int
    run: int
    rmse: np.ndarray
    diverged: bool
    divergence_step: int | None
    divergence_trigger: str  # "", "degenerate" or "rmse"
    wall_time: float
    likelihood_evals: int


def divergence_rate(records: Sequence[RunRecord]) -> float:
    if len(records) == 0:
        raise ValueError("need at least one record")
    return float(np.mean([r.diverged for r in records]))


@dataclass
class Aggregate:
    algorithm: str
    n_x: int
    n_z: int
    component: str
    runs: int
    diverged_runs: int
    divergence_rate: float
    rmse_mean_all: float
    rmse_mean_converged: float
    rmse_median_converged: float
    rmse_q05_converged: float
    rmse_q95_converged: float


def aggregate(records: Sequence[RunRecord], names: Sequence[str]) -> list[Aggregate]:
    """Per-configuration summaries over all runs and over non-diverged runs."""
    out = []
    keys = list(dict.fromkeys((r.algorithm, r.n_x, r.n_z) for r in records))
    for key in keys:
        group = [r for r in records if (r.algorithm, r.n_x, r.n_z) == key]
        errs = np.array([r.rmse for r in group])
        ok = np.array([not r.diverged for r in group])
        for c, name in enumerate(names):
            conv = errs[ok, c]
            q = np.quantile(conv, [0.5, 0.05, 0.95]) if len(conv) else np.full(3, np.nan)
            out.append(Aggregate(*key, name, len(group), int((~ok).sum()), float(1 - ok.mean()),
                                 float(errs[:, c].mean()), float(conv.mean()) if len(conv) else np.nan,
                                 *map(float, q)))
    return out


# ---------------------------------------------------------------- replicates


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def summary_path(out) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".summary" + (p.suffix or ".csv"))


def make_filter(cfg: ExperimentConfig, algorithm: str, model: StateSpaceModel, stream: RngStream,
                n_x: int | None = None, n_z: int | None = None) -> Filter:
    n_x = cfg.n_x if n_x is None else n_x
    n_z = cfg.n_z if n_z is None else n_z
    n_xp, n_zp = (n_x, n_z) if cfg.lookahead_match else (cfg.n_x_prime, cfg.n_z_prime)
    n_pf = cfg.n_pf if cfg.n_pf is not None else n_x * (n_z + 1)
    return Filter(algorithm, model, stream, n_x, n_z, n_pf=n_pf, n_x_prime=n_xp, n_z_prime=n_zp,
                  marginal_mode=cfg.marginal_mode, scheme=cfg.scheme, reuse_lookahead=cfg.reuse_lookahead)


def run_filter(filt: Filter, ys: np.ndarray) -> tuple[np.ndarray, float]:
    """Estimates in the reference layout for every step, and the wall time of the loop."""
    est = np.empty((len(ys), filt.model.dim_x + filt.model.dim_z))
    start = time.perf_counter()
    for t, y in enumerate(ys):
        filt.step(y)
        est[t] = filt.estimate_reference()
    return est, time.perf_counter() - start


def divergence_check(filt: Filter, errors: np.ndarray, traj: Trajectory, factor: float) -> tuple[bool, int | None, str]:
    if filt.diverged:
        return True, filt.diverged_at, "degenerate"
    scale = traj.states.std(axis=0)
    bad = (scale > 0) & (errors > factor * scale)
    if bad.any():
        return True, None, "rmse"
    return False, None, ""


def run_replicate(cfg: ExperimentConfig, run: int, algorithm: str | None = None,
                  n_x: int | None = None, n_z: int | None = None) -> RunRecord:
    algorithm = algorithm or cfg.algorithm
    n_x = cfg.n_x if n_x is None else n_x
    n_z = cfg.n_z if n_z is None else n_z
    sim_model, filt_model = build_model(cfg.model)
    traj = simulate_trajectory(sim_model, cfg.T, RngStream(cfg.seed, (run, 0)))
    filt = make_filter(cfg, algorithm, filt_model, RngStream(cfg.seed, (run, 1)), n_x, n_z)
    est, wall = run_filter(filt, traj.ys)
    errors = rmse(traj, est)
    diverged, step, trigger = divergence_check(filt, errors, traj, cfg.divergence_factor)
    return RunRecord(algorithm, n_x, n_z, run, errors, diverged, step, trigger,
                     wall if cfg.record_wall_time else float("nan"), filt.likelihood_evals)


def _replicate_job(args) -> RunRecord:
    return run_replicate(*args)


def _map(fn, jobs: list, threads: int) -> list:
    """Ordered map, in a process pool when ``threads > 1``."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


RUN_HEADER = ["algorithm", "n_x", "n_z", "run", "component", "rmse", "diverged", "divergence_step",
              "divergence_trigger", "wall_time", "likelihood_evals"]
SUMMARY_HEADER = [f.name for f in dataclasses.fields(Aggregate)]


@dataclass
class ExperimentResult:
    records: list[RunRecord]
    summary: list[Aggregate]
    components: list[str]

    @property
    def all_diverged(self) -> bool:
        return bool(self.records) and all(r.diverged for r in self.records)

    def rmse_matrix(self, algorithm: str, n_x: int, n_z: int) -> np.ndarray:
        """Runs by components, ordered by run index."""
        group = sorted((r for r in self.records if (r.algorithm, r.n_x, r.n_z) == (algorithm, n_x, n_z)),
                       key=lambda r: r.run)
        return np.array([r.rmse for r in group])

    def rate(self, algorithm: str, n_x: int, n_z: int) -> float:
        return divergence_rate([r for r in self.records if (r.algorithm, r.n_x, r.n_z) == (algorithm, n_x, n_z)])

    def write(self, out) -> None:
        rows = ([r.algorithm, r.n_x, r.n_z, r.run, name, r.rmse[c], r.diverged, r.divergence_step,
                 r.divergence_trigger, r.wall_time, r.likelihood_evals]
                for r in self.records for c, name in enumerate(self.components))
        _write_csv(out, RUN_HEADER, rows)
        _write_csv(summary_path(out), SUMMARY_HEADER,
                   (dataclasses.astuple(a) for a in self.summary))


def _execute(cfg: ExperimentConfig, points: list[tuple[str, int, int]]) -> ExperimentResult:
    jobs = [(cfg, r, a, nx, nz) for a, nx, nz in points for r in range(cfg.runs)]
    records = _map(_replicate_job, jobs, cfg.threads)
    names = component_names(build_model(cfg.model)[0])
    result = ExperimentResult(records, aggregate(records, names), names)
    if cfg.out:
        result.write(cfg.out)
    return result


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Replicate the configured filter ``cfg.runs`` times; writes CSVs when ``cfg.out`` is set."""
    cfg.validate()
    if cfg.algorithm == "bandit":
        raise ConfigError("algorithm", "use bandit_demo for bandit runs")
    return _execute(cfg, [(cfg.algorithm, cfg.n_x, cfg.n_z)])


def compare_suite(cfg: ExperimentConfig, algorithms: Sequence[str] | None = None,
                  grid: Sequence[Sequence[int]] | None = None) -> ExperimentResult:
    """Every algorithm at every ``(n_x, n_z)`` point on shared seeds; PF gets ``n_x * (n_z + 1)`` particles."""
    algorithms = list(algorithms if algorithms is not None else cfg.grid_algorithms)
    grid = [tuple(g) for g in (grid if grid is not None else cfg.grid)]
    cfg = cfg.with_overrides(grid_algorithms=algorithms, grid=[list(g) for g in grid]).validate()
    return _execute(cfg, [(a, nx, nz) for nx, nz in grid for a in algorithms])


# ---------------------------------------------------------------- bandit


@dataclass
class BanditRun:
    """One bandit run. ``p`` and ``p_hat`` are steps by actions; RMSEs cover ``window`` only."""

    run: int
    p: np.ndarray
    p_hat: np.ndarray
    chosen: np.ndarray
    reward: np.ndarray
    eps: np.ndarray
    window: tuple[int, int]
    rmse_actions: np.ndarray  # actions by components
    rmse_bandit: np.ndarray
    crossing: np.ndarray  # first step each action's p exceeds the threshold, -1 if never
    switch_step: int  # first step at/after the change point where the leading action's p < 0.5

    def best_action(self) -> int:
        return int(np.argmin(self.rmse_actions.mean(axis=1)))


def _first(mask: np.ndarray, offset: int = 0) -> int:
    idx = np.flatnonzero(mask)
    return int(idx[0]) + offset if len(idx) else -1


def bandit_run(cfg: ExperimentConfig, run: int) -> BanditRun:
    """Hedge or Exp3 over the two decomposition orders on one simulated trajectory."""
    if cfg.change_point is not None:
        truth = change_point_model(cfg.model, cfg.change_point)
    else:
        truth = build_model(cfg.model)[0]
    actions = [truth, swap_decomposition(truth)]
    traj = simulate_trajectory(truth, cfg.T, RngStream(cfg.seed, (run, 0)))
    fstream = lambda k: RngStream(cfg.seed, (run, 1, k))  # noqa: E731
    filters = [make_filter(cfg, cfg.bandit_filter, m, fstream(k)) for k, m in enumerate(actions)]
    ctrl = Controller(cfg.bandit_mode, RngStream(cfg.seed, (run, 2)), alpha=cfg.alpha, eta=cfg.eta,
                      gamma=cfg.gamma, keep_alive=cfg.exp3_keep_alive, K=2)
    live = cfg.bandit_mode == "hedge" or cfg.exp3_keep_alive
    T, d = cfg.T, truth.dim_x + truth.dim_z
    est_bandit = np.empty((T, d))
    est_fixed = np.empty((2, T, d))
    for t, y in enumerate(traj.ys):
        chosen, ctrl, filters = controller_step(ctrl, filters, y)
        est_bandit[t] = filters[chosen].estimate_reference()
        if live:
            for k in range(2):
                est_fixed[k, t] = filters[k].estimate_reference()
    if not live:
        # filters left behind by Exp3 are not fixed-action runs; rerun them on the same streams
        for k, m in enumerate(actions):
            est_fixed[k] = run_filter(make_filter(cfg, cfg.bandit_filter, m, fstream(k)), traj.ys)[0]
    length = cfg.window if cfg.window is not None else (T - cfg.change_point if cfg.change_point else T)
    lo = T - length
    truth_w = traj.states[lo:]
    log = ctrl.log
    p = np.array([e["p"] for e in log])
    leader = int(np.argmax(p[lo - 1])) if cfg.change_point else int(np.argmax(p[-1]))
    switch = _first(p[cfg.change_point:, leader] < 0.5, cfg.change_point) if cfg.change_point else -1
    return BanditRun(
        run, p, np.array([e["p_hat"] for e in log]), np.array([e["chosen"] for e in log]),
        np.array([e["reward"] for e in log]), np.array([e["eps"] for e in log]), (lo, T),
        np.array([rmse(truth_w, est_fixed[k, lo:]) for k in range(2)]), rmse(truth_w, est_bandit[lo:]),
        np.array([_first(p[:, k] > cfg.convergence_threshold) for k in range(2)]), switch,
    )


def _bandit_job(args) -> BanditRun:
    return bandit_run(*args)


BANDIT_HEADER = ["run", "t", "p0", "p1", "p_hat0", "p_hat1", "chosen", "reward", "eps0", "eps1"]
BANDIT_SUMMARY_HEADER = ["run", "mode", "window_start", "window_end", "component", "rmse_action0",
                         "rmse_action1", "rmse_bandit", "crossing0", "crossing1", "switch_step"]


def bandit_demo(cfg: ExperimentConfig) -> list[BanditRun]:
    """Per-step action probabilities for ``cfg.runs`` seeded runs; CSVs when ``cfg.out`` is set."""
    cfg.validate()
    runs = _map(_bandit_job, [(cfg, r) for r in range(cfg.runs)], cfg.threads)
    if cfg.out:
        names = component_names(build_model(cfg.model)[0])
        _write_csv(cfg.out, BANDIT_HEADER,
                   ([b.run, t, *b.p[t], *b.p_hat[t], b.chosen[t], b.reward[t], *b.eps[t]]
                    for b in runs for t in range(len(b.p))))
        _write_csv(summary_path(cfg.out), BANDIT_SUMMARY_HEADER,
                   ([b.run, cfg.bandit_mode, *b.window, name, b.rmse_actions[0, c], b.rmse_actions[1, c],
                     b.rmse_bandit[c], *b.crossing, b.switch_step]
                    for b in runs for c, name in enumerate(names)))
    return runs


# ---------------------------------------------------------------- oracle


@dataclass
class OracleResult:
    """``errors[algorithm][n_total]`` is runs by components, in trajectory-state-std units."""

    errors: dict[str, dict[int, np.ndarray]]

    def mean_error(self, algorithm: str, n_total: int) -> np.ndarray:
        return self.errors[algorithm][n_total].mean(axis=0)


def _oracle_job(args) -> dict:
    cfg, run = args
    model, _ = build_model("linear_gaussian")
    traj = simulate_trajectory(model, cfg.T, RngStream(cfg.seed, (run, 0)))
    km, _ = kalman_filter(model, traj.ys)
    scale = traj.states.std(axis=0)
    out = {}
    for n_total in cfg.oracle_totals:
        n_x = max(1, n_total // cfg.oracle_n_z)
        for a in cfg.grid_algorithms:
            c = cfg.with_overrides(n_pf=n_total)
            filt = make_filter(c, a, model, RngStream(cfg.seed, (run, 1)), n_x, cfg.oracle_n_z)
            est, _ = run_filter(filt, traj.ys)
            out[a, n_total] = rmse(km, est) / scale
    return out


def oracle_check(cfg: ExperimentConfig) -> OracleResult:
    """Distance of each filter's posterior mean from the Kalman mean on the linear-Gaussian model.

    PF uses ``n_total`` particles; the nested filters use ``n_total // oracle_n_z``
    outer particles with ``oracle_n_z`` inner particles each.
    """
    cfg = cfg.with_overrides(model="linear_gaussian").validate()
    per_run = _map(_oracle_job, [(cfg, r) for r in range(cfg.runs)], cfg.threads)
    errors = {a: {n: np.array([d[a, n] for d in per_run]) for n in cfg.oracle_totals} for a in cfg.grid_algorithms}
    if cfg.out:
        names = component_names(build_model("linear_gaussian")[0])
        _write_csv(cfg.out, ["algorithm", "n_total", "run", "component", "error"],
                   ([a, n, r, name, errors[a][n][r, c]] for a in cfg.grid_algorithms for n in cfg.oracle_totals
                    for r in range(cfg.runs) for c, name in enumerate(names)))
        _write_csv(summary_path(cfg.out), ["algorithm", "n_total", "component", "mean_error"],
                   ([a, n, name, errors[a][n][:, c].mean()] for a in cfg.grid_algorithms
                    for n in cfg.oracle_totals for c, name in enumerate(names)))
    return OracleResult(errors)
