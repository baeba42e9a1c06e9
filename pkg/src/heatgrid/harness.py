"""Experiment harness: grids of training cells run to a results table.

A configuration names one catalog environment, a grid of parameter overrides
(environment params x algorithms x alphas x exploration schedules), one
population size and frame budget, and evaluation settings. Every grid cell
trains an independent population and is evaluated at each checkpoint with
greedy rollouts.

Populations are split into fixed 500-agent blocks. Each block draws its
training and evaluation streams from (master_seed, block_index, tagged cell
label), and block results are reduced in block order, so results are
byte-identical no matter how many worker processes are used.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .catalog import CATALOG, make_spec
from .engine import greedy_policies, train_population
from .env import RIGHT, GridSpec, SpecError
from .evaluate import evaluate_population_fast, policy_action_counts, policy_name_1d
from .learners import ALGORITHMS, EpsilonSchedule, Hyperparams
from .report import write_csv, write_manifest, write_matrix_csv, write_svg_heatmap
from .rng import seed_stream

from . import __version__ as PACKAGE_VERSION

BLOCK_SIZE = 500


class ConfigError(ValueError):
    """Configuration problem, annotated with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path}: {message}")
        self.path = path


# ---- configuration ----

@dataclass
class EvalSettings:
    cutoff: int = 500
    rollouts_per_agent: int = 1
    collect_density: bool = False


@dataclass
class CellSpec:
    env_name: str
    env_params: dict
    algorithm: str
    hyper: Hyperparams
    frame_budget: int
    checkpoints: tuple
    population: int
    eval: EvalSettings
    label: str


def _schedule_from_value(value, path: str) -> EpsilonSchedule:
    if isinstance(value, (int, float)):
        return EpsilonSchedule(kind="constant", eps=float(value))
    if isinstance(value, EpsilonSchedule):
        return value
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected number or object, got {value!r}")
    kind = value.get("kind", "constant")
    try:
        if kind == "constant":
            return EpsilonSchedule(kind="constant", eps=float(value.get("eps", 0.1)))
        if kind == "exp-decay":
            tau = value.get("tau")
            return EpsilonSchedule(kind="exp-decay",
                                   eps0=float(value.get("eps0", 1.0)),
                                   eps_min=float(value.get("eps_min", 0.01)),
                                   tau=float(tau) if tau is not None else None)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown schedule kind {kind!r}")


def _schedule_to_dict(s: EpsilonSchedule) -> dict:
    if s.kind == "constant":
        return {"kind": "constant", "eps": s.eps}
    return {"kind": "exp-decay", "eps0": s.eps0, "eps_min": s.eps_min, "tau": s.tau}


@dataclass
class ExperimentConfig:
    environment: str
    scenario: str = "custom"
    env_params: dict = field(default_factory=dict)
    env_grid: list = field(default_factory=lambda: [{}])
    algorithms: list = field(default_factory=lambda: ["q"])
    alphas: list = field(default_factory=lambda: [0.1])
    gamma: float = 0.9
    q_init: float = 0.0
    epsilon_grid: list = field(default_factory=lambda: [EpsilonSchedule()])
    population: int = 100
    frame_budget: int = 20_000
    checkpoints: list = field(default_factory=list)
    eval_cutoff: int = 500
    rollouts_per_agent: int = 1
    collect_density: bool = False
    master_seed: int = 20260815

    def __post_init__(self):
        if not self.checkpoints:
            self.checkpoints = [self.frame_budget]
        self.validate()

    def validate(self):
        if self.environment not in CATALOG:
            raise ConfigError("environment",
                              f"unknown environment {self.environment!r}; "
                              f"known: {sorted(CATALOG)}")
        if not self.algorithms:
            raise ConfigError("algorithms", "must not be empty")
        for i, algo in enumerate(self.algorithms):
            if algo not in ALGORITHMS:
                raise ConfigError(f"algorithms[{i}]",
                                  f"unknown algorithm {algo!r}; known: {ALGORITHMS}")
        if not self.alphas:
            raise ConfigError("alphas", "must not be empty")
        for i, a in enumerate(self.alphas):
            if not 0 < a <= 1:
                raise ConfigError(f"alphas[{i}]", f"alpha must be in (0, 1], got {a}")
        if not 0 <= self.gamma < 1:
            raise ConfigError("gamma", f"must be in [0, 1), got {self.gamma}")
        if not math.isfinite(self.q_init):
            raise ConfigError("q_init", f"must be finite, got {self.q_init}")
        if self.population < 1:
            raise ConfigError("population", f"must be >= 1, got {self.population}")
        if self.frame_budget < 1:
            raise ConfigError("frame_budget", f"must be >= 1, got {self.frame_budget}")
        for i, f in enumerate(self.checkpoints):
            if not 0 < f <= self.frame_budget:
                raise ConfigError(f"checkpoints[{i}]",
                                  f"must lie in (0, {self.frame_budget}], got {f}")
        if list(self.checkpoints) != sorted(set(self.checkpoints)):
            raise ConfigError("checkpoints", "must be strictly increasing")
        if self.eval_cutoff < 1:
            raise ConfigError("eval_cutoff", f"must be >= 1, got {self.eval_cutoff}")
        if self.rollouts_per_agent < 1:
            raise ConfigError("rollouts_per_agent",
                              f"must be >= 1, got {self.rollouts_per_agent}")
        for i, over in enumerate(self.env_grid):
            try:
                make_spec(self.environment, **{**self.env_params, **over})
            except (TypeError, SpecError, ValueError) as exc:
                raise ConfigError(f"env_grid[{i}]", str(exc)) from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if "environment" not in d:
            raise ConfigError("environment", "required field is missing")
        known = {"scenario", "environment", "env_params", "env_grid", "algorithms",
                 "alphas", "gamma", "q_init", "epsilon", "population",
                 "frame_budget", "checkpoints", "eval_cutoff",
                 "rollouts_per_agent", "collect_density", "master_seed"}
        for key in d:
            if key not in known:
                raise ConfigError(key, "unknown field")
        eps = d.get("epsilon", 0.1)
        if isinstance(eps, list):
            schedules = [_schedule_from_value(v, f"epsilon[{i}]")
                         for i, v in enumerate(eps)]
        else:
            schedules = [_schedule_from_value(eps, "epsilon")]
        return cls(
            environment=d["environment"],
            scenario=d.get("scenario", "custom"),
            env_params=dict(d.get("env_params", {})),
            env_grid=[dict(g) for g in d.get("env_grid", [{}])],
            algorithms=list(d.get("algorithms", ["q"])),
            alphas=[float(a) for a in d.get("alphas", [0.1])],
            gamma=float(d.get("gamma", 0.9)),
            q_init=float(d.get("q_init", 0.0)),
            epsilon_grid=schedules,
            population=int(d.get("population", 100)),
            frame_budget=int(d.get("frame_budget", 20_000)),
            checkpoints=[int(c) for c in d.get("checkpoints", [])],
            eval_cutoff=int(d.get("eval_cutoff", 500)),
            rollouts_per_agent=int(d.get("rollouts_per_agent", 1)),
            collect_density=bool(d.get("collect_density", False)),
            master_seed=int(d.get("master_seed", 20260815)),
        )

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "environment": self.environment,
            "env_params": self.env_params,
            "env_grid": self.env_grid,
            "algorithms": list(self.algorithms),
            "alphas": list(self.alphas),
            "gamma": self.gamma,
            "q_init": self.q_init,
            "epsilon": [_schedule_to_dict(s) for s in self.epsilon_grid],
            "population": self.population,
            "frame_budget": self.frame_budget,
            "checkpoints": list(self.checkpoints),
            "eval_cutoff": self.eval_cutoff,
            "rollouts_per_agent": self.rollouts_per_agent,
            "collect_density": self.collect_density,
            "master_seed": self.master_seed,
        }

    def cells(self) -> list[CellSpec]:
        out = []
        eval_settings = EvalSettings(cutoff=self.eval_cutoff,
                                     rollouts_per_agent=self.rollouts_per_agent,
                                     collect_density=self.collect_density)
        for over, algo, alpha, schedule in itertools.product(
                self.env_grid, self.algorithms, self.alphas, self.epsilon_grid):
            params = {**self.env_params, **over}
            hyper = Hyperparams(alpha=alpha, gamma=self.gamma, epsilon=schedule,
                                q_init=self.q_init)
            label_fields = {
                "env": self.environment, "params": params, "algorithm": algo,
                "alpha": alpha, "gamma": self.gamma, "epsilon": schedule.label(),
                "budget": self.frame_budget, "population": self.population,
            }
            # Zero init predates the knob; leaving it out of the label keeps
            # every zero-init cell on the stream it always had.
            if self.q_init != 0.0:
                label_fields["q_init"] = self.q_init
            label = json.dumps(label_fields, sort_keys=True,
                               separators=(",", ":"))
            out.append(CellSpec(env_name=self.environment, env_params=params,
                                algorithm=algo, hyper=hyper,
                                frame_budget=self.frame_budget,
                                checkpoints=tuple(self.checkpoints),
                                population=self.population, eval=eval_settings,
                                label=label))
        return out


# ---- block execution ----

@dataclass
class BlockEval:
    lengths: np.ndarray
    failed: int
    total: int
    heated_success: int
    action_counts: np.ndarray
    centre_actions: np.ndarray | None
    density: np.ndarray | None


def block_partition(population: int) -> list[int]:
    sizes = [BLOCK_SIZE] * (population // BLOCK_SIZE)
    if population % BLOCK_SIZE:
        sizes.append(population % BLOCK_SIZE)
    return sizes


def _evaluate_block(spec: GridSpec, policies: np.ndarray, settings: EvalSettings,
                    rng: np.random.Generator) -> BlockEval:
    fpt, density = evaluate_population_fast(
        policies, spec, settings.cutoff, settings.rollouts_per_agent, rng,
        collect_density=settings.collect_density)
    return BlockEval(
        lengths=fpt.lengths, failed=fpt.failed, total=fpt.total,
        heated_success=fpt.route_counts.get("heated", 0),
        action_counts=policy_action_counts(policies, spec.n_actions),
        centre_actions=policies[:, int(spec.start)] if spec.dims == 1 else None,
        density=density)


def _block_worker(task):
    cell, block_index, block_size, master_seed = task
    spec = make_spec(cell.env_name, **cell.env_params)
    train_rng = seed_stream(master_seed, block_index, "train/" + cell.label)
    tables = train_population(spec, cell.algorithm, cell.hyper, cell.frame_budget,
                              block_size, train_rng, checkpoints=cell.checkpoints)
    evals = {}
    for frame in cell.checkpoints:
        q, q_b = tables.snapshots[frame]
        policies = greedy_policies(q, q_b)
        eval_rng = seed_stream(master_seed, block_index, f"eval/{frame}/" + cell.label)
        evals[frame] = _evaluate_block(spec, policies, cell.eval, eval_rng)
    return evals


@dataclass
class CellResult:
    population: int
    rollouts_per_agent: int
    lengths: np.ndarray
    failed: int
    total: int
    heated_success: int
    action_counts: np.ndarray
    centre_actions: np.ndarray | None
    density: np.ndarray | None

    @property
    def successes(self) -> int:
        return self.total - self.failed

    @property
    def failed_pct(self) -> float:
        return 100.0 * self.failed / self.total

    @property
    def mfpt(self) -> float:
        return float(self.lengths.mean()) if self.lengths.size else math.nan

    @property
    def fpt_std(self) -> float:
        if self.lengths.size < 2:
            return 0.0 if self.lengths.size else math.nan
        return float(self.lengths.std(ddof=1))

    @property
    def heated_route_pct(self) -> float:
        if self.successes == 0:
            return math.nan
        return 100.0 * self.heated_success / self.successes

    def pct_action(self, state: int, action: int) -> float:
        return 100.0 * self.action_counts[state, action] / self.population

    def modal_policy(self) -> np.ndarray:
        return np.argmax(self.action_counts, axis=1).astype(np.int64)


def _reduce_blocks(block_evals: list[BlockEval], cell: CellSpec) -> CellResult:
    lengths = np.concatenate([b.lengths for b in block_evals])
    centre = None
    if block_evals[0].centre_actions is not None:
        centre = np.concatenate([b.centre_actions for b in block_evals])
    density = None
    if block_evals[0].density is not None:
        density = np.sum([b.density for b in block_evals], axis=0)
    return CellResult(
        population=cell.population,
        rollouts_per_agent=cell.eval.rollouts_per_agent,
        lengths=lengths,
        failed=sum(b.failed for b in block_evals),
        total=sum(b.total for b in block_evals),
        heated_success=sum(b.heated_success for b in block_evals),
        action_counts=np.sum([b.action_counts for b in block_evals], axis=0),
        centre_actions=centre,
        density=density)


def run_cell(cell: CellSpec, master_seed: int, workers: int = 1) -> dict:
    """Train and evaluate one grid cell; {checkpoint: CellResult}."""
    tasks = [(cell, i, size, master_seed)
             for i, size in enumerate(block_partition(cell.population))]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            all_evals = list(pool.map(_block_worker, tasks))
    else:
        all_evals = [_block_worker(t) for t in tasks]
    return {frame: _reduce_blocks([ev[frame] for ev in all_evals], cell)
            for frame in cell.checkpoints}


# ---- experiment runs ----

@dataclass
class ExperimentRun:
    config: ExperimentConfig
    cells: list
    specs: list
    results: list          # per cell: {checkpoint: CellResult}
    rows: list             # result table, one dict per cell x checkpoint


def _base_row(config: ExperimentConfig, cell: CellSpec) -> dict:
    row = {
        "scenario": config.scenario,
        "environment": cell.env_name,
        "algorithm": cell.algorithm,
        "alpha": cell.hyper.alpha,
        "gamma": cell.hyper.gamma,
        "epsilon": cell.hyper.epsilon.label(),
    }
    notes = {}
    for key, value in sorted(cell.env_params.items()):
        if key == "temperature":
            row["temperature"] = value
        elif key == "drift":
            row["drift"] = value
        elif key == "variant":
            row["variant"] = value
        else:
            notes[key] = value
    if notes:
        row["notes"] = json.dumps(notes, sort_keys=True, separators=(",", ":"))
    return row


def _result_row(config, cell, spec, frame, res: CellResult) -> dict:
    row = _base_row(config, cell)
    row.update({
        "checkpoint": frame,
        "population": res.population,
        "rollouts_per_agent": res.rollouts_per_agent,
        "failed_pct": res.failed_pct,
        "mfpt": res.mfpt,
        "fpt_std": res.fpt_std,
    })
    if spec.dims == 2:
        row["heated_route_pct"] = res.heated_route_pct
    else:
        x0 = int(spec.start)
        row["policy_name"] = policy_name_1d(res.modal_policy(), spec)
        row["pct_right_x0"] = res.pct_action(x0, RIGHT)
        row["pct_right_x0m1"] = res.pct_action(x0 - 1, RIGHT)
        row["pct_right_x0m2"] = res.pct_action(x0 - 2, RIGHT)
    return row


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentRun:
    cells = config.cells()
    specs = [make_spec(c.env_name, **c.env_params) for c in cells]
    tasks = []
    for ci, cell in enumerate(cells):
        for bi, size in enumerate(block_partition(cell.population)):
            tasks.append((ci, (cell, bi, size, config.master_seed)))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            outputs = list(pool.map(_block_worker, [t for _, t in tasks]))
    else:
        outputs = [_block_worker(t) for _, t in tasks]

    per_cell: list[list] = [[] for _ in cells]
    for (ci, _), out in zip(tasks, outputs):
        per_cell[ci].append(out)  # pool.map preserves submission order

    results = []
    rows = []
    for ci, cell in enumerate(cells):
        by_frame = {frame: _reduce_blocks([ev[frame] for ev in per_cell[ci]], cell)
                    for frame in cell.checkpoints}
        results.append(by_frame)
        for frame in cell.checkpoints:
            rows.append(_result_row(config, cell, specs[ci], frame, by_frame[frame]))
    return ExperimentRun(config=config, cells=cells, specs=specs,
                         results=results, rows=rows)


def write_outputs(run: ExperimentRun, out_dir, force: bool = False) -> Path:
    out = Path(out_dir)
    results_csv = out / "results.csv"
    if results_csv.exists() and not force:
        raise FileExistsError(f"{results_csv} exists; pass force to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(results_csv, run.rows)

    cell_ids = {}
    for ci, (cell, spec) in enumerate(zip(run.cells, run.specs)):
        cid = f"cell{ci:03d}"
        cell_ids[cid] = cell.label
        for frame, res in run.results[ci].items():
            if res.density is not None:
                matrix = (res.density if spec.dims == 1
                          else res.density.reshape(spec.extent[1], spec.extent[0]))
                write_matrix_csv(out / f"density_{cid}_f{frame}.csv", matrix)
                write_svg_heatmap(out / f"density_{cid}_f{frame}.svg", matrix)
            if spec.dims == 1:
                freq_rows = [{"state": s,
                              "pct_right": res.pct_action(s, RIGHT)}
                             for s in range(spec.n_states)]
                write_csv(out / f"policy_freq_{cid}_f{frame}.csv", freq_rows,
                          columns=["state", "pct_right"])

    manifest = {
        "package_version": PACKAGE_VERSION,
        "block_size": BLOCK_SIZE,
        "config": run.config.to_dict(),
        "master_seed": run.config.master_seed,
        "cells": cell_ids,
        "environments": [
            {"cell": f"cell{ci:03d}", "name": spec.name,
             "absorption": spec.absorption}
            for ci, spec in enumerate(run.specs)],
    }
    write_manifest(out / "manifest.json", manifest)
    return out
