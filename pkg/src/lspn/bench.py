"""Experiment harness: seeded multi-trial sweeps, CSV reports and summaries."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import bkw, highnoise, lownoise
from .baseline import BaselineBudget, brute_force, gauss_repeat
from .oracle import Oracle, new_instance
from .outcome import Outcome

SOLVERS = ("low", "bkw", "high", "brute", "gauss")
CSV_HEADER = ["solver", "n", "k", "eta", "seed", "trial", "success", "wall_ms", "samples",
              "iterations", "status", "recovered"]


def brute_samples(n: int, k: int) -> int:
    """3 k log2 n rows, enough for the noiseless argmax to be unique w.h.p."""
    return max(1, math.ceil(3 * k * math.log2(max(n, 2))))


def run_solver(name: str, oracle: Oracle, k: int, eta: float, overrides: Optional[dict] = None,
               rng: Optional[np.random.Generator] = None) -> Outcome:
    """Dispatch by solver name; ``overrides`` feed the solver's config."""
    o = dict(overrides or {})
    rng = rng if rng is not None else np.random.default_rng()
    if name == "low":
        return lownoise.learn(oracle, k, eta, lownoise.LowNoiseConfig(**o), rng)
    if name == "bkw":
        return bkw.learn(oracle, k, eta, bkw.BkwConfig(**o), rng)
    if name == "high":
        return highnoise.learn(oracle, k, eta, highnoise.HighNoiseConfig(**o), rng)
    if name == "brute":
        m = o.pop("m", None) or brute_samples(oracle.instance.n, k)
        return brute_force(oracle.draw(m), k, BaselineBudget(**o))
    if name == "gauss":
        m2 = o.pop("m2", None)
        return gauss_repeat(oracle, eta, BaselineBudget(**o), m2=m2)
    raise ValueError(f"unknown solver {name!r}; expected one of {SOLVERS}")


@dataclass
class ExperimentSpec:
    solver: str
    points: list
    trials: int = 1
    master_seed: int = 0
    config: dict = field(default_factory=dict)
    out: Optional[str] = None
    record_timing: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.points:
            raise ValueError("parameter grid is empty")
        self.points = [(int(n), int(k), float(eta)) for n, k, eta in self.points]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        if "grid" in d:
            g = d.pop("grid")
            d["points"] = list(itertools.product(g["n"], g["k"], g["eta"]))
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**d)


def load_spec(path) -> ExperimentSpec:
    return ExperimentSpec.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TrialReport:
    solver: str
    n: int
    k: int
    eta: float
    seed: int
    trial: int
    success: bool
    wall_ms: int
    samples: int
    iterations: int
    status: str
    recovered: tuple
    point: int = 0

    def row(self) -> list:
        return [self.solver, self.n, self.k, repr(self.eta), self.seed, self.trial,
                "true" if self.success else "false", self.wall_ms, self.samples, self.iterations,
                self.status, ";".join(str(i) for i in self.recovered)]


def trial_seeds(master_seed: int, point: int, trial: int) -> tuple:
    """(instance seed, solver generator) derived from (master, point, trial)."""
    ss = np.random.SeedSequence([master_seed, point, trial])
    inst_seed, solver_ss = ss.spawn(2)
    return int(inst_seed.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)), np.random.default_rng(solver_ss)


def run_trial(spec: ExperimentSpec, point: int, trial: int) -> TrialReport:
    n, k, eta = spec.points[point]
    seed, rng = trial_seeds(spec.master_seed, point, trial)
    t0 = time.perf_counter()
    try:
        inst = new_instance(n, k, eta, seed)
        oracle = Oracle(inst)
        res = run_solver(spec.solver, oracle, k, eta, spec.config, rng)
        recovered = tuple(res.secret) if res.found else ()
        success = res.found and recovered == inst.secret
        status, samples, iters = res.status, oracle.samples_drawn, res.iterations
    except Exception:
        recovered, success, status, samples, iters = (), False, "error", 0, 0
    wall = int(round((time.perf_counter() - t0) * 1000)) if spec.record_timing else 0
    return TrialReport(spec.solver, n, k, eta, seed, trial, bool(success), wall, int(samples),
                       int(iters), status, recovered, point)


def _run_job(args):
    spec, point, trial = args
    return run_trial(spec, point, trial)


def run_experiment(spec: ExperimentSpec) -> list:
    """Every grid point times every trial; reports in (point, trial) order."""
    jobs = [(spec, p, t) for p in range(len(spec.points)) for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            reports = list(pool.map(_run_job, jobs))
    else:
        reports = [_run_job(j) for j in jobs]
    reports.sort(key=lambda r: (r.point, r.trial))
    return reports


def format_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(reports, path) -> None:
    Path(path).write_text(format_csv(reports))


def summarize(reports) -> list:
    """Per (solver, n, k, eta): success rate, median wall ms, mean samples.
    Anything but an exact recovery (capped, starved, error) counts as failure."""
    groups = {}
    for r in reports:
        groups.setdefault((r.solver, r.n, r.k, r.eta), []).append(r)
    out = []
    for (solver, n, k, eta), rs in groups.items():
        out.append({
            "solver": solver, "n": n, "k": k, "eta": eta, "trials": len(rs),
            "successes": sum(r.success for r in rs),
            "rate": sum(r.success for r in rs) / len(rs),
            "median_wall_ms": statistics.median(r.wall_ms for r in rs),
            "mean_samples": statistics.fmean(r.samples for r in rs),
        })
    return out
