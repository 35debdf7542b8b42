"""Accuracy metrics and the simulation experiments.

Every replicate is a pure function of ``(config, p, n, rep)``: the graph and
error scales come from one seed stream keyed by ``(seed, p, rep)`` (shared
across sample sizes) and the data from another keyed by ``(seed, p, rep, n)``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import HDLingamError, InputError
from .graph import Dag, WeightedDag, has_unique_ordering, hub_dag, is_consistent_ordering, random_dag, topological_sort
from .search import EstimateConfig, GraphEstimate, estimate_graph
from .sem import ErrorSpec, Sem, simulate

SCENARIOS = ("random", "hub")


def kendall_tau(estimated, truth: Dag) -> float:
    """Kendall rank correlation between ``estimated`` and the unique ordering of ``truth``.

    Raises
    ------
    InputError
        If ``estimated`` is not a permutation of the graph's nodes, or the
        graph admits more than one topological ordering.
    """
    estimated = [int(v) for v in estimated]
    if sorted(estimated) != list(truth.nodes):
        raise InputError(f"ordering of length {len(estimated)} is not a permutation of 1..{truth.p}")
    if not has_unique_ordering(truth):
        raise InputError("true graph has several valid orderings; Kendall's tau is undefined")
    p = truth.p
    if p < 2:
        return 1.0
    true_pos = {v: i for i, v in enumerate(topological_sort(truth))}
    x = [true_pos[v] for v in estimated]
    score = sum(1 if x[j] > x[i] else -1 for i in range(p) for j in range(i + 1, p))
    return score / (p * (p - 1) / 2)


def structural_metrics(estimate: GraphEstimate, truth) -> dict:
    """Edge precision, recall and an exact-recovery flag."""
    dag = truth.dag if isinstance(truth, WeightedDag) else truth
    if sorted(estimate.ordering) != list(dag.nodes):
        raise InputError("estimate and truth have different node sets")
    est, true = set(estimate.edges), set(dag.edges)
    hit = len(est & true)
    precision = hit / len(est) if est else (1.0 if not true else 0.0)
    recall = hit / len(true) if true else 1.0
    exact = est == true and is_consistent_ordering(dag, estimate.ordering)
    return {"precision": precision, "recall": recall, "exact": exact}


@dataclass(frozen=True)
class ExperimentConfig:
    """A grid of simulation settings.

    ``n`` for a given ``p`` is ``round(m * p)`` for each multiplier ``m``.
    """

    p_values: tuple = (5, 10)
    n_multipliers: tuple = (50, 10)
    J: int = 3
    K: int = 4
    alpha: float = 0.8
    stats: tuple = ("maxmin",)
    replications: int = 100
    seed: int = 0
    scenario: str = "random"
    n_hubs: int = 3
    prune_scope: str = "candidates"

    def __post_init__(self):
        object.__setattr__(self, "p_values", tuple(int(p) for p in self.p_values))
        object.__setattr__(self, "n_multipliers", tuple(float(m) for m in self.n_multipliers))
        object.__setattr__(self, "stats", tuple(EstimateConfig(stat=s).stat for s in self.stats))
        if self.replications < 1:
            raise InputError(f"need at least one replication, got {self.replications}")
        if not self.n_multipliers or any(m <= 0 for m in self.n_multipliers):
            raise InputError("sample-size multipliers must be positive")
        if not self.p_values or any(p < 2 for p in self.p_values):
            raise InputError("every p must be at least 2")
        if self.scenario not in SCENARIOS:
            raise InputError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if not self.stats:
            raise InputError("choose at least one statistic")
        EstimateConfig(J=self.J, K=self.K, alpha=self.alpha, prune_scope=self.prune_scope)

    def sample_sizes(self, p: int) -> list:
        return [max(2, int(round(m * p))) for m in self.n_multipliers]

    def estimate_config(self, stat: str) -> EstimateConfig:
        return EstimateConfig(J=self.J, K=self.K, alpha=self.alpha, stat=stat, prune_scope=self.prune_scope)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:10]


FIELDS = ("scenario", "p", "n", "rep", "stat", "graph_seed", "data_seed", "kendall_tau",
          "exact", "precision", "recall", "final_g", "error")


def _seed(*key) -> int:
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1, np.uint64)[0])


def make_sem(config: ExperimentConfig, p: int, rep: int) -> Sem:
    """The replicate's ground-truth SEM (independent of ``n``)."""
    rng = np.random.default_rng(_seed(config.seed, p, rep))
    if config.scenario == "hub":
        wdag = hub_dag(p, config.n_hubs, rng)
    else:
        wdag = random_dag(p, config.J, rng)
    return Sem(wdag, ErrorSpec.scaled_uniform(p, rng))


def run_replicate(config: ExperimentConfig, p: int, n: int, rep: int, timing: bool = False) -> list:
    """One dataset, estimated once per statistic; failures are recorded, not raised."""
    graph_seed, data_seed = _seed(config.seed, p, rep), _seed(config.seed, p, rep, n)
    base = {"scenario": config.scenario, "p": p, "n": n, "rep": rep,
            "graph_seed": graph_seed, "data_seed": data_seed}
    try:
        sem = make_sem(config, p, rep)
        data = simulate(sem, n, data_seed)
    except HDLingamError as exc:
        return [{**base, "stat": s, **_failed(exc)} for s in config.stats]
    out = []
    for stat in config.stats:
        rec = {**base, "stat": stat}
        start = time.perf_counter()
        try:
            est = estimate_graph(data, config.estimate_config(stat))
        except HDLingamError as exc:
            rec.update(_failed(exc))
        else:
            rec.update(kendall_tau=kendall_tau(est.ordering, sem.wdag.dag),
                       final_g=est.diagnostics["final_g"], error="",
                       **structural_metrics(est, sem.wdag))
        if timing:
            rec["seconds"] = time.perf_counter() - start
        out.append(rec)
    return out


def _failed(exc) -> dict:
    return {"kendall_tau": math.nan, "exact": False, "precision": math.nan, "recall": math.nan,
            "final_g": math.nan, "error": f"{type(exc).__name__}: {exc}"}


def _run_task(args):
    return run_replicate(*args)


@dataclass
class ExperimentResult:
    """Per-replicate records plus the configuration that produced them."""

    config: ExperimentConfig
    records: list
    kind: str = "low_dim"
    timing: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def fields(self) -> tuple:
        return FIELDS + (("seconds",) if self.timing else ())

    def cells(self) -> dict:
        out: dict = {}
        for r in self.records:
            out.setdefault((r["p"], r["n"], r["stat"]), []).append(r)
        return out

    def kendall(self, p: int, n: int, stat: str) -> np.ndarray:
        return np.array([r["kendall_tau"] for r in self.cells()[(p, n, stat)]], dtype=float)

    def summary(self) -> dict:
        rows = []
        for (p, n, stat), recs in sorted(self.cells().items()):
            tau = np.array([r["kendall_tau"] for r in recs], dtype=float)
            ok = tau[~np.isnan(tau)]
            row = {"p": p, "n": n, "stat": stat, "replicates": len(recs),
                   "failures": int(np.isnan(tau).sum()),
                   "exact_rate": float(np.mean([bool(r["exact"]) for r in recs]))}
            if ok.size:
                q = np.quantile(ok, [0.1, 0.25, 0.5, 0.75, 0.9])
                row.update({f"kendall_q{int(k * 100):02d}": float(v) for k, v in zip((.1, .25, .5, .75, .9), q)})
                row["kendall_median"] = float(np.median(ok))
            if self.timing:
                row["mean_seconds"] = float(np.mean([r["seconds"] for r in recs]))
            rows.append(row)
        return {"kind": self.kind, "config": asdict(self.config), "config_hash": self.config.digest(),
                "cells": rows}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.fields, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for r in self.records:
            writer.writerow({k: _fmt(r.get(k)) for k in self.fields})
        return buf.getvalue()

    def write(self, outdir) -> tuple:
        """Write ``<kind>-<hash>-seed<seed>.csv`` and the matching ``.json`` summary."""
        os.makedirs(outdir, exist_ok=True)
        stem = os.path.join(outdir, f"{self.kind}-{self.config.digest()}-seed{self.config.seed}")
        with open(stem + ".csv", "w", newline="") as fh:
            fh.write(self.to_csv())
        with open(stem + ".json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return stem + ".csv", stem + ".json"


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return x


def run_grid(config: ExperimentConfig, kind: str = "low_dim", timing: bool = False,
             workers: int = 1) -> ExperimentResult:
    """Run every ``(p, n, rep)`` cell; timing runs always use a single worker."""
    tasks = [(config, p, n, rep, timing)
             for p in config.p_values for n in config.sample_sizes(p) for rep in range(config.replications)]
    if workers > 1 and not timing:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        chunks = [run_replicate(*t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    return ExperimentResult(config, records, kind, timing)


def run_low_dim(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Random-graph accuracy grid over ``p`` and ``n``."""
    if config.scenario != "random":
        raise InputError("the low-dimensional study uses random graphs")
    return run_grid(config, "low_dim", workers=workers)


def run_timing(config: ExperimentConfig) -> ExperimentResult:
    """Wall-clock of each statistic on shared datasets."""
    if set(config.stats) != {"minmax", "maxmin"}:
        config = replace(config, stats=("minmax", "maxmin"))
    return run_grid(config, "timing", timing=True)


def run_high_dim(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Random (in-degree 2) or hub graphs with ``n`` below ``p``."""
    if config.scenario == "random" and config.J != 2:
        raise InputError("the high-dimensional random-graph study uses J = 2")
    if config.scenario == "hub" and config.J < 2:
        raise InputError("hub graphs have in-degree 2; use J >= 2")
    return run_grid(config, f"high_dim_{config.scenario}", workers=workers)


PRESETS = {
    "desk": {
        "low_dim": ExperimentConfig(p_values=(5, 10), n_multipliers=(50, 10), replications=100),
        "timing": ExperimentConfig(p_values=(5, 10, 20, 40), n_multipliers=(50,), replications=10,
                                   stats=("minmax", "maxmin")),
        "high_dim": ExperimentConfig(p_values=(100, 200), n_multipliers=(0.75, 1.5), J=2,
                                     replications=20, scenario="hub"),
        "high_dim_random": ExperimentConfig(p_values=(100, 200), n_multipliers=(0.75, 1.5), J=2,
                                            replications=20, scenario="random"),
    },
    "full": {
        "low_dim": ExperimentConfig(p_values=(5, 10, 15, 20), n_multipliers=(50, 10), replications=500,
                                    stats=("minmax", "maxmin")),
        "timing": ExperimentConfig(p_values=(5, 10, 15, 20, 40, 80), n_multipliers=(50,), replications=500,
                                   stats=("minmax", "maxmin")),
        "high_dim": ExperimentConfig(p_values=(100, 200, 500, 1000, 1500), n_multipliers=(0.75,), J=2,
                                     replications=20, scenario="hub"),
        "high_dim_random": ExperimentConfig(p_values=(100, 200, 500, 1000, 1500), n_multipliers=(0.75,), J=2,
                                            replications=20, scenario="random"),
    },
}


def run_preset(preset: str, study: str, seed: int | None = None, workers: int = 1) -> ExperimentResult:
    """Run one study (``low_dim``, ``timing``, ``high_dim`` or ``high_dim_random``) of a preset."""
    try:
        config = PRESETS[preset][study]
    except KeyError:
        raise InputError(f"unknown preset/study {preset!r}/{study!r}; presets: {sorted(PRESETS)}, "
                         f"studies: {sorted(PRESETS['desk'])}") from None
    if seed is not None:
        config = replace(config, seed=seed)
    if study == "timing":
        return run_timing(config)
    if study.startswith("high_dim"):
        return run_high_dim(config, workers)
    return run_low_dim(config, workers)
