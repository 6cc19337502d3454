"""The 2-stage driver, the baseline modes, and seeded multi-run sweeps.

Randomness: every run seed ``s`` feeds ``numpy.random.SeedSequence(s)``,
which is split into three PCG64 streams, used by stage 1, the ED stage 2 and
the PD stage 2. Paired ED/PD runs therefore share one stage-1 outcome, and a
run's output depends only on its configuration and seed.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from .budget import EvalBudget, default_budget
from .diversity import cluster_count, d1, d2, gmm_select, mean_gap
from .ea import Mutation, Variant, run_ea
from .nma import NichingParams, run_nma
from .tour import Tour
from .tsplib import ConfigurationError, load_instance, make_threshold

MODES = ("two-stage", "ea-only", "nma-only")
VARIANTS = ("ed", "pd", "both")


@dataclass
class RunConfig:
    instance: str
    alpha: float
    opt_tour: str | None = None
    opt_cost: float | None = None
    mu: int | None = None
    pop_size: int | None = None
    budget_factor: float = 40
    budget: float | None = None
    variant: str = "both"
    mode: str = "two-stage"
    mutation: str = "2opt"
    seed: int = 0
    runs: int = 30
    cutoff: float = 0.2
    check: bool = False

    def __post_init__(self):
        self.variant = str(self.variant).lower()
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        Mutation(self.mutation)
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if not self.cutoff > 0:
            raise ConfigurationError("cutoff must be > 0")

    def variants(self) -> list[Variant]:
        if self.mode == "nma-only":
            return []
        return [Variant.ED, Variant.PD] if self.variant == "both" else [Variant.parse(self.variant)]


@dataclass
class RunRecord:
    instance: str
    n: int
    opt_cost: int
    alpha: float
    threshold: float
    mu: int
    pop_size: int
    budget: float
    mode: str
    variant: str
    mutation: str
    seed: int
    failure: bool
    feasible_count: int
    d1_final: float | None = None
    d2_final: float | None = None
    cluster_count: int | None = None
    cutoff: float = 0.2
    mean_gap: float | None = None
    nma_end_evals: float | None = None
    nma_generations: int | None = None
    nma_feasible_count: int | None = None
    nma_cluster_count: int | None = None
    nma_mean_gap: float | None = None
    last_improvement_evals: float | None = None
    evals_used: float = 0.0
    ea_steps: int | None = None
    ea_accepted: int | None = None
    nma_fraction: float | None = None
    plateau_fraction: float | None = None
    stage1_digest: str | None = None
    final_costs: list[int] = field(default_factory=list)
    wall_time: float | None = None

    def to_dict(self, with_time: bool = False) -> dict:
        d = asdict(self)
        if not with_time:
            d.pop("wall_time")
        return d

    def to_json(self) -> str:
        """Canonical JSON line; excludes ``wall_time`` so reruns are byte-identical."""
        return json.dumps(self.to_dict(), separators=(", ", ": "))

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def label(mode: str, variant: Variant | None) -> str:
    if mode == "nma-only":
        return "NMA"
    if mode == "ea-only":
        return variant.value
    return f"NMA-{variant.value}"


@lru_cache(maxsize=32)
def _load(instance: str, opt_tour: str | None, opt_cost: float | None):
    return load_instance(instance, opt_tour, opt_cost)


def resolve(cfg: RunConfig):
    """Load the instance and fill in the defaults that depend on it."""
    inst, best = _load(cfg.instance, cfg.opt_tour, cfg.opt_cost)
    thr = make_threshold(inst, cfg.alpha)
    mu = inst.n // 4 if cfg.mu is None else cfg.mu
    if mu < 2:
        raise ConfigurationError(f"mu must be >= 2, got {mu}")
    pop_size = 3 * mu if cfg.pop_size is None else cfg.pop_size
    if pop_size < mu:
        raise ConfigurationError(f"pop_size ({pop_size}) must be >= mu ({mu})")
    budget = default_budget(mu, inst.n, cfg.budget_factor) if cfg.budget is None else cfg.budget
    if not budget > pop_size:
        raise ConfigurationError(f"budget ({budget}) must exceed pop_size ({pop_size})")
    if cfg.mode == "ea-only" and best is None:
        raise ConfigurationError("ea-only mode needs an optimum tour (--opt-tour)")
    return inst, best, thr, mu, pop_size, budget


def population_digest(pop: list[Tour]) -> str:
    h = hashlib.sha256()
    for t in pop:
        h.update(np.asarray(t.perm, dtype="<i4").tobytes())
    return h.hexdigest()[:16]


def seed_population(feasible: list[Tour], mu: int) -> list[Tour]:
    """Reduce to ``mu`` tours by greedy max-min selection, or pad with copies
    of the cheapest tour when there are too few."""
    if len(feasible) > mu:
        return gmm_select(feasible, mu)
    best = min(range(len(feasible)), key=lambda i: (feasible[i].cost, i))
    return list(feasible) + [feasible[best].copy() for _ in range(mu - len(feasible))]


def _streams(seed: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def run_seed(cfg: RunConfig, seed: int) -> list[RunRecord]:
    """One run: stage 1 (when the mode has it) shared by every requested variant."""
    t0 = time.perf_counter()
    inst, best, thr, mu, pop_size, total = resolve(cfg)
    rng_nma, rng_ed, rng_pd = _streams(seed)
    base = dict(instance=inst.name, n=inst.n, opt_cost=int(inst.optimum_cost), alpha=cfg.alpha,
                threshold=thr.value, mu=mu, pop_size=pop_size, budget=total, mode=cfg.mode,
                mutation=cfg.mutation, seed=seed, cutoff=cfg.cutoff)
    budget = EvalBudget(total, inst.n)

    stage1 = {}
    if cfg.mode == "ea-only":
        p0 = [best.copy() for _ in range(mu)]
    else:
        params = NichingParams.for_mu(mu, pop_size)
        res = run_nma(inst, thr, mu, params, budget, rng_nma)
        stage1 = dict(nma_end_evals=budget.used, nma_generations=res.generations,
                      nma_feasible_count=len(res.feasible),
                      nma_fraction=budget.used / total)
        if res.feasible:
            stage1.update(nma_cluster_count=cluster_count(res.feasible, cfg.cutoff),
                          nma_mean_gap=mean_gap(res.feasible, inst))
        if cfg.mode == "nma-only":
            pop = res.feasible
            rec = RunRecord(**base, **stage1, variant="NMA", failure=not pop,
                            feasible_count=len(pop), evals_used=budget.used,
                            final_costs=[int(t.cost) for t in pop])
            if pop:
                rec.cluster_count = stage1["nma_cluster_count"]
                rec.mean_gap = stage1["nma_mean_gap"]
                if len(pop) >= 2:
                    rec.d1_final, rec.d2_final = d1(pop), d2(pop)
            rec.wall_time = time.perf_counter() - t0
            return [rec]
        if not res.feasible:
            recs = [RunRecord(**base, **stage1, variant=label(cfg.mode, v), failure=True,
                              feasible_count=0, evals_used=budget.used)
                    for v in cfg.variants()]
            for r in recs:
                r.wall_time = time.perf_counter() - t0
            return recs
        p0 = seed_population(res.feasible, mu)

    digest = population_digest(p0)
    records = []
    for v in cfg.variants():
        b = copy.deepcopy(budget)
        rng = rng_ed if v is Variant.ED else rng_pd
        out = run_ea(p0, inst, thr, v, b, rng, mutation=Mutation(cfg.mutation), check=cfg.check)
        pop = out.population
        rec = RunRecord(
            **base, **stage1, variant=label(cfg.mode, v), failure=False,
            feasible_count=sum(1 for t in pop if thr.accepts(t.cost)),
            d1_final=d1(pop), d2_final=d2(pop),
            cluster_count=cluster_count(pop, cfg.cutoff), mean_gap=mean_gap(pop, inst),
            last_improvement_evals=out.last_improvement, evals_used=b.used,
            ea_steps=out.steps, ea_accepted=out.accepted,
            plateau_fraction=out.last_improvement / total, stage1_digest=digest,
            final_costs=[int(t.cost) for t in pop])
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
    return records


def run_two_stage(cfg: RunConfig) -> RunRecord:
    """Single run of one variant at ``cfg.seed``."""
    if cfg.variant == "both":
        raise ConfigurationError("run_two_stage runs one variant; use run_seed for both")
    return run_seed(cfg, cfg.seed)[0]


def _task(args):
    cfg, seed = args
    return run_seed(cfg, seed)


def run_sweep(cfgs: list[RunConfig], jobs: int = 1) -> list[RunRecord]:
    """All runs of all configs (seeds ``cfg.seed + r``), in config then seed order."""
    for cfg in cfgs:
        resolve(cfg)  # fail before any run starts
    tasks = [(cfg, cfg.seed + r) for cfg in cfgs for r in range(cfg.runs)]
    if jobs <= 1 or len(tasks) == 1:
        results = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_task, tasks))
    return [rec for recs in results for rec in recs]


def run_experiment(cfg: RunConfig, jobs: int = 1) -> tuple[list[RunRecord], list[dict]]:
    records = run_sweep([cfg], jobs)
    return records, summarize(records)


SUMMARY_METRICS = {
    "d1": lambda r: None if r.d1_final is None else 100 * r.d1_final,
    "d2": lambda r: None if r.d2_final is None else 100 * r.d2_final,
    "plateau_pct": lambda r: None if r.plateau_fraction is None else 100 * r.plateau_fraction,
    "nma_pct": lambda r: None if r.nma_fraction is None else 100 * r.nma_fraction,
    "clusters": lambda r: r.cluster_count,
    "gap": lambda r: r.mean_gap,
}


def _stats(values):
    if not values:
        return dict(mean=None, std=None, min=None, max=None)
    a = np.asarray(values, dtype=np.float64)
    std = float(a.std(ddof=1)) if len(a) > 1 else 0.0
    return dict(mean=float(a.mean()), std=std, min=float(a.min()), max=float(a.max()))


def summarize(records: list[RunRecord]) -> list[dict]:
    """Per (instance, alpha, variant) mean/std/min/max; percentages are 0..100,
    standard deviations use ``ddof=1``. Failed runs only add to ``failures``."""
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.instance, r.alpha, r.variant), []).append(r)
    rows = []
    for (inst, alpha, var), recs in groups.items():
        ok = [r for r in recs if not r.failure]
        row = dict(instance=inst, alpha=alpha, variant=var, runs=len(recs),
                   failures=len(recs) - len(ok))
        for name, get in SUMMARY_METRICS.items():
            vals = [get(r) for r in ok if get(r) is not None]
            for stat, v in _stats(vals).items():
                row[f"{stat}_{name}"] = v
        rows.append(row)
    return rows


SUMMARY_COLUMNS = ["instance", "alpha", "variant", "runs", "failures"] + [
    f"{s}_{m}" for m in SUMMARY_METRICS for s in ("mean", "std", "min", "max")]


def write_outputs(records: list[RunRecord], out: str | Path) -> dict[str, Path]:
    """``<out>.jsonl`` (records), ``<out>.csv`` (summary), ``<out>.timings.csv``."""
    out = Path(out)
    if out.suffix in (".jsonl", ".json", ".csv"):
        out = out.with_suffix("")
    out.parent.mkdir(parents=True, exist_ok=True)
    paths = {"records": out.with_suffix(".jsonl"), "summary": out.with_suffix(".csv"),
             "timings": out.with_name(out.name + ".timings.csv")}
    with open(paths["records"], "w") as f:
        for r in records:
            f.write(r.to_json() + "\n")
    with open(paths["summary"], "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        for row in summarize(records):
            w.writerow({k: _csv_cell(v) for k, v in row.items()})
    with open(paths["timings"], "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["instance", "alpha", "variant", "seed", "wall_time"])
        for r in records:
            w.writerow([r.instance, r.alpha, r.variant, r.seed,
                        "" if r.wall_time is None else f"{r.wall_time:.3f}"])
    return paths


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return v


def read_records(path: str | Path) -> list[RunRecord]:
    with open(path) as f:
        return [RunRecord.from_dict(json.loads(line)) for line in f if line.strip()]


def sweep_configs(instances, alphas, variant="both", modes=("two-stage",), **kw) -> list[RunConfig]:
    return [RunConfig(instance=i, alpha=a, variant=variant, mode=m, **kw)
            for i in instances for a in alphas for m in modes]


__all__ = ["RunConfig", "RunRecord", "run_seed", "run_two_stage", "run_experiment",
           "run_sweep", "summarize", "write_outputs", "read_records", "seed_population",
           "sweep_configs"]
