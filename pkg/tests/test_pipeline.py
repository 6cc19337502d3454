import json
import math

import numpy as np
import pytest

from divtsp.pipeline import (RunConfig, RunRecord, read_records, resolve, run_seed,
                             run_sweep, run_two_stage, seed_population, summarize, write_outputs)
from divtsp.report import build_report
from divtsp.tour import Tour
from divtsp.tsplib import ConfigurationError


def test_defaults_eil51():
    inst, best, thr, mu, pop_size, budget = resolve(RunConfig("eil51", 0.05))
    assert (mu, pop_size, budget) == (12, 36, 174800)
    assert thr.value == pytest.approx(447.3)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig("eil51", 0.1, variant="xd")
    with pytest.raises(ConfigurationError):
        RunConfig("eil51", 0.1, mode="other")
    with pytest.raises(ConfigurationError):
        resolve(RunConfig("eil51", 0.1, mu=1))
    with pytest.raises(ConfigurationError):
        resolve(RunConfig("eil51", 0.1, budget=36))
    with pytest.raises(ConfigurationError):
        resolve(RunConfig("eil51", 0.1, mu=12, pop_size=8))
    with pytest.raises(FileNotFoundError):
        resolve(RunConfig("no_such_instance", 0.1))


def check_record(r: RunRecord):
    assert not r.failure
    assert len(r.final_costs) == r.mu == r.feasible_count
    assert all(c <= r.threshold for c in r.final_costs)
    assert r.evals_used <= r.budget
    if r.nma_end_evals is not None:
        assert r.nma_end_evals <= r.last_improvement_evals <= r.budget
    assert 0 <= r.d2_final <= r.d1_final <= 1
    assert r.plateau_fraction == pytest.approx(r.last_improvement_evals / r.budget)


def test_paired_run_shares_stage_one():
    recs = run_seed(RunConfig("eil51", 0.1), 5)
    assert [r.variant for r in recs] == ["NMA-ED", "NMA-PD"]
    ed, pd = recs
    assert ed.nma_end_evals == pd.nma_end_evals and ed.stage1_digest == pd.stage1_digest
    for r in recs:
        check_record(r)


def test_single_variant_matches_paired():
    paired = run_seed(RunConfig("eil51", 0.1), 5)
    alone = run_two_stage(RunConfig("eil51", 0.1, variant="pd", seed=5))
    assert alone.to_json() == paired[1].to_json()


def test_ea_only_seeded_with_optimum(eil51):
    inst, best = eil51
    recs = run_seed(RunConfig("eil51", 0.2, mode="ea-only"), 1)
    assert [r.variant for r in recs] == ["ED", "PD"]
    for r in recs:
        check_record(r)
        assert r.nma_end_evals is None and r.ea_steps == r.budget == 174800
    from divtsp.pipeline import population_digest
    assert recs[0].stage1_digest == population_digest([best] * 12)


def test_infinite_alpha_picks_by_gmm():
    r = run_two_stage(RunConfig("eil51", math.inf, variant="ed", seed=2))
    assert r.nma_generations == 0 and r.nma_feasible_count == 36 and r.nma_end_evals == 36


def test_nma_only_reports_full_feasible_set():
    (r,) = run_seed(RunConfig("eil51", 0.2, mode="nma-only"), 4)
    assert r.variant == "NMA" and r.feasible_count == r.nma_feasible_count >= 12
    assert r.cluster_count == r.nma_cluster_count and r.mean_gap <= 1.2
    assert len(r.final_costs) == r.feasible_count


def test_failure_record():
    recs = run_seed(RunConfig("eil51", 1e-4, budget=40), 1)
    for r in recs:
        assert r.failure and r.d1_final is None and r.d2_final is None
        assert r.cluster_count is None and r.evals_used <= 40


def test_seed_population_padding_and_gmm():
    rng = np.random.default_rng(0)
    tours = [Tour(rng.permutation(10), c) for c in (30, 20, 25)]
    padded = seed_population(tours, 5)
    assert len(padded) == 5 and [t.cost for t in padded[3:]] == [20, 20]
    assert padded[3] is not tours[1] and np.array_equal(padded[3].perm, tours[1].perm)
    assert len(seed_population(tours, 2)) == 2


def test_determinism_and_jobs(tmp_path):
    cfgs = [RunConfig("eil51", 0.2, runs=2, seed=3), RunConfig("eil51", 0.05, runs=2, seed=3,
                                                               mode="ea-only")]
    a = run_sweep(cfgs, jobs=1)
    b = run_sweep(cfgs, jobs=2)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    assert [r.seed for r in a] == [3, 3, 4, 4, 3, 3, 4, 4]
    pa = write_outputs(a, tmp_path / "a")
    pb = write_outputs(b, tmp_path / "b")
    assert pa["records"].read_bytes() == pb["records"].read_bytes()
    assert pa["summary"].read_bytes() == pb["summary"].read_bytes()
    back = read_records(pa["records"])
    assert [r.to_json() for r in back] == [r.to_json() for r in a]


def test_summary_and_report_cells():
    recs = run_sweep([RunConfig("eil51", 0.2, runs=3, seed=0)])
    rows = {r["variant"]: r for r in summarize(recs)}
    ed = [r for r in recs if r.variant == "NMA-ED"]
    assert rows["NMA-ED"]["mean_d1"] == pytest.approx(100 * np.mean([r.d1_final for r in ed]))
    assert rows["NMA-ED"]["runs"] == 3 and rows["NMA-ED"]["failures"] == 0
    table = build_report(recs, ["diversity"])[0]
    (inst, alpha, vals), = table.rows
    assert vals[4] == rows["NMA-ED"]["mean_d1"] and vals[7] == rows["NMA-PD"]["mean_d2"]
    text = table.render()
    assert f"{rows['NMA-ED']['mean_d1']:.3f}" in text


def test_record_json_has_no_wall_time():
    r = run_two_stage(RunConfig("eil51", 0.2, variant="ed", seed=1))
    d = json.loads(r.to_json())
    assert "wall_time" not in d and r.wall_time is not None
