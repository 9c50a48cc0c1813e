from __future__ import annotations

import random
from collections import Counter

import pytest

from minigi.lang import source_digest
from minigi.llm import LlmClientConfig, MockLlmClient
from minigi.patches import Patch, split_patch_line
from minigi.search import (
    EvalRecord,
    LlmSearchContext,
    LocalSearchConfig,
    RandomSamplingConfig,
    SearchState,
    SearchSetupError,
    local_search,
    propose_neighbor,
    random_sampling,
)

from oracles import poly_sum_call_steps, poly_sum_planted_cost


def mock_context(script=None, **kwargs) -> LlmSearchContext:
    client = MockLlmClient(LlmClientConfig(mode="mock"), script=script)
    return LlmSearchContext(client=client, project_name="bench", **kwargs)


def test_sampling_respects_budget_and_indices(bench_max):
    unit, tests = bench_max
    cfg = RandomSamplingConfig(families=("statement",), per_family_budget=10, seed=3)
    records = random_sampling(unit, tests, ["max2"], cfg)
    assert len(records) == 10
    assert [r.eval_index for r in records] == list(range(10))
    assert all(r.run_id == "statement" for r in records)


def test_sampling_is_replayable_bit_exactly(bench_max):
    unit, tests = bench_max
    cfg = RandomSamplingConfig(families=("statement", "insert"), per_family_budget=10, seed=3)
    first = random_sampling(unit, tests, ["max2", "clamp_low"], cfg)
    second = random_sampling(unit, tests, ["max2", "clamp_low"], cfg)
    assert first == second


def test_sampling_worker_width_does_not_change_records(bench_max):
    unit, tests = bench_max
    cfg = RandomSamplingConfig(families=("statement",), per_family_budget=25, seed=9)
    sequential = random_sampling(unit, tests, ["max2"], cfg, workers=1)
    parallel = random_sampling(unit, tests, ["max2"], cfg, workers=4)
    assert sequential == parallel


def test_each_logged_classic_patch_is_replayable_from_its_seed(bench_max):
    from minigi.operators import sample_statement_edit

    unit, tests = bench_max
    cfg = RandomSamplingConfig(families=("statement",), per_family_budget=5, seed=11)
    records = random_sampling(unit, tests, ["max2"], cfg)
    for record in records:
        seed, edits, _fp = split_patch_line(record.patch_line)
        redrawn = sample_statement_edit(unit, ["max2"], random.Random(seed))
        assert redrawn.serialize() == edits


def test_llm_budget_of_ten_issues_exactly_two_requests(bench_sort):
    unit, tests = bench_sort
    llm = mock_context(script=lambda req: "```\n{ }\n```\n" * 5)
    cfg = RandomSamplingConfig(families=("llm-medium",), per_family_budget=10, seed=1)
    records = random_sampling(unit, tests, ["sort"], cfg, llm=llm)
    assert len(records) == 10
    assert llm.client.requests_made == 2  # ceil(10 / 5)


def test_llm_request_count_is_ceil_of_budget_over_variants(bench_sort):
    unit, tests = bench_sort
    llm = mock_context(script=lambda req: "```\n{ }\n```")
    cfg = RandomSamplingConfig(families=("llm-simple",), per_family_budget=7, seed=1)
    random_sampling(unit, tests, ["sort"], cfg, llm=llm)
    assert llm.client.requests_made == 2  # ceil(7 / 5)


def test_llm_family_needs_context(bench_sort):
    unit, tests = bench_sort
    cfg = RandomSamplingConfig(families=("llm-medium",), per_family_budget=5, seed=1)
    with pytest.raises(SearchSetupError):
        random_sampling(unit, tests, ["sort"], cfg)


def test_unknown_family_rejected(bench_sort):
    unit, tests = bench_sort
    cfg = RandomSamplingConfig(families=("mystery",), per_family_budget=5, seed=1)
    with pytest.raises(SearchSetupError):
        random_sampling(unit, tests, ["sort"], cfg)


def test_sink_sees_every_record_in_order(bench_max):
    unit, tests = bench_max
    seen: list[EvalRecord] = []
    cfg = RandomSamplingConfig(families=("insert",), per_family_budget=8, seed=2)
    records = random_sampling(unit, tests, ["max2"], cfg, sink=seen.append)
    assert seen == records


# -- local search --


def test_local_search_budget_exact_first_eval_unpatched(bench_planted):
    unit, tests = bench_planted
    cfg = LocalSearchConfig(family="statement", runs=("poly_sum",), evals_per_run=100, seed=0)
    records = local_search(unit, tests, cfg)
    assert len(records) == 100
    assert records[0].eval_index == 0
    seed, edits, _ = split_patch_line(records[0].patch_line)
    assert edits == ""  # evaluation 1 is the empty patch
    assert records[0].classification == "Passed"
    assert [r.eval_index for r in records] == list(range(100))


def test_local_search_multiple_runs(bench_max):
    unit, tests = bench_max
    cfg = LocalSearchConfig(
        family="insert", runs=("max2", "clamp_low"), evals_per_run=20, seed=5
    )
    records = local_search(unit, tests, cfg)
    assert len(records) == 40
    assert {r.run_id for r in records} == {"insert/max2", "insert/clamp_low"}


def test_local_search_requires_passing_baseline(bench_sort):
    unit, _ = bench_sort
    from minigi.lang import parse_test_file

    failing = parse_test_file("test wrong: max2(1, 2) == 0")
    cfg = LocalSearchConfig(family="statement", runs=("max2",), evals_per_run=5, seed=0)
    with pytest.raises(SearchSetupError):
        local_search(unit, failing, cfg)


def test_local_search_unknown_method_rejected(bench_sort):
    unit, tests = bench_sort
    cfg = LocalSearchConfig(family="statement", runs=("nope",), evals_per_run=5, seed=0)
    with pytest.raises(SearchSetupError):
        local_search(unit, tests, cfg)


def test_local_search_finds_planted_deletion(bench_planted):
    """Statement-family hill climbing recovers the planted dead store."""
    unit, tests = bench_planted
    baseline = poly_sum_call_steps([3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8]) + poly_sum_call_steps(
        [2, 7, 1, 8, 2, 8, 1, 8]
    )
    delta = poly_sum_planted_cost([0] * 12) + poly_sum_planted_cost([0] * 8)
    assert delta == 240
    hits = 0
    for seed in range(10):
        cfg = LocalSearchConfig(
            family="statement", runs=("poly_sum",), evals_per_run=100, seed=seed
        )
        records = local_search(unit, tests, cfg)
        passing = [
            r.runtime
            for r in records
            if r.classification == "Passed" and r.runtime is not None and r.eval_index > 0
        ]
        if passing and min(passing) < baseline:
            hits += 1
            assert baseline - min(passing) == delta
    assert hits >= 8


def test_every_improving_eval_passed_and_acceptance_is_strict(bench_planted):
    unit, tests = bench_planted
    cfg = LocalSearchConfig(family="statement", runs=("poly_sum",), evals_per_run=100, seed=4)
    records = local_search(unit, tests, cfg)
    baseline = records[0].runtime
    for record in records:
        if record.runtime is not None:
            assert record.classification == "Passed"
            # runtimes only exist for passing patches; improvements strictly
            # below baseline, others anywhere >= best
    best = min(r.runtime for r in records if r.runtime is not None)
    assert best <= baseline


def test_no_improvement_when_everything_fails(bench_max):
    unit, tests = bench_max
    # every rewrite from this mock is unparsable, so no neighbor ever passes
    llm = mock_context(script=lambda req: "```\nnot ((( code\n```")
    cfg = LocalSearchConfig(family="llm-medium", runs=("max2",), evals_per_run=30, seed=1)
    records = local_search(unit, tests, cfg, llm=llm)
    baseline = records[0].runtime
    improving = [
        r for r in records[1:] if r.runtime is not None and r.runtime < baseline
    ]
    assert improving == []
    assert all(r.classification == "Invalid" for r in records[1:] if "llm(" in r.patch_line)


def test_equal_runtime_neighbor_not_accepted(bench_max):
    """Self-swap neighbors leave runtime unchanged; strict < rejects them."""
    unit, tests = bench_max
    cfg = LocalSearchConfig(family="statement", runs=("max2",), evals_per_run=60, seed=7)
    records = local_search(unit, tests, cfg)
    baseline = records[0].runtime
    # find a Swap(s,s) evaluation: fingerprint equals the original digest
    original = source_digest(unit)
    noop_rows = [
        r for r in records[1:] if split_patch_line(r.patch_line)[2] == original
    ]
    assert noop_rows, "seed 7 never drew a no-op neighbor; pick another seed"
    for row in noop_rows:
        assert row.runtime == baseline  # evaluated, passed, same runtime; rejected


def test_propose_neighbor_empty_always_appends(bench_max):
    unit, _ = bench_max
    state = SearchState(
        current_patch=Patch("bench_max"), current_runtime=100,
        best_patch=Patch("bench_max"), best_runtime=100, current_unit=unit,
    )
    for seed in range(50):
        neighbor = propose_neighbor(state, "statement", random.Random(seed), unit, "max2")
        assert len(neighbor.edits) == 1


def test_propose_neighbor_append_remove_split(bench_max):
    unit, _ = bench_max
    base = Patch("bench_max")
    rng = random.Random(123)
    edits = tuple(
        propose_neighbor(
            SearchState(base, 100, base, 100, current_unit=unit), "statement", rng, unit, "max2"
        ).edits[0]
        for _ in range(3)
    )
    current = Patch("bench_max", edits)
    state = SearchState(current, 100, current, 100, current_unit=unit)
    counts = Counter()
    rng = random.Random(99)
    for _ in range(10_000):
        neighbor = propose_neighbor(state, "statement", rng, unit, "max2")
        counts[len(neighbor.edits)] += 1
    appends, removals = counts[4], counts[2]
    assert appends + removals == 10_000
    # exact binomial bound: P(|X - 5000| > 200) < 6e-5 for p = 1/2
    assert abs(appends - 5000) <= 200


def test_propose_neighbor_deterministic(bench_max):
    unit, _ = bench_max
    base = Patch("bench_max")
    state1 = SearchState(base, 100, base, 100, current_unit=unit)
    state2 = SearchState(base, 100, base, 100, current_unit=unit)
    n1 = propose_neighbor(state1, "insert", random.Random(5), unit, "max2")
    n2 = propose_neighbor(state2, "insert", random.Random(5), unit, "max2")
    assert n1 == n2


def test_statement_family_thousand_draw_golden_counts(bench_sort):
    """Frozen ladder counts for the default-size statement run, seed 42.

    The per-edit classifications behind these totals are cross-checked
    against brute-force enumeration in the acceptance suite (criterion 2);
    this golden pins the aggregate so regressions surface cheaply.
    """
    from minigi.reporting import aggregate_table1
    from minigi.lang import source_digest

    unit, tests = bench_sort
    cfg = RandomSamplingConfig(families=("statement",), per_family_budget=1000, seed=42)
    records = random_sampling(unit, tests, ["sort", "max2"], cfg)
    report = aggregate_table1(records, source_digest(unit))[0]
    counts = report.all_counts
    assert (counts.patches, counts.valid, counts.compiled, counts.passed) == GOLDEN_1000_ALL
    unique = report.unique_counts
    assert (unique.patches, unique.valid, unique.compiled, unique.passed) == GOLDEN_1000_UNIQUE


# Golden run frozen at implementation time (seed 42, bench_sort fixture).
# 125 of the 1000 draws were equivalent to the original (see the matching
# partition golden in test_patches) and are excluded from both ladders.
GOLDEN_1000_ALL = (875, 875, 526, 158)
GOLDEN_1000_UNIQUE = (184, 184, 105, 34)


def test_llm_local_search_amortizes_requests(bench_sort):
    unit, tests = bench_sort
    llm = mock_context(script=lambda req: "```\n{ }\n```\n" * 5)
    cfg = LocalSearchConfig(family="llm-medium", runs=("sort",), evals_per_run=40, seed=2)
    records = local_search(unit, tests, cfg, llm=llm)
    appends = sum(1 for r in records[1:] if "llm(" in r.patch_line)
    # every append pops one queued variant; requests refill five at a time
    assert llm.client.requests_made == -(-appends // 5)  # ceil
    assert len(records) == 40
