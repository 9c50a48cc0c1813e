"""The two experiment drivers: random sampling and local search.

Random sampling draws independent single-edit patches per operator family
under a fixed budget and evaluates each one. Local search hill-climbs per
target method: evaluation 1 times the unpatched program to establish the
baseline, then each of the remaining evaluations proposes a neighbor
(append one new edit, or drop one existing edit, 50/50), keeps it only on
a strict runtime improvement that passes all tests, and reverts
otherwise.

Every evaluation is appended to the run log as one record; the log plus
the seed and the LLM transcripts fully determine a rerun. An LLM request
returns `variant_count` edits at once; local search queues them and pops
one per append, so request accounting matches random sampling
(ceil(draws/variant_count) requests).
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from minigi.evaluation import (
    BUILTIN_ADAPTER,
    EvaluationResult,
    TargetAdapter,
    evaluate,
    evaluate_batch,
)
from minigi.lang.ast import SourceUnit
from minigi.lang.interpreter import DEFAULT_STEP_BUDGET, TestCase
from minigi.llm import LlmClientBase
from minigi.operators import (
    NoTargetStatementsError,
    sample_insert_edit,
    sample_statement_edit,
)
from minigi.patches import Patch, apply_patch, serialize_patch
from minigi.prompts import (
    DEFAULT_VARIANT_COUNT,
    PromptCategory,
    PromptTemplate,
    default_example_change,
    make_llm_edits,
)

FAMILIES = ("statement", "insert", "llm-simple", "llm-medium", "llm-detailed")

DEFAULT_SAMPLE_BUDGET = 1000
DEFAULT_LS_EVALS = 100


class SearchSetupError(Exception):
    """Configuration problem, e.g. the unpatched program fails its tests."""


def is_llm_family(family: str) -> bool:
    return family.startswith("llm-")


def family_category(family: str) -> PromptCategory:
    return PromptCategory(family.removeprefix("llm-"))


@dataclass
class LlmSearchContext:
    """Everything LLM families need besides the search config itself."""

    client: LlmClientBase
    project_name: str = ""
    language: str = "MiniLang"
    code_label: str = "minilang"
    variant_count: int = DEFAULT_VARIANT_COUNT
    example_change: Optional[str] = None

    def template_for(self, category: PromptCategory) -> PromptTemplate:
        example = self.example_change
        if category is PromptCategory.DETAILED and example is None:
            example = default_example_change()
        return PromptTemplate(
            category=category,
            project_name=self.project_name,
            example_change=example,
            language=self.language,
            code_label=self.code_label,
            variant_count=self.variant_count,
        )


@dataclass(frozen=True)
class RandomSamplingConfig:
    families: tuple[str, ...]
    per_family_budget: int = DEFAULT_SAMPLE_BUDGET
    seed: int = 0
    step_budget: int = DEFAULT_STEP_BUDGET


@dataclass(frozen=True)
class LocalSearchConfig:
    family: str
    runs: tuple[str, ...]  # target methods, one run each
    evals_per_run: int = DEFAULT_LS_EVALS
    seed: int = 0
    step_budget: int = DEFAULT_STEP_BUDGET


@dataclass(frozen=True)
class EvalRecord:
    """One run-log row; the CSV schema is documented in docs/logs.md."""

    run_id: str
    eval_index: int
    patch_line: str
    classification: str
    runtime: Optional[int]


RecordSink = Callable[[EvalRecord], None]


def _record(
    run_id: str,
    index: int,
    patch: Patch,
    result: EvaluationResult,
    sink: Optional[RecordSink],
    records: list[EvalRecord],
) -> None:
    rec = EvalRecord(
        run_id=run_id,
        eval_index=index,
        patch_line=serialize_patch(patch, result.fingerprint),
        classification=result.classification.value,
        runtime=result.runtime(),
    )
    records.append(rec)
    if sink is not None:
        sink(rec)


def _classic_sampler(family: str):
    return sample_statement_edit if family == "statement" else sample_insert_edit


# -- random sampling --


def random_sampling(
    unit: SourceUnit,
    tests: list[TestCase],
    hot: list[str],
    cfg: RandomSamplingConfig,
    adapter: TargetAdapter = BUILTIN_ADAPTER,
    llm: Optional[LlmSearchContext] = None,
    sink: Optional[RecordSink] = None,
    workers: int = 1,
) -> list[EvalRecord]:
    """Draw and evaluate `per_family_budget` single-edit patches per family.

    Families are independent: each gets its own RNG stream derived from
    (seed, family), and classic draws additionally reseed per index so any
    logged patch can be re-drawn in isolation. Evaluations may fan out over
    `workers`; records keep draw order either way, and the sink sees them
    in chunks so an aborted run still leaves its finished rows behind.
    """
    if not hot:
        raise SearchSetupError("empty hot-method list")
    for family in cfg.families:
        if family not in FAMILIES:
            raise SearchSetupError(f"unknown family {family!r}")
        if is_llm_family(family) and llm is None:
            raise SearchSetupError(f"family {family!r} needs an LLM context")
    records: list[EvalRecord] = []
    chunk = 1 if workers <= 1 else max(16, workers * 4)
    for family in cfg.families:
        patches = _draw_family(unit, hot, cfg, llm, family)
        for start in range(0, len(patches), chunk):
            group = patches[start : start + chunk]
            results = evaluate_batch(
                unit, group, tests, adapter, cfg.step_budget, workers=workers
            )
            for offset, (patch, result) in enumerate(zip(group, results)):
                _record(family, start + offset, patch, result, sink, records)
    return records


def _draw_family(
    unit: SourceUnit,
    hot: list[str],
    cfg: RandomSamplingConfig,
    llm: Optional[LlmSearchContext],
    family: str,
) -> list[Patch]:
    if not is_llm_family(family):
        sampler = _classic_sampler(family)
        patches = []
        for i in range(cfg.per_family_budget):
            seed = f"{cfg.seed}:{family}:{i}"
            edit = sampler(unit, hot, random.Random(seed))
            patches.append(Patch(unit.name, (edit,), seed))
        return patches
    assert llm is not None
    template = llm.template_for(family_category(family))
    patches = []
    request_index = 0
    while len(patches) < cfg.per_family_budget:
        rng = random.Random(f"{cfg.seed}:{family}:req{request_index}")
        edits = make_llm_edits(unit, hot, rng, llm.client, template)
        request_index += 1
        for edit in edits:
            if len(patches) >= cfg.per_family_budget:
                break
            seed = f"{cfg.seed}:{family}:{len(patches)}"
            patches.append(Patch(unit.name, (edit,), seed))
    return patches


# -- local search --


@dataclass
class SearchState:
    current_patch: Patch
    current_runtime: int
    best_patch: Patch
    best_runtime: int
    evals_used: int = 0
    current_unit: Optional[SourceUnit] = None
    llm_queue: deque = field(default_factory=deque)


def propose_neighbor(
    state: SearchState,
    family: str,
    rng: random.Random,
    unit: SourceUnit,
    target_method: str,
    llm: Optional[LlmSearchContext] = None,
) -> Patch:
    """Add-or-remove-one-edit neighborhood.

    An empty current patch always appends. Otherwise a fair coin picks
    between appending one freshly sampled edit (drawn against the current
    patched program, so its ids resolve there) and removing one uniformly
    chosen edit. If the target method has run out of statements to sample,
    the append falls back to a removal.
    """
    current = state.current_patch
    append = current.is_empty() or rng.random() < 0.5
    if append:
        base_unit = state.current_unit if state.current_unit is not None else unit
        try:
            edit = _draw_edit(base_unit, family, rng, target_method, state, llm)
        except NoTargetStatementsError:
            if current.is_empty():
                raise
            edit = None
        if edit is not None:
            return current.with_edit(edit)
    index = rng.randrange(len(current.edits))
    return current.without_edit(index)


def _draw_edit(base_unit, family, rng, target_method, state, llm):
    if not is_llm_family(family):
        return _classic_sampler(family)(base_unit, [target_method], rng)
    if llm is None:
        raise SearchSetupError(f"family {family!r} needs an LLM context")
    if not state.llm_queue:
        template = llm.template_for(family_category(family))
        state.llm_queue.extend(
            make_llm_edits(base_unit, [target_method], rng, llm.client, template)
        )
    return state.llm_queue.popleft()


def local_search(
    unit: SourceUnit,
    tests: list[TestCase],
    cfg: LocalSearchConfig,
    adapter: TargetAdapter = BUILTIN_ADAPTER,
    llm: Optional[LlmSearchContext] = None,
    sink: Optional[RecordSink] = None,
) -> list[EvalRecord]:
    """One hill-climbing run per target method, exactly `evals_per_run`
    evaluations each, the first on the unpatched program."""
    if cfg.family not in FAMILIES:
        raise SearchSetupError(f"unknown family {cfg.family!r}")
    if is_llm_family(cfg.family) and llm is None:
        raise SearchSetupError(f"family {cfg.family!r} needs an LLM context")
    if cfg.evals_per_run < 1:
        raise SearchSetupError("need at least one evaluation per run")
    for method in cfg.runs:
        if not unit.has_function(method):
            raise SearchSetupError(f"target method {method!r} not in unit")
    records: list[EvalRecord] = []
    for method in cfg.runs:
        _one_ls_run(unit, tests, cfg, adapter, llm, method, records, sink)
    return records


def _one_ls_run(unit, tests, cfg, adapter, llm, method, records, sink) -> None:
    run_id = f"{cfg.family}/{method}"
    run_seed = f"{cfg.seed}:ls:{cfg.family}:{method}"
    rng = random.Random(run_seed)
    empty = Patch(unit.name, (), run_seed)
    baseline = evaluate(unit, empty, tests, adapter, cfg.step_budget)
    if not baseline.passed:
        raise SearchSetupError(
            f"unpatched program fails its tests ({baseline.tests_failed} failing); "
            "local search needs a passing baseline"
        )
    _record(run_id, 0, empty, baseline, sink, records)
    runtime = baseline.runtime()
    assert runtime is not None
    state = SearchState(
        current_patch=empty,
        current_runtime=runtime,
        best_patch=empty,
        best_runtime=runtime,
        evals_used=1,
        current_unit=unit,
    )
    for index in range(1, cfg.evals_per_run):
        neighbor = propose_neighbor(state, cfg.family, rng, unit, method, llm)
        result = evaluate(unit, neighbor, tests, adapter, cfg.step_budget)
        state.evals_used += 1
        _record(run_id, index, neighbor, result, sink, records)
        new_runtime = result.runtime()
        if result.passed and new_runtime is not None and new_runtime < state.current_runtime:
            state.current_patch = neighbor
            state.current_runtime = new_runtime
            state.current_unit = apply_patch(unit, neighbor)
            if new_runtime < state.best_runtime:
                state.best_patch = neighbor
                state.best_runtime = new_runtime
