"""Command-line entry points.

Subcommands: profile, sample (random sampling), ls (local search),
report (aggregate run logs into the two tables) and replay (re-execute a
recorded run and compare logs byte for byte). Exit codes: 0 success,
1 replay mismatch, 2 configuration error, 3 infrastructure error.

Every randomized command needs a seed: give one with --seed or a fresh
one is drawn and printed, and it is always written to the run's metadata
sidecar so `replay` can reproduce the run offline.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Optional

from minigi.evaluation import (
    BUILTIN_ADAPTER,
    DEFAULT_MEASURE_REPEATS,
    DEFAULT_TIMEOUT_MS,
    ExternalToolchain,
    InfrastructureError,
    TargetAdapter,
)
from minigi.lang.interpreter import DEFAULT_STEP_BUDGET, parse_test_file
from minigi.lang.parser import ParseError, parse_source
from minigi.lang.printer import source_digest
from minigi.llm import ClientError, LlmClientConfig, make_client
from minigi.profiling import (
    DEFAULT_REPEATS,
    DEFAULT_TOP_K,
    ProfileOnFailingProgramError,
    profile,
    write_profile_csv,
)
from minigi.prompts import DEFAULT_MODEL, DEFAULT_TEMPERATURE, DEFAULT_VARIANT_COUNT
from minigi.reporting import (
    RecordWriter,
    ReportError,
    aggregate_table1,
    aggregate_table2,
    read_records_csv,
    read_run_meta,
    render_table1,
    render_table2,
    write_run_meta,
)
from minigi.search import (
    DEFAULT_LS_EVALS,
    DEFAULT_SAMPLE_BUDGET,
    FAMILIES,
    LlmSearchContext,
    LocalSearchConfig,
    RandomSamplingConfig,
    SearchSetupError,
    is_llm_family,
    local_search,
    random_sampling,
)

SAMPLE_LOG = "sample_log.csv"
LS_LOG = "ls_log.csv"


class ConfigError(Exception):
    pass


# -- option plumbing --


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class Options:
    """Flag > config file > built-in default, resolved per key."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, default=None, convert=str):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.config:
            try:
                return convert(self.config[key])
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from None
        return default

    def get_int(self, key: str, default: Optional[int] = None) -> Optional[int]:
        return self.get(key, default, int)


def _load_program(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read program: {exc}") from None
    try:
        return parse_source(text, name=Path(path).stem)
    except ParseError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _load_tests(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read tests: {exc}") from None
    try:
        return parse_test_file(text)
    except ParseError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _resolve_seed(opts: Options) -> int:
    seed = opts.get_int("seed")
    if seed is None:
        seed = random.SystemRandom().randrange(2**31)
        print(f"seed: {seed} (drawn; pass --seed {seed} to reproduce)")
    return seed


def _out_dir(opts: Options) -> Path:
    out = Path(opts.get("out_dir", "minigi-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_families(opts: Options) -> list[str]:
    raw = opts.get("family")
    if not raw:
        raise ConfigError("--family is required (e.g. --family statement,insert)")
    families = []
    for token in str(raw).split(","):
        token = token.strip()
        if token == "llm":
            token = f"llm-{opts.get('prompt', 'medium')}"
        if token not in FAMILIES:
            raise ConfigError(f"unknown family {token!r}; known: {', '.join(FAMILIES)}")
        families.append(token)
    return families


def _adapter_from(opts: Options) -> TargetAdapter:
    kind = opts.get("adapter", "builtin")
    if kind == "builtin":
        return BUILTIN_ADAPTER
    if kind != "external":
        raise ConfigError(f"unknown adapter {kind!r}")
    compile_cmd = opts.get("compile_cmd")
    test_cmd = opts.get("test_cmd")
    measure_cmd = opts.get("measure_cmd")
    if not (compile_cmd and test_cmd and measure_cmd):
        raise ConfigError(
            "external adapter needs compile_cmd, test_cmd and measure_cmd "
            "(set them in the --config file)"
        )
    toolchain = ExternalToolchain(
        compile_cmd=compile_cmd,
        test_cmd=test_cmd,
        measure_cmd=measure_cmd,
        patch_apply_cmd=opts.get("patch_apply_cmd"),
        timeout_ms=opts.get_int("timeout_ms", DEFAULT_TIMEOUT_MS),
        measure_repeats=opts.get_int("measure_repeats", DEFAULT_MEASURE_REPEATS),
    )
    return TargetAdapter("external", toolchain)


def _llm_context(
    opts: Options, families: list[str], out_dir: Path, program_path: str
) -> tuple[Optional[LlmSearchContext], Optional[dict]]:
    if not any(is_llm_family(f) for f in families):
        return None, None
    mode = opts.get("llm_mode", "mock")
    transcript_dir = opts.get("transcript_dir") or str(out_dir / "transcripts")
    config = LlmClientConfig(
        endpoint_url=opts.get("endpoint", "https://api.openai.com/v1/chat/completions"),
        api_key_env_var=opts.get("api_key_env", "OPENAI_API_KEY"),
        model=opts.get("model", DEFAULT_MODEL),
        temperature=float(opts.get("temperature", DEFAULT_TEMPERATURE)),
        request_timeout=float(opts.get("request_timeout", 60.0)),
        max_retries=opts.get_int("max_retries", 3),
        transcript_dir=transcript_dir,
        mode=mode,
    )
    context = LlmSearchContext(
        client=make_client(config),
        project_name=opts.get("project_name", Path(program_path).stem),
        language=opts.get("language", "MiniLang"),
        code_label=opts.get("code_label", "minilang"),
        variant_count=opts.get_int("variants", DEFAULT_VARIANT_COUNT),
    )
    meta = {
        "mode": mode,
        "endpoint": config.endpoint_url,
        "api_key_env": config.api_key_env_var,
        "model": config.model,
        "temperature": config.temperature,
        "transcript_dir": str(transcript_dir),
        "project_name": context.project_name,
        "language": context.language,
        "code_label": context.code_label,
        "variants": context.variant_count,
    }
    return context, meta


def _hot_methods(opts: Options, unit, tests, step_budget: int) -> list[str]:
    methods = opts.get("methods")
    if methods:
        names = [m.strip() for m in str(methods).split(",") if m.strip()]
        for name in names:
            if not unit.has_function(name):
                raise ConfigError(f"method {name!r} not in program")
        return names
    top_k = opts.get_int("top_k", DEFAULT_TOP_K)
    prof = profile(unit, tests, repeats=DEFAULT_REPEATS, top_k=top_k, step_budget=step_budget)
    return prof.hot_set


# -- subcommands --


def _cmd_profile(args: argparse.Namespace) -> int:
    opts = Options(args)
    unit = _load_program(args.program)
    tests = _load_tests(args.tests)
    prof = profile(
        unit,
        tests,
        repeats=opts.get_int("repeats", DEFAULT_REPEATS),
        top_k=opts.get_int("top_k", DEFAULT_TOP_K),
        step_budget=opts.get_int("step_budget", DEFAULT_STEP_BUDGET),
    )
    out = _out_dir(opts) / "profile.csv"
    write_profile_csv(prof, out)
    totals = prof.total_costs()
    for rank, name in enumerate(prof.hot_set, start=1):
        print(f"{rank}. {name} ({totals.get(name, 0)} steps over {prof.repeats} runs)")
    print(f"wrote {out}")
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    opts = Options(args)
    unit = _load_program(args.program)
    tests = _load_tests(args.tests)
    families = _parse_families(opts)
    seed = _resolve_seed(opts)
    out_dir = _out_dir(opts)
    step_budget = opts.get_int("step_budget", DEFAULT_STEP_BUDGET)
    adapter = _adapter_from(opts)
    llm, llm_meta = _llm_context(opts, families, out_dir, args.program)
    cfg = RandomSamplingConfig(
        families=tuple(families),
        per_family_budget=opts.get_int("budget", DEFAULT_SAMPLE_BUDGET),
        seed=seed,
        step_budget=step_budget,
    )
    hot = _hot_methods(opts, unit, tests, step_budget)
    log_path = out_dir / SAMPLE_LOG
    meta = {
        "command": "sample",
        "program": str(Path(args.program).resolve()),
        "tests": str(Path(args.tests).resolve()),
        "seed": seed,
        "families": families,
        "budget": cfg.per_family_budget,
        "step_budget": step_budget,
        "hot": hot,
        "llm": llm_meta,
        "original_digest": source_digest(unit),
        "log": log_path.name,
    }
    write_run_meta(log_path, meta)
    with RecordWriter(log_path) as writer:
        records = random_sampling(
            unit, tests, hot, cfg, adapter, llm,
            sink=writer.write, workers=opts.get_int("workers", 1),
        )
    print(f"wrote {len(records)} records to {log_path}")
    print(render_table1(aggregate_table1(records, meta["original_digest"])), end="")
    return 0


def _cmd_ls(args: argparse.Namespace) -> int:
    opts = Options(args)
    unit = _load_program(args.program)
    tests = _load_tests(args.tests)
    families = _parse_families(opts)
    if len(families) != 1:
        raise ConfigError("local search takes exactly one --family")
    family = families[0]
    seed = _resolve_seed(opts)
    out_dir = _out_dir(opts)
    step_budget = opts.get_int("step_budget", DEFAULT_STEP_BUDGET)
    adapter = _adapter_from(opts)
    llm, llm_meta = _llm_context(opts, families, out_dir, args.program)
    methods = _hot_methods(opts, unit, tests, step_budget)
    cfg = LocalSearchConfig(
        family=family,
        runs=tuple(methods),
        evals_per_run=opts.get_int("evals", DEFAULT_LS_EVALS),
        seed=seed,
        step_budget=step_budget,
    )
    log_path = out_dir / LS_LOG
    meta = {
        "command": "ls",
        "program": str(Path(args.program).resolve()),
        "tests": str(Path(args.tests).resolve()),
        "seed": seed,
        "family": family,
        "methods": methods,
        "evals": cfg.evals_per_run,
        "step_budget": step_budget,
        "llm": llm_meta,
        "original_digest": source_digest(unit),
        "log": log_path.name,
    }
    write_run_meta(log_path, meta)
    with RecordWriter(log_path) as writer:
        records = local_search(unit, tests, cfg, adapter, llm, sink=writer.write)
    print(f"wrote {len(records)} records to {log_path}")
    print(render_table2(aggregate_table2(records)), end="")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    records = read_records_csv(args.log)
    if args.table == "table1":
        digest = args.original_digest
        if digest is None:
            meta = read_run_meta(args.log)
            digest = (meta or {}).get("original_digest")
        if digest is None:
            raise ConfigError(
                "table1 needs the original program digest: pass --original-digest "
                "or keep the run's .meta.json next to the log"
            )
        text = render_table1(aggregate_table1(records, digest))
    else:
        text = render_table2(aggregate_table2(records))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    metas = sorted(run_dir.glob("*.csv.meta.json"))
    if not metas:
        raise ConfigError(f"no run metadata (*.csv.meta.json) under {run_dir}")
    out_dir = Path(args.out_dir) if args.out_dir else run_dir / "replay"
    mismatches = 0
    for meta_path in metas:
        meta = read_run_meta(run_dir / meta_path.name.removesuffix(".meta.json"))
        assert meta is not None
        log_name = meta["log"]
        print(f"replaying {meta['command']} run -> {out_dir / log_name}")
        replay_args = _replay_namespace(meta, out_dir)
        if meta["command"] == "sample":
            _cmd_sample(replay_args)
        else:
            _cmd_ls(replay_args)
        original = (run_dir / log_name).read_bytes()
        replayed = (out_dir / log_name).read_bytes()
        if original == replayed:
            print(f"{log_name}: identical")
        else:
            print(f"{log_name}: DIFFERS")
            mismatches += 1
    return 1 if mismatches else 0


def _replay_namespace(meta: dict, out_dir: Path) -> argparse.Namespace:
    """Rebuild command options from a run's metadata, forcing replay mode."""
    llm = meta.get("llm") or {}
    common = dict(
        program=meta["program"],
        tests=meta["tests"],
        seed=meta["seed"],
        step_budget=meta["step_budget"],
        out_dir=str(out_dir),
        config=None,
        adapter=None,
        compile_cmd=None, test_cmd=None, measure_cmd=None, patch_apply_cmd=None,
        timeout_ms=None, measure_repeats=None,
        llm_mode="replay" if llm else None,
        endpoint=llm.get("endpoint"),
        api_key_env=llm.get("api_key_env"),
        model=llm.get("model"),
        temperature=llm.get("temperature"),
        request_timeout=None,
        max_retries=None,
        transcript_dir=llm.get("transcript_dir"),
        project_name=llm.get("project_name"),
        language=llm.get("language"),
        code_label=llm.get("code_label"),
        variants=llm.get("variants"),
        prompt=None,
        top_k=None,
        workers=None,
    )
    if meta["command"] == "sample":
        return argparse.Namespace(
            family=",".join(meta["families"]),
            budget=meta["budget"],
            methods=",".join(meta["hot"]),
            evals=None,
            **common,
        )
    return argparse.Namespace(
        family=meta["family"],
        budget=None,
        methods=",".join(meta["methods"]),
        evals=meta["evals"],
        **common,
    )


# -- argument parsing --


def _add_common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("program", help="MiniLang source file (.ml)")
    p.add_argument("tests", help="test file (one `test name: call == literal` per line)")
    p.add_argument("--seed", type=int, help="RNG seed; drawn and printed when omitted")
    p.add_argument("--step-budget", type=int, dest="step_budget",
                   help=f"interpreter steps per test (default {DEFAULT_STEP_BUDGET})")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default minigi-out)")
    p.add_argument("--config", help="key=value file overriding defaults (flags win)")
    p.add_argument("--adapter", choices=["builtin", "external"],
                   help="evaluation backend (external commands come from --config)")
    p.add_argument("--top-k", type=int, dest="top_k",
                   help=f"hot methods to target (default {DEFAULT_TOP_K})")
    p.add_argument("--methods", help="comma-separated target methods (skips profiling)")
    p.add_argument("--llm-mode", dest="llm_mode", choices=["live", "replay", "mock"],
                   help="LLM transport (default mock)")
    p.add_argument("--prompt", choices=["simple", "medium", "detailed"],
                   help="prompt category for the bare `llm` family token")
    p.add_argument("--model", help=f"model name (default {DEFAULT_MODEL})")
    p.add_argument("--endpoint", help="chat-completions endpoint URL")
    p.add_argument("--api-key-env", dest="api_key_env",
                   help="environment variable holding the API key")
    p.add_argument("--temperature", type=float, help="sampling temperature (default 0.7)")
    p.add_argument("--variants", type=int, help="variations requested per prompt (default 5)")
    p.add_argument("--transcript-dir", dest="transcript_dir",
                   help="LLM transcript directory (default <out-dir>/transcripts)")
    p.add_argument("--project-name", dest="project_name",
                   help="project name substituted into prompts")
    p.add_argument("--language", help="language name used in prompts (default MiniLang)")
    p.add_argument("--code-label", dest="code_label",
                   help="code-fence label requested in prompts (default minilang)")
    p.add_argument("--request-timeout", type=float, dest="request_timeout",
                   help="HTTP timeout for live mode, seconds")
    p.add_argument("--max-retries", type=int, dest="max_retries",
                   help="retries on rate limiting in live mode")
    p.add_argument("--workers", type=int, help="parallel evaluation width (default 1)")
    p.add_argument("--timeout-ms", type=int, dest="timeout_ms",
                   help="external adapter per-test watchdog (default 10000)")
    p.add_argument("--measure-repeats", type=int, dest="measure_repeats",
                   help="external adapter timing repeats, median taken (default 5)")
    for name in ("compile_cmd", "test_cmd", "measure_cmd", "patch_apply_cmd"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minigi",
        description="Search for runtime-improving patches with classic and LLM-backed edits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_profile = sub.add_parser("profile", help="identify hot methods")
    p_profile.add_argument("program")
    p_profile.add_argument("tests")
    p_profile.add_argument("--repeats", type=int, help=f"profiling runs (default {DEFAULT_REPEATS})")
    p_profile.add_argument("--top-k", type=int, dest="top_k")
    p_profile.add_argument("--step-budget", type=int, dest="step_budget")
    p_profile.add_argument("--out-dir", dest="out_dir")
    p_profile.add_argument("--config")
    p_profile.set_defaults(func=_cmd_profile)

    p_sample = sub.add_parser("sample", help="random sampling experiment")
    _add_common_run_flags(p_sample)
    p_sample.add_argument("--family", help="comma-separated families: statement, insert, "
                          "llm-simple, llm-medium, llm-detailed (or `llm` + --prompt)")
    p_sample.add_argument("--budget", type=int,
                          help=f"patches per family (default {DEFAULT_SAMPLE_BUDGET})")
    p_sample.set_defaults(func=_cmd_sample)

    p_ls = sub.add_parser("ls", help="local search experiment")
    _add_common_run_flags(p_ls)
    p_ls.add_argument("--family", help="one family to search with")
    p_ls.add_argument("--evals", type=int,
                      help=f"evaluations per run (default {DEFAULT_LS_EVALS})")
    p_ls.set_defaults(func=_cmd_ls)

    p_report = sub.add_parser("report", help="aggregate a run log into a table")
    p_report.add_argument("table", choices=["table1", "table2"])
    p_report.add_argument("log", help="run log CSV")
    p_report.add_argument("--out", help="write the table here instead of stdout")
    p_report.add_argument("--original-digest", dest="original_digest",
                          help="canonical digest of the unpatched program (table1)")
    p_report.set_defaults(func=_cmd_report)

    p_replay = sub.add_parser("replay", help="re-execute a recorded run and compare logs")
    p_replay.add_argument("run_dir", help="directory holding run logs and .meta.json sidecars")
    p_replay.add_argument("--out-dir", dest="out_dir", help="where to write the replayed run")
    p_replay.set_defaults(func=_cmd_replay)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SearchSetupError, ProfileOnFailingProgramError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InfrastructureError, ClientError) as exc:
        print(f"infrastructure error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
