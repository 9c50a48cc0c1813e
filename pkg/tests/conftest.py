from __future__ import annotations

from pathlib import Path

import pytest

from minigi.lang import parse_source, parse_test_file

REPO_ROOT = Path(__file__).resolve().parent.parent
BENCHMARKS = REPO_ROOT / "benchmarks"


def load_bench(name: str):
    unit = parse_source((BENCHMARKS / f"{name}.ml").read_text(encoding="utf-8"), name)
    tests = parse_test_file((BENCHMARKS / f"{name}.tests").read_text(encoding="utf-8"))
    return unit, tests


@pytest.fixture(scope="session")
def bench_sort():
    return load_bench("bench_sort")


@pytest.fixture(scope="session")
def bench_planted():
    return load_bench("bench_planted")


@pytest.fixture(scope="session")
def bench_loop():
    return load_bench("bench_loop")


@pytest.fixture(scope="session")
def bench_max():
    return load_bench("bench_max")
