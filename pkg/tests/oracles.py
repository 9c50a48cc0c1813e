"""Independent step-count oracles built from trip-count arithmetic.

These mirror the documented cost table with explicit per-construct
formulas over loop trip counts, not by walking the AST, so they stay
independent of the interpreter they check. The sort oracle was verified
by hand on the two-element input (102 steps) before being trusted here.
"""

from __future__ import annotations

ARG_COST_INT = 1  # integer literal argument


def array_literal_cost(length: int) -> int:
    return 1 + length  # literal node + one int literal per element


def sort_call_steps(arr: list[int]) -> int:
    """Steps for one `sort([...])` call of benchmarks/bench_sort.ml."""
    a = list(arr)
    n = len(a)
    steps = 1 + array_literal_cost(n)  # call node + argument
    steps += 1  # function body block
    steps += 3  # var n: int = len(a);
    steps += 1 + 2  # outer for node + init clause
    steps += 3 * (n + 1)  # outer condition checks (i < n)
    steps += 5 * n  # outer update clause per iteration
    for i in range(n):
        inner = n - i - 1
        steps += 1  # outer body block
        steps += 1 + 2  # inner for node + init clause
        steps += 7 * (inner + 1)  # inner condition checks (j + 1 < n - i)
        steps += 5 * inner  # inner update clause
        for j in range(inner):
            steps += 1  # inner body block
            steps += 4  # planted `n = len(a);`
            steps += 1 + 9  # if node + comparison a[j] > a[j + 1]
            if a[j] > a[j + 1]:
                steps += 1 + 4 + 9 + 7  # then block + var t + two element stores
                a[j], a[j + 1] = a[j + 1], a[j]
    steps += 2  # return a;
    return steps


def sort_planted_cost(arr: list[int]) -> int:
    """Total cost of the redundant `n = len(a);` across one sort call."""
    n = len(arr)
    return 4 * (n * (n - 1) // 2)


def max2_call_steps(x: int, y: int) -> int:
    """Steps for one `max2(x, y)` call (both benchmark copies)."""
    steps = 1 + 2 * ARG_COST_INT  # call + two int arguments
    steps += 1  # body block
    steps += 1 + 3  # if node + comparison
    if x > y:
        steps += 1 + 2  # then block + return x
    else:
        steps += 2  # return y
    return steps


def clamp_low_call_steps(x: int, low: int) -> int:
    steps = 1 + 2 * ARG_COST_INT
    steps += 1
    steps += 1 + 3
    if x < low:
        steps += 1 + 2
    else:
        steps += 2
    return steps


def poly_sum_call_steps(xs: list[int]) -> int:
    """Steps for one `poly_sum([...])` call of benchmarks/bench_planted.ml."""
    n = len(xs)
    steps = 1 + array_literal_cost(n)  # call + argument
    steps += 1  # body block
    steps += 2  # var acc: int = 0;
    steps += 1 + 2  # for node + init clause
    steps += 4 * (n + 1)  # condition checks (i < len(xs))
    steps += 5 * n  # update clause
    steps += n * (1 + 12 + 9)  # body block + planted dead store + acc update
    steps += 2  # return acc;
    return steps


def poly_sum_planted_cost(xs: list[int]) -> int:
    """Cost of the planted `var unused: int = xs[i] * xs[i] + xs[i];`."""
    return 12 * len(xs)


def count_to_call_steps(n: int) -> int:
    """Steps for one `count_to(n)` call of benchmarks/bench_loop.ml."""
    steps = 1 + ARG_COST_INT  # call + argument
    steps += 1  # body block
    steps += 2  # var i: int = 0;
    steps += 1  # while node
    steps += 3 * (n + 1)  # condition checks (i < n)
    steps += n * (1 + 5)  # body block + increment assignment
    steps += 2  # return i;
    return steps
