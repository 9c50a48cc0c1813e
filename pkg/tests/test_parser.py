from __future__ import annotations

import pytest

from minigi.lang import (
    Block,
    ParseError,
    Type,
    parse_block,
    parse_source,
    statement_count,
)
from minigi.lang.ast import Assign, Binary, For, If, IntLit, Return, Var, VarDecl, While


def test_minimal_program():
    unit = parse_source("fn f() -> int { return 1; }")
    assert len(unit.functions) == 1
    assert statement_count(unit) == 1
    fn = unit.functions[0]
    assert fn.name == "f"
    assert fn.return_type is Type.INT
    assert fn.body.statements == (Return(IntLit(1)),)


def test_void_function_has_no_arrow():
    unit = parse_source("fn f() { return; }")
    assert unit.functions[0].return_type is Type.VOID


def test_missing_semicolon_reports_closing_brace_position():
    with pytest.raises(ParseError) as excinfo:
        parse_source("fn f() { return }")
    # `return }` fails where the brace sits: line 1, column 17
    assert excinfo.value.line == 1
    assert excinfo.value.col == 17


def test_bench_sort_statement_count(bench_sort):
    unit, _tests = bench_sort
    # Counted by hand from benchmarks/bench_sort.ml: sort has 9 list
    # statements (3 top-level, the inner for, its 2 statements, 3 in the
    # swap branch), max2 has 3.
    assert statement_count(unit) == 12


def test_param_and_type_parsing():
    unit = parse_source("fn g(a: int[], b: bool, c: int) -> int[] { return a; }")
    fn = unit.functions[0]
    assert [p.param_type for p in fn.params] == [Type.INT_ARRAY, Type.BOOL, Type.INT]
    assert fn.return_type is Type.INT_ARRAY


def test_control_flow_shapes():
    unit = parse_source(
        """
        fn f(n: int) -> int {
            var s: int = 0;
            for (var i: int = 0; i < n; i = i + 1) {
                if (i % 2 == 0) {
                    s = s + i;
                } else if (i > 10) {
                    break;
                } else {
                    continue;
                }
            }
            while (s > 100) {
                s = s - 100;
            }
            return s;
        }
        """
    )
    body = unit.functions[0].body.statements
    assert isinstance(body[0], VarDecl)
    assert isinstance(body[1], For)
    branch = body[1].body.statements[0]
    assert isinstance(branch, If)
    assert isinstance(branch.orelse, If)  # else-if chain
    assert isinstance(branch.orelse.orelse, Block)
    assert isinstance(body[2], While)


def test_operator_precedence():
    unit = parse_source("fn f(a: int, b: int, c: int) -> bool { return a + b * c < a * (b + c); }")
    ret = unit.functions[0].body.statements[0]
    assert isinstance(ret, Return)
    cmp = ret.value
    assert isinstance(cmp, Binary) and cmp.op == "<"
    left = cmp.left
    assert isinstance(left, Binary) and left.op == "+"
    assert isinstance(left.right, Binary) and left.right.op == "*"


def test_assignment_targets():
    unit = parse_source("fn f(a: int[]) { a[0] = 1; }")
    stmt = unit.functions[0].body.statements[0]
    assert isinstance(stmt, Assign)
    with pytest.raises(ParseError):
        parse_source("fn f(a: int[]) { f(a)[0] = 1; }")
    with pytest.raises(ParseError):
        parse_source("fn f() { 1 = 2; }")


def test_keywords_are_not_identifiers():
    with pytest.raises(ParseError):
        parse_source("fn while() -> int { return 1; }")
    with pytest.raises(ParseError):
        parse_source("fn f() -> int { var if: int = 1; return 1; }")


def test_no_partial_ast_on_trailing_garbage():
    with pytest.raises(ParseError):
        parse_source("fn f() -> int { return 1; } garbage")


def test_deep_nesting_is_a_parse_error_not_a_crash():
    text = "fn f() -> int { return " + "(" * 5000 + "1" + ")" * 5000 + "; }"
    with pytest.raises(ParseError) as excinfo:
        parse_source(text)
    assert "nesting" in excinfo.value.message


def test_parse_block_basics():
    block = parse_block("{ x = 1; }")
    assert isinstance(block, Block)
    assert len(block.statements) == 1


def test_parse_block_retries_with_braces():
    block = parse_block("x = 1; y = 2;")
    assert len(block.statements) == 2


def test_parse_block_rejects_declarations():
    with pytest.raises(ParseError):
        parse_block("{ class Foo { } }")
    with pytest.raises(ParseError):
        parse_block("{ fn g() { } }")


def test_parse_block_rejects_trailing_garbage_after_retry():
    with pytest.raises(ParseError):
        parse_block("{ x = 1; } trailing words")
