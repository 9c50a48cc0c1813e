"""Tree-walking interpreter with deterministic step counting.

Runtime is measured in interpreter steps, a deterministic stand-in for
wall-clock time in the built-in evaluation backend. The cost model is:

  * every expression node costs 1 step when its evaluation starts, plus
    the cost of the sub-expressions it actually evaluates (so `&&`/`||`
    charge nothing for a short-circuited right operand);
  * every statement costs 1 step when it starts executing, plus its
    expressions and the sub-statements it executes;
  * loop headers re-charge their condition on every check, the failing
    final check included; a `for` additionally charges its init clause
    once and its update clause per iteration, each like a statement;
  * an assignment charges its target like an expression (1 for an index
    node plus base and subscript) before charging the right-hand side;
  * user calls charge 1 for the call node, each argument, then the callee
    body; `len` charges 1 plus its argument; `print` 1 plus arguments.

Exceeding the step budget clamps the counter to exactly the budget and
reports a timeout, so `steps_used == budget` iff the run timed out; a
finishing run always used strictly fewer steps. Division by zero, an
out-of-bounds index, falling off a non-void function and call stacks
deeper than MAX_CALL_DEPTH are reported as runtime errors in the outcome,
never raised out of the harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional

from minigi.lang.ast import (
    ArrayLit,
    Assign,
    Binary,
    Block,
    BoolLit,
    Break,
    Call,
    Continue,
    Expr,
    ExprStmt,
    For,
    Function,
    If,
    Index,
    IntLit,
    Return,
    SourceUnit,
    Stmt,
    Type,
    Unary,
    Var,
    VarDecl,
    While,
)
from minigi.lang.parser import ParseError, parse_expression

DEFAULT_STEP_BUDGET = 1_000_000
MAX_CALL_DEPTH = 128

# Profile bucket for steps charged outside any MiniLang function (the test
# harness call expression itself); excluded from hot-method ranking.
HARNESS_FRAME = "<harness>"


class Status(Enum):
    PASS = "pass"
    FAIL = "fail"
    RUNTIME_ERROR = "runtimeError"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class ExecutionOutcome:
    status: Status
    steps_used: int
    value: Optional[Any] = None
    error: Optional[str] = None


@dataclass(frozen=True)
class TestCase:
    name: str
    call: Call
    expected: Any  # int, bool, or list[int]


class MiniLangRuntimeError(Exception):
    pass


class _Timeout(Exception):
    pass


class _BreakSignal(Exception):
    pass


class _ContinueSignal(Exception):
    pass


class _ReturnSignal(Exception):
    def __init__(self, value: Any):
        self.value = value


_VOID = object()


def value_equal(a: Any, b: Any) -> bool:
    """Structural equality keeping bool and int apart (unlike Python's ==)."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, list) or isinstance(b, list):
        return (
            isinstance(a, list)
            and isinstance(b, list)
            and len(a) == len(b)
            and all(value_equal(x, y) for x, y in zip(a, b))
        )
    return isinstance(a, int) and isinstance(b, int) and a == b


def format_value(v: Any) -> str:
    if v is None or v is _VOID:
        return "void"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return str(v)


class Interpreter:
    """One interpreter instance per program; reusable across calls."""

    def __init__(
        self,
        unit: SourceUnit,
        step_budget: int = DEFAULT_STEP_BUDGET,
        profile: Optional[dict[str, int]] = None,
    ):
        if step_budget <= 0:
            raise ValueError("step budget must be positive")
        self.unit = unit
        self.budget = step_budget
        self.functions = {fn.name: fn for fn in unit.functions}
        self.profile = profile
        self.steps = 0
        self.frames: list[str] = []
        self.prints: list[str] = []

    # -- step accounting --

    def _tick(self) -> None:
        self.steps += 1
        if self.profile is not None:
            frame = self.frames[-1] if self.frames else HARNESS_FRAME
            self.profile[frame] = self.profile.get(frame, 0) + 1
        if self.steps >= self.budget:
            self.steps = self.budget
            raise _Timeout()

    # -- entry points --

    def run_call(self, call: Call) -> ExecutionOutcome:
        """Evaluate one call expression from scratch, counting its steps."""
        self.steps = 0
        self.frames = []
        self.prints = []
        try:
            value = self.eval_expr(call, [{}])
        except _Timeout:
            return ExecutionOutcome(Status.TIMEOUT, self.steps)
        except MiniLangRuntimeError as exc:
            return ExecutionOutcome(Status.RUNTIME_ERROR, self.steps, error=str(exc))
        if value is _VOID:
            value = None
        return ExecutionOutcome(Status.PASS, self.steps, value=value)

    # -- statements --

    def exec_block(self, block: Block, scopes: list[dict]) -> None:
        self._tick()
        scopes.append({})
        try:
            for stmt in block.statements:
                self.exec_stmt(stmt, scopes)
        finally:
            scopes.pop()

    def exec_stmt(self, stmt: Stmt, scopes: list[dict]) -> None:
        if isinstance(stmt, Block):
            self.exec_block(stmt, scopes)
            return
        self._tick()
        if isinstance(stmt, VarDecl):
            scopes[-1][stmt.name] = self.eval_expr(stmt.init, scopes)
        elif isinstance(stmt, Assign):
            self._exec_assign(stmt, scopes)
        elif isinstance(stmt, If):
            if self._truth(self.eval_expr(stmt.cond, scopes)):
                self.exec_block(stmt.then_block, scopes)
            elif stmt.orelse is not None:
                self.exec_stmt(stmt.orelse, scopes)
        elif isinstance(stmt, While):
            while self._truth(self.eval_expr(stmt.cond, scopes)):
                try:
                    self.exec_block(stmt.body, scopes)
                except _BreakSignal:
                    break
                except _ContinueSignal:
                    continue
        elif isinstance(stmt, For):
            scopes.append({})
            try:
                self._exec_clause(stmt.init, scopes)
                while self._truth(self.eval_expr(stmt.cond, scopes)):
                    try:
                        self.exec_block(stmt.body, scopes)
                    except _BreakSignal:
                        break
                    except _ContinueSignal:
                        pass
                    self._exec_clause(stmt.update, scopes)
            finally:
                scopes.pop()
        elif isinstance(stmt, Break):
            raise _BreakSignal()
        elif isinstance(stmt, Continue):
            raise _ContinueSignal()
        elif isinstance(stmt, Return):
            value = _VOID if stmt.value is None else self.eval_expr(stmt.value, scopes)
            raise _ReturnSignal(value)
        elif isinstance(stmt, ExprStmt):
            self.eval_expr(stmt.expr, scopes, allow_void=True)
        else:
            raise TypeError(f"unknown statement node {stmt!r}")

    def _exec_clause(self, clause, scopes: list[dict]) -> None:
        """A for-loop init/update clause, charged like a statement."""
        self._tick()
        if isinstance(clause, VarDecl):
            scopes[-1][clause.name] = self.eval_expr(clause.init, scopes)
        else:
            self._exec_assign(clause, scopes)

    def _exec_assign(self, stmt: Assign, scopes: list[dict]) -> None:
        if isinstance(stmt.target, Var):
            self._tick()  # target node
            value = self.eval_expr(stmt.value, scopes)
            self._store(stmt.target.name, value, scopes)
            return
        target = stmt.target
        self._tick()  # index node
        array = self.eval_expr(target.base, scopes)
        index = self.eval_expr(target.index, scopes)
        value = self.eval_expr(stmt.value, scopes)
        if not isinstance(array, list):
            raise MiniLangRuntimeError("indexed value is not an array")
        if not isinstance(index, int) or isinstance(index, bool):
            raise MiniLangRuntimeError("array index is not an int")
        if index < 0 or index >= len(array):
            raise MiniLangRuntimeError(f"index {index} out of bounds for length {len(array)}")
        array[index] = value

    def _store(self, name: str, value: Any, scopes: list[dict]) -> None:
        for scope in reversed(scopes):
            if name in scope:
                scope[name] = value
                return
        raise MiniLangRuntimeError(f"assignment to undeclared variable {name!r}")

    @staticmethod
    def _truth(value: Any) -> bool:
        if not isinstance(value, bool):
            raise MiniLangRuntimeError("condition is not a bool")
        return value

    # -- expressions --

    def eval_expr(self, expr: Expr, scopes: list[dict], allow_void: bool = False) -> Any:
        self._tick()
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, BoolLit):
            return expr.value
        if isinstance(expr, ArrayLit):
            return [self.eval_expr(e, scopes) for e in expr.elements]
        if isinstance(expr, Var):
            for scope in reversed(scopes):
                if expr.name in scope:
                    return scope[expr.name]
            raise MiniLangRuntimeError(f"unknown variable {expr.name!r}")
        if isinstance(expr, Unary):
            operand = self.eval_expr(expr.operand, scopes)
            if expr.op == "-":
                if isinstance(operand, bool) or not isinstance(operand, int):
                    raise MiniLangRuntimeError("operand of unary '-' is not an int")
                return -operand
            if not isinstance(operand, bool):
                raise MiniLangRuntimeError("operand of '!' is not a bool")
            return not operand
        if isinstance(expr, Binary):
            return self._eval_binary(expr, scopes)
        if isinstance(expr, Index):
            array = self.eval_expr(expr.base, scopes)
            index = self.eval_expr(expr.index, scopes)
            if not isinstance(array, list):
                raise MiniLangRuntimeError("indexed value is not an array")
            if not isinstance(index, int) or isinstance(index, bool):
                raise MiniLangRuntimeError("array index is not an int")
            if index < 0 or index >= len(array):
                raise MiniLangRuntimeError(f"index {index} out of bounds for length {len(array)}")
            return array[index]
        if isinstance(expr, Call):
            return self._eval_call(expr, scopes, allow_void)
        raise TypeError(f"unknown expression node {expr!r}")

    def _eval_binary(self, expr: Binary, scopes: list[dict]) -> Any:
        op = expr.op
        if op == "&&":
            left = self.eval_expr(expr.left, scopes)
            if not self._truth(left):
                return False
            return self._truth(self.eval_expr(expr.right, scopes))
        if op == "||":
            left = self.eval_expr(expr.left, scopes)
            if self._truth(left):
                return True
            return self._truth(self.eval_expr(expr.right, scopes))
        left = self.eval_expr(expr.left, scopes)
        right = self.eval_expr(expr.right, scopes)
        if op in ("==", "!="):
            same = value_equal(left, right)
            return same if op == "==" else not same
        for side in (left, right):
            if isinstance(side, bool) or not isinstance(side, int):
                raise MiniLangRuntimeError(f"operand of {op!r} is not an int")
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        if op == ">=":
            return left >= right
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op in ("/", "%"):
            if right == 0:
                raise MiniLangRuntimeError("division by zero")
            # C-style: quotient truncates toward zero, remainder follows it.
            quotient = abs(left) // abs(right)
            if (left < 0) != (right < 0):
                quotient = -quotient
            if op == "/":
                return quotient
            return left - quotient * right
        raise TypeError(f"unknown operator {op!r}")

    def _eval_call(self, expr: Call, scopes: list[dict], allow_void: bool) -> Any:
        if expr.name == "len":
            if len(expr.args) != 1:
                raise MiniLangRuntimeError("len takes exactly one argument")
            array = self.eval_expr(expr.args[0], scopes)
            if not isinstance(array, list):
                raise MiniLangRuntimeError("argument of len is not an array")
            return len(array)
        if expr.name == "print":
            values = [self.eval_expr(a, scopes) for a in expr.args]
            self.prints.append(" ".join(format_value(v) for v in values))
            if not allow_void:
                raise MiniLangRuntimeError("print used as a value")
            return _VOID
        fn = self.functions.get(expr.name)
        if fn is None:
            raise MiniLangRuntimeError(f"unknown function {expr.name!r}")
        if len(expr.args) != len(fn.params):
            raise MiniLangRuntimeError(
                f"call to {expr.name!r} with {len(expr.args)} arguments, "
                f"expected {len(fn.params)}"
            )
        args = [self.eval_expr(a, scopes) for a in expr.args]
        if len(self.frames) >= MAX_CALL_DEPTH:
            raise MiniLangRuntimeError("call depth exceeded")
        frame_scopes: list[dict] = [dict(zip((p.name for p in fn.params), args))]
        self.frames.append(fn.name)
        try:
            self.exec_block(fn.body, frame_scopes)
        except _ReturnSignal as ret:
            return ret.value
        finally:
            self.frames.pop()
        if fn.return_type is Type.VOID:
            return _VOID
        raise MiniLangRuntimeError(f"{expr.name!r} finished without returning a value")


# -- unit-test harness --


def run_test(
    unit: SourceUnit,
    test: TestCase,
    step_budget: int = DEFAULT_STEP_BUDGET,
    profile: Optional[dict[str, int]] = None,
) -> ExecutionOutcome:
    """Run one test case; a timeout or runtime error is an outcome, not a crash."""
    interp = Interpreter(unit, step_budget, profile)
    outcome = interp.run_call(test.call)
    if outcome.status is not Status.PASS:
        return outcome
    if value_equal(outcome.value, test.expected):
        return outcome
    return ExecutionOutcome(Status.FAIL, outcome.steps_used, value=outcome.value)


def run_suite(
    unit: SourceUnit,
    tests: list[TestCase],
    step_budget: int = DEFAULT_STEP_BUDGET,
    profile: Optional[dict[str, int]] = None,
) -> list[ExecutionOutcome]:
    """Run every test independently; no short-circuiting on failure."""
    return [run_test(unit, t, step_budget, profile) for t in tests]


# -- test-file format: `test <name>: <callExpr> == <literal>` --


def _literal_value(expr: Expr) -> Any:
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Unary) and expr.op == "-" and isinstance(expr.operand, IntLit):
        return -expr.operand.value
    if isinstance(expr, ArrayLit):
        return [_literal_value(e) for e in expr.elements]
    raise ValueError("not a literal")


def parse_test_file(text: str) -> list[TestCase]:
    """Parse a `.tests` file; raises ParseError with the offending line number."""
    tests: list[TestCase] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("//"):
            continue
        if not line.startswith("test "):
            raise ParseError("expected `test <name>: <call> == <literal>`", lineno, 1)
        head, sep, rest = line[len("test "):].partition(":")
        name = head.strip()
        if not sep or not name:
            raise ParseError("missing `:` after test name", lineno, 1)
        try:
            expr = parse_expression(rest.strip())
        except ParseError as exc:
            raise ParseError(exc.message, lineno, exc.col) from None
        if not (isinstance(expr, Binary) and expr.op == "=="):
            raise ParseError("test body must be `<call> == <literal>`", lineno, 1)
        if not isinstance(expr.left, Call):
            raise ParseError("left side of `==` must be a function call", lineno, 1)
        try:
            for arg in expr.left.args:
                _literal_value(arg)
            expected = _literal_value(expr.right)
        except ValueError:
            raise ParseError("test arguments and expectation must be literals", lineno, 1) from None
        tests.append(TestCase(name, expr.left, expected))
    return tests
