"""Canonical pretty-printer for MiniLang.

Formatting is fixed: four-space indents, one statement per line, a single
space around binary operators, minimal parentheses. Equal ASTs therefore
print to equal text, and the canonical text is a fixpoint of
parse-then-print, which is what patch fingerprinting relies on.
"""

from __future__ import annotations

import hashlib

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

INDENT = "    "

# Binding strength; higher binds tighter. Postfix/primary handled separately.
_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
_UNARY_PREC = 7
_POSTFIX_PREC = 8


def print_expr(expr: Expr) -> str:
    return _expr(expr, 0)


def _expr(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, ArrayLit):
        return "[" + ", ".join(_expr(e, 0) for e in expr.elements) + "]"
    if isinstance(expr, Call):
        return expr.name + "(" + ", ".join(_expr(a, 0) for a in expr.args) + ")"
    if isinstance(expr, Index):
        return _expr(expr.base, _POSTFIX_PREC) + "[" + _expr(expr.index, 0) + "]"
    if isinstance(expr, Unary):
        text = expr.op + _expr(expr.operand, _UNARY_PREC)
        return f"({text})" if parent_prec > _UNARY_PREC else text
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        left = _expr(expr.left, prec)
        right = _expr(expr.right, prec + 1)  # left-associative chain
        text = f"{left} {expr.op} {right}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(f"unknown expression node {expr!r}")


def _type(t: Type) -> str:
    return t.value


def _assign_text(stmt: Assign) -> str:
    return f"{_expr(stmt.target, 0)} = {_expr(stmt.value, 0)}"


def _clause_text(stmt) -> str:
    if isinstance(stmt, VarDecl):
        return f"var {stmt.name}: {_type(stmt.var_type)} = {_expr(stmt.init, 0)}"
    return _assign_text(stmt)


def _stmt_lines(stmt: Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(stmt, Block):
        lines = [pad + "{"]
        for child in stmt.statements:
            lines.extend(_stmt_lines(child, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, VarDecl):
        return [pad + _clause_text(stmt) + ";"]
    if isinstance(stmt, Assign):
        return [pad + _assign_text(stmt) + ";"]
    if isinstance(stmt, If):
        lines = [pad + f"if ({_expr(stmt.cond, 0)}) {{"]
        for child in stmt.then_block.statements:
            lines.extend(_stmt_lines(child, depth + 1))
        node = stmt.orelse
        while node is not None:
            if isinstance(node, If):
                lines.append(pad + f"}} else if ({_expr(node.cond, 0)}) {{")
                for child in node.then_block.statements:
                    lines.extend(_stmt_lines(child, depth + 1))
                node = node.orelse
            else:
                lines.append(pad + "} else {")
                for child in node.statements:
                    lines.extend(_stmt_lines(child, depth + 1))
                node = None
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, While):
        lines = [pad + f"while ({_expr(stmt.cond, 0)}) {{"]
        for child in stmt.body.statements:
            lines.extend(_stmt_lines(child, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, For):
        header = (
            f"for ({_clause_text(stmt.init)}; {_expr(stmt.cond, 0)}; "
            f"{_assign_text(stmt.update)}) {{"
        )
        lines = [pad + header]
        for child in stmt.body.statements:
            lines.extend(_stmt_lines(child, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, Break):
        return [pad + "break;"]
    if isinstance(stmt, Continue):
        return [pad + "continue;"]
    if isinstance(stmt, Return):
        if stmt.value is None:
            return [pad + "return;"]
        return [pad + f"return {_expr(stmt.value, 0)};"]
    if isinstance(stmt, ExprStmt):
        return [pad + _expr(stmt.expr, 0) + ";"]
    raise TypeError(f"unknown statement node {stmt!r}")


def print_statement(stmt: Stmt, depth: int = 0) -> str:
    return "\n".join(_stmt_lines(stmt, depth))


def print_block(block: Block) -> str:
    """Canonical text of a block at depth zero, braces on their own lines."""
    return print_statement(block, 0)


def _function_lines(fn: Function) -> list[str]:
    params = ", ".join(f"{p.name}: {_type(p.param_type)}" for p in fn.params)
    arrow = "" if fn.return_type is Type.VOID else f" -> {_type(fn.return_type)}"
    lines = [f"fn {fn.name}({params}){arrow} {{"]
    for child in fn.body.statements:
        lines.extend(_stmt_lines(child, 1))
    lines.append("}")
    return lines


def print_canonical(unit: SourceUnit) -> str:
    """Canonical text of a whole unit; single trailing newline, LF endings."""
    chunks = ["\n".join(_function_lines(fn)) for fn in unit.functions]
    return "\n\n".join(chunks) + "\n"


def source_digest(unit: SourceUnit) -> str:
    """SHA-256 hex digest of the canonical printing.

    Digest equality is used as syntactic program equality; collision risk
    is delegated to the 256-bit hash.
    """
    return hashlib.sha256(print_canonical(unit).encode("utf-8")).hexdigest()
