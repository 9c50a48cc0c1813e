"""minigi: genetic improvement of MiniLang programs.

The engine mutates statements with the classic edit families
(delete/copy/replace/swap and insert break/continue/return) and with an
LLM-backed block-rewrite operator, evaluates patches on a deterministic
step-counting interpreter or an external toolchain, and reports results
as the two standard tables (random sampling, local search).
"""

__version__ = "0.1.0"
