"""Concrete syntax for architecture bundles (``.parch`` files).

A bundle is an ``architecture { ... }`` block, optionally followed by a
``model { ... }`` block (value domain, function definitions, enumeration
caps) and a ``goals { ... }`` block (property formulas), in either order.

The parser is a hand-rolled recursive-descent over a regex token stream.
It collects diagnostics instead of stopping at the first problem: a
malformed statement is reported and skipped, and reference checking
(declared names, arities, index ranges) continues across the rest of the
file.  Declarations are pre-scanned, so statements may reference variables
declared later in the block.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product

from .core import (
    App,
    Architecture,
    Attest,
    BUILTIN_ARITY,
    Check,
    Compute,
    Const,
    DeductionRule,
    DepEntry,
    DERIVE,
    Equation,
    ExprFunc,
    Fold,
    Formula,
    Has,
    HasAll,
    HasNone,
    HasOne,
    Interpretation,
    Knows,
    And,
    Believes,
    MetaVar,
    Proof,
    Receive,
    Spotcheck,
    TableFunc,
    Term,
    Trust,
    Var,
    VerifAttest,
    VerifProof,
    equation_index_vars,
    metavars_of_equation,
    render_dep,
    render_equation,
    render_formula,
    render_relation,
    render_rule,
    render_term,
)

RESERVED = frozenset(
    """architecture component array var fun has compute check receive from
    vars verify_proof verify_attest attest proof spotcheck trust dep deduce
    rule service model domain table maxAdversarialComputes goals hasall
    hasnone hasone and iter""".split()
) | {DERIVE}

# Words that begin an architecture-body statement; error recovery treats them
# as statement boundaries even when bracket nesting is off balance.
_STMT_KEYWORDS = frozenset(
    """component array var fun has compute check receive verify_proof
    verify_attest spotcheck trust dep deduce service""".split()
)


@dataclass(frozen=True)
class SourceDiagnostic:
    severity: str  # "error" or "warning"
    message: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


class BundleParseError(Exception):
    """Raised by :func:`parse_bundle` when the source has errors."""

    def __init__(self, diagnostics: list[SourceDiagnostic]):
        self.diagnostics = diagnostics
        errors = [d for d in diagnostics if d.severity == "error"]
        head = str(errors[0]) if errors else "parse failed"
        more = f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""
        super().__init__(head + more)


@dataclass
class ModelSection:
    """Interpretation plus enumeration caps from a ``model`` block."""

    interp: Interpretation
    max_adversarial: int | None = None


@dataclass
class Bundle:
    architecture: Architecture
    model: ModelSection | None
    goals: tuple[Formula, ...]
    warnings: tuple[SourceDiagnostic, ...] = field(default=(), compare=False)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>//[^\n]*)
    | (?P<nat>\d+)
    | (?P<metavar>\?[A-Za-z_][A-Za-z0-9_]*)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct><-|<=|>=|=>|->|\.\.|[{}()\[\];:,=<>+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # nat | metavar | ident | punct | eof
    text: str
    line: int
    col: int
    end_line: int
    end_col: int


def _lex(text: str) -> tuple[list[_Token], list[SourceDiagnostic]]:
    line_starts = [0]
    for m in re.finditer(r"\n", text):
        line_starts.append(m.end())

    def locate(pos: int) -> tuple[int, int]:
        lo, hi = 0, len(line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if line_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, pos - line_starts[lo] + 1

    tokens: list[_Token] = []
    diags: list[SourceDiagnostic] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = locate(pos)
            diags.append(
                SourceDiagnostic("error", f"unexpected character {text[pos]!r}", line, col, line, col + 1)
            )
            pos += 1
            continue
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            line, col = locate(m.start())
            end_line, end_col = locate(m.end())
            tokens.append(_Token(kind, m.group(), line, col, end_line, end_col))
        pos = m.end()
    line, col = locate(len(text))
    tokens.append(_Token("eof", "", line, col, line, col))
    return tokens, diags


# ---------------------------------------------------------------------------
# Declaration prescan
# ---------------------------------------------------------------------------


@dataclass
class _Decls:
    components: list[str] = field(default_factory=list)
    arrays: dict[str, int] = field(default_factory=dict)
    scalars: list[str] = field(default_factory=list)
    functions: dict[str, int] = field(default_factory=dict)

    def is_array(self, name: str) -> bool:
        return name in self.arrays

    def is_variable(self, name: str) -> bool:
        return name in self.arrays or name in self.scalars


def _prescan(tokens: list[_Token], diags: list[SourceDiagnostic]) -> _Decls:
    """Collect declarations from the architecture body before the main parse.

    Scans loosely (shape errors are left to the parser) but reports duplicate
    and reserved declaration names, which the main parse does not re-check.
    """
    decls = _Decls()
    declared: dict[str, _Token] = {}

    def declare(tok: _Token) -> bool:
        # Reserved words are skipped silently here; the main parse reports them.
        if tok.text in RESERVED:
            return False
        if tok.text in declared:
            diags.append(
                SourceDiagnostic(
                    "error", f"duplicate declaration of {tok.text!r}",
                    tok.line, tok.col, tok.end_line, tok.end_col,
                )
            )
            return False
        declared[tok.text] = tok
        return True

    i = 0
    depth = 0
    seen_arch = False
    n = len(tokens)
    while i < n and tokens[i].kind != "eof":
        t = tokens[i]
        if t.kind == "punct" and t.text == "{":
            depth += 1
        elif t.kind == "punct" and t.text == "}":
            depth -= 1
            if seen_arch and depth == 0:
                break
        elif t.kind == "ident" and not seen_arch and t.text == "architecture":
            seen_arch = True
        elif t.kind == "ident" and seen_arch and depth == 1:
            if t.text == "component":
                i += 1
                while i < n and tokens[i].kind == "ident" and tokens[i].text not in _STMT_KEYWORDS:
                    if declare(tokens[i]):
                        decls.components.append(tokens[i].text)
                    i += 1
                continue
            if t.text == "array":
                if (
                    i + 4 < n
                    and tokens[i + 1].kind == "ident"
                    and tokens[i + 2].text == "["
                    and tokens[i + 3].kind == "nat"
                    and tokens[i + 4].text == "]"
                ):
                    if declare(tokens[i + 1]):
                        decls.arrays[tokens[i + 1].text] = int(tokens[i + 3].text)
                    i += 5
                    continue
            elif t.text == "var":
                i += 1
                while i < n and tokens[i].kind == "ident" and tokens[i].text not in _STMT_KEYWORDS:
                    if declare(tokens[i]):
                        decls.scalars.append(tokens[i].text)
                    i += 1
                continue
            elif t.text == "fun":
                i += 1
                while (
                    i + 2 < n
                    and tokens[i].kind == "ident"
                    and tokens[i].text not in _STMT_KEYWORDS
                    and tokens[i + 1].text == "/"
                    and tokens[i + 2].kind == "nat"
                ):
                    if declare(tokens[i]):
                        decls.functions[tokens[i].text] = int(tokens[i + 2].text)
                    i += 3
                continue
        i += 1
    return decls


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_REL_TOKENS = ("=", "<", ">", "<=", ">=")


class _Parser:
    def __init__(self, tokens: list[_Token], diags: list[SourceDiagnostic]):
        self.tokens = tokens
        self.i = 0
        self.diags = diags
        self.warnings: list[SourceDiagnostic] = []
        self.decls = _prescan(tokens, diags)

    # -- token helpers ------------------------------------------------------

    def _t(self) -> _Token:
        return self.tokens[self.i]

    def _at(self, kind: str, text: str | None = None) -> bool:
        t = self._t()
        return t.kind == kind and (text is None or t.text == text)

    def _at_kw(self, word: str) -> bool:
        return self._at("ident", word)

    def _advance(self) -> _Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def _accept(self, kind: str, text: str | None = None) -> _Token | None:
        if self._at(kind, text):
            return self._advance()
        return None

    def _err(self, tok: _Token, msg: str) -> None:
        self.diags.append(
            SourceDiagnostic("error", msg, tok.line, tok.col, tok.end_line, tok.end_col)
        )

    def _warn(self, tok: _Token, msg: str) -> None:
        self.warnings.append(
            SourceDiagnostic("warning", msg, tok.line, tok.col, tok.end_line, tok.end_col)
        )

    def _expect(self, kind: str, text: str | None, what: str) -> _Token | None:
        if self._at(kind, text):
            return self._advance()
        t = self._t()
        found = repr(t.text) if t.kind != "eof" else "end of input"
        self._err(t, f"expected {what}, found {found}")
        return None

    def _sync(self) -> None:
        """Skip to just after the next ``;``, or stop before an unmatched
        closer or a token that starts a new statement."""
        depth = 0
        while not self._at("eof"):
            t = self._t()
            if t.kind == "punct":
                if t.text in "{([":
                    depth += 1
                elif t.text in "})]":
                    if depth == 0:
                        return
                    depth -= 1
                elif t.text == ";" and depth == 0:
                    self._advance()
                    return
            elif t.kind == "ident" and (t.text in _STMT_KEYWORDS or t.text in ("model", "goals")):
                return
            self._advance()

    def _end_stmt(self, after_brace: bool = False) -> None:
        if self._accept("punct", ";"):
            return
        if not after_brace:
            self._expect("punct", ";", "';'")

    # -- reference checking ---------------------------------------------------

    def _check_component(self, tok: _Token) -> str:
        if tok.text not in self.decls.components:
            self._err(tok, f"undeclared component {tok.text!r}")
        return tok.text

    def _parse_component(self, what: str = "a component name") -> str | None:
        tok = self._expect("ident", None, what)
        if tok is None:
            return None
        return self._check_component(tok)

    # -- variable references ----------------------------------------------------

    def _parse_varref(self, allow_index_var: bool) -> Var | None:
        """scalar name, whole-array name, ``x[2]``, or (optionally) ``x[t]``."""
        name = self._expect("ident", None, "a variable name")
        if name is None:
            return None
        index: int | str | None = None
        index_tok: _Token | None = None
        if self._accept("punct", "["):
            index_tok = self._t()
            if self._at("nat"):
                index = int(self._advance().text)
            elif self._at("ident"):
                index = self._advance().text
            else:
                self._err(index_tok, "expected an index (number or index variable)")
                self._accept("punct", "]")
                return None
            self._expect("punct", "]", "']'")
        # After reporting a reference problem, still return the node as
        # written so the enclosing construct keeps collecting diagnostics.
        if not self.decls.is_variable(name.text):
            self._err(name, f"undeclared variable {name.text!r}")
            return Var(name.text, index)
        if index is None:
            return Var(name.text)
        if not self.decls.is_array(name.text):
            self._err(name, f"{name.text!r} is not an array and cannot be indexed")
            return Var(name.text, index)
        if isinstance(index, int):
            rng = self.decls.arrays[name.text]
            if not 0 <= index < rng:
                assert index_tok is not None
                self._err(index_tok, f"index {index} out of range for {name.text!r} (range {rng})")
        elif not allow_index_var:
            assert index_tok is not None
            self._err(index_tok, "index variables are not allowed here")
        return Var(name.text, index)

    # -- terms and equations -----------------------------------------------------

    def _parse_funcname(self) -> str | None:
        t = self._t()
        if t.kind == "punct" and t.text in ("+", "-", "*"):
            return self._advance().text
        if t.kind == "ident":
            return self._advance().text
        self._err(t, "expected a function name")
        return None

    def _check_funcref(self, tok: _Token, name: str, nargs: int) -> None:
        arity = self.decls.functions.get(name, BUILTIN_ARITY.get(name))
        if arity is None:
            self._err(tok, f"undeclared function {name!r}")
        elif arity != nargs:
            plural = "s" if arity != 1 else ""
            self._err(tok, f"{name!r} expects {arity} argument{plural}, got {nargs}")

    def _parse_term(self, metavars_ok: bool) -> Term | None:
        return self._parse_additive(metavars_ok)

    def _parse_additive(self, metavars_ok: bool) -> Term | None:
        left = self._parse_multiplicative(metavars_ok)
        if left is None:
            return None
        while self._at("punct", "+") or self._at("punct", "-"):
            op = self._advance().text
            right = self._parse_multiplicative(metavars_ok)
            if right is None:
                return None
            left = App(op, (left, right))
        return left

    def _parse_multiplicative(self, metavars_ok: bool) -> Term | None:
        left = self._parse_atom(metavars_ok)
        if left is None:
            return None
        while self._at("punct", "*"):
            self._advance()
            right = self._parse_atom(metavars_ok)
            if right is None:
                return None
            left = App("*", (left, right))
        return left

    def _parse_atom(self, metavars_ok: bool) -> Term | None:
        t = self._t()
        if t.kind == "nat":
            self._advance()
            return Const(int(t.text))
        if t.kind == "metavar":
            self._advance()
            if not metavars_ok:
                self._err(t, "match variables are only allowed in deduction rules")
                return None
            return MetaVar(t.text[1:])
        if self._accept("punct", "("):
            inner = self._parse_term(metavars_ok)
            self._expect("punct", ")", "')'")
            return inner
        if t.kind == "ident" and t.text == "iter":
            self._advance()
            self._expect("punct", "(", "'('")
            func = self._parse_funcname()
            self._expect("punct", ",", "','")
            arr = self._expect("ident", None, "an array name")
            self._expect("punct", ")", "')'")
            if func is None or arr is None:
                return None
            arity = self.decls.functions.get(func, BUILTIN_ARITY.get(func))
            if arity is None:
                self._err(t, f"undeclared function {func!r}")
                return None
            if arity != 2:
                self._err(t, f"iterated function {func!r} must be binary")
                return None
            if not self.decls.is_array(arr.text):
                self._err(arr, f"iteration over non-array {arr.text!r}")
                return None
            return Fold(func, arr.text)
        if t.kind == "ident":
            # Function application or variable reference.
            if self.i + 1 < len(self.tokens) and self.tokens[self.i + 1].text == "(":
                name = self._advance()
                self._advance()  # (
                args: list[Term] = []
                if not self._at("punct", ")"):
                    while True:
                        a = self._parse_term(metavars_ok)
                        if a is None:
                            return None
                        args.append(a)
                        if not self._accept("punct", ","):
                            break
                self._expect("punct", ")", "')'")
                self._check_funcref(name, name.text, len(args))
                return App(name.text, tuple(args))
            ref = self._parse_varref(allow_index_var=True)
            if ref is None:
                return None
            if ref.index is None and self.decls.is_array(ref.name):
                self._err(t, f"array {ref.name!r} used as a scalar; index it or use iter(...)")
                return None
            return ref
        self._err(t, "expected a term")
        return None

    def _parse_equation(self, metavars_ok: bool = False) -> Equation | None:
        start = self._t()
        lhs = self._parse_term(metavars_ok)
        if lhs is None:
            return None
        rel_tok = self._t()
        if not (rel_tok.kind == "punct" and rel_tok.text in _REL_TOKENS):
            self._err(rel_tok, "expected a relation symbol (=, <, >, <=, >=)")
            return None
        self._advance()
        rhs = self._parse_term(metavars_ok)
        if rhs is None:
            return None
        eq = Equation(lhs, rhs, rel_tok.text)
        idx = equation_index_vars(eq)
        if len(idx) > 1:
            names = ", ".join(sorted(idx))
            self._err(start, f"an equation may use at most one index variable (found {names})")
            return None
        return eq

    def _parse_equation_block(self, metavars_ok: bool = False, what: str = "'{'") -> tuple[Equation, ...] | None:
        """``{ eq; eq; }`` with the final separator optional."""
        if self._expect("punct", "{", what) is None:
            return None
        eqs: list[Equation] = []
        while not self._at("punct", "}") and not self._at("eof"):
            start = self.i
            e = self._parse_equation(metavars_ok)
            if e is None:
                if self.i == start:
                    self._advance()
                self._sync()
                if self._at("punct", "}") or self._at("eof"):
                    break
                continue
            eqs.append(e)
            if not self._accept("punct", ";"):
                break
        self._expect("punct", "}", "'}'")
        return tuple(eqs)

    # -- statements (attest / proof) -----------------------------------------------

    def _parse_attest(self) -> Attest | None:
        if self._expect("ident", "attest", "'attest'") is None:
            return None
        author = self._parse_component()
        eqs = self._parse_equation_block()
        if author is None or eqs is None:
            return None
        return Attest(author, eqs)

    def _parse_proof(self) -> Proof | None:
        if self._expect("ident", "proof", "'proof'") is None:
            return None
        author = self._parse_component()
        if self._expect("punct", "{", "'{'") is None:
            return None
        contents: list[Attest | Equation] = []
        while not self._at("punct", "}") and not self._at("eof"):
            start = self.i
            if self._at_kw("attest"):
                att = self._parse_attest()
                if att is None:
                    self._sync()
                    continue
                contents.append(att)
                self._accept("punct", ";")
            else:
                e = self._parse_equation()
                if e is None:
                    if self.i == start:
                        self._advance()
                    self._sync()
                    if self._at("punct", "}") or self._at("eof"):
                        break
                    continue
                contents.append(e)
                if not self._accept("punct", ";"):
                    break
        self._expect("punct", "}", "'}'")
        if author is None:
            return None
        return Proof(author, tuple(contents))

    def _parse_statement(self) -> Attest | Proof | None:
        if self._at_kw("attest"):
            return self._parse_attest()
        if self._at_kw("proof"):
            return self._parse_proof()
        self._err(self._t(), "expected 'attest' or 'proof'")
        return None

    # -- architecture statements ------------------------------------------------

    def _check_decl_name(self, tok: _Token | None) -> None:
        if tok is not None and tok.text in RESERVED:
            self._err(tok, f"reserved word '{tok.text}' cannot be used as a name")

    def _parse_decl_names(self) -> None:
        # Names were collected by the prescan; consume and vet them here.
        while self._at("ident") and self._t().text not in _STMT_KEYWORDS:
            self._check_decl_name(self._t())
            self._advance()
        self._end_stmt()

    def _parse_array_decl(self) -> None:
        name = self._expect("ident", None, "an array name")
        self._check_decl_name(name)
        self._expect("punct", "[", "'['")
        size = self._expect("nat", None, "a length")
        self._expect("punct", "]", "']'")
        if name is not None and size is not None and int(size.text) < 1:
            self._err(size, "array length must be at least 1")
        self._end_stmt()

    def _parse_fun_decl(self) -> None:
        while True:
            name = self._expect("ident", None, "a function name")
            if name is None:
                break
            self._check_decl_name(name)
            self._expect("punct", "/", "'/'")
            self._expect("nat", None, "an arity")
            if not (self._at("ident") and self._t().text not in _STMT_KEYWORDS):
                break
        self._end_stmt()

    def _parse_has(self) -> Has | None:
        self._advance()  # has
        owner = self._parse_component()
        self._expect("punct", "(", "'('")
        ref = self._parse_varref(allow_index_var=False)
        self._expect("punct", ")", "')'")
        self._end_stmt()
        if owner is None or ref is None:
            return None
        return Has(owner, ref)

    def _parse_compute(self) -> Compute | None:
        self._advance()
        owner = self._parse_component()
        self._expect("punct", "(", "'('")
        target_tok = self._t()
        eq = self._parse_equation()
        self._expect("punct", ")", "')'")
        self._end_stmt()
        if owner is None or eq is None:
            return None
        if not isinstance(eq.lhs, Var) or eq.rel != "=":
            self._err(target_tok, "compute must assign a variable: name = term")
            return None
        if eq.lhs.index is None and self.decls.is_array(eq.lhs.name):
            self._err(target_tok, "compute target must be a scalar or an array element")
            return None
        return Compute(owner, eq)

    def _parse_check(self) -> Check | None:
        self._advance()
        owner = self._parse_component()
        eqs = self._parse_equation_block()
        self._end_stmt(after_brace=True)
        if owner is None or eqs is None:
            return None
        if not eqs:
            self._err(self._t(), "check needs at least one equation")
            return None
        return Check(owner, eqs)

    def _parse_receive(self) -> Receive | None:
        self._advance()
        receiver = self._parse_component()
        self._expect("ident", "from", "'from'")
        sender = self._parse_component()
        if self._expect("punct", "{", "'{'") is None:
            return None
        statements: list[Attest | Proof] = []
        while not self._at("punct", "}") and not self._at("eof"):
            start = self.i
            start_tok = self._t()
            s = self._parse_statement()
            if s is None:
                if self.i == start:
                    self._advance()
                self._sync()
                continue
            if s in statements:
                self._warn(start_tok, "duplicate statement in receive ignored")
            else:
                statements.append(s)
        self._expect("punct", "}", "'}'")
        self._expect("ident", "vars", "'vars'")
        if self._expect("punct", "{", "'{'") is None:
            return None
        payload: list[Var] = []
        if not self._at("punct", "}"):
            while True:
                ref_tok = self._t()
                ref = self._parse_varref(allow_index_var=False)
                if ref is not None:
                    if ref in payload:
                        self._warn(ref_tok, f"duplicate payload variable {render_term(ref)!r} ignored")
                    else:
                        payload.append(ref)
                if not self._accept("punct", ","):
                    break
        self._expect("punct", "}", "'}'")
        self._end_stmt(after_brace=True)
        if receiver is None or sender is None:
            return None
        return Receive(receiver, sender, tuple(statements), tuple(payload))

    def _parse_verify(self, kind: str) -> VerifProof | VerifAttest | None:
        self._advance()
        owner = self._parse_component()
        self._expect("punct", "(", "'('")
        if kind == "verify_proof":
            stmt = self._parse_proof()
        else:
            stmt = self._parse_attest()
        self._expect("punct", ")", "')'")
        self._end_stmt()
        if owner is None or stmt is None:
            return None
        if kind == "verify_proof":
            assert isinstance(stmt, Proof)
            return VerifProof(owner, stmt)
        assert isinstance(stmt, Attest)
        return VerifAttest(owner, stmt)

    def _parse_spotcheck(self) -> Spotcheck | None:
        self._advance()
        checker = self._parse_component()
        self._expect("ident", "from", "'from'")
        source = self._parse_component()
        self._expect("punct", "(", "'('")
        arr = self._expect("ident", None, "an array name")
        self._expect("punct", "[", "'['")
        idx = self._expect("ident", None, "an index variable")
        self._expect("punct", "]", "']'")
        self._expect("punct", ",", "','")
        eqs = self._parse_equation_block()
        self._expect("punct", ")", "')'")
        self._end_stmt()
        if None in (checker, source, arr, idx) or eqs is None:
            return None
        assert arr is not None and idx is not None
        if not self.decls.is_array(arr.text):
            self._err(arr, f"spot check target {arr.text!r} is not a declared array")
            return None
        for e in eqs:
            bad = equation_index_vars(e) - {idx.text}
            if bad:
                self._err(idx, f"spot check equations must use index variable {idx.text!r}")
                return None
        return Spotcheck(checker, source, arr.text, idx.text, eqs)  # type: ignore[arg-type]

    def _parse_trust(self) -> Trust | None:
        tok = self._advance()
        truster = self._parse_component()
        trustee = self._parse_component()
        self._end_stmt()
        if truster is None or trustee is None:
            return None
        if truster == trustee:
            self._err(tok, f"component {truster!r} cannot trust itself")
            return None
        return Trust(truster, trustee)

    def _parse_dep(self) -> tuple[str, DepEntry] | None:
        self._advance()
        comp = self._parse_component()
        self._expect("punct", ":", "':'")
        target_tok = self._t()
        target = self._parse_varref(allow_index_var=True)
        self._expect("punct", "<-", "'<-'")
        if self._expect("punct", "{", "'{'") is None:
            return None
        sources: list[Var] = []
        if not self._at("punct", "}"):
            while True:
                ref = self._parse_varref(allow_index_var=True)
                if ref is not None:
                    sources.append(ref)
                if not self._accept("punct", ","):
                    break
        self._expect("punct", "}", "'}'")
        self._end_stmt(after_brace=True)
        if comp is None or target is None:
            return None
        if not sources:
            self._err(target_tok, "a dependency needs at least one source")
            return None
        idx_vars = {v.index for v in (target, *sources) if isinstance(v.index, str)}
        if len(idx_vars) > 1:
            self._err(target_tok, "dependency patterns may share at most one index variable")
            return None
        return comp, DepEntry(target, tuple(sources))

    def _parse_deduce(self) -> tuple[str, DeductionRule] | None:
        self._advance()
        comp = self._parse_component()
        self._expect("ident", "rule", "'rule'")
        name = self._expect("ident", None, "a rule name")
        self._expect("punct", ":", "':'")
        premises = self._parse_equation_block(metavars_ok=True)
        arrow = self._expect("punct", "=>", "'=>'")
        concl_tok = self._t()
        conclusion = self._parse_equation(metavars_ok=True)
        self._end_stmt()
        if comp is None or name is None or premises is None or conclusion is None or arrow is None:
            return None
        rule = DeductionRule(name.text, premises, conclusion)
        bound: set[str] = set()
        for p in premises:
            bound |= metavars_of_equation(p)
        loose = metavars_of_equation(conclusion) - bound
        if loose:
            names = ", ".join(sorted(f"?{m}" for m in loose))
            self._err(concl_tok, f"conclusion match variables {names} are not bound by any premise")
            return None
        return comp, rule

    def _parse_service(self) -> tuple[Equation, ...] | None:
        self._advance()
        eqs = self._parse_equation_block()
        self._end_stmt(after_brace=True)
        return eqs

    # -- top-level blocks ----------------------------------------------------------

    def parse_architecture(self) -> Architecture | None:
        if self._expect("ident", "architecture", "'architecture'") is None:
            return None
        name = self._expect("ident", None, "an architecture name")
        if self._expect("punct", "{", "'{'") is None:
            return None
        relations: list = []
        deps: dict[str, list[DepEntry]] = {}
        rules: dict[str, list[DeductionRule]] = {}
        service: tuple[Equation, ...] = ()
        while not self._at("punct", "}") and not self._at("eof"):
            before = self.i
            t = self._t()
            if t.kind != "ident":
                self._err(t, "expected a declaration or relation")
                self._advance()
                self._sync()
                continue
            word = t.text
            if word in ("component", "var"):
                self._advance()
                self._parse_decl_names()
            elif word == "array":
                self._advance()
                self._parse_array_decl()
            elif word == "fun":
                self._advance()
                self._parse_fun_decl()
            elif word == "has":
                r = self._parse_has()
                if r is not None:
                    relations.append(r)
            elif word == "compute":
                r = self._parse_compute()
                if r is not None:
                    relations.append(r)
            elif word == "check":
                r = self._parse_check()
                if r is not None:
                    relations.append(r)
            elif word == "receive":
                r = self._parse_receive()
                if r is not None:
                    relations.append(r)
            elif word in ("verify_proof", "verify_attest"):
                r = self._parse_verify(word)
                if r is not None:
                    relations.append(r)
            elif word == "spotcheck":
                r = self._parse_spotcheck()
                if r is not None:
                    relations.append(r)
            elif word == "trust":
                r = self._parse_trust()
                if r is not None:
                    relations.append(r)
            elif word == "dep":
                d = self._parse_dep()
                if d is not None:
                    deps.setdefault(d[0], []).append(d[1])
            elif word == "deduce":
                d = self._parse_deduce()
                if d is not None:
                    rules.setdefault(d[0], []).append(d[1])
            elif word == "service":
                s = self._parse_service()
                if s is not None:
                    service = service + s
            else:
                self._err(t, f"unexpected {word!r} in architecture body")
                self._sync()
            if self.i == before:
                self._sync()
                if self.i == before:
                    break
        self._expect("punct", "}", "'}'")
        return Architecture(
            name=name.text if name else "",
            components=tuple(self.decls.components),
            arrays=dict(self.decls.arrays),
            scalars=tuple(self.decls.scalars),
            functions=dict(self.decls.functions),
            relations=tuple(relations),
            deps={c: tuple(es) for c, es in deps.items()},
            rules={c: tuple(rs) for c, rs in rules.items()},
            service=service,
        )

    def parse_model(self) -> ModelSection | None:
        header = self._advance()  # model
        if self._expect("punct", "{", "'{'") is None:
            return None
        lo: int | None = None
        hi: int | None = None
        funcs: dict[str, ExprFunc | TableFunc] = {}
        max_adv: int | None = None
        while not self._at("punct", "}") and not self._at("eof"):
            before = self.i
            t = self._t()
            if self._at_kw("domain"):
                self._advance()
                lo_tok = self._expect("nat", None, "a lower bound")
                self._expect("punct", "..", "'..'")
                hi_tok = self._expect("nat", None, "an upper bound")
                self._end_stmt()
                if lo_tok and hi_tok:
                    if lo is not None:
                        self._err(t, "duplicate domain declaration")
                    else:
                        lo, hi = int(lo_tok.text), int(hi_tok.text)
                        if lo > hi:
                            self._err(hi_tok, "empty domain: upper bound below lower bound")
                            lo = hi = None
            elif self._at_kw("fun"):
                self._advance()
                self._parse_model_fun(funcs)
            elif self._at_kw("maxAdversarialComputes"):
                self._advance()
                n = self._expect("nat", None, "a count")
                self._end_stmt()
                if n is not None:
                    if max_adv is not None:
                        self._err(t, "duplicate maxAdversarialComputes")
                    else:
                        max_adv = int(n.text)
            else:
                self._err(t, "expected 'domain', 'fun', or 'maxAdversarialComputes'")
                self._sync()
            if self.i == before:
                break
        self._expect("punct", "}", "'}'")
        if lo is None or hi is None:
            self._err(header, "model must declare a domain")
            return None
        missing = sorted(set(self.decls.functions) - set(funcs))
        if missing:
            names = ", ".join(missing)
            self._err(header, f"model must define every declared function (missing: {names})")
            return None
        interp = Interpretation(lo, hi, funcs)
        self._check_tables_total(header, interp)
        return ModelSection(interp, max_adv)

    def _parse_model_fun(self, funcs: dict[str, ExprFunc | TableFunc]) -> None:
        name = self._expect("ident", None, "a function name")
        self._expect("punct", "(", "'('")
        params: list[str] = []
        if not self._at("punct", ")"):
            while True:
                p = self._expect("ident", None, "a parameter name")
                if p is not None:
                    params.append(p.text)
                if not self._accept("punct", ","):
                    break
        self._expect("punct", ")", "')'")
        self._expect("punct", "=", "'='")
        if name is None:
            self._sync()
            return
        declared = self.decls.functions.get(name.text)
        if declared is None:
            self._err(name, f"model defines {name.text!r}, which is not a declared function")
        elif declared != len(params):
            self._err(
                name,
                f"{name.text!r} is declared with arity {declared} but defined with {len(params)} parameter(s)",
            )
        if self._at_kw("table"):
            self._advance()
            table = self._parse_table(len(params))
            self._end_stmt(after_brace=True)
            if table is None:
                return
            fi: ExprFunc | TableFunc = TableFunc(tuple(params), table)
        else:
            body = self._parse_model_expr(params)
            self._end_stmt()
            if body is None:
                return
            fi = ExprFunc(tuple(params), body)
        if name.text in funcs:
            self._err(name, f"duplicate definition of {name.text!r}")
        else:
            funcs[name.text] = fi

    def _parse_table(self, nparams: int) -> dict[tuple[int, ...], int] | None:
        if self._expect("punct", "{", "'{'") is None:
            return None
        table: dict[tuple[int, ...], int] = {}
        while not self._at("punct", "}") and not self._at("eof"):
            key_tok = self._t()
            key: tuple[int, ...] | None = None
            if self._at("nat"):
                key = (int(self._advance().text),)
            elif self._accept("punct", "("):
                parts: list[int] = []
                while True:
                    n = self._expect("nat", None, "a number")
                    if n is None:
                        break
                    parts.append(int(n.text))
                    if not self._accept("punct", ","):
                        break
                self._expect("punct", ")", "')'")
                key = tuple(parts)
            else:
                self._err(key_tok, "expected a table key")
                self._sync()
                break
            self._expect("punct", "->", "'->'")
            val = self._expect("nat", None, "a value")
            if key is not None and val is not None:
                if len(key) != nparams:
                    self._err(key_tok, f"table key has {len(key)} part(s); expected {nparams}")
                elif key in table:
                    self._err(key_tok, f"duplicate table entry for {key[0] if len(key) == 1 else key}")
                else:
                    table[key] = int(val.text)
            if not self._accept("punct", ","):
                break
        self._expect("punct", "}", "'}'")
        return table

    def _parse_model_expr(self, params: list[str]) -> Term | None:
        """Expression over parameters and functions only (no variables/arrays)."""
        return self._parse_interp_additive(params)

    def _parse_interp_additive(self, params: list[str]) -> Term | None:
        """Additive layer of the interpretation-expression grammar."""
        left = self._parse_interp_mult(params)
        if left is None:
            return None
        while self._at("punct", "+") or self._at("punct", "-"):
            op = self._advance().text
            right = self._parse_interp_mult(params)
            if right is None:
                return None
            left = App(op, (left, right))
        return left

    def _parse_interp_mult(self, params: list[str]) -> Term | None:
        left = self._parse_interp_atom(params)
        if left is None:
            return None
        while self._at("punct", "*"):
            self._advance()
            right = self._parse_interp_atom(params)
            if right is None:
                return None
            left = App("*", (left, right))
        return left

    def _parse_interp_atom(self, params: list[str]) -> Term | None:
        t = self._t()
        if t.kind == "nat":
            self._advance()
            return Const(int(t.text))
        if self._accept("punct", "("):
            inner = self._parse_interp_term(params)
            self._expect("punct", ")", "')'")
            return inner
        if t.kind == "ident":
            if self.i + 1 < len(self.tokens) and self.tokens[self.i + 1].text == "(":
                name = self._advance()
                self._advance()
                args: list[Term] = []
                if not self._at("punct", ")"):
                    while True:
                        a = self._parse_interp_term(params)
                        if a is None:
                            return None
                        args.append(a)
                        if not self._accept("punct", ","):
                            break
                self._expect("punct", ")", "')'")
                self._check_funcref(name, name.text, len(args))
                return App(name.text, tuple(args))
            self._advance()
            if t.text not in params:
                self._err(t, f"unbound name {t.text!r} in function definition")
                return None
            return Var(t.text)
        self._err(t, "expected a term")
        return None

    def _check_tables_total(self, header: _Token, interp: Interpretation) -> None:
        for name, fi in interp.functions.items():
            if isinstance(fi, TableFunc):
                want = len(fi.params)
                missing = [
                    key
                    for key in product(interp.domain(), repeat=want)
                    if key not in fi.table
                ]
                if missing:
                    self._err(
                        header,
                        f"table for {name!r} is not total on the domain "
                        f"(missing {len(missing)} entr{'y' if len(missing) == 1 else 'ies'}, e.g. "
                        f"{missing[0][0] if want == 1 else missing[0]})",
                    )
                out_of_domain = sorted(
                    v for v in fi.table.values() if not interp.lo <= v <= interp.hi
                )
                if out_of_domain:
                    self._err(
                        header,
                        f"table for {name!r} maps outside the domain (value {out_of_domain[0]})",
                    )

    def parse_goals(self) -> tuple[Formula, ...]:
        self._advance()  # goals
        if self._expect("punct", "{", "'{'") is None:
            return ()
        goals: list[Formula] = []
        while not self._at("punct", "}") and not self._at("eof"):
            before = self.i
            g = self._parse_goal()
            if g is not None:
                goals.append(g)
            self._accept("punct", ";")
            if self.i == before:
                self._sync()
                if self.i == before:
                    break
        self._expect("punct", "}", "'}'")
        return tuple(goals)

    def _parse_goal(self) -> Formula | None:
        left = self._parse_goal_atom()
        if left is None:
            return None
        while self._at_kw("and"):
            self._advance()
            right = self._parse_goal_atom()
            if right is None:
                return None
            left = And(left, right)
        return left

    def _parse_goal_atom(self) -> Formula | None:
        t = self._t()
        if t.kind == "ident" and t.text in ("hasall", "hasnone", "hasone"):
            self._advance()
            comp = self._parse_component()
            self._expect("punct", "(", "'('")
            ref = self._parse_varref(allow_index_var=False)
            self._expect("punct", ")", "')'")
            if comp is None or ref is None:
                return None
            ctor = {"hasall": HasAll, "hasnone": HasNone, "hasone": HasOne}[t.text]
            return ctor(comp, ref)
        if t.kind == "ident" and t.text in ("K", "B"):
            self._advance()
            comp = self._parse_component()
            eqs = self._parse_equation_block()
            if comp is None or eqs is None:
                return None
            if not eqs:
                self._err(t, f"{t.text} needs at least one equation")
                return None
            return Knows(comp, eqs) if t.text == "K" else Believes(comp, eqs)
        self._err(t, "expected a goal (hasall, hasnone, hasone, K, or B)")
        return None

    def parse_bundle(self) -> Bundle | None:
        arch = self.parse_architecture()
        model: ModelSection | None = None
        goals: tuple[Formula, ...] = ()
        seen_model = seen_goals = False
        while not self._at("eof"):
            before = self.i
            if self._at_kw("model"):
                if seen_model:
                    self._err(self._t(), "duplicate model block")
                    self._advance()
                    self._sync()
                else:
                    seen_model = True
                    model = self.parse_model()
            elif self._at_kw("goals"):
                if seen_goals:
                    self._err(self._t(), "duplicate goals block")
                    self._advance()
                    self._sync()
                else:
                    seen_goals = True
                    goals = self.parse_goals()
            else:
                self._err(self._t(), "expected 'model' or 'goals'")
                self._sync()
            if self.i == before:
                break
        if arch is None:
            return None
        return Bundle(arch, model, goals, tuple(self.warnings))


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def parse_bundle(text: str) -> Bundle:
    """Parse ``.parch`` source text.

    Returns a :class:`Bundle` on success (possibly with warnings attached);
    raises :class:`BundleParseError` carrying every collected diagnostic when
    the source has errors.
    """
    if text.startswith("﻿"):
        text = text[1:]
    tokens, lex_diags = _lex(text)
    parser = _Parser(tokens, lex_diags)
    bundle = parser.parse_bundle()
    errors = [d for d in parser.diags if d.severity == "error"]
    if errors or bundle is None:
        ordered = sorted(parser.diags + parser.warnings, key=lambda d: (d.line, d.col))
        raise BundleParseError(ordered)
    # Safety net: structural problems the inline checks cannot see.
    leftover = bundle.architecture.validate()
    if leftover:
        diags = [SourceDiagnostic("error", p, 1, 1, 1, 1) for p in leftover]
        raise BundleParseError(diags)
    return bundle


def load_bundle(path) -> Bundle:
    """Read a ``.parch`` file (UTF-8, BOM tolerated) and parse it.

    I/O problems raise ``OSError``; parse problems raise
    :class:`BundleParseError`.
    """
    with open(path, encoding="utf-8-sig") as fh:
        return parse_bundle(fh.read())


def pretty_print(bundle: Bundle) -> str:
    """Render a bundle to canonical ``.parch`` text.

    Parsing the output yields a bundle structurally equal to the input
    (relation order preserved; duplicate-free by construction).
    """
    a = bundle.architecture
    lines: list[str] = [f"architecture {a.name} {{"]
    if a.components:
        lines.append("  component " + " ".join(a.components) + ";")
    for name, rng in a.arrays.items():
        lines.append(f"  array {name}[{rng}];")
    if a.scalars:
        lines.append("  var " + " ".join(a.scalars) + ";")
    for name, arity in a.functions.items():
        lines.append(f"  fun {name}/{arity};")
    if a.relations:
        lines.append("")
    for r in a.relations:
        lines.append("  " + render_relation(r))
    if a.deps:
        lines.append("")
    for comp, entries in a.deps.items():
        for d in entries:
            lines.append("  " + render_dep(comp, d))
    for comp, rules in a.rules.items():
        for rule in rules:
            lines.append("  " + render_rule(comp, rule))
    if a.service:
        body = " ".join(f"{render_equation(e)};" for e in a.service)
        lines.append(f"  service {{ {body} }};")
    lines.append("}")
    if bundle.model is not None:
        m = bundle.model
        lines.append("")
        lines.append("model {")
        lines.append(f"  domain {m.interp.lo}..{m.interp.hi};")
        for name, fi in m.interp.functions.items():
            params = ", ".join(fi.params)
            if isinstance(fi, TableFunc):
                entries = ", ".join(
                    f"{_render_key(k)} -> {v}" for k, v in sorted(fi.table.items())
                )
                lines.append(f"  fun {name}({params}) = table {{ {entries} }};")
            else:
                lines.append(f"  fun {name}({params}) = {render_term(fi.body)};")
        if m.max_adversarial is not None:
            lines.append(f"  maxAdversarialComputes {m.max_adversarial};")
        lines.append("}")
    if bundle.goals:
        lines.append("")
        lines.append("goals {")
        for g in bundle.goals:
            lines.append(f"  {render_formula(g)};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def _render_key(key: tuple[int, ...]) -> str:
    if len(key) == 1:
        return str(key[0])
    return "(" + ", ".join(str(k) for k in key) + ")"


__all__ = [
    "Bundle",
    "ModelSection",
    "SourceDiagnostic",
    "BundleParseError",
    "parse_bundle",
    "load_bundle",
    "pretty_print",
    "RESERVED",
]
