"""Core object model for privacy architectures.

An architecture declares components, variables (scalars and fixed-length
arrays), function symbols and a set of relations describing who initially
holds which data, who computes what, what is communicated, and which
integrity mechanisms (checks, proof/attestation verification, spot checks,
trust declarations) are in place.  Properties over architectures talk about
data possession (``HasAll`` / ``HasNone`` / ``HasOne``) and about equations a
component can establish (``Knows``) or accept on sampled evidence
(``Believes``).

This module defines the abstract syntax plus the small amount of evaluation
machinery shared by every other module: term/equation evaluation against a
variable state, index instantiation and finite expansion of equations with a
free index variable, and canonical text rendering.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Union

# ---------------------------------------------------------------------------
# Terms and equations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    """A variable reference: scalar ``x``, element ``x[2]`` or pattern ``x[t]``.

    ``index`` is ``None`` for scalars and whole arrays, an ``int`` for a
    concrete array element, and a ``str`` (the index variable's name) for a
    uniform reference to every element.
    """

    name: str
    index: int | str | None = None


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class App:
    """Application of a named function to argument terms."""

    func: str
    args: tuple["Term", ...]


@dataclass(frozen=True)
class Fold:
    """Iterated application of a binary function over a whole array.

    ``Fold("+", "y")`` denotes the left fold of ``+`` over ``y[0..n-1]``,
    i.e. the sum of the array's entries.
    """

    func: str
    array: str


@dataclass(frozen=True)
class MetaVar:
    """A match variable (``?a``) usable only inside deduction rule patterns."""

    name: str


Term = Union[Var, Const, App, Fold, MetaVar]

RELATION_SYMBOLS = ("=", "<", ">", "<=", ">=")


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term
    rel: str = "="

    def __post_init__(self) -> None:
        if self.rel not in RELATION_SYMBOLS:
            raise ValueError(f"unknown relation symbol {self.rel!r}")


# ---------------------------------------------------------------------------
# Statements (attestations and proofs) and architecture relations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Attest:
    """Equations certified by ``author``."""

    author: str
    equations: tuple[Equation, ...]


@dataclass(frozen=True)
class Proof:
    """A verifiable object produced by ``author``.

    Contents mix plain equations (established by the proof itself) and
    attestations by third parties (vouched for, not proven).
    """

    author: str
    contents: tuple[Union[Attest, Equation], ...]


Statement = Union[Proof, Attest]


@dataclass(frozen=True)
class Has:
    owner: str
    var: Var


@dataclass(frozen=True)
class Receive:
    receiver: str
    sender: str
    statements: tuple[Statement, ...]
    payload: tuple[Var, ...]


@dataclass(frozen=True)
class Compute:
    owner: str
    equation: Equation


@dataclass(frozen=True)
class Check:
    owner: str
    equations: tuple[Equation, ...]


@dataclass(frozen=True)
class VerifProof:
    owner: str
    proof: Proof


@dataclass(frozen=True)
class VerifAttest:
    owner: str
    attest: Attest


@dataclass(frozen=True)
class Spotcheck:
    """``checker`` requests one sampled element of ``source``'s array.

    ``equations`` are checked with ``index_var`` bound to the sampled index.
    """

    checker: str
    source: str
    array: str
    index_var: str
    equations: tuple[Equation, ...]


@dataclass(frozen=True)
class Trust:
    truster: str
    trustee: str


Relation = Union[Has, Receive, Compute, Check, VerifProof, VerifAttest, Spotcheck, Trust]


@dataclass(frozen=True)
class DepEntry:
    """Derivability: the target can be computed from the sources.

    Patterns may share one index variable, read uniformly over the range:
    ``DepEntry(x[t], (Cons[t],))`` licenses derivation of each element from
    the matching element.
    """

    target: Var
    sources: tuple[Var, ...]


@dataclass(frozen=True)
class DeductionRule:
    """A named inference rule over equations with ``?x`` metavariables."""

    name: str
    premises: tuple[Equation, ...]
    conclusion: Equation


# ---------------------------------------------------------------------------
# Architecture
# ---------------------------------------------------------------------------


@dataclass
class Architecture:
    """A complete architecture description.

    Instances are treated as immutable after construction; use
    :func:`dataclasses.replace` (re-exported as ``replace``) to build
    variants in tests or tooling.
    """

    name: str
    components: tuple[str, ...]
    arrays: dict[str, int]
    scalars: tuple[str, ...]
    functions: dict[str, int]
    relations: tuple[Relation, ...]
    deps: dict[str, tuple[DepEntry, ...]] = field(default_factory=dict)
    rules: dict[str, tuple[DeductionRule, ...]] = field(default_factory=dict)
    service: tuple[Equation, ...] = ()

    # -- lookups ------------------------------------------------------------

    def is_array(self, name: str) -> bool:
        return name in self.arrays

    def is_scalar(self, name: str) -> bool:
        return name in self.scalars

    def is_variable(self, name: str) -> bool:
        return name in self.arrays or name in self.scalars

    def range_of(self, name: str) -> int:
        return self.arrays[name]

    def variable_names(self) -> tuple[str, ...]:
        """All declared variable names, scalars first, in declaration order."""
        return self.scalars + tuple(self.arrays)

    def deps_of(self, component: str) -> tuple[DepEntry, ...]:
        return self.deps.get(component, ())

    def rules_of(self, component: str) -> tuple[DeductionRule, ...]:
        return self.rules.get(component, ())

    def trusts(self, truster: str, trustee: str) -> bool:
        return any(
            isinstance(r, Trust) and r.truster == truster and r.trustee == trustee
            for r in self.relations
        )

    # -- structural validation ------------------------------------------------

    def validate(self) -> list[str]:
        """Return structural problems (empty when well formed).

        Checks declarations, arities, index ranges, the single-index-variable
        restriction on equations and dependency entries, compute shapes, and
        metavariable scoping in deduction rules.
        """
        problems: list[str] = []

        def check_component(c: str, ctx: str) -> None:
            if c not in self.components:
                problems.append(f"{ctx}: undeclared component {c!r}")

        def check_var(v: Var, ctx: str) -> None:
            if isinstance(v.index, (int, str)) and not self.is_array(v.name):
                problems.append(f"{ctx}: {v.name!r} indexed but not a declared array")
            elif v.index is None and not self.is_variable(v.name):
                problems.append(f"{ctx}: undeclared variable {v.name!r}")
            elif isinstance(v.index, int):
                if not 0 <= v.index < self.arrays.get(v.name, 0):
                    problems.append(f"{ctx}: index {v.index} out of range for {v.name!r}")

        def check_term(t: Term, ctx: str, metavars_ok: bool = False) -> None:
            if isinstance(t, Var):
                check_var(t, ctx)
            elif isinstance(t, App):
                arity = self.functions.get(t.func, BUILTIN_ARITY.get(t.func))
                if arity is None:
                    problems.append(f"{ctx}: undeclared function {t.func!r}")
                elif arity != len(t.args):
                    problems.append(
                        f"{ctx}: {t.func!r} expects {arity} argument(s), got {len(t.args)}"
                    )
                for a in t.args:
                    check_term(a, ctx, metavars_ok)
            elif isinstance(t, Fold):
                arity = self.functions.get(t.func, BUILTIN_ARITY.get(t.func))
                if arity not in (None, 2):
                    problems.append(f"{ctx}: iterated function {t.func!r} must be binary")
                if arity is None and t.func not in BUILTIN_ARITY:
                    problems.append(f"{ctx}: undeclared function {t.func!r}")
                if not self.is_array(t.array):
                    problems.append(f"{ctx}: iteration over non-array {t.array!r}")
            elif isinstance(t, MetaVar) and not metavars_ok:
                problems.append(f"{ctx}: match variable ?{t.name} outside a deduction rule")

        def check_eq(e: Equation, ctx: str, metavars_ok: bool = False) -> None:
            check_term(e.lhs, ctx, metavars_ok)
            check_term(e.rhs, ctx, metavars_ok)
            if len(equation_index_vars(e)) > 1:
                problems.append(f"{ctx}: more than one index variable in one equation")

        def check_statement(s: Statement, ctx: str) -> None:
            if isinstance(s, Attest):
                check_component(s.author, ctx)
                for e in s.equations:
                    check_eq(e, ctx)
            else:
                check_component(s.author, ctx)
                for item in s.contents:
                    if isinstance(item, Attest):
                        check_statement(item, ctx)
                    else:
                        check_eq(item, ctx)

        for name, rng in self.arrays.items():
            if rng < 1:
                problems.append(f"array {name!r}: range must be at least 1")
        for name in self.scalars:
            if name in self.arrays:
                problems.append(f"{name!r} declared as both scalar and array")

        for r in self.relations:
            ctx = render_relation(r)
            if isinstance(r, Has):
                check_component(r.owner, ctx)
                check_var(r.var, ctx)
            elif isinstance(r, Receive):
                check_component(r.receiver, ctx)
                check_component(r.sender, ctx)
                for v in r.payload:
                    check_var(v, ctx)
                for s in r.statements:
                    check_statement(s, ctx)
            elif isinstance(r, Compute):
                check_component(r.owner, ctx)
                if not isinstance(r.equation.lhs, Var) or r.equation.rel != "=":
                    problems.append(f"{ctx}: compute target must be a variable equation")
                check_eq(r.equation, ctx)
            elif isinstance(r, Check):
                check_component(r.owner, ctx)
                for e in r.equations:
                    check_eq(e, ctx)
            elif isinstance(r, VerifProof):
                check_component(r.owner, ctx)
                check_statement(r.proof, ctx)
            elif isinstance(r, VerifAttest):
                check_component(r.owner, ctx)
                check_statement(r.attest, ctx)
            elif isinstance(r, Spotcheck):
                check_component(r.checker, ctx)
                check_component(r.source, ctx)
                if not self.is_array(r.array):
                    problems.append(f"{ctx}: spot check target {r.array!r} is not an array")
                for e in r.equations:
                    check_eq(e, ctx)
                    idxs = equation_index_vars(e)
                    if idxs and idxs != {r.index_var}:
                        problems.append(f"{ctx}: equations must use index variable {r.index_var!r}")
            elif isinstance(r, Trust):
                check_component(r.truster, ctx)
                check_component(r.trustee, ctx)

        for comp, entries in self.deps.items():
            check_component(comp, "dep")
            for d in entries:
                ctx = f"dep {comp}: {render_var(d.target)}"
                check_var(d.target, ctx)
                idx_vars = {v.index for v in (d.target, *d.sources) if isinstance(v.index, str)}
                if len(idx_vars) > 1:
                    problems.append(f"{ctx}: dependency patterns share more than one index variable")
                for v in d.sources:
                    check_var(v, ctx)

        for comp, rules in self.rules.items():
            check_component(comp, "deduce")
            for rule in rules:
                ctx = f"rule {rule.name}"
                premise_mvs: set[str] = set()
                for p in rule.premises:
                    check_eq(p, ctx, metavars_ok=True)
                    premise_mvs |= metavars_of_equation(p)
                check_eq(rule.conclusion, ctx, metavars_ok=True)
                loose = metavars_of_equation(rule.conclusion) - premise_mvs
                if loose:
                    names = ", ".join(sorted(f"?{m}" for m in loose))
                    problems.append(f"{ctx}: conclusion match variables {names} not bound by any premise")

        for e in self.service:
            check_eq(e, "service")

        return problems


# ---------------------------------------------------------------------------
# Property formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HasAll:
    component: str
    var: Var


@dataclass(frozen=True)
class HasNone:
    component: str
    var: Var


@dataclass(frozen=True)
class HasOne:
    component: str
    var: Var


@dataclass(frozen=True)
class Knows:
    component: str
    equations: tuple[Equation, ...]


@dataclass(frozen=True)
class Believes:
    component: str
    equations: tuple[Equation, ...]


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


Formula = Union[HasAll, HasNone, HasOne, Knows, Believes, And]


# ---------------------------------------------------------------------------
# Interpretations and values
# ---------------------------------------------------------------------------

# Binary builtins available without declaration.
BUILTIN_ARITY: dict[str, int] = {"+": 2, "-": 2, "*": 2, "min": 2, "max": 2}

# Reserved symbol used to canonicalize derivations licensed by Dep entries.
DERIVE = "derive"

_BUILTIN_OPS: dict[str, Callable[[int, int], int]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "min": min,
    "max": max,
}


class EvalError(ValueError):
    """A term is malformed for evaluation (unknown symbol, bad index, not ground)."""


@dataclass(frozen=True)
class ExprFunc:
    """Function given as an expression over its parameters."""

    params: tuple[str, ...]
    body: Term


@dataclass(frozen=True)
class TableFunc:
    """Function given by an explicit table over domain argument tuples.

    Lookups wrap each argument into the domain (modulo its size) so the
    function is total even on computed values that escaped the domain.
    """

    params: tuple[str, ...]
    table: dict[tuple[int, ...], int]


FuncInterp = Union[ExprFunc, TableFunc]


@dataclass
class Interpretation:
    """A finite value domain plus a meaning for every declared function."""

    lo: int
    hi: int
    functions: dict[str, FuncInterp] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("empty value domain")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def domain(self) -> range:
        return range(self.lo, self.hi + 1)

    def wrap(self, v: int) -> int:
        return self.lo + (v - self.lo) % self.size

    def apply(self, func: str, args: tuple[int, ...]) -> int:
        if func in _BUILTIN_OPS:
            if len(args) != 2:
                raise EvalError(f"builtin {func!r} expects 2 arguments, got {len(args)}")
            return _BUILTIN_OPS[func](*args)
        if func == DERIVE:
            return self.wrap(sum(args))
        fi = self.functions.get(func)
        if fi is None:
            raise EvalError(f"unknown function {func!r}")
        if len(args) != len(fi.params):
            raise EvalError(f"{func!r} expects {len(fi.params)} arguments, got {len(args)}")
        if isinstance(fi, TableFunc):
            key = tuple(self.wrap(a) for a in args)
            try:
                return fi.table[key]
            except KeyError:
                raise EvalError(f"table for {func!r} has no entry for {key}") from None
        env = dict(zip(fi.params, args))
        return self._eval_body(fi.body, env, depth=0)

    def _eval_body(self, t: Term, env: Mapping[str, int], depth: int) -> int:
        if depth > 32:
            raise EvalError("interpretation expressions nest too deeply")
        if isinstance(t, Const):
            return t.value
        if isinstance(t, Var):
            if t.index is not None or t.name not in env:
                raise EvalError(f"unbound name {t.name!r} in interpretation expression")
            return env[t.name]
        if isinstance(t, App):
            args = tuple(self._eval_body(a, env, depth + 1) for a in t.args)
            return self.apply(t.func, args)
        raise EvalError("unsupported construct in interpretation expression")


# ---------------------------------------------------------------------------
# Evaluation against a variable state
# ---------------------------------------------------------------------------

# A variable state maps scalar names to an int or None (undefined), and array
# names to a tuple of int-or-None entries.
Value = Union[int, None]
VarState = Mapping[str, Union[Value, tuple[Value, ...]]]


def eval_term(term: Term, state: VarState, interp: Interpretation) -> Value:
    """Evaluate a ground term; ``None`` (undefined) absorbs through all operators.

    Raises :class:`EvalError` for malformed terms: non-ground references,
    unknown functions, out-of-range literal indexes.
    """
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        if term.name not in state:
            raise EvalError(f"unknown variable {term.name!r}")
        v = state[term.name]
        if isinstance(term.index, str):
            raise EvalError(f"term is not ground: free index {term.index!r}")
        if term.index is None:
            if isinstance(v, tuple):
                raise EvalError(f"array {term.name!r} used without an index")
            return v
        if not isinstance(v, tuple):
            raise EvalError(f"scalar {term.name!r} used with an index")
        if not 0 <= term.index < len(v):
            raise EvalError(f"index {term.index} out of range for {term.name!r}")
        return v[term.index]
    if isinstance(term, App):
        args = []
        for pos, a in enumerate(term.args):
            v = eval_term(a, state, interp)
            if v is None:
                # Still force evaluation of the remaining arguments so that
                # malformed terms are reported even when undefined absorbs.
                for rest in term.args[pos + 1 :]:
                    eval_term(rest, state, interp)
                return None
            args.append(v)
        return interp.apply(term.func, tuple(args))
    if isinstance(term, Fold):
        if term.array not in state:
            raise EvalError(f"unknown variable {term.array!r}")
        vec = state[term.array]
        if not isinstance(vec, tuple):
            raise EvalError(f"iteration over non-array {term.array!r}")
        if any(v is None for v in vec):
            return None
        acc = vec[0]
        for v in vec[1:]:
            acc = interp.apply(term.func, (acc, v))
        return acc
    raise EvalError(f"cannot evaluate {term!r}")


_REL_TESTS: dict[str, Callable[[int, int], bool]] = {
    "=": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def eval_eq(eq: Equation, state: VarState, interp: Interpretation) -> bool | None:
    """Evaluate a ground equation; ``None`` when either side is undefined."""
    left = eval_term(eq.lhs, state, interp)
    right = eval_term(eq.rhs, state, interp)
    if left is None or right is None:
        return None
    return _REL_TESTS[eq.rel](left, right)


# ---------------------------------------------------------------------------
# Index instantiation and expansion
# ---------------------------------------------------------------------------


class IndexRangeError(ValueError):
    """A concrete index falls outside an array's range."""


class ExpansionError(ValueError):
    """An equation cannot be expanded (ambiguous or conflicting index use)."""


def term_index_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.index} if isinstance(t.index, str) else set()
    if isinstance(t, App):
        out: set[str] = set()
        for a in t.args:
            out |= term_index_vars(a)
        return out
    return set()


def equation_index_vars(e: Equation) -> set[str]:
    return term_index_vars(e.lhs) | term_index_vars(e.rhs)


def metavars_of_term(t: Term) -> set[str]:
    if isinstance(t, MetaVar):
        return {t.name}
    if isinstance(t, App):
        out: set[str] = set()
        for a in t.args:
            out |= metavars_of_term(a)
        return out
    return set()


def metavars_of_equation(e: Equation) -> set[str]:
    return metavars_of_term(e.lhs) | metavars_of_term(e.rhs)


def _subst_index_term(t: Term, k: str, ck: int, ranges: Mapping[str, int]) -> Term:
    if isinstance(t, Var) and t.index == k:
        rng = ranges.get(t.name)
        if rng is None or not 0 <= ck < rng:
            raise IndexRangeError(f"index {ck} out of range for {t.name!r}")
        return Var(t.name, ck)
    if isinstance(t, App):
        return App(t.func, tuple(_subst_index_term(a, k, ck, ranges) for a in t.args))
    return t


def instantiate_index(e: Equation, k: str, ck: int, ranges: Mapping[str, int]) -> Equation:
    """Substitute concrete index ``ck`` for index variable ``k`` throughout.

    Raises :class:`IndexRangeError` when ``ck`` falls outside the range of any
    array indexed by ``k`` in the equation.
    """
    return Equation(
        _subst_index_term(e.lhs, k, ck, ranges),
        _subst_index_term(e.rhs, k, ck, ranges),
        e.rel,
    )


def _indexed_arrays(t: Term, k: str) -> set[str]:
    if isinstance(t, Var) and t.index == k:
        return {t.name}
    if isinstance(t, App):
        out: set[str] = set()
        for a in t.args:
            out |= _indexed_arrays(a, k)
        return out
    return set()


def expand_equation(e: Equation, ranges: Mapping[str, int]) -> list[Equation]:
    """Expand a free index variable over its shared range.

    A ground equation expands to itself.  Exactly one free index variable is
    allowed, and every array it indexes must have the same range; anything
    else raises :class:`ExpansionError`.
    """
    idx = equation_index_vars(e)
    if not idx:
        return [e]
    if len(idx) > 1:
        names = ", ".join(sorted(idx))
        raise ExpansionError(f"equation uses more than one index variable ({names})")
    (k,) = idx
    arrays = _indexed_arrays(e.lhs, k) | _indexed_arrays(e.rhs, k)
    rngs = {ranges[a] for a in arrays if a in ranges}
    if len(rngs) != 1:
        raise ExpansionError(f"arrays indexed by {k!r} do not share one range")
    (rng,) = rngs
    return [instantiate_index(e, k, ck, ranges) for ck in range(rng)]


def equation_is_ground(e: Equation) -> bool:
    return not equation_index_vars(e) and not metavars_of_equation(e)


def term_reads(t: Term) -> set[Var]:
    """Variable entries a ground term reads; a fold reads its whole array."""
    if isinstance(t, Var):
        return {t}
    if isinstance(t, App):
        out: set[Var] = set()
        for a in t.args:
            out |= term_reads(a)
        return out
    if isinstance(t, Fold):
        return {Var(t.array)}
    return set()


def equation_reads(e: Equation) -> set[Var]:
    return term_reads(e.lhs) | term_reads(e.rhs)


# ---------------------------------------------------------------------------
# Canonical rendering (shared by diagnostics, reports and the pretty-printer)
# ---------------------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_ATOM = 3


def _term_prec(t: Term) -> int:
    if isinstance(t, App) and t.func in ("+", "-"):
        return _PREC_ADD
    if isinstance(t, App) and t.func == "*":
        return _PREC_MUL
    return _PREC_ATOM


def render_term(t: Term) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Var):
        return t.name if t.index is None else f"{t.name}[{t.index}]"
    if isinstance(t, MetaVar):
        return f"?{t.name}"
    if isinstance(t, Fold):
        return f"iter({t.func}, {t.array})"
    if isinstance(t, App):
        if t.func in ("+", "-", "*") and len(t.args) == 2:
            prec = _term_prec(t)
            left, right = t.args
            ls = render_term(left)
            rs = render_term(right)
            if _term_prec(left) < prec:
                ls = f"({ls})"
            # Right operand needs parens on equal precedence too: fold is left
            # associative and `-` is not associative.
            if _term_prec(right) <= prec:
                rs = f"({rs})"
            return f"{ls} {t.func} {rs}"
        args = ", ".join(render_term(a) for a in t.args)
        return f"{t.func}({args})"
    raise TypeError(f"not a term: {t!r}")


def render_var(v: Var) -> str:
    return render_term(v)


def render_equation(e: Equation) -> str:
    return f"{render_term(e.lhs)} {e.rel} {render_term(e.rhs)}"


def render_equations(eqs: Iterable[Equation]) -> str:
    return "; ".join(render_equation(e) for e in eqs)


def render_statement(s: Statement) -> str:
    if isinstance(s, Attest):
        body = " ".join(f"{render_equation(e)};" for e in s.equations)
        return f"attest {s.author} {{ {body} }}" if body else f"attest {s.author} {{ }}"
    parts = []
    for item in s.contents:
        if isinstance(item, Attest):
            parts.append(render_statement(item))
        else:
            parts.append(f"{render_equation(item)};")
    body = " ".join(parts)
    return f"proof {s.author} {{ {body} }}" if body else f"proof {s.author} {{ }}"


def render_relation(r: Relation) -> str:
    if isinstance(r, Has):
        return f"has {r.owner} ({render_var(r.var)});"
    if isinstance(r, Compute):
        return f"compute {r.owner} ({render_equation(r.equation)});"
    if isinstance(r, Check):
        body = " ".join(f"{render_equation(e)};" for e in r.equations)
        return f"check {r.owner} {{ {body} }};"
    if isinstance(r, Receive):
        stmts = " ".join(render_statement(s) for s in r.statements)
        stmts = f"{{ {stmts} }}" if stmts else "{ }"
        payload = ", ".join(render_var(v) for v in r.payload)
        payload = f"{{ {payload} }}" if payload else "{ }"
        return f"receive {r.receiver} from {r.sender} {stmts} vars {payload};"
    if isinstance(r, VerifProof):
        return f"verify_proof {r.owner} ({render_statement(r.proof)});"
    if isinstance(r, VerifAttest):
        return f"verify_attest {r.owner} ({render_statement(r.attest)});"
    if isinstance(r, Spotcheck):
        body = " ".join(f"{render_equation(e)};" for e in r.equations)
        return f"spotcheck {r.checker} from {r.source} ({r.array}[{r.index_var}], {{ {body} }});"
    if isinstance(r, Trust):
        return f"trust {r.truster} {r.trustee};"
    raise TypeError(f"not a relation: {r!r}")


def render_dep(component: str, d: DepEntry) -> str:
    sources = ", ".join(render_var(v) for v in d.sources)
    return f"dep {component}: {render_var(d.target)} <- {{ {sources} }};"


def render_rule(component: str, rule: DeductionRule) -> str:
    premises = "; ".join(render_equation(p) for p in rule.premises)
    return (
        f"deduce {component} rule {rule.name}: "
        f"{{ {premises} }} => {render_equation(rule.conclusion)};"
    )


def render_formula(f: Formula) -> str:
    if isinstance(f, HasAll):
        return f"hasall {f.component} ({render_var(f.var)})"
    if isinstance(f, HasNone):
        return f"hasnone {f.component} ({render_var(f.var)})"
    if isinstance(f, HasOne):
        return f"hasone {f.component} ({render_var(f.var)})"
    if isinstance(f, Knows):
        return f"K {f.component} {{ {render_equations(f.equations)} }}"
    if isinstance(f, Believes):
        return f"B {f.component} {{ {render_equations(f.equations)} }}"
    if isinstance(f, And):
        return f"{render_formula(f.left)} and {render_formula(f.right)}"
    raise TypeError(f"not a formula: {f!r}")


def formula_atoms(f: Formula) -> Iterator[Formula]:
    """Yield the non-conjunctive atoms of a formula, left to right."""
    if isinstance(f, And):
        yield from formula_atoms(f.left)
        yield from formula_atoms(f.right)
    else:
        yield f


__all__ = [
    "Var", "Const", "App", "Fold", "MetaVar", "Term",
    "Equation", "RELATION_SYMBOLS",
    "Attest", "Proof", "Statement",
    "Has", "Receive", "Compute", "Check", "VerifProof", "VerifAttest",
    "Spotcheck", "Trust", "Relation",
    "DepEntry", "DeductionRule", "Architecture",
    "HasAll", "HasNone", "HasOne", "Knows", "Believes", "And", "Formula",
    "Interpretation", "ExprFunc", "TableFunc", "FuncInterp",
    "Value", "VarState", "EvalError", "IndexRangeError", "ExpansionError",
    "BUILTIN_ARITY", "DERIVE",
    "eval_term", "eval_eq", "instantiate_index", "expand_equation",
    "equation_index_vars", "equation_is_ground", "equation_reads",
    "term_reads", "term_index_vars", "metavars_of_equation", "metavars_of_term",
    "render_term", "render_var", "render_equation", "render_equations",
    "render_statement", "render_relation", "render_dep", "render_rule",
    "render_formula", "formula_atoms", "replace",
]
