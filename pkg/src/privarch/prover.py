"""Inference engine for possession, knowledge, and belief properties.

Possession facts are saturated from the architecture relations: has,
receive payloads, and computes seed the ALL set (rules H1, H2, H3),
spotchecks seed the ONE set (H4), and dep entries close ALL under
derivability (H5). Whole-variable facts project onto elements (H7, H8),
everything underivable is NONE by the closed-world rule H6, and NONE
lifts into ONE (HNO).

Knowledge and belief start from the relations a component evaluates
itself (K1 computes, K2 checks, K3 proofs) or accepts from a trusted
author (K4 nested attestations, K5 attestations), plus spotcheck
equations as beliefs (rule B). Deduction rules then forward-chain over
knowledge (K step) and over knowledge plus belief (B step) up to a
depth budget.

Every derived fact carries a Derivation tree whose nodes cite the rule
ids above, so a proof can be rendered or serialized with the exact
rules that fired.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Union

from .core import (
    And,
    App,
    Architecture,
    Attest,
    Believes,
    Check,
    Compute,
    Const,
    DeductionRule,
    DepEntry,
    Equation,
    Fold,
    Formula,
    Has,
    HasAll,
    HasNone,
    HasOne,
    Knows,
    MetaVar,
    Receive,
    Spotcheck,
    Term,
    Trust,
    Var,
    VerifAttest,
    VerifProof,
    expand_equation,
    render_dep,
    render_formula,
    render_relation,
    render_rule,
)

# A possession item: a scalar or whole array by name, or one array element.
Item = Union[str, tuple[str, int]]

K_STEP = "K▷"
B_STEP = "B▷"
K_AND = "K∧"
B_AND = "B∧"
I_AND = "I∧"
LEAF_RULES = frozenset({"relation", "dep", "rule"})


@dataclass(frozen=True)
class Derivation:
    """Proof tree; leaves cite relations, dep entries, or deduction rules."""

    rule: str
    conclusion: str
    premises: tuple["Derivation", ...] = ()

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "conclusion": self.conclusion,
            "premises": [p.to_json() for p in self.premises],
        }

    def to_text(self, indent: int = 0) -> str:
        lines = [f"{'  ' * indent}({self.rule}) {self.conclusion}"]
        lines.extend(p.to_text(indent + 1) for p in self.premises)
        return "\n".join(lines)

    def rules_used(self) -> frozenset[str]:
        used = set() if self.rule in LEAF_RULES else {self.rule}
        for p in self.premises:
            used |= p.rules_used()
        return frozenset(used)

    def count(self, rule: str) -> int:
        return (self.rule == rule) + sum(p.count(rule) for p in self.premises)


@dataclass(frozen=True)
class NotProvable:
    """Outcome when no derivation exists within the budget."""

    reason: str
    conjunct: Equation | None = None
    budget_exhausted: bool = False


@dataclass(frozen=True)
class DeductionBudget:
    """Caps on forward chaining: rule-application depth and fact count."""

    depth: int = 4
    max_facts: int = 10000

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be at least 0")
        if self.max_facts < 1:
            raise ValueError("max_facts must be at least 1")


@dataclass(frozen=True)
class HasStatus:
    """Per-component possession sets with their derivations."""

    all_items: Mapping[str, frozenset[Item]]
    one_items: Mapping[str, frozenset[Item]]
    none_items: Mapping[str, frozenset[Item]]
    derivations: Mapping[tuple[str, str, Item], Derivation]

    def all_of(self, component: str) -> frozenset[Item]:
        return self.all_items.get(component, frozenset())

    def one_of(self, component: str) -> frozenset[Item]:
        return self.one_items.get(component, frozenset())

    def none_of(self, component: str) -> frozenset[Item]:
        return self.none_items.get(component, frozenset())

    def derivation(self, component: str, kind: str, item: Item) -> Derivation | None:
        return self.derivations.get((component, kind, item))


@dataclass(frozen=True)
class KnowledgeBase:
    """Per-component known and believed equations with their derivations.

    Facts keep the form they were stated in; an equation over an index
    variable stands for all its ground instances. ``exhausted`` records
    that deduction stopped at the budget before reaching a fixpoint.
    """

    knows: Mapping[str, frozenset[Equation]]
    believes: Mapping[str, frozenset[Equation]]
    derivations: Mapping[tuple[str, str, Equation], Derivation]
    exhausted: bool = False

    def known(self, component: str) -> frozenset[Equation]:
        return self.knows.get(component, frozenset())

    def believed(self, component: str) -> frozenset[Equation]:
        # Everything known is believed (rule KB).
        return self.known(component) | self.believes.get(component, frozenset())

    def derivation(
        self, component: str, tag: str, eq: Equation
    ) -> Derivation | None:
        return self.derivations.get((component, tag, eq))


def _rel_leaf(rel) -> Derivation:
    return Derivation("relation", render_relation(rel))


def _dep_leaf(component: str, entry: DepEntry) -> Derivation:
    return Derivation("dep", render_dep(component, entry))


def _rule_leaf(component: str, rule: DeductionRule) -> Derivation:
    return Derivation("rule", render_rule(component, rule))


def _item_var(item: Item) -> Var:
    return Var(item[0], item[1]) if isinstance(item, tuple) else Var(item)


def _has_conclusion(kind: str, component: str, item: Item) -> str:
    formula = {"all": HasAll, "one": HasOne, "none": HasNone}[kind]
    return render_formula(formula(component, _item_var(item)))


def _ref_item(ref: Var) -> Item:
    return (ref.name, ref.index) if isinstance(ref.index, int) else ref.name


class _HasState:
    """Mutable saturation state for one architecture."""

    def __init__(self, arch: Architecture):
        self.arch = arch
        self.all: dict[str, set[Item]] = {c: set() for c in arch.components}
        self.one: dict[str, set[Item]] = {c: set() for c in arch.components}
        self.none: dict[str, set[Item]] = {c: set() for c in arch.components}
        self.derivations: dict[tuple[str, str, Item], Derivation] = {}

    def add(self, kind: str, component: str, item: Item, deriv: Derivation) -> bool:
        target = getattr(self, kind)[component]
        if item in target:
            return False
        target.add(item)
        self.derivations[(component, kind, item)] = deriv
        return True

    def add_all(self, component: str, item: Item, rule: str, premises) -> bool:
        deriv = Derivation(
            rule, _has_conclusion("all", component, item), tuple(premises)
        )
        if not self.add("all", component, item, deriv):
            return False
        # H7: possession of a whole array projects onto every element.
        if isinstance(item, str) and item in self.arch.arrays:
            for k in range(self.arch.arrays[item]):
                self.add(
                    "all",
                    component,
                    (item, k),
                    Derivation(
                        "H7", _has_conclusion("all", component, (item, k)), (deriv,)
                    ),
                )
        return True

    def freeze(self) -> HasStatus:
        return HasStatus(
            {c: frozenset(s) for c, s in self.all.items()},
            {c: frozenset(s) for c, s in self.one.items()},
            {c: frozenset(s) for c, s in self.none.items()},
            dict(self.derivations),
        )


def _dep_instances(
    entry: DepEntry, arrays: Mapping[str, int]
) -> list[tuple[Item, tuple[Var, ...]]]:
    """Ground (target item, source refs) pairs; index vars run the range."""
    index_var = None
    for ref in (entry.target, *entry.sources):
        if isinstance(ref.index, str):
            index_var = ref.index
    if index_var is None:
        return [(_ref_item(entry.target), entry.sources)]
    spans = {
        arrays[ref.name]
        for ref in (entry.target, *entry.sources)
        if isinstance(ref.index, str)
    }
    out = []
    for k in range(min(spans)):
        ground = lambda ref: Var(ref.name, k) if isinstance(ref.index, str) else ref
        out.append((_ref_item(ground(entry.target)), tuple(map(ground, entry.sources))))
    return out


def saturate_has(arch: Architecture) -> HasStatus:
    """Close the possession sets under H1 through H8 and HNO."""
    state = _HasState(arch)

    for rel in arch.relations:
        if isinstance(rel, Has):
            state.add_all(rel.owner, _ref_item(rel.var), "H1", [_rel_leaf(rel)])
        elif isinstance(rel, Receive):
            for ref in rel.payload:
                state.add_all(rel.receiver, _ref_item(ref), "H2", [_rel_leaf(rel)])
        elif isinstance(rel, Compute):
            target = rel.equation.lhs
            item = target.name if isinstance(target.index, str) else _ref_item(target)
            state.add_all(rel.owner, item, "H3", [_rel_leaf(rel)])
        elif isinstance(rel, Spotcheck):
            state.add(
                "one",
                rel.checker,
                rel.array,
                Derivation(
                    "H4",
                    _has_conclusion("one", rel.checker, rel.array),
                    (_rel_leaf(rel),),
                ),
            )

    # H5: a dep entry fires once every source is possessed; an entry whose
    # pattern fires at every index yields the whole array.
    changed = True
    while changed:
        changed = False
        for component, entries in arch.deps.items():
            owned = state.all[component]
            for entry in entries:
                instances = _dep_instances(entry, arch.arrays)
                fired_targets = []
                for target_item, sources in instances:
                    source_derivs = _source_derivations(
                        sources, owned, state, component
                    )
                    if source_derivs is None:
                        fired_targets = None
                        break
                    fired_targets.append((target_item, source_derivs))
                if fired_targets is None:
                    continue
                whole = (
                    entry.target.name
                    if isinstance(entry.target.index, str)
                    else None
                )
                if whole is not None:
                    premises = [_dep_leaf(component, entry)]
                    seen: list[Derivation] = []
                    for _, derivs in fired_targets:
                        for d in derivs:
                            if d not in seen:
                                seen.append(d)
                    changed |= state.add_all(
                        component, whole, "H5", premises + seen
                    )
                else:
                    for target_item, derivs in fired_targets:
                        changed |= state.add_all(
                            component,
                            target_item,
                            "H5",
                            [_dep_leaf(component, entry)] + list(derivs),
                        )

    # H4 presumes the sample is the checker's only access to the array;
    # any other acquisition channel voids the at-most-one bound.
    for component in arch.components:
        owned = state.all[component]
        for name in sorted(state.one[component]):
            if name in owned or any(
                (name, k) in owned for k in range(arch.arrays[name])
            ):
                state.one[component].discard(name)
                state.derivations.pop((component, "one", name), None)

    # H6 closed world: a family with no derivable member is NONE, wholes
    # projecting onto elements via H8; NONE lifts into ONE via HNO.
    for component in arch.components:
        owned = state.all[component]
        sampled = state.one[component]
        for name in arch.scalars:
            if name not in owned:
                state.add(
                    "none",
                    component,
                    name,
                    Derivation("H6", _has_conclusion("none", component, name)),
                )
        for name, size in arch.arrays.items():
            if name in sampled:
                continue
            elements = [(name, k) for k in range(size)]
            if name not in owned and not any(e in owned for e in elements):
                whole = Derivation("H6", _has_conclusion("none", component, name))
                state.add("none", component, name, whole)
                for e in elements:
                    state.add(
                        "none",
                        component,
                        e,
                        Derivation("H8", _has_conclusion("none", component, e), (whole,)),
                    )
            else:
                for e in elements:
                    if e not in owned:
                        state.add(
                            "none",
                            component,
                            e,
                            Derivation("H6", _has_conclusion("none", component, e)),
                        )
        for item in list(state.none[component]):
            state.add(
                "one",
                component,
                item,
                Derivation(
                    "HNO",
                    _has_conclusion("one", component, item),
                    (state.derivations[(component, "none", item)],),
                ),
            )

    return state.freeze()


def _source_derivations(sources, owned, state: "_HasState", component: str):
    """Derivations proving possession of each ground source, or None."""
    derivs = []
    for ref in sources:
        item = _ref_item(ref)
        if item not in owned:
            return None
        derivs.append(state.derivations[(component, "all", item)])
    return derivs


def _whole_array_access(arch: Architecture, component: str, array: str) -> bool:
    """Whether a relation hands the component the full array."""
    for rel in arch.relations:
        if isinstance(rel, Has) and rel.owner == component:
            refs = [rel.var]
        elif isinstance(rel, Receive) and rel.receiver == component:
            refs = list(rel.payload)
        elif isinstance(rel, Compute) and rel.owner == component:
            refs = [rel.equation.lhs]
        else:
            continue
        for ref in refs:
            if ref.name == array and not isinstance(ref.index, int):
                return True
    return False


def base_knowledge(arch: Architecture) -> KnowledgeBase:
    """Collect the K and B facts the relations grant directly."""
    trust = {(r.truster, r.trustee) for r in arch.relations if isinstance(r, Trust)}
    trust_leaf = {
        (r.truster, r.trustee): _rel_leaf(r)
        for r in arch.relations
        if isinstance(r, Trust)
    }
    knows: dict[str, set[Equation]] = {c: set() for c in arch.components}
    believes: dict[str, set[Equation]] = {c: set() for c in arch.components}
    derivations: dict[tuple[str, str, Equation], Derivation] = {}

    def add(tag: str, component: str, eq: Equation, rule: str, premises) -> None:
        pool = knows if tag == "K" else believes
        if eq in pool[component]:
            return
        pool[component].add(eq)
        formula = Knows if tag == "K" else Believes
        derivations[(component, tag, eq)] = Derivation(
            rule, render_formula(formula(component, (eq,))), tuple(premises)
        )

    for rel in arch.relations:
        if isinstance(rel, Compute):
            add("K", rel.owner, rel.equation, "K1", [_rel_leaf(rel)])
        elif isinstance(rel, Check):
            for eq in rel.equations:
                add("K", rel.owner, eq, "K2", [_rel_leaf(rel)])
        elif isinstance(rel, VerifProof):
            for part in rel.proof.contents:
                if isinstance(part, Equation):
                    add("K", rel.owner, part, "K3", [_rel_leaf(rel)])
                elif isinstance(part, Attest) and (rel.owner, part.author) in trust:
                    for eq in part.equations:
                        add(
                            "K",
                            rel.owner,
                            eq,
                            "K4",
                            [_rel_leaf(rel), trust_leaf[(rel.owner, part.author)]],
                        )
        elif isinstance(rel, VerifAttest):
            if (rel.owner, rel.attest.author) in trust:
                for eq in rel.attest.equations:
                    add(
                        "K",
                        rel.owner,
                        eq,
                        "K5",
                        [_rel_leaf(rel), trust_leaf[(rel.owner, rel.attest.author)]],
                    )
        elif isinstance(rel, Spotcheck):
            # A whole-array channel fills every cell of the checker's
            # copy, so the single-assignment sample can never land.
            if not _whole_array_access(arch, rel.checker, rel.array):
                for eq in rel.equations:
                    add("B", rel.checker, eq, "B", [_rel_leaf(rel)])

    return KnowledgeBase(
        {c: frozenset(s) for c, s in knows.items()},
        {c: frozenset(s) for c, s in believes.items()},
        derivations,
    )


def _match_term(pattern: Term, term: Term, binding: dict) -> dict | None:
    if isinstance(pattern, MetaVar):
        bound = binding.get(pattern.name)
        if bound is None:
            new = dict(binding)
            new[pattern.name] = term
            return new
        return binding if bound == term else None
    if isinstance(pattern, Var) or isinstance(pattern, Const):
        return binding if pattern == term else None
    if isinstance(pattern, App):
        if not isinstance(term, App) or pattern.func != term.func:
            return None
        if len(pattern.args) != len(term.args):
            return None
        for p, t in zip(pattern.args, term.args):
            binding = _match_term(p, t, binding)
            if binding is None:
                return None
        return binding
    if isinstance(pattern, Fold):
        return binding if pattern == term else None
    return None


def _match_equation(pattern: Equation, fact: Equation, binding: dict) -> dict | None:
    if pattern.rel != fact.rel:
        return None
    binding = _match_term(pattern.lhs, fact.lhs, binding)
    if binding is None:
        return None
    return _match_term(pattern.rhs, fact.rhs, binding)


def _subst_term(term: Term, binding: dict) -> Term:
    if isinstance(term, MetaVar):
        return binding[term.name]
    if isinstance(term, App):
        return App(term.func, tuple(_subst_term(a, binding) for a in term.args))
    return term


def _subst_equation(eq: Equation, binding: dict) -> Equation:
    return Equation(_subst_term(eq.lhs, binding), _subst_term(eq.rhs, binding), eq.rel)


def close_deduction(
    kb: KnowledgeBase, arch: Architecture, budget: DeductionBudget | None = None
) -> KnowledgeBase:
    """Forward-chain the architecture's deduction rules over the facts.

    Matching runs over ground instances. A conclusion whose premises all
    come from knowledge is knowledge (K step); one resting on any belief
    is belief (B step). Conclusions past the depth or fact budget are
    dropped and the result is marked exhausted.
    """
    budget = budget or DeductionBudget()
    if not any(arch.rules.values()):
        return kb

    knows = {c: set(kb.known(c)) for c in arch.components}
    believes = {c: set(kb.believes.get(c, frozenset())) for c in arch.components}
    derivations = dict(kb.derivations)
    exhausted = False

    if budget.depth == 0:
        return KnowledgeBase(
            {c: frozenset(s) for c, s in knows.items()},
            {c: frozenset(s) for c, s in believes.items()},
            derivations,
            exhausted=True,
        )

    added = 0
    for component, rules in arch.rules.items():
        if not rules:
            continue
        # Ground pool: (equation, is_known, depth, derivation of the fact).
        pool: dict[Equation, tuple[bool, int, Derivation]] = {}

        def put(eq: Equation, known: bool, depth: int, deriv: Derivation) -> None:
            for ground in expand_equation(eq, arch.arrays):
                if ground in pool and (pool[ground][0] or not known):
                    continue
                pool[ground] = (known, depth, deriv)

        for eq in knows[component]:
            put(eq, True, 0, derivations[(component, "K", eq)])
        for eq in believes[component]:
            put(eq, False, 0, derivations[(component, "B", eq)])

        changed = True
        while changed:
            changed = False
            for rule in rules:
                for facts in itertools.product(
                    list(pool.items()), repeat=len(rule.premises)
                ):
                    binding: dict | None = {}
                    for premise, (fact, _) in zip(rule.premises, facts):
                        binding = _match_equation(premise, fact, binding)
                        if binding is None:
                            break
                    if binding is None:
                        continue
                    conclusion = _subst_equation(rule.conclusion, binding)
                    known = all(meta[0] for _, meta in facts)
                    depth = 1 + max(meta[1] for _, meta in facts)
                    current = pool.get(conclusion)
                    if current is not None and (current[0] or not known):
                        continue
                    if depth > budget.depth or added >= budget.max_facts:
                        exhausted = True
                        continue
                    step = K_STEP if known else B_STEP
                    formula = Knows if known else Believes
                    deriv = Derivation(
                        step,
                        render_formula(formula(component, (conclusion,))),
                        (_rule_leaf(component, rule),)
                        + tuple(meta[2] for _, meta in facts),
                    )
                    pool[conclusion] = (known, depth, deriv)
                    tag = "K" if known else "B"
                    (knows if known else believes)[component].add(conclusion)
                    derivations[(component, tag, conclusion)] = deriv
                    added += 1
                    changed = True

    return KnowledgeBase(
        {c: frozenset(s) for c, s in knows.items()},
        {c: frozenset(s) for c, s in believes.items()},
        derivations,
        exhausted=exhausted,
    )


def _trust_hint(arch: Architecture, component: str, eq: Equation) -> str | None:
    """Name the trust relation that would unlock the equation, if any."""
    trust = {(r.truster, r.trustee) for r in arch.relations if isinstance(r, Trust)}
    instances = set(expand_equation(eq, arch.arrays))

    def covers(stated: tuple[Equation, ...]) -> bool:
        covered: set[Equation] = set()
        for s in stated:
            covered.update(expand_equation(s, arch.arrays))
        return instances <= covered

    for rel in arch.relations:
        if isinstance(rel, VerifAttest) and rel.owner == component:
            author = rel.attest.author
            if (component, author) not in trust and covers(rel.attest.equations):
                return f"requires trust {component} {author}"
        elif isinstance(rel, VerifProof) and rel.owner == component:
            for part in rel.proof.contents:
                if not isinstance(part, Attest):
                    continue
                author = part.author
                if (component, author) not in trust and covers(part.equations):
                    return f"requires trust {component} {author}"
    return None


def _conjunct_derivation(
    component: str,
    eq: Equation,
    suppliers: list[tuple[str, Derivation]],
    want_knowledge: bool,
) -> Derivation:
    """Assemble one conjunct's derivation from the facts that cover it."""
    parts = []
    for tag, deriv in suppliers:
        if not want_knowledge and tag == "K":
            deriv = Derivation(
                "KB", render_formula(Believes(component, (eq,))), (deriv,)
            )
        parts.append(deriv)
    if len(parts) == 1:
        return parts[0]
    formula = Knows if want_knowledge else Believes
    return Derivation(
        K_AND if want_knowledge else B_AND,
        render_formula(formula(component, (eq,))),
        tuple(parts),
    )


def prove(
    arch: Architecture, goal: Formula, budget: DeductionBudget | None = None
) -> Derivation | NotProvable:
    """Decide a goal formula, returning a derivation or the failure reason."""
    if isinstance(goal, And):
        left = prove(arch, goal.left, budget)
        if isinstance(left, NotProvable):
            return left
        right = prove(arch, goal.right, budget)
        if isinstance(right, NotProvable):
            return right
        return Derivation(I_AND, render_formula(goal), (left, right))

    if isinstance(goal, (HasAll, HasOne, HasNone)):
        kind = {HasAll: "all", HasOne: "one", HasNone: "none"}[type(goal)]
        status = saturate_has(arch)
        deriv = status.derivation(goal.component, kind, _ref_item(goal.var))
        if deriv is not None:
            return deriv
        return NotProvable(f"no rule derives {render_formula(goal)}")

    if isinstance(goal, (Knows, Believes)):
        want_knowledge = isinstance(goal, Knows)
        component = goal.component
        kb = close_deduction(base_knowledge(arch), arch, budget)

        pool: dict[Equation, tuple[str, Derivation]] = {}
        for eq in kb.known(component):
            deriv = kb.derivation(component, "K", eq)
            for ground in expand_equation(eq, arch.arrays):
                pool.setdefault(ground, ("K", deriv))
        if not want_knowledge:
            for eq in kb.believes.get(component, frozenset()):
                deriv = kb.derivation(component, "B", eq)
                for ground in expand_equation(eq, arch.arrays):
                    pool.setdefault(ground, ("B", deriv))

        conjuncts: list[Derivation] = []
        for eq in goal.equations:
            instances = expand_equation(eq, arch.arrays)
            if any(g not in pool for g in instances):
                formula = Knows if want_knowledge else Believes
                reason = (
                    f"{render_formula(formula(component, (eq,)))} is not derivable"
                )
                hint = _trust_hint(arch, component, eq)
                if hint is not None:
                    reason += f" ({hint})"
                if kb.exhausted:
                    reason += "; deduction stopped at the budget"
                    return NotProvable(reason, conjunct=eq, budget_exhausted=True)
                return NotProvable(reason, conjunct=eq)
            suppliers: list[tuple[str, Derivation]] = []
            for g in instances:
                entry = pool[g]
                if entry not in suppliers:
                    suppliers.append(entry)
            conjuncts.append(
                _conjunct_derivation(component, eq, suppliers, want_knowledge)
            )

        if len(conjuncts) == 1:
            return conjuncts[0]
        return Derivation(
            K_AND if want_knowledge else B_AND,
            render_formula(goal),
            tuple(conjuncts),
        )

    raise TypeError(f"not a goal formula: {goal!r}")
