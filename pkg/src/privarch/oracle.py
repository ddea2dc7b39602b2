"""Bounded-exhaustive enumeration of reachable states and goal checking.

Breadth-first search over every admissible trace within explicit bounds
yields the reachable global states with witness traces and the extension
relation between them.  Goal formulas are evaluated against that space:
possession goals scan the states, knowledge and belief goals quantify
over the states a component can still bring to an error-free completion.
Entailment reuses the prover's deduction engine and decides implication
by enumerating domain valuations.  A crosscheck runs the symbolic prover
next to the semantic verdicts and classifies every disagreement.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import islice, product
from typing import Callable, Iterable

from .core import (
    And,
    Architecture,
    Attest,
    Believes,
    Check,
    Compute,
    Equation,
    Formula,
    Has,
    HasAll,
    HasNone,
    HasOne,
    Interpretation,
    Knows,
    Receive,
    Spotcheck,
    Var,
    VerifAttest,
    VerifProof,
    equation_index_vars,
    equation_reads,
    eval_eq,
    expand_equation,
    instantiate_index,
    render_equation,
    render_formula,
    term_reads,
)
from .dsl import Bundle
from .prover import (
    Derivation,
    DeductionBudget,
    KnowledgeBase,
    NotProvable,
    close_deduction,
    prove,
)
from .semantics import (
    ComputeE,
    CheckE,
    Event,
    GlobalState,
    HasE,
    ProofInstance,
    ReceiveE,
    SpotcheckE,
    VerifAttestE,
    VerifProofE,
    event_owner,
    event_to_json,
    initial_state,
    licensed_derivations,
    step,
)
from .semantics import _Layout, _read_slots, _slots_of, _uniform_instantiations

VERDICTS = ("holds", "fails", "holds-within-bounds")


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnumBounds:
    """Caps on the enumerated trace space.

    ``max_adversarial`` budgets dep-licensed computations per trace; it
    describes the modeled adversary rather than a truncation.
    ``max_events`` caps trace length and ``payload_cap`` the distinct
    value combinations tried per receive; when either bites, the result
    is marked truncated and positive verdicts weaken to
    ``holds-within-bounds``.
    """

    max_adversarial: int = 1
    max_events: int | None = None
    payload_cap: int | None = None

    def __post_init__(self) -> None:
        if self.max_adversarial < 0:
            raise ValueError("max_adversarial must be at least 0")
        if self.max_events is not None and self.max_events < 1:
            raise ValueError("max_events must be at least 1")
        if self.payload_cap is not None and self.payload_cap < 1:
            raise ValueError("payload_cap must be at least 1")


def default_bounds(bundle: Bundle) -> EnumBounds:
    """Bounds for a parsed bundle, honoring the model's adversary cap."""
    cap = None if bundle.model is None else bundle.model.max_adversarial
    return EnumBounds(max_adversarial=1 if cap is None else cap)


def saturating_bounds(arch: Architecture) -> EnumBounds:
    """Bounds whose adversary budget cannot clip a derivation chain.

    Every licensed derivation writes one slot at most once, so their
    total count caps the adversarial computes any run can contain.
    Soundness comparisons against the possession rules need this budget;
    the rule closure assumes derivations compose without limit.
    """
    total = sum(len(licensed_derivations(c, arch)) for c in arch.components)
    return EnumBounds(max_adversarial=max(total, 1))


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Node:
    """One search point: global state plus the trace facts it carries."""

    state: GlobalState
    mail: frozenset  # (component, statement instance) pairs received
    sampled: frozenset  # (checker, source, array) spotcheck keys used
    adv_used: int


@dataclass
class Enumeration:
    """Reachable states, witness traces, and the extension relation."""

    architecture: Architecture
    interp: Interpretation
    bounds: EnumBounds
    states: tuple[GlobalState, ...]
    truncated: bool
    _nodes: list[_Node] = field(repr=False)
    _succ: list[list[tuple[int, str, bool, Event]]] = field(repr=False)
    _origin: list[tuple[int, Event] | None] = field(repr=False)
    _depth: list[int] = field(repr=False)
    _by_state: dict = field(repr=False)

    def witness_trace(self, state: GlobalState) -> tuple[Event, ...]:
        """The first trace the search found that ends in the state."""
        ids = self._by_state.get(state)
        if not ids:
            raise KeyError("state was not enumerated")
        events: list[Event] = []
        nid = ids[0]
        while self._origin[nid] is not None:
            nid, e = self._origin[nid]
            events.append(e)
        return tuple(reversed(events))


def _value_space(ref: Var, arch: Architecture, domain: tuple[int, ...]) -> list:
    if arch.is_array(ref.name) and ref.index is None:
        return [tuple(c) for c in product(domain, repeat=arch.range_of(ref.name))]
    return list(domain)


def enumerate_states(
    arch: Architecture,
    interp: Interpretation,
    bounds: EnumBounds | None = None,
) -> Enumeration:
    """Breadth-first closure of the admissible traces within bounds.

    Componentwise effects only grow along a trace, so once each write is
    single-assignment and the adversary budget caps extra computes the
    node space is finite; revisiting a node never adds states.
    """
    bounds = bounds or EnumBounds()
    layout = _Layout(arch)
    domain = tuple(range(interp.lo, interp.hi + 1))

    # Static move tables, declaration order for determinism.
    has_moves = []
    compute_moves = []
    check_moves = []
    receive_moves = []
    verif_moves = []
    spot_moves = []
    for r in arch.relations:
        if isinstance(r, Has):
            has_moves.append(
                (r.owner, r.var, _slots_of(r.var, arch), _value_space(r.var, arch, domain))
            )
        elif isinstance(r, Compute):
            for eq in expand_equation(r.equation, arch.arrays):
                lhs = eq.lhs
                if not isinstance(lhs, Var) or lhs.index is None and arch.is_array(lhs.name):
                    continue
                compute_moves.append(
                    (
                        r.owner,
                        eq,
                        frozenset(_read_slots(term_reads(eq.rhs), arch)),
                        (lhs.name, lhs.index),
                    )
                )
        elif isinstance(r, Check):
            for block in _uniform_instantiations(r.equations, arch):
                reads = set()
                for q in block:
                    reads |= equation_reads(q)
                check_moves.append((r.owner, block, frozenset(_read_slots(reads, arch))))
        elif isinstance(r, Receive):
            spaces = [_value_space(ref, arch, domain) for ref in r.payload]
            total = 1
            for s in spaces:
                total *= len(s)
            combos = list(islice(product(*spaces), bounds.payload_cap))
            capped = bounds.payload_cap is not None and total > bounds.payload_cap
            pslots = frozenset(
                s for ref in r.payload for s in _slots_of(ref, arch)
            )
            plan = []
            for stmt in r.statements:
                if isinstance(stmt, Attest):
                    plan.append(("attest", stmt, ()))
                else:
                    names = sorted(
                        {
                            v.name
                            for q in stmt.contents
                            if isinstance(q, Equation)
                            for v in equation_reads(q)
                        }
                    )
                    plan.append(("proof", stmt, tuple(names)))
            receive_moves.append((r, combos, capped, pslots, tuple(plan)))
        elif isinstance(r, VerifProof):
            verif_moves.append(("proof", r.owner, r.proof))
        elif isinstance(r, VerifAttest):
            verif_moves.append(("attest", r.owner, r.attest))
        elif isinstance(r, Spotcheck):
            per_k = []
            for k in range(arch.arrays.get(r.array, 0)):
                reads = set()
                for eq in r.equations:
                    for iv in sorted(equation_index_vars(eq)):
                        eq = instantiate_index(eq, iv, k, arch.arrays)
                    reads |= equation_reads(eq)
                slots = _read_slots(reads, arch)
                slots.discard((r.array, k))
                per_k.append((k, frozenset(slots)))
            spot_moves.append((r, per_k))

    adv_moves = []
    honest = {(o, eq) for o, eq, _, _ in compute_moves}
    for c in arch.components:
        for eq in licensed_derivations(c, arch):
            if (c, eq) in honest:
                continue
            adv_moves.append(
                (
                    c,
                    eq,
                    frozenset(_read_slots(term_reads(eq.rhs), arch)),
                    (eq.lhs.name, eq.lhs.index),
                )
            )

    def defined(cs) -> frozenset:
        if cs.error:
            return frozenset()
        return frozenset(
            layout.slots[i] for i, v in enumerate(cs.values) if v is not None
        )

    def moves(node: _Node):
        """Yield (event, adversarial, mail to add, sample key, capped)."""
        state = node.state
        cstates = {c: state.component(c) for c in arch.components}
        defs = {c: defined(cs) for c, cs in cstates.items()}
        live = {c: not cs.error for c, cs in cstates.items()}

        for owner, var, slots, values in has_moves:
            if not live[owner] or any(s in defs[owner] for s in slots):
                continue
            for v in values:
                yield HasE(owner, var, v), False, frozenset(), None, False

        for owner, eq, reads, write in compute_moves:
            if live[owner] and write not in defs[owner] and reads <= defs[owner]:
                yield ComputeE(owner, eq), False, frozenset(), None, False

        for owner, block, reads in check_moves:
            if not live[owner] or not reads <= defs[owner]:
                continue
            if set(block) <= cstates[owner].pk:
                continue
            yield CheckE(owner, block), False, frozenset(), None, False

        for rel, combos, capped, pslots, plan in receive_moves:
            recv = rel.receiver
            if not live[recv] or any(s in defs[recv] for s in pslots):
                continue
            stmts = []
            sendable = True
            for kind, stmt, names in plan:
                if kind == "attest":
                    stmts.append(stmt)
                    continue
                sender_cs = cstates[rel.sender]
                if sender_cs.error:
                    sendable = False
                    break
                view = layout.mapping(sender_cs.values)
                snapshot = tuple((Var(n), view[n]) for n in names)
                stmts.append(ProofInstance(stmt, snapshot))
            if not sendable:
                continue
            mail_add = frozenset((recv, s) for s in stmts)
            for combo in combos:
                payload = tuple(zip(rel.payload, combo))
                yield (
                    ReceiveE(recv, rel.sender, tuple(stmts), payload),
                    False,
                    mail_add,
                    None,
                    capped,
                )

        for kind, owner, declared in verif_moves:
            if not live[owner]:
                continue
            if kind == "attest":
                if (owner, declared) in node.mail:
                    yield VerifAttestE(owner, declared), False, frozenset(), None, False
            else:
                matches = sorted(
                    (
                        s
                        for c, s in node.mail
                        if c == owner
                        and isinstance(s, ProofInstance)
                        and s.proof == declared
                    ),
                    key=repr,
                )
                for inst in matches:
                    yield VerifProofE(owner, inst), False, frozenset(), None, False

        for rel, per_k in spot_moves:
            key = (rel.checker, rel.source, rel.array)
            if not live[rel.checker] or key in node.sampled:
                continue
            for k, reads in per_k:
                slot = (rel.array, k)
                if slot not in defs[rel.source] or slot in defs[rel.checker]:
                    continue
                if not reads <= defs[rel.checker]:
                    continue
                value = cstates[rel.source].values[layout.pos[slot]]
                yield (
                    SpotcheckE(rel.checker, rel.source, rel.array, k, value, rel.equations),
                    False,
                    frozenset(),
                    key,
                    False,
                )

        if node.adv_used < bounds.max_adversarial:
            for owner, eq, reads, write in adv_moves:
                if live[owner] and write not in defs[owner] and reads <= defs[owner]:
                    yield ComputeE(owner, eq), True, frozenset(), None, False

    root = _Node(initial_state(arch), frozenset(), frozenset(), 0)
    nodes = [root]
    index = {root: 0}
    succ: list[list[tuple[int, str, bool, Event]]] = [[]]
    origin: list[tuple[int, Event] | None] = [None]
    depth = [0]
    truncated = False
    queue = deque([0])

    while queue:
        nid = queue.popleft()
        node = nodes[nid]
        pending = list(moves(node))
        if bounds.max_events is not None and depth[nid] >= bounds.max_events:
            if pending:
                truncated = True
            continue
        for event, adv, mail_add, sample_key, capped in pending:
            child = _Node(
                step(event, node.state, arch, interp),
                node.mail | mail_add,
                node.sampled | ({sample_key} if sample_key else set()),
                node.adv_used + (1 if adv else 0),
            )
            if child == node:
                continue
            if capped:
                truncated = True
            cid = index.get(child)
            if cid is None:
                cid = len(nodes)
                nodes.append(child)
                index[child] = cid
                succ.append([])
                origin.append((nid, event))
                depth.append(depth[nid] + 1)
                queue.append(cid)
            key = (cid, event_owner(event), adv)
            if all(e[:3] != key for e in succ[nid]):
                succ[nid].append((*key, event))

    states: list[GlobalState] = []
    by_state: dict[GlobalState, list[int]] = {}
    for nid, node in enumerate(nodes):
        ids = by_state.setdefault(node.state, [])
        if not ids:
            states.append(node.state)
        ids.append(nid)

    return Enumeration(
        architecture=arch,
        interp=interp,
        bounds=bounds,
        states=tuple(states),
        truncated=truncated,
        _nodes=nodes,
        _succ=succ,
        _origin=origin,
        _depth=depth,
        _by_state=by_state,
    )


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemanticVerdict:
    """Outcome of checking one formula against the enumerated states."""

    formula: Formula
    verdict: str
    witness_state: GlobalState | None = None
    witness_trace: tuple[Event, ...] | None = None
    detail: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict '{self.verdict}'")
        if self.verdict == "fails" and (
            self.witness_state is None or self.witness_trace is None
        ):
            raise ValueError("a failing verdict needs a witness")

    def to_json(self) -> dict:
        return {
            "formula": render_formula(self.formula),
            "verdict": self.verdict,
            "witness": None
            if self.witness_trace is None
            else [event_to_json(e) for e in self.witness_trace],
            "detail": self.detail,
        }


def holds(
    arch: Architecture,
    formula: Formula,
    interp: Interpretation,
    bounds: EnumBounds | None = None,
    budget: DeductionBudget | None = None,
    enumeration: Enumeration | None = None,
) -> SemanticVerdict:
    """Check one goal formula against every reachable state.

    Possession goals scan the states directly.  Knowledge and belief
    goals ask that every state the component can still bring to an
    error-free completion also extends to one whose closed facts entail
    the goal; closure runs the prover's deduction engine at the same
    budget and entailment enumerates all domain valuations.
    """
    enum = enumeration or enumerate_states(arch, interp, bounds)
    return _verdict(arch, formula, interp, enum, budget or DeductionBudget())


def _qualified(enum: Enumeration, formula: Formula, detail: str = "") -> SemanticVerdict:
    word = "holds-within-bounds" if enum.truncated else "holds"
    return SemanticVerdict(formula, word, detail=detail)


def _verdict(arch, formula, interp, enum, budget) -> SemanticVerdict:
    if isinstance(formula, And):
        left = _verdict(arch, formula.left, interp, enum, budget)
        if left.verdict == "fails":
            return SemanticVerdict(
                formula, "fails", left.witness_state, left.witness_trace, left.detail
            )
        right = _verdict(arch, formula.right, interp, enum, budget)
        if right.verdict == "fails":
            return SemanticVerdict(
                formula, "fails", right.witness_state, right.witness_trace, right.detail
            )
        if "holds-within-bounds" in (left.verdict, right.verdict):
            return SemanticVerdict(formula, "holds-within-bounds")
        return SemanticVerdict(formula, "holds")
    if isinstance(formula, (HasAll, HasNone, HasOne)):
        return _has_verdict(arch, formula, enum)
    if isinstance(formula, (Knows, Believes)):
        return _kb_verdict(arch, formula, interp, enum, budget)
    raise TypeError(f"cannot evaluate {formula!r}")


def _has_verdict(arch, formula, enum) -> SemanticVerdict:
    layout = _Layout(arch)
    comp = formula.component
    slots = _slots_of(formula.var, arch)

    def coverage(state):
        cs = state.component(comp)
        if cs.error:
            return (None,) * len(slots)
        return tuple(cs.values[layout.pos[s]] for s in slots)

    if isinstance(formula, HasAll):
        best, best_n = enum.states[0], -1
        for s in enum.states:
            n = sum(v is not None for v in coverage(s))
            if n == len(slots):
                return _qualified(enum, formula)
            if n > best_n:
                best, best_n = s, n
        return SemanticVerdict(
            formula,
            "fails",
            best,
            enum.witness_trace(best),
            f"no enumerated state gives '{comp}' every element",
        )
    if isinstance(formula, HasNone):
        for s in enum.states:
            if any(v is not None for v in coverage(s)):
                return SemanticVerdict(
                    formula,
                    "fails",
                    s,
                    enum.witness_trace(s),
                    f"a reachable state gives '{comp}' an element",
                )
        return _qualified(enum, formula)
    for s in enum.states:
        if sum(v is not None for v in coverage(s)) > 1:
            return SemanticVerdict(
                formula,
                "fails",
                s,
                enum.witness_trace(s),
                f"a reachable state gives '{comp}' two elements",
            )
    return _qualified(enum, formula)


def _kb_verdict(arch, formula, interp, enum, budget) -> SemanticVerdict:
    comp = formula.component
    believe = isinstance(formula, Believes)
    grounds: list[Equation] = []
    for eq in formula.equations:
        for g in expand_equation(eq, arch.arrays):
            if g not in grounds:
                grounds.append(g)

    nodes, succ = enum._nodes, enum._succ
    live = [not n.state.component(comp).error for n in nodes]
    memo: dict = {}

    def entails(nid: int) -> bool:
        cs = nodes[nid].state.component(comp)
        pk = frozenset(f for f in cs.pk if isinstance(f, Equation))
        pb = frozenset(cs.pb) if believe else None
        key = (pk, pb)
        if key not in memo:
            memo[key] = _closure_entails(arch, comp, pk, pb, grounds, interp, budget)
        return memo[key]

    # Runs where the component itself fires a licensed derivation model
    # what others fear it can compute, not a deviation from its own
    # protocol; they are pruned before judging what it comes to know.
    count = len(nodes)
    kept: list[list[tuple[int, str, Event]]] = [
        [(cid, o, e) for cid, o, adv, e in succ[i] if not (adv and o == comp)]
        for i in range(count)
    ]
    honest = [False] * count
    honest[0] = True
    stack = [0]
    while stack:
        i = stack.pop()
        for cid, _, _ in kept[i]:
            if not honest[cid]:
                honest[cid] = True
                stack.append(cid)

    complete = [
        honest[i] and live[i] and all(o != comp for _, o, _ in kept[i])
        for i in range(count)
    ]
    entailing = [honest[i] and live[i] and entails(i) for i in range(count)]
    pred: list[list[int]] = [[] for _ in range(count)]
    for i in range(count):
        if honest[i]:
            for cid, _, _ in kept[i]:
                pred[cid].append(i)
    reach_complete = _can_reach(complete, pred)
    reach_entail = _can_reach(entailing, pred)

    def witness_for(states: list[GlobalState]) -> SemanticVerdict:
        best = None
        for s in states:
            for i in enum._by_state[s]:
                if honest[i]:
                    rank = (complete[i], enum._depth[i], -i)
                    if best is None or rank > best[0]:
                        best = (rank, i, s)
        _, nid, state = best
        detail = (
            f"a reachable state leaves '{comp}' unable to come to {word} the goal"
            if failing
            else f"'{comp}' cannot reach an error-free completion"
        )
        return SemanticVerdict(
            formula, "fails", state, _honest_path(nid, kept), detail
        )

    word = "believe" if believe else "know"
    eligible = False
    failing: list[GlobalState] = []
    for state in enum.states:
        if state.component(comp).error:
            continue
        ids = [i for i in enum._by_state[state] if honest[i]]
        if not ids or not any(reach_complete[i] for i in ids):
            continue
        eligible = True
        if not any(reach_entail[i] for i in ids):
            failing.append(state)

    if not eligible:
        candidates = [
            s
            for s in enum.states
            if not s.component(comp).error
            and any(honest[i] for i in enum._by_state[s])
        ]
        return witness_for(candidates)
    if failing:
        return witness_for(failing)
    return _qualified(enum, formula)


def _can_reach(seed: list[bool], pred: list[list[int]]) -> list[bool]:
    out = list(seed)
    stack = [i for i, hit in enumerate(seed) if hit]
    while stack:
        i = stack.pop()
        for p in pred[i]:
            if not out[p]:
                out[p] = True
                stack.append(p)
    return out


def _honest_path(target: int, kept: list[list[tuple[int, str, Event]]]):
    """Events of a shortest root-to-target walk over the kept edges."""
    back: dict[int, tuple[int, Event] | None] = {0: None}
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        if nid == target:
            break
        for cid, _, e in kept[nid]:
            if cid not in back:
                back[cid] = (nid, e)
                queue.append(cid)
    events: list[Event] = []
    nid = target
    while back[nid] is not None:
        nid, e = back[nid]
        events.append(e)
    return tuple(reversed(events))


def _closure_entails(arch, comp, pk, pb, grounds, interp, budget) -> bool:
    facts = set(pk) | set(pb or ())
    if arch.rules_of(comp):
        derivs = {
            (comp, "K", eq): Derivation("state", render_equation(eq)) for eq in pk
        }
        for eq in pb or ():
            derivs.setdefault((comp, "B", eq), Derivation("state", render_equation(eq)))
        kb = KnowledgeBase({comp: pk}, {comp: frozenset(pb or ())}, derivs)
        closed = close_deduction(kb, arch, budget)
        facts = set(closed.believed(comp) if pb is not None else closed.known(comp))
    return _implies(facts, grounds, arch, interp)


def _implies(facts, goals, arch, interp) -> bool:
    """Whether every domain valuation meeting the facts meets the goals."""
    pending = [g for g in goals if g not in facts]
    if not pending:
        return True
    fact_list = sorted(facts, key=render_equation)
    slots: set = set()
    for eq in fact_list + pending:
        slots |= _read_slots(equation_reads(eq), arch)
    order = sorted(slots, key=lambda s: (s[0], -1 if s[1] is None else s[1]))
    pos = {s: i for i, s in enumerate(order)}

    def view(eq, assign):
        m: dict = {}
        for v in equation_reads(eq):
            if arch.is_array(v.name):
                m[v.name] = tuple(
                    assign.get((v.name, k)) for k in range(arch.range_of(v.name))
                )
            else:
                m[v.name] = assign.get((v.name, None))
        return eval_eq(eq, m, interp)

    triggers: list[list[Equation]] = [[] for _ in order]
    for eq in fact_list:
        ss = _read_slots(equation_reads(eq), arch)
        if not ss:
            if view(eq, {}) is not True:
                return True  # no valuation satisfies the facts
            continue
        triggers[max(pos[s] for s in ss)].append(eq)

    domain = tuple(range(interp.lo, interp.hi + 1))
    assign: dict = {}

    def counterexample(i: int) -> bool:
        if i == len(order):
            return not all(view(g, assign) is True for g in pending)
        for v in domain:
            assign[order[i]] = v
            if all(view(eq, assign) is True for eq in triggers[i]):
                if counterexample(i + 1):
                    return True
        del assign[order[i]]
        return False

    return not counterexample(0)


# ---------------------------------------------------------------------------
# Crosschecking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrosscheckEntry:
    """One goal's prover verdict next to its semantic verdict."""

    formula: Formula
    proved: bool
    verdict: str
    classification: str
    reason: str = ""
    semantic: SemanticVerdict | None = None


@dataclass(frozen=True)
class CrosscheckReport:
    """Agreement matrix between the prover and the enumeration."""

    entries: tuple[CrosscheckEntry, ...]

    @property
    def ok(self) -> bool:
        return all(e.classification != "soundness-discrepancy" for e in self.entries)

    @property
    def gaps(self) -> tuple[CrosscheckEntry, ...]:
        return tuple(e for e in self.entries if e.classification == "completeness-gap")

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "goals": [
                {
                    "formula": render_formula(e.formula),
                    "proved": e.proved,
                    "reason": e.reason or None,
                    "verdict": e.verdict,
                    "classification": e.classification,
                    "witness": None
                    if e.semantic is None or e.semantic.witness_trace is None
                    else [event_to_json(ev) for ev in e.semantic.witness_trace],
                }
                for e in self.entries
            ],
        }


def crosscheck(
    arch: Architecture,
    goals: Iterable[Formula],
    interp: Interpretation,
    bounds: EnumBounds | None = None,
    budget: DeductionBudget | None = None,
    prove_fn: Callable | None = None,
) -> CrosscheckReport:
    """Prove each goal and check it semantically, classifying agreement.

    A proved goal that fails semantically is a soundness discrepancy.  An
    unprovable goal that holds across an exhaustive enumeration is a
    completeness gap of the rule table under the modeled adversary; under
    a truncated enumeration the pair stays unresolved instead.
    """
    run = prove_fn or prove
    budget = budget or DeductionBudget()
    enum = enumerate_states(arch, interp, bounds)
    entries = []
    for goal in goals:
        result = run(arch, goal, budget)
        proved = isinstance(result, Derivation)
        semantic = holds(arch, goal, interp, budget=budget, enumeration=enum)
        if proved and semantic.verdict == "fails":
            label = "soundness-discrepancy"
        elif proved and semantic.verdict == "holds":
            label = "agree"
        elif proved:
            label = "agree-within-bounds"
        elif semantic.verdict == "fails":
            label = "agree"
        elif semantic.verdict == "holds":
            label = "completeness-gap"
        else:
            label = "unresolved-within-bounds"
        reason = "" if proved else result.reason
        entries.append(
            CrosscheckEntry(goal, proved, semantic.verdict, label, reason, semantic)
        )
    return CrosscheckReport(tuple(entries))
