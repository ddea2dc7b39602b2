"""Execution traces and their small-step semantics.

An architecture describes what components may do; a trace records what they
actually did, as a sequence of concrete events carrying values.  This module
defines the event types, the per-component runtime state, and three
operations over them:

* :func:`compatible_event` decides whether one event is an instance of one
  architecture relation (index variables instantiated, values filled in).
* :func:`check_trace` validates a whole trace against an architecture and
  reports every violation: incompatible events, unlicensed computations,
  repeated spotchecks, double assignment, events on failed components, and
  uses of variables or statements before they exist.
* :func:`step` / :func:`run_trace` execute events, updating variable states
  and the per-component knowledge (``pk``) and belief (``pb``) sets, with a
  failed check or proof collapsing the component to the error state.

Traces serialize to JSON lines (:func:`trace_to_jsonl`) and parse back
bit-exactly (:func:`trace_from_jsonl`).

Conventions baked into the semantics:

* A component computing outside its declared relations is allowed exactly
  the derivations its ``dep`` entries license, written in the canonical form
  ``target = derive(source, ...)`` with array sources spelled element by
  element.
* A proof travels with the author's variable snapshot for everything its
  equations read.  Verification evaluates each equation over the receiver's
  own values where defined, falling back to the snapshot, so a tampered
  payload contradicts the snapshot and verification fails.
* Verifying an attestation from a trusted author adds the attested
  equations to ``pk``; without trust the event does nothing (no error).
* A successful spotcheck of a sampled element adds every instance of the
  checked equations to ``pb``: the sample is evidence for the general
  statement, not just the sampled index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Union

from .core import (
    DERIVE,
    App,
    Architecture,
    Attest,
    Check,
    Compute,
    Const,
    Equation,
    EvalError,
    Fold,
    Has,
    Interpretation,
    Proof,
    Receive,
    Relation,
    Spotcheck,
    Term,
    Trust,
    Value,
    Var,
    VarState,
    VerifAttest,
    VerifProof,
    equation_index_vars,
    equation_reads,
    eval_eq,
    eval_term,
    expand_equation,
    instantiate_index,
    render_equation,
    render_var,
    term_reads,
)

__all__ = [
    "ProofInstance",
    "HasE",
    "ReceiveE",
    "ComputeE",
    "CheckE",
    "VerifProofE",
    "VerifAttestE",
    "SpotcheckE",
    "Event",
    "event_owner",
    "ComponentState",
    "ERROR_STATE",
    "GlobalState",
    "initial_state",
    "variable_state",
    "compatible_event",
    "TraceViolation",
    "check_trace",
    "step",
    "run_trace",
    "licensed_derivations",
    "event_to_json",
    "event_from_json",
    "trace_to_jsonl",
    "trace_from_jsonl",
]


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------

# A scalar carries an int, a whole array a tuple of ints.
EventValue = Union[int, tuple[int, ...]]


@dataclass(frozen=True)
class ProofInstance:
    """A proof statement together with the author's values at send time.

    ``snapshot`` binds every variable the proof's equations read to the
    value it had on the author's side, pairing whole arrays with tuples.
    """

    proof: Proof
    snapshot: tuple[tuple[Var, EventValue], ...]


StatementInstance = Union[Attest, ProofInstance]


@dataclass(frozen=True)
class HasE:
    """``owner`` acquires ``var`` (a scalar, an element, or a whole array)."""

    owner: str
    var: Var
    value: EventValue


@dataclass(frozen=True)
class ReceiveE:
    """``receiver`` gets statements and payload values from ``sender``.

    Payload values are whatever arrived, not necessarily what the sender
    holds; tampering in transit is modelled by free payload values.
    """

    receiver: str
    sender: str
    statements: tuple[StatementInstance, ...]
    payload: tuple[tuple[Var, EventValue], ...]


@dataclass(frozen=True)
class ComputeE:
    """``owner`` evaluates the right side and assigns the left (ground)."""

    owner: str
    equation: Equation


@dataclass(frozen=True)
class CheckE:
    """``owner`` tests ground equations; any failure is fatal."""

    owner: str
    equations: tuple[Equation, ...]


@dataclass(frozen=True)
class VerifProofE:
    owner: str
    proof: ProofInstance


@dataclass(frozen=True)
class VerifAttestE:
    owner: str
    attest: Attest


@dataclass(frozen=True)
class SpotcheckE:
    """``checker`` samples ``array[index]`` from ``source`` and tests it.

    ``value`` is the sampled element, ``equations`` the declared equation
    patterns; the sampled index replaces their index variable.
    """

    checker: str
    source: str
    array: str
    index: int
    value: int
    equations: tuple[Equation, ...]


Event = Union[HasE, ReceiveE, ComputeE, CheckE, VerifProofE, VerifAttestE, SpotcheckE]


def event_owner(e: Event) -> str:
    """The single component whose state the event touches."""
    if isinstance(e, ReceiveE):
        return e.receiver
    if isinstance(e, SpotcheckE):
        return e.checker
    return e.owner


# ---------------------------------------------------------------------------
# Runtime state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentState:
    """One component's variables plus its knowledge and belief sets.

    ``values`` is a flat tuple over the architecture's variable slots (see
    ``_Layout``); ``pk`` holds ground equations and trust facts, ``pb``
    ground equations.  A failed component is the canonical
    :data:`ERROR_STATE` and never changes again.
    """

    values: tuple[Value, ...]
    pk: frozenset
    pb: frozenset
    error: bool = False


ERROR_STATE = ComponentState((), frozenset(), frozenset(), error=True)


@dataclass(frozen=True)
class GlobalState:
    """Per-component states, keyed by component name."""

    components: tuple[tuple[str, ComponentState], ...]

    def component(self, name: str) -> ComponentState:
        for n, cs in self.components:
            if n == name:
                return cs
        raise KeyError(name)

    def _with(self, name: str, cs: ComponentState) -> "GlobalState":
        return GlobalState(
            tuple((n, cs if n == name else old) for n, old in self.components)
        )


Slot = tuple[str, Union[int, None]]


class _Layout:
    """Fixed slot order for a component's variable state.

    Scalars occupy one slot each, arrays one slot per element, in
    declaration order; the flat tuple representation keeps states hashable.
    """

    def __init__(self, arch: Architecture):
        slots: list[Slot] = [(s, None) for s in arch.scalars]
        for a, n in arch.arrays.items():
            slots.extend((a, k) for k in range(n))
        self.arch = arch
        self.slots: tuple[Slot, ...] = tuple(slots)
        self.pos: dict[Slot, int] = {s: i for i, s in enumerate(slots)}

    def empty(self) -> tuple[Value, ...]:
        return (None,) * len(self.slots)

    def mapping(self, values: tuple[Value, ...]) -> dict:
        """The :data:`VarState` view used by the evaluator."""
        m: dict = {s: values[self.pos[(s, None)]] for s in self.arch.scalars}
        for a, n in self.arch.arrays.items():
            m[a] = tuple(values[self.pos[(a, k)]] for k in range(n))
        return m

    def write(
        self, values: tuple[Value, ...], ref: Var, v: EventValue
    ) -> tuple[Value, ...]:
        """Assign one reference; a whole array takes a tuple of elements."""
        out = list(values)
        if self.arch.is_array(ref.name) and ref.index is None:
            n = self.arch.range_of(ref.name)
            if not isinstance(v, tuple) or len(v) != n:
                raise ValueError(f"'{ref.name}' needs a tuple of {n} values")
            for k, item in enumerate(v):
                out[self.pos[(ref.name, k)]] = item
        else:
            if isinstance(ref.index, str):
                raise ValueError(f"cannot assign pattern {render_var(ref)}")
            if isinstance(v, tuple):
                raise ValueError(f"{render_var(ref)} takes one value, not a tuple")
            out[self.pos[(ref.name, ref.index)]] = v
        return tuple(out)


def _slots_of(ref: Var, arch: Architecture) -> tuple[Slot, ...]:
    if arch.is_array(ref.name):
        if isinstance(ref.index, int):
            return ((ref.name, ref.index),)
        return tuple((ref.name, k) for k in range(arch.range_of(ref.name)))
    return ((ref.name, None),)


def _read_slots(refs: Iterable[Var], arch: Architecture) -> set[Slot]:
    out: set[Slot] = set()
    for r in refs:
        out.update(_slots_of(r, arch))
    return out


def initial_state(arch: Architecture) -> GlobalState:
    """All variables undefined; each ``pk`` starts with the trust facts."""
    empty = _Layout(arch).empty()
    comps = []
    for c in arch.components:
        trust = frozenset(
            r for r in arch.relations if isinstance(r, Trust) and r.truster == c
        )
        comps.append((c, ComponentState(empty, trust, frozenset())))
    return GlobalState(tuple(comps))


def variable_state(state: GlobalState, arch: Architecture, component: str) -> dict:
    """One component's variables as a name-to-value mapping."""
    cs = state.component(component)
    if cs.error:
        raise ValueError(f"'{component}' is in the error state")
    return _Layout(arch).mapping(cs.values)


# ---------------------------------------------------------------------------
# Event-relation compatibility
# ---------------------------------------------------------------------------


def _defined_value(ref: Var, v: object, arch: Architecture) -> bool:
    """True when ``v`` has the right shape for ``ref`` with no holes."""
    if arch.is_array(ref.name) and ref.index is None:
        return (
            isinstance(v, tuple)
            and len(v) == arch.range_of(ref.name)
            and all(isinstance(item, int) for item in v)
        )
    return isinstance(v, int)


def _statement_matches(inst: StatementInstance, declared) -> bool:
    if isinstance(inst, Attest):
        return inst == declared
    if isinstance(inst, ProofInstance):
        return isinstance(declared, Proof) and inst.proof == declared
    return False


def _uniform_instantiations(
    equations: tuple[Equation, ...], arch: Architecture
) -> list[tuple[Equation, ...]]:
    """Every grounding of a block, index variables instantiated jointly."""
    names = sorted(set().union(*(equation_index_vars(e) for e in equations)) if equations else set())
    if not names:
        return [equations]
    spans = []
    for k in names:
        ranges = {
            arch.arrays[r.name]
            for e in equations
            for r in equation_reads(e)
            if r.index == k and r.name in arch.arrays
        }
        if len(ranges) != 1:
            return []
        spans.append(range(ranges.pop()))
    out = []
    for combo in product(*spans):
        block = equations
        for k, ck in zip(names, combo):
            block = tuple(
                instantiate_index(e, k, ck, arch.arrays) if k in equation_index_vars(e) else e
                for e in block
            )
        out.append(block)
    return out


def compatible_event(e: Event, r: Relation, arch: Architecture) -> bool:
    """Whether ``e`` is an instance of ``r``: same shape, indexes picked
    from the arrays' ranges, values filled in with defined entries."""
    if isinstance(e, HasE) and isinstance(r, Has):
        return e.owner == r.owner and e.var == r.var and _defined_value(e.var, e.value, arch)
    if isinstance(e, ReceiveE) and isinstance(r, Receive):
        if e.receiver != r.receiver or e.sender != r.sender:
            return False
        if len(e.statements) != len(r.statements) or len(e.payload) != len(r.payload):
            return False
        if not all(_statement_matches(i, d) for i, d in zip(e.statements, r.statements)):
            return False
        return all(
            ref == declared and _defined_value(ref, v, arch)
            for (ref, v), declared in zip(e.payload, r.payload)
        )
    if isinstance(e, ComputeE) and isinstance(r, Compute):
        if e.owner != r.owner:
            return False
        try:
            return e.equation in expand_equation(r.equation, arch.arrays)
        except ValueError:
            return False
    if isinstance(e, CheckE) and isinstance(r, Check):
        return e.owner == r.owner and e.equations in _uniform_instantiations(
            r.equations, arch
        )
    if isinstance(e, VerifProofE) and isinstance(r, VerifProof):
        return e.owner == r.owner and e.proof.proof == r.proof
    if isinstance(e, VerifAttestE) and isinstance(r, VerifAttest):
        return e.owner == r.owner and e.attest == r.attest
    if isinstance(e, SpotcheckE) and isinstance(r, Spotcheck):
        return (
            e.checker == r.checker
            and e.source == r.source
            and e.array == r.array
            and e.equations == r.equations
            and isinstance(e.value, int)
            and 0 <= e.index < arch.arrays.get(e.array, 0)
        )
    return False


# ---------------------------------------------------------------------------
# Trace checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceViolation:
    """One way a trace breaks the architecture's rules.

    ``position`` is the offending event's index in the trace; ``kind`` is
    one of ``compatibility``, ``licensing``, ``spotcheck-repeat``,
    ``reassignment``, ``error-component``, ``use-before-define``.
    """

    position: int
    kind: str
    message: str


_EVENT_WORDS = {
    HasE: "has",
    ReceiveE: "receive",
    ComputeE: "compute",
    CheckE: "check",
    VerifProofE: "verify_proof",
    VerifAttestE: "verify_attest",
    SpotcheckE: "spotcheck",
}


def _event_writes(e: Event, arch: Architecture) -> list[Slot]:
    if isinstance(e, HasE):
        return list(_slots_of(e.var, arch))
    if isinstance(e, ReceiveE):
        out: list[Slot] = []
        for ref, _ in e.payload:
            out.extend(_slots_of(ref, arch))
        return out
    if isinstance(e, ComputeE):
        lhs = e.equation.lhs
        if isinstance(lhs, Var) and not isinstance(lhs.index, str):
            if arch.is_array(lhs.name) and lhs.index is None:
                return list(_slots_of(lhs, arch))
            return [(lhs.name, lhs.index)]
        return []
    if isinstance(e, SpotcheckE):
        return [(e.array, e.index)]
    return []


def _spotcheck_grounds(e: SpotcheckE, arch: Architecture) -> list[Equation]:
    out = []
    for eq in e.equations:
        for k in equation_index_vars(eq):
            eq = instantiate_index(eq, k, e.index, arch.arrays)
        out.append(eq)
    return out


def _render_slot(s: Slot) -> str:
    return s[0] if s[1] is None else f"{s[0]}[{s[1]}]"


def check_trace(
    trace: Iterable[Event], arch: Architecture, interp: Interpretation | None = None
) -> tuple[TraceViolation, ...]:
    """Every rule violation in the trace, in event order.

    Events on components that already failed can only be detected by
    executing the trace, so that rule is checked exactly when ``interp`` is
    supplied; all other rules are value-free.  An empty result means the
    trace is consistent with the architecture.
    """
    violations: list[TraceViolation] = []
    defined: dict[str, set[Slot]] = {c: set() for c in arch.components}
    received: dict[str, set[StatementInstance]] = {c: set() for c in arch.components}
    sampled: set[tuple[str, str, str]] = set()
    sim = initial_state(arch) if interp is not None else None

    def bad(p: int, kind: str, message: str) -> None:
        violations.append(TraceViolation(p, kind, message))

    for p, e in enumerate(trace):
        owner = event_owner(e)
        if owner not in arch.components:
            bad(p, "compatibility", f"event {p}: undeclared component '{owner}'")
            sim = None
            continue
        before = len(violations)

        if sim is not None and sim.component(owner).error:
            bad(p, "error-component", f"event {p}: '{owner}' is already in the error state")

        if not isinstance(e, ComputeE):
            if not any(compatible_event(e, r, arch) for r in arch.relations):
                word = _EVENT_WORDS[type(e)]
                bad(p, "compatibility", f"event {p}: no relation admits this {word} event")
        else:
            if not (
                any(compatible_event(e, r, arch) for r in arch.relations)
                or _dep_licensed(owner, e.equation, arch)
            ):
                bad(
                    p,
                    "licensing",
                    f"event {p}: '{owner}' may not compute {render_equation(e.equation)}",
                )

        reads: set[Slot] = set()
        if isinstance(e, ComputeE):
            reads = _read_slots(term_reads(e.equation.rhs), arch)
        elif isinstance(e, CheckE):
            reads = _read_slots(
                set().union(*(equation_reads(q) for q in e.equations)) if e.equations else set(),
                arch,
            )
        elif isinstance(e, SpotcheckE):
            grounds = _spotcheck_grounds(e, arch)
            reads = _read_slots(
                set().union(*(equation_reads(q) for q in grounds)) if grounds else set(),
                arch,
            )
            reads.discard((e.array, e.index))
            if e.source in arch.components and (e.array, e.index) not in defined.get(
                e.source, set()
            ):
                bad(
                    p,
                    "use-before-define",
                    f"event {p}: '{e.source}' has no value for {_render_slot((e.array, e.index))}",
                )
        missing = sorted(reads - defined[owner])
        if missing:
            names = ", ".join(_render_slot(s) for s in missing)
            bad(p, "use-before-define", f"event {p}: '{owner}' reads {names} before assignment")

        if isinstance(e, (VerifProofE, VerifAttestE)):
            stmt: StatementInstance = e.proof if isinstance(e, VerifProofE) else e.attest
            if stmt not in received[owner]:
                bad(
                    p,
                    "use-before-define",
                    f"event {p}: '{owner}' verifies a statement it has not received",
                )

        if isinstance(e, SpotcheckE):
            key = (e.checker, e.source, e.array)
            if key in sampled:
                bad(
                    p,
                    "spotcheck-repeat",
                    f"event {p}: '{e.checker}' samples '{e.array}' from '{e.source}' twice",
                )
            sampled.add(key)

        seen: set[Slot] = set()
        for s in _event_writes(e, arch):
            if s in defined[owner] or s in seen:
                bad(p, "reassignment", f"event {p}: '{owner}' assigns {_render_slot(s)} twice")
            seen.add(s)
        defined[owner].update(seen)

        if isinstance(e, ReceiveE):
            received[owner].update(e.statements)

        if sim is not None:
            if len(violations) == before and not sim.component(owner).error:
                try:
                    sim = step(e, sim, arch, interp)
                except (EvalError, ValueError):
                    sim = None
            elif not sim.component(owner).error:
                sim = None

    return tuple(violations)


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------


def _dep_instances(owner: str, arch: Architecture):
    """Ground (target, sources) pairs licensed by the owner's dep entries."""
    for entry in arch.deps_of(owner):
        refs = (entry.target,) + entry.sources
        ivs = {r.index for r in refs if isinstance(r.index, str)}
        if ivs:
            spans = [
                arch.arrays[r.name]
                for r in refs
                if isinstance(r.index, str) and r.name in arch.arrays
            ]
            if not spans:
                continue
            picks = [
                tuple(
                    Var(r.name, k) if isinstance(r.index, str) else r for r in refs
                )
                for k in range(min(spans))
            ]
        else:
            picks = [refs]
        for target, *sources in picks:
            if arch.is_array(target.name) and target.index is None:
                for k in range(arch.range_of(target.name)):
                    yield Var(target.name, k), tuple(sources)
            else:
                yield target, tuple(sources)


def _canonical_args(sources: tuple[Var, ...], arch: Architecture) -> tuple[Var, ...]:
    args: list[Var] = []
    for s in sources:
        if arch.is_array(s.name) and s.index is None:
            args.extend(Var(s.name, k) for k in range(arch.range_of(s.name)))
        else:
            args.append(s)
    return tuple(args)


def licensed_derivations(owner: str, arch: Architecture) -> tuple[Equation, ...]:
    """Every canonical computation the owner's dep entries license.

    One equation per ground dep instance, the sources spelled out as
    arguments of the reserved combiner; these are exactly the compute
    events an adversarial component may add to a trace.
    """
    out: list[Equation] = []
    seen: set[Equation] = set()
    for target, sources in _dep_instances(owner, arch):
        eq = Equation(target, App(DERIVE, _canonical_args(sources, arch)))
        if eq not in seen:
            seen.add(eq)
            out.append(eq)
    return tuple(out)


def _dep_licensed(owner: str, eq: Equation, arch: Architecture) -> bool:
    return eq in licensed_derivations(owner, arch)


def _ground_all(equations: Iterable[Equation], arch: Architecture) -> set[Equation]:
    out: set[Equation] = set()
    for eq in equations:
        out.update(expand_equation(eq, arch.arrays))
    return out


def _proof_valuation(
    cs: ComponentState, inst: ProofInstance, layout: _Layout
) -> VarState:
    """Receiver values where defined, the author's snapshot elsewhere."""
    vals = list(layout.empty())
    base = layout.empty()
    for ref, v in inst.snapshot:
        base = layout.write(base, ref, v)
    for i, snap in enumerate(base):
        own = cs.values[i]
        vals[i] = own if own is not None else snap
    return layout.mapping(tuple(vals))


def step(
    e: Event, state: GlobalState, arch: Architecture, interp: Interpretation
) -> GlobalState:
    """Execute one event; only the owning component's state changes.

    The event's owner must not already be in the error state (consistent
    traces never step a failed component; doing so is a caller bug).
    """
    owner = event_owner(e)
    cs = state.component(owner)
    if cs.error:
        raise ValueError(f"'{owner}' is in the error state")
    layout = _Layout(arch)

    if isinstance(e, HasE):
        return state._with(owner, ComponentState(layout.write(cs.values, e.var, e.value), cs.pk, cs.pb))

    if isinstance(e, ReceiveE):
        vals = cs.values
        for ref, v in e.payload:
            vals = layout.write(vals, ref, v)
        return state._with(owner, ComponentState(vals, cs.pk, cs.pb))

    if isinstance(e, ComputeE):
        lhs = e.equation.lhs
        if not isinstance(lhs, Var) or isinstance(lhs.index, str):
            raise ValueError(f"cannot assign {render_equation(e.equation)}")
        if arch.is_array(lhs.name) and lhs.index is None:
            raise ValueError(f"'{lhs.name}' assigned without an index")
        v = eval_term(e.equation.rhs, layout.mapping(cs.values), interp)
        if v is None:
            raise ValueError(f"compute of {render_equation(e.equation)} reads an undefined input")
        vals = layout.write(cs.values, lhs, v)
        return state._with(owner, ComponentState(vals, cs.pk | {e.equation}, cs.pb))

    if isinstance(e, CheckE):
        m = layout.mapping(cs.values)
        if all(eval_eq(q, m, interp) is True for q in e.equations):
            return state._with(owner, ComponentState(cs.values, cs.pk | set(e.equations), cs.pb))
        return state._with(owner, ERROR_STATE)

    if isinstance(e, VerifProofE):
        m = _proof_valuation(cs, e.proof, layout)
        direct = tuple(q for q in e.proof.proof.contents if isinstance(q, Equation))
        grounds = _ground_all(direct, arch)
        if all(eval_eq(q, m, interp) is True for q in grounds):
            gained = set(grounds)
            for s in e.proof.proof.contents:
                if isinstance(s, Attest) and Trust(owner, s.author) in cs.pk:
                    gained |= _ground_all(s.equations, arch)
            return state._with(owner, ComponentState(cs.values, cs.pk | gained, cs.pb))
        return state._with(owner, ERROR_STATE)

    if isinstance(e, VerifAttestE):
        if Trust(owner, e.attest.author) in cs.pk:
            gained = _ground_all(e.attest.equations, arch)
            return state._with(owner, ComponentState(cs.values, cs.pk | gained, cs.pb))
        return state

    if isinstance(e, SpotcheckE):
        vals = layout.write(cs.values, Var(e.array, e.index), e.value)
        m = layout.mapping(vals)
        if all(eval_eq(q, m, interp) is True for q in _spotcheck_grounds(e, arch)):
            gained = _ground_all(e.equations, arch)
            return state._with(owner, ComponentState(vals, cs.pk, cs.pb | gained))
        return state._with(owner, ERROR_STATE)

    raise ValueError(f"cannot step {e!r}")


def run_trace(
    trace: Iterable[Event], arch: Architecture, interp: Interpretation
) -> GlobalState:
    """Fold :func:`step` over the trace from the initial state."""
    state = initial_state(arch)
    for e in trace:
        state = step(e, state, arch, interp)
    return state


# ---------------------------------------------------------------------------
# JSON-lines serialization
# ---------------------------------------------------------------------------


def _term_to_json(t: Term) -> dict:
    if isinstance(t, Var):
        return {"var": t.name} if t.index is None else {"var": t.name, "index": t.index}
    if isinstance(t, Const):
        return {"const": t.value}
    if isinstance(t, App):
        return {"app": t.func, "args": [_term_to_json(a) for a in t.args]}
    if isinstance(t, Fold):
        return {"iter": t.func, "array": t.array}
    raise ValueError(f"cannot serialize {t!r}")


def _term_from_json(d: Mapping) -> Term:
    if "var" in d:
        return Var(d["var"], d.get("index"))
    if "const" in d:
        return Const(d["const"])
    if "app" in d:
        return App(d["app"], tuple(_term_from_json(a) for a in d["args"]))
    if "iter" in d:
        return Fold(d["iter"], d["array"])
    raise ValueError(f"cannot parse term {d!r}")


def _eq_to_json(e: Equation) -> dict:
    return {"lhs": _term_to_json(e.lhs), "rel": e.rel, "rhs": _term_to_json(e.rhs)}


def _eq_from_json(d: Mapping) -> Equation:
    return Equation(_term_from_json(d["lhs"]), _term_from_json(d["rhs"]), d["rel"])


def _value_to_json(v: EventValue):
    return list(v) if isinstance(v, tuple) else v


def _value_from_json(v) -> EventValue:
    return tuple(v) if isinstance(v, list) else v


def _binding_to_json(ref: Var, v: EventValue) -> list:
    return [_term_to_json(ref), _value_to_json(v)]


def _binding_from_json(item) -> tuple[Var, EventValue]:
    ref = _term_from_json(item[0])
    if not isinstance(ref, Var):
        raise ValueError(f"binding target must be a variable: {item[0]!r}")
    return ref, _value_from_json(item[1])


def _statement_to_json(s: StatementInstance) -> dict:
    if isinstance(s, Attest):
        return {"attest": s.author, "equations": [_eq_to_json(q) for q in s.equations]}
    contents = []
    for item in s.proof.contents:
        if isinstance(item, Equation):
            contents.append(_eq_to_json(item))
        else:
            contents.append(
                {"attest": item.author, "equations": [_eq_to_json(q) for q in item.equations]}
            )
    return {
        "proof": s.proof.author,
        "contents": contents,
        "snapshot": [_binding_to_json(ref, v) for ref, v in s.snapshot],
    }


def _statement_from_json(d: Mapping) -> StatementInstance:
    if "attest" in d and "proof" not in d:
        return Attest(d["attest"], tuple(_eq_from_json(q) for q in d["equations"]))
    contents: list = []
    for item in d["contents"]:
        if "attest" in item:
            contents.append(
                Attest(item["attest"], tuple(_eq_from_json(q) for q in item["equations"]))
            )
        else:
            contents.append(_eq_from_json(item))
    return ProofInstance(
        Proof(d["proof"], tuple(contents)),
        tuple(_binding_from_json(b) for b in d["snapshot"]),
    )


def event_to_json(e: Event) -> dict:
    if isinstance(e, HasE):
        return {
            "kind": "has",
            "owner": e.owner,
            "var": _term_to_json(e.var),
            "value": _value_to_json(e.value),
        }
    if isinstance(e, ReceiveE):
        return {
            "kind": "receive",
            "receiver": e.receiver,
            "sender": e.sender,
            "statements": [_statement_to_json(s) for s in e.statements],
            "payload": [_binding_to_json(ref, v) for ref, v in e.payload],
        }
    if isinstance(e, ComputeE):
        return {"kind": "compute", "owner": e.owner, "equation": _eq_to_json(e.equation)}
    if isinstance(e, CheckE):
        return {
            "kind": "check",
            "owner": e.owner,
            "equations": [_eq_to_json(q) for q in e.equations],
        }
    if isinstance(e, VerifProofE):
        return {"kind": "verify_proof", "owner": e.owner, "proof": _statement_to_json(e.proof)}
    if isinstance(e, VerifAttestE):
        return {
            "kind": "verify_attest",
            "owner": e.owner,
            "attest": _statement_to_json(e.attest),
        }
    if isinstance(e, SpotcheckE):
        return {
            "kind": "spotcheck",
            "checker": e.checker,
            "source": e.source,
            "array": e.array,
            "index": e.index,
            "value": e.value,
            "equations": [_eq_to_json(q) for q in e.equations],
        }
    raise ValueError(f"cannot serialize {e!r}")


def event_from_json(d: Mapping) -> Event:
    kind = d.get("kind")
    if kind == "has":
        ref = _term_from_json(d["var"])
        if not isinstance(ref, Var):
            raise ValueError("has event needs a variable reference")
        return HasE(d["owner"], ref, _value_from_json(d["value"]))
    if kind == "receive":
        return ReceiveE(
            d["receiver"],
            d["sender"],
            tuple(_statement_from_json(s) for s in d["statements"]),
            tuple(_binding_from_json(b) for b in d["payload"]),
        )
    if kind == "compute":
        return ComputeE(d["owner"], _eq_from_json(d["equation"]))
    if kind == "check":
        return CheckE(d["owner"], tuple(_eq_from_json(q) for q in d["equations"]))
    if kind == "verify_proof":
        inst = _statement_from_json(d["proof"])
        if not isinstance(inst, ProofInstance):
            raise ValueError("verify_proof event needs a proof")
        return VerifProofE(d["owner"], inst)
    if kind == "verify_attest":
        inst = _statement_from_json(d["attest"])
        if not isinstance(inst, Attest):
            raise ValueError("verify_attest event needs an attestation")
        return VerifAttestE(d["owner"], inst)
    if kind == "spotcheck":
        return SpotcheckE(
            d["checker"],
            d["source"],
            d["array"],
            d["index"],
            d["value"],
            tuple(_eq_from_json(q) for q in d["equations"]),
        )
    raise ValueError(f"unknown event kind {kind!r}")


def trace_to_jsonl(trace: Iterable[Event]) -> str:
    """One JSON object per line; parses back bit-exactly."""
    return "".join(json.dumps(event_to_json(e)) + "\n" for e in trace)


def trace_from_jsonl(text: str) -> tuple[Event, ...]:
    out = []
    for line in text.splitlines():
        if line.strip():
            out.append(event_from_json(json.loads(line)))
    return tuple(out)
