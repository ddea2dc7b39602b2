"""Architecture consistency checking.

An architecture is consistent when six independent conditions hold:

  C1  every variable has a single source of truth (one component owning it
      via has or defining it via compute, with no overlapping definitions);
  C2  no component receives the same variable from two different senders;
  C3  every compute and check can actually obtain its inputs, through has,
      received payloads, or other computes of the same component;
  C4  every verify_proof and verify_attest targets a statement that the
      verifier receives somewhere;
  C5  every spotcheck samples an array from that array's source component
      and can obtain the other variables its equations mention;
  C6  trust relations connect two distinct declared components.

Failures are reported per condition with the offending relations; nothing
here raises on an inconsistent architecture.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    Architecture,
    Attest,
    Check,
    Compute,
    Equation,
    Has,
    Proof,
    Receive,
    Spotcheck,
    Trust,
    Var,
    VerifAttest,
    VerifProof,
    expand_equation,
    render_relation,
    render_var,
    term_reads,
)

CHECK_IDS = ("C1", "C2", "C3", "C4", "C5", "C6")

# A slot is a single assignable cell: (name, None) for a scalar,
# (name, k) for an array element.
Slot = tuple[str, int | None]


@dataclass(frozen=True)
class CheckResult:
    """Verdict for one condition, or one concrete failure of it."""

    check: str
    status: str  # "pass" or "fail"
    relations: tuple = ()
    message: str = ""

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "relations": [render_relation(r) for r in self.relations],
            "message": self.message,
        }


@dataclass(frozen=True)
class ConsistencyReport:
    """All verdicts; a failing condition contributes one entry per failure."""

    entries: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(e.status == "pass" for e in self.entries)

    def failures(self, check: str | None = None) -> tuple[CheckResult, ...]:
        return tuple(
            e
            for e in self.entries
            if e.status == "fail" and (check is None or e.check == check)
        )

    def verdict(self, check: str) -> str:
        return "fail" if self.failures(check) else "pass"

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.entries]


def _slot_name(slot: Slot) -> str:
    name, index = slot
    return render_var(Var(name, index))


def _slots_of(ref: Var, arch: Architecture) -> frozenset[Slot]:
    """Ground cells a variable reference covers (index vars mean all)."""
    if ref.name in arch.arrays:
        if isinstance(ref.index, int):
            return frozenset({(ref.name, ref.index)})
        return frozenset((ref.name, k) for k in range(arch.arrays[ref.name]))
    return frozenset({(ref.name, None)})


def _term_slots(term, arch: Architecture) -> frozenset[Slot]:
    slots: set[Slot] = set()
    for v in term_reads(term):
        slots |= _slots_of(v, arch)
    return frozenset(slots)


def _equation_slots(eq: Equation, arch: Architecture) -> frozenset[Slot]:
    return _term_slots(eq.lhs, arch) | _term_slots(eq.rhs, arch)


def _expand(eq: Equation, arch: Architecture) -> list[Equation]:
    return expand_equation(eq, arch.arrays)


@dataclass
class _Failures:
    """Failure accumulator keeping output independent of relation order."""

    items: dict[str, list[tuple[str, tuple]]] = field(default_factory=dict)

    def add(self, check: str, message: str, relations) -> None:
        rels = tuple(sorted(relations, key=render_relation))
        self.items.setdefault(check, []).append((message, rels))

    def report(self) -> ConsistencyReport:
        entries: list[CheckResult] = []
        for check in CHECK_IDS:
            found = sorted(self.items.get(check, ()))
            if not found:
                entries.append(CheckResult(check, "pass"))
            for message, rels in found:
                entries.append(CheckResult(check, "fail", rels, message))
        return ConsistencyReport(tuple(entries))


def _sources(arch: Architecture) -> dict[str, list[tuple[str, frozenset[Slot], object]]]:
    """Per variable, the (component, cells, relation) triples that source it."""
    out: dict[str, list[tuple[str, frozenset[Slot], object]]] = {}
    for rel in arch.relations:
        if isinstance(rel, Has):
            out.setdefault(rel.var.name, []).append(
                (rel.owner, _slots_of(rel.var, arch), rel)
            )
        elif isinstance(rel, Compute):
            target = rel.equation.lhs
            out.setdefault(target.name, []).append(
                (rel.owner, _slots_of(target, arch), rel)
            )
    return out


def _obtainable(component: str, arch: Architecture) -> frozenset[Slot]:
    """Cells the component can obtain via has, payloads, and its computes."""
    obtained: set[Slot] = set()
    for rel in arch.relations:
        if isinstance(rel, Has) and rel.owner == component:
            obtained |= _slots_of(rel.var, arch)
        elif isinstance(rel, Receive) and rel.receiver == component:
            for ref in rel.payload:
                obtained |= _slots_of(ref, arch)
    ground = [
        (g.lhs, _term_slots(g.rhs, arch))
        for rel in arch.relations
        if isinstance(rel, Compute) and rel.owner == component
        for g in _expand(rel.equation, arch)
    ]
    changed = True
    while changed:
        changed = False
        for target, reads in ground:
            slot = (target.name, target.index)
            if slot not in obtained and reads <= obtained:
                obtained.add(slot)
                changed = True
    return frozenset(obtained)


def _missing(slots: frozenset[Slot], obtained: frozenset[Slot]) -> str:
    return ", ".join(sorted(_slot_name(s) for s in slots - obtained))


def check_architecture(arch: Architecture) -> ConsistencyReport:
    """Evaluate C1 through C6 and report every failure found."""
    fails = _Failures()
    sources = _sources(arch)

    # C1: conflicting sources are either two components touching the same
    # variable or two relations covering a common cell.
    for name in sorted(sources):
        entries = sources[name]
        conflict = len({comp for comp, _, _ in entries}) > 1 or any(
            a_slots & b_slots
            for i, (_, a_slots, _) in enumerate(entries)
            for _, b_slots, _ in entries[i + 1 :]
        )
        if conflict:
            fails.add(
                "C1",
                f"'{name}' has more than one source of truth",
                [rel for _, _, rel in entries],
            )

    # C2: group receives by receiver and payload variable.
    senders: dict[tuple[str, str], dict[str, list[Receive]]] = {}
    for rel in arch.relations:
        if isinstance(rel, Receive):
            for ref in rel.payload:
                key = (rel.receiver, ref.name)
                senders.setdefault(key, {}).setdefault(rel.sender, []).append(rel)
    for (receiver, name), by_sender in sorted(senders.items()):
        if len(by_sender) > 1:
            fails.add(
                "C2",
                f"'{receiver}' receives '{name}' from more than one sender",
                [rel for rels in by_sender.values() for rel in rels],
            )

    obtained = {c: _obtainable(c, arch) for c in arch.components}

    # C3: computes need their right-hand sides, checks need both sides.
    for rel in arch.relations:
        if isinstance(rel, Compute):
            needed = frozenset().union(
                *(_term_slots(g.rhs, arch) for g in _expand(rel.equation, arch))
            )
            missing = _missing(needed, obtained[rel.owner])
            if missing:
                fails.add(
                    "C3", f"'{rel.owner}' cannot obtain {missing}", [rel]
                )
        elif isinstance(rel, Check):
            needed = frozenset().union(
                *(
                    _equation_slots(g, arch)
                    for eq in rel.equations
                    for g in _expand(eq, arch)
                )
            )
            missing = _missing(needed, obtained[rel.owner])
            if missing:
                fails.add(
                    "C3", f"'{rel.owner}' cannot obtain {missing}", [rel]
                )

    # C4: verified statements must be received somewhere.
    received: dict[str, set] = {}
    for rel in arch.relations:
        if isinstance(rel, Receive):
            received.setdefault(rel.receiver, set()).update(rel.statements)
    for rel in arch.relations:
        statement: Attest | Proof | None = None
        if isinstance(rel, VerifAttest):
            statement = rel.attest
        elif isinstance(rel, VerifProof):
            statement = rel.proof
        if statement is not None and statement not in received.get(rel.owner, ()):
            kind = "an attestation" if isinstance(statement, Attest) else "a proof"
            fails.add(
                "C4",
                f"'{rel.owner}' verifies {kind} it never receives",
                [rel],
            )

    # C5: the spotcheck source must own the array, and the equations must
    # need nothing beyond the checker's reach plus the sampled array.
    for rel in arch.relations:
        if not isinstance(rel, Spotcheck):
            continue
        owners = {comp for comp, _, _ in sources.get(rel.array, ())}
        if owners != {rel.source}:
            fails.add(
                "C5",
                f"'{rel.array}' is not sourced by '{rel.source}'",
                [rel],
            )
        sampled = frozenset((rel.array, k) for k in range(arch.arrays[rel.array]))
        needed = frozenset().union(
            *(
                _equation_slots(g, arch)
                for eq in rel.equations
                for g in _expand(eq, arch)
            )
        )
        missing = _missing(needed - sampled, obtained[rel.checker])
        if missing:
            fails.add(
                "C5", f"'{rel.checker}' cannot obtain {missing}", [rel]
            )

    # C6: trust edges stay inside the declared components and off the diagonal.
    for rel in arch.relations:
        if not isinstance(rel, Trust):
            continue
        if rel.truster not in arch.components or rel.trustee not in arch.components:
            fails.add("C6", "trust names an undeclared component", [rel])
        elif rel.truster == rel.trustee:
            fails.add("C6", f"'{rel.truster}' cannot trust itself", [rel])

    return fails.report()
