"""Seeded random architectures drawn from a small enumerable space.

Generated bundles stay inside fixed bounds so the semantic checker can
enumerate every reachable state: at most 3 components, at most 2 arrays
of range 2, at most 6 relations, values over the domain {0, 1}.  The
same seed always yields the same bundle, and the seed is recorded on
the first line of the emitted source.
"""

from __future__ import annotations

import random

from .consistency import check_architecture
from .core import (
    Architecture,
    Attest,
    Believes,
    Check,
    Compute,
    Equation,
    Formula,
    HasAll,
    HasNone,
    HasOne,
    Knows,
    Receive,
    Spotcheck,
    Var,
    VerifAttest,
    VerifProof,
)
from .dsl import Bundle, parse_bundle

__all__ = [
    "MAX_ARRAYS",
    "MAX_COMPONENTS",
    "MAX_RELATIONS",
    "formula_family",
    "random_bundle",
    "random_source",
]

MAX_COMPONENTS = 3
MAX_ARRAYS = 2
MAX_RELATIONS = 6

# Each shape fixes the data layout and the single honest compute; the
# remaining draws pick transport, statements, audits, and goals.
_SHAPES = ("scalar", "scalar", "map", "map", "fold", "pair")


def random_source(seed: int) -> str:
    """Deterministic ``.parch`` source for the given seed."""
    rng = random.Random(seed)
    name = f"rand_{seed}" if seed >= 0 else f"rand_m{-seed}"
    third = rng.random() < 0.25
    shape = rng.choice(_SHAPES)

    decls: list[str] = []
    relations: list[str] = []
    deps: list[str] = []
    uses_s = False
    derived = None
    inverse = None

    if shape == "scalar":
        sources = ["u"]
        decls.append("var u; var v;")
        derived, eq = "v", "v = S(u)"
        deps.append("dep A: v <- { u };")
        inverse = "dep B: u <- { v };"
        uses_s = True
    elif shape == "map":
        sources = ["p"]
        decls.append("array p[2]; array q[2];")
        derived, eq = "q", "q[t] = S(p[t])"
        deps.append("dep A: q[t] <- { p[t] };")
        inverse = "dep B: p[t] <- { q[t] };"
        uses_s = True
    elif shape == "fold":
        sources = ["p"]
        decls.append("array p[2]; var u;")
        derived, eq = "u", "u = iter(+, p)"
        deps.append("dep A: u <- { p };")
    else:
        pair = rng.choice((("u", "v"), ("p", "q"), ("p", "u")))
        sources = list(pair)
        for v in pair:
            decls.append(f"array {v}[2];" if v in ("p", "q") else f"var {v};")
        eq = ""

    if uses_s:
        decls.append("fun S/1;")

    for v in sources:
        relations.append(f"has A ({v});")
    if derived:
        relations.append(f"compute A ({eq});")

    if derived:
        payload = [derived] + ([sources[0]] if rng.random() < 0.5 else [])
    else:
        payload = [sources[0]] + (sources[1:] if rng.random() < 0.5 else [])
    stmt = rng.choice(("none", "attest", "attest", "proof")) if derived else "none"
    block = ""
    if stmt == "attest":
        block = f"attest A {{ {eq}; }} "
    elif stmt == "proof":
        block = f"proof A {{ {eq}; }} "
    relations.append(f"receive B from A {{ {block}}} vars {{ {', '.join(payload)} }};")
    if third:
        relations.append(f"receive C from B {{ }} vars {{ {payload[0]} }};")

    verified = False
    trusted = False
    spot = False
    if stmt != "none" and rng.random() < 0.8 and len(relations) < MAX_RELATIONS:
        kind = "verify_attest" if stmt == "attest" else "verify_proof"
        relations.append(f"{kind} B ({stmt} A {{ {eq}; }});")
        verified = True
    if verified and rng.random() < 0.7 and len(relations) < MAX_RELATIONS:
        relations.append("trust B A;")
        trusted = True
    if shape == "map" and rng.random() < 0.4 and len(relations) < MAX_RELATIONS:
        relations.append("spotcheck B from A (p[k], { q[k] = S(p[k]); });")
        spot = True
    if (
        derived
        and sources[0] in payload
        and rng.random() < 0.4
        and len(relations) < MAX_RELATIONS
    ):
        relations.append(f"check B {{ {eq}; }};")

    if inverse and rng.random() < 0.35:
        deps.append(inverse)

    pool = [f"hasall B ({payload[0]});"]
    hidden = [v for v in sources if v not in payload]
    if hidden:
        pool.append(f"hasnone B ({hidden[0]});")
    if spot:
        pool.append("hasone B (p);")
    if trusted:
        pool.append(f"K B {{ {eq}; }};")
    if stmt != "none" or spot:
        goal_eq = "q[k] = S(p[k])" if spot and stmt == "none" else eq
        pool.append(f"B B {{ {goal_eq}; }};")
    if third:
        pool.append(f"hasall C ({payload[0]});")
    goals = rng.sample(pool, rng.randint(1, min(2, len(pool))))

    model = ["domain 0..1;"]
    if uses_s:
        # Constant tables leave audit equations unsatisfiable once an
        # off-range value arrives, so only surjective choices are drawn.
        if rng.random() < 0.5:
            model.append("fun S(a) = a;")
        else:
            model.append("fun S(a) = table { 0 -> 1, 1 -> 0 };")

    lines = [f"// seed {seed}", f"architecture {name} {{"]
    lines.append(f"  component {'A B C' if third else 'A B'};")
    lines.extend(f"  {d}" for d in decls)
    lines.append("")
    lines.extend(f"  {r}" for r in relations)
    if deps:
        lines.append("")
        lines.extend(f"  {d}" for d in deps)
    lines.append("}")
    lines.append("")
    lines.append("model {")
    lines.extend(f"  {m}" for m in model)
    lines.append("}")
    lines.append("")
    lines.append("goals {")
    lines.extend(f"  {g}" for g in goals)
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_bundle(seed: int) -> Bundle:
    """Parse the seed's source; every draw is consistent by construction."""
    bundle = parse_bundle(random_source(seed))
    report = check_architecture(bundle.architecture)
    if not report.ok:
        raise RuntimeError(f"seed {seed} produced an inconsistent architecture")
    return bundle


def formula_family(arch: Architecture) -> tuple[Formula, ...]:
    """Every possession atom plus single-equation K and B atoms.

    Possession atoms range over all components and variables; knowledge
    and belief atoms range over every equation the architecture declares
    in computes, checks, statements, and spotchecks.
    """
    forms: list[Formula] = []
    for comp in arch.components:
        for name in arch.variable_names():
            ref = Var(name)
            forms.append(HasAll(comp, ref))
            forms.append(HasNone(comp, ref))
            if name in arch.arrays:
                forms.append(HasOne(comp, ref))
    equations = _declared_equations(arch)
    for comp in arch.components:
        for eq in equations:
            forms.append(Knows(comp, (eq,)))
            forms.append(Believes(comp, (eq,)))
    return tuple(forms)


def _declared_equations(arch: Architecture) -> tuple[Equation, ...]:
    eqs: list[Equation] = []

    def add(items):
        for eq in items:
            if eq not in eqs:
                eqs.append(eq)

    for rel in arch.relations:
        if isinstance(rel, Compute):
            add((rel.equation,))
        elif isinstance(rel, Check):
            add(rel.equations)
        elif isinstance(rel, Receive):
            for s in rel.statements:
                add(_statement_equations(s))
        elif isinstance(rel, VerifAttest):
            add(_statement_equations(rel.attest))
        elif isinstance(rel, VerifProof):
            add(_statement_equations(rel.proof))
        elif isinstance(rel, Spotcheck):
            add(rel.equations)
    return tuple(eqs)


def _statement_equations(s) -> list[Equation]:
    if isinstance(s, Attest):
        return list(s.equations)
    out: list[Equation] = []
    for item in s.contents:
        if isinstance(item, Attest):
            out.extend(item.equations)
        else:
            out.append(item)
    return out
