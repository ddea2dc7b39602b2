"""Bounded enumeration of reachable states and semantic goal verdicts."""

import json

import pytest

from privarch.core import (
    Believes,
    Equation,
    Fold,
    HasAll,
    HasNone,
    Knows,
    Trust,
    Var,
    VerifAttest,
    expand_equation,
)
from privarch.dsl import parse_bundle
from privarch.oracle import (
    CrosscheckEntry,
    CrosscheckReport,
    EnumBounds,
    SemanticVerdict,
    crosscheck,
    default_bounds,
    enumerate_states,
    holds,
    saturating_bounds,
)
from privarch.prover import Derivation, NotProvable, prove
from privarch.semantics import (
    check_trace,
    initial_state,
    run_trace,
    variable_state,
)

SMALL = open("samples/smart_metering_small.parch").read()

SELFDEP = """
architecture selfdep {
  component A B;
  array p[2]; var u;

  has A (p);
  compute A (u = iter(+, p));
  receive B from A { } vars { u };

  dep A: u <- { p };
}

model { domain 0..1; }

goals {
  K A { u = iter(+, p); };
  B A { u = iter(+, p); };
}
"""

CHAIN = """
architecture chain {
  component A B;
  array p[2]; array q[2];
  fun S/1;

  has A (p);
  compute A (q[t] = S(p[t]));
  receive B from A { } vars { q };

  dep A: q[t] <- { p[t] };
  dep B: p[t] <- { q[t] };
}

model { domain 0..1; fun S(a) = a; }
"""

TRIVIAL = """
architecture single {
  component A;
  var v;
  has A (v);
}

model { domain 0..1; }
"""

SIDECHANNEL = """
architecture sidechannel {
  component M P;
  var a; var b; var c;
  has M (a);
  receive P from M { } vars { a };
  dep P: b <- { a };
  dep P: c <- { b };
}

model { domain 0..1; }
"""

HASHES = """
architecture hashes {
  component A;
  var h1; var h2; var x1; var x2;
  fun H/1;
  has A (x1); has A (x2);
  compute A (h1 = H(x1));
  compute A (h2 = H(x2));
  check A { h1 = h2; };
  deduce A rule inj: { ?a = H(?b); ?c = H(?d); ?a = ?c } => ?b = ?d;
}

model {
  domain 0..1;
  fun H(a) = a;
}

goals {
  K A { x1 = x2; };
}
"""

PROOF_SMALL = SMALL.replace(
    "verify_attest P (attest M { Fee = iter(+, y); y[t] = F(x[t]); "
    "x[t] = S(Cons[t]); });",
    "verify_proof P (proof M { Fee = iter(+, y); });",
).replace(
    "{ attest M { Fee = iter(+, y); y[t] = F(x[t]); x[t] = S(Cons[t]); } }",
    "{ proof M { Fee = iter(+, y); } }",
)


@pytest.fixture(scope="module")
def small():
    return parse_bundle(SMALL)


@pytest.fixture(scope="module")
def notrust():
    return parse_bundle(open("samples/smart_metering_notrust.parch").read())


@pytest.fixture(scope="module")
def spot():
    return parse_bundle(open("samples/smart_metering_spotcheck.parch").read())


@pytest.fixture(scope="module")
def small_enum(small):
    return enumerate_states(small.architecture, small.model.interp)


@pytest.fixture(scope="module")
def notrust_enum(notrust):
    return enumerate_states(notrust.architecture, notrust.model.interp)


@pytest.fixture(scope="module")
def spot_enum(spot):
    return enumerate_states(spot.architecture, spot.model.interp)


def _attested_grounds(arch):
    rel = next(r for r in arch.relations if isinstance(r, VerifAttest))
    out = set()
    for eq in rel.attest.equations:
        out.update(expand_equation(eq, arch.arrays))
    return out


def _equations(facts):
    return {f for f in facts if isinstance(f, Equation)}


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


class TestBounds:
    def test_defaults(self):
        b = EnumBounds()
        assert b == EnumBounds(max_adversarial=1, max_events=None, payload_cap=None)

    def test_negative_adversary_budget_rejected(self):
        with pytest.raises(ValueError):
            EnumBounds(max_adversarial=-1)

    def test_zero_caps_rejected(self):
        with pytest.raises(ValueError):
            EnumBounds(max_events=0)
        with pytest.raises(ValueError):
            EnumBounds(payload_cap=0)

    def test_bundle_model_sets_adversary_budget(self, small):
        big = parse_bundle(open("samples/smart_metering.parch").read())
        assert default_bounds(big).max_adversarial == 2
        assert default_bounds(small).max_adversarial == 1

    def test_saturating_budget_covers_derivation_chains(self):
        # A can derive q[0] and q[1], B can derive p[0] and p[1]; the
        # possession rules close over all four, so soundness comparisons
        # need an adversary budget that cannot clip the chain.
        bundle = parse_bundle(CHAIN)
        arch, interp = bundle.architecture, bundle.model.interp
        assert saturating_bounds(arch).max_adversarial == 4
        goal = HasAll("B", Var("p"))
        clipped = holds(arch, goal, interp, EnumBounds(max_adversarial=1))
        assert clipped.verdict == "fails"
        full = holds(arch, goal, interp, saturating_bounds(arch))
        assert full.verdict == "holds"


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


class TestEnumeration:
    def test_single_has_yields_three_states(self):
        bundle = parse_bundle(TRIVIAL)
        enum = enumerate_states(bundle.architecture, bundle.model.interp)
        assert len(enum.states) == 3
        assert not enum.truncated
        assert initial_state(bundle.architecture) in enum.states
        values = sorted(
            variable_state(s, bundle.architecture, "A")["v"] is None
            for s in enum.states
        )
        assert values == [False, False, True]

    def test_provider_never_holds_readings(self, small, small_enum):
        arch = small.architecture
        for state in small_enum.states:
            vars_p = variable_state(state, arch, "P")
            assert vars_p["Cons"] == (None, None)
            assert vars_p["x"] == (None, None)
            assert vars_p["y"] == (None, None)

    def test_provider_knowledge_comes_only_from_verification(self, small, small_enum):
        arch = small.architecture
        grounds = frozenset(_attested_grounds(arch))
        for state in small_enum.states:
            pk = state.component("P").pk
            assert Trust("P", "M") in pk
            assert _equations(pk) in (set(), grounds)

    def test_small_enumeration_is_exhaustive(self, small_enum):
        assert not small_enum.truncated

    def test_witness_traces_replay_and_stay_admissible(self, small, small_enum):
        arch, interp = small.architecture, small.model.interp
        seen = set(small_enum.states)
        for state in small_enum.states:
            trace = small_enum.witness_trace(state)
            assert check_trace(trace, arch, interp) == ()
            assert run_trace(trace, arch, interp) == state
            for cut in range(len(trace) + 1):
                assert run_trace(trace[:cut], arch, interp) in seen

    def test_enumeration_is_deterministic(self, small, small_enum):
        again = enumerate_states(small.architecture, small.model.interp)
        assert again.states == small_enum.states
        assert again.truncated == small_enum.truncated

    def test_adversary_budget_caps_derive_chains(self):
        bundle = parse_bundle(SIDECHANNEL)
        arch, interp = bundle.architecture, bundle.model.interp

        blind = enumerate_states(arch, interp, EnumBounds(max_adversarial=0))
        for state in blind.states:
            assert variable_state(state, arch, "P")["b"] is None

        one = enumerate_states(arch, interp, EnumBounds(max_adversarial=1))
        derived = [
            s for s in one.states if variable_state(s, arch, "P")["b"] is not None
        ]
        assert derived
        for state in derived:
            vars_p = variable_state(state, arch, "P")
            assert vars_p["b"] == vars_p["a"]
        for state in one.states:
            assert variable_state(state, arch, "P")["c"] is None

        two = enumerate_states(arch, interp, EnumBounds(max_adversarial=2))
        assert any(
            variable_state(s, arch, "P")["c"] is not None for s in two.states
        )

    def test_payload_cap_marks_the_result_bounded(self, small):
        enum = enumerate_states(
            small.architecture, small.model.interp, EnumBounds(payload_cap=1)
        )
        assert enum.truncated

    def test_event_cap_marks_the_result_bounded(self, small):
        enum = enumerate_states(
            small.architecture, small.model.interp, EnumBounds(max_events=1)
        )
        assert enum.truncated
        full = enumerate_states(small.architecture, small.model.interp)
        assert len(enum.states) < len(full.states)


# ---------------------------------------------------------------------------
# Goal verdicts
# ---------------------------------------------------------------------------


class TestHasVerdicts:
    def test_trivial_existence_and_absence(self):
        bundle = parse_bundle(TRIVIAL)
        arch, interp = bundle.architecture, bundle.model.interp
        from privarch.core import HasAll, HasNone

        assert holds(arch, HasAll("A", Var("v")), interp).verdict == "holds"
        absent = holds(arch, HasNone("A", Var("v")), interp)
        assert absent.verdict == "fails"
        assert absent.witness_state is not None
        assert variable_state(absent.witness_state, arch, "A")["v"] is not None

    def test_metering_goals_all_hold(self, small, small_enum):
        arch, interp = small.architecture, small.model.interp
        for goal in small.goals:
            v = holds(arch, goal, interp, enumeration=small_enum)
            assert v.verdict == "holds", v.detail

    def test_absence_implies_exclusivity(self, small, small_enum):
        from privarch.core import HasNone, HasOne

        arch, interp = small.architecture, small.model.interp
        assert (
            holds(arch, HasNone("P", Var("Cons")), interp, enumeration=small_enum).verdict
            == "holds"
        )
        assert (
            holds(arch, HasOne("P", Var("Cons")), interp, enumeration=small_enum).verdict
            == "holds"
        )

    def test_truncated_run_qualifies_the_verdict(self, small):
        v = holds(
            small.architecture,
            small.goals[0],
            small.model.interp,
            EnumBounds(payload_cap=1),
        )
        assert v.verdict == "holds-within-bounds"


class TestKnowledgeVerdicts:
    def test_trusting_provider_knows_the_billing_chain(self, small, small_enum):
        v = holds(
            small.architecture, small.goals[2], small.model.interp, enumeration=small_enum
        )
        assert v.verdict == "holds"

    def test_untrusting_provider_fails_with_witness(self, notrust, notrust_enum):
        arch, interp = notrust.architecture, notrust.model.interp
        v = holds(arch, notrust.goals[2], interp, enumeration=notrust_enum)
        assert v.verdict == "fails"
        assert v.witness_state is not None and v.witness_trace is not None
        assert _equations(v.witness_state.component("P").pk) == set()
        assert not v.witness_state.component("P").error
        assert run_trace(v.witness_trace, arch, interp) == v.witness_state

    def test_untrusting_provider_keeps_the_has_goals(self, notrust, notrust_enum):
        arch, interp = notrust.architecture, notrust.model.interp
        assert holds(arch, notrust.goals[0], interp, enumeration=notrust_enum).verdict == "holds"
        assert holds(arch, notrust.goals[1], interp, enumeration=notrust_enum).verdict == "holds"

    def test_spotcheck_grants_belief_not_knowledge(self, spot, spot_enum):
        arch, interp = spot.architecture, spot.model.interp
        assert holds(arch, spot.goals[0], interp, enumeration=spot_enum).verdict == "holds"
        assert holds(arch, spot.goals[1], interp, enumeration=spot_enum).verdict == "holds"
        knowledge = Knows("P", spot.goals[1].equations)
        v = holds(arch, knowledge, interp, enumeration=spot_enum)
        assert v.verdict == "fails"
        assert v.witness_state is not None

    def test_deduction_rules_extend_semantic_knowledge(self):
        bundle = parse_bundle(HASHES)
        arch, interp = bundle.architecture, bundle.model.interp
        v = holds(arch, bundle.goals[0], interp)
        assert v.verdict == "holds"

    def test_proof_contents_become_knowledge_once_verified(self):
        bundle = parse_bundle(PROOF_SMALL)
        arch, interp = bundle.architecture, bundle.model.interp
        goal = Knows("P", (Equation(Var("Fee"), Fold("+", "y")),))
        v = holds(arch, goal, interp, EnumBounds(max_adversarial=0))
        assert v.verdict == "holds"

    def test_own_license_does_not_sabotage_own_knowledge(self):
        # A's dep license lets A overwrite u adversarially, but runs where
        # A deviates from its own protocol do not refute K_A or B_A.
        bundle = parse_bundle(SELFDEP)
        arch, interp = bundle.architecture, bundle.model.interp
        enum = enumerate_states(arch, interp)
        for goal in bundle.goals:
            v = holds(arch, goal, interp, enumeration=enum)
            assert v.verdict == "holds"

    def test_own_license_still_defeats_own_privacy(self):
        # The same kind of license keeps counting against possession goals:
        # P only ever gets b by deriving it, yet hasnone P (b) must fail.
        bundle = parse_bundle(SIDECHANNEL)
        arch, interp = bundle.architecture, bundle.model.interp
        v = holds(arch, HasNone("P", Var("b")), interp)
        assert v.verdict == "fails"
        assert variable_state(v.witness_state, arch, "P")["b"] is not None

    def test_verdicts_are_deterministic(self, notrust):
        arch, interp = notrust.architecture, notrust.model.interp
        first = holds(arch, notrust.goals[2], interp)
        second = holds(arch, notrust.goals[2], interp)
        assert first == second


class TestVerdictShape:
    def test_failures_must_carry_a_witness(self, small):
        with pytest.raises(ValueError):
            SemanticVerdict(small.goals[0], "fails")

    def test_unknown_verdicts_are_rejected(self, small):
        with pytest.raises(ValueError):
            SemanticVerdict(small.goals[0], "maybe")

    def test_json_embeds_the_witness_trace(self, notrust, notrust_enum):
        arch, interp = notrust.architecture, notrust.model.interp
        v = holds(arch, notrust.goals[2], interp, enumeration=notrust_enum)
        data = v.to_json()
        assert data["verdict"] == "fails"
        assert isinstance(data["witness"], list) and data["witness"]
        assert all("kind" in e for e in data["witness"])
        json.dumps(data)


# ---------------------------------------------------------------------------
# Crosschecking
# ---------------------------------------------------------------------------


class TestCrosscheck:
    def test_metering_prover_and_semantics_agree(self, small):
        report = crosscheck(small.architecture, small.goals, small.model.interp)
        assert report.ok
        assert [e.classification for e in report.entries] == ["agree"] * 3
        assert all(e.proved for e in report.entries)

    def test_missing_trust_is_agreement_on_failure(self, notrust):
        report = crosscheck(notrust.architecture, notrust.goals, notrust.model.interp)
        assert report.ok
        assert [e.classification for e in report.entries] == ["agree"] * 3
        assert [e.proved for e in report.entries] == [True, True, False]
        assert report.entries[2].verdict == "fails"

    def test_spotcheck_goals_agree(self, spot):
        report = crosscheck(spot.architecture, spot.goals, spot.model.interp)
        assert report.ok
        assert [e.classification for e in report.entries] == ["agree", "agree"]

    def test_hash_injectivity_agrees(self):
        bundle = parse_bundle(HASHES)
        report = crosscheck(bundle.architecture, bundle.goals, bundle.model.interp)
        assert report.ok
        assert report.entries[0].classification == "agree"

    def test_overclaiming_prover_is_flagged_unsound(self, notrust):
        def reckless(arch, goal, budget=None):
            result = prove(arch, goal, budget)
            if isinstance(result, NotProvable) and isinstance(goal, Knows):
                return Derivation("K5", "overclaimed", ())
            return result

        report = crosscheck(
            notrust.architecture,
            notrust.goals,
            notrust.model.interp,
            prove_fn=reckless,
        )
        assert not report.ok
        assert report.entries[2].classification == "soundness-discrepancy"

    def test_silent_prover_shows_completeness_gaps(self, small):
        def mute(arch, goal, budget=None):
            return NotProvable("no rule applies")

        report = crosscheck(
            small.architecture, small.goals, small.model.interp, prove_fn=mute
        )
        assert report.ok
        assert [e.classification for e in report.entries] == ["completeness-gap"] * 3

    def test_bounded_runs_stay_unresolved_instead_of_gaps(self, small):
        def mute(arch, goal, budget=None):
            return NotProvable("no rule applies")

        report = crosscheck(
            small.architecture,
            small.goals,
            small.model.interp,
            EnumBounds(payload_cap=1),
            prove_fn=mute,
        )
        assert {e.classification for e in report.entries} == {
            "unresolved-within-bounds"
        }

    def test_report_serializes(self, spot):
        report = crosscheck(spot.architecture, spot.goals, spot.model.interp)
        data = report.to_json()
        assert data["ok"] is True
        assert len(data["goals"]) == 2
        for entry in data["goals"]:
            assert {"formula", "proved", "verdict", "classification"} <= set(entry)
        json.dumps(data)
