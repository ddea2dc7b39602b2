"""Parser, diagnostics, and pretty-printer round-trip tests."""

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from privarch.core import (
    And,
    App,
    Attest,
    Believes,
    Compute,
    Const,
    DeductionRule,
    DepEntry,
    Equation,
    ExprFunc,
    Fold,
    Has,
    HasAll,
    HasNone,
    HasOne,
    Knows,
    MetaVar,
    Receive,
    Spotcheck,
    TableFunc,
    Trust,
    Var,
    VerifAttest,
    render_equation,
)
from privarch.dsl import (
    Bundle,
    BundleParseError,
    load_bundle,
    parse_bundle,
    pretty_print,
)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
SAMPLE_FILES = sorted(SAMPLES.glob("*.parch"))


def errors_of(exc: BundleParseError) -> list[str]:
    return [d.message for d in exc.diagnostics if d.severity == "error"]


def parse_errors(src: str) -> list[str]:
    with pytest.raises(BundleParseError) as einfo:
        parse_bundle(src)
    return errors_of(einfo.value)


TINY = """
architecture tiny {
  component A B;
  array Cons[3]; array x[3];
  var Fee;
  fun S/1;
  has A (Cons);
  compute A (x[t] = S(Cons[t]));
}
"""


@pytest.fixture(scope="module")
def bundle():
    return load_bundle(SAMPLES / "smart_metering.parch")


class TestSmartMeteringParse:

    def test_declarations(self, bundle):
        a = bundle.architecture
        assert a.name == "smart_metering"
        assert a.components == ("M", "P")
        assert a.arrays == {"Cons": 3, "x": 3, "y": 3}
        assert a.scalars == ("Fee",)
        assert a.functions == {"S": 1, "F": 1}

    def test_relations(self, bundle):
        a = bundle.architecture
        att = Attest(
            "M",
            (
                Equation(Var("Fee"), Fold("+", "y")),
                Equation(Var("y", "t"), App("F", (Var("x", "t"),))),
                Equation(Var("x", "t"), App("S", (Var("Cons", "t"),))),
            ),
        )
        assert a.relations == (
            Has("M", Var("Cons")),
            Compute("M", Equation(Var("x", "t"), App("S", (Var("Cons", "t"),)))),
            Compute("M", Equation(Var("y", "t"), App("F", (Var("x", "t"),)))),
            Compute("M", Equation(Var("Fee"), Fold("+", "y"))),
            Receive("P", "M", (att,), (Var("Fee"),)),
            VerifAttest("P", att),
            Trust("P", "M"),
        )

    def test_deps(self, bundle):
        a = bundle.architecture
        assert set(a.deps) == {"M", "P"}
        assert a.deps["P"] == (
            DepEntry(Var("Fee"), (Var("y"),)),
            DepEntry(Var("y", "t"), (Var("x", "t"),)),
            DepEntry(Var("x", "t"), (Var("y", "t"),)),
            DepEntry(Var("x", "t"), (Var("Cons", "t"),)),
            DepEntry(Var("Cons", "t"), (Var("x", "t"),)),
        )
        assert a.deps["M"] == a.deps["P"]

    def test_three_goals(self, bundle):
        assert len(bundle.goals) == 3
        assert bundle.goals[0] == HasAll("P", Var("Fee"))
        assert bundle.goals[1] == And(
            And(HasNone("P", Var("Cons")), HasNone("P", Var("x"))),
            HasNone("P", Var("y")),
        )
        assert bundle.goals[2] == Knows(
            "P",
            (
                Equation(Var("Fee"), Fold("+", "y")),
                Equation(Var("y", "t"), App("F", (Var("x", "t"),))),
                Equation(Var("x", "t"), App("S", (Var("Cons", "t"),))),
            ),
        )

    def test_model(self, bundle):
        m = bundle.model
        assert m is not None
        assert (m.interp.lo, m.interp.hi) == (0, 3)
        assert m.interp.functions["S"] == ExprFunc(("a",), Var("a"))
        assert m.interp.functions["F"] == TableFunc(
            ("a",), {(0,): 1, (1,): 2, (2,): 3, (3,): 0}
        )
        assert m.max_adversarial == 2

    def test_no_warnings(self, bundle):
        assert bundle.warnings == ()

    def test_architecture_validates(self, bundle):
        assert bundle.architecture.validate() == []


class TestOtherSamples:
    def test_spotcheck_sample(self):
        b = load_bundle(SAMPLES / "smart_metering_spotcheck.parch")
        a = b.architecture
        sc = a.relations[3]
        assert sc == Spotcheck(
            "P", "M", "Cons", "k",
            (Equation(Var("x", "k"), App("S", (Var("Cons", "k"),))),),
        )
        assert b.goals == (
            HasOne("P", Var("Cons")),
            Believes("P", (Equation(Var("x", "k"), App("S", (Var("Cons", "k"),))),)),
        )
        assert "Cons[t]" not in [str(d.target) for d in a.deps.get("P", ())]

    def test_notrust_sample_has_no_trust(self):
        b = load_bundle(SAMPLES / "smart_metering_notrust.parch")
        assert not any(isinstance(r, Trust) for r in b.architecture.relations)
        assert b.model is not None and b.model.max_adversarial is None


class TestRoundTrip:
    @pytest.mark.parametrize("path", SAMPLE_FILES, ids=lambda p: p.stem)
    def test_samples_round_trip(self, path):
        original = load_bundle(path)
        printed = pretty_print(original)
        reparsed = parse_bundle(printed)
        assert reparsed == original
        assert reparsed.warnings == ()
        # Canonical text is a fixed point.
        assert pretty_print(reparsed) == printed

    def test_minimal_architecture(self):
        b = parse_bundle("architecture a { component C; }")
        assert b.architecture.components == ("C",)
        assert b.architecture.relations == ()
        assert b.model is None and b.goals == ()
        assert pretty_print(b).count("component") == 1

    def test_relation_order_preserved(self):
        src = TINY
        b = parse_bundle(src)
        kinds = [type(r).__name__ for r in b.architecture.relations]
        assert kinds == ["Has", "Compute"]
        assert [type(r).__name__ for r in parse_bundle(pretty_print(b)).architecture.relations] == kinds


class TestDiagnostics:
    def test_arity_mismatch_reported(self):
        src = TINY.replace("compute A (x[t] = S(Cons[t]));",
                           "compute A (x[t] = S(Cons[t], Fee));")
        msgs = parse_errors(src)
        assert any("'S' expects 1 argument" in m for m in msgs)

    def test_undeclared_component(self):
        msgs = parse_errors(TINY.replace("has A (Cons);", "has Q (Cons);"))
        assert any("undeclared component 'Q'" in m for m in msgs)

    def test_undeclared_variable(self):
        msgs = parse_errors(TINY.replace("has A (Cons);", "has A (Items);"))
        assert any("undeclared variable 'Items'" in m for m in msgs)

    def test_index_out_of_range(self):
        msgs = parse_errors(TINY.replace("has A (Cons);", "has A (Cons[7]);"))
        assert any("index 7 out of range" in m for m in msgs)

    def test_undeclared_function(self):
        msgs = parse_errors(TINY.replace("S(Cons[t])", "G(Cons[t])"))
        assert any("undeclared function 'G'" in m for m in msgs)

    def test_two_index_variables_rejected(self):
        msgs = parse_errors(TINY.replace("S(Cons[t])", "S(Cons[u])"))
        assert any("at most one index variable" in m for m in msgs)

    def test_bare_array_in_term(self):
        msgs = parse_errors(TINY.replace("compute A (x[t] = S(Cons[t]));",
                                         "compute A (Fee = iter(+, x) + Cons);"))
        assert any("used as a scalar" in m for m in msgs)

    def test_metavar_outside_rule(self):
        msgs = parse_errors(TINY.replace("S(Cons[t])", "S(?a)"))
        assert any("match variables are only allowed in deduction rules" in m for m in msgs)

    def test_reserved_word_as_name(self):
        msgs = parse_errors("architecture a { component model; }")
        assert any("reserved word" in m for m in msgs)

    def test_duplicate_declaration(self):
        msgs = parse_errors(TINY.replace("var Fee;", "var Fee; var Fee;"))
        assert any("duplicate declaration of 'Fee'" in m for m in msgs)

    def test_index_variable_where_forbidden(self):
        msgs = parse_errors(TINY.replace("has A (Cons);", "has A (Cons[t]);"))
        assert any("index variables are not allowed here" in m for m in msgs)

    def test_multiple_independent_errors_collected(self):
        src = TINY.replace(
            "has A (Cons);",
            "has Q (Cons);\n  has A (Items);\n  trust A A;",
        )
        msgs = parse_errors(src)
        assert any("undeclared component 'Q'" in m for m in msgs)
        assert any("undeclared variable 'Items'" in m for m in msgs)
        assert any("cannot trust itself" in m for m in msgs)

    def test_recovery_after_syntax_error(self):
        src = TINY.replace("has A (Cons);", "has A (((;\n  has A (Items);")
        msgs = parse_errors(src)
        assert any("undeclared variable 'Items'" in m for m in msgs)

    def test_spans_are_positive_and_ordered(self):
        with pytest.raises(BundleParseError) as einfo:
            parse_bundle(TINY.replace("has A (Cons);", "has Q (Cons);\n  has R (Cons);"))
        diags = einfo.value.diagnostics
        assert all(d.line >= 1 and d.col >= 1 for d in diags)
        assert [(d.line, d.col) for d in diags] == sorted((d.line, d.col) for d in diags)

    def test_diagnostic_str_format(self):
        with pytest.raises(BundleParseError) as einfo:
            parse_bundle("architecture a { component A; has Q (v); }")
        d = [x for x in einfo.value.diagnostics if x.severity == "error"][0]
        assert str(d).startswith(f"{d.line}:{d.col}: error:")

    def test_lexical_garbage(self):
        msgs = parse_errors("architecture a { component A; } @@@")
        assert any("unexpected character" in m for m in msgs)

    def test_empty_k_goal(self):
        src = TINY + "goals { K A { } }"
        msgs = parse_errors(src)
        assert any("needs at least one equation" in m for m in msgs)

    def test_goal_over_undeclared_component(self):
        src = TINY + "goals { hasall Q (Fee); }"
        msgs = parse_errors(src)
        assert any("undeclared component 'Q'" in m for m in msgs)


class TestModelDiagnostics:
    def test_missing_domain(self):
        src = TINY + "model { fun S(a) = a; }"
        assert any("must declare a domain" in m for m in parse_errors(src))

    def test_missing_function_definition(self):
        src = TINY + "model { domain 0..1; }"
        assert any("missing: S" in m for m in parse_errors(src))

    def test_undeclared_function_definition(self):
        src = TINY + "model { domain 0..1; fun S(a) = a; fun G(a) = a; }"
        assert any("not a declared function" in m for m in parse_errors(src))

    def test_param_count_mismatch(self):
        src = TINY + "model { domain 0..1; fun S(a, b) = a; }"
        assert any("declared with arity 1 but defined with 2" in m for m in parse_errors(src))

    def test_table_not_total(self):
        src = TINY + "model { domain 0..1; fun S(a) = table { 0 -> 1 }; }"
        assert any("not total on the domain" in m for m in parse_errors(src))

    def test_table_value_outside_domain(self):
        src = TINY + "model { domain 0..1; fun S(a) = table { 0 -> 1, 1 -> 5 }; }"
        assert any("maps outside the domain" in m for m in parse_errors(src))

    def test_empty_domain(self):
        src = TINY + "model { domain 3..1; fun S(a) = a; }"
        assert any("empty domain" in m for m in parse_errors(src))

    def test_unbound_name_in_function_body(self):
        src = TINY + "model { domain 0..1; fun S(a) = b; }"
        assert any("unbound name 'b'" in m for m in parse_errors(src))


class TestWarnings:
    def test_duplicate_payload_deduplicated(self):
        src = TINY.replace(
            "compute A (x[t] = S(Cons[t]));",
            "receive B from A { } vars { Fee, Fee };",
        )
        b = parse_bundle(src)
        recv = b.architecture.relations[-1]
        assert isinstance(recv, Receive) and recv.payload == (Var("Fee"),)
        assert any("duplicate payload variable" in w.message for w in b.warnings)

    def test_duplicate_statement_deduplicated(self):
        src = TINY.replace(
            "compute A (x[t] = S(Cons[t]));",
            "receive B from A { attest A { Fee = 0; } attest A { Fee = 0; } } vars { Fee };",
        )
        b = parse_bundle(src)
        recv = b.architecture.relations[-1]
        assert isinstance(recv, Receive) and len(recv.statements) == 1
        assert any("duplicate statement" in w.message for w in b.warnings)


class TestDeduceAndProof:
    def test_hash_injectivity_rule(self):
        src = """
        architecture h {
          component A;
          var h1 h2 x1 x2;
          fun H/1;
          deduce A rule inj: { ?a = H(?b); ?c = H(?d); ?a = ?c } => ?b = ?d;
        }
        """
        b = parse_bundle(src)
        assert b.architecture.rules["A"] == (
            DeductionRule(
                "inj",
                (
                    Equation(MetaVar("a"), App("H", (MetaVar("b"),))),
                    Equation(MetaVar("c"), App("H", (MetaVar("d"),))),
                    Equation(MetaVar("a"), MetaVar("c")),
                ),
                Equation(MetaVar("b"), MetaVar("d")),
            ),
        )

    def test_unbound_conclusion_metavar(self):
        src = """
        architecture h {
          component A;
          fun H/1;
          deduce A rule bad: { ?a = H(?b) } => ?a = ?z;
        }
        """
        assert any("?z" in m and "not bound" in m for m in parse_errors(src))

    def test_nested_attest_in_proof(self):
        src = TINY.replace(
            "compute A (x[t] = S(Cons[t]));",
            "receive B from A { proof A { Fee = 0; attest A { Fee > 0; } } } vars { Fee };\n"
            "  verify_proof B (proof A { Fee = 0; attest A { Fee > 0; } });",
        )
        b = parse_bundle(src)
        recv = b.architecture.relations[-2]
        assert isinstance(recv, Receive)
        proof = recv.statements[0]
        assert proof.contents == (
            Equation(Var("Fee"), Const(0)),
            Attest("A", (Equation(Var("Fee"), Const(0), ">"),)),
        )
        assert parse_bundle(pretty_print(b)) == b

    def test_attests_cannot_nest(self):
        src = TINY.replace(
            "compute A (x[t] = S(Cons[t]));",
            "receive B from A { attest A { attest A { Fee = 0; } } } vars { Fee };",
        )
        msgs = parse_errors(src)
        assert msgs  # nested attest inside attest is a syntax error


class TestLoadBundle:
    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_bundle(tmp_path / "nope.parch")

    def test_bom_tolerated(self, tmp_path):
        plain = SAMPLES / "smart_metering.parch"
        with_bom = tmp_path / "bom.parch"
        with_bom.write_text("﻿" + plain.read_text(), encoding="utf-8")
        assert load_bundle(with_bom) == load_bundle(plain)

    def test_comments_ignored(self):
        b = parse_bundle("// header\narchitecture a { component C; // tail\n }")
        assert b.architecture.components == ("C",)


# -- generated round-trip property -------------------------------------------

_names = st.sampled_from(["Fee", "Cons", "x"])


def _terms(depth: int):
    base = st.one_of(
        st.integers(min_value=0, max_value=9).map(Const),
        st.sampled_from([Var("Fee"), Var("Cons", 0), Var("Cons", "t"), Var("x", "t"), Var("x", 2)]),
        st.just(Fold("+", "x")),
    )
    if depth == 0:
        return base
    sub = _terms(depth - 1)
    return st.one_of(
        base,
        st.builds(lambda a: App("S", (a,)), sub),
        st.builds(lambda a, b: App("+", (a, b)), sub, sub),
        st.builds(lambda a, b: App("*", (a, b)), sub, sub),
        st.builds(lambda a, b: App("min", (a, b)), sub, sub),
    )


@given(
    lhs=_terms(2), rhs=_terms(2),
    rel=st.sampled_from(["=", "<", ">", "<=", ">="]),
)
def test_equation_render_parse_round_trip(lhs, rhs, rel):
    """Rendering an equation and reparsing it inside a check yields it back."""
    eq = Equation(lhs, rhs, rel)
    from privarch.core import equation_index_vars

    if len(equation_index_vars(eq)) > 1:
        return
    src = (
        "architecture rt { component A; array Cons[3]; array x[3]; var Fee; fun S/1;\n"
        f"  check A {{ {render_equation(eq)}; }}\n}}"
    )
    b = parse_bundle(src)
    check = b.architecture.relations[0]
    assert check.equations == (eq,)
