"""Core model tests: evaluation, instantiation, expansion, rendering.

Expected values in this file are hand-derived once and frozen.  The worked
example is metering: Cons = [1, 0, 2], S(a) = a, F given by the table
0->1, 1->2, 2->3, 3->0, so x = [1, 0, 2], y = [2, 1, 3] and the fold of +
over y is 2 + 1 + 3 = 6.
"""

import pytest
from hypothesis import given, strategies as st

from privarch.core import (
    App,
    Architecture,
    Attest,
    Check,
    Compute,
    Const,
    DeductionRule,
    DepEntry,
    Equation,
    EvalError,
    ExpansionError,
    ExprFunc,
    Fold,
    Has,
    IndexRangeError,
    Interpretation,
    MetaVar,
    Proof,
    Receive,
    Spotcheck,
    TableFunc,
    Trust,
    Var,
    VerifAttest,
    VerifProof,
    equation_is_ground,
    equation_reads,
    eval_eq,
    eval_term,
    expand_equation,
    instantiate_index,
    render_equation,
    render_formula,
    render_relation,
    render_term,
)
from privarch.core import HasAll, HasNone, Knows, And


@pytest.fixture
def interp():
    return Interpretation(
        lo=0,
        hi=3,
        functions={
            "S": ExprFunc(("a",), Var("a")),
            "F": TableFunc(("a",), {(0,): 1, (1,): 2, (2,): 3, (3,): 0}),
        },
    )


@pytest.fixture
def metering_state():
    return {"Cons": (1, 0, 2), "x": (1, 0, 2), "y": (2, 1, 3), "Fee": 6}


RANGES = {"Cons": 3, "x": 3, "y": 3}


class TestEvalTerm:
    def test_fold_sums_the_array(self, interp, metering_state):
        assert eval_term(Fold("+", "y"), metering_state, interp) == 6

    def test_table_function_on_each_element(self, interp, metering_state):
        got = [
            eval_term(App("F", (Var("x", k),)), metering_state, interp)
            for k in range(3)
        ]
        assert got == [2, 1, 3]

    def test_expression_function_is_identity(self, interp, metering_state):
        assert eval_term(App("S", (Var("Cons", 0),)), metering_state, interp) == 1

    def test_table_lookup_wraps_out_of_domain_arguments(self, interp):
        # 6 wraps to 6 mod 4 = 2, and the table sends 2 to 3.
        assert eval_term(App("F", (Const(6),)), {}, interp) == 3

    def test_derive_is_wrapped_sum(self, interp):
        assert eval_term(App("derive", (Const(2), Const(3))), {}, interp) == 1
        assert eval_term(App("derive", ()), {}, interp) == 0

    @pytest.mark.parametrize(
        "func, a, b, expected",
        [("+", 2, 3, 5), ("-", 1, 3, -2), ("*", 2, 3, 6), ("min", 2, 3, 2), ("max", 2, 3, 3)],
    )
    def test_builtins(self, interp, func, a, b, expected):
        assert eval_term(App(func, (Const(a), Const(b))), {}, interp) == expected

    def test_undefined_scalar_propagates(self, interp):
        state = {"Fee": None}
        assert eval_term(Var("Fee"), state, interp) is None
        assert eval_term(App("F", (Var("Fee"),)), state, interp) is None

    def test_undefined_array_entry_poisons_fold(self, interp):
        assert eval_term(Fold("+", "y"), {"y": (2, None, 3)}, interp) is None

    def test_undefined_does_not_mask_malformed_siblings(self, interp):
        state = {"q": None}
        with pytest.raises(EvalError):
            eval_term(App("+", (Var("q"), Var("missing"))), state, interp)

    @pytest.mark.parametrize(
        "term, state",
        [
            (Var("zz"), {}),
            (Var("x", "t"), {"x": (0, 0, 0)}),
            (Var("x", 5), {"x": (0, 0, 0)}),
            (Var("Fee", 0), {"Fee": 1}),
            (Var("x"), {"x": (0, 0, 0)}),
            (App("G", (Const(0),)), {}),
            (Fold("+", "Fee"), {"Fee": 1}),
        ],
    )
    def test_malformed_terms_raise(self, interp, term, state):
        with pytest.raises(EvalError):
            eval_term(term, state, interp)


class TestEvalEq:
    def test_metering_fee_equation_holds(self, interp, metering_state):
        eq = Equation(Var("Fee"), Fold("+", "y"))
        assert eval_eq(eq, metering_state, interp) is True

    def test_wrong_fee_fails(self, interp, metering_state):
        state = dict(metering_state, Fee=5)
        eq = Equation(Var("Fee"), Fold("+", "y"))
        assert eval_eq(eq, state, interp) is False

    def test_undefined_side_gives_none(self, interp, metering_state):
        state = dict(metering_state, Fee=None)
        eq = Equation(Var("Fee"), Fold("+", "y"))
        assert eval_eq(eq, state, interp) is None

    @pytest.mark.parametrize(
        "rel, expected",
        [("=", False), ("<", True), (">", False), ("<=", True), (">=", False)],
    )
    def test_relational_operators(self, interp, rel, expected):
        assert eval_eq(Equation(Const(1), Const(2), rel), {}, interp) is expected

    def test_unknown_relation_symbol_rejected(self):
        with pytest.raises(ValueError):
            Equation(Const(1), Const(2), "!=")


class TestInstantiateAndExpand:
    def test_instantiate_substitutes_everywhere(self):
        eq = Equation(Var("y", "t"), App("F", (Var("x", "t"),)))
        got = instantiate_index(eq, "t", 2, RANGES)
        assert got == Equation(Var("y", 2), App("F", (Var("x", 2),)))

    def test_instantiate_leaves_other_indexes_alone(self):
        eq = Equation(Var("y", 0), App("F", (Var("x", "t"),)))
        got = instantiate_index(eq, "t", 1, RANGES)
        assert got == Equation(Var("y", 0), App("F", (Var("x", 1),)))

    def test_instantiate_out_of_range_raises(self):
        eq = Equation(Var("y", "t"), App("F", (Var("x", "t"),)))
        with pytest.raises(IndexRangeError):
            instantiate_index(eq, "t", 3, RANGES)

    def test_expand_enumerates_the_range(self):
        eq = Equation(Var("y", "t"), App("F", (Var("x", "t"),)))
        got = expand_equation(eq, RANGES)
        assert got == [
            Equation(Var("y", 0), App("F", (Var("x", 0),))),
            Equation(Var("y", 1), App("F", (Var("x", 1),))),
            Equation(Var("y", 2), App("F", (Var("x", 2),))),
        ]
        assert all(equation_is_ground(e) for e in got)

    def test_expand_of_ground_equation_is_identity(self):
        eq = Equation(Var("Fee"), Fold("+", "y"))
        assert expand_equation(eq, RANGES) == [eq]

    def test_expand_rejects_two_index_variables(self):
        eq = Equation(Var("y", "t"), Var("x", "u"))
        with pytest.raises(ExpansionError):
            expand_equation(eq, RANGES)

    def test_expand_rejects_mismatched_ranges(self):
        eq = Equation(Var("y", "t"), Var("z", "t"))
        with pytest.raises(ExpansionError):
            expand_equation(eq, {"y": 3, "z": 2})

    @given(st.integers(min_value=1, max_value=6))
    def test_expansion_length_matches_range(self, n):
        eq = Equation(Var("y", "t"), App("F", (Var("x", "t"),)))
        got = expand_equation(eq, {"x": n, "y": n})
        assert len(got) == n
        assert got == [instantiate_index(eq, "t", k, {"x": n, "y": n}) for k in range(n)]


class TestReads:
    def test_fold_reads_whole_array(self):
        eq = Equation(Var("Fee"), Fold("+", "y"))
        assert equation_reads(eq) == {Var("Fee"), Var("y")}

    def test_element_reads_are_precise(self):
        eq = Equation(Var("y", 1), App("F", (Var("x", 1),)))
        assert equation_reads(eq) == {Var("y", 1), Var("x", 1)}


class TestInterpretation:
    def test_empty_domain_rejected(self):
        with pytest.raises(ValueError):
            Interpretation(lo=2, hi=1)

    def test_wrap_negative(self, interp):
        assert interp.wrap(-1) == 3
        assert interp.wrap(4) == 0
        assert interp.wrap(2) == 2

    def test_wrap_with_offset_domain(self):
        shifted = Interpretation(lo=1, hi=3)
        assert [shifted.wrap(v) for v in (0, 1, 3, 4)] == [3, 1, 3, 1]

    def test_expression_function_may_call_builtins(self):
        i = Interpretation(lo=0, hi=7, functions={
            "double": ExprFunc(("a",), App("+", (Var("a"), Var("a")))),
        })
        assert i.apply("double", (3,)) == 6

    def test_arity_mismatch_raises(self, interp):
        with pytest.raises(EvalError):
            interp.apply("F", (1, 2))


class TestRendering:
    @pytest.mark.parametrize(
        "term, expected",
        [
            (Var("Fee"), "Fee"),
            (Var("x", 2), "x[2]"),
            (Var("x", "t"), "x[t]"),
            (Const(6), "6"),
            (MetaVar("a"), "?a"),
            (Fold("+", "y"), "iter(+, y)"),
            (App("F", (Var("x", "t"),)), "F(x[t])"),
            (App("+", (App("+", (Var("a"), Var("b"))), Var("c"))), "a + b + c"),
            (App("+", (Var("a"), App("+", (Var("b"), Var("c"))))), "a + (b + c)"),
            (App("*", (App("+", (Var("a"), Var("b"))), Var("c"))), "(a + b) * c"),
            (App("-", (Var("a"), App("-", (Var("b"), Var("c"))))), "a - (b - c)"),
            (App("min", (Var("a"), Const(1))), "min(a, 1)"),
        ],
    )
    def test_render_term(self, term, expected):
        assert render_term(term) == expected

    def test_render_equation(self):
        eq = Equation(Var("Fee"), Fold("+", "y"))
        assert render_equation(eq) == "Fee = iter(+, y)"

    def test_render_relations(self):
        assert render_relation(Has("M", Var("Cons"))) == "has M (Cons);"
        assert (
            render_relation(Compute("M", Equation(Var("y", "t"), App("F", (Var("x", "t"),)))))
            == "compute M (y[t] = F(x[t]));"
        )
        assert render_relation(Trust("P", "M")) == "trust P M;"
        sc = Spotcheck("P", "M", "Cons", "k", (Equation(Var("x", "k"), App("S", (Var("Cons", "k"),))),))
        assert render_relation(sc) == "spotcheck P from M (Cons[k], { x[k] = S(Cons[k]); });"

    def test_render_receive_with_attestation(self):
        att = Attest("M", (Equation(Var("Fee"), Fold("+", "y")),))
        r = Receive("P", "M", (att,), (Var("Fee"),))
        assert (
            render_relation(r)
            == "receive P from M { attest M { Fee = iter(+, y); } } vars { Fee };"
        )

    def test_render_formulas(self):
        assert render_formula(HasAll("P", Var("Fee"))) == "hasall P (Fee)"
        f = And(HasNone("P", Var("Cons")), Knows("P", (Equation(Var("Fee"), Fold("+", "y")),)))
        assert render_formula(f) == "hasnone P (Cons) and K P { Fee = iter(+, y) }"


def metering_architecture() -> Architecture:
    att = Attest(
        "M",
        (
            Equation(Var("Fee"), Fold("+", "y")),
            Equation(Var("y", "t"), App("F", (Var("x", "t"),))),
            Equation(Var("x", "t"), App("S", (Var("Cons", "t"),))),
        ),
    )
    return Architecture(
        name="metering",
        components=("M", "P"),
        arrays={"Cons": 3, "x": 3, "y": 3},
        scalars=("Fee",),
        functions={"S": 1, "F": 1},
        relations=(
            Has("M", Var("Cons")),
            Compute("M", Equation(Var("x", "t"), App("S", (Var("Cons", "t"),)))),
            Compute("M", Equation(Var("y", "t"), App("F", (Var("x", "t"),)))),
            Compute("M", Equation(Var("Fee"), Fold("+", "y"))),
            Receive("P", "M", (att,), (Var("Fee"),)),
            VerifAttest("P", att),
            Trust("P", "M"),
        ),
        deps={
            "P": (DepEntry(Var("Fee"), (Var("y"),)),),
        },
    )


class TestArchitectureValidate:
    def test_well_formed(self):
        assert metering_architecture().validate() == []

    @pytest.mark.parametrize(
        "mutate, fragment",
        [
            (lambda a: a.relations + (Has("Q", Var("Fee")),), "undeclared component"),
            (lambda a: a.relations + (Has("M", Var("zz")),), "undeclared variable"),
            (lambda a: a.relations + (Has("M", Var("Fee", 0)),), "indexed but not a declared array"),
            (lambda a: a.relations + (Has("M", Var("Cons", 7)),), "out of range"),
            (
                lambda a: a.relations
                + (Compute("M", Equation(Var("y", "t"), App("F", (Var("x", "t"), Var("x", "t"))))),),
                "expects 1 argument",
            ),
            (
                lambda a: a.relations
                + (Compute("M", Equation(Var("y", "t"), App("G", (Var("x", "t"),)))),),
                "undeclared function",
            ),
            (
                lambda a: a.relations
                + (Compute("M", Equation(Var("y", "t"), Var("x", "u"))),),
                "more than one index variable",
            ),
            (
                lambda a: a.relations + (Compute("M", Equation(Const(1), Const(1))),),
                "compute target must be a variable",
            ),
            (
                lambda a: a.relations + (Check("M", (Equation(MetaVar("a"), Const(0)),)),),
                "match variable",
            ),
            (lambda a: a.relations + (Trust("P", "Q"),), "undeclared component"),
        ],
    )
    def test_malformed_relations_reported(self, mutate, fragment):
        a = metering_architecture()
        a.relations = mutate(a)
        problems = a.validate()
        assert any(fragment in p for p in problems), problems

    def test_rule_conclusion_metavars_must_be_bound(self):
        a = metering_architecture()
        a.rules = {
            "P": (
                DeductionRule(
                    "bad",
                    (Equation(MetaVar("a"), Const(0)),),
                    Equation(MetaVar("b"), Const(0)),
                ),
            )
        }
        problems = a.validate()
        assert any("?b" in p and "not bound" in p for p in problems)

    def test_dep_patterns_share_one_index_variable(self):
        a = metering_architecture()
        a.deps = {"P": (DepEntry(Var("x", "t"), (Var("y", "u"),)),)}
        problems = a.validate()
        assert any("more than one index variable" in p for p in problems)

    def test_spotcheck_equations_must_use_its_index_variable(self):
        a = metering_architecture()
        a.relations += (
            Spotcheck("P", "M", "Cons", "k", (Equation(Var("x", "t"), Var("Cons", "t")),)),
        )
        problems = a.validate()
        assert any("index variable 'k'" in p for p in problems)

    def test_zero_length_array_rejected(self):
        a = metering_architecture()
        a.arrays = dict(a.arrays, bad=0)
        assert any("at least 1" in p for p in a.validate())

    def test_proof_contents_validated(self):
        a = metering_architecture()
        bad = Proof("M", (Equation(Var("zz"), Const(0)),))
        a.relations += (VerifProof("P", bad),)
        assert any("undeclared variable 'zz'" in p for p in a.validate())
