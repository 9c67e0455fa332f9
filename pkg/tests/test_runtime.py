from __future__ import annotations

import threading
from dataclasses import replace

import pytest

from semshift import data_path
from semshift.compiler import compile_rules
from semshift.errors import HookError, TransferError, VitValidationError
from semshift.hooks import SUBORDINATED, HookRegistry
from semshift.rules import load_rule_file
from semshift.runtime import FallbackPolicy, TransferState, apply_rule, derive_all, replay, transfer
from semshift.terms import Term
from semshift.vit import SemSet, Vit, parse_vit

from conftest import program, semset, vit

GOLDEN_BEI = semset(
    "l1:real(l2), l2:neg(t1), t1:good(i1), l3:suit(i1), l3:arg3(i1,i2), "
    "l3:arg2(i1,i3), l4:pron(i2), l6:pron(i3)"
)

GOLDEN_BEI_TRACE = """\
FIRE de_en:passen_bei_arg3 consumed=[l3:arg3(i1,i2), l5:bei(i1,i3), l3:passen(i1)] produced=[l3:suit(i1), l3:arg3(i1,i2), l3:arg2(i1,i3)] env={E=i1, L=l3, L1=l5, X=i3, Y=i2}
FIRE de_en:echt_real consumed=[l1:echt(l2)] produced=[l1:real(l2)] env={I=l2, L=l1}
FALLBACK l4:pron(i2)
FALLBACK l6:pron(i3)
FIRE de_en:schlecht_not_good consumed=[l2:schlecht(i1)] produced=[l2:neg(t1), t1:good(i1)] env={A=t1, E=i1, L=l2, L1=l3}
"""

# passen with a dative argument instead of the bei-adjunct
VARIANT_DATIVE = "l1:echt(l2), l2:schlecht(i1), l3:passen(i1), l3:arg3(i1,i2), l4:pron(i2), l3:arg1(i1,i3), l6:pron(i3)"


def fired(result) -> list[str]:
    return [s.rule.split(":")[1] for s in result.trace if not s.is_fallback]


def demo_without(*names, hierarchy=None):
    m = load_rule_file(data_path("demo_rules.trl"))
    keep = tuple(r for r in m.rules if r.id.split(":")[1] not in names)
    return compile_rules([replace(m, rules=keep)], "fwd", hierarchy)


# -- apply_rule ------------------------------------------------------------------------


def test_apply_lexical_rule_on_bei_example(passen_bei):
    echt = next(r for r in program("[L:echt(I)] <-> [L:real(I)].").rules)
    s0 = TransferState.start(passen_bei)
    s1 = apply_rule(s0, echt, {"L": Term("l1"), "I": Term("l2")})
    assert set(s0.remaining) - set(s1.remaining) == {parse_vit("vit{sem:[l1:echt(l2)]}").sem[0]}
    assert [str(c) for c in s1.emitted] == ["l1:real(l2)"]
    assert len(s1.trace) == 1 and s1.trace[0].rule == "main:r1"


def test_apply_rule_abstract_example():
    (r1,) = program("[x:a(), x:b()] -> [x:d()].").rules
    s1 = apply_rule(TransferState.start(semset("x:a(), x:b(), x:c()")), r1, {})
    assert s1.remaining == semset("x:c()")
    assert SemSet(s1.emitted) == semset("x:d()")


def test_apply_rule_full_consumption():
    (r,) = program("[L:a(X), L:b(X)] -> [L:c(X)].").rules
    s = apply_rule(TransferState.start(semset("l1:a(i1), l1:b(i1)")), r, {"L": Term("l1"), "X": Term("i1")})
    assert s.final and [str(c) for c in s.emitted] == ["l1:c(i1)"]


def test_apply_rule_requires_present_conditions():
    (r,) = program("[L:a(X)] -> [L:c(X)].").rules
    with pytest.raises(ValueError):
        apply_rule(TransferState.start(semset("l1:b(i1)")), r, {"L": Term("l1"), "X": Term("i1")})


# -- golden bei example and overriding --------------------------------------------------------


def test_golden_bei(demo_fwd, passen_bei):
    res = transfer(passen_bei, demo_fwd)
    assert res.output.sem == GOLDEN_BEI
    assert res.trace_text() == GOLDEN_BEI_TRACE
    assert res.output.extras == {"tense": "pres"}
    assert "passen_suit" not in fired(res)


def test_golden_bei_with_shorter_rule(passen_bei, demo_sorts):
    # without the arg3 variant, the shorter bei rule handles the bei-phrase and arg3 passes through
    res = transfer(passen_bei, demo_without("passen_bei_arg3", hierarchy=demo_sorts))
    assert res.output.sem == GOLDEN_BEI
    assert "passen_bei" in fired(res) and "passen_suit" not in fired(res)


def test_dative_variant_fires_general_rule(demo_fwd):
    res = transfer(vit(VARIANT_DATIVE), demo_fwd)
    assert "passen_suit" in fired(res) and "passen_bei" not in fired(res) and "passen_bei_arg3" not in fired(res)
    assert res.output.sem == semset(
        "l1:real(l2), l2:neg(t1), t1:good(i1), l3:suit(i1), l3:arg3(i1,i2), "
        "l3:arg1(i1,i3), l4:pron(i2), l6:pron(i3)"
    )


def test_coindexation_preserved(demo_fwd, passen_bei):
    out = transfer(passen_bei, demo_fwd).output.sem
    markers = {"i1", "i2", "i3"}
    for m in markers:
        src = {c.label.functor for c in passen_bei.sem if Term(m) in c.body.args}
        dst = {c.label.functor for c in out if Term(m) in c.body.args}
        # every marker shared in the source is still shared in the target
        assert (len(src) > 1) <= (len(dst) > 1)
    assert {c.body.functor for c in out if Term("i1") in c.body.args} == {"good", "suit", "arg3", "arg2"}


def test_context_sees_consumed_conditions(demo_fwd, passen_bei):
    # the bei rule consumes passen before schlecht is selected; the context rule must still see it
    res = transfer(passen_bei, demo_fwd)
    order = fired(res)
    assert order.index("passen_bei_arg3") < order.index("schlecht_not_good")


def test_derive_all_on_bei_example(demo_fwd, passen_bei):
    ds = derive_all(passen_bei, demo_fwd)
    assert len(ds.results) == 2 and not ds.truncated
    assert GOLDEN_BEI in ds.outputs()
    assert any("bad" in str(o) for o in ds.outputs())


# -- sorts, classes, scope -------------------------------------------------------------


@pytest.mark.parametrize(
    "sort,expected",
    [(None, "appointment"), ("day", "appointment"), ("temp_point", "appointment"), ("appointment_sort", "date")],
)
def test_sort_conditioned_choice(demo_fwd, sort, expected):
    v = vit("l1:termin(i1)", sorts={"i1": sort} if sort else {})
    out = transfer(v, demo_fwd).output
    assert [c.body.functor for c in out.sem] == [expected]
    assert out.sorts == ({"i1": sort} if sort else {})


def test_unsorted_marker_has_single_derivation(demo_fwd):
    ds = derive_all(vit("l1:termin(i1)"), demo_fwd)
    assert ds.outputs() == [semset("l1:appointment(i1)")]


def test_class_collocation(demo_fwd):
    out = transfer(vit("l1:termin(i1), l2:anbieten(i2), l2:arg3(i2,i1)"), demo_fwd).output.sem
    assert out == semset("l1:date(i1), l2:anbieten(i2), l2:arg3(i2,i1)")
    out = transfer(vit("l1:termin(i1), l2:haben(i2), l2:arg3(i2,i1)"), demo_fwd).output.sem
    assert out == semset("l1:appointment(i1), l2:haben(i2), l2:arg3(i2,i1)")


NOCH = "l1:noch(l2,h1), l2:vereinbaren(i2), l3:indef(i1,l4,{s}), l4:treffen(i1)"


def test_noch_in_focus_becomes_another(demo_fwd):
    res = transfer(vit(NOCH.format(s="h1"), scope=[("l3", "l2")]), demo_fwd)
    assert fired(res) == ["noch_another"]
    assert res.output.sem == semset("l1:another(i1,l4,h1), l2:vereinbaren(i2), l4:treffen(i1)")


def test_noch_without_subordination_is_still(demo_fwd):
    res = transfer(vit(NOCH.format(s="h1")), demo_fwd)
    assert fired(res) == ["noch_still"]


def test_eq_with_distinct_scopes_blocks(demo_fwd):
    res = transfer(vit(NOCH.format(s="h2"), scope=[("l3", "l2")]), demo_fwd)
    assert fired(res) == ["noch_still"]


def test_eq_binds_free_side():
    p = program("[L:a(X)] -> [L:b(X, Y), eq(X, Y)].")
    assert transfer(vit("l1:a(i1)"), p).output.sem == semset("l1:b(i1,i1)")
    p = program("[L:a(X)] -> [L:b(Y, Z), eq(Y, Z)].")
    assert transfer(vit("l1:a(i1)"), p).output.sem == semset("l1:b(t1,t1)")


def test_scope_and_sorts_follow_surviving_constants():
    p = program("[L:a(X)] -> [L:b(X)].\n[L:c(X)] -> [].")
    v = vit("l1:a(i1), l2:c(i2), l3:d(l1)", scope=[("l1", "l3"), ("l2", "l3")], sorts={"i1": "x", "i2": "y"})
    out = transfer(v, p).output
    assert [tuple(s) for s in out.scope] == [("l1", "l3")]
    assert out.sorts == {"i1": "x"}


# -- fallback policies and search ------------------------------------------------------


def test_copy_fallback_is_identity():
    v = vit("l1:a(i1), l2:b(i2)")
    res = transfer(v, program(""))
    assert res.output.sem == v.sem
    assert all(s.is_fallback for s in res.trace) and len(res.trace) == 2
    assert res.trace_text() == "FALLBACK l1:a(i1)\nFALLBACK l2:b(i2)\n"


def test_drop_fallback():
    res = transfer(vit("l1:a(i1), l2:b(i2)"), program("[L:a(X)] -> [L:z(X)]."), policy="drop")
    assert res.output.sem == semset("l1:z(i1)")
    assert str(res.trace[-1]) == "FALLBACK l2:b(i2) dropped"


def test_error_fallback_names_stuck_condition():
    with pytest.raises(TransferError) as ei:
        transfer(vit("l1:a(i1), l2:b(i2)"), program("[L:a(X)] -> [L:z(X)]."), policy=FallbackPolicy.ERROR)
    assert str(ei.value.stuck) == "l2:b(i2)"
    assert "l2:b(i2)" in str(ei.value)


BACKTRACK = "[x:a(), x:b()] -> [x:d()].\n[x:a()] -> [x:e()].\n[x:b(), x:c()] -> [x:f()]."


def test_greedy_under_copy_backtracking_under_error():
    v = vit("x:a(), x:b(), x:c()")
    p = program(BACKTRACK)
    assert transfer(v, p).output.sem == semset("x:c(), x:d()")
    res = transfer(v, p, policy="error")
    assert res.output.sem == semset("x:e(), x:f()")
    assert res.stats.backtracks == 1


def test_abstract_example_unique_derivation():
    p = program("[x:a(), x:b()] -> [x:d()].\n[x:c()] -> [x:e()].")
    v = vit("x:a(), x:b(), x:c()")
    assert transfer(v, p, policy="error").output.sem == semset("x:d(), x:e()")
    ds = derive_all(v, p, policy="error")
    assert ds.outputs() == [semset("x:d(), x:e()")]


def test_identical_lhs_different_rhs():
    p = program("[L:a(X)] -> [L:b(X)].\n[L:a(X)] -> [L:c(X)].")
    v = vit("l1:a(i1)")
    assert transfer(v, p).output.sem == semset("l1:b(i1)")
    assert sorted(map(str, derive_all(v, p).outputs())) == ["SemSet([l1:b(i1)])", "SemSet([l1:c(i1)])"]


def test_derive_all_limit():
    p = program("[L:a(X)] -> [L:b(X)].\n[L:a(X)] -> [L:c(X)].")
    ds = derive_all(vit("l1:a(i1), l2:a(i2)"), p, limit=2)
    assert ds.truncated and len(ds.results) <= 2
    assert len(derive_all(vit("l1:a(i1), l2:a(i2)"), p).results) == 4


def test_selected_condition_may_match_later_pattern():
    p = program("[L:a(X), L:a(i1)] -> [L:b(X)].")
    res = transfer(vit("l:a(i1), l:a(i2)"), p, policy="error")
    assert res.output.sem == semset("l:b(i2)")


def test_lhs_elements_are_distinct():
    p = program("[L:a(X), M:a(X)] -> [L:b(X)].")
    with pytest.raises(TransferError):
        transfer(vit("l1:a(i1)"), p, policy="error")


def test_rejected_candidates_recorded(demo_fwd):
    res = transfer(vit("l1:termin(i1)"), demo_fwd)
    assert res.trace[0].rejected == ("de_en:termin_date_verb", "de_en:termin_date_sort")
    assert res.stats.rules_tried == 3 and res.stats.rules_fired == 1


def test_replay_reproduces_final_state(demo_fwd, passen_bei):
    res = transfer(passen_bei, demo_fwd)
    end = replay(passen_bei.sem, res.trace)
    assert end.final and SemSet(end.emitted) == res.output.sem


def test_repeated_calls_identical(demo_fwd, passen_bei):
    a = transfer(passen_bei, demo_fwd)
    b = transfer(passen_bei, demo_fwd)
    assert a.output == b.output and a.trace_text() == b.trace_text()


def test_invalid_input_rejected(demo_fwd):
    with pytest.raises(VitValidationError):
        transfer(Vit(SemSet()), demo_fwd)
    with pytest.raises(VitValidationError):
        transfer(vit("l1:termin(i1)", sorts={"i1": "nonsense"}), demo_fwd)


def test_backward_transfer(demo_module):
    bwd = compile_rules([demo_module], "bwd")
    v = vit("l1:real(l2), l2:neg(l7), l7:good(i1), l3:suit(i1), l3:arg3(i1,i2), l3:arg2(i1,i3)")
    out = transfer(v, bwd).output.sem
    assert out == semset("l1:echt(l2), l2:schlecht(i1), l3:passen(i1), l3:arg3(i1,i2), t1:bei(i1,i3)")


# -- hooks -----------------------------------------------------------------------------


def test_hook_condition_and_binding():
    p = program("[L:a(X)], [check(X, Y)] -> [L:b(X, Y)].")
    hooks = HookRegistry()
    hooks.register("check", lambda args, v, st: {"Y": Term("i9")} if args[0] == Term("i1") else False)
    assert transfer(vit("l1:a(i1)"), p, hooks).output.sem == semset("l1:b(i1,i9)")
    assert transfer(vit("l1:a(i2)"), p, hooks).output.sem == semset("l1:a(i2)")


def test_hook_errors():
    p = program("[L:a(X)], [check(X)] -> [L:b(X)].")
    with pytest.raises(HookError, match="no hook"):
        transfer(vit("l1:a(i1)"), p)
    hooks = HookRegistry()
    hooks.register("check", lambda args, v, st: 1 / 0)
    with pytest.raises(HookError, match="failed"):
        transfer(vit("l1:a(i1)"), p, hooks)


def test_subordination_hook_can_be_replaced(demo_fwd):
    hooks = HookRegistry()
    hooks.register(SUBORDINATED, lambda args, v, st: True)
    res = transfer(vit(NOCH.format(s="h1")), demo_fwd, hooks)
    assert fired(res) == ["noch_another"]


def test_exclusive_hook_across_threads():
    p = program("[L:a(X)], [count(X)] -> [L:b(X)].")
    seen = []
    hooks = HookRegistry()
    hooks.register("count", lambda args, v, st: seen.append(args[0]) or True, exclusive=True)
    threads = [threading.Thread(target=transfer, args=(vit(f"l1:a(i{k})"), p, hooks)) for k in range(1, 9)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(map(str, seen)) == [f"i{k}" for k in range(1, 9)]
