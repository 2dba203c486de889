from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import lts_models
from tioco_lab.lift import lift
from tioco_lab.lts import DELTA, Lts, inp, out
from tioco_lab.timed import (
    ClockConstraint,
    DelayClass,
    TimedAutomaton,
    TimedEdge,
    TimedStep,
    after_m,
    after_m_trace,
    concrete_after,
    concrete_initial,
    concrete_locations,
    delay_class_of,
    format_timed_trace,
    in_m,
    is_iota,
    is_quiescent_location,
    out_labels_m,
    out_m,
    parse_timed_trace,
    sttraces_upto,
    validate_canonic,
)
from tioco_lab.utils import UnknownLabelError, UnknownStateError

I, O, O_PRIME = inp("i"), out("o"), out("o_prime")
BEFORE, AT = DelayClass.before_m, DelayClass.at_m


@pytest.fixture
def lifted_a(model_a):
    return lift(model_a, 2)


def test_lifted_model_is_canonic(lifted_a):
    assert validate_canonic(lifted_a) == []


def test_action_guard_at_m_is_rejected(lifted_a):
    edges = set(lifted_a.edges)
    edge = next(e for e in edges if e.label == O)
    edges.discard(edge)
    edges.add(edge._replace(guard=ClockConstraint.eq_m))
    broken = TimedAutomaton(
        lifted_a.locations, lifted_a.initial, lifted_a.alphabet, 2, lifted_a.invariants, edges
    )
    assert len(validate_canonic(broken)) == 1


def test_nonpositive_m_is_rejected(lifted_a):
    broken = TimedAutomaton(
        lifted_a.locations, lifted_a.initial, lifted_a.alphabet, 0, lifted_a.invariants, lifted_a.edges
    )
    problems = validate_canonic(broken)
    assert len(problems) == 1
    assert "M must be positive" in problems[0]


def test_delta_loop_on_busy_location_is_rejected(lifted_a):
    edges = set(lifted_a.edges) | {
        TimedEdge("s4", DELTA, ClockConstraint.eq_m, frozenset(["c"]), "s4")
    }
    broken = TimedAutomaton(
        lifted_a.locations, lifted_a.initial, lifted_a.alphabet, 2, lifted_a.invariants, edges
    )
    assert any("non-quiescent" in p for p in validate_canonic(broken))


def test_quiescent_locations(lifted_a):
    assert is_quiescent_location(lifted_a, "s0")
    assert not is_quiescent_location(lifted_a, "s4")
    with pytest.raises(UnknownStateError):
        is_quiescent_location(lifted_a, "nowhere")


def test_after_m(lifted_a):
    assert after_m(lifted_a, {"s0"}, TimedStep(BEFORE, I)) == {"s1", "s2"}
    assert after_m(lifted_a, {"s1", "s2"}, TimedStep(AT, DELTA)) == {"s2"}
    assert after_m(lifted_a, {"s1"}, TimedStep(AT, O)) == frozenset()
    assert after_m(lifted_a, {"s0"}, TimedStep(BEFORE, DELTA)) == frozenset()
    with pytest.raises(UnknownLabelError):
        after_m(lifted_a, {"s0"}, TimedStep(BEFORE, inp("j")))


def test_out_m(lifted_a):
    assert out_m(lifted_a, {"s4"}) == {TimedStep(BEFORE, O), TimedStep(BEFORE, O_PRIME)}
    assert out_m(lifted_a, {"s0"}) == {TimedStep(AT, DELTA)}
    assert out_m(lifted_a, frozenset()) == frozenset()
    assert out_labels_m(lifted_a, {"s1", "s2"}) == {O, DELTA}
    assert in_m(lifted_a, {"s0", "s3"}) == {I}


def test_is_iota(model_a, model_b):
    assert is_iota(lift(model_b, 2))
    assert not is_iota(lift(model_a, 2))
    assert is_iota(lift(Lts.build("s0", [], ["o"], []), 1))


def test_sttraces_upto(lifted_a, model_d):
    assert sttraces_upto(lifted_a, 0) == ((),)
    assert sttraces_upto(lifted_a, 1) == ((), (TimedStep(AT, DELTA),), (TimedStep(BEFORE, I),))
    longer_trace = parse_timed_trace("(<M,i?) (=M,δ) (<M,i?)")
    assert longer_trace in sttraces_upto(lift(model_d, 2), 3)


def test_timed_trace_text():
    trace = (TimedStep(BEFORE, I), TimedStep(AT, DELTA))
    assert format_timed_trace(trace) == "(<M,i?) (=M,δ)"
    assert parse_timed_trace(format_timed_trace(trace)) == trace
    assert format_timed_trace(()) == "ε"


def test_delay_classes():
    m = Fraction(3, 2)
    assert delay_class_of(0, m) is BEFORE
    assert delay_class_of(Fraction(1, 2), m) is BEFORE
    assert delay_class_of(m, m) is AT
    assert delay_class_of(2, m) is None
    with pytest.raises(ValueError):
        delay_class_of(-1, m)


def test_concrete_evaluator_matches_guards(lifted_a):
    start = concrete_initial(lifted_a)
    after_input = concrete_after(lifted_a, start, Fraction(1), I)
    assert after_input == {("s1", 0), ("s2", 0)}
    # i? is only possible strictly before M
    assert concrete_after(lifted_a, start, 2, I) == frozenset()
    # quiescence is observed exactly at M
    assert concrete_locations(concrete_after(lifted_a, start, 2, DELTA)) == {"s0"}
    assert concrete_after(lifted_a, start, Fraction(19, 10), DELTA) == frozenset()
    # waiting past M violates the invariant
    assert concrete_after(lifted_a, start, 3, DELTA) == frozenset()


@given(lts_models, st.sampled_from([Fraction(1), Fraction(3, 2), Fraction(5)]))
def test_timed_traces_are_prefix_closed(model, m):
    ta = lift(model, m)
    traces = sttraces_upto(ta, 3)
    found = set(traces)
    for trace in traces:
        assert after_m_trace(ta, trace)
        assert all(trace[:k] in found for k in range(len(trace)))
        for step in trace:
            assert (step.delay is AT) == step.label.is_delta


@given(
    lts_models,
    st.sampled_from([Fraction(1), Fraction(3, 2), Fraction(5)]),
    st.fractions(min_value=0, max_value=2),
)
def test_concrete_delays_agree_with_classes(model, m, scale):
    ta = lift(model, m)
    delay = scale * m
    locations = frozenset(ta.locations)
    configs = frozenset((l, Fraction(0)) for l in locations)
    for label in ta.observables:
        concrete = concrete_locations(concrete_after(ta, configs, delay, label))
        delay_class = delay_class_of(delay, m)
        expected = after_m(ta, locations, TimedStep(delay_class, label)) if delay_class else frozenset()
        assert concrete == expected
