from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import load_figure, lts_models
from tioco_lab.lift import (
    lift,
    lift_outputs,
    lift_trace,
    project_outputs,
    project_ta,
    project_trace,
)
from tioco_lab.lts import DELTA, Lts, after, inp, out, straces_upto
from tioco_lab.timed import (
    ClockConstraint,
    DelayClass,
    TimedStep,
    is_lift_image,
    sttraces_upto,
    validate_canonic,
)
from tioco_lab.utils import ClockParameterError, InvalidModelError, NotCanonicError

m_values = st.sampled_from([Fraction(1), Fraction(3, 2), Fraction(5)])


def test_lift_matches_golden_file(model_a):
    assert lift(model_a, 2) == load_figure("A_m2.ta")


def test_lift_shape(model_a):
    ta = lift(model_a, Fraction(3, 2))
    assert ta.locations == model_a.states
    assert ta.initial == model_a.initial
    assert ta.m == Fraction(3, 2)
    assert all(c is ClockConstraint.le_m for _, c in ta.invariants)
    looped = sorted(e.source for e in ta.edges if e.label is DELTA)
    assert looped == ["s0", "s2", "s3", "s5", "s6"]
    assert len(ta.edges) == len(model_a.transitions) + 5


def test_lift_single_state():
    ta = lift(Lts.build("s0", [], [], []), 1)
    assert ta.locations == ("s0",)
    assert ta.invariant_of == {"s0": ClockConstraint.le_m}
    (edge,) = ta.edges
    assert edge.label is DELTA and edge.guard is ClockConstraint.eq_m


def test_lift_rejects_bad_m(model_a):
    with pytest.raises(ClockParameterError):
        lift(model_a, 0)
    with pytest.raises(ClockParameterError):
        lift(model_a, Fraction(-1, 2))


def test_lift_rejects_delta_edges():
    model = Lts.build("s0", [], [], [("s0", "delta", "s0")], explicit_delta=True)
    with pytest.raises(InvalidModelError):
        lift(model, 1)


def test_drop_delta_loops_leaves_a_non_image(model_a):
    ta = lift(model_a, 2, drop_delta_loops=True)
    assert not any(e.label.is_delta for e in ta.edges)
    assert validate_canonic(ta) == []
    assert not is_lift_image(ta)
    assert is_lift_image(lift(model_a, 2))


def test_project_keeps_delta_as_edges(model_a):
    projected = project_ta(lift(model_a, 2))
    assert projected.explicit_delta
    assert after(projected, {"s1", "s2"}, DELTA) == {"s2"}
    assert len(projected.transitions) == 11


def test_project_rejects_non_canonic(model_a):
    ta = lift(model_a, 2)
    broken = type(ta)(ta.locations, ta.initial, ta.alphabet, ta.m, (), ta.edges)
    with pytest.raises(NotCanonicError):
        project_ta(broken)


def test_trace_lifting():
    trace = (inp("i"), DELTA, inp("i"))
    lifted = lift_trace(trace)
    assert lifted == (
        TimedStep(DelayClass.before_m, inp("i")),
        TimedStep(DelayClass.at_m, DELTA),
        TimedStep(DelayClass.before_m, inp("i")),
    )
    assert project_trace(lifted) == trace
    outputs = frozenset([out("o"), DELTA])
    assert project_outputs(lift_outputs(outputs)) == outputs


@given(lts_models, m_values)
def test_lifting_traces_gives_the_timed_traces(model, m):
    ta = lift(model, m)
    lifted = {lift_trace(t) for t in straces_upto(model, 4)}
    assert lifted == set(sttraces_upto(ta, 4))


@given(lts_models, m_values)
def test_project_after_lift_is_identity_up_to_delta(model, m):
    projected = project_ta(lift(model, m))
    assert projected.states == model.states
    assert projected.initial == model.initial
    for state in model.states:
        for label in model.observables:
            assert after(projected, {state}, label) == after(model, {state}, label)


@given(lts_models)
def test_traces_do_not_depend_on_m(model):
    traces = [sttraces_upto(lift(model, m), 3) for m in (1, Fraction(3, 2), 5)]
    assert traces[0] == traces[1] == traces[2]
