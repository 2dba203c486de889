"""The χ^M lifting of LTSs into canonic timed automata and the projection back."""

from fractions import Fraction

from tioco_lab.lts import DELTA, Lts, Transition, require_valid
from tioco_lab.timed import (
    CLOCK,
    ClockConstraint,
    TimedAutomaton,
    TimedEdge,
    canonical_step,
    guard_for,
    require_canonic,
)
from tioco_lab.utils import ClockParameterError, InvalidModelError, logger


def check_m(m):
    m = Fraction(m)
    if m <= 0:
        raise ClockParameterError(f"M must be positive, got {m}")
    return m


def lift(model, m, drop_delta_loops=False):
    """χ^M: every action edge gets guard c<M, every quiescent state a δ-loop
    guarded c=M, every location the invariant c<=M, every edge resets c.

    `drop_delta_loops` omits the δ-loops. It exists only to seed a known
    defect for the theorem lab's mutation self-check.
    """
    require_valid(model)
    m = check_m(m)
    if model.explicit_delta or any(t.label.is_delta for t in model.transitions):
        raise InvalidModelError(["lift expects a model without δ-edges"])
    resets = frozenset([CLOCK])
    edges = set(lift_edges(model.transitions))
    if drop_delta_loops:
        logger.debug("lifting with δ-loops dropped")
    else:
        edges.update(
            TimedEdge(s, DELTA, ClockConstraint.eq_m, resets, s)
            for s in model.states
            if s in model._quiescent
        )
    return TimedAutomaton(
        locations=model.states,
        initial=model.initial,
        alphabet=model.alphabet,
        m=m,
        invariants=tuple((s, ClockConstraint.le_m) for s in model.states),
        edges=frozenset(edges),
    )


def projected_lts(ta):
    return Lts(
        states=ta.locations,
        initial=ta.initial,
        alphabet=ta.alphabet,
        transitions=frozenset(Transition(e.source, e.label, e.target) for e in ta.edges),
        explicit_delta=True,
    )


def project_ta(ta):
    """Drop clock, guards, invariants and resets; δ-edges stay as edges."""
    require_canonic(ta)
    return projected_lts(ta)


def project_trace(trace):
    return tuple(step.label for step in trace)


def lift_trace(trace):
    """Canonical timed representative: actions before M, δ exactly at M."""
    return tuple(canonical_step(label) for label in trace)


def lift_outputs(labels):
    return frozenset(canonical_step(label) for label in labels)


def project_outputs(steps):
    return frozenset(step.label for step in steps)


def lift_edges(transitions):
    """Canonic timed edges for untimed transitions (shared with test lifting)."""
    resets = frozenset([CLOCK])
    return frozenset(
        TimedEdge(t.source, t.label, guard_for(t.label), resets, t.target)
        for t in transitions
    )
