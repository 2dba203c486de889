"""
Canonic single-clock timed automata and their symbolic semantics.

Every edge resets the one clock `c`, guards are `c<M` or `c=M` and the only
invariant is `c<=M`. The clock therefore always measures the time since the
last visible action, and every delay in [0, M) behaves the same. Delays are
quotiented into two classes: `before_m` for [0, M) and `at_m` for exactly M.
`concrete_after` interprets guards, invariants and resets over exact
rational delays and serves as the reference the quotient is checked against.
"""

import enum
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

from tioco_lab.lts import DELTA, NAME_PATTERN, Alphabet, parse_label, trace_key
from tioco_lab.utils import (
    ClockParameterError,
    NotCanonicError,
    UnknownLabelError,
    UnknownStateError,
    format_rational,
    logger,
)

CLOCK = "c"


class ClockConstraint(enum.Enum):
    lt_m = "c<M"
    eq_m = "c=M"
    le_m = "c<=M"

    def holds(self, value, m):
        if self is ClockConstraint.lt_m:
            return value < m
        if self is ClockConstraint.eq_m:
            return value == m
        return value <= m


class DelayClass(enum.Enum):
    before_m = 1
    at_m = 2

    def __str__(self):
        return "<M" if self is DelayClass.before_m else "=M"


def delay_class_of(delay, m):
    """Symbolic class of a concrete delay, None when the delay exceeds M."""
    delay = Fraction(delay)
    if delay < 0:
        raise ValueError("delays are non-negative")
    if delay < m:
        return DelayClass.before_m
    if delay == m:
        return DelayClass.at_m
    return None


class TimedStep(NamedTuple):
    delay: DelayClass
    label: object

    def __str__(self):
        return f"({self.delay},{self.label})"


def canonical_step(label):
    """The delay class a label carries in canonic automata."""
    return TimedStep(DelayClass.at_m if label.is_delta else DelayClass.before_m, label)


def guard_for(label):
    return ClockConstraint.eq_m if label.is_delta else ClockConstraint.lt_m


class TimedEdge(NamedTuple):
    source: str
    label: object
    guard: ClockConstraint
    resets: frozenset
    target: str


@dataclass(frozen=True)
class TimedAutomaton:
    locations: tuple
    initial: str
    alphabet: Alphabet
    m: Fraction
    invariants: tuple = ()
    edges: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(sorted(set(self.locations))))
        object.__setattr__(self, "m", Fraction(self.m))
        invariants = dict(self.invariants)
        object.__setattr__(self, "invariants", tuple(sorted(invariants.items())))
        object.__setattr__(
            self,
            "edges",
            frozenset(
                TimedEdge(s, a, g, frozenset(r), t) for s, a, g, r, t in self.edges
            ),
        )

    @cached_property
    def invariant_of(self):
        return dict(self.invariants)

    @cached_property
    def _location_set(self):
        return frozenset(self.locations)

    @cached_property
    def _outgoing(self):
        table = {l: [] for l in self.locations}
        for edge in self.edges:
            table.setdefault(edge.source, []).append(edge)
        return {
            l: tuple(sorted(es, key=lambda e: (e.label, e.target)))
            for l, es in table.items()
        }

    @cached_property
    def _quiescent(self):
        return frozenset(
            l
            for l in self.locations
            if not any(e.label.is_output for e in self._outgoing.get(l, ()))
        )

    def outgoing(self, location):
        return self._outgoing.get(location, ())

    @property
    def observables(self):
        return self.alphabet.observables

    def sorted_edges(self):
        return sorted(self.edges, key=lambda e: (e.source, e.label, e.target))


def edge_text(edge):
    label = "delta" if edge.label.is_delta else str(edge.label)
    resets = ",".join(sorted(edge.resets))
    return f"{edge.source} {label} [{edge.guard.value}] {{{resets}}} {edge.target}"


def _structural_violations(ta, sinks=frozenset()):
    problems = list(ta.alphabet.violations())
    if ta.m <= 0:
        problems.append(f"M must be positive, got {format_rational(ta.m)}")
    locations = ta._location_set
    for location in ta.locations:
        if not NAME_PATTERN.match(location):
            problems.append(f"location name `{location}` is not a valid token")
    if ta.initial not in locations:
        problems.append(f"initial location `{ta.initial}` is not declared")
    for location, constraint in ta.invariants:
        if location not in locations:
            problems.append(f"invariant on undeclared location `{location}`")
    for location in ta.locations:
        if location in sinks:
            continue
        if ta.invariant_of.get(location) is not ClockConstraint.le_m:
            problems.append(f"location `{location}` must carry invariant c<=M")
    for edge in ta.sorted_edges():
        text = edge_text(edge)
        if edge.source not in locations or edge.target not in locations:
            problems.append(f"edge `{text}` has an undeclared endpoint")
        if not edge.label.is_delta and edge.label not in ta.alphabet:
            problems.append(f"edge `{text}` uses a label outside the alphabet")
        if edge.resets != frozenset([CLOCK]):
            problems.append(f"edge `{text}` must reset exactly {{{CLOCK}}}")
        if edge.guard is not guard_for(edge.label):
            problems.append(f"edge `{text}` must be guarded by {guard_for(edge.label).value}")
    return problems


def validate_canonic(ta):
    """Violations of the canonic shape; empty means canonic."""
    problems = _structural_violations(ta)
    for edge in ta.sorted_edges():
        if edge.label.is_delta:
            if edge.source != edge.target:
                problems.append(f"δ-edge `{edge_text(edge)}` must be a self-loop")
            elif edge.source not in ta._quiescent:
                problems.append(f"δ-edge on non-quiescent location `{edge.source}`")
    return problems


def require_canonic(ta):
    problems = validate_canonic(ta)
    if problems:
        raise NotCanonicError(problems)


def is_lift_image(ta):
    """Canonic, with δ-loops on exactly the quiescent locations."""
    if validate_canonic(ta):
        return False
    looped = {e.source for e in ta.edges if e.label.is_delta}
    return looped == set(ta._quiescent)


def is_quiescent_location(ta, location):
    if location not in ta._location_set:
        raise UnknownStateError(location)
    return location in ta._quiescent


def _check_label(ta, label):
    if not label.is_delta and label not in ta.alphabet:
        raise UnknownLabelError(label)


def after_m(ta, q, step):
    """Locations reached from q by one symbolic step.

    δ is observed through the `c=M` δ-edges; on automata produced by `lift`
    those sit exactly on the quiescent locations.
    """
    delay, label = step
    _check_label(ta, label)
    guard = ClockConstraint.eq_m if delay is DelayClass.at_m else ClockConstraint.lt_m
    if delay is DelayClass.at_m and not label.is_delta:
        return frozenset()
    if delay is DelayClass.before_m and label.is_delta:
        return frozenset()
    result = set()
    for location in q:
        for edge in ta.outgoing(location):
            if edge.label == label and edge.guard is guard:
                result.add(edge.target)
    return frozenset(result)


def after_m_trace(ta, trace, q=None):
    current = frozenset([ta.initial]) if q is None else frozenset(q)
    for step in trace:
        if not current:
            break
        current = after_m(ta, current, step)
    return current


def out_m(ta, q):
    result = set()
    for location in q:
        for edge in ta.outgoing(location):
            if edge.label.is_output and edge.guard is ClockConstraint.lt_m:
                result.add(TimedStep(DelayClass.before_m, edge.label))
            elif edge.label.is_delta and edge.guard is ClockConstraint.eq_m:
                result.add(TimedStep(DelayClass.at_m, DELTA))
    return frozenset(result)


def out_labels_m(ta, q):
    return frozenset(step.label for step in out_m(ta, q))


def in_m(ta, q):
    return frozenset(
        edge.label
        for location in q
        for edge in ta.outgoing(location)
        if edge.label.is_input and edge.guard is ClockConstraint.lt_m
    )


def is_iota(ta):
    return all(
        any(
            e.label == label and e.guard is ClockConstraint.lt_m
            for e in ta.outgoing(location)
        )
        for location in ta.locations
        for label in ta.alphabet.inputs
    )


def timed_trace_key(trace):
    return trace_key(tuple(step.label for step in trace))


def sttraces_upto(ta, depth):
    """Symbolic suspended timed traces of length <= depth."""
    found = [()]
    frontier = deque([((), frozenset([ta.initial]))])
    while frontier:
        trace, q = frontier.popleft()
        if len(trace) >= depth:
            continue
        for label in ta.observables:
            for delay in DelayClass:
                nxt = after_m(ta, q, TimedStep(delay, label))
                if nxt:
                    extended = trace + (TimedStep(delay, label),)
                    found.append(extended)
                    frontier.append((extended, nxt))
    logger.debug(f"enumerated {len(found)} timed traces up to depth {depth}")
    return tuple(sorted(found, key=timed_trace_key))


def format_timed_trace(trace):
    return " ".join(str(step) for step in trace) if trace else "ε"


def parse_timed_trace(text):
    """Inverse of format_timed_trace: `(<M,i?) (=M,δ)`."""
    tokens = text.split()
    if tokens in ([], ["ε"]):
        return ()
    steps = []
    for token in tokens:
        delay_text, _, label_text = token.strip("()").partition(",")
        delay = {"<M": DelayClass.before_m, "=M": DelayClass.at_m}[delay_text]
        steps.append(TimedStep(delay, parse_label(label_text)))
    return tuple(steps)


# -----------------------------------------------------------------------------
# concrete-delay reference semantics


def concrete_initial(ta):
    return frozenset([(ta.initial, Fraction(0))])


def concrete_after(ta, configurations, delay, label):
    """Successor configurations (location, clock value) after waiting `delay`
    and then taking `label`."""
    delay = Fraction(delay)
    if ta.m <= 0:
        raise ClockParameterError("M must be positive")
    result = set()
    for location, clock in configurations:
        elapsed = clock + delay
        invariant = ta.invariant_of.get(location)
        # c<=M is convex, so checking the end of the delay covers all of it
        if invariant is not None and not invariant.holds(elapsed, ta.m):
            continue
        for edge in ta.outgoing(location):
            if edge.label != label or not edge.guard.holds(elapsed, ta.m):
                continue
            value = Fraction(0) if CLOCK in edge.resets else elapsed
            target_invariant = ta.invariant_of.get(edge.target)
            if target_invariant is not None and not target_invariant.holds(value, ta.m):
                continue
            result.add((edge.target, value))
    return frozenset(result)


def concrete_locations(configurations):
    return frozenset(location for location, _ in configurations)
