"""
Labelled transition systems with inputs and outputs, quiescence and
suspension traces.

Models are immutable; every operation here is a pure function. Quiescence is
a derived observation for plain models. Models that carry explicit
δ-transitions (projections of timed automata, test cases) are built with
`explicit_delta=True`, and for those the δ-edges are the δ-observation.
"""

import enum
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

from tioco_lab.utils import (
    InvalidModelError,
    NotInputEnabledError,
    UnknownLabelError,
    UnknownStateError,
    logger,
)

NAME_PATTERN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
DELTA_NAME = "delta"


class ActionKind(enum.Enum):
    input = 1
    output = 2
    delta = 3


@dataclass(frozen=True)
class ActionLabel:
    name: str
    kind: ActionKind

    def __lt__(self, other):
        return (self.name, self.kind.value) < (other.name, other.kind.value)

    def __str__(self):
        if self.kind is ActionKind.input:
            return f"{self.name}?"
        if self.kind is ActionKind.output:
            return f"{self.name}!"
        return "δ"

    @property
    def is_input(self):
        return self.kind is ActionKind.input

    @property
    def is_output(self):
        return self.kind is ActionKind.output

    @property
    def is_delta(self):
        return self.kind is ActionKind.delta


DELTA = ActionLabel(DELTA_NAME, ActionKind.delta)


def inp(name):
    return ActionLabel(name, ActionKind.input)


def out(name):
    return ActionLabel(name, ActionKind.output)


def parse_label(token):
    """`i?` -> input, `o!` -> output, `delta`/`δ` -> δ."""
    if token in (DELTA_NAME, "δ"):
        return DELTA
    if token.endswith("?"):
        return inp(token[:-1])
    if token.endswith("!"):
        return out(token[:-1])
    raise UnknownLabelError(token)


@dataclass(frozen=True)
class Alphabet:
    inputs: tuple = ()
    outputs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(sorted(set(self.inputs))))
        object.__setattr__(self, "outputs", tuple(sorted(set(self.outputs))))

    @classmethod
    def of(cls, inputs=(), outputs=()):
        return cls(tuple(inp(n) for n in inputs), tuple(out(n) for n in outputs))

    @cached_property
    def actions(self):
        return tuple(sorted(self.inputs + self.outputs))

    @cached_property
    def observables(self):
        """Act ∪ {δ} in canonical order."""
        return tuple(sorted(self.actions + (DELTA,)))

    def __contains__(self, label):
        return label in self._members

    @cached_property
    def _members(self):
        return frozenset(self.inputs) | frozenset(self.outputs)

    def violations(self):
        problems = []
        for label in self.inputs:
            if label.kind is not ActionKind.input:
                problems.append(f"label `{label}` listed as input has kind {label.kind.name}")
        for label in self.outputs:
            if label.kind is not ActionKind.output:
                problems.append(f"label `{label}` listed as output has kind {label.kind.name}")
        for label in self.inputs + self.outputs:
            if label.name == DELTA_NAME:
                problems.append("`delta` is reserved and cannot be part of an alphabet")
            elif not NAME_PATTERN.match(label.name):
                problems.append(f"label name `{label.name}` is not a valid token")
        shared = sorted({l.name for l in self.inputs} & {l.name for l in self.outputs})
        for name in shared:
            problems.append(f"label `{name}` is both an input and an output")
        return problems


class Transition(NamedTuple):
    source: str
    label: ActionLabel
    target: str


@dataclass(frozen=True)
class Lts:
    states: tuple
    initial: str
    alphabet: Alphabet
    transitions: frozenset = frozenset()
    explicit_delta: bool = False

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(sorted(set(self.states))))
        object.__setattr__(
            self, "transitions", frozenset(Transition(*t) for t in self.transitions)
        )

    @classmethod
    def build(
        cls, initial, inputs, outputs, transitions, states=None, explicit_delta=False
    ):
        """Build a model from label tokens, e.g. `("s0", "i?", "s1")`."""
        edges = [Transition(s, parse_label(a), t) for s, a, t in transitions]
        if states is None:
            states = {initial} | {e.source for e in edges} | {e.target for e in edges}
        return cls(
            tuple(states),
            initial,
            Alphabet.of(inputs, outputs),
            frozenset(edges),
            explicit_delta,
        )

    @cached_property
    def _state_set(self):
        return frozenset(self.states)

    @cached_property
    def _successors(self):
        table = {s: {} for s in self.states}
        for source, label, target in self.transitions:
            table.setdefault(source, {}).setdefault(label, set()).add(target)
        return {
            s: {a: frozenset(ts) for a, ts in by_label.items()}
            for s, by_label in table.items()
        }

    @cached_property
    def _quiescent(self):
        return frozenset(
            s
            for s in self.states
            if not any(a.is_output for a in self._successors.get(s, {}))
        )

    def successors(self, state):
        """Mapping label -> frozenset of targets for one state."""
        return self._successors.get(state, {})

    @property
    def observables(self):
        return self.alphabet.observables

    def sorted_transitions(self):
        return sorted(self.transitions, key=lambda t: (t.source, t.label, t.target))


# -----------------------------------------------------------------------------
# well-formedness


def validate_lts(model):
    """Return every violated structural invariant; empty means well-formed."""
    problems = list(model.alphabet.violations())
    states = model._state_set
    for state in model.states:
        if not NAME_PATTERN.match(state):
            problems.append(f"state name `{state}` is not a valid token")
    if model.initial not in states:
        problems.append(f"initial state `{model.initial}` is not declared")
    for source, label, target in model.sorted_transitions():
        if source not in states:
            problems.append(f"transition {source} {label} {target}: source `{source}` is not declared")
        if target not in states:
            problems.append(f"transition {source} {label} {target}: target `{target}` is not declared")
        if label.is_delta:
            if not model.explicit_delta:
                problems.append(f"transition {source} δ {target}: δ-edges need a δ-materialized model")
        elif label not in model.alphabet:
            problems.append(f"transition {source} {label} {target}: label `{label}` is not in the alphabet")
    return problems


def require_valid(model):
    problems = validate_lts(model)
    if problems:
        raise InvalidModelError(problems)


def is_input_enabled(model):
    require_valid(model)
    return all(
        label in model.successors(s)
        for s in model.states
        for label in model.alphabet.inputs
    )


def require_input_enabled(model):
    if not is_input_enabled(model):
        missing = next(
            (s, label)
            for s in model.states
            for label in model.alphabet.inputs
            if label not in model.successors(s)
        )
        raise NotInputEnabledError(
            f"state `{missing[0]}` does not accept input `{missing[1]}`"
        )


# -----------------------------------------------------------------------------
# observations


def state_set(*states):
    return frozenset(states)


def _check_state(model, state):
    if state not in model._state_set:
        raise UnknownStateError(state)


def is_quiescent_state(model, state):
    _check_state(model, state)
    return state in model._quiescent


def _shows_delta(model, state):
    if model.explicit_delta:
        return DELTA in model.successors(state)
    return state in model._quiescent


def out_set(model, q):
    """Outputs enabled somewhere in q, plus δ for quiescent members."""
    result = set()
    for s in q:
        result.update(a for a in model.successors(s) if a.is_output)
        if _shows_delta(model, s):
            result.add(DELTA)
    return frozenset(result)


def in_set(model, q):
    result = set()
    for s in q:
        result.update(a for a in model.successors(s) if a.is_input)
    return frozenset(result)


def after(model, q, label):
    if not label.is_delta and label not in model.alphabet:
        raise UnknownLabelError(label)
    if label.is_delta and not model.explicit_delta:
        return frozenset(s for s in q if s in model._quiescent)
    result = set()
    for s in q:
        result.update(model.successors(s).get(label, ()))
    return frozenset(result)


def after_trace(model, trace, q=None):
    current = frozenset([model.initial]) if q is None else frozenset(q)
    for label in trace:
        if not current:
            break
        current = after(model, current, label)
    return current


def trace_key(trace):
    return (len(trace), tuple((a.name, a.kind.value) for a in trace))


def straces_upto(model, depth):
    """All suspension traces of length <= depth, shortest first then lexicographic."""
    require_valid(model)
    found = [()]
    frontier = deque([((), frozenset([model.initial]))])
    while frontier:
        trace, q = frontier.popleft()
        if len(trace) >= depth:
            continue
        for label in model.observables:
            nxt = after(model, q, label)
            if nxt:
                extended = trace + (label,)
                found.append(extended)
                frontier.append((extended, nxt))
    logger.debug(f"enumerated {len(found)} suspension traces up to depth {depth}")
    return tuple(sorted(found, key=trace_key))


def is_prefix(prefix, trace):
    return len(prefix) <= len(trace) and tuple(trace[: len(prefix)]) == tuple(prefix)


def format_trace(trace):
    return " ".join(str(a) for a in trace) if trace else "ε"


def parse_trace(text):
    """Inverse of format_trace for untimed traces (`i? δ i?`)."""
    tokens = text.split()
    if tokens in ([], ["ε"]):
        return ()
    return tuple(parse_label(t) for t in tokens)
