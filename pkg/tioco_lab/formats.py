"""
Line-oriented text format for models and tests, plus DOT export.

    lts                     ta
    inputs: i               M: 2
    outputs: o, o_prime     inputs: i
    init: s0                outputs: o
    s0 i? s1                init: s0
    s1 o! s3                inv s0: c<=M
                            s0 i? [c<M] {c} s1
                            s0 delta [c=M] {c} s0

`lts+delta` marks a δ-materialized LTS (the result of projecting a timed
automaton); `test lts` and `test ta` mark test cases, whose sinks are the
reserved states `pass` and `fail`. `#` starts a comment. Serialization is
canonical: labels, states, invariants and transitions are sorted, and a
`states:` header only appears when some state is mentioned nowhere else.
"""

import re

from tioco_lab.lts import (
    DELTA,
    DELTA_NAME,
    NAME_PATTERN,
    Alphabet,
    Lts,
    Transition,
    inp,
    out,
    validate_lts,
)
from tioco_lab.testing import (
    FAIL,
    PASS,
    TestCase,
    TimedTestCase,
    validate_test_structure,
    validate_test_ta_structure,
)
from tioco_lab.timed import (
    ClockConstraint,
    TimedAutomaton,
    TimedEdge,
    validate_canonic,
)
from tioco_lab.utils import (
    FormatError,
    InvalidModelError,
    NotCanonicError,
    format_rational,
    parse_rational,
)

KINDS = ("lts", "lts+delta", "ta", "test lts", "test ta")
_TOKEN = re.compile(r"\S+")


class _Line:
    def __init__(self, number, text):
        self.number = number
        self.text = text
        self.tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(text)]

    def error(self, message, column=1):
        return FormatError(message, self.number, column)


def _content_lines(text):
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if body.strip():
            yield _Line(number, body)


def _names(line, value_column, value):
    names = [n.strip() for n in value.split(",")] if value.strip() else []
    for name in names:
        if not NAME_PATTERN.match(name):
            raise line.error(f"`{name}` is not a valid name", value_column)
    if len(set(names)) != len(names):
        raise line.error("duplicate name in list", value_column)
    return names


class _Reader:
    """Collects headers and raw transition lines of one file."""

    HEADERS = ("inputs", "outputs", "init", "states", "M")

    def __init__(self, text):
        lines = list(_content_lines(text))
        if not lines:
            raise FormatError("empty model file", 1, 1)
        self.kind = " ".join(tok for tok, _ in lines[0].tokens)
        if self.kind not in KINDS:
            raise lines[0].error(
                f"unknown model kind `{self.kind}`, expected one of {', '.join(KINDS)}"
            )
        self.headers = {}
        self.invariants = []
        self.body = []
        for line in lines[1:]:
            head, sep, value = line.text.partition(":")
            key = head.strip()
            if sep and key in self.HEADERS:
                if key in self.headers:
                    raise line.error(f"duplicate header `{key}`")
                column = len(head) + 2
                self.headers[key] = (line, column, value)
            elif key.startswith("inv ") and sep:
                self.invariants.append(line)
            else:
                self.body.append(line)
        for key in ("inputs", "outputs", "init"):
            if key not in self.headers:
                raise FormatError(f"missing `{key}:` header", lines[0].number, 1)
        self.timed = self.kind in ("ta", "test ta")
        self.test = self.kind.startswith("test")
        self.delta_allowed = self.test or self.kind in ("ta", "lts+delta")
        if self.timed and "M" not in self.headers:
            raise FormatError("missing `M:` header", lines[0].number, 1)
        if not self.timed and "M" in self.headers:
            line, column, _ = self.headers["M"]
            raise line.error("`M:` only belongs in timed files", column)

    def names(self, key):
        line, column, value = self.headers[key]
        return _names(line, column, value)

    def alphabet(self):
        inputs = self.names("inputs")
        outputs = self.names("outputs")
        self.kinds = {n: inp(n) for n in inputs}
        for name in outputs:
            if name in self.kinds:
                line, column, _ = self.headers["outputs"]
                raise line.error(f"`{name}` is both an input and an output", column)
            self.kinds[name] = out(name)
        return Alphabet(tuple(inp(n) for n in inputs), tuple(out(n) for n in outputs))

    def initial(self):
        names = self.names("init")
        if len(names) != 1:
            line, column, _ = self.headers["init"]
            raise line.error("`init:` takes exactly one state", column)
        return names[0]

    def declared_states(self):
        return set(self.names("states")) if "states" in self.headers else set()

    def label(self, line, token, column):
        if token == DELTA_NAME:
            if not self.delta_allowed:
                raise line.error("`delta` edges are not allowed in plain lts files", column)
            return DELTA
        name, suffix = token[:-1], token[-1:]
        if suffix not in ("?", "!"):
            raise line.error(f"label `{token}` needs a `?` or `!` suffix", column)
        label = self.kinds.get(name)
        if label is None:
            raise line.error(f"label `{name}` is not declared", column)
        expected = "?" if label.is_input else "!"
        if suffix != expected:
            declared = "an input" if label.is_input else "an output"
            raise line.error(f"label `{name}` is declared as {declared}", column)
        return label

    def state(self, line, token, column):
        if not NAME_PATTERN.match(token):
            raise line.error(f"`{token}` is not a valid state name", column)
        return token


def _parse_lts(reader):
    alphabet = reader.alphabet()
    initial = reader.initial()
    states = reader.declared_states() | {initial}
    transitions = set()
    for line in reader.body:
        if len(line.tokens) != 3:
            raise line.error("expected `source label target`")
        (src, c1), (tok, c2), (tgt, c3) = line.tokens
        transition = Transition(
            reader.state(line, src, c1), reader.label(line, tok, c2), reader.state(line, tgt, c3)
        )
        if transition in transitions:
            raise line.error("duplicate transition")
        transitions.add(transition)
        states.update((transition.source, transition.target))
    if reader.invariants:
        raise reader.invariants[0].error("invariants only belong in timed files")
    return Lts(tuple(states), initial, alphabet, frozenset(transitions), reader.delta_allowed)


def _guard(line, token, column):
    inner = token[1:-1] if token.startswith("[") and token.endswith("]") else None
    try:
        return ClockConstraint(inner)
    except ValueError:
        raise line.error(f"unknown guard `{token}`", column) from None


def _resets(line, token, column):
    if not (token.startswith("{") and token.endswith("}")):
        raise line.error(f"expected a reset set like `{{c}}`, got `{token}`", column)
    return frozenset(c.strip() for c in token[1:-1].split(",") if c.strip())


def _parse_ta(reader):
    alphabet = reader.alphabet()
    initial = reader.initial()
    line, column, value = reader.headers["M"]
    try:
        m = parse_rational(value)
    except ValueError as e:
        raise line.error(str(e), column) from None
    locations = reader.declared_states() | {initial}
    invariants = {}
    for line in reader.invariants:
        head, _, constraint = line.text.partition(":")
        parts = head.split()
        if len(parts) != 2:
            raise line.error("expected `inv location: c<=M`")
        location = reader.state(line, parts[1], head.index(parts[1]) + 1)
        if location in invariants:
            raise line.error(f"duplicate invariant for `{location}`")
        try:
            invariants[location] = ClockConstraint(constraint.strip())
        except ValueError:
            raise line.error(f"unknown invariant `{constraint.strip()}`", len(head) + 2) from None
        locations.add(location)
    edges = set()
    for line in reader.body:
        if len(line.tokens) != 5:
            raise line.error("expected `source label [guard] {resets} target`")
        (src, c1), (tok, c2), (grd, c3), (rst, c4), (tgt, c5) = line.tokens
        edge = TimedEdge(
            reader.state(line, src, c1),
            reader.label(line, tok, c2),
            _guard(line, grd, c3),
            _resets(line, rst, c4),
            reader.state(line, tgt, c5),
        )
        if edge in edges:
            raise line.error("duplicate transition")
        edges.add(edge)
        locations.update((edge.source, edge.target))
    return TimedAutomaton(
        locations=tuple(locations),
        initial=initial,
        alphabet=alphabet,
        m=m,
        invariants=tuple(invariants.items()),
        edges=frozenset(edges),
    )


def parse(text, validate=True):
    """Parse any model file; with `validate` the matching validator must pass."""
    reader = _Reader(text)
    if reader.timed:
        value = _parse_ta(reader)
        if reader.test:
            value = TimedTestCase(value)
    else:
        value = _parse_lts(reader)
        if reader.test:
            value = TestCase(value)
    if validate:
        _validate(value)
    return value


def _validate(value):
    if isinstance(value, TestCase):
        problems = validate_test_structure(value)
    elif isinstance(value, TimedTestCase):
        problems = validate_test_ta_structure(value)
    elif isinstance(value, TimedAutomaton):
        problems = validate_canonic(value)
        if problems:
            raise NotCanonicError(problems)
    else:
        problems = validate_lts(value)
    if problems:
        raise InvalidModelError(problems)


def _label_token(label):
    return DELTA_NAME if label.is_delta else str(label)


def _alphabet_lines(alphabet):
    return [
        f"inputs: {', '.join(l.name for l in alphabet.inputs)}".rstrip(),
        f"outputs: {', '.join(l.name for l in alphabet.outputs)}".rstrip(),
    ]


def _states_line(states, implied):
    if set(states) <= implied:
        return []
    return [f"states: {', '.join(states)}"]


def serialize(value):
    if isinstance(value, TestCase):
        return _serialize_lts(value.model, "test lts")
    if isinstance(value, TimedTestCase):
        return _serialize_ta(value.automaton, "test ta")
    if isinstance(value, TimedAutomaton):
        return _serialize_ta(value, "ta")
    if isinstance(value, Lts):
        return _serialize_lts(value, "lts+delta" if value.explicit_delta else "lts")
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _serialize_lts(model, kind):
    implied = {model.initial} | {t.source for t in model.transitions} | {
        t.target for t in model.transitions
    }
    lines = [kind, *_alphabet_lines(model.alphabet), f"init: {model.initial}"]
    lines += _states_line(model.states, implied)
    lines += [
        f"{t.source} {_label_token(t.label)} {t.target}"
        for t in model.sorted_transitions()
    ]
    return "\n".join(lines) + "\n"


def _serialize_ta(ta, kind):
    implied = (
        {ta.initial}
        | {e.source for e in ta.edges}
        | {e.target for e in ta.edges}
        | {l for l, _ in ta.invariants}
    )
    lines = [
        kind,
        f"M: {format_rational(ta.m)}",
        *_alphabet_lines(ta.alphabet),
        f"init: {ta.initial}",
    ]
    lines += _states_line(ta.locations, implied)
    lines += [f"inv {l}: {c.value}" for l, c in ta.invariants]
    for e in ta.sorted_edges():
        resets = ",".join(sorted(e.resets))
        lines.append(
            f"{e.source} {_label_token(e.label)} [{e.guard.value}] {{{resets}}} {e.target}"
        )
    return "\n".join(lines) + "\n"


# -----------------------------------------------------------------------------
# DOT


def _quote(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_line(name):
    if name == PASS:
        attrs = "shape=doublecircle, color=darkgreen, fontcolor=darkgreen"
    elif name == FAIL:
        attrs = "shape=octagon, style=filled, fillcolor=mistyrose, color=red"
    else:
        attrs = "shape=circle"
    return f"{_quote(name)} [{attrs}];"


def _dot_edges(value):
    if isinstance(value, (TimedAutomaton, TimedTestCase)):
        ta = value.automaton if isinstance(value, TimedTestCase) else value
        for e in ta.sorted_edges():
            resets = ",".join(sorted(e.resets))
            label = f"{e.label}, {e.guard.value}, {{{resets}}}"
            yield e.source, label, e.target
    else:
        model = value.model if isinstance(value, TestCase) else value
        for t in model.sorted_transitions():
            yield t.source, str(t.label), t.target


def _dot_nodes(value):
    if isinstance(value, TimedTestCase):
        return value.automaton.initial, value.automaton.locations
    if isinstance(value, TimedAutomaton):
        return value.initial, value.locations
    model = value.model if isinstance(value, TestCase) else value
    return model.initial, model.states


def export_dot(value, name="model"):
    """Render a model or test as a GraphViz digraph; output is deterministic."""
    initial, nodes = _dot_nodes(value)
    lines = [f"digraph {_quote(name)} {{", "\trankdir=LR;", ""]
    lines.append('\t"__start" [shape=point];')
    lines += [f"\t{_node_line(n)}" for n in nodes]
    lines.append("")
    lines.append(f'\t"__start" -> {_quote(initial)};')
    for source, label, target in _dot_edges(value):
        lines.append(f"\t{_quote(source)} -> {_quote(target)} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
