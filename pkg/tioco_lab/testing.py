"""
Test cases for LTS and canonic TA specifications: structure validation,
generation, lifting and execution.

A test is a tree whose internal nodes either observe (all outputs and δ) or
stimulate one input (that input plus all outputs). Leaves are the two sinks
`pass` and `fail`. Generation walks the specification state set reached so
far and routes every branch the specification forbids to `fail`.
"""

import itertools
import multiprocessing as mp
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from tioco_lab.lift import check_m, lift_edges, projected_lts
from tioco_lab.lts import (
    DELTA,
    Lts,
    Transition,
    after,
    format_trace,
    in_set,
    require_input_enabled,
    require_valid,
    validate_lts,
)
from tioco_lab.timed import (
    ClockConstraint,
    DelayClass,
    TimedAutomaton,
    TimedStep,
    _structural_violations,
    after_m,
    canonical_step,
    format_timed_trace,
    in_m,
    is_iota,
    out_labels_m,
    require_canonic,
)
from tioco_lab.utils import (
    AlphabetMismatchError,
    ClockParameterError,
    InvalidModelError,
    NotInputEnabledError,
    SuiteTooLargeError,
    logger,
)

PASS = "pass"
FAIL = "fail"
SINKS = frozenset([PASS, FAIL])


@dataclass(frozen=True)
class TestCase:
    model: Lts

    __test__ = False

    @property
    def initial(self):
        return self.model.initial

    @property
    def alphabet(self):
        return self.model.alphabet


@dataclass(frozen=True)
class TimedTestCase:
    automaton: TimedAutomaton

    @property
    def initial(self):
        return self.automaton.initial

    @property
    def alphabet(self):
        return self.automaton.alphabet

    @property
    def m(self):
        return self.automaton.m


@dataclass(frozen=True)
class Pass:
    @property
    def passed(self):
        return True

    def describe(self):
        return "pass"


@dataclass(frozen=True)
class Fail:
    witness: tuple
    timed: bool = False

    @property
    def passed(self):
        return False

    def describe(self):
        render = format_timed_trace if self.timed else format_trace
        return f"fail\nwitness: {render(self.witness)}"


@dataclass(frozen=True)
class Exhaustive:
    max_suite_size: int = None


@dataclass(frozen=True)
class RandomSelection:
    seed: int
    count: int


def mode_from_config(config):
    if config.random:
        return RandomSelection(config.seed, config.count)
    return Exhaustive(config.max_suite_size)


@dataclass(frozen=True)
class TestSuite:
    tests: tuple = ()

    __test__ = False

    @classmethod
    def of(cls, tests):
        """Deduplicate by canonical form and order by it."""
        by_form = {}
        for test in tests:
            by_form.setdefault(canonical_form(test), test)
        return cls(tuple(by_form[form] for form in sorted(by_form)))

    def __iter__(self):
        return iter(self.tests)

    def __len__(self):
        return len(self.tests)

    def canonical_forms(self):
        return frozenset(canonical_form(t) for t in self.tests)


@dataclass(frozen=True)
class SuiteReport:
    verdicts: tuple

    @property
    def passed(self):
        return all(v.passed for v in self.verdicts)

    @property
    def failures(self):
        return [(i, v) for i, v in enumerate(self.verdicts) if not v.passed]


# -----------------------------------------------------------------------------
# structure


def _tree_violations(initial, nodes, edges):
    problems = []
    outgoing = {}
    for source, label, target in edges:
        outgoing.setdefault(source, []).append((label, target))
    for sink in sorted(SINKS):
        if outgoing.get(sink):
            problems.append(f"sink `{sink}` has outgoing edges")
    incoming = Counter(target for _, _, target in edges if target not in SINKS)
    internal = sorted(n for n in nodes if n not in SINKS)
    for node in internal:
        expected = 0 if node == initial else 1
        if incoming[node] != expected:
            problems.append(
                f"node `{node}` has {incoming[node]} incoming edges, tree shape needs {expected}"
            )
    for source, branches in sorted(outgoing.items()):
        labels = Counter(label for label, _ in branches)
        for label, n in sorted(labels.items()):
            if n > 1:
                problems.append(f"node `{source}` is nondeterministic on `{label}`")
    reached = {initial}
    queue = deque([initial])
    while queue:
        for _, target in outgoing.get(queue.popleft(), ()):
            if target not in reached:
                reached.add(target)
                queue.append(target)
    for node in internal:
        if node not in reached:
            problems.append(f"node `{node}` is unreachable or on a cycle")
    return problems


def _choice_violation(node, inputs, outputs, alphabet):
    all_outputs = frozenset(alphabet.outputs)
    observe = not inputs and outputs == all_outputs | {DELTA}
    stimulate = len(inputs) == 1 and outputs == all_outputs
    if observe or stimulate:
        return None
    return (
        f"node `{node}` must enable all outputs and either δ or exactly one input"
    )


def validate_test_structure(test):
    """The specification-independent clauses of a test case."""
    model = test.model
    problems = validate_lts(model)
    if not model.explicit_delta:
        problems.append("test cases must be δ-materialized")
    edges = [tuple(t) for t in model.sorted_transitions()]
    problems.extend(_tree_violations(model.initial, set(model.states), edges))
    for node in model.states:
        if node in SINKS:
            continue
        successors = model.successors(node)
        inputs = frozenset(a for a in successors if a.is_input)
        outputs = frozenset(a for a in successors if not a.is_input)
        problem = _choice_violation(node, inputs, outputs, model.alphabet)
        if problem:
            problems.append(problem)
    return problems


def _walk_tree(initial, children, start, advance):
    """Depth-first over a tree: yields (trace, label, target, next_spec_set)."""
    stack = [(initial, (), start)]
    while stack:
        node, trace, spec_set = stack.pop()
        for step, target in children(node):
            nxt = advance(spec_set, step) if spec_set else frozenset()
            yield trace, step, target, nxt
            if target not in SINKS:
                stack.append((target, trace + (step,), nxt))


def _trace_violations(walk, render, label_of):
    problems = []
    for trace, step, target, nxt in walk:
        label = label_of(step)
        full = render(trace + (step,))
        if label.is_input and not nxt:
            problems.append(f"input-specifiedness: `{full}` is not a suspension trace of the specification")
        if target == PASS and not nxt:
            problems.append(f"soundness: `{full}` leads to pass but is not a suspension trace of the specification")
        if target == FAIL and not label.is_input and nxt:
            problems.append(f"correctness: `{full}` leads to fail but is a suspension trace of the specification")
    return problems


def _lts_children(model):
    def children(node):
        return [
            (label, next(iter(targets)))
            for label, targets in sorted(model.successors(node).items())
        ]

    return children


def validate_test_lts(test, spec):
    require_valid(spec)
    problems = validate_test_structure(test)
    if test.alphabet != spec.alphabet:
        problems.append("test and specification alphabets differ")
    if problems:
        return problems
    walk = _walk_tree(
        test.initial,
        _lts_children(test.model),
        frozenset([spec.initial]),
        lambda q, a: after(spec, q, a),
    )
    return _trace_violations(walk, format_trace, lambda a: a)


def step_of(edge):
    delay = DelayClass.at_m if edge.guard is ClockConstraint.eq_m else DelayClass.before_m
    return TimedStep(delay, edge.label)


def _ta_children(ta):
    def children(node):
        return [(step_of(e), e.target) for e in ta.outgoing(node)]

    return children


def validate_test_ta_structure(test):
    ta = test.automaton
    problems = _structural_violations(ta, sinks=SINKS)
    for sink in sorted(SINKS):
        if ta.invariant_of.get(sink) is not None:
            problems.append(f"sink `{sink}` must not carry an invariant")
    edges = [(e.source, e.label, e.target) for e in ta.sorted_edges()]
    problems.extend(_tree_violations(ta.initial, set(ta.locations), edges))
    for location in ta.locations:
        if location in SINKS:
            continue
        q = frozenset([location])
        problem = _choice_violation(location, in_m(ta, q), out_labels_m(ta, q), ta.alphabet)
        if problem:
            problems.append(problem)
    return problems


def validate_test_ta(test, spec):
    require_canonic(spec)
    problems = validate_test_ta_structure(test)
    if test.m != spec.m:
        problems.append("test and specification use different M")
    if test.alphabet != spec.alphabet:
        problems.append("test and specification alphabets differ")
    if problems:
        return problems
    walk = _walk_tree(
        test.initial,
        _ta_children(test.automaton),
        frozenset([spec.initial]),
        lambda q, s: after_m(spec, q, s),
    )
    return _trace_violations(walk, format_timed_trace, lambda s: s.label)


# -----------------------------------------------------------------------------
# generation


class _LtsView:
    def __init__(self, spec):
        self.spec = spec
        self.alphabet = spec.alphabet

    def start(self):
        return frozenset([self.spec.initial])

    def inputs(self, q):
        return sorted(in_set(self.spec, q))

    def after(self, q, label):
        return after(self.spec, q, label)


class _TaView:
    def __init__(self, spec):
        self.spec = spec
        self.alphabet = spec.alphabet

    def start(self):
        return frozenset([self.spec.initial])

    def inputs(self, q):
        return sorted(in_m(self.spec, q))

    def after(self, q, label):
        return after_m(self.spec, q, canonical_step(label))


def _options(view, q, k, depth):
    """Choice resolutions at a node reached by a trace of length k.

    None stands for stopping with pass; otherwise a list of branches
    (label, specification set after label), an empty set marking a
    forbidden branch.
    """
    if k >= depth:
        return [None]
    outputs = view.alphabet.outputs
    options = [None, [(a, view.after(q, a)) for a in outputs + (DELTA,)]]
    for i in view.inputs(q):
        options.append([(i, view.after(q, i))] + [(o, view.after(q, o)) for o in outputs])
    return options


def _branch_key(branch):
    return branch[0]


def _alternatives(view, q, k, depth, memo):
    key = (q, k)
    if key in memo:
        return memo[key]
    result = []
    for option in _options(view, q, k, depth):
        if option is None:
            result.append(PASS)
            continue
        option = sorted(option, key=_branch_key)
        labels = [label for label, _ in option]
        children = [
            _alternatives(view, nxt, k + 1, depth, memo) if nxt else [FAIL]
            for _, nxt in option
        ]
        for combo in itertools.product(*children):
            result.append(tuple(zip(labels, combo)))
    memo[key] = result
    return result


def _count(view, q, k, depth, memo):
    key = (q, k)
    if key not in memo:
        total = 0
        for option in _options(view, q, k, depth):
            if option is None:
                total += 1
                continue
            product = 1
            for _, nxt in option:
                product *= _count(view, nxt, k + 1, depth, memo) if nxt else 1
            total += product
        memo[key] = total
    return memo[key]


def _draw(view, q, k, depth, rng):
    options = _options(view, q, k, depth)
    option = options[int(rng.integers(len(options)))]
    if option is None:
        return PASS
    branches = []
    for label, nxt in sorted(option, key=_branch_key):
        branches.append((label, _draw(view, nxt, k + 1, depth, rng) if nxt else FAIL))
    return tuple(branches)


def _named_edges(tree):
    """Breadth-first naming of internal nodes: n0 for the root, then n1, ..."""
    if isinstance(tree, str):
        return tree, []
    edges = []
    queue = deque([(tree, "n0")])
    counter = 1
    while queue:
        node, name = queue.popleft()
        for label, child in node:
            if isinstance(child, str):
                target = child
            else:
                target = f"n{counter}"
                counter += 1
                queue.append((child, target))
            edges.append((name, label, target))
    return "n0", edges


def _tree_to_test(tree, alphabet):
    root, edges = _named_edges(tree)
    states = {root} | {s for s, _, _ in edges} | {t for _, _, t in edges}
    model = Lts(
        tuple(states),
        root,
        alphabet,
        frozenset(Transition(*e) for e in edges),
        explicit_delta=True,
    )
    return TestCase(model)


def _tree_to_timed_test(tree, alphabet, m):
    root, edges = _named_edges(tree)
    locations = {root} | {s for s, _, _ in edges} | {t for _, _, t in edges}
    automaton = TimedAutomaton(
        locations=tuple(locations),
        initial=root,
        alphabet=alphabet,
        m=m,
        invariants=tuple((l, ClockConstraint.le_m) for l in locations if l not in SINKS),
        edges=lift_edges(Transition(*e) for e in edges),
    )
    return TimedTestCase(automaton)


def _generate(view, depth, mode, materialize):
    if depth < 0:
        raise ValueError("depth must be non-negative")
    start = view.start()
    if isinstance(mode, RandomSelection):
        rng = np.random.default_rng(mode.seed)
        trees = [_draw(view, start, 0, depth, rng) for _ in range(mode.count)]
    else:
        if mode.max_suite_size is not None:
            size = _count(view, start, 0, depth, {})
            if size > mode.max_suite_size:
                raise SuiteTooLargeError(size, mode.max_suite_size)
        trees = _alternatives(view, start, 0, depth, {})
    suite = TestSuite.of(materialize(tree) for tree in trees)
    logger.info(f"generated {len(suite)} tests at depth {depth}")
    return suite


def generate_tests(spec, depth, mode=Exhaustive()):
    require_valid(spec)
    return _generate(
        _LtsView(spec), depth, mode, lambda tree: _tree_to_test(tree, spec.alphabet)
    )


def generate_tests_ta(spec, depth, mode=Exhaustive()):
    """The same generation scheme run over the timed semantics."""
    require_canonic(spec)
    return _generate(
        _TaView(spec),
        depth,
        mode,
        lambda tree: _tree_to_timed_test(tree, spec.alphabet, spec.m),
    )


def count_tests(spec, depth):
    """Size of the exhaustive suite, without building it."""
    require_valid(spec)
    view = _LtsView(spec)
    return _count(view, view.start(), 0, depth, {})


# -----------------------------------------------------------------------------
# lifting and canonical forms


def lift_test(test, m):
    m = check_m(m)
    problems = validate_test_structure(test)
    if problems:
        raise InvalidModelError(problems)
    model = test.model
    automaton = TimedAutomaton(
        locations=model.states,
        initial=model.initial,
        alphabet=model.alphabet,
        m=m,
        invariants=tuple((s, ClockConstraint.le_m) for s in model.states if s not in SINKS),
        edges=lift_edges(model.transitions),
    )
    return TimedTestCase(automaton)


def project_test(test):
    return TestCase(projected_lts(test.automaton))


def _rename_tree(initial, children):
    """Breadth-first renaming over label-sorted children; sinks keep their names."""
    if initial in SINKS:
        return {initial: initial}
    names = {initial: "n0"}
    queue = deque([initial])
    while queue:
        node = queue.popleft()
        for _, target in children(node):
            if target not in SINKS and target not in names:
                names[target] = f"n{len(names)}"
                queue.append(target)
    names.update({s: s for s in SINKS})
    return names


def canonicalize(test):
    if isinstance(test, TimedTestCase):
        ta = test.automaton
        names = _rename_tree(ta.initial, _ta_children(ta))
        renamed = TimedAutomaton(
            locations=tuple(names.get(l, l) for l in ta.locations),
            initial=names[ta.initial],
            alphabet=ta.alphabet,
            m=ta.m,
            invariants=tuple((names.get(l, l), c) for l, c in ta.invariants),
            edges=frozenset(
                (names.get(e.source, e.source), e.label, e.guard, e.resets, names.get(e.target, e.target))
                for e in ta.edges
            ),
        )
        return TimedTestCase(renamed)
    model = test.model
    names = _rename_tree(model.initial, _lts_children(model))
    renamed = Lts(
        tuple(names.get(s, s) for s in model.states),
        names[model.initial],
        model.alphabet,
        frozenset(
            Transition(names.get(t.source, t.source), t.label, names.get(t.target, t.target))
            for t in model.transitions
        ),
        explicit_delta=True,
    )
    return TestCase(renamed)


def canonical_form(test):
    from tioco_lab.formats import serialize

    return serialize(canonicalize(test))


# -----------------------------------------------------------------------------
# execution


def _execute(initial, children, start, advance, timed):
    if initial == FAIL:
        return Fail((), timed=timed)
    if initial == PASS:
        return Pass()
    queue = deque([(initial, (), start)])
    while queue:
        node, trace, impl_set = queue.popleft()
        for step, target in children(node):
            nxt = advance(impl_set, step)
            if not nxt:
                continue
            if target == FAIL:
                return Fail(trace + (step,), timed=timed)
            if target != PASS:
                queue.append((target, trace + (step,), nxt))
    return Pass()


def run_test_lts(test, impl):
    require_input_enabled(impl)
    problems = validate_test_structure(test)
    if problems:
        raise InvalidModelError(problems)
    if test.alphabet != impl.alphabet:
        raise AlphabetMismatchError("test and implementation alphabets differ")
    return _execute(
        test.initial,
        _lts_children(test.model),
        frozenset([impl.initial]),
        lambda q, a: after(impl, q, a),
        timed=False,
    )


def run_test_ta(test, impl):
    require_canonic(impl)
    problems = validate_test_ta_structure(test)
    if problems:
        raise InvalidModelError(problems)
    if test.m != impl.m:
        raise ClockParameterError("test and implementation use different M")
    if test.alphabet != impl.alphabet:
        raise AlphabetMismatchError("test and implementation alphabets differ")
    if not is_iota(impl):
        raise NotInputEnabledError("implementation is not an IOTA")
    return _execute(
        test.initial,
        _ta_children(test.automaton),
        frozenset([impl.initial]),
        lambda q, s: after_m(impl, q, s),
        timed=True,
    )


def run_test(test, impl):
    if isinstance(test, TimedTestCase):
        return run_test_ta(test, impl)
    return run_test_lts(test, impl)


def _run_job(job):
    test, impl = job
    return run_test(test, impl)


def run_suite(suite, impl, workers=1):
    """Run every test; the suite passes iff every test passes."""
    jobs = [(test, impl) for test in suite]
    if workers > 1 and len(jobs) > 1:
        with mp.Pool(workers) as pool:
            verdicts = list(pool.imap(_run_job, jobs))
    else:
        verdicts = [_run_job(job) for job in jobs]
    report = SuiteReport(tuple(verdicts))
    logger.info(
        f"suite of {len(jobs)} tests: {len(report.failures)} failed"
    )
    return report
