"""
Theorem lab: seeded random models and the batch oracles that check the
relation between the untimed and the lifted timed world on them.

Every oracle takes one generated `Case` and the `LabConfig` and returns an
`OracleResult`. Oracles register themselves with `@register_oracle`, so the
CLI can replay a single oracle on serialized models.
"""

import enum
import multiprocessing as mp
import sys
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from tqdm import tqdm

from tioco_lab.config import LabConfig, RandomModelConfig
from tioco_lab.conformance import (
    check_ioco,
    check_tioco_m,
    check_tioco_via_projection,
    counterexample_outputs,
    describe,
)
from tioco_lab.lift import lift, lift_outputs, lift_trace, project_trace
from tioco_lab.lts import (
    Alphabet,
    Lts,
    Transition,
    format_trace,
    require_valid,
    straces_upto,
)
from tioco_lab.testing import (
    Exhaustive,
    RandomSelection,
    canonical_form,
    count_tests,
    generate_tests,
    generate_tests_ta,
    lift_test,
    run_suite,
    run_test_lts,
    run_test_ta,
    validate_test_lts,
)
from tioco_lab.timed import (
    DelayClass,
    TimedStep,
    after_m,
    after_m_trace,
    concrete_after,
    concrete_initial,
    concrete_locations,
    delay_class_of,
    format_timed_trace,
    is_iota,
    sttraces_upto,
    timed_trace_key,
    validate_canonic,
)
from tioco_lab.utils import (
    TiocoError,
    format_rational,
    get_oracle,
    logger,
    register_oracle,
    registered_oracles,
)

# -----------------------------------------------------------------------------
# random models


def _prune(initial, states, transitions, alphabet):
    """Keep what is reachable from `initial` and rename states s0, s1, ... in BFS order."""
    outgoing = {s: [] for s in states}
    for t in sorted(transitions, key=lambda t: (t.label, t.target)):
        outgoing[t.source].append(t)
    names = {initial: "s0"}
    queue = deque([initial])
    while queue:
        for t in outgoing[queue.popleft()]:
            if t.target not in names:
                names[t.target] = f"s{len(names)}"
                queue.append(t.target)
    kept = frozenset(
        Transition(names[t.source], t.label, names[t.target])
        for t in transitions
        if t.source in names
    )
    return Lts(tuple(names.values()), "s0", alphabet, kept)


def random_alphabet(n_inputs, n_outputs):
    return Alphabet.of(
        [f"i{k}" for k in range(n_inputs)], [f"o{k}" for k in range(n_outputs)]
    )


def random_lts(seed, config=None):
    """A reachable random LTS, reproducible from `seed`."""
    config = RandomModelConfig() if config is None else config
    config.check_params()
    rng = np.random.default_rng(seed)
    alphabet = random_alphabet(config.n_inputs, config.n_outputs)
    states = [f"q{k}" for k in range(config.max_states)]
    transitions = set()
    for source in states:
        for label in alphabet.actions:
            if rng.random() >= config.edge_density:
                continue
            transitions.add(Transition(source, label, states[int(rng.integers(len(states)))]))
            # occasional nondeterminism
            if rng.random() < config.edge_density**2:
                transitions.add(Transition(source, label, states[int(rng.integers(len(states)))]))
    return _prune(states[0], states, transitions, alphabet)


def make_input_enabled(model):
    """Complete with self-loops for every missing input; existing edges stay."""
    require_valid(model)
    added = {
        Transition(s, label, s)
        for s in model.states
        for label in model.alphabet.inputs
        if label not in model.successors(s)
    }
    if not added:
        return model
    return Lts(
        model.states,
        model.initial,
        model.alphabet,
        model.transitions | added,
        model.explicit_delta,
    )


def _drop_one(model, rng):
    transitions = model.sorted_transitions()
    if not transitions:
        return model
    dropped = transitions[int(rng.integers(len(transitions)))]
    return Lts(
        model.states, model.initial, model.alphabet, model.transitions - {dropped}
    )


@dataclass(frozen=True)
class Case:
    index: int
    seed: int
    impl: Lts
    spec: Lts


def make_case(index, config):
    """Spec and implementation for one case; impls are mutants of the spec or independent."""
    rng = np.random.default_rng([config.seed, index])
    params = RandomModelConfig(
        max_states=int(rng.integers(1, config.max_states + 1)),
        n_inputs=int(rng.integers(1, config.max_inputs + 1)),
        n_outputs=int(rng.integers(0, config.max_outputs + 1)),
        edge_density=config.edge_density,
    )
    spec = random_lts(int(rng.integers(2**31)), params)
    flavour = int(rng.integers(3))
    if flavour == 0:
        impl = spec
    elif flavour == 1:
        impl = _drop_one(spec, rng)
    else:
        impl = random_lts(int(rng.integers(2**31)), params)
    case_seed = int(rng.integers(2**31))
    return Case(index, case_seed, make_input_enabled(impl), spec)


# -----------------------------------------------------------------------------
# oracles


class Status(enum.Enum):
    passed = "PASS"
    failed = "FAIL"
    skipped = "SKIP"


@dataclass(frozen=True)
class OracleResult:
    status: Status
    detail: str = ""

    @classmethod
    def ok(cls):
        return cls(Status.passed)

    @classmethod
    def fail(cls, detail):
        return cls(Status.failed, detail)

    @classmethod
    def skip(cls, detail):
        return cls(Status.skipped, detail)


def _lift(model, m, config):
    return lift(model, m, drop_delta_loops=config.inject_delta_bug)


def _suite_or_skip(spec, config):
    size = count_tests(spec, config.depth)
    if size > config.max_suite_size:
        return None, OracleResult.skip(f"suite size {size} exceeds {config.max_suite_size}")
    return generate_tests(spec, config.depth, Exhaustive()), None


@register_oracle
def oracle_lemma1(case, config):
    """Lifting untimed traces gives exactly the symbolic timed traces."""
    for m in config.m_values():
        for name, model in (("impl", case.impl), ("spec", case.spec)):
            ta = _lift(model, m, config)
            lifted = {lift_trace(s) for s in straces_upto(model, config.trace_depth)}
            timed = set(sttraces_upto(ta, config.trace_depth))
            if lifted != timed:
                extra = min(
                    lifted ^ timed,
                    key=lambda t: (timed_trace_key(t), [s.delay.value for s in t]),
                )
                side = "untimed only" if extra in lifted else "timed only"
                return OracleResult.fail(
                    f"M={format_rational(m)} {name}: {format_timed_trace(extra)} is {side}"
                )
            for rho in timed:
                if lift_trace(project_trace(rho)) != rho:
                    return OracleResult.fail(
                        f"M={format_rational(m)} {name}: {format_timed_trace(rho)} is not canonical"
                    )
    return OracleResult.ok()


@register_oracle
def oracle_corollary1(case, config):
    """Lifting an input-enabled model gives a canonic IOTA."""
    for m in config.m_values():
        ta = _lift(case.impl, m, config)
        problems = validate_canonic(ta)
        if problems:
            return OracleResult.fail(f"M={format_rational(m)}: {problems[0]}")
        if not is_iota(ta):
            return OracleResult.fail(f"M={format_rational(m)}: lifted impl is not an IOTA")
    return OracleResult.ok()


@register_oracle
def oracle_theorem1(case, config):
    """ioco and tioco_M agree for every sampled M, and the timed verdict ignores M."""
    untimed = check_ioco(case.impl, case.spec)
    verdicts = []
    for m in config.m_values():
        timed = check_tioco_m(_lift(case.impl, m, config), _lift(case.spec, m, config))
        if timed.conforms != untimed.conforms:
            return OracleResult.fail(
                f"M={format_rational(m)}: ioco says {untimed.kind}, tioco_M says {timed.kind}"
            )
        if not timed.conforms:
            projected = project_trace(timed.witness)
            if not counterexample_outputs(case.impl, case.spec, projected):
                return OracleResult.fail(
                    f"M={format_rational(m)}: projected witness {format_trace(projected)} does not fail ioco"
                )
        verdicts.append(timed)
    if any(v != verdicts[0] for v in verdicts[1:]):
        return OracleResult.fail("timed verdict depends on M")
    return OracleResult.ok()


@register_oracle
def oracle_dual_path(case, config):
    """Symbolic tioco_M and tioco-via-projection return the same verdict and witness."""
    for m in config.m_values():
        impl, spec = _lift(case.impl, m, config), _lift(case.spec, m, config)
        symbolic = check_tioco_m(impl, spec)
        projected = check_tioco_via_projection(impl, spec)
        if symbolic != projected:
            return OracleResult.fail(
                f"M={format_rational(m)}: symbolic {describe(symbolic)!r} vs projection {describe(projected)!r}"
            )
        untimed = check_ioco(case.impl, case.spec)
        if not untimed.conforms:
            expected = (lift_trace(untimed.witness), lift_outputs(untimed.offending))
            if (symbolic.witness, symbolic.offending) != expected:
                return OracleResult.fail(
                    f"M={format_rational(m)}: timed witness is not the lifted ioco witness"
                )
    return OracleResult.ok()


def _sample_delays(m, rng):
    drawn = Fraction(int(rng.integers(1, 1000)), 1000) * m
    return sorted({Fraction(0), m / 2, m, 3 * m / 2, drawn})


@register_oracle
def oracle_quotient(case, config):
    """Concrete rational delays agree with the symbolic delay classes."""
    rng = np.random.default_rng(case.seed)
    for m in config.m_values():
        ta = _lift(case.spec, m, config)
        delays = _sample_delays(m, rng)
        representative = {DelayClass.before_m: m / 2, DelayClass.at_m: m}
        for trace in sttraces_upto(ta, max(config.trace_depth - 1, 0)):
            configs = concrete_initial(ta)
            for step in trace:
                configs = concrete_after(ta, configs, representative[step.delay], step.label)
            symbolic = after_m_trace(ta, trace)
            if concrete_locations(configs) != symbolic:
                return OracleResult.fail(
                    f"M={format_rational(m)}: {format_timed_trace(trace)} reaches different locations"
                )
            for label in ta.observables:
                for d in delays:
                    concrete = concrete_locations(concrete_after(ta, configs, d, label))
                    delay = delay_class_of(d, m)
                    expected = (
                        after_m(ta, symbolic, TimedStep(delay, label)) if delay else frozenset()
                    )
                    if concrete != expected:
                        return OracleResult.fail(
                            f"M={format_rational(m)}: after {format_timed_trace(trace)}, "
                            f"delay {format_rational(d)} then {label} disagrees"
                        )
    return OracleResult.ok()


@register_oracle
def oracle_theorem2(case, config):
    """Lifting the exhaustive LTS suite gives the suite generated from the lifted spec."""
    suite, skipped = _suite_or_skip(case.spec, config)
    if skipped:
        return skipped
    for m in config.m_values():
        lifted_forms = {canonical_form(lift_test(test, m)) for test in suite}
        direct = generate_tests_ta(_lift(case.spec, m, config), config.depth).canonical_forms()
        if lifted_forms != direct:
            return OracleResult.fail(
                f"M={format_rational(m)}: {len(lifted_forms - direct)} lifted tests missing from "
                f"the timed suite, {len(direct - lifted_forms)} extra"
            )
    return OracleResult.ok()


@register_oracle
def oracle_theorem3(case, config):
    """Untimed and timed test runs agree, with corresponding witnesses."""
    suite = generate_tests(
        case.spec, config.depth, RandomSelection(case.seed, config.tests_per_case)
    )
    for k, test in enumerate(suite):
        problems = validate_test_lts(test, case.spec)
        if problems:
            return OracleResult.fail(f"test {k} is not valid: {problems[0]}")
        untimed = run_test_lts(test, case.impl)
        for m in config.m_values():
            timed = run_test_ta(lift_test(test, m), _lift(case.impl, m, config))
            if timed.passed != untimed.passed:
                return OracleResult.fail(
                    f"M={format_rational(m)} test {k}: untimed {untimed.describe()!r}, "
                    f"timed {timed.describe()!r}"
                )
            if not timed.passed and timed.witness != lift_trace(untimed.witness):
                return OracleResult.fail(
                    f"M={format_rational(m)} test {k}: witnesses do not correspond"
                )
    return OracleResult.ok()


@register_oracle
def oracle_test_soundness(case, config):
    """A conforming implementation passes every exhaustive suite up to the depth."""
    if not check_ioco(case.impl, case.spec).conforms:
        return OracleResult.ok()
    for depth in range(config.depth + 1):
        size = count_tests(case.spec, depth)
        if size > config.max_suite_size:
            return OracleResult.skip(f"depth {depth} suite size {size} exceeds {config.max_suite_size}")
        report = run_suite(generate_tests(case.spec, depth), case.impl)
        if not report.passed:
            index, verdict = report.failures[0]
            return OracleResult.fail(
                f"depth {depth}: conforming impl fails test {index}: {verdict.describe()!r}"
            )
    return OracleResult.ok()


# -----------------------------------------------------------------------------
# batch


def _selected(config):
    names = config.oracles or registered_oracles()
    for name in names:
        get_oracle(name)
    return names


def run_oracle(name, case, config):
    try:
        return get_oracle(name)(case, config)
    except TiocoError as e:
        return OracleResult.fail(f"{type(e).__name__}: {e}")


def _run_case(job):
    index, config = job
    case = make_case(index, config)
    return case, [(name, run_oracle(name, case, config)) for name in _selected(config)]


@dataclass
class LabReport:
    lines: list
    counts: dict
    counterexamples: list

    @property
    def passed(self):
        return all(c[Status.failed] == 0 for c in self.counts.values())

    @property
    def text(self):
        return "\n".join(self.lines) + "\n"


def _counterexample_block(case, name, result, config):
    from tioco_lab.formats import serialize

    m_set = ",".join(format_rational(m) for m in config.m_values())
    return [
        f"counterexample case={case.index} oracle={name}",
        f"detail: {result.detail}",
        f"case-seed: {case.seed}",
        f"m-set: {m_set}",
        f"inject-delta-bug: {str(config.inject_delta_bug).lower()}",
        "--- impl",
        serialize(case.impl).rstrip("\n"),
        "--- spec",
        serialize(case.spec).rstrip("\n"),
        "--- end",
    ]


def check_theorems(config=None):
    """Run every selected oracle on `n_cases` generated cases; report is deterministic."""
    config = LabConfig() if config is None else config
    names = _selected(config)
    config.m_values()
    if config.inject_delta_bug:
        logger.warning("lift drops δ-loops for this run (seeded defect)")
    counts = {name: {s: 0 for s in Status} for name in names}
    lines, counterexamples = [], []
    jobs = [(index, config) for index in range(config.n_cases)]
    progress = tqdm(total=len(jobs), desc="cases", unit="case", file=sys.stderr, disable=not jobs)

    def consume(results):
        for case, outcomes in results:
            for name, result in outcomes:
                counts[name][result.status] += 1
                line = f"case={case.index} oracle={name} status={result.status.value}"
                lines.append(f"{line} {result.detail}" if result.detail else line)
                if result.status is Status.failed:
                    counterexamples.append(_counterexample_block(case, name, result, config))
            progress.update(1)

    if config.workers > 1 and len(jobs) > 1:
        with mp.Pool(config.workers) as pool:
            consume(pool.imap(_run_case, jobs))
    else:
        consume(map(_run_case, jobs))
    progress.close()

    lines.append("")
    lines.append("summary")
    lines.append(f"cases: {config.n_cases}")
    lines.append(f"m-set: {','.join(format_rational(m) for m in config.m_values())}")
    lines.append(f"depth: {config.depth}")
    for name in names:
        c = counts[name]
        lines.append(
            f"{name}: pass={c[Status.passed]} fail={c[Status.failed]} skip={c[Status.skipped]}"
        )
    report = LabReport(lines, counts, counterexamples)
    lines.append(f"result: {'PASS' if report.passed else 'FAIL'}")
    for block in counterexamples:
        lines.append("")
        lines.extend(block)
    logger.info(f"theorem lab finished: {'pass' if report.passed else 'fail'}")
    return report


def replay_oracle(name, impl, spec, config=None, case_seed=0):
    """Re-run one oracle on serialized models, e.g. from a counterexample block."""
    config = LabConfig() if config is None else config
    return run_oracle(name, Case(0, case_seed, impl, spec), config)
