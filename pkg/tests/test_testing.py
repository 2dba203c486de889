from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_figure, lts_models, model_pairs
from tioco_lab.conformance import check_ioco
from tioco_lab.lift import lift, lift_trace, project_trace
from tioco_lab.lts import DELTA, Lts, Transition, parse_trace
from tioco_lab.testing import (
    FAIL,
    PASS,
    Exhaustive,
    Pass,
    RandomSelection,
    TestCase,
    canonical_form,
    count_tests,
    generate_tests,
    generate_tests_ta,
    lift_test,
    project_test,
    run_suite,
    run_test_lts,
    run_test_ta,
    validate_test_lts,
    validate_test_structure,
    validate_test_ta,
)
from tioco_lab.utils import InvalidModelError, SuiteTooLargeError

m_values = st.sampled_from([Fraction(1), Fraction(3, 2), Fraction(5)])


def _replace_edge(test, source, label, target):
    model = test.model
    transitions = {t for t in model.transitions if not (t.source == source and t.label == label)}
    transitions.add(Transition(source, label, target))
    return TestCase(Lts(model.states, model.initial, model.alphabet, transitions, True))


def test_figure_test_is_valid(worked_test, model_a):
    assert validate_test_structure(worked_test) == []
    assert validate_test_lts(worked_test, model_a) == []


def test_allowed_output_to_fail_breaks_correctness(worked_test, model_a):
    broken = _replace_edge(worked_test, "n1", parse_trace("o!")[0], FAIL)
    problems = validate_test_lts(broken, model_a)
    assert len(problems) == 1
    assert problems[0].startswith("correctness")


def test_forbidden_output_to_pass_breaks_soundness(worked_test, model_a):
    broken = _replace_edge(worked_test, "n0", parse_trace("o!")[0], PASS)
    problems = validate_test_lts(broken, model_a)
    assert len(problems) == 1
    assert problems[0].startswith("soundness")


def test_structure_needs_all_outputs(worked_test):
    model = worked_test.model
    transitions = {t for t in model.transitions if t.label != parse_trace("o_prime!")[0]}
    broken = TestCase(Lts(model.states, model.initial, model.alphabet, transitions, True))
    problems = validate_test_structure(broken)
    assert any("all outputs" in p for p in problems)


def test_structure_rejects_outgoing_sink_edges(worked_test):
    model = worked_test.model
    transitions = set(model.transitions) | {Transition(PASS, DELTA, "n0")}
    broken = TestCase(Lts(model.states, model.initial, model.alphabet, transitions, True))
    assert any("sink `pass`" in p for p in validate_test_structure(broken))


def test_depth_zero_is_a_single_pass_node(model_a):
    suite = generate_tests(model_a, 0)
    assert len(suite) == 1
    (test,) = suite
    assert test.initial == PASS
    assert test.model.transitions == frozenset()


def test_exhaustive_suite_for_a(model_a):
    suite = generate_tests(model_a, 3)
    assert len(suite) == count_tests(model_a, 3) == 19
    assert all(validate_test_lts(t, model_a) == [] for t in suite)
    # stopping is always an option
    figure = canonical_form(load_figure("test_A.lts"))
    assert figure in suite.canonical_forms()
    assert figure in generate_tests(model_a, 2).canonical_forms()
    assert figure not in generate_tests(model_a, 1).canonical_forms()


def test_exhaustive_suite_catches_d(model_a, model_d):
    report = run_suite(generate_tests(model_a, 3), model_d)
    assert not report.passed
    witnesses = {v.witness for _, v in report.failures}
    assert parse_trace("i? i? δ") in witnesses


def test_suite_size_limit(model_a):
    with pytest.raises(SuiteTooLargeError) as info:
        generate_tests(model_a, 3, Exhaustive(max_suite_size=10))
    assert info.value.size == 19


def test_random_selection_is_reproducible(model_a):
    first = generate_tests(model_a, 3, RandomSelection(seed=7, count=10))
    second = generate_tests(model_a, 3, RandomSelection(seed=7, count=10))
    assert first.canonical_forms() == second.canonical_forms()
    assert 1 <= len(first) <= 10
    assert first.canonical_forms() <= generate_tests(model_a, 3).canonical_forms()


def test_run_figure_test(worked_test, model_b, model_c, model_d):
    assert run_test_lts(worked_test, model_d) == Pass()
    assert run_test_lts(worked_test, model_c).passed
    assert run_test_lts(generate_tests(model_b, 0).tests[0], model_d) == Pass()


def test_run_test_reports_minimal_witness(model_a, model_d):
    verdicts = [run_test_lts(t, model_d) for t in generate_tests(model_a, 3)]
    failures = [v for v in verdicts if not v.passed]
    assert failures
    assert {v.describe() for v in failures} == {"fail\nwitness: i? i? δ"}


def test_run_rejects_invalid_test(model_b):
    broken = TestCase(Lts(("n0",), "n0", model_b.alphabet, (), True))
    with pytest.raises(InvalidModelError):
        run_test_lts(broken, model_b)


def test_lift_figure_test(worked_test, model_a):
    lifted = lift_test(worked_test, 2)
    assert lifted == load_figure("test_A_m2.ta")
    assert lifted.automaton.invariant_of.get(PASS) is None
    assert validate_test_ta(lifted, lift(model_a, 2)) == []
    assert project_test(lifted) == worked_test


def test_lift_single_pass_node(model_a):
    (test,) = generate_tests(model_a, 0)
    lifted = lift_test(test, 1)
    assert lifted.automaton.locations == (PASS,)
    assert lifted.automaton.invariants == ()


def test_timed_run_of_figure_test(worked_test, model_c, model_d):
    lifted = lift_test(worked_test, 2)
    assert run_test_ta(lifted, lift(model_d, 2)).passed
    assert run_test_ta(lifted, lift(model_c, 2)).passed


def test_lifted_suite_equals_timed_suite_on_a(model_a):
    lifted = {canonical_form(lift_test(t, 2)) for t in generate_tests(model_a, 3)}
    assert lifted == generate_tests_ta(lift(model_a, 2), 3).canonical_forms()


@settings(max_examples=20)
@given(lts_models, st.integers(0, 2))
def test_generated_tests_are_valid(spec, depth):
    for test in generate_tests(spec, depth, RandomSelection(seed=1, count=5)):
        assert validate_test_lts(test, spec) == []


@settings(max_examples=20)
@given(lts_models, m_values)
def test_lifted_suites_match_timed_generation(spec, m):
    if count_tests(spec, 2) > 2000:
        return
    lifted = {canonical_form(lift_test(t, m)) for t in generate_tests(spec, 2)}
    assert lifted == generate_tests_ta(lift(spec, m), 2).canonical_forms()


@settings(max_examples=20)
@given(model_pairs(), m_values)
def test_untimed_and_timed_runs_agree(pair, m):
    impl, spec = pair
    for test in generate_tests(spec, 3, RandomSelection(seed=3, count=4)):
        untimed = run_test_lts(test, impl)
        timed = run_test_ta(lift_test(test, m), lift(impl, m))
        assert untimed.passed == timed.passed
        if not untimed.passed:
            assert timed.witness == lift_trace(untimed.witness)
            assert project_trace(timed.witness) == untimed.witness


@settings(max_examples=20)
@given(model_pairs())
def test_conforming_impls_pass_every_test(pair):
    impl, spec = pair
    if not check_ioco(impl, spec).conforms or count_tests(spec, 2) > 2000:
        return
    assert run_suite(generate_tests(spec, 2), impl).passed


def test_parallel_suite_run_keeps_order(model_a, model_d):
    suite = generate_tests(model_a, 2)
    sequential = run_suite(suite, model_d)
    parallel = run_suite(suite, model_d, workers=2)
    assert parallel.verdicts == sequential.verdicts
