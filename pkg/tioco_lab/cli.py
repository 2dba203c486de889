import logging
import os
import sys
from argparse import ArgumentParser

from tioco_lab.config import GenerationConfig, LabConfig
from tioco_lab.conformance import (
    check_ioco,
    check_tioco_m,
    check_tioco_via_projection,
    counterexample_outputs,
    describe,
)
from tioco_lab.formats import export_dot, parse, serialize
from tioco_lab.lab import check_theorems, replay_oracle
from tioco_lab.lift import lift, project_ta
from tioco_lab.lts import Lts, parse_trace
from tioco_lab.testing import (
    TestCase,
    TimedTestCase,
    generate_tests,
    generate_tests_ta,
    lift_test,
    mode_from_config,
    run_suite,
    run_test,
)
from tioco_lab.timed import TimedAutomaton, is_lift_image
from tioco_lab.utils import (
    NotCanonicError,
    TeeLogger,
    TiocoError,
    logger,
    parse_rational,
    registered_oracles,
    use_color,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_COLORS = {"conforms": "32", "pass": "32", "PASS": "32", "fails": "31", "fail": "31", "FAIL": "31"}


def _paint(text):
    """Color the leading verdict word when stdout is a terminal."""
    word, sep, rest = text.partition("\n")
    code = _COLORS.get(word)
    if code and use_color():
        word = f"\033[{code}m{word}\033[0m"
    return word + sep + rest


def _read(path, kinds):
    with open(path, encoding="utf-8") as f:
        value = parse(f.read())
    if not isinstance(value, kinds):
        names = ", ".join(k.__name__ for k in kinds)
        raise TiocoError(f"{path}: expected {names}, got {type(value).__name__}")
    return value


def _read_timed(path):
    """A timed model from disk; quiescent locations must carry their δ-loops."""
    ta = _read(path, (TimedAutomaton,))
    if not is_lift_image(ta):
        raise NotCanonicError(
            [f"{path}: every quiescent location needs `delta [c=M] {{c}}` as a self-loop"]
        )
    return ta


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _rational(text):
    return parse_rational(text)


# -----------------------------------------------------------------------------
# commands


def cmd_check_ioco(args):
    impl = _read(args.impl, (Lts,))
    spec = _read(args.spec, (Lts,))
    if args.trace is not None:
        trace = parse_trace(args.trace)
        offending = counterexample_outputs(impl, spec, trace)
        labels = ", ".join(str(a) for a in sorted(offending))
        print(f"trace: {args.trace}\noffending: {{{labels}}}")
        return EXIT_FAIL if offending else EXIT_OK
    verdict = check_ioco(impl, spec)
    print(_paint(describe(verdict)))
    return EXIT_OK if verdict.conforms else EXIT_FAIL


def cmd_check_tioco(args):
    impl = _read_timed(args.impl)
    spec = _read_timed(args.spec)
    check = check_tioco_m if args.via == "symbolic" else check_tioco_via_projection
    verdict = check(impl, spec)
    print(_paint(describe(verdict)))
    return EXIT_OK if verdict.conforms else EXIT_FAIL


def cmd_lift(args):
    model = _read(args.model, (Lts,))
    _write(serialize(lift(model, args.m)), args.output)
    return EXIT_OK


def cmd_project(args):
    ta = _read_timed(args.model)
    _write(serialize(project_ta(ta)), args.output)
    return EXIT_OK


def cmd_gen_tests(args):
    config = GenerationConfig()
    if args.config:
        config.load_json(args.config)
    for key in ("depth", "seed", "count", "max_suite_size"):
        if getattr(args, key) is not None:
            setattr(config, key, getattr(args, key))
    if args.random:
        config.random = True
    spec = _read(args.spec, (Lts, TimedAutomaton))
    if isinstance(spec, TimedAutomaton):
        suite, suffix = generate_tests_ta(spec, config.depth, mode_from_config(config)), "ta"
    else:
        suite, suffix = generate_tests(spec, config.depth, mode_from_config(config)), "lts"
    os.makedirs(args.output, exist_ok=True)
    for k, test in enumerate(suite):
        _write(serialize(test), os.path.join(args.output, f"test_{k:04d}.{suffix}"))
    print(f"wrote {len(suite)} tests to {args.output}")
    return EXIT_OK


def cmd_lift_test(args):
    test = _read(args.test, (TestCase,))
    _write(serialize(lift_test(test, args.m)), args.output)
    return EXIT_OK


def _impl_for(test, path):
    if isinstance(test, TimedTestCase):
        return _read_timed(path)
    return _read(path, (Lts,))


def cmd_run_test(args):
    test = _read(args.test, (TestCase, TimedTestCase))
    verdict = run_test(test, _impl_for(test, args.impl))
    print(_paint(verdict.describe()))
    return EXIT_OK if verdict.passed else EXIT_FAIL


def cmd_run_suite(args):
    files = sorted(
        f for f in os.listdir(args.directory) if f.endswith((".lts", ".ta"))
    )
    if not files:
        raise TiocoError(f"no test files in {args.directory}")
    tests = [_read(os.path.join(args.directory, f), (TestCase, TimedTestCase)) for f in files]
    if len({type(t) for t in tests}) > 1:
        raise TiocoError(f"{args.directory} mixes timed and untimed tests")
    impl = _impl_for(tests[0], args.impl)
    report = run_suite(tests, impl, workers=args.workers)
    for name, verdict in zip(files, report.verdicts):
        first, _, rest = verdict.describe().partition("\n")
        print(f"{name} {first}" + (f" ({rest})" if rest else ""))
    print(_paint("pass" if report.passed else "fail"))
    return EXIT_OK if report.passed else EXIT_FAIL


def _lab_config(args):
    config = LabConfig()
    if args.config:
        config.load_json(args.config)
    overrides = {
        "n_cases": args.cases,
        "seed": args.seed,
        "depth": args.depth,
        "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.m_set:
        config.m_samples = [m.strip() for m in args.m_set.split(",")]
    if args.inject_delta_bug:
        config.inject_delta_bug = True
    if args.oracle:
        config.oracles = list(args.oracle)
    config.m_values()
    return config


def cmd_verify_theorems(args):
    config = _lab_config(args)
    tee = None
    if args.report:
        tee = TeeLogger(args.report)
        out = tee
    else:
        out = sys.stdout
    try:
        report = check_theorems(config)
        out.write(report.text)
    finally:
        if tee is not None:
            tee.close()
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_replay_oracle(args):
    config = _lab_config(args)
    impl = _read(args.impl, (Lts,))
    spec = _read(args.spec, (Lts,))
    result = replay_oracle(args.name, impl, spec, config, case_seed=args.case_seed)
    line = f"oracle={args.name} status={result.status.value}"
    print(_paint(f"{result.status.value}\n{line} {result.detail}".rstrip()))
    return EXIT_FAIL if result.status.value == "FAIL" else EXIT_OK


def cmd_export_dot(args):
    value = _read(args.model, (Lts, TimedAutomaton, TestCase, TimedTestCase))
    name = os.path.splitext(os.path.basename(args.model))[0]
    _write(export_dot(value, name=name), args.output)
    return EXIT_OK


# -----------------------------------------------------------------------------
# parser


def _add_lab_flags(parser):
    parser.add_argument("--config", type=str, default=None, help="LabConfig json")
    parser.add_argument("--cases", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--depth", type=int, default=None)
    parser.add_argument("--m-set", type=str, default=None, help="comma separated, e.g. 1,3/2,5")
    parser.add_argument("--inject-delta-bug", action="store_true")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument(
        "--oracle", action="append", default=None, choices=registered_oracles()
    )


def build_parser():
    parser = ArgumentParser(prog="tioco_lab", description="ioco / tioco_M conformance lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-ioco", help="decide impl ioco spec")
    p.add_argument("impl")
    p.add_argument("spec")
    p.add_argument("--trace", type=str, default=None, help='check one trace, e.g. "i? delta i?"')
    p.set_defaults(func=cmd_check_ioco)

    p = sub.add_parser("check-tioco", help="decide impl tioco_M spec")
    p.add_argument("--via", choices=["symbolic", "projection"], default="symbolic")
    p.add_argument("impl")
    p.add_argument("spec")
    p.set_defaults(func=cmd_check_tioco)

    p = sub.add_parser("lift", help="lift an LTS to a canonic TA")
    p.add_argument("--m", type=_rational, required=True)
    p.add_argument("model")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("project", help="project a canonic TA to an LTS")
    p.add_argument("model")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("gen-tests", help="generate a test suite")
    p.add_argument("--config", type=str, default=None, help="GenerationConfig json")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--random", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--max-suite-size", type=int, default=None)
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_tests)

    p = sub.add_parser("lift-test", help="lift a test case")
    p.add_argument("--m", type=_rational, required=True)
    p.add_argument("test")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_lift_test)

    p = sub.add_parser("run-test", help="run one test against an implementation")
    p.add_argument("test")
    p.add_argument("impl")
    p.set_defaults(func=cmd_run_test)

    p = sub.add_parser("run-suite", help="run every test in a directory")
    p.add_argument("directory")
    p.add_argument("impl")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run_suite)

    p = sub.add_parser("verify-theorems", help="run the theorem lab")
    _add_lab_flags(p)
    p.add_argument("--report", type=str, default=None, help="also write the report here")
    p.set_defaults(func=cmd_verify_theorems)

    p = sub.add_parser("replay-oracle", help="re-run one oracle on serialized models")
    p.add_argument("name", choices=registered_oracles())
    p.add_argument("impl")
    p.add_argument("spec")
    p.add_argument("--case-seed", type=int, default=0)
    _add_lab_flags(p)
    p.set_defaults(func=cmd_replay_oracle)

    p = sub.add_parser("export-dot", help="render a model as GraphViz")
    p.add_argument("model")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_export_dot)
    return parser


def _setup_logging(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except (TiocoError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
