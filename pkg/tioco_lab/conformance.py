"""
Decision procedures for ioco and tioco_M.

Both relations are decided by the same breadth-first search over pairs of
(implementation state set, specification state set) reached by a common
suspension trace. The first pair whose implementation outputs are not
offered by the specification yields the witness; BFS order over canonically
sorted labels makes it the shortest one, ties broken lexicographically.
"""

from collections import deque
from dataclasses import dataclass, field

from tioco_lab.lift import lift_outputs, lift_trace, projected_lts
from tioco_lab.lts import (
    after,
    after_trace,
    format_trace,
    out_set,
    require_input_enabled,
    require_valid,
)
from tioco_lab.timed import (
    after_m,
    after_m_trace,
    canonical_step,
    format_timed_trace,
    is_iota,
    is_lift_image,
    out_m,
    require_canonic,
)
from tioco_lab.utils import (
    AlphabetMismatchError,
    ClockParameterError,
    NotCanonicError,
    NotInputEnabledError,
    WitnessReplayError,
    format_rational,
    logger,
)


@dataclass(frozen=True)
class Conforms:
    explored: int = field(default=0, compare=False)

    @property
    def conforms(self):
        return True

    @property
    def kind(self):
        return "conforms"


@dataclass(frozen=True)
class Fails:
    witness: tuple
    offending: frozenset
    timed: bool = False
    explored: int = field(default=0, compare=False)

    @property
    def conforms(self):
        return False

    @property
    def kind(self):
        return "fails"


def describe(verdict):
    if verdict.conforms:
        return "conforms"
    if verdict.timed:
        render = format_timed_trace
        ordered = sorted(verdict.offending, key=lambda s: (s.label, s.delay.value))
    else:
        render = format_trace
        ordered = sorted(verdict.offending)
    offending = ", ".join(str(o) for o in ordered)
    return f"fails\nwitness: {render(verdict.witness)}\noffending: {{{offending}}}"


def _pair_search(start, steps, advance_impl, advance_spec, outputs_impl, outputs_spec):
    parents = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        impl_set, spec_set = pair
        offending = outputs_impl(impl_set) - outputs_spec(spec_set)
        if offending:
            witness = []
            node = pair
            while parents[node] is not None:
                node, step = parents[node]
                witness.append(step)
            return tuple(reversed(witness)), offending, len(parents)
        for step in steps:
            spec_next = advance_spec(spec_set, step)
            if not spec_next:
                continue
            impl_next = advance_impl(impl_set, step)
            # an implementation that cannot follow satisfies the inclusion vacuously
            if not impl_next:
                continue
            successor = (impl_next, spec_next)
            if successor not in parents:
                parents[successor] = (pair, step)
                queue.append(successor)
    return None, frozenset(), len(parents)


def _require_same_alphabet(impl, spec):
    if impl.alphabet != spec.alphabet:
        raise AlphabetMismatchError(
            "implementation and specification must share inputs and outputs"
        )


def counterexample_outputs(impl, spec, trace):
    """out(impl after σ) minus out(spec after σ), empty unless σ ∈ Straces(spec)."""
    spec_set = after_trace(spec, trace)
    if not spec_set:
        return frozenset()
    return out_set(impl, after_trace(impl, trace)) - out_set(spec, spec_set)


def timed_counterexample_outputs(impl, spec, trace):
    spec_set = after_m_trace(spec, trace)
    if not spec_set:
        return frozenset()
    return out_m(impl, after_m_trace(impl, trace)) - out_m(spec, spec_set)


def check_ioco(impl, spec):
    require_valid(impl)
    require_valid(spec)
    _require_same_alphabet(impl, spec)
    require_input_enabled(impl)
    start = (frozenset([impl.initial]), frozenset([spec.initial]))
    witness, offending, explored = _pair_search(
        start,
        spec.observables,
        lambda q, a: after(impl, q, a),
        lambda q, a: after(spec, q, a),
        lambda q: out_set(impl, q),
        lambda q: out_set(spec, q),
    )
    logger.debug(f"ioco search explored {explored} pairs")
    if witness is None:
        return Conforms(explored=explored)
    if counterexample_outputs(impl, spec, witness) != offending:
        raise WitnessReplayError(f"witness {format_trace(witness)} does not replay")
    return Fails(witness, offending, explored=explored)


def _require_timed_pair(impl, spec):
    require_canonic(impl)
    require_canonic(spec)
    if impl.m != spec.m:
        raise ClockParameterError(
            f"M differs: {format_rational(impl.m)} vs {format_rational(spec.m)}"
        )
    _require_same_alphabet(impl, spec)
    if not is_iota(impl):
        raise NotInputEnabledError("implementation is not an IOTA")


def check_tioco_m(impl, spec):
    _require_timed_pair(impl, spec)
    steps = tuple(canonical_step(label) for label in spec.observables)
    start = (frozenset([impl.initial]), frozenset([spec.initial]))
    witness, offending, explored = _pair_search(
        start,
        steps,
        lambda q, s: after_m(impl, q, s),
        lambda q, s: after_m(spec, q, s),
        lambda q: out_m(impl, q),
        lambda q: out_m(spec, q),
    )
    logger.debug(f"tioco_M search explored {explored} pairs")
    if witness is None:
        return Conforms(explored=explored)
    if timed_counterexample_outputs(impl, spec, witness) != offending:
        raise WitnessReplayError(
            f"witness {format_timed_trace(witness)} does not replay"
        )
    return Fails(witness, offending, timed=True, explored=explored)


def check_tioco_via_projection(impl, spec):
    """Decide tioco_M by projecting both automata and deciding ioco."""
    _require_timed_pair(impl, spec)
    for name, ta in (("implementation", impl), ("specification", spec)):
        if not is_lift_image(ta):
            raise NotCanonicError([f"{name} is not the image of lift"])
    verdict = check_ioco(projected_lts(impl), projected_lts(spec))
    if verdict.conforms:
        return verdict
    return Fails(
        lift_trace(verdict.witness),
        lift_outputs(verdict.offending),
        timed=True,
        explored=verdict.explored,
    )
