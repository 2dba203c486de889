from dataclasses import dataclass, field
from typing import List

from coqpit import Coqpit

from tioco_lab.utils import parse_rational


@dataclass
class RandomModelConfig(Coqpit):
    """Shape of a randomly generated LTS."""

    max_states: int = 6
    n_inputs: int = 2
    n_outputs: int = 2
    edge_density: float = 0.4  # chance that a (state, label) pair gets an edge

    def check_params(self):
        if self.max_states < 1:
            raise ValueError("max_states must be at least 1")
        if self.n_inputs < 0 or self.n_outputs < 0:
            raise ValueError("alphabet sizes must be non-negative")
        if not 0.0 <= self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in [0, 1]")


@dataclass
class GenerationConfig(Coqpit):
    depth: int = 3
    random: bool = False  # False: every choice resolution up to depth
    seed: int = 0
    count: int = 50
    max_suite_size: int = 200_000


@dataclass
class LabConfig(Coqpit):
    """Batch settings for the theorem lab. Defaults are the acceptance run."""

    n_cases: int = 200
    seed: int = 42

    # random models
    max_states: int = 6
    max_inputs: int = 2
    max_outputs: int = 2
    edge_density: float = 0.4

    # quiescence bounds, as exact rationals
    m_samples: List[str] = field(default_factory=lambda: ["1", "3/2", "5"])

    depth: int = 3  # test depth for suite oracles
    trace_depth: int = 4  # trace depth for trace oracles
    tests_per_case: int = 4  # tests drawn per case for verdict correspondence
    max_suite_size: int = 20_000  # larger exhaustive suites are skipped

    inject_delta_bug: bool = False  # lift drops δ-loops; oracles must notice
    workers: int = 1
    oracles: List[str] = field(default_factory=list)  # empty runs all

    def m_values(self):
        values = [parse_rational(m) for m in self.m_samples]
        if any(m <= 0 for m in values):
            raise ValueError("every sampled M must be positive")
        return values
