import os

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from tioco_lab.config import RandomModelConfig
from tioco_lab.formats import parse
from tioco_lab.lab import make_input_enabled, random_lts

FIGURES = os.path.join(os.path.dirname(__file__), "data", "figures")

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def figure_path(name):
    return os.path.join(FIGURES, name)


def load_figure(name):
    with open(figure_path(name), encoding="utf-8") as f:
        return parse(f.read())


@pytest.fixture
def model_a():
    return load_figure("A.lts")


@pytest.fixture
def model_b():
    return load_figure("B.lts")


@pytest.fixture
def model_c():
    return load_figure("C.lts")


@pytest.fixture
def model_d():
    return load_figure("D.lts")


@pytest.fixture
def worked_test():
    """Stimulate i?, then observe; o_prime! always fails."""
    return load_figure("test_A.lts")


model_configs = st.builds(
    RandomModelConfig,
    max_states=st.integers(1, 5),
    n_inputs=st.integers(0, 2),
    n_outputs=st.integers(0, 2),
    edge_density=st.sampled_from([0.2, 0.4, 0.6]),
)

lts_models = st.builds(random_lts, seed=st.integers(0, 2**31 - 1), config=model_configs)


@st.composite
def model_pairs(draw, input_enabled=True):
    """(impl, spec) over one alphabet; impl is input-enabled."""
    config = draw(model_configs)
    spec = random_lts(draw(st.integers(0, 2**31 - 1)), config)
    impl = random_lts(draw(st.integers(0, 2**31 - 1)), config)
    if draw(st.booleans()):
        impl = spec
    return (make_input_enabled(impl) if input_enabled else impl), spec
