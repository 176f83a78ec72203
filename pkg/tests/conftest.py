import numpy as np
import pytest
from hypothesis import settings

from core.types import Cohort, Criterion
from main import build_application

settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile("fast", max_examples=20, deadline=None)
settings.load_profile("default")


def make_cohort(n=400, group_count=3, seed=0, correlation=1.0):
    """Random biased cohort: sensitive members get higher scores"""
    rng = np.random.default_rng(seed)
    groups = np.concatenate([np.arange(group_count), rng.integers(0, group_count, n - group_count)])
    rho = np.linspace(0.2, 0.6, group_count)
    sensitive = (rng.random(n) < rho[groups]).astype(np.int8)
    sensitive[:group_count] = 1
    sensitive[group_count:2 * group_count] = 0
    groups[group_count:2 * group_count] = np.arange(group_count)
    scores = np.tanh(0.5 * rng.standard_normal(n) + correlation * (sensitive - 0.4))
    labels = (rng.random(n) < 0.5 * (scores + 1.0)).astype(np.int8)
    return Cohort(
        scores=scores,
        group_ids=groups,
        group_count=group_count,
        sensitive=sensitive,
        labels=labels,
    )


@pytest.fixture
def cohort():
    return make_cohort()


@pytest.fixture
def parity():
    return Criterion.parity()


@pytest.fixture
def cli():
    application = build_application()

    def run(*argv):
        return application.run([str(a) for a in argv])

    return run


@pytest.fixture
def write_csv(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
