import os
from fractions import Fraction

import pytest

from utils.formula import LinearTerm, Relative, Sort, TimedVar
from utils.settings import Settings
from utils.spec_parser import build_model, load_spec

SAMPLES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "samples")


def sample_path(name: str) -> str:
    return os.path.join(SAMPLES, name)


def var(name: str, offset: int = 0, sort: Sort = Sort.REAL) -> TimedVar:
    return TimedVar(name, Relative(offset), sort)


def term(name: str, offset: int = 0, coef=1, sort: Sort = Sort.REAL) -> LinearTerm:
    return LinearTerm.var(var(name, offset, sort), Fraction(coef))


@pytest.fixture
def samples_dir() -> str:
    return SAMPLES


@pytest.fixture
def load_sample():
    """Parse and build one of the sample systems"""
    def load(name: str):
        return build_model(load_spec(sample_path(name)))
    return load


@pytest.fixture
def settings() -> Settings:
    return Settings(parallel=False, progress=False)
