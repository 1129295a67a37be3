import os
from datetime import timedelta

import pytest
from hypothesis import settings

from ldg2of.common.types import DomainDescriptor, MaterialParams
from ldg2of.grid.domain import make_grid

on_ci = bool(os.getenv('CI', False))
max_examples = 50
settings.register_profile('default',
                          deadline=(timedelta(minutes=1) / max_examples
                                    if on_ci
                                    else None),
                          max_examples=max_examples)
settings.load_profile('default')


@pytest.fixture
def unit_params():
    return MaterialParams(a2=1.0, b2=1.0, c2=1.0, eps=0.1)


@pytest.fixture
def b0_params():
    return MaterialParams(a2=1.0, b2=0.0, c2=1.0, eps=0.1)


@pytest.fixture
def disk32():
    return make_grid(DomainDescriptor(kind="disk"), 32)


@pytest.fixture
def disk64():
    return make_grid(DomainDescriptor(kind="disk"), 64)


@pytest.fixture
def square32():
    return make_grid(DomainDescriptor(kind="square"), 32)


@pytest.fixture
def ellipse32():
    return make_grid(DomainDescriptor(kind="ellipse", rx=1.0, ry=0.6), 32)
