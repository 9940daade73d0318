import numpy as np
import pytest

from hestonrom import (
    CoefficientField,
    DGSpace,
    RectDomain,
    build_structured_mesh,
    classify_edges,
)

ALL_DIRICHLET = {
    "v_min": "dirichlet",
    "v_max": "dirichlet",
    "x_min": "dirichlet",
    "x_max": "dirichlet",
}


@pytest.fixture
def unit_domain():
    return RectDomain(0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def laplace_field():
    return CoefficientField.constant(np.eye(2), np.zeros(2), 0.0)


def make_space(domain, n_v, n_x, fld, tags=None, degree=1):
    mesh = build_structured_mesh(domain, n_v, n_x)
    mesh = classify_edges(mesh, fld, tags or ALL_DIRICHLET)
    return DGSpace(mesh, degree=degree)


@pytest.fixture
def small_space(unit_domain, laplace_field):
    return make_space(unit_domain, 3, 3, laplace_field)
