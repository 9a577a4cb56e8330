import numpy as np
import pytest

from multiphasetorsion.constructor import ConstructionParams
from multiphasetorsion.dtn import eigenvalue
from multiphasetorsion.exceptions import DomainError
from multiphasetorsion.fields import FourierField
from multiphasetorsion.shape_deriv import (
    boundary_coefficient,
    fd_validate,
    shape_derivative,
)


@pytest.fixture
def params():
    return ConstructionParams.from_layers(
        (0.5, 1.0, 1.5), (2.0, 1.0, 3.0), truncation=8
    )


def test_boundary_coefficient():
    assert boundary_coefficient(2, 3.0) == pytest.approx(1.0 / 3.0, abs=1e-16)
    assert boundary_coefficient(2, 1.0) == 0.0
    with pytest.raises(DomainError):
        boundary_coefficient(2, 0.0)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_derivative_is_scaled_dtn(k, settings):
    direction = FourierField.mode(k, 1.0, "sin")
    derivative = shape_derivative(direction, 0.5, 2.0, 3.0, settings)
    trace = derivative.trace()
    flux = derivative.normal_derivative()
    assert abs(trace.sines[k - 1] - 1.0 / 3.0) < 1e-10
    assert abs(flux.sines[k - 1] - eigenvalue(k, 0.5, 2.0) / 3.0) < 1e-9
    flux_rest = np.delete(flux.to_vector(), flux.truncation + k)
    assert np.max(np.abs(flux_rest)) < 1e-9


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_finite_differences_converge_quadratically(k, params, settings):
    report = fd_validate(FourierField.mode(k), params, settings=settings)
    assert report.monotone
    for order in report.orders:
        assert 1.7 < order < 2.3
    expected = eigenvalue(k, 0.5, 2.0) / 3.0
    assert report.reference.cosines[k - 1] == pytest.approx(expected)


def test_finite_differences_around_inner_perturbation(params, settings):
    eta = FourierField.mode(2, 0.02, truncation=8)
    shifted = fd_validate(FourierField.mode(1), params, eta=eta, settings=settings)
    radial = fd_validate(FourierField.mode(1), params, settings=settings)
    # the reference is the linearisation at the radial configuration, so the
    # error no longer vanishes with the step
    assert shifted.errors[-1] > 10.0 * radial.errors[-1]
    assert shifted.base is eta


def test_report_serialisation(params, settings):
    report = fd_validate(
        FourierField.mode(2), params, epsilons=(1e-2, 5e-3), settings=settings
    )
    payload = report.to_dict()
    assert payload["epsilon"] == [1e-2, 5e-3]
    assert len(payload["error"]) == 2
    assert len(payload["order"]) == 1
    rows = report.to_rows()
    assert np.isnan(rows[0][2])
    assert rows[1][2] == report.orders[0]


def test_epsilons_are_sorted(params, settings):
    report = fd_validate(
        FourierField.mode(1), params, epsilons=(5e-3, 1e-2), settings=settings
    )
    assert list(report.epsilons) == [1e-2, 5e-3]


def test_step_breaking_the_geometry(params, settings):
    with pytest.raises(DomainError) as info:
        fd_validate(
            FourierField.mode(1), params, epsilons=(2.0, 1e-2), settings=settings
        )
    assert info.value.context["epsilon"] == 2.0
