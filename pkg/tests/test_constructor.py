import csv
import json

import numpy as np
import pytest

from multiphasetorsion import constructor
from multiphasetorsion.constructor import (
    ConstructionParams,
    construct,
    export,
    fd_jacobian,
    glue,
    psi_map,
)
from multiphasetorsion.dtn import eigenvalue
from multiphasetorsion.exceptions import (
    AmplitudeError,
    ConfigurationError,
    ContractViolationError,
    DegenerateCoefficientError,
    DomainError,
    NonConvergenceError,
    ZeroAverageError,
)
from multiphasetorsion.fields import FourierField


@pytest.fixture
def params():
    return ConstructionParams.from_layers(
        (0.5, 1.0, 1.5), (2.0, 1.0, 3.0), truncation=8
    )


@pytest.fixture
def eta():
    return FourierField.mode(3, 0.03)


def test_params_normalisation():
    with pytest.raises(ConfigurationError):
        ConstructionParams.from_layers((0.5, 1.2, 1.5), (2.0, 1.0, 3.0))
    with pytest.raises(ConfigurationError):
        ConstructionParams.from_layers((0.5, 1.0, 1.5), (2.0, 1.5, 3.0))
    with pytest.raises(ConfigurationError):
        ConstructionParams.from_layers((0.5, 1.0), (2.0, 1.0))
    with pytest.raises(ConfigurationError):
        ConstructionParams.from_layers((0.5, 1.0, 1.5), (2.0, 1.0, 3.0), truncation=0)


def test_params_properties(params, settings):
    assert params.R == 0.5
    assert params.sigma1 == 2.0
    assert params.sigma3 == 3.0
    assert params.coefficient == pytest.approx(1.0 / 3.0)
    assert params.truncation_for(settings) == 8
    assert params.spectrum(settings).truncation == 8
    assert abs(float(params.merged.value(0.0)) - 0.1875) < 1e-15


def test_psi_vanishes_at_radial_configuration(params, settings):
    evaluation = psi_map(FourierField.zeros(8), FourierField.zeros(8), params, settings)
    assert evaluation.norm < 1e-10
    assert abs(evaluation.raw_mean) < 1e-10
    assert evaluation.residual.zero_mean


def test_psi_responds_to_inner_perturbation(params, eta, settings):
    evaluation = psi_map(FourierField.zeros(8), eta, params, settings)
    assert evaluation.norm > 1e-4
    assert abs(evaluation.raw_mean) < settings.MEAN_TOLERANCE
    # symmetric data keeps the mismatch in the cos(3k theta) modes
    residual = evaluation.residual
    assert np.max(np.abs(residual.sines)) < 1e-10
    assert abs(residual.cosines[2]) > 1e-4
    assert abs(residual.cosines[0]) < 1e-10


def test_zero_average_guard(params, eta, settings):
    strict = settings.with_overrides(MEAN_TOLERANCE=1e-300)
    with pytest.raises(ZeroAverageError) as info:
        psi_map(FourierField.zeros(8), eta, params, strict)
    assert info.value.context["raw_mean"] != 0.0


def test_jacobian_at_radial_configuration_is_diagonal(params, settings):
    zero = FourierField.zeros(8)
    jacobian = fd_jacobian(zero, zero, params, settings)
    assert jacobian.shape == (16, 16)
    expected = np.array([eigenvalue(k, 0.5, 2.0) / 3.0 for k in range(1, 9)] * 2)
    assert np.allclose(np.diag(jacobian), expected, rtol=1e-5)
    off_diagonal = jacobian - np.diag(np.diag(jacobian))
    assert np.max(np.abs(off_diagonal)) < 1e-6


def test_construction_converges(params, eta, settings):
    result = construct(eta, params, settings)
    assert result.iterations <= 30
    assert result.residual <= settings.NEWTON_TOLERANCE
    assert result.trace[0] > result.trace[-1]
    assert len(result.methods) == result.iterations - 1
    assert result.methods[0] == "quasi_newton"
    assert 1e-4 < result.xi.sup_norm() < 1e-1
    magnitudes = np.hypot(result.xi.cosines, result.xi.sines)
    assert np.argmax(magnitudes) == 2
    # only multiples of the symmetry order are excited
    assert np.max(np.delete(magnitudes, [2, 5])) < 1e-10


def test_construction_is_rotation_equivariant(params, eta, settings):
    angle = np.pi / 3.0
    base = construct(eta, params, settings)
    rotated = construct(eta.rotate(angle), params, settings)
    assert np.allclose(
        rotated.xi.to_vector(), base.xi.rotate(angle).to_vector(), atol=1e-8
    )
    # rotating by pi/3 flips the sign of the cos(3 theta) mode
    assert rotated.xi.cosines[2] == pytest.approx(-base.xi.cosines[2], rel=1e-6)


def test_switches_to_newton_after_stall(eta, settings):
    small = ConstructionParams.from_layers(
        (0.5, 1.0, 1.5), (2.0, 1.0, 3.0), truncation=4
    )
    result = construct(eta, small, settings.with_overrides(STALL_RATIO=1e-12))
    assert result.methods[0] == "quasi_newton"
    assert "newton" in result.methods
    assert result.residual <= settings.NEWTON_TOLERANCE


def test_degenerate_coefficient_fails_before_any_solve(monkeypatch, eta, settings):
    def fail(*args, **kwargs):
        raise AssertionError("psi_map must not be called")

    monkeypatch.setattr(constructor, "psi_map", fail)
    params = ConstructionParams.from_layers((0.5, 1.0, 1.5), (2.0, 1.0, 1.0))
    with pytest.raises(DegenerateCoefficientError):
        construct(eta, params, settings)


def test_amplitude_cap(params, settings):
    with pytest.raises(AmplitudeError) as info:
        construct(FourierField.mode(3, 0.06), params, settings)
    assert info.value.context["amplitude"] == pytest.approx(0.06, rel=1e-6)


def test_modes_above_truncation(params, settings):
    with pytest.raises(DomainError):
        construct(FourierField.mode(9, 0.01), params, settings)


def test_non_convergence_reports_trace(params, eta, settings):
    with pytest.raises(NonConvergenceError) as info:
        construct(eta, params, settings.with_overrides(NEWTON_MAX_ITERATIONS=1))
    assert len(info.value.context["trace"]) == 1
    assert info.value.context["residual"] > settings.NEWTON_TOLERANCE


def test_glue_requires_solved_map(params, eta, settings):
    with pytest.raises(ContractViolationError):
        glue(FourierField.zeros(8), eta, params, settings=settings)


def test_glued_configuration(constructed):
    glued = constructed.glued
    assert glued.geometry.m == 3
    assert glued.geometry.sigmas == (2.0, 1.0, 3.0)
    jumps = glued.interface_jumps()
    assert jumps["value"] < 1e-9
    assert jumps["flux"] < 1e-6
    constants = glued.outer_constants([1, 2, 3])
    assert constants == {1: -0.25, 2: pytest.approx(-1.0 / 6.0), 3: 0.0}
    points = np.array([[1.4, 0.0], [0.0, 0.2]])
    merged = constructed.params.merged
    assert glued.value(points)[0] == pytest.approx(float(merged.value(1.4)))
    with pytest.raises(DomainError):
        glued.relabelled()


def test_relabelled_configuration(settings):
    params = ConstructionParams.from_layers(
        (0.5, 1.0, 1.5), (2.0, 1.0, 2.0), truncation=4
    )
    result = construct(FourierField.mode(2, 0.02), params, settings)
    relabelled = result.glued.relabelled()
    assert relabelled.host_components == 2
    points = np.array([[0.0, 0.0], [0.75, 0.0], [1.3, 0.0]])
    assert list(relabelled.conductivity(points)) == [2.0, 1.0, 2.0]


def test_export(constructed, tmp_path, settings):
    paths = export(constructed, str(tmp_path), settings)
    with open(paths["result"]) as fh:
        payload = json.load(fh)
    assert payload["iterations"] == constructed.iterations
    assert payload["residual"] <= settings.NEWTON_TOLERANCE
    with open(paths["geometry"]) as fh:
        assert len(json.load(fh)["interfaces"]) == 3
    with open(paths["traces"]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [
        "theta",
        "outer_radius",
        "inner_radius",
        "normal_derivative",
        "psi",
    ]
    assert len(rows) == 1 + constructed.evaluation.values.size
    assert float(rows[1][2]) == pytest.approx(0.53)


def test_flux_mismatch_has_zero_raw_mean(params, settings, rng):
    for _ in range(20):
        xi = FourierField(
            0.0, 0.002 * rng.standard_normal(8), 0.002 * rng.standard_normal(8)
        )
        eta = FourierField(
            0.0, 0.002 * rng.standard_normal(8), 0.002 * rng.standard_normal(8)
        )
        evaluation = psi_map(xi, eta, params, settings)
        assert abs(evaluation.raw_mean) <= 1e-9


def test_residual_trace_decreases(constructed):
    trace = np.asarray(constructed.trace)
    assert trace.size >= 3
    assert np.all(np.diff(trace[1:]) < 0.0)
