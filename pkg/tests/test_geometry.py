import numpy as np
import pytest
from scipy import integrate

from multiphasetorsion.exceptions import (
    ConfigurationError,
    InvalidCurveError,
    InvalidPerturbationError,
)
from multiphasetorsion.fields import FourierField
from multiphasetorsion.geometry import (
    StarCurve,
    curve_eval,
    pullback_grid,
    tangential_jacobian,
)


def test_circle_point_normal_curvature():
    point, normal, kappa = curve_eval(StarCurve.circle(2.0), 0.0)
    assert np.allclose(point, [2.0, 0.0])
    assert np.allclose(normal, [1.0, 0.0])
    assert abs(kappa - 0.5) < 1e-15


def test_curvature_of_perturbed_curve():
    curve = StarCurve.from_perturbation(1.0, FourierField.mode(2, 0.1))
    _, normal, kappa = curve_eval(curve, 0.0)
    assert np.allclose(normal, [1.0, 0.0])
    assert abs(kappa - 1.65 / 1.331) < 1e-12


def test_non_positive_radius_is_rejected():
    with pytest.raises(InvalidCurveError):
        StarCurve((0.0, 0.0), FourierField(0.1, [0.5], [0.0]))


def test_normals_point_outward():
    curve = StarCurve.from_perturbation(
        1.0,
        FourierField.from_modes([(2, 0.05, 0.0), (5, 0.0, 0.02)]),
        center=(0.3, -0.1),
    )
    theta = np.linspace(0.0, 2.0 * np.pi, 50)
    radial = curve.point(theta) - np.asarray(curve.center)
    assert np.all(np.sum(curve.normal(theta) * radial, axis=-1) > 0.0)
    assert np.allclose(np.linalg.norm(curve.normal(theta), axis=-1), 1.0)


def test_normal_matches_difference_quotient():
    curve = StarCurve.from_perturbation(
        1.0, FourierField.from_modes([(2, 0.1, 0.0), (3, 0.0, 0.05)])
    )
    theta = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)

    def error(h):
        t = (curve.point(theta + h) - curve.point(theta - h)) / (2.0 * h)
        n = np.stack([t[:, 1], -t[:, 0]], axis=-1)
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        return np.max(np.linalg.norm(n - curve.normal(theta), axis=-1))

    coarse, fine = error(1e-2), error(5e-3)
    assert coarse < 1e-3
    assert 3.5 < coarse / fine < 4.5


def test_area_is_exact():
    curve = StarCurve.from_perturbation(1.0, FourierField.from_modes([(3, 0.1, 0.05)]))
    value, _ = integrate.quad(lambda t: 0.5 * float(curve.r(t)) ** 2, 0.0, 2.0 * np.pi)
    assert abs(curve.area() - value) < 1e-12


def test_perimeter_of_circle():
    assert abs(StarCurve.circle(1.5).perimeter() - 3.0 * np.pi) < 1e-12


def test_radial_gap_and_contains():
    curve = StarCurve.circle(1.0, center=(1.0, 0.0))
    points = np.array([[1.0, 0.0], [2.5, 0.0], [1.0, 0.5]])
    assert np.allclose(curve.radial_gap(points), [-1.0, 0.5, -0.5])
    assert list(curve.contains(points)) == [True, False, True]


def test_round_trip_through_dict():
    curve = StarCurve.from_perturbation(
        0.5, FourierField.mode(3, 0.03), center=(0.1, 0.2)
    )
    restored = StarCurve.from_dict(curve.to_dict())
    assert restored.center == curve.center
    assert np.allclose(restored.radius.to_vector(), curve.radius.to_vector())


def test_malformed_dict():
    with pytest.raises(InvalidCurveError):
        StarCurve.from_dict({"modes": []})


def test_tangential_jacobian():
    theta = np.linspace(0.0, 2.0 * np.pi, 8)
    assert np.allclose(tangential_jacobian(FourierField.zeros(3), theta), 1.0)
    xi = FourierField.mode(2, 0.1)
    expected = np.hypot(1.0 + 0.1 * np.cos(2 * theta), -0.2 * np.sin(2 * theta))
    assert np.allclose(tangential_jacobian(xi, theta), expected)
    with pytest.raises(InvalidPerturbationError):
        tangential_jacobian(FourierField.mode(1, 1.5), theta)


def test_pullback_grid_caches_geometry():
    curve = StarCurve.from_perturbation(1.0, FourierField.mode(2, 0.02))
    grid = pullback_grid(curve, 24)
    assert grid.size == 24
    assert np.allclose(grid.jacobians, curve.speed(grid.nodes))
    assert abs(grid.integrate(np.ones(24)) - curve.perimeter()) < 1e-10
    assert abs(grid.arclength_mean(np.full(24, 3.0)) - 3.0) < 1e-15


def test_pullback_grid_rejects_undersampling():
    curve = StarCurve.from_perturbation(1.0, FourierField.mode(8, 0.02))
    with pytest.raises(ConfigurationError):
        pullback_grid(curve, 20)
