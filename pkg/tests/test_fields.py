import numpy as np
import pytest

from multiphasetorsion.exceptions import DomainError
from multiphasetorsion.fields import FourierField, equispaced_nodes


def test_from_samples_recovers_trigonometric_polynomial():
    theta = equispaced_nodes(32)
    values = 0.3 + 2.0 * np.cos(3 * theta) - 0.5 * np.sin(7 * theta)
    field = FourierField.from_samples(values, 10)
    assert abs(field.mean - 0.3) < 1e-14
    assert abs(field.cosines[2] - 2.0) < 1e-14
    assert abs(field.sines[6] + 0.5) < 1e-14
    assert np.max(np.abs(np.delete(field.cosines, 2))) < 1e-14


def test_from_samples_rejects_unresolvable_truncation():
    with pytest.raises(DomainError):
        FourierField.from_samples(np.zeros(16), 8)


def test_zero_mean_flag_requires_zero_mean():
    with pytest.raises(DomainError):
        FourierField(1.0, [0.0], [0.0], zero_mean=True)


def test_mode_and_evaluation():
    field = FourierField.mode(2, 0.5, "sin", truncation=4)
    assert field.truncation == 4
    assert field.zero_mean
    theta = np.linspace(0.0, 2.0 * np.pi, 9)
    assert np.allclose(field(theta), 0.5 * np.sin(2 * theta), atol=1e-15)


def test_derivative_from_coefficients():
    field = FourierField.from_modes([(2, 1.0, 0.0), (3, 0.0, 2.0)], mean=4.0)
    theta = np.linspace(0.0, 2.0 * np.pi, 13)
    expected = -2.0 * np.sin(2 * theta) + 6.0 * np.cos(3 * theta)
    assert np.allclose(field.derivative()(theta), expected, atol=1e-13)
    second = -4.0 * np.cos(2 * theta) - 18.0 * np.sin(3 * theta)
    assert np.allclose(field.derivative(2)(theta), second, atol=1e-13)


def test_rotate_shifts_argument():
    field = FourierField.from_modes([(1, 0.2, -0.3), (4, 1.0, 0.5)], mean=0.1)
    theta = np.linspace(0.0, 2.0 * np.pi, 17)
    angle = 0.7
    assert np.allclose(field.rotate(angle)(theta), field(theta - angle), atol=1e-14)


def test_l2_norm_matches_quadrature():
    field = FourierField.from_modes([(1, 0.5, 0.0), (2, 0.0, -1.5)], mean=0.25)
    values = field.samples(64)
    quadrature = np.sqrt(np.sum(values**2) * 2.0 * np.pi / 64)
    assert abs(field.l2_norm() - quadrature) < 1e-13


def test_arithmetic_aligns_truncations():
    a = FourierField.mode(1, 1.0)
    b = FourierField.mode(3, 2.0)
    total = a + b
    assert total.truncation == 3
    assert total.zero_mean
    assert np.allclose(total.cosines, [1.0, 0.0, 2.0])
    assert (total - b).resized(1).cosines[0] == 1.0
    assert np.allclose((total * 2.0).cosines, [2.0, 0.0, 4.0])
    assert np.allclose((total / 2.0).cosines, [0.5, 0.0, 1.0])


def test_adding_constant_drops_zero_mean():
    field = FourierField.mode(1) + 1.0
    assert field.mean == 1.0
    assert not field.zero_mean


def test_map_modes():
    field = FourierField.from_modes([(1, 1.0, 1.0), (2, 1.0, 0.0)], mean=3.0)
    mapped = field.map_modes([0.0, 2.0, 3.0])
    assert mapped.mean == 0.0
    assert np.allclose(mapped.cosines, [2.0, 3.0])
    assert np.allclose(mapped.sines, [2.0, 0.0])
    with pytest.raises(DomainError):
        field.map_modes([1.0, 1.0])


def test_zero_mean_vector_holds_only_oscillating_modes():
    field = FourierField.from_modes([(1, 1.0, 2.0), (2, 3.0, 4.0)]).project_zero_mean()
    assert np.allclose(field.to_vector(), [1.0, 3.0, 2.0, 4.0])
    restored = FourierField.from_vector(field.to_vector(), zero_mean=True)
    assert np.allclose(restored.sines, [2.0, 4.0])


def test_from_dict_accepts_list_of_modes():
    field = FourierField.from_dict([[3, 0.03, 0.0]])
    assert field.truncation == 3
    assert field.cosines[2] == 0.03


def test_sup_norm_and_oscillation_energy():
    field = FourierField.from_modes([(3, 0.03, 0.04)])
    assert 0.0499 < field.sup_norm(256) <= 0.05 + 1e-15
    assert abs(field.oscillation_energy() - 0.05) < 1e-15
