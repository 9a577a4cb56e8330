"""
Star-shaped curves ``r(theta) = r0 + sum_k a_k cos(k theta) + b_k sin(k theta)``
about a centre, with the differential geometry needed by the solver: outward
normals, curvature, arclength Jacobians and collocation grids.

Derivatives of the radius are taken from its Fourier coefficients, never by
differencing.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from multiphasetorsion.exceptions import (
    ConfigurationError,
    InvalidCurveError,
    InvalidPerturbationError,
)
from multiphasetorsion.fields import FourierField, equispaced_nodes

logger = logging.getLogger(__name__)

Angle = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class StarCurve:
    """
    A closed Jordan curve given in polar form about ``center``.

    Attributes:
        center: centre of the polar parametrisation.
        radius: the radius as a :class:`FourierField` (its mean is ``r0``).
    """

    center: Tuple[float, float]
    radius: FourierField

    def __post_init__(self):
        center = tuple(float(c) for c in self.center)
        if len(center) != 2:
            raise InvalidCurveError("Curve centre must be a point in the plane.")
        object.__setattr__(self, "center", center)
        samples = equispaced_nodes(4 * max(self.truncation, 1))
        smallest = float(np.min(self.radius(samples)))
        if not smallest > 0.0:
            raise InvalidCurveError(
                f"Curve radius reaches {smallest:.3e} <= 0.", min_radius=smallest
            )

    @classmethod
    def circle(
        cls, radius: float, center: Sequence[float] = (0.0, 0.0), truncation: int = 0
    ) -> "StarCurve":
        return cls(tuple(center), FourierField.constant(radius, truncation))

    @classmethod
    def from_perturbation(
        cls,
        radius: float,
        perturbation: FourierField,
        center: Sequence[float] = (0.0, 0.0),
    ) -> "StarCurve":
        """
        The normal graph ``x + perturbation(x) n(x)`` over the circle of the
        given radius, i.e. ``r(theta) = radius + perturbation(theta)``.
        """
        return cls(tuple(center), perturbation.with_mean(radius + perturbation.mean))

    @classmethod
    def from_dict(cls, data: Dict) -> "StarCurve":
        try:
            center = data.get("center", [0.0, 0.0])
            radius = FourierField.from_modes(
                data.get("modes", []),
                mean=float(data["r0"]),
                truncation=data.get("truncation"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidCurveError(f"Malformed curve description: {e}") from e
        return cls(tuple(center), radius)

    def to_dict(self) -> Dict:
        return {
            "center": list(self.center),
            "r0": self.r0,
            "modes": [[k, a, b] for k, a, b in self.radius.modes],
        }

    # structure

    @property
    def r0(self) -> float:
        return self.radius.mean

    @property
    def modes(self):
        return self.radius.modes

    @property
    def truncation(self) -> int:
        return self.radius.truncation

    @property
    def complex_center(self) -> complex:
        return complex(*self.center)

    def translated(self, offset: Sequence[float]) -> "StarCurve":
        return StarCurve(
            (self.center[0] + offset[0], self.center[1] + offset[1]), self.radius
        )

    def is_circle(self, tolerance: float = 0.0) -> bool:
        return self.radius.oscillation_energy() <= tolerance

    # pointwise geometry

    def r(self, theta: Angle, order: int = 0) -> np.ndarray:
        return self.radius.derivative(order)(theta)

    def point(self, theta: Angle) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        r = self.r(theta)
        return np.stack(
            [self.center[0] + r * np.cos(theta), self.center[1] + r * np.sin(theta)],
            axis=-1,
        )

    def tangent(self, theta: Angle) -> np.ndarray:
        """
        The (unnormalised) velocity ``dP/dtheta``.
        """
        theta = np.asarray(theta, dtype=float)
        r, dr = self.r(theta), self.r(theta, 1)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def speed(self, theta: Angle) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.hypot(self.r(theta), self.r(theta, 1))

    def normal(self, theta: Angle) -> np.ndarray:
        # counter-clockwise tangent rotated by -pi/2
        t = self.tangent(theta)
        n = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def curvature(self, theta: Angle) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        r, dr, ddr = self.r(theta), self.r(theta, 1), self.r(theta, 2)
        return (r**2 + 2.0 * dr**2 - r * ddr) / (r**2 + dr**2) ** 1.5

    def angle_of(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.arctan2(
            points[..., 1] - self.center[1], points[..., 0] - self.center[0]
        )

    def radial_gap(self, points: np.ndarray) -> np.ndarray:
        """
        ``|x - center| - r(angle(x))``: negative inside, positive outside.
        """
        points = np.asarray(points, dtype=float)
        distance = np.hypot(
            points[..., 0] - self.center[0], points[..., 1] - self.center[1]
        )
        return distance - self.r(self.angle_of(points))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return self.radial_gap(points) < 0.0

    # global quantities

    def radius_range(self, count: int = None) -> Tuple[float, float]:
        if count is None:
            count = 16 * (self.truncation + 1)
        values = self.r(equispaced_nodes(count))
        return float(values.min()), float(values.max())

    def area(self) -> float:
        """
        Enclosed area ``(1/2) int r^2 dtheta``, exact from the coefficients.
        """
        return float(
            np.pi * self.r0**2
            + 0.5
            * np.pi
            * (np.sum(self.radius.cosines**2) + np.sum(self.radius.sines**2))
        )

    def perimeter(self) -> float:
        value, _ = integrate.quad(
            lambda t: float(self.speed(t)),
            0.0,
            2.0 * np.pi,
            epsabs=1e-13,
            epsrel=1e-13,
            limit=200,
        )
        return value


def curve_eval(curve: StarCurve, theta: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Point, outward unit normal and curvature of ``curve`` at ``theta``.

    .. code-block:: python

        point, normal, kappa = curve_eval(StarCurve.circle(2.0), 0.0)
        # point == (2, 0), normal == (1, 0), kappa == 0.5
    """
    radius = float(curve.r(theta))
    if not radius > 0.0:
        raise InvalidCurveError(f"Non-positive radius {radius:.3e} at theta={theta}.")
    return curve.point(theta), curve.normal(theta), float(curve.curvature(theta))


def tangential_jacobian(xi: FourierField, theta: Angle) -> np.ndarray:
    """
    Arclength distortion ``sqrt((1 + xi)^2 + xi'^2)`` of the map ``Id + xi n``
    from the unit circle onto the perturbed curve ``r = 1 + xi``.
    """
    theta = np.asarray(theta, dtype=float)
    radius = 1.0 + xi(theta)
    if np.any(radius <= 0.0):
        raise InvalidPerturbationError(
            f"1 + xi reaches {float(np.min(radius)):.3e} <= 0."
        )
    return np.hypot(radius, xi.derivative()(theta))


@dataclass(frozen=True, eq=False)
class CollocationGrid:
    """
    Cached per-node geometry of a curve at ``M`` equispaced parameter values.
    """

    curve: StarCurve
    nodes: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    jacobians: np.ndarray
    curvatures: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def complex_points(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def complex_normals(self) -> np.ndarray:
        return self.normals[:, 0] + 1j * self.normals[:, 1]

    def integrate(self, values: np.ndarray) -> float:
        """
        Trapezoidal arclength integral, spectrally accurate for smooth data.
        """
        return float(np.sum(values * self.jacobians) * 2.0 * np.pi / self.size)

    def arclength_mean(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.jacobians) / np.sum(self.jacobians))


def pullback_grid(curve: StarCurve, count: int) -> CollocationGrid:
    """
    Sample ``curve`` at ``count`` equispaced parameter values.

    Raises:
        ConfigurationError: if ``count < 2 (2K + 1)``.
    """
    required = 2 * (2 * curve.truncation + 1)
    if count < required:
        raise ConfigurationError(
            f"{count} collocation nodes undersample a curve with K={curve.truncation}; "
            f"need at least {required}."
        )
    nodes = equispaced_nodes(count)
    points = curve.point(nodes)
    points.setflags(write=False)
    return CollocationGrid(
        curve=curve,
        nodes=nodes,
        points=points,
        normals=curve.normal(nodes),
        jacobians=curve.speed(nodes),
        curvatures=curve.curvature(nodes),
    )
