"""
Closed-form radial solutions of the multi-phase torsion problem.

Every profile is stored symbolically: in shell ``k`` (``R_{k-1} <= r <= R_k``)
it reads ``u(r) = -r^2 / (2 N s_k) + A_k`` where ``s_k`` is the conductivity
governing the shell. For the true solution ``s_k = sigma_k``; the merged
profile uses ``sigma_3`` in the three innermost shells.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from multiphasetorsion.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseConfig:
    """
    Concentric layered configuration.

    Attributes:
        radii: ``R_1 < ... < R_m``.
        sigmas: positive conductivities ``sigma_1 ... sigma_m``.
        dimension: space dimension ``N >= 2``.
    """

    radii: Tuple[float, ...]
    sigmas: Tuple[float, ...]
    dimension: int = 2

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        sigmas = tuple(float(s) for s in self.sigmas)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "sigmas", sigmas)
        if not radii:
            raise ConfigurationError("At least one layer is required.")
        if len(radii) != len(sigmas):
            raise ConfigurationError(
                f"{len(radii)} radii but {len(sigmas)} conductivities."
            )
        if radii[0] <= 0.0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigurationError("Radii must be positive and strictly increasing.")
        if any(not s > 0.0 for s in sigmas):
            raise ConfigurationError("Conductivities must be positive.")
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ConfigurationError("Dimension must be an integer >= 2.")
        object.__setattr__(self, "dimension", int(self.dimension))
        for k in self.adjacent_equal_sigmas():
            logger.warning(
                "Layers %d and %d share the conductivity %g.", k, k + 1, sigmas[k - 1]
            )

    @property
    def m(self) -> int:
        return len(self.radii)

    @property
    def outer_radius(self) -> float:
        return self.radii[-1]

    def adjacent_equal_sigmas(self) -> List[int]:
        """
        Indices ``k`` (1-based) with ``sigma_k == sigma_{k+1}``; reported, not
        rejected.
        """
        return [
            k + 1 for k in range(self.m - 1) if self.sigmas[k] == self.sigmas[k + 1]
        ]

    def without_innermost(self) -> "PhaseConfig":
        if self.m < 2:
            raise DomainError(
                "Cannot remove a layer from a single-layer configuration."
            )
        return PhaseConfig(self.radii[1:], self.sigmas[1:], self.dimension)

    def to_dict(self):
        return {
            "radii": list(self.radii),
            "sigmas": list(self.sigmas),
            "dimension": self.dimension,
        }


@dataclass(frozen=True)
class RadialProfile:
    """
    Piecewise quadratic radial function ``-r^2/(2 N s_k) + A_k``.

    Attributes:
        config: the layering.
        governing: conductivity ``s_k`` governing each shell.
        constants: the constants ``A_k``.
        defect: mismatch recorded by :func:`phase_collapse` (0 for exact profiles).
    """

    config: PhaseConfig
    governing: Tuple[float, ...]
    constants: Tuple[float, ...]
    defect: float = 0.0

    def __post_init__(self):
        if len(self.governing) != self.config.m or len(self.constants) != self.config.m:
            raise ConfigurationError(
                "One governing conductivity and constant per shell."
            )

    @property
    def dimension(self) -> int:
        return self.config.dimension

    def phase_index(self, r, side: str = "inner") -> np.ndarray:
        """
        0-based shell index containing ``r``. At an interface ``side`` picks
        the shell below (``"inner"``) or above (``"outer"``).
        """
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > self.config.outer_radius * (1.0 + 1e-12)):
            raise DomainError("Radius outside [0, R_m].")
        radii = np.asarray(self.config.radii)
        index = np.searchsorted(radii, r, side="left" if side == "inner" else "right")
        return np.minimum(index, self.config.m - 1)

    def value(self, r, side: str = "inner") -> np.ndarray:
        r = np.asarray(r, dtype=float)
        k = self.phase_index(r, side)
        governing = np.asarray(self.governing)[k]
        constant = np.asarray(self.constants)[k]
        return -(r**2) / (2.0 * self.dimension * governing) + constant

    def derivative(self, r, order: int = 1, side: str = "inner") -> np.ndarray:
        """
        ``d^order u / dr^order``.
        """
        if order < 0:
            raise DomainError("Derivative order must be non-negative.")
        if order == 0:
            return self.value(r, side)
        r = np.asarray(r, dtype=float)
        governing = np.asarray(self.governing)[self.phase_index(r, side)]
        if order == 1:
            return -r / (self.dimension * governing)
        if order == 2:
            return np.broadcast_to(-1.0 / (self.dimension * governing), r.shape).copy()
        return np.zeros(r.shape)

    def flux(self, r, side: str = "inner") -> np.ndarray:
        """
        ``s(r) u'(r)``; equals ``-r/N`` for every profile.
        """
        governing = np.asarray(self.governing)[self.phase_index(r, side)]
        return governing * self.derivative(r, 1, side)

    # planar evaluation

    def value_at(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.value(np.hypot(points[..., 0], points[..., 1]))

    def gradient_at(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        r = np.hypot(points[..., 0], points[..., 1])
        governing = np.asarray(self.governing)[self.phase_index(r)]
        return -points / (self.dimension * governing)[..., None]

    def normal_derivative_at(
        self, points: np.ndarray, normals: np.ndarray, order: int = 1
    ) -> np.ndarray:
        """
        ``(d_n)^order u`` at planar points for arbitrary unit directions.
        """
        points = np.asarray(points, dtype=float)
        normals = np.asarray(normals, dtype=float)
        if order == 0:
            return self.value_at(points)
        r = np.hypot(points[..., 0], points[..., 1])
        governing = np.asarray(self.governing)[self.phase_index(r)]
        if order == 1:
            return -np.sum(points * normals, axis=-1) / (self.dimension * governing)
        if order == 2:
            return -np.sum(normals**2, axis=-1) / (self.dimension * governing)
        return np.zeros(r.shape)

    def interface_jumps(self) -> List[Tuple[float, float]]:
        """
        ``(value jump, flux jump)`` at every interface.
        """
        jumps = []
        for k, radius in enumerate(self.config.radii[:-1]):
            inner = self.value(radius, "inner")
            outer = self.value(radius, "outer")
            jumps.append(
                (
                    float(outer - inner),
                    float(self.flux(radius, "outer") - self.flux(radius, "inner")),
                )
            )
        return jumps

    def to_rows(
        self, samples_per_shell: int = 16
    ) -> List[Tuple[float, float, float, int]]:
        """
        ``(r, u, u', phase index)`` rows for CSV export; phase index is 1-based.
        """
        rows = []
        lower = 0.0
        for k, upper in enumerate(self.config.radii):
            for r in np.linspace(lower, upper, samples_per_shell):
                governing = self.governing[k]
                u = -(r**2) / (2.0 * self.dimension * governing) + self.constants[k]
                du = -r / (self.dimension * governing)
                rows.append((float(r), float(u), float(du), k + 1))
            lower = upper
        return rows


def _shell_constant(config: PhaseConfig, k: int) -> float:
    """
    ``A_{k+1}`` of the closed form, with the empty-sum convention.
    """
    radii, sigmas, n = config.radii, config.sigmas, config.dimension
    total = sum(
        (radii[j + 1] ** 2 - radii[j] ** 2) / sigmas[j + 1]
        for j in range(k, config.m - 1)
    )
    return (total + radii[k] ** 2 / sigmas[k]) / (2.0 * n)


def radial_solution(config: PhaseConfig) -> RadialProfile:
    """
    The radial solution ``u_0`` of the multi-phase torsion problem on
    concentric balls. It vanishes on the outer sphere.
    """
    constants = tuple(_shell_constant(config, k) for k in range(config.m))
    return RadialProfile(config, config.sigmas, constants)


def merged_solution(config: PhaseConfig) -> RadialProfile:
    """
    The auxiliary profile ``v_0``: the radial solution with ``sigma_1`` and
    ``sigma_2`` replaced by ``sigma_3``. It coincides with ``u_0`` outside
    ``R_3``.
    """
    if config.m < 3:
        raise DomainError("The merged profile needs at least three layers.")
    base = radial_solution(config)
    governing = (config.sigmas[2],) * 3 + config.sigmas[3:]
    constants = (base.constants[2],) * 3 + base.constants[3:]
    return RadialProfile(config, governing, constants)


def phase_collapse(profile: RadialProfile, alpha1: float) -> RadialProfile:
    """
    Absorb the innermost phase into the second one.

    The result lives on the ``m - 1`` layers ``Omega_2 ... Omega_m`` and is
    the second shell's quadratic continued to the centre. When ``alpha_1`` is
    the value of ``u`` on ``dOmega_1`` this equals the rescaled inner piece
    ``(sigma_1/sigma_2)(u - alpha_1) + alpha_1``. For any other ``alpha_1`` the
    profile is unchanged and only the gap between the two constants is
    recorded in ``defect``.
    """
    config = profile.config
    if config.m < 2:
        raise DomainError("Phase collapse needs at least two layers.")
    s1, s2 = profile.governing[0], profile.governing[1]
    # the rescaled inner quadratic is governed by s2
    inner_constant = (s1 / s2) * (profile.constants[0] - alpha1) + alpha1
    defect = abs(inner_constant - profile.constants[1])
    if defect > 1e-12 * max(1.0, abs(profile.constants[1])):
        logger.warning(
            "Collapsed inner phase is off by %.3e from the second shell.", defect
        )
    return RadialProfile(
        config.without_innermost(),
        profile.governing[1:],
        profile.constants[1:],
        defect=max(profile.defect, defect),
    )


def collapse_chain(profile: RadialProfile) -> List[RadialProfile]:
    """
    Collapse repeatedly down to a single layer, each time using the value of
    the current profile on its innermost interface.
    """
    chain = [profile]
    while chain[-1].config.m > 1:
        current = chain[-1]
        alpha1 = float(current.value(current.config.radii[0]))
        chain.append(phase_collapse(current, alpha1))
    return chain


def radial_constants(config: PhaseConfig, orders: Sequence[int]) -> List[float]:
    """
    ``(d_n)^k u_0`` on the outer sphere for each requested ``k``.
    """
    n, radius, sigma = config.dimension, config.radii[-1], config.sigmas[-1]
    values = []
    for k in orders:
        if k < 1:
            raise DomainError("Normal derivative orders start at 1.")
        if k == 1:
            values.append(-radius / (n * sigma))
        elif k == 2:
            values.append(-1.0 / (n * sigma))
        else:
            values.append(0.0)
    return values
