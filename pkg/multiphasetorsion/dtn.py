"""
The two-phase Dirichlet-to-Neumann map on concentric circles and the
jump-to-Neumann map of the layered problem.

For ``0 < R < 1`` let ``w`` solve ``-div(sigma grad w) = 0`` in the unit ball
with ``sigma = sigma_1`` in ``B_R`` and ``1`` outside, ``w = xi`` on the unit
sphere. ``N(xi) = d_n w`` is diagonal on spherical harmonics of degree ``k``
with eigenvalue :func:`eigenvalue`. Coefficients are stored as raw cosine/sine
amplitudes; the spectrum does not depend on that normalisation.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from multiphasetorsion.exceptions import DomainError, KernelObstructionError
from multiphasetorsion.fields import FourierField
from multiphasetorsion.layered_solver import (
    LayeredGeometry,
    PiecewiseSolution,
    boundary_trace,
    solve,
)
from multiphasetorsion.radial import PhaseConfig
from multiphasetorsion.settings import SolverSettings, get_settings

logger = logging.getLogger(__name__)

__all__ = [
    "DtnSpectrum",
    "FourierField",
    "JumpToNeumann",
    "apply",
    "eigenvalue",
    "invert",
    "jump_to_neumann",
    "mode_gains",
    "numerical_dtn",
    "spectrum_table",
]

INVERSION_MODES = ("dtn", "id_plus_dtn")


def _check_parameters(R: float, sigma1: float, dimension: int):
    if not 0.0 < R <= 1.0:
        raise DomainError(f"Inner radius must lie in (0, 1], got {R}.")
    if not sigma1 > 0.0:
        raise DomainError(f"Inner conductivity must be positive, got {sigma1}.")
    if int(dimension) != dimension or dimension < 2:
        raise DomainError(f"Dimension must be an integer >= 2, got {dimension}.")


def eigenvalue(k: int, R: float, sigma1: float, dimension: int = 2) -> float:
    """
    Eigenvalue of the two-phase Dirichlet-to-Neumann map on harmonics of
    degree ``k``::

        mu_k = k [(2-N-k)(1-s) + (N-2+k+k s) R^(2-N-2k)] / F,
        F    = k (1-s) + (N-2+k+k s) R^(2-N-2k).

    Numerator and ``F`` are multiplied by ``R^(2k+N-2)`` before evaluation so
    that large ``k`` do not overflow.

    Raises:
        DomainError: parameters outside ``R in (0, 1]``, ``sigma1 > 0``,
            ``N >= 2``, ``k >= 0``.
    """
    _check_parameters(R, sigma1, dimension)
    if int(k) != k or k < 0:
        raise DomainError(f"Mode index must be a non-negative integer, got {k}.")
    if k == 0:
        return 0.0
    n = dimension
    t = R ** (2 * k + n - 2)
    contrast = 1.0 - sigma1
    weight = n - 2 + k + k * sigma1
    denominator = k * contrast * t + weight
    # phi(R) >= phi(1) = sigma1 (2k - 2 + N) > 0
    if not denominator > 0.0:
        raise DomainError(f"F <= 0 at k={k}, R={R}, sigma1={sigma1}.")
    mu = k * ((2 - n - k) * contrast * t + weight) / denominator
    if not mu > 0.0:
        raise DomainError(f"mu_{k} <= 0 at R={R}, sigma1={sigma1}.")
    return float(mu)


@dataclass(frozen=True, eq=False)
class DtnSpectrum:
    """
    Eigenvalues ``mu_0 ... mu_K`` of the concentric two-phase map.
    """

    R: float
    sigma1: float
    truncation: int
    dimension: int = 2

    def __post_init__(self):
        _check_parameters(self.R, self.sigma1, self.dimension)
        if self.truncation < 0:
            raise DomainError("Truncation must be non-negative.")
        eigenvalues = np.array(
            [
                eigenvalue(k, self.R, self.sigma1, self.dimension)
                for k in range(self.truncation + 1)
            ]
        )
        eigenvalues.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eigenvalues)

    def __getitem__(self, k: int) -> float:
        return float(self.eigenvalues[k])

    def _check_field(self, field: FourierField):
        if field.truncation > self.truncation:
            raise DomainError(
                f"Field truncated at K={field.truncation} exceeds "
                f"the spectrum's K={self.truncation}."
            )

    def to_rows(self) -> List[Tuple[int, float]]:
        return [(k, float(mu)) for k, mu in enumerate(self.eigenvalues)]


def apply(spectrum: DtnSpectrum, xi: FourierField) -> FourierField:
    """
    ``N(xi)``; constants are mapped to zero and the result is zero-mean.
    """
    spectrum._check_field(xi)
    return xi.map_modes(spectrum.eigenvalues).project_zero_mean()


def invert(spectrum: DtnSpectrum, eta: FourierField, mode: str = "dtn") -> FourierField:
    """
    Solve ``N(xi) = eta`` (``mode="dtn"``) or ``xi + N(xi) = eta``
    (``mode="id_plus_dtn"``) mode by mode.

    Raises:
        KernelObstructionError: ``mode="dtn"`` with a nonzero mean, which lies
            in the kernel direction of ``N``.
    """
    spectrum._check_field(eta)
    if mode == "dtn":
        if eta.mean != 0.0:
            raise KernelObstructionError(
                f"Mean {eta.mean:.3e} cannot be inverted: N annihilates constants.",
                mean=eta.mean,
            )
        multipliers = np.zeros(spectrum.truncation + 1)
        multipliers[1:] = 1.0 / spectrum.eigenvalues[1:]
        return eta.map_modes(multipliers).project_zero_mean()
    if mode == "id_plus_dtn":
        return eta.map_modes(1.0 / (1.0 + spectrum.eigenvalues))
    raise DomainError(f"Unknown inversion mode '{mode}'; use one of {INVERSION_MODES}.")


def _mode_settings(k: int, settings: SolverSettings) -> SolverSettings:
    if k <= settings.TRUNCATION:
        return settings
    return settings.with_overrides(TRUNCATION=k)


def numerical_dtn(
    R: float, sigma1: float, k: int, settings: Optional[SolverSettings] = None
) -> float:
    """
    ``mu_k`` measured by the collocation solver: solve the homogeneous two-phase
    problem with data ``cos(k theta)`` on the unit circle and read the
    ``cos(k theta)`` coefficient of ``d_n w``.
    """
    settings = _mode_settings(k, get_settings(settings))
    if not 0.0 < R < 1.0:
        raise DomainError(f"Numerical spectrum needs 0 < R < 1, got {R}.")
    geometry = LayeredGeometry.concentric((R, 1.0), (sigma1, 1.0), source=0.0)
    solution = solve(geometry, FourierField.mode(k), settings=settings)
    flux = boundary_trace(solution, 1, order=1)
    value = flux.mean if k == 0 else flux.cosines[k - 1]
    logger.debug("Numerical mu_%d = %.16e (R=%g, sigma1=%g).", k, value, R, sigma1)
    return float(value)


def spectrum_table(
    R: float,
    sigma1: float,
    kmax: int,
    dimension: int = 2,
    numerical: bool = True,
    settings: Optional[SolverSettings] = None,
) -> List[Tuple[int, float, float, float]]:
    """
    Rows ``(k, mu closed form, mu numerical, relative error)``; the error is
    absolute for ``k = 0``. Without ``numerical`` (or for ``N != 2``) the
    numerical columns are NaN.
    """
    rows = []
    for k in range(kmax + 1):
        closed = eigenvalue(k, R, sigma1, dimension)
        if numerical and dimension == 2:
            measured = numerical_dtn(R, sigma1, k, settings)
            error = abs(measured - closed) / (abs(closed) if k else 1.0)
        else:
            measured = error = float("nan")
        rows.append((k, closed, measured, error))
    return rows


def _transfer_gain(config: PhaseConfig, k: int, interface: int) -> float:
    """
    ``d_r w(R_m)`` for a unit jump ``cos(k theta)`` on ``interface``, from the
    per-mode linear system across the concentric shells.
    """
    radii, sigmas, n = config.radii, config.sigmas, config.dimension
    m = config.m
    p, q = k, 2 - n - k

    # phase j uses (r/R_j)^p and (r/R_{j-1})^q; the disk has no singular term
    def basis(j, r, derivative):
        scale_p = radii[j]
        values = [
            (r / scale_p) ** p if not derivative else p * (r / scale_p) ** p / r,
        ]
        if j > 0:
            scale_q = radii[j - 1]
            values.append(
                (r / scale_q) ** q if not derivative else q * (r / scale_q) ** q / r
            )
        return values

    offsets = [0]
    for j in range(m):
        offsets.append(offsets[-1] + (1 if j == 0 else 2))
    size = offsets[-1]
    matrix = np.zeros((size, size))
    rhs = np.zeros(size)
    row = 0
    for i in range(m - 1):
        r = radii[i]
        conditions = ((False, (1.0, 1.0)), (True, (sigmas[i], sigmas[i + 1])))
        for derivative, weights in conditions:
            inner = basis(i, r, derivative)
            outer = basis(i + 1, r, derivative)
            matrix[row, offsets[i] : offsets[i + 1]] = [-weights[0] * v for v in inner]
            matrix[row, offsets[i + 1] : offsets[i + 2]] = [
                weights[1] * v for v in outer
            ]
            if not derivative and i == interface:
                rhs[row] = 1.0
            row += 1
    matrix[row, offsets[m - 1] :] = basis(m - 1, radii[-1], False)
    coefficients = scipy.linalg.solve(matrix, rhs)
    return float(np.dot(basis(m - 1, radii[-1], True), coefficients[offsets[m - 1] :]))


def mode_gains(config: PhaseConfig, kmax: int, interface: int = 1) -> np.ndarray:
    """
    Per-mode gains ``g_0 ... g_kmax`` of the jump-to-Neumann map: a value jump
    ``cos(k theta)`` on ``interface`` (0-based, default ``dOmega_2``) produces
    ``d_n w = g_k cos(k theta)`` on the outer circle. ``g_0 = 0``.

    Computed from the closed-form shell system, independently of the
    collocation solver.
    """
    if config.m < 3:
        raise DomainError("The jump-to-Neumann map needs at least three layers.")
    if not 0 <= interface < config.m - 1:
        raise DomainError(f"No interior interface with index {interface}.")
    gains = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        gains[k] = _transfer_gain(config, k, interface)
    return gains


@dataclass(frozen=True, eq=False)
class JumpToNeumann:
    """
    ``J(xi) = d_n w`` on the outer circle with the mode gains that produced it.
    """

    jump: FourierField
    field: FourierField
    gains: np.ndarray
    solution: PiecewiseSolution

    def gain_rows(self) -> List[Tuple[int, float]]:
        return [(k, float(g)) for k, g in enumerate(self.gains)]

    def predicted(self) -> FourierField:
        return self.jump.map_modes(self.gains[: self.jump.truncation + 1])


def jump_to_neumann(
    config: PhaseConfig,
    xi: FourierField,
    settings: Optional[SolverSettings] = None,
) -> JumpToNeumann:
    """
    Solve the homogeneous layered problem with value jump ``xi`` on
    ``dOmega_2``, zero flux jumps and ``w = 0`` on the outer circle, and
    return ``d_n w`` there. Gains ``g_k`` decay like ``k (R_2/R_m)^k``, so
    recovering ``xi`` from ``J(xi)`` is ill-conditioned.
    """
    settings = get_settings(settings)
    if config.m < 3:
        raise DomainError("The jump-to-Neumann map needs at least three layers.")
    geometry = LayeredGeometry.from_config(config, source=0.0)
    solution = solve(
        geometry,
        None,
        jumps={1: xi},
        settings=_mode_settings(xi.truncation, settings),
    )
    field = boundary_trace(solution, config.m - 1, order=1, truncation=xi.truncation)
    gains = mode_gains(config, max(xi.truncation, settings.TRUNCATION))
    return JumpToNeumann(jump=xi, field=field, gains=gains, solution=solution)
