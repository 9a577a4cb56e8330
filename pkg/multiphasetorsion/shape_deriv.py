"""
Shape derivative of the two-phase state with respect to normal perturbations
``xi`` of the unit circle, and its finite-difference check against the
Neumann-tracking map.

With ``sigma_2 = 1`` the derivative ``v'[xi]`` is sigma-harmonic in the unit
disk with boundary value ``(1/N)(1 - 1/sigma_3) xi``, so
``d_n v'[xi] = (1/N)(1 - 1/sigma_3) N(xi)`` with ``N`` the Dirichlet-to-Neumann
map of :mod:`multiphasetorsion.dtn`.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from multiphasetorsion.dtn import DtnSpectrum, apply
from multiphasetorsion.exceptions import DomainError, TorsionException
from multiphasetorsion.fields import FourierField
from multiphasetorsion.layered_solver import (
    LayeredGeometry,
    PiecewiseSolution,
    boundary_trace,
    solve,
)
from multiphasetorsion.settings import SolverSettings, get_settings

logger = logging.getLogger(__name__)

DEFAULT_EPSILONS = (1e-2, 5e-3, 2.5e-3)


def boundary_coefficient(dimension: int, sigma3: float) -> float:
    """
    ``(1/N)(1 - 1/sigma_3)``: the Dirichlet value of ``v'[xi]`` per unit ``xi``.
    """
    if not sigma3 > 0.0:
        raise DomainError("sigma_3 must be positive.")
    return (1.0 - 1.0 / sigma3) / dimension


@dataclass(frozen=True, eq=False)
class ShapeDerivative:
    direction: FourierField
    coefficient: float
    solution: PiecewiseSolution

    def trace(self) -> FourierField:
        return boundary_trace(
            self.solution, 1, order=0, truncation=self.direction.truncation
        )

    def normal_derivative(self) -> FourierField:
        """
        ``d_n v'[xi]`` on the unit circle.
        """
        return boundary_trace(
            self.solution, 1, order=1, truncation=self.direction.truncation
        )


def shape_derivative(
    xi: FourierField,
    R: float,
    sigma1: float,
    sigma3: float,
    settings: Optional[SolverSettings] = None,
) -> ShapeDerivative:
    """
    Solve ``-div(sigma grad v') = 0`` in the unit disk (``sigma_1`` in
    ``B_R``, 1 outside) with ``v' = (1/2)(1 - 1/sigma_3) xi`` on the circle.
    """
    coefficient = boundary_coefficient(2, sigma3)
    geometry = LayeredGeometry.concentric((R, 1.0), (sigma1, 1.0), source=0.0)
    solution = solve(geometry, xi * coefficient, settings=settings)
    return ShapeDerivative(direction=xi, coefficient=coefficient, solution=solution)


@dataclass(frozen=True, eq=False)
class FiniteDifferenceReport:
    """
    Central differences of the Neumann-tracking map along ``xi`` compared with
    the linearisation ``(1/N)(1 - 1/sigma_3) N(xi)``.
    """

    direction: FourierField
    base: FourierField
    epsilons: Sequence[float]
    reference: FourierField
    differences: List[FourierField] = field(repr=False)
    errors: List[float] = field(default_factory=list)

    @property
    def orders(self) -> List[float]:
        """
        Observed convergence orders between consecutive steps.
        """
        orders = []
        for (e0, e1), (h0, h1) in zip(
            zip(self.errors, self.errors[1:]), zip(self.epsilons, self.epsilons[1:])
        ):
            if e0 > 0.0 and e1 > 0.0:
                orders.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
            else:
                orders.append(float("nan"))
        return orders

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def to_dict(self) -> Dict:
        return {
            "direction": self.direction.to_dict(),
            "base": self.base.to_dict(),
            "reference": self.reference.to_dict(),
            "epsilon": list(self.epsilons),
            "error": list(self.errors),
            "order": self.orders,
        }

    def to_rows(self):
        orders = [float("nan")] + self.orders
        return [(h, e, o) for h, e, o in zip(self.epsilons, self.errors, orders)]


def fd_validate(
    xi: FourierField,
    params,
    eta: Optional[FourierField] = None,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    settings: Optional[SolverSettings] = None,
) -> FiniteDifferenceReport:
    """
    Compare ``(Psi(eps xi, eta) - Psi(-eps xi, eta)) / (2 eps)`` with the
    linearisation at the origin for every ``eps`` in the ladder.

    Args:
        xi: direction of the outer perturbation.
        params: :class:`~multiphasetorsion.constructor.ConstructionParams`.
        eta: inner perturbation at which to differentiate (default zero).
        epsilons: decreasing step sizes.

    Raises:
        DomainError: the largest step breaks the nesting of the interfaces.
    """
    from multiphasetorsion.constructor import psi_map

    settings = get_settings(settings)
    truncation = params.truncation_for(settings)
    xi = xi.resized(max(xi.truncation, truncation))
    if eta is None:
        eta = FourierField.zeros(truncation)
    epsilons = sorted((float(e) for e in epsilons), reverse=True)
    spectrum = DtnSpectrum(params.R, params.sigma1, xi.truncation, params.dimension)
    reference = (apply(spectrum, xi) * params.coefficient).resized(truncation)

    differences = []
    errors = []
    for position, eps in enumerate(epsilons):
        try:
            plus = psi_map(xi * eps, eta, params, settings=settings)
            minus = psi_map(xi * -eps, eta, params, settings=settings)
        except TorsionException as e:
            if position == 0:
                raise DomainError(
                    f"Step {eps:g} leaves the admissible perturbations: {e.detail}",
                    epsilon=eps,
                ) from e
            raise
        difference = (plus.residual - minus.residual) / (2.0 * eps)
        differences.append(difference)
        errors.append((difference - reference).l2_norm())
        logger.debug("Finite difference at eps=%.3e: error %.3e", eps, errors[-1])

    return FiniteDifferenceReport(
        direction=xi,
        base=eta,
        epsilons=epsilons,
        reference=reference,
        differences=differences,
        errors=errors,
    )
