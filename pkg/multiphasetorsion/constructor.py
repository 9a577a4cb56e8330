"""
Construction of non-radial layered configurations with infinitely many
overdetermined conditions.

Given a perturbation ``eta`` of the innermost circle ``|x| = R_1`` we look for
a perturbation ``xi`` of the unit circle such that the two-phase state
``v_{xi,eta}`` (``sigma_1`` in ``D_eta``, 1 in between, ``v = v_0`` on
``dOmega_xi``) has the same flux as the merged radial profile ``v_0``::

    Psi(xi, eta) = (d_n v_{xi,eta} - sigma_3 d_n v_0) o (Id + xi n) * J(xi) = 0.

Once ``Psi = 0`` the two-phase state glues with the radial profile outside
``Omega_xi``, so every normal derivative of the glued solution is constant on
the outer circle.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from multiphasetorsion.dtn import DtnSpectrum, invert
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
from multiphasetorsion.geometry import StarCurve
from multiphasetorsion.layered_solver import LayeredGeometry, PiecewiseSolution, solve
from multiphasetorsion.radial import (
    PhaseConfig,
    RadialProfile,
    merged_solution,
    radial_constants,
)
from multiphasetorsion.settings import SolverSettings, get_settings
from multiphasetorsion.shape_deriv import boundary_coefficient

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConstructionParams:
    """
    Layering used by the construction, normalised so that ``R_2 = 1`` and
    ``sigma_2 = 1``.

    Attributes:
        config: the full ``m``-layer concentric configuration (``m >= 3``).
        truncation: Fourier truncation of ``xi`` and ``eta``; ``None`` uses
            the ``TRUNCATION`` setting.
    """

    config: PhaseConfig
    truncation: Optional[int] = None

    def __post_init__(self):
        config = self.config
        if config.m < 3:
            raise ConfigurationError("The construction needs at least three layers.")
        if config.dimension != 2:
            raise ConfigurationError("The construction is planar; use dimension 2.")
        if config.radii[1] != 1.0 or config.sigmas[1] != 1.0:
            raise ConfigurationError(
                "The construction is normalised with R_2 = 1 and sigma_2 = 1, "
                f"got R_2 = {config.radii[1]} and sigma_2 = {config.sigmas[1]}."
            )
        if self.truncation is not None and self.truncation < 1:
            raise ConfigurationError("Truncation must be at least 1.")
        object.__setattr__(self, "merged", merged_solution(config))

    @classmethod
    def from_layers(
        cls, radii: Sequence[float], sigmas: Sequence[float], truncation=None
    ):
        return cls(PhaseConfig(tuple(radii), tuple(sigmas)), truncation)

    @property
    def R(self) -> float:
        return self.config.radii[0]

    @property
    def sigma1(self) -> float:
        return self.config.sigmas[0]

    @property
    def sigma3(self) -> float:
        return self.config.sigmas[2]

    @property
    def dimension(self) -> int:
        return self.config.dimension

    @property
    def coefficient(self) -> float:
        return boundary_coefficient(self.dimension, self.sigma3)

    def truncation_for(self, settings: SolverSettings) -> int:
        return self.truncation if self.truncation is not None else settings.TRUNCATION

    def spectrum(self, settings: SolverSettings) -> DtnSpectrum:
        return DtnSpectrum(
            self.R, self.sigma1, self.truncation_for(settings), self.dimension
        )

    def to_dict(self) -> Dict:
        return {**self.config.to_dict(), "truncation": self.truncation}


@dataclass(frozen=True, eq=False)
class PsiEvaluation:
    """
    One evaluation of ``Psi(xi, eta)``.

    Attributes:
        residual: zero-mean projection of the pulled-back flux mismatch.
        raw_mean: its mean before projection (zero up to round-off).
        values: the mismatch at the collocation nodes of ``dOmega_xi``.
        solution: the two-phase state ``v_{xi,eta}``.
    """

    xi: FourierField
    eta: FourierField
    residual: FourierField
    raw_mean: float
    values: np.ndarray = field(repr=False)
    solution: PiecewiseSolution = field(repr=False)

    @property
    def norm(self) -> float:
        return self.residual.l2_norm()


def perturbed_geometry(
    xi: FourierField, eta: FourierField, params: ConstructionParams
) -> LayeredGeometry:
    inner = StarCurve.from_perturbation(params.R, eta)
    outer = StarCurve.from_perturbation(1.0, xi)
    return LayeredGeometry((inner, outer), (params.sigma1, 1.0), source=1.0)


def psi_map(
    xi: FourierField,
    eta: FourierField,
    params: ConstructionParams,
    settings: Optional[SolverSettings] = None,
) -> PsiEvaluation:
    """
    Evaluate the Neumann-tracking map.

    Raises:
        GeometryError: ``dD_eta`` not nested inside ``dOmega_xi``.
        ZeroAverageError: the mismatch has a mean above ``MEAN_TOLERANCE``.
    """
    settings = get_settings(settings)
    truncation = params.truncation_for(settings)
    geometry = perturbed_geometry(xi, eta, params)
    merged = params.merged
    solution = solve(geometry, merged.value_at, settings=settings)

    grid, flux = solution.trace_values(1, order=1, side="inner")
    target = params.sigma3 * merged.normal_derivative_at(grid.points, grid.normals, 1)
    values = (flux - target) * grid.jacobians
    projected = FourierField.from_samples(values, truncation)
    raw_mean = projected.mean
    if abs(raw_mean) > settings.MEAN_TOLERANCE:
        raise ZeroAverageError(
            f"Flux mismatch has mean {raw_mean:.3e} "
            f"above {settings.MEAN_TOLERANCE:.1e}.",
            raw_mean=raw_mean,
        )
    return PsiEvaluation(
        xi=xi,
        eta=eta,
        residual=projected.project_zero_mean(),
        raw_mean=raw_mean,
        values=values,
        solution=solution,
    )


def fd_jacobian(
    xi: FourierField,
    eta: FourierField,
    params: ConstructionParams,
    settings: Optional[SolverSettings] = None,
    step: Optional[float] = None,
) -> np.ndarray:
    """
    Central-difference Jacobian of ``Psi(., eta)`` at ``xi`` in the ``2K``
    zero-mean coordinates ``(a_1..a_K, b_1..b_K)``.
    """
    settings = get_settings(settings)
    truncation = params.truncation_for(settings)
    step = settings.JACOBIAN_STEP if step is None else step
    base = xi.resized(truncation).project_zero_mean().to_vector()

    def residual(vector: np.ndarray) -> np.ndarray:
        shifted = FourierField.from_vector(vector, zero_mean=True)
        return psi_map(shifted, eta, params, settings).residual.to_vector()

    columns = []
    for j in range(base.size):
        offset = np.zeros(base.size)
        offset[j] = step
        difference = residual(base + offset) - residual(base - offset)
        columns.append(difference / (2.0 * step))
    return np.column_stack(columns)


@dataclass(frozen=True, eq=False)
class RelabelledConfiguration:
    """
    Two-phase reading of a glued three-layer configuration with
    ``sigma_1 = sigma_3``: the inclusion is the annulus between ``dD_eta`` and
    ``dOmega_xi`` and the host ``D_eta`` plus the outer shell is disconnected.
    """

    inclusion_inner: StarCurve
    inclusion_outer: StarCurve
    outer: StarCurve
    inclusion_sigma: float
    host_sigma: float

    @property
    def host_components(self) -> int:
        return 2

    def conductivity(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        inside = self.inclusion_outer.contains(points) & ~self.inclusion_inner.contains(
            points
        )
        return np.where(inside, self.inclusion_sigma, self.host_sigma)


@dataclass(frozen=True, eq=False)
class GluedConfiguration:
    """
    The ``m``-layer configuration ``D_eta, Omega_xi, Omega_3 ... Omega_m`` with
    the glued solution: ``v_{xi,eta}`` inside ``Omega_xi`` and the radial
    profile ``v_0`` outside. The outer region is radial, so ``(d_n)^k v`` is
    constant on ``dOmega_m`` for every ``k``.
    """

    params: ConstructionParams
    xi: FourierField
    eta: FourierField
    geometry: LayeredGeometry
    inner: PiecewiseSolution = field(repr=False)
    outer: RadialProfile = field(repr=False)

    def _inside(self, points: np.ndarray) -> np.ndarray:
        return self.geometry.interfaces[1].contains(points)

    def value(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        inside = self._inside(points)
        out = np.empty(len(points))
        if inside.any():
            out[inside] = self.inner.value(points[inside])
        if (~inside).any():
            out[~inside] = self.outer.value_at(points[~inside])
        return out

    def normal_derivative(
        self, points: np.ndarray, normals: np.ndarray, order: int = 1
    ) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        normals = np.broadcast_to(np.asarray(normals, dtype=float), points.shape)
        inside = self._inside(points)
        out = np.empty(len(points))
        if inside.any():
            out[inside] = self.inner.normal_derivative(
                points[inside], normals[inside], order
            )
        if (~inside).any():
            out[~inside] = self.outer.normal_derivative_at(
                points[~inside], normals[~inside], order
            )
        return out

    def interface_jumps(self) -> Dict[str, float]:
        """
        Sup-norms of ``[v]`` and ``[sigma d_n v]`` over the nodes of ``dOmega_xi``.
        """
        grid, inside_value = self.inner.trace_values(1, 0, "inner")
        _, inside_flux = self.inner.trace_values(1, 1, "inner")
        outside_value = self.outer.value_at(grid.points)
        outside_flux = self.params.sigma3 * self.outer.normal_derivative_at(
            grid.points, grid.normals, 1
        )
        return {
            "value": float(np.max(np.abs(outside_value - inside_value))),
            "flux": float(np.max(np.abs(outside_flux - inside_flux))),
        }

    def outer_constants(self, orders: Sequence[int]) -> Dict[int, float]:
        return dict(zip(orders, radial_constants(self.params.config, orders)))

    def relabelled(self) -> RelabelledConfiguration:
        config = self.params.config
        if config.m != 3 or config.sigmas[0] != config.sigmas[2]:
            raise DomainError("Relabelling needs three layers with sigma_1 == sigma_3.")
        return RelabelledConfiguration(
            inclusion_inner=self.geometry.interfaces[0],
            inclusion_outer=self.geometry.interfaces[1],
            outer=self.geometry.interfaces[2],
            inclusion_sigma=config.sigmas[1],
            host_sigma=config.sigmas[0],
        )


def glue(
    xi: FourierField,
    eta: FourierField,
    params: ConstructionParams,
    evaluation: Optional[PsiEvaluation] = None,
    settings: Optional[SolverSettings] = None,
) -> GluedConfiguration:
    """
    Glue ``v_{xi,eta}`` with the radial profile outside ``Omega_xi``.

    Raises:
        ContractViolationError: ``Psi(xi, eta)`` is above ``NEWTON_TOLERANCE``.
    """
    settings = get_settings(settings)
    if evaluation is None:
        evaluation = psi_map(xi, eta, params, settings)
    if evaluation.norm > settings.NEWTON_TOLERANCE:
        raise ContractViolationError(
            f"Cannot glue: flux mismatch {evaluation.norm:.3e} above "
            f"{settings.NEWTON_TOLERANCE:.1e}.",
            residual=evaluation.norm,
        )
    config = params.config
    two_phase = evaluation.solution.geometry
    outer_curves = tuple(StarCurve.circle(r) for r in config.radii[2:])
    geometry = LayeredGeometry(
        two_phase.interfaces + outer_curves, config.sigmas, source=1.0
    )
    return GluedConfiguration(
        params=params,
        xi=xi,
        eta=eta,
        geometry=geometry,
        inner=evaluation.solution,
        outer=params.merged,
    )


@dataclass(frozen=True, eq=False)
class ConstructionResult:
    """
    Attributes:
        trace: ``||Psi||_L2`` at every iterate, the last one converged.
        methods: the update used after each evaluation (``"quasi_newton"`` or
            ``"newton"``), one fewer than ``trace``.
    """

    eta: FourierField
    xi: FourierField
    params: ConstructionParams
    trace: List[float]
    methods: List[str]
    evaluation: PsiEvaluation = field(repr=False)
    glued: GluedConfiguration = field(repr=False)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def residual(self) -> float:
        return self.trace[-1]

    @property
    def geometry(self) -> LayeredGeometry:
        return self.glued.geometry

    def to_dict(self) -> Dict:
        return {
            "eta": self.eta.to_dict(),
            "xi": self.xi.to_dict(),
            "params": self.params.to_dict(),
            "residual": self.residual,
            "iterations": self.iterations,
            "trace": list(self.trace),
            "methods": list(self.methods),
            "raw_mean": self.evaluation.raw_mean,
            "xi_sup_norm": self.xi.sup_norm(),
            "interface_jumps": self.glued.interface_jumps(),
        }


def construct(
    eta: FourierField,
    params: ConstructionParams,
    settings: Optional[SolverSettings] = None,
) -> ConstructionResult:
    """
    Solve ``Psi(xi, eta) = 0`` for ``xi`` starting from ``xi = 0``.

    The update ``xi <- xi - (c N)^-1 Psi(xi, eta)`` freezes the linearisation at
    the radial configuration, where ``c = (1/N)(1 - 1/sigma_3)`` and ``N`` is
    inverted on its spectrum. If an iteration reduces the residual by less than
    ``1 - STALL_RATIO`` the iteration switches to Newton steps with a
    finite-difference Jacobian.

    Raises:
        DegenerateCoefficientError: ``sigma_3 = 1``, so the linearisation vanishes.
        AmplitudeError: ``||eta||_inf > AMPLITUDE_CAP * R_2`` (``R_2 = 1``).
        NonConvergenceError: no convergence in ``NEWTON_MAX_ITERATIONS``
            evaluations; ``context["trace"]`` holds the residual history.
    """
    settings = get_settings(settings)
    coefficient = params.coefficient
    if coefficient == 0.0:
        raise DegenerateCoefficientError(
            "sigma_3 = 1 makes the linearised flux map vanish.", sigma3=params.sigma3
        )
    truncation = params.truncation_for(settings)
    if eta.truncation > truncation:
        if np.any(eta.cosines[truncation:]) or np.any(eta.sines[truncation:]):
            raise DomainError(f"eta has modes above the truncation K={truncation}.")
    eta = eta.resized(truncation)
    amplitude = eta.sup_norm()
    cap = settings.AMPLITUDE_CAP * params.config.radii[1]
    if amplitude > cap:
        raise AmplitudeError(
            f"||eta||_inf = {amplitude:.3e} exceeds the cap {cap:.3e}.",
            amplitude=amplitude,
        )

    spectrum = params.spectrum(settings)
    xi = FourierField.zeros(truncation)
    trace: List[float] = []
    methods: List[str] = []
    method = "quasi_newton"
    for iteration in range(1, settings.NEWTON_MAX_ITERATIONS + 1):
        evaluation = psi_map(xi, eta, params, settings)
        residual = evaluation.norm
        trace.append(residual)
        logger.debug(
            "Iteration %d (%s): ||Psi|| = %.3e, raw mean %.1e",
            iteration,
            method,
            residual,
            evaluation.raw_mean,
        )
        if residual <= settings.NEWTON_TOLERANCE:
            break
        if (
            method == "quasi_newton"
            and len(trace) > 1
            and residual > settings.STALL_RATIO * trace[-2]
        ):
            logger.info(
                "Quasi-Newton stalled at %.3e, switching to finite-difference Newton.",
                residual,
            )
            method = "newton"
        if method == "quasi_newton":
            step = invert(spectrum, evaluation.residual) / coefficient
        else:
            jacobian = fd_jacobian(xi, eta, params, settings)
            solution, *_ = scipy.linalg.lstsq(jacobian, evaluation.residual.to_vector())
            step = FourierField.from_vector(solution, zero_mean=True)
        xi = (xi - step).project_zero_mean()
        methods.append(method)
    else:
        raise NonConvergenceError(
            f"No convergence after {settings.NEWTON_MAX_ITERATIONS} iterations "
            f"(last residual {trace[-1]:.3e}).",
            trace=trace,
            residual=trace[-1],
        )

    logger.info(
        "Construction converged in %d iterations, residual %.3e.",
        len(trace),
        trace[-1],
    )
    glued = glue(xi, eta, params, evaluation, settings)
    return ConstructionResult(
        eta=eta,
        xi=xi,
        params=params,
        trace=trace,
        methods=methods,
        evaluation=evaluation,
        glued=glued,
    )


def export(
    result: ConstructionResult,
    directory: str,
    settings: Optional[SolverSettings] = None,
):
    """
    Write ``result.json``, ``geometry.json`` and ``traces.csv`` to
    ``directory``; returns the written paths.
    """
    from multiphasetorsion.reports import write_csv, write_json

    settings = get_settings(settings)
    paths = {
        "result": os.path.join(directory, "result.json"),
        "geometry": os.path.join(directory, "geometry.json"),
        "traces": os.path.join(directory, "traces.csv"),
    }
    write_json(paths["result"], result.to_dict())
    write_json(paths["geometry"], result.geometry.to_dict())

    grid, flux = result.evaluation.solution.trace_values(1, order=1, side="inner")
    theta = grid.nodes
    rows = zip(
        theta,
        1.0 + result.xi(theta),
        result.params.R + result.eta(theta),
        flux,
        result.evaluation.values,
    )
    write_csv(
        paths["traces"],
        ("theta", "outer_radius", "inner_radius", "normal_derivative", "psi"),
        rows,
        digits=settings.CSV_DIGITS,
    )
    return paths
