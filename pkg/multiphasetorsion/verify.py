"""
Independent checks of overdetermined boundary conditions.

Every check re-solves the full layered problem from scratch; nothing here
reads the glued solution of :mod:`multiphasetorsion.constructor` except
:func:`trace_agreement`, whose purpose is to compare the two.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from multiphasetorsion.exceptions import DomainError
from multiphasetorsion.layered_solver import LayeredGeometry, PiecewiseSolution, solve
from multiphasetorsion.settings import SolverSettings, get_settings

logger = logging.getLogger(__name__)


def nonradiality(geometry: LayeredGeometry) -> float:
    """
    Largest oscillation energy of an interface radius or offset of an
    interface centre from the outer centre.
    """
    center = np.asarray(geometry.outer.center)
    return float(
        max(
            max(
                c.radius.oscillation_energy(),
                float(np.hypot(*(np.asarray(c.center) - center))),
            )
            for c in geometry.interfaces
        )
    )


@dataclass(frozen=True, eq=False)
class OverdeterminedReport:
    """
    Normal derivatives ``(d_n)^k u`` on the outer curve of a re-solved problem.

    Attributes:
        constants: arclength mean ``c_k`` per order.
        deviations: ``sup |(d_n)^k u - c_k|`` over the nodes per order.
        nonradiality: see :func:`nonradiality`.
        traces: node values per order, for CSV export.
    """

    orders: Sequence[int]
    constants: Dict[int, float]
    deviations: Dict[int, float]
    nonradiality: float
    nodes: np.ndarray = field(repr=False)
    traces: Dict[int, np.ndarray] = field(repr=False)
    solution: PiecewiseSolution = field(repr=False)

    def to_dict(self) -> Dict:
        payload = {
            "orders": list(self.orders),
            "nonradiality": self.nonradiality,
            "solve": self.solution.report.to_dict(),
        }
        for k in self.orders:
            payload[f"c_{k}"] = self.constants[k]
            payload[f"dev_{k}"] = self.deviations[k]
        return payload

    def header(self):
        return ("theta",) + tuple(f"dn{k}" for k in self.orders)

    def to_rows(self):
        columns = [self.nodes] + [self.traces[k] for k in self.orders]
        return list(zip(*columns))


def check_overdetermined(
    geometry: LayeredGeometry,
    orders: Sequence[int] = (1, 2),
    settings: Optional[SolverSettings] = None,
) -> OverdeterminedReport:
    """
    Solve the torsion problem with zero Dirichlet data on ``geometry`` and
    measure how far ``(d_n)^k u`` is from a constant on the outer curve.

    Raises:
        DomainError: an order outside ``1 .. MAX_VERIFIED_ORDER``.
    """
    settings = get_settings(settings)
    orders = list(orders)
    for k in orders:
        if not 1 <= k <= settings.MAX_VERIFIED_ORDER:
            raise DomainError(
                f"Order {k} outside 1..{settings.MAX_VERIFIED_ORDER}; "
                "higher orders are only certified through the radial outer region."
            )
    solution = solve(geometry, None, settings=settings)
    outer = geometry.m - 1
    constants, deviations, traces = {}, {}, {}
    nodes = None
    for k in orders:
        grid, values = solution.trace_values(outer, order=k, side="inner")
        nodes = grid.nodes
        constants[k] = grid.arclength_mean(values)
        deviations[k] = float(np.max(np.abs(values - constants[k])))
        traces[k] = values
        logger.debug("Order %d: c = %.12e, dev = %.3e", k, constants[k], deviations[k])
    return OverdeterminedReport(
        orders=orders,
        constants=constants,
        deviations=deviations,
        nonradiality=nonradiality(geometry),
        nodes=nodes if nodes is not None else solution.grid(outer).nodes,
        traces=traces,
        solution=solution,
    )


def _spectral_derivative(values: np.ndarray) -> np.ndarray:
    count = values.size
    coefficients = np.fft.rfft(values)
    coefficients *= 1j * np.arange(coefficients.size)
    if count % 2 == 0:
        coefficients[-1] = 0.0
    return np.fft.irfft(coefficients, count)


def tangential_laplacian(
    solution: PiecewiseSolution, curve_index: int, side: str, count: int
):
    """
    ``Delta_tau u = (1/J) d/dtheta ((1/J) du/dtheta)`` on a curve, by FFT
    differentiation of the trace at ``count`` nodes.
    """
    grid, trace = solution.trace_values(curve_index, 0, side, count=count)
    first = _spectral_derivative(trace) / grid.jacobians
    return grid, _spectral_derivative(first) / grid.jacobians


def laplacian_decomposition_residual(
    solution: PiecewiseSolution,
    curve_index: int,
    side: str = "inner",
    settings: Optional[SolverSettings] = None,
) -> float:
    """
    ``sup |(d_n)^2 u + kappa d_n u + Delta_tau u + f0/sigma|`` over the nodes
    of a curve; the three boundary terms add up to the Laplacian.

    Raises:
        DomainError: second derivatives are not available.
    """
    settings = get_settings(settings)
    if solution.max_derivative_order < 2:
        raise DomainError("The decomposition needs second normal derivatives.")
    grid, first = solution.trace_values(curve_index, 1, side)
    _, second = solution.trace_values(curve_index, 2, side)
    factor = settings.DECOMPOSITION_OVERSAMPLING
    _, fine = tangential_laplacian(solution, curve_index, side, factor * grid.size)
    tangential = fine[::factor]
    sigma = solution.bases[solution.side_phase(curve_index, side)].sigma
    source = solution.geometry.source / sigma
    residual = second + grid.curvatures * first + tangential + source
    return float(np.max(np.abs(residual)))


@dataclass(frozen=True)
class RigidityWitness:
    """
    Two-phase rigidity check: constant first and second normal derivatives on
    the outer curve force constant curvature through
    ``c_2 + kappa c_1 = -f0 / sigma_2``.

    Attributes:
        conditions_hold: both deviations within tolerance.
        circular: curvature variation within tolerance.
        consistent: the implication holds on this instance.
        one_condition_insufficient: the first-order condition holds while the
            second fails on a non-circular curve.
    """

    dev1: float
    dev2: float
    c1: float
    c2: float
    curvature_variation: float
    mean_curvature: float
    identity_error: float
    tolerance: float

    @property
    def conditions_hold(self) -> bool:
        return self.dev1 <= self.tolerance and self.dev2 <= self.tolerance

    @property
    def circular(self) -> bool:
        return self.curvature_variation <= self.tolerance

    @property
    def consistent(self) -> bool:
        return self.circular or not self.conditions_hold

    @property
    def one_condition_insufficient(self) -> bool:
        return self.dev1 <= self.tolerance < self.dev2 and not self.circular

    def to_dict(self) -> Dict:
        return {
            "dev_1": self.dev1,
            "dev_2": self.dev2,
            "c_1": self.c1,
            "c_2": self.c2,
            "curvature_variation": self.curvature_variation,
            "mean_curvature": self.mean_curvature,
            "identity_error": self.identity_error,
            "conditions_hold": self.conditions_hold,
            "circular": self.circular,
            "consistent": self.consistent,
            "one_condition_insufficient": self.one_condition_insufficient,
        }


def rigidity_witness(
    geometry: LayeredGeometry,
    tolerance: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> RigidityWitness:
    settings = get_settings(settings)
    if geometry.m != 2:
        raise DomainError("The two-phase witness needs exactly two interfaces.")
    if tolerance is None:
        tolerance = settings.WITNESS_TOLERANCE
    report = check_overdetermined(geometry, (1, 2), settings)
    grid = report.solution.grid(1)
    kappa = grid.curvatures
    mean_curvature = grid.arclength_mean(kappa)
    c1, c2 = report.constants[1], report.constants[2]
    return RigidityWitness(
        dev1=report.deviations[1],
        dev2=report.deviations[2],
        c1=c1,
        c2=c2,
        curvature_variation=float(np.max(np.abs(kappa - mean_curvature))),
        mean_curvature=mean_curvature,
        identity_error=abs(
            c2 + mean_curvature * c1 + geometry.source / geometry.sigmas[-1]
        ),
        tolerance=tolerance,
    )


def trace_agreement(
    glued, solution: PiecewiseSolution, orders: Sequence[int] = (1, 2, 3)
) -> Dict[int, float]:
    """
    ``sup |(d_n)^k v_glued - (d_n)^k u|`` on the outer curve, comparing a
    glued construction with an independent re-solve.
    """
    agreement = {}
    outer = solution.geometry.m - 1
    for k in orders:
        grid, values = solution.trace_values(outer, order=k, side="inner")
        glued_values = glued.normal_derivative(grid.points, grid.normals, k)
        agreement[k] = float(np.max(np.abs(glued_values - values)))
    return agreement
