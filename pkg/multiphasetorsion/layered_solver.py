"""
Spectral collocation solver for the piecewise-constant conductivity problem

    -sigma_k Laplace(u) = f0   in every phase D_k,
    [u] = jump,  [sigma d_n u] = flux jump   on interior interfaces,
    u = g   on the outer curve,

where ``[f] = f_outside - f_inside``. Each phase carries a harmonic series (a
Taylor series in the innermost disk, a Laurent series with a logarithm in
every annulus) plus the particular term ``-f0 |x - c|^2 / (2 N sigma)``; the
series coefficients are fitted in the least-squares sense at ``M`` nodes per
curve. Harmonic terms are written as ``Re F(z)`` with ``F`` holomorphic, so
the ``j``-th directional derivative along a unit vector ``nu`` is
``Re(F^(j)(z) nu^j)``.
"""
import logging
import time
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.special import poch

from multiphasetorsion.exceptions import (
    ConditioningError,
    ConfigurationError,
    DomainError,
    GeometryError,
    NonConvergenceError,
)
from multiphasetorsion.fields import FourierField, equispaced_nodes
from multiphasetorsion.geometry import CollocationGrid, StarCurve, pullback_grid
from multiphasetorsion.radial import PhaseConfig
from multiphasetorsion.settings import SolverSettings, get_settings

logger = logging.getLogger(__name__)

# collocation numerics are planar
DIMENSION = 2

BoundaryData = Union[
    None, float, FourierField, np.ndarray, Callable[[np.ndarray], np.ndarray]
]


def nodes_per_curve(truncation: int, settings: SolverSettings) -> int:
    return settings.OVERSAMPLING * (truncation + 1)


@dataclass(frozen=True, eq=False)
class LayeredGeometry:
    """
    Nested star-shaped interfaces ``dOmega_1 ... dOmega_m`` (innermost first)
    with the conductivity of each phase ``D_k = Omega_k minus Omega_{k-1}``.

    Attributes:
        interfaces: the curves, innermost to outermost.
        sigmas: one positive conductivity per phase.
        source: the constant right-hand side ``f0`` (1 for torsion, 0 for
            homogeneous problems).
    """

    interfaces: Tuple[StarCurve, ...]
    sigmas: Tuple[float, ...]
    source: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "source", float(self.source))
        if not self.interfaces:
            raise GeometryError("At least one interface is required.")
        if len(self.interfaces) != len(self.sigmas):
            raise GeometryError(
                f"{len(self.interfaces)} interfaces but "
                f"{len(self.sigmas)} conductivities."
            )
        if any(not s > 0.0 for s in self.sigmas):
            raise ConfigurationError("Conductivities must be positive.")
        self.check_nested(0.0)

    @classmethod
    def concentric(
        cls,
        radii: Sequence[float],
        sigmas: Sequence[float],
        source: float = 1.0,
        center: Sequence[float] = (0.0, 0.0),
    ) -> "LayeredGeometry":
        curves = tuple(StarCurve.circle(r, center) for r in radii)
        return cls(curves, tuple(sigmas), source)

    @classmethod
    def from_config(cls, config: PhaseConfig, source: float = 1.0) -> "LayeredGeometry":
        if config.dimension != DIMENSION:
            raise DomainError("Collocation geometry is planar; use dimension 2.")
        return cls.concentric(config.radii, config.sigmas, source)

    @classmethod
    def from_dict(cls, data: Dict) -> "LayeredGeometry":
        try:
            interfaces = tuple(StarCurve.from_dict(c) for c in data["interfaces"])
            return cls(interfaces, tuple(data["sigmas"]), data.get("source", 1.0))
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"Malformed geometry description: {e}") from e

    def to_dict(self) -> Dict:
        return {
            "interfaces": [c.to_dict() for c in self.interfaces],
            "sigmas": list(self.sigmas),
            "source": self.source,
        }

    @property
    def m(self) -> int:
        return len(self.interfaces)

    @property
    def outer(self) -> StarCurve:
        return self.interfaces[-1]

    @property
    def truncation(self) -> int:
        return max(c.truncation for c in self.interfaces)

    def with_source(self, source: float) -> "LayeredGeometry":
        return LayeredGeometry(self.interfaces, self.sigmas, source)

    def check_nested(self, margin: float):
        """
        Every inner curve must lie inside the next one with a radial gap of at
        least ``margin``.
        """
        for k, (inner, outer) in enumerate(zip(self.interfaces, self.interfaces[1:])):
            count = 16 * (max(inner.truncation, outer.truncation) + 1)
            gap = outer.radial_gap(inner.point(equispaced_nodes(count)))
            if not np.max(gap) < -margin:
                raise GeometryError(
                    f"Interface {k + 1} is not nested inside interface {k + 2} "
                    f"(margin {-np.max(gap):.3e} < {margin:.3e}).",
                    interface=k,
                )

    def phase_of(self, points: np.ndarray) -> np.ndarray:
        """
        0-based phase index of each point; ``m`` marks points outside.
        """
        points = np.asarray(points, dtype=float)
        phase = np.full(points.shape[:-1], self.m, dtype=int)
        for k in reversed(range(self.m)):
            phase[self.interfaces[k].contains(points)] = k
        return phase

    def distance_to_interfaces(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.min(np.abs([c.radial_gap(points) for c in self.interfaces]), axis=0)


@dataclass(frozen=True)
class PhaseBasis:
    """
    Harmonic series of one phase.

    Real unknowns are ordered ``[constant, alpha_1..K, beta_1..K]`` for the
    regular part ``Re sum (alpha_k - i beta_k) ((z - a)/rho)^k`` and, for
    annular phases, ``[log, alpha_-1..-K, beta_-1..-K]`` for
    ``l log(|z - b|/s) + Re sum (alpha_-k + i beta_-k) (s/(z - b))^k``. On
    concentric circles ``alpha``/``beta`` are exactly the cosine/sine
    amplitudes.
    """

    sigma: float
    truncation: int
    regular_center: complex
    regular_scale: float
    singular_center: Optional[complex] = None
    singular_scale: float = 1.0

    @property
    def annular(self) -> bool:
        return self.singular_center is not None

    @property
    def size(self) -> int:
        block = 2 * self.truncation + 1
        return 2 * block if self.annular else block

    def columns(self, z: np.ndarray, order: int = 0, direction=None) -> np.ndarray:
        """
        ``(d_nu)^order`` of every basis function at the complex points ``z``.
        """
        z = np.asarray(z, dtype=complex).reshape(-1)
        nu_power = None
        if order > 0:
            nu = np.asarray(direction, dtype=complex).reshape(-1)
            nu_power = (nu**order)[:, None]

        k = np.arange(self.truncation + 1)
        w = ((z - self.regular_center) / self.regular_scale)[:, None]
        if order == 0:
            g = w**k
        else:
            falling = np.where(
                k >= order, poch(np.maximum(k - order + 1, 1), order), 0.0
            )
            weights = falling / self.regular_scale**order
            g = weights * w ** np.maximum(k - order, 0) * nu_power
        blocks = [g[:, :1].real, g[:, 1:].real, g[:, 1:].imag]

        if self.annular:
            kk = np.arange(1, self.truncation + 1)
            d = (z - self.singular_center)[:, None]
            base = (self.singular_scale / d) ** kk
            if order == 0:
                g = base
                log_column = np.log(np.abs(d) / self.singular_scale)
            else:
                g = (-1) ** order * poch(kk, order) * base * d ** (-order) * nu_power
                log_column = (
                    (-1) ** (order - 1)
                    * factorial(order - 1)
                    * d ** (-order)
                    * nu_power
                ).real
            blocks += [log_column, g.real, -g.imag]
        return np.hstack(blocks)

    def particular(
        self, z: np.ndarray, source: float, order: int = 0, direction=None
    ) -> np.ndarray:
        """
        ``(d_nu)^order`` of ``-source |z - a|^2 / (2 N sigma)``.
        """
        z = np.asarray(z, dtype=complex).reshape(-1)
        scale = -source / (DIMENSION * self.sigma)
        if order == 0:
            return 0.5 * scale * np.abs(z - self.regular_center) ** 2
        nu = np.asarray(direction, dtype=complex).reshape(-1)
        if order == 1:
            return scale * (np.conj(z - self.regular_center) * nu).real
        if order == 2:
            return scale * np.abs(nu) ** 2
        return np.zeros(z.shape)

    def regular_modes(self, coefficients: np.ndarray) -> FourierField:
        K = self.truncation
        return FourierField(
            coefficients[0], coefficients[1 : K + 1], coefficients[K + 1 : 2 * K + 1]
        )

    def singular_modes(self, coefficients: np.ndarray) -> Optional[FourierField]:
        """
        Log coefficient (as the mean) and negative-power amplitudes.
        """
        if not self.annular:
            return None
        K = self.truncation
        tail = coefficients[2 * K + 1 :]
        return FourierField(tail[0], tail[1 : K + 1], tail[K + 1 :])


@dataclass(frozen=True)
class SolveReport:
    """
    Diagnostics of one collocation solve.
    """

    residual: float
    value_jump_residual: float
    flux_jump_residual: float
    dirichlet_residual: float
    truncation: int
    nodes: int
    unknowns: int
    equations: int
    rank: int
    condition: float
    method: str
    elapsed: float

    def to_dict(self) -> Dict:
        return {
            "residual": self.residual,
            "value_jump_residual": self.value_jump_residual,
            "flux_jump_residual": self.flux_jump_residual,
            "dirichlet_residual": self.dirichlet_residual,
            "K": self.truncation,
            "M": self.nodes,
            "unknowns": self.unknowns,
            "equations": self.equations,
            "rank": self.rank,
            "condition": self.condition,
            "method": self.method,
            "elapsed": self.elapsed,
        }


@dataclass(frozen=True, eq=False)
class PiecewiseSolution:
    """
    A solved transmission problem, evaluable anywhere in the closure of the
    outer domain (interfaces are evaluated from the side requested).
    """

    geometry: LayeredGeometry
    bases: Tuple[PhaseBasis, ...]
    coefficients: Tuple[np.ndarray, ...]
    report: SolveReport
    max_derivative_order: int = 6
    grids: Tuple[CollocationGrid, ...] = field(default=(), repr=False)

    @property
    def truncation(self) -> int:
        return self.report.truncation

    def phase_of(self, points: np.ndarray) -> np.ndarray:
        phase = self.geometry.phase_of(points)
        if np.any(phase == self.geometry.m):
            raise DomainError("Point outside the outer curve.")
        return phase

    def _check_order(self, order: int):
        if order < 0 or order > self.max_derivative_order:
            raise DomainError(
                f"Derivative order {order} outside [0, {self.max_derivative_order}]."
            )

    def _evaluate(self, points, order, directions, phase) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        z = points[:, 0] + 1j * points[:, 1]
        nu = None
        if order > 0:
            directions = np.broadcast_to(
                np.asarray(directions, dtype=float), points.shape
            )
            nu = directions[:, 0] + 1j * directions[:, 1]
        if phase is None:
            phases = self.phase_of(points)
        else:
            phases = np.full(z.shape, int(phase))
        out = np.empty(z.shape)
        for p in np.unique(phases):
            mask = phases == p
            basis = self.bases[p]
            sub_nu = None if nu is None else nu[mask]
            out[mask] = basis.columns(z[mask], order, sub_nu) @ self.coefficients[p]
            out[mask] += basis.particular(z[mask], self.geometry.source, order, sub_nu)
        return out

    def value(self, points: np.ndarray, phase: Optional[int] = None) -> np.ndarray:
        return self._evaluate(points, 0, None, phase)

    def normal_derivative(
        self,
        points: np.ndarray,
        directions: np.ndarray,
        order: int = 1,
        phase: Optional[int] = None,
    ) -> np.ndarray:
        """
        ``(d_n)^order u = sum_{|beta| = order} d^beta u n^beta`` along the given
        unit directions.
        """
        self._check_order(order)
        return self._evaluate(points, order, directions, phase)

    def gradient(self, points: np.ndarray, phase: Optional[int] = None) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.stack(
            [
                self._evaluate(points, 1, (1.0, 0.0), phase),
                self._evaluate(points, 1, (0.0, 1.0), phase),
            ],
            axis=-1,
        )

    def laplacian(self, points: np.ndarray, phase: Optional[int] = None) -> np.ndarray:
        return self._evaluate(points, 2, (1.0, 0.0), phase) + self._evaluate(
            points, 2, (0.0, 1.0), phase
        )

    def conductivity(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(self.geometry.sigmas)[self.phase_of(points)]

    def grid(self, curve_index: int, count: Optional[int] = None) -> CollocationGrid:
        if not 0 <= curve_index < self.geometry.m:
            raise DomainError(f"No interface with index {curve_index}.")
        if count is None and self.grids:
            return self.grids[curve_index]
        return pullback_grid(
            self.geometry.interfaces[curve_index], count or self.report.nodes
        )

    def side_phase(self, curve_index: int, side: str = "inner") -> int:
        if side == "inner":
            return curve_index
        if side == "outer" and curve_index < self.geometry.m - 1:
            return curve_index + 1
        raise DomainError(f"Curve {curve_index} has no '{side}' side.")

    def trace_values(
        self,
        curve_index: int,
        order: int = 0,
        side: str = "inner",
        count: Optional[int] = None,
    ) -> Tuple[CollocationGrid, np.ndarray]:
        """
        ``(d_n)^order u`` at the nodes of a curve, using the true curve normal,
        from the phase on ``side`` of it.
        """
        self._check_order(order)
        grid = self.grid(curve_index, count)
        phase = self.side_phase(curve_index, side)
        values = self._evaluate(grid.points, order, grid.normals, phase)
        return grid, values

    def divergence_flux(self, curve_index: int, side: str = "inner") -> float:
        """
        ``int sigma d_n u ds`` over a curve.
        """
        grid, values = self.trace_values(curve_index, 1, side)
        sigma = self.bases[self.side_phase(curve_index, side)].sigma
        return sigma * grid.integrate(values)

    def phase_series(self, phase: int) -> Dict[str, Optional[FourierField]]:
        basis = self.bases[phase]
        return {
            "regular": basis.regular_modes(self.coefficients[phase]),
            "singular": basis.singular_modes(self.coefficients[phase]),
        }

    def metadata(self) -> Dict:
        return {"geometry": self.geometry.to_dict(), "report": self.report.to_dict()}


def _build_bases(geometry: LayeredGeometry, truncation: int) -> Tuple[PhaseBasis, ...]:
    bases = []
    for p, (curve, sigma) in enumerate(zip(geometry.interfaces, geometry.sigmas)):
        if p == 0:
            bases.append(PhaseBasis(sigma, truncation, curve.complex_center, curve.r0))
        else:
            inner = geometry.interfaces[p - 1]
            bases.append(
                PhaseBasis(
                    sigma,
                    truncation,
                    curve.complex_center,
                    curve.r0,
                    inner.complex_center,
                    inner.r0,
                )
            )
    return tuple(bases)


def _boundary_values(data: BoundaryData, grid: CollocationGrid) -> np.ndarray:
    if data is None:
        return np.zeros(grid.size)
    if isinstance(data, FourierField):
        return data(grid.nodes)
    if callable(data):
        values = np.asarray(data(grid.points), dtype=float).reshape(-1)
    else:
        values = np.asarray(data, dtype=float).reshape(-1)
        if values.size == 1:
            values = np.full(grid.size, values[0])
    if values.size != grid.size:
        raise ConfigurationError(
            f"Boundary data has {values.size} values for {grid.size} nodes."
        )
    return values


def _least_squares(matrix: np.ndarray, rhs: np.ndarray, settings: SolverSettings):
    """
    Column-scaled pivoted QR, with an SVD fallback when the pivots fall below
    the relative cutoff.
    """
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0.0] = 1.0
    scaled = matrix / norms
    cutoff = settings.RANK_CUTOFF
    q, r, perm = scipy.linalg.qr(scaled, mode="economic", pivoting=True)
    pivots = np.abs(np.diag(r))
    if pivots[-1] > cutoff * pivots[0]:
        solution = np.empty(matrix.shape[1])
        solution[perm] = scipy.linalg.solve_triangular(r, q.T @ rhs)
        return solution / norms, matrix.shape[1], pivots[0] / pivots[-1], "qr"

    logger.warning(
        "Pivot ratio %.3e below cutoff %.1e, falling back to SVD.",
        pivots[-1] / pivots[0],
        cutoff,
    )
    solution, _, rank, singular = scipy.linalg.lstsq(
        scaled, rhs, cond=cutoff, lapack_driver="gelsd"
    )
    deficiency = matrix.shape[1] - rank
    condition = singular[0] / singular[-1] if singular[-1] > 0 else np.inf
    if deficiency > settings.RANK_DEFICIENCY_LIMIT:
        raise ConditioningError(
            f"Collocation matrix has rank {rank} for {matrix.shape[1]} unknowns.",
            rank=rank,
            condition=condition,
        )
    return solution / norms, int(rank), condition, "svd"


def solve(
    geometry: LayeredGeometry,
    dirichlet: BoundaryData = None,
    jumps: Optional[Mapping[int, BoundaryData]] = None,
    flux_jumps: Optional[Mapping[int, BoundaryData]] = None,
    settings: Optional[SolverSettings] = None,
) -> PiecewiseSolution:
    """
    Solve the transmission problem on ``geometry``.

    Args:
        geometry: nested interfaces, conductivities and source ``f0``.
        dirichlet: data on the outer curve; a :class:`FourierField` in the
            curve parameter, a callable on planar points, an array of node
            values or a constant. ``None`` means homogeneous data.
        jumps: prescribed value jumps ``[u]`` keyed by 0-based interface index.
        flux_jumps: prescribed flux jumps ``[sigma d_n u]``, same keys.
        settings: numerical settings, defaults to the global ones.

    Returns:
        The :class:`PiecewiseSolution` with its :class:`SolveReport`.

    Raises:
        GeometryError: interfaces closer than ``NESTING_MARGIN``.
        NonConvergenceError: collocation residual above ``RESIDUAL_TOLERANCE``.
        ConditioningError: rank deficiency beyond ``RANK_DEFICIENCY_LIMIT``.
    """
    settings = get_settings(settings)
    started = time.perf_counter()
    jumps = dict(jumps or {})
    flux_jumps = dict(flux_jumps or {})
    for key in set(jumps) | set(flux_jumps):
        if not 0 <= key < geometry.m - 1:
            raise DomainError(f"No interior interface with index {key}.")

    geometry.check_nested(settings.NESTING_MARGIN)
    truncation = max(settings.TRUNCATION, geometry.truncation)
    count = nodes_per_curve(truncation, settings)
    grids = tuple(pullback_grid(curve, count) for curve in geometry.interfaces)
    bases = _build_bases(geometry, truncation)
    offsets = np.concatenate([[0], np.cumsum([b.size for b in bases])])
    unknowns = int(offsets[-1])
    source = geometry.source

    blocks = []
    rhs = []
    kinds = []
    for k in range(geometry.m - 1):
        grid = grids[k]
        z, nu = grid.complex_points, grid.complex_normals
        inner, outer = bases[k], bases[k + 1]

        value_rows = np.zeros((count, unknowns))
        value_rows[:, offsets[k] : offsets[k + 1]] = -inner.columns(z)
        value_rows[:, offsets[k + 1] : offsets[k + 2]] = outer.columns(z)
        blocks.append(value_rows)
        rhs.append(
            _boundary_values(jumps.get(k), grid)
            - outer.particular(z, source)
            + inner.particular(z, source)
        )
        kinds.append(np.full(count, 0))

        flux_rows = np.zeros((count, unknowns))
        flux_rows[:, offsets[k] : offsets[k + 1]] = -inner.sigma * inner.columns(
            z, 1, nu
        )
        flux_rows[:, offsets[k + 1] : offsets[k + 2]] = outer.sigma * outer.columns(
            z, 1, nu
        )
        blocks.append(flux_rows)
        rhs.append(
            _boundary_values(flux_jumps.get(k), grid)
            - outer.sigma * outer.particular(z, source, 1, nu)
            + inner.sigma * inner.particular(z, source, 1, nu)
        )
        kinds.append(np.full(count, 1))

    grid = grids[-1]
    z = grid.complex_points
    outer = bases[-1]
    dirichlet_rows = np.zeros((count, unknowns))
    dirichlet_rows[:, offsets[-2] :] = outer.columns(z)
    blocks.append(dirichlet_rows)
    data = _boundary_values(dirichlet, grid)
    rhs.append(data - outer.particular(z, source))
    kinds.append(np.full(count, 2))

    matrix = np.vstack(blocks)
    rhs = np.concatenate(rhs)
    kinds = np.concatenate(kinds)
    logger.debug(
        "Assembled %d x %d collocation system (K=%d, M=%d, m=%d).",
        matrix.shape[0],
        unknowns,
        truncation,
        count,
        geometry.m,
    )

    trivial = source == 0.0 and not np.any(rhs)
    if trivial:
        solution = np.zeros(unknowns)
        rank, condition, method = unknowns, 1.0, "trivial"
    else:
        solution, rank, condition, method = _least_squares(matrix, rhs, settings)

    misfit = np.abs(matrix @ solution - rhs)
    residual = float(misfit.max())

    def _part(kind):
        selected = misfit[kinds == kind]
        return float(selected.max()) if selected.size else 0.0

    report = SolveReport(
        residual=residual,
        value_jump_residual=_part(0),
        flux_jump_residual=_part(1),
        dirichlet_residual=_part(2),
        truncation=truncation,
        nodes=count,
        unknowns=unknowns,
        equations=matrix.shape[0],
        rank=int(rank),
        condition=float(condition),
        method=method,
        elapsed=time.perf_counter() - started,
    )
    logger.debug(
        "Collocation residual %.3e (condition %.3e, %s).", residual, condition, method
    )

    scale = max(1.0, float(np.max(np.abs(rhs))))
    if residual > settings.RESIDUAL_TOLERANCE * scale:
        raise NonConvergenceError(
            f"Collocation residual {residual:.3e} exceeds tolerance "
            f"{settings.RESIDUAL_TOLERANCE:.1e}.",
            residual=residual,
            report=report,
        )

    coefficients = tuple(
        solution[offsets[p] : offsets[p + 1]].copy() for p in range(geometry.m)
    )
    return PiecewiseSolution(
        geometry=geometry,
        bases=bases,
        coefficients=coefficients,
        report=report,
        max_derivative_order=settings.MAX_DERIVATIVE_ORDER,
        grids=grids,
    )


def boundary_trace(
    solution: PiecewiseSolution,
    curve_index: int,
    order: int = 0,
    side: str = "inner",
    truncation: Optional[int] = None,
) -> FourierField:
    """
    ``(d_n)^order u`` on an interface, projected onto Fourier modes in the
    curve parameter. ``order=0`` gives the trace.

    Raises:
        DomainError: ``order`` above the configured maximum derivative order.
    """
    _, values = solution.trace_values(curve_index, order, side)
    return FourierField.from_samples(values, truncation)


def interior_residual(
    solution: PiecewiseSolution,
    points: np.ndarray,
    margin: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> float:
    """
    ``max |sigma Laplace(u) + f0|`` at points away from the interfaces.
    """
    settings = get_settings(settings)
    if margin is None:
        margin = settings.INTERFACE_MARGIN
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(solution.geometry.distance_to_interfaces(points) < margin):
        raise DomainError(f"Point within {margin:.1e} of an interface.")
    sigma = solution.conductivity(points)
    residual = sigma * solution.laplacian(points) + solution.geometry.source
    return float(np.max(np.abs(residual)))
