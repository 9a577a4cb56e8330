from dataclasses import dataclass, field
from numbers import Real
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from multiphasetorsion.exceptions import DomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


def equispaced_nodes(count: int) -> np.ndarray:
    """
    The ``count`` equispaced parameter values ``2*pi*j/count``.
    """
    return 2.0 * np.pi * np.arange(count) / count


@dataclass(frozen=True, eq=False)
class FourierField:
    """
    A real function on a circle stored by its Fourier coefficients::

        f(theta) = mean + sum_k cosines[k-1] cos(k theta) + sines[k-1] sin(k theta)

    Coefficients are the raw cosine/sine amplitudes, not L2-normalised
    spherical harmonics; spectra of diagonal operators do not depend on the
    normalisation.

    Attributes:
        mean: the k = 0 coefficient.
        cosines: a_1 ... a_K.
        sines: b_1 ... b_K.
        zero_mean: marks members of the zero-average space; requires mean == 0.
    """

    mean: float = 0.0
    cosines: np.ndarray = field(default_factory=lambda: _frozen([]))
    sines: np.ndarray = field(default_factory=lambda: _frozen([]))
    zero_mean: bool = False

    def __post_init__(self):
        cosines = _frozen(self.cosines)
        sines = _frozen(self.sines)
        if cosines.shape != sines.shape:
            raise DomainError(
                "Cosine and sine coefficient arrays must have the same length."
            )
        if not np.all(np.isfinite(cosines)) or not np.all(np.isfinite(sines)):
            raise DomainError("Fourier coefficients must be finite.")
        if self.zero_mean and self.mean != 0.0:
            raise DomainError("A zero-mean field must have mean exactly 0.")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "cosines", cosines)
        object.__setattr__(self, "sines", sines)

    # construction

    @classmethod
    def zeros(cls, truncation: int, zero_mean: bool = True) -> "FourierField":
        return cls(0.0, np.zeros(truncation), np.zeros(truncation), zero_mean)

    @classmethod
    def constant(cls, value: float, truncation: int = 0) -> "FourierField":
        return cls(value, np.zeros(truncation), np.zeros(truncation))

    @classmethod
    def mode(
        cls,
        k: int,
        amplitude: float = 1.0,
        kind: str = "cos",
        truncation: Optional[int] = None,
    ) -> "FourierField":
        """
        A single harmonic ``amplitude * cos(k theta)`` (or ``sin``).
        """
        if k < 0:
            raise DomainError("Mode index must be non-negative.")
        if kind not in ("cos", "sin"):
            raise DomainError("Mode kind must be 'cos' or 'sin'.")
        truncation = max(k, truncation or 0)
        if k == 0:
            if kind == "sin":
                return cls.zeros(truncation)
            return cls.constant(amplitude, truncation)
        cosines = np.zeros(truncation)
        sines = np.zeros(truncation)
        (cosines if kind == "cos" else sines)[k - 1] = amplitude
        return cls(0.0, cosines, sines, zero_mean=True)

    @classmethod
    def from_modes(
        cls,
        modes: Iterable[Sequence[float]],
        mean: float = 0.0,
        truncation: Optional[int] = None,
    ) -> "FourierField":
        """
        Build a field from ``(k, a_k, b_k)`` triples.
        """
        modes = [(int(k), float(a), float(b)) for k, a, b in modes]
        if any(k < 1 for k, _, _ in modes):
            raise DomainError("Mode indices must be at least 1.")
        largest = max([k for k, _, _ in modes], default=0)
        if truncation is None:
            truncation = largest
        elif largest > truncation:
            raise DomainError(
                f"Mode {largest} exceeds the truncation K={truncation}."
            )
        cosines = np.zeros(truncation)
        sines = np.zeros(truncation)
        for k, a, b in modes:
            cosines[k - 1] += a
            sines[k - 1] += b
        return cls(mean, cosines, sines)

    @classmethod
    def from_samples(
        cls, values: ArrayLike, truncation: Optional[int] = None
    ) -> "FourierField":
        """
        Project values sampled at :func:`equispaced_nodes` onto Fourier modes.

        The projection is exact for trigonometric polynomials of degree below
        half the sample count.
        """
        values = np.asarray(values, dtype=float).reshape(-1)
        count = values.size
        resolvable = (count - 1) // 2
        if truncation is None:
            truncation = resolvable
        if truncation > resolvable:
            raise DomainError(
                f"{count} samples resolve at most {resolvable} modes, "
                f"{truncation} requested."
            )
        coefficients = np.fft.rfft(values) / count
        cosines = 2.0 * coefficients[1 : truncation + 1].real
        sines = -2.0 * coefficients[1 : truncation + 1].imag
        return cls(coefficients[0].real, cosines, sines)

    @classmethod
    def from_vector(cls, vector: ArrayLike, zero_mean: bool = False) -> "FourierField":
        """
        Inverse of :meth:`to_vector`. With ``zero_mean`` the vector holds only
        the 2K oscillating coefficients.
        """
        vector = np.asarray(vector, dtype=float).reshape(-1)
        if zero_mean:
            if vector.size % 2:
                raise DomainError("Zero-mean coefficient vector must have even length.")
            half = vector.size // 2
            return cls(0.0, vector[:half], vector[half:], zero_mean=True)
        if vector.size % 2 != 1:
            raise DomainError("Coefficient vector must have odd length.")
        half = (vector.size - 1) // 2
        return cls(vector[0], vector[1 : half + 1], vector[half + 1 :])

    @classmethod
    def from_dict(cls, data: Union[Dict, List]) -> "FourierField":
        """
        Read ``{"mean": m, "modes": [[k, a, b], ...], "truncation": K}``.
        A bare list is read as the ``modes`` entry.
        """
        if isinstance(data, list):
            data = {"modes": data}
        if not isinstance(data, dict):
            raise DomainError("Fourier field must be an object or a list of modes.")
        field_ = cls.from_modes(
            data.get("modes", []),
            mean=data.get("mean", 0.0),
            truncation=data.get("truncation"),
        )
        if data.get("zero_mean"):
            return field_.project_zero_mean()
        return field_

    # structure

    @property
    def truncation(self) -> int:
        return self.cosines.size

    @property
    def modes(self) -> List[Tuple[int, float, float]]:
        return [
            (k + 1, float(a), float(b))
            for k, (a, b) in enumerate(zip(self.cosines, self.sines))
        ]

    def to_vector(self) -> np.ndarray:
        if self.zero_mean:
            return np.concatenate([self.cosines, self.sines])
        return np.concatenate([[self.mean], self.cosines, self.sines])

    def to_dict(self) -> Dict:
        return {
            "mean": self.mean,
            "modes": [[k, a, b] for k, a, b in self.modes],
            "truncation": self.truncation,
            "zero_mean": self.zero_mean,
        }

    def resized(self, truncation: int) -> "FourierField":
        """
        Pad with zero modes or drop modes above ``truncation``.
        """
        if truncation < 0:
            raise DomainError("Truncation must be non-negative.")
        cosines = np.zeros(truncation)
        sines = np.zeros(truncation)
        keep = min(truncation, self.truncation)
        cosines[:keep] = self.cosines[:keep]
        sines[:keep] = self.sines[:keep]
        return FourierField(self.mean, cosines, sines, self.zero_mean)

    def project_zero_mean(self) -> "FourierField":
        return FourierField(0.0, self.cosines, self.sines, zero_mean=True)

    def with_mean(self, mean: float) -> "FourierField":
        return FourierField(mean, self.cosines, self.sines, zero_mean=False)

    def map_modes(self, multipliers: ArrayLike) -> "FourierField":
        """
        Multiply mode k (k = 0..K) by ``multipliers[k]``.
        """
        multipliers = np.asarray(multipliers, dtype=float)
        if multipliers.size < self.truncation + 1:
            raise DomainError(
                f"Need {self.truncation + 1} multipliers, got {multipliers.size}."
            )
        mean = self.mean * multipliers[0]
        scale = multipliers[1 : self.truncation + 1]
        return FourierField(
            mean,
            self.cosines * scale,
            self.sines * scale,
            zero_mean=self.zero_mean and mean == 0.0,
        )

    # evaluation

    def __call__(self, theta: ArrayLike) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.truncation == 0:
            return np.full(theta.shape, self.mean)
        k = np.arange(1, self.truncation + 1)
        phase = theta[..., None] * k
        return self.mean + np.cos(phase) @ self.cosines + np.sin(phase) @ self.sines

    def derivative(self, order: int = 1) -> "FourierField":
        """
        The ``order``-th derivative in theta, computed from the coefficients.
        """
        if order < 0:
            raise DomainError("Derivative order must be non-negative.")
        if order == 0:
            return self
        k = np.arange(1, self.truncation + 1, dtype=float)
        cosines, sines = self.cosines, self.sines
        for _ in range(order):
            cosines, sines = k * sines, -k * cosines
        return FourierField(0.0, cosines, sines, zero_mean=self.zero_mean)

    def samples(self, count: int) -> np.ndarray:
        return self(equispaced_nodes(count))

    def rotate(self, angle: float) -> "FourierField":
        """
        The field ``theta -> f(theta - angle)``.
        """
        k = np.arange(1, self.truncation + 1)
        c, s = np.cos(k * angle), np.sin(k * angle)
        return FourierField(
            self.mean,
            self.cosines * c - self.sines * s,
            self.cosines * s + self.sines * c,
            self.zero_mean,
        )

    # norms

    def l2_norm(self) -> float:
        """
        L2 norm on the unit circle.
        """
        return float(
            np.sqrt(
                2.0 * np.pi * self.mean**2
                + np.pi * (np.sum(self.cosines**2) + np.sum(self.sines**2))
            )
        )

    def sup_norm(self, count: Optional[int] = None) -> float:
        if count is None:
            count = 8 * (self.truncation + 1)
        return float(np.max(np.abs(self.samples(count))))

    def oscillation_energy(self) -> float:
        """
        Root sum of squares of the k >= 1 coefficients.
        """
        return float(np.sqrt(np.sum(self.cosines**2) + np.sum(self.sines**2)))

    # arithmetic

    def _aligned(self, other: "FourierField"):
        truncation = max(self.truncation, other.truncation)
        return self.resized(truncation), other.resized(truncation)

    def __add__(self, other):
        if isinstance(other, Real):
            return self.with_mean(self.mean + other)
        if not isinstance(other, FourierField):
            return NotImplemented
        a, b = self._aligned(other)
        return FourierField(
            a.mean + b.mean,
            a.cosines + b.cosines,
            a.sines + b.sines,
            a.zero_mean and b.zero_mean,
        )

    __radd__ = __add__

    def __neg__(self):
        return FourierField(-self.mean, -self.cosines, -self.sines, self.zero_mean)

    def __sub__(self, other):
        if isinstance(other, (Real, FourierField)):
            return self + (-other)
        return NotImplemented

    def __mul__(self, scalar):
        if not isinstance(scalar, Real):
            return NotImplemented
        return FourierField(
            self.mean * scalar,
            self.cosines * scalar,
            self.sines * scalar,
            self.zero_mean,
        )

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Real):
            return NotImplemented
        return self * (1.0 / scalar)

    def __repr__(self):
        active = [(k, a, b) for k, a, b in self.modes if a or b]
        return (
            f"FourierField(mean={self.mean!r}, modes={active!r}, "
            f"K={self.truncation})"
        )
