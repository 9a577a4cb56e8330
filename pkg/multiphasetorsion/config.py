"""
Versioned JSON experiment configuration for the command line.

.. code-block:: json

    {
        "schema_version": "1",
        "geometry": {"radii": [0.5, 1.0, 1.5], "sigmas": [2.0, 1.0, 3.0]},
        "construction": {"eta": {"modes": [[3, 0.03, 0.0]]}},
        "solver": {"TRUNCATION": 48},
        "outputs": "out"
    }
"""
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from multiphasetorsion.exceptions import ConfigurationError, TorsionException
from multiphasetorsion.fields import FourierField
from multiphasetorsion.layered_solver import LayeredGeometry
from multiphasetorsion.radial import PhaseConfig
from multiphasetorsion.settings import SolverSettings, get_settings

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

BLOCKS = (
    "schema_version",
    "geometry",
    "dirichlet",
    "jumps",
    "construction",
    "verify",
    "solver",
    "outputs",
)


def _positive_int(integer_string, strict=False):
    """
    Cast a string to a non-negative integer, or a positive one when ``strict``.
    """
    try:
        ret = int(integer_string)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Expected an integer, got {integer_string!r}.") from e
    if ret < 0 or (ret == 0 and strict):
        raise ConfigurationError(f"Expected a positive integer, got {ret}.")
    return ret


def _field(data: Any, name: str) -> FourierField:
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        return FourierField.constant(float(data))
    try:
        return FourierField.from_dict(data)
    except (TorsionException, TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid Fourier field in '{name}': {e}") from e


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: str = SCHEMA_VERSION
    geometry: Dict = field(default_factory=dict)
    dirichlet: Any = None
    jumps: Dict = field(default_factory=dict)
    construction: Dict = field(default_factory=dict)
    verify: Dict = field(default_factory=dict)
    solver: Dict = field(default_factory=dict)
    outputs: Optional[str] = None
    base_dir: str = "."

    def __post_init__(self):
        if str(self.schema_version) != SCHEMA_VERSION:
            raise ConfigurationError(
                f"Unsupported schema version {self.schema_version!r}; "
                f"expected {SCHEMA_VERSION!r}."
            )
        for name in ("geometry", "jumps", "construction", "verify", "solver"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigurationError(f"Block '{name}' must be an object.")

    @classmethod
    def from_dict(cls, data: Dict, base_dir: str = ".") -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigurationError("Configuration must be a JSON object.")
        unknown = set(data) - set(BLOCKS)
        if unknown:
            raise ConfigurationError(
                "Unknown block(s): %s" % ", ".join(sorted(unknown))
            )
        if "schema_version" not in data:
            raise ConfigurationError("Missing 'schema_version'.")
        return cls(
            base_dir=base_dir, **{k: v for k, v in data.items() if v is not None}
        )

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise ConfigurationError(
                f"Unable to read configuration '{path}': {e}"
            ) from e
        logger.debug("Loaded configuration %s", path)
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def settings(self, base: Optional[SolverSettings] = None) -> SolverSettings:
        """
        Global settings with the ``solver`` block on top, fully validated.
        """
        return get_settings(base).with_overrides(**self.solver).validate()

    def _resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    def phase_config(self) -> PhaseConfig:
        try:
            radii = self.geometry["radii"]
            sigmas = self.geometry["sigmas"]
        except KeyError as e:
            raise ConfigurationError(f"Geometry block needs {e}.") from e
        return PhaseConfig(
            tuple(radii), tuple(sigmas), self.geometry.get("dimension", 2)
        )

    def layered_geometry(self) -> LayeredGeometry:
        """
        Either concentric ``radii``/``sigmas``, explicit ``interfaces`` or a
        ``file`` holding a geometry written by a previous run.
        """
        geometry = self.geometry
        source = geometry.get("source", 1.0)
        if "file" in geometry:
            path = self._resolve(geometry["file"])
            try:
                with open(path) as fh:
                    data = json.load(fh)
            except (OSError, ValueError) as e:
                raise ConfigurationError(
                    f"Unable to read geometry '{path}': {e}"
                ) from e
            if "source" in geometry:
                data["source"] = source
            return LayeredGeometry.from_dict(data)
        if "interfaces" in geometry:
            return LayeredGeometry.from_dict({**geometry, "source": source})
        return LayeredGeometry.from_config(self.phase_config(), source)

    def dirichlet_field(self) -> Optional[FourierField]:
        if self.dirichlet is None:
            return None
        return _field(self.dirichlet, "dirichlet")

    def jump_fields(self) -> Dict[int, FourierField]:
        return {
            _positive_int(k): _field(v, f"jumps.{k}") for k, v in self.jumps.items()
        }

    def eta(self) -> FourierField:
        if "eta" not in self.construction:
            raise ConfigurationError("Construction block needs 'eta'.")
        return _field(self.construction["eta"], "construction.eta")

    def construction_params(self):
        from multiphasetorsion.constructor import ConstructionParams

        truncation = self.construction.get("truncation")
        if truncation is not None:
            truncation = _positive_int(truncation, strict=True)
        return ConstructionParams(self.phase_config(), truncation)

    def orders(self) -> List[int]:
        return [
            _positive_int(k, strict=True) for k in self.verify.get("orders", [1, 2])
        ]

    def output_dir(self, override: Optional[str] = None) -> str:
        """
        Create (if needed) and return a writable output directory.
        """
        path = override or (
            self._resolve(self.outputs) if self.outputs else os.getcwd()
        )
        try:
            os.makedirs(path, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(
                f"Cannot create output directory '{path}': {e}"
            ) from e
        if not os.access(path, os.W_OK):
            raise ConfigurationError(f"Output directory '{path}' is not writable.")
        return path
