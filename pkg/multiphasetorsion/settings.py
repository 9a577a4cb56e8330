import json
import logging
import os
from numbers import Integral, Real

from multiphasetorsion.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SETTINGS_ENVIRONMENT_VARIABLE = "MULTIPHASE_TORSION_SETTINGS"

DEFAULTS = {
    # series truncation K and collocation nodes per curve M = OVERSAMPLING * (K + 1)
    "TRUNCATION": 40,
    "OVERSAMPLING": 4,
    "RESIDUAL_TOLERANCE": 1e-9,
    "RANK_CUTOFF": 1e-13,
    "RANK_DEFICIENCY_LIMIT": 0,
    "MAX_DERIVATIVE_ORDER": 6,
    "INTERFACE_MARGIN": 1e-3,
    "NESTING_MARGIN": 1e-3,
    # quasi-Newton construction
    "NEWTON_TOLERANCE": 1e-10,
    "NEWTON_MAX_ITERATIONS": 50,
    "STALL_RATIO": 0.9,
    "AMPLITUDE_CAP": 0.05,
    "MEAN_TOLERANCE": 1e-9,
    "JACOBIAN_STEP": 1e-6,
    # verification
    "MAX_VERIFIED_ORDER": 4,
    "DECOMPOSITION_OVERSAMPLING": 4,
    "WITNESS_TOLERANCE": 1e-7,
    # reports
    "CSV_DIGITS": 17,
}

INTEGER_SETTINGS = (
    "TRUNCATION",
    "OVERSAMPLING",
    "MAX_DERIVATIVE_ORDER",
    "NEWTON_MAX_ITERATIONS",
    "MAX_VERIFIED_ORDER",
    "DECOMPOSITION_OVERSAMPLING",
    "CSV_DIGITS",
)

# settings allowed to be zero
NON_NEGATIVE_SETTINGS = ("RANK_DEFICIENCY_LIMIT",)


def _coerce(attr: str, val):
    if attr in INTEGER_SETTINGS or attr in NON_NEGATIVE_SETTINGS:
        if isinstance(val, bool) or not isinstance(val, Integral):
            raise ConfigurationError(f"Setting '{attr}' must be an integer.")
        lower = 0 if attr in NON_NEGATIVE_SETTINGS else 1
        if val < lower:
            raise ConfigurationError(f"Setting '{attr}' must be at least {lower}.")
        return int(val)
    if isinstance(val, bool) or not isinstance(val, Real):
        raise ConfigurationError(f"Setting '{attr}' must be a number.")
    if not val > 0:
        raise ConfigurationError(f"Setting '{attr}' must be positive.")
    return float(val)


class SolverSettings:
    """
    Numerical settings shared by every operation.

    Values are looked up in the user settings first and fall back to
    :data:`DEFAULTS`. When no user settings are given they are read lazily
    from the JSON file named by the ``MULTIPHASE_TORSION_SETTINGS``
    environment variable.

    .. code-block:: python

        from multiphasetorsion.settings import solver_settings

        fine = solver_settings.with_overrides(TRUNCATION=48)
        fine.TRUNCATION  # 48
    """

    def __init__(self, user_settings=None, defaults=None):
        self._explicit_settings = (
            dict(user_settings) if user_settings is not None else None
        )
        self.defaults = defaults or DEFAULTS
        self._cached_attrs = set()

    @property
    def user_settings(self):
        if not hasattr(self, "_user_settings"):
            if self._explicit_settings is not None:
                self._user_settings = self._explicit_settings
            else:
                self._user_settings = self._load_environment_settings()
        return self._user_settings

    @staticmethod
    def _load_environment_settings():
        path = os.environ.get(SETTINGS_ENVIRONMENT_VARIABLE)
        if not path:
            return {}
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, ValueError) as e:
            raise ConfigurationError(
                f"Unable to read settings file '{path}': {e}"
            ) from e
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"Settings file '{path}' must hold an object.")
        logger.debug("Loaded %d settings from %s", len(loaded), path)
        return loaded

    def __getattr__(self, attr):
        if attr.startswith("_") or attr not in self.defaults:
            raise AttributeError("Invalid setting: '%s'" % attr)

        try:
            # Check if present in user settings
            val = self.user_settings[attr]
        except KeyError:
            # Fall back to defaults
            val = self.defaults[attr]

        val = _coerce(attr, val)

        # Cache the result
        self._cached_attrs.add(attr)
        setattr(self, attr, val)
        return val

    def with_overrides(self, **overrides) -> "SolverSettings":
        """
        Return a new settings object with the given values on top of these ones.
        """
        unknown = set(overrides) - set(self.defaults)
        if unknown:
            raise ConfigurationError(
                "Invalid setting(s): %s" % ", ".join(sorted(unknown))
            )
        merged = dict(self.user_settings)
        merged.update(overrides)
        return SolverSettings(merged, self.defaults)

    def validate(self) -> "SolverSettings":
        """
        Resolve every setting so that invalid values surface immediately.
        """
        for attr in self.defaults:
            getattr(self, attr)
        return self

    def as_dict(self):
        return {attr: getattr(self, attr) for attr in sorted(self.defaults)}

    def reload(self):
        for attr in self._cached_attrs:
            delattr(self, attr)
        self._cached_attrs.clear()
        if hasattr(self, "_user_settings"):
            delattr(self, "_user_settings")


solver_settings = SolverSettings(None, DEFAULTS)


def get_settings(settings=None) -> SolverSettings:
    if settings is None:
        return solver_settings
    return settings
