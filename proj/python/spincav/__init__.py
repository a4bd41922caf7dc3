"""Python access to the spincav simulator core."""

import json

from . import _core
from ._core import ConfigError, SpincavError, __version__, git_blob_sha1, thermal_populations, zeeman_frequencies

__all__ = [
    "ConfigError",
    "SpincavError",
    "__version__",
    "fit_t1",
    "git_blob_sha1",
    "oracle_check",
    "preset",
    "presets",
    "raman_map",
    "resolve",
    "thermal_populations",
    "transmission_map",
    "zeeman_frequencies",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def presets():
    """Names and descriptions of the built-in presets."""
    return dict(_core.presets())


def preset(name):
    """Full config document of a preset."""
    return json.loads(_core.preset_json(name))


def resolve(config):
    """Config merged over its preset, as actually used by a run."""
    return json.loads(_core.resolve_config(_text(config)))


def transmission_map(config):
    """S21 over (field, drive). `values` has shape (len(axis2), len(axis1))."""
    return _core.transmission_map(_text(config))


def raman_map(config):
    return _core.raman_map(_text(config))


def fit_t1(times, splittings_hz, bootstrap=200, seed=7):
    return json.loads(_core.fit_t1(list(times), list(splittings_hz), bootstrap, seed))


def oracle_check(instances=5, seed=1):
    return json.loads(_core.oracle_check(instances, seed))
