"""Joint network / compute-in-memory hardware search.

Accuracy values produced here are PROXY values from a synthetic model of
parameter count; they say nothing about real ImageNet accuracy.
"""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    GenomeError,
    InfeasibleError,
    PredictError,
    WorkloadError,
    count_valid_configs as _count_valid_configs,
    cycle_reduction_at_iso_accuracy,
    fit_ridge,
    hypervolume,
    kendall_tau,
    mape,
    non_dominated_sort,
    pareto_front,
)

SETTINGS = (
    "elastic-arch-static-config",
    "static-arch-elastic-config",
    "elastic-arch-elastic-config",
)
FAMILIES = ("mbv3", "resnet50", "vit")

__all__ = [
    "FAMILIES", "SETTINGS", "ConfigError", "GenomeError", "InfeasibleError", "PredictError", "WorkloadError",
    "arch_space", "baseline", "compile_dataflow", "config_space", "count_params", "count_valid_configs",
    "cycle_reduction_at_iso_accuracy", "decode", "encode", "fit_ridge", "genome_schema", "hypervolume",
    "kendall_tau", "lower", "mape", "non_dominated_sort", "pareto_front", "proxy_accuracy", "run_experiment",
    "sample_config", "sample_subnet", "simulate", "simulate_layer", "static_config", "validate_config",
]


def _dump(value, keywords=()):
    # Strings in `keywords` ("canonical", "static", ...) pass through untouched.
    if isinstance(value, str) and value in keywords:
        return value
    if value is None:
        return ""
    return _json.dumps(value)


def _space(space):
    return "" if space is None else _json.dumps(space)


def arch_space(family):
    return _json.loads(_core.arch_space(family))


def config_space():
    return _json.loads(_core.config_space())


def sample_subnet(family, seed, space=None):
    return _json.loads(_core.sample_subnet(family, seed, _space(space)))


def lower(family, arch="canonical", space=None):
    return _json.loads(_core.lower(family, _dump(arch, ("canonical", "minimal", "maximal")), _space(space)))


def count_params(family, arch="canonical"):
    return _core.count_params(family, _dump(arch, ("canonical", "minimal", "maximal")))


def sample_config(seed, space=None):
    return _json.loads(_core.sample_config(seed, _space(space)))


def static_config(space=None):
    return _json.loads(_core.static_config(_space(space)))


def validate_config(config, space=None):
    """List of budget or ladder violations; empty when valid."""
    return _core.validate_config(_dump(config, ("static",)), _space(space))


def count_valid_configs(space=None):
    return _count_valid_configs(_space(space))


def compile_dataflow(layer, config="static", space=None):
    return _json.loads(_core.compile_dataflow(_json.dumps(layer), _dump(config, ("static",)), _space(space)))


def simulate_layer(layer, config="static", dataflow=None, space=None):
    return _json.loads(
        _core.simulate_layer(_json.dumps(layer), _dump(config, ("static",)), _dump(dataflow), _space(space)))


def simulate(family, arch="canonical", config="static", space=None):
    return _json.loads(
        _core.simulate(family, _dump(arch, ("canonical", "minimal", "maximal")), _dump(config, ("static",)),
                       _space(space)))


def proxy_accuracy(family, arch="canonical"):
    """PROXY accuracy of a sub-network (synthetic, not ImageNet)."""
    return _core.proxy_accuracy(family, _dump(arch, ("canonical", "minimal", "maximal")))


def encode(family, setting, arch="canonical", config="static"):
    return _core.encode(family, setting, _dump(arch, ("canonical", "minimal", "maximal")), _dump(config, ("static",)))


def decode(family, setting, genome):
    return _json.loads(_core.decode(family, setting, genome))


def genome_schema(family, setting):
    return _json.loads(_core.genome_schema(family, setting))


def baseline(family):
    """Canonical sub-network on the static configuration (accuracy is PROXY)."""
    return _json.loads(_core.baseline(family))


def run_experiment(config, base_dir="."):
    """Run an experiment dict; returns (exit_code, message, written_paths)."""
    return _core.run_experiment(_json.dumps(config), str(base_dir))
