"""Defect measures of high-frequency waves.

The numerical core is C++; this package exposes the solvers used by the
experiments (box operator, linear evolution, eikonal phase), the weak-limit
probes and the experiment harness (scenarios, runs, reports, field dumps).
"""

from ._blab import (
    BlabError,
    ConfigError,
    Metric,
    SpacetimeGrid,
    __version__,
    boosted_minkowski,
    box_apply,
    canonical_config,
    eikonal,
    evolve_linear,
    fit_loglog,
    minkowski,
    module_versions,
    named_metric,
    nullform_deviation,
    read_dump,
    report,
    run,
    scenarios,
)

__all__ = [
    "BlabError",
    "ConfigError",
    "Metric",
    "SpacetimeGrid",
    "__version__",
    "boosted_minkowski",
    "box_apply",
    "canonical_config",
    "eikonal",
    "evolve_linear",
    "fit_loglog",
    "minkowski",
    "module_versions",
    "named_metric",
    "nullform_deviation",
    "read_dump",
    "report",
    "run",
    "scenarios",
]
