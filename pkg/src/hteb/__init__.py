"""Dynamic robustness evaluation for text-embedding models.

Benchmark inputs are stochastically transformed at evaluation time along
three axes (lexical/stylistic, length, language), models are scored per
task on original and transformed data, and the score differences are
aggregated with a non-parametric statistical report.
"""

from . import aggregate, cache, config, datasets, gateway, langid, mock, qc, report, stats, taskeval, transforms

__version__ = "0.1.0"

__all__ = [
    "aggregate",
    "cache",
    "config",
    "datasets",
    "gateway",
    "langid",
    "mock",
    "qc",
    "report",
    "stats",
    "taskeval",
    "transforms",
    "__version__",
]
