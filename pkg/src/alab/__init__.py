"""alab: a deterministic laboratory for pool-based active learning.

Query strategies (random, margin, entropy, least-confident, least-squares),
incremental/cumulative training of a small feed-forward classifier,
informativeness instrumentation, data-split schedules, random starts with
accuracy bounds, and gradual pseudo-labeling over the confident subset.
"""

from alab.errors import (
    AlabError,
    ConfigurationError,
    ContractViolation,
    DataError,
    DataFormatError,
    FetchError,
)

__version__ = "0.1.0"

__all__ = [
    "AlabError",
    "ConfigurationError",
    "ContractViolation",
    "DataError",
    "DataFormatError",
    "FetchError",
    "__version__",
]
