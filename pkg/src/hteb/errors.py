"""Exception types shared across the harness."""


class BenchmarkError(Exception):
    """Base class for all harness errors."""


class TransportError(BenchmarkError):
    """Network/HTTP failure that persisted through all retries."""


class ProtocolError(BenchmarkError):
    """Endpoint returned a response body we cannot interpret."""


class DimensionMismatch(BenchmarkError):
    """Embedding provider returned a ragged or miscounted vector batch."""


class EmptyPool(ValueError):
    """Language pool is empty after excluding the source language."""


class MissingPlaceholder(ValueError):
    """Prompt template lacks the {target_language} placeholder."""


class EmptyInput(ValueError):
    """Operation received an empty collection where items are required."""


class LengthMismatch(ValueError):
    """Paired sequences differ in length."""


class AllZero(ValueError):
    """Signed-rank test received only zero differences."""


class OutOfRange(ValueError):
    """A probability or weight is outside its legal range."""


class TooFew(ValueError):
    """Not enough observations for the requested statistic."""


class Degenerate(ValueError):
    """Constant or otherwise degenerate input makes the statistic undefined."""


class ZeroVector(ValueError):
    """Cosine similarity is undefined for a zero-norm vector."""


class InsufficientRaters(ValueError):
    """Agreement requires at least two raters on at least one item."""


class SingleClass(ValueError):
    """Binary metric requires both classes to be present."""


class EmptyCorpus(ValueError):
    """Retrieval evaluation requires a non-empty corpus."""


class NoPositives(ValueError):
    """Ranking metric requires at least one positive candidate."""


class LabelMismatch(ValueError):
    """Test labels must all appear in the training split."""


class TooFewModels(ValueError):
    """Cross-model statistic requires more models."""


class TooFewDatasets(ValueError):
    """Cross-dataset statistic requires more datasets."""


class MissingCondition(ValueError):
    """Aggregation requires every condition cell to be present."""


class ConfigError(BenchmarkError):
    """Benchmark configuration is invalid or incomplete."""
