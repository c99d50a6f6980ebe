"""Exception hierarchy shared across the toolkit."""


class WerfairError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(WerfairError):
    """Invalid or inconsistent input data."""


class MixedSchemaError(CorpusError):
    """A file mixes text records (ref/hyp) with count records (errors/words)."""


class UnknownGroupError(CorpusError):
    """A record carries a group label outside the declared factor levels."""


class MissingLevelError(CorpusError):
    """A declared factor level has no utterances."""


class NonNumericCovariateError(CorpusError):
    """A covariate value could not be parsed as a number."""


class SpeakerGroupConflictError(CorpusError):
    """The same speaker appears under two different group labels."""


class EmptyCorpusError(CorpusError):
    """Zero total reference words: empty corpus exposure."""


class ModelError(WerfairError):
    """Model construction or fitting failure."""


class NonIdentifiableDesignError(ModelError):
    """Rank-deficient design matrix."""


class ConvergenceError(ModelError):
    """Optimizer failed to converge; carries the last iterate when available."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class NonNestedModelError(ModelError):
    """LRT requested for models that are not nested."""


class DimensionMismatchError(ModelError):
    """Fitted model applied to an incompatible corpus or spec."""


class InfiniteRatioError(WerfairError):
    """Control group has zero errors; the WER ratio is unbounded."""
