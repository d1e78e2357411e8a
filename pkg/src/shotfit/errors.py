"""Exception hierarchy shared by all shotfit modules."""


class ShotfitError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(ShotfitError):
    """Input table is missing a required column or is otherwise malformed."""


class RowError(ShotfitError):
    """A specific data row could not be admitted."""

    def __init__(self, message, row=None, review_id=None):
        super().__init__(message)
        self.row = row
        self.review_id = review_id


class DuplicateIdError(ShotfitError):
    pass


class LabelError(ShotfitError):
    """Operation needs labels that are missing or too few distinct ones."""


class ConfigError(ShotfitError):
    pass


class FeatureError(ShotfitError):
    """Text produced no hashed features (empty after normalization)."""


class EmbeddingError(ShotfitError):
    pass


class ContainerError(ShotfitError):
    """Base class for model container read failures."""


class BadMagicError(ContainerError):
    pass


class UnsupportedVersionError(ContainerError):
    pass


class TruncatedContainerError(ContainerError):
    pass


class ArraySizeError(ContainerError):
    pass


class StageError(ShotfitError):
    """A pipeline stage failed; the message is prefixed with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
